//! Implicit-neural video GAN laboratory.
//!
//! Videos are modeled as coordinate networks with a space/time-decomposed
//! first layer; a content latent drives a weight-modulating hypernetwork and
//! a motion latent drives the time direction. Training pits the decoded
//! frames against an image discriminator and a frame-pair motion
//! discriminator. Everything runs at desk scale on synthetic datasets.

pub mod ablation;
pub mod autodiff;
pub mod clip;
pub mod config;
pub mod coords;
pub mod data;
pub mod discriminator;
pub mod error;
pub mod generator;
pub mod inference;
pub mod inr;
pub mod metrics;
pub mod nn;
pub mod rng;
pub mod training;

pub use error::{Error, Result};
