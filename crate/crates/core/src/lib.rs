//! Radio-access-network slicing simulator and distributional Q-learning agents.
//!
//! The crate is organised around five pieces:
//!
//! - [`env`]: a packet-level simulation of one base station serving VoLTE,
//!   video and URLLC slices, scheduled round-robin per 0.5 ms slot.
//! - [`nn`]: a small reverse-mode differentiation engine and the generator,
//!   dueling generator and discriminator networks built on it.
//! - [`agents`]: GAN-DDQN, Dueling GAN-DDQN, DQN and hard slicing policies.
//! - [`dirac`]: the Dirac-WGAN-GP toy dynamics used to study how the
//!   adversarial fit reacts to a moving target.
//! - [`harness`]: experiment configuration, the train/evaluate loop,
//!   metrics CSVs and run comparison.

pub mod agents;
pub mod dirac;
pub mod env;
pub mod error;
pub mod harness;
pub mod nn;
pub mod rng;

pub use error::{Error, Result};
