//! Physics-informed neural network solver for 2D incompressible
//! Navier-Stokes flow in a mixed variable formulation, with optional domain
//! decomposition and weighted interface and flux coupling terms.
//!
//! The crate is organized along the training pipeline:
//!
//! * [`net`]: dense tanh networks, exact input derivatives via jet
//!   propagation, reverse-mode parameter gradients, text checkpoints.
//! * [`geometry`]: flow domains, Latin hypercube sampling, collocation set
//!   generation, subdomain partitioning.
//! * [`physics`]: governing, boundary, interface and flux residuals and the
//!   weighted loss.
//! * [`optim`]: Adam, L-BFGS with a Hager-Zhang line search, and the
//!   two-phase training driver.
//! * [`trainer`]: experiment configuration, the joint multi-network
//!   objective, prediction and parameter sweeps.
//! * [`report`]: CSV and text table writers for everything the CLI emits.

pub mod error;
pub mod fd;
pub mod geometry;
pub mod net;
pub mod optim;
pub mod physics;
pub mod report;
pub mod trainer;

pub use error::{Error, Result};
