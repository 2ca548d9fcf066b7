//! Joint policy/accelerator design space exploration for autonomous UAVs.
//!
//! The pipeline runs in two stages. A multi-objective Bayesian optimizer
//! ([`moo`]) searches the joint space of NN policy hyperparameters
//! ([`policy`]) and systolic-array configurations ([`perfmodel`],
//! [`powerweight`]). A cyber-physical mission model ([`f1model`]) then
//! picks the design that flies the most missions per battery charge.

pub mod error;
pub mod f1model;
pub mod moo;
pub mod perfmodel;
pub mod policy;
pub mod powerweight;
pub mod uavspec;

pub use error::{Error, Result};
