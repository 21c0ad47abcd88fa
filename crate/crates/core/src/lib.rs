//! Tabular robust MDPs with transition kernels estimated from scarce target
//! samples plus side information linking them to a source domain.

pub mod datagen;
pub mod envs;
pub mod error;
pub mod estimate;
mod lp;
pub mod mdp;
pub mod robust;

pub use error::{Error, Result};
