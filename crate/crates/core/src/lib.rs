//! Exact semilinear algebra for Frobenius modules of bounded height over
//! truncated power series rings, in mixed and equal characteristic.

pub mod base;
pub mod breuil;
pub mod cli;
pub mod deform;
pub mod error;
pub mod moduli;
pub mod phimod;
pub mod prolong;
pub mod shtuka;

pub use error::{Error, Result};
