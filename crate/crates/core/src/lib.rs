pub mod approx;
pub mod config;
pub mod dct;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod halfplane;
pub mod harness;
pub mod linalg;
pub mod linode;
pub mod numerics;
pub mod operator1d;
pub mod pdesolver;
pub mod potentials;
pub mod profile;
pub mod report;
pub mod spectral;

pub use error::{Result, SilError};
