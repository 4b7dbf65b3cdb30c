//! Relative oscillation theory for Sturm–Liouville expressions.

pub mod classify;
pub mod coeffs;
pub mod count;
pub mod error;
pub mod kneser;
pub mod pruefer;
pub mod quad;
pub mod relosc;
pub mod spectra;
pub mod tail;

pub use error::{Error, Result};
