//! Ceiling/floor counting of angles in units of pi with a snap tolerance.
//!
//! Values within `rtol * max(1, |t|)` of a multiple of pi are treated as that
//! multiple, so ties resolve deterministically.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const DEFAULT_SNAP_RTOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snap {
    pub rtol: f64,
}

impl Default for Snap {
    fn default() -> Self {
        Snap { rtol: DEFAULT_SNAP_RTOL }
    }
}

impl Snap {
    pub fn new(rtol: f64) -> Self {
        Snap { rtol }
    }

    /// Returns `Some(k)` when `t` is within tolerance of `k * pi`.
    pub fn multiple_of_pi(&self, t: f64) -> Option<i64> {
        let k = (t / PI).round();
        if (t - k * PI).abs() <= self.rtol * t.abs().max(1.0) {
            Some(k as i64)
        } else {
            None
        }
    }

    pub fn ceil_pi(&self, t: f64) -> i64 {
        match self.multiple_of_pi(t) {
            Some(k) => k,
            None => (t / PI).ceil() as i64,
        }
    }

    pub fn floor_pi(&self, t: f64) -> i64 {
        match self.multiple_of_pi(t) {
            Some(k) => k,
            None => (t / PI).floor() as i64,
        }
    }

    /// `ceil(t_x / pi) - floor(t_a / pi) - 1`, the zero-count functional shared
    /// by solution counts and relative counts.
    pub fn count(&self, t_a: f64, t_x: f64) -> i64 {
        self.ceil_pi(t_x) - self.floor_pi(t_a) - 1
    }
}
