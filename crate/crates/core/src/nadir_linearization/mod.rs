//! Linear surrogates for the nonlinear nadir constraint.
//!
//! Two routes are provided:
//!
//! * **Bound extraction**: enumerate every on/off pattern of the units that
//!   survive an outage, evaluate the nadir for each, and pick a box
//!   `F_g ≥ F_lim, R_g ≥ R_lim, M ≥ M_lim` that contains no unsafe pattern.
//! * **Max-affine fitting**: fit `max_ν (a_ν R_g + b_ν F_g + c_ν M + d_ν)` to
//!   the nadir surface and add its epigraph to the MILP.
//!
//! Throughout this module `m` is the *effective* inertia (synchronous plus
//! virtual), which is the quantity the MILP rows constrain.

mod bench;
mod bounds;
mod enumerate;
mod pwl;

use serde::{Deserialize, Serialize};

pub use bench::{benchmark_linearizations, BenchmarkConfig, LinearizationTiming};
pub use bounds::{extract_bounds, extract_bounds_with, verify_bounds, BoundSearch, BoundsCheck};
pub use enumerate::{enumerate_commitments, outage_size, sample_commitments, ENUMERATION_LIMIT};
pub use pwl::{
    fit_max_affine, fit_pwl, nadir_grid, pwl_constraint_rows, Affine, FitOptions, MaxAffineFit, NadirGrid, PwlRow,
    PwlVar, RowSense,
};

/// One on/off pattern of the surviving units after an outage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommitmentPoint {
    /// Bit `b` set means the `b`-th surviving unit (in input order) is online.
    pub mask: u64,
    /// Effective inertia, p.u.·s.
    pub m: f64,
    pub r_g: f64,
    pub f_g: f64,
    /// Aggregate damping for this pattern.
    pub d: f64,
    /// Outage size this point was evaluated for, p.u.
    pub delta_p: f64,
    pub nadir_hz: f64,
    pub safe: bool,
}

/// `F_g ≥ f_lim`, `R_g ≥ r_lim`, `M + M_v ≥ m_lim` for a loss of `delta_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NadirBounds {
    pub delta_p: f64,
    pub f_lim: f64,
    pub r_lim: f64,
    pub m_lim: f64,
}

impl NadirBounds {
    pub fn admits(&self, m: f64, r_g: f64, f_g: f64) -> bool {
        f_g >= self.f_lim && r_g >= self.r_lim && m >= self.m_lim
    }
}

/// One affine piece `a·R_g + b·F_g + c·M + d` of the nadir surrogate (p.u.).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PwlSegment {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl PwlSegment {
    pub fn eval(&self, r_g: f64, f_g: f64, m: f64) -> f64 {
        self.a * r_g + self.b * f_g + self.c * m + self.d
    }
}

/// Max-affine surrogate of the nadir magnitude in p.u. of frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PwlFit {
    pub segments: Vec<PwlSegment>,
    /// Evaluation grid `(r_g, f_g, m)`; not serialised.
    #[serde(skip)]
    pub eval_points: Vec<[f64; 3]>,
    pub rmse: f64,
}

impl PwlFit {
    pub fn eval(&self, r_g: f64, f_g: f64, m: f64) -> f64 {
        self.segments
            .iter()
            .map(|s| s.eval(r_g, f_g, m))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}
