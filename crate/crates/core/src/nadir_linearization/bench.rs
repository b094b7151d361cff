use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{enumerate_commitments, extract_bounds_with, nadir_grid, BoundSearch, FitOptions, NadirBounds, PwlFit};
use crate::error::Result;
use crate::freq_dynamics::{ConverterFleet, FrequencyLimits, SynchronousUnit};

/// Settings for [`benchmark_linearizations`].
///
/// `grid_stride` is the evaluation-grid density: every `grid_stride`-th
/// enumerated pattern is a fitting point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub low_segments: usize,
    pub high_segments: usize,
    pub grid_stride: usize,
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    pub search: BoundSearch,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            low_segments: 3,
            high_segments: 4,
            grid_stride: 4,
            restarts: 20,
            max_iters: 100,
            seed: 0,
            search: BoundSearch::default(),
        }
    }
}

/// Wall-clock seconds per method, with the artefacts each produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearizationTiming {
    pub points: usize,
    pub grid_points: usize,
    pub bounds_s: f64,
    pub pwl_low_s: f64,
    pub pwl_high_s: f64,
    pub bounds: NadirBounds,
    pub pwl_low: PwlFit,
    pub pwl_high: PwlFit,
}

/// Time bound extraction against PWL fitting at two segment counts.
///
/// Every method starts from enumeration. The high-segment fit is nested:
/// it is warm-started from a fresh low-segment fit, and its time includes
/// that fit.
pub fn benchmark_linearizations(
    units: &[SynchronousUnit],
    outage_unit: &str,
    fleet: &ConverterFleet,
    limits: &FrequencyLimits,
    t_turbine: f64,
    config: &BenchmarkConfig,
) -> Result<LinearizationTiming> {
    let opts = |n_segments| FitOptions {
        n_segments,
        restarts: config.restarts,
        max_iters: config.max_iters,
        seed: config.seed,
    };

    let start = Instant::now();
    let points = enumerate_commitments(units, outage_unit, fleet, limits, t_turbine)?;
    let bounds = extract_bounds_with(&points, limits, &config.search)?;
    let bounds_s = start.elapsed().as_secs_f64();
    let n_points = points.len();
    drop(points);

    let start = Instant::now();
    let points = enumerate_commitments(units, outage_unit, fleet, limits, t_turbine)?;
    let grid = nadir_grid(&points, config.grid_stride, t_turbine)?;
    let pwl_low = grid.fit(&opts(config.low_segments), None)?;
    let pwl_low_s = start.elapsed().as_secs_f64();
    drop(points);

    let start = Instant::now();
    let points = enumerate_commitments(units, outage_unit, fleet, limits, t_turbine)?;
    let grid = nadir_grid(&points, config.grid_stride, t_turbine)?;
    let warm = grid.fit(&opts(config.low_segments), None)?;
    let pwl_high = grid.fit(&opts(config.high_segments), Some(&warm))?;
    let pwl_high_s = start.elapsed().as_secs_f64();

    Ok(LinearizationTiming {
        points: n_points,
        grid_points: grid.points.len(),
        bounds_s,
        pwl_low_s,
        pwl_high_s,
        bounds,
        pwl_low,
        pwl_high,
    })
}
