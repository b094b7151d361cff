use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::CommitmentPoint;
use crate::error::{GridError, Result};
use crate::freq_dynamics::{
    frequency_metrics, system_base, AggregateParams, ConverterFleet, FrequencyLimits, SynchronousUnit,
};

/// Largest unit count accepted by exhaustive enumeration.
pub const ENUMERATION_LIMIT: usize = 25;

/// Per-unit contribution to the aggregates, already on the system base.
#[derive(Clone, Copy)]
struct Contribution {
    m: f64,
    r_g: f64,
    f_g: f64,
    d: f64,
}

struct Survivors {
    base: AggregateParams,
    contributions: Vec<Contribution>,
    delta_p: f64,
}

/// Size of the loss of `outage_unit`, in p.u. of the system base.
pub fn outage_size(units: &[SynchronousUnit], outage_unit: &str, fleet: &ConverterFleet) -> Result<f64> {
    let unit = units
        .iter()
        .find(|u| u.id == outage_unit)
        .ok_or_else(|| GridError::InvalidParameter(format!("unknown outage unit {outage_unit}")))?;
    let s_base = system_base(units, fleet);
    if !(s_base > 0.0) {
        return Err(GridError::NoResponseResources);
    }
    Ok(unit.p_max / s_base)
}

fn survivors(
    units: &[SynchronousUnit],
    outage_unit: &str,
    fleet: &ConverterFleet,
    t_turbine: f64,
) -> Result<Survivors> {
    let delta_p = outage_size(units, outage_unit, fleet)?;
    let s_base = system_base(units, fleet);
    let contributions = units
        .iter()
        .filter(|u| u.id != outage_unit)
        .map(|u| {
            let k = u.p_max * u.gain_k / s_base;
            Contribution {
                m: 2.0 * u.inertia_h * k,
                r_g: k / u.droop,
                f_g: u.turbine_fraction * k / u.droop,
                d: u.damping * u.p_max / s_base,
            }
        })
        .collect();
    let base = AggregateParams {
        m: 0.0,
        m_v: fleet.inertia_mws() / s_base,
        d: fleet.damping_mw() / s_base,
        r_g: 0.0,
        f_g: 0.0,
        t_turbine,
        s_base,
    };
    Ok(Survivors {
        base,
        contributions,
        delta_p,
    })
}

impl Survivors {
    fn point(&self, mask: u64, limits: &FrequencyLimits) -> Result<CommitmentPoint> {
        let mut agg = self.base;
        for (b, c) in self.contributions.iter().enumerate() {
            if mask >> b & 1 == 1 {
                agg.m += c.m;
                agg.r_g += c.r_g;
                agg.f_g += c.f_g;
                agg.d += c.d;
            }
        }
        let nadir_hz = if mask == 0 {
            f64::INFINITY
        } else {
            frequency_metrics(&agg, self.delta_p, limits)?.nadir_hz
        };
        Ok(CommitmentPoint {
            mask,
            m: agg.m_eff(),
            r_g: agg.r_g,
            f_g: agg.f_g,
            d: agg.d,
            delta_p: self.delta_p,
            nadir_hz,
            safe: mask != 0 && nadir_hz <= limits.nadir_lim,
        })
    }
}

/// Evaluate every on/off pattern of the units that survive the loss of
/// `outage_unit`, ordered by mask.
///
/// The pattern with every survivor offline is included with an infinite
/// nadir and is always unsafe.
pub fn enumerate_commitments(
    units: &[SynchronousUnit],
    outage_unit: &str,
    fleet: &ConverterFleet,
    limits: &FrequencyLimits,
    t_turbine: f64,
) -> Result<Vec<CommitmentPoint>> {
    if units.len() > ENUMERATION_LIMIT {
        return Err(GridError::TooManyUnits {
            units: units.len(),
            limit: ENUMERATION_LIMIT,
        });
    }
    let surv = survivors(units, outage_unit, fleet, t_turbine)?;
    let count = 1u64 << surv.contributions.len();
    (0..count).map(|mask| surv.point(mask, limits)).collect()
}

/// Monte-Carlo alternative to [`enumerate_commitments`] for fleets above the
/// enumeration limit: `samples` patterns drawn uniformly, sorted by mask and
/// deduplicated. Supports up to 64 survivors.
pub fn sample_commitments(
    units: &[SynchronousUnit],
    outage_unit: &str,
    fleet: &ConverterFleet,
    limits: &FrequencyLimits,
    t_turbine: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<CommitmentPoint>> {
    let surv = survivors(units, outage_unit, fleet, t_turbine)?;
    let n = surv.contributions.len();
    if n > 64 {
        return Err(GridError::InvalidParameter(
            "sampling supports at most 64 surviving units".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut masks: Vec<u64> = (0..samples)
        .map(|_| {
            let raw: u64 = rng.gen();
            if n == 64 {
                raw
            } else {
                raw & ((1u64 << n) - 1)
            }
        })
        .collect();
    masks.sort_unstable();
    masks.dedup();
    masks.into_iter().map(|mask| surv.point(mask, limits)).collect()
}
