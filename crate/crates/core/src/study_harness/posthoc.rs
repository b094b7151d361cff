use serde::{Deserialize, Serialize};

use crate::error::{GridError, Result};
use crate::freq_dynamics::{
    aggregate_params, check_limits, frequency_metrics, simulate_step_response, system_base, FrequencyTrace, LimitGaps,
    DEFAULT_DT_S,
};
use crate::nadir_linearization::CommitmentPoint;
use crate::uc_core::{FreqMode, UcInstance, UcValues};

const TRACE_HORIZON_S: f64 = 20.0;

/// Gaps per hour of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintGapSeries {
    pub scenario: String,
    pub hours: Vec<LimitGaps>,
}

/// Re-evaluate the three metrics from the realised commitment and
/// availability of scenario `s`, using its loss at each hour.
pub fn posthoc_gaps(values: &UcValues, instance: &UcInstance, s: usize) -> Result<ConstraintGapSeries> {
    let sc = &instance.tree.scenarios[s];
    let hours = (0..instance.hours())
        .map(|t| {
            let agg = values.aggregate(instance, s, t)?;
            let metrics = frequency_metrics(&agg, sc.delta_p[t], &instance.limits)?;
            Ok(check_limits(&metrics, &instance.limits))
        })
        .collect::<Result<_>>()?;
    Ok(ConstraintGapSeries {
        scenario: sc.id.clone(),
        hours,
    })
}

/// Worst gaps at hour `t` if any of `outages` tripped then, whether or not
/// the tree models a loss at that hour.
pub fn outage_gaps(values: &UcValues, instance: &UcInstance, outages: &[String], t: usize) -> Result<LimitGaps> {
    let units = &instance.units;
    let s_base = system_base(units, &instance.fleet);
    let mut worst = LimitGaps {
        eta_nadir: -1.0,
        eta_rocof: -1.0,
        eta_ss: -1.0,
    };
    for id in outages {
        let k = units
            .iter()
            .position(|u| &u.id == id)
            .ok_or_else(|| GridError::InvalidParameter(format!("unknown outage unit {id}")))?;
        let online: Vec<bool> = (0..units.len()).map(|i| i != k && values.commitment[i][t]).collect();
        let agg = aggregate_params(units, &online, &instance.fleet, instance.t_turbine)?;
        let metrics = frequency_metrics(&agg, units[k].p_max / s_base, &instance.limits)?;
        worst = worst.max(check_limits(&metrics, &instance.limits));
    }
    Ok(worst)
}

/// Frequency deviation over 20 s after the loss modelled in scenario `s` at
/// hour `t`.
pub fn frequency_trace(values: &UcValues, instance: &UcInstance, s: usize, t: usize) -> Result<FrequencyTrace> {
    let dp = instance.tree.scenarios[s].delta_p[t];
    if !(dp > 0.0) {
        return Err(GridError::InvalidParameter(format!(
            "scenario {} has no disturbance at hour {t}",
            instance.tree.scenarios[s].id
        )));
    }
    let agg = values.aggregate(instance, s, t)?;
    simulate_step_response(&agg, dp, instance.limits.f_base, TRACE_HORIZON_S, DEFAULT_DT_S)
}

/// Confirm that every realised post-contingency aggregate is one of the
/// enumerated points and, if the bounds admit it, a safe one. Returns the
/// number of scenario-hours checked.
pub fn check_membership(
    values: &UcValues,
    instance: &UcInstance,
    clouds: &[(String, Vec<CommitmentPoint>)],
) -> Result<usize> {
    let FreqMode::Bounds { bounds } = &instance.freq else {
        return Ok(0);
    };
    let mut checked = 0;
    for (s, sc) in instance.tree.scenarios.iter().enumerate() {
        let Some(outage) = &sc.outage else { continue };
        let (_, cloud) = clouds
            .iter()
            .find(|(id, _)| id == outage)
            .ok_or_else(|| GridError::Instance(format!("no enumerated points for {outage}")))?;
        for t in (0..instance.hours()).filter(|&t| sc.delta_p[t] > 0.0) {
            let mut mask = 0u64;
            let mut bit = 0;
            for (i, u) in instance.units.iter().enumerate() {
                if &u.id == outage {
                    continue;
                }
                if values.commitment[i][t] && sc.availability[i][t] {
                    mask |= 1 << bit;
                }
                bit += 1;
            }
            let point = cloud
                .get(mask as usize)
                .filter(|p| p.mask == mask)
                .ok_or_else(|| GridError::Instance(format!("pattern {mask:#b} not enumerated for {outage}")))?;
            let agg = values.aggregate(instance, s, t)?;
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(1.0);
            if !(close(point.m, agg.m_eff()) && close(point.r_g, agg.r_g) && close(point.f_g, agg.f_g)) {
                return Err(GridError::Instance(format!(
                    "aggregate of {} at hour {t} differs from its enumerated point",
                    sc.id
                )));
            }
            let b = &bounds[outage];
            if b.admits(point.m, point.r_g, point.f_g) && !point.safe {
                return Err(GridError::Instance(format!(
                    "bounds admitted an unsafe pattern in {} at hour {t}",
                    sc.id
                )));
            }
            checked += 1;
        }
    }
    Ok(checked)
}
