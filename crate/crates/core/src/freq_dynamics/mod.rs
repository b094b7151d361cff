//! Uniform (centre-of-inertia) frequency model of a mixed synchronous and
//! converter-based system.
//!
//! Unit and converter parameters are aggregated into a second-order model
//!
//! ```text
//!            1        1 + sT
//! G(s) = ------- · ----------------------
//!         M T      s² + 2ζω_n s + ω_n²
//! ```
//!
//! driven by a step loss of `ΔP` p.u. The three security metrics (nadir,
//! RoCoF, quasi-steady-state deviation) follow in closed form.

mod response;
mod simulate;

use serde::{Deserialize, Serialize};

use crate::error::{GridError, Result};

pub use response::StepResponse;
pub use simulate::{simulate_step_response, FrequencyTrace, DEFAULT_DT_S};

/// Below this, ζ is treated as exactly one (repeated real poles).
const CRITICAL_DAMPING_BAND: f64 = 1e-9;

/// A conventional (synchronous) generating unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynchronousUnit {
    pub id: String,
    pub bus: String,
    /// Rated capacity, MW.
    pub p_max: f64,
    /// Technical minimum, MW.
    pub p_min: f64,
    /// Energy offer, $/MWh.
    pub cost_energy: f64,
    pub cost_startup: f64,
    pub cost_shutdown: f64,
    /// Reserve deployment offers, $/MWh.
    pub cost_res_up: f64,
    pub cost_res_down: f64,
    /// Reserve capacity offers, MW.
    pub res_up_cap: f64,
    pub res_down_cap: f64,
    /// Ramp limits, MW/h.
    pub ramp_up: f64,
    pub ramp_down: f64,
    /// Minimum up and down times, hours.
    pub min_up: usize,
    pub min_down: usize,
    /// Inertia constant H, s.
    pub inertia_h: f64,
    /// Mechanical power gain K, p.u.
    pub gain_k: f64,
    /// High-pressure turbine fraction F, p.u.
    pub turbine_fraction: f64,
    /// Governor droop R, p.u.
    pub droop: f64,
    /// Damping D, p.u.
    pub damping: f64,
    /// Mean time to failure, hours.
    pub mttf: f64,
}

impl SynchronousUnit {
    pub fn validate(&self) -> Result<()> {
        let fail = |what: &str| Err(GridError::InvalidParameter(format!("unit {}: {}", self.id, what)));
        let finite = [
            self.p_max,
            self.p_min,
            self.cost_energy,
            self.cost_startup,
            self.cost_shutdown,
            self.cost_res_up,
            self.cost_res_down,
            self.res_up_cap,
            self.res_down_cap,
            self.ramp_up,
            self.ramp_down,
            self.inertia_h,
            self.gain_k,
            self.turbine_fraction,
            self.droop,
            self.damping,
            self.mttf,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return fail("all parameters must be finite");
        }
        if self.p_min < 0.0 || self.p_min > self.p_max {
            return fail("requires 0 <= p_min <= p_max");
        }
        if self.droop <= 0.0 {
            return fail("droop must be positive");
        }
        if !(0.0..=1.0).contains(&self.turbine_fraction) {
            return fail("turbine_fraction must lie in [0, 1]");
        }
        if self.inertia_h <= 0.0 {
            return fail("inertia_h must be positive");
        }
        if self.min_up < 1 || self.min_down < 1 {
            return fail("min_up and min_down must be at least one hour");
        }
        let costs = [
            self.cost_energy,
            self.cost_startup,
            self.cost_shutdown,
            self.cost_res_up,
            self.cost_res_down,
        ];
        if costs.iter().any(|&c| c < 0.0) {
            return fail("costs must be nonnegative");
        }
        if self.res_up_cap < 0.0 || self.res_down_cap < 0.0 {
            return fail("reserve capacities must be nonnegative");
        }
        if self.ramp_up < 0.0 || self.ramp_down < 0.0 {
            return fail("ramp limits must be nonnegative");
        }
        if self.gain_k < 0.0 || self.damping < 0.0 {
            return fail("gain_k and damping must be nonnegative");
        }
        if self.mttf <= 0.0 {
            return fail("mttf must be positive");
        }
        Ok(())
    }
}

/// Aggregate grid-forming converter capability (VSM and droop-controlled).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConverterFleet {
    /// VSM capacity W_v, MW.
    pub vsm_capacity: f64,
    /// Droop-controlled capacity W_d, MW.
    pub droop_capacity: f64,
    /// Virtual inertia constant of VSM units, s.
    pub vsm_inertia_h: f64,
    pub vsm_damping: f64,
    pub vsm_gain: f64,
    pub droop_gain: f64,
    pub droop_droop: f64,
    /// Converter time constant. The model assumes it is negligible next to
    /// the turbine time constant, so it only appears here for bookkeeping.
    #[serde(default)]
    pub converter_time_const: f64,
}

impl ConverterFleet {
    /// A fleet with no converter capacity.
    pub fn none() -> Self {
        Self {
            vsm_capacity: 0.0,
            droop_capacity: 0.0,
            vsm_inertia_h: 0.0,
            vsm_damping: 0.0,
            vsm_gain: 0.0,
            droop_gain: 0.0,
            droop_droop: 1.0,
            converter_time_const: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.vsm_capacity < 0.0 || self.droop_capacity < 0.0 {
            return Err(GridError::InvalidParameter(
                "converter capacities must be nonnegative".into(),
            ));
        }
        if self.droop_droop <= 0.0 {
            return Err(GridError::InvalidParameter(
                "converter droop_droop must be positive".into(),
            ));
        }
        if self.vsm_inertia_h < 0.0 || self.vsm_damping < 0.0 || self.vsm_gain < 0.0 {
            return Err(GridError::InvalidParameter("VSM parameters must be nonnegative".into()));
        }
        Ok(())
    }

    /// Damping contributed by converters, in MW-weighted p.u. (divide by the
    /// system base to get p.u.).
    pub fn damping_mw(&self) -> f64 {
        self.vsm_damping * self.vsm_capacity + self.droop_gain / self.droop_droop * self.droop_capacity
    }

    /// Virtual inertia in MW·s (divide by the system base).
    pub fn inertia_mws(&self) -> f64 {
        2.0 * self.vsm_inertia_h * self.vsm_gain * self.vsm_capacity
    }
}

/// System base power: rated synchronous capacity plus converter capacity.
pub fn system_base(units: &[SynchronousUnit], fleet: &ConverterFleet) -> f64 {
    units.iter().map(|u| u.p_max).sum::<f64>() + fleet.vsm_capacity + fleet.droop_capacity
}

/// System-level parameters of the uniform frequency model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateParams {
    /// Synchronous inertia M, p.u.·s.
    pub m: f64,
    /// VSM virtual inertia M_v, p.u.·s.
    pub m_v: f64,
    /// Aggregate damping D, p.u.
    pub d: f64,
    /// Aggregate inverse droop R_g, p.u.
    pub r_g: f64,
    /// Aggregate high-pressure fraction F_g, p.u.
    pub f_g: f64,
    /// Turbine time constant T, s.
    pub t_turbine: f64,
    /// System base, MVA.
    pub s_base: f64,
}

impl AggregateParams {
    /// Inertia seen by the frequency model: synchronous plus virtual.
    pub fn m_eff(&self) -> f64 {
        self.m + self.m_v
    }
}

/// Aggregate the online units and the converter fleet on the full-system base.
///
/// `online[i]` says whether `units[i]` contributes. Converter terms are
/// always present; damping of synchronous machines counts only when online.
pub fn aggregate_params(
    units: &[SynchronousUnit],
    online: &[bool],
    fleet: &ConverterFleet,
    t_turbine: f64,
) -> Result<AggregateParams> {
    if online.len() != units.len() {
        return Err(GridError::InvalidParameter(format!(
            "online mask has {} entries for {} units",
            online.len(),
            units.len()
        )));
    }
    if !(t_turbine > 0.0) {
        return Err(GridError::InvalidParameter(
            "turbine time constant must be positive".into(),
        ));
    }
    let s_base = system_base(units, fleet);
    if !(s_base > 0.0) {
        return Err(GridError::NoResponseResources);
    }

    let mut agg = AggregateParams {
        m: 0.0,
        m_v: fleet.inertia_mws() / s_base,
        d: fleet.damping_mw() / s_base,
        r_g: 0.0,
        f_g: 0.0,
        t_turbine,
        s_base,
    };
    for (unit, _) in units.iter().zip(online).filter(|(_, &on)| on) {
        let k = unit.p_max * unit.gain_k / s_base;
        agg.m += 2.0 * unit.inertia_h * k;
        agg.r_g += k / unit.droop;
        agg.f_g += unit.turbine_fraction * k / unit.droop;
        agg.d += unit.damping * unit.p_max / s_base;
    }
    Ok(agg)
}

/// Natural frequency, damping ratio and time of the nadir.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderChar {
    pub omega_n: f64,
    pub zeta: f64,
    /// Damped frequency; only defined when ζ < 1.
    pub omega_d: Option<f64>,
    /// First positive stationary point of the step response. `None` when the
    /// response never overshoots its final value.
    pub t_nadir: Option<f64>,
    /// ζ ≥ 1: the oscillatory nadir expression does not apply.
    pub overdamped: bool,
}

pub fn second_order_char(agg: &AggregateParams) -> Result<SecondOrderChar> {
    let m_eff = agg.m_eff();
    let t = agg.t_turbine;
    let stiffness = agg.d + agg.r_g;
    if !(m_eff > 0.0) {
        return Err(GridError::Unstable(format!(
            "effective inertia must be positive, got {m_eff}"
        )));
    }
    if !(stiffness > 0.0) || !(t > 0.0) {
        return Err(GridError::Unstable(format!(
            "nonpositive natural frequency squared (d + r_g = {stiffness}, T = {t})"
        )));
    }
    let omega_n = (stiffness / (m_eff * t)).sqrt();
    let zeta = (m_eff + t * (agg.d + agg.f_g)) / (2.0 * (m_eff * t * stiffness).sqrt());

    if zeta < 1.0 - CRITICAL_DAMPING_BAND {
        let omega_d = omega_n * (1.0 - zeta * zeta).sqrt();
        let sigma = zeta * omega_n;
        // dΔf/dt ∝ (1 - Tσ) sin(ω_d t) + T ω_d cos(ω_d t); first root in (0, π/ω_d).
        let t_nadir = (t * omega_d).atan2(t * sigma - 1.0) / omega_d;
        Ok(SecondOrderChar {
            omega_n,
            zeta,
            omega_d: Some(omega_d),
            t_nadir: Some(t_nadir),
            overdamped: false,
        })
    } else {
        let response = StepResponse::new(agg, 1.0)?;
        Ok(SecondOrderChar {
            omega_n,
            zeta,
            omega_d: None,
            t_nadir: response.first_stationary_point(),
            overdamped: true,
        })
    }
}

/// Nadir, RoCoF and steady-state deviation magnitudes in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyMetrics {
    pub nadir_hz: f64,
    pub rocof_hz_s: f64,
    pub ss_dev_hz: f64,
}

/// Operational frequency thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyLimits {
    pub f_base: f64,
    pub nadir_lim: f64,
    pub rocof_lim: f64,
    pub ss_lim: f64,
}

impl Default for FrequencyLimits {
    /// ENTSO-E thresholds on a 50 Hz base.
    fn default() -> Self {
        Self {
            f_base: 50.0,
            nadir_lim: 0.4,
            rocof_lim: 0.5,
            ss_lim: 0.2,
        }
    }
}

impl FrequencyLimits {
    pub fn validate(&self) -> Result<()> {
        let all = [self.f_base, self.nadir_lim, self.rocof_lim, self.ss_lim];
        if all.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(GridError::InvalidParameter("frequency limits must be positive".into()))
        }
    }
}

/// Nadir magnitude in p.u. of frequency for a loss of `delta_p` p.u.
pub fn nadir_pu(agg: &AggregateParams, delta_p: f64) -> Result<f64> {
    if delta_p == 0.0 {
        return Ok(0.0);
    }
    if agg.r_g < agg.f_g {
        return Err(GridError::NadirExpressionInvalid {
            r_g: agg.r_g,
            f_g: agg.f_g,
        });
    }
    let chr = second_order_char(agg)?;
    let stiffness = agg.d + agg.r_g;
    if chr.overdamped {
        let response = StepResponse::new(agg, delta_p)?;
        return Ok(match chr.t_nadir {
            Some(tm) => response.deviation(tm).abs(),
            None => delta_p / stiffness,
        });
    }
    let t_nadir = chr.t_nadir.expect("underdamped response has a nadir");
    let overshoot =
        (agg.t_turbine * (agg.r_g - agg.f_g) / agg.m_eff()).sqrt() * (-chr.zeta * chr.omega_n * t_nadir).exp();
    Ok(delta_p / stiffness * (1.0 + overshoot))
}

/// Evaluate the three frequency metrics for a step loss of `delta_p` p.u.
pub fn frequency_metrics(agg: &AggregateParams, delta_p: f64, limits: &FrequencyLimits) -> Result<FrequencyMetrics> {
    if !(delta_p >= 0.0) {
        return Err(GridError::InvalidParameter(format!(
            "disturbance must be nonnegative, got {delta_p}"
        )));
    }
    if delta_p == 0.0 {
        return Ok(FrequencyMetrics {
            nadir_hz: 0.0,
            rocof_hz_s: 0.0,
            ss_dev_hz: 0.0,
        });
    }
    let stiffness = agg.d + agg.r_g;
    if !(stiffness > 0.0) {
        return Err(GridError::Unstable(format!(
            "d + r_g must be positive, got {stiffness}"
        )));
    }
    if !(agg.m_eff() > 0.0) {
        return Err(GridError::Unstable("effective inertia is zero".into()));
    }
    let fb = limits.f_base;
    Ok(FrequencyMetrics {
        nadir_hz: fb * nadir_pu(agg, delta_p)?,
        rocof_hz_s: fb * delta_p / agg.m_eff(),
        ss_dev_hz: fb * delta_p / stiffness,
    })
}

/// Relative distance of each metric to its limit; `η ≤ 0` means satisfied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitGaps {
    pub eta_nadir: f64,
    pub eta_rocof: f64,
    pub eta_ss: f64,
}

impl LimitGaps {
    pub fn nadir_ok(&self) -> bool {
        self.eta_nadir <= 0.0
    }

    pub fn rocof_ok(&self) -> bool {
        self.eta_rocof <= 0.0
    }

    pub fn ss_ok(&self) -> bool {
        self.eta_ss <= 0.0
    }

    pub fn all_ok(&self) -> bool {
        self.nadir_ok() && self.rocof_ok() && self.ss_ok()
    }

    /// The largest of the three gaps.
    pub fn worst(&self) -> f64 {
        self.eta_nadir.max(self.eta_rocof).max(self.eta_ss)
    }

    /// Elementwise maximum, used to fold gaps across scenarios.
    pub fn max(self, other: LimitGaps) -> LimitGaps {
        LimitGaps {
            eta_nadir: self.eta_nadir.max(other.eta_nadir),
            eta_rocof: self.eta_rocof.max(other.eta_rocof),
            eta_ss: self.eta_ss.max(other.eta_ss),
        }
    }
}

pub fn check_limits(metrics: &FrequencyMetrics, limits: &FrequencyLimits) -> LimitGaps {
    LimitGaps {
        eta_nadir: metrics.nadir_hz / limits.nadir_lim - 1.0,
        eta_rocof: metrics.rocof_hz_s / limits.rocof_lim - 1.0,
        eta_ss: metrics.ss_dev_hz / limits.ss_lim - 1.0,
    }
}

#[cfg(test)]
mod tests;
