use std::io::Write;

use super::AggregateParams;
use crate::error::{GridError, Result};

/// Default integration step, s.
pub const DEFAULT_DT_S: f64 = 1e-3;

const MIN_HORIZON_S: f64 = 20.0;

/// Sampled frequency deviation after a step disturbance.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTrace {
    pub t_s: Vec<f64>,
    pub delta_f_hz: Vec<f64>,
}

impl FrequencyTrace {
    /// Deepest excursion (most negative deviation), Hz, with its time.
    pub fn minimum(&self) -> (f64, f64) {
        self.t_s
            .iter()
            .zip(&self.delta_f_hz)
            .fold((0.0, 0.0), |best, (&t, &f)| if f < best.1 { (t, f) } else { best })
    }

    pub fn final_value(&self) -> f64 {
        *self.delta_f_hz.last().unwrap_or(&0.0)
    }

    /// Slope over the first integration step, Hz/s.
    pub fn initial_slope(&self) -> f64 {
        if self.t_s.len() < 2 {
            return 0.0;
        }
        (self.delta_f_hz[1] - self.delta_f_hz[0]) / (self.t_s[1] - self.t_s[0])
    }

    /// First time the sampled slope changes sign from falling to rising,
    /// located by bisection on the central-difference slope between samples.
    pub fn first_stationary_time(&self) -> Option<f64> {
        let n = self.t_s.len();
        if n < 3 {
            return None;
        }
        let slope = |k: usize| (self.delta_f_hz[k + 1] - self.delta_f_hz[k - 1]) / (self.t_s[k + 1] - self.t_s[k - 1]);
        (1..n - 2).find_map(|k| {
            let (a, b) = (slope(k), slope(k + 1));
            (a < 0.0 && b >= 0.0).then(|| {
                let w = a / (a - b);
                self.t_s[k] + w * (self.t_s[k + 1] - self.t_s[k])
            })
        })
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t_s,delta_f_hz")?;
        for (t, f) in self.t_s.iter().zip(&self.delta_f_hz) {
            writeln!(out, "{t},{f}")?;
        }
        Ok(())
    }
}

/// Integrate the second-order model for a step loss of `delta_p` p.u. using
/// fixed-step classical Runge-Kutta.
///
/// The realisation uses the state `(x, ẋ)` of 1/(s² + 2ζω_n s + ω_n²) driven
/// by -ΔP/(M T); the output is Δf = x + T ẋ, scaled to Hz by `f_base`.
pub fn simulate_step_response(
    agg: &AggregateParams,
    delta_p: f64,
    f_base: f64,
    horizon_s: f64,
    dt: f64,
) -> Result<FrequencyTrace> {
    if !(dt > 0.0) {
        return Err(GridError::InvalidParameter(format!(
            "time step must be positive, got {dt}"
        )));
    }
    if !(horizon_s >= MIN_HORIZON_S) {
        return Err(GridError::InvalidParameter(format!(
            "horizon must be at least {MIN_HORIZON_S} s, got {horizon_s}"
        )));
    }
    let m_eff = agg.m_eff();
    let t = agg.t_turbine;
    let mt = m_eff * t;
    let stiffness = agg.d + agg.r_g;
    if !(mt > 0.0) || !(stiffness > 0.0) {
        return Err(GridError::Unstable(format!(
            "nonpositive natural frequency squared (M T = {mt}, d + r_g = {stiffness})"
        )));
    }
    let omega2 = stiffness / mt;
    let two_zeta_omega = (m_eff + t * (agg.d + agg.f_g)) / mt;
    let forcing = -delta_p / mt;
    let accel = |x: f64, v: f64| forcing - two_zeta_omega * v - omega2 * x;

    let steps = (horizon_s / dt).round() as usize;
    let mut t_s = Vec::with_capacity(steps + 1);
    let mut delta_f_hz = Vec::with_capacity(steps + 1);
    let (mut x, mut v) = (0.0_f64, 0.0_f64);
    for k in 0..=steps {
        t_s.push(k as f64 * dt);
        delta_f_hz.push(f_base * (x + t * v));

        let (k1x, k1v) = (v, accel(x, v));
        let (k2x, k2v) = (v + 0.5 * dt * k1v, accel(x + 0.5 * dt * k1x, v + 0.5 * dt * k1v));
        let (k3x, k3v) = (v + 0.5 * dt * k2v, accel(x + 0.5 * dt * k2x, v + 0.5 * dt * k2v));
        let (k4x, k4v) = (v + dt * k3v, accel(x + dt * k3x, v + dt * k3v));
        x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    Ok(FrequencyTrace { t_s, delta_f_hz })
}
