use super::AggregateParams;
use crate::error::{GridError, Result};

#[derive(Debug, Clone, Copy)]
enum Poles {
    /// σ ± jω_d
    Complex { sigma: f64, omega_d: f64 },
    /// Double pole at -ω_n.
    Repeated,
    /// p_fast < p_slow < 0
    Real { p_slow: f64, p_fast: f64 },
}

/// Closed-form step response of the uniform frequency model.
///
/// Δf(t) = -ΔP/(M T) · (g(t) + T h(t)), where `h` is the impulse response and
/// `g` the step response of 1/(s² + 2ζω_n s + ω_n²).
#[derive(Debug, Clone, Copy)]
pub struct StepResponse {
    gain: f64,
    omega_n: f64,
    t_turbine: f64,
    poles: Poles,
}

impl StepResponse {
    pub fn new(agg: &AggregateParams, delta_p: f64) -> Result<Self> {
        let m_eff = agg.m_eff();
        let t = agg.t_turbine;
        let stiffness = agg.d + agg.r_g;
        if !(m_eff > 0.0 && t > 0.0 && stiffness > 0.0) {
            return Err(GridError::Unstable("nonpositive natural frequency squared".into()));
        }
        let omega_n = (stiffness / (m_eff * t)).sqrt();
        let sigma = (m_eff + t * (agg.d + agg.f_g)) / (2.0 * m_eff * t);
        let zeta = sigma / omega_n;
        let poles = if (zeta - 1.0).abs() <= super::CRITICAL_DAMPING_BAND {
            Poles::Repeated
        } else if zeta < 1.0 {
            Poles::Complex {
                sigma,
                omega_d: omega_n * (1.0 - zeta * zeta).sqrt(),
            }
        } else {
            let root = (sigma * sigma - omega_n * omega_n).sqrt();
            Poles::Real {
                p_slow: -sigma + root,
                p_fast: -sigma - root,
            }
        };
        Ok(Self {
            gain: -delta_p / (m_eff * t),
            omega_n,
            t_turbine: t,
            poles,
        })
    }

    fn impulse(&self, t: f64) -> f64 {
        match self.poles {
            Poles::Complex { sigma, omega_d } => (-sigma * t).exp() * (omega_d * t).sin() / omega_d,
            Poles::Repeated => t * (-self.omega_n * t).exp(),
            Poles::Real { p_slow, p_fast } => ((p_slow * t).exp() - (p_fast * t).exp()) / (p_slow - p_fast),
        }
    }

    fn impulse_rate(&self, t: f64) -> f64 {
        match self.poles {
            Poles::Complex { sigma, omega_d } => {
                (-sigma * t).exp() * ((omega_d * t).cos() - sigma / omega_d * (omega_d * t).sin())
            }
            Poles::Repeated => (-self.omega_n * t).exp() * (1.0 - self.omega_n * t),
            Poles::Real { p_slow, p_fast } => {
                (p_slow * (p_slow * t).exp() - p_fast * (p_fast * t).exp()) / (p_slow - p_fast)
            }
        }
    }

    fn step(&self, t: f64) -> f64 {
        let w2 = self.omega_n * self.omega_n;
        match self.poles {
            Poles::Complex { sigma, omega_d } => {
                (1.0 - (-sigma * t).exp() * ((omega_d * t).cos() + sigma / omega_d * (omega_d * t).sin())) / w2
            }
            Poles::Repeated => {
                let wt = self.omega_n * t;
                (1.0 - (-wt).exp() * (1.0 + wt)) / w2
            }
            Poles::Real { p_slow, p_fast } => {
                (1.0 + (p_fast * (p_slow * t).exp() - p_slow * (p_fast * t).exp()) / (p_slow - p_fast)) / w2
            }
        }
    }

    /// Frequency deviation in p.u. at time `t` after the step.
    pub fn deviation(&self, t: f64) -> f64 {
        self.gain * (self.step(t) + self.t_turbine * self.impulse(t))
    }

    /// Time derivative of the deviation, p.u./s.
    pub fn rate(&self, t: f64) -> f64 {
        self.gain * (self.impulse(t) + self.t_turbine * self.impulse_rate(t))
    }

    /// First positive time at which the deviation is stationary, if any.
    pub fn first_stationary_point(&self) -> Option<f64> {
        let tt = self.t_turbine;
        match self.poles {
            Poles::Complex { sigma, omega_d } => Some((tt * omega_d).atan2(tt * sigma - 1.0) / omega_d),
            Poles::Repeated => {
                let denom = tt * self.omega_n - 1.0;
                (denom > 0.0).then(|| tt / denom)
            }
            Poles::Real { p_slow, p_fast } => {
                let slow = 1.0 + tt * p_slow;
                let fast = 1.0 + tt * p_fast;
                (slow < 0.0).then(|| (fast / slow).ln() / (p_slow - p_fast))
            }
        }
    }
}
