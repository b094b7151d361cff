//! Deterministic synthetic fleets built from the three thermal plant types.

use serde::{Deserialize, Serialize};

use crate::freq_dynamics::{ConverterFleet, SynchronousUnit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlantType {
    Nuclear,
    Ccgt,
    Ocgt,
}

impl PlantType {
    /// `(H, K, F, R, D)`
    pub fn dynamics(self) -> (f64, f64, f64, f64, f64) {
        match self {
            PlantType::Nuclear => (4.5, 0.98, 0.25, 0.04, 0.6),
            PlantType::Ccgt => (7.0, 1.1, 0.15, 0.01, 0.6),
            PlantType::Ocgt => (5.5, 0.95, 0.35, 0.03, 0.6),
        }
    }

    /// `(p_min share, energy $/MWh, startup $, min up/down h)`
    fn economics(self) -> (f64, f64, f64, usize) {
        match self {
            PlantType::Nuclear => (0.5, 8.0, 40_000.0, 4),
            PlantType::Ccgt => (0.4, 35.0, 12_000.0, 2),
            PlantType::Ocgt => (0.2, 70.0, 2_000.0, 1),
        }
    }
}

/// One unit of the given type, sized `p_max` MW, at `bus`.
pub fn make_unit(id: &str, bus: &str, kind: PlantType, p_max: f64) -> SynchronousUnit {
    let (h, k, f, r, d) = kind.dynamics();
    let (min_share, energy, startup, min_time) = kind.economics();
    SynchronousUnit {
        id: id.into(),
        bus: bus.into(),
        p_max,
        p_min: min_share * p_max,
        cost_energy: energy,
        cost_startup: startup * p_max / 400.0,
        cost_shutdown: 0.0,
        cost_res_up: energy + 5.0,
        cost_res_down: 0.1 * energy,
        res_up_cap: 0.5 * p_max,
        res_down_cap: 0.5 * p_max,
        ramp_up: 0.6 * p_max,
        ramp_down: 0.6 * p_max,
        min_up: min_time,
        min_down: min_time,
        inertia_h: h,
        gain_k: k,
        turbine_fraction: f,
        droop: r,
        damping: d,
        mttf: 1000.0,
    }
}

/// `n` units cycling nuclear, CCGT, OCGT with sizes spread over 50–400 MW,
/// ids `g1..gn`, all on bus `n1`.
pub fn synthetic_fleet(n: usize) -> Vec<SynchronousUnit> {
    const KINDS: [PlantType; 3] = [PlantType::Nuclear, PlantType::Ccgt, PlantType::Ocgt];
    const SIZES: [f64; 8] = [400.0, 155.0, 50.0, 350.0, 197.0, 76.0, 300.0, 100.0];
    (0..n)
        .map(|i| {
            let size = SIZES[i % SIZES.len()] + 3.0 * (i / SIZES.len()) as f64;
            make_unit(&format!("g{}", i + 1), "n1", KINDS[i % 3], size)
        })
        .collect()
}

/// VSM and droop converters with the plant-table control parameters.
pub fn converter_fleet(vsm_mw: f64, droop_mw: f64) -> ConverterFleet {
    ConverterFleet {
        vsm_capacity: vsm_mw,
        droop_capacity: droop_mw,
        vsm_inertia_h: 6.0,
        vsm_damping: 0.6,
        vsm_gain: 1.0,
        droop_gain: 1.0,
        droop_droop: 0.05,
        converter_time_const: 0.0,
    }
}
