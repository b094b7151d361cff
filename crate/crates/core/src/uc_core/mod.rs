//! Two-stage stochastic unit commitment with frequency-security rows.
//!
//! First stage: commitment `u, y, z`, dispatch `p`, day-ahead wind `w` and
//! angles. Second stage, per scenario: reserves `r⁺, r⁻`, real-time angles,
//! spill and shed. With frequency constraints on, every scenario-hour with a
//! nonzero loss also gets the aggregate `F, R, M` definitions, the RoCoF row,
//! the nadir surrogate and the quasi-steady-state row.
//!
//! The model is built into a solver-independent [`MilpModel`] and handed to a
//! [`MilpBackend`].

mod backend;
mod builder;
mod io;
mod milp;
mod network;
mod solve;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{GridError, Result};
use crate::freq_dynamics::{ConverterFleet, FrequencyLimits, SynchronousUnit};
use crate::nadir_linearization::{NadirBounds, PwlFit};
use crate::scenarios::ScenarioTree;

#[cfg(feature = "highs")]
pub use backend::HighsBackend;
pub use backend::{backend_by_name, MilpBackend, RawSolution, SolveOptions, SolveStatus, SOLVER_ENV};
pub use builder::{build_model, BuiltModel, FreqVars, VarIndex, FAMILIES};
pub use io::{load_system, write_solution, ContingencySpec, SystemData};
pub use milp::{MilpModel, Residual, Row, VarId, Variable};
pub use network::{Line, Network, WindFarm};
pub use solve::{
    brute_force_uc, cost_breakdown, solve, solve_built, CostBreakdown, FreqValue, ScenarioValues, UcSolution, UcValues,
    BRUTE_FORCE_LIMIT, RESIDUAL_TOL,
};

/// Unit state before the first hour of the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub on: bool,
    /// Output in the previous hour, MW.
    pub output_mw: f64,
    /// Consecutive hours already spent in the current on/off state.
    pub hours_in_state: usize,
}

impl InitialState {
    /// Offline long enough to carry no obligation.
    pub fn fresh() -> Self {
        Self {
            on: false,
            output_mw: 0.0,
            hours_in_state: 10_000,
        }
    }

    pub fn online(output_mw: f64, hours_in_state: usize) -> Self {
        Self {
            on: true,
            output_mw,
            hours_in_state,
        }
    }
}

/// Which frequency-security rows to add.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FreqMode {
    Off,
    /// Box bounds per outage unit id.
    Bounds {
        bounds: BTreeMap<String, NadirBounds>,
    },
    /// Max-affine nadir surrogate per outage unit id.
    Pwl {
        fits: BTreeMap<String, PwlFit>,
    },
}

impl FreqMode {
    pub fn is_on(&self) -> bool {
        !matches!(self, FreqMode::Off)
    }

    pub fn label(&self) -> &'static str {
        match self {
            FreqMode::Off => "off",
            FreqMode::Bounds { .. } => "bounds",
            FreqMode::Pwl { .. } => "pwl",
        }
    }
}

/// Everything needed to build one MILP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcInstance {
    pub network: Network,
    pub units: Vec<SynchronousUnit>,
    pub fleet: ConverterFleet,
    pub tree: ScenarioTree,
    pub limits: FrequencyLimits,
    /// Turbine time constant used when re-evaluating frequency metrics, s.
    pub t_turbine: f64,
    pub freq: FreqMode,
    pub initial: Vec<InitialState>,
}

impl UcInstance {
    pub fn hours(&self) -> usize {
        self.tree.hours
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        let mut ids = BTreeSet::new();
        for u in &self.units {
            u.validate()?;
            self.network.node_index(&u.bus)?;
            if !ids.insert(&u.id) {
                return Err(GridError::Instance(format!("duplicate unit id {}", u.id)));
            }
        }
        self.fleet.validate()?;
        self.limits.validate()?;
        let unit_ids: Vec<String> = self.units.iter().map(|u| u.id.clone()).collect();
        if self.tree.unit_ids != unit_ids {
            return Err(GridError::Instance(
                "scenario tree was built for a different unit list".into(),
            ));
        }
        if self.tree.hours != self.network.hours() {
            return Err(GridError::Instance(format!(
                "scenario tree covers {} hours, demand covers {}",
                self.tree.hours,
                self.network.hours()
            )));
        }
        if self.tree.scenarios.is_empty() {
            return Err(GridError::Instance("scenario tree is empty".into()));
        }
        let farms: BTreeSet<&String> = self.network.wind_farms.iter().map(|f| &f.id).collect();
        for farm in self.tree.farms() {
            if !farms.contains(&farm) {
                return Err(GridError::Instance(format!("wind farm {farm} not in network")));
            }
        }
        if self.initial.len() != self.units.len() {
            return Err(GridError::Instance(format!(
                "{} initial states for {} units",
                self.initial.len(),
                self.units.len()
            )));
        }
        if !(self.t_turbine > 0.0) {
            return Err(GridError::Instance("turbine time constant must be positive".into()));
        }
        let outages: BTreeSet<&String> = self
            .tree
            .scenarios
            .iter()
            .filter(|s| s.delta_p.iter().any(|&d| d > 0.0))
            .filter_map(|s| s.outage.as_ref())
            .collect();
        for id in outages {
            let covered = match &self.freq {
                FreqMode::Off => true,
                FreqMode::Bounds { bounds } => bounds.contains_key(id),
                FreqMode::Pwl { fits } => fits.contains_key(id),
            };
            if !covered {
                return Err(GridError::Instance(format!(
                    "frequency mode {} has no entry for contingency {id}",
                    self.freq.label()
                )));
            }
        }
        Ok(())
    }
}
