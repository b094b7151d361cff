//! Wind and outage scenarios for the second stage.
//!
//! A scenario pairs one wind realisation with either no contingency or the
//! loss of one credible unit at the contingency hour. Probabilities multiply
//! and are not renormalised: the missing mass belongs to sequential outages,
//! which are not modelled.

mod wind;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{GridError, Result};
use crate::freq_dynamics::SynchronousUnit;

pub use wind::{ingest_wind, ingest_wind_for, write_wind};

/// One equally likely wind realisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindScenario {
    pub id: String,
    pub probability: f64,
    /// Hour label of the first entry of every series.
    pub first_hour: usize,
    /// Farm id to hourly MW.
    pub realization: BTreeMap<String, Vec<f64>>,
}

impl WindScenario {
    pub fn hours(&self) -> usize {
        self.realization.values().next().map_or(0, Vec::len)
    }

    /// Hours `start..start + len` (offsets into the series), relabelled.
    pub fn window(&self, start: usize, len: usize) -> Result<WindScenario> {
        if start + len > self.hours() {
            return Err(GridError::InvalidParameter(format!(
                "wind scenario {} has {} hours, window {start}..{} requested",
                self.id,
                self.hours(),
                start + len
            )));
        }
        Ok(WindScenario {
            id: self.id.clone(),
            probability: self.probability,
            first_hour: self.first_hour + start,
            realization: self
                .realization
                .iter()
                .map(|(k, v)| (k.clone(), v[start..start + len].to_vec()))
                .collect(),
        })
    }
}

/// Credible single-unit outages confined to one hour of the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyModel {
    pub outages: Vec<String>,
    /// Failure rate per outage, 1/h.
    pub lambda: Vec<f64>,
    /// Offset into the horizon at which an outage may happen.
    pub contingency_hour: usize,
    /// Exposure, in periods.
    pub tau: f64,
}

impl ContingencyModel {
    /// Rates taken from each unit's MTTF.
    pub fn from_units(
        units: &[SynchronousUnit],
        outages: &[String],
        contingency_hour: usize,
        tau: f64,
    ) -> Result<Self> {
        let lambda = outages
            .iter()
            .map(|id| {
                units
                    .iter()
                    .find(|u| &u.id == id)
                    .map(|u| 1.0 / u.mttf)
                    .ok_or_else(|| GridError::InvalidParameter(format!("unknown outage unit {id}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            outages: outages.to_vec(),
            lambda,
            contingency_hour,
            tau,
        })
    }

    /// No credible outages: the tree reduces to the wind scenarios.
    pub fn none() -> Self {
        Self {
            outages: Vec::new(),
            lambda: Vec::new(),
            contingency_hour: 0,
            tau: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda.len() != self.outages.len() {
            return Err(GridError::InvalidParameter(
                "one failure rate per outage is required".into(),
            ));
        }
        if self.lambda.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(GridError::InvalidParameter("failure rates must be positive".into()));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(GridError::InvalidParameter("tau must be positive".into()));
        }
        let distinct: BTreeSet<&String> = self.outages.iter().collect();
        if distinct.len() != self.outages.len() {
            return Err(GridError::InvalidParameter("duplicate outage unit id".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyProbabilities {
    /// Probability that outage κ happens within the exposure window.
    pub p_outage: Vec<f64>,
    /// Probability that outage κ does not happen over the horizon.
    pub p_survive: Vec<f64>,
    pub pi_none: f64,
    pub pi_outage: Vec<f64>,
}

impl ContingencyProbabilities {
    pub fn total(&self) -> f64 {
        self.pi_none + self.pi_outage.iter().sum::<f64>()
    }
}

/// Single-outage scenario probabilities under independent exponential
/// failures.
pub fn contingency_probabilities(model: &ContingencyModel) -> Result<ContingencyProbabilities> {
    model.validate()?;
    let tau = model.tau;
    let p_outage: Vec<f64> = model.lambda.iter().map(|&l| (-l * tau).exp() * l.exp_m1()).collect();
    let p_survive: Vec<f64> = model.lambda.iter().map(|&l| (-l * tau).exp()).collect();
    let pi_none = p_survive.iter().product();
    let pi_outage = (0..p_outage.len())
        .map(|k| {
            p_outage[k]
                * p_survive
                    .iter()
                    .enumerate()
                    .filter(|&(y, _)| y != k)
                    .map(|(_, p)| p)
                    .product::<f64>()
        })
        .collect();
    Ok(ContingencyProbabilities {
        p_outage,
        p_survive,
        pi_none,
        pi_outage,
    })
}

/// One joint wind and contingency realisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub wind_id: String,
    /// Failed unit, `None` for the intact system.
    pub outage: Option<String>,
    pub probability: f64,
    /// Farm id to hourly MW.
    pub wind: BTreeMap<String, Vec<f64>>,
    /// `availability[i][t]`, indexed like the unit list of the tree.
    pub availability: Vec<Vec<bool>>,
    /// Loss size per hour, p.u. of the system base.
    pub delta_p: Vec<f64>,
}

impl Scenario {
    pub fn is_available(&self, unit: usize, hour: usize) -> bool {
        self.availability[unit][hour]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTree {
    pub unit_ids: Vec<String>,
    pub hours: usize,
    pub contingency_hour: Option<usize>,
    pub scenarios: Vec<Scenario>,
}

impl ScenarioTree {
    pub fn total_probability(&self) -> f64 {
        self.scenarios.iter().map(|s| s.probability).sum()
    }

    pub fn farms(&self) -> Vec<String> {
        self.scenarios
            .first()
            .map(|s| s.wind.keys().cloned().collect())
            .unwrap_or_default()
    }
}

/// Cross every wind scenario with the intact system and each credible
/// outage.
///
/// Wind scenarios are taken in id order and outages in unit-id order, so the
/// tree does not depend on input ordering.
pub fn build_tree(
    wind: &[WindScenario],
    model: &ContingencyModel,
    units: &[SynchronousUnit],
    s_base: f64,
) -> Result<ScenarioTree> {
    if wind.is_empty() {
        return Err(GridError::InvalidParameter("no wind scenarios".into()));
    }
    if !(s_base > 0.0) {
        return Err(GridError::InvalidParameter("system base must be positive".into()));
    }
    let probs = contingency_probabilities(model)?;
    let hours = wind[0].hours();
    let farms: Vec<&String> = wind[0].realization.keys().collect();
    for w in wind {
        if w.hours() != hours || w.realization.keys().collect::<Vec<_>>() != farms {
            return Err(GridError::InvalidParameter(format!(
                "wind scenario {} does not match the dimensions of {}",
                w.id, wind[0].id
            )));
        }
    }
    let has_outages = !model.outages.is_empty();
    if has_outages && model.contingency_hour >= hours {
        return Err(GridError::InvalidParameter(format!(
            "contingency hour {} outside a {hours}-hour horizon",
            model.contingency_hour
        )));
    }

    let mut cases: Vec<(Option<usize>, Option<&String>, f64)> = vec![(None, None, probs.pi_none)];
    let mut order: Vec<usize> = (0..model.outages.len()).collect();
    order.sort_by(|&a, &b| model.outages[a].cmp(&model.outages[b]));
    for k in order {
        let id = &model.outages[k];
        let idx = units
            .iter()
            .position(|u| &u.id == id)
            .ok_or_else(|| GridError::InvalidParameter(format!("unknown outage unit {id}")))?;
        cases.push((Some(idx), Some(id), probs.pi_outage[k]));
    }

    let mut winds: Vec<&WindScenario> = wind.iter().collect();
    winds.sort_by(|a, b| a.id.cmp(&b.id));

    let mut scenarios = Vec::with_capacity(cases.len() * winds.len());
    for &(failed, label, pi_c) in &cases {
        for w in &winds {
            let mut availability = vec![vec![true; hours]; units.len()];
            let mut delta_p = vec![0.0; hours];
            if let Some(i) = failed {
                for slot in &mut availability[i][model.contingency_hour..] {
                    *slot = false;
                }
                delta_p[model.contingency_hour] = units[i].p_max / s_base;
            }
            scenarios.push(Scenario {
                id: format!("{}/{}", label.map_or("c0", String::as_str), w.id),
                wind_id: w.id.clone(),
                outage: label.cloned(),
                probability: pi_c * w.probability,
                wind: w.realization.clone(),
                availability,
                delta_p,
            });
        }
    }
    Ok(ScenarioTree {
        unit_ids: units.iter().map(|u| u.id.clone()).collect(),
        hours,
        contingency_hour: has_outages.then_some(model.contingency_hour),
        scenarios,
    })
}

#[cfg(test)]
mod tests;
