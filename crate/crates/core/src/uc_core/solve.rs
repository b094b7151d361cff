use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::backend::{MilpBackend, SolveOptions, SolveStatus};
use super::builder::{build_model, BuiltModel};
use super::UcInstance;
use crate::error::{GridError, Result};
use crate::freq_dynamics::{aggregate_params, AggregateParams};

/// Worst scaled residual accepted from a backend.
pub const RESIDUAL_TOL: f64 = 1e-6;

/// Largest number of commitment binaries [`brute_force_uc`] will enumerate.
pub const BRUTE_FORCE_LIMIT: usize = 16;

const COMMITMENT_FAMILIES: [&str; 4] = ["min_up", "min_down", "startup", "shutdown"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioValues {
    pub id: String,
    pub probability: f64,
    /// `[unit][hour]`, MW.
    pub r_up: Vec<Vec<f64>>,
    pub r_down: Vec<Vec<f64>>,
    /// `[node][hour]`, rad.
    pub rt_angle: Vec<Vec<f64>>,
    /// Farm id to hourly MW.
    pub spill: BTreeMap<String, Vec<f64>>,
    /// `[node][hour]`, MW.
    pub shed: Vec<Vec<f64>>,
}

/// Aggregate variables at one scenario-hour, as solved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreqValue {
    pub scenario: usize,
    pub hour: usize,
    pub f_g: f64,
    pub r_g: f64,
    /// Synchronous inertia, p.u.
    pub m: f64,
    pub epigraph: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub total: f64,
    pub startup: f64,
    pub operation: f64,
    pub reserves: f64,
    pub shed: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UcValues {
    /// `[unit][hour]`.
    pub commitment: Vec<Vec<bool>>,
    pub startup: Vec<Vec<bool>>,
    pub shutdown: Vec<Vec<bool>>,
    /// `[unit][hour]`, MW.
    pub dispatch: Vec<Vec<f64>>,
    /// Farm id to hourly MW.
    pub wind_da: BTreeMap<String, Vec<f64>>,
    /// `[node][hour]`, rad.
    pub da_angle: Vec<Vec<f64>>,
    pub scenarios: Vec<ScenarioValues>,
    pub freq: Vec<FreqValue>,
    pub costs: CostBreakdown,
    pub max_residual: f64,
}

impl UcValues {
    /// Frequency parameters of the units committed and available in
    /// scenario `s` at hour `t`.
    pub fn aggregate(&self, instance: &UcInstance, s: usize, t: usize) -> Result<AggregateParams> {
        let sc = &instance.tree.scenarios[s];
        let online: Vec<bool> = (0..instance.units.len())
            .map(|i| self.commitment[i][t] && sc.availability[i][t])
            .collect();
        aggregate_params(&instance.units, &online, &instance.fleet, instance.t_turbine)
    }

    /// Flow on each line at the day-ahead stage, `[line][hour]`, MW.
    pub fn da_flows(&self, instance: &UcInstance) -> Result<Vec<Vec<f64>>> {
        let net = &instance.network;
        net.lines
            .iter()
            .map(|l| {
                let a = net.node_index(&l.from)?;
                let b = net.node_index(&l.to)?;
                Ok((0..instance.hours())
                    .map(|t| l.susceptance * (self.da_angle[a][t] - self.da_angle[b][t]))
                    .collect())
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcSolution {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub mip_gap: Option<f64>,
    pub backend: String,
    pub freq_mode: String,
    pub values: Option<UcValues>,
}

pub fn solve(instance: &UcInstance, backend: &dyn MilpBackend, options: &SolveOptions) -> Result<UcSolution> {
    let built = build_model(instance)?;
    solve_built(instance, &built, backend, options)
}

/// Solve a model already built from `instance`; a point that fails the
/// residual check is an error.
pub fn solve_built(
    instance: &UcInstance,
    built: &BuiltModel,
    backend: &dyn MilpBackend,
    options: &SolveOptions,
) -> Result<UcSolution> {
    let raw = backend.solve(&built.model, options)?;
    let mut out = UcSolution {
        status: raw.status,
        objective: raw.objective,
        mip_gap: raw.mip_gap,
        backend: backend.name().to_string(),
        freq_mode: instance.freq.label().to_string(),
        values: None,
    };
    let Some(x) = raw.values else {
        return Ok(out);
    };
    let res = built.model.residuals_with(&x, !options.relax_integrality);
    if res.worst > RESIDUAL_TOL {
        return Err(GridError::Residual(format!(
            "{} solution violates {} by {:.3e}",
            backend.name(),
            res.location,
            res.worst
        )));
    }
    let values = extract(instance, built, &x, res.worst);
    out.objective = Some(values.costs.total);
    out.values = Some(values);
    Ok(out)
}

fn extract(instance: &UcInstance, built: &BuiltModel, x: &[f64], max_residual: f64) -> UcValues {
    let ix = &built.index;
    let hours = ix.hours;
    let farms = instance.tree.farms();
    let grid = |vars: &[super::VarId], rows: usize, at: &dyn Fn(usize, usize) -> usize| -> Vec<Vec<f64>> {
        (0..rows)
            .map(|r| (0..hours).map(|t| x[vars[at(r, t)].0]).collect())
            .collect()
    };
    let on = |v: Vec<Vec<f64>>| -> Vec<Vec<bool>> {
        v.into_iter()
            .map(|r| r.into_iter().map(|x| x > 0.5).collect())
            .collect()
    };
    let commitment = on(grid(&ix.u, ix.units, &|i, t| ix.ut(i, t)));
    let startup = on(grid(&ix.y, ix.units, &|i, t| ix.ut(i, t)));
    let shutdown = on(grid(&ix.z, ix.units, &|i, t| ix.ut(i, t)));
    let dispatch = grid(&ix.p, ix.units, &|i, t| ix.ut(i, t));
    let w = grid(&ix.w, ix.farms, &|j, t| ix.jt(j, t));
    let wind_da = farms.iter().cloned().zip(w).collect();
    let da_angle = grid(&ix.da_angle, ix.nodes, &|n, t| ix.nt(n, t));
    let scenarios = instance
        .tree
        .scenarios
        .iter()
        .enumerate()
        .map(|(s, sc)| {
            let spill = grid(&ix.spill, ix.farms, &|j, t| ix.sjt(s, j, t));
            ScenarioValues {
                id: sc.id.clone(),
                probability: sc.probability,
                r_up: grid(&ix.r_up, ix.units, &|i, t| ix.sit(s, i, t)),
                r_down: grid(&ix.r_down, ix.units, &|i, t| ix.sit(s, i, t)),
                rt_angle: grid(&ix.rt_angle, ix.nodes, &|n, t| ix.snt(s, n, t)),
                spill: farms.iter().cloned().zip(spill).collect(),
                shed: grid(&ix.shed, ix.nodes, &|n, t| ix.snt(s, n, t)),
            }
        })
        .collect();
    let freq = ix
        .freq
        .iter()
        .map(|(&(s, t), v)| FreqValue {
            scenario: s,
            hour: t,
            f_g: x[v.f_g.0],
            r_g: x[v.r_g.0],
            m: x[v.m.0],
            epigraph: v.epigraph.map(|e| x[e.0]),
        })
        .collect();
    let mut values = UcValues {
        commitment,
        startup,
        shutdown,
        dispatch,
        wind_da,
        da_angle,
        scenarios,
        freq,
        costs: CostBreakdown {
            total: 0.0,
            startup: 0.0,
            operation: 0.0,
            reserves: 0.0,
            shed: 0.0,
        },
        max_residual,
    };
    values.costs = raw_costs(instance, built, x);
    values
}

/// Cost components evaluated on the raw solution vector, so that they sum
/// to the model objective exactly.
fn raw_costs(instance: &UcInstance, built: &BuiltModel, x: &[f64]) -> CostBreakdown {
    let ix = &built.index;
    let mut c = CostBreakdown {
        total: 0.0,
        startup: 0.0,
        operation: 0.0,
        reserves: 0.0,
        shed: 0.0,
    };
    for (i, u) in instance.units.iter().enumerate() {
        for t in 0..ix.hours {
            let k = ix.ut(i, t);
            c.startup += u.cost_startup * x[ix.y[k].0] + u.cost_shutdown * x[ix.z[k].0];
            c.operation += u.cost_energy * x[ix.p[k].0];
        }
    }
    for (s, sc) in instance.tree.scenarios.iter().enumerate() {
        let pi = sc.probability;
        for (i, u) in instance.units.iter().enumerate() {
            for t in 0..ix.hours {
                c.reserves += pi
                    * (u.cost_res_up * x[ix.r_up[ix.sit(s, i, t)].0]
                        - u.cost_res_down * x[ix.r_down[ix.sit(s, i, t)].0]);
            }
        }
        for n in 0..ix.nodes {
            for t in 0..ix.hours {
                c.shed += pi * instance.network.voll * x[ix.shed[ix.snt(s, n, t)].0];
            }
        }
    }
    c.total = c.startup + c.operation + c.reserves + c.shed;
    c
}

/// Cost components recomputed from reported values.
pub fn cost_breakdown(values: &UcValues, instance: &UcInstance) -> CostBreakdown {
    let b = |v: bool| if v { 1.0 } else { 0.0 };
    let mut c = CostBreakdown {
        total: 0.0,
        startup: 0.0,
        operation: 0.0,
        reserves: 0.0,
        shed: 0.0,
    };
    for (i, u) in instance.units.iter().enumerate() {
        for t in 0..instance.hours() {
            c.startup += u.cost_startup * b(values.startup[i][t]) + u.cost_shutdown * b(values.shutdown[i][t]);
            c.operation += u.cost_energy * values.dispatch[i][t];
        }
    }
    for sv in &values.scenarios {
        for (i, u) in instance.units.iter().enumerate() {
            for t in 0..instance.hours() {
                c.reserves += sv.probability * (u.cost_res_up * sv.r_up[i][t] - u.cost_res_down * sv.r_down[i][t]);
            }
        }
        c.shed += sv.probability * instance.network.voll * sv.shed.iter().flatten().sum::<f64>();
    }
    c.total = c.startup + c.operation + c.reserves + c.shed;
    c
}

/// Exact optimum by enumerating every commitment pattern and solving the
/// remaining LP. Ties keep the first pattern in mask order.
pub fn brute_force_uc(instance: &UcInstance, backend: &dyn MilpBackend) -> Result<UcSolution> {
    let built = build_model(instance)?;
    let ix = &built.index;
    let n_bin = ix.u.len();
    if n_bin > BRUTE_FORCE_LIMIT {
        return Err(GridError::Instance(format!(
            "{n_bin} commitment binaries exceed the brute-force limit of {BRUTE_FORCE_LIMIT}"
        )));
    }
    let u_pos: BTreeMap<usize, usize> = ix.u.iter().enumerate().map(|(k, v)| (v.0, k)).collect();
    let y_pos: BTreeMap<usize, usize> = ix.y.iter().enumerate().map(|(k, v)| (v.0, k)).collect();
    let z_pos: BTreeMap<usize, usize> = ix.z.iter().enumerate().map(|(k, v)| (v.0, k)).collect();
    let logic_rows: Vec<&super::Row> = built
        .model
        .rows
        .iter()
        .filter(|r| COMMITMENT_FAMILIES.contains(&r.family))
        .collect();
    let options = SolveOptions {
        relax_integrality: true,
        ..SolveOptions::default()
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u64..(1u64 << n_bin) {
        let u: Vec<f64> = (0..n_bin).map(|k| ((mask >> k) & 1) as f64).collect();
        let mut y = vec![0.0; n_bin];
        let mut z = vec![0.0; n_bin];
        for (i, init) in instance.initial.iter().enumerate() {
            let mut prev = if init.on { 1.0 } else { 0.0 };
            for t in 0..ix.hours {
                let k = ix.ut(i, t);
                y[k] = (u[k] - prev).max(0.0);
                z[k] = (prev - u[k]).max(0.0);
                prev = u[k];
            }
        }
        let bounds_ok = ix.u.iter().enumerate().all(|(k, v)| {
            let var = &built.model.vars[v.0];
            u[k] >= var.lb && u[k] <= var.ub
        });
        if !bounds_ok {
            continue;
        }
        let value = |id: usize| -> f64 {
            if let Some(&k) = u_pos.get(&id) {
                u[k]
            } else if let Some(&k) = y_pos.get(&id) {
                y[k]
            } else {
                z[z_pos[&id]]
            }
        };
        let logic_ok = logic_rows.iter().all(|r| {
            let act: f64 = r.terms.iter().map(|&(v, c)| c * value(v.0)).sum();
            act >= r.lb - 1e-9 && act <= r.ub + 1e-9
        });
        if !logic_ok {
            continue;
        }
        let mut model = built.model.clone();
        for k in 0..n_bin {
            model.fix(ix.u[k], u[k]);
            model.fix(ix.y[k], y[k]);
            model.fix(ix.z[k], z[k]);
        }
        let raw = backend.solve(&model, &options)?;
        if let (true, Some(obj), Some(x)) = (raw.status.has_solution(), raw.objective, raw.values) {
            if best.as_ref().is_none_or(|(b, _)| obj < *b - 1e-9 * b.abs().max(1.0)) {
                best = Some((obj, x));
            }
        }
    }

    let Some((_, x)) = best else {
        return Ok(UcSolution {
            status: SolveStatus::Infeasible,
            objective: None,
            mip_gap: None,
            backend: format!("{}-enumeration", backend.name()),
            freq_mode: instance.freq.label().to_string(),
            values: None,
        });
    };
    let res = built.model.residuals(&x);
    if res.worst > RESIDUAL_TOL {
        return Err(GridError::Residual(format!(
            "enumerated solution violates {} by {:.3e}",
            res.location, res.worst
        )));
    }
    let values = extract(instance, &built, &x, res.worst);
    Ok(UcSolution {
        status: SolveStatus::Optimal,
        objective: Some(values.costs.total),
        mip_gap: Some(0.0),
        backend: format!("{}-enumeration", backend.name()),
        freq_mode: instance.freq.label().to_string(),
        values: Some(values),
    })
}
