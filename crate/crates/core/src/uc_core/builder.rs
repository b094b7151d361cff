use std::collections::BTreeMap;

use super::milp::{MilpModel, VarId};
use super::{FreqMode, UcInstance};
use crate::error::{GridError, Result};
use crate::freq_dynamics::system_base;

/// Row families in build order. Reserve caps, spill and shed limits are
/// variable bounds rather than rows.
pub const FAMILIES: [&str; 19] = [
    "da_balance",
    "da_flow",
    "min_up",
    "min_down",
    "startup",
    "shutdown",
    "rt_balance",
    "cap_max",
    "cap_min",
    "ramp_up",
    "ramp_down",
    "rt_flow",
    "fraction_def",
    "droop_def",
    "inertia_def",
    "rocof",
    "nadir_bounds",
    "nadir_pwl",
    "quasi_ss",
];

/// Aggregate variables of one scenario-hour with a modelled loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqVars {
    pub f_g: VarId,
    pub r_g: VarId,
    /// Synchronous inertia only; the virtual part is a constant.
    pub m: VarId,
    pub epigraph: Option<VarId>,
}

/// Where each decision lives in the model.
#[derive(Debug, Clone, PartialEq)]
pub struct VarIndex {
    pub units: usize,
    pub hours: usize,
    pub scenarios: usize,
    pub nodes: usize,
    pub farms: usize,
    pub u: Vec<VarId>,
    pub y: Vec<VarId>,
    pub z: Vec<VarId>,
    pub p: Vec<VarId>,
    pub w: Vec<VarId>,
    pub da_angle: Vec<VarId>,
    pub r_up: Vec<VarId>,
    pub r_down: Vec<VarId>,
    pub rt_angle: Vec<VarId>,
    pub spill: Vec<VarId>,
    pub shed: Vec<VarId>,
    /// Keyed by `(scenario, hour)`.
    pub freq: BTreeMap<(usize, usize), FreqVars>,
}

impl VarIndex {
    pub fn ut(&self, i: usize, t: usize) -> usize {
        i * self.hours + t
    }
    pub fn jt(&self, j: usize, t: usize) -> usize {
        j * self.hours + t
    }
    pub fn nt(&self, n: usize, t: usize) -> usize {
        n * self.hours + t
    }
    pub fn sit(&self, s: usize, i: usize, t: usize) -> usize {
        (s * self.units + i) * self.hours + t
    }
    pub fn snt(&self, s: usize, n: usize, t: usize) -> usize {
        (s * self.nodes + n) * self.hours + t
    }
    pub fn sjt(&self, s: usize, j: usize, t: usize) -> usize {
        (s * self.farms + j) * self.hours + t
    }
}

#[derive(Debug, Clone)]
pub struct BuiltModel {
    pub model: MilpModel,
    pub index: VarIndex,
    pub s_base: f64,
}

/// Assemble the MILP for `instance`.
pub fn build_model(instance: &UcInstance) -> Result<BuiltModel> {
    instance.validate()?;
    let net = &instance.network;
    let units = &instance.units;
    let tree = &instance.tree;
    let hours = tree.hours;
    let n_units = units.len();
    let n_nodes = net.nodes.len();
    let n_scen = tree.scenarios.len();
    let farms: Vec<String> = tree.farms();
    let n_farms = farms.len();
    let farm_defs: Vec<&super::WindFarm> = farms
        .iter()
        .map(|f| net.wind_farms.iter().find(|w| &w.id == f).expect("validated"))
        .collect();
    let unit_node: Vec<usize> = units.iter().map(|u| net.node_index(&u.bus)).collect::<Result<_>>()?;
    let farm_node: Vec<usize> = farm_defs
        .iter()
        .map(|f| net.node_index(&f.bus))
        .collect::<Result<_>>()?;
    let lines: Vec<(usize, usize, f64, f64)> = net
        .lines
        .iter()
        .map(|l| {
            Ok((
                net.node_index(&l.from)?,
                net.node_index(&l.to)?,
                l.susceptance,
                l.capacity,
            ))
        })
        .collect::<Result<_>>()?;
    let refs = net.references()?;
    let is_ref = |n: usize| refs.contains(&n);
    let s_base = system_base(units, &instance.fleet);
    if !(s_base > 0.0) {
        return Err(GridError::Instance("system base is zero".into()));
    }

    let mut m = MilpModel::new();
    let mut ix = VarIndex {
        units: n_units,
        hours,
        scenarios: n_scen,
        nodes: n_nodes,
        farms: n_farms,
        u: Vec::new(),
        y: Vec::new(),
        z: Vec::new(),
        p: Vec::new(),
        w: Vec::new(),
        da_angle: Vec::new(),
        r_up: Vec::new(),
        r_down: Vec::new(),
        rt_angle: Vec::new(),
        spill: Vec::new(),
        shed: Vec::new(),
        freq: BTreeMap::new(),
    };

    // First-stage variables.
    for u in units {
        for t in 0..hours {
            ix.u.push(m.add_binary(format!("u_{}_{t}", u.id), 0.0));
        }
    }
    for u in units {
        for t in 0..hours {
            ix.y.push(m.add_binary(format!("y_{}_{t}", u.id), u.cost_startup));
        }
    }
    for u in units {
        for t in 0..hours {
            ix.z.push(m.add_binary(format!("z_{}_{t}", u.id), u.cost_shutdown));
        }
    }
    for u in units {
        for t in 0..hours {
            ix.p.push(m.add_var(format!("p_{}_{t}", u.id), 0.0, u.p_max, u.cost_energy));
        }
    }
    for f in &farm_defs {
        for t in 0..hours {
            ix.w.push(m.add_var(format!("w_{}_{t}", f.id), 0.0, f.capacity, 0.0));
        }
    }
    for (n, node) in net.nodes.iter().enumerate() {
        for t in 0..hours {
            let (lb, ub) = if is_ref(n) {
                (0.0, 0.0)
            } else {
                (f64::NEG_INFINITY, f64::INFINITY)
            };
            ix.da_angle.push(m.add_var(format!("da_{node}_{t}"), lb, ub, 0.0));
        }
    }

    // Second-stage variables.
    for (s, sc) in tree.scenarios.iter().enumerate() {
        let pi = sc.probability;
        for (i, u) in units.iter().enumerate() {
            for t in 0..hours {
                let cap = if sc.availability[i][t] { u.res_up_cap } else { 0.0 };
                ix.r_up
                    .push(m.add_var(format!("rup_{s}_{}_{t}", u.id), 0.0, cap, pi * u.cost_res_up));
            }
        }
        for (i, u) in units.iter().enumerate() {
            for t in 0..hours {
                let cap = if sc.availability[i][t] { u.res_down_cap } else { 0.0 };
                ix.r_down
                    .push(m.add_var(format!("rdn_{s}_{}_{t}", u.id), 0.0, cap, -pi * u.cost_res_down));
            }
        }
        for (n, node) in net.nodes.iter().enumerate() {
            for t in 0..hours {
                let (lb, ub) = if is_ref(n) {
                    (0.0, 0.0)
                } else {
                    (f64::NEG_INFINITY, f64::INFINITY)
                };
                ix.rt_angle.push(m.add_var(format!("rt_{s}_{node}_{t}"), lb, ub, 0.0));
            }
        }
        for f in &farms {
            for t in 0..hours {
                let avail = sc.wind[f][t];
                ix.spill.push(m.add_var(format!("spill_{s}_{f}_{t}"), 0.0, avail, 0.0));
            }
        }
        for (n, node) in net.nodes.iter().enumerate() {
            for t in 0..hours {
                let d = net.demand_at(n, t);
                ix.shed
                    .push(m.add_var(format!("shed_{s}_{node}_{t}"), 0.0, d, pi * net.voll));
            }
        }
    }

    // Day-ahead balance and flows.
    for t in 0..hours {
        for n in 0..n_nodes {
            let mut terms = Vec::new();
            for i in (0..n_units).filter(|&i| unit_node[i] == n) {
                terms.push((ix.p[ix.ut(i, t)], 1.0));
            }
            for j in (0..n_farms).filter(|&j| farm_node[j] == n) {
                terms.push((ix.w[ix.jt(j, t)], 1.0));
            }
            for &(a, b, sus, _) in &lines {
                if a == n || b == n {
                    let other = if a == n { b } else { a };
                    terms.push((ix.da_angle[ix.nt(n, t)], -sus));
                    terms.push((ix.da_angle[ix.nt(other, t)], sus));
                }
            }
            m.add_eq(
                "da_balance",
                format!("da_bal_{}_{t}", net.nodes[n]),
                terms,
                net.demand_at(n, t),
            );
        }
        for (l, &(a, b, sus, cap)) in lines.iter().enumerate() {
            m.add_row(
                "da_flow",
                format!("da_flow_{l}_{t}"),
                vec![(ix.da_angle[ix.nt(a, t)], sus), (ix.da_angle[ix.nt(b, t)], -sus)],
                -cap,
                cap,
            );
        }
    }

    // Commitment logic.
    for (i, unit) in units.iter().enumerate() {
        let init = instance.initial[i];
        let prev_u = |t: usize| -> Option<VarId> { (t > 0).then(|| ix.u[ix.ut(i, t - 1)]) };
        let u0 = if init.on { 1.0 } else { 0.0 };
        for t in 0..hours {
            let ut = ix.u[ix.ut(i, t)];
            // Up window: a start at t keeps the unit on through t + T_up - 1.
            for tau in t + 1..(t + unit.min_up).min(hours) {
                let mut terms = vec![(ix.u[ix.ut(i, tau)], 1.0), (ut, -1.0)];
                let rhs = match prev_u(t) {
                    Some(p) => {
                        terms.push((p, 1.0));
                        0.0
                    }
                    None => -u0,
                };
                m.add_ge("min_up", format!("minup_{}_{t}_{tau}", unit.id), terms, rhs);
            }
            for tau in t + 1..(t + unit.min_down).min(hours) {
                let mut terms = vec![(ix.u[ix.ut(i, tau)], 1.0), (ut, -1.0)];
                let rhs = match prev_u(t) {
                    Some(p) => {
                        terms.push((p, 1.0));
                        1.0
                    }
                    None => 1.0 - u0,
                };
                m.add_le("min_down", format!("mindn_{}_{t}_{tau}", unit.id), terms, rhs);
            }
            let yt = ix.y[ix.ut(i, t)];
            let zt = ix.z[ix.ut(i, t)];
            match prev_u(t) {
                Some(p) => {
                    m.add_ge(
                        "startup",
                        format!("su_{}_{t}", unit.id),
                        vec![(yt, 1.0), (ut, -1.0), (p, 1.0)],
                        0.0,
                    );
                    m.add_ge(
                        "shutdown",
                        format!("sd_{}_{t}", unit.id),
                        vec![(zt, 1.0), (ut, 1.0), (p, -1.0)],
                        0.0,
                    );
                }
                None => {
                    m.add_ge(
                        "startup",
                        format!("su_{}_{t}", unit.id),
                        vec![(yt, 1.0), (ut, -1.0)],
                        -u0,
                    );
                    m.add_ge(
                        "shutdown",
                        format!("sd_{}_{t}", unit.id),
                        vec![(zt, 1.0), (ut, 1.0)],
                        u0,
                    );
                }
            }
        }
        // Obligations carried over from before the horizon.
        let (required, value) = if init.on {
            (unit.min_up.saturating_sub(init.hours_in_state), 1.0)
        } else {
            (unit.min_down.saturating_sub(init.hours_in_state), 0.0)
        };
        for t in 0..required.min(hours) {
            m.fix(ix.u[ix.ut(i, t)], value);
        }
    }

    // Real-time stage.
    for (s, sc) in tree.scenarios.iter().enumerate() {
        for t in 0..hours {
            for n in 0..n_nodes {
                let mut terms = Vec::new();
                let mut rhs = 0.0;
                for i in (0..n_units).filter(|&i| unit_node[i] == n) {
                    terms.push((ix.r_up[ix.sit(s, i, t)], 1.0));
                    terms.push((ix.r_down[ix.sit(s, i, t)], -1.0));
                    if !sc.availability[i][t] {
                        terms.push((ix.p[ix.ut(i, t)], -1.0));
                    }
                }
                for &(a, b, sus, _) in &lines {
                    if a == n || b == n {
                        let other = if a == n { b } else { a };
                        terms.push((ix.da_angle[ix.nt(n, t)], sus));
                        terms.push((ix.da_angle[ix.nt(other, t)], -sus));
                        terms.push((ix.rt_angle[ix.snt(s, n, t)], -sus));
                        terms.push((ix.rt_angle[ix.snt(s, other, t)], sus));
                    }
                }
                for j in (0..n_farms).filter(|&j| farm_node[j] == n) {
                    terms.push((ix.w[ix.jt(j, t)], -1.0));
                    terms.push((ix.spill[ix.sjt(s, j, t)], -1.0));
                    rhs -= sc.wind[&farms[j]][t];
                }
                terms.push((ix.shed[ix.snt(s, n, t)], 1.0));
                m.add_eq("rt_balance", format!("rt_bal_{s}_{}_{t}", net.nodes[n]), terms, rhs);
            }
            for (i, unit) in units.iter().enumerate() {
                let p = ix.p[ix.ut(i, t)];
                let u = ix.u[ix.ut(i, t)];
                let ru = ix.r_up[ix.sit(s, i, t)];
                let rd = ix.r_down[ix.sit(s, i, t)];
                m.add_le(
                    "cap_max",
                    format!("pmax_{s}_{}_{t}", unit.id),
                    vec![(p, 1.0), (ru, 1.0), (u, -unit.p_max)],
                    0.0,
                );
                m.add_ge(
                    "cap_min",
                    format!("pmin_{s}_{}_{t}", unit.id),
                    vec![(p, 1.0), (rd, -1.0), (u, -unit.p_min)],
                    0.0,
                );
                let p0 = instance.initial[i].output_mw;
                if t > 0 {
                    let pp = ix.p[ix.ut(i, t - 1)];
                    let rup = ix.r_up[ix.sit(s, i, t - 1)];
                    let rdp = ix.r_down[ix.sit(s, i, t - 1)];
                    m.add_le(
                        "ramp_up",
                        format!("rampu_{s}_{}_{t}", unit.id),
                        vec![(p, 1.0), (pp, -1.0), (ru, 1.0), (rup, -1.0)],
                        unit.ramp_up,
                    );
                    m.add_ge(
                        "ramp_down",
                        format!("rampd_{s}_{}_{t}", unit.id),
                        vec![(p, 1.0), (pp, -1.0), (rd, -1.0), (rdp, 1.0)],
                        -unit.ramp_down,
                    );
                } else {
                    m.add_le(
                        "ramp_up",
                        format!("rampu_{s}_{}_{t}", unit.id),
                        vec![(p, 1.0), (ru, 1.0)],
                        unit.ramp_up + p0,
                    );
                    m.add_ge(
                        "ramp_down",
                        format!("rampd_{s}_{}_{t}", unit.id),
                        vec![(p, 1.0), (rd, -1.0)],
                        p0 - unit.ramp_down,
                    );
                }
            }
            for (l, &(a, b, sus, cap)) in lines.iter().enumerate() {
                m.add_row(
                    "rt_flow",
                    format!("rt_flow_{s}_{l}_{t}"),
                    vec![
                        (ix.rt_angle[ix.snt(s, a, t)], sus),
                        (ix.rt_angle[ix.snt(s, b, t)], -sus),
                    ],
                    -cap,
                    cap,
                );
            }
        }
    }

    if instance.freq.is_on() {
        add_frequency_rows(instance, &mut m, &mut ix, s_base)?;
    }

    Ok(BuiltModel {
        model: m,
        index: ix,
        s_base,
    })
}

fn add_frequency_rows(instance: &UcInstance, m: &mut MilpModel, ix: &mut VarIndex, s_base: f64) -> Result<()> {
    let units = &instance.units;
    let lim = &instance.limits;
    let fb = lim.f_base;
    let m_v = instance.fleet.inertia_mws() / s_base;
    let d_conv = instance.fleet.damping_mw() / s_base;
    let gain: Vec<f64> = units.iter().map(|u| u.p_max * u.gain_k / s_base).collect();

    for (s, sc) in instance.tree.scenarios.iter().enumerate() {
        for t in 0..instance.tree.hours {
            let dp = sc.delta_p[t];
            if dp <= 0.0 {
                continue;
            }
            let outage = sc
                .outage
                .as_ref()
                .ok_or_else(|| GridError::Instance(format!("scenario {} has a loss but no outage unit", sc.id)))?;
            let tag = format!("{s}_{t}");
            let f_g = m.add_var(format!("F_{tag}"), 0.0, f64::INFINITY, 0.0);
            let r_g = m.add_var(format!("R_{tag}"), 0.0, f64::INFINITY, 0.0);
            let mv = m.add_var(format!("M_{tag}"), 0.0, f64::INFINITY, 0.0);

            let online: Vec<usize> = (0..units.len()).filter(|&i| sc.availability[i][t]).collect();
            let u_of = |i: usize| ix.u[ix.ut(i, t)];
            let mut f_terms = vec![(f_g, 1.0)];
            let mut r_terms = vec![(r_g, 1.0)];
            let mut m_terms = vec![(mv, 1.0)];
            let mut ss_terms = vec![(r_g, 1.0)];
            for &i in &online {
                let u = &units[i];
                f_terms.push((u_of(i), -u.turbine_fraction * gain[i] / u.droop));
                r_terms.push((u_of(i), -gain[i] / u.droop));
                m_terms.push((u_of(i), -2.0 * u.inertia_h * gain[i]));
                ss_terms.push((u_of(i), u.damping * u.p_max / s_base));
            }
            m.add_eq("fraction_def", format!("fdef_{tag}"), f_terms, 0.0);
            m.add_eq("droop_def", format!("rdef_{tag}"), r_terms, 0.0);
            m.add_eq("inertia_def", format!("mdef_{tag}"), m_terms, 0.0);

            m.add_ge(
                "rocof",
                format!("rocof_{tag}"),
                vec![(mv, 1.0)],
                dp * fb / lim.rocof_lim - m_v,
            );

            let mut epigraph = None;
            match &instance.freq {
                FreqMode::Off => unreachable!("frequency rows requested with mode off"),
                FreqMode::Bounds { bounds } => {
                    let b = &bounds[outage];
                    m.add_ge("nadir_bounds", format!("nadF_{tag}"), vec![(f_g, 1.0)], b.f_lim);
                    m.add_ge("nadir_bounds", format!("nadR_{tag}"), vec![(r_g, 1.0)], b.r_lim);
                    m.add_ge("nadir_bounds", format!("nadM_{tag}"), vec![(mv, 1.0)], b.m_lim - m_v);
                }
                FreqMode::Pwl { fits } => {
                    let fit = &fits[outage];
                    let t3 = m.add_var(format!("t3_{tag}"), f64::NEG_INFINITY, f64::INFINITY, 0.0);
                    for (k, seg) in fit.segments.iter().enumerate() {
                        m.add_ge(
                            "nadir_pwl",
                            format!("pwl_{tag}_{k}"),
                            vec![(t3, 1.0), (r_g, -seg.a), (f_g, -seg.b), (mv, -seg.c)],
                            seg.d + seg.c * m_v,
                        );
                    }
                    m.add_le("nadir_pwl", format!("pwl_{tag}_lim"), vec![(t3, fb)], lim.nadir_lim);
                    epigraph = Some(t3);
                }
            }

            m.add_ge(
                "quasi_ss",
                format!("qss_{tag}"),
                ss_terms,
                dp * fb / lim.ss_lim - d_conv,
            );
            ix.freq.insert(
                (s, t),
                FreqVars {
                    f_g,
                    r_g,
                    m: mv,
                    epigraph,
                },
            );
        }
    }
    Ok(())
}
