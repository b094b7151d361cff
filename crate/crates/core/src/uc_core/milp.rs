use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Index of a variable in a [`MilpModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lb: f64,
    pub ub: f64,
    pub integer: bool,
    pub cost: f64,
}

/// `lb ≤ Σ coef·x ≤ ub`; either side may be infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub family: &'static str,
    pub terms: Vec<(VarId, f64)>,
    pub lb: f64,
    pub ub: f64,
}

/// Solver-independent minimisation problem.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MilpModel {
    pub vars: Vec<Variable>,
    pub rows: Vec<Row>,
}

/// Largest violation found by [`MilpModel::residuals`], relative to the
/// magnitude of the quantities involved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub worst: f64,
    pub location: String,
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lb: f64, ub: f64, cost: f64) -> VarId {
        self.vars.push(Variable {
            name: name.into(),
            lb,
            ub,
            integer: false,
            cost,
        });
        VarId(self.vars.len() - 1)
    }

    pub fn add_binary(&mut self, name: impl Into<String>, cost: f64) -> VarId {
        self.vars.push(Variable {
            name: name.into(),
            lb: 0.0,
            ub: 1.0,
            integer: true,
            cost,
        });
        VarId(self.vars.len() - 1)
    }

    /// Repeated variables in `terms` are merged, keeping first-appearance
    /// order.
    pub fn add_row(
        &mut self,
        family: &'static str,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        lb: f64,
        ub: f64,
    ) {
        debug_assert!(terms.iter().all(|(v, _)| v.0 < self.vars.len()));
        let mut merged: Vec<(VarId, f64)> = Vec::with_capacity(terms.len());
        for (v, c) in terms {
            match merged.iter_mut().find(|(w, _)| *w == v) {
                Some(slot) => slot.1 += c,
                None => merged.push((v, c)),
            }
        }
        let terms = merged;
        self.rows.push(Row {
            name: name.into(),
            family,
            terms,
            lb,
            ub,
        });
    }

    pub fn add_le(&mut self, family: &'static str, name: impl Into<String>, terms: Vec<(VarId, f64)>, rhs: f64) {
        self.add_row(family, name, terms, f64::NEG_INFINITY, rhs);
    }

    pub fn add_ge(&mut self, family: &'static str, name: impl Into<String>, terms: Vec<(VarId, f64)>, rhs: f64) {
        self.add_row(family, name, terms, rhs, f64::INFINITY);
    }

    pub fn add_eq(&mut self, family: &'static str, name: impl Into<String>, terms: Vec<(VarId, f64)>, rhs: f64) {
        self.add_row(family, name, terms, rhs, rhs);
    }

    pub fn fix(&mut self, var: VarId, value: f64) {
        self.vars[var.0].lb = value;
        self.vars[var.0].ub = value;
    }

    pub fn num_integer(&self) -> usize {
        self.vars.iter().filter(|v| v.integer).count()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.vars.iter().zip(x).map(|(v, x)| v.cost * x).sum()
    }

    /// Families present, in first-appearance order.
    pub fn families(&self) -> Vec<&'static str> {
        let mut out: Vec<&'static str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.family) {
                out.push(r.family);
            }
        }
        out
    }

    /// Worst scaled violation of rows, bounds and integrality at `x`.
    ///
    /// A row's scale is the largest of 1, its finite bounds and the
    /// magnitudes of its individual terms.
    pub fn residuals(&self, x: &[f64]) -> Residual {
        self.residuals_with(x, true)
    }

    /// As [`residuals`](Self::residuals), optionally skipping integrality.
    pub fn residuals_with(&self, x: &[f64], integrality: bool) -> Residual {
        let mut worst = Residual {
            worst: 0.0,
            location: String::new(),
        };
        let mut note = |v: f64, loc: &dyn Fn() -> String| {
            if v > worst.worst {
                worst.worst = v;
                worst.location = loc();
            }
        };
        for (var, &val) in self.vars.iter().zip(x) {
            let scale = 1f64.max(val.abs());
            let below = (var.lb - val).max(0.0);
            let above = (val - var.ub).max(0.0);
            note(below.max(above) / scale, &|| format!("bound of {}", var.name));
            if integrality && var.integer {
                note((val - val.round()).abs(), &|| format!("integrality of {}", var.name));
            }
        }
        for row in &self.rows {
            let mut act = 0.0;
            let mut scale = 1f64;
            for &(v, c) in &row.terms {
                let t = c * x[v.0];
                act += t;
                scale = scale.max(t.abs());
            }
            if row.lb.is_finite() {
                scale = scale.max(row.lb.abs());
            }
            if row.ub.is_finite() {
                scale = scale.max(row.ub.abs());
            }
            let viol = (row.lb - act).max(act - row.ub).max(0.0);
            note(viol / scale, &|| format!("row {}", row.name));
        }
        worst
    }

    /// CPLEX-LP-style text, for inspection only.
    pub fn to_lp_string(&self) -> String {
        let mut s = String::from("Minimize\n obj:");
        for (k, v) in self.vars.iter().enumerate() {
            if v.cost != 0.0 {
                write_term(&mut s, v.cost, &self.vars[k].name);
            }
        }
        s.push_str("\nSubject To\n");
        for row in &self.rows {
            let mut lhs = String::new();
            for &(v, c) in &row.terms {
                write_term(&mut lhs, c, &self.vars[v.0].name);
            }
            if row.lb == row.ub {
                let _ = writeln!(s, " {}:{} = {}", row.name, lhs, row.lb);
            } else {
                if row.lb.is_finite() {
                    let _ = writeln!(s, " {}_lo:{} >= {}", row.name, lhs, row.lb);
                }
                if row.ub.is_finite() {
                    let _ = writeln!(s, " {}_up:{} <= {}", row.name, lhs, row.ub);
                }
            }
        }
        s.push_str("Bounds\n");
        for v in &self.vars {
            let lb = fmt_bound(v.lb);
            let ub = fmt_bound(v.ub);
            let _ = writeln!(s, " {lb} <= {} <= {ub}", v.name);
        }
        let ints: Vec<&str> = self
            .vars
            .iter()
            .filter(|v| v.integer)
            .map(|v| v.name.as_str())
            .collect();
        if !ints.is_empty() {
            s.push_str("General\n");
            for name in ints {
                let _ = writeln!(s, " {name}");
            }
        }
        s.push_str("End\n");
        s
    }
}

fn write_term(s: &mut String, c: f64, name: &str) {
    if c < 0.0 {
        let _ = write!(s, " - {} {}", -c, name);
    } else {
        let _ = write!(s, " + {} {}", c, name);
    }
}

fn fmt_bound(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        v.to_string()
    }
}
