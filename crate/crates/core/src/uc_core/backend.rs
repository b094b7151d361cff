use serde::{Deserialize, Serialize};

use super::milp::MilpModel;
use crate::error::{GridError, Result};

/// Environment variable naming the default backend.
pub const SOLVER_ENV: &str = "GRIDFREQ_SOLVER";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub mip_rel_gap: f64,
    pub time_limit_s: f64,
    /// Treat integer variables as continuous.
    pub relax_integrality: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            mip_rel_gap: 1e-4,
            time_limit_s: 600.0,
            relax_integrality: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    /// Stopped with a feasible point whose gap exceeds the target.
    FeasibleGap,
    Infeasible,
    /// Time limit hit without a feasible point.
    Timeout,
}

impl SolveStatus {
    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::FeasibleGap)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawSolution {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub mip_gap: Option<f64>,
    pub values: Option<Vec<f64>>,
}

pub trait MilpBackend: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, model: &MilpModel, options: &SolveOptions) -> Result<RawSolution>;
}

/// Backend by name; `None` reads [`SOLVER_ENV`] and falls back to `highs`.
pub fn backend_by_name(name: Option<&str>) -> Result<Box<dyn MilpBackend>> {
    let chosen = match name {
        Some(n) => n.to_string(),
        None => std::env::var(SOLVER_ENV).unwrap_or_else(|_| "highs".into()),
    };
    match chosen.as_str() {
        #[cfg(feature = "highs")]
        "highs" => Ok(Box::new(HighsBackend)),
        other => Err(GridError::NoBackend(format!(
            "solver '{other}' is not available in this build"
        ))),
    }
}

#[cfg(feature = "highs")]
pub use self::highs_backend::HighsBackend;

#[cfg(feature = "highs")]
mod highs_backend {
    use highs::{ColProblem, HighsModelStatus, HighsSolutionStatus, Sense};

    use super::*;

    /// HiGHS branch-and-cut, single-threaded for reproducibility.
    #[derive(Debug, Clone, Copy, Default)]
    pub struct HighsBackend;

    impl MilpBackend for HighsBackend {
        fn name(&self) -> &'static str {
            "highs"
        }

        fn solve(&self, model: &MilpModel, options: &SolveOptions) -> Result<RawSolution> {
            let mut columns: Vec<Vec<(highs::Row, f64)>> = vec![Vec::new(); model.vars.len()];
            let mut problem = ColProblem::default();
            for row in &model.rows {
                let handle = problem.add_row(row.lb..=row.ub);
                for &(v, c) in &row.terms {
                    columns[v.0].push((handle, c));
                }
            }
            for (var, factors) in model.vars.iter().zip(columns) {
                if var.integer && !options.relax_integrality {
                    problem.add_integer_column(var.cost, var.lb..=var.ub, factors);
                } else {
                    problem.add_column(var.cost, var.lb..=var.ub, factors);
                }
            }

            let mut solver = problem
                .try_optimise(Sense::Minimise)
                .map_err(|s| GridError::Solver(format!("HiGHS rejected the model: {s:?}")))?;
            solver.make_quiet();
            solver.set_option("threads", 1);
            solver.set_option("random_seed", 0);
            solver.set_option("mip_rel_gap", options.mip_rel_gap);
            solver.set_option("time_limit", options.time_limit_s);
            // Strong branching is costly on the scenario-expanded LPs.
            solver.set_option("mip_pscost_minreliable", 0);
            let solved = solver
                .try_solve()
                .map_err(|s| GridError::Solver(format!("HiGHS run failed: {s:?}")))?;

            let has_point = solved.primal_solution_status() == HighsSolutionStatus::Feasible;
            let is_mip = model.num_integer() > 0 && !options.relax_integrality;
            let gap = is_mip.then(|| solved.mip_gap()).filter(|g| g.is_finite());
            let status = match solved.status() {
                HighsModelStatus::Optimal => SolveStatus::Optimal,
                HighsModelStatus::Infeasible | HighsModelStatus::UnboundedOrInfeasible => SolveStatus::Infeasible,
                HighsModelStatus::ModelEmpty => SolveStatus::Optimal,
                HighsModelStatus::ReachedTimeLimit
                | HighsModelStatus::ReachedIterationLimit
                | HighsModelStatus::ReachedSolutionLimit
                | HighsModelStatus::ReachedInterrupt
                | HighsModelStatus::ReachedMemoryLimit => {
                    if has_point {
                        SolveStatus::FeasibleGap
                    } else {
                        SolveStatus::Timeout
                    }
                }
                other => {
                    return Err(GridError::Solver(format!("HiGHS returned {other:?}")));
                }
            };
            if !status.has_solution() {
                return Ok(RawSolution {
                    status,
                    objective: None,
                    mip_gap: None,
                    values: None,
                });
            }
            let values = if model.vars.is_empty() {
                Vec::new()
            } else {
                solved.get_solution().columns().to_vec()
            };
            Ok(RawSolution {
                status,
                objective: Some(model.objective(&values)),
                mip_gap: gap,
                values: Some(values),
            })
        }
    }
}
