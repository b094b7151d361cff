use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::posthoc::{frequency_trace, outage_gaps, posthoc_gaps};
use super::{StudyConfig, StudyRun, HOURS_PER_DAY};
use crate::error::{GridError, Result};
use crate::freq_dynamics::{LimitGaps, DEFAULT_DT_S};
use crate::uc_core::{CostBreakdown, SolveStatus};

/// Sampling step of the stored frequency trace, s.
pub const TRACE_STEP_S: f64 = 0.01;

/// Everything the report files are rendered from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResults {
    pub config: StudyConfig,
    pub solver: String,
    pub version: String,
    /// Outage used for the frequency traces.
    pub trace_outage: String,
    /// `fc_off` first, then `fc_on`.
    pub runs: Vec<RunSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    /// Committed units per study hour.
    pub committed: Vec<usize>,
    /// Effective inertia of the intact system per study hour, p.u.·s.
    pub inertia: Vec<f64>,
    /// Worst gaps over the credible outages as if each tripped at that hour.
    pub gaps: Vec<LimitGaps>,
    /// Worst post-hoc gaps over the contingency scenarios at the
    /// contingency hour.
    pub contingency_gaps: LimitGaps,
    pub day_costs: Vec<CostBreakdown>,
    pub day_status: Vec<SolveStatus>,
    pub day_mip_gap: Vec<Option<f64>>,
    /// `(t_s, Δf_Hz)` after the traced outage.
    pub trace: Vec<(f64, f64)>,
    pub membership_checked: usize,
}

fn contingency_scenarios(run: &StudyRun) -> Result<(&super::DayResult, usize, Vec<usize>)> {
    let (day, t) = run
        .locate(run.config.contingency_hour)
        .ok_or_else(|| GridError::InvalidParameter("contingency hour outside the study".into()))?;
    let idx = day
        .instance
        .tree
        .scenarios
        .iter()
        .enumerate()
        .filter(|(_, s)| s.delta_p[t] > 0.0)
        .map(|(i, _)| i)
        .collect();
    Ok((day, t, idx))
}

fn worst_contingency_gaps(run: &StudyRun) -> Result<LimitGaps> {
    let (day, t, idx) = contingency_scenarios(run)?;
    let mut worst = LimitGaps {
        eta_nadir: -1.0,
        eta_rocof: -1.0,
        eta_ss: -1.0,
    };
    for s in idx {
        let series = posthoc_gaps(day.values(), &day.instance, s)?;
        worst = worst.max(series.hours[t]);
    }
    Ok(worst)
}

/// Outage whose post-hoc nadir is worst in `run` at the contingency hour.
fn worst_outage(run: &StudyRun) -> Result<String> {
    let (day, t, idx) = contingency_scenarios(run)?;
    let mut best: Option<(f64, String)> = None;
    for s in idx {
        let eta = posthoc_gaps(day.values(), &day.instance, s)?.hours[t].eta_nadir;
        let id = day.instance.tree.scenarios[s].outage.clone().unwrap_or_default();
        if best.as_ref().is_none_or(|(b, _)| eta > *b) {
            best = Some((eta, id));
        }
    }
    best.map(|(_, id)| id)
        .ok_or_else(|| GridError::InvalidParameter("no contingency scenario at the contingency hour".into()))
}

fn summarize_run(run: &StudyRun, trace_outage: &str) -> Result<RunSummary> {
    let mut committed = Vec::new();
    let mut inertia = Vec::new();
    let mut gaps = Vec::new();
    let outages: Vec<String> = run.clouds.iter().map(|(id, _)| id.clone()).collect();
    for day in &run.days {
        let v = day.values();
        for t in 0..HOURS_PER_DAY {
            committed.push(v.commitment.iter().filter(|row| row[t]).count());
            // Scenario 0 is the intact system with the first wind scenario.
            inertia.push(v.aggregate(&day.instance, 0, t)?.m_eff());
            gaps.push(outage_gaps(v, &day.instance, &outages, t)?);
        }
    }
    let (day, t, idx) = contingency_scenarios(run)?;
    let s = idx
        .into_iter()
        .find(|&s| day.instance.tree.scenarios[s].outage.as_deref() == Some(trace_outage))
        .ok_or_else(|| GridError::InvalidParameter(format!("no scenario for outage {trace_outage}")))?;
    let full = frequency_trace(day.values(), &day.instance, s, t)?;
    let stride = (TRACE_STEP_S / DEFAULT_DT_S).round() as usize;
    let trace = full
        .t_s
        .iter()
        .zip(&full.delta_f_hz)
        .step_by(stride)
        .map(|(&t, &f)| (t, f))
        .collect();
    Ok(RunSummary {
        label: run.label().to_string(),
        committed,
        inertia,
        gaps,
        contingency_gaps: worst_contingency_gaps(run)?,
        day_costs: run.days.iter().map(|d| d.values().costs).collect(),
        day_status: run.days.iter().map(|d| d.solution.status).collect(),
        day_mip_gap: run.days.iter().map(|d| d.solution.mip_gap).collect(),
        trace,
        membership_checked: run.membership_checked,
    })
}

/// Condense a run without and a run with frequency constraints.
pub fn summarize(off: &StudyRun, on: &StudyRun) -> Result<StudyResults> {
    if off.config.fc_enabled || !on.config.fc_enabled {
        return Err(GridError::InvalidParameter(
            "expected an fc_off and an fc_on run".into(),
        ));
    }
    let trace_outage = worst_outage(off)?;
    Ok(StudyResults {
        config: on.config.clone(),
        solver: on.backend.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        runs: vec![summarize_run(off, &trace_outage)?, summarize_run(on, &trace_outage)?],
        trace_outage,
    })
}

pub fn write_results(results: &StudyResults, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(results)? + "\n";
    fs::write(path, text).map_err(|e| GridError::io(path, e))
}

pub fn read_results(path: &Path) -> Result<StudyResults> {
    let text = fs::read_to_string(path).map_err(|e| GridError::io(path, e))?;
    let results: StudyResults = serde_json::from_str(&text)?;
    if results.runs.len() != 2 {
        return Err(GridError::InvalidParameter("results must hold exactly two runs".into()));
    }
    Ok(results)
}

fn pct(off: f64, on: f64) -> String {
    if off == 0.0 {
        String::new()
    } else {
        format!("{:.4}", 100.0 * (on - off) / off.abs())
    }
}

fn write_csv(dir: &Path, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush().map_err(|e| GridError::io(&path, e))
}

/// Render `commitments.csv`, `inertia.csv`, `gaps.csv`, `costs.csv`,
/// `trace_h<hour>.csv` and `study_manifest.json` into `dir`.
pub fn write_report(results: &StudyResults, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| GridError::io(dir, e))?;
    let [off, on] = [&results.runs[0], &results.runs[1]];
    let hours = off.committed.len();

    let rows = (0..hours)
        .map(|h| {
            vec![
                (h + 1).to_string(),
                off.committed[h].to_string(),
                on.committed[h].to_string(),
            ]
        })
        .collect();
    write_csv(dir, "commitments.csv", &["hour", "fc_off", "fc_on"], rows)?;

    let rows = (0..hours)
        .map(|h| {
            vec![
                (h + 1).to_string(),
                off.inertia[h].to_string(),
                on.inertia[h].to_string(),
            ]
        })
        .collect();
    write_csv(dir, "inertia.csv", &["hour", "fc_off", "fc_on"], rows)?;

    let mut rows = Vec::new();
    for run in [off, on] {
        for (h, g) in run.gaps.iter().enumerate() {
            rows.push(vec![
                (h + 1).to_string(),
                run.label.clone(),
                g.eta_nadir.to_string(),
                g.eta_rocof.to_string(),
                g.eta_ss.to_string(),
            ]);
        }
    }
    write_csv(
        dir,
        "gaps.csv",
        &["hour", "run", "eta_nadir", "eta_rocof", "eta_ss"],
        rows,
    )?;

    let day = results.config.contingency_day()?;
    let pick = |c: &CostBreakdown| [c.total, c.startup, c.operation, c.reserves, c.shed];
    let sum = |run: &RunSummary| {
        run.day_costs.iter().fold([0.0; 5], |mut acc, c| {
            for (a, x) in acc.iter_mut().zip(pick(c)) {
                *a += x;
            }
            acc
        })
    };
    let names = ["total", "startup", "operation", "reserves", "shed"];
    let mut rows = Vec::new();
    for (scope, a, b) in [
        (
            format!("day{day}"),
            pick(&off.day_costs[day - 1]),
            pick(&on.day_costs[day - 1]),
        ),
        ("all_days".to_string(), sum(off), sum(on)),
    ] {
        for k in 0..names.len() {
            rows.push(vec![
                scope.clone(),
                names[k].to_string(),
                a[k].to_string(),
                b[k].to_string(),
                pct(a[k], b[k]),
            ]);
        }
    }
    write_csv(
        dir,
        "costs.csv",
        &["scope", "category", "fc_off", "fc_on", "diff_pct"],
        rows,
    )?;

    let mut rows = Vec::new();
    for run in [off, on] {
        for &(t, f) in &run.trace {
            rows.push(vec![run.label.clone(), t.to_string(), f.to_string()]);
        }
    }
    let trace_name = format!("trace_h{}.csv", results.config.contingency_hour);
    write_csv(dir, &trace_name, &["run", "t_s", "delta_f_hz"], rows)?;

    let manifest = serde_json::json!({
        "config": results.config,
        "seed": results.config.seed,
        "solver": results.solver,
        "versions": { "gridfreq": results.version },
        "trace_outage": results.trace_outage,
        "files": ["commitments.csv", "inertia.csv", "gaps.csv", "costs.csv", trace_name],
    });
    let path = dir.join("study_manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(|e| GridError::io(&path, e))
}
