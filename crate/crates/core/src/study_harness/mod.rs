//! Rolling multi-day studies: one UC per day with state carried across day
//! boundaries, frequency constraints switched on from a given day, post-hoc
//! re-evaluation of the frequency metrics and report files.
//!
//! Hours in configs and reports are 1-based over the whole study
//! (hour 1 is the first hour of day 1).

mod posthoc;
mod report;

use serde::{Deserialize, Serialize};

use crate::error::{GridError, Result};
use crate::nadir_linearization::{
    enumerate_commitments, extract_bounds, nadir_grid, verify_bounds, CommitmentPoint, FitOptions,
};
use crate::scenarios::{build_tree, ContingencyModel, WindScenario};
use crate::uc_core::{
    solve, FreqMode, InitialState, MilpBackend, SolveOptions, SystemData, UcInstance, UcSolution, UcValues,
};

pub use posthoc::{check_membership, frequency_trace, outage_gaps, posthoc_gaps, ConstraintGapSeries};
pub use report::{read_results, summarize, write_report, write_results, RunSummary, StudyResults, TRACE_STEP_S};

pub const HOURS_PER_DAY: usize = 24;

/// Enumerated commitment points per outage unit id.
pub type OutageClouds = Vec<(String, Vec<CommitmentPoint>)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreqMethod {
    Bounds,
    Pwl,
}

fn d_days() -> usize {
    5
}
fn d_fc_start() -> usize {
    3
}
fn d_hour() -> usize {
    67
}
fn d_method() -> FreqMethod {
    FreqMethod::Bounds
}
fn d_segments() -> usize {
    3
}
fn d_gap() -> f64 {
    1e-4
}
fn d_time() -> f64 {
    600.0
}
fn d_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    #[serde(default = "d_days")]
    pub n_days: usize,
    /// First day (1-based) with frequency constraints.
    #[serde(default = "d_fc_start")]
    pub fc_start_day: usize,
    /// 1-based study hour at which the outages may occur.
    #[serde(default = "d_hour")]
    pub contingency_hour: usize,
    #[serde(default = "d_method")]
    pub freq_method: FreqMethod,
    #[serde(default = "d_segments")]
    pub pwl_segments: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_gap")]
    pub mip_rel_gap: f64,
    #[serde(default = "d_time")]
    pub time_limit_s: f64,
    /// Off gives the reference run without frequency constraints.
    #[serde(default = "d_true")]
    pub fc_enabled: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            n_days: d_days(),
            fc_start_day: d_fc_start(),
            contingency_hour: d_hour(),
            freq_method: d_method(),
            pwl_segments: d_segments(),
            seed: 0,
            mip_rel_gap: d_gap(),
            time_limit_s: d_time(),
            fc_enabled: true,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_days == 0 {
            return Err(GridError::InvalidParameter("study needs at least one day".into()));
        }
        if !(1..=self.n_days).contains(&self.fc_start_day) {
            return Err(GridError::InvalidParameter(format!(
                "fc_start_day {} outside 1..={}",
                self.fc_start_day, self.n_days
            )));
        }
        let day = self.contingency_day()?;
        if day < self.fc_start_day || day > self.n_days {
            return Err(GridError::InvalidParameter(format!(
                "contingency hour {} falls on day {day}, outside the constrained days {}..={}",
                self.contingency_hour, self.fc_start_day, self.n_days
            )));
        }
        if self.pwl_segments == 0 {
            return Err(GridError::InvalidParameter("pwl_segments must be positive".into()));
        }
        if !(self.mip_rel_gap >= 0.0) || !(self.time_limit_s > 0.0) {
            return Err(GridError::InvalidParameter("invalid solver settings".into()));
        }
        Ok(())
    }

    /// 1-based day holding the contingency hour.
    pub fn contingency_day(&self) -> Result<usize> {
        if self.contingency_hour == 0 {
            return Err(GridError::InvalidParameter("hours are 1-based".into()));
        }
        Ok((self.contingency_hour - 1) / HOURS_PER_DAY + 1)
    }

    pub fn horizon(&self) -> usize {
        self.n_days * HOURS_PER_DAY
    }

    pub fn without_fc(&self) -> Self {
        Self {
            fc_enabled: false,
            ..self.clone()
        }
    }

    fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            mip_rel_gap: self.mip_rel_gap,
            time_limit_s: self.time_limit_s,
            relax_integrality: false,
        }
    }
}

/// One solved day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayResult {
    /// 1-based.
    pub day: usize,
    pub instance: UcInstance,
    pub solution: UcSolution,
}

impl DayResult {
    pub fn values(&self) -> &UcValues {
        self.solution.values.as_ref().expect("days are stored only when solved")
    }

    /// 1-based study hour of local hour `t`.
    pub fn study_hour(&self, t: usize) -> usize {
        (self.day - 1) * HOURS_PER_DAY + t + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRun {
    pub config: StudyConfig,
    pub backend: String,
    pub days: Vec<DayResult>,
    /// Enumerated points per outage, kept for the membership check.
    pub clouds: OutageClouds,
    /// Contingency scenario-hours whose aggregates were checked against the
    /// enumerated clouds.
    pub membership_checked: usize,
}

impl StudyRun {
    pub fn label(&self) -> &'static str {
        if self.config.fc_enabled {
            "fc_on"
        } else {
            "fc_off"
        }
    }

    /// Day and local hour of a 1-based study hour.
    pub fn locate(&self, hour: usize) -> Option<(&DayResult, usize)> {
        let idx = hour.checked_sub(1)?;
        let day = self.days.get(idx / HOURS_PER_DAY)?;
        Some((day, idx % HOURS_PER_DAY))
    }
}

/// Frequency rows for every credible outage of `system`.
pub fn linearize_outages(
    system: &SystemData,
    method: FreqMethod,
    segments: usize,
    seed: u64,
) -> Result<(FreqMode, OutageClouds)> {
    let outages = system
        .contingency
        .as_ref()
        .map(|c| c.outages.clone())
        .unwrap_or_default();
    let mut clouds = Vec::new();
    let mut bounds = std::collections::BTreeMap::new();
    let mut fits = std::collections::BTreeMap::new();
    for id in outages {
        let pts = enumerate_commitments(&system.units, &id, &system.fleet, &system.limits, system.t_turbine)?;
        match method {
            FreqMethod::Bounds => {
                let b = extract_bounds(&pts, &system.limits)?;
                let check = verify_bounds(&pts, &b, &system.limits);
                if check.admitted_unsafe != 0 {
                    return Err(GridError::InvalidParameter(format!(
                        "bounds for {id} admit {} unsafe patterns",
                        check.admitted_unsafe
                    )));
                }
                bounds.insert(id.clone(), b);
            }
            FreqMethod::Pwl => {
                let grid = nadir_grid(&pts, 1, system.t_turbine)?;
                let opts = FitOptions {
                    n_segments: segments,
                    seed,
                    ..FitOptions::default()
                };
                fits.insert(id.clone(), grid.fit(&opts, None)?);
            }
        }
        clouds.push((id, pts));
    }
    let mode = match method {
        FreqMethod::Bounds => FreqMode::Bounds { bounds },
        FreqMethod::Pwl => FreqMode::Pwl { fits },
    };
    Ok((mode, clouds))
}

/// State at the start of the next day from the last hour of this one.
pub fn carry_over(previous: &[InitialState], values: &UcValues) -> Vec<InitialState> {
    previous
        .iter()
        .enumerate()
        .map(|(i, prev)| {
            let row = &values.commitment[i];
            let last = *row.last().expect("nonempty day");
            let run = row.iter().rev().take_while(|&&on| on == last).count();
            let hours_in_state = if run == row.len() && prev.on == last {
                prev.hours_in_state.saturating_add(run)
            } else {
                run
            };
            InitialState {
                on: last,
                output_mw: if last { *values.dispatch[i].last().unwrap() } else { 0.0 },
                hours_in_state,
            }
        })
        .collect()
}

/// Build the instance for 1-based `day`.
pub fn day_instance(
    system: &SystemData,
    wind: &[WindScenario],
    config: &StudyConfig,
    day: usize,
    freq: &FreqMode,
    initial: Vec<InitialState>,
) -> Result<UcInstance> {
    let start = (day - 1) * HOURS_PER_DAY;
    let network = system.network()?.window(start, HOURS_PER_DAY)?;
    let winds: Vec<WindScenario> = wind
        .iter()
        .map(|w| w.window(start, HOURS_PER_DAY))
        .collect::<Result<_>>()?;
    let c_idx = config.contingency_hour - 1;
    let model = match &system.contingency {
        Some(c) if c_idx / HOURS_PER_DAY == day - 1 => {
            ContingencyModel::from_units(&system.units, &c.outages, c_idx % HOURS_PER_DAY, c.tau)?
        }
        _ => ContingencyModel::none(),
    };
    let tree = build_tree(&winds, &model, &system.units, system.s_base())?;
    let fc_day = config.fc_enabled && day >= config.fc_start_day;
    let instance = UcInstance {
        network,
        units: system.units.clone(),
        fleet: system.fleet.clone(),
        tree,
        limits: system.limits,
        t_turbine: system.t_turbine,
        freq: if fc_day { freq.clone() } else { FreqMode::Off },
        initial,
    };
    instance.validate()?;
    Ok(instance)
}

/// Solve `config.n_days` consecutive days.
pub fn run_study(
    system: &SystemData,
    wind: &[WindScenario],
    config: &StudyConfig,
    backend: &dyn MilpBackend,
) -> Result<StudyRun> {
    run_from(system, wind, config, backend, Vec::new())
}

/// The reference run without frequency constraints and the constrained run.
/// Days before `fc_start_day` are the same model in both and are solved once.
pub fn run_dual(
    system: &SystemData,
    wind: &[WindScenario],
    config: &StudyConfig,
    backend: &dyn MilpBackend,
) -> Result<(StudyRun, StudyRun)> {
    let off = run_study(system, wind, &config.without_fc(), backend)?;
    let shared = off.days[..config.fc_start_day - 1].to_vec();
    let on_config = StudyConfig {
        fc_enabled: true,
        ..config.clone()
    };
    let on = run_from(system, wind, &on_config, backend, shared)?;
    Ok((off, on))
}

fn run_from(
    system: &SystemData,
    wind: &[WindScenario],
    config: &StudyConfig,
    backend: &dyn MilpBackend,
    mut days: Vec<DayResult>,
) -> Result<StudyRun> {
    config.validate()?;
    let horizon = config.horizon();
    let net = system.network()?;
    if net.hours() < horizon {
        return Err(GridError::Instance(format!(
            "demand covers {} hours, the study needs {horizon}",
            net.hours()
        )));
    }
    let (freq, clouds) = linearize_outages(system, config.freq_method, config.pwl_segments, config.seed)?;
    let mut initial = system
        .initial
        .clone()
        .unwrap_or_else(|| vec![InitialState::fresh(); system.units.len()]);
    for d in &days {
        initial = carry_over(&initial, d.values());
    }
    let mut membership_checked = 0;
    for day in days.len() + 1..=config.n_days {
        let instance = day_instance(system, wind, config, day, &freq, initial.clone())?;
        let solution = solve(&instance, backend, &config.solve_options())?;
        let Some(values) = &solution.values else {
            return Err(GridError::DayFailed {
                day,
                status: format!("{:?}", solution.status),
            });
        };
        if matches!(instance.freq, FreqMode::Bounds { .. }) {
            membership_checked += check_membership(values, &instance, &clouds)?;
        }
        initial = carry_over(&initial, values);
        days.push(DayResult {
            day,
            instance,
            solution,
        });
    }
    Ok(StudyRun {
        config: config.clone(),
        backend: backend.name().to_string(),
        days,
        clouds,
        membership_checked,
    })
}
