use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::network::Network;
use super::solve::UcSolution;
use super::{FreqMode, InitialState, UcInstance};
use crate::error::{GridError, Result};
use crate::freq_dynamics::{system_base, ConverterFleet, FrequencyLimits, SynchronousUnit};
use crate::scenarios::{build_tree, ingest_wind_for, ContingencyModel, WindScenario};

fn default_t_turbine() -> f64 {
    5.0
}

fn default_tau() -> f64 {
    1.0
}

/// Credible outages and the hour they may occur.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencySpec {
    pub outages: Vec<String>,
    pub hour: usize,
    #[serde(default = "default_tau")]
    pub tau: f64,
}

/// Contents of a system file. Only `units` and `fleet` are required; the
/// rest is needed for solving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemData {
    pub units: Vec<SynchronousUnit>,
    pub fleet: ConverterFleet,
    #[serde(default)]
    pub limits: FrequencyLimits,
    #[serde(default = "default_t_turbine")]
    pub t_turbine: f64,
    #[serde(default)]
    pub network: Option<Network>,
    #[serde(default)]
    pub contingency: Option<ContingencySpec>,
    /// Wind CSV, relative to the system file.
    #[serde(default)]
    pub wind: Option<PathBuf>,
    #[serde(default)]
    pub initial: Option<Vec<InitialState>>,
    #[serde(default)]
    pub freq_mode: Option<FreqMode>,
}

/// Read and validate a system file, resolving the wind path.
pub fn load_system(path: &Path) -> Result<SystemData> {
    let text = fs::read_to_string(path).map_err(|e| GridError::io(path, e))?;
    let mut data: SystemData = serde_json::from_str(&text)?;
    if let Some(w) = &data.wind {
        if w.is_relative() {
            let base = path.parent().unwrap_or_else(|| Path::new("."));
            data.wind = Some(base.join(w));
        }
    }
    data.validate()?;
    Ok(data)
}

impl SystemData {
    pub fn validate(&self) -> Result<()> {
        if self.units.is_empty() {
            return Err(GridError::Instance("system has no units".into()));
        }
        for u in &self.units {
            u.validate()?;
        }
        self.fleet.validate()?;
        self.limits.validate()?;
        if let Some(net) = &self.network {
            net.validate()?;
            for u in &self.units {
                net.node_index(&u.bus)?;
            }
        }
        if let Some(c) = &self.contingency {
            self.contingency_model(c.hour)?.validate()?;
        }
        if let Some(init) = &self.initial {
            if init.len() != self.units.len() {
                return Err(GridError::Instance("initial states do not match units".into()));
            }
        }
        Ok(())
    }

    pub fn s_base(&self) -> f64 {
        system_base(&self.units, &self.fleet)
    }

    pub fn network(&self) -> Result<&Network> {
        self.network
            .as_ref()
            .ok_or_else(|| GridError::Instance("system file has no network".into()))
    }

    /// Contingency model with the event placed at `hour`.
    pub fn contingency_model(&self, hour: usize) -> Result<ContingencyModel> {
        match &self.contingency {
            Some(c) => ContingencyModel::from_units(&self.units, &c.outages, hour, c.tau),
            None => Ok(ContingencyModel::none()),
        }
    }

    pub fn load_wind(&self) -> Result<Vec<WindScenario>> {
        let path = self
            .wind
            .as_ref()
            .ok_or_else(|| GridError::Instance("system file names no wind data".into()))?;
        let farms: Vec<String> = self.network()?.wind_farms.iter().map(|f| f.id.clone()).collect();
        ingest_wind_for(path, &farms)
    }

    /// Single-run instance over the full demand horizon.
    pub fn instance(&self, wind: &[WindScenario], freq: FreqMode) -> Result<UcInstance> {
        let network = self.network()?.clone();
        let hour = self.contingency.as_ref().map_or(0, |c| c.hour);
        let model = self.contingency_model(hour)?;
        let tree = build_tree(wind, &model, &self.units, self.s_base())?;
        let instance = UcInstance {
            network,
            units: self.units.clone(),
            fleet: self.fleet.clone(),
            tree,
            limits: self.limits,
            t_turbine: self.t_turbine,
            freq,
            initial: self
                .initial
                .clone()
                .unwrap_or_else(|| vec![InitialState::fresh(); self.units.len()]),
        };
        instance.validate()?;
        Ok(instance)
    }
}

fn csv_writer(dir: &Path, name: &str) -> Result<csv::Writer<BufWriter<File>>> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| GridError::io(&path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

/// Write `commitment.csv`, `dispatch.csv`, `reserves.csv`, `recourse.csv`,
/// `flows.csv` and `costs.json` under `dir`.
pub fn write_solution(dir: &Path, instance: &UcInstance, solution: &UcSolution) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| GridError::io(dir, e))?;
    let summary = serde_json::json!({
        "status": solution.status,
        "objective": solution.objective,
        "mip_gap": solution.mip_gap,
        "backend": solution.backend,
        "freq_mode": solution.freq_mode,
        "costs": solution.values.as_ref().map(|v| v.costs),
    });
    let path = dir.join("costs.json");
    let text = serde_json::to_string_pretty(&summary)? + "\n";
    fs::write(&path, text).map_err(|e| GridError::io(&path, e))?;
    let Some(v) = &solution.values else {
        return Ok(());
    };
    let units = &instance.units;
    let net = &instance.network;
    let hours = instance.hours();

    let mut w = csv_writer(dir, "commitment.csv")?;
    w.write_record(["unit", "hour", "u", "y", "z"])?;
    for (i, u) in units.iter().enumerate() {
        for t in 0..hours {
            let b = |x: bool| if x { "1" } else { "0" };
            w.write_record([
                u.id.as_str(),
                &t.to_string(),
                b(v.commitment[i][t]),
                b(v.startup[i][t]),
                b(v.shutdown[i][t]),
            ])?;
        }
    }
    w.flush().map_err(|e| GridError::io(dir, e))?;

    let mut w = csv_writer(dir, "dispatch.csv")?;
    w.write_record(["kind", "id", "hour", "mw"])?;
    for (i, u) in units.iter().enumerate() {
        for t in 0..hours {
            w.write_record(["unit", u.id.as_str(), &t.to_string(), &v.dispatch[i][t].to_string()])?;
        }
    }
    for (farm, series) in &v.wind_da {
        for (t, mw) in series.iter().enumerate() {
            w.write_record(["wind", farm.as_str(), &t.to_string(), &mw.to_string()])?;
        }
    }
    w.flush().map_err(|e| GridError::io(dir, e))?;

    let mut w = csv_writer(dir, "reserves.csv")?;
    w.write_record(["scenario", "unit", "hour", "r_up_mw", "r_down_mw"])?;
    for sv in &v.scenarios {
        for (i, u) in units.iter().enumerate() {
            for t in 0..hours {
                w.write_record([
                    sv.id.as_str(),
                    u.id.as_str(),
                    &t.to_string(),
                    &sv.r_up[i][t].to_string(),
                    &sv.r_down[i][t].to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| GridError::io(dir, e))?;

    let mut w = csv_writer(dir, "recourse.csv")?;
    w.write_record(["scenario", "kind", "id", "hour", "mw"])?;
    for sv in &v.scenarios {
        for (farm, series) in &sv.spill {
            for (t, mw) in series.iter().enumerate() {
                w.write_record([sv.id.as_str(), "spill", farm.as_str(), &t.to_string(), &mw.to_string()])?;
            }
        }
        for (n, series) in sv.shed.iter().enumerate() {
            for (t, mw) in series.iter().enumerate() {
                w.write_record([
                    sv.id.as_str(),
                    "shed",
                    net.nodes[n].as_str(),
                    &t.to_string(),
                    &mw.to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| GridError::io(dir, e))?;

    let mut w = csv_writer(dir, "flows.csv")?;
    w.write_record(["stage", "scenario", "from", "to", "hour", "flow_mw"])?;
    let da = v.da_flows(instance)?;
    for (line, flows) in net.lines.iter().zip(&da) {
        for (t, f) in flows.iter().enumerate() {
            w.write_record([
                "da",
                "",
                line.from.as_str(),
                line.to.as_str(),
                &t.to_string(),
                &f.to_string(),
            ])?;
        }
    }
    for sv in &v.scenarios {
        for line in &net.lines {
            let a = net.node_index(&line.from)?;
            let b = net.node_index(&line.to)?;
            for t in 0..hours {
                let flow = line.susceptance * (sv.rt_angle[a][t] - sv.rt_angle[b][t]);
                w.write_record([
                    "rt",
                    sv.id.as_str(),
                    line.from.as_str(),
                    line.to.as_str(),
                    &t.to_string(),
                    &flow.to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| GridError::io(dir, e))?;
    Ok(())
}
