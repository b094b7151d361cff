use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Deserialize;

use super::WindScenario;
use crate::error::{GridError, Result};

#[derive(Debug, Deserialize)]
struct Record {
    scenario: String,
    farm: String,
    hour: usize,
    mw: f64,
}

fn wind_error(path: &Path, line: u64, message: impl Into<String>) -> GridError {
    GridError::WindData {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Read a `scenario,farm,hour,mw` file into equally likely scenarios.
///
/// Every scenario must cover the same farms over the same contiguous hour
/// range; the first scenario in the file fixes both.
pub fn ingest_wind(path: impl AsRef<Path>) -> Result<Vec<WindScenario>> {
    read_wind(path.as_ref(), None)
}

/// As [`ingest_wind`], also rejecting farms outside `known_farms`.
pub fn ingest_wind_for(path: impl AsRef<Path>, known_farms: &[String]) -> Result<Vec<WindScenario>> {
    read_wind(path.as_ref(), Some(known_farms))
}

type Cells = BTreeMap<String, BTreeMap<usize, f64>>;

fn read_wind(path: &Path, known: Option<&[String]>) -> Result<Vec<WindScenario>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => GridError::io(path, source),
            other => wind_error(path, 1, format!("{other:?}")),
        })?;

    // scenario -> (first line, farm -> hour -> mw), in file order
    let mut order: Vec<String> = Vec::new();
    let mut data: BTreeMap<String, (u64, Cells)> = BTreeMap::new();
    let mut reference_farms: Option<BTreeSet<String>> = None;

    let headers = reader.headers()?.clone();
    for result in reader.records() {
        let raw = result.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            wind_error(path, line, e.to_string())
        })?;
        let line = raw.position().map_or(0, |p| p.line());
        let record: Record = raw
            .deserialize(Some(&headers))
            .map_err(|e| wind_error(path, line, e.to_string()))?;
        if !record.mw.is_finite() || record.mw < 0.0 {
            return Err(wind_error(
                path,
                line,
                format!(
                    "negative or non-finite output {} MW for scenario {}, farm {}, hour {}",
                    record.mw, record.scenario, record.farm, record.hour
                ),
            ));
        }
        if let Some(farms) = known {
            if !farms.iter().any(|f| f == &record.farm) {
                return Err(wind_error(path, line, format!("unknown farm {}", record.farm)));
            }
        }
        if let Some(farms) = &reference_farms {
            if !farms.contains(&record.farm) && order[0] != record.scenario {
                return Err(wind_error(
                    path,
                    line,
                    format!("unknown farm {} (not in scenario {})", record.farm, order[0]),
                ));
            }
        }
        if !data.contains_key(&record.scenario) {
            if order.len() == 1 {
                reference_farms = Some(data[&order[0]].1.keys().cloned().collect());
            }
            order.push(record.scenario.clone());
            data.insert(record.scenario.clone(), (line, Cells::new()));
        }
        let cells = &mut data.get_mut(&record.scenario).expect("inserted above").1;
        let hours = cells.entry(record.farm.clone()).or_default();
        if hours.insert(record.hour, record.mw).is_some() {
            return Err(wind_error(
                path,
                line,
                format!(
                    "duplicate entry for scenario {}, farm {}, hour {}",
                    record.scenario, record.farm, record.hour
                ),
            ));
        }
    }

    if order.is_empty() {
        return Err(wind_error(path, 1, "no wind records"));
    }
    let (first_line, first_cells) = &data[&order[0]];
    let farms: Vec<String> = first_cells.keys().cloned().collect();
    let hours: Vec<usize> = first_cells
        .values()
        .next()
        .map(|h| h.keys().copied().collect())
        .unwrap_or_default();
    let contiguous = hours.windows(2).all(|w| w[1] == w[0] + 1);
    if !contiguous {
        return Err(wind_error(
            path,
            *first_line,
            format!("scenario {} has gaps in its hour range", order[0]),
        ));
    }

    let probability = 1.0 / order.len() as f64;
    order
        .iter()
        .map(|id| {
            let (line, cells) = &data[id];
            let these: Vec<&String> = cells.keys().collect();
            if these.len() != farms.len() || these.iter().zip(&farms).any(|(a, b)| *a != b) {
                return Err(wind_error(
                    path,
                    *line,
                    format!("scenario {id} covers farms {these:?}, expected {farms:?}"),
                ));
            }
            let mut realization = BTreeMap::new();
            for (farm, by_hour) in cells {
                let these: Vec<usize> = by_hour.keys().copied().collect();
                if these != hours {
                    return Err(wind_error(
                        path,
                        *line,
                        format!(
                            "scenario {id}, farm {farm}: {} hours, expected {} ({}..={})",
                            these.len(),
                            hours.len(),
                            hours[0],
                            hours[hours.len() - 1]
                        ),
                    ));
                }
                realization.insert(farm.clone(), by_hour.values().copied().collect());
            }
            Ok(WindScenario {
                id: id.clone(),
                probability,
                first_hour: hours[0],
                realization,
            })
        })
        .collect()
}

/// Write scenarios in the format read by [`ingest_wind`].
pub fn write_wind<W: std::io::Write>(scenarios: &[WindScenario], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["scenario", "farm", "hour", "mw"])?;
    for s in scenarios {
        for (farm, series) in &s.realization {
            for (k, mw) in series.iter().enumerate() {
                writer.write_record([
                    s.id.as_str(),
                    farm.as_str(),
                    &(s.first_hour + k).to_string(),
                    &mw.to_string(),
                ])?;
            }
        }
    }
    writer.flush().map_err(|e| GridError::io("<wind output>", e))?;
    Ok(())
}
