use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{GridError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from: String,
    pub to: String,
    /// MW per radian of angle difference.
    pub susceptance: f64,
    /// MW, both directions.
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindFarm {
    pub id: String,
    pub bus: String,
    /// Installed capacity, MW.
    pub capacity: f64,
}

/// DC network with hourly nodal demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub nodes: Vec<String>,
    pub lines: Vec<Line>,
    /// Node id to hourly MW.
    pub demand: BTreeMap<String, Vec<f64>>,
    /// Value of lost load, $/MWh.
    pub voll: f64,
    #[serde(default)]
    pub wind_farms: Vec<WindFarm>,
    pub reference_buses: Vec<String>,
}

impl Network {
    pub fn node_index(&self, id: &str) -> Result<usize> {
        self.nodes
            .iter()
            .position(|n| n == id)
            .ok_or_else(|| GridError::Network(format!("unknown node {id}")))
    }

    pub fn hours(&self) -> usize {
        self.demand.values().map(Vec::len).max().unwrap_or(0)
    }

    /// Demand at node index `n`, hour `t`; zero for nodes without a series.
    pub fn demand_at(&self, n: usize, t: usize) -> f64 {
        self.demand
            .get(&self.nodes[n])
            .and_then(|s| s.get(t))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn max_demand(&self) -> f64 {
        (0..self.hours())
            .map(|t| (0..self.nodes.len()).map(|n| self.demand_at(n, t)).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Demand for hours `start..start + len`.
    pub fn window(&self, start: usize, len: usize) -> Result<Network> {
        let mut out = self.clone();
        for (node, series) in &mut out.demand {
            if start + len > series.len() {
                return Err(GridError::Network(format!(
                    "demand at {node} has {} hours, window ends at {}",
                    series.len(),
                    start + len
                )));
            }
            *series = series[start..start + len].to_vec();
        }
        Ok(out)
    }

    /// Connected components as lists of node indices, each sorted.
    pub fn components(&self) -> Result<Vec<Vec<usize>>> {
        let n = self.nodes.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for line in &self.lines {
            let (a, b) = (self.node_index(&line.from)?, self.node_index(&line.to)?);
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..n {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().push(i);
        }
        Ok(groups.into_values().collect())
    }

    /// Reference node index per component.
    pub fn references(&self) -> Result<Vec<usize>> {
        let refs: BTreeSet<usize> = self
            .reference_buses
            .iter()
            .map(|r| self.node_index(r))
            .collect::<Result<_>>()?;
        self.components()?
            .into_iter()
            .map(|comp| {
                let found: Vec<usize> = comp.iter().copied().filter(|i| refs.contains(i)).collect();
                match found.as_slice() {
                    [one] => Ok(*one),
                    [] => Err(GridError::Network(format!(
                        "component containing {} has no reference bus",
                        self.nodes[comp[0]]
                    ))),
                    _ => Err(GridError::Network(format!(
                        "component containing {} has several reference buses",
                        self.nodes[comp[0]]
                    ))),
                }
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let distinct: BTreeSet<&String> = self.nodes.iter().collect();
        if distinct.len() != self.nodes.len() || self.nodes.is_empty() {
            return Err(GridError::Network("node ids must be nonempty and unique".into()));
        }
        for line in &self.lines {
            self.node_index(&line.from)?;
            self.node_index(&line.to)?;
            if line.from == line.to {
                return Err(GridError::Network(format!("line {} loops on itself", line.from)));
            }
            if !(line.capacity > 0.0) || !(line.susceptance > 0.0) {
                return Err(GridError::Network(format!(
                    "line {}-{} needs positive capacity and susceptance",
                    line.from, line.to
                )));
            }
        }
        let hours = self.hours();
        for (node, series) in &self.demand {
            self.node_index(node)?;
            if series.len() != hours {
                return Err(GridError::Network(format!("demand at {node} is ragged")));
            }
            if series.iter().any(|&d| !(d >= 0.0)) {
                return Err(GridError::Network(format!("negative demand at {node}")));
            }
        }
        for farm in &self.wind_farms {
            self.node_index(&farm.bus)?;
            if !(farm.capacity >= 0.0) {
                return Err(GridError::Network(format!("wind farm {} capacity", farm.id)));
            }
        }
        if !(self.voll >= 0.0) {
            return Err(GridError::Network("value of lost load must be nonnegative".into()));
        }
        self.references()?;
        Ok(())
    }
}
