use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{CommitmentPoint, NadirBounds};
use crate::error::{GridError, Result};
use crate::freq_dynamics::FrequencyLimits;

/// Controls how many `m_lim` candidates are swept.
///
/// When `candidates × points` fits in `work_budget` every distinct inertia
/// value is tried. Otherwise `quantiles` evenly spaced candidates are tried,
/// the bracket around the best one is kept, and the search repeats on that
/// bracket until it fits the budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSearch {
    pub work_budget: usize,
    pub quantiles: usize,
}

impl Default for BoundSearch {
    fn default() -> Self {
        Self {
            work_budget: 1 << 24,
            quantiles: 16,
        }
    }
}

/// Result of re-checking a box against a point cloud.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundsCheck {
    pub admitted_safe: usize,
    pub admitted_unsafe: usize,
}

fn is_safe(p: &CommitmentPoint, limits: &FrequencyLimits) -> bool {
    p.nadir_hz <= limits.nadir_lim
}

/// Count the points admitted by `bounds`, split by safety under `limits`.
pub fn verify_bounds(points: &[CommitmentPoint], bounds: &NadirBounds, limits: &FrequencyLimits) -> BoundsCheck {
    let mut check = BoundsCheck {
        admitted_safe: 0,
        admitted_unsafe: 0,
    };
    for p in points.iter().filter(|p| bounds.admits(p.m, p.r_g, p.f_g)) {
        if is_safe(p, limits) {
            check.admitted_safe += 1;
        } else {
            check.admitted_unsafe += 1;
        }
    }
    check
}

/// Largest box admitting only safe points, with the default search settings.
pub fn extract_bounds(points: &[CommitmentPoint], limits: &FrequencyLimits) -> Result<NadirBounds> {
    extract_bounds_with(points, limits, &BoundSearch::default())
}

#[derive(Clone, Copy)]
struct Entry {
    m: f64,
    r: f64,
    f_rank: usize,
    safe: bool,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    count: usize,
    m_lim: f64,
    r_lim: f64,
    f_lim: f64,
}

impl Candidate {
    /// More admitted safe points first, then smaller thresholds.
    fn better_than(&self, other: &Option<Candidate>) -> bool {
        let Some(o) = other else { return true };
        match self.count.cmp(&o.count) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => {
                (self.m_lim, self.r_lim, self.f_lim).partial_cmp(&(o.m_lim, o.r_lim, o.f_lim)) == Some(Ordering::Less)
            }
        }
    }
}

struct Fenwick(Vec<u32>);

impl Fenwick {
    fn new(n: usize) -> Self {
        Self(vec![0; n + 1])
    }

    fn add(&mut self, i: usize) {
        let mut i = i + 1;
        while i < self.0.len() {
            self.0[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Number of inserted ranks `≤ i`.
    fn prefix(&self, i: usize) -> usize {
        let mut i = i + 1;
        let mut s = 0usize;
        while i > 0 {
            s += self.0[i] as usize;
            i -= i & i.wrapping_neg();
        }
        s
    }
}

struct Cloud {
    /// Sorted by `r` descending.
    entries: Vec<Entry>,
    f_values: Vec<f64>,
    /// Distinct inertia values, ascending.
    m_values: Vec<f64>,
    /// Inertia of safe points, ascending.
    safe_m: Vec<f64>,
}

impl Cloud {
    fn new(points: &[CommitmentPoint], limits: &FrequencyLimits) -> Self {
        let mut f_values: Vec<f64> = points.iter().map(|p| p.f_g).collect();
        f_values.sort_by(f64::total_cmp);
        f_values.dedup();
        let mut m_values: Vec<f64> = points.iter().map(|p| p.m).collect();
        m_values.sort_by(f64::total_cmp);
        m_values.dedup();
        let mut safe_m: Vec<f64> = points.iter().filter(|p| is_safe(p, limits)).map(|p| p.m).collect();
        safe_m.sort_by(f64::total_cmp);
        let mut entries: Vec<Entry> = points
            .iter()
            .map(|p| Entry {
                m: p.m,
                r: p.r_g,
                f_rank: f_values.partition_point(|&v| v < p.f_g),
                safe: is_safe(p, limits),
            })
            .collect();
        entries.sort_by(|a, b| b.r.total_cmp(&a.r));
        Self {
            entries,
            f_values,
            m_values,
            safe_m,
        }
    }

    /// Safe points with inertia at least `m_lim`: an upper bound on what any
    /// box with that inertia threshold can admit.
    fn upper_bound(&self, m_lim: f64) -> usize {
        self.safe_m.len() - self.safe_m.partition_point(|&v| v < m_lim)
    }

    /// Best `(r_lim, f_lim)` for a fixed `m_lim`.
    ///
    /// Lowering `r_lim` one distinct value at a time, the smallest admissible
    /// `f_lim` is the first cloud value above the largest `f_g` of any unsafe
    /// point already in the slab.
    fn sweep(&self, m_lim: f64) -> Option<Candidate> {
        let mut tree = Fenwick::new(self.f_values.len());
        let mut inserted = 0usize;
        let mut worst_unsafe: Option<usize> = None;
        let mut best: Option<Candidate> = None;
        let mut i = 0;
        while i < self.entries.len() {
            let r = self.entries[i].r;
            while i < self.entries.len() && self.entries[i].r == r {
                let e = self.entries[i];
                i += 1;
                if e.m < m_lim {
                    continue;
                }
                if e.safe {
                    tree.add(e.f_rank);
                    inserted += 1;
                } else {
                    worst_unsafe = Some(worst_unsafe.map_or(e.f_rank, |w| w.max(e.f_rank)));
                }
            }
            let (count, f_rank) = match worst_unsafe {
                None => (inserted, 0),
                Some(w) => (inserted - tree.prefix(w), w + 1),
            };
            if count == 0 || f_rank >= self.f_values.len() {
                continue;
            }
            if best.is_none_or(|b| count >= b.count) {
                best = Some(Candidate {
                    count,
                    m_lim,
                    r_lim: r,
                    f_lim: self.f_values[f_rank],
                });
            }
        }
        best
    }

    fn consider(&self, idx: usize, best: &mut Option<Candidate>) -> bool {
        let m_lim = self.m_values[idx];
        if let Some(b) = best {
            let ub = self.upper_bound(m_lim);
            if ub < b.count || (ub == b.count && m_lim > b.m_lim) {
                return false;
            }
        }
        match self.sweep(m_lim) {
            Some(c) if c.better_than(best) => {
                *best = Some(c);
                true
            }
            _ => false,
        }
    }
}

/// Largest box `f_g ≥ f_lim, r_g ≥ r_lim, m ≥ m_lim` that admits no unsafe
/// point of the cloud, maximising the admitted safe count.
///
/// Thresholds are drawn from coordinate values present in the cloud. Ties go
/// to the smaller `m_lim`, then the smaller `r_lim`. Safety is recomputed
/// from `limits`.
pub fn extract_bounds_with(
    points: &[CommitmentPoint],
    limits: &FrequencyLimits,
    search: &BoundSearch,
) -> Result<NadirBounds> {
    let delta_p = points.first().map(|p| p.delta_p).unwrap_or(0.0);
    let cloud = Cloud::new(points, limits);
    if cloud.safe_m.is_empty() {
        return Err(GridError::NadirUnattainable);
    }
    let n = cloud.entries.len().max(1);
    let budget_candidates = (search.work_budget / n).max(1);
    let quantiles = search.quantiles.max(3);

    let mut best: Option<Candidate> = None;
    let (mut lo, mut hi) = (0usize, cloud.m_values.len() - 1);
    loop {
        let span = hi - lo + 1;
        if span <= budget_candidates.max(quantiles) {
            for idx in lo..=hi {
                cloud.consider(idx, &mut best);
            }
            break;
        }
        let samples: Vec<usize> = (0..quantiles).map(|q| lo + q * (span - 1) / (quantiles - 1)).collect();
        let mut winner = None;
        for (q, &idx) in samples.iter().enumerate() {
            if cloud.consider(idx, &mut best) {
                winner = Some(q);
            }
        }
        let Some(q) = winner else { break };
        let new_lo = samples[q.saturating_sub(1)];
        let new_hi = samples[(q + 1).min(quantiles - 1)];
        if new_hi - new_lo + 1 >= span {
            break;
        }
        lo = new_lo;
        hi = new_hi;
    }

    let best = best.ok_or(GridError::NadirUnattainable)?;
    Ok(NadirBounds {
        delta_p,
        f_lim: best.f_lim,
        r_lim: best.r_lim,
        m_lim: best.m_lim,
    })
}
