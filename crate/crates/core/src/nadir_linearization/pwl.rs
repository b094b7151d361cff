use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CommitmentPoint, PwlFit, PwlSegment};
use crate::error::{GridError, Result};
use crate::freq_dynamics::{nadir_pu, AggregateParams, FrequencyLimits};

/// Settings for alternating max-affine fitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub n_segments: usize,
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            n_segments: 3,
            restarts: 20,
            max_iters: 100,
            seed: 0,
        }
    }
}

/// `coef · x + intercept`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine<const D: usize> {
    pub coef: [f64; D],
    pub intercept: f64,
}

impl<const D: usize> Affine<D> {
    pub fn eval(&self, x: &[f64; D]) -> f64 {
        self.coef.iter().zip(x).map(|(c, v)| c * v).sum::<f64>() + self.intercept
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxAffineFit<const D: usize> {
    pub pieces: Vec<Affine<D>>,
    pub rmse: f64,
    /// Sum of squared residuals after each accepted iteration of the run
    /// that produced `pieces`.
    pub objective_history: Vec<f64>,
}

impl<const D: usize> MaxAffineFit<D> {
    pub fn eval(&self, x: &[f64; D]) -> f64 {
        max_eval(&self.pieces, x).0
    }
}

fn max_eval<const D: usize>(pieces: &[Affine<D>], x: &[f64; D]) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, 0);
    for (k, p) in pieces.iter().enumerate() {
        let v = p.eval(x);
        if v > best.0 {
            best = (v, k);
        }
    }
    best
}

/// Inputs shifted and scaled per coordinate so the least-squares systems
/// stay well conditioned.
struct Scaling<const D: usize> {
    mean: [f64; D],
    scale: [f64; D],
}

impl<const D: usize> Scaling<D> {
    fn new(xs: &[[f64; D]]) -> Self {
        let n = xs.len() as f64;
        let mut mean = [0.0; D];
        let mut scale = [1.0; D];
        for j in 0..D {
            mean[j] = xs.iter().map(|x| x[j]).sum::<f64>() / n;
            let var = xs.iter().map(|x| (x[j] - mean[j]).powi(2)).sum::<f64>() / n;
            if var > 0.0 {
                scale[j] = var.sqrt();
            }
        }
        Self { mean, scale }
    }

    fn forward(&self, x: &[f64; D]) -> [f64; D] {
        std::array::from_fn(|j| (x[j] - self.mean[j]) / self.scale[j])
    }

    fn to_scaled(&self, a: &Affine<D>) -> Affine<D> {
        let coef: [f64; D] = std::array::from_fn(|j| a.coef[j] * self.scale[j]);
        let intercept = a.intercept + (0..D).map(|j| a.coef[j] * self.mean[j]).sum::<f64>();
        Affine { coef, intercept }
    }

    fn to_original(&self, a: &Affine<D>) -> Affine<D> {
        let coef: [f64; D] = std::array::from_fn(|j| a.coef[j] / self.scale[j]);
        let intercept = a.intercept - (0..D).map(|j| coef[j] * self.mean[j]).sum::<f64>();
        Affine { coef, intercept }
    }
}

/// Least-squares affine fit on the selected rows; minimum-norm when the
/// rows do not determine a unique plane.
fn fit_affine<const D: usize>(xs: &[[f64; D]], ys: &[f64], rows: &[usize]) -> Option<Affine<D>> {
    let n = D + 1;
    let mut ata = DMatrix::<f64>::zeros(n, n);
    let mut aty = DVector::<f64>::zeros(n);
    let mut row = vec![0.0; n];
    for &i in rows {
        row[..D].copy_from_slice(&xs[i]);
        row[D] = 1.0;
        for a in 0..n {
            aty[a] += row[a] * ys[i];
            for b in a..n {
                ata[(a, b)] += row[a] * row[b];
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            ata[(a, b)] = ata[(b, a)];
        }
    }
    let eps = 1e-12 * ata.norm().max(f64::MIN_POSITIVE);
    let sol = ata.svd(true, true).solve(&aty, eps).ok()?;
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(Affine {
        coef: std::array::from_fn(|j| sol[j]),
        intercept: sol[D],
    })
}

struct Fitter<'a, const D: usize> {
    xs: &'a [[f64; D]],
    ys: &'a [f64],
    all: Vec<usize>,
}

struct Run<const D: usize> {
    pieces: Vec<Affine<D>>,
    objective: f64,
    history: Vec<f64>,
}

impl<'a, const D: usize> Fitter<'a, D> {
    fn objective(&self, pieces: &[Affine<D>]) -> f64 {
        self.xs
            .iter()
            .zip(self.ys)
            .map(|(x, y)| (max_eval(pieces, x).0 - y).powi(2))
            .sum()
    }

    fn assign(&self, pieces: &[Affine<D>]) -> Vec<usize> {
        self.xs.iter().map(|x| max_eval(pieces, x).1).collect()
    }

    fn clusters(&self, labels: &[usize], k: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); k];
        for (i, &l) in labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    fn refit(&self, clusters: &[Vec<usize>], previous: &[Affine<D>]) -> Vec<Affine<D>> {
        clusters
            .iter()
            .zip(previous)
            .map(|(rows, prev)| {
                if rows.is_empty() {
                    *prev
                } else {
                    fit_affine(self.xs, self.ys, rows).unwrap_or(*prev)
                }
            })
            .collect()
    }

    /// Alternate assignment and refitting from `pieces`, accepting only
    /// steps that do not raise the objective.
    fn iterate(&self, mut pieces: Vec<Affine<D>>, max_iters: usize) -> Run<D> {
        let mut objective = self.objective(&pieces);
        let mut history = vec![objective];
        let mut labels = self.assign(&pieces);
        for _ in 0..max_iters {
            let clusters = self.clusters(&labels, pieces.len());
            let next = self.refit(&clusters, &pieces);
            let next_obj = self.objective(&next);
            if !next_obj.is_finite() || next_obj > objective {
                break;
            }
            let next_labels = self.assign(&next);
            let converged = next_labels == labels && next == pieces;
            pieces = next;
            objective = next_obj;
            history.push(objective);
            labels = next_labels;
            if converged {
                break;
            }
        }
        Run {
            pieces,
            objective,
            history,
        }
    }

    /// Pieces fitted on the Voronoi cells of `k` random sample points.
    fn random_start(&self, k: usize, rng: &mut ChaCha8Rng) -> Vec<Affine<D>> {
        let centers: Vec<usize> = sample(rng, self.xs.len(), k).into_vec();
        let mut cells = vec![Vec::new(); k];
        for (i, x) in self.xs.iter().enumerate() {
            let nearest = (0..k)
                .min_by(|&a, &b| dist2(x, &self.xs[centers[a]]).total_cmp(&dist2(x, &self.xs[centers[b]])))
                .unwrap_or(0);
            cells[nearest].push(i);
        }
        let global = fit_affine(self.xs, self.ys, &self.all).unwrap_or(Affine {
            coef: [0.0; D],
            intercept: 0.0,
        });
        self.refit(&cells, &vec![global; k])
    }

    /// Extend `warm` to `k` pieces by splitting the cluster with the largest
    /// squared error; falls back to duplicating pieces when a split does not
    /// help, so the objective never exceeds that of `warm`.
    fn grow(&self, warm: &[Affine<D>], k: usize) -> Vec<Affine<D>> {
        let mut pieces = warm.to_vec();
        while pieces.len() < k {
            let labels = self.assign(&pieces);
            let clusters = self.clusters(&labels, pieces.len());
            let sse = |rows: &Vec<usize>| -> f64 {
                rows.iter()
                    .map(|&i| (max_eval(&pieces, &self.xs[i]).0 - self.ys[i]).powi(2))
                    .sum()
            };
            let worst = (0..clusters.len())
                .max_by(|&a, &b| sse(&clusters[a]).total_cmp(&sse(&clusters[b])))
                .unwrap_or(0);
            let base = self.objective(&pieces);
            let mut extended = pieces.clone();
            extended.push(pieces[worst]);
            if let Some(split) = self.split(&pieces, &clusters[worst]) {
                let mut candidate = pieces.clone();
                candidate.push(split);
                if self.objective(&candidate) <= base {
                    extended = candidate;
                }
            }
            pieces = extended;
        }
        pieces
    }

    /// A new piece fitted on the half of `rows` nearest the worst-fitted point.
    fn split(&self, pieces: &[Affine<D>], rows: &[usize]) -> Option<Affine<D>> {
        let anchor = *rows.iter().max_by(|&&a, &&b| {
            let ea = (max_eval(pieces, &self.xs[a]).0 - self.ys[a]).abs();
            let eb = (max_eval(pieces, &self.xs[b]).0 - self.ys[b]).abs();
            ea.total_cmp(&eb)
        })?;
        let mut by_dist: Vec<usize> = rows.to_vec();
        by_dist.sort_by(|&a, &b| dist2(&self.xs[a], &self.xs[anchor]).total_cmp(&dist2(&self.xs[b], &self.xs[anchor])));
        by_dist.truncate((rows.len() / 2).max(1));
        fit_affine(self.xs, self.ys, &by_dist)
    }
}

fn dist2<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Fit `max_k (a_k · x + b_k)` to `(xs, ys)` by alternating assignment and
/// least squares, keeping the best of `opts.restarts` seeded random starts.
///
/// With `warm`, one extra run starts from `warm` grown to
/// `opts.n_segments` pieces, so the result is never worse than `warm`.
pub fn fit_max_affine<const D: usize>(
    xs: &[[f64; D]],
    ys: &[f64],
    opts: &FitOptions,
    warm: Option<&[Affine<D>]>,
) -> Result<MaxAffineFit<D>> {
    let k = opts.n_segments;
    if k == 0 {
        return Err(GridError::InvalidParameter("n_segments must be positive".into()));
    }
    if xs.len() != ys.len() {
        return Err(GridError::InvalidParameter(format!(
            "{} inputs but {} targets",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < k {
        return Err(GridError::InvalidParameter(format!(
            "grid has {} points, need at least {k}",
            xs.len()
        )));
    }
    if xs.iter().flatten().chain(ys).any(|v| !v.is_finite()) {
        return Err(GridError::FitFailed("non-finite grid value".into()));
    }

    let scaling = Scaling::new(xs);
    let scaled: Vec<[f64; D]> = xs.iter().map(|x| scaling.forward(x)).collect();
    let fitter = Fitter {
        xs: &scaled,
        ys,
        all: (0..xs.len()).collect(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut best: Option<Run<D>> = None;
    let mut keep = |run: Run<D>| {
        if run.objective.is_finite() && best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    };
    if let Some(w) = warm {
        let start: Vec<Affine<D>> = w.iter().map(|a| scaling.to_scaled(a)).collect();
        if !start.is_empty() && start.len() <= k {
            keep(fitter.iterate(fitter.grow(&start, k), opts.max_iters));
        }
    }
    for _ in 0..opts.restarts.max(1) {
        let start = fitter.random_start(k, &mut rng);
        keep(fitter.iterate(start, opts.max_iters));
    }

    let best = best.ok_or_else(|| GridError::FitFailed(format!("all {} restarts diverged", opts.restarts.max(1))))?;
    Ok(MaxAffineFit {
        pieces: best.pieces.iter().map(|a| scaling.to_original(a)).collect(),
        rmse: (best.objective / xs.len() as f64).sqrt(),
        objective_history: best.history,
    })
}

/// Fit a max-affine surrogate of `nadir_fn(r_g, f_g, m)` over `grid`.
pub fn fit_pwl<F>(nadir_fn: F, grid: &[[f64; 3]], opts: &FitOptions, warm: Option<&PwlFit>) -> Result<PwlFit>
where
    F: Fn(f64, f64, f64) -> f64,
{
    let ys: Vec<f64> = grid.iter().map(|&[r, f, m]| nadir_fn(r, f, m)).collect();
    let warm_pieces: Option<Vec<Affine<3>>> = warm.map(|w| {
        w.segments
            .iter()
            .map(|s| Affine {
                coef: [s.a, s.b, s.c],
                intercept: s.d,
            })
            .collect()
    });
    let fit = fit_max_affine(grid, &ys, opts, warm_pieces.as_deref())?;
    Ok(PwlFit {
        segments: fit
            .pieces
            .iter()
            .map(|p| PwlSegment {
                a: p.coef[0],
                b: p.coef[1],
                c: p.coef[2],
                d: p.intercept,
            })
            .collect(),
        eval_points: grid.to_vec(),
        rmse: fit.rmse,
    })
}

/// Fitting grid taken from an enumerated commitment cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct NadirGrid {
    /// `(r_g, f_g, m)` per point.
    pub points: Vec<[f64; 3]>,
    /// Damping held fixed while fitting: the smallest damping in the cloud.
    pub d: f64,
    pub delta_p: f64,
    pub t_turbine: f64,
}

impl NadirGrid {
    /// Nadir magnitude in p.u. at fixed damping; NaN where undefined.
    pub fn nadir_pu(&self, r_g: f64, f_g: f64, m: f64) -> f64 {
        let agg = AggregateParams {
            m,
            m_v: 0.0,
            d: self.d,
            r_g,
            f_g,
            t_turbine: self.t_turbine,
            s_base: 1.0,
        };
        nadir_pu(&agg, self.delta_p).unwrap_or(f64::NAN)
    }

    pub fn fit(&self, opts: &FitOptions, warm: Option<&PwlFit>) -> Result<PwlFit> {
        fit_pwl(|r, f, m| self.nadir_pu(r, f, m), &self.points, opts, warm)
    }
}

/// Every `stride`-th point of the cloud in mask order, skipping the pattern
/// with no synchronous unit online.
pub fn nadir_grid(points: &[CommitmentPoint], stride: usize, t_turbine: f64) -> Result<NadirGrid> {
    let mut sorted: Vec<&CommitmentPoint> = points.iter().filter(|p| p.mask != 0).collect();
    sorted.sort_by_key(|p| p.mask);
    let chosen: Vec<&CommitmentPoint> = sorted.into_iter().step_by(stride.max(1)).collect();
    if chosen.is_empty() {
        return Err(GridError::InvalidParameter("empty nadir grid".into()));
    }
    Ok(NadirGrid {
        points: chosen.iter().map(|p| [p.r_g, p.f_g, p.m]).collect(),
        d: chosen.iter().map(|p| p.d).fold(f64::INFINITY, f64::min),
        delta_p: chosen[0].delta_p,
        t_turbine,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PwlVar {
    RoG,
    FracG,
    Inertia,
    /// Epigraph variable `t₃`.
    Epigraph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    Le,
    Ge,
}

/// `Σ coef·var  (sense)  rhs`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PwlRow {
    pub terms: Vec<(PwlVar, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

impl PwlRow {
    pub fn satisfied(&self, value: impl Fn(PwlVar) -> f64, tol: f64) -> bool {
        let lhs: f64 = self.terms.iter().map(|&(v, c)| c * value(v)).sum();
        match self.sense {
            RowSense::Le => lhs <= self.rhs + tol,
            RowSense::Ge => lhs >= self.rhs - tol,
        }
    }
}

/// Epigraph rows `t₃ − a·R_g − b·F_g − c·M ≥ d` per segment, then
/// `f_b·t₃ ≤ nadir_lim`.
pub fn pwl_constraint_rows(fit: &PwlFit, limits: &FrequencyLimits) -> Vec<PwlRow> {
    let mut rows: Vec<PwlRow> = fit
        .segments
        .iter()
        .map(|s| PwlRow {
            terms: vec![
                (PwlVar::Epigraph, 1.0),
                (PwlVar::RoG, -s.a),
                (PwlVar::FracG, -s.b),
                (PwlVar::Inertia, -s.c),
            ],
            sense: RowSense::Ge,
            rhs: s.d,
        })
        .collect();
    rows.push(PwlRow {
        terms: vec![(PwlVar::Epigraph, limits.f_base)],
        sense: RowSense::Le,
        rhs: limits.nadir_lim,
    });
    rows
}
