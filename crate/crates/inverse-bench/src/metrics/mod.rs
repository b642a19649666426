//! Evaluation mathematics: re-simulation error, the best-of-T error curve,
//! the non-uniqueness measures γ and D_r, nearest-spectra clusters, and
//! timing normalization.

pub mod report;

pub use report::EvalReport;

use thiserror::Error;

use crate::forward::task::ForwardError;
use crate::forward::{Dataset, Split, Task};
use crate::rng::Rng;
use crate::solvers::{InverseSolver, SolverError, SolverKind};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("spectrum lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("gamma needs positive errors, got r_nn={0}, r_na={1}")]
    NonPositiveGamma(f64, f64),
    #[error("degenerate dataset: all designs identical")]
    DegenerateDesigns,
    #[error("cluster {0} has fewer than 2 members")]
    TinyCluster(usize),
    #[error("durations must be nonnegative, got {0}")]
    NegativeDuration(f64),
    #[error("cannot normalize timing over zero proposals")]
    ZeroProposals,
    #[error("test split is empty")]
    EmptyTestSplit,
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Forward(#[from] ForwardError),
}

/// Mean squared error between two spectra.
pub fn resim_mse(a: &[f64], b: &[f64]) -> Result<f64, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len() as f64;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n)
}

/// Best-of-T error curve for one solver on one task.
#[derive(Debug, Clone)]
pub struct RTCurve {
    pub solver: SolverKind,
    pub task: String,
    /// Per-target re-simulation errors in proposal order, `[targets][t_max]`.
    pub errors: Vec<Vec<f64>>,
    /// r̂_T for T = 1..=t_max (mean over targets of the prefix minimum).
    pub r_t: Vec<f64>,
    /// 25th/75th percentiles over targets of the prefix minimum at each T.
    pub p25: Vec<f64>,
    pub p75: Vec<f64>,
    /// The proposed designs, `[targets][t_max][d_g]`, for dump/recompute use.
    pub designs: Vec<Vec<Vec<f64>>>,
    /// Wall time spent inside propose() alone (re-simulation and IO excluded).
    pub propose_seconds: f64,
}

impl RTCurve {
    pub fn t_max(&self) -> usize {
        self.r_t.len()
    }

    pub fn r1(&self) -> f64 {
        self.r_t[0]
    }
}

/// r̂_T from a per-target error matrix: running prefix minimum per target,
/// then the mean over targets.
pub fn rt_from_errors(errors: &[Vec<f64>]) -> Vec<f64> {
    let t_max = errors.first().map_or(0, |row| row.len());
    let n = errors.len();
    let mut out = vec![0.0; t_max];
    for t in 0..t_max {
        let mut sum = 0.0;
        for row in errors {
            let mut best = row[0];
            for &e in &row[1..=t] {
                if e < best {
                    best = e;
                }
            }
            sum += best;
        }
        out[t] = sum / n as f64;
    }
    out
}

/// Percentile with linear interpolation between order statistics.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let rank = p / 100.0 * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

fn prefix_min_percentiles(errors: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let t_max = errors.first().map_or(0, |row| row.len());
    let mut p25 = vec![0.0; t_max];
    let mut p75 = vec![0.0; t_max];
    let mut running: Vec<f64> = errors.iter().map(|row| row[0]).collect();
    for t in 0..t_max {
        if t > 0 {
            for (r, row) in running.iter_mut().zip(errors) {
                if row[t] < *r {
                    *r = row[t];
                }
            }
        }
        let mut sorted = running.clone();
        sorted.sort_by(f64::total_cmp);
        p25[t] = percentile(&sorted, 25.0);
        p75[t] = percentile(&sorted, 75.0);
    }
    (p25, p75)
}

/// Evaluate a solver against the true forward model: propose `t_max` designs
/// per test target, re-simulate each through the task, and reduce to the
/// r̂_T curve. Out-of-bounds proposals are contract violations and error out.
pub fn rt_curve(
    solver: &dyn InverseSolver,
    task: &Task,
    targets: &[Vec<f64>],
    t_max: usize,
    seed: u64,
) -> Result<RTCurve, MetricsError> {
    assert!(t_max >= 1);
    if targets.is_empty() {
        return Err(MetricsError::EmptyTestSplit);
    }
    let root = Rng::new(seed);
    let mut errors = Vec::with_capacity(targets.len());
    let mut designs = Vec::with_capacity(targets.len());
    let mut propose_seconds = 0.0;
    for (i, target) in targets.iter().enumerate() {
        let draw_seed = root.derive(i as u64).next_u64();
        let started = std::time::Instant::now();
        let proposals = solver.propose(target, t_max, draw_seed)?;
        propose_seconds += started.elapsed().as_secs_f64();
        let mut row = Vec::with_capacity(t_max);
        for design in &proposals.designs {
            task.spec.check_bounds(design)?;
            let resim = task.simulate(design)?;
            row.push(resim_mse(target, &resim)?);
        }
        errors.push(row);
        designs.push(proposals.designs);
    }
    let r_t = rt_from_errors(&errors);
    let (p25, p75) = prefix_min_percentiles(&errors);
    Ok(RTCurve {
        solver: solver.kind(),
        task: task.spec.name.clone(),
        errors,
        r_t,
        p25,
        p75,
        designs,
        propose_seconds,
    })
}

/// Non-uniqueness measure γ = r₁(NN) / r₁(NA). Larger means the direct
/// network is losing to the iterative one, i.e. the problem is more
/// one-to-many.
pub fn gamma(r_nn_1: f64, r_na_1: f64) -> Result<f64, MetricsError> {
    if r_nn_1 <= 0.0 || r_na_1 <= 0.0 {
        return Err(MetricsError::NonPositiveGamma(r_nn_1, r_na_1));
    }
    Ok(r_nn_1 / r_na_1)
}

/// D_r: mean within-cluster pairwise squared distance over the all-pairs
/// mean. Distances are taken on designs normalized to the unit cube by
/// the caller. ≈1 for random clusters, ≪1 for tight (unique) clusters.
pub fn d_r(designs: &[Vec<f64>], clusters: &[Vec<usize>]) -> Result<f64, MetricsError> {
    let n = designs.len();
    assert!(n >= 2, "need at least two designs");
    for (c, cluster) in clusters.iter().enumerate() {
        if cluster.len() < 2 {
            return Err(MetricsError::TinyCluster(c));
        }
    }
    let denom = all_pairs_mean_sq_distance(designs);
    if denom == 0.0 {
        return Err(MetricsError::DegenerateDesigns);
    }
    let mut numer = 0.0;
    for cluster in clusters {
        let k = cluster.len();
        let mut acc = 0.0;
        for (a, &i) in cluster.iter().enumerate() {
            for &j in &cluster[a + 1..] {
                acc += sq_distance(&designs[i], &designs[j]);
            }
        }
        // ordered-pair normalization K(K-1); each unordered pair counts twice
        numer += 2.0 * acc / (k * (k - 1)) as f64;
    }
    numer /= clusters.len() as f64;
    Ok(numer / denom)
}

fn sq_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Mean over ordered pairs (i ≠ j) of |gᵢ - gⱼ|²; the identity
/// Σᵢⱼ|gᵢ-gⱼ|² = 2NΣ|gᵢ|² - 2|Σgᵢ|² keeps this exact at any scale.
fn all_pairs_mean_sq_distance(designs: &[Vec<f64>]) -> f64 {
    let n = designs.len();
    let d = designs[0].len();
    let mut sum_sq = 0.0;
    let mut sums = vec![0.0; d];
    for g in designs {
        for (k, &v) in g.iter().enumerate() {
            sum_sq += v * v;
            sums[k] += v;
        }
    }
    let total = 2.0 * n as f64 * sum_sq - 2.0 * sums.iter().map(|s| s * s).sum::<f64>();
    total / (n * (n - 1)) as f64
}

/// Indices of the k nearest training spectra to `query` by Euclidean
/// distance; ties broken by the lower row index.
pub fn nearest_spectra(spectra: &[Vec<f64>], query: &[f64], k: usize) -> Vec<usize> {
    assert!(k <= spectra.len(), "k exceeds dataset size");
    let mut scored: Vec<(f64, usize)> = spectra
        .iter()
        .enumerate()
        .map(|(i, s)| (sq_distance(s, query), i))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    scored.into_iter().take(k).map(|(_, i)| i).collect()
}

/// Spectral-similarity clusters on the training split: pick `count` seed
/// spectra at random, each joined by its `size - 1` nearest neighbors.
/// Returns clusters of dataset row indices (into the train split ordering).
pub fn spectral_clusters(
    dataset: &Dataset,
    count: usize,
    size: usize,
    seed: u64,
) -> Vec<Vec<usize>> {
    let rows = dataset.rows(Split::Train);
    let spectra: Vec<Vec<f64>> = rows.iter().map(|&i| dataset.spectra[i].clone()).collect();
    let mut rng = Rng::new(seed);
    let mut clusters = Vec::with_capacity(count);
    for _ in 0..count {
        let anchor = rng.below(spectra.len());
        // nearest includes the anchor itself at distance zero
        let neighbors = nearest_spectra(&spectra, &spectra[anchor], size);
        clusters.push(neighbors);
    }
    clusters
}

/// Inference seconds normalized to a 200-proposal batch, file I/O excluded
/// by construction (callers time only the propose loop).
pub fn per_200_proposals(seconds: f64, proposals: usize) -> Result<f64, MetricsError> {
    if seconds < 0.0 {
        return Err(MetricsError::NegativeDuration(seconds));
    }
    if proposals == 0 {
        return Err(MetricsError::ZeroProposals);
    }
    Ok(seconds * 200.0 / proposals as f64)
}
