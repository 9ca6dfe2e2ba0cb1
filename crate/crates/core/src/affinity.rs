//! Representation profiles and pairwise task affinity.
//!
//! Each task is profiled on the same `K` input samples at `D` branch points.
//! Per branch point the `K x K` matrix of sample dissimilarities (`1 - r`,
//! Pearson) describes how the task's network represents the data. Two tasks
//! are affine at a branch point when those matrices rank the sample pairs the
//! same way (Spearman).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Parallelism};

/// Activations of one task at every branch point.
///
/// `branch_outputs[d]` holds `K` rows (samples) of `F_d` features each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationProfile {
    pub task_id: String,
    pub branch_outputs: Vec<Vec<Vec<f64>>>,
}

impl RepresentationProfile {
    pub fn num_branch_points(&self) -> usize {
        self.branch_outputs.len()
    }

    pub fn num_samples(&self) -> usize {
        self.branch_outputs.first().map_or(0, Vec::len)
    }
}

/// Flattened `D x K x K` sample dissimilarities of one task, branch-major then
/// row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityProfile {
    pub task_id: String,
    pub num_branch_points: usize,
    pub num_samples: usize,
    pub tensor: Vec<f64>,
}

impl DissimilarityProfile {
    /// The `K x K` block at branch point `d`, flattened row-major.
    pub fn slice(&self, d: usize) -> &[f64] {
        let kk = self.num_samples * self.num_samples;
        &self.tensor[d * kk..(d + 1) * kk]
    }

    pub fn get(&self, d: usize, a: usize, b: usize) -> f64 {
        let k = self.num_samples;
        self.tensor[(d * k + a) * k + b]
    }
}

/// `D x n x n` affinity scores, `S[rho][i][j]` in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinityTensor {
    n: usize,
    num_branch_points: usize,
    scores: Vec<f64>,
}

impl AffinityTensor {
    /// Builds a tensor from nested `scores[rho][i][j]`, checking shape,
    /// symmetry and the unit diagonal.
    pub fn from_nested(scores: &[Vec<Vec<f64>>]) -> Result<Self> {
        let d = scores.len();
        if d == 0 {
            return Err(Error::Shape("affinity tensor has no branch points".into()));
        }
        let n = scores[0].len();
        let mut flat = Vec::with_capacity(d * n * n);
        for (rho, m) in scores.iter().enumerate() {
            if m.len() != n || m.iter().any(|row| row.len() != n) {
                return Err(Error::Shape(format!(
                    "branch point {rho} is not a {n}x{n} matrix"
                )));
            }
            for row in m {
                flat.extend_from_slice(row);
            }
        }
        let t = AffinityTensor {
            n,
            num_branch_points: d,
            scores: flat,
        };
        for rho in 0..d {
            for i in 0..n {
                if t.get(rho, i, i) != 1.0 {
                    return Err(Error::invalid("affinity tensor", "diagonal must be 1"));
                }
                for j in 0..i {
                    if t.get(rho, i, j) != t.get(rho, j, i) {
                        return Err(Error::invalid("affinity tensor", "not symmetric"));
                    }
                }
            }
        }
        Ok(t)
    }

    /// A tensor with every score equal to one (all tasks identical).
    pub fn identical(n: usize, num_branch_points: usize) -> Self {
        AffinityTensor {
            n,
            num_branch_points,
            scores: vec![1.0; num_branch_points * n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_branch_points(&self) -> usize {
        self.num_branch_points
    }

    pub fn get(&self, rho: usize, i: usize, j: usize) -> f64 {
        self.scores[(rho * self.n + i) * self.n + j]
    }

    /// Sets `S[rho][i][j]` and its mirror.
    pub fn set_pair(&mut self, rho: usize, i: usize, j: usize, value: f64) {
        let n = self.n;
        self.scores[(rho * n + i) * n + j] = value;
        self.scores[(rho * n + j) * n + i] = value;
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.num_branch_points)
            .map(|rho| {
                (0..self.n)
                    .map(|i| (0..self.n).map(|j| self.get(rho, i, j)).collect())
                    .collect()
            })
            .collect()
    }
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!(
            "vectors of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Degenerate(
            "correlation needs at least two observations".into(),
        ));
    }
    Ok(())
}

fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|&v| v == x[0])
}

fn centered_moments(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    (sxy, sxx, syy)
}

/// Pearson correlation coefficient. Errors on a constant vector.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    if is_constant(x) || is_constant(y) {
        return Err(Error::Degenerate("zero-variance vector".into()));
    }
    let (sxy, sxx, syy) = centered_moments(x, y);
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson with the zero-variance fallback: `r = 1` when both vectors are
/// constant, `r = 0` when exactly one is. The flag reports whether the
/// fallback was used.
pub fn pearson_or_fallback(x: &[f64], y: &[f64]) -> Result<(f64, bool)> {
    check_pair(x, y)?;
    Ok(match (is_constant(x), is_constant(y)) {
        (true, true) => (1.0, true),
        (true, false) | (false, true) => (0.0, true),
        (false, false) => {
            let (sxy, sxx, syy) = centered_moments(x, y);
            ((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0), false)
        }
    })
}

/// `1 - r(x, y)`, in `[0, 2]`.
pub fn pearson_dissimilarity(x: &[f64], y: &[f64]) -> Result<f64> {
    pearson(x, y).map(|r| 1.0 - r)
}

/// Average ranks (1-based); tied values share the mean of their positions.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && v[idx[end]] == v[idx[start]] {
            end += 1;
        }
        // positions start..end hold equal values; ranks start+1..=end
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(u: &[f64], v: &[f64]) -> Result<f64> {
    check_pair(u, v)?;
    pearson(&average_ranks(u), &average_ranks(v))
        .map_err(|_| Error::Degenerate("all-constant vector has no rank order".into()))
}

fn spearman_or_fallback(u: &[f64], v: &[f64]) -> Result<(f64, bool)> {
    check_pair(u, v)?;
    pearson_or_fallback(&average_ranks(u), &average_ranks(v))
}

/// Shared dimensions of a profile set: `(D, K, F_d per branch point)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileShape {
    pub num_branch_points: usize,
    pub num_samples: usize,
    pub features: Vec<usize>,
}

fn shape_of(p: &RepresentationProfile) -> Result<ProfileShape> {
    let d = p.num_branch_points();
    if d == 0 {
        return Err(Error::Shape(format!("task {} has no branch points", p.task_id)));
    }
    let k = p.num_samples();
    if k < 2 {
        return Err(Error::Degenerate(format!(
            "task {} has {k} samples; at least 2 are required",
            p.task_id
        )));
    }
    let mut features = Vec::with_capacity(d);
    for (bd, m) in p.branch_outputs.iter().enumerate() {
        if m.len() != k {
            return Err(Error::Shape(format!(
                "task {} branch point {bd}: {} samples, expected {k}",
                p.task_id,
                m.len()
            )));
        }
        let f = m[0].len();
        if f < 2 || m.iter().any(|row| row.len() != f) {
            return Err(Error::Shape(format!(
                "task {} branch point {bd}: rows must share a feature count >= 2",
                p.task_id
            )));
        }
        features.push(f);
    }
    Ok(ProfileShape {
        num_branch_points: d,
        num_samples: k,
        features,
    })
}

/// Checks that all profiles share `D`, `K` and the per-branch feature counts.
pub fn validate_profiles(profiles: &[RepresentationProfile]) -> Result<ProfileShape> {
    let first = profiles
        .first()
        .ok_or_else(|| Error::Shape("no profiles".into()))?;
    let shape = shape_of(first)?;
    for p in &profiles[1..] {
        let s = shape_of(p)?;
        if s != shape {
            return Err(Error::Shape(format!(
                "task {} has shape {:?}, expected {:?}",
                p.task_id, s, shape
            )));
        }
    }
    Ok(shape)
}

/// Pairwise sample dissimilarities of one task at every branch point.
///
/// Constant sample rows fall back to `r = 0` (or `1` against another constant
/// row) and log a warning instead of failing.
pub fn dissimilarity_profile(p: &RepresentationProfile) -> Result<DissimilarityProfile> {
    let shape = shape_of(p)?;
    let (d, k) = (shape.num_branch_points, shape.num_samples);
    let mut tensor = vec![0.0; d * k * k];
    let mut degenerate = 0usize;
    for (bd, rows) in p.branch_outputs.iter().enumerate() {
        for a in 0..k {
            for b in (a + 1)..k {
                let (r, fell_back) = pearson_or_fallback(&rows[a], &rows[b])?;
                degenerate += usize::from(fell_back);
                let v = 1.0 - r;
                tensor[(bd * k + a) * k + b] = v;
                tensor[(bd * k + b) * k + a] = v;
            }
        }
    }
    if degenerate > 0 {
        log::warn!(
            "task {}: {degenerate} sample pair(s) with constant activations; using fallback correlation",
            p.task_id
        );
    }
    Ok(DissimilarityProfile {
        task_id: p.task_id.clone(),
        num_branch_points: d,
        num_samples: k,
        tensor,
    })
}

/// Affinity scores for every branch point and task pair.
///
/// Each unordered pair is computed once and mirrored, so the result is
/// exactly symmetric.
pub fn affinity_tensor(
    profiles: &[RepresentationProfile],
    par: Parallelism,
) -> Result<AffinityTensor> {
    if profiles.len() < 2 {
        return Err(Error::Shape(format!(
            "affinity needs at least 2 tasks, got {}",
            profiles.len()
        )));
    }
    let shape = validate_profiles(profiles)?;
    let dissim: Vec<DissimilarityProfile> = par::map(profiles, par, dissimilarity_profile)
        .into_iter()
        .collect::<Result<_>>()?;
    affinity_from_dissimilarity(&dissim, shape.num_branch_points, par)
}

/// Affinity from precomputed dissimilarity profiles.
pub fn affinity_from_dissimilarity(
    dissim: &[DissimilarityProfile],
    num_branch_points: usize,
    par: Parallelism,
) -> Result<AffinityTensor> {
    let n = dissim.len();
    let pairs: Vec<(usize, usize, usize)> = (0..num_branch_points)
        .flat_map(|rho| (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| (rho, i, j))))
        .collect();
    let values = par::map(&pairs, par, |&(rho, i, j)| {
        spearman_or_fallback(dissim[i].slice(rho), dissim[j].slice(rho))
    });
    let mut tensor = AffinityTensor::identical(n, num_branch_points);
    let mut degenerate = 0usize;
    for (&(rho, i, j), v) in pairs.iter().zip(values) {
        let (s, fell_back) = v?;
        degenerate += usize::from(fell_back);
        tensor.set_pair(rho, i, j, s);
    }
    if degenerate > 0 {
        log::warn!("{degenerate} task pair(s) with constant dissimilarity slices; using fallback");
    }
    Ok(tensor)
}
