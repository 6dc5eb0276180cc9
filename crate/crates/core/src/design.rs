//! Design construction from a finite candidate set.
//!
//! Designs are built one point at a time: each step adds the candidate that
//! makes the augmented design best under the chosen criterion. Several greedy
//! passes from different starting points are run and the best design kept.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::points::{squared_euclidean, PointSet};

/// Exponent of the generalized distance `((1/p) sum |u_l|^s)^(1/s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Exponent {
    Power(f64),
    /// The `s -> 0` limit, the geometric mean `prod |u_l|^(1/p)`.
    GeometricMean,
}

impl Exponent {
    /// `s = 0` selects the geometric-mean limit.
    pub fn from_s(s: f64) -> Result<Self> {
        if s == 0.0 {
            Ok(Exponent::GeometricMean)
        } else if s.is_finite() && s > 0.0 {
            Ok(Exponent::Power(s))
        } else {
            Err(Error::InvalidArgument(format!("distance exponent must be >= 0, got {s}")))
        }
    }

    pub fn s(&self) -> f64 {
        match self {
            Exponent::Power(s) => *s,
            Exponent::GeometricMean => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceMeasure {
    exponent: Exponent,
    dim: usize,
}

impl DistanceMeasure {
    pub fn new(s: f64, dim: usize) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidArgument(format!("distance exponent must be > 0, got {s}")));
        }
        if dim == 0 {
            return Err(Error::InvalidArgument("distance dimension must be positive".into()));
        }
        Ok(Self { exponent: Exponent::Power(s), dim })
    }

    pub fn geometric(dim: usize) -> Self {
        assert!(dim > 0);
        Self { exponent: Exponent::GeometricMean, dim }
    }

    /// `s = 2`, i.e. Euclidean distance divided by `sqrt(p)`.
    pub fn euclidean_normalized(dim: usize) -> Self {
        assert!(dim > 0);
        Self { exponent: Exponent::Power(2.0), dim }
    }

    pub fn exponent(&self) -> Exponent {
        self.exponent
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// A quantity strictly increasing in the distance between `a` and `b`,
    /// cheaper than the distance itself. Used for arg-max comparisons.
    #[inline]
    pub(crate) fn order_key(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.exponent {
            Exponent::Power(2.0) => squared_euclidean(a, b),
            Exponent::Power(1.0) => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            Exponent::Power(s) => a.iter().zip(b).map(|(x, y)| (x - y).abs().powf(s)).sum(),
            Exponent::GeometricMean => a.iter().zip(b).map(|(x, y)| (x - y).abs().ln()).sum(),
        }
    }

    /// Maps [`order_key`](Self::order_key) back to the distance.
    #[inline]
    pub(crate) fn key_to_distance(&self, key: f64) -> f64 {
        let p = self.dim as f64;
        match self.exponent {
            Exponent::Power(2.0) => (key / p).sqrt(),
            Exponent::Power(1.0) => key / p,
            Exponent::Power(s) => (key / p).powf(1.0 / s),
            Exponent::GeometricMean => (key / p).exp(),
        }
    }

    /// `||u||_s` of a difference vector.
    pub fn norm(&self, u: &[f64]) -> f64 {
        let zero = vec![0.0; u.len()];
        self.between(u, &zero)
    }

    #[inline]
    pub fn between(&self, a: &[f64], b: &[f64]) -> f64 {
        self.key_to_distance(self.order_key(a, b))
    }

    /// `log ||a - b||_s`, computed without leaving log space for the
    /// geometric mean.
    #[inline]
    pub fn log_between(&self, a: &[f64], b: &[f64]) -> f64 {
        let key = self.order_key(a, b);
        let p = self.dim as f64;
        match self.exponent {
            Exponent::Power(2.0) => 0.5 * (key / p).ln(),
            Exponent::Power(s) => (key / p).ln() / s,
            Exponent::GeometricMean => key / p,
        }
    }
}

/// `||u||_s` for a difference vector.
pub fn distance(u: &[f64], measure: &DistanceMeasure) -> f64 {
    measure.norm(u)
}

/// Design criterion used by [`greedy_select`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Criterion {
    /// Minimum pairwise Euclidean distance, larger is better.
    Maximin,
    /// Maximum projection criterion, smaller is better.
    MaxPro,
    /// Minimum pairwise generalized distance with exponent `s`, larger is better.
    Generalized(Exponent),
}

impl Criterion {
    fn larger_is_better(&self) -> bool {
        !matches!(self, Criterion::MaxPro)
    }

    /// Score of a whole design under this criterion.
    pub fn score(&self, design: &PointSet) -> f64 {
        match self {
            Criterion::Maximin => maximin_score(design),
            Criterion::MaxPro => maxpro_score(design),
            Criterion::Generalized(e) => {
                let m = DistanceMeasure { exponent: *e, dim: design.dim() };
                min_pairwise_key(design, &m).map_or(f64::INFINITY, |k| m.key_to_distance(k))
            }
        }
    }

    fn is_better(&self, a: f64, b: f64) -> bool {
        if self.larger_is_better() {
            a > b
        } else {
            a < b
        }
    }
}

fn min_pairwise_key(design: &PointSet, m: &DistanceMeasure) -> Option<f64> {
    let mut best: Option<f64> = None;
    for i in 0..design.len() {
        for j in (i + 1)..design.len() {
            let k = m.order_key(design.row(i), design.row(j));
            best = Some(best.map_or(k, |b: f64| b.min(k)));
        }
    }
    best
}

/// Minimum pairwise Euclidean distance; `+inf` for fewer than two points.
pub fn maximin_score(design: &PointSet) -> f64 {
    let m = DistanceMeasure::euclidean_normalized(design.dim());
    min_pairwise_key(design, &m).map_or(f64::INFINITY, f64::sqrt)
}

/// First pair of points sharing a coordinate value, as `(i, j, dimension)`.
pub fn find_coordinate_collision(design: &PointSet) -> Option<(usize, usize, usize)> {
    for i in 0..design.len() {
        for j in (i + 1)..design.len() {
            if let Some(l) = design.row(i).iter().zip(design.row(j)).position(|(a, b)| a == b) {
                return Some((i, j, l));
            }
        }
    }
    None
}

#[inline]
fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if hi == f64::INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `-log prod_l (a_l - b_l)^2`, `+inf` on a coordinate collision.
#[inline]
fn maxpro_log_term(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc -= 2.0 * (x - y).abs().ln();
    }
    acc
}

/// `[ (1/C(n,2)) sum_{i<j} prod_l (x_il - x_jl)^-2 ]^(1/p)`, smaller is better.
/// Returns `+inf` when two points share a coordinate value.
pub fn maxpro_score(design: &PointSet) -> f64 {
    let n = design.len();
    if n < 2 {
        return f64::NAN;
    }
    if let Some((i, j, l)) = find_coordinate_collision(design) {
        log::warn!("MaxPro: points {i} and {j} share their value in dimension {l}");
        return f64::INFINITY;
    }
    let mut log_sum = f64::NEG_INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            log_sum = log_add_exp(log_sum, maxpro_log_term(design.row(i), design.row(j)));
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    ((log_sum - pairs.ln()) / design.dim() as f64).exp()
}

/// An `n`-point design chosen from a candidate set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Design {
    /// Candidate indices in the order they were selected.
    pub indices: Vec<usize>,
    #[serde(skip)]
    pub points: PointSet,
    pub criterion: Criterion,
    pub score: f64,
}

/// One greedy pass starting from candidate `start`. Ties go to the lowest
/// candidate index.
pub fn greedy_from(candidates: &PointSet, n: usize, criterion: Criterion, start: usize) -> Vec<usize> {
    let total = candidates.len();
    assert!(start < total && n <= total);
    let mut selected = Vec::with_capacity(n);
    let mut taken = vec![false; total];
    selected.push(start);
    taken[start] = true;

    match criterion {
        Criterion::MaxPro => {
            // log of sum over selected of prod_l (x_l - y_l)^-2
            let mut acc = vec![f64::NEG_INFINITY; total];
            let mut last = start;
            while selected.len() < n {
                let lp = candidates.row(last);
                acc.par_iter_mut().enumerate().for_each(|(c, a)| {
                    *a = log_add_exp(*a, maxpro_log_term(candidates.row(c), lp));
                });
                let next = argbest(&acc, &taken, |a, b| a < b);
                selected.push(next);
                taken[next] = true;
                last = next;
            }
        }
        Criterion::Maximin | Criterion::Generalized(_) => {
            let measure = match criterion {
                Criterion::Generalized(e) => DistanceMeasure { exponent: e, dim: candidates.dim() },
                _ => DistanceMeasure::euclidean_normalized(candidates.dim()),
            };
            let mut nearest = vec![f64::INFINITY; total];
            let mut last = start;
            while selected.len() < n {
                let lp = candidates.row(last);
                nearest.par_iter_mut().enumerate().for_each(|(c, d)| {
                    let k = measure.order_key(candidates.row(c), lp);
                    if k < *d {
                        *d = k;
                    }
                });
                let next = argbest(&nearest, &taken, |a, b| a > b);
                selected.push(next);
                taken[next] = true;
                last = next;
            }
        }
    }
    selected
}

/// Index of the best untaken value; the lowest index wins ties.
fn argbest(values: &[f64], taken: &[bool], better: impl Fn(f64, f64) -> bool + Sync) -> usize {
    values
        .par_iter()
        .enumerate()
        .filter(|(i, _)| !taken[*i])
        .map(|(i, &v)| (i, v))
        .reduce_with(|a, b| if better(b.1, a.1) || (!better(a.1, b.1) && b.0 < a.0) { b } else { a })
        .map(|(i, _)| i)
        .expect("no untaken candidate left")
}

/// Starting candidates for the restarts: the first half are the candidates
/// farthest from the centroid, in decreasing order, the rest are drawn from
/// the remaining candidates with `seed`.
pub fn restart_starts(candidates: &PointSet, restarts: usize, seed: u64) -> Vec<usize> {
    let total = candidates.len();
    let restarts = restarts.clamp(1, total);
    let dim = candidates.dim();
    let mut centroid = vec![0.0; dim];
    for x in candidates.iter() {
        for (c, v) in centroid.iter_mut().zip(x) {
            *c += v / total as f64;
        }
    }
    let mut order: Vec<usize> = (0..total).collect();
    let dist: Vec<f64> = candidates.iter().map(|x| squared_euclidean(x, &centroid)).collect();
    order.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));

    let deterministic = restarts.div_ceil(2);
    let mut starts: Vec<usize> = order[..deterministic].to_vec();
    let rest = &order[deterministic..];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in sample(&mut rng, rest.len(), restarts - deterministic).into_iter() {
        starts.push(rest[k]);
    }
    starts
}

/// Greedy design selection with restarts, keeping the best-scoring design.
pub fn greedy_select(
    candidates: &PointSet,
    n: usize,
    criterion: Criterion,
    restarts: usize,
    seed: u64,
) -> Result<Design> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("design size must be >= 2, got {n}")));
    }
    if candidates.len() < n {
        return Err(Error::InsufficientCandidates { needed: n, available: candidates.len() });
    }
    let starts = if candidates.len() == n { vec![0] } else { restart_starts(candidates, restarts, seed) };
    let runs: Vec<(Vec<usize>, f64)> = starts
        .par_iter()
        .map(|&s| {
            let idx = greedy_from(candidates, n, criterion, s);
            let score = criterion.score(&candidates.select(&idx));
            (idx, score)
        })
        .collect();
    let mut best = 0;
    for (r, run) in runs.iter().enumerate().skip(1) {
        if criterion.is_better(run.1, runs[best].1) {
            best = r;
        }
    }
    let (indices, score) = runs.into_iter().nth(best).expect("at least one restart");
    Ok(Design { points: candidates.select(&indices), indices, criterion, score })
}
