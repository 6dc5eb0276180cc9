//! Constrained minimum energy design candidates.
//!
//! Starting from a rank-1 lattice, each round builds an `n`-point design that
//! maximizes
//!
//! ```text
//! min_{i<j} (log rho(x_i) + log rho(x_j)) / 2p + log ||x_i - x_j||_s
//! ```
//!
//! over the current candidates, one point at a time, then adds the midpoints
//! and reflected midpoints between each design point and its `Q` nearest
//! design neighbours. The rigidity `tau` grows along the schedule so the
//! design is gradually pushed into the feasible region.
//!
//! Candidates are kept as integer numerators over `N 2^(T-1)`; refinement
//! arithmetic is exact and the floating-point coordinates are derived from
//! the integers, so a run is bit-for-bit reproducible.

use rayon::prelude::*;
use serde::Serialize;

use crate::archive::{CandidateArchive, Origin};
use crate::design::{DistanceMeasure, Exponent};
use crate::error::{Error, Result};
use crate::lowdisc::{largest_prime_below, lattice};
use crate::points::{squared_euclidean, PointSet};
use crate::problem::{ConstrainedProblem, Evaluator, Normalization};
use crate::relax::{RigiditySchedule, TargetDensity};

/// Multiplier of `p log delta_t` in the pruning threshold; 2 suffices in
/// theory, the larger value leaves extra margin.
pub const PRUNE_FACTOR: f64 = 2.5;

#[derive(Debug, Clone)]
pub struct CominedConfig {
    pub n: usize,
    pub q: usize,
    pub schedule: RigiditySchedule,
    pub exponent: Exponent,
    pub cvn: bool,
    pub prune: bool,
    pub target: TargetDensity,
}

impl CominedConfig {
    pub fn new(n: usize, q: usize, schedule: RigiditySchedule) -> Self {
        Self { n, q, schedule, exponent: Exponent::Power(2.0), cvn: true, prune: true, target: TargetDensity::Uniform }
    }

    /// Initial lattice size `N_1`, the largest prime below `Q n`.
    pub fn lattice_size(&self) -> Result<u64> {
        largest_prime_below((self.q * self.n) as u64)
    }

    /// Upper bound on the number of evaluated candidates.
    pub fn max_evaluations(&self) -> Result<usize> {
        let steps = self.schedule.steps();
        Ok(self.lattice_size()? as usize + 2 * self.n * self.q * (steps - 1))
    }
}

/// A design chosen inside the archive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntermediateDesign {
    pub indices: Vec<usize>,
    /// Attained `min_{i<j} (nu_i + nu_j)/2p + log ||x_i - x_j||_s`.
    pub objective: f64,
}

/// Bookkeeping for one construction round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepStats {
    pub step: usize,
    pub tau: f64,
    pub delta: f64,
    pub eta: f64,
    pub pool_size: usize,
    pub archive_size: usize,
    pub feasible_in_design: usize,
    pub added: usize,
}

#[derive(Debug, Clone)]
pub struct CominedResult {
    pub archive: CandidateArchive,
    pub design: IntermediateDesign,
    pub lattice_size: u64,
    /// Shortest lattice vector under `||.||_s`.
    pub delta: f64,
    pub normalization: Normalization,
    /// Distinct constraint evaluations; equals the archive size.
    pub evaluations: usize,
    pub steps: Vec<StepStats>,
}

impl CominedResult {
    pub fn feasible_points(&self) -> PointSet {
        self.archive.feasible_points()
    }

    pub fn design_points(&self) -> PointSet {
        self.archive.points().select(&self.design.indices)
    }
}

/// Index of the largest value, lowest index on ties.
fn argmax_by_index(values: impl ParallelIterator<Item = (usize, f64)>) -> Option<usize> {
    values
        .reduce_with(|a, b| if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) || a.1.is_nan() { b } else { a })
        .map(|(i, _)| i)
}

/// Candidate with the highest `log rho_tau`; ties go to the lowest index.
pub fn seed_point(archive: &CandidateArchive, tau: f64) -> Result<usize> {
    if archive.is_empty() {
        return Err(Error::InvalidArgument("cannot seed a design from an empty archive".into()));
    }
    Ok(argmax_by_index((0..archive.len()).into_par_iter().map(|i| (i, archive.log_rho(i, tau)))).unwrap())
}

/// Next greedy point given the already selected ones, scanning every
/// unselected archive entry.
pub fn greedy_step(
    archive: &CandidateArchive,
    selected: &[usize],
    tau: f64,
    measure: &DistanceMeasure,
) -> Result<usize> {
    if selected.is_empty() {
        return Err(Error::InvalidArgument("greedy step needs at least one selected point".into()));
    }
    let two_p = 2.0 * archive.dim() as f64;
    let nu: Vec<f64> = (0..archive.len()).map(|i| archive.log_rho(i, tau)).collect();
    let pts = archive.points();
    argmax_by_index((0..archive.len()).into_par_iter().filter(|c| !selected.contains(c)).map(|c| {
        let worst = selected
            .iter()
            .map(|&i| nu[i] / two_p + measure.log_between(pts.row(c), pts.row(i)))
            .fold(f64::INFINITY, f64::min);
        (c, nu[c] / two_p + worst)
    }))
    .ok_or_else(|| Error::InsufficientCandidates { needed: selected.len() + 1, available: selected.len() })
}

/// Pool of candidates that can still win a greedy step: `nu > eta` with
/// `eta = nu_(n) + 2.5 p log delta_t`, plus the `n` largest `nu` always.
pub(crate) fn prune_by_values(nu: &[f64], n: usize, delta_t: f64, dim: usize) -> (Vec<usize>, f64) {
    let mut order: Vec<usize> = (0..nu.len()).collect();
    order.sort_by(|&a, &b| nu[b].total_cmp(&nu[a]).then(a.cmp(&b)));
    let n = n.min(nu.len());
    let nth = nu[order[n - 1]];
    let eta = nth + PRUNE_FACTOR * dim as f64 * delta_t.ln();
    let mut keep = vec![false; nu.len()];
    for &i in &order[..n] {
        keep[i] = true;
    }
    for (i, &v) in nu.iter().enumerate() {
        if v > eta {
            keep[i] = true;
        }
    }
    ((0..nu.len()).filter(|&i| keep[i]).collect(), eta)
}

/// Candidate indices surviving the likelihood threshold at rigidity `tau`.
pub fn prune(archive: &CandidateArchive, tau: f64, n: usize, delta_t: f64) -> Vec<usize> {
    let nu: Vec<f64> = (0..archive.len()).map(|i| archive.log_rho(i, tau)).collect();
    prune_by_values(&nu, n, delta_t, archive.dim()).0
}

/// Greedy design over `pool`, starting from its highest-`nu` member. Scores
/// are updated incrementally as points are added.
fn greedy_design(points: &PointSet, nu: &[f64], pool: &[usize], n: usize, measure: &DistanceMeasure) -> Vec<usize> {
    let two_p = 2.0 * points.dim() as f64;
    let seed = argmax_by_index(pool.par_iter().map(|&i| (i, nu[i]))).expect("pool is not empty");
    let mut selected = vec![seed];
    let mut taken = vec![false; pool.len()];
    let mut best = vec![f64::INFINITY; pool.len()];
    let pos = pool.iter().position(|&i| i == seed).unwrap();
    taken[pos] = true;
    let mut last = seed;
    while selected.len() < n {
        let lp = points.row(last);
        let off = nu[last] / two_p;
        best.par_iter_mut().zip(pool.par_iter()).for_each(|(b, &c)| {
            let v = off + measure.log_between(points.row(c), lp);
            if v < *b {
                *b = v;
            }
        });
        let k = argmax_by_index(
            (0..pool.len()).into_par_iter().filter(|&k| !taken[k]).map(|k| (k, nu[pool[k]] / two_p + best[k])),
        )
        .expect("pool holds at least n points");
        taken[k] = true;
        last = pool[k];
        selected.push(last);
    }
    selected
}

fn design_objective(points: &PointSet, nu: &[f64], idx: &[usize], measure: &DistanceMeasure) -> f64 {
    let two_p = 2.0 * points.dim() as f64;
    let mut obj = f64::INFINITY;
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            obj = obj.min((nu[i] + nu[j]) / two_p + measure.log_between(points.row(i), points.row(j)));
        }
    }
    obj
}

/// The `q` nearest other rows of `design` to each row, Euclidean, ties by index.
fn nearest_neighbours(design: &PointSet, q: usize) -> Vec<Vec<usize>> {
    (0..design.len())
        .into_par_iter()
        .map(|i| {
            let mut others: Vec<(f64, usize)> = (0..design.len())
                .filter(|&j| j != i)
                .map(|j| (squared_euclidean(design.row(i), design.row(j)), j))
                .collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            others.into_iter().take(q).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Midpoints `(x + y)/2` and reflected midpoints `(3x - y)/2` between each
/// design point `x` and its `q` nearest design neighbours `y`. Reflections
/// leaving the cube, repeats within the batch and points already in the
/// archive are dropped. Floating-point midpoints can land an ulp away from an
/// existing point; [`comined_run`] works on an exact integer grid instead.
pub fn algr_augment(design: &PointSet, archive: &CandidateArchive, q: usize) -> Vec<(Vec<f64>, Origin)> {
    let nbrs = nearest_neighbours(design, q);
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for (i, list) in nbrs.iter().enumerate() {
        let x = design.row(i);
        for &j in list {
            let y = design.row(j);
            let mid: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a + b) / 2.0).collect();
            let refl: Vec<f64> = x.iter().zip(y).map(|(a, b)| (3.0 * a - b) / 2.0).collect();
            for (z, origin) in [(mid, Origin::Midpoint), (refl, Origin::Reflection)] {
                if z.iter().all(|v| (0.0..=1.0).contains(v))
                    && !archive.contains(&z)
                    && seen.insert(crate::points::bit_key(&z))
                {
                    out.push((z, origin));
                }
            }
        }
    }
    out
}

/// Exact-grid version of [`algr_augment`] on integer numerators over `denom`.
/// Every design numerator must be even.
fn algr_augment_grid(design: &[Vec<i64>], design_pts: &PointSet, denom: i64, q: usize) -> Vec<(Vec<i64>, Origin)> {
    let nbrs = nearest_neighbours(design_pts, q);
    let mut out = Vec::new();
    for (i, list) in nbrs.iter().enumerate() {
        let x = &design[i];
        for &j in list {
            let y = &design[j];
            let mid: Vec<i64> = x
                .iter()
                .zip(y)
                .map(|(a, b)| {
                    debug_assert!((a + b) % 2 == 0);
                    (a + b) / 2
                })
                .collect();
            out.push((mid, Origin::Midpoint));
            let refl: Vec<i64> = x.iter().zip(y).map(|(a, b)| (3 * a - b) / 2).collect();
            if refl.iter().all(|&v| (0..=denom).contains(&v)) {
                out.push((refl, Origin::Reflection));
            }
        }
    }
    out
}

fn to_unit(num: &[i64], denom: i64) -> Vec<f64> {
    num.iter().map(|&v| v as f64 / denom as f64).collect()
}

/// Runs the full construction and returns every evaluated candidate and the
/// final design at `tau_T`.
pub fn comined_run(problem: &ConstrainedProblem, config: &CominedConfig) -> Result<CominedResult> {
    let (n, q) = (config.n, config.q);
    if n < 2 {
        return Err(Error::InvalidArgument(format!("design size must be >= 2, got {n}")));
    }
    if q < 1 {
        return Err(Error::InvalidArgument("neighbour count Q must be >= 1".into()));
    }
    let n_lat = config.lattice_size()?;
    if n_lat as usize <= n {
        return Err(Error::InvalidArgument(format!(
            "initial lattice size {n_lat} must exceed the design size {n}; increase Q"
        )));
    }
    if q >= n {
        log::warn!("Q = {q} >= n = {n}; using all {} other design points as neighbours", n - 1);
    }
    let q_eff = q.min(n - 1);
    let dim = problem.dim();
    let steps = config.schedule.steps();
    let scale: i64 = 1 << (steps - 1);
    let denom = n_lat as i64 * scale;
    let measure = match config.exponent {
        Exponent::Power(s) => DistanceMeasure::new(s, dim)?,
        Exponent::GeometricMean => DistanceMeasure::geometric(dim),
    };

    let lat = lattice(n_lat, dim)?;
    let delta = lat.shortest_vector_under(&measure);
    let mut grid: Vec<Vec<i64>> =
        (0..n_lat as usize).map(|j| lat.residues(j).iter().map(|&r| r as i64 * scale).collect()).collect();
    let initial: Vec<Vec<f64>> = grid.iter().map(|g| to_unit(g, denom)).collect();

    let evaluator = Evaluator::new(problem);
    let raws = initial.par_iter().map(|x| evaluator.evaluate_raw(x)).collect::<Result<Vec<_>>>()?;
    let normalization = if config.cvn {
        Normalization::fit(problem.num_constraints(), raws.iter().map(|r| &r[..]))?
    } else {
        Normalization::identity(problem.num_constraints())
    };
    evaluator.set_normalization(normalization.clone())?;
    let mut archive = CandidateArchive::new(dim, problem.num_constraints());
    for x in &initial {
        archive.push(x, &evaluator.evaluate(x)?, Origin::InitialLattice, 0);
    }
    let mut log_gamma: Vec<f64> = initial.iter().map(|x| config.target.log_gamma(x)).collect();

    let mut stats = Vec::with_capacity(steps);
    let mut design = Vec::new();
    let mut nu = Vec::new();
    for t in 1..=steps {
        let tau = config.schedule.tau(t);
        nu = (0..archive.len()).into_par_iter().map(|i| archive.log_rho(i, tau) + log_gamma[i]).collect::<Vec<f64>>();
        let delta_t = delta / (1u64 << (t - 1)) as f64;
        let (pool, eta) = if config.prune {
            prune_by_values(&nu, n, delta_t, dim)
        } else {
            ((0..archive.len()).collect(), f64::NEG_INFINITY)
        };
        if pool.len() < n {
            return Err(Error::InsufficientCandidates { needed: n, available: pool.len() });
        }
        design = greedy_design(archive.points(), &nu, &pool, n, &measure);

        let mut added = 0;
        if t < steps {
            let design_pts = archive.points().select(&design);
            let design_grid: Vec<Vec<i64>> = design.iter().map(|&i| grid[i].clone()).collect();
            let mut batch = Vec::new();
            let mut seen = std::collections::HashSet::new();
            for (num, origin) in algr_augment_grid(&design_grid, &design_pts, denom, q_eff) {
                let x = to_unit(&num, denom);
                if !archive.contains(&x) && seen.insert(num.clone()) {
                    batch.push((num, x, origin));
                }
            }
            let values = batch.par_iter().map(|(_, x, _)| evaluator.evaluate(x)).collect::<Result<Vec<_>>>()?;
            for ((num, x, origin), v) in batch.into_iter().zip(values) {
                if archive.push(&x, &v, origin, t).is_some() {
                    log_gamma.push(config.target.log_gamma(&x));
                    grid.push(num);
                    added += 1;
                }
            }
        }
        stats.push(StepStats {
            step: t,
            tau,
            delta: delta_t,
            eta,
            pool_size: pool.len(),
            archive_size: archive.len(),
            feasible_in_design: design.iter().filter(|&&i| archive.is_feasible(i)).count(),
            added,
        });
        log::debug!("step {t}: tau {tau:.3e} pool {} archive {}", pool.len(), archive.len());
    }

    let objective = design_objective(archive.points(), &nu, &design, &measure);
    let evaluations = evaluator.evaluations();
    debug_assert_eq!(evaluations, archive.len());
    Ok(CominedResult {
        archive,
        design: IntermediateDesign { indices: design, objective },
        lattice_size: n_lat,
        delta,
        normalization,
        evaluations,
        steps: stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::ConstraintValues;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn free() -> ConstraintValues {
        ConstraintValues { raw: vec![-1.0], normalized: vec![-1.0], feasible: true }
    }

    fn archive_from(dim: usize, pts: &[&[f64]]) -> CandidateArchive {
        let mut a = CandidateArchive::new(dim, 1);
        for p in pts {
            a.push(p, &free(), Origin::Lhs, 0);
        }
        a
    }

    #[test]
    fn midpoint_and_reflection_arithmetic() {
        let design = PointSet::from_rows(2, [[0.5, 0.5], [0.7, 0.9]]);
        let out = algr_augment(&design, &CandidateArchive::new(2, 1), 1);
        let (mid, refl) = (&out[0].0, &out[1].0);
        assert!((mid[0] - 0.6).abs() < 1e-15 && (mid[1] - 0.7).abs() < 1e-15);
        assert!((refl[0] - 0.4).abs() < 1e-15 && (refl[1] - 0.3).abs() < 1e-15);
        assert_eq!(out[1].1, Origin::Reflection);
        // from (0.7,0.9) the midpoint repeats and the reflection (0.8,1.1) leaves the cube
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn reflection_off_cube_discarded() {
        let design = PointSet::from_rows(2, [[0.1, 0.4], [0.3, 0.6]]);
        let out = algr_augment(&design, &CandidateArchive::new(2, 1), 1);
        assert!(out.iter().all(|(z, _)| z.iter().all(|v| (0.0..=1.0).contains(v))));
        assert!(!out.iter().any(|(z, _)| (z[0] + 0.1).abs() < 1e-12));
    }

    #[test]
    fn one_dimensional_greedy_tie_goes_to_lower_index() {
        let a = archive_from(1, &[&[0.1], &[0.5], &[0.9]]);
        let m = DistanceMeasure::euclidean_normalized(1);
        assert_eq!(greedy_step(&a, &[1], 0.0, &m).unwrap(), 0);
    }

    #[test]
    fn seed_point_cases() {
        let a = archive_from(1, &[&[0.1], &[0.5], &[0.9]]);
        assert_eq!(seed_point(&a, 0.0).unwrap(), 0);
        let mut b = CandidateArchive::new(1, 1);
        for (i, g) in [2.0, 1.0, -0.5, 3.0].iter().enumerate() {
            let v = ConstraintValues { raw: vec![*g], normalized: vec![*g], feasible: *g <= 0.0 };
            b.push(&[i as f64 / 4.0], &v, Origin::Lhs, 0);
        }
        assert_eq!(seed_point(&b, 1e6).unwrap(), 2);
        let brute = (0..4).max_by(|&i, &j| b.log_rho(i, 3.0).total_cmp(&b.log_rho(j, 3.0)).then(j.cmp(&i))).unwrap();
        assert_eq!(seed_point(&b, 3.0).unwrap(), brute);
    }

    #[test]
    fn infeasible_candidate_never_beats_feasible_ones() {
        let mut a = CandidateArchive::new(2, 1);
        let vals = |g: f64| ConstraintValues { raw: vec![g], normalized: vec![g], feasible: g <= 0.0 };
        a.push(&[0.5, 0.5], &vals(-1.0), Origin::Lhs, 0);
        a.push(&[0.0, 0.0], &vals(1e3), Origin::Lhs, 0);
        a.push(&[0.6, 0.5], &vals(-1.0), Origin::Lhs, 0);
        a.push(&[0.52, 0.5], &vals(-1.0), Origin::Lhs, 0);
        let m = DistanceMeasure::euclidean_normalized(2);
        assert!(a.log_rho(1, 1e6) < -1e6);
        assert_eq!(greedy_step(&a, &[0], 1e6, &m).unwrap(), 2);
    }

    #[test]
    fn prune_threshold_example() {
        let nu = [-1e9, -1.0, -0.5, -0.2, 0.0];
        let (pool, eta) = prune_by_values(&nu, 4, 0.01, 2);
        assert!((eta - (-1.0 + 5.0 * 0.01f64.ln())).abs() < 1e-12);
        assert_eq!(pool, vec![1, 2, 3, 4]);
        let (pool, _) = prune_by_values(&[0.0; 6], 3, 0.01, 2);
        assert_eq!(pool.len(), 6);
        // the top n are kept even below the threshold
        let (pool, _) = prune_by_values(&[-1e9, -2e9, 0.0], 3, 0.5, 2);
        assert_eq!(pool, vec![0, 1, 2]);
    }

    fn random_archive(n: usize, dim: usize, seed: u64) -> CandidateArchive {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = CandidateArchive::new(dim, 2);
        for _ in 0..n {
            let x: Vec<f64> = (0..dim).map(|_| rng.random()).collect();
            let g: Vec<f64> = (0..2).map(|_| rng.random_range(-2.0..2.0)).collect();
            let v = ConstraintValues { feasible: g.iter().all(|v| *v <= 0.0), normalized: g.clone(), raw: g };
            a.push(&x, &v, Origin::Lhs, 0);
        }
        a
    }

    #[test]
    fn incremental_greedy_matches_direct_scan() {
        let m = DistanceMeasure::euclidean_normalized(3);
        for seed in 0..5 {
            let a = random_archive(80, 3, seed);
            let nu: Vec<f64> = (0..80).map(|i| a.log_rho(i, 4.0)).collect();
            let all: Vec<usize> = (0..80).collect();
            let fast = greedy_design(a.points(), &nu, &all, 10, &m);
            let mut slow = vec![seed_point(&a, 4.0).unwrap()];
            while slow.len() < 10 {
                slow.push(greedy_step(&a, &slow, 4.0, &m).unwrap());
            }
            assert_eq!(fast, slow);
        }
    }

    fn min_pair_distance(pts: &PointSet, m: &DistanceMeasure) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                best = best.min(m.between(pts.row(i), pts.row(j)));
            }
        }
        best
    }

    fn disk(dim: usize) -> ConstrainedProblem {
        ConstrainedProblem::on_unit_cube("ball", dim, 2, |x, g| {
            g[0] = x.iter().map(|v| (v - 0.4).powi(2)).sum::<f64>() - 0.09;
            g[1] = 0.3 - x[0];
        })
        .unwrap()
    }

    #[test]
    fn budget_and_spacing() {
        for (dim, n, q, steps) in [(2usize, 20usize, 5usize, 4usize), (3, 15, 4, 5)] {
            let cfg = CominedConfig::new(n, q, RigiditySchedule::log_spaced(steps).unwrap());
            let r = comined_run(&disk(dim), &cfg).unwrap();
            assert_eq!(r.evaluations, r.archive.len());
            assert!(r.archive.len() <= cfg.max_evaluations().unwrap());
            let m = DistanceMeasure::euclidean_normalized(dim);
            let rounds = steps - 1;
            let floor = r.delta / (1u64 << rounds) as f64;
            assert!(min_pair_distance(r.archive.points(), &m) >= floor - 1e-15);
            let d: std::collections::HashSet<_> = r.design.indices.iter().collect();
            assert_eq!(d.len(), n);
        }
    }

    #[test]
    fn augmented_lattice_points_keep_half_spacing() {
        // a whole lattice taken as the design: new points stay delta/2 apart
        let n = 61u64;
        let lat = lattice(n, 2).unwrap();
        let m = DistanceMeasure::euclidean_normalized(2);
        let delta = lat.shortest_vector_under(&m);
        let grid: Vec<Vec<i64>> =
            (0..n as usize).map(|j| lat.residues(j).iter().map(|&r| 2 * r as i64).collect()).collect();
        let denom = 2 * n as i64;
        let mut seen: std::collections::HashSet<Vec<i64>> = grid.iter().cloned().collect();
        let mut all = lat.points().clone();
        for (z, _) in algr_augment_grid(&grid, lat.points(), denom, 4) {
            if seen.insert(z.clone()) {
                all.push(&to_unit(&z, denom));
            }
        }
        assert!(all.len() > n as usize);
        let got = min_pair_distance(&all, &m);
        assert!(got >= delta / 2.0 - 1e-15, "{got} < {}", delta / 2.0);
    }

    #[test]
    fn pruning_does_not_change_the_result() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for case in 0..12 {
            let dim = 1 + case % 3;
            let c: Vec<f64> = (0..dim).map(|_| rng.random_range(0.2..0.8)).collect();
            let r2 = rng.random_range(0.01..0.2);
            let p = ConstrainedProblem::on_unit_cube("ball", dim, 1, move |x, g| {
                g[0] = x.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>() - r2;
            })
            .unwrap();
            let mut cfg = CominedConfig::new(8 + case, 5, RigiditySchedule::log_spaced(4).unwrap());
            let a = comined_run(&p, &cfg).unwrap();
            cfg.prune = false;
            let b = comined_run(&p, &cfg).unwrap();
            assert_eq!(a.design.indices, b.design.indices, "case {case}");
            assert_eq!(a.archive.points(), b.archive.points());
        }
    }

    #[test]
    fn unconstrained_reduces_to_maximin() {
        let p = ConstrainedProblem::on_unit_cube("free", 2, 1, |_, g| g[0] = -1.0).unwrap();
        let cfg = CominedConfig::new(10, 5, RigiditySchedule::log_spaced(3).unwrap());
        let r = comined_run(&p, &cfg).unwrap();
        assert_eq!(r.archive.feasible_count(), r.archive.len());
        let pts = r.design_points();
        let next =
            crate::design::greedy_from(r.archive.points(), 10, crate::design::Criterion::Maximin, r.design.indices[0]);
        assert_eq!(r.archive.points().select(&next), pts);
    }

    #[test]
    fn final_design_sits_inside_the_region() {
        let cfg = CominedConfig::new(20, 5, RigiditySchedule::default());
        let r = comined_run(&disk(2), &cfg).unwrap();
        assert!(r.archive.feasible_count() >= 20);
        for &i in &r.design.indices {
            assert!(r.archive.is_feasible(i));
        }
    }

    #[test]
    fn deterministic() {
        let cfg = CominedConfig::new(12, 4, RigiditySchedule::log_spaced(5).unwrap());
        let a = comined_run(&disk(3), &cfg).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| comined_run(&disk(3), &cfg).unwrap());
        assert_eq!(a.archive.points(), b.archive.points());
        assert_eq!(a.design, b.design);
    }

    #[test]
    fn too_small_lattice_rejected() {
        let cfg = CominedConfig::new(10, 1, RigiditySchedule::default());
        assert!(comined_run(&disk(2), &cfg).is_err());
    }
}
