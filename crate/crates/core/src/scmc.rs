//! Adaptive sequentially constrained Monte Carlo.
//!
//! `M` particles are annealed through the rigidity schedule with a
//! weight / resample / move cycle. Every particle draws its randomness from
//! its own ChaCha stream indexed by `(step, particle)`, so results do not
//! depend on how many threads run the moves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::archive::{CandidateArchive, Origin};
use crate::error::{Error, Result};
use crate::lowdisc::sobol;
use crate::points::{squared_euclidean, PointSet};
use crate::problem::{is_feasible, ConstrainedProblem, Evaluator, Normalization};
use crate::relax::{log_rho, RigiditySchedule, TargetDensity};

/// Floor applied to the proposal scale when the particles collapse.
pub const SIGMA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialPoints {
    Sobol,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Resampling {
    Multinomial,
    Systematic,
}

#[derive(Debug, Clone)]
pub struct ScmcConfig {
    pub n_particles: usize,
    pub schedule: RigiditySchedule,
    pub init: InitialPoints,
    pub resampling: Resampling,
    pub moves_per_step: usize,
    pub cvn: bool,
    pub seed: u64,
    pub target: TargetDensity,
}

impl ScmcConfig {
    pub fn new(n_particles: usize, schedule: RigiditySchedule, seed: u64) -> Self {
        Self {
            n_particles,
            schedule,
            init: InitialPoints::Sobol,
            resampling: Resampling::Multinomial,
            moves_per_step: 1,
            cvn: true,
            seed,
            target: TargetDensity::Uniform,
        }
    }

    /// Proposals charged by a run: the initial batch plus one per particle and move.
    pub fn budget(&self) -> usize {
        self.n_particles * (1 + self.schedule.steps() * self.moves_per_step)
    }
}

/// One Metropolis-Hastings step.
#[derive(Debug, Clone, PartialEq)]
pub struct MoveOutcome {
    pub point: Vec<f64>,
    pub log_rho: f64,
    pub accepted: bool,
    /// False when the proposal left the cube and was rejected unevaluated.
    pub in_cube: bool,
    pub proposal: Vec<f64>,
}

/// Gaussian random-walk proposal `x + sigma N(0, I)` targeting
/// `rho_tau * gamma`; proposals off the cube are rejected.
pub fn mh_move<R: Rng + ?Sized>(
    x: &[f64],
    current_log_rho: f64,
    tau: f64,
    sigma: f64,
    evaluator: &Evaluator<'_>,
    target: &TargetDensity,
    rng: &mut R,
) -> Result<MoveOutcome> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("proposal scale must be > 0, got {sigma}")));
    }
    let proposal: Vec<f64> = x.iter().map(|v| v + sigma * rng.sample::<f64, _>(StandardNormal)).collect();
    let log_u: f64 = rng.random::<f64>().ln();
    if proposal.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Ok(MoveOutcome {
            point: x.to_vec(),
            log_rho: current_log_rho,
            accepted: false,
            in_cube: false,
            proposal,
        });
    }
    let values = evaluator.evaluate(&proposal)?;
    let lr = log_rho(tau, &values.normalized);
    let log_ratio = lr + target.log_gamma(&proposal) - current_log_rho - target.log_gamma(x);
    if log_ratio >= 0.0 || log_u < log_ratio {
        Ok(MoveOutcome { point: proposal.clone(), log_rho: lr, accepted: true, in_cube: true, proposal })
    } else {
        Ok(MoveOutcome { point: x.to_vec(), log_rho: current_log_rho, accepted: false, in_cube: true, proposal })
    }
}

/// Type-7 (linear interpolation) sample quantile.
pub(crate) fn quantile_type7(values: &mut [f64], q: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let h = (values.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(values.len() - 1);
    values[lo] + (h - lo as f64) * (values[hi] - values[lo])
}

/// `sigma = q_0.75(nearest-neighbour distances) / sqrt(p)`, floored at
/// [`SIGMA_FLOOR`].
pub fn adaptive_scale(points: &PointSet) -> Result<f64> {
    let m = points.len();
    if m < 2 {
        return Err(Error::InvalidArgument(format!("adaptive scale needs >= 2 points, got {m}")));
    }
    let mut nn: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| {
            let a = points.row(i);
            let mut best = f64::INFINITY;
            for j in 0..m {
                if j != i {
                    best = best.min(squared_euclidean(a, points.row(j)));
                }
            }
            best.sqrt()
        })
        .collect();
    let sigma = quantile_type7(&mut nn, 0.75) / (points.dim() as f64).sqrt();
    if sigma > 0.0 {
        Ok(sigma)
    } else {
        log::warn!("particles have collapsed; proposal scale floored at {SIGMA_FLOOR:e}");
        Ok(SIGMA_FLOOR)
    }
}

/// Indices drawn from the normalized weights `exp(log_w)`.
fn resample<R: Rng>(log_w: &[f64], scheme: Resampling, rng: &mut R) -> Vec<usize> {
    let m = log_w.len();
    let mut cdf = Vec::with_capacity(m);
    let mut acc = 0.0;
    for lw in log_w {
        acc += lw.exp();
        cdf.push(acc);
    }
    let total = acc;
    let pick = |u: f64| cdf.partition_point(|c| *c <= u * total).min(m - 1);
    match scheme {
        Resampling::Multinomial => (0..m).map(|_| pick(rng.random::<f64>())).collect(),
        Resampling::Systematic => {
            let u0: f64 = rng.random();
            (0..m).map(|i| pick((i as f64 + u0) / m as f64)).collect()
        }
    }
}

/// Log-sum-exp normalized log weights; `None` if every weight is zero.
fn normalize_log_weights(log_w: &mut [f64]) -> Option<()> {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let lse = max + log_w.iter().map(|w| (w - max).exp()).sum::<f64>().ln();
    for w in log_w.iter_mut() {
        *w -= lse;
    }
    Some(())
}

fn stream_rng(seed: u64, step: usize, particle: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((step as u64) << 32) | particle as u64);
    rng
}

/// Result of an SCMC run.
#[derive(Debug, Clone)]
pub struct ScmcResult {
    /// The `M (T + 1)` particles of populations `x^(0)..x^(T)`, step-major.
    pub particles: PointSet,
    pub particle_feasible: Vec<bool>,
    /// Every distinct point whose constraints were evaluated.
    pub archive: CandidateArchive,
    /// Proposals charged against the budget: `M (1 + T k)` for `k` moves per step.
    pub evaluations: usize,
    /// Proposals that left the cube and were rejected without calling the constraints.
    pub off_cube: usize,
    pub normalization: Normalization,
    pub sigmas: Vec<f64>,
    pub acceptance_rates: Vec<f64>,
}

impl ScmcResult {
    /// Share of the `M (T + 1)` particles that are feasible.
    pub fn feasible_ratio(&self) -> f64 {
        self.particle_feasible.iter().filter(|&&f| f).count() as f64 / self.particle_feasible.len() as f64
    }

    pub fn feasible_particle_count(&self) -> usize {
        self.particle_feasible.iter().filter(|&&f| f).count()
    }

    /// The last population `x^(T)`.
    pub fn final_population(&self) -> PointSet {
        let m = self.particles.len() / (self.sigmas.len() + 1);
        let start = self.particles.len() - m;
        self.particles.select(&(start..self.particles.len()).collect::<Vec<_>>())
    }

    /// Feasible particles with repeats removed, in first-seen order.
    pub fn feasible_candidates(&self) -> PointSet {
        let mut seen = std::collections::HashSet::new();
        let mut out = PointSet::new(self.particles.dim());
        for (x, &f) in self.particles.iter().zip(&self.particle_feasible) {
            if f && seen.insert(crate::points::bit_key(x)) {
                out.push(x);
            }
        }
        out
    }
}

/// Runs adaptive SCMC and returns every particle of every population.
pub fn scmc_run(problem: &ConstrainedProblem, config: &ScmcConfig) -> Result<ScmcResult> {
    let m = config.n_particles;
    if m < 2 {
        return Err(Error::InvalidArgument(format!("SCMC needs M >= 2 particles, got {m}")));
    }
    if config.moves_per_step < 1 {
        return Err(Error::InvalidArgument("moves per step must be >= 1".into()));
    }
    let dim = problem.dim();
    let schedule = &config.schedule;
    let init = match config.init {
        InitialPoints::Sobol => sobol(m, dim, 0)?,
        InitialPoints::Uniform => {
            let mut rng = stream_rng(config.seed, 0, u32::MAX as usize);
            PointSet::from_flat(dim, (0..m * dim).map(|_| rng.random()).collect())
        }
    };

    let evaluator = Evaluator::new(problem);
    let raws =
        init.iter().collect::<Vec<_>>().par_iter().map(|x| evaluator.evaluate_raw(x)).collect::<Result<Vec<_>>>()?;
    let normalization = if config.cvn {
        Normalization::fit(problem.num_constraints(), raws.iter().map(|r| &r[..]))?
    } else {
        Normalization::identity(problem.num_constraints())
    };
    evaluator.set_normalization(normalization.clone())?;

    let mut archive = CandidateArchive::new(dim, problem.num_constraints());
    let mut current = init;
    let mut current_norm: Vec<Vec<f64>> = raws.iter().map(|r| normalization.apply(r)).collect();
    let mut particles = PointSet::with_capacity(dim, m * (schedule.steps() + 1));
    let mut particle_feasible = Vec::with_capacity(m * (schedule.steps() + 1));
    for (x, r) in current.iter().zip(&raws) {
        let values = evaluator.evaluate(x)?;
        archive.push(x, &values, Origin::Scmc, 0);
        particles.push(x);
        particle_feasible.push(is_feasible(r));
    }

    let mut off_cube = 0usize;
    let mut sigmas = Vec::with_capacity(schedule.steps());
    let mut acceptance_rates = Vec::with_capacity(schedule.steps());
    for t in 1..=schedule.steps() {
        let (tau_prev, tau) = (schedule.tau(t - 1), schedule.tau(t));
        let lr_new: Vec<f64> = current_norm.iter().map(|g| log_rho(tau, g)).collect();
        let mut log_w: Vec<f64> = current_norm
            .iter()
            .zip(&lr_new)
            .map(|(g, &new)| {
                let old = log_rho(tau_prev, g);
                if new == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    new - old
                }
            })
            .collect();
        if normalize_log_weights(&mut log_w).is_none() {
            let max_log_rho = lr_new.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            return Err(Error::WeightDegeneracy { step: t, max_log_rho });
        }
        let mut rng = stream_rng(config.seed, t, u32::MAX as usize);
        let picks = resample(&log_w, config.resampling, &mut rng);
        let sigma = adaptive_scale(&current)?;
        sigmas.push(sigma);

        let moved = picks
            .par_iter()
            .enumerate()
            .map(|(slot, &src)| {
                let mut rng = stream_rng(config.seed, t, slot);
                let mut x = current.row(src).to_vec();
                let mut lr = lr_new[src];
                let mut accepted = 0usize;
                let mut outside = 0usize;
                let mut evaluated = Vec::new();
                for _ in 0..config.moves_per_step {
                    let out = mh_move(&x, lr, tau, sigma, &evaluator, &config.target, &mut rng)?;
                    if out.in_cube {
                        evaluated.push(out.proposal.clone());
                    } else {
                        outside += 1;
                    }
                    accepted += out.accepted as usize;
                    x = out.point;
                    lr = out.log_rho;
                }
                Ok((x, accepted, outside, evaluated))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut next = PointSet::with_capacity(dim, m);
        let mut next_norm = Vec::with_capacity(m);
        let mut accepted = 0usize;
        for (x, acc, outside, evaluated) in moved {
            for y in &evaluated {
                archive.push(y, &evaluator.evaluate(y)?, Origin::Scmc, t);
            }
            let values = evaluator.evaluate(&x)?;
            particles.push(&x);
            particle_feasible.push(values.feasible);
            next_norm.push(values.normalized);
            next.push(&x);
            accepted += acc;
            off_cube += outside;
        }
        acceptance_rates.push(accepted as f64 / (m * config.moves_per_step) as f64);
        current = next;
        current_norm = next_norm;
    }

    let evaluations = evaluator.evaluations() + off_cube;
    debug_assert_eq!(evaluator.evaluations(), archive.len());
    Ok(ScmcResult {
        particles,
        particle_feasible,
        archive,
        evaluations,
        off_cube,
        normalization,
        sigmas,
        acceptance_rates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unconstrained(dim: usize) -> ConstrainedProblem {
        ConstrainedProblem::on_unit_cube("free", dim, 1, |_, g| g[0] = -1.0).unwrap()
    }

    #[test]
    fn scale_of_square_corners() {
        let p = PointSet::from_rows(2, [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        assert!((adaptive_scale(&p).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn scale_uses_type7_quantile() {
        let p = PointSet::from_rows(1, [[0.0], [0.4], [1.0]]);
        assert!((adaptive_scale(&p).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn collapsed_particles_use_floor() {
        let p = PointSet::from_rows(2, [[0.3, 0.3], [0.3, 0.3], [0.3, 0.3]]);
        assert_eq!(adaptive_scale(&p).unwrap(), SIGMA_FLOOR);
    }

    #[test]
    fn off_cube_proposal_rejected() {
        let p = unconstrained(1);
        let ev = Evaluator::new(&p);
        ev.set_normalization(Normalization::identity(1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut rejected = 0;
        for _ in 0..200 {
            let out = mh_move(&[0.999], 0.0, 1.0, 1.0, &ev, &TargetDensity::Uniform, &mut rng).unwrap();
            if !out.in_cube {
                assert!(!out.accepted);
                assert_eq!(out.point, vec![0.999]);
                rejected += 1;
            }
        }
        assert!(rejected > 0);
        assert_eq!(ev.evaluations(), 200 - rejected);
    }

    #[test]
    fn uphill_proposal_always_accepted() {
        let p = ConstrainedProblem::on_unit_cube("lin", 1, 1, |x, g| g[0] = x[0] - 0.5).unwrap();
        let ev = Evaluator::new(&p);
        ev.set_normalization(Normalization::identity(1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let x = [0.9];
            let lr = log_rho(5.0, &[0.4]);
            let out = mh_move(&x, lr, 5.0, 0.05, &ev, &TargetDensity::Uniform, &mut rng).unwrap();
            if out.in_cube && out.proposal[0] <= 0.9 {
                assert!(out.accepted);
            }
        }
    }

    #[test]
    fn flat_target_accepts_every_in_cube_proposal() {
        let p = ConstrainedProblem::on_unit_cube("wave", 2, 1, |x, g| g[0] = (7.0 * x[0]).sin() + x[1]).unwrap();
        let ev = Evaluator::new(&p);
        ev.set_normalization(Normalization::identity(1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut x = vec![0.5, 0.5];
        let (mut inside, mut accepted) = (0, 0);
        for _ in 0..4000 {
            let out = mh_move(&x, log_rho(0.0, &[0.0]), 0.0, 0.3, &ev, &TargetDensity::Uniform, &mut rng).unwrap();
            inside += out.in_cube as usize;
            accepted += out.accepted as usize;
            x = out.point;
        }
        assert_eq!(inside, accepted);
    }

    #[test]
    fn budget_is_exact() {
        let p = ConstrainedProblem::on_unit_cube("disk", 2, 1, |x, g| {
            g[0] = (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2) - 0.04
        })
        .unwrap();
        let cfg = ScmcConfig::new(50, RigiditySchedule::default(), 4);
        let r = scmc_run(&p, &cfg).unwrap();
        assert_eq!(r.evaluations, 50 * 9);
        assert_eq!(r.archive.len() + r.off_cube, 50 * 9);
        assert_eq!(r.particles.len(), 50 * 9);
        for (x, &f) in r.particles.iter().zip(&r.particle_feasible) {
            let g = (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2) - 0.04;
            assert_eq!(f, g <= 0.0);
        }
    }

    #[test]
    fn unconstrained_single_step_keeps_everything_feasible() {
        let sched = RigiditySchedule::new(vec![0.0, 1e6]).unwrap();
        let r = scmc_run(&unconstrained(3), &ScmcConfig::new(40, sched, 9)).unwrap();
        assert_eq!(r.feasible_ratio(), 1.0);
        assert_eq!(r.evaluations, 80);
    }

    #[test]
    fn independent_of_thread_count() {
        let p = ConstrainedProblem::on_unit_cube("band", 2, 2, |x, g| {
            g[0] = x[0] + x[1] - 1.2;
            g[1] = 0.6 - x[0] - x[1];
        })
        .unwrap();
        let cfg = ScmcConfig::new(64, RigiditySchedule::default(), 21);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| scmc_run(&p, &cfg).unwrap())
        };
        let (a, b) = (run(1), run(4));
        assert_eq!(a.particles, b.particles);
        assert_eq!(a.archive.points(), b.archive.points());
    }

    #[test]
    fn equal_weight_resampling_is_unbiased() {
        // mean drift of the resampled values over many seeds stays within 3 s.e.
        let values: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let mean = values.iter().sum::<f64>() / 50.0;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 50.0;
        let log_w = vec![-(50f64.ln()); 50];
        let reps = 2000;
        let mut drift = 0.0;
        for seed in 0..reps {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let idx = resample(&log_w, Resampling::Multinomial, &mut rng);
            drift += idx.iter().map(|&i| values[i]).sum::<f64>() / 50.0 - mean;
        }
        let se = (var / 50.0 / reps as f64).sqrt();
        assert!((drift / reps as f64).abs() < 3.0 * se);
    }

    #[test]
    fn systematic_counts_are_floor_or_ceil() {
        let w = [0.5f64, 0.3, 0.15, 0.05];
        let log_w: Vec<f64> = w.iter().map(|w| w.ln()).collect();
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let idx = resample(&log_w, Resampling::Systematic, &mut rng);
            for (k, wk) in w.iter().enumerate() {
                let c = idx.iter().filter(|&&i| i == k).count() as f64;
                let e = 4.0 * wk;
                assert!(c >= e.floor() - 1e-9 && c <= e.ceil() + 1e-9, "seed {seed} k {k} count {c}");
            }
        }
    }

    #[test]
    fn degenerate_weights_report_step() {
        let p = ConstrainedProblem::on_unit_cube("nan", 1, 1, |_, g| g[0] = f64::NAN).unwrap();
        let mut cfg = ScmcConfig::new(8, RigiditySchedule::default(), 0);
        cfg.cvn = false;
        match scmc_run(&p, &cfg) {
            Err(Error::WeightDegeneracy { step: 1, max_log_rho }) => assert_eq!(max_log_rho, f64::NEG_INFINITY),
            other => panic!("unexpected {other:?}"),
        }
    }
}
