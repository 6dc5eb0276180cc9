//! Constrained design problems on the unit hypercube.
//!
//! A [`ConstrainedProblem`] owns the box bounds and the inequality constraints
//! `g_k(x) <= 0` expressed in original units. Samplers never see original units:
//! they work on `[0,1]^p` and go through an [`Evaluator`], which rescales,
//! caches one constraint vector per distinct point and counts evaluations.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::points::bit_key;

/// Constraint vector function: writes `g_1(x), ..., g_K(x)` for a point in
/// original coordinates into the output slice.
pub type ConstraintFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

#[derive(Clone)]
pub struct ConstrainedProblem {
    name: String,
    bounds: Vec<(f64, f64)>,
    n_constraints: usize,
    constraints: Arc<ConstraintFn>,
}

/// Introspection record for a problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemInfo {
    pub name: String,
    pub dim: usize,
    pub n_constraints: usize,
    pub bounds: Vec<(f64, f64)>,
}

impl fmt::Debug for ConstrainedProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConstrainedProblem")
            .field("name", &self.name)
            .field("bounds", &self.bounds)
            .field("n_constraints", &self.n_constraints)
            .finish_non_exhaustive()
    }
}

impl ConstrainedProblem {
    pub fn new<F>(
        name: impl Into<String>,
        bounds: Vec<(f64, f64)>,
        n_constraints: usize,
        constraints: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        if bounds.is_empty() {
            return Err(Error::InvalidArgument("problem needs at least one dimension".into()));
        }
        if n_constraints == 0 {
            return Err(Error::InvalidArgument("problem needs at least one constraint".into()));
        }
        for (d, &(a, b)) in bounds.iter().enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidArgument(format!(
                    "bounds of dimension {d} must satisfy a < b, got [{a}, {b}]"
                )));
            }
        }
        Ok(Self { name: name.into(), bounds, n_constraints, constraints: Arc::new(constraints) })
    }

    /// Problem on the unit hypercube `[0,1]^dim`.
    pub fn on_unit_cube<F>(name: impl Into<String>, dim: usize, n_constraints: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self::new(name, vec![(0.0, 1.0); dim], n_constraints, f)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.n_constraints
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn info(&self) -> ProblemInfo {
        ProblemInfo {
            name: self.name.clone(),
            dim: self.dim(),
            n_constraints: self.n_constraints,
            bounds: self.bounds.clone(),
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "point has {} coordinates, problem {} has dimension {}",
                x.len(),
                self.name,
                self.dim()
            )));
        }
        Ok(())
    }

    /// Maps a point of the original box onto `[0,1]^p`.
    pub fn to_unit(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        x.iter()
            .zip(&self.bounds)
            .enumerate()
            .map(|(d, (&v, &(a, b)))| {
                if !(a..=b).contains(&v) {
                    return Err(Error::OutOfDomain { dim: d, value: v, lower: a, upper: b });
                }
                Ok((v - a) / (b - a))
            })
            .collect()
    }

    /// Inverse of [`to_unit`](Self::to_unit).
    pub fn from_unit(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(u)?;
        let mut x = vec![0.0; u.len()];
        self.from_unit_into(u, &mut x)?;
        Ok(x)
    }

    fn from_unit_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        for (d, ((o, &v), &(a, b))) in out.iter_mut().zip(u).zip(&self.bounds).enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfDomain { dim: d, value: v, lower: 0.0, upper: 1.0 });
            }
            *o = a + v * (b - a);
        }
        Ok(())
    }

    /// Raw constraint values at a unit-cube point, bypassing any evaluation
    /// accounting. Non-finite outputs are replaced by `+inf`; the returned flag
    /// reports whether that happened.
    pub fn constraints_at_unit(&self, u: &[f64]) -> Result<(Vec<f64>, bool)> {
        self.check_dim(u)?;
        let mut x = vec![0.0; u.len()];
        self.from_unit_into(u, &mut x)?;
        let mut g = vec![0.0; self.n_constraints];
        (self.constraints)(&x, &mut g);
        let mut nonfinite = false;
        for v in g.iter_mut() {
            if !v.is_finite() {
                *v = f64::INFINITY;
                nonfinite = true;
            }
        }
        Ok((g, nonfinite))
    }

    /// Feasibility of a unit-cube point, judged on raw constraint values.
    pub fn is_feasible_unit(&self, u: &[f64]) -> Result<bool> {
        Ok(is_feasible(&self.constraints_at_unit(u)?.0))
    }
}

/// `g_k <= 0` for all `k`, boundary inclusive.
#[inline]
pub fn is_feasible(raw: &[f64]) -> bool {
    raw.iter().all(|&g| g <= 0.0)
}

/// Per-constraint scales `sigma_k`; normalized constraints are `g_k / sigma_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Normalization {
    scales: Vec<f64>,
}

impl Normalization {
    /// Leaves constraint values untouched.
    pub fn identity(n_constraints: usize) -> Self {
        Self { scales: vec![1.0; n_constraints] }
    }

    pub fn from_scales(scales: Vec<f64>) -> Result<Self> {
        if scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "normalization scales must be positive and finite: {scales:?}"
            )));
        }
        Ok(Self { scales })
    }

    /// Zero-centred median absolute deviation of each constraint over the
    /// sampled raw values. Non-finite samples are ignored; a constraint whose
    /// median is zero keeps scale 1.
    pub fn fit<'a, I>(n_constraints: usize, samples: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut columns = vec![Vec::new(); n_constraints];
        for raw in samples {
            if raw.len() != n_constraints {
                return Err(Error::InvalidArgument(format!(
                    "sample has {} constraint values, expected {n_constraints}",
                    raw.len()
                )));
            }
            for (col, &g) in columns.iter_mut().zip(raw) {
                if g.is_finite() {
                    col.push(g.abs());
                }
            }
        }
        let mut scales = Vec::with_capacity(n_constraints);
        for (k, col) in columns.iter_mut().enumerate() {
            if col.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "constraint {} has no finite sample value to fit its scale",
                    k + 1
                )));
            }
            let sigma = median(col);
            if sigma > 0.0 {
                scales.push(sigma);
            } else {
                log::warn!("constraint {} has zero median |g|; using scale 1", k + 1);
                scales.push(1.0);
            }
        }
        Ok(Self { scales })
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn apply(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter().zip(&self.scales).map(|(g, s)| g / s).collect()
    }
}

/// Median with the mean-of-middle-pair convention; sorts in place.
pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Constraint values of one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintValues {
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
    pub feasible: bool,
}

/// Counting, caching front end to a problem. Safe to share between threads;
/// the counter moves once per distinct point no matter how many workers race
/// on it.
pub struct Evaluator<'p> {
    problem: &'p ConstrainedProblem,
    cache: Mutex<HashMap<Box<[u64]>, Arc<[f64]>>>,
    evaluations: AtomicUsize,
    nonfinite: AtomicUsize,
    normalization: OnceLock<Normalization>,
}

impl<'p> Evaluator<'p> {
    pub fn new(problem: &'p ConstrainedProblem) -> Self {
        Self {
            problem,
            cache: Mutex::new(HashMap::new()),
            evaluations: AtomicUsize::new(0),
            nonfinite: AtomicUsize::new(0),
            normalization: OnceLock::new(),
        }
    }

    pub fn problem(&self) -> &'p ConstrainedProblem {
        self.problem
    }

    /// Number of distinct points evaluated so far.
    pub fn evaluations(&self) -> usize {
        self.evaluations.load(Ordering::SeqCst)
    }

    /// Number of distinct points where some constraint was not finite.
    pub fn nonfinite_points(&self) -> usize {
        self.nonfinite.load(Ordering::SeqCst)
    }

    /// Raw constraint vector at a unit-cube point, from cache when possible.
    pub fn evaluate_raw(&self, x: &[f64]) -> Result<Arc<[f64]>> {
        let key = bit_key(x);
        if let Some(hit) = self.cache.lock().expect("cache poisoned").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let (raw, nonfinite) = self.problem.constraints_at_unit(x)?;
        let raw: Arc<[f64]> = raw.into();
        let mut cache = self.cache.lock().expect("cache poisoned");
        // another worker may have finished the same point while we computed
        let entry = cache.entry(key).or_insert_with(|| {
            self.evaluations.fetch_add(1, Ordering::SeqCst);
            if nonfinite {
                self.nonfinite.fetch_add(1, Ordering::SeqCst);
            }
            Arc::clone(&raw)
        });
        Ok(Arc::clone(entry))
    }

    /// Freezes the normalization used by [`evaluate`](Self::evaluate). Can be
    /// set only once per run.
    pub fn set_normalization(&self, normalization: Normalization) -> Result<()> {
        if normalization.scales.len() != self.problem.num_constraints() {
            return Err(Error::InvalidArgument(format!(
                "normalization has {} scales, problem has {} constraints",
                normalization.scales.len(),
                self.problem.num_constraints()
            )));
        }
        self.normalization
            .set(normalization)
            .map_err(|_| Error::InvalidArgument("normalization already fixed for this run".into()))
    }

    pub fn normalization(&self) -> Option<&Normalization> {
        self.normalization.get()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<ConstraintValues> {
        let norm = self
            .normalization
            .get()
            .ok_or_else(|| Error::InvalidArgument("fit or disable normalization before evaluate".into()))?;
        let raw = self.evaluate_raw(x)?;
        Ok(ConstraintValues { normalized: norm.apply(&raw), feasible: is_feasible(&raw), raw: raw.to_vec() })
    }
}
