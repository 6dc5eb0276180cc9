//! Evaluated candidate points with their cached constraint values.

use std::collections::HashMap;
use std::io::Write;

use serde::Serialize;

use crate::fmt::g17;
use crate::points::{bit_key, PointSet};
use crate::problem::ConstraintValues;
use crate::relax::log_rho;

/// How a candidate entered the archive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    InitialLattice,
    Midpoint,
    Reflection,
    Scmc,
    Lhs,
    Sobol,
}

impl Origin {
    pub fn as_str(&self) -> &'static str {
        match self {
            Origin::InitialLattice => "initial-lattice",
            Origin::Midpoint => "midpoint",
            Origin::Reflection => "reflection",
            Origin::Scmc => "scmc",
            Origin::Lhs => "lhs",
            Origin::Sobol => "sobol",
        }
    }
}

/// Distinct unit-cube points, each with exactly one constraint evaluation.
#[derive(Debug, Clone)]
pub struct CandidateArchive {
    points: PointSet,
    n_constraints: usize,
    raw: Vec<f64>,
    normalized: Vec<f64>,
    feasible: Vec<bool>,
    origin: Vec<Origin>,
    step_added: Vec<usize>,
    lookup: HashMap<Box<[u64]>, usize>,
}

impl CandidateArchive {
    pub fn new(dim: usize, n_constraints: usize) -> Self {
        Self {
            points: PointSet::new(dim),
            n_constraints,
            raw: Vec::new(),
            normalized: Vec::new(),
            feasible: Vec::new(),
            origin: Vec::new(),
            step_added: Vec::new(),
            lookup: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn num_constraints(&self) -> usize {
        self.n_constraints
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.lookup.contains_key(&bit_key(x))
    }

    /// Adds a point; returns its index, or `None` if it is already stored.
    pub fn push(&mut self, x: &[f64], values: &ConstraintValues, origin: Origin, step: usize) -> Option<usize> {
        assert_eq!(values.raw.len(), self.n_constraints);
        let key = bit_key(x);
        if self.lookup.contains_key(&key) {
            return None;
        }
        let i = self.points.len();
        self.lookup.insert(key, i);
        self.points.push(x);
        self.raw.extend_from_slice(&values.raw);
        self.normalized.extend_from_slice(&values.normalized);
        self.feasible.push(values.feasible);
        self.origin.push(origin);
        self.step_added.push(step);
        Some(i)
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.points.row(i)
    }

    pub fn raw(&self, i: usize) -> &[f64] {
        &self.raw[i * self.n_constraints..(i + 1) * self.n_constraints]
    }

    pub fn normalized(&self, i: usize) -> &[f64] {
        &self.normalized[i * self.n_constraints..(i + 1) * self.n_constraints]
    }

    pub fn is_feasible(&self, i: usize) -> bool {
        self.feasible[i]
    }

    pub fn origin(&self, i: usize) -> Origin {
        self.origin[i]
    }

    pub fn step_added(&self, i: usize) -> usize {
        self.step_added[i]
    }

    pub fn log_rho(&self, i: usize, tau: f64) -> f64 {
        log_rho(tau, self.normalized(i))
    }

    pub fn feasible_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.feasible[i]).collect()
    }

    pub fn feasible_count(&self) -> usize {
        self.feasible.iter().filter(|&&f| f).count()
    }

    pub fn feasible_points(&self) -> PointSet {
        self.points.select(&self.feasible_indices())
    }

    /// Fraction of stored points that are feasible; NaN when empty.
    pub fn feasible_ratio(&self) -> f64 {
        if self.is_empty() {
            return f64::NAN;
        }
        self.feasible_count() as f64 / self.len() as f64
    }

    /// CSV with one row per point: index, origin, step, feasible flag, unit
    /// coordinates and raw constraint values.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header = vec!["index".to_string(), "origin".into(), "step".into(), "feasible".into()];
        header.extend((1..=self.dim()).map(|d| format!("x{d}")));
        header.extend((1..=self.n_constraints).map(|k| format!("g{k}")));
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.len() {
            let mut row = vec![
                i.to_string(),
                self.origin[i].as_str().to_string(),
                self.step_added[i].to_string(),
                (self.feasible[i] as u8).to_string(),
            ];
            row.extend(self.point(i).iter().map(|v| g17(*v)));
            row.extend(self.raw(i).iter().map(|v| g17(*v)));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}
