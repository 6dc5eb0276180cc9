//! Probit relaxation of inequality constraints and rigidity schedules.
//!
//! For rigidity `tau` the relaxed indicator of `g_k(x) <= 0` is
//! `Phi(-tau * g_k(x))`; the relaxation of the whole feasible set is the
//! product over constraints. Everything here works with its logarithm.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// Final rigidity of every schedule; large enough that the relaxation is the
/// feasibility indicator to double precision for normalized constraints.
pub const TAU_MAX: f64 = 1e6;

const ASYMPTOTIC_CUTOFF: f64 = -8.0;

/// `log Phi(x)` for the standard normal CDF, finite for every finite `x`.
pub fn log_ndtr(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::INFINITY {
        return 0.0;
    }
    if x == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if x > 0.0 {
        // Phi(x) = 1 - Phi(-x); log1p keeps the tiny complement
        let tail = 0.5 * libm::erfc(x / std::f64::consts::SQRT_2);
        return (-tail).ln_1p();
    }
    if x >= ASYMPTOTIC_CUTOFF {
        return (0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)).ln();
    }
    // Mills-ratio series: Phi(x) ~ phi(x)/|x| * sum_k (-1)^k (2k-1)!! / x^{2k}
    let inv_x2 = 1.0 / (x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..40 {
        let next = -term * (2 * k - 1) as f64 * inv_x2;
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    -0.5 * x * x - (-x).ln() - 0.5 * (2.0 * PI).ln() + sum.ln()
}

/// `log rho_tau(g) = sum_k log Phi(-tau g_k)` for normalized constraint values.
///
/// At `tau = 0` the relaxation is the constant `Phi(0)^K` for every point,
/// including ones carrying the `+inf` non-finite sentinel. For `tau > 0` a
/// `+inf` entry gives `-inf`.
pub fn log_rho(tau: f64, normalized: &[f64]) -> f64 {
    if tau == 0.0 {
        return -(normalized.len() as f64) * LN_2;
    }
    let mut acc = 0.0;
    for &g in normalized {
        if g == f64::INFINITY {
            return f64::NEG_INFINITY;
        }
        acc += log_ndtr(-tau * g);
    }
    acc
}

/// Increasing rigidity sequence `0 = tau_0 < tau_1 < ... < tau_T = 1e6`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RigiditySchedule {
    taus: Vec<f64>,
}

impl RigiditySchedule {
    pub fn new(taus: Vec<f64>) -> Result<Self> {
        if taus.len() < 2 {
            return Err(Error::InvalidArgument("a rigidity schedule needs at least tau_0 and tau_T".into()));
        }
        if taus[0] != 0.0 {
            return Err(Error::InvalidArgument(format!("tau_0 must be 0, got {}", taus[0])));
        }
        if taus.last() != Some(&TAU_MAX) {
            return Err(Error::InvalidArgument(format!("tau_T must be {TAU_MAX:e}, got {}", taus[taus.len() - 1])));
        }
        if let Some(w) = taus.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument(format!(
                "rigidity schedule must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Self { taus })
    }

    /// `T` steps log-spaced between `e^0` and `e^7`, plus `tau_0 = 0` and
    /// `tau_T = 1e6`.
    pub fn log_spaced(steps: usize) -> Result<Self> {
        if steps < 2 {
            return Err(Error::InvalidArgument(format!("default schedule needs T >= 2, got {steps}")));
        }
        let mut taus = Vec::with_capacity(steps + 1);
        taus.push(0.0);
        for t in 1..steps {
            taus.push((7.0 * t as f64 / (steps - 1) as f64).exp());
        }
        taus.push(TAU_MAX);
        Self::new(taus)
    }

    /// Number of annealing steps `T`.
    pub fn steps(&self) -> usize {
        self.taus.len() - 1
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn tau(&self, t: usize) -> f64 {
        self.taus[t]
    }
}

impl Default for RigiditySchedule {
    fn default() -> Self {
        Self::log_spaced(8).expect("T = 8 is valid")
    }
}

/// Accepts `T=<int>` for the log-spaced default or an explicit comma list.
impl FromStr for RigiditySchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(t) = s.strip_prefix("T=").or_else(|| s.strip_prefix("t=")) {
            let steps =
                t.trim().parse::<usize>().map_err(|e| Error::InvalidArgument(format!("bad step count {t:?}: {e}")))?;
            return Self::log_spaced(steps);
        }
        let taus = s
            .split(',')
            .map(|v| {
                v.trim().parse::<f64>().map_err(|e| Error::InvalidArgument(format!("bad rigidity value {v:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(taus)
    }
}

impl fmt::Display for RigiditySchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.taus.iter().map(|t| crate::fmt::g17(*t)).collect();
        f.write_str(&parts.join(","))
    }
}

/// Log of an unnormalized target density on the unit cube.
#[derive(Clone, Default)]
pub enum TargetDensity {
    #[default]
    Uniform,
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl TargetDensity {
    #[inline]
    pub fn log_gamma(&self, x: &[f64]) -> f64 {
        match self {
            TargetDensity::Uniform => 0.0,
            TargetDensity::Custom(f) => f(x),
        }
    }
}

impl fmt::Debug for TargetDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetDensity::Uniform => f.write_str("Uniform"),
            TargetDensity::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}
