//! Benchmark problems from the constrained optimization literature, with the
//! dimension, constraint counts and feasibility ratios listed for them.

use std::f64::consts::{PI, SQRT_2};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::estimate_feasibility_ratio;
use crate::problem::ConstrainedProblem;

/// A catalog problem and its reference metadata.
#[derive(Clone)]
pub struct BenchmarkEntry {
    pub key: &'static str,
    pub problem: ConstrainedProblem,
    pub expected_dim: usize,
    /// Linear inequality constraints.
    pub expected_lic: usize,
    /// Nonlinear inequality constraints.
    pub expected_nic: usize,
    /// Feasible volume fraction of the box, as printed to four decimals.
    pub expected_ratio: f64,
    /// Objective function, kept for reference only.
    pub objective: &'static str,
    /// Where the constraints are undefined inside the box, if anywhere.
    pub singular_locus: Option<&'static str>,
    pub note: Option<&'static str>,
}

impl std::fmt::Debug for BenchmarkEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BenchmarkEntry")
            .field("key", &self.key)
            .field("dim", &self.expected_dim)
            .field("lic", &self.expected_lic)
            .field("nic", &self.expected_nic)
            .field("ratio", &self.expected_ratio)
            .finish()
    }
}

struct Spec {
    key: &'static str,
    bounds: Vec<(f64, f64)>,
    k: usize,
    lic: usize,
    nic: usize,
    ratio: f64,
    objective: &'static str,
    singular: Option<&'static str>,
    note: Option<&'static str>,
}

fn entry<F>(s: Spec, f: F) -> BenchmarkEntry
where
    F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
{
    let dim = s.bounds.len();
    BenchmarkEntry {
        key: s.key,
        problem: ConstrainedProblem::new(s.key, s.bounds, s.k, f).expect("catalog entries are valid"),
        expected_dim: dim,
        expected_lic: s.lic,
        expected_nic: s.nic,
        expected_ratio: s.ratio,
        objective: s.objective,
        singular_locus: s.singular,
        note: s.note,
    }
}

fn unit(dim: usize) -> Vec<(f64, f64)> {
    vec![(0.0, 1.0); dim]
}

fn mot(x: &[f64], g: &mut [f64]) {
    let (x1, x2) = (x[0], x[1]);
    g[0] = x1 - (50.0 * (x2 - 0.52).powi(2) + 2.0).sqrt() + 1.0;
    g[1] = (120.0 * (x2 - 0.48).powi(2) + 1.0).sqrt() - 0.75 - x1;
    g[2] = 0.65 * 0.65 - x1 * x1 - x2 * x2;
}

fn g01(x: &[f64], g: &mut [f64]) {
    let x = |i: usize| x[i - 1];
    g[0] = 2.0 * x(1) + 2.0 * x(2) + x(10) + x(11) - 10.0;
    g[1] = 2.0 * x(1) + 2.0 * x(3) + x(10) + x(12) - 10.0;
    g[2] = 2.0 * x(2) + 2.0 * x(3) + x(11) + x(12) - 10.0;
    g[3] = -8.0 * x(1) + x(10);
    g[4] = -8.0 * x(2) + x(11);
    g[5] = -8.0 * x(3) + x(12);
    g[6] = -2.0 * x(4) - x(5) + x(10);
    g[7] = -2.0 * x(6) - x(7) + x(11);
    g[8] = -2.0 * x(8) - x(9) + x(12);
}

fn g04(x: &[f64], g: &mut [f64]) {
    let (x1, x2, x3, x4, x5) = (x[0], x[1], x[2], x[3], x[4]);
    let a = 85.334407 + 0.0056858 * x2 * x5 + 0.0006262 * x1 * x4 - 0.0022053 * x3 * x5;
    let b = 80.51249 + 0.0071317 * x2 * x5 + 0.0029955 * x1 * x2 + 0.0021813 * x3 * x3;
    let c = 9.300961 + 0.0047026 * x3 * x5 + 0.0012547 * x1 * x3 + 0.0019085 * x3 * x4;
    g[0] = a - 92.0;
    g[1] = -a;
    g[2] = b - 110.0;
    g[3] = -b + 90.0;
    g[4] = c - 25.0;
    g[5] = -c + 20.0;
}

fn g06(x: &[f64], g: &mut [f64]) {
    let (x1, x2) = (x[0], x[1]);
    g[0] = -(x1 - 5.0).powi(2) - (x2 - 5.0).powi(2) + 100.0;
    g[1] = (x1 - 6.0).powi(2) + (x2 - 5.0).powi(2) - 82.81;
}

fn g07(x: &[f64], g: &mut [f64]) {
    let x = |i: usize| x[i - 1];
    g[0] = -105.0 + 4.0 * x(1) + 5.0 * x(2) - 3.0 * x(7) + 9.0 * x(8);
    g[1] = 10.0 * x(1) - 8.0 * x(2) - 17.0 * x(7) + 2.0 * x(8);
    g[2] = -8.0 * x(1) + 2.0 * x(2) + 5.0 * x(9) - 2.0 * x(10) - 12.0;
    g[3] = 3.0 * (x(1) - 2.0).powi(2) + 4.0 * (x(2) - 3.0).powi(2) + 2.0 * x(3).powi(2) - 7.0 * x(4) - 120.0;
    g[4] = 5.0 * x(1).powi(2) + 8.0 * x(2) + (x(3) - 6.0).powi(2) - 2.0 * x(4) - 40.0;
    g[5] = x(1).powi(2) + 2.0 * (x(2) - 2.0).powi(2) - 2.0 * x(1) * x(2) + 14.0 * x(5) - 6.0 * x(6);
    g[6] = 0.5 * (x(1) - 8.0).powi(2) + 2.0 * (x(2) - 4.0).powi(2) + 3.0 * x(5).powi(2) - x(6) - 30.0;
    g[7] = -3.0 * x(1) + 6.0 * x(2) + 12.0 * (x(9) - 8.0).powi(2) - 7.0 * x(10);
}

fn g08(x: &[f64], g: &mut [f64]) {
    let (x1, x2) = (x[0], x[1]);
    g[0] = x1 * x1 - x2 + 1.0;
    g[1] = 1.0 - x1 + (x2 - 4.0).powi(2);
}

fn g09(x: &[f64], g: &mut [f64]) {
    let x = |i: usize| x[i - 1];
    g[0] = -127.0 + 2.0 * x(1).powi(2) + 3.0 * x(2).powi(4) + x(3) + 4.0 * x(4).powi(2) + 5.0 * x(5);
    g[1] = -282.0 + 7.0 * x(1) + 3.0 * x(2) + 10.0 * x(3).powi(2) + x(4) - x(5);
    g[2] = -196.0 + 23.0 * x(1) + x(2).powi(2) + 6.0 * x(6).powi(2) - 8.0 * x(7);
    g[3] = 4.0 * x(1).powi(2) + x(2).powi(2) - 3.0 * x(1) * x(2) + 2.0 * x(3).powi(2) + 5.0 * x(6) - 11.0 * x(7);
}

fn g10(x: &[f64], g: &mut [f64]) {
    let x = |i: usize| x[i - 1];
    g[0] = -1.0 + 0.0025 * (x(4) + x(6));
    g[1] = -1.0 + 0.0025 * (x(5) + x(7) - x(4));
    g[2] = -1.0 + 0.01 * (x(8) - x(5));
    g[3] = -x(1) * x(6) + 833.33252 * x(4) + 100.0 * x(1) - 83333.333;
    g[4] = -x(2) * x(7) + 1250.0 * x(5) + x(2) * x(4) - 1250.0 * x(4);
    g[5] = -x(3) * x(8) + 1250000.0 + x(3) * x(5) - 2500.0 * x(5);
}

fn ibd(x: &[f64], g: &mut [f64]) {
    let (x1, x2, x3, x4) = (x[0], x[1], x[2], x[3]);
    let web = x1 - 2.0 * x4;
    g[0] = 2.0 * x2 * x4 + x3 * web - 300.0;
    g[1] = 180000.0 * x1 / (x3 * web.powi(3) + 2.0 * x2 * x4 * (4.0 * x4 * x4 + 3.0 * x1 * web))
        + 15000.0 * x2 / (web * x3.powi(3) + 2.0 * x4 * x2.powi(3))
        - 6.0;
}

fn pvd(x: &[f64], g: &mut [f64]) {
    let (x1, x2, x3, x4) = (x[0], x[1], x[2], x[3]);
    g[0] = -x1 + 0.0193 * x3;
    g[1] = -x2 + 0.00954 * x3;
    g[2] = -PI * x3 * x3 * x4 - 4.0 / 3.0 * PI * x3.powi(3) + 1296000.0;
    g[3] = x4 - 240.0;
}

fn srd(x: &[f64], g: &mut [f64]) {
    let x = |i: usize| x[i - 1];
    g[0] = 27.0 / (x(1) * x(2).powi(2) * x(3)) - 1.0;
    g[1] = 397.5 / (x(1) * x(2).powi(2) * x(3).powi(2)) - 1.0;
    g[2] = 1.93 * x(4).powi(3) / (x(2) * x(3) * x(6).powi(4)) - 1.0;
    g[3] = 1.93 * x(5).powi(3) / (x(2) * x(3) * x(7).powi(4)) - 1.0;
    g[4] = ((745.0 * x(4) / (x(2) * x(3))).powi(2) + 16.9e6).sqrt() / (110.0 * x(6).powi(3)) - 1.0;
    g[5] = ((745.0 * x(5) / (x(2) * x(3))).powi(2) + 157.5e6).sqrt() / (85.0 * x(7).powi(3)) - 1.0;
    g[6] = x(2) * x(3) / 40.0 - 1.0;
    g[7] = 5.0 * x(2) / x(1) - 1.0;
    g[8] = x(1) / (12.0 * x(2)) - 1.0;
    g[9] = (1.5 * x(6) + 1.9) / x(4) - 1.0;
    g[10] = (1.1 * x(7) + 1.9) / x(5) - 1.0;
}

fn tsd(x: &[f64], g: &mut [f64]) {
    let (x1, x2, x3) = (x[0], x[1], x[2]);
    g[0] = 1.0 - x2.powi(3) * x3 / (71875.0 * x1.powi(4));
    g[1] = (4.0 * x2 * x2 - x1 * x2) / (12566.0 * x1.powi(3) * (x2 - x1)) + 1.0 / (5108.0 * x1 * x1) - 1.0;
    g[2] = 1.0 - 140.45 * x1 / (x3 * x2 * x2);
    g[3] = (x1 + x2) / 1.5 - 1.0;
}

fn ttd(x: &[f64], g: &mut [f64]) {
    const P: f64 = 2.0;
    const SIGMA: f64 = 2.0;
    let (x1, x2) = (x[0], x[1]);
    let denom = SQRT_2 * x1 * x1 + 2.0 * x1 * x2;
    g[0] = (SQRT_2 * x1 + x2) / denom * P - SIGMA;
    g[1] = x2 / denom * P - SIGMA;
    g[2] = 1.0 / (x1 + SQRT_2 * x2) * P - SIGMA;
}

fn wbd(x: &[f64], g: &mut [f64]) {
    const P: f64 = 6000.0;
    const L: f64 = 14.0;
    const E: f64 = 30e6;
    const G: f64 = 12e6;
    const TAU_MAX: f64 = 13600.0;
    const SIGMA_MAX: f64 = 30000.0;
    const DELTA_MAX: f64 = 0.25;
    let (x1, x2, x3, x4) = (x[0], x[1], x[2], x[3]);
    let m = P * (L + x2 / 2.0);
    let r = (x2 * x2 / 4.0 + (x1 + x3).powi(2) / 4.0).sqrt();
    let j = 2.0 * SQRT_2 * x1 * x2 * (x2 * x2 / 12.0 + (x1 + x3).powi(2) / 4.0);
    let tau1 = P / (SQRT_2 * x1 * x2);
    let tau2 = m * r / j;
    let tau = (tau1 * tau1 + 2.0 * tau1 * tau2 * x2 / (2.0 * r) + tau2 * tau2).sqrt();
    let sigma = 6.0 * P * L / (x4 * x3 * x3);
    let delta = 4.0 * P * L.powi(3) / (E * x3.powi(3) * x4);
    let pc =
        4.013 * E * (x3 * x3 * x4.powi(6) / 36.0).sqrt() / (L * L) * (1.0 - x3 / (2.0 * L) * (E / (4.0 * G)).sqrt());
    g[0] = tau - TAU_MAX;
    g[1] = sigma - SIGMA_MAX;
    g[2] = x1 - x4;
    g[3] = 0.10471 * x1 * x1 + 0.04811 * x3 * x4 * (14.0 + x2) - 5.0;
    g[4] = delta - DELTA_MAX;
    g[5] = P - pc;
}

/// Variables ordered `b_1..b_5, h_1..h_5`.
fn scbd(x: &[f64], g: &mut [f64]) {
    const L: f64 = 100.0;
    const P: f64 = 50000.0;
    const E: f64 = 2e7;
    let b = &x[..5];
    let h = &x[5..];
    let inertia = |i: usize| b[i] * h[i].powi(3) / 12.0;
    // segment i (from the free end) carries moment P * i * l
    for s in 1..=5 {
        let i = 5 - s;
        g[s - 1] = 6.0 * P * s as f64 * L / (b[i] * h[i] * h[i]) - 14000.0;
    }
    g[5] = P * L.powi(3) / (3.0 * E)
        * (61.0 / inertia(0) + 37.0 / inertia(1) + 19.0 / inertia(2) + 7.0 / inertia(3) + 1.0 / inertia(4))
        - 2.7;
    for i in 0..5 {
        g[6 + i] = h[i] / b[i] - 20.0;
    }
}

/// All sixteen catalog entries.
pub fn catalog() -> Vec<BenchmarkEntry> {
    let spec = |key, bounds, k, lic, nic, ratio, objective| Spec {
        key,
        bounds,
        k,
        lic,
        nic,
        ratio,
        objective,
        singular: None,
        note: None,
    };
    let mut g01_bounds = vec![(0.0, 1.0); 13];
    for b in &mut g01_bounds[9..12] {
        *b = (0.0, 100.0);
    }
    vec![
        entry(spec("MOT", unit(2), 3, 0, 3, 0.0053, "none (design-only problem)"), mot),
        entry(
            Spec {
                note: Some("MOT with g1 scaled by 1e-3 and g3 by 1e3; same feasible region"),
                ..spec("MOT-S", unit(2), 3, 0, 3, 0.0053, "none (design-only problem)")
            },
            |x, g| {
                mot(x, g);
                g[0] *= 1e-3;
                g[2] *= 1e3;
            },
        ),
        entry(
            spec("G01", g01_bounds, 9, 9, 0, 0.0000, "5 sum_{i<=4} x_i - 5 sum_{i<=4} x_i^2 - sum_{i=5}^{13} x_i"),
            g01,
        ),
        entry(
            spec(
                "G04",
                vec![(78.0, 102.0), (33.0, 45.0), (27.0, 45.0), (27.0, 45.0), (27.0, 45.0)],
                6,
                0,
                6,
                0.2696,
                "5.3578547 x3^2 + 0.8356891 x1 x5 + 37.293239 x1 - 40792.141",
            ),
            g04,
        ),
        entry(spec("G06", vec![(13.0, 100.0), (0.0, 100.0)], 2, 0, 2, 0.0001, "(x1 - 10)^3 + (x2 - 20)^3"), g06),
        entry(
            spec(
                "G07",
                vec![(-10.0, 10.0); 10],
                8,
                3,
                5,
                0.0000,
                "x1^2 + x2^2 + x1 x2 - 14 x1 - 16 x2 + (x3 - 10)^2 + 4 (x4 - 5)^2 + (x5 - 3)^2 + 2 (x6 - 1)^2 \
                 + 5 x7^2 + 7 (x8 - 11)^2 + 2 (x9 - 10)^2 + (x10 - 7)^2 + 45",
            ),
            g07,
        ),
        entry(
            spec("G08", vec![(0.0, 10.0); 2], 2, 0, 2, 0.0086, "sin^3(2 pi x1) sin(2 pi x2) / (x1^3 (x1 + x2))"),
            g08,
        ),
        entry(
            spec(
                "G09",
                vec![(-10.0, 10.0); 7],
                4,
                0,
                4,
                0.0053,
                "(x1 - 10)^2 + 5 (x2 - 12)^2 + x3^4 + 3 (x4 - 11)^2 + 10 x5^6 + 7 x6^2 + x7^4 - 4 x6 x7 - 10 x6 - 8 x7",
            ),
            g09,
        ),
        entry(
            spec(
                "G10",
                vec![
                    (100.0, 10000.0),
                    (1000.0, 10000.0),
                    (1000.0, 10000.0),
                    (10.0, 1000.0),
                    (10.0, 1000.0),
                    (10.0, 1000.0),
                    (10.0, 1000.0),
                    (10.0, 1000.0),
                ],
                6,
                3,
                3,
                0.0000,
                "x1 + x2 + x3",
            ),
            g10,
        ),
        entry(
            Spec {
                note: Some("listed with 3 nonlinear constraints but its formulation has 2; the 2 reproduce the ratio"),
                ..spec(
                    "IBD",
                    vec![(10.0, 80.0), (10.0, 50.0), (0.9, 5.0), (0.9, 5.0)],
                    2,
                    0,
                    3,
                    0.0015,
                    "5000 / (x3 (x1 - 2 x4)^3 / 12 + x2 x4^3 / 6 + 2 x2 x4 ((x1 - x4) / 2)^2)",
                )
            },
            ibd,
        ),
        entry(
            spec(
                "PVD",
                vec![(0.0625, 6.1875), (0.0625, 6.1875), (10.0, 200.0), (10.0, 200.0)],
                4,
                3,
                1,
                0.4032,
                "0.6224 x1 x3 x4 + 1.7781 x2 x3^2 + 3.1661 x1^2 x4 + 19.84 x1^2 x3",
            ),
            pvd,
        ),
        entry(
            spec(
                "SRD",
                vec![(2.6, 3.6), (0.7, 0.8), (17.0, 28.0), (7.3, 8.3), (7.8, 8.3), (2.9, 3.9), (5.0, 5.5)],
                11,
                0,
                11,
                0.0019,
                "0.7854 x1 x2^2 (3.3333 x3^2 + 14.9334 x3 - 43.0934) - 1.508 x1 (x6^2 + x7^2) \
                 + 7.4777 (x6^3 + x7^3) + 0.7854 (x4 x6^2 + x5 x7^2)",
            ),
            srd,
        ),
        entry(
            Spec {
                singular: Some("g2 is undefined on the plane x2 = x1"),
                ..spec("TSD", vec![(0.05, 2.0), (0.25, 1.3), (2.0, 15.0)], 4, 1, 3, 0.0075, "x1^2 x2 (x3 + 2)")
            },
            tsd,
        ),
        entry(
            Spec {
                singular: Some("g1, g2 undefined at x1 = 0; g3 at the origin"),
                ..spec("TTD", unit(2), 3, 0, 3, 0.2179, "(2 sqrt(2) x1 + x2) l, l = 100")
            },
            ttd,
        ),
        entry(
            spec(
                "WBD",
                vec![(0.125, 10.0), (0.1, 10.0), (0.1, 10.0), (0.1, 10.0)],
                6,
                1,
                5,
                0.0010,
                "1.10471 x1^2 x2 + 0.04811 x3 x4 (14 + x2)",
            ),
            wbd,
        ),
        entry(
            spec(
                "SCBD",
                [vec![(2.0, 3.5); 5], vec![(35.0, 60.0); 5]].concat(),
                11,
                0,
                11,
                0.0005,
                "l sum_i b_i h_i, l = 100",
            ),
            scbd,
        ),
    ]
}

/// Looks up a catalog entry by key, ignoring case. `MOT-O` is accepted for `MOT`.
pub fn get(key: &str) -> Result<BenchmarkEntry> {
    let wanted = key.trim().to_ascii_uppercase();
    let wanted = if wanted == "MOT-O" { "MOT".to_string() } else { wanted };
    catalog().into_iter().find(|e| e.key == wanted).ok_or_else(|| Error::UnknownProblem(key.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    /// A known discrepancy that is reported but not treated as a failure.
    Flag,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckItem {
    pub field: &'static str,
    pub expected: f64,
    pub actual: f64,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpotCheck {
    pub key: &'static str,
    pub budget: usize,
    pub items: Vec<CheckItem>,
}

impl SpotCheck {
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.status != CheckStatus::Fail)
    }
}

/// Compares an entry with its metadata: dimension, constraint count and the
/// feasibility ratio estimated from `budget` Sobol' points. Ratios of at
/// least 1e-3 must lie within five binomial standard errors; smaller printed
/// ratios are only checked to agree at the printed precision.
pub fn spot_check(entry: &BenchmarkEntry, budget: usize) -> Result<SpotCheck> {
    let mut items = Vec::new();
    let dim = entry.problem.dim();
    items.push(CheckItem {
        field: "dimension",
        expected: entry.expected_dim as f64,
        actual: dim as f64,
        status: if dim == entry.expected_dim { CheckStatus::Pass } else { CheckStatus::Fail },
        detail: String::new(),
    });
    let k = entry.problem.num_constraints();
    let listed = entry.expected_lic + entry.expected_nic;
    items.push(CheckItem {
        field: "constraints",
        expected: listed as f64,
        actual: k as f64,
        status: match (k == listed, entry.note.is_some()) {
            (true, _) => CheckStatus::Pass,
            (false, true) => CheckStatus::Flag,
            (false, false) => CheckStatus::Fail,
        },
        detail: entry.note.unwrap_or("").to_string(),
    });

    let est = estimate_feasibility_ratio(&entry.problem, budget)?;
    let r = entry.expected_ratio;
    let se = (r.max(1.0 / budget as f64) * (1.0 - r) / budget as f64).sqrt();
    let (ok, detail) = if r >= 1e-3 {
        ((est.ratio - r).abs() <= 5.0 * se, format!("5 standard errors = {:.2e}", 5.0 * se))
    } else {
        // printed to four decimals
        ((est.ratio - r).abs() <= 5e-5 + 5.0 * se, "agreement at the printed precision".to_string())
    };
    let status = match (ok, r < 1e-2) {
        (true, _) => CheckStatus::Pass,
        (false, true) => CheckStatus::Flag,
        (false, false) => CheckStatus::Fail,
    };
    items.push(CheckItem { field: "feasibility_ratio", expected: r, actual: est.ratio, status, detail });
    Ok(SpotCheck { key: entry.key, budget, items })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `(key, unit-cube point, constraint values)`, computed independently in
    /// double precision with NumPy.
    #[rustfmt::skip]
    const FIXTURES: &[(&str, &[f64], &[f64])] = &[
        ("MOT", &[0.5, 0.505], &[0.08181453963171648, -0.21317793233361382, -0.08252499999999996]),
        ("MOT", &[0.25, 0.255], &[-1.0976051627136965, 1.6598872156540772, 0.29497500000000004]),
        ("MOT", &[0.75, 0.755], &[-0.43202887240292975, 1.6741140496207758, -0.7100249999999999]),
        ("MOT-S", &[0.5, 0.505], &[8.181453963171648e-05, -0.21317793233361382, -82.52499999999996]),
        ("MOT-S", &[0.25, 0.255], &[-0.0010976051627136964, 1.6598872156540772, 294.975]),
        ("G01", &[0.5, 0.5007692307692307, 0.5015384615384615, 0.5023076923076923, 0.5030769230769231, 0.5038461538461538, 0.5046153846153846, 0.5053846153846154, 0.5061538461538462, 0.5069230769230769, 0.5076923076923077, 0.5084615384615384, 0.5092307692307693],
            &[93.46307692307693, 93.54153846153847, 93.61999999999999, 46.69230769230769, 46.76307692307692, 46.833846153846146, 49.184615384615384, 49.25692307692307, 49.32923076923076]),
        ("G01", &[0.25, 0.25076923076923074, 0.25153846153846154, 0.2523076923076923, 0.2530769230769231, 0.25384615384615383, 0.25461538461538463, 0.2553846153846154, 0.2561538461538462, 0.2569230769230769, 0.25769230769230766, 0.25846153846153846, 0.2592307692307692],
            &[42.463076923076926, 42.541538461538465, 42.62, 23.692307692307693, 23.76307692307692, 23.833846153846153, 24.934615384615384, 25.006923076923073, 25.07923076923077]),
        ("G04", &[0.5, 0.502, 0.504, 0.506, 0.508], &[0.5138684207744006, -92.5138684207744, -6.0694058897856, -13.9305941102144, -3.0086968493471993, -1.9913031506528007]),
        ("G04", &[0.25, 0.252, 0.254, 0.256, 0.258], &[-0.7247330622255959, -91.2752669377744, -10.11904371718559, -9.88095628281441, -5.768769116947201, 0.7687691169472011]),
        ("G06", &[0.5, 0.505], &[-4622.5, 4537.69]),
        ("G06", &[0.25, 0.255], &[-1205.3125, 1164.0025]),
        ("G07", &[0.5, 0.501, 0.502, 0.503, 0.504, 0.505, 0.506, 0.507, 0.508, 0.509], &[-104.0, -1.9200000000000124, -11.52, -72.89519999999999, -4.438399999999987, 8.360800000000006, 33.6, 736.4472]),
        ("G07", &[0.25, 0.251, 0.252, 0.253, 0.254, 0.255, 0.256, 0.257, 0.258, 0.259], &[-179.0, 63.08, 3.4800000000000004, 365.5048, 175.16160000000002, 33.16080000000002, 293.3, 1997.2472]),
        ("G08", &[0.5, 0.505], &[20.95, -2.8975000000000004]),
        ("G08", &[0.25, 0.255], &[4.7, 0.6025000000000005]),
        ("G09", &[0.5, 0.5014285714285714, 0.5028571428571429, 0.5042857142857143, 0.5057142857142857, 0.5071428571428571, 0.5085714285714286], &[-126.34203881715953, -281.9102040816326, -197.24816326530612, -1.164081632653057]),
        ("G09", &[0.25, 0.25142857142857145, 0.25285714285714284, 0.2542857142857143, 0.2557142857142857, 0.2571428571428571, 0.25857142857142856], &[1822.7381944189922, -87.62448979591836, -106.10530612244898, 127.83591836734695]),
        ("G10", &[0.5, 0.50125, 0.5025, 0.50375, 0.505, 0.50625, 0.5075, 0.50875], &[1.5497500000000004, 0.2841562499999999, -0.9628749999999997, -1735903.5384195, -18913.640624999534, -45377.28125]),
        ("G10", &[0.25, 0.25125, 0.2525, 0.25375, 0.255, 0.25625, 0.2575, 0.25875], &[0.3122499999999999, -0.3345937499999999, -0.9628750000000008, -287151.7746195, -10560.515625, 581725.8437500001]),
        ("IBD", &[0.5, 0.5025, 0.505, 0.5075], &[-4.594985750000035, 3.9355824120723497]),
        ("IBD", &[0.75, 0.7525, 0.755, 0.7575], &[238.96995174999995, -1.994732929147757]),
        ("PVD", &[0.5, 0.5025, 0.505, 0.5075], &[-1.080165, -2.1295494999999995, -7439005.649883442, -133.575]),
        ("PVD", &[0.25, 0.2525, 0.255, 0.2575], &[-0.4656649999999998, -1.0514495, -172892.96387063665, -181.075]),
        ("SRD", &[0.5, 0.5014285714285714, 0.5028571428571429, 0.5042857142857143, 0.5057142857142857, 0.5071428571428571, 0.5085714285714286],
            &[-0.3130495926588097, -0.5511409087771901, -0.5972248107327004, -0.9217616203923853, -0.05181120300310593, 0.018248872029217766, -0.5774552448979592, 0.20990783410138247, -0.6556211515266933, -0.10168405637927869, -0.04633670392052491]),
        ("SRD", &[0.75, 0.7514285714285714, 0.7528571428571429, 0.7542857142857143, 0.7557142857142857, 0.7571428571428571, 0.7585714285714286],
            &[-0.4694163690465629, -0.6910233889552448, -0.7123347898304089, -0.9356728870890163, -0.23382808144882405, -0.05118675996644928, -0.5100820306122449, 0.15692963752665223, -0.639851333087603, -0.0830081589216034, -0.04409992139051444]),
        ("TSD", &[0.5, 0.5033333333333333, 0.5066666666666667], &[0.9999489345532857, -1.0003012034004761, -26.663286279329757, 0.20233333333333325]),
        ("TSD", &[0.25, 0.25333333333333335, 0.25666666666666665], &[0.9998777841732336, -1.0180971823691536, -52.12888867907171, -0.29766666666666663]),
        ("TTD", &[0.5, 0.505], &[0.8236025725760929, -0.8236025725760932, -0.35279485484781414]),
        ("TTD", &[0.75, 0.755], &[-0.11653033285714942, -1.216803000476184, -0.8997273323809654]),
        ("WBD", &[0.5, 0.5025, 0.505, 0.5075], &[-13219.061860115618, -26217.795261311323, -0.06174999999999908, 21.66376503741736, -0.24676956508248965, -60123041.98520281]),
        ("WBD", &[0.25, 0.2525, 0.255, 0.2575], &[-11344.461550841746, -2380.5873165669473, -0.05550000000000033, 1.2571689261458197, -0.20416350300837935, -4619532.693275722]),
        ("SCBD", &[0.5, 0.501, 0.502, 0.503, 0.504, 0.505, 0.506, 0.507, 0.508, 0.509],
            &[-9220.855439404233, -4426.478529928914, 383.1793076100821, 5208.166824646403, 10048.532945550738, 1.5008478065873385, -2.6818181818181834, -2.6821733599854625, -2.682528151107885, -2.682882555817752, -2.683236574746008]),
        ("SCBD", &[0.75, 0.751, 0.752, 0.753, 0.754, 0.755, 0.756, 0.757, 0.758, 0.759],
            &[-10711.08321626695, -7412.913046054368, -4105.463441020704, -788.7082713073032, 2537.3786747487356, -0.1458366051622595, -2.7600000000000016, -2.7602750679673775, -2.7605498721227626, -2.7608244128455013, -2.7610986905142134]),
    ];

    #[test]
    fn constraint_values_match_fixtures() {
        for (key, u, want) in FIXTURES {
            let e = get(key).unwrap();
            let (got, nonfinite) = e.problem.constraints_at_unit(u).unwrap();
            assert!(!nonfinite);
            assert_eq!(got.len(), want.len(), "{key}");
            for (k, (g, w)) in got.iter().zip(*want).enumerate() {
                assert!((g - w).abs() <= 1e-9 * w.abs().max(1.0), "{key} g{}: {g} vs {w}", k + 1);
            }
        }
    }

    #[test]
    fn every_entry_has_two_fixture_points() {
        for e in catalog() {
            let n = FIXTURES.iter().filter(|f| f.0 == e.key).count();
            assert!(n >= 2, "{} has {n} fixture points", e.key);
        }
    }

    #[test]
    fn catalog_metadata() {
        let cat = catalog();
        assert_eq!(cat.len(), 16);
        let g01 = get("G01").unwrap();
        assert_eq!((g01.expected_dim, g01.expected_lic, g01.expected_nic), (13, 9, 0));
        let srd = get("srd").unwrap();
        assert_eq!((srd.expected_dim, srd.expected_nic), (7, 11));
        for e in &cat {
            assert_eq!(e.problem.dim(), e.expected_dim, "{}", e.key);
            if e.key != "IBD" {
                assert_eq!(e.problem.num_constraints(), e.expected_lic + e.expected_nic, "{}", e.key);
            }
        }
        assert_eq!(get("mot-o").unwrap().key, "MOT");
        assert!(matches!(get("G02"), Err(Error::UnknownProblem(_))));
    }

    #[test]
    fn scaled_motivation_problem_has_same_region() {
        let (a, b) = (get("MOT").unwrap(), get("MOT-S").unwrap());
        let pts = crate::lowdisc::sobol(4096, 2, 0).unwrap();
        for u in pts.iter() {
            assert_eq!(a.problem.is_feasible_unit(u).unwrap(), b.problem.is_feasible_unit(u).unwrap());
        }
    }

    #[test]
    fn spring_design_singularity_is_sentinel() {
        let e = get("TSD").unwrap();
        let x = [0.5, 0.5, 5.0];
        let u = e.problem.to_unit(&x).unwrap();
        let (_, nonfinite) = e.problem.constraints_at_unit(&u).unwrap();
        assert!(nonfinite);
        assert!(e.singular_locus.is_some());
    }

    #[test]
    fn spot_checks_at_moderate_budget() {
        for key in ["MOT", "G04", "TTD", "PVD"] {
            let report = spot_check(&get(key).unwrap(), 100_000).unwrap();
            assert!(report.passed(), "{report:?}");
        }
        let ibd = spot_check(&get("IBD").unwrap(), 20_000).unwrap();
        assert_eq!(ibd.items[1].status, CheckStatus::Flag);
    }
}
