//! Budget-matched comparison runs of CoMinED, adaptive SCMC and
//! acceptance/rejection Latin hypercubes, and the summary tables built from them.

use std::fmt;
use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::archive::{CandidateArchive, Origin};
use crate::benchmarks::{self, BenchmarkEntry};
use crate::comined::{comined_run, CominedConfig, CominedResult};
use crate::design::{greedy_select, Criterion, Exponent};
use crate::error::{Error, Result};
use crate::fmt::sci6;
use crate::lowdisc::latin_hypercube;
use crate::metrics::{
    csv_field, fill_distance, problem_checksum, reference_cloud, QualityReport, ReferenceCloud, ReferenceSource,
};
use crate::points::PointSet;
use crate::problem::{ConstrainedProblem, ConstraintValues, Evaluator};
use crate::relax::RigiditySchedule;
use crate::scmc::{scmc_run, ScmcConfig};

/// Greedy restarts used for every design built from a candidate set.
pub const DESIGN_RESTARTS: usize = 10;

/// SCMC particle count giving at least the CoMinED budget:
/// `max(n Q, ceil(N_T / (T + 1)))`.
pub fn budget_match(n: usize, q: usize, comined_total: usize, steps: usize) -> usize {
    (n * q).max(comined_total.div_ceil(steps + 1))
}

/// Evaluates `budget` Latin hypercube points and keeps all of them, flagged.
pub fn lhs_reject(problem: &ConstrainedProblem, budget: usize, seed: u64) -> Result<CandidateArchive> {
    if budget == 0 {
        return Err(Error::InvalidArgument("LHS budget must be positive".into()));
    }
    let points = latin_hypercube(budget, problem.dim(), seed)?;
    let evaluator = Evaluator::new(problem);
    let mut archive = CandidateArchive::new(problem.dim(), problem.num_constraints());
    for x in points.iter() {
        let raw = evaluator.evaluate_raw(x)?;
        let values = ConstraintValues {
            feasible: crate::problem::is_feasible(&raw),
            normalized: raw.to_vec(),
            raw: raw.to_vec(),
        };
        archive.push(x, &values, Origin::Lhs, 0);
    }
    Ok(archive)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Comined,
    Scmc,
    LhsReject,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Comined => "comined",
            Method::Scmc => "scmc",
            Method::LhsReject => "lhs-reject",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "comined" => Ok(Method::Comined),
            "scmc" => Ok(Method::Scmc),
            "lhs-reject" | "lhs" => Ok(Method::LhsReject),
            _ => Err(Error::InvalidArgument(format!("unknown method {s:?}"))),
        }
    }
}

/// How the reference cloud for fill distances is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSpec {
    pub target: usize,
    pub max_budget: usize,
    pub scmc_fallback: bool,
}

impl ReferenceSpec {
    /// 10^4 feasible points (10^3 for G07) from at most 10^8 Sobol' points.
    pub fn desk(problem_key: &str) -> Self {
        let target = if problem_key.eq_ignore_ascii_case("G07") { 1_000 } else { 10_000 };
        Self { target, max_budget: 100_000_000, scmc_fallback: true }
    }
}

mod schedule_text {
    use super::*;

    pub fn serialize<S: Serializer>(s: &RigiditySchedule, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&s.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<RigiditySchedule, D::Error> {
        let text = String::deserialize(de)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// One experiment: a problem, a method and its settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub problem: String,
    pub method: Method,
    pub n: usize,
    pub q: usize,
    #[serde(with = "schedule_text")]
    pub schedule: RigiditySchedule,
    /// Generalized-distance exponent; 0 is the geometric-mean limit.
    pub s: f64,
    pub cvn: bool,
    /// Ignored by CoMinED, which is deterministic.
    pub seeds: Vec<u64>,
    /// SCMC particle count; derived from the CoMinED budget when absent.
    pub n_particles: Option<usize>,
    /// LHS size; the CoMinED budget when absent.
    pub lhs_budget: Option<usize>,
    pub restarts: usize,
    pub reference: ReferenceSpec,
}

impl ExperimentSpec {
    pub fn new(problem: &str, method: Method, n: usize, q: usize) -> Self {
        Self {
            problem: problem.to_string(),
            method,
            n,
            q,
            schedule: RigiditySchedule::default(),
            s: 2.0,
            cvn: true,
            seeds: vec![0],
            n_particles: None,
            lhs_budget: None,
            restarts: DESIGN_RESTARTS,
            reference: ReferenceSpec::desk(problem),
        }
    }

    pub fn comined_config(&self) -> Result<CominedConfig> {
        let mut cfg = CominedConfig::new(self.n, self.q, self.schedule.clone());
        cfg.exponent = Exponent::from_s(self.s)?;
        cfg.cvn = self.cvn;
        Ok(cfg)
    }

    pub fn scmc_config(&self, n_particles: usize, seed: u64) -> ScmcConfig {
        let mut cfg = ScmcConfig::new(n_particles, self.schedule.clone(), seed);
        cfg.cvn = self.cvn;
        cfg
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidArgument(format!("design size n must be >= 2, got {}", self.n)));
        }
        if self.q == 0 {
            return Err(Error::InvalidArgument("Q must be positive".into()));
        }
        if self.method != Method::Comined && self.seeds.is_empty() {
            return Err(Error::InvalidArgument(format!("{} needs at least one seed", self.method)));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidArgument("design restarts must be positive".into()));
        }
        Exponent::from_s(self.s)?;
        Ok(())
    }
}

/// A benchmark with its reference cloud, shared by the runs on it.
pub struct Workbench {
    pub label: String,
    pub entry: BenchmarkEntry,
    pub reference: ReferenceCloud,
    pub checksum: String,
}

impl Workbench {
    pub fn new(problem_key: &str, reference: &ReferenceSpec, cache_dir: Option<&Path>) -> Result<Self> {
        let entry = benchmarks::get(problem_key)?;
        let cloud = reference_cloud(
            &entry.problem,
            reference.target,
            reference.max_budget,
            reference.scmc_fallback,
            cache_dir,
        )?;
        Ok(Self {
            label: problem_key.to_ascii_uppercase(),
            checksum: problem_checksum(&entry.problem),
            entry,
            reference: cloud,
        })
    }

    pub fn problem(&self) -> &ConstrainedProblem {
        &self.entry.problem
    }

    /// Quality row for a set of distinct feasible candidates.
    #[allow(clippy::too_many_arguments)]
    pub fn report(
        &self,
        spec: &ExperimentSpec,
        method: Method,
        seed: Option<u64>,
        candidates: usize,
        feasible: usize,
        feasible_ratio: f64,
        feasible_points: &PointSet,
    ) -> Result<QualityReport> {
        let (maximin, maxpro) = design_scores(feasible_points, spec.n, spec.restarts, seed.unwrap_or(0))?;
        Ok(QualityReport {
            problem: self.label.clone(),
            dim: self.problem().dim(),
            table_ratio: self.entry.expected_ratio,
            n: spec.n,
            cvn: spec.cvn,
            method: method.as_str().to_string(),
            seed,
            candidates,
            feasible,
            feasible_ratio,
            fill_distance: fill_distance(feasible_points, &self.reference.points),
            maximin,
            maxpro,
        })
    }

    pub fn run_comined(&self, spec: &ExperimentSpec) -> Result<(CominedResult, QualityReport)> {
        let result = comined_run(self.problem(), &spec.comined_config()?)?;
        let feasible = result.feasible_points();
        let row = self.report(
            spec,
            Method::Comined,
            None,
            result.evaluations,
            feasible.len(),
            result.archive.feasible_ratio(),
            &feasible,
        )?;
        Ok((result, row))
    }

    pub fn run_scmc(&self, spec: &ExperimentSpec, n_particles: usize, seed: u64) -> Result<(RunRecord, QualityReport)> {
        let result = scmc_run(self.problem(), &spec.scmc_config(n_particles, seed))?;
        let distinct = result.feasible_candidates();
        let row = self.report(
            spec,
            Method::Scmc,
            Some(seed),
            result.evaluations,
            result.feasible_particle_count(),
            result.feasible_ratio(),
            &distinct,
        )?;
        let record = RunRecord {
            method: Method::Scmc,
            seed: Some(seed),
            evaluations: result.evaluations,
            distinct_evaluated: result.archive.len(),
            off_cube: result.off_cube,
            feasible: row.feasible,
        };
        Ok((record, row))
    }

    pub fn run_lhs(&self, spec: &ExperimentSpec, budget: usize, seed: u64) -> Result<(RunRecord, QualityReport)> {
        let archive = lhs_reject(self.problem(), budget, seed)?;
        let row = self.report(
            spec,
            Method::LhsReject,
            Some(seed),
            budget,
            archive.feasible_count(),
            archive.feasible_ratio(),
            &archive.feasible_points(),
        )?;
        let record = RunRecord {
            method: Method::LhsReject,
            seed: Some(seed),
            evaluations: budget,
            distinct_evaluated: archive.len(),
            off_cube: 0,
            feasible: row.feasible,
        };
        Ok((record, row))
    }
}

/// Maximin and MaxPro scores of the best greedy designs; NaN when there are
/// fewer than `n` feasible candidates.
pub fn design_scores(feasible: &PointSet, n: usize, restarts: usize, seed: u64) -> Result<(f64, f64)> {
    if feasible.len() < n {
        return Ok((f64::NAN, f64::NAN));
    }
    let maximin = greedy_select(feasible, n, Criterion::Maximin, restarts, seed)?.score;
    let maxpro = greedy_select(feasible, n, Criterion::MaxPro, restarts, seed)?.score;
    Ok((maximin, maxpro))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: Method,
    pub seed: Option<u64>,
    /// Evaluations charged against the budget.
    pub evaluations: usize,
    /// Distinct points whose constraints were computed.
    pub distinct_evaluated: usize,
    pub off_cube: usize,
    pub feasible: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRecord {
    pub points: usize,
    pub source_budget: usize,
    pub source: String,
    pub problem_checksum: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub spec: ExperimentSpec,
    pub version: String,
    pub wall_time_secs: f64,
    pub reference: ReferenceRecord,
    pub comined_evaluations: Option<usize>,
    pub n_particles: Option<usize>,
    pub lhs_budget: Option<usize>,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<QualityReport>,
    pub manifest: Manifest,
    /// Present for CoMinED runs, for archive and design exports.
    pub comined: Option<CominedResult>,
}

impl ExperimentOutput {
    pub fn csv(&self) -> String {
        rows_csv(&self.rows)
    }
}

pub fn rows_csv(rows: &[QualityReport]) -> String {
    let mut out = String::from(QualityReport::CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

fn reference_record(bench: &Workbench) -> ReferenceRecord {
    ReferenceRecord {
        points: bench.reference.len(),
        source_budget: bench.reference.source_budget,
        source: match bench.reference.source {
            ReferenceSource::Sobol => "sobol".into(),
            ReferenceSource::Scmc => "scmc".into(),
        },
        problem_checksum: bench.checksum.clone(),
    }
}

/// Runs one experiment: CoMinED once, SCMC or LHS once per seed.
pub fn run(spec: &ExperimentSpec, cache_dir: Option<&Path>) -> Result<ExperimentOutput> {
    spec.validate()?;
    let start = Instant::now();
    let bench = Workbench::new(&spec.problem, &spec.reference, cache_dir)?;
    let needs_comined = match spec.method {
        Method::Comined => true,
        Method::Scmc => spec.n_particles.is_none(),
        Method::LhsReject => spec.lhs_budget.is_none(),
    };
    let mut comined = None;
    let mut comined_row = None;
    if needs_comined {
        let (res, row) = if spec.method == Method::Comined {
            let (res, row) = bench.run_comined(spec)?;
            (res, Some(row))
        } else {
            (comined_run(bench.problem(), &spec.comined_config()?)?, None)
        };
        comined_row = row;
        comined = Some(res);
    }
    let comined_evaluations = comined.as_ref().map(|c| c.evaluations);
    let steps = spec.schedule.steps();
    let mut manifest = Manifest {
        spec: spec.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_secs: 0.0,
        reference: reference_record(&bench),
        comined_evaluations,
        n_particles: None,
        lhs_budget: None,
        runs: Vec::new(),
    };
    let rows = match spec.method {
        Method::Comined => {
            let c = comined.as_ref().expect("comined ran");
            manifest.runs.push(RunRecord {
                method: Method::Comined,
                seed: None,
                evaluations: c.evaluations,
                distinct_evaluated: c.archive.len(),
                off_cube: 0,
                feasible: c.archive.feasible_count(),
            });
            vec![comined_row.expect("comined row")]
        }
        Method::Scmc => {
            let m = spec
                .n_particles
                .unwrap_or_else(|| budget_match(spec.n, spec.q, comined_evaluations.unwrap_or(0), steps));
            manifest.n_particles = Some(m);
            let out: Vec<(RunRecord, QualityReport)> =
                spec.seeds.par_iter().map(|&seed| bench.run_scmc(spec, m, seed)).collect::<Result<_>>()?;
            let (records, rows): (Vec<_>, Vec<_>) = out.into_iter().unzip();
            manifest.runs = records;
            rows
        }
        Method::LhsReject => {
            let budget = spec.lhs_budget.or(comined_evaluations).expect("budget known");
            manifest.lhs_budget = Some(budget);
            let out: Vec<(RunRecord, QualityReport)> =
                spec.seeds.par_iter().map(|&seed| bench.run_lhs(spec, budget, seed)).collect::<Result<_>>()?;
            let (records, rows): (Vec<_>, Vec<_>) = out.into_iter().unzip();
            manifest.runs = records;
            rows
        }
    };
    manifest.wall_time_secs = start.elapsed().as_secs_f64();
    let comined = if spec.method == Method::Comined { comined } else { None };
    Ok(ExperimentOutput { rows, manifest, comined })
}

/// Quality row for an externally produced candidate set.
pub fn evaluate_candidates(
    problem_key: &str,
    candidates: &PointSet,
    n: usize,
    restarts: usize,
    reference: &ReferenceSpec,
    cache_dir: Option<&Path>,
) -> Result<QualityReport> {
    let bench = Workbench::new(problem_key, reference, cache_dir)?;
    if candidates.dim() != bench.problem().dim() {
        return Err(Error::InvalidArgument(format!(
            "{} has dimension {}, candidates have {}",
            bench.label,
            bench.problem().dim(),
            candidates.dim()
        )));
    }
    let mut feasible = PointSet::new(candidates.dim());
    for x in candidates.iter() {
        if bench.problem().is_feasible_unit(x)? {
            feasible.push(x);
        }
    }
    let mut spec = ExperimentSpec::new(problem_key, Method::Comined, n, 1);
    spec.restarts = restarts;
    let ratio = if candidates.is_empty() { f64::NAN } else { feasible.len() as f64 / candidates.len() as f64 };
    let mut row = bench.report(&spec, Method::Comined, None, candidates.len(), feasible.len(), ratio, &feasible)?;
    row.method = "external".into();
    Ok(row)
}

/// Reads unit-cube points from a CSV with a header. Columns named `x1, x2, ...`
/// are used when present (archive files), otherwise every column.
pub fn read_points_csv(path: &Path) -> Result<PointSet> {
    let file = std::fs::File::open(path)?;
    let mut lines = std::io::BufReader::new(file).lines();
    let bad = |msg: String| Error::Malformed(format!("{}: {msg}", path.display()));
    let header = lines.next().ok_or_else(|| bad("empty file".into()))??;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let xcols: Vec<usize> = names
        .iter()
        .enumerate()
        .filter(|(_, n)| n.strip_prefix('x').is_some_and(|d| d.parse::<usize>().is_ok()))
        .map(|(i, _)| i)
        .collect();
    let cols: Vec<usize> = if xcols.is_empty() { (0..names.len()).collect() } else { xcols };
    let mut points = PointSet::new(cols.len());
    let mut row = vec![0.0; cols.len()];
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != names.len() {
            return Err(bad(format!("line {} has {} fields, expected {}", lineno + 2, fields.len(), names.len())));
        }
        for (slot, &c) in row.iter_mut().zip(&cols) {
            *slot = fields[c]
                .trim()
                .parse()
                .map_err(|_| bad(format!("line {}: bad number {:?}", lineno + 2, fields[c])))?;
        }
        points.push(&row);
    }
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Desk,
    Paper,
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            _ => Err(Error::InvalidArgument(format!("unknown scale {s:?}"))),
        }
    }
}

impl Scale {
    /// Seeds per stochastic method.
    pub fn seeds(&self) -> Vec<u64> {
        match self {
            Scale::Desk => (0..5).collect(),
            Scale::Paper => (0..50).collect(),
        }
    }
}

/// One row of the comparison tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSetting {
    pub problem: String,
    pub n: usize,
    pub q: usize,
    pub cvn: bool,
}

/// Rows of the comparison tables. Desk scale keeps only `Q = 5` for the
/// motivating problem.
pub fn table_settings(scale: Scale) -> Vec<TableSetting> {
    let mut rows = Vec::new();
    let mot_q: &[usize] = match scale {
        Scale::Desk => &[5],
        Scale::Paper => &[5, 11, 17],
    };
    for key in ["MOT-O", "MOT-S"] {
        for &q in mot_q {
            for cvn in [false, true] {
                rows.push(TableSetting { problem: key.into(), n: 53, q, cvn });
            }
        }
    }
    for key in ["TTD", "G08", "G06", "TSD", "PVD", "IBD", "WBD", "G04", "G09", "SRD", "G10"] {
        rows.push(TableSetting { problem: key.into(), n: 109, q: 19, cvn: true });
    }
    for key in ["SCBD", "G07", "G01"] {
        rows.push(TableSetting { problem: key.into(), n: 109, q: 27, cvn: true });
    }
    rows
}

/// All runs for one table row.
#[derive(Debug, Clone)]
pub struct SettingOutcome {
    pub setting: TableSetting,
    pub dim: usize,
    pub table_ratio: f64,
    pub n_particles: usize,
    pub comined: QualityReport,
    pub scmc: Vec<QualityReport>,
    pub lhs: Vec<QualityReport>,
    pub records: Vec<RunRecord>,
}

pub fn run_setting(
    setting: &TableSetting,
    seeds: &[u64],
    reference: &ReferenceSpec,
    cache_dir: Option<&Path>,
) -> Result<SettingOutcome> {
    let mut spec = ExperimentSpec::new(&setting.problem, Method::Comined, setting.n, setting.q);
    spec.cvn = setting.cvn;
    spec.seeds = seeds.to_vec();
    spec.reference = reference.clone();
    spec.validate()?;
    let bench = Workbench::new(&setting.problem, reference, cache_dir)?;
    let (c, comined) = bench.run_comined(&spec)?;
    let m = budget_match(setting.n, setting.q, c.evaluations, spec.schedule.steps());
    let mut records = vec![RunRecord {
        method: Method::Comined,
        seed: None,
        evaluations: c.evaluations,
        distinct_evaluated: c.archive.len(),
        off_cube: 0,
        feasible: c.archive.feasible_count(),
    }];
    let scmc: Vec<(RunRecord, QualityReport)> =
        seeds.par_iter().map(|&s| bench.run_scmc(&spec, m, s)).collect::<Result<_>>()?;
    let lhs: Vec<(RunRecord, QualityReport)> =
        seeds.par_iter().map(|&s| bench.run_lhs(&spec, c.evaluations, s)).collect::<Result<_>>()?;
    let (scmc_rec, scmc): (Vec<_>, Vec<_>) = scmc.into_iter().unzip();
    let (lhs_rec, lhs): (Vec<_>, Vec<_>) = lhs.into_iter().unzip();
    records.extend(scmc_rec);
    records.extend(lhs_rec);
    Ok(SettingOutcome {
        setting: setting.clone(),
        dim: bench.problem().dim(),
        table_ratio: bench.entry.expected_ratio,
        n_particles: m,
        comined,
        scmc,
        lhs,
        records,
    })
}

/// Mean of the finite values; NaN when there are none.
pub fn finite_mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, count) = values.into_iter().filter(|v| v.is_finite()).fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

/// Median of the finite values; NaN when there are none.
pub fn finite_median(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().filter(|v| v.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Which summary table to print: 2 for candidate quality, 3 for design scores.
pub fn summary_header(table: u8) -> &'static str {
    match table {
        2 => "problem,p,ratio,n,cvn,lhs_candidates,lhs_feasible_ratio,lhs_fill_distance,m,scmc_candidates,scmc_feasible_ratio,scmc_fill_distance,q,comined_candidates,comined_feasible_ratio,comined_fill_distance",
        _ => "problem,p,ratio,n,cvn,lhs_candidates,lhs_maximin,lhs_maxpro,m,scmc_candidates,scmc_maximin,scmc_maxpro,q,comined_candidates,comined_maximin,comined_maxpro",
    }
}

type Column = fn(&QualityReport) -> f64;

/// Summary row, averaging the stochastic methods over seeds.
pub fn summary_row(table: u8, o: &SettingOutcome) -> String {
    let mean = |rows: &[QualityReport], f: Column| finite_mean(rows.iter().map(f));
    let lhs_cand = o.lhs.first().map_or(0, |r| r.candidates);
    let scmc_cand = o.scmc.first().map_or(0, |r| r.candidates);
    let (a, b): (Column, Column) =
        if table == 2 { (|r| r.feasible_ratio, |r| r.fill_distance) } else { (|r| r.maximin, |r| r.maxpro) };
    [
        csv_field(&o.setting.problem),
        o.dim.to_string(),
        sci6(o.table_ratio),
        o.setting.n.to_string(),
        if o.setting.cvn { "yes" } else { "no" }.into(),
        lhs_cand.to_string(),
        sci6(mean(&o.lhs, a)),
        sci6(mean(&o.lhs, b)),
        o.n_particles.to_string(),
        scmc_cand.to_string(),
        sci6(mean(&o.scmc, a)),
        sci6(mean(&o.scmc, b)),
        o.setting.q.to_string(),
        o.comined.candidates.to_string(),
        sci6(a(&o.comined)),
        sci6(b(&o.comined)),
    ]
    .join(",")
}

/// Everything produced by a table reproduction.
#[derive(Debug, Clone)]
pub struct Reproduction {
    pub outcomes: Vec<SettingOutcome>,
    pub wall_time_secs: f64,
}

impl Reproduction {
    pub fn summary_csv(&self, table: u8) -> String {
        let mut out = String::from(summary_header(table));
        out.push('\n');
        for o in &self.outcomes {
            out.push_str(&summary_row(table, o));
            out.push('\n');
        }
        out
    }

    /// Every individual run, CoMinED first, then SCMC and LHS by seed.
    pub fn runs_csv(&self) -> String {
        let rows: Vec<QualityReport> = self
            .outcomes
            .iter()
            .flat_map(|o| std::iter::once(o.comined.clone()).chain(o.scmc.iter().cloned()).chain(o.lhs.iter().cloned()))
            .collect();
        rows_csv(&rows)
    }
}

/// Runs every table row at the given scale, skipping problems not in `only`
/// when it is non-empty.
pub fn reproduce(scale: Scale, only: &[String], cache_dir: Option<&Path>) -> Result<Reproduction> {
    let start = Instant::now();
    let seeds = scale.seeds();
    let mut outcomes = Vec::new();
    for setting in table_settings(scale) {
        if !only.is_empty() && !only.iter().any(|k| k.eq_ignore_ascii_case(&setting.problem)) {
            continue;
        }
        log::info!("{} n={} Q={} cvn={}", setting.problem, setting.n, setting.q, setting.cvn);
        let reference = ReferenceSpec::desk(&setting.problem);
        outcomes.push(run_setting(&setting, &seeds, &reference, cache_dir)?);
    }
    Ok(Reproduction { outcomes, wall_time_secs: start.elapsed().as_secs_f64() })
}

/// Cache directory from the environment, if set.
pub fn default_cache_dir() -> Option<PathBuf> {
    crate::metrics::cache_dir_from_env()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_match_examples() {
        assert_eq!(budget_match(53, 5, 2155, 8), 265);
        assert_eq!(budget_match(109, 19, 18_504, 8), 2071);
        assert_eq!(budget_match(109, 19, 19_025, 8), 2114);
        // ceiling branch
        assert_eq!(budget_match(2, 3, 9 * 6 + 1, 8), 7);
    }

    #[test]
    fn lhs_unconstrained_is_all_feasible() {
        let p = ConstrainedProblem::on_unit_cube("free", 3, 1, |_, g| g[0] = -1.0).unwrap();
        let a = lhs_reject(&p, 50, 4).unwrap();
        assert_eq!(a.len(), 50);
        assert_eq!(a.feasible_ratio(), 1.0);
    }

    #[test]
    fn lhs_on_mot_is_binomial() {
        let e = benchmarks::get("MOT").unwrap();
        // 99% interval of Binomial(2385, 0.0053) is roughly [5, 22]
        for seed in 0..5 {
            let k = lhs_reject(&e.problem, 2385, seed).unwrap().feasible_count();
            assert!((4..=24).contains(&k), "seed {seed}: {k} feasible");
        }
    }

    #[test]
    fn design_scores_nan_when_short() {
        let pts = PointSet::from_rows(2, [[0.1, 0.2], [0.5, 0.5]]);
        let (a, b) = design_scores(&pts, 3, 2, 0).unwrap();
        assert!(a.is_nan() && b.is_nan());
    }

    #[test]
    fn spec_round_trips_through_json() {
        let mut spec = ExperimentSpec::new("TSD", Method::Scmc, 109, 19);
        spec.schedule = "0,1,10,1000000".parse().unwrap();
        spec.seeds = vec![3, 1, 4];
        let text = serde_json::to_string(&spec).unwrap();
        let back: ExperimentSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn table_settings_cover_every_problem() {
        let desk = table_settings(Scale::Desk);
        assert_eq!(desk.len(), 4 + 14);
        assert_eq!(table_settings(Scale::Paper).len(), 12 + 14);
        for s in &desk {
            benchmarks::get(&s.problem).unwrap();
        }
    }

    #[test]
    fn medians_and_means_skip_nan() {
        assert_eq!(finite_median([3.0, f64::NAN, 1.0, 2.0]), 2.0);
        assert_eq!(finite_median([4.0, 1.0, 3.0, 2.0]), 2.5);
        assert!(finite_mean([f64::NAN]).is_nan());
        assert_eq!(finite_mean([1.0, 3.0, f64::INFINITY]), 2.0);
    }

    #[test]
    fn read_points_prefers_x_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        std::fs::write(&path, "index,origin,step,feasible,x1,x2,g1\n0,lhs,0,1,0.25,0.5,-1\n").unwrap();
        let pts = read_points_csv(&path).unwrap();
        assert_eq!(pts.dim(), 2);
        assert_eq!(pts.row(0), &[0.25, 0.5]);
        std::fs::write(&path, "a,b,c\n0.1,0.2,0.3\n").unwrap();
        assert_eq!(read_points_csv(&path).unwrap().dim(), 3);
    }
}
