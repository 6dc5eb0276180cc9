//! Candidate and design quality measures.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fmt::{g17, sci6};
use crate::lowdisc::{Sobol, SOBOL_MAX_DIM};
use crate::points::{squared_euclidean, PointSet};
use crate::problem::ConstrainedProblem;
use crate::relax::RigiditySchedule;
use crate::scmc::{scmc_run, ScmcConfig};

/// Environment variable naming the reference-cloud cache directory.
pub const CACHE_DIR_ENV: &str = "COMINED_CACHE_DIR";

const CHUNK: usize = 4096;

/// Largest distance from a reference point to its nearest candidate;
/// `+inf` when there are no candidates.
pub fn fill_distance(candidates: &PointSet, reference: &PointSet) -> f64 {
    if candidates.is_empty() {
        log::warn!("fill distance of an empty candidate set is infinite");
        return f64::INFINITY;
    }
    reference
        .as_flat()
        .par_chunks(reference.dim())
        .map(|r| candidates.iter().map(|c| squared_euclidean(r, c)).fold(f64::INFINITY, f64::min))
        .reduce(|| 0.0, f64::max)
        .sqrt()
}

/// Calls `f(index, point)` for Sobol' points `start..end` in parallel chunks
/// and gathers the results in index order.
fn scan_sobol<T: Send>(
    dim: usize,
    start: usize,
    end: usize,
    f: impl Fn(usize, &[f64]) -> Option<T> + Sync,
) -> Result<Vec<T>> {
    if dim > SOBOL_MAX_DIM {
        return Err(Error::DimensionTooLarge { dim, max: SOBOL_MAX_DIM });
    }
    let chunks: Vec<(usize, usize)> = (start..end).step_by(CHUNK).map(|a| (a, (a + CHUNK).min(end))).collect();
    let parts: Vec<Vec<T>> = chunks
        .par_iter()
        .map(|&(a, b)| {
            let mut seq = Sobol::new(dim).expect("dimension checked");
            seq.seek(a as u64);
            let mut x = vec![0.0; dim];
            let mut out = Vec::new();
            for i in a..b {
                seq.next_into(&mut x);
                if let Some(v) = f(i, &x) {
                    out.push(v);
                }
            }
            out
        })
        .collect();
    Ok(parts.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeasibilityEstimate {
    pub ratio: f64,
    pub feasible: usize,
    pub budget: usize,
    pub std_error: f64,
}

/// Fraction of the first `budget` Sobol' points that satisfy every constraint.
/// Does not go through an evaluator, so method budgets are unaffected.
pub fn estimate_feasibility_ratio(problem: &ConstrainedProblem, budget: usize) -> Result<FeasibilityEstimate> {
    if budget == 0 {
        return Err(Error::InvalidArgument("feasibility budget must be positive".into()));
    }
    let hits =
        scan_sobol(problem.dim(), 0, budget, |_, u| problem.is_feasible_unit(u).ok().filter(|&f| f).map(|_| ()))?;
    let ratio = hits.len() as f64 / budget as f64;
    Ok(FeasibilityEstimate {
        ratio,
        feasible: hits.len(),
        budget,
        std_error: (ratio * (1.0 - ratio) / budget as f64).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceSource {
    Sobol,
    Scmc,
}

/// Feasible points standing in for the whole feasible region.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceCloud {
    pub points: PointSet,
    /// Sobol' points consumed, or constraint evaluations of the fallback run.
    pub source_budget: usize,
    pub source: ReferenceSource,
}

impl ReferenceCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Acceptance/rejection on the Sobol' sequence until `target` feasible points
/// are found or `max_budget` points are used. `source_budget` is the number
/// of sequence points consumed, ending at the one that completed the target.
pub fn build_reference(problem: &ConstrainedProblem, target: usize, max_budget: usize) -> Result<ReferenceCloud> {
    if target == 0 {
        return Err(Error::InvalidArgument("reference target must be positive".into()));
    }
    let dim = problem.dim();
    let mut points = PointSet::with_capacity(dim, target);
    let mut used = 0usize;
    let window = (64 * CHUNK).max(target);
    while points.len() < target && used < max_budget {
        let end = (used + window).min(max_budget);
        let found = scan_sobol(dim, used, end, |i, u| {
            problem.is_feasible_unit(u).ok().filter(|&f| f).map(|_| (i, u.to_vec()))
        })?;
        used = end;
        for (i, x) in found {
            points.push(&x);
            if points.len() == target {
                used = i + 1;
                break;
            }
        }
    }
    if points.is_empty() {
        return Err(Error::NoFeasibleReference { budget: used });
    }
    if points.len() < target {
        log::warn!(
            "{}: only {} of {target} reference points found in {used} Sobol' points",
            problem.name(),
            points.len()
        );
    }
    Ok(ReferenceCloud { points, source_budget: used, source: ReferenceSource::Sobol })
}

/// Reference cloud from an independent SCMC run, for regions too small for
/// acceptance/rejection: distinct feasible particles of the final population.
pub fn build_reference_scmc(problem: &ConstrainedProblem, target: usize, seed: u64) -> Result<ReferenceCloud> {
    let m = (2 * target).max(1000);
    let mut cfg = ScmcConfig::new(m, RigiditySchedule::default(), seed);
    cfg.cvn = true;
    let run = scmc_run(problem, &cfg)?;
    let last = run.final_population();
    let mut seen = std::collections::HashSet::new();
    let mut points = PointSet::new(problem.dim());
    for x in last.iter() {
        if points.len() < target && problem.is_feasible_unit(x)? && seen.insert(crate::points::bit_key(x)) {
            points.push(x);
        }
    }
    if points.is_empty() {
        return Err(Error::NoFeasibleReference { budget: run.evaluations });
    }
    Ok(ReferenceCloud { points, source_budget: run.evaluations, source: ReferenceSource::Scmc })
}

/// Hash of the problem definition: name, bounds, constraint count and the
/// constraint values at a few fixed probe points.
pub fn problem_checksum(problem: &ConstrainedProblem) -> String {
    let mut h = Sha256::new();
    h.update(problem.name().as_bytes());
    for (lo, hi) in problem.bounds() {
        h.update(lo.to_bits().to_le_bytes());
        h.update(hi.to_bits().to_le_bytes());
    }
    h.update((problem.num_constraints() as u64).to_le_bytes());
    if let Ok(mut seq) = Sobol::new(problem.dim()) {
        seq.seek(1);
        let mut u = vec![0.0; problem.dim()];
        for _ in 0..16 {
            seq.next_into(&mut u);
            if let Ok((g, _)) = problem.constraints_at_unit(&u) {
                for v in g {
                    h.update(v.to_bits().to_le_bytes());
                }
            }
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Cache directory from [`CACHE_DIR_ENV`], if set.
pub fn cache_dir_from_env() -> Option<PathBuf> {
    std::env::var_os(CACHE_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

fn cache_path(dir: &Path, problem: &ConstrainedProblem, target: usize, max_budget: usize) -> PathBuf {
    let safe: String =
        problem.name().chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect();
    dir.join(format!("reference-{safe}-t{target}-b{max_budget}-sobol.csv"))
}

fn write_cloud(path: &Path, checksum: &str, cloud: &ReferenceCloud) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        writeln!(w, "# checksum {checksum}")?;
        let source = match cloud.source {
            ReferenceSource::Sobol => "sobol",
            ReferenceSource::Scmc => "scmc",
        };
        writeln!(w, "# source {source} {}", cloud.source_budget)?;
        for x in cloud.points.iter() {
            let row: Vec<String> = x.iter().map(|v| g17(*v)).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()?;
    }
    fs::rename(tmp, path)?;
    Ok(())
}

fn read_cloud(path: &Path, checksum: &str, dim: usize) -> Result<Option<ReferenceCloud>> {
    let file = match fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let mut lines = BufReader::new(file).lines();
    let bad = |what: &str| Error::Malformed(format!("{}: {what}", path.display()));
    let head = lines.next().ok_or_else(|| bad("empty file"))??;
    if head.strip_prefix("# checksum ") != Some(checksum) {
        log::info!("reference cache {} is stale; rebuilding", path.display());
        return Ok(None);
    }
    let src = lines.next().ok_or_else(|| bad("missing source line"))??;
    let mut parts = src.strip_prefix("# source ").ok_or_else(|| bad("bad source line"))?.split(' ');
    let source = match parts.next() {
        Some("sobol") => ReferenceSource::Sobol,
        Some("scmc") => ReferenceSource::Scmc,
        _ => return Err(bad("unknown source")),
    };
    let source_budget = parts.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad("bad source budget"))?;
    let mut points = PointSet::new(dim);
    for line in lines {
        let line = line?;
        let row =
            line.split(',').map(|v| v.parse::<f64>().map_err(|_| bad("bad coordinate"))).collect::<Result<Vec<_>>>()?;
        if row.len() != dim {
            return Err(bad("wrong row width"));
        }
        points.push(&row);
    }
    Ok(Some(ReferenceCloud { points, source_budget, source }))
}

/// [`build_reference`] with an on-disk cache and an optional SCMC fallback
/// when acceptance/rejection finds nothing.
pub fn reference_cloud(
    problem: &ConstrainedProblem,
    target: usize,
    max_budget: usize,
    scmc_fallback: bool,
    cache_dir: Option<&Path>,
) -> Result<ReferenceCloud> {
    let checksum = problem_checksum(problem);
    let path = cache_dir.map(|d| cache_path(d, problem, target, max_budget));
    if let Some(p) = &path {
        if let Some(cloud) = read_cloud(p, &checksum, problem.dim())? {
            return Ok(cloud);
        }
    }
    let cloud = match build_reference(problem, target, max_budget) {
        Err(Error::NoFeasibleReference { .. }) if scmc_fallback => {
            log::warn!("{}: no feasible Sobol' point; building the reference from SCMC", problem.name());
            build_reference_scmc(problem, target, 0x5eed)?
        }
        other => other?,
    };
    if let Some(p) = &path {
        write_cloud(p, &checksum, &cloud)?;
    }
    Ok(cloud)
}

/// One results row: candidate quality and the scores of the designs built
/// from the feasible candidates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityReport {
    pub problem: String,
    pub dim: usize,
    pub table_ratio: f64,
    pub n: usize,
    pub cvn: bool,
    pub method: String,
    pub seed: Option<u64>,
    pub candidates: usize,
    pub feasible: usize,
    pub feasible_ratio: f64,
    pub fill_distance: f64,
    pub maximin: f64,
    pub maxpro: f64,
}

impl QualityReport {
    pub const CSV_HEADER: &'static str =
        "problem,p,ratio,n,cvn,method,seed,candidates,feasible,feasible_ratio,fill_distance,maximin,maxpro";

    pub fn csv_row(&self) -> String {
        [
            csv_field(&self.problem),
            self.dim.to_string(),
            sci6(self.table_ratio),
            self.n.to_string(),
            if self.cvn { "yes" } else { "no" }.to_string(),
            csv_field(&self.method),
            self.seed.map_or(String::new(), |s| s.to_string()),
            self.candidates.to_string(),
            self.feasible.to_string(),
            sci6(self.feasible_ratio),
            sci6(self.fill_distance),
            sci6(self.maximin),
            sci6(self.maxpro),
        ]
        .join(",")
    }
}

/// RFC 4180 quoting when needed.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fill_distance_examples() {
        let r = PointSet::from_rows(1, [[0.0], [0.5], [1.0]]);
        assert_eq!(fill_distance(&PointSet::from_rows(1, [[0.0]]), &r), 1.0);
        assert_eq!(fill_distance(&r, &r), 0.0);
        assert_eq!(fill_distance(&PointSet::new(1), &r), f64::INFINITY);
    }

    #[test]
    fn fill_distance_never_grows_with_more_candidates() {
        let r = crate::lowdisc::sobol(300, 2, 7).unwrap();
        let c = crate::lowdisc::latin_hypercube(60, 2, 1).unwrap();
        let mut prev = f64::INFINITY;
        for k in 1..=60 {
            let d = fill_distance(&c.select(&(0..k).collect::<Vec<_>>()), &r);
            assert!(d <= prev);
            prev = d;
        }
    }

    #[test]
    fn unconstrained_ratio_is_one() {
        let p = ConstrainedProblem::on_unit_cube("free", 3, 1, |_, g| g[0] = -1.0).unwrap();
        let est = estimate_feasibility_ratio(&p, 5000).unwrap();
        assert_eq!(est.ratio, 1.0);
        let cloud = build_reference(&p, 1000, 100_000).unwrap();
        assert_eq!(cloud.len(), 1000);
        assert_eq!(cloud.source_budget, 1000);
    }

    #[test]
    fn ratio_matches_serial_count() {
        let p = ConstrainedProblem::on_unit_cube("disk", 2, 1, |x, g| {
            g[0] = (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2) - 0.1
        })
        .unwrap();
        let pts = crate::lowdisc::sobol(10_000, 2, 0).unwrap();
        let serial = pts.iter().filter(|u| p.is_feasible_unit(u).unwrap()).count();
        assert_eq!(estimate_feasibility_ratio(&p, 10_000).unwrap().feasible, serial);
        assert!((serial as f64 / 1e4 - 0.1 * std::f64::consts::PI).abs() < 2e-3);
    }

    #[test]
    fn reference_points_are_feasible_and_budget_exact() {
        let p = ConstrainedProblem::on_unit_cube("corner", 2, 1, |x, g| g[0] = x[0] + x[1] - 0.5).unwrap();
        let cloud = build_reference(&p, 500, 1_000_000).unwrap();
        assert_eq!(cloud.len(), 500);
        for x in cloud.points.iter() {
            assert!(p.is_feasible_unit(x).unwrap());
        }
        // the cloud is exactly the feasible prefix of the first source_budget points
        let pts = crate::lowdisc::sobol(cloud.source_budget, 2, 0).unwrap();
        let direct: Vec<&[f64]> = pts.iter().filter(|u| p.is_feasible_unit(u).unwrap()).collect();
        assert_eq!(direct.len(), 500);
        assert!(p.is_feasible_unit(pts.row(cloud.source_budget - 1)).unwrap());
    }

    #[test]
    fn empty_region_reports_error_and_fallback_recovers() {
        let p = ConstrainedProblem::on_unit_cube("sliver", 2, 1, |x, g| {
            g[0] = (x[0] - 0.3).abs() + (x[1] - 0.7).abs() - 1e-4
        })
        .unwrap();
        assert!(matches!(build_reference(&p, 100, 20_000), Err(Error::NoFeasibleReference { .. })));
        let cloud = reference_cloud(&p, 100, 20_000, true, None).unwrap();
        assert_eq!(cloud.source, ReferenceSource::Scmc);
        assert!(!cloud.is_empty());
        for x in cloud.points.iter() {
            assert!(p.is_feasible_unit(x).unwrap());
        }
    }

    #[test]
    fn disk_cache_round_trip_and_invalidation() {
        let dir = tempfile::tempdir().unwrap();
        let p = ConstrainedProblem::on_unit_cube("half", 2, 1, |x, g| g[0] = x[0] - 0.5).unwrap();
        let a = reference_cloud(&p, 200, 10_000, false, Some(dir.path())).unwrap();
        let b = reference_cloud(&p, 200, 10_000, false, Some(dir.path())).unwrap();
        assert_eq!(a, b);
        // same name, different constraints: checksum changes, cache is rebuilt
        let q = ConstrainedProblem::on_unit_cube("half", 2, 1, |x, g| g[0] = x[1] - 0.5).unwrap();
        let c = reference_cloud(&q, 200, 10_000, false, Some(dir.path())).unwrap();
        assert_ne!(a.points, c.points);
        assert_ne!(problem_checksum(&p), problem_checksum(&q));
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn report_row_layout() {
        let r = QualityReport {
            problem: "MOT".into(),
            dim: 2,
            table_ratio: 0.0053,
            n: 53,
            cvn: true,
            method: "comined".into(),
            seed: None,
            candidates: 1993,
            feasible: 861,
            feasible_ratio: 0.432,
            fill_distance: 5.79e-3,
            maximin: f64::NAN,
            maxpro: f64::INFINITY,
        };
        assert_eq!(r.csv_row(), "MOT,2,5.300000e-03,53,yes,comined,,1993,861,4.320000e-01,5.790000e-03,NaN,Inf");
        assert_eq!(QualityReport::CSV_HEADER.split(',').count(), r.csv_row().split(',').count());
    }
}
