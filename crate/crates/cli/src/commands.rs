use std::io::Write;
use std::path::{Path, PathBuf};

use locfrac::attractor::{iterate_attractor, PointSet, StepRecord};
use locfrac::conditions::{ConditionReport, Family, SystemSummary};
use locfrac::seminorm::{h_profile, seminorm_by_region, seminorm_estimate, HGrid, Region, SeminormEstimate};
use locfrac::{fixed_point, Grid, SampledFunction, SolveDiagnostics};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::SystemConfig;
use crate::csvio;
use crate::error::CliError;
use crate::query::SpaceQuery;

#[derive(Debug, Default, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub conditions: Vec<ConditionEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub seminorms: Vec<SeminormEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attractor: Option<AttractorReport>,
    pub artifacts: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct ConditionEntry {
    pub query: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub reports: Vec<ConditionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct SolverReport {
    pub level: u32,
    pub nodes: usize,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub max_scaling: f64,
    /// `solved`, or `cache` when a fresh fixed-point file was reused.
    pub source: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<SolveDiagnostics>,
}

#[derive(Debug, Serialize)]
pub struct SeminormEntry {
    pub query: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<SeminormEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interior: Option<SeminormEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<SeminormEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct AttractorReport {
    pub mode: crate::config::AttractorMode,
    pub initial_points: usize,
    pub final_points: usize,
    pub steps: Vec<StepRecord>,
}

pub fn print_report(report: &RunReport) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(report).map_err(|e| CliError::Semantic(e.to_string()))?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Semantic(format!("stdout: {e}"))),
        _ => Ok(()),
    }
}

/// Text listing of the partition check; `Ok(false)` when anything failed.
pub fn validate(cfg: &SystemConfig) -> Result<(bool, String), CliError> {
    let partition = cfg.partition()?;
    let report = partition.validate(cfg.validation_resolution)?;
    let mut out = report.to_string();
    for (a, b) in &report.overlapping_pairs {
        out.push_str(&format!("  overlapping pair: pieces {} and {}\n", a + 1, b + 1));
    }
    let mut ok = report.is_valid();
    match cfg.system() {
        Ok(sys) => match sys.check_contraction() {
            Ok(m) => out.push_str(&format!("  contraction         : ok (max sup|S_i| = {})\n", csvio::num(m))),
            Err(e) => {
                ok = false;
                out.push_str(&format!("  contraction         : FAIL ({e})\n"));
            }
        },
        Err(e) => {
            ok = false;
            out.push_str(&format!("  system              : FAIL ({e})\n"));
        }
    }
    Ok((ok, out))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of everything the fixed point depends on.
fn system_hash(cfg: &SystemConfig) -> String {
    let key = serde_json::json!({ "domain": cfg.domain, "pieces": cfg.pieces, "solver": cfg.solver });
    sha256_hex(key.to_string().as_bytes())
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".sha256");
    PathBuf::from(s)
}

#[derive(Serialize, serde::Deserialize, PartialEq)]
struct CacheStamp {
    system: String,
    csv: String,
}

fn solve_function(cfg: &SystemConfig) -> Result<(SampledFunction, SolverReport), CliError> {
    let sys = cfg.system()?;
    let max_scaling = sys.check_contraction()?;
    let (f, diag) = fixed_point(&sys, &cfg.solver_settings())?;
    let report = SolverReport {
        level: cfg.solver.level,
        nodes: f.grid().len(),
        iterations: diag.iterations,
        residual: diag.final_residual,
        converged: diag.converged,
        max_scaling,
        source: "solved",
        diagnostics: Some(diag),
    };
    Ok((f, report))
}

pub fn solve(cfg: &SystemConfig, out: &Path) -> Result<RunReport, CliError> {
    let (f, solver) = solve_function(cfg)?;
    csvio::write_function(out, &f)?;
    let csv = std::fs::read(out).map_err(|e| CliError::io(out, e))?;
    let stamp = CacheStamp { system: system_hash(cfg), csv: sha256_hex(&csv) };
    let stamp_path = sidecar(out);
    let text = serde_json::to_string_pretty(&stamp).map_err(|e| CliError::Semantic(e.to_string()))?;
    std::fs::write(&stamp_path, text + "\n").map_err(|e| CliError::io(&stamp_path, e))?;
    let mut report = RunReport {
        command: "solve",
        artifacts: vec![out.display().to_string(), stamp_path.display().to_string()],
        ..Default::default()
    };
    if !solver.converged {
        report.warnings.push(format!(
            "no convergence within {} iterations; residual {}",
            cfg.solver.max_iter,
            csvio::num(solver.residual)
        ));
    }
    report.solver = Some(solver);
    Ok(report)
}

pub fn check(cfg: &SystemConfig, extra: &[SpaceQuery]) -> Result<RunReport, CliError> {
    let sys = cfg.system()?;
    let sum = SystemSummary::from_system(&sys);
    let mut report = RunReport { command: "check", ..Default::default() };
    for q in cfg.spaces.iter().chain(extra) {
        let entry = match q.check(&sum) {
            Ok(reports) => ConditionEntry { query: q.to_string(), reports, error: None },
            Err(e) => ConditionEntry { query: q.to_string(), reports: Vec::new(), error: Some(e.to_string()) },
        };
        report.conditions.push(entry);
    }
    if report.conditions.is_empty() {
        report.warnings.push("no spaces queried".into());
    }
    Ok(report)
}

/// The cached fixed point when its stamp matches both the file and the
/// system; the reason it was rejected otherwise.
fn load_cached(cfg: &SystemConfig, path: &Path) -> Result<SampledFunction, String> {
    let stamp_path = sidecar(path);
    let stamp_text = std::fs::read_to_string(&stamp_path).map_err(|e| format!("{}: {e}", stamp_path.display()))?;
    let stamp: CacheStamp =
        serde_json::from_str(&stamp_text).map_err(|e| format!("{}: {e}", stamp_path.display()))?;
    let csv = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    if stamp.csv != sha256_hex(&csv) {
        return Err("fixed-point file changed since it was written".into());
    }
    if stamp.system != system_hash(cfg) {
        return Err("fixed-point file belongs to a different system or solver setting".into());
    }
    let f = csvio::read_function(path).map_err(|e| e.to_string())?;
    let expected = Grid::new(cfg.domain().map_err(|e| e.to_string())?, cfg.solver.level).map_err(|e| e.to_string())?;
    if f.grid() != &expected {
        return Err("fixed-point grid does not match the configured level".into());
    }
    Ok(f)
}

pub struct SeminormInput<'a> {
    pub config: Option<&'a SystemConfig>,
    pub direct: Option<&'a Path>,
    pub cached: Option<&'a Path>,
    pub spaces: &'a [SpaceQuery],
    pub profile: Option<&'a Path>,
}

pub fn seminorm(input: SeminormInput<'_>) -> Result<RunReport, CliError> {
    let mut report = RunReport { command: "seminorm", ..Default::default() };
    let f = match (input.direct, input.config) {
        (Some(path), _) => csvio::read_function(path)?,
        (None, Some(cfg)) => {
            let cached = input.cached.map(|p| load_cached(cfg, p));
            match cached {
                Some(Ok(f)) => {
                    let sys = cfg.system()?;
                    report.solver = Some(SolverReport {
                        level: cfg.solver.level,
                        nodes: f.grid().len(),
                        iterations: 0,
                        residual: locfrac::rb_apply(&sys, &f)?.sup_distance(&f),
                        converged: true,
                        max_scaling: sys.max_scaling(),
                        source: "cache",
                        diagnostics: None,
                    });
                    f
                }
                other => {
                    if let Some(Err(why)) = other {
                        report.warnings.push(format!("cache not used: {why}"));
                    }
                    let (f, solver) = solve_function(cfg)?;
                    report.solver = Some(solver);
                    f
                }
            }
        }
        (None, None) => return Err(CliError::Semantic("seminorm needs --config or --input".into())),
    };
    let settings = input.config.map(|c| c.seminorm).unwrap_or_default().settings();
    let hg = HGrid::for_grid(f.grid(), &settings)?;
    let partition = match (input.direct, input.config) {
        (None, Some(cfg)) => Some(cfg.partition()?),
        _ => None,
    };
    let mut spaces: Vec<SpaceQuery> = input.config.map(|c| c.spaces.clone()).unwrap_or_default();
    spaces.extend_from_slice(input.spaces);
    if spaces.is_empty() {
        return Err(CliError::Semantic("no space queried; pass --space or add [[space]] tables".into()));
    }
    let mut profile_rows = Vec::new();
    for (idx, q) in spaces.iter().enumerate() {
        let mut entry = SeminormEntry {
            query: q.to_string(),
            family: None,
            order: None,
            estimate: None,
            interior: None,
            boundary: None,
            note: None,
            error: None,
        };
        let mut run = |entry: &mut SeminormEntry| -> Result<(), CliError> {
            let target = q.estimator_target(f.grid().dim())?;
            entry.family = Some(target.family);
            entry.order = Some(target.params.order());
            entry.note = target.note;
            entry.estimate = Some(seminorm_estimate(&f, &target.params, &hg, target.family)?);
            if let Some(p) = &partition {
                let by = |r| seminorm_by_region(&f, &target.params, &hg, target.family, p, r);
                entry.interior = Some(by(Region::Interior)?);
                entry.boundary = Some(by(Region::Boundary)?);
            }
            if input.profile.is_some() {
                for (step, v) in h_profile(&f, &target.params, &hg)? {
                    profile_rows.push(vec![(idx + 1).to_string(), csvio::num(step.radius), csvio::num(step.theta), csvio::num(v)]);
                }
            }
            Ok(())
        };
        if let Err(e) = run(&mut entry) {
            entry.error = Some(e.to_string());
        }
        report.seminorms.push(entry);
    }
    if let Some(path) = input.profile {
        csvio::write_records(path, &["space", "h", "theta", "value"], profile_rows.into_iter())?;
        report.artifacts.push(path.display().to_string());
    }
    Ok(report)
}

/// `points.csv` → `points.distances.csv`.
pub fn distances_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "attractor".into());
    out.with_file_name(format!("{stem}.distances.csv"))
}

pub fn attractor(cfg: &SystemConfig, steps: Option<usize>, seed: Option<u64>, out: &Path) -> Result<RunReport, CliError> {
    let sys = cfg.map_system()?;
    let k0 = match seed {
        Some(seed) => {
            let (lo, hi) = sys.ambient_corners();
            PointSet::uniform_random(&lo, &hi, cfg.attractor.random_points, seed)?
        }
        None => sys.default_initial_set(),
    };
    let steps = steps.unwrap_or(cfg.attractor.steps);
    let run = iterate_attractor(&sys, &k0, steps, &cfg.iteration_settings())?;
    csvio::write_points(out, &run.set)?;
    let dist = distances_path(out);
    let rows = run
        .steps
        .iter()
        .enumerate()
        .map(|(i, r)| vec![(i + 1).to_string(), csvio::num(r.distance), csvio::num(r.floor), r.points.to_string()]);
    csvio::write_records(&dist, &["step", "distance", "floor", "points"], rows)?;
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    Ok(RunReport {
        command: "attractor",
        attractor: Some(AttractorReport {
            mode: cfg.attractor.mode,
            initial_points: k0.len(),
            final_points: run.set.len(),
            steps: run.steps,
        }),
        artifacts: vec![out.display().to_string(), dist.display().to_string()],
        warnings: run.warnings,
        ..Default::default()
    })
}
