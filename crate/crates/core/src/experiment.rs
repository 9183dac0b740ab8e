//! Batch runs: a JSON config in, a directory of reports out.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    almost_period_probe, cross_validate_en, default_grid, diagnostics_row, gap_set_of,
    ConvergenceReport, CrossValidation, DiagnosticsRow, BOUND_TOL,
};
use crate::comb::{canonical_generator_scan, comb_parameters, CombParameters, ScanVerdict};
use crate::error::{Error, Result};
use crate::potential::{EquilibriumData, DEFAULT_TOL};
use crate::realset::{Interval, RealFiniteGapSet};
use crate::remez::{
    self, chebyshev_with, AlternationPoint, RemezOptions, DEFAULT_DEGREE_CAP, TOUCH_TOL,
};
use crate::widom::{widom_from_gap_set, WidomSolution};

pub const CSV_SCHEMA: u32 = 1;
pub const CSV_HEADER: &str = "n,log10_t_n,W_n,f_norm,ratio,sup_deviation,h_residual,cert_pass";

/// Band masses further than this from `1/n` fail the mass suite.
pub const MASS_TOL: f64 = 1e-8;
/// Cross-validation discrepancies above this fail.
pub const CROSS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_eq_tol")]
    pub equilibrium: f64,
    #[serde(default = "default_remez_tol")]
    pub remez: f64,
    /// The `h_n` residuals must stay below ten times this.
    #[serde(default = "default_quad_tol")]
    pub quadrature: f64,
}

fn default_eq_tol() -> f64 {
    DEFAULT_TOL
}
fn default_remez_tol() -> f64 {
    1e-12
}
fn default_quad_tol() -> f64 {
    1e-7
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            equilibrium: default_eq_tol(),
            remez: default_remez_tol(),
            quadrature: default_quad_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSpec {
    /// Four points per gap and four outside the hull.
    Default,
    Points(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub set: Vec<[f64; 2]>,
    pub n_range: [usize; 2],
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_grid_spec")]
    pub grid: GridSpec,
    pub output_dir: PathBuf,
    /// Cross-validate `𝔢_n` for `n` up to this degree; 0 skips it.
    #[serde(default)]
    pub cross_validate_up_to: usize,
    #[serde(default = "yes")]
    pub comb: bool,
    #[serde(default = "default_q_max")]
    pub comb_q_max: u64,
    pub almost_period_eps: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_window")]
    pub trend_window: usize,
}

fn default_grid_spec() -> GridSpec {
    GridSpec::Default
}
fn yes() -> bool {
    true
}
fn default_q_max() -> u64 {
    1000
}
fn default_window() -> usize {
    5
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn real_set(&self) -> Result<RealFiniteGapSet> {
        let iv = self
            .set
            .iter()
            .map(|&[a, b]| Interval::new(a, b))
            .collect::<Result<Vec<_>>>()?;
        RealFiniteGapSet::new(iv)
    }

    pub fn validate(&self) -> Result<()> {
        let set = self.real_set().map_err(|e| Error::Config(e.to_string()))?;
        let [lo, hi] = self.n_range;
        if lo < 1 || hi < lo {
            return Err(Error::Config(format!(
                "n_range [{lo}, {hi}] must satisfy 1 ≤ n_min ≤ n_max"
            )));
        }
        if hi > DEFAULT_DEGREE_CAP {
            return Err(Error::Config(format!(
                "n_max = {hi} exceeds the degree cap {DEFAULT_DEGREE_CAP}"
            )));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("equilibrium", t.equilibrium),
            ("remez", t.remez),
            ("quadrature", t.quadrature),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "tolerance {name} = {v} must be positive"
                )));
            }
        }
        if !(1e-15..=1e-6).contains(&t.equilibrium) {
            return Err(Error::Config(format!(
                "equilibrium tolerance {} outside [1e-15, 1e-6]",
                t.equilibrium
            )));
        }
        if let GridSpec::Points(p) = &self.grid {
            if let Some(x) = p.iter().find(|&&x| !x.is_finite() || set.contains(x)) {
                return Err(Error::Config(format!(
                    "grid point {x} must be finite and off the set"
                )));
            }
        }
        if self.comb_q_max == 0 || self.comb_q_max > 10_000 {
            return Err(Error::Config(format!(
                "comb_q_max = {} must lie in 1..=10000",
                self.comb_q_max
            )));
        }
        if let Some(e) = self.almost_period_eps {
            if e.is_nan() || e <= 0.0 {
                return Err(Error::Config(format!(
                    "almost_period_eps = {e} must be positive"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    Ok,
    Validation,
    Numerical,
    Invariant,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Ok => 0,
            ExitStatus::Validation => 1,
            ExitStatus::Numerical => 2,
            ExitStatus::Invariant => 3,
        }
    }

    /// Status for an error raised while a run is in progress.
    pub fn of_run_error(e: &Error) -> Self {
        match e {
            Error::Invariant(_) => ExitStatus::Invariant,
            Error::Config(_) => ExitStatus::Validation,
            _ => ExitStatus::Numerical,
        }
    }

    fn worst(self, other: ExitStatus) -> ExitStatus {
        if other.code() > self.code() {
            other
        } else {
            self
        }
    }
}

/// Per-degree record written under `solutions/`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub n: usize,
    pub t_n: f64,
    pub log_t_n: f64,
    pub widom_factor: f64,
    pub zeros: Vec<f64>,
    pub hull_chebyshev_coefficients: Vec<f64>,
    pub alternation: Vec<AlternationPoint>,
    pub gap_zeros: BTreeMap<usize, f64>,
    pub bands: Vec<[f64; 2]>,
    pub band_masses: Vec<f64>,
    pub widom: WidomSolution,
    pub ratio: f64,
    pub sup_deviation: f64,
    pub h_residual: f64,
    pub cert_pass: bool,
    pub remez_iterations: usize,
    pub level_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombReport {
    pub parameters: CombParameters,
    pub scan: ScanVerdict,
    pub q_max: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub pass: bool,
    /// Informational suites are reported but never change the exit status.
    pub informational: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub package: String,
    pub version: String,
    pub csv_schema: u32,
    pub status: ExitStatus,
    pub exit_code: i32,
    pub errors: Vec<String>,
    pub rows_written: usize,
    pub equilibrium_residual: Option<f64>,
    pub max_level_gap: f64,
    pub max_mass_error: f64,
    pub max_h_residual: f64,
    pub files: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub status: ExitStatus,
    pub rows: Vec<DiagnosticsRow>,
    pub suites: Vec<SuiteResult>,
    pub errors: Vec<String>,
    pub output_dir: PathBuf,
    /// Largest final Remez level gap over the computed degrees.
    pub max_level_gap: f64,
}

/// The CSV table for `rows`, schema comment first.
pub fn diagnostics_csv(rows: &[DiagnosticsRow]) -> String {
    let mut s = format!("# widomlab diagnostics schema {CSV_SCHEMA}\n{CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{}",
            r.n,
            r.log10_t_n,
            r.widom_factor,
            r.f_norm,
            r.ratio,
            r.sup_deviation,
            r.h_residual,
            r.cert_pass
        );
    }
    s
}

fn solution_path(dir: &Path, n: usize) -> PathBuf {
    dir.join("solutions").join(format!("n{n:03}.json"))
}

struct Degree {
    row: DiagnosticsRow,
    record: SolutionRecord,
    cross: Option<CrossValidation>,
}

fn run_degree(
    eq: &EquilibriumData,
    n: usize,
    opts: &RemezOptions,
    grid: &[f64],
    cross_up_to: usize,
) -> Result<Degree> {
    let sol = chebyshev_with(eq, n, opts)?;
    let row = diagnostics_row(eq, &sol, grid)?;
    let widom = widom_from_gap_set(eq, &gap_set_of(eq, &sol)?)?;
    let bands = remez::bands(&sol, eq.set(), TOUCH_TOL)?;
    let cross = if n <= cross_up_to {
        Some(cross_validate_en(&sol, eq.tol())?)
    } else {
        None
    };
    let record = SolutionRecord {
        n,
        t_n: sol.t_n(),
        log_t_n: sol.log_t,
        widom_factor: row.widom_factor,
        zeros: sol.zeros(),
        hull_chebyshev_coefficients: sol.poly.hull_chebyshev_coefficients(),
        alternation: sol.alternation.clone(),
        gap_zeros: sol.gap_zeros.clone(),
        bands: bands.bands.iter().map(|b| [b.lo, b.hi]).collect(),
        band_masses: bands.masses.clone(),
        widom,
        ratio: row.ratio,
        sup_deviation: row.sup_deviation,
        h_residual: row.h_residual,
        cert_pass: row.cert_pass,
        remez_iterations: sol.iterations,
        level_gap: sol.level_gap,
    };
    Ok(Degree { row, record, cross })
}

/// Runs the configured experiment and writes every artifact into `out`.
///
/// Artifacts computed before a failure are kept; the manifest lists the errors.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> RunReport {
    let mut report = RunReport {
        status: ExitStatus::Ok,
        rows: Vec::new(),
        suites: Vec::new(),
        errors: Vec::new(),
        output_dir: out.to_path_buf(),
        max_level_gap: 0.0,
    };
    if let Err(e) = cfg.validate() {
        report.status = ExitStatus::Validation;
        report.errors.push(e.to_string());
        return report;
    }
    if let Err(e) = execute(cfg, out, &mut report) {
        report.status = report.status.worst(ExitStatus::of_run_error(&e));
        report.errors.push(e.to_string());
        // best effort: the manifest itself may be what failed
        let _ = write_manifest(out, &report, None, &[]);
    }
    report
}

fn execute(cfg: &ExperimentConfig, out: &Path, report: &mut RunReport) -> Result<()> {
    fs::create_dir_all(out.join("solutions"))?;
    fs::write(out.join("config.json"), serde_json::to_string_pretty(cfg)?)?;
    let set = cfg.real_set()?;
    let eq = EquilibriumData::solve(&set, cfg.tolerances.equilibrium)?;
    let opts = RemezOptions {
        tol: cfg.tolerances.remez,
        ..RemezOptions::default()
    };
    let grid = match &cfg.grid {
        GridSpec::Default => default_grid(&set),
        GridSpec::Points(p) => p.clone(),
    };
    let [lo, hi] = cfg.n_range;
    let results: Vec<(usize, Result<Degree>)> = (lo..=hi)
        .into_par_iter()
        .map(|n| {
            (
                n,
                run_degree(&eq, n, &opts, &grid, cfg.cross_validate_up_to),
            )
        })
        .collect();

    let mut crosses = Vec::new();
    let mut files = vec!["config.json".to_string()];
    for (n, r) in results {
        match r {
            Ok(d) => {
                let path = solution_path(out, n);
                fs::write(&path, serde_json::to_string_pretty(&d.record)?)?;
                files.push(format!("solutions/n{n:03}.json"));
                report.max_level_gap = report.max_level_gap.max(d.record.level_gap);
                report.rows.push(d.row);
                crosses.extend(d.cross);
            }
            Err(e) => {
                report.status = report.status.worst(ExitStatus::of_run_error(&e));
                report.errors.push(format!("n = {n}: {e}"));
            }
        }
    }
    fs::write(out.join("diagnostics.csv"), diagnostics_csv(&report.rows))?;
    files.push("diagnostics.csv".into());

    let comb = if cfg.comb {
        let c = CombReport {
            parameters: comb_parameters(&eq),
            scan: canonical_generator_scan(&eq, cfg.comb_q_max)?,
            q_max: cfg.comb_q_max,
        };
        fs::write(out.join("comb.json"), serde_json::to_string_pretty(&c)?)?;
        files.push("comb.json".into());
        Some(c)
    } else {
        None
    };

    report.suites = suites(cfg, &eq, &report.rows, &crosses);
    if report.suites.iter().any(|s| !s.pass && !s.informational) {
        report.status = report.status.worst(ExitStatus::Invariant);
    }
    let periods = match cfg.almost_period_eps {
        Some(eps) if report.rows.len() >= 20 => Some(almost_period_probe(&report.rows, eps)?),
        _ => None,
    };
    let summary = summary_text(cfg, &eq, report, comb.as_ref(), periods.as_deref());
    fs::write(out.join("summary.txt"), summary)?;
    files.push("summary.txt".into());
    files.push("manifest.json".into());
    write_manifest(out, report, Some(&eq), &files)?;
    Ok(())
}

fn suites(
    cfg: &ExperimentConfig,
    eq: &EquilibriumData,
    rows: &[DiagnosticsRow],
    crosses: &[CrossValidation],
) -> Vec<SuiteResult> {
    let mut out = Vec::new();
    let mut push = |name: &str, pass: bool, informational: bool, detail: String| {
        out.push(SuiteResult {
            name: name.into(),
            pass,
            informational,
            detail,
        })
    };
    let upper = 2.0 * eq.pw_sum().exp();
    let (wmin, wmax) = rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| {
            (a.min(r.widom_factor), b.max(r.widom_factor))
        });
    push(
        "widom_bounds",
        rows.iter()
            .all(|r| r.widom_factor >= 2.0 - BOUND_TOL && r.widom_factor <= upper + BOUND_TOL),
        false,
        format!("W_n in [{wmin:.12}, {wmax:.12}], allowed [2, {upper:.12}]"),
    );
    let failed: Vec<usize> = rows.iter().filter(|r| !r.cert_pass).map(|r| r.n).collect();
    push(
        "alternation",
        failed.is_empty(),
        false,
        format!("failing degrees {failed:?}"),
    );
    let m = rows.iter().map(|r| r.mass_error).fold(0.0, f64::max);
    push(
        "band_masses",
        m <= MASS_TOL,
        false,
        format!("max |rho_n(band) - 1/n| = {m:.3e}"),
    );
    let h = rows.iter().map(|r| r.h_residual).fold(0.0, f64::max);
    let h_tol = 10.0 * cfg.tolerances.quadrature;
    push(
        "h_n",
        h <= h_tol,
        false,
        format!("max residual {h:.3e}, allowed {h_tol:.1e}"),
    );
    let bad_ratio = rows
        .iter()
        .filter(|r| !(r.ratio > 0.0 && r.ratio.is_finite()))
        .count();
    push(
        "ratio_positive",
        bad_ratio == 0,
        false,
        format!("{bad_ratio} ratios not in (0, inf)"),
    );
    // F_n = 1 whenever T_n has no zero inside a gap, and then the ratio is W_n >= 2
    let above = rows.iter().filter(|r| r.ratio > 2.0 + BOUND_TOL).count();
    push(
        "ratio_at_most_two",
        above == 0,
        true,
        format!("{above} of {} ratios above 2", rows.len()),
    );
    if !crosses.is_empty() {
        let c = crosses.iter().map(|c| c.capacity_diff).fold(0.0, f64::max);
        let g = crosses.iter().map(|c| c.green_diff).fold(0.0, f64::max);
        push(
            "cross_validation",
            c <= CROSS_TOL && g <= CROSS_TOL,
            false,
            format!(
                "n <= {}: capacity {c:.3e}, green {g:.3e}",
                cfg.cross_validate_up_to
            ),
        );
    }
    let sym = green_symmetry_spot_check(eq, cfg.seed);
    push(
        "green_symmetry",
        matches!(sym, Ok(d) if d <= 1e-6),
        false,
        match sym {
            Ok(d) => format!("max |G(z,w) - G(w,z)| = {d:.3e} over 5 seeded pairs"),
            Err(e) => e.to_string(),
        },
    );
    let tail: Vec<DiagnosticsRow> = rows.iter().filter(|r| r.n >= 5).cloned().collect();
    if tail.len() >= 2 {
        let rep = ConvergenceReport::new(tail, cfg.trend_window);
        push(
            "deviation_trend",
            rep.slope < 0.0,
            true,
            format!(
                "slope of ln sup_deviation over n >= 5: {:.4}; medians first/last {} rows: {:.3e} / {:.3e}",
                rep.slope, rep.window, rep.first_median, rep.last_median
            ),
        );
    }
    out
}

/// `|G(z, w) - G(w, z)|` on five pairs drawn from gaps and the outside of the hull.
pub fn green_symmetry_spot_check(eq: &EquilibriumData, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let set = eq.set();
    let h = set.hull();
    let draw = |rng: &mut ChaCha8Rng| -> f64 {
        let k = rng.gen_range(0..=set.gap_count());
        let f: f64 = rng.gen_range(0.05..0.95);
        match set.gaps().get(k) {
            Some(g) => g.lo() + f * g.len(),
            None => {
                let d = h.len() * (0.1 + 2.0 * f);
                if rng.gen_bool(0.5) {
                    h.hi() + d
                } else {
                    h.lo() - d
                }
            }
        }
    };
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let (z, w) = (draw(&mut rng), draw(&mut rng));
        if z == w {
            continue;
        }
        let a = eq.pole(w)?.green(Complex64::new(z, 0.0))?;
        let b = eq.pole(z)?.green(Complex64::new(w, 0.0))?;
        worst = worst.max((a - b).abs());
    }
    Ok(worst)
}

fn summary_text(
    cfg: &ExperimentConfig,
    eq: &EquilibriumData,
    report: &RunReport,
    comb: Option<&CombReport>,
    periods: Option<&[usize]>,
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set: {}", eq.set());
    let _ = writeln!(s, "degrees: {}..={}", cfg.n_range[0], cfg.n_range[1]);
    let _ = writeln!(s, "capacity: {:.15}", eq.capacity());
    let _ = writeln!(s, "Parreau-Widom sum: {:.15}", eq.pw_sum());
    let _ = writeln!(s, "band measures: {:?}", eq.band_measures());
    let _ = writeln!(s, "rows: {}", report.rows.len());
    let _ = writeln!(s);
    for suite in &report.suites {
        let tag = match (suite.pass, suite.informational) {
            (true, _) => "PASS",
            (false, true) => "INFO",
            (false, false) => "FAIL",
        };
        let _ = writeln!(s, "[{tag}] {}: {}", suite.name, suite.detail);
    }
    if let Some(c) = comb {
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "comb teeth: omegas {:?}, heights {:?}",
            c.parameters.omegas, c.parameters.heights
        );
        let verdict = match &c.scan {
            ScanVerdict::Trivial => "no gaps, trivial character group".to_string(),
            ScanVerdict::Relation {
                coefficients,
                integer,
                ..
            } => {
                format!("relation {coefficients:?} . rho = {integer}: the character powers are periodic")
            }
            ScanVerdict::NoRelationFound { bound } => {
                format!("no relation with coefficients up to {bound} (consistent with a canonical generator)")
            }
        };
        let _ = writeln!(s, "generator scan: {verdict}");
    }
    if let Some(p) = periods {
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "f_norm almost periods (eps = {:e}): {:?}",
            cfg.almost_period_eps.unwrap_or_default(),
            p
        );
        if let Some(&first) = p.first() {
            if p.iter().all(|q| q % first == 0) && p.len() == report.rows.len() / 2 / first {
                let _ = writeln!(s, "f_norm is periodic with period {first}");
            }
        }
    }
    if !report.errors.is_empty() {
        let _ = writeln!(s);
        for e in &report.errors {
            let _ = writeln!(s, "error: {e}");
        }
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "status: {:?}", report.status);
    s
}

fn write_manifest(
    out: &Path,
    report: &RunReport,
    eq: Option<&EquilibriumData>,
    files: &[String],
) -> Result<()> {
    let rows = &report.rows;
    let m = Manifest {
        package: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        csv_schema: CSV_SCHEMA,
        status: report.status,
        exit_code: report.status.code(),
        errors: report.errors.clone(),
        rows_written: rows.len(),
        equilibrium_residual: eq.map(|e| e.residuals().max()),
        max_level_gap: report.max_level_gap,
        max_mass_error: rows.iter().map(|r| r.mass_error).fold(0.0, f64::max),
        max_h_residual: rows.iter().map(|r| r.h_residual).fold(0.0, f64::max),
        files: files.to_vec(),
    };
    fs::create_dir_all(out)?;
    fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&m)?)?;
    Ok(())
}

/// Reads `solutions/nXXX.json` from a run directory.
pub fn load_solution(dir: &Path, n: usize) -> Result<SolutionRecord> {
    let path = solution_path(dir, n);
    let text = fs::read_to_string(&path)
        .map_err(|e| Error::Artifact(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

/// Human-readable view of one stored degree.
pub fn show_solution(dir: &Path, n: usize) -> Result<String> {
    let r = load_solution(dir, n)?;
    let mut s = String::new();
    let _ = writeln!(s, "n = {}", r.n);
    let _ = writeln!(s, "t_n = {:.15e}", r.t_n);
    let _ = writeln!(s, "W_n = {:.15}", r.widom_factor);
    let _ = writeln!(s, "alternation points ({}):", r.alternation.len());
    for p in &r.alternation {
        let _ = writeln!(s, "  x = {:+.15}  T_n(x) = {:+.6e}", p.x, p.value);
    }
    if r.gap_zeros.is_empty() {
        let _ = writeln!(s, "gap zeros: none");
    } else {
        let _ = writeln!(s, "gap zeros:");
        for (k, x) in &r.gap_zeros {
            let _ = writeln!(s, "  gap {k}: {x:+.15}");
        }
    }
    let _ = writeln!(s, "||F_n|| = {:.15}", r.widom.f_norm);
    let _ = writeln!(s, "ratio = {:.15}", r.ratio);
    let _ = writeln!(s, "sup deviation = {:.3e}", r.sup_deviation);
    Ok(s)
}
