//! The work behind each `pep` subcommand.
//!
//! Every command returns an [`Outcome`] (exit code, human-readable report,
//! files written) instead of printing, so the binary, the examples and the
//! tests drive the same code. The sweep and scan drivers are public on
//! their own for callers that want rows rather than files.
//!
//! Output is deterministic: grid points are evaluated independently,
//! collected by index, and every float is written with 12 significant
//! digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algos::{
    build_dgd_fixed_matrix, build_dgd_spectral, build_gradient_method, classical_bound,
    default_network_matrix, Criterion, Representation,
};
use crate::classes::{check_numeric, ClassSpec, NumericData, NumericPoint};
use crate::gram::PepProblem;
use crate::recover::{
    extract_instance, read_instance, verify_instance, write_instance, Certification,
    VerificationReport, WorstCaseInstance,
};
use crate::scenario::{round_sig, Axis, MethodConfig, NetworkConfig, Scenario, Tolerances};
use crate::sdp::{export_sdp, solve_pep};
use crate::PepError;

/// First line of every CSV file.
pub const CSV_SCHEMA: &str = "# pep-forge schema v1";
pub const RESULT_SCHEMA: &str = "pep-forge result v1";
pub const SUMMARY_SCHEMA: &str = "pep-forge summary v1";

/// Tolerance of the closed-form checks in the region scan.
pub const REGION_TOL: f64 = 1e-9;

/// Command-line overrides.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub tol_gap: Option<f64>,
    pub tol_feas: Option<f64>,
    /// Worker threads for sweeps; all available cores when unset.
    pub jobs: Option<usize>,
}

impl RunOptions {
    fn tolerances(&self, base: &Tolerances) -> Tolerances {
        let mut t = *base;
        if let Some(g) = self.tol_gap {
            t.gap = g;
        }
        if let Some(f) = self.tol_feas {
            t.feas = f;
        }
        t
    }

    fn output(&self, s: Option<&Scenario>, default: &str) -> PathBuf {
        self.out
            .clone()
            .or_else(|| s.and_then(|s| s.output.path.as_ref().map(PathBuf::from)))
            .unwrap_or_else(|| PathBuf::from(default))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub report: String,
    pub files: Vec<PathBuf>,
}

/// Formats like C's `%.12g`.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.into();
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    } else {
        format!(
            "{}e{}{:02}",
            trim_zeros(mantissa),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn json_num(v: f64) -> Option<f64> {
    v.is_finite().then(|| round_sig(v))
}

fn write_file(path: &Path, contents: &str) -> Result<(), PepError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| PepError::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| PepError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_file(path: &Path) -> Result<String, PepError> {
    std::fs::read_to_string(path).map_err(|source| PepError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// `result.json` -> `result.instance.txt`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, PepError> {
    let n = jobs.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    });
    if n == 0 {
        return Err(PepError::InvalidParameter(
            "--jobs must be at least 1".into(),
        ));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| PepError::InvalidParameter(format!("thread pool: {e}")))
}

/// Solve, recover and verify one problem.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub status: pep_sdp::Status,
    pub value: f64,
    pub dual_value: f64,
    /// `|primal - dual|` objective difference.
    pub gap: f64,
    pub max_kkt_residual: f64,
    pub iterations: usize,
    pub certification: Certification,
    pub reason: String,
    pub instance: Option<WorstCaseInstance>,
    pub report: Option<VerificationReport>,
}

impl PointResult {
    pub fn is_optimal(&self) -> bool {
        self.status == pep_sdp::Status::Optimal
    }
}

pub fn evaluate(p: &PepProblem, tol: &Tolerances) -> Result<PointResult, PepError> {
    let sol = solve_pep(p, &tol.solve_options())?;
    let mut out = PointResult {
        status: sol.status,
        value: sol.value,
        dual_value: sol.dual_value,
        gap: sol.sdp.gap,
        max_kkt_residual: sol.max_kkt_residual(),
        iterations: sol.sdp.iterations,
        certification: Certification::NumericalFailure,
        reason: format!("solver status {}", sol.status),
        instance: None,
        report: None,
    };
    if !sol.is_optimal() {
        return Ok(out);
    }
    match extract_instance(p, &sol, tol.rank) {
        Ok(inst) => {
            let rep = verify_instance(&inst, p, tol.verify);
            out.certification = rep.certification;
            out.reason = rep.reason.clone();
            out.instance = Some(inst);
            out.report = Some(rep);
        }
        Err(e) => out.reason = format!("instance recovery failed: {e}"),
    }
    Ok(out)
}

/// Compact per-point summary used in sweep rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub status: pep_sdp::Status,
    pub value: f64,
    pub certification: Certification,
}

impl Cell {
    pub fn ok(&self) -> bool {
        self.status == pep_sdp::Status::Optimal
    }
}

impl From<&PointResult> for Cell {
    fn from(r: &PointResult) -> Self {
        Cell {
            status: r.status,
            value: r.value,
            certification: r.certification,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HRow {
    pub h: f64,
    /// Textbook bound, when the scenario is plain gradient descent on
    /// `F_{0,L}` measured by the last-iterate gap.
    pub classical: Option<f64>,
    /// Absent when the family has no relaxed form.
    pub relaxed: Option<Cell>,
    pub tight: Cell,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaRow {
    pub lambda: f64,
    pub spectral: Cell,
    /// The default network matrix at this `lambda`.
    pub fixed: Cell,
    /// Whether a network matrix was recovered from the spectral instance,
    /// with its least-squares residual.
    pub recovered: Option<(bool, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepRows {
    H(Vec<HRow>),
    Lambda(Vec<LambdaRow>),
}

/// `(grid value, value)` of the smallest optimal entry.
pub fn argmin<I: IntoIterator<Item = (f64, Option<f64>)>>(it: I) -> Option<(f64, f64)> {
    it.into_iter()
        .filter_map(|(x, v)| v.map(|v| (x, v)))
        .filter(|(_, v)| v.is_finite())
        .fold(None, |best: Option<(f64, f64)>, (x, v)| match best {
            Some((_, bv)) if bv <= v => best,
            _ => Some((x, v)),
        })
}

fn relaxed_available(f: &ClassSpec) -> bool {
    matches!(*f, ClassSpec::SmoothStronglyConvex { mu, l, .. } if mu == 0.0 && l.is_finite())
        || matches!(f, ClassSpec::RelaxedSmoothConvex { .. })
}

/// Tight and relaxed gradient PEPs and the textbook bound along an `h`
/// grid.
pub fn run_h_sweep(
    s: &Scenario,
    points: &[f64],
    tol: &Tolerances,
    jobs: Option<usize>,
) -> Result<Vec<HRow>, PepError> {
    let base = s.gradient_spec(Some(1.0))?;
    let with_relaxed = relaxed_available(&base.family);
    let classical_l = match base.family {
        ClassSpec::SmoothStronglyConvex { mu, l, .. }
            if mu == 0.0 && l.is_finite() && base.criterion == Criterion::LastIterateGap =>
        {
            Some(l)
        }
        _ => None,
    };
    let row = |h: f64| -> Result<HRow, PepError> {
        let spec = s.gradient_spec(Some(h))?;
        let tight = evaluate(&build_gradient_method(&spec, Representation::Tight)?, tol)?;
        let relaxed = if with_relaxed {
            let r = evaluate(&build_gradient_method(&spec, Representation::Relaxed)?, tol)?;
            Some(Cell::from(&r))
        } else {
            None
        };
        Ok(HRow {
            h,
            classical: classical_l
                .map(|l| classical_bound(spec.n, h, l, spec.radius))
                .transpose()?,
            relaxed,
            tight: Cell::from(&tight),
        })
    };
    pool(jobs)?.install(|| points.par_iter().map(|&h| row(h)).collect())
}

/// Spectral and default-matrix DGD PEPs along a `lambda` grid.
pub fn run_lambda_sweep(
    s: &Scenario,
    points: &[f64],
    tol: &Tolerances,
    jobs: Option<usize>,
) -> Result<Vec<LambdaRow>, PepError> {
    let row = |lam: f64| -> Result<LambdaRow, PepError> {
        let spec = s.dgd_spec(Some(lam))?;
        let spectral = evaluate(&build_dgd_spectral(&spec)?, tol)?;
        let w = s
            .network_matrix(lam)?
            .unwrap_or_else(|| default_network_matrix(spec.agents, lam));
        let fixed = evaluate(&build_dgd_fixed_matrix(&spec, &w)?, tol)?;
        let recovered = spectral
            .report
            .as_ref()
            .and_then(|r| r.networks.first())
            .map(|(_, rec)| (rec.success, rec.residual));
        Ok(LambdaRow {
            lambda: lam,
            spectral: Cell::from(&spectral),
            fixed: Cell::from(&fixed),
            recovered,
        })
    };
    pool(jobs)?.install(|| points.par_iter().map(|&l| row(l)).collect())
}

fn opt_num(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

fn cell_value(c: &Option<Cell>) -> String {
    c.as_ref().map(|c| fmt_num(c.value)).unwrap_or_default()
}

fn cell_flag(c: &Option<Cell>, f: impl Fn(&Cell) -> &'static str) -> String {
    c.as_ref().map(f).unwrap_or_default().to_string()
}

/// Sweep rows as CSV, schema line first.
pub fn sweep_csv(rows: &SweepRows) -> String {
    let mut out = String::new();
    writeln!(out, "{CSV_SCHEMA}").unwrap();
    match rows {
        SweepRows::H(rows) => {
            writeln!(
                out,
                "h,classical,relaxed,tight,relaxed_status,tight_status,relaxed_certification,tight_certification"
            )
            .unwrap();
            for r in rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    fmt_num(r.h),
                    opt_num(r.classical),
                    cell_value(&r.relaxed),
                    fmt_num(r.tight.value),
                    cell_flag(&r.relaxed, |c| c.status.as_str()),
                    r.tight.status.as_str(),
                    cell_flag(&r.relaxed, |c| c.certification.as_str()),
                    r.tight.certification.as_str(),
                )
                .unwrap();
            }
        }
        SweepRows::Lambda(rows) => {
            writeln!(
                out,
                "lambda,spectral,fixed,spectral_status,fixed_status,spectral_certification,fixed_certification,network_recovered,recovery_residual"
            )
            .unwrap();
            for r in rows {
                let (rec, res) = match r.recovered {
                    Some((ok, res)) => (if ok { "1" } else { "0" }, fmt_num(res)),
                    None => ("", String::new()),
                };
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    fmt_num(r.lambda),
                    fmt_num(r.spectral.value),
                    fmt_num(r.fixed.value),
                    r.spectral.status.as_str(),
                    r.fixed.status.as_str(),
                    r.spectral.certification.as_str(),
                    r.fixed.certification.as_str(),
                    rec,
                    res,
                )
                .unwrap();
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Argmin {
    pub at: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub schema: String,
    pub axis: String,
    pub points: usize,
    /// Non-optimal solves per column.
    pub failures: BTreeMap<String, usize>,
    /// Smallest optimal value per column.
    pub argmin: BTreeMap<String, Argmin>,
    pub meta: BTreeMap<String, String>,
}

/// `fixed_matrix_note` describes the matrix family behind the fixed column
/// of a `lambda` sweep.
pub fn sweep_summary(rows: &SweepRows, fixed_matrix_note: &str) -> SweepSummary {
    let fixed_matrix_note = fixed_matrix_note.to_string();
    let mut failures = BTreeMap::new();
    let mut argmins = BTreeMap::new();
    let mut meta = BTreeMap::new();
    let mut put = |name: &str, m: Option<(f64, f64)>| {
        if let Some((at, value)) = m {
            argmins.insert(
                name.to_string(),
                Argmin {
                    at: round_sig(at),
                    value: round_sig(value),
                },
            );
        }
    };
    let ok = |c: &Cell| c.ok().then_some(c.value);
    let (axis, points) = match rows {
        SweepRows::H(rows) => {
            put("tight", argmin(rows.iter().map(|r| (r.h, ok(&r.tight)))));
            put(
                "relaxed",
                argmin(rows.iter().map(|r| (r.h, r.relaxed.as_ref().and_then(ok)))),
            );
            put("classical", argmin(rows.iter().map(|r| (r.h, r.classical))));
            failures.insert(
                "tight".into(),
                rows.iter().filter(|r| !r.tight.ok()).count(),
            );
            if rows.iter().any(|r| r.relaxed.is_some()) {
                failures.insert(
                    "relaxed".into(),
                    rows.iter()
                        .filter(|r| r.relaxed.as_ref().is_some_and(|c| !c.ok()))
                        .count(),
                );
            }
            ("h", rows.len())
        }
        SweepRows::Lambda(rows) => {
            put(
                "spectral",
                argmin(rows.iter().map(|r| (r.lambda, ok(&r.spectral)))),
            );
            put(
                "fixed",
                argmin(rows.iter().map(|r| (r.lambda, ok(&r.fixed)))),
            );
            failures.insert(
                "spectral".into(),
                rows.iter().filter(|r| !r.spectral.ok()).count(),
            );
            failures.insert(
                "fixed".into(),
                rows.iter().filter(|r| !r.fixed.ok()).count(),
            );
            meta.insert("fixed_matrix".into(), fixed_matrix_note.clone());
            ("lambda", rows.len())
        }
    };
    SweepSummary {
        schema: SUMMARY_SCHEMA.into(),
        axis: axis.into(),
        points,
        failures,
        argmin: argmins,
        meta,
    }
}

/// Human-readable description of the matrix family a `lambda` sweep uses
/// for its fixed column.
pub fn fixed_matrix_note(s: &Scenario) -> String {
    match &s.method {
        MethodConfig::Dgd {
            network: NetworkConfig::Signs(signs),
            ..
        } => {
            let f: Vec<String> = signs
                .iter()
                .map(|v| format!("{} lambda", fmt_num(*v)))
                .collect();
            format!("Helmert basis conjugate of diag(1, {})", f.join(", "))
        }
        MethodConfig::Dgd { .. } => {
            "Helmert basis conjugate of diag(1, lambda, -lambda, lambda, ...)".into()
        }
        _ => String::new(),
    }
}

/// Runs the sweep a scenario describes.
pub fn run_sweep(
    s: &Scenario,
    tol: &Tolerances,
    jobs: Option<usize>,
) -> Result<SweepRows, PepError> {
    let sweep = s.sweep.as_ref().ok_or_else(|| PepError::Parse {
        path: "sweep".into(),
        msg: "scenario has no sweep".into(),
    })?;
    let points = sweep.points()?;
    Ok(match sweep.axis {
        Axis::H => SweepRows::H(run_h_sweep(s, &points, tol, jobs)?),
        Axis::Lambda => SweepRows::Lambda(run_lambda_sweep(s, &points, tol, jobs)?),
    })
}

pub fn cmd_sweep(scenario: &Path, opts: &RunOptions) -> Result<Outcome, PepError> {
    let s = Scenario::load(scenario)?;
    let tol = opts.tolerances(&s.tolerances);
    let rows = run_sweep(&s, &tol, opts.jobs)?;
    let out = opts.output(Some(&s), "sweep.csv");
    let summary_path = sibling(&out, "summary.json");
    let summary = sweep_summary(&rows, &fixed_matrix_note(&s));
    write_file(&out, &sweep_csv(&rows))?;
    write_file(&summary_path, &to_json(&summary))?;

    let mut report = format!("{} points on axis {}\n", summary.points, summary.axis);
    for (name, n) in &summary.failures {
        writeln!(report, "  {name}: {n} non-optimal").unwrap();
    }
    for (name, a) in &summary.argmin {
        writeln!(
            report,
            "  argmin {name}: {} at {}",
            fmt_num(a.value),
            fmt_num(a.at)
        )
        .unwrap();
    }
    Ok(Outcome {
        exit_code: 0,
        report,
        files: vec![out, summary_path],
    })
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Stored next to a solve's instance file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultRecord {
    pub schema: String,
    pub scenario: Scenario,
    pub status: String,
    pub value: Option<f64>,
    pub dual_value: Option<f64>,
    pub gap: Option<f64>,
    pub max_kkt_residual: Option<f64>,
    pub iterations: usize,
    pub certification: String,
    pub reason: String,
    pub max_residual: Option<f64>,
    pub dimension: Option<usize>,
    /// Instance file, relative to the record's directory.
    pub instance: Option<String>,
    pub meta: BTreeMap<String, String>,
}

pub fn cmd_solve(scenario: &Path, opts: &RunOptions) -> Result<Outcome, PepError> {
    let mut s = Scenario::load(scenario)?;
    let tol = opts.tolerances(&s.tolerances);
    s.tolerances = tol;
    let p = s.build_problem()?;
    let r = evaluate(&p, &tol)?;
    let out = opts.output(Some(&s), "result.json");
    let mut files = Vec::new();
    let instance = match &r.instance {
        Some(inst) => {
            let path = sibling(&out, "instance.txt");
            write_file(&path, &write_instance(inst, r.report.as_ref()))?;
            let name = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            files.push(path);
            Some(name)
        }
        None => None,
    };
    let record = ResultRecord {
        schema: RESULT_SCHEMA.into(),
        scenario: s,
        status: r.status.as_str().into(),
        value: json_num(r.value),
        dual_value: json_num(r.dual_value),
        gap: json_num(r.gap),
        max_kkt_residual: json_num(r.max_kkt_residual),
        iterations: r.iterations,
        certification: r.certification.as_str().into(),
        reason: r.reason.clone(),
        max_residual: r.report.as_ref().and_then(|rep| json_num(rep.max_residual)),
        dimension: r.instance.as_ref().map(|i| i.dimension),
        instance,
        meta: p.meta().clone(),
    };
    write_file(&out, &to_json(&record))?;
    files.insert(0, out);
    let report = format!(
        "status {}\nvalue {}\ncertification {}\n{}\n",
        r.status,
        fmt_num(r.value),
        r.certification,
        r.reason
    );
    Ok(Outcome {
        exit_code: if r.is_optimal() { 0 } else { 2 },
        report,
        files,
    })
}

pub fn read_record(path: &Path) -> Result<ResultRecord, PepError> {
    let text = read_file(path)?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        PepError::Parse {
            path: path.display().to_string(),
            msg: format!("at `{at}`: {}", e.into_inner()),
        }
    })
}

/// Re-checks the instance stored with a result record against a freshly
/// built problem.
pub fn verify_record(path: &Path, opts: &RunOptions) -> Result<VerificationReport, PepError> {
    let record = read_record(path)?;
    let name = record.instance.as_ref().ok_or_else(|| PepError::Parse {
        path: path.display().to_string(),
        msg: format!("no instance recorded (status {})", record.status),
    })?;
    let inst_path = path.with_file_name(name);
    let (inst, _) = read_instance(&read_file(&inst_path)?).map_err(|e| match e {
        PepError::Parse { msg, .. } => PepError::Parse {
            path: inst_path.display().to_string(),
            msg,
        },
        other => other,
    })?;
    record.scenario.validate()?;
    let tol = opts.tolerances(&record.scenario.tolerances);
    let p = record.scenario.build_problem()?;
    Ok(verify_instance(&inst, &p, tol.verify))
}

pub fn cmd_verify(record: &Path, opts: &RunOptions) -> Result<Outcome, PepError> {
    let rep = verify_record(record, opts)?;
    let mut report = format!(
        "certification {}\n{}\nmax residual {}\nobjective at instance {} (solver {})\n",
        rep.certification,
        rep.reason,
        fmt_num(rep.max_residual),
        fmt_num(rep.objective_at_instance),
        fmt_num(rep.value)
    );
    for v in &rep.violations {
        writeln!(report, "  violated {} by {}", v.label, fmt_num(v.value)).unwrap();
    }
    for (name, rec) in &rep.networks {
        let eig: Vec<String> = rec.eigenvalues.iter().map(|e| fmt_num(*e)).collect();
        writeln!(
            report,
            "  network {name}: {} (residual {}, eigenvalues [{}]{})",
            rec.message,
            fmt_num(rec.residual),
            eig.join(", "),
            if rec.underdetermined {
                ", underdetermined"
            } else {
                ""
            }
        )
        .unwrap();
    }
    let mut files = Vec::new();
    if let Some(out) = &opts.out {
        write_file(out, &report)?;
        files.push(out.clone());
    }
    Ok(Outcome {
        exit_code: if rep.certification == Certification::NumericalFailure {
            2
        } else {
            0
        },
        report,
        files,
    })
}

pub fn cmd_export_sdp(scenario: &Path, opts: &RunOptions) -> Result<Outcome, PepError> {
    let s = Scenario::load(scenario)?;
    let p = s.build_problem()?;
    let out = opts.output(Some(&s), "problem.sdp");
    let text = export_sdp(&p);
    write_file(&out, &text)?;
    Ok(Outcome {
        exit_code: 0,
        report: format!(
            "{} basis vectors, {} scalars, {} constraints\n",
            p.basis().len(),
            p.scalars().len(),
            p.constraints().len()
        ),
        files: vec![out],
    })
}

/// One cell of the two-point region scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionCell {
    pub g2: f64,
    pub f2: f64,
    /// Convexity both ways plus the Lipschitz gradient bound.
    pub relaxed: bool,
    /// Exact smooth convex interpolation.
    pub tight: bool,
}

fn axis_points(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    (0..count)
        .map(|k| round_sig(lo + k as f64 * step))
        .collect()
}

/// Which second points `(x2, g2, f2)` are consistent with the anchor under
/// each representation, decided by the closed-form two-point checks.
pub fn run_region(s: &Scenario) -> Result<Vec<RegionCell>, PepError> {
    let MethodConfig::Region { anchor, grid } = &s.method else {
        return Err(PepError::Parse {
            path: "method.kind".into(),
            msg: "expected region".into(),
        });
    };
    let tight = ClassSpec::smooth_convex(anchor.l);
    let relaxed = ClassSpec::RelaxedSmoothConvex { l: anchor.l };
    let feasible = |spec: &ClassSpec, g2: f64, f2: f64| -> Result<bool, PepError> {
        let data = NumericData::Function {
            name: "f".into(),
            spec: spec.clone(),
            points: vec![
                NumericPoint::new("1", vec![anchor.x1], vec![anchor.g1], anchor.f1),
                NumericPoint::new("2", vec![anchor.x2], vec![g2], f2),
            ],
        };
        Ok(check_numeric(&data, REGION_TOL)?.feasible)
    };
    let mut cells = Vec::new();
    for &g2 in &axis_points(grid.g_min, grid.g_max, grid.step) {
        for &f2 in &axis_points(grid.f_min, grid.f_max, grid.step) {
            cells.push(RegionCell {
                g2,
                f2,
                relaxed: feasible(&relaxed, g2, f2)?,
                tight: feasible(&tight, g2, f2)?,
            });
        }
    }
    Ok(cells)
}

pub fn region_csv(cells: &[RegionCell]) -> String {
    let mut out = String::new();
    writeln!(out, "{CSV_SCHEMA}").unwrap();
    writeln!(out, "g2,f2,relaxed,tight").unwrap();
    for c in cells {
        writeln!(
            out,
            "{},{},{},{}",
            fmt_num(c.g2),
            fmt_num(c.f2),
            u8::from(c.relaxed),
            u8::from(c.tight)
        )
        .unwrap();
    }
    out
}

pub fn cmd_region(scenario: &Path, opts: &RunOptions) -> Result<Outcome, PepError> {
    let s = Scenario::load(scenario)?;
    let cells = run_region(&s)?;
    let out = opts.output(Some(&s), "region.csv");
    write_file(&out, &region_csv(&cells))?;
    let grey = cells.iter().filter(|c| c.relaxed).count();
    let black = cells.iter().filter(|c| c.tight).count();
    Ok(Outcome {
        exit_code: 0,
        report: format!(
            "{} cells: {grey} relaxed-feasible, {black} tight-feasible\n",
            cells.len()
        ),
        files: vec![out],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(1.0 / 42.0), "0.0238095238095");
        assert_eq!(fmt_num(-2.5), "-2.5");
        assert_eq!(fmt_num(123456789012345.0), "1.23456789012e+14");
        assert_eq!(fmt_num(1.5e-7), "1.5e-07");
        assert_eq!(fmt_num(0.1 + 0.2), "0.3");
        assert_eq!(fmt_num(f64::NAN), "nan");
    }

    #[test]
    fn argmin_skips_missing() {
        let m = argmin([
            (0.1, Some(3.0)),
            (0.2, None),
            (0.3, Some(1.0)),
            (0.4, Some(1.0)),
        ]);
        assert_eq!(m, Some((0.3, 1.0)));
        assert_eq!(argmin([(0.1, None)]), None);
    }

    #[test]
    fn sibling_names() {
        assert_eq!(
            sibling(Path::new("a/result.json"), "instance.txt"),
            PathBuf::from("a/result.instance.txt")
        );
        assert_eq!(
            sibling(Path::new("sweep.csv"), "summary.json"),
            PathBuf::from("sweep.summary.json")
        );
    }

    #[test]
    fn region_witnesses() {
        let s = Scenario::from_json(r#"{"method": {"kind": "region"}}"#, "t").unwrap();
        let cells = run_region(&s).unwrap();
        assert_eq!(cells.len(), 301 * 301);
        let at = |g: f64, f: f64| {
            *cells
                .iter()
                .find(|c| (c.g2 - g).abs() < 1e-9 && (c.f2 - f).abs() < 1e-9)
                .unwrap()
        };
        let c = at(1.5, 1.05);
        assert!(c.relaxed && !c.tight);
        let c = at(1.5, 1.2);
        assert!(c.relaxed && c.tight);
    }
}
