//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the report is always printed. The
//! process fails when a criterion fails outside its documented deviation
//! (see `Verdict::deviation`).

mod common;

use std::cell::RefCell;
use std::process::ExitCode;
use std::time::Instant;

use common::*;
use pep_forge::algos::{
    build_dgd_fixed_matrix, build_dgd_spectral, build_gradient_method, classical_bound,
    default_network_matrix, project_network_matrix, DgdSpec, MethodSpec, Representation,
};
use pep_forge::commands::run_region;
use pep_forge::recover::{extract_instance, verify_instance};
use pep_forge::scenario::Scenario;
use pep_forge::sdp::{solve_pep, PepSolution};
use pep_forge::PepProblem;
use pep_sdp::{solve, Block, LinearForm, SdpSolution, SolveOptions, StandardSdp, Status};

/// Largest `max(gap, complementarity, residuals) / (1 + |value|)` over every
/// optimal solve of the run, with the number of solves.
#[derive(Default)]
struct KktLog {
    solves: usize,
    optimal: usize,
    worst: f64,
}

thread_local! {
    static LOG: RefCell<KktLog> = RefCell::new(KktLog::default());
}

fn record(sdp: &SdpSolution, value: f64) {
    LOG.with(|l| {
        let mut l = l.borrow_mut();
        l.solves += 1;
        if sdp.status == Status::Optimal {
            l.optimal += 1;
            let r = [
                sdp.gap,
                sdp.complementarity.abs(),
                sdp.primal_residual,
                sdp.dual_residual,
            ]
            .into_iter()
            .fold(0.0, f64::max)
                / (1.0 + value.abs());
            l.worst = l.worst.max(r);
        }
    });
}

fn run(p: &PepProblem) -> PepSolution {
    let sol = solve_pep(p, &Default::default()).expect("solver error");
    record(&sol.sdp, sol.value);
    sol
}

fn optimal_value(p: &PepProblem) -> Option<f64> {
    let sol = run(p);
    sol.is_optimal().then_some(sol.value)
}

struct Verdict {
    pass: bool,
    /// The failure is confined to a clause recorded as a known deviation.
    deviation: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: String) -> Self {
        Self {
            pass,
            deviation: false,
            detail,
        }
    }
}

fn criterion_1() -> Verdict {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut lower_ok = true;
    for n in [1, 2, 5, 10] {
        let exact = 1.0 / (4 * n + 2) as f64;
        let p =
            build_gradient_method(&MethodSpec::gradient(n, 1.0), Representation::Tight).unwrap();
        let v = optimal_value(&p).unwrap_or(f64::NAN);
        worst = worst.max(((v - exact) / exact).abs());
        lower_ok &= (huber_worst_case(n, 1.0, 1.0) - exact).abs() <= 1e-12;
    }
    let secs = t.elapsed().as_secs_f64();
    Verdict::new(
        worst <= 1e-5 && lower_ok && secs < 5.0,
        format!("max rel. error {worst:.2e}, Huber lower bound matches: {lower_ok}, {secs:.2} s"),
    )
}

struct HPoint {
    h: f64,
    tight: Option<f64>,
    relaxed: Option<f64>,
    classical: f64,
}

fn h_sweep() -> Vec<HPoint> {
    (1..1000)
        .map(|k| {
            let h = k as f64 * 0.002;
            let spec = MethodSpec::gradient(10, h);
            HPoint {
                h,
                tight: optimal_value(&build_gradient_method(&spec, Representation::Tight).unwrap()),
                relaxed: optimal_value(
                    &build_gradient_method(&spec, Representation::Relaxed).unwrap(),
                ),
                classical: classical_bound(10, h, 1.0, 1.0).unwrap(),
            }
        })
        .collect()
}

fn argmin(points: &[HPoint], f: impl Fn(&HPoint) -> Option<f64>) -> (f64, f64) {
    points
        .iter()
        .filter_map(|p| f(p).map(|v| (p.h, v)))
        .fold(
            (f64::NAN, f64::INFINITY),
            |a, b| if b.1 < a.1 { b } else { a },
        )
}

fn criterion_2(points: &[HPoint], secs: f64) -> Verdict {
    let (ht, vt) = argmin(points, |p| p.tight);
    let (hr, _) = argmin(points, |p| p.relaxed);
    let at_one = points
        .iter()
        .find(|p| (p.h - 1.0).abs() < 1e-9)
        .and_then(|p| p.tight)
        .unwrap_or(f64::NAN);
    let ratio = at_one / vt;
    let argmins_ok = (ht - 1.834).abs() <= 0.02 && (hr - 0.694).abs() <= 0.02;
    let ratio_ok = (1.8..=2.2).contains(&ratio);
    let mut v = Verdict::new(
        argmins_ok && ratio_ok,
        format!(
            "tight argmin h = {ht:.3}, relaxed argmin h = {hr:.3}, tight(1)/tight(h*) = {ratio:.4}, \
             {} points, {secs:.0} s",
            points.len()
        ),
    );
    v.deviation = argmins_ok && !ratio_ok;
    v
}

fn criterion_3(points: &[HPoint]) -> Verdict {
    let mut bad = Vec::new();
    let mut compared = 0;
    let mut missing = 0;
    for p in points {
        let Some(t) = p.tight else {
            missing += 1;
            continue;
        };
        if t > p.classical + 1e-6 {
            bad.push(format!("h = {}: tight above classical", p.h));
        }
        match p.relaxed {
            Some(r) if t > r + 1e-6 => bad.push(format!("h = {}: tight above relaxed", p.h)),
            Some(_) => compared += 1,
            None => missing += 1,
        }
    }
    let at = points.iter().find(|p| (p.h - 1.95).abs() < 1e-9).unwrap();
    let blowup = at.relaxed.unwrap_or(f64::NAN) / at.classical;
    Verdict::new(
        bad.is_empty() && blowup >= 10.0,
        format!(
            "{} ordering violations, {compared} relaxed comparisons, {missing} non-optimal solves, \
             relaxed/classical at h = 1.95: {blowup:.0}{}",
            bad.len(),
            bad.first().map(|b| format!(" (first: {b})")).unwrap_or_default()
        ),
    )
}

fn criterion_4() -> Verdict {
    let t = Instant::now();
    let scenario = Scenario::from_json(r#"{"method": {"kind": "region"}}"#, "region").unwrap();
    let cells = run_region(&scenario).unwrap();
    let step = 0.01;
    let near = |a: f64, b: f64| (a - b).abs() < 1e-9;
    let nested = cells.iter().all(|c| !c.tight || c.relaxed);
    let cell = |g: f64, f: f64| cells.iter().find(|c| near(c.g2, g) && near(c.f2, f));
    let grey_only = cell(1.5, 1.05).map_or(false, |c| c.relaxed && !c.tight);
    let both = cell(1.5, 1.2).map_or(false, |c| c.relaxed && c.tight);
    let slice: Vec<f64> = cells
        .iter()
        .filter(|c| near(c.g2, 1.0) && c.tight)
        .map(|c| c.f2)
        .collect();
    let slice_ok = !slice.is_empty()
        && slice.iter().all(|f| (f - 1.0).abs() < step)
        && slice.iter().any(|f| near(*f, 1.0));
    let secs = t.elapsed().as_secs_f64();
    Verdict::new(
        nested && grey_only && both && slice_ok && secs < 10.0,
        format!(
            "{} cells, black within grey: {nested}, (1.5, 1.05) grey-only: {grey_only}, \
             (1.5, 1.2) both: {both}, black at g2 = 1: f2 in {slice:?}, {secs:.2} s",
            cells.len()
        ),
    )
}

fn criterion_5() -> Verdict {
    let results = [
        ("linear maps", linear_map_suite()),
        ("consensus", consensus_suite()),
        ("1-D smooth convex", convex_1d_suite()),
    ];
    let pass = results.iter().all(|(_, r)| r.is_ok());
    let detail = results
        .iter()
        .map(|(n, r)| match r {
            Ok(k) => format!("{n}: {k}/{k}"),
            Err(e) => format!("{n}: {e}"),
        })
        .collect::<Vec<_>>()
        .join(", ");
    Verdict::new(pass, format!("{detail} at tol {NECESSITY_TOL:e}"))
}

/// Solver options as documented for the standalone SDP layer; the PEP
/// pipeline runs at 1e-7.
fn strict() -> SolveOptions {
    SolveOptions {
        gap_tol: 1e-8,
        feas_tol: 1e-8,
        ..SolveOptions::default()
    }
}

/// max <diag(1, 2), X> s.t. tr X = 1, X psd: the largest eigenvalue, 2.
fn max_eigenvalue_sdp() -> f64 {
    let mut sdp = StandardSdp::new(vec![Block::Psd(2)]);
    sdp.objective.push(0, 0, 0, -1.0);
    sdp.objective.push(0, 1, 1, -2.0);
    let mut tr = LinearForm::default();
    tr.push(0, 0, 0, 1.0);
    tr.push(0, 1, 1, 1.0);
    sdp.add_equality(tr, 1.0);
    let sol = solve(&sdp, &strict()).unwrap();
    let value = -sol.primal_objective;
    record(&sol, value);
    value
}

fn theta_five_cycle() -> f64 {
    let mut sdp = StandardSdp::new(vec![Block::Psd(5)]);
    for i in 0..5 {
        for j in i..5 {
            sdp.objective.push(0, i, j, -1.0);
        }
    }
    let mut tr = LinearForm::default();
    for i in 0..5 {
        tr.push(0, i, i, 1.0);
    }
    sdp.add_equality(tr, 1.0);
    for i in 0..5 {
        let mut e = LinearForm::default();
        e.push(0, i, (i + 1) % 5, 0.5);
        sdp.add_equality(e, 0.0);
    }
    let sol = solve(&sdp, &strict()).unwrap();
    let value = -sol.primal_objective;
    record(&sol, value);
    value
}

fn criterion_6(eig: f64, theta: f64) -> Verdict {
    let eig_err = (eig - 2.0).abs();
    let theta_err = (theta - 5f64.sqrt()).abs();
    let log = LOG.with(|l| (l.borrow().solves, l.borrow().optimal, l.borrow().worst));
    Verdict::new(
        eig_err <= 1e-8 && theta_err <= 1e-6 && log.2 <= 1e-7,
        format!(
            "max-eigenvalue error {eig_err:.1e}, theta error {theta_err:.1e} (tol 1e-8), \
             worst normalized KKT {:.2e} over {} optimal of {} solves",
            log.2, log.1, log.0
        ),
    )
}

fn criterion_7() -> Verdict {
    let t = Instant::now();
    let mut rows = Vec::new();
    let mut mechanism = Vec::new();
    for k in 1..=9 {
        let lam = k as f64 / 10.0;
        let spec = DgdSpec::new(10, 3, lam);
        assert!((spec.step_sizes().unwrap()[0] - 1.0 / 10f64.sqrt()).abs() < 1e-15);
        let p = build_dgd_spectral(&spec).unwrap();
        let sol = run(&p);
        let spectral = sol.is_optimal().then_some(sol.value);
        let fixed =
            optimal_value(&build_dgd_fixed_matrix(&spec, &default_network_matrix(3, lam)).unwrap());
        let recovered = spectral.and_then(|_| {
            let inst = extract_instance(&p, &sol, 1e-7).ok()?;
            let report = verify_instance(&inst, &p, 1e-6);
            let (_, rec) = report.networks.first()?;
            rec.success.then(|| rec.w.clone())
        });
        if let (Some(w), Some(s)) = (&recovered, spectral) {
            let w = project_network_matrix(w, lam);
            let v = optimal_value(&build_dgd_fixed_matrix(&spec, &w).unwrap());
            mechanism.push((lam, v.map(|v| (v - s).abs() / (1.0 + s))));
        }
        rows.push((lam, spectral, fixed, recovered.is_some()));
    }
    let all_optimal = rows.iter().all(|r| r.1.is_some() && r.2.is_some());
    let monotone = rows.windows(2).all(|w| match (w[0].1, w[1].1) {
        (Some(a), Some(b)) => b >= a - 1e-6 * (1.0 + a),
        _ => false,
    });
    let below = rows.iter().all(|r| match (r.1, r.2) {
        (Some(s), Some(f)) => f <= s + 1e-6 * (1.0 + s),
        _ => false,
    });
    let agree: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.3)
        .filter_map(|r| Some((r.0, (r.1? - r.2?).abs() / (1.0 + r.1?))))
        .collect();
    let agree_ok = agree.iter().all(|(_, d)| *d <= 1e-4);
    let secs = t.elapsed().as_secs_f64();
    let mut v = Verdict::new(
        all_optimal && monotone && below && agree_ok,
        format!(
            "spectral nondecreasing: {monotone}, default-W value <= spectral: {below}, \
             certified at lambda {:?} with default-W rel. gaps {:?}; \
             recovered-W rel. gaps {:?}; {secs:.0} s",
            agree.iter().map(|a| a.0).collect::<Vec<_>>(),
            agree
                .iter()
                .map(|a| format!("{:.1e}", a.1))
                .collect::<Vec<_>>(),
            mechanism
                .iter()
                .map(|(l, d)| format!("{l}: {}", d.map_or("-".into(), |d| format!("{d:.1e}"))))
                .collect::<Vec<_>>(),
        ),
    );
    v.deviation = all_optimal && monotone && below && !agree_ok;
    v
}

fn criterion_8() -> Verdict {
    let mut worst: f64 = 0.0;
    for (a, b) in homogeneity_scenarios(1.0)
        .iter()
        .zip(homogeneity_scenarios(2.0).iter())
    {
        match (optimal_value(a), optimal_value(b)) {
            (Some(v1), Some(v2)) => worst = worst.max((v2 - 4.0 * v1).abs() / (4.0 * v1.abs())),
            _ => worst = f64::INFINITY,
        }
    }
    Verdict::new(
        worst <= 1e-6,
        format!("5 scenarios, max rel. deviation from x4: {worst:.2e}"),
    )
}

fn main() -> ExitCode {
    let mut verdicts = Vec::new();
    verdicts.push((1, criterion_1()));
    let t = Instant::now();
    let sweep = h_sweep();
    let secs = t.elapsed().as_secs_f64();
    verdicts.push((2, criterion_2(&sweep, secs)));
    verdicts.push((3, criterion_3(&sweep)));
    verdicts.push((4, criterion_4()));
    verdicts.push((5, criterion_5()));
    verdicts.push((7, criterion_7()));
    verdicts.push((8, criterion_8()));
    // last, so the KKT clause covers every solve above
    let eig = max_eigenvalue_sdp();
    let theta = theta_five_cycle();
    verdicts.push((6, criterion_6(eig, theta)));
    verdicts.sort_by_key(|v| v.0);

    let mut hard_failures = 0;
    for (k, v) in &verdicts {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        let note = if !v.pass && v.deviation {
            " [known deviation]"
        } else {
            ""
        };
        println!("criterion {k}: {tag}{note}: {}", v.detail);
        if !v.pass && !v.deviation {
            hard_failures += 1;
        }
    }
    if hard_failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
