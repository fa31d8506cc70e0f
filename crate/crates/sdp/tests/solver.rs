use pep_sdp::{solve, Block, LinearForm, SolveOptions, StandardSdp, Status};

/// maximize <diag(1,2), G> s.t. tr(G) = 1, G psd.
fn max_eigen_sdp() -> StandardSdp {
    let mut sdp = StandardSdp::new(vec![Block::Psd(2)]);
    sdp.objective.push(0, 0, 0, -1.0);
    sdp.objective.push(0, 1, 1, -2.0);
    let mut tr = LinearForm::default();
    tr.push(0, 0, 0, 1.0);
    tr.push(0, 1, 1, 1.0);
    sdp.add_equality(tr, 1.0);
    sdp
}

#[test]
fn max_eigenvalue() {
    let sol = solve(&max_eigen_sdp(), &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.primal_objective + 2.0).abs() < 1e-8, "{sol:?}");
}

/// Lovász theta of the n-cycle: maximize <J, X> s.t. tr X = 1,
/// X_ij = 0 on edges, X psd.
fn theta_cycle(n: usize) -> StandardSdp {
    let mut sdp = StandardSdp::new(vec![Block::Psd(n)]);
    for i in 0..n {
        for j in i..n {
            sdp.objective.push(0, i, j, -1.0);
        }
    }
    let mut tr = LinearForm::default();
    for i in 0..n {
        tr.push(0, i, i, 1.0);
    }
    sdp.add_equality(tr, 1.0);
    for i in 0..n {
        let mut e = LinearForm::default();
        e.push(0, i, (i + 1) % n, 0.5);
        sdp.add_equality(e, 0.0);
    }
    sdp
}

#[test]
fn lovasz_theta_five_cycle() {
    let sol = solve(&theta_cycle(5), &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    let theta = -sol.primal_objective;
    assert!((theta - 5f64.sqrt()).abs() < 1e-6, "theta = {theta}");
    assert!(sol.max_kkt_residual() <= 1e-7 * (1.0 + theta.abs()));
}

/// LP with a free variable: minimize t s.t. t - x1 = 0, t - x2 + 1 = 0,
/// x1 + x2 = 3, x >= 0, t free. Optimum t = 1 at x = (1, 2).
#[test]
fn mixed_nonneg_and_free_blocks() {
    let mut sdp = StandardSdp::new(vec![Block::NonNeg(2), Block::Free(1)]);
    sdp.objective.push(1, 0, 0, 1.0);
    let mut a = LinearForm::default();
    a.push(1, 0, 0, 1.0);
    a.push(0, 0, 0, -1.0);
    sdp.add_equality(a, 0.0);
    let mut a = LinearForm::default();
    a.push(1, 0, 0, 1.0);
    a.push(0, 1, 0, -1.0);
    sdp.add_equality(a, -1.0);
    let mut a = LinearForm::default();
    a.push(0, 0, 0, 1.0);
    a.push(0, 1, 0, 1.0);
    sdp.add_equality(a, 3.0);
    let sol = solve(&sdp, &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, Status::Optimal, "{sol:?}");
    assert!((sol.primal_objective - 1.0).abs() < 1e-7);
}

#[test]
fn detects_primal_infeasibility() {
    // tr(X) = -1 with X psd
    let mut sdp = StandardSdp::new(vec![Block::Psd(2)]);
    let mut tr = LinearForm::default();
    tr.push(0, 0, 0, 1.0);
    tr.push(0, 1, 1, 1.0);
    sdp.add_equality(tr, -1.0);
    let sol = solve(&sdp, &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, Status::PrimalInfeasible, "{sol:?}");
}

#[test]
fn detects_unboundedness() {
    // minimize -X_00 s.t. X_11 = 1
    let mut sdp = StandardSdp::new(vec![Block::Psd(2)]);
    sdp.objective.push(0, 0, 0, -1.0);
    let mut e = LinearForm::default();
    e.push(0, 1, 1, 1.0);
    sdp.add_equality(e, 1.0);
    let sol = solve(&sdp, &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, Status::DualInfeasible, "{sol:?}");
}

#[test]
fn empty_row_with_nonzero_rhs_is_infeasible() {
    let mut sdp = max_eigen_sdp();
    sdp.add_equality(LinearForm::default(), 1.0);
    let sol = solve(&sdp, &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, Status::PrimalInfeasible);
}

#[test]
fn deterministic_and_scale_covariant() {
    let sdp = theta_cycle(7);
    let a = solve(&sdp, &SolveOptions::default()).unwrap();
    let b = solve(&sdp, &SolveOptions::default()).unwrap();
    assert_eq!(a.primal_objective.to_bits(), b.primal_objective.to_bits());
    assert_eq!(a.iterations, b.iterations);
    let mut scaled = sdp.clone();
    for e in scaled.objective.entries.iter_mut() {
        e.value *= 3.5;
    }
    let c = solve(&scaled, &SolveOptions::default()).unwrap();
    assert_eq!(c.status, Status::Optimal);
    assert!((c.primal_objective - 3.5 * a.primal_objective).abs() < 1e-7);
}

#[test]
fn weak_duality_holds_at_optimum() {
    let sol = solve(&theta_cycle(6), &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    // minimization: dual objective <= primal objective up to tolerance
    let v = sol.primal_objective;
    assert!(sol.dual_objective <= v + 1e-8 * (1.0 + v.abs()));
    // theta(C6) = 3
    assert!((v + 3.0).abs() < 1e-6);
}
