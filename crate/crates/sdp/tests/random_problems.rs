//! Randomized feasible, bounded problems over a PSD and a nonnegative block.

use pep_sdp::{solve, Block, LinearForm, SolveOptions, StandardSdp, Status};
use proptest::prelude::*;

/// minimize <C, X> + <c, x> over X psd (n x n), x >= 0 (k), with trace and
/// sum normalization plus `m` random rows satisfied by a strictly interior
/// point. `C` is diagonally dominant, so the objective is bounded below.
fn problem(n: usize, k: usize, m: usize, v: &[f64], scale: f64) -> StandardSdp {
    let mut it = v.iter().copied().cycle();
    let mut next = move || it.next().unwrap();
    let mut sdp = StandardSdp::new(vec![Block::Psd(n), Block::NonNeg(k)]);
    for i in 0..n {
        for j in i..n {
            let c = if i == j { n as f64 + next() } else { next() };
            sdp.objective.push(0, i, j, scale * c);
        }
    }
    for i in 0..k {
        sdp.objective.push(1, i, 0, scale * (1.5 + next()));
    }
    // interior point: X0 = I + 0.2 * sym(random), x0 = 1
    let x0 = |i: usize, j: usize, r: f64| if i == j { 1.0 } else { 0.2 * r };
    let mut tr = LinearForm::default();
    for i in 0..n {
        tr.push(0, i, i, 1.0);
    }
    sdp.add_equality(tr, n as f64);
    let offdiag: Vec<f64> = (0..n * n).map(|_| next()).collect();
    for _ in 0..m {
        let mut row = LinearForm::default();
        let mut rhs = 0.0;
        for i in 0..n {
            for j in i..n {
                let a = next();
                row.push(0, i, j, a);
                // off-diagonal entries count twice
                let mult = if i == j { 1.0 } else { 2.0 };
                rhs += mult * a * x0(i, j, offdiag[i * n + j]);
            }
        }
        for i in 0..k {
            let a = next();
            row.push(1, i, 0, a);
            rhs += a;
        }
        sdp.add_equality(row, rhs);
    }
    sdp
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 40, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn optimal_with_small_gap_and_scale_covariant(
        n in 2usize..5, k in 1usize..4, m in 0usize..4,
        v in proptest::collection::vec(-1.0..1.0f64, 64),
        c in 0.1..10.0f64,
    ) {
        let opts = SolveOptions::default();
        let a = solve(&problem(n, k, m, &v, 1.0), &opts).unwrap();
        prop_assert_eq!(a.status, Status::Optimal);
        let obj = a.primal_objective;
        // weak duality for minimization, within the stopping tolerance
        prop_assert!(a.dual_objective <= obj + opts.gap_tol * (1.0 + obj.abs()));
        prop_assert!(a.max_kkt_residual() <= opts.gap_tol.max(opts.feas_tol));

        let b = solve(&problem(n, k, m, &v, c), &opts).unwrap();
        prop_assert_eq!(b.status, Status::Optimal);
        prop_assert!((b.primal_objective - c * obj).abs() <= 1e-6 * (1.0 + (c * obj).abs()));
    }
}
