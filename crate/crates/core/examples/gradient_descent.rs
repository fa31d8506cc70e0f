//! Worst case of `f(x_N) - f(x*)` for N steps of gradient descent with step
//! `1/L` on L-smooth convex functions, starting at distance 1 from the
//! minimizer. The known exact answer is `L R^2 / (4N + 2)`.
//!
//! For each N the example solves the tight PEP, rebuilds a concrete worst
//! case from the optimal Gram matrix and re-checks it, then lists the
//! largest multipliers of the dual certificate.

use pep_forge::algos::{build_gradient_method, MethodSpec, Representation};
use pep_forge::recover::{extract_instance, verify_instance};
use pep_forge::sdp::{dual_report, solve_pep_optimal};

fn main() -> Result<(), pep_forge::PepError> {
    println!(
        "{:>3} {:>14} {:>14} {:>10} {:>4}  certification",
        "N", "pep", "1/(4N+2)", "rel.err", "dim"
    );
    for n in [1, 2, 3, 5, 10] {
        let spec = MethodSpec::gradient(n, 1.0);
        let problem = build_gradient_method(&spec, Representation::Tight)?;
        let sol = solve_pep_optimal(&problem, &Default::default())?;
        let exact = 1.0 / (4.0 * n as f64 + 2.0);
        let inst = extract_instance(&problem, &sol, 1e-7)?;
        let report = verify_instance(&inst, &problem, 1e-6);
        println!(
            "{n:>3} {:>14.10} {:>14.10} {:>10.2e} {:>4}  {}",
            sol.value,
            exact,
            (sol.value - exact).abs() / exact,
            inst.dimension,
            report.certification.as_str()
        );
    }

    // The dual certificate for N = 2: a weighted sum of interpolation
    // inequalities that proves the bound.
    let problem = build_gradient_method(&MethodSpec::gradient(2, 1.0), Representation::Tight)?;
    let sol = solve_pep_optimal(&problem, &Default::default())?;
    let mut duals = dual_report(&sol, &problem)?;
    duals.sort_by(|a, b| b.1.magnitude().total_cmp(&a.1.magnitude()));
    println!("\nlargest multipliers for N = 2:");
    for (label, m) in duals.iter().take(6) {
        println!("  {label:<28} {:.6}", m.magnitude());
    }
    Ok(())
}
