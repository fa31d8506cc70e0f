//! Tuning the step size of gradient descent: for N = 10 and constant step
//! `h/L`, compare the classical guarantee with the worst case under the
//! usual (relaxed) smoothness inequalities and under exact interpolation
//! conditions.
//!
//! The tight curve keeps improving well past `h = 1` while the relaxed one
//! blows up as `h` approaches 2.

use pep_forge::algos::{build_gradient_method, classical_bound, MethodSpec, Representation};
use pep_forge::sdp::solve_pep;

fn main() -> Result<(), pep_forge::PepError> {
    let n = 10;
    let grid: Vec<f64> = (1..=19)
        .map(|k| k as f64 * 0.1)
        .chain([1.834, 1.95])
        .collect();
    let mut best = (f64::NAN, f64::INFINITY);
    println!(
        "{:>6} {:>12} {:>12} {:>12}",
        "h", "classical", "relaxed", "tight"
    );
    for h in grid {
        let spec = MethodSpec::gradient(n, h);
        let classical = classical_bound(n, h, 1.0, 1.0).ok();
        let relaxed = solve_pep(
            &build_gradient_method(&spec, Representation::Relaxed)?,
            &Default::default(),
        )?;
        let tight = solve_pep(
            &build_gradient_method(&spec, Representation::Tight)?,
            &Default::default(),
        )?;
        if tight.is_optimal() && tight.value < best.1 {
            best = (h, tight.value);
        }
        let show = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.6}"));
        println!(
            "{h:>6.3} {:>12} {:>12} {:>12}",
            show(classical),
            show(relaxed.is_optimal().then_some(relaxed.value)),
            show(tight.is_optimal().then_some(tight.value)),
        );
    }
    println!(
        "\nbest tight value on this grid: {:.6} at h = {}",
        best.1, best.0
    );
    Ok(())
}
