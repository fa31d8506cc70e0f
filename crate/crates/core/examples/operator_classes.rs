//! One forward step `x1 = x0 - gamma Q(x0)` towards a zero of an operator
//! `Q`, with `|x0 - x*| <= 1`. The worst `|x1 - x*|^2` depends on what is
//! assumed about `Q`:
//!
//! - 1-cocoercive: the step is nonexpansive up to `gamma = 2`, and the
//!   worst case is `max(1, (gamma - 1)^2)`;
//! - 1-Lipschitz only: nothing prevents `Q(x0) = -(x0 - x*)`, giving
//!   `(1 + gamma)^2`.

use pep_forge::algos::{build_custom_method, SchemeConfig};
use pep_forge::sdp::solve_pep_optimal;
use serde_json::json;

fn scheme(class: serde_json::Value, gamma: f64) -> Result<SchemeConfig, serde_json::Error> {
    serde_json::from_value(json!({
        "oracles": [{"kind": "operator", "name": "Q", "class": class}],
        "steps": [
            {"op": "register", "oracle": "Q", "at": "x*", "grad": {"x*": 0}},
            {"op": "point", "name": "x0"},
            {"op": "apply", "oracle": "Q", "at": "x0", "name": "q0"},
            {"op": "let", "name": "x1", "expr": {"x0": 1, "q0": -gamma}}
        ],
        "initial": [{"dist_sq": "x0", "radius": 1}],
        "objective": [{"norm_sq": "x1"}]
    }))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let opts = Default::default();
    println!(
        "{:>6} {:>12} {:>12} {:>12} {:>12}",
        "gamma", "cocoercive", "expected", "lipschitz", "expected"
    );
    for gamma in [0.5, 1.0, 1.5, 2.0, 2.5] {
        let co = build_custom_method(&scheme(
            json!({"family": "cocoercive", "beta": 1.0}),
            gamma,
        )?)?;
        let li = build_custom_method(&scheme(json!({"family": "lipschitz-op", "L": 1.0}), gamma)?)?;
        let co = solve_pep_optimal(&co, &opts)?.value;
        let li = solve_pep_optimal(&li, &opts)?.value;
        println!(
            "{gamma:>6.2} {co:>12.8} {:>12.8} {li:>12.8} {:>12.8}",
            f64::max(1.0, (gamma - 1.0) * (gamma - 1.0)),
            (1.0 + gamma) * (1.0 + gamma),
        );
    }
    Ok(())
}
