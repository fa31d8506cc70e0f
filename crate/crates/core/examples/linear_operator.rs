//! A method that only touches a matrix through products: one gradient step
//! on `x -> |Mx|^2 / 2` with unit step, for any `M` with largest singular
//! value at most 1 and any `|x0| <= 1`.
//!
//! The scheme is written in the JSON scheme language. Products `M x` and
//! `M^T y` become forward and adjoint pairs of a linear-map handle. The
//! worst case is `max_s s^2 (1 - s^2)^2 = 4/27`, reached at `s^2 = 1/3`.

use pep_forge::algos::{build_custom_method, SchemeConfig};
use pep_forge::recover::{extract_instance, verify_instance};
use pep_forge::sdp::solve_pep_optimal;

const SCHEME: &str = r#"{
  "oracles": [{"kind": "linear-map", "name": "M", "L": 1}],
  "steps": [
    {"op": "point", "name": "x0"},
    {"op": "apply", "oracle": "M", "at": "x0", "name": "y0"},
    {"op": "adjoint", "oracle": "M", "at": "y0", "name": "z0"},
    {"op": "let", "name": "x1", "expr": {"x0": 1, "z0": -1}},
    {"op": "apply", "oracle": "M", "at": "x1", "name": "y1"}
  ],
  "initial": [{"dist_sq": "x0", "radius": 1}],
  "objective": [{"norm_sq": "y1"}]
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scheme: SchemeConfig = serde_json::from_str(SCHEME)?;
    let problem = build_custom_method(&scheme)?;
    let sol = solve_pep_optimal(&problem, &Default::default())?;
    let inst = extract_instance(&problem, &sol, 1e-7)?;
    let report = verify_instance(&inst, &problem, 1e-6);
    println!(
        "worst |M x1|^2 = {:.10}   (4/27 = {:.10})",
        sol.value,
        4.0 / 27.0
    );
    println!(
        "instance dimension {}, {}",
        inst.dimension,
        report.certification.as_str()
    );
    for (tag, v) in &inst.vectors {
        let v: Vec<String> = v.iter().map(|c| format!("{c:+.5}")).collect();
        println!("  {tag:<4} [{}]", v.join(", "));
    }
    Ok(())
}
