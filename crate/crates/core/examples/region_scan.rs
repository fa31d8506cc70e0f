//! Which values `(g2, f2)` can a smooth convex function take at `x2 = 1`
//! once `f(0) = 0` and `f'(0) = 1` are fixed?
//!
//! The relaxed inequalities (Lipschitz gradient plus convexity) accept a
//! strictly larger set than exact interpolation. The scan prints a coarse
//! character map: `#` both accept, `+` relaxed only, `.` neither.

use pep_forge::commands::run_region;
use pep_forge::scenario::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = r#"{"method": {"kind": "region",
                    "grid": {"g_min": 0.0, "g_max": 2.0, "f_min": 0.0, "f_max": 2.0, "step": 0.05}}}"#;
    let scenario = Scenario::from_json(text, "inline")?;
    let cells = run_region(&scenario)?;

    let mut f2s: Vec<f64> = cells.iter().map(|c| c.f2).collect();
    f2s.sort_by(f64::total_cmp);
    f2s.dedup();
    println!("rows: f2 from top to bottom, columns: g2 from left to right");
    for f2 in f2s.iter().rev() {
        let row: String = cells
            .iter()
            .filter(|c| c.f2 == *f2)
            .map(|c| match (c.tight, c.relaxed) {
                (true, _) => '#',
                (false, true) => '+',
                _ => '.',
            })
            .collect();
        println!("{f2:>5.2} {row}");
    }
    let relaxed_only = cells.iter().filter(|c| c.relaxed && !c.tight).count();
    println!(
        "\n{} cells, {} accepted only by the relaxed conditions",
        cells.len(),
        relaxed_only
    );
    Ok(())
}
