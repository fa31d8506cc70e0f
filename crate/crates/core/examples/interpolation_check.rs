//! Checking whether concrete data could come from a member of a class.
//!
//! The same three points are interpolable by a 1-smooth convex function
//! only if the exact conditions hold; the weaker textbook inequalities can
//! accept data no such function produces.

use pep_forge::classes::{check_numeric, ClassSpec, NumericData, NumericPair, NumericPoint};

fn show(title: &str, data: &NumericData) -> Result<(), pep_forge::PepError> {
    let r = check_numeric(data, 1e-9)?;
    println!(
        "{title:<46} feasible = {:<5} max residual = {:+.4}",
        r.feasible, r.max_residual
    );
    Ok(())
}

fn main() -> Result<(), pep_forge::PepError> {
    // f(0) = 0, f'(0) = 1 and f(1) = 1.05, f'(1) = 1.5
    let points = vec![
        NumericPoint::new("0", vec![0.0], vec![1.0], 0.0),
        NumericPoint::new("1", vec![1.0], vec![1.5], 1.05),
    ];
    for (title, spec) in [
        (
            "smooth convex, exact conditions",
            ClassSpec::smooth_convex(1.0),
        ),
        (
            "smooth convex, relaxed conditions",
            ClassSpec::RelaxedSmoothConvex { l: 1.0 },
        ),
    ] {
        show(
            title,
            &NumericData::Function {
                name: "f".into(),
                spec,
                points: points.clone(),
            },
        )?;
    }

    // a quarter rotation is monotone and 1-Lipschitz but not cocoercive
    let rotation = vec![
        NumericPair::new("a", vec![1.0, 0.0], vec![0.0, 1.0]),
        NumericPair::new("b", vec![0.0, 1.0], vec![-1.0, 0.0]),
        NumericPair::new("c", vec![0.0, 0.0], vec![0.0, 0.0]),
    ];
    for (title, spec) in [
        ("rotation: monotone", ClassSpec::Monotone { mu: 0.0 }),
        ("rotation: 1-Lipschitz", ClassSpec::LipschitzOp { l: 1.0 }),
        (
            "rotation: 1-cocoercive",
            ClassSpec::Cocoercive { beta: 1.0 },
        ),
    ] {
        show(
            title,
            &NumericData::Operator {
                name: "Q".into(),
                spec,
                points: rotation.clone(),
            },
        )?;
    }

    // a linear map with singular values 2 and 1 seen through two pairs
    let data = NumericData::LinearMap {
        name: "M".into(),
        l: 1.5,
        forward: vec![
            (vec![1.0, 0.0], vec![2.0, 0.0]),
            (vec![0.0, 1.0], vec![0.0, 1.0]),
        ],
        adjoint: vec![],
    };
    show("diag(2, 1) with sigma_max <= 1.5", &data)?;
    Ok(())
}
