//! Properties of the interpolation constraint generators and the numeric
//! checker.

mod common;

use common::*;
use nalgebra::DMatrix;
use pep_forge::classes::{
    check_numeric, function_constraints, linear_operator_constraints, operator_constraints,
    ClassSpec, FunctionData, LinearMapData, NumericData, NumericPair, NumericPoint, OperatorData,
};
use pep_forge::{BasisKind, Constraint, PepBuilder, VectorExpr};
use proptest::prelude::*;

fn function(spec: ClassSpec, points: Vec<NumericPoint>) -> NumericData {
    NumericData::Function {
        name: "f".into(),
        spec,
        points,
    }
}

fn feasible(data: &NumericData) -> bool {
    check_numeric(data, 1e-9).unwrap().feasible
}

/// Points `(x, grad, f)` of the quadratic `x' H x / 2 + b' x` with
/// `H = Q diag(eig) Q'`.
fn quadratic_points(eig: &[f64], basis: &[f64], b: &[f64], xs: &[f64]) -> Vec<NumericPoint> {
    let d = eig.len();
    let q = matrix(d, d, basis).qr().q();
    let h = &q * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(eig)) * q.transpose();
    let b = nalgebra::DVector::from_iterator(d, b.iter().copied().cycle().take(d));
    xs.chunks(d)
        .enumerate()
        .map(|(i, c)| {
            let x = nalgebra::DVector::from_column_slice(c);
            let g = &h * &x + &b;
            let f = 0.5 * x.dot(&(&h * &x)) + b.dot(&x);
            NumericPoint::new(
                i.to_string(),
                x.iter().copied().collect(),
                g.iter().copied().collect(),
                f,
            )
        })
        .collect()
}

fn perturb(points: &mut [NumericPoint], noise: &[f64]) {
    let mut it = noise.iter().copied().cycle();
    for p in points {
        for v in p.x.iter_mut().chain(p.g.iter_mut()) {
            *v += it.next().unwrap();
        }
        p.f += it.next().unwrap();
    }
}

/// Registers one basis label per numeric vector, in order, and returns the
/// Gram matrix of the numeric vectors.
fn embed(b: &mut PepBuilder, vectors: &[Vec<f64>]) -> (Vec<VectorExpr>, DMatrix<f64>) {
    let exprs = (0..vectors.len())
        .map(|i| b.vector(BasisKind::Auxiliary, format!("v{i}")))
        .collect();
    let n = vectors.len();
    let gram = DMatrix::from_fn(n, n, |i, j| {
        vectors[i].iter().zip(&vectors[j]).map(|(a, b)| a * b).sum()
    });
    (exprs, gram)
}

/// Symbolic residuals, keyed by label, agree with the numeric checker.
fn coherent(constraints: &[Constraint], gram: &DMatrix<f64>, fvals: &[f64], data: &NumericData) {
    let report = check_numeric(data, 1e-9).unwrap();
    assert_eq!(constraints.len(), report.residuals.len());
    for c in constraints {
        let sym = c.residual(|i, j| gram[(i, j)], fvals);
        let num = report
            .residual(&c.label)
            .unwrap_or_else(|| panic!("checker has no `{}`", c.label));
        assert!(
            (sym - num).abs() <= 1e-10 * (1.0 + num.abs()),
            "{}: symbolic {sym} vs numeric {num}",
            c.label
        );
    }
}

fn function_classes() -> Vec<ClassSpec> {
    vec![
        ClassSpec::smooth_strongly_convex(0.0, 1.0),
        ClassSpec::smooth_strongly_convex(0.3, 2.0),
        ClassSpec::smooth_strongly_convex(-0.5, 1.5),
        ClassSpec::smooth_strongly_convex(0.2, f64::INFINITY),
        ClassSpec::RelaxedSmoothConvex { l: 1.0 },
        ClassSpec::Convex {},
        ClassSpec::StronglyConvex { mu: 0.5 },
        ClassSpec::SmoothBoundedGrad { l: 1.0, m: 2.0 },
        ClassSpec::ConvexBoundedGrad { m: 1.5 },
        ClassSpec::CyclicallyMonotone {
            mu: 0.0,
            l: 1.0,
            max_cycle: None,
            allow_large: false,
        },
    ]
}

fn operator_classes() -> Vec<ClassSpec> {
    vec![
        ClassSpec::Monotone { mu: 0.0 },
        ClassSpec::Monotone { mu: 0.4 },
        ClassSpec::Cocoercive { beta: 0.7 },
        ClassSpec::LipschitzOp { l: 1.3 },
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn inner_product_is_bilinear(
        cu in entries(4), cw in entries(4), cv in entries(4), alpha in -3.0..3.0f64, beta in -3.0..3.0f64,
    ) {
        let mut b = PepBuilder::new();
        let basis: Vec<VectorExpr> = (0..4).map(|i| b.vector(BasisKind::Auxiliary, format!("e{i}"))).collect();
        let comb = |c: &[f64]| {
            let mut out = VectorExpr::zero();
            for (k, e) in c.iter().zip(&basis) {
                out += &(*k * e);
            }
            out
        };
        let (u, w, v) = (comb(&cu), comb(&cw), comb(&cv));
        let lhs = b.inner(&(alpha * &u + beta * &w), &v).unwrap();
        let rhs = b.inner(&u, &v).unwrap() * alpha + b.inner(&w, &v).unwrap() * beta;
        prop_assert!(lhs.approx_eq(&rhs, 1e-12));
        // symmetry
        prop_assert!(b.inner(&u, &v).unwrap().approx_eq(&b.inner(&v, &u).unwrap(), 1e-12));
    }

    #[test]
    fn exact_smooth_convex_data_is_relaxed_feasible(
        f in convex_1d(), xs in entries(4), noise in proptest::collection::vec(-0.05..0.05f64, 12),
    ) {
        let mut points = f.points(&xs.iter().map(|x| 3.0 * x).collect::<Vec<_>>(), 1.0);
        perturb(&mut points, &noise);
        let tight = feasible(&function(ClassSpec::smooth_convex(1.0), points.clone()));
        let relaxed = feasible(&function(ClassSpec::RelaxedSmoothConvex { l: 1.0 }, points));
        prop_assert!(!tight || relaxed);
    }

    #[test]
    fn enlarging_the_class_keeps_feasibility(
        eig in proptest::collection::vec(0.2..1.0f64, 2),
        basis in entries(4), b in entries(2), xs in entries(8),
        noise in proptest::collection::vec(-0.02..0.02f64, 20),
        dmu in 0.0..0.5f64, dl in 0.0..1.0f64,
    ) {
        let mut points = quadratic_points(&eig, &basis, &b, &xs);
        perturb(&mut points, &noise);
        let (mu, l) = (0.2, 1.0);
        let base = feasible(&function(ClassSpec::smooth_strongly_convex(mu, l), points.clone()));
        let wider = feasible(&function(ClassSpec::smooth_strongly_convex(mu - dmu, l + dl), points));
        prop_assert!(!base || wider);
    }

    #[test]
    fn function_generators_match_checker(
        eig in proptest::collection::vec(0.0..2.0f64, 2),
        basis in entries(4), b in entries(2), xs in entries(6),
        noise in proptest::collection::vec(-0.3..0.3f64, 15),
    ) {
        let mut points = quadratic_points(&eig, &basis, &b, &xs);
        perturb(&mut points, &noise);
        let vectors: Vec<Vec<f64>> = points.iter().flat_map(|p| [p.x.clone(), p.g.clone()]).collect();
        for spec in function_classes() {
            let mut bld = PepBuilder::new();
            let (exprs, gram) = embed(&mut bld, &vectors);
            let mut data = FunctionData::new("f");
            let mut fvals = Vec::new();
            for (i, p) in points.iter().enumerate() {
                let s = bld.scalar(format!("f{i}"));
                data.push(p.tag.clone(), exprs[2 * i].clone(), exprs[2 * i + 1].clone(), s);
                fvals.push(p.f);
            }
            let cons = function_constraints(&data, &spec).unwrap();
            coherent(&cons, &gram, &fvals, &function(spec, points.clone()));
        }
    }

    #[test]
    fn operator_generators_match_checker(xs in entries(6), qs in entries(6)) {
        let pairs: Vec<NumericPair> = xs
            .chunks(2)
            .zip(qs.chunks(2))
            .enumerate()
            .map(|(i, (x, q))| NumericPair::new(i.to_string(), x.to_vec(), q.to_vec()))
            .collect();
        let vectors: Vec<Vec<f64>> = pairs.iter().flat_map(|p| [p.x.clone(), p.q.clone()]).collect();
        for spec in operator_classes() {
            let mut bld = PepBuilder::new();
            let (exprs, gram) = embed(&mut bld, &vectors);
            let mut data = OperatorData::new("Q");
            for (i, p) in pairs.iter().enumerate() {
                data.push(p.tag.clone(), exprs[2 * i].clone(), exprs[2 * i + 1].clone());
            }
            let cons = operator_constraints(&data, &spec).unwrap();
            let num = NumericData::Operator { name: "Q".into(), spec, points: pairs.clone() };
            coherent(&cons, &gram, &[], &num);
        }
    }

    #[test]
    fn linear_map_generator_matches_checker(m in entries(9), x in entries(6), u in entries(3)) {
        let m = matrix(3, 3, &m);
        let x = matrix(3, 2, &x);
        let u = matrix(3, 1, &u);
        let (y, v) = (&m * &x, m.transpose() * &u);
        let col = |a: &DMatrix<f64>, j: usize| a.column(j).iter().copied().collect::<Vec<f64>>();
        let vectors = vec![col(&x, 0), col(&y, 0), col(&x, 1), col(&y, 1), col(&u, 0), col(&v, 0)];
        let mut bld = PepBuilder::new();
        let (e, gram) = embed(&mut bld, &vectors);
        let mut data = LinearMapData::new("M", 0.8);
        data.forward = vec![(e[0].clone(), e[1].clone()), (e[2].clone(), e[3].clone())];
        data.adjoint = vec![(e[4].clone(), e[5].clone())];
        let cons = linear_operator_constraints(&data).unwrap();
        let num = NumericData::LinearMap {
            name: "M".into(),
            l: 0.8,
            forward: vec![(vectors[0].clone(), vectors[1].clone()), (vectors[2].clone(), vectors[3].clone())],
            adjoint: vec![(vectors[4].clone(), vectors[5].clone())],
        };
        coherent(&cons, &gram, &[], &num);
    }

    #[test]
    fn cyclic_monotone_accepts_convex_subgradients(f in convex_1d(), xs in entries(5)) {
        // any convex function's gradients are cyclically monotone; the
        // smoothness part of the class is satisfied with L = 1
        let points = f.points(&xs.iter().map(|x| 2.0 * x).collect::<Vec<_>>(), 1.0);
        let spec = ClassSpec::CyclicallyMonotone { mu: 0.0, l: 1.0, max_cycle: None, allow_large: false };
        prop_assert!(feasible(&function(spec, points)));
    }
}
