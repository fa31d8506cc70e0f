//! Interpolation constraints for function, operator, linear-map and
//! network-matrix classes.
//!
//! Each generator takes a data handle (symbolic points attached to one
//! problem) and returns the constraint list that characterizes the data
//! sets consistent with some member of the class. [`check_numeric`] is the
//! numeric twin: it evaluates the same inequalities on plain numbers, with
//! the same labels, and is implemented separately from the generators so
//! the two can be checked against each other.

use serde::{Deserialize, Serialize};

use crate::gram::{BasisLabel, Constraint, QuadExpr, ScalarVar, VectorExpr};
use crate::linalg;
use crate::PepError;

/// Largest point set accepted for cycle enumeration without an override.
pub const CYCLE_CAP: usize = 8;

/// A function or operator class together with its parameters.
///
/// Infinite parameters (`L = inf`, `mu = -inf`) are exact sentinels: the
/// generators drop the vanishing terms instead of using large numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ClassSpec {
    SmoothStronglyConvex {
        #[serde(default, with = "ext_real")]
        mu: f64,
        #[serde(rename = "L", alias = "l", with = "ext_real")]
        l: f64,
        #[serde(default, alias = "strict-equal-curvature")]
        strict_equal_curvature: bool,
    },
    RelaxedSmoothConvex {
        #[serde(rename = "L", alias = "l")]
        l: f64,
    },
    Convex {},
    StronglyConvex {
        mu: f64,
    },
    CyclicallyMonotone {
        #[serde(default)]
        mu: f64,
        #[serde(rename = "L", alias = "l")]
        l: f64,
        #[serde(default, rename = "K", alias = "max_cycle")]
        max_cycle: Option<usize>,
        #[serde(default)]
        allow_large: bool,
    },
    SmoothBoundedGrad {
        #[serde(rename = "L", alias = "l")]
        l: f64,
        #[serde(rename = "M", alias = "m")]
        m: f64,
    },
    IndicatorBounded {
        #[serde(rename = "M", alias = "m")]
        m: f64,
    },
    /// Convex functions whose subgradients at the queried points are
    /// bounded by `M` in norm.
    ConvexBoundedGrad {
        #[serde(rename = "M", alias = "m")]
        m: f64,
    },
    Monotone {
        #[serde(default)]
        mu: f64,
    },
    Cocoercive {
        beta: f64,
    },
    LipschitzOp {
        #[serde(rename = "L", alias = "l")]
        l: f64,
    },
}

impl ClassSpec {
    pub fn smooth_convex(l: f64) -> Self {
        Self::smooth_strongly_convex(0.0, l)
    }

    pub fn smooth_strongly_convex(mu: f64, l: f64) -> Self {
        ClassSpec::SmoothStronglyConvex {
            mu,
            l,
            strict_equal_curvature: false,
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            ClassSpec::SmoothStronglyConvex { .. } => "smooth-strongly-convex",
            ClassSpec::RelaxedSmoothConvex { .. } => "relaxed-smooth-convex",
            ClassSpec::Convex {} => "convex",
            ClassSpec::StronglyConvex { .. } => "strongly-convex",
            ClassSpec::CyclicallyMonotone { .. } => "cyclically-monotone",
            ClassSpec::SmoothBoundedGrad { .. } => "smooth-bounded-grad",
            ClassSpec::IndicatorBounded { .. } => "indicator-bounded",
            ClassSpec::ConvexBoundedGrad { .. } => "convex-bounded-grad",
            ClassSpec::Monotone { .. } => "monotone",
            ClassSpec::Cocoercive { .. } => "cocoercive",
            ClassSpec::LipschitzOp { .. } => "lipschitz-op",
        }
    }

    /// Families that only constrain `(x, q)` pairs and can describe operators.
    pub fn is_operator_family(&self) -> bool {
        matches!(
            self,
            ClassSpec::CyclicallyMonotone { .. }
                | ClassSpec::Monotone { .. }
                | ClassSpec::Cocoercive { .. }
                | ClassSpec::LipschitzOp { .. }
        )
    }

    /// False only for the relaxed smooth-convex description, which is
    /// necessary but not sufficient.
    pub fn is_exact(&self) -> bool {
        !matches!(self, ClassSpec::RelaxedSmoothConvex { .. })
    }

    pub fn validate(&self) -> Result<(), PepError> {
        let bad = |msg: String| Err(PepError::InvalidParameter(msg));
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(PepError::InvalidParameter(format!(
                    "{name} must be finite and positive, got {v}"
                )))
            }
        };
        match *self {
            ClassSpec::SmoothStronglyConvex {
                mu,
                l,
                strict_equal_curvature,
            } => {
                if mu.is_nan() || l.is_nan() || l <= 0.0 {
                    return bad(format!("need L > 0 and a real mu, got mu={mu}, L={l}"));
                }
                if mu == f64::INFINITY {
                    return bad("mu = +inf".into());
                }
                if mu == f64::NEG_INFINITY && l == f64::INFINITY {
                    return bad("mu = -inf and L = inf together".into());
                }
                if mu > l {
                    return bad(format!("mu={mu} exceeds L={l}"));
                }
                if mu == l && !strict_equal_curvature {
                    return bad("mu = L requires strict_equal_curvature".into());
                }
                Ok(())
            }
            ClassSpec::RelaxedSmoothConvex { l } => positive("L", l),
            ClassSpec::Convex {} => Ok(()),
            ClassSpec::StronglyConvex { mu } => {
                if mu.is_finite() && mu >= 0.0 {
                    Ok(())
                } else {
                    bad(format!("mu must be finite and nonnegative, got {mu}"))
                }
            }
            ClassSpec::CyclicallyMonotone {
                mu, l, max_cycle, ..
            } => {
                positive("L", l)?;
                if !mu.is_finite() || mu >= l {
                    return bad(format!("need finite mu < L, got mu={mu}, L={l}"));
                }
                match max_cycle {
                    Some(k) if k < 2 => bad(format!("cycle length K={k} below 2")),
                    _ => Ok(()),
                }
            }
            ClassSpec::SmoothBoundedGrad { l, m } => {
                positive("L", l)?;
                positive("M", m)
            }
            ClassSpec::IndicatorBounded { m } | ClassSpec::ConvexBoundedGrad { m } => {
                positive("M", m)
            }
            ClassSpec::Monotone { mu } => {
                if mu.is_finite() && mu >= 0.0 {
                    Ok(())
                } else {
                    bad(format!("mu must be finite and nonnegative, got {mu}"))
                }
            }
            ClassSpec::Cocoercive { beta } => positive("beta", beta),
            ClassSpec::LipschitzOp { l } => positive("L", l),
        }
    }
}

/// Serde helper for reals that may be given as `"inf"` or `"-inf"`.
mod ext_real {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.trim().to_ascii_lowercase().as_str() {
                "inf" | "+inf" | "infinity" | "+infinity" => Ok(f64::INFINITY),
                "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
                other => Err(de::Error::custom(format!(
                    "expected a number or \"inf\"/\"-inf\", got \"{other}\""
                ))),
            },
        }
    }
}

/// One `(x, g, f)` triple.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionPoint {
    pub tag: String,
    pub x: VectorExpr,
    pub g: VectorExpr,
    pub f: ScalarVar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionData {
    pub name: String,
    pub points: Vec<FunctionPoint>,
}

impl FunctionData {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            points: Vec::new(),
        }
    }

    pub fn push(&mut self, tag: impl Into<String>, x: VectorExpr, g: VectorExpr, f: ScalarVar) {
        self.points.push(FunctionPoint {
            tag: tag.into(),
            x,
            g,
            f,
        });
    }

    fn as_operator(&self) -> OperatorData {
        OperatorData {
            name: self.name.clone(),
            points: self
                .points
                .iter()
                .map(|p| OperatorPoint {
                    tag: p.tag.clone(),
                    x: p.x.clone(),
                    q: p.g.clone(),
                })
                .collect(),
        }
    }
}

/// One `(x, q)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorPoint {
    pub tag: String,
    pub x: VectorExpr,
    pub q: VectorExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorData {
    pub name: String,
    pub points: Vec<OperatorPoint>,
}

impl OperatorData {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            points: Vec::new(),
        }
    }

    pub fn push(&mut self, tag: impl Into<String>, x: VectorExpr, q: VectorExpr) {
        self.points.push(OperatorPoint {
            tag: tag.into(),
            x,
            q,
        });
    }
}

/// Forward pairs `y = M x`, adjoint pairs `v = M^T u`, and `sigma_max(M) <= l`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMapData {
    pub name: String,
    pub forward: Vec<(VectorExpr, VectorExpr)>,
    pub adjoint: Vec<(VectorExpr, VectorExpr)>,
    pub l: f64,
}

impl LinearMapData {
    pub fn new(name: impl Into<String>, l: f64) -> Self {
        Self {
            name: name.into(),
            forward: Vec::new(),
            adjoint: Vec::new(),
            l,
        }
    }
}

/// Inputs and outputs of one consensus step, one entry per agent.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusStep {
    pub x: Vec<VectorExpr>,
    pub y: Vec<VectorExpr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusData {
    pub name: String,
    pub agents: usize,
    pub lam: f64,
    pub steps: Vec<ConsensusStep>,
}

impl ConsensusData {
    pub fn new(name: impl Into<String>, agents: usize, lam: f64) -> Self {
        Self {
            name: name.into(),
            agents,
            lam,
            steps: Vec::new(),
        }
    }

    fn validate(&self) -> Result<(), PepError> {
        if self.agents < 2 {
            return Err(PepError::InvalidParameter(format!(
                "consensus needs at least 2 agents, got {}",
                self.agents
            )));
        }
        if !(0.0..1.0).contains(&self.lam) {
            return Err(PepError::InvalidParameter(format!(
                "lambda must lie in [0, 1), got {}",
                self.lam
            )));
        }
        if self.steps.is_empty() {
            return Err(PepError::EmptyHandle(self.name.clone()));
        }
        for (i, s) in self.steps.iter().enumerate() {
            if s.x.len() != self.agents || s.y.len() != self.agents {
                return Err(PepError::DimensionMismatch(format!(
                    "{}: step {i} has {} inputs and {} outputs for {} agents",
                    self.name,
                    s.x.len(),
                    s.y.len(),
                    self.agents
                )));
            }
        }
        Ok(())
    }
}

fn label(name: &str, rule: &str, args: &[&str]) -> String {
    format!("{name}:{rule}({})", args.join(","))
}

fn ordered_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
}

fn unordered_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| (i, j)))
}

/// Directed cycles of length `2..=k` over `0..n`, one representative per
/// rotation class: the smallest index comes first.
pub fn enumerate_cycles(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn extend(
        path: &mut Vec<usize>,
        used: &mut [bool],
        n: usize,
        k: usize,
        out: &mut Vec<Vec<usize>>,
    ) {
        if path.len() >= 2 {
            out.push(path.clone());
        }
        if path.len() == k {
            return;
        }
        for next in (path[0] + 1)..n {
            if !used[next] {
                used[next] = true;
                path.push(next);
                extend(path, used, n, k, out);
                path.pop();
                used[next] = false;
            }
        }
    }
    let mut out = Vec::new();
    let mut used = vec![false; n];
    for start in 0..n {
        used[start] = true;
        extend(&mut vec![start], &mut used, n, k, &mut out);
        used[start] = false;
    }
    out
}

/// Interpolation constraints for `F_{mu,L}`, one per ordered pair.
pub fn smooth_strongly_convex_constraints(
    h: &FunctionData,
    mu: f64,
    l: f64,
    strict_equal_curvature: bool,
) -> Result<Vec<Constraint>, PepError> {
    ClassSpec::SmoothStronglyConvex {
        mu,
        l,
        strict_equal_curvature,
    }
    .validate()?;
    let p = &h.points;
    let rule = if mu == l { "interp-eq" } else { "interp" };
    Ok(ordered_pairs(p.len())
        .map(|(i, j)| {
            let (pi, pj) = (&p[i], &p[j]);
            let dx = &pi.x - &pj.x;
            let dg = &pi.g - &pj.g;
            let base = QuadExpr::from(pj.f) - QuadExpr::from(pi.f);
            let e = if mu == l {
                let r = &dg - &(l * &dx);
                base + (&pi.g + &pj.g).dot(&dx) * 0.5 + r.norm_sq() * (1.0 / l)
            } else if l == f64::INFINITY {
                base + pj.g.dot(&dx) + dx.norm_sq() * (mu / 2.0)
            } else if mu == f64::NEG_INFINITY {
                base + pi.g.dot(&dx) - dx.norm_sq() * (l / 2.0)
            } else {
                let c = 1.0 / (l - mu);
                base + pj.g.dot(&dx) + dg.norm_sq() * (c / 2.0) + dx.norm_sq() * (mu * l * c / 2.0)
                    - dg.dot(&dx) * (mu * c)
            };
            Constraint::le0(e, label(&h.name, rule, &[&pi.tag, &pj.tag]))
        })
        .collect())
}

/// Convexity in both orders plus a squared Lipschitz bound per pair. Valid
/// for `F_{0,L}` but strictly weaker than its interpolation constraints.
pub fn relaxed_smooth_convex_constraints(
    h: &FunctionData,
    l: f64,
) -> Result<Vec<Constraint>, PepError> {
    ClassSpec::RelaxedSmoothConvex { l }.validate()?;
    let p = &h.points;
    let mut out: Vec<Constraint> = ordered_pairs(p.len())
        .map(|(i, j)| {
            let dx = &p[i].x - &p[j].x;
            let e = QuadExpr::from(p[j].f) - QuadExpr::from(p[i].f) + p[j].g.dot(&dx);
            Constraint::le0(e, label(&h.name, "conv", &[&p[i].tag, &p[j].tag]))
        })
        .collect();
    out.extend(unordered_pairs(p.len()).map(|(i, j)| {
        let dx = &p[i].x - &p[j].x;
        let dg = &p[i].g - &p[j].g;
        Constraint::le0(
            dg.norm_sq() - dx.norm_sq() * (l * l),
            label(&h.name, "lip", &[&p[i].tag, &p[j].tag]),
        )
    }));
    Ok(out)
}

/// Function-value-free constraints for `F_{mu,L}`: one per directed cycle
/// of length at most `k`.
///
/// With `gt = g - mu x` and `lt = L - mu` each cycle contributes
/// `sum_k <gt_k, x_k - x_{k+1}> - <gt_k, gt_k - gt_{k+1}> / lt >= 0`.
pub fn cyclic_monotonicity_constraints(
    h: &OperatorData,
    mu: f64,
    l: f64,
    k: usize,
    allow_large: bool,
) -> Result<Vec<Constraint>, PepError> {
    ClassSpec::CyclicallyMonotone {
        mu,
        l,
        max_cycle: Some(k),
        allow_large,
    }
    .validate()?;
    let n = h.points.len();
    if n > CYCLE_CAP && !allow_large {
        return Err(PepError::TooManyPoints {
            points: n,
            cap: CYCLE_CAP,
        });
    }
    if n >= 2 && k > n {
        return Err(PepError::InvalidParameter(format!(
            "cycle length K={k} exceeds the {n} available points"
        )));
    }
    let shifted: Vec<VectorExpr> = h.points.iter().map(|p| &p.q - &(mu * &p.x)).collect();
    let lt = l - mu;
    Ok(enumerate_cycles(n, k)
        .into_iter()
        .map(|cycle| {
            let mut sum = QuadExpr::default();
            for (pos, &a) in cycle.iter().enumerate() {
                let b = cycle[(pos + 1) % cycle.len()];
                let dx = &h.points[a].x - &h.points[b].x;
                let dg = &shifted[a] - &shifted[b];
                sum += &(shifted[a].dot(&dx) - shifted[a].dot(&dg) * (1.0 / lt));
            }
            let tags: Vec<&str> = cycle.iter().map(|&i| h.points[i].tag.as_str()).collect();
            Constraint::le0(-sum, format!("{}:cycle({})", h.name, tags.join(">")))
        })
        .collect())
}

/// Upper quadratic bound per ordered pair and `|g_i|^2 <= M^2` per point.
pub fn smooth_bounded_grad_constraints(
    h: &FunctionData,
    l: f64,
    m: f64,
) -> Result<Vec<Constraint>, PepError> {
    ClassSpec::SmoothBoundedGrad { l, m }.validate()?;
    let p = &h.points;
    let mut out: Vec<Constraint> = ordered_pairs(p.len())
        .map(|(i, j)| {
            let dx = &p[i].x - &p[j].x;
            let e = QuadExpr::from(p[i].f)
                - QuadExpr::from(p[j].f)
                - p[j].g.dot(&dx)
                - dx.norm_sq() * (l / 2.0);
            Constraint::le0(e, label(&h.name, "upper", &[&p[i].tag, &p[j].tag]))
        })
        .collect();
    out.extend(grad_bounds(h, m));
    Ok(out)
}

fn grad_bounds(h: &FunctionData, m: f64) -> impl Iterator<Item = Constraint> + '_ {
    h.points.iter().map(move |p| {
        Constraint::le0(
            p.g.norm_sq() - m * m,
            label(&h.name, "grad-bound", &[&p.tag]),
        )
    })
}

/// Convexity per ordered pair and `|g_i|^2 <= M^2` per point.
pub fn convex_bounded_grad_constraints(
    h: &FunctionData,
    m: f64,
) -> Result<Vec<Constraint>, PepError> {
    ClassSpec::ConvexBoundedGrad { m }.validate()?;
    let p = &h.points;
    let mut out: Vec<Constraint> = ordered_pairs(p.len())
        .map(|(i, j)| {
            let dx = &p[i].x - &p[j].x;
            let e = QuadExpr::from(p[j].f) - QuadExpr::from(p[i].f) + p[j].g.dot(&dx);
            Constraint::le0(e, label(&h.name, "conv", &[&p[i].tag, &p[j].tag]))
        })
        .collect();
    out.extend(grad_bounds(h, m));
    Ok(out)
}

/// Indicator functions of convex sets inside the ball of radius `M`.
pub fn indicator_constraints(h: &FunctionData, m: f64) -> Result<Vec<Constraint>, PepError> {
    ClassSpec::IndicatorBounded { m }.validate()?;
    let p = &h.points;
    let mut out: Vec<Constraint> = p
        .iter()
        .map(|pt| Constraint::eq0(QuadExpr::from(pt.f), label(&h.name, "zero", &[&pt.tag])))
        .collect();
    out.extend(ordered_pairs(p.len()).map(|(i, j)| {
        let dx = &p[i].x - &p[j].x;
        Constraint::le0(
            p[j].g.dot(&dx),
            label(&h.name, "normal", &[&p[i].tag, &p[j].tag]),
        )
    }));
    out.extend(
        p.iter().map(|pt| {
            Constraint::le0(pt.x.norm_sq() - m * m, label(&h.name, "radius", &[&pt.tag]))
        }),
    );
    Ok(out)
}

/// Pairwise constraints for monotone, cocoercive and Lipschitz operators.
pub fn operator_constraints(
    h: &OperatorData,
    spec: &ClassSpec,
) -> Result<Vec<Constraint>, PepError> {
    spec.validate()?;
    let p = &h.points;
    if let ClassSpec::CyclicallyMonotone {
        mu,
        l,
        max_cycle,
        allow_large,
    } = *spec
    {
        let k = max_cycle.unwrap_or(p.len().max(2));
        return cyclic_monotonicity_constraints(h, mu, l, k, allow_large);
    }
    let (rule, coeffs): (&str, fn(&ClassSpec) -> (f64, f64, f64)) = match spec {
        // (coefficient of |dq|^2, of <dq, dx>, of |dx|^2) in the le0 form
        ClassSpec::Monotone { .. } => ("mono", |s| match s {
            ClassSpec::Monotone { mu } => (0.0, -1.0, *mu),
            _ => unreachable!(),
        }),
        ClassSpec::Cocoercive { .. } => ("coco", |s| match s {
            ClassSpec::Cocoercive { beta } => (*beta, -1.0, 0.0),
            _ => unreachable!(),
        }),
        ClassSpec::LipschitzOp { .. } => ("lip", |s| match s {
            ClassSpec::LipschitzOp { l } => (1.0, 0.0, -l * l),
            _ => unreachable!(),
        }),
        other => {
            return Err(PepError::WrongFamily {
                expected: "monotone, cocoercive, lipschitz-op or cyclically-monotone".into(),
                found: other.family().into(),
            })
        }
    };
    let (cq, cx, cxx) = coeffs(spec);
    Ok(unordered_pairs(p.len())
        .map(|(i, j)| {
            let dx = &p[i].x - &p[j].x;
            let dq = &p[i].q - &p[j].q;
            let e = dq.norm_sq() * cq + dq.dot(&dx) * cx + dx.norm_sq() * cxx;
            Constraint::le0(e, label(&h.name, rule, &[&p[i].tag, &p[j].tag]))
        })
        .collect())
}

/// Constraints for a function handle under any function or pair family.
pub fn function_constraints(
    h: &FunctionData,
    spec: &ClassSpec,
) -> Result<Vec<Constraint>, PepError> {
    match *spec {
        ClassSpec::SmoothStronglyConvex {
            mu,
            l,
            strict_equal_curvature,
        } => smooth_strongly_convex_constraints(h, mu, l, strict_equal_curvature),
        ClassSpec::RelaxedSmoothConvex { l } => relaxed_smooth_convex_constraints(h, l),
        ClassSpec::Convex {} => smooth_strongly_convex_constraints(h, 0.0, f64::INFINITY, false),
        ClassSpec::StronglyConvex { mu } => {
            spec.validate()?;
            smooth_strongly_convex_constraints(h, mu, f64::INFINITY, false)
        }
        ClassSpec::SmoothBoundedGrad { l, m } => smooth_bounded_grad_constraints(h, l, m),
        ClassSpec::IndicatorBounded { m } => indicator_constraints(h, m),
        ClassSpec::ConvexBoundedGrad { m } => convex_bounded_grad_constraints(h, m),
        ClassSpec::CyclicallyMonotone { .. }
        | ClassSpec::Monotone { .. }
        | ClassSpec::Cocoercive { .. }
        | ClassSpec::LipschitzOp { .. } => operator_constraints(&h.as_operator(), spec),
    }
}

/// Adjoint coupling `X^T V = Y^T U` entrywise and the two singular-value
/// LMIs `L^2 X^T X - Y^T Y >= 0`, `L^2 U^T U - V^T V >= 0`.
pub fn linear_operator_constraints(h: &LinearMapData) -> Result<Vec<Constraint>, PepError> {
    if !(h.l.is_finite() && h.l >= 0.0) {
        return Err(PepError::InvalidParameter(format!(
            "operator norm bound must be finite and nonnegative, got {}",
            h.l
        )));
    }
    if h.forward.is_empty() && h.adjoint.is_empty() {
        return Err(PepError::EmptyHandle(h.name.clone()));
    }
    let l2 = h.l * h.l;
    let mut out = Vec::new();
    for (i, (x, y)) in h.forward.iter().enumerate() {
        for (j, (u, v)) in h.adjoint.iter().enumerate() {
            out.push(Constraint::eq0(
                x.dot(v) - y.dot(u),
                label(&h.name, "couple", &[&i.to_string(), &j.to_string()]),
            ));
        }
    }
    for (pairs, rule) in [(&h.forward, "fwd"), (&h.adjoint, "adj")] {
        if !pairs.is_empty() {
            out.push(Constraint::lmi_sym(
                pairs.len(),
                format!("{}:{rule}", h.name),
                |i, j| pairs[i].0.dot(&pairs[j].0) * l2 - pairs[i].1.dot(&pairs[j].1),
            ));
        }
    }
    Ok(out)
}

fn centered(v: &[VectorExpr]) -> Vec<VectorExpr> {
    let mean = VectorExpr::sum(v) * (1.0 / v.len() as f64);
    v.iter().map(|e| e - &mean).collect()
}

/// Necessary conditions for `y_i = (W kron I) x_i` with `W` in the spectral
/// class: average preservation tested against every basis label, symmetry
/// per step pair, and one variance-reduction LMI.
pub fn network_matrix_constraints(
    h: &ConsensusData,
    basis: &[BasisLabel],
) -> Result<Vec<Constraint>, PepError> {
    h.validate()?;
    let mut out = Vec::new();
    for (i, s) in h.steps.iter().enumerate() {
        let diff = &VectorExpr::sum(&s.x) - &VectorExpr::sum(&s.y);
        for b in basis {
            out.push(Constraint::eq0(
                diff.dot(&VectorExpr::basis(b.id)),
                label(&h.name, "avg", &[&i.to_string(), &b.tag]),
            ));
        }
    }
    let xc: Vec<Vec<VectorExpr>> = h.steps.iter().map(|s| centered(&s.x)).collect();
    let yc: Vec<Vec<VectorExpr>> = h.steps.iter().map(|s| centered(&s.y)).collect();
    let cross = |u: &[VectorExpr], v: &[VectorExpr]| {
        u.iter()
            .zip(v)
            .fold(QuadExpr::default(), |acc, (a, b)| acc + a.dot(b))
    };
    let n = h.steps.len();
    for (i, j) in unordered_pairs(n) {
        out.push(Constraint::eq0(
            cross(&xc[i], &yc[j]) - cross(&yc[i], &xc[j]),
            label(&h.name, "sym", &[&i.to_string(), &j.to_string()]),
        ));
    }
    let l2 = h.lam * h.lam;
    out.push(Constraint::lmi_sym(n, format!("{}:var", h.name), |i, j| {
        cross(&xc[i], &xc[j]) * l2 - cross(&yc[i], &yc[j])
    }));
    Ok(out)
}

/// A data handle paired with the class it must be interpolable by.
#[derive(Debug, Clone, PartialEq)]
pub enum Interpolation {
    Function { data: FunctionData, spec: ClassSpec },
    Operator { data: OperatorData, spec: ClassSpec },
    LinearMap(LinearMapData),
    Consensus(ConsensusData),
}

impl Interpolation {
    pub fn name(&self) -> &str {
        match self {
            Interpolation::Function { data, .. } => &data.name,
            Interpolation::Operator { data, .. } => &data.name,
            Interpolation::LinearMap(d) => &d.name,
            Interpolation::Consensus(d) => &d.name,
        }
    }

    /// Generates the constraint list; `basis` is the full label registry.
    pub fn constraints(&self, basis: &[BasisLabel]) -> Result<Vec<Constraint>, PepError> {
        match self {
            Interpolation::Function { data, spec } => function_constraints(data, spec),
            Interpolation::Operator { data, spec } => operator_constraints(data, spec),
            Interpolation::LinearMap(d) => linear_operator_constraints(d),
            Interpolation::Consensus(d) => network_matrix_constraints(d, basis),
        }
    }

    /// Whether the generated constraints are sufficient as well as
    /// necessary for interpolability.
    pub fn is_exact(&self) -> bool {
        match self {
            Interpolation::Function { spec, .. } | Interpolation::Operator { spec, .. } => {
                match spec {
                    ClassSpec::CyclicallyMonotone { max_cycle, .. } => {
                        max_cycle.map_or(true, |k| k >= self.len())
                    }
                    s => s.is_exact(),
                }
            }
            Interpolation::LinearMap(_) => true,
            Interpolation::Consensus(_) => false,
        }
    }

    /// Number of points (function and operator handles) or pairs.
    pub fn len(&self) -> usize {
        match self {
            Interpolation::Function { data, .. } => data.points.len(),
            Interpolation::Operator { data, .. } => data.points.len(),
            Interpolation::LinearMap(d) => d.forward.len() + d.adjoint.len(),
            Interpolation::Consensus(d) => d.steps.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn vectors(&self) -> Vec<&VectorExpr> {
        match self {
            Interpolation::Function { data, .. } => {
                data.points.iter().flat_map(|p| [&p.x, &p.g]).collect()
            }
            Interpolation::Operator { data, .. } => {
                data.points.iter().flat_map(|p| [&p.x, &p.q]).collect()
            }
            Interpolation::LinearMap(d) => d
                .forward
                .iter()
                .chain(&d.adjoint)
                .flat_map(|(a, b)| [a, b])
                .collect(),
            Interpolation::Consensus(d) => d
                .steps
                .iter()
                .flat_map(|s| s.x.iter().chain(&s.y))
                .collect(),
        }
    }

    pub fn scalars(&self) -> Vec<ScalarVar> {
        match self {
            Interpolation::Function { data, .. } => data.points.iter().map(|p| p.f).collect(),
            _ => Vec::new(),
        }
    }

    /// Evaluates the handle on numeric vectors (indexed by Gram index) and
    /// scalar values (indexed by scalar index).
    pub fn to_numeric(&self, vectors: &[Vec<f64>], fvals: &[f64], dim: usize) -> NumericData {
        let ev = |e: &VectorExpr| e.eval(vectors, dim);
        match self {
            Interpolation::Function { data, spec } => NumericData::Function {
                name: data.name.clone(),
                spec: spec.clone(),
                points: data
                    .points
                    .iter()
                    .map(|p| NumericPoint {
                        tag: p.tag.clone(),
                        x: ev(&p.x),
                        g: ev(&p.g),
                        f: fvals[p.f.index()],
                    })
                    .collect(),
            },
            Interpolation::Operator { data, spec } => NumericData::Operator {
                name: data.name.clone(),
                spec: spec.clone(),
                points: data
                    .points
                    .iter()
                    .map(|p| NumericPair {
                        tag: p.tag.clone(),
                        x: ev(&p.x),
                        q: ev(&p.q),
                    })
                    .collect(),
            },
            Interpolation::LinearMap(d) => NumericData::LinearMap {
                name: d.name.clone(),
                l: d.l,
                forward: d.forward.iter().map(|(a, b)| (ev(a), ev(b))).collect(),
                adjoint: d.adjoint.iter().map(|(a, b)| (ev(a), ev(b))).collect(),
            },
            Interpolation::Consensus(d) => NumericData::Consensus {
                name: d.name.clone(),
                lam: d.lam,
                steps: d
                    .steps
                    .iter()
                    .map(|s| NumericStep {
                        x: s.x.iter().map(ev).collect(),
                        y: s.y.iter().map(ev).collect(),
                    })
                    .collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericPoint {
    pub tag: String,
    pub x: Vec<f64>,
    pub g: Vec<f64>,
    pub f: f64,
}

impl NumericPoint {
    pub fn new(tag: impl Into<String>, x: Vec<f64>, g: Vec<f64>, f: f64) -> Self {
        Self {
            tag: tag.into(),
            x,
            g,
            f,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericPair {
    pub tag: String,
    pub x: Vec<f64>,
    pub q: Vec<f64>,
}

impl NumericPair {
    pub fn new(tag: impl Into<String>, x: Vec<f64>, q: Vec<f64>) -> Self {
        Self {
            tag: tag.into(),
            x,
            q,
        }
    }
}

/// Per-agent inputs and outputs of one consensus step.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericStep {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
}

/// Concrete data to test for interpolability.
#[derive(Debug, Clone, PartialEq)]
pub enum NumericData {
    Function {
        name: String,
        spec: ClassSpec,
        points: Vec<NumericPoint>,
    },
    Operator {
        name: String,
        spec: ClassSpec,
        points: Vec<NumericPair>,
    },
    LinearMap {
        name: String,
        l: f64,
        forward: Vec<(Vec<f64>, Vec<f64>)>,
        adjoint: Vec<(Vec<f64>, Vec<f64>)>,
    },
    Consensus {
        name: String,
        lam: f64,
        steps: Vec<NumericStep>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub feasible: bool,
    pub max_residual: f64,
    /// Every evaluated constraint, in generation order.
    pub residuals: Vec<Residual>,
    /// The residuals above tolerance.
    pub violations: Vec<Residual>,
}

impl CheckReport {
    fn from_residuals(residuals: Vec<Residual>, tol: f64) -> Self {
        let violations: Vec<Residual> = residuals
            .iter()
            .filter(|r| !(r.value <= tol))
            .cloned()
            .collect();
        let max_residual = residuals
            .iter()
            .map(|r| r.value)
            .fold(f64::NEG_INFINITY, f64::max);
        Self {
            feasible: violations.is_empty(),
            max_residual: if residuals.is_empty() {
                0.0
            } else {
                max_residual
            },
            residuals,
            violations,
        }
    }

    pub fn residual(&self, label: &str) -> Option<f64> {
        self.residuals
            .iter()
            .find(|r| r.label == label)
            .map(|r| r.value)
    }
}

/// Evaluates the interpolation inequalities of a class on numeric data.
///
/// Residuals are the constraint value for inequalities, its absolute value
/// for equalities and minus the smallest eigenvalue for LMIs; the data is
/// feasible when every residual is at most `tol`.
pub fn check_numeric(data: &NumericData, tol: f64) -> Result<CheckReport, PepError> {
    let residuals = match data {
        NumericData::Function { name, spec, points } => {
            spec.validate()?;
            same_dim(name, points.iter().flat_map(|p| [p.x.len(), p.g.len()]))?;
            check_function(name, spec, points)
        }
        NumericData::Operator { name, spec, points } => {
            spec.validate()?;
            if !spec.is_operator_family() {
                return Err(PepError::WrongFamily {
                    expected: "an operator family".into(),
                    found: spec.family().into(),
                });
            }
            same_dim(name, points.iter().flat_map(|p| [p.x.len(), p.q.len()]))?;
            check_pairs(name, spec, points)?
        }
        NumericData::LinearMap {
            name,
            l,
            forward,
            adjoint,
        } => {
            same_dim(
                &format!("{name} (inputs)"),
                forward
                    .iter()
                    .map(|p| p.0.len())
                    .chain(adjoint.iter().map(|p| p.1.len())),
            )?;
            same_dim(
                &format!("{name} (outputs)"),
                forward
                    .iter()
                    .map(|p| p.1.len())
                    .chain(adjoint.iter().map(|p| p.0.len())),
            )?;
            check_linear(name, *l, forward, adjoint)
        }
        NumericData::Consensus { name, lam, steps } => {
            same_dim(
                name,
                steps
                    .iter()
                    .flat_map(|s| s.x.iter().chain(&s.y))
                    .map(|v| v.len()),
            )?;
            let agents = steps.first().map_or(0, |s| s.x.len());
            if steps
                .iter()
                .any(|s| s.x.len() != agents || s.y.len() != agents)
            {
                return Err(PepError::DimensionMismatch(format!(
                    "{name}: agent count differs between steps"
                )));
            }
            check_consensus(name, *lam, steps)
        }
    };
    Ok(CheckReport::from_residuals(residuals, tol))
}

fn same_dim(name: &str, mut lens: impl Iterator<Item = usize>) -> Result<(), PepError> {
    if let Some(d) = lens.next() {
        if let Some(bad) = lens.find(|&l| l != d) {
            return Err(PepError::DimensionMismatch(format!(
                "{name}: vectors of length {d} and {bad}"
            )));
        }
    }
    Ok(())
}

fn res(name: &str, rule: &str, args: &[&str], value: f64) -> Residual {
    Residual {
        label: label(name, rule, args),
        value,
    }
}

fn check_function(name: &str, spec: &ClassSpec, pts: &[NumericPoint]) -> Vec<Residual> {
    use linalg::{dot, norm_sq, sub};
    let n = pts.len();
    let mut out = Vec::new();
    match *spec {
        ClassSpec::SmoothStronglyConvex { .. }
        | ClassSpec::Convex {}
        | ClassSpec::StronglyConvex { .. } => {
            let (mu, l) = match *spec {
                ClassSpec::SmoothStronglyConvex { mu, l, .. } => (mu, l),
                ClassSpec::StronglyConvex { mu } => (mu, f64::INFINITY),
                _ => (0.0, f64::INFINITY),
            };
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let (a, b) = (&pts[i], &pts[j]);
                    let dx = sub(&a.x, &b.x);
                    let dg = sub(&a.g, &b.g);
                    // f_i >= rhs is required
                    let rhs = if mu == l {
                        let r: Vec<f64> = dg.iter().zip(&dx).map(|(g, x)| g - l * x).collect();
                        let gs: Vec<f64> = a.g.iter().zip(&b.g).map(|(p, q)| p + q).collect();
                        b.f + 0.5 * dot(&gs, &dx) + norm_sq(&r) / l
                    } else if l.is_infinite() {
                        b.f + dot(&b.g, &dx) + 0.5 * mu * norm_sq(&dx)
                    } else if mu == f64::NEG_INFINITY {
                        b.f + dot(&a.g, &dx) - 0.5 * l * norm_sq(&dx)
                    } else {
                        b.f + dot(&b.g, &dx)
                            + norm_sq(&dg) / (2.0 * (l - mu))
                            + mu * l * norm_sq(&dx) / (2.0 * (l - mu))
                            - mu * dot(&dg, &dx) / (l - mu)
                    };
                    let rule = if mu == l { "interp-eq" } else { "interp" };
                    out.push(res(name, rule, &[&a.tag, &b.tag], rhs - a.f));
                }
            }
        }
        ClassSpec::RelaxedSmoothConvex { l } => {
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        let (a, b) = (&pts[i], &pts[j]);
                        let v = b.f + dot(&b.g, &sub(&a.x, &b.x)) - a.f;
                        out.push(res(name, "conv", &[&a.tag, &b.tag], v));
                    }
                }
            }
            for i in 0..n {
                for j in (i + 1)..n {
                    let (a, b) = (&pts[i], &pts[j]);
                    let v = norm_sq(&sub(&a.g, &b.g)) - l * l * norm_sq(&sub(&a.x, &b.x));
                    out.push(res(name, "lip", &[&a.tag, &b.tag], v));
                }
            }
        }
        ClassSpec::SmoothBoundedGrad { l, m } => {
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        let (a, b) = (&pts[i], &pts[j]);
                        let dx = sub(&a.x, &b.x);
                        let v = a.f - b.f - dot(&b.g, &dx) - 0.5 * l * norm_sq(&dx);
                        out.push(res(name, "upper", &[&a.tag, &b.tag], v));
                    }
                }
            }
            for p in pts {
                out.push(res(name, "grad-bound", &[&p.tag], norm_sq(&p.g) - m * m));
            }
        }
        ClassSpec::ConvexBoundedGrad { m } => {
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        let (a, b) = (&pts[i], &pts[j]);
                        let v = b.f + dot(&b.g, &sub(&a.x, &b.x)) - a.f;
                        out.push(res(name, "conv", &[&a.tag, &b.tag], v));
                    }
                }
            }
            for p in pts {
                out.push(res(name, "grad-bound", &[&p.tag], norm_sq(&p.g) - m * m));
            }
        }
        ClassSpec::IndicatorBounded { m } => {
            for p in pts {
                out.push(res(name, "zero", &[&p.tag], p.f.abs()));
            }
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        let (a, b) = (&pts[i], &pts[j]);
                        let v = dot(&b.g, &sub(&a.x, &b.x));
                        out.push(res(name, "normal", &[&a.tag, &b.tag], v));
                    }
                }
            }
            for p in pts {
                out.push(res(name, "radius", &[&p.tag], norm_sq(&p.x) - m * m));
            }
        }
        ClassSpec::CyclicallyMonotone { .. }
        | ClassSpec::Monotone { .. }
        | ClassSpec::Cocoercive { .. }
        | ClassSpec::LipschitzOp { .. } => {
            let pairs: Vec<NumericPair> = pts
                .iter()
                .map(|p| NumericPair::new(p.tag.clone(), p.x.clone(), p.g.clone()))
                .collect();
            return check_pairs(name, spec, &pairs).unwrap_or_default();
        }
    }
    out
}

fn check_pairs(
    name: &str,
    spec: &ClassSpec,
    pts: &[NumericPair],
) -> Result<Vec<Residual>, PepError> {
    use linalg::{dot, norm_sq, sub};
    let n = pts.len();
    let mut out = Vec::new();
    if let ClassSpec::CyclicallyMonotone {
        mu, l, max_cycle, ..
    } = *spec
    {
        let k = max_cycle.unwrap_or(n.max(2));
        let shifted: Vec<Vec<f64>> = pts
            .iter()
            .map(|p| p.q.iter().zip(&p.x).map(|(q, x)| q - mu * x).collect())
            .collect();
        for cycle in enumerate_cycles(n, k) {
            let mut s = 0.0;
            for (pos, &a) in cycle.iter().enumerate() {
                let b = cycle[(pos + 1) % cycle.len()];
                s += dot(&shifted[a], &sub(&pts[a].x, &pts[b].x))
                    - dot(&shifted[a], &sub(&shifted[a], &shifted[b])) / (l - mu);
            }
            let tags: Vec<&str> = cycle.iter().map(|&i| pts[i].tag.as_str()).collect();
            out.push(Residual {
                label: format!("{name}:cycle({})", tags.join(">")),
                value: -s,
            });
        }
        return Ok(out);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (&pts[i], &pts[j]);
            let dx = sub(&a.x, &b.x);
            let dq = sub(&a.q, &b.q);
            let (rule, v) = match *spec {
                ClassSpec::Monotone { mu } => ("mono", mu * norm_sq(&dx) - dot(&dq, &dx)),
                ClassSpec::Cocoercive { beta } => ("coco", beta * norm_sq(&dq) - dot(&dq, &dx)),
                ClassSpec::LipschitzOp { l } => ("lip", norm_sq(&dq) - l * l * norm_sq(&dx)),
                _ => {
                    return Err(PepError::WrongFamily {
                        expected: "an operator family".into(),
                        found: spec.family().into(),
                    })
                }
            };
            out.push(res(name, rule, &[&a.tag, &b.tag], v));
        }
    }
    Ok(out)
}

fn gram_of(cols: &[&[f64]], rows: &[&[f64]]) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_fn(cols.len(), rows.len(), |i, j| linalg::dot(cols[i], rows[j]))
}

fn check_linear(
    name: &str,
    l: f64,
    forward: &[(Vec<f64>, Vec<f64>)],
    adjoint: &[(Vec<f64>, Vec<f64>)],
) -> Vec<Residual> {
    let xs: Vec<&[f64]> = forward.iter().map(|p| p.0.as_slice()).collect();
    let ys: Vec<&[f64]> = forward.iter().map(|p| p.1.as_slice()).collect();
    let us: Vec<&[f64]> = adjoint.iter().map(|p| p.0.as_slice()).collect();
    let vs: Vec<&[f64]> = adjoint.iter().map(|p| p.1.as_slice()).collect();
    let mut out = Vec::new();
    let xv = gram_of(&xs, &vs);
    let yu = gram_of(&ys, &us);
    for i in 0..xs.len() {
        for j in 0..us.len() {
            out.push(res(
                name,
                "couple",
                &[&i.to_string(), &j.to_string()],
                (xv[(i, j)] - yu[(i, j)]).abs(),
            ));
        }
    }
    let l2 = l * l;
    if !xs.is_empty() {
        let m = gram_of(&xs, &xs) * l2 - gram_of(&ys, &ys);
        out.push(Residual {
            label: format!("{name}:fwd"),
            value: linalg::lmi_residual(&m),
        });
    }
    if !us.is_empty() {
        let m = gram_of(&us, &us) * l2 - gram_of(&vs, &vs);
        out.push(Residual {
            label: format!("{name}:adj"),
            value: linalg::lmi_residual(&m),
        });
    }
    out
}

fn check_consensus(name: &str, lam: f64, steps: &[NumericStep]) -> Vec<Residual> {
    let center = |vs: &[Vec<f64>]| -> Vec<Vec<f64>> {
        let d = vs.first().map_or(0, |v| v.len());
        let mut mean = vec![0.0; d];
        for v in vs {
            for (m, x) in mean.iter_mut().zip(v) {
                *m += x / vs.len() as f64;
            }
        }
        vs.iter().map(|v| linalg::sub(v, &mean)).collect()
    };
    let mut out = Vec::new();
    for (i, s) in steps.iter().enumerate() {
        let d = s.x.first().map_or(0, |v| v.len());
        let mut diff = vec![0.0; d];
        for (x, y) in s.x.iter().zip(&s.y) {
            for k in 0..d {
                diff[k] += x[k] - y[k];
            }
        }
        out.push(res(
            name,
            "avg",
            &[&i.to_string()],
            linalg::norm_sq(&diff).sqrt(),
        ));
    }
    let xc: Vec<Vec<Vec<f64>>> = steps.iter().map(|s| center(&s.x)).collect();
    let yc: Vec<Vec<Vec<f64>>> = steps.iter().map(|s| center(&s.y)).collect();
    let cross = |u: &[Vec<f64>], v: &[Vec<f64>]| -> f64 {
        u.iter().zip(v).map(|(a, b)| linalg::dot(a, b)).sum()
    };
    let n = steps.len();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = cross(&xc[i], &yc[j]) - cross(&yc[i], &xc[j]);
            out.push(res(name, "sym", &[&i.to_string(), &j.to_string()], v.abs()));
        }
    }
    if n > 0 {
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            lam * lam * cross(&xc[i], &xc[j]) - cross(&yc[i], &yc[j])
        });
        out.push(Residual {
            label: format!("{name}:var"),
            value: linalg::lmi_residual(&m),
        });
    }
    out
}
