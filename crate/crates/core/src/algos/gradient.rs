use serde::{Deserialize, Serialize};

use super::Representation;
use crate::classes::{ClassSpec, FunctionData, Interpolation};
use crate::gram::{BasisKind, Constraint, PepBuilder, PepProblem, QuadExpr, VectorExpr};
use crate::PepError;

/// Performance measure for the gradient method.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    /// `f(x_N) - f(x*)`
    #[default]
    LastIterateGap,
    /// `min_i f(x_i) - f(x*)` over `i = 0..N`
    MinIterateGap,
    /// `|grad f(x_N)|^2`
    GradientNormSq,
}

impl Criterion {
    pub fn as_str(&self) -> &'static str {
        match self {
            Criterion::LastIterateGap => "last-iterate-gap",
            Criterion::MinIterateGap => "min-iterate-gap",
            Criterion::GradientNormSq => "gradient-norm-sq",
        }
    }
}

/// Step sizes: one per iteration, or a single constant one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Steps {
    /// `alpha_i` as given.
    #[serde(rename = "alpha")]
    Absolute(Vec<f64>),
    /// `h_i = L alpha_i`, with `L` taken from the function class.
    #[serde(rename = "h")]
    Normalized(Vec<f64>),
}

/// Fixed-step gradient descent `x_{i+1} = x_i - alpha_i grad f(x_i)` started
/// from `|x_0 - x*|^2 <= radius^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    pub n: usize,
    pub steps: Steps,
    pub family: ClassSpec,
    pub criterion: Criterion,
    pub radius: f64,
}

impl MethodSpec {
    /// `n` steps of size `h / L` on `F_{0,1}` with unit radius.
    pub fn gradient(n: usize, h: f64) -> Self {
        Self {
            n,
            steps: Steps::Normalized(vec![h]),
            family: ClassSpec::smooth_convex(1.0),
            criterion: Criterion::LastIterateGap,
            radius: 1.0,
        }
    }

    pub fn with_family(mut self, family: ClassSpec) -> Self {
        self.family = family;
        self
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    pub fn with_criterion(mut self, criterion: Criterion) -> Self {
        self.criterion = criterion;
        self
    }

    /// The absolute step sizes `alpha_0 .. alpha_{N-1}`.
    pub fn step_sizes(&self) -> Result<Vec<f64>, PepError> {
        let (raw, scale) = match &self.steps {
            Steps::Absolute(a) => (a, 1.0),
            Steps::Normalized(h) => {
                let l = smoothness(&self.family).ok_or_else(|| {
                    PepError::InvalidParameter(format!(
                        "normalized steps need a finite smoothness constant; family {} has none",
                        self.family.family()
                    ))
                })?;
                (h, 1.0 / l)
            }
        };
        expand_steps(raw, self.n).map(|v| v.into_iter().map(|s| s * scale).collect())
    }
}

pub(crate) fn expand_steps(raw: &[f64], n: usize) -> Result<Vec<f64>, PepError> {
    if let Some(bad) = raw.iter().find(|s| !s.is_finite()) {
        return Err(PepError::InvalidParameter(format!("step size {bad}")));
    }
    match raw.len() {
        1 => Ok(vec![raw[0]; n]),
        len if len == n => Ok(raw.to_vec()),
        0 if n == 0 => Ok(Vec::new()),
        len => Err(PepError::InvalidParameter(format!(
            "{len} step sizes given for {n} iterations"
        ))),
    }
}

pub(crate) fn smoothness(c: &ClassSpec) -> Option<f64> {
    match *c {
        ClassSpec::SmoothStronglyConvex { l, .. }
        | ClassSpec::RelaxedSmoothConvex { l }
        | ClassSpec::SmoothBoundedGrad { l, .. }
        | ClassSpec::CyclicallyMonotone { l, .. }
            if l.is_finite() =>
        {
            Some(l)
        }
        _ => None,
    }
}

fn positive_radius(r: f64) -> Result<(), PepError> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(PepError::InvalidParameter(format!(
            "radius must be positive, got {r}"
        )))
    }
}

/// Builds the worst-case problem for fixed-step gradient descent.
///
/// The minimizer is placed at the origin and its zero gradient is not
/// given a label, so the basis is `x0, g0, .., gN` and the scalars are
/// `f0, .., fN, f*`.
pub fn build_gradient_method(
    spec: &MethodSpec,
    representation: Representation,
) -> Result<PepProblem, PepError> {
    positive_radius(spec.radius)?;
    spec.family.validate()?;
    let family = match representation {
        Representation::Tight => spec.family.clone(),
        Representation::Relaxed => match spec.family {
            ClassSpec::SmoothStronglyConvex { mu, l, .. } if mu == 0.0 && l.is_finite() => {
                ClassSpec::RelaxedSmoothConvex { l }
            }
            ClassSpec::RelaxedSmoothConvex { l } => ClassSpec::RelaxedSmoothConvex { l },
            ref other => {
                return Err(PepError::WrongFamily {
                    expected: "smooth-strongly-convex with mu = 0 and finite L".into(),
                    found: other.family().into(),
                })
            }
        },
    };
    match family {
        ClassSpec::Monotone { .. }
        | ClassSpec::Cocoercive { .. }
        | ClassSpec::LipschitzOp { .. } => {
            return Err(PepError::WrongFamily {
                expected: "a function family".into(),
                found: family.family().into(),
            })
        }
        ClassSpec::CyclicallyMonotone { .. } if spec.criterion != Criterion::GradientNormSq => {
            return Err(PepError::InvalidParameter(
                "cyclically-monotone data carries no function values; use gradient-norm-sq".into(),
            ))
        }
        _ => {}
    }
    let alphas = spec.step_sizes()?;

    let mut b = PepBuilder::new();
    let x0 = b.vector(BasisKind::IterateSeed, "x0");
    let mut data = FunctionData::new("f");
    let mut x = x0.clone();
    let mut gs = Vec::with_capacity(spec.n + 1);
    let mut fs = Vec::with_capacity(spec.n + 1);
    for i in 0..=spec.n {
        let g = b.vector(BasisKind::Gradient, format!("g{i}"));
        let f = b.scalar(format!("f{i}"));
        data.push(i.to_string(), x.clone(), g.clone(), f);
        if i < spec.n {
            x = &x - &(alphas[i] * &g);
        }
        gs.push(g);
        fs.push(f);
    }
    let f_star = b.scalar("f*");
    data.push("*", VectorExpr::zero(), VectorExpr::zero(), f_star);
    b.interpolate(Interpolation::Function { data, spec: family });
    b.constrain(Constraint::le0(
        x0.norm_sq() - spec.radius * spec.radius,
        "init:dist(x0,x*)",
    ));

    let gap = |i: usize| QuadExpr::from(fs[i]) - QuadExpr::from(f_star);
    let objective = match spec.criterion {
        Criterion::LastIterateGap => gap(spec.n),
        Criterion::GradientNormSq => gs[spec.n].norm_sq(),
        Criterion::MinIterateGap => {
            let t = b.scalar("t");
            for i in 0..=spec.n {
                b.constrain(Constraint::le0(
                    QuadExpr::from(t) - gap(i),
                    format!("criterion:min({i})"),
                ));
            }
            QuadExpr::from(t)
        }
    };
    b.maximize(objective);
    b.meta("method", "gradient");
    b.meta("representation", representation.as_str());
    b.meta("criterion", spec.criterion.as_str());
    b.meta("N", spec.n.to_string());
    b.build()
}

/// `2 L R^2 / (4 + N h (2 - h))`, the textbook bound for `h` in `(0, 2]`.
pub fn classical_bound(n: usize, h: f64, l: f64, r: f64) -> Result<f64, PepError> {
    if !(h > 0.0 && h <= 2.0) {
        return Err(PepError::InvalidParameter(format!(
            "h must lie in (0, 2], got {h}"
        )));
    }
    Ok(2.0 * l * r * r / (4.0 + n as f64 * h * (2.0 - h)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classical_bound_values() {
        assert!((classical_bound(10, 1.0, 1.0, 1.0).unwrap() - 2.0 / 14.0).abs() < 1e-15);
        assert_eq!(classical_bound(0, 0.3, 2.0, 3.0).unwrap(), 9.0);
        assert_eq!(classical_bound(25, 2.0, 1.0, 1.0).unwrap(), 0.5);
        assert!(classical_bound(1, 0.0, 1.0, 1.0).is_err());
        assert!(classical_bound(1, 2.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn n1_layout() {
        let p =
            build_gradient_method(&MethodSpec::gradient(1, 1.0), Representation::Tight).unwrap();
        let tags: Vec<&str> = p.basis().iter().map(|b| b.tag.as_str()).collect();
        assert_eq!(tags, ["x0", "g0", "g1"]);
        let s: Vec<&str> = p.scalars().iter().map(|s| s.tag.as_str()).collect();
        assert_eq!(s, ["f0", "f1", "f*"]);
        // 6 ordered interpolation pairs plus the initial condition
        assert_eq!(p.constraints().len(), 7);
    }

    #[test]
    fn rejects_operator_family() {
        let spec = MethodSpec::gradient(2, 1.0).with_family(ClassSpec::Cocoercive { beta: 1.0 });
        assert!(matches!(
            build_gradient_method(&spec, Representation::Tight),
            Err(PepError::WrongFamily { .. })
        ));
    }

    #[test]
    fn normalized_steps_need_smoothness() {
        let spec = MethodSpec::gradient(2, 1.0).with_family(ClassSpec::Convex {});
        assert!(spec.step_sizes().is_err());
        let spec = MethodSpec {
            steps: Steps::Normalized(vec![1.0, 0.5, 0.1]),
            ..MethodSpec::gradient(2, 1.0)
        };
        assert!(spec.step_sizes().is_err());
    }

    #[test]
    fn steps_json() {
        let s: Steps = serde_json::from_str(r#"{"h":[1.5]}"#).unwrap();
        assert_eq!(s, Steps::Normalized(vec![1.5]));
        let s: Steps = serde_json::from_str(r#"{"alpha":[0.1,0.2]}"#).unwrap();
        assert_eq!(s, Steps::Absolute(vec![0.1, 0.2]));
    }
}
