//! A small declarative language for fixed-step methods.
//!
//! A scheme declares its oracles, then lists steps that create points,
//! query oracles and combine earlier vectors affinely. Every oracle query
//! becomes a data point of the oracle's handle, and each handle receives
//! its class's interpolation constraints when the problem is built.
//!
//! ```json
//! {
//!   "oracles": [{"kind": "function", "name": "f",
//!                "class": {"family": "smooth-strongly-convex", "mu": 0, "L": 1}}],
//!   "steps": [
//!     {"op": "optimum", "oracles": ["f"], "values": ["fs"]},
//!     {"op": "point", "name": "x0"},
//!     {"op": "grad", "oracle": "f", "at": "x0", "name": "g0", "value": "f0"},
//!     {"op": "let", "name": "x1", "expr": {"x0": 1, "g0": -1}},
//!     {"op": "grad", "oracle": "f", "at": "x1", "name": "g1", "value": "f1"}
//!   ],
//!   "initial": [{"dist_sq": "x0", "radius": 1}],
//!   "objective": [{"value": "f1"}, {"value": "fs", "coef": -1}]
//! }
//! ```
//!
//! The minimizer sits at the origin, available under the name `x*`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::classes::{
    ClassSpec, ConsensusData, ConsensusStep, FunctionData, Interpolation, LinearMapData,
    OperatorData,
};
use crate::gram::{BasisKind, Constraint, PepBuilder, PepProblem, QuadExpr, ScalarVar, VectorExpr};
use crate::PepError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub oracles: Vec<OracleDecl>,
    pub steps: Vec<SchemeStep>,
    #[serde(default)]
    pub initial: Vec<Condition>,
    pub objective: Vec<TermSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OracleDecl {
    Function {
        name: String,
        class: ClassSpec,
    },
    Operator {
        name: String,
        class: ClassSpec,
    },
    LinearMap {
        name: String,
        #[serde(rename = "L", alias = "l")]
        l: f64,
    },
    Consensus {
        name: String,
        agents: usize,
        lambda: f64,
    },
}

impl OracleDecl {
    pub fn name(&self) -> &str {
        match self {
            OracleDecl::Function { name, .. }
            | OracleDecl::Operator { name, .. }
            | OracleDecl::LinearMap { name, .. }
            | OracleDecl::Consensus { name, .. } => name,
        }
    }
}

/// A vector name or an affine combination `{"name": coefficient, ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExprSpec {
    Name(String),
    Combination(BTreeMap<String, Value>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SchemeStep {
    /// A fresh free point.
    Point {
        name: String,
    },
    /// A fresh free auxiliary vector.
    Aux {
        name: String,
    },
    Let {
        name: String,
        expr: ExprSpec,
    },
    /// Gradient (or operator output) at `at`, plus the function value.
    Grad {
        oracle: String,
        at: ExprSpec,
        name: String,
        #[serde(default)]
        value: Option<String>,
    },
    /// Declares that `grad` is a (sub)gradient of the oracle at `at`.
    Register {
        oracle: String,
        at: ExprSpec,
        grad: ExprSpec,
        #[serde(default)]
        value: Option<String>,
    },
    /// Points at the minimizer for each listed function, with gradients
    /// summing to zero.
    Optimum {
        oracles: Vec<String>,
        #[serde(default)]
        values: Vec<String>,
    },
    /// `name = M at` for a linear map, or `Q(at)` for an operator.
    Apply {
        oracle: String,
        at: ExprSpec,
        name: String,
    },
    /// `name = M^T at`.
    Adjoint {
        oracle: String,
        at: ExprSpec,
        name: String,
    },
    /// Declares `y = M x` (or `y = M^T x` when `adjoint`) for existing vectors.
    Pair {
        oracle: String,
        x: ExprSpec,
        y: ExprSpec,
        #[serde(default)]
        adjoint: bool,
    },
    /// One consensus step over all agents.
    Mix {
        oracle: String,
        at: Vec<ExprSpec>,
        names: Vec<String>,
    },
}

/// One term of an objective or condition; exactly one of `value`,
/// `norm_sq`, `inner`, `constant` is set.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coef: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_sq: Option<ExprSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<(ExprSpec, ExprSpec)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
}

/// An initial condition: `|expr|^2 <= radius^2`, or a sum of terms
/// bounded above.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum Condition {
    Distance { dist_sq: ExprSpec, radius: f64 },
    Terms { terms: Vec<TermSpec>, bound: f64 },
}

enum Oracle {
    Function(FunctionData, ClassSpec),
    Operator(OperatorData, ClassSpec),
    Linear(LinearMapData),
    Consensus(ConsensusData),
}

struct Ctx {
    b: PepBuilder,
    vectors: BTreeMap<String, VectorExpr>,
    scalars: BTreeMap<String, ScalarVar>,
    oracles: Vec<(String, Oracle)>,
}

impl Ctx {
    fn resolve(&self, e: &ExprSpec) -> Result<VectorExpr, PepError> {
        let lookup = |n: &str| {
            self.vectors
                .get(n)
                .cloned()
                .ok_or_else(|| PepError::UnregisteredLabel(format!("vector `{n}`")))
        };
        match e {
            ExprSpec::Name(n) => lookup(n),
            ExprSpec::Combination(terms) => {
                let mut out = VectorExpr::zero();
                for (n, c) in terms {
                    let c = c.as_f64().ok_or_else(|| {
                        PepError::NonAffine(format!("coefficient of `{n}` is {c}, not a number"))
                    })?;
                    out += &(c * lookup(n)?);
                }
                Ok(out)
            }
        }
    }

    fn define(&mut self, name: &str, v: VectorExpr) -> Result<(), PepError> {
        if self.vectors.contains_key(name) || self.scalars.contains_key(name) {
            return Err(PepError::InvalidParameter(format!(
                "`{name}` defined twice"
            )));
        }
        self.vectors.insert(name.to_string(), v);
        Ok(())
    }

    fn fresh(&mut self, kind: BasisKind, name: &str) -> Result<VectorExpr, PepError> {
        if self.vectors.contains_key(name) {
            return Err(PepError::InvalidParameter(format!(
                "`{name}` defined twice"
            )));
        }
        let v = self.b.vector(kind, name);
        self.define(name, v.clone())?;
        Ok(v)
    }

    fn value(&mut self, name: &str) -> Result<ScalarVar, PepError> {
        if self.vectors.contains_key(name) || self.scalars.contains_key(name) {
            return Err(PepError::InvalidParameter(format!(
                "`{name}` defined twice"
            )));
        }
        let s = self.b.scalar(name);
        self.scalars.insert(name.to_string(), s);
        Ok(s)
    }

    fn oracle(&mut self, name: &str) -> Result<&mut Oracle, PepError> {
        self.oracles
            .iter_mut()
            .find(|(n, _)| n == name)
            .map(|(_, o)| o)
            .ok_or_else(|| PepError::UndeclaredOracle(name.to_string()))
    }

    fn term(&self, t: &TermSpec) -> Result<QuadExpr, PepError> {
        let coef = t.coef.unwrap_or(1.0);
        let set = [
            t.value.is_some(),
            t.norm_sq.is_some(),
            t.inner.is_some(),
            t.constant.is_some(),
        ];
        if set.iter().filter(|s| **s).count() != 1 {
            return Err(PepError::InvalidParameter(
                "a term needs exactly one of value, norm_sq, inner, constant".into(),
            ));
        }
        let q = if let Some(v) = &t.value {
            let s = self
                .scalars
                .get(v)
                .ok_or_else(|| PepError::UnregisteredLabel(format!("value `{v}`")))?;
            QuadExpr::from(*s)
        } else if let Some(e) = &t.norm_sq {
            self.resolve(e)?.norm_sq()
        } else if let Some((u, v)) = &t.inner {
            self.resolve(u)?.dot(&self.resolve(v)?)
        } else {
            QuadExpr::constant(t.constant.unwrap_or(0.0))
        };
        Ok(q * coef)
    }
}

fn wrong_kind(oracle: &str, op: &str) -> PepError {
    PepError::InvalidParameter(format!("oracle `{oracle}` does not support `{op}`"))
}

/// Builds the problem described by a scheme.
pub fn build_custom_method(script: &SchemeConfig) -> Result<PepProblem, PepError> {
    let mut ctx = Ctx {
        b: PepBuilder::new(),
        vectors: BTreeMap::new(),
        scalars: BTreeMap::new(),
        oracles: Vec::new(),
    };
    ctx.vectors.insert("x*".into(), VectorExpr::zero());
    for d in &script.oracles {
        if ctx.oracles.iter().any(|(n, _)| n == d.name()) {
            return Err(PepError::InvalidParameter(format!(
                "oracle `{}` declared twice",
                d.name()
            )));
        }
        let o = match d {
            OracleDecl::Function { name, class } => {
                class.validate()?;
                Oracle::Function(FunctionData::new(name), class.clone())
            }
            OracleDecl::Operator { name, class } => {
                class.validate()?;
                if !class.is_operator_family() {
                    return Err(PepError::WrongFamily {
                        expected: "an operator family".into(),
                        found: class.family().into(),
                    });
                }
                Oracle::Operator(OperatorData::new(name), class.clone())
            }
            OracleDecl::LinearMap { name, l } => Oracle::Linear(LinearMapData::new(name, *l)),
            OracleDecl::Consensus {
                name,
                agents,
                lambda,
            } => Oracle::Consensus(ConsensusData::new(name, *agents, *lambda)),
        };
        ctx.oracles.push((d.name().to_string(), o));
    }

    for step in &script.steps {
        match step {
            SchemeStep::Point { name } => {
                ctx.fresh(BasisKind::IterateSeed, name)?;
            }
            SchemeStep::Aux { name } => {
                ctx.fresh(BasisKind::Auxiliary, name)?;
            }
            SchemeStep::Let { name, expr } => {
                let v = ctx.resolve(expr)?;
                ctx.define(name, v)?;
            }
            SchemeStep::Grad {
                oracle,
                at,
                name,
                value,
            } => {
                let x = ctx.resolve(at)?;
                match ctx.oracle(oracle)? {
                    Oracle::Function(..) => {
                        let g = ctx.fresh(BasisKind::Gradient, name)?;
                        let vname = value.clone().unwrap_or_else(|| format!("{oracle}({name})"));
                        let f = ctx.value(&vname)?;
                        if let Oracle::Function(d, _) = ctx.oracle(oracle)? {
                            d.push(name.clone(), x, g, f);
                        }
                    }
                    Oracle::Operator(..) => {
                        let q = ctx.fresh(BasisKind::OperatorOutput, name)?;
                        if let Oracle::Operator(d, _) = ctx.oracle(oracle)? {
                            d.push(name.clone(), x, q);
                        }
                    }
                    _ => return Err(wrong_kind(oracle, "grad")),
                }
            }
            SchemeStep::Register {
                oracle,
                at,
                grad,
                value,
            } => {
                let x = ctx.resolve(at)?;
                let g = ctx.resolve(grad)?;
                let tag = match grad {
                    ExprSpec::Name(n) => n.clone(),
                    ExprSpec::Combination(_) => format!("p{}", ctx.vectors.len()),
                };
                match ctx.oracle(oracle)? {
                    Oracle::Function(..) => {
                        let vname = value.clone().unwrap_or_else(|| format!("{oracle}({tag})"));
                        let f = ctx.value(&vname)?;
                        if let Oracle::Function(d, _) = ctx.oracle(oracle)? {
                            d.push(tag, x, g, f);
                        }
                    }
                    Oracle::Operator(d, _) => d.push(tag, x, g),
                    _ => return Err(wrong_kind(oracle, "register")),
                }
            }
            SchemeStep::Optimum { oracles, values } => {
                if oracles.is_empty() {
                    return Err(PepError::InvalidParameter("optimum lists no oracle".into()));
                }
                if !values.is_empty() && values.len() != oracles.len() {
                    return Err(PepError::InvalidParameter(format!(
                        "{} values for {} oracles at the optimum",
                        values.len(),
                        oracles.len()
                    )));
                }
                let mut grads = Vec::new();
                for o in &oracles[..oracles.len() - 1] {
                    grads.push(ctx.fresh(BasisKind::Gradient, &format!("{o}'(x*)"))?);
                }
                grads.push(-VectorExpr::sum(&grads));
                for (k, o) in oracles.iter().enumerate() {
                    let vname = values.get(k).cloned().unwrap_or_else(|| format!("{o}*"));
                    if !matches!(ctx.oracle(o)?, Oracle::Function(..)) {
                        return Err(wrong_kind(o, "optimum"));
                    }
                    let f = ctx.value(&vname)?;
                    if let Oracle::Function(d, _) = ctx.oracle(o)? {
                        d.push("*", VectorExpr::zero(), grads[k].clone(), f);
                    }
                }
            }
            SchemeStep::Apply { oracle, at, name } => {
                let x = ctx.resolve(at)?;
                match ctx.oracle(oracle)? {
                    Oracle::Linear(..) | Oracle::Operator(..) => {}
                    _ => return Err(wrong_kind(oracle, "apply")),
                }
                let y = ctx.fresh(BasisKind::OperatorOutput, name)?;
                match ctx.oracle(oracle)? {
                    Oracle::Linear(d) => d.forward.push((x, y)),
                    Oracle::Operator(d, _) => d.push(name.clone(), x, y),
                    _ => unreachable!(),
                }
            }
            SchemeStep::Adjoint { oracle, at, name } => {
                let u = ctx.resolve(at)?;
                if !matches!(ctx.oracle(oracle)?, Oracle::Linear(_)) {
                    return Err(wrong_kind(oracle, "adjoint"));
                }
                let v = ctx.fresh(BasisKind::OperatorOutput, name)?;
                if let Oracle::Linear(d) = ctx.oracle(oracle)? {
                    d.adjoint.push((u, v));
                }
            }
            SchemeStep::Pair {
                oracle,
                x,
                y,
                adjoint,
            } => {
                let (x, y) = (ctx.resolve(x)?, ctx.resolve(y)?);
                match ctx.oracle(oracle)? {
                    Oracle::Linear(d) if *adjoint => d.adjoint.push((x, y)),
                    Oracle::Linear(d) => d.forward.push((x, y)),
                    _ => return Err(wrong_kind(oracle, "pair")),
                }
            }
            SchemeStep::Mix { oracle, at, names } => {
                let xs = at
                    .iter()
                    .map(|e| ctx.resolve(e))
                    .collect::<Result<Vec<_>, _>>()?;
                let agents = match ctx.oracle(oracle)? {
                    Oracle::Consensus(d) => d.agents,
                    _ => return Err(wrong_kind(oracle, "mix")),
                };
                if xs.len() != agents || names.len() != agents {
                    return Err(PepError::DimensionMismatch(format!(
                        "mix on `{oracle}` needs {agents} inputs and names, got {} and {}",
                        xs.len(),
                        names.len()
                    )));
                }
                // the last output is fixed by average preservation
                let mut ys = Vec::with_capacity(agents);
                for n in &names[..agents - 1] {
                    ys.push(ctx.fresh(BasisKind::OperatorOutput, n)?);
                }
                let last = &VectorExpr::sum(&xs) - &VectorExpr::sum(&ys);
                ctx.define(&names[agents - 1], last.clone())?;
                ys.push(last);
                if let Oracle::Consensus(d) = ctx.oracle(oracle)? {
                    d.steps.push(ConsensusStep { x: xs, y: ys });
                }
            }
        }
    }

    for (k, c) in script.initial.iter().enumerate() {
        let e = match c {
            Condition::Distance { dist_sq, radius } => {
                ctx.resolve(dist_sq)?.norm_sq() - radius * radius
            }
            Condition::Terms { terms, bound } => {
                let mut e = QuadExpr::default();
                for t in terms {
                    e += &ctx.term(t)?;
                }
                e - *bound
            }
        };
        ctx.b.constrain(Constraint::le0(e, format!("init:{k}")));
    }
    let mut objective = QuadExpr::default();
    for t in &script.objective {
        objective += &ctx.term(t)?;
    }
    let Ctx { mut b, oracles, .. } = ctx;
    for (_, o) in oracles {
        match o {
            Oracle::Function(data, spec) if !data.points.is_empty() => {
                b.interpolate(Interpolation::Function { data, spec })
            }
            Oracle::Operator(data, spec) if !data.points.is_empty() => {
                b.interpolate(Interpolation::Operator { data, spec })
            }
            Oracle::Linear(d) if !(d.forward.is_empty() && d.adjoint.is_empty()) => {
                b.interpolate(Interpolation::LinearMap(d))
            }
            Oracle::Consensus(d) if !d.steps.is_empty() => {
                b.interpolate(Interpolation::Consensus(d))
            }
            _ => {}
        }
    }
    b.maximize(objective);
    b.meta("method", "custom");
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> SchemeConfig {
        serde_json::from_str(s).unwrap()
    }

    const GD1: &str = r#"{
      "oracles": [{"kind": "function", "name": "f",
                   "class": {"family": "smooth-strongly-convex", "mu": 0, "L": 1}}],
      "steps": [
        {"op": "point", "name": "x0"},
        {"op": "grad", "oracle": "f", "at": "x0", "name": "g0", "value": "f0"},
        {"op": "let", "name": "x1", "expr": {"x0": 1, "g0": -1}},
        {"op": "grad", "oracle": "f", "at": "x1", "name": "g1", "value": "f1"},
        {"op": "optimum", "oracles": ["f"], "values": ["fs"]}
      ],
      "initial": [{"dist_sq": "x0", "radius": 1}],
      "objective": [{"value": "f1"}, {"value": "fs", "coef": -1}]
    }"#;

    #[test]
    fn gradient_script_builds() {
        let p = build_custom_method(&parse(GD1)).unwrap();
        assert_eq!(p.basis().len(), 3);
        assert_eq!(p.scalars().len(), 3);
        assert_eq!(p.constraints().len(), 7);
    }

    #[test]
    fn string_coefficient_is_non_affine() {
        let s = GD1.replace(r#""g0": -1"#, r#""g0": "-x0""#);
        assert!(matches!(
            build_custom_method(&parse(&s)),
            Err(PepError::NonAffine(_))
        ));
    }

    #[test]
    fn undeclared_oracle() {
        let s = GD1.replace(
            r#""oracle": "f", "at": "x1""#,
            r#""oracle": "h", "at": "x1""#,
        );
        assert!(matches!(
            build_custom_method(&parse(&s)),
            Err(PepError::UndeclaredOracle(o)) if o == "h"
        ));
    }

    #[test]
    fn unknown_step_field_is_rejected() {
        let s = GD1.replace(
            r#"{"op": "point", "name": "x0"}"#,
            r#"{"op": "point", "nmae": "x0"}"#,
        );
        assert!(serde_json::from_str::<SchemeConfig>(&s).is_err());
    }
}
