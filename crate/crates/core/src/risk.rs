//! Conditional convex risk measures and their axiom suite.
//!
//! Every shipped family is monotone, cash invariant for measurable shifts,
//! local, and convex with measurable weights. Two deliberately broken
//! families ship as negative controls so that the suites can be shown to
//! fail when they should.

use std::fmt;

use rand::Rng;

use crate::error::{RcaError, Result};
use crate::par;
use crate::prob::{Oracle, RandVar, Strata, TOL_ORACLE};
use crate::report::{CheckRecord, Report, Witness};
use crate::rng::trial_rng;

/// Tolerance used when validating a density `y <= 0, E[y | F] = -1`.
pub const DENSITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum RiskFamily {
    /// `-E[x | F]`
    NegCondExpect,
    /// `(1/beta) log E[exp(-beta x) | F]`
    Entropic { beta: f64 },
    /// Average value at risk at a measurable level `lambda` in `(0, 1]`,
    /// one value per block (or a single value for all blocks).
    Avar { lambda: Vec<f64> },
    /// Blockwise maximum of `-x`.
    WorstCase,
    /// `max_k E[x y_k | F]` over a finite set of feasible densities.
    ScenarioRobust { densities: Vec<RandVar> },
    /// Negative control: `-E[x | F]^2`, neither convex nor cash invariant.
    BrokenSquare,
    /// Negative control: the unconditional `-E[x]`, not local.
    NonLocalMean,
}

impl RiskFamily {
    pub fn name(&self) -> &'static str {
        match self {
            Self::NegCondExpect => "neg_cond_expect",
            Self::Entropic { .. } => "entropic",
            Self::Avar { .. } => "avar",
            Self::WorstCase => "worst_case",
            Self::ScenarioRobust { .. } => "scenario_robust",
            Self::BrokenSquare => "broken_square",
            Self::NonLocalMean => "nonlocal_mean",
        }
    }

    pub fn is_control(&self) -> bool {
        matches!(self, Self::BrokenSquare | Self::NonLocalMean)
    }

    /// Parse the textual form, e.g. `entropic(beta=1)`, `avar(lambda=[0.5,0.25])`,
    /// `scenario_robust(y1, y2)`. Density names are looked up with `resolve`.
    pub fn parse(text: &str, resolve: impl Fn(&str) -> Option<RandVar>) -> Result<Self> {
        let text = text.trim();
        let (name, args) = match text.find('(') {
            Some(open) => {
                let close = text
                    .rfind(')')
                    .filter(|&c| c > open && c == text.len() - 1)
                    .ok_or_else(|| bad_spec(text, "unbalanced parentheses"))?;
                (text[..open].trim(), text[open + 1..close].trim())
            }
            None => (text, ""),
        };
        let kv = |key: &str| -> Result<&str> {
            let rest = args
                .strip_prefix(key)
                .map(str::trim_start)
                .and_then(|r| r.strip_prefix('='))
                .ok_or_else(|| bad_spec(text, &format!("expected `{key}=...`")))?;
            Ok(rest.trim())
        };
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| bad_spec(text, &format!("`{s}` is not a number")))
        };
        let no_args = |fam: Self| {
            if args.is_empty() {
                Ok(fam)
            } else {
                Err(bad_spec(text, "takes no parameters"))
            }
        };
        match name {
            "neg_cond_expect" => no_args(Self::NegCondExpect),
            "worst_case" => no_args(Self::WorstCase),
            "broken_square" => no_args(Self::BrokenSquare),
            "nonlocal_mean" => no_args(Self::NonLocalMean),
            "entropic" => Ok(Self::Entropic { beta: num(kv("beta")?)? }),
            "avar" => {
                let v = kv("lambda")?;
                let lambda = if let Some(list) = v.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                    list.split(',').map(|s| num(s.trim())).collect::<Result<Vec<_>>>()?
                } else {
                    vec![num(v)?]
                };
                Ok(Self::Avar { lambda })
            }
            "scenario_robust" => {
                let densities = args
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|n| resolve(n).ok_or_else(|| bad_spec(text, &format!("unknown density `{n}`"))))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self::ScenarioRobust { densities })
            }
            other => Err(bad_spec(text, &format!("unknown family `{other}`"))),
        }
    }
}

fn bad_spec(text: &str, why: &str) -> RcaError {
    RcaError::InvalidParameter(format!("risk spec `{text}`: {why}"))
}

impl fmt::Display for RiskFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Entropic { beta } => write!(f, "entropic(beta={beta})"),
            Self::Avar { lambda } if lambda.len() == 1 => write!(f, "avar(lambda={})", lambda[0]),
            Self::Avar { lambda } => {
                let parts: Vec<String> = lambda.iter().map(f64::to_string).collect();
                write!(f, "avar(lambda=[{}])", parts.join(","))
            }
            Self::ScenarioRobust { densities } => write!(f, "scenario_robust({} densities)", densities.len()),
            other => f.write_str(other.name()),
        }
    }
}

/// Per block: `y <= 0` and `E[y | F] = -1` within `tol`.
pub fn density_feasibility(strata: &Strata, y: &RandVar, tol: f64) -> Vec<bool> {
    (0..strata.block_count())
        .map(|b| {
            let block = strata.block(b);
            block.iter().all(|&a| y[a].is_finite() && y[a] <= tol)
                && (strata.block_mean(y, b) + 1.0).abs() <= tol
        })
        .collect()
}

/// A dual variable `y <= 0` with `E[y | F] = -1`, equivalently `y = -dQ/dP`
/// for a probability `Q` agreeing with `P` on the conditioning algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct DualDensity(RandVar);

impl DualDensity {
    pub fn new(strata: &Strata, y: RandVar) -> Result<Self> {
        strata.check_len(&y)?;
        let feas = density_feasibility(strata, &y, DENSITY_TOL);
        match feas.iter().position(|ok| !ok) {
            Some(b) => Err(RcaError::Infeasible(format!(
                "block {b}: need y <= 0 and E[y | F] = -1 (block mean {})",
                strata.block_mean(&y, b)
            ))),
            None => Ok(Self(y)),
        }
    }

    pub fn y(&self) -> &RandVar {
        &self.0
    }

    pub fn into_inner(self) -> RandVar {
        self.0
    }

    /// `Q`-density `dQ/dP = -y`.
    pub fn q_density(&self) -> RandVar {
        self.0.neg()
    }
}

/// A risk family bound to a probability space and conditioning algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskMeasure {
    family: RiskFamily,
    strata: Strata,
}

impl RiskMeasure {
    pub fn new(strata: &Strata, family: RiskFamily) -> Result<Self> {
        let family = match family {
            RiskFamily::Entropic { beta } if !(beta > 0.0 && beta.is_finite()) => {
                return Err(RcaError::InvalidParameter(format!("entropic needs beta > 0 (got {beta})")));
            }
            RiskFamily::Avar { lambda } => {
                let lambda = match lambda.len() {
                    1 => vec![lambda[0]; strata.block_count()],
                    n if n == strata.block_count() => lambda,
                    n => {
                        return Err(RcaError::InvalidParameter(format!(
                            "avar needs 1 or {} levels (got {n})",
                            strata.block_count()
                        )))
                    }
                };
                if let Some(l) = lambda.iter().find(|l| !(**l > 0.0 && **l <= 1.0)) {
                    return Err(RcaError::InvalidParameter(format!("avar level must lie in (0, 1] (got {l})")));
                }
                RiskFamily::Avar { lambda }
            }
            RiskFamily::ScenarioRobust { densities } => {
                if densities.is_empty() {
                    return Err(RcaError::Empty("scenario densities"));
                }
                for y in &densities {
                    DualDensity::new(strata, y.clone())?;
                }
                RiskFamily::ScenarioRobust { densities }
            }
            other => other,
        };
        Ok(Self {
            family,
            strata: strata.clone(),
        })
    }

    pub fn family(&self) -> &RiskFamily {
        &self.family
    }

    pub fn strata(&self) -> &Strata {
        &self.strata
    }

    pub fn label(&self) -> String {
        self.family.to_string()
    }

    pub fn evaluate(&self, x: &RandVar) -> Result<RandVar> {
        let s = &self.strata;
        s.check_len(x)?;
        x.check_finite()?;
        let vals: Vec<f64> = match &self.family {
            RiskFamily::NegCondExpect => (0..s.block_count()).map(|b| -s.block_mean(x, b)).collect(),
            RiskFamily::Entropic { beta } => (0..s.block_count())
                .map(|b| entropic_block(&s.restrict(x, b), &s.block_weights(b), *beta))
                .collect(),
            RiskFamily::Avar { lambda } => (0..s.block_count())
                .map(|b| {
                    let z = s.restrict(x, b);
                    let w = s.block_weights(b);
                    let d = avar_block_density(&z, &w, lambda[b]);
                    -z.iter().zip(&w).zip(&d).map(|((zi, wi), di)| zi * wi * di).sum::<f64>()
                })
                .collect(),
            RiskFamily::WorstCase => (0..s.block_count())
                .map(|b| s.block(b).iter().map(|&a| -x[a]).fold(f64::NEG_INFINITY, f64::max))
                .collect(),
            RiskFamily::ScenarioRobust { densities } => (0..s.block_count())
                .map(|b| {
                    densities
                        .iter()
                        .map(|y| s.block_mean(&x.mul(y), b))
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect(),
            RiskFamily::BrokenSquare => (0..s.block_count()).map(|b| -s.block_mean(x, b).powi(2)).collect(),
            RiskFamily::NonLocalMean => {
                let m = -s.space().expect(x);
                vec![m; s.block_count()]
            }
        };
        Ok(s.broadcast(&vals))
    }

    /// The optimal density `y'` of the average-value-at-risk program
    /// `sup { E[-x y' | F] : 0 <= y' <= 1/lambda, E[y' | F] = 1 }`.
    pub fn avar_density(&self, x: &RandVar) -> Result<RandVar> {
        let RiskFamily::Avar { lambda } = &self.family else {
            return Err(RcaError::Unsupported("avar density of a non-avar family".into()));
        };
        let s = &self.strata;
        s.check_len(x)?;
        x.check_finite()?;
        let per_block: Vec<Vec<f64>> = (0..s.block_count())
            .map(|b| avar_block_density(&s.restrict(x, b), &s.block_weights(b), lambda[b]))
            .collect();
        Ok(s.assemble(&per_block))
    }
}

impl Oracle for RiskMeasure {
    fn eval(&self, x: &RandVar) -> Result<RandVar> {
        self.evaluate(x)
    }
}

/// Log-sum-exp shifted by the block maximum of `-beta x`.
pub(crate) fn entropic_block(z: &[f64], w: &[f64], beta: f64) -> f64 {
    let shift = z.iter().map(|v| -beta * v).fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = z.iter().zip(w).map(|(v, wi)| wi * (-beta * v - shift).exp()).sum();
    (s.ln() + shift) / beta
}

/// Greedy fill: atoms by ascending outcome (ties by index) receive density up
/// to the cap `1/lambda` until the conditional mass reaches one.
pub(crate) fn avar_block_density(z: &[f64], w: &[f64], lambda: f64) -> Vec<f64> {
    let cap = 1.0 / lambda;
    let mut order: Vec<usize> = (0..z.len()).collect();
    order.sort_by(|&i, &j| z[i].total_cmp(&z[j]).then(i.cmp(&j)));
    let mut d = vec![0.0; z.len()];
    let mut remaining = 1.0f64;
    for i in order {
        if remaining <= 0.0 {
            break;
        }
        let take = cap.min(remaining / w[i]);
        d[i] = take;
        remaining -= take * w[i];
        if take < cap {
            break;
        }
    }
    d
}

/// Evaluate a risk-measure oracle on a block family and report the axioms.
pub fn axiom_check(measure: &RiskMeasure, trials: usize, seed: u64) -> Result<Report> {
    let label = measure.label();
    oracle_axiom_check(measure, measure.strata(), &label, trials, seed)
}

/// Randomized axiom suite for any risk-measure oracle: monotonicity, cash
/// invariance, locality, convexity with measurable weights, and the
/// equivalence "measurably convex iff convex and local".
pub fn oracle_axiom_check<O: Oracle + ?Sized>(
    f: &O,
    strata: &Strata,
    label: &str,
    trials: usize,
    seed: u64,
) -> Result<Report> {
    #[derive(Default)]
    struct Outcome {
        monotone: Option<Witness>,
        cash: Option<Witness>,
        local: Option<Witness>,
        l0_convex: Option<Witness>,
        convex: Option<Witness>,
    }
    let s = strata;
    let tol = TOL_ORACLE;
    let outcomes = par::try_map_range(trials, |i| {
        let mut rng = trial_rng(seed, i);
        let mut out = Outcome::default();
        let x = s.random_vector(&mut rng, -5.0, 5.0);
        let y = s.random_vector(&mut rng, -5.0, 5.0);
        let fx = f.eval(&x)?;
        let fy = f.eval(&y)?;

        // x >= x - d  implies  f(x) <= f(x - d)
        let d = s.random_vector(&mut rng, 0.0, 3.0);
        let lower = x.sub(&d);
        let f_lower = f.eval(&lower)?;
        if !fx.le(&f_lower, tol) {
            out.monotone = Some(
                Witness::new("f(x) > f(x - d) with d >= 0")
                    .trial(seed, i)
                    .input("x", &x)
                    .input("d", &d)
                    .compare(s, &fx, &f_lower, tol, false),
            );
        }

        let m = s.random_measurable(&mut rng, -3.0, 3.0);
        let lhs = f.eval(&x.add(&m))?;
        let rhs = fx.sub(&m);
        if !lhs.approx_eq(&rhs, tol) {
            out.cash = Some(
                Witness::new("f(x + m) != f(x) - m")
                    .trial(seed, i)
                    .input("x", &x)
                    .input("m", &m)
                    .compare(s, &lhs, &rhs, tol, true),
            );
        }

        let ev = s.random_event(&mut rng);
        let lhs = ev.apply(&fx);
        let rhs = ev.apply(&f.eval(&ev.apply(&x))?);
        if !lhs.approx_eq(&rhs, tol) {
            out.local = Some(
                Witness::new("I_A f(x) != I_A f(I_A x)")
                    .trial(seed, i)
                    .input("x", &x)
                    .input("A", &ev.as_randvar())
                    .compare(s, &lhs, &rhs, tol, true),
            );
        }

        let xi = s.random_measurable(&mut rng, 0.0, 1.0);
        let one_minus = xi.map(|v| 1.0 - v);
        let mix = xi.mul(&x).add(&one_minus.mul(&y));
        let lhs = f.eval(&mix)?;
        let rhs = xi.mul(&fx).add(&one_minus.mul(&fy));
        if !lhs.le(&rhs, tol) {
            out.l0_convex = Some(
                Witness::new("f(xi x + (1 - xi) y) > xi f(x) + (1 - xi) f(y)")
                    .trial(seed, i)
                    .input("x", &x)
                    .input("y", &y)
                    .input("xi", &xi)
                    .compare(s, &lhs, &rhs, tol, false),
            );
        }

        let t: f64 = rng.gen_range(0.0..1.0);
        let mix = x.scale(t).add(&y.scale(1.0 - t));
        let lhs = f.eval(&mix)?;
        let rhs = fx.scale(t).add(&fy.scale(1.0 - t));
        if !lhs.le(&rhs, tol) {
            out.convex = Some(
                Witness::new(format!("f(t x + (1 - t) y) > t f(x) + (1 - t) f(y), t = {t}"))
                    .trial(seed, i)
                    .input("x", &x)
                    .input("y", &y)
                    .compare(s, &lhs, &rhs, tol, false),
            );
        }
        Ok::<_, RcaError>(out)
    })?;

    let mut mono = CheckRecord::new(format!("risk.{label}.monotone"), "monotonicity").checked(trials);
    let mut cash = CheckRecord::new(format!("risk.{label}.cash_invariant"), "cash invariance for measurable shifts").checked(trials);
    let mut local = CheckRecord::new(format!("risk.{label}.local"), "locality I_A f(x) = I_A f(I_A x)").checked(trials);
    let mut l0 = CheckRecord::new(format!("risk.{label}.l0_convex"), "convexity with measurable weights").checked(trials);
    let mut conv = CheckRecord::new(format!("risk.{label}.convex"), "ordinary convexity").checked(trials);
    for o in outcomes {
        for (rec, w) in [
            (&mut mono, o.monotone),
            (&mut cash, o.cash),
            (&mut local, o.local),
            (&mut l0, o.l0_convex),
            (&mut conv, o.convex),
        ] {
            if let Some(w) = w {
                rec.fail(w);
            }
        }
    }
    // measurably convex  <=>  convex and local; the two routes must agree
    let direct = l0.passed;
    let via_parts = conv.passed && local.passed;
    let mut equiv = CheckRecord::new(
        format!("risk.{label}.convex_local_equivalence"),
        "measurable convexity iff convexity plus locality",
    )
    .checked(trials)
    .detail(format!("direct = {direct}, convex and local = {via_parts}"));
    if direct != via_parts {
        equiv.fail(Witness::new("the direct test and the convex-plus-local test disagree"));
    }
    let mut report = Report::new();
    for r in [mono, cash, local, l0, conv, equiv] {
        report.push(r);
    }
    report.push(CheckRecord::by_finiteness(
        format!("risk.{label}.continuity_from_above"),
        "continuity from above",
    ));
    report.push(CheckRecord::by_finiteness(format!("risk.{label}.fatou"), "Fatou property"));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s() -> Strata {
        Strata::uniform_blocks(&[2, 2]).unwrap()
    }

    fn x() -> RandVar {
        RandVar::new(vec![1.0, 2.0, 3.0, 4.0])
    }

    #[test]
    fn entropic_examples() {
        let s = s();
        let f = RiskMeasure::new(&s, RiskFamily::Entropic { beta: 1.0 }).unwrap();
        let c = f.evaluate(&RandVar::constant(4, 2.5)).unwrap();
        assert!(c.approx_eq(&RandVar::constant(4, -2.5), 1e-15));
        let v = f.evaluate(&x()).unwrap();
        // ln((e^-1 + e^-2)/2) and ln((e^-3 + e^-4)/2), evaluated directly
        let a = (((-1.0f64).exp() + (-2.0f64).exp()) / 2.0).ln();
        let b = (((-3.0f64).exp() + (-4.0f64).exp()) / 2.0).ln();
        assert!((v[0] - a).abs() < 1e-14 && (v[2] - b).abs() < 1e-14);
        assert!((a + 1.37988).abs() < 1e-5 && (b + 3.37988).abs() < 1e-5);
    }

    #[test]
    fn entropic_survives_large_inputs() {
        let s = s();
        let f = RiskMeasure::new(&s, RiskFamily::Entropic { beta: 2.0 }).unwrap();
        let v = f.evaluate(&RandVar::new(vec![-800.0, -799.0, 900.0, 901.0])).unwrap();
        assert!(v.is_finite());
        assert!(v[0] > 799.0 && v[0] < 800.0);
    }

    #[test]
    fn avar_example_against_vertex_enumeration() {
        let s = s();
        let f = RiskMeasure::new(&s, RiskFamily::Avar { lambda: vec![0.5] }).unwrap();
        let v = f.evaluate(&x()).unwrap();
        assert_eq!(v[0], -1.0);
        // feasible polytope {0 <= y <= 2, (y1 + y2)/2 = 1} has vertices (2,0), (0,2)
        let brute = [(2.0, 0.0), (0.0, 2.0)]
            .iter()
            .map(|(a, b)| -(1.0 * a + 2.0 * b) / 2.0)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(v[0], brute);
        let d = f.avar_density(&x()).unwrap();
        assert_eq!(&d.values()[..2], &[2.0, 0.0]);
    }

    #[test]
    fn avar_full_level_is_neg_mean() {
        let s = Strata::new(
            crate::prob::FiniteProbSpace::new(vec![0.1, 0.2, 0.3, 0.25, 0.15]).unwrap(),
            crate::SigmaAlgebra::new(vec![0, 1, 0, 1, 0]).unwrap(),
        )
        .unwrap();
        let av = RiskMeasure::new(&s, RiskFamily::Avar { lambda: vec![1.0] }).unwrap();
        let ne = RiskMeasure::new(&s, RiskFamily::NegCondExpect).unwrap();
        for i in 0..50 {
            let x = s.random_vector(&mut trial_rng(4, i), -5.0, 5.0);
            assert!(av.evaluate(&x).unwrap().approx_eq(&ne.evaluate(&x).unwrap(), 1e-14));
        }
    }

    #[test]
    fn parse_round_trip() {
        let none = |_: &str| None;
        for text in ["neg_cond_expect", "entropic(beta=0.5)", "avar(lambda=0.25)", "avar(lambda=[0.5,1])", "worst_case"] {
            let fam = RiskFamily::parse(text, none).unwrap();
            assert_eq!(fam.to_string(), text);
        }
        assert!(RiskFamily::parse("entropic(gamma=1)", none).is_err());
        assert!(RiskFamily::parse("mystery", none).is_err());
        let y = RandVar::constant(4, -1.0);
        let fam = RiskFamily::parse("scenario_robust(q)", |n| (n == "q").then(|| y.clone())).unwrap();
        assert_eq!(fam, RiskFamily::ScenarioRobust { densities: vec![y] });
    }

    #[test]
    fn invalid_parameters() {
        let s = s();
        assert!(RiskMeasure::new(&s, RiskFamily::Entropic { beta: 0.0 }).is_err());
        assert!(RiskMeasure::new(&s, RiskFamily::Avar { lambda: vec![1.5] }).is_err());
        assert!(RiskMeasure::new(&s, RiskFamily::Avar { lambda: vec![0.5, 0.5, 0.5] }).is_err());
        let bad = RandVar::new(vec![-2.0, 0.5, -1.0, -1.0]);
        assert!(RiskMeasure::new(&s, RiskFamily::ScenarioRobust { densities: vec![bad] }).is_err());
    }

    #[test]
    fn shipped_families_pass_axioms() {
        let s = Strata::uniform_blocks(&[3, 2, 1]).unwrap();
        let q = RandVar::new(vec![-3.0, 0.0, 0.0, -0.5, -1.5, -1.0]);
        for fam in [
            RiskFamily::NegCondExpect,
            RiskFamily::Entropic { beta: 0.5 },
            RiskFamily::Entropic { beta: 2.0 },
            RiskFamily::Avar { lambda: vec![0.25, 0.5, 1.0] },
            RiskFamily::WorstCase,
            RiskFamily::ScenarioRobust { densities: vec![RandVar::constant(6, -1.0), q.clone()] },
        ] {
            let f = RiskMeasure::new(&s, fam).unwrap();
            let r = axiom_check(&f, 300, 17).unwrap();
            assert!(r.passed(), "{}: {:?}", f.label(), r.failures().collect::<Vec<_>>());
        }
    }

    #[test]
    fn broken_control_fails_with_witness() {
        let s = s();
        let f = RiskMeasure::new(&s, RiskFamily::BrokenSquare).unwrap();
        // at x = 1, m = 1: f(x + m) = -4 but f(x) - m = -2
        let lhs = f.evaluate(&RandVar::constant(4, 2.0)).unwrap();
        let rhs = f.evaluate(&RandVar::constant(4, 1.0)).unwrap().sub(&RandVar::constant(4, 1.0));
        assert_eq!((lhs[0], rhs[0]), (-4.0, -2.0));
        let r = axiom_check(&f, 100, 1).unwrap();
        let cash = r.get("risk.broken_square.cash_invariant").unwrap();
        assert!(!cash.passed && !cash.witnesses.is_empty());
        assert!(!r.get("risk.broken_square.l0_convex").unwrap().passed);
        assert!(r.get("risk.broken_square.convex_local_equivalence").unwrap().passed);
    }

    #[test]
    fn nonlocal_control_fails_locality() {
        let s = s();
        let f = RiskMeasure::new(&s, RiskFamily::NonLocalMean).unwrap();
        let r = axiom_check(&f, 100, 2).unwrap();
        assert!(!r.get("risk.nonlocal_mean.local").unwrap().passed);
        assert!(r.get("risk.nonlocal_mean.convex").unwrap().passed);
        assert!(r.get("risk.nonlocal_mean.convex_local_equivalence").unwrap().passed);
    }
}
