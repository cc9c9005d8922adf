//! Conditional `L^p` norms `E[|x|^p | F]^(1/p)`, the neighborhoods they
//! generate, and the random distance to a convex body.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{RcaError, Result};
use crate::geometry::ConvexBody;
use crate::par;
use crate::prob::{RandVar, Strata, TOL_ORACLE};
use crate::report::{CheckRecord, Report, Witness};
use crate::rng::trial_rng;

/// Distances below this are reported as exactly zero.
pub const DISTANCE_FLOOR: f64 = 1e-9;

/// The conditional norm with exponent `p` in `[1, inf]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalNorm {
    p: f64,
}

impl ConditionalNorm {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(RcaError::InvalidParameter(format!(
                "norm exponent must be >= 1 (got {p})"
            )));
        }
        Ok(Self { p })
    }

    pub fn sup() -> Self {
        Self { p: f64::INFINITY }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Norm of within-block coordinates under conditional weights `w`.
    pub fn block_norm(&self, local: &[f64], w: &[f64]) -> f64 {
        crate::geometry::weighted_pnorm(local, w, self.p)
    }

    pub fn eval(&self, strata: &Strata, x: &RandVar) -> Result<RandVar> {
        strata.check_len(x)?;
        x.check_finite()?;
        let vals: Vec<f64> = (0..strata.block_count())
            .map(|b| self.block_norm(&strata.restrict(x, b), &strata.block_weights(b)))
            .collect();
        Ok(strata.broadcast(&vals))
    }
}

/// `|||x|||_p` as an F-measurable random variable.
pub fn cond_norm(strata: &Strata, x: &RandVar, norm: ConditionalNorm) -> Result<RandVar> {
    norm.eval(strata, x)
}

/// Which neighborhood system [`ball_membership`] tests.
#[derive(Debug, Clone, PartialEq)]
pub enum BallMode {
    /// `|||x||| <= radius` atomwise, radius measurable and positive.
    Tc { radius: RandVar },
    /// `P{ |||x||| < eps } > 1 - lambda`.
    EpsLambda { eps: f64, lambda: f64 },
}

pub fn ball_membership(
    strata: &Strata,
    x: &RandVar,
    norm: ConditionalNorm,
    mode: &BallMode,
) -> Result<bool> {
    let nx = norm.eval(strata, x)?;
    match mode {
        BallMode::Tc { radius } => {
            strata.check_measurable(radius, 0.0)?;
            if radius.values().iter().any(|&r| !(r > 0.0)) {
                return Err(RcaError::InvalidParameter("radius must be strictly positive".into()));
            }
            Ok(nx.le(radius, 0.0))
        }
        BallMode::EpsLambda { eps, lambda } => {
            if !(*eps > 0.0) || !(*lambda > 0.0 && *lambda < 1.0) {
                return Err(RcaError::InvalidParameter(format!(
                    "need eps > 0 and 0 < lambda < 1 (got eps = {eps}, lambda = {lambda})"
                )));
            }
            let mass: f64 = (0..strata.atom_count())
                .filter(|&a| nx[a] < *eps)
                .map(|a| strata.space().prob(a))
                .sum();
            Ok(mass > 1.0 - lambda)
        }
    }
}

/// Blockwise infimum of `|||x - m|||` over `m` in the body.
pub fn random_distance(
    strata: &Strata,
    x: &RandVar,
    body: &ConvexBody,
    norm: ConditionalNorm,
) -> Result<RandVar> {
    body.validate(strata)?;
    strata.check_len(x)?;
    x.check_finite()?;
    let vals = par::try_map_range(strata.block_count(), |b| {
        let z = strata.restrict(x, b);
        let w = strata.block_weights(b);
        let d = body.block(b).distance(&z, &w, norm.p())?;
        Ok::<_, RcaError>(if d < DISTANCE_FLOOR { 0.0 } else { d })
    })?;
    Ok(strata.broadcast(&vals))
}

/// Randomized check of the module-norm axioms: homogeneity under measurable
/// scalars, the triangle inequality, and definiteness.
pub fn rnm_axiom_check(strata: &Strata, norm: ConditionalNorm, trials: usize, seed: u64) -> Result<Report> {
    struct Trial {
        homog: Option<Witness>,
        tri: Option<Witness>,
        definite: Option<Witness>,
    }
    let outcomes = par::try_map_range(trials, |i| {
        let mut rng = trial_rng(seed, i);
        let x = strata.random_vector(&mut rng, -5.0, 5.0);
        let y = strata.random_vector(&mut rng, -5.0, 5.0);
        let xi = if rng.gen_bool(0.3) {
            strata.random_event(&mut rng).as_randvar()
        } else {
            strata.random_measurable(&mut rng, -3.0, 3.0)
        };
        let nx = norm.eval(strata, &x)?;
        let lhs = norm.eval(strata, &xi.mul(&x))?;
        let rhs = xi.abs().mul(&nx);
        let homog = (!lhs.approx_eq(&rhs, TOL_ORACLE)).then(|| {
            Witness::new("|||xi x||| != |xi| |||x|||")
                .trial(seed, i)
                .input("x", &x)
                .input("xi", &xi)
                .compare(strata, &lhs, &rhs, TOL_ORACLE, true)
        });
        let lhs = norm.eval(strata, &x.add(&y))?;
        let rhs = nx.add(&norm.eval(strata, &y)?);
        let tri = (!lhs.le(&rhs, TOL_ORACLE)).then(|| {
            Witness::new("|||x + y||| > |||x||| + |||y|||")
                .trial(seed, i)
                .input("x", &x)
                .input("y", &y)
                .compare(strata, &lhs, &rhs, TOL_ORACLE, false)
        });
        // zero x on a random event; the norm must vanish exactly there and nowhere else
        let ev = strata.random_event(&mut rng);
        let z = ev.complement().apply(&x);
        let nz = norm.eval(strata, &z)?;
        let definite = (0..strata.atom_count())
            .find(|&a| {
                let block_zero = strata.block(strata.block_of(a)).iter().all(|&c| z[c] == 0.0);
                (nz[a] == 0.0) != block_zero
            })
            .map(|a| {
                Witness::new("norm zero exactly where x vanishes on the block")
                    .trial(seed, i)
                    .input("x", &z)
                    .row(a, strata.block_of(a), nz[a], 0.0)
            });
        Ok::<_, RcaError>(Trial { homog, tri, definite })
    })?;
    let mut report = Report::new();
    let mut homog = CheckRecord::new("norm.homogeneity", "module homogeneity of a random norm").checked(trials);
    let mut tri = CheckRecord::new("norm.triangle", "triangle inequality of a random norm").checked(trials);
    let mut def = CheckRecord::new("norm.definiteness", "definiteness of a random norm").checked(trials);
    for t in outcomes {
        if let Some(w) = t.homog {
            homog.fail(w);
        }
        if let Some(w) = t.tri {
            tri.fail(w);
        }
        if let Some(w) = t.definite {
            def.fail(w);
        }
    }
    report.push(homog);
    report.push(tri);
    report.push(def);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BlockSet;

    fn s() -> Strata {
        Strata::uniform_blocks(&[2, 2]).unwrap()
    }

    fn x() -> RandVar {
        RandVar::new(vec![1.0, 2.0, 3.0, 4.0])
    }

    #[test]
    fn cond_norm_examples() {
        let s = s();
        assert_eq!(cond_norm(&s, &x(), ConditionalNorm::sup()).unwrap().values(), &[2.0, 2.0, 4.0, 4.0]);
        let n1 = cond_norm(&s, &x(), ConditionalNorm::new(1.0).unwrap()).unwrap();
        assert!(n1.approx_eq(&RandVar::new(vec![1.5, 1.5, 3.5, 3.5]), 1e-15));
        // per block: sqrt((1 + 4)/2), sqrt((9 + 16)/2)
        let n2 = cond_norm(&s, &x(), ConditionalNorm::new(2.0).unwrap()).unwrap();
        let (a, b) = (2.5f64.sqrt(), 12.5f64.sqrt());
        assert!(n2.approx_eq(&RandVar::new(vec![a, a, b, b]), 1e-15));
        assert!((a - 1.5811).abs() < 1e-4 && (b - 3.5355).abs() < 1e-4);
        assert!(ConditionalNorm::new(0.5).is_err());
    }

    #[test]
    fn triangle_example() {
        let s = s();
        let n = ConditionalNorm::new(1.0).unwrap();
        let x = RandVar::new(vec![1.0, -1.0, 0.0, 0.0]);
        let y = RandVar::new(vec![-1.0, 1.0, 0.0, 0.0]);
        assert_eq!(cond_norm(&s, &x.add(&y), n).unwrap().values(), &[0.0; 4]);
        let sum = cond_norm(&s, &x, n).unwrap().add(&cond_norm(&s, &y, n).unwrap());
        assert_eq!(sum.values(), &[2.0, 2.0, 0.0, 0.0]);
    }

    #[test]
    fn ball_examples() {
        let s = s();
        let r3 = BallMode::Tc { radius: RandVar::constant(4, 3.0) };
        assert!(ball_membership(&s, &RandVar::zeros(4), ConditionalNorm::sup(), &r3).unwrap());
        assert!(!ball_membership(&s, &x(), ConditionalNorm::sup(), &r3).unwrap());
        let el = BallMode::EpsLambda { eps: 3.0, lambda: 0.6 };
        assert!(ball_membership(&s, &x(), ConditionalNorm::sup(), &el).unwrap());
        let bad = BallMode::EpsLambda { eps: 3.0, lambda: 1.0 };
        assert!(ball_membership(&s, &x(), ConditionalNorm::sup(), &bad).is_err());
    }

    #[test]
    fn distance_examples() {
        let s = s();
        let unit = ConvexBody::atom_box(&s, 0.0, 1.0);
        let x = RandVar::new(vec![2.0, 0.5, 0.5, 0.5]);
        let d = random_distance(&s, &x, &unit, ConditionalNorm::sup()).unwrap();
        assert_eq!(d.values(), &[1.0, 1.0, 0.0, 0.0]);
        let inside = RandVar::new(vec![0.2, 0.5, 1.0, 0.0]);
        for p in [1.0, 2.0, 3.0, f64::INFINITY] {
            let n = ConditionalNorm::new(p).unwrap();
            assert_eq!(random_distance(&s, &inside, &unit, n).unwrap().values(), &[0.0; 4]);
        }
        let origin = ConvexBody::uniform(&s, |n| BlockSet::hull(vec![vec![0.0; n]]));
        for p in [1.0, 2.0, 3.0, f64::INFINITY] {
            let n = ConditionalNorm::new(p).unwrap();
            let d = random_distance(&s, &x, &origin, n).unwrap();
            assert!(d.approx_eq(&cond_norm(&s, &x, n).unwrap(), 1e-9), "p = {p}");
        }
    }

    #[test]
    fn axioms_hold() {
        let s = Strata::new(
            crate::prob::FiniteProbSpace::new(vec![0.1, 0.2, 0.3, 0.15, 0.25]).unwrap(),
            crate::prob::SigmaAlgebra::new(vec![0, 0, 1, 1, 1]).unwrap(),
        )
        .unwrap();
        for p in [1.0, 1.5, 2.0, 4.0, f64::INFINITY] {
            let r = rnm_axiom_check(&s, ConditionalNorm::new(p).unwrap(), 200, 3).unwrap();
            assert!(r.passed(), "p = {p}: {:?}", r.failures().collect::<Vec<_>>());
        }
    }
}
