//! Conditional conjugates, biconjugates and dual representations.
//!
//! The pairing between a position `x` and a dual vector `y` is the
//! conditional expectation `E[x y | F]`. Feasible dual densities satisfy
//! `y <= 0` and `E[y | F] = -1`, so `-y` is the density of a probability that
//! agrees with `P` on `F`.
//!
//! Shipped families use closed forms; anything else goes through the
//! brute-force oracle in [`ascent`]. The oracle exists mainly to certify the
//! closed forms.

mod ascent;
mod domain;
mod dual;

pub use ascent::{biconjugate_ascent, conjugate_ascent, AscentConfig};
pub use domain::{classify_domain, closedness_check, DomainClassification};
pub use dual::VERTEX_BUDGET;

use rand::Rng;
use serde::Serialize;

use crate::error::{RcaError, Result};
use crate::par;
use crate::prob::{is_local, Indicator, RandVar, Strata, TOL_OPT};
use crate::report::{CheckRecord, Report, Witness};
use crate::risk::{RiskFamily, RiskMeasure};
use crate::rng::trial_rng;

/// A conjugate or biconjugate value with the point attaining it, if any.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugateValue {
    pub value: RandVar,
    pub maximizer: Option<RandVar>,
}

impl ConjugateValue {
    /// Broadcast per-block results; the maximizer survives only if every block has one.
    pub(crate) fn from_blocks(strata: &Strata, per_block: Vec<(f64, Option<Vec<f64>>)>) -> Self {
        let values: Vec<f64> = per_block.iter().map(|(v, _)| *v).collect();
        let maximizer = per_block
            .into_iter()
            .map(|(_, m)| m)
            .collect::<Option<Vec<_>>>()
            .map(|parts| strata.assemble(&parts));
        Self {
            value: strata.broadcast(&values),
            maximizer,
        }
    }
}

/// A dual vector acting by `x -> E[x u | F]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subgradient {
    pub u: RandVar,
}

/// Closed-form conjugate, `None` when the family has none.
pub fn conjugate_closed_form(measure: &RiskMeasure, y: &RandVar) -> Result<Option<ConjugateValue>> {
    let s = measure.strata();
    s.check_len(y)?;
    if y.values().iter().any(|v| v.is_nan()) {
        return Err(RcaError::NonFinite {
            atom: y.values().iter().position(|v| v.is_nan()).unwrap_or(0),
            value: f64::NAN,
        });
    }
    let mut per_block = Vec::with_capacity(s.block_count());
    for b in 0..s.block_count() {
        let yb = s.restrict(y, b);
        let Some(v) = dual::block_conjugate(measure, b, &yb) else {
            return Ok(None);
        };
        per_block.push((v, dual::block_conjugate_maximizer(measure, &yb, v)));
    }
    Ok(Some(ConjugateValue::from_blocks(s, per_block)))
}

/// `f*(y) = sup_x E[x y | F] - f(x)`, per block. Closed form where known,
/// otherwise the default ascent oracle.
pub fn conjugate(measure: &RiskMeasure, y: &RandVar) -> Result<ConjugateValue> {
    match conjugate_closed_form(measure, y)? {
        Some(c) => Ok(c),
        None => conjugate_ascent(measure, measure.strata(), y, &AscentConfig::default()),
    }
}

/// `f**(x)`, searching the closed-form dual domain for shipped families and
/// falling back to the ascent oracle otherwise. The maximizer is the attaining `y`.
pub fn biconjugate(measure: &RiskMeasure, x: &RandVar) -> Result<ConjugateValue> {
    let s = measure.strata();
    s.check_len(x)?;
    x.check_finite()?;
    if measure.family().is_control() {
        return biconjugate_ascent(measure, s, x, &AscentConfig::default());
    }
    let per_block = par::try_map_range(s.block_count(), |b| {
        dual::block_biconjugate(measure, b, &s.restrict(x, b)).map(|(v, y)| (v, Some(y)))
    })?;
    Ok(ConjugateValue::from_blocks(s, per_block))
}

/// The attaining density of the dual representation
/// `f(x) = max { E[x y | F] - f*(y) : y <= 0, E[y | F] = -1 }`, and its value.
pub fn dual_representation(measure: &RiskMeasure, x: &RandVar) -> Result<(RandVar, crate::risk::DualDensity)> {
    let s = measure.strata();
    s.check_len(x)?;
    x.check_finite()?;
    let per_block: Vec<Vec<f64>> = match measure.family() {
        RiskFamily::NegCondExpect => (0..s.block_count()).map(|b| vec![-1.0; s.block(b).len()]).collect(),
        RiskFamily::Entropic { beta } => (0..s.block_count())
            .map(|b| {
                let z = s.restrict(x, b);
                let w = s.block_weights(b);
                let shift = z.iter().map(|v| -beta * v).fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = z.iter().map(|v| (-beta * v - shift).exp()).collect();
                let mean: f64 = e.iter().zip(&w).map(|(ei, wi)| ei * wi).sum();
                e.iter().map(|ei| -ei / mean).collect()
            })
            .collect(),
        RiskFamily::Avar { .. } => {
            let d = measure.avar_density(x)?;
            (0..s.block_count()).map(|b| s.restrict(&d.neg(), b)).collect()
        }
        RiskFamily::WorstCase => (0..s.block_count())
            .map(|b| {
                let z = s.restrict(x, b);
                let w = s.block_weights(b);
                let mut j = 0;
                for i in 1..z.len() {
                    if -z[i] > -z[j] {
                        j = i;
                    }
                }
                let mut y = vec![0.0; z.len()];
                y[j] = -1.0 / w[j];
                y
            })
            .collect(),
        RiskFamily::ScenarioRobust { densities } => (0..s.block_count())
            .map(|b| {
                let mut best = (f64::NEG_INFINITY, 0);
                for (k, d) in densities.iter().enumerate() {
                    let v = s.block_mean(&x.mul(d), b);
                    if v > best.0 {
                        best = (v, k);
                    }
                }
                s.restrict(&densities[best.1], b)
            })
            .collect(),
        RiskFamily::BrokenSquare | RiskFamily::NonLocalMean => {
            return Err(RcaError::Unsupported(format!(
                "{} is not a conditional convex risk measure",
                measure.family().name()
            )))
        }
    };
    let y = s.assemble(&per_block);
    let density = crate::risk::DualDensity::new(s, y)
        .map_err(|e| RcaError::Oracle(format!("dual maximizer is infeasible ({e}); this is a solver bug")))?;
    let fc = conjugate(measure, density.y())?;
    let value = s.pairing(x, density.y())?.zip_with(&fc.value, |p, c| p - c);
    Ok((value, density))
}

/// Minimal penalty `alpha(Q) = f*(y)` for `y = -dQ/dP`.
pub fn penalty(measure: &RiskMeasure, density: &crate::risk::DualDensity) -> Result<RandVar> {
    Ok(conjugate(measure, density.y())?.value)
}

/// Sample count for subgradient verification.
pub const SUBGRADIENT_SAMPLES: usize = 128;

/// The attaining dual density, verified as a subgradient on random points.
pub fn subgradient(measure: &RiskMeasure, x: &RandVar, seed: u64) -> Result<Subgradient> {
    let (_, density) = dual_representation(measure, x)?;
    let u = density.into_inner();
    let rec = verify_subgradient(measure, x, &u, SUBGRADIENT_SAMPLES, seed)?;
    if !rec.passed {
        return Err(RcaError::Oracle(format!(
            "subgradient inequality failed on {} samples; this is a solver bug",
            rec.metrics.get("violations").copied().unwrap_or(0.0)
        )));
    }
    Ok(Subgradient { u })
}

/// `E[(z - x) u | F] <= f(z) - f(x) + 1e-6` on random `z` near `x`.
pub fn verify_subgradient(
    measure: &RiskMeasure,
    x: &RandVar,
    u: &RandVar,
    samples: usize,
    seed: u64,
) -> Result<CheckRecord> {
    let s = measure.strata();
    let fx = measure.evaluate(x)?;
    let fails = par::try_map_range(samples, |i| {
        let mut rng = trial_rng(seed, i);
        let z = x.add(&s.random_vector(&mut rng, -5.0, 5.0));
        let lhs = s.pairing(&z.sub(x), u)?;
        let rhs = measure.evaluate(&z)?.sub(&fx);
        Ok::<_, RcaError>((!lhs.le(&rhs, TOL_OPT)).then(|| {
            Witness::new("E[(z - x) u | F] > f(z) - f(x)")
                .trial(seed, i)
                .input("z", &z)
                .compare(s, &lhs, &rhs, TOL_OPT, false)
        }))
    })?;
    Ok(CheckRecord::new(
        format!("conjugation.{}.subgradient", measure.label()),
        "the attaining dual density is a subgradient",
    )
    .checked(samples)
    .with_failures(fails.into_iter().flatten()))
}

/// A random feasible density in the domain of `f*`: a convex mix of the dual
/// maximizers at two random positions.
pub fn sample_domain_density<R: Rng + ?Sized>(measure: &RiskMeasure, rng: &mut R) -> Result<RandVar> {
    let s = measure.strata();
    let a = dual_representation(measure, &s.random_vector(rng, -5.0, 5.0))?.1.into_inner();
    let b = dual_representation(measure, &s.random_vector(rng, -5.0, 5.0))?.1.into_inner();
    let t = s.random_measurable(rng, 0.0, 1.0);
    Ok(t.mul(&a).add(&t.map(|v| 1.0 - v).mul(&b)))
}

/// Fenchel-Young: `E[x y | F] <= f(x) + f*(y)` for random feasible pairs,
/// with equality at the attaining density.
pub fn fenchel_young_check(measure: &RiskMeasure, trials: usize, seed: u64) -> Result<CheckRecord> {
    let s = measure.strata();
    let fails = par::try_map_range(trials, |i| {
        let mut rng = trial_rng(seed, i);
        let x = s.random_vector(&mut rng, -5.0, 5.0);
        let y = sample_domain_density(measure, &mut rng)?;
        let fx = measure.evaluate(&x)?;
        let lhs = s.pairing(&x, &y)?;
        let rhs = fx.add(&conjugate(measure, &y)?.value);
        let mut out = Vec::new();
        if !lhs.le(&rhs, TOL_OPT) {
            out.push(
                Witness::new("E[x y | F] > f(x) + f*(y)")
                    .trial(seed, i)
                    .input("x", &x)
                    .input("y", &y)
                    .compare(s, &lhs, &rhs, TOL_OPT, false),
            );
        }
        let (_, star) = dual_representation(measure, &x)?;
        let lhs = s.pairing(&x, star.y())?;
        let rhs = fx.add(&conjugate(measure, star.y())?.value);
        if !lhs.approx_eq(&rhs, TOL_OPT) {
            out.push(
                Witness::new("equality fails at the attaining density")
                    .trial(seed, i)
                    .input("x", &x)
                    .input("y", star.y())
                    .compare(s, &lhs, &rhs, TOL_OPT, true),
            );
        }
        Ok::<_, RcaError>(out)
    })?;
    Ok(CheckRecord::new(
        format!("conjugation.{}.fenchel_young", measure.label()),
        "Fenchel-Young inequality, tight at the subgradient",
    )
    .checked(trials)
    .with_failures(fails.into_iter().flatten()))
}

/// Tolerance for `|f** - f|` in the randomized biconjugation check.
pub const BICONJUGATE_TOL: f64 = 1e-5;

/// `f** = f` on random positions.
pub fn biconjugation_check(measure: &RiskMeasure, trials: usize, seed: u64) -> Result<CheckRecord> {
    let s = measure.strata();
    let gaps = par::try_map_range(trials, |i| {
        let x = s.random_vector(&mut trial_rng(seed, i), -5.0, 5.0);
        let fx = measure.evaluate(&x)?;
        let bi = biconjugate(measure, &x)?.value;
        let gap = bi.max_abs_diff(&fx);
        let w = (gap > BICONJUGATE_TOL).then(|| {
            Witness::new("f**(x) != f(x)")
                .trial(seed, i)
                .input("x", &x)
                .compare(s, &bi, &fx, BICONJUGATE_TOL, true)
        });
        Ok::<_, RcaError>((gap, w))
    })?;
    let max_gap = gaps.iter().map(|(g, _)| *g).fold(0.0, f64::max);
    Ok(CheckRecord::new(
        format!("conjugation.{}.biconjugate", measure.label()),
        "a closed convex local function equals its biconjugate",
    )
    .checked(trials)
    .metric("max_gap", max_gap)
    .with_failures(gaps.into_iter().filter_map(|(_, w)| w)))
}

/// The conjugate is local, and the dual representation value is measurable
/// and reproduces `f`.
pub fn dual_representation_check(measure: &RiskMeasure, trials: usize, seed: u64) -> Result<Report> {
    let s = measure.strata();
    let label = measure.label();
    let fails = par::try_map_range(trials, |i| {
        let x = s.random_vector(&mut trial_rng(seed, i), -5.0, 5.0);
        let (value, density) = dual_representation(measure, &x)?;
        let fx = measure.evaluate(&x)?;
        let mut out = Vec::new();
        if !value.approx_eq(&fx, TOL_OPT) || !s.is_measurable(&value, TOL_OPT) {
            out.push(
                Witness::new("dual representation value differs from f(x)")
                    .trial(seed, i)
                    .input("x", &x)
                    .input("y", density.y())
                    .compare(s, &value, &fx, TOL_OPT, true),
            );
        }
        Ok::<_, RcaError>(out)
    })?;
    let mut report = Report::new();
    report.push(
        CheckRecord::new(
            format!("conjugation.{label}.dual_representation"),
            "f(x) = max over feasible densities of E[x y | F] - f*(y)",
        )
        .checked(trials)
        .with_failures(fails.into_iter().flatten()),
    );

    let samples = (0..trials)
        .map(|i| {
            let mut rng = trial_rng(seed ^ 0x5eed, i);
            let y = if i % 2 == 0 {
                sample_domain_density(measure, &mut rng)?
            } else {
                s.random_vector(&mut rng, -3.0, 1.0)
            };
            Ok((y, s.random_event(&mut rng)))
        })
        .collect::<Result<Vec<(RandVar, Indicator)>>>()?;
    let conj = |y: &RandVar| conjugate(measure, y).map(|c| c.value);
    let verdict = is_local(&conj, &samples)?;
    let mut rec = CheckRecord::new(format!("conjugation.{label}.conjugate_local"), "the conjugate is local").checked(verdict.tested);
    if let Some(w) = verdict.counterexample {
        rec.fail(
            Witness::new("I_A f*(y) != I_A f*(I_A y)")
                .input("y", &samples[w.sample].0)
                .input("A", &samples[w.sample].1.as_randvar())
                .row(w.atom, s.block_of(w.atom), w.lhs, w.rhs),
        );
    }
    report.push(rec);
    Ok(report)
}

/// Restricting the dual search to a conditional `L^q` ball around the origin
/// that contains the attaining density does not change the value.
pub fn restricted_dual_check(measure: &RiskMeasure, q: f64, trials: usize, seed: u64) -> Result<CheckRecord> {
    if !(q >= 1.0) {
        return Err(RcaError::InvalidParameter(format!("moment exponent must be >= 1 (got {q})")));
    }
    let s = measure.strata();
    let moment = |y: &RandVar| s.cond_expect(&y.map(|v| v.abs().powf(q)));
    let fails = par::try_map_range(trials, |i| {
        let mut rng = trial_rng(seed, i);
        let x = s.random_vector(&mut rng, -5.0, 5.0);
        let fx = measure.evaluate(&x)?;
        let (_, star) = dual_representation(measure, &x)?;
        let gamma = moment(star.y())?.zip_with(&s.random_measurable(&mut rng, 1.0, 2.0), |m, t| m * t);
        let mut best = s.pairing(&x, star.y())?.sub(&conjugate(measure, star.y())?.value).into_values();
        for _ in 0..16 {
            let y = sample_domain_density(measure, &mut rng)?;
            let inside = moment(&y)?;
            let v = s.pairing(&x, &y)?.sub(&conjugate(measure, &y)?.value);
            for a in 0..s.atom_count() {
                if inside[a] <= gamma[a] && v[a] > best[a] {
                    best[a] = v[a];
                }
            }
        }
        let best = RandVar::new(best);
        Ok::<_, RcaError>((!best.approx_eq(&fx, TOL_OPT)).then(|| {
            Witness::new("restricted dual value differs from f(x)")
                .trial(seed, i)
                .input("x", &x)
                .input("gamma", &gamma)
                .compare(s, &best, &fx, TOL_OPT, true)
        }))
    })?;
    Ok(CheckRecord::new(
        format!("conjugation.{}.restricted_dual", measure.label()),
        "dual search restricted to a conditional moment ball keeps the value",
    )
    .checked(trials)
    .detail(format!("moment exponent q = {q}"))
    .with_failures(fails.into_iter().flatten()))
}

/// Tolerance between closed-form and oracle conjugates.
pub const ORACLE_CONJUGATE_TOL: f64 = 1e-6;

/// Closed-form conjugate against the ascent oracle on the given dual vectors.
pub fn conjugate_oracle_check(measure: &RiskMeasure, ys: &[RandVar], cfg: &AscentConfig) -> Result<CheckRecord> {
    let s = measure.strata();
    let mut rec = CheckRecord::new(
        format!("conjugation.{}.closed_form_vs_oracle", measure.label()),
        "closed-form conjugate agrees with brute-force ascent",
    )
    .checked(ys.len());
    let mut max_gap = 0.0f64;
    for (i, y) in ys.iter().enumerate() {
        let Some(closed) = conjugate_closed_form(measure, y)? else {
            return Err(RcaError::Unsupported(format!("{} has no closed form", measure.label())));
        };
        let oracle = conjugate_ascent(measure, s, y, cfg)?;
        let gap = closed.value.max_abs_diff(&oracle.value);
        max_gap = max_gap.max(gap);
        if gap > ORACLE_CONJUGATE_TOL * (1.0 + closed.value.values().iter().fold(0.0f64, |m, v| m.max(v.abs()))) {
            rec.fail(
                Witness::new("closed form and ascent disagree")
                    .trial(0, i)
                    .input("y", y)
                    .compare(s, &closed.value, &oracle.value, ORACLE_CONJUGATE_TOL, true),
            );
        }
    }
    Ok(rec.metric("max_gap", max_gap))
}

/// Every conjugation check for one shipped family.
pub fn conjugation_suite(measure: &RiskMeasure, trials: usize, seed: u64) -> Result<Report> {
    let mut report = Report::new();
    report.push(fenchel_young_check(measure, trials, seed)?);
    report.push(biconjugation_check(measure, trials, seed.wrapping_add(1))?);
    report.extend(dual_representation_check(measure, trials, seed.wrapping_add(2))?);
    report.push(restricted_dual_check(measure, 2.0, trials, seed.wrapping_add(3))?);
    let x = measure.strata().random_vector(&mut trial_rng(seed, usize::MAX), -5.0, 5.0);
    let u = dual_representation(measure, &x)?.1.into_inner();
    report.push(verify_subgradient(measure, &x, &u, SUBGRADIENT_SAMPLES, seed.wrapping_add(4))?);
    Ok(report)
}

#[cfg(test)]
mod tests;
