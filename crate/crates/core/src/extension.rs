//! Extension of local maps by gluing.
//!
//! On a finite space every random variable is already a "base point", so the
//! extension results reduce to two checkable facts: the glued value
//! `sum I_{A_n} f(x_n)` does not depend on which canonical representation of
//! `x` is used, and the glued map keeps the risk-measure axioms. This module
//! keeps the construction explicit: [`extend_eval`] only ever calls the base
//! oracle on the pieces of a representation.

use std::hash::{DefaultHasher, Hash, Hasher};

use rand::Rng;

use crate::error::{RcaError, Result};
use crate::norms::{cond_norm, ConditionalNorm};
use crate::par;
use crate::prob::{
    agreement_on_hull, concatenate, gluing_identity_check, local_sup_reduction_check, FPartition, Indicator,
    Oracle, RandVar, SigmaAlgebra, Strata, TOL_LINEAR, TOL_ORACLE,
};
use crate::report::{CheckRecord, Report, Witness};
use crate::risk::{oracle_axiom_check, DENSITY_TOL};
use crate::rng::trial_rng;

/// `sum I_{A_n} x_n` kept as its parts and pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalRep {
    partition: FPartition,
    pieces: Vec<RandVar>,
}

impl CanonicalRep {
    pub fn new(algebra: &SigmaAlgebra, parts: Vec<(Indicator, RandVar)>) -> Result<Self> {
        let n = algebra.atom_count();
        for (_, x) in &parts {
            if x.len() != n {
                return Err(RcaError::DimensionMismatch { expected: n, got: x.len() });
            }
        }
        let (inds, pieces): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
        Ok(Self {
            partition: FPartition::new(inds, algebra)?,
            pieces,
        })
    }

    /// The one-part representation `x = I_Omega x`.
    pub fn single(x: RandVar) -> Self {
        Self {
            partition: FPartition::trivial(x.len()),
            pieces: vec![x],
        }
    }

    /// The representation along the blocks of `algebra`, each piece `I_B x`.
    pub fn by_blocks(algebra: &SigmaAlgebra, x: &RandVar) -> Self {
        let partition = FPartition::blocks(algebra);
        let pieces = partition.parts().iter().map(|a| a.apply(x)).collect();
        Self { partition, pieces }
    }

    /// A random representation of `x`: a random coarsening of the blocks, with
    /// each piece equal to `x` on its part and arbitrary elsewhere.
    pub fn random<R: Rng + ?Sized>(algebra: &SigmaAlgebra, x: &RandVar, rng: &mut R) -> Self {
        let partition = FPartition::random(algebra, rng);
        let pieces = partition
            .parts()
            .iter()
            .map(|a| {
                RandVar::new(
                    (0..x.len())
                        .map(|i| if a.contains(i) { x[i] } else { rng.gen_range(-9.0..9.0) })
                        .collect(),
                )
            })
            .collect();
        Self { partition, pieces }
    }

    pub fn partition(&self) -> &FPartition {
        &self.partition
    }

    pub fn pieces(&self) -> &[RandVar] {
        &self.pieces
    }

    pub fn parts(&self) -> impl Iterator<Item = (&Indicator, &RandVar)> {
        self.partition.parts().iter().zip(&self.pieces)
    }

    pub fn glue(&self, algebra: &SigmaAlgebra) -> Result<RandVar> {
        let parts: Vec<(Indicator, RandVar)> = self.parts().map(|(a, x)| (a.clone(), x.clone())).collect();
        concatenate(algebra, &parts)
    }

    /// Split part `n` into `sub` and its remainder, both keeping the same piece.
    pub fn split(&self, algebra: &SigmaAlgebra, n: usize, sub: &Indicator) -> Result<Self> {
        let part = self
            .partition
            .parts()
            .get(n)
            .ok_or_else(|| RcaError::InvalidParameter(format!("no part {n}")))?;
        let rest = part.intersect(&sub.complement());
        let inner = part.intersect(sub);
        let mut parts: Vec<(Indicator, RandVar)> = Vec::new();
        for (k, (a, x)) in self.parts().enumerate() {
            if k == n {
                for piece in [&inner, &rest] {
                    if !piece.is_empty() {
                        parts.push((piece.clone(), x.clone()));
                    }
                }
            } else {
                parts.push((a.clone(), x.clone()));
            }
        }
        Self::new(algebra, parts)
    }
}

/// `sum I_{A_n} f(x_n)`, calling `f` only on the pieces.
pub fn extend_eval<O: Oracle + ?Sized>(f: &O, algebra: &SigmaAlgebra, rep: &CanonicalRep) -> Result<RandVar> {
    let parts = rep
        .parts()
        .map(|(a, x)| Ok((a.clone(), f.eval(x)?)))
        .collect::<Result<Vec<_>>>()?;
    concatenate(algebra, &parts)
}

/// The extension as an oracle: each call evaluates through a random
/// representation of its argument, drawn deterministically from the argument.
pub struct Extended<'a, O: ?Sized> {
    base: &'a O,
    algebra: SigmaAlgebra,
    seed: u64,
}

impl<'a, O: Oracle + ?Sized> Extended<'a, O> {
    pub fn new(base: &'a O, algebra: &SigmaAlgebra, seed: u64) -> Self {
        Self {
            base,
            algebra: algebra.clone(),
            seed,
        }
    }

    pub fn rep_of(&self, x: &RandVar) -> CanonicalRep {
        let mut h = DefaultHasher::new();
        for v in x.values() {
            v.to_bits().hash(&mut h);
        }
        CanonicalRep::random(&self.algebra, x, &mut trial_rng(self.seed, h.finish() as usize))
    }
}

impl<O: Oracle + ?Sized> Oracle for Extended<'_, O> {
    fn eval(&self, x: &RandVar) -> Result<RandVar> {
        extend_eval(self.base, &self.algebra, &self.rep_of(x))
    }
}

/// Outputs of [`extend_eval`] over representations of one point agree within
/// `tol`. A failure names the refinement cell `A_i n B_j` where they differ.
pub fn representation_independence_check<O: Oracle + ?Sized>(
    f: &O,
    strata: &Strata,
    reps: &[CanonicalRep],
    tol: f64,
) -> Result<CheckRecord> {
    let alg = strata.algebra();
    let Some(first) = reps.first() else {
        return Err(RcaError::Empty("representations"));
    };
    let x = first.glue(alg)?;
    for (k, r) in reps.iter().enumerate().skip(1) {
        if r.glue(alg)? != x {
            return Err(RcaError::InvalidParameter(format!(
                "representation {k} glues to a different point than representation 0"
            )));
        }
    }
    let base = extend_eval(f, alg, first)?;
    let mut rec = CheckRecord::new(
        "extension.representation_independence",
        "the glued value does not depend on the canonical representation",
    )
    .checked(reps.len().saturating_sub(1));
    for (k, r) in reps.iter().enumerate().skip(1) {
        let other = extend_eval(f, alg, r)?;
        if let Some(a) = (0..x.len()).find(|&a| gap(base[a], other[a]) > tol) {
            let (i, j) = (first.partition().part_of(a), r.partition().part_of(a));
            let cell = first.partition().parts()[i].intersect(&r.partition().parts()[j]);
            rec.fail(
                Witness::new(format!(
                    "refinement cell A_{i} n B_{j} of representations 0 and {k}: the base map is not local there"
                ))
                .input("x", &x)
                .input("cell", &cell.as_randvar())
                .input("piece_A", &first.pieces()[i])
                .input("piece_B", &r.pieces()[j])
                .compare(strata, &base, &other, tol, true),
            );
        }
    }
    Ok(rec)
}

fn gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs()
    }
}

/// Representation independence over random pairs of representations.
pub fn representation_independence_suite<O: Oracle + ?Sized>(
    f: &O,
    strata: &Strata,
    trials: usize,
    seed: u64,
) -> Result<CheckRecord> {
    let alg = strata.algebra();
    let recs = par::try_map_range(trials, |i| {
        let mut rng = trial_rng(seed, i);
        let x = strata.random_vector(&mut rng, -5.0, 5.0);
        let reps = [CanonicalRep::random(alg, &x, &mut rng), CanonicalRep::random(alg, &x, &mut rng)];
        representation_independence_check(f, strata, &reps, TOL_LINEAR)
    })?;
    let mut out = CheckRecord::new(
        "extension.representation_independence",
        "the glued value does not depend on the canonical representation",
    )
    .checked(trials);
    let mut violations = 0;
    for (i, r) in recs.into_iter().enumerate() {
        for w in r.witnesses {
            violations += 1;
            out.fail(w.trial(seed, i));
        }
    }
    if violations > 0 {
        out = out.metric("violations", violations as f64);
    }
    Ok(out)
}

/// The gluing identity, the supremum reduction over concatenation hulls and
/// uniqueness of local extensions, over random partitions and pieces.
pub fn locality_calculus_suite<O: Oracle + ?Sized>(
    f: &O,
    strata: &Strata,
    label: &str,
    trials: usize,
    seed: u64,
) -> Result<Report> {
    let alg = strata.algebra();
    let outcomes = par::try_map_range(trials, |i| {
        let mut rng = trial_rng(seed, i);
        let partition = FPartition::random(alg, &mut rng);
        let parts: Vec<(Indicator, RandVar)> = partition
            .parts()
            .iter()
            .map(|a| (a.clone(), strata.random_vector(&mut rng, -5.0, 5.0)))
            .collect();
        let glue = gluing_identity_check(f, alg, &parts, TOL_LINEAR)?;
        let gens: Vec<RandVar> = (0..rng.gen_range(1..=3)).map(|_| strata.random_vector(&mut rng, -5.0, 5.0)).collect();
        let sup = local_sup_reduction_check(f, alg, &gens)?;
        let table = HullLookup::new(f, alg, &gens)?;
        let unique = agreement_on_hull(f, &table, alg, &gens, TOL_LINEAR)?;
        Ok::<_, RcaError>((parts, glue, gens, sup, unique))
    })?;
    let mut glue_rec = CheckRecord::new(
        format!("locality.{label}.gluing"),
        "f(sum I_{A_n} x_n) = sum I_{A_n} f(x_n)",
    )
    .checked(trials);
    let mut sup_rec = CheckRecord::new(
        format!("locality.{label}.sup_reduction"),
        "the supremum over a family equals the supremum over its concatenation hull",
    )
    .checked(trials);
    let mut uniq_rec = CheckRecord::new(
        format!("locality.{label}.uniqueness"),
        "local maps agreeing on a family agree on its concatenation hull",
    )
    .checked(trials);
    let (mut g_gap, mut s_gap, mut u_gap) = (0.0f64, 0.0f64, 0.0f64);
    for (i, (parts, glue, gens, sup, unique)) in outcomes.into_iter().enumerate() {
        g_gap = g_gap.max(glue.max_gap);
        s_gap = s_gap.max(sup.max_gap);
        u_gap = u_gap.max(unique.max_gap);
        if let Some(a) = glue.witness_atom {
            let mut w = Witness::new(format!("gluing identity fails at atom {a}")).trial(seed, i);
            for (k, (ind, x)) in parts.iter().enumerate() {
                w = w.input(&format!("A_{k}"), &ind.as_randvar()).input(&format!("x_{k}"), x);
            }
            glue_rec.fail(w);
        }
        if !sup.passed {
            let mut w = Witness::new("sup over the hull exceeds sup over the family").trial(seed, i);
            for (k, g) in gens.iter().enumerate() {
                w = w.input(&format!("g_{k}"), g);
            }
            sup_rec.fail(w);
        }
        if let Some(a) = unique.witness_atom {
            uniq_rec.fail(Witness::new(format!("hull lookup disagrees with f at atom {a}")).trial(seed, i));
        }
    }
    let mut report = Report::new();
    report.push(glue_rec.metric("max_gap", g_gap));
    report.push(sup_rec.metric("max_gap", s_gap));
    report.push(uniq_rec.metric("max_gap", u_gap));
    Ok(report)
}

/// A map defined only on the concatenation hull of a family: on each block it
/// returns `f(g)` for the first generator `g` matching the argument there.
pub struct HullLookup {
    algebra: SigmaAlgebra,
    gens: Vec<RandVar>,
    values: Vec<RandVar>,
}

impl HullLookup {
    pub fn new<O: Oracle + ?Sized>(f: &O, algebra: &SigmaAlgebra, gens: &[RandVar]) -> Result<Self> {
        let values = gens.iter().map(|g| f.eval(g)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            algebra: algebra.clone(),
            gens: gens.to_vec(),
            values,
        })
    }
}

impl Oracle for HullLookup {
    fn eval(&self, x: &RandVar) -> Result<RandVar> {
        let mut out = vec![0.0; x.len()];
        for (b, block) in self.algebra.blocks().iter().enumerate() {
            let k = self
                .gens
                .iter()
                .position(|g| block.iter().all(|&a| g[a] == x[a]))
                .ok_or_else(|| RcaError::InvalidParameter(format!("argument is outside the hull on block {b}")))?;
            for &a in block {
                out[a] = self.values[k][a];
            }
        }
        Ok(RandVar::new(out))
    }
}

/// Lipschitz bound `|f(x) - f(y)| <= |||x - y|||_inf` for the extension of a
/// monotone, cash-invariant base map, plus uniqueness and the axiom suite of
/// the extension.
pub fn linf_lipschitz_check<O: Oracle + ?Sized>(
    f: &O,
    strata: &Strata,
    label: &str,
    trials: usize,
    seed: u64,
) -> Result<Report> {
    let pre = oracle_axiom_check(f, strata, label, trials.min(200), seed ^ 0xa5a5)?;
    for id in ["monotone", "cash_invariant"] {
        let r = pre.get(&format!("risk.{label}.{id}")).expect("axiom suite emits this record");
        if !r.passed {
            return Err(RcaError::InvalidParameter(format!(
                "the base map must be monotone and cash invariant; `{id}` failed"
            )));
        }
    }
    let alg = strata.algebra();
    let ext = Extended::new(f, alg, seed);
    let sup = ConditionalNorm::sup();
    let rows = par::try_map_range(trials, |i| {
        let mut rng = trial_rng(seed, i);
        let x = strata.random_vector(&mut rng, -5.0, 5.0);
        let y = if i % 4 == 3 {
            // measurable shift: the bound is tight
            x.add(&strata.random_measurable(&mut rng, -2.0, 2.0))
        } else if i % 16 == 0 {
            x.clone()
        } else {
            strata.random_vector(&mut rng, -5.0, 5.0)
        };
        let fx = ext.eval(&x)?;
        let fy = ext.eval(&y)?;
        let lhs = fx.sub(&fy).abs();
        let rhs = cond_norm(strata, &x.sub(&y), sup)?;
        let lip = (!lhs.le(&rhs, TOL_ORACLE)).then(|| {
            Witness::new("|f(x) - f(y)| > |||x - y|||_inf")
                .trial(seed, i)
                .input("x", &x)
                .input("y", &y)
                .compare(strata, &lhs, &rhs, TOL_ORACLE, false)
        });
        // a second representation and the base map itself are local extensions too
        let again = extend_eval(f, alg, &CanonicalRep::random(alg, &x, &mut rng))?;
        let direct = f.eval(&x)?;
        let uniq = (!(again.approx_eq(&fx, TOL_LINEAR) && direct.approx_eq(&fx, TOL_LINEAR))).then(|| {
            Witness::new("two local extensions differ at a glued point")
                .trial(seed, i)
                .input("x", &x)
                .compare(strata, &fx, &again, TOL_LINEAR, true)
        });
        let ratio = lhs
            .values()
            .iter()
            .zip(rhs.values())
            .map(|(l, r)| if *r > 0.0 { l / r } else { 0.0 })
            .fold(0.0, f64::max);
        Ok::<_, RcaError>((lip, uniq, ratio))
    })?;
    let max_ratio = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let mut lip = CheckRecord::new(
        format!("extension.{label}.linf_lipschitz"),
        "the extension is 1-Lipschitz for the conditional sup norm",
    )
    .checked(trials)
    .metric("max_ratio", max_ratio);
    let mut uniq = CheckRecord::new(
        format!("extension.{label}.uniqueness"),
        "local extensions agreeing on base points agree on glued points",
    )
    .checked(trials);
    for (l, u, _) in rows {
        if let Some(w) = l {
            lip.fail(w);
        }
        if let Some(w) = u {
            uniq.fail(w);
        }
    }
    let mut report = Report::new();
    report.push(lip);
    report.push(uniq);
    report.extend(oracle_axiom_check(&ext, strata, &format!("extended.{label}"), trials, seed.wrapping_add(1))?);
    Ok(report)
}

/// Moment restriction on sampled densities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundMode {
    None,
    /// `|y| <= bound` atomwise.
    Linf(f64),
    /// `E[|y|^q | F] <= gamma`.
    LGamma(f64),
}

/// A random feasible density `y <= 0, E[y | F] = -1`, sparse with probability 1/4 per atom.
pub fn random_density<R: Rng + ?Sized>(strata: &Strata, rng: &mut R) -> RandVar {
    let per_block: Vec<Vec<f64>> = (0..strata.block_count())
        .map(|b| {
            let w = strata.block_weights(b);
            let mut q: Vec<f64> = w
                .iter()
                .map(|_| if rng.gen_bool(0.25) { 0.0 } else { -rng.gen_range(1e-12f64..1.0).ln() })
                .collect();
            if q.iter().all(|&v| v == 0.0) {
                let k = rng.gen_range(0..q.len());
                q[k] = 1.0;
            }
            let total: f64 = q.iter().sum();
            q.iter().zip(&w).map(|(qi, wi)| -qi / total / wi).collect()
        })
        .collect();
    strata.assemble(&per_block)
}

/// Pull a density toward `-1` until it meets the bound; `None` when no feasible density does.
fn enforce_bound(strata: &Strata, y: &RandVar, q: f64, mode: BoundMode) -> Option<RandVar> {
    let one = RandVar::constant(y.len(), -1.0);
    let within = |z: &RandVar| match mode {
        BoundMode::None => true,
        BoundMode::Linf(c) => z.values().iter().all(|v| v.abs() <= c * (1.0 + DENSITY_TOL)),
        BoundMode::LGamma(g) => strata
            .cond_expect(&z.map(|v| v.abs().powf(q)))
            .map(|m| m.values().iter().all(|&v| v <= g * (1.0 + DENSITY_TOL)))
            .unwrap_or(false),
    };
    // -1 has |y| = 1 and every conditional moment equal to 1, the smallest possible
    let floor_ok = match mode {
        BoundMode::None => true,
        BoundMode::Linf(c) | BoundMode::LGamma(c) => c >= 1.0,
    };
    if !floor_ok {
        return None;
    }
    let mut t = 1.0;
    loop {
        let z = y.scale(t).add(&one.scale(1.0 - t));
        if within(&z) {
            return Some(z);
        }
        t /= 2.0;
        if t < 1e-12 {
            return Some(one);
        }
    }
}

/// Glue random feasible densities along random partitions and confirm the
/// result is again a feasible density within the same bound: the finite
/// content of "the feasible set equals the concatenation hull of its parts".
pub fn feasible_hull_identity(strata: &Strata, q: f64, mode: BoundMode, trials: usize, seed: u64) -> Result<CheckRecord> {
    if !(q >= 1.0) {
        return Err(RcaError::InvalidParameter(format!("moment exponent must be >= 1 (got {q})")));
    }
    let alg = strata.algebra();
    let rows = par::try_map_range(trials, |i| {
        let mut rng = trial_rng(seed, i);
        let partition = FPartition::random(alg, &mut rng);
        let mut parts = Vec::with_capacity(partition.len());
        for a in partition.parts() {
            let Some(y) = enforce_bound(strata, &random_density(strata, &mut rng), q, mode) else {
                return Ok(None);
            };
            parts.push((a.clone(), y));
        }
        let glued = concatenate(alg, &parts)?;
        let feasible = crate::risk::density_feasibility(strata, &glued, DENSITY_TOL).iter().all(|&ok| ok);
        let bounded = enforce_bound(strata, &glued, q, mode).as_ref() == Some(&glued);
        Ok::<_, RcaError>(Some((!(feasible && bounded)).then(|| {
            let mut w = Witness::new(if feasible { "glued density leaves the bound" } else { "glued density is infeasible" })
                .trial(seed, i)
                .input("glued", &glued);
            for (k, (a, y)) in parts.iter().enumerate() {
                w = w.input(&format!("A_{k}"), &a.as_randvar()).input(&format!("y_{k}"), y);
            }
            w
        })))
    })?;
    let empty = rows.iter().all(Option::is_none);
    let mut rec = CheckRecord::new(
        "extension.feasible_hull",
        "gluings of feasible densities are feasible densities",
    )
    .checked(if empty { 0 } else { trials })
    .detail(match mode {
        BoundMode::None => "no bound".to_string(),
        BoundMode::Linf(c) => format!("|y| <= {c}"),
        BoundMode::LGamma(g) => format!("E[|y|^{q} | F] <= {g}"),
    });
    if empty {
        rec = rec.detail("the bounded feasible set is empty (every density has conditional moments >= 1)");
    }
    Ok(rec.with_failures(rows.into_iter().flatten().flatten()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk::{RiskFamily, RiskMeasure};

    fn s() -> Strata {
        Strata::uniform_blocks(&[2, 2]).unwrap()
    }

    fn rv(v: &[f64]) -> RandVar {
        RandVar::new(v.to_vec())
    }

    #[test]
    fn glue_example() {
        let s = s();
        let alg = s.algebra();
        let rep = CanonicalRep::new(
            alg,
            vec![
                (s.block_indicator(0), rv(&[1.0, 2.0, 9.0, 9.0])),
                (s.block_indicator(1), rv(&[7.0, 7.0, 3.0, 4.0])),
            ],
        )
        .unwrap();
        let x = rv(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(rep.glue(alg).unwrap(), x);
        let f = RiskMeasure::new(&s, RiskFamily::Entropic { beta: 1.0 }).unwrap();
        assert_eq!(extend_eval(&f, alg, &rep).unwrap(), f.evaluate(&x).unwrap());
        assert_eq!(extend_eval(&f, alg, &CanonicalRep::single(x.clone())).unwrap(), f.evaluate(&x).unwrap());
    }

    #[test]
    fn restriction_to_a_part_is_the_piece_value() {
        let s = Strata::uniform_blocks(&[2, 1, 3]).unwrap();
        let f = RiskMeasure::new(&s, RiskFamily::WorstCase).unwrap();
        let mut rng = trial_rng(2, 0);
        for _ in 0..50 {
            let x = s.random_vector(&mut rng, -3.0, 3.0);
            let rep = CanonicalRep::random(s.algebra(), &x, &mut rng);
            let out = extend_eval(&f, s.algebra(), &rep).unwrap();
            for (a, piece) in rep.parts() {
                assert_eq!(a.apply(&out), a.apply(&f.evaluate(piece).unwrap()));
            }
            // round trip: block representation glues back to x
            assert_eq!(CanonicalRep::by_blocks(s.algebra(), &x).glue(s.algebra()).unwrap(), x);
        }
    }

    #[test]
    fn representation_independence_examples() {
        let s = s();
        let alg = s.algebra();
        let x = rv(&[1.0, 2.0, 3.0, 4.0]);
        let reps = vec![
            CanonicalRep::single(x.clone()),
            CanonicalRep::by_blocks(alg, &x),
            CanonicalRep::single(x.clone()).split(alg, 0, &s.block_indicator(1)).unwrap(),
        ];
        let f = RiskMeasure::new(&s, RiskFamily::Entropic { beta: 1.0 }).unwrap();
        assert!(representation_independence_check(&f, &s, &reps, 1e-12).unwrap().passed);

        let nl = RiskMeasure::new(&s, RiskFamily::NonLocalMean).unwrap();
        let rec = representation_independence_check(&nl, &s, &reps, 1e-12).unwrap();
        assert!(!rec.passed);
        assert!(rec.witnesses[0].note.contains("refinement cell A_0 n B_0"), "{}", rec.witnesses[0].note);

        let other = CanonicalRep::single(rv(&[0.0, 2.0, 3.0, 4.0]));
        assert!(representation_independence_check(&f, &s, &[reps[0].clone(), other], 1e-12).is_err());
    }

    #[test]
    fn suites_on_shipped_family() {
        let s = Strata::uniform_blocks(&[2, 3, 1, 2]).unwrap();
        let f = RiskMeasure::new(&s, RiskFamily::Entropic { beta: 1.0 }).unwrap();
        assert!(representation_independence_suite(&f, &s, 200, 1).unwrap().passed);
        let r = locality_calculus_suite(&f, &s, "entropic", 200, 2).unwrap();
        assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
        let r = linf_lipschitz_check(&f, &s, "entropic", 200, 3).unwrap();
        assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
        assert!(r.get("extension.entropic.linf_lipschitz").unwrap().metrics["max_ratio"] <= 1.0 + 1e-9);
    }

    #[test]
    fn nonlocal_control_is_caught() {
        let s = s();
        let f = RiskMeasure::new(&s, RiskFamily::NonLocalMean).unwrap();
        assert!(!representation_independence_suite(&f, &s, 50, 1).unwrap().passed);
        let r = locality_calculus_suite(&f, &s, "nonlocal_mean", 50, 2).unwrap();
        assert!(!r.get("locality.nonlocal_mean.gluing").unwrap().passed);
    }

    #[test]
    fn lipschitz_precheck_rejects_broken_family() {
        let s = s();
        let f = RiskMeasure::new(&s, RiskFamily::BrokenSquare).unwrap();
        assert!(linf_lipschitz_check(&f, &s, "broken_square", 20, 1).is_err());
    }

    #[test]
    fn feasible_hull_examples() {
        let s = s();
        let alg = s.algebra();
        let glued = concatenate(
            alg,
            &[
                (s.block_indicator(0), rv(&[-2.0, 0.0, -5.0, 3.0])),
                (s.block_indicator(1), rv(&[0.0, 7.0, -1.0, -1.0])),
            ],
        )
        .unwrap();
        assert!(crate::risk::DualDensity::new(&s, glued).is_ok());
        for mode in [BoundMode::None, BoundMode::Linf(4.0), BoundMode::LGamma(3.0)] {
            let r = feasible_hull_identity(&s, 2.0, mode, 1000, 7).unwrap();
            assert!(r.passed && r.checked == 1000, "{r:?}");
        }
        let r = feasible_hull_identity(&s, 2.0, BoundMode::LGamma(0.5), 10, 7).unwrap();
        assert!(r.passed && r.checked == 0);
    }
}
