//! Finite probability spaces, conditioning algebras given as partitions of
//! the atoms, and random variables stratified along those partitions.
//!
//! Every atom carries strictly positive mass, so almost-sure statements are
//! exact per-atom statements and equivalence classes are plain vectors.

mod hull;
mod locality;

pub use hull::HccHull;
pub use locality::{
    agreement_on_hull, gluing_identity_check, is_local, local_sup_reduction_check, GluingVerdict,
    LocalityVerdict, LocalityWitness, Oracle, SupReductionVerdict,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{RcaError, Result};

/// Tolerance for linear-algebraic identities.
pub const TOL_LINEAR: f64 = 1e-12;
/// Tolerance for comparisons between two oracle evaluations.
pub const TOL_ORACLE: f64 = 1e-9;
/// Tolerance for quantities produced by an iterative optimizer.
pub const TOL_OPT: f64 = 1e-6;

/// `a * b` with `0 * (+-inf) = 0`.
#[inline]
pub fn ext_mul(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

/// `a + b` with `+inf + (-inf) = +inf`.
#[inline]
pub fn ext_add(a: f64, b: f64) -> f64 {
    if a.is_infinite() && b.is_infinite() && a != b {
        f64::INFINITY
    } else {
        a + b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteProbSpace {
    probs: Vec<f64>,
}

impl FiniteProbSpace {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(RcaError::InvalidSpace("no atoms".into()));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !(p.is_finite() && **p > 0.0 && **p <= 1.0))
        {
            return Err(RcaError::InvalidSpace(format!(
                "atom {i} has probability {p}; every atom needs mass in (0, 1]"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > TOL_LINEAR {
            return Err(RcaError::InvalidSpace(format!(
                "probabilities must sum to 1 (got {total})"
            )));
        }
        Ok(Self { probs })
    }

    pub fn uniform(atoms: usize) -> Result<Self> {
        if atoms == 0 {
            return Err(RcaError::InvalidSpace("no atoms".into()));
        }
        Ok(Self {
            probs: vec![1.0 / atoms as f64; atoms],
        })
    }

    pub fn atom_count(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, atom: usize) -> f64 {
        self.probs[atom]
    }

    /// Unconditional expectation of a finite vector.
    pub fn expect(&self, x: &RandVar) -> f64 {
        self.probs.iter().zip(x.values()).map(|(p, v)| p * v).sum()
    }
}

/// A sigma-subalgebra of the power set, represented by its atoms (blocks).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigmaAlgebra {
    labels: Vec<usize>,
    blocks: Vec<Vec<usize>>,
}

impl SigmaAlgebra {
    /// Build from a block label per atom. Labels must be contiguous from 0.
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(RcaError::InvalidAlgebra("no atoms".into()));
        }
        let count = labels.iter().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Vec::new(); count];
        for (atom, &b) in labels.iter().enumerate() {
            blocks[b].push(atom);
        }
        if let Some(b) = blocks.iter().position(Vec::is_empty) {
            return Err(RcaError::InvalidAlgebra(format!(
                "block {b} is empty; block labels must be contiguous from 0"
            )));
        }
        Ok(Self { labels, blocks })
    }

    pub fn from_blocks(atoms: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut labels = vec![usize::MAX; atoms];
        for (b, block) in blocks.iter().enumerate() {
            for &a in block {
                if a >= atoms {
                    return Err(RcaError::InvalidAlgebra(format!(
                        "block {b} references atom {a} of a {atoms}-atom space"
                    )));
                }
                if labels[a] != usize::MAX {
                    return Err(RcaError::InvalidAlgebra(format!(
                        "atom {a} appears in more than one block"
                    )));
                }
                labels[a] = b;
            }
        }
        if let Some(a) = labels.iter().position(|&l| l == usize::MAX) {
            return Err(RcaError::InvalidAlgebra(format!("atom {a} is in no block")));
        }
        Self::new(labels)
    }

    pub fn trivial(atoms: usize) -> Result<Self> {
        Self::new(vec![0; atoms])
    }

    pub fn discrete(atoms: usize) -> Result<Self> {
        Self::new((0..atoms).collect())
    }

    pub fn atom_count(&self) -> usize {
        self.labels.len()
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn block_of(&self, atom: usize) -> usize {
        self.labels[atom]
    }

    pub fn block(&self, b: usize) -> &[usize] {
        &self.blocks[b]
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// True when every block of `self` lies inside a single block of `coarser`.
    pub fn refines(&self, coarser: &SigmaAlgebra) -> bool {
        self.atom_count() == coarser.atom_count()
            && self.blocks.iter().all(|block| {
                let target = coarser.block_of(block[0]);
                block.iter().all(|&a| coarser.block_of(a) == target)
            })
    }
}

/// An extended-real random variable: one value per atom.
///
/// Serializes as a list of numbers with `"inf"`, `"-inf"` and `"nan"` for the
/// non-finite values.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(transparent)]
pub struct RandVar(Vec<f64>);

impl Serialize for RandVar {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        crate::report::ser_ext_vec(&self.0, s)
    }
}

impl RandVar {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn constant(atoms: usize, c: f64) -> Self {
        Self(vec![c; atoms])
    }

    pub fn zeros(atoms: usize) -> Self {
        Self::constant(atoms, 0.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, atom: usize) -> f64 {
        self.0[atom]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &RandVar, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn add(&self, other: &RandVar) -> Self {
        self.zip_with(other, ext_add)
    }

    pub fn sub(&self, other: &RandVar) -> Self {
        self.zip_with(other, |a, b| ext_add(a, -b))
    }

    pub fn mul(&self, other: &RandVar) -> Self {
        self.zip_with(other, ext_mul)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| ext_mul(c, v))
    }

    pub fn neg(&self) -> Self {
        self.map(|v| -v)
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.0.iter().position(|v| !v.is_finite()) {
            Some(atom) => Err(RcaError::NonFinite {
                atom,
                value: self.0[atom],
            }),
            None => Ok(()),
        }
    }

    /// Largest atomwise `|self - other|`, treating equal infinities as zero gap.
    pub fn max_abs_diff(&self, other: &RandVar) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| if a == b { 0.0 } else { (a - b).abs() })
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &RandVar, tol: f64) -> bool {
        self.len() == other.len() && self.max_abs_diff(other) <= tol
    }

    pub fn max_value(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `self <= other` atomwise up to `tol`.
    pub fn le(&self, other: &RandVar, tol: f64) -> bool {
        self.0.iter().zip(&other.0).all(|(&a, &b)| a <= b + tol)
    }
}

impl From<Vec<f64>> for RandVar {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl std::ops::Index<usize> for RandVar {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Equivalence class of an indicator function.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct Indicator {
    member: Vec<bool>,
}

impl Indicator {
    pub fn new(member: Vec<bool>) -> Self {
        Self { member }
    }

    pub fn full(atoms: usize) -> Self {
        Self::new(vec![true; atoms])
    }

    pub fn empty(atoms: usize) -> Self {
        Self::new(vec![false; atoms])
    }

    pub fn from_atoms(atoms: usize, set: &[usize]) -> Self {
        let mut member = vec![false; atoms];
        for &a in set {
            member[a] = true;
        }
        Self::new(member)
    }

    /// Union of the listed blocks of `algebra`.
    pub fn from_blocks(algebra: &SigmaAlgebra, blocks: &[usize]) -> Self {
        let mut member = vec![false; algebra.atom_count()];
        for &b in blocks {
            for &a in algebra.block(b) {
                member[a] = true;
            }
        }
        Self::new(member)
    }

    pub fn len(&self) -> usize {
        self.member.len()
    }

    pub fn is_empty(&self) -> bool {
        !self.member.iter().any(|&m| m)
    }

    pub fn contains(&self, atom: usize) -> bool {
        self.member[atom]
    }

    pub fn members(&self) -> &[bool] {
        &self.member
    }

    pub fn atoms(&self) -> impl Iterator<Item = usize> + '_ {
        self.member
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
    }

    pub fn complement(&self) -> Self {
        Self::new(self.member.iter().map(|m| !m).collect())
    }

    pub fn intersect(&self, other: &Indicator) -> Self {
        Self::new(
            self.member
                .iter()
                .zip(&other.member)
                .map(|(a, b)| *a && *b)
                .collect(),
        )
    }

    pub fn is_measurable(&self, algebra: &SigmaAlgebra) -> bool {
        algebra.blocks().iter().all(|block| {
            let first = self.member[block[0]];
            block.iter().all(|&a| self.member[a] == first)
        })
    }

    /// `I_A * x`, zero off `A` even where `x` is infinite.
    pub fn apply(&self, x: &RandVar) -> RandVar {
        RandVar::new(
            self.member
                .iter()
                .zip(x.values())
                .map(|(&m, &v)| if m { v } else { 0.0 })
                .collect(),
        )
    }

    pub fn as_randvar(&self) -> RandVar {
        RandVar::new(self.member.iter().map(|&m| f64::from(u8::from(m))).collect())
    }
}

/// A finite partition of the atoms into sets measurable for the conditioning algebra.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FPartition {
    parts: Vec<Indicator>,
}

impl FPartition {
    pub fn new(parts: Vec<Indicator>, algebra: &SigmaAlgebra) -> Result<Self> {
        if parts.is_empty() {
            return Err(RcaError::InvalidPartition("no parts".into()));
        }
        let n = algebra.atom_count();
        let mut hits = vec![0usize; n];
        for (k, part) in parts.iter().enumerate() {
            if part.len() != n {
                return Err(RcaError::DimensionMismatch {
                    expected: n,
                    got: part.len(),
                });
            }
            if !part.is_measurable(algebra) {
                return Err(RcaError::InvalidPartition(format!(
                    "part {k} is not measurable for the conditioning algebra"
                )));
            }
            for a in part.atoms() {
                hits[a] += 1;
            }
        }
        if let Some(a) = hits.iter().position(|&h| h != 1) {
            let what = if hits[a] == 0 { "covered by no part" } else { "covered by several parts" };
            return Err(RcaError::InvalidPartition(format!("atom {a} is {what}")));
        }
        Ok(Self { parts })
    }

    /// The partition into the blocks of `algebra`.
    pub fn blocks(algebra: &SigmaAlgebra) -> Self {
        Self {
            parts: (0..algebra.block_count())
                .map(|b| Indicator::from_blocks(algebra, &[b]))
                .collect(),
        }
    }

    pub fn trivial(atoms: usize) -> Self {
        Self {
            parts: vec![Indicator::full(atoms)],
        }
    }

    /// Random coarsening of the block partition: each block is assigned to one of
    /// up to `block_count` groups, empty groups dropped.
    pub fn random<R: Rng + ?Sized>(algebra: &SigmaAlgebra, rng: &mut R) -> Self {
        let k = algebra.block_count();
        let groups = rng.gen_range(1..=k);
        let mut assign: Vec<usize> = (0..k).map(|_| rng.gen_range(0..groups)).collect();
        // relabel so that groups are contiguous
        let mut map = vec![usize::MAX; groups];
        let mut next = 0;
        for g in &mut assign {
            if map[*g] == usize::MAX {
                map[*g] = next;
                next += 1;
            }
            *g = map[*g];
        }
        let parts = (0..next)
            .map(|g| {
                let blocks: Vec<usize> = (0..k).filter(|&b| assign[b] == g).collect();
                Indicator::from_blocks(algebra, &blocks)
            })
            .collect();
        Self { parts }
    }

    pub fn parts(&self) -> &[Indicator] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Index of the part containing `atom`.
    pub fn part_of(&self, atom: usize) -> usize {
        self.parts
            .iter()
            .position(|p| p.contains(atom))
            .expect("partition covers every atom")
    }
}

/// A probability space together with one conditioning algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct Strata {
    space: FiniteProbSpace,
    algebra: SigmaAlgebra,
    block_probs: Vec<f64>,
}

impl Strata {
    pub fn new(space: FiniteProbSpace, algebra: SigmaAlgebra) -> Result<Self> {
        if space.atom_count() != algebra.atom_count() {
            return Err(RcaError::InvalidAlgebra(format!(
                "algebra labels {} atoms but the space has {}",
                algebra.atom_count(),
                space.atom_count()
            )));
        }
        let block_probs = algebra
            .blocks()
            .iter()
            .map(|b| b.iter().map(|&a| space.prob(a)).sum())
            .collect();
        Ok(Self {
            space,
            algebra,
            block_probs,
        })
    }

    /// Uniform space with `atoms` atoms split into consecutive blocks of the given sizes.
    pub fn uniform_blocks(sizes: &[usize]) -> Result<Self> {
        let labels: Vec<usize> = sizes
            .iter()
            .enumerate()
            .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
            .collect();
        let space = FiniteProbSpace::uniform(labels.len())?;
        Self::new(space, SigmaAlgebra::new(labels)?)
    }

    pub fn space(&self) -> &FiniteProbSpace {
        &self.space
    }

    pub fn algebra(&self) -> &SigmaAlgebra {
        &self.algebra
    }

    pub fn atom_count(&self) -> usize {
        self.space.atom_count()
    }

    pub fn block_count(&self) -> usize {
        self.algebra.block_count()
    }

    pub fn block(&self, b: usize) -> &[usize] {
        self.algebra.block(b)
    }

    pub fn block_of(&self, atom: usize) -> usize {
        self.algebra.block_of(atom)
    }

    pub fn block_prob(&self, b: usize) -> f64 {
        self.block_probs[b]
    }

    /// Conditional probabilities `P(atom | block)` for the atoms of block `b`.
    pub fn block_weights(&self, b: usize) -> Vec<f64> {
        let pb = self.block_probs[b];
        self.block(b).iter().map(|&a| self.space.prob(a) / pb).collect()
    }

    /// Same conditioning structure over a different algebra on this space.
    pub fn with_algebra(&self, algebra: SigmaAlgebra) -> Result<Self> {
        Self::new(self.space.clone(), algebra)
    }

    pub fn check_len(&self, x: &RandVar) -> Result<()> {
        if x.len() != self.atom_count() {
            return Err(RcaError::DimensionMismatch {
                expected: self.atom_count(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Per-block conditional mean `E[x | F]` restricted to block `b`.
    pub fn block_mean(&self, x: &RandVar, b: usize) -> f64 {
        let pb = self.block_probs[b];
        self.block(b)
            .iter()
            .map(|&a| self.space.prob(a) * x[a])
            .sum::<f64>()
            / pb
    }

    pub fn cond_expect(&self, x: &RandVar) -> Result<RandVar> {
        self.check_len(x)?;
        x.check_finite()?;
        let means: Vec<f64> = (0..self.block_count())
            .map(|b| self.block_mean(x, b))
            .collect();
        Ok(self.broadcast(&means))
    }

    /// `E[x * y | F]`, the conditional pairing.
    pub fn pairing(&self, x: &RandVar, y: &RandVar) -> Result<RandVar> {
        self.cond_expect(&x.mul(y))
    }

    /// Spread one value per block over the atoms.
    pub fn broadcast(&self, block_values: &[f64]) -> RandVar {
        RandVar::new(
            self.algebra
                .labels()
                .iter()
                .map(|&b| block_values[b])
                .collect(),
        )
    }

    /// One value per block, read from the first atom of each block.
    pub fn block_values(&self, x: &RandVar) -> Vec<f64> {
        self.algebra.blocks().iter().map(|b| x[b[0]]).collect()
    }

    pub fn restrict(&self, x: &RandVar, b: usize) -> Vec<f64> {
        self.block(b).iter().map(|&a| x[a]).collect()
    }

    /// Write within-block coordinates back into a full vector.
    pub fn embed(&self, target: &mut [f64], b: usize, local: &[f64]) {
        for (&a, &v) in self.block(b).iter().zip(local) {
            target[a] = v;
        }
    }

    /// Assemble a vector from per-block coordinate slices.
    pub fn assemble(&self, per_block: &[Vec<f64>]) -> RandVar {
        let mut out = vec![0.0; self.atom_count()];
        for (b, local) in per_block.iter().enumerate() {
            self.embed(&mut out, b, local);
        }
        RandVar::new(out)
    }

    /// True when `x` is constant on every block up to `tol`.
    pub fn is_measurable(&self, x: &RandVar, tol: f64) -> bool {
        self.first_unmeasurable(x, tol).is_none()
    }

    pub fn check_measurable(&self, x: &RandVar, tol: f64) -> Result<()> {
        self.check_len(x)?;
        match self.first_unmeasurable(x, tol) {
            Some(atom) => Err(RcaError::NotMeasurable { atom }),
            None => Ok(()),
        }
    }

    fn first_unmeasurable(&self, x: &RandVar, tol: f64) -> Option<usize> {
        self.algebra.blocks().iter().find_map(|block| {
            let v0 = x[block[0]];
            block
                .iter()
                .copied()
                .find(|&a| !(x[a] == v0 || (x[a] - v0).abs() <= tol))
        })
    }

    pub fn block_indicator(&self, b: usize) -> Indicator {
        Indicator::from_blocks(&self.algebra, &[b])
    }

    /// Random measurable set: each block included with probability 1/2.
    pub fn random_event<R: Rng + ?Sized>(&self, rng: &mut R) -> Indicator {
        let blocks: Vec<usize> = (0..self.block_count()).filter(|_| rng.gen_bool(0.5)).collect();
        Indicator::from_blocks(&self.algebra, &blocks)
    }

    /// Random measurable vector with block values uniform in `[lo, hi)`.
    pub fn random_measurable<R: Rng + ?Sized>(&self, rng: &mut R, lo: f64, hi: f64) -> RandVar {
        let v: Vec<f64> = (0..self.block_count()).map(|_| rng.gen_range(lo..hi)).collect();
        self.broadcast(&v)
    }

    pub fn random_vector<R: Rng + ?Sized>(&self, rng: &mut R, lo: f64, hi: f64) -> RandVar {
        RandVar::new((0..self.atom_count()).map(|_| rng.gen_range(lo..hi)).collect())
    }
}

/// Which extremum [`ess_extremum`] takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremum {
    Sup,
    Inf,
}

/// Atomwise supremum or infimum of a finite family.
pub fn ess_extremum(set: &[RandVar], mode: Extremum) -> Result<RandVar> {
    let (first, rest) = set.split_first().ok_or(RcaError::Empty("family"))?;
    let mut out = first.clone();
    for x in rest {
        if x.len() != out.len() {
            return Err(RcaError::DimensionMismatch {
                expected: out.len(),
                got: x.len(),
            });
        }
        out = match mode {
            Extremum::Sup => out.zip_with(x, f64::max),
            Extremum::Inf => out.zip_with(x, f64::min),
        };
    }
    Ok(out)
}

/// Glue `x_n` along the parts `A_n`: the result equals `x_n` on `A_n`.
pub fn concatenate(algebra: &SigmaAlgebra, parts: &[(Indicator, RandVar)]) -> Result<RandVar> {
    let partition = FPartition::new(parts.iter().map(|(a, _)| a.clone()).collect(), algebra)?;
    let n = algebra.atom_count();
    let mut out = vec![0.0; n];
    for ((ind, x), _) in parts.iter().zip(partition.parts()) {
        if x.len() != n {
            return Err(RcaError::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        for a in ind.atoms() {
            out[a] = x[a];
        }
    }
    Ok(RandVar::new(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_rng;

    fn two_blocks() -> Strata {
        Strata::uniform_blocks(&[2, 2]).unwrap()
    }

    #[test]
    fn cond_expect_examples() {
        let s = two_blocks();
        let x = RandVar::new(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.cond_expect(&x).unwrap().values(), &[1.5, 1.5, 3.5, 3.5]);

        let t = s.with_algebra(SigmaAlgebra::trivial(4).unwrap()).unwrap();
        assert_eq!(t.cond_expect(&x).unwrap().values(), &[2.5; 4]);

        let m = RandVar::new(vec![7.0, 7.0, -1.0, -1.0]);
        assert_eq!(s.cond_expect(&m).unwrap(), m);
    }

    #[test]
    fn cond_expect_rejects_infinite_and_mismatch() {
        let s = two_blocks();
        let x = RandVar::new(vec![1.0, f64::INFINITY, 0.0, 0.0]);
        assert!(matches!(s.cond_expect(&x), Err(RcaError::NonFinite { atom: 1, .. })));
        assert!(matches!(
            s.cond_expect(&RandVar::zeros(3)),
            Err(RcaError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn space_validation() {
        let err = FiniteProbSpace::new(vec![0.3, 0.3, 0.3]).unwrap_err();
        assert!(err.to_string().contains("probabilities must sum to 1"));
        assert!(FiniteProbSpace::new(vec![0.0, 1.0]).is_err());
        assert!(SigmaAlgebra::new(vec![0, 2, 2]).is_err());
        assert!(SigmaAlgebra::from_blocks(4, &[vec![0, 1], vec![2, 7]]).is_err());
    }

    #[test]
    fn ess_extremum_examples() {
        let a = RandVar::new(vec![1.0, 2.0]);
        let b = RandVar::new(vec![2.0, 1.0]);
        assert_eq!(ess_extremum(&[a.clone(), b], Extremum::Sup).unwrap().values(), &[2.0, 2.0]);
        assert_eq!(ess_extremum(std::slice::from_ref(&a), Extremum::Inf).unwrap(), a);
        let c = RandVar::new(vec![0.0, 0.0]);
        let d = RandVar::new(vec![-1.0, 3.0]);
        assert_eq!(ess_extremum(&[c, d], Extremum::Inf).unwrap().values(), &[-1.0, 0.0]);
        assert_eq!(ess_extremum(&[], Extremum::Sup), Err(RcaError::Empty("family")));
    }

    #[test]
    fn concatenate_examples() {
        let s = two_blocks();
        let alg = s.algebra();
        let glued = concatenate(
            alg,
            &[
                (s.block_indicator(0), RandVar::new(vec![9.0, 9.0, 0.0, 0.0])),
                (s.block_indicator(1), RandVar::new(vec![0.0, 0.0, 7.0, 7.0])),
            ],
        )
        .unwrap();
        assert_eq!(glued.values(), &[9.0, 9.0, 7.0, 7.0]);

        let x = RandVar::new(vec![1.0, -2.0, 3.0, 0.5]);
        assert_eq!(concatenate(alg, &[(Indicator::full(4), x.clone())]).unwrap(), x);
        assert_eq!(
            concatenate(alg, &[(s.block_indicator(0), x.clone()), (s.block_indicator(1), x.clone())])
                .unwrap(),
            x
        );

        let overlap = concatenate(alg, &[(Indicator::full(4), x.clone()), (s.block_indicator(1), x.clone())]);
        assert!(matches!(overlap, Err(RcaError::InvalidPartition(_))));
        let gap = concatenate(alg, &[(s.block_indicator(1), x.clone())]);
        assert!(matches!(gap, Err(RcaError::InvalidPartition(_))));
    }

    #[test]
    fn extended_conventions() {
        assert_eq!(ext_mul(0.0, f64::INFINITY), 0.0);
        assert_eq!(ext_mul(0.0, f64::NEG_INFINITY), 0.0);
        assert_eq!(ext_add(f64::INFINITY, f64::NEG_INFINITY), f64::INFINITY);
        let ind = Indicator::from_atoms(2, &[0]);
        let x = RandVar::new(vec![1.0, f64::NEG_INFINITY]);
        assert_eq!(ind.apply(&x).values(), &[1.0, 0.0]);
    }

    #[test]
    fn cond_expect_module_properties() {
        let space = FiniteProbSpace::new(vec![0.1, 0.2, 0.15, 0.05, 0.3, 0.2]).unwrap();
        let fine = SigmaAlgebra::new(vec![0, 0, 1, 2, 2, 3]).unwrap();
        let coarse = SigmaAlgebra::new(vec![0, 0, 0, 1, 1, 1]).unwrap();
        assert!(fine.refines(&coarse));
        let sf = Strata::new(space.clone(), fine).unwrap();
        let sc = Strata::new(space, coarse).unwrap();
        for i in 0..200 {
            let mut rng = trial_rng(11, i);
            let x = sf.random_vector(&mut rng, -3.0, 3.0);
            let y = sf.random_vector(&mut rng, -3.0, 3.0);
            let xi = sf.random_measurable(&mut rng, -2.0, 2.0);
            let ex = sf.cond_expect(&x).unwrap();
            let ey = sf.cond_expect(&y).unwrap();
            // linearity
            let lhs = sf.cond_expect(&x.scale(2.0).add(&y)).unwrap();
            assert!(lhs.approx_eq(&ex.scale(2.0).add(&ey), TOL_LINEAR));
            // positivity
            assert!(sf.cond_expect(&x.abs()).unwrap().values().iter().all(|&v| v >= 0.0));
            // pull-out
            let lhs = sf.cond_expect(&xi.mul(&x)).unwrap();
            assert!(lhs.approx_eq(&xi.mul(&ex), TOL_LINEAR));
            // tower
            let tower = sc.cond_expect(&ex).unwrap();
            assert!(tower.approx_eq(&sc.cond_expect(&x).unwrap(), TOL_LINEAR));
        }
    }

    #[test]
    fn random_partition_is_valid() {
        let s = Strata::uniform_blocks(&[1, 2, 3, 1]).unwrap();
        for i in 0..100 {
            let p = FPartition::random(s.algebra(), &mut trial_rng(5, i));
            FPartition::new(p.parts().to_vec(), s.algebra()).unwrap();
        }
    }
}
