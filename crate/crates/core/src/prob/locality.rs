use super::hull::{HccHull, HULL_BUDGET};
use super::{concatenate, ess_extremum, Extremum, Indicator, RandVar, SigmaAlgebra, TOL_ORACLE};
use crate::error::Result;
use crate::par;

/// A map from random variables to random variables, evaluated as a black box.
pub trait Oracle: Sync {
    fn eval(&self, x: &RandVar) -> Result<RandVar>;
}

impl<F> Oracle for F
where
    F: Fn(&RandVar) -> Result<RandVar> + Sync,
{
    fn eval(&self, x: &RandVar) -> Result<RandVar> {
        self(x)
    }
}

/// Equal infinities compare equal; otherwise absolute difference.
fn gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalityWitness {
    pub sample: usize,
    pub atom: usize,
    /// `I_A f(x)` at the atom.
    pub lhs: f64,
    /// `I_A f(I_A x)` at the atom.
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalityVerdict {
    pub passed: bool,
    pub tested: usize,
    pub counterexample: Option<LocalityWitness>,
}

/// Sampled check of `I_A f(x) = I_A f(I_A x)` on the atoms of `A`.
pub fn is_local<O: Oracle + ?Sized>(
    f: &O,
    samples: &[(RandVar, Indicator)],
) -> Result<LocalityVerdict> {
    let results = par::try_map_range(samples.len(), |i| {
        let (x, a) = &samples[i];
        let full = f.eval(x)?;
        let cut = f.eval(&a.apply(x))?;
        Ok(a.atoms().find_map(|atom| {
            (gap(full[atom], cut[atom]) > TOL_ORACLE).then_some(LocalityWitness {
                sample: i,
                atom,
                lhs: full[atom],
                rhs: cut[atom],
            })
        }))
    })?;
    let counterexample = results.into_iter().flatten().next();
    Ok(LocalityVerdict {
        passed: counterexample.is_none(),
        tested: samples.len(),
        counterexample,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupReductionVerdict {
    pub passed: bool,
    pub sup_generators: RandVar,
    pub sup_hull: RandVar,
    pub max_gap: f64,
    pub hull_size: usize,
}

/// For local `f`, the supremum of `f` over a family equals its supremum over
/// the concatenation hull of that family.
pub fn local_sup_reduction_check<O: Oracle + ?Sized>(
    f: &O,
    algebra: &SigmaAlgebra,
    generators: &[RandVar],
) -> Result<SupReductionVerdict> {
    let hull = HccHull::new(algebra, generators)?;
    let elements = hull.enumerate(HULL_BUDGET)?;
    let on_gens = par::try_map_range(generators.len(), |i| f.eval(&generators[i]))?;
    let on_hull = par::try_map_range(elements.len(), |i| f.eval(&elements[i]))?;
    let sup_generators = ess_extremum(&on_gens, Extremum::Sup)?;
    let sup_hull = ess_extremum(&on_hull, Extremum::Sup)?;
    let max_gap = sup_generators
        .values()
        .iter()
        .zip(sup_hull.values())
        .map(|(&a, &b)| gap(a, b))
        .fold(0.0, f64::max);
    Ok(SupReductionVerdict {
        passed: max_gap <= TOL_ORACLE,
        sup_generators,
        sup_hull,
        max_gap,
        hull_size: elements.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GluingVerdict {
    pub passed: bool,
    pub max_gap: f64,
    /// First atom where the two sides differ by more than the tolerance.
    pub witness_atom: Option<usize>,
}

/// `f(sum I_{A_n} x_n) = sum I_{A_n} f(x_n)` atomwise.
pub fn gluing_identity_check<O: Oracle + ?Sized>(
    f: &O,
    algebra: &SigmaAlgebra,
    parts: &[(Indicator, RandVar)],
    tol: f64,
) -> Result<GluingVerdict> {
    let glued = concatenate(algebra, parts)?;
    let lhs = f.eval(&glued)?;
    let pieces = parts
        .iter()
        .map(|(a, x)| Ok((a.clone(), f.eval(x)?)))
        .collect::<Result<Vec<_>>>()?;
    let rhs = concatenate(algebra, &pieces)?;
    Ok(compare(&lhs, &rhs, tol))
}

/// Two local maps agreeing on a family agree on its concatenation hull.
/// Returns the comparison over all enumerated hull elements.
pub fn agreement_on_hull<O1, O2>(
    f: &O1,
    g: &O2,
    algebra: &SigmaAlgebra,
    generators: &[RandVar],
    tol: f64,
) -> Result<GluingVerdict>
where
    O1: Oracle + ?Sized,
    O2: Oracle + ?Sized,
{
    let elements = HccHull::new(algebra, generators)?.enumerate(HULL_BUDGET)?;
    let verdicts = par::try_map_range(elements.len(), |i| {
        Ok(compare(&f.eval(&elements[i])?, &g.eval(&elements[i])?, tol))
    })?;
    let max_gap = verdicts.iter().map(|v| v.max_gap).fold(0.0, f64::max);
    let witness_atom = verdicts.iter().find_map(|v| v.witness_atom);
    Ok(GluingVerdict {
        passed: witness_atom.is_none(),
        max_gap,
        witness_atom,
    })
}

fn compare(lhs: &RandVar, rhs: &RandVar, tol: f64) -> GluingVerdict {
    let gaps: Vec<f64> = lhs
        .values()
        .iter()
        .zip(rhs.values())
        .map(|(&a, &b)| gap(a, b))
        .collect();
    let witness_atom = gaps.iter().position(|&g| g > tol);
    GluingVerdict {
        passed: witness_atom.is_none(),
        max_gap: gaps.iter().copied().fold(0.0, f64::max),
        witness_atom,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::Strata;

    fn strata() -> Strata {
        Strata::uniform_blocks(&[2, 2]).unwrap()
    }

    #[test]
    fn cond_expect_and_identity_are_local() {
        let s = strata();
        let samples = vec![
            (RandVar::new(vec![1.0, 0.0, 0.0, 0.0]), s.block_indicator(0)),
            (RandVar::new(vec![1.0, 5.0, -2.0, 3.0]), s.block_indicator(1)),
            (RandVar::new(vec![1.0, 5.0, -2.0, 3.0]), Indicator::full(4)),
        ];
        let ce = |x: &RandVar| s.cond_expect(x);
        assert!(is_local(&ce, &samples).unwrap().passed);
        let id = |x: &RandVar| Ok(x.clone());
        assert!(is_local(&id, &samples).unwrap().passed);
    }

    #[test]
    fn unconditional_mean_is_not_local() {
        let s = strata();
        let mean = |x: &RandVar| Ok(RandVar::constant(4, s.space().expect(x)));
        let samples = vec![(RandVar::new(vec![0.0, 0.0, 4.0, 0.0]), s.block_indicator(0))];
        let v = is_local(&mean, &samples).unwrap();
        assert!(!v.passed);
        // both sides by hand: E[x] = 1, E[I_A x] = 0
        let w = v.counterexample.unwrap();
        assert_eq!((w.atom, w.lhs, w.rhs), (0, 1.0, 0.0));
    }

    #[test]
    fn spec_sup_reduction_examples() {
        let s = strata();
        let ce = |x: &RandVar| s.cond_expect(x);
        let gens = vec![
            RandVar::new(vec![0.0, 0.0, 4.0, 4.0]),
            RandVar::new(vec![2.0, 2.0, 0.0, 0.0]),
        ];
        let v = local_sup_reduction_check(&ce, s.algebra(), &gens).unwrap();
        assert!(v.passed);
        assert_eq!(v.hull_size, 4);
        assert_eq!(v.sup_hull.values(), &[2.0, 2.0, 4.0, 4.0]);

        let id = |x: &RandVar| Ok(x.clone());
        let gens = vec![
            RandVar::new(vec![1.0, 5.0, 0.0, 2.0]),
            RandVar::new(vec![3.0, 0.0, 1.0, 1.0]),
        ];
        let v = local_sup_reduction_check(&id, s.algebra(), &gens).unwrap();
        assert!(v.passed);
        assert_eq!(v.sup_hull.values(), &[3.0, 5.0, 1.0, 2.0]);
    }

    #[test]
    fn gluing_identity_for_local_map() {
        let s = strata();
        let ce = |x: &RandVar| s.cond_expect(&x.map(|v| v * v));
        let parts = vec![
            (s.block_indicator(0), RandVar::new(vec![1.0, 2.0, 9.0, 9.0])),
            (s.block_indicator(1), RandVar::new(vec![7.0, 7.0, 3.0, 4.0])),
        ];
        assert!(gluing_identity_check(&ce, s.algebra(), &parts, 1e-12).unwrap().passed);
    }
}
