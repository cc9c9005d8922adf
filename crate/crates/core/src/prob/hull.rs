use super::{RandVar, SigmaAlgebra};
use crate::error::{RcaError, Result};

/// Default cap on the number of hull elements materialized by [`HccHull::enumerate`].
pub const HULL_BUDGET: u128 = 1_000_000;

/// Concatenation hull of a finite family: every gluing of family members along
/// measurable partitions.
///
/// On a finite space every measurable partition is a coarsening of the block
/// partition, so the hull is the product over blocks of the distinct block
/// restrictions of the generators.
#[derive(Debug, Clone)]
pub struct HccHull {
    algebra: SigmaAlgebra,
    choices: Vec<Vec<Vec<f64>>>,
}

impl HccHull {
    pub fn new(algebra: &SigmaAlgebra, generators: &[RandVar]) -> Result<Self> {
        if generators.is_empty() {
            return Err(RcaError::Empty("hull generators"));
        }
        let n = algebra.atom_count();
        if let Some(g) = generators.iter().find(|g| g.len() != n) {
            return Err(RcaError::DimensionMismatch {
                expected: n,
                got: g.len(),
            });
        }
        let choices = algebra
            .blocks()
            .iter()
            .map(|block| {
                let mut uniq: Vec<Vec<f64>> = Vec::new();
                for g in generators {
                    let r: Vec<f64> = block.iter().map(|&a| g[a]).collect();
                    if !uniq.iter().any(|u| u == &r) {
                        uniq.push(r);
                    }
                }
                uniq
            })
            .collect();
        Ok(Self {
            algebra: algebra.clone(),
            choices,
        })
    }

    /// Distinct restrictions available on block `b`.
    pub fn block_choices(&self, b: usize) -> &[Vec<f64>] {
        &self.choices[b]
    }

    /// Number of distinct hull elements.
    pub fn size(&self) -> u128 {
        self.choices
            .iter()
            .map(|c| c.len() as u128)
            .try_fold(1u128, |acc, c| acc.checked_mul(c))
            .unwrap_or(u128::MAX)
    }

    /// All hull elements, refusing when there are more than `budget`.
    pub fn enumerate(&self, budget: u128) -> Result<Vec<RandVar>> {
        let needed = self.size();
        if needed > budget {
            return Err(RcaError::BudgetExceeded { needed, budget });
        }
        let k = self.choices.len();
        let mut idx = vec![0usize; k];
        let mut out = Vec::with_capacity(needed as usize);
        loop {
            let mut v = vec![0.0; self.algebra.atom_count()];
            for (b, &i) in idx.iter().enumerate() {
                for (&a, &val) in self.algebra.block(b).iter().zip(&self.choices[b][i]) {
                    v[a] = val;
                }
            }
            out.push(RandVar::new(v));
            // odometer, last block fastest
            let mut pos = k;
            loop {
                if pos == 0 {
                    return Ok(out);
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < self.choices[pos].len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }

    /// Blockwise matching: `x` is in the hull iff each block restriction of `x`
    /// equals (within `tol`) the restriction of some generator.
    pub fn contains(&self, x: &RandVar, tol: f64) -> bool {
        self.algebra.blocks().iter().zip(&self.choices).all(|(block, opts)| {
            opts.iter().any(|o| {
                block
                    .iter()
                    .zip(o)
                    .all(|(&a, &v)| x[a] == v || (x[a] - v).abs() <= tol)
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alg() -> SigmaAlgebra {
        SigmaAlgebra::new(vec![0, 0, 1, 1]).unwrap()
    }

    #[test]
    fn singleton_generator() {
        let g = RandVar::new(vec![1.0, 1.0, 2.0, 2.0]);
        let h = HccHull::new(&alg(), std::slice::from_ref(&g)).unwrap();
        assert_eq!(h.enumerate(HULL_BUDGET).unwrap(), vec![g]);
    }

    #[test]
    fn two_generators_two_blocks() {
        let g0 = RandVar::zeros(4);
        let g1 = RandVar::constant(4, 1.0);
        let h = HccHull::new(&alg(), &[g0, g1]).unwrap();
        let mut got: Vec<Vec<f64>> = h
            .enumerate(HULL_BUDGET)
            .unwrap()
            .into_iter()
            .map(RandVar::into_values)
            .collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // all 2^2 block choices, computed by hand
        let expected = vec![
            vec![0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 1.0],
            vec![1.0, 1.0, 0.0, 0.0],
            vec![1.0, 1.0, 1.0, 1.0],
        ];
        assert_eq!(got, expected);
        assert!(h.contains(&RandVar::new(vec![1.0, 1.0, 0.0, 0.0]), 0.0));
        assert!(!h.contains(&RandVar::new(vec![1.0, 0.0, 0.0, 0.0]), 0.0));
    }

    #[test]
    fn idempotent() {
        let gens = vec![
            RandVar::new(vec![0.0, 1.0, 2.0, 3.0]),
            RandVar::new(vec![5.0, 1.0, 2.0, -3.0]),
            RandVar::new(vec![0.0, 1.0, 9.0, 9.0]),
        ];
        let h = HccHull::new(&alg(), &gens).unwrap();
        let elems = h.enumerate(HULL_BUDGET).unwrap();
        let h2 = HccHull::new(&alg(), &elems).unwrap();
        let mut a: Vec<_> = elems.iter().map(|r| r.values().to_vec()).collect();
        let mut b: Vec<_> = h2
            .enumerate(HULL_BUDGET)
            .unwrap()
            .iter()
            .map(|r| r.values().to_vec())
            .collect();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn budget_guard() {
        let alg = SigmaAlgebra::discrete(21).unwrap();
        let gens: Vec<RandVar> = (0..2).map(|c| RandVar::constant(21, c as f64)).collect();
        let h = HccHull::new(&alg, &gens).unwrap();
        assert_eq!(h.size(), 1 << 21);
        assert!(matches!(h.enumerate(HULL_BUDGET), Err(RcaError::BudgetExceeded { .. })));
        assert!(HccHull::new(&alg, &[]).is_err());
    }
}
