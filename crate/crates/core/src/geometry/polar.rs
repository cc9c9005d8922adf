use rand::Rng;

use super::body::{BlockSet, ConvexBody};
use crate::error::{RcaError, Result};
use crate::par;
use crate::prob::{HccHull, RandVar, Strata};
use crate::report::{CheckRecord, Witness};
use crate::rng::trial_rng;

/// Polar of a finite family under the conditional pairing:
/// `{ y : |E[a y | F]| <= 1 for every a }`, one half-space pair per generator and block.
pub fn polar(strata: &Strata, family: &[RandVar]) -> Result<ConvexBody> {
    if family.is_empty() {
        return Err(RcaError::Empty("polar generators"));
    }
    for a in family {
        strata.check_len(a)?;
        a.check_finite()?;
    }
    let blocks = (0..strata.block_count())
        .map(|b| {
            let gens: Vec<Vec<f64>> = family.iter().map(|a| strata.restrict(a, b)).collect();
            block_polar(&gens, &strata.block_weights(b))
        })
        .collect();
    Ok(ConvexBody {
        blocks,
        claims_balanced: true,
        claims_absorbent: false,
    })
}

/// Polar of a polytope body (hulls or boxes on every block).
pub fn polar_of_body(strata: &Strata, body: &ConvexBody) -> Result<ConvexBody> {
    body.validate(strata)?;
    let blocks = (0..strata.block_count())
        .map(|b| {
            let gens = body
                .block(b)
                .vertices()
                .ok_or_else(|| RcaError::Unsupported("polar of a polyhedral block".into()))?;
            Ok(block_polar(&gens, &strata.block_weights(b)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvexBody {
        blocks,
        claims_balanced: true,
        claims_absorbent: false,
    })
}

fn block_polar(gens: &[Vec<f64>], w: &[f64]) -> BlockSet {
    let mut rows = Vec::new();
    for g in gens {
        if g.iter().all(|&v| v == 0.0) {
            continue;
        }
        let a: Vec<f64> = g.iter().zip(w).map(|(gi, wi)| gi * wi).collect();
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        rows.push((a, 1.0));
        rows.push((neg, 1.0));
    }
    BlockSet::Polyhedron { rows }
}

/// Balanced convex hull of a family, glued over blocks: per block
/// `conv{ +-a|_B : a in family }`.
pub fn balanced_hull(strata: &Strata, family: &[RandVar]) -> Result<ConvexBody> {
    if family.is_empty() {
        return Err(RcaError::Empty("hull generators"));
    }
    let blocks = (0..strata.block_count())
        .map(|b| {
            let mut pts = Vec::with_capacity(2 * family.len());
            for a in family {
                let r = strata.restrict(a, b);
                pts.push(r.iter().map(|v| -v).collect());
                pts.push(r);
            }
            BlockSet::hull(pts)
        })
        .collect();
    Ok(ConvexBody {
        blocks,
        claims_balanced: true,
        claims_absorbent: false,
    })
}

/// `sup { |E[x a | F]| : a in A }` per block, for a bounded body `A`.
pub fn support_seminorm(strata: &Strata, x: &RandVar, body: &ConvexBody) -> Result<RandVar> {
    body.validate(strata)?;
    strata.check_len(x)?;
    x.check_finite()?;
    let vals = (0..strata.block_count())
        .map(|b| {
            let z = strata.restrict(x, b);
            let w = strata.block_weights(b);
            let neg: Vec<f64> = z.iter().map(|v| -v).collect();
            let up = body.block(b).support(&z, &w)?;
            let down = body.block(b).support(&neg, &w)?;
            let v = up.max(down);
            if v.is_infinite() {
                return Err(RcaError::InvalidParameter(format!(
                    "support seminorm needs a bounded body; block {b} is unbounded"
                )));
            }
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(strata.broadcast(&vals))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BipolarConfig {
    /// Probe points per block (a grid when the block has at most 3 atoms).
    pub probes: usize,
    /// Cap on the number of glued hull vertices examined.
    pub budget: u128,
    pub tol: f64,
    pub seed: u64,
}

impl Default for BipolarConfig {
    fn default() -> Self {
        Self {
            probes: 1000,
            budget: 1_000_000,
            tol: 1e-6,
            seed: 0,
        }
    }
}

/// Compare the bipolar `A^00`, computed by linear programming over the polar
/// `A^0`, against the glued balanced convex hull of `A`, on every glued hull
/// vertex and on a probe grid.
pub fn bipolar_check(strata: &Strata, family: &[RandVar], cfg: &BipolarConfig) -> Result<CheckRecord> {
    let hull = balanced_hull(strata, family)?;
    let pol = polar(strata, family)?;
    let tol = cfg.tol;

    // glued vertices of the hull: concatenations of +-a along the blocks
    let signed: Vec<RandVar> = family.iter().flat_map(|a| [a.clone(), a.neg()]).collect();
    let vertices = HccHull::new(strata.algebra(), &signed)?.enumerate(cfg.budget)?;

    let in_bipolar = |b: usize, z: &[f64]| -> Result<(bool, f64)> {
        let sigma = pol.block(b).support(z, &strata.block_weights(b))?;
        Ok((sigma <= 1.0 + tol, sigma))
    };

    let mut failures = Vec::new();
    for v in &vertices {
        for b in 0..strata.block_count() {
            let (ok, sigma) = in_bipolar(b, &strata.restrict(v, b))?;
            if !ok {
                failures.push(
                    Witness::new("hull vertex outside the bipolar")
                        .input("vertex", v)
                        .row(strata.block(b)[0], b, sigma, 1.0),
                );
            }
        }
    }

    let k = strata.block_count();
    let grids: Vec<Vec<Vec<f64>>> = (0..k)
        .map(|b| {
            let radius = 1.5
                * family
                    .iter()
                    .flat_map(|a| strata.restrict(a, b))
                    .fold(0.0f64, |m, v| m.max(v.abs()))
                    .max(1.0);
            probe_grid(strata.block(b).len(), cfg.probes, radius, cfg.seed, b)
        })
        .collect();
    let probe_count = grids.iter().map(Vec::len).max().unwrap_or(0);
    let probe_fail = par::try_map_range(probe_count, |j| {
        let mut out = Vec::new();
        for b in 0..k {
            let z = &grids[b][j % grids[b].len()];
            let set = hull.block(b);
            let member = set.contains(z, 1e-9);
            let (in_bi, sigma) = in_bipolar(b, z)?;
            let dist = {
                let ones = vec![1.0; z.len()];
                let proj = set.project(z, &ones)?;
                super::qp::norm2(&super::body::sub(z, &proj))
            };
            // hull c bipolar, and bipolar c closure of hull
            let bad = (member && !in_bi) || (sigma <= 1.0 && dist > tol);
            if bad {
                let mut full = vec![0.0; strata.atom_count()];
                strata.embed(&mut full, b, z);
                out.push(
                    Witness::new(format!("membership disagreement (hull distance {dist:.3e})"))
                        .input("probe", &RandVar::new(full))
                        .row(strata.block(b)[0], b, sigma, 1.0),
                );
            }
        }
        Ok::<_, RcaError>(out)
    })?;
    failures.extend(probe_fail.into_iter().flatten());

    Ok(CheckRecord::new("geometry.bipolar", "bipolar equals the closed concatenation hull of the balanced convex hull")
        .checked(vertices.len() + probe_count)
        .metric("hull_vertices", vertices.len() as f64)
        .metric("probes", probe_count as f64)
        .with_failures(failures))
}

fn probe_grid(dim: usize, count: usize, radius: f64, seed: u64, block: usize) -> Vec<Vec<f64>> {
    if dim <= 3 {
        let per_axis = ((count as f64).powf(1.0 / dim as f64).ceil() as usize).max(2);
        let total = per_axis.pow(dim as u32);
        (0..total)
            .map(|mut idx| {
                (0..dim)
                    .map(|_| {
                        let i = idx % per_axis;
                        idx /= per_axis;
                        -radius + 2.0 * radius * i as f64 / (per_axis - 1) as f64
                    })
                    .collect()
            })
            .collect()
    } else {
        let mut rng = trial_rng(seed, block);
        (0..count)
            .map(|_| (0..dim).map(|_| rng.gen_range(-radius..radius)).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s() -> Strata {
        Strata::uniform_blocks(&[2, 2]).unwrap()
    }

    #[test]
    fn polar_example() {
        let s = s();
        let p = polar(&s, &[RandVar::constant(4, 1.0)]).unwrap();
        // block means 0.5 and 0
        assert!(p.contains(&s, &RandVar::new(vec![2.0, -1.0, 0.0, 0.0]), 1e-12));
        assert!(!p.contains(&s, &RandVar::new(vec![2.0, 1.0, 0.0, 0.0]), 1e-12));
        let whole = polar(&s, &[RandVar::zeros(4)]).unwrap();
        assert!(whole.contains(&s, &RandVar::constant(4, 1e6), 1e-12));
    }

    #[test]
    fn polar_is_antitone() {
        let s = s();
        let a = vec![RandVar::new(vec![1.0, 0.0, 1.0, 2.0])];
        let mut b = a.clone();
        b.push(RandVar::new(vec![0.0, 3.0, -1.0, 0.5]));
        let (pa, pb) = (polar(&s, &a).unwrap(), polar(&s, &b).unwrap());
        let mut rng = trial_rng(1, 0);
        for _ in 0..500 {
            let y = s.random_vector(&mut rng, -3.0, 3.0);
            if pb.contains(&s, &y, 0.0) {
                assert!(pa.contains(&s, &y, 0.0));
            }
        }
    }

    #[test]
    fn spike_bipolar_is_segment() {
        let s = s();
        let e1 = RandVar::new(vec![1.0, 0.0, 0.0, 0.0]);
        let r = bipolar_check(&s, &[e1], &BipolarConfig::default()).unwrap();
        assert!(r.passed, "{r:?}");
        let pol = polar(&s, &[RandVar::new(vec![1.0, 0.0, 0.0, 0.0])]).unwrap();
        let w = s.block_weights(0);
        assert!((pol.block(0).support(&[1.0, 0.0], &w).unwrap() - 1.0).abs() < 1e-9);
        assert!(pol.block(0).support(&[1.0, 0.1], &w).unwrap().is_infinite());
        // the other block collapses to the origin
        assert!(pol.block(1).support(&[0.1, 0.0], &s.block_weights(1)).unwrap().is_infinite());
    }

    #[test]
    fn zero_family_bipolar_is_origin() {
        let s = s();
        let r = bipolar_check(&s, &[RandVar::zeros(4)], &BipolarConfig::default()).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn support_seminorm_examples() {
        let s = s();
        let pm = ConvexBody::uniform(&s, |n| BlockSet::hull(vec![vec![1.0; n], vec![-1.0; n]]));
        let x = RandVar::new(vec![1.0, -3.0, 2.0, 2.5]);
        let v = support_seminorm(&s, &x, &pm).unwrap();
        let ce = s.cond_expect(&x).unwrap().abs();
        assert!(v.approx_eq(&ce, 1e-12));
        assert_eq!(support_seminorm(&s, &RandVar::zeros(4), &pm).unwrap().values(), &[0.0; 4]);
        let ind = s.block_indicator(1);
        let lhs = support_seminorm(&s, &ind.apply(&x), &pm).unwrap();
        assert_eq!(lhs, ind.apply(&v));
    }
}
