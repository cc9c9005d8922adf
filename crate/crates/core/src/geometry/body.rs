use serde::{Deserialize, Serialize};

use super::qp::{self, LpNorm};
use crate::error::{RcaError, Result};
use crate::prob::{RandVar, Strata};

/// A closed convex set in the coordinates of one block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockSet {
    /// Convex hull of finitely many points.
    Hull { points: Vec<Vec<f64>> },
    /// Coordinate box `lo <= z <= hi`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Intersection of half-spaces `normal . z <= bound`.
    Polyhedron { rows: Vec<(Vec<f64>, f64)> },
}

impl BlockSet {
    pub fn hull(points: Vec<Vec<f64>>) -> Self {
        Self::Hull { points }
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Self::Box {
            lo: vec![lo; dim],
            hi: vec![hi; dim],
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |got| Err(RcaError::DimensionMismatch { expected: dim, got });
        match self {
            Self::Hull { points } => {
                if points.is_empty() {
                    return Err(RcaError::Empty("block generators"));
                }
                if let Some(p) = points.iter().find(|p| p.len() != dim) {
                    return bad(p.len());
                }
                if points.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(RcaError::InvalidParameter("non-finite generator".into()));
                }
            }
            Self::Box { lo, hi } => {
                if lo.len() != dim {
                    return bad(lo.len());
                }
                if hi.len() != dim {
                    return bad(hi.len());
                }
                if lo.iter().zip(hi).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
                    return Err(RcaError::InvalidParameter("box needs finite lo <= hi".into()));
                }
            }
            Self::Polyhedron { rows } => {
                if let Some((a, _)) = rows.iter().find(|(a, _)| a.len() != dim) {
                    return bad(a.len());
                }
            }
        }
        Ok(())
    }

    fn scale_tol(&self, z: &[f64]) -> f64 {
        let zs = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let gs = match self {
            Self::Hull { points } => points.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())),
            Self::Box { lo, hi } => lo.iter().chain(hi).fold(0.0f64, |m, v| m.max(v.abs())),
            Self::Polyhedron { .. } => 0.0,
        };
        1.0 + zs + gs
    }

    /// Membership up to `tol` (relative to the magnitudes involved).
    pub fn contains(&self, z: &[f64], tol: f64) -> bool {
        let t = tol * self.scale_tol(z);
        match self {
            Self::Hull { points } => {
                let shifted: Vec<Vec<f64>> = points
                    .iter()
                    .map(|g| g.iter().zip(z).map(|(gi, zi)| gi - zi).collect())
                    .collect();
                qp::min_norm_point(&shifted).is_ok_and(|mn| qp::norm2(&mn.point) <= t)
            }
            Self::Box { lo, hi } => z
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| *v >= l - t && *v <= h + t),
            Self::Polyhedron { rows } => rows
                .iter()
                .all(|(a, b)| qp::dot(a, z) <= b + tol * (1.0 + b.abs() + qp::norm2(a) * qp::norm2(z))),
        }
    }

    /// Strict interior with a margin of `delta` (relative), decided without gauges.
    pub fn interior_with_margin(&self, z: &[f64], delta: f64) -> bool {
        match self {
            Self::Box { lo, hi } => z
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| *v > l + delta * (h - l) && *v < h - delta * (h - l)),
            Self::Hull { points } => {
                let diam = points
                    .iter()
                    .flat_map(|p| points.iter().map(move |q| qp::norm2(&sub(p, q))))
                    .fold(0.0, f64::max);
                let d = delta * diam.max(1e-12);
                (0..z.len()).all(|i| {
                    [d, -d].iter().all(|&s| {
                        let mut e = z.to_vec();
                        e[i] += s;
                        self.contains(&e, 1e-13)
                    })
                })
            }
            Self::Polyhedron { rows } => rows
                .iter()
                .all(|(a, b)| qp::dot(a, z) < b - delta * qp::norm2(a).max(1e-300)),
        }
    }

    /// Projection in the `w`-weighted Euclidean norm.
    pub fn project(&self, z: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Hull { points } => qp::project_hull(z, points, w),
            Self::Box { lo, hi } => Ok(z
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (l, h))| v.clamp(*l, *h))
                .collect()),
            Self::Polyhedron { rows } => qp::project_polyhedron(z, rows, w),
        }
    }

    /// Distance `(sum w_i |z_i - m_i|^p)^(1/p)` (or `max |z_i - m_i|`) to the set.
    pub fn distance(&self, z: &[f64], w: &[f64], p: f64) -> Result<f64> {
        let pnorm = |d: &[f64]| weighted_pnorm(d, w, p);
        match self {
            Self::Box { .. } => {
                // separable: clamping is optimal for every p
                let m = self.project(z, w)?;
                Ok(pnorm(&sub(z, &m)))
            }
            Self::Hull { points } => {
                if p == 2.0 {
                    let m = self.project(z, w)?;
                    Ok(pnorm(&sub(z, &m)))
                } else if p.is_infinite() {
                    qp::lp_distance(z, points, &[], w, LpNorm::Max)
                } else if p == 1.0 {
                    qp::lp_distance(z, points, &[], w, LpNorm::Weighted1)
                } else {
                    qp::pnorm_hull_distance(z, points, w, p)
                }
            }
            Self::Polyhedron { rows } => {
                if p == 2.0 {
                    let m = self.project(z, w)?;
                    Ok(pnorm(&sub(z, &m)))
                } else if p.is_infinite() {
                    qp::lp_distance(z, &[], rows, w, LpNorm::Max)
                } else if p == 1.0 {
                    qp::lp_distance(z, &[], rows, w, LpNorm::Weighted1)
                } else {
                    Err(RcaError::Unsupported(format!(
                        "distance to a polyhedron for p = {p}"
                    )))
                }
            }
        }
    }

    /// `sup_{m in set} sum_i w_i u_i m_i`, `+inf` when unbounded in that direction.
    pub fn support(&self, u: &[f64], w: &[f64]) -> Result<f64> {
        let c: Vec<f64> = u.iter().zip(w).map(|(a, b)| a * b).collect();
        match self {
            Self::Hull { points } => Ok(points
                .iter()
                .map(|g| qp::dot(&c, g))
                .fold(f64::NEG_INFINITY, f64::max)),
            Self::Box { lo, hi } => Ok(c
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(ci, (l, h))| (ci * l).max(ci * h))
                .sum()),
            Self::Polyhedron { rows } => qp::lp_support(&c, rows),
        }
    }

    pub fn scaled(&self, t: f64) -> Self {
        match self {
            Self::Hull { points } => Self::Hull {
                points: points.iter().map(|p| p.iter().map(|v| v * t).collect()).collect(),
            },
            Self::Box { lo, hi } => Self::Box {
                lo: lo.iter().map(|v| v * t).collect(),
                hi: hi.iter().map(|v| v * t).collect(),
            },
            Self::Polyhedron { rows } => Self::Polyhedron {
                rows: rows.iter().map(|(a, b)| (a.clone(), b * t)).collect(),
            },
        }
    }

    /// Finite generating set when the set is a polytope given by points or a box.
    pub fn vertices(&self) -> Option<Vec<Vec<f64>>> {
        match self {
            Self::Hull { points } => Some(points.clone()),
            Self::Box { lo, hi } => {
                let n = lo.len();
                if n > 16 {
                    return None;
                }
                Some(
                    (0..1usize << n)
                        .map(|mask| {
                            (0..n)
                                .map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] })
                                .collect()
                        })
                        .collect(),
                )
            }
            Self::Polyhedron { .. } => None,
        }
    }

    /// `z -> -z` maps the set into itself (checked on generators or rows).
    pub fn is_symmetric(&self) -> bool {
        match self {
            Self::Hull { points } => points.iter().all(|p| {
                let neg: Vec<f64> = p.iter().map(|v| -v).collect();
                self.contains(&neg, 1e-10)
            }),
            Self::Box { lo, hi } => lo.iter().zip(hi).all(|(l, h)| (l + h).abs() <= 1e-12 * (1.0 + h.abs())),
            Self::Polyhedron { rows } => rows.iter().all(|(a, b)| {
                rows.iter().any(|(c, d)| {
                    (d - b).abs() <= 1e-12 * (1.0 + b.abs())
                        && a.iter().zip(c).all(|(x, y)| (x + y).abs() <= 1e-12 * (1.0 + x.abs()))
                })
            }),
        }
    }

    /// Zero lies in the interior (the finite-dimensional form of absorbency).
    pub fn absorbs(&self) -> bool {
        let dim = match self {
            Self::Hull { points } => points[0].len(),
            Self::Box { lo, .. } => lo.len(),
            Self::Polyhedron { rows } => {
                return rows.iter().all(|(a, b)| *b > 0.0 || a.iter().all(|v| *v == 0.0));
            }
        };
        self.interior_with_margin(&vec![0.0; dim], 1e-6)
    }
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn weighted_pnorm(d: &[f64], w: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        d.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else {
        d.iter()
            .zip(w)
            .map(|(v, wi)| wi * v.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

/// A product of per-block convex sets: the finite form of a closed convex set
/// with the countable concatenation property.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexBody {
    pub blocks: Vec<BlockSet>,
    #[serde(default)]
    pub claims_balanced: bool,
    #[serde(default)]
    pub claims_absorbent: bool,
}

impl ConvexBody {
    pub fn new(strata: &Strata, blocks: Vec<BlockSet>) -> Result<Self> {
        let body = Self {
            blocks,
            claims_balanced: false,
            claims_absorbent: false,
        };
        body.validate(strata)?;
        Ok(body)
    }

    pub fn validate(&self, strata: &Strata) -> Result<()> {
        if self.blocks.len() != strata.block_count() {
            return Err(RcaError::DimensionMismatch {
                expected: strata.block_count(),
                got: self.blocks.len(),
            });
        }
        for (b, set) in self.blocks.iter().enumerate() {
            set.validate(strata.block(b).len())?;
        }
        Ok(())
    }

    pub fn balanced_absorbent(mut self) -> Self {
        self.claims_balanced = true;
        self.claims_absorbent = true;
        self
    }

    /// The same set on every block, built from the block size.
    pub fn uniform(strata: &Strata, make: impl Fn(usize) -> BlockSet) -> Self {
        Self {
            blocks: (0..strata.block_count()).map(|b| make(strata.block(b).len())).collect(),
            claims_balanced: false,
            claims_absorbent: false,
        }
    }

    /// Product of per-atom intervals.
    pub fn atom_box(strata: &Strata, lo: f64, hi: f64) -> Self {
        Self::uniform(strata, |n| BlockSet::cube(n, lo, hi))
    }

    /// Unit ball of the conditional sup-norm scaled by a measurable radius.
    pub fn sup_ball(strata: &Strata, radius: &[f64]) -> Self {
        Self {
            blocks: (0..strata.block_count())
                .map(|b| BlockSet::cube(strata.block(b).len(), -radius[b], radius[b]))
                .collect(),
            claims_balanced: true,
            claims_absorbent: true,
        }
    }

    /// Per-block product with each block scaled by the measurable factor `xi > 0`.
    pub fn scaled(&self, xi: &[f64]) -> Self {
        Self {
            blocks: self.blocks.iter().zip(xi).map(|(s, &t)| s.scaled(t)).collect(),
            ..self.clone()
        }
    }

    pub fn block(&self, b: usize) -> &BlockSet {
        &self.blocks[b]
    }

    /// Blockwise membership flags.
    pub fn membership(&self, strata: &Strata, x: &RandVar, tol: f64) -> Vec<bool> {
        (0..strata.block_count())
            .map(|b| self.blocks[b].contains(&strata.restrict(x, b), tol))
            .collect()
    }

    pub fn contains(&self, strata: &Strata, x: &RandVar, tol: f64) -> bool {
        self.membership(strata, x, tol).into_iter().all(|m| m)
    }

    /// Check the balanced/absorbent claims. Returns the first failing block.
    pub fn verify_flags(&self) -> Result<()> {
        for (b, set) in self.blocks.iter().enumerate() {
            if self.claims_balanced && !set.is_symmetric() {
                return Err(RcaError::InvalidParameter(format!(
                    "body claims to be balanced but block {b} is not symmetric"
                )));
            }
            if self.claims_absorbent && !set.absorbs() {
                return Err(RcaError::InvalidParameter(format!(
                    "body claims to be absorbent but 0 is not interior on block {b}"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_membership_and_projection() {
        let s = BlockSet::cube(2, 0.0, 1.0);
        assert!(s.contains(&[0.5, 1.0], 0.0));
        assert!(!s.contains(&[0.5, 1.1], 1e-9));
        assert_eq!(s.project(&[2.0, -1.0], &[0.5, 0.5]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(s.distance(&[2.0, 0.5], &[0.5, 0.5], f64::INFINITY).unwrap(), 1.0);
    }

    #[test]
    fn hull_distance_all_norms_agree_on_vertex_case() {
        // nearest point is the vertex (1, 0) for every norm
        let s = BlockSet::hull(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]);
        let w = [0.5, 0.5];
        let z = [3.0, -2.0];
        let dinf = s.distance(&z, &w, f64::INFINITY).unwrap();
        assert!((dinf - 2.0).abs() < 1e-9, "{dinf}");
        let d1 = s.distance(&z, &w, 1.0).unwrap();
        assert!((d1 - 2.0).abs() < 1e-9, "{d1}");
    }

    #[test]
    fn flags() {
        let s = Strata::uniform_blocks(&[2, 2]).unwrap();
        let ball = ConvexBody::sup_ball(&s, &[1.0, 2.0]);
        ball.verify_flags().unwrap();
        let mut b = ConvexBody::atom_box(&s, 0.0, 1.0);
        b.claims_balanced = true;
        assert!(b.verify_flags().is_err());
        let cross = ConvexBody::uniform(&s, |_| {
            BlockSet::hull(vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]])
        })
        .balanced_absorbent();
        cross.verify_flags().unwrap();
    }

    #[test]
    fn support_functions() {
        let w = [0.5, 0.5];
        let b = BlockSet::cube(2, -1.0, 2.0);
        assert_eq!(b.support(&[1.0, -1.0], &w).unwrap(), 0.5 * 2.0 + 0.5 * 1.0);
        let h = BlockSet::hull(b.vertices().unwrap());
        assert_eq!(h.support(&[1.0, -1.0], &w).unwrap(), 1.5);
    }
}
