use super::body::{sub, BlockSet, ConvexBody};
use super::qp;
use crate::error::{RcaError, Result};
use crate::norms::{random_distance, ConditionalNorm};
use crate::par;
use crate::prob::{Indicator, RandVar, Strata};
use crate::report::{CheckRecord, Witness};

/// A stratified separating functional.
///
/// `functional` acts by `z -> E[z * u | F]`. On `strict_set` it separates
/// strictly with the given positive `margin`; elsewhere it supports the body
/// at `x` (margin zero).
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationCertificate {
    pub functional: RandVar,
    pub strict_set: Indicator,
    pub margin: RandVar,
    pub distance: RandVar,
}

const BOUNDARY_TOL: f64 = 1e-9;

/// Separate `x` from a closed convex body, block by block.
///
/// The strict set is `[d*(x, M) > 0]`. There the functional is the Euclidean
/// residual `x - proj(x)` divided by atom probabilities, so that the
/// conditional pairing reproduces the Euclidean inner product up to `1/P(B)`.
pub fn separate(
    strata: &Strata,
    x: &RandVar,
    body: &ConvexBody,
    norm: ConditionalNorm,
) -> Result<SeparationCertificate> {
    let distance = random_distance(strata, x, body, norm)?;
    let per_block = par::try_map_range(strata.block_count(), |b| {
        let z = strata.restrict(x, b);
        let set = body.block(b);
        let w = strata.block_weights(b);
        let probs: Vec<f64> = strata.block(b).iter().map(|&a| strata.space().prob(a)).collect();
        let strict = distance[strata.block(b)[0]] > 0.0;
        let normal = if strict {
            let ones = vec![1.0; z.len()];
            let proj = set.project(&z, &ones)?;
            sub(&z, &proj)
        } else {
            supporting_normal(set, &z).unwrap_or_else(|| vec![0.0; z.len()])
        };
        let u: Vec<f64> = normal.iter().zip(&probs).map(|(n, p)| n / p).collect();
        let margin = if strict {
            let paired: f64 = z.iter().zip(&u).zip(&w).map(|((zi, ui), wi)| wi * zi * ui).sum();
            let sup = set.support(&u, &w)?;
            paired - sup
        } else {
            0.0
        };
        Ok::<_, RcaError>((u, strict, margin))
    })?;
    let mut functional = vec![0.0; strata.atom_count()];
    let mut margins = Vec::with_capacity(strata.block_count());
    let mut strict_blocks = Vec::new();
    for (b, (u, strict, m)) in per_block.into_iter().enumerate() {
        strata.embed(&mut functional, b, &u);
        margins.push(m);
        if strict {
            strict_blocks.push(b);
        }
    }
    Ok(SeparationCertificate {
        functional: RandVar::new(functional),
        strict_set: Indicator::from_blocks(strata.algebra(), &strict_blocks),
        margin: strata.broadcast(&margins),
        distance,
    })
}

/// Margin a strict block must clear.
pub const STRICT_MARGIN: f64 = 1e-9;
/// Largest pairing gap allowed on blocks that are only supported.
pub const SUPPORT_GAP_TOL: f64 = 1e-6;

/// Certificate checks for one `(x, M)`: a positive margin exactly on
/// `[d* > 0]`, a supporting gap within tolerance elsewhere, and the strict
/// set equal to the blocks where `x` is not a member of `M` by direct test.
pub fn separation_check(
    strata: &Strata,
    x: &RandVar,
    body: &ConvexBody,
    norm: ConditionalNorm,
) -> Result<CheckRecord> {
    let cert = separate(strata, x, body, norm)?;
    let mut rec = CheckRecord::new("geometry.separation", "strict separation exactly where the random distance is positive")
        .checked(strata.block_count());
    let mut worst_gap = 0.0f64;
    for b in 0..strata.block_count() {
        let a0 = strata.block(b)[0];
        let z = strata.restrict(x, b);
        let w = strata.block_weights(b);
        let u = strata.restrict(&cert.functional, b);
        let paired: f64 = z.iter().zip(&u).zip(&w).map(|((zi, ui), wi)| wi * zi * ui).sum();
        let sup = body.block(b).support(&u, &w)?;
        let gap = paired - sup;
        let strict = cert.strict_set.contains(a0);
        let positive = cert.distance[a0] > 0.0;
        let outside = !body.block(b).contains(&z, STRICT_MARGIN);
        let w = || Witness::new("").input("x", x).input("u", &cert.functional);
        if strict != positive {
            rec.fail(Witness { note: format!("strict set disagrees with [d* > 0] on block {b}"), ..w() }.row(a0, b, cert.distance[a0], 0.0));
        }
        if positive != outside {
            rec.fail(Witness { note: format!("[d* > 0] disagrees with direct membership on block {b}"), ..w() }.row(a0, b, cert.distance[a0], 0.0));
        }
        if strict {
            if !(gap > STRICT_MARGIN) {
                rec.fail(Witness { note: format!("margin not strictly positive on block {b}"), ..w() }.row(a0, b, paired, sup));
            }
        } else {
            worst_gap = worst_gap.max(gap.abs());
            if gap.abs() > SUPPORT_GAP_TOL {
                rec.fail(Witness { note: format!("supporting gap too large on block {b}"), ..w() }.row(a0, b, paired, sup));
            }
        }
    }
    Ok(rec.metric("max_support_gap", worst_gap))
}

/// An outward normal at a boundary point `z` of the set, `None` when `z` is interior.
fn supporting_normal(set: &BlockSet, z: &[f64]) -> Option<Vec<f64>> {
    match set {
        BlockSet::Box { lo, hi } => {
            let n = z.len();
            (0..n).find_map(|i| {
                let tol = BOUNDARY_TOL * (1.0 + hi[i].abs() + lo[i].abs());
                let mut e = vec![0.0; n];
                if z[i] >= hi[i] - tol {
                    e[i] = 1.0;
                    Some(e)
                } else if z[i] <= lo[i] + tol {
                    e[i] = -1.0;
                    Some(e)
                } else {
                    None
                }
            })
        }
        BlockSet::Hull { points } => qp::supporting_normal(z, points),
        BlockSet::Polyhedron { rows } => rows
            .iter()
            .find(|(a, b)| qp::dot(a, z) >= b - BOUNDARY_TOL * (1.0 + b.abs()))
            .map(|(a, _)| a.clone()),
    }
}
