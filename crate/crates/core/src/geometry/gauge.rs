use super::body::{BlockSet, ConvexBody};
use crate::error::{RcaError, Result};
use crate::par;
use crate::prob::{RandVar, Strata, TOL_ORACLE};
use crate::report::{CheckRecord, Witness};

const MEMBER_TOL: f64 = 1e-15;
const BRACKET_CAP: f64 = 1e9;

/// `inf { t > 0 : z in t * set }` by bisection on the membership oracle.
pub fn gauge_block(set: &BlockSet, z: &[f64]) -> Result<f64> {
    if z.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let inside = |t: f64| {
        let scaled: Vec<f64> = z.iter().map(|v| v / t).collect();
        set.contains(&scaled, MEMBER_TOL)
    };
    let mut hi = 1.0;
    while !inside(hi) {
        hi *= 2.0;
        if hi > BRACKET_CAP {
            return Err(RcaError::NoConvergence(format!(
                "no gauge bracket below {BRACKET_CAP:e}: the body does not absorb this vector"
            )));
        }
    }
    let mut lo = hi / 2.0;
    while inside(lo) {
        hi = lo;
        lo /= 2.0;
        if lo < 1e-300 {
            return Ok(0.0);
        }
    }
    while hi - lo > 1e-14 * hi {
        let mid = 0.5 * (lo + hi);
        if inside(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// The random gauge (Minkowski functional) of a balanced, absorbent convex body.
pub fn gauge(strata: &Strata, body: &ConvexBody, x: &RandVar) -> Result<RandVar> {
    body.validate(strata)?;
    if !(body.claims_balanced && body.claims_absorbent) {
        return Err(RcaError::InvalidParameter(
            "gauge needs a body flagged balanced and absorbent".into(),
        ));
    }
    body.verify_flags()?;
    strata.check_len(x)?;
    x.check_finite()?;
    let vals = par::try_map_range(strata.block_count(), |b| {
        gauge_block(body.block(b), &strata.restrict(x, b))
    })?;
    Ok(strata.broadcast(&vals))
}

/// Margin used by the independent strict-interior oracle.
const INTERIOR_MARGIN: f64 = 1e-6;

/// The inclusion chain `interior(U) c {p_U < 1} c U c {p_U <= 1}` on samples,
/// per block.
pub fn gauge_sandwich_check(strata: &Strata, body: &ConvexBody, samples: &[RandVar]) -> Result<CheckRecord> {
    let k = strata.block_count();
    let rows = par::try_map_range(samples.len(), |i| {
        let x = &samples[i];
        let p = gauge(strata, body, x)?;
        let mut fails = Vec::new();
        for b in 0..k {
            let z = strata.restrict(x, b);
            let set = body.block(b);
            let pb = p[strata.block(b)[0]];
            let member = set.contains(&z, TOL_ORACLE);
            let a0 = strata.block(b)[0];
            if set.interior_with_margin(&z, INTERIOR_MARGIN) && !(pb < 1.0 - TOL_ORACLE) {
                fails.push(Witness::new("interior point with gauge >= 1").input("x", x).row(a0, b, pb, 1.0));
            }
            if pb < 1.0 - TOL_ORACLE && !member {
                fails.push(Witness::new("gauge < 1 but not a member").input("x", x).row(a0, b, pb, 1.0));
            }
            if member && pb > 1.0 + TOL_ORACLE {
                fails.push(Witness::new("member with gauge > 1").input("x", x).row(a0, b, pb, 1.0));
            }
        }
        Ok::<_, RcaError>(fails)
    })?;
    Ok(CheckRecord::new("geometry.gauge_sandwich", "gauge sandwich between interior and closure")
        .checked(samples.len())
        .with_failures(rows.into_iter().flatten()))
}
