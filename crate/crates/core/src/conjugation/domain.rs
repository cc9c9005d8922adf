use serde::Serialize;

use super::ascent::{biconjugate_ascent, AscentConfig};
use super::biconjugate;
use crate::error::{RcaError, Result};
use crate::par;
use crate::prob::{Indicator, Oracle, RandVar, Strata, TOL_OPT};
use crate::report::{CheckRecord, Report, Witness};
use crate::risk::RiskMeasure;

/// Where an extended-valued local function is `-inf` somewhere (`mi`),
/// `+inf` on every probe (`pi`), or neither (`bp`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DomainClassification {
    pub mi: Indicator,
    pub pi: Indicator,
    pub bp: Indicator,
}

/// Classify blocks by direct evaluation on the probes. On a finite space the
/// essential unions over probes are plain unions of blocks.
pub fn classify_domain<O: Oracle + ?Sized>(
    f: &O,
    strata: &Strata,
    probes: &[RandVar],
) -> Result<DomainClassification> {
    if probes.is_empty() {
        return Err(RcaError::Empty("probe set"));
    }
    let values = par::try_map_range(probes.len(), |i| {
        strata.check_len(&probes[i])?;
        f.eval(&probes[i])
    })?;
    let (mut mi, mut pi, mut bp) = (Vec::new(), Vec::new(), Vec::new());
    for b in 0..strata.block_count() {
        let a = strata.block(b)[0];
        if values.iter().any(|v| v[a] == f64::NEG_INFINITY) {
            mi.push(b);
        } else if values.iter().all(|v| v[a] == f64::INFINITY) {
            pi.push(b);
        } else {
            bp.push(b);
        }
    }
    let alg = strata.algebra();
    Ok(DomainClassification {
        mi: Indicator::from_blocks(alg, &mi),
        pi: Indicator::from_blocks(alg, &pi),
        bp: Indicator::from_blocks(alg, &bp),
    })
}

/// Biconjugation against the function itself on a probe set.
///
/// Checks `f** <= f`, `f** = -inf` on `mi` and `+inf` on `pi`, and `f** = f`
/// on `bp`. The last one holds exactly when `f` is closed, so a failing
/// record there reports the convex-envelope deficit. With `known`, `f**` is
/// computed over the family's closed-form dual domain; otherwise by ascent,
/// seeded with the probes.
pub fn closedness_check<O: Oracle + ?Sized>(
    f: &O,
    strata: &Strata,
    probes: &[RandVar],
    known: Option<&RiskMeasure>,
    cfg: &AscentConfig,
) -> Result<Report> {
    let cls = classify_domain(f, strata, probes)?;
    let mut cfg = cfg.clone();
    cfg.seeds.extend(probes.iter().cloned());
    let tol_equal = if known.is_some() { TOL_OPT } else { 1e-5 };

    let rows = par::try_map_range(probes.len(), |i| {
        let p = &probes[i];
        let fp = f.eval(p)?;
        let bi = match known {
            Some(m) => biconjugate(m, p)?.value,
            None => biconjugate_ascent(f, strata, p, &cfg)?.value,
        };
        Ok::<_, RcaError>((fp, bi))
    })?;

    let mut below = CheckRecord::new("closedness.biconjugate_below", "f** <= f").checked(probes.len());
    let mut inherit = CheckRecord::new(
        "closedness.infinite_parts",
        "f** is -inf where f takes -inf and +inf where f is identically +inf",
    )
    .checked(probes.len());
    let mut equal = CheckRecord::new("closedness.biconjugate_equals_f", "f** = f where f is proper")
        .checked(probes.len());
    let mut max_gap = 0.0f64;
    for (i, (fp, bi)) in rows.iter().enumerate() {
        let p = &probes[i];
        if !bi.le(fp, TOL_OPT) {
            below.fail(Witness::new("f** > f").trial(0, i).input("x", p).compare(strata, bi, fp, TOL_OPT, false));
        }
        for a in 0..strata.atom_count() {
            let expected = if cls.mi.contains(a) {
                Some(f64::NEG_INFINITY)
            } else if cls.pi.contains(a) {
                Some(f64::INFINITY)
            } else {
                None
            };
            match expected {
                Some(e) if bi[a] != e => {
                    inherit.fail(Witness::new("infinite part not inherited").trial(0, i).input("x", p).row(
                        a,
                        strata.block_of(a),
                        bi[a],
                        e,
                    ));
                }
                None => {
                    let gap = if bi[a] == fp[a] { 0.0 } else { (bi[a] - fp[a]).abs() };
                    max_gap = max_gap.max(gap);
                    if gap > tol_equal {
                        equal.fail(Witness::new("convex-envelope deficit f - f**").trial(0, i).input("x", p).row(
                            a,
                            strata.block_of(a),
                            bi[a],
                            fp[a],
                        ));
                    }
                }
                _ => {}
            }
        }
    }
    let mut report = Report::new();
    report.push(
        CheckRecord::new("closedness.classification", "MI, PI and BP partition the space")
            .checked(strata.block_count())
            .metric("mi_atoms", cls.mi.atoms().count() as f64)
            .metric("pi_atoms", cls.pi.atoms().count() as f64)
            .metric("bp_atoms", cls.bp.atoms().count() as f64),
    );
    report.push(below);
    report.push(inherit);
    report.push(equal.metric("max_gap", max_gap));
    Ok(report)
}
