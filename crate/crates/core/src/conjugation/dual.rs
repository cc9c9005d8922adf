//! Closed-form conjugates and biconjugation over known dual domains.

use crate::error::{RcaError, Result};
use crate::geometry::{dot, BlockSet};
use crate::risk::{RiskFamily, RiskMeasure, DENSITY_TOL};

/// Cap on the number of dual vertices enumerated per block.
pub const VERTEX_BUDGET: u128 = 1_000_000;

const MIRROR_ITERS: usize = 20_000;

/// `y <= 0` and `E[y | B] = -1` on one block.
fn block_feasible(yb: &[f64], w: &[f64]) -> bool {
    yb.iter().all(|&v| v.is_finite() && v <= DENSITY_TOL) && (dot(w, yb) + 1.0).abs() <= DENSITY_TOL
}

/// Closed-form `f*(y)` on block `b`; `None` for the negative controls.
pub(crate) fn block_conjugate(measure: &RiskMeasure, b: usize, yb: &[f64]) -> Option<f64> {
    let s = measure.strata();
    let w = s.block_weights(b);
    let feasible = block_feasible(yb, &w);
    let inf = f64::INFINITY;
    Some(match measure.family() {
        RiskFamily::NegCondExpect => {
            if yb.iter().all(|v| (v + 1.0).abs() <= DENSITY_TOL) {
                0.0
            } else {
                inf
            }
        }
        RiskFamily::Entropic { beta } => {
            if feasible {
                let ent: f64 = yb
                    .iter()
                    .zip(&w)
                    .map(|(yi, wi)| {
                        let q = (-yi).max(0.0);
                        if q > 0.0 {
                            wi * q * q.ln()
                        } else {
                            0.0
                        }
                    })
                    .sum();
                ent / beta
            } else {
                inf
            }
        }
        RiskFamily::Avar { lambda } => {
            let cap = 1.0 / lambda[b];
            if feasible && yb.iter().all(|v| -v <= cap * (1.0 + DENSITY_TOL)) {
                0.0
            } else {
                inf
            }
        }
        RiskFamily::WorstCase => {
            if feasible {
                0.0
            } else {
                inf
            }
        }
        RiskFamily::ScenarioRobust { densities } => {
            let pts: Vec<Vec<f64>> = densities.iter().map(|d| s.restrict(d, b)).collect();
            if feasible && BlockSet::hull(pts).contains(yb, DENSITY_TOL) {
                0.0
            } else {
                inf
            }
        }
        RiskFamily::BrokenSquare | RiskFamily::NonLocalMean => return None,
    })
}

/// A point attaining the closed-form conjugate on block `b`, when one exists.
pub(crate) fn block_conjugate_maximizer(measure: &RiskMeasure, yb: &[f64], value: f64) -> Option<Vec<f64>> {
    if !value.is_finite() {
        return None;
    }
    match measure.family() {
        RiskFamily::Entropic { beta } => {
            // E[x y] - f(x) is maximal at x = -log(-y) / beta, unattained if some y = 0
            yb.iter().all(|&v| v < 0.0).then(|| yb.iter().map(|v| -(-v).ln() / beta).collect())
        }
        _ => Some(vec![0.0; yb.len()]),
    }
}

/// Vertices of `{ y : -cap <= y <= 0, E[y | B] = -1 }` (no lower bound when `cap` is `None`).
pub(crate) fn density_vertices(w: &[f64], cap: Option<f64>) -> Result<Vec<Vec<f64>>> {
    let n = w.len();
    let Some(cap) = cap else {
        return Ok((0..n)
            .map(|j| {
                let mut y = vec![0.0; n];
                y[j] = -1.0 / w[j];
                y
            })
            .collect());
    };
    let needed = (n as u128) << (n - 1);
    if needed > VERTEX_BUDGET {
        return Err(RcaError::BudgetExceeded {
            needed,
            budget: VERTEX_BUDGET,
        });
    }
    let mut out = Vec::new();
    for j in 0..n {
        let others: Vec<usize> = (0..n).filter(|&i| i != j).collect();
        for mask in 0u64..(1u64 << others.len()) {
            let mut q = vec![0.0; n];
            let mut mass = 0.0;
            for (bit, &i) in others.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    q[i] = cap;
                    mass += w[i] * cap;
                }
            }
            let qj = (1.0 - mass) / w[j];
            if qj >= -1e-12 && qj <= cap * (1.0 + 1e-12) {
                q[j] = qj.clamp(0.0, cap);
                out.push(q.iter().map(|v| -v).collect());
            }
        }
    }
    Ok(out)
}

/// `f**(x)` on block `b` over the closed-form dual domain of a shipped family.
pub(crate) fn block_biconjugate(measure: &RiskMeasure, b: usize, xb: &[f64]) -> Result<(f64, Vec<f64>)> {
    let s = measure.strata();
    let w = s.block_weights(b);
    let n = xb.len();
    let score = |y: &[f64]| -> f64 {
        let fc = block_conjugate(measure, b, y).unwrap_or(f64::INFINITY);
        let paired: f64 = w.iter().zip(xb).zip(y).map(|((wi, xi), yi)| wi * xi * yi).sum();
        if fc == f64::INFINITY {
            f64::NEG_INFINITY
        } else {
            paired - fc
        }
    };
    let best_of = |cands: Vec<Vec<f64>>| -> (f64, Vec<f64>) {
        let mut best = (f64::NEG_INFINITY, vec![-1.0; n]);
        for y in cands {
            let v = score(&y);
            if v > best.0 {
                best = (v, y);
            }
        }
        best
    };
    match measure.family() {
        RiskFamily::NegCondExpect => Ok(best_of(vec![vec![-1.0; n]])),
        RiskFamily::Avar { lambda } => Ok(best_of(density_vertices(&w, Some(1.0 / lambda[b]))?)),
        RiskFamily::WorstCase => Ok(best_of(density_vertices(&w, None)?)),
        RiskFamily::ScenarioRobust { densities } => Ok(best_of(densities.iter().map(|d| s.restrict(d, b)).collect())),
        RiskFamily::Entropic { .. } => Ok(mirror_ascent(&w, &score)),
        RiskFamily::BrokenSquare | RiskFamily::NonLocalMean => Err(RcaError::Unsupported(format!(
            "{} has no closed-form dual domain",
            measure.family().name()
        ))),
    }
}

/// Exponentiated-gradient ascent over conditional probabilities `q` (so that
/// `y = -q / w` stays feasible by construction), with a numerical gradient
/// taken along the simplex and an adaptive step.
fn mirror_ascent(w: &[f64], score: &dyn Fn(&[f64]) -> f64) -> (f64, Vec<f64>) {
    let n = w.len();
    let to_y = |q: &[f64]| -> Vec<f64> { q.iter().zip(w).map(|(qi, wi)| -qi / wi).collect() };
    let j = |q: &[f64]| score(&to_y(q));
    let mut q = w.to_vec();
    let mut v = j(&q);
    if n == 1 {
        return (v, to_y(&q));
    }
    let mut eta = 1.0f64;
    for _ in 0..MIRROR_ITERS {
        // directional derivatives along e_i - e_r give the gradient up to a
        // constant; r is the heaviest atom so the step is limited by q_i alone
        let r = (0..n).fold(0, |m, i| if q[i] > q[m] { i } else { m });
        let mut g = vec![0.0; n];
        for i in (0..n).filter(|&i| i != r) {
            let h = 1e-6 * q[i];
            let mut up = q.clone();
            up[i] += h;
            up[r] -= h;
            let mut dn = q.clone();
            dn[i] -= h;
            dn[r] += h;
            g[i] = (j(&up) - j(&dn)) / (2.0 * h);
        }
        if g.iter().any(|gi| !gi.is_finite()) {
            break;
        }
        let gmax = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut accepted = false;
        while eta > 1e-12 {
            let mut cand: Vec<f64> = q.iter().zip(&g).map(|(qi, gi)| qi * (eta * (gi - gmax)).exp()).collect();
            let total: f64 = cand.iter().sum();
            cand.iter_mut().for_each(|c| *c /= total);
            let cv = j(&cand);
            if cv > v {
                let gain = cv - v;
                q = cand;
                v = cv;
                eta *= 2.0;
                accepted = gain > 1e-15 * (1.0 + v.abs());
                break;
            }
            eta /= 2.0;
        }
        if !accepted {
            break;
        }
    }
    (v, to_y(&q))
}
