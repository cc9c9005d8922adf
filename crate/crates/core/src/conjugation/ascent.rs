//! Brute-force conjugation for black-box oracles.
//!
//! Per block, the conjugate `sup_z E[z y | F] - f(z)` is maximized by a
//! pattern search (coordinate lines plus the constant direction) on a box
//! `[-r, r]^B`. The step shrinks geometrically; the box doubles while the
//! optimum sits on its edge. A running value above `divergence` is reported as
//! `+inf`.

use crate::error::{RcaError, Result};
use crate::geometry::dot;
use crate::par;
use crate::prob::{Oracle, RandVar, Strata};

use super::ConjugateValue;

#[derive(Debug, Clone, PartialEq)]
pub struct AscentConfig {
    /// Initial box half-width, multiplied by `1 + max|seed|`.
    pub radius: f64,
    /// Grid points per search line (odd).
    pub grid: usize,
    pub max_radius: f64,
    pub divergence: f64,
    /// Smallest step, relative to the box half-width.
    pub step_floor: f64,
    pub max_sweeps: usize,
    /// Extra starting points; the origin is always tried.
    pub seeds: Vec<RandVar>,
}

impl Default for AscentConfig {
    fn default() -> Self {
        Self {
            radius: 8.0,
            grid: 9,
            max_radius: 1e9,
            divergence: 1e6,
            step_floor: 1e-11,
            max_sweeps: 2000,
            seeds: Vec::new(),
        }
    }
}

/// `f(z)` at block `b` with `z` embedded and zeros elsewhere.
fn block_value<O: Oracle + ?Sized>(f: &O, strata: &Strata, b: usize, z: &[f64]) -> Result<f64> {
    let mut full = vec![0.0; strata.atom_count()];
    strata.embed(&mut full, b, z);
    let v = f.eval(&RandVar::new(full))?[strata.block(b)[0]];
    if v.is_nan() {
        return Err(RcaError::Oracle(format!("oracle returned NaN on block {b}")));
    }
    Ok(v)
}

/// Unit coordinate directions plus the constant direction.
fn coordinate_dirs(n: usize) -> Vec<Vec<f64>> {
    let mut dirs: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    if n > 1 {
        dirs.push(vec![1.0; n]);
    }
    dirs
}

/// Maximize `phi` from `(z, v)` over `[-r, r]^n` along `dirs`. Stops early once `v` passes `stop_above`.
fn pattern_search(
    phi: &dyn Fn(&[f64]) -> Result<f64>,
    dirs: &[Vec<f64>],
    mut z: Vec<f64>,
    mut v: f64,
    r: f64,
    cfg: &AscentConfig,
    stop_above: f64,
) -> Result<(Vec<f64>, f64)> {
    let k = (cfg.grid.max(3) / 2) as i64;
    let mut h = r / k as f64;
    while h > cfg.step_floor * r {
        for _ in 0..cfg.max_sweeps {
            let mut improved = false;
            for d in dirs {
                let mut best: Option<Vec<f64>> = None;
                for j in (-k..=k).filter(|&j| j != 0) {
                    let cand: Vec<f64> = z
                        .iter()
                        .zip(d)
                        .map(|(zi, di)| (zi + j as f64 * h * di).clamp(-r, r))
                        .collect();
                    let val = phi(&cand)?;
                    if val > v {
                        v = val;
                        best = Some(cand);
                    }
                }
                if let Some(c) = best {
                    z = c;
                    improved = true;
                    if v > stop_above {
                        return Ok((z, v));
                    }
                }
            }
            if !improved {
                break;
            }
        }
        h /= k as f64;
    }
    Ok((z, v))
}

/// Pattern search with a doubling box. Returns `+inf` once the value passes
/// the divergence threshold or keeps rising linearly with the radius.
fn maximize(
    phi: &dyn Fn(&[f64]) -> Result<f64>,
    dirs: &[Vec<f64>],
    mut z: Vec<f64>,
    mut v: f64,
    cfg: &AscentConfig,
    what: &str,
) -> Result<(f64, Option<Vec<f64>>)> {
    let scale = 1.0 + z.iter().fold(0.0f64, |m, zi| m.max(zi.abs()));
    let mut r = cfg.radius * scale;
    let mut prev = f64::NEG_INFINITY;
    let mut prev_rise = f64::NAN;
    let mut accelerating = 0;
    loop {
        (z, v) = pattern_search(phi, dirs, z, v, r, cfg, cfg.divergence)?;
        if v > cfg.divergence {
            return Ok((f64::INFINITY, None));
        }
        let on_edge = z.iter().any(|zi| zi.abs() >= r * (1.0 - 1e-9));
        if !on_edge {
            return Ok((v, Some(z)));
        }
        // the supremum is approached at infinity but has levelled off
        if v - prev <= 1e-10 * (1.0 + v.abs()) {
            return Ok((v, Some(z)));
        }
        // a rise that keeps doubling with the radius is linear growth
        let rise = v - prev;
        if rise > 1.5 * prev_rise && prev_rise > 0.0 {
            accelerating += 1;
            if accelerating >= 4 {
                return Ok((f64::INFINITY, None));
            }
        } else {
            accelerating = 0;
        }
        prev_rise = rise;
        if r >= cfg.max_radius {
            return Err(RcaError::NoConvergence(format!(
                "{what}: still rising at radius {r:e} (value {v})"
            )));
        }
        prev = v;
        r *= 2.0;
    }
}

/// One block of the oracle conjugate. Returns the value and the best point found.
pub(crate) fn block_conjugate_ascent<O: Oracle + ?Sized>(
    f: &O,
    strata: &Strata,
    b: usize,
    yb: &[f64],
    cfg: &AscentConfig,
) -> Result<(f64, Option<Vec<f64>>)> {
    let w = strata.block_weights(b);
    let wy: Vec<f64> = w.iter().zip(yb).map(|(wi, yi)| wi * yi).collect();
    let phi = |z: &[f64]| -> Result<f64> {
        let fv = block_value(f, strata, b, z)?;
        Ok(if fv == f64::NEG_INFINITY {
            f64::INFINITY
        } else if fv == f64::INFINITY {
            f64::NEG_INFINITY
        } else {
            dot(&wy, z) - fv
        })
    };

    let n = yb.len();
    let mut best: (f64, Option<Vec<f64>>) = (f64::NEG_INFINITY, None);
    let starts = std::iter::once(vec![0.0; n]).chain(cfg.seeds.iter().map(|s| strata.restrict(s, b)));
    for z in starts {
        let v = phi(&z)?;
        if v == f64::INFINITY {
            return Ok((v, Some(z)));
        }
        if v > best.0 {
            best = (v, Some(z));
        }
    }
    let (v, Some(z)) = best else {
        // f is +inf at every start: nothing to climb from
        return Ok((f64::NEG_INFINITY, None));
    };
    maximize(&phi, &coordinate_dirs(n), z, v, cfg, &format!("conjugate ascent on block {b}"))
}

/// Conjugate of a local oracle by per-block pattern search.
pub fn conjugate_ascent<O: Oracle + ?Sized>(
    f: &O,
    strata: &Strata,
    y: &RandVar,
    cfg: &AscentConfig,
) -> Result<ConjugateValue> {
    strata.check_len(y)?;
    y.check_finite()?;
    let per_block = par::try_map_range(strata.block_count(), |b| {
        block_conjugate_ascent(f, strata, b, &strata.restrict(y, b), cfg)
    })?;
    Ok(ConjugateValue::from_blocks(strata, per_block))
}

/// Biconjugate of a local oracle, one block at a time: pattern search on
/// `y -> E[x y | F] - f*(y)` with `f*` from [`conjugate_ascent`]. When no
/// starting dual point has a finite conjugate the block value is `-inf`.
pub fn biconjugate_ascent<O: Oracle + ?Sized>(
    f: &O,
    strata: &Strata,
    x: &RandVar,
    cfg: &AscentConfig,
) -> Result<ConjugateValue> {
    strata.check_len(x)?;
    x.check_finite()?;
    let per_block = par::try_map_range(strata.block_count(), |b| {
        block_biconjugate_ascent(f, strata, b, &strata.restrict(x, b), cfg)
    })?;
    Ok(ConjugateValue::from_blocks(strata, per_block))
}

fn block_biconjugate_ascent<O: Oracle + ?Sized>(
    f: &O,
    strata: &Strata,
    b: usize,
    xb: &[f64],
    cfg: &AscentConfig,
) -> Result<(f64, Option<Vec<f64>>)> {
    let w = strata.block_weights(b);
    let n = xb.len();
    let h = |y: &[f64]| -> Result<f64> {
        let (c, _) = block_conjugate_ascent(f, strata, b, y, cfg)?;
        Ok(if c == f64::INFINITY {
            f64::NEG_INFINITY
        } else if c == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            w.iter().zip(xb).zip(y).map(|((wi, xi), yi)| wi * xi * yi).sum::<f64>() - c
        })
    };

    let mut candidates = vec![vec![-1.0; n], vec![0.0; n]];
    for j in 0..n {
        let mut y = vec![0.0; n];
        y[j] = -1.0 / w[j];
        candidates.push(y);
    }
    let mut best: (f64, Option<Vec<f64>>) = (f64::NEG_INFINITY, None);
    for y in candidates {
        let v = h(&y)?;
        if v == f64::INFINITY {
            return Ok((v, Some(y)));
        }
        if v > best.0 {
            best = (v, Some(y));
        }
    }
    let (v, Some(y)) = best else {
        return Ok((f64::NEG_INFINITY, None));
    };

    // mass transfers keep E[y | F] fixed, so the search can slide along the
    // hyperplane where conjugates of cash-invariant maps are finite
    let mut dirs = coordinate_dirs(n);
    for i in 0..n {
        for j in i + 1..n {
            let (a, c) = (1.0 / w[i], 1.0 / w[j]);
            let m = a.max(c);
            let mut d = vec![0.0; n];
            d[i] = a / m;
            d[j] = -c / m;
            dirs.push(d);
        }
    }
    maximize(&h, &dirs, y, v, cfg, &format!("biconjugate ascent on block {b}"))
}
