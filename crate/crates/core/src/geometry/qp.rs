//! Small dense solvers for projections onto polytopes and polyhedra.

use minilp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{RcaError, Result};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Minimum-norm point of the affine hull of `pts[s]`, as affine weights.
fn affine_min_norm(pts: &[Vec<f64>], s: &[usize]) -> Option<Vec<f64>> {
    let k = s.len();
    let mut a = vec![vec![0.0; k + 1]; k + 1];
    for i in 0..k {
        for j in 0..k {
            a[i][j] = dot(&pts[s[i]], &pts[s[j]]);
        }
        a[i][k] = 1.0;
        a[k][i] = 1.0;
    }
    let mut b = vec![0.0; k + 1];
    b[k] = 1.0;
    solve_dense(a, b).map(|mut v| {
        v.truncate(k);
        v
    })
}

/// Result of [`min_norm_point`].
#[derive(Debug, Clone)]
pub(crate) struct MinNorm {
    pub point: Vec<f64>,
    /// Convex weights over the input points.
    pub weights: Vec<f64>,
}

/// Wolfe's algorithm for the point of smallest Euclidean norm in `conv(pts)`.
pub(crate) fn min_norm_point(pts: &[Vec<f64>]) -> Result<MinNorm> {
    const CAP: usize = 10_000;
    let n = pts.first().ok_or(RcaError::Empty("polytope generators"))?.len();
    let scale = pts.iter().map(|p| dot(p, p)).fold(0.0, f64::max).max(1e-300);
    let eps = 1e-15 * scale;

    let start = (0..pts.len())
        .min_by(|&i, &j| dot(&pts[i], &pts[i]).total_cmp(&dot(&pts[j], &pts[j])))
        .expect("nonempty");
    let mut s = vec![start];
    let mut lam = vec![1.0];
    let mut x = pts[start].clone();

    let combine = |s: &[usize], w: &[f64]| {
        let mut v = vec![0.0; n];
        for (&i, &wi) in s.iter().zip(w) {
            for (vk, pk) in v.iter_mut().zip(&pts[i]) {
                *vk += wi * pk;
            }
        }
        v
    };

    for _ in 0..CAP {
        let xx = dot(&x, &x);
        if xx <= eps * 1e-10 {
            break;
        }
        let j = (0..pts.len())
            .min_by(|&a, &b| dot(&x, &pts[a]).total_cmp(&dot(&x, &pts[b])))
            .expect("nonempty");
        if dot(&x, &pts[j]) >= xx - 1e-12 * scale || s.contains(&j) {
            break;
        }
        s.push(j);
        lam.push(0.0);
        loop {
            let mu = match affine_min_norm(pts, &s) {
                Some(mu) => mu,
                None => {
                    // degenerate corral; drop the newest point and stop
                    s.pop();
                    lam.pop();
                    break;
                }
            };
            if mu.iter().all(|&m| m > 1e-14) {
                lam = mu;
                break;
            }
            let mut theta = 1.0f64;
            for (l, m) in lam.iter().zip(&mu) {
                if *m <= 1e-14 {
                    let d = l - m;
                    if d > 0.0 {
                        theta = theta.min(l / d);
                    }
                }
            }
            for (l, m) in lam.iter_mut().zip(&mu) {
                *l += theta * (m - *l);
            }
            let mut k = 0;
            while k < s.len() {
                if lam[k] <= 1e-14 {
                    s.remove(k);
                    lam.remove(k);
                } else {
                    k += 1;
                }
            }
            if s.is_empty() {
                return Err(RcaError::NoConvergence("min-norm corral emptied".into()));
            }
            let total: f64 = lam.iter().sum();
            lam.iter_mut().for_each(|l| *l /= total);
        }
        x = combine(&s, &lam);
    }
    let mut weights = vec![0.0; pts.len()];
    for (&i, &l) in s.iter().zip(&lam) {
        weights[i] = l;
    }
    Ok(MinNorm { point: x, weights })
}

/// Projection of `z` onto `conv(gens)` in the norm `sqrt(sum w_i v_i^2)`.
pub(crate) fn project_hull(z: &[f64], gens: &[Vec<f64>], w: &[f64]) -> Result<Vec<f64>> {
    let sw: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let shifted: Vec<Vec<f64>> = gens
        .iter()
        .map(|g| g.iter().zip(z).zip(&sw).map(|((gi, zi), s)| s * (gi - zi)).collect())
        .collect();
    let mn = min_norm_point(&shifted)?;
    // rebuild from the convex weights so the projection lies in the hull exactly
    let mut out = vec![0.0; z.len()];
    for (g, &l) in gens.iter().zip(&mn.weights) {
        for (o, gi) in out.iter_mut().zip(g) {
            *o += l * gi;
        }
    }
    Ok(out)
}

/// Euclidean projection onto the probability simplex.
pub(crate) fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Projection onto `{m : a_k . m <= b_k}` in the `w`-weighted norm (Dykstra).
pub(crate) fn project_polyhedron(z: &[f64], rows: &[(Vec<f64>, f64)], w: &[f64]) -> Result<Vec<f64>> {
    const CAP: usize = 100_000;
    if rows.is_empty() {
        return Ok(z.to_vec());
    }
    let n = z.len();
    let mut x = z.to_vec();
    let mut incr = vec![vec![0.0; n]; rows.len()];
    for _ in 0..CAP {
        let before = x.clone();
        for (k, (a, b)) in rows.iter().enumerate() {
            let y: Vec<f64> = x.iter().zip(&incr[k]).map(|(xi, pi)| xi + pi).collect();
            let viol = dot(a, &y) - b;
            let denom: f64 = a.iter().zip(w).map(|(ai, wi)| ai * ai / wi).sum();
            let proj: Vec<f64> = if viol > 0.0 && denom > 0.0 {
                let t = viol / denom;
                y.iter().zip(a).zip(w).map(|((yi, ai), wi)| yi - t * ai / wi).collect()
            } else {
                y.clone()
            };
            for i in 0..n {
                incr[k][i] = y[i] - proj[i];
            }
            x = proj;
        }
        let moved = x.iter().zip(&before).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let worst = rows.iter().map(|(a, b)| dot(a, &x) - b).fold(f64::NEG_INFINITY, f64::max);
        if moved <= 1e-14 && worst <= 1e-12 {
            return Ok(x);
        }
    }
    Err(RcaError::NoConvergence("polyhedral projection hit its iteration cap".into()))
}

/// A free LP variable as the difference of two nonnegative columns; the
/// solver returns NaN on free columns when the rows are rank deficient.
#[derive(Clone, Copy)]
struct Free(minilp::Variable, minilp::Variable);

impl Free {
    fn new(pb: &mut Problem, cost: f64) -> Self {
        Self(pb.add_var(cost, (0.0, f64::INFINITY)), pb.add_var(-cost, (0.0, f64::INFINITY)))
    }

    fn terms(self, coef: f64) -> [(minilp::Variable, f64); 2] {
        [(self.0, coef), (self.1, -coef)]
    }

    fn value(self, sol: &minilp::Solution) -> f64 {
        sol[self.0] - sol[self.1]
    }
}

/// `max c . m` over the polyhedron `{a_k . m <= b_k}`; `+inf` when unbounded.
pub(crate) fn lp_support(c: &[f64], rows: &[(Vec<f64>, f64)]) -> Result<f64> {
    // coordinates absent from the objective and every row are irrelevant; the
    // solver misreports free empty columns as unbounded, so leave them out
    let live: Vec<usize> = (0..c.len())
        .filter(|&i| c[i] != 0.0 || rows.iter().any(|(a, _)| a[i] != 0.0))
        .collect();
    let mut pb = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<Free> = live.iter().map(|&i| Free::new(&mut pb, c[i])).collect();
    for (a, b) in rows {
        let coef: Vec<f64> = live.iter().map(|&i| a[i]).collect();
        if coef.iter().all(|v| *v == 0.0) {
            if *b < 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            continue;
        }
        let expr: Vec<_> = vars.iter().zip(&coef).flat_map(|(v, &k)| v.terms(k)).collect();
        pb.add_constraint(expr.as_slice(), ComparisonOp::Le, *b);
    }
    if vars.is_empty() {
        return Ok(0.0);
    }
    match pb.solve() {
        Ok(sol) => Ok(sol.objective()),
        Err(minilp::Error::Unbounded) => Ok(f64::INFINITY),
        Err(minilp::Error::Infeasible) => Ok(f64::NEG_INFINITY),
    }
}

/// Which polyhedral distance [`lp_distance`] minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpNorm {
    /// `max_i |v_i|`
    Max,
    /// `sum_i w_i |v_i|`
    Weighted1,
}

/// Distance from `z` to `conv(gens)` (or to a polyhedron when `gens` is empty
/// and `rows` is not), for the polyhedral norms.
pub(crate) fn lp_distance(
    z: &[f64],
    gens: &[Vec<f64>],
    rows: &[(Vec<f64>, f64)],
    w: &[f64],
    norm: LpNorm,
) -> Result<f64> {
    let n = z.len();
    let mut pb = Problem::new(OptimizationDirection::Minimize);
    // point m in the set: either convex weights over gens or free coordinates
    let (lam, m_free) = if gens.is_empty() {
        let m: Vec<Free> = (0..n).map(|_| Free::new(&mut pb, 0.0)).collect();
        for (a, b) in rows {
            let expr: Vec<_> = m.iter().zip(a).flat_map(|(v, &k)| v.terms(k)).collect();
            pb.add_constraint(expr.as_slice(), ComparisonOp::Le, *b);
        }
        (Vec::new(), m)
    } else {
        let lam: Vec<_> = gens.iter().map(|_| pb.add_var(0.0, (0.0, f64::INFINITY))).collect();
        let ones: Vec<_> = lam.iter().map(|&v| (v, 1.0)).collect();
        pb.add_constraint(ones.as_slice(), ComparisonOp::Eq, 1.0);
        (lam, Vec::new())
    };
    let t = match norm {
        LpNorm::Max => vec![pb.add_var(1.0, (0.0, f64::INFINITY))],
        LpNorm::Weighted1 => w.iter().map(|&wi| pb.add_var(wi, (0.0, f64::INFINITY))).collect(),
    };
    for i in 0..n {
        let ti = if t.len() == 1 { t[0] } else { t[i] };
        // z_i - m_i <= t_i  and  m_i - z_i <= t_i
        let mut pos: Vec<_> = vec![(ti, 1.0)];
        let mut neg: Vec<_> = vec![(ti, 1.0)];
        if gens.is_empty() {
            pos.extend(m_free[i].terms(1.0));
            neg.extend(m_free[i].terms(-1.0));
        } else {
            for (g, &l) in gens.iter().zip(&lam) {
                pos.push((l, g[i]));
                neg.push((l, -g[i]));
            }
        }
        pb.add_constraint(pos.as_slice(), ComparisonOp::Ge, z[i]);
        pb.add_constraint(neg.as_slice(), ComparisonOp::Ge, -z[i]);
    }
    match pb.solve() {
        Ok(sol) => Ok(sol.objective().max(0.0)),
        Err(e) => Err(RcaError::NoConvergence(format!("distance LP: {e}"))),
    }
}

/// Find `n` with `n . (g - x) <= 0` for every generator and `n . (x - c) = 1`
/// for the centroid `c`: an outward normal of `conv(gens)` at `x`. `None` when
/// `x` is interior relative to the centroid.
pub(crate) fn supporting_normal(x: &[f64], gens: &[Vec<f64>]) -> Option<Vec<f64>> {
    let n = x.len();
    let k = gens.len() as f64;
    let c: Vec<f64> = (0..n).map(|i| gens.iter().map(|g| g[i]).sum::<f64>() / k).collect();
    let mut pb = Problem::new(OptimizationDirection::Minimize);
    let v: Vec<Free> = (0..n).map(|_| Free::new(&mut pb, 0.0)).collect();
    for g in gens {
        let expr: Vec<_> = v.iter().zip(g.iter().zip(x)).flat_map(|(vi, (gi, xi))| vi.terms(gi - xi)).collect();
        pb.add_constraint(expr.as_slice(), ComparisonOp::Le, 0.0);
    }
    let norm: Vec<_> = v.iter().zip(x.iter().zip(&c)).flat_map(|(vi, (xi, ci))| vi.terms(xi - ci)).collect();
    pb.add_constraint(norm.as_slice(), ComparisonOp::Eq, 1.0);
    let sol = pb.solve().ok()?;
    let n: Vec<f64> = v.iter().map(|vi| vi.value(&sol)).collect();
    n.iter().all(|e| e.is_finite()).then_some(n)
}

/// Minimize `sum_i w_i |z_i - (G lam)_i|^p` over the simplex by projected
/// gradient with backtracking, for `1 < p < inf`. Returns the `p`-th root.
pub(crate) fn pnorm_hull_distance(z: &[f64], gens: &[Vec<f64>], w: &[f64], p: f64) -> Result<f64> {
    const CAP: usize = 100_000;
    let m = gens.len();
    let point = |lam: &[f64]| -> Vec<f64> {
        (0..z.len())
            .map(|i| gens.iter().zip(lam).map(|(g, l)| l * g[i]).sum())
            .collect()
    };
    let obj = |lam: &[f64]| -> f64 {
        let q = point(lam);
        z.iter().zip(&q).zip(w).map(|((zi, qi), wi)| wi * (zi - qi).abs().powf(p)).sum()
    };
    // start from the Euclidean projection weights
    let sw: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let shifted: Vec<Vec<f64>> = gens
        .iter()
        .map(|g| g.iter().zip(z).zip(&sw).map(|((gi, zi), s)| s * (gi - zi)).collect())
        .collect();
    let mut lam = min_norm_point(&shifted)?.weights;
    let mut f = obj(&lam);
    let mut step = 1.0;
    for _ in 0..CAP {
        if f <= 1e-300 {
            return Ok(0.0);
        }
        let q = point(&lam);
        let r: Vec<f64> = z
            .iter()
            .zip(&q)
            .zip(w)
            .map(|((zi, qi), wi)| {
                let d = zi - qi;
                -p * wi * d.abs().powf(p - 1.0) * d.signum()
            })
            .collect();
        let grad: Vec<f64> = gens.iter().map(|g| dot(g, &r)).collect();
        let mut improved = false;
        let mut s = step * 2.0;
        for _ in 0..60 {
            let trial: Vec<f64> = lam.iter().zip(&grad).map(|(l, g)| l - s * g).collect();
            let cand = project_simplex(&trial);
            let fc = obj(&cand);
            if fc < f - 1e-16 * f.max(1.0) {
                let change = cand.iter().zip(&lam).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                lam = cand;
                let rel = (f - fc) / f;
                f = fc;
                step = s;
                improved = true;
                if rel < 1e-15 || change < 1e-15 {
                    return Ok(f.powf(1.0 / p));
                }
                break;
            }
            s *= 0.5;
        }
        if !improved || m == 1 {
            return Ok(f.powf(1.0 / p));
        }
    }
    Ok(f.powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lp_support_rank_deficient_polar() {
        // polar of two generators in three coordinates: unbounded along one line
        let w = [0.2, 0.4, 0.4];
        let rows: Vec<(Vec<f64>, f64)> = [[1.0, 0.0, 0.5], [0.0, 1.0, -0.5]]
            .iter()
            .flat_map(|g| {
                let a: Vec<f64> = g.iter().zip(&w).map(|(x, y)| x * y).collect();
                [(a.clone(), 1.0), (a.iter().map(|v| -v).collect(), 1.0)]
            })
            .collect();
        let c: Vec<f64> = [1.0, 0.0, 0.5].iter().zip(&w).map(|(x, y)| x * y).collect();
        assert!((lp_support(&c, &rows).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(lp_support(&[0.0, 0.0, 1.0], &rows).unwrap(), f64::INFINITY);
    }

    #[test]
    fn min_norm_segment() {
        let pts = vec![vec![-1.0, 1.0], vec![1.0, 1.0]];
        let mn = min_norm_point(&pts).unwrap();
        assert!(norm2(&mn.point) - 1.0 < 1e-12);
        assert!((mn.point[0]).abs() < 1e-12);
    }

    #[test]
    fn min_norm_contains_origin() {
        let pts = vec![vec![-1.0, -1.0], vec![2.0, -1.0], vec![0.0, 3.0]];
        let mn = min_norm_point(&pts).unwrap();
        assert!(norm2(&mn.point) < 1e-12);
    }

    #[test]
    fn project_onto_triangle_vertex_and_face() {
        let gens = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let w = [1.0, 1.0];
        let p = project_hull(&[2.0, -1.0], &gens, &w).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1].abs() < 1e-12);
        let p = project_hull(&[1.0, 1.0], &gens, &w).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn simplex_projection() {
        let p = project_simplex(&[0.5, 0.5, 0.5]);
        assert!(p.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
        let p = project_simplex(&[3.0, 0.0]);
        assert_eq!(p, vec![1.0, 0.0]);
    }

    #[test]
    fn dykstra_box() {
        let rows = vec![
            (vec![1.0, 0.0], 1.0),
            (vec![-1.0, 0.0], 0.0),
            (vec![0.0, 1.0], 1.0),
            (vec![0.0, -1.0], 0.0),
        ];
        let p = project_polyhedron(&[2.0, 0.5], &rows, &[0.5, 0.5]).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-10 && (p[1] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn lp_distances_match_closed_forms() {
        let gens = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let d = lp_distance(&[3.0, 0.5], &gens, &[], &[0.5, 0.5], LpNorm::Max).unwrap();
        assert!((d - 2.0).abs() < 1e-9);
        let d = lp_distance(&[3.0, 2.0], &gens, &[], &[0.5, 0.5], LpNorm::Weighted1).unwrap();
        assert!((d - 1.5).abs() < 1e-9);
        assert_eq!(lp_support(&[1.0, 0.0], &[(vec![0.0, 1.0], 1.0)]).unwrap(), f64::INFINITY);
    }

    #[test]
    fn pnorm_distance_to_point() {
        // distance to a single point is the weighted p-norm of the difference
        let d = pnorm_hull_distance(&[1.0, 2.0], &[vec![0.0, 0.0]], &[0.5, 0.5], 3.0).unwrap();
        let expected = (0.5 * 1.0f64 + 0.5 * 8.0).powf(1.0 / 3.0);
        assert!((d - expected).abs() < 1e-12);
    }

    #[test]
    fn support_normal_at_corner() {
        let gens = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let n = supporting_normal(&[1.0, 0.5], &gens).unwrap();
        let hx = dot(&n, &[1.0, 0.5]);
        assert!(gens.iter().all(|g| dot(&n, g) <= hx + 1e-9));
        assert!(supporting_normal(&[0.5, 0.5], &gens).is_none());
    }
}
