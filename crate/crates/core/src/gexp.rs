//! Discrete g-expectations on a binary tree.
//!
//! Time runs over `N` steps of length `dt = T / N`; each step the Brownian
//! increment is `+sqrt(dt)` (up) or `-sqrt(dt)` (down) with probability 1/2.
//! Leaf `l` passes through node `l >> (N - t)` at depth `t`; the children of
//! node `k` are `2k` (up) and `2k + 1` (down). The backward scheme is
//!
//! ```text
//! Z = (Y_up - Y_down) / (2 sqrt(dt))
//! Y = (Y_up + Y_down) / 2 + g(t, Z) dt
//! ```
//!
//! and `rho_t(x)` is `Y_t` for the terminal value `-x`. The scheme is monotone
//! as long as `mu * sqrt(dt) <= 1`.

use rand::Rng;
use serde::Serialize;

use crate::error::{RcaError, Result};
use crate::par;
use crate::prob::{FiniteProbSpace, RandVar, SigmaAlgebra, Strata, TOL_LINEAR, TOL_ORACLE};
use crate::report::{CheckRecord, Report, Witness};
use crate::rng::trial_rng;

pub const MAX_STEPS: usize = 14;

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryTree {
    steps: usize,
    horizon: f64,
}

impl BinaryTree {
    pub fn new(steps: usize, horizon: f64) -> Result<Self> {
        if steps == 0 || steps > MAX_STEPS {
            return Err(RcaError::InvalidParameter(format!("tree steps must lie in 1..={MAX_STEPS} (got {steps})")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(RcaError::InvalidParameter(format!("horizon must be positive (got {horizon})")));
        }
        Ok(Self { steps, horizon })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn leaves(&self) -> usize {
        1 << self.steps
    }

    /// The depth-`t` node a leaf passes through.
    pub fn node_of(&self, leaf: usize, t: usize) -> usize {
        leaf >> (self.steps - t)
    }

    /// Leaves with uniform probability, conditioned on the depth-`t` nodes.
    pub fn strata(&self, t: usize) -> Result<Strata> {
        self.check_depth(t)?;
        let labels = (0..self.leaves()).map(|l| self.node_of(l, t)).collect();
        Strata::new(FiniteProbSpace::uniform(self.leaves())?, SigmaAlgebra::new(labels)?)
    }

    /// `B_T` at every leaf: `sqrt(dt)` times (up moves - down moves).
    pub fn brownian_terminal(&self) -> RandVar {
        let s = self.dt().sqrt();
        RandVar::new(
            (0..self.leaves())
                .map(|l| {
                    let downs = l.count_ones() as f64;
                    s * (self.steps as f64 - 2.0 * downs)
                })
                .collect(),
        )
    }

    fn check_depth(&self, t: usize) -> Result<()> {
        if t > self.steps {
            return Err(RcaError::InvalidParameter(format!("time index {t} exceeds {} steps", self.steps)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DriverKind {
    /// `g = 0`
    Zero,
    /// `g = mu |z|`
    Abs,
    /// `g = mu (sqrt(1 + z^2) - 1)`
    Smooth,
    /// `g = -mu |z|`, concave; a negative control.
    NegAbs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Driver {
    pub kind: DriverKind,
    pub mu: f64,
}

impl Driver {
    pub fn new(kind: DriverKind, mu: f64) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(RcaError::InvalidParameter(format!("driver constant must be >= 0 (got {mu})")));
        }
        Ok(Self { kind, mu })
    }

    pub fn zero() -> Self {
        Self {
            kind: DriverKind::Zero,
            mu: 0.0,
        }
    }

    pub fn parse(id: &str, mu: f64) -> Result<Self> {
        let kind = match id {
            "zero" => DriverKind::Zero,
            "abs" => DriverKind::Abs,
            "smooth" => DriverKind::Smooth,
            "neg_abs" => DriverKind::NegAbs,
            other => return Err(RcaError::InvalidParameter(format!("unknown driver `{other}`"))),
        };
        Self::new(kind, if kind == DriverKind::Zero { 0.0 } else { mu })
    }

    pub fn g(&self, _t: f64, z: f64) -> f64 {
        match self.kind {
            DriverKind::Zero => 0.0,
            DriverKind::Abs => self.mu * z.abs(),
            DriverKind::Smooth => self.mu * ((1.0 + z * z).sqrt() - 1.0),
            DriverKind::NegAbs => -self.mu * z.abs(),
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            DriverKind::Zero => "zero".into(),
            DriverKind::Abs => format!("abs(mu={})", self.mu),
            DriverKind::Smooth => format!("smooth(mu={})", self.mu),
            DriverKind::NegAbs => format!("neg_abs(mu={})", self.mu),
        }
    }

    /// Sampled driver conditions: `g(t, 0) = 0`, Lipschitz in `z` with
    /// constant `mu`, and convex in `z`.
    pub fn validate(&self, horizon: f64, samples: usize, seed: u64) -> Report {
        let label = self.label();
        let rows = par::map_range(samples, |i| {
            let mut rng = trial_rng(seed, i);
            let t = rng.gen_range(0.0..=horizon);
            let (z0, z1) = (rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
            let lam: f64 = rng.gen_range(0.0..1.0);
            let zero = self.g(t, 0.0);
            let lip = (self.g(t, z0) - self.g(t, z1)).abs() - self.mu * (z0 - z1).abs();
            let mid = self.g(t, lam * z0 + (1.0 - lam) * z1);
            let chord = lam * self.g(t, z0) + (1.0 - lam) * self.g(t, z1);
            (t, z0, z1, lam, zero, lip, mid, chord)
        });
        let mut zero = CheckRecord::new(format!("driver.{label}.vanishes_at_zero"), "g(t, 0) = 0").checked(samples);
        let mut lip = CheckRecord::new(format!("driver.{label}.lipschitz"), "g is mu-Lipschitz in z").checked(samples);
        let mut conv = CheckRecord::new(format!("driver.{label}.convex"), "g is convex in z").checked(samples);
        for (i, (t, z0, z1, lam, g0, excess, mid, chord)) in rows.into_iter().enumerate() {
            let scalar = |note: String| Witness::new(note).trial(seed, i);
            if g0 != 0.0 {
                zero.fail(scalar(format!("g({t}, 0) = {g0}")));
            }
            if excess > TOL_LINEAR {
                lip.fail(scalar(format!("|g({t},{z0}) - g({t},{z1})| exceeds mu |z0 - z1| by {excess:e}")));
            }
            if mid > chord + TOL_LINEAR {
                conv.fail(scalar(format!(
                    "g at {lam} z0 + (1 - {lam}) z1 = {mid} above the chord {chord} (z0 = {z0}, z1 = {z1}, t = {t})"
                )));
            }
        }
        let mut r = Report::new();
        r.push(zero);
        r.push(lip);
        r.push(conv);
        r
    }
}

/// Node values per depth: `y[t]` has `2^t` entries, `z[t]` (for `t < N`) too.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GSolution {
    pub y: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
}

impl GSolution {
    /// `Y_t` broadcast to the leaves.
    pub fn y_at(&self, tree: &BinaryTree, t: usize) -> RandVar {
        RandVar::new((0..tree.leaves()).map(|l| self.y[t][tree.node_of(l, t)]).collect())
    }

    /// Largest deviation from the recursion identity over the non-leaf nodes.
    pub fn recursion_residual(&self, tree: &BinaryTree, driver: &Driver) -> f64 {
        let dt = tree.dt();
        let sq = dt.sqrt();
        let mut worst = 0.0f64;
        for t in 0..tree.steps() {
            for k in 0..self.y[t].len() {
                let (u, d) = (self.y[t + 1][2 * k], self.y[t + 1][2 * k + 1]);
                let z = self.z[t][k];
                let r1 = (z - (u - d) / (2.0 * sq)).abs();
                let r2 = (self.y[t][k] - ((u + d) / 2.0 + driver.g(t as f64 * dt, z) * dt)).abs();
                worst = worst.max(r1).max(r2);
            }
        }
        worst
    }
}

/// One backward pass from the terminal values at the leaves.
pub fn backward_solve(tree: &BinaryTree, driver: &Driver, terminal: &RandVar) -> Result<GSolution> {
    if terminal.len() != tree.leaves() {
        return Err(RcaError::DimensionMismatch {
            expected: tree.leaves(),
            got: terminal.len(),
        });
    }
    terminal.check_finite()?;
    let n = tree.steps();
    let dt = tree.dt();
    let sq = dt.sqrt();
    let mut y: Vec<Vec<f64>> = vec![Vec::new(); n + 1];
    let mut z: Vec<Vec<f64>> = vec![Vec::new(); n];
    y[n] = terminal.values().to_vec();
    for t in (0..n).rev() {
        let next = &y[t + 1];
        let time = t as f64 * dt;
        let pairs = par::map_range(1 << t, |k| {
            let (u, d) = (next[2 * k], next[2 * k + 1]);
            let zk = (u - d) / (2.0 * sq);
            ((u + d) / 2.0 + driver.g(time, zk) * dt, zk)
        });
        let (yt, zt): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        y[t] = yt;
        z[t] = zt;
    }
    Ok(GSolution { y, z })
}

/// `rho_t(x) = E_g[-x | F_t]`, broadcast to the leaves.
pub fn rho(tree: &BinaryTree, driver: &Driver, x: &RandVar, t: usize) -> Result<RandVar> {
    tree.check_depth(t)?;
    Ok(backward_solve(tree, driver, &x.neg())?.y_at(tree, t))
}

/// `e^{8 (1 + mu^2) (T - t)}` at step `t`.
pub fn lipschitz_constant(tree: &BinaryTree, mu: f64, t: usize) -> f64 {
    (8.0 * (1.0 + mu * mu) * (tree.horizon() - t as f64 * tree.dt())).exp()
}

/// Axioms of `rho_t` on random terminal pairs, cycling `t` over `0..N`,
/// plus the driver conditions, the recursion identity, time consistency,
/// comparison with the zero driver, and the zero-driver identity.
///
/// Errors when the driver is not Lipschitz or does not vanish at zero; a
/// non-convex driver is reported (it is the expected failure of the
/// concave control), not rejected.
pub fn gexp_axiom_suite(tree: &BinaryTree, driver: &Driver, trials: usize, seed: u64) -> Result<Report> {
    let label = driver.label();
    let validation = driver.validate(tree.horizon(), 1000, seed ^ 0xd1);
    for id in ["vanishes_at_zero", "lipschitz"] {
        let rec = validation.get(&format!("driver.{label}.{id}")).expect("validation emits this record");
        if !rec.passed {
            return Err(RcaError::InvalidParameter(format!("driver {label} fails `{id}`: {}", rec.witnesses[0].note)));
        }
    }
    if driver.mu * tree.dt().sqrt() > 1.0 {
        return Err(RcaError::InvalidParameter(format!(
            "mu sqrt(dt) = {} > 1: the scheme is not monotone at this step size",
            driver.mu * tree.dt().sqrt()
        )));
    }
    let n = tree.steps();
    let strata: Vec<Strata> = (0..=n).map(|t| tree.strata(t)).collect::<Result<_>>()?;
    let leaves = strata[n].clone();
    let zero = Driver::zero();
    // sign of g decides the direction of the comparison with the zero driver
    let sign = {
        let mut rng = trial_rng(seed, usize::MAX);
        let vals: Vec<f64> = (0..256).map(|_| driver.g(0.0, rng.gen_range(-10.0..10.0))).collect();
        if vals.iter().all(|&v| v >= 0.0) {
            1.0
        } else if vals.iter().all(|&v| v <= 0.0) {
            -1.0
        } else {
            0.0
        }
    };

    #[derive(Default)]
    struct Outcome {
        mono: Option<Witness>,
        cash: Option<Witness>,
        convex: Option<Witness>,
        local: Option<Witness>,
        lip: Option<Witness>,
        ratio: f64,
        consistent: Option<Witness>,
        compare: Option<Witness>,
        zero: Option<Witness>,
        residual: f64,
    }
    let outcomes = par::try_map_range(trials, |i| {
        let t = i % n.max(1);
        let st = &strata[t];
        let mut rng = trial_rng(seed, i);
        let mut out = Outcome::default();
        let x = leaves.random_vector(&mut rng, -3.0, 3.0);
        let y = leaves.random_vector(&mut rng, -3.0, 3.0);
        let sol_x = backward_solve(tree, driver, &x.neg())?;
        out.residual = sol_x.recursion_residual(tree, driver);
        let rx = sol_x.y_at(tree, t);
        let ry = rho(tree, driver, &y, t)?;
        let w = |note: &str| Witness::new(format!("{note} (t = {t})")).trial(seed, i);

        let d = leaves.random_vector(&mut rng, 0.0, 2.0);
        let r_lower = rho(tree, driver, &x.sub(&d), t)?;
        if !rx.le(&r_lower, TOL_ORACLE) {
            out.mono = Some(w("rho(x) > rho(x - d), d >= 0").input("x", &x).input("d", &d).compare(st, &rx, &r_lower, TOL_ORACLE, false));
        }

        let c = st.random_measurable(&mut rng, -2.0, 2.0);
        let lhs = rho(tree, driver, &x.add(&c), t)?;
        let rhs = rx.sub(&c);
        if !lhs.approx_eq(&rhs, TOL_ORACLE) {
            out.cash = Some(w("rho(x + c) != rho(x) - c").input("x", &x).input("c", &c).compare(st, &lhs, &rhs, TOL_ORACLE, true));
        }

        let xi = st.random_measurable(&mut rng, 0.0, 1.0);
        let one_minus = xi.map(|v| 1.0 - v);
        let lhs = rho(tree, driver, &xi.mul(&x).add(&one_minus.mul(&y)), t)?;
        let rhs = xi.mul(&rx).add(&one_minus.mul(&ry));
        if !lhs.le(&rhs, TOL_ORACLE) {
            out.convex = Some(
                w("rho(xi x + (1 - xi) y) > xi rho(x) + (1 - xi) rho(y)")
                    .input("x", &x)
                    .input("y", &y)
                    .input("xi", &xi)
                    .compare(st, &lhs, &rhs, TOL_ORACLE, false),
            );
        }

        let ev = st.random_event(&mut rng);
        let lhs = ev.apply(&rx);
        let rhs = ev.apply(&rho(tree, driver, &ev.apply(&x), t)?);
        if !lhs.approx_eq(&rhs, TOL_ORACLE) {
            out.local = Some(w("I_A rho(x) != I_A rho(I_A x)").input("x", &x).input("A", &ev.as_randvar()).compare(st, &lhs, &rhs, TOL_ORACLE, true));
        }

        let c_lip = lipschitz_constant(tree, driver.mu, t);
        let diff = rx.sub(&ry).abs();
        let l2 = st.cond_expect(&x.sub(&y).map(|v| v * v))?.map(f64::sqrt);
        out.ratio = diff
            .values()
            .iter()
            .zip(l2.values())
            .map(|(a, b)| if *b > 0.0 { a / b } else { 0.0 })
            .fold(0.0, f64::max);
        let bound = l2.scale(c_lip);
        if !diff.le(&bound, TOL_ORACLE) {
            out.lip = Some(w("|rho(x) - rho(y)| > c E[|x - y|^2 | F_t]^(1/2)").input("x", &x).input("y", &y).compare(st, &diff, &bound, TOL_ORACLE, false));
        }

        // rho_s(-rho_t(x)) = rho_s(x) for every s <= t
        for s in 0..=t {
            let lhs = rho(tree, driver, &rx.neg(), s)?;
            let rhs = sol_x.y_at(tree, s);
            if !lhs.approx_eq(&rhs, TOL_LINEAR) {
                out.consistent = Some(
                    w(&format!("rho_{s}(-rho_t(x)) != rho_{s}(x)")).input("x", &x).compare(&strata[s], &lhs, &rhs, TOL_LINEAR, true),
                );
                break;
            }
        }

        let r0 = rho(tree, &zero, &x, t)?;
        let ce = st.cond_expect(&x.neg())?;
        if !r0.approx_eq(&ce, TOL_LINEAR) {
            out.zero = Some(w("zero driver differs from E[-x | F_t]").input("x", &x).compare(st, &r0, &ce, TOL_LINEAR, true));
        }
        if sign != 0.0 {
            let (lo, hi) = if sign > 0.0 { (&r0, &rx) } else { (&rx, &r0) };
            if !lo.le(hi, TOL_LINEAR) {
                out.compare = Some(w("comparison with the zero driver fails").input("x", &x).compare(st, lo, hi, TOL_LINEAR, false));
            }
        }
        Ok::<_, RcaError>(out)
    })?;

    let rec = |id: &str, anchor: &str| CheckRecord::new(format!("gexp.{label}.{id}"), anchor).checked(trials);
    let mut mono = rec("monotone", "rho_t is monotone");
    let mut cash = rec("cash_invariant", "rho_t(x + c) = rho_t(x) - c for F_t-measurable c");
    let mut convex = rec("l0_convex", "rho_t is convex with F_t-measurable weights");
    let mut local = rec("local", "rho_t is F_t-local");
    let mut lip = rec("lipschitz", "|rho_t(x) - rho_t(y)| <= e^{8(1+mu^2)(T-t)} E[|x-y|^2 | F_t]^(1/2)");
    let mut consistent = rec("time_consistency", "rho_s(-rho_t(x)) = rho_s(x) for s <= t");
    let mut compare = rec("comparison", "a larger driver gives a larger risk");
    let mut zero_rec = rec("zero_driver", "the zero driver gives the conditional expectation");
    let mut max_ratio = 0.0f64;
    let mut residual = 0.0f64;
    for o in outcomes {
        max_ratio = max_ratio.max(o.ratio);
        residual = residual.max(o.residual);
        for (r, w) in [
            (&mut mono, o.mono),
            (&mut cash, o.cash),
            (&mut convex, o.convex),
            (&mut local, o.local),
            (&mut lip, o.lip),
            (&mut consistent, o.consistent),
            (&mut compare, o.compare),
            (&mut zero_rec, o.zero),
        ] {
            if let Some(w) = w {
                r.fail(w);
            }
        }
    }
    if sign == 0.0 {
        compare = compare.detail("driver changes sign; no pointwise order with the zero driver").checked(0);
    }
    let mut residual_rec = rec("recursion_identity", "every non-leaf node satisfies the backward scheme").metric("max_residual", residual);
    if residual > TOL_LINEAR {
        residual_rec.fail(Witness::new(format!("recursion residual {residual:e}")));
    }
    let mut report = validation;
    for r in [
        mono,
        cash,
        convex,
        local,
        lip.metric("max_ratio", max_ratio).metric("c_at_t0", lipschitz_constant(tree, driver.mu, 0)),
        consistent,
        compare,
        zero_rec,
        residual_rec,
    ] {
        report.push(r);
    }
    Ok(report)
}

/// `Y_0` for a terminal functional of `B_T` as the step count doubles. A
/// report of the numbers only; nothing is asserted.
pub fn convergence_study(driver: &Driver, horizon: f64, payoff: impl Fn(f64) -> f64, max_steps: usize) -> Result<CheckRecord> {
    let mut rec = CheckRecord::new(format!("gexp.{}.convergence", driver.label()), "Y_0 as the tree is refined")
        .detail("informational: successive differences of Y_0 as N doubles");
    let mut prev: Option<f64> = None;
    let mut n = 1;
    let mut count = 0;
    while n <= max_steps.min(MAX_STEPS) {
        let tree = BinaryTree::new(n, horizon)?;
        let terminal = tree.brownian_terminal().map(&payoff);
        let y0 = backward_solve(&tree, driver, &terminal)?.y[0][0];
        rec = rec.metric(&format!("y0_n{n:02}"), y0);
        if let Some(p) = prev {
            rec = rec.metric(&format!("diff_n{n:02}"), (y0 - p).abs());
        }
        prev = Some(y0);
        n *= 2;
        count += 1;
    }
    Ok(rec.checked(count))
}
