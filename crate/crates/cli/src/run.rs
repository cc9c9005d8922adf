//! Command dispatch. Each command turns a scenario into a report; the exit
//! code is 0 exactly when every record passes.

use clap::ValueEnum;
use rca_core::conjugation::{
    biconjugate, biconjugation_check, conjugate, conjugate_oracle_check, conjugation_suite, dual_representation,
    dual_representation_check, fenchel_young_check, AscentConfig, BICONJUGATE_TOL,
};
use rca_core::extension::{
    feasible_hull_identity, linf_lipschitz_check, locality_calculus_suite, representation_independence_suite,
    BoundMode,
};
use rca_core::geometry::{
    bipolar_check, gauge, gauge_sandwich_check, polar, separation_check, support_seminorm, BipolarConfig,
};
use rca_core::gexp::{convergence_study, gexp_axiom_suite};
use rca_core::norms::{cond_norm, rnm_axiom_check, ConditionalNorm};
use rca_core::report::{CheckRecord, NamedVector, Report, Witness};
use rca_core::risk::{axiom_check, density_feasibility, RiskMeasure, DENSITY_TOL};
use rca_core::rng::trial_rng;
use rca_core::{RandVar, RcaError};
use serde::Serialize;

use crate::error::CliError;
use crate::scenario::{Scenario, Suite};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    VerifyAxioms,
    Conjugate,
    DualRep,
    Biconjugate,
    Separate,
    Gauge,
    Polar,
    Bipolar,
    Extend,
    Gexp,
    SuiteAll,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::VerifyAxioms => "verify-axioms",
            Self::Conjugate => "conjugate",
            Self::DualRep => "dual-rep",
            Self::Biconjugate => "biconjugate",
            Self::Separate => "separate",
            Self::Gauge => "gauge",
            Self::Polar => "polar",
            Self::Bipolar => "bipolar",
            Self::Extend => "extend",
            Self::Gexp => "gexp",
            Self::SuiteAll => "suite-all",
        }
    }
}

/// Command-line overrides of the scenario settings.
#[derive(Debug, Clone, Default)]
pub struct Flags {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    /// Enumeration budget for hull vertices and sweep cap for ascent.
    pub budget: Option<u64>,
}

/// Report body plus the vectors a command computed.
#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub command: String,
    pub scenario: String,
    pub seed: u64,
    pub passed: bool,
    pub records: Vec<CheckRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<NamedVector>,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

struct Ctx<'a> {
    sc: &'a Scenario,
    seed: u64,
    trials: usize,
    tol: Option<f64>,
    budget: Option<u64>,
    values: Vec<NamedVector>,
}

impl Ctx<'_> {
    fn value(&mut self, name: String, x: &RandVar) {
        self.values.push(NamedVector {
            name,
            values: x.values().to_vec(),
        });
    }

    fn ascent(&self) -> AscentConfig {
        let mut cfg = AscentConfig::default();
        if let Some(b) = self.budget {
            cfg.max_sweeps = b as usize;
        }
        cfg
    }

    fn convex_risks(&self) -> impl Iterator<Item = &'_ RiskMeasure> + '_ {
        self.sc.risks.iter().filter(|m| !m.family().is_control())
    }
}

pub fn run(command: Command, sc: &Scenario, flags: &Flags) -> Result<Outcome, CliError> {
    if let Some(t) = flags.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Input(format!("--tol must be positive (got {t})")));
        }
    }
    let mut ctx = Ctx {
        sc,
        seed: flags.seed.unwrap_or(sc.seed),
        trials: sc.trials,
        tol: flags.tol.or(sc.tol),
        budget: flags.budget,
        values: Vec::new(),
    };
    let report = dispatch(command, &mut ctx).map_err(|e| e.context(command.name()))?.sorted();
    let mut values = ctx.values;
    values.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(Outcome {
        command: command.name().into(),
        scenario: sc.name.clone(),
        seed: ctx.seed,
        passed: report.passed(),
        records: report.records,
        values,
    })
}

fn dispatch(command: Command, ctx: &mut Ctx) -> Result<Report, CliError> {
    Ok(match command {
        Command::VerifyAxioms => verify_axioms(ctx)?,
        Command::Conjugate => conjugate_cmd(ctx)?,
        Command::DualRep => dual_rep(ctx)?,
        Command::Biconjugate => biconjugate_cmd(ctx)?,
        Command::Separate => separate_cmd(ctx)?,
        Command::Gauge => gauge_cmd(ctx)?,
        Command::Polar => polar_cmd(ctx)?,
        Command::Bipolar => bipolar_cmd(ctx)?,
        Command::Extend => extend(ctx)?,
        Command::Gexp => gexp(ctx)?,
        Command::SuiteAll => suite_all(ctx)?,
    })
}

fn verify_axioms(ctx: &mut Ctx) -> Result<Report, CliError> {
    let mut r = Report::new();
    for m in &ctx.sc.risks {
        r.extend(axiom_check(m, ctx.trials, ctx.seed)?);
    }
    Ok(r)
}

fn norms(ctx: &mut Ctx) -> Result<Report, CliError> {
    Ok(rnm_axiom_check(&ctx.sc.strata, ctx.sc.norm, ctx.trials, ctx.seed)?)
}

/// Conjugates at the scenario vectors that are feasible densities, checked
/// against the ascent oracle, plus Fenchel-Young on random pairs.
fn conjugate_cmd(ctx: &mut Ctx) -> Result<Report, CliError> {
    let s = &ctx.sc.strata;
    let densities: Vec<(&String, &RandVar)> = ctx
        .sc
        .vectors
        .iter()
        .filter(|(_, y)| density_feasibility(s, y, DENSITY_TOL).into_iter().all(|f| f))
        .collect();
    let ys: Vec<RandVar> = densities.iter().map(|(_, y)| (*y).clone()).collect();
    let cfg = ctx.ascent();
    let mut r = Report::new();
    let mut vals = Vec::new();
    for m in ctx.convex_risks() {
        for (name, y) in &densities {
            vals.push((format!("conjugate.{}.{name}", m.label()), conjugate(m, y)?.value));
        }
        if !ys.is_empty() {
            r.push(conjugate_oracle_check(m, &ys, &cfg)?);
        }
        r.push(fenchel_young_check(m, ctx.trials, ctx.seed)?);
    }
    for (n, v) in vals {
        ctx.value(n, &v);
    }
    Ok(r)
}

/// Dual representation at every scenario vector: value against direct
/// evaluation, the maximizer, and the randomized check.
fn dual_rep(ctx: &mut Ctx) -> Result<Report, CliError> {
    let tol = ctx.tol.unwrap_or(1e-6);
    let s = &ctx.sc.strata;
    let mut r = Report::new();
    let mut vals = Vec::new();
    for m in ctx.convex_risks() {
        let label = m.label();
        for (name, x) in &ctx.sc.vectors {
            let (value, y) = dual_representation(m, x)?;
            let direct = m.evaluate(x)?;
            let gap = value.max_abs_diff(&direct);
            let feasible = density_feasibility(s, y.y(), DENSITY_TOL).into_iter().all(|f| f);
            let mut rec = CheckRecord::new(
                format!("dual_rep.{label}.{name}"),
                "f(x) = sup over densities y <= 0, E[y | F] = -1 of E[xy | F] - f*(y)",
            )
            .checked(1)
            .metric("gap", gap);
            if gap > tol {
                rec.fail(
                    Witness::new("representation value differs from direct evaluation")
                        .input("x", x)
                        .input("y", y.y())
                        .compare(s, &value, &direct, tol, true),
                );
            }
            if !feasible {
                rec.fail(Witness::new("maximizer is not a feasible density").input("y", y.y()));
            }
            r.push(rec);
            vals.push((format!("dual_rep.{label}.{name}.value"), value));
            vals.push((format!("dual_rep.{label}.{name}.maximizer"), y.into_inner()));
        }
        r.extend(dual_representation_check(m, ctx.trials, ctx.seed)?);
    }
    for (n, v) in vals {
        ctx.value(n, &v);
    }
    Ok(r)
}

/// `f** = f` at the scenario vectors and on random inputs. Controls go
/// through the ascent route and are expected to show a gap.
fn biconjugate_cmd(ctx: &mut Ctx) -> Result<Report, CliError> {
    let tol = ctx.tol.unwrap_or(BICONJUGATE_TOL);
    let s = &ctx.sc.strata;
    let mut r = Report::new();
    let mut vals = Vec::new();
    for m in &ctx.sc.risks {
        let label = m.label();
        for (name, x) in &ctx.sc.vectors {
            let b = biconjugate(m, x)?.value;
            let f = m.evaluate(x)?;
            let gap = b.max_abs_diff(&f);
            let mut rec = CheckRecord::new(format!("biconjugate.{label}.{name}"), "f** = f for closed convex f")
                .checked(1)
                .metric("gap", gap);
            if !(gap <= tol) {
                rec.fail(Witness::new("biconjugate differs from f").input("x", x).compare(s, &b, &f, tol, true));
            }
            r.push(rec);
            vals.push((format!("biconjugate.{label}.{name}"), b));
        }
        if !m.family().is_control() {
            r.push(biconjugation_check(m, ctx.trials, ctx.seed)?);
        }
    }
    for (n, v) in vals {
        ctx.value(n, &v);
    }
    Ok(r)
}

fn separate_cmd(ctx: &mut Ctx) -> Result<Report, CliError> {
    let s = &ctx.sc.strata;
    let mut r = Report::new();
    for (bname, b) in &ctx.sc.bodies {
        for (xname, x) in &ctx.sc.vectors {
            let mut rec = separation_check(s, x, &b.body, ctx.sc.norm)?;
            rec.id = format!("{}.{bname}.{xname}", rec.id);
            r.push(rec);
        }
    }
    Ok(r)
}

/// Gauges of the scenario vectors for every balanced, absorbent body, the
/// sandwich chain on those vectors plus random probes, and the closed form
/// for sup-norm balls.
fn gauge_cmd(ctx: &mut Ctx) -> Result<Report, CliError> {
    let s = &ctx.sc.strata;
    let mut r = Report::new();
    let mut vals = Vec::new();
    for (bname, b) in &ctx.sc.bodies {
        if !(b.body.claims_balanced && b.body.claims_absorbent) {
            continue;
        }
        let mut probes: Vec<RandVar> = ctx.sc.vectors.values().cloned().collect();
        let mut rng = trial_rng(ctx.seed, 0);
        probes.extend((0..ctx.trials).map(|_| s.random_vector(&mut rng, -3.0, 3.0)));
        let mut rec = gauge_sandwich_check(s, &b.body, &probes)?;
        rec.id = format!("{}.{bname}", rec.id);
        r.push(rec);
        for (xname, x) in &ctx.sc.vectors {
            vals.push((format!("gauge.{bname}.{xname}"), gauge(s, &b.body, x)?));
        }
        if let Some(radius) = &b.sup_radius {
            let mut rec = CheckRecord::new(
                format!("geometry.gauge_closed_form.{bname}"),
                "the gauge of the sup-norm ball is the conditional sup norm over the radius",
            )
            .checked(probes.len());
            let rad = s.broadcast(radius);
            let mut worst = 0.0f64;
            for x in &probes {
                let g = gauge(s, &b.body, x)?;
                let closed = cond_norm(s, x, ConditionalNorm::sup())?.zip_with(&rad, |v, r| v / r);
                worst = worst.max(g.max_abs_diff(&closed));
                if !g.approx_eq(&closed, 1e-9) {
                    rec.fail(Witness::new("bisection gauge differs from the closed form").input("x", x).compare(
                        s,
                        &g,
                        &closed,
                        1e-9,
                        true,
                    ));
                }
            }
            r.push(rec.metric("max_gap", worst));
        }
    }
    for (n, v) in vals {
        ctx.value(n, &v);
    }
    Ok(r)
}

/// For every family `A`: membership in the polar computed by linear
/// programming agrees with the direct test `max_a |E[a x | F]| <= 1`, and the
/// support seminorm of the balanced hull equals that maximum.
fn polar_cmd(ctx: &mut Ctx) -> Result<Report, CliError> {
    let s = &ctx.sc.strata;
    let mut r = Report::new();
    let mut rng = trial_rng(ctx.seed, 0);
    let mut probes: Vec<RandVar> = ctx.sc.vectors.values().cloned().collect();
    probes.extend((0..ctx.trials).map(|_| s.random_vector(&mut rng, -2.0, 2.0)));
    for (fname, fam) in &ctx.sc.families {
        let pol = polar(s, fam)?;
        let hull = rca_core::geometry::balanced_hull(s, fam)?;
        let mut member = CheckRecord::new(
            format!("geometry.polar.{fname}.membership"),
            "y is in the polar iff |E[a y | F]| <= 1 for every generator a",
        )
        .checked(probes.len());
        let mut seminorm = CheckRecord::new(
            format!("geometry.polar.{fname}.support_seminorm"),
            "the support seminorm of the balanced hull is the largest generator pairing",
        )
        .checked(probes.len());
        for x in &probes {
            let direct = fam
                .iter()
                .map(|a| s.pairing(a, x).map(|p| p.abs()))
                .collect::<Result<Vec<_>, RcaError>>()?
                .into_iter()
                .reduce(|a, b| a.zip_with(&b, f64::max))
                .expect("families are nonempty");
            let flags = pol.membership(s, x, 1e-9);
            for b in 0..s.block_count() {
                let a0 = s.block(b)[0];
                let v = direct[a0];
                // skip probes within tolerance of the boundary
                if (v - 1.0).abs() > 1e-7 && flags[b] != (v <= 1.0) {
                    member.fail(Witness::new(format!("polar membership disagrees on block {b}")).input("x", x).row(
                        a0,
                        b,
                        v,
                        1.0,
                    ));
                }
            }
            let sup = support_seminorm(s, x, &hull)?;
            if !sup.approx_eq(&direct, 1e-9) {
                seminorm.fail(Witness::new("support seminorm differs from the generator maximum").input("x", x).compare(
                    s,
                    &sup,
                    &direct,
                    1e-9,
                    true,
                ));
            }
        }
        r.push(member);
        r.push(seminorm);
    }
    Ok(r)
}

fn bipolar_cmd(ctx: &mut Ctx) -> Result<Report, CliError> {
    let mut cfg = BipolarConfig {
        seed: ctx.seed,
        ..BipolarConfig::default()
    };
    if let Some(b) = ctx.budget {
        cfg.budget = b as u128;
    }
    if let Some(t) = ctx.tol {
        cfg.tol = t;
    }
    let mut r = Report::new();
    for (fname, fam) in &ctx.sc.families {
        let mut rec = bipolar_check(&ctx.sc.strata, fam, &cfg)?;
        rec.id = format!("{}.{fname}", rec.id);
        r.push(rec);
    }
    Ok(r)
}

/// Extension of every risk map from its values on base points. A map that
/// is not monotone and cash invariant has no Lipschitz extension; that is
/// reported as a failing record rather than an input error.
fn extend(ctx: &mut Ctx) -> Result<Report, CliError> {
    let s = &ctx.sc.strata;
    let mut r = Report::new();
    for m in &ctx.sc.risks {
        let label = m.label();
        let mut rec = representation_independence_suite(m, s, ctx.trials, ctx.seed)?;
        rec.id = format!("extension.{label}.representation_independence");
        r.push(rec);
        match linf_lipschitz_check(m, s, &label, ctx.trials, ctx.seed) {
            Ok(rep) => r.extend(rep),
            Err(RcaError::InvalidParameter(msg)) => {
                let mut rec = CheckRecord::new(
                    format!("extension.{label}.preconditions"),
                    "the base map is monotone and cash invariant",
                );
                rec.fail(Witness::new(msg).trial(ctx.seed, 0));
                r.push(rec);
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(r)
}

fn locality(ctx: &mut Ctx) -> Result<Report, CliError> {
    let mut r = Report::new();
    for m in &ctx.sc.risks {
        r.extend(locality_calculus_suite(m, &ctx.sc.strata, &m.label(), ctx.trials, ctx.seed)?);
    }
    Ok(r)
}

fn hulls(ctx: &mut Ctx) -> Result<Report, CliError> {
    let s = &ctx.sc.strata;
    let mut r = Report::new();
    for (tag, mode) in [("unbounded", BoundMode::None), ("linf", BoundMode::Linf(4.0)), ("l2", BoundMode::LGamma(4.0))] {
        let mut rec = feasible_hull_identity(s, 2.0, mode, ctx.trials, ctx.seed)?;
        rec.id = format!("{}.{tag}", rec.id);
        r.push(rec);
    }
    Ok(r)
}

fn gexp(ctx: &mut Ctx) -> Result<Report, CliError> {
    let mut r = Report::new();
    for spec in &ctx.sc.trees {
        let rep = gexp_axiom_suite(&spec.tree, &spec.driver, ctx.trials, ctx.seed)?;
        r.extend(rep.prefixed(&format!("n{}", spec.tree.steps())));
        if let Some(max) = spec.convergence {
            r.push(convergence_study(&spec.driver, spec.tree.horizon(), |b| b.max(0.0), max)?);
        }
    }
    Ok(r)
}

fn suite_all(ctx: &mut Ctx) -> Result<Report, CliError> {
    let mut r = Report::new();
    for suite in ctx.sc.suites.clone() {
        let (tag, rep) = match suite {
            Suite::Norms => ("norms", norms(ctx)?),
            Suite::Axioms => ("axioms", verify_axioms(ctx)?),
            Suite::Conjugation => {
                let mut rep = Report::new();
                for m in ctx.convex_risks() {
                    rep.extend(conjugation_suite(m, ctx.trials, ctx.seed)?);
                }
                let mut bi = biconjugate_cmd(ctx)?;
                bi.records.retain(|rec| rec.id.starts_with("biconjugate."));
                rep.extend(bi);
                let mut dr = dual_rep(ctx)?;
                dr.records.retain(|rec| rec.id.starts_with("dual_rep."));
                rep.extend(dr);
                ("conjugation", rep)
            }
            Suite::Locality => ("locality", locality(ctx)?),
            Suite::Extension => ("extension", extend(ctx)?),
            Suite::Geometry => {
                let mut rep = separate_cmd(ctx)?;
                rep.extend(gauge_cmd(ctx)?);
                rep.extend(polar_cmd(ctx)?);
                rep.extend(bipolar_cmd(ctx)?);
                ("geometry", rep)
            }
            Suite::Hulls => ("hulls", hulls(ctx)?),
            Suite::Gexp => ("gexp", gexp(ctx)?),
        };
        r.extend(rep.prefixed(tag));
    }
    Ok(r)
}
