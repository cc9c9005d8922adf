//! Scenario files: one JSON document, schema `rca-scenario/1`.
//!
//! ```json
//! {
//!   "schema": "rca-scenario/1",
//!   "name": "f1",
//!   "space": { "uniform": 4 },
//!   "algebra": { "blocks": [[0, 1], [2, 3]] },
//!   "vectors": { "x": [1, 2, 3, 4] },
//!   "risks": ["entropic(beta=1)", "avar(lambda=0.5)"],
//!   "bodies": { "M": { "kind": "box", "lo": 0, "hi": 1 } },
//!   "families": { "A": ["x"] },
//!   "trees": [{ "steps": 4, "driver": "abs", "mu": 0.5 }],
//!   "seed": 7,
//!   "trials": 100
//! }
//! ```
//!
//! Everything is resolved and validated at load time.

use std::collections::BTreeMap;
use std::path::Path;

use rca_core::geometry::{BlockSet, ConvexBody};
use rca_core::gexp::{BinaryTree, Driver};
use rca_core::norms::ConditionalNorm;
use rca_core::risk::{RiskFamily, RiskMeasure};
use rca_core::{FiniteProbSpace, RandVar, SigmaAlgebra, Strata};
use serde::Deserialize;

use crate::error::CliError;

pub const SCHEMA: &str = "rca-scenario/1";
pub const DEFAULT_TRIALS: usize = 100;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    schema: String,
    #[serde(default)]
    name: Option<String>,
    space: RawSpace,
    algebra: RawAlgebra,
    #[serde(default)]
    vectors: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    risks: Vec<String>,
    #[serde(default)]
    bodies: BTreeMap<String, RawBody>,
    #[serde(default)]
    families: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    trees: Vec<RawTree>,
    #[serde(default)]
    suites: Vec<Suite>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    trials: Option<usize>,
    #[serde(default)]
    norm: Option<NormSpec>,
    #[serde(default)]
    tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum RawSpace {
    Uniform(usize),
    Probs(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum RawAlgebra {
    Labels(Vec<usize>),
    Blocks(Vec<Vec<usize>>),
    Trivial,
    Discrete,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawBody {
    /// The same interval at every atom.
    Box {
        lo: f64,
        hi: f64,
        #[serde(default)]
        balanced_absorbent: bool,
    },
    /// Conditional sup-norm ball, one radius per block.
    SupBall { radius: Vec<f64> },
    /// Balanced hull of a named family.
    BalancedHull { family: String },
    /// Explicit per-block sets.
    Blocks {
        blocks: Vec<BlockSet>,
        #[serde(default)]
        balanced_absorbent: bool,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTree {
    steps: usize,
    #[serde(default = "unit_horizon")]
    horizon: f64,
    driver: String,
    #[serde(default)]
    mu: f64,
    /// Largest step count in the convergence study; no study when absent.
    #[serde(default)]
    convergence: Option<usize>,
}

fn unit_horizon() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum NormSpec {
    P(f64),
    Named(String),
}

/// Groups run by `suite-all`; all of them when the scenario lists none.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Norms,
    Axioms,
    Conjugation,
    Locality,
    Extension,
    Geometry,
    Hulls,
    Gexp,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Norms,
        Suite::Axioms,
        Suite::Conjugation,
        Suite::Locality,
        Suite::Extension,
        Suite::Geometry,
        Suite::Hulls,
        Suite::Gexp,
    ];
}

#[derive(Debug, Clone)]
pub struct TreeSpec {
    pub tree: BinaryTree,
    pub driver: Driver,
    pub convergence: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct NamedBody {
    pub body: ConvexBody,
    /// `Some(radius)` for sup-norm balls, whose gauge has a closed form.
    pub sup_radius: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub strata: Strata,
    pub vectors: BTreeMap<String, RandVar>,
    pub risks: Vec<RiskMeasure>,
    pub bodies: BTreeMap<String, NamedBody>,
    pub families: BTreeMap<String, Vec<RandVar>>,
    pub trees: Vec<TreeSpec>,
    pub suites: Vec<Suite>,
    pub seed: u64,
    pub trials: usize,
    pub norm: ConditionalNorm,
    pub tol: Option<f64>,
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let raw: RawScenario = serde_json::from_str(text).map_err(|e| {
        CliError::Input(format!("scenario parse error at line {} column {}: {e}", e.line(), e.column()))
    })?;
    resolve(raw)
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("scenario field `{field}`: {msg}"))
}

fn resolve(raw: RawScenario) -> Result<Scenario, CliError> {
    if raw.schema != SCHEMA {
        return Err(invalid("schema", format!("expected \"{SCHEMA}\", got \"{}\"", raw.schema)));
    }
    let space = match raw.space {
        RawSpace::Uniform(n) => FiniteProbSpace::uniform(n),
        RawSpace::Probs(p) => FiniteProbSpace::new(p),
    }
    .map_err(|e| invalid("space", e))?;
    let n = space.atom_count();
    let algebra = match raw.algebra {
        RawAlgebra::Labels(l) if l.len() != n => {
            return Err(invalid("algebra", format!("{} labels for a {n}-atom space", l.len())));
        }
        RawAlgebra::Labels(l) => SigmaAlgebra::new(l),
        RawAlgebra::Blocks(b) => SigmaAlgebra::from_blocks(n, &b),
        RawAlgebra::Trivial => SigmaAlgebra::trivial(n),
        RawAlgebra::Discrete => SigmaAlgebra::discrete(n),
    }
    .map_err(|e| invalid("algebra", e))?;
    let strata = Strata::new(space, algebra).map_err(|e| invalid("algebra", e))?;

    let mut vectors = BTreeMap::new();
    for (name, v) in raw.vectors {
        let x = RandVar::new(v);
        strata.check_len(&x).map_err(|e| invalid(&format!("vectors.{name}"), e))?;
        x.check_finite().map_err(|e| invalid(&format!("vectors.{name}"), e))?;
        vectors.insert(name, x);
    }

    let risks = raw
        .risks
        .iter()
        .map(|text| {
            let fam = RiskFamily::parse(text, |n| vectors.get(n).cloned()).map_err(|e| invalid("risks", e))?;
            RiskMeasure::new(&strata, fam).map_err(|e| invalid("risks", format!("`{text}`: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut families = BTreeMap::new();
    for (name, members) in raw.families {
        if members.is_empty() {
            return Err(invalid(&format!("families.{name}"), "no members"));
        }
        let vs = members
            .iter()
            .map(|m| {
                vectors
                    .get(m)
                    .cloned()
                    .ok_or_else(|| invalid(&format!("families.{name}"), format!("unknown vector `{m}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        families.insert(name, vs);
    }

    let mut bodies = BTreeMap::new();
    for (name, spec) in raw.bodies {
        let field = format!("bodies.{name}");
        let (body, sup_radius) = match spec {
            RawBody::Box { lo, hi, balanced_absorbent } => {
                if !(lo <= hi) {
                    return Err(invalid(&field, format!("empty interval [{lo}, {hi}]")));
                }
                let b = ConvexBody::atom_box(&strata, lo, hi);
                (if balanced_absorbent { b.balanced_absorbent() } else { b }, None)
            }
            RawBody::SupBall { radius } => {
                if radius.len() != strata.block_count() {
                    return Err(invalid(&field, format!("{} radii for {} blocks", radius.len(), strata.block_count())));
                }
                if radius.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
                    return Err(invalid(&field, "radii must be positive"));
                }
                (ConvexBody::sup_ball(&strata, &radius), Some(radius))
            }
            RawBody::BalancedHull { family } => {
                let fam = families
                    .get(&family)
                    .ok_or_else(|| invalid(&field, format!("unknown family `{family}`")))?;
                (rca_core::geometry::balanced_hull(&strata, fam).map_err(|e| invalid(&field, e))?, None)
            }
            RawBody::Blocks { blocks, balanced_absorbent } => {
                let b = ConvexBody::new(&strata, blocks).map_err(|e| invalid(&field, e))?;
                (if balanced_absorbent { b.balanced_absorbent() } else { b }, None)
            }
        };
        body.validate(&strata).map_err(|e| invalid(&field, e))?;
        body.verify_flags().map_err(|e| invalid(&field, e))?;
        bodies.insert(name, NamedBody { body, sup_radius });
    }

    let trees = raw
        .trees
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            let field = format!("trees[{i}]");
            Ok(TreeSpec {
                tree: BinaryTree::new(t.steps, t.horizon).map_err(|e| invalid(&field, e))?,
                driver: Driver::parse(&t.driver, t.mu).map_err(|e| invalid(&field, e))?,
                convergence: t.convergence,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let norm = match raw.norm {
        None => ConditionalNorm::new(2.0),
        Some(NormSpec::P(p)) => ConditionalNorm::new(p),
        Some(NormSpec::Named(s)) if s == "inf" => Ok(ConditionalNorm::sup()),
        Some(NormSpec::Named(s)) => return Err(invalid("norm", format!("expected a number or \"inf\", got \"{s}\""))),
    }
    .map_err(|e| invalid("norm", e))?;
    if let Some(t) = raw.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid("tol", "must be positive"));
        }
    }
    let trials = raw.trials.unwrap_or(DEFAULT_TRIALS);
    if trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    let mut suites = raw.suites;
    if suites.is_empty() {
        suites = Suite::ALL.to_vec();
    }
    suites.sort();
    suites.dedup();

    Ok(Scenario {
        name: raw.name.unwrap_or_else(|| "unnamed".into()),
        strata,
        vectors,
        risks,
        bodies,
        families,
        trees,
        suites,
        seed: raw.seed.unwrap_or(0),
        trials,
        norm,
        tol: raw.tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(space: &str, algebra: &str) -> String {
        format!(
            r#"{{"schema": "rca-scenario/1", "space": {space}, "algebra": {algebra}, "vectors": {{"x": [1, 2, 3, 4]}}}}"#
        )
    }

    fn err(text: &str) -> String {
        parse_scenario(text).unwrap_err().to_string()
    }

    #[test]
    fn minimal_file_loads() {
        let s = parse_scenario(&minimal(r#"{"uniform": 4}"#, r#"{"blocks": [[0, 1], [2, 3]]}"#)).unwrap();
        assert_eq!(s.strata.block_count(), 2);
        assert_eq!(s.vectors["x"].values(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.suites.len(), Suite::ALL.len());
    }

    #[test]
    fn bad_mass_is_named() {
        let e = err(&minimal(r#"{"probs": [0.3, 0.2, 0.2, 0.2]}"#, r#"{"labels": [0, 0, 1, 1]}"#));
        assert!(e.contains("probabilities must sum to 1"), "{e}");
    }

    #[test]
    fn unresolved_atom_is_named() {
        let e = err(&minimal(r#"{"uniform": 4}"#, r#"{"blocks": [[0, 1], [2, 7]]}"#));
        assert!(e.contains("atom 7") && e.contains("4-atom"), "{e}");
    }

    #[test]
    fn parse_errors_carry_position_and_field() {
        let e = err("{\"schema\": \"rca-scenario/1\",\n \"space\": {\"uniform\": 4},\n \"algebra\": \"trivial\", \"colour\": 1}");
        assert!(e.contains("line 3") && e.contains("colour"), "{e}");
        let e = err(&minimal(r#"{"uniform": 4}"#, r#""trivial""#).replace("/1", "/2"));
        assert!(e.contains("schema"), "{e}");
    }

    #[test]
    fn references_resolve() {
        let text = r#"{
            "schema": "rca-scenario/1",
            "space": {"uniform": 4},
            "algebra": {"labels": [0, 0, 1, 1]},
            "vectors": {"y": [-1.5, -0.5, -1, -1], "a": [1, 0, 0, 1]},
            "risks": ["scenario_robust(y)", "avar(lambda=[0.5,1])"],
            "families": {"A": ["a"]},
            "bodies": {"H": {"kind": "balanced_hull", "family": "A"}, "B": {"kind": "sup_ball", "radius": [1, 2]}},
            "trees": [{"steps": 3, "driver": "abs", "mu": 0.5}],
            "norm": "inf"
        }"#;
        let s = parse_scenario(text).unwrap();
        assert_eq!(s.risks.len(), 2);
        assert_eq!(s.bodies["B"].sup_radius.as_deref(), Some(&[1.0, 2.0][..]));
        assert_eq!(s.trees[0].tree.horizon(), 1.0);
        for (bad, what) in [
            (r#""risks": ["scenario_robust(z)"]"#, "unknown density"),
            (r#""families": {"A": ["b"]}"#, "unknown vector"),
            (r#""trees": [{"steps": 20, "driver": "abs"}]"#, "trees[0]"),
            (r#""risks": ["entropic(beta=-1)"]"#, "risks"),
        ] {
            let t = format!(
                r#"{{"schema": "rca-scenario/1", "space": {{"uniform": 4}}, "algebra": "trivial", "vectors": {{"y": [-1, -1, -1, -1]}}, {bad}}}"#
            );
            let e = err(&t);
            assert!(e.contains(what), "{bad}: {e}");
        }
    }
}
