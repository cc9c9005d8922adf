//! Verification records shared by every check in the crate.

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

use crate::prob::{RandVar, Strata};

fn ser_ext<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

pub(crate) fn ser_ext_vec<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    struct E(f64);
    impl Serialize for E {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            ser_ext(&self.0, s)
        }
    }
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for &x in v {
        seq.serialize_element(&E(x))?;
    }
    seq.end()
}

fn ser_ext_map<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    struct E(f64);
    impl Serialize for E {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            ser_ext(&self.0, s)
        }
    }
    let mut map = s.serialize_map(Some(m.len()))?;
    for (k, &v) in m {
        map.serialize_entry(k, &E(v))?;
    }
    map.end()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedVector {
    pub name: String,
    #[serde(serialize_with = "ser_ext_vec")]
    pub values: Vec<f64>,
}

/// One atom of a failing comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomRow {
    pub atom: usize,
    pub block: usize,
    #[serde(serialize_with = "ser_ext")]
    pub lhs: f64,
    #[serde(serialize_with = "ser_ext")]
    pub rhs: f64,
    #[serde(serialize_with = "ser_ext")]
    pub gap: f64,
}

/// Everything needed to reproduce a failure: the inputs, the seed and trial
/// index that generated them, and the atomwise comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub note: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trial: Option<usize>,
    pub inputs: Vec<NamedVector>,
    pub rows: Vec<AtomRow>,
}

impl Witness {
    pub fn new(note: impl Into<String>) -> Self {
        Self {
            note: note.into(),
            seed: None,
            trial: None,
            inputs: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn trial(mut self, seed: u64, trial: usize) -> Self {
        self.seed = Some(seed);
        self.trial = Some(trial);
        self
    }

    pub fn input(mut self, name: &str, x: &RandVar) -> Self {
        self.inputs.push(NamedVector {
            name: name.to_string(),
            values: x.values().to_vec(),
        });
        self
    }

    /// Rows for every atom where `lhs > rhs + tol` (or `|lhs - rhs| > tol` when `two_sided`).
    pub fn compare(
        mut self,
        strata: &Strata,
        lhs: &RandVar,
        rhs: &RandVar,
        tol: f64,
        two_sided: bool,
    ) -> Self {
        for atom in 0..lhs.len() {
            let (l, r) = (lhs[atom], rhs[atom]);
            let g = if l == r { 0.0 } else { l - r };
            let bad = if two_sided { g.abs() > tol } else { g > tol };
            if bad || g.is_nan() {
                self.rows.push(AtomRow {
                    atom,
                    block: strata.block_of(atom),
                    lhs: l,
                    rhs: r,
                    gap: g,
                });
            }
        }
        self
    }

    pub fn row(mut self, atom: usize, block: usize, lhs: f64, rhs: f64) -> Self {
        let gap = if lhs == rhs { 0.0 } else { lhs - rhs };
        self.rows.push(AtomRow {
            atom,
            block,
            lhs,
            rhs,
            gap,
        });
        self
    }
}

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub id: String,
    /// The result the check verifies, in words.
    pub anchor: String,
    pub passed: bool,
    /// Number of instances examined.
    pub checked: usize,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
    #[serde(serialize_with = "ser_ext_map", skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<Witness>,
}

/// Witnesses kept per record; the rest are counted in `checked`/`metrics`.
pub const MAX_WITNESSES: usize = 3;

impl CheckRecord {
    pub fn new(id: impl Into<String>, anchor: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            anchor: anchor.into(),
            passed: true,
            checked: 0,
            detail: String::new(),
            metrics: BTreeMap::new(),
            witnesses: Vec::new(),
        }
    }

    pub fn checked(mut self, n: usize) -> Self {
        self.checked = n;
        self
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }

    pub fn metric(mut self, key: &str, v: f64) -> Self {
        self.metrics.insert(key.to_string(), v);
        self
    }

    /// Record a failure. Failing records always carry at least one witness.
    pub fn fail(&mut self, w: Witness) {
        self.passed = false;
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(w);
        }
    }

    pub fn with_failures(mut self, ws: impl IntoIterator<Item = Witness>) -> Self {
        let mut count = 0usize;
        for w in ws {
            count += 1;
            self.fail(w);
        }
        if count > 0 {
            self.metrics.insert("violations".into(), count as f64);
        }
        self
    }

    /// A record for a property that holds automatically at finite scale.
    pub fn by_finiteness(id: impl Into<String>, anchor: impl Into<String>) -> Self {
        Self::new(id, anchor).detail("satisfied by finiteness: every limit on a finite space is eventually constant")
    }
}

/// An ordered collection of check records.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Report {
    pub records: Vec<CheckRecord>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, r: CheckRecord) {
        self.records.push(r);
    }

    pub fn extend(&mut self, other: Report) {
        self.records.extend(other.records);
    }

    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.passed)
    }

    pub fn get(&self, id: &str) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Stable ordering by check id.
    pub fn sorted(mut self) -> Self {
        self.records.sort_by(|a, b| a.id.cmp(&b.id));
        self
    }

    /// Prefix every id, for reports assembled from several sources.
    pub fn prefixed(mut self, prefix: &str) -> Self {
        for r in &mut self.records {
            r.id = format!("{prefix}.{}", r.id);
        }
        self
    }
}

impl From<CheckRecord> for Report {
    fn from(r: CheckRecord) -> Self {
        Self { records: vec![r] }
    }
}
