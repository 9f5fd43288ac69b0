//! The shipped catalog of published extreme sets and measures.
//!
//! One record per line:
//!
//! ```text
//! group=7 set=0,1,2,4 masses=0/1,1/2,1/2,1/2 status=verified src="Table 1"
//! ```
//!
//! Optional `note=` and `class=` fields follow. Records with the same group and set form
//! one [`CatalogEntry`]; the first is the primary measure and the rest are alternates.
//! Records that also share their masses are merged and their sources joined with `; `.

use std::fmt;
use std::path::Path;

use rayon::prelude::*;

use crate::cyclotomic::{exact_extremality_check, ExactVerdict};
use crate::group::{Element, GroupSpec};
use crate::literal::{format_group, format_set, format_turns, parse_fields, parse_set, quote_field};
use crate::measure::PhaseMeasure;
use crate::structure::passes_difference_test;
use crate::turn::RationalTurn;
use crate::Error;

/// The catalog compiled into the library.
pub const EMBEDDED_CATALOG: &str = include_str!("../data/catalog.txt");

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Status {
    Verified,
    FailedVerification,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Verified => "verified",
            Status::FailedVerification => "failed",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One measure on a catalog set.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CatalogMeasure {
    /// Turns aligned with the entry's sorted set.
    pub masses: Vec<RationalTurn>,
    pub provenance: String,
    pub status: Status,
    pub note: Option<String>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CatalogEntry {
    pub group: GroupSpec,
    /// Sorted support.
    pub set: Vec<Element>,
    /// Canonical class representative, present when it differs from `set`.
    pub class: Option<Vec<Element>>,
    pub primary: CatalogMeasure,
    pub alternates: Vec<CatalogMeasure>,
}

impl CatalogEntry {
    pub fn masses(&self) -> &[RationalTurn] {
        &self.primary.masses
    }

    pub fn provenance(&self) -> &str {
        &self.primary.provenance
    }

    pub fn status(&self) -> Status {
        self.primary.status
    }

    /// Primary first, then alternates.
    pub fn measures(&self) -> impl Iterator<Item = &CatalogMeasure> {
        std::iter::once(&self.primary).chain(self.alternates.iter())
    }

    pub fn phase_measure(&self, m: &CatalogMeasure) -> Result<PhaseMeasure, Error> {
        PhaseMeasure::unimodular(&self.group, &self.set, &m.masses)
    }

    /// Whether any measure on this set carries the given source label.
    pub fn cites(&self, label: &str) -> bool {
        self.measures().any(|m| cites(&m.provenance, label))
    }
}

fn cites(provenance: &str, label: &str) -> bool {
    provenance.split("; ").any(|p| p == label)
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Catalog {
    pub entries: Vec<CatalogEntry>,
}

/// A single record before merging.
#[derive(Clone, Debug)]
pub struct CatalogRecord {
    pub group: GroupSpec,
    pub set: Vec<Element>,
    pub masses: Vec<RationalTurn>,
    pub provenance: String,
    pub status: Status,
    pub note: Option<String>,
    pub class: Option<Vec<Element>>,
}

impl CatalogRecord {
    /// Sorts the set, carrying masses along.
    fn normalized(mut self) -> Self {
        let mut pairs: Vec<(Element, RationalTurn)> = self.set.into_iter().zip(self.masses).collect();
        pairs.sort();
        (self.set, self.masses) = pairs.into_iter().unzip();
        self
    }
}

fn join_text(a: &mut String, b: &str) {
    if !a.split("; ").any(|p| p == b) {
        a.push_str("; ");
        a.push_str(b);
    }
}

impl Catalog {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Adds a record, merging it into an existing entry on the same group and set.
    pub fn push(&mut self, rec: CatalogRecord) -> Result<(), Error> {
        if rec.set.len() != rec.masses.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} points but {} masses",
                rec.set.len(),
                rec.masses.len()
            )));
        }
        let rec = rec.normalized();
        let measure = CatalogMeasure {
            masses: rec.masses,
            provenance: rec.provenance,
            status: rec.status,
            note: rec.note,
        };
        let found = self
            .entries
            .iter_mut()
            .find(|e| e.group == rec.group && e.set == rec.set);
        let Some(entry) = found else {
            self.entries.push(CatalogEntry {
                group: rec.group,
                set: rec.set,
                class: rec.class,
                primary: measure,
                alternates: Vec::new(),
            });
            return Ok(());
        };
        if entry.class.is_none() {
            entry.class = rec.class;
        }
        let same = std::iter::once(&mut entry.primary)
            .chain(entry.alternates.iter_mut())
            .find(|m| m.masses == measure.masses);
        match same {
            Some(m) => {
                join_text(&mut m.provenance, &measure.provenance);
                match (&mut m.note, measure.note) {
                    (Some(a), Some(b)) if !a.contains(b.as_str()) => {
                        a.push_str("; ");
                        a.push_str(&b);
                    }
                    (slot @ None, b) => *slot = b,
                    _ => {}
                }
            }
            None => entry.alternates.push(measure),
        }
        Ok(())
    }

    /// Entries citing `label`, keeping only the measures that cite it.
    pub fn filter_provenance(&self, label: &str) -> Catalog {
        let entries = self
            .entries
            .iter()
            .filter_map(|e| {
                let mut kept = e.measures().filter(|m| cites(&m.provenance, label)).cloned();
                let primary = kept.next()?;
                Some(CatalogEntry {
                    group: e.group.clone(),
                    set: e.set.clone(),
                    class: e.class.clone(),
                    primary,
                    alternates: kept.collect(),
                })
            })
            .collect();
        Catalog { entries }
    }
}

fn parse_record(line: &str) -> Result<CatalogRecord, Error> {
    let mut set = None;
    let mut masses = None;
    let mut status = None;
    let mut provenance = None;
    let mut note = None;
    let mut class = None;
    let fields = parse_fields(line)?;
    let group: GroupSpec = fields
        .iter()
        .find(|(k, _)| k == "group")
        .ok_or_else(|| Error::Parse("missing group".into()))?
        .1
        .parse()?;
    for (k, v) in fields {
        match k.as_str() {
            "group" => {}
            "set" => set = Some(parse_set(&group, &v)?),
            "masses" => {
                let t: Result<Vec<RationalTurn>, _> = v.split(',').map(|t| t.parse()).collect();
                masses = Some(t?);
            }
            "status" => {
                status = Some(match v.as_str() {
                    "verified" => Status::Verified,
                    "failed" => Status::FailedVerification,
                    _ => return Err(Error::Parse(format!("unknown status `{v}`"))),
                })
            }
            "src" => provenance = Some(v),
            "note" => note = Some(v),
            "class" => class = Some(parse_set(&group, &v)?),
            _ => return Err(Error::Parse(format!("unknown field `{k}`"))),
        }
    }
    Ok(CatalogRecord {
        group,
        set: set.ok_or_else(|| Error::Parse("missing set".into()))?,
        masses: masses.ok_or_else(|| Error::Parse("missing masses".into()))?,
        provenance: provenance.ok_or_else(|| Error::Parse("missing src".into()))?,
        status: status.ok_or_else(|| Error::Parse("missing status".into()))?,
        note,
        class,
    })
}

/// Parses catalog text. Blank lines and `#` comments are skipped.
pub fn parse_catalog(text: &str) -> Result<Catalog, Error> {
    let mut cat = Catalog::default();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = |e: Error| Error::Parse(format!("line {}: {e}", i + 1));
        let rec = parse_record(line).map_err(at)?;
        cat.push(rec).map_err(at)?;
    }
    Ok(cat)
}

/// Reads a catalog file, or the embedded catalog when `path` is `None`.
pub fn load_catalog(path: Option<&Path>) -> Result<Catalog, Error> {
    match path {
        Some(p) => parse_catalog(&std::fs::read_to_string(p)?),
        None => parse_catalog(EMBEDDED_CATALOG),
    }
}

fn record_line(e: &CatalogEntry, m: &CatalogMeasure) -> String {
    let mut s = format!(
        "group={} set={} masses={} status={} src={}",
        format_group(&e.group),
        format_set(&e.set),
        format_turns(&m.masses),
        m.status,
        quote_field(&m.provenance)
    );
    if let Some(n) = &m.note {
        s.push_str(&format!(" note={}", quote_field(n)));
    }
    if let Some(c) = &e.class {
        s.push_str(&format!(" class={}", format_set(c)));
    }
    s
}

/// Writes one line per measure, entries in order and the primary first.
pub fn serialize_catalog(cat: &Catalog) -> String {
    let mut out = String::new();
    for e in &cat.entries {
        for m in e.measures() {
            out.push_str(&record_line(e, m));
            out.push('\n');
        }
    }
    out
}

/// A point where `μ * μ̃ - N δ0` is nonzero, with the offending cyclotomic sum.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Witness {
    pub element: Element,
    pub sum: String,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MeasureCheck {
    pub provenance: String,
    pub recorded: Status,
    pub computed: Status,
    pub witness: Option<Witness>,
    /// Set when the exact check could not run at all.
    pub error: Option<String>,
}

impl MeasureCheck {
    pub fn as_expected(&self) -> bool {
        self.recorded == self.computed
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct VerificationRecord {
    pub group: GroupSpec,
    pub set: Vec<Element>,
    pub passes_difference_test: bool,
    /// Primary first, then alternates.
    pub checks: Vec<MeasureCheck>,
}

impl VerificationRecord {
    pub fn status(&self) -> Status {
        self.checks[0].computed
    }
}

/// Runs the exact check on every measure of the entry.
pub fn verify_entry(e: &CatalogEntry) -> VerificationRecord {
    let checks = e
        .measures()
        .map(|m| {
            let verdict = e.phase_measure(m).and_then(|mu| exact_extremality_check(&mu));
            let (computed, witness, error) = match verdict {
                Ok(ExactVerdict::Extreme) => (Status::Verified, None, None),
                Ok(ExactVerdict::NotExtreme { witness, sum }) => (
                    Status::FailedVerification,
                    Some(Witness {
                        element: witness,
                        sum: sum.to_string(),
                    }),
                    None,
                ),
                Err(err) => (Status::FailedVerification, None, Some(err.to_string())),
            };
            MeasureCheck {
                provenance: m.provenance.clone(),
                recorded: m.status,
                computed,
                witness,
                error,
            }
        })
        .collect();
    VerificationRecord {
        group: e.group.clone(),
        set: e.set.clone(),
        passes_difference_test: passes_difference_test(&e.group, &e.set).unwrap_or(false),
        checks,
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FailedMeasure {
    pub group: GroupSpec,
    pub set: Vec<Element>,
    pub check: MeasureCheck,
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct VerificationSummary {
    pub entries: usize,
    /// Measures that verified exactly.
    pub verified: usize,
    /// Measures that did not verify, in catalog order.
    pub failed: Vec<FailedMeasure>,
    /// Measures whose computed status differs from the recorded one.
    pub unexpected: Vec<FailedMeasure>,
}

impl VerificationSummary {
    pub fn is_ok(&self) -> bool {
        self.unexpected.is_empty()
    }
}

/// Verifies every entry in parallel; the summary keeps catalog order.
pub fn verify_all(cat: &Catalog) -> VerificationSummary {
    let records: Vec<VerificationRecord> = cat.entries.par_iter().map(verify_entry).collect();
    let mut summary = VerificationSummary {
        entries: records.len(),
        ..Default::default()
    };
    for r in records {
        for c in r.checks {
            if c.computed == Status::Verified {
                summary.verified += 1;
            }
            let f = || FailedMeasure {
                group: r.group.clone(),
                set: r.set.clone(),
                check: c.clone(),
            };
            if !c.as_expected() {
                summary.unexpected.push(f());
            }
            if c.computed == Status::FailedVerification {
                summary.failed.push(f());
            }
        }
    }
    summary
}
