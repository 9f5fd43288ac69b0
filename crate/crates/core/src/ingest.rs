//! Conversion of LaTeX measure listings into catalog records.
//!
//! Source lines look like
//!
//! ```text
//! group=7 src="Table 1" :: \delta_{0} - \delta_{1} - \delta_{2} - \delta_{4}
//! ```
//!
//! Coefficients may be `i`, `-i`, `-1` or `e^{k\pi i/m}`, which becomes the turn
//! `k/(2m)` reduced modulo 1. A coefficient may multiply a parenthesized sum of point
//! masses. Point masses are written `\delta_3`, `\delta_{3}`, `\delta(3)` or `\delta_{(0,1)}`.
//! Each record is checked exactly; a record that fails must carry a `note`.

use crate::catalog::{Catalog, CatalogRecord, Status};
use crate::cyclotomic::exact_extremality_check;
use crate::equivalence::canonical_form;
use crate::group::{Element, GroupSpec};
use crate::literal::parse_fields;
use crate::measure::PhaseMeasure;
use crate::turn::RationalTurn;
use crate::Error;

struct Cursor<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, lit: &str) -> bool {
        if self.s[self.pos..].starts_with(lit.as_bytes()) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Option<u64> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos]).ok()?.parse().ok()
    }

    fn err(&self, what: &str) -> Error {
        let rest = String::from_utf8_lossy(&self.s[self.pos..]);
        let rest: String = rest.chars().take(24).collect();
        Error::Parse(format!("{what} at `{rest}`"))
    }

    /// A run of `+` and `-` signs; each `-` adds half a turn.
    fn signs(&mut self) -> RationalTurn {
        let mut t = RationalTurn::ZERO;
        while let Some(c) = self.peek() {
            match c {
                b'+' => {}
                b'-' => t = t + RationalTurn::HALF,
                _ => break,
            }
            self.pos += 1;
        }
        t
    }

    /// `e^{[-]k\pi i[/m]}`, `i`, or nothing.
    fn coefficient(&mut self) -> Result<RationalTurn, Error> {
        if self.eat("e^{") {
            let neg = self.eat("-");
            let k = self.number().unwrap_or(1);
            if !self.eat("\\pii") {
                return Err(self.err("expected \\pi i"));
            }
            let m = if self.eat("/") {
                self.number().ok_or_else(|| self.err("expected denominator"))?
            } else {
                1
            };
            if m == 0 || !self.eat("}") {
                return Err(self.err("malformed exponent"));
            }
            let t = RationalTurn::new(k as i128, 2 * m);
            Ok(if neg { -t } else { t })
        } else if self.peek() == Some(b'i') {
            self.pos += 1;
            Ok(RationalTurn::new(1, 4))
        } else {
            Ok(RationalTurn::ZERO)
        }
    }

    fn delta(&mut self) -> Result<Vec<i64>, Error> {
        if !self.eat("\\delta") {
            return Err(self.err("expected \\delta"));
        }
        self.eat("_");
        let body = if self.eat("{") {
            let start = self.pos;
            while self.peek().is_some_and(|c| c != b'}') {
                self.pos += 1;
            }
            let body = &self.s[start..self.pos];
            if !self.eat("}") {
                return Err(self.err("unclosed index"));
            }
            body
        } else if self.eat("(") {
            let start = self.pos;
            while self.peek().is_some_and(|c| c != b')') {
                self.pos += 1;
            }
            let body = &self.s[start..self.pos];
            if !self.eat(")") {
                return Err(self.err("unclosed index"));
            }
            body
        } else if self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
            &self.s[self.pos - 1..self.pos]
        } else {
            return Err(self.err("expected index"));
        };
        let body = std::str::from_utf8(body).map_err(|_| self.err("bad index"))?;
        let body = body.trim_start_matches('(').trim_end_matches(')');
        body.split(',')
            .map(|t| t.parse::<i64>().map_err(|_| self.err("bad index")))
            .collect()
    }
}

/// Parses a LaTeX measure into `(coordinates, turn)` pairs in source order.
pub fn parse_latex_measure(latex: &str) -> Result<Vec<(Vec<i64>, RationalTurn)>, Error> {
    let compact: String = latex.chars().filter(|c| !c.is_whitespace()).collect();
    let mut cur = Cursor {
        s: compact.as_bytes(),
        pos: 0,
    };
    let mut out = Vec::new();
    while cur.peek().is_some() {
        let sign = cur.signs();
        let coeff = cur.coefficient()? + cur.signs();
        if cur.eat("(") {
            loop {
                let inner = cur.signs();
                out.push((cur.delta()?, sign + coeff + inner));
                if cur.eat(")") {
                    break;
                }
                if cur.peek().is_none() {
                    return Err(cur.err("unclosed group"));
                }
            }
        } else {
            out.push((cur.delta()?, sign + coeff));
        }
    }
    if out.is_empty() {
        return Err(Error::Parse("empty measure".into()));
    }
    Ok(out)
}

/// Builds a measure on `group` from LaTeX. Coordinates must already lie in range.
pub fn latex_to_measure(group: &GroupSpec, latex: &str) -> Result<PhaseMeasure, Error> {
    let terms = parse_latex_measure(latex)?;
    let mut set = Vec::with_capacity(terms.len());
    let mut turns = Vec::with_capacity(terms.len());
    for (coords, t) in terms {
        let in_range = coords.len() == group.rank()
            && coords
                .iter()
                .zip(group.orders())
                .all(|(&x, &n)| x >= 0 && (x as u64) < n);
        if !in_range {
            return Err(Error::InvalidElement(format!(
                "{coords:?} is not an element of {group}"
            )));
        }
        set.push(Element(coords.iter().map(|&x| x as u64).collect()));
        turns.push(t);
    }
    PhaseMeasure::unimodular(group, &set, &turns)
}

/// Converts one source line into a catalog record, running the exact check.
pub fn ingest_line(line: &str) -> Result<CatalogRecord, Error> {
    let (head, latex) = line
        .split_once("::")
        .ok_or_else(|| Error::Parse("missing `::`".into()))?;
    let mut group = None;
    let mut provenance = None;
    let mut note = None;
    for (k, v) in parse_fields(head)? {
        match k.as_str() {
            "group" => group = Some(v.parse::<GroupSpec>()?),
            "src" => provenance = Some(v),
            "note" => note = Some(v),
            _ => return Err(Error::Parse(format!("unknown field `{k}`"))),
        }
    }
    let group = group.ok_or_else(|| Error::Parse("missing group".into()))?;
    let provenance = provenance.ok_or_else(|| Error::Parse("missing src".into()))?;
    let mu = latex_to_measure(&group, latex)?;
    let status = if exact_extremality_check(&mu)?.is_extreme() {
        Status::Verified
    } else {
        Status::FailedVerification
    };
    if status == Status::FailedVerification && note.is_none() {
        return Err(Error::InvalidMeasure(format!(
            "measure from {provenance} fails the exact check and has no note"
        )));
    }
    let set = mu.support();
    let canon = canonical_form(&group, &set)?.representative;
    Ok(CatalogRecord {
        class: (canon != set).then_some(canon),
        group,
        set,
        masses: mu.turns(),
        provenance,
        status,
        note,
    })
}

/// Converts a whole source file. Within each entry verified measures come first.
pub fn ingest(source: &str) -> Result<Catalog, Error> {
    let mut cat = Catalog::default();
    for (i, line) in source.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = |e: Error| Error::Parse(format!("line {}: {e}", i + 1));
        cat.push(ingest_line(line).map_err(at)?).map_err(at)?;
    }
    for e in &mut cat.entries {
        if e.primary.status == Status::FailedVerification {
            if let Some(k) = e.alternates.iter().position(|m| m.status == Status::Verified) {
                std::mem::swap(&mut e.primary, &mut e.alternates[k]);
            }
        }
        e.alternates.sort_by_key(|m| m.status != Status::Verified);
    }
    Ok(cat)
}
