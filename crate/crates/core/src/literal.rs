//! Text literals for groups, elements, sets and measures.
//!
//! Groups are comma-separated orders (`12`, `2,2,3`). Elements of a cyclic group are
//! plain integers; elements of a product are parenthesized tuples such as `(1,3)`.
//! A mass is a turn `p/q` standing for `e^{2πi p/q}`, or `mag:turn` with a positive
//! rational magnitude.

use num_rational::Ratio;
use num_traits::One;

use crate::group::{Element, GroupSpec};
use crate::measure::{Mass, PhaseMeasure};
use crate::turn::RationalTurn;
use crate::Error;

pub fn parse_group(s: &str) -> Result<GroupSpec, Error> {
    s.parse()
}

pub fn format_group(g: &GroupSpec) -> String {
    g.orders().iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")
}

/// Parses one element. Coordinates are reduced modulo the factor orders, so `-1` is
/// accepted in `Z_n`.
pub fn parse_element(group: &GroupSpec, s: &str) -> Result<Element, Error> {
    let s = s.trim();
    let inner = match s.strip_prefix('(') {
        Some(rest) => rest
            .strip_suffix(')')
            .ok_or_else(|| Error::Parse(format!("unbalanced element `{s}`")))?,
        None => s,
    };
    let coords: Result<Vec<i64>, _> = inner.split(',').map(|t| t.trim().parse::<i64>()).collect();
    let coords = coords.map_err(|_| Error::Parse(format!("bad element `{s}`")))?;
    group.element(&coords)
}

pub fn format_element(e: &Element) -> String {
    e.to_string()
}

/// Splits on commas and semicolons that are not inside parentheses.
fn split_top_level(s: &str) -> Result<Vec<&str>, Error> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(Error::Parse(format!("unbalanced parentheses in `{s}`")));
                }
            }
            ',' | ';' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(Error::Parse(format!("unbalanced parentheses in `{s}`")));
    }
    out.push(s[start..].trim());
    Ok(out)
}

/// Parses a list of elements, keeping the given order. Duplicates are rejected.
pub fn parse_set(group: &GroupSpec, s: &str) -> Result<Vec<Element>, Error> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for tok in split_top_level(s)? {
        if group.rank() > 1 && !tok.starts_with('(') {
            return Err(Error::Parse(format!(
                "element `{tok}` of {group} must be a parenthesized tuple"
            )));
        }
        let e = parse_element(group, tok)?;
        if out.contains(&e) {
            return Err(Error::Parse(format!("element {e} listed twice")));
        }
        out.push(e);
    }
    Ok(out)
}

pub fn format_set(set: &[Element]) -> String {
    set.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_ratio(s: &str) -> Result<Ratio<u64>, Error> {
    let bad = || Error::Parse(format!("bad magnitude `{s}`"));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let n: u64 = n.parse().map_err(|_| bad())?;
    let d: u64 = d.parse().map_err(|_| bad())?;
    if d == 0 || n == 0 {
        return Err(bad());
    }
    Ok(Ratio::new(n, d))
}

pub fn parse_mass(s: &str) -> Result<Mass, Error> {
    match s.split_once(':') {
        Some((mag, turn)) => Ok(Mass {
            magnitude: parse_ratio(mag)?,
            turn: turn.parse()?,
        }),
        None => Ok(Mass::unit(s.parse()?)),
    }
}

pub fn format_mass(m: &Mass) -> String {
    if m.magnitude.is_one() {
        m.turn.to_string()
    } else if m.magnitude.denom().is_one() {
        format!("{}:{}", m.magnitude.numer(), m.turn)
    } else {
        format!("{}/{}:{}", m.magnitude.numer(), m.magnitude.denom(), m.turn)
    }
}

pub fn parse_masses(s: &str) -> Result<Vec<Mass>, Error> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|t| parse_mass(t.trim())).collect()
}

pub fn format_masses(masses: &[Mass]) -> String {
    masses.iter().map(format_mass).collect::<Vec<_>>().join(",")
}

pub fn format_turns(turns: &[RationalTurn]) -> String {
    turns.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",")
}

/// Builds a measure from set and mass literals. Without masses every point gets mass 1.
pub fn parse_measure(group: &GroupSpec, set: &str, masses: Option<&str>) -> Result<PhaseMeasure, Error> {
    let set = parse_set(group, set)?;
    let masses = match masses {
        Some(m) => parse_masses(m)?,
        None => vec![Mass::unit(RationalTurn::ZERO); set.len()],
    };
    if masses.len() != set.len() {
        return Err(Error::InvalidMeasure(format!(
            "{} points but {} masses",
            set.len(),
            masses.len()
        )));
    }
    PhaseMeasure::new(group, set.into_iter().zip(masses))
}

/// Splits a record such as `group=7 set=0,1 note="two words"` into key/value pairs.
///
/// Values may be double-quoted, with `\"` and `\\` escapes inside quotes.
pub fn parse_fields(line: &str) -> Result<Vec<(String, String)>, Error> {
    let mut out = Vec::new();
    let mut chars = line.chars().peekable();
    loop {
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        if chars.peek().is_none() {
            break;
        }
        let mut key = String::new();
        let mut has_value = false;
        for c in chars.by_ref() {
            if c == '=' {
                has_value = true;
                break;
            }
            if c.is_whitespace() {
                return Err(Error::Parse(format!("field `{key}` has no value")));
            }
            key.push(c);
        }
        if !has_value {
            return Err(Error::Parse(format!("field `{key}` has no value")));
        }
        if key.is_empty() {
            return Err(Error::Parse("empty field name".into()));
        }
        let mut value = String::new();
        if chars.peek() == Some(&'"') {
            chars.next();
            let mut closed = false;
            while let Some(c) = chars.next() {
                match c {
                    '\\' => match chars.next() {
                        Some(e) => value.push(e),
                        None => break,
                    },
                    '"' => {
                        closed = true;
                        break;
                    }
                    _ => value.push(c),
                }
            }
            if !closed {
                return Err(Error::Parse(format!("unterminated quote in field `{key}`")));
            }
        } else {
            while let Some(&c) = chars.peek() {
                if c.is_whitespace() {
                    break;
                }
                value.push(c);
                chars.next();
            }
        }
        out.push((key, value));
    }
    Ok(out)
}

/// Formats a value for [`parse_fields`], quoting only when needed.
pub fn quote_field(value: &str) -> String {
    let plain = !value.is_empty() && !value.chars().any(|c| c.is_whitespace() || c == '"' || c == '\\');
    if plain {
        value.to_string()
    } else {
        let mut s = String::from("\"");
        for c in value.chars() {
            if c == '"' || c == '\\' {
                s.push('\\');
            }
            s.push(c);
        }
        s.push('"');
        s
    }
}
