//! Typed normalization of object terms.
//!
//! Lexical variants of the same value (for example `1886-10-28`,
//! `10/28/1886` and `28 October 1886`) collapse to one [`NormalizedValue`], so
//! grouping claims by value is grouping by meaning rather than by spelling.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Serialize, Serializer};

use super::term::{Literal, Term, XSD};

/// A finite, unit-less number. `-0.0` is stored as `0.0` so that equality,
/// hashing and rendering agree.
#[derive(Debug, Clone, Copy)]
pub struct Number(f64);

impl Number {
    pub fn new(v: f64) -> Option<Number> {
        if v.is_finite() {
            Some(Number(if v == 0.0 { 0.0 } else { v }))
        } else {
            None
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl PartialEq for Number {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits()
    }
}

impl Eq for Number {}

impl Hash for Number {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state)
    }
}

impl PartialOrd for Number {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Number {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Calendar date with optional wildcard month/day. A concrete day never
/// appears with a wildcard month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DateValue {
    year: i32,
    month: Option<u8>,
    day: Option<u8>,
}

impl DateValue {
    pub fn new(year: i32, month: Option<u8>, day: Option<u8>) -> Option<DateValue> {
        match (month, day) {
            (None, Some(_)) => None,
            (Some(m), _) if !(1..=12).contains(&m) => None,
            (Some(m), Some(d)) if d == 0 || d > days_in_month(year, m) => None,
            _ => Some(DateValue { year, month, day }),
        }
    }

    pub fn ymd(year: i32, month: u8, day: u8) -> Option<DateValue> {
        DateValue::new(year, Some(month), Some(day))
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn month(&self) -> Option<u8> {
        self.month
    }

    pub fn day(&self) -> Option<u8> {
        self.day
    }
}

impl fmt::Display for DateValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.year < 0 {
            write!(f, "-{:04}", -(self.year as i64))?;
        } else {
            write!(f, "{:04}", self.year)?;
        }
        match self.month {
            Some(m) => write!(f, "-{m:02}")?,
            None => f.write_str("-#")?,
        }
        match self.day {
            Some(d) => write!(f, "-{d:02}"),
            None => f.write_str("-#"),
        }
    }
}

fn days_in_month(year: i32, month: u8) -> u8 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        _ => {
            let leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
            if leap { 29 } else { 28 }
        }
    }
}

/// The typed value of a claim's object. The derived ordering (kind first:
/// Number < Date < Text < Reference, then the natural order within a kind) is
/// the canonical value order used for deterministic tie-breaking.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NormalizedValue {
    Number(Number),
    Date(DateValue),
    Text(String),
    Reference(String),
}

impl NormalizedValue {
    pub fn number(v: f64) -> NormalizedValue {
        NormalizedValue::Number(Number::new(v).expect("finite number"))
    }

    pub fn date(year: i32, month: Option<u8>, day: Option<u8>) -> NormalizedValue {
        NormalizedValue::Date(DateValue::new(year, month, day).expect("valid date"))
    }

    pub fn kind(&self) -> ValueKind {
        match self {
            NormalizedValue::Number(_) => ValueKind::Number,
            NormalizedValue::Date(_) => ValueKind::Date,
            NormalizedValue::Text(_) => ValueKind::Text,
            NormalizedValue::Reference(_) => ValueKind::Reference,
        }
    }

    /// Canonical string form; injective within a kind.
    pub fn render(&self) -> String {
        self.to_string()
    }

    /// The RDF term that normalizes back to this value.
    pub fn to_term(&self) -> Term {
        match self {
            NormalizedValue::Number(n) => {
                Term::Literal(Literal::typed(n.0.to_string(), format!("{XSD}decimal")))
            }
            NormalizedValue::Date(d) => Term::Literal(Literal::plain(d.to_string())),
            NormalizedValue::Text(t) => Term::Literal(Literal::plain(t.clone())),
            NormalizedValue::Reference(iri) => Term::Iri(iri.clone()),
        }
    }
}

impl fmt::Display for NormalizedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormalizedValue::Number(n) => write!(f, "{}", n.0),
            NormalizedValue::Date(d) => d.fmt(f),
            NormalizedValue::Text(t) => f.write_str(t),
            NormalizedValue::Reference(iri) => f.write_str(iri),
        }
    }
}

impl Serialize for NormalizedValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.render())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueKind {
    Number,
    Date,
    Text,
    Reference,
}

/// Normalizes an object term. Blank nodes and NULL/empty literals are not
/// values and yield `None`.
pub fn normalize_term(term: &Term) -> Option<NormalizedValue> {
    match term {
        Term::Iri(iri) => Some(NormalizedValue::Reference(iri.clone())),
        Term::BlankNode(_) => None,
        Term::Literal(lit) => normalize_object(&lit.lexical, lit.datatype.as_deref()),
    }
}

/// Normalizes a literal. Tries a declared numeric datatype, then the date
/// patterns, then falls back to whitespace-collapsed text.
pub fn normalize_object(lexical: &str, datatype: Option<&str>) -> Option<NormalizedValue> {
    let text = lexical.split_whitespace().collect::<Vec<_>>().join(" ");
    if text.is_empty() || text.eq_ignore_ascii_case("null") {
        return None;
    }
    if datatype.is_some_and(is_numeric_datatype) {
        if let Some(n) = parse_number(&text) {
            return Some(NormalizedValue::Number(n));
        }
    }
    let local = datatype.and_then(|dt| dt.strip_prefix(XSD));
    let date = match local {
        Some("gYear") => parse_year(&text).and_then(|y| DateValue::new(y, None, None)),
        Some("gYearMonth") => parse_iso(&text),
        Some("dateTime") => parse_iso(text.split('T').next().unwrap_or(&text)),
        _ => parse_date(&text),
    };
    if let Some(d) = date {
        return Some(NormalizedValue::Date(d));
    }
    Some(NormalizedValue::Text(text))
}

fn is_numeric_datatype(dt: &str) -> bool {
    if let Some(local) = dt.strip_prefix(XSD) {
        matches!(
            local,
            "decimal"
                | "integer"
                | "int"
                | "long"
                | "short"
                | "byte"
                | "double"
                | "float"
                | "nonNegativeInteger"
                | "nonPositiveInteger"
                | "negativeInteger"
                | "positiveInteger"
                | "unsignedLong"
                | "unsignedInt"
                | "unsignedShort"
                | "unsignedByte"
        )
    } else {
        // DBpedia encodes units as datatypes; the unit is dropped.
        dt.starts_with("http://dbpedia.org/datatype/")
    }
}

fn parse_number(s: &str) -> Option<Number> {
    let body = s.strip_prefix('+').unwrap_or(s);
    if body.is_empty() || !body.bytes().all(|b| b.is_ascii_digit() || b"-.eE+".contains(&b)) {
        return None;
    }
    body.parse::<f64>().ok().and_then(Number::new)
}

fn parse_date(s: &str) -> Option<DateValue> {
    parse_iso(s).or_else(|| parse_slashed(s)).or_else(|| parse_named_month(s))
}

fn parse_year(s: &str) -> Option<i32> {
    let digits = s.strip_prefix('-').unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.len() > 9 {
        return None;
    }
    let y: i32 = digits.parse().ok()?;
    Some(if s.starts_with('-') { -y } else { y })
}

fn parse_component(s: &str, max_len: usize) -> Option<Option<u8>> {
    if !s.is_empty() && s.len() <= max_len && s.bytes().all(|b| b == b'#') {
        return Some(None);
    }
    if s.is_empty() || s.len() > max_len || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse::<u8>().ok().map(Some)
}

/// `Y-M-D`, `Y-M`, with `#` wildcards; the year needs at least four digits.
fn parse_iso(s: &str) -> Option<DateValue> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let mut parts = body.split('-');
    let year_str = parts.next()?;
    if year_str.len() < 4 {
        return None;
    }
    let year = parse_year(year_str)?;
    let year = if neg { -year } else { year };
    let month = parse_component(parts.next()?, 2)?;
    let day = match parts.next() {
        Some(d) => parse_component(d, 2)?,
        None => None,
    };
    if parts.next().is_some() {
        return None;
    }
    DateValue::new(year, month, day)
}

/// `M/D/Y`.
fn parse_slashed(s: &str) -> Option<DateValue> {
    let mut parts = s.split('/');
    let month = parse_component(parts.next()?, 2)??;
    let day = parse_component(parts.next()?, 2)??;
    let year = parse_year(parts.next()?)?;
    if parts.next().is_some() {
        return None;
    }
    DateValue::new(year, Some(month), Some(day))
}

const MONTHS: [&str; 12] = [
    "january",
    "february",
    "march",
    "april",
    "may",
    "june",
    "july",
    "august",
    "september",
    "october",
    "november",
    "december",
];

fn month_number(word: &str) -> Option<u8> {
    let w = word.trim_end_matches(['.', ',']).to_ascii_lowercase();
    if w.len() < 3 {
        return None;
    }
    MONTHS
        .iter()
        .position(|m| *m == w || (w.len() == 3 && m.starts_with(&w)) || (w == "sept" && *m == "september"))
        .map(|i| i as u8 + 1)
}

/// `D Month Y`, `Month D, Y` and `Month Y`.
fn parse_named_month(s: &str) -> Option<DateValue> {
    let words: Vec<&str> = s.split(' ').collect();
    match words.as_slice() {
        [d, m, y] => {
            if let Some(month) = month_number(m) {
                let day = parse_component(d, 2)??;
                return DateValue::new(parse_year(y)?, Some(month), Some(day));
            }
            let month = month_number(d)?;
            let day = parse_component(m.strip_suffix(',')?, 2)??;
            DateValue::new(parse_year(y)?, Some(month), Some(day))
        }
        [m, y] => DateValue::new(parse_year(y)?, Some(month_number(m)?), None),
        _ => None,
    }
}
