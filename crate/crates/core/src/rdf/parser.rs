//! Line-oriented N-Triples / N-Quads reader.
//!
//! Each non-blank, non-comment line must hold exactly one statement terminated
//! by `.`. Subjects and predicates must be absolute IRIs; blank-node subjects
//! are rejected as malformed.

use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use thiserror::Error;

use super::term::{Literal, RdfStatement, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RdfFormat {
    NTriples,
    NQuads,
}

impl RdfFormat {
    /// Guesses from the file name, looking through a trailing `.gz`.
    pub fn from_path(path: &Path) -> RdfFormat {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        let name = name.strip_suffix(".gz").unwrap_or(name);
        if name.ends_with(".nq") || name.ends_with(".nquads") {
            RdfFormat::NQuads
        } else {
            RdfFormat::NTriples
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    Strict,
    #[default]
    Lenient,
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {reason}")]
    MalformedLine { line: u64, reason: String },
    #[error("line {line}: input is not valid UTF-8")]
    Encoding { line: u64 },
    #[error("read failed: {0}")]
    Io(#[from] io::Error),
}

impl ParseError {
    pub fn line(&self) -> Option<u64> {
        match self {
            ParseError::MalformedLine { line, .. } | ParseError::Encoding { line } => Some(*line),
            ParseError::Io(_) => None,
        }
    }
}

/// A skipped line in lenient mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineDiagnostic {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct Parsed {
    pub statements: Vec<RdfStatement>,
    pub diagnostics: Vec<LineDiagnostic>,
}

/// Streaming statement iterator. Yields one item per statement line or per
/// malformed line; blank and comment lines produce nothing.
pub struct StatementReader<R> {
    reader: R,
    format: RdfFormat,
    line: u64,
    buf: Vec<u8>,
    done: bool,
}

impl<R: BufRead> StatementReader<R> {
    pub fn new(reader: R, format: RdfFormat) -> Self {
        StatementReader { reader, format, line: 0, buf: Vec::new(), done: false }
    }
}

impl<R: BufRead> Iterator for StatementReader<R> {
    type Item = Result<RdfStatement, ParseError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            self.buf.clear();
            match self.reader.read_until(b'\n', &mut self.buf) {
                Ok(0) => {
                    self.done = true;
                    return None;
                }
                Ok(_) => {}
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            }
            self.line += 1;
            let text = match std::str::from_utf8(&self.buf) {
                Ok(t) => t,
                Err(_) => return Some(Err(ParseError::Encoding { line: self.line })),
            };
            match parse_line(text, self.format, self.line) {
                Ok(Some(st)) => return Some(Ok(st)),
                Ok(None) => continue,
                Err(reason) => {
                    return Some(Err(ParseError::MalformedLine { line: self.line, reason }))
                }
            }
        }
        None
    }
}

/// Parses a whole stream. Strict mode stops at the first bad line; lenient
/// mode records it and moves on. I/O failures abort in both modes.
pub fn parse_triples<R: BufRead>(
    reader: R,
    format: RdfFormat,
    mode: ParseMode,
) -> Result<Parsed, ParseError> {
    let mut out = Parsed::default();
    for item in StatementReader::new(reader, format) {
        match item {
            Ok(st) => out.statements.push(st),
            Err(ParseError::Io(e)) => return Err(ParseError::Io(e)),
            Err(e) if mode == ParseMode::Strict => return Err(e),
            Err(e) => out.diagnostics.push(LineDiagnostic {
                line: e.line().unwrap_or(0),
                reason: match e {
                    ParseError::MalformedLine { reason, .. } => reason,
                    other => other.to_string(),
                },
            }),
        }
    }
    Ok(out)
}

/// Opens a file for reading, transparently decompressing gzip (detected by
/// magic bytes, not by extension).
pub fn open_input(path: &Path) -> io::Result<Box<dyn BufRead + Send>> {
    let mut file = BufReader::new(File::open(path)?);
    let is_gzip = file.fill_buf()?.starts_with(&[0x1f, 0x8b]);
    if is_gzip {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(file))))
    } else {
        Ok(Box::new(file))
    }
}

/// Reads an entire in-memory document; convenient for fixtures.
pub fn parse_str(text: &str, format: RdfFormat, mode: ParseMode) -> Result<Parsed, ParseError> {
    parse_triples(text.as_bytes(), format, mode)
}

fn parse_line(text: &str, format: RdfFormat, line: u64) -> Result<Option<RdfStatement>, String> {
    let mut cur = Cursor { s: text.trim_end_matches(['\n', '\r']), pos: 0 };
    cur.skip_ws();
    if cur.at_end() || cur.peek() == Some('#') {
        return Ok(None);
    }
    let subject = match cur.peek() {
        Some('<') => cur.iri()?,
        Some('_') => return Err("blank-node subjects are not supported".into()),
        _ => return Err("expected subject IRI".into()),
    };
    cur.skip_ws();
    if cur.peek() != Some('<') {
        return Err("expected predicate IRI".into());
    }
    let predicate = cur.iri()?;
    cur.skip_ws();
    let object = match cur.peek() {
        Some('<') => Term::Iri(cur.iri()?),
        Some('_') => Term::BlankNode(cur.blank()?),
        Some('"') => Term::Literal(cur.literal()?),
        _ => return Err("expected object term".into()),
    };
    cur.skip_ws();
    let graph = match cur.peek() {
        Some('<') if format == RdfFormat::NQuads => {
            let g = cur.iri()?;
            cur.skip_ws();
            Some(g)
        }
        Some('<') | Some('_') if format == RdfFormat::NTriples => {
            return Err("unexpected fourth term in N-Triples".into())
        }
        Some('_') => return Err("blank-node graph labels are not supported".into()),
        _ => None,
    };
    if cur.peek() != Some('.') {
        return Err("missing terminating '.'".into());
    }
    cur.bump();
    cur.skip_ws();
    if !cur.at_end() && cur.peek() != Some('#') {
        return Err("trailing content after '.'".into());
    }
    Ok(Some(RdfStatement { subject, predicate, object, graph, line }))
}

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.s[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.s.len()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t')) {
            self.pos += 1;
        }
    }

    fn iri(&mut self) -> Result<String, String> {
        debug_assert_eq!(self.peek(), Some('<'));
        self.bump();
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err("unterminated IRI".into()),
                Some('>') => break,
                Some('\\') => out.push(self.unicode_escape()?),
                Some(c @ (' ' | '<' | '"' | '{' | '}' | '|' | '^' | '`')) => {
                    return Err(format!("invalid character {c:?} in IRI"))
                }
                Some(c) if (c as u32) <= 0x20 => return Err("control character in IRI".into()),
                Some(c) => out.push(c),
            }
        }
        if !is_absolute_iri(&out) {
            return Err(format!("IRI <{out}> is not absolute"));
        }
        Ok(out)
    }

    fn blank(&mut self) -> Result<String, String> {
        if !self.rest().starts_with("_:") {
            return Err("malformed blank node".into());
        }
        self.pos += 2;
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || matches!(c, '_' | '-' | '.') {
                self.bump();
            } else {
                break;
            }
        }
        let mut label = &self.s[start..self.pos];
        // a label cannot end in '.'; the dot belongs to the statement terminator
        while let Some(stripped) = label.strip_suffix('.') {
            label = stripped;
            self.pos -= 1;
        }
        if label.is_empty() {
            return Err("empty blank node label".into());
        }
        Ok(label.to_string())
    }

    fn literal(&mut self) -> Result<Literal, String> {
        self.bump();
        let mut lexical = String::new();
        loop {
            match self.bump() {
                None => return Err("unterminated literal".into()),
                Some('"') => break,
                Some('\\') => match self.peek() {
                    Some('t') => { self.bump(); lexical.push('\t') }
                    Some('b') => { self.bump(); lexical.push('\u{8}') }
                    Some('n') => { self.bump(); lexical.push('\n') }
                    Some('r') => { self.bump(); lexical.push('\r') }
                    Some('f') => { self.bump(); lexical.push('\u{c}') }
                    Some('"') => { self.bump(); lexical.push('"') }
                    Some('\'') => { self.bump(); lexical.push('\'') }
                    Some('\\') => { self.bump(); lexical.push('\\') }
                    Some('u' | 'U') => lexical.push(self.unicode_escape()?),
                    _ => return Err("invalid escape in literal".into()),
                },
                Some(c) => lexical.push(c),
            }
        }
        let mut lit = Literal { lexical, datatype: None, language: None };
        if self.rest().starts_with("^^") {
            self.pos += 2;
            if self.peek() != Some('<') {
                return Err("expected datatype IRI after ^^".into());
            }
            lit.datatype = Some(self.iri()?);
        } else if self.peek() == Some('@') {
            self.bump();
            let start = self.pos;
            while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '-') {
                self.bump();
            }
            let tag = &self.s[start..self.pos];
            if tag.is_empty() || !tag.starts_with(|c: char| c.is_ascii_alphabetic()) {
                return Err("malformed language tag".into());
            }
            lit.language = Some(tag.to_ascii_lowercase());
        }
        Ok(lit)
    }

    /// Called just after a backslash, with the cursor on `u` or `U`.
    fn unicode_escape(&mut self) -> Result<char, String> {
        let width = match self.bump() {
            Some('u') => 4,
            Some('U') => 8,
            _ => return Err("invalid escape".into()),
        };
        let rest = self.rest();
        if rest.len() < width || !rest.is_char_boundary(width) {
            return Err("truncated unicode escape".into());
        }
        let hex = &rest[..width];
        let code = u32::from_str_radix(hex, 16).map_err(|_| "bad hex in unicode escape")?;
        self.pos += width;
        char::from_u32(code).ok_or_else(|| "unicode escape is not a scalar value".into())
    }
}

pub fn is_absolute_iri(iri: &str) -> bool {
    match iri.split_once(':') {
        Some((scheme, _)) => {
            let mut chars = scheme.chars();
            matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
                && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
        }
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn typed_literal_line() {
        let p = parse_str(
            "<http://a.org/s> <http://a.org/p> \"93\"^^<http://www.w3.org/2001/XMLSchema#int> .\n",
            RdfFormat::NTriples,
            ParseMode::Strict,
        )
        .unwrap();
        assert_eq!(p.statements.len(), 1);
        let st = &p.statements[0];
        assert_eq!(st.subject, "http://a.org/s");
        assert_eq!(
            st.object,
            Term::Literal(Literal::typed("93", "http://www.w3.org/2001/XMLSchema#int"))
        );
        assert_eq!(st.line, 1);
    }

    #[test]
    fn empty_input() {
        let p = parse_str("", RdfFormat::NTriples, ParseMode::Strict).unwrap();
        assert!(p.statements.is_empty());
        assert!(p.diagnostics.is_empty());
    }

    #[test]
    fn lenient_skips_garbage_strict_aborts() {
        let doc = "<http://a.org/s1> <http://a.org/p> \"x\" .\n\
                   <http://a.org/s2> <http://a.org/p> <http://b.org/o> .\n\
                   this is not rdf\n\
                   <http://a.org/s3> <http://a.org/p> \"y\"@en .\n\
                   <http://a.org/s4> <http://a.org/p> _:b1 .\n";
        let p = parse_str(doc, RdfFormat::NTriples, ParseMode::Lenient).unwrap();
        let lines: Vec<u64> = p.statements.iter().map(|s| s.line).collect();
        assert_eq!(lines, vec![1, 2, 4, 5]);
        assert_eq!(p.diagnostics.len(), 1);
        assert_eq!(p.diagnostics[0].line, 3);
        assert_eq!(p.statements[3].object, Term::BlankNode("b1".into()));

        let err = parse_str(doc, RdfFormat::NTriples, ParseMode::Strict).unwrap_err();
        assert!(matches!(err, ParseError::MalformedLine { line: 3, .. }));
    }

    #[test]
    fn comments_and_blank_lines() {
        let doc = "# header\n\n   \n<http://a.org/s> <http://a.org/p> \"v\" . # trailing\n";
        let p = parse_str(doc, RdfFormat::NTriples, ParseMode::Strict).unwrap();
        assert_eq!(p.statements.len(), 1);
        assert_eq!(p.statements[0].line, 4);
    }

    #[test]
    fn escapes_in_literals_and_iris() {
        let doc = r#"<http://a.org/café> <http://a.org/p> "say \"hi\"\n\\" ."#;
        let p = parse_str(doc, RdfFormat::NTriples, ParseMode::Strict).unwrap();
        let st = &p.statements[0];
        assert_eq!(st.subject, "http://a.org/café");
        assert_eq!(st.object, Term::Literal(Literal::plain("say \"hi\"\n\\")));
    }

    #[test]
    fn nquads_graph_and_ntriples_rejects_it() {
        let doc = "<http://a.org/s> <http://a.org/p> \"v\" <http://g.org/1> .\n";
        let p = parse_str(doc, RdfFormat::NQuads, ParseMode::Strict).unwrap();
        assert_eq!(p.statements[0].graph.as_deref(), Some("http://g.org/1"));
        assert!(parse_str(doc, RdfFormat::NTriples, ParseMode::Strict).is_err());
    }

    #[test]
    fn rejects_relative_and_unterminated() {
        for bad in [
            "<s> <http://a.org/p> \"v\" .",
            "<http://a.org/s> <http://a.org/p> \"v\"",
            "<http://a.org/s> <http://a.org/p> \"v .",
            "_:b <http://a.org/p> \"v\" .",
            "<http://a.org/s> \"p\" \"v\" .",
            "<http://a.org/s> <http://a.org/p> \"v\" . extra",
        ] {
            assert!(
                parse_str(bad, RdfFormat::NTriples, ParseMode::Strict).is_err(),
                "accepted {bad}"
            );
        }
    }

    #[test]
    fn invalid_utf8_is_encoding_error() {
        let bytes: &[u8] = b"<http://a.org/s> <http://a.org/p> \"\xff\" .\n";
        let err = parse_triples(bytes, RdfFormat::NTriples, ParseMode::Strict).unwrap_err();
        assert!(matches!(err, ParseError::Encoding { line: 1 }));
        let p = parse_triples(bytes, RdfFormat::NTriples, ParseMode::Lenient).unwrap();
        assert_eq!(p.diagnostics.len(), 1);
    }

    #[test]
    fn format_from_path() {
        assert_eq!(RdfFormat::from_path(Path::new("a.nq.gz")), RdfFormat::NQuads);
        assert_eq!(RdfFormat::from_path(Path::new("a.nt")), RdfFormat::NTriples);
    }
}
