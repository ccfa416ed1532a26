//! RDF ingestion: parsing, value normalization, source attribution and
//! claim extraction.

mod claims;
mod normalize;
mod parser;
mod source;
mod term;

pub use claims::{
    build_claims, AlignmentError, BuildReport, Claim, ClaimStore, ConflictObject, ConflictSet,
    DropReason, PredicateAlignment, PredicateId,
};
pub use normalize::{normalize_object, normalize_term, DateValue, NormalizedValue, Number, ValueKind};
pub use parser::{
    is_absolute_iri, open_input, parse_str, parse_triples, LineDiagnostic, ParseError, ParseMode,
    Parsed, RdfFormat, StatementReader,
};
pub use source::{extract_source, SourceError, SourceId, SourcePolicy};
pub use term::{Literal, RdfStatement, Term, OWL_SAME_AS, XSD};
