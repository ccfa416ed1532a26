use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::normalize::{normalize_term, NormalizedValue};
use super::source::{SourceError, SourceId};
use super::term::{RdfStatement, Term};
use crate::graph::{EntityClusterId, EntityClusterMap, SourceResolver};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PredicateId(pub String);

impl fmt::Display for PredicateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Maps source predicate IRIs onto canonical predicate ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PredicateAlignment {
    map: HashMap<String, PredicateId>,
}

#[derive(Debug, Error)]
pub enum AlignmentError {
    #[error("alignment line {line}: expected `predicate-iri<TAB>canonical-id`")]
    Malformed { line: usize },
    #[error("alignment line {line}: {iri} is already mapped to {existing}")]
    Conflict { line: usize, iri: String, existing: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PredicateAlignment {
    pub fn from_pairs<I, A, B>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        PredicateAlignment {
            map: pairs.into_iter().map(|(a, b)| (a.into(), PredicateId(b.into()))).collect(),
        }
    }

    /// Reads the two-column TSV format; `#` starts a comment line.
    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self, AlignmentError> {
        let mut map = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (iri, id) = trimmed.split_once('\t').ok_or(AlignmentError::Malformed { line: i + 1 })?;
            let (iri, id) = (iri.trim(), id.trim());
            if iri.is_empty() || id.is_empty() || id.contains('\t') {
                return Err(AlignmentError::Malformed { line: i + 1 });
            }
            if let Some(PredicateId(existing)) = map.get(iri) {
                if existing != id {
                    return Err(AlignmentError::Conflict {
                        line: i + 1,
                        iri: iri.to_string(),
                        existing: existing.clone(),
                    });
                }
            }
            map.insert(iri.to_string(), PredicateId(id.to_string()));
        }
        Ok(PredicateAlignment { map })
    }

    pub fn get(&self, iri: &str) -> Option<&PredicateId> {
        self.map.get(iri)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Claim {
    pub entity: EntityClusterId,
    pub predicate: PredicateId,
    pub value: NormalizedValue,
    pub source: SourceId,
}

/// One candidate object of a conflict set with its supporting sources,
/// given as indices into [`ClaimStore::sources`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictObject {
    pub value: NormalizedValue,
    pub sources: Vec<usize>,
}

/// The distinct values asserted for one (entity, predicate), when there are
/// at least two. Objects are in canonical value order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictSet {
    pub entity: EntityClusterId,
    pub predicate: PredicateId,
    pub objects: Vec<ConflictObject>,
}

impl ConflictSet {
    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = &NormalizedValue> {
        self.objects.iter().map(|o| &o.value)
    }
}

/// Deduplicated claims, indexed by source and grouped into conflict sets.
/// Immutable after construction.
#[derive(Debug, Clone, Default)]
pub struct ClaimStore {
    claims: Vec<Claim>,
    sources: Vec<SourceId>,
    source_claims: Vec<Vec<usize>>,
    conflict_sets: Vec<ConflictSet>,
    /// For each claim, its (conflict set, object) position if it has one.
    conflict_slot: Vec<Option<(usize, usize)>>,
}

impl ClaimStore {
    /// Builds the store; duplicate claims are kept once.
    pub fn from_claims(claims: impl IntoIterator<Item = Claim>) -> ClaimStore {
        let claims: Vec<Claim> = claims.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let sources: Vec<SourceId> =
            claims.iter().map(|c| c.source.clone()).collect::<BTreeSet<_>>().into_iter().collect();
        let source_index: HashMap<&SourceId, usize> =
            sources.iter().enumerate().map(|(i, s)| (s, i)).collect();

        let mut source_claims = vec![Vec::new(); sources.len()];
        for (ci, c) in claims.iter().enumerate() {
            source_claims[source_index[&c.source]].push(ci);
        }

        // claims are sorted by (entity, predicate, value, source), so each
        // group and each value run is contiguous
        let mut conflict_sets = Vec::new();
        let mut conflict_slot = vec![None; claims.len()];
        let mut start = 0;
        while start < claims.len() {
            let key = (&claims[start].entity, &claims[start].predicate);
            let mut end = start;
            while end < claims.len() && (&claims[end].entity, &claims[end].predicate) == key {
                end += 1;
            }
            let mut objects: Vec<ConflictObject> = Vec::new();
            let mut slots = Vec::with_capacity(end - start);
            for c in &claims[start..end] {
                if objects.last().map(|o| &o.value) != Some(&c.value) {
                    objects.push(ConflictObject { value: c.value.clone(), sources: Vec::new() });
                }
                objects.last_mut().unwrap().sources.push(source_index[&c.source]);
                slots.push(objects.len() - 1);
            }
            if objects.len() >= 2 {
                let set_index = conflict_sets.len();
                for (offset, obj) in slots.into_iter().enumerate() {
                    conflict_slot[start + offset] = Some((set_index, obj));
                }
                conflict_sets.push(ConflictSet {
                    entity: key.0.clone(),
                    predicate: key.1.clone(),
                    objects,
                });
            }
            start = end;
        }

        ClaimStore { claims, sources, source_claims, conflict_sets, conflict_slot }
    }

    pub fn claims(&self) -> &[Claim] {
        &self.claims
    }

    pub fn sources(&self) -> &[SourceId] {
        &self.sources
    }

    pub fn source_index(&self, source: &SourceId) -> Option<usize> {
        self.sources.binary_search(source).ok()
    }

    /// Indices of every claim made by a source.
    pub fn claims_of(&self, source: usize) -> &[usize] {
        &self.source_claims[source]
    }

    /// The (conflict set, object) positions a source supports, in claim order.
    pub fn conflict_claims_of(&self, source: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.source_claims[source].iter().filter_map(move |&ci| self.conflict_slot[ci])
    }

    pub fn conflict_sets(&self) -> &[ConflictSet] {
        &self.conflict_sets
    }

    pub fn conflict_slot(&self, claim: usize) -> Option<(usize, usize)> {
        self.conflict_slot[claim]
    }

    pub fn find_conflict(&self, entity: &EntityClusterId, predicate: &PredicateId) -> Option<&ConflictSet> {
        self.conflict_sets
            .binary_search_by(|s| (&s.entity, &s.predicate).cmp(&(entity, predicate)))
            .ok()
            .map(|i| &self.conflict_sets[i])
    }

    pub fn is_empty(&self) -> bool {
        self.claims.is_empty()
    }
}

/// Why a statement did not become a new claim. Each dropped statement has
/// exactly one reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DropReason {
    SameAs,
    Unaligned,
    NoValue,
    NoSource(SourceError),
    Duplicate,
}

impl DropReason {
    pub fn category(&self) -> &'static str {
        match self {
            DropReason::SameAs => "same-as",
            DropReason::Unaligned => "unaligned-predicate",
            DropReason::NoValue => "no-value",
            DropReason::NoSource(_) => "no-source",
            DropReason::Duplicate => "duplicate",
        }
    }
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DropReason::NoSource(e) => write!(f, "dropped claim: {e}"),
            DropReason::SameAs => f.write_str("owl:sameAs statement"),
            DropReason::Unaligned => f.write_str("predicate not in alignment table"),
            DropReason::NoValue => f.write_str("blank or NULL object"),
            DropReason::Duplicate => f.write_str("duplicate claim"),
        }
    }
}

#[derive(Debug, Default)]
pub struct BuildReport {
    /// (index into the input statements, reason).
    pub dropped: Vec<(usize, DropReason)>,
}

impl BuildReport {
    pub fn counts(&self) -> BTreeMap<&'static str, usize> {
        let mut out = BTreeMap::new();
        for (_, r) in &self.dropped {
            *out.entry(r.category()).or_default() += 1;
        }
        out
    }
}

/// Turns statements into claims.
///
/// Subjects and IRI objects are mapped to their entity clusters. With no
/// alignment table every predicate maps to itself; with one, predicates
/// missing from it are dropped.
pub fn build_claims(
    statements: &[RdfStatement],
    clusters: &EntityClusterMap,
    alignment: Option<&PredicateAlignment>,
    resolver: &SourceResolver,
) -> (ClaimStore, BuildReport) {
    let mut report = BuildReport::default();
    let mut seen: HashMap<Claim, usize> = HashMap::new();
    for (i, st) in statements.iter().enumerate() {
        if st.is_same_as() {
            report.dropped.push((i, DropReason::SameAs));
            continue;
        }
        let predicate = match alignment {
            None => PredicateId(st.predicate.clone()),
            Some(a) => match a.get(&st.predicate) {
                Some(p) => p.clone(),
                None => {
                    report.dropped.push((i, DropReason::Unaligned));
                    continue;
                }
            },
        };
        let value = match &st.object {
            Term::Iri(iri) => Some(NormalizedValue::Reference(clusters.resolve(iri).0)),
            other => normalize_term(other),
        };
        let Some(value) = value else {
            report.dropped.push((i, DropReason::NoValue));
            continue;
        };
        let source = match resolver.source_of(&st.subject, st.graph.as_deref()) {
            Ok(s) => s,
            Err(e) => {
                report.dropped.push((i, DropReason::NoSource(e)));
                continue;
            }
        };
        let claim = Claim { entity: clusters.resolve(&st.subject), predicate, value, source };
        match seen.entry(claim) {
            Entry::Occupied(_) => report.dropped.push((i, DropReason::Duplicate)),
            Entry::Vacant(slot) => {
                slot.insert(i);
            }
        }
    }
    (ClaimStore::from_claims(seen.into_keys()), report)
}
