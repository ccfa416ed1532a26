use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

/// Identifier of a publishing source (a host, a registrable domain, or a
/// named graph, depending on [`SourcePolicy`]).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SourceId(pub String);

impl SourceId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SourceId {
    fn from(s: &str) -> Self {
        SourceId(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourcePolicy {
    #[default]
    Host,
    PayLevelDomain,
    NamedGraph,
}

impl FromStr for SourcePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "host" => Ok(SourcePolicy::Host),
            "pld" | "pay_level_domain" => Ok(SourcePolicy::PayLevelDomain),
            "graph" | "named_graph" => Ok(SourcePolicy::NamedGraph),
            other => Err(format!("unknown source policy {other:?} (expected host, pld or graph)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SourceError {
    #[error("IRI <{0}> has no authority component")]
    NoAuthority(String),
    #[error("named-graph policy needs a graph IRI")]
    MissingGraph,
}

/// Maps an IRI to the source that published it.
///
/// Under [`SourcePolicy::NamedGraph`] the graph IRI is used verbatim when
/// given; the subject is ignored.
pub fn extract_source(
    iri: &str,
    graph: Option<&str>,
    policy: SourcePolicy,
) -> Result<SourceId, SourceError> {
    match policy {
        SourcePolicy::NamedGraph => {
            graph.map(|g| SourceId(g.to_string())).ok_or(SourceError::MissingGraph)
        }
        SourcePolicy::Host => host_of(iri).map(SourceId),
        SourcePolicy::PayLevelDomain => {
            let host = host_of(iri)?;
            Ok(SourceId(pay_level_domain(&host).unwrap_or(host)))
        }
    }
}

fn host_of(iri: &str) -> Result<String, SourceError> {
    let url = Url::parse(iri).map_err(|_| SourceError::NoAuthority(iri.to_string()))?;
    match url.host_str() {
        Some(h) if !h.is_empty() => Ok(h.to_ascii_lowercase()),
        _ => Err(SourceError::NoAuthority(iri.to_string())),
    }
}

/// Registrable domain of a host per the bundled public-suffix list. IP
/// literals and bare suffixes return `None`.
fn pay_level_domain(host: &str) -> Option<String> {
    if host.parse::<std::net::IpAddr>().is_ok() || host.starts_with('[') {
        return None;
    }
    psl::domain_str(host).map(str::to_string)
}
