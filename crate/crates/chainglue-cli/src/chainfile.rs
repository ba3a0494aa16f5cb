//! The chain file format: a JSON object with a format version, ordered state
//! labels, and rates given either as a dense square array (diagonal included)
//! or as a sparse list of `{from, to, rate}` triples (diagonal derived).
//! Emission is canonical: sparse triples in ascending state order.

use chainglue::chain::{ChainModel, RateMatrix};
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

/// A malformed file: bad JSON, wrong shape, unknown labels, duplicate or
/// self-loop triples. Distinct from generator-invariant violations, which
/// parse fine and are reported by validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError(pub String);

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChainFile {
    pub version: u32,
    pub states: Vec<String>,
    pub rates: Rates,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Rates {
    Dense(Vec<Vec<f64>>),
    Triples(Vec<Triple>),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Triple {
    pub from: String,
    pub to: String,
    pub rate: f64,
}

pub fn parse_str(text: &str) -> Result<ChainFile, ParseError> {
    let file: ChainFile =
        serde_json::from_str(text).map_err(|e| ParseError(format!("invalid chain file: {e}")))?;
    structural_check(&file)?;
    Ok(file)
}

pub fn read_path(path: &std::path::Path) -> Result<ChainFile, ParseError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ParseError(format!("cannot read {}: {e}", path.display())))?;
    parse_str(&text)
}

fn structural_check(file: &ChainFile) -> Result<(), ParseError> {
    if file.version != FORMAT_VERSION {
        return Err(ParseError(format!(
            "unsupported format version {} (expected {FORMAT_VERSION})",
            file.version
        )));
    }
    if file.states.is_empty() {
        return Err(ParseError("chain file declares no states".into()));
    }
    for (i, s) in file.states.iter().enumerate() {
        if file.states[..i].contains(s) {
            return Err(ParseError(format!("duplicate state label {s:?}")));
        }
    }
    let n = file.states.len();
    match &file.rates {
        Rates::Dense(rows) => {
            if rows.len() != n {
                return Err(ParseError(format!(
                    "dense rates have {} rows for {n} states",
                    rows.len()
                )));
            }
            for (i, row) in rows.iter().enumerate() {
                if row.len() != n {
                    return Err(ParseError(format!(
                        "dense rates row {i} has {} entries for {n} states",
                        row.len()
                    )));
                }
            }
        }
        Rates::Triples(triples) => {
            let mut seen = std::collections::HashSet::new();
            for t in triples {
                let from = index_of(file, &t.from)?;
                let to = index_of(file, &t.to)?;
                if from == to {
                    return Err(ParseError(format!(
                        "self-loop triple on state {:?}",
                        t.from
                    )));
                }
                if !seen.insert((from, to)) {
                    return Err(ParseError(format!(
                        "duplicate triple {:?} -> {:?}",
                        t.from, t.to
                    )));
                }
            }
        }
    }
    Ok(())
}

fn index_of(file: &ChainFile, label: &str) -> Result<usize, ParseError> {
    file.states
        .iter()
        .position(|s| s == label)
        .ok_or_else(|| ParseError(format!("unknown state label {label:?}")))
}

/// Builds the chain model. Generator invariants are not checked here; use
/// validation to diagnose them.
pub fn to_model(file: &ChainFile) -> Result<ChainModel, ParseError> {
    let n = file.states.len();
    let rows = match &file.rates {
        Rates::Dense(rows) => rows.clone(),
        Rates::Triples(triples) => {
            let mut rows = vec![vec![0.0; n]; n];
            for t in triples {
                let from = index_of(file, &t.from)?;
                let to = index_of(file, &t.to)?;
                rows[from][to] = t.rate;
            }
            for i in 0..n {
                rows[i][i] = -(0..n).filter(|&j| j != i).map(|j| rows[i][j]).sum::<f64>();
            }
            rows
        }
    };
    let rates = RateMatrix::from_rows(&rows).map_err(|e| ParseError(e.to_string()))?;
    ChainModel::new(rates, file.states.clone()).map_err(|e| ParseError(e.to_string()))
}

/// Canonical file for a model: sparse triples of the nonzero off-diagonal
/// rates, ascending by (from, to) index.
pub fn from_model(model: &ChainModel) -> ChainFile {
    let n = model.n();
    let mut triples = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && model.rates().entry(i, j) != 0.0 {
                triples.push(Triple {
                    from: model.label(i).to_string(),
                    to: model.label(j).to_string(),
                    rate: model.rates().entry(i, j),
                });
            }
        }
    }
    ChainFile {
        version: FORMAT_VERSION,
        states: model.labels().to_vec(),
        rates: Rates::Triples(triples),
    }
}

/// One-line canonical JSON.
pub fn emit(file: &ChainFile) -> String {
    serde_json::to_string(file).expect("chain file serialization cannot fail")
}
