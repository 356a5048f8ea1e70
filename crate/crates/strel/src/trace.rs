//! Trace files: newline-delimited JSON with one header line followed by
//! one snapshot record per time step.
//!
//! ```text
//! {"universe":["a","b"],"period_ms":10,"undirected":true}
//! {"t":0,"nodes":[{"id":"a","kind":"drone","attrs":{"battery":5.0}},...],"edges":[{"src":"a","w":1.0,"dst":"b"}]}
//! {"t":1,...}
//! ```
//!
//! Records keep their original text when loaded, so saving a loaded
//! trace reproduces it byte for byte. Snapshots are validated against
//! the header universe as they are read; the streaming [`TraceReader`]
//! yields them one at a time for online monitoring.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::DeMorgan;
use crate::logic::PredicateExpr;
use crate::spatial::{LocationId, ModelError, RawEdge, RawNode, SpatialModel, Universe};

/// First line of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub universe: Vec<String>,
    pub period_ms: u64,
    pub undirected: bool,
    /// Attribute names the records are expected to carry; informational.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attributes: Option<Vec<String>>,
}

/// One per-step record, as serialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u64,
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: String,
    pub kind: String,
    #[serde(default)]
    pub attrs: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub src: String,
    pub w: f64,
    pub dst: String,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace i/o: {0}")]
    Io(#[from] io::Error),
    #[error("trace is empty: expected a header line")]
    MissingHeader,
    #[error("line {line}: malformed record: {source}")]
    Malformed {
        line: usize,
        source: serde_json::Error,
    },
    #[error("line {line}: {source}")]
    InvalidModel {
        line: usize,
        source: ModelError,
    },
    #[error("line {line}: step index {found} out of order (expected {expected})")]
    StepIndex {
        line: usize,
        found: u64,
        expected: u64,
    },
}

/// Labeling failure: a comparison predicate against an attribute the
/// node does not carry.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("location '{location}' has no attribute '{attr}' at step {step}")]
pub struct LabelError {
    pub location: String,
    pub attr: String,
    pub step: u64,
}

/// Value of an atomic predicate at one location of one snapshot.
///
/// Kind tests yield the algebra's top or bottom. Comparisons yield the
/// truth of the comparison in the Boolean algebra and the signed margin
/// in the min-max algebra, where the margin is positive exactly when the
/// comparison holds with slack and zero at the threshold.
pub fn label<A: DeMorgan>(
    model: &SpatialModel,
    step: u64,
    l: LocationId,
    pred: &PredicateExpr,
) -> Result<A::Value, LabelError> {
    let data = model.node(l);
    match pred {
        PredicateExpr::Kind(kind) => Ok(A::of_bool(data.kind == *kind)),
        PredicateExpr::Cmp { attr, op, threshold } => {
            let value = data.attrs.get(attr).ok_or_else(|| LabelError {
                location: model.universe().name(l).to_string(),
                attr: attr.clone(),
                step,
            })?;
            Ok(A::of_margin(op.margin(*value, *threshold), op.is_strict()))
        }
    }
}

/// Builds a validated snapshot from one record.
pub fn record_to_model(
    universe: &Arc<Universe>,
    record: &StepRecord,
    undirected: bool,
) -> Result<SpatialModel, ModelError> {
    let nodes = record
        .nodes
        .iter()
        .map(|n| RawNode { id: n.id.clone(), kind: n.kind.clone(), attrs: n.attrs.clone() })
        .collect();
    let edges = record
        .edges
        .iter()
        .map(|e| RawEdge { src: e.src.clone(), weight: e.w, dst: e.dst.clone() })
        .collect();
    SpatialModel::validate(universe.clone(), nodes, edges, undirected)
}

/// A fully loaded trace: the header, the validated snapshot sequence,
/// and the original record lines for lossless saving.
#[derive(Debug, Clone)]
pub struct Trace {
    header: TraceHeader,
    universe: Arc<Universe>,
    lines: Vec<String>,
    models: Vec<Arc<SpatialModel>>,
}

impl Trace {
    pub fn load(path: impl AsRef<Path>) -> Result<Trace, TraceError> {
        Trace::read_from(BufReader::new(File::open(path)?))
    }

    pub fn parse_str(text: &str) -> Result<Trace, TraceError> {
        Trace::read_from(text.as_bytes())
    }

    pub fn read_from(reader: impl BufRead) -> Result<Trace, TraceError> {
        let mut r = TraceReader::new(reader)?;
        let mut lines = Vec::new();
        let mut models = Vec::new();
        while let Some((line, model)) = r.next_step()? {
            lines.push(line);
            models.push(Arc::new(model));
        }
        Ok(Trace { header: r.header().clone(), universe: r.universe().clone(), lines, models })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TraceError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        Ok(w.flush()?)
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<(), TraceError> {
        let header = serde_json::to_string(&self.header)
            .expect("trace headers always serialize");
        writeln!(w, "{header}")?;
        for line in &self.lines {
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a buffer cannot fail");
        String::from_utf8(out).expect("trace lines are utf-8")
    }

    pub fn header(&self) -> &TraceHeader {
        &self.header
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn period_ms(&self) -> u64 {
        self.header.period_ms
    }

    /// Number of time steps.
    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn model(&self, t: usize) -> &Arc<SpatialModel> {
        &self.models[t]
    }

    pub fn models(&self) -> &[Arc<SpatialModel>] {
        &self.models
    }
}

/// Incremental trace reader: parses the header eagerly, then yields one
/// validated snapshot per call, so monitors can run while the trace is
/// still being produced.
pub struct TraceReader<R> {
    reader: R,
    header: TraceHeader,
    universe: Arc<Universe>,
    line_no: usize,
    next_t: u64,
}

impl<R: BufRead> TraceReader<R> {
    pub fn new(mut reader: R) -> Result<Self, TraceError> {
        let mut first = String::new();
        let mut line_no = 0;
        loop {
            first.clear();
            if reader.read_line(&mut first)? == 0 {
                return Err(TraceError::MissingHeader);
            }
            line_no += 1;
            if !first.trim().is_empty() {
                break;
            }
        }
        let header: TraceHeader = serde_json::from_str(first.trim_end())
            .map_err(|source| TraceError::Malformed { line: line_no, source })?;
        let universe = Universe::new(header.universe.clone())
            .map_err(|source| TraceError::InvalidModel { line: line_no, source })?;
        Ok(TraceReader { reader, header, universe, line_no, next_t: 0 })
    }

    pub fn header(&self) -> &TraceHeader {
        &self.header
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    /// Steps consumed so far.
    pub fn steps_read(&self) -> u64 {
        self.next_t
    }

    /// Reads the next record, returning its raw line and validated
    /// snapshot, or `None` at end of input. Blank lines are skipped.
    pub fn next_step(&mut self) -> Result<Option<(String, SpatialModel)>, TraceError> {
        let mut line = String::new();
        loop {
            line.clear();
            if self.reader.read_line(&mut line)? == 0 {
                return Ok(None);
            }
            self.line_no += 1;
            if !line.trim().is_empty() {
                break;
            }
        }
        let text = line.trim_end_matches(['\n', '\r']).to_string();
        let record: StepRecord = serde_json::from_str(&text)
            .map_err(|source| TraceError::Malformed { line: self.line_no, source })?;
        if record.t != self.next_t {
            return Err(TraceError::StepIndex {
                line: self.line_no,
                found: record.t,
                expected: self.next_t,
            });
        }
        let model = record_to_model(&self.universe, &record, self.header.undirected)
            .map_err(|source| TraceError::InvalidModel { line: self.line_no, source })?;
        self.next_t += 1;
        Ok(Some((text, model)))
    }
}

impl<R: BufRead> Iterator for TraceReader<R> {
    type Item = Result<SpatialModel, TraceError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_step().map(|opt| opt.map(|(_, m)| m)).transpose()
    }
}
