//! File formats: instance files (TOML), transcripts (tab-separated lines) and
//! outcome reports (JSON).
//!
//! Instance files are written by a canonical emitter so that the SHA-256 of
//! the emitted text identifies an instance. Every float is printed with 17
//! significant digits, which round-trips IEEE doubles exactly.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::auction::{AuctionError, Instance, Metadata, OfferEvent, Outcome, PhaseSnapshot, Transcript};
use crate::valuation::{Cap, Edge, ValuationKind};

pub const INSTANCE_SCHEMA: &str = "clock-auction-instance/1";
pub const TRANSCRIPT_VERSION: &str = "clock-auction-transcript/1";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed instance file: {0}")]
    Syntax(String),
    #[error("unsupported schema `{0}`")]
    Schema(String),
    #[error("bidder at position {position} has id {id}; ids must be 0..n in order")]
    BidderOrder { position: usize, id: usize },
    #[error(transparent)]
    Instance(#[from] AuctionError),
    #[error("transcript line {line}: {message}")]
    Transcript { line: usize, message: String },
}

/// Float with 17 significant digits, valid in TOML and in the transcript format.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_floats(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|&x| fmt_f64(x)).collect();
    format!("[{}]", items.join(", "))
}

fn fmt_ints(xs: &[usize]) -> String {
    let items: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
    format!("[{}]", items.join(", "))
}

fn fmt_str(s: &str) -> String {
    // TOML basic strings accept JSON escapes
    serde_json::to_string(s).expect("strings serialize")
}

/// Canonical text of an instance.
pub fn emit_instance(instance: &Instance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "schema = {}", fmt_str(INSTANCE_SCHEMA));
    let _ = writeln!(out, "budget = {}", fmt_f64(instance.budget()));
    if instance.is_empty() {
        out.push_str("bidders = []\n");
    } else {
        out.push_str("bidders = [\n");
        for (id, &cost) in instance.costs().iter().enumerate() {
            let _ = writeln!(out, "  {{ id = {id}, cost = {} }},", fmt_f64(cost));
        }
        out.push_str("]\n");
    }

    let meta = &instance.metadata;
    let has_scalar_meta = meta.generator.is_some()
        || meta.label.is_some()
        || meta.seed.is_some()
        || meta.reference_opt.is_some();
    if has_scalar_meta || !meta.params.is_empty() {
        out.push_str("\n[metadata]\n");
        if let Some(g) = &meta.generator {
            let _ = writeln!(out, "generator = {}", fmt_str(g));
        }
        if let Some(l) = &meta.label {
            let _ = writeln!(out, "label = {}", fmt_str(l));
        }
        if let Some(s) = meta.seed {
            let _ = writeln!(out, "seed = {s}");
        }
        if let Some(r) = meta.reference_opt {
            let _ = writeln!(out, "reference_opt = {}", fmt_f64(r));
        }
        if !meta.params.is_empty() {
            out.push_str("\n[metadata.params]\n");
            for (k, v) in &meta.params {
                let _ = writeln!(out, "{} = {}", fmt_str(k), fmt_f64(*v));
            }
        }
    }

    out.push_str("\n[valuation]\n");
    let kind = instance.oracle().kind();
    let _ = writeln!(out, "kind = {}", fmt_str(kind.name()));
    match kind {
        ValuationKind::Additive { values } => {
            let _ = writeln!(out, "values = {}", fmt_floats(values));
        }
        ValuationKind::Coverage {
            element_weights,
            covers,
        } => {
            let _ = writeln!(out, "element_weights = {}", fmt_floats(element_weights));
            emit_nested(&mut out, "covers", covers.iter().map(|c| fmt_ints(c)));
        }
        ValuationKind::CappedComposite { values, caps } => {
            let _ = writeln!(out, "values = {}", fmt_floats(values));
            emit_nested(
                &mut out,
                "caps",
                caps.iter().map(|Cap { members, ceiling }| {
                    format!(
                        "{{ members = {}, ceiling = {} }}",
                        fmt_ints(members),
                        fmt_f64(*ceiling)
                    )
                }),
            );
        }
        ValuationKind::Cut { bidders, edges } => {
            let _ = writeln!(out, "bidders = {bidders}");
            emit_nested(
                &mut out,
                "edges",
                edges.iter().map(|Edge { u, v, weight }| {
                    format!("{{ u = {u}, v = {v}, weight = {} }}", fmt_f64(*weight))
                }),
            );
        }
        ValuationKind::Symmetric { marginals } => {
            let _ = writeln!(out, "marginals = {}", fmt_floats(marginals));
        }
        ValuationKind::Xos { clauses } => {
            emit_nested(&mut out, "clauses", clauses.iter().map(|c| fmt_floats(c)));
        }
    }
    out
}

fn emit_nested(out: &mut String, key: &str, items: impl Iterator<Item = String>) {
    let items: Vec<String> = items.collect();
    if items.is_empty() {
        let _ = writeln!(out, "{key} = []");
        return;
    }
    let _ = writeln!(out, "{key} = [");
    for item in items {
        let _ = writeln!(out, "  {item},");
    }
    out.push_str("]\n");
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BidderEntry {
    id: usize,
    cost: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    schema: String,
    budget: f64,
    bidders: Vec<BidderEntry>,
    #[serde(default)]
    metadata: Metadata,
    valuation: ValuationKind,
}

pub fn parse_instance(text: &str) -> Result<Instance, FormatError> {
    let file: InstanceFile = toml::from_str(text).map_err(|e| FormatError::Syntax(e.to_string()))?;
    if file.schema != INSTANCE_SCHEMA {
        return Err(FormatError::Schema(file.schema));
    }
    let mut costs = Vec::with_capacity(file.bidders.len());
    for (position, b) in file.bidders.iter().enumerate() {
        if b.id != position {
            return Err(FormatError::BidderOrder { position, id: b.id });
        }
        costs.push(b.cost);
    }
    Ok(Instance::new(file.budget, costs, file.valuation)?.with_metadata(file.metadata))
}

/// Hex SHA-256 of the canonical instance text.
pub fn instance_hash(instance: &Instance) -> String {
    hex::encode(Sha256::digest(emit_instance(instance).as_bytes()))
}

fn fmt_set(ids: &[usize]) -> String {
    let items: Vec<String> = ids.iter().map(|i| i.to_string()).collect();
    items.join(",")
}

/// Line-oriented transcript: header comments, one tab-separated event per line,
/// then one `#record` line per phase snapshot.
pub fn emit_transcript(transcript: &Transcript) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# version\t{TRANSCRIPT_VERSION}");
    let _ = writeln!(out, "# instance\t{}", transcript.instance_hash);
    let _ = writeln!(out, "# mechanism\t{}", transcript.mechanism);
    out.push_str("# phase\tbidder\tprice\tresponse\ttag\n");
    for ev in &transcript.events {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            ev.phase,
            ev.bidder,
            fmt_f64(ev.price),
            ev.response.as_str(),
            ev.tag.as_str()
        );
    }
    for rec in &transcript.phases {
        let _ = write!(out, "#record\tphase={}", rec.phase);
        if let Some(t) = rec.target {
            let _ = write!(out, "\ttarget={}", fmt_f64(t));
        }
        if let Some(p) = rec.price {
            let _ = write!(out, "\tprice={}", fmt_f64(p));
        }
        for (name, ids) in &rec.sets {
            let _ = write!(out, "\t{name}={}", fmt_set(ids));
        }
        out.push('\n');
    }
    out
}

pub fn parse_transcript(text: &str) -> Result<Transcript, FormatError> {
    let mut transcript = Transcript::new(String::new(), String::new());
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let err = |message: String| FormatError::Transcript { line: lineno, message };
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("#record\t") {
            transcript.phases.push(parse_record(rest).map_err(err)?);
            continue;
        }
        if let Some(rest) = line.strip_prefix("# ") {
            match rest.split_once('\t') {
                Some(("version", v)) if v != TRANSCRIPT_VERSION => {
                    return Err(err(format!("unsupported version `{v}`")));
                }
                Some(("instance", h)) => transcript.instance_hash = h.to_string(),
                Some(("mechanism", m)) => transcript.mechanism = m.to_string(),
                _ => {}
            }
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(err(format!("expected 5 fields, found {}", fields.len())));
        }
        let event = OfferEvent {
            phase: fields[0].parse().map_err(|e| err(format!("phase: {e}")))?,
            bidder: fields[1].parse().map_err(|e| err(format!("bidder: {e}")))?,
            price: fields[2].parse().map_err(|e| err(format!("price: {e}")))?,
            response: fields[3].parse().map_err(err)?,
            tag: fields[4].parse().map_err(err)?,
        };
        transcript.events.push(event);
    }
    Ok(transcript)
}

fn parse_record(rest: &str) -> Result<PhaseSnapshot, String> {
    let mut snap = PhaseSnapshot {
        phase: 0,
        target: None,
        price: None,
        sets: Vec::new(),
    };
    for field in rest.split('\t') {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| format!("record field `{field}` lacks `=`"))?;
        match key {
            "phase" => snap.phase = value.parse().map_err(|e| format!("phase: {e}"))?,
            "target" => snap.target = Some(value.parse().map_err(|e| format!("target: {e}"))?),
            "price" => snap.price = Some(value.parse().map_err(|e| format!("price: {e}"))?),
            name => {
                let ids = if value.is_empty() {
                    Vec::new()
                } else {
                    value
                        .split(',')
                        .map(|s| s.parse().map_err(|e| format!("{name}: {e}")))
                        .collect::<Result<Vec<usize>, String>>()?
                };
                snap.sets.push((name.to_string(), ids));
            }
        }
    }
    Ok(snap)
}

/// Outcome report written next to a transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeFile {
    pub instance: String,
    pub mechanism: String,
    pub phases: usize,
    pub value_queries: u64,
    #[serde(flatten)]
    pub outcome: Outcome,
}

pub fn emit_outcome(file: &OutcomeFile) -> String {
    let mut s = serde_json::to_string_pretty(file).expect("outcome serializes");
    s.push('\n');
    s
}

pub fn parse_outcome(text: &str) -> Result<OutcomeFile, FormatError> {
    serde_json::from_str(text).map_err(|e| FormatError::Syntax(e.to_string()))
}
