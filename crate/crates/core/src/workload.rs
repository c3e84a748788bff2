//! Seeded request generators, the bundled fixture sequences and the
//! sequence file format (`R|W <node> <object>` per line, `#` comments).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{NodeId, ObjectId, Request, RequestKind, SystemConfig};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkloadMode {
    /// Length drawn uniformly from `[1, n]`.
    RandomSize,
    /// Exactly `n` requests.
    FixedSize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub mode: WorkloadMode,
    pub n: usize,
    pub read_probability: f64,
    pub seed: u64,
    pub requesters: Vec<NodeId>,
    pub objects: Vec<ObjectId>,
}

impl WorkloadSpec {
    /// Requesters are the regular processors of `cfg`, objects all of its objects.
    pub fn new(cfg: &SystemConfig, mode: WorkloadMode, n: usize, read_probability: f64, seed: u64) -> Self {
        Self {
            mode,
            n,
            read_probability,
            seed,
            requesters: cfg.regulars().collect(),
            objects: cfg.objects().collect(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum WorkloadError {
    #[error("no requesters to draw from")]
    EmptyNodePool,
    #[error("no objects to draw from")]
    EmptyObjectPool,
    #[error("read probability {0} is outside [0, 1]")]
    BadProbability(f64),
    #[error("request count must be at least 1")]
    ZeroLength,
    #[error("workload mode is {0:?}")]
    WrongMode(WorkloadMode),
}

fn check(spec: &WorkloadSpec) -> Result<(), WorkloadError> {
    if !(0.0..=1.0).contains(&spec.read_probability) {
        return Err(WorkloadError::BadProbability(spec.read_probability));
    }
    if spec.n == 0 {
        return Err(WorkloadError::ZeroLength);
    }
    if spec.requesters.is_empty() {
        return Err(WorkloadError::EmptyNodePool);
    }
    if spec.objects.is_empty() {
        return Err(WorkloadError::EmptyObjectPool);
    }
    Ok(())
}

fn draw(spec: &WorkloadSpec, rng: &mut ChaCha8Rng, len: usize) -> Vec<Request> {
    (0..len)
        .map(|_| {
            let read = rng.random_bool(spec.read_probability);
            let requester = spec.requesters[rng.random_range(0..spec.requesters.len())];
            let object = spec.objects[rng.random_range(0..spec.objects.len())];
            if read {
                Request::read(requester, object)
            } else {
                Request::write(requester, object)
            }
        })
        .collect()
}

pub fn gen_random(spec: &WorkloadSpec) -> Result<Vec<Request>, WorkloadError> {
    if spec.mode != WorkloadMode::RandomSize {
        return Err(WorkloadError::WrongMode(spec.mode));
    }
    check(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let len = rng.random_range(1..=spec.n);
    Ok(draw(spec, &mut rng, len))
}

pub fn gen_fixed(spec: &WorkloadSpec) -> Result<Vec<Request>, WorkloadError> {
    if spec.mode != WorkloadMode::FixedSize {
        return Err(WorkloadError::WrongMode(spec.mode));
    }
    check(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    Ok(draw(spec, &mut rng, spec.n))
}

pub fn generate(spec: &WorkloadSpec) -> Result<Vec<Request>, WorkloadError> {
    match spec.mode {
        WorkloadMode::RandomSize => gen_random(spec),
        WorkloadMode::FixedSize => gen_fixed(spec),
    }
}

/// One bundled sequence with the totals reported for it elsewhere.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixtureSequence {
    pub name: String,
    pub requests: Vec<Request>,
    pub reference_orad: u64,
    pub reference_adrw: u64,
}

const FIXTURES: &str = include_str!("../fixtures/sequences.txt");

/// The six bundled sequences A–F, resolved against `cfg` (which must know
/// p1..p7 and o1..o5).
pub fn fixture_sequences(cfg: &SystemConfig) -> Result<Vec<FixtureSequence>, SequenceError> {
    let mut out: Vec<FixtureSequence> = Vec::new();
    for (i, raw) in FIXTURES.lines().enumerate() {
        let line = raw.trim();
        if let Some(header) = line.strip_prefix('=') {
            let parts: Vec<&str> = header.split_whitespace().collect();
            let [name, orad, adrw] = parts[..] else {
                return Err(SequenceError::Parse { line: i + 1, message: format!("bad header `{line}`") });
            };
            let num = |s: &str| {
                s.parse::<u64>()
                    .map_err(|e| SequenceError::Parse { line: i + 1, message: e.to_string() })
            };
            out.push(FixtureSequence {
                name: name.to_owned(),
                requests: Vec::new(),
                reference_orad: num(orad)?,
                reference_adrw: num(adrw)?,
            });
        } else if let Some(req) = parse_line(cfg, line, i + 1)? {
            let Some(seq) = out.last_mut() else {
                return Err(SequenceError::Parse { line: i + 1, message: "request before first header".into() });
            };
            seq.requests.push(req);
        }
    }
    Ok(out)
}

pub fn fixture_sequence(cfg: &SystemConfig, name: &str) -> Result<Option<FixtureSequence>, SequenceError> {
    Ok(fixture_sequences(cfg)?
        .into_iter()
        .find(|f| f.name.eq_ignore_ascii_case(name)))
}

#[derive(Debug, Error)]
pub enum SequenceError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown node `{name}`")]
    UnknownNode { line: usize, name: String },
    #[error("line {line}: unknown object `{name}`")]
    UnknownObject { line: usize, name: String },
    #[error("line {line}: {reason}")]
    Invalid { line: usize, reason: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl SequenceError {
    pub fn line(&self) -> Option<usize> {
        match self {
            SequenceError::Parse { line, .. }
            | SequenceError::UnknownNode { line, .. }
            | SequenceError::UnknownObject { line, .. }
            | SequenceError::Invalid { line, .. } => Some(*line),
            SequenceError::Io(_) => None,
        }
    }
}

fn parse_line(cfg: &SystemConfig, line: &str, lineno: usize) -> Result<Option<Request>, SequenceError> {
    let line = line.trim();
    if line.is_empty() || line.starts_with('#') {
        return Ok(None);
    }
    let toks: Vec<&str> = line.split_whitespace().collect();
    let [kind, node, object] = toks[..] else {
        return Err(SequenceError::Parse {
            line: lineno,
            message: format!("expected `R|W <node> <object>`, got `{line}`"),
        });
    };
    let kind = match kind {
        "R" => RequestKind::Read,
        "W" => RequestKind::Write,
        other => {
            return Err(SequenceError::Parse { line: lineno, message: format!("bad request kind `{other}`") });
        }
    };
    let requester = cfg
        .node_by_name(node)
        .ok_or_else(|| SequenceError::UnknownNode { line: lineno, name: node.to_owned() })?;
    let object = cfg
        .object_by_name(object)
        .ok_or_else(|| SequenceError::UnknownObject { line: lineno, name: object.to_owned() })?;
    let req = Request { kind, requester, object };
    cfg.validate_request(&req)
        .map_err(|reason| SequenceError::Invalid { line: lineno, reason })?;
    Ok(Some(req))
}

pub fn parse_sequence(cfg: &SystemConfig, text: &str) -> Result<Vec<Request>, SequenceError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(r) = parse_line(cfg, line, i + 1)? {
            out.push(r);
        }
    }
    Ok(out)
}

pub fn format_sequence(cfg: &SystemConfig, seq: &[Request]) -> String {
    let mut s = String::with_capacity(seq.len() * 8);
    for r in seq {
        let _ = writeln!(s, "{}", cfg.display_request(r));
    }
    s
}

pub fn load_sequence(cfg: &SystemConfig, path: impl AsRef<Path>) -> Result<Vec<Request>, SequenceError> {
    parse_sequence(cfg, &fs::read_to_string(path)?)
}

pub fn save_sequence(cfg: &SystemConfig, seq: &[Request], path: impl AsRef<Path>) -> Result<(), SequenceError> {
    fs::write(path, format_sequence(cfg, seq))?;
    Ok(())
}
