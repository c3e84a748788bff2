//! Sequential request execution with ledger accumulation and consistency
//! checking at every request boundary.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{ChargeItem, CostLedger, CostTariff};
use crate::model::{AdrwRule, NodeId, ObjectId, Request, RequestKind, SystemConfig};
use crate::policy::PolicyKind;
use crate::state::{Action, Locus, ObjectState, ProtocolFault, TransitionKind, WriteShape};
use crate::window::{WindowEvent, WindowLocation};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub policy: PolicyKind,
    pub seed: u64,
    pub window_capacity: usize,
    pub tariff: CostTariff,
    pub adrw_rule: AdrwRule,
}

/// Everything that happened while servicing one request.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestRecord {
    pub index: usize,
    pub request: Request,
    pub locus: Locus,
    pub charge: Vec<ChargeItem>,
    pub actions: Vec<Action>,
    pub emitted_events: Vec<(NodeId, WindowEvent)>,
    pub transitions: Vec<TransitionRecord>,
    pub write_shape: Option<WriteShape>,
    /// Ledger total after this request.
    pub running_total: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub request: usize,
    pub object: ObjectId,
    pub kind: TransitionKind,
    pub node: NodeId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunResult {
    pub metadata: RunMetadata,
    pub total_cost: u64,
    pub ledger: CostLedger,
    pub final_states: Vec<ObjectState>,
    pub transitions: Vec<TransitionRecord>,
    pub records: Vec<RequestRecord>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// A node holds an out-of-date copy, a replica is missing its copy, or a
    /// read observed something other than the latest write.
    StaleCopy,
    /// Flag bit and temporary copy disagree.
    OrphanFlag,
    /// A window has zero or two holders, or sits on the wrong side.
    WindowDuplicate,
    /// A version went backwards.
    VersionRegression,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::StaleCopy => "stale_copy",
            ViolationKind::OrphanFlag => "orphan_flag",
            ViolationKind::WindowDuplicate => "window_duplicate",
            ViolationKind::VersionRegression => "version_regression",
        })
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub object: ObjectId,
    pub node: Option<NodeId>,
    pub request: Option<usize>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} on object {:?}", self.kind, self.object)?;
        if let Some(n) = self.node {
            write!(f, " at {n:?}")?;
        }
        if let Some(r) = self.request {
            write!(f, " after request {r}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("request {index}: {reason}")]
    InvalidRequest { index: usize, reason: String },
    #[error("request {index}: protocol fault: {fault}")]
    Fault { index: usize, fault: ProtocolFault },
    #[error("request {index}: {} consistency violation(s), first: {}", violations.len(), violations[0])]
    Inconsistent { index: usize, violations: Vec<Violation> },
}

impl RunError {
    pub fn index(&self) -> usize {
        match self {
            RunError::InvalidRequest { index, .. }
            | RunError::Fault { index, .. }
            | RunError::Inconsistent { index, .. } => *index,
        }
    }
}

/// Fresh per-object states: every processor starts as a non-data processor.
pub fn initial_states(cfg: &SystemConfig) -> Vec<ObjectState> {
    cfg.objects().map(|o| ObjectState::new(cfg, o)).collect()
}

/// Runs `sequence` against `policy` from the initial state.
pub fn run(cfg: &SystemConfig, policy: PolicyKind, sequence: &[Request]) -> Result<RunResult, RunError> {
    let mut states = initial_states(cfg);
    let mut checker = ConsistencyChecker::new(&states);
    let mut ledger = CostLedger::new();
    let mut records = Vec::with_capacity(sequence.len());
    let mut transitions = Vec::new();

    for (index, req) in sequence.iter().enumerate() {
        cfg.validate_request(req)
            .map_err(|reason| RunError::InvalidRequest { index, reason })?;
        let state = &mut states[req.object.index()];
        let out = policy
            .handle(cfg, state, req)
            .map_err(|fault| RunError::Fault { index, fault })?;

        let mut violations = Vec::new();
        if req.kind == RequestKind::Read && out.observed_version != Some(state.version) {
            violations.push(Violation {
                kind: ViolationKind::StaleCopy,
                object: req.object,
                node: Some(req.requester),
                request: Some(index),
            });
        }
        violations.extend(checker.check(cfg, &states, index));
        if !violations.is_empty() {
            return Err(RunError::Inconsistent { index, violations });
        }

        ledger.record_all(index, &out.charge);
        let trs: Vec<TransitionRecord> = out
            .transitions
            .iter()
            .map(|t| TransitionRecord {
                request: index,
                object: req.object,
                kind: t.kind,
                node: t.node,
            })
            .collect();
        transitions.extend_from_slice(&trs);
        records.push(RequestRecord {
            index,
            request: *req,
            locus: out.locus,
            charge: out.charge,
            actions: out.actions,
            emitted_events: out.emitted_events,
            transitions: trs,
            write_shape: out.write_shape,
            running_total: ledger.running_total(),
        });
    }

    Ok(RunResult {
        metadata: RunMetadata {
            policy,
            seed: cfg.seed,
            window_capacity: cfg.window_capacity,
            tariff: cfg.tariff,
            adrw_rule: cfg.adrw_rule,
        },
        total_cost: ledger.running_total(),
        ledger,
        final_states: states,
        transitions,
        records,
    })
}

/// Checks the state invariants of every object. Violations are returned,
/// never raised.
pub fn check_consistency(cfg: &SystemConfig, states: &[ObjectState]) -> Vec<Violation> {
    let mut out = Vec::new();
    for s in states {
        check_object(cfg, s, &mut out);
    }
    out
}

fn check_object(cfg: &SystemConfig, s: &ObjectState, out: &mut Vec<Violation>) {
    let o = s.object;
    let mut flag = |kind, node| {
        out.push(Violation {
            kind,
            object: o,
            node: Some(node),
            request: None,
        })
    };

    for (&(server, node), &set) in &s.flags {
        if set && (!s.temp_holders.contains(&node) || cfg.nearest_server(node, o) != server) {
            flag(ViolationKind::OrphanFlag, node);
        }
    }
    for &node in &s.temp_holders {
        let server = cfg.nearest_server(node, o);
        if !s.flag(server, node) || s.data_list.contains(&node) || !s.stored_version.contains_key(&node) {
            flag(ViolationKind::OrphanFlag, node);
        } else if s.stored_version[&node] != s.version {
            flag(ViolationKind::StaleCopy, node);
        }
    }
    for node in s.allocation_scheme() {
        if s.stored_version.get(&node) != Some(&s.version) {
            flag(ViolationKind::StaleCopy, node);
        }
    }
    for (&node, &v) in &s.stored_version {
        if v > s.version {
            flag(ViolationKind::VersionRegression, node);
        }
        if !s.in_allocation(node) && !s.temp_holders.contains(&node) {
            flag(ViolationKind::StaleCopy, node);
        }
    }

    for (&subject, w) in &s.local_windows {
        let holds_copy = s.data_list.contains(&subject) || s.temp_holders.contains(&subject);
        if !holds_copy
            || s.server_windows.contains_key(&subject)
            || w.location != WindowLocation::AtSubject
            || w.subject != subject
            || w.object != o
        {
            flag(ViolationKind::WindowDuplicate, subject);
        }
    }
    for (&subject, w) in &s.server_windows {
        let holds_copy = s.data_list.contains(&subject) || s.temp_holders.contains(&subject);
        if holds_copy || subject.is_server() || w.location != WindowLocation::AtServer || w.subject != subject || w.object != o {
            flag(ViolationKind::WindowDuplicate, subject);
        }
    }
    for &node in s.data_list.iter().chain(&s.temp_holders) {
        if !s.local_windows.contains_key(&node) {
            flag(ViolationKind::WindowDuplicate, node);
        }
    }
}

/// [`check_consistency`] plus version monotonicity across calls.
#[derive(Clone, Debug)]
pub struct ConsistencyChecker {
    last_versions: Vec<u64>,
}

impl ConsistencyChecker {
    pub fn new(states: &[ObjectState]) -> Self {
        Self {
            last_versions: states.iter().map(|s| s.version).collect(),
        }
    }

    pub fn check(&mut self, cfg: &SystemConfig, states: &[ObjectState], request: usize) -> Vec<Violation> {
        let mut out = check_consistency(cfg, states);
        for (s, last) in states.iter().zip(self.last_versions.iter_mut()) {
            if s.version < *last {
                out.push(Violation {
                    kind: ViolationKind::VersionRegression,
                    object: s.object,
                    node: None,
                    request: None,
                });
            }
            *last = s.version;
        }
        for v in &mut out {
            v.request = Some(request);
        }
        out
    }
}
