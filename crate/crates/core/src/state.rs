//! Per-object allocation state and the outcome record produced by policy handlers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{sum_charges, ChargeItem};
use crate::model::{NodeId, ObjectId, Request, RequestKind, SystemConfig};
use crate::window::{MessageRequestWindow, WindowEvent, WindowLocation};

/// Allocation scheme of one object, plus the windows and flag bits kept for it.
///
/// Servers in `server_set` are always replicas; `data_list` holds the
/// non-server data processors. Windows are stored on whichever side holds
/// them, so a window that is in both maps is a protocol bug.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectState {
    pub object: ObjectId,
    pub version: u64,
    pub server_set: Vec<NodeId>,
    pub data_list: BTreeSet<NodeId>,
    /// `(server, processor) -> bit`; an entry exists once the processor has
    /// contacted that server about this object.
    pub flags: BTreeMap<(NodeId, NodeId), bool>,
    pub temp_holders: BTreeSet<NodeId>,
    /// Version held by every node that has a copy.
    pub stored_version: BTreeMap<NodeId, u64>,
    pub server_windows: BTreeMap<NodeId, MessageRequestWindow>,
    pub local_windows: BTreeMap<NodeId, MessageRequestWindow>,
    /// Flag transitions 0→1 and 1→0 over the run.
    pub flag_toggles: u64,
    pub invalidations: u64,
}

impl ObjectState {
    pub fn new(cfg: &SystemConfig, object: ObjectId) -> Self {
        let server_set = cfg.server_set(object).to_vec();
        let stored_version = server_set.iter().map(|&s| (s, 0)).collect();
        Self {
            object,
            version: 0,
            server_set,
            data_list: BTreeSet::new(),
            flags: BTreeMap::new(),
            temp_holders: BTreeSet::new(),
            stored_version,
            server_windows: BTreeMap::new(),
            local_windows: BTreeMap::new(),
            flag_toggles: 0,
            invalidations: 0,
        }
    }

    pub fn is_server(&self, node: NodeId) -> bool {
        self.server_set.contains(&node)
    }

    /// Membership in `A_o = S(o) ∪ data-list(o)`.
    pub fn in_allocation(&self, node: NodeId) -> bool {
        self.is_server(node) || self.data_list.contains(&node)
    }

    pub fn allocation_scheme(&self) -> BTreeSet<NodeId> {
        self.server_set.iter().chain(&self.data_list).copied().collect()
    }

    pub fn allocation_size(&self) -> usize {
        self.server_set.len() + self.data_list.len()
    }

    pub fn flags_set(&self) -> usize {
        self.flags.values().filter(|&&b| b).count()
    }

    pub fn flag(&self, server: NodeId, node: NodeId) -> bool {
        self.flags.get(&(server, node)).copied().unwrap_or(false)
    }

    pub fn window(&self, subject: NodeId) -> Option<&MessageRequestWindow> {
        self.local_windows
            .get(&subject)
            .or_else(|| self.server_windows.get(&subject))
    }

    /// Server-held window for `subject`, created empty on first contact.
    pub(crate) fn server_window(&mut self, subject: NodeId, capacity: usize) -> &mut MessageRequestWindow {
        let object = self.object;
        self.server_windows
            .entry(subject)
            .or_insert_with(|| MessageRequestWindow::new(object, subject, capacity))
    }

    pub(crate) fn window_to_subject(&mut self, subject: NodeId) -> Result<(), ProtocolFault> {
        let mut w = self
            .server_windows
            .remove(&subject)
            .ok_or(ProtocolFault::MissingWindow(subject))?;
        w.location = WindowLocation::AtSubject;
        self.local_windows.insert(subject, w);
        Ok(())
    }

    pub(crate) fn window_to_server(&mut self, subject: NodeId) -> Result<(), ProtocolFault> {
        let mut w = self
            .local_windows
            .remove(&subject)
            .ok_or(ProtocolFault::MissingWindow(subject))?;
        w.location = WindowLocation::AtServer;
        self.server_windows.insert(subject, w);
        Ok(())
    }

    pub(crate) fn local_window_mut(&mut self, subject: NodeId) -> Result<&mut MessageRequestWindow, ProtocolFault> {
        self.local_windows
            .get_mut(&subject)
            .ok_or(ProtocolFault::MissingWindow(subject))
    }

    /// Registers the flag slot for a processor at its nearest server.
    pub(crate) fn touch_flag(&mut self, server: NodeId, node: NodeId) {
        if !node.is_server() {
            self.flags.entry((server, node)).or_insert(false);
        }
    }

    pub(crate) fn set_flag(&mut self, server: NodeId, node: NodeId, value: bool) {
        let slot = self.flags.entry((server, node)).or_insert(false);
        if *slot != value {
            *slot = value;
            self.flag_toggles += 1;
        }
    }
}

/// Where a request is serviced.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Locus {
    /// The requester holds a replica.
    LocalData,
    /// The requester holds a temporary copy and is reading it.
    LocalTemp,
    /// Handled by the requester's nearest server.
    Server(NodeId),
}

impl fmt::Display for Locus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Locus::LocalData => f.write_str("local_data"),
            Locus::LocalTemp => f.write_str("local_temp"),
            Locus::Server(_) => f.write_str("server"),
        }
    }
}

/// Routes a request against the current state of its object.
pub fn route(cfg: &SystemConfig, state: &ObjectState, req: &Request) -> Locus {
    if state.in_allocation(req.requester) {
        Locus::LocalData
    } else if req.kind == RequestKind::Read && state.temp_holders.contains(&req.requester) {
        Locus::LocalTemp
    } else {
        Locus::Server(cfg.nearest_server(req.requester, req.object))
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionKind {
    Entered,
    Exited,
    Invalidated,
}

impl fmt::Display for TransitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransitionKind::Entered => "entered",
            TransitionKind::Exited => "exited",
            TransitionKind::Invalidated => "invalidated",
        })
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub kind: TransitionKind,
    pub node: NodeId,
}

/// A unit of work actually performed while servicing a request.
///
/// This is the raw material for the replay accountant, which prices each
/// action on its own; it never looks at handler charges.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    /// `node` serviced a request or message of this kind.
    Serve { node: NodeId, event: WindowEvent },
    /// A remote reader stored the object it just fetched.
    SaveCopy { node: NodeId },
    FlagSet { server: NodeId, node: NodeId },
    FlagReset { server: NodeId, node: NodeId },
    /// A replica stored a new version; `transfer` if it had to be shipped there.
    ReplicaUpdate { node: NodeId, transfer: bool },
}

/// Size parameters of one write, as consumed by the write cost formula.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WriteShape {
    /// `|A_o|` before the write.
    pub a_before: usize,
    /// Replicas that store the new version.
    pub a_after: usize,
    pub writer_in_a: bool,
    /// Flags set before the write.
    pub n_f: usize,
    /// Flags set by exits the write triggered.
    pub n_f_after: usize,
}

/// Everything a handler did for one request (or one sub-step of it).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyOutcome {
    pub locus: Locus,
    /// Window appends, in order, keyed by the window's subject.
    pub emitted_events: Vec<(NodeId, WindowEvent)>,
    pub charge: Vec<ChargeItem>,
    pub transitions: Vec<Transition>,
    pub actions: Vec<Action>,
    /// Version returned to a reader.
    pub observed_version: Option<u64>,
    pub write_shape: Option<WriteShape>,
}

impl PolicyOutcome {
    pub fn new(locus: Locus) -> Self {
        Self {
            locus,
            emitted_events: Vec::new(),
            charge: Vec::new(),
            transitions: Vec::new(),
            actions: Vec::new(),
            observed_version: None,
            write_shape: None,
        }
    }

    pub fn total(&self) -> u64 {
        sum_charges(&self.charge)
    }

    /// Appends a sub-handler's work after this outcome's own.
    pub fn absorb(&mut self, other: PolicyOutcome) {
        self.emitted_events.extend(other.emitted_events);
        self.charge.extend(other.charge);
        self.transitions.extend(other.transitions);
        self.actions.extend(other.actions);
        if self.observed_version.is_none() {
            self.observed_version = other.observed_version;
        }
    }

    pub(crate) fn charge(&mut self, items: impl IntoIterator<Item = ChargeItem>) {
        self.charge.extend(items.into_iter().filter(|c| c.units > 0));
    }

    pub(crate) fn emit(&mut self, node: NodeId, event: WindowEvent) {
        self.emitted_events.push((node, event));
    }

    pub(crate) fn transition(&mut self, kind: TransitionKind, node: NodeId) {
        self.transitions.push(Transition { kind, node });
    }
}

/// A handler was invoked in a state its protocol rules out.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolFault {
    #[error("{node:?} received version {incoming} while holding {held}")]
    StaleUpdate { node: NodeId, incoming: u64, held: u64 },
    #[error("invalidation sent to {0:?}, which holds no temporary copy")]
    InvalidationWithoutCopy(NodeId),
    #[error("no window for {0:?} on the expected side")]
    MissingWindow(NodeId),
    #[error("{0:?} is not a data processor")]
    NotDataProcessor(NodeId),
    #[error("{0:?} does not hold a temporary copy")]
    NotTempHolder(NodeId),
    #[error("{0:?} holds no copy to read")]
    NoCopy(NodeId),
    #[error("request from {0:?} reached a handler meant for another role")]
    Misrouted(NodeId),
}
