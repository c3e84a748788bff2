//! Comparison baselines: ADRW (adaptive, window-driven, no temporary copies)
//! and SA (static read-one-write-all over a fixed replica set).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::cost::{sum_charges, ChargeItem, CostTariff};
use crate::model::{AdrwRule, NodeId, ObjectId, Request, RequestKind, SystemConfig};
use crate::state::{route, Action, Locus, ObjectState, PolicyOutcome, ProtocolFault, TransitionKind, WriteShape};
use crate::window::{DecisionCounters, WindowEvent, WindowRole};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdrwDecision {
    Enter,
    Exit,
    Stay,
}

/// ADRW's membership decision for a node currently in `role`.
///
/// The cost rule is the ORAD inequality without local-write credit,
/// temporary-read credit or invalidation terms.
pub fn adrw_decide(c: &DecisionCounters, t: &CostTariff, rule: AdrwRule, role: WindowRole) -> AdrwDecision {
    let (favours_replica, favours_remote) = match rule {
        AdrwRule::CountBased => (c.n_tr > c.n_tw, c.n_tw > c.n_tr),
        AdrwRule::CostBased => {
            let write_side = c.n_tw as u128 * (t.c_d + t.c_io) as u128;
            let read_side = c.n_tr as u128 * (t.c_c + t.c_d) as u128;
            (write_side <= read_side, write_side > read_side)
        }
    };
    match role {
        WindowRole::NonData if favours_replica => AdrwDecision::Enter,
        WindowRole::Data if favours_remote => AdrwDecision::Exit,
        _ => AdrwDecision::Stay,
    }
}

/// Every replica pays a transfer and a store, the writer's own included.
pub fn adrw_write_cost(a_before: usize, t: &CostTariff) -> u64 {
    a_before as u64 * (t.c_d + t.c_io)
}

pub fn adrw_handle(
    cfg: &SystemConfig,
    state: &mut ObjectState,
    req: &Request,
    rule: AdrwRule,
) -> Result<PolicyOutcome, ProtocolFault> {
    let locus = route(cfg, state, req);
    let mut out = match req.kind {
        RequestKind::Read => adrw_read(cfg, state, req.requester, rule)?,
        RequestKind::Write => adrw_write(cfg, state, req.requester, rule)?,
    };
    out.locus = locus;
    Ok(out)
}

fn adrw_read(cfg: &SystemConfig, state: &mut ObjectState, reader: NodeId, rule: AdrwRule) -> Result<PolicyOutcome, ProtocolFault> {
    let t = &cfg.tariff;
    if state.in_allocation(reader) {
        let mut out = PolicyOutcome::new(Locus::LocalData);
        if !state.is_server(reader) {
            state.local_window_mut(reader)?.push(WindowEvent::DataRead);
            out.emit(reader, WindowEvent::DataRead);
        }
        out.charge([ChargeItem::io(t.c_io)]);
        out.actions.push(Action::Serve { node: reader, event: WindowEvent::DataRead });
        out.observed_version = Some(*state.stored_version.get(&reader).ok_or(ProtocolFault::NoCopy(reader))?);
        return Ok(out);
    }

    let server = cfg.nearest_server(reader, state.object);
    let mut out = PolicyOutcome::new(Locus::Server(server));
    let window = state.server_window(reader, cfg.window_capacity);
    window.push(WindowEvent::RemoteRead);
    let decision = adrw_decide(&window.counters(), t, rule, WindowRole::NonData);
    out.emit(reader, WindowEvent::RemoteRead);

    out.charge([ChargeItem::control(t.c_c), ChargeItem::io(t.c_io), ChargeItem::data(t.c_d)]);
    out.actions.push(Action::Serve { node: reader, event: WindowEvent::RemoteRead });
    out.observed_version = state.stored_version.get(&server).copied();

    if decision == AdrwDecision::Enter {
        out.charge([ChargeItem::io(t.c_io)]);
        state.data_list.insert(reader);
        state.stored_version.insert(reader, state.version);
        state.window_to_subject(reader)?;
        out.actions.push(Action::SaveCopy { node: reader });
        out.transition(TransitionKind::Entered, reader);
    }
    Ok(out)
}

fn adrw_write(cfg: &SystemConfig, state: &mut ObjectState, writer: NodeId, rule: AdrwRule) -> Result<PolicyOutcome, ProtocolFault> {
    let t = &cfg.tariff;
    let mut out = PolicyOutcome::new(Locus::LocalData);
    let a_before = state.allocation_size();
    let writer_in_a = state.in_allocation(writer);

    state.version += 1;
    let version = state.version;

    for &server in &state.server_set.clone() {
        state.stored_version.insert(server, version);
        out.charge([ChargeItem::data(t.c_d), ChargeItem::io(t.c_io)]);
        out.actions.push(Action::ReplicaUpdate { node: server, transfer: true });
    }
    if state.data_list.contains(&writer) {
        state.stored_version.insert(writer, version);
        out.charge([ChargeItem::data(t.c_d), ChargeItem::io(t.c_io)]);
        out.actions.push(Action::ReplicaUpdate { node: writer, transfer: true });
    }

    let subjects: Vec<NodeId> = state.server_windows.keys().copied().filter(|&n| n != writer).collect();
    for subject in subjects {
        state.server_window(subject, cfg.window_capacity).push(WindowEvent::PropagatedWrite);
        out.emit(subject, WindowEvent::PropagatedWrite);
    }

    let targets: Vec<NodeId> = state.data_list.iter().copied().filter(|&n| n != writer).collect();
    for node in targets {
        let held = state.stored_version.get(&node).copied().unwrap_or(0);
        if held >= version {
            return Err(ProtocolFault::StaleUpdate { node, incoming: version, held });
        }
        state.stored_version.insert(node, version);
        let window = state.local_window_mut(node)?;
        window.push(WindowEvent::PropagatedWrite);
        let decision = adrw_decide(&window.counters(), t, rule, WindowRole::Data);
        out.emit(node, WindowEvent::PropagatedWrite);
        out.charge([ChargeItem::data(t.c_d), ChargeItem::io(t.c_io)]);
        out.actions.push(Action::Serve { node, event: WindowEvent::PropagatedWrite });

        if decision == AdrwDecision::Exit {
            state.data_list.remove(&node);
            state.stored_version.remove(&node);
            state.window_to_server(node)?;
            out.transition(TransitionKind::Exited, node);
        }
    }

    out.write_shape = Some(WriteShape {
        a_before,
        a_after: a_before,
        writer_in_a,
        n_f: 0,
        n_f_after: 0,
    });
    Ok(out)
}

/// SA's fixed replica set `Q`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaScheme {
    q: BTreeSet<NodeId>,
}

impl SaScheme {
    /// `None` if `q` is empty.
    pub fn new(q: impl IntoIterator<Item = NodeId>) -> Option<Self> {
        let q: BTreeSet<NodeId> = q.into_iter().collect();
        (!q.is_empty()).then_some(Self { q })
    }

    /// Default scheme: the object's server set.
    pub fn for_object(cfg: &SystemConfig, object: ObjectId) -> Self {
        Self {
            q: cfg.server_set(object).iter().copied().collect(),
        }
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.q.contains(&node)
    }

    pub fn size(&self) -> usize {
        self.q.len()
    }

    pub fn members(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.q.iter().copied()
    }
}

pub fn sa_read_charge(q: &SaScheme, requester: NodeId, t: &CostTariff) -> Vec<ChargeItem> {
    if q.contains(requester) {
        vec![ChargeItem::io(t.c_io)]
    } else {
        vec![ChargeItem::control(t.c_c), ChargeItem::io(t.c_io), ChargeItem::data(t.c_d)]
    }
}

pub fn sa_read(q: &SaScheme, requester: NodeId, t: &CostTariff) -> u64 {
    sum_charges(&sa_read_charge(q, requester, t))
}

pub fn sa_write(q: &SaScheme, writer: NodeId, t: &CostTariff) -> u64 {
    let n = q.size() as u64;
    let transfers = if q.contains(writer) { n - 1 } else { n };
    transfers * t.c_d + n * t.c_io
}

pub fn sa_handle(cfg: &SystemConfig, state: &mut ObjectState, q: &SaScheme, req: &Request) -> Result<PolicyOutcome, ProtocolFault> {
    let t = &cfg.tariff;
    let member = q.contains(req.requester);
    let locus = if member {
        Locus::LocalData
    } else {
        Locus::Server(cfg.nearest_server(req.requester, req.object))
    };
    let mut out = PolicyOutcome::new(locus);
    match req.kind {
        RequestKind::Read => {
            out.charge(sa_read_charge(q, req.requester, t));
            let (source, event) = if member {
                (req.requester, WindowEvent::DataRead)
            } else {
                let source = match locus {
                    Locus::Server(s) if q.contains(s) => s,
                    _ => q.members().next().expect("scheme is nonempty"),
                };
                (source, WindowEvent::RemoteRead)
            };
            out.actions.push(Action::Serve { node: req.requester, event });
            out.observed_version = Some(*state.stored_version.get(&source).ok_or(ProtocolFault::NoCopy(source))?);
        }
        RequestKind::Write => {
            state.version += 1;
            for node in q.members() {
                state.stored_version.insert(node, state.version);
                let transfer = node != req.requester;
                if transfer {
                    out.charge([ChargeItem::data(t.c_d)]);
                }
                out.charge([ChargeItem::io(t.c_io)]);
                out.actions.push(Action::ReplicaUpdate { node, transfer });
            }
            out.write_shape = Some(WriteShape {
                a_before: q.size(),
                a_after: q.size(),
                writer_in_a: member,
                n_f: 0,
                n_f_after: 0,
            });
        }
    }
    Ok(out)
}
