//! ORAD: cost-driven enter/exit tests, read/write servicing costs, and the
//! three handlers that run at a server (TED), at a data processor (TXD) and at
//! a non-data processor holding a temporary copy (TF).
//!
//! Flag convention: a set flag at a processor's nearest server means the
//! processor left the data-list but still holds a valid temporary copy.

use crate::cost::{sum_charges, ChargeItem, CostTariff};
use crate::model::{NodeId, Request, RequestKind, SystemConfig};
use crate::state::{
    route, Action, Locus, ObjectState, PolicyOutcome, ProtocolFault, TransitionKind, WriteShape,
};
use crate::window::{DecisionCounters, WindowEvent};

/// Both sides of the enter/exit inequality: write-side cost of holding a
/// replica against read-side cost of not holding one (terms common to both
/// roles cancelled).
fn decision_sides(c: &DecisionCounters, t: &CostTariff) -> (i128, i128) {
    let (io, cc, cd) = (t.c_io as i128, t.c_c as i128, t.c_d as i128);
    let replica_side = c.n_tw as i128 * (cd + io) - c.n_wld as i128 * cd;
    let remote_side =
        c.n_tr as i128 * (cc + cd) - c.n_rln as i128 * (cd + cc) + c.n_inv as i128 * (cc + 2 * io);
    (replica_side, remote_side)
}

/// Whether a non-data processor with these counters should become a data
/// processor. Ties admit.
pub fn enter_test(c: &DecisionCounters, t: &CostTariff) -> bool {
    let (replica, remote) = decision_sides(c, t);
    replica <= remote
}

/// Whether a data processor with these counters should leave the data-list.
/// Ties retain.
pub fn exit_test(c: &DecisionCounters, t: &CostTariff) -> bool {
    let (replica, remote) = decision_sides(c, t);
    replica > remote
}

/// Itemised cost of a read by a non-server requester.
///
/// Remote reads are itemised as query, server fetch, transfer and (when
/// saving) the requester's store.
pub fn read_charge(state: &ObjectState, requester: NodeId, saving: bool, t: &CostTariff) -> Vec<ChargeItem> {
    if state.in_allocation(requester) || state.temp_holders.contains(&requester) {
        return vec![ChargeItem::io(t.c_io)];
    }
    let mut items = vec![ChargeItem::control(t.c_c), ChargeItem::io(t.c_io), ChargeItem::data(t.c_d)];
    if saving {
        items.push(ChargeItem::io(t.c_io));
    }
    items
}

pub fn read_cost(state: &ObjectState, requester: NodeId, saving: bool, t: &CostTariff) -> u64 {
    sum_charges(&read_charge(state, requester, saving, t))
}

/// Itemised write cost: transfers, replica stores, invalidations with their
/// flag resets, and flags set by exits.
pub fn write_charge(shape: &WriteShape, t: &CostTariff) -> Vec<ChargeItem> {
    let transfers = if shape.writer_in_a {
        shape.a_before.saturating_sub(1)
    } else {
        shape.a_before
    } as u64;
    let (a_after, n_f, n_f_after) = (shape.a_after as u64, shape.n_f as u64, shape.n_f_after as u64);
    [
        ChargeItem::data(transfers * t.c_d),
        ChargeItem::io(a_after * t.c_io),
        ChargeItem::io(n_f * t.c_io),
        ChargeItem::control(n_f * t.c_c),
        ChargeItem::io(n_f_after * t.c_io),
    ]
    .into_iter()
    .filter(|c| c.units > 0)
    .collect()
}

pub fn write_cost(shape: &WriteShape, t: &CostTariff) -> u64 {
    sum_charges(&write_charge(shape, t))
}

/// Input to the data-processor handler.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum TxdInput {
    OwnRead,
    OwnWrite,
    /// A new version pushed by the server; the state's version is already bumped.
    Propagated,
}

/// Input to the temporary-holder handler.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum TfInput {
    Read,
    Invalidate,
}

/// Services one request under ORAD.
pub fn handle(cfg: &SystemConfig, state: &mut ObjectState, req: &Request) -> Result<PolicyOutcome, ProtocolFault> {
    let locus = route(cfg, state, req);
    let mut out = match (req.kind, locus) {
        (RequestKind::Read, Locus::LocalData) if !state.is_server(req.requester) => {
            txd_handle(cfg, state, req.requester, TxdInput::OwnRead)?
        }
        (RequestKind::Read, Locus::LocalTemp) => tf_handle(cfg, state, req.requester, TfInput::Read)?,
        _ => ted_handle(cfg, state, req)?,
    };
    out.locus = locus;
    Ok(out)
}

/// Server-side handler: reads from non-data processors (and the server's own
/// reads), and every write.
pub fn ted_handle(cfg: &SystemConfig, state: &mut ObjectState, req: &Request) -> Result<PolicyOutcome, ProtocolFault> {
    match req.kind {
        RequestKind::Read => ted_read(cfg, state, req.requester),
        RequestKind::Write => ted_write(cfg, state, req.requester),
    }
}

fn ted_read(cfg: &SystemConfig, state: &mut ObjectState, reader: NodeId) -> Result<PolicyOutcome, ProtocolFault> {
    let t = &cfg.tariff;
    if state.is_server(reader) {
        let mut out = PolicyOutcome::new(Locus::LocalData);
        out.charge([ChargeItem::io(t.c_io)]);
        out.actions.push(Action::Serve { node: reader, event: WindowEvent::DataRead });
        out.observed_version = state.stored_version.get(&reader).copied();
        return Ok(out);
    }
    if state.data_list.contains(&reader) || state.temp_holders.contains(&reader) {
        return Err(ProtocolFault::Misrouted(reader));
    }

    let server = cfg.nearest_server(reader, state.object);
    let mut out = PolicyOutcome::new(Locus::Server(server));
    state.touch_flag(server, reader);

    let window = state.server_window(reader, cfg.window_capacity);
    window.push(WindowEvent::RemoteRead);
    let enter = enter_test(&window.counters(), t);
    out.emit(reader, WindowEvent::RemoteRead);

    out.charge(read_charge(state, reader, enter, t));
    out.actions.push(Action::Serve { node: reader, event: WindowEvent::RemoteRead });
    out.observed_version = state.stored_version.get(&server).copied();

    if enter {
        state.data_list.insert(reader);
        state.stored_version.insert(reader, state.version);
        state.window_to_subject(reader)?;
        out.actions.push(Action::SaveCopy { node: reader });
        out.transition(TransitionKind::Entered, reader);
    }
    Ok(out)
}

fn ted_write(cfg: &SystemConfig, state: &mut ObjectState, writer: NodeId) -> Result<PolicyOutcome, ProtocolFault> {
    let t = &cfg.tariff;
    let locus = route(cfg, state, &Request::write(writer, state.object));
    let mut out = PolicyOutcome::new(locus);

    let a_before = state.allocation_size();
    let writer_in_a = state.in_allocation(writer);
    let flagged: Vec<(NodeId, NodeId)> = state
        .flags
        .iter()
        .filter(|(_, &set)| set)
        .map(|(&key, _)| key)
        .collect();

    state.version += 1;
    let version = state.version;

    if state.data_list.contains(&writer) {
        out.absorb(txd_handle(cfg, state, writer, TxdInput::OwnWrite)?);
    } else if !state.is_server(writer) {
        let server = cfg.nearest_server(writer, state.object);
        state.touch_flag(server, writer);
    }

    for &(_, node) in &flagged {
        out.charge([ChargeItem::control(t.c_c)]);
        state.invalidations += 1;
        out.absorb(tf_handle(cfg, state, node, TfInput::Invalidate)?);
    }

    for &server in &state.server_set.clone() {
        state.stored_version.insert(server, version);
        let transfer = server != writer;
        if transfer {
            out.charge([ChargeItem::data(t.c_d)]);
        }
        out.charge([ChargeItem::io(t.c_io)]);
        out.actions.push(Action::ReplicaUpdate { node: server, transfer });
    }

    for &(server, node) in &flagged {
        state.set_flag(server, node, false);
        out.charge([ChargeItem::io(t.c_io)]);
        out.actions.push(Action::FlagReset { server, node });
    }

    let subjects: Vec<NodeId> = state.server_windows.keys().copied().filter(|&n| n != writer).collect();
    for subject in subjects {
        state.server_window(subject, cfg.window_capacity).push(WindowEvent::PropagatedWrite);
        out.emit(subject, WindowEvent::PropagatedWrite);
    }

    let mut exits = 0;
    let targets: Vec<NodeId> = state.data_list.iter().copied().filter(|&n| n != writer).collect();
    for node in targets {
        let sub = txd_handle(cfg, state, node, TxdInput::Propagated)?;
        exits += sub
            .transitions
            .iter()
            .filter(|tr| tr.kind == TransitionKind::Exited)
            .count();
        out.absorb(sub);
    }

    out.write_shape = Some(WriteShape {
        a_before,
        // exiting processors store the new version before leaving
        a_after: a_before,
        writer_in_a,
        n_f: flagged.len(),
        n_f_after: exits,
    });
    Ok(out)
}

/// Data-processor handler.
pub fn txd_handle(
    cfg: &SystemConfig,
    state: &mut ObjectState,
    subject: NodeId,
    input: TxdInput,
) -> Result<PolicyOutcome, ProtocolFault> {
    if !state.data_list.contains(&subject) || state.is_server(subject) {
        return Err(ProtocolFault::NotDataProcessor(subject));
    }
    let t = &cfg.tariff;
    let mut out = PolicyOutcome::new(Locus::LocalData);
    match input {
        TxdInput::OwnRead => {
            state.local_window_mut(subject)?.push(WindowEvent::DataRead);
            out.emit(subject, WindowEvent::DataRead);
            out.charge([ChargeItem::io(t.c_io)]);
            out.actions.push(Action::Serve { node: subject, event: WindowEvent::DataRead });
            out.observed_version = Some(
                *state
                    .stored_version
                    .get(&subject)
                    .ok_or(ProtocolFault::NoCopy(subject))?,
            );
        }
        TxdInput::OwnWrite => {
            state.stored_version.insert(subject, state.version);
            state.local_window_mut(subject)?.push(WindowEvent::DataWrite);
            out.emit(subject, WindowEvent::DataWrite);
            out.charge([ChargeItem::io(t.c_io)]);
            out.actions.push(Action::Serve { node: subject, event: WindowEvent::DataWrite });
        }
        TxdInput::Propagated => {
            let held = state.stored_version.get(&subject).copied().unwrap_or(0);
            if held >= state.version {
                return Err(ProtocolFault::StaleUpdate {
                    node: subject,
                    incoming: state.version,
                    held,
                });
            }
            state.stored_version.insert(subject, state.version);
            let window = state.local_window_mut(subject)?;
            window.push(WindowEvent::PropagatedWrite);
            let leave = exit_test(&window.counters(), t);
            out.emit(subject, WindowEvent::PropagatedWrite);
            out.charge([ChargeItem::data(t.c_d), ChargeItem::io(t.c_io)]);
            out.actions.push(Action::Serve { node: subject, event: WindowEvent::PropagatedWrite });

            if leave {
                let server = cfg.nearest_server(subject, state.object);
                state.data_list.remove(&subject);
                state.set_flag(server, subject, true);
                state.temp_holders.insert(subject);
                out.charge([ChargeItem::io(t.c_io)]);
                out.actions.push(Action::FlagSet { server, node: subject });
                out.transition(TransitionKind::Exited, subject);
            }
        }
    }
    Ok(out)
}

/// Handler at a non-data processor holding a temporary copy.
pub fn tf_handle(
    cfg: &SystemConfig,
    state: &mut ObjectState,
    subject: NodeId,
    input: TfInput,
) -> Result<PolicyOutcome, ProtocolFault> {
    if !state.temp_holders.contains(&subject) {
        return Err(match input {
            TfInput::Read => ProtocolFault::NotTempHolder(subject),
            TfInput::Invalidate => ProtocolFault::InvalidationWithoutCopy(subject),
        });
    }
    let mut out = PolicyOutcome::new(Locus::LocalTemp);
    match input {
        TfInput::Read => {
            state.local_window_mut(subject)?.push(WindowEvent::TempRead);
            out.emit(subject, WindowEvent::TempRead);
            out.charge([ChargeItem::io(cfg.tariff.c_io)]);
            out.actions.push(Action::Serve { node: subject, event: WindowEvent::TempRead });
            out.observed_version = state.stored_version.get(&subject).copied();
        }
        TfInput::Invalidate => {
            state.local_window_mut(subject)?.push(WindowEvent::Invalidate);
            out.emit(subject, WindowEvent::Invalidate);
            state.stored_version.remove(&subject);
            state.window_to_server(subject)?;
            state.temp_holders.remove(&subject);
            out.actions.push(Action::Serve { node: subject, event: WindowEvent::Invalidate });
            out.transition(TransitionKind::Invalidated, subject);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{NodeId, ObjectId};
    use crate::window::{MessageRequestWindow, WindowLocation};

    const T: CostTariff = CostTariff::new(1, 5, 10);

    fn counters(n_tr: u64, n_tw: u64, n_wld: u64, n_rln: u64, n_inv: u64) -> DecisionCounters {
        DecisionCounters { n_tr, n_tw, n_wld, n_rln, n_inv }
    }

    /// Both servers replicate o1; p1 is served by s1, p2 by s2.
    fn setup() -> (SystemConfig, ObjectState) {
        let cfg = SystemConfig::shared_servers();
        let state = ObjectState::new(&cfg, ObjectId::new(0));
        (cfg, state)
    }

    const P1: NodeId = NodeId::regular(0);
    const P2: NodeId = NodeId::regular(1);
    const S1: NodeId = NodeId::server(0);
    const O1: ObjectId = ObjectId::new(0);

    fn events(state: &ObjectState, node: NodeId) -> Vec<WindowEvent> {
        state.window(node).unwrap().events().collect()
    }

    #[test]
    fn enter_test_examples() {
        assert!(enter_test(&counters(2, 1, 0, 0, 0), &T)); // 11 <= 30
        assert!(!enter_test(&counters(1, 2, 0, 0, 0), &T)); // 22 <= 15
        assert!(enter_test(&counters(0, 0, 0, 0, 0), &T));
    }

    #[test]
    fn exit_test_examples() {
        assert!(exit_test(&counters(0, 2, 0, 0, 0), &T)); // 22 > 0
        assert!(!exit_test(&counters(3, 1, 1, 0, 0), &T)); // 1 > 45
        assert!(!exit_test(&counters(0, 0, 0, 0, 0), &T));
    }

    #[test]
    fn read_cost_cases() {
        let (_, mut state) = setup();
        assert_eq!(read_cost(&state, P1, false, &T), 16);
        assert_eq!(read_cost(&state, P1, true, &T), 17);
        state.data_list.insert(P1);
        assert_eq!(read_cost(&state, P1, false, &T), 1);
        state.data_list.clear();
        state.temp_holders.insert(P1);
        assert_eq!(read_cost(&state, P1, false, &T), 1);
    }

    #[test]
    fn write_cost_cases() {
        let shape = |a_before, a_after, writer_in_a, n_f, n_f_after| WriteShape {
            a_before,
            a_after,
            writer_in_a,
            n_f,
            n_f_after,
        };
        assert_eq!(write_cost(&shape(3, 3, true, 1, 0), &T), 29);
        assert_eq!(write_cost(&shape(2, 2, false, 0, 0), &T), 22);
        for t in [T, CostTariff::new(3, 7, 2), CostTariff::new(0, 1, 1)] {
            assert_eq!(write_cost(&shape(1, 1, true, 0, 0), &t), t.c_io);
        }
    }

    #[test]
    fn first_remote_read_enters() {
        let (cfg, mut state) = setup();
        let out = handle(&cfg, &mut state, &Request::read(P1, O1)).unwrap();
        assert_eq!(out.total(), 17);
        assert_eq!(out.locus, Locus::Server(S1));
        assert!(state.data_list.contains(&P1));
        assert_eq!(state.window(P1).unwrap().location, WindowLocation::AtSubject);
        assert!(state.server_windows.is_empty());
        assert_eq!(out.transitions.len(), 1);
        assert_eq!(out.transitions[0].kind, TransitionKind::Entered);
        assert_eq!(state.flags.get(&(S1, P1)), Some(&false));
    }

    #[test]
    fn remote_read_with_write_history_does_not_save() {
        let (cfg, mut state) = setup();
        // p1 has seen two writes by others while non-data
        state.server_window(P1, cfg.window_capacity).push(WindowEvent::PropagatedWrite);
        state.server_window(P1, cfg.window_capacity).push(WindowEvent::PropagatedWrite);
        let out = handle(&cfg, &mut state, &Request::read(P1, O1)).unwrap();
        assert_eq!(out.total(), 16);
        assert!(!state.data_list.contains(&P1));
        assert!(out.transitions.is_empty());
    }

    #[test]
    fn server_read_is_local() {
        let (cfg, mut state) = setup();
        let out = handle(&cfg, &mut state, &Request::read(S1, O1)).unwrap();
        assert_eq!(out.total(), 1);
        assert_eq!(out.locus, Locus::LocalData);
        assert!(out.emitted_events.is_empty());
        assert!(state.server_windows.is_empty() && state.local_windows.is_empty());
    }

    #[test]
    fn data_processor_read_is_local() {
        let (cfg, mut state) = setup();
        handle(&cfg, &mut state, &Request::read(P1, O1)).unwrap();
        let out = handle(&cfg, &mut state, &Request::read(P1, O1)).unwrap();
        assert_eq!(out.total(), 1);
        assert_eq!(out.locus, Locus::LocalData);
        assert_eq!(events(&state, P1), vec![WindowEvent::RemoteRead, WindowEvent::DataRead]);
    }

    /// p1 and p2 enter, then two server writes push both out with flags set.
    fn two_temp_holders() -> (SystemConfig, ObjectState) {
        let (cfg, mut state) = setup();
        handle(&cfg, &mut state, &Request::read(P1, O1)).unwrap();
        handle(&cfg, &mut state, &Request::read(P2, O1)).unwrap();
        // [R_rn, W_rd]: 11 > 15 is false, both stay
        let out = handle(&cfg, &mut state, &Request::write(S1, O1)).unwrap();
        assert!(out.transitions.is_empty());
        // [R_rn, W_rd, W_rd]: 22 > 15
        let out = handle(&cfg, &mut state, &Request::write(S1, O1)).unwrap();
        assert_eq!(out.transitions.iter().filter(|t| t.kind == TransitionKind::Exited).count(), 2);
        assert_eq!(state.flags_set(), 2);
        assert_eq!(state.temp_holders.len(), 2);
        assert!(state.data_list.is_empty());
        (cfg, state)
    }

    #[test]
    fn write_invalidates_flagged_holders() {
        let (cfg, mut state) = two_temp_holders();
        let before = state.version;
        let out = handle(&cfg, &mut state, &Request::write(S1, O1)).unwrap();
        let inv: Vec<_> = out
            .actions
            .iter()
            .filter(|a| matches!(a, Action::Serve { event: WindowEvent::Invalidate, .. }))
            .collect();
        assert_eq!(inv.len(), 2);
        let control: u64 = out
            .charge
            .iter()
            .filter(|c| c.label == crate::cost::ChargeLabel::Control)
            .map(|c| c.units)
            .sum();
        assert_eq!(control, 10);
        assert_eq!(state.flags_set(), 0);
        assert!(state.temp_holders.is_empty());
        assert_eq!(state.version, before + 1);
        let shape = out.write_shape.unwrap();
        assert_eq!(shape, WriteShape { a_before: 2, a_after: 2, writer_in_a: true, n_f: 2, n_f_after: 0 });
        assert_eq!(out.total(), write_cost(&shape, &T));
        assert_eq!(out.total(), 24);
    }

    #[test]
    fn write_charge_matches_formula_for_exits() {
        let (cfg, mut state) = setup();
        handle(&cfg, &mut state, &Request::read(P1, O1)).unwrap();
        let out = handle(&cfg, &mut state, &Request::write(P2, O1)).unwrap();
        let shape = out.write_shape.unwrap();
        assert_eq!(shape, WriteShape { a_before: 3, a_after: 3, writer_in_a: false, n_f: 0, n_f_after: 0 });
        assert_eq!(out.total(), 30 + 3);
        assert_eq!(out.total(), write_cost(&shape, &T));

        let out = handle(&cfg, &mut state, &Request::write(P2, O1)).unwrap();
        let shape = out.write_shape.unwrap();
        assert_eq!(shape, WriteShape { a_before: 3, a_after: 3, writer_in_a: false, n_f: 0, n_f_after: 1 });
        // 3 transfers, 3 stores, 1 flag set
        assert_eq!(out.total(), 30 + 3 + 1);
        assert_eq!(out.total(), write_cost(&shape, &T));
    }

    #[test]
    fn data_writer_records_local_write() {
        let (cfg, mut state) = setup();
        handle(&cfg, &mut state, &Request::read(P1, O1)).unwrap();
        let out = handle(&cfg, &mut state, &Request::write(P1, O1)).unwrap();
        assert_eq!(out.locus, Locus::LocalData);
        assert_eq!(events(&state, P1), vec![WindowEvent::RemoteRead, WindowEvent::DataWrite]);
        // two transfers to servers, three stores
        assert_eq!(out.total(), 23);
        assert_eq!(out.total(), write_cost(&out.write_shape.unwrap(), &T));
        assert!(state.data_list.contains(&P1));
    }

    #[test]
    fn non_data_writer_window_untouched() {
        let (cfg, mut state) = setup();
        state.server_window(P2, cfg.window_capacity).push(WindowEvent::PropagatedWrite);
        state.server_window(P2, cfg.window_capacity).push(WindowEvent::PropagatedWrite);
        handle(&cfg, &mut state, &Request::read(P2, O1)).unwrap();
        handle(&cfg, &mut state, &Request::read(P1, O1)).unwrap();
        let before = events(&state, P2);
        handle(&cfg, &mut state, &Request::write(P2, O1)).unwrap();
        assert_eq!(events(&state, P2), before);
        assert!(!state.data_list.contains(&P2));
    }

    #[test]
    fn txd_own_read_records_and_charges() {
        let (cfg, mut state) = setup();
        handle(&cfg, &mut state, &Request::read(P1, O1)).unwrap();
        let out = txd_handle(&cfg, &mut state, P1, TxdInput::OwnRead).unwrap();
        assert_eq!(out.total(), 1);
        assert_eq!(out.emitted_events, vec![(P1, WindowEvent::DataRead)]);
    }

    fn data_processor_with(events: &[WindowEvent]) -> (SystemConfig, ObjectState) {
        let (cfg, mut state) = setup();
        let mut w = MessageRequestWindow::new(O1, P1, cfg.window_capacity);
        w.location = WindowLocation::AtSubject;
        for e in events {
            w.push(*e);
        }
        state.local_windows.insert(P1, w);
        state.data_list.insert(P1);
        state.stored_version.insert(P1, state.version);
        state.version += 1;
        (cfg, state)
    }

    #[test]
    fn txd_exits_after_two_remote_writes() {
        let (cfg, mut state) = data_processor_with(&[WindowEvent::PropagatedWrite]);
        let out = txd_handle(&cfg, &mut state, P1, TxdInput::Propagated).unwrap();
        assert_eq!(out.total(), 11 + 1);
        assert!(state.flag(S1, P1));
        assert!(state.temp_holders.contains(&P1));
        assert!(!state.data_list.contains(&P1));
        assert_eq!(state.window(P1).unwrap().location, WindowLocation::AtSubject);
        assert_eq!(state.stored_version[&P1], state.version);
    }

    #[test]
    fn txd_reader_stays() {
        let (cfg, mut state) = data_processor_with(&[WindowEvent::DataRead; 5]);
        let out = txd_handle(&cfg, &mut state, P1, TxdInput::Propagated).unwrap();
        assert_eq!(out.total(), 11);
        assert!(state.data_list.contains(&P1));
        assert!(out.transitions.is_empty());
    }

    #[test]
    fn txd_rejects_stale_propagation() {
        let (cfg, mut state) = data_processor_with(&[]);
        state.stored_version.insert(P1, state.version);
        let err = txd_handle(&cfg, &mut state, P1, TxdInput::Propagated).unwrap_err();
        assert!(matches!(err, ProtocolFault::StaleUpdate { .. }));
    }

    #[test]
    fn txd_rejects_non_data_subject() {
        let (cfg, mut state) = setup();
        assert_eq!(
            txd_handle(&cfg, &mut state, P1, TxdInput::OwnRead).unwrap_err(),
            ProtocolFault::NotDataProcessor(P1)
        );
    }

    #[test]
    fn tf_local_read() {
        let (cfg, mut state) = two_temp_holders();
        let out = handle(&cfg, &mut state, &Request::read(P1, O1)).unwrap();
        assert_eq!(out.locus, Locus::LocalTemp);
        assert_eq!(out.total(), 1);
        assert_eq!(out.emitted_events, vec![(P1, WindowEvent::TempRead)]);
        assert_eq!(out.observed_version, Some(state.version));
    }

    #[test]
    fn tf_invalidation_returns_window() {
        let (cfg, mut state) = two_temp_holders();
        tf_handle(&cfg, &mut state, P1, TfInput::Read).unwrap();
        tf_handle(&cfg, &mut state, P1, TfInput::Read).unwrap();
        let out = tf_handle(&cfg, &mut state, P1, TfInput::Invalidate).unwrap();
        assert_eq!(out.transitions[0].kind, TransitionKind::Invalidated);
        assert!(!state.stored_version.contains_key(&P1));
        assert!(!state.temp_holders.contains(&P1));
        let w = state.server_windows.get(&P1).unwrap();
        assert_eq!(w.location, WindowLocation::AtServer);
        let ev: Vec<_> = w.events().collect();
        assert_eq!(
            ev[ev.len() - 3..],
            [WindowEvent::TempRead, WindowEvent::TempRead, WindowEvent::Invalidate]
        );
    }

    #[test]
    fn tf_rejects_invalidation_without_copy() {
        let (cfg, mut state) = setup();
        assert_eq!(
            tf_handle(&cfg, &mut state, P1, TfInput::Invalidate).unwrap_err(),
            ProtocolFault::InvalidationWithoutCopy(P1)
        );
    }
}
