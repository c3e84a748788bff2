//! Independent re-derivation of run totals and membership.
//!
//! Nothing here reads handler charges: costs come from pricing the action
//! log, membership from replaying the transition log.

use std::collections::BTreeSet;

use crate::cost::{event_cost, CostTariff};
use crate::engine::{RequestRecord, RunResult, TransitionRecord};
use crate::model::{NodeId, SystemConfig};
use crate::policy::PolicyKind;
use crate::state::{Action, ObjectState, TransitionKind};

pub fn price_action(action: &Action, t: &CostTariff) -> u64 {
    match *action {
        Action::Serve { event, .. } => event_cost(event, t),
        Action::SaveCopy { .. } | Action::FlagSet { .. } | Action::FlagReset { .. } => t.c_io,
        Action::ReplicaUpdate { transfer, .. } => t.c_io + if transfer { t.c_d } else { 0 },
    }
}

pub fn replay_request(record: &RequestRecord, t: &CostTariff) -> u64 {
    record.actions.iter().map(|a| price_action(a, t)).sum()
}

/// Run total as re-derived from the action log.
pub fn replay_total(result: &RunResult) -> u64 {
    let t = &result.metadata.tariff;
    result.records.iter().map(|r| replay_request(r, t)).sum()
}

/// Data list and temporary holders of one object, rebuilt from transitions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Membership {
    pub data_list: BTreeSet<NodeId>,
    pub temp_holders: BTreeSet<NodeId>,
}

/// Replays the transition log from the initial state. Under ORAD an exiting
/// processor keeps a temporary copy; under the baselines it simply drops out.
pub fn replay_membership(cfg: &SystemConfig, policy: PolicyKind, transitions: &[TransitionRecord]) -> Vec<Membership> {
    let mut out = vec![Membership::default(); cfg.objects().count()];
    for tr in transitions {
        let m = &mut out[tr.object.index()];
        match tr.kind {
            TransitionKind::Entered => {
                m.temp_holders.remove(&tr.node);
                m.data_list.insert(tr.node);
            }
            TransitionKind::Exited => {
                m.data_list.remove(&tr.node);
                if policy == PolicyKind::Orad {
                    m.temp_holders.insert(tr.node);
                }
            }
            TransitionKind::Invalidated => {
                m.temp_holders.remove(&tr.node);
            }
        }
    }
    out
}

/// Compares replayed membership with the engine's final states; returns the
/// objects that disagree.
pub fn membership_mismatches(cfg: &SystemConfig, result: &RunResult) -> Vec<usize> {
    replay_membership(cfg, result.metadata.policy, &result.transitions)
        .iter()
        .zip(&result.final_states)
        .enumerate()
        .filter(|(_, (m, s))| m.data_list != s.data_list || m.temp_holders != s.temp_holders)
        .map(|(i, _)| i)
        .collect()
}

/// Every set flag was raised once and every invalidation lowered one, so
/// toggles must equal `2·Inv + flags currently set`.
pub fn flag_toggle_identity_holds(state: &ObjectState) -> bool {
    state.flag_toggles == 2 * state.invalidations + state.flags_set() as u64
}
