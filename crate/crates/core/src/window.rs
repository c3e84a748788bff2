//! Bounded message & request windows and the decision counters derived from them.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{NodeId, ObjectId};

/// One entry in a node's history for an object.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum WindowEvent {
    /// Local read by a data processor (`R_ld`).
    DataRead,
    /// Read by a non-data processor served through its server (`R_rn`).
    RemoteRead,
    /// Local read of a temporary copy by a non-data processor (`R_ln`).
    TempRead,
    /// Write issued by a data processor on its own replica (`W_ld`).
    DataWrite,
    /// Write propagated from a server (`W_rd`).
    PropagatedWrite,
    /// Invalidation control message from a server (`Inv`).
    Invalidate,
}

impl WindowEvent {
    pub const ALL: [WindowEvent; 6] = [
        WindowEvent::DataRead,
        WindowEvent::RemoteRead,
        WindowEvent::TempRead,
        WindowEvent::DataWrite,
        WindowEvent::PropagatedWrite,
        WindowEvent::Invalidate,
    ];
}

impl fmt::Display for WindowEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WindowEvent::DataRead => "R_ld",
            WindowEvent::RemoteRead => "R_rn",
            WindowEvent::TempRead => "R_ln",
            WindowEvent::DataWrite => "W_ld",
            WindowEvent::PropagatedWrite => "W_rd",
            WindowEvent::Invalidate => "Inv",
        })
    }
}

/// Where a window currently lives.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowLocation {
    AtServer,
    AtSubject,
}

/// Whether a window's subject currently holds a replica.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowRole {
    Data,
    NonData,
}

/// Bounded FIFO history of one subject's events for one object.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageRequestWindow {
    pub object: ObjectId,
    pub subject: NodeId,
    pub location: WindowLocation,
    capacity: usize,
    events: VecDeque<WindowEvent>,
}

impl MessageRequestWindow {
    /// # Panics
    ///
    /// If `capacity` is zero.
    pub fn new(object: ObjectId, subject: NodeId, capacity: usize) -> Self {
        assert!(capacity >= 1, "window capacity must be positive");
        Self {
            object,
            subject,
            location: WindowLocation::AtServer,
            capacity,
            events: VecDeque::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, event: WindowEvent) {
        if self.events.len() == self.capacity {
            self.events.pop_front();
        }
        self.events.push_back(event);
    }

    pub fn events(&self) -> impl ExactSizeIterator<Item = WindowEvent> + '_ {
        self.events.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn counters(&self) -> DecisionCounters {
        DecisionCounters::from_events(self.events())
    }
}

/// Request and message counts feeding the enter/exit tests.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DecisionCounters {
    /// Total reads.
    pub n_tr: u64,
    /// Total writes.
    pub n_tw: u64,
    /// Writes issued locally by a data processor.
    pub n_wld: u64,
    /// Local reads of a temporary copy.
    pub n_rln: u64,
    /// Invalidations received.
    pub n_inv: u64,
}

impl DecisionCounters {
    /// Counts every retained event, whichever role the subject held when it
    /// was recorded. A window that just moved to a new data processor still
    /// carries the remote reads that justified the move, so the exit test
    /// weighs the same history the enter test did.
    pub fn from_events<I>(events: I) -> Self
    where
        I: IntoIterator<Item = WindowEvent>,
    {
        let mut c = Self::default();
        for event in events {
            match event {
                WindowEvent::DataRead | WindowEvent::RemoteRead => c.n_tr += 1,
                WindowEvent::TempRead => {
                    c.n_tr += 1;
                    c.n_rln += 1;
                }
                WindowEvent::DataWrite => {
                    c.n_tw += 1;
                    c.n_wld += 1;
                }
                WindowEvent::PropagatedWrite => c.n_tw += 1,
                WindowEvent::Invalidate => c.n_inv += 1,
            }
        }
        c
    }
}

/// Decision counters for `window`.
pub fn derive_counters(window: &MessageRequestWindow) -> DecisionCounters {
    window.counters()
}
