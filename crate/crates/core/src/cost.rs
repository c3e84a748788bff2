//! Unit tariff and the per-request cost ledger.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::window::WindowEvent;

/// Unit costs for local I/O, control messages and data messages.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CostTariff {
    pub c_io: u64,
    pub c_c: u64,
    pub c_d: u64,
}

impl CostTariff {
    pub const fn new(c_io: u64, c_c: u64, c_d: u64) -> Self {
        Self { c_io, c_c, c_d }
    }
}

impl Default for CostTariff {
    fn default() -> Self {
        Self::new(1, 5, 10)
    }
}

impl fmt::Display for CostTariff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(c_io={}, c_c={}, c_d={})", self.c_io, self.c_c, self.c_d)
    }
}

/// Price of servicing one window event in isolation.
///
/// Saving-read copies, flag updates and server-side replica updates are not
/// window events and are priced by the caller.
pub fn event_cost(event: WindowEvent, t: &CostTariff) -> u64 {
    match event {
        WindowEvent::DataRead => t.c_io,
        WindowEvent::DataWrite => t.c_io,
        WindowEvent::PropagatedWrite => t.c_d + t.c_io,
        WindowEvent::RemoteRead => t.c_d + t.c_c + t.c_io,
        WindowEvent::TempRead => t.c_io,
        WindowEvent::Invalidate => t.c_c,
    }
}

/// Which tariff component a charge was drawn from.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ChargeLabel {
    #[serde(rename = "io")]
    Io,
    #[serde(rename = "c_c")]
    Control,
    #[serde(rename = "c_d")]
    Data,
}

impl fmt::Display for ChargeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChargeLabel::Io => "io",
            ChargeLabel::Control => "c_c",
            ChargeLabel::Data => "c_d",
        })
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChargeItem {
    pub label: ChargeLabel,
    pub units: u64,
}

impl ChargeItem {
    pub const fn new(label: ChargeLabel, units: u64) -> Self {
        Self { label, units }
    }
    pub const fn io(units: u64) -> Self {
        Self::new(ChargeLabel::Io, units)
    }
    pub const fn control(units: u64) -> Self {
        Self::new(ChargeLabel::Control, units)
    }
    pub const fn data(units: u64) -> Self {
        Self::new(ChargeLabel::Data, units)
    }
}

impl fmt::Display for ChargeItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.label, self.units)
    }
}

pub fn sum_charges(items: &[ChargeItem]) -> u64 {
    items.iter().map(|c| c.units).sum()
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub request: usize,
    pub label: ChargeLabel,
    pub units: u64,
}

/// Append-only list of charges with a running total.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLedger {
    entries: Vec<LedgerEntry>,
    running_total: u64,
}

impl CostLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, request: usize, item: ChargeItem) {
        self.entries.push(LedgerEntry {
            request,
            label: item.label,
            units: item.units,
        });
        self.running_total += item.units;
    }

    pub fn record_all(&mut self, request: usize, items: &[ChargeItem]) {
        for item in items {
            self.record(request, *item);
        }
    }

    pub fn running_total(&self) -> u64 {
        self.running_total
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    /// Sum of all charges recorded against one request.
    pub fn request_total(&self, request: usize) -> u64 {
        self.entries
            .iter()
            .filter(|e| e.request == request)
            .map(|e| e.units)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_tariff_prices() {
        let t = CostTariff::default();
        assert_eq!(event_cost(WindowEvent::RemoteRead, &t), 16);
        assert_eq!(event_cost(WindowEvent::PropagatedWrite, &t), 11);
        assert_eq!(event_cost(WindowEvent::DataRead, &t), 1);
        assert_eq!(event_cost(WindowEvent::TempRead, &t), 1);
        assert_eq!(event_cost(WindowEvent::DataWrite, &t), 1);
        assert_eq!(event_cost(WindowEvent::Invalidate, &t), 5);
    }

    #[test]
    fn zero_tariff_is_free() {
        let t = CostTariff::new(0, 0, 0);
        for e in WindowEvent::ALL {
            assert_eq!(event_cost(e, &t), 0);
        }
    }

    proptest! {
        #[test]
        fn event_cost_is_monotone(io in 0u64..100, c in 0u64..100, d in 0u64..100, bump in 1u64..10) {
            let base = CostTariff::new(io, c, d);
            for bumped in [
                CostTariff::new(io + bump, c, d),
                CostTariff::new(io, c + bump, d),
                CostTariff::new(io, c, d + bump),
            ] {
                for e in WindowEvent::ALL {
                    prop_assert!(event_cost(e, &bumped) >= event_cost(e, &base));
                }
            }
        }

        #[test]
        fn ledger_total_is_sum_of_entries(items in proptest::collection::vec((0usize..5, 0u64..1000), 0..64)) {
            let mut ledger = CostLedger::new();
            for (i, (req, units)) in items.iter().enumerate() {
                let item = match i % 3 {
                    0 => ChargeItem::io(*units),
                    1 => ChargeItem::control(*units),
                    _ => ChargeItem::data(*units),
                };
                ledger.record(*req, item);
                let sum: u64 = ledger.entries().iter().map(|e| e.units).sum();
                prop_assert_eq!(ledger.running_total(), sum);
            }
        }
    }
}
