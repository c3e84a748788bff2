use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baseline::{adrw_handle, sa_handle, SaScheme};
use crate::model::{Request, SystemConfig};
use crate::orad;
use crate::state::{ObjectState, PolicyOutcome, ProtocolFault};

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Orad,
    Adrw,
    Sa,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::Orad, PolicyKind::Adrw, PolicyKind::Sa];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Orad => "orad",
            PolicyKind::Adrw => "adrw",
            PolicyKind::Sa => "sa",
        }
    }

    /// Services one request; the engine guarantees sequential, per-object calls.
    pub fn handle(self, cfg: &SystemConfig, state: &mut ObjectState, req: &Request) -> Result<PolicyOutcome, ProtocolFault> {
        match self {
            PolicyKind::Orad => orad::handle(cfg, state, req),
            PolicyKind::Adrw => adrw_handle(cfg, state, req, cfg.adrw_rule),
            PolicyKind::Sa => sa_handle(cfg, state, &SaScheme::for_object(cfg, req.object), req),
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown policy `{0}` (expected orad, adrw or sa)")]
pub struct UnknownPolicy(pub String);

impl FromStr for PolicyKind {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "orad" => Ok(PolicyKind::Orad),
            "adrw" => Ok(PolicyKind::Adrw),
            "sa" => Ok(PolicyKind::Sa),
            _ => Err(UnknownPolicy(s.to_owned())),
        }
    }
}
