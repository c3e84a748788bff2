//! Node and object identifiers, system configuration and requests.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::CostTariff;

pub const DEFAULT_WINDOW_CAPACITY: usize = 10;

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Regular,
    Server,
}

/// A node: role tag plus its index within that role's list in the configuration.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId {
    role: Role,
    index: u16,
}

impl NodeId {
    pub const fn new(role: Role, index: u16) -> Self {
        Self { role, index }
    }
    pub const fn regular(index: u16) -> Self {
        Self::new(Role::Regular, index)
    }
    pub const fn server(index: u16) -> Self {
        Self::new(Role::Server, index)
    }
    pub fn role(self) -> Role {
        self.role
    }
    pub fn index(self) -> usize {
        self.index as usize
    }
    pub fn is_server(self) -> bool {
        self.role == Role::Server
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ObjectId(u16);

impl ObjectId {
    pub const fn new(index: u16) -> Self {
        Self(index)
    }
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Baseline enter/exit rule used by ADRW.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdrwRule {
    #[default]
    CostBased,
    CountBased,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("duplicate identifier `{0}`")]
    Duplicate(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("`{0}` is not a server")]
    NotAServer(String),
    #[error("`{0}` is not a regular processor")]
    NotARegular(String),
    #[error("server set of `{0}` is empty")]
    EmptyServerSet(String),
    #[error("nearest server `{server}` of `{node}` for `{object}` is not in the object's server set")]
    NearestOutsideServerSet {
        node: String,
        object: String,
        server: String,
    },
    #[error("configuration needs at least one server and one object")]
    Empty,
    #[error("window capacity must be at least 1")]
    ZeroWindow,
    #[error("too many identifiers (limit {0})")]
    TooMany(usize),
    #[error("reading config: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing config: {0}")]
    Json(#[from] serde_json::Error),
}

/// JSON form of [`SystemConfig`], addressed by names.
///
/// `server_set` and `nearest_server` are optional; missing entries default to
/// every server and to round-robin assignment by processor index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub regular_processors: Vec<String>,
    pub servers: Vec<String>,
    pub objects: Vec<String>,
    #[serde(default)]
    pub server_set: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub nearest_server: BTreeMap<String, BTreeMap<String, String>>,
    #[serde(default)]
    pub tariff: CostTariff,
    #[serde(default = "default_window_capacity")]
    pub window_capacity: usize,
    #[serde(default)]
    pub adrw_rule: AdrwRule,
    #[serde(default)]
    pub seed: u64,
}

fn default_window_capacity() -> usize {
    DEFAULT_WINDOW_CAPACITY
}

/// Validated system configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemConfig {
    regular_names: Vec<String>,
    server_names: Vec<String>,
    object_names: Vec<String>,
    /// Indexed by object.
    server_sets: Vec<Vec<NodeId>>,
    /// Indexed by regular processor, then object.
    nearest: Vec<Vec<NodeId>>,
    pub tariff: CostTariff,
    pub window_capacity: usize,
    pub adrw_rule: AdrwRule,
    pub seed: u64,
}

impl SystemConfig {
    /// Seven processors, two servers replicating all five objects, tariff (1, 5, 10).
    /// Seven regular processors, two servers and five objects. Each object
    /// lives on one server, assigned round-robin (o1→s1, o2→s2, o3→s1, ...).
    pub fn standard() -> Self {
        let mut file = Self::standard_file();
        file.server_set = file
            .objects
            .iter()
            .enumerate()
            .map(|(i, o)| (o.clone(), vec![file.servers[i % file.servers.len()].clone()]))
            .collect();
        Self::from_file(file).expect("standard configuration is valid")
    }

    /// The standard nodes and objects with both servers replicating every object.
    pub fn shared_servers() -> Self {
        Self::from_file(Self::standard_file()).expect("standard configuration is valid")
    }

    fn standard_file() -> ConfigFile {
        let names = |prefix: &str, n: usize| (1..=n).map(|i| format!("{prefix}{i}")).collect();
        ConfigFile {
            regular_processors: names("p", 7),
            servers: names("s", 2),
            objects: names("o", 5),
            server_set: BTreeMap::new(),
            nearest_server: BTreeMap::new(),
            tariff: CostTariff::default(),
            window_capacity: DEFAULT_WINDOW_CAPACITY,
            adrw_rule: AdrwRule::default(),
            seed: 0,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Self::from_file(serde_json::from_str(text)?)
    }

    pub fn from_file(file: ConfigFile) -> Result<Self, ConfigError> {
        if file.servers.is_empty() || file.objects.is_empty() {
            return Err(ConfigError::Empty);
        }
        if file.window_capacity == 0 {
            return Err(ConfigError::ZeroWindow);
        }
        let limit = u16::MAX as usize;
        for list in [&file.regular_processors, &file.servers, &file.objects] {
            if list.len() > limit {
                return Err(ConfigError::TooMany(limit));
            }
        }
        let mut seen = BTreeSet::new();
        for name in file
            .regular_processors
            .iter()
            .chain(&file.servers)
            .chain(&file.objects)
        {
            if !seen.insert(name.as_str()) {
                return Err(ConfigError::Duplicate(name.clone()));
            }
        }

        let mut cfg = SystemConfig {
            regular_names: file.regular_processors.clone(),
            server_names: file.servers.clone(),
            object_names: file.objects.clone(),
            server_sets: Vec::new(),
            nearest: Vec::new(),
            tariff: file.tariff,
            window_capacity: file.window_capacity,
            adrw_rule: file.adrw_rule,
            seed: file.seed,
        };

        for name in file.server_set.keys() {
            cfg.object_by_name(name)
                .ok_or_else(|| ConfigError::UnknownObject(name.clone()))?;
        }
        let all_servers: Vec<NodeId> = (0..file.servers.len() as u16).map(NodeId::server).collect();
        for object in &file.objects {
            let set = match file.server_set.get(object) {
                None => all_servers.clone(),
                Some(names) => {
                    let mut set = Vec::new();
                    for n in names {
                        let node = cfg
                            .node_by_name(n)
                            .ok_or_else(|| ConfigError::UnknownNode(n.clone()))?;
                        if !node.is_server() {
                            return Err(ConfigError::NotAServer(n.clone()));
                        }
                        if !set.contains(&node) {
                            set.push(node);
                        }
                    }
                    set.sort();
                    set
                }
            };
            if set.is_empty() {
                return Err(ConfigError::EmptyServerSet(object.clone()));
            }
            cfg.server_sets.push(set);
        }

        for (p, overrides) in &file.nearest_server {
            let node = cfg
                .node_by_name(p)
                .ok_or_else(|| ConfigError::UnknownNode(p.clone()))?;
            if node.is_server() {
                return Err(ConfigError::NotARegular(p.clone()));
            }
            for o in overrides.keys() {
                cfg.object_by_name(o)
                    .ok_or_else(|| ConfigError::UnknownObject(o.clone()))?;
            }
        }
        for (pi, pname) in file.regular_processors.iter().enumerate() {
            let mut row = Vec::with_capacity(file.objects.len());
            for (oi, oname) in file.objects.iter().enumerate() {
                let set = &cfg.server_sets[oi];
                let chosen = match file.nearest_server.get(pname).and_then(|m| m.get(oname)) {
                    None => set[pi % set.len()],
                    Some(sname) => {
                        let s = cfg
                            .node_by_name(sname)
                            .ok_or_else(|| ConfigError::UnknownNode(sname.clone()))?;
                        if !set.contains(&s) {
                            return Err(ConfigError::NearestOutsideServerSet {
                                node: pname.clone(),
                                object: oname.clone(),
                                server: sname.clone(),
                            });
                        }
                        s
                    }
                };
                row.push(chosen);
            }
            cfg.nearest.push(row);
        }
        Ok(cfg)
    }

    /// Fully explicit JSON form (every default spelled out).
    pub fn to_file(&self) -> ConfigFile {
        let names = |nodes: &[NodeId]| nodes.iter().map(|&n| self.node_name(n).to_owned()).collect();
        ConfigFile {
            regular_processors: self.regular_names.clone(),
            servers: self.server_names.clone(),
            objects: self.object_names.clone(),
            server_set: self
                .objects()
                .map(|o| (self.object_name(o).to_owned(), names(self.server_set(o))))
                .collect(),
            nearest_server: self
                .regulars()
                .map(|p| {
                    let row = self
                        .objects()
                        .map(|o| {
                            let s = self.nearest_server(p, o);
                            (self.object_name(o).to_owned(), self.node_name(s).to_owned())
                        })
                        .collect();
                    (self.node_name(p).to_owned(), row)
                })
                .collect(),
            tariff: self.tariff,
            window_capacity: self.window_capacity,
            adrw_rule: self.adrw_rule,
            seed: self.seed,
        }
    }

    pub fn regulars(&self) -> impl ExactSizeIterator<Item = NodeId> + Clone {
        (0..self.regular_names.len() as u16).map(NodeId::regular)
    }

    pub fn servers(&self) -> impl ExactSizeIterator<Item = NodeId> + Clone {
        (0..self.server_names.len() as u16).map(NodeId::server)
    }

    pub fn objects(&self) -> impl ExactSizeIterator<Item = ObjectId> + Clone {
        (0..self.object_names.len() as u16).map(ObjectId::new)
    }

    pub fn contains_node(&self, node: NodeId) -> bool {
        match node.role() {
            Role::Regular => node.index() < self.regular_names.len(),
            Role::Server => node.index() < self.server_names.len(),
        }
    }

    pub fn contains_object(&self, object: ObjectId) -> bool {
        object.index() < self.object_names.len()
    }

    /// `S(o)`, sorted.
    pub fn server_set(&self, object: ObjectId) -> &[NodeId] {
        &self.server_sets[object.index()]
    }

    pub fn is_server_for(&self, node: NodeId, object: ObjectId) -> bool {
        self.server_set(object).contains(&node)
    }

    /// The server a node talks to for `object`. A member of `S(o)` is its own
    /// nearest server.
    ///
    /// # Panics
    ///
    /// If `node` is a server outside `S(o)`.
    pub fn nearest_server(&self, node: NodeId, object: ObjectId) -> NodeId {
        match node.role() {
            Role::Regular => self.nearest[node.index()][object.index()],
            Role::Server => {
                assert!(self.is_server_for(node, object), "server outside S(o)");
                node
            }
        }
    }

    pub fn node_name(&self, node: NodeId) -> &str {
        match node.role() {
            Role::Regular => &self.regular_names[node.index()],
            Role::Server => &self.server_names[node.index()],
        }
    }

    pub fn object_name(&self, object: ObjectId) -> &str {
        &self.object_names[object.index()]
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        if let Some(i) = self.regular_names.iter().position(|n| n == name) {
            return Some(NodeId::regular(i as u16));
        }
        self.server_names
            .iter()
            .position(|n| n == name)
            .map(|i| NodeId::server(i as u16))
    }

    pub fn object_by_name(&self, name: &str) -> Option<ObjectId> {
        self.object_names
            .iter()
            .position(|n| n == name)
            .map(|i| ObjectId::new(i as u16))
    }

    /// Checks that a request references configured identifiers and is
    /// routable (servers may only issue requests for objects they serve).
    pub fn validate_request(&self, req: &Request) -> Result<(), String> {
        if !self.contains_node(req.requester) {
            return Err(format!("unknown requester {:?}", req.requester));
        }
        if !self.contains_object(req.object) {
            return Err(format!("unknown object {:?}", req.object));
        }
        if req.requester.is_server() && !self.is_server_for(req.requester, req.object) {
            return Err(format!(
                "server {} does not serve {}",
                self.node_name(req.requester),
                self.object_name(req.object)
            ));
        }
        Ok(())
    }

    pub fn display_request(&self, req: &Request) -> String {
        format!(
            "{} {} {}",
            req.kind,
            self.node_name(req.requester),
            self.object_name(req.object)
        )
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RequestKind {
    Read,
    Write,
}

impl fmt::Display for RequestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RequestKind::Read => "R",
            RequestKind::Write => "W",
        })
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Request {
    pub kind: RequestKind,
    pub requester: NodeId,
    pub object: ObjectId,
}

impl Request {
    pub const fn read(requester: NodeId, object: ObjectId) -> Self {
        Self { kind: RequestKind::Read, requester, object }
    }
    pub const fn write(requester: NodeId, object: ObjectId) -> Self {
        Self { kind: RequestKind::Write, requester, object }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_shape() {
        let cfg = SystemConfig::standard();
        assert_eq!(cfg.regulars().len(), 7);
        assert_eq!(cfg.servers().len(), 2);
        assert_eq!(cfg.objects().len(), 5);
        let expected = [0, 1, 0, 1, 0];
        for (o, s) in cfg.objects().zip(expected) {
            assert_eq!(cfg.server_set(o), &[NodeId::server(s)]);
            for p in cfg.regulars() {
                assert_eq!(cfg.nearest_server(p, o), NodeId::server(s));
            }
        }
        assert_eq!(cfg.tariff, CostTariff::new(1, 5, 10));
        assert_eq!(cfg.window_capacity, DEFAULT_WINDOW_CAPACITY);
    }

    #[test]
    fn shared_servers_round_robin_by_processor() {
        let cfg = SystemConfig::shared_servers();
        for o in cfg.objects() {
            assert_eq!(cfg.server_set(o), &[NodeId::server(0), NodeId::server(1)]);
        }
        let o = ObjectId::new(0);
        assert_eq!(cfg.nearest_server(NodeId::regular(0), o), NodeId::server(0));
        assert_eq!(cfg.nearest_server(NodeId::regular(1), o), NodeId::server(1));
        assert_eq!(cfg.nearest_server(NodeId::regular(2), o), NodeId::server(0));
        assert_eq!(cfg.tariff, CostTariff::new(1, 5, 10));
        assert_eq!(cfg.window_capacity, DEFAULT_WINDOW_CAPACITY);
    }

    #[test]
    fn names_resolve() {
        let cfg = SystemConfig::standard();
        assert_eq!(cfg.node_by_name("p3"), Some(NodeId::regular(2)));
        assert_eq!(cfg.node_by_name("s2"), Some(NodeId::server(1)));
        assert_eq!(cfg.node_by_name("p8"), None);
        assert_eq!(cfg.object_by_name("o5"), Some(ObjectId::new(4)));
        assert_eq!(cfg.node_name(NodeId::server(0)), "s1");
    }

    #[test]
    fn explicit_file_round_trips() {
        let cfg = SystemConfig::standard();
        let again = SystemConfig::from_file(cfg.to_file()).unwrap();
        assert_eq!(cfg, again);
        let json = serde_json::to_string(&cfg.to_file()).unwrap();
        assert_eq!(SystemConfig::from_json(&json).unwrap(), cfg);
    }

    #[test]
    fn minimal_json_uses_defaults() {
        let cfg = SystemConfig::from_json(
            r#"{"regular_processors":["a","b"],"servers":["s"],"objects":["x"]}"#,
        )
        .unwrap();
        assert_eq!(cfg.tariff, CostTariff::default());
        assert_eq!(cfg.adrw_rule, AdrwRule::CostBased);
        assert_eq!(cfg.nearest_server(NodeId::regular(1), ObjectId::new(0)), NodeId::server(0));
    }

    #[test]
    fn rejects_bad_configs() {
        let base = SystemConfig::standard().to_file();

        let mut f = base.clone();
        f.server_set.insert("o1".into(), vec![]);
        assert!(matches!(SystemConfig::from_file(f), Err(ConfigError::EmptyServerSet(_))));

        let mut f = base.clone();
        f.server_set.insert("o1".into(), vec!["s1".into()]);
        f.nearest_server.get_mut("p2").unwrap().insert("o1".into(), "s2".into());
        assert!(matches!(
            SystemConfig::from_file(f),
            Err(ConfigError::NearestOutsideServerSet { .. })
        ));

        let mut f = base.clone();
        f.window_capacity = 0;
        assert!(matches!(SystemConfig::from_file(f), Err(ConfigError::ZeroWindow)));

        let mut f = base.clone();
        f.servers.push("p1".into());
        assert!(matches!(SystemConfig::from_file(f), Err(ConfigError::Duplicate(_))));

        let mut f = base;
        f.server_set.insert("o1".into(), vec!["p1".into()]);
        assert!(matches!(SystemConfig::from_file(f), Err(ConfigError::NotAServer(_))));
    }

    #[test]
    fn server_requests_outside_server_set_are_rejected() {
        let mut f = SystemConfig::standard().to_file();
        f.server_set.insert("o1".into(), vec!["s1".into()]);
        for row in f.nearest_server.values_mut() {
            row.insert("o1".into(), "s1".into());
        }
        let cfg = SystemConfig::from_file(f).unwrap();
        let o1 = ObjectId::new(0);
        assert!(cfg.validate_request(&Request::read(NodeId::server(1), o1)).is_err());
        assert!(cfg.validate_request(&Request::read(NodeId::server(0), o1)).is_ok());
        assert!(cfg.validate_request(&Request::read(NodeId::regular(9), o1)).is_err());
    }
}
