//! Experiment configuration, validation, overrides and bundled presets.
//!
//! Configurations are TOML documents:
//!
//! ```toml
//! epochs = 60
//! seeds = [1, 2, 3]
//!
//! [network]
//! kind = "unit-square"        # or "matrix"
//! nodes = 200                 # unit-square only
//! # matrix_path = "data/ping.csv"
//! # processing_delay = { min = 0.005, max = 0.015 }
//!
//! [overlay]
//! degree = 6
//! switch_count = 2
//!
//! [topics]
//! count = 20
//! interest_rate = 0.4
//!
//! [gossip]
//! messages_per_epoch = 200
//! initial_ttl = 1
//! # round_interval = 50.0
//!
//! [weights]
//! w_c = 1.0
//! w_d = 3000.0
//! w_w = 0.0
//! eta = 2.0
//!
//! [policy]
//! kind = "topiary"
//!
//! [output]
//! dir = "runs/desk"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adversary::{AttackConfig, AttackKind};
use crate::error::{Error, Result};
use crate::net::{parse_ping_matrix, ProcessingDelay};
use crate::protocols::PolicyKind;
use crate::scoring::{CoverageConvention, ScoreWeights};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NetworkKind {
    UnitSquare,
    Matrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub kind: NetworkKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix_path: Option<PathBuf>,
    /// Defaults depend on the network kind (abstract units vs milliseconds).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub processing_delay: Option<ProcessingDelay>,
}

impl NetworkConfig {
    pub fn processing(&self) -> ProcessingDelay {
        self.processing_delay.unwrap_or(match self.kind {
            NetworkKind::UnitSquare => ProcessingDelay::UNIT_SQUARE,
            NetworkKind::Matrix => ProcessingDelay::MILLISECONDS,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlayConfig {
    pub degree: usize,
    #[serde(default = "default_switch")]
    pub switch_count: usize,
}

fn default_switch() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopicConfig {
    pub count: usize,
    pub interest_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GossipConfig {
    #[serde(default = "default_messages")]
    pub messages_per_epoch: usize,
    #[serde(default = "default_ttl")]
    pub initial_ttl: u32,
    /// Spacing between publication rounds; derived from the network when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round_interval: Option<f64>,
}

fn default_messages() -> usize {
    1000
}

fn default_ttl() -> u32 {
    1
}

impl Default for GossipConfig {
    fn default() -> Self {
        GossipConfig { messages_per_epoch: default_messages(), initial_ttl: default_ttl(), round_interval: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    #[serde(default = "one")]
    pub w_c: f64,
    #[serde(default = "default_wd")]
    pub w_d: f64,
    #[serde(default)]
    pub w_w: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default)]
    pub coverage: CoverageConvention,
}

fn one() -> f64 {
    1.0
}

fn default_wd() -> f64 {
    3000.0
}

fn default_eta() -> f64 {
    2.0
}

impl Default for WeightsConfig {
    fn default() -> Self {
        WeightsConfig { w_c: 1.0, w_d: default_wd(), w_w: 0.0, eta: default_eta(), coverage: CoverageConvention::Miss }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateMode {
    /// Every node rewires at the same time at the end of each epoch.
    Synchronous,
    /// Reserved; rejected by validation.
    Asynchronous,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// Group count for the random-group Scribe baseline.
    #[serde(default = "default_groups")]
    pub num_groups: usize,
    #[serde(default = "default_mode")]
    pub update_mode: UpdateMode,
}

fn default_groups() -> usize {
    40
}

fn default_mode() -> UpdateMode {
    UpdateMode::Synchronous
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig { kind: PolicyKind::Topiary, num_groups: default_groups(), update_mode: UpdateMode::Synchronous }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Write `overlay_epoch_<k>.csv` for every epoch.
    #[serde(default = "yes")]
    pub overlays: bool,
    #[serde(default = "yes")]
    pub exploration: bool,
    /// Every evaluated subset of every node; large.
    #[serde(default)]
    pub subset_scores: bool,
    /// Per-epoch delivery traces; large.
    #[serde(default)]
    pub traces: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from("runs")
}

fn yes() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: default_dir(), overlays: true, exploration: true, subset_scores: false, traces: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub epochs: usize,
    pub seeds: Vec<u64>,
    pub network: NetworkConfig,
    pub overlay: OverlayConfig,
    pub topics: TopicConfig,
    #[serde(default)]
    pub gossip: GossipConfig,
    #[serde(default)]
    pub weights: WeightsConfig,
    #[serde(default)]
    pub policy: PolicyConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack: Option<AttackConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    /// Parse `text` after applying dotted `key=value` overrides.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        doc.try_into().map_err(|e: toml::de::Error| Error::config(e.to_string()))
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_with_overrides(&text, overrides)?;
        if let Some(p) = cfg.network.matrix_path.as_mut() {
            if p.is_relative() {
                if let Some(base) = path.parent() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    /// Apply overrides to an already parsed configuration.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self> {
        Self::from_toml_with_overrides(&self.to_toml(), overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn score_weights(&self) -> ScoreWeights {
        let w = &self.weights;
        let mut sw = ScoreWeights::new(w.w_c, w.w_d, w.w_w, w.eta, self.overlay.degree, self.overlay.switch_count);
        sw.coverage = w.coverage;
        sw
    }

    /// Node count, reading the matrix header when needed.
    pub fn node_count(&self) -> Result<usize> {
        match self.network.kind {
            NetworkKind::UnitSquare => {
                self.network.nodes.ok_or_else(|| Error::config("unit-square network needs `nodes`"))
            }
            NetworkKind::Matrix => {
                let path = self
                    .network
                    .matrix_path
                    .as_ref()
                    .ok_or_else(|| Error::config("matrix network needs `matrix_path`"))?;
                let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
                let (labels, _) =
                    parse_ping_matrix(file).map_err(|reason| Error::Ingestion { path: path.clone(), reason })?;
                Ok(labels.len())
            }
        }
    }
}

/// Set a dotted key (`weights.w_d=1000`) inside a TOML table. The value is
/// parsed as a TOML value and falls back to a plain string.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) =
        assignment.split_once('=').ok_or_else(|| Error::config(format!("override {assignment:?} is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    if key.is_empty() {
        return Err(Error::config(format!("override {assignment:?} has an empty key")));
    }
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    let mut table = doc;
    for part in &parts[..parts.len() - 1] {
        let entry = table.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table =
            entry.as_table_mut().ok_or_else(|| Error::config(format!("override {key}: `{part}` is not a table")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Every violated constraint. An empty list means the configuration is runnable.
pub fn validate_config(cfg: &ExperimentConfig) -> Vec<String> {
    let mut out = Vec::new();
    if cfg.epochs == 0 {
        out.push("epochs must be at least 1".into());
    }
    if cfg.seeds.is_empty() {
        out.push("seeds must list at least one seed".into());
    }
    let mut seen = cfg.seeds.clone();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != cfg.seeds.len() {
        out.push("seeds must be distinct".into());
    }

    let n = match cfg.network.kind {
        NetworkKind::UnitSquare => {
            if cfg.network.matrix_path.is_some() {
                out.push("matrix_path is only valid for matrix networks".into());
            }
            match cfg.network.nodes {
                Some(n) if n >= 2 => Some(n),
                Some(n) => {
                    out.push(format!("nodes must be at least 2 (got {n})"));
                    None
                }
                None => {
                    out.push("unit-square network needs `nodes`".into());
                    None
                }
            }
        }
        NetworkKind::Matrix => match &cfg.network.matrix_path {
            None => {
                out.push("matrix network needs `matrix_path`".into());
                None
            }
            Some(p) if !p.is_file() => {
                out.push(format!("latency matrix {} does not exist", p.display()));
                None
            }
            Some(_) => match cfg.node_count() {
                Ok(n) => {
                    if cfg.network.nodes.is_some_and(|m| m != n) {
                        out.push(format!("nodes = {} disagrees with the matrix size {n}", cfg.network.nodes.unwrap()));
                    }
                    Some(n)
                }
                Err(e) => {
                    out.push(e.to_string());
                    None
                }
            },
        },
    };
    if let Err(e) = cfg.network.processing().validate() {
        out.push(e);
    }

    let d = cfg.overlay.degree;
    if d == 0 {
        out.push("degree must be at least 1".into());
    }
    if let Some(n) = n {
        if d >= n {
            out.push(format!("degree {d} must be below the node count {n}"));
        }
    }
    if cfg.overlay.switch_count > d {
        out.push(format!("switch_count {} exceeds the degree {d}", cfg.overlay.switch_count));
    }

    let t = cfg.topics.count;
    if t == 0 {
        out.push("topic count must be at least 1".into());
    }
    let rate = cfg.topics.interest_rate;
    if !(rate > 0.0 && rate <= 1.0) {
        out.push(format!("interest_rate must lie in (0, 1] (got {rate})"));
    } else if let Some(n) = n {
        // Chance that a given topic ends up with no subscriber at all.
        let p_empty = (1.0 - rate).powf(n as f64);
        if p_empty > 0.5 {
            out.push(format!("interest_rate {rate} is too low for {n} nodes: topics would routinely stay empty"));
        }
    }

    if cfg.gossip.messages_per_epoch == 0 {
        out.push("messages_per_epoch must be at least 1".into());
    }
    if let Some(r) = cfg.gossip.round_interval {
        if !(r > 0.0 && r.is_finite()) {
            out.push(format!("round_interval must be positive (got {r})"));
        }
    }

    if cfg.policy.kind == PolicyKind::Topiary {
        out.extend(cfg.score_weights().violations(d));
    } else if cfg.weights.eta.is_nan() || cfg.weights.eta <= 1.0 {
        out.push(format!("eta must exceed 1 (got {})", cfg.weights.eta));
    }
    if cfg.policy.update_mode == UpdateMode::Asynchronous {
        out.push("asynchronous update mode is not supported".into());
    }
    if cfg.policy.kind == PolicyKind::ScribeRandomGroups && cfg.policy.num_groups == 0 {
        out.push("num_groups must be at least 1".into());
    }

    if let (Some(a), Some(n)) = (&cfg.attack, n) {
        out.extend(a.violations(n, t, d));
        if a.kind == AttackKind::Eclipse && cfg.policy.kind == PolicyKind::CompleteStatic && a.attackers > 0 {
            out.push("an eclipse attack on a complete overlay has no slots to win".into());
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub config: ExperimentConfig,
}

fn unit_square(nodes: usize, topics: usize, messages: usize, epochs: usize) -> ExperimentConfig {
    ExperimentConfig {
        epochs,
        seeds: vec![1],
        network: NetworkConfig {
            kind: NetworkKind::UnitSquare,
            nodes: Some(nodes),
            matrix_path: None,
            processing_delay: None,
        },
        overlay: OverlayConfig { degree: 6, switch_count: 2 },
        topics: TopicConfig { count: topics, interest_rate: 0.4 },
        gossip: GossipConfig { messages_per_epoch: messages, initial_ttl: 1, round_interval: None },
        weights: WeightsConfig::default(),
        policy: PolicyConfig::default(),
        attack: None,
        output: OutputConfig::default(),
    }
}

/// The bundled presets.
pub fn presets() -> Vec<Preset> {
    let mut square = unit_square(1000, 100, 1000, 150);
    square.output.dir = "runs/unit-square-1000".into();

    // One-way delays in milliseconds are 100 times the unit-square scale.
    let mut wonder = unit_square(246, 100, 1000, 150);
    wonder.network = NetworkConfig {
        kind: NetworkKind::Matrix,
        nodes: None,
        matrix_path: Some("data/wondernetwork-246.csv".into()),
        processing_delay: None,
    };
    wonder.overlay.degree = 5;
    wonder.weights.w_d = 30.0;
    wonder.output.dir = "runs/wondernetwork-246".into();

    let mut withhold = unit_square(1000, 100, 1000, 150);
    withhold.attack =
        Some(AttackConfig { kind: AttackKind::TopicWithhold, attackers: 300, victim_topic: Some(0), withhold: false });
    withhold.output.dir = "runs/topic-attack-300".into();

    let mut eclipse = unit_square(1000, 100, 1000, 150);
    eclipse.attack =
        Some(AttackConfig { kind: AttackKind::Eclipse, attackers: 300, victim_topic: None, withhold: false });
    eclipse.output.dir = "runs/eclipse-300".into();

    let mut desk = unit_square(200, 20, 200, 60);
    desk.seeds = vec![1, 2, 3];
    desk.output.dir = "runs/desk-200".into();

    vec![
        Preset {
            name: "unit-square-1000",
            description: "1000 nodes on the unit square, 100 topics, d = 6, 150 epochs",
            config: square,
        },
        Preset {
            name: "wondernetwork-246",
            description: "246 cities from a ping matrix, d = 5, 150 epochs",
            config: wonder,
        },
        Preset { name: "topic-attack-300", description: "300 of 1000 nodes withhold one topic", config: withhold },
        Preset {
            name: "eclipse-300",
            description: "300 of 1000 nodes form a clique and compete for slots",
            config: eclipse,
        },
        Preset { name: "desk-200", description: "200 nodes, 20 topics, 60 epochs, 3 seeds", config: desk },
    ]
}

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    presets().into_iter().find(|p| p.name == name).map(|p| p.config)
}
