//! Adversarial cohorts layered onto a run.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gossip::RelayOverride;
use crate::ids::{NodeId, TopicId};
use crate::net::{OverlayGraph, SubscriptionTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    /// Attackers subscribe to a victim topic but never relay its messages.
    TopicWithhold,
    /// Attackers form a complete clique and try to fill honest nodes' slots.
    Eclipse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub kind: AttackKind,
    pub attackers: usize,
    /// Required for topic-withhold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub victim_topic: Option<u32>,
    /// Eclipse attackers stop relaying everything instead of forwarding honestly.
    #[serde(default)]
    pub withhold: bool,
}

impl AttackConfig {
    pub fn violations(&self, n: usize, num_topics: usize, d: usize) -> Vec<String> {
        let mut out = Vec::new();
        if self.attackers >= n {
            out.push(format!("attacker count {} must be below the node count {n}", self.attackers));
        }
        match self.kind {
            AttackKind::TopicWithhold => match self.victim_topic {
                None => out.push("topic-withhold attack needs a victim_topic".into()),
                Some(t) if t as usize >= num_topics => {
                    out.push(format!("victim topic {t} does not exist ({num_topics} topics)"))
                }
                Some(_) => {}
            },
            AttackKind::Eclipse => {
                if self.attackers + d + 1 > n {
                    out.push(format!(
                        "eclipse with {} attackers leaves fewer than d + 1 = {} honest nodes",
                        self.attackers,
                        d + 1
                    ));
                }
            }
        }
        out
    }
}

/// Pick `count` distinct attackers uniformly, ascending by id.
pub fn choose_attackers<R: Rng + ?Sized>(n: usize, count: usize, rng: &mut R) -> Vec<NodeId> {
    let mut picked: Vec<NodeId> =
        rand::seq::index::sample(rng, n, count.min(n)).into_iter().map(NodeId::from).collect();
    picked.sort_unstable();
    picked
}

/// Force every attacker to subscribe to the victim topic and make them
/// silent on it. All other topics are relayed normally.
pub fn apply_topic_withhold(subs: &mut SubscriptionTable, attackers: &[NodeId], victim: TopicId) -> RelayOverride {
    for &a in attackers {
        subs.force_subscription(a, victim);
    }
    RelayOverride::withhold(subs.num_nodes(), attackers, Some(victim))
}

/// Connect every ordered attacker pair outside the degree budget.
///
/// Attackers forward honestly unless `withhold` is set, in which case they
/// relay nothing.
pub fn apply_eclipse(overlay: &mut OverlayGraph, attackers: &[NodeId], withhold: bool) -> RelayOverride {
    for &a in attackers {
        for &b in attackers {
            overlay.pin(a, b);
        }
    }
    if withhold {
        RelayOverride::withhold(overlay.num_nodes(), attackers, None)
    } else {
        RelayOverride::none()
    }
}

/// Share of each observer's outgoing connections that point at attackers.
/// Observers without outgoing connections report 0.
pub fn attacker_share_per_node(overlay: &OverlayGraph, attackers: &[NodeId], observers: &[NodeId]) -> Vec<f64> {
    observers
        .iter()
        .map(|&v| {
            let out = overlay.outgoing(v);
            if out.is_empty() {
                0.0
            } else {
                out.iter().filter(|u| attackers.binary_search(u).is_ok()).count() as f64 / out.len() as f64
            }
        })
        .collect()
}

/// Fraction of all observers' outgoing connections that point at attackers.
pub fn attacker_share(overlay: &OverlayGraph, attackers: &[NodeId], observers: &[NodeId]) -> f64 {
    let (hits, total) = observers.iter().fold((0usize, 0usize), |(h, t), &v| {
        let out = overlay.outgoing(v);
        (h + out.iter().filter(|u| attackers.binary_search(u).is_ok()).count(), t + out.len())
    });
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// [`attacker_share`] for each recorded epoch. `attackers` must be sorted.
pub fn eviction_curve(overlays: &[OverlayGraph], attackers: &[NodeId], observers: &[NodeId]) -> Result<Vec<f64>> {
    if overlays.is_empty() {
        return Err(Error::config("eviction curve needs at least one epoch"));
    }
    Ok(overlays.iter().map(|g| attacker_share(g, attackers, observers)).collect())
}

/// Nodes not in the (sorted) attacker list.
pub fn honest_nodes(n: usize, attackers: &[NodeId]) -> Vec<NodeId> {
    (0..n).map(NodeId::from).filter(|v| attackers.binary_search(v).is_err()).collect()
}
