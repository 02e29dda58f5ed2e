//! Per-epoch overlay policies: the adaptive scoring protocol and static baselines.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::explore::{plan_exploration, ExplorationPlan};
use crate::gossip::{EpochTrace, ObservationLog};
use crate::ids::NodeId;
use crate::net::{complete_overlay, random_overlay, OverlayGraph, SubscriptionTable};
use crate::rng::{node_stream, Stream};
use crate::scoring::{argmin, interested_published, score_subsets, ScoreWeights, SubsetScore};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Topiary,
    RandomStatic,
    CompleteStatic,
    GossipsubLike,
    ScribeRandomGroups,
    ScribeTopicGroups,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 6] = [
        PolicyKind::Topiary,
        PolicyKind::RandomStatic,
        PolicyKind::CompleteStatic,
        PolicyKind::GossipsubLike,
        PolicyKind::ScribeRandomGroups,
        PolicyKind::ScribeTopicGroups,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Topiary => "topiary",
            PolicyKind::RandomStatic => "random-static",
            PolicyKind::CompleteStatic => "complete-static",
            PolicyKind::GossipsubLike => "gossipsub-like",
            PolicyKind::ScribeRandomGroups => "scribe-random-groups",
            PolicyKind::ScribeTopicGroups => "scribe-topic-groups",
        }
    }

    pub fn is_static(self) -> bool {
        self != PolicyKind::Topiary
    }
}

/// How nodes are grouped before building Scribe trees.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Grouping {
    /// Each node joins one of `num_groups` groups uniformly at random.
    Random,
    /// One group per topic holding its subscribers.
    ByTopic,
}

/// The epoch-0 overlay for `kind`.
pub fn initial_overlay<R: Rng + ?Sized>(
    kind: PolicyKind,
    subs: &SubscriptionTable,
    d: usize,
    num_groups: usize,
    rng: &mut R,
) -> Result<OverlayGraph> {
    let n = subs.num_nodes();
    match kind {
        PolicyKind::Topiary | PolicyKind::RandomStatic => random_overlay(n, d, rng),
        PolicyKind::CompleteStatic => complete_overlay(n),
        PolicyKind::GossipsubLike => Ok(gossipsub_like_overlay(subs, d, rng)),
        PolicyKind::ScribeRandomGroups => Ok(scribe_overlay(subs, d, Grouping::Random, num_groups, rng)),
        PolicyKind::ScribeTopicGroups => Ok(scribe_overlay(subs, d, Grouping::ByTopic, num_groups, rng)),
    }
}

/// Outcome of one node's end-of-epoch update.
#[derive(Clone, Debug)]
pub struct TopiaryUpdate {
    pub node: NodeId,
    pub outgoing: Vec<NodeId>,
    /// The kept subset and its score; `None` when nothing was published on
    /// the node's topics by anyone else, in which case the node keeps its
    /// connections.
    pub retained: Option<SubsetScore>,
    pub plan: ExplorationPlan,
    /// Every evaluated subset, when requested.
    pub evaluated: Vec<SubsetScore>,
}

/// Keep the best-scoring subset of the current outgoing neighbors and fill
/// the freed slots by exploration.
#[allow(clippy::too_many_arguments)]
pub fn topiary_epoch_update<R: Rng + ?Sized>(
    node: NodeId,
    outgoing: &[NodeId],
    log: &ObservationLog,
    subs: &SubscriptionTable,
    published: &[u32],
    weights: &ScoreWeights,
    keep_evaluated: bool,
    rng: &mut R,
) -> Result<TopiaryUpdate> {
    let interests = subs.topics(node);
    if interested_published(interests, published) == 0 {
        return Ok(TopiaryUpdate {
            node,
            outgoing: outgoing.to_vec(),
            retained: None,
            plan: ExplorationPlan::default(),
            evaluated: Vec::new(),
        });
    }
    let scores = score_subsets(outgoing, log, interests, published, weights)?;
    let evaluated = if keep_evaluated { scores.clone() } else { Vec::new() };
    let best = argmin(scores);
    let degree = weights.keep_count + weights.switch_count;
    let pool = subs.num_nodes() - 1 - best.subset.len();
    let count = degree.saturating_sub(best.subset.len()).min(pool);
    let plan = plan_exploration(node, &best.subset, log, subs, published, weights, count, rng)?;
    let mut next = best.subset.clone();
    next.extend_from_slice(&plan.sampled);
    Ok(TopiaryUpdate { node, outgoing: next, retained: Some(best), plan, evaluated })
}

/// Apply [`topiary_epoch_update`] to every node at once.
///
/// All nodes decide on the same finished epoch trace; the returned overlay
/// takes effect for the next epoch. Nodes listed in `frozen` keep their
/// connections. Each node draws from its own stream keyed by
/// `(seed, node, epoch)`, so the result does not depend on scheduling.
pub fn topiary_round(
    overlay: &OverlayGraph,
    trace: &EpochTrace,
    subs: &SubscriptionTable,
    weights: &ScoreWeights,
    seed: u64,
    epoch: usize,
    keep_evaluated: bool,
) -> Result<(OverlayGraph, Vec<TopiaryUpdate>)> {
    let updates = (0..overlay.num_nodes())
        .into_par_iter()
        .map(|v| {
            let node = NodeId::from(v);
            let mut rng = node_stream(seed, Stream::Exploration, v, epoch);
            topiary_epoch_update(
                node,
                overlay.outgoing(node),
                &trace.logs[v],
                subs,
                &trace.published_counts_for(node),
                weights,
                keep_evaluated,
                &mut rng,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut next = overlay.clone();
    for u in &updates {
        next.set_outgoing(u.node, u.outgoing.clone())?;
    }
    Ok((next, updates))
}

/// Split each node's outgoing slots round-robin over its topics (in random
/// order) and fill each slot with a random subscriber of that topic.
///
/// A node with more topics than slots leaves some topics without a dedicated
/// connection. A slot whose topic has no eligible subscriber passes to the
/// next topic; if no topic can fill it, it goes to a random node.
pub fn gossipsub_like_overlay<R: Rng + ?Sized>(subs: &SubscriptionTable, d: usize, rng: &mut R) -> OverlayGraph {
    let n = subs.num_nodes();
    let d = d.min(n - 1);
    let mut g = OverlayGraph::empty(n, d);
    for v in (0..n).map(NodeId::from) {
        let mut order: Vec<_> = subs.topics(v).iter().collect();
        order.shuffle(rng);
        let mut chosen: Vec<NodeId> = Vec::with_capacity(d);
        let mut next_topic = 0;
        for _ in 0..d {
            let mut pick = None;
            for _ in 0..order.len() {
                let topic = order[next_topic % order.len()];
                next_topic += 1;
                let eligible: Vec<NodeId> =
                    subs.subscribers(topic).iter().copied().filter(|&u| u != v && !chosen.contains(&u)).collect();
                if let Some(&u) = eligible.choose(rng) {
                    pick = Some(u);
                    break;
                }
            }
            if pick.is_none() {
                let rest: Vec<NodeId> = (0..n).map(NodeId::from).filter(|&u| u != v && !chosen.contains(&u)).collect();
                pick = rest.choose(rng).copied();
            }
            chosen.extend(pick);
        }
        g.set_outgoing(v, chosen).expect("distinct picks within the bound");
    }
    g
}

/// Group nodes and connect each group with an id-ordered tree.
///
/// Members are visited in ascending id order; the first is the root and each
/// later member becomes the child of the earliest placed member that still
/// has outgoing capacity. When no placed member has capacity the child
/// connects upward to the root from its own budget, and is left out if it has
/// none either. Pairs already linked by an earlier group are reused.
pub fn scribe_overlay<R: Rng + ?Sized>(
    subs: &SubscriptionTable,
    d: usize,
    grouping: Grouping,
    num_groups: usize,
    rng: &mut R,
) -> OverlayGraph {
    let n = subs.num_nodes();
    let groups: Vec<Vec<NodeId>> = match grouping {
        Grouping::Random => {
            let mut groups = vec![Vec::new(); num_groups.max(1)];
            for v in 0..n {
                let g = rng.gen_range(0..groups.len());
                groups[g].push(NodeId::from(v));
            }
            groups
        }
        Grouping::ByTopic => (0..subs.num_topics()).map(|t| subs.subscribers(t.into()).to_vec()).collect(),
    };

    let mut outgoing: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    let mut linked: HashSet<(NodeId, NodeId)> = HashSet::new();
    let key = |a: NodeId, b: NodeId| if a < b { (a, b) } else { (b, a) };
    for mut members in groups {
        members.sort_unstable();
        let Some((&root, rest)) = members.split_first() else { continue };
        let mut placed = vec![root];
        for &child in rest {
            if !placed.iter().any(|&p| linked.contains(&key(p, child))) {
                if let Some(&parent) = placed.iter().find(|p| outgoing[p.index()].len() < d) {
                    outgoing[parent.index()].push(child);
                    linked.insert(key(parent, child));
                } else if outgoing[child.index()].len() < d {
                    outgoing[child.index()].push(root);
                    linked.insert(key(child, root));
                } else {
                    continue;
                }
            }
            placed.push(child);
        }
    }
    OverlayGraph::from_outgoing(d, outgoing).expect("tree edges respect the bound")
}
