//! Replacement sampling for evicted neighbors.
//!
//! The retained subset is scored per topic. Topics whose score exceeds `η`
//! times the best topic's score are underperforming; every node outside the
//! retained subset is weighted by how many underperforming topics it
//! subscribes to, and replacements are drawn without replacement with
//! probability proportional to that weight.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gossip::ObservationLog;
use crate::ids::{NodeId, TopicId};
use crate::net::{SubscriptionTable, TopicSet};
use crate::scoring::{coverage_value, DeliveryTable, ScoreWeights};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PerTopicScore {
    pub topic: TopicId,
    pub f_d: f64,
    pub f_c: f64,
    pub s: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExplorationPlan {
    pub sigma_plus: Vec<TopicId>,
    pub weights: Vec<(NodeId, u32)>,
    pub sampled: Vec<NodeId>,
}

/// Delay and coverage of the retained subset on each subscribed topic.
pub fn per_topic_scores(
    retained: &[NodeId],
    log: &ObservationLog,
    interests: &TopicSet,
    published: &[u32],
    weights: &ScoreWeights,
) -> Result<Vec<PerTopicScore>> {
    let table = DeliveryTable::new(log, retained, interests);
    let cols: Vec<usize> = (0..retained.len()).collect();
    interests
        .iter()
        .map(|topic| {
            let e = published.get(topic.index()).copied().unwrap_or(0);
            if e == 0 {
                return Err(Error::config(format!("no message was published on topic {topic}")));
            }
            let (f_d, delivered) = table.topic_delay(&cols, topic);
            let f_c = coverage_value(delivered, e as u64, weights.coverage);
            Ok(PerTopicScore { topic, f_d, f_c, s: weights.w_c * f_c + weights.w_d * f_d })
        })
        .collect()
}

/// Topics scoring strictly above `eta` times the minimum topic score.
pub fn underperforming_topics(scores: &[PerTopicScore], eta: f64) -> Vec<TopicId> {
    let min = scores.iter().map(|s| s.s).fold(f64::INFINITY, f64::min);
    scores.iter().filter(|s| s.s > eta * min).map(|s| s.topic).collect()
}

/// `ω_u = |σ_u ∩ σ⁺|` for every node not in `exclude`, ascending by id.
pub fn candidate_weights(sigma_plus: &[TopicId], subs: &SubscriptionTable, exclude: &[NodeId]) -> Vec<(NodeId, u32)> {
    let plus = TopicSet::from_topics(subs.num_topics(), sigma_plus.iter().copied());
    (0..subs.num_nodes())
        .map(NodeId::from)
        .filter(|u| !exclude.contains(u))
        .map(|u| (u, subs.topics(u).intersection_len(&plus) as u32))
        .collect()
}

/// Draw `count` distinct candidates, each draw proportional to the
/// remaining weights. When every remaining weight is zero the draw is
/// uniform over the remaining candidates.
pub fn sample_replacements<R: Rng + ?Sized>(
    weights: &[(NodeId, u32)],
    count: usize,
    rng: &mut R,
) -> Result<Vec<NodeId>> {
    if count > weights.len() {
        return Err(Error::Sampling { requested: count, available: weights.len() });
    }
    let mut pool = weights.to_vec();
    let mut total: u64 = pool.iter().map(|&(_, w)| w as u64).sum();
    let mut picked = Vec::with_capacity(count);
    for _ in 0..count {
        let i = if total == 0 {
            rng.gen_range(0..pool.len())
        } else {
            let mut x = rng.gen_range(0..total);
            pool.iter()
                .position(|&(_, w)| {
                    if x < w as u64 {
                        true
                    } else {
                        x -= w as u64;
                        false
                    }
                })
                .expect("draw falls inside the total weight")
        };
        let (node, w) = pool.remove(i);
        total -= w as u64;
        picked.push(node);
    }
    Ok(picked)
}

/// Per-topic scoring, underperforming topics, weights and sampling in one go.
#[allow(clippy::too_many_arguments)]
pub fn plan_exploration<R: Rng + ?Sized>(
    node: NodeId,
    retained: &[NodeId],
    log: &ObservationLog,
    subs: &SubscriptionTable,
    published: &[u32],
    weights: &ScoreWeights,
    count: usize,
    rng: &mut R,
) -> Result<ExplorationPlan> {
    // Topics nobody else published on this epoch carry no signal.
    let scored = TopicSet::from_topics(
        subs.num_topics(),
        subs.topics(node).iter().filter(|t| published.get(t.index()).is_some_and(|&e| e > 0)),
    );
    let sigma_plus = if scored.is_empty() {
        Vec::new()
    } else {
        let scores = per_topic_scores(retained, log, &scored, published, weights)?;
        underperforming_topics(&scores, weights.eta)
    };
    let mut exclude = retained.to_vec();
    exclude.push(node);
    let cand = candidate_weights(&sigma_plus, subs, &exclude);
    let sampled = sample_replacements(&cand, count, rng)?;
    Ok(ExplorationPlan { sigma_plus, weights: cand, sampled })
}
