//! Per-epoch performance measures.
//!
//! Receive rate and delay only count subscribers of the message's topic and
//! never the publisher itself. Delay is measured to the first receipt and
//! ignores subscribers that never received the message.

use serde::Serialize;

use crate::gossip::DeliverySummary;
use crate::ids::{NodeId, TopicId};
use crate::net::SubscriptionTable;

/// Restricts which messages and receivers a measure covers.
#[derive(Clone, Copy, Debug, Default)]
pub struct MetricScope<'a> {
    pub topic: Option<TopicId>,
    /// Receivers left out of both numerator and denominator (sorted).
    pub excluded: &'a [NodeId],
}

impl MetricScope<'_> {
    pub fn all() -> Self {
        MetricScope::default()
    }

    fn counts(&self, v: NodeId) -> bool {
        self.excluded.binary_search(&v).is_err()
    }
}

/// Mean per-message fraction of (non-publisher) subscribers reached.
/// `None` when no message has any subscriber besides its publisher.
pub fn receive_rate(summary: &DeliverySummary, subs: &SubscriptionTable) -> Option<f64> {
    receive_rate_in(summary, subs, MetricScope::all())
}

pub fn receive_rate_in(summary: &DeliverySummary, subs: &SubscriptionTable, scope: MetricScope<'_>) -> Option<f64> {
    let mut sum = 0.0;
    let mut counted = 0usize;
    for (i, m) in summary.messages().iter().enumerate() {
        if scope.topic.is_some_and(|t| t != m.topic) {
            continue;
        }
        let (mut reached, mut total) = (0usize, 0usize);
        for &v in subs.subscribers(m.topic) {
            if v == m.publisher || !scope.counts(v) {
                continue;
            }
            total += 1;
            if summary.first_receipt(i, v).is_some() {
                reached += 1;
            }
        }
        if total > 0 {
            sum += reached as f64 / total as f64;
            counted += 1;
        }
    }
    (counted > 0).then(|| sum / counted as f64)
}

/// Mean publish-to-first-receipt time over receiving subscribers.
/// `None` when nothing was delivered.
pub fn avg_propagation_delay(summary: &DeliverySummary, subs: &SubscriptionTable) -> Option<f64> {
    avg_propagation_delay_in(summary, subs, MetricScope::all())
}

pub fn avg_propagation_delay_in(
    summary: &DeliverySummary,
    subs: &SubscriptionTable,
    scope: MetricScope<'_>,
) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, m) in summary.messages().iter().enumerate() {
        if scope.topic.is_some_and(|t| t != m.topic) {
            continue;
        }
        for &v in subs.subscribers(m.topic) {
            if v == m.publisher || !scope.counts(v) {
                continue;
            }
            if let Some(t) = summary.first_receipt(i, v) {
                sum += t - m.publish_time;
                count += 1;
            }
        }
    }
    (count > 0).then(|| sum / count as f64)
}

/// Mean and ascending distribution of the per-node retained-subset scores.
pub fn score_statistics(scores: &[f64]) -> (Option<f64>, Vec<f64>) {
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let avg = (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64);
    (avg, sorted)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TopicBreakdown {
    pub topic: TopicId,
    pub receive_rate: Option<f64>,
    pub avg_delay: Option<f64>,
}

pub fn topic_breakdown(summary: &DeliverySummary, subs: &SubscriptionTable) -> Vec<TopicBreakdown> {
    (0..subs.num_topics())
        .map(TopicId::from)
        .map(|topic| {
            let scope = MetricScope { topic: Some(topic), excluded: &[] };
            TopicBreakdown {
                topic,
                receive_rate: receive_rate_in(summary, subs, scope),
                avg_delay: avg_propagation_delay_in(summary, subs, scope),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttackMetrics {
    /// Victim-topic receive rate over honest subscribers (topic-withhold only).
    pub victim_topic_coverage: Option<f64>,
    pub victim_topic_delay: Option<f64>,
    /// Share of the observed honest nodes' outgoing connections held by attackers.
    pub attacker_outgoing_fraction: f64,
    /// Largest attacker share seen at any single observed node.
    pub max_node_share: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochReport {
    pub epoch: usize,
    pub receive_rate: Option<f64>,
    pub avg_delay: Option<f64>,
    pub avg_neighbor_score: Option<f64>,
    pub score_distribution: Vec<f64>,
    pub per_topic: Vec<TopicBreakdown>,
    pub attack: Option<AttackMetrics>,
}
