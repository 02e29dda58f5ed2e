use std::io;

use rand::Rng;

use super::TopicSet;
use crate::error::{Error, Result};
use crate::ids::{NodeId, TopicId};

/// Redraws allowed per degenerate row or column before giving up.
pub const MAX_REGENERATION_RETRIES: usize = 10_000;

/// Per-node topic subscriptions over a fixed topic universe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubscriptionTable {
    num_topics: usize,
    topics: Vec<TopicSet>,
    subscribers: Vec<Vec<NodeId>>,
    retries: usize,
}

impl SubscriptionTable {
    /// Build a table from explicit per-node sets, checking that every node and
    /// every topic is covered.
    pub fn from_sets(num_topics: usize, topics: Vec<TopicSet>) -> Result<Self> {
        let table = Self::assemble(num_topics, topics, 0);
        if let Some(v) = (0..table.num_nodes()).find(|&v| table.topics[v].is_empty()) {
            return Err(Error::config(format!("node {v} subscribes to no topic")));
        }
        if let Some(t) = (0..num_topics).find(|&t| table.subscribers[t].is_empty()) {
            return Err(Error::config(format!("topic {t} has no subscriber")));
        }
        Ok(table)
    }

    /// Build a table from `(node, [topic indices])` rows.
    pub fn from_lists(num_topics: usize, rows: &[&[u32]]) -> Result<Self> {
        let sets = rows.iter().map(|r| TopicSet::from_topics(num_topics, r.iter().map(|&t| TopicId(t)))).collect();
        Self::from_sets(num_topics, sets)
    }

    fn assemble(num_topics: usize, topics: Vec<TopicSet>, retries: usize) -> Self {
        let mut subscribers = vec![Vec::new(); num_topics];
        for (v, set) in topics.iter().enumerate() {
            for t in set.iter() {
                subscribers[t.index()].push(NodeId::from(v));
            }
        }
        SubscriptionTable { num_topics, topics, subscribers, retries }
    }

    pub fn num_nodes(&self) -> usize {
        self.topics.len()
    }

    pub fn num_topics(&self) -> usize {
        self.num_topics
    }

    #[inline]
    pub fn topics(&self, node: NodeId) -> &TopicSet {
        &self.topics[node.index()]
    }

    #[inline]
    pub fn subscribes(&self, node: NodeId, topic: TopicId) -> bool {
        self.topics[node.index()].contains(topic)
    }

    /// Subscribers of `topic`, ascending by id.
    pub fn subscribers(&self, topic: TopicId) -> &[NodeId] {
        &self.subscribers[topic.index()]
    }

    /// Number of row/column redraws performed while building the table.
    pub fn regeneration_retries(&self) -> usize {
        self.retries
    }

    /// Subscribe `node` to `topic` (used to force attacker interest).
    pub fn force_subscription(&mut self, node: NodeId, topic: TopicId) {
        if !self.subscribes(node, topic) {
            self.topics[node.index()].insert(topic);
            let subs = &mut self.subscribers[topic.index()];
            let pos = subs.partition_point(|&u| u < node);
            subs.insert(pos, node);
        }
    }

    /// Writes `node_id,topic_id` pairs.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["node_id", "topic_id"])?;
        for (v, set) in self.topics.iter().enumerate() {
            for t in set.iter() {
                w.write_record([v.to_string(), t.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Draw each `(node, topic)` subscription independently with probability
/// `interest_rate`.
///
/// A node left with no topic has its row redrawn; a topic left with no
/// subscriber has its column redrawn. Only the offending row or column is
/// resampled, so the remaining draws are unaffected.
pub fn build_subscriptions<R: Rng + ?Sized>(
    n: usize,
    num_topics: usize,
    interest_rate: f64,
    rng: &mut R,
) -> Result<SubscriptionTable> {
    if n == 0 || num_topics == 0 {
        return Err(Error::config("need at least one node and one topic"));
    }
    if !(interest_rate > 0.0 && interest_rate <= 1.0) {
        return Err(Error::config(format!("interest rate {interest_rate} must lie in (0, 1]")));
    }

    let mut rows: Vec<TopicSet> = (0..n)
        .map(|_| {
            let mut set = TopicSet::empty(num_topics);
            for t in 0..num_topics {
                if rng.gen_bool(interest_rate) {
                    set.insert(TopicId::from(t));
                }
            }
            set
        })
        .collect();

    let mut retries = 0;
    for (v, row) in rows.iter_mut().enumerate() {
        let mut attempts = 0;
        while row.is_empty() {
            if attempts == MAX_REGENERATION_RETRIES {
                return Err(Error::config(format!(
                    "node {v} drew no topic after {attempts} redraws at interest rate {interest_rate}"
                )));
            }
            for t in 0..num_topics {
                if rng.gen_bool(interest_rate) {
                    row.insert(TopicId::from(t));
                }
            }
            attempts += 1;
            retries += 1;
        }
    }

    for t in (0..num_topics).map(TopicId::from) {
        let mut attempts = 0;
        while !rows.iter().any(|r| r.contains(t)) {
            if attempts == MAX_REGENERATION_RETRIES {
                return Err(Error::config(format!(
                    "topic {t} drew no subscriber after {attempts} redraws at interest rate {interest_rate}"
                )));
            }
            // The column is empty, so redrawing it can only add subscriptions
            // and never empties a row fixed above.
            for row in rows.iter_mut() {
                if rng.gen_bool(interest_rate) {
                    row.insert(t);
                }
            }
            attempts += 1;
            retries += 1;
        }
    }

    Ok(SubscriptionTable::assemble(num_topics, rows, retries))
}
