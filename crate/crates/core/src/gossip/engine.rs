use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{DeliveryEvent, DeliverySummary, EpochTrace, Message, ObservationLog, Receipt};
use crate::error::{Error, Result};
use crate::ids::{NodeId, TopicId};
use crate::net::{Adjacency, LatencyModel, SubscriptionTable};

#[derive(Clone, Copy, Debug, Default)]
pub struct EngineOptions {
    /// Keep every link crossing in [`EpochTrace::deliveries`].
    pub record_deliveries: bool,
}

/// Nodes that receive but never relay messages of a topic (or of any topic).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RelayOverride {
    silent: Vec<bool>,
    topic: Option<TopicId>,
}

impl RelayOverride {
    pub fn none() -> Self {
        RelayOverride::default()
    }

    /// `nodes` stop relaying `topic`, or every topic when `topic` is `None`.
    pub fn withhold(n: usize, nodes: &[NodeId], topic: Option<TopicId>) -> Self {
        let mut silent = vec![false; n];
        for v in nodes {
            silent[v.index()] = true;
        }
        RelayOverride { silent, topic }
    }

    #[inline]
    pub fn suppresses(&self, node: NodeId, topic: TopicId) -> bool {
        self.silent.get(node.index()).copied().unwrap_or(false) && self.topic.is_none_or(|t| t == topic)
    }
}

/// Targets of a node that has just received a message for the first time.
///
/// With a positive TTL the message goes to every neighbor except the one it
/// came from; at TTL zero only to the neighbors subscribed to the topic. A
/// publisher passes `from = None` and its initial TTL.
pub fn relay_decision(
    node: NodeId,
    topic: TopicId,
    ttl_after_receipt: u32,
    from: Option<NodeId>,
    subs: &SubscriptionTable,
    adj: &Adjacency,
) -> Vec<NodeId> {
    adj.neighbors(node)
        .iter()
        .copied()
        .filter(|&u| Some(u) != from)
        .filter(|&u| ttl_after_receipt > 0 || subs.subscribes(u, topic))
        .collect()
}

#[derive(Debug)]
struct Queued {
    time: f64,
    seq: u64,
    msg: u32,
    sender: NodeId,
    receiver: NodeId,
    ttl: u32,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    // Reversed so the max-heap pops the earliest event; insertion order breaks ties.
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Propagate every message of the schedule to quiescence.
///
/// `schedule[k].id` must equal `k`.
pub fn run_epoch(
    adj: &Adjacency,
    subs: &SubscriptionTable,
    lat: &LatencyModel,
    schedule: &[Message],
    overrides: &RelayOverride,
    options: EngineOptions,
) -> Result<EpochTrace> {
    let n = adj.num_nodes();
    if subs.num_nodes() != n || lat.num_nodes() != n {
        return Err(Error::config(format!(
            "overlay has {n} nodes, subscriptions {}, latency model {}",
            subs.num_nodes(),
            lat.num_nodes()
        )));
    }
    for (k, m) in schedule.iter().enumerate() {
        if m.id.index() != k {
            return Err(Error::config(format!("message at position {k} has id {}", m.id)));
        }
        if m.topic.index() >= subs.num_topics() || !subs.subscribes(m.publisher, m.topic) {
            return Err(Error::Scheduling(m.topic));
        }
    }

    let mut published_counts = vec![0u32; subs.num_topics()];
    for m in schedule {
        published_counts[m.topic.index()] += 1;
    }
    let mut summary = DeliverySummary::new(n, schedule.to_vec());
    let mut logs: Vec<ObservationLog> = (0..n).map(|v| ObservationLog::new(NodeId::from(v))).collect();
    let mut receipts = Vec::new();
    let mut deliveries = Vec::new();
    let mut seen = vec![false; n * schedule.len()];
    let mut queue: BinaryHeap<Queued> = BinaryHeap::new();
    let mut seq = 0u64;
    let mut event_count = 0u64;

    let mut send =
        |queue: &mut BinaryHeap<Queued>, now: f64, msg: u32, from: NodeId, targets: Vec<NodeId>, ttl: u32| {
            let depart = now + lat.processing(from);
            for to in targets {
                queue.push(Queued { time: depart + lat.link(from, to), seq, msg, sender: from, receiver: to, ttl });
                seq += 1;
            }
        };

    // Publications are queued in publish-time order ahead of any relays.
    let mut order: Vec<usize> = (0..schedule.len()).collect();
    order.sort_by(|&a, &b| schedule[a].publish_time.total_cmp(&schedule[b].publish_time));
    let mut next_pub = 0;

    loop {
        let next_event_time = queue.peek().map(|q| q.time);
        let publish_now = match (order.get(next_pub), next_event_time) {
            (Some(&k), Some(t)) => schedule[k].publish_time <= t,
            (Some(_), None) => true,
            (None, _) => false,
        };
        if publish_now {
            let k = order[next_pub];
            next_pub += 1;
            let m = &schedule[k];
            seen[k * n + m.publisher.index()] = true;
            let targets = relay_decision(m.publisher, m.topic, m.initial_ttl, None, subs, adj);
            send(&mut queue, m.publish_time, k as u32, m.publisher, targets, m.initial_ttl);
            continue;
        }
        let Some(ev) = queue.pop() else { break };
        event_count += 1;
        let k = ev.msg as usize;
        let m = &schedule[k];
        let r = ev.receiver;
        let delivery = DeliveryEvent {
            message: m.id,
            topic: m.topic,
            sender: ev.sender,
            receiver: r,
            arrival_time: ev.time,
            ttl_on_arrival: ev.ttl,
        };
        if options.record_deliveries {
            deliveries.push(delivery);
        }
        if r != m.publisher {
            logs[r.index()].push_unordered(m.id, m.topic, ev.sender, ev.time);
        }
        if std::mem::replace(&mut seen[k * n + r.index()], true) {
            continue;
        }
        summary.set_first(k, r, ev.time);
        receipts.push(Receipt { message: m.id, receiver: r, time: ev.time, ttl_on_arrival: ev.ttl });

        let ttl = if subs.subscribes(r, m.topic) { ev.ttl } else { ev.ttl.saturating_sub(1) };
        if overrides.suppresses(r, m.topic) {
            continue;
        }
        let targets = relay_decision(r, m.topic, ttl, Some(ev.sender), subs, adj);
        send(&mut queue, ev.time, ev.msg, r, targets, ttl);
    }

    for log in &mut logs {
        log.finish();
    }
    Ok(EpochTrace { summary, published_counts, logs, receipts, deliveries, event_count })
}
