use super::DeliveryEvent;
use crate::ids::{MessageId, NodeId, TopicId};

/// Per-message record kept by the receiving node.
#[derive(Clone, Debug, PartialEq)]
pub struct MessageObservation {
    pub topic: TopicId,
    /// Earliest arrival over all neighbors.
    pub first_arrival: f64,
    /// Earliest arrival per neighbor, ascending by neighbor id.
    pub senders: Vec<(NodeId, f64)>,
}

impl MessageObservation {
    /// Arrival time from `u` relative to the first arrival; `+∞` if `u` never
    /// sent the message.
    pub fn normalized(&self, u: NodeId) -> f64 {
        match self.senders.binary_search_by_key(&u, |&(s, _)| s) {
            Ok(i) => self.senders[i].1 - self.first_arrival,
            Err(_) => f64::INFINITY,
        }
    }
}

/// Timestamps at which each neighbor delivered each message to the owner.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationLog {
    owner: NodeId,
    // indexed by message id
    messages: Vec<Option<MessageObservation>>,
    len: usize,
}

impl ObservationLog {
    pub fn new(owner: NodeId) -> Self {
        ObservationLog { owner, messages: Vec::new(), len: 0 }
    }

    pub fn owner(&self) -> NodeId {
        self.owner
    }

    pub fn record_observation(&mut self, event: &DeliveryEvent) {
        assert_eq!(event.receiver, self.owner, "event delivered to another node");
        self.record(event.message, event.topic, event.sender, event.arrival_time);
    }

    fn slot(&mut self, message: MessageId, topic: TopicId, time: f64) -> &mut MessageObservation {
        let i = message.index();
        if i >= self.messages.len() {
            self.messages.resize(i + 1, None);
        }
        let slot = &mut self.messages[i];
        if slot.is_none() {
            self.len += 1;
        }
        slot.get_or_insert_with(|| MessageObservation { topic, first_arrival: time, senders: Vec::new() })
    }

    /// Record that `sender` delivered `message` at `time`. Repeats from the
    /// same sender keep the earliest timestamp.
    pub fn record(&mut self, message: MessageId, topic: TopicId, sender: NodeId, time: f64) {
        let obs = self.slot(message, topic, time);
        debug_assert_eq!(obs.topic, topic);
        match obs.senders.binary_search_by_key(&sender, |&(s, _)| s) {
            Ok(i) => obs.senders[i].1 = obs.senders[i].1.min(time),
            Err(i) => obs.senders.insert(i, (sender, time)),
        }
        obs.first_arrival = obs.first_arrival.min(time);
    }

    /// Append an arrival without keeping senders ordered. The caller must
    /// call [`ObservationLog::finish`] before the log is read.
    pub(crate) fn push_unordered(&mut self, message: MessageId, topic: TopicId, sender: NodeId, time: f64) {
        let obs = self.slot(message, topic, time);
        obs.senders.push((sender, time));
        obs.first_arrival = obs.first_arrival.min(time);
    }

    /// Restore sender order after [`ObservationLog::push_unordered`], keeping
    /// the earliest time for repeated senders.
    pub(crate) fn finish(&mut self) {
        for obs in self.messages.iter_mut().flatten() {
            obs.senders.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
            obs.senders.dedup_by_key(|s| s.0);
        }
    }

    pub fn get(&self, message: MessageId) -> Option<&MessageObservation> {
        self.messages.get(message.index()).and_then(Option::as_ref)
    }

    /// Received messages in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = (MessageId, &MessageObservation)> {
        self.messages.iter().enumerate().filter_map(|(i, o)| o.as_ref().map(|o| (MessageId(i as u32), o)))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn normalized(&self, message: MessageId, u: NodeId) -> f64 {
        self.get(message).map_or(f64::INFINITY, |o| o.normalized(u))
    }

    /// Largest finite normalized delay over every message and neighbor.
    pub fn max_normalized_delay(&self) -> f64 {
        self.messages
            .iter()
            .flatten()
            .flat_map(|o| o.senders.iter().map(move |&(_, t)| t - o.first_arrival))
            .fold(0.0, f64::max)
    }
}
