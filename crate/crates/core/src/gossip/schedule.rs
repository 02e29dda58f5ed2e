use rand::seq::SliceRandom;
use rand::Rng;

use super::Message;
use crate::error::{Error, Result};
use crate::ids::{MessageId, TopicId};
use crate::net::{LatencyModel, SubscriptionTable};

/// The messages published during one epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct PublicationSchedule {
    pub messages: Vec<Message>,
}

impl PublicationSchedule {
    /// Spread `messages_per_epoch` publications round-robin over the topics.
    ///
    /// Message `k` is on topic `k mod |topics|` and belongs to round
    /// `k / |topics|`, published at `round * round_interval`. Each publisher
    /// is drawn uniformly from the topic's subscribers, independently per
    /// message.
    pub fn generate<R: Rng + ?Sized>(
        subs: &SubscriptionTable,
        messages_per_epoch: usize,
        initial_ttl: u32,
        round_interval: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let topics = subs.num_topics();
        let messages = (0..messages_per_epoch)
            .map(|k| {
                let topic = TopicId::from(k % topics);
                let publisher = *subs.subscribers(topic).choose(rng).ok_or(Error::Scheduling(topic))?;
                Ok(Message {
                    id: MessageId(k as u32),
                    topic,
                    publisher,
                    publish_time: (k / topics) as f64 * round_interval,
                    initial_ttl,
                })
            })
            .collect::<Result<_>>()?;
        Ok(PublicationSchedule { messages })
    }

    /// Number of messages per topic.
    pub fn published_counts(&self, num_topics: usize) -> Vec<u32> {
        let mut counts = vec![0; num_topics];
        for m in &self.messages {
            counts[m.topic.index()] += 1;
        }
        counts
    }
}

/// Round spacing wide enough that a message has long finished spreading
/// before the next round starts: ten times a path of `n - 1` worst-case hops
/// capped at 100 hops.
pub fn default_round_interval(lat: &LatencyModel) -> f64 {
    let hops = (lat.num_nodes().saturating_sub(1)).clamp(1, 100) as f64;
    10.0 * hops * (lat.max_link() + lat.max_processing())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::NodeId;
    use crate::rng::{stream, Stream};

    #[test]
    fn round_robin_topics_and_rounds() {
        let subs = SubscriptionTable::from_lists(3, &[&[0, 1, 2], &[0, 2], &[1]]).unwrap();
        let s = PublicationSchedule::generate(&subs, 7, 1, 10.0, &mut stream(1, Stream::Publication)).unwrap();
        let topics: Vec<u32> = s.messages.iter().map(|m| m.topic.0).collect();
        assert_eq!(topics, vec![0, 1, 2, 0, 1, 2, 0]);
        let times: Vec<f64> = s.messages.iter().map(|m| m.publish_time).collect();
        assert_eq!(times, vec![0.0, 0.0, 0.0, 10.0, 10.0, 10.0, 20.0]);
        for m in &s.messages {
            assert!(subs.subscribes(m.publisher, m.topic));
        }
        assert_eq!(s.published_counts(3), vec![3, 2, 2]);
    }

    #[test]
    fn publishers_are_uniform_over_subscribers() {
        let subs = SubscriptionTable::from_lists(1, &[&[0], &[0], &[], &[0]]);
        assert!(subs.is_err());
        let subs = SubscriptionTable::from_lists(2, &[&[0], &[0], &[1], &[0]]).unwrap();
        let s = PublicationSchedule::generate(&subs, 6000, 0, 1.0, &mut stream(4, Stream::Publication)).unwrap();
        let mut counts = [0usize; 4];
        for m in s.messages.iter().filter(|m| m.topic == TopicId(0)) {
            counts[m.publisher.index()] += 1;
        }
        assert_eq!(counts[2], 0);
        for v in [0, 1, 3] {
            assert!((counts[v] as f64 - 1000.0).abs() < 150.0, "{counts:?}");
        }
        assert!(s.messages.iter().filter(|m| m.topic == TopicId(1)).all(|m| m.publisher == NodeId(2)));
    }
}
