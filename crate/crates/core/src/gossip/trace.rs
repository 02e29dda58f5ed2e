use std::collections::BTreeMap;
use std::io;

use super::{DeliveryEvent, Message, ObservationLog};
use crate::ids::{MessageId, NodeId, TopicId};

/// First receipt of a message at a node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Receipt {
    pub message: MessageId,
    pub receiver: NodeId,
    pub time: f64,
    pub ttl_on_arrival: u32,
}

/// Who got which message when. This is everything the performance metrics
/// need and exactly what the trace CSV holds.
#[derive(Clone, Debug, PartialEq)]
pub struct DeliverySummary {
    n: usize,
    messages: Vec<Message>,
    // message-major, +∞ when never received
    first: Vec<f64>,
}

impl DeliverySummary {
    pub(crate) fn new(n: usize, messages: Vec<Message>) -> Self {
        let mut first = vec![f64::INFINITY; n * messages.len()];
        for (i, m) in messages.iter().enumerate() {
            first[i * n + m.publisher.index()] = m.publish_time;
        }
        DeliverySummary { n, messages, first }
    }

    pub(crate) fn set_first(&mut self, msg_index: usize, node: NodeId, time: f64) {
        self.first[msg_index * self.n + node.index()] = time;
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    /// First receipt time of the `index`-th message at `node`; the publisher
    /// holds its own message from the publish time.
    #[inline]
    pub fn first_receipt(&self, index: usize, node: NodeId) -> Option<f64> {
        let t = self.first[index * self.n + node.index()];
        t.is_finite().then_some(t)
    }
}

/// Everything that happened during one epoch.
#[derive(Clone, Debug)]
pub struct EpochTrace {
    pub summary: DeliverySummary,
    /// Messages published per topic.
    pub published_counts: Vec<u32>,
    pub logs: Vec<ObservationLog>,
    /// First receipts in processing order, excluding publishers.
    pub receipts: Vec<Receipt>,
    /// Every link crossing, if requested in the engine options.
    pub deliveries: Vec<DeliveryEvent>,
    pub event_count: u64,
}

impl EpochTrace {
    pub fn messages(&self) -> &[Message] {
        self.summary.messages()
    }

    /// Published counts per topic, not counting messages `node` published
    /// itself (a node cannot receive its own publications).
    pub fn published_counts_for(&self, node: NodeId) -> Vec<u32> {
        let mut counts = self.published_counts.clone();
        for m in self.messages().iter().filter(|m| m.publisher == node) {
            counts[m.topic.index()] -= 1;
        }
        counts
    }

    /// Writes `msg_id,topic,publisher,publish_time,receiver,first_receipt_time,ttl_on_arrival`.
    ///
    /// Each message contributes one row for its publisher (receipt at the
    /// publish time with the initial TTL) followed by its receipts, so
    /// messages nobody received are still present.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "msg_id",
            "topic",
            "publisher",
            "publish_time",
            "receiver",
            "first_receipt_time",
            "ttl_on_arrival",
        ])?;
        let mut by_msg: Vec<Vec<&Receipt>> = vec![Vec::new(); self.messages().len()];
        for r in &self.receipts {
            by_msg[r.message.index()].push(r);
        }
        for (m, receipts) in self.messages().iter().zip(by_msg) {
            let head = [m.id.to_string(), m.topic.to_string(), m.publisher.to_string(), m.publish_time.to_string()];
            let own = [m.publisher.to_string(), m.publish_time.to_string(), m.initial_ttl.to_string()];
            w.write_record(head.iter().chain(own.iter()))?;
            for r in receipts {
                let row = [r.receiver.to_string(), r.time.to_string(), r.ttl_on_arrival.to_string()];
                w.write_record(head.iter().chain(row.iter()))?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Rebuild a [`DeliverySummary`] from a trace CSV written by
/// [`EpochTrace::write_csv`].
pub fn read_trace_csv<R: io::Read>(n: usize, input: R) -> csv::Result<DeliverySummary> {
    let mut reader = csv::Reader::from_reader(input);
    let mut messages: BTreeMap<u32, Message> = BTreeMap::new();
    let mut receipts = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or_default();
        let parse_err = |i: usize| {
            csv::Error::from(io::Error::new(io::ErrorKind::InvalidData, format!("bad field {i}: {:?}", field(i))))
        };
        let id: u32 = field(0).parse().map_err(|_| parse_err(0))?;
        let topic: u32 = field(1).parse().map_err(|_| parse_err(1))?;
        let publisher: u32 = field(2).parse().map_err(|_| parse_err(2))?;
        let publish_time: f64 = field(3).parse().map_err(|_| parse_err(3))?;
        let receiver: u32 = field(4).parse().map_err(|_| parse_err(4))?;
        let time: f64 = field(5).parse().map_err(|_| parse_err(5))?;
        let ttl: u32 = field(6).parse().map_err(|_| parse_err(6))?;
        if receiver == publisher {
            messages.insert(
                id,
                Message {
                    id: MessageId(id),
                    topic: TopicId(topic),
                    publisher: NodeId(publisher),
                    publish_time,
                    initial_ttl: ttl,
                },
            );
        } else {
            receipts.push((id, NodeId(receiver), time));
        }
    }
    let index: BTreeMap<u32, usize> = messages.keys().enumerate().map(|(i, &id)| (id, i)).collect();
    let mut summary = DeliverySummary::new(n, messages.into_values().collect());
    for (id, node, time) in receipts {
        if let Some(&i) = index.get(&id) {
            summary.set_first(i, node, time);
        }
    }
    Ok(summary)
}
