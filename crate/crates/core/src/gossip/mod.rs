//! Discrete-event message propagation.
//!
//! Receipt processing at a node, in order:
//!
//! 1. record the sender's timestamp in the node's [`ObservationLog`];
//! 2. stop if the message was seen before;
//! 3. decrement the TTL if the node does not subscribe to the topic;
//! 4. relay per [`relay_decision`] on the decremented TTL. Sends leave after
//!    the node's processing delay and arrive one link latency later.

mod engine;
mod observation;
mod schedule;
mod trace;

pub use engine::{relay_decision, run_epoch, EngineOptions, RelayOverride};
pub use observation::{MessageObservation, ObservationLog};
pub use schedule::{default_round_interval, PublicationSchedule};
pub use trace::{read_trace_csv, DeliverySummary, EpochTrace, Receipt};

use serde::{Deserialize, Serialize};

use crate::ids::{MessageId, NodeId, TopicId};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub id: MessageId,
    pub topic: TopicId,
    pub publisher: NodeId,
    pub publish_time: f64,
    pub initial_ttl: u32,
}

/// One copy of a message crossing one link.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeliveryEvent {
    pub message: MessageId,
    pub topic: TopicId,
    pub sender: NodeId,
    pub receiver: NodeId,
    pub arrival_time: f64,
    pub ttl_on_arrival: u32,
}
