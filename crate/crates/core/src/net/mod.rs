//! Static network description: subscriptions, link latencies and overlay graphs.

mod latency;
mod overlay;
mod subscriptions;
mod topic_set;

pub use latency::{load_latency_matrix, parse_ping_matrix, unit_square_latency, LatencyModel, ProcessingDelay};
pub use overlay::{complete_overlay, random_overlay, Adjacency, OverlayGraph};
pub use subscriptions::{build_subscriptions, SubscriptionTable, MAX_REGENERATION_RETRIES};
pub use topic_set::TopicSet;
