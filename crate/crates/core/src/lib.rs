//! Topic-aware overlay construction for peer-to-peer publish/subscribe.

pub mod adversary;
pub mod config;
pub mod error;
pub mod experiment;
pub mod explore;
pub mod gossip;
pub mod ids;
pub mod metrics;
pub mod net;
pub mod protocols;
pub mod report;
pub mod rng;
pub mod scoring;

pub use error::{Error, Result};
pub use ids::{MessageId, NodeId, TopicId};

// The guide's code samples run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/network.md")]
    mod network {}
    #[doc = include_str!("../../../book/src/gossip.md")]
    mod gossip {}
    #[doc = include_str!("../../../book/src/scoring.md")]
    mod scoring {}
    #[doc = include_str!("../../../book/src/exploration.md")]
    mod exploration {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/adversaries.md")]
    mod adversaries {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/running.md")]
    mod running {}
}
