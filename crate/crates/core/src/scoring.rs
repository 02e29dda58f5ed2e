//! Neighbor-subset scoring.
//!
//! Every score is a cost: lower is better. For a subset `Γ` of a node's
//! neighbors and a message `m` the node received, the subset's delivery
//! delay is `min_{u∈Γ} (T_u − T_min)`, where `T_u` is the time neighbor `u`
//! delivered `m` and `T_min` the first arrival from any neighbor. The delay
//! is `+∞` when no member delivered `m`.
//!
//! * delay score: mean subset delivery delay over the interested messages
//!   the subset delivered;
//! * coverage score: fraction of the interested messages published this epoch
//!   that the subset did not deliver;
//! * wastage score: number of uninterested messages the subset delivered.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gossip::ObservationLog;
use crate::ids::{MessageId, NodeId, TopicId};
use crate::net::TopicSet;

/// How the coverage term is oriented.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverageConvention {
    /// `1 − delivered / published`: higher is worse, consistent with the other
    /// cost terms.
    #[default]
    Miss,
    /// `delivered / published`, kept for comparison runs.
    Delivered,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreWeights {
    pub w_c: f64,
    pub w_d: f64,
    pub w_w: f64,
    pub eta: f64,
    pub keep_count: usize,
    pub switch_count: usize,
    #[serde(default)]
    pub coverage: CoverageConvention,
}

impl ScoreWeights {
    /// Weights for degree `d` that replace `switch_count` neighbors per epoch.
    pub fn new(w_c: f64, w_d: f64, w_w: f64, eta: f64, d: usize, switch_count: usize) -> Self {
        ScoreWeights {
            w_c,
            w_d,
            w_w,
            eta,
            keep_count: d.saturating_sub(switch_count),
            switch_count,
            coverage: CoverageConvention::Miss,
        }
    }

    /// Every violated constraint, as readable messages.
    pub fn violations(&self, degree: usize) -> Vec<String> {
        let mut out = Vec::new();
        for (name, w) in [("w_c", self.w_c), ("w_d", self.w_d), ("w_w", self.w_w)] {
            if !(w >= 0.0 && w.is_finite()) {
                out.push(format!("{name} must be a finite nonnegative weight (got {w})"));
            }
        }
        if self.w_c == 0.0 && self.w_d == 0.0 && self.w_w == 0.0 {
            out.push("at least one of w_c, w_d, w_w must be positive".into());
        }
        if !(self.eta > 1.0 && self.eta.is_finite()) {
            out.push(format!("eta must exceed 1 (got {})", self.eta));
        }
        if self.keep_count + self.switch_count != degree {
            out.push(format!(
                "keep_count {} + switch_count {} must equal the degree bound {degree}",
                self.keep_count, self.switch_count
            ));
        }
        out
    }
}

/// Score of one candidate subset.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubsetScore {
    pub subset: Vec<NodeId>,
    pub f_d: f64,
    pub f_c: f64,
    pub f_w: f64,
    pub total: f64,
}

/// Normalized delivery delays of a fixed list of candidate neighbors, one row
/// per message in the log.
#[derive(Clone, Debug)]
pub struct DeliveryTable {
    candidates: Vec<NodeId>,
    messages: Vec<(MessageId, TopicId, bool)>,
    // row-major, +∞ when the candidate never delivered the message
    delays: Vec<f64>,
    sentinel: f64,
}

impl DeliveryTable {
    pub fn new(log: &ObservationLog, candidates: &[NodeId], interests: &TopicSet) -> Self {
        let k = candidates.len();
        let mut messages = Vec::with_capacity(log.len());
        let mut delays = Vec::with_capacity(log.len() * k);
        for (m, obs) in log.iter() {
            messages.push((m, obs.topic, interests.contains(obs.topic)));
            delays.extend(candidates.iter().map(|&u| obs.normalized(u)));
        }
        DeliveryTable { candidates: candidates.to_vec(), messages, delays, sentinel: 2.0 * log.max_normalized_delay() }
    }

    pub fn candidates(&self) -> &[NodeId] {
        &self.candidates
    }

    /// Delay score assigned to a subset that delivered nothing relevant:
    /// twice the largest normalized delay in the log.
    pub fn sentinel(&self) -> f64 {
        self.sentinel
    }

    #[inline]
    fn subset_delay(&self, row: usize, cols: &[usize]) -> f64 {
        let base = row * self.candidates.len();
        cols.iter().map(|&c| self.delays[base + c]).fold(f64::INFINITY, f64::min)
    }

    fn rows_matching<'a>(&'a self, keep: impl Fn(TopicId, bool) -> bool + 'a) -> impl Iterator<Item = usize> + 'a {
        self.messages.iter().enumerate().filter(move |(_, &(_, t, i))| keep(t, i)).map(|(r, _)| r)
    }

    /// Mean delay over matching rows the subset delivered, and how many those were.
    fn mean_delay(&self, cols: &[usize], keep: impl Fn(TopicId, bool) -> bool) -> (f64, usize) {
        let mut sum = 0.0;
        let mut count = 0;
        for r in self.rows_matching(keep) {
            let d = self.subset_delay(r, cols);
            if d.is_finite() {
                sum += d;
                count += 1;
            }
        }
        if count == 0 {
            (self.sentinel, 0)
        } else {
            (sum / count as f64, count)
        }
    }

    pub(crate) fn delay_score(&self, cols: &[usize]) -> f64 {
        self.mean_delay(cols, |_, interested| interested).0
    }

    pub(crate) fn delivered_interested(&self, cols: &[usize]) -> usize {
        self.rows_matching(|_, i| i).filter(|&r| self.subset_delay(r, cols).is_finite()).count()
    }

    pub(crate) fn wastage(&self, cols: &[usize]) -> usize {
        self.rows_matching(|_, i| !i).filter(|&r| self.subset_delay(r, cols).is_finite()).count()
    }

    /// Per-topic delay score and delivered count.
    pub(crate) fn topic_delay(&self, cols: &[usize], topic: TopicId) -> (f64, usize) {
        self.mean_delay(cols, |t, _| t == topic)
    }
}

/// `Σ_{θ ∈ interests} published[θ]`
pub(crate) fn interested_published(interests: &TopicSet, published: &[u32]) -> u64 {
    interests.iter().map(|t| published.get(t.index()).copied().unwrap_or(0) as u64).sum()
}

pub(crate) fn coverage_value(delivered: usize, published: u64, convention: CoverageConvention) -> f64 {
    let fraction = (delivered as f64 / published as f64).clamp(0.0, 1.0);
    match convention {
        CoverageConvention::Miss => 1.0 - fraction,
        CoverageConvention::Delivered => fraction,
    }
}

fn table_for(subset: &[NodeId], log: &ObservationLog, interests: &TopicSet) -> (DeliveryTable, Vec<usize>) {
    let table = DeliveryTable::new(log, subset, interests);
    let cols = (0..subset.len()).collect();
    (table, cols)
}

pub fn topic_delay_score(subset: &[NodeId], log: &ObservationLog, interests: &TopicSet) -> f64 {
    let (table, cols) = table_for(subset, log, interests);
    table.delay_score(&cols)
}

/// Miss fraction over the interested topics.
pub fn topic_coverage_score(
    subset: &[NodeId],
    log: &ObservationLog,
    interests: &TopicSet,
    published: &[u32],
) -> Result<f64> {
    let total = interested_published(interests, published);
    if total == 0 {
        return Err(Error::config("no message was published on any subscribed topic"));
    }
    let (table, cols) = table_for(subset, log, interests);
    Ok(coverage_value(table.delivered_interested(&cols), total, CoverageConvention::Miss))
}

pub fn bandwidth_wastage_score(subset: &[NodeId], log: &ObservationLog, interests: &TopicSet) -> f64 {
    let (table, cols) = table_for(subset, log, interests);
    table.wastage(&cols) as f64
}

fn score_columns(table: &DeliveryTable, cols: &[usize], published_total: u64, weights: &ScoreWeights) -> SubsetScore {
    let f_d = table.delay_score(cols);
    let f_c = coverage_value(table.delivered_interested(cols), published_total, weights.coverage);
    let f_w = table.wastage(cols) as f64;
    SubsetScore {
        subset: cols.iter().map(|&c| table.candidates[c]).collect(),
        f_d,
        f_c,
        f_w,
        total: weights.w_c * f_c + weights.w_d * f_d + weights.w_w * f_w,
    }
}

pub fn overall_score(
    subset: &[NodeId],
    log: &ObservationLog,
    interests: &TopicSet,
    published: &[u32],
    weights: &ScoreWeights,
) -> Result<SubsetScore> {
    let total = interested_published(interests, published);
    if total == 0 {
        return Err(Error::config("no message was published on any subscribed topic"));
    }
    let (table, cols) = table_for(subset, log, interests);
    Ok(score_columns(&table, &cols, total, weights))
}

/// Calls `f` with every `k`-subset of `0..m` in lexicographic order.
pub(crate) fn for_each_combination(m: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > m {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + m - k) else { return };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Score every `keep_count`-subset of `outgoing`, members and subsets in
/// ascending lexicographic order.
pub fn score_subsets(
    outgoing: &[NodeId],
    log: &ObservationLog,
    interests: &TopicSet,
    published: &[u32],
    weights: &ScoreWeights,
) -> Result<Vec<SubsetScore>> {
    let total = interested_published(interests, published);
    if total == 0 {
        return Err(Error::config("no message was published on any subscribed topic"));
    }
    let mut candidates = outgoing.to_vec();
    candidates.sort_unstable();
    let table = DeliveryTable::new(log, &candidates, interests);
    let k = weights.keep_count.min(candidates.len());
    let mut out = Vec::new();
    for_each_combination(candidates.len(), k, |cols| out.push(score_columns(&table, cols, total, weights)));
    Ok(out)
}

/// The lowest-cost subset; ties go to the lexicographically smallest member list.
pub fn select_best_subset(
    outgoing: &[NodeId],
    log: &ObservationLog,
    interests: &TopicSet,
    published: &[u32],
    weights: &ScoreWeights,
) -> Result<SubsetScore> {
    let scores = score_subsets(outgoing, log, interests, published, weights)?;
    Ok(argmin(scores))
}

pub(crate) fn argmin(scores: Vec<SubsetScore>) -> SubsetScore {
    // Candidates arrive in lexicographic order, so the first strict minimum
    // is the tie-break winner.
    scores.into_iter().reduce(|best, s| if s.total < best.total { s } else { best }).expect("at least one subset")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interests(topics: &[u32]) -> TopicSet {
        TopicSet::from_topics(4, topics.iter().map(|&t| TopicId(t)))
    }

    fn record(log: &mut ObservationLog, m: u32, topic: u32, sender: u32, t: f64) {
        log.record(MessageId(m), TopicId(topic), NodeId(sender), t);
    }

    /// m1: a at 0, b at 5 (relative). m2: a at 3, b at 0. Both interested.
    fn two_message_log() -> ObservationLog {
        let mut log = ObservationLog::new(NodeId(0));
        record(&mut log, 1, 0, 1, 10.0);
        record(&mut log, 1, 0, 2, 15.0);
        record(&mut log, 2, 0, 1, 23.0);
        record(&mut log, 2, 0, 2, 20.0);
        log
    }

    #[test]
    fn delay_score_by_hand() {
        let log = two_message_log();
        let i = interests(&[0]);
        assert_eq!(topic_delay_score(&[NodeId(1)], &log, &i), 1.5);
        assert_eq!(topic_delay_score(&[NodeId(2)], &log, &i), 2.5);
        assert_eq!(topic_delay_score(&[NodeId(1), NodeId(2)], &log, &i), 0.0);
    }

    #[test]
    fn delay_sentinel_for_silent_subset() {
        let log = two_message_log();
        // Largest normalized delay is 5, so the sentinel is 10.
        assert_eq!(topic_delay_score(&[NodeId(7)], &log, &interests(&[0])), 10.0);
        assert_eq!(topic_delay_score(&[], &log, &interests(&[0])), 10.0);
    }

    #[test]
    fn coverage_fractions() {
        let mut log = ObservationLog::new(NodeId(0));
        for m in 0..8 {
            record(&mut log, m, 0, 1, m as f64);
        }
        let i = interests(&[0]);
        assert!((topic_coverage_score(&[NodeId(1)], &log, &i, &[10]).unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(topic_coverage_score(&[NodeId(1)], &log, &i, &[8]).unwrap(), 0.0);
        assert_eq!(topic_coverage_score(&[], &log, &i, &[10]).unwrap(), 1.0);
        assert!(topic_coverage_score(&[NodeId(1)], &log, &i, &[0, 4]).is_err());
    }

    #[test]
    fn wastage_counts_messages_not_deliveries() {
        let mut log = ObservationLog::new(NodeId(0));
        // Three uninterested messages on topic 1; m0 arrives via both 1 and 2.
        record(&mut log, 0, 1, 1, 1.0);
        record(&mut log, 0, 1, 2, 2.0);
        record(&mut log, 1, 1, 2, 1.0);
        record(&mut log, 2, 1, 3, 1.0);
        let i = interests(&[0]);
        assert_eq!(bandwidth_wastage_score(&[NodeId(1), NodeId(2)], &log, &i), 2.0);
        assert_eq!(bandwidth_wastage_score(&[NodeId(1), NodeId(2), NodeId(3)], &log, &i), 3.0);
        assert_eq!(bandwidth_wastage_score(&[NodeId(1)], &log, &interests(&[0, 1])), 0.0);
    }

    #[test]
    fn overall_score_combines_linearly() {
        let log = two_message_log();
        let i = interests(&[0]);
        let coverage_only = ScoreWeights::new(1.0, 0.0, 0.0, 2.0, 2, 1);
        let s = overall_score(&[NodeId(1)], &log, &i, &[2], &coverage_only).unwrap();
        assert_eq!(s.total, 0.0);

        // Two of ten delivered: f_c = 0.8, f_d = 1.5.
        let w = ScoreWeights::new(1.0, 1000.0, 0.0, 2.0, 2, 1);
        let s = overall_score(&[NodeId(1)], &log, &i, &[10], &w).unwrap();
        assert_eq!(s.f_d, 1.5);
        assert!((s.f_c - 0.8).abs() < 1e-12);
        assert!((s.total - 1500.8).abs() < 1e-9);
    }

    #[test]
    fn spec_weighted_total() {
        // f_c = 0.2 with f_d = 1.5 under (1, 1000, 0) gives 1500.2.
        let w = ScoreWeights::new(1.0, 1000.0, 0.0, 2.0, 6, 2);
        let total = w.w_c * 0.2 + w.w_d * 1.5 + w.w_w * 0.0;
        assert!((total - 1500.2).abs() < 1e-9);
    }

    #[test]
    fn combinations_are_lexicographic() {
        let mut seen = Vec::new();
        for_each_combination(4, 2, |c| seen.push(c.to_vec()));
        assert_eq!(seen, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        let mut count = 0;
        for_each_combination(6, 4, |_| count += 1);
        assert_eq!(count, 15);
        let mut empty = 0;
        for_each_combination(3, 0, |c| {
            assert!(c.is_empty());
            empty += 1
        });
        assert_eq!(empty, 1);
    }

    #[test]
    fn fifteen_subsets_for_six_choose_four() {
        let log = two_message_log();
        let out: Vec<NodeId> = (1..=6).map(NodeId).collect();
        let w = ScoreWeights::new(1.0, 3000.0, 0.0, 2.0, 6, 2);
        let all = score_subsets(&out, &log, &interests(&[0]), &[2], &w).unwrap();
        assert_eq!(all.len(), 15);
    }

    #[test]
    fn identical_neighbors_pick_smallest_ids() {
        let mut log = ObservationLog::new(NodeId(0));
        for u in [9, 4, 7, 5] {
            record(&mut log, 0, 0, u, 1.0);
        }
        let out = [NodeId(9), NodeId(4), NodeId(7), NodeId(5)];
        let w = ScoreWeights::new(1.0, 3000.0, 0.0, 2.0, 4, 2);
        let best = select_best_subset(&out, &log, &interests(&[0]), &[1], &w).unwrap();
        assert_eq!(best.subset, vec![NodeId(4), NodeId(5)]);
    }

    #[test]
    fn dominant_neighbor_is_always_retained() {
        // Neighbor 1 delivers every message first; 2 and 3 deliver nothing.
        let mut log = ObservationLog::new(NodeId(0));
        for m in 0..5 {
            record(&mut log, m, 0, 1, m as f64);
        }
        let w = ScoreWeights::new(1.0, 10.0, 0.0, 2.0, 3, 1);
        let i = interests(&[0]);
        let all = score_subsets(&[NodeId(1), NodeId(2), NodeId(3)], &log, &i, &[5], &w).unwrap();
        let min = all.iter().map(|s| s.total).fold(f64::INFINITY, f64::min);
        for s in all.iter().filter(|s| s.total == min) {
            assert!(s.subset.contains(&NodeId(1)));
        }
    }

    #[test]
    fn weight_violations() {
        let mut w = ScoreWeights::new(1.0, 3000.0, 0.0, 2.0, 6, 2);
        assert!(w.violations(6).is_empty());
        w.eta = 1.0;
        assert!(w.violations(6).iter().any(|v| v.contains("eta must exceed 1")));
        let w = ScoreWeights::new(0.0, 0.0, 0.0, 2.0, 6, 2);
        assert!(!w.violations(6).is_empty());
        let w = ScoreWeights::new(1.0, 0.0, 0.0, 2.0, 6, 2);
        assert!(!w.violations(5).is_empty());
    }
}
