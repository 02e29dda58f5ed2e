//! Naive reference implementations used by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;
use topiary::gossip::{Message, ObservationLog};
use topiary::net::{Adjacency, LatencyModel, SubscriptionTable, TopicSet};
use topiary::{MessageId, NodeId, TopicId};

/// One raw arrival: `(message, topic, sender, time)`.
pub type Arrival = (u32, u32, u32, f64);

/// A randomly generated observation scenario for one node.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub owner: u32,
    pub outgoing: Vec<u32>,
    pub interests: Vec<u32>,
    pub num_topics: usize,
    pub published: Vec<u32>,
    pub arrivals: Vec<Arrival>,
    pub keep: usize,
}

impl Scenario {
    pub fn log(&self) -> ObservationLog {
        let mut log = ObservationLog::new(NodeId(self.owner));
        for &(m, t, s, time) in &self.arrivals {
            log.record(MessageId(m), TopicId(t), NodeId(s), time);
        }
        log
    }

    pub fn interest_set(&self) -> TopicSet {
        TopicSet::from_topics(self.num_topics, self.interests.iter().map(|&t| TopicId(t)))
    }

    pub fn outgoing_ids(&self) -> Vec<NodeId> {
        self.outgoing.iter().map(|&u| NodeId(u)).collect()
    }
}

/// Up to 6 outgoing neighbors, 2 incoming-only senders, 50 messages and 5
/// topics. Times sit on a coarse grid so ties are common.
pub fn random_scenario<R: Rng>(rng: &mut R) -> Scenario {
    let num_topics = rng.gen_range(1..=5);
    let d = rng.gen_range(1..=6);
    let keep = rng.gen_range(0..=d);
    let owner = 0;
    let outgoing: Vec<u32> = rand::seq::index::sample(rng, 12, d).into_iter().map(|i| i as u32 + 1).collect();
    let incoming: Vec<u32> = vec![20, 21];
    let mut interests: Vec<u32> = (0..num_topics as u32).filter(|_| rng.gen_bool(0.5)).collect();
    if interests.is_empty() {
        interests.push(rng.gen_range(0..num_topics as u32));
    }
    let num_messages = rng.gen_range(0..=50);
    let mut arrivals = Vec::new();
    let mut published = vec![0u32; num_topics];
    for m in 0..num_messages {
        let topic = rng.gen_range(0..num_topics as u32);
        published[topic as usize] += 1;
        if rng.gen_bool(0.15) {
            continue; // published but never received
        }
        let mut senders: Vec<u32> = outgoing.iter().chain(&incoming).copied().filter(|_| rng.gen_bool(0.5)).collect();
        if senders.is_empty() {
            senders.push(incoming[0]);
        }
        for s in senders {
            let time = 100.0 + rng.gen_range(0..8) as f64 * 0.25;
            arrivals.push((m, topic, s, time));
            if rng.gen_bool(0.1) {
                arrivals.push((m, topic, s, time + rng.gen_range(0..4) as f64 * 0.5));
            }
        }
    }
    // Sometimes publications on subscribed topics are unknown to the node.
    for p in published.iter_mut() {
        if rng.gen_bool(0.1) {
            *p += rng.gen_range(0..3);
        }
    }
    Scenario { owner, outgoing, interests, num_topics, published, arrivals, keep }
}

/// Weights used by the scoring oracle, mirroring the library's fields.
#[derive(Clone, Copy, Debug)]
pub struct OracleWeights {
    pub w_c: f64,
    pub w_d: f64,
    pub w_w: f64,
    pub eta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleSubset {
    pub members: Vec<u32>,
    pub f_d: f64,
    pub f_c: f64,
    pub f_w: f64,
    pub total: f64,
}

/// Straightforward evaluation of every quantity over raw arrivals.
pub struct ScoringOracle {
    /// message -> (topic, sender -> earliest time)
    table: BTreeMap<u32, (u32, BTreeMap<u32, f64>)>,
    interests: Vec<u32>,
    published: Vec<u32>,
}

impl ScoringOracle {
    pub fn new(s: &Scenario) -> Self {
        let mut table: BTreeMap<u32, (u32, BTreeMap<u32, f64>)> = BTreeMap::new();
        for &(m, t, sender, time) in &s.arrivals {
            let entry = table.entry(m).or_insert((t, BTreeMap::new())).1.entry(sender).or_insert(time);
            if time < *entry {
                *entry = time;
            }
        }
        ScoringOracle { table, interests: s.interests.clone(), published: s.published.clone() }
    }

    fn first(&self, m: u32) -> f64 {
        let senders = &self.table[&m].1;
        let mut best = f64::INFINITY;
        for &t in senders.values() {
            if t < best {
                best = t;
            }
        }
        best
    }

    /// `min_{u ∈ members} T̃`, infinite when no member delivered.
    fn subset_delay(&self, m: u32, members: &[u32]) -> f64 {
        let first = self.first(m);
        let mut best = f64::INFINITY;
        for u in members {
            if let Some(&t) = self.table[&m].1.get(u) {
                let d = t - first;
                if d < best {
                    best = d;
                }
            }
        }
        best
    }

    pub fn sentinel(&self) -> f64 {
        let mut worst = 0.0;
        for (&m, (_, senders)) in &self.table {
            let first = self.first(m);
            for &t in senders.values() {
                if t - first > worst {
                    worst = t - first;
                }
            }
        }
        2.0 * worst
    }

    fn interested(&self, topic: u32) -> bool {
        self.interests.contains(&topic)
    }

    /// Mean delay over the given messages that `members` delivered.
    fn mean_delay(&self, members: &[u32], keep: impl Fn(u32) -> bool) -> (f64, usize) {
        let mut sum = 0.0;
        let mut count = 0;
        for (&m, &(topic, _)) in &self.table {
            if !keep(topic) {
                continue;
            }
            let d = self.subset_delay(m, members);
            if d != f64::INFINITY {
                sum += d;
                count += 1;
            }
        }
        if count == 0 {
            (self.sentinel(), 0)
        } else {
            (sum / count as f64, count)
        }
    }

    pub fn expected_total(&self) -> u64 {
        self.interests.iter().map(|&t| self.published[t as usize] as u64).sum()
    }

    pub fn score(&self, members: &[u32], w: OracleWeights) -> OracleSubset {
        let (f_d, delivered) = self.mean_delay(members, |t| self.interested(t));
        let e = self.expected_total() as f64;
        let mut frac = delivered as f64 / e;
        if frac > 1.0 {
            frac = 1.0;
        }
        let f_c = 1.0 - frac;
        let mut wasted = 0;
        for (&m, &(topic, _)) in &self.table {
            if !self.interested(topic) && self.subset_delay(m, members) != f64::INFINITY {
                wasted += 1;
            }
        }
        let f_w = wasted as f64;
        OracleSubset { members: members.to_vec(), f_d, f_c, f_w, total: w.w_c * f_c + w.w_d * f_d + w.w_w * f_w }
    }

    /// Every `keep`-subset of `outgoing` via bitmasks, sorted lexicographically.
    pub fn all_subsets(outgoing: &[u32], keep: usize) -> Vec<Vec<u32>> {
        let mut sorted = outgoing.to_vec();
        sorted.sort();
        let mut out = Vec::new();
        for mask in 0u32..(1 << sorted.len()) {
            if mask.count_ones() as usize == keep {
                out.push((0..sorted.len()).filter(|i| mask & (1 << i) != 0).map(|i| sorted[i]).collect::<Vec<u32>>());
            }
        }
        out.sort();
        out
    }

    pub fn best(&self, outgoing: &[u32], keep: usize, w: OracleWeights) -> OracleSubset {
        let mut best: Option<OracleSubset> = None;
        for s in Self::all_subsets(outgoing, keep) {
            let sc = self.score(&s, w);
            match &best {
                Some(b) if b.total <= sc.total => {}
                _ => best = Some(sc),
            }
        }
        best.expect("at least one subset")
    }

    /// `(topic, f_d, f_c, s)` for every subscribed topic with a positive count.
    pub fn per_topic(&self, members: &[u32], w: OracleWeights) -> Vec<(u32, f64, f64, f64)> {
        let mut topics = self.interests.clone();
        topics.sort();
        topics
            .into_iter()
            .filter(|&t| self.published[t as usize] > 0)
            .map(|t| {
                let (f_d, delivered) = self.mean_delay(members, |x| x == t);
                let mut frac = delivered as f64 / self.published[t as usize] as f64;
                if frac > 1.0 {
                    frac = 1.0;
                }
                let f_c = 1.0 - frac;
                (t, f_d, f_c, w.w_c * f_c + w.w_d * f_d)
            })
            .collect()
    }

    pub fn sigma_plus(per_topic: &[(u32, f64, f64, f64)], eta: f64) -> Vec<u32> {
        let mut min = f64::INFINITY;
        for p in per_topic {
            if p.3 < min {
                min = p.3;
            }
        }
        per_topic.iter().filter(|p| p.3 > eta * min).map(|p| p.0).collect()
    }
}

/// First receipt of a message at every node by repeatedly settling the
/// closest unsettled node, applying the relay rules on each settle.
///
/// Returns `(time, ttl_on_arrival)` per node, `None` for nodes never reached
/// and for the publisher.
pub fn gossip_oracle(
    adj: &Adjacency,
    subs: &SubscriptionTable,
    lat: &LatencyModel,
    m: &Message,
    silent: &[u32],
) -> Vec<Option<(f64, u32)>> {
    let n = adj.num_nodes();
    let interested = |v: usize| subs.topics(NodeId(v as u32)).contains(m.topic);
    // tentative (time, ttl sent, sender)
    let mut tentative: Vec<Option<(f64, u32, usize)>> = vec![None; n];
    let mut settled = vec![false; n];
    let p = m.publisher.index();
    settled[p] = true;

    let relay = |v: usize,
                 at: f64,
                 ttl: u32,
                 from: Option<usize>,
                 tentative: &mut Vec<Option<(f64, u32, usize)>>,
                 settled: &[bool]| {
        for &u in adj.neighbors(NodeId(v as u32)) {
            let u = u.index();
            if Some(u) == from {
                continue;
            }
            if ttl == 0 && !interested(u) {
                continue;
            }
            if settled[u] {
                continue;
            }
            let arrive = at + lat.processing(NodeId(v as u32)) + lat.link(NodeId(v as u32), NodeId(u as u32));
            let better = match tentative[u] {
                None => true,
                Some((t, _, _)) => arrive < t,
            };
            if better {
                tentative[u] = Some((arrive, ttl, v));
            }
        }
    };

    relay(p, m.publish_time, m.initial_ttl, None, &mut tentative, &settled);
    let mut out = vec![None; n];
    loop {
        let mut pick: Option<usize> = None;
        for v in 0..n {
            if settled[v] {
                continue;
            }
            if let Some((t, _, _)) = tentative[v] {
                if pick.is_none_or(|w| t < tentative[w].unwrap().0) {
                    pick = Some(v);
                }
            }
        }
        let Some(v) = pick else { break };
        settled[v] = true;
        let (t, ttl_in, from) = tentative[v].unwrap();
        out[v] = Some((t, ttl_in));
        let ttl = if interested(v) { ttl_in } else { ttl_in.saturating_sub(1) };
        let is_silent = silent.contains(&(v as u32));
        if !is_silent {
            relay(v, t, ttl, Some(from), &mut tentative, &settled);
        }
    }
    out
}

/// Compare the library's scoring against [`ScoringOracle`] on `cases`
/// random scenarios. Returns the number of subsets compared.
pub fn check_scoring(cases: usize, seed: u64) -> Result<usize, String> {
    use rand::SeedableRng;
    use topiary::explore::{per_topic_scores, underperforming_topics};
    use topiary::scoring::{
        bandwidth_wastage_score, overall_score, score_subsets, select_best_subset, topic_coverage_score,
        topic_delay_score, ScoreWeights,
    };

    fn weights<R: Rng>(rng: &mut R, d: usize, keep: usize) -> (ScoreWeights, OracleWeights) {
        let pick = |rng: &mut R| [0.0, 0.5, 1.0, 3.0, 1000.0, 3000.0][rng.gen_range(0..6)];
        let (mut w_c, w_d, w_w) = (pick(rng), pick(rng), pick(rng));
        if w_c == 0.0 && w_d == 0.0 && w_w == 0.0 {
            w_c = 1.0;
        }
        let eta = [1.5, 2.0, 4.0][rng.gen_range(0..3)];
        (ScoreWeights::new(w_c, w_d, w_w, eta, d, d - keep), OracleWeights { w_c, w_d, w_w, eta })
    }
    let ids = |v: &[u32]| v.iter().map(|&u| NodeId(u)).collect::<Vec<_>>();
    macro_rules! same {
        ($a:expr, $b:expr, $($ctx:tt)*) => {
            if $a != $b {
                return Err(format!("{}: {:?} != {:?}", format!($($ctx)*), $a, $b));
            }
        };
    }

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut compared = 0usize;
    for case in 0..cases {
        let s = random_scenario(&mut rng);
        let (sw, ow) = weights(&mut rng, s.outgoing.len(), s.keep);
        let log = s.log();
        let interests = s.interest_set();
        let oracle = ScoringOracle::new(&s);
        let scored = score_subsets(&s.outgoing_ids(), &log, &interests, &s.published, &sw);
        if oracle.expected_total() == 0 {
            same!(scored.is_err(), true, "case {case}: nothing published must be rejected");
            continue;
        }
        let got = scored.map_err(|e| format!("case {case}: {e}"))?;
        let want = ScoringOracle::all_subsets(&s.outgoing, s.keep);
        same!(got.len(), want.len(), "case {case}: subset count");
        for (g, members) in got.iter().zip(&want) {
            let o = oracle.score(members, ow);
            same!(g.subset, ids(members), "case {case}: subset order");
            same!((g.f_d, g.f_c, g.f_w, g.total), (o.f_d, o.f_c, o.f_w, o.total), "case {case} {members:?}");
            let single = overall_score(&g.subset, &log, &interests, &s.published, &sw).map_err(|e| e.to_string())?;
            same!(single.total, o.total, "case {case}: overall score");
            same!(topic_delay_score(&g.subset, &log, &interests), o.f_d, "case {case}: delay");
            let cov = topic_coverage_score(&g.subset, &log, &interests, &s.published).map_err(|e| e.to_string())?;
            same!(cov, o.f_c, "case {case}: coverage");
            same!(bandwidth_wastage_score(&g.subset, &log, &interests), o.f_w, "case {case}: wastage");
            compared += 1;
        }

        let best =
            select_best_subset(&s.outgoing_ids(), &log, &interests, &s.published, &sw).map_err(|e| e.to_string())?;
        let obest = oracle.best(&s.outgoing, s.keep, ow);
        same!(best.subset, ids(&obest.members), "case {case}: retained subset");
        same!(best.total, obest.total, "case {case}: retained score");

        let topics: Vec<TopicId> =
            s.interests.iter().copied().filter(|&t| s.published[t as usize] > 0).map(TopicId).collect();
        if topics.is_empty() {
            continue;
        }
        let scored_set = TopicSet::from_topics(s.num_topics, topics);
        let per = per_topic_scores(&best.subset, &log, &scored_set, &s.published, &sw).map_err(|e| e.to_string())?;
        let oper = oracle.per_topic(&obest.members, ow);
        same!(per.len(), oper.len(), "case {case}: topic count");
        for (p, o) in per.iter().zip(&oper) {
            same!((p.topic.0, p.f_d, p.f_c, p.s), *o, "case {case}: per-topic score");
        }
        let plus: Vec<u32> = underperforming_topics(&per, sw.eta).into_iter().map(|t| t.0).collect();
        same!(plus, ScoringOracle::sigma_plus(&oper, ow.eta), "case {case}: underperforming topics");
    }
    Ok(compared)
}

pub struct GossipCase {
    pub adj: Adjacency,
    pub subs: SubscriptionTable,
    pub lat: LatencyModel,
    pub schedule: Vec<Message>,
    pub silent: Vec<u32>,
}

pub fn random_gossip_case<R: Rng>(rng: &mut R) -> GossipCase {
    let n = rng.gen_range(2..=8);
    let topics = rng.gen_range(1..=3);
    let mut edges = Vec::new();
    let density = rng.gen_range(0.15..0.8);
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            if rng.gen_bool(density) {
                edges.push((u, v));
            }
        }
    }
    let adj = Adjacency::from_edges(n, &edges);
    // Every topic keeps at least one subscriber and every node one topic.
    let mut sets: Vec<TopicSet> = (0..n)
        .map(|v| {
            let mut s = TopicSet::from_topics(topics, (0..topics).filter(|_| rng.gen_bool(0.4)).map(TopicId::from));
            if s.is_empty() {
                s.insert(TopicId::from(v % topics));
            }
            s
        })
        .collect();
    for t in 0..topics {
        if !sets.iter().any(|s| s.contains(TopicId::from(t))) {
            sets[rng.gen_range(0..n)].insert(TopicId::from(t));
        }
    }
    let subs = SubscriptionTable::from_sets(topics, sets).unwrap();
    let positions = (0..n).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect();
    let processing = (0..n).map(|_| rng.gen_range(0.001..0.05)).collect();
    let lat = LatencyModel::from_positions(positions, processing).unwrap();
    let schedule = (0..rng.gen_range(1..=4))
        .map(|k| {
            let topic = TopicId(rng.gen_range(0..topics as u32));
            let publishers = subs.subscribers(topic);
            Message {
                id: MessageId(k),
                topic,
                publisher: publishers[rng.gen_range(0..publishers.len())],
                publish_time: k as f64 * 100.0,
                initial_ttl: rng.gen_range(0..=2),
            }
        })
        .collect();
    let silent = if rng.gen_bool(0.2) { vec![rng.gen_range(0..n as u32)] } else { Vec::new() };
    GossipCase { adj, subs, lat, schedule, silent }
}

/// Compare first receipts and arrival TTLs with [`gossip_oracle`] on
/// `cases` random networks. Returns the number of receipts compared.
pub fn check_gossip(cases: usize, seed: u64) -> Result<usize, String> {
    use rand::SeedableRng;
    use topiary::gossip::{run_epoch, EngineOptions, RelayOverride};

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut receipts = 0;
    for case in 0..cases {
        let c = random_gossip_case(&mut rng);
        let n = c.adj.num_nodes();
        let silent: Vec<NodeId> = c.silent.iter().map(|&v| NodeId(v)).collect();
        let overrides =
            if silent.is_empty() { RelayOverride::none() } else { RelayOverride::withhold(n, &silent, None) };
        let trace = run_epoch(&c.adj, &c.subs, &c.lat, &c.schedule, &overrides, EngineOptions::default())
            .map_err(|e| format!("case {case}: {e}"))?;
        for (k, m) in c.schedule.iter().enumerate() {
            let want = gossip_oracle(&c.adj, &c.subs, &c.lat, m, &c.silent);
            for (v, expected) in want.iter().enumerate() {
                let node = NodeId(v as u32);
                if node == m.publisher {
                    continue;
                }
                let got = trace.summary.first_receipt(k, node);
                let ttl =
                    trace.receipts.iter().find(|r| r.message == m.id && r.receiver == node).map(|r| r.ttl_on_arrival);
                if got != expected.map(|(t, _)| t) || ttl != expected.map(|(_, t)| t) {
                    return Err(format!("case {case} message {k} node {v}: got {got:?}/{ttl:?}, oracle {expected:?}"));
                }
                receipts += usize::from(got.is_some());
            }
        }
    }
    Ok(receipts)
}
