//! Multi-epoch runs: network construction, the epoch loop and output files.
//!
//! Each seed builds its network from independent random streams, then
//! repeats gossip, measurement and policy update for every epoch. Seeds run
//! in parallel and never share mutable state, so per-seed output does not
//! depend on how many seeds run at once.

use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::adversary::{
    apply_eclipse, apply_topic_withhold, attacker_share, attacker_share_per_node, choose_attackers, honest_nodes,
    AttackKind,
};
use crate::config::{validate_config, ExperimentConfig, NetworkKind};
use crate::error::{Error, Result};
use crate::gossip::{default_round_interval, run_epoch, EngineOptions, EpochTrace, PublicationSchedule, RelayOverride};
use crate::ids::{NodeId, TopicId};
use crate::metrics::{
    avg_propagation_delay, avg_propagation_delay_in, receive_rate, receive_rate_in, score_statistics, topic_breakdown,
    AttackMetrics, EpochReport, MetricScope,
};
use crate::net::{
    build_subscriptions, load_latency_matrix, unit_square_latency, LatencyModel, OverlayGraph, SubscriptionTable,
};
use crate::protocols::{initial_overlay, topiary_round, PolicyKind};
use crate::report::{summary_csv, write_file, write_reports};
use crate::rng::{epoch_stream, stream, Stream};
use crate::scoring::{interested_published, overall_score, ScoreWeights, SubsetScore};

/// Everything fixed for the lifetime of one seed's run.
#[derive(Clone, Debug)]
pub struct Network {
    pub latency: LatencyModel,
    pub subscriptions: SubscriptionTable,
    /// Sorted; empty without an attack.
    pub attackers: Vec<NodeId>,
    pub overrides: RelayOverride,
    pub initial_overlay: OverlayGraph,
}

/// Build latency, subscriptions, attackers and the epoch-0 overlay.
pub fn build_network(cfg: &ExperimentConfig, seed: u64) -> Result<Network> {
    let delay = cfg.network.processing();
    let latency = match cfg.network.kind {
        NetworkKind::UnitSquare => {
            let n = cfg.network.nodes.ok_or_else(|| Error::config("unit-square network needs `nodes`"))?;
            unit_square_latency(n, delay, &mut stream(seed, Stream::Placement))
        }
        NetworkKind::Matrix => {
            let path =
                cfg.network.matrix_path.as_ref().ok_or_else(|| Error::config("matrix network needs `matrix_path`"))?;
            load_latency_matrix(path, delay, &mut stream(seed, Stream::ProcessingDelay))
        }
    }
    .map_err(|e| e.in_stage("latency"))?;
    let n = latency.num_nodes();

    let mut subscriptions =
        build_subscriptions(n, cfg.topics.count, cfg.topics.interest_rate, &mut stream(seed, Stream::Subscriptions))
            .map_err(|e| e.in_stage("subscriptions"))?;

    let attack = cfg.attack.as_ref().filter(|a| a.attackers > 0);
    let attackers =
        attack.map_or_else(Vec::new, |a| choose_attackers(n, a.attackers, &mut stream(seed, Stream::Attackers)));
    let mut overrides = RelayOverride::none();
    if let Some(a) = attack {
        if a.kind == AttackKind::TopicWithhold {
            let victim = TopicId(
                a.victim_topic.ok_or_else(|| Error::config("topic-withhold needs victim_topic").in_stage("attack"))?,
            );
            overrides = apply_topic_withhold(&mut subscriptions, &attackers, victim);
        }
    }

    let mut overlay = initial_overlay(
        cfg.policy.kind,
        &subscriptions,
        cfg.overlay.degree,
        cfg.policy.num_groups,
        &mut stream(seed, Stream::InitialOverlay),
    )
    .map_err(|e| e.in_stage("overlay"))?;
    if let Some(a) = attack {
        if a.kind == AttackKind::Eclipse {
            overrides = apply_eclipse(&mut overlay, &attackers, a.withhold);
        }
    }
    Ok(Network { latency, subscriptions, attackers, overrides, initial_overlay: overlay })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExplorationRow {
    pub epoch: usize,
    pub node: NodeId,
    pub sigma_plus: Vec<TopicId>,
    pub replaced: Vec<NodeId>,
    pub added: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubsetRow {
    pub epoch: usize,
    pub node: NodeId,
    pub score: SubsetScore,
    pub retained: bool,
}

/// In-memory result of one seed.
#[derive(Clone, Debug)]
pub struct SeedRun {
    pub seed: u64,
    pub attackers: Vec<NodeId>,
    pub subscriptions: SubscriptionTable,
    pub reports: Vec<EpochReport>,
    /// The overlay in force during each epoch.
    pub overlays: Vec<OverlayGraph>,
    pub exploration: Vec<ExplorationRow>,
    pub subset_scores: Vec<SubsetRow>,
    /// Serialized delivery traces, when requested.
    pub traces: Vec<Vec<u8>>,
}

fn attack_metrics(
    cfg: &ExperimentConfig,
    net: &Network,
    overlay: &OverlayGraph,
    trace: &EpochTrace,
) -> Option<AttackMetrics> {
    let a = cfg.attack.as_ref()?;
    let n = overlay.num_nodes();
    let honest = honest_nodes(n, &net.attackers);
    let (observers, coverage, delay) = match a.kind {
        AttackKind::TopicWithhold => {
            let victim = TopicId(a.victim_topic?);
            let observers: Vec<NodeId> =
                honest.into_iter().filter(|&v| net.subscriptions.subscribes(v, victim)).collect();
            let scope = MetricScope { topic: Some(victim), excluded: &net.attackers };
            (
                observers,
                receive_rate_in(&trace.summary, &net.subscriptions, scope),
                avg_propagation_delay_in(&trace.summary, &net.subscriptions, scope),
            )
        }
        AttackKind::Eclipse => (honest, None, None),
    };
    let max_node_share = attacker_share_per_node(overlay, &net.attackers, &observers).into_iter().fold(0.0, f64::max);
    Some(AttackMetrics {
        victim_topic_coverage: coverage,
        victim_topic_delay: delay,
        attacker_outgoing_fraction: attacker_share(overlay, &net.attackers, &observers),
        max_node_share,
    })
}

/// Score every node's whole outgoing set; used by the static policies.
fn static_scores(
    overlay: &OverlayGraph,
    trace: &EpochTrace,
    subs: &SubscriptionTable,
    weights: &ScoreWeights,
) -> Result<Vec<f64>> {
    let scores: Vec<Option<f64>> = (0..overlay.num_nodes())
        .into_par_iter()
        .map(|v| {
            let node = NodeId::from(v);
            let published = trace.published_counts_for(node);
            if interested_published(subs.topics(node), &published) == 0 || overlay.outgoing(node).is_empty() {
                return Ok(None);
            }
            overall_score(overlay.outgoing(node), &trace.logs[v], subs.topics(node), &published, weights)
                .map(|s| Some(s.total))
        })
        .collect::<Result<_>>()?;
    Ok(scores.into_iter().flatten().collect())
}

/// Run one seed entirely in memory.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedRun> {
    run_seed_window(cfg, seed, 0..cfg.epochs)
}

/// Run only `epochs` of one seed.
///
/// Static policies never change the overlay and every epoch draws its own
/// publications, so any window reproduces those epochs of the full run
/// exactly. The adaptive policy depends on all earlier epochs and accepts
/// only windows starting at 0.
pub fn run_seed_window(cfg: &ExperimentConfig, seed: u64, epochs: Range<usize>) -> Result<SeedRun> {
    if epochs.start > 0 && !cfg.policy.kind.is_static() {
        return Err(Error::config("an adaptive run cannot start after epoch 0"));
    }
    let net = build_network(cfg, seed)?;
    let subs = &net.subscriptions;
    let weights = cfg.score_weights();
    let interval = cfg.gossip.round_interval.unwrap_or_else(|| default_round_interval(&net.latency));
    let options = EngineOptions { record_deliveries: false };

    let mut run = SeedRun {
        seed,
        attackers: net.attackers.clone(),
        subscriptions: subs.clone(),
        reports: Vec::with_capacity(cfg.epochs),
        overlays: Vec::with_capacity(cfg.epochs),
        exploration: Vec::new(),
        subset_scores: Vec::new(),
        traces: Vec::new(),
    };
    let mut overlay = net.initial_overlay.clone();
    for epoch in epochs {
        let schedule = PublicationSchedule::generate(
            subs,
            cfg.gossip.messages_per_epoch,
            cfg.gossip.initial_ttl,
            interval,
            &mut epoch_stream(seed, Stream::Publication, epoch),
        )
        .map_err(|e| e.in_stage("schedule"))?;
        let trace = run_epoch(&overlay.adjacency(), subs, &net.latency, &schedule.messages, &net.overrides, options)
            .map_err(|e| e.in_stage("gossip"))?;
        if cfg.output.traces {
            let mut buf = Vec::new();
            trace.write_csv(&mut buf).map_err(|e| Error::csv(format!("trace of epoch {epoch}"), e))?;
            run.traces.push(buf);
        }

        let (next, scores) = if cfg.policy.kind == PolicyKind::Topiary {
            let (next, updates) =
                topiary_round(&overlay, &trace, subs, &weights, seed, epoch, cfg.output.subset_scores)
                    .map_err(|e| e.in_stage("policy"))?;
            let mut scores = Vec::with_capacity(updates.len());
            for u in updates {
                let Some(best) = u.retained else { continue };
                scores.push(best.total);
                if cfg.output.exploration {
                    let replaced =
                        overlay.outgoing(u.node).iter().filter(|v| !best.subset.contains(v)).copied().collect();
                    run.exploration.push(ExplorationRow {
                        epoch,
                        node: u.node,
                        sigma_plus: u.plan.sigma_plus.clone(),
                        replaced,
                        added: u.plan.sampled.clone(),
                    });
                }
                for score in u.evaluated {
                    let retained = score.subset == best.subset;
                    run.subset_scores.push(SubsetRow { epoch, node: u.node, score, retained });
                }
            }
            (next, scores)
        } else {
            let scores = static_scores(&overlay, &trace, subs, &weights).map_err(|e| e.in_stage("policy"))?;
            (overlay.clone(), scores)
        };

        let (avg_neighbor_score, score_distribution) = score_statistics(&scores);
        run.reports.push(EpochReport {
            epoch,
            receive_rate: receive_rate(&trace.summary, subs),
            avg_delay: avg_propagation_delay(&trace.summary, subs),
            avg_neighbor_score,
            score_distribution,
            per_topic: topic_breakdown(&trace.summary, subs),
            attack: attack_metrics(cfg, &net, &overlay, &trace),
        });
        run.overlays.push(std::mem::replace(&mut overlay, next));
    }
    Ok(run)
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Manifest text: the configuration restricted to this seed, preceded by
/// the hash of the full configuration. Running it reproduces the seed.
pub fn manifest(cfg: &ExperimentConfig, seed: u64) -> String {
    let mut single = cfg.clone();
    single.seeds = vec![seed];
    if let Some(p) = single.network.matrix_path.as_mut() {
        if let Ok(abs) = fs::canonicalize(&*p) {
            *p = abs;
        }
    }
    format!("# config_hash = {}\n# seed = {seed}\n{}", cfg.hash(), single.to_toml())
}

/// Write every file of one seed under `dir`.
pub fn write_seed(cfg: &ExperimentConfig, run: &SeedRun, dir: &Path) -> Result<()> {
    write_reports(&run.reports, dir)?;
    write_file(&dir.join("subscriptions.csv"), |w| run.subscriptions.write_csv(w))?;
    if cfg.output.overlays {
        for (k, g) in run.overlays.iter().enumerate() {
            write_file(&dir.join(format!("overlay_epoch_{k}.csv")), |w| g.write_edge_csv(k, w))?;
        }
    }
    if cfg.policy.kind == PolicyKind::Topiary && cfg.output.exploration {
        write_file(&dir.join("exploration.csv"), |w| {
            let mut w = csv::Writer::from_writer(w);
            w.write_record(["epoch", "node_id", "sigma_plus_topics", "replaced_neighbors", "new_neighbors"])?;
            for r in &run.exploration {
                w.write_record([
                    r.epoch.to_string(),
                    r.node.to_string(),
                    join(&r.sigma_plus),
                    join(&r.replaced),
                    join(&r.added),
                ])?;
            }
            w.flush()?;
            Ok(())
        })?;
    }
    if cfg.policy.kind == PolicyKind::Topiary && cfg.output.subset_scores {
        write_file(&dir.join("subset_scores.csv"), |w| {
            let mut w = csv::Writer::from_writer(w);
            w.write_record(["epoch", "node_id", "subset_members", "f_c", "f_d", "f_w", "total", "retained_flag"])?;
            for r in &run.subset_scores {
                let s = &r.score;
                w.write_record([
                    r.epoch.to_string(),
                    r.node.to_string(),
                    join(&s.subset),
                    s.f_c.to_string(),
                    s.f_d.to_string(),
                    s.f_w.to_string(),
                    s.total.to_string(),
                    u8::from(r.retained).to_string(),
                ])?;
            }
            w.flush()?;
            Ok(())
        })?;
    }
    for (k, bytes) in run.traces.iter().enumerate() {
        let path = dir.join(format!("trace_epoch_{k}.csv"));
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    }
    let path = dir.join("manifest.toml");
    fs::write(&path, manifest(cfg, run.seed)).map_err(|e| Error::io(&path, e))
}

/// Outcome of one seed within [`run_experiment`].
#[derive(Debug)]
pub struct SeedOutcome {
    pub seed: u64,
    pub dir: PathBuf,
    pub result: Result<Vec<EpochReport>>,
}

pub fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed-{seed}"))
}

/// Validate, run every seed in parallel and write `<out>/seed-<s>/...` plus
/// `<out>/summary.csv` over the seeds that succeeded.
///
/// A failing seed does not stop the others; its error names the failing
/// stage. Validation failures abort before anything runs.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<SeedOutcome>> {
    let violations = validate_config(cfg);
    if !violations.is_empty() {
        return Err(Error::config(violations.join("; ")).in_stage("validate"));
    }
    let out = &cfg.output.dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e).in_stage("report"))?;
    let outcomes: Vec<SeedOutcome> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let dir = seed_dir(out, seed);
            let result = run_seed(cfg, seed)
                .and_then(|run| write_seed(cfg, &run, &dir).map_err(|e| e.in_stage("report")).map(|()| run.reports));
            SeedOutcome { seed, dir, result }
        })
        .collect();
    let ok: Vec<&[EpochReport]> = outcomes.iter().filter_map(|o| o.result.as_deref().ok()).collect();
    write_file(&out.join("summary.csv"), |w| summary_csv(&ok, w)).map_err(|e| e.in_stage("report"))?;
    Ok(outcomes)
}
