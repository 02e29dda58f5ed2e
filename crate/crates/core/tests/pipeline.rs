use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use topiary::config::preset;
use topiary::experiment::{run_experiment, run_seed, seed_dir};
use topiary::gossip::{read_trace_csv, run_epoch, EngineOptions, PublicationSchedule, RelayOverride};
use topiary::metrics::{avg_propagation_delay, receive_rate};
use topiary::net::{build_subscriptions, complete_overlay, random_overlay, unit_square_latency, ProcessingDelay};
use topiary::NodeId;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn metrics_recompute_from_trace_csv() {
    let n = 80;
    let subs = build_subscriptions(n, 8, 0.3, &mut rng(1)).unwrap();
    let lat = unit_square_latency(n, ProcessingDelay::UNIT_SQUARE, &mut rng(2)).unwrap();
    let overlay = random_overlay(n, 4, &mut rng(3)).unwrap();
    for ttl in [0, 1, 2] {
        let schedule = PublicationSchedule::generate(&subs, 120, ttl, 50.0, &mut rng(4)).unwrap();
        let trace = run_epoch(
            &overlay.adjacency(),
            &subs,
            &lat,
            &schedule.messages,
            &RelayOverride::none(),
            EngineOptions::default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let back = read_trace_csv(n, buf.as_slice()).unwrap();
        assert_eq!(receive_rate(&back, &subs), receive_rate(&trace.summary, &subs));
        assert_eq!(avg_propagation_delay(&back, &subs), avg_propagation_delay(&trace.summary, &subs));
    }
}

#[test]
fn complete_graph_delay_has_closed_form() {
    let n = 30;
    let subs = build_subscriptions(n, 5, 0.4, &mut rng(7)).unwrap();
    let lat = unit_square_latency(n, ProcessingDelay::UNIT_SQUARE, &mut rng(8)).unwrap();
    let adj = complete_overlay(n).unwrap().adjacency();
    for ttl in [0, 1] {
        let schedule = PublicationSchedule::generate(&subs, 60, ttl, 50.0, &mut rng(9)).unwrap();
        let trace =
            run_epoch(&adj, &subs, &lat, &schedule.messages, &RelayOverride::none(), EngineOptions::default()).unwrap();
        let (mut sum, mut count) = (0.0, 0usize);
        for m in &schedule.messages {
            for &s in subs.subscribers(m.topic) {
                if s != m.publisher {
                    sum += lat.link(m.publisher, s) + lat.processing(m.publisher);
                    count += 1;
                }
            }
        }
        let got = avg_propagation_delay(&trace.summary, &subs).unwrap();
        assert!((got - sum / count as f64).abs() < 1e-9, "ttl {ttl}: {got} vs {}", sum / count as f64);
        assert_eq!(receive_rate(&trace.summary, &subs), Some(1.0));
    }
}

fn small() -> topiary::config::ExperimentConfig {
    preset("desk-200")
        .unwrap()
        .with_overrides(&[
            "network.nodes=50".into(),
            "topics.count=6".into(),
            "gossip.messages_per_epoch=60".into(),
            "epochs=5".into(),
        ])
        .unwrap()
}

#[test]
fn zero_attackers_reproduce_the_attack_free_run() {
    for kind in ["topic-withhold", "eclipse"] {
        let attacked = small()
            .with_overrides(&[
                format!("attack.kind=\"{kind}\""),
                "attack.attackers=0".into(),
                "attack.victim_topic=0".into(),
            ])
            .unwrap();
        let a = run_seed(&small(), 11).unwrap();
        let b = run_seed(&attacked, 11).unwrap();
        assert_eq!(a.overlays, b.overlays, "{kind}");
        for (x, y) in a.reports.iter().zip(&b.reports) {
            assert_eq!(
                (x.receive_rate, x.avg_delay, &x.score_distribution),
                (y.receive_rate, y.avg_delay, &y.score_distribution)
            );
        }
    }
}

#[test]
fn eclipse_clique_stays_outside_honest_budgets() {
    let cfg = small().with_overrides(&["attack.kind=\"eclipse\"".into(), "attack.attackers=10".into()]).unwrap();
    let run = run_seed(&cfg, 3).unwrap();
    assert_eq!(run.attackers.len(), 10);
    for g in &run.overlays {
        for v in 0..50 {
            let v = NodeId(v);
            assert_eq!(g.outgoing(v).len(), 6);
            let pinned = g.pinned(v).len();
            assert_eq!(pinned, if run.attackers.contains(&v) { 9 } else { 0 });
        }
    }
}

#[test]
fn serial_and_parallel_seeds_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut both = small();
    both.seeds = vec![21, 22];
    both.output.dir = dir.path().join("both");
    run_experiment(&both).unwrap();
    let mut alone = small();
    alone.seeds = vec![22];
    alone.output.dir = dir.path().join("alone");
    run_experiment(&alone).unwrap();
    for f in ["metrics.csv", "score_dist.csv", "overlay_epoch_4.csv", "exploration.csv", "topic_metrics.csv"] {
        let a = std::fs::read(seed_dir(&both.output.dir, 22).join(f)).unwrap();
        let b = std::fs::read(seed_dir(&alone.output.dir, 22).join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}
