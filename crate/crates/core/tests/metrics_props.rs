use std::collections::BTreeMap;
use std::sync::Arc;

use zsnav_core::env_graph::{generate_synthetic, SynthParams};
use zsnav_core::metrics::{best_osr_per_scan, judge_episode, osr, spl, sr};
use zsnav_core::policy::{StepRecord, StopReason, Trajectory};
use zsnav_core::runner::{run_batch, Execution, RunSpec, World, Worlds};
use zsnav_core::{EpisodeResult, OracleScorer, PolicyConfig, PolicyKind, SplitLabel};

fn row(id: &str, scan: &str, s: bool, o: bool, p: f64, l: f64) -> EpisodeResult {
    EpisodeResult {
        episode_id: id.into(),
        scan_id: scan.into(),
        split_label: SplitLabel::Unseen,
        success: s,
        oracle_success: o,
        path_length_m: p,
        shortest_length_m: l,
        steps: 0,
    }
}

#[test]
fn mixed_batch_matches_hand_spreadsheet() {
    let batch = [
        row("e1", "a", true, true, 12.0, 10.0),
        row("e2", "a", false, true, 30.0, 8.0),
        row("e3", "b", true, true, 4.0, 6.0),
        row("e4", "b", false, false, 9.5, 7.0),
        row("e5", "b", true, true, 25.0, 5.0),
    ];
    // Per-episode terms: 10/12, 0, 6/6, 0, 5/25.
    let spl_by_hand = (10.0 / 12.0 + 1.0 + 0.2) / 5.0;
    assert!((spl(&batch).unwrap() - spl_by_hand).abs() <= 1e-12 * spl_by_hand);
    assert_eq!(sr(&batch).unwrap(), 60.0);
    assert_eq!(osr(&batch).unwrap(), 80.0);
}

fn random_walk_batch(seeds: std::ops::RangeInclusive<u64>) -> Vec<EpisodeResult> {
    let mut worlds = Worlds::new();
    let mut episodes = Vec::new();
    for seed in seeds {
        let (g, eps) = generate_synthetic(seed, &SynthParams::default()).unwrap();
        let g = Arc::new(g);
        worlds.insert(
            g.scan_id().to_string(),
            World {
                scorer: Arc::new(OracleScorer::new(g.clone(), 0.8)),
                graph: g,
            },
        );
        episodes.extend(eps);
    }
    let spec = RunSpec::new(
        PolicyKind::Random,
        PolicyConfig {
            random_walk_steps: 12,
            ..PolicyConfig::default()
        },
    );
    run_batch(&worlds, &episodes, &spec, Execution::default())
        .unwrap()
        .into_iter()
        .map(|o| o.result)
        .collect()
}

#[test]
fn random_walk_batches_keep_metric_ordering() {
    let results = random_walk_batch(1..=50);
    assert_eq!(results.len(), 200);
    for chunk in results.chunks(4) {
        let (s, o, p) = (sr(chunk).unwrap(), osr(chunk).unwrap(), spl(chunk).unwrap());
        assert!(0.0 <= p && p <= s / 100.0 && s <= o && o <= 100.0);
    }
    assert!(osr(&results).unwrap() > 0.0);
}

#[test]
fn per_scan_osr_matches_group_by() {
    let results = random_walk_batch(1..=12);
    let mut groups: BTreeMap<&str, Vec<&EpisodeResult>> = BTreeMap::new();
    for r in &results {
        groups.entry(&r.scan_id).or_default().push(r);
    }
    let per_scan = best_osr_per_scan(&results);
    assert_eq!(per_scan.len(), groups.len());
    for (scan, rows) in groups {
        let hits = rows.iter().filter(|r| r.oracle_success).count() as f64;
        assert_eq!(per_scan[scan], 100.0 * hits / rows.len() as f64);
    }
}

#[test]
fn shortest_path_trajectories_score_full_spl() {
    for seed in 1..=50 {
        let (g, episodes) = generate_synthetic(seed, &SynthParams::default()).unwrap();
        for e in &episodes {
            let goal = e
                .goals
                .iter()
                .min_by(|a, b| {
                    let da = g.shortest_path(&e.start, a).unwrap().0;
                    let db = g.shortest_path(&e.start, b).unwrap().0;
                    da.total_cmp(&db)
                })
                .unwrap();
            let (_, nodes) = g.shortest_path(&e.start, goal).unwrap();
            let steps = nodes
                .windows(2)
                .map(|w| StepRecord {
                    from: w[0].clone(),
                    to: Some(w[1].clone()),
                    keyphrase: None,
                    keyphrase_index: None,
                    kgs: None,
                    taken_split: None,
                    ac_score: None,
                    advanced: false,
                    backtracked: false,
                })
                .collect();
            let t = Trajectory {
                nodes,
                stop_reason: StopReason::AcThreshold,
                steps,
                sgs_checks: vec![],
                final_ac_score: Some(1.0),
            };
            let r = judge_episode(&g, e, &t, 0.0, SplitLabel::Seen).unwrap();
            assert!(r.success);
            assert_eq!(r.path_length_m, r.shortest_length_m);
            assert_eq!(spl(&[r]).unwrap(), 1.0);
        }
    }
}
