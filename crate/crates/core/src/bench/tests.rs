use std::collections::BTreeMap;
use std::process::Command;
use std::time::Duration;

use proptest::prelude::*;

use super::*;
use crate::aiger::{check_solution_syntax, parse_ascii, AigBuilder};
use crate::game::solve_explicit;

fn explicit(aig: &crate::aiger::Aig) -> bool {
    solve_explicit(aig, &aig.partition_inputs()).unwrap().realizable
}

#[test]
fn counter_labels_match_explicit_solving() {
    for n in 1..=4 {
        for realizable in [true, false] {
            let b = cnt_benchmark(n, realizable).unwrap();
            assert_eq!(explicit(&b.aig), realizable, "{}", b.id);
            assert_eq!(b.id, format!("cnt{n}{}", if realizable { 'y' } else { 'n' }));
            parse_ascii(&b.aig.to_ascii()).unwrap();
        }
    }
}

#[test]
fn counter_width_is_checked() {
    assert_eq!(gen_cnt(0, true).err(), Some(GenError::CounterWidth(0)));
    assert_eq!(gen_cnt(31, true).err(), Some(GenError::CounterWidth(31)));
    assert!(gen_cnt(30, false).is_ok());
}

#[test]
fn counter_size_is_linear() {
    let sizes: Vec<usize> = (2..=8).map(|n| gen_cnt(n, true).unwrap().ands.len()).collect();
    let diffs: Vec<usize> = sizes.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(diffs.windows(2).all(|d| d[0] == d[1]), "{sizes:?}");
}

/// A core with one latch driven by the controller and nothing else.
fn free_core() -> (crate::aiger::Aig, u32) {
    let mut b = AigBuilder::new();
    let c = b.input(Some("controllable_c"));
    let l = b.latch(Some("l"));
    b.set_next(l, c);
    b.output(0, None);
    (b.finish(), l)
}

#[test]
fn counting_translation_examples() {
    let (core, _) = free_core();
    for mode in [CountingMode::Counting, CountingMode::Bitwise, CountingMode::FullSet] {
        for k in 1..=3 {
            let always = gen_counting_safety(&core, &[], &[1], k, mode).unwrap();
            assert!(explicit(&always), "{mode:?} k={k}");
        }
        let never = gen_counting_safety(&core, &[], &[0], 1, mode).unwrap();
        assert!(!explicit(&never), "{mode:?}");
    }
    assert_eq!(
        gen_counting_safety(&core, &[], &[], 1, CountingMode::Counting).err(),
        Some(GenError::NoProperties)
    );
    assert_eq!(gen_counting_safety(&core, &[], &[1], 0, CountingMode::Counting).err(), Some(GenError::Bound));
}

#[test]
fn counting_modes_agree_on_toy() {
    let (core, a, g) = toy_arbiter();
    let c = gen_counting_safety(&core, &[a], &[g], 3, CountingMode::Counting).unwrap();
    let b = gen_counting_safety(&core, &[a], &[g], 3, CountingMode::Bitwise).unwrap();
    assert_eq!(explicit(&c), explicit(&b));
    // also with a guarantee the controller fully owns
    let (core, l) = free_core();
    let c = gen_counting_safety(&core, &[1], &[l], 3, CountingMode::Counting).unwrap();
    let b = gen_counting_safety(&core, &[1], &[l], 3, CountingMode::Bitwise).unwrap();
    assert!(explicit(&c) && explicit(&b));
}

#[test]
fn corpus_labels_are_ground_truth() {
    for b in default_corpus(3, 10, 7) {
        if let Some(e) = b.expected {
            assert_eq!(explicit(&b.aig), e, "{}", b.id);
        }
        assert_eq!(b.aig.outputs.len(), 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_games_are_well_formed(seed in any::<u64>(), latches in 0usize..5, ands in 0usize..25) {
        let params = RandomGameParams { latches, uncontrollable: 2, controllable: 1, ands };
        let aig = gen_random(params, seed);
        prop_assert_eq!(&gen_random(params, seed), &aig);
        let text = aig.to_ascii();
        prop_assert_eq!(parse_ascii(&text).unwrap(), aig.clone());
        prop_assert!(crate::sim::and_order(&aig).is_ok());
        // an unmodified specification is never a valid solution of itself
        prop_assert!(!check_solution_syntax(&aig, &aig).passed());
    }

    #[test]
    fn relative_points_are_conserved(metrics in prop::collection::vec(prop::option::of(0u8..5), 1..7)) {
        let metrics: Vec<Option<f64>> = metrics.into_iter().map(|m| m.map(f64::from)).collect();
        let pts = rank_points(&metrics, 100.0);
        let solved = metrics.iter().filter(|m| m.is_some()).count();
        let expected = if solved == 0 { 0.0 } else { 100.0 };
        prop_assert!((pts.iter().sum::<f64>() - expected).abs() < 1e-9);
        for (m, p) in metrics.iter().zip(&pts) {
            if m.is_none() { prop_assert_eq!(*p, 0.0); }
        }
        for (i, a) in metrics.iter().enumerate() {
            for (j, b) in metrics.iter().enumerate() {
                if let (Some(a), Some(b)) = (a, b) {
                    if a < b { prop_assert!(pts[i] > pts[j]); }
                    if a == b { prop_assert!((pts[i] - pts[j]).abs() < 1e-12); }
                }
            }
        }
    }

    #[test]
    fn quality_points_are_monotone(reference in 1usize..1000, a in 0usize..100_000, b in 0usize..100_000) {
        let (small, large) = (a.min(b), a.max(b));
        prop_assert!(quality_points(small, reference) >= quality_points(large, reference));
        prop_assert!(quality_points(large, reference) >= 0.0);
    }
}

fn rec(bench: &str, config: &str, status: RunStatus, time: f64, size: Option<usize>) -> RunRecord {
    RunRecord {
        benchmark: bench.into(),
        config: config.into(),
        status,
        time_s: time,
        size,
    }
}

#[test]
fn relative_ranking_examples() {
    // ten benchmarks, three solvers; only b0 is solved, by all three
    let mut records = Vec::new();
    for b in 0..10 {
        for (c, t) in [("a", 1.0), ("b", 2.0), ("c", 3.0)] {
            let status = if b == 0 { RunStatus::SolvedReal } else { RunStatus::Timeout };
            records.push(rec(&format!("b{b}"), c, status, t, None));
        }
    }
    let s = relative_ranking(&records, Track::Realizability);
    assert!((s.get("a") - 50.0).abs() < 1e-9);
    assert!((s.get("b") - 100.0 / 3.0).abs() < 1e-9);
    assert!((s.get("c") - 100.0 / 6.0).abs() < 1e-9);

    let single = vec![rec("x", "only", RunStatus::SolvedUnreal, 5.0, None)];
    assert!((relative_ranking(&single, Track::Realizability).get("only") - 1000.0).abs() < 1e-9);

    let tie = vec![
        rec("x", "a", RunStatus::SolvedReal, 1.0, None),
        rec("x", "b", RunStatus::SolvedReal, 1.0, None),
        rec("x", "c", RunStatus::SolvedReal, 2.0, None),
    ];
    let s = relative_ranking(&tie, Track::Realizability);
    let (r1, r2) = (3.0 / 6.0 * 1000.0, 2.0 / 6.0 * 1000.0);
    assert!((s.get("a") - (r1 + r2) / 2.0).abs() < 1e-9);
    assert!((s.get("a") - s.get("b")).abs() < 1e-12);

    // only the solvers that succeed share the benchmark: two of three
    // solving gives f = 3
    let partial = vec![
        rec("x", "a", RunStatus::SolvedReal, 1.0, None),
        rec("x", "b", RunStatus::SolvedReal, 2.0, None),
        rec("x", "c", RunStatus::Timeout, 0.5, None),
    ];
    let s = relative_ranking(&partial, Track::Realizability);
    assert!((s.get("a") - 2000.0 / 3.0).abs() < 1e-9);
    assert!((s.get("b") - 1000.0 / 3.0).abs() < 1e-9);
    assert_eq!(s.get("c"), 0.0);
}

#[test]
fn quality_ranking_examples() {
    assert_eq!(quality_points(50, 50), 2.0);
    assert!((quality_points(500, 50) - 1.0).abs() < 1e-12);
    assert_eq!(quality_points(50_000, 50), 0.0);
    assert!(quality_points(0, 1) == 2.0);

    let records = vec![
        rec("x", "a", RunStatus::SolvedReal, 1.0, Some(10)),
        rec("x", "b", RunStatus::SolvedReal, 1.0, Some(100)),
        rec("x", "c", RunStatus::Timeout, 9.0, None),
    ];
    let s = quality_ranking(&records, &BTreeMap::new());
    assert_eq!(s.get("a"), 2.0);
    assert!((s.get("b") - 1.0).abs() < 1e-12);
    assert_eq!(s.get("c"), 0.0);
    let refs = BTreeMap::from([("x".to_string(), 100)]);
    assert_eq!(quality_ranking(&records, &refs).get("b"), 2.0);
}

#[test]
fn records_round_trip_through_csv() {
    let records = vec![
        rec("cnt2y", "bdd", RunStatus::SolvedReal, 0.25, Some(7)),
        rec("cnt2n", "sat", RunStatus::McFail, 1.5, None),
    ];
    let mut buf = Vec::new();
    write_records(&mut buf, &records).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("benchmark,config,status,time_s,size\n"));
    assert!(text.contains("cnt2y,bdd,SOLVED_REAL,0.25,7"));
    assert_eq!(read_records(buf.as_slice()).unwrap(), records);
}

#[test]
fn manifest_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let benches = vec![cnt_benchmark(2, true).unwrap(), cnt_benchmark(2, false).unwrap()];
    let manifest = write_corpus(dir.path(), &benches).unwrap();
    let entries = read_manifest(&manifest).unwrap();
    assert_eq!(entries.len(), 2);
    assert_eq!(entries[0].id(), "cnt2y");
    assert_eq!(entries[1].expected, Some(false));
    std::fs::write(dir.path().join("bad.txt"), "x.aag MAYBE\n").unwrap();
    assert!(read_manifest(&dir.path().join("bad.txt")).is_err());
}

#[test]
fn empty_suite_gives_no_records() {
    let dir = tempfile::tempdir().unwrap();
    let configs = vec![SuiteConfig {
        id: "x".into(),
        program: "true".into(),
        args: vec![],
        synthesize: false,
    }];
    let opts = SuiteOptions::new(Duration::from_secs(1), dir.path().to_path_buf());
    assert!(run_suite(&[], &configs, &opts).is_empty());
}

#[test]
fn process_timeout_and_cpu_time() {
    let out = run_process(Command::new("sleep").arg("5"), Duration::from_millis(100)).unwrap();
    assert!(out.timed_out);
    assert!(out.wall_time < Duration::from_secs(4));
    let out = run_process(Command::new("sh").args(["-c", "echo REALIZABLE; exit 0"]), Duration::from_secs(5)).unwrap();
    assert!(!out.timed_out);
    assert_eq!(out.exit_code, Some(0));
    assert_eq!(out.stdout, "REALIZABLE\n");
}

#[test]
fn harness_classifies_answers() {
    let dir = tempfile::tempdir().unwrap();
    let benches = vec![cnt_benchmark(2, true).unwrap(), cnt_benchmark(2, false).unwrap()];
    let manifest = write_corpus(dir.path(), &benches).unwrap();
    let entries = read_manifest(&manifest).unwrap();
    let sh = |id: &str, script: &str| script_config(dir.path(), id, script);
    let configs = vec![
        sh("liar", "echo REALIZABLE"),
        sh("sleepy", "sleep 5"),
        sh("crash", "exit 7"),
    ];
    let mut opts = SuiteOptions::new(Duration::from_millis(200), dir.path().to_path_buf());
    opts.workers = 3;
    let records = run_suite(&entries, &configs, &opts);
    assert_eq!(records.len(), 6);
    let status = |b: &str, c: &str| {
        records
            .iter()
            .find(|r| r.benchmark == b && r.config == c)
            .unwrap()
            .status
    };
    assert_eq!(status("cnt2y", "liar"), RunStatus::SolvedReal);
    assert_eq!(status("cnt2n", "liar"), RunStatus::Error);
    assert_eq!(status("cnt2y", "sleepy"), RunStatus::Timeout);
    assert_eq!(status("cnt2n", "sleepy"), RunStatus::Timeout);
    assert_eq!(status("cnt2y", "crash"), RunStatus::Error);
    assert!(records.iter().all(|r| r.size.is_none()));
}

/// A configuration running `script` as an executable that ignores the
/// harness arguments.
fn script_config(dir: &std::path::Path, id: &str, script: &str) -> SuiteConfig {
    use std::os::unix::fs::PermissionsExt;
    let path = dir.join(format!("{id}.sh"));
    std::fs::write(&path, format!("#!/bin/sh\n{script}\n")).unwrap();
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
    SuiteConfig {
        id: id.into(),
        program: path,
        args: vec![],
        synthesize: false,
    }
}
