use super::*;
use crate::aiger::parse_ascii;
use crate::sim::simulate;

/// l' = l ∨ (u ∧ ¬c), out = l.
const BLOCKABLE: &str = "aag 5 2 1 1 2\n2\n4\n6 11\n6\n8 2 5\n10 7 9\ni0 u\ni1 controllable_c\n";
/// l' = l ∨ u, out = l.
const FORCED: &str = "aag 3 1 1 1 1\n2\n4 7\n4\n6 5 3\ni0 u\n";
/// out = u ∧ c with no latches: the controller answers c = 0.
const COMBINATIONAL: &str = "aag 3 2 0 1 1\n2\n4\n6\n6 2 4\ni0 u\ni1 controllable_c\n";

fn setup(text: &str) -> (Aig, NodeStore, GameEncoding) {
    let aig = parse_ascii(text).unwrap();
    let mut store = NodeStore::new();
    let enc = encode(&aig, &aig.partition_inputs(), &mut store, &EncodeOptions::default()).unwrap();
    (aig, store, enc)
}

fn states_of(store: &NodeStore, enc: &GameEncoding, f: Func) -> Vec<bool> {
    (0..1usize << enc.num_latches())
        .map(|s| {
            store.eval_with(f, |v| match enc.latch_of(v) {
                Some(i) => s >> i & 1 == 1,
                None => panic!("function depends on non-latch variable {v:?}"),
            })
        })
        .collect()
}

#[test]
fn identity_latch_is_direct() {
    let (_, mut store, enc) = setup("aag 1 0 1 1 0\n2 2\n2\n");
    let l = store.var(enc.latch_vars[0]).unwrap();
    assert_eq!(enc.update_fns[0], l);
    assert_eq!(enc.direct_sub.get(&0), Some(&enc.latch_vars[0]));
    assert!(enc.out_is_latch);
}

#[test]
fn update_support() {
    let (_, store, enc) = setup(BLOCKABLE);
    let mut expected = vec![enc.latch_vars[0], enc.uncontrollable_vars[0], enc.controllable_vars[0]];
    expected.sort();
    assert_eq!(store.support(enc.update_fns[0]), expected);
    assert!(enc.direct_sub.is_empty());
}

#[test]
fn encode_matches_simulation() {
    let (aig, store, enc) = setup(BLOCKABLE);
    for s in 0..2 {
        for u in 0..2 {
            for c in 0..2 {
                let mut sim = crate::sim::Simulator::new(&aig).unwrap();
                sim.set_state(&[s == 1]);
                let out = sim.step(&[u == 1, c == 1]).unwrap();
                let val = |v: VarId| {
                    if v == enc.latch_vars[0] {
                        s == 1
                    } else if v == enc.uncontrollable_vars[0] {
                        u == 1
                    } else {
                        c == 1
                    }
                };
                assert_eq!(store.eval_with(enc.update_fns[0], val), sim.state()[0]);
                assert_eq!(store.eval_with(enc.bad_fn, val), out[0]);
            }
        }
    }
}

#[test]
fn upre_examples() {
    let (_, mut store, mut enc) = setup(BLOCKABLE);
    let l = store.var(enc.latch_vars[0]).unwrap();
    for mode in [UpreMode::Partitioned, UpreMode::Monolithic] {
        let opts = SolveOptions {
            upre: mode,
            ..SolveOptions::exact()
        };
        let r = upre(&mut enc, &mut store, l, &opts);
        assert_eq!(r, l, "{mode:?}");
        let ff = store.ff();
        let f = upre(&mut enc, &mut store, ff, &opts);
        assert!(f.is_false());
        let tt = store.tt();
        let t = upre(&mut enc, &mut store, tt, &opts);
        assert!(t.is_true());
    }
}

#[test]
fn blockable_game_is_realizable() {
    let (_, mut store, mut enc) = setup(BLOCKABLE);
    let w = solve(&mut enc, &mut store, &SolveOptions::exact()).unwrap();
    assert!(w.realizable);
    assert_eq!(states_of(&store, &enc, w.w), vec![true, false]);
}

#[test]
fn forced_game_is_unrealizable() {
    let (aig, mut store, mut enc) = setup(FORCED);
    let w = solve(&mut enc, &mut store, &SolveOptions::exact()).unwrap();
    assert!(!w.realizable);
    assert!(w.exact);
    let e = solve_explicit(&aig, &aig.partition_inputs()).unwrap();
    assert_eq!(states_of(&store, &enc, w.w), e.winning);
    let early = solve(&mut enc, &mut store, &SolveOptions::default()).unwrap();
    assert!(!early.realizable && !early.exact);
}

#[test]
fn nothing_unsafe_means_everything_wins() {
    let (_, mut store, mut enc) = setup("aag 2 1 1 1 0\n2\n4 2\n0\n");
    let w = solve(&mut enc, &mut store, &SolveOptions::exact()).unwrap();
    assert!(w.realizable);
    assert!(w.w.is_true());
    assert_eq!(w.iterations, 1);
}

#[test]
fn combinational_output_variants_agree() {
    for text in [COMBINATIONAL, BLOCKABLE, FORCED] {
        let (aig, mut store, mut enc) = setup(text);
        let e = solve_explicit(&aig, &aig.partition_inputs()).unwrap();
        let mut ids = Vec::new();
        for variant in [Variant::Standard, Variant::NoOutLatch] {
            for upre_mode in [UpreMode::Partitioned, UpreMode::Monolithic] {
                for restrict_neg_s in [false, true] {
                    let opts = SolveOptions {
                        variant,
                        upre: upre_mode,
                        restrict_neg_s,
                        ..SolveOptions::exact()
                    };
                    let w = solve(&mut enc, &mut store, &opts).unwrap();
                    assert_eq!(w.realizable, e.realizable);
                    ids.push(w.w.id());
                }
            }
        }
        assert!(ids.windows(2).all(|p| p[0] == p[1]), "{text}: {ids:?}");
    }
}

#[test]
fn iterates_are_monotone() {
    let (_, mut store, mut enc) = setup(FORCED);
    let opts = SolveOptions {
        record_iterates: true,
        ..SolveOptions::exact()
    };
    let w = solve(&mut enc, &mut store, &opts).unwrap();
    for pair in w.iterates.windows(2) {
        let imp = store.imp(pair[0], pair[1]);
        assert!(imp.is_true());
    }
}

#[test]
fn free_counter_reaches_everything() {
    // 2-bit counter: b0' = ¬b0, b1' = b1 xor b0
    let text = "aag 6 0 2 1 3\n2 3\n4 12\n0\n8 4 2\n10 5 3\n12 9 11\n";
    let (aig, mut store, mut enc) = setup(text);
    let fns = enc.update_fns.clone();
    let r = forward_reachable(&mut enc, &mut store, &fns);
    assert!(r.is_true());
    let over = reach_overapprox(&mut enc, &mut store, &[vec![0, 1]]);
    assert!(over[0].is_true());
    // the sequence the simulator produces matches
    let t = simulate(&aig, &vec![vec![]; 4]).unwrap();
    let seen: Vec<usize> = t.states.iter().map(|s| s[0] as usize | (s[1] as usize) << 1).collect();
    assert_eq!(seen, vec![0, 1, 2, 3, 0]);
}

#[test]
fn overapprox_contains_reachable() {
    // b0' = b0 ∨ b1, b1' = b0: reachable = {00} only
    let text = "aag 3 0 2 1 1\n2 7\n4 2\n0\n6 3 5\n";
    let (_, mut store, mut enc) = setup(text);
    let fns = enc.update_fns.clone();
    let exact = forward_reachable(&mut enc, &mut store, &fns);
    let whole = reach_overapprox(&mut enc, &mut store, &[vec![0, 1]]);
    assert_eq!(whole[0], exact);
    let parts = reach_overapprox(&mut enc, &mut store, &[vec![0], vec![1]]);
    for p in parts {
        let imp = store.imp(exact, p);
        assert!(imp.is_true());
    }
}

#[test]
fn reach_care_keeps_realizability() {
    for text in [BLOCKABLE, FORCED, COMBINATIONAL] {
        let (_, mut store, mut enc) = setup(text);
        let exact = solve(&mut enc, &mut store, &SolveOptions::exact()).unwrap();
        let opts = SolveOptions {
            reach_care: true,
            ..SolveOptions::exact()
        };
        let cared = solve(&mut enc, &mut store, &opts).unwrap();
        assert_eq!(exact.realizable, cared.realizable);
        assert!(!cared.exact);
    }
}

#[test]
fn explicit_trivial_cases() {
    let safe = parse_ascii("aag 1 1 0 1 0\n2\n0\n").unwrap();
    let e = solve_explicit(&safe, &safe.partition_inputs()).unwrap();
    assert!(e.realizable && e.winning.iter().all(|&w| w));
    let bad = parse_ascii("aag 1 0 1 1 0\n2 2\n1\n").unwrap();
    let e = solve_explicit(&bad, &bad.partition_inputs()).unwrap();
    assert!(!e.realizable && e.winning.iter().all(|&w| !w));
}

#[test]
fn budget_and_deadline() {
    let (_, mut store, mut enc) = setup(FORCED);
    let opts = SolveOptions {
        deadline: Some(Instant::now()),
        ..SolveOptions::exact()
    };
    assert_eq!(solve(&mut enc, &mut store, &opts).err(), Some(SolveError::Timeout));
}
