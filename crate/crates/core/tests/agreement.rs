mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safesynth::aiger::Aig;
use safesynth::bdd::{Func, NodeStore};
use safesynth::bench::{gen_cnt, gen_random, RandomGameParams};
use safesynth::game::{encode, solve, solve_explicit, EncodeOptions, GameEncoding, SolveOptions};
use safesynth::learn::{learn_winning_region, sat_solve, tseitin, LearnOptions, SatAnswer, SatLit};
use safesynth::pipeline::{synthesize, Backend, Config};
use safesynth::sim::Simulator;
use safesynth::verify::{compose, explicit_bad_reachable, model_check, simulate, Status, DEFAULT_NODE_BUDGET};

use common::{small_games, state_bits};

fn in_region(store: &NodeStore, enc: &GameEncoding, w: Func, state: &[bool]) -> bool {
    store.eval_with(w, |v| enc.latch_of(v).map(|i| state[i]).expect("region over latches"))
}

#[test]
fn symbolic_learned_and_explicit_regions_agree() {
    for (id, aig) in small_games(60, 12, 7) {
        let partition = aig.partition_inputs();
        let explicit = solve_explicit(&aig, &partition).unwrap();
        let mut store = NodeStore::new();
        let mut enc = encode(&aig, &partition, &mut store, &EncodeOptions::default()).unwrap();
        let fixpoint = solve(&mut enc, &mut store, &SolveOptions::exact()).unwrap();
        let learned = learn_winning_region(&enc, &store, &LearnOptions::default()).unwrap();
        assert_eq!(fixpoint.realizable, explicit.realizable, "{id}");
        assert_eq!(learned.realizable, explicit.realizable, "{id}");
        assert!(learned.exact);
        for (s, &win) in explicit.winning.iter().enumerate() {
            let bits = state_bits(s, aig.latches.len());
            assert_eq!(in_region(&store, &enc, fixpoint.w, &bits), win, "{id} state {s}");
            assert_eq!(learned.region.contains(&bits), win, "{id} state {s}");
        }
    }
}

#[test]
fn learned_clauses_only_exclude_losing_states() {
    for (id, aig) in small_games(40, 10, 11) {
        let partition = aig.partition_inputs();
        let explicit = solve_explicit(&aig, &partition).unwrap();
        let mut store = NodeStore::new();
        let enc = encode(&aig, &partition, &mut store, &EncodeOptions::default()).unwrap();
        let learned = learn_winning_region(&enc, &store, &LearnOptions::default()).unwrap();
        for clause in &learned.region.clauses {
            for s in 0..explicit.winning.len() {
                let bits = state_bits(s, aig.latches.len());
                let satisfied = clause.iter().any(|&(i, pos)| bits[i] == pos);
                if !satisfied {
                    assert!(!explicit.is_winning(s), "{id}: clause {clause:?} excludes winning state {s}");
                }
            }
        }
    }
}

/// Closed circuits: random games without controllable inputs.
fn closed_games(count: usize, seed: u64) -> Vec<Aig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            gen_random(
                RandomGameParams {
                    latches: rng.gen_range(1..=6),
                    uncontrollable: rng.gen_range(0..=3),
                    controllable: 0,
                    ands: rng.gen_range(2..=20),
                },
                rng.gen(),
            )
        })
        .collect()
}

#[test]
fn model_checker_matches_explicit_reachability() {
    for (n, aig) in closed_games(150, 3).into_iter().enumerate() {
        let verdict = model_check(&aig, DEFAULT_NODE_BUDGET).unwrap();
        let unsafe_ = explicit_bad_reachable(&aig).unwrap();
        assert_eq!(verdict.status == Status::Unsafe, unsafe_, "game {n}");
        assert_ne!(verdict.status, Status::ResourceLimit);
        if let Some(trace) = &verdict.trace {
            let replay = simulate(&aig, trace).unwrap();
            let outs = &replay.outputs;
            assert!(outs.last().unwrap()[0], "game {n}: trace must end with the output raised");
            assert!(outs[..outs.len() - 1].iter().all(|o| !o[0]), "game {n}: trace is not shortest");
            assert_eq!(verdict.depth(), Some(trace.len() - 1));
        }
    }
}

#[test]
fn transition_cnf_agrees_with_simulation() {
    let aig = gen_cnt(3, true).unwrap();
    let mut store = NodeStore::new();
    let enc = encode(&aig, &aig.partition_inputs(), &mut store, &EncodeOptions::default()).unwrap();
    let tr = tseitin(&enc, &store);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut sim = Simulator::new(&aig).unwrap();
    let input_pos = |lit: u32| aig.inputs.iter().position(|&l| l == lit).unwrap();
    for _ in 0..1000 {
        let state: Vec<bool> = (0..3).map(|_| rng.gen()).collect();
        let inputs: Vec<bool> = (0..2).map(|_| rng.gen()).collect();
        let u: Vec<bool> = enc.uncontrollable_lits.iter().map(|&l| inputs[input_pos(l)]).collect();
        let c: Vec<bool> = enc.controllable_lits.iter().map(|&l| inputs[input_pos(l)]).collect();
        let assumptions: Vec<SatLit> = tr
            .latches
            .iter()
            .zip(&state)
            .chain(tr.uncontrollable.iter().zip(&u))
            .chain(tr.controllable.iter().zip(&c))
            .map(|(&v, &b)| SatLit::new(v, b))
            .collect();
        let model = match sat_solve(&tr.cnf, &assumptions) {
            SatAnswer::Sat(m) => m,
            SatAnswer::Unsat => panic!("transition relation must be total"),
        };
        sim.set_state(&state);
        let out = sim.step(&inputs).unwrap();
        assert_eq!(tr.project(&tr.next, &model), sim.state());
        assert_eq!(model[tr.bad.var() as usize] == tr.bad.is_positive(), out[0]);
    }
}

#[test]
fn synthesised_controllers_model_check() {
    for (id, aig) in small_games(80, 12, 5) {
        let expected = solve_explicit(&aig, &aig.partition_inputs()).unwrap().realizable;
        for backend in [Backend::Bdd, Backend::Sat] {
            let config = Config {
                backend,
                ..Config::default()
            };
            let s = synthesize(&aig, &config).unwrap();
            assert_eq!(s.realizable, expected, "{id} {backend:?}");
            if let Some(sol) = s.solution {
                let closed = compose(&aig, &sol).unwrap();
                assert!(!explicit_bad_reachable(&closed).unwrap(), "{id} {backend:?}");
                let v = model_check(&closed, DEFAULT_NODE_BUDGET).unwrap();
                assert_eq!(v.status, Status::Safe, "{id} {backend:?}");
            }
        }
    }
}
