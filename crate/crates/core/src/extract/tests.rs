use super::*;
use crate::aiger::{check_solution_syntax, parse_ascii};
use crate::game::{encode, solve, EncodeOptions, SolveOptions};
use crate::sim::Simulator;

/// l' = l ∨ (u ∧ ¬c), out = l.
const BLOCKABLE: &str = "aag 5 2 1 1 2\n2\n4\n6 11\n6\n8 2 5\n10 7 9\ni0 u\ni1 controllable_c\n";
/// Two controllables, one uncontrollable, no latches; out = ¬c1 ∧ ¬c2.
const EITHER: &str = "aag 4 3 0 1 1\n2\n4\n6\n8\n8 5 7\ni0 u\ni1 controllable_c1\ni2 controllable_c2\n";

fn setup(text: &str) -> (Aig, NodeStore, GameEncoding) {
    let aig = parse_ascii(text).unwrap();
    let mut store = NodeStore::new();
    let enc = encode(&aig, &aig.partition_inputs(), &mut store, &EncodeOptions::default()).unwrap();
    (aig, store, enc)
}

#[test]
fn relation_of_blockable_game() {
    let (_, mut store, mut enc) = setup(BLOCKABLE);
    let w = solve(&mut enc, &mut store, &SolveOptions::exact()).unwrap();
    let lam = strategy_relation(&enc, &mut store, &w).unwrap();
    let (l, u, c) = (enc.latch_vars[0], enc.uncontrollable_vars[0], enc.controllable_vars[0]);
    let at = |lv: bool, uv: bool, cv: bool| {
        store.eval_with(lam, |v| if v == l { lv } else if v == u { uv } else if v == c { cv } else { unreachable!() })
    };
    assert!(!at(false, true, false));
    assert!(at(false, true, true));
    assert!(at(false, false, false) && at(false, false, true));
}

#[test]
fn relation_requires_realizable_region() {
    let (_, mut store, mut enc) = setup("aag 3 1 1 1 1\n2\n4 7\n4\n6 5 3\n");
    let w = solve(&mut enc, &mut store, &SolveOptions::exact()).unwrap();
    assert_eq!(strategy_relation(&enc, &mut store, &w), Err(ExtractError::Unrealizable));
}

#[test]
fn forced_choice_and_tie() {
    let (_, mut store, enc) = setup(EITHER);
    let (u, c1, c2) = (enc.uncontrollable_vars[0], enc.controllable_vars[0], enc.controllable_vars[1]);
    let uf = store.var(u).unwrap();
    let c1f = store.var(c1).unwrap();
    let c2f = store.var(c2).unwrap();

    let lam = store.iff(c1f, uf);
    let s = determinize_cofactor(&enc, &mut store, lam);
    assert_eq!(s.controls[0].f, uf);
    assert!(s.controls[1].f.is_true());

    let t = store.tt();
    let s = determinize_cofactor(&enc, &mut store, t);
    assert!(s.controls.iter().all(|c| c.f.is_true()));

    // λ = c1 ∨ c2 with an input-dependent twist: ¬u → ¬c1
    let either = store.or(c1f, c2f);
    let nu = store.not(uf);
    let nc1 = store.not(c1f);
    let twist = store.imp(nu, nc1);
    let lam = store.and(either, twist);
    let s = determinize_cofactor(&enc, &mut store, lam);
    let subst = s.substitution();
    let closed = store.compose_vector(lam, &subst);
    assert!(closed.is_true(), "determinised choice must satisfy λ everywhere");
}

#[test]
fn constant_strategy_becomes_constant_gate() {
    let (aig, mut store, mut enc) = setup(EITHER);
    let w = solve(&mut enc, &mut store, &SolveOptions::exact()).unwrap();
    let lam = strategy_relation(&enc, &mut store, &w).unwrap();
    let s = determinize_cofactor(&enc, &mut store, lam);
    let sol = strategy_to_aig(&aig, &enc, &store, &s, true).unwrap();
    assert_eq!(added_gates(&aig, &sol), 2);
    assert!(sol.ands.contains(&AndGate { lhs: 6, rhs0: 1, rhs1: 1 }));
    let report = check_solution_syntax(&aig, &sol);
    assert!(report.passed(), "{report}");
}

#[test]
fn projection_needs_no_mux() {
    let (aig, mut store, enc) = setup(EITHER);
    let uf = store.var(enc.uncontrollable_vars[0]).unwrap();
    let s = Strategy {
        controls: vec![
            Control { var: enc.controllable_vars[0], lit: 4, f: uf },
            Control { var: enc.controllable_vars[1], lit: 6, f: store.not(uf) },
        ],
    };
    let sol = strategy_to_aig(&aig, &enc, &store, &s, true).unwrap();
    assert_eq!(
        &sol.ands[aig.ands.len()..],
        &[AndGate { lhs: 4, rhs0: 2, rhs1: 1 }, AndGate { lhs: 6, rhs0: 3, rhs1: 1 }]
    );
    assert_eq!(sol.max_var, 4);
    assert!(check_solution_syntax(&aig, &sol).passed());
}

#[test]
fn controllable_in_support_is_rejected() {
    let (aig, mut store, enc) = setup(EITHER);
    let c2 = store.var(enc.controllable_vars[1]).unwrap();
    let s = Strategy {
        controls: vec![Control { var: enc.controllable_vars[0], lit: 4, f: c2 }],
    };
    assert_eq!(
        strategy_to_aig(&aig, &enc, &store, &s, true).err(),
        Some(ExtractError::ForeignVariable(enc.controllable_vars[1]))
    );
}

#[test]
fn shared_nodes_are_emitted_once() {
    // three latches, two controllables; both strategies share a sub-diagram
    let text = "aag 5 2 3 1 0\n2\n4\n6 2\n8 4\n10 6\n6\ni0 controllable_a\ni1 controllable_b\n";
    let (aig, mut store, enc) = setup(text);
    let [l0, l1, l2] = [0, 1, 2].map(|i| store.var(enc.latch_vars[i]).unwrap());
    let shared = store.xor(l1, l2);
    let fa = store.and(l0, shared);
    let nl0 = store.not(l0);
    let fb = store.and(nl0, shared);
    let s = Strategy {
        controls: vec![
            Control { var: enc.controllable_vars[0], lit: 2, f: fa },
            Control { var: enc.controllable_vars[1], lit: 4, f: fb },
        ],
    };
    let cached = strategy_to_aig(&aig, &enc, &store, &s, true).unwrap();
    let plain = strategy_to_aig(&aig, &enc, &store, &s, false).unwrap();
    assert!(cached.ands.len() < plain.ands.len());
    for sol in [&cached, &plain] {
        assert!(check_solution_syntax(&aig, sol).passed());
    }
    // both circuits compute the same functions on all states
    for st in 0..8usize {
        let state: Vec<bool> = (0..3).map(|i| st >> i & 1 == 1).collect();
        let mut a = Simulator::new(&cached).unwrap();
        let mut b = Simulator::new(&plain).unwrap();
        a.set_state(&state);
        b.set_state(&state);
        let va = a.evaluate(&[]).unwrap().to_vec();
        let vb = b.evaluate(&[]).unwrap().to_vec();
        assert_eq!(va[1], vb[1]);
        assert_eq!(va[2], vb[2]);
        let expect_a = state[0] && (state[1] ^ state[2]);
        assert_eq!(va[1], expect_a);
    }
}

#[test]
fn gaps_are_filled_and_padded() {
    // M = 9 leaves variables 4..9 unused by the specification
    let text = "aag 9 2 1 1 0\n2\n4\n6 2\n6\ni0 controllable_c\ni1 u\n";
    let (aig, mut store, mut enc) = setup(text);
    let w = solve(&mut enc, &mut store, &SolveOptions::exact()).unwrap();
    let lam = strategy_relation(&enc, &mut store, &w).unwrap();
    let s = determinize_cofactor(&enc, &mut store, lam);
    let sol = strategy_to_aig(&aig, &enc, &store, &s, true).unwrap();
    assert!(check_solution_syntax(&aig, &sol).passed(), "{}", check_solution_syntax(&aig, &sol));
    assert_eq!(sol.max_var, 9);
    parse_ascii(&sol.to_ascii()).unwrap();
}

#[test]
fn minimization_keeps_reachable_behaviour() {
    // l0' = l0 ∨ u; l1' = l1; out = l1 ∧ c. l1 is never set, so c may be
    // anything; on states where l1 = 1 only c = 0 is safe.
    let text = "aag 6 2 2 1 2\n2\n4\n6 11\n8 8\n12\n10 7 3\n12 8 4\ni0 u\ni1 controllable_c\n";
    let (aig, mut store, mut enc) = setup(text);
    let w = solve(&mut enc, &mut store, &SolveOptions::exact()).unwrap();
    let lam = strategy_relation(&enc, &mut store, &w).unwrap();
    let s = determinize_cofactor(&enc, &mut store, lam);
    let m = minimize_by_reachability(&mut enc, &mut store, &s);
    for (a, b) in s.controls.iter().zip(&m.controls) {
        assert!(store.node_count(b.f) <= store.node_count(a.f));
    }
    assert!(m.controls[0].f.is_true());
    let sol = strategy_to_aig(&aig, &enc, &store, &m, true).unwrap();
    assert!(check_solution_syntax(&aig, &sol).passed());
    // all input sequences of length ≤ 6 keep the output low
    for seq in 0..1u32 << 6 {
        let mut sim = Simulator::new(&sol).unwrap();
        for k in 0..6 {
            let out = sim.step(&[seq >> k & 1 == 1]).unwrap();
            assert!(!out[0]);
        }
    }
}
