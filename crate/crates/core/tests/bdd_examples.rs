use std::collections::BTreeMap;

use proptest::prelude::*;
use safesynth::aiger::parse_ascii;
use safesynth::bdd::{Func, NodeStore, VarId, VarSet};
use safesynth::game::{encode, upre, EncodeOptions, SolveOptions, UpreMode};

fn vars(s: &mut NodeStore, n: usize) -> Vec<VarId> {
    (0..n).map(|_| s.new_var()).collect()
}

fn table(s: &NodeStore, f: Func, vars: &[VarId]) -> Vec<bool> {
    (0..1u32 << vars.len())
        .map(|a| s.eval_with(f, |v| a >> vars.iter().position(|&w| w == v).unwrap() & 1 == 1))
        .collect()
}

/// Builds a function from its truth table (bit `a` of `bits` is the value
/// at assignment `a`) as a disjunction of minterms.
fn from_table(s: &mut NodeStore, vars: &[VarId], bits: u64) -> Func {
    let mut f = s.ff();
    for a in 0..1u64 << vars.len() {
        if bits >> a & 1 == 1 {
            let lits: Vec<(VarId, bool)> = vars.iter().enumerate().map(|(i, &v)| (v, a >> i & 1 == 1)).collect();
            let m = s.cube(&lits).unwrap();
            let g = s.or(f, m);
            s.release_all([f, m]);
            f = g;
        }
    }
    f
}

/// `a == b` over 6-bit words: small when the bits of `a` and `b` are
/// interleaved, exponential when all of `a` precedes all of `b`.
fn comparator(s: &mut NodeStore, a: &[VarId], b: &[VarId]) -> Func {
    let mut f = s.tt();
    for (&x, &y) in a.iter().zip(b) {
        let fx = s.var(x).unwrap();
        let fy = s.var(y).unwrap();
        let eq = s.iff(fx, fy);
        let g = s.and(f, eq);
        s.release_all([fx, fy, eq, f]);
        f = g;
    }
    f
}

#[test]
fn sifting_fixes_blocked_comparator() {
    let mut s = NodeStore::new();
    let a = vars(&mut s, 6);
    let b = vars(&mut s, 6);
    let f = comparator(&mut s, &a, &b);
    let all: Vec<VarId> = a.iter().chain(&b).copied().collect();
    let blocked = s.node_count(f);

    let mut t = NodeStore::new();
    let mut interleaved = Vec::new();
    for _ in 0..6 {
        interleaved.push(t.new_var());
        interleaved.push(t.new_var());
    }
    let ta: Vec<VarId> = interleaved.iter().step_by(2).copied().collect();
    let tb: Vec<VarId> = interleaved.iter().skip(1).step_by(2).copied().collect();
    let g = comparator(&mut t, &ta, &tb);
    let good = t.node_count(g);
    assert!(good < blocked, "interleaved {good} vs blocked {blocked}");

    let before = table(&s, f, &all);
    let stats = s.reorder_sift();
    assert!(s.check_invariants().is_ok());
    assert_eq!(table(&s, f, &all), before);
    assert!(s.node_count(f) < blocked, "{stats:?}");
    let mut order = s.order();
    order.sort();
    assert_eq!(order, all);
}

#[test]
fn temporaries_return_to_baseline() {
    let mut s = NodeStore::new();
    let v = vars(&mut s, 8);
    let x = s.var(v[0]).unwrap();
    let y = s.var(v[5]).unwrap();
    let keep = s.xor(x, y);
    s.gc();
    let baseline = s.live_nodes();
    for i in 0..1000 {
        let a = s.var(v[i % 8]).unwrap();
        let b = s.var(v[(i * 3 + 1) % 8]).unwrap();
        let t = s.and(a, b);
        let u = s.xor(t, keep);
        s.release_all([a, b, t, u]);
    }
    s.gc();
    assert_eq!(s.live_nodes(), baseline);
    assert!(s.check_invariants().is_ok());
}

#[test]
fn shared_handles_keep_nodes_alive() {
    let mut s = NodeStore::new();
    let v = vars(&mut s, 2);
    let x = s.var(v[0]).unwrap();
    let y = s.var(v[1]).unwrap();
    let f = s.and(x, y);
    let g = s.retain(f);
    s.release_all([x, y]);
    s.release(f).unwrap();
    s.gc();
    assert_eq!(s.node_count(g), 2);
    assert_eq!(table(&s, g, &v), vec![false, false, false, true]);
}

#[test]
fn reorder_ignores_released_nodes() {
    let mut s = NodeStore::new();
    let v = vars(&mut s, 6);
    let x = s.var(v[0]).unwrap();
    let y = s.var(v[3]).unwrap();
    let keep = s.and(x, y);
    s.release_all([x, y]);
    let live = s.shared_node_count(&[keep]);
    for i in 0..6 {
        let a = s.var(v[i]).unwrap();
        let b = s.var(v[(i + 2) % 6]).unwrap();
        let t = s.xor(a, b);
        s.release_all([a, b, t]);
    }
    let stats = s.reorder_sift();
    assert_eq!(stats.nodes_before, live);
    assert!(stats.nodes_after <= live);
}

#[test]
fn empty_store_reorder_is_a_no_op() {
    let mut s = NodeStore::new();
    let stats = s.reorder_sift();
    assert_eq!(stats.nodes_before, 0);
    assert_eq!(stats.nodes_after, 0);
    assert_eq!(stats.swaps, 0);
    let v = vars(&mut s, 3);
    let stats = s.reorder_sift();
    assert_eq!(stats.nodes_after, 0);
    assert_eq!(s.order().len(), v.len());
}

#[test]
fn conjunction_survives_reorder() {
    let mut s = NodeStore::new();
    let v = vars(&mut s, 3);
    let mut f = s.tt();
    for &x in &v {
        let fx = s.var(x).unwrap();
        let g = s.and(f, fx);
        s.release_all([f, fx]);
        f = g;
    }
    s.reorder_sift();
    let t = table(&s, f, &v);
    assert_eq!(t.iter().filter(|&&b| b).count(), 1);
    assert!(t[7]);
}

#[test]
fn simultaneous_substitution_does_not_cascade() {
    let mut s = NodeStore::new();
    let v = vars(&mut s, 2);
    let x = s.var(v[0]).unwrap();
    let y = s.var(v[1]).unwrap();
    let ny = s.not(y);
    let f = s.and(x, ny);
    let mut m = BTreeMap::new();
    m.insert(v[0], y);
    m.insert(v[1], x);
    let swapped = s.compose_vector(f, &m);
    let nx = s.not(x);
    let want = s.and(y, nx);
    assert_eq!(swapped, want);
}

/// Three latches with update functions reading each other and the inputs.
const THREE_LATCH: &str = "aag 10 2 3 1 5\n2\n4\n6 14\n8 17\n10 20\n12\n12 6 8\n14 2 11\n16 7 5\n18 9 10\n20 19 3\ni0 u\ni1 controllable_c\n";

#[test]
fn partitioned_upre_matches_monolithic_relation() {
    let aig = parse_ascii(THREE_LATCH).unwrap();
    let mut store = NodeStore::new();
    let mut enc = encode(&aig, &aig.partition_inputs(), &mut store, &EncodeOptions::default()).unwrap();
    let latches = enc.latch_vars.clone();
    for bits in 0..=255u64 {
        let s = from_table(&mut store, &latches, bits);
        let part = upre(
            &mut enc,
            &mut store,
            s,
            &SolveOptions {
                upre: UpreMode::Partitioned,
                ..SolveOptions::default()
            },
        );
        let mono = upre(
            &mut enc,
            &mut store,
            s,
            &SolveOptions {
                upre: UpreMode::Monolithic,
                ..SolveOptions::default()
            },
        );
        assert_eq!(part, mono, "target {bits:08b}");
        store.release_all([s, part, mono]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn remap_equals_composition_with_projections(bits in any::<u16>()) {
        let mut s = NodeStore::new();
        let v = vars(&mut s, 8);
        let f = from_table(&mut s, &v[..4], bits as u64);
        let pairs: BTreeMap<VarId, VarId> = (0..4).map(|i| (v[i], v[i + 4])).collect();
        let remapped = s.remap_vars(f, &pairs).unwrap();
        let subst: BTreeMap<VarId, Func> = pairs.iter().map(|(&a, &b)| (a, s.var(b).unwrap())).collect();
        let composed = s.compose_vector(f, &subst);
        prop_assert_eq!(remapped, composed);
    }

    #[test]
    fn quantifier_duality(bits in any::<u32>(), mask in 0u32..32) {
        let mut s = NodeStore::new();
        let v = vars(&mut s, 5);
        let f = from_table(&mut s, &v, bits as u64);
        let q: VarSet = (0..5).filter(|i| mask >> i & 1 == 1).map(|i| v[i]).collect();
        let ex = s.exists(&q, f);
        let nf = s.not(f);
        let fa = s.forall(&q, nf);
        let dual = s.not(fa);
        prop_assert_eq!(ex, dual);
    }

    #[test]
    fn projection_over_two_variables(bits in any::<u16>()) {
        let mut s = NodeStore::new();
        let v = vars(&mut s, 4);
        let f = from_table(&mut s, &v, bits as u64);
        let q: VarSet = [v[0], v[1]].into_iter().collect();
        let ex = s.exists(&q, f);
        for a in 0..16u32 {
            let hi = a & 0b1100;
            let want = (0..4).any(|lo| bits >> (hi | lo) & 1 == 1);
            prop_assert_eq!(s.eval_with(ex, |x| a >> x.0 & 1 == 1), want);
        }
    }
}
