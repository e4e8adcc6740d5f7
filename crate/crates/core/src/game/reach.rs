//! Forward reachability over the latch variables.

use std::collections::BTreeMap;

use super::GameEncoding;
use crate::bdd::{Func, NodeStore, VarId, VarSet};

/// Latch groups used for the reachability over-approximation when none are
/// given: consecutive runs of at most this many latches.
const CARE_CHUNK: usize = 8;

pub fn default_care_subsets(num_latches: usize) -> Vec<Vec<usize>> {
    (0..num_latches)
        .collect::<Vec<_>>()
        .chunks(CARE_CHUNK)
        .map(|c| c.to_vec())
        .collect()
}

/// `∧_{l ∈ latches} (l' ↔ fns[l])`.
pub(crate) fn partial_relation(
    enc: &mut GameEncoding,
    store: &mut NodeStore,
    fns: &[Func],
    latches: &[usize],
) -> Func {
    let primed = enc.primed_vars(store).to_vec();
    let mut t = store.tt();
    for &i in latches {
        let pv = store.var(primed[i]).expect("primed variable exists");
        let eq = store.iff(pv, fns[i]);
        let next = store.and(t, eq);
        store.release_all([pv, eq, t]);
        t = next;
    }
    t
}

/// `(∃ L ∪ inputs. set ∧ t)` renamed back from primed to current-state
/// variables.
pub(crate) fn image(
    enc: &mut GameEncoding,
    store: &mut NodeStore,
    t: Func,
    set: Func,
    quantified: &VarSet,
) -> Func {
    let img = store.and_abstract(quantified, set, t);
    let primed = enc.primed_vars(store).to_vec();
    let back: BTreeMap<VarId, VarId> = primed.into_iter().zip(enc.latch_vars.iter().copied()).collect();
    let r = store.remap_vars(img, &back).expect("distinct latch variables");
    store.release(img).expect("fresh handle");
    r
}

fn current_and_inputs(enc: &GameEncoding) -> VarSet {
    enc.latch_vars
        .iter()
        .chain(&enc.uncontrollable_vars)
        .chain(&enc.controllable_vars)
        .collect()
}

/// Exact set of states reachable from the all-zero state when the latches
/// are updated by `fns` (functions of the latches and inputs) and every
/// input varies freely.
pub fn forward_reachable(enc: &mut GameEncoding, store: &mut NodeStore, fns: &[Func]) -> Func {
    let all: Vec<usize> = (0..enc.num_latches()).collect();
    let t = partial_relation(enc, store, fns, &all);
    let quantified = current_and_inputs(enc);
    let mut r = enc.initial_state(store);
    loop {
        let img = image(enc, store, t, r, &quantified);
        let next = store.or(r, img);
        store.release(img).expect("fresh handle");
        let done = next == r;
        store.release(r).expect("owned handle");
        r = next;
        if done {
            break;
        }
        store.checkpoint();
    }
    store.release(t).expect("owned handle");
    r
}

/// For each latch group `P`, a function over `P` containing the projection
/// of every reachable state. The image of a group only tracks the latches
/// of `P`; all other latches are treated as unconstrained.
pub fn reach_overapprox(
    enc: &mut GameEncoding,
    store: &mut NodeStore,
    subsets: &[Vec<usize>],
) -> Vec<Func> {
    let quantified = current_and_inputs(enc);
    let fns = enc.update_fns.clone();
    let mut out = Vec::with_capacity(subsets.len());
    for subset in subsets {
        let t = partial_relation(enc, store, &fns, subset);
        let init: Vec<(VarId, bool)> = subset.iter().map(|&i| (enc.latch_vars[i], false)).collect();
        let mut r = store.cube(&init).expect("latch variables exist");
        loop {
            let img = image(enc, store, t, r, &quantified);
            let next = store.or(r, img);
            store.release(img).expect("fresh handle");
            let done = next == r;
            store.release(r).expect("owned handle");
            r = next;
            if done {
                break;
            }
            store.checkpoint();
        }
        store.release(t).expect("owned handle");
        out.push(r);
    }
    out
}
