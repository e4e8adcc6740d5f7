//! Safety games over the latches of a specification circuit.
//!
//! The environment picks the uncontrollable inputs, then the controller picks
//! the controllable ones knowing them; the controller loses as soon as the
//! output is raised. The environment's attractor of the unsafe states is a
//! least fixpoint of the uncontrollable-predecessor operator, and the
//! controller wins from the complement.

mod explicit;
pub(crate) mod reach;

use std::collections::BTreeMap;
use std::time::Instant;

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::aiger::{is_negated, var_of, Aig, InputPartition, Lit};
use crate::bdd::{Func, NodeStore, VarId, VarSet};
use crate::sim::{and_order, CircuitError};

pub use explicit::{solve_explicit, ExplicitError, ExplicitSolution, EXPLICIT_MAX_VARS};
pub use reach::default_care_subsets;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("a specification must have exactly one output, found {0}")]
    OutputCount(usize),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("time limit reached")]
    Timeout,
    #[error("node budget of {0} exceeded")]
    NodeBudget(usize),
}

#[derive(Clone, Debug)]
pub struct EncodeOptions {
    /// Release intermediate gate functions as soon as every reader is built.
    pub eager_dealloc: bool,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions {
            eager_dealloc: true,
        }
    }
}

/// The game read off a specification: one diagram variable per latch and
/// input, the latch update functions and the safety predicate.
pub struct GameEncoding {
    pub latch_vars: Vec<VarId>,
    pub uncontrollable_vars: Vec<VarId>,
    pub controllable_vars: Vec<VarId>,
    /// `f_l(L, X_u, X_c)` for every latch, in file order.
    pub update_fns: Vec<Func>,
    /// `BAD(L, X_u, X_c)`: the output function.
    pub bad_fn: Func,
    /// `SAFE = ¬BAD`.
    pub safe_fn: Func,
    /// Whether the output depends on latches only. Otherwise the standard
    /// fixpoint tracks the output with the variable `out_var`.
    pub out_is_latch: bool,
    /// Variable standing for an extra latch that stores the output, used by
    /// the standard fixpoint when the output reads inputs.
    pub out_var: Option<VarId>,
    /// Latches whose update function is a plain positive variable.
    pub direct_sub: BTreeMap<usize, VarId>,
    /// Input literals in the order of `uncontrollable_vars`/`controllable_vars`.
    pub uncontrollable_lits: Vec<Lit>,
    pub controllable_lits: Vec<Lit>,
    primed: Option<Vec<VarId>>,
    out_primed: Option<VarId>,
    monolithic: Option<Func>,
    latch_index: FxHashMap<VarId, usize>,
}

impl GameEncoding {
    pub fn num_latches(&self) -> usize {
        self.latch_vars.len()
    }

    pub fn latch_set(&self) -> VarSet {
        self.latch_vars.iter().collect()
    }

    pub fn uncontrollable_set(&self) -> VarSet {
        self.uncontrollable_vars.iter().collect()
    }

    pub fn controllable_set(&self) -> VarSet {
        self.controllable_vars.iter().collect()
    }

    pub fn input_set(&self) -> VarSet {
        self.uncontrollable_vars
            .iter()
            .chain(&self.controllable_vars)
            .collect()
    }

    /// Index of `v` among the latches, if it is a latch variable.
    pub fn latch_of(&self, v: VarId) -> Option<usize> {
        self.latch_index.get(&v).copied()
    }

    /// The all-zero initial state as a cube over the latches.
    pub fn initial_state(&self, store: &mut NodeStore) -> Func {
        let lits: Vec<(VarId, bool)> = self.latch_vars.iter().map(|&v| (v, false)).collect();
        store.cube(&lits).expect("latch variables exist")
    }

    /// Whether `f` (over latches and possibly the out variable) holds in the
    /// initial state.
    pub fn holds_initially(&self, store: &NodeStore, f: Func) -> bool {
        store.eval_with(f, |_| false)
    }

    /// Next-state copies of the latch variables, allocated on first use
    /// directly below their current-state partners.
    pub fn primed_vars(&mut self, store: &mut NodeStore) -> &[VarId] {
        if self.primed.is_none() {
            let primed = self
                .latch_vars
                .iter()
                .map(|&v| store.new_var_after(v).expect("latch variable exists"))
                .collect();
            self.primed = Some(primed);
            if let Some(o) = self.out_var {
                self.out_primed = Some(store.new_var_after(o).expect("out variable exists"));
            }
        }
        self.primed.as_deref().unwrap()
    }

    /// `T(L, X, L') = ∧ (l' ↔ f_l)`, including the out variable when present.
    pub fn monolithic_relation(&mut self, store: &mut NodeStore) -> Func {
        if let Some(t) = self.monolithic {
            return store.retain(t);
        }
        let primed = self.primed_vars(store).to_vec();
        let mut t = store.tt();
        let mut parts: Vec<(VarId, Func)> = primed.iter().copied().zip(self.update_fns.iter().copied()).collect();
        if let (Some(op), true) = (self.out_primed, self.out_var.is_some()) {
            parts.push((op, self.bad_fn));
        }
        for (p, f) in parts {
            let pv = store.var(p).expect("primed variable exists");
            let eq = store.iff(pv, f);
            let next = store.and(t, eq);
            store.release_all([pv, eq, t]);
            t = next;
        }
        self.monolithic = Some(t);
        store.retain(t)
    }

    /// Renaming from latch variables to their primed copies.
    pub fn prime_map(&mut self, store: &mut NodeStore) -> BTreeMap<VarId, VarId> {
        let primed = self.primed_vars(store).to_vec();
        let mut m: BTreeMap<VarId, VarId> = self.latch_vars.iter().copied().zip(primed).collect();
        if let (Some(o), Some(op)) = (self.out_var, self.out_primed) {
            m.insert(o, op);
        }
        m
    }

    /// Renaming from primed copies back to latch variables.
    pub fn unprime_map(&mut self, store: &mut NodeStore) -> BTreeMap<VarId, VarId> {
        self.prime_map(store).into_iter().map(|(a, b)| (b, a)).collect()
    }

    /// `S[l ← f_l]` (and `o ← BAD` for the out variable), using a plain
    /// renaming when every substituted latch is a direct copy of a distinct
    /// variable.
    pub fn substitute_next(&self, store: &mut NodeStore, s: Func) -> Func {
        self.substitute_with(store, s, &self.update_fns, self.bad_fn)
    }

    fn substitute_with(&self, store: &mut NodeStore, s: Func, fns: &[Func], bad: Func) -> Func {
        let support = store.support(s);
        let mut renaming = BTreeMap::new();
        let mut direct = true;
        let mut subst = BTreeMap::new();
        for v in support {
            let f = match self.latch_of(v) {
                Some(i) => {
                    if let Some(&target) = self.direct_sub.get(&i) {
                        if fns[i] == self.update_fns[i] {
                            renaming.insert(v, target);
                        } else {
                            direct = false;
                        }
                    } else {
                        direct = false;
                    }
                    fns[i]
                }
                None if Some(v) == self.out_var => {
                    direct = false;
                    bad
                }
                None => continue,
            };
            subst.insert(v, f);
        }
        if direct {
            if let Ok(r) = store.remap_vars(s, &renaming) {
                return r;
            }
        }
        store.compose_vector(s, &subst)
    }

    /// Releases every diagram held by the encoding.
    pub fn release(self, store: &mut NodeStore) {
        store.release_all(self.update_fns);
        store.release_all([self.bad_fn, self.safe_fn]);
        if let Some(t) = self.monolithic {
            store.release(t).expect("owned handle");
        }
    }
}

/// Builds the game of `aig` in `store`, allocating variables for latches
/// (file order), then uncontrollable inputs, then controllable inputs.
pub fn encode(
    aig: &Aig,
    partition: &InputPartition,
    store: &mut NodeStore,
    opts: &EncodeOptions,
) -> Result<GameEncoding, EncodeError> {
    let out = match aig.outputs.as_slice() {
        [o] => *o,
        other => return Err(EncodeError::OutputCount(other.len())),
    };
    let order = and_order(aig)?;

    let latch_vars: Vec<VarId> = aig.latches.iter().map(|_| store.new_var()).collect();
    let uncontrollable_vars: Vec<VarId> = partition.uncontrollable.iter().map(|_| store.new_var()).collect();
    let controllable_vars: Vec<VarId> = partition.controllable.iter().map(|_| store.new_var()).collect();

    let nvars = aig.max_var as usize + 1;
    let mut val: Vec<Option<Func>> = vec![None; nvars];
    val[0] = Some(store.ff());
    for (l, &v) in aig.latches.iter().zip(&latch_vars) {
        val[var_of(l.lit) as usize] = Some(store.var(v).expect("fresh variable"));
    }
    for (&lit, &v) in partition
        .uncontrollable
        .iter()
        .zip(&uncontrollable_vars)
        .chain(partition.controllable.iter().zip(&controllable_vars))
    {
        val[var_of(lit) as usize] = Some(store.var(v).expect("fresh variable"));
    }

    // Cone of influence of the latch updates and the output, and how many
    // readers each gate has inside it.
    let mut gate_of: Vec<Option<usize>> = vec![None; nvars];
    for (k, a) in aig.ands.iter().enumerate() {
        gate_of[var_of(a.lhs) as usize] = Some(k);
    }
    let mut needed = vec![false; aig.ands.len()];
    let mut readers = vec![0usize; nvars];
    let roots: Vec<Lit> = aig.latches.iter().map(|l| l.next).chain([out]).collect();
    let mut stack: Vec<u32> = roots.iter().map(|&l| var_of(l)).collect();
    for &l in &roots {
        readers[var_of(l) as usize] += 1;
    }
    while let Some(v) = stack.pop() {
        if let Some(k) = gate_of[v as usize] {
            if !needed[k] {
                needed[k] = true;
                let g = aig.ands[k];
                for r in [g.rhs0, g.rhs1] {
                    readers[var_of(r) as usize] += 1;
                    stack.push(var_of(r));
                }
            }
        }
    }

    let lit_fn = |store: &mut NodeStore, val: &[Option<Func>], lit: Lit| -> Func {
        let f = val[var_of(lit) as usize].expect("operand built before its reader");
        if is_negated(lit) {
            store.not(f)
        } else {
            store.retain(f)
        }
    };
    let consume = |store: &mut NodeStore, val: &mut [Option<Func>], readers: &mut [usize], lit: Lit| {
        let v = var_of(lit) as usize;
        if gate_of[v].is_none() {
            return;
        }
        readers[v] -= 1;
        if readers[v] == 0 && opts.eager_dealloc {
            if let Some(f) = val[v].take() {
                store.release(f).expect("owned handle");
            }
        }
    };

    for k in order {
        if !needed[k] {
            continue;
        }
        let g = aig.ands[k];
        let a = lit_fn(store, &val, g.rhs0);
        let b = lit_fn(store, &val, g.rhs1);
        let r = store.and(a, b);
        store.release_all([a, b]);
        val[var_of(g.lhs) as usize] = Some(r);
        consume(store, &mut val, &mut readers, g.rhs0);
        consume(store, &mut val, &mut readers, g.rhs1);
        store.checkpoint();
    }

    let mut update_fns = Vec::with_capacity(aig.latches.len());
    for l in &aig.latches {
        update_fns.push(lit_fn(store, &val, l.next));
        consume(store, &mut val, &mut readers, l.next);
    }
    let bad_fn = lit_fn(store, &val, out);
    consume(store, &mut val, &mut readers, out);
    for f in val.into_iter().flatten() {
        store.release(f).expect("owned handle");
    }
    let safe_fn = store.not(bad_fn);

    let latch_index: FxHashMap<VarId, usize> =
        latch_vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let out_is_latch = store.support(bad_fn).iter().all(|v| latch_index.contains_key(v));
    let out_var = if out_is_latch {
        None
    } else {
        let last = latch_vars.last().copied();
        Some(match last {
            Some(l) => store.new_var_after(l).expect("latch variable exists"),
            None => {
                // no latches: put it at the top of the order
                let v = store.new_var();
                let mut order = store.order();
                order.retain(|&x| x != v);
                order.insert(0, v);
                store.set_order(&order);
                v
            }
        })
    };

    let mut direct_sub = BTreeMap::new();
    for (i, &f) in update_fns.iter().enumerate() {
        if store.node_count(f) == 1 {
            let v = store.support(f)[0];
            let proj = store.var(v).expect("support variable exists");
            if proj == f {
                direct_sub.insert(i, v);
            }
            store.release(proj).expect("fresh handle");
        }
    }

    Ok(GameEncoding {
        latch_vars,
        uncontrollable_vars,
        controllable_vars,
        update_fns,
        bad_fn,
        safe_fn,
        out_is_latch,
        out_var,
        direct_sub,
        uncontrollable_lits: partition.uncontrollable.clone(),
        controllable_lits: partition.controllable.clone(),
        primed: None,
        out_primed: None,
        monolithic: None,
        latch_index,
    })
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub enum Variant {
    /// `S₀ = out-states`, `S ← S ∨ upre(S)`.
    #[default]
    Standard,
    /// `S ← S ∨ ∃X_u ∀X_c. S[l ← f_l] ∨ ¬SAFE`, which needs no extra
    /// variable for a combinational output.
    NoOutLatch,
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub enum UpreMode {
    /// Substitute the update functions into the target set.
    #[default]
    Partitioned,
    /// Build `T(L, X, L')` once and use `∃L'. T ∧ S(L')`.
    Monolithic,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub variant: Variant,
    pub upre: UpreMode,
    /// Restrict the update functions to `¬S` before substituting.
    pub restrict_neg_s: bool,
    /// Minimise each new predecessor set with a reachability
    /// over-approximation. The winning region is then only exact on
    /// reachable states.
    pub reach_care: bool,
    /// Latch index groups for the over-approximation; `None` uses
    /// [`default_care_subsets`].
    pub care_subsets: Option<Vec<Vec<usize>>>,
    /// Fuse conjunction and quantification in the monolithic mode.
    pub and_abstract: bool,
    /// Stop as soon as the initial state is attracted.
    pub early_exit: bool,
    pub deadline: Option<Instant>,
    pub node_budget: Option<usize>,
    /// Keep every fixpoint iterate in [`WinningRegion::iterates`].
    pub record_iterates: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            variant: Variant::Standard,
            upre: UpreMode::Partitioned,
            restrict_neg_s: false,
            reach_care: false,
            care_subsets: None,
            and_abstract: true,
            early_exit: true,
            deadline: None,
            node_budget: None,
            record_iterates: false,
        }
    }
}

impl SolveOptions {
    /// Options that compute the exact winning region.
    pub fn exact() -> Self {
        SolveOptions {
            early_exit: false,
            ..Default::default()
        }
    }
}

pub struct WinningRegion {
    /// Winning states, over the latch variables.
    pub w: Func,
    pub realizable: bool,
    /// False when the fixpoint stopped early or used a reachability care
    /// set, so `w` is only right where it matters for realizability.
    pub exact: bool,
    pub iterations: usize,
    /// Attractor iterates, when recorded.
    pub iterates: Vec<Func>,
}

impl WinningRegion {
    pub fn release(self, store: &mut NodeStore) {
        store.release(self.w).expect("owned handle");
        store.release_all(self.iterates);
    }
}

fn check_limits(store: &mut NodeStore, opts: &SolveOptions) -> Result<(), SolveError> {
    if let Some(d) = opts.deadline {
        if Instant::now() >= d {
            return Err(SolveError::Timeout);
        }
    }
    if let Some(budget) = opts.node_budget {
        if store.allocated_nodes() > budget {
            store.gc();
            if store.allocated_nodes() > budget {
                return Err(SolveError::NodeBudget(budget));
            }
        }
    }
    Ok(())
}

/// `∃X_u ∀X_c. g`.
fn env_quantify(enc: &GameEncoding, store: &mut NodeStore, g: Func) -> Func {
    let xc = enc.controllable_set();
    let xu = enc.uncontrollable_set();
    let a = store.forall(&xc, g);
    let r = store.exists(&xu, a);
    store.release(a).expect("fresh handle");
    r
}

/// `S[l ← f_l]` computed according to `opts`, where `s` ranges over the
/// latches (and the out variable).
fn next_image(enc: &mut GameEncoding, store: &mut NodeStore, s: Func, opts: &SolveOptions) -> Func {
    if opts.restrict_neg_s {
        let care = store.not(s);
        let fns: Vec<Func> = enc.update_fns.iter().map(|&f| store.restrict(f, care)).collect();
        let bad = store.restrict(enc.bad_fn, care);
        store.release(care).expect("fresh handle");
        // `substitute_with` falls back to composition when functions changed
        let r = if opts.upre == UpreMode::Monolithic {
            monolithic_image(enc, store, s, opts, Some((&fns, bad)))
        } else {
            enc.substitute_with(store, s, &fns, bad)
        };
        store.release_all(fns);
        store.release(bad).expect("fresh handle");
        return r;
    }
    match opts.upre {
        UpreMode::Partitioned => enc.substitute_next(store, s),
        UpreMode::Monolithic => monolithic_image(enc, store, s, opts, None),
    }
}

fn monolithic_image(
    enc: &mut GameEncoding,
    store: &mut NodeStore,
    s: Func,
    opts: &SolveOptions,
    restricted: Option<(&[Func], Func)>,
) -> Func {
    let t = match restricted {
        None => enc.monolithic_relation(store),
        Some((fns, bad)) => {
            let primed = enc.primed_vars(store).to_vec();
            let mut t = store.tt();
            let mut parts: Vec<(VarId, Func)> = primed.into_iter().zip(fns.iter().copied()).collect();
            if let Some(op) = enc.out_primed {
                parts.push((op, bad));
            }
            for (p, f) in parts {
                let pv = store.var(p).expect("primed variable exists");
                let eq = store.iff(pv, f);
                let next = store.and(t, eq);
                store.release_all([pv, eq, t]);
                t = next;
            }
            t
        }
    };
    let pm = enc.prime_map(store);
    let s_next = store.remap_vars(s, &pm).expect("distinct primed variables");
    let primed: VarSet = pm.values().collect();
    let r = if opts.and_abstract {
        store.and_abstract(&primed, t, s_next)
    } else {
        let conj = store.and(t, s_next);
        let r = store.exists(&primed, conj);
        store.release(conj).expect("fresh handle");
        r
    };
    store.release_all([t, s_next]);
    r
}

/// Uncontrollable predecessors: states from which the environment can
/// force the next state into `s`, whatever the controller answers.
pub fn upre(enc: &mut GameEncoding, store: &mut NodeStore, s: Func, opts: &SolveOptions) -> Func {
    let img = next_image(enc, store, s, opts);
    let r = env_quantify(enc, store, img);
    store.release(img).expect("fresh handle");
    if opts.restrict_neg_s {
        // only meaningful outside `s`
        let u = store.or(s, r);
        store.release(r).expect("fresh handle");
        u
    } else {
        r
    }
}

/// Computes the winning region by the attractor fixpoint.
pub fn solve(enc: &mut GameEncoding, store: &mut NodeStore, opts: &SolveOptions) -> Result<WinningRegion, SolveError> {
    let care = if opts.reach_care {
        let subsets = opts
            .care_subsets
            .clone()
            .unwrap_or_else(|| default_care_subsets(enc.num_latches()));
        let parts = reach::reach_overapprox(enc, store, &subsets);
        let mut c = store.tt();
        for p in parts {
            let n = store.and(c, p);
            store.release_all([c, p]);
            c = n;
        }
        Some(c)
    } else {
        None
    };

    let use_out_var = opts.variant == Variant::Standard && enc.out_var.is_some();
    let mut s = match opts.variant {
        Variant::Standard => match enc.out_var {
            Some(o) => store.var(o).expect("out variable exists"),
            None => store.retain(enc.bad_fn),
        },
        Variant::NoOutLatch => store.ff(),
    };
    let mut iterates = Vec::new();
    let mut iterations = 0;
    let mut stopped_early = false;
    let result = loop {
        if let Err(e) = check_limits(store, opts) {
            break Err(e);
        }
        if opts.record_iterates {
            iterates.push(store.retain(s));
        }
        if opts.early_exit && enc.holds_initially(store, s) {
            stopped_early = true;
            break Ok(());
        }
        iterations += 1;
        let mut new = match opts.variant {
            Variant::Standard => upre(enc, store, s, opts),
            Variant::NoOutLatch => {
                let img = next_image(enc, store, s, opts);
                let g = store.or(img, enc.bad_fn);
                store.release(img).expect("fresh handle");
                let r = env_quantify(enc, store, g);
                store.release(g).expect("fresh handle");
                r
            }
        };
        if let Some(c) = care {
            let m = store.restrict_safe(new, c);
            store.release(new).expect("fresh handle");
            new = m;
        }
        let next = store.or(s, new);
        store.release(new).expect("fresh handle");
        let done = next == s;
        store.release(s).expect("owned handle");
        s = next;
        if done {
            break Ok(());
        }
        store.checkpoint();
    };
    if let Some(c) = care {
        store.release(c).expect("owned handle");
    }
    if let Err(e) = result {
        store.release(s).expect("owned handle");
        store.release_all(iterates);
        return Err(e);
    }

    let attractor = if use_out_var {
        let a = store.cofactor(s, enc.out_var.unwrap(), false);
        store.release(s).expect("owned handle");
        a
    } else {
        s
    };
    let w = store.not(attractor);
    store.release(attractor).expect("owned handle");
    let realizable = !stopped_early && enc.holds_initially(store, w);
    Ok(WinningRegion {
        w,
        realizable,
        exact: !stopped_early && !opts.reach_care,
        iterations,
        iterates,
    })
}

pub use reach::{forward_reachable, reach_overapprox};

#[cfg(test)]
mod tests;
