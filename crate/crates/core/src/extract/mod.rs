//! From a winning region to a controller circuit.

use rustc_hash::{FxHashMap, FxHashSet};
use thiserror::Error;

use crate::aiger::{var_of, Aig, AndGate, Lit};
use crate::bdd::{NodeId, Func, NodeStore, VarId, VarSet};
use crate::game::{forward_reachable, GameEncoding, WinningRegion};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExtractError {
    #[error("the specification is unrealizable; there is no strategy to extract")]
    Unrealizable,
    #[error("strategy function depends on non-state variable {}", .0 .0)]
    ForeignVariable(VarId),
}

/// One controllable input and the function that drives it.
#[derive(Copy, Clone, Debug)]
pub struct Control {
    pub var: VarId,
    /// The input's literal in the specification.
    pub lit: Lit,
    /// `f_c(L, X_u)`.
    pub f: Func,
}

/// A function per controllable input, in specification file order.
#[derive(Clone, Debug, Default)]
pub struct Strategy {
    pub controls: Vec<Control>,
}

impl Strategy {
    pub fn release(self, store: &mut NodeStore) {
        store.release_all(self.controls.into_iter().map(|c| c.f));
    }

    /// Substitution `c ← f_c` for every controllable input.
    pub fn substitution(&self) -> std::collections::BTreeMap<VarId, Func> {
        self.controls.iter().map(|c| (c.var, c.f)).collect()
    }
}

/// `λ(L, X_u, X_c)`: the moves that keep the play safe now and inside the
/// winning region next.
pub fn strategy_relation(
    enc: &GameEncoding,
    store: &mut NodeStore,
    w: &WinningRegion,
) -> Result<Func, ExtractError> {
    if !w.realizable {
        return Err(ExtractError::Unrealizable);
    }
    let next = enc.substitute_next(store, w.w);
    let lambda = store.and(enc.safe_fn, next);
    store.release(next).expect("fresh handle");
    Ok(lambda)
}

/// Fixes one controllable input at a time, in file order. With `P` the
/// states and uncontrollable inputs for which `c = 1` is allowed and `N`
/// those for which `c = 0` is allowed, `f_c = P ∨ ¬N`: the input is 0
/// exactly where only 0 is allowed. The relation is then narrowed to
/// `c ↔ f_c` before the next input is handled.
pub fn determinize_cofactor(enc: &GameEncoding, store: &mut NodeStore, lambda: Func) -> Strategy {
    let mut lam = store.retain(lambda);
    let mut controls = Vec::with_capacity(enc.controllable_vars.len());
    for (k, &c) in enc.controllable_vars.iter().enumerate() {
        let others: VarSet = enc
            .controllable_vars
            .iter()
            .copied()
            .filter(|&v| v != c)
            .collect();
        let pos = store.cofactor(lam, c, true);
        let neg = store.cofactor(lam, c, false);
        let p = store.exists(&others, pos);
        let n = store.exists(&others, neg);
        let not_n = store.not(n);
        let f = store.or(p, not_n);
        store.release_all([pos, neg, p, n, not_n]);
        let cv = store.var(c).expect("controllable variable exists");
        let eq = store.iff(cv, f);
        let narrowed = store.and(lam, eq);
        store.release_all([cv, eq, lam]);
        lam = narrowed;
        controls.push(Control {
            var: c,
            lit: enc.controllable_lits[k],
            f,
        });
        store.checkpoint();
    }
    store.release(lam).expect("owned handle");
    Strategy { controls }
}

/// Closed-loop update functions `f_l[c ← f_c]`.
pub fn closed_loop_updates(enc: &GameEncoding, store: &mut NodeStore, strat: &Strategy) -> Vec<Func> {
    let subst = strat.substitution();
    enc.update_fns
        .iter()
        .map(|&f| store.compose_vector(f, &subst))
        .collect()
}

/// Simplifies every `f_c` with the states reachable under the strategy as
/// care set. Behaviour on reachable states is unchanged and no function
/// grows.
pub fn minimize_by_reachability(enc: &mut GameEncoding, store: &mut NodeStore, strat: &Strategy) -> Strategy {
    let updates = closed_loop_updates(enc, store, strat);
    let reach = forward_reachable(enc, store, &updates);
    store.release_all(updates);
    let controls = strat
        .controls
        .iter()
        .map(|c| Control {
            f: store.restrict_safe(c.f, reach),
            ..*c
        })
        .collect();
    store.release(reach).expect("owned handle");
    Strategy { controls }
}

/// Incremental construction of the new AND gates of a solution.
struct GateBuilder<'a> {
    store: &'a NodeStore,
    var_lit: FxHashMap<VarId, Lit>,
    free_vars: std::vec::IntoIter<u32>,
    next_var: u32,
    gates: Vec<AndGate>,
    cache: Option<FxHashMap<NodeId, Lit>>,
}

impl GateBuilder<'_> {
    fn fresh(&mut self) -> Lit {
        let v = self.free_vars.next().unwrap_or_else(|| {
            self.next_var += 1;
            self.next_var
        });
        2 * v
    }

    fn and(&mut self, a: Lit, b: Lit) -> Lit {
        match (a, b) {
            (0, _) | (_, 0) => 0,
            (1, x) | (x, 1) => x,
            _ if a == b => a,
            _ if a == b ^ 1 => 0,
            _ => {
                let lhs = self.fresh();
                self.gates.push(AndGate { lhs, rhs0: a, rhs1: b });
                lhs
            }
        }
    }

    fn or(&mut self, a: Lit, b: Lit) -> Lit {
        self.and(a ^ 1, b ^ 1) ^ 1
    }

    /// Literal computing diagram node `id` by Shannon expansion.
    fn convert(&mut self, id: NodeId) -> Result<Lit, ExtractError> {
        let Some((v, lo, hi)) = self.store.node_parts(id) else {
            return Ok(id); // terminals: id 0 is false, id 1 is true
        };
        if let Some(lit) = self.cache.as_ref().and_then(|c| c.get(&id)) {
            return Ok(*lit);
        }
        let x = *self.var_lit.get(&v).ok_or(ExtractError::ForeignVariable(v))?;
        let l = self.convert(lo)?;
        let h = self.convert(hi)?;
        let lit = match (l, h) {
            (0, 1) => x,
            (1, 0) => x ^ 1,
            (0, h) => self.and(x, h),
            (l, 0) => self.and(x ^ 1, l),
            (l, 1) => self.or(x, l),
            (1, h) => self.or(x ^ 1, h),
            (l, h) => {
                let a = self.and(x, h);
                let b = self.and(x ^ 1, l);
                self.or(a, b)
            }
        };
        if let Some(c) = self.cache.as_mut() {
            c.insert(id, lit);
        }
        Ok(lit)
    }
}

/// Emits the solution circuit: the specification with its controllable
/// inputs removed and each redefined as an AND gate computing its strategy
/// function. Diagram nodes shared between functions become shared gates
/// unless `cache` is off.
pub fn strategy_to_aig(
    spec: &Aig,
    enc: &GameEncoding,
    store: &NodeStore,
    strat: &Strategy,
    cache: bool,
) -> Result<Aig, ExtractError> {
    let mut var_lit: FxHashMap<VarId, Lit> = FxHashMap::default();
    for (l, &v) in spec.latches.iter().zip(&enc.latch_vars) {
        var_lit.insert(v, l.lit);
    }
    for (&lit, &v) in enc.uncontrollable_lits.iter().zip(&enc.uncontrollable_vars) {
        var_lit.insert(v, lit);
    }

    let mut used: FxHashSet<u32> = FxHashSet::default();
    used.extend(spec.inputs.iter().map(|&l| var_of(l)));
    used.extend(spec.latches.iter().map(|l| var_of(l.lit)));
    used.extend(spec.ands.iter().map(|a| var_of(a.lhs)));
    let gaps: Vec<u32> = (1..=spec.max_var).filter(|v| !used.contains(v)).collect();

    let mut b = GateBuilder {
        store,
        var_lit,
        free_vars: gaps.into_iter(),
        next_var: spec.max_var,
        gates: Vec::new(),
        cache: cache.then(FxHashMap::default),
    };
    let mut roots = Vec::with_capacity(strat.controls.len());
    for c in &strat.controls {
        roots.push((c.lit, b.convert(c.f.id())?));
    }
    let mut gates = std::mem::take(&mut b.gates);
    for (lit, root) in roots {
        gates.push(AndGate {
            lhs: lit,
            rhs0: root,
            rhs1: 1,
        });
    }
    // Variables never defined (specification gaps not consumed above) get a
    // constant gate so that every index up to M' is defined once.
    let max_var = b.next_var;
    let leftover: Vec<u32> = b.free_vars.collect();
    for v in leftover {
        gates.push(AndGate {
            lhs: 2 * v,
            rhs0: 0,
            rhs1: 0,
        });
    }

    let mut ands = spec.ands.clone();
    ands.extend(gates);
    let sol = Aig {
        max_var,
        inputs: enc.uncontrollable_lits.clone(),
        latches: spec.latches.clone(),
        outputs: spec.outputs.clone(),
        ands,
        symbols: spec.symbols.clone(),
        comments: None,
    };
    debug_assert_eq!(
        sol.max_var as usize,
        sol.inputs.len() + sol.latches.len() + sol.ands.len()
    );
    Ok(sol)
}

/// Number of gates the solution adds to the specification.
pub fn added_gates(spec: &Aig, solution: &Aig) -> usize {
    solution.ands.len().saturating_sub(spec.ands.len())
}

#[cfg(test)]
mod tests;
