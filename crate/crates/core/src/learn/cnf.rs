//! Clause sets and the bridge from decision diagrams to CNF.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rustc_hash::FxHashMap;

use super::sat::{SatLit, SatResult, Solver};
use crate::bdd::{Func, NodeId, NodeStore, VarId};
use crate::game::GameEncoding;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: u32,
    pub clauses: Vec<Vec<SatLit>>,
}

impl Cnf {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn new_var(&mut self) -> u32 {
        self.num_vars += 1;
        self.num_vars - 1
    }

    pub fn add_clause(&mut self, lits: &[SatLit]) {
        debug_assert!(lits.iter().all(|l| l.var() < self.num_vars), "undeclared variable");
        self.clauses.push(lits.to_vec());
    }

    /// Whether `assignment` (indexed by variable) satisfies every clause.
    pub fn evaluate(&self, assignment: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|l| assignment[l.var() as usize] == l.is_positive()))
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                write!(out, "{} ", l.to_dimacs()).unwrap();
            }
            out.push_str("0\n");
        }
        out
    }

    /// Loads every clause into `solver`.
    pub fn load_into(&self, solver: &mut Solver) {
        solver.reserve_vars(self.num_vars);
        for c in &self.clauses {
            solver.add_clause(c);
        }
    }
}

/// Outcome of [`sat_solve`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatAnswer {
    Sat(Vec<bool>),
    Unsat,
}

/// One-shot satisfiability check of `cnf` under `assumptions`.
pub fn sat_solve(cnf: &Cnf, assumptions: &[SatLit]) -> SatAnswer {
    let mut solver = Solver::new();
    cnf.load_into(&mut solver);
    match solver.solve(assumptions) {
        SatResult::Sat => {
            let mut model = solver.model().to_vec();
            model.resize(cnf.num_vars as usize, false);
            SatAnswer::Sat(model)
        }
        SatResult::Unsat => SatAnswer::Unsat,
    }
}

/// Tseitin encoder for diagram nodes. Diagram variables are bound to CNF
/// variables up front; each internal node gets one CNF variable equivalent
/// to the node's function.
pub struct NodeEncoder {
    vars: FxHashMap<VarId, SatLit>,
    nodes: FxHashMap<NodeId, SatLit>,
    truth: Option<SatLit>,
}

impl NodeEncoder {
    pub fn new(vars: impl IntoIterator<Item = (VarId, u32)>) -> Self {
        NodeEncoder {
            vars: vars.into_iter().map(|(v, s)| (v, SatLit::new(s, true))).collect(),
            nodes: FxHashMap::default(),
            truth: None,
        }
    }

    fn truth(&mut self, cnf: &mut Cnf) -> SatLit {
        *self.truth.get_or_insert_with(|| {
            let t = SatLit::new(cnf.new_var(), true);
            cnf.add_clause(&[t]);
            t
        })
    }

    /// A literal equivalent to `f`, adding the defining clauses to `cnf`.
    ///
    /// Panics if `f` depends on a diagram variable without a binding.
    pub fn encode(&mut self, store: &NodeStore, cnf: &mut Cnf, f: Func) -> SatLit {
        if f.is_const() {
            let t = self.truth(cnf);
            return if f.is_true() { t } else { !t };
        }
        self.encode_id(store, cnf, f.id())
    }

    fn encode_id(&mut self, store: &NodeStore, cnf: &mut Cnf, root: NodeId) -> SatLit {
        // iterative post-order so deep diagrams do not exhaust the stack
        let mut stack = vec![(root, false)];
        while let Some((id, expanded)) = stack.pop() {
            if self.nodes.contains_key(&id) {
                continue;
            }
            let Some((v, lo, hi)) = store.node_parts(id) else {
                let t = self.truth(cnf);
                self.nodes.insert(id, if id == 1 { t } else { !t });
                continue;
            };
            if !expanded {
                stack.push((id, true));
                for child in [lo, hi] {
                    if !self.nodes.contains_key(&child) {
                        stack.push((child, false));
                    }
                }
                continue;
            }
            let x = *self
                .vars
                .get(&v)
                .unwrap_or_else(|| panic!("diagram variable {v:?} has no CNF binding"));
            let (l, h) = (self.nodes[&lo], self.nodes[&hi]);
            let t = SatLit::new(cnf.new_var(), true);
            cnf.add_clause(&[!x, !h, t]);
            cnf.add_clause(&[!x, h, !t]);
            cnf.add_clause(&[x, !l, t]);
            cnf.add_clause(&[x, l, !t]);
            // redundant, but helps propagation when x is unassigned
            cnf.add_clause(&[!l, !h, t]);
            cnf.add_clause(&[l, h, !t]);
            self.nodes.insert(id, t);
        }
        self.nodes[&root]
    }
}

/// CNF of the transition relation with the variable maps back to the game.
#[derive(Clone, Debug)]
pub struct TransitionCnf {
    pub cnf: Cnf,
    /// CNF variable of each latch (current state), in file order.
    pub latches: Vec<u32>,
    pub uncontrollable: Vec<u32>,
    pub controllable: Vec<u32>,
    /// CNF variable of each latch's next-state value.
    pub next: Vec<u32>,
    /// Literal equivalent to the output function.
    pub bad: SatLit,
}

impl TransitionCnf {
    /// Reads a valuation of the game variables out of a CNF assignment.
    pub fn project(&self, vars: &[u32], model: &[bool]) -> Vec<bool> {
        vars.iter().map(|&v| model[v as usize]).collect()
    }
}

/// Encodes `∧_l (l' ↔ f_l)` and a literal for the output function.
pub fn tseitin(enc: &GameEncoding, store: &NodeStore) -> TransitionCnf {
    let mut cnf = Cnf::new();
    let fresh = |vs: &[VarId], cnf: &mut Cnf| -> Vec<u32> { vs.iter().map(|_| cnf.new_var()).collect() };
    let latches = fresh(&enc.latch_vars, &mut cnf);
    let uncontrollable = fresh(&enc.uncontrollable_vars, &mut cnf);
    let controllable = fresh(&enc.controllable_vars, &mut cnf);
    let next = fresh(&enc.latch_vars, &mut cnf);
    let binding: BTreeMap<VarId, u32> = enc
        .latch_vars
        .iter()
        .zip(&latches)
        .chain(enc.uncontrollable_vars.iter().zip(&uncontrollable))
        .chain(enc.controllable_vars.iter().zip(&controllable))
        .map(|(&v, &s)| (v, s))
        .collect();
    let mut encoder = NodeEncoder::new(binding);
    for (i, &f) in enc.update_fns.iter().enumerate() {
        let fl = encoder.encode(store, &mut cnf, f);
        let n = SatLit::new(next[i], true);
        cnf.add_clause(&[!n, fl]);
        cnf.add_clause(&[n, !fl]);
    }
    let bad = encoder.encode(store, &mut cnf, enc.bad_fn);
    TransitionCnf {
        cnf,
        latches,
        uncontrollable,
        controllable,
        next,
        bad,
    }
}
