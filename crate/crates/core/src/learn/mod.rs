//! Winning-region learning with SAT solvers.
//!
//! The region `W` is kept as a CNF over the latches. Starting from the safe
//! states, the learner repeatedly asks for a state in `W` from which the
//! environment can force the play out of `W` (or onto a bad transition) in
//! one step, generalises that state to a cube of such states, and removes
//! the cube from `W` with a new clause. When no such state is left, `W` is
//! the winning region.
//!
//! The `∃ X_u ∀ X_c` alternation is resolved by two solvers: `A` proposes a
//! state and an environment move that may lose for some controller move,
//! `B` looks for a controller answer that stays safe. Every answer found by
//! `B` blocks a whole cube of `(state, input)` candidates in `A`.

pub mod cnf;
pub mod sat;


use std::time::Instant;

use crate::bdd::{Func, NodeStore, VarId};
use crate::game::{GameEncoding, SolveError};
pub use cnf::{sat_solve, tseitin, Cnf, NodeEncoder, SatAnswer, TransitionCnf};
pub use sat::{SatLit, SatResult, Solver};

/// A latch literal: `(latch index, polarity)`.
pub type StateLit = (usize, bool);

/// Upper bound on the number of clauses used to describe the safe states
/// initially; beyond it the learner starts from `W = true` and removes the
/// unsafe states through the ordinary loop.
const INIT_CLAUSE_LIMIT: usize = 4096;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GeneralizationStats {
    /// Literals in the forced states before generalisation.
    pub literals_before: usize,
    /// Literals in the learned clauses.
    pub literals_after: usize,
    pub sat_calls: u64,
    /// `(state, input)` candidates refuted by a controller answer.
    pub blocked_candidates: usize,
}

/// The current region `W` as clauses over latch literals.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LearnedRegion {
    pub clauses: Vec<Vec<StateLit>>,
    /// Number of clauses learned by the refinement loop.
    pub iterations: usize,
    pub stats: GeneralizationStats,
}

impl LearnedRegion {
    /// Whether `state` (one value per latch) lies in `W`.
    pub fn contains(&self, state: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|&(i, pos)| state[i] == pos))
    }

    /// `W` as a diagram over the latch variables.
    pub fn to_bdd(&self, enc: &GameEncoding, store: &mut NodeStore) -> Func {
        let mut w = store.tt();
        for clause in &self.clauses {
            let mut c = store.ff();
            for &(i, pos) in clause {
                let l = store.literal(enc.latch_vars[i], pos).expect("latch variable exists");
                let next = store.or(c, l);
                store.release_all([c, l]);
                c = next;
            }
            let next = store.and(w, c);
            store.release_all([w, c]);
            w = next;
        }
        w
    }
}

/// A state from which the environment wins one step, with its witness move.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForcedState {
    pub state: Vec<bool>,
    pub uncontrollable: Vec<bool>,
}

#[derive(Clone, Debug, Default)]
pub struct LearnOptions {
    /// Stop as soon as the initial state leaves `W`.
    pub early_exit: bool,
    pub deadline: Option<Instant>,
}

pub struct LearnOutcome {
    pub region: LearnedRegion,
    pub realizable: bool,
    /// False when the loop stopped early, so the region is an
    /// over-approximation of the winning states.
    pub exact: bool,
}

/// The two-solver refinement engine for one game.
pub struct Learner {
    tr: TransitionCnf,
    region: LearnedRegion,
    /// Proposes `s ⊨ W`, inputs, and a successor outside `W` or a bad step.
    a: Solver,
    /// Searches a controller move that is safe and stays in `W`.
    b: Solver,
    /// Per clause of `W`: a literal implying the clause fails on the
    /// successor.
    violated: Vec<SatLit>,
    /// Activation literal of the current goal clause in `A`.
    act: SatLit,
}

fn pos(v: u32) -> SatLit {
    SatLit::new(v, true)
}

impl Learner {
    /// Starts from the safe states.
    pub fn new(enc: &GameEncoding, store: &NodeStore) -> Self {
        let init = initial_clauses(enc, store);
        Self::with_region(enc, store, init)
    }

    /// Starts from the region given by `clauses` over latch literals.
    pub fn with_region(enc: &GameEncoding, store: &NodeStore, clauses: Vec<Vec<StateLit>>) -> Self {
        let tr = tseitin(enc, store);
        let mut a = Solver::new();
        let mut b = Solver::new();
        tr.cnf.load_into(&mut a);
        tr.cnf.load_into(&mut b);
        b.add_clause(&[!tr.bad]);
        let act = pos(a.new_var());
        let mut learner = Learner {
            tr,
            region: LearnedRegion::default(),
            a,
            b,
            violated: Vec::new(),
            act,
        };
        for c in clauses {
            learner.push_clause(c);
        }
        learner.refresh_goal();
        learner
    }

    pub fn region(&self) -> &LearnedRegion {
        &self.region
    }

    pub fn into_region(self) -> LearnedRegion {
        self.region
    }

    fn current(&self, c: &[StateLit]) -> Vec<SatLit> {
        c.iter().map(|&(i, p)| SatLit::new(self.tr.latches[i], p)).collect()
    }

    fn next(&self, c: &[StateLit]) -> Vec<SatLit> {
        c.iter().map(|&(i, p)| SatLit::new(self.tr.next[i], p)).collect()
    }

    /// Adds a clause to `W` in both solvers, without refreshing the goal.
    fn push_clause(&mut self, mut clause: Vec<StateLit>) {
        clause.sort_unstable();
        clause.dedup();
        let cur = self.current(&clause);
        let nxt = self.next(&clause);
        self.a.add_clause(&cur);
        self.b.add_clause(&cur);
        self.b.add_clause(&nxt);
        let d = pos(self.a.new_var());
        for &l in &nxt {
            self.a.add_clause(&[!d, !l]);
        }
        self.violated.push(d);
        self.region.clauses.push(clause);
    }

    /// Replaces the goal `bad ∨ successor ∉ W` in `A` by one for the current
    /// `W`. Blocking clauses of the previous goal are retired with it.
    fn refresh_goal(&mut self) {
        let old = self.act;
        self.a.add_clause(&[!old]);
        self.act = pos(self.a.new_var());
        let mut goal = vec![!self.act, self.tr.bad];
        goal.extend(&self.violated);
        self.a.add_clause(&goal);
    }

    fn check_deadline(deadline: Option<Instant>) -> Result<(), SolveError> {
        match deadline {
            Some(d) if Instant::now() >= d => Err(SolveError::Timeout),
            _ => Ok(()),
        }
    }

    /// A state of `W` from which some environment move forces every
    /// controller move out of `W` or onto a bad transition, or `None` if
    /// `W` is closed under the controller's best play.
    pub fn find_forced_state(&mut self) -> Option<ForcedState> {
        self.find_forced_state_until(None).expect("no deadline")
    }

    fn find_forced_state_until(&mut self, deadline: Option<Instant>) -> Result<Option<ForcedState>, SolveError> {
        loop {
            Self::check_deadline(deadline)?;
            self.region.stats.sat_calls += 1;
            if self.a.solve(&[self.act]) == SatResult::Unsat {
                return Ok(None);
            }
            let state = self.tr.project(&self.tr.latches, self.a.model());
            let uncontrollable = self.tr.project(&self.tr.uncontrollable, self.a.model());
            let mut query: Vec<SatLit> = self
                .tr
                .latches
                .iter()
                .zip(&state)
                .chain(self.tr.uncontrollable.iter().zip(&uncontrollable))
                .map(|(&v, &b)| SatLit::new(v, b))
                .collect();
            self.region.stats.sat_calls += 1;
            if self.b.solve(&query) == SatResult::Unsat {
                return Ok(Some(ForcedState { state, uncontrollable }));
            }
            // The controller has an answer: every (state, input) candidate
            // agreeing with the relevant part of this one is refuted by it.
            let answer: Vec<SatLit> = self
                .tr
                .controllable
                .iter()
                .map(|&v| SatLit::new(v, self.b.value_of(v)))
                .collect();
            let candidate_len = query.len();
            query.push(self.act);
            query.extend(&answer);
            self.region.stats.sat_calls += 1;
            let block: Vec<SatLit> = if self.a.solve(&query) == SatResult::Unsat {
                let core = self.a.core();
                query[..candidate_len]
                    .iter()
                    .filter(|l| core.contains(l))
                    .map(|&l| !l)
                    .collect()
            } else {
                debug_assert!(false, "controller answer does not refute the candidate");
                query[..candidate_len].iter().map(|&l| !l).collect()
            };
            let mut clause = vec![!self.act];
            clause.extend(block);
            self.a.add_clause(&clause);
            self.region.stats.blocked_candidates += 1;
        }
    }

    /// Shrinks the forced state to a cube of states that are all forced out
    /// by the same environment move, drops the cube from `W` and returns it.
    /// Literals are tried in ascending latch order.
    pub fn generalize_blocking_clause(&mut self, forced: &ForcedState) -> Vec<StateLit> {
        let inputs: Vec<SatLit> = self
            .tr
            .uncontrollable
            .iter()
            .zip(&forced.uncontrollable)
            .map(|(&v, &b)| SatLit::new(v, b))
            .collect();
        let full: Vec<StateLit> = forced.state.iter().copied().enumerate().collect();
        self.region.stats.literals_before += full.len();

        let mut query = self.current(&full);
        query.extend(&inputs);
        self.region.stats.sat_calls += 1;
        let mut cube: Vec<StateLit> = if self.b.solve(&query) == SatResult::Unsat {
            let core = self.b.core().to_vec();
            full.iter()
                .copied()
                .filter(|&(i, p)| core.contains(&SatLit::new(self.tr.latches[i], p)))
                .collect()
        } else {
            debug_assert!(false, "state is not forced");
            full.clone()
        };

        let mut k = 0;
        while k < cube.len() {
            let mut trial = cube.clone();
            trial.remove(k);
            let mut query = self.current(&trial);
            query.extend(&inputs);
            self.region.stats.sat_calls += 1;
            if self.b.solve(&query) == SatResult::Unsat {
                cube = trial;
            } else {
                k += 1;
            }
        }

        let clause: Vec<StateLit> = cube.iter().map(|&(i, p)| (i, !p)).collect();
        self.region.stats.literals_after += clause.len();
        self.push_clause(clause);
        self.refresh_goal();
        self.region.iterations += 1;
        cube
    }

    /// Runs the refinement loop to its fixpoint (or until the initial state
    /// is excluded, with `early_exit`).
    pub fn run(&mut self, opts: &LearnOptions) -> Result<bool, SolveError> {
        let init = vec![false; self.tr.latches.len()];
        loop {
            if opts.early_exit && !self.region.contains(&init) {
                return Ok(false);
            }
            match self.find_forced_state_until(opts.deadline)? {
                None => return Ok(true),
                Some(forced) => {
                    self.generalize_blocking_clause(&forced);
                }
            }
        }
    }
}

/// Clauses over the latches describing `¬BAD`, when the output depends on
/// latches only and the description is small; otherwise no clauses.
fn initial_clauses(enc: &GameEncoding, store: &NodeStore) -> Vec<Vec<StateLit>> {
    if !enc.out_is_latch {
        return Vec::new();
    }
    // every path to the 1-terminal of BAD is a cube of bad states
    let mut clauses = Vec::new();
    let mut stack: Vec<(u32, Vec<StateLit>)> = vec![(enc.bad_fn.id(), Vec::new())];
    while let Some((id, path)) = stack.pop() {
        match store.node_parts(id) {
            None => {
                if id == store.tt().id() {
                    clauses.push(path.iter().map(|&(i, p)| (i, !p)).collect());
                    if clauses.len() > INIT_CLAUSE_LIMIT {
                        return Vec::new();
                    }
                }
            }
            Some((v, lo, hi)) => {
                let i = latch_index(enc, v);
                let mut lo_path = path.clone();
                lo_path.push((i, false));
                let mut hi_path = path;
                hi_path.push((i, true));
                stack.push((lo, lo_path));
                stack.push((hi, hi_path));
            }
        }
    }
    clauses
}

fn latch_index(enc: &GameEncoding, v: VarId) -> usize {
    enc.latch_of(v).expect("output depends on latches only")
}

/// Computes the winning region with the SAT-based learner.
pub fn learn_winning_region(
    enc: &GameEncoding,
    store: &NodeStore,
    opts: &LearnOptions,
) -> Result<LearnOutcome, SolveError> {
    let mut learner = Learner::new(enc, store);
    let fixpoint = learner.run(opts)?;
    let region = learner.into_region();
    let realizable = region.contains(&vec![false; enc.num_latches()]);
    Ok(LearnOutcome {
        region,
        realizable,
        exact: fixpoint,
    })
}
