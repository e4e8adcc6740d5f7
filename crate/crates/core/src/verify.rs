//! Semantic checking of synthesised controllers: the specification closed
//! by the controller must keep its output low on every input sequence.

use std::collections::BTreeSet;
use std::fmt;
use std::time::Instant;

use thiserror::Error;

use crate::aiger::{check_solution_syntax, Aig, CheckReport, InputPartition};
use crate::bdd::{Func, NodeStore, VarId, VarSet};
use crate::game::{encode, EncodeError, EncodeOptions, GameEncoding};
pub use crate::sim::{simulate, SimTrace};

/// Default limit on live diagram nodes during model checking.
pub const DEFAULT_NODE_BUDGET: usize = 1 << 22;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("solution is not a syntactically valid implementation:\n{0}")]
    Syntax(CheckReport),
    #[error(transparent)]
    Circuit(#[from] EncodeError),
}

/// The specification closed by the controller in `solution`.
///
/// A syntactically valid solution already contains the specification with
/// every controllable input replaced by its driver, so the composition is
/// the solution itself with its symbol table and comments dropped.
pub fn compose(spec: &Aig, solution: &Aig) -> Result<Aig, VerifyError> {
    let report = check_solution_syntax(spec, solution);
    if !report.passed() {
        return Err(VerifyError::Syntax(report));
    }
    let mut closed = solution.clone();
    closed.symbols.clear();
    closed.comments = None;
    Ok(closed)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Safe,
    Unsafe,
    ResourceLimit,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Safe => "SAFE",
            Status::Unsafe => "UNSAFE",
            Status::ResourceLimit => "RESOURCE_LIMIT",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub status: Status,
    /// For `Unsafe`: one input valuation per step, the output being 1 in
    /// the last step.
    pub trace: Option<Vec<Vec<bool>>>,
    /// Image computations performed.
    pub iterations: usize,
    pub peak_nodes: usize,
}

impl Verdict {
    /// Number of transitions before the output rises.
    pub fn depth(&self) -> Option<usize> {
        self.trace.as_ref().map(|t| t.len() - 1)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.status)?;
        if let Some(trace) = &self.trace {
            for step in trace {
                let bits: String = step.iter().map(|&b| if b { '1' } else { '0' }).collect();
                writeln!(f, "{bits}")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct CheckOptions {
    pub node_budget: usize,
    pub deadline: Option<Instant>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            node_budget: DEFAULT_NODE_BUDGET,
            deadline: None,
        }
    }
}

/// Proves that `closed` keeps its output at 0 from the all-zero state, or
/// finds a shortest input sequence raising it.
pub fn model_check(closed: &Aig, node_budget: usize) -> Result<Verdict, VerifyError> {
    model_check_with(
        closed,
        &CheckOptions {
            node_budget,
            deadline: None,
        },
    )
}

pub fn model_check_with(closed: &Aig, opts: &CheckOptions) -> Result<Verdict, VerifyError> {
    let partition = InputPartition {
        uncontrollable: closed.inputs.clone(),
        controllable: Vec::new(),
    };
    let mut store = NodeStore::new();
    let mut enc = encode(closed, &partition, &mut store, &EncodeOptions::default())?;
    let mut checker = Checker {
        enc: &mut enc,
        store: &mut store,
        iterations: 0,
        peak: 0,
    };
    let verdict = checker.run(opts);
    Ok(verdict)
}

struct Checker<'a> {
    enc: &'a mut GameEncoding,
    store: &'a mut NodeStore,
    iterations: usize,
    peak: usize,
}

impl Checker<'_> {
    fn verdict(&self, status: Status, trace: Option<Vec<Vec<bool>>>) -> Verdict {
        Verdict {
            status,
            trace,
            iterations: self.iterations,
            peak_nodes: self.peak,
        }
    }

    fn over_budget(&mut self, opts: &CheckOptions) -> bool {
        self.store.checkpoint();
        let live = self.store.live_nodes();
        self.peak = self.peak.max(live);
        live > opts.node_budget || opts.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn run(&mut self, opts: &CheckOptions) -> Verdict {
        let enc = &mut *self.enc;
        let all: Vec<usize> = (0..enc.num_latches()).collect();
        let fns = enc.update_fns.clone();
        let t = crate::game::reach::partial_relation(enc, self.store, &fns, &all);
        let quantified: VarSet = enc.latch_vars.iter().chain(&enc.uncontrollable_vars).collect();
        let bad = enc.bad_fn;

        let init = enc.initial_state(self.store);
        let mut reached = self.store.retain(init);
        let mut frontiers = vec![init];
        loop {
            let frontier = *frontiers.last().unwrap();
            let hit = self.store.and(frontier, bad);
            if !hit.is_false() {
                let trace = self.trace(&frontiers, hit);
                self.store.release(hit).expect("fresh handle");
                return self.verdict(Status::Unsafe, Some(trace));
            }
            self.store.release(hit).expect("fresh handle");
            if self.over_budget(opts) {
                return self.verdict(Status::ResourceLimit, None);
            }
            self.iterations += 1;
            let img = crate::game::reach::image(self.enc, self.store, t, frontier, &quantified);
            let not_reached = self.store.not(reached);
            let fresh = self.store.and(img, not_reached);
            self.store.release_all([img, not_reached]);
            if fresh.is_false() {
                return self.verdict(Status::Safe, None);
            }
            let next = self.store.or(reached, fresh);
            self.store.release(reached).expect("owned handle");
            reached = next;
            frontiers.push(fresh);
        }
    }

    /// Walks back from a bad `(state, input)` in the last frontier through
    /// the stored frontiers.
    fn trace(&mut self, frontiers: &[Func], hit: Func) -> Vec<Vec<bool>> {
        let enc = &*self.enc;
        let mut vars: Vec<VarId> = enc.latch_vars.clone();
        vars.extend(&enc.uncontrollable_vars);
        let nl = enc.num_latches();
        let m = self.store.pick_minterm(hit, &vars).expect("non-empty");
        let mut state = m[..nl].to_vec();
        let mut steps = vec![m[nl..].to_vec()];
        for &frontier in frontiers[..frontiers.len() - 1].iter().rev() {
            // predecessors of `state` within the frontier
            let mut pre = self.store.retain(frontier);
            for (i, &value) in state.iter().enumerate() {
                let f = enc.update_fns[i];
                let lit = if value { self.store.retain(f) } else { self.store.not(f) };
                let next = self.store.and(pre, lit);
                self.store.release_all([pre, lit]);
                pre = next;
            }
            let m = self.store.pick_minterm(pre, &vars).expect("state has a predecessor in the frontier");
            self.store.release(pre).expect("owned handle");
            state = m[..nl].to_vec();
            steps.push(m[nl..].to_vec());
        }
        steps.reverse();
        steps
    }
}

/// Whether the output can rise, by explicit enumeration of reachable
/// states; a cross-check of [`model_check`] for small circuits.
pub fn explicit_bad_reachable(closed: &Aig) -> Result<bool, crate::sim::CircuitError> {
    let mut sim = crate::sim::Simulator::new(closed)?;
    let nl = closed.num_latches();
    let ni = closed.num_inputs();
    let mut seen: BTreeSet<Vec<bool>> = BTreeSet::new();
    let mut queue = vec![vec![false; nl]];
    seen.insert(queue[0].clone());
    while let Some(s) = queue.pop() {
        for m in 0..1u64 << ni {
            let inputs: Vec<bool> = (0..ni).map(|i| m >> i & 1 == 1).collect();
            sim.set_state(&s);
            let out = sim.step(&inputs)?;
            if out.first().copied().unwrap_or(false) {
                return Ok(true);
            }
            let next = sim.state().to_vec();
            if seen.insert(next.clone()) {
                queue.push(next);
            }
        }
    }
    Ok(false)
}
