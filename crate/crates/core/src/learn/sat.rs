//! A small incremental CDCL SAT solver: two-watched-literal propagation,
//! first-UIP clause learning, VSIDS branching with phase saving, geometric
//! restarts and solving under assumptions with conflict cores.

use std::ops::Not;

#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct SatLit(u32);

impl SatLit {
    pub fn new(var: u32, positive: bool) -> Self {
        SatLit(var << 1 | (!positive) as u32)
    }

    pub fn var(self) -> u32 {
        self.0 >> 1
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    fn idx(self) -> usize {
        self.0 as usize
    }

    /// DIMACS integer: `var + 1`, negative when negated.
    pub fn to_dimacs(self) -> i64 {
        let v = self.var() as i64 + 1;
        if self.is_positive() {
            v
        } else {
            -v
        }
    }
}

impl Not for SatLit {
    type Output = SatLit;
    fn not(self) -> SatLit {
        SatLit(self.0 ^ 1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    Sat,
    Unsat,
}

#[derive(Copy, Clone, PartialEq, Eq, Debug)]
enum Value {
    True,
    False,
    Undef,
}

struct Clause {
    lits: Vec<SatLit>,
    learnt: bool,
    deleted: bool,
}

/// Max-heap of variables keyed by activity.
#[derive(Default)]
struct VarHeap {
    heap: Vec<u32>,
    pos: Vec<Option<usize>>,
}

impl VarHeap {
    fn grow(&mut self, n: usize) {
        self.pos.resize(n, None);
    }

    fn contains(&self, v: u32) -> bool {
        self.pos[v as usize].is_some()
    }

    fn push(&mut self, v: u32, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.heap.push(v);
        self.pos[v as usize] = Some(self.heap.len() - 1);
        self.up(self.heap.len() - 1, act);
    }

    fn pop(&mut self, act: &[f64]) -> Option<u32> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().unwrap();
        self.pos[top as usize] = None;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = Some(0);
            self.down(0, act);
        }
        Some(top)
    }

    fn bumped(&mut self, v: u32, act: &[f64]) {
        if let Some(i) = self.pos[v as usize] {
            self.up(i, act);
        }
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let p = self.heap[parent];
            if act[p as usize] >= act[v as usize] {
                break;
            }
            self.heap[i] = p;
            self.pos[p as usize] = Some(i);
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v as usize] = Some(i);
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let c = if r < n && act[self.heap[r] as usize] > act[self.heap[l] as usize] {
                r
            } else {
                l
            };
            let cv = self.heap[c];
            if act[cv as usize] <= act[v as usize] {
                break;
            }
            self.heap[i] = cv;
            self.pos[cv as usize] = Some(i);
            i = c;
        }
        self.heap[i] = v;
        self.pos[v as usize] = Some(i);
    }
}

/// Counters over the lifetime of a solver.
#[derive(Clone, Debug, Default)]
pub struct SolverStats {
    pub solves: u64,
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub restarts: u64,
}

pub struct Solver {
    clauses: Vec<Clause>,
    watches: Vec<Vec<usize>>,
    assigns: Vec<Value>,
    level: Vec<u32>,
    reason: Vec<Option<usize>>,
    trail: Vec<SatLit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    heap: VarHeap,
    phase: Vec<bool>,
    seen: Vec<bool>,
    ok: bool,
    model: Vec<bool>,
    core: Vec<SatLit>,
    num_learnts: usize,
    max_learnts: f64,
    stats: SolverStats,
}

impl Default for Solver {
    fn default() -> Self {
        Self::new()
    }
}

const VAR_DECAY: f64 = 0.95;
const RESTART_FIRST: f64 = 100.0;
const RESTART_GROWTH: f64 = 1.5;

impl Solver {
    pub fn new() -> Self {
        Solver {
            clauses: Vec::new(),
            watches: Vec::new(),
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: Vec::new(),
            var_inc: 1.0,
            heap: VarHeap::default(),
            phase: Vec::new(),
            seen: Vec::new(),
            ok: true,
            model: Vec::new(),
            core: Vec::new(),
            num_learnts: 0,
            max_learnts: 2000.0,
            stats: SolverStats::default(),
        }
    }

    pub fn num_vars(&self) -> u32 {
        self.assigns.len() as u32
    }

    pub fn stats(&self) -> &SolverStats {
        &self.stats
    }

    pub fn new_var(&mut self) -> u32 {
        let v = self.assigns.len() as u32;
        self.assigns.push(Value::Undef);
        self.level.push(0);
        self.reason.push(None);
        self.activity.push(0.0);
        self.phase.push(false);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.heap.grow(self.assigns.len());
        self.heap.push(v, &self.activity);
        v
    }

    /// Makes sure variables `0..n` exist.
    pub fn reserve_vars(&mut self, n: u32) {
        while self.num_vars() < n {
            self.new_var();
        }
    }

    fn value(&self, l: SatLit) -> Value {
        match self.assigns[l.var() as usize] {
            Value::Undef => Value::Undef,
            Value::True if l.is_positive() => Value::True,
            Value::False if !l.is_positive() => Value::True,
            _ => Value::False,
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, l: SatLit, reason: Option<usize>) {
        let v = l.var() as usize;
        debug_assert_eq!(self.assigns[v], Value::Undef);
        self.assigns[v] = if l.is_positive() { Value::True } else { Value::False };
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    /// Adds a permanent clause. Returns false once the clause set is
    /// unsatisfiable without assumptions.
    pub fn add_clause(&mut self, lits: &[SatLit]) -> bool {
        if !self.ok {
            return false;
        }
        debug_assert_eq!(self.decision_level(), 0);
        let max_var = lits.iter().map(|l| l.var() + 1).max().unwrap_or(0);
        self.reserve_vars(max_var);
        let mut c: Vec<SatLit> = lits.to_vec();
        c.sort_unstable();
        c.dedup();
        if c.windows(2).any(|w| w[0] == !w[1]) {
            return true; // tautology
        }
        if c.iter().any(|&l| self.value(l) == Value::True) {
            return true;
        }
        c.retain(|&l| self.value(l) != Value::False);
        match c.len() {
            0 => {
                self.ok = false;
                false
            }
            1 => {
                self.enqueue(c[0], None);
                if self.propagate().is_some() {
                    self.ok = false;
                }
                self.ok
            }
            _ => {
                self.attach(c, false);
                true
            }
        }
    }

    fn attach(&mut self, lits: Vec<SatLit>, learnt: bool) -> usize {
        let ci = self.clauses.len();
        self.watches[lits[0].idx()].push(ci);
        self.watches[lits[1].idx()].push(ci);
        self.clauses.push(Clause {
            lits,
            learnt,
            deleted: false,
        });
        if learnt {
            self.num_learnts += 1;
        }
        ci
    }

    /// Unit propagation; returns a conflicting clause.
    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let fl = !p;
            let mut ws = std::mem::take(&mut self.watches[fl.idx()]);
            let mut i = 0;
            let mut j = 0;
            let mut conflict = None;
            while i < ws.len() {
                let ci = ws[i];
                i += 1;
                if self.clauses[ci].deleted {
                    continue;
                }
                {
                    let c = &mut self.clauses[ci].lits;
                    if c[0] == fl {
                        c.swap(0, 1);
                    }
                }
                let first = self.clauses[ci].lits[0];
                if self.value(first) == Value::True {
                    ws[j] = ci;
                    j += 1;
                    continue;
                }
                let len = self.clauses[ci].lits.len();
                let mut moved = false;
                for k in 2..len {
                    let lk = self.clauses[ci].lits[k];
                    if self.value(lk) != Value::False {
                        self.clauses[ci].lits.swap(1, k);
                        self.watches[lk.idx()].push(ci);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = ci;
                j += 1;
                if self.value(first) == Value::False {
                    conflict = Some(ci);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, Some(ci));
                }
            }
            ws.truncate(j);
            self.watches[fl.idx()] = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn bump(&mut self, v: u32) {
        self.activity[v as usize] += self.var_inc;
        if self.activity[v as usize] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.bumped(v, &self.activity);
    }

    /// First-UIP conflict analysis. Returns the learnt clause (asserting
    /// literal first) and the level to backtrack to.
    fn analyze(&mut self, mut confl: usize) -> (Vec<SatLit>, u32) {
        let mut learnt = vec![SatLit(0)];
        let mut path = 0;
        let mut p: Option<SatLit> = None;
        let mut index = self.trail.len();
        loop {
            let start = if p.is_some() { 1 } else { 0 };
            let lits = self.clauses[confl].lits.clone();
            for &q in &lits[start..] {
                let v = q.var() as usize;
                if !self.seen[v] && self.level[v] > 0 {
                    self.bump(q.var());
                    self.seen[v] = true;
                    if self.level[v] >= self.decision_level() {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var() as usize] {
                    break;
                }
            }
            let lit = self.trail[index];
            p = Some(lit);
            self.seen[lit.var() as usize] = false;
            path -= 1;
            if path == 0 {
                break;
            }
            confl = self.reason[lit.var() as usize].expect("implied literal has a reason");
        }
        learnt[0] = !p.unwrap();
        for l in &learnt[1..] {
            self.seen[l.var() as usize] = false;
        }
        let mut bt = 0;
        if learnt.len() > 1 {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var() as usize] > self.level[learnt[max_i].var() as usize] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            bt = self.level[learnt[1].var() as usize];
        }
        (learnt, bt)
    }

    /// The assumptions responsible for `p` being false.
    fn analyze_final(&mut self, p: SatLit) {
        self.core.clear();
        self.core.push(p);
        if self.decision_level() == 0 {
            return;
        }
        self.seen[p.var() as usize] = true;
        for i in (self.trail_lim[0]..self.trail.len()).rev() {
            let x = self.trail[i].var() as usize;
            if !self.seen[x] {
                continue;
            }
            match self.reason[x] {
                None => {
                    if self.level[x] > 0 {
                        self.core.push(self.trail[i]);
                    }
                }
                Some(ci) => {
                    for k in 1..self.clauses[ci].lits.len() {
                        let v = self.clauses[ci].lits[k].var() as usize;
                        if self.level[v] > 0 {
                            self.seen[v] = true;
                        }
                    }
                }
            }
            self.seen[x] = false;
        }
        self.seen[p.var() as usize] = false;
        self.core.sort_unstable();
        self.core.dedup();
    }

    fn cancel_until(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level as usize];
        for i in (lim..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var() as usize;
            self.phase[v] = l.is_positive();
            self.assigns[v] = Value::Undef;
            self.reason[v] = None;
            self.heap.push(l.var(), &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level as usize);
        self.qhead = lim;
    }

    fn pick_branch(&mut self) -> Option<SatLit> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assigns[v as usize] == Value::Undef {
                return Some(SatLit::new(v, self.phase[v as usize]));
            }
        }
        None
    }

    fn locked(&self, ci: usize) -> bool {
        let l = self.clauses[ci].lits[0];
        self.value(l) == Value::True && self.reason[l.var() as usize] == Some(ci)
    }

    /// Drops the longer half of the learnt clauses that are not reasons.
    fn reduce_db(&mut self) {
        let mut learnts: Vec<usize> = (0..self.clauses.len())
            .filter(|&ci| self.clauses[ci].learnt && !self.clauses[ci].deleted && !self.locked(ci))
            .collect();
        learnts.sort_by_key(|&ci| std::cmp::Reverse(self.clauses[ci].lits.len()));
        for &ci in &learnts[..learnts.len() / 2] {
            self.clauses[ci].deleted = true;
            self.clauses[ci].lits = Vec::new();
            self.num_learnts -= 1;
        }
        for w in &mut self.watches {
            w.retain(|&ci| !self.clauses[ci].deleted);
        }
    }

    /// Searches until a model, a refutation or `budget` conflicts.
    fn search(&mut self, assumptions: &[SatLit], budget: u64) -> Option<SatResult> {
        let mut conflicts = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                conflicts += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    self.core.clear();
                    return Some(SatResult::Unsat);
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let lit = learnt[0];
                    let ci = self.attach(learnt, true);
                    self.enqueue(lit, Some(ci));
                }
                self.var_inc /= VAR_DECAY;
                continue;
            }
            if conflicts >= budget {
                self.cancel_until(0);
                return None;
            }
            let mut next = None;
            while (self.decision_level() as usize) < assumptions.len() {
                let p = assumptions[self.decision_level() as usize];
                match self.value(p) {
                    Value::True => self.trail_lim.push(self.trail.len()),
                    Value::False => {
                        self.analyze_final(!p);
                        self.fix_core(assumptions);
                        return Some(SatResult::Unsat);
                    }
                    Value::Undef => {
                        next = Some(p);
                        break;
                    }
                }
            }
            let decision = match next {
                Some(p) => p,
                None => {
                    self.stats.decisions += 1;
                    match self.pick_branch() {
                        Some(l) => l,
                        None => {
                            self.model = self.assigns.iter().map(|&a| a == Value::True).collect();
                            return Some(SatResult::Sat);
                        }
                    }
                }
            };
            self.trail_lim.push(self.trail.len());
            self.enqueue(decision, None);
        }
    }

    /// Maps the trail literals collected by `analyze_final` back to the
    /// assumptions they came from.
    fn fix_core(&mut self, assumptions: &[SatLit]) {
        let set: rustc_hash::FxHashSet<SatLit> = assumptions.iter().copied().collect();
        let mut core: Vec<SatLit> = self
            .core
            .iter()
            .flat_map(|&l| [l, !l])
            .filter(|l| set.contains(l))
            .collect();
        core.sort_unstable();
        core.dedup();
        self.core = core;
    }

    /// Decides satisfiability under `assumptions`. After `Sat` the model is
    /// available through [`value_of`](Self::value_of); after `Unsat`,
    /// [`core`](Self::core) lists assumptions that are jointly
    /// inconsistent with the clauses (empty when the clauses alone are).
    pub fn solve(&mut self, assumptions: &[SatLit]) -> SatResult {
        self.stats.solves += 1;
        self.core.clear();
        if !self.ok {
            return SatResult::Unsat;
        }
        let max_var = assumptions.iter().map(|l| l.var() + 1).max().unwrap_or(0);
        self.reserve_vars(max_var);
        let mut budget = RESTART_FIRST;
        loop {
            if self.num_learnts as f64 > self.max_learnts + self.trail.len() as f64 {
                self.cancel_until(0);
                self.reduce_db();
                self.max_learnts *= 1.1;
            }
            match self.search(assumptions, budget as u64) {
                Some(r) => {
                    self.cancel_until(0);
                    return r;
                }
                None => {
                    self.stats.restarts += 1;
                    budget *= RESTART_GROWTH;
                }
            }
        }
    }

    /// Value of `v` in the last model.
    pub fn value_of(&self, v: u32) -> bool {
        self.model.get(v as usize).copied().unwrap_or(false)
    }

    pub fn lit_value(&self, l: SatLit) -> bool {
        self.value_of(l.var()) == l.is_positive()
    }

    pub fn model(&self) -> &[bool] {
        &self.model
    }

    /// Assumptions involved in the last `Unsat` answer.
    pub fn core(&self) -> &[SatLit] {
        &self.core
    }
}
