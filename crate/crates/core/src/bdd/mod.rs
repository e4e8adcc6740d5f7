//! Reduced ordered binary decision diagrams.
//!
//! All diagrams live in a [`NodeStore`]: a shared node table with one unique
//! table per variable, a computed-table cache and per-node reference counts.
//! There are no complement edges, so negation is an ordinary cached
//! operation and two [`Func`]s of the same store denote the same Boolean
//! function exactly when their node ids are equal.
//!
//! Every operation that returns a [`Func`] hands out one external reference
//! to the result. Callers give it back with [`NodeStore::release`]. Nodes
//! whose count drops to zero stay in the table (and may be revived by a
//! later lookup) until [`NodeStore::gc`] runs, which happens explicitly,
//! before every reordering, and from [`NodeStore::checkpoint`].

mod reorder;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::atomic::{AtomicU32, Ordering};

use rustc_hash::{FxHashMap, FxHashSet};
use thiserror::Error;

pub use reorder::ReorderStats;

pub type NodeId = u32;

const FALSE_ID: NodeId = 0;
const TRUE_ID: NodeId = 1;
const TERMINAL_VAR: u32 = u32::MAX;
const FREED_VAR: u32 = u32::MAX - 1;
const CACHE_LIMIT: usize = 1 << 22;

static NEXT_STORE_ID: AtomicU32 = AtomicU32::new(1);

/// Identifier of a decision variable. Ids are handed out densely from zero and
/// never change; the position of a variable in the order is its *level*.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Handle to a Boolean function stored in a [`NodeStore`].
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Func {
    id: NodeId,
    store: u32,
}

impl Func {
    pub fn id(self) -> NodeId {
        self.id
    }

    pub fn is_true(self) -> bool {
        self.id == TRUE_ID
    }

    pub fn is_false(self) -> bool {
        self.id == FALSE_ID
    }

    pub fn is_const(self) -> bool {
        self.id <= TRUE_ID
    }
}

/// A set of variables, used as the quantification cube.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VarSet(BTreeSet<VarId>);

impl VarSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, v: VarId) -> bool {
        self.0.insert(v)
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.0.contains(&v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = VarId> + '_ {
        self.0.iter().copied()
    }
}

impl FromIterator<VarId> for VarSet {
    fn from_iter<T: IntoIterator<Item = VarId>>(iter: T) -> Self {
        VarSet(iter.into_iter().collect())
    }
}

impl<'a> FromIterator<&'a VarId> for VarSet {
    fn from_iter<T: IntoIterator<Item = &'a VarId>>(iter: T) -> Self {
        VarSet(iter.into_iter().copied().collect())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum BinOp {
    And,
    Or,
    Xor,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Quantifier {
    Exists,
    Forall,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BddError {
    #[error("unknown variable {}", .0 .0)]
    UnknownVariable(VarId),
    #[error("function belongs to a different node store")]
    StoreMismatch,
    #[error("node {0} released more often than it was referenced")]
    DoubleRelease(NodeId),
    #[error("assignment does not cover variable {}", .0 .0)]
    MissingVariable(VarId),
    #[error("variable {} is used twice as a renaming target", .0 .0)]
    DuplicateTarget(VarId),
}

/// Tunables of a [`NodeStore`].
#[derive(Clone, Debug)]
pub struct StoreConfig {
    /// Live node count above which [`NodeStore::checkpoint`] sifts.
    /// `None` disables automatic reordering.
    pub reorder_threshold: Option<usize>,
    /// A sifting pass for one variable stops moving in a direction once the
    /// table grows beyond this factor of the best size seen.
    pub max_growth: f64,
    /// Allocated node count above which [`NodeStore::checkpoint`] collects.
    pub gc_threshold: usize,
}

impl Default for StoreConfig {
    fn default() -> Self {
        StoreConfig {
            reorder_threshold: Some(4096),
            max_growth: 1.2,
            gc_threshold: 1 << 16,
        }
    }
}

#[derive(Copy, Clone, Debug)]
struct Node {
    var: u32,
    lo: NodeId,
    hi: NodeId,
    rc: u32,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
enum OpTag {
    And,
    Or,
    Xor,
    Not,
    Ite,
    Exists,
    Forall,
    AndExists,
    Restrict,
    Cofactor,
}

type CacheKey = (OpTag, NodeId, NodeId, NodeId);

/// Counters accumulated over the lifetime of a store.
#[derive(Clone, Debug, Default)]
pub struct StoreStats {
    pub peak_nodes: usize,
    pub gc_runs: usize,
    pub reclaimed: usize,
    pub reorderings: usize,
    pub cache_hits: u64,
    pub cache_misses: u64,
}

pub struct NodeStore {
    id: u32,
    nodes: Vec<Node>,
    free: Vec<NodeId>,
    unique: Vec<FxHashMap<(NodeId, NodeId), NodeId>>,
    level_of: Vec<u32>,
    var_at: Vec<u32>,
    cache: FxHashMap<CacheKey, NodeId>,
    config: StoreConfig,
    gc_trigger: usize,
    stats: StoreStats,
}

impl Default for NodeStore {
    fn default() -> Self {
        Self::new()
    }
}

impl NodeStore {
    pub fn new() -> Self {
        Self::with_config(StoreConfig::default())
    }

    pub fn with_config(config: StoreConfig) -> Self {
        let terminal = Node {
            var: TERMINAL_VAR,
            lo: 0,
            hi: 0,
            rc: 1,
        };
        NodeStore {
            id: NEXT_STORE_ID.fetch_add(1, Ordering::Relaxed),
            nodes: vec![terminal, terminal],
            free: Vec::new(),
            unique: Vec::new(),
            level_of: Vec::new(),
            var_at: Vec::new(),
            cache: FxHashMap::default(),
            gc_trigger: config.gc_threshold,
            config,
            stats: StoreStats::default(),
        }
    }

    pub fn config(&self) -> &StoreConfig {
        &self.config
    }

    pub fn set_reorder_threshold(&mut self, threshold: Option<usize>) {
        self.config.reorder_threshold = threshold;
    }

    pub fn stats(&self) -> &StoreStats {
        &self.stats
    }

    // ---------------------------------------------------------------------
    // Variables and order

    /// Allocates a new variable at the bottom of the order.
    pub fn new_var(&mut self) -> VarId {
        let v = self.unique.len() as u32;
        self.unique.push(FxHashMap::default());
        self.level_of.push(self.var_at.len() as u32);
        self.var_at.push(v);
        VarId(v)
    }

    /// Allocates a new variable placed directly below `after` in the order.
    pub fn new_var_after(&mut self, after: VarId) -> Result<VarId, BddError> {
        self.check_var(after)?;
        let pos = self.level_of[after.index()] as usize + 1;
        let v = self.unique.len() as u32;
        self.unique.push(FxHashMap::default());
        self.level_of.push(0);
        self.var_at.insert(pos, v);
        for (level, &var) in self.var_at.iter().enumerate().skip(pos) {
            self.level_of[var as usize] = level as u32;
        }
        Ok(VarId(v))
    }

    pub fn num_vars(&self) -> usize {
        self.unique.len()
    }

    pub fn level(&self, v: VarId) -> usize {
        self.level_of[v.index()] as usize
    }

    /// Variables from the top of the order to the bottom.
    pub fn order(&self) -> Vec<VarId> {
        self.var_at.iter().map(|&v| VarId(v)).collect()
    }

    fn check_var(&self, v: VarId) -> Result<(), BddError> {
        if v.index() < self.unique.len() {
            Ok(())
        } else {
            Err(BddError::UnknownVariable(v))
        }
    }

    // ---------------------------------------------------------------------
    // Handles and reference counting

    fn wrap(&mut self, id: NodeId) -> Func {
        self.inc(id);
        Func { id, store: self.id }
    }

    fn chk(&self, f: Func) -> NodeId {
        assert_eq!(f.store, self.id, "function belongs to a different node store");
        debug_assert!(
            f.id <= TRUE_ID || self.nodes[f.id as usize].rc > 0,
            "use of released function {}",
            f.id
        );
        f.id
    }

    fn try_chk(&self, f: Func) -> Result<NodeId, BddError> {
        if f.store != self.id {
            return Err(BddError::StoreMismatch);
        }
        Ok(self.chk(f))
    }

    fn inc(&mut self, id: NodeId) {
        if id > TRUE_ID {
            self.nodes[id as usize].rc += 1;
        }
    }

    /// Takes another external reference to `f`.
    pub fn retain(&mut self, f: Func) -> Func {
        let id = self.chk(f);
        self.wrap(id)
    }

    /// Gives back one external reference. The node is reclaimed by the next
    /// garbage collection once nothing else refers to it.
    pub fn release(&mut self, f: Func) -> Result<(), BddError> {
        if f.store != self.id {
            return Err(BddError::StoreMismatch);
        }
        let id = f.id;
        if id <= TRUE_ID {
            return Ok(());
        }
        let node = &mut self.nodes[id as usize];
        if node.rc == 0 {
            return Err(BddError::DoubleRelease(id));
        }
        node.rc -= 1;
        Ok(())
    }

    /// Releases every handle in `fs`, panicking on misuse.
    pub fn release_all<I: IntoIterator<Item = Func>>(&mut self, fs: I) {
        for f in fs {
            self.release(f).expect("release of a live handle");
        }
    }

    /// Decrements `id` and reclaims it (and, transitively, its children) when
    /// the count reaches zero. Only used where the cache is already invalid.
    fn dec_reclaim(&mut self, id: NodeId) {
        let mut stack = vec![id];
        while let Some(id) = stack.pop() {
            if id <= TRUE_ID {
                continue;
            }
            let node = &mut self.nodes[id as usize];
            debug_assert!(node.rc > 0);
            node.rc -= 1;
            if node.rc == 0 {
                let Node { var, lo, hi, .. } = *node;
                self.free_slot(id, var, lo, hi);
                stack.push(lo);
                stack.push(hi);
            }
        }
    }

    fn free_slot(&mut self, id: NodeId, var: u32, lo: NodeId, hi: NodeId) {
        self.unique[var as usize].remove(&(lo, hi));
        self.nodes[id as usize] = Node {
            var: FREED_VAR,
            lo: FALSE_ID,
            hi: FALSE_ID,
            rc: 0,
        };
        self.free.push(id);
        self.stats.reclaimed += 1;
    }

    /// Reclaims every node without references and clears the operation
    /// cache. Returns the number of reclaimed nodes.
    pub fn gc(&mut self) -> usize {
        let before = self.free.len();
        let mut stack: Vec<NodeId> = (2..self.nodes.len() as NodeId)
            .filter(|&id| {
                let n = &self.nodes[id as usize];
                n.var != FREED_VAR && n.rc == 0
            })
            .collect();
        while let Some(id) = stack.pop() {
            let Node { var, lo, hi, rc } = self.nodes[id as usize];
            if var == FREED_VAR || rc != 0 {
                continue;
            }
            self.free_slot(id, var, lo, hi);
            for child in [lo, hi] {
                if child > TRUE_ID {
                    let c = &mut self.nodes[child as usize];
                    c.rc -= 1;
                    if c.rc == 0 {
                        stack.push(child);
                    }
                }
            }
        }
        self.cache.clear();
        self.stats.gc_runs += 1;
        self.free.len() - before
    }

    /// Number of allocated decision nodes, including unreferenced ones that
    /// have not been collected yet.
    pub fn allocated_nodes(&self) -> usize {
        self.nodes.len() - 2 - self.free.len()
    }

    /// Number of decision nodes that are referenced.
    pub fn live_nodes(&self) -> usize {
        self.nodes[2..]
            .iter()
            .filter(|n| n.var != FREED_VAR && n.rc > 0)
            .count()
    }

    /// A safe point for housekeeping: collects garbage when the table has
    /// grown past the collection trigger and sifts when the live node count
    /// exceeds the reorder threshold.
    pub fn checkpoint(&mut self) -> Option<ReorderStats> {
        if self.allocated_nodes() > self.gc_trigger {
            self.gc();
            self.gc_trigger = self.config.gc_threshold.max(2 * self.allocated_nodes());
        }
        let threshold = self.config.reorder_threshold?;
        if self.allocated_nodes() <= threshold {
            return None;
        }
        self.gc();
        if self.allocated_nodes() <= threshold {
            return None;
        }
        let stats = self.reorder_sift();
        self.config.reorder_threshold = Some(threshold.max(2 * stats.nodes_after));
        Some(stats)
    }

    // ---------------------------------------------------------------------
    // Node construction

    #[inline]
    fn node(&self, id: NodeId) -> Node {
        let n = self.nodes[id as usize];
        debug_assert!(n.var != FREED_VAR, "access to reclaimed node {id}");
        n
    }

    #[inline]
    fn level_of_node(&self, id: NodeId) -> u32 {
        let var = self.node(id).var;
        if var == TERMINAL_VAR {
            u32::MAX
        } else {
            self.level_of[var as usize]
        }
    }

    fn mk(&mut self, var: u32, lo: NodeId, hi: NodeId) -> NodeId {
        if lo == hi {
            return lo;
        }
        if let Some(&id) = self.unique[var as usize].get(&(lo, hi)) {
            return id;
        }
        let node = Node { var, lo, hi, rc: 0 };
        let id = match self.free.pop() {
            Some(id) => {
                self.nodes[id as usize] = node;
                id
            }
            None => {
                self.nodes.push(node);
                (self.nodes.len() - 1) as NodeId
            }
        };
        self.inc(lo);
        self.inc(hi);
        self.unique[var as usize].insert((lo, hi), id);
        let allocated = self.allocated_nodes();
        if allocated > self.stats.peak_nodes {
            self.stats.peak_nodes = allocated;
        }
        id
    }

    /// Cofactors of `id` with respect to the variable at `level`.
    #[inline]
    fn cofactors(&self, id: NodeId, level: u32) -> (NodeId, NodeId) {
        if self.level_of_node(id) == level {
            let n = self.node(id);
            (n.lo, n.hi)
        } else {
            (id, id)
        }
    }

    fn cache_get(&mut self, key: CacheKey) -> Option<NodeId> {
        let r = self.cache.get(&key).copied();
        if r.is_some() {
            self.stats.cache_hits += 1;
        } else {
            self.stats.cache_misses += 1;
        }
        r
    }

    fn cache_put(&mut self, key: CacheKey, value: NodeId) {
        if self.cache.len() >= CACHE_LIMIT {
            self.cache.clear();
        }
        self.cache.insert(key, value);
    }

    // ---------------------------------------------------------------------
    // Constants, projections, cubes

    pub fn constant(&self, value: bool) -> Func {
        Func {
            id: if value { TRUE_ID } else { FALSE_ID },
            store: self.id,
        }
    }

    pub fn tt(&self) -> Func {
        self.constant(true)
    }

    pub fn ff(&self) -> Func {
        self.constant(false)
    }

    /// The projection function of `v`.
    pub fn var(&mut self, v: VarId) -> Result<Func, BddError> {
        self.literal(v, true)
    }

    pub fn literal(&mut self, v: VarId, positive: bool) -> Result<Func, BddError> {
        self.check_var(v)?;
        let id = if positive {
            self.mk(v.0, FALSE_ID, TRUE_ID)
        } else {
            self.mk(v.0, TRUE_ID, FALSE_ID)
        };
        Ok(self.wrap(id))
    }

    /// Conjunction of the given literals.
    pub fn cube(&mut self, lits: &[(VarId, bool)]) -> Result<Func, BddError> {
        for &(v, _) in lits {
            self.check_var(v)?;
        }
        let mut polarity: BTreeMap<VarId, bool> = BTreeMap::new();
        for &(v, positive) in lits {
            if let Some(&prev) = polarity.get(&v) {
                if prev != positive {
                    return Ok(self.ff());
                }
            }
            polarity.insert(v, positive);
        }
        let mut sorted: Vec<(VarId, bool)> = polarity.into_iter().collect();
        sorted.sort_by_key(|&(v, _)| std::cmp::Reverse(self.level_of[v.index()]));
        let mut acc = TRUE_ID;
        for (v, positive) in sorted {
            acc = if positive {
                self.mk(v.0, FALSE_ID, acc)
            } else {
                self.mk(v.0, acc, FALSE_ID)
            };
        }
        Ok(self.wrap(acc))
    }

    fn varset_cube(&mut self, vars: &VarSet) -> NodeId {
        let mut sorted: Vec<VarId> = vars.iter().collect();
        sorted.sort_by_key(|v| std::cmp::Reverse(self.level_of[v.index()]));
        let mut acc = TRUE_ID;
        for v in sorted {
            acc = self.mk(v.0, FALSE_ID, acc);
        }
        acc
    }

    // ---------------------------------------------------------------------
    // Boolean connectives

    /// Checked binary operation.
    pub fn apply(&mut self, op: BinOp, f: Func, g: Func) -> Result<Func, BddError> {
        let (a, b) = (self.try_chk(f)?, self.try_chk(g)?);
        let r = match op {
            BinOp::And => self.and_rec(a, b),
            BinOp::Or => self.or_rec(a, b),
            BinOp::Xor => self.xor_rec(a, b),
        };
        Ok(self.wrap(r))
    }

    pub fn and(&mut self, f: Func, g: Func) -> Func {
        let (a, b) = (self.chk(f), self.chk(g));
        let r = self.and_rec(a, b);
        self.wrap(r)
    }

    pub fn or(&mut self, f: Func, g: Func) -> Func {
        let (a, b) = (self.chk(f), self.chk(g));
        let r = self.or_rec(a, b);
        self.wrap(r)
    }

    pub fn xor(&mut self, f: Func, g: Func) -> Func {
        let (a, b) = (self.chk(f), self.chk(g));
        let r = self.xor_rec(a, b);
        self.wrap(r)
    }

    pub fn not(&mut self, f: Func) -> Func {
        let a = self.chk(f);
        let r = self.not_rec(a);
        self.wrap(r)
    }

    pub fn iff(&mut self, f: Func, g: Func) -> Func {
        let (a, b) = (self.chk(f), self.chk(g));
        let x = self.xor_rec(a, b);
        let r = self.not_rec(x);
        self.wrap(r)
    }

    /// `f → g`.
    pub fn imp(&mut self, f: Func, g: Func) -> Func {
        let (a, b) = (self.chk(f), self.chk(g));
        let na = self.not_rec(a);
        let r = self.or_rec(na, b);
        self.wrap(r)
    }

    pub fn ite(&mut self, f: Func, g: Func, h: Func) -> Func {
        let (a, b, c) = (self.chk(f), self.chk(g), self.chk(h));
        let r = self.ite_rec(a, b, c);
        self.wrap(r)
    }

    fn and_rec(&mut self, f: NodeId, g: NodeId) -> NodeId {
        if f == FALSE_ID || g == FALSE_ID {
            return FALSE_ID;
        }
        if f == TRUE_ID || f == g {
            return g;
        }
        if g == TRUE_ID {
            return f;
        }
        let (f, g) = if f < g { (f, g) } else { (g, f) };
        let key = (OpTag::And, f, g, 0);
        if let Some(r) = self.cache_get(key) {
            return r;
        }
        let level = self.level_of_node(f).min(self.level_of_node(g));
        let var = self.var_at[level as usize];
        let (f0, f1) = self.cofactors(f, level);
        let (g0, g1) = self.cofactors(g, level);
        let lo = self.and_rec(f0, g0);
        let hi = self.and_rec(f1, g1);
        let r = self.mk(var, lo, hi);
        self.cache_put(key, r);
        r
    }

    fn or_rec(&mut self, f: NodeId, g: NodeId) -> NodeId {
        if f == TRUE_ID || g == TRUE_ID {
            return TRUE_ID;
        }
        if f == FALSE_ID || f == g {
            return g;
        }
        if g == FALSE_ID {
            return f;
        }
        let (f, g) = if f < g { (f, g) } else { (g, f) };
        let key = (OpTag::Or, f, g, 0);
        if let Some(r) = self.cache_get(key) {
            return r;
        }
        let level = self.level_of_node(f).min(self.level_of_node(g));
        let var = self.var_at[level as usize];
        let (f0, f1) = self.cofactors(f, level);
        let (g0, g1) = self.cofactors(g, level);
        let lo = self.or_rec(f0, g0);
        let hi = self.or_rec(f1, g1);
        let r = self.mk(var, lo, hi);
        self.cache_put(key, r);
        r
    }

    fn xor_rec(&mut self, f: NodeId, g: NodeId) -> NodeId {
        if f == g {
            return FALSE_ID;
        }
        if f == FALSE_ID {
            return g;
        }
        if g == FALSE_ID {
            return f;
        }
        if f == TRUE_ID {
            return self.not_rec(g);
        }
        if g == TRUE_ID {
            return self.not_rec(f);
        }
        let (f, g) = if f < g { (f, g) } else { (g, f) };
        let key = (OpTag::Xor, f, g, 0);
        if let Some(r) = self.cache_get(key) {
            return r;
        }
        let level = self.level_of_node(f).min(self.level_of_node(g));
        let var = self.var_at[level as usize];
        let (f0, f1) = self.cofactors(f, level);
        let (g0, g1) = self.cofactors(g, level);
        let lo = self.xor_rec(f0, g0);
        let hi = self.xor_rec(f1, g1);
        let r = self.mk(var, lo, hi);
        self.cache_put(key, r);
        r
    }

    fn not_rec(&mut self, f: NodeId) -> NodeId {
        if f <= TRUE_ID {
            return f ^ 1;
        }
        let key = (OpTag::Not, f, 0, 0);
        if let Some(r) = self.cache_get(key) {
            return r;
        }
        let n = self.node(f);
        let lo = self.not_rec(n.lo);
        let hi = self.not_rec(n.hi);
        let r = self.mk(n.var, lo, hi);
        self.cache_put(key, r);
        // negation is an involution
        self.cache_put((OpTag::Not, r, 0, 0), f);
        r
    }

    fn ite_rec(&mut self, f: NodeId, g: NodeId, h: NodeId) -> NodeId {
        if f == TRUE_ID {
            return g;
        }
        if f == FALSE_ID {
            return h;
        }
        if g == h {
            return g;
        }
        if g == TRUE_ID && h == FALSE_ID {
            return f;
        }
        if g == FALSE_ID && h == TRUE_ID {
            return self.not_rec(f);
        }
        if h == FALSE_ID {
            return self.and_rec(f, g);
        }
        if g == TRUE_ID {
            return self.or_rec(f, h);
        }
        let key = (OpTag::Ite, f, g, h);
        if let Some(r) = self.cache_get(key) {
            return r;
        }
        let level = self
            .level_of_node(f)
            .min(self.level_of_node(g))
            .min(self.level_of_node(h));
        let var = self.var_at[level as usize];
        let (f0, f1) = self.cofactors(f, level);
        let (g0, g1) = self.cofactors(g, level);
        let (h0, h1) = self.cofactors(h, level);
        let lo = self.ite_rec(f0, g0, h0);
        let hi = self.ite_rec(f1, g1, h1);
        let r = self.mk(var, lo, hi);
        self.cache_put(key, r);
        r
    }

    // ---------------------------------------------------------------------
    // Quantification

    pub fn quantify(&mut self, kind: Quantifier, vars: &VarSet, f: Func) -> Func {
        let a = self.chk(f);
        let cube = self.varset_cube(vars);
        let r = match kind {
            Quantifier::Exists => self.exists_rec(a, cube),
            Quantifier::Forall => self.forall_rec(a, cube),
        };
        self.wrap(r)
    }

    pub fn exists(&mut self, vars: &VarSet, f: Func) -> Func {
        self.quantify(Quantifier::Exists, vars, f)
    }

    pub fn forall(&mut self, vars: &VarSet, f: Func) -> Func {
        self.quantify(Quantifier::Forall, vars, f)
    }

    /// Drops cube variables above `level`, which the function cannot depend on.
    fn skip_cube(&self, mut cube: NodeId, level: u32) -> NodeId {
        while cube > TRUE_ID && self.level_of_node(cube) < level {
            cube = self.node(cube).hi;
        }
        cube
    }

    fn exists_rec(&mut self, f: NodeId, cube: NodeId) -> NodeId {
        if f <= TRUE_ID {
            return f;
        }
        let level = self.level_of_node(f);
        let cube = self.skip_cube(cube, level);
        if cube == TRUE_ID {
            return f;
        }
        let key = (OpTag::Exists, f, cube, 0);
        if let Some(r) = self.cache_get(key) {
            return r;
        }
        let n = self.node(f);
        let r = if self.level_of_node(cube) == level {
            let rest = self.node(cube).hi;
            let hi = self.exists_rec(n.hi, rest);
            if hi == TRUE_ID {
                TRUE_ID
            } else {
                let lo = self.exists_rec(n.lo, rest);
                self.or_rec(lo, hi)
            }
        } else {
            let lo = self.exists_rec(n.lo, cube);
            let hi = self.exists_rec(n.hi, cube);
            self.mk(n.var, lo, hi)
        };
        self.cache_put(key, r);
        r
    }

    fn forall_rec(&mut self, f: NodeId, cube: NodeId) -> NodeId {
        if f <= TRUE_ID {
            return f;
        }
        let level = self.level_of_node(f);
        let cube = self.skip_cube(cube, level);
        if cube == TRUE_ID {
            return f;
        }
        let key = (OpTag::Forall, f, cube, 0);
        if let Some(r) = self.cache_get(key) {
            return r;
        }
        let n = self.node(f);
        let r = if self.level_of_node(cube) == level {
            let rest = self.node(cube).hi;
            let hi = self.forall_rec(n.hi, rest);
            if hi == FALSE_ID {
                FALSE_ID
            } else {
                let lo = self.forall_rec(n.lo, rest);
                self.and_rec(lo, hi)
            }
        } else {
            let lo = self.forall_rec(n.lo, cube);
            let hi = self.forall_rec(n.hi, cube);
            self.mk(n.var, lo, hi)
        };
        self.cache_put(key, r);
        r
    }

    /// `∃vars. f ∧ g`, computed in a single recursion without building the
    /// conjunction first.
    pub fn and_abstract(&mut self, vars: &VarSet, f: Func, g: Func) -> Func {
        let (a, b) = (self.chk(f), self.chk(g));
        let cube = self.varset_cube(vars);
        let r = self.and_exists_rec(a, b, cube);
        self.wrap(r)
    }

    fn and_exists_rec(&mut self, f: NodeId, g: NodeId, cube: NodeId) -> NodeId {
        if f == FALSE_ID || g == FALSE_ID {
            return FALSE_ID;
        }
        if f == TRUE_ID && g == TRUE_ID {
            return TRUE_ID;
        }
        if f == TRUE_ID || f == g {
            return self.exists_rec(g, cube);
        }
        if g == TRUE_ID {
            return self.exists_rec(f, cube);
        }
        let level = self.level_of_node(f).min(self.level_of_node(g));
        let cube = self.skip_cube(cube, level);
        if cube == TRUE_ID {
            return self.and_rec(f, g);
        }
        let (f, g) = if f < g { (f, g) } else { (g, f) };
        let key = (OpTag::AndExists, f, g, cube);
        if let Some(r) = self.cache_get(key) {
            return r;
        }
        let var = self.var_at[level as usize];
        let (f0, f1) = self.cofactors(f, level);
        let (g0, g1) = self.cofactors(g, level);
        let r = if self.level_of_node(cube) == level {
            let rest = self.node(cube).hi;
            let hi = self.and_exists_rec(f1, g1, rest);
            if hi == TRUE_ID {
                TRUE_ID
            } else {
                let lo = self.and_exists_rec(f0, g0, rest);
                self.or_rec(lo, hi)
            }
        } else {
            let lo = self.and_exists_rec(f0, g0, cube);
            let hi = self.and_exists_rec(f1, g1, cube);
            self.mk(var, lo, hi)
        };
        self.cache_put(key, r);
        r
    }

    // ---------------------------------------------------------------------
    // Substitution

    /// Simultaneously replaces every variable `v` in the domain of
    /// `substitution` by the function it maps to.
    pub fn compose_vector(&mut self, f: Func, substitution: &BTreeMap<VarId, Func>) -> Func {
        let a = self.chk(f);
        let mut table: FxHashMap<u32, NodeId> = FxHashMap::default();
        for (&v, &g) in substitution {
            table.insert(v.0, self.chk(g));
        }
        let r = self.compose_with(a, &table);
        self.wrap(r)
    }

    /// Variable-to-variable renaming, the special case of
    /// [`compose_vector`](Self::compose_vector) with projection functions.
    pub fn remap_vars(&mut self, f: Func, pairs: &BTreeMap<VarId, VarId>) -> Result<Func, BddError> {
        let a = self.try_chk(f)?;
        let mut targets = FxHashSet::default();
        let mut table: FxHashMap<u32, NodeId> = FxHashMap::default();
        for (&from, &to) in pairs {
            self.check_var(from)?;
            self.check_var(to)?;
            if !targets.insert(to) {
                return Err(BddError::DuplicateTarget(to));
            }
            let proj = self.mk(to.0, FALSE_ID, TRUE_ID);
            table.insert(from.0, proj);
        }
        let r = self.compose_with(a, &table);
        Ok(self.wrap(r))
    }

    fn compose_with(&mut self, f: NodeId, table: &FxHashMap<u32, NodeId>) -> NodeId {
        let deepest = table
            .keys()
            .map(|&v| self.level_of[v as usize])
            .max();
        let Some(deepest) = deepest else {
            return f;
        };
        let mut memo: FxHashMap<NodeId, NodeId> = FxHashMap::default();
        self.compose_rec(f, table, deepest, &mut memo)
    }

    fn compose_rec(
        &mut self,
        f: NodeId,
        table: &FxHashMap<u32, NodeId>,
        deepest: u32,
        memo: &mut FxHashMap<NodeId, NodeId>,
    ) -> NodeId {
        if f <= TRUE_ID || self.level_of_node(f) > deepest {
            return f;
        }
        if let Some(&r) = memo.get(&f) {
            return r;
        }
        let n = self.node(f);
        let lo = self.compose_rec(n.lo, table, deepest, memo);
        let hi = self.compose_rec(n.hi, table, deepest, memo);
        let sel = match table.get(&n.var) {
            Some(&g) => g,
            None => self.mk(n.var, FALSE_ID, TRUE_ID),
        };
        let r = self.ite_rec(sel, hi, lo);
        memo.insert(f, r);
        r
    }

    /// Restriction of `f` to `v = value`.
    pub fn cofactor(&mut self, f: Func, v: VarId, value: bool) -> Func {
        let a = self.chk(f);
        let r = self.cofactor_rec(a, v.0, value);
        self.wrap(r)
    }

    fn cofactor_rec(&mut self, f: NodeId, var: u32, value: bool) -> NodeId {
        let target = self.level_of[var as usize];
        let level = self.level_of_node(f);
        if level > target {
            return f;
        }
        let n = self.node(f);
        if level == target {
            return if value { n.hi } else { n.lo };
        }
        let key = (OpTag::Cofactor, f, var, value as NodeId);
        if let Some(r) = self.cache_get(key) {
            return r;
        }
        let lo = self.cofactor_rec(n.lo, var, value);
        let hi = self.cofactor_rec(n.hi, var, value);
        let r = self.mk(n.var, lo, hi);
        self.cache_put(key, r);
        r
    }

    // ---------------------------------------------------------------------
    // Care-set minimisation

    /// Coudert–Madre restrict: a function that agrees with `f` wherever
    /// `care` holds, usually smaller than `f`.
    pub fn restrict(&mut self, f: Func, care: Func) -> Func {
        let (a, c) = (self.chk(f), self.chk(care));
        let r = if c == FALSE_ID { a } else { self.restrict_rec(a, c) };
        self.wrap(r)
    }

    /// [`restrict`](Self::restrict) that falls back to `f` whenever the
    /// minimised diagram would be larger.
    pub fn restrict_safe(&mut self, f: Func, care: Func) -> Func {
        let r = self.restrict(f, care);
        if self.node_count(r) > self.node_count(f) {
            self.release(r).expect("fresh handle");
            self.retain(f)
        } else {
            r
        }
    }

    fn restrict_rec(&mut self, f: NodeId, c: NodeId) -> NodeId {
        if c == TRUE_ID || f <= TRUE_ID {
            return f;
        }
        if f == c {
            return TRUE_ID;
        }
        let key = (OpTag::Restrict, f, c, 0);
        if let Some(r) = self.cache_get(key) {
            return r;
        }
        let lf = self.level_of_node(f);
        let lc = self.level_of_node(c);
        let r = if lc < lf {
            let cn = self.node(c);
            let merged = self.or_rec(cn.lo, cn.hi);
            self.restrict_rec(f, merged)
        } else {
            let var = self.var_at[lf as usize];
            let (f0, f1) = self.cofactors(f, lf);
            let (c0, c1) = self.cofactors(c, lf);
            if c1 == FALSE_ID {
                self.restrict_rec(f0, c0)
            } else if c0 == FALSE_ID {
                self.restrict_rec(f1, c1)
            } else {
                let lo = self.restrict_rec(f0, c0);
                let hi = self.restrict_rec(f1, c1);
                self.mk(var, lo, hi)
            }
        };
        self.cache_put(key, r);
        r
    }

    // ---------------------------------------------------------------------
    // Inspection

    pub fn evaluate(&self, f: Func, assignment: &BTreeMap<VarId, bool>) -> Result<bool, BddError> {
        let mut id = self.try_chk(f)?;
        while id > TRUE_ID {
            let n = self.node(id);
            let value = assignment
                .get(&VarId(n.var))
                .ok_or(BddError::MissingVariable(VarId(n.var)))?;
            id = if *value { n.hi } else { n.lo };
        }
        Ok(id == TRUE_ID)
    }

    /// Evaluates `f` with variable values supplied by a closure.
    pub fn eval_with(&self, f: Func, mut value: impl FnMut(VarId) -> bool) -> bool {
        let mut id = self.chk(f);
        while id > TRUE_ID {
            let n = self.node(id);
            id = if value(VarId(n.var)) { n.hi } else { n.lo };
        }
        id == TRUE_ID
    }

    /// Variables `f` depends on, sorted by id.
    pub fn support(&self, f: Func) -> Vec<VarId> {
        let mut vars = BTreeSet::new();
        self.for_each_node(self.chk(f), |n| {
            vars.insert(VarId(n.var));
        });
        vars.into_iter().collect()
    }

    /// Number of decision nodes reachable from `f` (terminals excluded).
    pub fn node_count(&self, f: Func) -> usize {
        let mut count = 0;
        self.for_each_node(self.chk(f), |_| count += 1);
        count
    }

    /// Number of decision nodes in the union of the given diagrams.
    pub fn shared_node_count(&self, fs: &[Func]) -> usize {
        let mut seen = FxHashSet::default();
        let mut stack: Vec<NodeId> = fs.iter().map(|&f| self.chk(f)).collect();
        while let Some(id) = stack.pop() {
            if id > TRUE_ID && seen.insert(id) {
                let n = self.node(id);
                stack.push(n.lo);
                stack.push(n.hi);
            }
        }
        seen.len()
    }

    fn for_each_node(&self, root: NodeId, mut visit: impl FnMut(&Node)) {
        let mut seen = FxHashSet::default();
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            if id > TRUE_ID && seen.insert(id) {
                let n = self.node(id);
                visit(&n);
                stack.push(n.lo);
                stack.push(n.hi);
            }
        }
    }

    /// One satisfying assignment of `f` over `vars` (variables not on the
    /// chosen path are set to false), or `None` if `f` is unsatisfiable.
    /// Prefers the low branch, so the result is deterministic.
    pub fn pick_minterm(&self, f: Func, vars: &[VarId]) -> Option<Vec<bool>> {
        let mut id = self.chk(f);
        if id == FALSE_ID {
            return None;
        }
        let mut chosen: FxHashMap<u32, bool> = FxHashMap::default();
        while id > TRUE_ID {
            let n = self.node(id);
            if n.lo != FALSE_ID {
                chosen.insert(n.var, false);
                id = n.lo;
            } else {
                chosen.insert(n.var, true);
                id = n.hi;
            }
        }
        Some(
            vars.iter()
                .map(|v| chosen.get(&v.0).copied().unwrap_or(false))
                .collect(),
        )
    }

    /// Decision variable and `(lo, hi)` children of node `id`, or `None` for
    /// a terminal. The ids are only meaningful while a handle keeps the node
    /// alive and no reordering happens.
    pub fn node_parts(&self, id: NodeId) -> Option<(VarId, NodeId, NodeId)> {
        if id <= TRUE_ID {
            None
        } else {
            let n = self.node(id);
            Some((VarId(n.var), n.lo, n.hi))
        }
    }

    /// Graphviz rendering of `f`, for debugging.
    pub fn to_dot(&self, f: Func) -> String {
        let root = self.chk(f);
        let mut out = String::from("digraph bdd {\n  node [shape=circle];\n");
        out.push_str("  n0 [label=\"0\", shape=box];\n  n1 [label=\"1\", shape=box];\n");
        let mut nodes = Vec::new();
        self.for_each_node(root, |n| nodes.push(*n));
        let mut seen = FxHashSet::default();
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            if id <= TRUE_ID || !seen.insert(id) {
                continue;
            }
            let n = self.node(id);
            let _ = writeln!(out, "  n{id} [label=\"x{}\"];", n.var);
            let _ = writeln!(out, "  n{id} -> n{} [style=dashed];", n.lo);
            let _ = writeln!(out, "  n{id} -> n{};", n.hi);
            stack.push(n.lo);
            stack.push(n.hi);
        }
        out.push_str("}\n");
        out
    }

    /// Store statistics as `key=value` lines.
    pub fn stats_text(&self) -> String {
        let s = &self.stats;
        format!(
            "vars={}\nallocated_nodes={}\npeak_nodes={}\ngc_runs={}\nreclaimed={}\nreorderings={}\ncache_hits={}\ncache_misses={}\n",
            self.num_vars(),
            self.allocated_nodes(),
            s.peak_nodes,
            s.gc_runs,
            s.reclaimed,
            s.reorderings,
            s.cache_hits,
            s.cache_misses
        )
    }

    /// Checks the structural invariants of the node table. Test helper.
    #[doc(hidden)]
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut parents = vec![0u32; self.nodes.len()];
        for (id, n) in self.nodes.iter().enumerate().skip(2) {
            if n.var == FREED_VAR {
                continue;
            }
            if n.lo == n.hi {
                return Err(format!("node {id} is redundant"));
            }
            let level = self.level_of[n.var as usize];
            for child in [n.lo, n.hi] {
                if self.level_of_node(child) <= level {
                    return Err(format!("node {id} violates the order"));
                }
                parents[child as usize] += 1;
            }
            if self.unique[n.var as usize].get(&(n.lo, n.hi)) != Some(&(id as NodeId)) {
                return Err(format!("node {id} missing from unique table"));
            }
        }
        for (id, n) in self.nodes.iter().enumerate().skip(2) {
            if n.var != FREED_VAR && n.rc < parents[id] {
                return Err(format!("node {id} has rc {} < {} parents", n.rc, parents[id]));
            }
        }
        Ok(())
    }
}
