//! Dynamic variable reordering by sifting.
//!
//! Reordering swaps adjacent levels in place: a node keeps its id (and thus
//! every handle to it stays valid and denotes the same function) while its
//! variable and children are rewritten.

use super::{Node, NodeId, NodeStore, FREED_VAR, TRUE_ID};

/// Outcome of one sifting pass.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReorderStats {
    pub nodes_before: usize,
    pub nodes_after: usize,
    pub swaps: usize,
    pub vars_sifted: usize,
    pub reclaimed: usize,
}

impl NodeStore {
    /// Swaps the variables at `level` and `level + 1`.
    pub(super) fn swap_levels(&mut self, level: usize) {
        let x = self.var_at[level];
        let y = self.var_at[level + 1];
        let x_nodes: Vec<NodeId> = self.unique[x as usize].values().copied().collect();
        for id in x_nodes {
            let Node { var, lo, hi, .. } = self.nodes[id as usize];
            if var != x {
                continue;
            }
            let lo_is_y = lo > TRUE_ID && self.nodes[lo as usize].var == y;
            let hi_is_y = hi > TRUE_ID && self.nodes[hi as usize].var == y;
            if !lo_is_y && !hi_is_y {
                continue;
            }
            let (f00, f01) = if lo_is_y {
                let n = self.nodes[lo as usize];
                (n.lo, n.hi)
            } else {
                (lo, lo)
            };
            let (f10, f11) = if hi_is_y {
                let n = self.nodes[hi as usize];
                (n.lo, n.hi)
            } else {
                (hi, hi)
            };
            let new_lo = self.mk(x, f00, f10);
            let new_hi = self.mk(x, f01, f11);
            self.inc(new_lo);
            self.inc(new_hi);
            self.unique[x as usize].remove(&(lo, hi));
            {
                let node = &mut self.nodes[id as usize];
                node.var = y;
                node.lo = new_lo;
                node.hi = new_hi;
            }
            self.unique[y as usize].insert((new_lo, new_hi), id);
            self.dec_reclaim(lo);
            self.dec_reclaim(hi);
        }
        self.var_at.swap(level, level + 1);
        self.level_of[x as usize] = (level + 1) as u32;
        self.level_of[y as usize] = level as u32;
    }

    /// Runs one sifting pass over all variables and returns its statistics.
    /// Handles stay valid; only the order and the node layout change.
    pub fn reorder_sift(&mut self) -> ReorderStats {
        let reclaimed_before = self.stats.reclaimed;
        self.gc();
        let mut stats = ReorderStats {
            nodes_before: self.allocated_nodes(),
            ..Default::default()
        };
        let n = self.num_vars();
        if n >= 2 {
            let mut vars: Vec<u32> = (0..n as u32).collect();
            vars.sort_by_key(|&v| (std::cmp::Reverse(self.unique[v as usize].len()), v));
            for v in vars {
                if self.unique[v as usize].is_empty() {
                    continue;
                }
                stats.swaps += self.sift_var(v);
                stats.vars_sifted += 1;
            }
        }
        self.cache.clear();
        stats.nodes_after = self.allocated_nodes();
        stats.reclaimed = self.stats.reclaimed - reclaimed_before;
        self.stats.reorderings += 1;
        debug_assert!(self.nodes[2..].iter().all(|n| n.var == FREED_VAR || n.rc > 0));
        stats
    }

    fn sift_var(&mut self, v: u32) -> usize {
        let n = self.num_vars();
        let limit = self.config.max_growth;
        let mut swaps = 0;
        let mut pos = self.level_of[v as usize] as usize;
        let mut best_size = self.allocated_nodes();
        let mut best_pos = pos;

        let up_first = pos < n / 2;
        for phase in 0..2 {
            let going_up = up_first == (phase == 0);
            loop {
                if going_up {
                    if pos == 0 {
                        break;
                    }
                    self.swap_levels(pos - 1);
                    pos -= 1;
                } else {
                    if pos + 1 >= n {
                        break;
                    }
                    self.swap_levels(pos);
                    pos += 1;
                }
                swaps += 1;
                let size = self.allocated_nodes();
                if size < best_size {
                    best_size = size;
                    best_pos = pos;
                } else if size as f64 > limit * best_size as f64 {
                    break;
                }
            }
        }
        while pos > best_pos {
            self.swap_levels(pos - 1);
            pos -= 1;
            swaps += 1;
        }
        while pos < best_pos {
            self.swap_levels(pos);
            pos += 1;
            swaps += 1;
        }
        swaps
    }

    /// Moves variables into the given top-to-bottom order. Test helper and
    /// building block for callers that want a fixed layout.
    pub fn set_order(&mut self, order: &[super::VarId]) {
        assert_eq!(order.len(), self.num_vars(), "order must list every variable");
        self.gc();
        for (target, v) in order.iter().enumerate() {
            let mut pos = self.level_of[v.index()] as usize;
            while pos > target {
                self.swap_levels(pos - 1);
                pos -= 1;
            }
        }
        self.cache.clear();
    }
}
