//! Incremental construction of circuits with constant folding and
//! structural hashing of AND gates.

use rustc_hash::FxHashMap;

use super::{negate, var_of, Aig, AndGate, Latch, Lit, Symbol, SymbolKind};

#[derive(Default)]
pub struct AigBuilder {
    aig: Aig,
    strash: FxHashMap<(Lit, Lit), Lit>,
}

impl AigBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Continues building on top of `aig`; new variables are numbered after
    /// its maximum variable.
    pub fn from_aig(aig: Aig) -> Self {
        let strash = aig
            .ands
            .iter()
            .map(|a| ((a.rhs0.min(a.rhs1), a.rhs0.max(a.rhs1)), a.lhs))
            .collect();
        AigBuilder { aig, strash }
    }

    fn fresh(&mut self) -> Lit {
        self.aig.max_var += 1;
        2 * self.aig.max_var
    }

    fn name(&mut self, kind: SymbolKind, index: usize, name: Option<&str>) {
        if let Some(name) = name {
            self.aig.symbols.push(Symbol {
                kind,
                index,
                name: name.to_string(),
            });
        }
    }

    pub fn input(&mut self, name: Option<&str>) -> Lit {
        let lit = self.fresh();
        self.aig.inputs.push(lit);
        self.name(SymbolKind::Input, self.aig.inputs.len() - 1, name);
        lit
    }

    /// A latch whose next-state function is set later with
    /// [`set_next`](Self::set_next); it defaults to constant 0.
    pub fn latch(&mut self, name: Option<&str>) -> Lit {
        let lit = self.fresh();
        self.aig.latches.push(Latch { lit, next: 0 });
        self.name(SymbolKind::Latch, self.aig.latches.len() - 1, name);
        lit
    }

    pub fn set_next(&mut self, latch: Lit, next: Lit) {
        let l = self
            .aig
            .latches
            .iter_mut()
            .find(|l| l.lit == latch)
            .expect("literal is a latch of this circuit");
        l.next = next;
    }

    pub fn output(&mut self, lit: Lit, name: Option<&str>) {
        self.aig.outputs.push(lit);
        self.name(SymbolKind::Output, self.aig.outputs.len() - 1, name);
    }

    pub fn and(&mut self, a: Lit, b: Lit) -> Lit {
        let (a, b) = (a.min(b), a.max(b));
        if a == 0 || a == negate(b) {
            return 0;
        }
        if a == 1 || a == b {
            return b;
        }
        if let Some(&l) = self.strash.get(&(a, b)) {
            return l;
        }
        let lhs = self.fresh();
        self.aig.ands.push(AndGate { lhs, rhs0: b, rhs1: a });
        self.strash.insert((a, b), lhs);
        lhs
    }

    pub fn or(&mut self, a: Lit, b: Lit) -> Lit {
        negate(self.and(negate(a), negate(b)))
    }

    pub fn xor(&mut self, a: Lit, b: Lit) -> Lit {
        let both = self.and(a, b);
        let neither = self.and(negate(a), negate(b));
        self.and(negate(both), negate(neither))
    }

    /// `s ? t : e`.
    pub fn mux(&mut self, s: Lit, t: Lit, e: Lit) -> Lit {
        if t == e {
            return t;
        }
        let hi = self.and(s, t);
        let lo = self.and(negate(s), e);
        self.or(hi, lo)
    }

    pub fn and_all(&mut self, lits: impl IntoIterator<Item = Lit>) -> Lit {
        lits.into_iter().fold(1, |acc, l| self.and(acc, l))
    }

    pub fn or_all(&mut self, lits: impl IntoIterator<Item = Lit>) -> Lit {
        lits.into_iter().fold(0, |acc, l| self.or(acc, l))
    }

    /// Whether the little-endian word `bits` equals `value`.
    pub fn eq_const(&mut self, bits: &[Lit], value: u64) -> Lit {
        let lits: Vec<Lit> = bits
            .iter()
            .enumerate()
            .map(|(i, &b)| if value >> i & 1 == 1 { b } else { negate(b) })
            .collect();
        self.and_all(lits)
    }

    /// `bits + 1` (wrapping), little-endian.
    pub fn increment(&mut self, bits: &[Lit]) -> Vec<Lit> {
        let mut carry = 1;
        let mut out = Vec::with_capacity(bits.len());
        for &b in bits {
            out.push(self.xor(b, carry));
            carry = self.and(b, carry);
        }
        out
    }

    /// Number of variables allocated so far.
    pub fn max_var(&self) -> u32 {
        self.aig.max_var
    }

    pub fn num_ands(&self) -> usize {
        self.aig.ands.len()
    }

    pub fn finish(self) -> Aig {
        debug_assert!(self.aig.latches.iter().all(|l| var_of(l.next) <= self.aig.max_var));
        self.aig
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Simulator;

    #[test]
    fn folding_and_hashing() {
        let mut b = AigBuilder::new();
        let x = b.input(Some("x"));
        let y = b.input(None);
        assert_eq!(b.and(x, 1), x);
        assert_eq!(b.and(x, 0), 0);
        assert_eq!(b.and(x, negate(x)), 0);
        let g = b.and(x, y);
        assert_eq!(b.and(y, x), g);
        assert_eq!(b.num_ands(), 1);
    }

    #[test]
    fn incrementer_counts() {
        let mut b = AigBuilder::new();
        let bits: Vec<Lit> = (0..3).map(|_| b.latch(None)).collect();
        let next = b.increment(&bits);
        for (&l, &n) in bits.iter().zip(&next) {
            b.set_next(l, n);
        }
        let top = b.eq_const(&bits, 7);
        b.output(top, None);
        let aig = b.finish();
        let mut sim = Simulator::new(&aig).unwrap();
        for step in 0..10u32 {
            let value: u32 = sim.state().iter().enumerate().map(|(i, &v)| (v as u32) << i).sum();
            assert_eq!(value, step % 8);
            let out = sim.step(&[]).unwrap();
            assert_eq!(out[0], step % 8 == 7);
        }
    }
}
