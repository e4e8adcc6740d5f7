//! Benchmark generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::aiger::{negate, var_of, Aig, AigBuilder, Lit, CONTROLLABLE_PREFIX};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("counter width must be between 1 and 30 bits, got {0}")]
    CounterWidth(u32),
    #[error("at least one assumption or guarantee is required")]
    NoProperties,
    #[error("bound must be at least 1")]
    Bound,
    #[error("literal {0} does not belong to the core circuit")]
    ForeignLiteral(Lit),
}

/// A generated specification with its known realizability, if any.
#[derive(Clone, Debug)]
pub struct Benchmark {
    pub id: String,
    pub aig: Aig,
    pub expected: Option<bool>,
}

/// An `n`-bit counter that the environment increments through the input
/// `inc`; the output is raised when the counter is all ones. The controller
/// may clear the counter with `controllable_reset`, but the reset only takes
/// effect at one value: one below all-ones in the realizable variant, so the
/// controller can preempt the overflow, and all-ones itself in the
/// unrealizable one, which is too late.
pub fn gen_cnt(n: u32, realizable: bool) -> Result<Aig, GenError> {
    if !(1..=30).contains(&n) {
        return Err(GenError::CounterWidth(n));
    }
    let mut b = AigBuilder::new();
    let inc = b.input(Some("inc"));
    let reset = b.input(Some(&format!("{CONTROLLABLE_PREFIX}reset")));
    let bits: Vec<Lit> = (0..n).map(|i| b.latch(Some(&format!("c{i}")))).collect();
    let full_value = (1u64 << n) - 1;
    let full = b.eq_const(&bits, full_value);
    let window = if realizable {
        b.eq_const(&bits, full_value - 1)
    } else {
        full
    };
    let clear = b.and(reset, window);
    let plus = b.increment(&bits);
    for (&bit, &p) in bits.iter().zip(&plus) {
        let counted = b.mux(inc, p, bit);
        let next = b.and(negate(clear), counted);
        b.set_next(bit, next);
    }
    b.output(full, Some("overflow"));
    Ok(b.finish())
}

pub fn cnt_benchmark(n: u32, realizable: bool) -> Result<Benchmark, GenError> {
    Ok(Benchmark {
        id: format!("cnt{n}{}", if realizable { 'y' } else { 'n' }),
        aig: gen_cnt(n, realizable)?,
        expected: Some(realizable),
    })
}

/// How the liveness properties are turned into counters.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum CountingMode {
    /// Modular counters over the assumptions and guarantees.
    Counting,
    /// One seen-bit per property; `r` is reset whenever a new guarantee is
    /// seen.
    Bitwise,
    /// One seen-bit per property; `r` is reset only once all guarantees have
    /// been seen.
    FullSet,
}

impl CountingMode {
    pub fn letter(self) -> char {
        match self {
            CountingMode::Counting => 'c',
            CountingMode::Bitwise => 'b',
            CountingMode::FullSet => 'f',
        }
    }
}

fn width_for(values: u64) -> usize {
    (64 - (values.max(2) - 1).leading_zeros()) as usize
}

/// Extends `core` with a safety monitor for "if every assumption holds
/// infinitely often, so does every guarantee". Assumptions and guarantees are
/// literals of `core` indicating the accepting states. A ratio counter `r`
/// advances once per round of assumptions and is cleared on guarantee
/// progress; the new single output is raised when `r` exceeds `k`. The
/// core's own outputs are dropped.
pub fn gen_counting_safety(
    core: &Aig,
    assumptions: &[Lit],
    guarantees: &[Lit],
    k: u32,
    mode: CountingMode,
) -> Result<Aig, GenError> {
    if assumptions.is_empty() && guarantees.is_empty() {
        return Err(GenError::NoProperties);
    }
    if k == 0 {
        return Err(GenError::Bound);
    }
    if let Some(&l) = assumptions
        .iter()
        .chain(guarantees)
        .find(|&&l| var_of(l) > core.max_var)
    {
        return Err(GenError::ForeignLiteral(l));
    }
    let mut base = core.clone();
    base.outputs.clear();
    base.symbols.retain(|s| s.kind != crate::aiger::SymbolKind::Output);
    base.comments = None;
    let mut b = AigBuilder::from_aig(base);

    let (round, progress) = match mode {
        CountingMode::Counting => {
            let (i_zero, _) = modular_counter(&mut b, "i", assumptions);
            let (_, j_inc) = modular_counter(&mut b, "j", guarantees);
            (i_zero, j_inc)
        }
        CountingMode::Bitwise | CountingMode::FullSet => {
            let (all_a, _) = seen_bits(&mut b, "a", assumptions);
            let (all_g, fresh_g) = seen_bits(&mut b, "g", guarantees);
            let progress = if guarantees.is_empty() {
                1
            } else if mode == CountingMode::Bitwise {
                fresh_g
            } else {
                all_g
            };
            (all_a, progress)
        }
    };

    // r ∈ {0, …, k+1}, saturating; the output is r = k+1
    let limit = k as u64 + 1;
    let r: Vec<Lit> = (0..width_for(limit + 1))
        .map(|i| b.latch(Some(&format!("r{i}"))))
        .collect();
    let at_limit = b.eq_const(&r, limit);
    let plus = b.increment(&r);
    let advance = b.and(round, negate(at_limit));
    for (&bit, &p) in r.iter().zip(&plus) {
        let counted = b.mux(advance, p, bit);
        let next = b.and(negate(progress), counted);
        b.set_next(bit, next);
    }
    b.output(at_limit, Some("ratio_exceeded"));
    Ok(b.finish())
}

/// Counter over `{0, …, m}` waiting for property `i` at value `i`; value 0
/// always advances. Returns (counter is 0, counter advances).
fn modular_counter(b: &mut AigBuilder, name: &str, props: &[Lit]) -> (Lit, Lit) {
    let m = props.len() as u64;
    let bits: Vec<Lit> = (0..width_for(m + 1))
        .map(|i| b.latch(Some(&format!("{name}{i}"))))
        .collect();
    let zero = b.eq_const(&bits, 0);
    let mut advance = zero;
    for (idx, &p) in props.iter().enumerate() {
        let here = b.eq_const(&bits, idx as u64 + 1);
        let seen = b.and(here, p);
        advance = b.or(advance, seen);
    }
    let at_top = b.eq_const(&bits, m);
    let plus = b.increment(&bits);
    for (&bit, &p) in bits.iter().zip(&plus) {
        let stepped = b.and(negate(at_top), p);
        let next = b.mux(advance, stepped, bit);
        b.set_next(bit, next);
    }
    (zero, advance)
}

/// One bit per property, cleared once every property has been seen.
/// Returns (all seen this round, some property seen for the first time).
fn seen_bits(b: &mut AigBuilder, name: &str, props: &[Lit]) -> (Lit, Lit) {
    let bits: Vec<Lit> = (0..props.len())
        .map(|i| b.latch(Some(&format!("{name}{i}"))))
        .collect();
    let now: Vec<Lit> = bits.iter().zip(props).map(|(&s, &p)| b.or(s, p)).collect();
    let all = b.and_all(now.iter().copied());
    let fresh_parts: Vec<Lit> = bits.iter().zip(props).map(|(&s, &p)| b.and(negate(s), p)).collect();
    let fresh = b.or_all(fresh_parts);
    for (&bit, &n) in bits.iter().zip(&now) {
        let next = b.and(negate(all), n);
        b.set_next(bit, next);
    }
    (all, fresh)
}

/// Shape of a random game.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct RandomGameParams {
    pub latches: usize,
    pub uncontrollable: usize,
    pub controllable: usize,
    pub ands: usize,
}

/// A random single-output specification. Gates read earlier signals with
/// random polarities; latches and the output read random signals. Equal
/// seeds give equal circuits.
pub fn gen_random(params: RandomGameParams, seed: u64) -> Aig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = AigBuilder::new();
    let mut signals: Vec<Lit> = Vec::new();
    for i in 0..params.uncontrollable {
        signals.push(b.input(Some(&format!("u{i}"))));
    }
    for i in 0..params.controllable {
        signals.push(b.input(Some(&format!("{CONTROLLABLE_PREFIX}c{i}"))));
    }
    let latches: Vec<Lit> = (0..params.latches).map(|_| b.latch(None)).collect();
    signals.extend(&latches);
    let pick = |rng: &mut ChaCha8Rng, signals: &[Lit]| -> Lit {
        if signals.is_empty() {
            return rng.gen_range(0..2);
        }
        signals[rng.gen_range(0..signals.len())] ^ rng.gen_range(0..2)
    };
    for _ in 0..params.ands {
        let x = pick(&mut rng, &signals);
        let y = pick(&mut rng, &signals);
        let g = b.and(x, y);
        if g > 1 && !signals.contains(&(g & !1)) {
            signals.push(g & !1);
        }
    }
    for &l in &latches {
        let next = pick(&mut rng, &signals);
        b.set_next(l, next);
    }
    // prefer a gate or latch for the output so the game is not trivial
    let stateful: Vec<Lit> = signals
        .iter()
        .copied()
        .filter(|&s| var_of(s) > (params.uncontrollable + params.controllable) as u32)
        .collect();
    let out = if stateful.is_empty() {
        pick(&mut rng, &signals)
    } else {
        pick(&mut rng, &stateful)
    };
    b.output(out, None);
    b.finish()
}

/// A small suite: counters of every width up to `max_cnt_bits` in both
/// variants, the counting translations of a toy arbiter and random games
/// labelled by explicit-state solving.
pub fn default_corpus(max_cnt_bits: u32, random_games: usize, seed: u64) -> Vec<Benchmark> {
    let mut out = Vec::new();
    for n in 1..=max_cnt_bits {
        for realizable in [true, false] {
            out.push(cnt_benchmark(n, realizable).expect("width in range"));
        }
    }
    for mode in [CountingMode::Counting, CountingMode::Bitwise, CountingMode::FullSet] {
        for k in [1, 3] {
            let (core, a, g) = toy_arbiter();
            let aig = gen_counting_safety(&core, &[a], &[g], k, mode).expect("valid toy");
            let expected = explicit_label(&aig);
            out.push(Benchmark {
                id: format!("arb{}{k}", mode.letter()),
                aig,
                expected,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..random_games {
        let params = RandomGameParams {
            latches: rng.gen_range(1..=5),
            uncontrollable: rng.gen_range(1..=3),
            controllable: rng.gen_range(1..=2),
            ands: rng.gen_range(4..=20),
        };
        let aig = gen_random(params, rng.gen());
        let expected = explicit_label(&aig);
        out.push(Benchmark {
            id: format!("rand{i:03}"),
            aig,
            expected,
        });
    }
    out
}

fn explicit_label(aig: &Aig) -> Option<bool> {
    crate::game::solve_explicit(aig, &aig.partition_inputs())
        .ok()
        .map(|e| e.realizable)
}

/// A one-client arbiter core: the environment raises a request `req`, the
/// controller answers with a grant latched into `gnt`. Returns the core, the
/// assumption literal (a request is pending) and the guarantee literal (a
/// grant was given).
pub fn toy_arbiter() -> (Aig, Lit, Lit) {
    let mut b = AigBuilder::new();
    let req = b.input(Some("req"));
    let grant = b.input(Some(&format!("{CONTROLLABLE_PREFIX}grant")));
    let pending = b.latch(Some("pending"));
    let gnt = b.latch(Some("gnt"));
    // a grant only counts while a request is pending
    let served = b.and(grant, pending);
    b.set_next(gnt, served);
    let keep = b.and(pending, negate(grant));
    let next = b.or(req, keep);
    b.set_next(pending, next);
    b.output(0, None);
    (b.finish(), pending, gnt)
}
