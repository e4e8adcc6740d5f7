//! Small games shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safesynth::aiger::Aig;
use safesynth::bench::{gen_cnt, gen_counting_safety, gen_random, toy_arbiter, CountingMode, RandomGameParams};

pub const MODES: [CountingMode; 3] = [CountingMode::Counting, CountingMode::Bitwise, CountingMode::FullSet];

pub fn total_vars(aig: &Aig) -> usize {
    aig.inputs.len() + aig.latches.len()
}

/// `count` games with at most `max_vars` inputs plus latches: counters,
/// counting constructions over the toy arbiter and over random cores, and
/// random games. Deterministic in `seed`.
pub fn small_games(count: usize, max_vars: usize, seed: u64) -> Vec<(String, Aig)> {
    let mut out: Vec<(String, Aig)> = Vec::new();
    for n in 1..=5u32 {
        for real in [true, false] {
            let aig = gen_cnt(n, real).unwrap();
            if total_vars(&aig) <= max_vars {
                out.push((format!("cnt{n}{}", if real { 'y' } else { 'n' }), aig));
            }
        }
    }
    for mode in MODES {
        for k in 1..=4 {
            let (core, a, g) = toy_arbiter();
            let aig = gen_counting_safety(&core, &[a], &[g], k, mode).unwrap();
            if total_vars(&aig) <= max_vars {
                out.push((format!("arb{}{k}", mode.letter()), aig));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counting = 0;
    while counting < 30 && out.len() < count {
        let core = gen_random(
            RandomGameParams {
                latches: rng.gen_range(1..=3),
                uncontrollable: rng.gen_range(1..=2),
                controllable: 1,
                ands: rng.gen_range(4..=10),
            },
            rng.gen(),
        );
        let props = |rng: &mut ChaCha8Rng| -> Vec<u32> {
            (0..rng.gen_range(0..=1))
                .map(|_| core.latches[rng.gen_range(0..core.latches.len())].lit ^ rng.gen_range(0..2))
                .collect()
        };
        let assumptions = props(&mut rng);
        let mut guarantees = props(&mut rng);
        if guarantees.is_empty() {
            guarantees.push(core.latches[0].lit);
        }
        let mode = MODES[rng.gen_range(0..3)];
        let k = rng.gen_range(1..=2);
        let aig = gen_counting_safety(&core, &assumptions, &guarantees, k, mode).unwrap();
        if total_vars(&aig) <= max_vars {
            out.push((format!("count{counting:02}"), aig));
            counting += 1;
        }
    }
    let mut i = 0;
    while out.len() < count {
        let params = RandomGameParams {
            latches: rng.gen_range(1..=6),
            uncontrollable: rng.gen_range(1..=3),
            controllable: rng.gen_range(1..=3),
            ands: rng.gen_range(3..=24),
        };
        let aig = gen_random(params, rng.gen());
        if total_vars(&aig) <= max_vars {
            out.push((format!("rand{i:03}"), aig));
            i += 1;
        }
    }
    out
}

/// Latch valuation of explicit state number `s` (latch `i` is bit `i`).
pub fn state_bits(s: usize, latches: usize) -> Vec<bool> {
    (0..latches).map(|i| s >> i & 1 == 1).collect()
}
