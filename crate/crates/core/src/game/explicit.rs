//! Explicit-state game solving by enumerating the game graph. Exponential;
//! meant as an independent reference for small circuits.

use thiserror::Error;

use crate::aiger::{Aig, InputPartition};
use crate::sim::{CircuitError, Simulator};

/// Largest number of latches plus inputs the explicit solver accepts.
pub const EXPLICIT_MAX_VARS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExplicitError {
    #[error("{0} latches and inputs exceed the explicit-state limit of {EXPLICIT_MAX_VARS}")]
    TooLarge(usize),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("a specification must have exactly one output, found {0}")]
    OutputCount(usize),
}

/// States are numbered by their latch bits: latch `i` is bit `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplicitSolution {
    pub winning: Vec<bool>,
    pub realizable: bool,
}

impl ExplicitSolution {
    pub fn is_winning(&self, state: usize) -> bool {
        self.winning[state]
    }
}

/// Backward induction: a state is lost if some uncontrollable valuation
/// makes every controllable valuation either raise the output now or lead to
/// a lost state.
pub fn solve_explicit(aig: &Aig, partition: &InputPartition) -> Result<ExplicitSolution, ExplicitError> {
    if aig.outputs.len() != 1 {
        return Err(ExplicitError::OutputCount(aig.outputs.len()));
    }
    let nl = aig.latches.len();
    let nu = partition.uncontrollable.len();
    let nc = partition.controllable.len();
    if nl + nu + nc > EXPLICIT_MAX_VARS {
        return Err(ExplicitError::TooLarge(nl + nu + nc));
    }
    // input positions of each partition member
    let pos = |lit| aig.inputs.iter().position(|&i| i == lit).expect("partition covers inputs");
    let upos: Vec<usize> = partition.uncontrollable.iter().map(|&l| pos(l)).collect();
    let cpos: Vec<usize> = partition.controllable.iter().map(|&l| pos(l)).collect();

    let states = 1usize << nl;
    let nu_vals = 1usize << nu;
    let nc_vals = 1usize << nc;
    let mut sim = Simulator::new(aig)?;
    // succ[((s * nu_vals) + u) * nc_vals + c], with bad in the top bit
    const BAD: u32 = 1 << 31;
    let mut table = vec![0u32; states * nu_vals * nc_vals];
    let mut inputs = vec![false; aig.inputs.len()];
    let mut state = vec![false; nl];
    for s in 0..states {
        for (i, b) in state.iter_mut().enumerate() {
            *b = s >> i & 1 == 1;
        }
        for u in 0..nu_vals {
            for (k, &p) in upos.iter().enumerate() {
                inputs[p] = u >> k & 1 == 1;
            }
            for c in 0..nc_vals {
                for (k, &p) in cpos.iter().enumerate() {
                    inputs[p] = c >> k & 1 == 1;
                }
                sim.set_state(&state);
                let out = sim.step(&inputs)?;
                let next = sim
                    .state()
                    .iter()
                    .enumerate()
                    .fold(0u32, |acc, (i, &b)| acc | (b as u32) << i);
                table[(s * nu_vals + u) * nc_vals + c] = next | if out[0] { BAD } else { 0 };
            }
        }
    }

    let mut lost = vec![false; states];
    loop {
        let mut changed = false;
        for s in 0..states {
            if lost[s] {
                continue;
            }
            let forced = (0..nu_vals).any(|u| {
                (0..nc_vals).all(|c| {
                    let e = table[(s * nu_vals + u) * nc_vals + c];
                    e & BAD != 0 || lost[(e & !BAD) as usize]
                })
            });
            if forced {
                lost[s] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let winning: Vec<bool> = lost.iter().map(|&l| !l).collect();
    Ok(ExplicitSolution {
        realizable: winning[0],
        winning,
    })
}
