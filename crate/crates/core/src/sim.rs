//! Cycle-accurate gate-level simulation of an [`Aig`].

use thiserror::Error;

use crate::aiger::{is_negated, var_of, Aig, Lit};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("variable {var} is used but never defined")]
    Undefined { var: u32 },
    #[error("combinational cycle through AND gate variable {var}")]
    Cycle { var: u32 },
    #[error("step {step}: expected {expected} input values, got {got}")]
    IncompleteValuation {
        step: usize,
        expected: usize,
        got: usize,
    },
}

#[derive(Copy, Clone, PartialEq, Eq)]
enum Def {
    None,
    Input,
    Latch,
    And(usize),
}

/// Indices into `aig.ands` such that every gate comes after the gates it
/// reads. Also rejects references to undefined variables.
pub fn and_order(aig: &Aig) -> Result<Vec<usize>, CircuitError> {
    let mut def = vec![Def::None; aig.max_var as usize + 1];
    for &i in &aig.inputs {
        def[var_of(i) as usize] = Def::Input;
    }
    for l in &aig.latches {
        def[var_of(l.lit) as usize] = Def::Latch;
    }
    for (k, a) in aig.ands.iter().enumerate() {
        def[var_of(a.lhs) as usize] = Def::And(k);
    }
    let check = |lit: Lit| -> Result<(), CircuitError> {
        let v = var_of(lit);
        if v != 0 && def[v as usize] == Def::None {
            Err(CircuitError::Undefined { var: v })
        } else {
            Ok(())
        }
    };
    for l in &aig.latches {
        check(l.next)?;
    }
    for &o in &aig.outputs {
        check(o)?;
    }
    for a in &aig.ands {
        check(a.rhs0)?;
        check(a.rhs1)?;
    }

    // iterative DFS; 0 = unvisited, 1 = on stack, 2 = done
    let mut mark = vec![0u8; aig.ands.len()];
    let mut order = Vec::with_capacity(aig.ands.len());
    for root in 0..aig.ands.len() {
        if mark[root] != 0 {
            continue;
        }
        let mut stack = vec![(root, 0u8)];
        mark[root] = 1;
        while let Some(&mut (k, ref mut child)) = stack.last_mut() {
            let gate = aig.ands[k];
            if *child < 2 {
                let lit = if *child == 0 { gate.rhs0 } else { gate.rhs1 };
                *child += 1;
                if let Def::And(j) = def[var_of(lit) as usize] {
                    match mark[j] {
                        0 => {
                            mark[j] = 1;
                            stack.push((j, 0));
                        }
                        1 => {
                            return Err(CircuitError::Cycle {
                                var: var_of(aig.ands[j].lhs),
                            })
                        }
                        _ => {}
                    }
                }
            } else {
                mark[k] = 2;
                order.push(k);
                stack.pop();
            }
        }
    }
    Ok(order)
}

/// Steps a circuit from the all-zero latch state.
pub struct Simulator<'a> {
    aig: &'a Aig,
    order: Vec<usize>,
    values: Vec<bool>,
    state: Vec<bool>,
}

impl<'a> Simulator<'a> {
    pub fn new(aig: &'a Aig) -> Result<Self, CircuitError> {
        Ok(Simulator {
            order: and_order(aig)?,
            values: vec![false; aig.max_var as usize + 1],
            state: vec![false; aig.latches.len()],
            aig,
        })
    }

    pub fn state(&self) -> &[bool] {
        &self.state
    }

    pub fn set_state(&mut self, state: &[bool]) {
        self.state.copy_from_slice(state);
    }

    fn lit(&self, lit: Lit) -> bool {
        self.values[var_of(lit) as usize] ^ is_negated(lit)
    }

    /// Evaluates all gates for the current state and `inputs`, returning the
    /// value of every literal's variable (index = variable).
    pub fn evaluate(&mut self, inputs: &[bool]) -> Result<&[bool], CircuitError> {
        if inputs.len() != self.aig.inputs.len() {
            return Err(CircuitError::IncompleteValuation {
                step: 0,
                expected: self.aig.inputs.len(),
                got: inputs.len(),
            });
        }
        self.values[0] = false;
        for (&lit, &v) in self.aig.inputs.iter().zip(inputs) {
            self.values[var_of(lit) as usize] = v;
        }
        for (l, &v) in self.aig.latches.iter().zip(&self.state) {
            self.values[var_of(l.lit) as usize] = v;
        }
        for &k in &self.order {
            let g = self.aig.ands[k];
            self.values[var_of(g.lhs) as usize] = self.lit(g.rhs0) && self.lit(g.rhs1);
        }
        Ok(&self.values)
    }

    /// Value of `lit` after the last [`evaluate`](Self::evaluate).
    pub fn value(&self, lit: Lit) -> bool {
        self.lit(lit)
    }

    /// One clock cycle: returns the outputs under the current state, then
    /// advances the latches.
    pub fn step(&mut self, inputs: &[bool]) -> Result<Vec<bool>, CircuitError> {
        self.evaluate(inputs)?;
        let outputs = self.aig.outputs.iter().map(|&o| self.lit(o)).collect();
        let next: Vec<bool> = self.aig.latches.iter().map(|l| self.lit(l.next)).collect();
        self.state = next;
        Ok(outputs)
    }
}

/// Latch and output streams of a simulation run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimTrace {
    /// `n + 1` latch valuations, starting with the all-zero initial state.
    pub states: Vec<Vec<bool>>,
    /// `n` output valuations, one per step.
    pub outputs: Vec<Vec<bool>>,
}

pub fn simulate(aig: &Aig, inputs: &[Vec<bool>]) -> Result<SimTrace, CircuitError> {
    let mut sim = Simulator::new(aig)?;
    let mut trace = SimTrace {
        states: vec![sim.state().to_vec()],
        outputs: Vec::with_capacity(inputs.len()),
    };
    for (step, valuation) in inputs.iter().enumerate() {
        let outputs = sim.step(valuation).map_err(|e| match e {
            CircuitError::IncompleteValuation { expected, got, .. } => {
                CircuitError::IncompleteValuation {
                    step,
                    expected,
                    got,
                }
            }
            other => other,
        })?;
        trace.outputs.push(outputs);
        trace.states.push(sim.state().to_vec());
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aiger::parse_ascii;

    #[test]
    fn empty_input_list_gives_initial_state() {
        let aig = parse_ascii("aag 2 1 1 1 0\n2\n4 2\n4\n").unwrap();
        let t = simulate(&aig, &[]).unwrap();
        assert_eq!(t.states, vec![vec![false]]);
        assert!(t.outputs.is_empty());
    }

    #[test]
    fn identity_latch_follows_input() {
        let aig = parse_ascii("aag 2 1 1 1 0\n2\n4 2\n4\n").unwrap();
        let t = simulate(&aig, &[vec![true], vec![false]]).unwrap();
        assert_eq!(t.states, vec![vec![false], vec![true], vec![false]]);
        assert_eq!(t.outputs, vec![vec![false], vec![true]]);
    }

    #[test]
    fn gates_out_of_file_order() {
        // 8 = 6 ∧ 2 is listed before 6 = 2 ∧ 4
        let aig = parse_ascii("aag 4 2 0 1 2\n2\n4\n8\n8 6 2\n6 2 4\n").unwrap();
        assert_eq!(and_order(&aig).unwrap(), vec![1, 0]);
        let t = simulate(&aig, &[vec![true, true], vec![true, false]]).unwrap();
        assert_eq!(t.outputs, vec![vec![true], vec![false]]);
    }

    #[test]
    fn errors() {
        let aig = parse_ascii("aag 3 1 0 1 0\n2\n6\n").unwrap();
        assert_eq!(and_order(&aig), Err(CircuitError::Undefined { var: 3 }));
        let cyc = parse_ascii("aag 3 1 0 1 2\n2\n4\n4 6 2\n6 4 2\n").unwrap();
        assert!(matches!(and_order(&cyc), Err(CircuitError::Cycle { .. })));
        let ok = parse_ascii("aag 1 1 0 1 0\n2\n2\n").unwrap();
        assert_eq!(
            simulate(&ok, &[vec![true], vec![]]),
            Err(CircuitError::IncompleteValuation {
                step: 1,
                expected: 1,
                got: 0
            })
        );
    }
}
