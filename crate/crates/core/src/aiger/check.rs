//! Syntactic conformance of a solution file to its specification.

use std::fmt;

use rustc_hash::{FxHashMap, FxHashSet};

use super::{var_of, Aig, Lit};

/// The rule a solution breaks.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Clause {
    /// `I' = I - c`.
    HeaderInputs,
    /// `M' = I' + L' + A'`.
    HeaderMaxVar,
    /// Uncontrollable inputs unchanged and in order, controllable ones removed.
    Inputs,
    /// Original latches kept as a prefix.
    Latches,
    /// Outputs unchanged.
    Outputs,
    /// Original AND gates kept as a prefix.
    Ands,
    /// A controllable input is not redefined.
    RedefineMissing,
    /// A controllable input is redefined more than once.
    RedefineDuplicate,
    /// A new latch or gate reads an original AND gate.
    OriginalAndReference,
    /// Symbol table changed.
    SymbolTable,
}

impl Clause {
    pub fn name(self) -> &'static str {
        match self {
            Clause::HeaderInputs => "header-inputs",
            Clause::HeaderMaxVar => "header-maxvar",
            Clause::Inputs => "inputs",
            Clause::Latches => "latches",
            Clause::Outputs => "outputs",
            Clause::Ands => "ands",
            Clause::RedefineMissing => "redefine-missing",
            Clause::RedefineDuplicate => "redefine-duplicate",
            Clause::OriginalAndReference => "original-and-reference",
            Clause::SymbolTable => "symbol-table",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub clause: Clause,
    pub detail: String,
}

/// Every violated rule, in a fixed clause order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CheckReport {
    pub violations: Vec<Violation>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, clause: Clause) -> bool {
        self.violations.iter().any(|v| v.clause == clause)
    }

    fn fail(&mut self, clause: Clause, detail: impl Into<String>) {
        self.violations.push(Violation {
            clause,
            detail: detail.into(),
        });
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return writeln!(f, "OK");
        }
        for v in &self.violations {
            writeln!(f, "FAIL {}: {}", v.clause.name(), v.detail)?;
        }
        Ok(())
    }
}

fn first_difference<T: PartialEq>(a: &[T], b: &[T]) -> Option<usize> {
    a.iter().zip(b).position(|(x, y)| x != y).or_else(|| {
        if a.len() == b.len() {
            None
        } else {
            Some(a.len().min(b.len()))
        }
    })
}

/// Checks that `solution` is obtained from `spec` by the permitted edits:
/// controllable inputs are removed and each redefined exactly once by a new
/// latch or AND gate, everything else is kept, and new logic reads only
/// uncontrollable inputs, latches and new gates. Comments are ignored.
pub fn check_solution_syntax(spec: &Aig, solution: &Aig) -> CheckReport {
    let mut report = CheckReport::default();
    let partition = spec.partition_inputs();
    let controllable: FxHashSet<u32> = partition.controllable.iter().map(|&l| var_of(l)).collect();
    let c = partition.controllable.len();

    let i2 = solution.inputs.len();
    let l2 = solution.latches.len();
    let a2 = solution.ands.len();
    if i2 + c != spec.inputs.len() {
        report.fail(
            Clause::HeaderInputs,
            format!("I' = {i2}, expected I - c = {} - {c}", spec.inputs.len()),
        );
    }
    let m_expected = i2 + l2 + a2;
    if solution.max_var as usize != m_expected {
        report.fail(
            Clause::HeaderMaxVar,
            format!(
                "M' = {}, expected I' + L' + A' = {m_expected}",
                solution.max_var
            ),
        );
    }

    if let Some(i) = first_difference(&solution.inputs, &partition.uncontrollable) {
        report.fail(
            Clause::Inputs,
            format!(
                "input {i} is {}, expected {}",
                solution.inputs.get(i).map_or("missing".into(), |l| l.to_string()),
                partition.uncontrollable.get(i).map_or("nothing".into(), |l| l.to_string())
            ),
        );
    }

    let kept_latches = solution.latches.len() >= spec.latches.len()
        && solution.latches[..spec.latches.len()] == spec.latches[..];
    if !kept_latches {
        let i = first_difference(&solution.latches, &spec.latches).unwrap_or(0);
        report.fail(
            Clause::Latches,
            format!("original latch {i} removed or modified"),
        );
    }

    if solution.outputs != spec.outputs {
        report.fail(
            Clause::Outputs,
            format!(
                "outputs {:?}, expected {:?}",
                solution.outputs, spec.outputs
            ),
        );
    }

    let kept_ands =
        solution.ands.len() >= spec.ands.len() && solution.ands[..spec.ands.len()] == spec.ands[..];
    if !kept_ands {
        let i = first_difference(&solution.ands, &spec.ands).unwrap_or(0);
        report.fail(
            Clause::Ands,
            format!("original AND gate {i} removed or modified"),
        );
    }

    // New definitions are whatever follows the original prefixes; when a
    // prefix is broken the whole section counts as new so that the remaining
    // rules still get checked.
    let new_latches = if kept_latches {
        &solution.latches[spec.latches.len()..]
    } else {
        &solution.latches[..]
    };
    let new_ands = if kept_ands {
        &solution.ands[spec.ands.len()..]
    } else {
        &solution.ands[..]
    };

    let mut definitions: FxHashMap<u32, usize> = FxHashMap::default();
    for v in new_latches
        .iter()
        .map(|l| var_of(l.lit))
        .chain(new_ands.iter().map(|a| var_of(a.lhs)))
    {
        *definitions.entry(v).or_default() += 1;
    }
    let mut ctl: Vec<u32> = controllable.iter().copied().collect();
    ctl.sort_unstable();
    for v in &ctl {
        match definitions.get(v).copied().unwrap_or(0) {
            0 => report.fail(
                Clause::RedefineMissing,
                format!("controllable variable {v} is not redefined"),
            ),
            1 => {}
            n => report.fail(
                Clause::RedefineDuplicate,
                format!("controllable variable {v} is redefined {n} times"),
            ),
        }
    }

    let original_ands: FxHashSet<u32> = spec.ands.iter().map(|a| var_of(a.lhs)).collect();
    let reads: Vec<Lit> = new_latches
        .iter()
        .map(|l| l.next)
        .chain(new_ands.iter().flat_map(|a| [a.rhs0, a.rhs1]))
        .collect();
    let mut offending: Vec<u32> = reads
        .into_iter()
        .map(var_of)
        .filter(|v| original_ands.contains(v))
        .collect();
    offending.sort_unstable();
    offending.dedup();
    if !offending.is_empty() {
        report.fail(
            Clause::OriginalAndReference,
            format!("new logic references original AND gate variable(s) {offending:?}"),
        );
    }

    if solution.symbols != spec.symbols {
        let i = first_difference(&solution.symbols, &spec.symbols).unwrap_or(0);
        report.fail(
            Clause::SymbolTable,
            format!("symbol table differs from the specification at entry {i}"),
        );
    }
    report
}
