//! The ASCII AIGER format (`aag`), with the `controllable_` input naming
//! convention used for synthesis specifications.

mod builder;
mod check;

use std::fmt::Write as _;

use thiserror::Error;

pub use builder::AigBuilder;
pub use check::{check_solution_syntax, CheckReport, Clause, Violation};

/// An AIGER literal: `2·v` is variable `v`, `2·v + 1` its negation.
/// Literal 0 is constant false and 1 is constant true.
pub type Lit = u32;

/// Name prefix that marks an input as controllable.
pub const CONTROLLABLE_PREFIX: &str = "controllable_";

pub fn var_of(lit: Lit) -> u32 {
    lit >> 1
}

pub fn is_negated(lit: Lit) -> bool {
    lit & 1 == 1
}

pub fn negate(lit: Lit) -> Lit {
    lit ^ 1
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SymbolKind {
    Input,
    Latch,
    Output,
}

impl SymbolKind {
    fn prefix(self) -> char {
        match self {
            SymbolKind::Input => 'i',
            SymbolKind::Latch => 'l',
            SymbolKind::Output => 'o',
        }
    }
}

/// One symbol-table line: the name of the `index`-th input, latch or output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Symbol {
    pub kind: SymbolKind,
    pub index: usize,
    pub name: String,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Latch {
    pub lit: Lit,
    pub next: Lit,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct AndGate {
    pub lhs: Lit,
    pub rhs0: Lit,
    pub rhs1: Lit,
}

/// An and-inverter graph as laid out in an AIGER file. Definitions keep
/// file order and the symbol table keeps its line order, so writing a parsed
/// file reproduces it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Aig {
    pub max_var: u32,
    pub inputs: Vec<Lit>,
    pub latches: Vec<Latch>,
    pub outputs: Vec<Lit>,
    pub ands: Vec<AndGate>,
    pub symbols: Vec<Symbol>,
    /// Lines after the `c` marker; `None` when the file has no comment section.
    pub comments: Option<Vec<String>>,
}

/// Split of the inputs into environment- and controller-driven ones, as
/// literals in file order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InputPartition {
    pub uncontrollable: Vec<Lit>,
    pub controllable: Vec<Lit>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("binary AIGER files are not supported; convert to the ASCII variant (aag)")]
    Binary,
    #[error("line {line}: malformed header: {detail}")]
    Header { line: usize, detail: String },
    #[error("line {line}: section count mismatch: {detail}")]
    SectionCount { line: usize, detail: String },
    #[error("line {line}: malformed {section} definition: {detail}")]
    Malformed {
        line: usize,
        section: &'static str,
        detail: String,
    },
    #[error("line {line}: literal {lit} must be even")]
    OddLiteral { line: usize, lit: Lit },
    #[error("line {line}: literal {lit} exceeds the maximum 2M+1 = {max}")]
    LiteralRange { line: usize, lit: Lit, max: u64 },
    #[error("line {line}: variable {var} is already defined on line {first}")]
    Duplicate { line: usize, var: u32, first: usize },
    #[error("line {line}: malformed symbol table entry: {detail}")]
    Symbol { line: usize, detail: String },
}

impl Aig {
    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn num_latches(&self) -> usize {
        self.latches.len()
    }

    pub fn num_ands(&self) -> usize {
        self.ands.len()
    }

    /// Name given to the `index`-th definition of `kind`, if any. The first
    /// matching symbol line wins.
    pub fn symbol(&self, kind: SymbolKind, index: usize) -> Option<&str> {
        self.symbols
            .iter()
            .find(|s| s.kind == kind && s.index == index)
            .map(|s| s.name.as_str())
    }

    /// Splits inputs by the exact, case-sensitive `controllable_` prefix.
    /// Unnamed inputs are uncontrollable.
    pub fn partition_inputs(&self) -> InputPartition {
        let mut p = InputPartition::default();
        for (i, &lit) in self.inputs.iter().enumerate() {
            match self.symbol(SymbolKind::Input, i) {
                Some(name) if name.starts_with(CONTROLLABLE_PREFIX) => p.controllable.push(lit),
                _ => p.uncontrollable.push(lit),
            }
        }
        p
    }

    /// The single output of a synthesis specification.
    pub fn bad_output(&self) -> Option<Lit> {
        match self.outputs.as_slice() {
            [o] => Some(*o),
            _ => None,
        }
    }

    /// Serialises to the ASCII format. Whitespace is normalised: single
    /// spaces, one definition per line, final newline.
    pub fn to_ascii(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "aag {} {} {} {} {}",
            self.max_var,
            self.inputs.len(),
            self.latches.len(),
            self.outputs.len(),
            self.ands.len()
        );
        for i in &self.inputs {
            let _ = writeln!(out, "{i}");
        }
        for l in &self.latches {
            let _ = writeln!(out, "{} {}", l.lit, l.next);
        }
        for o in &self.outputs {
            let _ = writeln!(out, "{o}");
        }
        for a in &self.ands {
            let _ = writeln!(out, "{} {} {}", a.lhs, a.rhs0, a.rhs1);
        }
        for s in &self.symbols {
            let _ = writeln!(out, "{}{} {}", s.kind.prefix(), s.index, s.name);
        }
        if let Some(comments) = &self.comments {
            out.push_str("c\n");
            for c in comments {
                out.push_str(c);
                out.push('\n');
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Aig, ParseError> {
        parse_ascii(text)
    }
}

pub fn write_ascii(aig: &Aig) -> String {
    aig.to_ascii()
}

fn is_numeric_line(line: &str) -> bool {
    line.trim_start().starts_with(|c: char| c.is_ascii_digit())
}

/// Parses an ASCII AIGER file. Trailing whitespace and a missing final
/// newline are accepted. References to undefined variables are not an error
/// here; consumers that evaluate the circuit report them.
pub fn parse_ascii(text: &str) -> Result<Aig, ParseError> {
    if text.starts_with("aig") {
        let header = text.lines().next().unwrap_or("");
        if header.split_whitespace().next() == Some("aig") {
            return Err(ParseError::Binary);
        }
    }
    let lines: Vec<&str> = text.lines().collect();
    let header_err = |detail: &str| ParseError::Header {
        line: 1,
        detail: detail.to_string(),
    };
    let header = lines.first().ok_or_else(|| header_err("empty file"))?;
    let mut fields = header.split_whitespace();
    if fields.next() != Some("aag") {
        return Err(header_err("expected `aag M I L O A`"));
    }
    let nums: Vec<u32> = fields
        .map(|f| f.parse::<u32>())
        .collect::<Result<_, _>>()
        .map_err(|_| header_err("fields must be non-negative integers"))?;
    if nums.len() < 5 {
        return Err(header_err("expected five numbers M I L O A"));
    }
    if nums[5..].iter().any(|&n| n != 0) {
        return Err(header_err(
            "bad-state, constraint, justice and fairness sections are not supported",
        ));
    }
    let (m, ni, nl, no, na) = (nums[0], nums[1], nums[2], nums[3], nums[4]);

    // Count the numeric section before interpreting it, so a short or long
    // file is reported as such rather than as a confusing per-line error.
    let expected = (ni + nl + no + na) as usize;
    let body = &lines[1..];
    let numeric = body.iter().take_while(|l| is_numeric_line(l)).count();
    if numeric != expected {
        let line = 2 + numeric.min(expected);
        return Err(ParseError::SectionCount {
            line,
            detail: format!(
                "header announces {expected} input/latch/output/and lines, found {numeric}"
            ),
        });
    }

    let defined = ni as u64 + nl as u64 + na as u64;
    if (m as u64) < defined {
        return Err(header_err(&format!("M = {m} is smaller than I + L + A = {defined}")));
    }
    let max_lit = 2 * m as u64 + 1;

    let mut aig = Aig {
        max_var: m,
        ..Default::default()
    };
    let mut defined_at: Vec<usize> = vec![0; m as usize + 1];
    let mut idx = 0usize;

    let read = |section: &'static str, arity: usize, idx: &mut usize| -> Result<(usize, Vec<Lit>), ParseError> {
        let line_no = *idx + 2;
        let raw = body[*idx];
        *idx += 1;
        let parts: Vec<&str> = raw.split_whitespace().collect();
        let ok_arity = parts.len() == arity || (section == "latch" && parts.len() == 3);
        if !ok_arity {
            return Err(ParseError::Malformed {
                line: line_no,
                section,
                detail: format!("expected {arity} numbers, found {}", parts.len()),
            });
        }
        let mut lits = Vec::with_capacity(parts.len());
        for p in parts {
            let v: Lit = p.parse().map_err(|_| ParseError::Malformed {
                line: line_no,
                section,
                detail: format!("`{p}` is not a literal"),
            })?;
            if v as u64 > max_lit {
                return Err(ParseError::LiteralRange {
                    line: line_no,
                    lit: v,
                    max: max_lit,
                });
            }
            lits.push(v);
        }
        if lits.len() == 3 && section == "latch" {
            // AIGER 1.9 reset field: only the implicit zero reset is supported
            if lits[2] != 0 {
                return Err(ParseError::Malformed {
                    line: line_no,
                    section,
                    detail: "only reset value 0 is supported".into(),
                });
            }
            lits.pop();
        }
        Ok((line_no, lits))
    };

    let mut define = |lit: Lit, line: usize, section: &'static str| -> Result<(), ParseError> {
        if is_negated(lit) {
            return Err(ParseError::OddLiteral { line, lit });
        }
        if lit == 0 {
            return Err(ParseError::Malformed {
                line,
                section,
                detail: "the constant literal cannot be defined".into(),
            });
        }
        let v = var_of(lit) as usize;
        if defined_at[v] != 0 {
            return Err(ParseError::Duplicate {
                line,
                var: v as u32,
                first: defined_at[v],
            });
        }
        defined_at[v] = line;
        Ok(())
    };

    for _ in 0..ni {
        let (line, l) = read("input", 1, &mut idx)?;
        define(l[0], line, "input")?;
        aig.inputs.push(l[0]);
    }
    for _ in 0..nl {
        let (line, l) = read("latch", 2, &mut idx)?;
        define(l[0], line, "latch")?;
        aig.latches.push(Latch { lit: l[0], next: l[1] });
    }
    for _ in 0..no {
        let (_, l) = read("output", 1, &mut idx)?;
        aig.outputs.push(l[0]);
    }
    for _ in 0..na {
        let (line, l) = read("and", 3, &mut idx)?;
        define(l[0], line, "and")?;
        aig.ands.push(AndGate {
            lhs: l[0],
            rhs0: l[1],
            rhs1: l[2],
        });
    }

    let mut rest = body[idx..].iter().enumerate();
    while let Some((off, raw)) = rest.next() {
        let line_no = idx + off + 2;
        if raw.trim_end() == "c" {
            aig.comments = Some(rest.map(|(_, l)| l.to_string()).collect());
            break;
        }
        if raw.trim().is_empty() {
            continue;
        }
        aig.symbols.push(parse_symbol(raw, line_no)?);
    }
    Ok(aig)
}

fn parse_symbol(raw: &str, line: usize) -> Result<Symbol, ParseError> {
    let err = |detail: &str| ParseError::Symbol {
        line,
        detail: detail.to_string(),
    };
    let kind = match raw.chars().next() {
        Some('i') => SymbolKind::Input,
        Some('l') => SymbolKind::Latch,
        Some('o') => SymbolKind::Output,
        _ => return Err(err("expected a line starting with i, l, o or the comment marker c")),
    };
    let (pos, name) = raw[1..]
        .split_once(' ')
        .ok_or_else(|| err("expected `<kind><position> <name>`"))?;
    let index = pos
        .parse::<usize>()
        .map_err(|_| err("position must be a non-negative integer"))?;
    let name = name.trim_end();
    if name.is_empty() {
        return Err(err("empty name"));
    }
    Ok(Symbol {
        kind,
        index,
        name: name.to_string(),
    })
}
