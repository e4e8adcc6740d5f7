//! End-to-end realizability checking and synthesis with a chosen
//! configuration.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::aiger::Aig;
use crate::bdd::{NodeStore, StoreConfig};
use crate::extract::{determinize_cofactor, minimize_by_reachability, strategy_relation, strategy_to_aig, ExtractError};
use crate::game::{encode, solve, EncodeError, EncodeOptions, SolveError, SolveOptions, UpreMode, Variant, WinningRegion};
use crate::learn::{learn_winning_region, LearnOptions};

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub enum Backend {
    /// Symbolic fixpoint over decision diagrams.
    #[default]
    Bdd,
    /// Clause learning with SAT solvers.
    Sat,
}

#[derive(Clone, Debug)]
pub struct Config {
    pub backend: Backend,
    pub variant: Variant,
    pub upre: UpreMode,
    pub restrict_neg_s: bool,
    pub reach_care: bool,
    pub eager_dealloc: bool,
    pub and_abstract: bool,
    /// `None` disables dynamic reordering.
    pub reorder_threshold: Option<usize>,
    pub node_budget: Option<usize>,
    pub timeout: Option<Duration>,
    /// Simplify the strategy with the states it can reach.
    pub minimize: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            backend: Backend::Bdd,
            variant: Variant::Standard,
            upre: UpreMode::Partitioned,
            restrict_neg_s: false,
            reach_care: false,
            eager_dealloc: true,
            and_abstract: true,
            reorder_threshold: StoreConfig::default().reorder_threshold,
            node_budget: None,
            timeout: None,
            minimize: true,
        }
    }
}

impl Config {
    /// Settings that differ from the defaults but only affect the diagram
    /// fixpoint, so the SAT backend ignores them.
    pub fn ignored_by_sat(&self) -> Vec<&'static str> {
        let d = Config::default();
        let mut out = Vec::new();
        if self.variant != d.variant {
            out.push("variant");
        }
        if self.upre != d.upre {
            out.push("upre");
        }
        if self.restrict_neg_s {
            out.push("restrict-neg-s");
        }
        if self.reach_care {
            out.push("reach-care");
        }
        if !self.and_abstract {
            out.push("and-abstract");
        }
        out
    }

    fn store(&self) -> NodeStore {
        NodeStore::with_config(StoreConfig {
            reorder_threshold: self.reorder_threshold,
            ..StoreConfig::default()
        })
    }

    fn solve_options(&self, deadline: Option<Instant>, early_exit: bool) -> SolveOptions {
        SolveOptions {
            variant: self.variant,
            upre: self.upre,
            restrict_neg_s: self.restrict_neg_s,
            reach_care: self.reach_care,
            and_abstract: self.and_abstract,
            early_exit,
            deadline,
            node_budget: self.node_budget,
            ..SolveOptions::default()
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PipelineError {
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
}

impl PipelineError {
    /// Whether the error is a time or memory limit rather than a fault.
    pub fn is_resource_limit(&self) -> bool {
        matches!(self, PipelineError::Solve(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Realizability {
    pub realizable: bool,
    /// Fixpoint iterations (diagrams) or learned clauses (SAT).
    pub iterations: usize,
}

pub struct Synthesis {
    pub realizable: bool,
    pub iterations: usize,
    /// The controller circuit when realizable.
    pub solution: Option<Aig>,
}

fn deadline(config: &Config) -> Option<Instant> {
    config.timeout.map(|t| Instant::now() + t)
}

pub fn realizability(spec: &Aig, config: &Config) -> Result<Realizability, PipelineError> {
    let deadline = deadline(config);
    let mut store = config.store();
    let opts = EncodeOptions {
        eager_dealloc: config.eager_dealloc,
    };
    let mut enc = encode(spec, &spec.partition_inputs(), &mut store, &opts)?;
    match config.backend {
        Backend::Bdd => {
            let w = solve(&mut enc, &mut store, &config.solve_options(deadline, true))?;
            Ok(Realizability {
                realizable: w.realizable,
                iterations: w.iterations,
            })
        }
        Backend::Sat => {
            let out = learn_winning_region(
                &enc,
                &store,
                &LearnOptions {
                    early_exit: true,
                    deadline,
                },
            )?;
            Ok(Realizability {
                realizable: out.realizable,
                iterations: out.region.iterations,
            })
        }
    }
}

pub fn synthesize(spec: &Aig, config: &Config) -> Result<Synthesis, PipelineError> {
    let deadline = deadline(config);
    let mut store = config.store();
    let opts = EncodeOptions {
        eager_dealloc: config.eager_dealloc,
    };
    let mut enc = encode(spec, &spec.partition_inputs(), &mut store, &opts)?;
    let region = match config.backend {
        Backend::Bdd => solve(&mut enc, &mut store, &config.solve_options(deadline, true))?,
        Backend::Sat => {
            let out = learn_winning_region(
                &enc,
                &store,
                &LearnOptions {
                    early_exit: true,
                    deadline,
                },
            )?;
            WinningRegion {
                w: out.region.to_bdd(&enc, &mut store),
                realizable: out.realizable,
                exact: out.exact,
                iterations: out.region.iterations,
                iterates: Vec::new(),
            }
        }
    };
    if !region.realizable {
        return Ok(Synthesis {
            realizable: false,
            iterations: region.iterations,
            solution: None,
        });
    }
    let lambda = strategy_relation(&enc, &mut store, &region)?;
    let mut strategy = determinize_cofactor(&enc, &mut store, lambda);
    store.release(lambda).expect("owned handle");
    if config.minimize {
        let smaller = minimize_by_reachability(&mut enc, &mut store, &strategy);
        strategy.release(&mut store);
        strategy = smaller;
    }
    let solution = strategy_to_aig(spec, &enc, &store, &strategy, true)?;
    Ok(Synthesis {
        realizable: true,
        iterations: region.iterations,
        solution: Some(solution),
    })
}
