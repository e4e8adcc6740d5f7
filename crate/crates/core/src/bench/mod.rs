//! Benchmark generation, suite execution and scoring.

pub mod gen;
pub mod harness;
pub mod score;

#[cfg(test)]
mod tests;

pub use gen::{
    cnt_benchmark, default_corpus, gen_cnt, gen_counting_safety, gen_random, toy_arbiter, Benchmark, CountingMode,
    GenError, RandomGameParams,
};
pub use harness::{
    read_manifest, read_records, run_process, run_suite, write_corpus, write_records, ManifestEntry, RunRecord,
    RunStatus, SuiteConfig, SuiteOptions,
};
pub use score::{quality_points, quality_ranking, rank_points, relative_ranking, Score, Track};
