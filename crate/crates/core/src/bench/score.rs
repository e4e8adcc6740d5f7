//! Competition scoring: relative ranking by time or size, and quality
//! points for solution size.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::harness::{RunRecord, RunStatus};

/// Points per configuration.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Score {
    pub points: BTreeMap<String, f64>,
}

impl Score {
    pub fn get(&self, config: &str) -> f64 {
        self.points.get(config).copied().unwrap_or(0.0)
    }

    /// Configurations by decreasing points, as an aligned table.
    pub fn to_table(&self) -> String {
        let mut rows: Vec<(&String, &f64)> = self.points.iter().collect();
        rows.sort_by(|a, b| b.1.total_cmp(a.1).then(a.0.cmp(b.0)));
        let width = rows.iter().map(|(c, _)| c.len()).max().unwrap_or(0).max("config".len());
        let mut out = format!("{:<width$}  {:>10}\n", "config", "points");
        for (c, p) in rows {
            let _ = writeln!(out, "{c:<width$}  {p:>10.2}");
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("config,points\n");
        for (c, p) in &self.points {
            let _ = writeln!(out, "{c},{p:.4}");
        }
        out
    }
}

/// Which metric ranks solvers that solved a benchmark.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Track {
    /// Faster (CPU time) is better.
    Realizability,
    /// Fewer AND gates is better.
    Synthesis,
}

/// Points for the solvers of one benchmark. `metrics[t]` is `None` when
/// solver `t` did not solve it. With `n` solvers succeeding, the rank-`m`
/// solver gets `(n − m + 1)/f · p` with `f = 1 + … + n`, so the benchmark's
/// `p` points are always handed out in full; solvers with equal metric share
/// the mean of the points of the ranks they occupy.
pub fn rank_points(metrics: &[Option<f64>], p: f64) -> Vec<f64> {
    let mut solved: Vec<(usize, f64)> = metrics
        .iter()
        .enumerate()
        .filter_map(|(t, m)| m.map(|m| (t, m)))
        .collect();
    solved.sort_by(|a, b| a.1.total_cmp(&b.1));
    let n = solved.len();
    let f = (n * (n + 1) / 2) as f64;
    let mut points = vec![0.0; metrics.len()];
    let mut i = 0;
    while i < solved.len() {
        let mut j = i;
        while j + 1 < solved.len() && solved[j + 1].1 == solved[i].1 {
            j += 1;
        }
        // ranks i+1 ..= j+1
        let total: f64 = (i + 1..=j + 1).map(|m| (n - m + 1) as f64 / f * p).sum();
        let share = total / (j - i + 1) as f64;
        for &(t, _) in &solved[i..=j] {
            points[t] = share;
        }
        i = j + 1;
    }
    points
}

fn metric(r: &RunRecord, track: Track) -> Option<f64> {
    match track {
        Track::Realizability => r.status.is_solved().then_some(r.time_s),
        Track::Synthesis => match (r.status, r.size) {
            (RunStatus::SolvedUnreal, _) => Some(0.0),
            (RunStatus::SolvedReal, Some(s)) => Some(s as f64),
            _ => None,
        },
    }
}

/// Relative ranking over all benchmarks in `records`: each benchmark is
/// worth `p = 1000 / k` points for `k` benchmarks, shared by rank among
/// the configurations that solved it.
pub fn relative_ranking(records: &[RunRecord], track: Track) -> Score {
    let configs: BTreeSet<&str> = records.iter().map(|r| r.config.as_str()).collect();
    let configs: Vec<&str> = configs.into_iter().collect();
    let mut by_bench: BTreeMap<&str, Vec<Option<f64>>> = BTreeMap::new();
    for r in records {
        let row = by_bench
            .entry(r.benchmark.as_str())
            .or_insert_with(|| vec![None; configs.len()]);
        let t = configs.binary_search(&r.config.as_str()).unwrap();
        row[t] = metric(r, track);
    }
    let mut score = Score {
        points: configs.iter().map(|c| (c.to_string(), 0.0)).collect(),
    };
    if by_bench.is_empty() {
        return score;
    }
    let p = 1000.0 / by_bench.len() as f64;
    for row in by_bench.values() {
        for (t, pts) in rank_points(row, p).into_iter().enumerate() {
            *score.points.get_mut(configs[t]).unwrap() += pts;
        }
    }
    score
}

/// `max(0, 2 − log10(size / reference))`; a size of 0 counts as 1.
pub fn quality_points(size: usize, reference: usize) -> f64 {
    let ratio = size.max(1) as f64 / reference.max(1) as f64;
    (2.0 - ratio.log10()).max(0.0)
}

/// Quality points for synthesised solutions. The reference size of a
/// benchmark is taken from `reference_sizes` or, failing that, is the
/// smallest verified solution among `records`.
pub fn quality_ranking(records: &[RunRecord], reference_sizes: &BTreeMap<String, usize>) -> Score {
    let mut best: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records {
        if let (RunStatus::SolvedReal, Some(s)) = (r.status, r.size) {
            let e = best.entry(r.benchmark.as_str()).or_insert(s);
            *e = (*e).min(s);
        }
    }
    let mut score = Score::default();
    for r in records {
        let pts = match (r.status, r.size) {
            (RunStatus::SolvedReal, Some(s)) => {
                let reference = reference_sizes
                    .get(&r.benchmark)
                    .copied()
                    .unwrap_or(best[r.benchmark.as_str()]);
                quality_points(s, reference)
            }
            _ => 0.0,
        };
        *score.points.entry(r.config.clone()).or_insert(0.0) += pts;
    }
    score
}
