//! Running solver configurations over a benchmark suite in child processes.

use std::fs;
use std::io::{self, Read};
use std::os::unix::process::CommandExt;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aiger::{parse_ascii, Aig};
use crate::verify::{compose, model_check, Status, DEFAULT_NODE_BUDGET};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RunStatus {
    #[serde(rename = "SOLVED_REAL")]
    SolvedReal,
    #[serde(rename = "SOLVED_UNREAL")]
    SolvedUnreal,
    #[serde(rename = "TIMEOUT")]
    Timeout,
    #[serde(rename = "ERROR")]
    Error,
    #[serde(rename = "MC_FAIL")]
    McFail,
}

impl RunStatus {
    pub fn is_solved(self) -> bool {
        matches!(self, RunStatus::SolvedReal | RunStatus::SolvedUnreal)
    }
}

/// One `(benchmark, configuration)` run. `time_s` is the child's CPU time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub benchmark: String,
    pub config: String,
    pub status: RunStatus,
    pub time_s: f64,
    pub size: Option<usize>,
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn write_records<W: io::Write>(out: W, records: &[RunRecord]) -> Result<(), RecordError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: io::Read>(input: R) -> Result<Vec<RunRecord>, RecordError> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// A suite entry: a specification file and its known classification.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub expected: Option<bool>,
}

impl ManifestEntry {
    pub fn id(&self) -> String {
        self.path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    }
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("manifest line {line}: expected `<path> [REALIZABLE|UNREALIZABLE|UNKNOWN]`, got `{text}`")]
    Syntax { line: usize, text: String },
}

pub fn label(expected: Option<bool>) -> &'static str {
    match expected {
        Some(true) => "REALIZABLE",
        Some(false) => "UNREALIZABLE",
        None => "UNKNOWN",
    }
}

/// Reads a manifest: one benchmark path and optional label per line; blank
/// lines and `#` comments are skipped. Relative paths are resolved against
/// the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, ManifestError> {
    let text = fs::read_to_string(path).map_err(|source| ManifestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let file = parts.next().unwrap();
        let expected = match parts.next() {
            None | Some("UNKNOWN") => None,
            Some("REALIZABLE") => Some(true),
            Some("UNREALIZABLE") => Some(false),
            Some(_) => {
                return Err(ManifestError::Syntax {
                    line: i + 1,
                    text: line.to_string(),
                })
            }
        };
        if parts.next().is_some() {
            return Err(ManifestError::Syntax {
                line: i + 1,
                text: line.to_string(),
            });
        }
        out.push(ManifestEntry {
            path: base.join(file),
            expected,
        });
    }
    Ok(out)
}

/// Writes each benchmark as `<id>.aag` into `dir` together with a
/// `manifest.txt`; returns the manifest path.
pub fn write_corpus(dir: &Path, benches: &[super::Benchmark]) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut manifest = String::new();
    for b in benches {
        let file = format!("{}.aag", b.id);
        fs::write(dir.join(&file), b.aig.to_ascii())?;
        manifest.push_str(&format!("{file} {}\n", label(b.expected)));
    }
    let path = dir.join("manifest.txt");
    fs::write(&path, manifest)?;
    Ok(path)
}

/// A solver invocation: `program <realizability|synthesize> <file> args…`,
/// with `-o <solution>` appended for synthesis.
#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub id: String,
    pub program: PathBuf,
    pub args: Vec<String>,
    pub synthesize: bool,
}

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub timeout: Duration,
    pub workers: usize,
    /// Directory receiving synthesised solutions.
    pub work_dir: PathBuf,
    pub model_check_budget: usize,
}

impl SuiteOptions {
    pub fn new(timeout: Duration, work_dir: PathBuf) -> Self {
        SuiteOptions {
            timeout,
            workers: 1,
            work_dir,
            model_check_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

/// What happened to a child process.
#[derive(Clone, Debug)]
pub struct ProcessOutcome {
    /// `None` when killed by a signal.
    pub exit_code: Option<i32>,
    pub timed_out: bool,
    pub cpu_time: Duration,
    pub wall_time: Duration,
    pub stdout: String,
}

fn timeval(tv: libc::timeval) -> Duration {
    Duration::from_secs(tv.tv_sec as u64) + Duration::from_micros(tv.tv_usec as u64)
}

/// Runs `cmd` to completion or until `timeout` (wall clock) expires, when it
/// is killed together with its process group. CPU time is the child's user
/// plus system time.
pub fn run_process(cmd: &mut Command, timeout: Duration) -> io::Result<ProcessOutcome> {
    let start = Instant::now();
    let mut child = cmd
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .process_group(0)
        .spawn()?;
    let mut pipe = child.stdout.take().expect("stdout is piped");
    let reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = pipe.read_to_string(&mut s);
        s
    });
    let pid = child.id() as libc::pid_t;
    let mut status: libc::c_int = 0;
    // SAFETY: rusage is plain data; wait4 fills it in.
    let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
    let mut timed_out = false;
    let mut pause = Duration::from_millis(1);
    loop {
        // SAFETY: valid pointers to locals; pid is our own unreaped child.
        let r = unsafe { libc::wait4(pid, &mut status, libc::WNOHANG, &mut usage) };
        if r == pid {
            break;
        }
        if r < 0 {
            let err = io::Error::last_os_error();
            if err.kind() == io::ErrorKind::Interrupted {
                continue;
            }
            return Err(err);
        }
        if start.elapsed() >= timeout {
            timed_out = true;
            // the whole group, so grandchildren cannot keep the pipe open
            // SAFETY: plain syscall on the child's own process group.
            unsafe { libc::kill(-pid, libc::SIGKILL) };
            let _ = child.kill();
            // SAFETY: as above; blocks until the killed child is reaped.
            let r = unsafe { libc::wait4(pid, &mut status, 0, &mut usage) };
            if r < 0 {
                return Err(io::Error::last_os_error());
            }
            break;
        }
        thread::sleep(pause);
        pause = (pause * 2).min(Duration::from_millis(20));
    }
    let wall_time = start.elapsed();
    let stdout = reader.join().unwrap_or_default();
    let exit_code = if libc::WIFEXITED(status) {
        Some(libc::WEXITSTATUS(status))
    } else {
        None
    };
    Ok(ProcessOutcome {
        exit_code,
        timed_out,
        cpu_time: timeval(usage.ru_utime) + timeval(usage.ru_stime),
        wall_time,
        stdout,
    })
}

/// Runs every configuration on every benchmark, up to `opts.workers` child
/// processes at a time. Records come back in (benchmark, configuration)
/// order.
pub fn run_suite(benchmarks: &[ManifestEntry], configs: &[SuiteConfig], opts: &SuiteOptions) -> Vec<RunRecord> {
    let jobs: Vec<(usize, usize)> = (0..benchmarks.len())
        .flat_map(|b| (0..configs.len()).map(move |c| (b, c)))
        .collect();
    let results: Mutex<Vec<Option<RunRecord>>> = Mutex::new(vec![None; jobs.len()]);
    let next = AtomicUsize::new(0);
    let workers = opts.workers.max(1).min(jobs.len().max(1));
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some(&(b, c)) = jobs.get(k) else { break };
                let rec = run_one(&benchmarks[b], &configs[c], opts);
                results.lock().unwrap()[k] = Some(rec);
            });
        }
    });
    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect()
}

/// Exit status used by the solver for exhausted resources.
const EXIT_RESOURCE: i32 = 3;

fn run_one(bench: &ManifestEntry, config: &SuiteConfig, opts: &SuiteOptions) -> RunRecord {
    let mut record = RunRecord {
        benchmark: bench.id(),
        config: config.id.clone(),
        status: RunStatus::Error,
        time_s: 0.0,
        size: None,
    };
    let spec = match fs::read_to_string(&bench.path).ok().and_then(|t| parse_ascii(&t).ok()) {
        Some(aig) => aig,
        None => return record,
    };
    let solution_path = opts.work_dir.join(format!("{}__{}.aag", record.benchmark, config.id));
    let _ = fs::remove_file(&solution_path);
    let mut cmd = Command::new(&config.program);
    cmd.arg(if config.synthesize { "synthesize" } else { "realizability" })
        .arg(&bench.path)
        .args(&config.args);
    if config.synthesize {
        cmd.arg("-o").arg(&solution_path);
    }
    let outcome = match run_process(&mut cmd, opts.timeout) {
        Ok(o) => o,
        Err(_) => return record,
    };
    record.time_s = outcome.cpu_time.as_secs_f64();
    if outcome.timed_out || outcome.exit_code == Some(EXIT_RESOURCE) {
        record.status = RunStatus::Timeout;
        return record;
    }
    if outcome.exit_code != Some(0) {
        return record;
    }
    let answer = match outcome.stdout.lines().next().map(str::trim) {
        Some("REALIZABLE") => true,
        Some("UNREALIZABLE") => false,
        _ => return record,
    };
    if bench.expected.is_some_and(|e| e != answer) {
        return record;
    }
    if !answer {
        record.status = RunStatus::SolvedUnreal;
        return record;
    }
    if !config.synthesize {
        record.status = RunStatus::SolvedReal;
        return record;
    }
    record.status = RunStatus::McFail;
    if let Some(size) = verified_size(&spec, &solution_path, opts.model_check_budget) {
        record.status = RunStatus::SolvedReal;
        record.size = Some(size);
    }
    record
}

/// AND-gate count of the solution if it is syntactically valid and model
/// checks as safe.
fn verified_size(spec: &Aig, solution_path: &Path, budget: usize) -> Option<usize> {
    let solution = parse_ascii(&fs::read_to_string(solution_path).ok()?).ok()?;
    let closed = compose(spec, &solution).ok()?;
    let verdict = model_check(&closed, budget).ok()?;
    (verdict.status == Status::Safe).then_some(solution.ands.len())
}
