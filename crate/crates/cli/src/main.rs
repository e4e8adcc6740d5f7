//! Command-line front end: realizability checking, synthesis, verification,
//! benchmark generation and suite execution.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};

use safesynth::aiger::{check_solution_syntax, parse_ascii, Aig};
use safesynth::bench::{
    self, gen_cnt, gen_counting_safety, gen_random, read_manifest, read_records, run_suite, toy_arbiter, write_corpus,
    write_records, CountingMode, RandomGameParams, SuiteConfig, SuiteOptions, Track,
};
use safesynth::game::{UpreMode, Variant};
use safesynth::pipeline::{self, Backend, Config, PipelineError};
use safesynth::verify::{compose, model_check_with, CheckOptions, Status, VerifyError, DEFAULT_NODE_BUDGET};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_RESOURCE: u8 = 3;

#[derive(Parser)]
#[command(name = "safesynth", version, about = "Safety synthesis for AIGER specifications")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether a controller exists.
    Realizability {
        file: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Synthesise a controller and write it as an AIGER solution file.
    Synthesize {
        file: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Skip the reachability-based simplification of the strategy.
        #[arg(long)]
        no_minimize: bool,
    },
    /// Model check a solution against its specification.
    Verify {
        spec: PathBuf,
        solution: PathBuf,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        node_budget: usize,
        /// Time limit in seconds.
        #[arg(long)]
        timeout: Option<f64>,
    },
    /// Check only the syntactic rules for solution files.
    Check { spec: PathBuf, solution: PathBuf },
    /// Generate benchmarks.
    Gen {
        #[command(subcommand)]
        what: GenCommand,
    },
    /// Run and score benchmark suites.
    Bench {
        #[command(subcommand)]
        what: BenchCommand,
    },
}

#[derive(Args, Clone, Debug, Default)]
struct SolverArgs {
    #[arg(long, value_enum, default_value_t = BackendArg::Bdd)]
    backend: BackendArg,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[arg(long, value_enum)]
    upre: Option<UpreArg>,
    /// Minimise the target set against the non-winning states in each step.
    #[arg(long)]
    restrict_neg_s: bool,
    /// Restrict the update functions to the reachable states first.
    #[arg(long)]
    reach_care: bool,
    /// Disable dynamic variable reordering.
    #[arg(long)]
    no_reorder: bool,
    /// Live-node count that triggers reordering.
    #[arg(long, conflicts_with = "no_reorder")]
    reorder_threshold: Option<usize>,
    /// Give up once this many diagram nodes are live.
    #[arg(long)]
    node_budget: Option<usize>,
    /// Time limit in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Print only the verdict lines.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    #[default]
    Bdd,
    Sat,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Standard,
    NoOutLatch,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum UpreArg {
    Partitioned,
    Monolithic,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Counting,
    Bitwise,
    FullSet,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum TrackArg {
    Realizability,
    Synthesis,
}

#[derive(Subcommand)]
enum GenCommand {
    /// An n-bit counter the controller must keep from overflowing.
    Cnt {
        bits: u32,
        #[arg(long)]
        unrealizable: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// A random game.
    Random {
        #[arg(long, default_value_t = 3)]
        latches: usize,
        #[arg(long, default_value_t = 2)]
        uncontrollable: usize,
        #[arg(long, default_value_t = 1)]
        controllable: usize,
        #[arg(long, default_value_t = 12)]
        ands: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Safety translation of a one-client arbiter's liveness requirement.
    Arbiter {
        #[arg(long, value_enum, default_value_t = ModeArg::Counting)]
        mode: ModeArg,
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// A small mixed corpus with a manifest.
    Corpus {
        dir: PathBuf,
        #[arg(long, default_value_t = 4)]
        max_cnt_bits: u32,
        #[arg(long, default_value_t = 10)]
        random: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Run every configuration on every benchmark of a manifest.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        /// `NAME=ARGS`: a configuration named NAME passing the
        /// whitespace-separated ARGS to this executable. Repeatable.
        #[arg(long = "config", required = true)]
        configs: Vec<String>,
        /// Run the synthesis track instead of realizability.
        #[arg(long)]
        synthesize: bool,
        /// Per-run limit in seconds.
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// CSV file for the run records; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for synthesised solutions.
        #[arg(long)]
        work_dir: Option<PathBuf>,
    },
    /// Score run records.
    Score {
        records: PathBuf,
        #[arg(long, value_enum, default_value_t = TrackArg::Realizability)]
        track: TrackArg,
        /// Award quality points for solution size instead of ranking.
        #[arg(long)]
        quality: bool,
        /// Reference sizes as `benchmark,size` lines.
        #[arg(long, requires = "quality")]
        refs: Option<PathBuf>,
        #[arg(long)]
        csv: bool,
    },
}

/// Failure of a subcommand, carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure {
            code: if e.is_resource_limit() { EXIT_RESOURCE } else { EXIT_INPUT },
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> CmdResult {
    match command {
        Command::Realizability { file, solver } => cmd_realizability(&file, &solver),
        Command::Synthesize {
            file,
            output,
            solver,
            no_minimize,
        } => cmd_synthesize(&file, &output, &solver, !no_minimize),
        Command::Verify {
            spec,
            solution,
            node_budget,
            timeout,
        } => cmd_verify(&spec, &solution, node_budget, timeout),
        Command::Check { spec, solution } => cmd_check(&spec, &solution),
        Command::Gen { what } => cmd_gen(what),
        Command::Bench { what } => cmd_bench(what),
    }
}

fn read_aig(path: &Path) -> Result<Aig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    parse_ascii(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn seconds(s: f64) -> Result<Duration, Failure> {
    Duration::try_from_secs_f64(s).map_err(|_| Failure::usage(format!("invalid time limit {s}")))
}

fn build_config(args: &SolverArgs) -> Result<Config, Failure> {
    let mut config = Config {
        backend: match args.backend {
            BackendArg::Bdd => Backend::Bdd,
            BackendArg::Sat => Backend::Sat,
        },
        restrict_neg_s: args.restrict_neg_s,
        reach_care: args.reach_care,
        node_budget: args.node_budget,
        timeout: args.timeout.map(seconds).transpose()?,
        ..Config::default()
    };
    if let Some(v) = args.variant {
        config.variant = match v {
            VariantArg::Standard => Variant::Standard,
            VariantArg::NoOutLatch => Variant::NoOutLatch,
        };
    }
    if let Some(u) = args.upre {
        config.upre = match u {
            UpreArg::Partitioned => UpreMode::Partitioned,
            UpreArg::Monolithic => UpreMode::Monolithic,
        };
    }
    if args.no_reorder {
        config.reorder_threshold = None;
    } else if let Some(t) = args.reorder_threshold {
        config.reorder_threshold = Some(t);
    }
    if config.backend == Backend::Sat {
        let ignored = sat_ignored_flags(args);
        if !ignored.is_empty() {
            eprintln!(
                "warning: the SAT backend ignores --{}",
                ignored.join(", --")
            );
        }
    }
    Ok(config)
}

/// Fixpoint-only flags given on the command line.
fn sat_ignored_flags(args: &SolverArgs) -> Vec<&'static str> {
    let mut out = Vec::new();
    if args.variant.is_some() {
        out.push("variant");
    }
    if args.upre.is_some() {
        out.push("upre");
    }
    if args.restrict_neg_s {
        out.push("restrict-neg-s");
    }
    if args.reach_care {
        out.push("reach-care");
    }
    out
}

fn cmd_realizability(file: &Path, args: &SolverArgs) -> CmdResult {
    let spec = read_aig(file)?;
    let config = build_config(args)?;
    let start = Instant::now();
    let r = pipeline::realizability(&spec, &config)?;
    if !args.quiet {
        println!("c iterations {} time {:.3}s", r.iterations, start.elapsed().as_secs_f64());
    }
    println!("{}", verdict_line(r.realizable));
    Ok(EXIT_OK)
}

fn verdict_line(realizable: bool) -> &'static str {
    if realizable {
        "REALIZABLE"
    } else {
        "UNREALIZABLE"
    }
}

fn cmd_synthesize(file: &Path, output: &Path, args: &SolverArgs, minimize: bool) -> CmdResult {
    let spec = read_aig(file)?;
    let config = Config {
        minimize,
        ..build_config(args)?
    };
    let start = Instant::now();
    let s = pipeline::synthesize(&spec, &config)?;
    if !args.quiet {
        println!("c iterations {} time {:.3}s", s.iterations, start.elapsed().as_secs_f64());
    }
    println!("{}", verdict_line(s.realizable));
    if let Some(solution) = s.solution {
        fs::write(output, solution.to_ascii()).map_err(|e| Failure::input(format!("{}: {e}", output.display())))?;
        println!("ands {}", solution.num_ands());
    }
    Ok(EXIT_OK)
}

fn cmd_verify(spec: &Path, solution: &Path, node_budget: usize, timeout: Option<f64>) -> CmdResult {
    let spec = read_aig(spec)?;
    let solution = read_aig(solution)?;
    let closed = match compose(&spec, &solution) {
        Ok(c) => c,
        Err(VerifyError::Syntax(report)) => return Err(Failure::input(format!("invalid solution:\n{report}"))),
        Err(e) => return Err(Failure::input(e.to_string())),
    };
    let opts = CheckOptions {
        node_budget,
        deadline: timeout.map(seconds).transpose()?.map(|t| Instant::now() + t),
    };
    let verdict = model_check_with(&closed, &opts).map_err(|e| Failure::input(e.to_string()))?;
    print!("{verdict}");
    Ok(match verdict.status {
        Status::ResourceLimit => EXIT_RESOURCE,
        Status::Safe | Status::Unsafe => EXIT_OK,
    })
}

fn cmd_check(spec: &Path, solution: &Path) -> CmdResult {
    let spec = read_aig(spec)?;
    let solution = read_aig(solution)?;
    let report = check_solution_syntax(&spec, &solution);
    if report.passed() {
        println!("OK");
        Ok(EXIT_OK)
    } else {
        print!("{report}");
        Ok(EXIT_INPUT)
    }
}

fn emit(aig: &Aig, output: Option<&Path>) -> CmdResult {
    let text = aig.to_ascii();
    match output {
        Some(path) => fs::write(path, text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(EXIT_OK)
}

fn cmd_gen(what: GenCommand) -> CmdResult {
    match what {
        GenCommand::Cnt {
            bits,
            unrealizable,
            output,
        } => {
            let aig = gen_cnt(bits, !unrealizable).map_err(|e| Failure::usage(e.to_string()))?;
            emit(&aig, output.as_deref())
        }
        GenCommand::Random {
            latches,
            uncontrollable,
            controllable,
            ands,
            seed,
            output,
        } => {
            let params = RandomGameParams {
                latches,
                uncontrollable,
                controllable,
                ands,
            };
            emit(&gen_random(params, seed), output.as_deref())
        }
        GenCommand::Arbiter { mode, k, output } => {
            let mode = match mode {
                ModeArg::Counting => CountingMode::Counting,
                ModeArg::Bitwise => CountingMode::Bitwise,
                ModeArg::FullSet => CountingMode::FullSet,
            };
            let (core, pending, gnt) = toy_arbiter();
            let aig = gen_counting_safety(&core, &[pending], &[gnt], k, mode).map_err(|e| Failure::usage(e.to_string()))?;
            emit(&aig, output.as_deref())
        }
        GenCommand::Corpus {
            dir,
            max_cnt_bits,
            random,
            seed,
        } => {
            let benches = bench::default_corpus(max_cnt_bits, random, seed);
            let manifest =
                write_corpus(&dir, &benches).map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
            println!("{}", manifest.display());
            Ok(EXIT_OK)
        }
    }
}

fn parse_suite_config(spec: &str, program: &Path, synthesize: bool) -> Result<SuiteConfig, Failure> {
    let (id, args) = spec.split_once('=').unwrap_or((spec, ""));
    if id.is_empty() {
        return Err(Failure::usage(format!("configuration `{spec}` has no name")));
    }
    Ok(SuiteConfig {
        id: id.to_string(),
        program: program.to_path_buf(),
        args: args.split_whitespace().map(String::from).collect(),
        synthesize,
    })
}

fn read_refs(path: &Path) -> Result<BTreeMap<String, usize>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let mut refs = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed = line
            .split_once(',')
            .and_then(|(b, s)| Some((b.trim().to_string(), s.trim().parse::<usize>().ok()?)));
        match parsed {
            Some((b, s)) => {
                refs.insert(b, s);
            }
            None => {
                return Err(Failure::input(format!(
                    "{}:{}: expected `benchmark,size`",
                    path.display(),
                    n + 1
                )))
            }
        }
    }
    Ok(refs)
}

fn cmd_bench(what: BenchCommand) -> CmdResult {
    match what {
        BenchCommand::Run {
            manifest,
            configs,
            synthesize,
            timeout,
            workers,
            out,
            work_dir,
        } => {
            let entries = read_manifest(&manifest).map_err(|e| Failure::input(e.to_string()))?;
            let program = std::env::current_exe().map_err(|e| Failure::input(e.to_string()))?;
            let configs = configs
                .iter()
                .map(|c| parse_suite_config(c, &program, synthesize))
                .collect::<Result<Vec<_>, _>>()?;
            let work_dir = work_dir.unwrap_or_else(|| std::env::temp_dir().join(format!("safesynth-{}", std::process::id())));
            fs::create_dir_all(&work_dir).map_err(|e| Failure::input(format!("{}: {e}", work_dir.display())))?;
            let mut opts = SuiteOptions::new(seconds(timeout)?, work_dir);
            opts.workers = workers.max(1);
            let records = run_suite(&entries, &configs, &opts);
            let result = match out {
                Some(path) => {
                    let file =
                        fs::File::create(&path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
                    write_records(file, &records)
                }
                None => write_records(std::io::stdout().lock(), &records),
            };
            result.map_err(|e| Failure::input(e.to_string()))?;
            Ok(EXIT_OK)
        }
        BenchCommand::Score {
            records,
            track,
            quality,
            refs,
            csv,
        } => {
            let file = fs::File::open(&records).map_err(|e| Failure::input(format!("{}: {e}", records.display())))?;
            let records = read_records(file).map_err(|e| Failure::input(e.to_string()))?;
            let score = if quality {
                let refs = match refs {
                    Some(p) => read_refs(&p)?,
                    None => BTreeMap::new(),
                };
                bench::quality_ranking(&records, &refs)
            } else {
                let track = match track {
                    TrackArg::Realizability => Track::Realizability,
                    TrackArg::Synthesis => Track::Synthesis,
                };
                bench::relative_ranking(&records, track)
            };
            print!("{}", if csv { score.to_csv() } else { score.to_table() });
            Ok(EXIT_OK)
        }
    }
}
