use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tracing_subscriber::EnvFilter;

use weakmc::engine::{bwd, Limit, Options, Report, SearchOrder, Verdict};
use weakmc::model::{model_by_name, MemoryModel};
use weakmc::oracle::{self, OracleError, OracleVerdict};
use weakmc::solver::Solver;
use weakmc::translation::dump_explicit;
use weakmc::TransitionSystem;

const EXIT_SAFE: u8 = 0;
const EXIT_UNSAFE: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_LIMIT: u8 = 3;
const EXIT_USAGE: u8 = 4;
const EXIT_FILE: u8 = 5;

#[derive(Parser)]
#[command(
    name = "weakmc",
    version,
    about = "Parameterized model checking on TSO-like weak memory"
)]
struct Cli {
    /// More log output (repeat for more); RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Backward reachability for any number of processes.
    Check(CheckArgs),
    /// Explicit-state exploration for a fixed number of processes.
    Oracle {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1_000_000)]
        max_states: usize,
        /// Store-buffer capacity, in batches of writes.
        #[arg(long, default_value_t = oracle::DEFAULT_BUFFER_CAPACITY)]
        buffer: usize,
        file: PathBuf,
    },
    /// Runs both and reports whether they agree.
    Compare {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 1_000_000)]
        max_states: usize,
        #[arg(long, default_value_t = oracle::DEFAULT_BUFFER_CAPACITY)]
        buffer: usize,
        file: PathBuf,
    },
    /// Prints the translated system.
    Dump {
        /// Print the explicit event form.
        #[arg(long, conflicts_with = "smt")]
        explicit: bool,
        /// Write the unsafe cubes as SMT-LIB files into this directory.
        #[arg(long, value_name = "DIR")]
        smt: Option<PathBuf>,
        file: PathBuf,
    },
    /// Checks several files and prints one table row per file.
    Bench {
        #[arg(long, default_value = "tso")]
        model: String,
        #[arg(long)]
        timeout: Option<f64>,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    Bfs,
    Dfs,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, default_value = "tso")]
    model: String,
    #[arg(long, value_enum, default_value = "bfs")]
    order: Order,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long, default_value_t = 1_000_000)]
    max_nodes: usize,
    /// Seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Print the counterexample run.
    #[arg(long)]
    trace: bool,
    /// Print search statistics as `# key=value` lines.
    #[arg(long)]
    stats: bool,
    /// Write the visited search graph in DOT format.
    #[arg(long, value_name = "FILE")]
    dot: Option<PathBuf>,
    /// Write every visited cube as an SMT-LIB file into this directory.
    #[arg(long, value_name = "DIR")]
    dump_smt: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    file: PathBuf,
}

struct Failure(u8, String);

fn load(path: &Path) -> Result<TransitionSystem, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure(EXIT_FILE, format!("{}: {e}", path.display())))?;
    weakmc::parse_system(&text).map_err(|e| Failure(EXIT_PARSE, format!("{}:{e}", path.display())))
}

fn model(name: &str) -> Result<Box<dyn MemoryModel>, Failure> {
    model_by_name(name).ok_or_else(|| Failure(EXIT_USAGE, format!("unknown memory model `{name}`")))
}

fn timeout(secs: Option<f64>) -> Result<Option<Duration>, Failure> {
    secs.map(|s| {
        Duration::try_from_secs_f64(s)
            .map_err(|_| Failure(EXIT_USAGE, format!("invalid timeout `{s}`")))
    })
    .transpose()
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure(EXIT_FILE, format!("{}: {e}", path.display())))
}

fn verdict_code(v: &Verdict) -> u8 {
    match v {
        Verdict::Safe => EXIT_SAFE,
        Verdict::Unsafe(_) => EXIT_UNSAFE,
        Verdict::ResourceLimit(_) => EXIT_LIMIT,
    }
}

fn verdict_word(v: &Verdict) -> String {
    match v {
        Verdict::Safe => "safe".into(),
        Verdict::Unsafe(_) => "unsafe".into(),
        Verdict::ResourceLimit(l) => format!("unknown ({l} limit reached)"),
    }
}

fn check(a: CheckArgs) -> Result<u8, Failure> {
    let sys = load(&a.file)?;
    let m = model(&a.model)?;
    if a.jobs == 0 {
        return Err(Failure(EXIT_USAGE, "--jobs must be at least 1".into()));
    }
    let opts = Options {
        order: match a.order {
            Order::Bfs => SearchOrder::Bfs,
            Order::Dfs => SearchOrder::Dfs,
        },
        max_depth: a.max_depth,
        max_nodes: a.max_nodes,
        timeout: timeout(a.timeout)?,
        jobs: a.jobs,
        ..Options::default()
    };
    let report = bwd(&sys, m.as_ref(), &opts).map_err(|e| Failure(EXIT_USAGE, e.to_string()))?;
    println!("{}", verdict_word(&report.verdict));
    if let (true, Verdict::Unsafe(t)) = (a.trace, &report.verdict) {
        println!("{t}");
    }
    if a.stats {
        println!("{}", report.stats);
    }
    if let Some(path) = &a.dot {
        write_file(path, &report.to_dot())?;
    }
    if let Some(dir) = &a.dump_smt {
        dump_smt(&sys, &report, dir)?;
    }
    Ok(verdict_code(&report.verdict))
}

fn dump_smt(sys: &TransitionSystem, report: &Report, dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure(EXIT_FILE, format!("{}: {e}", dir.display())))?;
    let solver = Solver::new(sys.signature());
    for n in &report.nodes {
        write_file(
            &dir.join(format!("node{}.smt2", n.id)),
            &solver.to_smtlib(&n.cube),
        )?;
    }
    Ok(())
}

fn oracle_word(r: &Result<OracleVerdict, OracleError>) -> String {
    match r {
        Ok(OracleVerdict::Safe { states }) => format!("safe ({states} states)"),
        Ok(OracleVerdict::Unsafe { depth }) => format!("unsafe (depth {depth})"),
        Err(e) => format!("unknown ({e})"),
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Check(a) => check(a),
        Command::Oracle {
            n,
            max_states,
            buffer,
            file,
        } => {
            let sys = load(&file)?;
            let r = oracle::enumerate_bounded(&sys, n, max_states, buffer);
            println!("{}", oracle_word(&r));
            match r {
                Ok(OracleVerdict::Safe { .. }) => Ok(EXIT_SAFE),
                Ok(OracleVerdict::Unsafe { .. }) => Ok(EXIT_UNSAFE),
                Err(OracleError::StateSpaceLimit(_)) => Ok(EXIT_LIMIT),
                Err(e) => Err(Failure(EXIT_USAGE, e.to_string())),
            }
        }
        Command::Compare {
            n,
            max_states,
            buffer,
            file,
        } => {
            let sys = load(&file)?;
            let report = bwd(&sys, &weakmc::model::Tso, &Options::default())
                .map_err(|e| Failure(EXIT_USAGE, e.to_string()))?;
            let o = oracle::enumerate_bounded(&sys, n, max_states, buffer);
            println!("engine: {}", verdict_word(&report.verdict));
            println!("oracle(n={n}): {}", oracle_word(&o));
            let agree = match (&report.verdict, &o) {
                (Verdict::Safe, Ok(v)) => v.is_safe(),
                (Verdict::Unsafe(_), Ok(OracleVerdict::Unsafe { .. })) => true,
                // an unsafe run may need more than n processes
                (Verdict::Unsafe(t), Ok(OracleVerdict::Safe { .. })) => t.procs.len() > n,
                _ => false,
            };
            println!("{}", if agree { "agree" } else { "disagree" });
            Ok(if agree { EXIT_SAFE } else { EXIT_UNSAFE })
        }
        Command::Dump {
            explicit,
            smt,
            file,
        } => {
            let sys = load(&file)?;
            match smt {
                Some(dir) => {
                    fs::create_dir_all(&dir)
                        .map_err(|e| Failure(EXIT_FILE, format!("{}: {e}", dir.display())))?;
                    let ctx = weakmc::engine::Context::new(&sys, &weakmc::model::Tso);
                    let roots = ctx
                        .roots()
                        .map_err(|e| Failure(EXIT_USAGE, e.to_string()))?;
                    for (i, cube) in roots {
                        write_file(
                            &dir.join(format!("unsafe{i}.smt2")),
                            &ctx.solver.to_smtlib(&cube),
                        )?;
                    }
                }
                None if explicit => print!("{}", dump_explicit(&sys)),
                None => print!("{}", weakmc::frontend::print_system(&sys)),
            }
            Ok(EXIT_SAFE)
        }
        Command::Bench {
            model: name,
            timeout: t,
            files,
        } => {
            let m = model(&name)?;
            let opts = Options {
                timeout: timeout(t)?,
                ..Options::default()
            };
            println!(
                "{:<24} {:>8} {:>8} {:>9} {:>8} {:>9}",
                "system", "verdict", "visited", "subsumed", "pruned", "time_ms"
            );
            let mut worst = EXIT_SAFE;
            for f in files {
                let name = f
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                let sys = match load(&f) {
                    Ok(s) => s,
                    Err(Failure(code, msg)) => {
                        eprintln!("{msg}");
                        worst = worst.max(code);
                        continue;
                    }
                };
                let r =
                    bwd(&sys, m.as_ref(), &opts).map_err(|e| Failure(EXIT_USAGE, e.to_string()))?;
                let v = match r.verdict {
                    Verdict::Safe => "S",
                    Verdict::Unsafe(_) => "US",
                    Verdict::ResourceLimit(Limit::Time) => "TO",
                    Verdict::ResourceLimit(_) => "LIM",
                };
                let s = r.stats;
                println!(
                    "{name:<24} {v:>8} {:>8} {:>9} {:>8} {:>9}",
                    s.visited, s.subsumed, s.pruned, s.elapsed_ms
                );
            }
            Ok(worst)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_SAFE
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let default = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(default)),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("{msg}");
            ExitCode::from(code)
        }
    }
}
