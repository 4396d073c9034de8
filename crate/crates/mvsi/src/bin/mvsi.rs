//! Command-line front end: solve game files exactly, run the cross-solver
//! benchmark.
//!
//! Solve subcommands read a line-oriented game file, print the exact solution
//! values and the computed optimal strategy, and exit 0. Errors map to exit
//! codes by kind: 1 for unreadable or malformed input, 2 for inputs that
//! parse but violate a model invariant, 3 for internal soundness failures
//! (which are bugs, not bad input). All solve output is deterministic:
//! the same file and flags produce byte-identical bytes on stdout.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mvsi::bench::{bench, BenchConfig, Solver};
use mvsi::error::Error;
use mvsi::format::{parse_energy, parse_pa, parse_ssg};
use mvsi::strategy::{DecompKind, SiOptions, Trace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "mvsi", about = "Exact solvers for games and behavioural distances")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve a simple stochastic game by strategy iteration.
    SolveSsg(SolveSsg),
    /// Solve an energy game (minimal initial credit per state).
    SolveEnergy(SolveEnergy),
    /// Compute the behavioural distance matrix of a probabilistic automaton.
    SolvePa(SolvePa),
    /// Run all solvers on random energy games and compare.
    Bench(BenchArgs),
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("direction").required(true).args(["above", "below"]))]
struct SolveSsg {
    /// Game file (`ssg` header).
    file: PathBuf,
    /// Iterate from above, improving the Min player.
    #[arg(long)]
    above: bool,
    /// Iterate from below, improving the Max player.
    #[arg(long)]
    below: bool,
    /// Randomize the starting strategy with this seed (default: lowest
    /// option index everywhere).
    #[arg(long)]
    seed: Option<u64>,
    /// Print every intermediate strategy and fixpoint.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("method")
    .required(true)
    .args(["kleene", "vi", "above", "below"]))]
struct SolveEnergy {
    /// Game file (`energy` header).
    file: PathBuf,
    /// Kleene iteration on the bounded transformed game.
    #[arg(long)]
    kleene: bool,
    /// Worklist value iteration on the bounded transformed game.
    #[arg(long)]
    vi: bool,
    /// Strategy iteration from above, improving Player 0.
    #[arg(long)]
    above: bool,
    /// Strategy iteration from below, improving Player 1.
    #[arg(long)]
    below: bool,
    /// Print every intermediate strategy and fixpoint.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct SolvePa {
    /// Automaton file (`pa` header).
    file: PathBuf,
    /// Print the transport plans of the final coupling structure.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// States per instance.
    #[arg(long)]
    n: usize,
    /// Base seed; instance `i` draws from stream `i` of this seed.
    #[arg(long)]
    seed: u64,
    /// Number of instances.
    #[arg(long)]
    runs: usize,
    /// Edge probability (default 2/n).
    #[arg(long)]
    p: Option<f64>,
    /// Weight bound, edge weights are uniform in [-W, W] (default n).
    #[arg(long, value_name = "W")]
    w: Option<i64>,
    /// Comma-separated solver subset: TF, KLE, VI, SI1, SI0 (default all).
    #[arg(long, value_delimiter = ',')]
    solvers: Option<Vec<String>>,
    /// Print one machine-readable CSV row per instance and solver instead
    /// of the aligned table.
    #[arg(long)]
    csv: bool,
    /// Directory for counterexample dumps on solver disagreement.
    #[arg(long)]
    dump_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::SolveSsg(args) => solve_ssg(&args),
        Cmd::SolveEnergy(args) => solve_energy(&args),
        Cmd::SolvePa(args) => solve_pa(&args),
        Cmd::Bench(args) => run_bench(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Exit-code contract: 1 input, 2 invariant, 3 internal soundness.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } => 1,
        Error::Soundness(_) => 3,
        _ => 2,
    }
}

fn read(path: &PathBuf) -> Result<String, Error> {
    fs::read_to_string(path)
        .map_err(|e| Error::Parse { line: 0, msg: format!("cannot read {}: {e}", path.display()) })
}

fn solve_ssg(args: &SolveSsg) -> Result<(), Error> {
    let game = parse_ssg(&read(&args.file)?)?;
    let dec = if args.above { game.min_decomposition() } else { game.max_decomposition() };
    let mut opts = SiOptions::default();
    if let Some(seed) = args.seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        opts.initial = Some(dec.random_strategy(&mut rng));
    }
    let (kind, res) = if args.above {
        (DecompKind::Min, game.solve_above(&opts)?)
    } else {
        (DecompKind::Max, game.solve_below(&opts)?)
    };
    for (pos, value) in res.mu.iter() {
        println!("value {pos} = {value}");
    }
    for (v, w) in game.choices(kind, &res.strategy)? {
        println!("strategy {v} -> {w}");
    }
    println!("visits {}", res.trace.visits());
    println!("skips {}", res.trace.skips());
    if args.trace {
        print_trace(&res.trace);
    }
    Ok(())
}

fn solve_energy(args: &SolveEnergy) -> Result<(), Error> {
    let game = parse_energy(&read(&args.file)?)?;
    if args.kleene || args.vi {
        let sol = if args.kleene { game.solve_kleene()? } else { game.solve_value_iteration()? };
        for (v, e) in &sol.values {
            println!("value {v} = {e}");
        }
        println!("steps {}", sol.steps);
        return Ok(());
    }
    let out = if args.above { game.solve_above()? } else { game.solve_below()? };
    for (v, e) in &out.values {
        println!("value {v} = {e}");
    }
    for (v, w) in &out.moves {
        println!("strategy {v} -> {w}");
    }
    println!("visits {}", out.trace.visits());
    println!("skips {}", out.trace.skips());
    if args.trace {
        print_trace(&out.trace);
    }
    Ok(())
}

fn solve_pa(args: &SolvePa) -> Result<(), Error> {
    let pa = parse_pa(&read(&args.file)?)?;
    let res = pa.solve_above()?;
    for (pos, value) in res.mu.iter() {
        println!("distance {pos} = {value}");
    }
    for (s, t) in pa.pair_domain() {
        let Some(rho) = res.structure.coupling(&s, &t) else { continue };
        let pairs: Vec<String> = rho.iter().map(|(i, j)| format!("({i},{j})")).collect();
        println!("coupling ({s},{t}) = {}", pairs.join(" "));
    }
    println!("visits {}", res.visits);
    println!("skips {}", res.skips);
    if args.trace {
        print_plans(&pa, &res.structure);
    }
    Ok(())
}

fn print_plans(pa: &mvsi::pa::Pa, structure: &mvsi::pa::CouplingStructure) {
    for (s, t) in pa.pair_domain() {
        let Some(rho) = structure.coupling(&s, &t) else { continue };
        for &(i, j) in rho {
            let Some(plan) = structure.plan(&pa.dists(&s)[i], &pa.dists(&t)[j]) else { continue };
            let rows: Vec<String> = plan
                .iter()
                .map(|row| row.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "))
                .collect();
            println!("plan ({s},{t}) {i} {j} = {}", rows.join(" ; "));
        }
    }
}

fn print_trace(trace: &Trace) {
    for (i, step) in trace.steps.iter().enumerate() {
        println!("trace {i} strategy {} values {}", step.strategy, step.mu);
        if let Some(skip) = &step.skip {
            let cycle: Vec<&str> = skip.cycle.iter().map(|p| p.as_str()).collect();
            println!("trace {i} skip cycle {{{}}} delta {}", cycle.join(", "), skip.delta);
        }
    }
}

fn run_bench(args: &BenchArgs) -> Result<(), Error> {
    let mut cfg = BenchConfig::new(args.n, args.seed, args.runs)?;
    if let Some(p) = args.p {
        cfg.p = p;
    }
    if let Some(w) = args.w {
        cfg.w = w;
    }
    if let Some(names) = &args.solvers {
        cfg.solvers = names
            .iter()
            .map(|name| {
                Solver::from_name(name)
                    .ok_or_else(|| Error::InvalidModel(format!("unknown solver {name:?}")))
            })
            .collect::<Result<_, _>>()?;
    }
    if let Some(dir) = &args.dump_dir {
        cfg.dump_dir = dir.clone();
    }
    cfg.check()?;
    let report = bench(&cfg)?;
    print!("{}", if args.csv { report.csv() } else { report.table() });
    Ok(())
}
