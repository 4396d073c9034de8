//! Cross-solver benchmark harness for random energy games.
//!
//! A config fixes the random-game parameters and a solver set; the run
//! generates `runs` seeded instances, times every requested solver on
//! each, and checks that all value-producing solvers return exactly the
//! same energies. A disagreement aborts the run after dumping the
//! offending game to a file, because it means one of the solvers is
//! wrong — that is the harness's real product, the wall-clock numbers are
//! a side effect.
//!
//! Instances are derived from the seed and the instance index alone, so
//! results are independent of the worker count and can be recomputed in
//! isolation. Reports order rows by instance index regardless of which
//! worker finished first. Everything in the table and CSV except the
//! timing columns is deterministic for a fixed config.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::energy::{Energy, EnergyGame};
use crate::error::{Error, Result};
use crate::format::emit_energy;
use crate::gen;
use crate::pos::Pos;

/// The solvers the harness can race. `Tf` times the finite-value
/// transformation alone — it produces no values and never votes on
/// agreement, but shows what share of the full solvers' time is spent
/// before any iteration starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Solver {
    /// Finite-value transformation only.
    Tf,
    /// Kleene iteration on the transformed game.
    Kle,
    /// Worklist value iteration on the transformed game.
    Vi,
    /// Strategy iteration from below (Player-1 strategies).
    Si1,
    /// Strategy iteration from above (Player-0 strategies).
    Si0,
}

impl Solver {
    pub const ALL: [Solver; 5] = [Solver::Tf, Solver::Kle, Solver::Vi, Solver::Si1, Solver::Si0];

    pub fn name(self) -> &'static str {
        match self {
            Solver::Tf => "TF",
            Solver::Kle => "KLE",
            Solver::Vi => "VI",
            Solver::Si1 => "SI1",
            Solver::Si0 => "SI0",
        }
    }

    pub fn from_name(name: &str) -> Option<Solver> {
        Solver::ALL.into_iter().find(|s| s.name().eq_ignore_ascii_case(name))
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// States per instance.
    pub n: usize,
    /// Edge probability.
    pub p: f64,
    /// Weight bound; weights are uniform in `[-w, w]`.
    pub w: i64,
    /// Seed; instance `i` uses stream `i` of this seed.
    pub seed: u64,
    /// Number of instances.
    pub runs: usize,
    /// Solvers to race, in the order their columns appear.
    pub solvers: Vec<Solver>,
    /// Parallel workers.
    pub workers: usize,
    /// Where disagreement dumps land.
    pub dump_dir: PathBuf,
}

impl BenchConfig {
    /// A config with the standard random-game model: `p = 2/n`, `W = n`,
    /// all solvers, and the worker count from the `MVSI_WORKERS`
    /// environment variable (default 1).
    pub fn new(n: usize, seed: u64, runs: usize) -> Result<BenchConfig> {
        let cfg = BenchConfig {
            n,
            p: 2.0 / n as f64,
            w: n as i64,
            seed,
            runs,
            solvers: Solver::ALL.to_vec(),
            workers: std::env::var("MVSI_WORKERS")
                .ok()
                .and_then(|v| v.parse().ok())
                .unwrap_or(1),
            dump_dir: std::env::temp_dir(),
        };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidModel(msg.into()));
        if self.n < 2 {
            return bad("benchmark games need at least two states");
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return bad("edge probability must lie in (0, 1]");
        }
        if self.w < 1 {
            return bad("the weight bound must be at least one");
        }
        if self.runs < 1 {
            return bad("a benchmark needs at least one run");
        }
        if self.solvers.is_empty() {
            return bad("a benchmark needs at least one solver");
        }
        if self.workers < 1 {
            return bad("the worker count must be at least one");
        }
        Ok(())
    }

    /// The game of instance `index`, recomputable in isolation.
    pub fn instance(&self, index: usize) -> EnergyGame {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        gen::energy_game(&mut rng, self.n, self.p, self.w)
    }
}

/// One solver's run on one instance. `iterations` is the solver's natural
/// step count — Kleene rounds, value-iteration raises, or improvement
/// rounds of the strategy loop (the initial solve is setup, not an
/// iteration) — and is `None` for the transformation-only entry.
#[derive(Debug, Clone)]
pub struct SolverCell {
    pub micros: u128,
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct InstanceRow {
    pub index: usize,
    pub cells: BTreeMap<Solver, SolverCell>,
    /// The agreed values (from the first value-producing solver).
    pub values: BTreeMap<Pos, Energy>,
    pub all_finite: bool,
    /// `∏|options|` over Player-0 strategies of the transformed game.
    pub bound_si0: u128,
    /// `∏|options|` over Player-1 strategies of the transformed game.
    pub bound_si1: u128,
}

#[derive(Debug)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub rows: Vec<InstanceRow>,
    /// True iff every instance's value-producing solvers agreed (a run
    /// only completes with this set; disagreements abort).
    pub agreement: bool,
}

/// Runs the full benchmark. On solver disagreement the offending game is
/// written to the dump directory and the run aborts with a soundness
/// error naming the file.
pub fn bench(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.check()?;
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<InstanceRow>>>> = Mutex::new(vec![None; cfg.runs]);
    std::thread::scope(|scope| {
        for _ in 0..cfg.workers.min(cfg.runs) {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                if index >= cfg.runs {
                    return;
                }
                let row = run_instance(cfg, index);
                slots.lock().expect("no panics while locked")[index] = Some(row);
            });
        }
    });
    let mut rows = Vec::with_capacity(cfg.runs);
    for slot in slots.into_inner().expect("workers joined") {
        rows.push(slot.expect("every index was claimed")?);
    }
    Ok(BenchReport { config: cfg.clone(), rows, agreement: true })
}

fn run_instance(cfg: &BenchConfig, index: usize) -> Result<InstanceRow> {
    let game = cfg.instance(index);
    let mut cells = BTreeMap::new();
    let mut outcomes: Vec<(Solver, BTreeMap<Pos, Energy>)> = Vec::new();
    for &solver in &cfg.solvers {
        let start = Instant::now();
        let (values, iterations) = match solver {
            Solver::Tf => {
                game.transform_finite()?;
                (None, None)
            }
            Solver::Kle => {
                let sol = game.solve_kleene()?;
                (Some(sol.values), Some(sol.steps))
            }
            Solver::Vi => {
                let sol = game.solve_value_iteration()?;
                (Some(sol.values), Some(sol.steps))
            }
            Solver::Si1 => {
                let out = game.solve_below()?;
                let rounds = out.trace.updates();
                (Some(out.values), Some(rounds))
            }
            Solver::Si0 => {
                let out = game.solve_above()?;
                let rounds = out.trace.updates();
                (Some(out.values), Some(rounds))
            }
        };
        let micros = start.elapsed().as_micros();
        cells.insert(solver, SolverCell { micros, iterations });
        if let Some(values) = values {
            outcomes.push((solver, values));
        }
    }
    if let Some((first, rest)) = outcomes.split_first() {
        if let Some(culprit) = rest.iter().find(|(_, values)| *values != first.1) {
            let path = dump_disagreement(cfg, index, &game, &outcomes);
            return Err(Error::Soundness(format!(
                "{} and {} disagree on instance {index}; game dumped to {}",
                first.0.name(),
                culprit.0.name(),
                path.display(),
            )));
        }
    }
    let (t, _, k, _) = game.transform_finite()?;
    let values = outcomes.into_iter().next().map(|(_, v)| v).unwrap_or_default();
    let all_finite = values.values().all(|e| *e != Energy::Inf);
    Ok(InstanceRow {
        index,
        cells,
        values,
        all_finite,
        bound_si0: t.min_decomposition(k)?.strategy_count(),
        bound_si1: t.max_decomposition(k)?.strategy_count(),
    })
}

/// Writes the game with the conflicting values as comments; the file
/// still parses as a plain energy game.
fn dump_disagreement(
    cfg: &BenchConfig,
    index: usize,
    game: &EnergyGame,
    outcomes: &[(Solver, BTreeMap<Pos, Energy>)],
) -> PathBuf {
    let mut text = format!(
        "# solver disagreement: n={} p={} w={} seed={} instance={}\n",
        cfg.n, cfg.p, cfg.w, cfg.seed, index
    );
    for (solver, values) in outcomes {
        let rendered = values
            .iter()
            .map(|(v, e)| format!("{v}={e}"))
            .collect::<Vec<_>>()
            .join(" ");
        let _ = writeln!(text, "# {}: {rendered}", solver.name());
    }
    text.push_str(&emit_energy(game));
    let path = cfg.dump_dir.join(format!("mvsi-disagreement-{}-{index}.eg", cfg.seed));
    // A failed dump must not mask the disagreement itself.
    let _ = std::fs::write(&path, text);
    path
}

impl BenchReport {
    /// Cumulative time and iterations per solver.
    pub fn totals(&self) -> BTreeMap<Solver, SolverCell> {
        let mut totals: BTreeMap<Solver, SolverCell> = BTreeMap::new();
        for row in &self.rows {
            for (&solver, cell) in &row.cells {
                let entry = totals
                    .entry(solver)
                    .or_insert(SolverCell { micros: 0, iterations: None });
                entry.micros += cell.micros;
                if let Some(i) = cell.iterations {
                    *entry.iterations.get_or_insert(0) += i;
                }
            }
        }
        totals
    }

    /// The aligned summary table.
    pub fn table(&self) -> String {
        let cfg = &self.config;
        let mut out = format!(
            "n={} p={:.4} W={} seed={} runs={} agreement={}\n",
            cfg.n,
            cfg.p,
            cfg.w,
            cfg.seed,
            cfg.runs,
            if self.agreement { "yes" } else { "no" }
        );
        let _ = writeln!(out, "{:<8}{:>14}{:>14}", "solver", "time(ms)", "iterations");
        let totals = self.totals();
        for &solver in &cfg.solvers {
            let cell = &totals[&solver];
            let iterations =
                cell.iterations.map_or_else(|| "-".into(), |i| i.to_string());
            let _ = writeln!(
                out,
                "{:<8}{:>14.3}{:>14}",
                solver.name(),
                cell.micros as f64 / 1000.0,
                iterations
            );
        }
        out
    }

    /// One CSV line per instance and solver; everything but `micros` is
    /// deterministic for a fixed config.
    pub fn csv(&self) -> String {
        let mut out = String::from("index,solver,micros,iterations,bound,finite,agree\n");
        for row in &self.rows {
            for &solver in &self.config.solvers {
                let cell = &row.cells[&solver];
                let bound = match solver {
                    Solver::Si0 => row.bound_si0.to_string(),
                    Solver::Si1 => row.bound_si1.to_string(),
                    _ => String::new(),
                };
                let iterations =
                    cell.iterations.map_or_else(String::new, |i| i.to_string());
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    row.index,
                    solver.name(),
                    cell.micros,
                    iterations,
                    bound,
                    row.all_finite,
                    self.agreement
                );
            }
        }
        out
    }
}
