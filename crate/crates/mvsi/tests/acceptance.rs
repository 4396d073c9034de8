//! Acceptance gate: twelve end-to-end checks, one test and one printed
//! pass/fail line each. All comparisons are exact — values, strategies and
//! traces must match with zero tolerance.
//!
//! One golden value is deliberately red: the first clause of check 05 pins
//! the one-step metric value at the pair (s,t) to 1/4, which the lifting
//! definitions themselves contradict (the Kantorovich table at that input
//! forces 1/2). The pinned expectation is kept as stated and the check is
//! allowed to fail rather than weakening it; the other clauses of 05 pass.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mvsi::approx::{nu_approx, nu_star};
use mvsi::assign::{Assignment, PosSet};
use mvsi::bench::{bench, BenchConfig, BenchReport, Solver};
use mvsi::chain::{rat, Chain, Value};
use mvsi::energy::{Energy, EnergyGame};
use mvsi::gen;
use mvsi::pa::{self, Pa};
use mvsi::pos::Pos;
use mvsi::ssg::{Ssg, StateData};
use mvsi::strategy::{
    brute_force_mu, kleene_least_fixpoint, max_improve_stable, DecompKind, SiOptions, Strategy,
};
use mvsi::term::{Dist, FunTerm};

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn report(number: usize, what: &str, outcome: Result<(), String>) {
    match &outcome {
        Ok(()) => println!("acceptance {number:02}: PASS - {what}"),
        Err(e) => println!("acceptance {number:02}: FAIL - {what}: {e}"),
    }
    if let Err(e) = outcome {
        panic!("acceptance {number:02} failed: {e}");
    }
}

fn p(name: &str) -> Pos {
    Pos::new(name)
}

fn uv(numer: i64, denom: i64) -> Value {
    Value::unit(rat(numer, denom)).unwrap()
}

fn unit_assignment(entries: &[(&str, i64, i64)]) -> Assignment {
    Assignment::new(Chain::Unit, entries.iter().map(|(s, n, d)| (p(s), uv(*n, *d)))).unwrap()
}

fn moves(pairs: &[(&str, &str)]) -> BTreeMap<Pos, Pos> {
    pairs.iter().map(|(a, b)| (p(a), p(b))).collect()
}

fn energies(entries: &[(&str, Energy)]) -> BTreeMap<Pos, Energy> {
    entries.iter().map(|(s, e)| (p(s), *e)).collect()
}

/// The probabilistic cycle: an averaging state feeding back into one state
/// per player, with sinks at payoff 1 and 1/4. Every constant between the
/// sink payoffs solves the one-step equations.
fn cycle_game() -> Ssg {
    Ssg::new([
        (p("1"), StateData::Sink(rat(1, 1))),
        (p("eps"), StateData::Sink(rat(1, 4))),
        (p("av"), StateData::Av([(p("min"), rat(1, 2)), (p("max"), rat(1, 2))].into())),
        (p("max"), StateData::Max(vec![p("eps"), p("av")])),
        (p("min"), StateData::Min(vec![p("1"), p("av")])),
    ])
    .unwrap()
}

/// Two max states chained towards a payoff-1 sink, each with a self-loop.
fn loopy_game() -> Ssg {
    Ssg::new([
        (p("1"), StateData::Sink(rat(1, 1))),
        (p("max1"), StateData::Max(vec![p("1"), p("max1")])),
        (p("max2"), StateData::Max(vec![p("max1"), p("max2")])),
    ])
    .unwrap()
}

/// The finite-valued tug of war: Player 0 owns u, v; Player 1 owns x, y.
fn tug_of_war() -> EnergyGame {
    EnergyGame::new(
        [p("u"), p("v")],
        [p("x"), p("y")],
        [
            (p("x"), p("u"), -12),
            (p("u"), p("x"), 16),
            (p("v"), p("u"), -8),
            (p("u"), p("u"), 0),
            (p("v"), p("v"), -2),
            (p("x"), p("y"), -1),
            (p("y"), p("x"), 1),
            (p("y"), p("v"), -9),
            (p("v"), p("y"), 8),
        ],
    )
    .unwrap()
}

/// Player 1's pair x,y loops at total weight -1; u can only wait at -1 per
/// step; v escapes through z at finite cost.
fn trap_game() -> EnergyGame {
    EnergyGame::new(
        [p("u"), p("v")],
        [p("x"), p("y"), p("z")],
        [
            (p("u"), p("u"), -1),
            (p("z"), p("v"), 4),
            (p("v"), p("z"), -3),
            (p("x"), p("y"), 2),
            (p("y"), p("x"), -3),
            (p("x"), p("u"), -4),
            (p("v"), p("x"), 2),
        ],
    )
    .unwrap()
}

/// Two coin-flipping states that can also defer to one another, plus an
/// absorbing anchor under a different label.
fn coin_pa() -> Pa {
    let coin = |a: &str, b: &str| -> Dist { [(p(a), rat(1, 2)), (p(b), rat(1, 2))].into() };
    let point = |a: &str| -> Dist { [(p(a), rat(1, 1))].into() };
    Pa::new([
        (p("s"), "a".to_string(), vec![coin("s", "u"), point("t")]),
        (p("t"), "a".to_string(), vec![coin("t", "u"), point("s")]),
        (p("u"), "b".to_string(), vec![point("u")]),
    ])
    .unwrap()
}

#[test]
fn a01_ssg_cycle_golden() {
    report(1, "cyclic game golden values and traces", (|| {
        let game = cycle_game();
        let expected = unit_assignment(&[
            ("1", 1, 1),
            ("eps", 1, 4),
            ("av", 1, 4),
            ("max", 1, 4),
            ("min", 1, 4),
        ]);

        let above = game.solve_above(&SiOptions::default()).map_err(|e| e.to_string())?;
        ensure!(above.mu == expected, "from-above values {} != {expected}", above.mu);
        let skips: Vec<_> = above.trace.steps.iter().filter_map(|s| s.skip.as_ref()).collect();
        ensure!(skips.len() == 1, "from-above skipped {} times, expected exactly 1", skips.len());
        let cycle: PosSet = [p("min"), p("av"), p("max")].into();
        ensure!(
            skips[0].cycle == cycle,
            "vicious cycle {:?} != {{min, av, max}}",
            skips[0].cycle
        );

        let below = game.solve_below(&SiOptions::default()).map_err(|e| e.to_string())?;
        ensure!(below.mu == expected, "from-below values {} != {expected}", below.mu);
        ensure!(
            below.trace.visits() == 2,
            "from-below visited {} strategies, expected 2",
            below.trace.visits()
        );
        let visited: Vec<BTreeMap<Pos, Pos>> = below
            .trace
            .steps
            .iter()
            .map(|s| game.choices(DecompKind::Max, &s.strategy))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        ensure!(
            visited == vec![moves(&[("max", "av")]), moves(&[("max", "eps")])],
            "from-below visited {visited:?}, expected max->av then max->eps"
        );
        Ok(())
    })());
}

#[test]
fn a02_ssg_stability_regression() {
    report(2, "non-stable improvement loses ground, stable gains", (|| {
        let game = loopy_game();
        let dec = game.max_decomposition();

        let c = game
            .strategy_for(DecompKind::Max, &moves(&[("max1", "1"), ("max2", "max2")]))
            .map_err(|e| e.to_string())?;
        let mu_c = game.solve_fixed_max_strategy(&c).map_err(|e| e.to_string())?;
        let expected_c = unit_assignment(&[("1", 1, 1), ("max1", 1, 1), ("max2", 0, 1)]);
        ensure!(mu_c == expected_c, "fixed-strategy values {mu_c} != {expected_c}");

        // Switching both states to max1 picks an arg-max option everywhere,
        // but at max1 the value does not strictly rise: a non-stable
        // improvement. Its fixpoint drops strictly below the incumbent.
        let loose = game
            .strategy_for(DecompKind::Max, &moves(&[("max1", "max1"), ("max2", "max1")]))
            .map_err(|e| e.to_string())?;
        let mu_loose = game.solve_fixed_max_strategy(&loose).map_err(|e| e.to_string())?;
        let expected_loose = unit_assignment(&[("1", 1, 1), ("max1", 0, 1), ("max2", 0, 1)]);
        ensure!(mu_loose == expected_loose, "non-stable values {mu_loose} != {expected_loose}");
        ensure!(
            mu_loose.leq(&mu_c).map_err(|e| e.to_string())? && mu_loose != mu_c,
            "non-stable fixpoint {mu_loose} is not strictly below {mu_c}"
        );

        let stable = max_improve_stable(&dec, &c, &mu_c)
            .map_err(|e| e.to_string())?
            .ok_or("stable improvement found nothing to improve")?;
        let stable_moves = game.choices(DecompKind::Max, &stable).map_err(|e| e.to_string())?;
        ensure!(
            stable_moves == moves(&[("max1", "1"), ("max2", "max1")]),
            "stable improvement chose {stable_moves:?}"
        );
        let mu_stable = game.solve_fixed_max_strategy(&stable).map_err(|e| e.to_string())?;
        let all_one = unit_assignment(&[("1", 1, 1), ("max1", 1, 1), ("max2", 1, 1)]);
        ensure!(mu_stable == all_one, "stable improvement values {mu_stable} != all-1");
        Ok(())
    })());
}

#[test]
fn a03_energy_tug_of_war_golden() {
    report(3, "all four energy solvers and both strategies", (|| {
        let game = tug_of_war();
        let expected = energies(&[
            ("u", Energy::Fin(0)),
            ("v", Energy::Fin(8)),
            ("x", Energy::Fin(18)),
            ("y", Energy::Fin(17)),
        ]);

        let kleene = game.solve_kleene().map_err(|e| e.to_string())?;
        ensure!(kleene.values == expected, "ascending iteration got {:?}", kleene.values);
        let vi = game.solve_value_iteration().map_err(|e| e.to_string())?;
        ensure!(vi.values == expected, "value iteration got {:?}", vi.values);

        let above = game.solve_above().map_err(|e| e.to_string())?;
        ensure!(above.values == expected, "from-above got {:?}", above.values);
        ensure!(
            above.moves == moves(&[("u", "u"), ("v", "u")]),
            "Player-0 strategy {:?}, expected u->u, v->u",
            above.moves
        );

        let below = game.solve_below().map_err(|e| e.to_string())?;
        ensure!(below.values == expected, "from-below got {:?}", below.values);
        ensure!(
            below.moves == moves(&[("x", "y"), ("y", "v")]),
            "Player-1 strategy {:?}, expected x->y, y->v",
            below.moves
        );
        Ok(())
    })());
}

#[test]
fn a04_energy_transformation_golden() {
    report(4, "negative-cycle removal and threshold reconstruction", (|| {
        let game = trap_game();
        let (_, removed, _, _) = game.transform_finite().map_err(|e| e.to_string())?;
        let expected_removed: PosSet = [p("x"), p("y")].into();
        ensure!(removed == expected_removed, "removed {removed:?}, expected {{x, y}}");

        let solved = game.solve_kleene().map_err(|e| e.to_string())?;
        let expected = energies(&[
            ("u", Energy::Inf),
            ("v", Energy::Fin(3)),
            ("x", Energy::Inf),
            ("y", Energy::Inf),
            ("z", Energy::Fin(0)),
        ]);
        ensure!(solved.values == expected, "values {:?} != {expected:?}", solved.values);
        // u survives the transformation, so its infinity must come from the
        // reconstruction threshold, not from removal.
        ensure!(!removed.contains(&p("u")), "u was removed; its infinity must be thresholded");
        Ok(())
    })());
}

#[test]
fn a05_pa_coin_golden() {
    report(5, "coin automaton one-step value, lifting and distances", (|| {
        let automaton = coin_pa();
        let mut entries: Vec<(Pos, Value)> = Vec::new();
        for (s, t) in automaton.pair_domain() {
            let v = if s == t {
                uv(0, 1)
            } else if (s.as_str(), t.as_str()) == ("s", "t")
                || (s.as_str(), t.as_str()) == ("t", "s")
            {
                uv(1, 2)
            } else {
                uv(1, 1)
            };
            entries.push((Pos::pair(&s, &t), v));
        }
        let d = Assignment::new(Chain::Unit, entries).unwrap();
        let mut failures: Vec<String> = Vec::new();

        // One-step operator at d, read off at (s,t). The pinned golden
        // value is 1/4; the closed form over the Kantorovich table yields
        // 1/2, so this clause is expected to stay red.
        match automaton.metric_step(&d) {
            Ok(stepped) => {
                let at_st = stepped.get(&Pos::pair(&p("s"), &p("t"))).cloned();
                if at_st != Some(uv(1, 4)) {
                    failures.push(format!(
                        "one-step value at (s,t) is {}, pinned expectation 1/4",
                        at_st.map_or("missing".into(), |v| v.to_string())
                    ));
                }
            }
            Err(e) => failures.push(format!("one-step operator failed: {e}")),
        }

        let beta1 = automaton.dists(&p("s"))[0].clone();
        let beta1p = automaton.dists(&p("t"))[0].clone();
        match pa::kantorovich(&d, &beta1, &beta1p) {
            Ok((value, plan)) => {
                if value != uv(1, 4) {
                    failures.push(format!("lifted distance of the coins is {value}, expected 1/4"));
                }
                let diagonal = vec![vec![rat(1, 2), rat(0, 1)], vec![rat(0, 1), rat(1, 2)]];
                if plan != diagonal {
                    failures.push(format!("optimal plan {plan:?}, expected the diagonal plan"));
                }
            }
            Err(e) => failures.push(format!("lifting failed: {e}")),
        }

        match automaton.solve_above() {
            Ok(result) => {
                let expected = Assignment::new(
                    Chain::Unit,
                    automaton.pair_domain().into_iter().map(|(s, t)| {
                        let v = if s == t || s.as_str() != "u" && t.as_str() != "u" {
                            uv(0, 1)
                        } else {
                            uv(1, 1)
                        };
                        (Pos::pair(&s, &t), v)
                    }),
                )
                .unwrap();
                if result.mu != expected {
                    failures.push(format!("distances {} != {expected}", result.mu));
                }
            }
            Err(e) => failures.push(format!("iteration failed: {e}")),
        }

        ensure!(failures.is_empty(), "{}", failures.join("; "));
        Ok(())
    })());
}

#[test]
fn a06_brute_force_oracle_equivalence() {
    report(6, "strategy enumeration agrees with both iterations", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(60601);
        for round in 0..100 {
            let n = rng.gen_range(2..=6);
            let game = gen::ssg(&mut rng, n);
            let min_dec = game.min_decomposition();
            let max_dec = game.max_decomposition();
            let mut min_solver =
                |c: &Strategy, _f: &FunTerm| game.solve_fixed_min_strategy(c);
            let mut max_solver =
                |c: &Strategy, _f: &FunTerm| game.solve_fixed_max_strategy(c);
            let brute_min =
                brute_force_mu(&min_dec, &mut min_solver).map_err(|e| e.to_string())?;
            let brute_max =
                brute_force_mu(&max_dec, &mut max_solver).map_err(|e| e.to_string())?;
            let above = game.solve_above(&SiOptions::default()).map_err(|e| e.to_string())?;
            let below = game.solve_below(&SiOptions::default()).map_err(|e| e.to_string())?;
            ensure!(
                above.mu == brute_min,
                "game {round}: from-above {} != enumerated min {brute_min}",
                above.mu
            );
            ensure!(
                below.mu == brute_min,
                "game {round}: from-below {} != enumerated min {brute_min}",
                below.mu
            );
            ensure!(
                brute_max == brute_min,
                "game {round}: enumerated max {brute_max} != enumerated min {brute_min}"
            );
        }

        let mut rng = ChaCha8Rng::seed_from_u64(60602);
        for round in 0..100 {
            let n = rng.gen_range(2..=6);
            let w = rng.gen_range(1..=3);
            let game = gen::energy_game(&mut rng, n, 2.0 / n as f64, w);
            let (transformed, removed, k, threshold) =
                game.transform_finite().map_err(|e| e.to_string())?;
            let chain = Chain::finite(k).map_err(|e| e.to_string())?;
            let iters = (k as usize + 2) * transformed.state_count() + 2;
            let mut solver = |_c: &Strategy, f: &FunTerm| kleene_least_fixpoint(f, chain, iters);
            let min_dec = transformed.min_decomposition(k).map_err(|e| e.to_string())?;
            let max_dec = transformed.max_decomposition(k).map_err(|e| e.to_string())?;
            let brute_min = brute_force_mu(&min_dec, &mut solver).map_err(|e| e.to_string())?;
            let brute_max = brute_force_mu(&max_dec, &mut solver).map_err(|e| e.to_string())?;
            let rec_min =
                game.reconstruct(&brute_min, &removed, threshold).map_err(|e| e.to_string())?;
            let rec_max =
                game.reconstruct(&brute_max, &removed, threshold).map_err(|e| e.to_string())?;
            let above = game.solve_above().map_err(|e| e.to_string())?;
            let below = game.solve_below().map_err(|e| e.to_string())?;
            ensure!(
                above.values == rec_min,
                "energy game {round}: from-above {:?} != enumerated min {rec_min:?}",
                above.values
            );
            ensure!(
                below.values == rec_min,
                "energy game {round}: from-below {:?} != enumerated min {rec_min:?}",
                below.values
            );
            ensure!(
                rec_max == rec_min,
                "energy game {round}: enumerated max {rec_max:?} != enumerated min {rec_min:?}"
            );
        }
        Ok(())
    })());
}

/// The two benchmark batches shared by checks 07 and 12: 200 random games
/// at n <= 10, W <= 10, run through every solver.
fn shared_reports() -> &'static Vec<BenchReport> {
    static REPORTS: OnceLock<Vec<BenchReport>> = OnceLock::new();
    REPORTS.get_or_init(|| {
        let configs =
            [BenchConfig::new(6, 70601, 100).unwrap(), BenchConfig::new(10, 70602, 100).unwrap()];
        configs.iter().map(|cfg| bench(cfg).expect("benchmark batch completes")).collect()
    })
}

#[test]
fn a07_cross_solver_equivalence() {
    report(7, "Kleene, value iteration and both strategy iterations agree", (|| {
        let mut finite = 0usize;
        for report in shared_reports() {
            ensure!(
                report.agreement,
                "solvers disagreed in the n={} batch",
                report.config.n
            );
            ensure!(
                report.rows.len() == report.config.runs,
                "batch produced {} rows for {} runs",
                report.rows.len(),
                report.config.runs
            );
            finite += report.rows.iter().filter(|r| r.all_finite).count();
        }
        ensure!(finite > 0, "no finite-valued instances in 200 draws");
        Ok(())
    })());
}

#[test]
fn a08_least_fixpoint_check_characterizes() {
    report(8, "emptiness of the fixpoint check marks exactly the least one", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(80801);
        let mut fixpoints = 0usize;
        let mut least = 0usize;
        let mut starred_empty = 0usize;
        let mut starred_nonempty = 0usize;
        for round in 0..100 {
            let kind = if round % 2 == 0 { DecompKind::Min } else { DecompKind::Max };
            let n = rng.gen_range(2..=4);
            let k = rng.gen_range(1..=4);
            let max_options = rng.gen_range(1..=3);
            let dec = gen::decomposition(&mut rng, kind, n, k, max_options)
                .map_err(|e| e.to_string())?;
            let chain = Chain::finite(k).map_err(|e| e.to_string())?;
            let f = dec.induced_function().map_err(|e| e.to_string())?;
            let iters = n * k as usize + 4;
            let mu = kleene_least_fixpoint(&f, chain, iters).map_err(|e| e.to_string())?;

            for c in dec.strategies() {
                let restricted = dec.restrict(&c).map_err(|e| e.to_string())?;
                let a = kleene_least_fixpoint(&restricted, chain, iters)
                    .map_err(|e| e.to_string())?;
                if f.evaluate(&a).map_err(|e| e.to_string())? != a {
                    continue;
                }
                fixpoints += 1;
                let check = nu_approx(&f, &a).map_err(|e| e.to_string())?;
                if check.is_empty() {
                    least += 1;
                }
                ensure!(
                    check.is_empty() == (a == mu),
                    "round {round}: check {check:?} at fixpoint {a} (least is {mu})"
                );
            }

            // Post-fixpoints via meet-descent: iterating a -> a /\ f(a)
            // stabilizes at some a <= f(a). An empty starred check proves
            // the result sits below the least fixpoint (one direction only;
            // the check is sound, not complete).
            let top = Value::finite(k, k).map_err(|e| e.to_string())?;
            let domain = dec.positions();
            let top_all = Assignment::new(chain, domain.iter().map(|p| (p.clone(), top.clone())))
                .map_err(|e| e.to_string())?;
            let random = gen::assignment(&mut rng, chain, &domain);
            for seed in [Assignment::zeros(chain, domain), top_all, random] {
                let mut a = seed;
                loop {
                    let fa = f.evaluate(&a).map_err(|e| e.to_string())?;
                    let next = a.meet(&fa).map_err(|e| e.to_string())?;
                    if next == a {
                        break;
                    }
                    a = next;
                }
                let starred = nu_star(&f, &a).map_err(|e| e.to_string())?;
                if starred.is_empty() {
                    ensure!(
                        a.leq(&mu).map_err(|e| e.to_string())?,
                        "round {round}: starred check empty at {a} above the least fixpoint {mu}"
                    );
                    starred_empty += 1;
                } else {
                    starred_nonempty += 1;
                }
            }
        }
        ensure!(fixpoints > 0, "no strategy-induced fixpoints were exercised");
        ensure!(least > 0 && least < fixpoints, "only one side exercised: {least}/{fixpoints}");
        ensure!(
            starred_empty > 0 && starred_nonempty > 0,
            "starred check never fired one way: {starred_empty} empty / {starred_nonempty} not"
        );
        Ok(())
    })());
}

#[test]
fn a09_nonexpansiveness_suite() {
    report(9, "every combinator is non-expansive on random inputs", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(90901);
        for trial in 0..10_000u64 {
            let finite = trial % 2 == 1;
            let k = 1 + (trial / 2) % 5;
            let chain =
                if finite { Chain::finite(k).map_err(|e| e.to_string())? } else { Chain::Unit };
            let m = 2 + (trial % 3) as usize;
            let names: Vec<Pos> = (0..m).map(|i| Pos::new(format!("y{i}"))).collect();
            let domain: PosSet = names.iter().cloned().collect();
            let f = build_term(&mut rng, chain, &names, (trial / 2) % 7)
                .map_err(|e| e.to_string())?;

            let a = gen::assignment(&mut rng, chain, &domain);
            let b = gen::assignment(&mut rng, chain, &domain);
            let fa = f.evaluate(&a).map_err(|e| e.to_string())?;
            let fb = f.evaluate(&b).map_err(|e| e.to_string())?;
            let lhs = fb.ominus(&fa).map_err(|e| e.to_string())?;
            let rhs = b.ominus(&a).map_err(|e| e.to_string())?;
            let ln = lhs.norm().map_err(|e| e.to_string())?;
            let rn = rhs.norm().map_err(|e| e.to_string())?;
            ensure!(
                ln.leq(&rn),
                "trial {trial}: output moved by {ln}, input only by {rn} ({f:?})"
            );
        }
        Ok(())
    })());
}

/// One random term per constructor shape over the given domain.
fn build_term(
    rng: &mut ChaCha8Rng,
    chain: Chain,
    names: &[Pos],
    shape: u64,
) -> Result<FunTerm, mvsi::error::Error> {
    let subset = |rng: &mut ChaCha8Rng| -> PosSet {
        let size = rng.gen_range(1..=names.len());
        let mut pool = names.to_vec();
        let mut out = PosSet::new();
        for _ in 0..size {
            out.insert(pool.remove(rng.gen_range(0..pool.len())));
        }
        out
    };
    let pick = |rng: &mut ChaCha8Rng| names[rng.gen_range(0..names.len())].clone();
    let outs: Vec<Pos> = (0..2).map(|i| Pos::new(format!("z{i}"))).collect();
    match shape {
        0 => {
            let domain: PosSet = outs.iter().cloned().collect();
            Ok(FunTerm::constant(gen::assignment(rng, chain, &domain)))
        }
        1 => Ok(FunTerm::reindex(outs.iter().map(|z| (z.clone(), pick(rng))))),
        2 => FunTerm::min_rel(outs.iter().map(|z| (z.clone(), subset(rng)))),
        3 => FunTerm::max_rel(outs.iter().map(|z| (z.clone(), subset(rng)))),
        4 => match chain {
            Chain::Unit => {
                FunTerm::average(outs.iter().map(|z| (z.clone(), gen::dist(rng, names, 3))))
            }
            Chain::Finite(k) => FunTerm::sub_weight(
                names.iter().map(|y| (y.clone(), rng.gen_range(-3..=3))),
                k,
            ),
        },
        5 => {
            let mids: Vec<Pos> = (0..2).map(|i| Pos::new(format!("w{i}"))).collect();
            let inner = FunTerm::reindex(mids.iter().map(|w| (w.clone(), pick(rng))));
            let mid_set: PosSet = mids.into_iter().collect();
            let outer = FunTerm::min_rel([(outs[0].clone(), mid_set)])?;
            FunTerm::compose(outer, inner)
        }
        _ => FunTerm::disjoint_union([
            FunTerm::min_rel([(outs[0].clone(), subset(rng))])?,
            FunTerm::max_rel([(outs[1].clone(), subset(rng))])?,
            FunTerm::reindex([(Pos::new("z2"), pick(rng))]),
        ]),
    }
}

#[test]
fn a10_transport_lp_equals_vertex_enumeration() {
    report(10, "transport value matches the minimum over polytope vertices", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(101001);
        let mut pairs = 0usize;
        let mut widest = 0usize;
        for round in 0..50 {
            let n = rng.gen_range(2..=5);
            let automaton = gen::pa(&mut rng, n, 2, 4);
            let pair_set: PosSet =
                automaton.pair_domain().iter().map(|(s, t)| Pos::pair(s, t)).collect();
            let d = gen::assignment(&mut rng, Chain::Unit, &pair_set);
            let dists: Vec<Dist> = automaton
                .states()
                .iter()
                .flat_map(|s| automaton.dists(s).to_vec())
                .collect();
            for beta in &dists {
                for gamma in &dists {
                    let (value, plan) =
                        pa::kantorovich(&d, beta, gamma).map_err(|e| e.to_string())?;
                    let Value::Unit(value) = value else {
                        return Err("transport value off the unit chain".into());
                    };
                    let mu: Vec<BigRational> = beta.values().cloned().collect();
                    let nu: Vec<BigRational> = gamma.values().cloned().collect();
                    let cost: Vec<Vec<BigRational>> = beta
                        .keys()
                        .map(|s| {
                            gamma
                                .keys()
                                .map(|t|

                                    match d.get(&Pos::pair(s, t)) {
                                        Some(Value::Unit(q)) => Ok(q.clone()),
                                        _ => Err(format!("no distance for ({s},{t})")),
                                    })
                                .collect::<Result<_, String>>()
                        })
                        .collect::<Result<_, String>>()?;

                    let plan_cost = |plan: &Vec<Vec<BigRational>>| -> BigRational {
                        plan.iter()
                            .zip(&cost)
                            .flat_map(|(pr, cr)| pr.iter().zip(cr).map(|(m, c)| m * c))
                            .sum()
                    };
                    let best = mvsi::transport::vertices(&mu, &nu)
                        .map_err(|e| e.to_string())?
                        .iter()
                        .map(plan_cost)
                        .min()
                        .ok_or("no vertices enumerated")?;
                    ensure!(
                        best == value,
                        "round {round}: vertex minimum {best} != transport value {value}"
                    );
                    for (i, row) in plan.iter().enumerate() {
                        let sum: BigRational = row.iter().sum();
                        ensure!(sum == mu[i], "round {round}: row {i} sums to {sum}, not {}", mu[i]);
                    }
                    for j in 0..nu.len() {
                        let sum: BigRational = plan.iter().map(|row| row[j].clone()).sum();
                        ensure!(
                            sum == nu[j],
                            "round {round}: column {j} sums to {sum}, not {}",
                            nu[j]
                        );
                    }
                    ensure!(
                        plan_cost(&plan) == value,
                        "round {round}: returned plan does not attain the optimum"
                    );
                    pairs += 1;
                    widest = widest.max(beta.len()).max(gamma.len());
                }
            }
        }
        ensure!(pairs >= 100, "only {pairs} distribution pairs exercised");
        ensure!(widest == 4, "widest support seen was {widest}, expected 4");
        Ok(())
    })());
}

#[test]
fn a11_hausdorff_closed_form_equals_brute_force() {
    report(11, "closed-form lifting equals the minimum over set couplings", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(111101);
        let point = |name: String| -> Dist { [(Pos::new(name), rat(1, 1))].into() };
        for round in 0..1000 {
            let nx = rng.gen_range(1..=3);
            let ny = rng.gen_range(1..=3);
            let xs: Vec<Dist> = (0..nx).map(|i| point(format!("h{i}"))).collect();
            let ys: Vec<Dist> = (0..ny).map(|j| point(format!("g{j}"))).collect();
            let mut kvals: BTreeMap<(Dist, Dist), Value> = BTreeMap::new();
            for x in &xs {
                for y in &ys {
                    kvals.insert(
                        (x.clone(), y.clone()),
                        uv(rng.gen_range(0..=6), 6).clone(),
                    );
                }
            }
            let closed = pa::hausdorff(&kvals, &xs, &ys).map_err(|e| e.to_string())?;

            let mut best: Option<Value> = None;
            for coupling in pa::minimal_couplings(nx, ny).map_err(|e| e.to_string())? {
                let worst = coupling
                    .iter()
                    .map(|&(i, j)| kvals[&(xs[i].clone(), ys[j].clone())].clone())
                    .max_by(|a, b| a.cmp_on_chain(b))
                    .ok_or("empty coupling")?;
                best = Some(match best {
                    None => worst,
                    Some(b) if worst.leq(&b) => worst,
                    Some(b) => b,
                });
            }
            let best = best.ok_or("no couplings enumerated")?;
            ensure!(
                closed == best,
                "round {round}: closed form {closed} != coupling minimum {best}"
            );
        }
        Ok(())
    })());
}

#[test]
fn a12_iteration_counts_beat_strategy_bound() {
    report(12, "iteration counts stay under the strategy-space bound", (|| {
        for batch in shared_reports() {
            ensure!(batch.agreement, "solvers disagreed in the n={} batch", batch.config.n);
            for row in &batch.rows {
                for (solver, bound) in
                    [(Solver::Si0, row.bound_si0), (Solver::Si1, row.bound_si1)]
                {
                    let iterations = row.cells[&solver]
                        .iterations
                        .ok_or_else(|| format!("{} reported no iterations", solver.name()))?
                        as u128;
                    ensure!(
                        iterations < bound,
                        "instance {} (n={}): {} took {iterations} iterations, bound {bound}",
                        row.index,
                        batch.config.n,
                        solver.name()
                    );
                }
            }
        }
        Ok(())
    })());
}

// Keep the set-coupling helper honest: a coupling must cover every index on
// both sides, which is what the brute force in check 11 relies on.
#[test]
fn minimal_couplings_have_full_marginals() {
    for (n, m) in [(1, 3), (2, 2), (3, 3)] {
        for coupling in pa::minimal_couplings(n, m).unwrap() {
            let rows: BTreeSet<usize> = coupling.iter().map(|&(i, _)| i).collect();
            let cols: BTreeSet<usize> = coupling.iter().map(|&(_, j)| j).collect();
            assert_eq!(rows.len(), n);
            assert_eq!(cols.len(), m);
        }
    }
}
