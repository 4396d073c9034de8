//! Seeded random instances for tests and benchmarks.
//!
//! Everything here is deterministic in the passed RNG: the same seed
//! produces byte-identical games, which the benchmark harness and the
//! cross-solver suites rely on. Sampling order is part of that contract —
//! owners first, then the edge grid in index order, then the fallback
//! edges — so reordering draws is a breaking change.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::assign::{Assignment, PosSet};
use crate::chain::{rat, Chain, Value};
use crate::energy::{EnergyGame, Player};
use crate::error::Result;
use crate::pa::Pa;
use crate::pos::Pos;
use crate::ssg::{Ssg, StateData};
use crate::strategy::{DecompKind, Decomposition};
use crate::term::{Dist, FunTerm};

/// An Erdős–Rényi energy game: `n` states with uniform owners, each
/// directed edge (self-loops included) present independently with
/// probability `p` and carrying a uniform weight in `[-w, w]`; states left
/// without a successor get one uniformly chosen outgoing edge so the game
/// is well-formed.
pub fn energy_game(rng: &mut ChaCha8Rng, n: usize, p: f64, w: i64) -> EnergyGame {
    let names: Vec<Pos> = (0..n).map(|i| Pos::new(format!("v{i}"))).collect();
    let owners: Vec<Player> = (0..n)
        .map(|_| if rng.gen_bool(0.5) { Player::Zero } else { Player::One })
        .collect();
    let mut edges = Vec::new();
    for from in &names {
        let mut any = false;
        for to in &names {
            if rng.gen_bool(p) {
                edges.push((from.clone(), to.clone(), rng.gen_range(-w..=w)));
                any = true;
            }
        }
        if !any {
            let to = names[rng.gen_range(0..n)].clone();
            edges.push((from.clone(), to, rng.gen_range(-w..=w)));
        }
    }
    let side = |mine: Player| {
        names
            .iter()
            .zip(&owners)
            .filter(|(_, o)| **o == mine)
            .map(|(v, _)| v.clone())
            .collect::<Vec<_>>()
    };
    EnergyGame::new(side(Player::Zero), side(Player::One), edges)
        .expect("generated games are well-formed")
}

/// A random simple stochastic game on `n` states. State `s0` is always a
/// sink so payoffs can enter the game; the rest draw their kind uniformly.
/// Successor lists stay at one or two entries, keeping the full strategy
/// space enumerable for oracle comparisons.
pub fn ssg(rng: &mut ChaCha8Rng, n: usize) -> Ssg {
    assert!(n >= 1, "a game needs at least one state");
    let names: Vec<Pos> = (0..n).map(|i| Pos::new(format!("s{i}"))).collect();
    let states: Vec<(Pos, StateData)> = names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let data = if i == 0 {
                StateData::Sink(rat(rng.gen_range(0..=4), 4))
            } else {
                let kind = rng.gen_range(0..4);
                let count = rng.gen_range(1..=2.min(names.len()));
                match kind {
                    0 => StateData::Sink(rat(rng.gen_range(0..=4), 4)),
                    1 => StateData::Min(pick_distinct(rng, &names, count)),
                    2 => StateData::Max(pick_distinct(rng, &names, count)),
                    _ => {
                        let picks = pick_distinct(rng, &names, count);
                        let mass = rat(1, picks.len() as i64);
                        StateData::Av(picks.into_iter().map(|t| (t, mass.clone())).collect())
                    }
                }
            };
            (name.clone(), data)
        })
        .collect();
    Ssg::new(states).expect("generated games are well-formed")
}

/// A random probabilistic automaton on `n` states with two labels, at most
/// `max_dists` distributions per state and supports of at most
/// `max_support` states.
pub fn pa(rng: &mut ChaCha8Rng, n: usize, max_dists: usize, max_support: usize) -> Pa {
    assert!(n >= 1 && max_dists >= 1 && max_support >= 1);
    let names: Vec<Pos> = (0..n).map(|i| Pos::new(format!("q{i}"))).collect();
    let states: Vec<(Pos, String, Vec<Dist>)> = names
        .iter()
        .map(|name| {
            let label = if rng.gen_bool(0.7) { "a" } else { "b" }.to_string();
            let count = rng.gen_range(1..=max_dists);
            let mut dists: Vec<Dist> = Vec::new();
            while dists.len() < count {
                let d = dist(rng, &names, max_support);
                if !dists.contains(&d) {
                    dists.push(d);
                }
            }
            (name.clone(), label, dists)
        })
        .collect();
    Pa::new(states).expect("generated automata are well-formed")
}

/// A random distribution over up to `max_support` states from the pool,
/// with positive masses of small denominator summing to one.
pub fn dist(rng: &mut ChaCha8Rng, pool: &[Pos], max_support: usize) -> Dist {
    let size = rng.gen_range(1..=max_support.min(pool.len()));
    let picked = pick_distinct(rng, pool, size);
    let weights: Vec<i64> = picked.iter().map(|_| rng.gen_range(1..=4)).collect();
    let total: i64 = weights.iter().sum();
    picked
        .into_iter()
        .zip(weights)
        .map(|(target, weight)| (target, rat(weight, total)))
        .collect()
}

/// A random assignment over `positions` on the given chain; unit-chain
/// values are grid rationals `i/6`.
pub fn assignment(rng: &mut ChaCha8Rng, chain: Chain, positions: &PosSet) -> Assignment {
    Assignment::new(
        chain,
        positions.iter().map(|pos| (pos.clone(), value(rng, chain))),
    )
    .expect("positions are distinct")
}

/// A random value on the chain.
pub fn value(rng: &mut ChaCha8Rng, chain: Chain) -> Value {
    match chain {
        Chain::Unit => Value::unit(rat(rng.gen_range(0..=6), 6)).expect("grid value in range"),
        Chain::Finite(k) => Value::finite(rng.gen_range(0..=k), k).expect("value in range"),
    }
}

/// A random decomposition over `n` positions of the finite chain `{0..k}`,
/// with up to `max_options` options per position drawn from constants,
/// reindexings, min/max over subsets and weight-shifted copies. Every
/// option is an endofunction piece, so induced functions and strategy
/// restrictions can be iterated.
pub fn decomposition(
    rng: &mut ChaCha8Rng,
    kind: DecompKind,
    n: usize,
    k: u64,
    max_options: usize,
) -> Result<Decomposition> {
    assert!(n >= 1 && max_options >= 1);
    let names: Vec<Pos> = (0..n).map(|i| Pos::new(format!("p{i}"))).collect();
    let mut rows = Vec::new();
    for y in &names {
        let count = rng.gen_range(1..=max_options);
        let options = (0..count)
            .map(|_| option_term(rng, y, &names, k))
            .collect::<Result<Vec<_>>>()?;
        rows.push((y.clone(), options));
    }
    Decomposition::new(kind, rows)
}

fn option_term(rng: &mut ChaCha8Rng, y: &Pos, names: &[Pos], k: u64) -> Result<FunTerm> {
    let pick = |rng: &mut ChaCha8Rng| names[rng.gen_range(0..names.len())].clone();
    Ok(match rng.gen_range(0..5) {
        0 => FunTerm::constant(Assignment::new(
            Chain::Finite(k),
            [(y.clone(), Value::finite(rng.gen_range(0..=k), k)?)],
        )?),
        1 => FunTerm::reindex([(y.clone(), pick(rng))]),
        2 => FunTerm::min_rel([(y.clone(), subset(rng, names))])?,
        3 => FunTerm::max_rel([(y.clone(), subset(rng, names))])?,
        _ => {
            let shift = rng.gen_range(-2..=2);
            FunTerm::compose(
                FunTerm::sub_weight([(y.clone(), shift)], k)?,
                FunTerm::reindex([(y.clone(), pick(rng))]),
            )?
        }
    })
}

fn subset(rng: &mut ChaCha8Rng, names: &[Pos]) -> PosSet {
    let size = rng.gen_range(1..=names.len().min(3));
    pick_distinct(rng, names, size).into_iter().collect()
}

/// Exactly `count` distinct uniform picks from the pool.
fn pick_distinct(rng: &mut ChaCha8Rng, pool: &[Pos], count: usize) -> Vec<Pos> {
    let want = count.min(pool.len());
    let mut picked: Vec<Pos> = Vec::new();
    while picked.len() < want {
        let candidate = pool[rng.gen_range(0..pool.len())].clone();
        if !picked.contains(&candidate) {
            picked.push(candidate);
        }
    }
    picked
}
