//! Energy games.
//!
//! Player 0 tries to keep the running sum of edge weights non-negative
//! forever; the solution assigns to each state the minimal sufficient
//! initial credit, which may be infinite. Infinite values are confined by
//! a transformation ([`EnergyGame::transform_finite`]): states from which
//! Player 1 can force a negative cycle on their own are removed, and every
//! Player-0 state gets an emergency exit to a zero-weight sink at a cost
//! so high that taking it is never better than a genuinely finite play.
//! The transformed game is solved over the bounded chain `{0..k}` and the
//! original values are read back through a threshold: anything at or above
//! `n·W` was really infinite.
//!
//! Four solvers are provided: Kleene iteration, a worklist value iteration,
//! and strategy iteration from above (improving Player 0) and from below
//! (improving Player 1), both using value iteration as the inner solver.

use std::collections::BTreeMap;
use std::collections::VecDeque;
use std::fmt;

use crate::assign::{Assignment, PosSet};
use crate::chain::{Chain, Value};
use crate::error::{Error, Result};
use crate::pos::Pos;
use crate::strategy::{
    kleene_with_steps, si_above, si_below, DecompKind, Decomposition, SiOptions, SiResult,
    Strategy, Trace,
};
use crate::term::FunTerm;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Player {
    Zero,
    One,
}

/// A required initial credit: a natural number or infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Energy {
    Fin(u64),
    Inf,
}

impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Energy::Fin(n) => write!(f, "{n}"),
            Energy::Inf => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnergyGame {
    owner: BTreeMap<Pos, Player>,
    edges: BTreeMap<Pos, BTreeMap<Pos, i64>>,
}

impl EnergyGame {
    /// Builds a game from owned state lists and weighted edges. Rejects
    /// overlapping ownership, unknown endpoints, duplicate edges and
    /// states without an outgoing edge.
    pub fn new(
        v0: impl IntoIterator<Item = Pos>,
        v1: impl IntoIterator<Item = Pos>,
        weighted_edges: impl IntoIterator<Item = (Pos, Pos, i64)>,
    ) -> Result<EnergyGame> {
        let mut owner = BTreeMap::new();
        for v in v0 {
            owner.insert(v, Player::Zero);
        }
        for v in v1 {
            if owner.insert(v.clone(), Player::One) == Some(Player::Zero) {
                return Err(Error::InvalidModel(format!("state {v} is owned by both players")));
            }
        }
        if owner.is_empty() {
            return Err(Error::InvalidModel("a game needs at least one state".into()));
        }
        let mut edges: BTreeMap<Pos, BTreeMap<Pos, i64>> =
            owner.keys().map(|v| (v.clone(), BTreeMap::new())).collect();
        for (src, tgt, w) in weighted_edges {
            if !owner.contains_key(&src) {
                return Err(Error::InvalidModel(format!("edge from unknown state {src}")));
            }
            if !owner.contains_key(&tgt) {
                return Err(Error::InvalidModel(format!("edge {src} -> {tgt} to an unknown state")));
            }
            if edges.get_mut(&src).unwrap().insert(tgt.clone(), w).is_some() {
                return Err(Error::InvalidModel(format!("duplicate edge {src} -> {tgt}")));
            }
        }
        for (v, out) in &edges {
            if out.is_empty() {
                return Err(Error::InvalidModel(format!("state {v} has no outgoing edge")));
            }
        }
        Ok(EnergyGame { owner, edges })
    }

    pub fn states(&self) -> PosSet {
        self.owner.keys().cloned().collect()
    }

    pub fn owner(&self, v: &Pos) -> Option<Player> {
        self.owner.get(v).copied()
    }

    pub fn edges_from(&self, v: &Pos) -> impl Iterator<Item = (&Pos, i64)> {
        self.edges.get(v).into_iter().flatten().map(|(t, w)| (t, *w))
    }

    pub fn state_count(&self) -> usize {
        self.owner.len()
    }

    /// Largest absolute edge weight, floored at 1 so that the bound and
    /// threshold stay meaningful on all-zero-weight games.
    pub fn max_abs_weight(&self) -> u64 {
        self.edges
            .values()
            .flat_map(|out| out.values())
            .map(|w| w.unsigned_abs())
            .max()
            .unwrap_or(0)
            .max(1)
    }

    /// The one-step operator over `{0..k}`: each edge reindexes to its
    /// target and subtracts its weight (truncated into the chain), then
    /// each state takes min (Player 0) or max (Player 1) over its edges.
    pub fn energy_term(&self, k: u64) -> Result<FunTerm> {
        let mut reindex = Vec::new();
        let mut weights = Vec::new();
        let mut min_rows: BTreeMap<Pos, PosSet> = BTreeMap::new();
        let mut max_rows: BTreeMap<Pos, PosSet> = BTreeMap::new();
        for (v, out) in &self.edges {
            let mut row = PosSet::new();
            for (tgt, w) in out {
                let e = Pos::edge(v, tgt);
                reindex.push((e.clone(), tgt.clone()));
                weights.push((e.clone(), *w));
                row.insert(e);
            }
            match self.owner[v] {
                Player::Zero => min_rows.insert(v.clone(), row),
                Player::One => max_rows.insert(v.clone(), row),
            };
        }
        let mut parts = Vec::new();
        if !min_rows.is_empty() {
            parts.push(FunTerm::min_rel(min_rows)?);
        }
        if !max_rows.is_empty() {
            parts.push(FunTerm::max_rel(max_rows)?);
        }
        FunTerm::compose(
            FunTerm::disjoint_union(parts)?,
            FunTerm::compose(FunTerm::sub_weight(weights, k)?, FunTerm::reindex(reindex))?,
        )
    }

    /// One option per edge for `mine`'s states (reindex to the target, then
    /// subtract the weight); the other player's states contribute their
    /// whole min/max row as the single option.
    fn decomposition(&self, mine: Player, kind: DecompKind, k: u64) -> Result<Decomposition> {
        let mut options = Vec::new();
        for (v, out) in &self.edges {
            let opts = if self.owner[v] == mine {
                out.iter()
                    .map(|(tgt, w)| edge_option(v.clone(), tgt.clone(), *w, k))
                    .collect::<Result<Vec<_>>>()?
            } else {
                vec![row_option(v, out, self.owner[v], k)?]
            };
            options.push((v.clone(), opts));
        }
        Decomposition::new(kind, options)
    }

    pub fn min_decomposition(&self, k: u64) -> Result<Decomposition> {
        self.decomposition(Player::Zero, DecompKind::Min, k)
    }

    pub fn max_decomposition(&self, k: u64) -> Result<Decomposition> {
        self.decomposition(Player::One, DecompKind::Max, k)
    }

    /// The game with one player's choices fixed: owned states keep only
    /// the strategy's edge.
    fn restrict_game(&self, mine: Player, c: &Strategy) -> Result<EnergyGame> {
        let mut game = self.clone();
        for (v, out) in &self.edges {
            if self.owner[v] != mine {
                continue;
            }
            let i = c
                .get(v)
                .ok_or_else(|| Error::InvalidModel(format!("strategy misses state {v}")))?;
            let (tgt, w) = out
                .iter()
                .nth(i)
                .ok_or_else(|| Error::InvalidModel(format!("strategy index {i} out of range at {v}")))?;
            game.edges.insert(v.clone(), [(tgt.clone(), *w)].into());
        }
        Ok(game)
    }

    /// The successor chosen at each state owned by `mine`.
    pub fn choices(&self, mine: Player, c: &Strategy) -> Result<BTreeMap<Pos, Pos>> {
        let mut moves = BTreeMap::new();
        for (v, out) in &self.edges {
            if self.owner[v] != mine {
                continue;
            }
            let i = c
                .get(v)
                .ok_or_else(|| Error::InvalidModel(format!("strategy misses state {v}")))?;
            let tgt = out
                .keys()
                .nth(i)
                .ok_or_else(|| Error::InvalidModel(format!("strategy index {i} out of range at {v}")))?;
            moves.insert(v.clone(), tgt.clone());
        }
        Ok(moves)
    }

    /// The inverse of [`EnergyGame::choices`]: a strategy picking the given
    /// successor at each state owned by `mine` (other states get their
    /// single option).
    pub fn strategy_for(&self, mine: Player, moves: &BTreeMap<Pos, Pos>) -> Result<Strategy> {
        let mut picks = BTreeMap::new();
        for (v, out) in &self.edges {
            let i = if self.owner[v] == mine {
                let tgt = moves
                    .get(v)
                    .ok_or_else(|| Error::InvalidModel(format!("no move given at {v}")))?;
                out.keys()
                    .position(|t| t == tgt)
                    .ok_or_else(|| Error::InvalidModel(format!("no edge {v} -> {tgt}")))?
            } else {
                0
            };
            picks.insert(v.clone(), i);
        }
        Ok(Strategy::new(picks))
    }

    /// States on, or leading into, a negative cycle that runs entirely
    /// through Player-1 states: min-plus closure on the Player-1 subgraph
    /// (cheapest walks of at most n edges) flags every state on a negative
    /// closed walk, then backward reachability picks up the states that
    /// can steer into one.
    fn negative_own_cycle_states(&self) -> PosSet {
        let v1: Vec<Pos> = self
            .owner
            .iter()
            .filter(|(_, o)| **o == Player::One)
            .map(|(v, _)| v.clone())
            .collect();
        let index: BTreeMap<&Pos, usize> = v1.iter().enumerate().map(|(i, v)| (v, i)).collect();
        let arcs: Vec<(usize, usize, i64)> = v1
            .iter()
            .enumerate()
            .flat_map(|(i, v)| {
                self.edges_from(v)
                    .filter_map(|(t, w)| index.get(t).map(|&j| (i, j, w)))
                    .collect::<Vec<_>>()
            })
            .collect();
        let n = v1.len();
        // step[i][j]: cheapest single arc i -> j.
        let mut step = vec![vec![None::<i64>; n]; n];
        for &(i, j, w) in &arcs {
            if step[i][j].is_none_or(|c| w < c) {
                step[i][j] = Some(w);
            }
        }
        // walk[i][j]: cheapest walk i -> j of at least one and at most n
        // arcs. A negative simple cycle has at most n arcs, so a state sits
        // on one exactly when some walk[i][i] goes negative — any longer
        // witness decomposes into simple cycles, one of them negative.
        let mut walk = step.clone();
        for _ in 1..n {
            let mut next = walk.clone();
            for i in 0..n {
                for k in 0..n {
                    let Some(a) = walk[i][k] else { continue };
                    for j in 0..n {
                        let Some(b) = step[k][j] else { continue };
                        if next[i][j].is_none_or(|c| a + b < c) {
                            next[i][j] = Some(a + b);
                        }
                    }
                }
            }
            walk = next;
        }
        let on_cycle: Vec<bool> =
            (0..n).map(|i| walk[i][i].is_some_and(|c| c < 0)).collect();
        // Backward closure within the Player-1 subgraph.
        let mut reach = on_cycle.clone();
        loop {
            let mut changed = false;
            for &(i, j, _) in &arcs {
                if reach[j] && !reach[i] {
                    reach[i] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        v1.into_iter().zip(reach).filter(|(_, r)| *r).map(|(v, _)| v).collect()
    }

    /// The finite-value transformation: drop states where Player 1 forces
    /// a negative cycle alone, then give every Player-0 state an exit to a
    /// fresh zero-weight sink at weight `-2nW`. Returns the new game, the
    /// removed states, the chain bound `3nW` and the threshold `nW` above
    /// which reconstructed values are infinite.
    pub fn transform_finite(&self) -> Result<(EnergyGame, PosSet, u64, u64)> {
        let n = self.state_count() as u64;
        let w_max = self.max_abs_weight();
        let removed = self.negative_own_cycle_states();
        let mut sink_name = String::from("exit");
        while self.owner.contains_key(&Pos::new(&sink_name)) {
            sink_name.insert(0, '_');
        }
        let sink = Pos::new(sink_name);
        let exit_weight = -2 * (n * w_max) as i64;
        let mut v0 = vec![sink.clone()];
        let mut v1 = Vec::new();
        let mut edges = vec![(sink.clone(), sink.clone(), 0)];
        for (v, owner) in &self.owner {
            if removed.contains(v) {
                continue;
            }
            match owner {
                Player::Zero => v0.push(v.clone()),
                Player::One => v1.push(v.clone()),
            }
            for (tgt, w) in self.edges_from(v) {
                if !removed.contains(tgt) {
                    edges.push((v.clone(), tgt.clone(), w));
                }
            }
            if *owner == Player::Zero {
                edges.push((v.clone(), sink.clone(), exit_weight));
            }
        }
        let game = EnergyGame::new(v0, v1, edges).map_err(|e| match e {
            Error::InvalidModel(msg) => Error::InvalidModel(format!(
                "transformation stranded a state: {msg}"
            )),
            other => other,
        })?;
        Ok((game, removed, 3 * n * w_max, n * w_max))
    }

    /// Reads a solution of the transformed game back onto the original
    /// states: removed states are infinite, values at or above the
    /// threshold are infinite, the rest carry over.
    pub fn reconstruct(
        &self,
        solved: &Assignment,
        removed: &PosSet,
        threshold: u64,
    ) -> Result<BTreeMap<Pos, Energy>> {
        let mut out = BTreeMap::new();
        for v in self.owner.keys() {
            let e = if removed.contains(v) {
                Energy::Inf
            } else {
                let n = solved
                    .try_get(v)?
                    .as_nat()
                    .ok_or_else(|| Error::ChainMismatch("expected a bounded value".into()))?;
                if n < threshold {
                    Energy::Fin(n)
                } else {
                    Energy::Inf
                }
            };
            out.insert(v.clone(), e);
        }
        Ok(out)
    }

    /// Worklist value iteration over `{0..k}`: start at zero and raise each
    /// invalid state straight to its one-step value until all are valid.
    /// Returns the least fixpoint and the number of raises performed.
    pub fn value_iteration(&self, k: u64) -> Result<(Assignment, usize)> {
        let one_step = |v: &Pos, g: &BTreeMap<Pos, u64>| -> u64 {
            let vals = self
                .edges_from(v)
                .map(|(t, w)| (g[t] as i64 - w).clamp(0, k as i64) as u64);
            match self.owner[v] {
                Player::Zero => vals.min().expect("validated outgoing edge"),
                Player::One => vals.max().expect("validated outgoing edge"),
            }
        };
        let mut preds: BTreeMap<&Pos, Vec<&Pos>> = BTreeMap::new();
        for (v, out) in &self.edges {
            for tgt in out.keys() {
                preds.entry(tgt).or_default().push(v);
            }
        }
        let mut g: BTreeMap<Pos, u64> = self.owner.keys().map(|v| (v.clone(), 0)).collect();
        let mut queue: VecDeque<Pos> = VecDeque::new();
        let mut queued: PosSet = PosSet::new();
        for v in self.owner.keys() {
            if one_step(v, &g) > 0 {
                queue.push_back(v.clone());
                queued.insert(v.clone());
            }
        }
        let mut raises = 0usize;
        while let Some(v) = queue.pop_front() {
            queued.remove(&v);
            let target = one_step(&v, &g);
            if g[&v] >= target {
                continue;
            }
            g.insert(v.clone(), target);
            raises += 1;
            for &u in preds.get(&v).into_iter().flatten() {
                if !queued.contains(u) && g[u] < one_step(u, &g) {
                    queue.push_back(u.clone());
                    queued.insert(u.clone());
                }
            }
        }
        let assignment = Assignment::new(
            Chain::finite(k)?,
            g.into_iter().map(|(v, n)| Ok((v, Value::finite(n, k)?))).collect::<Result<Vec<_>>>()?,
        )?;
        Ok((assignment, raises))
    }

    /// Decrease candidates for escaping a fixpoint from above: target
    /// values shifted by edge weights and drops along edges, floored at 1.
    fn skip_deltas(&self, k: u64, a: &Assignment) -> Vec<Value> {
        let mut best: Option<i64> = None;
        for (v, out) in &self.edges {
            let av = a.get(v).and_then(Value::as_nat).unwrap_or(0) as i64;
            for (tgt, w) in out {
                let at = a.get(tgt).and_then(Value::as_nat).unwrap_or(0) as i64;
                for cand in [at - w, av - at] {
                    if cand > 0 {
                        best = Some(best.map_or(cand, |b| b.min(cand)));
                    }
                }
            }
        }
        match best {
            Some(d) => vec![Value::finite((d.max(1) as u64).min(k), k).expect("within bound")],
            None => Vec::new(),
        }
    }

    fn solve_transformed(&self) -> Result<Solved> {
        let (game, removed, k, threshold) = self.transform_finite()?;
        let sink = game
            .owner
            .keys()
            .find(|v| !self.owner.contains_key(v))
            .expect("the transformation always adds a sink")
            .clone();
        Ok(Solved { game, removed, k, threshold, sink })
    }

    /// Kleene iteration on the transformed game.
    pub fn solve_kleene(&self) -> Result<EnergySolution> {
        let t = self.solve_transformed()?;
        let f = t.game.energy_term(t.k)?;
        let rounds = (t.k as usize + 2) * t.game.state_count() + 2;
        let (mu, steps) = kleene_with_steps(&f, Chain::finite(t.k)?, rounds)?;
        Ok(EnergySolution { values: self.reconstruct(&mu, &t.removed, t.threshold)?, steps })
    }

    /// Worklist value iteration on the transformed game.
    pub fn solve_value_iteration(&self) -> Result<EnergySolution> {
        let t = self.solve_transformed()?;
        let (mu, steps) = t.game.value_iteration(t.k)?;
        Ok(EnergySolution { values: self.reconstruct(&mu, &t.removed, t.threshold)?, steps })
    }

    /// Strategy iteration from above, improving Player 0. Starts from the
    /// all-exits strategy, solves each fixed strategy by value iteration,
    /// and escapes non-least fixpoints with edge-derived decreases.
    pub fn solve_above(&self) -> Result<EnergyOutcome> {
        let t = self.solve_transformed()?;
        let dec = t.game.min_decomposition(t.k)?;
        let mut exits = BTreeMap::new();
        for (v, out) in &t.game.edges {
            if t.game.owner[v] == Player::Zero {
                let i = out
                    .keys()
                    .position(|tgt| *tgt == t.sink)
                    .expect("every surviving Player-0 state has an exit edge");
                exits.insert(v.clone(), i);
            } else {
                exits.insert(v.clone(), 0);
            }
        }
        let hint_game = t.game.clone();
        let hint_k = t.k;
        let opts = SiOptions {
            initial: Some(Strategy::new(exits)),
            delta_hints: Vec::new(),
            delta_hint_fn: Some(std::sync::Arc::new(move |a: &Assignment, _cycle: &PosSet| {
                hint_game.skip_deltas(hint_k, a)
            })),
        };
        let mut solver =
            |c: &Strategy, _f: &FunTerm| Ok(t.game.restrict_game(Player::Zero, c)?.value_iteration(t.k)?.0);
        let res = si_above(&dec, &mut solver, &opts)?;
        self.outcome(t, Player::Zero, res)
    }

    /// Strategy iteration from below, improving Player 1 with stable
    /// improvements, each fixed strategy solved by value iteration.
    pub fn solve_below(&self) -> Result<EnergyOutcome> {
        let t = self.solve_transformed()?;
        let dec = t.game.max_decomposition(t.k)?;
        let mut solver =
            |c: &Strategy, _f: &FunTerm| Ok(t.game.restrict_game(Player::One, c)?.value_iteration(t.k)?.0);
        let res = si_below(&dec, &mut solver, &SiOptions::default())?;
        self.outcome(t, Player::One, res)
    }

    fn outcome(&self, t: Solved, mine: Player, res: SiResult) -> Result<EnergyOutcome> {
        let values = self.reconstruct(&res.mu, &t.removed, t.threshold)?;
        let mut moves = t.game.choices(mine, &res.strategy)?;
        moves.remove(&t.sink);
        Ok(EnergyOutcome { values, moves, trace: res.trace, removed: t.removed, sink: t.sink })
    }
}

struct Solved {
    game: EnergyGame,
    removed: PosSet,
    k: u64,
    threshold: u64,
    sink: Pos,
}

/// Solution of a one-shot solver, with its iteration count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnergySolution {
    pub values: BTreeMap<Pos, Energy>,
    pub steps: usize,
}

/// Solution of a strategy-iteration solver: reconstructed values, the
/// improving player's final moves on the transformed game (exit edges show
/// the sink as successor), and the iteration trace.
#[derive(Debug)]
pub struct EnergyOutcome {
    pub values: BTreeMap<Pos, Energy>,
    pub moves: BTreeMap<Pos, Pos>,
    pub trace: Trace,
    pub removed: PosSet,
    pub sink: Pos,
}

/// `a(tgt) - w`, truncated into the chain, as a term writing `v`.
fn edge_option(v: Pos, tgt: Pos, w: i64, k: u64) -> Result<FunTerm> {
    FunTerm::compose(
        FunTerm::sub_weight([(v.clone(), w)], k)?,
        FunTerm::reindex([(v, tgt)]),
    )
}

/// The whole min/max row of a state as a single term.
fn row_option(v: &Pos, out: &BTreeMap<Pos, i64>, owner: Player, k: u64) -> Result<FunTerm> {
    let mut parts = Vec::new();
    let mut slots = PosSet::new();
    for (tgt, w) in out {
        let e = Pos::edge(v, tgt);
        parts.push(edge_option(e.clone(), tgt.clone(), *w, k)?);
        slots.insert(e);
    }
    let inner = FunTerm::disjoint_union(parts)?;
    let outer = match owner {
        Player::Zero => FunTerm::min_rel([(v.clone(), slots)])?,
        Player::One => FunTerm::max_rel([(v.clone(), slots)])?,
    };
    FunTerm::compose(outer, inner)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(name: &str) -> Pos {
        Pos::new(name)
    }

    fn fin(vals: &[(&str, u64)]) -> BTreeMap<Pos, Energy> {
        vals.iter().map(|(v, n)| (p(v), Energy::Fin(*n))).collect()
    }

    /// The two-players-two-states-each game whose optimal play needs 18
    /// and 17 units on Player 1's side and 0 and 8 on Player 0's.
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

    fn tug_of_war_solution() -> BTreeMap<Pos, Energy> {
        fin(&[("x", 18), ("y", 17), ("u", 0), ("v", 8)])
    }

    /// The game whose Player-1 pair x,y loops at total weight -1, forcing
    /// infinite energy there and at u (which can only wait or escape).
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

    #[test]
    fn rejects_broken_games() {
        assert!(EnergyGame::new([p("a")], [p("a")], [(p("a"), p("a"), 0)]).is_err());
        assert!(EnergyGame::new([p("a")], [], []).is_err());
        assert!(EnergyGame::new([p("a")], [], [(p("a"), p("b"), 0)]).is_err());
        assert!(EnergyGame::new([p("a")], [], [(p("a"), p("a"), 0), (p("a"), p("a"), 1)]).is_err());
    }

    #[test]
    fn term_matches_the_direct_formula() {
        let g = tug_of_war();
        let k = 30;
        let f = g.energy_term(k).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let a = Assignment::new(
                Chain::finite(k).unwrap(),
                g.states()
                    .into_iter()
                    .map(|v| (v, Value::finite(rng.gen_range(0..=k), k).unwrap())),
            )
            .unwrap();
            let fa = f.evaluate(&a).unwrap();
            for v in g.states() {
                let vals = g.edges_from(&v).map(|(t, w)| {
                    (a.get(t).unwrap().as_nat().unwrap() as i64 - w).clamp(0, k as i64) as u64
                });
                let expect = match g.owner(&v).unwrap() {
                    Player::Zero => vals.min().unwrap(),
                    Player::One => vals.max().unwrap(),
                };
                assert_eq!(fa.get(&v).unwrap().as_nat().unwrap(), expect, "at {v}");
            }
        }
    }

    #[test]
    fn decomposition_induces_the_same_function() {
        let g = tug_of_war();
        let k = 30;
        let f = g.energy_term(k).unwrap();
        let induced = g.min_decomposition(k).unwrap().induced_function().unwrap();
        let dual = g.max_decomposition(k).unwrap().induced_function().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..30 {
            let a = Assignment::new(
                Chain::finite(k).unwrap(),
                g.states()
                    .into_iter()
                    .map(|v| (v, Value::finite(rng.gen_range(0..=k), k).unwrap())),
            )
            .unwrap();
            let expect = f.evaluate(&a).unwrap();
            assert_eq!(induced.evaluate(&a).unwrap(), expect);
            assert_eq!(dual.evaluate(&a).unwrap(), expect);
        }
    }

    #[test]
    fn solution_values_are_fixpoints_of_the_term() {
        let g = tug_of_war();
        // With k well above every finite value, the untransformed term has
        // the known solution as a fixpoint.
        let f = g.energy_term(40).unwrap();
        let a = Assignment::new(
            Chain::finite(40).unwrap(),
            [
                (p("x"), Value::finite(18, 40).unwrap()),
                (p("y"), Value::finite(17, 40).unwrap()),
                (p("u"), Value::finite(0, 40).unwrap()),
                (p("v"), Value::finite(8, 40).unwrap()),
            ],
        )
        .unwrap();
        assert_eq!(f.evaluate(&a).unwrap(), a);
    }

    #[test]
    fn transformation_removes_the_negative_own_cycle() {
        let g = trap_game();
        let (t, removed, k, threshold) = g.transform_finite().unwrap();
        assert_eq!(removed, [p("x"), p("y")].into());
        assert_eq!(k, 60);
        assert_eq!(threshold, 20);
        assert!(t.owner.contains_key(&p("exit")));
        assert_eq!(t.owner[&p("exit")], Player::Zero);
        assert_eq!(t.edges[&p("exit")], [(p("exit"), 0)].into());
        assert_eq!(t.edges[&p("u")], [(p("u"), -1), (p("exit"), -40)].into());
        assert_eq!(t.edges[&p("v")], [(p("z"), -3), (p("exit"), -40)].into());
        assert_eq!(t.edges[&p("z")], [(p("v"), 4)].into());
    }

    #[test]
    fn transformation_keeps_zero_weight_own_cycles() {
        // x <-> y totals zero, which sustains no infinite demand.
        let g = EnergyGame::new(
            [p("u")],
            [p("x"), p("y")],
            [(p("x"), p("y"), -1), (p("y"), p("x"), 1), (p("x"), p("u"), 0), (p("u"), p("u"), 0)],
        )
        .unwrap();
        let (_, removed, _, _) = g.transform_finite().unwrap();
        assert!(removed.is_empty());
    }

    #[test]
    fn all_four_solvers_agree_on_the_tug_of_war() {
        let g = tug_of_war();
        let expect = tug_of_war_solution();
        assert_eq!(g.solve_kleene().unwrap().values, expect);
        assert_eq!(g.solve_value_iteration().unwrap().values, expect);
        assert_eq!(g.solve_above().unwrap().values, expect);
        assert_eq!(g.solve_below().unwrap().values, expect);
    }

    #[test]
    fn iteration_from_below_finds_the_documented_moves() {
        let g = tug_of_war();
        let res = g.solve_below().unwrap();
        assert_eq!(res.moves, [(p("x"), p("y")), (p("y"), p("v"))].into());
        // Replaying the returned strategy pins the same values.
        let (t, removed, k, threshold) = g.transform_finite().unwrap();
        let fixed = t
            .restrict_game(Player::One, &t.strategy_for(Player::One, &res.moves).unwrap())
            .unwrap();
        let (mu, _) = fixed.value_iteration(k).unwrap();
        assert_eq!(g.reconstruct(&mu, &removed, threshold).unwrap(), res.values);
    }

    #[test]
    fn iteration_from_above_finds_the_documented_moves() {
        let g = tug_of_war();
        let res = g.solve_above().unwrap();
        assert_eq!(res.moves, [(p("u"), p("u")), (p("v"), p("u"))].into());
        assert_eq!(res.trace.skips(), 1);
    }

    #[test]
    fn trap_game_reconstruction() {
        let g = trap_game();
        let expect: BTreeMap<Pos, Energy> = [
            (p("x"), Energy::Inf),
            (p("y"), Energy::Inf),
            (p("u"), Energy::Inf),
            (p("v"), Energy::Fin(3)),
            (p("z"), Energy::Fin(0)),
        ]
        .into();
        assert_eq!(g.solve_kleene().unwrap().values, expect);
        assert_eq!(g.solve_value_iteration().unwrap().values, expect);
        let above = g.solve_above().unwrap();
        assert_eq!(above.values, expect);
        // The surviving Player-0 states choose: u bails out, v plays on.
        assert_eq!(above.moves, [(p("u"), above.sink.clone()), (p("v"), p("z"))].into());
        assert_eq!(g.solve_below().unwrap().values, expect);
    }

    #[test]
    fn nonnegative_weights_need_no_energy() {
        let g = EnergyGame::new(
            [p("a")],
            [p("b")],
            [(p("a"), p("b"), 3), (p("b"), p("a"), 0)],
        )
        .unwrap();
        let zeroes = fin(&[("a", 0), ("b", 0)]);
        assert_eq!(g.solve_kleene().unwrap().values, zeroes);
        assert_eq!(g.solve_value_iteration().unwrap().values, zeroes);
    }

    pub(super) fn random_energy_game(rng: &mut ChaCha8Rng, n: usize, w: i64) -> EnergyGame {
        let names: Vec<Pos> = (0..n).map(|i| Pos::new(format!("e{i}"))).collect();
        let mut v0 = Vec::new();
        let mut v1 = Vec::new();
        for v in &names {
            if rng.gen_bool(0.5) {
                v0.push(v.clone());
            } else {
                v1.push(v.clone());
            }
        }
        let mut edges = Vec::new();
        for src in &names {
            let mut any = false;
            for tgt in &names {
                if rng.gen_bool(0.4) {
                    edges.push((src.clone(), tgt.clone(), rng.gen_range(-w..=w)));
                    any = true;
                }
            }
            if !any {
                let tgt = names[rng.gen_range(0..names.len())].clone();
                edges.push((src.clone(), tgt.clone(), rng.gen_range(-w..=w)));
            }
        }
        EnergyGame::new(v0, v1, edges).unwrap()
    }

    #[test]
    fn solvers_agree_on_random_games() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for round in 0..25 {
            let g = random_energy_game(&mut rng, 5, 6);
            let kle = g.solve_kleene().unwrap().values;
            assert_eq!(g.solve_value_iteration().unwrap().values, kle, "vi, round {round}");
            assert_eq!(g.solve_above().unwrap().values, kle, "above, round {round}");
            assert_eq!(g.solve_below().unwrap().values, kle, "below, round {round}");
        }
    }

    #[test]
    fn replaying_the_below_strategy_reproduces_the_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let g = random_energy_game(&mut rng, 5, 5);
            let res = g.solve_below().unwrap();
            let (t, removed, k, threshold) = g.transform_finite().unwrap();
            let c = t.strategy_for(Player::One, &res.moves).unwrap();
            let fixed = t.restrict_game(Player::One, &c).unwrap();
            let (mu, _) = fixed.value_iteration(k).unwrap();
            assert_eq!(g.reconstruct(&mu, &removed, threshold).unwrap(), res.values);
        }
    }
}
