//! Simple stochastic games.
//!
//! A game graph has four kinds of states: MIN and MAX states owned by the
//! two players, average states that move to a random successor, and sinks
//! that stop the play with a fixed payoff. The value function assigns to
//! every state the expected payoff under optimal play; it is the least
//! fixpoint of the one-step operator built in [`Ssg::value_term`].
//!
//! Values are computed by strategy iteration. Fixing one player's choices
//! leaves a Markov decision problem for the other, which is solved exactly
//! by linear programming ([`Ssg::solve_fixed_min_strategy`] and
//! [`Ssg::solve_fixed_max_strategy`]); the outer loops are
//! [`Ssg::solve_above`] and [`Ssg::solve_below`].

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::assign::{Assignment, PosSet};
use crate::chain::{Chain, Value};
use crate::error::{Error, Result};
use crate::lp::{Cmp, Lp};
use crate::pos::Pos;
use crate::strategy::{si_above, si_below, DecompKind, Decomposition, SiOptions, SiResult, Strategy};
use crate::term::{check_dist, Dist, FunTerm};

/// What a single state does.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StateData {
    /// Owned by the minimizing player; moves to one of the successors.
    Min(Vec<Pos>),
    /// Owned by the maximizing player; moves to one of the successors.
    Max(Vec<Pos>),
    /// Moves to a random successor.
    Av(Dist),
    /// Stops the play with the given payoff in `[0, 1]`.
    Sink(BigRational),
}

#[derive(Debug, Clone)]
pub struct Ssg {
    states: BTreeMap<Pos, StateData>,
}

impl Ssg {
    /// Builds a game, sorting and deduplicating successor lists.
    ///
    /// Rejects duplicate state names, empty successor lists, edges to
    /// unknown states, invalid distributions and payoffs outside `[0, 1]`.
    pub fn new(states: impl IntoIterator<Item = (Pos, StateData)>) -> Result<Ssg> {
        let mut map: BTreeMap<Pos, StateData> = BTreeMap::new();
        for (name, data) in states {
            if map.insert(name.clone(), data).is_some() {
                return Err(Error::InvalidModel(format!("duplicate state {name}")));
            }
        }
        if map.is_empty() {
            return Err(Error::InvalidModel("a game needs at least one state".into()));
        }
        let known: PosSet = map.keys().cloned().collect();
        let check_target = |v: &Pos, t: &Pos| -> Result<()> {
            if known.contains(t) {
                Ok(())
            } else {
                Err(Error::InvalidModel(format!("state {v} has an edge to unknown state {t}")))
            }
        };
        let mut normalized = BTreeMap::new();
        for (name, data) in map.iter() {
            let data = match data {
                StateData::Min(succs) | StateData::Max(succs) => {
                    if succs.is_empty() {
                        return Err(Error::InvalidModel(format!("state {name} has no successors")));
                    }
                    let set: PosSet = succs.iter().cloned().collect();
                    for t in &set {
                        check_target(name, t)?;
                    }
                    let sorted: Vec<Pos> = set.into_iter().collect();
                    match data {
                        StateData::Min(_) => StateData::Min(sorted),
                        _ => StateData::Max(sorted),
                    }
                }
                StateData::Av(dist) => {
                    check_dist(dist)?;
                    for t in dist.keys() {
                        check_target(name, t)?;
                    }
                    StateData::Av(dist.clone())
                }
                StateData::Sink(payoff) => {
                    if payoff < &BigRational::zero() || payoff > &BigRational::one() {
                        return Err(Error::InvalidModel(format!(
                            "sink {name} has payoff {payoff} outside [0, 1]"
                        )));
                    }
                    StateData::Sink(payoff.clone())
                }
            };
            normalized.insert(name.clone(), data);
        }
        Ok(Ssg { states: normalized })
    }

    pub fn positions(&self) -> PosSet {
        self.states.keys().cloned().collect()
    }

    pub fn state(&self, v: &Pos) -> Option<&StateData> {
        self.states.get(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Pos, &StateData)> {
        self.states.iter()
    }

    /// The one-step value operator: min over successors at MIN states, max
    /// at MAX states, expectation at average states, the payoff at sinks.
    pub fn value_term(&self) -> FunTerm {
        let mut min_rows: BTreeMap<Pos, PosSet> = BTreeMap::new();
        let mut max_rows: BTreeMap<Pos, PosSet> = BTreeMap::new();
        let mut av_rows: BTreeMap<Pos, Dist> = BTreeMap::new();
        let mut payoffs: Vec<(Pos, Value)> = Vec::new();
        for (v, data) in &self.states {
            match data {
                StateData::Min(succs) => {
                    min_rows.insert(v.clone(), succs.iter().cloned().collect());
                }
                StateData::Max(succs) => {
                    max_rows.insert(v.clone(), succs.iter().cloned().collect());
                }
                StateData::Av(dist) => {
                    av_rows.insert(v.clone(), dist.clone());
                }
                StateData::Sink(payoff) => {
                    payoffs.push((v.clone(), Value::unit(payoff.clone()).expect("validated payoff")));
                }
            }
        }
        let mut parts = Vec::new();
        if !min_rows.is_empty() {
            parts.push(FunTerm::min_rel(min_rows).expect("validated rows"));
        }
        if !max_rows.is_empty() {
            parts.push(FunTerm::max_rel(max_rows).expect("validated rows"));
        }
        if !av_rows.is_empty() {
            parts.push(FunTerm::average(av_rows).expect("validated rows"));
        }
        if !payoffs.is_empty() {
            let a = Assignment::new(Chain::Unit, payoffs).expect("validated payoffs");
            parts.push(FunTerm::constant(a));
        }
        FunTerm::disjoint_union(parts).expect("state kinds partition the states")
    }

    /// The decomposition whose options are the MIN player's moves: one
    /// option per successor at MIN states, the whole one-step operator
    /// elsewhere.
    pub fn min_decomposition(&self) -> Decomposition {
        self.decomposition(DecompKind::Min)
    }

    /// The decomposition whose options are the MAX player's moves.
    pub fn max_decomposition(&self) -> Decomposition {
        self.decomposition(DecompKind::Max)
    }

    fn decomposition(&self, kind: DecompKind) -> Decomposition {
        let mut options: Vec<(Pos, Vec<FunTerm>)> = Vec::new();
        for (v, data) in &self.states {
            let opts = match (kind, data) {
                (DecompKind::Min, StateData::Min(succs)) | (DecompKind::Max, StateData::Max(succs)) => succs
                    .iter()
                    .map(|w| FunTerm::reindex([(v.clone(), w.clone())]))
                    .collect(),
                (_, StateData::Min(succs)) => {
                    let row: PosSet = succs.iter().cloned().collect();
                    vec![FunTerm::min_rel([(v.clone(), row)]).expect("validated row")]
                }
                (_, StateData::Max(succs)) => {
                    let row: PosSet = succs.iter().cloned().collect();
                    vec![FunTerm::max_rel([(v.clone(), row)]).expect("validated row")]
                }
                (_, StateData::Av(dist)) => {
                    vec![FunTerm::average([(v.clone(), dist.clone())]).expect("validated row")]
                }
                (_, StateData::Sink(payoff)) => {
                    let a = Assignment::new(
                        Chain::Unit,
                        [(v.clone(), Value::unit(payoff.clone()).expect("validated payoff"))],
                    )
                    .expect("validated payoff");
                    vec![FunTerm::constant(a)]
                }
            };
            options.push((v.clone(), opts));
        }
        Decomposition::new(kind, options).expect("options are valid by construction")
    }

    /// The successor chosen at each state the strategy's player owns.
    pub fn choices(&self, kind: DecompKind, c: &Strategy) -> Result<BTreeMap<Pos, Pos>> {
        let mut out = BTreeMap::new();
        for (v, data) in &self.states {
            let succs = match (kind, data) {
                (DecompKind::Min, StateData::Min(succs)) => succs,
                (DecompKind::Max, StateData::Max(succs)) => succs,
                _ => continue,
            };
            let i = c
                .get(v)
                .ok_or_else(|| Error::InvalidModel(format!("strategy misses state {v}")))?;
            let w = succs
                .get(i)
                .ok_or_else(|| Error::InvalidModel(format!("strategy index {i} out of range at {v}")))?;
            out.insert(v.clone(), w.clone());
        }
        Ok(out)
    }

    /// The strategy that moves to the given successor at each owned state.
    pub fn strategy_for(&self, kind: DecompKind, moves: &BTreeMap<Pos, Pos>) -> Result<Strategy> {
        let mut choice = Vec::new();
        for (v, data) in &self.states {
            let idx = match (kind, data) {
                (DecompKind::Min, StateData::Min(succs)) | (DecompKind::Max, StateData::Max(succs)) => {
                    let w = moves
                        .get(v)
                        .ok_or_else(|| Error::InvalidModel(format!("no move given for {v}")))?;
                    succs
                        .iter()
                        .position(|s| s == w)
                        .ok_or_else(|| Error::InvalidModel(format!("{v} has no edge to {w}")))?
                }
                _ => 0,
            };
            choice.push((v.clone(), idx));
        }
        Ok(Strategy::new(choice))
    }

    fn var_index(&self) -> BTreeMap<Pos, usize> {
        self.states.keys().cloned().enumerate().map(|(i, v)| (v, i)).collect()
    }

    fn solution_to_assignment(&self, x: &[BigRational]) -> Result<Assignment> {
        let idx = self.var_index();
        Assignment::new(
            Chain::Unit,
            self.states
                .keys()
                .map(|v| Ok((v.clone(), Value::unit(x[idx[v]].clone())?)))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    /// The value of the game when the MIN player always follows `sigma`.
    ///
    /// Solved as a linear program: minimize the sum of all state values
    /// subject to sink and average states taking their one-step value
    /// exactly, MAX states dominating every successor, and MIN states
    /// equalling the chosen successor. The unique optimum is the least
    /// fixpoint of the fixed-strategy operator.
    pub fn solve_fixed_min_strategy(&self, sigma: &Strategy) -> Result<Assignment> {
        let idx = self.var_index();
        let n = idx.len();
        let moves = self.choices(DecompKind::Min, sigma)?;
        let mut lp = Lp::minimize(vec![BigRational::one(); n]);
        let zero = || vec![BigRational::zero(); n];
        for (v, data) in &self.states {
            match data {
                StateData::Sink(payoff) => {
                    let mut row = zero();
                    row[idx[v]] = BigRational::one();
                    lp.constraint(row, Cmp::Eq, payoff.clone());
                }
                StateData::Av(dist) => {
                    let mut row = zero();
                    row[idx[v]] += BigRational::one();
                    for (w, p) in dist {
                        row[idx[w]] -= p.clone();
                    }
                    lp.constraint(row, Cmp::Eq, BigRational::zero());
                }
                StateData::Max(succs) => {
                    for w in succs.iter().filter(|w| *w != v) {
                        let mut row = zero();
                        row[idx[v]] += BigRational::one();
                        row[idx[w]] -= BigRational::one();
                        lp.constraint(row, Cmp::Ge, BigRational::zero());
                    }
                }
                StateData::Min(_) => {
                    let w = &moves[v];
                    if w != v {
                        let mut row = zero();
                        row[idx[v]] += BigRational::one();
                        row[idx[w]] -= BigRational::one();
                        lp.constraint(row, Cmp::Eq, BigRational::zero());
                    }
                }
            }
            let mut cap = zero();
            cap[idx[v]] = BigRational::one();
            lp.constraint(cap, Cmp::Le, BigRational::one());
        }
        self.solution_to_assignment(&lp.solve()?.x)
    }

    /// The largest set of states from which the MIN player can keep the
    /// play away from every positive sink forever, given that the MAX
    /// player follows `tau`. Exactly the states of value zero under `tau`.
    pub fn zero_forcing_set(&self, tau: &Strategy) -> Result<PosSet> {
        let moves = self.choices(DecompKind::Max, tau)?;
        let mut s: PosSet = self
            .states
            .iter()
            .filter(|(_, data)| !matches!(data, StateData::Sink(p) if !p.is_zero()))
            .map(|(v, _)| v.clone())
            .collect();
        loop {
            let keep: PosSet = s
                .iter()
                .filter(|v| match &self.states[*v] {
                    StateData::Min(succs) => succs.iter().any(|w| s.contains(w)),
                    StateData::Max(_) => s.contains(&moves[*v]),
                    StateData::Av(dist) => dist.keys().all(|w| s.contains(w)),
                    StateData::Sink(_) => true,
                })
                .cloned()
                .collect();
            if keep.len() == s.len() {
                return Ok(s);
            }
            s = keep;
        }
    }

    /// The value of the game when the MAX player always follows `tau`.
    ///
    /// States in the zero-forcing set are pinned to zero first — otherwise
    /// cycles the MIN player never has to leave could sustain spurious
    /// positive values. The rest is a linear program maximizing the sum of
    /// all state values subject to sink, average and chosen-MAX equalities
    /// and MIN states lying below every successor; the unique optimum is
    /// the least fixpoint of the fixed-strategy operator.
    pub fn solve_fixed_max_strategy(&self, tau: &Strategy) -> Result<Assignment> {
        let idx = self.var_index();
        let n = idx.len();
        let moves = self.choices(DecompKind::Max, tau)?;
        let zero_set = self.zero_forcing_set(tau)?;
        let mut lp = Lp::maximize(vec![BigRational::one(); n]);
        let zero = || vec![BigRational::zero(); n];
        for (v, data) in &self.states {
            if zero_set.contains(v) {
                let mut row = zero();
                row[idx[v]] = BigRational::one();
                lp.constraint(row, Cmp::Eq, BigRational::zero());
                continue;
            }
            match data {
                StateData::Sink(payoff) => {
                    let mut row = zero();
                    row[idx[v]] = BigRational::one();
                    lp.constraint(row, Cmp::Eq, payoff.clone());
                }
                StateData::Av(dist) => {
                    let mut row = zero();
                    row[idx[v]] += BigRational::one();
                    for (w, p) in dist {
                        row[idx[w]] -= p.clone();
                    }
                    lp.constraint(row, Cmp::Eq, BigRational::zero());
                }
                StateData::Max(_) => {
                    let w = &moves[v];
                    if w != v {
                        let mut row = zero();
                        row[idx[v]] += BigRational::one();
                        row[idx[w]] -= BigRational::one();
                        lp.constraint(row, Cmp::Eq, BigRational::zero());
                    }
                }
                StateData::Min(succs) => {
                    for w in succs.iter().filter(|w| *w != v) {
                        let mut row = zero();
                        row[idx[v]] += BigRational::one();
                        row[idx[w]] -= BigRational::one();
                        lp.constraint(row, Cmp::Le, BigRational::zero());
                    }
                }
            }
            let mut cap = zero();
            cap[idx[v]] = BigRational::one();
            lp.constraint(cap, Cmp::Le, BigRational::one());
        }
        self.solution_to_assignment(&lp.solve()?.x)
    }

    /// Strategy iteration from above: improve the MIN player, escape
    /// non-least fixpoints by decreasing on the vicious cycle.
    pub fn solve_above(&self, opts: &SiOptions) -> Result<SiResult> {
        let dec = self.min_decomposition();
        let mut solver = |sigma: &Strategy, _f: &FunTerm| self.solve_fixed_min_strategy(sigma);
        si_above(&dec, &mut solver, opts)
    }

    /// Strategy iteration from below: improve the MAX player with stable
    /// improvements until the value is a fixpoint of the full operator.
    pub fn solve_below(&self, opts: &SiOptions) -> Result<SiResult> {
        let dec = self.max_decomposition();
        let mut solver = |tau: &Strategy, _f: &FunTerm| self.solve_fixed_max_strategy(tau);
        si_below(&dec, &mut solver, opts)
    }
}
