//! Decompositions, strategies, and strategy iteration.
//!
//! A *min-decomposition* of `f : M^Y -> M^Y` gives, for every position,
//! a finite list of option terms such that `f` is their pointwise minimum;
//! a *strategy* picks one option per position. The least fixpoint of the
//! induced one-option-per-position function `f_C` is assumed cheap (the
//! [`InnerSolver`] contract); [`si_above`] and [`si_below`] then compute
//! the least fixpoint of `f` itself by iterating improvements, with
//! [`si_above`] additionally escaping non-least fixpoints of `f` through
//! the vicious-cycle detection of [`crate::approx`].

use std::collections::BTreeMap;

use crate::approx::{decrease_to_prefixpoint, nu_approx};
use crate::assign::{Assignment, PosSet};
use crate::chain::Value;
use crate::error::{Error, Result};
use crate::pos::Pos;
use crate::term::FunTerm;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecompKind {
    Min,
    Max,
}

/// Per-position option lists whose pointwise min (or max) is the function
/// being decomposed. Each option term maps the full assignment space to the
/// single position it is listed under.
#[derive(Debug, Clone)]
pub struct Decomposition {
    kind: DecompKind,
    options: BTreeMap<Pos, Vec<FunTerm>>,
}

/// One option index per position.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Strategy {
    choice: BTreeMap<Pos, usize>,
}

impl Strategy {
    pub fn new(choice: impl IntoIterator<Item = (Pos, usize)>) -> Strategy {
        Strategy { choice: choice.into_iter().collect() }
    }

    pub fn get(&self, y: &Pos) -> Option<usize> {
        self.choice.get(y).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Pos, usize)> {
        self.choice.iter().map(|(p, i)| (p, *i))
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (i, (p, idx)) in self.choice.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p}: {idx}")?;
        }
        write!(f, "}}")
    }
}

/// Computes the exact least fixpoint of the restricted function `f_C`.
/// The strategy is passed alongside the term so instantiation-specific
/// solvers (LPs over the chosen successors, say) need not reverse-engineer
/// it from the term.
pub trait InnerSolver {
    fn solve(&mut self, strategy: &Strategy, f_c: &FunTerm) -> Result<Assignment>;
}

impl<F: FnMut(&Strategy, &FunTerm) -> Result<Assignment>> InnerSolver for F {
    fn solve(&mut self, strategy: &Strategy, f_c: &FunTerm) -> Result<Assignment> {
        self(strategy, f_c)
    }
}

impl Decomposition {
    /// Validates that every position has at least one option, and that every
    /// option writes exactly its own position and reads only decomposition
    /// positions (so the induced function is an endofunction).
    pub fn new(
        kind: DecompKind,
        options: impl IntoIterator<Item = (Pos, Vec<FunTerm>)>,
    ) -> Result<Decomposition> {
        let options: BTreeMap<Pos, Vec<FunTerm>> = options.into_iter().collect();
        let positions: PosSet = options.keys().cloned().collect();
        for (y, opts) in &options {
            if opts.is_empty() {
                return Err(Error::InvalidModel(format!("no options at position {y}")));
            }
            for h in opts {
                let cod = h.codomain();
                if cod.len() != 1 || !cod.contains(y) {
                    return Err(Error::InvalidModel(format!(
                        "option terms at {y} must write exactly {y}"
                    )));
                }
                if let Some(stray) = h.reads().difference(&positions).next() {
                    return Err(Error::InvalidModel(format!(
                        "option at {y} reads {stray}, which is not a position of the decomposition"
                    )));
                }
            }
        }
        Ok(Decomposition { kind, options })
    }

    pub fn kind(&self) -> DecompKind {
        self.kind
    }

    pub fn positions(&self) -> PosSet {
        self.options.keys().cloned().collect()
    }

    pub fn options_at(&self, y: &Pos) -> &[FunTerm] {
        self.options.get(y).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Number of strategies, saturating at `u128::MAX`.
    pub fn strategy_count(&self) -> u128 {
        self.options
            .values()
            .fold(1u128, |acc, opts| acc.saturating_mul(opts.len() as u128))
    }

    /// All strategies, in mixed-radix order with the lowest-index strategy
    /// first. Use only behind a [`strategy_count`](Self::strategy_count) guard.
    pub fn strategies(&self) -> impl Iterator<Item = Strategy> + '_ {
        let positions: Vec<(&Pos, usize)> =
            self.options.iter().map(|(p, o)| (p, o.len())).collect();
        let mut digits = vec![0usize; positions.len()];
        let mut done = false;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let out = Strategy::new(
                positions.iter().zip(&digits).map(|((p, _), d)| ((*p).clone(), *d)),
            );
            // odometer increment, least-significant digit last
            let mut i = positions.len();
            loop {
                if i == 0 {
                    done = true;
                    break;
                }
                i -= 1;
                digits[i] += 1;
                if digits[i] < positions[i].1 {
                    break;
                }
                digits[i] = 0;
            }
            if positions.is_empty() {
                done = true;
            }
            Some(out)
        })
    }

    /// The default starting strategy: lowest option index everywhere.
    pub fn initial_strategy(&self) -> Strategy {
        Strategy::new(self.options.keys().map(|p| (p.clone(), 0)))
    }

    /// A uniformly random strategy, for seeded experiment starts.
    pub fn random_strategy(&self, rng: &mut impl rand::Rng) -> Strategy {
        Strategy::new(
            self.options
                .iter()
                .map(|(p, opts)| (p.clone(), rng.gen_range(0..opts.len()))),
        )
    }

    /// The decomposed function itself: pointwise min (or max) over options.
    ///
    /// Assembled as a relation over internal per-option positions
    /// (`y#i` for option `i` of `y` — `#` splits unambiguously because the
    /// index contains none) feeding a min/max relation back onto `Y`, so the
    /// decrease-propagation rules apply compositionally: a min drops when
    /// *some* minimal option drops, a max only when *all* maximal ones do.
    pub fn induced_function(&self) -> Result<FunTerm> {
        let mut parts = Vec::new();
        let mut rows: BTreeMap<Pos, PosSet> = BTreeMap::new();
        for (y, opts) in &self.options {
            let row: &mut PosSet = rows.entry(y.clone()).or_default();
            for (i, h) in opts.iter().enumerate() {
                let slot = Pos::new(format!("{y}#{i}"));
                row.insert(slot.clone());
                parts.push(FunTerm::compose(
                    FunTerm::reindex([(slot, y.clone())]),
                    h.clone(),
                )?);
            }
        }
        let inner = FunTerm::disjoint_union(parts)?;
        let outer = match self.kind {
            DecompKind::Min => FunTerm::min_rel(rows)?,
            DecompKind::Max => FunTerm::max_rel(rows)?,
        };
        FunTerm::compose(outer, inner)
    }

    /// The one-option-per-position function `f_C`.
    pub fn restrict(&self, c: &Strategy) -> Result<FunTerm> {
        let mut parts = Vec::with_capacity(self.options.len());
        for (y, opts) in &self.options {
            let idx = c.get(y).ok_or_else(|| {
                Error::InvalidModel(format!("strategy is missing a choice at {y}"))
            })?;
            let h = opts.get(idx).ok_or_else(|| {
                Error::InvalidModel(format!(
                    "strategy picks option {idx} at {y}, but only {} exist",
                    opts.len()
                ))
            })?;
            parts.push(h.clone());
        }
        FunTerm::disjoint_union(parts)
    }

    /// The strategy picking, at every position, the best option value at `a`
    /// (min for Min kind, max for Max) with lowest-index ties.
    pub fn best_response(&self, a: &Assignment) -> Result<Strategy> {
        let mut choice = BTreeMap::new();
        for (y, opts) in &self.options {
            let mut best_idx = 0;
            let mut best_val = opts[0].evaluate(a)?.try_get(y)?.clone();
            for (i, h) in opts.iter().enumerate().skip(1) {
                let v = h.evaluate(a)?.try_get(y)?.clone();
                let better = match self.kind {
                    DecompKind::Min => v.cmp_on_chain(&best_val).is_lt(),
                    DecompKind::Max => v.cmp_on_chain(&best_val).is_gt(),
                };
                if better {
                    best_idx = i;
                    best_val = v;
                }
            }
            choice.insert(y.clone(), best_idx);
        }
        Ok(Strategy { choice })
    }

    fn check_solution(&self, c: &Strategy, mu_c: &Assignment) -> Result<()> {
        let f_c = self.restrict(c)?;
        if f_c.evaluate(mu_c)? != *mu_c {
            return Err(Error::NotFixpoint(
                "assignment is not a fixpoint of the strategy-restricted function".into(),
            ));
        }
        Ok(())
    }
}

/// Stable improvement for the Min player: if the decomposed function can do
/// strictly better than `mu_c` somewhere, switch — only at positions where
/// it does better — to the locally best option. Absent iff `mu_c` is a
/// fixpoint of the decomposed function.
pub fn min_improve(dec: &Decomposition, c: &Strategy, mu_c: &Assignment) -> Result<Option<Strategy>> {
    improve(dec, c, mu_c, DecompKind::Min)
}

/// Dual of [`min_improve`]; stability (never switching at positions whose
/// value would not strictly rise) is what keeps the fixpoints of successive
/// strategies increasing.
pub fn max_improve_stable(
    dec: &Decomposition,
    c: &Strategy,
    mu_c: &Assignment,
) -> Result<Option<Strategy>> {
    improve(dec, c, mu_c, DecompKind::Max)
}

fn improve(
    dec: &Decomposition,
    c: &Strategy,
    mu_c: &Assignment,
    expect: DecompKind,
) -> Result<Option<Strategy>> {
    if dec.kind != expect {
        return Err(Error::InvalidModel(format!(
            "improvement direction requires a {expect:?} decomposition"
        )));
    }
    dec.check_solution(c, mu_c)?;
    let f = dec.induced_function()?;
    let fa = f.evaluate(mu_c)?;
    if fa == *mu_c {
        return Ok(None);
    }
    let mut choice = BTreeMap::new();
    for (y, opts) in &dec.options {
        let incumbent = c.get(y).ok_or_else(|| {
            Error::InvalidModel(format!("strategy is missing a choice at {y}"))
        })?;
        if fa.try_get(y)? == mu_c.try_get(y)? {
            choice.insert(y.clone(), incumbent);
            continue;
        }
        let mut best_idx = 0;
        let mut best_val = opts[0].evaluate(mu_c)?.try_get(y)?.clone();
        for (i, h) in opts.iter().enumerate().skip(1) {
            let v = h.evaluate(mu_c)?.try_get(y)?.clone();
            let better = match expect {
                DecompKind::Min => v.cmp_on_chain(&best_val).is_lt(),
                DecompKind::Max => v.cmp_on_chain(&best_val).is_gt(),
            };
            if better {
                best_idx = i;
                best_val = v;
            }
        }
        choice.insert(y.clone(), best_idx);
    }
    Ok(Some(Strategy { choice }))
}

/// Does `candidate` satisfy the plain improvement condition against `mu_c`
/// for the Max player, i.e. `mu_c` strictly below `f_candidate(mu_c)`?
pub fn is_max_improvement(
    dec: &Decomposition,
    mu_c: &Assignment,
    candidate: &Strategy,
) -> Result<bool> {
    let fc = dec.restrict(candidate)?.evaluate(mu_c)?;
    Ok(mu_c.leq(&fc)? && fc != *mu_c)
}

/// Is `candidate` additionally *stable* relative to `c`: options are only
/// switched where the switched-to value strictly exceeds `mu_c`?
pub fn is_stable_max_improvement(
    dec: &Decomposition,
    c: &Strategy,
    mu_c: &Assignment,
    candidate: &Strategy,
) -> Result<bool> {
    if !is_max_improvement(dec, mu_c, candidate)? {
        return Ok(false);
    }
    let fc = dec.restrict(candidate)?.evaluate(mu_c)?;
    for (y, idx) in candidate.iter() {
        if c.get(y) != Some(idx) && fc.try_get(y)?.cmp_on_chain(mu_c.try_get(y)?).is_le() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// One solve of an inner fixpoint during strategy iteration, with the skip
/// event when the iteration had to escape a non-least fixpoint.
#[derive(Debug, Clone)]
pub struct TraceStep {
    pub strategy: Strategy,
    pub mu: Assignment,
    pub skip: Option<SkipEvent>,
}

/// A vicious cycle found at a fixpoint of the decomposed function, and the
/// decrease that escaped it.
#[derive(Debug, Clone)]
pub struct SkipEvent {
    pub cycle: PosSet,
    pub delta: Value,
    pub decreased: Assignment,
}

#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
}

impl Trace {
    /// Inner solves performed.
    pub fn visits(&self) -> usize {
        self.steps.len()
    }

    /// Strategy changes performed (one fewer than the solves).
    pub fn updates(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    /// Non-least fixpoints escaped by decreasing.
    pub fn skips(&self) -> usize {
        self.steps.iter().filter(|s| s.skip.is_some()).count()
    }
}

/// Computes decrease amounts from the current fixpoint and vicious cycle.
pub type DeltaHintFn = std::sync::Arc<dyn Fn(&Assignment, &PosSet) -> Vec<Value>>;

#[derive(Clone, Default)]
pub struct SiOptions {
    /// Starting strategy; lowest index everywhere when absent.
    pub initial: Option<Strategy>,
    /// Problem-specific decrease amounts to try before the generic scan.
    pub delta_hints: Vec<Value>,
    /// Computes decrease amounts from the current fixpoint and vicious
    /// cycle, tried before `delta_hints`. Every candidate is still checked
    /// against the pre-fixpoint condition, so a wrong hint costs time only.
    pub delta_hint_fn: Option<DeltaHintFn>,
}

impl std::fmt::Debug for SiOptions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SiOptions")
            .field("initial", &self.initial)
            .field("delta_hints", &self.delta_hints)
            .field("delta_hint_fn", &self.delta_hint_fn.as_ref().map(|_| "..."))
            .finish()
    }
}

#[derive(Debug)]
pub struct SiResult {
    pub mu: Assignment,
    pub strategy: Strategy,
    pub trace: Trace,
}

/// Strategy iteration from above over a min-decomposition.
///
/// Repeatedly solves the current strategy and improves it; when no
/// improvement exists the current value is a fixpoint of the decomposed
/// function, and the vicious-cycle check either certifies it least (stop)
/// or names the positions to decrease, after which the strategy is rebuilt
/// from the decreased pre-fixpoint and iteration continues.
pub fn si_above(
    dec: &Decomposition,
    solver: &mut dyn InnerSolver,
    opts: &SiOptions,
) -> Result<SiResult> {
    if dec.kind != DecompKind::Min {
        return Err(Error::InvalidModel("iteration from above needs a Min decomposition".into()));
    }
    let f = dec.induced_function()?;
    let guard = dec.strategy_count();
    let mut c = opts.initial.clone().unwrap_or_else(|| dec.initial_strategy());
    let mut trace = Trace::default();
    loop {
        if trace.visits() as u128 >= guard.saturating_add(1) {
            return Err(Error::Soundness(
                "strategy iteration exceeded the strategy-count bound".into(),
            ));
        }
        let mu_c = solver.solve(&c, &dec.restrict(&c)?)?;
        dec.check_solution(&c, &mu_c)
            .map_err(|_| Error::Soundness("inner solver returned a non-fixpoint".into()))?;
        if let Some(next) = min_improve(dec, &c, &mu_c)? {
            trace.steps.push(TraceStep { strategy: c, mu: mu_c, skip: None });
            c = next;
            continue;
        }
        // mu_c is a fixpoint of the decomposed function; least?
        let cycle = nu_approx(&f, &mu_c)?;
        if cycle.is_empty() {
            trace.steps.push(TraceStep { strategy: c.clone(), mu: mu_c.clone(), skip: None });
            return Ok(SiResult { mu: mu_c, strategy: c, trace });
        }
        let mut hints = match &opts.delta_hint_fn {
            Some(hint) => hint(&mu_c, &cycle),
            None => Vec::new(),
        };
        hints.extend(opts.delta_hints.iter().cloned());
        let (decreased, delta) = decrease_to_prefixpoint(&f, &mu_c, &cycle, &hints)?;
        let next = dec.best_response(&decreased)?;
        trace.steps.push(TraceStep {
            strategy: c,
            mu: mu_c,
            skip: Some(SkipEvent { cycle, delta, decreased: decreased.clone() }),
        });
        c = next;
    }
}

/// Strategy iteration from below over a max-decomposition: solve and take
/// stable improvements until none exists. No vicious-cycle escape is needed;
/// the first fixpoint of the decomposed function reached from below is least.
pub fn si_below(
    dec: &Decomposition,
    solver: &mut dyn InnerSolver,
    opts: &SiOptions,
) -> Result<SiResult> {
    if dec.kind != DecompKind::Max {
        return Err(Error::InvalidModel("iteration from below needs a Max decomposition".into()));
    }
    let guard = dec.strategy_count();
    let mut c = opts.initial.clone().unwrap_or_else(|| dec.initial_strategy());
    let mut trace = Trace::default();
    loop {
        if trace.visits() as u128 >= guard.saturating_add(1) {
            return Err(Error::Soundness(
                "strategy iteration exceeded the strategy-count bound".into(),
            ));
        }
        let mu_c = solver.solve(&c, &dec.restrict(&c)?)?;
        dec.check_solution(&c, &mu_c)
            .map_err(|_| Error::Soundness("inner solver returned a non-fixpoint".into()))?;
        match max_improve_stable(dec, &c, &mu_c)? {
            Some(next) => {
                trace.steps.push(TraceStep { strategy: c, mu: mu_c, skip: None });
                c = next;
            }
            None => {
                trace.steps.push(TraceStep { strategy: c.clone(), mu: mu_c.clone(), skip: None });
                return Ok(SiResult { mu: mu_c, strategy: c, trace });
            }
        }
    }
}

/// Ground-truth least fixpoint by enumerating every strategy: the pointwise
/// min (Min kind) or max (Max kind) of all inner solutions. Guarded against
/// large strategy spaces; this is the test oracle, not an algorithm.
pub fn brute_force_mu(dec: &Decomposition, solver: &mut dyn InnerSolver) -> Result<Assignment> {
    const LIMIT: u128 = 100_000;
    let count = dec.strategy_count();
    if count > LIMIT {
        return Err(Error::StrategySpaceTooLarge(count));
    }
    let mut acc: Option<Assignment> = None;
    for c in dec.strategies() {
        let mu_c = solver.solve(&c, &dec.restrict(&c)?)?;
        dec.check_solution(&c, &mu_c)
            .map_err(|_| Error::Soundness("inner solver returned a non-fixpoint".into()))?;
        acc = Some(match acc {
            None => mu_c,
            Some(best) => match dec.kind {
                DecompKind::Min => best.meet(&mu_c)?,
                DecompKind::Max => best.join(&mu_c)?,
            },
        });
    }
    acc.ok_or(Error::EmptyDomain)
}

/// The optimal Min strategy read off the least fixpoint: at each position,
/// the (first) option attaining the fixpoint value. The dual recovery for
/// Max is unsound — locally maximal options can hide value-0 cycles — and
/// deliberately not offered; from below, take the strategy [`si_below`]
/// ends with instead.
pub fn recover_min_strategy(dec: &Decomposition, mu: &Assignment) -> Result<Strategy> {
    if dec.kind != DecompKind::Min {
        return Err(Error::InvalidModel("strategy recovery needs a Min decomposition".into()));
    }
    let f = dec.induced_function()?;
    if f.evaluate(mu)? != *mu {
        return Err(Error::NotFixpoint(
            "strategy recovery needs a fixpoint of the decomposed function".into(),
        ));
    }
    dec.best_response(mu)
}

/// Least fixpoint by ascending iteration from all-zero. Exact and guaranteed
/// to terminate on finite chains; on the unit interval it errors out after
/// `max_iters` steps unless the iteration happens to close exactly.
pub fn kleene_least_fixpoint(f: &FunTerm, chain: crate::chain::Chain, max_iters: usize) -> Result<Assignment> {
    Ok(kleene_with_steps(f, chain, max_iters)?.0)
}

/// As [`kleene_least_fixpoint`], also reporting the number of evaluation
/// rounds performed.
pub fn kleene_with_steps(
    f: &FunTerm,
    chain: crate::chain::Chain,
    max_iters: usize,
) -> Result<(Assignment, usize)> {
    let mut a = Assignment::zeros(chain, f.codomain());
    for step in 0..max_iters {
        let next = f.evaluate(&a)?;
        if next == a {
            return Ok((a, step + 1));
        }
        a = next;
    }
    Err(Error::Soundness(format!(
        "ascending iteration did not close after {max_iters} steps"
    )))
}
