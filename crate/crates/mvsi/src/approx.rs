//! Decrease propagation for function terms.
//!
//! For a function `f : M^Y -> M^Z` and an assignment `a`, the approximation
//! `f_#^a : P([Y]^a) -> P([Z]^{f(a)})` answers: if the values at a set of
//! non-zero input positions are all lowered by some small amount, which
//! output positions are guaranteed to drop by that same amount? Each
//! combinator admits an exact closed form (computed against `a` once, then
//! reusable for any input set), and the forms compose.
//!
//! The payoff is [`nu_approx`]: the greatest fixpoint of `f_#^a` on the
//! support of a fixpoint `a` of `f`. It is empty iff `a` is the *least*
//! fixpoint; when non-empty it names a set of positions — a "vicious cycle"
//! sustaining itself — whose values can all be decreased together while
//! staying above or landing on a pre-fixpoint, which [`decrease_to_prefixpoint`]
//! then does. [`nu_star`] is the analogous certificate for post-fixpoints
//! (`a <= f(a)`): emptiness proves `a` is below the least fixpoint.

use crate::assign::{Assignment, PosSet};
use crate::chain::{Chain, Value};
use crate::error::{Error, Result};
use crate::pos::Pos;
use crate::term::FunTerm;

use num_rational::BigRational;
use num_traits::Zero;
use std::collections::BTreeMap;

/// The closed-form approximation of one term, precomputed at a fixed
/// assignment. Applying it to an input set is pure set manipulation.
#[derive(Debug)]
enum Node {
    /// Constants propagate nothing.
    Empty,
    /// `z` drops iff `u(z)` drops.
    Reindex(BTreeMap<Pos, Pos>),
    /// `z` drops iff some witness of its minimum drops: rows hold the argmin
    /// sets of output positions with non-zero value.
    MinWitness(Vec<(Pos, PosSet)>),
    /// `z` drops iff every witness of its maximum drops: rows hold the argmax
    /// sets of output positions with non-zero value.
    MaxWitness(Vec<(Pos, PosSet)>),
    /// An expectation drops by the full amount iff its whole support drops:
    /// rows hold supports of output positions with non-zero value.
    Support(Vec<(Pos, PosSet)>),
    /// Truncated subtraction passes a drop through exactly on the edges where
    /// the subtraction is "live" (result strictly between the chain ends
    /// before clamping on the left, i.e. `0 < a(e) - w(e) <= k`).
    Live(PosSet),
    /// Outer approximation (at the inner image) after the inner one.
    Compose(Box<Node>, Box<Node>),
    Union(Vec<Node>),
}

impl Node {
    fn apply(&self, ys: &PosSet) -> PosSet {
        match self {
            Node::Empty => PosSet::new(),
            Node::Reindex(map) => map
                .iter()
                .filter(|(_, y)| ys.contains(*y))
                .map(|(z, _)| z.clone())
                .collect(),
            Node::MinWitness(rows) => rows
                .iter()
                .filter(|(_, argmin)| !argmin.is_disjoint(ys))
                .map(|(z, _)| z.clone())
                .collect(),
            Node::MaxWitness(rows) => rows
                .iter()
                .filter(|(_, argmax)| argmax.is_subset(ys))
                .map(|(z, _)| z.clone())
                .collect(),
            Node::Support(rows) => rows
                .iter()
                .filter(|(_, supp)| supp.is_subset(ys))
                .map(|(z, _)| z.clone())
                .collect(),
            Node::Live(set) => set.intersection(ys).cloned().collect(),
            Node::Compose(outer, inner) => outer.apply(&inner.apply(ys)),
            Node::Union(parts) => parts.iter().flat_map(|p| p.apply(ys)).collect(),
        }
    }
}

/// A term's approximation at a fixed assignment, ready to apply to many
/// input sets (one evaluation of the term per [`prepare`](Self::prepare)).
#[derive(Debug)]
pub struct Propagation {
    node: Node,
    image: Assignment,
}

impl Propagation {
    /// Evaluates `f` at `a` once and precomputes the closed form of `f_#^a`.
    pub fn prepare(f: &FunTerm, a: &Assignment) -> Result<Propagation> {
        let (node, image) = build(f, a)?;
        Ok(Propagation { node, image })
    }

    /// `f(a)`, reused from preparation.
    pub fn image(&self) -> &Assignment {
        &self.image
    }

    /// Applies the approximation to `ys`. No precondition check; callers
    /// that accept external sets should verify `ys` lies in the support
    /// of `a` first.
    pub fn apply(&self, ys: &PosSet) -> PosSet {
        self.node.apply(ys)
    }
}

fn witness_rows(
    a: &Assignment,
    rows: &BTreeMap<Pos, PosSet>,
    keep: impl Fn(&Value, &Value) -> bool,
) -> Result<(Vec<(Pos, PosSet)>, Assignment)> {
    let mut out_rows = Vec::new();
    let mut image = Assignment::zeros(a.chain(), []);
    for (z, row) in rows {
        let mut best: Option<Value> = None;
        for y in row {
            let v = a.try_get(y)?;
            best = Some(match best {
                None => v.clone(),
                Some(cur) => {
                    if keep(v, &cur) {
                        v.clone()
                    } else {
                        cur
                    }
                }
            });
        }
        let best = best.expect("rows validated non-empty");
        if !best.is_zero() {
            let witnesses: PosSet = row
                .iter()
                .filter(|y| a.get(y) == Some(&best))
                .cloned()
                .collect();
            out_rows.push((z.clone(), witnesses));
        }
        image.insert(z.clone(), best)?;
    }
    Ok((out_rows, image))
}

fn build(f: &FunTerm, a: &Assignment) -> Result<(Node, Assignment)> {
    match f {
        FunTerm::Const(_) => Ok((Node::Empty, f.evaluate(a)?)),
        FunTerm::Reindex(map) => Ok((Node::Reindex(map.clone()), f.evaluate(a)?)),
        FunTerm::MinRel(rows) => {
            let (rows, image) = witness_rows(a, rows, |v, cur| v.cmp_on_chain(cur).is_lt())?;
            Ok((Node::MinWitness(rows), image))
        }
        FunTerm::MaxRel(rows) => {
            let (rows, image) = witness_rows(a, rows, |v, cur| v.cmp_on_chain(cur).is_gt())?;
            Ok((Node::MaxWitness(rows), image))
        }
        FunTerm::Average(rows) => {
            let image = f.evaluate(a)?;
            let mut out_rows = Vec::new();
            for (z, dist) in rows {
                if !image.try_get(z)?.is_zero() {
                    out_rows.push((z.clone(), dist.keys().cloned().collect()));
                }
            }
            Ok((Node::Support(out_rows), image))
        }
        FunTerm::SubWeight { weights, bound } => {
            if a.chain() != Chain::Finite(*bound) {
                return Err(Error::ChainMismatch(format!(
                    "sub_weight over {{0,..,{bound}}} applied to input on {}",
                    a.chain()
                )));
            }
            let image = f.evaluate(a)?;
            let mut live = PosSet::new();
            for (e, w) in weights {
                let raw = a.try_get(e)?.as_nat().expect("finite chain") as i128 - *w as i128;
                if 0 < raw && raw <= *bound as i128 {
                    live.insert(e.clone());
                }
            }
            Ok((Node::Live(live), image))
        }
        FunTerm::Compose(outer, inner) => {
            let (inner_node, mid) = build(inner, a)?;
            let (outer_node, image) = build(outer, &mid)?;
            Ok((Node::Compose(Box::new(outer_node), Box::new(inner_node)), image))
        }
        FunTerm::DisjointUnion(parts) => {
            let mut nodes = Vec::with_capacity(parts.len());
            let mut image = Assignment::zeros(a.chain(), []);
            for part in parts {
                let (node, part_image) = build(part, a)?;
                nodes.push(node);
                for (z, v) in part_image.iter() {
                    if image.contains(z) {
                        return Err(Error::InvalidModel(format!(
                            "disjoint union writes {z} twice"
                        )));
                    }
                    image.insert(z.clone(), v.clone())?;
                }
            }
            Ok((Node::Union(nodes), image))
        }
    }
}

impl FunTerm {
    /// One-shot approximation: the output positions guaranteed to drop along
    /// with `ys`. Requires `ys` to consist of non-zero positions of `a`.
    pub fn approx(&self, a: &Assignment, ys: &PosSet) -> Result<PosSet> {
        for y in ys {
            if a.try_get(y)?.is_zero() {
                return Err(Error::DomainMismatch(format!(
                    "approximation input {y} has value 0; only non-zero positions can drop"
                )));
            }
        }
        Ok(Propagation::prepare(self, a)?.apply(ys))
    }
}

fn check_endo(f: &FunTerm, a: &Assignment) -> Result<()> {
    if f.codomain() != a.domain_set() {
        return Err(Error::DomainMismatch(
            "fixpoint checks need an endofunction: term codomain must equal the assignment domain"
                .into(),
        ));
    }
    Ok(())
}

/// Greatest fixpoint of a monotone set map on subsets of `start`, by
/// descending iteration.
fn greatest_fixpoint(start: PosSet, mut step: impl FnMut(&PosSet) -> PosSet) -> PosSet {
    let mut cur = start;
    loop {
        let next: PosSet = step(&cur).intersection(&cur).cloned().collect();
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

/// For a fixpoint `a` of `f`, the largest self-sustaining set of non-zero
/// positions. Empty iff `a` is the least fixpoint of `f`.
pub fn nu_approx(f: &FunTerm, a: &Assignment) -> Result<PosSet> {
    check_endo(f, a)?;
    let prop = Propagation::prepare(f, a)?;
    if prop.image() != a {
        return Err(Error::NotFixpoint(format!(
            "nu_approx needs a fixpoint; f(a) differs from a at {}",
            first_difference(a, prop.image())
        )));
    }
    Ok(greatest_fixpoint(a.support(), |ys| prop.apply(ys)))
}

/// For a post-fixpoint `a <= f(a)`, the largest self-sustaining set of
/// non-zero positions *on which `a` and `f(a)` agree*. If empty, `a` is
/// below the least fixpoint of `f`; the converse can fail, so a non-empty
/// result proves nothing.
pub fn nu_star(f: &FunTerm, a: &Assignment) -> Result<PosSet> {
    check_endo(f, a)?;
    let prop = Propagation::prepare(f, a)?;
    if !a.leq(prop.image())? {
        return Err(Error::NotFixpoint(format!(
            "nu_star needs a post-fixpoint (a <= f(a)); violated at {}",
            first_difference(a, prop.image())
        )));
    }
    let frozen: PosSet = a
        .iter()
        .filter(|(y, v)| !v.is_zero() && prop.image().get(y) == Some(*v))
        .map(|(y, _)| y.clone())
        .collect();
    Ok(greatest_fixpoint(frozen, |ys| prop.apply(ys)))
}

fn first_difference(a: &Assignment, b: &Assignment) -> String {
    for (y, v) in a.iter() {
        if b.get(y) != Some(v) {
            return format!("{y} ({v} vs {})", b.get(y).map_or("absent".into(), Value::to_string));
        }
    }
    "nowhere".into()
}

/// Decreases a fixpoint `a` on the vicious cycle `ys` to a strictly smaller
/// pre-fixpoint `a ominus delta_ys`, returning it with the `delta` used.
///
/// Candidate amounts are tried largest-first and each is validated by an
/// explicit pre-fixpoint check, so a returned pair is always sound. `hints`
/// are tried before the generic candidates (a caller with a problem-specific
/// bound can usually skip the scan).
pub fn decrease_to_prefixpoint(
    f: &FunTerm,
    a: &Assignment,
    ys: &PosSet,
    hints: &[Value],
) -> Result<(Assignment, Value)> {
    check_endo(f, a)?;
    decrease_with(|x| f.evaluate(x), a, ys, hints)
}

/// [`decrease_to_prefixpoint`] for functions evaluated by a closure rather
/// than represented as a term (the metric operator on automata is far too
/// large to write out). Same candidates, same validation.
pub fn decrease_with(
    eval: impl Fn(&Assignment) -> Result<Assignment>,
    a: &Assignment,
    ys: &PosSet,
    hints: &[Value],
) -> Result<(Assignment, Value)> {
    if ys.is_empty() {
        return Err(Error::NotFixpoint(
            "cannot decrease on an empty set of positions".into(),
        ));
    }
    if eval(a)? != a.clone() {
        return Err(Error::NotFixpoint(
            "decrease_to_prefixpoint needs a fixpoint to start from".into(),
        ));
    }
    for y in ys {
        if a.try_get(y)?.is_zero() {
            return Err(Error::DomainMismatch(format!(
                "cannot decrease {y}: its value is already 0"
            )));
        }
    }

    let mut tried = Vec::new();
    let mut try_delta = |delta: &Value| -> Result<Option<(Assignment, Value)>> {
        if delta.is_zero() || tried.contains(delta) {
            return Ok(None);
        }
        tried.push(delta.clone());
        let candidate = a.decrease(ys, delta)?;
        if eval(&candidate)?.leq(&candidate)? {
            Ok(Some((candidate, delta.clone())))
        } else {
            Ok(None)
        }
    };

    for hint in hints {
        if let Some(found) = try_delta(hint)? {
            return Ok(found);
        }
    }
    match a.chain() {
        Chain::Finite(bound) => {
            // Any amount up to the smallest value on the cycle makes every
            // cycle position actually drop; scan those largest-first.
            let cap = ys
                .iter()
                .map(|y| a.get(y).unwrap().as_nat().unwrap())
                .min()
                .unwrap();
            for n in (1..=cap).rev() {
                if let Some(found) = try_delta(&Value::Finite { n, bound })? {
                    return Ok(found);
                }
            }
        }
        Chain::Unit => {
            // All positive pairwise differences of values in `a`, plus the
            // smallest non-zero value, largest first; then halve the smallest
            // candidate, since a valid amount can be strictly below every
            // value gap only by a bounded factor.
            let vals: Vec<BigRational> =
                a.iter().map(|(_, v)| v.as_rational().unwrap().clone()).collect();
            let mut cands: Vec<BigRational> = Vec::new();
            for v in &vals {
                if !v.is_zero() {
                    cands.push(v.clone());
                }
                for w in &vals {
                    let d = v - w;
                    if d > BigRational::zero() {
                        cands.push(d);
                    }
                }
            }
            cands.sort();
            cands.dedup();
            cands.reverse();
            for c in &cands {
                if let Some(found) = try_delta(&Value::Unit(c.clone()))? {
                    return Ok(found);
                }
            }
            if let Some(smallest) = cands.last() {
                let mut half = smallest.clone();
                for _ in 0..64 {
                    half /= BigRational::from_integer(2.into());
                    if let Some(found) = try_delta(&Value::Unit(half.clone()))? {
                        return Ok(found);
                    }
                }
            }
        }
    }
    Err(Error::Soundness(
        "no decrease produced a pre-fixpoint; the input was not a fixpoint with a vicious cycle"
            .into(),
    ))
}
