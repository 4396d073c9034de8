//! A combinator language for monotone, non-expansive functions `M^Y -> M^Z`.
//!
//! Terms are built from a fixed grammar of basic functions (constants,
//! reindexing, min/max over a relation, expectation over distributions,
//! truncated weight subtraction) closed under composition and disjoint
//! union. Every constructor denotes a non-expansive function, so every term
//! does; this is what makes the decrease-propagation analysis in
//! [`crate::approx`] compositional.
//!
//! Terms do not carry an explicit input domain. Each term knows which
//! positions it *reads* ([`FunTerm::reads`]) and which it *writes*
//! ([`FunTerm::codomain`]); evaluation accepts any assignment defining at
//! least the read positions. Composition is validated at construction time:
//! the outer term may only read what the inner term writes.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::assign::{Assignment, PosSet};
use crate::chain::{Chain, Value};
use crate::error::{Error, Result};
use crate::pos::Pos;

/// A probability distribution with finite support: positive rational masses
/// summing to one.
pub type Dist = BTreeMap<Pos, BigRational>;

/// Validates that `d` is a probability distribution.
pub fn check_dist(d: &Dist) -> Result<()> {
    let mut total = BigRational::zero();
    for (pos, mass) in d {
        if *mass <= BigRational::zero() {
            return Err(Error::InvalidModel(format!(
                "distribution mass at {pos} must be positive, got {mass}"
            )));
        }
        total += mass;
    }
    if !total.is_one() {
        return Err(Error::InvalidModel(format!(
            "distribution masses sum to {total}, expected 1"
        )));
    }
    Ok(())
}

/// A function term `M^Y -> M^Z`.
///
/// Relations are stored row-wise from the codomain side: `rows[z]` is the set
/// of input positions related to output position `z` (`R^{-1}(z)`), so
/// left-totality onto the codomain is simply "every row is non-empty".
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FunTerm {
    /// Ignores its input and returns the stored assignment.
    Const(Assignment),
    /// `f(a)(z) = a(u(z))` for a map `u : Z -> Y`.
    Reindex(BTreeMap<Pos, Pos>),
    /// `f(a)(z) = min { a(y) | y in rows[z] }`.
    MinRel(BTreeMap<Pos, PosSet>),
    /// `f(a)(z) = max { a(y) | y in rows[z] }`.
    MaxRel(BTreeMap<Pos, PosSet>),
    /// `f(a)(z) = sum_y rows[z](y) * a(y)`; unit interval only.
    Average(BTreeMap<Pos, Dist>),
    /// `f(a)(e) = min { max { a(e) - w(e), 0 }, k }`; finite chain only.
    /// Domain and codomain coincide.
    SubWeight { weights: BTreeMap<Pos, i64>, bound: u64 },
    /// `(outer . inner)(a) = outer(inner(a))`.
    Compose(Box<FunTerm>, Box<FunTerm>),
    /// Union of functions writing pairwise disjoint codomains, all reading
    /// from the same ambient input.
    DisjointUnion(Vec<FunTerm>),
}

impl FunTerm {
    pub fn constant(a: Assignment) -> FunTerm {
        FunTerm::Const(a)
    }

    pub fn reindex(map: impl IntoIterator<Item = (Pos, Pos)>) -> FunTerm {
        FunTerm::Reindex(map.into_iter().collect())
    }

    pub fn min_rel(rows: impl IntoIterator<Item = (Pos, PosSet)>) -> Result<FunTerm> {
        let rows: BTreeMap<Pos, PosSet> = rows.into_iter().collect();
        check_rows_nonempty(&rows)?;
        Ok(FunTerm::MinRel(rows))
    }

    pub fn max_rel(rows: impl IntoIterator<Item = (Pos, PosSet)>) -> Result<FunTerm> {
        let rows: BTreeMap<Pos, PosSet> = rows.into_iter().collect();
        check_rows_nonempty(&rows)?;
        Ok(FunTerm::MaxRel(rows))
    }

    pub fn average(rows: impl IntoIterator<Item = (Pos, Dist)>) -> Result<FunTerm> {
        let rows: BTreeMap<Pos, Dist> = rows.into_iter().collect();
        for dist in rows.values() {
            check_dist(dist)?;
        }
        Ok(FunTerm::Average(rows))
    }

    pub fn sub_weight(weights: impl IntoIterator<Item = (Pos, i64)>, bound: u64) -> Result<FunTerm> {
        if bound == 0 {
            return Err(Error::InvalidModel("sub_weight needs chain bound k >= 1".into()));
        }
        Ok(FunTerm::SubWeight { weights: weights.into_iter().collect(), bound })
    }

    /// `outer . inner`; errors unless `inner` writes everything `outer` reads.
    pub fn compose(outer: FunTerm, inner: FunTerm) -> Result<FunTerm> {
        let written = inner.codomain();
        let needed = outer.reads();
        if let Some(missing) = needed.difference(&written).next() {
            return Err(Error::InvalidModel(format!(
                "composition reads {missing} which the inner term does not produce"
            )));
        }
        Ok(FunTerm::Compose(Box::new(outer), Box::new(inner)))
    }

    /// Union of terms with pairwise disjoint codomains.
    pub fn disjoint_union(parts: impl IntoIterator<Item = FunTerm>) -> Result<FunTerm> {
        let parts: Vec<FunTerm> = parts.into_iter().collect();
        let mut seen = PosSet::new();
        for part in &parts {
            for z in part.codomain() {
                if !seen.insert(z.clone()) {
                    return Err(Error::InvalidModel(format!(
                        "disjoint union writes {z} twice"
                    )));
                }
            }
        }
        Ok(FunTerm::DisjointUnion(parts))
    }

    /// The output positions `Z`.
    pub fn codomain(&self) -> PosSet {
        match self {
            FunTerm::Const(a) => a.domain_set(),
            FunTerm::Reindex(map) => map.keys().cloned().collect(),
            FunTerm::MinRel(rows) | FunTerm::MaxRel(rows) => rows.keys().cloned().collect(),
            FunTerm::Average(rows) => rows.keys().cloned().collect(),
            FunTerm::SubWeight { weights, .. } => weights.keys().cloned().collect(),
            FunTerm::Compose(outer, _) => outer.codomain(),
            FunTerm::DisjointUnion(parts) => {
                parts.iter().flat_map(|p| p.codomain()).collect()
            }
        }
    }

    /// The input positions this term actually reads.
    pub fn reads(&self) -> PosSet {
        match self {
            FunTerm::Const(_) => PosSet::new(),
            FunTerm::Reindex(map) => map.values().cloned().collect(),
            FunTerm::MinRel(rows) | FunTerm::MaxRel(rows) => {
                rows.values().flatten().cloned().collect()
            }
            FunTerm::Average(rows) => rows.values().flat_map(|d| d.keys()).cloned().collect(),
            FunTerm::SubWeight { weights, .. } => weights.keys().cloned().collect(),
            FunTerm::Compose(_, inner) => inner.reads(),
            FunTerm::DisjointUnion(parts) => parts.iter().flat_map(|p| p.reads()).collect(),
        }
    }

    /// Applies the denoted function to `a`.
    pub fn evaluate(&self, a: &Assignment) -> Result<Assignment> {
        let chain = a.chain();
        match self {
            FunTerm::Const(k) => {
                if k.chain() != chain {
                    return Err(Error::ChainMismatch(format!(
                        "constant on {}, input on {}",
                        k.chain(),
                        chain
                    )));
                }
                Ok(k.clone())
            }
            FunTerm::Reindex(map) => {
                let mut out = Assignment::zeros(chain, []);
                for (z, y) in map {
                    out.insert(z.clone(), a.try_get(y)?.clone())?;
                }
                Ok(out)
            }
            FunTerm::MinRel(rows) => eval_rel(a, rows, Value::meet),
            FunTerm::MaxRel(rows) => eval_rel(a, rows, Value::join),
            FunTerm::Average(rows) => {
                if chain != Chain::Unit {
                    return Err(Error::ChainMismatch(
                        "expectation is only defined on the unit interval".into(),
                    ));
                }
                let mut out = Assignment::zeros(chain, []);
                for (z, dist) in rows {
                    let mut sum = BigRational::zero();
                    for (y, mass) in dist {
                        let v = a.try_get(y)?.as_rational().expect("unit chain");
                        sum += mass * v;
                    }
                    out.insert(z.clone(), Value::Unit(sum))?;
                }
                Ok(out)
            }
            FunTerm::SubWeight { weights, bound } => {
                if chain != Chain::Finite(*bound) {
                    return Err(Error::ChainMismatch(format!(
                        "sub_weight over {{0,..,{bound}}} applied to input on {chain}"
                    )));
                }
                let mut out = Assignment::zeros(chain, []);
                for (e, w) in weights {
                    let n = a.try_get(e)?.as_nat().expect("finite chain") as i128;
                    let clamped = (n - *w as i128).clamp(0, *bound as i128) as u64;
                    out.insert(e.clone(), Value::Finite { n: clamped, bound: *bound })?;
                }
                Ok(out)
            }
            FunTerm::Compose(outer, inner) => outer.evaluate(&inner.evaluate(a)?),
            FunTerm::DisjointUnion(parts) => {
                let mut out = Assignment::zeros(chain, []);
                for part in parts {
                    for (z, v) in part.evaluate(a)?.iter() {
                        if out.contains(z) {
                            return Err(Error::InvalidModel(format!(
                                "disjoint union writes {z} twice"
                            )));
                        }
                        out.insert(z.clone(), v.clone())?;
                    }
                }
                Ok(out)
            }
        }
    }
}

fn check_rows_nonempty(rows: &BTreeMap<Pos, PosSet>) -> Result<()> {
    for (z, row) in rows {
        if row.is_empty() {
            return Err(Error::InvalidModel(format!(
                "relation row for {z} is empty (must be left-total onto the codomain)"
            )));
        }
    }
    Ok(())
}

fn eval_rel(
    a: &Assignment,
    rows: &BTreeMap<Pos, PosSet>,
    pick: impl Fn(&Value, &Value) -> Value,
) -> Result<Assignment> {
    let mut out = Assignment::zeros(a.chain(), []);
    for (z, row) in rows {
        let mut acc: Option<Value> = None;
        for y in row {
            let v = a.try_get(y)?;
            acc = Some(match acc {
                None => v.clone(),
                Some(cur) => pick(&cur, v),
            });
        }
        out.insert(z.clone(), acc.expect("rows validated non-empty"))?;
    }
    Ok(out)
}
