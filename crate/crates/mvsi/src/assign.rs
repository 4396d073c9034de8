//! Assignments: elements of the function space `M^Y`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::chain::{Chain, Value};
use crate::error::{Error, Result};
use crate::pos::Pos;

/// A finite set of positions, iterated in stable order.
pub type PosSet = BTreeSet<Pos>;

/// A total map from a finite position set into one MV-chain.
///
/// Equality is exact; iteration follows the position order, so printed output
/// and tie-breaking are deterministic.
#[derive(Clone, PartialEq, Eq)]
pub struct Assignment {
    chain: Chain,
    vals: BTreeMap<Pos, Value>,
}

impl Assignment {
    /// Builds an assignment, checking every value against `chain`.
    pub fn new(chain: Chain, vals: impl IntoIterator<Item = (Pos, Value)>) -> Result<Assignment> {
        let mut map = BTreeMap::new();
        for (pos, val) in vals {
            if val.chain() != chain {
                return Err(Error::ChainMismatch(format!(
                    "value {val} at {pos} lives on {}, expected {chain}",
                    val.chain()
                )));
            }
            if map.insert(pos.clone(), val).is_some() {
                return Err(Error::InvalidModel(format!("duplicate position {pos}")));
            }
        }
        Ok(Assignment { chain, vals: map })
    }

    /// The constant-zero assignment on `domain`.
    pub fn zeros(chain: Chain, domain: impl IntoIterator<Item = Pos>) -> Assignment {
        let vals = domain.into_iter().map(|p| (p, chain.zero())).collect();
        Assignment { chain, vals }
    }

    pub fn chain(&self) -> Chain {
        self.chain
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn contains(&self, pos: &Pos) -> bool {
        self.vals.contains_key(pos)
    }

    pub fn get(&self, pos: &Pos) -> Option<&Value> {
        self.vals.get(pos)
    }

    /// Like `get`, but a missing position is a domain error.
    pub fn try_get(&self, pos: &Pos) -> Result<&Value> {
        self.vals
            .get(pos)
            .ok_or_else(|| Error::DomainMismatch(format!("position {pos} not in domain")))
    }

    pub fn insert(&mut self, pos: Pos, val: Value) -> Result<()> {
        if val.chain() != self.chain {
            return Err(Error::ChainMismatch(format!(
                "value {val} at {pos} lives on {}, expected {}",
                val.chain(),
                self.chain
            )));
        }
        self.vals.insert(pos, val);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Pos, &Value)> {
        self.vals.iter()
    }

    pub fn domain(&self) -> impl Iterator<Item = &Pos> {
        self.vals.keys()
    }

    pub fn domain_set(&self) -> PosSet {
        self.vals.keys().cloned().collect()
    }

    /// The support `[Y]^a`: positions with non-zero value.
    pub fn support(&self) -> PosSet {
        self.vals
            .iter()
            .filter(|(_, v)| !v.is_zero())
            .map(|(p, _)| p.clone())
            .collect()
    }

    /// Pointwise order; requires equal domains.
    pub fn leq(&self, other: &Assignment) -> Result<bool> {
        self.same_domain(other)?;
        Ok(self
            .vals
            .iter()
            .all(|(p, v)| v.leq(other.get(p).expect("equal domains"))))
    }

    fn same_domain(&self, other: &Assignment) -> Result<()> {
        if self.chain != other.chain {
            return Err(Error::ChainMismatch(format!(
                "assignments on {} vs {}",
                self.chain, other.chain
            )));
        }
        if self.len() != other.len() || !self.vals.keys().eq(other.vals.keys()) {
            return Err(Error::DomainMismatch("assignments have different domains".into()));
        }
        Ok(())
    }

    /// Pointwise truncated subtraction `self ominus other` (equal domains).
    pub fn ominus(&self, other: &Assignment) -> Result<Assignment> {
        self.same_domain(other)?;
        let vals = self
            .vals
            .iter()
            .map(|(p, v)| (p.clone(), v.ominus(other.get(p).expect("equal domains"))))
            .collect();
        Ok(Assignment { chain: self.chain, vals })
    }

    /// Pointwise join (equal domains).
    pub fn join(&self, other: &Assignment) -> Result<Assignment> {
        self.same_domain(other)?;
        let vals = self
            .vals
            .iter()
            .map(|(p, v)| (p.clone(), v.join(other.get(p).expect("equal domains"))))
            .collect();
        Ok(Assignment { chain: self.chain, vals })
    }

    /// Pointwise meet (equal domains).
    pub fn meet(&self, other: &Assignment) -> Result<Assignment> {
        self.same_domain(other)?;
        let vals = self
            .vals
            .iter()
            .map(|(p, v)| (p.clone(), v.meet(other.get(p).expect("equal domains"))))
            .collect();
        Ok(Assignment { chain: self.chain, vals })
    }

    /// The sup-norm `max_y a(y)`; errors on an empty domain.
    pub fn norm(&self) -> Result<Value> {
        self.vals
            .values()
            .cloned()
            .reduce(|acc, v| acc.join(&v))
            .ok_or(Error::EmptyDomain)
    }

    /// `a ominus delta_{ys}`: subtract `delta` at the positions in `ys`,
    /// truncating at zero; all other positions are untouched. `ys` must lie
    /// inside the domain and `delta` on the right chain.
    pub fn decrease(&self, ys: &PosSet, delta: &Value) -> Result<Assignment> {
        if delta.chain() != self.chain {
            return Err(Error::ChainMismatch(format!(
                "delta on {}, assignment on {}",
                delta.chain(),
                self.chain
            )));
        }
        let mut vals = self.vals.clone();
        for y in ys {
            match vals.get_mut(y) {
                Some(v) => *v = v.ominus(delta),
                None => {
                    return Err(Error::DomainMismatch(format!(
                        "decrease position {y} not in domain"
                    )))
                }
            }
        }
        Ok(Assignment { chain: self.chain, vals })
    }

    /// Restriction to the positions in `ys` (which must be in the domain).
    pub fn restrict(&self, ys: &PosSet) -> Result<Assignment> {
        let mut vals = BTreeMap::new();
        for y in ys {
            vals.insert(y.clone(), self.try_get(y)?.clone());
        }
        Ok(Assignment { chain: self.chain, vals })
    }
}

fn fmt_entries(a: &Assignment, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(f, "{{")?;
    for (i, (p, v)) in a.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{p}: {v}")?;
    }
    write!(f, "}}")
}

impl fmt::Debug for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_entries(self, f)
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_entries(self, f)
    }
}
