//! Complete MV-chains and their elements.
//!
//! Two chains are supported: the real unit interval `[0, 1]` with truncated
//! addition, and the finite chain `{0, .., k}`. Both are MV-algebras whose
//! natural order is total and coincides with the numeric order; derived join
//! and meet are numeric max and min (property-tested below against their
//! algebraic definitions `(x ominus y) oplus y` and `x ominus (x ominus y)`).
//!
//! Elements are exact: arbitrary-precision rationals on the unit interval,
//! bounded naturals on the finite chain. Arithmetic between elements of
//! different chains is a programming error and panics; fallible entry points
//! (parsers, model constructors) validate chains up front.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Descriptor of a complete MV-chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Chain {
    /// The real interval `[0, 1]` with truncated addition.
    Unit,
    /// The finite chain `{0, .., k}`; `k >= 1`.
    Finite(u64),
}

impl Chain {
    pub fn finite(k: u64) -> Result<Chain> {
        if k == 0 {
            return Err(Error::InvalidModel("finite chain needs bound k >= 1".into()));
        }
        Ok(Chain::Finite(k))
    }

    pub fn zero(&self) -> Value {
        match *self {
            Chain::Unit => Value::Unit(BigRational::zero()),
            Chain::Finite(k) => Value::Finite { n: 0, bound: k },
        }
    }

    /// The top element: `1` on the unit interval, `k` on the finite chain.
    pub fn one(&self) -> Value {
        match *self {
            Chain::Unit => Value::Unit(BigRational::one()),
            Chain::Finite(k) => Value::Finite { n: k, bound: k },
        }
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Chain::Unit => write!(f, "[0,1]"),
            Chain::Finite(k) => write!(f, "{{0,..,{k}}}"),
        }
    }
}

/// An element of an MV-chain. Carries enough information to know its chain,
/// so mismatched arithmetic can be detected.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Unit(BigRational),
    Finite { n: u64, bound: u64 },
}

impl Value {
    /// A unit-interval element; errors unless `0 <= q <= 1`.
    pub fn unit(q: BigRational) -> Result<Value> {
        if q < BigRational::zero() || q > BigRational::one() {
            return Err(Error::InvalidModel(format!("value {q} outside [0, 1]")));
        }
        Ok(Value::Unit(q))
    }

    /// A finite-chain element; errors unless `n <= bound` and `bound >= 1`.
    pub fn finite(n: u64, bound: u64) -> Result<Value> {
        if bound == 0 {
            return Err(Error::InvalidModel("finite chain needs bound k >= 1".into()));
        }
        if n > bound {
            return Err(Error::InvalidModel(format!("value {n} exceeds chain bound {bound}")));
        }
        Ok(Value::Finite { n, bound })
    }

    pub fn chain(&self) -> Chain {
        match self {
            Value::Unit(_) => Chain::Unit,
            Value::Finite { bound, .. } => Chain::Finite(*bound),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Value::Unit(q) => q.is_zero(),
            Value::Finite { n, .. } => *n == 0,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Value::Unit(q) => Some(q),
            Value::Finite { .. } => None,
        }
    }

    pub fn as_nat(&self) -> Option<u64> {
        match self {
            Value::Unit(_) => None,
            Value::Finite { n, .. } => Some(*n),
        }
    }

    fn check_same_chain(&self, other: &Value, op: &str) {
        if self.chain() != other.chain() {
            panic!(
                "chain mismatch in {op}: {} vs {}",
                self.chain(),
                other.chain()
            );
        }
    }

    /// Truncated addition `x oplus y`.
    pub fn oplus(&self, other: &Value) -> Value {
        self.check_same_chain(other, "oplus");
        match (self, other) {
            (Value::Unit(a), Value::Unit(b)) => {
                let s = a + b;
                Value::Unit(if s > BigRational::one() { BigRational::one() } else { s })
            }
            (Value::Finite { n: a, bound }, Value::Finite { n: b, .. }) => Value::Finite {
                n: a.saturating_add(*b).min(*bound),
                bound: *bound,
            },
            _ => unreachable!(),
        }
    }

    /// Truncated subtraction `x ominus y = max { x - y, 0 }`.
    pub fn ominus(&self, other: &Value) -> Value {
        self.check_same_chain(other, "ominus");
        match (self, other) {
            (Value::Unit(a), Value::Unit(b)) => {
                let d = a - b;
                Value::Unit(if d < BigRational::zero() { BigRational::zero() } else { d })
            }
            (Value::Finite { n: a, bound }, Value::Finite { n: b, .. }) => Value::Finite {
                n: a.saturating_sub(*b),
                bound: *bound,
            },
            _ => unreachable!(),
        }
    }

    /// The MV complement: `1 - x` on the unit interval, `k - n` on `{0,..,k}`.
    pub fn complement(&self) -> Value {
        match self {
            Value::Unit(q) => Value::Unit(BigRational::one() - q),
            Value::Finite { n, bound } => Value::Finite { n: bound - n, bound: *bound },
        }
    }

    /// Total order among elements of the same chain. Panics on mismatch.
    pub fn cmp_on_chain(&self, other: &Value) -> Ordering {
        self.check_same_chain(other, "comparison");
        match (self, other) {
            (Value::Unit(a), Value::Unit(b)) => a.cmp(b),
            (Value::Finite { n: a, .. }, Value::Finite { n: b, .. }) => a.cmp(b),
            _ => unreachable!(),
        }
    }

    /// The natural MV order (which is the numeric one on chains).
    pub fn leq(&self, other: &Value) -> bool {
        self.cmp_on_chain(other) != Ordering::Greater
    }

    /// Join `x squp y`; numerically `max` (equals `(x ominus y) oplus y`).
    pub fn join(&self, other: &Value) -> Value {
        if self.leq(other) { other.clone() } else { self.clone() }
    }

    /// Meet `x sqcap y`; numerically `min` (equals `x ominus (x ominus y)`).
    pub fn meet(&self, other: &Value) -> Value {
        if self.leq(other) { self.clone() } else { other.clone() }
    }
}

impl PartialOrd for Value {
    /// Comparable only within one chain; `None` across chains.
    fn partial_cmp(&self, other: &Value) -> Option<Ordering> {
        if self.chain() != other.chain() {
            return None;
        }
        Some(self.cmp_on_chain(other))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit(q) => {
                if q.denom() == &BigInt::one() {
                    write!(f, "{}", q.numer())
                } else {
                    write!(f, "{}/{}", q.numer(), q.denom())
                }
            }
            Value::Finite { n, .. } => write!(f, "{n}"),
        }
    }
}

/// Convenience constructor for exact rationals in tests and fixtures.
pub fn rat(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}
