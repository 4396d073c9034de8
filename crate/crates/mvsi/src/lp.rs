//! Exact linear programming over rationals.
//!
//! A small dense two-phase primal simplex with Bland's pivoting rule, used
//! as the inner solver for fixed-strategy value systems and for optimal
//! transport. All arithmetic is in `BigRational`, so optima are exact and
//! the degenerate pivoting that plagues floating-point simplex is handled
//! by Bland's rule alone (which guarantees termination).
//!
//! Variables are non-negative; every problem this crate builds is naturally
//! in that form (values live in `[0, 1]`, transport mass is non-negative),
//! with upper bounds expressed as ordinary rows.

use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

/// A linear program over non-negative variables.
#[derive(Debug, Clone)]
pub struct Lp {
    n: usize,
    maximize: bool,
    obj: Vec<BigRational>,
    rows: Vec<(Vec<BigRational>, Cmp, BigRational)>,
}

/// An optimal vertex solution.
#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Vec<BigRational>,
    pub objective: BigRational,
}

impl Lp {
    pub fn minimize(obj: Vec<BigRational>) -> Lp {
        Lp { n: obj.len(), maximize: false, obj, rows: Vec::new() }
    }

    pub fn maximize(obj: Vec<BigRational>) -> Lp {
        Lp { n: obj.len(), maximize: true, obj, rows: Vec::new() }
    }

    pub fn constraint(&mut self, coeffs: Vec<BigRational>, cmp: Cmp, rhs: BigRational) {
        assert_eq!(coeffs.len(), self.n, "constraint width must match variable count");
        self.rows.push((coeffs, cmp, rhs));
    }

    /// Solves the program; `Err(Infeasible)` / `Err(Unbounded)` as appropriate.
    pub fn solve(&self) -> Result<Solution> {
        let x = simplex(self)?;
        // Defence in depth: re-check every constraint on the exact solution.
        for (coeffs, cmp, rhs) in &self.rows {
            let lhs: BigRational = coeffs.iter().zip(&x).map(|(c, v)| c * v).sum();
            let ok = match cmp {
                Cmp::Le => lhs <= *rhs,
                Cmp::Ge => lhs >= *rhs,
                Cmp::Eq => lhs == *rhs,
            };
            if !ok {
                return Err(Error::Soundness(format!(
                    "simplex returned an infeasible point: row gives {lhs}, wanted {cmp:?} {rhs}"
                )));
            }
        }
        let objective = self.obj.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(Solution { x, objective })
    }
}

struct Tableau {
    /// `rows[i]` has one entry per column plus the right-hand side last.
    rows: Vec<Vec<BigRational>>,
    /// Reduced-cost row, same width; its rhs slot holds minus the objective.
    cost: Vec<BigRational>,
    /// Basic column of each row.
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let factor = self.rows[row][col].clone();
        for v in &mut self.rows[row] {
            *v /= &factor;
        }
        for i in 0..self.rows.len() {
            if i != row && !self.rows[i][col].is_zero() {
                let scale = self.rows[i][col].clone();
                for j in 0..=self.ncols {
                    let delta = &scale * &self.rows[row][j];
                    self.rows[i][j] -= delta;
                }
            }
        }
        if !self.cost[col].is_zero() {
            let scale = self.cost[col].clone();
            for j in 0..=self.ncols {
                let delta = &scale * &self.rows[row][j];
                self.cost[j] -= delta;
            }
        }
        self.basis[row] = col;
    }

    /// Runs simplex iterations until optimal, with Bland's rule: entering
    /// column is the lowest-index one with negative reduced cost, leaving
    /// row breaks ratio ties by lowest basic column. Returns false on
    /// unboundedness.
    fn optimize(&mut self, allowed_cols: usize) -> bool {
        loop {
            let entering = (0..allowed_cols).find(|&j| self.cost[j] < BigRational::zero());
            let Some(col) = entering else { return true };
            let mut leaving: Option<(usize, BigRational)> = None;
            for i in 0..self.rows.len() {
                if self.rows[i][col] > BigRational::zero() {
                    let ratio = &self.rows[i][self.ncols] / &self.rows[i][col];
                    let better = match &leaving {
                        None => true,
                        Some((r, best)) => {
                            ratio < *best || (ratio == *best && self.basis[i] < self.basis[*r])
                        }
                    };
                    if better {
                        leaving = Some((i, ratio));
                    }
                }
            }
            let Some((row, _)) = leaving else { return false };
            self.pivot(row, col);
        }
    }

    fn install_cost(&mut self, cost: Vec<BigRational>) {
        debug_assert_eq!(cost.len(), self.ncols + 1);
        self.cost = cost;
        for i in 0..self.rows.len() {
            let b = self.basis[i];
            if !self.cost[b].is_zero() {
                let scale = self.cost[b].clone();
                for j in 0..=self.ncols {
                    let delta = &scale * &self.rows[i][j];
                    self.cost[j] -= delta;
                }
            }
        }
    }
}

fn simplex(lp: &Lp) -> Result<Vec<BigRational>> {
    let n = lp.n;
    let m = lp.rows.len();
    let zero = BigRational::zero;
    let one = || BigRational::from_integer(1.into());

    // Normalize to b >= 0 and count extra columns.
    let mut norm: Vec<(Vec<BigRational>, Cmp, BigRational)> = Vec::with_capacity(m);
    for (coeffs, cmp, rhs) in &lp.rows {
        if *rhs < zero() {
            let flipped = match cmp {
                Cmp::Le => Cmp::Ge,
                Cmp::Ge => Cmp::Le,
                Cmp::Eq => Cmp::Eq,
            };
            norm.push((coeffs.iter().map(|c| -c).collect(), flipped, -rhs));
        } else {
            norm.push((coeffs.clone(), *cmp, rhs.clone()));
        }
    }
    let nslack = norm.iter().filter(|(_, c, _)| *c != Cmp::Eq).count();
    let nart = norm.iter().filter(|(_, c, _)| *c != Cmp::Le).count();
    let ncols = n + nslack + nart;

    let mut t = Tableau {
        rows: Vec::with_capacity(m),
        cost: vec![zero(); ncols + 1],
        basis: vec![0; m],
        ncols,
    };
    let mut next_slack = n;
    let mut next_art = n + nslack;
    for (i, (coeffs, cmp, rhs)) in norm.iter().enumerate() {
        let mut row = vec![zero(); ncols + 1];
        row[..n].clone_from_slice(coeffs);
        row[ncols] = rhs.clone();
        match cmp {
            Cmp::Le => {
                row[next_slack] = one();
                t.basis[i] = next_slack;
                next_slack += 1;
            }
            Cmp::Ge => {
                row[next_slack] = -one();
                next_slack += 1;
                row[next_art] = one();
                t.basis[i] = next_art;
                next_art += 1;
            }
            Cmp::Eq => {
                row[next_art] = one();
                t.basis[i] = next_art;
                next_art += 1;
            }
        }
        t.rows.push(row);
    }

    // Phase 1: minimize the sum of artificials.
    if nart > 0 {
        let mut phase1 = vec![zero(); ncols + 1];
        for c in phase1.iter_mut().take(ncols).skip(n + nslack) {
            *c = one();
        }
        t.install_cost(phase1);
        if !t.optimize(ncols) {
            return Err(Error::Soundness("phase-1 simplex reported unbounded".into()));
        }
        if -t.cost[ncols].clone() > zero() {
            return Err(Error::Infeasible);
        }
        // Pivot any degenerate artificial out of the basis, or drop its row
        // if it is redundant.
        let art_start = n + nslack;
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] >= art_start {
                if let Some(col) = (0..art_start).find(|&j| !t.rows[i][j].is_zero()) {
                    t.pivot(i, col);
                    i += 1;
                } else {
                    t.rows.remove(i);
                    t.basis.remove(i);
                }
            } else {
                i += 1;
            }
        }
        // Artificial columns are no longer allowed; phase 2 restricts the
        // entering-column scan to the structural and slack columns.
    }

    // Phase 2: the real objective (negated for maximization).
    let mut phase2 = vec![zero(); ncols + 1];
    for (slot, c) in phase2.iter_mut().zip(&lp.obj) {
        *slot = if lp.maximize { -c.clone() } else { c.clone() };
    }
    t.install_cost(phase2);
    if !t.optimize(n + nslack) {
        return Err(Error::Unbounded);
    }

    let mut x = vec![zero(); n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rows[i][t.ncols].clone();
        }
    }
    Ok(x)
}
