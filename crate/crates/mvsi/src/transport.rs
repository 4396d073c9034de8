//! Optimal transport between finite distributions, exactly.
//!
//! The Kantorovich lifting of a distance needs, for two distributions with
//! equal total mass, a minimum-cost coupling. [`min_cost`] solves that with
//! the exact simplex from [`crate::lp`]; the returned plan is a vertex of
//! the transport polytope (simplex optima are basic solutions).
//!
//! [`vertices`] enumerates *all* vertices of a transport polytope by walking
//! spanning trees of the complete bipartite graph — exponential, intended
//! for small supports as a ground-truth oracle in tests.

use num_rational::BigRational;
use num_traits::Zero;
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::lp::{Cmp, Lp};

pub type Plan = Vec<Vec<BigRational>>;

fn check_marginals(mu: &[BigRational], nu: &[BigRational]) -> Result<()> {
    if mu.is_empty() || nu.is_empty() {
        return Err(Error::InvalidModel("transport needs non-empty marginals".into()));
    }
    if mu.iter().chain(nu).any(|m| *m < BigRational::zero()) {
        return Err(Error::InvalidModel("transport marginals must be non-negative".into()));
    }
    let total_mu: BigRational = mu.iter().sum();
    let total_nu: BigRational = nu.iter().sum();
    if total_mu != total_nu {
        return Err(Error::InvalidModel(format!(
            "transport marginals must balance: {total_mu} vs {total_nu}"
        )));
    }
    Ok(())
}

/// Minimum transport cost from `mu` to `nu` under `cost[i][j]`, with an
/// optimal plan (a vertex of the transport polytope).
pub fn min_cost(
    mu: &[BigRational],
    nu: &[BigRational],
    cost: &[Vec<BigRational>],
) -> Result<(BigRational, Plan)> {
    check_marginals(mu, nu)?;
    let (r, c) = (mu.len(), nu.len());
    let flat: Vec<BigRational> = cost.iter().flat_map(|row| row.iter().cloned()).collect();
    if cost.len() != r || flat.len() != r * c {
        return Err(Error::InvalidModel("cost matrix shape must match the marginals".into()));
    }
    let mut lp = Lp::minimize(flat);
    for (i, m) in mu.iter().enumerate() {
        let mut row = vec![BigRational::zero(); r * c];
        for j in 0..c {
            row[i * c + j] = BigRational::from_integer(1.into());
        }
        lp.constraint(row, Cmp::Eq, m.clone());
    }
    for (j, m) in nu.iter().enumerate() {
        let mut row = vec![BigRational::zero(); r * c];
        for i in 0..r {
            row[i * c + j] = BigRational::from_integer(1.into());
        }
        lp.constraint(row, Cmp::Eq, m.clone());
    }
    let sol = lp.solve()?;
    let plan: Plan = (0..r).map(|i| sol.x[i * c..(i + 1) * c].to_vec()).collect();
    Ok((sol.objective, plan))
}

/// The north-west-corner plan: a canonical vertex of the transport polytope,
/// independent of any cost.
pub fn northwest(mu: &[BigRational], nu: &[BigRational]) -> Result<Plan> {
    check_marginals(mu, nu)?;
    let (r, c) = (mu.len(), nu.len());
    let mut plan = vec![vec![BigRational::zero(); c]; r];
    let mut supply = mu.to_vec();
    let mut demand = nu.to_vec();
    let (mut i, mut j) = (0, 0);
    while i < r && j < c {
        let moved = supply[i].clone().min(demand[j].clone());
        plan[i][j] = moved.clone();
        supply[i] -= &moved;
        demand[j] -= &moved;
        // Advance past whichever side is exhausted; on a tie advance the row
        // (keeps the plan a vertex even under degeneracy).
        if supply[i].is_zero() {
            i += 1;
        } else {
            j += 1;
        }
    }
    Ok(plan)
}

/// All vertices of the transport polytope between `mu` and `nu`.
///
/// Vertices are exactly the plans whose support is a spanning forest of the
/// bipartite supply/demand graph; we enumerate spanning trees of the
/// complete bipartite graph, peel leaves to solve each tree's unique flow,
/// and keep the non-negative ones (deduplicated, since degenerate vertices
/// arise from several trees). Exponential; keep supports small.
pub fn vertices(mu: &[BigRational], nu: &[BigRational]) -> Result<Vec<Plan>> {
    check_marginals(mu, nu)?;
    let (r, c) = (mu.len(), nu.len());
    let nodes = r + c;
    let need = nodes - 1;
    let edges: Vec<(usize, usize)> =
        (0..r).flat_map(|i| (0..c).map(move |j| (i, j))).collect();

    struct Search<'a> {
        edges: Vec<(usize, usize)>,
        need: usize,
        r: usize,
        c: usize,
        nodes: usize,
        mu: &'a [BigRational],
        nu: &'a [BigRational],
        found: BTreeSet<Plan>,
    }

    impl Search<'_> {
        // Union-find over rows 0..r and columns r..r+c, rebuilt per branch;
        // cheap at these sizes and keeps the backtracking simple.
        fn acyclic(&self, edges: &[(usize, usize)]) -> bool {
            let mut parent: Vec<usize> = (0..self.nodes).collect();
            fn find(parent: &mut [usize], x: usize) -> usize {
                let mut x = x;
                while parent[x] != x {
                    parent[x] = parent[parent[x]];
                    x = parent[x];
                }
                x
            }
            for (i, j) in edges {
                let (a, b) = (find(&mut parent, *i), find(&mut parent, self.r + *j));
                if a == b {
                    return false;
                }
                parent[a] = b;
            }
            true
        }

        fn rec(&mut self, at: usize, chosen: &mut Vec<(usize, usize)>) {
            if chosen.len() == self.need {
                if let Some(plan) = solve_tree(chosen, self.r, self.c, self.mu, self.nu) {
                    self.found.insert(plan);
                }
                return;
            }
            if at == self.edges.len() || chosen.len() + (self.edges.len() - at) < self.need {
                return;
            }
            chosen.push(self.edges[at]);
            if self.acyclic(chosen) {
                self.rec(at + 1, chosen);
            }
            chosen.pop();
            self.rec(at + 1, chosen);
        }
    }

    let mut search = Search { edges, need, r, c, nodes, mu, nu, found: BTreeSet::new() };
    search.rec(0, &mut Vec::with_capacity(need));
    Ok(search.found.into_iter().collect())
}

/// Solves the unique flow on a spanning tree by leaf peeling; `None` if any
/// flow would be negative.
fn solve_tree(
    tree: &[(usize, usize)],
    r: usize,
    c: usize,
    mu: &[BigRational],
    nu: &[BigRational],
) -> Option<Plan> {
    let nodes = r + c;
    let mut balance: Vec<BigRational> = mu
        .iter()
        .cloned()
        .chain(nu.iter().cloned())
        .collect();
    let mut degree = vec![0usize; nodes];
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    for (e, (i, j)) in tree.iter().enumerate() {
        degree[*i] += 1;
        degree[r + *j] += 1;
        incident[*i].push(e);
        incident[r + *j].push(e);
    }
    let mut removed = vec![false; tree.len()];
    let mut plan = vec![vec![BigRational::zero(); c]; r];
    let mut leaves: Vec<usize> = (0..nodes).filter(|&v| degree[v] == 1).collect();
    let mut peeled = 0;
    while let Some(v) = leaves.pop() {
        let Some(&e) = incident[v].iter().find(|&&e| !removed[e]) else { continue };
        removed[e] = true;
        peeled += 1;
        let (i, j) = tree[e];
        let other = if v < r { r + j } else { i };
        let flow = balance[v].clone();
        if flow < BigRational::zero() {
            return None;
        }
        plan[i][j] = flow.clone();
        balance[v] = BigRational::zero();
        balance[other] -= &flow;
        degree[v] -= 1;
        degree[other] -= 1;
        if degree[other] == 1 {
            leaves.push(other);
        }
    }
    // A spanning tree peels completely; the last balance must be zero
    // because the marginals balance.
    if peeled != tree.len() {
        return None;
    }
    Some(plan)
}
