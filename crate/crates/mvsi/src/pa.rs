//! Behavioural distances on probabilistic automata.
//!
//! Every state carries a label and a non-empty finite set of successor
//! distributions. The distance operator lifts a candidate metric `d` on
//! states twice: the Kantorovich lifting `K(d)` compares two distributions
//! by the cheapest transport plan between them, and the Hausdorff lifting
//! compares the two distribution *sets* by the coupling minimizing the
//! worst pair. States with different labels are kept at distance 1. The
//! behavioural distance is the least fixpoint of that operator.
//!
//! The solver iterates from above over *coupling structures*: a set-coupling
//! per equal-label state pair plus one transport-plan vertex per distribution
//! pair. A fixed structure turns the operator into a max of averages, whose
//! least fixpoint is a small linear program; improvement re-pairs
//! distributions against the freshly computed Kantorovich table. When no
//! improvement exists the current metric is a fixpoint of the full operator,
//! and [`Pa::self_sustaining_pairs`] decides whether it is the least one —
//! a non-empty result is a set of pairs propping each other up, which a
//! validated decrease then deflates past the spurious fixpoint.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::approx::decrease_with;
use crate::assign::{Assignment, PosSet};
use crate::chain::{Chain, Value};
use crate::error::{Error, Result};
use crate::lp::{Cmp, Lp};
use crate::pos::Pos;
use crate::term::{check_dist, Dist};
use crate::transport::{min_cost, northwest, Plan};

#[derive(Debug, Clone)]
pub struct Pa {
    labels: BTreeMap<Pos, String>,
    succ: BTreeMap<Pos, Vec<Dist>>,
}

impl Pa {
    /// Builds an automaton from `(state, label, distributions)` triples.
    /// Rejects duplicate states, empty or duplicated distribution lists,
    /// masses not summing to one, and supports mentioning unknown states.
    pub fn new(states: impl IntoIterator<Item = (Pos, String, Vec<Dist>)>) -> Result<Pa> {
        let mut labels = BTreeMap::new();
        let mut succ = BTreeMap::new();
        for (s, label, dists) in states {
            if labels.insert(s.clone(), label).is_some() {
                return Err(Error::InvalidModel(format!("state {s} declared twice")));
            }
            if dists.is_empty() {
                return Err(Error::InvalidModel(format!("state {s} has no distribution")));
            }
            let mut seen: BTreeSet<&Dist> = BTreeSet::new();
            for dist in &dists {
                check_dist(dist)?;
                if !seen.insert(dist) {
                    return Err(Error::InvalidModel(format!(
                        "state {s} lists the same distribution twice"
                    )));
                }
            }
            succ.insert(s, dists);
        }
        if labels.is_empty() {
            return Err(Error::InvalidModel("an automaton needs at least one state".into()));
        }
        for (s, dists) in &succ {
            for dist in dists {
                for u in dist.keys() {
                    if !labels.contains_key(u) {
                        return Err(Error::InvalidModel(format!(
                            "distribution of {s} mentions unknown state {u}"
                        )));
                    }
                }
            }
        }
        Ok(Pa { labels, succ })
    }

    pub fn states(&self) -> PosSet {
        self.labels.keys().cloned().collect()
    }

    pub fn label(&self, s: &Pos) -> Option<&str> {
        self.labels.get(s).map(String::as_str)
    }

    pub fn dists(&self, s: &Pos) -> &[Dist] {
        self.succ.get(s).map(Vec::as_slice).unwrap_or(&[])
    }

    /// All ordered state pairs, the domain of every metric here.
    pub fn pair_domain(&self) -> Vec<(Pos, Pos)> {
        self.labels
            .keys()
            .flat_map(|s| self.labels.keys().map(move |t| (s.clone(), t.clone())))
            .collect()
    }

    fn same_label(&self, s: &Pos, t: &Pos) -> bool {
        self.labels[s] == self.labels[t]
    }

    fn check_metric(&self, d: &Assignment) -> Result<()> {
        if d.chain() != Chain::Unit {
            return Err(Error::ChainMismatch(
                "state metrics live on the unit interval".into(),
            ));
        }
        let expected: PosSet =
            self.pair_domain().iter().map(|(s, t)| Pos::pair(s, t)).collect();
        if d.domain_set() != expected {
            return Err(Error::DomainMismatch(
                "metric must assign a value to every ordered state pair".into(),
            ));
        }
        Ok(())
    }

    /// One application of the distance operator: 1 on label mismatch,
    /// Hausdorff-of-Kantorovich otherwise.
    pub fn metric_step(&self, d: &Assignment) -> Result<Assignment> {
        self.check_metric(d)?;
        let mut out = Vec::new();
        for (s, t) in self.pair_domain() {
            let v = if self.same_label(&s, &t) {
                let table = self.k_table(d, &s, &t)?;
                Value::unit(closed_form(&table.costs))?
            } else {
                Chain::Unit.one()
            };
            out.push((Pos::pair(&s, &t), v));
        }
        Assignment::new(Chain::Unit, out)
    }

    /// Kantorovich values and optimal plans for every distribution pair of
    /// an equal-label state pair.
    fn k_table(&self, d: &Assignment, s: &Pos, t: &Pos) -> Result<KTable> {
        let mut costs = Vec::new();
        let mut plans = Vec::new();
        for beta in self.dists(s) {
            let mut cost_row = Vec::new();
            let mut plan_row = Vec::new();
            for gamma in self.dists(t) {
                let (v, plan) = kantorovich(d, beta, gamma)?;
                cost_row.push(v.as_rational().expect("unit chain").clone());
                plan_row.push(plan);
            }
            costs.push(cost_row);
            plans.push(plan_row);
        }
        Ok(KTable { costs, plans })
    }

    /// A valid starting structure: the i-th distribution is paired with the
    /// i-th (padded with the last), all plans north-west corners.
    pub fn initial_structure(&self) -> Result<CouplingStructure> {
        let mut rho = BTreeMap::new();
        let mut plans = BTreeMap::new();
        for (s, t) in self.pair_domain() {
            if !self.same_label(&s, &t) {
                continue;
            }
            let (n, m) = (self.dists(&s).len(), self.dists(&t).len());
            let mut r = BTreeSet::new();
            for i in 0..n {
                r.insert((i, i.min(m - 1)));
            }
            for j in 0..m {
                r.insert((j.min(n - 1), j));
            }
            for &(i, j) in &r {
                let beta = &self.dists(&s)[i];
                let gamma = &self.dists(&t)[j];
                let key = (beta.clone(), gamma.clone());
                if let std::collections::btree_map::Entry::Vacant(e) = plans.entry(key) {
                    let plan = northwest(&dist_masses(beta), &dist_masses(gamma))?;
                    e.insert(plan);
                }
            }
            rho.insert((s, t), r);
        }
        Ok(CouplingStructure { rho, plans })
    }

    /// Validates a structure against this automaton: one full-marginal
    /// set-coupling per equal-label ordered pair, and a well-formed vertex
    /// plan for every referenced distribution pair.
    pub fn check_structure(&self, c: &CouplingStructure) -> Result<()> {
        let mut expected = BTreeSet::new();
        for (s, t) in self.pair_domain() {
            if self.same_label(&s, &t) {
                expected.insert((s, t));
            }
        }
        if let Some((s, t)) = c.rho.keys().find(|k| !expected.contains(*k)) {
            return Err(Error::InvalidModel(format!(
                "structure couples {s},{t}, which is not an equal-label pair"
            )));
        }
        for (s, t) in expected {
            let r = c.rho.get(&(s.clone(), t.clone())).ok_or_else(|| {
                Error::InvalidModel(format!("structure misses the pair {s},{t}"))
            })?;
            let (n, m) = (self.dists(&s).len(), self.dists(&t).len());
            let (mut left, mut right) = (vec![false; n], vec![false; m]);
            for &(i, j) in r {
                if i >= n || j >= m {
                    return Err(Error::InvalidModel(format!(
                        "coupling at {s},{t} points past the distribution lists"
                    )));
                }
                left[i] = true;
                right[j] = true;
            }
            if !left.into_iter().all(|b| b) || !right.into_iter().all(|b| b) {
                return Err(Error::InvalidModel(format!(
                    "coupling at {s},{t} must cover every distribution on both sides"
                )));
            }
            for &(i, j) in r {
                let key = (self.dists(&s)[i].clone(), self.dists(&t)[j].clone());
                if !c.plans.contains_key(&key) {
                    return Err(Error::InvalidModel(format!(
                        "no transport plan for a coupled distribution pair at {s},{t}"
                    )));
                }
            }
        }
        for ((beta, gamma), plan) in &c.plans {
            check_plan(beta, gamma, plan)?;
        }
        Ok(())
    }

    /// The least fixpoint of the operator with all choices frozen to `c`,
    /// by linear programming: minimize the total distance subject to being
    /// a pre-fixpoint.
    pub fn solve_fixed_coupling(&self, c: &CouplingStructure) -> Result<Assignment> {
        self.check_structure(c)?;
        let pairs = self.pair_domain();
        let idx: BTreeMap<Pos, usize> = pairs
            .iter()
            .enumerate()
            .map(|(i, (s, t))| (Pos::pair(s, t), i))
            .collect();
        let n = pairs.len();
        let mut lp = Lp::minimize(vec![BigRational::one(); n]);
        let zero = || vec![BigRational::zero(); n];
        for (s, t) in &pairs {
            let v = idx[&Pos::pair(s, t)];
            if !self.same_label(s, t) {
                let mut row = zero();
                row[v] = BigRational::one();
                lp.constraint(row, Cmp::Eq, BigRational::one());
                continue;
            }
            for &(i, j) in &c.rho[&(s.clone(), t.clone())] {
                let beta = &self.dists(s)[i];
                let gamma = &self.dists(t)[j];
                let plan = &c.plans[&(beta.clone(), gamma.clone())];
                let mut row = zero();
                row[v] += BigRational::one();
                for ((u, w), mass) in plan_cells(beta, gamma, plan) {
                    row[idx[&Pos::pair(&u, &w)]] -= mass;
                }
                lp.constraint(row, Cmp::Ge, BigRational::zero());
            }
            let mut cap = zero();
            cap[v] = BigRational::one();
            lp.constraint(cap, Cmp::Le, BigRational::one());
        }
        let x = lp.solve()?.x;
        let d = Assignment::new(
            Chain::Unit,
            pairs
                .iter()
                .map(|(s, t)| Ok((Pos::pair(s, t), Value::unit(x[idx[&Pos::pair(s, t)]].clone())?)))
                .collect::<Result<Vec<_>>>()?,
        )?;
        // The optimum of this program is the least fixpoint, not merely a
        // pre-fixpoint; anything else is a solver defect.
        for (s, t) in &pairs {
            let have = d.try_get(&Pos::pair(s, t))?.as_rational().expect("unit chain").clone();
            let want = if self.same_label(s, t) {
                c.rho[&(s.clone(), t.clone())]
                    .iter()
                    .map(|&(i, j)| {
                        let beta = &self.dists(s)[i];
                        let gamma = &self.dists(t)[j];
                        plan_value(beta, gamma, &c.plans[&(beta.clone(), gamma.clone())], &d)
                    })
                    .max()
                    .expect("couplings are non-empty")
            } else {
                BigRational::one()
            };
            if have != want {
                return Err(Error::Soundness("inner solver returned a non-fixpoint".into()));
            }
        }
        Ok(d)
    }

    /// One improvement sweep at `d` (the fixpoint of the current structure):
    /// every equal-label pair whose Hausdorff-of-Kantorovich value at `d`
    /// beats its current value is re-paired greedily against the Kantorovich
    /// table; pairs whose value is unchanged keep their coupling and plans,
    /// so a returned structure equal to `c` certifies `d` is a fixpoint of
    /// the full operator.
    pub fn improve_coupling(
        &self,
        c: &CouplingStructure,
        d: &Assignment,
    ) -> Result<CouplingStructure> {
        self.check_structure(c)?;
        self.check_metric(d)?;
        let mut rho = BTreeMap::new();
        let mut kept_refs: Vec<(Dist, Dist)> = Vec::new();
        let mut fresh: BTreeMap<(Dist, Dist), Plan> = BTreeMap::new();
        for ((s, t), r) in &c.rho {
            let table = self.k_table(d, s, t)?;
            let best = closed_form(&table.costs);
            let current = r
                .iter()
                .map(|&(i, j)| {
                    let beta = &self.dists(s)[i];
                    let gamma = &self.dists(t)[j];
                    plan_value(beta, gamma, &c.plans[&(beta.clone(), gamma.clone())], d)
                })
                .max()
                .expect("couplings are non-empty");
            if best == current {
                for &(i, j) in r {
                    kept_refs.push((self.dists(s)[i].clone(), self.dists(t)[j].clone()));
                }
                rho.insert((s.clone(), t.clone()), r.clone());
            } else {
                let r2 = greedy_pairing(&table.costs);
                for &(i, j) in &r2 {
                    fresh.insert(
                        (self.dists(s)[i].clone(), self.dists(t)[j].clone()),
                        table.plans[i][j].clone(),
                    );
                }
                rho.insert((s.clone(), t.clone()), r2);
            }
        }
        let mut plans = fresh;
        for key in kept_refs {
            plans.entry(key.clone()).or_insert_with(|| c.plans[&key].clone());
        }
        Ok(CouplingStructure { rho, plans })
    }

    /// The structure that is pointwise optimal at `d`: greedy re-pairing
    /// against the Kantorovich table at every equal-label pair.
    pub fn best_response_structure(&self, d: &Assignment) -> Result<CouplingStructure> {
        self.check_metric(d)?;
        let mut rho = BTreeMap::new();
        let mut plans = BTreeMap::new();
        for (s, t) in self.pair_domain() {
            if !self.same_label(&s, &t) {
                continue;
            }
            let table = self.k_table(d, &s, &t)?;
            let r = greedy_pairing(&table.costs);
            for &(i, j) in &r {
                plans.insert(
                    (self.dists(&s)[i].clone(), self.dists(&t)[j].clone()),
                    table.plans[i][j].clone(),
                );
            }
            rho.insert((s, t), r);
        }
        Ok(CouplingStructure { rho, plans })
    }

    /// For a fixpoint `d` of the distance operator, the largest set of
    /// pairs sustaining each other's value: each surviving pair must cover
    /// both distribution sets with partners that are strictly cheaper or
    /// tie with an optimal plan supported inside the set. Empty iff `d` is
    /// the least fixpoint.
    pub fn self_sustaining_pairs(&self, d: &Assignment) -> Result<PosSet> {
        let image = self.metric_step(d)?;
        if image != *d {
            return Err(Error::NotFixpoint(
                "self-sustaining pairs are only defined at a fixpoint".into(),
            ));
        }
        // Kantorovich tables and optimal-plan supports, fixed for the whole
        // descent; only the tie case re-solves transports, restricted by a
        // penalty on cells outside the candidate set.
        let mut tables: BTreeMap<(Pos, Pos), KTable> = BTreeMap::new();
        for (s, t) in self.pair_domain() {
            if self.same_label(&s, &t) && !d.try_get(&Pos::pair(&s, &t))?.is_zero() {
                tables.insert((s.clone(), t.clone()), self.k_table(d, &s, &t)?);
            }
        }
        let mut ys = d.support();
        loop {
            let mut next = PosSet::new();
            for ((s, t), table) in &tables {
                let pos = Pos::pair(s, t);
                if ys.contains(&pos) && self.pair_survives(d, s, t, table, &ys)? {
                    next.insert(pos);
                }
            }
            if next == ys {
                return Ok(ys);
            }
            ys = next;
        }
    }

    /// Both distribution sets of `(s,t)` are covered by allowed partners:
    /// strictly cheaper than the pair's value, or tying it with some
    /// optimal plan supported inside `ys`.
    fn pair_survives(
        &self,
        d: &Assignment,
        s: &Pos,
        t: &Pos,
        table: &KTable,
        ys: &PosSet,
    ) -> Result<bool> {
        let value = d.try_get(&Pos::pair(s, t))?.as_rational().expect("unit chain").clone();
        let (n, m) = (self.dists(s).len(), self.dists(t).len());
        let mut allowed = Vec::with_capacity(n);
        for (i, cost_row) in table.costs.iter().enumerate() {
            let mut row = Vec::with_capacity(m);
            for (j, k) in cost_row.iter().enumerate() {
                row.push(if *k < value {
                    true
                } else if *k == value {
                    let beta = &self.dists(s)[i];
                    let gamma = &self.dists(t)[j];
                    let support = plan_cells(beta, gamma, &table.plans[i][j])
                        .map(|((u, w), _)| Pos::pair(&u, &w))
                        .collect::<PosSet>();
                    support.is_subset(ys) || optimal_plan_within(d, beta, gamma, k, ys)?
                } else {
                    false
                });
            }
            allowed.push(row);
        }
        let rows_covered = allowed.iter().all(|row| row.iter().any(|&b| b));
        let cols_covered = (0..m).all(|j| allowed.iter().any(|row| row[j]));
        Ok(rows_covered && cols_covered)
    }

    /// Strategy iteration from above over coupling structures, starting at
    /// the index-matched structure.
    pub fn solve_above(&self) -> Result<PaResult> {
        self.solve_above_from(self.initial_structure()?)
    }

    /// Strategy iteration from above starting at `c0`: solve the frozen
    /// structure, improve while improvement exists, and at fixpoints of the
    /// full operator either finish (no self-sustaining pairs) or deflate
    /// them with a validated decrease and rebuild the structure there.
    pub fn solve_above_from(&self, c0: CouplingStructure) -> Result<PaResult> {
        const VISIT_CAP: usize = 10_000;
        self.check_structure(&c0)?;
        // Drop plans no coupling references, so structure equality after an
        // improvement sweep means "nothing changed" rather than "no stray
        // entries were garbage-collected".
        let mut c = self.canonical(c0);
        let mut visits = 0usize;
        let mut skips = 0usize;
        loop {
            let d = self.solve_fixed_coupling(&c)?;
            visits += 1;
            if visits > VISIT_CAP {
                return Err(Error::Soundness(
                    "coupling iteration exceeded the visit cap without converging".into(),
                ));
            }
            let improved = self.improve_coupling(&c, &d)?;
            if improved != c {
                c = improved;
                continue;
            }
            let cycle = self.self_sustaining_pairs(&d)?;
            if cycle.is_empty() {
                return Ok(PaResult { mu: d, structure: c, visits, skips });
            }
            let (decreased, _) = decrease_with(|x| self.metric_step(x), &d, &cycle, &[])?;
            skips += 1;
            c = self.best_response_structure(&decreased)?;
        }
    }
}

impl Pa {
    /// The same structure with its plan map restricted to referenced pairs.
    fn canonical(&self, c: CouplingStructure) -> CouplingStructure {
        let mut referenced = BTreeSet::new();
        for ((s, t), r) in &c.rho {
            for &(i, j) in r {
                referenced.insert((self.dists(s)[i].clone(), self.dists(t)[j].clone()));
            }
        }
        CouplingStructure {
            rho: c.rho,
            plans: c.plans.into_iter().filter(|(k, _)| referenced.contains(k)).collect(),
        }
    }
}

/// Per-pair Kantorovich data at a fixed metric: exact values and one
/// optimal vertex plan each.
struct KTable {
    costs: Vec<Vec<BigRational>>,
    plans: Vec<Vec<Plan>>,
}

/// Result of the iteration: the behavioural distance, the final structure,
/// and how many structures were visited / spurious fixpoints skipped.
#[derive(Debug)]
pub struct PaResult {
    pub mu: Assignment,
    pub structure: CouplingStructure,
    pub visits: usize,
    pub skips: usize,
}

/// A strategy for the distance operator: one set-coupling (index pairs into
/// the two distribution lists) per equal-label ordered state pair, and one
/// transport-plan vertex per coupled distribution pair. The plan map is
/// keyed by the distributions themselves, so a pair occurring under several
/// state pairs shares its plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingStructure {
    rho: BTreeMap<(Pos, Pos), BTreeSet<(usize, usize)>>,
    plans: BTreeMap<(Dist, Dist), Plan>,
}

impl CouplingStructure {
    pub fn new(
        rho: impl IntoIterator<Item = ((Pos, Pos), BTreeSet<(usize, usize)>)>,
        plans: impl IntoIterator<Item = ((Dist, Dist), Plan)>,
    ) -> CouplingStructure {
        CouplingStructure {
            rho: rho.into_iter().collect(),
            plans: plans.into_iter().collect(),
        }
    }

    pub fn coupling(&self, s: &Pos, t: &Pos) -> Option<&BTreeSet<(usize, usize)>> {
        self.rho.get(&(s.clone(), t.clone()))
    }

    pub fn plan(&self, beta: &Dist, gamma: &Dist) -> Option<&Plan> {
        self.plans.get(&(beta.clone(), gamma.clone()))
    }
}

/// The Kantorovich lifting of `d` to two distributions: the cheapest
/// transport cost between them when moving a unit from `u` to `w` costs
/// `d(u,w)`, together with an optimal vertex plan (rows and columns in
/// support order of the two distributions).
pub fn kantorovich(d: &Assignment, beta: &Dist, gamma: &Dist) -> Result<(Value, Plan)> {
    let cost: Vec<Vec<BigRational>> = beta
        .keys()
        .map(|u| {
            gamma
                .keys()
                .map(|w| {
                    Ok(d.try_get(&Pos::pair(u, w))?
                        .as_rational()
                        .ok_or_else(|| {
                            Error::ChainMismatch("transport costs live on the unit interval".into())
                        })?
                        .clone())
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let (value, plan) = min_cost(&dist_masses(beta), &dist_masses(gamma), &cost)?;
    Ok((Value::unit(value)?, plan))
}

/// The Hausdorff lifting over set-couplings, by its closed form: the worse
/// of the two directed best-partner maxima. `kvals` must hold a value for
/// every pair of `xs` × `ys`.
pub fn hausdorff(kvals: &BTreeMap<(Dist, Dist), Value>, xs: &[Dist], ys: &[Dist]) -> Result<Value> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::InvalidModel("hausdorff needs non-empty distribution sets".into()));
    }
    let k = |x: &Dist, y: &Dist| -> Result<Value> {
        kvals
            .get(&(x.clone(), y.clone()))
            .cloned()
            .ok_or_else(|| Error::InvalidModel("hausdorff is missing a pair value".into()))
    };
    let mut overall: Option<Value> = None;
    for x in xs {
        let mut best: Option<Value> = None;
        for y in ys {
            let v = k(x, y)?;
            best = Some(best.map_or(v.clone(), |b| b.meet(&v)));
        }
        let row = best.expect("ys non-empty");
        overall = Some(overall.map_or(row.clone(), |o| o.join(&row)));
    }
    for y in ys {
        let mut best: Option<Value> = None;
        for x in xs {
            let v = k(x, y)?;
            best = Some(best.map_or(v.clone(), |b| b.meet(&v)));
        }
        let col = best.expect("xs non-empty");
        overall = Some(overall.map_or(col.clone(), |o| o.join(&col)));
    }
    Ok(overall.expect("xs non-empty"))
}

/// All minimal set-couplings between index sets `{0..n}` and `{0..m}`:
/// relations with full marginals from which no pair can be dropped. Meant
/// for enumeration oracles on small sets; errors when the grid exceeds 12
/// cells.
pub fn minimal_couplings(n: usize, m: usize) -> Result<Vec<BTreeSet<(usize, usize)>>> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidModel("couplings need non-empty sides".into()));
    }
    if n * m > 12 {
        return Err(Error::InvalidModel("coupling enumeration is limited to 12 cells".into()));
    }
    let cells: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
    let full = |r: &BTreeSet<(usize, usize)>| -> bool {
        (0..n).all(|i| r.iter().any(|&(a, _)| a == i))
            && (0..m).all(|j| r.iter().any(|&(_, b)| b == j))
    };
    let mut out = Vec::new();
    for mask in 1u32..(1 << cells.len()) {
        let r: BTreeSet<(usize, usize)> = cells
            .iter()
            .enumerate()
            .filter(|(b, _)| mask & (1 << b) != 0)
            .map(|(_, &c)| c)
            .collect();
        if !full(&r) {
            continue;
        }
        let minimal = r.iter().all(|cell| {
            let mut smaller = r.clone();
            smaller.remove(cell);
            !full(&smaller)
        });
        if minimal {
            out.push(r);
        }
    }
    out.sort();
    Ok(out)
}

/// Greedy minimal coupling realizing the closed-form Hausdorff value: each
/// row index paired with its first-cheapest column and vice versa.
fn greedy_pairing(costs: &[Vec<BigRational>]) -> BTreeSet<(usize, usize)> {
    let m = costs[0].len();
    let mut r = BTreeSet::new();
    for (i, row) in costs.iter().enumerate() {
        let j = (0..m).min_by_key(|&j| row[j].clone()).expect("m >= 1");
        r.insert((i, j));
    }
    for j in 0..m {
        let i = costs
            .iter()
            .enumerate()
            .min_by_key(|(_, row)| row[j].clone())
            .map(|(i, _)| i)
            .expect("n >= 1");
        r.insert((i, j));
    }
    r
}

/// The closed-form Hausdorff value of a cost table.
fn closed_form(costs: &[Vec<BigRational>]) -> BigRational {
    let (n, m) = (costs.len(), costs[0].len());
    let rows = (0..n)
        .map(|i| (0..m).map(|j| costs[i][j].clone()).min().expect("m >= 1"))
        .max()
        .expect("n >= 1");
    let cols = (0..m)
        .map(|j| (0..n).map(|i| costs[i][j].clone()).min().expect("n >= 1"))
        .max()
        .expect("m >= 1");
    rows.max(cols)
}

fn dist_masses(d: &Dist) -> Vec<BigRational> {
    d.values().cloned().collect()
}

/// Non-zero plan cells as `((source state, target state), mass)`.
fn plan_cells<'a>(
    beta: &'a Dist,
    gamma: &'a Dist,
    plan: &'a Plan,
) -> impl Iterator<Item = ((Pos, Pos), BigRational)> + 'a {
    beta.keys().enumerate().flat_map(move |(i, u)| {
        gamma.keys().enumerate().filter_map(move |(j, w)| {
            let mass = plan[i][j].clone();
            (!mass.is_zero()).then(|| ((u.clone(), w.clone()), mass))
        })
    })
}

/// `Σ plan(u,w) · d(u,w)`.
fn plan_value(beta: &Dist, gamma: &Dist, plan: &Plan, d: &Assignment) -> BigRational {
    plan_cells(beta, gamma, plan)
        .map(|((u, w), mass)| {
            mass * d.get(&Pos::pair(&u, &w)).and_then(Value::as_rational).expect("checked metric")
        })
        .sum()
}

/// Marginal and vertex (forest-support) checks for a stored plan.
fn check_plan(beta: &Dist, gamma: &Dist, plan: &Plan) -> Result<()> {
    let (n, m) = (beta.len(), gamma.len());
    if plan.len() != n || plan.iter().any(|row| row.len() != m) {
        return Err(Error::InvalidModel("plan shape must match the distribution supports".into()));
    }
    for row in plan {
        for mass in row {
            if *mass < BigRational::zero() {
                return Err(Error::InvalidModel("plan masses must be non-negative".into()));
            }
        }
    }
    for (i, mass) in beta.values().enumerate() {
        if plan[i].iter().sum::<BigRational>() != *mass {
            return Err(Error::InvalidModel("plan rows must sum to the source masses".into()));
        }
    }
    for (j, mass) in gamma.values().enumerate() {
        if (0..n).map(|i| plan[i][j].clone()).sum::<BigRational>() != *mass {
            return Err(Error::InvalidModel("plan columns must sum to the target masses".into()));
        }
    }
    // A vertex of the transport polytope has acyclic (forest) support in
    // the bipartite graph of sources and targets; union-find over the
    // non-zero cells detects any cycle.
    let mut parent: Vec<usize> = (0..n + m).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    for (i, row) in plan.iter().enumerate() {
        for (j, mass) in row.iter().enumerate() {
            if !mass.is_zero() {
                let (a, b) = (find(&mut parent, i), find(&mut parent, n + j));
                if a == b {
                    return Err(Error::InvalidModel(
                        "plan support contains a cycle, so it is not a vertex".into(),
                    ));
                }
                parent[a] = b;
            }
        }
    }
    Ok(())
}

/// Whether some optimal transport plan between `beta` and `gamma` (cost
/// `k`) puts mass only on pairs inside `ys`: solved by penalizing outside
/// cells beyond any honest cost and comparing the optimum.
fn optimal_plan_within(
    d: &Assignment,
    beta: &Dist,
    gamma: &Dist,
    k: &BigRational,
    ys: &PosSet,
) -> Result<bool> {
    let penalty = BigRational::from_integer(2.into());
    let cost: Vec<Vec<BigRational>> = beta
        .keys()
        .map(|u| {
            gamma
                .keys()
                .map(|w| {
                    let base = d
                        .get(&Pos::pair(u, w))
                        .and_then(Value::as_rational)
                        .expect("checked metric")
                        .clone();
                    if ys.contains(&Pos::pair(u, w)) {
                        base
                    } else {
                        base + penalty.clone()
                    }
                })
                .collect()
        })
        .collect();
    let (value, _) = min_cost(&dist_masses(beta), &dist_masses(gamma), &cost)?;
    Ok(value == *k)
}
