//! Optimal task execution order under precedence and conditional constraints.
//!
//! An order is a permutation of `0..n`. Its fitness is the summed switching
//! cost along the order (lower is better), optionally closed back to the
//! first task. A conditional constraint `(i, j, p)` says `j` only runs with
//! probability `p` after `i`; it scales the `i -> j` switch by `p` and, like
//! any precedence, requires `i` before `j`.

mod exact;
mod ga;
mod reduction;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::costmodel::CostMatrix;
use crate::error::{Error, Result};

pub use exact::{solve_exact, DEFAULT_EXACT_CAP};
pub use ga::{evaluate_population, solve_ga, GaParams, InvalidPolicy};
pub use reduction::{hamiltonian_reduction, SimpleGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Sum of consecutive switches only.
    #[default]
    OpenPath,
    /// Also pays the switch from the last task back to the first.
    ClosedTour,
}

/// `to` runs with probability `probability` after `from` finishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conditional {
    pub from: usize,
    pub to: usize,
    pub probability: f64,
}

impl Conditional {
    pub fn new(from: usize, to: usize, probability: f64) -> Self {
        Conditional {
            from,
            to,
            probability,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Exact,
    Genetic,
}

/// A solved ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingSolution {
    pub order: Vec<usize>,
    pub fitness: f64,
    pub solver: SolverKind,
    /// Generations run by the winning GA run; zero for the exact solver.
    pub generations: usize,
    pub seed: Option<u64>,
}

/// Cost matrix plus constraints and objective.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderingProblem {
    costs: CostMatrix,
    precedence: Vec<(usize, usize)>,
    conditional: Vec<Conditional>,
    objective: Objective,
    /// Row-major `n x n` switch weights (`p` for conditional pairs, else 1).
    weights: Vec<f64>,
    /// Direct predecessors of each task.
    preds: Vec<Vec<usize>>,
}

impl OrderingProblem {
    /// Validates indices and probabilities and rejects cyclic precedence.
    /// Conditional pairs missing from `precedence` are added to it.
    pub fn new(
        costs: CostMatrix,
        precedence: Vec<(usize, usize)>,
        conditional: Vec<Conditional>,
        objective: Objective,
    ) -> Result<Self> {
        let n = costs.n();
        let mut precedence = precedence;
        for &(i, j) in &precedence {
            if i >= n || j >= n || i == j {
                return Err(Error::Constraint(format!(
                    "precedence ({i}, {j}) is not a pair of distinct tasks below {n}"
                )));
            }
        }
        let mut weights = vec![1.0; n * n];
        for c in &conditional {
            if c.from >= n || c.to >= n || c.from == c.to {
                return Err(Error::Constraint(format!(
                    "conditional ({}, {}) is not a pair of distinct tasks below {n}",
                    c.from, c.to
                )));
            }
            if !(0.0..=1.0).contains(&c.probability) {
                return Err(Error::Constraint(format!(
                    "conditional ({}, {}) has probability {} outside [0, 1]",
                    c.from, c.to, c.probability
                )));
            }
            weights[c.from * n + c.to] = c.probability;
            if !precedence.contains(&(c.from, c.to)) {
                log::warn!(
                    "conditional ({}, {}) is not a listed precedence; treating it as one",
                    c.from,
                    c.to
                );
                precedence.push((c.from, c.to));
            }
        }
        precedence.sort_unstable();
        precedence.dedup();
        let mut preds = vec![Vec::new(); n];
        for &(i, j) in &precedence {
            preds[j].push(i);
        }
        if let Some(cycle) = find_cycle(n, &precedence) {
            let names: Vec<String> = cycle.iter().map(usize::to_string).collect();
            return Err(Error::Constraint(format!(
                "precedence constraints contain a cycle: {}",
                names.join(" -> ")
            )));
        }
        Ok(OrderingProblem {
            costs,
            precedence,
            conditional,
            objective,
            weights,
            preds,
        })
    }

    /// Unconstrained problem.
    pub fn unconstrained(costs: CostMatrix, objective: Objective) -> Self {
        Self::new(costs, Vec::new(), Vec::new(), objective).expect("no constraints to violate")
    }

    pub fn n(&self) -> usize {
        self.costs.n()
    }

    pub fn costs(&self) -> &CostMatrix {
        &self.costs
    }

    pub fn precedence(&self) -> &[(usize, usize)] {
        &self.precedence
    }

    pub fn conditional(&self) -> &[Conditional] {
        &self.conditional
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn predecessors(&self, task: usize) -> &[usize] {
        &self.preds[task]
    }

    /// Weighted cost of switching `i -> j`.
    #[inline]
    pub fn edge(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n() + j] * self.costs.get(i, j)
    }

    /// Same problem with every cost multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        OrderingProblem::new(
            self.costs.scaled(factor)?,
            self.precedence.clone(),
            self.conditional.clone(),
            self.objective,
        )
    }

    /// Fitness without validity checks. `order` must be a permutation.
    pub(crate) fn fitness_unchecked(&self, order: &[usize]) -> f64 {
        let mut total = 0.0;
        for w in order.windows(2) {
            total += self.edge(w[0], w[1]);
        }
        if self.objective == Objective::ClosedTour && order.len() > 1 {
            total += self.edge(order[order.len() - 1], order[0]);
        }
        total
    }

    pub(crate) fn feasible_unchecked(&self, order: &[usize]) -> bool {
        let mut pos = vec![0usize; order.len()];
        for (p, &t) in order.iter().enumerate() {
            pos[t] = p;
        }
        self.precedence.iter().all(|&(i, j)| pos[i] < pos[j])
    }

    /// A uniformly random task among those whose predecessors are all done,
    /// repeated until every task is placed.
    pub fn random_feasible_order<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let n = self.n();
        let mut missing: Vec<usize> = self.preds.iter().map(Vec::len).collect();
        let mut succs = vec![Vec::new(); n];
        for &(i, j) in &self.precedence {
            succs[i].push(j);
        }
        let mut ready: Vec<usize> = (0..n).filter(|&t| missing[t] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while !ready.is_empty() {
            let k = rng.gen_range(0..ready.len());
            let t = ready.swap_remove(k);
            order.push(t);
            for &s in &succs[t] {
                missing[s] -= 1;
                if missing[s] == 0 {
                    ready.push(s);
                }
            }
        }
        debug_assert_eq!(order.len(), n, "precedence is acyclic");
        order
    }
}

/// Errors unless `order` is a permutation of `0..n`.
pub fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    if order.len() != n {
        return Err(Error::Constraint(format!(
            "order has {} entries, expected {n}",
            order.len()
        )));
    }
    let mut seen = vec![false; n];
    for &t in order {
        if t >= n || std::mem::replace(&mut seen[t], true) {
            return Err(Error::Constraint(format!(
                "order is not a permutation of 0..{n}"
            )));
        }
    }
    Ok(())
}

/// True iff every precedence pair `(i, j)` has `i` placed before `j`.
pub fn precedence_feasible(problem: &OrderingProblem, order: &[usize]) -> Result<bool> {
    check_permutation(order, problem.n())?;
    Ok(problem.feasible_unchecked(order))
}

/// Summed (probability-weighted) switching cost of a feasible order.
pub fn fitness(problem: &OrderingProblem, order: &[usize]) -> Result<f64> {
    if !precedence_feasible(problem, order)? {
        return Err(Error::Constraint(
            "order violates a precedence constraint".into(),
        ));
    }
    Ok(problem.fitness_unchecked(order))
}

fn find_cycle(n: usize, edges: &[(usize, usize)]) -> Option<Vec<usize>> {
    let mut succs = vec![Vec::new(); n];
    for &(i, j) in edges {
        succs[i].push(j);
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; n];
    let mut stack_path: Vec<usize> = Vec::new();
    fn dfs(
        v: usize,
        succs: &[Vec<usize>],
        state: &mut [u8],
        path: &mut Vec<usize>,
    ) -> Option<Vec<usize>> {
        state[v] = 1;
        path.push(v);
        for &w in &succs[v] {
            if state[w] == 1 {
                let start = path.iter().position(|&x| x == w).expect("on stack");
                let mut cycle = path[start..].to_vec();
                cycle.push(w);
                return Some(cycle);
            }
            if state[w] == 0 {
                if let Some(c) = dfs(w, succs, state, path) {
                    return Some(c);
                }
            }
        }
        path.pop();
        state[v] = 2;
        None
    }
    for v in 0..n {
        if state[v] == 0 {
            if let Some(c) = dfs(v, &succs, &mut state, &mut stack_path) {
                return Some(c);
            }
        }
    }
    None
}
