//! Exhaustive depth-first search over precedence-feasible permutations,
//! cutting prefixes that already cost as much as the best complete order.

use super::{OrderingProblem, OrderingSolution, SolverKind};
use crate::error::{Error, Result};
use crate::par::{self, Parallelism};

/// Largest task count the exact solver accepts by default.
pub const DEFAULT_EXACT_CAP: usize = 11;

struct Search<'a> {
    problem: &'a OrderingProblem,
    order: Vec<usize>,
    used: Vec<bool>,
    best: Option<(f64, Vec<usize>)>,
}

impl Search<'_> {
    fn placeable(&self, t: usize) -> bool {
        !self.used[t] && self.problem.predecessors(t).iter().all(|&p| self.used[p])
    }

    fn place(&mut self, t: usize) {
        self.used[t] = true;
        self.order.push(t);
    }

    fn unplace(&mut self) {
        let t = self.order.pop().expect("nonempty prefix");
        self.used[t] = false;
    }

    /// Visits completions of the current prefix in lexicographic order. Only
    /// a strictly better fitness replaces the incumbent, so among ties the
    /// lexicographically smallest order wins.
    fn descend(&mut self, cost: f64) {
        // costs are nonnegative, so a prefix at or above the incumbent
        // cannot complete to a strictly better order
        if self.best.as_ref().is_some_and(|(b, _)| cost >= *b) {
            return;
        }
        let n = self.problem.n();
        let last = *self.order.last().expect("prefix holds the first task");
        if self.order.len() == n {
            let total = match self.problem.objective() {
                super::Objective::ClosedTour => cost + self.problem.edge(last, self.order[0]),
                super::Objective::OpenPath => cost,
            };
            if self.best.as_ref().is_none_or(|(b, _)| total < *b) {
                self.best = Some((total, self.order.clone()));
            }
            return;
        }
        for t in 0..n {
            if self.placeable(t) {
                let step = cost + self.problem.edge(last, t);
                self.place(t);
                self.descend(step);
                self.unplace();
            }
        }
    }
}

/// Minimum-fitness feasible order by enumeration; subtrees rooted at each
/// possible first task are searched independently.
pub fn solve_exact(
    problem: &OrderingProblem,
    cap: usize,
    par: Parallelism,
) -> Result<OrderingSolution> {
    let n = problem.n();
    if n > cap {
        return Err(Error::Capacity(format!(
            "exact solver is limited to {cap} tasks, problem has {n}"
        )));
    }
    if n == 0 {
        return Ok(OrderingSolution {
            order: Vec::new(),
            fitness: 0.0,
            solver: SolverKind::Exact,
            generations: 0,
            seed: None,
        });
    }
    let subtrees = par::map_range(n, par, |first| {
        let mut s = Search {
            problem,
            order: Vec::with_capacity(n),
            used: vec![false; n],
            best: None,
        };
        if !s.placeable(first) {
            return None;
        }
        s.place(first);
        s.descend(0.0);
        s.best
    });
    let mut best: Option<(f64, Vec<usize>)> = None;
    for (fit, order) in subtrees.into_iter().flatten() {
        if best.as_ref().is_none_or(|(b, _)| fit < *b) {
            best = Some((fit, order));
        }
    }
    let (fitness, order) = best.ok_or_else(|| {
        Error::invalid(
            "ordering problem",
            "no feasible order exists although precedence is acyclic",
        )
    })?;
    Ok(OrderingSolution {
        order,
        fitness,
        solver: SolverKind::Exact,
        generations: 0,
        seed: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costmodel::{CostMatrix, CostUnit};
    use crate::ordering::{fitness, Objective};

    #[test]
    fn single_task_has_zero_fitness() {
        let p = OrderingProblem::unconstrained(
            CostMatrix::new(vec![vec![0.0]], CostUnit::Time).unwrap(),
            Objective::ClosedTour,
        );
        let s = solve_exact(&p, DEFAULT_EXACT_CAP, Parallelism::Sequential).unwrap();
        assert_eq!((s.order, s.fitness), (vec![0], 0.0));
    }

    #[test]
    fn ties_break_lexicographically() {
        let p = OrderingProblem::unconstrained(
            CostMatrix::new(vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]], CostUnit::Time)
                .unwrap(),
            Objective::OpenPath,
        );
        let s = solve_exact(&p, 5, Parallelism::Parallel).unwrap();
        assert_eq!(s.order, vec![0, 1, 2]);
        assert_eq!(s.fitness, 2.0);
    }

    #[test]
    fn forced_order_under_chain_precedence() {
        let n = 5;
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 + (i * 7 + j * 3) as f64 % 5.0 }).collect())
            .collect();
        let p = OrderingProblem::new(
            CostMatrix::new(rows, CostUnit::Time).unwrap(),
            vec![(3, 1), (1, 4), (4, 0), (0, 2)],
            vec![],
            Objective::OpenPath,
        )
        .unwrap();
        let s = solve_exact(&p, 11, Parallelism::Parallel).unwrap();
        assert_eq!(s.order, vec![3, 1, 4, 0, 2]);
        assert_eq!(s.fitness, fitness(&p, &s.order).unwrap());
    }

    #[test]
    fn cap_is_enforced() {
        let p = OrderingProblem::unconstrained(
            CostMatrix::new(vec![vec![0.0; 4]; 4], CostUnit::Time).unwrap(),
            Objective::OpenPath,
        );
        assert!(matches!(solve_exact(&p, 3, Parallelism::Sequential), Err(Error::Capacity(_))));
    }
}
