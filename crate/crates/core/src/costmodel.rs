//! Task-switching costs derived from a task graph.
//!
//! Blocks on a shared prefix stay resident and their intermediate outputs are
//! cached, so switching from task `i` to task `j` only pays for loading and
//! executing the blocks of `j` below the point where the two paths diverge.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ordering::Conditional;
use crate::taskgraph::{Architecture, TaskGraph};

/// What the cost entries measure. The arithmetic does not depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostUnit {
    #[default]
    Time,
    Energy,
}

/// `n x n` switching costs with a zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    n: usize,
    unit: CostUnit,
    rows: Vec<Vec<f64>>,
}

impl CostMatrix {
    /// Checks squareness, a zero diagonal and nonnegative finite entries.
    pub fn new(rows: Vec<Vec<f64>>, unit: CostUnit) -> Result<Self> {
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Shape(format!(
                    "cost matrix row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (j, &c) in row.iter().enumerate() {
                if !c.is_finite() || c < 0.0 {
                    return Err(Error::invalid(
                        "cost matrix",
                        format!("entry ({i}, {j}) = {c} is not a nonnegative finite cost"),
                    ));
                }
            }
            if row[i] != 0.0 {
                return Err(Error::invalid(
                    "cost matrix",
                    format!("diagonal entry ({i}, {i}) must be 0"),
                ));
            }
        }
        Ok(CostMatrix { n, unit, rows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn unit(&self) -> CostUnit {
        self.unit
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.rows[i][j] == self.rows[j][i]))
    }

    /// Every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(|c| c * factor).collect())
            .collect();
        CostMatrix::new(rows, self.unit)
    }
}

/// Cost of running `j` right after `i`: load and execute every block of
/// `j`'s path below the shared prefix. Zero when `i == j`.
pub fn switching_cost(graph: &TaskGraph, arch: &Architecture, i: usize, j: usize) -> f64 {
    if i == j {
        return 0.0;
    }
    let shared = graph.shared_levels(i, j);
    // segments 0..=shared are common (trunk plus `shared` grouped segments)
    ((shared + 1)..=(graph.num_branch_points() + 1))
        .map(|s| arch.segment(s).run_cost())
        .sum()
}

/// All pairwise switching costs. Each unordered pair is computed once and
/// mirrored.
pub fn cost_matrix(graph: &TaskGraph, arch: &Architecture, unit: CostUnit) -> Result<CostMatrix> {
    arch.check_graph(graph)?;
    let n = graph.n();
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let c = switching_cost(graph, arch, i, j);
            rows[i][j] = c;
            rows[j][i] = c;
        }
    }
    CostMatrix::new(rows, unit)
}

/// Full cost of executing all tasks in `order`: the first task's whole path
/// plus each switch, weighted by its conditional probability when one is
/// given for that directed pair.
pub fn total_execution_cost(
    graph: &TaskGraph,
    arch: &Architecture,
    order: &[usize],
    conditionals: &[Conditional],
) -> Result<f64> {
    arch.check_graph(graph)?;
    crate::ordering::check_permutation(order, graph.n())?;
    let prob = |a: usize, b: usize| {
        conditionals
            .iter()
            .find(|c| c.from == a && c.to == b)
            .map_or(1.0, |c| c.probability)
    };
    let switches: f64 = order
        .windows(2)
        .map(|w| prob(w[0], w[1]) * switching_cost(graph, arch, w[0], w[1]))
        .sum();
    Ok(arch.path_cost() + switches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taskgraph::{BlockCostProfile, BranchPointConfig};

    fn arch(d: usize) -> Architecture {
        let layers = d + 2;
        Architecture::new(
            BranchPointConfig::new(layers, (1..=d).collect()).unwrap(),
            BlockCostProfile::uniform(layers, 1.0, 1.0, 4),
        )
        .unwrap()
    }

    #[test]
    fn same_groups_everywhere_costs_only_the_head() {
        let a = arch(3);
        let g = TaskGraph::fully_shared(4, 3);
        assert_eq!(switching_cost(&g, &a, 0, 3), a.head().run_cost());
        let m = cost_matrix(&g, &a, CostUnit::Time).unwrap();
        let off: Vec<f64> = (0..4)
            .flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m.get(i, j))
            .collect();
        assert!(off.iter().all(|&c| c == off[0]));
    }

    #[test]
    fn diverging_at_the_trunk_costs_path_minus_trunk() {
        let a = arch(2);
        let g = TaskGraph::all_singletons(3, 2);
        let expected = a.path_cost() - a.trunk().run_cost();
        let m = cost_matrix(&g, &a, CostUnit::Energy).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(m.get(i, j), expected);
                }
            }
        }
        assert_eq!(m.unit(), CostUnit::Energy);
    }

    #[test]
    fn single_task_total_is_its_path() {
        let a = arch(1);
        let g = TaskGraph::fully_shared(1, 1);
        assert_eq!(total_execution_cost(&g, &a, &[0], &[]).unwrap(), a.path_cost());
    }

    #[test]
    fn zero_probabilities_leave_only_the_first_path() {
        let a = arch(2);
        let g = TaskGraph::all_singletons(3, 2);
        let cond = vec![
            Conditional::new(0, 1, 0.0),
            Conditional::new(1, 2, 0.0),
        ];
        assert_eq!(total_execution_cost(&g, &a, &[0, 1, 2], &cond).unwrap(), a.path_cost());
        assert!(total_execution_cost(&g, &a, &[0, 1], &cond).is_err());
    }

    #[test]
    fn matrix_validation() {
        assert!(CostMatrix::new(vec![vec![0.0, 1.0], vec![1.0]], CostUnit::Time).is_err());
        assert!(CostMatrix::new(vec![vec![1.0]], CostUnit::Time).is_err());
        assert!(CostMatrix::new(vec![vec![0.0, -1.0], vec![1.0, 0.0]], CostUnit::Time).is_err());
        let m = CostMatrix::new(vec![vec![0.0, 2.0], vec![3.0, 0.0]], CostUnit::Time).unwrap();
        assert!(!m.is_symmetric());
        assert_eq!(m.scaled(2.0).unwrap().get(1, 0), 6.0);
    }
}
