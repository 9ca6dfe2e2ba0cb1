//! Reduction from the Hamiltonian cycle problem to task ordering.
//!
//! Edges of an undirected graph become free switches and non-edges cost one,
//! so the graph has a Hamiltonian cycle exactly when the best closed tour
//! costs zero.

use serde::{Deserialize, Serialize};

use super::{Objective, OrderingProblem};
use crate::costmodel::{CostMatrix, CostUnit};
use crate::error::{Error, Result};

/// Undirected simple graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimpleGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl SimpleGraph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        for &(a, b) in &edges {
            if a >= n || b >= n {
                return Err(Error::invalid(
                    "graph",
                    format!("edge ({a}, {b}) names a vertex outside 0..{n}"),
                ));
            }
            if a == b {
                return Err(Error::invalid("graph", format!("self-loop at vertex {a}")));
            }
        }
        Ok(SimpleGraph { n, edges })
    }

    /// Cycle `0 - 1 - ... - (n-1) - 0`.
    pub fn cycle(n: usize) -> Self {
        SimpleGraph {
            n,
            edges: (0..n).map(|i| (i, (i + 1) % n)).collect(),
        }
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges
            .iter()
            .any(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a))
    }
}

/// Closed-tour ordering problem whose optimum is zero exactly when `graph`
/// is Hamiltonian. Needs at least three vertices.
pub fn hamiltonian_reduction(graph: &SimpleGraph) -> Result<OrderingProblem> {
    let graph = SimpleGraph::new(graph.n, graph.edges.clone())?;
    let n = graph.n;
    if n < 3 {
        return Err(Error::invalid(
            "graph",
            format!("a Hamiltonian cycle needs at least 3 vertices, got {n}"),
        ));
    }
    let mut rows = vec![vec![1.0; n]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(a, b) in &graph.edges {
        rows[a][b] = 0.0;
        rows[b][a] = 0.0;
    }
    Ok(OrderingProblem::unconstrained(
        CostMatrix::new(rows, CostUnit::Time)?,
        Objective::ClosedTour,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ordering::solve_exact;
    use crate::par::Parallelism;

    #[test]
    fn cycle_graph_has_a_free_tour() {
        let p = hamiltonian_reduction(&SimpleGraph::cycle(5)).unwrap();
        let s = solve_exact(&p, 11, Parallelism::Sequential).unwrap();
        assert_eq!(s.fitness, 0.0);
    }

    #[test]
    fn star_graph_has_no_free_tour() {
        let star = SimpleGraph::new(5, (1..5).map(|i| (0, i)).collect()).unwrap();
        let p = hamiltonian_reduction(&star).unwrap();
        let s = solve_exact(&p, 11, Parallelism::Sequential).unwrap();
        assert!(s.fitness > 0.0);
    }

    #[test]
    fn rejects_bad_graphs() {
        assert!(SimpleGraph::new(3, vec![(0, 3)]).is_err());
        assert!(SimpleGraph::new(3, vec![(1, 1)]).is_err());
        assert!(hamiltonian_reduction(&SimpleGraph::cycle(2)).is_err());
    }
}
