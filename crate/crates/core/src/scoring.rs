//! Scores candidate task graphs by variety, model size and execution cost.
//!
//! The execution cost of a graph is the cost of running every task once in
//! the cheapest feasible order on that graph: the first task's full path plus
//! the optimal open-path sum of switching costs.

use serde::{Deserialize, Serialize};

use crate::affinity::AffinityTensor;
use crate::costmodel::{cost_matrix, CostUnit};
use crate::error::{Error, Result};
use crate::ordering::{
    solve_exact, solve_ga, Conditional, GaParams, Objective, OrderingProblem, OrderingSolution,
    SolverKind, DEFAULT_EXACT_CAP,
};
use crate::par::{self, Parallelism};
use crate::taskgraph::{model_size, variety_score, Architecture, TaskGraph};

/// Which ordering solver to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    /// Exact up to the cap, genetic above it.
    #[default]
    Auto,
    Exact,
    Ga,
}

/// Precedence and conditional constraints on task order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Constraints {
    #[serde(default)]
    pub precedence: Vec<(usize, usize)>,
    #[serde(default)]
    pub conditional: Vec<Conditional>,
}

impl Constraints {
    /// Copy whose precedence list also holds every conditional pair, so the
    /// pairs are reported once rather than for every problem built from it.
    pub fn with_conditional_precedence(&self) -> Constraints {
        let mut out = self.clone();
        for c in &self.conditional {
            if !out.precedence.contains(&(c.from, c.to)) {
                log::warn!(
                    "conditional ({}, {}) is not a listed precedence; treating it as one",
                    c.from,
                    c.to
                );
                out.precedence.push((c.from, c.to));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub choice: SolverChoice,
    pub exact_cap: usize,
    pub ga: GaParams,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            choice: SolverChoice::Auto,
            exact_cap: DEFAULT_EXACT_CAP,
            ga: GaParams::default(),
        }
    }
}

impl SolverConfig {
    /// Solves `problem` with the configured solver. Problems with fewer than
    /// two tasks always go to the exact solver.
    pub fn solve(&self, problem: &OrderingProblem, par: Parallelism) -> Result<OrderingSolution> {
        let n = problem.n();
        let use_ga = n >= 2
            && match self.choice {
                SolverChoice::Auto => n > self.exact_cap,
                SolverChoice::Exact => false,
                SolverChoice::Ga => true,
            };
        if use_ga {
            if self.choice == SolverChoice::Auto {
                log::info!(
                    "{n} tasks exceed the exact cap of {}; running the genetic solver with seed {}",
                    self.exact_cap,
                    self.ga.rng_seed
                );
            }
            solve_ga(problem, &self.ga, par)
        } else {
            solve_exact(problem, self.exact_cap, par)
        }
    }
}

/// One scored task graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphScore {
    pub graph: TaskGraph,
    pub variety: f64,
    pub model_size: u64,
    pub exec_cost: f64,
    /// The order behind `exec_cost`.
    pub order: Vec<usize>,
    pub solver: SolverKind,
}

/// Scores one graph. Ordering uses the open-path objective.
pub fn score_graph(
    graph: &TaskGraph,
    arch: &Architecture,
    affinity: &AffinityTensor,
    constraints: &Constraints,
    solver: &SolverConfig,
    par: Parallelism,
) -> Result<GraphScore> {
    if affinity.num_branch_points() != graph.num_branch_points() {
        return Err(Error::Shape(format!(
            "affinity has {} branch points, graph has {}",
            affinity.num_branch_points(),
            graph.num_branch_points()
        )));
    }
    let variety = variety_score(graph, affinity)?;
    let size = model_size(graph, arch)?;
    let problem = OrderingProblem::new(
        cost_matrix(graph, arch, CostUnit::Time)?,
        constraints.precedence.clone(),
        constraints.conditional.clone(),
        Objective::OpenPath,
    )?;
    let solution = solver.solve(&problem, par)?;
    Ok(GraphScore {
        graph: graph.clone(),
        variety,
        model_size: size,
        exec_cost: arch.path_cost() + solution.fitness,
        order: solution.order,
        solver: solution.solver,
    })
}

/// Scores every graph, in input order. With parallelism the graphs are
/// spread over threads and each ordering solve runs sequentially.
pub fn score_graphs(
    graphs: &[TaskGraph],
    arch: &Architecture,
    affinity: &AffinityTensor,
    constraints: &Constraints,
    solver: &SolverConfig,
    par: Parallelism,
) -> Result<Vec<GraphScore>> {
    let constraints = constraints.with_conditional_precedence();
    par::map(graphs, par, |g| {
        score_graph(g, arch, affinity, &constraints, solver, Parallelism::Sequential)
    })
    .into_iter()
    .collect()
}
