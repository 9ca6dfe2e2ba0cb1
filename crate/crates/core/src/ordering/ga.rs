//! Genetic algorithm over permutation-encoded task orders.
//!
//! Each generation pairs up the best `2K` individuals, crosses every pair by
//! exchanging a random-length prefix, applies one random swap mutation to
//! each child and drops children that are not valid orders. Survivors are
//! the best distinct individuals among parents and children. A run stops
//! once its best fitness has not improved for a fixed number of generations.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{OrderingProblem, OrderingSolution, SolverKind};
use crate::error::{Error, Result};
use crate::par::{self, Parallelism};

/// What crossover does with a child that repeats tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InvalidPolicy {
    /// Swap the first `k` genes verbatim and drop children that are not
    /// permutations.
    #[default]
    Discard,
    /// Keep one parent's first `k` genes and fill the rest in the other
    /// parent's order. Children are always permutations and inherit
    /// precedence feasibility from feasible parents.
    Repair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GaParams {
    pub population_size: usize,
    /// Number of parent pairs bred per generation.
    pub elite_pairs: usize,
    pub max_stagnant_generations: usize,
    pub rng_seed: u64,
    pub invalid_policy: InvalidPolicy,
    /// Fresh-population restarts after a run stagnates.
    pub max_restarts: usize,
    /// Independent runs with derived seeds; the best result is kept.
    pub runs: usize,
    /// Hard ceiling on generations per run, restarts included.
    pub max_generations: usize,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            population_size: 200,
            elite_pairs: 20,
            max_stagnant_generations: 200,
            rng_seed: 0,
            invalid_policy: InvalidPolicy::Discard,
            max_restarts: 5,
            runs: 4,
            max_generations: 200_000,
        }
    }
}

impl GaParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_policy(mut self, policy: InvalidPolicy) -> Self {
        self.invalid_policy = policy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.elite_pairs == 0 || self.population_size < 2 * self.elite_pairs {
            return Err(Error::invalid(
                "GA parameters",
                format!(
                    "need population_size >= 2 * elite_pairs >= 2, got {} and {}",
                    self.population_size, self.elite_pairs
                ),
            ));
        }
        if self.runs == 0 || self.max_stagnant_generations == 0 || self.max_generations == 0 {
            return Err(Error::invalid(
                "GA parameters",
                "runs, stagnation limit and generation ceiling must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Individual {
    order: Vec<usize>,
    fitness: f64,
}

fn by_fitness(a: &Individual, b: &Individual) -> std::cmp::Ordering {
    a.fitness
        .total_cmp(&b.fitness)
        .then_with(|| a.order.cmp(&b.order))
}

/// Fitness of each order; `None` for orders that are not valid (not a
/// permutation or infeasible).
pub fn evaluate_population(
    problem: &OrderingProblem,
    orders: &[Vec<usize>],
    par: Parallelism,
) -> Vec<Option<f64>> {
    par::map(orders, par, |o| {
        valid(problem, o).then(|| problem.fitness_unchecked(o))
    })
}

fn valid(problem: &OrderingProblem, order: &[usize]) -> bool {
    let n = problem.n();
    if order.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &t in order {
        if t >= n || std::mem::replace(&mut seen[t], true) {
            return false;
        }
    }
    problem.feasible_unchecked(order)
}

fn crossover(a: &[usize], b: &[usize], k: usize, policy: InvalidPolicy) -> Vec<usize> {
    match policy {
        InvalidPolicy::Discard => a[..k].iter().chain(&b[k..]).copied().collect(),
        InvalidPolicy::Repair => {
            let mut taken = vec![false; a.len()];
            for &t in &a[..k] {
                taken[t] = true;
            }
            a[..k]
                .iter()
                .copied()
                .chain(b.iter().copied().filter(|&t| !taken[t]))
                .collect()
        }
    }
}

struct Run<'a> {
    problem: &'a OrderingProblem,
    params: &'a GaParams,
    rng: ChaCha8Rng,
}

impl Run<'_> {
    fn fresh_population(&mut self) -> Vec<Individual> {
        let mut pop: Vec<Individual> = (0..self.params.population_size)
            .map(|_| {
                let order = self.problem.random_feasible_order(&mut self.rng);
                let fitness = self.problem.fitness_unchecked(&order);
                Individual { order, fitness }
            })
            .collect();
        pop.sort_by(by_fitness);
        pop.dedup_by(|x, y| x.order == y.order);
        pop
    }

    fn breed(&mut self, pop: &[Individual]) -> Vec<Individual> {
        let n = self.problem.n();
        let mut elite: Vec<&Individual> = pop.iter().take(2 * self.params.elite_pairs).collect();
        elite.shuffle(&mut self.rng);
        let mut children = Vec::with_capacity(elite.len());
        for pair in elite.chunks_exact(2) {
            let (a, b) = (&pair[0].order, &pair[1].order);
            let k = self.rng.gen_range(1..=n);
            for (x, y) in [(a, b), (b, a)] {
                let mut child = crossover(x, y, k, self.params.invalid_policy);
                let m1 = self.rng.gen_range(0..n);
                let m2 = self.rng.gen_range(0..n);
                child.swap(m1, m2);
                if valid(self.problem, &child) {
                    let fitness = self.problem.fitness_unchecked(&child);
                    children.push(Individual {
                        order: child,
                        fitness,
                    });
                }
            }
        }
        children
    }

    /// Returns the best individual and the generations spent.
    fn execute(&mut self) -> (Individual, usize) {
        let mut best: Option<Individual> = None;
        let mut generations = 0usize;
        'attempts: for _ in 0..=self.params.max_restarts {
            let mut pop = self.fresh_population();
            let mut attempt_best = pop[0].fitness;
            if best.as_ref().is_none_or(|b| by_fitness(&pop[0], b).is_lt()) {
                best = Some(pop[0].clone());
            }
            let mut stagnant = 0usize;
            while stagnant < self.params.max_stagnant_generations {
                if generations >= self.params.max_generations {
                    break 'attempts;
                }
                generations += 1;
                let children = self.breed(&pop);
                pop.extend(children);
                pop.sort_by(by_fitness);
                pop.dedup_by(|x, y| x.order == y.order);
                pop.truncate(self.params.population_size);
                if pop[0].fitness < attempt_best {
                    attempt_best = pop[0].fitness;
                    stagnant = 0;
                } else {
                    stagnant += 1;
                }
                if best.as_ref().is_none_or(|b| by_fitness(&pop[0], b).is_lt()) {
                    best = Some(pop[0].clone());
                }
            }
        }
        (best.expect("population is never empty"), generations)
    }
}

/// Seed of run `index`, derived from the base seed with a splitmix step.
fn run_seed(base: u64, index: usize) -> u64 {
    let mut z = base.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Best order found by `params.runs` independent GA runs.
///
/// Deterministic for a fixed `rng_seed` regardless of `par`.
pub fn solve_ga(
    problem: &OrderingProblem,
    params: &GaParams,
    par: Parallelism,
) -> Result<OrderingSolution> {
    params.validate()?;
    let n = problem.n();
    if n < 2 {
        return Err(Error::invalid(
            "ordering problem",
            "the genetic solver needs at least two tasks",
        ));
    }
    let results = par::map_range(params.runs, par, |r| {
        let mut run = Run {
            problem,
            params,
            rng: ChaCha8Rng::seed_from_u64(run_seed(params.rng_seed, r)),
        };
        run.execute()
    });
    let (best, generations) = results
        .into_iter()
        .reduce(|acc, cur| if by_fitness(&cur.0, &acc.0).is_lt() { cur } else { acc })
        .expect("at least one run");
    Ok(OrderingSolution {
        order: best.order,
        fitness: best.fitness,
        solver: SolverKind::Genetic,
        generations,
        seed: Some(params.rng_seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costmodel::{CostMatrix, CostUnit};
    use crate::ordering::{precedence_feasible, Objective};

    fn ring(n: usize) -> OrderingProblem {
        // cheapest tour walks the ring 0..n
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let d = (i as isize - j as isize).unsigned_abs();
                        d.min(n - d) as f64
                    })
                    .collect()
            })
            .collect();
        OrderingProblem::unconstrained(CostMatrix::new(rows, CostUnit::Time).unwrap(), Objective::ClosedTour)
    }

    #[test]
    fn discard_policy_copies_prefix_verbatim() {
        let a = [0, 1, 2, 3];
        let b = [3, 2, 1, 0];
        assert_eq!(crossover(&a, &b, 2, InvalidPolicy::Discard), vec![0, 1, 1, 0]);
        assert_eq!(crossover(&a, &b, 2, InvalidPolicy::Repair), vec![0, 1, 3, 2]);
        assert_eq!(crossover(&a, &b, 4, InvalidPolicy::Discard), a.to_vec());
    }

    #[test]
    fn finds_the_ring_tour() {
        let p = ring(9);
        for policy in [InvalidPolicy::Discard, InvalidPolicy::Repair] {
            let s = solve_ga(&p, &GaParams::default().with_seed(7).with_policy(policy), Parallelism::Parallel)
                .unwrap();
            assert_eq!(s.fitness, 9.0, "{policy:?}");
            assert_eq!(s.solver, SolverKind::Genetic);
        }
    }

    #[test]
    fn seeded_runs_are_reproducible_in_both_modes() {
        let p = ring(12);
        let params = GaParams {
            max_stagnant_generations: 30,
            ..GaParams::default().with_seed(99)
        };
        let a = solve_ga(&p, &params, Parallelism::Sequential).unwrap();
        let b = solve_ga(&p, &params, Parallelism::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn results_respect_precedence() {
        let n = 8;
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { ((i * 5 + j * 11) % 13) as f64 }).collect())
            .collect();
        let p = OrderingProblem::new(
            CostMatrix::new(rows, CostUnit::Time).unwrap(),
            vec![(7, 0), (0, 3), (5, 1)],
            vec![],
            Objective::OpenPath,
        )
        .unwrap();
        let s = solve_ga(&p, &GaParams::default().with_seed(1), Parallelism::Parallel).unwrap();
        assert!(precedence_feasible(&p, &s.order).unwrap());
    }

    #[test]
    fn parameters_are_validated() {
        let bad = GaParams {
            population_size: 10,
            elite_pairs: 6,
            ..GaParams::default()
        };
        assert!(bad.validate().is_err());
        let p = ring(5);
        assert!(solve_ga(&p, &bad, Parallelism::Sequential).is_err());
    }

    #[test]
    fn evaluation_flags_invalid_orders() {
        let p = ring(4);
        let out = evaluate_population(
            &p,
            &[vec![0, 1, 2, 3], vec![0, 0, 2, 3], vec![0, 1, 2]],
            Parallelism::Parallel,
        );
        assert_eq!(out, vec![Some(4.0), None, None]);
    }
}
