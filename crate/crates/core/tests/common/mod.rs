//! Independent oracles and seeded fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use tasksched::affinity::AffinityTensor;
use tasksched::costmodel::{CostMatrix, CostUnit};
use tasksched::ordering::{Conditional, Objective, OrderingProblem};
use tasksched::taskgraph::{Architecture, BlockCostProfile, BranchPointConfig, LayerCost};
use tasksched::TaskGraph;

/// Bundled TSPLIB instances; resolves from either crate of the workspace.
pub fn tsplib_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .parent()
        .expect("crates directory")
        .join("core/tests/data/tsplib")
}

/// Next permutation in lexicographic order; false after the last one.
pub fn next_permutation(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Plain evaluation of an order, straight from the definition.
pub fn order_cost(
    costs: &[Vec<f64>],
    conditional: &[Conditional],
    objective: Objective,
    order: &[usize],
) -> f64 {
    let weight = |a: usize, b: usize| {
        conditional
            .iter()
            .find(|c| c.from == a && c.to == b)
            .map_or(1.0, |c| c.probability)
    };
    let mut total = 0.0;
    for w in order.windows(2) {
        total += weight(w[0], w[1]) * costs[w[0]][w[1]];
    }
    if objective == Objective::ClosedTour && order.len() > 1 {
        let (a, b) = (order[order.len() - 1], order[0]);
        total += weight(a, b) * costs[a][b];
    }
    total
}

pub fn respects(order: &[usize], precedence: &[(usize, usize)]) -> bool {
    let pos = |t: usize| order.iter().position(|&x| x == t).unwrap();
    precedence.iter().all(|&(a, b)| pos(a) < pos(b))
}

/// Scans every permutation in lexicographic order and keeps the first one
/// with the lowest cost.
pub fn brute_force(
    costs: &[Vec<f64>],
    precedence: &[(usize, usize)],
    conditional: &[Conditional],
    objective: Objective,
) -> (Vec<usize>, f64) {
    let n = costs.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best: Option<(Vec<usize>, f64)> = None;
    loop {
        let all_prec: Vec<(usize, usize)> = precedence
            .iter()
            .copied()
            .chain(conditional.iter().map(|c| (c.from, c.to)))
            .collect();
        if respects(&perm, &all_prec) {
            let c = order_cost(costs, conditional, objective, &perm);
            if best.as_ref().is_none_or(|(_, b)| c < *b) {
                best = Some((perm.clone(), c));
            }
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    best.expect("precedence is acyclic")
}

/// Held-Karp dynamic program for the cheapest closed tour.
pub fn held_karp_tour(w: &[Vec<f64>]) -> f64 {
    let n = w.len();
    if n <= 1 {
        return 0.0;
    }
    let full = 1usize << (n - 1);
    // dp[mask][j]: start at node n-1, visit mask (over nodes 0..n-1), end at j
    let mut dp = vec![vec![f64::INFINITY; n - 1]; full];
    for j in 0..n - 1 {
        dp[1 << j][j] = w[n - 1][j];
    }
    for mask in 1..full {
        for j in 0..n - 1 {
            let cur = dp[mask][j];
            if cur.is_infinite() || mask & (1 << j) == 0 {
                continue;
            }
            for k in 0..n - 1 {
                if mask & (1 << k) == 0 {
                    let next = mask | (1 << k);
                    let c = cur + w[j][k];
                    if c < dp[next][k] {
                        dp[next][k] = c;
                    }
                }
            }
        }
    }
    (0..n - 1)
        .map(|j| dp[full - 1][j] + w[j][n - 1])
        .fold(f64::INFINITY, f64::min)
}

/// All set partitions of `0..n`, groups ordered by smallest member.
pub fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    fn rec(i: usize, n: usize, cur: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for g in 0..cur.len() {
            cur[g].push(i);
            rec(i + 1, n, cur, out);
            cur[g].pop();
        }
        cur.push(vec![i]);
        rec(i + 1, n, cur, out);
        cur.pop();
    }
    let mut out = Vec::new();
    rec(0, n, &mut Vec::new(), &mut out);
    out
}

pub fn refines(finer: &[Vec<usize>], coarser: &[Vec<usize>]) -> bool {
    finer
        .iter()
        .all(|g| coarser.iter().any(|c| g.iter().all(|t| c.contains(t))))
}

/// Every chain `P1 >= P2 >= ... >= Pd` of set partitions of `0..n`.
pub fn partition_chains(n: usize, d: usize) -> Vec<Vec<Vec<Vec<usize>>>> {
    let parts = set_partitions(n);
    let mut chains: Vec<Vec<Vec<Vec<usize>>>> = parts.iter().map(|p| vec![p.clone()]).collect();
    for _ in 1..d {
        let mut next = Vec::new();
        for chain in &chains {
            let last = chain.last().unwrap();
            for p in &parts {
                if refines(p, last) {
                    let mut c = chain.clone();
                    c.push(p.clone());
                    next.push(c);
                }
            }
        }
        chains = next;
    }
    chains
}

/// Brute-force check for a Hamiltonian cycle.
pub fn has_hamiltonian_cycle(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![vec![false; n]; n];
    for &(a, b) in edges {
        adj[a][b] = true;
        adj[b][a] = true;
    }
    if n < 3 {
        return false;
    }
    // fix vertex 0 first to skip rotations
    let mut rest: Vec<usize> = (1..n).collect();
    loop {
        let mut ok = adj[0][rest[0]] && adj[rest[rest.len() - 1]][0];
        ok = ok && rest.windows(2).all(|w| adj[w[0]][w[1]]);
        if ok {
            return true;
        }
        if !next_permutation(&mut rest) {
            return false;
        }
    }
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, max: u32) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { 0.0 } else { rng.gen_range(1..=max) as f64 })
                .collect()
        })
        .collect()
}

/// Random acyclic precedence: edges follow a hidden random order.
pub fn random_dag(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut hidden: Vec<usize> = (0..n).collect();
    hidden.shuffle(rng);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.gen_bool(p) {
                edges.push((hidden[a], hidden[b]));
            }
        }
    }
    edges
}

pub fn problem(
    rows: Vec<Vec<f64>>,
    precedence: Vec<(usize, usize)>,
    conditional: Vec<Conditional>,
    objective: Objective,
) -> OrderingProblem {
    OrderingProblem::new(
        CostMatrix::new(rows, CostUnit::Time).unwrap(),
        precedence,
        conditional,
        objective,
    )
    .unwrap()
}

/// Architecture with `d` branch points, one to three layers per segment and
/// random layer costs.
pub fn random_arch(rng: &mut ChaCha8Rng, d: usize) -> Architecture {
    let mut branch_layers = Vec::new();
    let mut layer = 0;
    for _ in 0..d {
        layer += rng.gen_range(1..=3);
        branch_layers.push(layer);
    }
    let num_layers = layer + rng.gen_range(1..=3);
    let layers = (0..num_layers)
        .map(|_| LayerCost {
            exec_cost: rng.gen_range(1..=20) as f64 / 4.0,
            load_cost: rng.gen_range(0..=20) as f64 / 4.0,
            param_size: rng.gen_range(100..=5000),
        })
        .collect();
    Architecture::new(
        BranchPointConfig::new(num_layers, branch_layers).unwrap(),
        BlockCostProfile { layers },
    )
    .unwrap()
}

/// Symmetric affinity tensor with random entries in `[-1, 1]`.
pub fn random_affinity(rng: &mut ChaCha8Rng, n: usize, d: usize) -> AffinityTensor {
    let mut t = AffinityTensor::identical(n, d);
    for rho in 0..d {
        for i in 0..n {
            for j in (i + 1)..n {
                t.set_pair(rho, i, j, rng.gen_range(-1.0..=1.0));
            }
        }
    }
    t
}

/// A uniformly chosen chain from the full oracle list.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, d: usize) -> TaskGraph {
    let chains = partition_chains(n, d);
    let chain = chains[rng.gen_range(0..chains.len())].clone();
    TaskGraph::new(n, chain).unwrap()
}

pub fn canonical_set(graphs: impl IntoIterator<Item = TaskGraph>) -> BTreeSet<TaskGraph> {
    graphs.into_iter().collect()
}
