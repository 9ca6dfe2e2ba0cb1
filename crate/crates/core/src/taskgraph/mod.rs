//! Task graphs as chains of successively refining task partitions.
//!
//! A graph over `n` tasks and `D` branch points is a list of `D` partitions
//! of the task set. `partitions[d]` decides which tasks share the segment of
//! the network that starts at branch point `d`; it refines `partitions[d-1]`.
//! Every path also has a shared trunk before the first branch point and a
//! private head (the last layer) after the last segment.

mod enumerate;

use std::collections::BTreeSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::affinity::AffinityTensor;
use crate::error::{Error, Result};

pub use enumerate::{
    count_task_graphs, enumerate_task_graphs, TaskGraphIter, DEFAULT_ENUMERATION_CAP,
};

/// A task graph in canonical form: groups are sorted by their smallest
/// member and members ascend.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "TaskGraphDoc", into = "TaskGraphDoc")]
pub struct TaskGraph {
    n: usize,
    partitions: Vec<Vec<Vec<usize>>>,
    /// `labels[d][task]` is the index of the task's group in `partitions[d]`.
    labels: Vec<Vec<usize>>,
}

/// Serialized shape of a [`TaskGraph`]: `{n, d, partitions}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskGraphDoc {
    pub n: usize,
    pub d: usize,
    pub partitions: Vec<Vec<Vec<usize>>>,
}

impl TryFrom<TaskGraphDoc> for TaskGraph {
    type Error = Error;

    fn try_from(doc: TaskGraphDoc) -> Result<Self> {
        if doc.partitions.len() != doc.d {
            return Err(Error::invalid(
                "task graph",
                format!("d = {} but {} partitions given", doc.d, doc.partitions.len()),
            ));
        }
        TaskGraph::new(doc.n, doc.partitions)
    }
}

impl From<TaskGraph> for TaskGraphDoc {
    fn from(g: TaskGraph) -> Self {
        TaskGraphDoc {
            n: g.n,
            d: g.partitions.len(),
            partitions: g.partitions,
        }
    }
}

impl TaskGraph {
    /// Validates and canonicalizes a refinement chain of partitions of
    /// `0..n`.
    pub fn new(n: usize, partitions: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("task graph", "needs at least one task"));
        }
        if partitions.is_empty() {
            return Err(Error::invalid("task graph", "needs at least one branch point"));
        }
        let mut labels = Vec::with_capacity(partitions.len());
        for (d, groups) in partitions.iter().enumerate() {
            let mut label = vec![usize::MAX; n];
            for (gi, group) in groups.iter().enumerate() {
                if group.is_empty() {
                    return Err(Error::invalid("task graph", format!("empty group at level {d}")));
                }
                for &t in group {
                    if t >= n {
                        return Err(Error::invalid(
                            "task graph",
                            format!("task {t} out of range at level {d}"),
                        ));
                    }
                    if label[t] != usize::MAX {
                        return Err(Error::invalid(
                            "task graph",
                            format!("task {t} appears twice at level {d}"),
                        ));
                    }
                    label[t] = gi;
                }
            }
            if let Some(t) = label.iter().position(|&l| l == usize::MAX) {
                return Err(Error::invalid(
                    "task graph",
                    format!("task {t} missing at level {d}"),
                ));
            }
            labels.push(label);
        }
        for d in 1..labels.len() {
            for a in 0..n {
                for b in (a + 1)..n {
                    if labels[d][a] == labels[d][b] && labels[d - 1][a] != labels[d - 1][b] {
                        return Err(Error::invalid(
                            "task graph",
                            format!("level {d} does not refine level {}", d - 1),
                        ));
                    }
                }
            }
        }
        Ok(Self::from_labels(n, labels))
    }

    /// Builds the canonical graph from per-level group labels. Labels need
    /// not be canonical; the chain must already be a valid refinement.
    pub(crate) fn from_labels(n: usize, raw: Vec<Vec<usize>>) -> Self {
        let mut partitions = Vec::with_capacity(raw.len());
        let mut labels = Vec::with_capacity(raw.len());
        for level in raw {
            let mut remap: Vec<(usize, usize)> = Vec::new();
            let mut canon = vec![0; n];
            let mut groups: Vec<Vec<usize>> = Vec::new();
            for (t, &l) in level.iter().enumerate() {
                let id = match remap.iter().find(|(old, _)| *old == l) {
                    Some(&(_, id)) => id,
                    None => {
                        remap.push((l, groups.len()));
                        groups.push(Vec::new());
                        groups.len() - 1
                    }
                };
                canon[t] = id;
                groups[id].push(t);
            }
            partitions.push(groups);
            labels.push(canon);
        }
        TaskGraph {
            n,
            partitions,
            labels,
        }
    }

    /// Every task shares every segment; only heads are private.
    pub fn fully_shared(n: usize, num_branch_points: usize) -> Self {
        Self::from_labels(n, vec![vec![0; n]; num_branch_points])
    }

    /// Tasks share only the trunk.
    pub fn all_singletons(n: usize, num_branch_points: usize) -> Self {
        Self::from_labels(n, vec![(0..n).collect(); num_branch_points])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_branch_points(&self) -> usize {
        self.partitions.len()
    }

    pub fn partitions(&self) -> &[Vec<Vec<usize>>] {
        &self.partitions
    }

    /// Group index of `task` in `partitions[level]`.
    pub fn group_of(&self, level: usize, task: usize) -> usize {
        self.labels[level][task]
    }

    /// Number of leading branch-point levels at which `i` and `j` share a
    /// group. Equals `D` when they only differ at the heads.
    pub fn shared_levels(&self, i: usize, j: usize) -> usize {
        self.labels
            .iter()
            .take_while(|level| level[i] == level[j])
            .count()
    }

    /// Merges the groups holding `a` and `b` at `level` and at every coarser
    /// level, which keeps the chain a refinement.
    pub fn merge_through(&self, level: usize, a: usize, b: usize) -> TaskGraph {
        let mut raw = self.labels.clone();
        for lv in raw.iter_mut().take(level + 1) {
            let (ga, gb) = (lv[a], lv[b]);
            for l in lv.iter_mut() {
                if *l == gb {
                    *l = ga;
                }
            }
        }
        TaskGraph::from_labels(self.n, raw)
    }
}

/// Layer indices at which task paths may diverge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchPointConfig {
    pub num_layers: usize,
    pub branch_layers: Vec<usize>,
}

impl BranchPointConfig {
    pub fn new(num_layers: usize, branch_layers: Vec<usize>) -> Result<Self> {
        let cfg = BranchPointConfig {
            num_layers,
            branch_layers,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `d` branch points spread evenly over the layers before the head.
    pub fn evenly_spaced(d: usize, num_layers: usize) -> Result<Self> {
        if d == 0 || num_layers < d + 2 {
            return Err(Error::invalid(
                "branch point config",
                format!("{d} branch point(s) need at least {} layers, got {num_layers}", d + 2),
            ));
        }
        let span = num_layers - 1;
        let layers = (1..=d).map(|k| k * span / (d + 1)).collect();
        Self::new(num_layers, layers)
    }

    pub fn validate(&self) -> Result<()> {
        if self.branch_layers.is_empty() {
            return Err(Error::invalid("branch point config", "D must be at least 1"));
        }
        if self.num_layers < 2 {
            return Err(Error::invalid(
                "branch point config",
                "need at least two layers (trunk and head)",
            ));
        }
        if self.branch_layers.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "branch point config",
                "branch layers must be strictly increasing",
            ));
        }
        let head = self.num_layers - 1;
        if self.branch_layers.iter().any(|&l| l > head) {
            return Err(Error::invalid(
                "branch point config",
                format!("branch layers must not exceed the head layer {head}"),
            ));
        }
        Ok(())
    }

    pub fn num_branch_points(&self) -> usize {
        self.branch_layers.len()
    }

    /// Layer range of segment `s`: `0` is the trunk, `1..=D` the grouped
    /// segments, `D + 1` the head.
    pub fn segment_layers(&self, s: usize) -> Range<usize> {
        let d = self.branch_layers.len();
        let bound = |k: usize| match k {
            0 => 0,
            k if k <= d => self.branch_layers[k - 1],
            k if k == d + 1 => self.num_layers - 1,
            _ => self.num_layers,
        };
        bound(s)..bound(s + 1)
    }
}

/// Per-layer costs of the common architecture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerCost {
    pub exec_cost: f64,
    pub load_cost: f64,
    pub param_size: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockCostProfile {
    pub layers: Vec<LayerCost>,
}

impl BlockCostProfile {
    pub fn uniform(num_layers: usize, exec_cost: f64, load_cost: f64, param_size: u64) -> Self {
        BlockCostProfile {
            layers: vec![
                LayerCost {
                    exec_cost,
                    load_cost,
                    param_size
                };
                num_layers
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, l) in self.layers.iter().enumerate() {
            let ok = |v: f64| v.is_finite() && v >= 0.0;
            if !ok(l.exec_cost) || !ok(l.load_cost) {
                return Err(Error::invalid(
                    "block cost profile",
                    format!("layer {i} has a negative or non-finite cost"),
                ));
            }
        }
        Ok(())
    }
}

/// Summed costs of a contiguous run of layers.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpanCost {
    pub exec_cost: f64,
    pub load_cost: f64,
    pub param_size: u64,
}

impl SpanCost {
    /// Load plus execute.
    pub fn run_cost(&self) -> f64 {
        self.load_cost + self.exec_cost
    }
}

/// Branch-point layout plus layer costs, with per-segment sums precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct Architecture {
    config: BranchPointConfig,
    costs: BlockCostProfile,
    segments: Vec<SpanCost>,
}

impl Architecture {
    pub fn new(config: BranchPointConfig, costs: BlockCostProfile) -> Result<Self> {
        config.validate()?;
        costs.validate()?;
        if costs.layers.len() != config.num_layers {
            return Err(Error::Shape(format!(
                "cost profile has {} layers, branch point config expects {}",
                costs.layers.len(),
                config.num_layers
            )));
        }
        let segments = (0..config.num_branch_points() + 2)
            .map(|s| {
                costs.layers[config.segment_layers(s)]
                    .iter()
                    .fold(SpanCost::default(), |acc, l| SpanCost {
                        exec_cost: acc.exec_cost + l.exec_cost,
                        load_cost: acc.load_cost + l.load_cost,
                        param_size: acc.param_size + l.param_size,
                    })
            })
            .collect();
        Ok(Architecture {
            config,
            costs,
            segments,
        })
    }

    pub fn config(&self) -> &BranchPointConfig {
        &self.config
    }

    pub fn costs(&self) -> &BlockCostProfile {
        &self.costs
    }

    pub fn num_branch_points(&self) -> usize {
        self.config.num_branch_points()
    }

    /// Summed cost of segment `s` (see [`BranchPointConfig::segment_layers`]).
    pub fn segment(&self, s: usize) -> SpanCost {
        self.segments[s]
    }

    pub fn trunk(&self) -> SpanCost {
        self.segments[0]
    }

    pub fn head(&self) -> SpanCost {
        self.segments[self.segments.len() - 1]
    }

    /// Load-and-execute cost of one root-to-head path; equal for all tasks.
    pub fn path_cost(&self) -> f64 {
        self.segments.iter().map(SpanCost::run_cost).sum()
    }

    /// Parameter size of one full network.
    pub fn network_size(&self) -> u64 {
        self.segments.iter().map(|s| s.param_size).sum()
    }

    pub(crate) fn check_graph(&self, graph: &TaskGraph) -> Result<()> {
        if graph.num_branch_points() != self.num_branch_points() {
            return Err(Error::Shape(format!(
                "graph has {} branch points, architecture has {}",
                graph.num_branch_points(),
                self.num_branch_points()
            )));
        }
        Ok(())
    }
}

/// A block of the multitask network: one segment owned by a task group.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub segment: usize,
    pub tasks: Vec<usize>,
    pub layers: Range<usize>,
    pub cost: SpanCost,
}

/// Materializes the trunk, one block per group at each branch point, and one
/// head per task.
pub fn blocks_of(graph: &TaskGraph, arch: &Architecture) -> Result<Vec<Block>> {
    arch.check_graph(graph)?;
    let d = graph.num_branch_points();
    let mut blocks = Vec::new();
    blocks.push(Block {
        segment: 0,
        tasks: (0..graph.n()).collect(),
        layers: arch.config().segment_layers(0),
        cost: arch.segment(0),
    });
    for (level, groups) in graph.partitions().iter().enumerate() {
        for g in groups {
            blocks.push(Block {
                segment: level + 1,
                tasks: g.clone(),
                layers: arch.config().segment_layers(level + 1),
                cost: arch.segment(level + 1),
            });
        }
    }
    for t in 0..graph.n() {
        blocks.push(Block {
            segment: d + 1,
            tasks: vec![t],
            layers: arch.config().segment_layers(d + 1),
            cost: arch.head(),
        });
    }
    Ok(blocks)
}

/// Stored parameter size: each block counted once.
pub fn model_size(graph: &TaskGraph, arch: &Architecture) -> Result<u64> {
    arch.check_graph(graph)?;
    let grouped: u64 = graph
        .partitions()
        .iter()
        .enumerate()
        .map(|(level, groups)| groups.len() as u64 * arch.segment(level + 1).param_size)
        .sum();
    Ok(arch.trunk().param_size + grouped + graph.n() as u64 * arch.head().param_size)
}

/// Variety at one branch point: the mean over groups of the largest pairwise
/// dissimilarity `1 - S` inside the group. Singleton groups contribute zero.
pub fn variety_at_branch(graph: &TaskGraph, affinity: &AffinityTensor, rho: usize) -> f64 {
    let groups = &graph.partitions()[rho];
    let total: f64 = groups
        .iter()
        .map(|g| {
            let mut worst = 0.0f64;
            for (x, &i) in g.iter().enumerate() {
                for &j in &g[x + 1..] {
                    worst = worst.max(1.0 - affinity.get(rho, i, j));
                }
            }
            worst
        })
        .sum();
    total / groups.len() as f64
}

/// Sum of [`variety_at_branch`] over all branch points.
pub fn variety_score(graph: &TaskGraph, affinity: &AffinityTensor) -> Result<f64> {
    if affinity.n() != graph.n() || affinity.num_branch_points() != graph.num_branch_points() {
        return Err(Error::Shape(format!(
            "affinity is {}x{}x{}, graph has D={} n={}",
            affinity.num_branch_points(),
            affinity.n(),
            affinity.n(),
            graph.num_branch_points(),
            graph.n()
        )));
    }
    Ok((0..graph.num_branch_points())
        .map(|rho| variety_at_branch(graph, affinity, rho))
        .sum())
}

/// Set of distinct block identities `(segment, members)` on a task's path.
pub fn path_blocks(graph: &TaskGraph, task: usize) -> BTreeSet<(usize, Vec<usize>)> {
    let d = graph.num_branch_points();
    let mut set = BTreeSet::new();
    set.insert((0, (0..graph.n()).collect()));
    for level in 0..d {
        let g = graph.group_of(level, task);
        set.insert((level + 1, graph.partitions()[level][g].clone()));
    }
    set.insert((d + 1, vec![task]));
    set
}
