//! Streaming enumeration of all task graphs over `n` tasks and `D` levels.
//!
//! Graphs over tasks `0..=t` are grown from graphs over `0..t` by attaching
//! task `t`: it walks down existing groups for some number of levels (each
//! group a child of the previous one) and then branches out into fresh
//! groups for the remaining levels. Tasks are attached in increasing order,
//! so new groups always receive the next label and every emitted chain is
//! already canonical.

use std::collections::HashSet;

use super::TaskGraph;
use crate::error::{Error, Result};

/// Default enumeration cap.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

/// Number of task graphs over `n` tasks and `d` levels, saturating at
/// `u128::MAX`.
///
/// Choosing the level-0 block of task 0 (size `k`) and recursing on both that
/// block (one level shorter) and the rest gives
/// `C_d(n) = sum_k binom(n-1, k-1) * C_{d-1}(k) * C_d(n-k)`.
pub fn count_task_graphs(n: usize, d: usize) -> u128 {
    // binomials up to n
    let mut binom = vec![vec![0u128; n + 1]; n + 1];
    for i in 0..=n {
        binom[i][0] = 1;
        for j in 1..=i {
            binom[i][j] = binom[i - 1][j - 1].saturating_add(binom[i - 1][j]);
        }
    }
    // counts[level][size]
    let mut prev = vec![1u128; n + 1];
    for _ in 0..d {
        let mut cur = vec![0u128; n + 1];
        cur[0] = 1;
        for m in 1..=n {
            let mut acc = 0u128;
            for k in 1..=m {
                let term = binom[m - 1][k - 1]
                    .saturating_mul(prev[k])
                    .saturating_mul(cur[m - k]);
                acc = acc.saturating_add(term);
            }
            cur[m] = acc;
        }
        prev = cur;
    }
    prev[n]
}

/// Streams every task graph exactly once. Fails with [`Error::Capacity`]
/// when the total count exceeds `cap`.
pub fn enumerate_task_graphs(n: usize, d: usize, cap: u64) -> Result<TaskGraphIter> {
    if n == 0 || d == 0 {
        return Err(Error::invalid(
            "enumeration request",
            "need at least one task and one branch point",
        ));
    }
    let total = count_task_graphs(n, d);
    if total > u128::from(cap) {
        return Err(Error::Capacity(format!(
            "{n} tasks with {d} branch points give {total} task graphs, above the cap of {cap}; \
             raise the cap or use fewer branch points"
        )));
    }
    Ok(TaskGraphIter::new(n, d))
}

/// One attachment choice for a task: its group label at every level.
type Attachment = Vec<usize>;

struct Frame {
    choices: Vec<Attachment>,
    next: usize,
    /// Levels at which the applied choice opened a new group.
    opened: Vec<bool>,
}

/// Depth-first generator behind [`enumerate_task_graphs`].
pub struct TaskGraphIter {
    n: usize,
    d: usize,
    /// `labels[level][task]` for the tasks attached so far.
    labels: Vec<Vec<usize>>,
    /// Group count per level.
    groups: Vec<usize>,
    /// `parent[level][group]` is the enclosing group at `level - 1`.
    parent: Vec<Vec<usize>>,
    stack: Vec<Frame>,
    seen: HashSet<Vec<Vec<usize>>>,
    started: bool,
}

impl TaskGraphIter {
    fn new(n: usize, d: usize) -> Self {
        TaskGraphIter {
            n,
            d,
            labels: vec![Vec::with_capacity(n); d],
            groups: vec![0; d],
            parent: vec![Vec::new(); d],
            stack: Vec::with_capacity(n),
            seen: HashSet::new(),
            started: false,
        }
    }

    /// All ways to attach one more task to the current partial graph.
    fn attachments(&self) -> Vec<Attachment> {
        let mut out = Vec::new();
        // walk: labels chosen for levels 0..path.len()
        let mut path: Vec<usize> = Vec::with_capacity(self.d);
        self.extend(&mut path, &mut out);
        out
    }

    fn extend(&self, path: &mut Vec<usize>, out: &mut Vec<Attachment>) {
        let level = path.len();
        if level == self.d {
            out.push(path.clone());
            return;
        }
        for g in 0..self.groups[level] {
            let inside = level == 0 || self.parent[level][g] == path[level - 1];
            if inside {
                path.push(g);
                self.extend(path, out);
                path.pop();
            }
        }
        // branch out here: fresh groups from this level down
        let mut branched = path.clone();
        branched.extend((level..self.d).map(|lv| self.groups[lv]));
        out.push(branched);
    }

    fn apply(&mut self, choice: &Attachment) -> Vec<bool> {
        let mut opened = vec![false; self.d];
        for (level, &g) in choice.iter().enumerate() {
            if g == self.groups[level] {
                self.groups[level] += 1;
                let up = if level == 0 { 0 } else { choice[level - 1] };
                self.parent[level].push(up);
                opened[level] = true;
            }
            self.labels[level].push(g);
        }
        opened
    }

    fn undo(&mut self, opened: &[bool]) {
        for level in 0..self.d {
            self.labels[level].pop();
            if opened[level] {
                self.groups[level] -= 1;
                self.parent[level].pop();
            }
        }
    }

    /// Advances the search to the next complete graph.
    fn advance(&mut self) -> bool {
        if !self.started {
            self.started = true;
            let choices = self.attachments();
            self.stack.push(Frame {
                choices,
                next: 0,
                opened: Vec::new(),
            });
        }
        loop {
            let Some(top) = self.stack.last_mut() else {
                return false;
            };
            if !top.opened.is_empty() {
                let opened = std::mem::take(&mut top.opened);
                self.undo(&opened);
            }
            let top = self.stack.last_mut().expect("frame present");
            if top.next == top.choices.len() {
                self.stack.pop();
                continue;
            }
            let choice = top.choices[top.next].clone();
            top.next += 1;
            let opened = self.apply(&choice);
            self.stack.last_mut().expect("frame present").opened = opened;
            if self.stack.len() == self.n {
                return true;
            }
            let choices = self.attachments();
            self.stack.push(Frame {
                choices,
                next: 0,
                opened: Vec::new(),
            });
        }
    }
}

impl Iterator for TaskGraphIter {
    type Item = TaskGraph;

    fn next(&mut self) -> Option<TaskGraph> {
        while self.advance() {
            let graph = TaskGraph::from_labels(self.n, self.labels.clone());
            if self.seen.insert(self.labels.clone()) {
                return Some(graph);
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_known_values() {
        // D = 1: Bell numbers
        let bell = [1u128, 1, 2, 5, 15, 52, 203, 877];
        for (n, &b) in bell.iter().enumerate() {
            assert_eq!(count_task_graphs(n, 1), b, "n={n}");
        }
        assert_eq!(count_task_graphs(2, 2), 3);
        assert_eq!(count_task_graphs(1, 5), 1);
    }

    #[test]
    fn small_enumerations() {
        let all: Vec<_> = enumerate_task_graphs(2, 1, 10).unwrap().collect();
        assert_eq!(all.len(), 2);
        assert!(all.contains(&TaskGraph::fully_shared(2, 1)));
        assert!(all.contains(&TaskGraph::all_singletons(2, 1)));
        assert_eq!(enumerate_task_graphs(3, 1, 10).unwrap().count(), 5);
        assert_eq!(enumerate_task_graphs(1, 3, 10).unwrap().count(), 1);
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            enumerate_task_graphs(10, 3, 1000),
            Err(Error::Capacity(_))
        ));
        assert!(enumerate_task_graphs(3, 1, 5).is_ok());
        assert!(enumerate_task_graphs(3, 1, 4).is_err());
    }

    #[test]
    fn enumeration_count_matches_formula() {
        for n in 1..=6 {
            for d in 1..=3 {
                let got = enumerate_task_graphs(n, d, u64::MAX).unwrap().count() as u128;
                assert_eq!(got, count_task_graphs(n, d), "n={n} d={d}");
            }
        }
    }
}
