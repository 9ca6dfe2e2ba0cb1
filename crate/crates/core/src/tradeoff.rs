//! Model-size budget sweep over scored task graphs.
//!
//! For each budget the lowest-variety graph that fits is selected. Variety
//! and execution cost of the selections are min-max normalized over the
//! sweep, and the default choice is the point where the two normalized
//! trends are closest.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Parallelism};
use crate::scoring::GraphScore;

/// Number of budgets in the default grid.
pub const DEFAULT_BUDGET_COUNT: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub budget: u64,
    /// Index of the selected graph in the scored list.
    pub graph_id: usize,
    pub best: GraphScore,
    pub variety_norm: f64,
    pub cost_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffCurve {
    pub points: Vec<TradeoffPoint>,
    /// Index into `points` of the intersection selection.
    pub selected: usize,
}

/// `count` budgets spaced evenly in log space from the smallest to the
/// largest model size in `scored`, rounded to whole bytes and deduplicated.
/// The endpoints are exact.
pub fn default_budgets(scored: &[GraphScore], count: usize) -> Vec<u64> {
    let Some(lo) = scored.iter().map(|s| s.model_size).min() else {
        return Vec::new();
    };
    let hi = scored.iter().map(|s| s.model_size).max().unwrap_or(lo);
    if lo == hi || count < 2 {
        return vec![hi];
    }
    // log of zero is undefined; start the geometric grid at one byte
    let (a, b) = ((lo.max(1) as f64).ln(), (hi as f64).ln());
    let mut out: Vec<u64> = (0..count)
        .map(|k| match k {
            0 => lo,
            k if k == count - 1 => hi,
            k => {
                let t = k as f64 / (count - 1) as f64;
                ((a + t * (b - a)).exp().round() as u64).clamp(lo, hi)
            }
        })
        .collect();
    out.dedup();
    out
}

fn normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    values
        .iter()
        .map(|&v| if span > 0.0 { ((v - lo) / span).clamp(0.0, 1.0) } else { 0.0 })
        .collect()
}

/// Index of the best graph within `budget`: lowest variety, then lowest
/// execution cost, then the canonical graph order.
fn best_within(scored: &[GraphScore], budget: u64) -> Option<usize> {
    scored
        .iter()
        .enumerate()
        .filter(|(_, s)| s.model_size <= budget)
        .min_by(|(_, x), (_, y)| {
            x.variety
                .total_cmp(&y.variety)
                .then(x.exec_cost.total_cmp(&y.exec_cost))
                .then_with(|| x.graph.cmp(&y.graph))
        })
        .map(|(i, _)| i)
}

/// Sweeps `budgets` (strictly increasing). Budgets that admit no graph are
/// skipped with a warning.
pub fn sweep(scored: &[GraphScore], budgets: &[u64], par: Parallelism) -> Result<TradeoffCurve> {
    if scored.is_empty() {
        return Err(Error::invalid("sweep", "no scored graphs"));
    }
    if budgets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("sweep", "budgets must be strictly increasing"));
    }
    let picks = par::map(budgets, par, |&b| best_within(scored, b));
    let mut chosen = Vec::new();
    for (&budget, pick) in budgets.iter().zip(picks) {
        match pick {
            Some(i) => chosen.push((budget, i)),
            None => log::warn!("no task graph fits within budget {budget}; skipping it"),
        }
    }
    if chosen.is_empty() {
        return Err(Error::EmptyCurve);
    }
    let varieties: Vec<f64> = chosen.iter().map(|&(_, i)| scored[i].variety).collect();
    let costs: Vec<f64> = chosen.iter().map(|&(_, i)| scored[i].exec_cost).collect();
    let (vn, cn) = (normalize(&varieties), normalize(&costs));
    let points: Vec<TradeoffPoint> = chosen
        .iter()
        .enumerate()
        .map(|(k, &(budget, i))| TradeoffPoint {
            budget,
            graph_id: i,
            best: scored[i].clone(),
            variety_norm: vn[k],
            cost_norm: cn[k],
        })
        .collect();
    let selected = intersection_index(&points);
    Ok(TradeoffCurve { points, selected })
}

/// Point with the smallest gap between normalized variety and cost; the
/// smaller budget wins ties.
fn intersection_index(points: &[TradeoffPoint]) -> usize {
    let mut best = 0;
    for (k, p) in points.iter().enumerate().skip(1) {
        let gap = (p.variety_norm - p.cost_norm).abs();
        let best_gap = (points[best].variety_norm - points[best].cost_norm).abs();
        if gap < best_gap {
            best = k;
        }
    }
    best
}

/// The graph where the normalized trends meet.
pub fn select_intersection(curve: &TradeoffCurve) -> Result<&GraphScore> {
    if curve.points.is_empty() {
        return Err(Error::EmptyCurve);
    }
    Ok(&curve.points[intersection_index(&curve.points)].best)
}

/// One row of the tab-separated curve table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub budget: u64,
    pub graph_id: usize,
    pub variety: f64,
    pub variety_norm: f64,
    pub cost: f64,
    pub cost_norm: f64,
    pub selected: bool,
}

pub const TABLE_HEADER: &str = "budget\tgraph_id\tvariety\tvariety_norm\tcost\tcost_norm\tselected";

impl TradeoffCurve {
    pub fn rows(&self) -> Vec<TableRow> {
        self.points
            .iter()
            .enumerate()
            .map(|(k, p)| TableRow {
                budget: p.budget,
                graph_id: p.graph_id,
                variety: p.best.variety,
                variety_norm: p.variety_norm,
                cost: p.best.exec_cost,
                cost_norm: p.cost_norm,
                selected: k == self.selected,
            })
            .collect()
    }

    /// Tab-separated table with a header line.
    pub fn to_table(&self) -> String {
        let mut out = String::from(TABLE_HEADER);
        out.push('\n');
        for r in self.rows() {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.budget,
                r.graph_id,
                r.variety,
                r.variety_norm,
                r.cost,
                r.cost_norm,
                u8::from(r.selected)
            )
            .expect("writing to a String cannot fail");
        }
        out
    }
}

/// Reads a table written by [`TradeoffCurve::to_table`].
pub fn parse_table(text: &str) -> Result<Vec<TableRow>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == TABLE_HEADER => {}
        _ => return Err(Error::parse(1, "missing trade-off table header")),
    }
    lines
        .map(|(i, line)| {
            let line_no = i + 1;
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 7 {
                return Err(Error::parse(line_no, format!("expected 7 fields, got {}", f.len())));
            }
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::parse(line_no, format!("bad number {s:?}: {e}")))
            };
            let int = |s: &str| {
                s.trim()
                    .parse::<u64>()
                    .map_err(|e| Error::parse(line_no, format!("bad integer {s:?}: {e}")))
            };
            Ok(TableRow {
                budget: int(f[0])?,
                graph_id: int(f[1])? as usize,
                variety: num(f[2])?,
                variety_norm: num(f[3])?,
                cost: num(f[4])?,
                cost_norm: num(f[5])?,
                selected: match f[6].trim() {
                    "1" => true,
                    "0" => false,
                    other => return Err(Error::parse(line_no, format!("bad flag {other:?}"))),
                },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ordering::SolverKind;
    use crate::taskgraph::TaskGraph;

    fn score(variety: f64, size: u64, cost: f64) -> GraphScore {
        GraphScore {
            graph: TaskGraph::fully_shared(2, 1),
            variety,
            model_size: size,
            exec_cost: cost,
            order: vec![0, 1],
            solver: SolverKind::Exact,
        }
    }

    #[test]
    fn single_graph_gives_flat_curve() {
        let s = vec![score(0.5, 10, 3.0)];
        let c = sweep(&s, &[10, 20, 40], Parallelism::Sequential).unwrap();
        assert_eq!(c.points.len(), 3);
        assert!(c.points.iter().all(|p| p.graph_id == 0 && p.variety_norm == 0.0));
        assert_eq!(select_intersection(&c).unwrap(), &s[0]);
    }

    #[test]
    fn unlimited_budget_picks_global_minimum_variety() {
        let s = vec![score(0.9, 10, 1.0), score(0.2, 30, 3.0), score(0.4, 20, 2.0)];
        let c = sweep(&s, &[u64::MAX], Parallelism::Sequential).unwrap();
        assert_eq!(c.points[0].graph_id, 1);
    }

    #[test]
    fn too_small_budgets_are_skipped() {
        let s = vec![score(0.9, 10, 1.0), score(0.2, 30, 3.0)];
        let c = sweep(&s, &[5, 10, 30], Parallelism::Sequential).unwrap();
        assert_eq!(c.points.iter().map(|p| p.budget).collect::<Vec<_>>(), vec![10, 30]);
        assert!(matches!(
            sweep(&s, &[1, 2], Parallelism::Sequential),
            Err(Error::EmptyCurve)
        ));
        assert!(sweep(&s, &[30, 10], Parallelism::Sequential).is_err());
    }

    #[test]
    fn ties_prefer_lower_cost() {
        let s = vec![score(0.2, 10, 5.0), score(0.2, 10, 4.0)];
        let c = sweep(&s, &[10], Parallelism::Sequential).unwrap();
        assert_eq!(c.points[0].graph_id, 1);
    }

    #[test]
    fn intersection_where_lines_cross() {
        // variety falls 1, .5, 0 while cost rises 0, .5, 1
        let s = vec![score(1.0, 10, 0.0), score(0.5, 20, 1.0), score(0.0, 30, 2.0)];
        let c = sweep(&s, &[10, 20, 30], Parallelism::Sequential).unwrap();
        assert_eq!(c.selected, 1);
        assert_eq!(select_intersection(&c).unwrap().model_size, 20);
    }

    #[test]
    fn budgets_are_log_spaced_with_exact_endpoints() {
        let s = vec![score(0.0, 100, 0.0), score(0.0, 100_000, 0.0)];
        let b = default_budgets(&s, DEFAULT_BUDGET_COUNT);
        assert_eq!(b.len(), 32);
        assert_eq!((b[0], b[31]), (100, 100_000));
        assert!(b.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(default_budgets(&[score(0.0, 7, 0.0)], 32), vec![7]);
    }

    #[test]
    fn table_round_trips() {
        let s = vec![score(1.0 / 3.0, 10, 0.1), score(0.0, 30, 2.0)];
        let c = sweep(&s, &[10, 30], Parallelism::Sequential).unwrap();
        let rows = parse_table(&c.to_table()).unwrap();
        assert_eq!(rows, c.rows());
        assert!(parse_table("nope").is_err());
    }
}
