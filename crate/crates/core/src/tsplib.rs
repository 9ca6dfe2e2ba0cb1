//! Reader and writer for TSPLIB instances with explicit edge weights.
//!
//! Supported are `TSP`, `ATSP` and `SOP` instances whose weights are given
//! in an `EDGE_WEIGHT_SECTION` as `FULL_MATRIX`, `UPPER_ROW`,
//! `LOWER_DIAG_ROW` or `UPPER_DIAG_ROW`. In `SOP` files an entry of `-1` at
//! row `i`, column `j` means task `j` must come before task `i`; the first
//! node is the fixed start and the last node the fixed end.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::costmodel::{CostMatrix, CostUnit};
use crate::error::{Error, Result};
use crate::ordering::{Conditional, Objective, OrderingProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InstanceKind {
    Tsp,
    Atsp,
    Sop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeWeightFormat {
    FullMatrix,
    UpperRow,
    LowerDiagRow,
    UpperDiagRow,
}

impl EdgeWeightFormat {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "FULL_MATRIX" => EdgeWeightFormat::FullMatrix,
            "UPPER_ROW" => EdgeWeightFormat::UpperRow,
            "LOWER_DIAG_ROW" => EdgeWeightFormat::LowerDiagRow,
            "UPPER_DIAG_ROW" => EdgeWeightFormat::UpperDiagRow,
            _ => return None,
        })
    }

    pub fn keyword(self) -> &'static str {
        match self {
            EdgeWeightFormat::FullMatrix => "FULL_MATRIX",
            EdgeWeightFormat::UpperRow => "UPPER_ROW",
            EdgeWeightFormat::LowerDiagRow => "LOWER_DIAG_ROW",
            EdgeWeightFormat::UpperDiagRow => "UPPER_DIAG_ROW",
        }
    }

    /// `(row, col)` cells in file order for an `n`-node instance.
    fn cells(self, n: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..n {
            let cols = match self {
                EdgeWeightFormat::FullMatrix => 0..n,
                EdgeWeightFormat::UpperRow => (i + 1)..n,
                EdgeWeightFormat::LowerDiagRow => 0..(i + 1),
                EdgeWeightFormat::UpperDiagRow => i..n,
            };
            out.extend(cols.map(|j| (i, j)));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsplibInstance {
    pub name: String,
    pub kind: InstanceKind,
    pub dimension: usize,
    pub format: EdgeWeightFormat,
    /// Full `n x n` weights as given, `-1` precedence markers included.
    pub weights: Vec<Vec<f64>>,
    /// `(before, after)` pairs from `-1` entries.
    pub precedence: Vec<(usize, usize)>,
}

struct Token {
    line: usize,
    value: f64,
}

/// Parses TSPLIB text.
pub fn parse(text: &str) -> Result<TsplibInstance> {
    let mut name = String::new();
    let mut kind = None;
    let mut dimension = None;
    let mut format = None;
    let mut tokens: Option<(usize, Vec<Token>)> = None;

    let lines: Vec<&str> = text.lines().collect();
    let mut idx = 0;
    while idx < lines.len() {
        let line_no = idx + 1;
        let line = lines[idx].trim();
        idx += 1;
        if line.is_empty() {
            continue;
        }
        let (key, value) = match line.split_once(':') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => (line, ""),
        };
        match key {
            "NAME" => name = value.to_string(),
            "TYPE" => {
                kind = Some(match value {
                    "TSP" => InstanceKind::Tsp,
                    "ATSP" => InstanceKind::Atsp,
                    "SOP" => InstanceKind::Sop,
                    other => {
                        return Err(Error::parse(line_no, format!("unsupported TYPE {other:?}")))
                    }
                })
            }
            "DIMENSION" => {
                let n = value
                    .parse::<usize>()
                    .map_err(|_| Error::parse(line_no, format!("bad DIMENSION {value:?}")))?;
                dimension = Some(n);
            }
            "EDGE_WEIGHT_TYPE" => {
                if value != "EXPLICIT" {
                    return Err(Error::parse(
                        line_no,
                        format!("EDGE_WEIGHT_TYPE {value:?} is not supported, only EXPLICIT"),
                    ));
                }
            }
            "EDGE_WEIGHT_FORMAT" => {
                format = Some(EdgeWeightFormat::parse(value).ok_or_else(|| {
                    Error::parse(line_no, format!("unknown EDGE_WEIGHT_FORMAT {value:?}"))
                })?)
            }
            "EDGE_WEIGHT_SECTION" => {
                let mut section = Vec::new();
                while idx < lines.len() {
                    let l = lines[idx].trim();
                    if l.starts_with(|c: char| c.is_ascii_alphabetic()) {
                        break;
                    }
                    for word in l.split_whitespace() {
                        let value = word.parse::<f64>().map_err(|_| {
                            Error::parse(idx + 1, format!("bad weight {word:?}"))
                        })?;
                        section.push(Token {
                            line: idx + 1,
                            value,
                        });
                    }
                    idx += 1;
                }
                tokens = Some((line_no, section));
            }
            "DISPLAY_DATA_SECTION" | "NODE_COORD_SECTION" => {
                // skip the numeric block that follows
                while idx < lines.len()
                    && !lines[idx].trim().starts_with(|c: char| c.is_ascii_alphabetic())
                {
                    idx += 1;
                }
            }
            "EOF" => break,
            // COMMENT, DISPLAY_DATA_TYPE and other informational keys
            _ => {}
        }
    }

    let kind = kind.ok_or_else(|| Error::parse(lines.len(), "missing TYPE"))?;
    let n = dimension.ok_or_else(|| Error::parse(lines.len(), "missing DIMENSION"))?;
    let format = format.ok_or_else(|| Error::parse(lines.len(), "missing EDGE_WEIGHT_FORMAT"))?;
    let (section_line, mut section) =
        tokens.ok_or_else(|| Error::parse(lines.len(), "missing EDGE_WEIGHT_SECTION"))?;
    if n == 0 {
        return Err(Error::parse(section_line, "DIMENSION must be positive"));
    }
    let cells = format.cells(n);
    if kind == InstanceKind::Sop
        && section.len() == cells.len() + 1
        && section.first().map(|t| t.value) == Some(n as f64)
    {
        // SOP sections repeat the dimension before the matrix
        section.remove(0);
    }
    if section.len() < cells.len() {
        let last = section.last().map_or(section_line, |t| t.line);
        return Err(Error::parse(
            last,
            format!(
                "EDGE_WEIGHT_SECTION is truncated: {} weights for dimension {n}, expected {}",
                section.len(),
                cells.len()
            ),
        ));
    }
    if section.len() > cells.len() {
        return Err(Error::parse(
            section[cells.len()].line,
            format!(
                "EDGE_WEIGHT_SECTION has {} weights, more than the {} expected for dimension {n}",
                section.len(),
                cells.len()
            ),
        ));
    }

    let symmetric = format != EdgeWeightFormat::FullMatrix;
    let mut weights = vec![vec![0.0; n]; n];
    let mut precedence = Vec::new();
    for (&(i, j), tok) in cells.iter().zip(&section) {
        let w = tok.value;
        if !w.is_finite() {
            return Err(Error::parse(tok.line, format!("weight {w} is not finite")));
        }
        if w < 0.0 {
            if kind != InstanceKind::Sop || w != -1.0 || i == j {
                return Err(Error::parse(
                    tok.line,
                    format!("negative weight {w} at ({i}, {j})"),
                ));
            }
            if symmetric {
                return Err(Error::parse(
                    tok.line,
                    "precedence markers need a FULL_MATRIX section",
                ));
            }
            precedence.push((j, i));
        }
        weights[i][j] = w;
        if symmetric {
            weights[j][i] = w;
        }
    }
    Ok(TsplibInstance {
        name,
        kind,
        dimension: n,
        format,
        weights,
        precedence,
    })
}

impl TsplibInstance {
    /// Precedence pairs that involve neither the start nor the end node of
    /// an `SOP` instance; all pairs otherwise.
    pub fn core_precedence_count(&self) -> usize {
        match self.kind {
            InstanceKind::Sop => {
                let last = self.dimension - 1;
                self.precedence
                    .iter()
                    .filter(|&&(a, b)| a != 0 && b != 0 && a != last && b != last)
                    .count()
            }
            _ => self.precedence.len(),
        }
    }

    /// Objective the published optima refer to: a closed tour for `TSP`
    /// and `ATSP`, a start-to-end path for `SOP`.
    pub fn objective(&self) -> Objective {
        match self.kind {
            InstanceKind::Sop => Objective::OpenPath,
            _ => Objective::ClosedTour,
        }
    }

    /// Ordering problem for this instance. Diagonal weights and precedence
    /// markers become zero costs. `SOP` instances also pin the first node
    /// to the start and the last node to the end. Overlay pairs that are
    /// not precedence pairs are accepted with a warning.
    pub fn to_problem(&self, overlay: &[Conditional]) -> Result<OrderingProblem> {
        let n = self.dimension;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j || self.weights[i][j] < 0.0 { 0.0 } else { self.weights[i][j] })
                    .collect()
            })
            .collect();
        let mut precedence = self.precedence.clone();
        if self.kind == InstanceKind::Sop && n > 1 {
            for t in 1..n {
                precedence.push((0, t));
            }
            for t in 1..(n - 1) {
                precedence.push((t, n - 1));
            }
        }
        for c in overlay {
            if c.from >= n || c.to >= n {
                return Err(Error::Constraint(format!(
                    "overlay pair ({}, {}) is outside the {n} nodes of {}",
                    c.from, c.to, self.name
                )));
            }
        }
        OrderingProblem::new(
            CostMatrix::new(rows, CostUnit::Time)?,
            precedence,
            overlay.to_vec(),
            self.objective(),
        )
    }

    /// TSPLIB text in `format`. Symmetric formats need a symmetric matrix.
    pub fn write(&self, format: EdgeWeightFormat) -> Result<String> {
        let n = self.dimension;
        if format != EdgeWeightFormat::FullMatrix {
            let symmetric = (0..n).all(|i| (0..i).all(|j| self.weights[i][j] == self.weights[j][i]));
            if !symmetric {
                return Err(Error::invalid(
                    "TSPLIB output",
                    format!("{} needs a symmetric matrix", format.keyword()),
                ));
            }
        }
        let kind = match self.kind {
            InstanceKind::Tsp => "TSP",
            InstanceKind::Atsp => "ATSP",
            InstanceKind::Sop => "SOP",
        };
        let mut out = String::new();
        let w = &mut out;
        let _ = writeln!(w, "NAME: {}", self.name);
        let _ = writeln!(w, "TYPE: {kind}");
        let _ = writeln!(w, "DIMENSION: {n}");
        let _ = writeln!(w, "EDGE_WEIGHT_TYPE: EXPLICIT");
        let _ = writeln!(w, "EDGE_WEIGHT_FORMAT: {}", format.keyword());
        let _ = writeln!(w, "EDGE_WEIGHT_SECTION");
        if self.kind == InstanceKind::Sop {
            let _ = writeln!(w, "{n}");
        }
        let mut row = None;
        for (i, j) in format.cells(n) {
            if row.is_some() && row != Some(i) {
                w.push('\n');
            } else if row.is_some() {
                w.push(' ');
            }
            row = Some(i);
            let _ = write!(w, "{}", self.weights[i][j]);
        }
        out.push_str("\nEOF\n");
        Ok(out)
    }
}

/// Published optimum for the bundled benchmark instances, by name.
pub fn known_optimum(name: &str) -> Option<f64> {
    let name = name.trim().to_ascii_lowercase();
    let name = name
        .strip_suffix(".tsp")
        .or_else(|| name.strip_suffix(".sop"))
        .unwrap_or(&name);
    Some(match name {
        "five" => 19.0,
        "p01" => 291.0,
        "gr17" => 2085.0,
        "esc07" => 2125.0,
        "esc11" => 2075.0,
        "br17.12" => 55.0,
        _ => return None,
    })
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then(|| (i + 1, l.split_whitespace().collect()))
    })
}

fn index(line: usize, s: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::parse(line, format!("bad task index {s:?}")))
}

/// Reads `i j` lines (task `i` before task `j`). `#` starts a comment.
pub fn parse_precedence(text: &str) -> Result<Vec<(usize, usize)>> {
    data_lines(text)
        .map(|(line, f)| {
            if f.len() != 2 {
                return Err(Error::parse(line, "expected `i j`"));
            }
            Ok((index(line, f[0])?, index(line, f[1])?))
        })
        .collect()
}

/// Reads `i j p` lines (task `j` follows `i` with probability `p`).
pub fn parse_overlay(text: &str) -> Result<Vec<Conditional>> {
    data_lines(text)
        .map(|(line, f)| {
            if f.len() != 3 {
                return Err(Error::parse(line, "expected `i j p`"));
            }
            let p: f64 = f[2]
                .parse()
                .map_err(|_| Error::parse(line, format!("bad probability {:?}", f[2])))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::parse(line, format!("probability {p} outside [0, 1]")));
            }
            Ok(Conditional::new(index(line, f[0])?, index(line, f[1])?, p))
        })
        .collect()
}
