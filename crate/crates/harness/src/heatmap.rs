//! State-visitation grids and their grayscale rendering.
//!
//! Grids are stored row-major with row 0 at the top edge of the map
//! (largest y) and column 0 at the left edge (smallest x), the same
//! orientation as the rendered image.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use ovdx_core::env::Bounds;

#[derive(Debug, Clone, PartialEq)]
pub struct VisitGrid {
    width: usize,
    height: usize,
    counts: Vec<u64>,
}

impl VisitGrid {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            counts: vec![0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.counts[row * self.width + col]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Counts one visit to `position`; positions outside `bounds` land in the nearest edge cell.
    pub fn record(&mut self, position: &[f64], bounds: &Bounds) {
        let cell = |v: f64, lo: f64, hi: f64, n: usize| -> usize {
            let t = ((v - lo) / (hi - lo) * n as f64).floor();
            if t.is_nan() {
                0
            } else {
                (t.max(0.0) as usize).min(n - 1)
            }
        };
        let col = cell(position[0], bounds.min[0], bounds.max[0], self.width);
        let row = self.height - 1 - cell(position[1], bounds.min[1], bounds.max[1], self.height);
        self.counts[row * self.width + col] += 1;
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.counts.chunks(self.width) {
            let line: Vec<String> = row.iter().map(u64::to_string).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut counts = Vec::new();
        let mut width = None;
        let mut height = 0;
        for (i, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
            let row: Vec<u64> = line
                .split(',')
                .map(|v| v.trim().parse())
                .collect::<Result<_, _>>()
                .with_context(|| format!("grid row {i}"))?;
            if *width.get_or_insert(row.len()) != row.len() {
                bail!(
                    "grid row {i} has {} cells, expected {}",
                    row.len(),
                    width.unwrap_or(0)
                );
            }
            counts.extend(row);
            height += 1;
        }
        Ok(Self {
            width: width.unwrap_or(0),
            height,
            counts,
        })
    }

    /// Plain (ASCII) PGM with counts scaled linearly so the most visited cell
    /// is white. An empty grid renders black.
    pub fn to_pgm(&self) -> String {
        let max = self.counts.iter().copied().max().unwrap_or(0);
        let mut out = String::new();
        out.push_str("P2\n");
        out.push_str("# state visitation counts scaled to 0..255\n");
        out.push_str(
            "# origin top-left: row 0 is the top edge (max y), column 0 the left edge (min x)\n",
        );
        let _ = writeln!(out, "{} {}\n255", self.width, self.height);
        for row in self.counts.chunks(self.width.max(1)) {
            let line: Vec<String> = row
                .iter()
                .map(|&c| {
                    if max == 0 {
                        0
                    } else {
                        (c as f64 / max as f64 * 255.0).round() as u64
                    }
                    .to_string()
                })
                .collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Writes `{stem}.pgm` and `{stem}.csv` next to each other.
pub fn export_heatmap(grid: &VisitGrid, dir: &Path, stem: &str) -> Result<()> {
    let pgm = dir.join(format!("{stem}.pgm"));
    let csv = dir.join(format!("{stem}.csv"));
    std::fs::write(&pgm, grid.to_pgm()).with_context(|| format!("writing {}", pgm.display()))?;
    std::fs::write(&csv, grid.to_csv()).with_context(|| format!("writing {}", csv.display()))?;
    Ok(())
}
