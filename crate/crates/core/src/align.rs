//! Smith-Waterman local alignment over a binary cross-similarity matrix,
//! restricted to near-diagonal moves.
//!
//! The score table has one extra leading row and column. Cell `(i, j)`
//! scores the bit at `(i - 1, j - 1)` and is reached from `(i-1, j-1)`,
//! `(i-2, j-1)` or `(i-1, j-2)`. Each step adds +1 for a set bit and -1 for
//! a clear one, plus a gap term that depends on the bit one step back along
//! the move:
//!
//! | current bit | previous bit | gap term |
//! |-------------|--------------|----------|
//! | 1           | any          | 0        |
//! | 0           | 1            | -0.5     |
//! | 0           | 0            | -0.7     |
//!
//! Scores never drop below zero. Table cells and bits outside the matrix read
//! as 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simmatch::BinaryCsm;

pub const MATCH_SCORE: f64 = 1.0;
pub const MISMATCH_SCORE: f64 = -1.0;
pub const GAP_OPEN: f64 = -0.5;
pub const GAP_EXTEND: f64 = -0.7;

/// Gap term for moving onto `current` when the bit one step back along the
/// move is `previous`.
pub fn gap_penalty(previous: bool, current: bool) -> f64 {
    match (previous, current) {
        (_, true) => 0.0,
        (true, false) => GAP_OPEN,
        (false, false) => GAP_EXTEND,
    }
}

/// The three moves as (row step, column step).
pub const MOVES: [(usize, usize); 3] = [(1, 1), (2, 1), (1, 2)];

/// Full `(N+1) x (M+1)` score table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl ScoreTable {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn get_or_zero(&self, i: isize, j: isize) -> f64 {
        if i < 0 || j < 0 {
            0.0
        } else {
            self.get(i as usize, j as usize)
        }
    }

    /// Candidate value for reaching `(i, j)` via move `m`, `i, j >= 1`.
    fn candidate(&self, bits: &BinaryCsm, i: usize, j: usize, (di, dj): (usize, usize)) -> f64 {
        let (i, j) = (i as isize, j as isize);
        let (di, dj) = (di as isize, dj as isize);
        let current = bits.get_or_zero(i - 1, j - 1);
        let previous = bits.get_or_zero(i - 1 - di, j - 1 - dj);
        let step = if current { MATCH_SCORE } else { MISMATCH_SCORE };
        self.get_or_zero(i - di, j - dj) + step + gap_penalty(previous, current)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub score: f64,
    /// Table cell holding the maximum; `(0, 0)` when the score is 0.
    pub best_cell: (usize, usize),
    /// Table cells from the start of the best local path to `best_cell`.
    pub path: Option<Vec<(usize, usize)>>,
}

impl AlignmentResult {
    /// Score divided by `sqrt(N * M)`.
    pub fn normalized_score(&self, rows: usize, cols: usize) -> f64 {
        self.score / ((rows * cols) as f64).sqrt()
    }
}

/// Fill the constrained Smith-Waterman table.
pub fn score_table(bits: &BinaryCsm) -> Result<ScoreTable> {
    let (n, m) = (bits.rows(), bits.cols());
    if n == 0 || m == 0 {
        return Err(Error::Empty("binary cross-similarity matrix"));
    }
    let mut table = ScoreTable {
        rows: n + 1,
        cols: m + 1,
        values: vec![0.0; (n + 1) * (m + 1)],
    };
    for i in 1..=n {
        for j in 1..=m {
            let best = MOVES
                .iter()
                .map(|&mv| table.candidate(bits, i, j, mv))
                .fold(0.0, f64::max);
            table.values[i * (m + 1) + j] = best;
        }
    }
    Ok(table)
}

/// Score a binary cross-similarity matrix; the traceback path is filled in
/// only when `traceback` is set.
pub fn smith_waterman_constrained(bits: &BinaryCsm, traceback: bool) -> Result<AlignmentResult> {
    let table = score_table(bits)?;
    Ok(result_from_table(&table, bits, traceback))
}

pub fn result_from_table(table: &ScoreTable, bits: &BinaryCsm, traceback: bool) -> AlignmentResult {
    let mut best = (0.0, (0, 0));
    for i in 0..table.rows {
        for j in 0..table.cols {
            if table.get(i, j) > best.0 {
                best = (table.get(i, j), (i, j));
            }
        }
    }
    let path = traceback.then(|| trace(table, bits, best.1));
    AlignmentResult {
        score: best.0,
        best_cell: best.1,
        path,
    }
}

fn trace(table: &ScoreTable, bits: &BinaryCsm, end: (usize, usize)) -> Vec<(usize, usize)> {
    let mut path = Vec::new();
    if table.get(end.0, end.1) <= 0.0 {
        return path;
    }
    let (mut i, mut j) = end;
    loop {
        path.push((i, j));
        let here = table.get(i, j);
        let prev = MOVES.iter().find(|&&(di, dj)| {
            i > di && j > dj && table.get(i - di, j - dj) > 0.0 && table.candidate(bits, i, j, (di, dj)) == here
        });
        match prev {
            Some(&(di, dj)) => {
                i -= di;
                j -= dj;
            }
            None => break,
        }
    }
    path.reverse();
    path
}
