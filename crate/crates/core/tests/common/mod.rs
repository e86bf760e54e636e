use std::collections::HashMap;

use timbre_shape::simmatch::BinaryCsm;

/// Top-down evaluation of the constrained Smith-Waterman recurrence with
/// memoisation, written straight from the recurrence.
pub struct MemoSw<'a> {
    bits: &'a BinaryCsm,
    memo: HashMap<(i64, i64), f64>,
}

impl<'a> MemoSw<'a> {
    pub fn new(bits: &'a BinaryCsm) -> Self {
        Self { bits, memo: HashMap::new() }
    }

    fn b(&self, i: i64, j: i64) -> bool {
        i >= 0
            && j >= 0
            && (i as usize) < self.bits.rows()
            && (j as usize) < self.bits.cols()
            && self.bits.get(i as usize, j as usize)
    }

    fn delta(a: bool, b: bool) -> f64 {
        if b {
            0.0
        } else if a {
            -0.5
        } else {
            -0.7
        }
    }

    pub fn d(&mut self, i: i64, j: i64) -> f64 {
        if i <= 0 || j <= 0 {
            return 0.0;
        }
        if let Some(&v) = self.memo.get(&(i, j)) {
            return v;
        }
        let cur = self.b(i - 1, j - 1);
        let s = if cur { 1.0 } else { -1.0 };
        let v = [
            self.d(i - 1, j - 1) + s + Self::delta(self.b(i - 2, j - 2), cur),
            self.d(i - 2, j - 1) + s + Self::delta(self.b(i - 3, j - 2), cur),
            self.d(i - 1, j - 2) + s + Self::delta(self.b(i - 2, j - 3), cur),
            0.0,
        ]
        .into_iter()
        .fold(f64::MIN, f64::max);
        self.memo.insert((i, j), v);
        v
    }

    /// The full `(N+1) x (M+1)` table, row-major.
    pub fn table(&mut self) -> Vec<f64> {
        let (n, m) = (self.bits.rows() as i64, self.bits.cols() as i64);
        let mut out = Vec::with_capacity(((n + 1) * (m + 1)) as usize);
        for i in 0..=n {
            for j in 0..=m {
                out.push(self.d(i, j));
            }
        }
        out
    }
}
