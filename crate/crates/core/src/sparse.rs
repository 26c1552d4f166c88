//! Compressed sparse row rate matrices.

use alloc::vec;
use alloc::vec::Vec;

/// Off-diagonal rate matrix in CSR form together with per-row exit rates.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    exit: Vec<f64>,
}

impl Csr {
    /// Builds from per-row entry lists; the exit rate of a row is the sum
    /// of its entries.
    pub fn from_rows<'a, I>(n: usize, rows: I) -> Csr
    where
        I: IntoIterator<Item = &'a [(usize, f64)]>,
    {
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut exit = Vec::with_capacity(n);
        row_ptr.push(0);
        for row in rows {
            let mut e = 0.0;
            for &(j, r) in row {
                cols.push(j as u32);
                vals.push(r);
                e += r;
            }
            exit.push(e);
            row_ptr.push(cols.len());
        }
        debug_assert_eq!(exit.len(), n);
        Csr {
            row_ptr,
            cols,
            vals,
            exit,
        }
    }

    pub fn n(&self) -> usize {
        self.exit.len()
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn exit(&self) -> &[f64] {
        &self.exit
    }

    pub fn max_exit(&self) -> f64 {
        self.exit.iter().fold(0.0, |m, &e| if e > m { e } else { m })
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .zip(&self.vals[r])
            .map(|(&j, &v)| (j as usize, v))
    }

    /// `y = P x` for the uniformized matrix `P = I + Q/q`.
    pub fn uniformized_mul(&self, q: f64, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            y[i] = x[i] + (acc - self.exit[i] * x[i]) / q;
        }
    }

    /// `y = x P` for the uniformized matrix `P = I + Q/q`.
    pub fn uniformized_mul_left(&self, q: f64, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n() {
            y[i] = x[i] * (1.0 - self.exit[i] / q);
        }
        for i in 0..self.n() {
            let xi = x[i] / q;
            if xi == 0.0 {
                continue;
            }
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                y[self.cols[k] as usize] += xi * self.vals[k];
            }
        }
    }

    /// Row indices with an entry in each column.
    pub fn predecessors(&self) -> Vec<Vec<u32>> {
        let mut pred = vec![Vec::new(); self.n()];
        for i in 0..self.n() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                pred[self.cols[k] as usize].push(i as u32);
            }
        }
        pred
    }
}
