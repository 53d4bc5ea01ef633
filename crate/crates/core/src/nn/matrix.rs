//! Minimal row-major matrix used by the network layers.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            debug_assert_eq!(row.len(), c);
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// `self (m x k) * b (k x n)`.
    pub fn matmul(&self, b: &Matrix) -> Matrix {
        assert_eq!(self.cols, b.rows);
        let (m, k, n) = (self.rows, self.cols, b.cols);
        let mut out = Matrix::zeros(m, n);
        for i in 0..m {
            let a_row = &self.data[i * k..(i + 1) * k];
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for (p, &a_ip) in a_row.iter().enumerate() {
                if a_ip == 0.0 {
                    continue;
                }
                let b_row = &b.data[p * n..(p + 1) * n];
                for (o, &b_pj) in out_row.iter_mut().zip(b_row) {
                    *o += a_ip * b_pj;
                }
            }
        }
        out
    }

    /// `self^T (k x m) * b (m x n)`; `self` is `m x k`.
    pub fn matmul_at_b(&self, b: &Matrix) -> Matrix {
        assert_eq!(self.rows, b.rows);
        let (m, k, n) = (self.rows, self.cols, b.cols);
        let mut out = Matrix::zeros(k, n);
        for i in 0..m {
            let a_row = &self.data[i * k..(i + 1) * k];
            let b_row = &b.data[i * n..(i + 1) * n];
            for (p, &a_ip) in a_row.iter().enumerate() {
                if a_ip == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[p * n..(p + 1) * n];
                for (o, &b_ij) in out_row.iter_mut().zip(b_row) {
                    *o += a_ip * b_ij;
                }
            }
        }
        out
    }

    /// `self (m x n) * b^T (n x k)`; `b` is `k x n`.
    pub fn matmul_a_bt(&self, b: &Matrix) -> Matrix {
        assert_eq!(self.cols, b.cols);
        let (m, n, k) = (self.rows, self.cols, b.rows);
        let mut out = Matrix::zeros(m, k);
        for i in 0..m {
            let a_row = &self.data[i * n..(i + 1) * n];
            let out_row = &mut out.data[i * k..(i + 1) * k];
            for (p, o) in out_row.iter_mut().enumerate() {
                let b_row = &b.data[p * n..(p + 1) * n];
                let mut acc = 0.0;
                for (&a_ij, &b_pj) in a_row.iter().zip(b_row) {
                    acc += a_ij * b_pj;
                }
                *o = acc;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> (Matrix, Matrix) {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
        let b = Matrix::from_rows(&[vec![7.0, 8.0, 9.0], vec![10.0, 11.0, 12.0]]);
        (a, b)
    }

    #[test]
    fn matmul_agrees_with_hand_values() {
        let (a, b) = small();
        let c = a.matmul(&b);
        assert_eq!(c.row(0), &[27.0, 30.0, 33.0]);
        assert_eq!(c.row(2), &[95.0, 106.0, 117.0]);
    }

    #[test]
    fn transpose_variants_agree_with_matmul() {
        let (a, b) = small();
        let c = a.matmul(&b); // 3x3
        // a^T * c should equal (a^T)(a b)
        let atc = a.matmul_at_b(&c);
        assert_eq!(atc.rows, 2);
        assert_eq!(atc.cols, 3);
        // c * b^T: (3x3)*(3x2... b is 2x3 so b^T is 3x2) -> 3x2
        let cbt = c.matmul_a_bt(&b);
        assert_eq!(cbt.rows, 3);
        assert_eq!(cbt.cols, 2);
        // spot check one entry of each against scalar arithmetic
        // atc[0][0] = sum_i a[i][0] * c[i][0] = 1*27 + 3*57 + 5*95? compute c row1
        let c10 = a.row(1)[0] * b.row(0)[0] + a.row(1)[1] * b.row(1)[0];
        assert_eq!(c.at(1, 0), c10);
        let want = a.at(0, 0) * c.at(0, 0) + a.at(1, 0) * c.at(1, 0) + a.at(2, 0) * c.at(2, 0);
        assert_eq!(atc.at(0, 0), want);
        let want = c.at(0, 0) * b.at(0, 0) + c.at(0, 1) * b.at(0, 1) + c.at(0, 2) * b.at(0, 2);
        assert_eq!(cbt.at(0, 0), want);
    }
}
