//! Compressed sparse row matrices and the handful of kernels the solver needs.
//!
//! Only a row-major layout is stored. Products with the transpose scatter over
//! rows instead of keeping a CSC mirror. Every kernel accumulates in a fixed
//! order (rows ascending, entries left to right) so single-threaded results
//! are reproducible bit for bit.

use thiserror::Error;

use crate::data::Dataset;

#[derive(Debug, Error, PartialEq)]
pub enum SparseError {
    #[error("dimension mismatch: expected length {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("row index {index} out of range for {rows} rows")]
    RowOutOfRange { index: usize, rows: usize },
    #[error("invalid CSR structure: {0}")]
    Structure(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from raw CSR arrays, validating the structure.
    pub fn from_csr(
        rows: usize,
        cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, SparseError> {
        let bad = |msg: &str| Err(SparseError::Structure(msg.to_owned()));
        if row_ptr.len() != rows + 1 || row_ptr[0] != 0 {
            return bad("row_ptr must have rows+1 entries starting at 0");
        }
        if col_idx.len() != values.len() || row_ptr[rows] != values.len() {
            return bad("row_ptr[rows] must equal nnz");
        }
        for r in 0..rows {
            if row_ptr[r] > row_ptr[r + 1] {
                return bad("row_ptr must be non-decreasing");
            }
            let cols_r = &col_idx[row_ptr[r]..row_ptr[r + 1]];
            if cols_r.iter().any(|&c| c >= cols) {
                return bad("column index out of range");
            }
            if cols_r.windows(2).any(|w| w[0] >= w[1]) {
                return bad("column indices must be strictly increasing within a row");
            }
        }
        Ok(Self { rows, cols, row_ptr, col_idx, values })
    }

    /// Design matrix with one row per sample and `data.n_features` columns.
    pub fn from_dataset(data: &Dataset) -> Self {
        let mut row_ptr = Vec::with_capacity(data.len() + 1);
        let mut col_idx = Vec::with_capacity(data.nnz());
        let mut values = Vec::with_capacity(data.nnz());
        row_ptr.push(0);
        for sample in &data.samples {
            for &(j, v) in sample {
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self { rows: data.len(), cols: data.n_features, row_ptr, col_idx, values }
    }

    /// Row-major dense input; exact zeros are dropped.
    pub fn from_dense(rows: usize, cols: usize, dense: &[f64]) -> Self {
        assert_eq!(dense.len(), rows * cols);
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let v = dense[r * cols + c];
                if v != 0.0 {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self { rows, cols, row_ptr, col_idx, values }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(columns, values)` of row `r`.
    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    /// Same matrix with `cols` widened (extra columns are empty).
    pub fn with_cols(mut self, cols: usize) -> Result<Self, SparseError> {
        if cols < self.cols {
            return Err(SparseError::Dimension { expected: self.cols, got: cols });
        }
        self.cols = cols;
        Ok(self)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.rows * self.cols];
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out[r * self.cols + c] = v;
            }
        }
        out
    }

    #[inline]
    fn row_dot(&self, r: usize, x: &[f64]) -> f64 {
        let (cols, vals) = self.row(r);
        let mut acc = 0.0;
        for (&c, &v) in cols.iter().zip(vals) {
            acc += v * x[c];
        }
        acc
    }

    #[inline]
    fn row_axpy(&self, r: usize, alpha: f64, out: &mut [f64]) {
        let (cols, vals) = self.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            out[c] += alpha * v;
        }
    }

    /// `A x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, SparseError> {
        check_len(self.cols, x.len())?;
        Ok((0..self.rows).map(|r| self.row_dot(r, x)).collect())
    }

    /// `A^T y`, scattered row by row.
    pub fn matvec_t(&self, y: &[f64]) -> Result<Vec<f64>, SparseError> {
        check_len(self.rows, y.len())?;
        let mut out = vec![0.0; self.cols];
        for (r, &yr) in y.iter().enumerate() {
            self.row_axpy(r, yr, &mut out);
        }
        Ok(out)
    }

    /// `A(I,:)^T (A(I,:) h)` touching only the rows listed in `active`.
    ///
    /// Rows are visited in the order given; with `active = 0..rows` the
    /// result is bitwise equal to `matvec_t(matvec(h))`.
    pub fn restricted_normal_apply(&self, active: &[usize], h: &[f64]) -> Result<Vec<f64>, SparseError> {
        check_len(self.cols, h.len())?;
        if let Some(&bad) = active.iter().find(|&&r| r >= self.rows) {
            return Err(SparseError::RowOutOfRange { index: bad, rows: self.rows });
        }
        let mut out = vec![0.0; self.cols];
        for &r in active {
            let t = self.row_dot(r, h);
            self.row_axpy(r, t, &mut out);
        }
        Ok(out)
    }

    /// Multiplies row `i` by `c[i]`; the sparsity pattern is kept as is.
    pub fn scale_rows(&self, c: &[f64]) -> Result<SparseMatrix, SparseError> {
        check_len(self.rows, c.len())?;
        let mut out = self.clone();
        for (r, &cr) in c.iter().enumerate() {
            for v in &mut out.values[self.row_ptr[r]..self.row_ptr[r + 1]] {
                *v *= cr;
            }
        }
        Ok(out)
    }
}

fn check_len(expected: usize, got: usize) -> Result<(), SparseError> {
    if expected == got {
        Ok(())
    } else {
        Err(SparseError::Dimension { expected, got })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::DenseMatrix;
    use crate::data::XorShift64Star;
    use proptest::prelude::*;

    fn random_sparse(rows: usize, cols: usize, density: f64, seed: u64) -> SparseMatrix {
        let mut rng = XorShift64Star::new(seed);
        let dense: Vec<f64> = (0..rows * cols)
            .map(|_| if rng.next_f64() < density { rng.next_gaussian() } else { 0.0 })
            .collect();
        SparseMatrix::from_dense(rows, cols, &dense)
    }

    fn rel_close(a: &[f64], b: &[f64], tol: f64) -> bool {
        let scale = b.iter().map(|x| x.abs()).fold(1.0, f64::max);
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * scale)
    }

    #[test]
    fn matvec_small_cases() {
        let a = SparseMatrix::from_dense(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        assert_eq!(a.matvec(&[3.0, 4.0]).unwrap(), vec![3.0, 8.0]);
        let z = SparseMatrix::from_dense(2, 2, &[0.0; 4]);
        assert_eq!(z.matvec(&[5.0, -1.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(a.matvec(&[1.0]), Err(SparseError::Dimension { expected: 2, got: 1 }));
    }

    #[test]
    fn matvec_t_small_cases() {
        let id = SparseMatrix::from_dense(3, 3, &[1., 0., 0., 0., 1., 0., 0., 0., 1.]);
        assert_eq!(id.matvec_t(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        let a = SparseMatrix::from_dense(1, 2, &[1.0, 2.0]);
        assert_eq!(a.matvec_t(&[3.0]).unwrap(), vec![3.0, 6.0]);
    }

    #[test]
    fn matvec_matches_dense_oracle() {
        let a = random_sparse(5, 7, 0.5, 11);
        let d = DenseMatrix::from_sparse(&a);
        let x: Vec<f64> = (0..7).map(|i| (i as f64 * 0.37).sin()).collect();
        assert!(rel_close(&a.matvec(&x).unwrap(), &d.matvec(&x), 1e-12));

        let a = random_sparse(6, 4, 0.5, 12);
        let d = DenseMatrix::from_sparse(&a);
        let y: Vec<f64> = (0..6).map(|i| (i as f64 * 0.91).cos()).collect();
        assert!(rel_close(&a.matvec_t(&y).unwrap(), &d.matvec_t(&y), 1e-12));
    }

    #[test]
    fn restricted_normal_cases() {
        let a = random_sparse(8, 5, 0.6, 3);
        let h = [0.3, -1.0, 2.0, 0.5, -0.25];
        assert_eq!(a.restricted_normal_apply(&[], &h).unwrap(), vec![0.0; 5]);
        let all: Vec<usize> = (0..8).collect();
        let full = a.matvec_t(&a.matvec(&h).unwrap()).unwrap();
        assert_eq!(a.restricted_normal_apply(&all, &h).unwrap(), full);

        let active = [1, 4, 6, 7];
        let sub = DenseMatrix::from_sparse(&a).select_rows(&active);
        let want = sub.matvec_t(&sub.matvec(&h));
        assert!(rel_close(&a.restricted_normal_apply(&active, &h).unwrap(), &want, 1e-12));
        assert_eq!(
            a.restricted_normal_apply(&[8], &h),
            Err(SparseError::RowOutOfRange { index: 8, rows: 8 })
        );
    }

    #[test]
    fn scale_rows_cases() {
        let a = SparseMatrix::from_dense(1, 2, &[1.0, 2.0]);
        assert_eq!(a.scale_rows(&[1.0]).unwrap(), a);
        assert_eq!(a.scale_rows(&[-1.0]).unwrap().to_dense(), vec![-1.0, -2.0]);

        let a = random_sparse(4, 3, 0.7, 5);
        let c = [2.0, -1.0, 0.5, 3.0];
        let scaled = a.scale_rows(&c).unwrap().to_dense();
        let dense = a.to_dense();
        for r in 0..4 {
            for col in 0..3 {
                assert_eq!(scaled[r * 3 + col], dense[r * 3 + col] * c[r]);
            }
        }
        assert!(a.scale_rows(&[1.0]).is_err());
    }

    #[test]
    fn from_csr_validates() {
        assert!(SparseMatrix::from_csr(1, 2, vec![0, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::from_csr(1, 2, vec![0, 1], vec![2], vec![1.0]).is_err());
        assert!(SparseMatrix::from_csr(2, 2, vec![0, 1], vec![0], vec![1.0]).is_err());
        let ok = SparseMatrix::from_csr(2, 2, vec![0, 1, 1], vec![1], vec![4.0]).unwrap();
        assert_eq!(ok.to_dense(), vec![0.0, 4.0, 0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn adjointness(rows in 1usize..12, cols in 1usize..12, seed in any::<u64>()) {
            let a = random_sparse(rows, cols, 0.4, seed);
            let mut rng = XorShift64Star::new(seed ^ 0xABCD);
            let x: Vec<f64> = (0..cols).map(|_| rng.next_gaussian()).collect();
            let y: Vec<f64> = (0..rows).map(|_| rng.next_gaussian()).collect();
            let lhs: f64 = a.matvec(&x).unwrap().iter().zip(&y).map(|(p, q)| p * q).sum();
            let rhs: f64 = x.iter().zip(&a.matvec_t(&y).unwrap()).map(|(p, q)| p * q).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs().max(rhs.abs())));
        }

        #[test]
        fn full_restriction_is_bitwise_normal_product(rows in 1usize..10, cols in 1usize..10, seed in any::<u64>()) {
            let a = random_sparse(rows, cols, 0.5, seed);
            let mut rng = XorShift64Star::new(seed.wrapping_add(1));
            let h: Vec<f64> = (0..cols).map(|_| rng.next_gaussian()).collect();
            let all: Vec<usize> = (0..rows).collect();
            prop_assert_eq!(
                a.restricted_normal_apply(&all, &h).unwrap(),
                a.matvec_t(&a.matvec(&h).unwrap()).unwrap()
            );
        }

        #[test]
        fn restricted_normal_is_linear(seed in any::<u64>(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
            let a = random_sparse(9, 6, 0.5, seed);
            let mut rng = XorShift64Star::new(seed ^ 77);
            let h1: Vec<f64> = (0..6).map(|_| rng.next_gaussian()).collect();
            let h2: Vec<f64> = (0..6).map(|_| rng.next_gaussian()).collect();
            let active: Vec<usize> = (0..9).filter(|_| rng.next_f64() < 0.5).collect();
            let combo: Vec<f64> = h1.iter().zip(&h2).map(|(p, q)| alpha * p + beta * q).collect();
            let lhs = a.restricted_normal_apply(&active, &combo).unwrap();
            let f1 = a.restricted_normal_apply(&active, &h1).unwrap();
            let f2 = a.restricted_normal_apply(&active, &h2).unwrap();
            let rhs: Vec<f64> = f1.iter().zip(&f2).map(|(p, q)| alpha * p + beta * q).collect();
            prop_assert!(rel_close(&lhs, &rhs, 1e-10));
        }
    }
}
