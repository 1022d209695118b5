use crate::error::{Error, Result};
use crate::par;
use crate::tensor::DenseMatrix;

/// Compressed sparse row matrix.
///
/// Column indices inside a row are strictly increasing; `spmm` relies on
/// that for its fixed accumulation order.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Validates raw CSR arrays.
    pub fn from_csr(
        rows: usize,
        cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != rows + 1 || row_offsets[0] != 0 {
            return Err(Error::shape(
                "SparseMatrix::from_csr",
                format!("{} row offsets starting at 0", rows + 1),
                row_offsets.len(),
            ));
        }
        let nnz = *row_offsets.last().unwrap();
        if col_indices.len() != nnz || values.len() != nnz {
            return Err(Error::shape(
                "SparseMatrix::from_csr",
                format!("{nnz} stored entries"),
                format!("{} indices, {} values", col_indices.len(), values.len()),
            ));
        }
        for w in row_offsets.windows(2) {
            if w[0] > w[1] {
                return Err(Error::Validation("row offsets are not monotone".into()));
            }
            let cols_in_row = &col_indices[w[0]..w[1]];
            if cols_in_row.windows(2).any(|c| c[0] >= c[1]) {
                return Err(Error::Validation(
                    "column indices within a row must be strictly increasing".into(),
                ));
            }
            if cols_in_row.iter().any(|&c| c >= cols) {
                return Err(Error::Validation("column index out of range".into()));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("SparseMatrix::from_csr".into()));
        }
        Ok(Self {
            rows,
            cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Builds from `(row, col, value)` triplets in any order. Duplicate
    /// coordinates are summed.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= rows || c >= cols) {
            return Err(Error::shape(
                "SparseMatrix::from_triplets",
                format!("indices within {rows}x{cols}"),
                format!("({r}, {c})"),
            ));
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_offsets = vec![0usize; rows + 1];
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            row_offsets[r + 1] += 1;
            col_indices.push(c);
            values.push(v);
            last = Some((r, c));
        }
        for i in 0..rows {
            row_offsets[i + 1] += row_offsets[i];
        }
        Self::from_csr(rows, cols, row_offsets, col_indices, values)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
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

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Stored `(col, value)` pairs of row `i`, in ascending column order.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// Value at `(i, j)`, zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_offsets[i]..self.row_offsets[i + 1];
        match self.col_indices[span.clone()].binary_search(&j) {
            Ok(pos) => self.values[span.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    }

    pub fn transpose(&self) -> SparseMatrix {
        let triplets = (0..self.rows)
            .flat_map(|i| self.row(i).map(move |(j, v)| (j, i, v)))
            .collect();
        Self::from_triplets(self.cols, self.rows, triplets)
            .expect("transpose of a valid matrix is valid")
    }

    /// Sparse × dense product. Each output entry accumulates the stored
    /// entries of its row in ascending column order.
    pub fn spmm(&self, dense: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != dense.rows() {
            return Err(Error::shape(
                "spmm",
                format!("dense with {} rows", self.cols),
                format!("{}x{}", dense.rows(), dense.cols()),
            ));
        }
        let k = dense.cols();
        let mut out = DenseMatrix::zeros(self.rows, k);
        par::for_each_row_mut(out.values_mut(), k, |i, out_row| {
            for (j, a) in self.row(i) {
                for (o, &b) in out_row.iter_mut().zip(dense.row(j)) {
                    *o += a * b;
                }
            }
        });
        Ok(out)
    }

    /// Largest `|S[i][j] - S[j][i]|` over all positions.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                let mirror = if j < self.rows { self.get(j, i) } else { 0.0 };
                worst = worst.max((v - mirror).abs());
            }
        }
        worst
    }
}
