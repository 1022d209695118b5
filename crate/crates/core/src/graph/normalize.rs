use crate::graph::Graph;
use crate::tensor::SparseMatrix;

/// Symmetric normalization with self-loops: `D^{-1/2} (A + I) D^{-1/2}`,
/// where `D` holds the row sums of `A + I`.
///
/// Every node gets degree at least 1 from its self-loop, so isolated nodes
/// map to a diagonal entry of exactly 1.
pub fn normalize_adjacency(g: &Graph) -> SparseMatrix {
    let a = g.adjacency();
    let n = a.rows();
    let deg: Vec<f64> = (0..n)
        .map(|i| 1.0 + a.row(i).map(|(_, w)| w).sum::<f64>())
        .collect();
    // w / sqrt(d_i d_j) rounds once per entry and is exactly symmetric.
    let entry = |i: usize, j: usize, w: f64| w / (deg[i] * deg[j]).sqrt();

    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut col_indices = Vec::with_capacity(a.nnz() + n);
    let mut values = Vec::with_capacity(a.nnz() + n);
    row_offsets.push(0);
    for (i, &deg_i) in deg.iter().enumerate() {
        let mut diagonal_done = false;
        for (j, w) in a.row(i) {
            if !diagonal_done && j > i {
                col_indices.push(i);
                values.push(1.0 / deg_i);
                diagonal_done = true;
            }
            col_indices.push(j);
            values.push(entry(i, j, w));
        }
        if !diagonal_done {
            col_indices.push(i);
            values.push(1.0 / deg_i);
        }
        row_offsets.push(col_indices.len());
    }
    SparseMatrix::from_csr(n, n, row_offsets, col_indices, values)
        .expect("normalized adjacency keeps CSR invariants")
}
