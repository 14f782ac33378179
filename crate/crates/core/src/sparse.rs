//! Compressed-row sparse matrices over `f64` and complex `f64`.

use crate::error::{Error, Result};
use crate::linalg::C64;
use std::fmt::Write as _;
use std::ops::{Add, AddAssign, Mul, Sub};

/// Scalar types stored in [`CsrMatrix`].
pub trait Scalar:
    Copy
    + Send
    + Sync
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + AddAssign
    + std::fmt::Debug
{
    const ZERO: Self;
    fn conj(self) -> Self;
    fn to_complex(self) -> C64;
    fn abs(self) -> f64;
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    fn conj(self) -> Self {
        self
    }
    fn to_complex(self) -> C64 {
        C64::new(self, 0.0)
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
}

impl Scalar for C64 {
    const ZERO: Self = C64 { re: 0.0, im: 0.0 };
    fn conj(self) -> Self {
        C64::conj(&self)
    }
    fn to_complex(self) -> C64 {
        self
    }
    fn abs(self) -> f64 {
        self.norm()
    }
}

/// Compressed sparse row matrix. Column indices are sorted within each row
/// and no stored entry is exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

pub type SparseComplexMatrix = CsrMatrix<C64>;
pub type SparseRealMatrix = CsrMatrix<f64>;

impl<T: Scalar> CsrMatrix<T> {
    /// Builds a matrix from triplets. Duplicates are summed in their input
    /// order after a stable sort by (row, column), so the result depends only
    /// on the triplet sequence.
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut triplets: Vec<(usize, usize, T)>) -> Result<Self> {
        for &(i, j, _) in &triplets {
            if i >= n_rows || j >= n_cols {
                return Err(Error::Argument(format!("triplet ({i}, {j}) outside a {n_rows}×{n_cols} matrix")));
            }
        }
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut k = 0;
        while k < triplets.len() {
            let (i, j, mut v) = triplets[k];
            k += 1;
            while k < triplets.len() && triplets[k].0 == i && triplets[k].1 == j {
                v += triplets[k].2;
                k += 1;
            }
            if v != T::ZERO {
                row_ptr[i + 1] += 1;
                col_idx.push(j);
                values.push(v);
            }
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(CsrMatrix { n_rows, n_cols, row_ptr, col_idx, values })
    }

    pub fn identity(n: usize, one: T) -> Self {
        CsrMatrix { n_rows: n, n_cols: n, row_ptr: (0..=n).collect(), col_idx: (0..n).collect(), values: vec![one; n] }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
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

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Entries of row `i` as (column, value).
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => T::ZERO,
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, T)> {
        (0..self.n_rows).flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v))).collect()
    }

    pub fn mul_vec<U>(&self, x: &[U]) -> Vec<U>
    where
        U: Scalar + From<T>,
    {
        assert_eq!(x.len(), self.n_cols);
        (0..self.n_rows)
            .map(|i| {
                let mut s = U::ZERO;
                for (j, v) in self.row(i) {
                    s += U::from(v) * x[j];
                }
                s
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let t = self.triplets().into_iter().map(|(i, j, v)| (j, i, v)).collect();
        CsrMatrix::from_triplets(self.n_cols, self.n_rows, t).expect("indices in range")
    }

    pub fn adjoint(&self) -> Self {
        let t = self.triplets().into_iter().map(|(i, j, v)| (j, i, v.conj())).collect();
        CsrMatrix::from_triplets(self.n_cols, self.n_rows, t).expect("indices in range")
    }

    /// `a·self + b·other`
    pub fn linear_combination(&self, a: T, other: &Self, b: T) -> Result<Self> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(Error::Dimension { expected: self.n_rows, got: other.n_rows });
        }
        let mut t: Vec<(usize, usize, T)> = self.triplets().into_iter().map(|(i, j, v)| (i, j, a * v)).collect();
        t.extend(other.triplets().into_iter().map(|(i, j, v)| (i, j, b * v)));
        CsrMatrix::from_triplets(self.n_rows, self.n_cols, t)
    }

    /// Submatrix on the given rows and columns (index lists, in order).
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_map = vec![usize::MAX; self.n_cols];
        for (k, &c) in cols.iter().enumerate() {
            col_map[c] = k;
        }
        let mut t = Vec::new();
        for (ri, &r) in rows.iter().enumerate() {
            for (j, v) in self.row(r) {
                if col_map[j] != usize::MAX {
                    t.push((ri, col_map[j], v));
                }
            }
        }
        CsrMatrix::from_triplets(rows.len(), cols.len(), t).expect("indices in range")
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::ZERO; self.n_cols]; self.n_rows];
        for (i, j, v) in self.triplets() {
            d[i][j] = v;
        }
        d
    }

    pub fn to_complex(&self) -> SparseComplexMatrix {
        CsrMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self.values.iter().map(|v| v.to_complex()).collect(),
        }
    }

    /// Sparsity pattern equals that of the transpose.
    pub fn is_structurally_symmetric(&self) -> bool {
        self.n_rows == self.n_cols
            && (0..self.n_rows).all(|i| self.row(i).all(|(j, _)| self.row(j).any(|(c, _)| c == i)))
    }

    /// Exact equality with the transpose.
    pub fn is_symmetric(&self) -> bool {
        self.n_rows == self.n_cols && *self == self.transpose()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

impl SparseComplexMatrix {
    /// Coordinate dump: header `%%complex-coo <n> <nnz>`, then `i j re im` (0-based).
    pub fn to_coo_text(&self) -> String {
        let mut out = format!("%%complex-coo {} {}\n", self.n_rows, self.nnz());
        for (i, j, v) in self.triplets() {
            writeln!(out, "{i} {j} {:?} {:?}", v.re, v.im).unwrap();
        }
        out
    }

    pub fn from_coo_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse { line: 1, message: "empty input".into() })?;
        let h: Vec<&str> = header.split_whitespace().collect();
        let bad = |line: usize, m: &str| Error::Parse { line, message: m.into() };
        if h.len() != 3 || h[0] != "%%complex-coo" {
            return Err(bad(1, "expected `%%complex-coo <n> <nnz>`"));
        }
        let n: usize = h[1].parse().map_err(|_| bad(1, "bad dimension"))?;
        let nnz: usize = h[2].parse().map_err(|_| bad(1, "bad nnz"))?;
        let mut t = Vec::with_capacity(nnz);
        for (k, l) in lines {
            if l.trim().is_empty() {
                continue;
            }
            let p: Vec<&str> = l.split_whitespace().collect();
            if p.len() != 4 {
                return Err(bad(k + 1, "expected `i j re im`"));
            }
            let i: usize = p[0].parse().map_err(|_| bad(k + 1, "bad row"))?;
            let j: usize = p[1].parse().map_err(|_| bad(k + 1, "bad column"))?;
            let re: f64 = p[2].parse().map_err(|_| bad(k + 1, "bad real part"))?;
            let im: f64 = p[3].parse().map_err(|_| bad(k + 1, "bad imaginary part"))?;
            t.push((i, j, C64::new(re, im)));
        }
        if t.len() != nnz {
            return Err(bad(1, "entry count does not match header"));
        }
        CsrMatrix::from_triplets(n, n, t)
    }

    pub fn conj(&self) -> Self {
        CsrMatrix { values: self.values.iter().map(|v| v.conj()).collect(), ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_summed_and_zeros_dropped() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, 2.0), (0, 0, 3.0), (1, 0, 1.0), (1, 0, -1.0)])
            .unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(m.get(1, 0), 0.0);
        assert_eq!(m.mul_vec(&[1.0, 1.0]), vec![4.0, 2.0]);
    }

    #[test]
    fn coo_round_trip() {
        let m =
            CsrMatrix::from_triplets(3, 3, vec![(0, 1, C64::new(0.1, -2.5)), (2, 2, C64::new(1e-300, 3.0))]).unwrap();
        let back = SparseComplexMatrix::from_coo_text(&m.to_coo_text()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn out_of_range_triplet() {
        assert!(CsrMatrix::from_triplets(1, 1, vec![(1, 0, 1.0)]).is_err());
    }
}
