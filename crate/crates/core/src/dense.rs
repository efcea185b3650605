use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major 2-D array; the sole numeric container of the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<S: Scalar = f64> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> DenseMatrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "from_vec",
                format!("{rows}x{cols} = {} entries", rows * cols),
                format!("{} entries", data.len()),
            ));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self> {
        let n = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * c);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != c {
                return Err(Error::shape(
                    "from_rows",
                    format!("{c} columns"),
                    format!("{} columns in row {i}", r.len()),
                ));
            }
            data.extend_from_slice(r);
        }
        Ok(DenseMatrix { rows: n, cols: c, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> S {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: S) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [S] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn fill(&mut self, v: S) {
        self.data.fill(v);
    }

    pub fn is_all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scale(&mut self, a: S) {
        for x in &mut self.data {
            *x = *x * a;
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!(self.shape(), other.shape(), "add_assign shape");
        for (x, &y) in self.data.iter_mut().zip(&other.data) {
            *x = *x + y;
        }
    }

    /// Element-wise product, in place.
    pub fn hadamard_assign(&mut self, other: &Self) {
        assert_eq!(self.shape(), other.shape(), "hadamard shape");
        for (x, &y) in self.data.iter_mut().zip(&other.data) {
            *x = *x * y;
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape(), "max_abs_diff shape");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs().as_f64())
            .fold(0.0, f64::max)
    }

    /// `self · other`, [n×k]·[k×m] → [n×m].
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::shape(
                "matmul",
                format!("lhs cols = rhs rows, lhs {}x{}", self.rows, self.cols),
                format!("rhs {}x{}", other.rows, other.cols),
            ));
        }
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = DenseMatrix::zeros(n, m);
        for i in 0..n {
            let a_row = self.row(i);
            let o_row = &mut out.data[i * m..(i + 1) * m];
            for (p, &a) in a_row.iter().enumerate().take(k) {
                let b_row = &other.data[p * m..(p + 1) * m];
                for (o, &b) in o_row.iter_mut().zip(b_row) {
                    *o = *o + a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · other`, [k×n]ᵀ·[k×m] → [n×m]. Used for weight gradients.
    pub fn matmul_tn(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::shape(
                "matmul_tn",
                format!("equal row counts, lhs {}x{}", self.rows, self.cols),
                format!("rhs {}x{}", other.rows, other.cols),
            ));
        }
        let (k, n, m) = (self.rows, self.cols, other.cols);
        let mut out = DenseMatrix::zeros(n, m);
        for p in 0..k {
            let a_row = self.row(p);
            let b_row = &other.data[p * m..(p + 1) * m];
            for (i, &a) in a_row.iter().enumerate().take(n) {
                let o_row = &mut out.data[i * m..(i + 1) * m];
                for (o, &b) in o_row.iter_mut().zip(b_row) {
                    *o = *o + a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self · otherᵀ`, [n×k]·[m×k]ᵀ → [n×m]. Used for input gradients.
    pub fn matmul_nt(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::shape(
                "matmul_nt",
                format!("equal col counts, lhs {}x{}", self.rows, self.cols),
                format!("rhs {}x{}", other.rows, other.cols),
            ));
        }
        let (n, k, m) = (self.rows, self.cols, other.rows);
        let mut out = DenseMatrix::zeros(n, m);
        for i in 0..n {
            let a_row = self.row(i);
            let o_row = &mut out.data[i * m..(i + 1) * m];
            for (j, o) in o_row.iter_mut().enumerate() {
                let b_row = &other.data[j * k..(j + 1) * k];
                let mut acc = S::zero();
                for (&a, &b) in a_row.iter().zip(b_row) {
                    acc = acc + a * b;
                }
                *o = acc;
            }
        }
        Ok(out)
    }

    /// Sum over rows → [1×cols]. Used for bias gradients.
    pub fn col_sums(&self) -> Self {
        let mut out = DenseMatrix::zeros(1, self.cols);
        for i in 0..self.rows {
            let r = self.row(i);
            for (o, &x) in out.data.iter_mut().zip(r) {
                *o = *o + x;
            }
        }
        out
    }

    /// Add a [1×cols] row to every row of `self`.
    pub fn add_row_broadcast(&mut self, row: &Self) {
        assert_eq!(row.rows, 1, "broadcast row must be 1 x cols");
        assert_eq!(row.cols, self.cols, "broadcast width");
        for i in 0..self.rows {
            let r = &mut self.data[i * self.cols..(i + 1) * self.cols];
            for (x, &b) in r.iter_mut().zip(&row.data) {
                *x = *x + b;
            }
        }
    }
}

/// Column-wise concatenation of matrices with equal row counts.
pub fn concat_cols<S: Scalar>(xs: &[&DenseMatrix<S>]) -> Result<DenseMatrix<S>> {
    let n = xs.first().map_or(0, |m| m.rows());
    for m in xs {
        if m.rows() != n {
            return Err(Error::shape(
                "concat_cols",
                format!("{n} rows"),
                format!("{} rows", m.rows()),
            ));
        }
    }
    let total: usize = xs.iter().map(|m| m.cols()).sum();
    let mut out = DenseMatrix::zeros(n, total);
    for i in 0..n {
        let dst = out.row_mut(i);
        let mut at = 0;
        for m in xs {
            dst[at..at + m.cols()].copy_from_slice(m.row(i));
            at += m.cols();
        }
    }
    Ok(out)
}

/// Backward of [`concat_cols`]: split an upstream gradient back into the
/// argument widths, in order.
pub fn split_cols<S: Scalar>(grad: &DenseMatrix<S>, widths: &[usize]) -> Vec<DenseMatrix<S>> {
    assert_eq!(
        widths.iter().sum::<usize>(),
        grad.cols(),
        "split widths must cover all columns"
    );
    let mut parts = Vec::with_capacity(widths.len());
    let mut at = 0;
    for &w in widths {
        let mut part = DenseMatrix::zeros(grad.rows(), w);
        for i in 0..grad.rows() {
            part.row_mut(i).copy_from_slice(&grad.row(i)[at..at + w]);
        }
        at += w;
        parts.push(part);
    }
    parts
}
