//! Minimal dense-matrix core: exactly the primitives the attention kernels
//! and oracles need, in 64-bit floats, row-major.

use thiserror::Error;

/// Denominator entries with absolute value below this are treated as singular.
pub const SINGULAR_THRESHOLD: f64 = 1e-12;

/// Parallel kernels fall back to the serial loop below this many
/// multiply-accumulates; rayon overhead dominates for tiny products.
#[cfg(feature = "parallel")]
const PAR_MACS_THRESHOLD: usize = 32_768;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix must have at least one row and one column, got {rows}x{cols}")]
    EmptyMatrix { rows: usize, cols: usize },
    #[error("data length {got} does not match {rows}x{cols} = {expected}")]
    DataLength {
        rows: usize,
        cols: usize,
        expected: usize,
        got: usize,
    },
    #[error("shape mismatch in {op}: left is {lhs_rows}x{lhs_cols}, right is {rhs_rows}x{rhs_cols}")]
    ShapeMismatch {
        op: &'static str,
        lhs_rows: usize,
        lhs_cols: usize,
        rhs_rows: usize,
        rhs_cols: usize,
    },
    #[error("divisor vector has length {len} but matrix has {rows} rows")]
    DivisorLength { len: usize, rows: usize },
    #[error("singular denominator at row {row}: |{value:e}| < {threshold:e}")]
    SingularDenominator {
        row: usize,
        value: f64,
        threshold: f64,
    },
}

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::EmptyMatrix { rows, cols });
        }
        Ok(Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        })
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::EmptyMatrix { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(LinalgError::DataLength {
                rows,
                cols,
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Build from row slices; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if r == 0 || c == 0 {
            return Err(LinalgError::EmptyMatrix { rows: r, cols: c });
        }
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(LinalgError::DataLength {
                    rows: r,
                    cols: c,
                    expected: c,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { rows: r, cols: c, data })
    }

    pub fn identity(n: usize) -> Result<Self, LinalgError> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix {
            rows: self.cols,
            cols: self.rows,
            data: vec![0.0; self.data.len()],
        };
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// Largest elementwise absolute difference; infinity on shape mismatch.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// Dense vector of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    data: Vec<f64>,
}

impl Vector {
    pub fn new(data: Vec<f64>) -> Self {
        Self { data }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            data: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.data[i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn matmul_row_into(out_row: &mut [f64], i: usize, a: &Matrix, b: &Matrix) {
    // ikj order: one streaming pass over b per a-row, accumulation order is
    // identical in the serial and parallel paths.
    for k in 0..a.cols {
        let aik = a.data[i * a.cols + k];
        let b_row = &b.data[k * b.cols..(k + 1) * b.cols];
        for (o, &bv) in out_row.iter_mut().zip(b_row) {
            *o += aik * bv;
        }
    }
}

/// Serial matrix product. Always available; `matmul` dispatches to this when
/// the `parallel` feature is off or the product is small.
pub fn matmul_serial(a: &Matrix, b: &Matrix) -> Result<Matrix, LinalgError> {
    check_matmul_shapes(a, b)?;
    let mut out = Matrix {
        rows: a.rows,
        cols: b.cols,
        data: vec![0.0; a.rows * b.cols],
    };
    for i in 0..a.rows {
        let row = &mut out.data[i * b.cols..(i + 1) * b.cols];
        matmul_row_into(row, i, a, b);
    }
    Ok(out)
}

/// Standard matrix product `a * b`.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix, LinalgError> {
    #[cfg(feature = "parallel")]
    {
        check_matmul_shapes(a, b)?;
        if a.rows * a.cols * b.cols >= PAR_MACS_THRESHOLD {
            use rayon::prelude::*;
            let mut out = Matrix {
                rows: a.rows,
                cols: b.cols,
                data: vec![0.0; a.rows * b.cols],
            };
            out.data
                .par_chunks_mut(b.cols)
                .enumerate()
                .for_each(|(i, row)| matmul_row_into(row, i, a, b));
            return Ok(out);
        }
    }
    matmul_serial(a, b)
}

fn check_matmul_shapes(a: &Matrix, b: &Matrix) -> Result<(), LinalgError> {
    if a.cols != b.rows {
        return Err(LinalgError::ShapeMismatch {
            op: "matmul",
            lhs_rows: a.rows,
            lhs_cols: a.cols,
            rhs_rows: b.rows,
            rhs_cols: b.cols,
        });
    }
    Ok(())
}

/// Column sums: `result[j] = sum_i m[i][j]`.
pub fn col_sum(m: &Matrix) -> Vector {
    let mut sums = vec![0.0; m.cols];
    for i in 0..m.rows {
        for (s, &v) in sums.iter_mut().zip(m.row(i)) {
            *s += v;
        }
    }
    Vector::new(sums)
}

/// Subtract each column's mean. Returns the centered matrix and the mean row,
/// so the centered matrix has (numerically) zero column sums.
pub fn mean_center_cols(k: &Matrix) -> (Matrix, Vector) {
    let n = k.rows as f64;
    let sums = col_sum(k);
    let means: Vec<f64> = sums.as_slice().iter().map(|s| s / n).collect();
    let mut centered = k.clone();
    for i in 0..k.rows {
        let row = &mut centered.data[i * k.cols..(i + 1) * k.cols];
        for (v, m) in row.iter_mut().zip(&means) {
            *v -= m;
        }
    }
    (centered, Vector::new(means))
}

/// Row-wise division by a diagonal: `out[i][j] = t_n[i][j] / t_d[i]`.
///
/// Rejects divisor entries with `|t_d[i]| < SINGULAR_THRESHOLD` instead of
/// producing infinities.
pub fn diag_inv_scale_rows(t_d: &Vector, t_n: &Matrix) -> Result<Matrix, LinalgError> {
    if t_d.len() != t_n.rows {
        return Err(LinalgError::DivisorLength {
            len: t_d.len(),
            rows: t_n.rows,
        });
    }
    for (i, &v) in t_d.as_slice().iter().enumerate() {
        if v.abs() < SINGULAR_THRESHOLD {
            return Err(LinalgError::SingularDenominator {
                row: i,
                value: v,
                threshold: SINGULAR_THRESHOLD,
            });
        }
    }
    let mut out = t_n.clone();
    for i in 0..out.rows {
        let div = t_d.get(i);
        let row = &mut out.data[i * out.cols..(i + 1) * out.cols];
        for v in row.iter_mut() {
            *v /= div;
        }
    }
    Ok(out)
}
