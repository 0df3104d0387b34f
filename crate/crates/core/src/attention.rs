//! Reference attention kernels: vanilla softmax, mean-centered softmax, the
//! linear Taylor kernel, and the quadratic-form Taylor oracle that
//! materializes the full first-order map.
//!
//! The linear kernel follows the six-step schedule exactly: mean-center the
//! keys, form the global context matrix `G = K̂ᵀV`, take column sums of `K̂`
//! and `V`, then assemble the denominator `t_D = n√d·1 + Q·k̂_sumᵀ` and
//! numerator `T_N = √d(1·v_sum) + QG` and divide row-wise. The `1/√d` scale
//! is folded into both, never applied to `QK̂ᵀ` directly. No step allocates
//! an n×n buffer; peak auxiliary storage is O(n·d + d²).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::linalg::{
    col_sum, diag_inv_scale_rows, dot, matmul, mean_center_cols, LinalgError, Matrix, Vector,
    SINGULAR_THRESHOLD,
};

#[derive(Debug, Error)]
pub enum AttentionError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("q, k, v must share dimensions; got q {q_rows}x{q_cols}, k {k_rows}x{k_cols}, v {v_rows}x{v_cols}")]
    MismatchedInputs {
        q_rows: usize,
        q_cols: usize,
        k_rows: usize,
        k_cols: usize,
        v_rows: usize,
        v_cols: usize,
    },
    #[error("projection weights for head {head} must be {d}x{d}, got {rows}x{cols}")]
    BadProjection {
        head: usize,
        d: usize,
        rows: usize,
        cols: usize,
    },
    #[error("input has {cols} feature columns but {heads} heads of width {d} need {expected}")]
    BadHeadSplit {
        cols: usize,
        heads: usize,
        d: usize,
        expected: usize,
    },
    #[error("mha_forward needs at least one head")]
    NoHeads,
}

/// One head's query/key/value matrices, all n×d.
#[derive(Debug, Clone)]
pub struct AttentionInputs {
    pub q: Matrix,
    pub k: Matrix,
    pub v: Matrix,
}

impl AttentionInputs {
    pub fn new(q: Matrix, k: Matrix, v: Matrix) -> Result<Self, AttentionError> {
        let same = q.rows() == k.rows()
            && q.rows() == v.rows()
            && q.cols() == k.cols()
            && q.cols() == v.cols();
        if !same {
            return Err(AttentionError::MismatchedInputs {
                q_rows: q.rows(),
                q_cols: q.cols(),
                k_rows: k.rows(),
                k_cols: k.cols(),
                v_rows: v.rows(),
                v_cols: v.cols(),
            });
        }
        Ok(Self { q, k, v })
    }

    pub fn tokens(&self) -> usize {
        self.q.rows()
    }

    pub fn head_dim(&self) -> usize {
        self.q.cols()
    }
}

/// Per-head projection weights, each d×d.
#[derive(Debug, Clone)]
pub struct ProjectionWeights {
    pub w_q: Matrix,
    pub w_k: Matrix,
    pub w_v: Matrix,
    pub w_o: Matrix,
}

/// Everything the linear Taylor kernel computes on the way to `Z`.
#[derive(Debug, Clone)]
pub struct TaylorIntermediates {
    /// Mean-centered keys, n×d; column sums are numerically zero.
    pub k_hat: Matrix,
    /// Global context matrix `K̂ᵀV`, d×d.
    pub g: Matrix,
    /// Column sums of `K̂` (zero up to rounding, kept as computed).
    pub k_hat_sum: Vector,
    /// Column sums of `V`.
    pub v_sum: Vector,
    /// Denominator `n√d + q_i·k̂_sum`, one entry per token.
    pub t_d: Vector,
    /// Numerator `√d·v_sum[j] + (QG)[i][j]`, n×d.
    pub t_n: Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttentionKernel {
    Softmax,
    Taylor,
}

/// Numerically stable in-place softmax (max subtraction).
pub fn softmax_inplace(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

fn softmax_attention_with_keys(inp: &AttentionInputs, keys: &Matrix) -> Matrix {
    let scale = 1.0 / (inp.head_dim() as f64).sqrt();
    let mut scores =
        matmul(&inp.q, &keys.transpose()).expect("validated inputs have compatible shapes");
    for i in 0..scores.rows() {
        let row = scores.row_mut(i);
        for v in row.iter_mut() {
            *v *= scale;
        }
        softmax_inplace(row);
    }
    matmul(&scores, &inp.v).expect("score rows match value rows")
}

/// Vanilla softmax attention `Z = softmax(QKᵀ/√d) V`.
pub fn softmax_attention(inp: &AttentionInputs) -> Matrix {
    softmax_attention_with_keys(inp, &inp.k)
}

/// Softmax attention over mean-centered keys; equal to [`softmax_attention`]
/// by shift invariance of softmax.
pub fn mean_centered_softmax_attention(inp: &AttentionInputs) -> Matrix {
    let (k_hat, _) = mean_center_cols(&inp.k);
    softmax_attention_with_keys(inp, &k_hat)
}

/// Linear Taylor attention. Returns the score matrix and all intermediates.
///
/// Cost is O(n·d²); the n×n map is never formed.
pub fn taylor_attention_linear(
    inp: &AttentionInputs,
) -> Result<(Matrix, TaylorIntermediates), AttentionError> {
    let n = inp.tokens();
    let d = inp.head_dim();
    let sqrt_d = (d as f64).sqrt();

    let (k_hat, _k_bar) = mean_center_cols(&inp.k);
    let g = matmul(&k_hat.transpose(), &inp.v)?;
    let k_hat_sum = col_sum(&k_hat);
    let v_sum = col_sum(&inp.v);

    let base = n as f64 * sqrt_d;
    let t_d = Vector::new(
        (0..n)
            .map(|i| base + dot(inp.q.row(i), k_hat_sum.as_slice()))
            .collect(),
    );

    let qg = matmul(&inp.q, &g)?;
    let background: Vec<f64> = v_sum.as_slice().iter().map(|v| sqrt_d * v).collect();
    let mut t_n = qg;
    for i in 0..n {
        for (v, b) in t_n.row_mut(i).iter_mut().zip(&background) {
            *v += b;
        }
    }

    let z = diag_inv_scale_rows(&t_d, &t_n)?;
    Ok((
        z,
        TaylorIntermediates {
            k_hat,
            g,
            k_hat_sum,
            v_sum,
            t_d,
            t_n,
        },
    ))
}

/// Brute-force Taylor oracle: materializes the full n×n first-order map
/// `w[i][j] = √d + q_i·k̂_j`, row-normalizes by `n√d + q_i·k̂_sum`, and
/// multiplies by V. Independent of the linear kernel's reordering.
pub fn taylor_attention_quadratic(inp: &AttentionInputs) -> Result<Matrix, AttentionError> {
    let n = inp.tokens();
    let d = inp.head_dim();
    let sqrt_d = (d as f64).sqrt();

    let (k_hat, _) = mean_center_cols(&inp.k);
    let k_hat_sum = col_sum(&k_hat);

    let mut weights = Matrix::zeros(n, n)?;
    for i in 0..n {
        let q_i = inp.q.row(i);
        let denom = n as f64 * sqrt_d + dot(q_i, k_hat_sum.as_slice());
        if denom.abs() < SINGULAR_THRESHOLD {
            return Err(LinalgError::SingularDenominator {
                row: i,
                value: denom,
                threshold: SINGULAR_THRESHOLD,
            }
            .into());
        }
        for j in 0..n {
            weights.set(i, j, (sqrt_d + dot(q_i, k_hat.row(j))) / denom);
        }
    }
    Ok(matmul(&weights, &inp.v)?)
}

fn head_forward(
    x_block: &Matrix,
    w: &ProjectionWeights,
    kernel: AttentionKernel,
) -> Result<Matrix, AttentionError> {
    let q = matmul(x_block, &w.w_q)?;
    let k = matmul(x_block, &w.w_k)?;
    let v = matmul(x_block, &w.w_v)?;
    let inp = AttentionInputs::new(q, k, v)?;
    let z = match kernel {
        AttentionKernel::Softmax => softmax_attention(&inp),
        AttentionKernel::Taylor => taylor_attention_linear(&inp)?.0,
    };
    Ok(matmul(&z, &w.w_o)?)
}

/// Multi-head forward pass. `x` is n×(h·d); head `i` reads the i-th
/// contiguous d-wide feature block, projects with its own weights, applies
/// the chosen kernel, and the per-head outputs are concatenated back in
/// index order.
pub fn mha_forward(
    x: &Matrix,
    heads: &[ProjectionWeights],
    kernel: AttentionKernel,
) -> Result<Matrix, AttentionError> {
    let h = heads.len();
    if h == 0 {
        return Err(AttentionError::NoHeads);
    }
    let d = heads[0].w_q.cols();
    for (idx, w) in heads.iter().enumerate() {
        for m in [&w.w_q, &w.w_k, &w.w_v, &w.w_o] {
            if m.rows() != d || m.cols() != d {
                return Err(AttentionError::BadProjection {
                    head: idx,
                    d,
                    rows: m.rows(),
                    cols: m.cols(),
                });
            }
        }
    }
    if x.cols() != h * d {
        return Err(AttentionError::BadHeadSplit {
            cols: x.cols(),
            heads: h,
            d,
            expected: h * d,
        });
    }

    let n = x.rows();
    let slice_block = |head: usize| -> Matrix {
        let mut block = vec![0.0; n * d];
        for i in 0..n {
            let src = &x.row(i)[head * d..(head + 1) * d];
            block[i * d..(i + 1) * d].copy_from_slice(src);
        }
        Matrix::from_vec(n, d, block).expect("block dims are valid")
    };

    let run = |head: usize| head_forward(&slice_block(head), &heads[head], kernel);

    #[cfg(feature = "parallel")]
    let outputs: Vec<Matrix> = {
        use rayon::prelude::*;
        (0..h)
            .into_par_iter()
            .map(run)
            .collect::<Result<Vec<_>, _>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let outputs: Vec<Matrix> = (0..h).map(run).collect::<Result<Vec<_>, _>>()?;

    let mut out = vec![0.0; n * h * d];
    for (head, o) in outputs.iter().enumerate() {
        for i in 0..n {
            out[i * h * d + head * d..i * h * d + (head + 1) * d].copy_from_slice(o.row(i));
        }
    }
    Ok(Matrix::from_vec(n, h * d, out).expect("output dims are valid"))
}

/// Seeded standard-normal Q, K, V for reproducible experiments.
/// Generator is ChaCha8; fill order is Q row-major, then K, then V.
pub fn random_attention_inputs(n: usize, d: usize, seed: u64) -> AttentionInputs {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |n: usize, d: usize| {
        let data: Vec<f64> = (0..n * d)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        Matrix::from_vec(n, d, data).expect("n, d >= 1")
    };
    let q = draw(n, d);
    let k = draw(n, d);
    let v = draw(n, d);
    AttentionInputs::new(q, k, v).expect("identical dims by construction")
}
