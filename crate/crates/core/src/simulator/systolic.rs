//! Systolic-array matmul timing under the input- and output-stationary
//! dataflows, with tiling over the stationary operand.
//!
//! For `A (n×k) · B (k×m)` on a `P_r × P_c` array:
//!
//! - input stationary pins B tiles (`k_t × m_t`) in the array; per tile the
//!   cost is `k_t` preload plus `n + k_t + m_t − 2` for the skewed stream and
//!   drain, with partial sums accumulated down the columns;
//! - output stationary pins output tiles (`n_t × m_t`); per tile the cost is
//!   `n_t + m_t − 2` fill skew, `k` in-place accumulation steps, and `n_t`
//!   drain.
//!
//! Tiles run back to back with no preload overlap. MAC count is `n·k·m`
//! either way. The stationary operand is read once, each streamed operand
//! once per tile pass, outputs written once.

use super::SimError;
use crate::archmodel::DataflowKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystolicRun {
    pub cycles: u64,
    pub macs: u64,
    pub reads: u64,
    pub writes: u64,
}

/// Timing detail the pipeline scheduler needs beyond the public run summary.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SystolicTiming {
    pub cycles: u64,
    pub macs: u64,
    pub streamed_reads: u64,
    pub stationary_reads: u64,
    pub output_writes: u64,
    /// Offset from task start to the first emitted output element/row.
    pub first_out: u64,
}

fn tile_sizes(total: u64, tile: u64) -> impl Iterator<Item = u64> {
    let full = total / tile;
    let rem = total % tile;
    (0..full).map(move |_| tile).chain((rem > 0).then_some(rem))
}

fn to_u64(v: u128, what: &'static str) -> Result<u64, SimError> {
    u64::try_from(v).map_err(|_| SimError::CycleOverflow { what })
}

pub(crate) fn systolic_timing(
    a_dims: (u64, u64),
    b_dims: (u64, u64),
    array: (u64, u64),
    flavor: DataflowKind,
    stationary_resident: bool,
) -> Result<SystolicTiming, SimError> {
    let (n, k) = a_dims;
    let (k2, m) = b_dims;
    let (p_r, p_c) = array;
    if p_r == 0 || p_c == 0 {
        return Err(SimError::InvalidArray { rows: p_r, cols: p_c });
    }
    if n == 0 || k == 0 || k2 == 0 || m == 0 {
        return Err(SimError::ZeroDimMatmul { n, k, k2, m });
    }
    if k != k2 {
        return Err(SimError::InnerDimMismatch { n, k, k2, m });
    }

    let macs = to_u64(n as u128 * k as u128 * m as u128, "mac count")?;
    let mut cycles: u128 = 0;
    let timing = match flavor {
        DataflowKind::InputStationary => {
            // B is stationary, tiled k × m over P_r × P_c.
            let m_tiles = m.div_ceil(p_c);
            let k_t0 = k.min(p_r);
            let m_t0 = m.min(p_c);
            for k_t in tile_sizes(k, p_r) {
                for m_t in tile_sizes(m, p_c) {
                    let preload = if stationary_resident { 0 } else { k_t };
                    cycles += (preload + n + k_t + m_t - 2) as u128;
                }
            }
            let preload0 = if stationary_resident { 0 } else { k_t0 };
            SystolicTiming {
                cycles: to_u64(cycles, "input-stationary cycles")?,
                macs,
                streamed_reads: to_u64(n as u128 * k as u128 * m_tiles as u128, "reads")?,
                stationary_reads: if stationary_resident {
                    0
                } else {
                    to_u64(k as u128 * m as u128, "reads")?
                },
                output_writes: to_u64(n as u128 * m as u128, "writes")?,
                first_out: preload0 + k_t0 + m_t0 - 1,
            }
        }
        DataflowKind::OutputStationary => {
            // The output is stationary, tiled n × m over P_r × P_c; both
            // inputs stream. `stationary_resident` leaves the outputs in the
            // PEs instead of writing them back.
            let n_tiles = n.div_ceil(p_r);
            let m_tiles = m.div_ceil(p_c);
            let n_t0 = n.min(p_r);
            let m_t0 = m.min(p_c);
            for n_t in tile_sizes(n, p_r) {
                for m_t in tile_sizes(m, p_c) {
                    cycles += (n_t + m_t - 2 + k + n_t) as u128;
                }
            }
            SystolicTiming {
                cycles: to_u64(cycles, "output-stationary cycles")?,
                macs,
                streamed_reads: to_u64(
                    k as u128 * n as u128 * m_tiles as u128
                        + k as u128 * m as u128 * n_tiles as u128,
                    "reads",
                )?,
                stationary_reads: 0,
                output_writes: if stationary_resident {
                    0
                } else {
                    to_u64(n as u128 * m as u128, "writes")?
                },
                first_out: n_t0 + m_t0 - 2 + k + 1,
            }
        }
        other => return Err(SimError::NotAMatmulFlavor { dataflow: other }),
    };
    // A task cannot emit before it could possibly finish a 1x1x1 product.
    Ok(SystolicTiming {
        first_out: timing.first_out.min(timing.cycles),
        ..timing
    })
}

/// Cycle/MAC/access model of one dense matmul `A (n×k) · B (k×m)` on a
/// `P_r × P_c` PE array under a single-matmul dataflow.
pub fn sim_systolic_matmul(
    a_dims: (u64, u64),
    b_dims: (u64, u64),
    array: (u64, u64),
    flavor: DataflowKind,
) -> Result<SystolicRun, SimError> {
    let t = systolic_timing(a_dims, b_dims, array, flavor, false)?;
    Ok(SystolicRun {
        cycles: t.cycles,
        macs: t.macs,
        reads: t.streamed_reads + t.stationary_reads,
        writes: t.output_writes,
    })
}
