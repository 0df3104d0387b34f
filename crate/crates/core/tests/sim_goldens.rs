//! Frozen cycle-model goldens. The single-head numbers are hand-traceable
//! from the timing formulas; the stage totals were recorded from the first
//! verified run and pin the model against regression.

use taylor_attn::archmodel::{reference_energy_table, AcceleratorConfig, DataflowKind};
use taylor_attn::opcount::AttentionDims;
use taylor_attn::simulator::{sim_attention_layer, Chunk, SimOptions, SimReport};

fn sim(dims: &AttentionDims, dataflow: DataflowKind, pipelined: bool) -> SimReport {
    sim_attention_layer(
        dims,
        &AcceleratorConfig::default(),
        &reference_energy_table(),
        dataflow,
        SimOptions {
            pipelined,
            include_projections: false,
        },
    )
    .unwrap()
}

fn interval(report: &SimReport, chunk: Chunk, task: &str) -> (u64, u64) {
    let tl = report
        .timelines
        .iter()
        .find(|t| t.chunk == chunk)
        .unwrap();
    let iv = tl
        .intervals
        .iter()
        .find(|iv| iv.task == task)
        .unwrap_or_else(|| panic!("no task {task} on {chunk}"));
    (iv.start_cycle, iv.end_cycle)
}

/// One head pass at n=196, d=64 on the default array, down-forward, traced
/// by hand through every chunk:
///
/// - accumulator: K column-sum 0..196, V 196..392, K̂ 392..588
/// - divider: mean scaling 196..197, final division 1290..1486
/// - adder: centering 197..393, t_D 716..912, T_N 1288..1485
/// - SA-General: G (4 token tiles, 896 cycles) 201..1097, QG 1097..1483
/// - SA-Diag: Q·k̂_sumᵀ 588..911
#[test]
fn single_head_pipelined_trace() {
    let dims = AttentionDims::new(196, 64, 1, 1).unwrap();
    let r = sim(&dims, DataflowKind::DownForward, true);
    assert_eq!(r.total_cycles, 1486);

    assert_eq!(interval(&r, Chunk::Accumulator, "layer0/head0/k-colsum"), (0, 196));
    assert_eq!(interval(&r, Chunk::Accumulator, "layer0/head0/v-colsum"), (196, 392));
    assert_eq!(interval(&r, Chunk::Accumulator, "layer0/head0/khat-colsum"), (392, 588));
    assert_eq!(interval(&r, Chunk::Divider, "layer0/head0/k-mean"), (196, 197));
    assert_eq!(interval(&r, Chunk::Adder, "layer0/head0/k-center"), (197, 393));
    assert_eq!(interval(&r, Chunk::SAGeneral, "layer0/head0/g-matmul"), (201, 1097));
    assert_eq!(interval(&r, Chunk::SADiag, "layer0/head0/q-ksum-matvec"), (588, 911));
    assert_eq!(interval(&r, Chunk::Adder, "layer0/head0/t-d"), (716, 912));
    assert_eq!(interval(&r, Chunk::SAGeneral, "layer0/head0/qg-matmul"), (1097, 1483));
    assert_eq!(interval(&r, Chunk::Adder, "layer0/head0/t-n"), (1288, 1485));
    assert_eq!(interval(&r, Chunk::Divider, "layer0/head0/z-div"), (1290, 1486));
}

#[test]
fn single_head_sequential_is_sum_of_steps() {
    let dims = AttentionDims::new(196, 64, 1, 1).unwrap();
    let r = sim(&dims, DataflowKind::DownForward, false);
    // 196 + 1 + 196 + 896 + 196 + 196 + 323 + 4 + 386 + 197 + 196
    assert_eq!(r.total_cycles, 2787);
}

#[test]
fn deit_tiny_stage_goldens() {
    let dims = AttentionDims::new(196, 64, 3, 12).unwrap();
    let seq = sim(&dims, DataflowKind::DownForward, false);
    let piped = sim(&dims, DataflowKind::DownForward, true);
    assert_eq!(seq.total_cycles, 36 * 2787);
    assert_eq!(seq.total_cycles, 100_332);
    assert_eq!(piped.total_cycles, 46_636);
    assert!(piped.total_cycles < seq.total_cycles);
    // 500 MHz default clock
    assert!((seq.total_seconds - 100_332.0 / 500e6).abs() < 1e-15);
}

#[test]
fn g_stationary_stage_goldens() {
    let dims = AttentionDims::new(196, 64, 3, 12).unwrap();
    let seq = sim(&dims, DataflowKind::GStationary, false);
    let piped = sim(&dims, DataflowKind::GStationary, true);
    // G production is output-stationary (386 instead of 896 cycles per head)
    // and QG skips its preload (322 instead of 386).
    assert_eq!(seq.total_cycles, 36 * (2787 - 896 + 386 - 386 + 322));
    assert_eq!(seq.total_cycles, 79_668);
    assert_eq!(piped.total_cycles, 26_415);
    assert!(piped.total_cycles < seq.total_cycles);
}

#[test]
fn clock_override_scales_reported_seconds() {
    let dims = AttentionDims::new(196, 64, 1, 1).unwrap();
    let mut cfg = AcceleratorConfig::default();
    cfg.clock_mhz = 1000;
    let r = sim_attention_layer(
        &dims,
        &cfg,
        &reference_energy_table(),
        DataflowKind::DownForward,
        SimOptions::default(),
    )
    .unwrap();
    assert!((r.total_seconds - r.total_cycles as f64 / 1e9).abs() < 1e-18);
}
