//! Cycle-level model of one attention stage on the chunked accelerator:
//! five sub-processors (accumulator, adder, divider arrays plus the
//! SA-General and SA-Diag systolic sub-arrays), the intra-layer pipeline
//! that overlaps them, and per-dataflow energy accounting.
//!
//! The per-head task graph follows the six kernel steps:
//!
//! 1. accumulator sums K's columns, divider scales by 1/n, adder subtracts
//!    the means to emit K̂ column by column;
//! 2. SA-General multiplies K̂ᵀ by V into the global context matrix G as K̂
//!    streams in (input-stationary with V pinned under down-forward,
//!    output-stationary with G accumulating in place under G-stationary);
//! 3. the accumulator meanwhile sums V's columns, then K̂'s;
//! 4. SA-Diag forms Q·k̂_sumᵀ with k̂_sum pinned in its single PE column
//!    while SA-General forms Q·G, with Q broadcast to both so it is read
//!    only once;
//! 5. the adder array assembles t_D and T_N as those products stream out;
//! 6. the divider array emits Z row by row.
//!
//! Under G-stationary, G never touches SRAM and the Q·G pass skips its
//! preload; the price is `gs_pe_overhead` on every systolic MAC. Under
//! down-forward accumulation G is written and re-read (2·d² words) but the
//! PEs stay simple. Heads and layers are laid out back to back on the same
//! chunks; in pipelined mode adjacent steps (and heads) overlap wherever the
//! dependencies and chunk occupancy allow.
//!
//! The simulator itself is single-threaded and bit-deterministic; run as many
//! in parallel as you like.

mod pipeline;
mod systolic;

pub use systolic::{sim_systolic_matmul, SystolicRun};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::archmodel::{AcceleratorConfig, ConfigError, DataflowKind, EnergyTable};
use crate::opcount::{AttentionDims, OpCountError, OpCounts};
use pipeline::{schedule, DepKind, ScheduledTask, TaskSpec};
use systolic::systolic_timing;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("systolic array dims must be at least 1x1, got {rows}x{cols}")]
    InvalidArray { rows: u64, cols: u64 },
    #[error("matmul dims must all be at least 1, got ({n},{k}) x ({k2},{m})")]
    ZeroDimMatmul { n: u64, k: u64, k2: u64, m: u64 },
    #[error("matmul inner dims disagree: ({n},{k}) x ({k2},{m})")]
    InnerDimMismatch { n: u64, k: u64, k2: u64, m: u64 },
    #[error("{dataflow} is not a single-matmul flavor; use input- or output-stationary")]
    NotAMatmulFlavor { dataflow: DataflowKind },
    #[error("{dataflow} is not an attention-level schedule; use g-stationary or down-forward")]
    NotASchedule { dataflow: DataflowKind },
    #[error("lanes must be at least 1")]
    ZeroLanes,
    #[error("a divider pattern was given for {kind:?}; only Divide takes one")]
    PatternNotApplicable { kind: ProcessorKind },
    #[error("Divide requires a divider pattern (single_divisor or multi_divisor)")]
    MissingDividerPattern,
    #[error(
        "per-head {buffer} operand needs {needed} words but each SRAM buffer holds {available}"
    )]
    SramCapacity {
        buffer: &'static str,
        needed: u64,
        available: u64,
    },
    #[error("cycle count overflow computing {what}")]
    CycleOverflow { what: &'static str },
    #[error(transparent)]
    Dims(#[from] OpCountError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// The five dedicated sub-processors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chunk {
    Accumulator,
    Adder,
    Divider,
    SAGeneral,
    SADiag,
}

impl Chunk {
    pub const ALL: [Chunk; 5] = [
        Chunk::Accumulator,
        Chunk::Adder,
        Chunk::Divider,
        Chunk::SAGeneral,
        Chunk::SADiag,
    ];
}

impl std::fmt::Display for Chunk {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Chunk::Accumulator => "accumulator",
            Chunk::Adder => "adder",
            Chunk::Divider => "divider",
            Chunk::SAGeneral => "sa-general",
            Chunk::SADiag => "sa-diag",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcessorKind {
    Accumulate,
    Add,
    Divide,
}

/// The divider array supports two operand routings; throughput is one
/// element per lane per cycle either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DividerPattern {
    SingleDivisor,
    MultiDivisor,
}

/// Cycles for a fully pipelined pre/post-processor pass over `elements`.
pub fn sim_preprocessor(
    kind: ProcessorKind,
    elements: u64,
    lanes: u64,
    pattern: Option<DividerPattern>,
) -> Result<u64, SimError> {
    if lanes == 0 {
        return Err(SimError::ZeroLanes);
    }
    match (kind, pattern) {
        (ProcessorKind::Divide, Some(_)) => {}
        (ProcessorKind::Divide, None) => return Err(SimError::MissingDividerPattern),
        (_, Some(_)) => return Err(SimError::PatternNotApplicable { kind }),
        (_, None) => {}
    }
    Ok(elements.div_ceil(lanes))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct BusyInterval {
    pub start_cycle: u64,
    pub end_cycle: u64,
    pub task: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ChunkTimeline {
    pub chunk: Chunk,
    pub intervals: Vec<BusyInterval>,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct AccessTallies {
    pub sram_reads: u64,
    pub sram_writes: u64,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq)]
pub struct EnergyBreakdown {
    pub data_access: f64,
    pub other_processors: f64,
    pub systolic_array: f64,
    pub overall: f64,
}

impl EnergyBreakdown {
    fn accumulate(&mut self, other: &EnergyBreakdown) {
        self.data_access += other.data_access;
        self.other_processors += other.other_processors;
        self.systolic_array += other.systolic_array;
        self.overall += other.overall;
    }

    pub fn minus(&self, other: &EnergyBreakdown) -> EnergyBreakdown {
        EnergyBreakdown {
            data_access: self.data_access - other.data_access,
            other_processors: self.other_processors - other.other_processors,
            systolic_array: self.systolic_array - other.systolic_array,
            overall: self.overall - other.overall,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    pub pipelined: bool,
    /// Also schedule the Q/K/V/O linear projections and the two MLP matmuls
    /// on SA-General. Off by default so the report covers the attention
    /// kernel alone.
    pub include_projections: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            pipelined: true,
            include_projections: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimReport {
    pub dataflow: DataflowKind,
    pub pipelined: bool,
    pub include_projections: bool,
    pub dims: AttentionDims,
    pub total_cycles: u64,
    pub total_seconds: f64,
    pub op_tallies: OpCounts,
    pub access_tallies: AccessTallies,
    pub energy: EnergyBreakdown,
    pub timelines: Vec<ChunkTimeline>,
}

struct InternalTallies {
    macs: u64,
    acc_ops: u64,
    add_ops: u64,
    div_ops: u64,
    reads: u64,
    writes: u64,
}

fn sum_tallies(tasks: &[TaskSpec]) -> InternalTallies {
    let mut t = InternalTallies {
        macs: 0,
        acc_ops: 0,
        add_ops: 0,
        div_ops: 0,
        reads: 0,
        writes: 0,
    };
    for task in tasks {
        t.macs += task.macs;
        t.acc_ops += task.acc_ops;
        t.add_ops += task.add_ops;
        t.div_ops += task.div_ops;
        t.reads += task.sram_reads;
        t.writes += task.sram_writes;
    }
    t
}

fn energy_from_tallies(
    tallies: &InternalTallies,
    table: &EnergyTable,
    dataflow: DataflowKind,
) -> EnergyBreakdown {
    let pe_factor = if dataflow == DataflowKind::GStationary {
        table.gs_pe_overhead
    } else {
        1.0
    };
    let systolic_array = table.e_mac * tallies.macs as f64 * pe_factor;
    let other_processors = table.e_acc * tallies.acc_ops as f64
        + table.e_add * tallies.add_ops as f64
        + table.e_div * tallies.div_ops as f64;
    let data_access = table.e_sram_access * (tallies.reads + tallies.writes) as f64;
    EnergyBreakdown {
        data_access,
        other_processors,
        systolic_array,
        overall: data_access + other_processors + systolic_array,
    }
}

struct StageBuilder<'a> {
    cfg: &'a AcceleratorConfig,
    dataflow: DataflowKind,
    tasks: Vec<TaskSpec>,
}

impl<'a> StageBuilder<'a> {
    fn push(&mut self, task: TaskSpec) -> usize {
        self.tasks.push(task);
        self.tasks.len() - 1
    }

    fn processor(
        &mut self,
        label: String,
        chunk: Chunk,
        elements: u64,
        lanes: u64,
        granules: u64,
        deps: Vec<(usize, DepKind)>,
        reads: u64,
        writes: u64,
    ) -> TaskSpec {
        let _ = self;
        let duration = elements.div_ceil(lanes);
        TaskSpec {
            label,
            chunk,
            duration,
            first_out: duration,
            granules,
            deps,
            sram_reads: reads,
            sram_writes: writes,
            macs: 0,
            acc_ops: 0,
            add_ops: 0,
            div_ops: 0,
        }
    }

    /// One full matmul task on SA-General, used for projections and MLP.
    fn plain_matmul(
        &mut self,
        label: String,
        n: u64,
        k: u64,
        m: u64,
        deps: Vec<(usize, DepKind)>,
    ) -> Result<usize, SimError> {
        let t = systolic_timing(
            (n, k),
            (k, m),
            (self.cfg.sa_general.rows, self.cfg.sa_general.cols),
            DataflowKind::InputStationary,
            false,
        )?;
        Ok(self.push(TaskSpec {
            label,
            chunk: Chunk::SAGeneral,
            duration: t.cycles,
            first_out: t.first_out,
            granules: n,
            deps,
            sram_reads: t.streamed_reads + t.stationary_reads,
            sram_writes: t.output_writes,
            macs: t.macs,
            acc_ops: 0,
            add_ops: 0,
            div_ops: 0,
        }))
    }

    /// The eleven attention tasks for one head. Returns the index of the
    /// final division task.
    fn head(
        &mut self,
        layer: u64,
        head: u64,
        n: u64,
        d: u64,
        proj: Option<(usize, usize, usize)>,
    ) -> Result<usize, SimError> {
        let cfg = self.cfg;
        let gs = self.dataflow == DataflowKind::GStationary;
        let nd = n * d;
        let tag = |step: &str| format!("layer{layer}/head{head}/{step}");
        let proj_deps = |idx: Option<usize>| -> Vec<(usize, DepKind)> {
            idx.map(|p| (p, DepKind::Blocking)).into_iter().collect()
        };
        let (p_q, p_k, p_v) = match proj {
            Some((q, k, v)) => (Some(q), Some(k), Some(v)),
            None => (None, None, None),
        };

        // Step 1: column sums of K, scale by 1/n, subtract.
        let mut t = self.processor(
            tag("k-colsum"),
            Chunk::Accumulator,
            nd,
            cfg.accumulator_lanes,
            1,
            proj_deps(p_k),
            nd,
            d,
        );
        t.acc_ops = nd;
        let t1_acc = self.push(t);

        let mut t = self.processor(
            tag("k-mean"),
            Chunk::Divider,
            d,
            cfg.divider_lanes,
            1,
            vec![(t1_acc, DepKind::Blocking)],
            d,
            d,
        );
        t.div_ops = d;
        let t1_div = self.push(t);

        // K̂ is emitted column by column.
        let mut t = self
            .processor(
                tag("k-center"),
                Chunk::Adder,
                nd,
                cfg.adder_lanes,
                d,
                vec![(t1_div, DepKind::Blocking)],
                nd + d,
                nd,
            )
            .uniform_emission();
        t.add_ops = nd;
        let t1_add = self.push(t);

        // Step 2: G = K̂ᵀ V. Down-forward pins V (input stationary);
        // G-stationary accumulates G in place (output stationary) and leaves
        // it resident, so it is never written to or read from SRAM.
        let g_timing = systolic_timing(
            (d, n),
            (n, d),
            (cfg.sa_general.rows, cfg.sa_general.cols),
            if gs {
                DataflowKind::OutputStationary
            } else {
                DataflowKind::InputStationary
            },
            gs,
        )?;
        let mut g_deps = vec![(t1_add, DepKind::Streamed)];
        g_deps.extend(proj_deps(p_v));
        let t2_sa = self.push(TaskSpec {
            label: tag("g-matmul"),
            chunk: Chunk::SAGeneral,
            duration: g_timing.cycles,
            first_out: g_timing.first_out,
            granules: 1,
            deps: g_deps,
            sram_reads: g_timing.streamed_reads + g_timing.stationary_reads,
            sram_writes: g_timing.output_writes,
            macs: g_timing.macs,
            acc_ops: 0,
            add_ops: 0,
            div_ops: 0,
        });

        // Step 3: column sums of V, then of K̂ as its columns arrive.
        let mut t = self.processor(
            tag("v-colsum"),
            Chunk::Accumulator,
            nd,
            cfg.accumulator_lanes,
            1,
            proj_deps(p_v),
            nd,
            d,
        );
        t.acc_ops = nd;
        let t3_acc_v = self.push(t);

        let mut t = self.processor(
            tag("khat-colsum"),
            Chunk::Accumulator,
            nd,
            cfg.accumulator_lanes,
            1,
            vec![(t1_add, DepKind::Streamed)],
            nd,
            d,
        );
        t.acc_ops = nd;
        let t3_acc_k = self.push(t);

        // Step 4 matvec: SA-Diag computes Q·k̂_sumᵀ with k̂_sum pinned.
        // Q is broadcast to SA-General and SA-Diag; its read is tallied once
        // on the Q·G task below.
        let diag_timing = systolic_timing(
            (n, d),
            (d, 1),
            (cfg.sa_diag.rows, cfg.sa_diag.cols),
            DataflowKind::InputStationary,
            false,
        )?;
        let mut diag_deps = vec![(t3_acc_k, DepKind::Blocking)];
        diag_deps.extend(proj_deps(p_q));
        let t4_sad = self.push(TaskSpec {
            label: tag("q-ksum-matvec"),
            chunk: Chunk::SADiag,
            duration: diag_timing.cycles,
            first_out: diag_timing.first_out,
            granules: n,
            deps: diag_deps,
            sram_reads: diag_timing.stationary_reads,
            sram_writes: n,
            macs: diag_timing.macs,
            acc_ops: 0,
            add_ops: 0,
            div_ops: 0,
        });

        // Step 4 bias: t_D = n√d + Q·k̂_sumᵀ, element by element.
        let mut t = self
            .processor(
                tag("t-d"),
                Chunk::Adder,
                n,
                cfg.adder_lanes,
                n,
                vec![(t4_sad, DepKind::Streamed)],
                n,
                n,
            )
            .uniform_emission();
        t.add_ops = n;
        let t4_add = self.push(t);

        // Step 5 matmul: Q·G row by row. Under G-stationary the operand is
        // already resident: no preload, no SRAM read of G.
        let qg_timing = systolic_timing(
            (n, d),
            (d, d),
            (cfg.sa_general.rows, cfg.sa_general.cols),
            DataflowKind::InputStationary,
            gs,
        )?;
        let mut qg_deps = vec![(t2_sa, DepKind::Blocking)];
        qg_deps.extend(proj_deps(p_q));
        let t5_sa = self.push(TaskSpec {
            label: tag("qg-matmul"),
            chunk: Chunk::SAGeneral,
            duration: qg_timing.cycles,
            first_out: qg_timing.first_out,
            granules: n,
            deps: qg_deps,
            sram_reads: qg_timing.streamed_reads + qg_timing.stationary_reads,
            sram_writes: qg_timing.output_writes,
            macs: qg_timing.macs,
            acc_ops: 0,
            add_ops: 0,
            div_ops: 0,
        });

        // Step 5 bias: T_N = √d(1·v_sum) + QG; the d-element scaling of
        // v_sum rides along as extra adder work.
        let mut t = self
            .processor(
                tag("t-n"),
                Chunk::Adder,
                nd + d,
                cfg.adder_lanes,
                n,
                vec![
                    (t5_sa, DepKind::Streamed),
                    (t3_acc_v, DepKind::Blocking),
                ],
                nd + d,
                nd,
            )
            .uniform_emission();
        t.add_ops = nd + d;
        let t5_add = self.push(t);

        // Step 6: Z = diag⁻¹(t_D)·T_N, multi-divisor row division.
        let mut t = self
            .processor(
                tag("z-div"),
                Chunk::Divider,
                nd,
                cfg.divider_lanes,
                n,
                vec![
                    (t5_add, DepKind::Streamed),
                    (t4_add, DepKind::Streamed),
                ],
                nd + n,
                nd,
            )
            .uniform_emission();
        t.div_ops = nd;
        Ok(self.push(t))
    }
}

fn build_stage_tasks(
    dims: &AttentionDims,
    cfg: &AcceleratorConfig,
    dataflow: DataflowKind,
    include_projections: bool,
) -> Result<Vec<TaskSpec>, SimError> {
    let mut b = StageBuilder {
        cfg,
        dataflow,
        tasks: Vec::new(),
    };
    let (n, d) = (dims.n, dims.d);
    let model_dim = dims.h * dims.d;
    for layer in 0..dims.layers {
        let proj = if include_projections {
            let q = b.plain_matmul(format!("layer{layer}/proj-q"), n, model_dim, model_dim, vec![])?;
            let k = b.plain_matmul(format!("layer{layer}/proj-k"), n, model_dim, model_dim, vec![])?;
            let v = b.plain_matmul(format!("layer{layer}/proj-v"), n, model_dim, model_dim, vec![])?;
            Some((q, k, v))
        } else {
            None
        };
        let mut z_tasks = Vec::with_capacity(dims.h as usize);
        for head in 0..dims.h {
            z_tasks.push(b.head(layer, head, n, d, proj)?);
        }
        if include_projections {
            let deps: Vec<(usize, DepKind)> =
                z_tasks.iter().map(|&z| (z, DepKind::Blocking)).collect();
            let o = b.plain_matmul(format!("layer{layer}/proj-o"), n, model_dim, model_dim, deps)?;
            let m1 = b.plain_matmul(
                format!("layer{layer}/mlp-up"),
                n,
                model_dim,
                4 * model_dim,
                vec![(o, DepKind::Blocking)],
            )?;
            b.plain_matmul(
                format!("layer{layer}/mlp-down"),
                n,
                4 * model_dim,
                model_dim,
                vec![(m1, DepKind::Blocking)],
            )?;
        }
    }
    Ok(b.tasks)
}

fn timelines_from_schedule(tasks: &[TaskSpec], sched: &[ScheduledTask]) -> Vec<ChunkTimeline> {
    Chunk::ALL
        .iter()
        .map(|&chunk| ChunkTimeline {
            chunk,
            intervals: tasks
                .iter()
                .zip(sched)
                .filter(|(t, _)| t.chunk == chunk)
                .map(|(t, s)| BusyInterval {
                    start_cycle: s.start,
                    end_cycle: s.end,
                    task: t.label.clone(),
                })
                .collect(),
        })
        .collect()
}

fn check_capacity(dims: &AttentionDims, cfg: &AcceleratorConfig) -> Result<(), SimError> {
    let needed = dims.n * dims.d;
    let available = cfg.sram_words_per_buffer();
    for buffer in crate::archmodel::SRAM_BUFFER_NAMES {
        if needed > available {
            return Err(SimError::SramCapacity {
                buffer,
                needed,
                available,
            });
        }
    }
    Ok(())
}

/// Simulate one attention stage (all `h·layers` head passes) under the given
/// composite dataflow. Deterministic: identical inputs give identical
/// reports, bit for bit.
pub fn sim_attention_layer(
    dims: &AttentionDims,
    cfg: &AcceleratorConfig,
    energy: &EnergyTable,
    dataflow: DataflowKind,
    options: SimOptions,
) -> Result<SimReport, SimError> {
    dims.validate()?;
    cfg.validate()?;
    energy.validate()?;
    if !matches!(
        dataflow,
        DataflowKind::GStationary | DataflowKind::DownForward
    ) {
        return Err(SimError::NotASchedule { dataflow });
    }
    check_capacity(dims, cfg)?;

    let tasks = build_stage_tasks(dims, cfg, dataflow, options.include_projections)?;
    let sched = schedule(&tasks, options.pipelined);
    let total_cycles = sched.iter().map(|s| s.end).max().unwrap_or(0);
    let tallies = sum_tallies(&tasks);
    let op_tallies = OpCounts {
        mul: tallies.macs,
        add: tallies.macs + tallies.acc_ops + tallies.add_ops,
        div: tallies.div_ops,
        exp: 0,
    };

    Ok(SimReport {
        dataflow,
        pipelined: options.pipelined,
        include_projections: options.include_projections,
        dims: *dims,
        total_cycles,
        total_seconds: total_cycles as f64 * cfg.seconds_per_cycle(),
        op_tallies,
        access_tallies: AccessTallies {
            sram_reads: tallies.reads,
            sram_writes: tallies.writes,
        },
        energy: energy_from_tallies(&tallies, energy, dataflow),
        timelines: timelines_from_schedule(&tasks, &sched),
    })
}

/// Aggregate of one dataflow's reports across a model's stages.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DataflowTotals {
    pub total_cycles: u64,
    pub op_tallies: OpCounts,
    pub access_tallies: AccessTallies,
    pub energy: EnergyBreakdown,
}

impl DataflowTotals {
    fn absorb(&mut self, report: &SimReport) -> Result<(), SimError> {
        self.total_cycles = self
            .total_cycles
            .checked_add(report.total_cycles)
            .ok_or(SimError::CycleOverflow {
                what: "stage cycle total",
            })?;
        self.op_tallies = self.op_tallies.checked_add(report.op_tallies)?;
        self.access_tallies.sram_reads += report.access_tallies.sram_reads;
        self.access_tallies.sram_writes += report.access_tallies.sram_writes;
        self.energy.accumulate(&report.energy);
        Ok(())
    }
}

/// The three orderings the dataflow study reports.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DataflowOrderings {
    pub df_overall_le_gs: bool,
    pub gs_data_access_le_df: bool,
    pub df_systolic_le_gs: bool,
}

impl DataflowOrderings {
    pub fn all_hold(&self) -> bool {
        self.df_overall_le_gs && self.gs_data_access_le_df && self.df_systolic_le_gs
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DataflowComparison {
    pub g_stationary: DataflowTotals,
    pub down_forward: DataflowTotals,
    /// Component-wise `g_stationary.energy − down_forward.energy`.
    pub gs_minus_df: EnergyBreakdown,
    pub orderings: DataflowOrderings,
}

/// Compare both composite dataflows over a multi-stage model (pipelined, no
/// projections), summing cycles, tallies, and energy across stages.
pub fn compare_dataflows_staged(
    stages: &[AttentionDims],
    cfg: &AcceleratorConfig,
    energy: &EnergyTable,
) -> Result<DataflowComparison, SimError> {
    let mut gs = DataflowTotals::default();
    let mut df = DataflowTotals::default();
    for dims in stages {
        gs.absorb(&sim_attention_layer(
            dims,
            cfg,
            energy,
            DataflowKind::GStationary,
            SimOptions::default(),
        )?)?;
        df.absorb(&sim_attention_layer(
            dims,
            cfg,
            energy,
            DataflowKind::DownForward,
            SimOptions::default(),
        )?)?;
    }
    let orderings = DataflowOrderings {
        df_overall_le_gs: df.energy.overall <= gs.energy.overall,
        gs_data_access_le_df: gs.energy.data_access <= df.energy.data_access,
        df_systolic_le_gs: df.energy.systolic_array <= gs.energy.systolic_array,
    };
    Ok(DataflowComparison {
        gs_minus_df: gs.energy.minus(&df.energy),
        g_stationary: gs,
        down_forward: df,
        orderings,
    })
}

/// Single-stage convenience wrapper around [`compare_dataflows_staged`].
pub fn compare_dataflows(
    dims: &AttentionDims,
    cfg: &AcceleratorConfig,
    energy: &EnergyTable,
) -> Result<DataflowComparison, SimError> {
    compare_dataflows_staged(std::slice::from_ref(dims), cfg, energy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archmodel::reference_energy_table;
    use crate::opcount::count_taylor;

    fn deit_tiny_stage() -> AttentionDims {
        AttentionDims::new(196, 64, 3, 12).unwrap()
    }

    fn sim(
        dims: &AttentionDims,
        dataflow: DataflowKind,
        pipelined: bool,
    ) -> SimReport {
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

    #[test]
    fn accumulator_fixture_196_rows_64_cols() {
        let cycles =
            sim_preprocessor(ProcessorKind::Accumulate, 196 * 64, 64, None).unwrap();
        assert_eq!(cycles, 196);
    }

    #[test]
    fn divider_fixture_multi_divisor() {
        let cycles = sim_preprocessor(
            ProcessorKind::Divide,
            12_544,
            64,
            Some(DividerPattern::MultiDivisor),
        )
        .unwrap();
        assert_eq!(cycles, 196);
    }

    #[test]
    fn adder_with_zero_elements_takes_zero_cycles() {
        assert_eq!(sim_preprocessor(ProcessorKind::Add, 0, 64, None).unwrap(), 0);
    }

    #[test]
    fn pattern_misuse_is_a_config_error() {
        assert!(matches!(
            sim_preprocessor(
                ProcessorKind::Accumulate,
                8,
                4,
                Some(DividerPattern::SingleDivisor)
            ),
            Err(SimError::PatternNotApplicable { .. })
        ));
        assert!(matches!(
            sim_preprocessor(ProcessorKind::Divide, 8, 4, None),
            Err(SimError::MissingDividerPattern)
        ));
        assert!(matches!(
            sim_preprocessor(ProcessorKind::Add, 8, 0, None),
            Err(SimError::ZeroLanes)
        ));
    }

    #[test]
    fn sequential_total_is_the_sum_of_task_durations() {
        let dims = deit_tiny_stage();
        let tasks = build_stage_tasks(
            &dims,
            &AcceleratorConfig::default(),
            DataflowKind::DownForward,
            false,
        )
        .unwrap();
        let expected: u64 = tasks.iter().map(|t| t.duration).sum();
        let report = sim(&dims, DataflowKind::DownForward, false);
        assert_eq!(report.total_cycles, expected);
    }

    #[test]
    fn pipelined_beats_sequential_for_deit_tiny() {
        let dims = deit_tiny_stage();
        let piped = sim(&dims, DataflowKind::DownForward, true);
        let seq = sim(&dims, DataflowKind::DownForward, false);
        assert!(
            piped.total_cycles < seq.total_cycles,
            "pipelined {} vs sequential {}",
            piped.total_cycles,
            seq.total_cycles
        );
    }

    #[test]
    fn pipelined_schedule_is_legal() {
        for dataflow in [DataflowKind::DownForward, DataflowKind::GStationary] {
            for (n, d, h, l) in [(196, 64, 1, 1), (7, 3, 2, 2), (64, 16, 3, 1), (1, 1, 1, 1)] {
                let dims = AttentionDims::new(n, d, h, l).unwrap();
                let tasks = build_stage_tasks(
                    &dims,
                    &AcceleratorConfig::default(),
                    dataflow,
                    false,
                )
                .unwrap();
                let sched = schedule(&tasks, true);
                pipeline::assert_schedule_legal(&tasks, &sched);
            }
        }
    }

    #[test]
    fn timelines_are_sorted_and_cover_the_makespan() {
        let report = sim(&deit_tiny_stage(), DataflowKind::DownForward, true);
        let mut max_end = 0;
        for tl in &report.timelines {
            let mut prev_end = 0;
            for iv in &tl.intervals {
                assert!(iv.start_cycle >= prev_end, "overlap in {}", tl.chunk);
                assert!(iv.end_cycle >= iv.start_cycle);
                prev_end = iv.end_cycle;
                max_end = max_end.max(iv.end_cycle);
            }
        }
        assert_eq!(report.total_cycles, max_end);
    }

    #[test]
    fn mac_tally_matches_the_closed_form_count() {
        // 2nd²·hL from the two general matmuls plus nd·hL from SA-Diag,
        // independent of dataflow and pipelining.
        for dims in [deit_tiny_stage(), AttentionDims::new(48, 16, 2, 5).unwrap()] {
            let expected = count_taylor(&dims).unwrap().mul;
            for dataflow in [DataflowKind::DownForward, DataflowKind::GStationary] {
                for pipelined in [false, true] {
                    let report = sim(&dims, dataflow, pipelined);
                    assert_eq!(report.op_tallies.mul, expected);
                }
            }
        }
    }

    #[test]
    fn div_tally_matches_the_closed_form_count() {
        let dims = deit_tiny_stage();
        let report = sim(&dims, DataflowKind::DownForward, true);
        assert_eq!(report.op_tallies.div, count_taylor(&dims).unwrap().div);
        assert_eq!(report.op_tallies.exp, 0);
    }

    #[test]
    fn g_traffic_is_zero_under_gs_and_2d2_under_df() {
        let dims = deit_tiny_stage();
        let gs = sim(&dims, DataflowKind::GStationary, true);
        let df = sim(&dims, DataflowKind::DownForward, true);
        let hl = dims.h * dims.layers;
        let delta_per_pass = 2 * dims.d * dims.d;
        assert_eq!(
            df.access_tallies.sram_reads - gs.access_tallies.sram_reads,
            delta_per_pass / 2 * hl
        );
        assert_eq!(
            df.access_tallies.sram_writes - gs.access_tallies.sram_writes,
            delta_per_pass / 2 * hl
        );
        // d=64: 8192 words of G traffic per head pass
        assert_eq!(delta_per_pass, 8192);
    }

    #[test]
    fn energy_components_sum_to_overall() {
        let report = sim(&deit_tiny_stage(), DataflowKind::GStationary, true);
        let e = &report.energy;
        assert!(
            (e.overall - (e.data_access + e.other_processors + e.systolic_array)).abs()
                <= f64::EPSILON * e.overall
        );
    }

    #[test]
    fn overhead_only_scales_the_gs_systolic_term() {
        let dims = deit_tiny_stage();
        let cfg = AcceleratorConfig::default();
        let mut hot = reference_energy_table();
        hot.gs_pe_overhead = 2.0;
        let base = reference_energy_table();

        let opts = SimOptions::default();
        let gs_base =
            sim_attention_layer(&dims, &cfg, &base, DataflowKind::GStationary, opts).unwrap();
        let gs_hot =
            sim_attention_layer(&dims, &cfg, &hot, DataflowKind::GStationary, opts).unwrap();
        assert_eq!(gs_base.energy.data_access, gs_hot.energy.data_access);
        assert_eq!(
            gs_base.energy.other_processors,
            gs_hot.energy.other_processors
        );
        assert!(gs_hot.energy.systolic_array > gs_base.energy.systolic_array);

        let df_base =
            sim_attention_layer(&dims, &cfg, &base, DataflowKind::DownForward, opts).unwrap();
        let df_hot =
            sim_attention_layer(&dims, &cfg, &hot, DataflowKind::DownForward, opts).unwrap();
        assert_eq!(df_base.energy.systolic_array, df_hot.energy.systolic_array);
    }

    #[test]
    fn unit_overhead_and_free_sram_make_the_dataflows_tie() {
        let mut table = reference_energy_table();
        table.gs_pe_overhead = 1.0;
        table.e_sram_access = 0.0;
        let cmp = compare_dataflows(
            &deit_tiny_stage(),
            &AcceleratorConfig::default(),
            &table,
        )
        .unwrap();
        assert_eq!(
            cmp.g_stationary.energy.overall,
            cmp.down_forward.energy.overall
        );
        assert!(cmp.orderings.all_hold());
    }

    #[test]
    fn reference_table_orders_the_dataflows_as_reported() {
        let cmp = compare_dataflows(
            &deit_tiny_stage(),
            &AcceleratorConfig::default(),
            &reference_energy_table(),
        )
        .unwrap();
        assert!(cmp.orderings.all_hold());
        assert!(cmp.down_forward.energy.overall < cmp.g_stationary.energy.overall);
        assert!(cmp.g_stationary.energy.data_access < cmp.down_forward.energy.data_access);
        assert!(cmp.down_forward.energy.systolic_array < cmp.g_stationary.energy.systolic_array);
        // calibrated PE-overhead ratio
        let ratio = cmp.g_stationary.energy.systolic_array / cmp.down_forward.energy.systolic_array;
        assert!((ratio - 1.125).abs() < 1e-12);
    }

    #[test]
    fn identical_runs_give_identical_reports() {
        let a = sim(&deit_tiny_stage(), DataflowKind::DownForward, true);
        let b = sim(&deit_tiny_stage(), DataflowKind::DownForward, true);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn oversized_stage_is_refused_with_buffer_name() {
        let dims = AttentionDims::new(512, 64, 1, 1).unwrap(); // 32768 words > 25600
        let err = sim_attention_layer(
            &dims,
            &AcceleratorConfig::default(),
            &reference_energy_table(),
            DataflowKind::DownForward,
            SimOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, SimError::SramCapacity { .. }), "{err}");
    }

    #[test]
    fn primitive_dataflows_are_not_attention_schedules() {
        let err = sim_attention_layer(
            &deit_tiny_stage(),
            &AcceleratorConfig::default(),
            &reference_energy_table(),
            DataflowKind::InputStationary,
            SimOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, SimError::NotASchedule { .. }));
    }

    #[test]
    fn projections_add_systolic_work_only_when_asked() {
        let dims = AttentionDims::new(49, 16, 4, 2).unwrap();
        let cfg = AcceleratorConfig::default();
        let table = reference_energy_table();
        let plain = sim_attention_layer(
            &dims,
            &cfg,
            &table,
            DataflowKind::DownForward,
            SimOptions::default(),
        )
        .unwrap();
        let with_proj = sim_attention_layer(
            &dims,
            &cfg,
            &table,
            DataflowKind::DownForward,
            SimOptions {
                pipelined: true,
                include_projections: true,
            },
        )
        .unwrap();
        assert!(with_proj.op_tallies.mul > plain.op_tallies.mul);
        assert!(with_proj.total_cycles > plain.total_cycles);
        // the attention-only MACs are still the closed-form count
        assert_eq!(plain.op_tallies.mul, count_taylor(&dims).unwrap().mul);
    }
}
