//! Deterministic task scheduling over the five chunks.
//!
//! Tasks are listed in a fixed topological order and each chunk executes its
//! tasks one at a time in that order. In the sequential schedule every task
//! waits for the previous one, anywhere, to finish; total latency is the sum
//! of durations. In the pipelined schedule a task starts once its chunk is
//! free and its dependencies allow:
//!
//! - a blocking dependency requires the producer to have finished;
//! - a streamed dependency lets the consumer start as soon as the producer
//!   has emitted its first granule (`producer.start + producer.first_out`),
//!   but the consumer cannot finish earlier than the producer's end plus the
//!   time to absorb one final granule (`ceil(duration / producer.granules)`).
//!
//! Since `first_out <= duration` and the final-granule lag never exceeds the
//! consumer's own duration, the pipelined makespan never exceeds the
//! sequential one.

use super::Chunk;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum DepKind {
    Blocking,
    Streamed,
}

#[derive(Debug, Clone)]
pub(crate) struct TaskSpec {
    pub label: String,
    pub chunk: Chunk,
    pub duration: u64,
    /// Offset from start to the first emitted granule; clamped to duration.
    pub first_out: u64,
    /// Number of output granules (columns, rows, or elements).
    pub granules: u64,
    pub deps: Vec<(usize, DepKind)>,
    pub sram_reads: u64,
    pub sram_writes: u64,
    pub macs: u64,
    pub acc_ops: u64,
    pub add_ops: u64,
    pub div_ops: u64,
}

impl TaskSpec {
    /// Uniform-emission task: `granules` outputs spread over the duration.
    pub fn uniform_emission(mut self) -> Self {
        debug_assert!(self.granules >= 1);
        self.first_out = self.duration.div_ceil(self.granules).min(self.duration);
        self
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct ScheduledTask {
    pub start: u64,
    pub end: u64,
}

pub(crate) fn schedule(tasks: &[TaskSpec], pipelined: bool) -> Vec<ScheduledTask> {
    if !pipelined {
        let mut clock = 0u64;
        return tasks
            .iter()
            .map(|t| {
                let start = clock;
                clock += t.duration;
                ScheduledTask { start, end: clock }
            })
            .collect();
    }

    let mut chunk_avail = [0u64; Chunk::ALL.len()];
    let mut out: Vec<ScheduledTask> = Vec::with_capacity(tasks.len());
    for t in tasks {
        let mut start = chunk_avail[t.chunk as usize];
        for &(p, kind) in &t.deps {
            let dep_ready = match kind {
                DepKind::Blocking => out[p].end,
                DepKind::Streamed => out[p].start + tasks[p].first_out,
            };
            start = start.max(dep_ready);
        }
        let mut end = start + t.duration;
        for &(p, kind) in &t.deps {
            if kind == DepKind::Streamed {
                let lag = t.duration.div_ceil(tasks[p].granules.max(1));
                end = end.max(out[p].end + lag);
            }
        }
        chunk_avail[t.chunk as usize] = end;
        out.push(ScheduledTask { start, end });
    }
    out
}

/// Check a pipelined schedule against the dependency graph: no consumer
/// starts before its producers have emitted what it needs, none finishes
/// before its streamed producers finish, and chunks never overlap.
#[cfg(test)]
pub(crate) fn assert_schedule_legal(tasks: &[TaskSpec], sched: &[ScheduledTask]) {
    let mut last_end = [0u64; Chunk::ALL.len()];
    for (i, (t, s)) in tasks.iter().zip(sched).enumerate() {
        assert!(
            s.start >= last_end[t.chunk as usize],
            "task {i} ({}) overlaps its chunk",
            t.label
        );
        last_end[t.chunk as usize] = s.end;
        for &(p, kind) in &t.deps {
            match kind {
                DepKind::Blocking => assert!(
                    s.start >= sched[p].end,
                    "task {i} ({}) starts before blocking producer {p} ends",
                    t.label
                ),
                DepKind::Streamed => {
                    assert!(
                        s.start >= sched[p].start + tasks[p].first_out,
                        "task {i} ({}) starts before producer {p} emits",
                        t.label
                    );
                    assert!(
                        s.end >= sched[p].end,
                        "task {i} ({}) finishes before streamed producer {p} does",
                        t.label
                    );
                }
            }
        }
    }
}
