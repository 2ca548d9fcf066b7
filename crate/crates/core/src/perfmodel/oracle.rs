//! Cycle-by-cycle systolic array simulator, used only to pin down the closed
//! forms in the parent module.
//!
//! The array is always simulated at full size: tiles at the GEMM edge are
//! zero-padded, so padded PEs see valid zero operands. Operands move one PE
//! per cycle. The simulator also computes the GEMM itself, and the result is
//! checked against a naive product, so a wrong schedule cannot pass silently.

use super::{dram_traffic, memory_cycles, AccelConfig, Dataflow, GemmShape, LayerProfile};
use crate::error::{Error, Result};

pub const ORACLE_MAX_ARRAY: u32 = 4;
pub const ORACLE_MAX_DIM: u64 = 8;

#[derive(Default)]
struct Counters {
    cycles: u64,
    reads: u64,
    writes: u64,
}

pub fn oracle_simulate(g: &GemmShape, cfg: &AccelConfig) -> Result<LayerProfile> {
    let a: Vec<i64> = (0..g.m * g.k).map(|i| (i as i64 * 7 + 3) % 11 - 5).collect();
    let b: Vec<i64> = (0..g.k * g.n).map(|i| (i as i64 * 5 + 1) % 13 - 6).collect();
    oracle_simulate_with_data(g, cfg, &a, &b).map(|(p, _)| p)
}

/// Simulates `C = A·B` with row-major `a` (m×k) and `b` (k×n).
pub fn oracle_simulate_with_data(
    g: &GemmShape,
    cfg: &AccelConfig,
    a: &[i64],
    b: &[i64],
) -> Result<(LayerProfile, Vec<i64>)> {
    if cfg.array_rows > ORACLE_MAX_ARRAY || cfg.array_cols > ORACLE_MAX_ARRAY {
        return Err(Error::InstanceTooLarge(format!(
            "array {}x{} exceeds {ORACLE_MAX_ARRAY}x{ORACLE_MAX_ARRAY}",
            cfg.array_rows, cfg.array_cols
        )));
    }
    if g.m > ORACLE_MAX_DIM || g.n > ORACLE_MAX_DIM || g.k > ORACLE_MAX_DIM {
        return Err(Error::InstanceTooLarge(format!("GEMM {}x{}x{} exceeds {ORACLE_MAX_DIM}", g.m, g.n, g.k)));
    }
    cfg.validate()?;
    let (m, n, k) = (g.m as usize, g.n as usize, g.k as usize);
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), k * n);

    let mut out = vec![0i64; m * n];
    let mut ctr = Counters::default();
    match cfg.dataflow {
        Dataflow::OutputStationary => simulate_os(m, n, k, cfg, a, b, &mut out, &mut ctr),
        Dataflow::WeightStationary => simulate_ws(m, n, k, cfg, a, b, &mut out, &mut ctr),
    }

    let mut expect = vec![0i64; m * n];
    for i in 0..m {
        for j in 0..n {
            expect[i * n + j] = (0..k).map(|t| a[i * k + t] * b[t * n + j]).sum();
        }
    }
    if expect != out {
        return Err(Error::Numerical("systolic schedule produced a wrong product".into()));
    }

    // Final ofmap is read once for write-back.
    ctr.reads += (m * n) as u64;
    let bpe = cfg.bytes_per_element as u64;
    let traffic = dram_traffic(g, cfg);
    let mem = memory_cycles(traffic.total(), cfg.dram_bandwidth);
    let profile = LayerProfile {
        compute_cycles: ctr.cycles,
        memory_cycles: mem,
        total_cycles: ctr.cycles.max(mem),
        dram_traffic: traffic.total(),
        sram_reads: ctr.reads * bpe,
        sram_writes: ctr.writes * bpe + traffic.inbound,
        macs: g.macs(),
    };
    Ok((profile, out))
}

#[allow(clippy::too_many_arguments)]
fn simulate_os(m: usize, n: usize, k: usize, cfg: &AccelConfig, a: &[i64], b: &[i64], out: &mut [i64], ctr: &mut Counters) {
    let rows = cfg.array_rows as usize;
    let cols = cfg.array_cols as usize;
    for r0 in (0..m).step_by(rows) {
        for c0 in (0..n).step_by(cols) {
            // a_reg flows right, b_reg flows down; None means no data yet.
            let mut a_reg = vec![vec![None::<i64>; cols]; rows];
            let mut b_reg = vec![vec![None::<i64>; cols]; rows];
            let mut acc = vec![vec![0i64; cols]; rows];
            let mut last_active = None;
            let mut t = 0usize;
            loop {
                let mut na = vec![vec![None; cols]; rows];
                let mut nb = vec![vec![None; cols]; rows];
                for i in 0..rows {
                    for j in (1..cols).rev() {
                        na[i][j] = a_reg[i][j - 1];
                    }
                    na[i][0] = if t >= i && t - i < k {
                        let row = r0 + i;
                        if row < m {
                            ctr.reads += 1;
                            Some(a[row * k + (t - i)])
                        } else {
                            Some(0)
                        }
                    } else {
                        None
                    };
                }
                for j in 0..cols {
                    for i in (1..rows).rev() {
                        nb[i][j] = b_reg[i - 1][j];
                    }
                    nb[0][j] = if t >= j && t - j < k {
                        let col = c0 + j;
                        if col < n {
                            ctr.reads += 1;
                            Some(b[(t - j) * n + col])
                        } else {
                            Some(0)
                        }
                    } else {
                        None
                    };
                }
                a_reg = na;
                b_reg = nb;
                let mut any = false;
                for i in 0..rows {
                    for j in 0..cols {
                        if let (Some(x), Some(y)) = (a_reg[i][j], b_reg[i][j]) {
                            acc[i][j] += x * y;
                            any = true;
                        }
                    }
                }
                if any {
                    last_active = Some(t);
                }
                let injecting = t < k + rows.max(cols);
                let in_flight = a_reg.iter().flatten().any(|v| v.is_some());
                if !any && !injecting && !in_flight {
                    break;
                }
                t += 1;
            }
            ctr.cycles += last_active.map_or(0, |c| c as u64 + 1);
            for i in 0..rows {
                for j in 0..cols {
                    let (row, col) = (r0 + i, c0 + j);
                    if row < m && col < n {
                        out[row * n + col] = acc[i][j];
                        ctr.writes += 1;
                    }
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn simulate_ws(m: usize, n: usize, k: usize, cfg: &AccelConfig, a: &[i64], b: &[i64], out: &mut [i64], ctr: &mut Counters) {
    let rows = cfg.array_rows as usize;
    let cols = cfg.array_cols as usize;
    for (fold_k, k0) in (0..k).step_by(rows).enumerate() {
        for c0 in (0..n).step_by(cols) {
            // Preload: weights enter the top row and shift down one row per
            // cycle, the deepest row first.
            let mut w = vec![vec![None::<i64>; cols]; rows];
            for p in 0..rows {
                for i in (1..rows).rev() {
                    for j in 0..cols {
                        w[i][j] = w[i - 1][j];
                    }
                }
                let src = rows - 1 - p;
                for j in 0..cols {
                    let (kk, col) = (k0 + src, c0 + j);
                    w[0][j] = Some(if kk < k && col < n {
                        ctr.reads += 1;
                        b[kk * n + col]
                    } else {
                        0
                    });
                }
                ctr.cycles += 1;
            }

            // Stream: activations move right, partial sums move down.
            let mut a_reg = vec![vec![None::<i64>; cols]; rows];
            let mut p_reg = vec![vec![None::<i64>; cols]; rows];
            let mut last_active = None;
            let mut t = 0usize;
            loop {
                let mut na = vec![vec![None; cols]; rows];
                for i in 0..rows {
                    for j in (1..cols).rev() {
                        na[i][j] = a_reg[i][j - 1];
                    }
                    na[i][0] = if t >= i && t - i < m {
                        let (row, kk) = (t - i, k0 + i);
                        if kk < k {
                            ctr.reads += 1;
                            Some(a[row * k + kk])
                        } else {
                            Some(0)
                        }
                    } else {
                        None
                    };
                }
                a_reg = na;
                let mut np = vec![vec![None; cols]; rows];
                let mut any = false;
                for i in 0..rows {
                    for j in 0..cols {
                        if let Some(x) = a_reg[i][j] {
                            let incoming = if i == 0 { 0 } else { p_reg[i - 1][j].unwrap_or(0) };
                            np[i][j] = Some(incoming + x * w[i][j].unwrap_or(0));
                            any = true;
                        }
                    }
                }
                // Bottom row results leave the array this cycle.
                for j in 0..cols {
                    if let Some(v) = np[rows - 1][j] {
                        if let Some(r) = (t + 1).checked_sub(rows + j) {
                            let col = c0 + j;
                            if r < m && col < n {
                                if fold_k > 0 {
                                    ctr.reads += 1;
                                }
                                out[r * n + col] += v;
                                ctr.writes += 1;
                            }
                        }
                    }
                }
                p_reg = np;
                if any {
                    last_active = Some(t);
                }
                let injecting = t < m + rows;
                if !any && !injecting {
                    break;
                }
                t += 1;
            }
            ctr.cycles += last_active.map_or(0, |c| c as u64 + 1);
        }
    }
}
