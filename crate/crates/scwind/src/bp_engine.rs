//! Flooding message-passing kernels over the unrolled coupled chain.
//!
//! The engine is schedule-agnostic: callers pick which contiguous range of
//! check rows and variable columns to sweep, and the windowed decoder drives
//! those sweeps. All messages, a-posteriori values, and channel LLRs are
//! saturated to `[-LLR_MAX, LLR_MAX]`.

use crate::sc_code::CoupledCode;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// Saturation bound for every LLR-valued quantity. `tanh(LLR_MAX / 2)` is
/// exactly 1.0 in double precision, so saturated messages behave as known
/// values inside check updates without overflowing anything.
pub const LLR_MAX: f64 = 50.0;

/// Check-node update rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CnRule {
    /// Exact sum-product (tanh rule). The default.
    SumProduct,
    /// Offset min-sum: `sign * max(min_excl - offset, 0)`.
    OffsetMinSum(f64),
}

impl Default for CnRule {
    fn default() -> Self {
        CnRule::SumProduct
    }
}

/// Flattened adjacency of the full terminated chain `H_sc`, shared by all
/// decodes of one code.
///
/// Edges are numbered check-major: the edges of check `c` occupy the
/// contiguous id range `check_offsets[c]..check_offsets[c+1]`, ordered by
/// ascending variable index. `var_edge_ids` lists each variable's edge ids
/// ordered by ascending check index.
#[derive(Debug, Clone)]
pub struct ChainAdjacency {
    pub num_vars: usize,
    pub num_checks: usize,
    /// Variables per spatial position.
    pub n: usize,
    /// Check rows per block row.
    pub m: usize,
    /// Spatial positions.
    pub l: usize,
    /// Coupling memory.
    pub mu: usize,
    check_offsets: Vec<u32>,
    check_vars: Vec<u32>,
    var_offsets: Vec<u32>,
    var_edge_ids: Vec<u32>,
    max_check_degree: usize,
}

impl ChainAdjacency {
    /// Unroll the terminated chain of `code`.
    pub fn new(code: &CoupledCode) -> Self {
        let num_vars = code.num_vars();
        let num_checks = code.num_checks();

        let mut check_offsets = Vec::with_capacity(num_checks + 1);
        let mut check_vars: Vec<u32> = Vec::new();
        check_offsets.push(0u32);
        for row in 0..num_checks {
            check_vars.extend(code.check_row_vars(row));
            check_offsets.push(check_vars.len() as u32);
        }

        let mut var_degree = vec![0u32; num_vars];
        for &v in &check_vars {
            var_degree[v as usize] += 1;
        }
        let mut var_offsets = Vec::with_capacity(num_vars + 1);
        var_offsets.push(0u32);
        for v in 0..num_vars {
            var_offsets.push(var_offsets[v] + var_degree[v]);
        }
        let mut cursor: Vec<u32> = var_offsets[..num_vars].to_vec();
        let mut var_edge_ids = vec![0u32; check_vars.len()];
        for (edge, &v) in check_vars.iter().enumerate() {
            var_edge_ids[cursor[v as usize] as usize] = edge as u32;
            cursor[v as usize] += 1;
        }

        let max_check_degree = (0..num_checks)
            .map(|c| (check_offsets[c + 1] - check_offsets[c]) as usize)
            .max()
            .unwrap_or(0);

        debug_assert_eq!(check_vars.len(), num_vars * code.spec.dv as usize);

        ChainAdjacency {
            num_vars,
            num_checks,
            n: code.n,
            m: code.m,
            l: code.spec.l,
            mu: code.mu(),
            check_offsets,
            check_vars,
            var_offsets,
            var_edge_ids,
            max_check_degree,
        }
    }

    /// Total edge count (`L * n * dv`).
    pub fn num_edges(&self) -> usize {
        self.check_vars.len()
    }

    /// Variable neighbours of check `c`.
    pub fn check_vars(&self, c: usize) -> &[u32] {
        let lo = self.check_offsets[c] as usize;
        let hi = self.check_offsets[c + 1] as usize;
        &self.check_vars[lo..hi]
    }

    /// Edge-id range of check `c`.
    pub fn check_edges(&self, c: usize) -> Range<usize> {
        self.check_offsets[c] as usize..self.check_offsets[c + 1] as usize
    }

    /// Edge ids incident to variable `v`.
    pub fn var_edges(&self, v: usize) -> &[u32] {
        let lo = self.var_offsets[v] as usize;
        let hi = self.var_offsets[v + 1] as usize;
        &self.var_edge_ids[lo..hi]
    }

    /// Global variable range of spatial position `p` (1-based).
    pub fn position_vars(&self, p: usize) -> Range<usize> {
        (p - 1) * self.n..p * self.n
    }

    /// Global check range of block row `b` (1-based, `1..=L+mu`).
    pub fn block_row_checks(&self, b: usize) -> Range<usize> {
        (b - 1) * self.m..b * self.m
    }
}

/// Per-decode message state: one f64 per edge and direction plus the
/// a-posteriori LLRs. Owned by exactly one decode in flight.
#[derive(Debug, Clone)]
pub struct MessageStore {
    /// Variable-to-check messages, indexed by edge id.
    pub v2c: Vec<f64>,
    /// Check-to-variable messages, indexed by edge id.
    pub c2v: Vec<f64>,
    /// A-posteriori LLR per variable.
    pub app: Vec<f64>,
    /// Positions (1-based, index 0 unused) that some variable sweep touched.
    activated: Vec<bool>,
    /// Number of check-node sweeps executed (complexity instrumentation).
    pub cn_sweeps: u64,
}

impl MessageStore {
    /// Fresh store for `adj`, loaded with the channel LLRs: `v2c = channel`,
    /// `c2v = 0`, `app = channel`.
    pub fn new(adj: &ChainAdjacency, channel: &[f64]) -> Self {
        assert_eq!(channel.len(), adj.num_vars, "channel length mismatch");
        let mut v2c = vec![0.0; adj.num_edges()];
        for v in 0..adj.num_vars {
            for &e in adj.var_edges(v) {
                v2c[e as usize] = channel[v];
            }
        }
        MessageStore {
            v2c,
            c2v: vec![0.0; adj.num_edges()],
            app: channel.to_vec(),
            activated: vec![false; adj.l + 1],
            cn_sweeps: 0,
        }
    }

    /// Has position `p` (1-based) been swept by any variable update?
    pub fn is_activated(&self, p: usize) -> bool {
        self.activated.get(p).copied().unwrap_or(false)
    }

    /// A-posteriori LLRs of position `p` (1-based).
    pub fn position_app(&self, adj: &ChainAdjacency, p: usize) -> Result<&[f64]> {
        if !self.is_activated(p) {
            return Err(Error::NotActivated(p));
        }
        Ok(&self.app[adj.position_vars(p)])
    }
}

/// One check-node sweep over the contiguous check range.
///
/// Sum-product: `c2v[e] = 2 atanh( prod_{e' != e} tanh(v2c[e'] / 2) )`,
/// evaluated with prefix/suffix products so no division by a small tanh ever
/// happens; a zero input simply zeroes every other outgoing message. Results
/// are clipped to `[-LLR_MAX, LLR_MAX]`.
pub fn cn_update(store: &mut MessageStore, adj: &ChainAdjacency, checks: Range<usize>, rule: CnRule) {
    store.cn_sweeps += 1;
    match rule {
        CnRule::SumProduct => cn_sum_product(store, adj, checks),
        CnRule::OffsetMinSum(offset) => cn_offset_min_sum(store, adj, checks, offset),
    }
}

fn cn_sum_product(store: &mut MessageStore, adj: &ChainAdjacency, checks: Range<usize>) {
    let mut tanhs = Vec::with_capacity(adj.max_check_degree);
    let mut prefix = Vec::with_capacity(adj.max_check_degree + 1);
    let mut suffix = vec![0.0f64; adj.max_check_degree + 1];
    for c in checks {
        let edges = adj.check_edges(c);
        let d = edges.len();
        tanhs.clear();
        tanhs.extend(store.v2c[edges.clone()].iter().map(|&x| (x * 0.5).tanh()));
        prefix.clear();
        prefix.push(1.0);
        for i in 0..d {
            let last = prefix[i];
            prefix.push(last * tanhs[i]);
        }
        suffix[d] = 1.0;
        for i in (0..d).rev() {
            suffix[i] = suffix[i + 1] * tanhs[i];
        }
        for (i, e) in edges.enumerate() {
            let p = prefix[i] * suffix[i + 1];
            store.c2v[e] = (2.0 * p.atanh()).clamp(-LLR_MAX, LLR_MAX);
        }
    }
}

fn cn_offset_min_sum(store: &mut MessageStore, adj: &ChainAdjacency, checks: Range<usize>, offset: f64) {
    for c in checks {
        let edges = adj.check_edges(c);
        let msgs = &store.v2c[edges.clone()];
        let mut sign_all = 1.0f64;
        let (mut min1, mut min2) = (f64::INFINITY, f64::INFINITY);
        let mut min1_idx = 0usize;
        for (i, &x) in msgs.iter().enumerate() {
            if x < 0.0 {
                sign_all = -sign_all;
            }
            let a = x.abs();
            if a < min1 {
                min2 = min1;
                min1 = a;
                min1_idx = i;
            } else if a < min2 {
                min2 = a;
            }
        }
        let lo = edges.start;
        for (i, e) in edges.enumerate() {
            let x = store.v2c[lo + i];
            let own_sign = if x < 0.0 { -1.0 } else { 1.0 };
            let mag = if i == min1_idx { min2 } else { min1 };
            let mag = (mag - offset).max(0.0);
            store.c2v[e] = (sign_all * own_sign * mag).clamp(-LLR_MAX, LLR_MAX);
        }
    }
}

/// One variable-node sweep over the contiguous variable range.
///
/// `v2c[e] = ch + sum_{e' != e} c2v[e']` (direct exclusion sums) and
/// `app = ch + sum c2v`, both clipped. Marks the touched positions activated.
pub fn vn_update(store: &mut MessageStore, adj: &ChainAdjacency, channel: &[f64], vars: Range<usize>) {
    for p in (vars.start / adj.n + 1)..=((vars.end.max(1) - 1) / adj.n + 1) {
        store.activated[p] = true;
    }
    for v in vars {
        let ch = channel[v];
        let edges = adj.var_edges(v);
        let mut total = ch;
        for &e in edges {
            total += store.c2v[e as usize];
        }
        store.app[v] = total.clamp(-LLR_MAX, LLR_MAX);
        for (i, &e) in edges.iter().enumerate() {
            let mut acc = ch;
            for (j, &e2) in edges.iter().enumerate() {
                if j != i {
                    acc += store.c2v[e2 as usize];
                }
            }
            store.v2c[e as usize] = acc.clamp(-LLR_MAX, LLR_MAX);
        }
    }
}

/// Soft bit-error-rate estimate from LLR magnitudes:
/// `(1/K) * sum_k 1 / (1 + exp(|L_k|))`.
pub fn soft_ber(llrs: &[f64]) -> Result<f64> {
    if llrs.is_empty() {
        return Err(Error::EmptyInput("soft_ber needs at least one LLR"));
    }
    let sum: f64 = llrs.iter().map(|&x| 1.0 / (1.0 + x.abs().exp())).sum();
    Ok(sum / llrs.len() as f64)
}

/// Hard decisions over a variable range: bit 1 iff `app < 0` (ties decide 0).
///
/// Errors if the range touches a position never swept by any window.
pub fn hard_decision(store: &MessageStore, adj: &ChainAdjacency, vars: Range<usize>) -> Result<Vec<u8>> {
    for p in (vars.start / adj.n + 1)..=((vars.end.max(1) - 1) / adj.n + 1) {
        if !store.is_activated(p) {
            return Err(Error::NotActivated(p));
        }
    }
    Ok(store.app[vars].iter().map(|&a| u8::from(a < 0.0)).collect())
}

/// Per-position syndrome over 1-based block rows `rows`: `true` where every
/// check in the block row is satisfied by the current hard decisions.
pub fn syndrome_ok(
    store: &MessageStore,
    adj: &ChainAdjacency,
    rows: std::ops::RangeInclusive<usize>,
) -> Result<Vec<bool>> {
    let mut out = Vec::new();
    for b in rows {
        for p in b.saturating_sub(adj.mu).max(1)..=b.min(adj.l) {
            if !store.is_activated(p) {
                return Err(Error::NotActivated(p));
            }
        }
        let ok = adj.block_row_checks(b).all(|c| {
            adj.check_vars(c)
                .iter()
                .fold(0u8, |acc, &v| acc ^ u8::from(store.app[v as usize] < 0.0))
                == 0
        });
        out.push(ok);
    }
    Ok(out)
}

/// Count bit errors of `bits` against the all-zero codeword, per position.
pub fn errors_per_position(bits: &[u8], l: usize, n: usize) -> Vec<u32> {
    assert_eq!(bits.len(), l * n);
    (0..l)
        .map(|p| bits[p * n..(p + 1) * n].iter().map(|&b| b as u32).sum())
        .collect()
}
