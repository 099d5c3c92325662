//! Construction of terminated spatially coupled LDPC codes.
//!
//! A code is described by a [`CodeSpec`]: a regular `(dv, dc)` protograph with
//! one check row, coupling memory `mu`, and an edge-spreading vector that
//! splits each variable node's `dv` edges over the sub-matrices `H_0..H_mu`.
//! Quasi-cyclic lifting with circulant size `Z` turns the base matrices into
//! the sparse blocks of the coupled chain. The terminated parity-check matrix
//! places `H_0` on the block diagonal and `H_i` on the `i`-th block
//! sub-diagonal, with block rows `1..=L+mu` and block columns `1..=L`.

mod alist;

pub use alist::{read_alist, write_alist};

use crate::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::path::Path;

/// Number of retries per circulant before accepting a shift that closes a
/// length-4 cycle.
const LIFT_RETRY_BUDGET: usize = 100;

/// Parameters of a terminated SC-LDPC code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSpec {
    /// Variable-node degree.
    pub dv: u32,
    /// Check-node degree.
    pub dc: u32,
    /// Coupling memory (>= 1).
    pub mu: u32,
    /// Edge-spreading split: `spread[i]` edges of each variable node go to
    /// `H_i`. Must sum to `dv` with at least two nonzero components.
    pub spread: Vec<u32>,
    /// Circulant lift size.
    #[serde(rename = "Z")]
    pub z: usize,
    /// Replication factor (number of spatial positions).
    #[serde(rename = "L")]
    pub l: usize,
    /// Seed for the pseudo-random circulant shifts.
    pub seed: u64,
}

impl CodeSpec {
    /// Desk-scale defaults: the paper-like `(5, 25)` degree profile at a 10x
    /// smaller circulant size, same chain length.
    pub fn desk_default(seed: u64) -> Self {
        CodeSpec {
            dv: 5,
            dc: 25,
            mu: 1,
            spread: vec![3, 2],
            z: 96,
            l: 99,
            seed,
        }
    }

    /// Full-scale parameters (960 x 4800 sub-matrices).
    pub fn paper_scale(seed: u64) -> Self {
        CodeSpec {
            z: 960,
            ..Self::desk_default(seed)
        }
    }

    /// Number of base-matrix columns (`dc / dv`).
    pub fn base_cols(&self) -> usize {
        (self.dc / self.dv) as usize
    }
}

/// Sparse binary matrix stored as adjacency lists in both directions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseBlock {
    /// Number of rows (`m`).
    pub rows: usize,
    /// Number of columns (`n`).
    pub cols: usize,
    /// For each row, the sorted column indices of its ones.
    pub row_cols: Vec<Vec<u32>>,
    /// For each column, the sorted row indices of its ones.
    pub col_rows: Vec<Vec<u32>>,
}

impl SparseBlock {
    /// Build from coordinate entries. Entries are kept as given (duplicates
    /// included), so [`validate`](CoupledCode::validate) can detect corrupt
    /// inputs.
    pub fn from_entries(rows: usize, cols: usize, entries: &[(u32, u32)]) -> Self {
        let mut row_cols = vec![Vec::new(); rows];
        let mut col_rows = vec![Vec::new(); cols];
        for &(r, c) in entries {
            assert!(
                (r as usize) < rows && (c as usize) < cols,
                "entry ({r}, {c}) out of bounds for {rows}x{cols}"
            );
            row_cols[r as usize].push(c);
            col_rows[c as usize].push(r);
        }
        for list in row_cols.iter_mut().chain(col_rows.iter_mut()) {
            list.sort_unstable();
        }
        SparseBlock {
            rows,
            cols,
            row_cols,
            col_rows,
        }
    }

    /// Total number of ones.
    pub fn num_entries(&self) -> usize {
        self.row_cols.iter().map(|r| r.len()).sum()
    }

    /// Entries in (row, col) order.
    pub fn entries(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.row_cols
            .iter()
            .enumerate()
            .flat_map(|(r, cols)| cols.iter().map(move |&c| (r as u32, c)))
    }

    fn has_duplicates(&self) -> bool {
        self.row_cols
            .iter()
            .any(|cols| cols.windows(2).any(|w| w[0] == w[1]))
    }
}

/// A lifted, terminated SC-LDPC code: the shared sub-matrices `H_0..H_mu`
/// plus chain geometry. Immutable after construction and safe to share
/// between concurrent decoders.
#[derive(Debug, Clone)]
pub struct CoupledCode {
    pub spec: CodeSpec,
    /// Sub-matrices `H_0..H_mu` (index = sub-diagonal).
    pub blocks: Vec<SparseBlock>,
    /// Check rows per spatial position (`m = Z`).
    pub m: usize,
    /// Variable columns per spatial position (`n = Z * dc/dv`).
    pub n: usize,
    /// Design rate of the terminated chain.
    pub rate: f64,
    /// True if the lifter exhausted its retry budget and accepted a shift
    /// that closes a length-4 cycle inside a block.
    pub degraded_girth: bool,
}

/// Build the base matrices `B_0..B_mu` of the edge-spread protograph.
///
/// Each `B_i` is a `1 x (dc/dv)` integer matrix whose entries all equal
/// `spread[i]`, so the stacked protograph has column sums `dv` and row sum
/// `dc`.
pub fn build_protograph(dv: u32, dc: u32, mu: u32, spread: &[u32]) -> Result<Vec<Vec<u32>>> {
    if dv == 0 || dc == 0 {
        return Err(Error::InvalidSpec("dv and dc must be positive".into()));
    }
    if mu == 0 {
        return Err(Error::InvalidSpec("coupling memory mu must be >= 1".into()));
    }
    if dc % dv != 0 {
        return Err(Error::InvalidSpec(format!(
            "dc = {dc} must be divisible by dv = {dv}"
        )));
    }
    if spread.len() != (mu + 1) as usize {
        return Err(Error::InvalidSpec(format!(
            "spread has {} components, expected mu + 1 = {}",
            spread.len(),
            mu + 1
        )));
    }
    if spread.iter().sum::<u32>() != dv {
        return Err(Error::InvalidSpec(format!(
            "spread {spread:?} must sum to dv = {dv}"
        )));
    }
    if spread.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::InvalidSpec(
            "spread must have at least two nonzero components (coupled code)".into(),
        ));
    }
    let cols = (dc / dv) as usize;
    Ok(spread.iter().map(|&s| vec![s; cols]).collect())
}

/// Quasi-cyclic lift of the base matrices.
///
/// Each base entry `e` becomes the superposition of `e` distinct `Z x Z`
/// circulant permutations with pseudo-random shifts. Shift selection rejects
/// choices that close a length-4 cycle inside the block, retrying up to a
/// fixed budget; exhausting the budget degrades girth but does not fail.
/// Deterministic for a fixed `(bases, z, seed)`.
pub fn lift(bases: &[Vec<u32>], z: usize, seed: u64) -> Result<(Vec<SparseBlock>, bool)> {
    if z == 0 {
        return Err(Error::InvalidSpec("lift size Z must be >= 1".into()));
    }
    let max_entry = bases
        .iter()
        .flat_map(|b| b.iter())
        .copied()
        .max()
        .unwrap_or(0) as usize;
    if z < max_entry {
        return Err(Error::InvalidSpec(format!(
            "Z = {z} too small: base entry {max_entry} needs that many distinct circulants"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut degraded = false;
    let mut blocks = Vec::with_capacity(bases.len());

    for base in bases {
        let cols = base.len();
        // Nonzero shift differences already present in this block; a repeat
        // (within or across column groups) closes a length-4 cycle.
        let mut diffs_seen: HashSet<usize> = HashSet::new();
        let mut entries: Vec<(u32, u32)> = Vec::new();

        for (j, &mult) in base.iter().enumerate() {
            let mut shifts: Vec<usize> = Vec::with_capacity(mult as usize);
            for _ in 0..mult {
                let mut chosen = None;
                for _ in 0..LIFT_RETRY_BUDGET {
                    let s = rng.random_range(0..z);
                    if shifts.contains(&s) {
                        continue; // circulants in one group must be distinct
                    }
                    let new_diffs: Vec<usize> = shifts
                        .iter()
                        .flat_map(|&t| [(z + s - t) % z, (z + t - s) % z])
                        .collect();
                    let clean = new_diffs.iter().all(|d| !diffs_seen.contains(d))
                        && new_diffs
                            .iter()
                            .enumerate()
                            .all(|(i, d)| !new_diffs[..i].contains(d));
                    if clean {
                        chosen = Some((s, new_diffs));
                        break;
                    }
                }
                let (s, new_diffs) = match chosen {
                    Some(picked) => picked,
                    None => {
                        // Give up on girth for this circulant: take any shift
                        // distinct within the group.
                        degraded = true;
                        let s = (0..z)
                            .map(|_| rng.random_range(0..z))
                            .find(|s| !shifts.contains(s))
                            .or_else(|| (0..z).find(|s| !shifts.contains(s)))
                            .expect("Z >= multiplicity guarantees a free shift");
                        let new_diffs = shifts
                            .iter()
                            .flat_map(|&t| [(z + s - t) % z, (z + t - s) % z])
                            .collect();
                        (s, new_diffs)
                    }
                };
                diffs_seen.extend(new_diffs);
                shifts.push(s);
                for r in 0..z {
                    entries.push((r as u32, (j * z + (r + s) % z) as u32));
                }
            }
        }
        blocks.push(SparseBlock::from_entries(z, z * cols, &entries));
    }
    Ok((blocks, degraded))
}

impl CoupledCode {
    /// Construct the code described by `spec`.
    pub fn build(spec: &CodeSpec) -> Result<CoupledCode> {
        if spec.l == 0 {
            return Err(Error::InvalidSpec("chain length L must be >= 1".into()));
        }
        let bases = build_protograph(spec.dv, spec.dc, spec.mu, &spec.spread)?;
        let (blocks, degraded_girth) = lift(&bases, spec.z, spec.seed)?;
        let m = spec.z;
        let n = spec.z * spec.base_cols();
        let l = spec.l;
        let mu = spec.mu as usize;
        let rate = 1.0 - ((l + mu) * m) as f64 / (l * n) as f64;
        Ok(CoupledCode {
            spec: spec.clone(),
            blocks,
            m,
            n,
            rate,
            degraded_girth,
        })
    }

    /// Coupling memory as a `usize`.
    pub fn mu(&self) -> usize {
        self.spec.mu as usize
    }

    /// Total variable count `L * n`.
    pub fn num_vars(&self) -> usize {
        self.spec.l * self.n
    }

    /// Total check count `(L + mu) * m` of the terminated chain.
    pub fn num_checks(&self) -> usize {
        (self.spec.l + self.mu()) * self.m
    }

    /// The sub-matrices present in block row `b` (1-based) of the terminated
    /// chain, as `(block_index, block_col)` pairs with `block_col` 1-based.
    pub fn block_row_entries(&self, b: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let l = self.spec.l;
        (0..=self.mu()).filter_map(move |i| {
            let col = b.checked_sub(i)?;
            (col >= 1 && col <= l).then_some((i, col))
        })
    }

    /// Column indices (global, 0-based, ascending) of check row `row` of the
    /// terminated chain.
    pub fn check_row_vars(&self, row: usize) -> Vec<u32> {
        let b = row / self.m + 1;
        let r_local = (row % self.m) as u32;
        let mut out = Vec::new();
        let mut parts: Vec<(usize, usize)> = self.block_row_entries(b).collect();
        parts.sort_by_key(|&(_, col)| col);
        for (i, col) in parts {
            let base = ((col - 1) * self.n) as u32;
            out.extend(
                self.blocks[i].row_cols[r_local as usize]
                    .iter()
                    .map(|&c| base + c),
            );
        }
        out
    }

    /// Validate all structural invariants and measure degree histograms.
    pub fn validate(&self) -> ValidationReport {
        let mut checks = Vec::new();
        let mu = self.mu();
        let l = self.spec.l;

        let dup = self.blocks.iter().any(|b| b.has_duplicates());
        checks.push(CheckResult::new(
            "no-duplicate-entries",
            !dup,
            if dup {
                "a sub-matrix holds a repeated (row, col) entry".into()
            } else {
                String::new()
            },
        ));

        // Column weight of the vertical stack [H_0; ...; H_mu] must be dv.
        let mut col_weight_hist = BTreeMap::new();
        let mut stack_ok = true;
        for c in 0..self.n {
            let w: usize = self.blocks.iter().map(|b| b.col_rows[c].len()).sum();
            *col_weight_hist.entry(w).or_insert(0usize) += 1;
            if w != self.spec.dv as usize {
                stack_ok = false;
            }
        }
        checks.push(CheckResult::new(
            "stack-column-weight",
            stack_ok,
            format!("expected dv = {} in every column", self.spec.dv),
        ));

        // Each lifted block must reproduce its base row/column weights.
        let base_ok = match build_protograph(self.spec.dv, self.spec.dc, self.spec.mu, &self.spec.spread) {
            Ok(bases) => bases.iter().zip(&self.blocks).all(|(base, block)| {
                let row_w: usize = base.iter().map(|&e| e as usize).sum();
                block.row_cols.iter().all(|r| r.len() == row_w)
                    && base.iter().enumerate().all(|(j, &e)| {
                        (j * self.spec.z..(j + 1) * self.spec.z)
                            .all(|c| block.col_rows[c].len() == e as usize)
                    })
            }),
            Err(_) => false,
        };
        checks.push(CheckResult::new(
            "lifted-weights",
            base_ok,
            "per-block row and column weights match the lifted protograph".into(),
        ));

        // Row weights of the terminated chain: <= dc everywhere, == dc at
        // interior positions mu+1..=L.
        let mut row_weight_hist = BTreeMap::new();
        let mut row_ok = true;
        for b in 1..=(l + mu) {
            let w: usize = self
                .block_row_entries(b)
                .map(|(i, _)| self.blocks[i].row_cols[0].len())
                .sum();
            *row_weight_hist.entry(w).or_insert(0usize) += self.m;
            if w > self.spec.dc as usize {
                row_ok = false;
            }
            if (mu + 1..=l).contains(&b) && w != self.spec.dc as usize {
                row_ok = false;
            }
        }
        checks.push(CheckResult::new(
            "row-weights",
            row_ok,
            format!("<= dc = {} with equality at interior positions", self.spec.dc),
        ));

        let rate_expected = 1.0 - ((l + mu) * self.m) as f64 / (l * self.n) as f64;
        checks.push(CheckResult::new(
            "termination-rate",
            (self.rate - rate_expected).abs() < 1e-12,
            format!("rate = 1 - (L+mu)m/(Ln) = {rate_expected:.6}"),
        ));

        ValidationReport {
            checks,
            col_weight_hist,
            row_weight_hist,
            degraded_girth: self.degraded_girth,
        }
    }

    /// Write `h0.alist..h{mu}.alist` plus `descriptor.json` into `dir`.
    pub fn export(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (i, block) in self.blocks.iter().enumerate() {
            write_alist(block, &dir.join(format!("h{i}.alist")))?;
        }
        let json = serde_json::to_string_pretty(&self.spec)?;
        std::fs::write(dir.join("descriptor.json"), json + "\n")?;
        Ok(())
    }

    /// Load a code previously written by [`export`](Self::export).
    pub fn import(dir: &Path) -> Result<CoupledCode> {
        let json = std::fs::read_to_string(dir.join("descriptor.json"))?;
        let spec: CodeSpec = serde_json::from_str(&json)?;
        let mut blocks = Vec::new();
        for i in 0..=spec.mu as usize {
            blocks.push(read_alist(&dir.join(format!("h{i}.alist")))?);
        }
        let m = spec.z;
        let n = spec.z * spec.base_cols();
        for (i, b) in blocks.iter().enumerate() {
            if b.rows != m || b.cols != n {
                return Err(Error::GeometryMismatch(format!(
                    "h{i}.alist is {}x{}, descriptor implies {m}x{n}",
                    b.rows, b.cols
                )));
            }
        }
        let rate = 1.0 - ((spec.l + spec.mu as usize) * m) as f64 / (spec.l * n) as f64;
        Ok(CoupledCode {
            spec,
            blocks,
            m,
            n,
            rate,
            degraded_girth: false,
        })
    }
}

/// Result of one structural check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, pass: bool, detail: String) -> Self {
        CheckResult { name, pass, detail }
    }
}

/// Validation outcome with measured degree histograms.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
    /// Stacked column weight -> column count.
    pub col_weight_hist: BTreeMap<usize, usize>,
    /// Chain check-row weight -> row count.
    pub row_weight_hist: BTreeMap<usize, usize>,
    pub degraded_girth: bool,
}

impl ValidationReport {
    pub fn all_ok(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Banded window view of Eq.-style windowed decoding: `w` block rows, block
/// row `r` (0-based) holding `H_mu..H_0` in block columns `r..=r+mu`. The
/// view maps indices onto the shared sub-matrices; nothing is copied.
#[derive(Debug, Clone, Copy)]
pub struct WindowView<'a> {
    code: &'a CoupledCode,
    w: usize,
}

/// View the `w`-block-row window structure of `code`.
pub fn assemble_window(code: &CoupledCode, w: usize) -> Result<WindowView<'_>> {
    if w < 1 || w > code.spec.l {
        return Err(Error::WindowOutOfRange { w, l: code.spec.l });
    }
    Ok(WindowView { code, w })
}

impl<'a> WindowView<'a> {
    pub fn block_rows(&self) -> usize {
        self.w
    }

    pub fn block_cols(&self) -> usize {
        self.w + self.code.mu()
    }

    /// Total rows `w * m`.
    pub fn rows(&self) -> usize {
        self.w * self.code.m
    }

    /// Total columns `(w + mu) * n`.
    pub fn cols(&self) -> usize {
        (self.w + self.code.mu()) * self.code.n
    }

    /// The sub-matrix at window block position `(r, c)` (0-based), if any.
    pub fn block_at(&self, r: usize, c: usize) -> Option<&'a SparseBlock> {
        let mu = self.code.mu();
        if r >= self.w || c >= self.w + mu {
            return None;
        }
        (c >= r && c <= r + mu).then(|| &self.code.blocks[mu - (c - r)])
    }

    /// Column indices (window-global, ascending) of window row `row`.
    pub fn row_cols(&self, row: usize) -> Vec<u32> {
        assert!(row < self.rows(), "window row {row} out of range");
        let (m, n, mu) = (self.code.m, self.code.n, self.code.mu());
        let br = row / m;
        let r_local = row % m;
        let mut out = Vec::new();
        for c in br..=(br + mu) {
            let block = self.block_at(br, c).expect("band block present");
            out.extend(block.row_cols[r_local].iter().map(|&x| (c * n) as u32 + x));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn protograph_splits_spread() {
        let bases = build_protograph(5, 25, 1, &[3, 2]).unwrap();
        assert_eq!(bases, vec![vec![3; 5], vec![2; 5]]);
        let bases = build_protograph(3, 6, 1, &[2, 1]).unwrap();
        assert_eq!(bases, vec![vec![2, 2], vec![1, 1]]);
    }

    #[test]
    fn protograph_rejects_bad_inputs() {
        assert!(matches!(
            build_protograph(5, 24, 1, &[3, 2]),
            Err(Error::InvalidSpec(_))
        ));
        // single nonzero spread component => uncoupled
        assert!(matches!(
            build_protograph(5, 25, 1, &[5, 0]),
            Err(Error::InvalidSpec(_))
        ));
        // spread does not sum to dv
        assert!(matches!(
            build_protograph(5, 25, 1, &[3, 3]),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn lift_multi_edge_weights() {
        // base entry 3 at Z=4: one column group of 3 distinct circulants.
        let (blocks, _) = lift(&[vec![3]], 4, 7).unwrap();
        let b = &blocks[0];
        assert_eq!((b.rows, b.cols), (4, 4));
        assert!(b.row_cols.iter().all(|r| r.len() == 3));
        assert!(b.col_rows.iter().all(|c| c.len() == 3));
        assert!(!b.has_duplicates());
    }

    #[test]
    fn lift_identity_for_z1() {
        let (blocks, _) = lift(&[vec![1, 1], vec![1, 0]], 1, 3).unwrap();
        assert_eq!(blocks[0].row_cols, vec![vec![0, 1]]);
        assert_eq!(blocks[1].row_cols, vec![vec![0]]);
    }

    #[test]
    fn lift_is_deterministic() {
        let bases = build_protograph(5, 25, 1, &[3, 2]).unwrap();
        let (a, _) = lift(&bases, 16, 42).unwrap();
        let (b, _) = lift(&bases, 16, 42).unwrap();
        assert_eq!(a, b);
        let (c, _) = lift(&bases, 16, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn lift_rejects_small_z() {
        assert!(lift(&[vec![3]], 2, 0).is_err());
    }

    #[test]
    fn lift_avoids_four_cycles_in_block() {
        // With Z = 96 and 5 groups of 3 + 5 groups of 2 shifts there is ample
        // room, so the budget should never be exhausted.
        let bases = build_protograph(5, 25, 1, &[3, 2]).unwrap();
        let (blocks, degraded) = lift(&bases, 96, 1).unwrap();
        assert!(!degraded);
        for b in &blocks {
            // Brute-force 4-cycle scan: any two rows may share at most one column.
            for r1 in 0..b.rows {
                for r2 in (r1 + 1)..b.rows {
                    let s1: HashSet<u32> = b.row_cols[r1].iter().copied().collect();
                    let shared = b.row_cols[r2].iter().filter(|c| s1.contains(c)).count();
                    assert!(shared <= 1, "rows {r1},{r2} share {shared} columns");
                }
            }
        }
    }

    #[test]
    fn coupled_code_dimensions_and_rate() {
        let spec = CodeSpec {
            dv: 3,
            dc: 6,
            mu: 1,
            spread: vec![2, 1],
            z: 4,
            l: 3,
            seed: 5,
        };
        let code = CoupledCode::build(&spec).unwrap();
        assert_eq!(code.m, 4);
        assert_eq!(code.n, 8);
        // terminated chain: (L+1)m x Ln = 4m x 3n
        assert_eq!(code.num_checks(), 4 * code.m);
        assert_eq!(code.num_vars(), 3 * code.n);
        let expect = 1.0 - (4.0 * 4.0) / (3.0 * 8.0);
        assert!((code.rate - expect).abs() < 1e-12);
        assert!(code.validate().all_ok());
    }

    #[test]
    fn validate_catches_duplicate_entry() {
        let spec = CodeSpec {
            dv: 3,
            dc: 6,
            mu: 1,
            spread: vec![2, 1],
            z: 4,
            l: 3,
            seed: 5,
        };
        let mut code = CoupledCode::build(&spec).unwrap();
        let dup = code.blocks[0].row_cols[0][0];
        code.blocks[0].row_cols[0].push(dup);
        code.blocks[0].row_cols[0].sort_unstable();
        let report = code.validate();
        assert!(!report.all_ok());
        let dup_check = report
            .checks
            .iter()
            .find(|c| c.name == "no-duplicate-entries")
            .unwrap();
        assert!(!dup_check.pass);
    }

    #[test]
    fn window_view_dimensions() {
        let spec = CodeSpec::desk_default(9);
        let code = CoupledCode::build(&spec).unwrap();
        // (mu=1, w=2): 2m x 3n with rows [H_1 H_0 .; . H_1 H_0]
        let v = assemble_window(&code, 2).unwrap();
        assert_eq!((v.rows(), v.cols()), (2 * code.m, 3 * code.n));
        assert!(std::ptr::eq(v.block_at(0, 0).unwrap(), &code.blocks[1]));
        assert!(std::ptr::eq(v.block_at(0, 1).unwrap(), &code.blocks[0]));
        assert!(v.block_at(0, 2).is_none());
        assert!(v.block_at(1, 0).is_none());
        assert!(std::ptr::eq(v.block_at(1, 1).unwrap(), &code.blocks[1]));
        assert!(std::ptr::eq(v.block_at(1, 2).unwrap(), &code.blocks[0]));

        // smallest window: one block row [H_1 H_0], m x 2n
        let v1 = assemble_window(&code, 1).unwrap();
        assert_eq!((v1.rows(), v1.cols()), (code.m, 2 * code.n));

        assert!(assemble_window(&code, 0).is_err());
        assert!(assemble_window(&code, code.spec.l + 1).is_err());
    }

    #[test]
    fn window_view_paper_scale_dims() {
        // (mu=1, w=9, m=960, n=4800) -> 8640 x 48000
        let spec = CodeSpec::paper_scale(1);
        let bases = build_protograph(spec.dv, spec.dc, spec.mu, &spec.spread).unwrap();
        assert_eq!(bases.len(), 2);
        let m = spec.z;
        let n = spec.z * spec.base_cols();
        assert_eq!((9 * m, (9 + 1) * n), (8640, 48000));
    }

    #[test]
    fn window_views_are_consistent_slices() {
        let spec = CodeSpec {
            dv: 3,
            dc: 6,
            mu: 1,
            spread: vec![2, 1],
            z: 4,
            l: 8,
            seed: 11,
        };
        let code = CoupledCode::build(&spec).unwrap();
        let v3 = assemble_window(&code, 3).unwrap();
        let v6 = assemble_window(&code, 6).unwrap();
        for row in 0..v3.rows() {
            assert_eq!(v3.row_cols(row), v6.row_cols(row));
        }
    }

    #[test]
    fn export_import_round_trip() {
        let spec = CodeSpec {
            dv: 5,
            dc: 25,
            mu: 1,
            spread: vec![3, 2],
            z: 8,
            l: 6,
            seed: 77,
        };
        let code = CoupledCode::build(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        code.export(dir.path()).unwrap();
        let loaded = CoupledCode::import(dir.path()).unwrap();
        assert_eq!(loaded.spec, code.spec);
        assert_eq!(loaded.blocks, code.blocks);
        assert!((loaded.rate - code.rate).abs() < 1e-15);
    }
}
