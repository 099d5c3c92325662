//! The windowed decoding state machine.
//!
//! A window of `w` check-block rows (covering `w + mu` variable blocks)
//! slides along the coupled chain, keeping all messages between shifts.
//! Outer steps are indexed by `p_win in 1..=N_win` with
//! `N_win = L + w + mu - 1`: the window ramps in over virtual positions left
//! of the chain and ramps out past its end, so every position spends the full
//! `w + mu` steps inside the window before its output is committed. Virtual
//! positions hold known values, which is equivalent to clamping the active
//! row and column ranges to the terminated chain.
//!
//! Four traversal schemes are provided:
//!
//! - fixed: exactly `I` iterations per window,
//! - AID: adaptive iteration count between `i_min` and `i_max`,
//! - WSD: on a stall at `i_min`, shift the window back by `n_b` and keep
//!   iterating up to `i_max`,
//! - WTD: like WSD, but once the stall clears jump forward again and then
//!   track the wave one position per clean iteration.
//!
//! Stall detection is pluggable (parity or soft-BER based); scripted
//! detectors can be injected for trace tests since any
//! `FnMut(&DetectContext) -> bool` implements [`StallDetector`].

use crate::bp_engine::{self, ChainAdjacency, CnRule, MessageStore};
use crate::channel::LlrFrame;
use crate::sc_code::CoupledCode;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// Which stall detector the decoder builds internally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetectorKind {
    /// Parity checks of the inspected block row must all hold.
    Parity,
    /// Soft BER of the inspected position must stay below `delta_ber`.
    Llr,
}

/// Windowed decoder parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    /// Window size in check-block rows.
    pub w: usize,
    /// Minimum iterations per window.
    pub i_min: u32,
    /// Maximum iterations per window.
    pub i_max: u32,
    /// Backward-shift distance in blocks (WSD/WTD).
    pub n_b: usize,
    pub detector: DetectorKind,
    /// Soft-BER stall threshold of the LLR detector.
    pub delta_ber: f64,
    /// Ordinal of the inspected window position (1 = leftmost).
    pub detect_position: usize,
    /// Consecutive erroneous blocks required to mark a stall.
    pub eta: usize,
    /// Per-block error fraction above which a block counts as erroneous.
    pub delta: f64,
    pub cn_rule: CnRule,
    /// Safety valve: total backward shifts allowed per decode. A stall that
    /// never clears would otherwise bounce the window at the commitment
    /// frontier forever.
    pub max_backshifts: u32,
}

impl DecoderConfig {
    /// Defaults used throughout the experiments: `i_min = 3`, `i_max = 6`,
    /// `n_b = 2`, LLR detection with `delta_ber = 1e-7` at window position 3.
    pub fn new(w: usize) -> Self {
        DecoderConfig {
            w,
            i_min: 3,
            i_max: 6,
            n_b: 2,
            detector: DetectorKind::Llr,
            delta_ber: 1e-7,
            detect_position: 3,
            eta: 1,
            delta: 0.01,
            cn_rule: CnRule::SumProduct,
            max_backshifts: 64,
        }
    }
}

/// Window traversal scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Fixed iteration count per window.
    Fixed { iters: u32 },
    /// Fixed count, raised to `boost` for windows whose output position lies
    /// in `from..=to` (1-based blocks). Used by the manipulation experiment.
    FixedBoost {
        iters: u32,
        boost: u32,
        from: usize,
        to: usize,
    },
    /// Adaptive iterations decoder.
    Aid,
    /// Window shift decoder.
    Wsd,
    /// Wave tracking decoder.
    Wtd,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::Fixed { iters } => write!(f, "fixed{iters}"),
            Scheme::FixedBoost {
                iters,
                boost,
                from,
                to,
            } => write!(f, "fixed{iters}+{boost}@{from}-{to}"),
            Scheme::Aid => write!(f, "aid"),
            Scheme::Wsd => write!(f, "wsd"),
            Scheme::Wtd => write!(f, "wtd"),
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aid" => Ok(Scheme::Aid),
            "wsd" => Ok(Scheme::Wsd),
            "wtd" => Ok(Scheme::Wtd),
            _ => {
                if let Some(n) = s.strip_prefix("fixed") {
                    let iters: u32 = n.parse().map_err(|_| {
                        Error::InvalidConfig(format!("bad fixed iteration count in {s:?}"))
                    })?;
                    if iters == 0 {
                        return Err(Error::InvalidConfig("fixed0 is not a decoder".into()));
                    }
                    Ok(Scheme::Fixed { iters })
                } else {
                    Err(Error::InvalidConfig(format!(
                        "unknown scheme {s:?} (expected fixedN | aid | wsd | wtd)"
                    )))
                }
            }
        }
    }
}

/// State a detector may inspect after an iteration.
pub struct DetectContext<'a> {
    pub store: &'a MessageStore,
    pub adj: &'a ChainAdjacency,
    /// Inspected spatial position (1-based).
    pub position: usize,
    /// Current outer window index.
    pub p_win: usize,
    /// Iteration number inside the current window (1-based).
    pub iteration: u32,
}

/// Retrospective stall detection hook, run after every window iteration.
pub trait StallDetector {
    fn check(&mut self, ctx: &DetectContext<'_>) -> bool;
}

impl<F: FnMut(&DetectContext<'_>) -> bool> StallDetector for F {
    fn check(&mut self, ctx: &DetectContext<'_>) -> bool {
        self(ctx)
    }
}

/// Fires when any parity check of the inspected block row is violated.
pub struct ParityDetector;

impl StallDetector for ParityDetector {
    fn check(&mut self, ctx: &DetectContext<'_>) -> bool {
        let ok = bp_engine::syndrome_ok(ctx.store, ctx.adj, ctx.position..=ctx.position)
            .expect("inspected position is active");
        !ok[0]
    }
}

/// Fires when the soft BER of the inspected position exceeds `delta_ber`.
pub struct LlrDetector {
    pub delta_ber: f64,
}

impl StallDetector for LlrDetector {
    fn check(&mut self, ctx: &DetectContext<'_>) -> bool {
        let app = ctx
            .store
            .position_app(ctx.adj, ctx.position)
            .expect("inspected position is active");
        bp_engine::soft_ber(app).expect("position is non-empty") > self.delta_ber
    }
}

/// One `(iterations, window size)` entry per contiguous run of iterations at
/// one window position.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityLedger {
    pub entries: Vec<(u32, u32)>,
}

impl ComplexityLedger {
    /// Number of visited windows `N_w`.
    pub fn num_windows(&self) -> usize {
        self.entries.len()
    }

    /// Total iterations, which must equal the instrumented CN sweep count.
    pub fn total_iterations(&self) -> u64 {
        self.entries.iter().map(|&(i, _)| i as u64).sum()
    }
}

/// Average complexity: mean over ledger entries of `I_i * w_i`.
pub fn average_complexity(ledger: &ComplexityLedger) -> Result<f64> {
    if ledger.entries.is_empty() {
        return Err(Error::EmptyInput("ledger has no entries"));
    }
    let sum: f64 = ledger
        .entries
        .iter()
        .map(|&(i, w)| i as f64 * w as f64)
        .sum();
    Ok(sum / ledger.entries.len() as f64)
}

/// First position opening a run of `eta` consecutive blocks whose error
/// fraction exceeds `delta` (1-based), if any.
pub fn find_stall_position(
    per_position_errors: &[u32],
    n: usize,
    delta: f64,
    eta: usize,
) -> Option<usize> {
    assert!(eta >= 1, "eta must be >= 1");
    let bad: Vec<bool> = per_position_errors
        .iter()
        .map(|&e| e as f64 / n as f64 > delta)
        .collect();
    (0..=bad.len().saturating_sub(eta))
        .find(|&i| bad.get(i..i + eta).is_some_and(|run| run.iter().all(|&b| b)))
        .filter(|_| bad.len() >= eta)
        .map(|i| i + 1)
}

/// Post-decoding BER approximation from stall statistics:
/// `(1 - E[s]/L) * P_e,pre * P_stall`.
pub fn estimate_post_ber(e_s: f64, l: usize, p_pre: f64, p_stall: f64) -> f64 {
    (1.0 - e_s / l as f64) * p_pre * p_stall
}

/// Stall analysis of one decode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StallRecord {
    /// Stall start position (1-based), if the output contains one.
    pub s: Option<usize>,
    /// Bit errors per spatial position.
    pub per_position_errors: Vec<u32>,
    /// The detector fired during decoding but the output carries no stall.
    pub recovered: bool,
}

/// Per-outer-step trace entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceStep {
    /// Window index at the start of the step.
    pub p_win: usize,
    /// Iterations spent during the step (across inner shifts).
    pub iterations: u32,
    /// Whether detection fired at least once during the step.
    pub detector_fired: bool,
    /// Signed inner shifts in order of occurrence.
    pub shifts: Vec<i64>,
}

/// Everything a decode produces.
#[derive(Debug, Clone)]
pub struct DecodeOutcome {
    /// Hard decisions for all `L * n` bits, committed as each position left
    /// the window.
    pub decisions: Vec<u8>,
    pub stall: StallRecord,
    pub ledger: ComplexityLedger,
    pub trace: Vec<TraceStep>,
    /// Whether detection fired at any point.
    pub detector_fired: bool,
}

impl DecodeOutcome {
    /// Total bit errors against the all-zero codeword.
    pub fn bit_errors(&self) -> u64 {
        self.stall.per_position_errors.iter().map(|&e| e as u64).sum()
    }
}

/// Windowed decoder bound to one code. Immutable once built; decodes may run
/// concurrently from multiple threads, each with its own message store.
pub struct WindowDecoder<'a> {
    code: &'a CoupledCode,
    adj: ChainAdjacency,
    config: DecoderConfig,
}

impl<'a> WindowDecoder<'a> {
    pub fn new(code: &'a CoupledCode, config: DecoderConfig) -> Result<Self> {
        let mu = code.mu();
        if config.w < 1 {
            return Err(Error::InvalidConfig("window size w must be >= 1".into()));
        }
        if !(1 <= config.i_min && config.i_min <= config.i_max) {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= i_min <= i_max, got {} and {}",
                config.i_min, config.i_max
            )));
        }
        if !(1 <= config.n_b && config.n_b < config.w) {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= n_b < w, got n_b = {} and w = {}",
                config.n_b, config.w
            )));
        }
        if !(1 <= config.detect_position && config.detect_position <= config.w + mu) {
            return Err(Error::InvalidConfig(format!(
                "detect_position {} outside 1..={}",
                config.detect_position,
                config.w + mu
            )));
        }
        if config.eta < 1 {
            return Err(Error::InvalidConfig("eta must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&config.delta) {
            return Err(Error::InvalidConfig("delta must be in [0, 1)".into()));
        }
        Ok(WindowDecoder {
            adj: ChainAdjacency::new(code),
            code,
            config,
        })
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    pub fn adjacency(&self) -> &ChainAdjacency {
        &self.adj
    }

    /// Whether the window covers the whole chain, degenerating to full BP.
    pub fn covers_chain(&self) -> bool {
        self.config.w >= self.code.spec.l
    }

    /// Number of outer steps of the forward traversal.
    pub fn n_win(&self) -> usize {
        if self.covers_chain() {
            1
        } else {
            self.code.spec.l + self.config.w + self.code.mu() - 1
        }
    }

    /// Decode with the detector named in the config.
    pub fn decode(&self, frame: &LlrFrame, scheme: Scheme) -> Result<DecodeOutcome> {
        match self.config.detector {
            DetectorKind::Parity => self.decode_with_detector(frame, scheme, &mut ParityDetector),
            DetectorKind::Llr => self.decode_with_detector(
                frame,
                scheme,
                &mut LlrDetector {
                    delta_ber: self.config.delta_ber,
                },
            ),
        }
    }

    pub fn decode_with_detector<D: StallDetector>(
        &self,
        frame: &LlrFrame,
        scheme: Scheme,
        detector: &mut D,
    ) -> Result<DecodeOutcome> {
        self.decode_with_store(frame, scheme, detector).map(|(o, _)| o)
    }

    /// Decode and also hand back the final message store (app values and the
    /// instrumented sweep counter).
    pub fn decode_with_store<D: StallDetector>(
        &self,
        frame: &LlrFrame,
        scheme: Scheme,
        detector: &mut D,
    ) -> Result<(DecodeOutcome, MessageStore)> {
        let (l, n) = (self.code.spec.l, self.code.n);
        if frame.l != l || frame.n != n {
            return Err(Error::GeometryMismatch(format!(
                "frame is {}x{}, code is {l}x{n}",
                frame.l, frame.n
            )));
        }
        let mut run = DecodeRun {
            dec: self,
            channel: &frame.llr,
            store: MessageStore::new(&self.adj, &frame.llr),
            p_win: 1,
            committed_upto: 0,
            decisions: vec![0u8; l * n],
            ledger: ComplexityLedger::default(),
            trace: Vec::new(),
            backshifts_left: self.config.max_backshifts,
            any_fired: false,
            run_iters: 0,
            step_iters: 0,
            step_fired: false,
            step_shifts: Vec::new(),
        };
        run.drive(scheme, detector);

        let DecodeRun {
            store,
            decisions,
            ledger,
            trace,
            any_fired,
            ..
        } = run;
        let per_position_errors = bp_engine::errors_per_position(&decisions, l, n);
        let s = find_stall_position(&per_position_errors, n, self.config.delta, self.config.eta);
        let outcome = DecodeOutcome {
            decisions,
            stall: StallRecord {
                s,
                per_position_errors,
                recovered: any_fired && s.is_none(),
            },
            ledger,
            trace,
            detector_fired: any_fired,
        };
        Ok((outcome, store))
    }
}

/// Mutable state of one decode in flight.
struct DecodeRun<'d> {
    dec: &'d WindowDecoder<'d>,
    channel: &'d [f64],
    store: MessageStore,
    /// Outer window index (1-based). The window covers variable blocks
    /// `p_win - (w + mu) + 1 ..= p_win` on the extended axis; positions enter
    /// at the right edge and are committed as they leave at the left edge.
    p_win: usize,
    committed_upto: usize,
    decisions: Vec<u8>,
    ledger: ComplexityLedger,
    trace: Vec<TraceStep>,
    backshifts_left: u32,
    any_fired: bool,
    run_iters: u32,
    step_iters: u32,
    step_fired: bool,
    step_shifts: Vec<i64>,
}

impl<'d> DecodeRun<'d> {
    fn drive<D: StallDetector>(&mut self, scheme: Scheme, detector: &mut D) {
        let cfg = &self.dec.config;
        let n_win = self.dec.n_win();
        while self.p_win <= n_win {
            let step_start = self.p_win;
            match scheme {
                Scheme::Fixed { iters } => {
                    for _ in 0..iters {
                        self.iterate();
                    }
                }
                Scheme::FixedBoost {
                    iters,
                    boost,
                    from,
                    to,
                } => {
                    let out_pos = self.p_win as i64 - (cfg.w + self.dec.adj.mu) as i64 + 1;
                    let count = if (from as i64..=to as i64).contains(&out_pos) {
                        boost
                    } else {
                        iters
                    };
                    for _ in 0..count {
                        self.iterate();
                    }
                }
                Scheme::Aid => {
                    let mut i = 0;
                    loop {
                        self.iterate();
                        let fired = self.detect(detector, i + 1);
                        i += 1;
                        if i >= cfg.i_max || (i >= cfg.i_min && !fired) {
                            break;
                        }
                    }
                }
                Scheme::Wsd => {
                    let mut i = 0;
                    loop {
                        self.iterate();
                        let fired = self.detect(detector, i + 1);
                        i += 1;
                        if i == cfg.i_min {
                            if !fired {
                                break;
                            }
                            self.backshift();
                        }
                        if i >= cfg.i_max {
                            break;
                        }
                    }
                }
                Scheme::Wtd => {
                    let mut flag = false;
                    let mut i = 0;
                    loop {
                        self.iterate();
                        let fired = self.detect(detector, i + 1);
                        i += 1;
                        if i == cfg.i_min {
                            if !fired {
                                break;
                            }
                            self.backshift();
                            flag = true;
                        } else if i > cfg.i_min && !fired {
                            if flag {
                                self.forward_shift(cfg.n_b, n_win);
                                flag = false;
                            } else {
                                self.forward_shift(1, n_win);
                            }
                        }
                        if i >= cfg.i_max {
                            break;
                        }
                    }
                }
            }
            self.flush_run();
            self.trace.push(TraceStep {
                p_win: step_start,
                iterations: std::mem::take(&mut self.step_iters),
                detector_fired: std::mem::take(&mut self.step_fired),
                shifts: std::mem::take(&mut self.step_shifts),
            });
            // Outer advance; commits whatever leaves the window.
            self.p_win += 1;
            self.commit_up_to(self.p_win as i64 - (cfg.w + self.dec.adj.mu) as i64);
        }
        self.commit_up_to(self.dec.adj.l as i64);
    }

    /// Active check rows (global indices) of the current window.
    fn active_checks(&self) -> Range<usize> {
        let adj = &self.dec.adj;
        if self.dec.covers_chain() {
            return 0..adj.num_checks;
        }
        let w = self.dec.config.w;
        let lo_row = self.p_win.saturating_sub(w - 1).max(1);
        let hi_row = self.p_win.min(adj.l + adj.mu);
        (lo_row - 1) * adj.m..hi_row * adj.m
    }

    /// Active (uncommitted, in-chain) variable positions of the current
    /// window, as an inclusive 1-based position interval.
    fn active_positions(&self) -> (usize, usize) {
        let adj = &self.dec.adj;
        if self.dec.covers_chain() {
            return (self.committed_upto + 1, adj.l);
        }
        let span = self.dec.config.w + adj.mu;
        let lo = self
            .p_win
            .saturating_sub(span - 1)
            .max(1)
            .max(self.committed_upto + 1);
        let hi = self.p_win.min(adj.l);
        (lo, hi)
    }

    /// One decoding iteration: CN sweep then VN sweep over the active window.
    fn iterate(&mut self) {
        let adj = &self.dec.adj;
        let checks = self.active_checks();
        bp_engine::cn_update(&mut self.store, adj, checks, self.dec.config.cn_rule);
        let (lo, hi) = self.active_positions();
        bp_engine::vn_update(
            &mut self.store,
            adj,
            self.channel,
            (lo - 1) * adj.n..hi * adj.n,
        );
        self.run_iters += 1;
        self.step_iters += 1;
    }

    fn detect<D: StallDetector>(&mut self, detector: &mut D, iteration: u32) -> bool {
        let adj = &self.dec.adj;
        let (lo, hi) = self.active_positions();
        let span = self.dec.config.w + adj.mu;
        let nominal_first = self.p_win.saturating_sub(span - 1).max(1);
        let position = (nominal_first + self.dec.config.detect_position - 1).clamp(lo, hi);
        let fired = detector.check(&DetectContext {
            store: &self.store,
            adj,
            position,
            p_win: self.p_win,
            iteration,
        });
        self.any_fired |= fired;
        self.step_fired |= fired;
        fired
    }

    fn flush_run(&mut self) {
        if self.run_iters > 0 {
            self.ledger
                .entries
                .push((std::mem::take(&mut self.run_iters), self.dec.config.w as u32));
        }
    }

    /// Move the window to `target`, committing positions that leave it when
    /// moving forward. Inner shifts split the ledger into per-position runs.
    fn move_to(&mut self, target: usize) {
        if target == self.p_win {
            return;
        }
        self.flush_run();
        self.step_shifts.push(target as i64 - self.p_win as i64);
        let forward = target > self.p_win;
        self.p_win = target;
        if forward {
            self.commit_up_to(target as i64 - (self.dec.config.w + self.dec.adj.mu) as i64);
        }
    }

    /// Backward shift by `n_b`, clamped so committed positions are never
    /// re-entered, and rate-limited by the backshift budget.
    fn backshift(&mut self) {
        if self.backshifts_left == 0 {
            return;
        }
        let target = self
            .p_win
            .saturating_sub(self.dec.config.n_b)
            .max(self.committed_upto + 1);
        if target < self.p_win {
            self.backshifts_left -= 1;
            self.move_to(target);
        }
    }

    fn forward_shift(&mut self, dist: usize, n_win: usize) {
        let target = (self.p_win + dist).min(n_win);
        if target > self.p_win {
            self.move_to(target);
        }
    }

    /// Record final outputs for every position up to `bound` (the bound may
    /// be negative during the ramp-in; commits clamp at `L`).
    fn commit_up_to(&mut self, bound: i64) {
        let adj = &self.dec.adj;
        let bound = bound.min(adj.l as i64);
        while (self.committed_upto as i64) < bound {
            let p = self.committed_upto + 1;
            let vars = adj.position_vars(p);
            let bits = bp_engine::hard_decision(&self.store, adj, vars.clone())
                .expect("committed positions have been swept");
            self.decisions[vars].copy_from_slice(&bits);
            self.committed_upto = p;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::awgn_llrs;
    use crate::sc_code::CodeSpec;

    fn small_code() -> CoupledCode {
        let spec = CodeSpec {
            dv: 3,
            dc: 6,
            mu: 1,
            spread: vec![2, 1],
            z: 4,
            l: 8,
            seed: 17,
        };
        CoupledCode::build(&spec).unwrap()
    }

    fn small_config() -> DecoderConfig {
        DecoderConfig {
            i_min: 2,
            i_max: 4,
            n_b: 1,
            ..DecoderConfig::new(3)
        }
    }

    fn noiseless_frame(code: &CoupledCode) -> LlrFrame {
        awgn_llrs(code.spec.l, code.n, 200.0, code.rate, 1, 0).unwrap()
    }

    fn noisy_frame(code: &CoupledCode, stream: u64) -> LlrFrame {
        awgn_llrs(code.spec.l, code.n, 3.0, code.rate, 99, stream).unwrap()
    }

    #[test]
    fn config_validation() {
        let code = small_code();
        let mut cfg = small_config();
        cfg.n_b = 3; // n_b must stay below w
        assert!(WindowDecoder::new(&code, cfg).is_err());
        let mut cfg = small_config();
        cfg.i_min = 5;
        assert!(WindowDecoder::new(&code, cfg).is_err());
        let mut cfg = small_config();
        cfg.detect_position = 5; // w + mu = 4
        assert!(WindowDecoder::new(&code, cfg).is_err());
        assert!(WindowDecoder::new(&code, small_config()).is_ok());
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!("fixed3".parse::<Scheme>().unwrap(), Scheme::Fixed { iters: 3 });
        assert_eq!("aid".parse::<Scheme>().unwrap(), Scheme::Aid);
        assert_eq!("wtd".parse::<Scheme>().unwrap(), Scheme::Wtd);
        assert!("fixed".parse::<Scheme>().is_err());
        assert!("warp".parse::<Scheme>().is_err());
        assert_eq!(Scheme::Wsd.to_string(), "wsd");
    }

    #[test]
    fn fixed_noiseless_decodes_clean_with_exact_complexity() {
        let code = small_code();
        let dec = WindowDecoder::new(&code, small_config()).unwrap();
        let out = dec
            .decode(&noiseless_frame(&code), Scheme::Fixed { iters: 3 })
            .unwrap();
        assert_eq!(out.bit_errors(), 0);
        assert!(out.stall.s.is_none());
        assert_eq!(out.ledger.num_windows(), dec.n_win());
        assert_eq!(average_complexity(&out.ledger).unwrap(), 3.0 * 3.0);
        assert!(out.trace.iter().all(|t| t.iterations == 3 && t.shifts.is_empty()));
        // ledger iteration sum == instrumented CN sweeps
        let mut silent = |_: &DetectContext<'_>| false;
        let (out2, store) = dec
            .decode_with_store(&noiseless_frame(&code), Scheme::Fixed { iters: 3 }, &mut silent)
            .unwrap();
        assert_eq!(out2.ledger.total_iterations(), store.cn_sweeps);
    }

    #[test]
    fn geometry_mismatch_rejected() {
        let code = small_code();
        let dec = WindowDecoder::new(&code, small_config()).unwrap();
        let mut frame = noiseless_frame(&code);
        frame.l = 7;
        frame.llr.truncate(7 * frame.n);
        assert!(matches!(
            dec.decode(&frame, Scheme::Fixed { iters: 2 }),
            Err(Error::GeometryMismatch(_))
        ));
    }

    #[test]
    fn aid_noiseless_uses_exactly_i_min() {
        let code = small_code();
        let dec = WindowDecoder::new(&code, small_config()).unwrap();
        let out = dec.decode(&noiseless_frame(&code), Scheme::Aid).unwrap();
        assert!(out.ledger.entries.iter().all(|&(i, w)| (i, w) == (2, 3)));
        assert_eq!(out.ledger.num_windows(), dec.n_win());
        assert!(!out.detector_fired);
    }

    #[test]
    fn aid_with_pinched_bounds_equals_fixed() {
        let code = small_code();
        let cfg = DecoderConfig {
            i_min: 3,
            i_max: 3,
            ..small_config()
        };
        let dec = WindowDecoder::new(&code, cfg).unwrap();
        for stream in 0..20 {
            let frame = noisy_frame(&code, stream);
            let fixed = dec.decode(&frame, Scheme::Fixed { iters: 3 }).unwrap();
            let aid = dec.decode(&frame, Scheme::Aid).unwrap();
            assert_eq!(fixed.decisions, aid.decisions);
            assert_eq!(fixed.ledger, aid.ledger);
        }
    }

    #[test]
    fn wsd_wtd_with_silent_detector_equal_fixed_imin() {
        let code = small_code();
        let dec = WindowDecoder::new(&code, small_config()).unwrap();
        for stream in 0..20 {
            let frame = noisy_frame(&code, stream);
            let fixed = dec.decode(&frame, Scheme::Fixed { iters: 2 }).unwrap();
            for scheme in [Scheme::Wsd, Scheme::Wtd] {
                let mut silent = |_: &DetectContext<'_>| false;
                let out = dec.decode_with_detector(&frame, scheme, &mut silent).unwrap();
                assert_eq!(fixed.decisions, out.decisions, "{scheme} stream {stream}");
                assert_eq!(fixed.ledger, out.ledger, "{scheme} stream {stream}");
            }
        }
    }

    #[test]
    fn wsd_trace_shows_single_backshift_and_extra_iterations() {
        let code = small_code();
        let cfg = small_config(); // i_min 2, i_max 4, n_b 1, w 3
        let dec = WindowDecoder::new(&code, cfg).unwrap();
        let frame = noisy_frame(&code, 3);
        let k = 6usize;
        let mut armed = true;
        let mut script = |ctx: &DetectContext<'_>| {
            if armed && ctx.p_win == k && ctx.iteration == 2 {
                armed = false;
                true
            } else {
                false
            }
        };
        let out = dec.decode_with_detector(&frame, Scheme::Wsd, &mut script).unwrap();
        let idx = out
            .trace
            .iter()
            .position(|t| t.p_win == k && t.detector_fired)
            .unwrap();
        let step = &out.trace[idx];
        assert_eq!(step.shifts, vec![-1]);
        assert_eq!(step.iterations, 4, "i_min + (i_max - i_min) iterations");
        // Traversal resumes from the shifted window: next step starts at k.
        assert_eq!(out.trace[idx + 1].p_win, k);
        // Ledger splits the step into two runs: i_min at k, the rest at k-1.
        assert_eq!(out.ledger.entries[idx..idx + 2], [(2, 3), (2, 3)]);
    }

    #[test]
    fn wtd_trace_shows_back_then_forward_shift() {
        let code = small_code();
        let cfg = DecoderConfig {
            i_min: 2,
            i_max: 3,
            n_b: 2,
            ..DecoderConfig::new(4)
        };
        let dec = WindowDecoder::new(&code, cfg).unwrap();
        let frame = noisy_frame(&code, 4);
        let k = 7usize;
        // Stall at the i_min checkpoint, cleared by the next iteration.
        let mut script = |ctx: &DetectContext<'_>| ctx.p_win == k && ctx.iteration == 2;
        let out = dec.decode_with_detector(&frame, Scheme::Wtd, &mut script).unwrap();
        let step = out
            .trace
            .iter()
            .find(|t| t.p_win == k && t.detector_fired)
            .unwrap();
        assert_eq!(step.shifts, vec![-2, 2], "back-shift then recovery jump");
        assert_eq!(step.iterations, 3);
    }

    #[test]
    fn wtd_creeps_forward_on_clean_iterations() {
        let code = small_code();
        let cfg = DecoderConfig {
            i_min: 2,
            i_max: 5,
            n_b: 2,
            ..DecoderConfig::new(4)
        };
        let dec = WindowDecoder::new(&code, cfg).unwrap();
        let frame = noisy_frame(&code, 5);
        let k = 6usize;
        let mut script = |ctx: &DetectContext<'_>| ctx.p_win == k && ctx.iteration == 2;
        let out = dec.decode_with_detector(&frame, Scheme::Wtd, &mut script).unwrap();
        let idx = out
            .trace
            .iter()
            .position(|t| t.p_win == k && t.detector_fired)
            .unwrap();
        let step = &out.trace[idx];
        // -n_b, +n_b recovery, then +1 per remaining clean iteration.
        assert_eq!(step.shifts, vec![-2, 2, 1, 1]);
        assert_eq!(step.iterations, 5);
        // The outer traversal resumes one past the crept-to position.
        assert_eq!(out.trace[idx + 1].p_win, k + 3);
    }

    #[test]
    fn always_firing_detector_terminates_and_commits_everything() {
        let code = small_code();
        let dec = WindowDecoder::new(&code, small_config()).unwrap();
        let frame = noisy_frame(&code, 6);
        for scheme in [Scheme::Wsd, Scheme::Wtd, Scheme::Aid] {
            let mut always = |_: &DetectContext<'_>| true;
            let out = dec.decode_with_detector(&frame, scheme, &mut always).unwrap();
            assert_eq!(out.decisions.len(), code.num_vars());
            assert!(out.detector_fired);
            // Window never crosses the committed frontier or position 1.
            let span = (dec.config().w + code.mu()) as i64;
            let mut committed = 0i64;
            for t in &out.trace {
                let mut p = t.p_win as i64;
                for &d in &t.shifts {
                    p += d;
                    assert!(p - span + 1 <= committed + 1, "window re-entered committed area");
                    assert!(p >= 1);
                }
                committed = committed.max(p + 1 - span);
            }
        }
    }

    #[test]
    fn committed_outputs_are_never_retro_modified() {
        // Committed positions are excluded from later sweeps, so the final
        // app sign must agree with the committed snapshot for every scheme.
        let code = small_code();
        let dec = WindowDecoder::new(&code, small_config()).unwrap();
        for stream in 0..10 {
            let frame = noisy_frame(&code, stream);
            for scheme in [Scheme::Fixed { iters: 2 }, Scheme::Aid, Scheme::Wsd, Scheme::Wtd] {
                let mut det = LlrDetector { delta_ber: 1e-7 };
                let (out, store) = dec.decode_with_store(&frame, scheme, &mut det).unwrap();
                let from_app: Vec<u8> = store.app.iter().map(|&a| u8::from(a < 0.0)).collect();
                assert_eq!(out.decisions, from_app, "{scheme} stream {stream}");
            }
        }
    }

    #[test]
    fn ledger_iterations_match_cn_sweeps_for_all_schemes() {
        let code = small_code();
        let dec = WindowDecoder::new(&code, small_config()).unwrap();
        for stream in 0..10 {
            let frame = noisy_frame(&code, stream);
            for scheme in [Scheme::Fixed { iters: 4 }, Scheme::Aid, Scheme::Wsd, Scheme::Wtd] {
                let mut det = ParityDetector;
                let (out, store) = dec.decode_with_store(&frame, scheme, &mut det).unwrap();
                assert_eq!(out.ledger.total_iterations(), store.cn_sweeps);
            }
        }
    }

    #[test]
    fn detector_contracts() {
        let code = small_code();
        let dec = WindowDecoder::new(&code, small_config()).unwrap();
        let frame = noiseless_frame(&code);

        // Noiseless frame, one iteration: neither detector fires anywhere.
        for detector in [DetectorKind::Parity, DetectorKind::Llr] {
            let cfg = DecoderConfig {
                detector,
                i_min: 1,
                i_max: 1,
                ..small_config()
            };
            let d = WindowDecoder::new(&code, cfg).unwrap();
            let out = d.decode(&frame, Scheme::Aid).unwrap();
            assert!(!out.detector_fired);
        }

        // Threshold comparison: position soft-BER 1e-6 vs delta_ber 1e-7.
        let adj = dec.adjacency();
        let target = (1e6f64 - 1.0).ln(); // 1/(1+e^x) == 1e-6
        let channel = vec![target; adj.num_vars];
        let mut store = MessageStore::new(adj, &channel);
        bp_engine::vn_update(&mut store, adj, &channel, 0..adj.num_vars);
        let ctx = DetectContext {
            store: &store,
            adj,
            position: 2,
            p_win: 1,
            iteration: 1,
        };
        assert!(LlrDetector { delta_ber: 1e-7 }.check(&ctx));
        assert!(!LlrDetector { delta_ber: 1e-5 }.check(&ctx));
    }

    #[test]
    fn find_stall_position_examples() {
        // fractions (0, 0, 0.1, 0.2, 0, ...), delta 0.01, eta 1 -> s = 3
        let errs = [0, 0, 10, 20, 0, 0];
        assert_eq!(find_stall_position(&errs, 100, 0.01, 1), Some(3));
        // fractions (0, 0.1, 0, 0.1), eta 2 -> none
        let errs = [0, 10, 0, 10];
        assert_eq!(find_stall_position(&errs, 100, 0.01, 2), None);
        // fractions (0, 0.1, 0.2, 0.2), eta 2 -> s = 2
        let errs = [0, 10, 20, 20];
        assert_eq!(find_stall_position(&errs, 100, 0.01, 2), Some(2));
        assert_eq!(find_stall_position(&[], 100, 0.01, 1), None);
    }

    #[test]
    fn estimate_post_ber_examples() {
        assert_eq!(estimate_post_ber(99.0, 99, 0.02, 0.1), 0.0);
        assert_eq!(estimate_post_ber(10.0, 99, 0.02, 0.0), 0.0);
        let factor = estimate_post_ber(57.79, 99, 1.0, 1.0);
        assert!((factor - 0.41626).abs() < 1e-5);
    }

    #[test]
    fn average_complexity_examples() {
        let ledger = ComplexityLedger {
            entries: vec![(3, 9); 40],
        };
        assert_eq!(average_complexity(&ledger).unwrap(), 27.0);
        let ledger = ComplexityLedger {
            entries: vec![(3, 9), (5, 9)],
        };
        assert_eq!(average_complexity(&ledger).unwrap(), 36.0);
        let ledger = ComplexityLedger {
            entries: vec![(4, 9); 7],
        };
        assert_eq!(average_complexity(&ledger).unwrap(), 36.0);
        assert!(average_complexity(&ComplexityLedger::default()).is_err());
    }

    #[test]
    fn window_covering_chain_equals_flooding() {
        let code = small_code();
        let cfg = DecoderConfig {
            i_min: 4,
            i_max: 4,
            ..DecoderConfig::new(code.spec.l)
        };
        let dec = WindowDecoder::new(&code, cfg).unwrap();
        assert!(dec.covers_chain());
        assert_eq!(dec.n_win(), 1);
        let frame = noisy_frame(&code, 8);
        let mut silent = |_: &DetectContext<'_>| false;
        let (out, store) = dec
            .decode_with_store(&frame, Scheme::Fixed { iters: 4 }, &mut silent)
            .unwrap();

        // Reference: plain flooding with the engine kernels on the full chain.
        let adj = dec.adjacency();
        let mut flood = MessageStore::new(adj, &frame.llr);
        for _ in 0..4 {
            bp_engine::cn_update(&mut flood, adj, 0..adj.num_checks, CnRule::SumProduct);
            bp_engine::vn_update(&mut flood, adj, &frame.llr, 0..adj.num_vars);
        }
        assert_eq!(store.app, flood.app);
        let bits: Vec<u8> = flood.app.iter().map(|&a| u8::from(a < 0.0)).collect();
        assert_eq!(out.decisions, bits);
        assert_eq!(
            average_complexity(&out.ledger).unwrap(),
            4.0 * code.spec.l as f64
        );
    }
}
