//! Experiment orchestration: Monte Carlo BER sweeps, stall test-set creation
//! and replay, the block-manipulation experiment, and report rendering.
//!
//! Trials are independent work items distributed over a rayon pool. Each
//! trial derives its noise from `(master_seed, trial_index)`, and results are
//! folded in trial order with the stop rule applied at exact trial
//! boundaries, so every statistic (and every output byte) is independent of
//! the worker count.

mod testset;

pub use testset::{TestSet, TestsetFrame, TestsetHeader};

use crate::channel::{awgn_llrs, channel_stream, manip_stream, manipulate_block, LlrFrame};
use crate::sc_code::CoupledCode;
use crate::window_decoder::{
    average_complexity, estimate_post_ber, DecodeOutcome, DecoderConfig, Scheme, WindowDecoder,
};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Trials decoded per parallel batch. Fixed (not derived from the worker
/// count) so the stop rule sees the same trial order everywhere.
const BATCH: usize = 64;

/// Monte Carlo sweep parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub snrs_db: Vec<f64>,
    /// Trials per (SNR, scheme) point.
    pub trials: usize,
    pub master_seed: u64,
    pub schemes: Vec<Scheme>,
    pub decoder: DecoderConfig,
    /// Stop rule: a point ends at `min(max_error_events, trials)` frame
    /// errors.
    pub max_error_events: usize,
}

impl SweepConfig {
    pub fn new(snrs_db: Vec<f64>, trials: usize, master_seed: u64, decoder: DecoderConfig) -> Self {
        SweepConfig {
            snrs_db,
            trials,
            master_seed,
            schemes: vec![
                Scheme::Fixed { iters: 3 },
                Scheme::Fixed { iters: 4 },
                Scheme::Aid,
                Scheme::Wsd,
                Scheme::Wtd,
            ],
            decoder,
            max_error_events: 100,
        }
    }
}

/// Accumulated statistics of one (SNR, scheme) point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointStats {
    pub snr_db: f64,
    pub scheme: String,
    pub trials: usize,
    pub total_bits: u64,
    /// Channel hard-decision errors (before decoding).
    pub pre_errors: u64,
    /// Bit errors after decoding.
    pub post_errors: u64,
    /// Trials whose output contained a stall.
    pub stalls: usize,
    pub s_sum: u64,
    /// Stall-position histogram, one bin per spatial position.
    pub s_hist: Vec<u32>,
    /// Sum of per-trial average complexities.
    pub cbar_sum: f64,
    /// Trials with at least one post-decoding bit error.
    pub error_events: usize,
}

impl PointStats {
    fn new(snr_db: f64, scheme: String, l: usize) -> Self {
        PointStats {
            snr_db,
            scheme,
            trials: 0,
            total_bits: 0,
            pre_errors: 0,
            post_errors: 0,
            stalls: 0,
            s_sum: 0,
            s_hist: vec![0; l],
            cbar_sum: 0.0,
            error_events: 0,
        }
    }

    fn absorb(&mut self, trial: &TrialResult) {
        self.trials += 1;
        self.total_bits += trial.bits;
        self.pre_errors += trial.pre_errors;
        self.post_errors += trial.post_errors;
        if let Some(s) = trial.s {
            self.stalls += 1;
            self.s_sum += s as u64;
            self.s_hist[s - 1] += 1;
        }
        self.cbar_sum += trial.cbar;
        self.error_events += usize::from(trial.post_errors > 0);
    }

    /// Channel BER.
    pub fn p_pre(&self) -> f64 {
        self.pre_errors as f64 / self.total_bits as f64
    }

    /// Post-decoding BER.
    pub fn p_post(&self) -> f64 {
        self.post_errors as f64 / self.total_bits as f64
    }

    pub fn p_stall(&self) -> f64 {
        self.stalls as f64 / self.trials as f64
    }

    /// Mean stall start position (NaN when no stalls occurred).
    pub fn e_s(&self) -> f64 {
        self.s_sum as f64 / self.stalls as f64
    }

    /// Mean average complexity over trials.
    pub fn cbar(&self) -> f64 {
        self.cbar_sum / self.trials as f64
    }

    /// 95% normal-approximation half-width of the post-decoding BER.
    pub fn ci_halfwidth(&self) -> f64 {
        let p = self.p_post();
        1.96 * (p * (1.0 - p) / self.total_bits as f64).sqrt()
    }

    /// 95% half-width of the stall probability.
    pub fn p_stall_ci(&self) -> f64 {
        let p = self.p_stall();
        1.96 * (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Results of a sweep (or any collection of measured points).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StatsReport {
    pub points: Vec<PointStats>,
}

impl StatsReport {
    /// CSV with the fixed column order
    /// `snr_db,scheme,trials,ber,p_stall,e_s,cbar,ci_halfwidth`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("snr_db,scheme,trials,ber,p_stall,e_s,cbar,ci_halfwidth\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                p.snr_db,
                p.scheme,
                p.trials,
                p.p_post(),
                p.p_stall(),
                p.e_s(),
                p.cbar(),
                p.ci_halfwidth()
            );
        }
        out
    }
}

struct TrialResult {
    bits: u64,
    pre_errors: u64,
    post_errors: u64,
    s: Option<usize>,
    cbar: f64,
}

fn trial_result(frame: &LlrFrame, out: &DecodeOutcome) -> TrialResult {
    TrialResult {
        bits: frame.llr.len() as u64,
        pre_errors: frame.hard_error_count() as u64,
        post_errors: out.bit_errors(),
        s: out.stall.s,
        cbar: average_complexity(&out.ledger).expect("decode produces ledger entries"),
    }
}

/// Run trials `0..limit` in deterministic batches, folding results in trial
/// order until `stop` says enough.
fn run_trials<T, F, G>(limit: usize, job: F, mut fold: G) -> Result<()>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
    G: FnMut(usize, T) -> bool,
{
    let mut t0 = 0;
    while t0 < limit {
        let hi = (t0 + BATCH).min(limit);
        let batch: Vec<T> = (t0..hi)
            .into_par_iter()
            .map(|t| job(t))
            .collect::<Result<Vec<T>>>()?;
        for (t, item) in (t0..hi).zip(batch) {
            if fold(t, item) {
                return Ok(());
            }
        }
        t0 = hi;
    }
    Ok(())
}

/// Monte Carlo BER sweep over all configured SNRs and schemes.
pub fn run_ber_sweep(code: &CoupledCode, cfg: &SweepConfig) -> Result<StatsReport> {
    if cfg.trials == 0 || cfg.schemes.is_empty() {
        return Err(Error::InvalidConfig(
            "sweep needs at least one trial and one scheme".into(),
        ));
    }
    let dec = WindowDecoder::new(code, cfg.decoder.clone())?;
    let (l, n) = (code.spec.l, code.n);
    let mut report = StatsReport::default();
    for &snr in &cfg.snrs_db {
        for &scheme in &cfg.schemes {
            let mut point = PointStats::new(snr, scheme.to_string(), l);
            run_trials(
                cfg.trials,
                |t| {
                    let frame =
                        awgn_llrs(l, n, snr, code.rate, cfg.master_seed, channel_stream(t as u64))?;
                    let out = dec.decode(&frame, scheme)?;
                    Ok(trial_result(&frame, &out))
                },
                |_, trial| {
                    point.absorb(&trial);
                    point.error_events >= cfg.max_error_events
                },
            )?;
            report.points.push(point);
        }
    }
    Ok(report)
}

/// Measure the stall probability of `fixed(iters)` along an SNR scan.
/// Used to locate the stall region of a code empirically.
pub fn scan_stall_region(
    code: &CoupledCode,
    decoder: &DecoderConfig,
    iters: u32,
    snrs_db: &[f64],
    trials: usize,
    master_seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let dec = WindowDecoder::new(code, decoder.clone())?;
    let (l, n) = (code.spec.l, code.n);
    let mut out = Vec::new();
    for &snr in snrs_db {
        let mut stalls = 0usize;
        run_trials(
            trials,
            |t| {
                let frame = awgn_llrs(l, n, snr, code.rate, master_seed, channel_stream(t as u64))?;
                let out = dec.decode(&frame, Scheme::Fixed { iters })?;
                Ok(out.stall.s.is_some())
            },
            |_, stalled| {
                stalls += usize::from(stalled);
                false
            },
        )?;
        out.push((snr, stalls as f64 / trials as f64));
    }
    Ok(out)
}

/// Test-set builder parameters.
#[derive(Debug, Clone)]
pub struct TestsetBuildConfig {
    pub snr_db: f64,
    pub master_seed: u64,
    /// Stalled frames to collect.
    pub target: usize,
    /// Baseline decoder: fixed iteration count.
    pub baseline_iters: u32,
    pub decoder: DecoderConfig,
    /// Give up after this many generated frames.
    pub max_attempts: usize,
}

/// Collect frames that stall under the fixed baseline decoder.
pub fn build_testset(code: &CoupledCode, cfg: &TestsetBuildConfig) -> Result<TestSet> {
    let dec = WindowDecoder::new(code, cfg.decoder.clone())?;
    let (l, n) = (code.spec.l, code.n);
    let scheme = Scheme::Fixed {
        iters: cfg.baseline_iters,
    };
    let mut frames: Vec<TestsetFrame> = Vec::with_capacity(cfg.target);
    let mut attempts = 0usize;
    if cfg.target > 0 {
        run_trials(
            cfg.max_attempts,
            |t| {
                let frame =
                    awgn_llrs(l, n, cfg.snr_db, code.rate, cfg.master_seed, channel_stream(t as u64))?;
                let out = dec.decode(&frame, scheme)?;
                Ok(out.stall.s.map(|s| TestsetFrame {
                    s: s as u32,
                    llrs: frame.llr.iter().map(|&v| v as f32).collect(),
                }))
            },
            |t, stalled| {
                attempts = t + 1;
                if let Some(f) = stalled {
                    frames.push(f);
                }
                frames.len() >= cfg.target
            },
        )?;
    }
    if frames.len() < cfg.target {
        return Err(Error::StallRateTooLow {
            collected: frames.len(),
            attempts,
            snr_db: cfg.snr_db,
        });
    }

    let mut histogram = vec![0u32; l];
    let mut s_sum = 0u64;
    for f in &frames {
        histogram[f.s as usize - 1] += 1;
        s_sum += f.s as u64;
    }
    let e_s = (!frames.is_empty()).then(|| s_sum as f64 / frames.len() as f64);
    Ok(TestSet {
        header: TestsetHeader {
            code: code.spec.clone(),
            snr_db: cfg.snr_db,
            seed: cfg.master_seed,
            frame_count: frames.len(),
            l,
            n,
            e_s,
            histogram,
        },
        frames,
    })
}

/// Per-scheme outcome of a test-set replay.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub scheme: String,
    pub frames: usize,
    /// Frames still stalling under this scheme.
    pub stalled: usize,
    /// Mean residual stall position (NaN when none survive).
    pub e_s: f64,
    pub s_hist: Vec<u32>,
    /// Mean average complexity.
    pub cbar: f64,
    /// Post-decoding BER over the whole test-set.
    pub ber: f64,
}

impl ReplayEntry {
    pub fn survival_rate(&self) -> f64 {
        self.stalled as f64 / self.frames as f64
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ReplayReport {
    pub entries: Vec<ReplayEntry>,
}

/// Decode every stored frame with each scheme and compare stall survival.
pub fn replay_testset(
    code: &CoupledCode,
    set: &TestSet,
    schemes: &[Scheme],
    decoder: &DecoderConfig,
) -> Result<ReplayReport> {
    set.check_matches(code)?;
    let dec = WindowDecoder::new(code, decoder.clone())?;
    let l = code.spec.l;
    let mut report = ReplayReport::default();
    for &scheme in schemes {
        let mut entry = ReplayEntry {
            scheme: scheme.to_string(),
            frames: set.frames.len(),
            stalled: 0,
            e_s: f64::NAN,
            s_hist: vec![0; l],
            cbar: 0.0,
            ber: 0.0,
        };
        let mut s_sum = 0u64;
        let mut bit_errors = 0u64;
        let mut cbar_sum = 0.0;
        run_trials(
            set.frames.len(),
            |i| {
                let frame = set.frame(i, code);
                dec.decode(&frame, scheme)
            },
            |_, out| {
                if let Some(s) = out.stall.s {
                    entry.stalled += 1;
                    entry.s_hist[s - 1] += 1;
                    s_sum += s as u64;
                }
                bit_errors += out.bit_errors();
                cbar_sum += average_complexity(&out.ledger).expect("non-empty ledger");
                false
            },
        )?;
        if !set.frames.is_empty() {
            entry.cbar = cbar_sum / set.frames.len() as f64;
            entry.ber = bit_errors as f64 / (set.frames.len() * l * code.n) as f64;
        }
        if entry.stalled > 0 {
            entry.e_s = s_sum as f64 / entry.stalled as f64;
        }
        report.entries.push(entry);
    }
    Ok(report)
}

/// Manipulation experiment parameters.
#[derive(Debug, Clone)]
pub struct ManipConfig {
    pub snr_db: f64,
    pub snr_manip_db: f64,
    /// Manipulated block (1-based).
    pub block: usize,
    /// Manipulated codewords to evaluate.
    pub count: usize,
    pub master_seed: u64,
    pub baseline_iters: u32,
    /// Locally raised iteration count of the prediction variant.
    pub boost_iters: u32,
    /// First boosted output position.
    pub boost_from: usize,
    /// Last boosted output position.
    pub boost_to: usize,
    pub decoder: DecoderConfig,
    pub max_attempts: usize,
}

impl ManipConfig {
    /// Parameters mirroring the block-10 experiment: manipulate block 10,
    /// boost iterations over output positions 8..=12.
    pub fn new(snr_db: f64, snr_manip_db: f64, count: usize, master_seed: u64, decoder: DecoderConfig) -> Self {
        ManipConfig {
            snr_db,
            snr_manip_db,
            block: 10,
            count,
            master_seed,
            baseline_iters: 3,
            boost_iters: 4,
            boost_from: 8,
            boost_to: 12,
            decoder,
            max_attempts: usize::MAX,
        }
    }
}

/// Stall statistics of one manipulation variant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariantStats {
    pub name: String,
    pub frames: usize,
    pub stalls: usize,
    /// Mean stall position among stalled frames (NaN when none).
    pub e_s: f64,
    pub s_hist: Vec<u32>,
    pub cbar: f64,
}

impl VariantStats {
    fn new(name: &str, l: usize) -> Self {
        VariantStats {
            name: name.to_string(),
            frames: 0,
            stalls: 0,
            e_s: f64::NAN,
            s_hist: vec![0; l],
            cbar: 0.0,
        }
    }

    pub fn stall_fraction(&self) -> f64 {
        self.stalls as f64 / self.frames as f64
    }

    fn absorb(&mut self, out: &DecodeOutcome) {
        self.frames += 1;
        if let Some(s) = out.stall.s {
            self.stalls += 1;
            self.s_hist[s - 1] += 1;
        }
        self.cbar += average_complexity(&out.ledger).expect("non-empty ledger");
    }

    fn finish(&mut self) {
        if self.frames > 0 {
            self.cbar /= self.frames as f64;
        }
        if self.stalls > 0 {
            let sum: u64 = self
                .s_hist
                .iter()
                .enumerate()
                .map(|(i, &c)| (i as u64 + 1) * c as u64)
                .sum();
            self.e_s = sum as f64 / self.stalls as f64;
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManipReport {
    /// Baseline, locally boosted prediction, and wave-tracking variants.
    pub variants: Vec<VariantStats>,
    /// Frames that decoded cleanly (and were then manipulated).
    pub clean_frames_used: usize,
    /// Frames generated to find them.
    pub attempts: usize,
}

/// Corrupt one known block of otherwise-decodable codewords and compare how
/// a fixed decoder, a locally boosted (predictive) fixed decoder, and the
/// wave tracking decoder cope.
pub fn manipulation_experiment(code: &CoupledCode, cfg: &ManipConfig) -> Result<ManipReport> {
    let dec = WindowDecoder::new(code, cfg.decoder.clone())?;
    let (l, n) = (code.spec.l, code.n);
    let baseline = Scheme::Fixed {
        iters: cfg.baseline_iters,
    };
    let boosted = Scheme::FixedBoost {
        iters: cfg.baseline_iters,
        boost: cfg.boost_iters,
        from: cfg.boost_from,
        to: cfg.boost_to,
    };
    let mut variants = vec![
        VariantStats::new(&baseline.to_string(), l),
        VariantStats::new(&boosted.to_string(), l),
        VariantStats::new("wtd", l),
    ];
    let mut used = 0usize;
    let mut attempts = 0usize;
    run_trials(
        cfg.max_attempts,
        |t| {
            let frame = awgn_llrs(l, n, cfg.snr_db, code.rate, cfg.master_seed, channel_stream(t as u64))?;
            // Only noise realizations the naive decoder handles are eligible.
            if dec.decode(&frame, baseline)?.stall.s.is_some() {
                return Ok(None);
            }
            let manip = manipulate_block(
                &frame,
                cfg.block,
                cfg.snr_manip_db,
                cfg.master_seed,
                manip_stream(t as u64),
            )?;
            let a = dec.decode(&manip, baseline)?;
            let b = dec.decode(&manip, boosted)?;
            let c = dec.decode(&manip, Scheme::Wtd)?;
            Ok(Some([a, b, c]))
        },
        |t, maybe| {
            attempts = t + 1;
            if let Some(outs) = maybe {
                for (v, out) in variants.iter_mut().zip(&outs) {
                    v.absorb(out);
                }
                used += 1;
            }
            used >= cfg.count
        },
    )?;
    if used < cfg.count {
        return Err(Error::StallRateTooLow {
            collected: used,
            attempts,
            snr_db: cfg.snr_db,
        });
    }
    for v in &mut variants {
        v.finish();
    }
    Ok(ManipReport {
        variants,
        clean_frames_used: used,
        attempts,
    })
}

/// Render a Table-1 style summary plus an Eq.-(2) consistency column.
pub fn render_report(reports: &[StatsReport], l: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>8} {:>10} {:>8} {:>12} {:>10} {:>8} {:>10} {:>10} {:>8}",
        "snr_db", "scheme", "trials", "ber", "p_stall", "E[s]", "cbar", "eq2_pred", "ratio"
    );
    for report in reports {
        for p in &report.points {
            let pred = if p.stalls > 0 {
                estimate_post_ber(p.e_s(), l, p.p_pre(), p.p_stall())
            } else {
                0.0
            };
            let ratio = if pred > 0.0 { p.p_post() / pred } else { f64::NAN };
            let _ = writeln!(
                out,
                "{:>8.3} {:>10} {:>8} {:>12.3e} {:>10.3e} {:>8.2} {:>10.3} {:>10.3e} {:>8.3}",
                p.snr_db,
                p.scheme,
                p.trials,
                p.p_post(),
                p.p_stall(),
                p.e_s(),
                p.cbar(),
                pred,
                ratio
            );
        }
    }
    out
}
