//! BPSK/AWGN channel LLRs for the all-zero codeword.
//!
//! The all-zero codeword is transmitted as x = +1 everywhere; code linearity
//! and channel symmetry make this distributionally exact for BER purposes,
//! so no encoder is needed. Every trial draws its noise from a counter-based
//! ChaCha stream derived from `(master_seed, stream)`, which makes results
//! independent of thread count and trial order. Generated LLRs are rounded
//! to f32 precision so that test-set files (which store f32) replay
//! bit-exactly.

use crate::bp_engine::LLR_MAX;
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Stream id carrying the channel noise of trial `t`.
pub fn channel_stream(trial: u64) -> u64 {
    2 * trial
}

/// Stream id carrying the manipulation noise of trial `t`.
pub fn manip_stream(trial: u64) -> u64 {
    2 * trial + 1
}

/// Noise variance of the BPSK/AWGN channel at `snr_db` (Eb/N0) and code rate
/// `rate`: `sigma^2 = 1 / (2 * rate * 10^(snr/10))`.
pub fn noise_variance(snr_db: f64, rate: f64) -> f64 {
    1.0 / (2.0 * rate * 10f64.powf(snr_db / 10.0))
}

/// Channel LLRs for one noisy codeword, organized as `L` blocks of `n`
/// values.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrFrame {
    /// `L * n` log-likelihood ratios, saturated to `[-LLR_MAX, LLR_MAX]`.
    pub llr: Vec<f64>,
    /// Number of spatial positions.
    pub l: usize,
    /// Variables per position.
    pub n: usize,
    /// Nominal Eb/N0 in dB.
    pub snr_db: f64,
    /// Code rate used for the noise variance.
    pub rate: f64,
    /// Master seed the noise stream was derived from.
    pub seed: u64,
    /// ChaCha stream id of this trial.
    pub stream: u64,
    /// Manipulated block and its reduced SNR, if any.
    pub manip: Option<(usize, f64)>,
}

impl LlrFrame {
    /// LLRs of spatial position `j` (1-based).
    pub fn block(&self, j: usize) -> &[f64] {
        assert!((1..=self.l).contains(&j), "block {j} out of range");
        &self.llr[(j - 1) * self.n..j * self.n]
    }

    /// Number of channel hard-decision errors (negative LLRs, all-zero
    /// transmission).
    pub fn hard_error_count(&self) -> usize {
        self.llr.iter().filter(|&&v| v < 0.0).count()
    }
}

fn saturate_f32(v: f64) -> f64 {
    v.clamp(-LLR_MAX, LLR_MAX) as f32 as f64
}

/// Draw the channel LLRs of one trial.
///
/// Per sample: transmit `x = +1`, receive `y = x + g` with
/// `g ~ N(0, sigma^2)`, and emit `LLR = 2y / sigma^2`. Deterministic for a
/// fixed `(master_seed, stream)`.
pub fn awgn_llrs(
    l: usize,
    n: usize,
    snr_db: f64,
    rate: f64,
    master_seed: u64,
    stream: u64,
) -> Result<LlrFrame> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::InvalidSpec(format!("rate {rate} must be in (0, 1)")));
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidSpec("snr_db must be finite".into()));
    }
    let sigma2 = noise_variance(snr_db, rate);
    let sigma = sigma2.sqrt();
    let scale = 2.0 / sigma2;

    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    let llr = (0..l * n)
        .map(|_| {
            let g: f64 = StandardNormal.sample(&mut rng);
            saturate_f32((1.0 + sigma * g) * scale)
        })
        .collect();

    Ok(LlrFrame {
        llr,
        l,
        n,
        snr_db,
        rate,
        seed: master_seed,
        stream,
        manip: None,
    })
}

/// Degrade block `j` (1-based) to `snr_manip_db` by adding incremental
/// Gaussian noise to the underlying received values.
///
/// The receiver stays unaware: LLRs of the manipulated block are recomputed
/// with the nominal noise variance. All other blocks are bit-identical to the
/// input.
pub fn manipulate_block(
    frame: &LlrFrame,
    j: usize,
    snr_manip_db: f64,
    master_seed: u64,
    stream: u64,
) -> Result<LlrFrame> {
    if j < 1 || j > frame.l {
        return Err(Error::GeometryMismatch(format!(
            "block {j} out of range 1..={}",
            frame.l
        )));
    }
    if snr_manip_db >= frame.snr_db {
        return Err(Error::ManipSnrNotBelowNominal {
            manip_db: snr_manip_db,
            nominal_db: frame.snr_db,
        });
    }
    let sigma2_nom = noise_variance(frame.snr_db, frame.rate);
    let sigma2_manip = noise_variance(snr_manip_db, frame.rate);
    let sigma_add = (sigma2_manip - sigma2_nom).sqrt();
    let scale = 2.0 / sigma2_nom;

    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    let mut out = frame.clone();
    for v in &mut out.llr[(j - 1) * frame.n..j * frame.n] {
        let y = *v / scale;
        let g: f64 = StandardNormal.sample(&mut rng);
        *v = saturate_f32((y + sigma_add * g) * scale);
    }
    out.manip = Some((j, snr_manip_db));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn llr_mean_matches_closed_form() {
        // rate 0.8 at 2.86 dB: sigma^2 = 1/(2*0.8*10^0.286) ~= 0.32349,
        // mean LLR = 2/sigma^2 ~= 6.1825.
        let sigma2 = noise_variance(2.86, 0.8);
        assert!((sigma2 - 0.32349).abs() < 5e-5);
        let mean_expect = 2.0 / sigma2;
        assert!((mean_expect - 6.1825).abs() < 1e-3);

        let samples = 1_000_000;
        let frame = awgn_llrs(1, samples, 2.86, 0.8, 99, 0).unwrap();
        let mean: f64 = frame.llr.iter().sum::<f64>() / samples as f64;
        // 3 standard errors of the sample mean; sd(LLR) = 2/sigma.
        let se = (2.0 / sigma2.sqrt()) / (samples as f64).sqrt();
        assert!(
            (mean - mean_expect).abs() < 3.0 * se,
            "mean {mean} vs {mean_expect} (3se = {})",
            3.0 * se
        );
    }

    #[test]
    fn channel_ber_matches_q_function() {
        // Empirical BER converges to Q(1/sigma) = Q(sqrt(2 R 10^(snr/10))).
        let (snr, rate) = (2.0, 0.8);
        let sigma = noise_variance(snr, rate).sqrt();
        let q = 0.5 * statrs::function::erf::erfc(1.0 / (sigma * std::f64::consts::SQRT_2));
        let samples = 1_000_000;
        let frame = awgn_llrs(1, samples, snr, rate, 4, 1).unwrap();
        let ber = frame.hard_error_count() as f64 / samples as f64;
        let se = (q * (1.0 - q) / samples as f64).sqrt();
        assert!((ber - q).abs() < 3.0 * se, "ber {ber} vs Q {q}");
    }

    #[test]
    fn high_snr_saturates_positive() {
        let frame = awgn_llrs(2, 50, 200.0, 0.8, 7, 3).unwrap();
        assert!(frame.llr.iter().all(|&v| v == LLR_MAX));
        assert_eq!(frame.hard_error_count(), 0);
    }

    #[test]
    fn same_seed_same_frame() {
        let a = awgn_llrs(3, 64, 3.0, 0.8, 123, 5).unwrap();
        let b = awgn_llrs(3, 64, 3.0, 0.8, 123, 5).unwrap();
        assert_eq!(a, b);
        let c = awgn_llrs(3, 64, 3.0, 0.8, 123, 6).unwrap();
        assert_ne!(a.llr, c.llr);
    }

    #[test]
    fn manipulation_touches_exactly_one_block() {
        let frame = awgn_llrs(12, 480, 2.86, 0.8, 11, 0).unwrap();
        let manip = manipulate_block(&frame, 10, 2.1, 11, 1).unwrap();
        assert_eq!(manip.manip, Some((10, 2.1)));
        let changed = frame
            .llr
            .iter()
            .zip(&manip.llr)
            .filter(|(a, b)| a != b)
            .count();
        assert_eq!(changed, 480, "only block 10 samples may change");
        for j in (1..=12).filter(|&j| j != 10) {
            assert_eq!(frame.block(j), manip.block(j));
        }
    }

    #[test]
    fn manipulated_block_ber_rises_to_target() {
        // Per-block BER of the manipulated block approaches Q(1/sigma_manip).
        let (snr, manip_snr, rate) = (2.86, 2.1, 0.8);
        let n = 200_000;
        let frame = awgn_llrs(3, n, snr, rate, 21, 0).unwrap();
        let manip = manipulate_block(&frame, 2, manip_snr, 21, 1).unwrap();
        let sigma_manip = noise_variance(manip_snr, rate).sqrt();
        let q = 0.5 * statrs::function::erf::erfc(1.0 / (sigma_manip * std::f64::consts::SQRT_2));
        let ber = manip.block(2).iter().filter(|&&v| v < 0.0).count() as f64 / n as f64;
        let se = (q * (1.0 - q) / n as f64).sqrt();
        assert!((ber - q).abs() < 4.0 * se, "ber {ber} vs Q {q}");
    }

    #[test]
    fn manipulation_with_tiny_gap_is_nearly_identity() {
        let frame = awgn_llrs(4, 100, 3.0, 0.8, 5, 0).unwrap();
        let manip = manipulate_block(&frame, 2, 3.0 - 1e-9, 5, 1).unwrap();
        for (a, b) in frame.llr.iter().zip(&manip.llr) {
            assert!((a - b).abs() < 1e-3);
        }
    }

    #[test]
    fn manipulation_rejects_higher_snr() {
        let frame = awgn_llrs(4, 100, 3.0, 0.8, 5, 0).unwrap();
        assert!(matches!(
            manipulate_block(&frame, 2, 3.5, 5, 1),
            Err(Error::ManipSnrNotBelowNominal { .. })
        ));
        assert!(manipulate_block(&frame, 0, 2.0, 5, 1).is_err());
        assert!(manipulate_block(&frame, 5, 2.0, 5, 1).is_err());
    }
}
