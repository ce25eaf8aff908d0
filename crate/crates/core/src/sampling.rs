//! Gaussian control-sequence policies with reproducible, order-independent
//! sampling.
//!
//! Every sample in a batch gets its own counter-derived RNG stream, so sample
//! `k` depends only on `(master_seed, stream_id, k)` — not on the batch size,
//! the number of worker threads, or the order in which samples are produced.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::problem::ControlSequence;

/// A reproducible randomness source: one master seed shared by a whole
/// experiment plus a logical stream id separating its independent parts
/// (planning steps, noise channels, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        SeedSpec { master_seed, stream_id }
    }

    /// The same master seed with a different stream id.
    pub fn with_stream(self, stream_id: u64) -> Self {
        SeedSpec { master_seed: self.master_seed, stream_id }
    }

    /// The RNG for element `index` of this stream. Distinct
    /// `(stream_id, index)` pairs map to distinct ChaCha streams of the same
    /// master-seeded cipher.
    pub fn rng_for(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(splitmix64(splitmix64(self.stream_id) ^ index));
        rng
    }
}

/// SplitMix64 finalizer; decorrelates structured ids (0, 1, 2, ...) before
/// they are used as cipher stream numbers.
fn splitmix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// How a warm start fills the slot exposed by shifting the previous solution
/// one step forward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarmStartFill {
    /// Repeat the last input of the previous solution.
    RepeatLast,
    /// Fill with zeros.
    Zeros,
}

impl WarmStartFill {
    pub fn as_str(self) -> &'static str {
        match self {
            WarmStartFill::RepeatLast => "repeat_last",
            WarmStartFill::Zeros => "zeros",
        }
    }
}

impl std::str::FromStr for WarmStartFill {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "repeat_last" => Ok(WarmStartFill::RepeatLast),
            "zeros" => Ok(WarmStartFill::Zeros),
            other => Err(Error::InvalidArgument(format!(
                "unknown warm start fill '{other}' (expected 'repeat_last' or 'zeros')"
            ))),
        }
    }
}

/// Shifts a control sequence one step forward: row `t` of the result is row
/// `t+1` of the input, and the freed final row is filled per `fill`.
///
/// This is the standard receding-horizon warm start: after applying the first
/// input of a plan, the rest of the plan becomes the prior mean for the next
/// planning step.
pub fn shift_warm_start(seq: &ControlSequence, fill: WarmStartFill) -> ControlSequence {
    let m = seq.matrix();
    let t = m.nrows();
    let mut out = DMatrix::zeros(t, m.ncols());
    for row in 1..t {
        out.row_mut(row - 1).copy_from(&m.row(row));
    }
    match fill {
        WarmStartFill::RepeatLast => out.row_mut(t - 1).copy_from(&m.row(t - 1)),
        WarmStartFill::Zeros => {}
    }
    ControlSequence::new(out)
}

/// A Gaussian distribution over control sequences: independent entries with
/// mean `mean[(t, j)]` and per-input-component standard deviation `std[j]`
/// shared across the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSequencePolicy {
    mean: DMatrix<f64>,
    std: DVector<f64>,
}

impl GaussianSequencePolicy {
    /// `mean` is `horizon x input_dim` and must be finite; `std` has one
    /// strictly positive finite entry per input component.
    pub fn new(mean: DMatrix<f64>, std: DVector<f64>) -> Result<Self> {
        if mean.nrows() == 0 || mean.ncols() == 0 {
            return Err(Error::InvalidArgument("policy mean must be non-empty".into()));
        }
        if std.len() != mean.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "std has length {}, expected one entry per input component ({})",
                std.len(),
                mean.ncols()
            )));
        }
        if let Some(i) = mean.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "policy mean".into(), index: Some(i) });
        }
        for j in 0..std.len() {
            if !(std[j] > 0.0 && std[j].is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "std[{j}] = {} must be strictly positive and finite",
                    std[j]
                )));
            }
        }
        Ok(GaussianSequencePolicy { mean, std })
    }

    pub fn horizon(&self) -> usize {
        self.mean.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.mean.ncols()
    }

    pub fn mean(&self) -> &DMatrix<f64> {
        &self.mean
    }

    pub fn std(&self) -> &DVector<f64> {
        &self.std
    }

    /// Draws sample `index` of the stream described by `seed`. Entries are
    /// drawn in row-major order (step by step, component by component).
    pub fn sample_one(&self, seed: &SeedSpec, index: u64) -> ControlSequence {
        let mut rng = seed.rng_for(index);
        let mut m = DMatrix::zeros(self.horizon(), self.input_dim());
        for t in 0..self.horizon() {
            for j in 0..self.input_dim() {
                let z: f64 = rng.sample(StandardNormal);
                m[(t, j)] = self.mean[(t, j)] + self.std[j] * z;
            }
        }
        ControlSequence::new(m)
    }

    /// Draws `count` samples in parallel. Sample `k` of a batch equals
    /// `sample_one(seed, k)` bit-for-bit, whatever `count` and the thread
    /// count are.
    pub fn sample_batch(&self, count: usize, seed: &SeedSpec) -> Vec<ControlSequence> {
        (0..count)
            .into_par_iter()
            .map(|k| self.sample_one(seed, k as u64))
            .collect()
    }

    /// Exact log-density of a control sequence under this policy.
    pub fn log_pdf(&self, seq: &ControlSequence) -> Result<f64> {
        if seq.horizon() != self.horizon() || seq.input_dim() != self.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "sequence is {}x{}, policy is {}x{}",
                seq.horizon(),
                seq.input_dim(),
                self.horizon(),
                self.input_dim()
            )));
        }
        const HALF_LN_2PI: f64 = 0.918_938_533_204_672_74;
        let m = seq.matrix();
        let mut lp = 0.0;
        for t in 0..self.horizon() {
            for j in 0..self.input_dim() {
                let z = (m[(t, j)] - self.mean[(t, j)]) / self.std[j];
                lp += -HALF_LN_2PI - self.std[j].ln() - 0.5 * z * z;
            }
        }
        Ok(lp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_policy(mean: f64, std: f64) -> GaussianSequencePolicy {
        GaussianSequencePolicy::new(DMatrix::from_element(1, 1, mean), DVector::from_element(1, std))
            .unwrap()
    }

    #[test]
    fn same_seed_same_sample() {
        let p = scalar_policy(0.0, 1.0);
        let seed = SeedSpec::new(7, 3);
        assert_eq!(p.sample_one(&seed, 5), p.sample_one(&seed, 5));
    }

    #[test]
    fn distinct_streams_and_masters_differ() {
        let p = scalar_policy(0.0, 1.0);
        let base = SeedSpec::new(7, 3);
        let a = p.sample_one(&base, 0);
        assert_ne!(a, p.sample_one(&base.with_stream(4), 0));
        assert_ne!(a, p.sample_one(&SeedSpec::new(8, 3), 0));
        assert_ne!(a, p.sample_one(&base, 1));
    }

    #[test]
    fn batch_prefix_is_invariant_to_batch_size() {
        let p = GaussianSequencePolicy::new(
            DMatrix::from_fn(4, 2, |t, j| t as f64 - j as f64),
            DVector::from_vec(vec![0.5, 2.0]),
        )
        .unwrap();
        let seed = SeedSpec::new(42, 0);
        let small = p.sample_batch(10, &seed);
        let large = p.sample_batch(100, &seed);
        assert_eq!(&large[..10], &small[..]);
    }

    #[test]
    fn degenerate_std_pins_samples_to_mean() {
        let p = scalar_policy(1.25, 1e-300);
        let s = p.sample_one(&SeedSpec::new(0, 0), 0);
        assert!((s.matrix()[(0, 0)] - 1.25).abs() <= 1e-12);
    }

    #[test]
    fn sample_moments_match_policy_parameters() {
        let (mean, std) = (0.7, 1.3);
        let p = scalar_policy(mean, std);
        let batch = p.sample_batch(100_000, &SeedSpec::new(123, 0));
        let xs: Vec<f64> = batch.iter().map(|s| s.matrix()[(0, 0)]).collect();
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
        assert!((m - mean).abs() < 0.02, "sample mean {m}");
        assert!((var - std * std).abs() < 0.05, "sample variance {var}");
    }

    #[test]
    fn entries_are_uncorrelated_across_steps() {
        let p = GaussianSequencePolicy::new(DMatrix::zeros(2, 1), DVector::from_element(1, 1.0))
            .unwrap();
        let batch = p.sample_batch(100_000, &SeedSpec::new(9, 1));
        let cov = batch
            .iter()
            .map(|s| s.matrix()[(0, 0)] * s.matrix()[(1, 0)])
            .sum::<f64>()
            / batch.len() as f64;
        assert!(cov.abs() < 0.02, "cross-step covariance {cov}");
    }

    #[test]
    fn log_pdf_standard_normal_mode() {
        let p = scalar_policy(0.0, 1.0);
        let lp = p.log_pdf(&ControlSequence::zeros(1, 1)).unwrap();
        let expected = -0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((lp - expected).abs() < 1e-15, "{lp} vs {expected}");
    }

    #[test]
    fn log_pdf_scaled_normal_at_one_sigma() {
        let p = scalar_policy(0.0, 2.0);
        let u = ControlSequence::new(DMatrix::from_element(1, 1, 2.0));
        let lp = p.log_pdf(&u).unwrap();
        let expected = -0.5 * (2.0 * std::f64::consts::PI).ln() - 2.0f64.ln() - 0.5;
        assert!((lp - expected).abs() < 1e-15, "{lp} vs {expected}");
    }

    #[test]
    fn log_pdf_peaks_at_mean() {
        let p = GaussianSequencePolicy::new(
            DMatrix::from_fn(3, 2, |t, j| 0.3 * t as f64 - j as f64),
            DVector::from_vec(vec![0.7, 1.1]),
        )
        .unwrap();
        let at_mean = p.log_pdf(&ControlSequence::new(p.mean().clone())).unwrap();
        for (dt, dj) in [(0, 0), (1, 1), (2, 0)] {
            let mut m = p.mean().clone();
            m[(dt, dj)] += 0.1;
            let off = p.log_pdf(&ControlSequence::new(m)).unwrap();
            assert!(off < at_mean);
        }
    }

    #[test]
    fn density_integrates_to_one() {
        let p = scalar_policy(0.3, 0.8);
        let (lo, hi, n) = (0.3 - 8.0 * 0.8, 0.3 + 8.0 * 0.8, 16001);
        let h = (hi - lo) / (n - 1) as f64;
        let mut mass = 0.0;
        for i in 0..n {
            let u = lo + i as f64 * h;
            let pdf = p
                .log_pdf(&ControlSequence::new(DMatrix::from_element(1, 1, u)))
                .unwrap()
                .exp();
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            mass += w * pdf * h;
        }
        assert!((mass - 1.0).abs() < 1e-6, "mass {mass}");
    }

    #[test]
    fn affine_consistency_with_standard_policy() {
        let mean = DMatrix::from_fn(3, 2, |t, j| 0.4 * t as f64 + 0.1 * j as f64 - 0.5);
        let std = DVector::from_vec(vec![0.6, 1.7]);
        let policy = GaussianSequencePolicy::new(mean.clone(), std.clone()).unwrap();
        let standard =
            GaussianSequencePolicy::new(DMatrix::zeros(3, 2), DVector::from_element(2, 1.0))
                .unwrap();
        let seed = SeedSpec::new(2024, 5);
        for k in 0..16 {
            let a = policy.sample_one(&seed, k);
            let z = standard.sample_one(&seed, k);
            for t in 0..3 {
                for j in 0..2 {
                    let expected = mean[(t, j)] + std[j] * z.matrix()[(t, j)];
                    assert!((a.matrix()[(t, j)] - expected).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn shift_warm_start_examples() {
        let seq = ControlSequence::new(DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]));
        let repeated = shift_warm_start(&seq, WarmStartFill::RepeatLast);
        assert_eq!(repeated.matrix().as_slice(), &[2.0, 3.0, 3.0]);
        let zeroed = shift_warm_start(&seq, WarmStartFill::Zeros);
        assert_eq!(zeroed.matrix().as_slice(), &[2.0, 3.0, 0.0]);
    }

    #[test]
    fn shift_warm_start_single_step() {
        let seq = ControlSequence::new(DMatrix::from_element(1, 1, 4.0));
        assert_eq!(
            shift_warm_start(&seq, WarmStartFill::RepeatLast).matrix()[(0, 0)],
            4.0
        );
        assert_eq!(shift_warm_start(&seq, WarmStartFill::Zeros).matrix()[(0, 0)], 0.0);
    }

    #[test]
    fn invalid_policies_are_rejected() {
        let mean = DMatrix::zeros(1, 1);
        for bad in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            let err =
                GaussianSequencePolicy::new(mean.clone(), DVector::from_element(1, bad)).unwrap_err();
            assert!(matches!(err, Error::InvalidArgument(_)), "{err}");
        }
        let err =
            GaussianSequencePolicy::new(mean.clone(), DVector::from_vec(vec![1.0, 1.0])).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch(_)), "{err}");
        let err = GaussianSequencePolicy::new(
            DMatrix::from_element(1, 1, f64::NAN),
            DVector::from_element(1, 1.0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }), "{err}");
    }

    #[test]
    fn log_pdf_shape_mismatch_is_rejected() {
        let p = scalar_policy(0.0, 1.0);
        let err = p.log_pdf(&ControlSequence::zeros(2, 1)).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch(_)), "{err}");
    }

    #[test]
    fn warm_start_fill_round_trips_through_strings() {
        for fill in [WarmStartFill::RepeatLast, WarmStartFill::Zeros] {
            assert_eq!(fill.as_str().parse::<WarmStartFill>().unwrap(), fill);
        }
        assert!("sideways".parse::<WarmStartFill>().is_err());
    }
}
