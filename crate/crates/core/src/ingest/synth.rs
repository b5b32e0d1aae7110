//! Synthetic pulsatility cohorts.
//!
//! Each sample is one cardiac cycle sampled at 30 frames:
//!
//! ```text
//! x_i = a * (w1 * sin(2*pi*i/30 + phi) + w2 * sin(4*pi*i/30 + psi)) + noise_i
//! ```
//!
//! Amplitude `a` and the phases are drawn per sample around class-specific
//! centres; TBI samples get a larger amplitude spread, phase spread and noise
//! than healthy ones. The recording angle is drawn uniformly from
//! `angle_set` independently of the class and of the waveform.
//!
//! Sample `i` draws from stream `i + 1` of the seed and stream 0 shuffles the
//! label order, so the output does not depend on generation order.

use std::f64::consts::PI;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::cohort::{raw_feature_names, Cohort, Label, Source, HEALTHY, N_FRAMES, N_RAW_FEATURES, TBI};
use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n_samples: usize,
    /// TBI count divided by Healthy count.
    pub imbalance_ratio: f64,
    /// Recording angles in degrees.
    pub angle_set: Vec<f64>,
    pub healthy_amp: f64,
    pub tbi_amp: f64,
    /// Relative amplitude spread (standard deviation of `a / amp`).
    pub healthy_amp_sd: f64,
    pub tbi_amp_sd: f64,
    pub healthy_noise_sd: f64,
    pub tbi_noise_sd: f64,
    /// Weights of the cardiac fundamental and its second harmonic.
    pub harmonic_weights: [f64; 2],
    /// Mean phase offset of the fundamental (radians); the harmonic is centred
    /// on twice this value.
    pub healthy_phase: f64,
    pub tbi_phase: f64,
    pub healthy_phase_sd: f64,
    pub tbi_phase_sd: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_samples: 2000,
            imbalance_ratio: 9.0,
            angle_set: vec![0.0, 15.0, 30.0, 45.0, 60.0],
            healthy_amp: 1.0,
            tbi_amp: 1.3,
            healthy_amp_sd: 0.1,
            tbi_amp_sd: 0.3,
            healthy_noise_sd: 0.08,
            tbi_noise_sd: 0.14,
            harmonic_weights: [1.0, 0.45],
            healthy_phase: 0.0,
            tbi_phase: 0.35,
            healthy_phase_sd: 0.35,
            tbi_phase_sd: 0.7,
            seed: 42,
        }
    }
}

impl GeneratorConfig {
    // negated comparisons so that NaN fails every check
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.n_samples < 20 {
            return bad("n_samples must be at least 20");
        }
        if !(self.imbalance_ratio > 0.0 && self.imbalance_ratio.is_finite()) {
            return bad("imbalance_ratio must be positive");
        }
        if !(self.healthy_noise_sd > 0.0) {
            return bad("healthy_noise_sd must be positive");
        }
        if !(self.tbi_noise_sd > self.healthy_noise_sd) {
            return bad("tbi_noise_sd must exceed healthy_noise_sd");
        }
        if self.angle_set.is_empty() {
            return bad("angle_set must not be empty");
        }
        let finite = [
            self.healthy_amp,
            self.tbi_amp,
            self.healthy_amp_sd,
            self.tbi_amp_sd,
            self.tbi_noise_sd,
            self.harmonic_weights[0],
            self.harmonic_weights[1],
            self.healthy_phase,
            self.tbi_phase,
            self.healthy_phase_sd,
            self.tbi_phase_sd,
        ];
        if finite.iter().chain(&self.angle_set).any(|v| !v.is_finite()) {
            return bad("generator parameters must be finite");
        }
        if self.healthy_amp_sd < 0.0 || self.tbi_amp_sd < 0.0 || self.healthy_phase_sd < 0.0 || self.tbi_phase_sd < 0.0
        {
            return bad("spread parameters must be non-negative");
        }
        Ok(())
    }

    /// Number of TBI rows: `round(n * r / (r + 1))`, kept inside `1..n`.
    pub fn tbi_count(&self) -> usize {
        let r = self.imbalance_ratio;
        let n = self.n_samples;
        let tbi = (n as f64 * r / (r + 1.0)).round() as usize;
        tbi.clamp(1, n - 1)
    }
}

struct ClassParams {
    amp: f64,
    amp_sd: f64,
    noise_sd: f64,
    phase: f64,
    phase_sd: f64,
}

pub fn generate_cohort(cfg: &GeneratorConfig) -> Result<Cohort> {
    cfg.validate()?;
    let n = cfg.n_samples;
    let n_tbi = cfg.tbi_count();

    let mut labels: Vec<Label> = std::iter::repeat_n(TBI, n_tbi)
        .chain(std::iter::repeat_n(HEALTHY, n - n_tbi))
        .collect();
    RngStream::new(cfg.seed, 0).shuffle(&mut labels);

    let healthy = ClassParams {
        amp: cfg.healthy_amp,
        amp_sd: cfg.healthy_amp_sd,
        noise_sd: cfg.healthy_noise_sd,
        phase: cfg.healthy_phase,
        phase_sd: cfg.healthy_phase_sd,
    };
    let tbi = ClassParams {
        amp: cfg.tbi_amp,
        amp_sd: cfg.tbi_amp_sd,
        noise_sd: cfg.tbi_noise_sd,
        phase: cfg.tbi_phase,
        phase_sd: cfg.tbi_phase_sd,
    };
    let [w1, w2] = cfg.harmonic_weights;

    let mut features = Array2::<f64>::zeros((n, N_RAW_FEATURES));
    for (j, mut row) in features.rows_mut().into_iter().enumerate() {
        let p = if labels[j] == TBI { &tbi } else { &healthy };
        let mut rng = RngStream::new(cfg.seed, j as u64 + 1);
        let a = p.amp * (1.0 + p.amp_sd * rng.standard_normal());
        let phi = rng.normal(p.phase, p.phase_sd);
        let psi = rng.normal(2.0 * p.phase, p.phase_sd);
        let angle = cfg.angle_set[rng.below(cfg.angle_set.len())];
        for i in 1..=N_FRAMES {
            let t = i as f64 / N_FRAMES as f64;
            let wave = w1 * libm::sin(2.0 * PI * t + phi) + w2 * libm::sin(4.0 * PI * t + psi);
            row[i - 1] = a * wave + rng.normal(0.0, p.noise_sd);
        }
        row[N_FRAMES] = angle;
    }

    Cohort::new(
        features,
        labels,
        raw_feature_names(),
        Source::Synthetic { seed: cfg.seed },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{pearson, sample_variance};

    fn column(c: &Cohort, j: usize) -> Vec<f64> {
        c.features.column(j).to_vec()
    }

    fn mean_lag_corr(c: &Cohort, lag: usize) -> f64 {
        let pairs: Vec<f64> = (0..N_FRAMES - lag)
            .map(|i| pearson(&column(c, i), &column(c, i + lag)))
            .collect();
        pairs.iter().sum::<f64>() / pairs.len() as f64
    }

    #[test]
    fn exact_class_split() {
        let cfg = GeneratorConfig {
            n_samples: 2000,
            imbalance_ratio: 9.0,
            ..Default::default()
        };
        let c = generate_cohort(&cfg).unwrap();
        assert_eq!(c.class_counts(), [200, 1800]);
        assert_eq!(c.n_features(), 31);
    }

    #[test]
    fn class_count_rounding() {
        for (n, r) in [(21usize, 2.5f64), (100, 0.3), (57, 9.0), (20, 1.0), (999, 4.2)] {
            let cfg = GeneratorConfig {
                n_samples: n,
                imbalance_ratio: r,
                ..Default::default()
            };
            let c = generate_cohort(&cfg).unwrap();
            let expected = (n as f64 * r / (r + 1.0)).round();
            assert!((c.class_counts()[1] as f64 - expected).abs() <= 1.0);
        }
    }

    #[test]
    fn correlation_signature() {
        let c = generate_cohort(&GeneratorConfig::default()).unwrap();
        let lag1 = mean_lag_corr(&c, 1);
        let lag15 = mean_lag_corr(&c, 15);
        assert!(lag1 > 0.8, "lag-1 {lag1}");
        assert!(lag15 < 0.0, "lag-15 {lag15}");
    }

    #[test]
    fn tbi_more_dispersed() {
        let c = generate_cohort(&GeneratorConfig::default()).unwrap();
        let healthy: Vec<usize> = (0..c.n_samples()).filter(|&i| c.labels[i] == 0).collect();
        let tbi: Vec<usize> = (0..c.n_samples()).filter(|&i| c.labels[i] == 1).collect();
        let h = c.subset(&healthy);
        let t = c.subset(&tbi);
        let wins = (0..N_FRAMES)
            .filter(|&j| sample_variance(&column(&h, j)) < sample_variance(&column(&t, j)))
            .count();
        assert!(wins >= 25, "{wins}");
    }

    #[test]
    fn angle_independent_of_frames() {
        let c = generate_cohort(&GeneratorConfig::default()).unwrap();
        let angle = column(&c, N_FRAMES);
        for j in 0..N_FRAMES {
            let r = pearson(&angle, &column(&c, j));
            assert!(r.abs() < 0.1, "frame {j}: {r}");
        }
        assert!(angle.iter().all(|a| [0.0, 15.0, 30.0, 45.0, 60.0].contains(a)));
    }

    #[test]
    fn deterministic() {
        let cfg = GeneratorConfig {
            n_samples: 300,
            seed: 7,
            ..Default::default()
        };
        let a = generate_cohort(&cfg).unwrap();
        let b = generate_cohort(&cfg).unwrap();
        assert_eq!(a, b);
        let other = generate_cohort(&GeneratorConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a.features, other.features);
    }

    #[test]
    fn invalid_configs() {
        let base = GeneratorConfig::default();
        let cases = [
            GeneratorConfig {
                n_samples: 19,
                ..base.clone()
            },
            GeneratorConfig {
                imbalance_ratio: 0.0,
                ..base.clone()
            },
            GeneratorConfig {
                tbi_noise_sd: 0.05,
                ..base.clone()
            },
            GeneratorConfig {
                healthy_noise_sd: 0.0,
                ..base.clone()
            },
            GeneratorConfig {
                angle_set: vec![],
                ..base.clone()
            },
        ];
        for cfg in cases {
            assert!(matches!(generate_cohort(&cfg), Err(Error::InvalidConfig(_))));
        }
    }
}
