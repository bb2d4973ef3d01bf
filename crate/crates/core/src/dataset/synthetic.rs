//! Linear test data with a known set of relevant columns.

use ndarray::{Array1, Array2};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::{self, derive_seed, rng_from_seed};

/// Smallest coefficient magnitude drawn for an informative column.
const MIN_COEFFICIENT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_samples: usize,
    pub n_informative: usize,
    pub n_noise: usize,
    pub coefficient_range: [f64; 2],
    pub noise_sigma: f64,
}

impl Default for SyntheticSpec {
    /// 300 samples, 10 informative and 50 noise columns, noise sigma 0.1.
    fn default() -> Self {
        SyntheticSpec::new(300, 10, 50, 0.1)
    }
}

fn default_range() -> [f64; 2] {
    [-1.0, 1.0]
}

impl SyntheticSpec {
    /// Spec with the default coefficient range.
    pub fn new(n_samples: usize, n_informative: usize, n_noise: usize, noise_sigma: f64) -> Self {
        SyntheticSpec {
            n_samples,
            n_informative,
            n_noise,
            coefficient_range: default_range(),
            noise_sigma,
        }
    }

    pub fn n_features(&self) -> usize {
        self.n_informative + self.n_noise
    }

    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.coefficient_range;
        if self.n_samples == 0 || self.n_features() == 0 {
            return Err(Error::InvalidArgument("synthetic data needs samples and features".into()));
        }
        if !(lo <= hi) || lo.abs().max(hi.abs()) < MIN_COEFFICIENT {
            return Err(Error::InvalidArgument(format!(
                "coefficient range [{lo}, {hi}] contains no value with magnitude >= {MIN_COEFFICIENT}"
            )));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidArgument(format!("noise_sigma {} < 0", self.noise_sigma)));
        }
        Ok(())
    }
}

fn draw_coefficient(rng: &mut rng::Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        return lo;
    }
    loop {
        let c = rng.random_range(lo..=hi);
        if c.abs() >= MIN_COEFFICIENT {
            return c;
        }
    }
}

/// Standard-normal features; each target is a linear combination of the
/// informative columns plus Gaussian noise. Valence and arousal share the
/// informative columns but get independent coefficients and noise.
///
/// Returns the dataset and the sorted informative column indices, which are
/// scattered at random positions among the noise columns.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<(Dataset, Vec<usize>)> {
    spec.validate()?;
    let (n, d) = (spec.n_samples, spec.n_features());

    let mut feature_rng = rng_from_seed(derive_seed(seed, &[0]));
    let x = Array2::from_shape_simple_fn((n, d), || feature_rng.sample::<f64, _>(StandardNormal));

    let mut informative = rng::permutation(d, derive_seed(seed, &[1]))[..spec.n_informative].to_vec();
    informative.sort_unstable();

    let mut coef_rng = rng_from_seed(derive_seed(seed, &[2]));
    let mut noise_rng = rng_from_seed(derive_seed(seed, &[3]));
    let mut target = || {
        let coefs: Vec<f64> = informative
            .iter()
            .map(|_| draw_coefficient(&mut coef_rng, spec.coefficient_range))
            .collect();
        Array1::from_shape_fn(n, |i| {
            let signal: f64 = informative.iter().zip(&coefs).map(|(&j, c)| c * x[[i, j]]).sum();
            let noise: f64 = noise_rng.sample(StandardNormal);
            signal + spec.noise_sigma * noise
        })
    };
    let valence = target();
    let arousal = target();

    let ids = (0..n).map(|i| format!("syn{i:05}")).collect();
    let names = (0..d).map(|j| format!("x{j:03}")).collect();
    let ds = Dataset::new(ids, names, x, valence, arousal)?;
    Ok((ds, informative))
}
