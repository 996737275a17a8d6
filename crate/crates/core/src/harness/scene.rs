//! Synthetic hyperspectral scenes with known per-pixel abundances.

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::batch::PixelBatch;
use super::sampling::poisson_sample;
use crate::error::{Error, Result};
use crate::problem::DenseOperator;

/// Scale applied to the standardized random fields before the softmax.
const FIELD_CONTRAST: f64 = 2.0;

const SPECTRA_STREAM: u64 = 0;
const FIELD_STREAM: u64 = 1;
/// Pixel `p` draws its noise from stream `NOISE_STREAM_BASE + p`.
const NOISE_STREAM_BASE: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SceneConfig {
    pub height: usize,
    pub width: usize,
    pub n_endmembers: usize,
    pub n_bands: usize,
    /// Approximate mean total expected photon count per pixel. Larger means
    /// more photons and a higher signal-to-noise ratio.
    pub sigma: f64,
    /// Standard deviation, in pixels, of the Gaussian kernel smoothing the
    /// abundance fields.
    pub smoothness: f64,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            height: 32,
            width: 32,
            n_endmembers: 3,
            n_bands: 64,
            sigma: 40.0,
            smoothness: 4.0,
            seed: 42,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.height == 0 || self.width == 0 {
            return bad(format!("scene must have pixels, got {}×{}", self.height, self.width));
        }
        if self.n_endmembers == 0 || self.n_bands == 0 {
            return bad("scene needs at least one endmember and one band".into());
        }
        if self.n_endmembers > self.n_bands {
            return bad(format!(
                "more endmembers ({}) than bands ({})",
                self.n_endmembers, self.n_bands
            ));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if !(self.smoothness > 0.0 && self.smoothness.is_finite()) {
            return bad(format!("smoothness must be positive, got {}", self.smoothness));
        }
        Ok(())
    }

    pub fn n_pixels(&self) -> usize {
        self.height * self.width
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnmixingScene {
    pub config: SceneConfig,
    /// Endmember signatures, bands × endmembers, already scaled by `sigma`.
    pub spectra: Array2<f64>,
    /// Ground truth, one row per pixel (row-major over the image), each on the unit simplex.
    pub abundances: Array2<f64>,
    /// `S a_p` for every pixel, pixels × bands.
    pub expected: Array2<f64>,
    /// Observed counts, pixels × bands. Integer-valued when sampled.
    pub counts: Array2<f64>,
}

impl UnmixingScene {
    /// The same scene with the counts replaced by their expectations.
    pub fn noiseless(&self) -> Self {
        Self {
            counts: self.expected.clone(),
            ..self.clone()
        }
    }

    pub fn batch(&self) -> Result<PixelBatch> {
        PixelBatch::new(DenseOperator::new(self.spectra.clone())?, self.counts.view())
    }
}

/// Builds a deterministic scene from `cfg`.
pub fn generate_scene(cfg: &SceneConfig) -> Result<UnmixingScene> {
    cfg.validate()?;
    let spectra = endmember_spectra(cfg);
    let abundances = abundance_maps(cfg);
    let expected = abundances.dot(&spectra.t());

    let mut counts = Array2::zeros(expected.raw_dim());
    for (p, (mean, mut out)) in expected
        .axis_iter(Axis(0))
        .zip(counts.axis_iter_mut(Axis(0)))
        .enumerate()
    {
        let mut rng = stream(cfg.seed, NOISE_STREAM_BASE + p as u64);
        let draws = poisson_sample(mean, &mut rng)?;
        out.assign(&draws.mapv(|k| k as f64));
    }

    Ok(UnmixingScene {
        config: *cfg,
        spectra,
        abundances,
        expected,
        counts,
    })
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Each endmember is a positive baseline plus two to four Gaussian bumps.
/// All columns share one scale factor chosen so that the mean column sum is
/// `sigma`, which keeps the relative brightness of the materials.
fn endmember_spectra(cfg: &SceneConfig) -> Array2<f64> {
    let mut rng = stream(cfg.seed, SPECTRA_STREAM);
    let m = cfg.n_bands as f64;
    let mut s = Array2::zeros((cfg.n_bands, cfg.n_endmembers));
    for mut col in s.axis_iter_mut(Axis(1)) {
        let baseline = rng.random_range(0.05..0.25);
        let brightness = rng.random_range(0.5..1.5);
        let bumps: Vec<(f64, f64, f64)> = (0..rng.random_range(2..=4))
            .map(|_| {
                let center = rng.random_range(0.0..m);
                let width = rng.random_range((m / 32.0).max(0.5)..(m / 6.0).max(1.0));
                let amplitude = rng.random_range(0.3..1.0);
                (center, width, amplitude)
            })
            .collect();
        for (band, v) in col.iter_mut().enumerate() {
            let b = band as f64;
            let bump: f64 = bumps
                .iter()
                .map(|&(c, w, a)| a * (-(b - c) * (b - c) / (2.0 * w * w)).exp())
                .sum();
            *v = brightness * (baseline + bump);
        }
    }
    let mean_sum = s.sum() / cfg.n_endmembers as f64;
    s.mapv_inplace(|v| v * cfg.sigma / mean_sum);
    s
}

/// Smoothed Gaussian random fields mapped through a per-pixel softmax.
fn abundance_maps(cfg: &SceneConfig) -> Array2<f64> {
    let mut rng = stream(cfg.seed, FIELD_STREAM);
    let (h, w, q) = (cfg.height, cfg.width, cfg.n_endmembers);
    let kernel = gaussian_kernel(cfg.smoothness);

    let mut logits = Array2::zeros((h * w, q));
    for e in 0..q {
        let noise = Array2::from_shape_simple_fn((h, w), || rng.sample::<f64, _>(StandardNormal));
        let field = blur_rows(&blur_rows(&noise, &kernel).t().to_owned(), &kernel)
            .t()
            .to_owned();
        let flat: Array1<f64> = field.iter().copied().collect();
        let mean = flat.mean().unwrap_or(0.0);
        let sd = flat.std(0.0);
        let scale = if sd > 0.0 { FIELD_CONTRAST / sd } else { 0.0 };
        logits
            .column_mut(e)
            .assign(&flat.mapv(|v| (v - mean) * scale));
    }

    for mut row in logits.axis_iter_mut(Axis(0)) {
        let top = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - top).exp());
        let total = row.sum();
        row.mapv_inplace(|v| v / total);
    }
    logits
}

fn gaussian_kernel(sd: f64) -> Vec<f64> {
    let radius = (3.0 * sd).ceil() as i64;
    let k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sd * sd)).exp())
        .collect();
    let total: f64 = k.iter().sum();
    k.into_iter().map(|v| v / total).collect()
}

/// Convolves every row with `kernel`, clamping indices at the borders.
fn blur_rows(a: &Array2<f64>, kernel: &[f64]) -> Array2<f64> {
    let radius = (kernel.len() / 2) as i64;
    let (rows, cols) = a.dim();
    Array2::from_shape_fn((rows, cols), |(r, c)| {
        kernel
            .iter()
            .enumerate()
            .map(|(k, &wk)| {
                let idx = (c as i64 + k as i64 - radius).clamp(0, cols as i64 - 1) as usize;
                wk * a[[r, idx]]
            })
            .sum()
    })
}
