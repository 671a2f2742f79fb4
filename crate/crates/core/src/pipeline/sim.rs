use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{check_blur, check_range, gaussian_blur, geometry_step, normalized, CropRegion, PipelineError};
use crate::render::DepthImage;

/// Rectangular "white region" dropouts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArtifactConfig {
    /// Rectangle count is uniform in `0..=max_count`.
    pub max_count: usize,
    /// Side lengths are uniform in `min_size..=max_size` pixels.
    pub min_size: usize,
    pub max_size: usize,
    /// Fill depth (m); defaults to the far end of the valid range.
    pub fill: Option<f64>,
}

impl Default for ArtifactConfig {
    fn default() -> Self {
        Self {
            max_count: 2,
            min_size: 1,
            max_size: 4,
            fill: None,
        }
    }
}

impl ArtifactConfig {
    pub fn none() -> Self {
        Self {
            max_count: 0,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimPipelineConfig {
    /// Source rectangle in raw pixels; whole frame when absent.
    pub crop: Option<CropRegion>,
    /// `[width, height]` after resizing; crop size when absent.
    pub output_size: Option<[usize; 2]>,
    /// Noise standard deviation (m).
    pub noise_sigma: f64,
    /// Extra standard deviation per meter of depth (m/m); off by default.
    pub sigma_per_meter: f64,
    /// `[d_min, d_max]` (m); only depths inside it receive noise.
    pub valid_range: [f64; 2],
    pub artifacts: ArtifactConfig,
    /// Odd kernel width in pixels; 1 disables the blur.
    pub blur_kernel: usize,
    /// Kernel standard deviation (pixels).
    pub blur_sigma: f64,
    /// Depth range (m) mapped onto `[0, 1]`.
    pub clip_range: [f64; 2],
    /// Probability of replacing the frame with noise.
    pub p_ood: f64,
    /// Seed used by [`fsim_apply_seeded`] callers such as the CLI.
    pub seed: u64,
}

impl Default for SimPipelineConfig {
    fn default() -> Self {
        Self {
            crop: None,
            output_size: None,
            noise_sigma: 0.01,
            sigma_per_meter: 0.0,
            valid_range: [0.3, 3.0],
            artifacts: ArtifactConfig::default(),
            blur_kernel: 3,
            blur_sigma: 0.8,
            clip_range: [0.3, 3.0],
            p_ood: 0.01,
            seed: 0,
        }
    }
}

impl SimPipelineConfig {
    /// Pure clip-and-normalize: no noise, artifacts, blur or replacement.
    pub fn clean() -> Self {
        Self {
            noise_sigma: 0.0,
            artifacts: ArtifactConfig::none(),
            blur_kernel: 1,
            p_ood: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        check_range("valid_range", self.valid_range)?;
        check_range("clip_range", self.clip_range)?;
        check_blur(self.blur_kernel, self.blur_sigma)?;
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(PipelineError::Config(format!("noise_sigma {} must be ≥ 0", self.noise_sigma)));
        }
        if !(self.sigma_per_meter >= 0.0 && self.sigma_per_meter.is_finite()) {
            return Err(PipelineError::Config("sigma_per_meter must be ≥ 0".into()));
        }
        if !(0.0..=1.0).contains(&self.p_ood) {
            return Err(PipelineError::Config(format!("p_ood {} outside [0, 1]", self.p_ood)));
        }
        let a = &self.artifacts;
        if a.max_count > 0 && (a.min_size == 0 || a.min_size > a.max_size) {
            return Err(PipelineError::Config("artifact sizes need 1 ≤ min_size ≤ max_size".into()));
        }
        if let Some(f) = a.fill {
            if !f.is_finite() {
                return Err(PipelineError::Config("artifact fill must be finite".into()));
            }
        }
        Ok(())
    }
}

/// What the random steps did to one frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimReport {
    /// Artifact rectangles as `[x, y, width, height]` in output pixels.
    pub artifacts: Vec<[usize; 4]>,
    pub ood_replaced: bool,
}

pub fn fsim_apply<R: Rng + ?Sized>(raw: &DepthImage, cfg: &SimPipelineConfig, rng: &mut R) -> Result<DepthImage, PipelineError> {
    fsim_report(raw, cfg, rng).map(|(img, _)| img)
}

/// Same as [`fsim_apply`] with a ChaCha8 stream seeded from `seed`.
pub fn fsim_apply_seeded(raw: &DepthImage, cfg: &SimPipelineConfig, seed: u64) -> Result<DepthImage, PipelineError> {
    fsim_apply(raw, cfg, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Crop/resize, gated noise, artifacts, blur, clip/normalize, then the
/// out-of-distribution replacement, in that order.
pub fn fsim_report<R: Rng + ?Sized>(
    raw: &DepthImage,
    cfg: &SimPipelineConfig,
    rng: &mut R,
) -> Result<(DepthImage, SimReport), PipelineError> {
    cfg.validate()?;
    let mut img = if raw.values.iter().all(|v| v.is_finite()) {
        geometry_step(raw, cfg.crop.as_ref(), cfg.output_size)?
    } else {
        // Non-finite depths are unknown: treat them as far misses.
        let mut clean = raw.clone();
        for (v, ok) in clean.values.iter_mut().zip(clean.valid.iter_mut()) {
            if !v.is_finite() {
                *v = cfg.valid_range[1];
                *ok = false;
            }
        }
        geometry_step(&clean, cfg.crop.as_ref(), cfg.output_size)?
    };
    let mut report = SimReport::default();

    apply_noise(&mut img, cfg, rng);

    let a = &cfg.artifacts;
    if a.max_count > 0 {
        let fill = a.fill.unwrap_or(cfg.valid_range[1]);
        let count = rng.random_range(0..=a.max_count);
        for _ in 0..count {
            let w = rng.random_range(a.min_size..=a.max_size).min(img.width);
            let h = rng.random_range(a.min_size..=a.max_size).min(img.height);
            let x = rng.random_range(0..=img.width - w);
            let y = rng.random_range(0..=img.height - h);
            for r in y..y + h {
                for c in x..x + w {
                    let i = r * img.width + c;
                    img.values[i] = fill;
                    img.valid[i] = false;
                }
            }
            report.artifacts.push([x, y, w, h]);
        }
    }

    gaussian_blur(&mut img.values, img.width, img.height, cfg.blur_kernel, cfg.blur_sigma);
    let mut out = normalized(img.values, img.width, img.height, cfg.clip_range);

    if rng.random_bool(cfg.p_ood) {
        let ood = Normal::<f64>::new(0.5, 0.25).expect("valid normal");
        for v in &mut out.values {
            *v = ood.sample(rng).clamp(0.0, 1.0);
        }
        report.ood_replaced = true;
    }
    Ok((out, report))
}

/// Adds `N(0, σ(z)²)` to valid pixels whose depth lies in the valid range;
/// every other pixel is left bit-for-bit unchanged.
pub fn apply_noise<R: Rng + ?Sized>(img: &mut DepthImage, cfg: &SimPipelineConfig, rng: &mut R) {
    let [lo, hi] = cfg.valid_range;
    for (v, ok) in img.values.iter_mut().zip(&img.valid) {
        if !*ok || *v < lo || *v > hi {
            continue;
        }
        let sigma = cfg.noise_sigma + cfg.sigma_per_meter * *v;
        if sigma > 0.0 {
            *v += sigma * rng.sample::<f64, _>(rand_distr::StandardNormal);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::DepthUnit;

    #[test]
    fn clean_pipeline_is_pure_normalization() {
        let raw = DepthImage::filled(8, 4, 1.5, DepthUnit::Meters);
        let out = fsim_apply_seeded(&raw, &SimPipelineConfig::clean(), 3).unwrap();
        assert_eq!(out.unit, DepthUnit::Normalized);
        assert!(out.values.iter().all(|&v| (v - 1.2 / 2.7).abs() < 1e-15));
    }

    #[test]
    fn noise_skips_out_of_range_pixels() {
        let mut img = DepthImage::from_values(4, 1, vec![0.1, 1.0, 2.0, 5.0], DepthUnit::Meters);
        let before = img.values.clone();
        let cfg = SimPipelineConfig {
            noise_sigma: 0.05,
            ..SimPipelineConfig::clean()
        };
        apply_noise(&mut img, &cfg, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(img.values[0].to_bits(), before[0].to_bits());
        assert_eq!(img.values[3].to_bits(), before[3].to_bits());
        assert_ne!(img.values[1], before[1]);
    }

    #[test]
    fn artifacts_fill_far_and_stay_in_frame() {
        let raw = DepthImage::filled(20, 10, 1.0, DepthUnit::Meters);
        let cfg = SimPipelineConfig {
            artifacts: ArtifactConfig {
                max_count: 5,
                min_size: 2,
                max_size: 6,
                fill: None,
            },
            ..SimPipelineConfig::clean()
        };
        for seed in 0..20 {
            let (out, rep) = fsim_report(&raw, &cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            for &[x, y, w, h] in &rep.artifacts {
                assert!(x + w <= 20 && y + h <= 10);
                assert_eq!(out.get(x, y), 1.0);
            }
        }
    }

    #[test]
    fn certain_ood_replaces_the_frame() {
        let raw = DepthImage::filled(6, 6, 1.0, DepthUnit::Meters);
        let cfg = SimPipelineConfig {
            p_ood: 1.0,
            ..SimPipelineConfig::clean()
        };
        let (out, rep) = fsim_report(&raw, &cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert!(rep.ood_replaced);
        assert!(out.values.iter().any(|&v| (v - 0.7 / 2.7).abs() > 1e-9));
    }

    #[test]
    fn config_validation() {
        let bad = [
            SimPipelineConfig {
                blur_kernel: 2,
                ..Default::default()
            },
            SimPipelineConfig {
                p_ood: 1.5,
                ..Default::default()
            },
            SimPipelineConfig {
                valid_range: [2.0, 1.0],
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err());
        }
    }
}
