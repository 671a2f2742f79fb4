//! Depth post-processing: crop/resize, the simulated-sensor degradation
//! pipeline, the real-sensor refinement pipeline and the strided history.
//!
//! Both pipelines end with the same clip-and-normalize step, so their outputs
//! live in one normalized observation space.

mod history;
mod real;
mod sim;
pub mod stream;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::render::{DepthImage, DepthUnit};

pub use history::{DepthHistory, HistoryConfig, HistoryReader, HistoryWindow, HistoryWriter};
pub use real::{freal_apply, inpaint, RealPipelineConfig};
pub use sim::{apply_noise, fsim_apply, fsim_apply_seeded, fsim_report, ArtifactConfig, SimPipelineConfig, SimReport};

#[derive(Debug, Error, PartialEq)]
pub enum PipelineError {
    #[error("crop region {0:?} lies outside the {1}×{2} image")]
    CropOutOfBounds(CropRegion, usize, usize),
    #[error("crop region and target size must have positive area")]
    ZeroArea,
    #[error("uninpaintable frame: no valid pixels")]
    Uninpaintable,
    #[error("invalid pipeline config: {0}")]
    Config(String),
    #[error("steps must increase: got {got} after {last}")]
    NonMonotonicStep { last: u64, got: u64 },
    #[error("history is empty")]
    EmptyHistory,
}

/// Axis-aligned source rectangle in pixel units. Fractional bounds are
/// allowed so that chained resizes can be folded into one region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CropRegion {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl CropRegion {
    pub fn full(width: usize, height: usize) -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            width: width as f64,
            height: height as f64,
        }
    }

    /// `width × height` window centered in a `img_w × img_h` image.
    pub fn centered(img_w: usize, img_h: usize, width: usize, height: usize) -> Self {
        Self {
            x: 0.5 * (img_w as f64 - width as f64),
            y: 0.5 * (img_h as f64 - height as f64),
            width: width as f64,
            height: height as f64,
        }
    }
}

/// Area-weighted downsampling of `region` to `target_w × target_h`. Invalid
/// pixels are left out of each average; a target pixel with no valid source
/// stays invalid and holds the plain mean of its sources.
pub fn crop_resize(
    img: &DepthImage,
    region: &CropRegion,
    target_w: usize,
    target_h: usize,
) -> Result<DepthImage, PipelineError> {
    if !(region.width > 0.0 && region.height > 0.0) || target_w == 0 || target_h == 0 {
        return Err(PipelineError::ZeroArea);
    }
    let slack = 1e-9;
    if region.x < -slack
        || region.y < -slack
        || region.x + region.width > img.width as f64 + slack
        || region.y + region.height > img.height as f64 + slack
    {
        return Err(PipelineError::CropOutOfBounds(*region, img.width, img.height));
    }
    let sx = region.width / target_w as f64;
    let sy = region.height / target_h as f64;
    let mut values = Vec::with_capacity(target_w * target_h);
    let mut valid = Vec::with_capacity(target_w * target_h);
    for ty in 0..target_h {
        let y0 = region.y + ty as f64 * sy;
        let y1 = y0 + sy;
        let rows = span(y0, y1, img.height);
        for tx in 0..target_w {
            let x0 = region.x + tx as f64 * sx;
            let x1 = x0 + sx;
            let cols = span(x0, x1, img.width);
            let (mut sum, mut weight, mut any_sum, mut any_weight) = (0.0, 0.0, 0.0, 0.0);
            for r in rows.0..rows.1 {
                let wy = overlap(y0, y1, r);
                for c in cols.0..cols.1 {
                    let w = wy * overlap(x0, x1, c);
                    if w <= 0.0 {
                        continue;
                    }
                    let i = r * img.width + c;
                    any_sum += w * img.values[i];
                    any_weight += w;
                    if img.valid[i] {
                        sum += w * img.values[i];
                        weight += w;
                    }
                }
            }
            if weight > 0.0 {
                values.push(sum / weight);
                valid.push(true);
            } else {
                values.push(if any_weight > 0.0 { any_sum / any_weight } else { 0.0 });
                valid.push(false);
            }
        }
    }
    Ok(DepthImage {
        width: target_w,
        height: target_h,
        values,
        valid,
        unit: img.unit,
    })
}

fn span(a: f64, b: f64, len: usize) -> (usize, usize) {
    let lo = (a.floor().max(0.0) as usize).min(len);
    let hi = (b.ceil().max(0.0) as usize).min(len);
    (lo, hi)
}

fn overlap(a: f64, b: f64, cell: usize) -> f64 {
    let c0 = cell as f64;
    (b.min(c0 + 1.0) - a.max(c0)).max(0.0)
}

/// Optional crop followed by an optional resize; both default to the
/// identity.
pub(crate) fn geometry_step(
    img: &DepthImage,
    crop: Option<&CropRegion>,
    output: Option<[usize; 2]>,
) -> Result<DepthImage, PipelineError> {
    if crop.is_none() && output.is_none() {
        return Ok(img.clone());
    }
    let region = crop.copied().unwrap_or_else(|| CropRegion::full(img.width, img.height));
    let [w, h] = output.unwrap_or([region.width.round() as usize, region.height.round() as usize]);
    crop_resize(img, &region, w, h)
}

/// Normalized 1-D Gaussian taps.
pub fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    let half = (size / 2) as isize;
    let taps: Vec<f64> = (-half..=half)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / total).collect()
}

/// Separable Gaussian blur with edge-replicate padding. Size 1 is the
/// identity.
pub fn gaussian_blur(values: &mut [f64], width: usize, height: usize, size: usize, sigma: f64) {
    if size <= 1 || width == 0 || height == 0 {
        return;
    }
    let k = gaussian_kernel(size, sigma);
    let half = (size / 2) as isize;
    let clampi = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; values.len()];
    for r in 0..height {
        for c in 0..width {
            tmp[r * width + c] = k
                .iter()
                .enumerate()
                .map(|(t, w)| w * values[r * width + clampi(c as isize + t as isize - half, width)])
                .sum();
        }
    }
    for r in 0..height {
        for c in 0..width {
            values[r * width + c] = k
                .iter()
                .enumerate()
                .map(|(t, w)| w * tmp[clampi(r as isize + t as isize - half, height) * width + c])
                .sum();
        }
    }
}

/// Clamps to `[lo, hi]` and maps affinely onto `[0, 1]`. NaN maps to 1 (far).
pub fn clip_normalize(z: f64, lo: f64, hi: f64) -> f64 {
    if z.is_nan() {
        return 1.0;
    }
    ((z.clamp(lo, hi) - lo) / (hi - lo)).clamp(0.0, 1.0)
}

pub(crate) fn normalized(values: Vec<f64>, width: usize, height: usize, range: [f64; 2]) -> DepthImage {
    let values: Vec<f64> = values.into_iter().map(|z| clip_normalize(z, range[0], range[1])).collect();
    DepthImage::from_values(width, height, values, DepthUnit::Normalized)
}

pub(crate) fn check_blur(size: usize, sigma: f64) -> Result<(), PipelineError> {
    if size.is_multiple_of(2) {
        return Err(PipelineError::Config(format!("blur kernel size {size} must be odd")));
    }
    if size > 1 && !(sigma > 0.0 && sigma.is_finite()) {
        return Err(PipelineError::Config(format!("blur sigma {sigma} must be positive")));
    }
    Ok(())
}

pub(crate) fn check_range(name: &str, r: [f64; 2]) -> Result<(), PipelineError> {
    if r[0] > 0.0 && r[0] < r[1] && r[1].is_finite() {
        Ok(())
    } else {
        Err(PipelineError::Config(format!("{name} must satisfy 0 < min < max, got {r:?}")))
    }
}

/// Settings document shared by the CLI and config files; every section is
/// optional and falls back to its defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSettings {
    pub sim: SimPipelineConfig,
    pub real: RealPipelineConfig,
    pub history: HistoryConfig,
}

impl PipelineSettings {
    /// Parses JSON, or TOML when `path` ends in `.toml`.
    pub fn from_str_for(path: &Path, text: &str) -> Result<Self, PipelineError> {
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        let parsed: Self = if is_toml {
            toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?
        } else {
            serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?
        };
        parsed.sim.validate()?;
        parsed.real.validate()?;
        parsed.history.validate()?;
        Ok(parsed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(w: usize, h: usize, v: Vec<f64>) -> DepthImage {
        DepthImage::from_values(w, h, v, DepthUnit::Meters)
    }

    #[test]
    fn two_by_two_block_mean() {
        let out = crop_resize(&img(2, 2, vec![1.0, 1.0, 3.0, 3.0]), &CropRegion::full(2, 2), 1, 1).unwrap();
        assert_eq!(out.values, vec![2.0]);
    }

    #[test]
    fn invalid_pixels_are_skipped() {
        let mut i = img(2, 1, vec![1.0, 9.0]);
        i.valid[1] = false;
        let out = crop_resize(&i, &CropRegion::full(2, 1), 1, 1).unwrap();
        assert_eq!(out.values, vec![1.0]);
        i.valid[0] = false;
        let out = crop_resize(&i, &CropRegion::full(2, 1), 1, 1).unwrap();
        assert!(!out.valid[0]);
    }

    #[test]
    fn deployment_chain_shapes() {
        let raw = img(480, 270, vec![1.25; 480 * 270]);
        let small = crop_resize(&raw, &CropRegion::full(480, 270), 64, 36).unwrap();
        assert_eq!((small.width, small.height), (64, 36));
        let crop = crop_resize(&small, &CropRegion::centered(64, 36, 36, 18), 36, 18).unwrap();
        assert_eq!((crop.width, crop.height), (36, 18));
        assert!(crop.values.iter().all(|&v| (v - 1.25).abs() < 1e-12));
    }

    #[test]
    fn bad_regions() {
        let i = img(4, 4, vec![1.0; 16]);
        let r = CropRegion {
            x: 2.0,
            y: 0.0,
            width: 3.0,
            height: 1.0,
        };
        assert!(matches!(crop_resize(&i, &r, 1, 1), Err(PipelineError::CropOutOfBounds(..))));
        assert_eq!(crop_resize(&i, &CropRegion::full(4, 4), 0, 1), Err(PipelineError::ZeroArea));
    }

    #[test]
    fn blur_preserves_constants_and_mass_center() {
        let mut v = vec![2.0; 35];
        gaussian_blur(&mut v, 7, 5, 5, 1.2);
        assert!(v.iter().all(|x| (x - 2.0).abs() < 1e-12));
        let k = gaussian_kernel(5, 1.0);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(k[0], k[4]);
    }

    #[test]
    fn settings_parse_from_toml_and_json() {
        let t = "[sim]\nnoise_sigma = 0.01\n[history]\nframes = 4\n";
        let s = PipelineSettings::from_str_for(Path::new("p.toml"), t).unwrap();
        assert_eq!(s.sim.noise_sigma, 0.01);
        assert_eq!(s.history.frames, 4);
        let j = r#"{"real": {"blur_kernel": 4}}"#;
        assert!(PipelineSettings::from_str_for(Path::new("p.json"), j).is_err());
        assert!(PipelineSettings::from_str_for(Path::new("p.json"), r#"{"bogus": 1}"#).is_err());
    }
}
