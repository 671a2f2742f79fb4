use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{check_blur, check_range, gaussian_blur, geometry_step, normalized, CropRegion, PipelineError};
use crate::render::DepthImage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RealPipelineConfig {
    pub crop: Option<CropRegion>,
    pub output_size: Option<[usize; 2]>,
    pub inpaint_max_iters: usize,
    /// Diffusion stops once no pixel moves by more than this (m).
    pub inpaint_tolerance: f64,
    pub blur_kernel: usize,
    pub blur_sigma: f64,
    /// Must match the simulated pipeline's range for the outputs to align.
    pub clip_range: [f64; 2],
}

impl Default for RealPipelineConfig {
    fn default() -> Self {
        Self {
            crop: None,
            output_size: None,
            inpaint_max_iters: 2000,
            inpaint_tolerance: 1e-6,
            blur_kernel: 3,
            blur_sigma: 0.8,
            clip_range: [0.3, 3.0],
        }
    }
}

impl RealPipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        check_range("clip_range", self.clip_range)?;
        check_blur(self.blur_kernel, self.blur_sigma)?;
        if !(self.inpaint_tolerance > 0.0) {
            return Err(PipelineError::Config("inpaint_tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Crop/resize, inpaint zero pixels, blur, clip/normalize.
pub fn freal_apply(raw: &DepthImage, cfg: &RealPipelineConfig) -> Result<DepthImage, PipelineError> {
    cfg.validate()?;
    let mut marked = raw.clone();
    for (v, ok) in marked.values.iter().zip(marked.valid.iter_mut()) {
        *ok = *ok && *v > 0.0 && v.is_finite();
    }
    let mut img = geometry_step(&marked, cfg.crop.as_ref(), cfg.output_size)?;
    inpaint(&mut img, cfg.inpaint_max_iters, cfg.inpaint_tolerance)?;
    gaussian_blur(&mut img.values, img.width, img.height, cfg.blur_kernel, cfg.blur_sigma);
    Ok(normalized(img.values, img.width, img.height, cfg.clip_range))
}

/// Fills invalid pixels from valid ones: a breadth-first sweep seeds each hole
/// pixel with the mean of its already-filled neighbors, then Jacobi sweeps of
/// the 4-neighbor mean run until the largest update drops below `tolerance`
/// or `max_iters` is reached. Valid pixels are never modified. Returns the
/// number of diffusion sweeps.
pub fn inpaint(img: &mut DepthImage, max_iters: usize, tolerance: f64) -> Result<usize, PipelineError> {
    let (w, h) = (img.width, img.height);
    if img.valid_count() == 0 {
        return Err(PipelineError::Uninpaintable);
    }
    let holes: Vec<usize> = (0..w * h).filter(|&i| !img.valid[i]).collect();
    if holes.is_empty() {
        return Ok(0);
    }
    let neighbors = |i: usize| {
        let (r, c) = (i / w, i % w);
        let mut n = [usize::MAX; 4];
        if c > 0 {
            n[0] = i - 1;
        }
        if c + 1 < w {
            n[1] = i + 1;
        }
        if r > 0 {
            n[2] = i - w;
        }
        if r + 1 < h {
            n[3] = i + w;
        }
        n
    };

    let mut filled = img.valid.clone();
    let mut queue: VecDeque<usize> = (0..w * h).filter(|&i| filled[i]).collect();
    let mut layer_mark = vec![false; w * h];
    while !queue.is_empty() {
        let mut next = Vec::new();
        for _ in 0..queue.len() {
            let i = queue.pop_front().unwrap();
            for n in neighbors(i) {
                if n != usize::MAX && !filled[n] && !layer_mark[n] {
                    layer_mark[n] = true;
                    next.push(n);
                }
            }
        }
        // A whole layer is seeded from earlier layers only.
        let seeds: Vec<f64> = next
            .iter()
            .map(|&i| {
                let (s, k) = neighbors(i)
                    .into_iter()
                    .filter(|&n| n != usize::MAX && filled[n])
                    .fold((0.0, 0), |(s, k), n| (s + img.values[n], k + 1));
                s / k as f64
            })
            .collect();
        for (&i, v) in next.iter().zip(seeds) {
            img.values[i] = v;
            filled[i] = true;
            queue.push_back(i);
        }
    }

    let mut sweeps = 0;
    let mut updated = vec![0.0; holes.len()];
    while sweeps < max_iters {
        sweeps += 1;
        let mut max_delta: f64 = 0.0;
        for (slot, &i) in updated.iter_mut().zip(&holes) {
            let (s, k) = neighbors(i)
                .into_iter()
                .filter(|&n| n != usize::MAX)
                .fold((0.0, 0), |(s, k), n| (s + img.values[n], k + 1));
            *slot = s / k as f64;
            max_delta = max_delta.max((*slot - img.values[i]).abs());
        }
        for (&v, &i) in updated.iter().zip(&holes) {
            img.values[i] = v;
        }
        if max_delta < tolerance {
            break;
        }
    }
    img.valid.iter_mut().for_each(|v| *v = true);
    Ok(sweeps)
}
