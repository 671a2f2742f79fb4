use std::collections::VecDeque;
use std::sync::Arc;

use arc_swap::ArcSwap;
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::render::DepthImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HistoryConfig {
    /// Frames per window (m).
    pub frames: usize,
    /// Policy steps between consecutive window frames (ℓ).
    pub stride: u64,
    /// Sensor latency in policy steps.
    pub delay: u64,
}

impl Default for HistoryConfig {
    fn default() -> Self {
        Self {
            frames: 8,
            stride: 4,
            delay: 1,
        }
    }
}

impl HistoryConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.frames == 0 || self.stride == 0 {
            return Err(PipelineError::Config("history needs frames ≥ 1 and stride ≥ 1".into()));
        }
        Ok(())
    }

    /// Steps between the newest frame and the oldest one a window can use.
    pub fn horizon(&self) -> u64 {
        self.delay + (self.frames as u64 - 1) * self.stride
    }

    /// Step index requested for each window slot at time `t`, newest first,
    /// before clamping. Negative values precede step 0.
    pub fn targets(&self, t: u64) -> Vec<i64> {
        (0..self.frames as i64)
            .map(|k| t as i64 - self.delay as i64 - k * self.stride as i64)
            .collect()
    }
}

/// Frames of one window, newest first, with the step each was captured at.
#[derive(Debug, Clone)]
pub struct HistoryWindow {
    pub steps: Vec<u64>,
    pub frames: Vec<Arc<DepthImage>>,
}

impl HistoryWindow {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Spread between the newest and oldest captured step.
    pub fn span(&self) -> u64 {
        match (self.steps.first(), self.steps.last()) {
            (Some(a), Some(b)) => a - b,
            _ => 0,
        }
    }
}

/// Ring of processed frames keyed by step. Only what the configured horizon
/// can still reach is retained.
#[derive(Debug, Clone)]
pub struct DepthHistory {
    cfg: HistoryConfig,
    frames: VecDeque<(u64, Arc<DepthImage>)>,
}

impl DepthHistory {
    pub fn new(cfg: HistoryConfig) -> Result<Self, PipelineError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            frames: VecDeque::new(),
        })
    }

    pub fn config(&self) -> &HistoryConfig {
        &self.cfg
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn push(&mut self, step: u64, frame: DepthImage) -> Result<(), PipelineError> {
        self.push_shared(step, Arc::new(frame))
    }

    pub fn push_shared(&mut self, step: u64, frame: Arc<DepthImage>) -> Result<(), PipelineError> {
        if let Some(&(last, _)) = self.frames.back() {
            if step <= last {
                return Err(PipelineError::NonMonotonicStep { last, got: step });
            }
        }
        self.frames.push_back((step, frame));
        // Keep the newest frame at or before the oldest reachable step.
        let oldest_needed = step.saturating_sub(self.cfg.horizon());
        while self.frames.len() >= 2 && self.frames[1].0 <= oldest_needed {
            self.frames.pop_front();
        }
        Ok(())
    }

    /// Window at step `t`: slot `k` holds the latest frame captured at or
    /// before `t − delay − k·stride`, or the oldest frame when none is.
    pub fn sample(&self, t: u64) -> Result<HistoryWindow, PipelineError> {
        if self.frames.is_empty() {
            return Err(PipelineError::EmptyHistory);
        }
        let mut steps = Vec::with_capacity(self.cfg.frames);
        let mut frames = Vec::with_capacity(self.cfg.frames);
        for target in self.cfg.targets(t) {
            let idx = self.frames.partition_point(|(s, _)| (*s as i64) <= target);
            let (s, f) = &self.frames[idx.saturating_sub(1)];
            steps.push(*s);
            frames.push(Arc::clone(f));
        }
        Ok(HistoryWindow { steps, frames })
    }

    pub fn push_and_sample(&mut self, step: u64, frame: DepthImage) -> Result<HistoryWindow, PipelineError> {
        self.push(step, frame)?;
        self.sample(step)
    }
}

/// Writer half of a history shared between a sensor-rate producer and a
/// policy-rate consumer. Each push publishes a fresh snapshot, so neither
/// side ever waits on the other.
pub struct HistoryWriter {
    local: DepthHistory,
    shared: Arc<ArcSwap<DepthHistory>>,
}

#[derive(Clone)]
pub struct HistoryReader {
    shared: Arc<ArcSwap<DepthHistory>>,
}

impl HistoryWriter {
    pub fn new(cfg: HistoryConfig) -> Result<(Self, HistoryReader), PipelineError> {
        let local = DepthHistory::new(cfg)?;
        let shared = Arc::new(ArcSwap::from_pointee(local.clone()));
        Ok((
            Self {
                local,
                shared: Arc::clone(&shared),
            },
            HistoryReader { shared },
        ))
    }

    pub fn push(&mut self, step: u64, frame: DepthImage) -> Result<(), PipelineError> {
        self.local.push(step, frame)?;
        self.shared.store(Arc::new(self.local.clone()));
        Ok(())
    }
}

impl HistoryReader {
    pub fn sample(&self, t: u64) -> Result<HistoryWindow, PipelineError> {
        self.shared.load().sample(t)
    }

    /// Step of the most recently published frame.
    pub fn latest_step(&self) -> Option<u64> {
        self.shared.load().frames.back().map(|(s, _)| *s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::DepthUnit;

    fn frame(v: f64) -> DepthImage {
        DepthImage::filled(1, 1, v, DepthUnit::Normalized)
    }

    #[test]
    fn single_frame_window() {
        let mut h = DepthHistory::new(HistoryConfig {
            frames: 1,
            stride: 1,
            delay: 0,
        })
        .unwrap();
        h.push(0, frame(0.0)).unwrap();
        let w = h.push_and_sample(1, frame(1.0)).unwrap();
        assert_eq!(w.steps, vec![1]);
        assert_eq!(w.frames[0].values[0], 1.0);
    }

    #[test]
    fn strided_window_with_delay() {
        let mut h = DepthHistory::new(HistoryConfig::default()).unwrap();
        let mut w = None;
        for t in 0..=100 {
            w = Some(h.push_and_sample(t, frame(t as f64)).unwrap());
        }
        let w = w.unwrap();
        assert_eq!(w.steps, vec![99, 95, 91, 87, 83, 79, 75, 71]);
        assert_eq!(w.span(), 28);
        assert!(h.len() <= 30);
    }

    #[test]
    fn warm_up_clamps_to_first_frame() {
        let mut h = DepthHistory::new(HistoryConfig {
            frames: 3,
            stride: 2,
            delay: 0,
        })
        .unwrap();
        let w = h.push_and_sample(0, frame(0.5)).unwrap();
        assert_eq!(w.steps, vec![0, 0, 0]);
    }

    #[test]
    fn steps_must_increase() {
        let mut h = DepthHistory::new(HistoryConfig::default()).unwrap();
        h.push(5, frame(0.0)).unwrap();
        assert_eq!(h.push(5, frame(0.0)), Err(PipelineError::NonMonotonicStep { last: 5, got: 5 }));
        assert!(DepthHistory::new(HistoryConfig::default()).unwrap().sample(0).is_err());
    }

    #[test]
    fn reader_sees_published_frames() {
        let (mut w, r) = HistoryWriter::new(HistoryConfig::default()).unwrap();
        assert!(r.sample(0).is_err());
        let handle = std::thread::spawn(move || {
            for t in 0..200 {
                w.push(t, frame(t as f64)).unwrap();
            }
        });
        handle.join().unwrap();
        assert_eq!(r.latest_step(), Some(199));
        assert_eq!(r.sample(199).unwrap().steps[0], 198);
    }
}
