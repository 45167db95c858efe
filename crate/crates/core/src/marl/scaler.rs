use serde::{Deserialize, Serialize};

use crate::env::{Observation, OBS_DIM};

/// Maps raw observations onto roughly unit scale for network inputs: bits
/// over the largest task, deadline over the step duration, rate over the
/// largest rate seen so far.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObsScaler {
    pub task_max: f64,
    pub step_duration: f64,
    pub rate_max: f64,
    pub frozen: bool,
}

impl ObsScaler {
    pub fn new(task_max: f64, step_duration: f64) -> Self {
        Self {
            task_max,
            step_duration,
            rate_max: 0.0,
            frozen: false,
        }
    }

    pub fn observe(&mut self, obs: &[Observation]) {
        if self.frozen {
            return;
        }
        for o in obs {
            if o.rate_prev.is_finite() && o.rate_prev > self.rate_max {
                self.rate_max = o.rate_prev;
            }
        }
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    /// Scales one raw `[bits, deadline, rate]` triple in place.
    pub fn scale_in_place(&self, raw: &mut [f64]) {
        debug_assert_eq!(raw.len(), OBS_DIM);
        raw[0] /= self.task_max;
        raw[1] /= self.step_duration;
        raw[2] = if self.rate_max > 0.0 {
            raw[2] / self.rate_max
        } else {
            0.0
        };
    }

    /// Scales a row-major block of concatenated observation triples.
    pub fn scale_block(&self, data: &mut [f64]) {
        for chunk in data.chunks_exact_mut(OBS_DIM) {
            self.scale_in_place(chunk);
        }
    }

    pub fn scaled(&self, obs: &Observation) -> [f64; OBS_DIM] {
        let mut x = obs.to_array();
        self.scale_in_place(&mut x);
        x
    }
}
