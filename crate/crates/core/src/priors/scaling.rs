//! Min-max mapping of a channel onto the `[0, 255]` grey-level range the
//! external denoiser expects, and its exact inverse.

use serde::{Deserialize, Serialize};

use crate::grid::RealImage;

pub const DISPLAY_MAX: f64 = 255.0;

/// Original range endpoints of a scaled channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    pub in_min: f64,
    pub in_max: f64,
}

impl ScaleParams {
    pub fn is_degenerate(&self) -> bool {
        self.in_max == self.in_min
    }

    pub fn unscale_value(&self, v: f64) -> f64 {
        if self.is_degenerate() {
            self.in_min
        } else {
            self.in_min + v * (self.in_max - self.in_min) / DISPLAY_MAX
        }
    }
}

pub fn scale_to_display(img: &RealImage) -> (RealImage, ScaleParams) {
    let (in_min, in_max) = img.min_max();
    let params = ScaleParams { in_min, in_max };
    if params.is_degenerate() {
        return (img.map(|_| 0.0), params);
    }
    let span = in_max - in_min;
    (img.map(|&v| ((v - in_min) * DISPLAY_MAX / span).min(DISPLAY_MAX)), params)
}

pub fn unscale(img: &RealImage, params: ScaleParams) -> RealImage {
    img.map(|&v| params.unscale_value(v))
}
