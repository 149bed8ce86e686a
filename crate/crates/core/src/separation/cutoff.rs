//! Smooth cutoffs in the band coordinate `y`.

use serde::{Deserialize, Serialize};

use super::SeparationError;

/// Quintic smoothstep on `[0, 1]`, clamped outside: `C²`, monotone.
pub fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
}

/// `χ_T` equals one on `|y| ≤ T` and vanishes for `|y| ≥ T + 1`; `χ_±` are the
/// complementary pieces on the two half-lines, so `χ_T + χ_+ + χ_- = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffFamily {
    pub t: f64,
}

impl CutoffFamily {
    pub fn new(t: f64) -> Result<Self, SeparationError> {
        if !(t.is_finite() && t > 0.0) {
            return Err(SeparationError::InvalidInput(format!("cutoff radius {t} must be positive")));
        }
        Ok(CutoffFamily { t })
    }

    pub fn chi(&self, y: f64) -> f64 {
        1.0 - smoothstep(y.abs() - self.t)
    }

    pub fn chi_plus(&self, y: f64) -> f64 {
        if y > 0.0 {
            smoothstep(y - self.t)
        } else {
            0.0
        }
    }

    pub fn chi_minus(&self, y: f64) -> f64 {
        self.chi_plus(-y)
    }

    /// Outer edge of the support of `χ_T`.
    pub fn support(&self) -> f64 {
        self.t + 1.0
    }
}

/// Cutoff family for radius `t`.
pub fn make_cutoffs(t: f64) -> Result<CutoffFamily, SeparationError> {
    CutoffFamily::new(t)
}
