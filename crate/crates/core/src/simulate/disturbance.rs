use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// Constant generalized force `mu` acting on `[start, end)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceWindow {
    pub start: f64,
    pub end: f64,
    pub mu: Vec<f64>,
}

/// Piecewise-constant exogenous input; zero outside every window.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DisturbanceProfile {
    windows: Vec<DisturbanceWindow>,
}

impl DisturbanceProfile {
    pub fn none() -> Self {
        Self::default()
    }

    /// Windows must be ordered, non-overlapping, finite and `dof`-dimensional.
    pub fn new(windows: Vec<DisturbanceWindow>, dof: usize) -> Result<Self, String> {
        for (i, w) in windows.iter().enumerate() {
            if !(w.start.is_finite() && w.end.is_finite() && w.start >= 0.0 && w.start < w.end) {
                return Err(format!("disturbance[{i}]: need 0 <= start < end, got [{}, {})", w.start, w.end));
            }
            if w.mu.len() != dof {
                return Err(format!("disturbance[{i}].mu has length {}, expected {dof}", w.mu.len()));
            }
            if w.mu.iter().any(|x| !x.is_finite()) {
                return Err(format!("disturbance[{i}].mu must be finite"));
            }
            if i > 0 && windows[i - 1].end > w.start {
                return Err(format!("disturbance[{i}] overlaps or precedes disturbance[{}]", i - 1));
            }
        }
        Ok(Self { windows })
    }

    pub fn windows(&self) -> &[DisturbanceWindow] {
        &self.windows
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// End of the last window, if any.
    pub fn last_end(&self) -> Option<f64> {
        self.windows.last().map(|w| w.end)
    }

    pub fn at(&self, t: f64, dof: usize) -> DVector<f64> {
        self.windows
            .iter()
            .find(|w| w.start <= t && t < w.end)
            .map(|w| DVector::from_column_slice(&w.mu))
            .unwrap_or_else(|| DVector::zeros(dof))
    }
}
