//! First-order frequency weights for the mixed-sensitivity design.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::lti::StateSpaceModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Tracking,
    Current,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferWeight {
    pub realization: StateSpaceModel,
    pub kind: WeightKind,
    /// Magnitude at ω → 0.
    pub low_gain: f64,
    /// Magnitude at ω → ∞.
    pub high_gain: f64,
    /// Corner frequency (rad/s).
    pub corner: f64,
}

impl TransferWeight {
    pub fn magnitude(&self, w: f64) -> Result<f64> {
        Ok(self.realization.freq_response(w)?[(0, 0)].norm())
    }

    pub fn n_states(&self) -> usize {
        self.realization.n_states()
    }
}

fn siso(a: f64, b: f64, c: f64, d: f64) -> Result<StateSpaceModel> {
    StateSpaceModel::continuous(
        Mat::from_element(1, 1, a),
        Mat::from_element(1, 1, b),
        Mat::from_element(1, 1, c),
        Mat::from_element(1, 1, d),
    )
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive, got {v}")))
    }
}

/// Tracking-error weight `W_e(s) = (h·s + ω_c) / (s + ω_c / k)`: gain `k`
/// at DC, `h` at high frequency, crossing unity near `ω_c`.
pub fn make_tracking_weight(
    corner_freq: f64,
    dc_gain: f64,
    hf_gain: f64,
) -> Result<TransferWeight> {
    positive("corner_freq", corner_freq)?;
    positive("dc_gain", dc_gain)?;
    positive("hf_gain", hf_gain)?;
    if !(dc_gain > hf_gain) {
        return Err(Error::invalid(format!(
            "tracking weight needs dc_gain > hf_gain (got {dc_gain} ≤ {hf_gain})"
        )));
    }
    let pole = corner_freq / dc_gain;
    // (h s + ω_c)/(s + p) = h + (ω_c − h p)/(s + p)
    let realization = siso(-pole, 1.0, corner_freq - hf_gain * pole, hf_gain)?;
    Ok(TransferWeight {
        realization,
        kind: WeightKind::Tracking,
        low_gain: dc_gain,
        high_gain: hf_gain,
        corner: corner_freq,
    })
}

/// Current weight `W_I(s) = (h·s + l·ω_t) / (s + ω_t)`: gain `l` below the
/// thermal bandwidth `ω_t`, rolling off to `h`. Equal gains give a static
/// weight with no states.
pub fn make_current_weight(
    thermal_bandwidth: f64,
    lf_gain: f64,
    hf_gain: f64,
) -> Result<TransferWeight> {
    positive("thermal_bandwidth", thermal_bandwidth)?;
    positive("lf_gain", lf_gain)?;
    positive("hf_gain", hf_gain)?;
    if lf_gain < hf_gain {
        return Err(Error::invalid(format!(
            "current weight needs lf_gain ≥ hf_gain (got {lf_gain} < {hf_gain})"
        )));
    }
    let realization = if lf_gain == hf_gain {
        StateSpaceModel::static_gain(Mat::from_element(1, 1, lf_gain))
    } else {
        // h + (l − h) ω_t / (s + ω_t)
        siso(
            -thermal_bandwidth,
            1.0,
            (lf_gain - hf_gain) * thermal_bandwidth,
            hf_gain,
        )?
    };
    Ok(TransferWeight {
        realization,
        kind: WeightKind::Current,
        low_gain: lf_gain,
        high_gain: hf_gain,
        corner: thermal_bandwidth,
    })
}
