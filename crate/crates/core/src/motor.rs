//! Permanent-magnet synchronous motor in the rotor-aligned dq frame.
//!
//! The plant is bilinear in `(ω, i)`. Adding the speed-dependent coupling back
//! at the controller output (the auxiliary-input transform) leaves two
//! first-order current channels and, for a surface-mount machine, a linear
//! speed equation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::lti::StateSpaceModel;

/// Relative `|L_d − L_q| / L_d` tolerance under which the machine is treated
/// as surface-mount (no reluctance torque).
pub const SURFACE_MOUNT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotorParams {
    /// Stator resistance (Ω).
    pub r_s: f64,
    /// d-axis inductance (H).
    pub l_d: f64,
    /// q-axis inductance (H).
    pub l_q: f64,
    /// Permanent-magnet flux linkage (Wb).
    pub phi_f: f64,
    pub pole_pairs: u32,
    /// Rotor-side moment of inertia (kg·m²).
    pub inertia: f64,
    /// Viscous friction (N·m·s/rad).
    pub friction: f64,
}

impl MotorParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("r_s", self.r_s),
            ("l_d", self.l_d),
            ("l_q", self.l_q),
            ("phi_f", self.phi_f),
            ("inertia", self.inertia),
            ("friction", self.friction),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!(
                    "motor.{name} must be positive, got {v}"
                )));
            }
        }
        if self.pole_pairs < 1 {
            return Err(Error::invalid("motor.pole_pairs must be ≥ 1"));
        }
        Ok(())
    }

    pub fn is_surface_mount(&self) -> bool {
        (self.l_d - self.l_q).abs() / self.l_d <= SURFACE_MOUNT_TOL
    }

    fn require_surface_mount(&self) -> Result<()> {
        if self.is_surface_mount() {
            Ok(())
        } else {
            Err(Error::Contract(format!(
                "linear speed equation needs L_d ≈ L_q (got {} vs {})",
                self.l_d, self.l_q
            )))
        }
    }

    /// `(3/2)·p·Φ_F`: torque per ampere of q-axis current.
    pub fn torque_constant(&self) -> f64 {
        1.5 * f64::from(self.pole_pairs) * self.phi_f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MotorState {
    pub i_d: f64,
    pub i_q: f64,
    /// Mechanical rotor speed (rad/s).
    pub omega_m: f64,
}

impl MotorState {
    pub fn new(i_d: f64, i_q: f64, omega_m: f64) -> Self {
        MotorState { i_d, i_q, omega_m }
    }

    pub fn omega_e(&self, params: &MotorParams) -> f64 {
        f64::from(params.pole_pairs) * self.omega_m
    }

    pub fn is_finite(&self) -> bool {
        self.i_d.is_finite() && self.i_q.is_finite() && self.omega_m.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.i_d, self.i_q, self.omega_m]
    }

    pub fn from_array(x: [f64; 3]) -> Self {
        MotorState::new(x[0], x[1], x[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoltageFrame {
    /// Physical stator voltages `u_d, u_q`.
    Stator,
    /// Decoupled inputs `ũ_d, ũ_q` seen by the linear design model.
    Auxiliary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoltagePair {
    pub v_d: f64,
    pub v_q: f64,
    pub frame: VoltageFrame,
}

impl VoltagePair {
    pub fn stator(v_d: f64, v_q: f64) -> Self {
        VoltagePair {
            v_d,
            v_q,
            frame: VoltageFrame::Stator,
        }
    }
    pub fn auxiliary(v_d: f64, v_q: f64) -> Self {
        VoltagePair {
            v_d,
            v_q,
            frame: VoltageFrame::Auxiliary,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorqueSample {
    pub tau_e: f64,
    pub tau_l: f64,
}

/// Electromagnetic torque including the reluctance term.
pub fn electrical_torque(state: &MotorState, params: &MotorParams) -> f64 {
    let p = f64::from(params.pole_pairs);
    1.5 * p * params.phi_f * state.i_q + 1.5 * p * (params.l_d - params.l_q) * state.i_d * state.i_q
}

pub fn auxiliary_from_stator(
    v: VoltagePair,
    state: &MotorState,
    params: &MotorParams,
) -> Result<VoltagePair> {
    if v.frame != VoltageFrame::Stator {
        return Err(Error::Contract(
            "auxiliary_from_stator expects stator voltages".into(),
        ));
    }
    let we = state.omega_e(params);
    Ok(VoltagePair::auxiliary(
        v.v_d + we * params.l_q * state.i_q,
        v.v_q - we * params.l_d * state.i_d - we * params.phi_f,
    ))
}

/// Decoupling: converts the controller's auxiliary voltages back to the
/// stator voltages actually applied to the machine.
pub fn stator_from_auxiliary(
    v: VoltagePair,
    state: &MotorState,
    params: &MotorParams,
) -> Result<VoltagePair> {
    if v.frame != VoltageFrame::Auxiliary {
        return Err(Error::Contract(
            "stator_from_auxiliary expects auxiliary voltages".into(),
        ));
    }
    let we = state.omega_e(params);
    Ok(VoltagePair::stator(
        v.v_d - we * params.l_q * state.i_q,
        v.v_q + we * params.l_d * state.i_d + we * params.phi_f,
    ))
}

/// Time derivative of the state under auxiliary inputs (linear speed equation).
pub fn state_derivative(
    state: &MotorState,
    v_aux: VoltagePair,
    tau_l: f64,
    params: &MotorParams,
) -> Result<MotorState> {
    params.require_surface_mount()?;
    if v_aux.frame != VoltageFrame::Auxiliary {
        return Err(Error::Contract(
            "state_derivative expects auxiliary voltages".into(),
        ));
    }
    Ok(MotorState {
        i_d: (v_aux.v_d - params.r_s * state.i_d) / params.l_d,
        i_q: (v_aux.v_q - params.r_s * state.i_q) / params.l_q,
        omega_m: (params.torque_constant() * state.i_q - tau_l - params.friction * state.omega_m)
            / params.inertia,
    })
}

/// Time derivative under physical stator voltages: the full bilinear model
/// with cross-coupling and back-EMF. Requires a surface-mount machine for the
/// speed equation, like [`state_derivative`].
pub fn stator_state_derivative(
    state: &MotorState,
    v: VoltagePair,
    tau_l: f64,
    params: &MotorParams,
) -> Result<MotorState> {
    params.require_surface_mount()?;
    if v.frame != VoltageFrame::Stator {
        return Err(Error::Contract(
            "stator_state_derivative expects stator voltages".into(),
        ));
    }
    let we = state.omega_e(params);
    Ok(MotorState {
        i_d: (v.v_d - params.r_s * state.i_d + we * params.l_q * state.i_q) / params.l_d,
        i_q: (v.v_q - params.r_s * state.i_q - we * params.l_d * state.i_d - we * params.phi_f)
            / params.l_q,
        omega_m: (params.torque_constant() * state.i_q - tau_l - params.friction * state.omega_m)
            / params.inertia,
    })
}

/// Labels of the linearized model's channels.
pub const STATE_LABELS: [&str; 3] = ["i_d", "i_q", "omega_m"];
pub const INPUT_LABELS: [&str; 3] = ["u_d_aux", "u_q_aux", "tau_l"];

/// Exact LTI model `ẋ = A x + B [ũ_d, ũ_q, τ_l]ᵀ`, `y = x`.
pub fn linearize(params: &MotorParams) -> Result<StateSpaceModel> {
    params.validate()?;
    params.require_surface_mount()?;
    let a = Mat::from_row_slice(
        3,
        3,
        &[
            -params.r_s / params.l_d,
            0.0,
            0.0,
            0.0,
            -params.r_s / params.l_q,
            0.0,
            0.0,
            params.torque_constant() / params.inertia,
            -params.friction / params.inertia,
        ],
    );
    let b = Mat::from_row_slice(
        3,
        3,
        &[
            1.0 / params.l_d,
            0.0,
            0.0,
            0.0,
            1.0 / params.l_q,
            0.0,
            0.0,
            0.0,
            -1.0 / params.inertia,
        ],
    );
    StateSpaceModel::continuous(a, b, Mat::identity(3, 3), Mat::zeros(3, 3))?
        .with_labels(&INPUT_LABELS, &STATE_LABELS)
}
