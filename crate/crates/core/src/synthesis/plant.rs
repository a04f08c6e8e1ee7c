//! Weighted generalized plant for speed tracking with current penalties.
//!
//! Channels, in order:
//!
//! * `w = [ω_ref, τ_l, n_d, n_q]`: reference, load torque, current-sensor noise
//! * `u = [ũ_d, ũ_q]`: auxiliary (decoupled) voltages
//! * `z = [W_e·e, W_I·i_q, W_I·i_d, ε_u·ũ_d, ε_u·ũ_q]`
//! * `y = [e, i_d + ε_n·n_d, i_q + ε_n·n_q]`, with `e = ω_ref − ω_m`

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::weights::TransferWeight;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, Mat};
use crate::lti::StateSpaceModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Regularization {
    /// Control penalty appended to `z`.
    pub eps_u: f64,
    /// Measurement-noise gain on the current channels.
    pub eps_n: f64,
}

impl Default for Regularization {
    fn default() -> Self {
        Regularization {
            eps_u: 1e-4,
            eps_n: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedPlant {
    pub realization: StateSpaceModel,
    pub n_w: usize,
    pub n_u: usize,
    pub n_z: usize,
    pub n_y: usize,
}

/// The nine blocks of a partitioned plant.
#[derive(Debug, Clone)]
pub struct PlantBlocks {
    pub a: Mat,
    pub b1: Mat,
    pub b2: Mat,
    pub c1: Mat,
    pub c2: Mat,
    pub d11: Mat,
    pub d12: Mat,
    pub d21: Mat,
    pub d22: Mat,
}

pub const W_LABELS: [&str; 4] = ["omega_ref", "tau_l", "noise_i_d", "noise_i_q"];
pub const U_LABELS: [&str; 2] = ["u_d_aux", "u_q_aux"];
pub const Z_LABELS: [&str; 5] = ["z_track", "z_i_q", "z_i_d", "z_u_d", "z_u_q"];
pub const Y_LABELS: [&str; 3] = ["e_track", "i_d_meas", "i_q_meas"];

const RANK_TOL: f64 = 1e-12;

impl GeneralizedPlant {
    /// Wraps a realization whose inputs are `[w; u]` and outputs `[z; y]`.
    pub fn new(
        realization: StateSpaceModel,
        n_w: usize,
        n_u: usize,
        n_z: usize,
        n_y: usize,
    ) -> Result<Self> {
        realization.validate()?;
        if !realization.is_continuous() {
            return Err(Error::invalid("generalized plant must be continuous-time"));
        }
        if n_w + n_u != realization.n_inputs() || n_z + n_y != realization.n_outputs() {
            return Err(Error::Dimension(format!(
                "partition w{n_w}+u{n_u} / z{n_z}+y{n_y} does not match {} inputs / {} outputs",
                realization.n_inputs(),
                realization.n_outputs()
            )));
        }
        Ok(GeneralizedPlant {
            realization,
            n_w,
            n_u,
            n_z,
            n_y,
        })
    }

    /// Builds a plant directly from its partitioned blocks.
    pub fn from_blocks(p: &PlantBlocks) -> Result<Self> {
        let b = linalg::hstack(&[&p.b1, &p.b2]);
        let c = linalg::vstack(&[&p.c1, &p.c2]);
        let d = linalg::block2(&p.d11, &p.d12, &p.d21, &p.d22);
        let sys = StateSpaceModel::continuous(p.a.clone(), b, c, d)?;
        GeneralizedPlant::new(sys, p.b1.ncols(), p.b2.ncols(), p.c1.nrows(), p.c2.nrows())
    }

    pub fn blocks(&self) -> PlantBlocks {
        let s = &self.realization;
        let n = s.n_states();
        let (nw, nu, nz, ny) = (self.n_w, self.n_u, self.n_z, self.n_y);
        let sub = |m: &Mat, r: usize, c: usize, nr: usize, nc: usize| {
            m.view((r, c), (nr, nc)).into_owned()
        };
        PlantBlocks {
            a: s.a.clone(),
            b1: sub(&s.b, 0, 0, n, nw),
            b2: sub(&s.b, 0, nw, n, nu),
            c1: sub(&s.c, 0, 0, nz, n),
            c2: sub(&s.c, nz, 0, ny, n),
            d11: sub(&s.d, 0, 0, nz, nw),
            d12: sub(&s.d, 0, nw, nz, nu),
            d21: sub(&s.d, nz, 0, ny, nw),
            d22: sub(&s.d, nz, nw, ny, nu),
        }
    }

    pub fn n_states(&self) -> usize {
        self.realization.n_states()
    }

    /// Open-loop `w → z` map (the lower loop left open, `u = 0`).
    pub fn open_loop_wz(&self) -> StateSpaceModel {
        let inputs: Vec<usize> = (0..self.n_w).collect();
        let outputs: Vec<usize> = (0..self.n_z).collect();
        self.realization.select(&inputs, &outputs)
    }

    /// Checks the standing assumptions of Riccati-based synthesis:
    /// `(A, B2)` stabilizable, `(C2, A)` detectable, `D12` full column rank,
    /// `D21` full row rank.
    pub fn check_assumptions(&self) -> Result<()> {
        let p = self.blocks();
        if !is_stabilizable(&p.a, &p.b2)? {
            return Err(Error::RankCondition("(A, B2) is not stabilizable".into()));
        }
        if !is_stabilizable(&p.a.transpose(), &p.c2.transpose())? {
            return Err(Error::RankCondition("(C2, A) is not detectable".into()));
        }
        if !full_rank(&p.d12, p.d12.ncols()) {
            return Err(Error::RankCondition(
                "D12 does not have full column rank".into(),
            ));
        }
        if !full_rank(&p.d21, p.d21.nrows()) {
            return Err(Error::RankCondition(
                "D21 does not have full row rank".into(),
            ));
        }
        Ok(())
    }
}

fn full_rank(m: &Mat, needed: usize) -> bool {
    if needed == 0 {
        return true;
    }
    if m.nrows() < needed || m.ncols() < needed {
        return false;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.max();
    smax > 0.0 && sv.min() > RANK_TOL * smax.max(1.0)
}

/// Popov–Belevitch–Hautus test: every eigenvalue with `Re λ ≥ 0` must leave
/// `[A − λI, B]` with full row rank.
pub fn is_stabilizable(a: &Mat, b: &Mat) -> Result<bool> {
    let n = a.nrows();
    let scale = a.norm().max(b.norm()).max(1.0);
    for lambda in linalg::eigenvalues(a)? {
        if lambda.re < -1e-10 * scale {
            continue;
        }
        let mut m = CMat::zeros(n, n + b.ncols());
        for r in 0..n {
            for c in 0..n {
                m[(r, c)] = Complex64::new(a[(r, c)], 0.0);
            }
            m[(r, r)] -= lambda;
            for c in 0..b.ncols() {
                m[(r, n + c)] = Complex64::new(b[(r, c)], 0.0);
            }
        }
        let sv = m.svd(false, false).singular_values;
        if sv.min() <= 1e-10 * scale {
            return Ok(false);
        }
    }
    Ok(true)
}

fn siso_parts(w: &TransferWeight) -> (Mat, Mat, Mat, f64) {
    let r = &w.realization;
    (r.a.clone(), r.b.clone(), r.c.clone(), r.d[(0, 0)])
}

/// Expected magnitudes of the physical exogenous inputs. The plant is
/// built for unit-size `w`, so `ω_ref = reference·w₀` and `τ_l = load·w₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputScaling {
    /// Reference speed scale (rad/s).
    pub reference: f64,
    /// Load torque scale (N·m).
    pub load: f64,
}

impl Default for InputScaling {
    fn default() -> Self {
        InputScaling {
            reference: 1.0,
            load: 1.0,
        }
    }
}

/// Assembles the weighted plant around the motor model returned by
/// [`crate::motor::linearize`], with unit input scaling.
pub fn build_generalized_plant(
    motor: &StateSpaceModel,
    w_e: &TransferWeight,
    w_i: &TransferWeight,
    reg: Regularization,
) -> Result<GeneralizedPlant> {
    build_scaled_generalized_plant(motor, w_e, w_i, reg, InputScaling::default())
}

pub fn build_scaled_generalized_plant(
    motor: &StateSpaceModel,
    w_e: &TransferWeight,
    w_i: &TransferWeight,
    reg: Regularization,
    scaling: InputScaling,
) -> Result<GeneralizedPlant> {
    if !(scaling.reference > 0.0
        && scaling.load > 0.0
        && scaling.reference.is_finite()
        && scaling.load.is_finite())
    {
        return Err(Error::invalid("input scales must be positive"));
    }
    if !(reg.eps_u > 0.0 && reg.eps_n > 0.0) {
        return Err(Error::RankCondition(
            "regularization epsilons must be positive for D12/D21 full rank".into(),
        ));
    }
    let idx = |labels: &[String], name: &str| {
        labels
            .iter()
            .position(|l| l == name)
            .ok_or_else(|| Error::invalid(format!("motor model lacks channel `{name}`")))
    };
    let (iu_d, iu_q, i_tau) = (
        idx(&motor.input_labels, "u_d_aux")?,
        idx(&motor.input_labels, "u_q_aux")?,
        idx(&motor.input_labels, "tau_l")?,
    );
    let (o_id, o_iq, o_w) = (
        idx(&motor.output_labels, "i_d")?,
        idx(&motor.output_labels, "i_q")?,
        idx(&motor.output_labels, "omega_m")?,
    );
    if motor.d.iter().any(|&v| v != 0.0) {
        return Err(Error::invalid("motor model must be strictly proper"));
    }

    let nm = motor.n_states();
    let (ae, be, ce, de) = siso_parts(w_e);
    let (ai, bi, ci, di) = siso_parts(w_i);
    let ne = ae.nrows();
    let ni = ai.nrows();
    let n = nm + ne + 2 * ni;
    let (oe, oq, od) = (nm, nm + ne, nm + ne + ni);

    let c_row = |r: usize| motor.c.row(r).into_owned();
    let (c_id, c_iq, c_w) = (c_row(o_id), c_row(o_iq), c_row(o_w));

    let mut a = Mat::zeros(n, n);
    a.view_mut((0, 0), (nm, nm)).copy_from(&motor.a);
    a.view_mut((oe, oe), (ne, ne)).copy_from(&ae);
    a.view_mut((oe, 0), (ne, nm)).copy_from(&(-(&be * &c_w)));
    a.view_mut((oq, oq), (ni, ni)).copy_from(&ai);
    a.view_mut((oq, 0), (ni, nm)).copy_from(&(&bi * &c_iq));
    a.view_mut((od, od), (ni, ni)).copy_from(&ai);
    a.view_mut((od, 0), (ni, nm)).copy_from(&(&bi * &c_id));

    // w = [ω_ref, τ_l, n_d, n_q]
    let mut b1 = Mat::zeros(n, 4);
    b1.view_mut((oe, 0), (ne, 1)).copy_from(&be);
    b1.view_mut((0, 1), (nm, 1))
        .copy_from(&motor.b.column(i_tau));

    let mut b2 = Mat::zeros(n, 2);
    b2.view_mut((0, 0), (nm, 1))
        .copy_from(&motor.b.column(iu_d));
    b2.view_mut((0, 1), (nm, 1))
        .copy_from(&motor.b.column(iu_q));

    let mut c1 = Mat::zeros(5, n);
    c1.view_mut((0, oe), (1, ne)).copy_from(&ce);
    c1.view_mut((0, 0), (1, nm)).copy_from(&(-&c_w * de));
    c1.view_mut((1, oq), (1, ni)).copy_from(&ci);
    c1.view_mut((1, 0), (1, nm)).copy_from(&(&c_iq * di));
    c1.view_mut((2, od), (1, ni)).copy_from(&ci);
    c1.view_mut((2, 0), (1, nm)).copy_from(&(&c_id * di));

    let mut d11 = Mat::zeros(5, 4);
    d11[(0, 0)] = de;

    let mut d12 = Mat::zeros(5, 2);
    d12[(3, 0)] = reg.eps_u;
    d12[(4, 1)] = reg.eps_u;

    let mut c2 = Mat::zeros(3, n);
    c2.view_mut((0, 0), (1, nm)).copy_from(&(-&c_w));
    c2.view_mut((1, 0), (1, nm)).copy_from(&c_id);
    c2.view_mut((2, 0), (1, nm)).copy_from(&c_iq);

    let mut d21 = Mat::zeros(3, 4);
    d21[(0, 0)] = 1.0;
    d21[(1, 2)] = reg.eps_n;
    d21[(2, 3)] = reg.eps_n;

    let d22 = Mat::zeros(3, 2);

    for m in [&mut b1, &mut d11, &mut d21] {
        m.column_mut(0).scale_mut(scaling.reference);
        m.column_mut(1).scale_mut(scaling.load);
    }

    let plant = GeneralizedPlant::from_blocks(&PlantBlocks {
        a,
        b1,
        b2,
        c1,
        c2,
        d11,
        d12,
        d21,
        d22,
    })?;
    let labels_in: Vec<&str> = W_LABELS.iter().chain(U_LABELS.iter()).copied().collect();
    let labels_out: Vec<&str> = Z_LABELS.iter().chain(Y_LABELS.iter()).copied().collect();
    let realization = plant.realization.with_labels(&labels_in, &labels_out)?;
    let plant = GeneralizedPlant::new(realization, 4, 2, 5, 3)?;
    plant.check_assumptions()?;
    Ok(plant)
}
