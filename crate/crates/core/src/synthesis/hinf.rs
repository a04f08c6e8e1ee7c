//! Output-feedback H∞ synthesis by γ-iteration on the two-Riccati
//! characterization, with the central controller formulas for a plant with
//! non-zero `D11`.
//!
//! The plant is first brought to the normalized form `D12 = [0; I]`,
//! `D21 = [0 I]` by orthogonal changes of `z` and `w` and invertible changes
//! of `u` and `y`; none of these alter the closed-loop norm.

use serde::{Deserialize, Serialize};

use super::plant::GeneralizedPlant;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::lti::{StateSpaceModel, TimeDomain};
use crate::norm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    PerformanceOriented,
    ReliabilityAware,
}

impl ControlMode {
    pub const ALL: [ControlMode; 2] = [
        ControlMode::PerformanceOriented,
        ControlMode::ReliabilityAware,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ControlMode::PerformanceOriented => "performance_oriented",
            ControlMode::ReliabilityAware => "reliability_aware",
        }
    }
}

impl std::str::FromStr for ControlMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "performance_oriented" => Ok(ControlMode::PerformanceOriented),
            "reliability_aware" => Ok(ControlMode::ReliabilityAware),
            other => Err(Error::invalid(format!(
                "unknown mode `{other}` (expected performance_oriented or reliability_aware)"
            ))),
        }
    }
}

impl std::fmt::Display for ControlMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of [`synthesize`]: the continuous central controller at the
/// smallest feasible γ found.
#[derive(Debug, Clone)]
pub struct HinfSolution {
    pub controller: StateSpaceModel,
    pub gamma: f64,
    /// Largest γ proven infeasible (or the lower end of the search range).
    pub gamma_lower: f64,
    pub x_inf: Mat,
    pub y_inf: Mat,
}

/// Synthesized controller, continuous and discretized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerRealization {
    pub continuous: StateSpaceModel,
    pub discrete: StateSpaceModel,
    pub gamma_achieved: f64,
    pub mode_tag: ControlMode,
}

impl ControllerRealization {
    pub fn new(
        continuous: StateSpaceModel,
        gamma_achieved: f64,
        mode: ControlMode,
        dt: f64,
    ) -> Result<Self> {
        let discrete = continuous.discretize(dt)?;
        Ok(ControllerRealization {
            continuous,
            discrete,
            gamma_achieved,
            mode_tag: mode,
        })
    }

    pub fn dt(&self) -> f64 {
        self.discrete.dt().unwrap_or(f64::NAN)
    }

    /// The zero controller (`u ≡ 0`) for a plant with `n_y` measurements and
    /// `n_u` controls.
    pub fn zero(n_u: usize, n_y: usize, mode: ControlMode, dt: f64) -> Result<Self> {
        Self::new(
            StateSpaceModel::static_gain(Mat::zeros(n_u, n_y)),
            0.0,
            mode,
            dt,
        )
    }
}

struct Normalized {
    a: Mat,
    b1: Mat,
    b2: Mat,
    c1: Mat,
    c2: Mat,
    d11: Mat,
    /// `u = tu · u'`
    tu: Mat,
    /// `y' = ty · y`
    ty: Mat,
}

/// Orthonormal basis of the complement of the column span of `u`
/// (`u` has orthonormal columns).
fn complement(u: &Mat) -> Mat {
    let n = u.nrows();
    let k = u.ncols();
    if n == k {
        return Mat::zeros(n, 0);
    }
    let proj = Mat::identity(n, n) - u * u.transpose();
    let eig = linalg::symmetrize(&proj).symmetric_eigen();
    let cols: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    Mat::from_fn(n, cols.len(), |r, c| eig.eigenvectors[(r, cols[c])])
}

fn normalize(plant: &GeneralizedPlant) -> Result<Normalized> {
    let p = plant.blocks();
    if p.d22.iter().any(|&v| v != 0.0) {
        return Err(Error::invalid("synthesis requires D22 = 0"));
    }
    let (m2, p2) = (p.d12.ncols(), p.d21.nrows());

    // D12 = U1 Σ1 V1ᵀ (thin)
    let svd = p.d12.clone().svd(true, true);
    let u1a = svd.u.ok_or(Error::Singular("D12 SVD"))?;
    let v1t = svd.v_t.ok_or(Error::Singular("D12 SVD"))?;
    let s1 = svd.singular_values;
    if s1.len() < m2 || s1.min() <= 1e-14 * s1.max().max(1.0) {
        return Err(Error::RankCondition(
            "D12 does not have full column rank".into(),
        ));
    }
    let u1b = complement(&u1a);
    let theta_z = linalg::vstack(&[&u1b.transpose(), &u1a.transpose()]);
    let s1_inv = Mat::from_diagonal(&s1.map(|s| 1.0 / s));
    let tu = v1t.transpose() * &s1_inv;

    // D21 = U2 Σ2 V2ᵀ (thin)
    let svd = p.d21.clone().svd(true, true);
    let u2 = svd.u.ok_or(Error::Singular("D21 SVD"))?;
    let v2t = svd.v_t.ok_or(Error::Singular("D21 SVD"))?;
    let s2 = svd.singular_values;
    if s2.len() < p2 || s2.min() <= 1e-14 * s2.max().max(1.0) {
        return Err(Error::RankCondition(
            "D21 does not have full row rank".into(),
        ));
    }
    let v2a = v2t.transpose();
    let v2b = complement(&v2a);
    let theta_w = linalg::hstack(&[&v2b, &v2a]);
    let s2_inv = Mat::from_diagonal(&s2.map(|s| 1.0 / s));
    let ty = &s2_inv * u2.transpose();

    Ok(Normalized {
        a: p.a.clone(),
        b1: &p.b1 * &theta_w,
        b2: &p.b2 * &tu,
        c1: &theta_z * &p.c1,
        c2: &ty * &p.c2,
        d11: &theta_z * &p.d11 * &theta_w,
        tu,
        ty,
    })
}

fn infeasible(gamma: f64, reason: impl Into<String>) -> Error {
    Error::Infeasible {
        gamma,
        reason: reason.into(),
    }
}

fn sub(m: &Mat, r: usize, c: usize, nr: usize, nc: usize) -> Mat {
    m.view((r, c), (nr, nc)).into_owned()
}

fn psd_violation(m: &Mat) -> bool {
    linalg::min_sym_eigenvalue(m) < -1e-9 * (1.0 + m.norm())
}

/// Tests feasibility of level `gamma` and, when feasible, returns the central
/// controller of the normalized plant together with `X∞`, `Y∞`.
fn central_controller(np: &Normalized, gamma: f64) -> Result<(StateSpaceModel, Mat, Mat)> {
    let n = np.a.nrows();
    let (m1, m2) = (np.b1.ncols(), np.b2.ncols());
    let (p1, p2) = (np.c1.nrows(), np.c2.nrows());
    if m1 < p2 || p1 < m2 {
        return Err(Error::RankCondition(
            "need dim w ≥ dim y and dim z ≥ dim u".into(),
        ));
    }
    let g2 = gamma * gamma;
    let d11 = &np.d11;
    let (r1, c1) = (p1 - m2, m1 - p2);
    let d1111 = sub(d11, 0, 0, r1, c1);
    let d1112 = sub(d11, 0, c1, r1, p2);
    let d1121 = sub(d11, r1, 0, m2, c1);
    let d1122 = sub(d11, r1, c1, m2, p2);

    let bound = linalg::max_singular_value(&linalg::hstack(&[&d1111, &d1112])).max(
        linalg::max_singular_value(&linalg::vstack(&[&d1111, &d1121])),
    );
    if !(gamma > bound) {
        return Err(infeasible(
            gamma,
            format!("γ must exceed the feedthrough bound {bound:.6e}"),
        ));
    }

    let d12 = linalg::vstack(&[&Mat::zeros(r1, m2), &Mat::identity(m2, m2)]);
    let d21 = linalg::hstack(&[&Mat::zeros(p2, c1), &Mat::identity(p2, p2)]);
    let b = linalg::hstack(&[&np.b1, &np.b2]);
    let c = linalg::vstack(&[&np.c1, &np.c2]);
    let d1dot = linalg::hstack(&[d11, &d12]);
    let ddot1 = linalg::vstack(&[d11, &d21]);

    let mut r = d1dot.transpose() * &d1dot;
    for i in 0..m1 {
        r[(i, i)] -= g2;
    }
    let mut rt = &ddot1 * ddot1.transpose();
    for i in 0..p1 {
        rt[(i, i)] -= g2;
    }
    let ri = linalg::inverse(&r, "R (state-feedback Riccati)")?;
    let rti = linalg::inverse(&rt, "R̃ (filter Riccati)")?;

    // X∞: Aᵀ X + X A − X G X + Q = 0
    let ax = &np.a - &b * &ri * d1dot.transpose() * &np.c1;
    let gx = linalg::symmetrize(&(&b * &ri * b.transpose()));
    let qx = linalg::symmetrize(
        &(np.c1.transpose() * (Mat::identity(p1, p1) - &d1dot * &ri * d1dot.transpose()) * &np.c1),
    );
    let x = solve_or_infeasible(&ax, &gx, &qx, gamma, "X∞")?;

    // Y∞ (dual)
    let ay = np.a.transpose() - c.transpose() * &rti * &ddot1 * np.b1.transpose();
    let gy = linalg::symmetrize(&(c.transpose() * &rti * &c));
    let qy = linalg::symmetrize(
        &(&np.b1 * (Mat::identity(m1, m1) - ddot1.transpose() * &rti * &ddot1) * np.b1.transpose()),
    );
    let y = solve_or_infeasible(&ay, &gy, &qy, gamma, "Y∞")?;

    if psd_violation(&x) {
        return Err(infeasible(gamma, "X∞ is not positive semidefinite"));
    }
    if psd_violation(&y) {
        return Err(infeasible(gamma, "Y∞ is not positive semidefinite"));
    }
    let rho = linalg::spectral_radius(&(&x * &y))?;
    if !(rho < g2 * (1.0 - 1e-9)) {
        return Err(infeasible(gamma, format!("ρ(X∞Y∞) = {rho:.6e} ≥ γ²")));
    }

    let f = -(&ri * (d1dot.transpose() * &np.c1 + b.transpose() * &x));
    let l = -((&np.b1 * ddot1.transpose() + &y * c.transpose()) * &rti);
    let f12 = sub(&f, c1, 0, p2, n);
    let f2 = sub(&f, m1, 0, m2, n);
    let l12 = sub(&l, 0, r1, n, m2);
    let l2 = sub(&l, 0, p1, n, p2);

    let zinv = Mat::identity(n, n) - &y * &x / g2;
    let z = linalg::inverse(&zinv, "I − γ⁻² Y∞ X∞")?;

    let eye_r1 = Mat::identity(r1, r1) * g2;
    let eye_c1 = Mat::identity(c1, c1) * g2;
    let inv_a = linalg::inverse(
        &(&eye_r1 - &d1111 * d1111.transpose()),
        "γ²I − D1111 D1111ᵀ",
    )?;
    let inv_b = linalg::inverse(
        &(&eye_c1 - d1111.transpose() * &d1111),
        "γ²I − D1111ᵀ D1111",
    )?;
    let dh11 = -(&d1121 * d1111.transpose() * &inv_a * &d1112) - &d1122;
    let dh12_sq = Mat::identity(m2, m2) - &d1121 * &inv_b * d1121.transpose();
    let dh21_sq = Mat::identity(p2, p2) - d1112.transpose() * &inv_a * &d1112;
    let dh12 = linalg::symmetrize(&dh12_sq)
        .cholesky()
        .ok_or_else(|| infeasible(gamma, "D̂12 factor not positive definite"))?
        .l();
    let dh21 = linalg::symmetrize(&dh21_sq)
        .cholesky()
        .ok_or_else(|| infeasible(gamma, "D̂21 factor not positive definite"))?
        .l()
        .transpose();
    let dh12_inv = linalg::inverse(&dh12, "D̂12")?;
    let dh21_inv = linalg::inverse(&dh21, "D̂21")?;

    let bh2 = &z * (&np.b2 + &l12) * &dh12;
    let ch2 = -(&dh21 * (&np.c2 + &f12));
    let bh1 = -(&z * &l2) + &bh2 * &dh12_inv * &dh11;
    let ch1 = &f2 + &dh11 * &dh21_inv * &ch2;
    let ah = &np.a + &b * &f + &bh1 * &dh21_inv * &ch2;

    let k = StateSpaceModel::continuous(ah, &bh1 * &np.ty, &np.tu * ch1, &np.tu * dh11 * &np.ty)?;
    Ok((k, x, y))
}

fn solve_or_infeasible(a: &Mat, g: &Mat, q: &Mat, gamma: f64, which: &str) -> Result<Mat> {
    crate::riccati::solve_riccati(a, g, q).map_err(|e| match e {
        Error::NoStabilizingSolution(msg) | Error::NonFinite(msg) => {
            infeasible(gamma, format!("{which}: {msg}"))
        }
        Error::Singular(what) => infeasible(gamma, format!("{which}: singular {what}")),
        other => other,
    })
}

/// γ-iteration. Candidate levels lie on the grid `lo·(1+tol)^k`, so the
/// returned γ is the smallest feasible grid level and does not depend on how
/// loose the upper end of the range is.
pub fn synthesize(
    plant: &GeneralizedPlant,
    gamma_range: (f64, f64),
    tol: f64,
) -> Result<HinfSolution> {
    let (lo, hi) = gamma_range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::invalid(format!("bad gamma range [{lo}, {hi}]")));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::invalid("tolerance must lie in (0, 1)"));
    }
    plant.check_assumptions()?;
    let np = normalize(plant)?;

    let step = (1.0 + tol).ln();
    let level = |k: i64| lo * (step * k as f64).exp();
    let mut k_hi = ((hi / lo).ln() / step).ceil() as i64;
    let mut best = match central_controller(&np, level(k_hi)) {
        Ok(ok) => ok,
        Err(Error::Infeasible { reason, .. }) => return Err(infeasible(hi, reason)),
        Err(e) => return Err(e),
    };
    let mut k_lo: i64 = 0;
    if let Ok(ok) = central_controller(&np, level(0)) {
        k_hi = 0;
        best = ok;
    }
    // invariant: level(k_hi) feasible; level(k_lo) infeasible unless k_hi == 0
    while k_hi - k_lo > 1 {
        let mid = k_lo + (k_hi - k_lo) / 2;
        match central_controller(&np, level(mid)) {
            Ok(ok) => {
                k_hi = mid;
                best = ok;
            }
            Err(Error::Infeasible { .. }) => k_lo = mid,
            Err(e) => return Err(e),
        }
    }
    let (controller, x_inf, y_inf) = best;
    let controller = relabel_controller(controller, plant)?;
    Ok(HinfSolution {
        controller,
        gamma: level(k_hi),
        gamma_lower: if k_hi == 0 { lo } else { level(k_lo) },
        x_inf,
        y_inf,
    })
}

/// Controller inputs are the plant measurements, outputs the controls.
fn relabel_controller(k: StateSpaceModel, plant: &GeneralizedPlant) -> Result<StateSpaceModel> {
    let meas: Vec<String> = plant.realization.output_labels[plant.n_z..].to_vec();
    let ctrl: Vec<String> = plant.realization.input_labels[plant.n_w..].to_vec();
    StateSpaceModel::new(k.a, k.b, k.c, k.d, TimeDomain::Continuous, meas, ctrl)
}

/// Lower LFT `F_ℓ(P, K)`: the closed-loop map `w → z`.
pub fn close_loop(plant: &GeneralizedPlant, k: &StateSpaceModel) -> Result<StateSpaceModel> {
    if k.n_inputs() != plant.n_y || k.n_outputs() != plant.n_u {
        return Err(Error::Dimension(format!(
            "controller is {}×{} but plant needs {}×{}",
            k.n_outputs(),
            k.n_inputs(),
            plant.n_u,
            plant.n_y
        )));
    }
    if !k.is_continuous() {
        return Err(Error::invalid("close_loop expects a continuous controller"));
    }
    let p = plant.blocks();
    let (ak, bk, ck, dk) = (&k.a, &k.b, &k.c, &k.d);
    let nu = plant.n_u;
    let m = Mat::identity(nu, nu) - dk * &p.d22;
    let mi = linalg::inverse(&m, "I − DK D22").map_err(|_| Error::IllPosed)?;
    if linalg::max_singular_value(&mi) > 1e12 {
        return Err(Error::IllPosed);
    }
    let mdk = &mi * dk;
    let mck = &mi * ck;
    let a11 = &p.a + &p.b2 * &mdk * &p.c2;
    let a12 = &p.b2 * &mck;
    let a21 = bk * (&p.c2 + &p.d22 * &mdk * &p.c2);
    let a22 = ak + bk * &p.d22 * &mck;
    let b1 = &p.b1 + &p.b2 * &mdk * &p.d21;
    let b2 = bk * (&p.d21 + &p.d22 * &mdk * &p.d21);
    let c1 = &p.c1 + &p.d12 * &mdk * &p.c2;
    let c2 = &p.d12 * &mck;
    let d = &p.d11 + &p.d12 * &mdk * &p.d21;
    StateSpaceModel::new(
        linalg::block2(&a11, &a12, &a21, &a22),
        linalg::vstack(&[&b1, &b2]),
        linalg::hstack(&[&c1, &c2]),
        d,
        TimeDomain::Continuous,
        plant.realization.input_labels[..plant.n_w].to_vec(),
        plant.realization.output_labels[..plant.n_z].to_vec(),
    )
}

/// Closed-loop stability margin and H∞ norm, used to verify a synthesized
/// controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub spectral_abscissa: f64,
    pub closed_loop_norm: f64,
}

pub fn verify(plant: &GeneralizedPlant, k: &StateSpaceModel, tol: f64) -> Result<Verification> {
    let cl = close_loop(plant, k)?;
    let spectral_abscissa = cl.stability_margin()?;
    let closed_loop_norm = if spectral_abscissa < 0.0 {
        norm::hinf_norm(&cl, tol)?
    } else {
        f64::INFINITY
    };
    Ok(Verification {
        spectral_abscissa,
        closed_loop_norm,
    })
}
