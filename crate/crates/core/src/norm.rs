//! H∞ norm of a stable continuous-time system.
//!
//! Level-set iteration on the Hamiltonian whose imaginary-axis eigenvalues are
//! exactly the frequencies where some singular value of `G(jω)` equals `γ`.
//! The lower bound is always an evaluated `σ̄(G(jω))`, so the iteration
//! converges from below and terminates once `(1 + 2·tol)·lb` has no crossings.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::lti::StateSpaceModel;
use crate::riccati::IMAG_AXIS_TOL;

/// Norm value together with the frequency (rad/s) where it is attained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HinfNorm {
    pub value: f64,
    pub peak_frequency: f64,
}

const MAX_ITER: usize = 200;

pub fn hinf_norm(sys: &StateSpaceModel, tol: f64) -> Result<f64> {
    hinf_norm_with_peak(sys, tol).map(|n| n.value)
}

pub fn hinf_norm_with_peak(sys: &StateSpaceModel, tol: f64) -> Result<HinfNorm> {
    if !sys.is_continuous() {
        return Err(Error::invalid("hinf_norm expects a continuous-time system"));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::invalid("tolerance must lie in (0, 1)"));
    }
    let sigma_d = linalg::max_singular_value(&sys.d);
    if sys.n_states() == 0 || sys.n_inputs() == 0 || sys.n_outputs() == 0 {
        return Ok(HinfNorm {
            value: sigma_d,
            peak_frequency: f64::INFINITY,
        });
    }
    let margin = sys.stability_margin()?;
    if !(margin < 0.0) {
        return Err(Error::Unstable(margin));
    }

    let mut lb = sigma_d;
    let mut peak = f64::INFINITY;
    let probe = |w: f64, lb: &mut f64, peak: &mut f64| -> Result<()> {
        let s = sys.sigma_max(w)?;
        if s > *lb {
            *lb = s;
            *peak = w;
        }
        Ok(())
    };
    probe(0.0, &mut lb, &mut peak)?;
    for p in sys.poles()? {
        let w = if p.im.abs() > 0.0 {
            p.im.abs()
        } else {
            p.norm()
        };
        probe(w, &mut lb, &mut peak)?;
    }
    if lb == 0.0 {
        return Ok(HinfNorm {
            value: 0.0,
            peak_frequency: 0.0,
        });
    }

    for _ in 0..MAX_ITER {
        let gamma = (1.0 + 2.0 * tol) * lb;
        let crossings = imaginary_crossings(sys, gamma)?;
        if crossings.is_empty() {
            return Ok(HinfNorm {
                value: 0.5 * (lb + gamma),
                peak_frequency: peak,
            });
        }
        let before = lb;
        let mut pts = crossings;
        pts.insert(0, 0.0);
        for pair in pts.windows(2) {
            probe(0.5 * (pair[0] + pair[1]), &mut lb, &mut peak)?;
        }
        if let Some(&last) = pts.last() {
            probe(last, &mut lb, &mut peak)?;
        }
        if lb <= gamma {
            // midpoints missed the level set; refine locally around each interval
            for pair in pts.windows(2) {
                let (w, s) = golden_max(sys, pair[0], pair[1])?;
                if s > lb {
                    lb = s;
                    peak = w;
                }
            }
        }
        if lb <= before * (1.0 + 1e-15) {
            // crossings are numerical noise at the current level
            return Ok(HinfNorm {
                value: 0.5 * (lb + gamma),
                peak_frequency: peak,
            });
        }
    }
    Ok(HinfNorm {
        value: lb,
        peak_frequency: peak,
    })
}

/// Positive frequencies where `γ` is a singular value of `G(jω)`.
fn imaginary_crossings(sys: &StateSpaceModel, gamma: f64) -> Result<Vec<f64>> {
    let (a, b, c, d) = (&sys.a, &sys.b, &sys.c, &sys.d);
    let m = sys.n_inputs();
    let p = sys.n_outputs();
    let g2 = gamma * gamma;
    let r = d.transpose() * d - Mat::identity(m, m) * g2;
    let s = d * d.transpose() - Mat::identity(p, p) * g2;
    let ri = linalg::inverse(&r, "DᵀD − γ²I")?;
    let si = linalg::inverse(&s, "DDᵀ − γ²I")?;
    let h11 = a - b * &ri * d.transpose() * c;
    let h12 = -(b * &ri * b.transpose()) * gamma;
    let h21 = (c.transpose() * &si * c) * gamma;
    let h22 = -a.transpose() + c.transpose() * d * &ri * b.transpose();
    let h = linalg::block2(&h11, &h12, &h21, &h22);
    let scale = h.norm().max(1.0);
    let mut ws: Vec<f64> = linalg::eigenvalues(&h)?
        .into_iter()
        .filter(|l: &Complex64| l.re.abs() <= IMAG_AXIS_TOL * scale.max(l.norm()) && l.im >= 0.0)
        .map(|l| l.im)
        .collect();
    ws.sort_by(f64::total_cmp);
    ws.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * y.abs().max(1.0));
    Ok(ws)
}

fn golden_max(sys: &StateSpaceModel, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = sys.sigma_max(x1)?;
    let mut f2 = sys.sigma_max(x2)?;
    for _ in 0..80 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = sys.sigma_max(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = sys.sigma_max(x1)?;
        }
        if (b - a) <= 1e-12 * b.abs().max(1e-12) {
            break;
        }
    }
    Ok(if f1 > f2 { (x1, f1) } else { (x2, f2) })
}

/// Maximum of `σ̄(G(jω))` over a log-spaced grid. This lower bound on the norm
/// cross-checks the Hamiltonian iteration.
pub fn sweep_peak(sys: &StateSpaceModel, w_min: f64, w_max: f64, points: usize) -> Result<f64> {
    let mut best = sys.sigma_max(0.0)?;
    let (l0, l1) = (w_min.ln(), w_max.ln());
    for k in 0..points {
        let t = k as f64 / (points.max(2) - 1) as f64;
        best = best.max(sys.sigma_max((l0 + t * (l1 - l0)).exp())?);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn second_order(zeta: f64, wn: f64) -> StateSpaceModel {
        StateSpaceModel::continuous(
            Mat::from_row_slice(2, 2, &[0.0, 1.0, -wn * wn, -2.0 * zeta * wn]),
            Mat::from_row_slice(2, 1, &[0.0, wn * wn]),
            Mat::from_row_slice(1, 2, &[1.0, 0.0]),
            Mat::zeros(1, 1),
        )
        .unwrap()
    }

    #[test]
    fn static_gain_norm() {
        let sys = StateSpaceModel::static_gain(Mat::from_element(1, 1, 2.0));
        assert_eq!(hinf_norm(&sys, 1e-6).unwrap(), 2.0);
    }

    #[test]
    fn first_order_peak_at_dc() {
        let sys = StateSpaceModel::continuous(
            Mat::from_element(1, 1, -1.0),
            Mat::from_element(1, 1, 1.0),
            Mat::from_element(1, 1, 1.0),
            Mat::zeros(1, 1),
        )
        .unwrap();
        assert_relative_eq!(hinf_norm(&sys, 1e-8).unwrap(), 1.0, max_relative = 1e-7);
    }

    #[test]
    fn resonance_peak() {
        let zeta: f64 = 0.1;
        let expect = 1.0 / (2.0 * zeta * (1.0 - zeta * zeta).sqrt());
        let got = hinf_norm(&second_order(zeta, 1.0), 1e-6).unwrap();
        assert_relative_eq!(got, expect, max_relative = 1e-5);
        assert_relative_eq!(expect, 5.0252, max_relative = 1e-4);
    }

    #[test]
    fn unstable_is_an_error() {
        let sys = StateSpaceModel::continuous(
            Mat::from_element(1, 1, 1.0),
            Mat::from_element(1, 1, 1.0),
            Mat::from_element(1, 1, 1.0),
            Mat::zeros(1, 1),
        )
        .unwrap();
        assert!(matches!(hinf_norm(&sys, 1e-3), Err(Error::Unstable(_))));
    }

    #[test]
    fn agrees_with_sweep() {
        let sys = second_order(0.3, 7.0);
        let tol = 1e-3;
        let h = hinf_norm(&sys, tol).unwrap();
        let s = sweep_peak(&sys, 1e-3, 1e4, 4000).unwrap();
        assert!(s <= h * (1.0 + tol));
        assert!((h - s).abs() <= 2.0 * tol * h);
    }
}
