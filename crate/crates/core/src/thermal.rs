//! IGBT conduction loss, first-order junction temperature and the empirical
//! power-cycling lifetime model with linear damage accumulation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motor::MotorState;

/// Boltzmann constant (eV/K).
pub const BOLTZMANN_EV: f64 = 8.617e-5;
const KELVIN_OFFSET: f64 = 273.15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossParams {
    /// On-state threshold voltage (V).
    pub v_ce0: f64,
    /// On-state slope resistance (Ω).
    pub r_ce: f64,
    /// Average conduction duty factor.
    pub duty: f64,
}

impl LossParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_ce0 >= 0.0 && self.v_ce0.is_finite()) {
            return Err(Error::invalid("loss.v_ce0 must be ≥ 0"));
        }
        if !(self.r_ce > 0.0 && self.r_ce.is_finite()) {
            return Err(Error::invalid("loss.r_ce must be > 0"));
        }
        if !(self.duty > 0.0 && self.duty <= 1.0) {
            return Err(Error::invalid("loss.duty must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalParams {
    /// Junction-to-ambient thermal resistance (K/W).
    pub r_theta: f64,
    /// Thermal capacitance (J/K).
    pub c_theta: f64,
    /// Heatsink temperature (°C).
    pub t_ambient: f64,
}

impl ThermalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_theta > 0.0 && self.r_theta.is_finite()) {
            return Err(Error::invalid("thermal.r_theta must be > 0"));
        }
        if !(self.c_theta > 0.0 && self.c_theta.is_finite()) {
            return Err(Error::invalid("thermal.c_theta must be > 0"));
        }
        if !self.t_ambient.is_finite() {
            return Err(Error::invalid("thermal.t_ambient must be finite"));
        }
        Ok(())
    }

    pub fn time_constant(&self) -> f64 {
        self.r_theta * self.c_theta
    }

    /// Thermal bandwidth `1/(R_θ C_θ)` in rad/s.
    pub fn bandwidth(&self) -> f64 {
        1.0 / self.time_constant()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifetimeParams {
    pub a0: f64,
    pub a1: f64,
    pub alpha: f64,
    /// Reference temperature swing (K).
    pub t0: f64,
    /// Decay constant of the swing exponent (K).
    pub lambda: f64,
    /// Activation energy (eV).
    pub ea: f64,
    /// Boltzmann constant (eV/K); must equal [`BOLTZMANN_EV`].
    pub kb: f64,
    pub c_ton: f64,
    pub gamma_ton: f64,
    pub k_thick: f64,
}

impl LifetimeParams {
    pub fn validate(&self) -> Result<()> {
        if self.kb != BOLTZMANN_EV {
            return Err(Error::invalid(format!(
                "lifetime.kb must be {BOLTZMANN_EV}"
            )));
        }
        if !(self.a0 > 0.0) {
            return Err(Error::invalid("lifetime.a0 must be > 0"));
        }
        if !(self.a1 > 0.0) {
            return Err(Error::invalid("lifetime.a1 must be > 0"));
        }
        if !(self.lambda != 0.0) {
            return Err(Error::invalid("lifetime.lambda must be non-zero"));
        }
        let all = [
            self.a0,
            self.a1,
            self.alpha,
            self.t0,
            self.lambda,
            self.ea,
            self.c_ton,
            self.gamma_ton,
            self.k_thick,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("lifetime parameters must be finite"));
        }
        if !(self.k_thick > 0.0) {
            return Err(Error::invalid("lifetime.k_thick must be > 0"));
        }
        Ok(())
    }
}

/// One rainflow bin fed to the damage sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalCycleBin {
    /// Temperature swing (K).
    pub delta_t: f64,
    /// Mean junction temperature (°C).
    pub mean_tj: f64,
    /// Cycle duration (s).
    pub t_on: f64,
    /// Number of cycles; half cycles count 0.5.
    pub count: f64,
}

pub fn conduction_loss(i_on: f64, lp: &LossParams) -> Result<f64> {
    if !(i_on >= 0.0) {
        return Err(Error::Contract(format!(
            "conduction current must be ≥ 0, got {i_on}"
        )));
    }
    Ok(lp.duty * (lp.v_ce0 * i_on + lp.r_ce * i_on * i_on))
}

/// Device current: the phase-current amplitude `√(i_d² + i_q²)`.
pub fn on_state_current(state: &MotorState) -> f64 {
    state.i_d.hypot(state.i_q)
}

/// Exact zero-order-hold step of `C_θ dT/dt = P − (T − T_a)/R_θ`.
pub fn step_junction_temperature(t_j: f64, power: f64, dt: f64, tp: &ThermalParams) -> f64 {
    let t_ss = tp.t_ambient + power * tp.r_theta;
    t_ss + (t_j - t_ss) * (-dt / tp.time_constant()).exp()
}

/// Cycles to failure for one thermal cycle.
pub fn cycles_to_failure(
    delta_t: f64,
    mean_tj: f64,
    t_on: f64,
    lp: &LifetimeParams,
) -> Result<f64> {
    if !(delta_t > 0.0) {
        return Err(Error::invalid(format!(
            "delta_T must be > 0, got {delta_t}"
        )));
    }
    if !(t_on > 0.0) {
        return Err(Error::invalid(format!("t_on must be > 0, got {t_on}")));
    }
    if !(mean_tj > -KELVIN_OFFSET) {
        return Err(Error::invalid(format!(
            "mean T_j {mean_tj} °C is below absolute zero"
        )));
    }
    let t_k = mean_tj + KELVIN_OFFSET;
    let beta = (-(delta_t - lp.t0) / lp.lambda).exp();
    // evaluate in log space so that large exponents do not overflow midway
    let ln_nf = lp.a0.ln()
        + beta * lp.a1.ln()
        + (lp.alpha - beta) * delta_t.ln()
        + lp.ea / (lp.kb * t_k)
        + ((lp.c_ton + t_on.powf(lp.gamma_ton)) / (lp.c_ton + 2f64.powf(lp.gamma_ton))).ln()
        + lp.k_thick.ln();
    let nf = ln_nf.exp();
    if !nf.is_finite() || nf <= 0.0 {
        return Err(Error::NonFinite(format!(
            "cycles_to_failure(ΔT={delta_t}, T={mean_tj}, t_on={t_on})"
        )));
    }
    Ok(nf)
}

/// A target `N_f` at a given stress.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifetimeAnchor {
    pub delta_t: f64,
    pub mean_tj: f64,
    pub t_on: f64,
    pub cycles: f64,
}

/// Fits `alpha` and `a0` of `base` so that both anchors are met exactly.
/// `ln N_f` is affine in `(ln a0, alpha)`, so two anchors with distinct
/// swings determine both.
pub fn calibrate_lifetime(
    base: &LifetimeParams,
    anchors: [LifetimeAnchor; 2],
) -> Result<LifetimeParams> {
    let [p, q] = anchors;
    if !(p.cycles > 0.0 && q.cycles > 0.0) {
        return Err(Error::invalid("anchor cycle counts must be > 0"));
    }
    if p.delta_t == q.delta_t {
        return Err(Error::invalid("anchors need distinct temperature swings"));
    }
    let mut unit = *base;
    unit.a0 = 1.0;
    unit.alpha = 0.0;
    let rest = |a: &LifetimeAnchor| -> Result<f64> {
        Ok(cycles_to_failure(a.delta_t, a.mean_tj, a.t_on, &unit)?.ln())
    };
    let (rp, rq) = (rest(&p)?, rest(&q)?);
    let alpha = ((p.cycles.ln() - rp) - (q.cycles.ln() - rq)) / (p.delta_t.ln() - q.delta_t.ln());
    let ln_a0 = p.cycles.ln() - rp - alpha * p.delta_t.ln();
    let out = LifetimeParams {
        a0: ln_a0.exp(),
        alpha,
        ..unit
    };
    out.validate()?;
    Ok(out)
}

/// Miner's rule: `D = Σ n_i / N_f,i`.
pub fn miner_damage(bins: &[ThermalCycleBin], lp: &LifetimeParams) -> Result<f64> {
    let mut d = 0.0;
    for b in bins {
        if b.count == 0.0 {
            continue;
        }
        d += b.count / cycles_to_failure(b.delta_t, b.mean_tj, b.t_on, lp)?;
    }
    Ok(d)
}

/// Projected lifetime for a given damage per drive cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifetimeProjection {
    /// Drive cycles to failure; `None` when no damage accrues.
    pub cycles: Option<f64>,
    pub years: Option<f64>,
}

pub fn lifetime_projection(
    damage_per_cycle: f64,
    cycles_per_day: f64,
) -> Result<LifetimeProjection> {
    if !(damage_per_cycle >= 0.0) {
        return Err(Error::invalid("damage must be ≥ 0"));
    }
    if !(cycles_per_day > 0.0) {
        return Err(Error::invalid("cycles_per_day must be > 0"));
    }
    if damage_per_cycle == 0.0 {
        return Ok(LifetimeProjection {
            cycles: None,
            years: None,
        });
    }
    let cycles = 1.0 / damage_per_cycle;
    Ok(LifetimeProjection {
        cycles: Some(cycles),
        years: Some(cycles / (cycles_per_day * 365.0)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn lp() -> LifetimeParams {
        crate::config::ToolkitConfig::default().lifetime_params()
    }

    fn anchors() -> [LifetimeAnchor; 2] {
        let a = |delta_t, cycles| LifetimeAnchor {
            delta_t,
            mean_tj: 150.0,
            t_on: 10.0,
            cycles,
        };
        [a(40.0, 922e3), a(80.0, 30e3)]
    }

    #[test]
    fn calibration_meets_anchors_and_matches_shipped_constants() {
        let fit = calibrate_lifetime(&lp(), anchors()).unwrap();
        for a in anchors() {
            let n = cycles_to_failure(a.delta_t, a.mean_tj, a.t_on, &fit).unwrap();
            assert_relative_eq!(n, a.cycles, max_relative = 1e-10);
        }
        assert_relative_eq!(fit.alpha, lp().alpha, max_relative = 1e-12);
        assert_relative_eq!(fit.a0, lp().a0, max_relative = 1e-12);
    }

    #[test]
    fn calibration_rejects_degenerate_anchors() {
        let [p, _] = anchors();
        assert!(calibrate_lifetime(&lp(), [p, p]).is_err());
        let zero = LifetimeAnchor { cycles: 0.0, ..p };
        assert!(calibrate_lifetime(&lp(), [zero, anchors()[1]]).is_err());
    }

    fn tp() -> ThermalParams {
        ThermalParams {
            r_theta: 0.5,
            c_theta: 4.0,
            t_ambient: 40.0,
        }
    }

    #[test]
    fn conduction_loss_examples() {
        let l = LossParams {
            v_ce0: 0.8,
            r_ce: 1e-3,
            duty: 1.0,
        };
        assert_eq!(conduction_loss(0.0, &l).unwrap(), 0.0);
        assert_relative_eq!(
            conduction_loss(100.0, &l).unwrap(),
            90.0,
            max_relative = 1e-14
        );
        let q = LossParams { v_ce0: 0.0, ..l };
        assert_relative_eq!(
            conduction_loss(20.0, &q).unwrap(),
            4.0 * conduction_loss(10.0, &q).unwrap(),
            max_relative = 1e-14
        );
        assert!(conduction_loss(-1.0, &l).is_err());
    }

    #[test]
    fn on_state_current_is_dq_magnitude() {
        assert_eq!(on_state_current(&MotorState::new(0.0, 0.0, 0.0)), 0.0);
        assert_eq!(on_state_current(&MotorState::new(3.0, 4.0, 0.0)), 5.0);
    }

    #[test]
    fn equilibrium_is_fixed() {
        let t = tp();
        let mut tj = t.t_ambient;
        for _ in 0..1000 {
            tj = step_junction_temperature(tj, 0.0, 1e-3, &t);
        }
        assert_eq!(tj, t.t_ambient);
    }

    #[test]
    fn steady_state_after_seven_time_constants() {
        let t = tp();
        let dt = 1e-3;
        let steps = (7.0 * t.time_constant() / dt).round() as usize;
        let mut tj = t.t_ambient;
        for _ in 0..steps {
            tj = step_junction_temperature(tj, 100.0, dt, &t);
        }
        assert!((tj - 90.0).abs() <= 0.001 * 50.0);
    }

    /// Reference: RK4 with 100 substeps per hold interval.
    #[test]
    fn matches_fine_ode_integration() {
        let t = tp();
        let dt = 0.01;
        let f = |tj: f64, p: f64| (p - (tj - t.t_ambient) / t.r_theta) / t.c_theta;
        let mut exact = t.t_ambient;
        let mut reference = t.t_ambient;
        let mut worst: f64 = 0.0;
        for k in 0..2000 {
            let p = 60.0 + 50.0 * (k as f64 * 0.013).sin();
            exact = step_junction_temperature(exact, p, dt, &t);
            let h = dt / 100.0;
            for _ in 0..100 {
                let k1 = f(reference, p);
                let k2 = f(reference + 0.5 * h * k1, p);
                let k3 = f(reference + 0.5 * h * k2, p);
                let k4 = f(reference + h * k3, p);
                reference += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            worst = worst.max((exact - reference).abs());
        }
        assert!(worst <= 1e-3, "{worst}");
    }

    #[test]
    fn on_time_factor_is_one_at_two_seconds() {
        let mut a = lp();
        let base = cycles_to_failure(40.0, 100.0, 2.0, &a).unwrap();
        a.c_ton = 7.0;
        a.gamma_ton = -3.0;
        assert_relative_eq!(
            cycles_to_failure(40.0, 100.0, 2.0, &a).unwrap(),
            base,
            max_relative = 1e-12
        );
    }

    #[test]
    fn cycles_to_failure_rejects_bad_input() {
        let l = lp();
        assert!(cycles_to_failure(0.0, 100.0, 1.0, &l).is_err());
        assert!(cycles_to_failure(10.0, 100.0, 0.0, &l).is_err());
        assert!(cycles_to_failure(10.0, -300.0, 1.0, &l).is_err());
    }

    #[test]
    fn monotone_in_swing_time_and_temperature() {
        let l = lp();
        let mut prev = f64::INFINITY;
        for k in 0..=220 {
            let dt = 10.0 + 0.5 * k as f64;
            let n = cycles_to_failure(dt, 150.0, 10.0, &l).unwrap();
            assert!(n < prev, "ΔT={dt}");
            prev = n;
        }
        let mut prev = f64::INFINITY;
        for k in 0..=60 {
            let ton = 0.1 * 10f64.powf(3.0 * k as f64 / 60.0);
            let n = cycles_to_failure(40.0, 150.0, ton, &l).unwrap();
            assert!(n <= prev, "t_on={ton}");
            prev = n;
        }
        let mut prev = f64::INFINITY;
        for k in 0..=30 {
            let n = cycles_to_failure(40.0, 20.0 + 5.0 * k as f64, 10.0, &l).unwrap();
            assert!(n < prev);
            prev = n;
        }
    }

    #[test]
    fn damage_examples() {
        let l = lp();
        assert_eq!(miner_damage(&[], &l).unwrap(), 0.0);
        let nf = cycles_to_failure(30.0, 80.0, 3.0, &l).unwrap();
        let bin = ThermalCycleBin {
            delta_t: 30.0,
            mean_tj: 80.0,
            t_on: 3.0,
            count: nf,
        };
        assert_relative_eq!(miner_damage(&[bin], &l).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn projection_examples() {
        let p = lifetime_projection(1.6e-4, 2.0).unwrap();
        assert_relative_eq!(p.cycles.unwrap(), 6250.0, max_relative = 1e-12);
        assert!((p.years.unwrap() - 8.56).abs() < 0.01);
        let p = lifetime_projection(1.1e-4, 2.0).unwrap();
        assert!((p.cycles.unwrap() - 9091.0).abs() < 1.0);
        assert!((p.years.unwrap() - 12.45).abs() < 0.01);
        assert_eq!(lifetime_projection(1.0, 2.0).unwrap().cycles, Some(1.0));
        assert_eq!(lifetime_projection(0.0, 2.0).unwrap().cycles, None);
    }

    fn arb_bin() -> impl Strategy<Value = ThermalCycleBin> {
        (1.0..80.0f64, 30.0..150.0f64, 0.1..100.0f64, 0.5..50.0f64).prop_map(|(d, m, t, c)| {
            ThermalCycleBin {
                delta_t: d,
                mean_tj: m,
                t_on: t,
                count: (c * 2.0).round() / 2.0,
            }
        })
    }

    proptest! {
        #[test]
        fn temperature_step_contracts(tj in -20.0..200.0f64, p in 0.0..500.0f64, dt in 1e-6..10.0f64) {
            let t = tp();
            let t_ss = t.t_ambient + p * t.r_theta;
            let next = step_junction_temperature(tj, p, dt, &t);
            prop_assert!((next - t_ss).abs() <= (tj - t_ss).abs());
            if tj != t_ss {
                prop_assert!((next - t_ss).abs() < (tj - t_ss).abs());
            }
        }

        #[test]
        fn damage_is_additive_and_order_free(
            a in proptest::collection::vec(arb_bin(), 0..20),
            b in proptest::collection::vec(arb_bin(), 0..20),
        ) {
            let l = lp();
            let da = miner_damage(&a, &l).unwrap();
            let db = miner_damage(&b, &l).unwrap();
            let mut all = a.clone();
            all.extend(b.iter().copied());
            let dab = miner_damage(&all, &l).unwrap();
            prop_assert!((dab - (da + db)).abs() <= 1e-12 * dab.max(1e-300));
            all.reverse();
            let rev = miner_damage(&all, &l).unwrap();
            prop_assert!((rev - dab).abs() <= 1e-12 * dab.max(1e-300));
        }

        #[test]
        fn on_state_current_rotation_invariant(id in -300.0..300.0f64, iq in -300.0..300.0f64, th in 0.0..6.3f64) {
            let (s, c) = th.sin_cos();
            let a = on_state_current(&MotorState::new(id, iq, 0.0));
            let b = on_state_current(&MotorState::new(c * id - s * iq, s * id + c * iq, 0.0));
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        }
    }
}
