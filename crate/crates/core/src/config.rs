//! Toolkit configuration. Every value carries a provenance tag so that
//! assumed and calibrated parameters stay distinguishable from published
//! ones. User files may give bare values, which are tagged `user`.

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::drive_cycle::VehicleParams;
use crate::error::{Error, Result};
use crate::motor::MotorParams;
use crate::rainflow;
use crate::synthesis::{ControlMode, InputScaling, Regularization};
use crate::thermal::{LifetimeParams, LossParams, ThermalParams, BOLTZMANN_EV};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;
/// Environment variable naming a config file used when `--config` is absent.
pub const CONFIG_ENV: &str = "RELCON_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Paper,
    Calibrated,
    Assumed,
    User,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sourced<T> {
    pub value: T,
    pub source: Source,
}

impl<T> Sourced<T> {
    pub const fn new(value: T, source: Source) -> Self {
        Sourced { value, source }
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for Sourced<T> {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Tagged<T> {
            value: T,
            source: Source,
        }
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Either<T> {
            Tagged(Tagged<T>),
            Bare(T),
        }
        Ok(match Either::deserialize(de)? {
            Either::Tagged(t) => Sourced::new(t.value, t.source),
            Either::Bare(v) => Sourced::new(v, Source::User),
        })
    }
}

macro_rules! config_block {
    ($(#[$meta:meta])* $name:ident { $($(#[$fmeta:meta])* $field:ident : $ty:ty = $val:expr, $src:ident;)* }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct $name {
            $($(#[$fmeta])* pub $field: Sourced<$ty>,)*
        }

        impl Default for $name {
            fn default() -> Self {
                $name {
                    $($field: Sourced::new($val, Source::$src),)*
                }
            }
        }
    };
}

config_block!(MotorConfig {
    /// Stator resistance (Ω).
    r_s: f64 = 0.03, Assumed;
    l_d: f64 = 5e-4, Assumed;
    l_q: f64 = 5e-4, Assumed;
    phi_f: f64 = 0.4, Assumed;
    pole_pairs: u32 = 1, Assumed;
    /// Rotor plus reflected vehicle inertia (kg·m²).
    inertia: f64 = 1.4, Assumed;
    friction: f64 = 0.01, Assumed;
});

config_block!(VehicleConfig {
    mass: f64 = 1500.0, Assumed;
    wheel_radius: f64 = 0.3, Assumed;
    gear_ratio: f64 = 10.0, Assumed;
    c_rr: f64 = 0.01, Assumed;
    rho_cd_a: f64 = 0.75, Assumed;
    driveline_eff: f64 = 0.95, Assumed;
    /// Off because the vehicle mass sits in the motor inertia.
    inertial_load: bool = false, Assumed;
});

config_block!(ThermalConfig {
    r_theta: f64 = 1.0, Assumed;
    c_theta: f64 = 2.0, Assumed;
    t_ambient: f64 = 40.0, Assumed;
});

config_block!(LossConfig {
    v_ce0: f64 = 0.8, Assumed;
    r_ce: f64 = 2.5e-3, Assumed;
    duty: f64 = 0.5, Assumed;
});

config_block!(LifetimeConfig {
    a0: f64 = 2.277963612304286e14, Calibrated;
    a1: f64 = 10.0, Assumed;
    alpha: f64 = -5.2711566424540734, Calibrated;
    t0: f64 = 20.0, Assumed;
    lambda: f64 = 60.0, Assumed;
    ea: f64 = 0.06606, Assumed;
    kb: f64 = BOLTZMANN_EV, Paper;
    c_ton: f64 = 1.434, Assumed;
    gamma_ton: f64 = -1.208, Assumed;
    k_thick: f64 = 0.6204, Assumed;
});

config_block!(SynthesisConfig {
    eps_u: f64 = 1e-4, Assumed;
    eps_n: f64 = 1e-4, Assumed;
    /// Size of a unit reference input (rad/s).
    reference_scale: f64 = 1.0, Assumed;
    /// Size of a unit load input (N·m).
    load_scale: f64 = 0.3, Assumed;
    gamma_min: f64 = 1e-3, Assumed;
    gamma_max: f64 = 1e4, Assumed;
    tol: f64 = 1e-3, Assumed;
});

config_block!(SimulationConfig {
    dt: f64 = 1e-3, Assumed;
    log_decimation: u32 = 10, Assumed;
    hysteresis: f64 = 0.5, Assumed;
    dt_bin_step: f64 = 2.0, Assumed;
    dt_bin_max: f64 = 60.0, Assumed;
    ton_bin_min: f64 = 0.1, Assumed;
    ton_bin_max: f64 = 100.0, Assumed;
    ton_bin_count: u32 = 12, Assumed;
    cycles_per_day: f64 = 2.0, Paper;
    /// Optional symmetric clamp on the stator voltages (V).
    voltage_limit: Option<f64> = None, Assumed;
});

config_block!(PathsConfig {
    /// Drive cycle used when none is given on the command line; `null`
    /// selects the bundled WLTC class 3b trace.
    cycle: Option<String> = None, Assumed;
});

/// Tracking weight `W_e` parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackingWeightConfig {
    pub corner: Sourced<f64>,
    pub dc_gain: Sourced<f64>,
    pub hf_gain: Sourced<f64>,
}

/// Current weight `W_I` parameters. A `null` bandwidth selects the thermal
/// bandwidth `1/(R_θ C_θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurrentWeightConfig {
    pub bandwidth: Sourced<Option<f64>>,
    pub lf_gain: Sourced<f64>,
    pub hf_gain: Sourced<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeWeights {
    pub tracking: TrackingWeightConfig,
    pub current: CurrentWeightConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightsConfig {
    pub performance_oriented: ModeWeights,
    pub reliability_aware: ModeWeights,
}

fn tracking_default() -> TrackingWeightConfig {
    TrackingWeightConfig {
        corner: Sourced::new(10.0, Source::Assumed),
        dc_gain: Sourced::new(1000.0, Source::Assumed),
        hf_gain: Sourced::new(0.5, Source::Assumed),
    }
}

impl Default for WeightsConfig {
    fn default() -> Self {
        WeightsConfig {
            performance_oriented: ModeWeights {
                tracking: tracking_default(),
                current: CurrentWeightConfig {
                    bandwidth: Sourced::new(None, Source::Assumed),
                    lf_gain: Sourced::new(1e-3, Source::Assumed),
                    hf_gain: Sourced::new(1e-3, Source::Assumed),
                },
            },
            reliability_aware: ModeWeights {
                tracking: tracking_default(),
                current: CurrentWeightConfig {
                    bandwidth: Sourced::new(None, Source::Assumed),
                    lf_gain: Sourced::new(50.0, Source::Assumed),
                    hf_gain: Sourced::new(0.1, Source::Assumed),
                },
            },
        }
    }
}

impl WeightsConfig {
    pub fn for_mode(&self, mode: ControlMode) -> &ModeWeights {
        match mode {
            ControlMode::PerformanceOriented => &self.performance_oriented,
            ControlMode::ReliabilityAware => &self.reliability_aware,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolkitConfig {
    pub schema_version: u32,
    pub motor: MotorConfig,
    pub vehicle: VehicleConfig,
    pub thermal: ThermalConfig,
    pub loss: LossConfig,
    pub lifetime: LifetimeConfig,
    pub weights: WeightsConfig,
    pub synthesis: SynthesisConfig,
    pub simulation: SimulationConfig,
    pub paths: PathsConfig,
}

impl Default for ToolkitConfig {
    fn default() -> Self {
        ToolkitConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            motor: MotorConfig::default(),
            vehicle: VehicleConfig::default(),
            thermal: ThermalConfig::default(),
            loss: LossConfig::default(),
            lifetime: LifetimeConfig::default(),
            weights: WeightsConfig::default(),
            synthesis: SynthesisConfig::default(),
            simulation: SimulationConfig::default(),
            paths: PathsConfig::default(),
        }
    }
}

/// Weight parameters with provenance stripped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightParams {
    pub tracking_corner: f64,
    pub tracking_dc: f64,
    pub tracking_hf: f64,
    pub current_bandwidth: f64,
    pub current_lf: f64,
    pub current_hf: f64,
}

/// Simulation settings with provenance stripped.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub dt: f64,
    pub log_decimation: usize,
    pub hysteresis: f64,
    pub edges_dt: Vec<f64>,
    pub edges_ton: Vec<f64>,
    pub cycles_per_day: f64,
    pub voltage_limit: Option<f64>,
}

impl ToolkitConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ToolkitConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Loads `path` if given, else the file named by [`CONFIG_ENV`], else
    /// the defaults.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::from_path(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::from_path(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "config schema_version {} is not supported (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.motor_params().validate()?;
        self.vehicle_params().validate()?;
        self.thermal_params().validate()?;
        self.loss_params().validate()?;
        self.lifetime_params().validate()?;
        let s = &self.synthesis;
        if !(s.gamma_min.value > 0.0 && s.gamma_max.value > s.gamma_min.value) {
            return Err(Error::invalid("synthesis needs 0 < gamma_min < gamma_max"));
        }
        if !(s.tol.value > 0.0 && s.tol.value < 1.0) {
            return Err(Error::invalid("synthesis.tol must lie in (0, 1)"));
        }
        if !(s.reference_scale.value > 0.0 && s.load_scale.value > 0.0) {
            return Err(Error::invalid("synthesis input scales must be > 0"));
        }
        if !(s.eps_u.value > 0.0 && s.eps_n.value > 0.0) {
            return Err(Error::invalid("synthesis.eps_u and eps_n must be > 0"));
        }
        let sim = self.sim_settings();
        if !(sim.dt > 0.0 && sim.dt <= 0.01) {
            return Err(Error::invalid("simulation.dt must lie in (0, 0.01] s"));
        }
        if sim.log_decimation < 1 {
            return Err(Error::invalid("simulation.log_decimation must be ≥ 1"));
        }
        if !(sim.hysteresis >= 0.0) {
            return Err(Error::invalid("simulation.hysteresis must be ≥ 0"));
        }
        let b = &self.simulation;
        if !(b.dt_bin_step.value > 0.0 && b.dt_bin_max.value >= b.dt_bin_step.value) {
            return Err(Error::invalid("ΔT bins need 0 < dt_bin_step ≤ dt_bin_max"));
        }
        if !(b.ton_bin_min.value > 0.0
            && b.ton_bin_max.value > b.ton_bin_min.value
            && b.ton_bin_count.value >= 1)
        {
            return Err(Error::invalid(
                "t_on bins need 0 < ton_bin_min < ton_bin_max and count ≥ 1",
            ));
        }
        if !(sim.cycles_per_day > 0.0) {
            return Err(Error::invalid("simulation.cycles_per_day must be > 0"));
        }
        if let Some(v) = sim.voltage_limit {
            if !(v > 0.0) {
                return Err(Error::invalid("simulation.voltage_limit must be > 0"));
            }
        }
        for mode in ControlMode::ALL {
            let w = self.weight_params(mode);
            crate::synthesis::make_tracking_weight(
                w.tracking_corner,
                w.tracking_dc,
                w.tracking_hf,
            )?;
            crate::synthesis::make_current_weight(w.current_bandwidth, w.current_lf, w.current_hf)?;
        }
        Ok(())
    }

    pub fn motor_params(&self) -> MotorParams {
        let m = &self.motor;
        MotorParams {
            r_s: m.r_s.value,
            l_d: m.l_d.value,
            l_q: m.l_q.value,
            phi_f: m.phi_f.value,
            pole_pairs: m.pole_pairs.value,
            inertia: m.inertia.value,
            friction: m.friction.value,
        }
    }

    pub fn vehicle_params(&self) -> VehicleParams {
        let v = &self.vehicle;
        VehicleParams {
            mass: v.mass.value,
            wheel_radius: v.wheel_radius.value,
            gear_ratio: v.gear_ratio.value,
            c_rr: v.c_rr.value,
            rho_cd_a: v.rho_cd_a.value,
            driveline_eff: v.driveline_eff.value,
            inertial_load: v.inertial_load.value,
        }
    }

    pub fn thermal_params(&self) -> ThermalParams {
        let t = &self.thermal;
        ThermalParams {
            r_theta: t.r_theta.value,
            c_theta: t.c_theta.value,
            t_ambient: t.t_ambient.value,
        }
    }

    pub fn loss_params(&self) -> LossParams {
        let l = &self.loss;
        LossParams {
            v_ce0: l.v_ce0.value,
            r_ce: l.r_ce.value,
            duty: l.duty.value,
        }
    }

    pub fn lifetime_params(&self) -> LifetimeParams {
        let l = &self.lifetime;
        LifetimeParams {
            a0: l.a0.value,
            a1: l.a1.value,
            alpha: l.alpha.value,
            t0: l.t0.value,
            lambda: l.lambda.value,
            ea: l.ea.value,
            kb: l.kb.value,
            c_ton: l.c_ton.value,
            gamma_ton: l.gamma_ton.value,
            k_thick: l.k_thick.value,
        }
    }

    pub fn regularization(&self) -> Regularization {
        Regularization {
            eps_u: self.synthesis.eps_u.value,
            eps_n: self.synthesis.eps_n.value,
        }
    }

    pub fn input_scaling(&self) -> InputScaling {
        InputScaling {
            reference: self.synthesis.reference_scale.value,
            load: self.synthesis.load_scale.value,
        }
    }

    pub fn gamma_range(&self) -> (f64, f64) {
        (
            self.synthesis.gamma_min.value,
            self.synthesis.gamma_max.value,
        )
    }

    pub fn weight_params(&self, mode: ControlMode) -> WeightParams {
        let w = self.weights.for_mode(mode);
        WeightParams {
            tracking_corner: w.tracking.corner.value,
            tracking_dc: w.tracking.dc_gain.value,
            tracking_hf: w.tracking.hf_gain.value,
            current_bandwidth: w
                .current
                .bandwidth
                .value
                .unwrap_or_else(|| self.thermal_params().bandwidth()),
            current_lf: w.current.lf_gain.value,
            current_hf: w.current.hf_gain.value,
        }
    }

    pub fn sim_settings(&self) -> SimSettings {
        let s = &self.simulation;
        SimSettings {
            dt: s.dt.value,
            log_decimation: s.log_decimation.value as usize,
            hysteresis: s.hysteresis.value,
            edges_dt: rainflow::linear_edges(s.dt_bin_step.value, s.dt_bin_max.value),
            edges_ton: rainflow::log_edges(
                s.ton_bin_min.value,
                s.ton_bin_max.value,
                s.ton_bin_count.value as usize,
            ),
            cycles_per_day: s.cycles_per_day.value,
            voltage_limit: s.voltage_limit.value,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = ToolkitConfig::default();
        c.validate().unwrap();
        let back = ToolkitConfig::from_json(&c.to_json_pretty()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn every_default_is_tagged_with_a_known_source() {
        let v: serde_json::Value =
            serde_json::from_str(&ToolkitConfig::default().to_json_pretty()).unwrap();
        fn walk(v: &serde_json::Value, leaves: &mut usize) {
            if let Some(obj) = v.as_object() {
                if obj.contains_key("value") {
                    let src = obj["source"].as_str().unwrap();
                    assert!(["paper", "calibrated", "assumed"].contains(&src), "{src}");
                    *leaves += 1;
                    return;
                }
                for child in obj.values() {
                    walk(child, leaves);
                }
            }
        }
        let mut leaves = 0;
        walk(&v, &mut leaves);
        assert!(leaves > 40);
    }

    #[test]
    fn partial_file_overrides_with_user_tag() {
        let c = ToolkitConfig::from_json(r#"{"motor": {"r_s": 0.05}, "thermal": {"r_theta": {"value": 0.7, "source": "paper"}}}"#)
            .unwrap();
        assert_eq!(c.motor.r_s, Sourced::new(0.05, Source::User));
        assert_eq!(c.thermal.r_theta, Sourced::new(0.7, Source::Paper));
        assert_eq!(c.motor.l_d, MotorConfig::default().l_d);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ToolkitConfig::from_json(r#"{"motorr": {}}"#).is_err());
        assert!(ToolkitConfig::from_json(r#"{"motor": {"rs": 1.0}}"#).is_err());
        assert!(ToolkitConfig::from_json(
            r#"{"motor": {"r_s": {"value": 1.0, "source": "guess"}}}"#
        )
        .is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(ToolkitConfig::from_json(r#"{"motor": {"r_s": -1.0}}"#).is_err());
        assert!(ToolkitConfig::from_json(r#"{"simulation": {"dt": 0.1}}"#).is_err());
        assert!(ToolkitConfig::from_json(r#"{"schema_version": 9}"#).is_err());
    }

    #[test]
    fn null_bandwidth_tracks_thermal_model() {
        let c = ToolkitConfig::default();
        let w = c.weight_params(ControlMode::ReliabilityAware);
        assert_eq!(w.current_bandwidth, c.thermal_params().bandwidth());
    }
}
