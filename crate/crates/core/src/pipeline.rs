//! End-to-end workflow: weights and plant from the config, synthesis,
//! closed-loop simulation and damage analysis, per control mode.

use serde::{Deserialize, Serialize};

use crate::config::ToolkitConfig;
use crate::drive_cycle::DriveCycle;
use crate::error::Result;
use crate::motor;
use crate::sim::{self, DamageReport, RainflowSettings, Scenario, SimulationLog};
use crate::synthesis::{
    self, build_scaled_generalized_plant, make_current_weight, make_tracking_weight, ControlMode,
    ControllerRealization, GeneralizedPlant, Verification,
};

/// Relative tolerance of the closed-loop norm check.
pub const VERIFY_TOL: f64 = 1e-3;

pub fn design_plant(cfg: &ToolkitConfig, mode: ControlMode) -> Result<GeneralizedPlant> {
    let w = cfg.weight_params(mode);
    let we = make_tracking_weight(w.tracking_corner, w.tracking_dc, w.tracking_hf)?;
    let wi = make_current_weight(w.current_bandwidth, w.current_lf, w.current_hf)?;
    let motor = motor::linearize(&cfg.motor_params())?;
    build_scaled_generalized_plant(&motor, &we, &wi, cfg.regularization(), cfg.input_scaling())
}

#[derive(Debug, Clone)]
pub struct SynthesisOutcome {
    pub controller: ControllerRealization,
    pub verification: Verification,
    pub plant: GeneralizedPlant,
}

pub fn synthesize_mode(cfg: &ToolkitConfig, mode: ControlMode) -> Result<SynthesisOutcome> {
    let plant = design_plant(cfg, mode)?;
    let sol = synthesis::synthesize(&plant, cfg.gamma_range(), cfg.synthesis.tol.value)?;
    let verification = synthesis::verify(&plant, &sol.controller, VERIFY_TOL * 0.1)?;
    let controller =
        ControllerRealization::new(sol.controller, sol.gamma, mode, cfg.simulation.dt.value)?;
    Ok(SynthesisOutcome {
        controller,
        verification,
        plant,
    })
}

pub fn simulate(
    cfg: &ToolkitConfig,
    cycle: &DriveCycle,
    controller: &ControllerRealization,
) -> Result<SimulationLog> {
    let s = cfg.sim_settings();
    sim::run_closed_loop(&Scenario {
        motor: cfg.motor_params(),
        vehicle: cfg.vehicle_params(),
        cycle,
        controller,
        thermal: cfg.thermal_params(),
        loss: cfg.loss_params(),
        dt: s.dt,
        log_decimation: s.log_decimation,
        voltage_limit: s.voltage_limit,
    })
}

pub fn rainflow_settings(cfg: &ToolkitConfig) -> RainflowSettings {
    let s = cfg.sim_settings();
    RainflowSettings {
        hysteresis: s.hysteresis,
        edges_dt: s.edges_dt,
        edges_ton: s.edges_ton,
        cycles_per_day: s.cycles_per_day,
    }
}

pub fn analyze(cfg: &ToolkitConfig, log: &SimulationLog) -> Result<DamageReport> {
    sim::analyze(log, &rainflow_settings(cfg), &cfg.lifetime_params())
}

/// Scalar results of one simulated mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub mode: ControlMode,
    pub gamma_achieved: f64,
    pub rmse_kmh: f64,
    pub energy_loss_j: f64,
    pub peak_tj: f64,
    pub damage: f64,
    pub projected_cycles: Option<f64>,
    pub projected_years: Option<f64>,
}

pub struct ModeRun {
    pub synthesis: SynthesisOutcome,
    pub log: SimulationLog,
    pub report: DamageReport,
    pub summary: ModeSummary,
}

pub fn summarize(
    cfg: &ToolkitConfig,
    controller: &ControllerRealization,
    log: &SimulationLog,
    report: &DamageReport,
) -> Result<ModeSummary> {
    Ok(ModeSummary {
        mode: controller.mode_tag,
        gamma_achieved: controller.gamma_achieved,
        rmse_kmh: sim::tracking_rmse(log, &cfg.vehicle_params())?,
        energy_loss_j: log.energy_loss(),
        peak_tj: log.peak_tj(),
        damage: report.damage,
        projected_cycles: report.projection.cycles,
        projected_years: report.projection.years,
    })
}

pub fn run_mode(cfg: &ToolkitConfig, cycle: &DriveCycle, mode: ControlMode) -> Result<ModeRun> {
    let synthesis = synthesize_mode(cfg, mode)?;
    let log = simulate(cfg, cycle, &synthesis.controller)?;
    let report = analyze(cfg, &log)?;
    let summary = summarize(cfg, &synthesis.controller, &log, &report)?;
    Ok(ModeRun {
        synthesis,
        log,
        report,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub cycle: String,
    pub modes: Vec<ModeSummary>,
    /// `100·(1 − D_rel / D_perf)`.
    pub damage_reduction_percent: f64,
}

/// Runs both modes concurrently and compares them.
pub fn compare(cfg: &ToolkitConfig, cycle: &DriveCycle) -> Result<(Comparison, ModeRun, ModeRun)> {
    let (perf, rel) = std::thread::scope(|s| {
        let p = s.spawn(|| run_mode(cfg, cycle, ControlMode::PerformanceOriented));
        let r = s.spawn(|| run_mode(cfg, cycle, ControlMode::ReliabilityAware));
        (
            p.join().expect("performance run panicked"),
            r.join().expect("reliability run panicked"),
        )
    });
    let (perf, rel) = (perf?, rel?);
    let reduction = if perf.summary.damage > 0.0 {
        100.0 * (1.0 - rel.summary.damage / perf.summary.damage)
    } else {
        0.0
    };
    let cmp = Comparison {
        cycle: cycle.name.clone(),
        modes: vec![perf.summary.clone(), rel.summary.clone()],
        damage_reduction_percent: reduction,
    };
    Ok((cmp, perf, rel))
}
