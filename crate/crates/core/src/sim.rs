//! Fixed-step closed-loop simulation of controller, decoupling, motor and
//! junction temperature, plus the post-processing that turns a log into a
//! damage estimate.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::drive_cycle::{self, DriveCycle, VehicleParams};
use crate::error::{Error, Result};
use crate::lti::StateSpaceModel;
use crate::motor::{self, MotorParams, MotorState, VoltagePair};
use crate::rainflow::{self, CycleHistogram};
use crate::synthesis::ControllerRealization;
use crate::thermal::{self, LifetimeParams, LifetimeProjection, LossParams, ThermalParams};

pub const LOG_SCHEMA_VERSION: u32 = 1;
const LOG_CSV_TAG: &str = "# relcon-simlog v";
const LOG_BIN_MAGIC: &[u8; 8] = b"RCSIMLOG";
/// Column names of the CSV log, in order.
pub const LOG_COLUMNS: [&str; 10] = [
    "t_s",
    "omega_ref",
    "omega_m",
    "i_d",
    "i_q",
    "u_d",
    "u_q",
    "tau_l",
    "p_loss",
    "t_j",
];
/// |ω_m| above which the run is declared diverged (rad/s).
const DIVERGENCE_SPEED: f64 = 1e6;

#[derive(Debug, Clone)]
pub struct Scenario<'a> {
    pub motor: MotorParams,
    pub vehicle: VehicleParams,
    pub cycle: &'a DriveCycle,
    pub controller: &'a ControllerRealization,
    pub thermal: ThermalParams,
    pub loss: LossParams,
    pub dt: f64,
    pub log_decimation: usize,
    /// Symmetric clamp on each stator voltage component (V).
    pub voltage_limit: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimulationLog {
    /// Spacing of the logged samples (s).
    pub dt_log: f64,
    pub t: Vec<f64>,
    pub omega_ref: Vec<f64>,
    pub omega_m: Vec<f64>,
    pub i_d: Vec<f64>,
    pub i_q: Vec<f64>,
    /// Stator voltages applied to the machine (V).
    pub u_d: Vec<f64>,
    pub u_q: Vec<f64>,
    pub tau_l: Vec<f64>,
    pub p_loss: Vec<f64>,
    pub t_j: Vec<f64>,
}

/// Discrete controller with flat row-major matrices for the inner loop.
struct DiscreteController {
    n: usize,
    m: usize,
    p: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
    x: Vec<f64>,
    x_next: Vec<f64>,
}

fn flat(m: &crate::linalg::Mat) -> Vec<f64> {
    let mut v = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            v.push(m[(r, c)]);
        }
    }
    v
}

impl DiscreteController {
    fn new(sys: &StateSpaceModel) -> Self {
        DiscreteController {
            n: sys.n_states(),
            m: sys.n_inputs(),
            p: sys.n_outputs(),
            a: flat(&sys.a),
            b: flat(&sys.b),
            c: flat(&sys.c),
            d: flat(&sys.d),
            x: vec![0.0; sys.n_states()],
            x_next: vec![0.0; sys.n_states()],
        }
    }

    /// Output for input `y` at the current state.
    fn output(&self, y: &[f64], u: &mut [f64]) {
        for (i, ui) in u.iter_mut().enumerate().take(self.p) {
            let cx: f64 = self.c[i * self.n..(i + 1) * self.n]
                .iter()
                .zip(&self.x)
                .map(|(a, b)| a * b)
                .sum();
            let dy: f64 = self.d[i * self.m..(i + 1) * self.m]
                .iter()
                .zip(y)
                .map(|(a, b)| a * b)
                .sum();
            *ui = cx + dy;
        }
    }

    fn advance(&mut self, y: &[f64]) {
        for (i, xn) in self.x_next.iter_mut().enumerate() {
            let ax: f64 = self.a[i * self.n..(i + 1) * self.n]
                .iter()
                .zip(&self.x)
                .map(|(a, b)| a * b)
                .sum();
            let by: f64 = self.b[i * self.m..(i + 1) * self.m]
                .iter()
                .zip(y)
                .map(|(a, b)| a * b)
                .sum();
            *xn = ax + by;
        }
        std::mem::swap(&mut self.x, &mut self.x_next);
    }
}

fn axpy(x: &MotorState, h: f64, k: &MotorState) -> MotorState {
    MotorState::new(
        x.i_d + h * k.i_d,
        x.i_q + h * k.i_q,
        x.omega_m + h * k.omega_m,
    )
}

/// Number of whole steps of size `dt` in `duration`, tolerant to the
/// rounding of `duration / dt`.
pub fn step_count(duration: f64, dt: f64) -> usize {
    let r = duration / dt;
    let n = r.round();
    if (r - n).abs() <= 1e-9 * n.max(1.0) {
        n as usize
    } else {
        r.floor() as usize
    }
}

pub fn run_closed_loop(sc: &Scenario) -> Result<SimulationLog> {
    sc.motor.validate()?;
    sc.vehicle.validate()?;
    sc.thermal.validate()?;
    sc.loss.validate()?;
    if !(sc.dt > 0.0 && sc.dt <= 0.01) {
        return Err(Error::invalid("simulation dt must lie in (0, 0.01] s"));
    }
    if sc.log_decimation < 1 {
        return Err(Error::invalid("log decimation must be ≥ 1"));
    }
    let k = &sc.controller.discrete;
    match k.dt() {
        Some(kdt) if (kdt - sc.dt).abs() <= 1e-12 * sc.dt => {}
        Some(kdt) => {
            return Err(Error::invalid(format!(
                "controller was discretized at dt = {kdt} s but the simulation runs at {} s",
                sc.dt
            )))
        }
        None => return Err(Error::invalid("controller has no discrete realization")),
    }
    if k.n_inputs() != 3 || k.n_outputs() != 2 {
        return Err(Error::Dimension(format!(
            "controller must map 3 measurements to 2 voltages, got {}×{}",
            k.n_outputs(),
            k.n_inputs()
        )));
    }

    let mut ctrl = DiscreteController::new(k);
    let n_steps = step_count(sc.cycle.duration(), sc.dt);
    let n_rows = n_steps / sc.log_decimation + 1;
    let mut log = SimulationLog {
        dt_log: sc.dt * sc.log_decimation as f64,
        ..Default::default()
    };
    for col in log.columns_mut() {
        col.reserve_exact(n_rows);
    }

    let mut x = MotorState::new(0.0, 0.0, 0.0);
    let mut t_j = sc.thermal.t_ambient;
    let mut u = [0.0; 2];
    let clamp = |v: f64| match sc.voltage_limit {
        Some(l) => v.clamp(-l, l),
        None => v,
    };
    let inputs = |t: f64| -> Result<(f64, f64)> {
        let t = t.min(sc.cycle.duration());
        Ok((
            drive_cycle::motor_speed_reference(sc.cycle, &sc.vehicle, t)?,
            drive_cycle::load_torque(sc.cycle, &sc.vehicle, t)?,
        ))
    };

    for step in 0..=n_steps {
        let t = step as f64 * sc.dt;
        let (w_ref, tau) = inputs(t)?;
        let y = [w_ref - x.omega_m, x.i_d, x.i_q];
        ctrl.output(&y, &mut u);
        let aux = VoltagePair::auxiliary(u[0], u[1]);
        let v = motor::stator_from_auxiliary(aux, &x, &sc.motor)?;
        let v = VoltagePair::stator(clamp(v.v_d), clamp(v.v_q));
        let p = thermal::conduction_loss(thermal::on_state_current(&x), &sc.loss)?;

        if step % sc.log_decimation == 0 {
            log.t.push(t);
            log.omega_ref.push(w_ref);
            log.omega_m.push(x.omega_m);
            log.i_d.push(x.i_d);
            log.i_q.push(x.i_q);
            log.u_d.push(v.v_d);
            log.u_q.push(v.v_q);
            log.tau_l.push(tau);
            log.p_loss.push(p);
            log.t_j.push(t_j);
        }
        if step == n_steps {
            break;
        }

        ctrl.advance(&y);
        let (_, tau_mid) = inputs(t + 0.5 * sc.dt)?;
        let (_, tau_end) = inputs(t + sc.dt)?;
        let h = sc.dt;
        let f = |s: &MotorState, tl: f64| motor::stator_state_derivative(s, v, tl, &sc.motor);
        let k1 = f(&x, tau)?;
        let k2 = f(&axpy(&x, 0.5 * h, &k1), tau_mid)?;
        let k3 = f(&axpy(&x, 0.5 * h, &k2), tau_mid)?;
        let k4 = f(&axpy(&x, h, &k3), tau_end)?;
        x = MotorState::new(
            x.i_d + h / 6.0 * (k1.i_d + 2.0 * k2.i_d + 2.0 * k3.i_d + k4.i_d),
            x.i_q + h / 6.0 * (k1.i_q + 2.0 * k2.i_q + 2.0 * k3.i_q + k4.i_q),
            x.omega_m + h / 6.0 * (k1.omega_m + 2.0 * k2.omega_m + 2.0 * k3.omega_m + k4.omega_m),
        );
        t_j = thermal::step_junction_temperature(t_j, p, h, &sc.thermal);
        if !x.is_finite() || !t_j.is_finite() || x.omega_m.abs() > DIVERGENCE_SPEED {
            return Err(Error::Diverged {
                step: step + 1,
                t: t + h,
            });
        }
    }
    Ok(log)
}

impl SimulationLog {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    fn columns(&self) -> [&Vec<f64>; 10] {
        [
            &self.t,
            &self.omega_ref,
            &self.omega_m,
            &self.i_d,
            &self.i_q,
            &self.u_d,
            &self.u_q,
            &self.tau_l,
            &self.p_loss,
            &self.t_j,
        ]
    }

    fn columns_mut(&mut self) -> [&mut Vec<f64>; 10] {
        [
            &mut self.t,
            &mut self.omega_ref,
            &mut self.omega_m,
            &mut self.i_d,
            &mut self.i_q,
            &mut self.u_d,
            &mut self.u_q,
            &mut self.tau_l,
            &mut self.p_loss,
            &mut self.t_j,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if self.columns().iter().any(|c| c.len() != n) {
            return Err(Error::Dimension("log columns differ in length".into()));
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{LOG_CSV_TAG}{LOG_SCHEMA_VERSION} dt_log={}\n", self.dt_log);
        s.push_str(&LOG_COLUMNS.join(","));
        s.push('\n');
        let cols = self.columns();
        for r in 0..self.len() {
            for (i, c) in cols.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                s.push_str(&c[r].to_string());
            }
            s.push('\n');
        }
        s
    }

    /// Reads a CSV log. Only the `t_s` and `t_j` columns are required;
    /// missing optional columns are left empty.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let first = lines.next().unwrap_or("");
        let version = first
            .strip_prefix(LOG_CSV_TAG)
            .and_then(|rest| rest.split_whitespace().next())
            .and_then(|v| v.parse::<u32>().ok())
            .ok_or(Error::Parse {
                row: 1,
                msg: "missing `# relcon-simlog v<N>` schema line".into(),
            })?;
        if version != LOG_SCHEMA_VERSION {
            return Err(Error::Parse {
                row: 1,
                msg: format!("log schema v{version} is not supported"),
            });
        }
        let body_start = first.len() + 1;
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.get(body_start..).unwrap_or("").as_bytes());
        let headers = rdr.headers()?.clone();
        let find = |name: &str| headers.iter().position(|h| h == name);
        let idx: Vec<Option<usize>> = LOG_COLUMNS.iter().map(|c| find(c)).collect();
        for required in ["t_s", "t_j"] {
            if find(required).is_none() {
                return Err(Error::Parse {
                    row: 2,
                    msg: format!("log lacks required column `{required}`"),
                });
            }
        }
        let mut log = SimulationLog::default();
        for rec in rdr.records() {
            let rec = rec?;
            let row = rec.position().map_or(0, |p| p.line() as usize) + 1;
            for (col, i) in log.columns_mut().into_iter().zip(&idx) {
                if let Some(i) = *i {
                    let field = rec.get(i).ok_or_else(|| Error::Parse {
                        row,
                        msg: "short row".into(),
                    })?;
                    col.push(field.parse::<f64>().map_err(|_| Error::Parse {
                        row,
                        msg: format!("cannot parse `{field}`"),
                    })?);
                }
            }
        }
        let n = log.t.len();
        for col in log.columns_mut() {
            if col.is_empty() && n > 0 {
                col.resize(n, f64::NAN);
            }
        }
        log.dt_log = first
            .split_whitespace()
            .find_map(|w| w.strip_prefix("dt_log="))
            .and_then(|v| v.parse().ok())
            .unwrap_or_else(|| if n > 1 { log.t[1] - log.t[0] } else { 0.0 });
        log.validate()?;
        Ok(log)
    }

    /// Compact binary form: magic, schema version (u32), row count (u64),
    /// `dt_log` (f64), then each column as little-endian f64.
    pub fn write_binary(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(LOG_BIN_MAGIC)?;
        w.write_all(&LOG_SCHEMA_VERSION.to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        w.write_all(&self.dt_log.to_le_bytes())?;
        for col in self.columns() {
            for v in col {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary(mut r: impl Read) -> Result<Self> {
        let bad = |msg: &str| Error::Parse {
            row: 0,
            msg: msg.to_string(),
        };
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)
            .map_err(|_| bad("truncated header"))?;
        if &magic != LOG_BIN_MAGIC {
            return Err(bad("not a binary simulation log"));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4).map_err(|_| bad("truncated header"))?;
        let version = u32::from_le_bytes(b4);
        if version != LOG_SCHEMA_VERSION {
            return Err(bad(&format!("log schema v{version} is not supported")));
        }
        r.read_exact(&mut b8).map_err(|_| bad("truncated header"))?;
        let n = usize::try_from(u64::from_le_bytes(b8)).map_err(|_| bad("row count too large"))?;
        r.read_exact(&mut b8).map_err(|_| bad("truncated header"))?;
        let mut log = SimulationLog {
            dt_log: f64::from_le_bytes(b8),
            ..Default::default()
        };
        for col in log.columns_mut() {
            col.reserve_exact(n);
            for _ in 0..n {
                r.read_exact(&mut b8)
                    .map_err(|_| bad("truncated column data"))?;
                col.push(f64::from_le_bytes(b8));
            }
        }
        Ok(log)
    }

    /// Loads either form, detected from the leading bytes.
    pub fn from_path(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.starts_with(LOG_BIN_MAGIC) {
            Self::read_binary(bytes.as_slice())
        } else {
            let text = String::from_utf8(bytes).map_err(|_| Error::Parse {
                row: 0,
                msg: "log is neither UTF-8 CSV nor binary".into(),
            })?;
            Self::from_csv(&text)
        }
    }

    pub fn peak_tj(&self) -> f64 {
        self.t_j.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Conduction energy `Σ P·Δt` over the logged samples (J).
    pub fn energy_loss(&self) -> f64 {
        self.p_loss.iter().sum::<f64>() * self.dt_log
    }
}

/// RMS speed tracking error expressed as vehicle speed (km/h).
pub fn tracking_rmse(log: &SimulationLog, vp: &VehicleParams) -> Result<f64> {
    if log.is_empty() {
        return Err(Error::invalid("empty log"));
    }
    let ss: f64 = log
        .omega_ref
        .iter()
        .zip(&log.omega_m)
        .map(|(r, m)| {
            let e = vp.motor_to_kmh(r - m);
            e * e
        })
        .sum();
    Ok((ss / log.len() as f64).sqrt())
}

/// Rainflow settings used by [`analyze`].
#[derive(Debug, Clone, PartialEq)]
pub struct RainflowSettings {
    pub hysteresis: f64,
    pub edges_dt: Vec<f64>,
    pub edges_ton: Vec<f64>,
    pub cycles_per_day: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DamageReport {
    /// Miner damage accrued over the analyzed log.
    pub damage: f64,
    /// Number of counted cycles (half cycles count 0.5).
    pub cycle_count: f64,
    pub projection: LifetimeProjection,
    pub cycles_per_day: f64,
    pub histogram: CycleHistogram,
}

pub fn analyze(
    log: &SimulationLog,
    rf: &RainflowSettings,
    lp: &LifetimeParams,
) -> Result<DamageReport> {
    lp.validate()?;
    if log.t_j.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("log has non-finite junction temperatures"));
    }
    let tps = rainflow::extract_turning_points(&log.t, &log.t_j, rf.hysteresis)?;
    let cycles = rainflow::rainflow_count(&tps);
    let histogram = rainflow::bin_cycles(&cycles, &rf.edges_dt, &rf.edges_ton)?;
    let bins = rainflow::damage_bins(&cycles);
    let damage = thermal::miner_damage(&bins, lp)?;
    Ok(DamageReport {
        damage,
        cycle_count: bins.iter().map(|b| b.count).sum(),
        projection: thermal::lifetime_projection(damage, rf.cycles_per_day)?,
        cycles_per_day: rf.cycles_per_day,
        histogram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ToolkitConfig;
    use crate::linalg::Mat;
    use crate::synthesis::ControlMode;

    fn zero_controller(dt: f64) -> ControllerRealization {
        ControllerRealization::zero(2, 3, ControlMode::PerformanceOriented, dt).unwrap()
    }

    fn scenario<'a>(cycle: &'a DriveCycle, k: &'a ControllerRealization) -> Scenario<'a> {
        let cfg = ToolkitConfig::default();
        Scenario {
            motor: cfg.motor_params(),
            vehicle: cfg.vehicle_params(),
            cycle,
            controller: k,
            thermal: cfg.thermal_params(),
            loss: cfg.loss_params(),
            dt: 1e-3,
            log_decimation: 10,
            voltage_limit: None,
        }
    }

    #[test]
    fn standstill_stays_at_rest() {
        let cycle = DriveCycle::new("rest", vec![0.0, 5.0], vec![0.0, 0.0]).unwrap();
        let k = zero_controller(1e-3);
        let sc = scenario(&cycle, &k);
        let log = run_closed_loop(&sc).unwrap();
        assert_eq!(log.len(), 501);
        for col in [
            &log.omega_m,
            &log.i_d,
            &log.i_q,
            &log.u_d,
            &log.u_q,
            &log.p_loss,
        ] {
            assert!(col.iter().all(|&v| v == 0.0));
        }
        assert!(log.t_j.iter().all(|&v| v == sc.thermal.t_ambient));
    }

    #[test]
    fn row_count_formula() {
        let cycle = DriveCycle::new("r", vec![0.0, 2.345], vec![0.0, 0.0]).unwrap();
        let k = zero_controller(1e-3);
        let mut sc = scenario(&cycle, &k);
        sc.log_decimation = 7;
        let log = run_closed_loop(&sc).unwrap();
        assert_eq!(log.len(), (2.345f64 / (1e-3 * 7.0)).floor() as usize + 1);
    }

    #[test]
    fn dt_mismatch_rejected() {
        let cycle = DriveCycle::new("r", vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
        let k = zero_controller(2e-3);
        assert!(run_closed_loop(&scenario(&cycle, &k)).is_err());
    }

    #[test]
    fn unstable_feedback_diverges_with_step_index() {
        let cycle = DriveCycle::new("r", vec![0.0, 10.0], vec![10.0, 10.0]).unwrap();
        // positive current feedback through a large static gain
        let d = Mat::from_row_slice(2, 3, &[0.0, 1e3, 0.0, 0.0, 0.0, 1e3]);
        let k = ControllerRealization::new(
            StateSpaceModel::static_gain(d),
            0.0,
            ControlMode::PerformanceOriented,
            1e-3,
        )
        .unwrap();
        match run_closed_loop(&scenario(&cycle, &k)) {
            Err(Error::Diverged { step, .. }) => assert!(step > 0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_and_binary_round_trip() {
        let log = SimulationLog {
            dt_log: 0.01,
            t: vec![0.0, 0.01],
            omega_ref: vec![1.0, 2.0],
            omega_m: vec![0.5, 1.0 / 3.0],
            i_d: vec![0.0, -1e-300],
            i_q: vec![3.0, 4.0],
            u_d: vec![0.1, 0.2],
            u_q: vec![5.0, 6.0],
            tau_l: vec![7.0, 8.0],
            p_loss: vec![9.0, 10.0],
            t_j: vec![40.0, 40.5],
        };
        assert_eq!(SimulationLog::from_csv(&log.to_csv()).unwrap(), log);
        let mut buf = Vec::new();
        log.write_binary(&mut buf).unwrap();
        assert_eq!(SimulationLog::read_binary(buf.as_slice()).unwrap(), log);
    }

    #[test]
    fn missing_tj_column_rejected() {
        let text = "# relcon-simlog v1\nt_s,omega_m\n0,1\n";
        assert!(SimulationLog::from_csv(text).is_err());
        let text = "t_s,t_j\n0,1\n";
        assert!(SimulationLog::from_csv(text).is_err());
    }

    #[test]
    fn rmse_unit_conversion() {
        let vp = ToolkitConfig::default().vehicle_params();
        let log = SimulationLog {
            t: vec![0.0, 1.0],
            omega_ref: vec![11.0, 21.0],
            omega_m: vec![10.0, 20.0],
            ..Default::default()
        };
        assert!((tracking_rmse(&log, &vp).unwrap() - 0.108).abs() < 1e-12);
        let perfect = SimulationLog {
            t: vec![0.0],
            omega_ref: vec![5.0],
            omega_m: vec![5.0],
            ..Default::default()
        };
        assert_eq!(tracking_rmse(&perfect, &vp).unwrap(), 0.0);
        assert!(tracking_rmse(&SimulationLog::default(), &vp).is_err());
    }

    fn rf() -> RainflowSettings {
        let s = ToolkitConfig::default().sim_settings();
        RainflowSettings {
            hysteresis: s.hysteresis,
            edges_dt: s.edges_dt,
            edges_ton: s.edges_ton,
            cycles_per_day: s.cycles_per_day,
        }
    }

    #[test]
    fn constant_temperature_has_no_damage() {
        let log = SimulationLog {
            t: (0..100).map(f64::from).collect(),
            t_j: vec![55.0; 100],
            ..Default::default()
        };
        let lp = ToolkitConfig::default().lifetime_params();
        let r = analyze(&log, &rf(), &lp).unwrap();
        assert_eq!(r.damage, 0.0);
        assert_eq!(r.projection.cycles, None);
    }

    #[test]
    fn square_wave_damage_closed_form() {
        let dt = 0.1;
        let n = 100 * 100;
        let t: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
        let t_j: Vec<f64> = (0..=n)
            .map(|k| if (k / 50) % 2 == 0 { 70.0 } else { 30.0 })
            .collect();
        let log = SimulationLog {
            t,
            t_j,
            ..Default::default()
        };
        let lp = ToolkitConfig::default().lifetime_params();
        let r = analyze(&log, &rf(), &lp).unwrap();
        let expect = 100.0 / thermal::cycles_to_failure(40.0, 50.0, 5.0, &lp).unwrap();
        assert!(
            (r.damage - expect).abs() <= 1e-3 * expect,
            "{} vs {}",
            r.damage,
            expect
        );
        let full_bin = 20 * r.histogram.n_ton()
            + crate::rainflow::log_edges(0.1, 100.0, 12).partition_point(|&e| e <= 5.0)
            - 1;
        assert!(r.histogram.counts[full_bin] >= 99.0);
    }
}
