//! Speed-vs-time drive cycles and the longitudinal vehicle model that turns
//! them into a motor speed reference and a shaft load torque.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard gravity (m/s²).
pub const GRAVITY: f64 = 9.81;
const KMH_PER_MPS: f64 = 3.6;

/// WLTC class 3b speed trace, one sample per second.
pub const WLTC_CLASS3B_CSV: &str = include_str!("../data/wltc_class3b.csv");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveCycle {
    pub name: String,
    /// Sample times (s), strictly increasing from 0.
    pub t: Vec<f64>,
    /// Vehicle speed (km/h), non-negative.
    pub v_kmh: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleParams {
    pub mass: f64,
    pub wheel_radius: f64,
    /// Motor revolutions per wheel revolution.
    pub gear_ratio: f64,
    pub c_rr: f64,
    /// Aerodynamic lump `ρ·C_d·A` (kg/m).
    pub rho_cd_a: f64,
    pub driveline_eff: f64,
    /// Include the `m·a` term in the load torque. Leave off when the vehicle
    /// mass is already reflected into the motor inertia.
    #[serde(default)]
    pub inertial_load: bool,
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mass", self.mass),
            ("wheel_radius", self.wheel_radius),
            ("gear_ratio", self.gear_ratio),
            ("c_rr", self.c_rr),
            ("rho_cd_a", self.rho_cd_a),
            ("driveline_eff", self.driveline_eff),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!(
                    "vehicle.{name} must be positive, got {v}"
                )));
            }
        }
        if self.driveline_eff > 1.0 {
            return Err(Error::invalid("vehicle.driveline_eff must be ≤ 1"));
        }
        Ok(())
    }

    /// Vehicle mass seen at the motor shaft (kg·m²).
    pub fn reflected_inertia(&self) -> f64 {
        self.mass * self.wheel_radius * self.wheel_radius / (self.gear_ratio * self.gear_ratio)
    }

    /// Motor speed (rad/s) to vehicle speed (km/h).
    pub fn motor_to_kmh(&self, omega: f64) -> f64 {
        omega * self.wheel_radius / self.gear_ratio * KMH_PER_MPS
    }

    pub fn kmh_to_motor(&self, v_kmh: f64) -> f64 {
        v_kmh / KMH_PER_MPS / self.wheel_radius * self.gear_ratio
    }
}

impl DriveCycle {
    pub fn new(name: impl Into<String>, t: Vec<f64>, v_kmh: Vec<f64>) -> Result<Self> {
        let rows: Vec<usize> = (1..=t.len()).collect();
        Self::with_rows(name.into(), t, v_kmh, &rows)
    }

    /// Validates samples; `rows` gives the source row of each sample for
    /// error messages.
    fn with_rows(name: String, t: Vec<f64>, v_kmh: Vec<f64>, rows: &[usize]) -> Result<Self> {
        if t.len() != v_kmh.len() {
            return Err(Error::Dimension(
                "time and speed columns differ in length".into(),
            ));
        }
        if t.len() < 2 {
            return Err(Error::invalid("a drive cycle needs at least two samples"));
        }
        for i in 0..t.len() {
            let (ti, vi, row) = (t[i], v_kmh[i], rows[i]);
            let fail = |msg: String| Err(Error::Parse { row, msg });
            if !ti.is_finite() || !vi.is_finite() {
                return fail("non-finite value".into());
            }
            if i == 0 && ti != 0.0 {
                return fail(format!("time must start at 0, got {ti}"));
            }
            if i > 0 && ti <= t[i - 1] {
                return fail(format!(
                    "time {ti} does not increase (previous {})",
                    t[i - 1]
                ));
            }
            if vi < 0.0 {
                return fail(format!("negative speed {vi}"));
            }
        }
        Ok(DriveCycle { name, t, v_kmh })
    }

    /// Bundled WLTC class 3b trace.
    pub fn wltc_class3b() -> Self {
        Self::from_reader("WLTC class 3b", WLTC_CLASS3B_CSV.as_bytes())
            .expect("bundled WLTC trace is valid")
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::from_reader(name, file)
    }

    /// Parses a two-column `time (s), speed (km/h)` table. A header row is
    /// detected by its first field not being numeric. Rows are numbered from
    /// 1 counting the header.
    pub fn from_reader(name: impl Into<String>, reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let (mut t, mut v, mut rows) = (Vec::new(), Vec::new(), Vec::new());
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = rec.position().map_or(i + 1, |p| p.line() as usize);
            if rec.len() != 2 {
                return Err(Error::Parse {
                    row,
                    msg: format!("expected 2 columns, found {}", rec.len()),
                });
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(a), Ok(b)) => {
                    t.push(a);
                    v.push(b);
                    rows.push(row);
                }
                _ if i == 0 => continue,
                _ => {
                    return Err(Error::Parse {
                        row,
                        msg: format!("cannot parse `{}`, `{}` as numbers", &rec[0], &rec[1]),
                    })
                }
            }
        }
        Self::with_rows(name.into(), t, v, &rows)
    }

    pub fn duration(&self) -> f64 {
        *self.t.last().expect("cycle has samples")
    }

    pub fn max_speed(&self) -> f64 {
        self.v_kmh.iter().copied().fold(0.0, f64::max)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t >= 0.0 && t <= self.duration() {
            Ok(())
        } else {
            Err(Error::OutOfRange(format!(
                "t = {t} s (cycle spans 0..{} s)",
                self.duration()
            )))
        }
    }

    /// Index `i` with `t[i] ≤ time < t[i+1]`, clamped to the last interval.
    fn segment(&self, time: f64) -> usize {
        let i = self.t.partition_point(|&x| x <= time);
        i.saturating_sub(1).min(self.t.len() - 2)
    }

    /// Linearly interpolated speed (km/h).
    pub fn speed_kmh(&self, time: f64) -> Result<f64> {
        self.check_time(time)?;
        let i = self.segment(time);
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let (v0, v1) = (self.v_kmh[i], self.v_kmh[i + 1]);
        if time == t0 {
            return Ok(v0);
        }
        Ok(v0 + (v1 - v0) * (time - t0) / (t1 - t0))
    }

    /// Acceleration (m/s²) at a sample: central difference inside, one-sided
    /// at the ends.
    fn sample_accel(&self, i: usize) -> f64 {
        let n = self.t.len();
        let (a, b) = match i {
            0 => (0, 1),
            _ if i == n - 1 => (n - 2, n - 1),
            _ => (i - 1, i + 1),
        };
        (self.v_kmh[b] - self.v_kmh[a]) / KMH_PER_MPS / (self.t[b] - self.t[a])
    }

    /// Acceleration (m/s²), linearly interpolated between the sample values.
    pub fn acceleration(&self, time: f64) -> Result<f64> {
        self.check_time(time)?;
        let i = self.segment(time);
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let (a0, a1) = (self.sample_accel(i), self.sample_accel(i + 1));
        Ok(a0 + (a1 - a0) * (time - t0) / (t1 - t0))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t_s,v_kmh\n");
        for (t, v) in self.t.iter().zip(&self.v_kmh) {
            s.push_str(&format!("{t},{v}\n"));
        }
        s
    }
}

/// Motor speed reference (rad/s).
pub fn motor_speed_reference(cycle: &DriveCycle, vp: &VehicleParams, t: f64) -> Result<f64> {
    Ok(vp.kmh_to_motor(cycle.speed_kmh(t)?))
}

/// Road-load wheel force (N) at speed `v` (m/s) and acceleration `a` (m/s²).
pub fn wheel_force(v: f64, a: f64, vp: &VehicleParams) -> f64 {
    let inertial = if vp.inertial_load { vp.mass * a } else { 0.0 };
    let rolling = if v > 0.0 {
        vp.c_rr * vp.mass * GRAVITY
    } else {
        0.0
    };
    inertial + rolling + 0.5 * vp.rho_cd_a * v * v
}

/// Shaft load torque (N·m).
pub fn load_torque(cycle: &DriveCycle, vp: &VehicleParams, t: f64) -> Result<f64> {
    let v = cycle.speed_kmh(t)? / KMH_PER_MPS;
    let a = cycle.acceleration(t)?;
    Ok(wheel_force(v, a, vp) * vp.wheel_radius / (vp.gear_ratio * vp.driveline_eff))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn vp() -> VehicleParams {
        VehicleParams {
            mass: 1500.0,
            wheel_radius: 0.3,
            gear_ratio: 10.0,
            c_rr: 0.01,
            rho_cd_a: 0.75,
            driveline_eff: 1.0,
            inertial_load: true,
        }
    }

    fn constant(v: f64) -> DriveCycle {
        DriveCycle::new("c", vec![0.0, 10.0, 20.0], vec![v, v, v]).unwrap()
    }

    #[test]
    fn bundled_wltc() {
        let c = DriveCycle::wltc_class3b();
        assert_eq!(c.t.len(), 1801);
        assert_eq!(c.duration(), 1800.0);
        let file_max = WLTC_CLASS3B_CSV
            .lines()
            .skip(1)
            .filter_map(|l| l.split(',').nth(1)?.parse::<f64>().ok())
            .fold(0.0, f64::max);
        assert_eq!(c.max_speed(), file_max);
        assert_eq!(c.max_speed(), 131.3);
    }

    #[test]
    fn two_row_interpolation() {
        let c = DriveCycle::from_reader("x", "0,0\n10,36\n".as_bytes()).unwrap();
        assert_relative_eq!(c.speed_kmh(5.0).unwrap(), 18.0);
    }

    #[test]
    fn backwards_time_names_row() {
        let err =
            DriveCycle::from_reader("x", "t_s,v_kmh\n0,0\n2,5\n1,6\n".as_bytes()).unwrap_err();
        match err {
            Error::Parse { row, .. } => assert_eq!(row, 4),
            other => panic!("{other}"),
        }
        let err = DriveCycle::from_reader("x", "0,0\n1,-5\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }));
        let err = DriveCycle::from_reader("x", "0,0\n1,abc\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }));
    }

    #[test]
    fn speed_reference_examples() {
        let c = constant(54.0);
        assert_relative_eq!(
            motor_speed_reference(&c, &vp(), 3.0).unwrap(),
            500.0,
            max_relative = 1e-12
        );
        assert_eq!(
            motor_speed_reference(&constant(0.0), &vp(), 3.0).unwrap(),
            0.0
        );
        let mut v2 = vp();
        v2.gear_ratio = 20.0;
        assert_relative_eq!(
            motor_speed_reference(&c, &v2, 3.0).unwrap(),
            1000.0,
            max_relative = 1e-12
        );
        assert!(motor_speed_reference(&c, &vp(), 21.0).is_err());
    }

    #[test]
    fn load_torque_examples() {
        assert_eq!(load_torque(&constant(0.0), &vp(), 5.0).unwrap(), 0.0);
        // F = 0.01·1500·9.81 + 0.5·0.75·15² = 147.15 + 84.375
        let tau = load_torque(&constant(54.0), &vp(), 5.0).unwrap();
        assert_relative_eq!(tau, 231.525 * 0.3 / 10.0, max_relative = 1e-12);
        assert!((tau - 6.946).abs() < 1e-3);
        let mut heavy = vp();
        heavy.mass *= 2.0;
        let tau2 = load_torque(&constant(54.0), &heavy, 5.0).unwrap();
        assert_relative_eq!(tau2 - tau, 147.15 * 0.3 / 10.0, max_relative = 1e-12);
    }

    #[test]
    fn inertial_term_follows_flag() {
        let c = DriveCycle::new("ramp", vec![0.0, 10.0], vec![0.0, 36.0]).unwrap();
        let with = load_torque(&c, &vp(), 5.0).unwrap();
        let without = load_torque(
            &c,
            &VehicleParams {
                inertial_load: false,
                ..vp()
            },
            5.0,
        )
        .unwrap();
        assert_relative_eq!(
            with - without,
            1500.0 * 1.0 * 0.3 / 10.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn interpolation_exact_at_samples() {
        let c = DriveCycle::wltc_class3b();
        for (i, &t) in c.t.iter().enumerate() {
            assert_eq!(c.speed_kmh(t).unwrap(), c.v_kmh[i]);
        }
    }

    #[test]
    fn traction_energy_nonnegative_over_wltc() {
        let c = DriveCycle::wltc_class3b();
        let v = vp();
        let mut energy = 0.0;
        let dt = 0.1;
        for k in 0..(c.duration() / dt) as usize {
            let t = k as f64 * dt;
            let p = load_torque(&c, &v, t).unwrap() * motor_speed_reference(&c, &v, t).unwrap();
            energy += p.max(0.0) * dt;
        }
        assert!(energy > 0.0);
    }

    proptest! {
        #[test]
        fn load_torque_continuous_inside_segments(t in 0.0..1799.0f64) {
            let c = DriveCycle::wltc_class3b();
            let h = 1e-7;
            let a = load_torque(&c, &vp(), t).unwrap();
            let b = load_torque(&c, &vp(), t + h).unwrap();
            // the rolling term switches on at standstill only
            if c.speed_kmh(t).unwrap() > 0.0 && c.speed_kmh(t + h).unwrap() > 0.0 {
                prop_assert!((a - b).abs() < 1e-3);
            }
        }
    }
}
