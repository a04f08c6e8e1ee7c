//! Linear time-invariant state-space models.

use std::collections::HashSet;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, Mat};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeDomain {
    Continuous,
    Discrete { dt: f64 },
}

/// `(A, B, C, D)` realization with labelled channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateSpaceJson", into = "StateSpaceJson")]
pub struct StateSpaceModel {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub d: Mat,
    pub time_domain: TimeDomain,
    pub input_labels: Vec<String>,
    pub output_labels: Vec<String>,
}

fn default_labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

impl StateSpaceModel {
    pub fn new(
        a: Mat,
        b: Mat,
        c: Mat,
        d: Mat,
        time_domain: TimeDomain,
        input_labels: Vec<String>,
        output_labels: Vec<String>,
    ) -> Result<Self> {
        let sys = StateSpaceModel {
            a,
            b,
            c,
            d,
            time_domain,
            input_labels,
            output_labels,
        };
        sys.validate()?;
        Ok(sys)
    }

    /// Continuous model with generated labels `u0.., y0..`.
    pub fn continuous(a: Mat, b: Mat, c: Mat, d: Mat) -> Result<Self> {
        let (m, p) = (b.ncols(), c.nrows());
        Self::new(
            a,
            b,
            c,
            d,
            TimeDomain::Continuous,
            default_labels("u", m),
            default_labels("y", p),
        )
    }

    /// Memoryless gain `y = D u`.
    pub fn static_gain(d: Mat) -> Self {
        let (p, m) = d.shape();
        StateSpaceModel {
            a: Mat::zeros(0, 0),
            b: Mat::zeros(0, m),
            c: Mat::zeros(p, 0),
            d,
            time_domain: TimeDomain::Continuous,
            input_labels: default_labels("u", m),
            output_labels: default_labels("y", p),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.a.nrows();
        if self.a.ncols() != n {
            return Err(Error::Dimension("A must be square".into()));
        }
        let m = self.b.ncols();
        let p = self.c.nrows();
        if self.b.nrows() != n || self.c.ncols() != n || self.d.shape() != (p, m) {
            return Err(Error::Dimension(format!(
                "inconsistent realization: A {n}×{n}, B {}×{}, C {}×{}, D {}×{}",
                self.b.nrows(),
                self.b.ncols(),
                self.c.nrows(),
                self.c.ncols(),
                self.d.nrows(),
                self.d.ncols()
            )));
        }
        if self.input_labels.len() != m || self.output_labels.len() != p {
            return Err(Error::Dimension(
                "label count does not match channels".into(),
            ));
        }
        for labels in [&self.input_labels, &self.output_labels] {
            let unique: HashSet<&String> = labels.iter().collect();
            if unique.len() != labels.len() {
                return Err(Error::invalid("channel labels must be unique"));
            }
        }
        if let TimeDomain::Discrete { dt } = self.time_domain {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::invalid("discrete dt must be positive"));
            }
        }
        if [&self.a, &self.b, &self.c, &self.d]
            .iter()
            .any(|m| m.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::NonFinite("state-space matrices".into()));
        }
        Ok(())
    }

    pub fn with_labels(mut self, inputs: &[&str], outputs: &[&str]) -> Result<Self> {
        self.input_labels = inputs.iter().map(|s| s.to_string()).collect();
        self.output_labels = outputs.iter().map(|s| s.to_string()).collect();
        self.validate()?;
        Ok(self)
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }
    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }
    pub fn is_continuous(&self) -> bool {
        matches!(self.time_domain, TimeDomain::Continuous)
    }
    pub fn dt(&self) -> Option<f64> {
        match self.time_domain {
            TimeDomain::Discrete { dt } => Some(dt),
            TimeDomain::Continuous => None,
        }
    }

    /// Transfer matrix evaluated at complex frequency `s` (or `z` when discrete).
    pub fn evaluate(&self, s: Complex64) -> Result<CMat> {
        let n = self.n_states();
        let d = linalg::to_complex(&self.d);
        if n == 0 {
            return Ok(d);
        }
        let eye: CMat = DMatrix::identity(n, n);
        let m = eye * s - linalg::to_complex(&self.a);
        let x = m
            .lu()
            .solve(&linalg::to_complex(&self.b))
            .ok_or(Error::Singular("resolvent (sI - A)"))?;
        Ok(linalg::to_complex(&self.c) * x + d)
    }

    /// Frequency response at angular frequency `w` (rad/s).
    pub fn freq_response(&self, w: f64) -> Result<CMat> {
        let s = match self.time_domain {
            TimeDomain::Continuous => Complex64::new(0.0, w),
            TimeDomain::Discrete { dt } => Complex64::from_polar(1.0, w * dt),
        };
        self.evaluate(s)
    }

    pub fn sigma_max(&self, w: f64) -> Result<f64> {
        Ok(linalg::max_singular_value_c(&self.freq_response(w)?))
    }

    /// Steady-state gain `D − C A⁻¹ B` (continuous) or `D + C (I − A)⁻¹ B`.
    pub fn dc_gain(&self) -> Result<Mat> {
        let n = self.n_states();
        if n == 0 {
            return Ok(self.d.clone());
        }
        let m = match self.time_domain {
            TimeDomain::Continuous => -self.a.clone(),
            TimeDomain::Discrete { .. } => Mat::identity(n, n) - &self.a,
        };
        Ok(&self.d + &self.c * linalg::solve(&m, &self.b, "DC gain")?)
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        linalg::eigenvalues(&self.a)
    }

    /// Largest real part of the poles (continuous) or largest pole modulus
    /// minus one (discrete), so that `< 0` means asymptotically stable in
    /// both cases.
    pub fn stability_margin(&self) -> Result<f64> {
        match self.time_domain {
            TimeDomain::Continuous => linalg::spectral_abscissa(&self.a),
            TimeDomain::Discrete { .. } => {
                if self.n_states() == 0 {
                    Ok(f64::NEG_INFINITY)
                } else {
                    Ok(linalg::spectral_radius(&self.a)? - 1.0)
                }
            }
        }
    }

    pub fn is_stable(&self) -> Result<bool> {
        Ok(self.stability_margin()? < 0.0)
    }

    /// Bilinear (Tustin) transform at sample time `dt`. DC gain is preserved.
    pub fn discretize(&self, dt: f64) -> Result<StateSpaceModel> {
        if !self.is_continuous() {
            return Err(Error::invalid("discretize expects a continuous model"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt must be positive"));
        }
        let n = self.n_states();
        let eye = Mat::identity(n, n);
        let half = &self.a * (dt / 2.0);
        let m = &eye - &half;
        let mi = linalg::inverse(&m, "I - A dt/2 (Tustin)")?;
        let ad = &mi * (&eye + &half);
        let bd = &mi * &self.b * dt;
        let cd = &self.c * &mi;
        let dd = &self.d + &self.c * &mi * &self.b * (dt / 2.0);
        StateSpaceModel::new(
            ad,
            bd,
            cd,
            dd,
            TimeDomain::Discrete { dt },
            self.input_labels.clone(),
            self.output_labels.clone(),
        )
    }

    /// Sub-system from selected inputs to selected outputs.
    pub fn select(&self, inputs: &[usize], outputs: &[usize]) -> StateSpaceModel {
        let n = self.n_states();
        let b = Mat::from_fn(n, inputs.len(), |r, c| self.b[(r, inputs[c])]);
        let c = Mat::from_fn(outputs.len(), n, |r, c| self.c[(outputs[r], c)]);
        let d = Mat::from_fn(outputs.len(), inputs.len(), |r, c| {
            self.d[(outputs[r], inputs[c])]
        });
        StateSpaceModel {
            a: self.a.clone(),
            b,
            c,
            d,
            time_domain: self.time_domain,
            input_labels: inputs
                .iter()
                .map(|&i| self.input_labels[i].clone())
                .collect(),
            output_labels: outputs
                .iter()
                .map(|&i| self.output_labels[i].clone())
                .collect(),
        }
    }

    pub fn input_index(&self, label: &str) -> Option<usize> {
        self.input_labels.iter().position(|l| l == label)
    }

    pub fn output_index(&self, label: &str) -> Option<usize> {
        self.output_labels.iter().position(|l| l == label)
    }
}

/// Row-major matrix as stored on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&Mat> for MatrixJson {
    fn from(m: &Mat) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                data.push(m[(r, c)]);
            }
        }
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

impl TryFrom<MatrixJson> for Mat {
    type Error = Error;
    fn try_from(j: MatrixJson) -> Result<Mat> {
        if j.data.len() != j.rows * j.cols {
            return Err(Error::Dimension(format!(
                "matrix {}×{} needs {} entries, got {}",
                j.rows,
                j.cols,
                j.rows * j.cols,
                j.data.len()
            )));
        }
        Ok(Mat::from_row_slice(j.rows, j.cols, &j.data))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateSpaceJson {
    a: MatrixJson,
    b: MatrixJson,
    c: MatrixJson,
    d: MatrixJson,
    time_domain: TimeDomain,
    input_labels: Vec<String>,
    output_labels: Vec<String>,
}

impl From<StateSpaceModel> for StateSpaceJson {
    fn from(s: StateSpaceModel) -> Self {
        StateSpaceJson {
            a: (&s.a).into(),
            b: (&s.b).into(),
            c: (&s.c).into(),
            d: (&s.d).into(),
            time_domain: s.time_domain,
            input_labels: s.input_labels,
            output_labels: s.output_labels,
        }
    }
}

impl TryFrom<StateSpaceJson> for StateSpaceModel {
    type Error = Error;
    fn try_from(j: StateSpaceJson) -> Result<Self> {
        StateSpaceModel::new(
            j.a.try_into()?,
            j.b.try_into()?,
            j.c.try_into()?,
            j.d.try_into()?,
            j.time_domain,
            j.input_labels,
            j.output_labels,
        )
    }
}
