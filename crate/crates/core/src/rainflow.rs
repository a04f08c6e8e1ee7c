//! Rainflow cycle counting of a temperature history and 2-D binning of the
//! cycles by swing and duration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thermal::ThermalCycleBin;

pub const HISTOGRAM_SCHEMA_VERSION: u32 = 1;
const HISTOGRAM_CSV_TAG: &str = "# relcon-histogram v";
pub const HISTOGRAM_COLUMNS: [&str; 6] = ["dT_lo", "dT_hi", "ton_lo", "ton_hi", "mean_Tj", "count"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurningPoint {
    pub t: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RainflowCycle {
    pub range: f64,
    pub mean: f64,
    /// 1.0 for a closed cycle, 0.5 for a residual half cycle.
    pub count: f64,
    pub t_start: f64,
    pub t_end: f64,
}

impl RainflowCycle {
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
}

/// Reversal points of `values` sampled at `times`. Reversals smaller than
/// `hysteresis` are dropped; the first and last samples are always kept.
pub fn extract_turning_points(
    times: &[f64],
    values: &[f64],
    hysteresis: f64,
) -> Result<Vec<TurningPoint>> {
    if times.len() != values.len() {
        return Err(Error::Dimension(
            "time and value series differ in length".into(),
        ));
    }
    if times.len() < 2 {
        return Err(Error::invalid(
            "turning-point extraction needs at least two samples",
        ));
    }
    if !(hysteresis >= 0.0) {
        return Err(Error::invalid("hysteresis must be ≥ 0"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("time must be strictly increasing"));
    }
    let n = times.len();
    let tp = |i: usize| TurningPoint {
        t: times[i],
        value: values[i],
    };
    let mut out = vec![tp(0)];
    // running extremum in the current direction, not yet confirmed by a
    // reversal larger than the hysteresis band
    let mut cand = 0usize;
    let mut dir = 0i8;
    for (i, &v) in values.iter().enumerate().skip(1) {
        let c = values[cand];
        match dir {
            0 => {
                if v - c > hysteresis && v > c {
                    dir = 1;
                    cand = i;
                } else if c - v > hysteresis && v < c {
                    dir = -1;
                    cand = i;
                }
            }
            1 if v > c => cand = i,
            1 if c - v > hysteresis && v < c => {
                out.push(tp(cand));
                dir = -1;
                cand = i;
            }
            -1 if v < c => cand = i,
            -1 if v - c > hysteresis && v > c => {
                out.push(tp(cand));
                dir = 1;
                cand = i;
            }
            _ => {}
        }
    }
    if dir != 0 && cand != n - 1 && values[cand] != values[n - 1] {
        out.push(tp(cand));
    }
    out.push(tp(n - 1));
    Ok(out)
}

fn cycle(a: TurningPoint, b: TurningPoint, count: f64) -> RainflowCycle {
    RainflowCycle {
        range: (a.value - b.value).abs(),
        mean: 0.5 * (a.value + b.value),
        count,
        t_start: a.t,
        t_end: b.t,
    }
}

/// Three-point rainflow counting with residual half cycles. Cycles are
/// emitted in the order they are identified; residual half cycles follow in
/// time order.
pub fn rainflow_count(tps: &[TurningPoint]) -> Vec<RainflowCycle> {
    let mut out = Vec::new();
    let mut stack: Vec<TurningPoint> = Vec::with_capacity(tps.len());
    for &p in tps {
        stack.push(p);
        while stack.len() >= 3 {
            let k = stack.len();
            let x = (stack[k - 1].value - stack[k - 2].value).abs();
            let y = (stack[k - 2].value - stack[k - 3].value).abs();
            if x < y || (k == 3 && x == y) {
                break;
            }
            if k == 3 {
                // Y contains the starting point: half cycle, drop the start.
                // Ties wait for the next point so equal-range cycles close.
                out.push(cycle(stack[0], stack[1], 0.5));
                stack.remove(0);
            } else {
                out.push(cycle(stack[k - 3], stack[k - 2], 1.0));
                let last = stack[k - 1];
                stack.truncate(k - 3);
                stack.push(last);
            }
        }
    }
    for w in stack.windows(2) {
        if w[0].value != w[1].value {
            out.push(cycle(w[0], w[1], 0.5));
        }
    }
    out
}

/// Histogram of cycles over temperature swing and duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleHistogram {
    pub edges_dt: Vec<f64>,
    pub edges_ton: Vec<f64>,
    /// Row-major `[dT bin][t_on bin]` counts.
    pub counts: Vec<f64>,
    /// Count-weighted mean of cycle mean temperatures per bin (°C); NaN when empty.
    pub mean_tj: Vec<f64>,
}

impl CycleHistogram {
    pub fn n_dt(&self) -> usize {
        self.edges_dt.len() - 1
    }

    pub fn n_ton(&self) -> usize {
        self.edges_ton.len() - 1
    }

    pub fn total_count(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// Plot-ready table, one row per bin, after a schema line.
    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "{HISTOGRAM_CSV_TAG}{HISTOGRAM_SCHEMA_VERSION}\n{}\n",
            HISTOGRAM_COLUMNS.join(",")
        );
        for i in 0..self.n_dt() {
            for j in 0..self.n_ton() {
                let k = i * self.n_ton() + j;
                s.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    self.edges_dt[i],
                    self.edges_dt[i + 1],
                    self.edges_ton[j],
                    self.edges_ton[j + 1],
                    self.mean_tj[k],
                    self.counts[k]
                ));
            }
        }
        s
    }

    /// Parses the output of [`CycleHistogram::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let version = lines
            .next()
            .and_then(|(_, l)| l.strip_prefix(HISTOGRAM_CSV_TAG))
            .and_then(|v| v.trim().parse::<u32>().ok())
            .ok_or(Error::Parse {
                row: 1,
                msg: "missing `# relcon-histogram v<N>` schema line".into(),
            })?;
        if version != HISTOGRAM_SCHEMA_VERSION {
            return Err(Error::Parse {
                row: 1,
                msg: format!("histogram schema v{version} is not supported"),
            });
        }
        match lines.next() {
            Some((_, h)) if h.split(',').eq(HISTOGRAM_COLUMNS) => {}
            _ => {
                return Err(Error::Parse {
                    row: 2,
                    msg: format!("expected header `{}`", HISTOGRAM_COLUMNS.join(",")),
                })
            }
        }
        let mut rows = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse {
                    row: i + 1,
                    msg: e.to_string(),
                })?;
            if vals.len() != HISTOGRAM_COLUMNS.len() {
                return Err(Error::Parse {
                    row: i + 1,
                    msg: format!(
                        "expected {} fields, got {}",
                        HISTOGRAM_COLUMNS.len(),
                        vals.len()
                    ),
                });
            }
            rows.push(vals);
        }
        let mut edges_ton: Vec<f64> = Vec::new();
        for r in rows.iter().take_while(|r| r[0] == rows[0][0]) {
            edges_ton.push(r[2]);
        }
        let n_ton = edges_ton.len();
        if n_ton == 0 || rows.len() % n_ton != 0 {
            return Err(Error::Parse {
                row: 3,
                msg: "bin rows do not form a complete grid".into(),
            });
        }
        edges_ton.push(rows[n_ton - 1][3]);
        let mut edges_dt: Vec<f64> = rows.iter().step_by(n_ton).map(|r| r[0]).collect();
        edges_dt.push(rows[rows.len() - 1][1]);
        for (k, r) in rows.iter().enumerate() {
            let (i, j) = (k / n_ton, k % n_ton);
            if r[0] != edges_dt[i]
                || r[1] != edges_dt[i + 1]
                || r[2] != edges_ton[j]
                || r[3] != edges_ton[j + 1]
            {
                return Err(Error::Parse {
                    row: k + 3,
                    msg: "bin edges are inconsistent with the grid".into(),
                });
            }
        }
        Ok(CycleHistogram {
            edges_dt,
            edges_ton,
            mean_tj: rows.iter().map(|r| r[4]).collect(),
            counts: rows.iter().map(|r| r[5]).collect(),
        })
    }
}

/// One damage-model entry per counted cycle, keeping each cycle's exact
/// swing, mean and duration.
pub fn damage_bins(cycles: &[RainflowCycle]) -> Vec<ThermalCycleBin> {
    cycles
        .iter()
        .filter(|c| c.range > 0.0)
        .map(|c| ThermalCycleBin {
            delta_t: c.range,
            mean_tj: c.mean,
            t_on: c.duration(),
            count: c.count,
        })
        .collect()
}

fn check_edges(edges: &[f64], name: &str) -> Result<()> {
    if edges.len() < 2 {
        return Err(Error::invalid(format!("{name} needs at least two edges")));
    }
    if edges.windows(2).any(|w| !(w[1] > w[0])) || edges.iter().any(|e| !e.is_finite()) {
        return Err(Error::invalid(format!(
            "{name} must be finite and strictly increasing"
        )));
    }
    Ok(())
}

/// Bin index under half-open `[lo, hi)` bins, clamping out-of-range values
/// to the edge bins.
fn bin_index(edges: &[f64], x: f64) -> usize {
    let nb = edges.len() - 1;
    edges
        .partition_point(|&e| e <= x)
        .saturating_sub(1)
        .min(nb - 1)
}

pub fn bin_cycles(
    cycles: &[RainflowCycle],
    edges_dt: &[f64],
    edges_ton: &[f64],
) -> Result<CycleHistogram> {
    check_edges(edges_dt, "ΔT edges")?;
    check_edges(edges_ton, "t_on edges")?;
    let (nd, nt) = (edges_dt.len() - 1, edges_ton.len() - 1);
    let mut counts = vec![0.0; nd * nt];
    let mut weighted = vec![0.0; nd * nt];
    for c in cycles {
        let k = bin_index(edges_dt, c.range) * nt + bin_index(edges_ton, c.duration());
        counts[k] += c.count;
        weighted[k] += c.count * c.mean;
    }
    let mean_tj = counts
        .iter()
        .zip(&weighted)
        .map(|(&n, &w)| if n > 0.0 { w / n } else { f64::NAN })
        .collect();
    Ok(CycleHistogram {
        edges_dt: edges_dt.to_vec(),
        edges_ton: edges_ton.to_vec(),
        counts,
        mean_tj,
    })
}

/// Evenly spaced edges `0, step, …, max`.
pub fn linear_edges(step: f64, max: f64) -> Vec<f64> {
    let n = (max / step).round() as usize;
    (0..=n).map(|k| k as f64 * step).collect()
}

/// `count + 1` log-spaced edges from `lo` to `hi`.
pub fn log_edges(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..=count)
        .map(|k| {
            if k == 0 {
                lo
            } else if k == count {
                hi
            } else {
                (a + (b - a) * k as f64 / count as f64).exp()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tps(values: &[f64]) -> Vec<TurningPoint> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| TurningPoint {
                t: i as f64,
                value: v,
            })
            .collect()
    }

    /// Brute-force reference: repeatedly scan the whole sequence for the
    /// first inner pair whose range is not larger than both neighbours.
    fn reference_count(values: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut v = values.to_vec();
        let mut full = Vec::new();
        loop {
            let mut found = None;
            for i in 1..v.len().saturating_sub(2) {
                let r = (v[i + 1] - v[i]).abs();
                if r <= (v[i] - v[i - 1]).abs() && r <= (v[i + 2] - v[i + 1]).abs() {
                    found = Some(i);
                    break;
                }
            }
            match found {
                Some(i) => {
                    full.push((v[i + 1] - v[i]).abs());
                    v.drain(i..i + 2);
                }
                None => break,
            }
        }
        let half = v.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        (full, half)
    }

    #[test]
    fn standard_worked_example() {
        let cycles = rainflow_count(&tps(&[-2.0, 1.0, -3.0, 5.0, -1.0, 3.0, -4.0, 4.0, -2.0]));
        let full: Vec<_> = cycles.iter().filter(|c| c.count == 1.0).collect();
        assert_eq!(full.len(), 1);
        assert_eq!(full[0].range, 4.0);
        assert_eq!(full[0].mean, 1.0);
        let mut half: Vec<f64> = cycles
            .iter()
            .filter(|c| c.count == 0.5)
            .map(|c| c.range)
            .collect();
        half.sort_by(f64::total_cmp);
        assert_eq!(half, vec![3.0, 4.0, 6.0, 8.0, 8.0, 9.0]);
    }

    #[test]
    fn ramp_is_one_half_cycle() {
        let t: Vec<f64> = (0..10).map(f64::from).collect();
        let v: Vec<f64> = (0..10).map(|k| 10.0 * k as f64 / 9.0).collect();
        let p = extract_turning_points(&t, &v, 0.0).unwrap();
        assert_eq!(p.len(), 2);
        let c = rainflow_count(&tps(&[0.0, 10.0]));
        assert_eq!(c.len(), 1);
        assert_eq!((c[0].range, c[0].mean, c[0].count), (10.0, 5.0, 0.5));
    }

    fn triangle(amp: f64, periods: usize, per_half: usize) -> (Vec<f64>, Vec<f64>) {
        let mut t = Vec::new();
        let mut v = Vec::new();
        let n = periods * 2 * per_half;
        for k in 0..=n {
            let phase = (k % (2 * per_half)) as f64 / per_half as f64;
            let x = if phase <= 1.0 { phase } else { 2.0 - phase };
            t.push(k as f64 * 0.1);
            v.push(amp * (2.0 * x - 1.0));
        }
        (t, v)
    }

    #[test]
    fn triangle_keeps_every_reversal() {
        let (t, v) = triangle(3.0, 5, 4);
        let p = extract_turning_points(&t, &v, 0.0).unwrap();
        assert_eq!(p.len(), 11);
        for w in p.windows(2) {
            assert_eq!((w[1].value - w[0].value).abs(), 6.0);
        }
    }

    #[test]
    fn triangle_wave_full_cycles() {
        let amp = 2.5;
        let n = 7;
        let (t, v) = triangle(amp, n, 5);
        let p = extract_turning_points(&t, &v, 0.0).unwrap();
        let cycles = rainflow_count(&p);
        let full = cycles.iter().filter(|c| c.count == 1.0).count();
        let vals: Vec<f64> = p.iter().map(|q| q.value).collect();
        let (ref_full, _) = reference_count(&vals);
        assert_eq!(full, ref_full.len());
        assert!(full >= n - 1);
        assert!(cycles.iter().all(|c| (c.range - 2.0 * amp).abs() < 1e-12));
    }

    #[test]
    fn hysteresis_removes_ripple() {
        let t: Vec<f64> = (0..4000).map(|k| k as f64 * 0.01).collect();
        let clean: Vec<f64> = t.iter().map(|&x| 10.0 * (0.5 * x).sin()).collect();
        let noisy: Vec<f64> = t
            .iter()
            .zip(&clean)
            .map(|(&x, &c)| c + 0.01 * (97.0 * x).sin())
            .collect();
        let a = extract_turning_points(&t, &clean, 0.5).unwrap();
        let b = extract_turning_points(&t, &noisy, 0.5).unwrap();
        assert_eq!(a.len(), b.len());
        let raw = extract_turning_points(&t, &noisy, 0.0).unwrap();
        assert!(raw.len() > b.len());
    }

    #[test]
    fn extraction_rejects_short_input() {
        assert!(extract_turning_points(&[], &[], 0.0).is_err());
        assert!(extract_turning_points(&[0.0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn binning_examples() {
        let c = RainflowCycle {
            range: 5.0,
            mean: 60.0,
            count: 1.0,
            t_start: 0.0,
            t_end: 1.0,
        };
        let h = bin_cycles(&[c], &[0.0, 10.0], &[0.0, 2.0]).unwrap();
        assert_eq!(h.counts, vec![1.0]);
        assert_eq!(h.mean_tj, vec![60.0]);

        let edge = RainflowCycle { range: 10.0, ..c };
        let h = bin_cycles(&[edge], &[0.0, 10.0, 20.0], &[0.0, 2.0]).unwrap();
        assert_eq!(h.counts, vec![0.0, 1.0]);

        assert!(bin_cycles(&[c], &[0.0], &[0.0, 1.0]).is_err());
        assert!(bin_cycles(&[c], &[0.0, 1.0], &[2.0, 1.0]).is_err());
    }

    #[test]
    fn histogram_csv_round_trip() {
        let cycles = [
            RainflowCycle {
                range: 5.0,
                mean: 60.0,
                count: 1.0,
                t_start: 0.0,
                t_end: 1.0,
            },
            RainflowCycle {
                range: 17.0,
                mean: 80.0,
                count: 0.5,
                t_start: 0.0,
                t_end: 30.0,
            },
        ];
        let h = bin_cycles(&cycles, &linear_edges(2.0, 20.0), &log_edges(0.1, 100.0, 6)).unwrap();
        let text = h.to_csv();
        assert!(
            text.starts_with("# relcon-histogram v1\ndT_lo,dT_hi,ton_lo,ton_hi,mean_Tj,count\n")
        );
        let back = CycleHistogram::from_csv(&text).unwrap();
        assert_eq!(back.edges_dt, h.edges_dt);
        assert_eq!(back.edges_ton, h.edges_ton);
        assert_eq!(back.counts, h.counts);
        assert_eq!(back.to_csv(), text);

        assert!(CycleHistogram::from_csv(&text.replacen("v1", "v2", 1)).is_err());
        assert!(CycleHistogram::from_csv(
            text.lines().skip(1).collect::<Vec<_>>().join("\n").as_str()
        )
        .is_err());
        let mut gapped: Vec<&str> = text.lines().collect();
        gapped.remove(3);
        assert!(CycleHistogram::from_csv(&gapped.join("\n")).is_err());
    }

    #[test]
    fn default_edges() {
        let e = linear_edges(2.0, 60.0);
        assert_eq!(e.len(), 31);
        assert_eq!(e[30], 60.0);
        let l = log_edges(0.1, 100.0, 12);
        assert_eq!(l.len(), 13);
        assert_eq!((l[0], l[12]), (0.1, 100.0));
    }

    fn arb_series() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-50.0..50.0f64, 2..200)
    }

    fn alternating(values: &[f64]) -> Vec<TurningPoint> {
        let t: Vec<f64> = (0..values.len()).map(|k| k as f64).collect();
        extract_turning_points(&t, values, 0.0).unwrap()
    }

    proptest! {
        #[test]
        fn matches_reference_counter(values in arb_series()) {
            let p = alternating(&values);
            let vals: Vec<f64> = p.iter().map(|q| q.value).collect();
            let cycles = rainflow_count(&p);
            let mut full: Vec<f64> = cycles.iter().filter(|c| c.count == 1.0).map(|c| c.range).collect();
            let mut half: Vec<f64> = cycles.iter().filter(|c| c.count == 0.5).map(|c| c.range).collect();
            let (mut rf, mut rh) = reference_count(&vals);
            for v in [&mut full, &mut half, &mut rf, &mut rh] {
                v.sort_by(f64::total_cmp);
            }
            prop_assert_eq!(full, rf);
            prop_assert_eq!(half, rh);
        }

        #[test]
        fn matches_reference_with_ties(ints in proptest::collection::vec(-4i32..=4, 2..120)) {
            let values: Vec<f64> = ints.into_iter().map(f64::from).collect();
            let p = alternating(&values);
            let vals: Vec<f64> = p.iter().map(|q| q.value).collect();
            let cycles = rainflow_count(&p);
            let mut full: Vec<f64> = cycles.iter().filter(|c| c.count == 1.0).map(|c| c.range).collect();
            let mut half: Vec<f64> = cycles.iter().filter(|c| c.count == 0.5).map(|c| c.range).collect();
            let (mut rf, mut rh) = reference_count(&vals);
            for v in [&mut full, &mut half, &mut rf, &mut rh] {
                v.sort_by(f64::total_cmp);
            }
            prop_assert_eq!(full, rf);
            prop_assert_eq!(half, rh);
        }

        #[test]
        fn half_cycle_conservation(values in arb_series()) {
            let p = alternating(&values);
            let total: f64 = rainflow_count(&p).iter().map(|c| c.count).sum();
            prop_assert_eq!(total, (p.len() - 1) as f64 / 2.0);
        }

        #[test]
        fn turning_points_alternate(values in arb_series(), h in 0.0..5.0f64) {
            let t: Vec<f64> = (0..values.len()).map(|k| k as f64).collect();
            let p = extract_turning_points(&t, &values, h).unwrap();
            prop_assert_eq!(p[0].t, 0.0);
            prop_assert_eq!(p.last().unwrap().t, (values.len() - 1) as f64);
            for w in p.windows(3) {
                prop_assert!((w[1].value - w[0].value) * (w[2].value - w[1].value) < 0.0);
            }
        }

        #[test]
        fn scale_and_offset(values in arb_series(), k in 0.1..10.0f64, off in -100.0..100.0f64) {
            let base = rainflow_count(&alternating(&values));
            let scaled: Vec<f64> = values.iter().map(|v| v * k).collect();
            let shifted: Vec<f64> = values.iter().map(|v| v + off).collect();
            let s = rainflow_count(&alternating(&scaled));
            let o = rainflow_count(&alternating(&shifted));
            prop_assert_eq!(s.len(), base.len());
            prop_assert_eq!(o.len(), base.len());
            for ((a, b), c) in base.iter().zip(&s).zip(&o) {
                prop_assert!((b.range - k * a.range).abs() <= 1e-9 * (1.0 + b.range));
                prop_assert!((c.range - a.range).abs() <= 1e-9 * (1.0 + a.range));
                prop_assert!((c.mean - (a.mean + off)).abs() <= 1e-9 * (1.0 + c.mean.abs()));
                prop_assert_eq!(a.count, b.count);
                prop_assert_eq!(a.duration(), b.duration());
                prop_assert_eq!(a.duration(), c.duration());
            }
        }

        #[test]
        fn binning_conserves_count(values in arb_series()) {
            let cycles = rainflow_count(&alternating(&values));
            let h = bin_cycles(&cycles, &linear_edges(2.0, 60.0), &log_edges(0.1, 100.0, 12)).unwrap();
            let total: f64 = cycles.iter().map(|c| c.count).sum();
            prop_assert!((h.total_count() - total).abs() < 1e-9);
        }
    }
}
