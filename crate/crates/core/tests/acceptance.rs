//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relcon::cli::read_comparison;
use relcon::config::ToolkitConfig;
use relcon::drive_cycle::DriveCycle;
use relcon::linalg::Mat;
use relcon::lti::StateSpaceModel;
use relcon::pipeline::{self, ModeSummary};
use relcon::rainflow::{extract_turning_points, rainflow_count};
use relcon::synthesis::{self, ControlMode};
use relcon::thermal::{self, ThermalParams};
use relcon::{norm, riccati};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lifetime_anchors() -> Outcome {
    let lp = ToolkitConfig::default().lifetime_params();
    let n40 = thermal::cycles_to_failure(40.0, 150.0, 10.0, &lp).map_err(|e| e.to_string())?;
    let n80 = thermal::cycles_to_failure(80.0, 150.0, 10.0, &lp).map_err(|e| e.to_string())?;
    let ratio = n40 / n80;
    check(
        (830e3..=1.01e6).contains(&n40)
            && (27e3..=33e3).contains(&n80)
            && (ratio / 30.7 - 1.0).abs() <= 0.15,
        format!("N_f(40 K) = {n40:.0}, N_f(80 K) = {n80:.0}, ratio {ratio:.2}"),
    )
}

fn rainflow_oracle() -> Outcome {
    let v = [-2.0, 1.0, -3.0, 5.0, -1.0, 3.0, -4.0, 4.0, -2.0];
    let t: Vec<f64> = (0..v.len()).map(|k| k as f64).collect();
    let tps = extract_turning_points(&t, &v, 0.0).map_err(|e| e.to_string())?;
    let cycles = rainflow_count(&tps);
    let full: Vec<(f64, f64)> = cycles
        .iter()
        .filter(|c| c.count == 1.0)
        .map(|c| (c.range, c.mean))
        .collect();
    let half: Vec<f64> = cycles
        .iter()
        .filter(|c| c.count == 0.5)
        .map(|c| c.range)
        .collect();
    check(
        full == [(4.0, 1.0)] && half == [3.0, 4.0, 8.0, 9.0, 8.0, 6.0] && cycles.len() == 7,
        format!("full {full:?}, half ranges {half:?}"),
    )
}

fn random_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat {
    Mat::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

fn riccati_and_norm() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(1..=8usize);
        let m = rng.random_range(1..=3usize);
        let a = 2.0 * random_mat(&mut rng, n, n);
        let b = random_mat(&mut rng, n, m);
        let c = random_mat(&mut rng, n, n);
        let q = c.transpose() * c + Mat::identity(n, n) * 1e-2;
        let l = random_mat(&mut rng, m, m);
        let r = &l * l.transpose() + Mat::identity(m, m);
        let x = riccati::solve_care(&a, &b, &q, &r).map_err(|e| format!("n={n}: {e}"))?;
        let res = riccati::care_residual(&a, &b, &q, &r, &x).map_err(|e| e.to_string())?;
        worst = worst.max(res / (1.0 + x.norm()));
    }

    let mut norm_err = 0.0f64;
    for zeta in [0.05, 0.1, 0.5] {
        let wn = 3.0;
        let sys = StateSpaceModel::continuous(
            Mat::from_row_slice(2, 2, &[0.0, 1.0, -wn * wn, -2.0 * zeta * wn]),
            Mat::from_row_slice(2, 1, &[0.0, wn * wn]),
            Mat::from_row_slice(1, 2, &[1.0, 0.0]),
            Mat::zeros(1, 1),
        )
        .map_err(|e| e.to_string())?;
        let exact = 1.0 / (2.0 * zeta * (1.0 - zeta * zeta).sqrt());
        let got = norm::hinf_norm(&sys, 1e-6).map_err(|e| e.to_string())?;
        norm_err = norm_err.max((got - exact).abs() / exact);
    }
    check(
        worst <= 1e-8 && norm_err <= 1e-4,
        format!("worst scaled CARE residual {worst:.2e} over 100 problems, resonance peak rel. error {norm_err:.2e}"),
    )
}

fn synthesis_self_consistency() -> Outcome {
    let cfg = ToolkitConfig::default();
    let mut parts = Vec::new();
    let mut ok = true;
    for mode in ControlMode::ALL {
        let plant = pipeline::design_plant(&cfg, mode).map_err(|e| e.to_string())?;
        let sol = synthesis::synthesize(&plant, cfg.gamma_range(), cfg.synthesis.tol.value)
            .map_err(|e| e.to_string())?;
        let cl = synthesis::close_loop(&plant, &sol.controller).map_err(|e| e.to_string())?;
        let abscissa = cl.stability_margin().map_err(|e| e.to_string())?;
        let n = norm::hinf_norm(&cl, 1e-6).map_err(|e| e.to_string())?;
        ok &= abscissa < 0.0 && n <= sol.gamma * 1.001;
        parts.push(format!(
            "{mode}: gamma {:.4}, norm {n:.4}, abscissa {abscissa:.2e}",
            sol.gamma
        ));
    }
    check(ok, parts.join("; "))
}

fn thermal_exactness() -> Outcome {
    let tp = ThermalParams {
        r_theta: 1.0,
        c_theta: 2.0,
        t_ambient: 40.0,
    };
    let (p, dt, t0) = (55.0, 1e-3, 40.0);
    let t_ss = tp.t_ambient + p * tp.r_theta;
    let mut t = t0;
    let mut worst = 0.0f64;
    for k in 1..=20_000 {
        t = thermal::step_junction_temperature(t, p, dt, &tp);
        let exact = t_ss + (t0 - t_ss) * (-(k as f64) * dt / tp.time_constant()).exp();
        worst = worst.max((t - exact).abs());
    }
    let settled = thermal::step_junction_temperature(t0, p, 1e6, &tp);
    let held = thermal::step_junction_temperature(t_ss, p, dt, &tp);
    check(
        worst <= 1e-9 && settled == t_ss && held == t_ss,
        format!("max deviation {worst:.2e} K over 20000 steps, steady state {settled} == {t_ss}"),
    )
}

fn find(modes: &[ModeSummary], m: ControlMode) -> &ModeSummary {
    modes
        .iter()
        .find(|s| s.mode == m)
        .expect("both modes present")
}

fn run_compare(out_dir: &Path) -> Result<f64, String> {
    let t0 = Instant::now();
    let o = Command::new(env!("CARGO_BIN_EXE_relcon"))
        .env_remove("RELCON_CONFIG")
        .arg("compare")
        .arg("--out-dir")
        .arg(out_dir)
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(String::from_utf8_lossy(&o.stderr).into_owned());
    }
    Ok(t0.elapsed().as_secs_f64())
}

fn wltc_comparison(out_dir: &Path, wall: f64) -> Outcome {
    let cmp = read_comparison(&out_dir.join("comparison.json"))
        .map_err(|e| e.to_string())?
        .comparison;
    let p = find(&cmp.modes, ControlMode::PerformanceOriented);
    let r = find(&cmp.modes, ControlMode::ReliabilityAware);
    let band = |d: f64| (1e-5..=1e-3).contains(&d);
    check(
        p.rmse_kmh < r.rmse_kmh && r.damage <= 0.85 * p.damage && band(p.damage) && band(r.damage),
        format!(
            "RMSE {:.4} / {:.4} km/h, D {:.3e} / {:.3e} (reduction {:.1} %), both modes in {wall:.1} s",
            p.rmse_kmh, r.rmse_kmh, p.damage, r.damage, cmp.damage_reduction_percent
        ),
    )
}

fn dir_bytes(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut v = Vec::new();
    for e in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let e = e.map_err(|e| e.to_string())?;
        let bytes = std::fs::read(e.path()).map_err(|e| e.to_string())?;
        v.push((e.file_name().to_string_lossy().into_owned(), bytes));
    }
    v.sort();
    Ok(v)
}

fn determinism(a: &Path, b: &Path) -> Outcome {
    let (x, y) = (dir_bytes(a)?, dir_bytes(b)?);
    let differing: Vec<&str> = x
        .iter()
        .zip(&y)
        .filter(|(p, q)| p != q)
        .map(|(p, _)| p.0.as_str())
        .collect();
    check(
        x.len() == y.len() && !x.is_empty() && differing.is_empty(),
        format!("{} files compared, differing: {differing:?}", x.len()),
    )
}

fn step_convergence(base_dir: &Path) -> Outcome {
    let base = read_comparison(&base_dir.join("comparison.json"))
        .map_err(|e| e.to_string())?
        .comparison;
    let mut cfg = ToolkitConfig::default();
    cfg.simulation.dt.value *= 0.5;
    cfg.simulation.log_decimation.value *= 2;
    let (fine, _, _) =
        pipeline::compare(&cfg, &DriveCycle::wltc_class3b()).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut parts = Vec::new();
    for mode in ControlMode::ALL {
        let (c, f) = (find(&base.modes, mode), find(&fine.modes, mode));
        let dd = (f.damage / c.damage - 1.0).abs();
        let dr = (f.rmse_kmh / c.rmse_kmh - 1.0).abs();
        ok &= dd < 0.02 && dr < 0.005;
        parts.push(format!(
            "{mode}: dD {:.3} %, dRMSE {:.3} %",
            100.0 * dd,
            100.0 * dr
        ));
    }
    check(ok, parts.join("; "))
}

fn main() {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let (run_a, run_b) = (tmp.path().join("run_a"), tmp.path().join("run_b"));
    let compares = run_compare(&run_a).and_then(|wall| run_compare(&run_b).map(|_| wall));

    let criteria: Vec<Criterion> = vec![
        ("lifetime anchors", Box::new(lifetime_anchors)),
        ("rainflow oracle", Box::new(rainflow_oracle)),
        ("Riccati and norm suite", Box::new(riccati_and_norm)),
        (
            "synthesis self-consistency",
            Box::new(synthesis_self_consistency),
        ),
        ("thermal exactness", Box::new(thermal_exactness)),
        (
            "WLTC comparison",
            Box::new(|| {
                compares
                    .clone()
                    .and_then(|wall| wltc_comparison(&run_a, wall))
            }),
        ),
        (
            "determinism",
            Box::new(|| compares.clone().and_then(|_| determinism(&run_a, &run_b))),
        ),
        (
            "step convergence",
            Box::new(|| compares.clone().and_then(|_| step_convergence(&run_a))),
        ),
    ];

    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let r = f();
        let secs = t0.elapsed().as_secs_f64();
        match r {
            Ok(d) => println!("criterion {}: PASS  {name} ({secs:.2} s): {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} ({secs:.2} s): {d}", i + 1)
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
