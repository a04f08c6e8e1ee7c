//! Refits the lifetime constants `alpha` and `a0` to the two anchor points
//! (40 K and 80 K swings at 150 °C mean, 10 s heating) and prints the
//! resulting `lifetime` config block.
//!
//! Run with `cargo run --example calibrate_lifetime`.

use relcon::config::ToolkitConfig;
use relcon::thermal::{calibrate_lifetime, cycles_to_failure, LifetimeAnchor};

fn main() -> relcon::Result<()> {
    let anchor = |delta_t, cycles| LifetimeAnchor {
        delta_t,
        mean_tj: 150.0,
        t_on: 10.0,
        cycles,
    };
    let anchors = [anchor(40.0, 922e3), anchor(80.0, 30e3)];
    let base = ToolkitConfig::default().lifetime_params();
    let fit = calibrate_lifetime(&base, anchors)?;

    println!(
        "fixed: A1={} T0={} lambda={} Ea={} C={} gamma={} k_thick={}",
        fit.a1, fit.t0, fit.lambda, fit.ea, fit.c_ton, fit.gamma_ton, fit.k_thick
    );
    println!("fitted: alpha={} a0={:e}", fit.alpha, fit.a0);
    for a in anchors {
        let fitted = cycles_to_failure(a.delta_t, a.mean_tj, a.t_on, &fit)?;
        let shipped = cycles_to_failure(a.delta_t, a.mean_tj, a.t_on, &base)?;
        println!(
            "dT={:>4} K: target {:>9.0}  fitted {:>11.1}  shipped {:>11.1}",
            a.delta_t, a.cycles, fitted, shipped
        );
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&fit).expect("serializes")
    );
    Ok(())
}
