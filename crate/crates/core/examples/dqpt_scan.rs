//! Runs the DQPT study points of the phase diagram and prints detector diagnostics.
//!
//! Run: cargo run --release -p krylov-quench --example dqpt_scan

use std::time::Instant;

use krylov_quench::analysis::{detect_dqpt, g0_convergence};
use krylov_quench::propagator::{simulate, SimulateOptions, TimeGrid};
use krylov_quench::spin_model::ModelParams;

fn main() {
    let grid = TimeGrid::new(10.0, 201).unwrap();
    let opts = SimulateOptions {
        hd_rate: true,
        store_basis: false,
        ..Default::default()
    };
    for (h, g) in [
        (0.5, 0.5),
        (0.5, 1.0),
        (0.5, 2.0),
        (0.5, 3.0),
        (0.2, 2.2),
        (0.4, 2.2),
        (0.6, 2.2),
        (0.8, 2.2),
    ] {
        let t0 = Instant::now();
        let params = ModelParams::new(400, 1.0, h, g).unwrap();
        let out = simulate(&params, &grid, &opts).unwrap();
        let elapsed = t0.elapsed().as_secs_f64();
        let report = detect_dqpt(&out.series);
        let max_f = out.series.f.iter().cloned().fold(f64::MIN, f64::max);
        println!(
            "h={h} g={g}: {elapsed:.1}s d={} max_f={max_f:.4} candidates:",
            out.decomposition.dimension()
        );
        for i in 0..report.times.len() {
            println!(
                "   t={:>6.3} sharp={:>10.2} strong={} K_align={} S_align={}",
                report.times[i],
                report.sharpness[i],
                report.strong[i],
                report.k_peak_aligned[i],
                report.entropy_dip_aligned[i]
            );
        }
    }

    let t0 = Instant::now();
    let conv = g0_convergence(0.5, 1.0, &[100, 200, 400], &grid).unwrap();
    println!("g0 convergence ({:.1}s):", t0.elapsed().as_secs_f64());
    for c in &conv {
        println!(
            "   N={}: off-kink {:.5}, near-kink {:.5}",
            c.n, c.off_kink_max, c.kink_window_max
        );
    }
}
