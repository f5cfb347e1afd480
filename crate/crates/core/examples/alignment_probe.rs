//! Measures distances between rate-function singularities and K(t)/S(t)
//! features on a fine grid, with the high-precision survival amplitude.
//!
//! Run: cargo run --release -p krylov-quench --example alignment_probe

use krylov_quench::propagator::{simulate, SimulateOptions, TimeGrid};
use krylov_quench::spin_model::ModelParams;

fn local_maxima(y: &[f64]) -> Vec<usize> {
    (1..y.len() - 1)
        .filter(|&i| y[i] >= y[i - 1] && y[i] >= y[i + 1] && (y[i] > y[i - 1] || y[i] > y[i + 1]))
        .collect()
}

fn local_minima(y: &[f64]) -> Vec<usize> {
    (1..y.len() - 1)
        .filter(|&i| y[i] <= y[i - 1] && y[i] <= y[i + 1] && (y[i] < y[i - 1] || y[i] < y[i + 1]))
        .collect()
}

fn main() {
    let grid = TimeGrid::new(10.0, 2001).unwrap();
    let opts = SimulateOptions {
        hd_rate: true,
        store_basis: false,
        ..Default::default()
    };
    for (n, h, g) in [
        (400usize, 0.5, 0.5),
        (400, 0.5, 1.0),
        (400, 0.5, 2.0),
        (200, 0.5, 1.0),
        (800, 0.5, 1.0),
    ] {
        let params = ModelParams::new(n, 1.0, h, g).unwrap();
        let out = simulate(&params, &grid, &opts).unwrap();
        let f = &out.series.f;
        let dt = grid.step();
        let kmax = local_maxima(&out.series.k);
        let smin = local_minima(&out.series.s);
        // windowed f maxima with half-width 10 (0.05/J) to isolate real peaks
        let w = 10usize;
        let mut cands = Vec::new();
        for i in w..f.len() - w {
            let seg = &f[i - w..=i + w];
            let arg = seg
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            if arg == w && (f[i] > seg[0] || f[i] > seg[2 * w]) {
                cands.push(i);
            }
        }
        print!("N={n} h={h} g={g}:");
        for &i in &cands {
            let dk = kmax
                .iter()
                .map(|&j| (j as i64 - i as i64).abs())
                .min()
                .unwrap_or(i64::MAX);
            let ds = smin
                .iter()
                .map(|&j| (j as i64 - i as i64).abs())
                .min()
                .unwrap_or(i64::MAX);
            print!(
                " [t={:.3} dK={:.3} dS={:.3}]",
                out.series.times[i],
                dk as f64 * dt,
                ds as f64 * dt
            );
        }
        println!();
    }
}
