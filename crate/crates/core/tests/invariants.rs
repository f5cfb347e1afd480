//! Cross-module integration checks that don't belong to a single unit.

use krylov_quench::analysis::detect_dqpt;
use krylov_quench::propagator::{
    simulate, time_average, DirectPropagator, KrylovPropagator, SimulateOptions, TimeGrid,
};
use krylov_quench::spin_model::{ground_state, spin_expectations, ModelParams};

fn local_extrema(y: &[f64], maxima: bool) -> Vec<usize> {
    (1..y.len() - 1)
        .filter(|&i| {
            if maxima {
                y[i] >= y[i - 1] && y[i] >= y[i + 1] && (y[i] > y[i - 1] || y[i] > y[i + 1])
            } else {
                y[i] <= y[i - 1] && y[i] <= y[i + 1] && (y[i] < y[i - 1] || y[i] < y[i + 1])
            }
        })
        .collect()
}

/// The survival amplitude agrees between the Krylov and direct pipelines out
/// to Jt = 100 at the largest acceptance size; the directly evolved state
/// stays normalized and conserves the quench energy a_0.
#[test]
fn cross_oracle_holds_at_n400_long_times() {
    use krylov_quench::spin_model::build_hamiltonian_z;
    let p = ModelParams::new(400, 1.0, 0.5, 0.5).unwrap();
    let out = simulate(
        &p,
        &TimeGrid::new(1.0, 3).unwrap(),
        &SimulateOptions {
            store_basis: false,
            ..Default::default()
        },
    )
    .unwrap();
    let krylov = KrylovPropagator::new(&out.decomposition.tridiag);
    let direct = DirectPropagator::new(&p);
    let hz = build_hamiltonian_z(&p);
    let a0 = out.decomposition.tridiag.a()[0];
    let mut worst = 0.0f64;
    for i in 0..=100 {
        let t = i as f64;
        worst = worst.max((krylov.phi0(t) - direct.survival(t)).norm());

        let state = direct.state(t);
        assert!((state.norm() - 1.0).abs() <= 1e-10, "t={t}: direct norm");
        let amp = state.amplitudes();
        let mut hv = vec![num_complex::Complex64::new(0.0, 0.0); amp.len()];
        hz.apply(amp, &mut hv);
        let energy: f64 = amp.iter().zip(&hv).map(|(c, h)| (c.conj() * h).re).sum();
        assert!(
            (energy - a0).abs() <= 1e-9 * 400.0,
            "t={t}: direct energy {energy} vs {a0}"
        );
    }
    assert!(worst <= 1e-8, "max deviation {worst:e}");
}

/// Long-time spin averages sit close to the ground-state expectations at
/// large g and depart strongly at small g.
#[test]
fn time_averages_track_ground_state_only_at_large_g() {
    let grid = TimeGrid::new(100.0, 1001).unwrap();
    let opts = SimulateOptions {
        store_basis: false,
        ..Default::default()
    };
    let rel = |g: f64| {
        let p = ModelParams::new(400, 1.0, 0.5, g).unwrap();
        let out = simulate(&p, &grid, &opts).unwrap();
        let (sz_bar, sx_bar) = time_average(&out.series, 100.0).unwrap();
        let gs = ground_state(&p);
        let (ground_sz, ground_sx) = spin_expectations(&gs.state).unwrap();
        (
            (sz_bar - ground_sz).abs() / ground_sz.abs(),
            (sx_bar - ground_sx).abs() / ground_sx.abs(),
        )
    };
    let (dz3, dx3) = rel(3.0);
    assert!(dz3 <= 0.10 && dx3 <= 0.10, "g=3.0: {dz3:.3}, {dx3:.3}");
    let (dz05, _) = rel(0.5);
    assert!(dz05 > 0.10, "g=0.5 should deviate, got {dz05:.3}");
}

/// At large g the complexity and entropy oscillate in phase and the Krylov
/// occupation stays single-peaked.
#[test]
fn complexity_entropy_in_phase_at_large_g() {
    let p = ModelParams::new(100, 1.0, 0.5, 3.0).unwrap();
    let grid = TimeGrid::new(10.0, 201).unwrap();
    let out = simulate(&p, &grid, &SimulateOptions::default()).unwrap();
    let (k, s) = (&out.series.k, &out.series.s);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mk, ms) = (mean(k), mean(s));
    let cov: f64 = k
        .iter()
        .zip(s.iter())
        .map(|(a, b)| (a - mk) * (b - ms))
        .sum();
    let vk: f64 = k.iter().map(|a| (a - mk) * (a - mk)).sum();
    let vs: f64 = s.iter().map(|b| (b - ms) * (b - ms)).sum();
    let corr = cov / (vk * vs).sqrt();
    assert!(corr > 0.8, "corr(K, S) = {corr:.3}");

    // single-peaked |phi_k|^2 at the first K maximum
    let prop = KrylovPropagator::new(&out.decomposition.tridiag);
    let first_k_max = local_extrema(k, true)[0];
    let wave = prop.wave(out.series.times[first_k_max]);
    let probs: Vec<f64> = wave.phi.iter().map(|c| c.norm_sqr()).collect();
    let smoothed: Vec<f64> = (0..probs.len())
        .map(|i| {
            let lo = i.saturating_sub(2);
            let hi = (i + 3).min(probs.len());
            probs[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    let peaks = local_extrema(&smoothed, true)
        .into_iter()
        .filter(|&i| smoothed[i] > 1e-4)
        .count();
    assert_eq!(peaks, 1, "expected a single-peaked distribution");
}

/// <S^z> is locally maximal and <S^x> locally minimal at the singular times
/// (checked at g = 2.0 where the rate function stays within f64 resolution).
#[test]
fn spin_extrema_sit_at_dqpt_times() {
    let p = ModelParams::new(200, 1.0, 0.5, 2.0).unwrap();
    let grid = TimeGrid::new(10.0, 201).unwrap();
    let out = simulate(
        &p,
        &grid,
        &SimulateOptions {
            store_basis: false,
            ..Default::default()
        },
    )
    .unwrap();
    let report = detect_dqpt(&out.series);
    let sz_maxima = local_extrema(&out.series.sz, true);
    let sx_minima = local_extrema(&out.series.sx, false);
    let mut checked = 0;
    for (i, &t) in report.times.iter().enumerate() {
        if !report.strong[i] {
            continue;
        }
        let idx = (t / grid.step()).round() as usize;
        let dz = sz_maxima.iter().map(|&j| j.abs_diff(idx)).min().unwrap();
        let dx = sx_minima.iter().map(|&j| j.abs_diff(idx)).min().unwrap();
        assert!(dz <= 2 && dx <= 2, "t={t:.2}: dz={dz} dx={dx}");
        checked += 1;
    }
    assert!(checked >= 3, "only {checked} strong singularities found");
}
