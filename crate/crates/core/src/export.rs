//! Plot-ready CSV and JSON exports with byte-deterministic formatting.

use std::io::{self, Write};

use serde::Serialize;

use crate::analysis::{DqptReport, SweepRecord};
use crate::krylov::{
    ClosedFormCoefficients, DomainStructure, KrylovDecomposition, SlopeCheck, SpectrumBounds,
    Termination, TridiagonalHamiltonian,
};
use crate::propagator::{KrylovPropagator, ObservableSeries};
use crate::spin_model::{ModelParams, PhaseClassification};

/// 17 significant digits: round-trip exact for f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// series.csv: Jt, f, K, S, Sz, Sx, abs_phi0, flags
pub fn write_series_csv<W: Write>(w: &mut W, series: &ObservableSeries) -> io::Result<()> {
    writeln!(w, "Jt,f,K,S,Sz,Sx,abs_phi0,flags")?;
    for i in 0..series.times.len() {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            fmt_f64(series.times[i]),
            fmt_f64(series.f[i]),
            fmt_f64(series.k[i]),
            fmt_f64(series.s[i]),
            fmt_f64(series.sz[i]),
            fmt_f64(series.sx[i]),
            fmt_f64(series.abs_phi0[i]),
            series.flags[i],
        )?;
    }
    Ok(())
}

/// lanczos.csv: k, a_k, b_k (units of J; b_0 written as 0 by convention).
pub fn write_lanczos_csv<W: Write>(w: &mut W, tridiag: &TridiagonalHamiltonian) -> io::Result<()> {
    writeln!(w, "k,a_k,b_k")?;
    for k in 0..tridiag.dimension() {
        let b = if k == 0 { 0.0 } else { tridiag.b()[k - 1] };
        writeln!(w, "{},{},{}", k, fmt_f64(tridiag.a()[k]), fmt_f64(b))?;
    }
    Ok(())
}

/// wave.csv: |phi_k| matrix; rows k, one column per grid time.
pub fn write_wave_csv<W: Write>(
    w: &mut W,
    decomposition: &KrylovDecomposition,
    times: &[f64],
) -> io::Result<()> {
    let propagator = KrylovPropagator::new(&decomposition.tridiag);
    let d = decomposition.dimension();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(times.len());
    for &t in times {
        columns.push(propagator.wave(t).phi.iter().map(|c| c.norm()).collect());
    }
    write!(w, "k")?;
    for &t in times {
        write!(w, ",{}", fmt_f64(t))?;
    }
    writeln!(w)?;
    for k in 0..d {
        write!(w, "{k}")?;
        for col in &columns {
            write!(w, ",{}", fmt_f64(col[k]))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// eigenvalues.csv: the full spectrum of the Krylov tridiagonal, for
/// structure-by-eye inspection (nothing is asserted about it).
pub fn write_eigenvalues_csv<W: Write>(
    w: &mut W,
    tridiag: &TridiagonalHamiltonian,
) -> io::Result<()> {
    let eig = crate::linalg::symmetric_tridiagonal_eigen(tridiag.a(), tridiag.b(), false)
        .map_err(|e| io::Error::other(e.to_string()))?;
    writeln!(w, "m,lambda_m")?;
    for (m, v) in eig.values.iter().enumerate() {
        writeln!(w, "{},{}", m, fmt_f64(*v))?;
    }
    Ok(())
}

/// sweep.csv: one row per (h, g) point.
pub fn write_sweep_csv<W: Write>(w: &mut W, records: &[SweepRecord]) -> io::Result<()> {
    writeln!(
        w,
        "h,g,N,max_K,argmax_b,krylov_dim,sz_bar,sx_bar,ground_sz,ground_sx,n_dqpt,first_dqpt_Jt,has_metastable"
    )?;
    for r in records {
        let first = r
            .dqpt_times
            .first()
            .map_or_else(|| "nan".to_string(), |&t| fmt_f64(t));
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(r.h),
            fmt_f64(r.g),
            r.n,
            fmt_f64(r.max_k),
            r.argmax_b.map_or(0, |k| k),
            r.krylov_dim,
            fmt_f64(r.sz_bar),
            fmt_f64(r.sx_bar),
            fmt_f64(r.ground_sz),
            fmt_f64(r.ground_sx),
            r.dqpt_times.len(),
            first,
            r.has_metastable,
        )?;
    }
    Ok(())
}

/// Everything the simulate command reports besides the raw series.
#[derive(Serialize)]
pub struct RunSummary {
    pub params: ModelParams,
    pub krylov_dim: usize,
    pub termination: Termination,
    pub max_k: f64,
    pub domain_structure: DomainStructure,
    pub spectrum_bounds: SpectrumBounds,
    pub dqpt: DqptReport,
    pub closed_forms: ClosedFormResiduals,
    pub slope: SlopeCheck,
    pub phase: PhaseClassification,
    pub ground_energy: f64,
    pub ground_sz: f64,
    pub ground_sx: f64,
}

/// Closed-form first coefficients and their deviation from the Lanczos run.
#[derive(Serialize)]
pub struct ClosedFormResiduals {
    pub values: ClosedFormCoefficients,
    pub residual_a0: f64,
    pub residual_b1: f64,
    pub residual_a1: Option<f64>,
}

impl ClosedFormResiduals {
    pub fn new(values: ClosedFormCoefficients, tridiag: &TridiagonalHamiltonian, j: f64) -> Self {
        let residual_a0 = tridiag.a()[0] * j - values.a0;
        let residual_b1 = if tridiag.dimension() > 1 {
            tridiag.b()[0] * j - values.b1
        } else {
            f64::NAN
        };
        let residual_a1 = values
            .a1
            .and_then(|a1| (tridiag.dimension() > 1).then(|| tridiag.a()[1] * j - a1));
        ClosedFormResiduals {
            values,
            residual_a0,
            residual_b1,
            residual_a1,
        }
    }
}

pub fn write_json_pretty<W: Write, T: Serialize>(w: &mut W, value: &T) -> io::Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    w.write_all(text.as_bytes())?;
    writeln!(w)
}
