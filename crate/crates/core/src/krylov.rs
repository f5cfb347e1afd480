//! Krylov basis construction (Lanczos with full reorthogonalization) and
//! structural analysis of the resulting coefficient sequences.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::symmetric_tridiagonal_eigen;
use crate::spin_model::{BandedOperator, Basis, ModelParams, StateVector};

/// Tridiagonal Krylov-space Hamiltonian: diagonal a_k and positive hoppings b_k,
/// in units of J. `b()[k-1]` couples sites k-1 and k.
#[derive(Clone, Debug, Serialize)]
pub struct TridiagonalHamiltonian {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl TridiagonalHamiltonian {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Self {
        assert_eq!(
            b.len() + 1,
            a.len(),
            "need d diagonal and d-1 hopping terms"
        );
        TridiagonalHamiltonian { a, b }
    }
    pub fn a(&self) -> &[f64] {
        &self.a
    }
    pub fn b(&self) -> &[f64] {
        &self.b
    }
    pub fn dimension(&self) -> usize {
        self.a.len()
    }
    /// Effective local potential v_k = a_k - 2 b_k with the b_0 = 0 convention.
    pub fn local_potential(&self, k: usize) -> f64 {
        if k == 0 {
            self.a[0]
        } else {
            self.a[k] - 2.0 * self.b[k - 1]
        }
    }
}

/// Why the Lanczos iteration stopped.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Termination {
    /// Full Hilbert space spanned (d = N + 1).
    Exhausted,
    /// b fell below threshold * scale while computing b_index.
    Breakdown { index: usize, b_value: f64 },
    /// Caller-imposed dimension cap reached before breakdown or exhaustion.
    MaxDimReached,
}

/// Lanczos output: coefficients, stored basis, and the termination record.
#[derive(Clone, Debug)]
pub struct KrylovDecomposition {
    pub tridiag: TridiagonalHamiltonian,
    /// Row k is |K_k> in the construction basis; empty when basis storage is off.
    basis: Vec<Vec<Complex64>>,
    construction_basis: Basis,
    pub termination: Termination,
}

impl KrylovDecomposition {
    pub fn dimension(&self) -> usize {
        self.tridiag.dimension()
    }
    pub fn basis(&self) -> &[Vec<Complex64>] {
        &self.basis
    }
    pub fn construction_basis(&self) -> Basis {
        self.construction_basis
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    /// Hard cap on the Krylov dimension; `None` allows the full space.
    pub max_dim: Option<usize>,
    /// Relative breakdown cutoff: stop when b < threshold * scale, with scale
    /// the largest |a| or b seen so far.
    pub breakdown_threshold: f64,
    /// Keep the full basis (d x (N+1) complex values). Disable for
    /// coefficient-only runs at large N.
    pub store_basis: bool,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            max_dim: None,
            breakdown_threshold: 1e-10,
            store_basis: true,
        }
    }
}

#[inline]
fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[inline]
fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Three-term Lanczos recurrence with two-pass classical Gram-Schmidt against
/// the whole stored basis after every step.
pub fn lanczos(
    operator: &BandedOperator,
    start: &StateVector,
    options: &LanczosOptions,
) -> Result<KrylovDecomposition> {
    let n = operator.dim();
    if start.dim() != n {
        return Err(Error::DimensionMismatch {
            operator: n,
            state: start.dim(),
        });
    }
    let deviation = (start.norm() - 1.0).abs();
    if deviation > 1e-8 {
        return Err(Error::NotNormalized { deviation });
    }
    let max_dim = options.max_dim.unwrap_or(n).min(n);
    if max_dim < 1 {
        return Err(Error::InvalidParameter {
            field: "max_dim",
            message: "must be at least 1".into(),
        });
    }

    let mut v0: Vec<Complex64> = start.amplitudes().to_vec();
    let inv = 1.0 / norm(&v0);
    for c in &mut v0 {
        *c *= inv;
    }

    let mut basis: Vec<Vec<Complex64>> = vec![v0];
    let mut a: Vec<f64> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    let mut scale: f64 = 0.0;
    let mut w = vec![Complex64::new(0.0, 0.0); n];

    let termination = loop {
        let k = a.len();
        operator.apply(&basis[k], &mut w);
        let ak = dot(&basis[k], &w).re;
        a.push(ak);
        scale = scale.max(ak.abs());

        if a.len() == n {
            break Termination::Exhausted;
        }
        if a.len() == max_dim {
            break Termination::MaxDimReached;
        }

        for (wi, vi) in w.iter_mut().zip(&basis[k]) {
            *wi -= ak * vi;
        }
        if k > 0 {
            let bk = b[k - 1];
            for (wi, vi) in w.iter_mut().zip(&basis[k - 1]) {
                *wi -= bk * vi;
            }
        }
        // two-pass classical Gram-Schmidt against all previous vectors
        for _ in 0..2 {
            for q in &basis {
                let overlap = dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= overlap * qi;
                }
            }
        }
        let bk1 = norm(&w);
        if bk1 < options.breakdown_threshold * scale {
            break Termination::Breakdown {
                index: a.len(),
                b_value: bk1,
            };
        }
        b.push(bk1);
        scale = scale.max(bk1);
        let inv = 1.0 / bk1;
        let next: Vec<Complex64> = w.iter().map(|c| c * inv).collect();
        basis.push(next);
    };

    if !options.store_basis {
        basis.clear();
    }

    Ok(KrylovDecomposition {
        tridiag: TridiagonalHamiltonian::new(a, b),
        basis,
        construction_basis: start.basis(),
        termination,
    })
}

/// Closed forms for the first Lanczos coefficients a0, b1, a1.
///
/// a1 is recovered from the a1 b1^2 expansion; it is undefined when b1 = 0
/// (only possible at h = 0, N = 1, outside the valid parameter range).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ClosedFormCoefficients {
    pub a0: f64,
    pub b1: f64,
    pub a1: Option<f64>,
}

pub fn coefficient_closed_forms(params: &ModelParams) -> ClosedFormCoefficients {
    let n = params.n() as f64;
    let j = params.j();
    let h = params.h();
    let g = params.g();
    let a0 = -(n * g + 0.5) * j;
    let b1_sq = n * h * h + (n - 1.0) / (2.0 * n);
    let b1 = b1_sq.sqrt() * j;
    if b1_sq == 0.0 {
        return ClosedFormCoefficients { a0, b1, a1: None };
    }
    let a1_b1sq = n * h * h * (-n * g + 2.0 * g - 1.5 + 1.0 / n) - 2.0 * (n - 1.0) * h * h
        + ((n - 1.0) / (2.0 * n)) * (-n * g + 4.0 * g - 2.5 + 4.0 / n);
    ClosedFormCoefficients {
        a0,
        b1,
        a1: Some(a1_b1sq / b1_sq * j),
    }
}

/// Comparison of the measured initial slope a1 - a0 with 2J(g - 3/2).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SlopeCheck {
    pub measured: f64,
    pub predicted: f64,
    pub residual: f64,
}

pub fn slope_check(tridiag: &TridiagonalHamiltonian, params: &ModelParams) -> SlopeCheck {
    assert!(tridiag.dimension() >= 2, "need at least two Lanczos steps");
    let measured = (tridiag.a()[1] - tridiag.a()[0]) * params.j();
    let predicted = 2.0 * params.j() * (params.g() - 1.5);
    SlopeCheck {
        measured,
        predicted,
        residual: measured - predicted,
    }
}

/// Two-block structure of the coefficient sequences.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DomainStructure {
    /// Index separating the two blocks, when a clear gap exists. Heuristic:
    /// first interior local minimum of the smoothed b sequence after its first
    /// local maximum that drops below 70% of the running maximum, restricted to
    /// k < 0.9 d to stay clear of the endpoint falloff.
    pub boundary_k: Option<usize>,
    /// argmax of the raw b_k within the first block.
    pub k_s: Option<usize>,
    /// Smallest k > 0 whose local potential a_k - 2 b_k exceeds the conserved
    /// energy a_0.
    pub turning_point: Option<usize>,
}

fn moving_average(y: &[f64], half_width: usize) -> Vec<f64> {
    let n = y.len();
    let mut cumulative = Vec::with_capacity(n + 1);
    cumulative.push(0.0);
    let mut acc = 0.0;
    for &v in y {
        acc += v;
        cumulative.push(acc);
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half_width);
            let hi = (i + half_width + 1).min(n);
            (cumulative[hi] - cumulative[lo]) / (hi - lo) as f64
        })
        .collect()
}

pub fn domain_structure(tridiag: &TridiagonalHamiltonian) -> DomainStructure {
    let d = tridiag.dimension();
    let a = tridiag.a();
    let b = tridiag.b();

    let turning_point = (1..d).find(|&k| a[k] - 2.0 * b[k - 1] > a[0]);

    if d < 3 {
        return DomainStructure {
            boundary_k: None,
            k_s: if b.is_empty() { None } else { Some(1) },
            turning_point,
        };
    }

    let half_width = (d / 100).max(3);
    let smoothed = moving_average(b, half_width);
    let first_max = (1..smoothed.len().saturating_sub(1))
        .find(|&i| smoothed[i] >= smoothed[i - 1] && smoothed[i] >= smoothed[i + 1]);

    let mut boundary_k = None;
    if let Some(fm) = first_max {
        let mut running_max = smoothed[..=fm].iter().cloned().fold(f64::MIN, f64::max);
        let cap = (0.9 * d as f64) as usize;
        for i in fm + 1..smoothed.len() - 1 {
            running_max = running_max.max(smoothed[i]);
            let is_min = smoothed[i] <= smoothed[i - 1] && smoothed[i] <= smoothed[i + 1];
            // b[i] couples a-indices i and i+1: report the gap position i+1
            if is_min && smoothed[i] < 0.7 * running_max && i + 1 < cap {
                boundary_k = Some(i + 1);
                break;
            }
        }
    }

    let search_end = boundary_k.unwrap_or(d - 1).min(b.len());
    let k_s = (0..search_end)
        .max_by(|&i, &j| b[i].total_cmp(&b[j]))
        .map(|i| i + 1);

    DomainStructure {
        boundary_k,
        k_s,
        turning_point,
    }
}

/// Eigenvalue support interval estimated from the coefficients, plus the exact
/// extreme eigenvalues of the tridiagonal operator for comparison.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SpectrumBounds {
    pub lo: f64,
    pub hi: f64,
    pub exact_min: f64,
    pub exact_max: f64,
}

pub fn spectrum_bounds(tridiag: &TridiagonalHamiltonian) -> SpectrumBounds {
    let d = tridiag.dimension();
    let a = tridiag.a();
    let b = tridiag.b();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 0..d {
        let bk = if k == 0 { 0.0 } else { b[k - 1] };
        lo = lo.min(a[k] - 2.0 * bk);
        hi = hi.max(a[k] + 2.0 * bk);
    }
    let eig = symmetric_tridiagonal_eigen(a, b, false).expect("tridiagonal eigensolve");
    SpectrumBounds {
        lo,
        hi,
        exact_min: eig.values[0],
        exact_max: *eig.values.last().unwrap(),
    }
}

/// Continuum density of states from linearly interpolated coefficients:
/// rho(E) = (1/pi) * Int_0^1 dx Theta(4 b(x)^2 - (E - a(x))^2) / sqrt(...),
/// by midpoint quadrature with 10^4 subintervals.
pub fn dos_estimate(tridiag: &TridiagonalHamiltonian, energies: &[f64]) -> Vec<f64> {
    let d = tridiag.dimension();
    let a = tridiag.a();
    let b = tridiag.b();
    let denom = (d - 1).max(1) as f64;
    // a interpolates on nodes x_k = k/(d-1), k = 0..d-1; b on k = 1..d-1 with a
    // flat extension to x < x_1 so constant sequences reduce to the uniform chain
    let a_of = |x: f64| -> f64 {
        let pos = x * denom;
        let i = (pos.floor() as usize).min(d - 2);
        let frac = pos - i as f64;
        a[i] * (1.0 - frac) + a[i + 1] * frac
    };
    let b_of = |x: f64| -> f64 {
        if b.is_empty() {
            return 0.0;
        }
        let pos = x * denom; // node k at x = k/(d-1); b[k-1] lives at node k
        if pos <= 1.0 {
            return b[0];
        }
        let i = ((pos.floor() as usize).max(1)).min(d - 2);
        let frac = pos - i as f64;
        let left = b[i - 1];
        let right = if i < b.len() { b[i] } else { b[i - 1] };
        left * (1.0 - frac) + right * frac
    };

    const SUBDIVISIONS: usize = 10_000;
    let dx = 1.0 / SUBDIVISIONS as f64;
    energies
        .iter()
        .map(|&e| {
            let mut sum = 0.0;
            for i in 0..SUBDIVISIONS {
                let x = (i as f64 + 0.5) * dx;
                let bx = b_of(x);
                let ax = a_of(x);
                let disc = 4.0 * bx * bx - (e - ax) * (e - ax);
                if disc > 0.0 {
                    sum += dx / disc.sqrt();
                }
            }
            sum / std::f64::consts::PI
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_model::{build_hamiltonian_x, build_hamiltonian_z, initial_state};
    use approx::assert_abs_diff_eq;

    fn params(n: usize, h: f64, g: f64) -> ModelParams {
        ModelParams::new(n, 1.0, h, g).unwrap()
    }

    fn run_x(n: usize, h: f64, g: f64) -> KrylovDecomposition {
        let p = params(n, h, g);
        let op = build_hamiltonian_x(&p);
        let start = initial_state(&p, Basis::X);
        lanczos(&op, &start, &LanczosOptions::default()).unwrap()
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = params(4, 0.3, 0.7);
        let op = build_hamiltonian_x(&p);
        let mut amp = vec![Complex64::new(0.0, 0.0); 5];
        amp[0] = Complex64::new(0.7, 0.0);
        let bad = StateVector::new_unchecked(Basis::X, amp);
        assert!(lanczos(&op, &bad, &LanczosOptions::default()).is_err());

        let good = initial_state(&p, Basis::X);
        let opts = LanczosOptions {
            max_dim: Some(0),
            ..Default::default()
        };
        assert!(lanczos(&op, &good, &opts).is_err());
    }

    #[test]
    fn krylov_dimension_halves_at_h0() {
        // only even x-basis states couple, so d = N/2 + 1 with breakdown
        for &(n, g) in &[(2usize, 1.0), (6, 0.7), (40, 1.0), (40, 0.5), (60, 2.0)] {
            let dec = run_x(n, 0.0, g);
            assert_eq!(dec.dimension(), n / 2 + 1, "N={n} g={g}");
            assert!(
                matches!(dec.termination, Termination::Breakdown { .. }),
                "N={n} g={g}: {:?}",
                dec.termination
            );
        }
    }

    #[test]
    fn breakdown_spectrum_is_subset_of_operator_spectrum() {
        // on breakdown the Krylov space is exactly invariant, so every
        // eigenvalue of the d x d truncation appears in the operator spectrum
        let (n, h, g) = (40usize, 0.0, 0.8);
        let dec = run_x(n, h, g);
        assert!(matches!(dec.termination, Termination::Breakdown { .. }));
        let t_eig = symmetric_tridiagonal_eigen(dec.tridiag.a(), dec.tridiag.b(), false).unwrap();
        let op = build_hamiltonian_x(&params(n, h, g));
        let d = op.dim();
        let mut dense = nalgebra::DMatrix::<f64>::zeros(d, d);
        for i in 0..d {
            dense[(i, i)] = op.diag()[i];
            if i + 1 < d {
                dense[(i, i + 1)] = op.off1()[i];
                dense[(i + 1, i)] = op.off1()[i];
            }
            if i + 2 < d {
                dense[(i, i + 2)] = op.off2()[i];
                dense[(i + 2, i)] = op.off2()[i];
            }
        }
        let full: Vec<f64> = dense
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        for &lam in &t_eig.values {
            let nearest = full
                .iter()
                .map(|&mu| (mu - lam).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(
                nearest <= 1e-8 * n as f64,
                "lambda = {lam}: gap {nearest:e}"
            );
        }
    }

    #[test]
    fn h0_coefficients_match_even_sublattice_diagonal() {
        // at h=0 the Krylov vectors are exactly |S-2k>_x
        let n = 40;
        let g = 0.8;
        let dec = run_x(n, 0.0, g);
        let op = build_hamiltonian_x(&params(n, 0.0, g));
        for (k, &ak) in dec.tridiag.a().iter().enumerate() {
            assert_abs_diff_eq!(ak, op.diag()[2 * k], epsilon = 1e-10);
        }
    }

    #[test]
    fn orthonormality_and_recurrence() {
        let p = params(24, 0.4, 0.9);
        let op = build_hamiltonian_x(&p);
        let start = initial_state(&p, Basis::X);
        let dec = lanczos(&op, &start, &LanczosOptions::default()).unwrap();
        let d = dec.dimension();
        let basis = dec.basis();
        for m in 0..d {
            for nn in m..d {
                let overlap = dot(&basis[m], &basis[nn]).norm();
                let expect = if m == nn { 1.0 } else { 0.0 };
                assert!((overlap - expect).abs() <= 1e-10, "({m},{nn}): {overlap}");
            }
        }
        // reconstruction: H|K_k> = b_{k+1}|K_{k+1}> + a_k|K_k> + b_k|K_{k-1}>
        let scale = 1e-8 * p.n() as f64;
        let mut w = vec![Complex64::new(0.0, 0.0); op.dim()];
        for k in 0..d - 1 {
            op.apply(&basis[k], &mut w);
            let mut resid = 0.0f64;
            for i in 0..op.dim() {
                let mut expect = dec.tridiag.a()[k] * basis[k][i];
                if k > 0 {
                    expect += dec.tridiag.b()[k - 1] * basis[k - 1][i];
                }
                if k + 1 < d {
                    expect += dec.tridiag.b()[k] * basis[k + 1][i];
                }
                resid += (w[i] - expect).norm_sqr();
            }
            assert!(resid.sqrt() <= scale, "k={k}: residual {}", resid.sqrt());
        }
    }

    #[test]
    fn representation_independence() {
        // The coefficients depend only on the abstract (H, psi0) pair. In f64
        // the two runs drift apart at high k (the coefficient map is forward
        // unstable there, the same effect the high-index fluctuations show),
        // so entrywise agreement is asserted on the early window and the small
        // N = 12 case is checked at full depth.
        let check = |n: usize, h: f64, g: f64, depth: usize| {
            let p = params(n, h, g);
            let dx = lanczos(
                &build_hamiltonian_x(&p),
                &initial_state(&p, Basis::X),
                &LanczosOptions::default(),
            )
            .unwrap();
            let dz = lanczos(
                &build_hamiltonian_z(&p),
                &initial_state(&p, Basis::Z),
                &LanczosOptions::default(),
            )
            .unwrap();
            assert_eq!(dx.dimension(), dz.dimension());
            let tol = 1e-9 * n as f64;
            let depth = depth.min(dx.dimension());
            for k in 0..depth {
                let (ax, az) = (dx.tridiag.a()[k], dz.tridiag.a()[k]);
                assert!((ax - az).abs() <= tol, "N={n} k={k}: a {ax} vs {az}");
                if k + 1 < depth {
                    let (bx, bz) = (dx.tridiag.b()[k], dz.tridiag.b()[k]);
                    assert!((bx - bz).abs() <= tol, "N={n} k={k}: b {bx} vs {bz}");
                }
            }
            // full-depth functional equivalence: both coefficient sets carry
            // the same survival amplitude even where the raw entries drift
            let px = crate::propagator::KrylovPropagator::new(&dx.tridiag);
            let pz = crate::propagator::KrylovPropagator::new(&dz.tridiag);
            for i in 0..=100 {
                let t = 20.0 * i as f64 / 100.0;
                let diff = (px.phi0(t) - pz.phi0(t)).norm();
                assert!(diff <= 1e-8, "N={n} t={t}: |dphi0| = {diff:e}");
            }
        };
        check(12, 0.5, 1.0, usize::MAX);
        check(20, 0.3, 0.7, 21 / 5);
        check(40, 1.1, 2.2, 41 / 5);
        check(40, 0.5, 1.0, 41 / 5);
    }

    #[test]
    fn all_b_strictly_positive() {
        let dec = run_x(60, 0.5, 0.5);
        assert!(dec.tridiag.b().iter().all(|&b| b > 0.0));
    }

    #[test]
    fn closed_form_coefficients() {
        // N=4, J=1, g=1, h=0.5: a0 = -(Ng + 1/2), b1 = sqrt(Nh^2 + (N-1)/2N)
        let v = coefficient_closed_forms(&params(4, 0.5, 1.0));
        assert_abs_diff_eq!(v.a0, -4.5, epsilon = 1e-14);
        assert_abs_diff_eq!(v.b1, 1.375f64.sqrt(), epsilon = 1e-14);

        // h = 0: b1 = sqrt((N-1)/(2N))
        let v = coefficient_closed_forms(&params(10, 0.0, 0.7));
        assert_abs_diff_eq!(v.b1, (9.0 / 20.0f64).sqrt(), epsilon = 1e-14);

        // lanczos reproduces all three values
        let dec = run_x(12, 0.3, 0.7);
        let v = coefficient_closed_forms(&params(12, 0.3, 0.7));
        assert_abs_diff_eq!(dec.tridiag.a()[0], v.a0, epsilon = 1e-10);
        assert_abs_diff_eq!(dec.tridiag.b()[0], v.b1, epsilon = 1e-10);
        assert_abs_diff_eq!(dec.tridiag.a()[1], v.a1.unwrap(), epsilon = 1e-10);
    }

    #[test]
    fn slope_prediction() {
        // g = 3/2 makes the predicted slope vanish
        let p = params(40, 0.5, 1.5);
        let dec = run_x(40, 0.5, 1.5);
        let s = slope_check(&dec.tridiag, &p);
        assert_eq!(s.predicted, 0.0);

        // (N=400, h=0.5, g=0.5): |residual| <= 0.05 J
        let p = params(400, 0.5, 0.5);
        let dec = run_x(400, 0.5, 0.5);
        let s = slope_check(&dec.tridiag, &p);
        assert!(s.residual.abs() <= 0.05, "residual {}", s.residual);

        // residual halves (within 20%) when N doubles at fixed (h, g)
        let dec8 = run_x(800, 0.5, 0.5);
        let s8 = slope_check(&dec8.tridiag, &params(800, 0.5, 0.5));
        let ratio = s.residual / s8.residual;
        assert!((ratio - 2.0).abs() <= 0.4, "ratio {ratio}");
    }

    #[test]
    fn domain_structure_synthetic() {
        // monotone a, constant b: no boundary; turning point at k = 3
        let d = 50;
        let a: Vec<f64> = (0..d).map(|k| k as f64).collect();
        let b = vec![1.0; d - 1];
        let t = TridiagonalHamiltonian::new(a, b);
        let ds = domain_structure(&t);
        assert!(ds.boundary_k.is_none());
        assert_eq!(ds.turning_point, Some(3));
    }

    #[test]
    fn domain_structure_model_points() {
        // (h=0.5, g=0.5, N=400): two blocks; (h=0.5, g=3.0, N=400): single block
        let dec = run_x(400, 0.5, 0.5);
        let ds = domain_structure(&dec.tridiag);
        assert!(ds.boundary_k.is_some(), "expected a two-block structure");
        let boundary = ds.boundary_k.unwrap();
        let k_s = ds.k_s.unwrap();
        assert!(0 < k_s && k_s <= boundary && boundary < dec.dimension());

        let dec = run_x(400, 0.5, 3.0);
        let ds = domain_structure(&dec.tridiag);
        assert!(ds.boundary_k.is_none(), "got {:?}", ds.boundary_k);
    }

    #[test]
    fn spectrum_bounds_synthetic_chain() {
        let d = 50;
        let t = TridiagonalHamiltonian::new(vec![0.0; d], vec![1.0; d - 1]);
        let sb = spectrum_bounds(&t);
        assert_abs_diff_eq!(sb.lo, -2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sb.hi, 2.0, epsilon = 1e-14);
        let edge = 2.0 * (std::f64::consts::PI / 51.0).cos();
        assert_abs_diff_eq!(sb.exact_max, edge, epsilon = 1e-12);
        assert_abs_diff_eq!(sb.exact_min, -edge, epsilon = 1e-12);
    }

    #[test]
    fn spectrum_bounds_contain_eigenvalues_random_params() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        // the interval is exact only up to O(1/d) leakage; at h <= 0.2 with
        // g >= 2 the leakage is visible (~6e-3 NJ measured), so the strict
        // containment check samples the h >= 0.3 region
        for _ in 0..20 {
            let h = rng.gen_range(0.3..1.0);
            let g = rng.gen_range(0.05..3.0);
            let dec = run_x(100, h, g);
            let sb = spectrum_bounds(&dec.tridiag);
            let slack = 1e-9 * 100.0;
            assert!(
                sb.exact_min >= sb.lo - slack && sb.exact_max <= sb.hi + slack,
                "h={h} g={g}: [{}, {}] vs [{}, {}]",
                sb.exact_min,
                sb.exact_max,
                sb.lo,
                sb.hi
            );
        }
    }

    #[test]
    fn dos_reduces_to_arcsine_law() {
        let d = 200;
        let t = TridiagonalHamiltonian::new(vec![0.0; d], vec![1.0; d - 1]);
        for &e in &[0.0, 0.5, -1.2, 1.7] {
            let rho = dos_estimate(&t, &[e])[0];
            let expect = 1.0 / (std::f64::consts::PI * (4.0 - e * e).sqrt());
            assert!(
                (rho - expect).abs() / expect < 1e-3,
                "E={e}: {rho} vs {expect}"
            );
        }
    }

    #[test]
    fn dos_normalizes_and_tracks_histogram() {
        let dec = run_x(100, 0.5, 1.0);
        let sb = spectrum_bounds(&dec.tridiag);
        let margin = 0.02 * (sb.hi - sb.lo);
        let n_grid = 801;
        let energies: Vec<f64> = (0..n_grid)
            .map(|i| {
                sb.lo - margin + (sb.hi - sb.lo + 2.0 * margin) * i as f64 / (n_grid - 1) as f64
            })
            .collect();
        let rho = dos_estimate(&dec.tridiag, &energies);
        let de = energies[1] - energies[0];
        let integral: f64 = rho.iter().sum::<f64>() * de;
        assert!((integral - 1.0).abs() < 0.01, "integral {integral}");

        // histogram of exact eigenvalues vs integrated density, coarse bins
        let eig = symmetric_tridiagonal_eigen(dec.tridiag.a(), dec.tridiag.b(), false).unwrap();
        let d = dec.dimension() as f64;
        let n_bins = 10;
        for bin in 0..n_bins {
            let lo = sb.lo + (sb.hi - sb.lo) * bin as f64 / n_bins as f64;
            let hi = sb.lo + (sb.hi - sb.lo) * (bin + 1) as f64 / n_bins as f64;
            let count = eig.values.iter().filter(|&&v| v >= lo && v < hi).count() as f64 / d;
            let pred: f64 = energies
                .iter()
                .zip(&rho)
                .filter(|(e, _)| **e >= lo && **e < hi)
                .map(|(_, r)| r * de)
                .sum();
            assert!(
                (count - pred).abs() < 0.06,
                "bin {bin}: count {count} vs integral {pred}"
            );
        }
    }

    #[test]
    fn max_dim_cap_is_reported() {
        let p = params(40, 0.5, 1.0);
        let op = build_hamiltonian_x(&p);
        let start = initial_state(&p, Basis::X);
        let opts = LanczosOptions {
            max_dim: Some(7),
            ..Default::default()
        };
        let dec = lanczos(&op, &start, &opts).unwrap();
        assert_eq!(dec.dimension(), 7);
        assert_eq!(dec.termination, Termination::MaxDimReached);
    }
}
