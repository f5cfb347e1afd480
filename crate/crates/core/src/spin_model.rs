//! Collective-spin model: Hamiltonian construction in both spin eigenbases,
//! quench initial state, semiclassical energy landscape, and ground-state
//! references.
//!
//! The model is `H = -2J [ (S^z)^2 / N + h S^z + g S^x ]` restricted to the
//! maximal-spin sector `S = N/2`. Operators are stored in units of `J`
//! (i.e. the banded matrices represent `H/J`); physical energies returned by
//! the ops carry the `J` factor.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::symmetric_tridiagonal_eigen;

/// Quench-problem definition.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ModelParams {
    n: usize,
    j: f64,
    h: f64,
    g: f64,
}

impl ModelParams {
    pub fn new(n: usize, j: f64, h: f64, g: f64) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::InvalidParameter {
                field: "n",
                message: format!("must be an even integer >= 2, got {n}"),
            });
        }
        if !j.is_finite() || j <= 0.0 {
            return Err(Error::InvalidParameter {
                field: "j",
                message: format!("must be a positive finite real, got {j}"),
            });
        }
        if !h.is_finite() || h < 0.0 {
            return Err(Error::InvalidParameter {
                field: "h",
                message: format!("must be a nonnegative finite real, got {h}"),
            });
        }
        if !g.is_finite() || g < 0.0 {
            return Err(Error::InvalidParameter {
                field: "g",
                message: format!("must be a nonnegative finite real, got {g}"),
            });
        }
        Ok(ModelParams { n, j, h, g })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn j(&self) -> f64 {
        self.j
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn g(&self) -> f64 {
        self.g
    }
    /// Hilbert-space dimension of the S = N/2 sector.
    pub fn dim(&self) -> usize {
        self.n + 1
    }
}

/// Spin eigenbasis tag; index k = 0..N labels |S-k> (k = 0 is m = S).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Basis {
    X,
    Z,
}

/// Complex amplitudes over a tagged spin eigenbasis.
#[derive(Clone, Debug)]
pub struct StateVector {
    basis: Basis,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Wraps amplitudes, rejecting norms off unity by more than 1e-8.
    pub fn new(basis: Basis, amplitudes: Vec<Complex64>) -> Result<Self> {
        let state = StateVector { basis, amplitudes };
        let deviation = (state.norm() - 1.0).abs();
        if deviation > 1e-8 {
            return Err(Error::NotNormalized { deviation });
        }
        Ok(state)
    }

    pub(crate) fn new_unchecked(basis: Basis, amplitudes: Vec<Complex64>) -> Self {
        StateVector { basis, amplitudes }
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }
    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Real symmetric banded matrix with bandwidth <= 2, in units of J.
#[derive(Clone, Debug)]
pub struct BandedOperator {
    dim: usize,
    diag: Vec<f64>,
    off1: Vec<f64>,
    off2: Vec<f64>,
}

impl BandedOperator {
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }
    /// First superdiagonal; entry k-1 couples indices k-1 and k.
    pub fn off1(&self) -> &[f64] {
        &self.off1
    }
    /// Second superdiagonal; entry k-2 couples indices k-2 and k.
    pub fn off2(&self) -> &[f64] {
        &self.off2
    }
    pub fn is_tridiagonal(&self) -> bool {
        self.off2.iter().all(|&x| x == 0.0)
    }

    /// out = (H/J) v
    pub fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        let n = self.dim;
        assert_eq!(v.len(), n);
        assert_eq!(out.len(), n);
        for k in 0..n {
            out[k] = self.diag[k] * v[k];
        }
        for k in 0..n - 1 {
            let c = self.off1[k];
            if c != 0.0 {
                out[k] += c * v[k + 1];
                out[k + 1] += c * v[k];
            }
        }
        for k in 0..n.saturating_sub(2) {
            let c = self.off2[k];
            if c != 0.0 {
                out[k] += c * v[k + 2];
                out[k + 2] += c * v[k];
            }
        }
    }
}

/// C_k = sqrt(k (N+1-k)), the S^+/S^- ladder coefficient; zero outside 1..=N.
pub(crate) fn ladder_coeff(k: usize, n: usize) -> f64 {
    if k == 0 || k > n {
        0.0
    } else {
        ((k as f64) * ((n + 1 - k) as f64)).sqrt()
    }
}

/// Pentadiagonal representation of H/J in the S^x eigenbasis.
pub fn build_hamiltonian_x(params: &ModelParams) -> BandedOperator {
    let n = params.n;
    let nf = n as f64;
    let g = params.g;
    let h = params.h;
    let dim = n + 1;
    let mut diag = Vec::with_capacity(dim);
    for k in 0..dim {
        let ck = ladder_coeff(k, n);
        let ck1 = ladder_coeff(k + 1, n);
        diag.push(
            -nf * ((ck * ck + ck1 * ck1) / (2.0 * nf * nf) + (1.0 - 2.0 * k as f64 / nf) * g),
        );
    }
    let off1: Vec<f64> = (1..dim).map(|k| -h * ladder_coeff(k, n)).collect();
    let off2: Vec<f64> = (2..dim)
        .map(|k| -ladder_coeff(k - 1, n) * ladder_coeff(k, n) / (2.0 * nf))
        .collect();
    BandedOperator {
        dim,
        diag,
        off1,
        off2,
    }
}

/// Tridiagonal representation of H/J in the S^z eigenbasis.
///
/// The hopping uses the exact ladder coefficient C_k = sqrt(k(N+1-k)) so both
/// basis representations describe the identical operator; the large-N form
/// sqrt(k(N-k)) breaks spectral equivalence at O(1/N).
pub fn build_hamiltonian_z(params: &ModelParams) -> BandedOperator {
    let n = params.n;
    let nf = n as f64;
    let h = params.h;
    let g = params.g;
    let dim = n + 1;
    // algebraically identical to -N [2 (k/N - (1+h)/2)^2 - h^2/2], written so a
    // degenerate pair (k, 2 k* - k) of the g = 0 parabola evaluates to exactly
    // the same float (the Lanczos breakdown that defines the reduced Krylov
    // dimension at g = 0 hinges on those degeneracies surviving rounding)
    let k_star = 0.5 * (1.0 + h) * nf;
    let diag: Vec<f64> = (0..dim)
        .map(|k| {
            let dk = k as f64 - k_star;
            -2.0 * dk * dk / nf + 0.5 * nf * h * h
        })
        .collect();
    let off1: Vec<f64> = (1..dim).map(|k| -g * ladder_coeff(k, n)).collect();
    BandedOperator {
        dim,
        diag,
        off1,
        off2: vec![0.0; dim - 2],
    }
}

/// ln(n!) accurate to ~1e-15 for all n.
fn ln_factorial(n: usize) -> f64 {
    if n < 256 {
        // compensated cumulative sum of ln k
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for k in 2..=n {
            let y = (k as f64).ln() - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        sum
    } else {
        // Stirling series
        let x = n as f64;
        let x2 = x * x;
        x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln() + 1.0 / (12.0 * x)
            - 1.0 / (360.0 * x * x2)
            + 1.0 / (1260.0 * x2 * x2 * x)
    }
}

/// Quench initial state |S>_x, expressed in the requested basis.
///
/// In the z basis the amplitudes are (1/2)^{N/2} sqrt(binomial(N, k)),
/// evaluated through log-factorials so arbitrary even N stays in range.
pub fn initial_state(params: &ModelParams, basis: Basis) -> StateVector {
    let n = params.n;
    let dim = n + 1;
    match basis {
        Basis::X => {
            let mut amp = vec![Complex64::new(0.0, 0.0); dim];
            amp[0] = Complex64::new(1.0, 0.0);
            StateVector::new_unchecked(Basis::X, amp)
        }
        Basis::Z => {
            let ln2 = std::f64::consts::LN_2;
            let lnf_n = ln_factorial(n);
            let amp: Vec<Complex64> = (0..dim)
                .map(|k| {
                    let ln_c = 0.5 * (lnf_n - ln_factorial(k) - ln_factorial(n - k))
                        - (n as f64 / 2.0) * ln2;
                    Complex64::new(ln_c.exp(), 0.0)
                })
                .collect();
            StateVector::new_unchecked(Basis::Z, amp)
        }
    }
}

/// Gaussian large-N approximation of the z-basis initial state, renormalized.
pub fn gaussian_approx_z(params: &ModelParams) -> StateVector {
    let n = params.n as f64;
    let dim = params.n + 1;
    let prefactor = (2.0 / (std::f64::consts::PI * n)).powf(0.25);
    let mut amp: Vec<f64> = (0..dim)
        .map(|k| {
            let x = k as f64 / n - 0.5;
            prefactor * (-n * x * x).exp()
        })
        .collect();
    let norm = amp.iter().map(|a| a * a).sum::<f64>().sqrt();
    for a in &mut amp {
        *a /= norm;
    }
    StateVector::new_unchecked(
        Basis::Z,
        amp.into_iter().map(|a| Complex64::new(a, 0.0)).collect(),
    )
}

/// Semiclassical energy E(theta) = -NJ (cos^2(theta)/2 + h cos(theta) + g sin(theta)).
pub fn semiclassical_energy(theta: f64, params: &ModelParams) -> f64 {
    let (s, c) = theta.sin_cos();
    -(params.n as f64) * params.j * (0.5 * c * c + params.h * c + params.g * s)
}

/// Phase classification of the (h, g) point from the semiclassical landscape.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PhaseClassification {
    pub h: f64,
    pub g: f64,
    /// Global minimizer of E(theta) on [0, pi].
    pub theta_star: f64,
    pub has_metastable: bool,
    /// Local, non-global minimizer when present.
    pub theta_meta: Option<f64>,
    /// Spinodal boundary (1 - h^{2/3})^{3/2} for 0 < h < 1, else 0.
    pub spinodal_g: f64,
}

/// dE/dtheta up to the -NJ scale (sign flipped accordingly).
fn landscape_derivative(theta: f64, h: f64, g: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    s * c + h * s - g * c
}

fn landscape(theta: f64, h: f64, g: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    -(0.5 * c * c + h * c + g * s)
}

pub fn classify_phase(h: f64, g: f64) -> PhaseClassification {
    let spinodal_g = if h > 0.0 && h < 1.0 {
        (1.0 - h.powf(2.0 / 3.0)).powf(1.5)
    } else {
        0.0
    };
    let has_metastable = h > 0.0 && h < 1.0 && g < spinodal_g;

    // dense grid, then bisection on the derivative at each sign change
    let n_grid = 10_001;
    let step = std::f64::consts::PI / (n_grid - 1) as f64;
    let mut minima: Vec<f64> = Vec::new();
    let mut prev = landscape_derivative(0.0, h, g);
    for i in 1..n_grid {
        let theta = i as f64 * step;
        let cur = landscape_derivative(theta, h, g);
        if prev < 0.0 && cur >= 0.0 {
            // derivative crosses upward: local minimum
            let (mut lo, mut hi) = (theta - step, theta);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if hi - lo < 1e-12 {
                    break;
                }
                if landscape_derivative(mid, h, g) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            minima.push(0.5 * (lo + hi));
        }
        prev = cur;
    }
    // boundary candidates: theta = 0 (derivative > 0 there) and theta = pi
    if landscape_derivative(0.0, h, g) >= 0.0 || g == 0.0 {
        minima.insert(0, 0.0);
    }
    if landscape_derivative(std::f64::consts::PI, h, g) <= 0.0 {
        minima.push(std::f64::consts::PI);
    }
    minima.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

    let theta_star = minima
        .iter()
        .copied()
        .min_by(|&a, &b| landscape(a, h, g).total_cmp(&landscape(b, h, g)))
        .unwrap_or(0.0);
    // a second minimum strictly above the global one (a degenerate partner,
    // as at h = 0 with g < 1, is not metastable)
    let e_star = landscape(theta_star, h, g);
    let theta_meta = minima
        .iter()
        .copied()
        .filter(|&t| (t - theta_star).abs() > 1e-9 && landscape(t, h, g) > e_star + 1e-12)
        .min_by(|&a, &b| landscape(a, h, g).total_cmp(&landscape(b, h, g)));

    PhaseClassification {
        h,
        g,
        theta_star,
        has_metastable,
        theta_meta,
        spinodal_g,
    }
}

/// Lowest eigenpair of the z-basis Hamiltonian.
#[derive(Clone, Debug)]
pub struct GroundState {
    /// Energy in physical units (eigenvalue of H/J times J).
    pub energy: f64,
    pub state: StateVector,
    /// Set when the gap to the next level is below 1e-8 * N * J.
    pub near_degenerate: bool,
}

pub fn ground_state(params: &ModelParams) -> GroundState {
    let op = build_hamiltonian_z(params);
    let eig = symmetric_tridiagonal_eigen(op.diag(), op.off1(), true)
        .expect("tridiagonal eigensolver converges");
    let n = op.dim();
    let mut amp: Vec<Complex64> = (0..n)
        .map(|k| Complex64::new(eig.vector_component(k, 0), 0.0))
        .collect();
    // global phase: largest-magnitude amplitude real positive
    let k_max = (0..n)
        .max_by(|&a, &b| amp[a].norm_sqr().total_cmp(&amp[b].norm_sqr()))
        .unwrap();
    if amp[k_max].re < 0.0 {
        for a in &mut amp {
            *a = -*a;
        }
    }
    let norm = amp.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amp {
        *a /= norm;
    }
    let gap = eig.values[1] - eig.values[0];
    GroundState {
        energy: eig.values[0] * params.j,
        state: StateVector::new_unchecked(Basis::Z, amp),
        near_degenerate: gap < 1e-8 * params.n as f64,
    }
}

/// Expectation values (<S^z>, <S^x>) of a normalized state.
///
/// In the z basis S^z is diagonal and S^x hops with matrix element C_k/2.
/// In the x basis the roles mirror: S^x is diagonal and S^z carries the same
/// tridiagonal structure (with this index convention both off-diagonals are
/// +C_k/2).
pub fn spin_expectations(state: &StateVector) -> Result<(f64, f64)> {
    let deviation = (state.norm() - 1.0).abs();
    if deviation > 1e-8 {
        return Err(Error::NotNormalized { deviation });
    }
    let n = state.dim() - 1;
    let amp = state.amplitudes();
    let diagonal: f64 = amp
        .iter()
        .enumerate()
        .map(|(k, c)| (n as f64 / 2.0 - k as f64) * c.norm_sqr())
        .sum();
    let hopping: f64 = (1..=n)
        .map(|k| (amp[k - 1].conj() * amp[k]).re * ladder_coeff(k, n))
        .sum();
    match state.basis() {
        Basis::Z => Ok((diagonal, hopping)),
        Basis::X => Ok((hopping, diagonal)),
    }
}
