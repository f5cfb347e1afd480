//! Symmetric tridiagonal eigensolver (implicit QL with Wilkinson shifts).
//!
//! Generic over the scalar so the same routine runs in `f64` for the ordinary
//! pipelines and in double-double precision for the high-accuracy survival
//! amplitude. The algorithm follows the classical EISPACK `imtql2`/`tql2`
//! lineage.

use crate::dd::Dd;
use crate::error::{Error, Result};

/// Scalar field required by the eigensolver.
pub trait Real:
    Copy
    + PartialOrd
    + std::fmt::Debug
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
{
    const ZERO: Self;
    const ONE: Self;
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
}

impl Real for f64 {
    const ZERO: f64 = 0.0;
    const ONE: f64 = 1.0;
    #[inline]
    fn from_f64(x: f64) -> f64 {
        x
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    #[inline]
    fn sqrt(self) -> f64 {
        f64::sqrt(self)
    }
}

impl Real for Dd {
    const ZERO: Dd = Dd::ZERO;
    const ONE: Dd = Dd::ONE;
    #[inline]
    fn from_f64(x: f64) -> Dd {
        Dd::from_f64(x)
    }
    #[inline]
    fn to_f64(self) -> f64 {
        Dd::to_f64(self)
    }
    #[inline]
    fn abs(self) -> Dd {
        Dd::abs(self)
    }
    #[inline]
    fn sqrt(self) -> Dd {
        Dd::sqrt(self)
    }
}

/// Eigendecomposition of a real symmetric tridiagonal matrix.
///
/// Eigenvalues are ascending; `vectors` is row-major with column `m` holding the
/// orthonormal eigenvector of `values[m]`.
pub struct TridiagonalEigen<R: Real> {
    pub values: Vec<R>,
    pub vectors: Vec<R>,
    pub n: usize,
}

impl<R: Real> TridiagonalEigen<R> {
    #[inline]
    pub fn vector_component(&self, row: usize, col: usize) -> R {
        self.vectors[row * self.n + col]
    }
}

#[inline]
fn pythag<R: Real>(a: R, b: R) -> R {
    let absa = a.abs();
    let absb = b.abs();
    if absa > absb {
        let r = absb / absa;
        absa * (R::ONE + r * r).sqrt()
    } else if absb > R::ZERO {
        let r = absa / absb;
        absb * (R::ONE + r * r).sqrt()
    } else {
        R::ZERO
    }
}

/// Implicit-shift QL on (diag, off); returns eigenvalues ascending and, when
/// requested, the accumulated orthogonal eigenvector matrix.
pub fn symmetric_tridiagonal_eigen<R: Real>(
    diag: &[R],
    off: &[R],
    want_vectors: bool,
) -> Result<TridiagonalEigen<R>> {
    let n = diag.len();
    assert_eq!(off.len(), n.saturating_sub(1), "off-diagonal length");
    let mut d: Vec<R> = diag.to_vec();
    // e[i] couples i and i+1; e[n-1] is workspace
    let mut e: Vec<R> = off.to_vec();
    e.push(R::ZERO);

    let mut z: Vec<R> = if want_vectors {
        let mut z = vec![R::ZERO; n * n];
        for i in 0..n {
            z[i * n + i] = R::ONE;
        }
        z
    } else {
        Vec::new()
    };

    let two = R::from_f64(2.0);
    let max_iter = 60;

    for l in 0..n {
        let mut iter = 0;
        loop {
            // locate a negligible off-diagonal element
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                // relies on the scalar's own rounding: e[m] negligible vs dd
                if e[m].abs() + dd == dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > max_iter {
                return Err(Error::NoConvergence { index: l });
            }
            // Wilkinson shift
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = pythag(g, R::ONE);
            let sign_r = if g >= R::ZERO { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let mut s = R::ONE;
            let mut c = R::ONE;
            let mut p = R::ZERO;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = pythag(f, g);
                e[i + 1] = r;
                if r == R::ZERO {
                    // recover from underflow by deflating
                    d[i + 1] = d[i + 1] - p;
                    e[m] = R::ZERO;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if want_vectors {
                    for row in 0..n {
                        let idx = row * n + i;
                        f = z[idx + 1];
                        z[idx + 1] = s * z[idx] + c * f;
                        z[idx] = c * z[idx] - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = R::ZERO;
        }
    }

    // sort ascending, permuting eigenvector columns alongside
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).expect("non-NaN eigenvalues"));
    let values: Vec<R> = order.iter().map(|&i| d[i]).collect();
    let vectors = if want_vectors {
        let mut sorted = vec![R::ZERO; n * n];
        for (new_col, &old_col) in order.iter().enumerate() {
            for row in 0..n {
                sorted[row * n + new_col] = z[row * n + old_col];
            }
        }
        sorted
    } else {
        Vec::new()
    };

    Ok(TridiagonalEigen { values, vectors, n })
}
