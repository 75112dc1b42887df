//! Symmetric square roots of sampled diffusion matrices.

use crate::error::{Error, Result};
use crate::path::{PSD_TOLERANCE, SYMMETRY_TOLERANCE};
use crate::scalar::Real;

/// Eigenvalues below this are treated as exact zeros.
const EIGEN_FLOOR: f64 = 1e-14;

/// Cyclic Jacobi eigen-decomposition of a symmetric row-major `d x d`
/// matrix. Returns the eigenvalues and the row-major matrix whose columns are
/// the corresponding eigenvectors.
pub fn symmetric_eigen<T: Real>(a: &[T], d: usize) -> (Vec<T>, Vec<T>) {
    let mut m = a.to_vec();
    let mut v = vec![T::zero(); d * d];
    for i in 0..d {
        v[i * d + i] = T::one();
    }
    let scale = m.iter().fold(T::zero(), |s, x| s.max(x.abs()));
    let eps = T::epsilon() * scale;
    for _sweep in 0..64 {
        let mut off = T::zero();
        for p in 0..d {
            for q in p + 1..d {
                off = off.max(m[p * d + q].abs());
            }
        }
        if off <= eps {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = m[p * d + q];
                if apq.abs() <= eps {
                    continue;
                }
                let app = m[p * d + p];
                let aqq = m[q * d + q];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..d {
                    let mkp = m[k * d + p];
                    let mkq = m[k * d + q];
                    m[k * d + p] = c * mkp - s * mkq;
                    m[k * d + q] = s * mkp + c * mkq;
                }
                for k in 0..d {
                    let mpk = m[p * d + k];
                    let mqk = m[q * d + k];
                    m[p * d + k] = c * mpk - s * mqk;
                    m[q * d + k] = s * mpk + c * mqk;
                }
                for k in 0..d {
                    let vkp = v[k * d + p];
                    let vkq = v[k * d + q];
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..d).map(|i| m[i * d + i]).collect(), v)
}

/// Symmetric square root `sigma` with `sigma sigma' = a`.
///
/// Fails with [`Error::NotSymmetric`] or [`Error::NotPsd`] outside the
/// module tolerances; tiny negative eigenvalues are clamped to zero.
pub fn psd_factor<T: Real>(a: &[T], d: usize) -> Result<Vec<T>> {
    assert_eq!(a.len(), d * d, "diffusion matrix has wrong size");
    let tol = T::lit(PSD_TOLERANCE);
    let floor = T::lit(EIGEN_FLOOR);
    if d == 1 {
        let x = a[0];
        if x < -tol {
            return Err(Error::NotPsd { min_eigenvalue: x.to_f64_lossy() });
        }
        return Ok(vec![if x < floor { T::zero() } else { x.sqrt() }]);
    }

    let mut asym = T::zero();
    let mut norm = T::zero();
    for i in 0..d {
        let mut row_asym = T::zero();
        let mut row_norm = T::zero();
        for j in 0..d {
            row_asym = row_asym + (a[i * d + j] - a[j * d + i]).abs();
            row_norm = row_norm + a[i * d + j].abs();
        }
        asym = asym.max(row_asym);
        norm = norm.max(row_norm);
    }
    let sym_tol = T::lit(SYMMETRY_TOLERANCE).max(T::lit(8.0) * T::epsilon()) * norm.max(T::one());
    if asym > sym_tol {
        return Err(Error::NotSymmetric { asymmetry: asym.to_f64_lossy() });
    }

    let (eig, v) = symmetric_eigen(a, d);
    let min = eig.iter().fold(T::infinity(), |m, &x| m.min(x));
    if min < -tol {
        return Err(Error::NotPsd { min_eigenvalue: min.to_f64_lossy() });
    }
    let roots: Vec<T> = eig
        .iter()
        .map(|&l| if l < floor { T::zero() } else { l.sqrt() })
        .collect();
    let mut sigma = vec![T::zero(); d * d];
    for i in 0..d {
        for j in 0..d {
            let mut s = T::zero();
            for k in 0..d {
                s = s + v[i * d + k] * roots[k] * v[j * d + k];
            }
            sigma[i * d + j] = s;
        }
    }
    Ok(sigma)
}
