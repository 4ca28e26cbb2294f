//! Small dense linear algebra on row-major square matrices of any [`Scalar`].

use crate::scalar::Scalar;
use crate::tensor::TensorError;

/// Condition number above which a metric counts as singular.
pub const SINGULAR_COND: f64 = 1e12;
/// Largest tolerated |m_ij − m_ji| relative to max |m|.
pub const SYMMETRY_TOL: f64 = 1e-12;

fn norm1(m: &[f64], k: usize) -> f64 {
    (0..k).map(|j| (0..k).map(|i| m[i * k + j].abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Gauss–Jordan inverse with partial pivoting. Pivots are chosen on real
/// parts so derivative layers follow the same elimination path.
/// Returns `(inverse, determinant)`.
pub fn invert<S: Scalar>(m: &[S], k: usize) -> Result<(Vec<S>, S), TensorError> {
    assert_eq!(m.len(), k * k);
    let mut a = m.to_vec();
    let mut inv = vec![S::zero(); k * k];
    for i in 0..k {
        inv[i * k + i] = S::one();
    }
    let mut det = S::one();
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&r, &s| a[r * k + col].re().abs().total_cmp(&a[s * k + col].re().abs()))
            .unwrap();
        if a[piv * k + col].re() == 0.0 {
            return Err(TensorError::SingularMetric { det: 0.0, cond: f64::INFINITY });
        }
        if piv != col {
            for j in 0..k {
                a.swap(piv * k + j, col * k + j);
                inv.swap(piv * k + j, col * k + j);
            }
            det = -det;
        }
        let p = a[col * k + col];
        det *= p;
        for j in 0..k {
            a[col * k + j] /= p;
            inv[col * k + j] /= p;
        }
        for r in 0..k {
            if r == col {
                continue;
            }
            let f = a[r * k + col];
            if f.is_exact_zero() {
                continue;
            }
            for j in 0..k {
                let (ac, ic) = (a[col * k + j], inv[col * k + j]);
                a[r * k + j] -= f * ac;
                inv[r * k + j] -= f * ic;
            }
        }
    }
    let re_m: Vec<f64> = m.iter().map(|v| v.re()).collect();
    let re_inv: Vec<f64> = inv.iter().map(|v| v.re()).collect();
    let cond = norm1(&re_m, k) * norm1(&re_inv, k);
    if !cond.is_finite() || cond > SINGULAR_COND {
        return Err(TensorError::SingularMetric { det: det.re(), cond });
    }
    Ok((inv, det))
}

/// 1-norm condition number of `m` (∞ when singular).
pub fn condition(m: &[f64], k: usize) -> f64 {
    match invert(m, k) {
        Ok((inv, _)) => norm1(m, k) * norm1(&inv, k),
        Err(TensorError::SingularMetric { cond, .. }) => cond,
        Err(_) => f64::INFINITY,
    }
}

/// Inverse of a symmetric matrix; the result is symmetrised.
pub fn sym_inverse<S: Scalar>(m: &[S], k: usize) -> Result<Vec<S>, TensorError> {
    let scale = m.iter().map(|v| v.re().abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut asym = 0.0f64;
    for i in 0..k {
        for j in 0..i {
            asym = asym.max((m[i * k + j].re() - m[j * k + i].re()).abs() / scale);
        }
    }
    if asym > SYMMETRY_TOL {
        return Err(TensorError::NotSymmetric { asym });
    }
    let (mut inv, _) = invert(m, k)?;
    let half = S::cst(0.5);
    for i in 0..k {
        for j in 0..i {
            let v = (inv[i * k + j] + inv[j * k + i]) * half;
            inv[i * k + j] = v;
            inv[j * k + i] = v;
        }
    }
    Ok(inv)
}

/// Determinant by elimination (zero when singular).
pub fn det<S: Scalar>(m: &[S], k: usize) -> S {
    let mut a = m.to_vec();
    let mut det = S::one();
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&r, &s| a[r * k + col].re().abs().total_cmp(&a[s * k + col].re().abs()))
            .unwrap();
        if a[piv * k + col].re() == 0.0 {
            return S::zero();
        }
        if piv != col {
            for j in 0..k {
                a.swap(piv * k + j, col * k + j);
            }
            det = -det;
        }
        let p = a[col * k + col];
        det *= p;
        for r in col + 1..k {
            let f = a[r * k + col] / p;
            for j in col..k {
                let v = a[col * k + j];
                a[r * k + j] -= f * v;
            }
        }
    }
    det
}

/// Eigenvalues of a symmetric real matrix, ascending.
pub fn sym_eigenvalues(m: &[f64], k: usize) -> Vec<f64> {
    let mat = nalgebra::DMatrix::from_row_slice(k, k, m);
    let mut ev: Vec<f64> = mat.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}
