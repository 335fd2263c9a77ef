//! Dense Cholesky factorization for the small symmetric systems used here.

use crate::scalar::Scalar;

/// Lower-triangular factor of a row-major `n × n` positive-definite matrix,
/// or `None` when a pivot is not strictly positive.
pub(crate) fn cholesky<T: Scalar>(a: &[T], n: usize) -> Option<Vec<T>> {
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(sum > T::zero()) {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves `L·Lᵀ·x = b` given the factor from [`cholesky`].
pub(crate) fn cholesky_solve<T: Scalar>(l: &[T], n: usize, b: &[T]) -> Vec<T> {
    let mut z = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            let t = l[i * n + k] * z[k];
            z[i] -= t;
        }
        z[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            let t = l[k * n + i] * z[k];
            z[i] -= t;
        }
        z[i] /= l[i * n + i];
    }
    z
}

/// A non-zero `v` with `A·v ≈ 0` for a row-major `rows × cols` matrix, or
/// `None` when the columns are independent.
pub(crate) fn null_vector<T: Scalar>(a: &[T], rows: usize, cols: usize) -> Option<Vec<T>> {
    let mut m = a.to_vec();
    let scale = m.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    if scale == T::zero() {
        let mut v = vec![T::zero(); cols];
        v[0] = T::one();
        return Some(v);
    }
    let eps = scale * T::epsilon() * T::of(((rows.max(cols)) * 64) as f64);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let piv = (r..rows).max_by(|&x, &y| m[x * cols + c].abs().partial_cmp(&m[y * cols + c].abs()).unwrap())?;
        if m[piv * cols + c].abs() <= eps {
            continue;
        }
        for k in 0..cols {
            m.swap(r * cols + k, piv * cols + k);
        }
        let d = m[r * cols + c];
        for k in 0..cols {
            m[r * cols + k] /= d;
        }
        for i in 0..rows {
            if i != r {
                let f = m[i * cols + c];
                if f != T::zero() {
                    for k in 0..cols {
                        let t = f * m[r * cols + k];
                        m[i * cols + k] -= t;
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free = (0..cols).find(|c| !pivots.contains(c))?;
    let mut v = vec![T::zero(); cols];
    v[free] = T::one();
    for (row, &pc) in pivots.iter().enumerate() {
        v[pc] = -m[row * cols + free];
    }
    Some(v)
}
