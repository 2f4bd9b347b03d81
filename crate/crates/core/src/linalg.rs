use crate::scalar::Scalar;
use crate::{Error, Result};

/// Solves `a x = b` for a dense row-major `n × n` matrix by Gaussian
/// elimination with partial pivoting.
pub(crate) fn solve<T: Scalar>(mut a: Vec<T>, mut b: Vec<T>) -> Result<Vec<T>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| {
                a[r * n + col]
                    .abs()
                    .partial_cmp(&a[s * n + col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(s.cmp(&r))
            })
            .expect("nonempty range");
        if a[pivot * n + col].is_zero() {
            return Err(Error::Domain(format!("singular system at column {col}")));
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
            }
            b.swap(pivot, col);
        }
        let diag = a[col * n + col].clone();
        for row in col + 1..n {
            let factor = a[row * n + col].clone() / diag.clone();
            if factor.is_zero() {
                continue;
            }
            a[row * n + col] = T::zero();
            for k in col + 1..n {
                let delta = factor.clone() * a[col * n + k].clone();
                a[row * n + k] = a[row * n + k].clone() - delta;
            }
            let delta = factor * b[col].clone();
            b[row] = b[row].clone() - delta;
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row].clone();
        for k in row + 1..n {
            acc = acc - a[row * n + k].clone() * x[k].clone();
        }
        x[row] = acc / a[row * n + row].clone();
    }
    Ok(x)
}
