use crate::error::{Result, XwalkError};
use crate::scalar::Scalar;

/// Solves a tridiagonal system by the Thomas algorithm.
///
/// `lower[i]` multiplies x[i−1] in row i (lower[0] unused), `upper[i]`
/// multiplies x[i+1] (upper[last] unused). `rhs` is overwritten by the solution.
pub fn solve_tridiagonal<T: Scalar>(
    lower: &[T],
    diag: &[T],
    upper: &[T],
    rhs: &mut [T],
    scratch: &mut Vec<T>,
) -> Result<()> {
    let n = diag.len();
    if n == 0 {
        return Ok(());
    }
    scratch.clear();
    scratch.resize(n, T::zero());
    let mut beta = diag[0];
    if beta == T::zero() {
        return Err(XwalkError::SchemeFailure("zero pivot in tridiagonal solve".into()));
    }
    rhs[0] = rhs[0] / beta;
    for i in 1..n {
        scratch[i] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * scratch[i];
        if beta == T::zero() {
            return Err(XwalkError::SchemeFailure("zero pivot in tridiagonal solve".into()));
        }
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] = rhs[i] - scratch[i + 1] * next;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_known_system() {
        // [2 1 0; 1 3 1; 0 1 2] x = [3, 5, 3] → x = [1, 1, 1]
        let lower = [0.0, 1.0, 1.0];
        let diag = [2.0, 3.0, 2.0];
        let upper = [1.0, 1.0, 0.0];
        let mut rhs = [3.0, 5.0, 3.0];
        solve_tridiagonal(&lower, &diag, &upper, &mut rhs, &mut Vec::new()).unwrap();
        for v in rhs {
            assert!((v - 1.0f64).abs() < 1e-15);
        }
        let mut rhs32 = [3.0f32, 5.0, 3.0];
        solve_tridiagonal(
            &[0.0f32, 1.0, 1.0],
            &[2.0, 3.0, 2.0],
            &[1.0, 1.0, 0.0],
            &mut rhs32,
            &mut Vec::new(),
        )
        .unwrap();
        assert!((rhs32[1] - 1.0).abs() < 1e-6);
    }
}
