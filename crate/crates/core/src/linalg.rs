//! Small dense linear-algebra helpers on top of `nalgebra`.

use alloc::format;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

pub type Matrix = DMatrix<f64>;

/// Builds a matrix from row-major nested rows.
pub fn from_rows(rows: &[&[f64]]) -> Matrix {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    Matrix::from_fn(nrows, ncols, |i, j| rows[i][j])
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn sym_eig_extremes(m: &Matrix) -> (f64, f64) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in eig.eigenvalues.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// Spectral (induced 2-) norm, from the largest eigenvalue of the Gram matrix.
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = m.transpose() * m;
    let (_, hi) = sym_eig_extremes(&gram);
    hi.max(0.0).sqrt()
}

/// Largest real part among the eigenvalues of a square matrix.
pub fn spectral_abscissa(m: &Matrix) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn one_norm(m: &Matrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

// Diagonal Padé (6, 6) coefficients for exp.
const PADE6: [f64; 7] = [
    1.0,
    0.5,
    5.0 / 44.0,
    1.0 / 66.0,
    1.0 / 792.0,
    1.0 / 15840.0,
    1.0 / 665280.0,
];

/// Matrix exponential by scaling and squaring on a (6, 6) Padé approximant.
///
/// The argument is scaled until its 1-norm is at most 1/2, where the
/// truncation error of the approximant is far below 1e-15.
pub fn expm(m: &Matrix) -> Result<Matrix> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Dimension {
            expected: n,
            got: m.ncols(),
        });
    }
    let norm = one_norm(m);
    if !norm.is_finite() {
        return Err(Error::Numerical(format!("expm of non-finite matrix (norm {norm})")));
    }
    let mut squarings = 0u32;
    if norm > 0.5 {
        squarings = (norm / 0.5).log2().ceil() as u32;
    }
    let scaled = m / 2f64.powi(squarings as i32);

    let ident = Matrix::identity(n, n);
    let mut power = ident.clone();
    let mut num = ident.clone() * PADE6[0];
    let mut den = ident.clone() * PADE6[0];
    for (k, &c) in PADE6.iter().enumerate().skip(1) {
        power = &power * &scaled;
        num += &power * c;
        if k % 2 == 0 {
            den += &power * c;
        } else {
            den -= &power * c;
        }
    }
    let mut result = den
        .lu()
        .solve(&num)
        .ok_or_else(|| Error::Numerical("singular Pade denominator in expm".into()))?;
    for _ in 0..squarings {
        result = &result * &result;
    }
    Ok(result)
}

/// Returns `(exp(A T), ∫₀ᵀ exp(A v) dv)` from one exponential of the block
/// matrix `[[A, I], [0, 0]]·T`.
pub fn expm_with_integral(a: &Matrix, t: f64) -> Result<(Matrix, Matrix)> {
    let n = a.nrows();
    let mut block = Matrix::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(&(a * t));
    for i in 0..n {
        block[(i, n + i)] = t;
    }
    let e = expm(&block)?;
    Ok((
        e.view((0, 0), (n, n)).into_owned(),
        e.view((0, n), (n, n)).into_owned(),
    ))
}

/// Solves `A_clᵀ P + P A_cl = -Q` for symmetric positive-definite `P`.
///
/// The equation is vectorized into an n²×n² linear system
/// `(I ⊗ A_clᵀ + A_clᵀ ⊗ I) vec(P) = -vec(Q)` and solved by LU; the result is
/// symmetrized.
pub fn solve_lyapunov(a_cl: &Matrix, q: &Matrix) -> Result<Matrix> {
    let n = a_cl.nrows();
    if a_cl.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            got: a_cl.ncols(),
        });
    }
    if q.nrows() != n || q.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            got: q.nrows(),
        });
    }
    let (q_min, _) = sym_eig_extremes(q);
    if q_min <= 0.0 || (q - q.transpose()).abs().max() > 1e-12 * (1.0 + q.abs().max()) {
        return Err(Error::Config("Q must be symmetric positive definite".into()));
    }
    let abscissa = spectral_abscissa(a_cl);
    if abscissa >= 0.0 {
        return Err(Error::NotHurwitz(abscissa));
    }

    let at = a_cl.transpose();
    let ident = Matrix::identity(n, n);
    let system = ident.kronecker(&at) + at.kronecker(&ident);
    let rhs = nalgebra::DVector::from_iterator(n * n, q.iter().map(|v| -v));
    let sol = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular Lyapunov system".into()))?;
    let p = Matrix::from_column_slice(n, n, sol.as_slice());
    let p = (&p + p.transpose()) * 0.5;
    let (p_min, _) = sym_eig_extremes(&p);
    if p_min <= 0.0 {
        return Err(Error::Numerical(format!(
            "Lyapunov solution not positive definite (min eigenvalue {p_min})"
        )));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lyapunov_identity_case() {
        let a = -Matrix::identity(2, 2);
        let q = Matrix::identity(2, 2) * 2.0;
        let p = solve_lyapunov(&a, &q).unwrap();
        assert_relative_eq!(p, Matrix::identity(2, 2), epsilon = 1e-12);
    }

    #[test]
    fn lyapunov_hand_solved() {
        // Hand solution of the 3×3 system for P = [[p1, p2], [p2, p3]]:
        //   -12 p2 + 2 p1 = -1,  p1 - 3 p2 - 6 p3 = 0,  2 p2 - 8 p3 = -1.
        let a = from_rows(&[&[1.0, 1.0], &[-6.0, -4.0]]);
        let p = solve_lyapunov(&a, &Matrix::identity(2, 2)).unwrap();
        let expected = from_rows(&[&[4.5, 5.0 / 6.0], &[5.0 / 6.0, 1.0 / 3.0]]);
        assert_relative_eq!(p, expected, epsilon = 1e-12);
    }

    #[test]
    fn lyapunov_rejects_unstable() {
        let a = from_rows(&[&[1.0, 0.0], &[0.0, -1.0]]);
        let err = solve_lyapunov(&a, &Matrix::identity(2, 2)).unwrap_err();
        assert!(matches!(err, Error::NotHurwitz(_)));
    }

    #[test]
    fn expm_matches_rotation_and_diagonal() {
        let a = from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        let e = expm(&(a * 2.0)).unwrap();
        let (s, c) = (2f64.sin(), 2f64.cos());
        assert_relative_eq!(e, from_rows(&[&[c, s], &[-s, c]]), epsilon = 1e-13);

        let d = from_rows(&[&[-3.0, 0.0], &[0.0, 5.0]]);
        let e = expm(&d).unwrap();
        assert_relative_eq!(e[(0, 0)], (-3f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(e[(1, 1)], 5f64.exp(), max_relative = 1e-12);
    }

    #[test]
    fn expm_integral_of_nilpotent() {
        // A = [[0,1],[0,0]]: exp(At) = [[1,t],[0,1]], ∫ = [[t, t²/2],[0, t]].
        let a = from_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let (e, g) = expm_with_integral(&a, 3.0).unwrap();
        assert_relative_eq!(e, from_rows(&[&[1.0, 3.0], &[0.0, 1.0]]), epsilon = 1e-13);
        assert_relative_eq!(g, from_rows(&[&[3.0, 4.5], &[0.0, 3.0]]), epsilon = 1e-13);
    }

    #[test]
    fn spectral_norm_of_jordan_block() {
        let a = from_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert_relative_eq!(spectral_norm(&a), golden, epsilon = 1e-12);
    }
}
