//! Small dense complex linear algebra used by the rate engine.
//!
//! Matrices are stored in `nalgebra` containers; the Hermitian positive
//! definite factorization and log-determinant are implemented here.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Lower-triangular Cholesky factor `L` with `A = L Lᴴ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: CMat,
}

impl Cholesky {
    /// Factorizes a Hermitian positive definite matrix. Only the lower
    /// triangle of `a` is read.
    pub fn new(a: &CMat) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::InvalidArgument(format!(
                "cholesky: matrix is {}x{}, expected square",
                n,
                a.ncols()
            )));
        }
        let mut l = CMat::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NumericalDomain(format!(
                    "cholesky: matrix is not positive definite (pivot {j} = {d:e})"
                )));
            }
            let djj = d.sqrt();
            l[(j, j)] = Complex64::new(djj, 0.0);
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn factor(&self) -> &CMat {
        &self.l
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &CVec) -> CVec {
        let n = self.l.nrows();
        let mut y = b.clone();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)].re;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)].conj() * y[k];
            }
            y[i] = s / self.l[(i, i)].re;
        }
        y
    }

    /// `bᴴ A⁻¹ b`, computed as `‖L⁻¹ b‖²`.
    pub fn quad_form_inv(&self, b: &CVec) -> f64 {
        let n = self.l.nrows();
        let mut y = b.clone();
        let mut acc = 0.0;
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)].re;
            acc += y[i].norm_sqr();
        }
        acc
    }

    /// Base-2 logarithm of the determinant.
    pub fn log2_det(&self) -> f64 {
        2.0 * (0..self.l.nrows())
            .map(|i| self.l[(i, i)].re.log2())
            .sum::<f64>()
    }
}

/// `log₂ det(A)` of a Hermitian positive definite matrix.
pub fn logdet_hpd(a: &CMat) -> Result<f64> {
    check_hermitian(a, 1e-9)?;
    Ok(Cholesky::new(a)?.log2_det())
}

fn check_hermitian(a: &CMat, rel_tol: f64) -> Result<()> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidArgument("matrix is not square".into()));
    }
    let scale = a.iter().map(|z| z.norm()).fold(0.0_f64, f64::max).max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..=i {
            if (a[(i, j)] - a[(j, i)].conj()).norm() > rel_tol * scale {
                return Err(Error::NumericalDomain(format!(
                    "matrix is not Hermitian at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// `shift·I + scale·Σₖ wₖ hₖ hₖᴴ` over the columns `hₖ` of `h`.
pub fn weighted_gram(h: &CMat, weights: &[f64], scale: f64, shift: f64) -> CMat {
    let m = h.nrows();
    let mut out = CMat::from_diagonal_element(m, m, Complex64::new(shift, 0.0));
    for (k, &w) in weights.iter().enumerate() {
        let c = scale * w;
        if c == 0.0 {
            continue;
        }
        let col = h.column(k);
        for j in 0..m {
            let hj = col[j].conj() * c;
            for i in 0..m {
                out[(i, j)] += col[i] * hj;
            }
        }
    }
    out
}

/// Adds `c·v vᴴ` to `a` in place.
pub fn add_outer(a: &mut CMat, v: &CVec, c: f64) {
    let m = v.len();
    for j in 0..m {
        let vj = v[j].conj() * c;
        for i in 0..m {
            a[(i, j)] += v[i] * vj;
        }
    }
}

/// `aᴴ b`.
pub fn inner(a: &CVec, b: &CVec) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}
