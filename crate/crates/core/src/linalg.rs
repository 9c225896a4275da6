//! Dense Cholesky factorization of symmetric positive-definite matrices.
//!
//! Public APIs exchange `nalgebra` matrices; the factorization and the
//! triangular solves run on `faer`, sequentially, so results are
//! bit-reproducible.

use faer::linalg::triangular_solve;
use faer::{Mat, Par};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative diagonal jitter used on the single retry.
pub const JITTER_FACTOR: f64 = 1e-10;

/// Lower-triangular factor `L` with `L·Lᵀ = A + jitter·I`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: Mat<f64>,
    jitter: f64,
}

fn to_faer(a: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn to_nalgebra(a: &Mat<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Overwrites the lower triangle of `m` with its Cholesky factor and clears
/// the strict upper triangle. Returns false if `m` is not numerically
/// positive definite.
fn factor_in_place(m: &mut Mat<f64>) -> bool {
    use faer::dyn_stack::{MemBuffer, MemStack};
    use faer::linalg::cholesky::llt::factor;

    let n = m.nrows();
    let mut mem = MemBuffer::new(factor::cholesky_in_place_scratch::<f64>(
        n,
        Par::Seq,
        Default::default(),
    ));
    let ok = factor::cholesky_in_place(
        m.as_mut(),
        Default::default(),
        Par::Seq,
        MemStack::new(&mut mem),
        Default::default(),
    )
    .is_ok();
    if !ok {
        return false;
    }
    for j in 0..n {
        let d = m[(j, j)];
        if !(d.is_finite() && d > 0.0) {
            return false;
        }
        m.col_as_slice_mut(j)[..j].fill(0.0);
    }
    true
}

impl Cholesky {
    /// Factorizes `a`; on failure retries once with
    /// `JITTER_FACTOR · trace(a)/n` added to the diagonal.
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::input(format!(
                "cholesky needs a non-empty square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        Self::from_lower_fill(n, |m| {
            for j in 0..n {
                for i in j..n {
                    m[(i, j)] = a[(i, j)];
                }
            }
        })
    }

    /// As [`Cholesky::new`] for a matrix produced by `fill`, which must
    /// write the lower triangle (including the diagonal) of an `n×n`
    /// matrix. `fill` runs a second time if the jitter retry is needed.
    pub(crate) fn from_lower_fill(n: usize, fill: impl Fn(&mut Mat<f64>)) -> Result<Self> {
        let mut m = Mat::<f64>::zeros(n, n);
        fill(&mut m);
        let mut trace = 0.0;
        for j in 0..n {
            trace += m[(j, j)];
            if m.col_as_slice(j)[j..].iter().any(|v| !v.is_finite()) {
                return Err(Error::NumericalFailure {
                    reason: "covariance matrix has non-finite entries".into(),
                    jitter: 0.0,
                });
            }
        }
        if factor_in_place(&mut m) {
            return Ok(Cholesky { l: m, jitter: 0.0 });
        }
        m.fill(0.0);
        fill(&mut m);
        Self::with_jitter_inner(m, JITTER_FACTOR * trace / n as f64)
    }

    /// Factorizes `a + jitter·I` with no further retry.
    pub fn with_jitter(a: &DMatrix<f64>, jitter: f64) -> Result<Self> {
        Self::with_jitter_inner(to_faer(a), jitter)
    }

    fn with_jitter_inner(mut m: Mat<f64>, jitter: f64) -> Result<Self> {
        for i in 0..m.nrows() {
            m[(i, i)] += jitter;
        }
        if factor_in_place(&mut m) {
            Ok(Cholesky { l: m, jitter })
        } else {
            Err(Error::NumericalFailure {
                reason: "covariance matrix is not positive definite".into(),
                jitter,
            })
        }
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// Diagonal jitter that was needed (0 when none).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn lower(&self) -> DMatrix<f64> {
        to_nalgebra(&self.l)
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.l[(i, i)]
    }

    /// `log |A|` = 2 Σ log L_ii.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim()).map(|i| self.l[(i, i)].ln()).sum::<f64>()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
        triangular_solve::solve_lower_triangular_in_place(self.l.as_ref(), rhs.as_mut(), Par::Seq);
        triangular_solve::solve_upper_triangular_in_place(
            self.l.as_ref().transpose(),
            rhs.as_mut(),
            Par::Seq,
        );
        (0..b.len()).map(|i| rhs[(i, 0)]).collect()
    }

    /// Returns `L⁻¹ B`.
    pub fn solve_lower(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut rhs = to_faer(b);
        triangular_solve::solve_lower_triangular_in_place(self.l.as_ref(), rhs.as_mut(), Par::Seq);
        to_nalgebra(&rhs)
    }

    /// Column sums of squares of `L⁻¹ B`, i.e. `diag(Bᵀ A⁻¹ B)`.
    pub fn quad_forms(&self, b: &DMatrix<f64>) -> DVector<f64> {
        let mut rhs = to_faer(b);
        triangular_solve::solve_lower_triangular_in_place(self.l.as_ref(), rhs.as_mut(), Par::Seq);
        DVector::from_fn(b.ncols(), |j, _| {
            (0..rhs.nrows()).map(|i| rhs[(i, j)] * rhs[(i, j)]).sum()
        })
    }

    /// `A⁻¹` with only the lower triangle (including the diagonal) valid.
    pub(crate) fn inverse_lower(&self) -> Mat<f64> {
        use faer::dyn_stack::{MemBuffer, MemStack};
        use faer::linalg::cholesky::llt::inverse;

        let n = self.dim();
        let mut inv = Mat::<f64>::zeros(n, n);
        let mut mem = MemBuffer::new(inverse::inverse_scratch::<f64>(n, Par::Seq));
        inverse::inverse(
            inv.as_mut(),
            self.l.as_ref(),
            Par::Seq,
            MemStack::new(&mut mem),
        );
        inv
    }

    /// Dense inverse `A⁻¹`, as a column-major buffer (`n·n`, symmetric).
    pub fn inverse_buffer(&self) -> Vec<f64> {
        let n = self.dim();
        let inv = self.inverse_lower();
        let mut out = vec![0.0; n * n];
        for j in 0..n {
            for i in j..n {
                let v = inv[(i, j)];
                out[j * n + i] = v;
                out[i * n + j] = v;
            }
        }
        out
    }

    fn reconstruct_faer(&self) -> Mat<f64> {
        &self.l * self.l.transpose()
    }

    /// `L·Lᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        to_nalgebra(&self.reconstruct_faer())
    }
}
