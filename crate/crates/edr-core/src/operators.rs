//! Dense complex-Hermitian linear algebra on small Hilbert spaces.
//!
//! Everything downstream (POVMs, instruments, error metrics, bounds) is built
//! from the few primitives here: validated Hermitian operators, their
//! eigendecompositions, operator norms, positivity tests and trace pairings.
//! Dimensions are capped at 16 because the variation metric enumerates all
//! 2^N outcome subsets.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{EdrError, Result};

/// Dense complex matrix, the carrier for every operator in the crate.
pub type CMat = DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVec = DVector<Complex64>;

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 16;

/// Entrywise Hermiticity tolerance.
pub const HERM_TOL: f64 = 1e-10;
/// Trace-normalization tolerance for density operators.
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalue floor for positivity tests.
pub const PSD_TOL: f64 = 1e-9;
/// Eigendecomposition reconstruction tolerance.
pub const RECON_TOL: f64 = 1e-9;
/// Entrywise unitarity and basis-orthonormality tolerance.
pub const UNITARY_TOL: f64 = 1e-10;

pub fn check_dim(dim: usize) -> Result<()> {
    if !(MIN_DIM..=MAX_DIM).contains(&dim) {
        return Err(EdrError::DimensionOutOfRange {
            dim,
            min: MIN_DIM,
            max: MAX_DIM,
        });
    }
    Ok(())
}

fn check_square(mat: &CMat) -> Result<usize> {
    if mat.nrows() != mat.ncols() {
        return Err(EdrError::NotSquare {
            rows: mat.nrows(),
            cols: mat.ncols(),
        });
    }
    check_dim(mat.nrows())?;
    Ok(mat.nrows())
}

/// Entrywise max-modulus norm, the deviation measure behind every
/// validation tolerance in the crate.
pub trait MaxAbs {
    fn max_abs(&self) -> f64;
}

impl<R, C, S> MaxAbs for nalgebra::Matrix<Complex64, R, C, S>
where
    R: nalgebra::Dim,
    C: nalgebra::Dim,
    S: nalgebra::storage::Storage<Complex64, R, C>,
{
    fn max_abs(&self) -> f64 {
        self.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Largest entrywise deviation of `mat` from its own adjoint.
pub fn hermiticity_deviation(mat: &CMat) -> f64 {
    let n = mat.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((mat[(i, j)] - mat[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Largest entrywise deviation of `U†U` from the identity.
pub fn unitarity_deviation(mat: &CMat) -> f64 {
    let n = mat.nrows();
    let gram = mat.adjoint() * mat;
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { Complex64::ONE } else { Complex64::ZERO };
            dev = dev.max((gram[(i, j)] - target).norm());
        }
    }
    dev
}

/// Validated Hermitian operator. The stored matrix is exactly Hermitian:
/// construction averages the input with its adjoint after checking the
/// deviation, so downstream eigensolves never see asymmetric rounding.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    mat: CMat,
}

impl HermitianOperator {
    pub fn new(mat: CMat) -> Result<Self> {
        check_square(&mat)?;
        let dev = hermiticity_deviation(&mat);
        if dev > HERM_TOL {
            return Err(EdrError::NotHermitian {
                deviation: dev,
                tolerance: HERM_TOL,
            });
        }
        let sym = (&mat + mat.adjoint()).scale(0.5);
        Ok(Self { mat: sym })
    }

    pub fn zero(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            mat: CMat::zeros(dim, dim),
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            mat: CMat::identity(dim, dim),
        })
    }

    /// Rank-one projector |v⟩⟨v| / ⟨v|v⟩.
    pub fn projector(v: &CVec) -> Result<Self> {
        check_dim(v.len())?;
        let norm_sq = v.norm_squared();
        if norm_sq < 1e-16 {
            return Err(EdrError::Invalid {
                context: "projector",
                reason: "vector has vanishing norm".into(),
            });
        }
        let mat = (v * v.adjoint()).scale(1.0 / norm_sq);
        Self::new(mat)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).sum()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            mat: self.mat.scale(factor),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(Self {
            mat: &self.mat + &other.mat,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(Self {
            mat: &self.mat - &other.mat,
        })
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(EdrError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    /// Full spectral decomposition with eigenvalues in ascending order.
    pub fn eigendecompose(&self) -> Result<Eigendecomposition> {
        let dim = self.dim();
        let eig = nalgebra::SymmetricEigen::try_new(self.mat.clone(), f64::EPSILON, 10_000)
            .ok_or(EdrError::EigenConvergence { dim })?;
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let eigenvectors: Vec<CVec> = order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect();
        Ok(Eigendecomposition {
            eigenvalues,
            eigenvectors,
        })
    }

    /// Largest absolute eigenvalue.
    pub fn operator_norm(&self) -> Result<f64> {
        let eig = self.eigendecompose()?;
        let lo = eig.eigenvalues.first().copied().unwrap_or(0.0);
        let hi = eig.eigenvalues.last().copied().unwrap_or(0.0);
        Ok(lo.abs().max(hi.abs()))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let eig = self.eigendecompose()?;
        Ok(eig.eigenvalues[0])
    }

    /// True iff every eigenvalue is at least `-tol`.
    pub fn is_psd(&self, tol: f64) -> Result<bool> {
        Ok(self.min_eigenvalue()? >= -tol)
    }

    /// Real expectation value ⟨v|H|v⟩ for a unit vector.
    pub fn expectation(&self, v: &CVec) -> f64 {
        (v.adjoint() * &self.mat * v)[(0, 0)].re
    }
}

/// Spectral data of a Hermitian operator, eigenvalues ascending, eigenvectors
/// orthonormal and paired with the eigenvalues by index.
#[derive(Clone, Debug)]
pub struct Eigendecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<CVec>,
}

impl Eigendecomposition {
    /// Largest entrywise error of Σ λ_i |v_i⟩⟨v_i| against `target`.
    pub fn reconstruction_error(&self, target: &HermitianOperator) -> f64 {
        let dim = target.dim();
        let mut recon = CMat::zeros(dim, dim);
        for (lambda, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            recon += (v * v.adjoint()).scale(*lambda);
        }
        (recon - target.matrix()).max_abs()
    }
}

/// Re tr(AB) for Hermitian `a`, `b`; the imaginary part must vanish.
pub fn trace_product(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(EdrError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let n = a.dim();
    let (am, bm) = (a.matrix(), b.matrix());
    let mut tr = Complex64::ZERO;
    for i in 0..n {
        for j in 0..n {
            tr += am[(i, j)] * bm[(j, i)];
        }
    }
    if tr.im.abs() > HERM_TOL {
        return Err(EdrError::ImaginaryTrace {
            imaginary: tr.im,
            tolerance: HERM_TOL,
        });
    }
    Ok(tr.re)
}

/// Unit-trace positive operator; the state of the system.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    op: HermitianOperator,
}

impl DensityOperator {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let min_eig = op.min_eigenvalue()?;
        if min_eig < -PSD_TOL {
            return Err(EdrError::NotPositiveSemidefinite {
                min_eigenvalue: min_eig,
                tolerance: PSD_TOL,
            });
        }
        let trace = op.trace();
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(EdrError::OutOfDomain {
                name: "trace",
                value: trace,
                min: 1.0 - TRACE_TOL,
                max: 1.0 + TRACE_TOL,
            });
        }
        Ok(Self { op })
    }

    /// Pure state |v⟩⟨v|; `v` is normalized first.
    pub fn pure(v: &CVec) -> Result<Self> {
        Ok(Self {
            op: HermitianOperator::projector(v)?,
        })
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Ok(Self {
            op: HermitianOperator::identity(dim)?.scale(1.0 / dim as f64),
        })
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn matrix(&self) -> &CMat {
        self.op.matrix()
    }
}
