//! Reference bases, joint POVMs and their symmetry transformations.
//!
//! A joint POVM is an N×N grid of positive operators `F_ab` summing to the
//! identity; its row sums approximate the unbarred reference basis and its
//! column sums the barred one. Outcome labels are 0-based everywhere in this
//! crate; serialized JSON uses 1-based labels (see [`crate::schema`]).

use num_complex::Complex64;

use crate::error::{EdrError, PovmViolation, Result, ViolationKind};
use crate::operators::{
    check_dim, hermiticity_deviation, unitarity_deviation, CMat, CVec, DensityOperator,
    MaxAbs,
    HermitianOperator, HERM_TOL, PSD_TOL, UNITARY_TOL,
};

/// Completeness tolerance for POVMs (largest entry of |ΣF − 𝟙|).
pub const COMPLETENESS_TOL: f64 = 1e-9;
/// Probabilities above this negativity floor are clipped to zero; anything
/// more negative is an error in the input, not rounding noise.
pub const PROB_FLOOR: f64 = 1e-12;

/// Orthonormal basis {|a⟩} of the N-dimensional space, one projector per
/// outcome label.
#[derive(Clone, Debug)]
pub struct ProjectiveBasis {
    dim: usize,
    vectors: Vec<CVec>,
}

impl ProjectiveBasis {
    pub fn new(vectors: Vec<CVec>) -> Result<Self> {
        let dim = vectors.len();
        check_dim(dim)?;
        for v in &vectors {
            if v.len() != dim {
                return Err(EdrError::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
        }
        let mut dev: f64 = 0.0;
        for i in 0..dim {
            for j in i..dim {
                let target = if i == j { 1.0 } else { 0.0 };
                let dot = (vectors[i].adjoint() * &vectors[j])[(0, 0)];
                dev = dev.max((dot - Complex64::new(target, 0.0)).norm());
            }
        }
        if dev > UNITARY_TOL {
            return Err(EdrError::NotOrthonormal {
                deviation: dev,
                tolerance: UNITARY_TOL,
            });
        }
        Ok(Self { dim, vectors })
    }

    pub fn computational(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let vectors = (0..dim)
            .map(|i| {
                let mut v = CVec::zeros(dim);
                v[i] = Complex64::ONE;
                v
            })
            .collect();
        Ok(Self { dim, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, a: usize) -> &CVec {
        &self.vectors[a]
    }

    pub fn vectors(&self) -> &[CVec] {
        &self.vectors
    }

    /// Projector |a⟩⟨a| onto the a-th basis vector.
    pub fn projector(&self, a: usize) -> HermitianOperator {
        let v = &self.vectors[a];
        HermitianOperator::new(v * v.adjoint()).expect("projector of unit vector is Hermitian")
    }

    pub fn projectors(&self) -> Vec<HermitianOperator> {
        (0..self.dim).map(|a| self.projector(a)).collect()
    }

    /// Basis with vectors mapped through `s`: |a⟩ ↦ S|a⟩.
    pub fn transformed(&self, s: &SymmetryOp) -> Result<Self> {
        let vectors = self.vectors.iter().map(|v| s.apply_to_vector(v)).collect();
        Self::new(vectors)
    }

    /// Basis with labels permuted: new label `a` carries the old vector
    /// `perm[a]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.dim)?;
        let vectors = perm.iter().map(|&p| self.vectors[p].clone()).collect();
        Self::new(vectors)
    }
}

/// The two reference bases being jointly approximated.
#[derive(Clone, Debug)]
pub struct BasisPair {
    unbarred: ProjectiveBasis,
    barred: ProjectiveBasis,
}

impl BasisPair {
    pub fn new(unbarred: ProjectiveBasis, barred: ProjectiveBasis) -> Result<Self> {
        if unbarred.dim() != barred.dim() {
            return Err(EdrError::DimensionMismatch {
                expected: unbarred.dim(),
                found: barred.dim(),
            });
        }
        Ok(Self { unbarred, barred })
    }

    pub fn dim(&self) -> usize {
        self.unbarred.dim()
    }

    pub fn unbarred(&self) -> &ProjectiveBasis {
        &self.unbarred
    }

    pub fn barred(&self) -> &ProjectiveBasis {
        &self.barred
    }
}

/// Unitary or antiunitary symmetry in Wigner form: a unitary matrix plus an
/// optional entrywise-conjugation flag applied before it.
#[derive(Clone, Debug)]
pub struct SymmetryOp {
    mat: CMat,
    antiunitary: bool,
}

impl SymmetryOp {
    pub fn unitary(mat: CMat) -> Result<Self> {
        Self::build(mat, false)
    }

    pub fn antiunitary(mat: CMat) -> Result<Self> {
        Self::build(mat, true)
    }

    fn build(mat: CMat, antiunitary: bool) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(EdrError::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        check_dim(mat.nrows())?;
        let dev = unitarity_deviation(&mat);
        if dev > UNITARY_TOL {
            return Err(EdrError::NotUnitary {
                deviation: dev,
                tolerance: UNITARY_TOL,
            });
        }
        Ok(Self { mat, antiunitary })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn is_antiunitary(&self) -> bool {
        self.antiunitary
    }

    /// S|v⟩; for antiunitary S = U∘K this is U·conj(v).
    pub fn apply_to_vector(&self, v: &CVec) -> CVec {
        if self.antiunitary {
            &self.mat * v.map(|z| z.conj())
        } else {
            &self.mat * v
        }
    }

    /// Operator transform S⁻¹ X S: U†XU for unitary S, conj(U†XU) for
    /// antiunitary S = U∘K. Preserves spectra and Hermitian trace pairings.
    pub fn transform_operator(&self, x: &CMat) -> CMat {
        let conj = self.mat.adjoint() * x * &self.mat;
        if self.antiunitary {
            conj.map(|z| z.conj())
        } else {
            conj
        }
    }
}

pub fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(EdrError::InvalidPermutation { len: n });
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(EdrError::InvalidPermutation { len: n });
        }
        seen[p] = true;
    }
    Ok(())
}

pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// Joint POVM on the N×N outcome grid; element `(a, b)` is stored at
/// `a * dim + b`.
#[derive(Clone, Debug)]
pub struct JointPovm {
    dim: usize,
    elements: Vec<HermitianOperator>,
}

/// Checks a raw grid of candidate matrices and either builds the POVM or
/// reports every violation: shape mismatches, Hermiticity defects (against
/// the fixed Hermiticity tolerance), negative eigenvalues and completeness
/// defects (both against `tol`).
pub fn validate_joint_povm(
    grid: &[Vec<CMat>],
    tol: f64,
) -> std::result::Result<JointPovm, Vec<PovmViolation>> {
    let dim = grid.len();
    let mut violations = Vec::new();
    if check_dim(dim).is_err() || grid.iter().any(|row| row.len() != dim) {
        violations.push(PovmViolation {
            element: None,
            kind: ViolationKind::ShapeMismatch,
            magnitude: 0.0,
            tolerance: 0.0,
        });
        return Err(violations);
    }
    let mut sum = CMat::zeros(dim, dim);
    let mut elements = Vec::with_capacity(dim * dim);
    for (a, row) in grid.iter().enumerate() {
        for (b, mat) in row.iter().enumerate() {
            if mat.nrows() != dim || mat.ncols() != dim {
                violations.push(PovmViolation {
                    element: Some((a, b)),
                    kind: ViolationKind::ShapeMismatch,
                    magnitude: 0.0,
                    tolerance: 0.0,
                });
                continue;
            }
            let herm_dev = hermiticity_deviation(mat);
            if herm_dev > HERM_TOL {
                violations.push(PovmViolation {
                    element: Some((a, b)),
                    kind: ViolationKind::NotHermitian,
                    magnitude: herm_dev,
                    tolerance: HERM_TOL,
                });
                continue;
            }
            let op = HermitianOperator::new(mat.clone()).expect("deviation already checked");
            match op.min_eigenvalue() {
                Ok(min_eig) if min_eig < -tol => {
                    violations.push(PovmViolation {
                        element: Some((a, b)),
                        kind: ViolationKind::NegativeEigenvalue,
                        magnitude: -min_eig,
                        tolerance: tol,
                    });
                }
                Ok(_) => {}
                Err(_) => {
                    violations.push(PovmViolation {
                        element: Some((a, b)),
                        kind: ViolationKind::ShapeMismatch,
                        magnitude: f64::NAN,
                        tolerance: 0.0,
                    });
                }
            }
            sum += op.matrix();
            elements.push(op);
        }
    }
    if violations.is_empty() {
        let defect = (sum - CMat::identity(dim, dim)).max_abs();
        if defect > tol {
            violations.push(PovmViolation {
                element: None,
                kind: ViolationKind::CompletenessDefect,
                magnitude: defect,
                tolerance: tol,
            });
        }
    }
    if violations.is_empty() {
        Ok(JointPovm { dim, elements })
    } else {
        Err(violations)
    }
}

impl JointPovm {
    /// Builds from a grid of already-Hermitian elements, enforcing positivity
    /// and completeness at the default tolerances.
    pub fn new(grid: Vec<Vec<HermitianOperator>>) -> Result<Self> {
        let mats: Vec<Vec<CMat>> = grid
            .iter()
            .map(|row| row.iter().map(|op| op.matrix().clone()).collect())
            .collect();
        Self::from_matrices(&mats, PSD_TOL)
    }

    /// Builds from raw matrices, reporting the first violation as an error.
    pub fn from_matrices(grid: &[Vec<CMat>], tol: f64) -> Result<Self> {
        validate_joint_povm(grid, tol).map_err(|violations| {
            let first = &violations[0];
            let position = match first.element {
                Some((a, b)) => format!(" at ({}, {})", a + 1, b + 1),
                None => String::new(),
            };
            EdrError::InvalidPovm {
                first: format!("{}{} ({:.3e})", first.kind, position, first.magnitude),
                violations,
            }
        })
    }

    /// Internal constructor for operations that preserve POVM validity
    /// exactly (mixing, conjugation, relabeling, normalized Gram grids).
    pub(crate) fn new_unchecked(dim: usize, elements: Vec<HermitianOperator>) -> Self {
        debug_assert_eq!(elements.len(), dim * dim);
        debug_assert!({
            let mut sum = CMat::zeros(dim, dim);
            for op in &elements {
                sum += op.matrix();
            }
            (sum - CMat::identity(dim, dim)).max_abs() < 1e-8
        });
        Self { dim, elements }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn element(&self, a: usize, b: usize) -> &HermitianOperator {
        &self.elements[a * self.dim + b]
    }

    pub fn elements(&self) -> &[HermitianOperator] {
        &self.elements
    }

    /// Row and column sums: `M_a = Σ_b F_ab` approximates the unbarred basis,
    /// `M̄_b = Σ_a F_ab` the barred one.
    pub fn marginals(&self) -> (MarginalPovm, MarginalPovm) {
        (self.marginal_first(), self.marginal_second())
    }

    pub fn marginal_first(&self) -> MarginalPovm {
        let elements = (0..self.dim)
            .map(|a| {
                let mut sum = CMat::zeros(self.dim, self.dim);
                for b in 0..self.dim {
                    sum += self.element(a, b).matrix();
                }
                HermitianOperator::new(sum).expect("sum of Hermitian operators")
            })
            .collect();
        MarginalPovm::new_unchecked(self.dim, elements)
    }

    pub fn marginal_second(&self) -> MarginalPovm {
        let elements = (0..self.dim)
            .map(|b| {
                let mut sum = CMat::zeros(self.dim, self.dim);
                for a in 0..self.dim {
                    sum += self.element(a, b).matrix();
                }
                HermitianOperator::new(sum).expect("sum of Hermitian operators")
            })
            .collect();
        MarginalPovm::new_unchecked(self.dim, elements)
    }

    /// Convex combination αF + (1−α)G, element by element.
    pub fn mix(&self, other: &Self, alpha: f64) -> Result<Self> {
        if self.dim != other.dim {
            return Err(EdrError::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(EdrError::OutOfDomain {
                name: "alpha",
                value: alpha,
                min: 0.0,
                max: 1.0,
            });
        }
        let elements = self
            .elements
            .iter()
            .zip(&other.elements)
            .map(|(f, g)| {
                HermitianOperator::new(f.matrix().scale(alpha) + g.matrix().scale(1.0 - alpha))
                    .expect("convex combination of Hermitian operators")
            })
            .collect();
        Ok(Self::new_unchecked(self.dim, elements))
    }

    /// Pure outcome relabeling: new element `(a, b)` is the old element
    /// `(row_perm[a], col_perm[b])`.
    pub fn relabeled(&self, row_perm: &[usize], col_perm: &[usize]) -> Result<Self> {
        check_permutation(row_perm, self.dim)?;
        check_permutation(col_perm, self.dim)?;
        let mut elements = Vec::with_capacity(self.dim * self.dim);
        for a in 0..self.dim {
            for b in 0..self.dim {
                elements.push(self.element(row_perm[a], col_perm[b]).clone());
            }
        }
        Ok(Self::new_unchecked(self.dim, elements))
    }

    /// Symmetry conjugation with relabeling:
    /// `F′_ab = S⁻¹ F_{row_perm[a], col_perm[b]} S`.
    pub fn conjugate(&self, s: &SymmetryOp, row_perm: &[usize], col_perm: &[usize]) -> Result<Self> {
        if s.dim() != self.dim {
            return Err(EdrError::DimensionMismatch {
                expected: self.dim,
                found: s.dim(),
            });
        }
        let relabeled = self.relabeled(row_perm, col_perm)?;
        let elements = relabeled
            .elements
            .iter()
            .map(|op| {
                HermitianOperator::new(s.transform_operator(op.matrix()))
                    .expect("symmetry transform of Hermitian operator")
            })
            .collect();
        Ok(Self::new_unchecked(self.dim, elements))
    }

    /// Output transpose F′_ab = F_ba, the grid reflection that pairs with
    /// diagonal symmetries to exchange the two error components.
    pub fn transpose_outputs(&self) -> Self {
        let mut elements = Vec::with_capacity(self.dim * self.dim);
        for a in 0..self.dim {
            for b in 0..self.dim {
                elements.push(self.element(b, a).clone());
            }
        }
        Self::new_unchecked(self.dim, elements)
    }

    /// Outcome distribution 𝒫(a,b) = tr(F_ab ρ). Entries within the
    /// negativity floor are clipped to zero; anything more negative errors.
    pub fn probability_table(&self, rho: &DensityOperator) -> Result<Vec<Vec<f64>>> {
        if rho.dim() != self.dim {
            return Err(EdrError::DimensionMismatch {
                expected: self.dim,
                found: rho.dim(),
            });
        }
        let mut table = vec![vec![0.0; self.dim]; self.dim];
        for a in 0..self.dim {
            for b in 0..self.dim {
                let p = crate::operators::trace_product(self.element(a, b), rho.operator())?;
                if p < -PROB_FLOOR {
                    return Err(EdrError::NegativeProbability { value: p });
                }
                table[a][b] = p.max(0.0);
            }
        }
        Ok(table)
    }
}

/// One-index POVM with N outcomes, the marginal of a joint grid.
#[derive(Clone, Debug)]
pub struct MarginalPovm {
    dim: usize,
    elements: Vec<HermitianOperator>,
}

impl MarginalPovm {
    pub fn new(elements: Vec<HermitianOperator>) -> Result<Self> {
        let dim = elements.len();
        check_dim(dim)?;
        let mut sum = CMat::zeros(dim, dim);
        for op in &elements {
            if op.dim() != dim {
                return Err(EdrError::DimensionMismatch {
                    expected: dim,
                    found: op.dim(),
                });
            }
            let min_eig = op.min_eigenvalue()?;
            if min_eig < -PSD_TOL {
                return Err(EdrError::NotPositiveSemidefinite {
                    min_eigenvalue: min_eig,
                    tolerance: PSD_TOL,
                });
            }
            sum += op.matrix();
        }
        let defect = (sum - CMat::identity(dim, dim)).max_abs();
        if defect > COMPLETENESS_TOL {
            return Err(EdrError::CompletenessDefect {
                deviation: defect,
                tolerance: COMPLETENESS_TOL,
            });
        }
        Ok(Self { dim, elements })
    }

    pub(crate) fn new_unchecked(dim: usize, elements: Vec<HermitianOperator>) -> Self {
        debug_assert_eq!(elements.len(), dim);
        Self { dim, elements }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn element(&self, a: usize) -> &HermitianOperator {
        &self.elements[a]
    }

    pub fn elements(&self) -> &[HermitianOperator] {
        &self.elements
    }
}

/// Product POVM F_ab = P_a tr(P̄_b P_a)…-free uniform grid F_ab = P_a / N,
/// useful as a fixture: first marginal is exact, second is maximally noisy.
pub fn uniform_product_povm(basis: &ProjectiveBasis) -> JointPovm {
    let dim = basis.dim();
    let mut elements = Vec::with_capacity(dim * dim);
    for a in 0..dim {
        for _b in 0..dim {
            elements.push(basis.projector(a).scale(1.0 / dim as f64));
        }
    }
    JointPovm::new_unchecked(dim, elements)
}
