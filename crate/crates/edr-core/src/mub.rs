//! Fourier bases, mutual unbiasedness, the swap construction that exchanges
//! the two error components, and brute-force equivalence of a complex
//! Hadamard matrix to the Fourier matrix.
//!
//! For a pair whose barred basis is the Fourier transform of the unbarred
//! one, relabeling a joint POVM by `F′_ab = U†F_{−b,a}U` (with `U` the basis
//! change and `−b` the negated outcome label) produces another valid joint
//! POVM whose errors are exactly the input's with ε and ε̄ exchanged. Pairs
//! that are only equivalent to a Fourier pair, through phases and outcome
//! permutations of a complex Hadamard matrix, inherit the construction by
//! conjugating into the Fourier frame and back.

use num_complex::Complex64;

use crate::error::{EdrError, Result};
use crate::measurement::{invert_permutation, BasisPair, JointPovm, ProjectiveBasis};
use crate::operators::{check_dim, CMat, CVec, HermitianOperator, MaxAbs};

/// Entrywise tolerance for Hadamard candidate validation.
pub const HADAMARD_TOL: f64 = 1e-9;
/// Entrywise tolerance for Fourier equivalence: looser than the core
/// tolerances because two dephasing divisions compound rounding.
pub const EQUIVALENCE_TOL: f64 = 1e-8;
/// Largest dimension the N!² equivalence search accepts.
pub const MAX_SEARCH_DIM: usize = 6;

/// e^{2πi k/n} with the argument reduced before the trig call.
fn root_of_unity(k: i64, n: usize) -> Complex64 {
    let r = k.rem_euclid(n as i64) as f64;
    Complex64::from_polar(1.0, std::f64::consts::TAU * r / n as f64)
}

/// The Fourier basis: component a of vector b is e^{2πi(a+1)(b+1)/N}/√N
/// (outcome labels are 1-based in the phase convention).
pub fn fourier_basis(n: usize) -> Result<ProjectiveBasis> {
    check_dim(n)?;
    let scale = 1.0 / (n as f64).sqrt();
    let vectors = (0..n)
        .map(|b| {
            CVec::from_iterator(
                n,
                (0..n).map(|a| root_of_unity(((a + 1) * (b + 1)) as i64, n).scale(scale)),
            )
        })
        .collect();
    ProjectiveBasis::new(vectors)
}

/// The unitary U = Σ_a |ā⟩⟨a| mapping the computational basis to the
/// Fourier one; column a is the Fourier vector a.
pub fn fourier_unitary(n: usize) -> Result<CMat> {
    let basis = fourier_basis(n)?;
    let mut u = CMat::zeros(n, n);
    for a in 0..n {
        u.set_column(a, basis.vector(a));
    }
    Ok(u)
}

/// Computational unbarred basis with its Fourier transform as barred.
pub fn fourier_pair(n: usize) -> Result<BasisPair> {
    BasisPair::new(ProjectiveBasis::computational(n)?, fourier_basis(n)?)
}

/// True iff every cross overlap satisfies |⟨a|b̄⟩|² = 1/N within `tol`.
pub fn is_mub(pair: &BasisPair, tol: f64) -> bool {
    let n = pair.dim();
    let target = 1.0 / n as f64;
    for a in 0..n {
        for b in 0..n {
            let ov = (pair.unbarred().vector(a).adjoint() * pair.barred().vector(b))[(0, 0)];
            if (ov.norm_sqr() - target).abs() > tol {
                return false;
            }
        }
    }
    true
}

/// Outcome label for −a: 0-based index of the 1-based label N − a mod N.
pub fn neg_label(index: usize, n: usize) -> usize {
    let residue = (n - (index + 1) % n) % n;
    (residue + n - 1) % n
}

fn fourier_deviation(pair: &BasisPair) -> f64 {
    let n = pair.dim();
    let scale = 1.0 / (n as f64).sqrt();
    let mut dev: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            let ov = (pair.unbarred().vector(a).adjoint() * pair.barred().vector(b))[(0, 0)];
            let target = root_of_unity(((a + 1) * (b + 1)) as i64, n).scale(scale);
            dev = dev.max((ov - target).norm());
        }
    }
    dev
}

/// Core exchange map: G_ab = U† F_{−b,a} U for the given basis change.
fn swap_with_unitary(f: &JointPovm, u: &CMat) -> JointPovm {
    let n = f.dim();
    let u_adj = u.adjoint();
    let mut elements = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let src = f.element(neg_label(b, n), a).matrix();
            let moved = &u_adj * src * u;
            elements.push(
                HermitianOperator::new(moved).expect("unitary conjugate of Hermitian operator"),
            );
        }
    }
    JointPovm::new_unchecked(n, elements)
}

/// The error-exchanging POVM for a pair whose barred basis is exactly the
/// Fourier transform of the unbarred one: both error components swap, for
/// both metrics. Pairs not in the exact Fourier convention are rejected;
/// use [`swap_construct_via`] with a recorded equivalence instead.
pub fn swap_construct(f: &JointPovm, pair: &BasisPair) -> Result<JointPovm> {
    if f.dim() != pair.dim() {
        return Err(EdrError::DimensionMismatch {
            expected: pair.dim(),
            found: f.dim(),
        });
    }
    let dev = fourier_deviation(pair);
    if dev > EQUIVALENCE_TOL {
        return Err(EdrError::NotFourierRelated { deviation: dev });
    }
    let n = pair.dim();
    let mut u = CMat::zeros(n, n);
    for a in 0..n {
        // U = Σ_a |ā⟩⟨a| in the pair's own frame.
        let col = pair.barred().vector(a);
        let row = pair.unbarred().vector(a);
        u += col * row.adjoint();
    }
    Ok(swap_with_unitary(f, &u))
}

/// A complex Hadamard matrix: unimodular entries, HH† = N𝟙.
#[derive(Clone, Debug)]
pub struct HadamardCandidate {
    dim: usize,
    matrix: CMat,
}

impl HadamardCandidate {
    pub fn new(matrix: CMat) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(EdrError::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        let n = matrix.nrows();
        check_dim(n)?;
        for r in 0..n {
            for c in 0..n {
                let m = matrix[(r, c)].norm();
                if (m - 1.0).abs() > HADAMARD_TOL {
                    return Err(EdrError::Invalid {
                        context: "hadamard",
                        reason: format!("entry ({}, {}) has modulus {m:.6}", r + 1, c + 1),
                    });
                }
            }
        }
        let gram = &matrix * matrix.adjoint();
        let defect = (gram - CMat::identity(n, n).scale(n as f64)).max_abs();
        if defect > HADAMARD_TOL * n as f64 {
            return Err(EdrError::Invalid {
                context: "hadamard",
                reason: format!("rows are not orthogonal, HH† deviates by {defect:.3e}"),
            });
        }
        Ok(Self { dim: n, matrix })
    }

    /// Overlap matrix of a pair scaled to unimodular entries,
    /// H_ab = √N ⟨a|b̄⟩. Fails when the pair is not mutually unbiased.
    pub fn from_pair(pair: &BasisPair) -> Result<Self> {
        let n = pair.dim();
        let scale = (n as f64).sqrt();
        let mut matrix = CMat::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                let ov = (pair.unbarred().vector(a).adjoint() * pair.barred().vector(b))[(0, 0)];
                matrix[(a, b)] = ov.scale(scale);
            }
        }
        Self::new(matrix)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }
}

/// Witness that D1 T1 H T2 D2 is the Fourier matrix: phase diagonals in
/// radians and outcome permutations (0-based internally).
#[derive(Clone, Debug)]
pub struct FourierEquivalence {
    pub d1_phases: Vec<f64>,
    pub t1: Vec<usize>,
    pub t2: Vec<usize>,
    pub d2_phases: Vec<f64>,
}

impl FourierEquivalence {
    /// Largest entrywise deviation of D1 T1 H T2 D2 from Φ_ab = e^{2πiab/N}
    /// (1-based exponents).
    pub fn deviation(&self, h: &HadamardCandidate) -> f64 {
        let n = h.dim();
        let mut dev: f64 = 0.0;
        for r in 0..n {
            for c in 0..n {
                let d1 = Complex64::from_polar(1.0, self.d1_phases[r]);
                let d2 = Complex64::from_polar(1.0, self.d2_phases[c]);
                let value = d1 * h.matrix()[(self.t1[r], self.t2[c])] * d2;
                let target = root_of_unity(((r + 1) * (c + 1)) as i64, n);
                dev = dev.max((value - target).norm());
            }
        }
        dev
    }
}

/// Dephased form: B_rc = A_rc·A₀₀/(A_{0c}·A_{r0}), making the first row and
/// column all ones. Idempotent.
pub fn dephase(a: &CMat) -> CMat {
    let n = a.nrows();
    let mut b = CMat::zeros(n, a.ncols());
    for r in 0..n {
        for c in 0..a.ncols() {
            b[(r, c)] = a[(r, c)] * a[(0, 0)] / (a[(0, c)] * a[(r, 0)]);
        }
    }
    b
}

/// All permutations of 0..n in lexicographic order.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut result = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    loop {
        result.push(current.clone());
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| current[i] < current[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| current[j] > current[i]).expect("suffix has a larger entry");
        current.swap(i, j);
        current[i + 1..].reverse();
    }
    result
}

/// Exhaustive search for a Fourier equivalence of `h`, over all N!²
/// row/column permutation pairs with dephasing. Returns the witness for the
/// lexicographically smallest successful (T1, T2), or `None` when no pair
/// matches: the search is a complete decision procedure at these sizes.
pub fn fourier_equivalence(h: &HadamardCandidate) -> Result<Option<FourierEquivalence>> {
    let n = h.dim();
    if n > MAX_SEARCH_DIM {
        return Err(EdrError::DimensionOutOfRange {
            dim: n,
            min: 2,
            max: MAX_SEARCH_DIM,
        });
    }
    // Dephased Fourier matrix: e^{2πi·rc/N} with 0-based exponents.
    let mut target = CMat::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            target[(r, c)] = root_of_unity((r * c) as i64, n);
        }
    }
    let perms = permutations(n);
    for t1 in &perms {
        let mut permuted_rows = CMat::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                permuted_rows[(r, c)] = h.matrix()[(t1[r], c)];
            }
        }
        for t2 in &perms {
            let mut a = CMat::zeros(n, n);
            for r in 0..n {
                for c in 0..n {
                    a[(r, c)] = permuted_rows[(r, t2[c])];
                }
            }
            let dephased = dephase(&a);
            if (&dephased - &target).max_abs() > EQUIVALENCE_TOL {
                continue;
            }
            // Recover the diagonals: with C = dephase(A) equal to the
            // 0-based Fourier matrix, d1_r = e^{2πir/N}/A_{r0} and
            // d2_c = A₀₀·e^{2πi(c−1)·.../N}... phases chosen so that
            // d1_r·A_rc·d2_c = e^{2πi(r+1)(c+1)/N}.
            let d1_phases: Vec<f64> = (0..n)
                .map(|r| (root_of_unity((r + 1) as i64, n) / a[(r, 0)]).arg())
                .collect();
            let d2_phases: Vec<f64> = (0..n)
                .map(|c| (a[(0, 0)] * root_of_unity(c as i64, n) / a[(0, c)]).arg())
                .collect();
            let eq = FourierEquivalence {
                d1_phases,
                t1: t1.clone(),
                t2: t2.clone(),
                d2_phases,
            };
            debug_assert!(eq.deviation(h) < 10.0 * EQUIVALENCE_TOL);
            return Ok(Some(eq));
        }
    }
    Ok(None)
}

/// Swap construction for a pair that is only Hadamard-equivalent to a
/// Fourier pair: conjugate into the Fourier frame the equivalence
/// prescribes, exchange there, and conjugate back. Error components swap
/// exactly as in [`swap_construct`].
pub fn swap_construct_via(
    f: &JointPovm,
    pair: &BasisPair,
    eq: &FourierEquivalence,
) -> Result<JointPovm> {
    if f.dim() != pair.dim() {
        return Err(EdrError::DimensionMismatch {
            expected: pair.dim(),
            found: f.dim(),
        });
    }
    let h = HadamardCandidate::from_pair(pair)?;
    let dev = eq.deviation(&h);
    if dev > 10.0 * EQUIVALENCE_TOL {
        return Err(EdrError::NotFourierRelated { deviation: dev });
    }
    let n = pair.dim();
    // Primed pair |a′⟩ = conj(d1_a)|u_{t1(a)}⟩, |b̄′⟩ = d2_b|w_{t2(b)}⟩ is
    // exactly Fourier-related; phases leave the projectors untouched, so
    // only the relabeling moves outcomes.
    let primed_unbarred = ProjectiveBasis::new(
        (0..n)
            .map(|a| {
                let phase = Complex64::from_polar(1.0, -eq.d1_phases[a]);
                pair.unbarred().vector(eq.t1[a]).map(|v| v * phase)
            })
            .collect(),
    )?;
    let primed_barred = ProjectiveBasis::new(
        (0..n)
            .map(|b| {
                let phase = Complex64::from_polar(1.0, eq.d2_phases[b]);
                pair.barred().vector(eq.t2[b]).map(|v| v * phase)
            })
            .collect(),
    )?;
    let primed_pair = BasisPair::new(primed_unbarred, primed_barred)?;
    let relabeled = f.relabeled(&eq.t1, &eq.t2)?;
    let swapped = swap_construct(&relabeled, &primed_pair)?;
    swapped.relabeled(&invert_permutation(&eq.t1), &invert_permutation(&eq.t2))
}
