//! The exactly solved qubit case: canonical frames, symmetrization, optimal
//! POVMs and the two tight trade-off curves.
//!
//! Any qubit basis pair can be rotated (and its labels permuted) into the
//! canonical frame where the first projectors are
//! `P₁ = ½(𝟙 + cosθ σ_z + sinθ σ_x)` and `P̄₁ = ½(𝟙 + cosθ σ_z − sinθ σ_x)`
//! with half-angle θ ∈ [0, π/4]. In that frame an eight-element symmetry
//! group (generated by the σ_z reflection with output transpose, the σ_y
//! rotation with both labels swapped, and complex conjugation) fixes the
//! pair, permutes the two error components, and never increases their sum,
//! so optima can be sought among symmetric POVMs only.

use num_complex::Complex64;

use crate::error::{EdrError, Result};
use crate::measurement::{BasisPair, JointPovm, ProjectiveBasis};
use crate::metrics::ErrorMetric;
use crate::operators::{CMat, CVec, HermitianOperator, MaxAbs};

/// Canonical half-angles live in [0, π/4].
pub const THETA_MAX: f64 = std::f64::consts::FRAC_PI_4;
/// Slack accepted on θ range checks before clamping.
const RANGE_SLACK: f64 = 1e-9;
/// Entrywise tolerance for recognizing a pair as canonical.
pub const CANONICAL_TOL: f64 = 1e-7;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn sigma_x() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

pub fn sigma_y() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
}

pub fn sigma_z() -> CMat {
    CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
}

/// Bloch components (tr(Xσ_x), tr(Xσ_y), tr(Xσ_z)) of a 2×2 matrix.
fn bloch_vector(x: &CMat) -> [f64; 3] {
    [
        (x[(0, 1)] + x[(1, 0)]).re,
        ((x[(1, 0)] - x[(0, 1)]) * Complex64::i()).re * -1.0,
        (x[(0, 0)] - x[(1, 1)]).re,
    ]
}

fn check_theta(theta: f64) -> Result<f64> {
    if !(-RANGE_SLACK..=THETA_MAX + RANGE_SLACK).contains(&theta) {
        return Err(EdrError::OutOfDomain {
            name: "theta",
            value: theta,
            min: 0.0,
            max: THETA_MAX,
        });
    }
    Ok(theta.clamp(0.0, THETA_MAX))
}

/// The canonical pair at half-angle θ: both bases lie in the x–z Bloch
/// plane, tilted symmetrically by ±θ around the z-axis.
pub fn canonical_basis_pair(theta: f64) -> Result<BasisPair> {
    let theta = check_theta(theta)?;
    let (s, co) = (theta / 2.0).sin_cos();
    let unbarred = ProjectiveBasis::new(vec![
        CVec::from_vec(vec![c(co, 0.0), c(s, 0.0)]),
        CVec::from_vec(vec![c(-s, 0.0), c(co, 0.0)]),
    ])?;
    let barred = ProjectiveBasis::new(vec![
        CVec::from_vec(vec![c(co, 0.0), c(-s, 0.0)]),
        CVec::from_vec(vec![c(s, 0.0), c(co, 0.0)]),
    ])?;
    BasisPair::new(unbarred, barred)
}

/// How to move a qubit pair into the canonical frame: relabel outcomes by
/// the recorded swaps, then conjugate every operator X ↦ U X U†.
#[derive(Clone, Debug)]
pub struct QubitPairCanonicalForm {
    theta: f64,
    to_canonical: CMat,
    swap_unbarred: bool,
    swap_barred: bool,
}

impl QubitPairCanonicalForm {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn to_canonical(&self) -> &CMat {
        &self.to_canonical
    }

    /// Label swaps applied to the (unbarred, barred) outcomes before the
    /// rotation.
    pub fn relabel(&self) -> (bool, bool) {
        (self.swap_unbarred, self.swap_barred)
    }

    pub fn canonical_pair(&self) -> BasisPair {
        canonical_basis_pair(self.theta).expect("theta is in range by construction")
    }

    fn perms(&self) -> (Vec<usize>, Vec<usize>) {
        let perm = |swap: bool| if swap { vec![1, 0] } else { vec![0, 1] };
        (perm(self.swap_unbarred), perm(self.swap_barred))
    }

    /// Transports a POVM for the original pair into the canonical frame,
    /// preserving both error components.
    pub fn to_canonical_povm(&self, f: &JointPovm) -> Result<JointPovm> {
        let (row, col) = self.perms();
        let s = crate::measurement::SymmetryOp::unitary(self.to_canonical.adjoint())?;
        f.conjugate(&s, &row, &col)
    }

    /// Inverse transport of [`Self::to_canonical_povm`].
    pub fn from_canonical_povm(&self, f: &JointPovm) -> Result<JointPovm> {
        let (row, col) = self.perms();
        let s = crate::measurement::SymmetryOp::unitary(self.to_canonical.clone())?;
        f.conjugate(&s, &row, &col)
    }
}

/// Unit quaternion of a proper rotation matrix (rows given), Shepperd's
/// branch selection for numerical stability.
fn quaternion_from_rotation(r: &[[f64; 3]; 3]) -> [f64; 4] {
    let tr = r[0][0] + r[1][1] + r[2][2];
    if tr > 0.0 {
        let s = (tr + 1.0).sqrt() * 2.0;
        [
            0.25 * s,
            (r[2][1] - r[1][2]) / s,
            (r[0][2] - r[2][0]) / s,
            (r[1][0] - r[0][1]) / s,
        ]
    } else if r[0][0] >= r[1][1] && r[0][0] >= r[2][2] {
        let s = (1.0 + r[0][0] - r[1][1] - r[2][2]).sqrt() * 2.0;
        [
            (r[2][1] - r[1][2]) / s,
            0.25 * s,
            (r[0][1] + r[1][0]) / s,
            (r[0][2] + r[2][0]) / s,
        ]
    } else if r[1][1] >= r[2][2] {
        let s = (1.0 + r[1][1] - r[0][0] - r[2][2]).sqrt() * 2.0;
        [
            (r[0][2] - r[2][0]) / s,
            (r[0][1] + r[1][0]) / s,
            0.25 * s,
            (r[1][2] + r[2][1]) / s,
        ]
    } else {
        let s = (1.0 + r[2][2] - r[0][0] - r[1][1]).sqrt() * 2.0;
        [
            (r[1][0] - r[0][1]) / s,
            (r[0][2] + r[2][0]) / s,
            (r[1][2] + r[2][1]) / s,
            0.25 * s,
        ]
    }
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize3(a: &[f64; 3]) -> [f64; 3] {
    let n = dot3(a, a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Finds the relabeling and rotation taking a qubit pair to the canonical
/// frame. Of the four label assignments the first (in the order identity,
/// barred swap, unbarred swap, both swaps) reaching θ ≤ π/4 is used, so
/// exact θ = π/4 ties resolve to the identity relabeling.
pub fn canonicalize(pair: &BasisPair) -> Result<QubitPairCanonicalForm> {
    if pair.dim() != 2 {
        return Err(EdrError::DimensionMismatch {
            expected: 2,
            found: pair.dim(),
        });
    }
    let n = bloch_vector(pair.unbarred().projector(0).matrix());
    let nbar = bloch_vector(pair.barred().projector(0).matrix());

    let assignments = [(false, false), (false, true), (true, false), (true, true)];
    let mut chosen = None;
    for (swap_u, swap_b) in assignments {
        let sign_u = if swap_u { -1.0 } else { 1.0 };
        let sign_b = if swap_b { -1.0 } else { 1.0 };
        let ne = [sign_u * n[0], sign_u * n[1], sign_u * n[2]];
        let nbe = [sign_b * nbar[0], sign_b * nbar[1], sign_b * nbar[2]];
        if dot3(&ne, &nbe) >= -1e-12 {
            chosen = Some((swap_u, swap_b, ne, nbe));
            break;
        }
    }
    let (swap_u, swap_b, ne, nbe) =
        chosen.expect("one of the four assignments has nonnegative Bloch overlap");
    let cos2t = dot3(&ne, &nbe).clamp(-1.0, 1.0);
    let theta = 0.5 * cos2t.acos();

    // Orthonormal frame sending n−n̄ to x̂ and n+n̄ to ẑ.
    let sum = [ne[0] + nbe[0], ne[1] + nbe[1], ne[2] + nbe[2]];
    let diff = [ne[0] - nbe[0], ne[1] - nbe[1], ne[2] - nbe[2]];
    let e3 = normalize3(&sum);
    let diff_norm = dot3(&diff, &diff).sqrt();
    let e1 = if diff_norm > 1e-12 {
        let d = normalize3(&diff);
        // Re-orthogonalize against e3 to absorb rounding.
        let proj = dot3(&d, &e3);
        normalize3(&[d[0] - proj * e3[0], d[1] - proj * e3[1], d[2] - proj * e3[2]])
    } else {
        // Parallel vectors (θ ≈ 0): any unit vector orthogonal to e3 works.
        let pick = if e3[0].abs() < 0.9 {
            [1.0, 0.0, 0.0]
        } else {
            [0.0, 1.0, 0.0]
        };
        let proj = dot3(&pick, &e3);
        normalize3(&[
            pick[0] - proj * e3[0],
            pick[1] - proj * e3[1],
            pick[2] - proj * e3[2],
        ])
    };
    let e2 = cross3(&e3, &e1);
    let r = [
        [e1[0], e1[1], e1[2]],
        [e2[0], e2[1], e2[2]],
        [e3[0], e3[1], e3[2]],
    ];
    let [w, x, y, z] = quaternion_from_rotation(&r);
    let u = CMat::identity(2, 2).scale(w)
        - (sigma_x().scale(x) + sigma_y().scale(y) + sigma_z().scale(z)) * Complex64::i();

    let form = QubitPairCanonicalForm {
        theta,
        to_canonical: u,
        swap_unbarred: swap_u,
        swap_barred: swap_b,
    };

    // Internal consistency: the transported pair must hit the canonical one.
    let target = form.canonical_pair();
    let mut dev: f64 = 0.0;
    for (source, expected, swap) in [
        (pair.unbarred(), target.unbarred(), swap_u),
        (pair.barred(), target.barred(), swap_b),
    ] {
        for a in 0..2 {
            let from = if swap { 1 - a } else { a };
            let moved =
                &form.to_canonical * source.projector(from).matrix() * form.to_canonical.adjoint();
            dev = dev.max((moved - expected.projector(a).matrix()).max_abs());
        }
    }
    if dev > 1e-9 {
        return Err(EdrError::Invalid {
            context: "canonicalize",
            reason: format!("frame reconstruction deviates by {dev:.3e}"),
        });
    }
    Ok(form)
}

/// Checks that `pair` is the canonical pair for its own half-angle, within
/// [`CANONICAL_TOL`]; returns θ.
fn require_canonical(pair: &BasisPair) -> Result<f64> {
    if pair.dim() != 2 {
        return Err(EdrError::DimensionMismatch {
            expected: 2,
            found: pair.dim(),
        });
    }
    let overlap = (pair.unbarred().vector(0).adjoint() * pair.barred().vector(0))[(0, 0)].norm_sqr();
    let theta = 0.5 * (2.0 * overlap - 1.0).clamp(-1.0, 1.0).acos();
    if theta > THETA_MAX + RANGE_SLACK {
        return Err(EdrError::NotCanonicalFrame { deviation: theta - THETA_MAX });
    }
    let target = canonical_basis_pair(theta.min(THETA_MAX))?;
    let mut dev: f64 = 0.0;
    for (have, want) in [
        (pair.unbarred(), target.unbarred()),
        (pair.barred(), target.barred()),
    ] {
        for a in 0..2 {
            dev = dev.max((have.projector(a).matrix() - want.projector(a).matrix()).max_abs());
        }
    }
    if dev > CANONICAL_TOL {
        return Err(EdrError::NotCanonicalFrame { deviation: dev });
    }
    Ok(theta.min(THETA_MAX))
}

/// Averages a POVM over the eight-element symmetry group of the canonical
/// pair. The output is invariant under all three generators, has no σ_y
/// components, carries equal error components, and its total error never
/// exceeds the input's.
pub fn symmetrize(f: &JointPovm, pair: &BasisPair) -> Result<JointPovm> {
    require_canonical(pair)?;
    if f.dim() != 2 {
        return Err(EdrError::DimensionMismatch {
            expected: 2,
            found: f.dim(),
        });
    }
    let sz = sigma_z();
    let sy = sigma_y();
    let szy = &sz * &sy;
    let syz = &sy * &sz;
    let mut elements = Vec::with_capacity(4);
    for a in 0..2 {
        for b in 0..2 {
            let f_ab = f.element(a, b).matrix();
            let f_ba = f.element(b, a).matrix();
            let f_swap = f.element(1 - a, 1 - b).matrix();
            let f_swap_t = f.element(1 - b, 1 - a).matrix();
            let mut sum = f_ab.clone();
            sum += &sz * f_ba * &sz;
            sum += &sy * f_swap * &sy;
            sum += &szy * f_swap_t * &syz;
            sum += f_ab.map(|v| v.conj());
            sum += (&sz * f_ba.map(|v| v.conj())) * &sz;
            sum += (&sy * f_swap.map(|v| v.conj())) * &sy;
            sum += (&szy * f_swap_t.map(|v| v.conj())) * &syz;
            elements.push(HermitianOperator::new(sum.scale(1.0 / 8.0))?);
        }
    }
    Ok(JointPovm::new_unchecked(2, elements))
}

fn grid_from_blocks(blocks: [CMat; 4]) -> Result<JointPovm> {
    let [f11, f12, f21, f22] = blocks;
    JointPovm::new(vec![
        vec![HermitianOperator::new(f11)?, HermitianOperator::new(f12)?],
        vec![HermitianOperator::new(f21)?, HermitianOperator::new(f22)?],
    ])
}

/// The POVM attaining the variation-metric trade-off at half-angle θ.
pub fn optimal_variation_povm(theta: f64) -> Result<JointPovm> {
    let theta = check_theta(theta)?;
    let (s, co) = theta.sin_cos();
    let diag = 0.5 * (1.0 + co - s);
    let off = 0.25 * (1.0 - co + s);
    let id = CMat::identity(2, 2);
    let p_plus = (&id + sigma_z()).scale(0.5);
    let p_minus = (&id - sigma_z()).scale(0.5);
    grid_from_blocks([
        p_plus.scale(diag),
        (&id + sigma_x()).scale(off),
        (&id - sigma_x()).scale(off),
        p_minus.scale(diag),
    ])
}

/// The POVM attaining the calibration-metric trade-off at half-angle θ: a
/// sharp z-axis measurement feeding both outputs.
pub fn optimal_calibration_povm(theta: f64) -> Result<JointPovm> {
    check_theta(theta)?;
    let id = CMat::identity(2, 2);
    let p_plus = (&id + sigma_z()).scale(0.5);
    let p_minus = (&id - sigma_z()).scale(0.5);
    grid_from_blocks([p_plus, CMat::zeros(2, 2), CMat::zeros(2, 2), p_minus])
}

/// Tight lower bound on ε + ε̄ for the variation metric:
/// sin(π/4 + θ) − √2/2.
pub fn variation_bound(theta: f64) -> Result<f64> {
    let theta = check_theta(theta)?;
    // Clamp away the −1 ulp the subtraction can leave at θ = 0.
    Ok(((std::f64::consts::FRAC_PI_4 + theta).sin() - std::f64::consts::FRAC_1_SQRT_2).max(0.0))
}

/// Tight lower bound on ε + ε̄ for the calibration metric: 2 sin²(θ/2).
pub fn calibration_bound(theta: f64) -> Result<f64> {
    let theta = check_theta(theta)?;
    Ok(2.0 * (theta / 2.0).sin().powi(2))
}

pub fn tradeoff_bound(metric: ErrorMetric, theta: f64) -> Result<f64> {
    match metric {
        ErrorMetric::Calibration => calibration_bound(theta),
        ErrorMetric::Variation => variation_bound(theta),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::joint_errors;
    use crate::operators::trace_product;
    use crate::testutil::{random_basis, random_joint_povm, random_unitary, seeded_rng};
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn transformed_pair(pair: &BasisPair, u: &CMat, phases: &mut impl FnMut() -> f64) -> BasisPair {
        let mut move_basis = |basis: &ProjectiveBasis| {
            ProjectiveBasis::new(
                (0..2)
                    .map(|a| {
                        let phase = Complex64::from_polar(1.0, phases());
                        (u * basis.vector(a)).map(|v| v * phase)
                    })
                    .collect(),
            )
            .unwrap()
        };
        BasisPair::new(move_basis(pair.unbarred()), move_basis(pair.barred())).unwrap()
    }

    #[test]
    fn canonicalize_degenerate_and_unbiased_pairs() {
        let mut rng = seeded_rng(51);
        let basis = random_basis(&mut rng, 2);
        let pair = BasisPair::new(basis.clone(), basis).unwrap();
        let form = canonicalize(&pair).unwrap();
        assert_abs_diff_eq!(form.theta(), 0.0, epsilon = 1e-7);

        // σ_z against σ_x eigenbases: maximally incompatible, θ = π/4.
        let z = ProjectiveBasis::computational(2).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let x = ProjectiveBasis::new(vec![
            CVec::from_vec(vec![c(s, 0.0), c(s, 0.0)]),
            CVec::from_vec(vec![c(s, 0.0), c(-s, 0.0)]),
        ])
        .unwrap();
        let pair = BasisPair::new(z, x).unwrap();
        let form = canonicalize(&pair).unwrap();
        assert_abs_diff_eq!(form.theta(), THETA_MAX, epsilon = 1e-12);
        assert_eq!(form.relabel(), (false, false));
    }

    #[test]
    fn canonicalize_recovers_planted_angle() {
        let mut rng = seeded_rng(52);
        for _ in 0..100 {
            let theta = rng.random_range(0.0..=THETA_MAX);
            let canonical = canonical_basis_pair(theta).unwrap();
            let u = random_unitary(&mut rng, 2);
            let mut phase_rng = rng.clone();
            let mut phases = move || phase_rng.random_range(0.0..std::f64::consts::TAU);
            let scrambled = transformed_pair(&canonical, &u, &mut phases);
            // Also scramble labels.
            let swap_u = rng.random_bool(0.5);
            let swap_b = rng.random_bool(0.5);
            let perm = |swap: bool| if swap { vec![1usize, 0] } else { vec![0usize, 1] };
            let scrambled = BasisPair::new(
                scrambled.unbarred().permuted(&perm(swap_u)).unwrap(),
                scrambled.barred().permuted(&perm(swap_b)).unwrap(),
            )
            .unwrap();
            let form = canonicalize(&scrambled).unwrap();
            assert_abs_diff_eq!(form.theta(), theta, epsilon = 1e-9);

            // |⟨1|1̄⟩|² = cos²θ relation after relabeling.
            let (su, sb) = form.relabel();
            let v = scrambled.unbarred().vector(usize::from(su));
            let vb = scrambled.barred().vector(usize::from(sb));
            let overlap = (v.adjoint() * vb)[(0, 0)].norm_sqr();
            assert_abs_diff_eq!(overlap, theta.cos().powi(2), epsilon = 1e-9);
        }
    }

    #[test]
    fn povm_transport_preserves_errors_and_roundtrips() {
        let mut rng = seeded_rng(53);
        for _ in 0..50 {
            let theta = rng.random_range(0.0..=THETA_MAX);
            let canonical = canonical_basis_pair(theta).unwrap();
            let u = random_unitary(&mut rng, 2);
            let mut phase_rng = rng.clone();
            let mut phases = move || phase_rng.random_range(0.0..std::f64::consts::TAU);
            let pair = transformed_pair(&canonical, &u, &mut phases);
            let form = canonicalize(&pair).unwrap();

            let f = random_joint_povm(&mut rng, 2);
            let moved = form.to_canonical_povm(&f).unwrap();
            let back = form.from_canonical_povm(&moved).unwrap();
            for a in 0..2 {
                for b in 0..2 {
                    assert!(
                        (back.element(a, b).matrix() - f.element(a, b).matrix()).max_abs() < 1e-12
                    );
                }
            }
            for metric in [ErrorMetric::Calibration, ErrorMetric::Variation] {
                let before = joint_errors(&f, &pair, metric).unwrap();
                let after = joint_errors(&moved, &form.canonical_pair(), metric).unwrap();
                assert_abs_diff_eq!(before.epsilon, after.epsilon, epsilon = 1e-10);
                assert_abs_diff_eq!(before.epsilon_bar, after.epsilon_bar, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn symmetrize_rejects_non_canonical_pairs() {
        let mut rng = seeded_rng(54);
        let pair = crate::testutil::random_pair(&mut rng, 2);
        let f = random_joint_povm(&mut rng, 2);
        assert!(matches!(
            symmetrize(&f, &pair),
            Err(EdrError::NotCanonicalFrame { .. })
        ));
    }

    #[test]
    fn symmetrize_fixes_the_optimal_calibration_povm() {
        let theta = 0.3;
        let pair = canonical_basis_pair(theta).unwrap();
        let f = optimal_calibration_povm(theta).unwrap();
        let g = symmetrize(&f, &pair).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                assert!((g.element(a, b).matrix() - f.element(a, b).matrix()).max_abs() < 1e-14);
            }
        }
    }

    #[test]
    fn symmetrize_cancels_sigma_y_components() {
        let theta = THETA_MAX;
        let pair = canonical_basis_pair(theta).unwrap();
        // Valid grid with σ_y components: mix the sharp grid toward the flat
        // grid 𝟙/4 (so every element has full rank), then push ±0.1σ_y into
        // the diagonal blocks.
        let sharp = optimal_calibration_povm(theta).unwrap();
        let quarter = HermitianOperator::new(CMat::identity(2, 2).scale(0.25)).unwrap();
        let flat = JointPovm::new(vec![
            vec![quarter.clone(), quarter.clone()],
            vec![quarter.clone(), quarter],
        ])
        .unwrap();
        let mixed = sharp.mix(&flat, 0.9).unwrap();
        let perturbation = sigma_y().scale(0.1);
        let grid = vec![
            vec![
                HermitianOperator::new(mixed.element(0, 0).matrix() + &perturbation).unwrap(),
                mixed.element(0, 1).clone(),
            ],
            vec![
                mixed.element(1, 0).clone(),
                HermitianOperator::new(mixed.element(1, 1).matrix() - &perturbation).unwrap(),
            ],
        ];
        let f = JointPovm::new(grid).unwrap();
        let sy = HermitianOperator::new(sigma_y()).unwrap();
        assert!(trace_product(f.element(0, 0), &sy).unwrap().abs() > 0.19);

        let g = symmetrize(&f, &pair).unwrap();
        let mats: Vec<Vec<CMat>> = (0..2)
            .map(|a| (0..2).map(|b| g.element(a, b).matrix().clone()).collect())
            .collect();
        assert!(crate::measurement::validate_joint_povm(&mats, 1e-9).is_ok());
        for a in 0..2 {
            for b in 0..2 {
                assert_abs_diff_eq!(
                    trace_product(g.element(a, b), &sy).unwrap(),
                    0.0,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn symmetrize_satisfies_group_relations_and_equalizes_errors() {
        let mut rng = seeded_rng(55);
        let sz = sigma_z();
        let sy = sigma_y();
        for _ in 0..200 {
            let theta = rng.random_range(0.0..=THETA_MAX);
            let pair = canonical_basis_pair(theta).unwrap();
            let f = random_joint_povm(&mut rng, 2);
            let g = symmetrize(&f, &pair).unwrap();

            // F_ab = σ_z F_ba σ_z, F_ab = σ_y F_{āb̄} σ_y, F_ab real.
            for a in 0..2 {
                for b in 0..2 {
                    let g_ab = g.element(a, b).matrix();
                    let z_img = &sz * g.element(b, a).matrix() * &sz;
                    assert!((g_ab - z_img).max_abs() < 1e-13);
                    let y_img = &sy * g.element(1 - a, 1 - b).matrix() * &sy;
                    assert!((g_ab - y_img).max_abs() < 1e-13);
                    let conj_img = g_ab.map(|v| v.conj());
                    assert!((g_ab - conj_img).max_abs() < 1e-13);
                }
            }

            for metric in [ErrorMetric::Calibration, ErrorMetric::Variation] {
                let before = joint_errors(&f, &pair, metric).unwrap();
                let after = joint_errors(&g, &pair, metric).unwrap();
                assert_abs_diff_eq!(after.epsilon, after.epsilon_bar, epsilon = 1e-10);
                assert!(
                    after.epsilon + after.epsilon_bar
                        <= before.epsilon + before.epsilon_bar + 1e-10
                );
            }
        }
    }

    #[test]
    fn sigma_z_conjugate_swaps_error_components() {
        let mut rng = seeded_rng(56);
        for _ in 0..100 {
            let theta = rng.random_range(0.0..=THETA_MAX);
            let pair = canonical_basis_pair(theta).unwrap();
            let f = random_joint_povm(&mut rng, 2);
            // g_z image: σ_z conjugation composed with the output transpose.
            let s = crate::measurement::SymmetryOp::unitary(sigma_z()).unwrap();
            let id_perm = [0, 1];
            let g = f.transpose_outputs().conjugate(&s, &id_perm, &id_perm).unwrap();
            for metric in [ErrorMetric::Calibration, ErrorMetric::Variation] {
                let before = joint_errors(&f, &pair, metric).unwrap();
                let after = joint_errors(&g, &pair, metric).unwrap();
                assert_abs_diff_eq!(after.epsilon, before.epsilon_bar, epsilon = 1e-12);
                assert_abs_diff_eq!(after.epsilon_bar, before.epsilon, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn averaging_with_sigma_z_conjugate_is_symmetric_in_sigma_z() {
        let mut rng = seeded_rng(57);
        let f = random_joint_povm(&mut rng, 2);
        let s = crate::measurement::SymmetryOp::unitary(sigma_z()).unwrap();
        let id_perm = [0, 1];
        let g = f.transpose_outputs().conjugate(&s, &id_perm, &id_perm).unwrap();
        let avg = f.mix(&g, 0.5).unwrap();
        let sz = sigma_z();
        for a in 0..2 {
            for b in 0..2 {
                let img = &sz * avg.element(b, a).matrix() * &sz;
                assert!((avg.element(a, b).matrix() - img).max_abs() < 1e-13);
            }
        }
    }

    #[test]
    fn optimal_variation_povm_structure_and_errors() {
        // θ = 0: sharp diagonal grid, zero error.
        let f = optimal_variation_povm(0.0).unwrap();
        assert!((f.element(0, 1).matrix().max_abs()) < 1e-15);
        assert!((f.element(1, 0).matrix().max_abs()) < 1e-15);
        let pair = canonical_basis_pair(0.0).unwrap();
        let report = joint_errors(&f, &pair, ErrorMetric::Variation).unwrap();
        assert_abs_diff_eq!(report.epsilon, 0.0, epsilon = 1e-12);

        // θ = π/4: F₁₁ = ½P₊, F₁₂ = ¼(𝟙+σ_x); ε+ε̄ = 1 − √2/2.
        let f = optimal_variation_povm(THETA_MAX).unwrap();
        let p_plus = (CMat::identity(2, 2) + sigma_z()).scale(0.5);
        assert!((f.element(0, 0).matrix() - p_plus.scale(0.5)).max_abs() < 1e-14);
        let off = (CMat::identity(2, 2) + sigma_x()).scale(0.25);
        assert!((f.element(0, 1).matrix() - off).max_abs() < 1e-14);
        let pair = canonical_basis_pair(THETA_MAX).unwrap();
        let report = joint_errors(&f, &pair, ErrorMetric::Variation).unwrap();
        assert_abs_diff_eq!(
            report.epsilon + report.epsilon_bar,
            1.0 - std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(report.epsilon + report.epsilon_bar, 0.29289, epsilon = 5e-6);

        // θ = π/6: ε+ε̄ = sin(5π/12) − √2/2.
        let theta = std::f64::consts::FRAC_PI_6;
        let f = optimal_variation_povm(theta).unwrap();
        let pair = canonical_basis_pair(theta).unwrap();
        let report = joint_errors(&f, &pair, ErrorMetric::Variation).unwrap();
        let expected = (5.0 * std::f64::consts::PI / 12.0).sin() - std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(report.epsilon + report.epsilon_bar, expected, epsilon = 1e-10);
        assert_abs_diff_eq!(report.epsilon + report.epsilon_bar, 0.25882, epsilon = 5e-6);
    }

    #[test]
    fn optimal_calibration_povm_structure_and_errors() {
        let f = optimal_calibration_povm(0.0).unwrap();
        let pair = canonical_basis_pair(0.0).unwrap();
        let report = joint_errors(&f, &pair, ErrorMetric::Calibration).unwrap();
        assert_abs_diff_eq!(report.epsilon, 0.0, epsilon = 1e-14);

        let f = optimal_calibration_povm(THETA_MAX).unwrap();
        let pair = canonical_basis_pair(THETA_MAX).unwrap();
        let report = joint_errors(&f, &pair, ErrorMetric::Calibration).unwrap();
        assert_abs_diff_eq!(
            report.epsilon + report.epsilon_bar,
            1.0 - std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-12
        );

        assert!(optimal_calibration_povm(std::f64::consts::FRAC_PI_3).is_err());
        assert!(optimal_variation_povm(-0.2).is_err());
    }

    #[test]
    fn bounds_closed_forms_and_monotonicity() {
        assert_abs_diff_eq!(variation_bound(0.0).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(calibration_bound(0.0).unwrap(), 0.0, epsilon = 1e-15);
        let mub = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(variation_bound(THETA_MAX).unwrap(), mub, epsilon = 1e-15);
        assert_abs_diff_eq!(calibration_bound(THETA_MAX).unwrap(), mub, epsilon = 1e-15);
        assert_abs_diff_eq!(
            calibration_bound(std::f64::consts::FRAC_PI_6).unwrap(),
            1.0 - (std::f64::consts::FRAC_PI_6).cos(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            calibration_bound(std::f64::consts::FRAC_PI_6).unwrap(),
            0.13397,
            epsilon = 5e-6
        );

        let grid = 50;
        let mut prev = (0.0, 0.0);
        for k in 0..=grid {
            let theta = THETA_MAX * k as f64 / grid as f64;
            let v = variation_bound(theta).unwrap();
            let c = calibration_bound(theta).unwrap();
            assert!(v >= 0.0 && c >= 0.0);
            if k > 0 {
                assert!(v >= prev.0 - 1e-15);
                assert!(c >= prev.1 - 1e-15);
            }
            prev = (v, c);
        }
    }

    #[test]
    fn optimal_povms_attain_bounds_on_grid() {
        for k in 0..20 {
            let theta = THETA_MAX * k as f64 / 19.0;
            let pair = canonical_basis_pair(theta).unwrap();

            let f = optimal_variation_povm(theta).unwrap();
            let report = joint_errors(&f, &pair, ErrorMetric::Variation).unwrap();
            let bound = variation_bound(theta).unwrap();
            assert_abs_diff_eq!(report.epsilon + report.epsilon_bar, bound, epsilon = 1e-10);
            assert_abs_diff_eq!(
                report.epsilon,
                0.5 * ((std::f64::consts::FRAC_PI_4 + theta).sin() - std::f64::consts::FRAC_1_SQRT_2),
                epsilon = 1e-10
            );

            let f = optimal_calibration_povm(theta).unwrap();
            let report = joint_errors(&f, &pair, ErrorMetric::Calibration).unwrap();
            let bound = calibration_bound(theta).unwrap();
            assert_abs_diff_eq!(report.epsilon + report.epsilon_bar, bound, epsilon = 1e-12);
            assert_abs_diff_eq!(report.epsilon, (theta / 2.0).sin().powi(2), epsilon = 1e-12);
        }
    }

    #[test]
    fn random_symmetrized_povms_respect_bounds() {
        let mut rng = seeded_rng(58);
        for k in 0..20 {
            let theta = THETA_MAX * k as f64 / 19.0;
            let pair = canonical_basis_pair(theta).unwrap();
            for _ in 0..100 {
                let f = random_joint_povm(&mut rng, 2);
                let g = symmetrize(&f, &pair).unwrap();
                for metric in [ErrorMetric::Calibration, ErrorMetric::Variation] {
                    let report = joint_errors(&g, &pair, metric).unwrap();
                    let bound = tradeoff_bound(metric, theta).unwrap();
                    assert!(
                        report.epsilon + report.epsilon_bar >= bound - 1e-9,
                        "metric {metric} at theta {theta}: {} < {bound}",
                        report.epsilon + report.epsilon_bar
                    );
                }
            }
        }
    }
}
