//! Quantum instruments in Kraus form and their error-disturbance reading.
//!
//! An instrument assigns each of the N outcomes a finite family of Kraus
//! factors `V_ak`; outcome `a` occurs with probability `tr Σ_k V_ak ρ V†_ak`
//! and leaves the normalized post-state behind. Measuring the barred basis
//! on the post-state induces the joint POVM `F_ab = Σ_k V†_ak P̄_b V_ak`,
//! whose error report pairs the measurement error on the unbarred observable
//! with the disturbance to the barred one.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{EdrError, Result};
use crate::measurement::{BasisPair, JointPovm, MarginalPovm, ProjectiveBasis, PROB_FLOOR};
use crate::metrics::{metric_error, ErrorMetric, ErrorReport};
use crate::operators::{check_dim, CMat, DensityOperator, HermitianOperator, MaxAbs};

/// Completeness tolerance for Σ V†V = 𝟙 (largest entry deviation).
pub const KRAUS_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct Instrument {
    dim: usize,
    families: Vec<Vec<CMat>>,
}

impl Instrument {
    /// One Kraus family per outcome; families may be empty (the outcome then
    /// never occurs). The factors must jointly satisfy Σ V†V = 𝟙.
    pub fn new(families: Vec<Vec<CMat>>) -> Result<Self> {
        let dim = families.len();
        check_dim(dim)?;
        let mut sum = CMat::zeros(dim, dim);
        for family in &families {
            for v in family {
                if v.nrows() != dim || v.ncols() != dim {
                    return Err(EdrError::DimensionMismatch {
                        expected: dim,
                        found: v.nrows().max(v.ncols()),
                    });
                }
                sum += v.adjoint() * v;
            }
        }
        let defect = (sum - CMat::identity(dim, dim)).max_abs();
        if defect > KRAUS_TOL {
            return Err(EdrError::CompletenessDefect {
                deviation: defect,
                tolerance: KRAUS_TOL,
            });
        }
        Ok(Self { dim, families })
    }

    /// Lüders instrument of a projective measurement: V_a = |a⟩⟨a|.
    pub fn projective(basis: &ProjectiveBasis) -> Self {
        let families = (0..basis.dim())
            .map(|a| vec![basis.projector(a).into_matrix()])
            .collect();
        Self {
            dim: basis.dim(),
            families,
        }
    }

    /// Measure-and-prepare instrument: measure `measured`, then hand over the
    /// matching `prepared` vector. V_a = |prepared_a⟩⟨measured_a|.
    pub fn measure_and_prepare(measured: &ProjectiveBasis, prepared: &ProjectiveBasis) -> Result<Self> {
        if measured.dim() != prepared.dim() {
            return Err(EdrError::DimensionMismatch {
                expected: measured.dim(),
                found: prepared.dim(),
            });
        }
        let families = (0..measured.dim())
            .map(|a| vec![prepared.vector(a) * measured.vector(a).adjoint()])
            .collect();
        Self::new(families)
    }

    /// Haar-like random instrument: a random isometry from the system into
    /// `dim * kraus_per_outcome` copies of itself, its row blocks partitioned
    /// into equal-size outcome families. Deterministic in `seed`.
    pub fn random(dim: usize, kraus_per_outcome: usize, seed: u64) -> Result<Self> {
        check_dim(dim)?;
        if kraus_per_outcome == 0 || kraus_per_outcome > MAX_KRAUS_PER_OUTCOME {
            return Err(EdrError::OutOfDomain {
                name: "kraus_per_outcome",
                value: kraus_per_outcome as f64,
                min: 1.0,
                max: MAX_KRAUS_PER_OUTCOME as f64,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let blocks = dim * kraus_per_outcome;
        let gauss = DMatrix::from_fn(blocks * dim, dim, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let q = gauss.qr().q();
        let families = (0..dim)
            .map(|a| {
                (0..kraus_per_outcome)
                    .map(|k| {
                        let start = (a * kraus_per_outcome + k) * dim;
                        q.rows(start, dim).into_owned()
                    })
                    .collect()
            })
            .collect();
        Self::new(families)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn families(&self) -> &[Vec<CMat>] {
        &self.families
    }

    /// Outcome probability and normalized post-state; no post-state when the
    /// probability sits below the floor.
    pub fn apply(&self, a: usize, rho: &DensityOperator) -> Result<(f64, Option<DensityOperator>)> {
        if a >= self.dim {
            return Err(EdrError::OutcomeOutOfRange {
                index: a,
                count: self.dim,
            });
        }
        if rho.dim() != self.dim {
            return Err(EdrError::DimensionMismatch {
                expected: self.dim,
                found: rho.dim(),
            });
        }
        let mut out = CMat::zeros(self.dim, self.dim);
        for v in &self.families[a] {
            out += v * rho.matrix() * v.adjoint();
        }
        let prob: f64 = (0..self.dim).map(|i| out[(i, i)].re).sum();
        if prob < -PROB_FLOOR || prob > 1.0 + PROB_FLOOR {
            return Err(EdrError::OutOfDomain {
                name: "outcome probability",
                value: prob,
                min: 0.0,
                max: 1.0,
            });
        }
        if prob <= PROB_FLOOR {
            return Ok((prob.max(0.0), None));
        }
        let post = DensityOperator::new(HermitianOperator::new(out.scale(1.0 / prob))?)?;
        Ok((prob.clamp(0.0, 1.0), Some(post)))
    }

    /// Joint POVM of first measuring with the instrument, then measuring the
    /// barred basis on what is left: F_ab = Σ_k V†_ak P̄_b V_ak.
    pub fn induced_joint_povm(&self, barred: &ProjectiveBasis) -> Result<JointPovm> {
        if barred.dim() != self.dim {
            return Err(EdrError::DimensionMismatch {
                expected: self.dim,
                found: barred.dim(),
            });
        }
        let mut elements = Vec::with_capacity(self.dim * self.dim);
        for a in 0..self.dim {
            for b in 0..self.dim {
                let proj = barred.projector(b);
                let mut sum = CMat::zeros(self.dim, self.dim);
                for v in &self.families[a] {
                    sum += v.adjoint() * proj.matrix() * v;
                }
                elements.push(HermitianOperator::new(sum)?);
            }
        }
        Ok(JointPovm::new_unchecked(self.dim, elements))
    }

    /// Measurement POVM of the instrument itself: M_a = Σ_k V†_ak V_ak.
    pub fn first_marginal(&self) -> MarginalPovm {
        let elements = self
            .families
            .iter()
            .map(|family| {
                let mut sum = CMat::zeros(self.dim, self.dim);
                for v in family {
                    sum += v.adjoint() * v;
                }
                HermitianOperator::new(sum).expect("Gram sum is Hermitian")
            })
            .collect();
        MarginalPovm::new_unchecked(self.dim, elements)
    }

    /// Error-disturbance report: ε is the chosen metric between the
    /// instrument's own POVM and the unbarred basis; η̄ is the same metric
    /// between the barred measurement after the instrument and the barred
    /// basis.
    pub fn error_disturbance(&self, pair: &BasisPair, metric: ErrorMetric) -> Result<ErrorReport> {
        if pair.dim() != self.dim {
            return Err(EdrError::DimensionMismatch {
                expected: self.dim,
                found: pair.dim(),
            });
        }
        let m = self.first_marginal();
        let induced = self.induced_joint_povm(pair.barred())?;
        let mbar = induced.marginal_second();
        let first = metric_error(metric, &m, pair.unbarred())?;
        let second = metric_error(metric, &mbar, pair.barred())?;
        Ok(ErrorReport {
            metric,
            epsilon: first.value,
            epsilon_bar: second.value,
            epsilon_witness: first.witness,
            epsilon_bar_witness: second.witness,
        })
    }

    /// Composition with a trailing channel given by Kraus factors `W_j`
    /// (Σ W†W = 𝟙): the new families are {W_j V_ak}. Post-processing of the
    /// quantum output can only change the disturbance, never the outcome
    /// statistics.
    pub fn then_channel(&self, channel: &[CMat]) -> Result<Self> {
        let mut gram = CMat::zeros(self.dim, self.dim);
        for w in channel {
            if w.nrows() != self.dim || w.ncols() != self.dim {
                return Err(EdrError::DimensionMismatch {
                    expected: self.dim,
                    found: w.nrows().max(w.ncols()),
                });
            }
            gram += w.adjoint() * w;
        }
        let defect = (gram - CMat::identity(self.dim, self.dim)).max_abs();
        if defect > KRAUS_TOL {
            return Err(EdrError::CompletenessDefect {
                deviation: defect,
                tolerance: KRAUS_TOL,
            });
        }
        let families = self
            .families
            .iter()
            .map(|family| {
                family
                    .iter()
                    .flat_map(|v| channel.iter().map(move |w| w * v))
                    .collect()
            })
            .collect();
        Self::new(families)
    }
}

const MAX_KRAUS_PER_OUTCOME: usize = 16;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::validate_joint_povm;
    use crate::metrics::joint_errors;
    use crate::operators::{trace_product, CVec, PSD_TOL};
    use crate::testutil::{random_density, seeded_rng};
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn tilted_pair(theta: f64) -> BasisPair {
        let half = theta / 2.0;
        let unbarred = ProjectiveBasis::new(vec![
            CVec::from_vec(vec![c(half.cos(), 0.0), c(half.sin(), 0.0)]),
            CVec::from_vec(vec![c(-half.sin(), 0.0), c(half.cos(), 0.0)]),
        ])
        .unwrap();
        let barred = ProjectiveBasis::new(vec![
            CVec::from_vec(vec![c(half.cos(), 0.0), c(-half.sin(), 0.0)]),
            CVec::from_vec(vec![c(half.sin(), 0.0), c(half.cos(), 0.0)]),
        ])
        .unwrap();
        BasisPair::new(unbarred, barred).unwrap()
    }

    #[test]
    fn rejects_incomplete_kraus_sums() {
        let half = CMat::identity(2, 2).scale(0.5);
        assert!(matches!(
            Instrument::new(vec![vec![half.clone()], vec![half]]),
            Err(EdrError::CompletenessDefect { .. })
        ));
    }

    #[test]
    fn projective_instrument_on_eigenstate_and_mixed_input() {
        let basis = ProjectiveBasis::computational(2).unwrap();
        let instr = Instrument::projective(&basis);
        let rho = DensityOperator::pure(basis.vector(0)).unwrap();
        let (p0, post) = instr.apply(0, &rho).unwrap();
        assert_abs_diff_eq!(p0, 1.0, epsilon = 1e-12);
        assert!((post.unwrap().matrix() - basis.projector(0).matrix()).max_abs() < 1e-12);
        let (p1, post) = instr.apply(1, &rho).unwrap();
        assert_abs_diff_eq!(p1, 0.0, epsilon = 1e-12);
        assert!(post.is_none());

        let mixed = DensityOperator::maximally_mixed(2).unwrap();
        for a in 0..2 {
            let (p, post) = instr.apply(a, &mixed).unwrap();
            assert_abs_diff_eq!(p, 0.5, epsilon = 1e-12);
            assert!((post.unwrap().matrix() - basis.projector(a).matrix()).max_abs() < 1e-12);
        }
    }

    #[test]
    fn single_family_preparer_resets_every_state() {
        // V_11 = |1⟩⟨1|, V_12 = |1⟩⟨2|: one usable outcome, rank-one image.
        let e0 = CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let e1 = CVec::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let v11 = &e0 * e0.adjoint();
        let v12 = &e0 * e1.adjoint();
        let instr = Instrument::new(vec![vec![v11, v12], vec![]]).unwrap();

        let mut rng = seeded_rng(41);
        for _ in 0..20 {
            let rho = random_density(&mut rng, 2);
            let (p, post) = instr.apply(0, &rho).unwrap();
            assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
            let post = post.unwrap();
            assert_abs_diff_eq!(post.matrix()[(0, 0)].re, 1.0, epsilon = 1e-12);
            let (p, post) = instr.apply(1, &rho).unwrap();
            assert_abs_diff_eq!(p, 0.0, epsilon = 1e-15);
            assert!(post.is_none());
        }
    }

    #[test]
    fn induced_povm_trivial_grids() {
        let basis = ProjectiveBasis::computational(2).unwrap();
        let instr = Instrument::projective(&basis);

        // Barred = unbarred: F_ab = P_a δ_ab.
        let f = instr.induced_joint_povm(&basis).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let expected = if a == b {
                    basis.projector(a).into_matrix()
                } else {
                    CMat::zeros(2, 2)
                };
                assert!((f.element(a, b).matrix() - expected).max_abs() < 1e-13);
            }
        }

        // Barred = Fourier basis: F_ab = P_a / 2.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let fourier = ProjectiveBasis::new(vec![
            CVec::from_vec(vec![c(s, 0.0), c(-s, 0.0)]),
            CVec::from_vec(vec![c(s, 0.0), c(s, 0.0)]),
        ])
        .unwrap();
        let f = instr.induced_joint_povm(&fourier).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                assert!(
                    (f.element(a, b).matrix() - basis.projector(a).matrix().scale(0.5)).max_abs()
                        < 1e-13
                );
            }
        }
    }

    #[test]
    fn induced_povm_matches_post_state_statistics() {
        let mut rng = seeded_rng(42);
        for _ in 0..50 {
            let dim = 2 + rng.random_range(0..2);
            let instr = Instrument::random(dim, 2, rng.random()).unwrap();
            let barred = crate::testutil::random_basis(&mut rng, dim);
            let f = instr.induced_joint_povm(&barred).unwrap();
            let rho = random_density(&mut rng, dim);
            for a in 0..dim {
                let (prob, post) = instr.apply(a, &rho).unwrap();
                for b in 0..dim {
                    let lhs = trace_product(f.element(a, b), rho.operator()).unwrap();
                    let rhs = match &post {
                        Some(state) => {
                            prob * trace_product(&barred.projector(b), state.operator()).unwrap()
                        }
                        None => 0.0,
                    };
                    assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn z_axis_preparer_reproduces_optimal_calibration_povm() {
        let theta = 0.61;
        let pair = tilted_pair(theta);
        let z = ProjectiveBasis::computational(2).unwrap();
        let instr = Instrument::measure_and_prepare(&z, pair.barred()).unwrap();

        // The induced grid is diagonal with z-projectors on the diagonal.
        let f = instr.induced_joint_povm(pair.barred()).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let expected = if a == b {
                    z.projector(a).into_matrix()
                } else {
                    CMat::zeros(2, 2)
                };
                assert!((f.element(a, b).matrix() - expected).max_abs() < 1e-12);
            }
        }

        let report = instr
            .error_disturbance(&pair, ErrorMetric::Calibration)
            .unwrap();
        let expected = (theta / 2.0).sin().powi(2);
        assert_abs_diff_eq!(report.epsilon, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(report.epsilon_bar, expected, epsilon = 1e-12);
    }

    #[test]
    fn z_axis_preparer_error_sum_at_pi_over_4() {
        let theta = std::f64::consts::FRAC_PI_4;
        let pair = tilted_pair(theta);
        let z = ProjectiveBasis::computational(2).unwrap();
        let instr = Instrument::measure_and_prepare(&z, pair.barred()).unwrap();
        let report = instr
            .error_disturbance(&pair, ErrorMetric::Calibration)
            .unwrap();
        assert_abs_diff_eq!(report.epsilon + report.epsilon_bar, 0.29289, epsilon = 5e-6);
        assert_abs_diff_eq!(
            report.epsilon + report.epsilon_bar,
            2.0 * (theta / 2.0).sin().powi(2),
            epsilon = 1e-12
        );
    }

    #[test]
    fn exact_measurement_has_zero_error() {
        let pair = tilted_pair(0.5);
        let instr = Instrument::projective(pair.unbarred());
        let report = instr
            .error_disturbance(&pair, ErrorMetric::Calibration)
            .unwrap();
        assert_abs_diff_eq!(report.epsilon, 0.0, epsilon = 1e-12);
        // The disturbance equals the direct metric between the dephased
        // barred measurement and the barred basis.
        let induced = instr.induced_joint_povm(pair.barred()).unwrap();
        let direct = joint_errors(&induced, &pair, ErrorMetric::Calibration).unwrap();
        assert_abs_diff_eq!(report.epsilon_bar, direct.epsilon_bar, epsilon = 1e-14);
    }

    #[test]
    fn random_instruments_are_valid_and_consistent() {
        let mut rng = seeded_rng(43);
        for trial in 0..200 {
            let dim = 2 + trial % 2;
            let kraus = 1 + rng.random_range(0..3);
            let instr = Instrument::random(dim, kraus, rng.random()).unwrap();
            let barred = crate::testutil::random_basis(&mut rng, dim);
            let f = instr.induced_joint_povm(&barred).unwrap();
            let mats: Vec<Vec<CMat>> = (0..dim)
                .map(|a| {
                    (0..dim)
                        .map(|b| f.element(a, b).matrix().clone())
                        .collect()
                })
                .collect();
            assert!(validate_joint_povm(&mats, PSD_TOL).is_ok());

            // Two expressions for the measurement POVM agree.
            let m_direct = instr.first_marginal();
            let m_induced = f.marginal_first();
            for a in 0..dim {
                assert!(
                    (m_direct.element(a).matrix() - m_induced.element(a).matrix()).max_abs() < 1e-10
                );
            }
        }
    }

    #[test]
    fn determinism_of_random_generator() {
        let a = Instrument::random(3, 2, 7).unwrap();
        let b = Instrument::random(3, 2, 7).unwrap();
        for (fa, fb) in a.families().iter().zip(b.families()) {
            for (va, vb) in fa.iter().zip(fb) {
                assert!((va - vb).max_abs() == 0.0);
            }
        }
        let c = Instrument::random(3, 2, 8).unwrap();
        let differs = a
            .families()
            .iter()
            .zip(c.families())
            .any(|(fa, fc)| fa.iter().zip(fc).any(|(va, vc)| (va - vc).max_abs() > 1e-6));
        assert!(differs);
    }

    #[test]
    fn trailing_channel_preserves_outcome_statistics() {
        let mut rng = seeded_rng(44);
        let instr = Instrument::random(2, 2, 99).unwrap();
        // Random 2-factor channel from a Haar-like isometry.
        let gauss = crate::testutil::random_complex_gaussian(&mut rng, 4, 2);
        let q = gauss.qr().q();
        let channel = vec![q.rows(0, 2).into_owned(), q.rows(2, 2).into_owned()];
        let composed = instr.then_channel(&channel).unwrap();
        let m_before = instr.first_marginal();
        let m_after = composed.first_marginal();
        for a in 0..2 {
            assert!((m_before.element(a).matrix() - m_after.element(a).matrix()).max_abs() < 1e-10);
        }
    }
}
