//! Calibration and variation error measures with attained witnesses.
//!
//! The calibration error of a marginal POVM against its reference basis is
//! the worst error probability on an eigenstate input,
//! `d_c = max_a (1 − ⟨a|M_a|a⟩)`. The variation error is the worst-case
//! distinguishability over outcome subsets,
//! `d_v = max_X ‖Σ_{a∈X} (M_a − P_a)‖`, which dominates `d_c`. Both clamp to
//! `[0, 1]` and report the witness attaining the maximum.

use crate::error::{EdrError, Result};
use crate::measurement::{BasisPair, JointPovm, MarginalPovm, ProjectiveBasis, COMPLETENESS_TOL, PROB_FLOOR};
use crate::operators::{
    trace_product, CMat, DensityOperator, HermitianOperator, MaxAbs, MAX_DIM, PSD_TOL,
};

/// Minimum eigenvalue separation for an observable to count as
/// non-degenerate.
pub const DISTINCT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorMetric {
    Calibration,
    Variation,
}

impl ErrorMetric {
    pub fn name(self) -> &'static str {
        match self {
            ErrorMetric::Calibration => "calibration",
            ErrorMetric::Variation => "variation",
        }
    }
}

impl std::fmt::Display for ErrorMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// What attains a reported error value: the worst eigenstate label for the
/// calibration metric, the worst outcome subset for the variation metric.
/// Labels are 0-based here, 1-based in JSON.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    Index(usize),
    Subset(Vec<usize>),
}

/// An error value together with the witness that attains it.
#[derive(Clone, Debug)]
pub struct ErrorValue {
    pub value: f64,
    pub witness: Witness,
}

/// Both error components of a joint POVM against its reference pair.
#[derive(Clone, Debug)]
pub struct ErrorReport {
    pub metric: ErrorMetric,
    pub epsilon: f64,
    pub epsilon_bar: f64,
    pub epsilon_witness: Witness,
    pub epsilon_bar_witness: Witness,
}

fn check_dims(m: &MarginalPovm, p: &ProjectiveBasis) -> Result<()> {
    if m.dim() != p.dim() {
        return Err(EdrError::DimensionMismatch {
            expected: p.dim(),
            found: m.dim(),
        });
    }
    Ok(())
}

fn clamp_unit(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Worst error probability over eigenstate inputs, with the smallest
/// maximizing label as witness.
pub fn calibration_error(m: &MarginalPovm, p: &ProjectiveBasis) -> Result<ErrorValue> {
    check_dims(m, p)?;
    let mut best = f64::NEG_INFINITY;
    let mut witness = 0;
    for a in 0..m.dim() {
        let v = calibration_error_for(m, p, a)?;
        if v > best {
            best = v;
            witness = a;
        }
    }
    Ok(ErrorValue {
        value: best,
        witness: Witness::Index(witness),
    })
}

/// The calibration-error contribution of a single label.
pub fn calibration_error_for(m: &MarginalPovm, p: &ProjectiveBasis, a: usize) -> Result<f64> {
    check_dims(m, p)?;
    if a >= m.dim() {
        return Err(EdrError::OutcomeOutOfRange {
            index: a,
            count: m.dim(),
        });
    }
    let overlap = trace_product(m.element(a), &p.projector(a))?;
    Ok(clamp_unit(1.0 - overlap))
}

/// Worst-case distinguishability over outcome subsets, with the smallest
/// maximizing bitmask as witness (enumerated in increasing bitmask order,
/// strict improvement only).
pub fn variation_error(m: &MarginalPovm, p: &ProjectiveBasis) -> Result<ErrorValue> {
    check_dims(m, p)?;
    let n = m.dim();
    if n > MAX_DIM {
        return Err(EdrError::DimensionOutOfRange {
            dim: n,
            min: 2,
            max: MAX_DIM,
        });
    }
    let diffs: Vec<CMat> = (0..n)
        .map(|a| m.element(a).matrix() - p.projector(a).matrix())
        .collect();
    let mut best = 0.0;
    let mut best_mask: usize = 0;
    for mask in 1_usize..(1 << n) {
        let mut sum = CMat::zeros(n, n);
        for (a, diff) in diffs.iter().enumerate() {
            if mask & (1 << a) != 0 {
                sum += diff;
            }
        }
        let norm = HermitianOperator::new(sum)
            .expect("difference of Hermitian operators")
            .operator_norm()?;
        if norm > best {
            best = norm;
            best_mask = mask;
        }
    }
    let subset = (0..n).filter(|a| best_mask & (1 << a) != 0).collect();
    Ok(ErrorValue {
        value: clamp_unit(best),
        witness: Witness::Subset(subset),
    })
}

/// The variation-error contribution of a single outcome subset.
pub fn variation_error_for(m: &MarginalPovm, p: &ProjectiveBasis, subset: &[usize]) -> Result<f64> {
    check_dims(m, p)?;
    let n = m.dim();
    let mut sum = CMat::zeros(n, n);
    let mut seen = vec![false; n];
    for &a in subset {
        if a >= n {
            return Err(EdrError::OutcomeOutOfRange { index: a, count: n });
        }
        if seen[a] {
            return Err(EdrError::Invalid {
                context: "variation witness",
                reason: format!("label {a} repeated in subset"),
            });
        }
        seen[a] = true;
        sum += m.element(a).matrix() - p.projector(a).matrix();
    }
    if subset.is_empty() {
        return Ok(0.0);
    }
    let norm = HermitianOperator::new(sum)
        .expect("difference of Hermitian operators")
        .operator_norm()?;
    Ok(clamp_unit(norm))
}

pub fn metric_error(metric: ErrorMetric, m: &MarginalPovm, p: &ProjectiveBasis) -> Result<ErrorValue> {
    match metric {
        ErrorMetric::Calibration => calibration_error(m, p),
        ErrorMetric::Variation => variation_error(m, p),
    }
}

/// Largest total-variation distance between outcome distributions over the
/// supplied states; a lower bound on [`variation_error`] for any state list.
pub fn variation_error_state_lower_bound(
    m: &MarginalPovm,
    p: &ProjectiveBasis,
    states: &[DensityOperator],
) -> Result<f64> {
    check_dims(m, p)?;
    let mut best = 0.0_f64;
    for rho in states {
        if rho.dim() != m.dim() {
            return Err(EdrError::DimensionMismatch {
                expected: m.dim(),
                found: rho.dim(),
            });
        }
        let mut tv = 0.0;
        for a in 0..m.dim() {
            let pm = trace_product(m.element(a), rho.operator())?;
            let pp = trace_product(&p.projector(a), rho.operator())?;
            tv += (pm - pp).abs();
        }
        best = best.max(0.5 * tv);
    }
    Ok(best)
}

/// Evaluates the chosen metric on both marginals of a joint POVM.
pub fn joint_errors(f: &JointPovm, pair: &BasisPair, metric: ErrorMetric) -> Result<ErrorReport> {
    if f.dim() != pair.dim() {
        return Err(EdrError::DimensionMismatch {
            expected: pair.dim(),
            found: f.dim(),
        });
    }
    let (m, mbar) = f.marginals();
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

/// Non-degenerate observable A = Σ_a λ_a |a⟩⟨a|.
#[derive(Clone, Debug)]
pub struct Observable {
    basis: ProjectiveBasis,
    eigenvalues: Vec<f64>,
}

impl Observable {
    pub fn new(basis: ProjectiveBasis, eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.len() != basis.dim() {
            return Err(EdrError::DimensionMismatch {
                expected: basis.dim(),
                found: eigenvalues.len(),
            });
        }
        let mut gap = f64::INFINITY;
        for i in 0..eigenvalues.len() {
            for j in (i + 1)..eigenvalues.len() {
                gap = gap.min((eigenvalues[i] - eigenvalues[j]).abs());
            }
        }
        if gap < DISTINCT_TOL {
            return Err(EdrError::DegenerateEigenvalues { gap });
        }
        Ok(Self { basis, eigenvalues })
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn basis(&self) -> &ProjectiveBasis {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn to_operator(&self) -> HermitianOperator {
        let n = self.dim();
        let mut sum = CMat::zeros(n, n);
        for (a, lambda) in self.eigenvalues.iter().enumerate() {
            sum += self.basis.projector(a).matrix().scale(*lambda);
        }
        HermitianOperator::new(sum).expect("weighted sum of projectors")
    }
}

/// Per-outcome record of the retrodictive noise-noise trade-off check.
#[derive(Clone, Debug)]
pub struct HofmannRecord {
    pub outcome: usize,
    pub epsilon: f64,
    pub epsilon_bar: f64,
    /// Left side ε_m · ε̄_m.
    pub product: f64,
    /// Right side ½|⟨[A, Ā]⟩| in the retrodictive state.
    pub commutator_bound: f64,
    pub satisfied: bool,
}

/// Outcome of [`hofmann_check`]: one record per usable outcome, plus the
/// labels whose element had trace below the probability floor.
#[derive(Clone, Debug)]
pub struct HofmannCheck {
    pub records: Vec<HofmannRecord>,
    pub skipped: Vec<usize>,
}

impl HofmannCheck {
    pub fn all_satisfied(&self) -> bool {
        self.records.iter().all(|r| r.satisfied)
    }
}

/// Checks ε_m ε̄_m ≥ ½|⟨[A, Ā]⟩| in every retrodictive state
/// ρ_m = F_m / tr F_m of a POVM with arbitrary outcome count. The noises are
/// the standard deviations of A and Ā in ρ_m.
pub fn hofmann_check(
    elements: &[HermitianOperator],
    a_obs: &Observable,
    abar_obs: &Observable,
) -> Result<HofmannCheck> {
    if elements.is_empty() {
        return Err(EdrError::Invalid {
            context: "hofmann check",
            reason: "POVM has no outcomes".into(),
        });
    }
    let n = a_obs.dim();
    if abar_obs.dim() != n {
        return Err(EdrError::DimensionMismatch {
            expected: n,
            found: abar_obs.dim(),
        });
    }
    let mut sum = CMat::zeros(n, n);
    for op in elements {
        if op.dim() != n {
            return Err(EdrError::DimensionMismatch {
                expected: n,
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
    let defect = (sum - CMat::identity(n, n)).max_abs();
    if defect > COMPLETENESS_TOL {
        return Err(EdrError::CompletenessDefect {
            deviation: defect,
            tolerance: COMPLETENESS_TOL,
        });
    }

    let a_mat = a_obs.to_operator().into_matrix();
    let abar_mat = abar_obs.to_operator().into_matrix();
    let a_sq = HermitianOperator::new(&a_mat * &a_mat).expect("square of Hermitian");
    let abar_sq = HermitianOperator::new(&abar_mat * &abar_mat).expect("square of Hermitian");
    let a_op = HermitianOperator::new(a_mat.clone()).expect("observable");
    let abar_op = HermitianOperator::new(abar_mat.clone()).expect("observable");
    let commutator = &a_mat * &abar_mat - &abar_mat * &a_mat;

    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (m, op) in elements.iter().enumerate() {
        let weight = op.trace();
        if weight <= PROB_FLOOR {
            skipped.push(m);
            continue;
        }
        let rho = HermitianOperator::new(op.matrix().scale(1.0 / weight))
            .expect("normalized POVM element");
        let mean_a = trace_product(&rho, &a_op)?;
        let mean_abar = trace_product(&rho, &abar_op)?;
        let var_a = (trace_product(&rho, &a_sq)? - mean_a * mean_a).max(0.0);
        let var_abar = (trace_product(&rho, &abar_sq)? - mean_abar * mean_abar).max(0.0);
        let epsilon = var_a.sqrt();
        let epsilon_bar = var_abar.sqrt();
        let expect = (rho.matrix() * &commutator).trace();
        let commutator_bound = 0.5 * expect.norm();
        let product = epsilon * epsilon_bar;
        records.push(HofmannRecord {
            outcome: m,
            epsilon,
            epsilon_bar,
            product,
            commutator_bound,
            satisfied: product >= commutator_bound - 1e-10,
        });
    }
    Ok(HofmannCheck { records, skipped })
}
