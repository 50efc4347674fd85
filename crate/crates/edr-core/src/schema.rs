//! JSON document types for every serialized artifact.
//!
//! Conventions shared by all files: complex numbers are two-element arrays
//! `[re, im]`, matrices are row-major nested arrays, and outcome labels or
//! permutations are 1-based in documents while the in-memory types stay
//! 0-based. Conversions validate shape here and defer the numerical
//! invariants (orthonormality, positivity, completeness) to the owning
//! constructors.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{EdrError, Result};
use crate::instrument::Instrument;
use crate::measurement::{BasisPair, JointPovm, ProjectiveBasis};
use crate::metrics::{ErrorMetric, ErrorReport, Witness};
use crate::mub::{FourierEquivalence, HadamardCandidate};
use crate::operators::{CMat, CVec};

pub type ComplexDoc = [f64; 2];
pub type VectorDoc = Vec<ComplexDoc>;
pub type MatrixDoc = Vec<Vec<ComplexDoc>>;

pub fn complex_to_doc(z: Complex64) -> ComplexDoc {
    [z.re, z.im]
}

pub fn vector_to_doc(v: &CVec) -> VectorDoc {
    v.iter().map(|z| complex_to_doc(*z)).collect()
}

pub fn vector_from_doc(doc: &[ComplexDoc]) -> Result<CVec> {
    if doc.is_empty() {
        return Err(EdrError::Invalid {
            context: "vector document",
            reason: "empty vector".into(),
        });
    }
    Ok(CVec::from_iterator(
        doc.len(),
        doc.iter().map(|&[re, im]| Complex64::new(re, im)),
    ))
}

pub fn matrix_to_doc(m: &CMat) -> MatrixDoc {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| complex_to_doc(m[(r, c)])).collect())
        .collect()
}

pub fn matrix_from_doc(doc: &MatrixDoc) -> Result<CMat> {
    let rows = doc.len();
    if rows == 0 {
        return Err(EdrError::Invalid {
            context: "matrix document",
            reason: "matrix has no rows".into(),
        });
    }
    let cols = doc[0].len();
    if cols == 0 || doc.iter().any(|row| row.len() != cols) {
        return Err(EdrError::Invalid {
            context: "matrix document",
            reason: "matrix rows have inconsistent lengths".into(),
        });
    }
    Ok(DMatrix::from_fn(rows, cols, |r, c| {
        let [re, im] = doc[r][c];
        Complex64::new(re, im)
    }))
}

/// `{"dim": N, "basis": [vector, ...]}`, vectors as rows of complex entries.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BasisDoc {
    pub dim: usize,
    pub basis: Vec<VectorDoc>,
}

impl BasisDoc {
    pub fn from_basis(basis: &ProjectiveBasis) -> Self {
        Self {
            dim: basis.dim(),
            basis: (0..basis.dim())
                .map(|a| vector_to_doc(basis.vector(a)))
                .collect(),
        }
    }

    pub fn to_basis(&self) -> Result<ProjectiveBasis> {
        if self.basis.len() != self.dim || self.basis.iter().any(|v| v.len() != self.dim) {
            return Err(EdrError::DimensionMismatch {
                expected: self.dim,
                found: self.basis.len(),
            });
        }
        let vectors = self
            .basis
            .iter()
            .map(|v| vector_from_doc(v))
            .collect::<Result<Vec<_>>>()?;
        ProjectiveBasis::new(vectors)
    }
}

/// Two reference bases sharing one dimension.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairDoc {
    pub dim: usize,
    pub unbarred: Vec<VectorDoc>,
    pub barred: Vec<VectorDoc>,
}

impl PairDoc {
    pub fn from_pair(pair: &BasisPair) -> Self {
        let side = |basis: &ProjectiveBasis| {
            (0..basis.dim())
                .map(|a| vector_to_doc(basis.vector(a)))
                .collect()
        };
        Self {
            dim: pair.dim(),
            unbarred: side(pair.unbarred()),
            barred: side(pair.barred()),
        }
    }

    pub fn to_pair(&self) -> Result<BasisPair> {
        let side = |vectors: &[VectorDoc]| -> Result<ProjectiveBasis> {
            BasisDoc {
                dim: self.dim,
                basis: vectors.to_vec(),
            }
            .to_basis()
        };
        BasisPair::new(side(&self.unbarred)?, side(&self.barred)?)
    }
}

/// `{"dim": N, "elements": [[matrix, ...], ...]}`, row index a, column b.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PovmDoc {
    pub dim: usize,
    pub elements: Vec<Vec<MatrixDoc>>,
}

impl PovmDoc {
    pub fn from_joint(f: &JointPovm) -> Self {
        let n = f.dim();
        Self {
            dim: n,
            elements: (0..n)
                .map(|a| (0..n).map(|b| matrix_to_doc(f.element(a, b).matrix())).collect())
                .collect(),
        }
    }

    /// Raw element matrices in document order, shape-checked only.
    pub fn matrices(&self) -> Result<Vec<Vec<CMat>>> {
        if self.elements.len() != self.dim
            || self.elements.iter().any(|row| row.len() != self.dim)
        {
            return Err(EdrError::DimensionMismatch {
                expected: self.dim,
                found: self.elements.len(),
            });
        }
        self.elements
            .iter()
            .map(|row| row.iter().map(matrix_from_doc).collect())
            .collect()
    }

    pub fn to_joint(&self, tol: f64) -> Result<JointPovm> {
        JointPovm::from_matrices(&self.matrices()?, tol)
    }
}

/// `{"dim": N, "families": [[matrix, ...], ...]}`, indexed by outcome.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstrumentDoc {
    pub dim: usize,
    pub families: Vec<Vec<MatrixDoc>>,
}

impl InstrumentDoc {
    pub fn from_instrument(instrument: &Instrument) -> Self {
        Self {
            dim: instrument.dim(),
            families: instrument
                .families()
                .iter()
                .map(|family| family.iter().map(matrix_to_doc).collect())
                .collect(),
        }
    }

    pub fn to_instrument(&self) -> Result<Instrument> {
        if self.families.len() != self.dim {
            return Err(EdrError::DimensionMismatch {
                expected: self.dim,
                found: self.families.len(),
            });
        }
        let families = self
            .families
            .iter()
            .map(|family| family.iter().map(matrix_from_doc).collect())
            .collect::<Result<Vec<Vec<CMat>>>>()?;
        Instrument::new(families)
    }
}

/// A complex Hadamard candidate: either a bare matrix or `{"dim","matrix"}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HadamardDoc {
    Tagged { dim: usize, matrix: MatrixDoc },
    Bare(MatrixDoc),
}

impl HadamardDoc {
    pub fn from_candidate(candidate: &HadamardCandidate) -> Self {
        Self::Tagged {
            dim: candidate.dim(),
            matrix: matrix_to_doc(candidate.matrix()),
        }
    }

    pub fn to_candidate(&self) -> Result<HadamardCandidate> {
        let matrix = match self {
            Self::Tagged { dim, matrix } => {
                let m = matrix_from_doc(matrix)?;
                if m.nrows() != *dim {
                    return Err(EdrError::DimensionMismatch {
                        expected: *dim,
                        found: m.nrows(),
                    });
                }
                m
            }
            Self::Bare(matrix) => matrix_from_doc(matrix)?,
        };
        HadamardCandidate::new(matrix)
    }
}

/// Witness in document form, 1-based: `{"index": a}` or `{"subset": [...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WitnessDoc {
    Index { index: usize },
    Subset { subset: Vec<usize> },
}

impl WitnessDoc {
    pub fn from_witness(witness: &Witness) -> Self {
        match witness {
            Witness::Index(a) => Self::Index { index: a + 1 },
            Witness::Subset(subset) => Self::Subset {
                subset: subset.iter().map(|a| a + 1).collect(),
            },
        }
    }

    pub fn to_witness(&self) -> Result<Witness> {
        let one_based_zero = || EdrError::Invalid {
            context: "witness document",
            reason: "outcome labels are 1-based, got 0".into(),
        };
        match self {
            Self::Index { index } => {
                if *index == 0 {
                    return Err(one_based_zero());
                }
                Ok(Witness::Index(index - 1))
            }
            Self::Subset { subset } => {
                if subset.iter().any(|&a| a == 0) {
                    return Err(one_based_zero());
                }
                Ok(Witness::Subset(subset.iter().map(|a| a - 1).collect()))
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessPairDoc {
    pub epsilon: WitnessDoc,
    pub epsilon_bar: WitnessDoc,
}

/// `{"metric", "epsilon", "epsilon_bar", "witness": {...}}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ErrorReportDoc {
    pub metric: String,
    pub epsilon: f64,
    pub epsilon_bar: f64,
    pub witness: WitnessPairDoc,
}

impl ErrorReportDoc {
    pub fn from_report(report: &ErrorReport) -> Self {
        Self {
            metric: report.metric.name().to_owned(),
            epsilon: report.epsilon,
            epsilon_bar: report.epsilon_bar,
            witness: WitnessPairDoc {
                epsilon: WitnessDoc::from_witness(&report.epsilon_witness),
                epsilon_bar: WitnessDoc::from_witness(&report.epsilon_bar_witness),
            },
        }
    }
}

/// Equivalence witness in document form: phases in radians, permutations as
/// 1-based arrays.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquivalenceDoc {
    pub d1_phases: Vec<f64>,
    pub t1: Vec<usize>,
    pub t2: Vec<usize>,
    pub d2_phases: Vec<f64>,
}

impl EquivalenceDoc {
    pub fn from_equivalence(eq: &FourierEquivalence) -> Self {
        let shift = |perm: &[usize]| perm.iter().map(|p| p + 1).collect();
        Self {
            d1_phases: eq.d1_phases.clone(),
            t1: shift(&eq.t1),
            t2: shift(&eq.t2),
            d2_phases: eq.d2_phases.clone(),
        }
    }
}

/// Canonical spelling of a metric name, for flag and document parsing.
pub fn metric_from_name(name: &str) -> Result<ErrorMetric> {
    match name {
        "calibration" => Ok(ErrorMetric::Calibration),
        "variation" => Ok(ErrorMetric::Variation),
        _ => Err(EdrError::Invalid {
            context: "metric name",
            reason: format!("expected \"calibration\" or \"variation\", got \"{name}\""),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{MaxAbs, PSD_TOL};
    use crate::testutil::{random_joint_povm, random_pair, seeded_rng};

    #[test]
    fn povm_documents_round_trip_exactly() {
        let mut rng = seeded_rng(80);
        let f = random_joint_povm(&mut rng, 3);
        let doc = PovmDoc::from_joint(&f);
        let text = serde_json::to_string(&doc).unwrap();
        let parsed: PovmDoc = serde_json::from_str(&text).unwrap();
        let rebuilt = parsed.to_joint(PSD_TOL).unwrap();
        for (x, y) in f.elements().iter().zip(rebuilt.elements()) {
            assert_eq!((x.matrix() - y.matrix()).max_abs(), 0.0);
        }
    }

    #[test]
    fn pair_documents_round_trip_exactly() {
        let mut rng = seeded_rng(81);
        let pair = random_pair(&mut rng, 4);
        let doc = PairDoc::from_pair(&pair);
        let text = serde_json::to_string(&doc).unwrap();
        let parsed: PairDoc = serde_json::from_str(&text).unwrap();
        let rebuilt = parsed.to_pair().unwrap();
        for a in 0..4 {
            assert_eq!(
                (pair.unbarred().vector(a) - rebuilt.unbarred().vector(a)).max_abs(),
                0.0
            );
            assert_eq!(
                (pair.barred().vector(a) - rebuilt.barred().vector(a)).max_abs(),
                0.0
            );
        }
    }

    #[test]
    fn instrument_documents_round_trip() {
        let instrument = Instrument::random(3, 2, 42).unwrap();
        let doc = InstrumentDoc::from_instrument(&instrument);
        let text = serde_json::to_string(&doc).unwrap();
        let parsed: InstrumentDoc = serde_json::from_str(&text).unwrap();
        let rebuilt = parsed.to_instrument().unwrap();
        for (fa, fb) in instrument.families().iter().zip(rebuilt.families()) {
            assert_eq!(fa.len(), fb.len());
            for (x, y) in fa.iter().zip(fb) {
                assert_eq!((x - y).max_abs(), 0.0);
            }
        }
    }

    #[test]
    fn witnesses_serialize_one_based() {
        let index = WitnessDoc::from_witness(&Witness::Index(0));
        assert_eq!(serde_json::to_string(&index).unwrap(), r#"{"index":1}"#);
        let subset = WitnessDoc::from_witness(&Witness::Subset(vec![0, 2]));
        assert_eq!(
            serde_json::to_string(&subset).unwrap(),
            r#"{"subset":[1,3]}"#
        );
        assert_eq!(index.to_witness().unwrap(), Witness::Index(0));
        assert_eq!(subset.to_witness().unwrap(), Witness::Subset(vec![0, 2]));
        let zero: WitnessDoc = serde_json::from_str(r#"{"index":0}"#).unwrap();
        assert!(zero.to_witness().is_err());
    }

    #[test]
    fn hadamard_documents_accept_bare_and_tagged_forms() {
        let bare = r#"[[[1.0,0.0],[1.0,0.0]],[[1.0,0.0],[-1.0,0.0]]]"#;
        let tagged = format!(r#"{{"dim":2,"matrix":{bare}}}"#);
        let from_bare: HadamardDoc = serde_json::from_str(bare).unwrap();
        let from_tagged: HadamardDoc = serde_json::from_str(&tagged).unwrap();
        let a = from_bare.to_candidate().unwrap();
        let b = from_tagged.to_candidate().unwrap();
        assert_eq!((a.matrix() - b.matrix()).max_abs(), 0.0);
        let wrong_dim: HadamardDoc =
            serde_json::from_str(&format!(r#"{{"dim":3,"matrix":{bare}}}"#)).unwrap();
        assert!(wrong_dim.to_candidate().is_err());
    }

    #[test]
    fn malformed_documents_are_rejected() {
        assert!(matrix_from_doc(&vec![vec![[1.0, 0.0], [0.0, 0.0]], vec![[1.0, 0.0]]]).is_err());
        assert!(matrix_from_doc(&Vec::new()).is_err());
        let doc = PovmDoc {
            dim: 2,
            elements: vec![vec![Vec::new(); 2]; 1],
        };
        assert!(doc.matrices().is_err());
        let basis = BasisDoc {
            dim: 2,
            basis: vec![vec![[1.0, 0.0]; 2]; 3],
        };
        assert!(basis.to_basis().is_err());
    }

    #[test]
    fn report_and_equivalence_documents_shift_labels() {
        let report = ErrorReport {
            metric: ErrorMetric::Variation,
            epsilon: 0.25,
            epsilon_bar: 0.5,
            epsilon_witness: Witness::Subset(vec![0]),
            epsilon_bar_witness: Witness::Subset(vec![1, 2]),
        };
        let doc = ErrorReportDoc::from_report(&report);
        let text = serde_json::to_string(&doc).unwrap();
        assert!(text.contains(r#""metric":"variation""#));
        assert!(text.contains(r#""subset":[2,3]"#));

        let eq = FourierEquivalence {
            d1_phases: vec![0.0, 1.0],
            t1: vec![1, 0],
            t2: vec![0, 1],
            d2_phases: vec![0.5, 0.25],
        };
        let eq_doc = EquivalenceDoc::from_equivalence(&eq);
        assert_eq!(eq_doc.t1, vec![2, 1]);
        assert_eq!(eq_doc.t2, vec![1, 2]);

        assert!(metric_from_name("calibration").is_ok());
        assert!(metric_from_name("nonsense").is_err());
    }

    #[test]
    fn povm_parse_then_validate_reports_violations() {
        // A non-PSD element must surface through the validating builder.
        let sigma = vec![vec![[0.0, 0.0], [1.0, 0.0]], vec![[1.0, 0.0], [0.0, 0.0]]];
        let half = vec![vec![[0.5, 0.0], [0.0, 0.0]], vec![[0.0, 0.0], [0.5, 0.0]]];
        let minus = vec![vec![[-0.0, 0.0], [-1.0, 0.0]], vec![[-1.0, 0.0], [0.0, 0.0]]];
        let doc = PovmDoc {
            dim: 2,
            elements: vec![vec![sigma, half.clone()], vec![minus, half]],
        };
        let err = doc.to_joint(PSD_TOL).unwrap_err();
        match err {
            EdrError::InvalidPovm { violations, .. } => assert!(!violations.is_empty()),
            other => panic!("unexpected error {other}"),
        }
    }
}
