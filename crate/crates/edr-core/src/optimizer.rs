//! Seeded multi-restart minimization of the summed errors ε + ε̄ over the
//! manifold of valid joint POVMs.
//!
//! Iterates are parametrized by unconstrained complex factors C_ab: the
//! Gram blocks G_ab = C†_ab C_ab are positive by construction, and the
//! normalization F_ab = T^{−1/2} G_ab T^{−1/2} with T = Σ G_ab restores
//! completeness exactly. Every iterate is therefore a feasible POVM, so the
//! best objective found is a true achievable upper bound, never an estimate
//! that still needs projection onto the constraint set.
//!
//! Each restart runs numerical-gradient descent with backtracking, then a
//! coordinate pattern search that keeps making progress where the max/subset
//! structure of the metrics leaves the objective only piecewise smooth.
//! Restarts are independent and reduced deterministically; the two best
//! results are finally polished by a convex mix, which the convexity of both
//! metrics guarantees can never do worse than the better endpoint suggests.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{EdrError, Result};
use crate::measurement::{BasisPair, JointPovm};
use crate::metrics::{joint_errors, ErrorMetric};
use crate::operators::{CMat, HermitianOperator, PSD_TOL};
use crate::qubit::{canonical_basis_pair, canonicalize, symmetrize, tradeoff_bound};

/// Largest dimension the dense factor parametrization is sized for.
pub const MAX_OPTIMIZER_DIM: usize = 6;

/// Normalization operators with smaller least eigenvalue than this are
/// treated as degenerate by the search (the inverse square root would
/// amplify roundoff past the completeness tolerance).
const T_EIG_FLOOR: f64 = 1e-6;
/// Objective value returned for degenerate parameter points; above any
/// reachable ε + ε̄, so line searches back away from them.
const CLIFF: f64 = 4.0;
/// Central-difference step on factor entries.
const GRADIENT_STEP: f64 = 1e-6;
/// Upper limit on coordinate pattern search sweeps per restart.
const PATTERN_PASS_BUDGET: usize = 200;

/// Knobs for [`minimize_total_error`]; the seed fully determines the run.
/// Fields omitted from a JSON document fall back to the defaults.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub step_tol: f64,
    pub value_tol: f64,
    pub seed: u64,
    /// Average each accepted iterate over the qubit symmetry group
    /// (dimension 2 only; ignored otherwise). Never increases the
    /// objective and removes the kinks of the max structure on the
    /// symmetric submanifold.
    pub symmetrize_each_iter: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_iters: 200,
            step_tol: 1e-7,
            value_tol: 1e-10,
            seed: 0,
            symmetrize_each_iter: false,
        }
    }
}

/// Outcome of a minimization run. `objective = epsilon + epsilon_bar`, and
/// recomputing the errors of `best_povm` reproduces both components.
#[derive(Clone, Debug)]
pub struct OptimizationResult {
    pub best_povm: JointPovm,
    pub epsilon: f64,
    pub epsilon_bar: f64,
    pub objective: f64,
    /// Final objective of each restart, indexed by restart.
    pub restart_objectives: Vec<f64>,
}

/// One row of a qubit certification sweep: the analytic trade-off value at
/// `theta`, the optimizer's achieved objective, and their gap.
#[derive(Clone, Copy, Debug)]
pub struct SweepRow {
    pub theta: f64,
    pub bound: f64,
    pub objective: f64,
    pub gap: f64,
}

/// One scrambled 64-bit derivation per (seed, index), so restart streams
/// never overlap even for adjacent seeds.
fn splitmix64(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn param_count(dim: usize) -> usize {
    2 * dim * dim * dim * dim
}

fn gaussian_params(rng: &mut ChaCha8Rng, count: usize) -> Vec<f64> {
    (0..count).map(|_| rng.sample(StandardNormal)).collect()
}

/// Maps factor entries to the normalized POVM grid, or `None` when the
/// normalization operator is too close to singular to invert stably.
fn build_grid(dim: usize, params: &[f64], min_eig_floor: f64) -> Option<Vec<Vec<CMat>>> {
    debug_assert_eq!(params.len(), param_count(dim));
    let mut grams: Vec<Vec<CMat>> = Vec::with_capacity(dim);
    let mut total = CMat::zeros(dim, dim);
    let mut k = 0;
    for _ in 0..dim {
        let mut row = Vec::with_capacity(dim);
        for _ in 0..dim {
            let mut c = CMat::zeros(dim, dim);
            for r in 0..dim {
                for s in 0..dim {
                    c[(r, s)] = Complex64::new(params[k], params[k + 1]);
                    k += 2;
                }
            }
            let g = c.adjoint() * &c;
            total += &g;
            row.push(g);
        }
        grams.push(row);
    }
    let t = HermitianOperator::new(total).ok()?;
    let eig = t.eigendecompose().ok()?;
    if eig.eigenvalues[0] < min_eig_floor {
        return None;
    }
    let mut inv_sqrt = CMat::zeros(dim, dim);
    for (lambda, v) in eig.eigenvalues.iter().zip(&eig.eigenvectors) {
        inv_sqrt += (v * v.adjoint()).scale(1.0 / lambda.sqrt());
    }
    Some(
        grams
            .iter()
            .map(|row| row.iter().map(|g| &inv_sqrt * g * &inv_sqrt).collect())
            .collect(),
    )
}

/// Factor entries that reproduce `f` exactly: the Hermitian square root of
/// each element, so the Gram blocks equal the elements and T = 𝟙.
fn params_from_povm(f: &JointPovm) -> Result<Vec<f64>> {
    let n = f.dim();
    let mut params = Vec::with_capacity(param_count(n));
    for a in 0..n {
        for b in 0..n {
            let eig = f.element(a, b).eigendecompose()?;
            let mut c = CMat::zeros(n, n);
            for (lambda, v) in eig.eigenvalues.iter().zip(&eig.eigenvectors) {
                if *lambda > 0.0 {
                    c += (v * v.adjoint()).scale(lambda.sqrt());
                }
            }
            for r in 0..n {
                for s in 0..n {
                    params.push(c[(r, s)].re);
                    params.push(c[(r, s)].im);
                }
            }
        }
    }
    Ok(params)
}

/// Random valid joint POVM from the seeded Gram construction. Reseeds with a
/// scrambled derivative of the seed when the normalization operator comes
/// out numerically singular, at most ten times.
pub fn random_povm(dim: usize, seed: u64) -> Result<JointPovm> {
    if !(2..=MAX_OPTIMIZER_DIM).contains(&dim) {
        return Err(EdrError::DimensionOutOfRange {
            dim,
            min: 2,
            max: MAX_OPTIMIZER_DIM,
        });
    }
    let mut current = seed;
    for attempt in 0..=10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(current);
        let params = gaussian_params(&mut rng, param_count(dim));
        if let Some(grid) = build_grid(dim, &params, 1e-8) {
            return JointPovm::from_matrices(&grid, PSD_TOL);
        }
        current = splitmix64(current, attempt);
    }
    Err(EdrError::Invalid {
        context: "random_povm",
        reason: format!("normalization stayed numerically singular after 10 reseeds of {seed}"),
    })
}

struct Evaluator<'a> {
    /// Pair the errors are scored against; the canonical frame's pair when
    /// `symmetrized` is set.
    pair: &'a BasisPair,
    metric: ErrorMetric,
    dim: usize,
    /// Score the symmetry-group average of each candidate instead of the
    /// candidate itself. Averaging before scoring matters: the metrics'
    /// max ties sit exactly on the symmetric manifold, so probing raw
    /// asymmetric perturbations would see kinks everywhere, while the
    /// averaged objective is smooth along the manifold.
    symmetrized: bool,
}

impl Evaluator<'_> {
    fn povm(&self, params: &[f64]) -> Option<JointPovm> {
        let grid = build_grid(self.dim, params, T_EIG_FLOOR)?;
        let mut elements = Vec::with_capacity(self.dim * self.dim);
        for row in &grid {
            for mat in row {
                elements.push(HermitianOperator::new(mat.clone()).ok()?);
            }
        }
        Some(JointPovm::new_unchecked(self.dim, elements))
    }

    fn objective(&self, params: &[f64]) -> f64 {
        let Some(f) = self.povm(params) else {
            return CLIFF;
        };
        let scored = if self.symmetrized {
            match symmetrize(&f, self.pair) {
                Ok(s) => s,
                Err(_) => return CLIFF,
            }
        } else {
            f
        };
        match joint_errors(&scored, self.pair, self.metric) {
            Ok(report) => report.epsilon + report.epsilon_bar,
            Err(_) => CLIFF,
        }
    }
}

/// Re-anchors the parameters at the symmetry-group average of the current
/// candidate, keeping the normalization operator near the identity. The
/// score is unchanged (averaging is idempotent); the guard absorbs roundoff.
fn resync_to_symmetrized(eval: &Evaluator<'_>, x: &mut Vec<f64>, fx: &mut f64) {
    let Some(povm) = eval.povm(x) else { return };
    let Ok(averaged) = symmetrize(&povm, eval.pair) else {
        return;
    };
    let Ok(params) = params_from_povm(&averaged) else {
        return;
    };
    let f_new = eval.objective(&params);
    if f_new <= *fx + 1e-12 {
        *x = params;
        *fx = f_new;
    }
}

fn run_restart(eval: &Evaluator<'_>, config: &OptimizerConfig, seed: u64) -> (f64, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = param_count(eval.dim);
    let mut x = gaussian_params(&mut rng, count);
    let mut fx = eval.objective(&x);
    let mut redraws = 0;
    while fx >= CLIFF && redraws < 10 {
        x = gaussian_params(&mut rng, count);
        fx = eval.objective(&x);
        redraws += 1;
    }
    if eval.symmetrized {
        resync_to_symmetrized(eval, &mut x, &mut fx);
    }

    let mut step0: f64 = 0.25;
    for _ in 0..config.max_iters {
        let mut grad = vec![0.0; count];
        let mut norm2 = 0.0;
        for i in 0..count {
            let old = x[i];
            x[i] = old + GRADIENT_STEP;
            let fp = eval.objective(&x);
            x[i] = old - GRADIENT_STEP;
            let fm = eval.objective(&x);
            x[i] = old;
            let g = (fp - fm) / (2.0 * GRADIENT_STEP);
            grad[i] = g;
            norm2 += g * g;
        }
        if norm2.sqrt() < 1e-12 {
            break;
        }
        let mut t = step0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi - t * gi).collect();
            let f_try = eval.objective(&trial);
            if f_try <= fx - 1e-4 * t * norm2 {
                accepted = Some((trial, f_try, t));
                break;
            }
            t *= 0.5;
        }
        // No productive step along the gradient: a kink; the pattern
        // search below takes over.
        let Some((trial, f_try, t_acc)) = accepted else {
            break;
        };
        let improvement = fx - f_try;
        let step_norm = t_acc * norm2.sqrt();
        x = trial;
        fx = f_try;
        if eval.symmetrized {
            resync_to_symmetrized(eval, &mut x, &mut fx);
        }
        step0 = (t_acc * 2.0).min(1.0);
        if step_norm < config.step_tol || improvement < config.value_tol {
            break;
        }
    }

    let mut delta = 1e-2_f64;
    let mut passes = 0;
    while delta >= config.step_tol && passes < PATTERN_PASS_BUDGET {
        passes += 1;
        let mut improved = false;
        for i in 0..count {
            let old = x[i];
            let mut moved = false;
            for sign in [1.0, -1.0] {
                x[i] = old + sign * delta;
                let f_try = eval.objective(&x);
                if f_try < fx {
                    fx = f_try;
                    moved = true;
                    improved = true;
                    break;
                }
            }
            if !moved {
                x[i] = old;
            }
        }
        if improved {
            if eval.symmetrized {
                resync_to_symmetrized(eval, &mut x, &mut fx);
            }
        } else {
            delta *= 0.5;
        }
    }
    (fx, x)
}

/// Least value with ties broken toward the lower index.
fn best_index(objectives: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in objectives.iter().enumerate().skip(1) {
        if v < objectives[best] {
            best = i;
        }
    }
    best
}

fn validate_config(config: &OptimizerConfig) -> Result<()> {
    if config.restarts < 1 {
        return Err(EdrError::OutOfDomain {
            name: "restarts",
            value: config.restarts as f64,
            min: 1.0,
            max: f64::INFINITY,
        });
    }
    if config.max_iters < 1 {
        return Err(EdrError::OutOfDomain {
            name: "max_iters",
            value: config.max_iters as f64,
            min: 1.0,
            max: f64::INFINITY,
        });
    }
    for (name, value) in [("step_tol", config.step_tol), ("value_tol", config.value_tol)] {
        if !(value > 0.0) {
            return Err(EdrError::OutOfDomain {
                name,
                value,
                min: f64::MIN_POSITIVE,
                max: f64::INFINITY,
            });
        }
    }
    Ok(())
}

/// Minimizes ε + ε̄ for the pair under the metric. Always returns the best
/// POVM found; convergence quality shows in the per-restart trace. The run
/// is a pure function of the config.
pub fn minimize_total_error(
    pair: &BasisPair,
    metric: ErrorMetric,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    let dim = pair.dim();
    if dim > MAX_OPTIMIZER_DIM {
        return Err(EdrError::DimensionOutOfRange {
            dim,
            min: 2,
            max: MAX_OPTIMIZER_DIM,
        });
    }
    validate_config(config)?;
    // With symmetrization the whole search runs in the canonical qubit
    // frame (the parametrization is frame-agnostic, so nothing is lost) and
    // only the final POVM is transported back to the caller's frame, which
    // preserves both error components exactly.
    let sym_form = if config.symmetrize_each_iter && dim == 2 {
        Some(canonicalize(pair)?)
    } else {
        None
    };
    let canonical_storage;
    let work_pair: &BasisPair = match &sym_form {
        Some(form) => {
            canonical_storage = form.canonical_pair();
            &canonical_storage
        }
        None => pair,
    };
    let eval = Evaluator {
        pair: work_pair,
        metric,
        dim,
        symmetrized: sym_form.is_some(),
    };
    let outcomes: Vec<(f64, Vec<f64>)> = (0..config.restarts)
        .into_par_iter()
        .map(|r| run_restart(&eval, config, splitmix64(config.seed, r as u64)))
        .collect();
    let restart_objectives: Vec<f64> = outcomes.iter().map(|(f, _)| *f).collect();
    let best = best_index(&restart_objectives);
    let finalize = |params: &[f64]| -> Result<JointPovm> {
        let grid = build_grid(dim, params, T_EIG_FLOOR).ok_or(EdrError::Invalid {
            context: "minimize_total_error",
            reason: "restart ended on a degenerate normalization".into(),
        })?;
        let mut f = JointPovm::from_matrices(&grid, PSD_TOL)?;
        if let Some(form) = &sym_form {
            f = symmetrize(&f, work_pair)?;
            f = form.from_canonical_povm(&f)?;
        }
        Ok(f)
    };
    let mut best_povm = finalize(&outcomes[best].1)?;
    let mut best_objective = restart_objectives[best];

    // Convex-mix polish of the two best restarts: both metrics are convex
    // in the POVM, so the mix objective is unimodal in the weight and a
    // golden-section scan cannot miss an improvement.
    if config.restarts >= 2 {
        let mut second = if best == 0 { 1 } else { 0 };
        for i in 0..restart_objectives.len() {
            if i != best && restart_objectives[i] < restart_objectives[second] {
                second = i;
            }
        }
        {
            let second_povm = finalize(&outcomes[second].1)?;
            let mix_objective = |alpha: f64| -> f64 {
                best_povm
                    .mix(&second_povm, alpha)
                    .ok()
                    .and_then(|mixed| joint_errors(&mixed, pair, metric).ok())
                    .map_or(CLIFF, |r| r.epsilon + r.epsilon_bar)
            };
            let golden = 0.5 * (5f64.sqrt() - 1.0);
            let (mut lo, mut hi) = (0.0, 1.0);
            let mut x1 = hi - golden * (hi - lo);
            let mut x2 = lo + golden * (hi - lo);
            let mut f1 = mix_objective(x1);
            let mut f2 = mix_objective(x2);
            for _ in 0..40 {
                if f1 <= f2 {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - golden * (hi - lo);
                    f1 = mix_objective(x1);
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + golden * (hi - lo);
                    f2 = mix_objective(x2);
                }
            }
            let (alpha_star, f_star) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
            if f_star < best_objective {
                best_povm = best_povm.mix(&second_povm, alpha_star)?;
                best_objective = f_star;
            }
        }
    }

    let report = joint_errors(&best_povm, pair, metric)?;
    debug_assert!(report.epsilon + report.epsilon_bar <= best_objective + 1e-12);
    Ok(OptimizationResult {
        best_povm,
        epsilon: report.epsilon,
        epsilon_bar: report.epsilon_bar,
        objective: report.epsilon + report.epsilon_bar,
        restart_objectives,
    })
}

/// Runs the optimizer against the analytic qubit curve on a uniform θ grid
/// over [0, π/4] and reports the gap at every point. Symmetrization is
/// forced on: it never hurts and pins ε = ε̄ on the symmetric manifold.
pub fn certify_qubit_sweep(
    metric: ErrorMetric,
    grid_size: usize,
    config: &OptimizerConfig,
) -> Result<Vec<SweepRow>> {
    if grid_size < 2 {
        return Err(EdrError::OutOfDomain {
            name: "grid_size",
            value: grid_size as f64,
            min: 2.0,
            max: f64::INFINITY,
        });
    }
    let cfg = OptimizerConfig {
        symmetrize_each_iter: true,
        ..config.clone()
    };
    (0..grid_size)
        .map(|k| {
            let theta = FRAC_PI_4 * k as f64 / (grid_size as f64 - 1.0);
            let pair = canonical_basis_pair(theta)?;
            let bound = tradeoff_bound(metric, theta)?;
            let result = minimize_total_error(&pair, metric, &cfg)?;
            Ok(SweepRow {
                theta,
                bound,
                objective: result.objective,
                gap: result.objective - bound,
            })
        })
        .collect()
}
