//! Dimension-independent lower bounds on the combined calibration error,
//! built from matrix-element estimates for positive operators.
//!
//! For a joint POVM whose marginals approximate the pair within calibration
//! errors (ε, ε̄), each matrix element ⟨1|M̄₁|2⟩ is squeezed between an upper
//! estimate growing with ε and a lower estimate shrinking with ε̄. The
//! function `I` packages the resulting inequality; requiring I ≥ 0 for every
//! choice of rows and column pairs carves out a feasible region in the
//! (ε, ε̄) plane, and the infimum of ε + ε̄ over that region is a valid lower
//! bound for every measurement. For mutually unbiased pairs a sharper
//! coefficient applies and the bound has closed form.

use crate::error::{EdrError, Result};
use crate::measurement::BasisPair;
use crate::mub::is_mub;

/// Default grid resolution per axis for the infimum scan.
pub const DEFAULT_RESOLUTION: usize = 2000;
/// Bisection refinements along the feasibility boundary.
const BISECTION_STEPS: usize = 40;
/// Tolerance for the mutual-unbiasedness test gating the improved variant.
const MUB_TOL: f64 = 1e-9;

/// Off-diagonal bound for a positive operator with diagonal bounds
/// ⟨1|K|1⟩ ≤ k11 and ⟨2|K|2⟩ ≤ k22: |⟨1|K|2⟩| ≤ √(k11·k22).
pub fn psd_offdiag_bounds(k11: f64, k22: f64) -> Result<f64> {
    for (name, value) in [("k11", k11), ("k22", k22)] {
        if value < 0.0 {
            return Err(EdrError::OutOfDomain {
                name,
                value,
                min: 0.0,
                max: f64::INFINITY,
            });
        }
    }
    Ok((k11 * k22).sqrt())
}

/// Upper estimate 2√ε + (N−2)ε for the sum of off-diagonal moduli along a
/// row of a marginal element close to its target projector.
pub fn offdiag_upper_bound(epsilon: f64, n: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(EdrError::OutOfDomain {
            name: "epsilon",
            value: epsilon,
            min: 0.0,
            max: 1.0,
        });
    }
    if n < 2 {
        return Err(EdrError::DimensionOutOfRange {
            dim: n,
            min: 2,
            max: usize::MAX,
        });
    }
    Ok(2.0 * epsilon.sqrt() + (n - 2) as f64 * epsilon)
}

/// Coefficient (N−1)(N−2)/N replacing √((N−1)(N−2))·t̃t̃′ in the I-function
/// when the pair is mutually unbiased.
pub fn improved_mub_d_coefficient(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(EdrError::DimensionOutOfRange {
            dim: n,
            min: 2,
            max: usize::MAX,
        });
    }
    Ok(((n - 1) * (n - 2)) as f64 / n as f64)
}

fn i_function_with_d(
    epsilon: f64,
    epsilon_prime: f64,
    t: f64,
    t_prime: f64,
    n: usize,
    d_coefficient: Option<f64>,
) -> f64 {
    let nf = n as f64;
    let t_tilde = (1.0 - t * t).max(0.0).sqrt();
    let t_prime_tilde = (1.0 - t_prime * t_prime).max(0.0).sqrt();
    let d = match d_coefficient {
        Some(coefficient) => coefficient,
        None => (((nf - 1.0) * (nf - 2.0)).sqrt()) * t_tilde * t_prime_tilde,
    };
    (nf - 2.0) * epsilon
        + 2.0 * epsilon.sqrt()
        + (t * t_prime + d + t_tilde * t_prime_tilde) * epsilon_prime
        + (nf - 1.0).sqrt() * (t * t_tilde + t_prime * t_prime_tilde) * epsilon_prime.sqrt()
        - t * t_prime
}

/// The bound function
/// I(ε,ε′;t,t′) = (N−2)ε + 2√ε + (tt′ + t̃t̃′[√((N−1)(N−2)) + 1])ε′
///              + √(N−1)(t·t̃ + t′·t̃′)√ε′ − tt′, with t̃ = √(1−t²).
pub fn i_function(epsilon: f64, epsilon_prime: f64, t: f64, t_prime: f64, n: usize) -> Result<f64> {
    for (name, value) in [("epsilon", epsilon), ("epsilon_prime", epsilon_prime)] {
        if value < 0.0 {
            return Err(EdrError::OutOfDomain {
                name,
                value,
                min: 0.0,
                max: f64::INFINITY,
            });
        }
    }
    for (name, value) in [("t", t), ("t_prime", t_prime)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(EdrError::OutOfDomain {
                name,
                value,
                min: 0.0,
                max: 1.0,
            });
        }
    }
    if n < 2 {
        return Err(EdrError::DimensionOutOfRange {
            dim: n,
            min: 2,
            max: usize::MAX,
        });
    }
    Ok(i_function_with_d(epsilon, epsilon_prime, t, t_prime, n, None))
}

/// Overlap moduli t[a][b] = |⟨ā|b⟩| of a basis pair.
#[derive(Clone, Debug)]
pub struct OverlapTable {
    dim: usize,
    t: Vec<Vec<f64>>,
}

impl OverlapTable {
    pub fn from_pair(pair: &BasisPair) -> Result<Self> {
        let n = pair.dim();
        let mut t = vec![vec![0.0; n]; n];
        for a in 0..n {
            for b in 0..n {
                t[a][b] =
                    (pair.barred().vector(a).adjoint() * pair.unbarred().vector(b))[(0, 0)].norm();
            }
        }
        let table = Self { dim: n, t };
        let dev = table.unitarity_defect();
        if dev > 1e-9 {
            return Err(EdrError::Invalid {
                context: "overlap table",
                reason: format!("row or column norms deviate from 1 by {dev:.3e}"),
            });
        }
        Ok(table)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, a: usize, b: usize) -> f64 {
        self.t[a][b]
    }

    /// Largest deviation of any row or column of squared entries from
    /// summing to 1.
    pub fn unitarity_defect(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.dim {
            let row: f64 = (0..self.dim).map(|j| self.t[i][j] * self.t[i][j]).sum();
            let col: f64 = (0..self.dim).map(|j| self.t[j][i] * self.t[j][i]).sum();
            dev = dev.max((row - 1.0).abs()).max((col - 1.0).abs());
        }
        dev
    }
}

/// A point in the (ε, ε̄) error plane, both components nonnegative.
#[derive(Clone, Copy, Debug)]
pub struct FeasibleRegionQuery {
    pub epsilon: f64,
    pub epsilon_bar: f64,
}

impl FeasibleRegionQuery {
    pub fn new(epsilon: f64, epsilon_bar: f64) -> Result<Self> {
        for (name, value) in [("epsilon", epsilon), ("epsilon_bar", epsilon_bar)] {
            if value < 0.0 {
                return Err(EdrError::OutOfDomain {
                    name,
                    value,
                    min: 0.0,
                    max: f64::INFINITY,
                });
            }
        }
        Ok(Self { epsilon, epsilon_bar })
    }
}

/// Which coefficient set the feasibility test uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundVariant {
    /// The coefficient set valid for arbitrary pairs.
    Generic,
    /// The sharper D coefficient, applied when the pair is mutually
    /// unbiased; falls back to generic behavior otherwise.
    MubImproved,
}

struct FeasibleRegion {
    table: OverlapTable,
    d_coefficient: Option<f64>,
}

impl FeasibleRegion {
    fn new(pair: &BasisPair, variant: BoundVariant) -> Result<Self> {
        let table = OverlapTable::from_pair(pair)?;
        let d_coefficient = match variant {
            BoundVariant::MubImproved if is_mub(pair, MUB_TOL) => {
                Some(improved_mub_d_coefficient(pair.dim())?)
            }
            _ => None,
        };
        Ok(Self { table, d_coefficient })
    }

    /// Membership in H ∩ H′: every row a and unordered column pair b < c
    /// must satisfy I ≥ 0, in both orientations of the error pair.
    fn contains(&self, epsilon: f64, epsilon_bar: f64) -> bool {
        let n = self.table.dim();
        for a in 0..n {
            for b in 0..n {
                for c in b + 1..n {
                    let i_h = i_function_with_d(
                        epsilon,
                        epsilon_bar,
                        self.table.value(a, b),
                        self.table.value(a, c),
                        n,
                        self.d_coefficient,
                    );
                    if i_h < 0.0 {
                        return false;
                    }
                    let i_h_prime = i_function_with_d(
                        epsilon_bar,
                        epsilon,
                        self.table.value(b, a),
                        self.table.value(c, a),
                        n,
                        self.d_coefficient,
                    );
                    if i_h_prime < 0.0 {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Least ε with (ε, ε̄) feasible, to absolute precision `tol`.
    /// (1, ε̄) is always feasible, so the search cannot fail.
    fn min_feasible_epsilon(&self, epsilon_bar: f64, tol: f64) -> f64 {
        if self.contains(0.0, epsilon_bar) {
            return 0.0;
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if self.contains(mid, epsilon_bar) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

/// True iff the query point lies in the feasible region H ∩ H′ of the pair.
pub fn in_feasible_region(
    query: FeasibleRegionQuery,
    pair: &BasisPair,
    variant: BoundVariant,
) -> Result<bool> {
    let region = FeasibleRegion::new(pair, variant)?;
    Ok(region.contains(query.epsilon, query.epsilon_bar))
}

/// Infimum of ε + ε̄ over the feasible region, by a grid scan over ε̄ with a
/// feasibility bisection per column, refined around the best column. The
/// result is within 2/resolution above the true infimum and never below it,
/// so subtracting two grid cells yields a certified lower bound.
pub fn infimum_bound(pair: &BasisPair, variant: BoundVariant, resolution: usize) -> Result<f64> {
    if resolution < 2 {
        return Err(EdrError::OutOfDomain {
            name: "resolution",
            value: resolution as f64,
            min: 2.0,
            max: f64::INFINITY,
        });
    }
    let region = FeasibleRegion::new(pair, variant)?;
    let cell = 1.0 / resolution as f64;
    let column_tol = 1e-12;
    let mut best_sum = f64::INFINITY;
    let mut best_bar = 0.0;
    for k in 0..=resolution {
        let epsilon_bar = k as f64 * cell;
        let sum = region.min_feasible_epsilon(epsilon_bar, column_tol) + epsilon_bar;
        if sum < best_sum {
            best_sum = sum;
            best_bar = epsilon_bar;
        }
        // Columns can only get worse once ε has hit zero: ε̄ keeps growing.
        if sum == epsilon_bar {
            break;
        }
    }
    // Golden-section polish of ε̄ within one cell of the best column.
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let mut lo = (best_bar - cell).max(0.0);
    let mut hi = (best_bar + cell).min(1.0);
    let objective =
        |bar: f64| region.min_feasible_epsilon(bar, column_tol) + bar;
    let mut x1 = hi - golden * (hi - lo);
    let mut x2 = lo + golden * (hi - lo);
    let mut f1 = objective(x1);
    let mut f2 = objective(x2);
    for _ in 0..BISECTION_STEPS {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - golden * (hi - lo);
            f1 = objective(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + golden * (hi - lo);
            f2 = objective(x2);
        }
    }
    Ok(best_sum.min(f1).min(f2).max(0.0))
}

/// Two evaluations of the mutually unbiased trade-off constant: a known
/// algebraic closed form and 2ε* where ε* is the root of the symmetric
/// one-variable reduction of I with the improved D coefficient,
/// N·I(ε,ε;1/√N,1/√N) = 2(N−1)²ε + (4N−2)√ε − 1. The two differ by a small
/// relative margin (the reduction's linear ε-coefficient exceeds the one
/// implied by the closed form by exactly tt′ = 1/N); both are reported and
/// neither is corrected toward the other.
#[derive(Clone, Copy, Debug)]
pub struct MubBound {
    pub closed_form: f64,
    pub numeric_root: f64,
}

/// Closed-form and numerically solved mutually unbiased bounds, available
/// for N ∈ {3, 5}.
pub fn mub_bound(n: usize) -> Result<MubBound> {
    let closed_form = match n {
        3 => 2.0 * ((4.0 * 2f64.sqrt() - 5.0) / 7.0).powi(2),
        5 => 2.0 * ((4.0 * 7f64.sqrt() - 9.0) / 31.0).powi(2),
        _ => {
            return Err(EdrError::Invalid {
                context: "mub bound",
                reason: format!("closed form known only for dimensions 3 and 5, got {n}"),
            });
        }
    };
    // Bisection on ε ↦ 2(N−1)²ε + (4N−2)√ε − 1, increasing from −1 at 0.
    let nf = n as f64;
    let symmetric =
        |eps: f64| 2.0 * (nf - 1.0).powi(2) * eps + (4.0 * nf - 2.0) * eps.sqrt() - 1.0;
    let mut lo = 0.0;
    let mut hi = 1.0;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if symmetric(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let eps_star = 0.5 * (lo + hi);
    Ok(MubBound {
        closed_form,
        numeric_root: 2.0 * eps_star,
    })
}

/// Cauchy–Schwarz step used inside I's coefficients, exposed as a checkable
/// inequality: Σ_{a≥2}|⟨ā|1⟩| ≤ √(N−1)·√(1−|⟨1̄|1⟩|²).
#[cfg(test)]
fn cauchy_schwarz_row_gap(table: &OverlapTable) -> f64 {
    let n = table.dim();
    let sum: f64 = (1..n).map(|a| table.value(a, 0)).sum();
    let bound = ((n - 1) as f64).sqrt() * (1.0 - table.value(0, 0).powi(2)).max(0.0).sqrt();
    bound - sum
}
