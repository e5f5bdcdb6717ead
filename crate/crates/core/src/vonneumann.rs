//! Finite-scale von Neumann closure and noncommutative probability.
//!
//! The direct integral of fibers is the finite direct sum `⊕_x ℋ_x` of
//! dimension `D = Σ_x m_x`. Commutants are taken inside the full `D×D`
//! matrix algebra by solving `XG = GX` for every generator as a linear
//! system in the `D²` entries of `X`.
//!
//! A state is given by a density field `x ↦ ρ̂(x)` and evaluates
//! `Φ(R) = Σ_x tr(ρ̂(x) R_x) w_x`. Normality is automatic in finite
//! dimension.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_traits::Zero;

use crate::algebra::C64;
use crate::error::{Error, Result};
use crate::groupoid::Groupoid;
use crate::representation::RandomOperator;

/// Fiber and direct-sum operators.
pub type Matrix = DMatrix<C64>;

/// Largest direct-sum dimension accepted by the commutant solver.
pub const COMMUTANT_GUARD: usize = 64;
/// Relative singular-value threshold for rank decisions.
pub const RANK_TOL: f64 = 1e-10;
/// Eigenvalue threshold, relative to the fiber trace, for positivity and
/// faithfulness.
pub const EIGEN_TOL: f64 = 1e-12;
pub const DEFAULT_NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct DensityField {
    groupoid: Arc<Groupoid>,
    /// One matrix per base point, in space order.
    matrices: Vec<DMatrix<C64>>,
}

impl DensityField {
    pub fn new(g: &Arc<Groupoid>, matrices: Vec<DMatrix<C64>>) -> Result<Self> {
        let space = g.space();
        if matrices.len() != space.len() {
            return Err(Error::DimensionMismatch {
                expected: space.len(),
                found: matrices.len(),
            });
        }
        for (p, m) in space.points().iter().zip(&matrices) {
            let want = g.partition().class_of(p.id)?.len();
            if m.nrows() != want || m.ncols() != want {
                return Err(Error::FiberDimension {
                    point: p.id,
                    expected: want,
                    found: m.nrows().max(m.ncols()),
                });
            }
        }
        Ok(DensityField {
            groupoid: g.clone(),
            matrices,
        })
    }

    /// `ρ̂(x) = I / Σ_x m_x w_x`.
    pub fn uniform(g: &Arc<Groupoid>) -> Self {
        let space = g.space();
        let sizes: Vec<usize> = space
            .points()
            .iter()
            .map(|p| g.partition().class_of(p.id).expect("base point").len())
            .collect();
        let total: f64 = sizes
            .iter()
            .zip(space.points())
            .map(|(&m, p)| m as f64 * p.weight)
            .sum();
        let matrices = sizes
            .iter()
            .map(|&m| DMatrix::identity(m, m) * C64::new(1.0 / total, 0.0))
            .collect();
        DensityField {
            groupoid: g.clone(),
            matrices,
        }
    }

    pub fn matrices(&self) -> &[DMatrix<C64>] {
        &self.matrices
    }

    pub fn groupoid(&self) -> &Arc<Groupoid> {
        &self.groupoid
    }
}

/// Which of the four density conditions hold, plus faithfulness.
#[derive(Debug, Clone, PartialEq)]
pub struct StateReport {
    /// Every `ρ̂(x)` has finite trace (finite fibers).
    pub trace_class: bool,
    /// `x ↦ tr ρ̂(x)` is integrable (finite base).
    pub integrable: bool,
    pub positive: bool,
    pub normalized: bool,
    /// Structurally satisfied in finite dimension.
    pub normal: bool,
    /// Every `ρ̂(x)` is positive definite.
    pub faithful: bool,
    pub total_trace: f64,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone)]
pub struct State {
    field: DensityField,
    report: StateReport,
}

pub fn make_state(field: DensityField) -> Result<State> {
    make_state_with_tol(field, DEFAULT_NORMALIZATION_TOL)
}

pub fn make_state_with_tol(field: DensityField, normalization_tol: f64) -> Result<State> {
    let space = field.groupoid.space().clone();
    let mut total = 0.0;
    let mut faithful = true;
    let mut min_eigenvalue = f64::INFINITY;
    for (p, m) in space.points().iter().zip(&field.matrices) {
        let adj = m.adjoint();
        let scale = m.iter().map(|v| v.norm()).fold(1.0, f64::max);
        let deviation = (m - &adj).iter().map(|v| v.norm()).fold(0.0, f64::max);
        if deviation > EIGEN_TOL * scale {
            return Err(Error::NonHermitian {
                point: p.id,
                deviation,
            });
        }
        let hermitian = (m + adj) * C64::new(0.5, 0.0);
        let trace = hermitian.trace().re;
        let lowest = hermitian.symmetric_eigenvalues().min();
        let threshold = EIGEN_TOL * trace.abs().max(f64::MIN_POSITIVE);
        if lowest < -threshold {
            return Err(Error::NegativeEigenvalue {
                point: p.id,
                eigenvalue: lowest,
            });
        }
        faithful &= lowest > threshold;
        min_eigenvalue = min_eigenvalue.min(lowest);
        total += trace * p.weight;
    }
    if (total - 1.0).abs() > normalization_tol {
        return Err(Error::Normalization { total });
    }
    Ok(State {
        field,
        report: StateReport {
            trace_class: true,
            integrable: true,
            positive: true,
            normalized: true,
            normal: true,
            faithful,
            total_trace: total,
            min_eigenvalue,
        },
    })
}

impl State {
    pub fn report(&self) -> &StateReport {
        &self.report
    }

    pub fn field(&self) -> &DensityField {
        &self.field
    }

    pub fn is_faithful(&self) -> bool {
        self.report.faithful
    }
}

/// `Φ(R) = Σ_x tr(ρ̂(x) R_x) w_x`.
pub fn expect(state: &State, r: &RandomOperator) -> Result<C64> {
    let g = &state.field.groupoid;
    if !g.same_as(r.groupoid()) {
        return Err(Error::GroupoidMismatch);
    }
    let mut acc = C64::zero();
    for (p, rho) in g.space().points().iter().zip(&state.field.matrices) {
        let rx = r.fiber(p.id)?;
        if rx.shape() != rho.shape() {
            return Err(Error::FiberDimension {
                point: p.id,
                expected: rho.nrows(),
                found: rx.nrows(),
            });
        }
        acc += (rho * rx).trace() * p.weight;
    }
    Ok(acc)
}

/// Operators on `C^D`, orthonormal for `⟨X,Y⟩ = tr(Xᴴ Y)`.
#[derive(Debug, Clone)]
pub struct OperatorBasis {
    dim: usize,
    elements: Vec<DMatrix<C64>>,
}

fn vectorize(m: &DMatrix<C64>) -> DVector<C64> {
    DVector::from_column_slice(m.as_slice())
}

fn check_guard(dim: usize) -> Result<()> {
    if dim > COMMUTANT_GUARD {
        return Err(Error::CommutantGuard {
            dim,
            max: COMMUTANT_GUARD,
        });
    }
    Ok(())
}

impl OperatorBasis {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[DMatrix<C64>] {
        &self.elements
    }

    /// Orthonormal basis of the linear span of `mats`.
    pub fn span(dim: usize, mats: &[DMatrix<C64>]) -> Result<Self> {
        check_guard(dim)?;
        let mut elements = Vec::new();
        if !mats.is_empty() {
            let cols: Vec<DVector<C64>> = mats.iter().map(vectorize).collect();
            let stacked = DMatrix::from_columns(&cols);
            let svd = stacked.svd(true, false);
            let u = svd.u.expect("requested U");
            let smax = svd.singular_values.max();
            for (k, &s) in svd.singular_values.iter().enumerate() {
                if smax > 0.0 && s > RANK_TOL * smax {
                    elements.push(DMatrix::from_column_slice(dim, dim, u.column(k).as_slice()));
                }
            }
        }
        Ok(OperatorBasis { dim, elements })
    }

    /// Relative Frobenius residual of projecting `m` onto the span.
    pub fn residual(&self, m: &DMatrix<C64>) -> f64 {
        let norm = m.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let mut rest = m.clone();
        for b in &self.elements {
            let coef = b.dotc(m);
            rest -= b * coef;
        }
        rest.norm() / norm
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.elements.iter().enumerate() {
            for (j, b) in self.elements.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.dotc(b) - C64::new(want, 0.0)).norm());
            }
        }
        worst
    }
}

/// All `X` in the `D×D` matrix algebra with `XG = GX` for every generator.
pub fn commutant(dim: usize, generators: &[DMatrix<C64>]) -> Result<OperatorBasis> {
    check_guard(dim)?;
    for g in generators {
        if g.shape() != (dim, dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: g.nrows(),
            });
        }
    }
    // Only the span of the generators matters; reduce first.
    let reduced = OperatorBasis::span(dim, generators)?;
    let unknowns = dim * dim;
    let rows = reduced.len() * unknowns;
    if rows == 0 {
        let elements = (0..unknowns)
            .map(|k| {
                let mut m = DMatrix::zeros(dim, dim);
                m[(k % dim, k / dim)] = C64::new(1.0, 0.0);
                m
            })
            .collect();
        return Ok(OperatorBasis { dim, elements });
    }
    // vec(GX − XG) = (I⊗G − Gᵀ⊗I) vec(X) for column-major vec.
    let eye = DMatrix::<C64>::identity(dim, dim);
    let mut system = DMatrix::<C64>::zeros(rows.max(unknowns), unknowns);
    for (k, g) in reduced.elements().iter().enumerate() {
        let block = eye.kronecker(g) - g.transpose().kronecker(&eye);
        system
            .view_mut((k * unknowns, 0), (unknowns, unknowns))
            .copy_from(&block);
    }
    let square = if system.nrows() > unknowns {
        system.qr().r()
    } else {
        system
    };
    let svd = square.svd(false, true);
    let v_t = svd.v_t.expect("requested Vᵀ");
    let smax = svd.singular_values.max();
    let elements = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|&(_, &s)| s <= RANK_TOL * smax)
        .map(|(k, _)| {
            let v: Vec<C64> = v_t.row(k).iter().map(|z| z.conj()).collect();
            DMatrix::from_column_slice(dim, dim, &v)
        })
        .collect();
    Ok(OperatorBasis { dim, elements })
}

#[derive(Debug, Clone)]
pub struct BicommutantReport {
    pub commutant: OperatorBasis,
    pub bicommutant: OperatorBasis,
    /// Dimension of `span(generators ∪ {I})`.
    pub span_dim: usize,
    /// Largest relative residual of a generator projected onto `ℳ₀''`.
    pub containment_residual: f64,
    /// `ℳ₀''` coincides with `span(ℳ₀ ∪ {I})`.
    pub equals_span: bool,
}

/// `ℳ₀''` together with a comparison against the span of the generators.
pub fn double_commutant(dim: usize, generators: &[DMatrix<C64>]) -> Result<BicommutantReport> {
    let first = commutant(dim, generators)?;
    let bicommutant = commutant(dim, first.elements())?;
    let mut with_identity = generators.to_vec();
    with_identity.push(DMatrix::identity(dim, dim));
    let span = OperatorBasis::span(dim, &with_identity)?;
    let containment_residual = with_identity
        .iter()
        .map(|g| bicommutant.residual(g))
        .fold(0.0, f64::max);
    let equals_span = span.len() == bicommutant.len() && containment_residual <= RANK_TOL;
    Ok(BicommutantReport {
        commutant: first,
        bicommutant,
        span_dim: span.len(),
        containment_residual,
        equals_span,
    })
}

/// Direct-sum images of a list of random operators.
pub fn direct_sums(ops: &[RandomOperator]) -> (usize, Vec<DMatrix<C64>>) {
    let dim = ops.first().map_or(0, RandomOperator::direct_sum_dim);
    (dim, ops.iter().map(RandomOperator::direct_sum).collect())
}
