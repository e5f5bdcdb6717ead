//! Regular representation of the convolution algebra on the bundle of
//! fiber Hilbert spaces.
//!
//! The fiber over `x` is spanned by the points of its class `[x]`, with
//! the weighted inner product `⟨ψ,φ⟩ = Σ ψ(z) conj(φ(z)) w_z`. An element
//! acts by
//!
//! ```text
//! (π_x(a)ψ)(z_i) = Σ_j a(z_i, z_j) ψ(z_j) w_{z_j}
//! ```
//!
//! which is the matrix `M[i,j] = a(z_i,z_j)·w_{z_j}`. The matrix depends only
//! on the class, so it is stored once per block and every point of the
//! block refers to it.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_traits::Zero;

use crate::algebra::{AlgebraElement, C64};
use crate::defect::Defect;
use crate::diffspace::PointId;
use crate::error::{Error, Result};
use crate::groupoid::Groupoid;

/// `L²(Γ^x)` at finite scale.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberSpace {
    pub base: PointId,
    pub basis: Vec<PointId>,
    pub weights: Vec<f64>,
}

pub fn fiber_space(g: &Groupoid, x: PointId) -> Result<FiberSpace> {
    let (b, _) = g.locate(x)?;
    let block = &g.blocks()[b];
    let space = g.space();
    Ok(FiberSpace {
        base: x,
        basis: block.members.clone(),
        weights: block.space_index.iter().map(|&i| space.points()[i].weight).collect(),
    })
}

/// A field of fiber operators `x ↦ A_x`, constant on classes.
#[derive(Debug, Clone)]
pub struct RandomOperator {
    groupoid: Arc<Groupoid>,
    class_matrices: Vec<DMatrix<C64>>,
}

pub fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

fn class_weights(g: &Groupoid, b: usize) -> Vec<f64> {
    let space = g.space();
    g.blocks()[b]
        .space_index
        .iter()
        .map(|&i| space.points()[i].weight)
        .collect()
}

pub fn represent(a: &AlgebraElement) -> RandomOperator {
    let g = a.groupoid();
    let class_matrices = g
        .blocks()
        .iter()
        .enumerate()
        .map(|(b, block)| {
            let m = block.size();
            let w = class_weights(g, b);
            DMatrix::from_fn(m, m, |i, j| a.values()[block.offset + i * m + j] * w[j])
        })
        .collect();
    RandomOperator {
        groupoid: g.clone(),
        class_matrices,
    }
}

impl RandomOperator {
    pub fn from_class_matrices(g: &Arc<Groupoid>, class_matrices: Vec<DMatrix<C64>>) -> Result<Self> {
        if class_matrices.len() != g.blocks().len() {
            return Err(Error::DimensionMismatch {
                expected: g.blocks().len(),
                found: class_matrices.len(),
            });
        }
        for (block, m) in g.blocks().iter().zip(&class_matrices) {
            if m.nrows() != block.size() || m.ncols() != block.size() {
                return Err(Error::FiberDimension {
                    point: block.members[0],
                    expected: block.size(),
                    found: m.nrows().max(m.ncols()),
                });
            }
        }
        Ok(RandomOperator {
            groupoid: g.clone(),
            class_matrices,
        })
    }

    pub fn identity(g: &Arc<Groupoid>) -> Self {
        let class_matrices = g
            .blocks()
            .iter()
            .map(|b| DMatrix::identity(b.size(), b.size()))
            .collect();
        RandomOperator {
            groupoid: g.clone(),
            class_matrices,
        }
    }

    pub fn zero(g: &Arc<Groupoid>) -> Self {
        Self::identity(g).scale(C64::zero())
    }

    pub fn groupoid(&self) -> &Arc<Groupoid> {
        &self.groupoid
    }

    pub fn class_matrices(&self) -> &[DMatrix<C64>] {
        &self.class_matrices
    }

    /// The operator on the fiber over `x`.
    pub fn fiber(&self, x: PointId) -> Result<&DMatrix<C64>> {
        let (b, _) = self.groupoid.locate(x)?;
        Ok(&self.class_matrices[b])
    }

    fn check_same(&self, other: &RandomOperator) -> Result<()> {
        if self.groupoid.same_as(&other.groupoid) {
            Ok(())
        } else {
            Err(Error::GroupoidMismatch)
        }
    }

    fn zip(&self, other: &RandomOperator, f: impl Fn(&DMatrix<C64>, &DMatrix<C64>) -> DMatrix<C64>) -> Result<Self> {
        self.check_same(other)?;
        Ok(RandomOperator {
            groupoid: self.groupoid.clone(),
            class_matrices: self
                .class_matrices
                .iter()
                .zip(&other.class_matrices)
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }

    /// Fiberwise product.
    pub fn mul(&self, other: &RandomOperator) -> Result<Self> {
        self.zip(other, |a, b| a * b)
    }

    pub fn add(&self, other: &RandomOperator) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &RandomOperator) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, c: C64) -> Self {
        RandomOperator {
            groupoid: self.groupoid.clone(),
            class_matrices: self.class_matrices.iter().map(|m| m * c).collect(),
        }
    }

    /// Adjoint for the weighted fiber inner product: `W⁻¹ Aᴴ W`.
    pub fn weighted_adjoint(&self) -> Self {
        let g = &self.groupoid;
        let class_matrices = self
            .class_matrices
            .iter()
            .enumerate()
            .map(|(b, m)| {
                let w = class_weights(g, b);
                let mut adj = m.adjoint();
                for i in 0..adj.nrows() {
                    for j in 0..adj.ncols() {
                        adj[(i, j)] *= w[j] / w[i];
                    }
                }
                adj
            })
            .collect();
        RandomOperator {
            groupoid: g.clone(),
            class_matrices,
        }
    }

    /// Spectral norm of each class matrix.
    pub fn class_norms(&self) -> Vec<f64> {
        self.class_matrices.iter().map(spectral_norm).collect()
    }

    /// `max_x ‖A_x‖`.
    pub fn max_norm(&self) -> f64 {
        self.class_norms().into_iter().fold(0.0, f64::max)
    }

    /// `max_x ‖A_x − B_x‖`.
    pub fn distance(&self, other: &RandomOperator) -> Result<f64> {
        Ok(self.sub(other)?.max_norm())
    }

    /// Total dimension `D = Σ_x m_x` of the direct sum of fibers.
    pub fn direct_sum_dim(&self) -> usize {
        self.groupoid
            .blocks()
            .iter()
            .map(|b| b.size() * b.size())
            .sum()
    }

    /// Block-diagonal matrix on `⊕_x ℋ_x`, one block per base point in
    /// space order (each point repeats its class matrix).
    pub fn direct_sum(&self) -> DMatrix<C64> {
        let d = self.direct_sum_dim();
        let mut out = DMatrix::zeros(d, d);
        let mut at = 0;
        for p in self.groupoid.space().points() {
            let m = self.fiber(p.id).expect("base point");
            out.view_mut((at, at), (m.nrows(), m.ncols())).copy_from(m);
            at += m.nrows();
        }
        out
    }
}

/// `max_x ‖π_x(a*b) − π_x(a)π_x(b)‖`, scaled by `‖π(a)‖·‖π(b)‖`.
pub fn homomorphism_defect(a: &AlgebraElement, b: &AlgebraElement) -> Result<Defect> {
    let ab = represent(&a.convolve(b)?);
    let (ra, rb) = (represent(a), represent(b));
    let product = ra.mul(&rb)?;
    Ok(Defect::new(ab.distance(&product)?, ra.max_norm() * rb.max_norm()))
}

/// `max_x ‖π_x(a*) − π_x(a)^♯‖` with `♯` the weighted adjoint.
pub fn star_defect(a: &AlgebraElement) -> Result<Defect> {
    let ra = represent(a);
    let star = represent(&a.involution());
    Ok(Defect::new(star.distance(&ra.weighted_adjoint())?, ra.max_norm()))
}

/// The two conditions for a field of operators to be a random operator.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomOperatorReport {
    /// Matrix coefficients `x ↦ (A_x ψ_i, ψ_j)` are measurable. Holds for
    /// every function on a finite index set with the atomic measure.
    pub measurable: bool,
    pub measurability_note: &'static str,
    /// `ess sup_x ‖A_x‖`; every atom has positive weight, so this is the max.
    pub ess_sup: f64,
    pub essentially_bounded: bool,
}

pub fn random_operator_report(r: &RandomOperator) -> RandomOperatorReport {
    let ess_sup = r.max_norm();
    RandomOperatorReport {
        measurable: true,
        measurability_note: "finite base with atomic measure: every coefficient function is measurable",
        ess_sup,
        essentially_bounded: ess_sup.is_finite(),
    }
}
