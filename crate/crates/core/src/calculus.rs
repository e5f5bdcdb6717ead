//! Lifted derivations of the convolution algebra.
//!
//! A vector field `P = Σ c_i ∂/∂x_i` on the base lifts to arrows in two
//! ways: horizontally, acting on the source coordinates with coefficients
//! taken at the source, and vertically, acting on the target coordinates
//! with coefficients taken at the target. Their sum `P̄` satisfies
//!
//! ```text
//! P̄(a*b) = P̄_hor(a)*b + a*P̄_ver(b)
//! [P̄, Q(f)] = Q(Pf)
//! ```
//!
//! Lift results carry values only. When a lifted element needs jets again
//! they are recomputed from the symbolic source (available when both the
//! element and the vector field came from expressions).

use crate::algebra::{AlgebraElement, BaseFunction, C64};
use crate::defect::Defect;
use crate::diffspace::DiffSpace;
use crate::error::{Error, Result};
use crate::expr::{self, Expr, Symbols};

/// A vector field on the base points.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivation {
    dimension: usize,
    /// `dimension` coefficients per point.
    coefficients: Vec<f64>,
    /// `∂_j c_i` per point, row-major `[i][j]`.
    coefficient_gradients: Option<Vec<f64>>,
    exprs: Option<Vec<Expr>>,
}

impl Derivation {
    /// One coefficient expression in `x1..xn` per coordinate.
    pub fn from_expressions(space: &DiffSpace, coefficients: &[&str]) -> Result<Self> {
        let n = space.dimension();
        let exprs = coefficients
            .iter()
            .map(|s| Expr::parse(s, Symbols::Point { dim: n }))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::from_exprs(space, exprs)
    }

    pub fn from_exprs(space: &DiffSpace, exprs: Vec<Expr>) -> Result<Self> {
        let n = space.dimension();
        if exprs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: exprs.len(),
            });
        }
        if let Some(slot) = exprs.iter().filter_map(Expr::max_slot).max() {
            if slot >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: slot + 1,
                });
            }
        }
        let partials: Vec<Expr> = exprs
            .iter()
            .flat_map(|c| (0..n).map(move |j| c.diff(j)))
            .collect();
        let mut coefficients = Vec::with_capacity(space.len() * n);
        let mut gradients = Vec::with_capacity(space.len() * n * n);
        for p in space.points() {
            for c in &exprs {
                coefficients.push(c.eval_finite(&p.coords)?);
            }
            for d in &partials {
                gradients.push(d.eval_finite(&p.coords)?);
            }
        }
        Ok(Derivation {
            dimension: n,
            coefficients,
            coefficient_gradients: Some(gradients),
            exprs: Some(exprs),
        })
    }

    /// Tabulated coefficients (`n` per point) with optional gradients
    /// (`n*n` per point).
    pub fn from_values(
        space: &DiffSpace,
        coefficients: Vec<f64>,
        coefficient_gradients: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = space.dimension();
        if coefficients.len() != space.len() * n {
            return Err(Error::DimensionMismatch {
                expected: space.len() * n,
                found: coefficients.len(),
            });
        }
        if let Some(g) = &coefficient_gradients {
            if g.len() != space.len() * n * n {
                return Err(Error::DimensionMismatch {
                    expected: space.len() * n * n,
                    found: g.len(),
                });
            }
        }
        Ok(Derivation {
            dimension: n,
            coefficients,
            coefficient_gradients,
            exprs: None,
        })
    }

    /// `∂/∂x_{i+1}`.
    pub fn coordinate(space: &DiffSpace, i: usize) -> Result<Self> {
        let n = space.dimension();
        if i >= n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: i + 1,
            });
        }
        let exprs = (0..n)
            .map(|k| Expr::Const(if k == i { 1.0 } else { 0.0 }))
            .collect();
        Self::from_exprs(space, exprs)
    }

    pub fn zero(space: &DiffSpace) -> Self {
        Self::from_exprs(space, vec![Expr::Const(0.0); space.dimension()])
            .expect("constant coefficients evaluate")
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn coefficients_at(&self, point: usize) -> &[f64] {
        let n = self.dimension;
        &self.coefficients[point * n..(point + 1) * n]
    }

    pub fn exprs(&self) -> Option<&[Expr]> {
        self.exprs.as_deref()
    }

    pub fn linear_combination(&self, alpha: f64, other: &Derivation, beta: f64) -> Result<Self> {
        if self.coefficients.len() != other.coefficients.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coefficients.len(),
                found: other.coefficients.len(),
            });
        }
        let mix = |x: &[f64], y: &[f64]| -> Vec<f64> {
            x.iter().zip(y).map(|(a, b)| alpha * a + beta * b).collect()
        };
        Ok(Derivation {
            dimension: self.dimension,
            coefficients: mix(&self.coefficients, &other.coefficients),
            coefficient_gradients: match (&self.coefficient_gradients, &other.coefficient_gradients) {
                (Some(p), Some(q)) => Some(mix(p, q)),
                _ => None,
            },
            exprs: match (&self.exprs, &other.exprs) {
                (Some(p), Some(q)) => Some(
                    p.iter()
                        .zip(q)
                        .map(|(a, b)| {
                            expr::add(
                                expr::mul(Expr::Const(alpha), a.clone()),
                                expr::mul(Expr::Const(beta), b.clone()),
                            )
                        })
                        .collect(),
                ),
                _ => None,
            },
        })
    }

    /// Largest relative gap between the stored coefficient gradients and
    /// central differences of the coefficient expressions.
    pub fn gradient_consistency(&self, space: &DiffSpace, h: f64) -> Option<f64> {
        let exprs = self.exprs.as_ref()?;
        let grads = self.coefficient_gradients.as_ref()?;
        let n = self.dimension;
        let mut worst: f64 = 0.0;
        for (p, point) in space.points().iter().enumerate() {
            for (i, c) in exprs.iter().enumerate() {
                for j in 0..n {
                    let mut plus = point.coords.clone();
                    let mut minus = point.coords.clone();
                    plus[j] += h;
                    minus[j] -= h;
                    let fd = (c.eval(&plus) - c.eval(&minus)) / (2.0 * h);
                    let stored = grads[p * n * n + i * n + j];
                    worst = worst.max((fd - stored).abs() / stored.abs().max(1.0));
                }
            }
        }
        Some(worst)
    }

    /// `Pf`, the derivative of a base function along the field. Its gradient
    /// is available when `f` is symbolic and the coefficient gradients are
    /// known.
    pub fn apply(&self, f: &BaseFunction) -> Result<BaseFunction> {
        let n = self.dimension;
        if f.dimension() != n || f.values().len() * n != self.coefficients.len() {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: f.dimension(),
            });
        }
        let points = f.values().len();
        let mut values = Vec::with_capacity(points);
        for p in 0..points {
            let grad = f
                .gradient(p)
                .ok_or_else(|| Error::MissingGradient("Pf needs the gradient of f".into()))?;
            let c = self.coefficients_at(p);
            values.push((0..n).map(|i| grad[i] * c[i]).sum::<C64>());
        }
        let gradients = match (f.expr(), &self.coefficient_gradients, &self.exprs) {
            (Some(fe), Some(cg), _) => {
                let first: Vec<Expr> = (0..n).map(|i| fe.diff(i)).collect();
                let second: Vec<Vec<Expr>> = first
                    .iter()
                    .map(|d| (0..n).map(|j| d.diff(j)).collect())
                    .collect();
                let coords = f.coords();
                let mut out = Vec::with_capacity(points * n);
                for (p, x) in coords.iter().enumerate() {
                    let c = self.coefficients_at(p);
                    for j in 0..n {
                        let mut acc = 0.0;
                        for i in 0..n {
                            acc += cg[p * n * n + i * n + j] * first[i].eval(x)
                                + c[i] * second[i][j].eval(x);
                        }
                        out.push(C64::new(acc, 0.0));
                    }
                }
                Some(out)
            }
            _ => None,
        };
        let expr = match (f.expr(), &self.exprs) {
            (Some(fe), Some(cs)) => Some(
                cs.iter()
                    .enumerate()
                    .fold(Expr::Const(0.0), |acc, (i, c)| {
                        expr::add(acc, expr::mul(c.clone(), fe.diff(i)))
                    }),
            ),
            _ => None,
        };
        let is_real = values.iter().all(|v: &C64| v.im == 0.0);
        Ok(f.sibling(values, gradients, expr, is_real))
    }

    fn check(&self, a: &AlgebraElement) -> Result<()> {
        let g = a.groupoid();
        if self.dimension != g.dimension() || self.coefficients.len() != g.space().len() * self.dimension {
            return Err(Error::DimensionMismatch {
                expected: g.dimension(),
                found: self.dimension,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Side {
    Source,
    Target,
}

fn lift(p: &Derivation, a: &AlgebraElement, side: Side) -> Result<AlgebraElement> {
    p.check(a)?;
    let a = a.with_jets()?;
    let g = a.groupoid().clone();
    let space = g.space().clone();
    let n = p.dimension;
    let values = g
        .arrows()
        .enumerate()
        .map(|(i, arrow)| {
            let (d_src, d_dst) = a.partials(i).expect("jets present");
            let (at, partials) = match side {
                Side::Source => (arrow.src, d_src),
                Side::Target => (arrow.dst, d_dst),
            };
            let c = p.coefficients_at(space.index_of(at).expect("base point"));
            (0..n).map(|k| partials[k] * c[k]).sum::<C64>()
        })
        .collect();
    let symbolic = match (a.symbolic(), &p.exprs) {
        (Some(e), Some(cs)) => Some(cs.iter().enumerate().fold(Expr::Const(0.0), |acc, (k, c)| {
            let (coef, slot) = match side {
                Side::Source => (c.clone(), k),
                Side::Target => (c.shift_slots(n), n + k),
            };
            expr::add(acc, expr::mul(coef, e.diff(slot)))
        })),
        _ => None,
    };
    Ok(AlgebraElement::from_values(&g, values)?.with_symbolic(symbolic))
}

/// `P̄_hor(a)(x,y) = Σ_i c_i(x) ∂a/∂x_i(x,y)`.
pub fn lift_horizontal(p: &Derivation, a: &AlgebraElement) -> Result<AlgebraElement> {
    lift(p, a, Side::Source)
}

/// `P̄_ver(a)(x,y) = Σ_i c_i(y) ∂a/∂y_i(x,y)`.
pub fn lift_vertical(p: &Derivation, a: &AlgebraElement) -> Result<AlgebraElement> {
    lift(p, a, Side::Target)
}

/// `P̄ = P̄_hor + P̄_ver`.
pub fn lift_symmetrized(p: &Derivation, a: &AlgebraElement) -> Result<AlgebraElement> {
    lift_horizontal(p, a)?.add(&lift_vertical(p, a)?)
}

/// Max over arrows of `|P̄(a*b) − (P̄_hor(a)*b + a*P̄_ver(b))|`.
pub fn leibniz_defect(p: &Derivation, a: &AlgebraElement, b: &AlgebraElement) -> Result<Defect> {
    let a = a.with_jets()?;
    let b = b.with_jets()?;
    let ab = a.convolve(&b)?;
    let lhs = lift_symmetrized(p, &ab)?;
    let left_term = lift_horizontal(p, &a)?.convolve(&b)?;
    let right_term = a.convolve(&lift_vertical(p, &b)?)?;
    let rhs = left_term.add(&right_term)?;
    let scale = lhs.max_abs().max(left_term.max_abs()).max(right_term.max_abs());
    Ok(Defect::new(lhs.max_abs_diff(&rhs)?, scale))
}

/// `[P̄, Q(f)]a = P̄(Q(f)a) − Q(f)(P̄a)`.
pub fn commutator(p: &Derivation, f: &BaseFunction, a: &AlgebraElement) -> Result<AlgebraElement> {
    let a = a.with_jets()?;
    let first = lift_symmetrized(p, &a.module_action(f)?)?;
    let second = lift_symmetrized(p, &a)?.without_jets().module_action(f)?;
    first.sub(&second)
}

/// Max over arrows of `|P̄(Q(f)a) − Q(f)(P̄a) − Q(Pf)a|`.
pub fn commutator_defect(p: &Derivation, f: &BaseFunction, a: &AlgebraElement) -> Result<Defect> {
    let a = a.with_jets()?;
    let pf = p.apply(f)?;
    let first = lift_symmetrized(p, &a.module_action(f)?)?;
    let second = lift_symmetrized(p, &a)?.without_jets().module_action(f)?;
    let rhs = a.clone().without_jets().module_action(&pf)?;
    let lhs = first.sub(&second)?;
    let scale = first.max_abs().max(second.max_abs()).max(rhs.max_abs());
    Ok(Defect::new(lhs.max_abs_diff(&rhs)?, scale))
}
