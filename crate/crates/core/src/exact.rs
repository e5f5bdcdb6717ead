//! Exact rational arithmetic for the convolution algebra.
//!
//! Every finite `f64` is a dyadic rational, so floating-point elements embed
//! exactly. Convolution here shares the block loop of the floating-point
//! path, which makes identities such as associativity checkable with zero
//! tolerance.

use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::algebra::{convolve_blocks, AlgebraElement};
use crate::error::{Error, Result};
use crate::groupoid::{inverse, Groupoid};

pub type ExactScalar = Complex<BigRational>;

fn rational(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite value")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactElement {
    groupoid: Arc<Groupoid>,
    values: Vec<ExactScalar>,
}

impl ExactElement {
    /// Exact image of a floating-point element (values only).
    pub fn from_element(a: &AlgebraElement) -> Self {
        ExactElement {
            groupoid: a.groupoid().clone(),
            values: a
                .values()
                .iter()
                .map(|v| Complex::new(rational(v.re), rational(v.im)))
                .collect(),
        }
    }

    /// Element with small integer entries `re[i] + i·im[i]`.
    pub fn from_integers(g: &Arc<Groupoid>, entries: &[(i64, i64)]) -> Result<Self> {
        if entries.len() != g.arrow_count() {
            return Err(Error::DimensionMismatch {
                expected: g.arrow_count(),
                found: entries.len(),
            });
        }
        let int = |v: i64| BigRational::from_integer(BigInt::from(v));
        Ok(ExactElement {
            groupoid: g.clone(),
            values: entries.iter().map(|&(re, im)| Complex::new(int(re), int(im))).collect(),
        })
    }

    pub fn unit(g: &Arc<Groupoid>) -> Self {
        let values = g
            .arrows()
            .map(|a| {
                if a.is_unit() {
                    let w = rational(g.space().weight(a.src).expect("base point"));
                    Complex::new(BigRational::one() / w, BigRational::zero())
                } else {
                    ExactScalar::zero()
                }
            })
            .collect();
        ExactElement {
            groupoid: g.clone(),
            values,
        }
    }

    pub fn values(&self) -> &[ExactScalar] {
        &self.values
    }

    pub fn groupoid(&self) -> &Arc<Groupoid> {
        &self.groupoid
    }

    pub fn convolve(&self, other: &ExactElement) -> Result<ExactElement> {
        if !self.groupoid.same_as(&other.groupoid) {
            return Err(Error::GroupoidMismatch);
        }
        let weights: Vec<ExactScalar> = self
            .groupoid
            .space()
            .points()
            .iter()
            .map(|p| Complex::new(rational(p.weight), BigRational::zero()))
            .collect();
        Ok(ExactElement {
            groupoid: self.groupoid.clone(),
            values: convolve_blocks(&self.groupoid, &self.values, &other.values, &weights),
        })
    }

    pub fn involution(&self) -> ExactElement {
        let g = &self.groupoid;
        let values = g
            .arrows()
            .map(|a| self.values[g.arrow_index(inverse(a)).expect("inverse arrow")].conj())
            .collect();
        ExactElement {
            groupoid: g.clone(),
            values,
        }
    }

    /// Nearest `f64` image, for comparison with the floating-point path.
    pub fn to_f64(&self) -> Vec<(f64, f64)> {
        use num_traits::ToPrimitive;
        self.values
            .iter()
            .map(|v| (v.re.to_f64().unwrap_or(f64::NAN), v.im.to_f64().unwrap_or(f64::NAN)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffspace::{CompareMode, DiffSpace, GeneratorFunction, Partition, Point, PointId};
    use crate::groupoid::build_groupoid;

    fn groupoid(weights: &[f64], blocks: Vec<Vec<u64>>) -> Arc<Groupoid> {
        let points = weights
            .iter()
            .enumerate()
            .map(|(i, &w)| Point {
                id: PointId(i as u64),
                coords: vec![i as f64],
                weight: w,
            })
            .collect();
        let s = Arc::new(
            DiffSpace::new(1, points, vec![GeneratorFunction::projection(0)], CompareMode::Exact)
                .unwrap(),
        );
        let rho = Partition::from_blocks(
            blocks
                .into_iter()
                .map(|b| b.into_iter().map(PointId).collect())
                .collect(),
        )
        .unwrap();
        build_groupoid(s, rho).unwrap()
    }

    #[test]
    fn exact_associativity_and_unit() {
        let g = groupoid(&[1.0, 0.5, 3.0, 2.0], vec![vec![0, 1, 2], vec![3]]);
        let n = g.arrow_count() as i64;
        let mk = |s: i64| {
            let e: Vec<(i64, i64)> = (0..n).map(|k| ((k * s) % 7 - 3, (k + s) % 5 - 2)).collect();
            ExactElement::from_integers(&g, &e).unwrap()
        };
        let (a, b, c) = (mk(1), mk(2), mk(3));
        let left = a.convolve(&b).unwrap().convolve(&c).unwrap();
        let right = a.convolve(&b.convolve(&c).unwrap()).unwrap();
        assert_eq!(left, right);

        let e = ExactElement::unit(&g);
        assert_eq!(e.convolve(&a).unwrap(), a);
        assert_eq!(a.convolve(&e).unwrap(), a);

        let lhs = a.convolve(&b).unwrap().involution();
        let rhs = b.involution().convolve(&a.involution()).unwrap();
        assert_eq!(lhs, rhs);
    }
}
