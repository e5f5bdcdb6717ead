//! Random spaces, groupoids and elements for property checks.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::algebra::{AlgebraElement, BaseFunction, C64};
use crate::calculus::Derivation;
use crate::diffspace::{CompareMode, DiffSpace, GeneratorFunction, Partition, Point, PointId};
use crate::expr::{add, mul, Expr};
use crate::groupoid::{build_groupoid, Groupoid};
use crate::representation::RandomOperator;

/// Monomial `c · Π v^e` with small integer coefficient and exponents ≤ 2.
fn monomial<R: Rng>(rng: &mut R, slots: &[usize]) -> Expr {
    let mut e = Expr::Const(rng.gen_range(-3..=3) as f64);
    for &s in slots {
        match rng.gen_range(0..3) {
            0 => {}
            1 => e = mul(e, Expr::Var(s)),
            _ => e = mul(e, Expr::Pow(Box::new(Expr::Var(s)), Box::new(Expr::Const(2.0)))),
        }
    }
    e
}

/// Sum of up to `terms` random monomials in the given slots.
pub fn polynomial<R: Rng>(rng: &mut R, slots: &[usize], terms: usize) -> Expr {
    let mut e = Expr::Const(0.0);
    for _ in 0..rng.gen_range(1..=terms.max(1)) {
        e = add(e, monomial(rng, slots));
    }
    e
}

/// A non-constant polynomial in the given slots, or a constant when
/// `slots` is empty.
pub fn nonconstant_polynomial<R: Rng>(rng: &mut R, slots: &[usize], terms: usize) -> Expr {
    loop {
        let e = polynomial(rng, slots, terms);
        if slots.is_empty() || !e.is_constant() {
            return e;
        }
    }
}

/// Points with small integer coordinates so that generator values collide.
pub fn points<R: Rng>(rng: &mut R, count: usize, dimension: usize, unit_weights: bool) -> Vec<Point> {
    (0..count)
        .map(|i| Point {
            id: PointId(i as u64),
            coords: (0..dimension).map(|_| rng.gen_range(-2..=2) as f64).collect(),
            weight: if unit_weights {
                1.0
            } else {
                rng.gen_range(1..=8) as f64 / 4.0
            },
        })
        .collect()
}

/// A space with up to `max_points` points and `1..=max_generators` random
/// polynomial generators.
pub fn space<R: Rng>(
    rng: &mut R,
    max_points: usize,
    dimension: usize,
    max_generators: usize,
) -> DiffSpace {
    let count = rng.gen_range(1..=max_points.max(1));
    let slots: Vec<usize> = (0..dimension).collect();
    let generators = (0..rng.gen_range(1..=max_generators.max(1)))
        .map(|i| GeneratorFunction::new(format!("f{}", i + 1), polynomial(rng, &slots, 3)))
        .collect();
    DiffSpace::new(
        dimension,
        points(rng, count, dimension, false),
        generators,
        CompareMode::Exact,
    )
    .expect("sampled space is valid")
}

/// A random partition with blocks of at most `max_block` points.
pub fn partition<R: Rng>(rng: &mut R, ids: &[PointId], max_block: usize) -> Partition {
    let mut shuffled = ids.to_vec();
    shuffled.shuffle(rng);
    let mut blocks = Vec::new();
    let mut rest = &shuffled[..];
    while !rest.is_empty() {
        let take = rng.gen_range(1..=max_block.max(1).min(rest.len()));
        blocks.push(rest[..take].to_vec());
        rest = &rest[take..];
    }
    Partition::from_blocks(blocks).expect("blocks cover the ids")
}

/// Points with coordinates drawn uniformly from `[-2, 2)`.
pub fn scattered_points<R: Rng>(rng: &mut R, count: usize, dimension: usize, unit_weights: bool) -> Vec<Point> {
    let mut pts = points(rng, count, dimension, unit_weights);
    for p in &mut pts {
        for c in &mut p.coords {
            *c = rng.gen_range(-2.0..2.0);
        }
    }
    pts
}

/// A groupoid over scattered points and a random partition.
pub fn groupoid<R: Rng>(
    rng: &mut R,
    count: usize,
    dimension: usize,
    max_block: usize,
    unit_weights: bool,
) -> Arc<Groupoid> {
    let pts = scattered_points(rng, count, dimension, unit_weights);
    let ids: Vec<PointId> = pts.iter().map(|p| p.id).collect();
    let rho = partition(rng, &ids, max_block);
    let generators = (0..dimension.max(1))
        .map(|i| {
            if dimension == 0 {
                GeneratorFunction::unit()
            } else {
                GeneratorFunction::projection(i)
            }
        })
        .collect();
    let s = DiffSpace::new(dimension, pts, generators, CompareMode::Exact).expect("valid space");
    build_groupoid(Arc::new(s), rho).expect("partition covers the space")
}

/// The groupoid whose single block is every point.
pub fn total_groupoid<R: Rng>(rng: &mut R, count: usize, dimension: usize) -> Arc<Groupoid> {
    let pts = scattered_points(rng, count, dimension, false);
    let generators = vec![GeneratorFunction::unit()];
    let s = DiffSpace::new(dimension, pts, generators, CompareMode::Exact).expect("valid space");
    let rho = Partition::total(s.ids());
    build_groupoid(Arc::new(s), rho).expect("total partition")
}

fn complex<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Uniform complex values in the unit square, no jets.
pub fn element<R: Rng>(rng: &mut R, g: &Arc<Groupoid>) -> AlgebraElement {
    let values = (0..g.arrow_count()).map(|_| complex(rng)).collect();
    AlgebraElement::from_values(g, values).expect("one value per arrow")
}

/// A real polynomial in source and target coordinates, with jets.
pub fn polynomial_element<R: Rng>(rng: &mut R, g: &Arc<Groupoid>) -> AlgebraElement {
    let slots: Vec<usize> = (0..2 * g.dimension()).collect();
    AlgebraElement::from_expr(g, &polynomial(rng, &slots, 4)).expect("polynomials are finite")
}

pub fn base_function<R: Rng>(rng: &mut R, space: &DiffSpace) -> BaseFunction {
    let slots: Vec<usize> = (0..space.dimension()).collect();
    BaseFunction::from_expr(space, &polynomial(rng, &slots, 3)).expect("polynomials are finite")
}

/// A derivation with polynomial coefficients.
pub fn derivation<R: Rng>(rng: &mut R, space: &DiffSpace) -> Derivation {
    let slots: Vec<usize> = (0..space.dimension()).collect();
    let exprs = (0..space.dimension())
        .map(|_| polynomial(rng, &slots, 2))
        .collect();
    Derivation::from_exprs(space, exprs).expect("polynomials are finite")
}

/// Random class matrices with entries in the unit square.
pub fn operator<R: Rng>(rng: &mut R, g: &Arc<Groupoid>) -> RandomOperator {
    let mats = g
        .blocks()
        .iter()
        .map(|b| DMatrix::from_fn(b.size(), b.size(), |_, _| complex(rng)))
        .collect();
    RandomOperator::from_class_matrices(g, mats).expect("block-shaped matrices")
}
