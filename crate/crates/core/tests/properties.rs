use std::sync::Arc;

use hausdorff::calculus::{commutator_defect, leibniz_defect, lift_symmetrized};
use hausdorff::representation::{homomorphism_defect, star_defect};
use hausdorff::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn setup(seed: u64, count: usize, block: usize) -> (ChaCha8Rng, Arc<Groupoid>) {
    let mut r = rng(seed);
    let g = sample::groupoid(&mut r, count, 2, block, false);
    (r, g)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn involution_is_involutive(seed: u64, count in 1usize..9, block in 1usize..5) {
        let (mut r, g) = setup(seed, count, block);
        let a = sample::element(&mut r, &g);
        let back = a.involution().involution();
        prop_assert_eq!(back.values(), a.values());
    }

    #[test]
    fn unit_is_two_sided(seed: u64, count in 1usize..9, block in 1usize..5) {
        let (mut r, g) = setup(seed, count, block);
        let a = sample::element(&mut r, &g);
        let u = AlgebraElement::unit(&g);
        prop_assert!(u.convolve(&a).unwrap().max_abs_diff(&a).unwrap() <= 1e-15);
        prop_assert!(a.convolve(&u).unwrap().max_abs_diff(&a).unwrap() <= 1e-15);
    }

    #[test]
    fn convolution_is_bilinear(seed: u64, count in 1usize..9, block in 1usize..5) {
        let (mut r, g) = setup(seed, count, block);
        let a = sample::element(&mut r, &g);
        let b = sample::element(&mut r, &g);
        let c = sample::element(&mut r, &g);
        let lhs = a.add(&b).unwrap().convolve(&c).unwrap();
        let rhs = a.convolve(&c).unwrap().add(&b.convolve(&c).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12);
    }

    #[test]
    fn representation_is_multiplicative(seed: u64, count in 1usize..8, block in 1usize..5) {
        let (mut r, g) = setup(seed, count, block);
        let a = sample::element(&mut r, &g);
        let b = sample::element(&mut r, &g);
        prop_assert!(homomorphism_defect(&a, &b).unwrap().within(1e-12));
        prop_assert!(star_defect(&a).unwrap().within(1e-12));
    }

    #[test]
    fn representation_is_faithful(seed: u64, count in 1usize..8, block in 1usize..5) {
        let (mut r, g) = setup(seed, count, block);
        let a = sample::element(&mut r, &g);
        prop_assert!(represent(&a).max_norm() > 0.0);
    }

    #[test]
    fn module_action_is_multiplicative(seed: u64, count in 1usize..8, block in 1usize..5) {
        let (mut r, g) = setup(seed, count, block);
        let a = sample::polynomial_element(&mut r, &g);
        let f = sample::base_function(&mut r, g.space());
        let h = sample::base_function(&mut r, g.space());
        let lhs = a.module_action(&h).unwrap().module_action(&f).unwrap();
        let rhs = a.module_action(&f.product(&h).unwrap()).unwrap();
        let scale = lhs.max_abs().max(1.0);
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() / scale <= 1e-12);
    }

    #[test]
    fn lifted_derivation_identities(seed: u64, count in 1usize..7, block in 1usize..5) {
        let (mut r, g) = setup(seed, count, block);
        let p = sample::derivation(&mut r, g.space());
        let f = sample::base_function(&mut r, g.space());
        let a = sample::polynomial_element(&mut r, &g);
        let b = sample::polynomial_element(&mut r, &g);
        prop_assert!(leibniz_defect(&p, &a, &b).unwrap().within(1e-12));
        prop_assert!(commutator_defect(&p, &f, &a).unwrap().within(1e-12));
        let sum = lift_symmetrized(&p, &a.add(&b).unwrap()).unwrap();
        let parts = lift_symmetrized(&p, &a).unwrap().add(&lift_symmetrized(&p, &b).unwrap()).unwrap();
        prop_assert!(sum.max_abs_diff(&parts).unwrap() / sum.max_abs().max(1.0) <= 1e-12);
    }

    #[test]
    fn relation_refines_under_more_generators(seed: u64) {
        let mut r = rng(seed);
        let space = sample::space(&mut r, 8, 2, 3);
        let rho = hausdorff_relation(&space).unwrap();
        let mut gens = space.generators().to_vec();
        gens.push(GeneratorFunction::projection(0));
        let finer = hausdorff_relation(&space.with_generators(gens).unwrap()).unwrap();
        prop_assert!(finer.refines(&rho));
    }

    #[test]
    fn quotient_pullback_round_trips(seed: u64) {
        let mut r = rng(seed);
        let space = sample::space(&mut r, 8, 2, 3);
        let rho = hausdorff_relation(&space).unwrap();
        let q = quotient(&space, &rho).unwrap();
        prop_assert!(q.dropped.is_empty());
        prop_assert_eq!(q.space.len(), rho.num_blocks());
        prop_assert!((q.space.total_measure() - space.total_measure()).abs() <= 1e-12);
        let table = space.generator_table().unwrap();
        for (k, &orig) in q.kept.iter().enumerate() {
            prop_assert_eq!(&q.pullback(&space, k).unwrap(), &table[orig]);
        }
    }
}
