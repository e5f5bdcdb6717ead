//! Acceptance suite: one line per criterion, nonzero exit on any failure.

use std::collections::{BTreeMap, HashMap};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use hausdorff::calculus::{commutator, commutator_defect, leibniz_defect};
use hausdorff::deform::{homomorphism_defect_chain, step_n_pointwise_check};
use hausdorff::exact::ExactElement;
use hausdorff::representation::{homomorphism_defect, random_operator_report, star_defect};
use hausdorff::vonneumann::{direct_sums, double_commutant, expect, make_state};
use hausdorff::*;
use nalgebra::DMatrix;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

fn line_space(weights: &[f64]) -> Arc<DiffSpace> {
    let points = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| Point {
            id: PointId(i as u64),
            coords: vec![i as f64],
            weight: w,
        })
        .collect();
    Arc::new(
        DiffSpace::new(1, points, vec![GeneratorFunction::projection(0)], CompareMode::Exact)
            .unwrap(),
    )
}

fn grid() -> DiffSpace {
    let points = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]
        .iter()
        .enumerate()
        .map(|(i, c)| Point {
            id: PointId(i as u64),
            coords: c.to_vec(),
            weight: 1.0,
        })
        .collect();
    DiffSpace::new(2, points, vec![GeneratorFunction::projection(0)], CompareMode::Exact).unwrap()
}

/// Groups points by exact equality of all generator values, pairwise.
fn oracle_partition(space: &DiffSpace) -> Vec<Vec<PointId>> {
    let values: Vec<Vec<f64>> = space
        .points()
        .iter()
        .map(|p| space.generators().iter().map(|g| g.expr.eval(&p.coords)).collect())
        .collect();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in 0..values.len() {
        match blocks.iter_mut().find(|b| values[b[0]] == values[i]) {
            Some(b) => b.push(i),
            None => blocks.push(vec![i]),
        }
    }
    blocks
        .into_iter()
        .map(|b| b.into_iter().map(|i| space.points()[i].id).collect())
        .collect()
}

fn generator_consistency() -> Outcome {
    let mut r = rng(1);
    let mut passed = 0;
    for case in 0..50 {
        let dim = r.gen_range(1..=3);
        let space = sample::space(&mut r, 8, dim, 4);
        let rho = hausdorff_relation(&space).map_err(e)?;
        let oracle = Partition::from_blocks(oracle_partition(&space)).map_err(e)?;
        ensure(rho == oracle, || format!("case {case}: relation differs from oracle"))?;
        let report = consistent_family(&space, &rho).map_err(e)?;
        ensure(report.all_consistent(), || format!("case {case}: inconsistent generator"))?;
        for block in rho.blocks() {
            for g in space.generators() {
                let v0 = g.eval(space.point(block[0]).map_err(e)?).map_err(e)?;
                for &id in block {
                    let v = g.eval(space.point(id).map_err(e)?).map_err(e)?;
                    ensure(v == v0, || format!("case {case}: {} varies on a class", g.name))?;
                }
            }
        }
        let k = space.generators().len();
        let slots: Vec<usize> = (0..k).collect();
        let mut gens = space.generators().to_vec();
        for s in 0..2 {
            let omega = sample::polynomial(&mut r, &slots, 3);
            let inner = space.generators().to_vec();
            let composed = omega.substitute(&|i| inner[i].expr.clone());
            gens.push(GeneratorFunction::new(format!("omega{s}"), composed));
        }
        let extended = space.with_generators(gens).map_err(e)?;
        ensure(hausdorff_relation(&extended).map_err(e)? == rho, || {
            format!("case {case}: superposition changed the relation")
        })?;
        passed += 1;
    }
    ensure(passed == 50, || format!("{passed}/50"))?;
    Ok(format!("{passed}/50 spaces"))
}

fn hausdorff_collapse() -> Outcome {
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = r.gen_range(1..=8);
        let s = line_space(&vec![1.0; n]);
        let g = build_groupoid(s.clone(), Partition::identity(s.ids())).map_err(e)?;
        let a = sample::element(&mut r, &g);
        let b = sample::element(&mut r, &g);
        let ab = a.convolve(&b).map_err(e)?;
        for (i, v) in ab.values().iter().enumerate() {
            worst = worst.max((v - a.values()[i] * b.values()[i]).norm());
        }
        let ints = |r: &mut ChaCha8Rng| -> Vec<(i64, i64)> {
            (0..g.arrow_count())
                .map(|_| (r.gen_range(-9..=9), r.gen_range(-9..=9)))
                .collect()
        };
        let xa = ExactElement::from_integers(&g, &ints(&mut r)).map_err(e)?;
        let xb = ExactElement::from_integers(&g, &ints(&mut r)).map_err(e)?;
        let xab = xa.convolve(&xb).map_err(e)?;
        for i in 0..g.arrow_count() {
            let want = xa.values()[i].clone() * xb.values()[i].clone();
            ensure(xab.values()[i] == want, || "exact product differs".into())?;
        }
    }
    ensure(worst <= 1e-14, || format!("float defect {worst:e}"))?;
    Ok(format!("exact defect 0, float defect {worst:e}"))
}

/// Direct sum over intermediate points, by arrow lookup.
fn oracle_convolve(a: &AlgebraElement, b: &AlgebraElement) -> HashMap<Arrow, C64> {
    let g = a.groupoid();
    let space = g.space();
    let mut out = HashMap::new();
    for arrow in g.arrows() {
        let mut acc = C64::zero();
        for z in g.partition().class_of(arrow.src).unwrap() {
            let w = space.weight(*z).unwrap();
            acc += a.value(Arrow::new(arrow.src, *z)).unwrap()
                * b.value(Arrow::new(*z, arrow.dst)).unwrap()
                * w;
        }
        out.insert(arrow, acc);
    }
    out
}

fn algebra_laws() -> Outcome {
    let mut r = rng(3);
    let (mut assoc, mut anti, mut kernel): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..100 {
        let count = r.gen_range(1..=10);
        let g = sample::groupoid(&mut r, count, 2, 6, false);
        let a = sample::element(&mut r, &g);
        let b = sample::element(&mut r, &g);
        let c = sample::element(&mut r, &g);
        let ab = a.convolve(&b).map_err(e)?;
        for (arrow, v) in oracle_convolve(&a, &b) {
            kernel = kernel.max((ab.value(arrow).unwrap() - v).norm() / v.norm().max(1.0));
        }
        let left = ab.convolve(&c).map_err(e)?;
        let right = a.convolve(&b.convolve(&c).map_err(e)?).map_err(e)?;
        let scale = left.max_abs().max(right.max_abs()).max(1.0);
        assoc = assoc.max(left.max_abs_diff(&right).map_err(e)? / scale);
        let lhs = ab.involution();
        let rhs = b.involution().convolve(&a.involution()).map_err(e)?;
        anti = anti.max(lhs.max_abs_diff(&rhs).map_err(e)? / lhs.max_abs().max(1.0));
    }
    ensure(assoc <= 1e-12 && anti <= 1e-12 && kernel <= 1e-12, || {
        format!("assoc {assoc:e}, anti {anti:e}, oracle {kernel:e}")
    })?;
    Ok(format!("100 cases: assoc {assoc:.1e}, anti-hom {anti:.1e}, vs oracle {kernel:.1e}"))
}

fn representation() -> Outcome {
    let mut r = rng(4);
    let (mut hom, mut star): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let count = r.gen_range(1..=8);
        let g = sample::groupoid(&mut r, count, 1, 5, false);
        let a = sample::element(&mut r, &g);
        let b = sample::element(&mut r, &g);
        hom = hom.max(homomorphism_defect(&a, &b).map_err(e)?.relative());
        star = star.max(star_defect(&a).map_err(e)?.relative());
        let id = represent(&AlgebraElement::unit(&g));
        ensure(id.distance(&RandomOperator::identity(&g)).map_err(e)? <= 1e-15, || {
            "unit does not map to the identity".into()
        })?;
        let ra = represent(&a);
        for p in g.space().points() {
            let class = g.partition().class_of(p.id).map_err(e)?;
            let fx = ra.fiber(p.id).map_err(e)?;
            let fy = ra.fiber(class[0]).map_err(e)?;
            ensure(fx == fy, || "fiber operator differs within a class".into())?;
        }
    }
    ensure(hom <= 1e-12 && star <= 1e-12, || format!("hom {hom:e}, star {star:e}"))?;
    Ok(format!("100 pairs: hom {hom:.1e}, star {star:.1e}, unit -> I"))
}

fn ess_sup() -> Outcome {
    let s = line_space(&[1.0, 1.0]);
    let g = build_groupoid(s.clone(), Partition::total(s.ids())).map_err(e)?;
    let ones = AlgebraElement::constant(&g, one());
    let report = random_operator_report(&represent(&ones));
    let oracle = DMatrix::<f64>::from_element(2, 2, 1.0)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    ensure(report.measurable && report.essentially_bounded, || "not certified".into())?;
    ensure((report.ess_sup - 2.0).abs() <= 1e-12 && (oracle - 2.0).abs() <= 1e-12, || {
        format!("ess sup {} vs eigensolve {oracle}", report.ess_sup)
    })?;
    Ok(format!("ess sup {} (eigensolve {oracle})", report.ess_sup))
}

fn random_hermitian_psd(r: &mut ChaCha8Rng, m: usize, rank: usize) -> DMatrix<C64> {
    let b = DMatrix::from_fn(m, rank, |_, _| C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)));
    &b * b.adjoint()
}

fn states() -> Outcome {
    let mut r = rng(6);
    let mut worst = f64::INFINITY;
    for case in 0..100 {
        let count = r.gen_range(1..=7);
        let unit_weights = case % 2 == 0;
        let g = sample::groupoid(&mut r, count, 1, 4, unit_weights);
        let uniform = make_state(DensityField::uniform(&g)).map_err(e)?;
        let rep = uniform.report();
        ensure(
            rep.trace_class && rep.integrable && rep.positive && rep.normalized && rep.faithful,
            || format!("case {case}: uniform density rejected"),
        )?;
        let id = expect(&uniform, &RandomOperator::identity(&g)).map_err(e)?;
        ensure((id - one()).norm() <= 1e-12, || format!("case {case}: expect(I) = {id}"))?;
        let op = sample::operator(&mut r, &g);
        let rr = op.weighted_adjoint().mul(&op).map_err(e)?;
        let mut states = vec![uniform];
        if unit_weights {
            // Arbitrary densities are only compatible with the plain adjoint.
            let mats: Vec<DMatrix<C64>> = g
                .space()
                .points()
                .iter()
                .map(|p| {
                    let m = g.partition().class_of(p.id).unwrap().len();
                    random_hermitian_psd(&mut r, m, m)
                })
                .collect();
            let total: f64 = mats.iter().map(|m| m.trace().re).sum();
            let mats = mats.into_iter().map(|m| m / C64::new(total, 0.0)).collect();
            states.push(make_state(DensityField::new(&g, mats).map_err(e)?).map_err(e)?);
        }
        for st in &states {
            let v = expect(st, &rr).map_err(e)?;
            worst = worst.min(v.re);
            ensure(v.re >= -1e-12 && v.im.abs() <= 1e-12, || format!("case {case}: Φ(R♯R) = {v}"))?;
        }
    }
    let s = line_space(&[1.0, 1.0]);
    let g = build_groupoid(s.clone(), Partition::total(s.ids())).map_err(e)?;
    let rank_one = random_hermitian_psd(&mut r, 2, 1);
    let t = rank_one.trace().re * 2.0;
    let mats = vec![rank_one.clone() / C64::new(t, 0.0), rank_one / C64::new(t, 0.0)];
    let st = make_state(DensityField::new(&g, mats).map_err(e)?).map_err(e)?;
    ensure(!st.is_faithful(), || "rank-deficient density reported faithful".into())?;
    Ok(format!("100 operators, min Φ(R♯R) {worst:.3e}; rank-deficient density flagged"))
}

/// Complex Gaussian elimination with partial pivoting; returns a null-space
/// basis.
fn oracle_null_space(mut a: Vec<Vec<C64>>, cols: usize) -> Vec<Vec<C64>> {
    let scale = a.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
    let tol = 1e-10 * scale;
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(p) = (row..a.len()).max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
        else {
            break;
        };
        if a[p][col].norm() <= tol {
            continue;
        }
        a.swap(row, p);
        let piv = a[row][col];
        for v in a[row].iter_mut() {
            *v /= piv;
        }
        for i in 0..a.len() {
            if i != row && !a[i][col].is_zero() {
                let f = a[i][col];
                for j in 0..cols {
                    let sub = f * a[row][j];
                    a[i][j] -= sub;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    (0..cols)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = vec![C64::zero(); cols];
            v[free] = one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[r][free];
            }
            v
        })
        .collect()
}

/// Commutant by entrywise equations `Σ_k G[i,k]X[k,j] − X[i,k]G[k,j] = 0`,
/// unknowns indexed row-major.
fn oracle_commutant(dim: usize, gens: &[DMatrix<C64>]) -> Vec<DMatrix<C64>> {
    let mut rows = Vec::new();
    for g in gens {
        for i in 0..dim {
            for j in 0..dim {
                let mut eq = vec![C64::zero(); dim * dim];
                for k in 0..dim {
                    eq[k * dim + j] += g[(i, k)];
                    eq[i * dim + k] -= g[(k, j)];
                }
                rows.push(eq);
            }
        }
    }
    oracle_null_space(rows, dim * dim)
        .into_iter()
        .map(|v| DMatrix::from_row_slice(dim, dim, &v))
        .collect()
}

fn arrow_generators(g: &Arc<Groupoid>) -> (usize, Vec<DMatrix<C64>>) {
    let ops: Vec<RandomOperator> = (0..g.arrow_count())
        .map(|k| {
            let mut v = vec![C64::zero(); g.arrow_count()];
            v[k] = one();
            represent(&AlgebraElement::from_values(g, v).unwrap())
        })
        .collect();
    direct_sums(&ops)
}

fn bicommutant() -> Outcome {
    let s = line_space(&[1.0, 1.0]);
    let total = build_groupoid(s.clone(), Partition::total(s.ids())).map_err(e)?;
    let (dim, gens) = arrow_generators(&total);
    let rep = double_commutant(dim, &gens).map_err(e)?;
    let oc = oracle_commutant(dim, &gens);
    let occ = oracle_commutant(dim, &oc);
    let got = (rep.commutant.len(), rep.bicommutant.len(), rep.span_dim);
    ensure(got == (4, 4, 4) && oc.len() == 4 && occ.len() == 4 && rep.equals_span, || {
        format!("total: {got:?}, oracle ({}, {})", oc.len(), occ.len())
    })?;

    let s3 = line_space(&[1.0, 2.0, 0.5]);
    let haus = build_groupoid(s3.clone(), hausdorff_relation(&s3).map_err(e)?).map_err(e)?;
    let (dim3, gens3) = arrow_generators(&haus);
    let rep3 = double_commutant(dim3, &gens3).map_err(e)?;
    let oc3 = oracle_commutant(dim3, &gens3);
    let occ3 = oracle_commutant(dim3, &oc3);
    let diagonal = rep3.bicommutant.elements().iter().all(|m| {
        (0..dim3).all(|i| (0..dim3).all(|j| i == j || m[(i, j)].norm() <= 1e-10))
    });
    ensure(
        rep3.bicommutant.len() == 3 && occ3.len() == 3 && diagonal && rep3.equals_span,
        || format!("hausdorff: dim {}, oracle {}", rep3.bicommutant.len(), occ3.len()),
    )?;
    Ok(format!(
        "total 2-point: M'={} M''={} span={}; Hausdorff 3-point: M''={} diagonal",
        rep.commutant.len(),
        rep.bicommutant.len(),
        rep.span_dim,
        rep3.bicommutant.len()
    ))
}

fn deformation() -> Outcome {
    let chain = deformation_chain(&grid()).map_err(e)?;
    ensure(chain.block_counts() == [1, 2, 4], || format!("blocks {:?}", chain.block_counts()))?;
    let report = chain.report();
    ensure(report.monotone && report.refining && report.last_diagonal, || {
        "chain invariants fail".into()
    })?;
    let levels = chain.levels();
    for w in levels.windows(2) {
        ensure(w[1].groupoid.is_subgroupoid_of(&w[0].groupoid), || "not nested".into())?;
    }
    let top = &levels[2].groupoid;
    let mut r = rng(8);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let a = sample::element(&mut r, top);
        let b = sample::element(&mut r, top);
        worst = worst.max(step_n_pointwise_check(&chain, &a, &b).map_err(e)?.pointwise_defect);
    }
    let ones = AlgebraElement::constant(&levels[0].groupoid, one());
    let defect = homomorphism_defect_chain(&ones, &ones, &chain, 0).map_err(e)?;
    ensure(worst <= 1e-12 && defect == 2.0, || {
        format!("pointwise {worst:e}, level-0 defect {defect}")
    })?;
    Ok(format!("blocks (1, 2, 4), step-n defect {worst:e}, restriction defect {defect}"))
}

fn calculus() -> Outcome {
    let mut r = rng(9);
    let (mut leib, mut comm): (f64, f64) = (0.0, 0.0);
    for case in 0..100 {
        let count = r.gen_range(1..=6);
        let dim = r.gen_range(1..=2);
        let g = if case % 2 == 0 {
            sample::total_groupoid(&mut r, count, dim)
        } else {
            sample::groupoid(&mut r, count, dim, 4, false)
        };
        let space = g.space().clone();
        let p = sample::derivation(&mut r, &space);
        let f = sample::base_function(&mut r, &space);
        let a = sample::polynomial_element(&mut r, &g);
        let b = sample::polynomial_element(&mut r, &g);
        leib = leib.max(leibniz_defect(&p, &a, &b).map_err(e)?.relative());
        comm = comm.max(commutator_defect(&p, &f, &a).map_err(e)?.relative());
    }
    let mut heis: f64 = 0.0;
    for _ in 0..20 {
        let g = sample::total_groupoid(&mut r, 4, 2);
        let a = sample::polynomial_element(&mut r, &g);
        for i in 0..2 {
            let pi = BaseFunction::from_expr(g.space(), &Expr::Var(i)).map_err(e)?;
            let di = Derivation::coordinate(g.space(), i).map_err(e)?;
            let c = commutator(&di, &pi, &a).map_err(e)?;
            for (x, y) in c.values().iter().zip(a.values()) {
                heis = heis.max((x - y).norm() / y.norm().max(1.0));
            }
        }
    }
    ensure(leib <= 1e-12 && comm <= 1e-12 && heis <= 1e-14, || {
        format!("leibniz {leib:e}, commutator {comm:e}, heisenberg {heis:e}")
    })?;
    Ok(format!("100 cases: leibniz {leib:.1e}, commutator {comm:.1e}; heisenberg {heis:.1e}"))
}

fn jets() -> Outcome {
    let mut r = rng(10);
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    let templates = ["sin(x1)*y1^2 + exp(y1 - x1)", "cos(x1*y1) + x1^3", "log(2 + x1^2)*y1"];
    for case in 0..50 {
        let g = sample::groupoid(&mut r, 5, 2, 3, false);
        let n = g.dimension();
        let expr = if case % 5 == 0 {
            let t = templates[case / 5 % templates.len()];
            Expr::parse(t, Symbols::Arrow { dim: n }).map_err(e)?
        } else {
            let slots: Vec<usize> = (0..2 * n).collect();
            sample::polynomial(&mut r, &slots, 4)
        };
        let a = AlgebraElement::from_expr(&g, &expr).map_err(e)?;
        let space = g.space();
        for (i, arrow) in g.arrows().enumerate() {
            let mut vars = space.point(arrow.src).map_err(e)?.coords.clone();
            vars.extend_from_slice(&space.point(arrow.dst).map_err(e)?.coords);
            let (ds, dd) = a.partials(i).ok_or("missing jets")?;
            for slot in 0..2 * n {
                let mut up = vars.clone();
                let mut down = vars.clone();
                up[slot] += h;
                down[slot] -= h;
                let fd = (expr.eval(&up) - expr.eval(&down)) / (2.0 * h);
                let jet = if slot < n { ds[slot] } else { dd[slot - n] };
                worst = worst.max((jet.re - fd).abs() / jet.re.abs().max(1.0));
            }
        }
    }
    ensure(worst <= 1e-6, || format!("worst {worst:e}"))?;
    Ok(format!("50 elements, worst relative gap {worst:.1e}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("generator consistency and superposition invariance", generator_consistency),
        ("collapse to pointwise product on the diagonal", hausdorff_collapse),
        ("associativity and involution anti-homomorphism", algebra_laws),
        ("representation is a *-homomorphism", representation),
        ("essential supremum of the all-ones element", ess_sup),
        ("state axioms and positivity", states),
        ("bicommutant dimensions", bicommutant),
        ("deformation chain", deformation),
        ("Leibniz rule, commutator identity, Heisenberg case", calculus),
        ("jet fidelity against central differences", jets),
    ];
    let start = Instant::now();
    let mut results = BTreeMap::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = check();
        let (status, detail) = match &outcome {
            Ok(d) => ("PASS", d.as_str()),
            Err(d) => ("FAIL", d.as_str()),
        };
        println!("[{status}] {:>2}. {name}: {detail}", i + 1);
        results.insert(i + 1, outcome.is_ok());
    }
    let passed = results.values().filter(|&&ok| ok).count();
    println!(
        "{passed}/{} criteria passed in {:.2}s",
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
