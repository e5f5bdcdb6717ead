//! Check sections shared by the individual subcommands and `verify all`.

use std::sync::Arc;

use hausdorff::calculus::{commutator, commutator_defect, leibniz_defect};
use hausdorff::deform::{homomorphism_defect_chain, step_n_pointwise_check};
use hausdorff::representation::{
    homomorphism_defect, random_operator_report, star_defect,
};
use hausdorff::vonneumann::{
    direct_sums, double_commutant, expect, make_state_with_tol, Matrix, State, COMMUTANT_GUARD, RANK_TOL,
};
use hausdorff::{
    consistent_family, deformation_chain, hausdorff_relation, quotient, represent, sample,
    AlgebraElement, BaseFunction, DensityField, Derivation, DiffSpace, Expr, Groupoid,
    RandomOperator, Result, C64,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::report::{RunReport, Table};

#[derive(Debug, Clone)]
pub struct Ctx {
    pub tol: f64,
    pub norm_tol: f64,
    pub seed: u64,
    pub cases: usize,
    /// Prepended to check and table names.
    pub prefix: String,
}

impl Ctx {
    pub fn name(&self, s: &str) -> String {
        if self.prefix.is_empty() {
            s.to_string()
        } else {
            format!("{}.{s}", self.prefix)
        }
    }

    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }
}

pub fn num(v: f64) -> String {
    v.to_string()
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(";")
}

/// The Hausdorff groupoid of a space.
pub fn hausdorff_groupoid(space: &Arc<DiffSpace>) -> Result<Arc<Groupoid>> {
    hausdorff::build_groupoid(space.clone(), hausdorff_relation(space)?)
}

pub fn space_section(r: &mut RunReport, space: &Arc<DiffSpace>, ctx: &Ctx) -> Result<()> {
    let rho = hausdorff_relation(space)?;
    let mut part = Table::new(ctx.name("partition"), &["point", "block"]);
    for (b, block) in rho.blocks().iter().enumerate() {
        for id in block {
            part.push(vec![id.to_string(), b.to_string()]);
        }
    }
    r.table(part);
    r.note(format!(
        "{}: {} points, {} classes, sizes {}",
        ctx.name("relation"),
        space.len(),
        rho.num_blocks(),
        join(&rho.block_sizes())
    ));

    let report = consistent_family(space, &rho)?;
    let mut cons = Table::new(ctx.name("consistency"), &["generator", "consistent", "witness"]);
    for e in &report.entries {
        let witness = e.witness.map_or(String::new(), |(x, y)| format!("{x};{y}"));
        cons.push(vec![e.name.clone(), e.consistent.to_string(), witness]);
    }
    r.table(cons);
    let inconsistent = report.entries.iter().filter(|e| !e.consistent).count();
    r.count(ctx.name("relation.generators_consistent"), inconsistent);

    let q = quotient(space, &rho)?;
    let mut qt = Table::new(ctx.name("quotient"), &["id", "weight", "coords"]);
    for p in q.space.points() {
        qt.push(vec![p.id.to_string(), num(p.weight), join(&p.coords)]);
    }
    r.table(qt);
    let table = space.generator_table()?;
    let mut pullback: f64 = 0.0;
    for (k, &orig) in q.kept.iter().enumerate() {
        for (a, b) in q.pullback(space, k)?.iter().zip(&table[orig]) {
            pullback = pullback.max((a - b).abs());
        }
    }
    r.check(ctx.name("quotient.pullback"), pullback, ctx.tol);
    r.check(
        ctx.name("quotient.measure"),
        (q.space.total_measure() - space.total_measure()).abs(),
        ctx.tol * space.total_measure().max(1.0),
    );
    Ok(())
}

pub fn groupoid_section(r: &mut RunReport, g: &Arc<Groupoid>, ctx: &Ctx) -> Result<()> {
    let mut arrows = Table::new(ctx.name("arrows"), &["index", "src", "dst", "block"]);
    let mut bad_inverse = 0;
    for (i, a) in g.arrows().enumerate() {
        let (block, _) = g.locate(a.src)?;
        arrows.push(vec![i.to_string(), a.src.to_string(), a.dst.to_string(), block.to_string()]);
        let loop_ = g.compose(a, g.inverse(a)?)?;
        if loop_ != hausdorff::Arrow::unit(a.src) || g.arrow_index(a) != Some(i) {
            bad_inverse += 1;
        }
    }
    r.table(arrows);
    let mut fibers = Table::new(ctx.name("fibers"), &["point", "outgoing", "incoming", "isotropy"]);
    for id in g.space().ids() {
        let f = g.fibers(id)?;
        fibers.push(vec![
            id.to_string(),
            f.outgoing.len().to_string(),
            f.incoming.len().to_string(),
            f.isotropy.len().to_string(),
        ]);
    }
    r.table(fibers);
    let expected: usize = g.blocks().iter().map(|b| b.size() * b.size()).sum();
    r.count(ctx.name("groupoid.arrow_count"), expected.abs_diff(g.arrow_count()));
    r.count(ctx.name("groupoid.inverse_and_units"), bad_inverse);
    r.note(format!(
        "{}: {} arrows, {} orbits, transitive={}, diagonal={}",
        ctx.name("groupoid"),
        g.arrow_count(),
        g.orbits().len(),
        g.is_transitive(),
        g.is_diagonal()
    ));
    Ok(())
}

fn rel(diff: f64, scale: f64) -> f64 {
    diff / scale.max(1.0)
}

pub fn algebra_laws_section(r: &mut RunReport, g: &Arc<Groupoid>, ctx: &Ctx) -> Result<()> {
    let mut rng = ctx.rng(1);
    let mut t = Table::new(ctx.name("laws"), &["case", "associativity", "anti_homomorphism", "involutive", "unit"]);
    let (mut assoc, mut anti, mut invol, mut unit): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    let u = AlgebraElement::unit(g);
    for case in 0..ctx.cases {
        let a = sample::element(&mut rng, g);
        let b = sample::element(&mut rng, g);
        let c = sample::element(&mut rng, g);
        let ab = a.convolve(&b)?;
        let left = ab.convolve(&c)?;
        let right = a.convolve(&b.convolve(&c)?)?;
        let d_assoc = rel(left.max_abs_diff(&right)?, left.max_abs().max(right.max_abs()));
        let lhs = ab.involution();
        let d_anti = rel(lhs.max_abs_diff(&b.involution().convolve(&a.involution())?)?, lhs.max_abs());
        let d_inv = a.involution().involution().max_abs_diff(&a)?;
        let d_unit = u.convolve(&a)?.max_abs_diff(&a)?.max(a.convolve(&u)?.max_abs_diff(&a)?);
        t.push(vec![case.to_string(), num(d_assoc), num(d_anti), num(d_inv), num(d_unit)]);
        assoc = assoc.max(d_assoc);
        anti = anti.max(d_anti);
        invol = invol.max(d_inv);
        unit = unit.max(d_unit);
    }
    r.table(t);
    r.check(ctx.name("algebra.associativity"), assoc, ctx.tol);
    r.check(ctx.name("algebra.involution_anti_homomorphism"), anti, ctx.tol);
    r.check(ctx.name("algebra.involution_involutive"), invol, ctx.tol);
    r.check(ctx.name("algebra.unit"), unit, ctx.tol);
    Ok(())
}

pub fn class_matrix_table(name: String, op: &RandomOperator) -> Table {
    let mut t = Table::new(name, &["block", "row", "col", "re", "im"]);
    for (b, m) in op.class_matrices().iter().enumerate() {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                t.push(vec![b.to_string(), i.to_string(), j.to_string(), num(v.re), num(v.im)]);
            }
        }
    }
    t
}

pub fn rep_section(r: &mut RunReport, g: &Arc<Groupoid>, ctx: &Ctx) -> Result<()> {
    let mut rng = ctx.rng(2);
    let mut t = Table::new(ctx.name("representation"), &["case", "homomorphism", "star"]);
    let (mut hom, mut star): (f64, f64) = (0.0, 0.0);
    for case in 0..ctx.cases {
        let a = sample::element(&mut rng, g);
        let b = sample::element(&mut rng, g);
        let h = homomorphism_defect(&a, &b)?.relative();
        let s = star_defect(&a)?.relative();
        t.push(vec![case.to_string(), num(h), num(s)]);
        hom = hom.max(h);
        star = star.max(s);
    }
    r.table(t);
    r.check(ctx.name("rep.homomorphism"), hom, ctx.tol);
    r.check(ctx.name("rep.star"), star, ctx.tol);
    let id = represent(&AlgebraElement::unit(g)).distance(&RandomOperator::identity(g))?;
    r.check(ctx.name("rep.unit_is_identity"), id, ctx.tol);
    let ones = represent(&AlgebraElement::constant(g, C64::new(1.0, 0.0)));
    let report = random_operator_report(&ones);
    r.count(
        ctx.name("rep.random_operator_conditions"),
        usize::from(!report.measurable) + usize::from(!report.essentially_bounded),
    );
    r.info(ctx.name("rep.ess_sup_all_ones"), report.ess_sup, report.measurability_note);
    Ok(())
}

/// Density field from CSV rows `point,row,col,re,im`.
pub fn density_from_rows(g: &Arc<Groupoid>, rows: &[(u64, usize, usize, f64, f64)]) -> Result<DensityField> {
    let space = g.space();
    let mut mats: Vec<_> = space
        .points()
        .iter()
        .map(|p| {
            let m = g.partition().class_of(p.id).map(|c| c.len()).unwrap_or(0);
            Matrix::zeros(m, m)
        })
        .collect();
    for &(pt, i, j, re, im) in rows {
        let k = space.index_of(hausdorff::PointId(pt))?;
        let m = &mut mats[k];
        if i >= m.nrows() || j >= m.ncols() {
            return Err(hausdorff::Error::FiberDimension {
                point: hausdorff::PointId(pt),
                expected: m.nrows(),
                found: i.max(j) + 1,
            });
        }
        m[(i, j)] = C64::new(re, im);
    }
    DensityField::new(g, mats)
}

pub fn state_section(r: &mut RunReport, g: &Arc<Groupoid>, field: DensityField, ctx: &Ctx) -> Result<Option<State>> {
    let state = match make_state_with_tol(field, ctx.norm_tol) {
        Ok(s) => s,
        Err(e) => {
            r.count(ctx.name("state.density_valid"), 1);
            r.note(format!("{}: {e}", ctx.name("state")));
            return Ok(None);
        }
    };
    let rep = state.report().clone();
    r.count(ctx.name("state.density_valid"), 0);
    r.check(ctx.name("state.normalized"), (rep.total_trace - 1.0).abs(), ctx.norm_tol);
    r.info(ctx.name("state.normal"), 0.0, "finite dimension: normal by construction");
    r.info(
        ctx.name("state.faithful"),
        rep.min_eigenvalue,
        if rep.faithful { "faithful" } else { "not faithful: some density has a zero eigenvalue" },
    );
    let one = expect(&state, &RandomOperator::identity(g))?;
    r.check(ctx.name("state.expect_identity"), (one - C64::new(1.0, 0.0)).norm(), ctx.norm_tol);
    let mut rng = ctx.rng(3);
    let mut worst = f64::INFINITY;
    let mut imag: f64 = 0.0;
    for _ in 0..ctx.cases {
        let op = sample::operator(&mut rng, g);
        let v = expect(&state, &op.weighted_adjoint().mul(&op)?)?;
        worst = worst.min(v.re);
        imag = imag.max(v.im.abs());
    }
    r.check(ctx.name("state.positivity"), (-worst).max(0.0), ctx.tol);
    r.info(ctx.name("state.min_expect_rr"), worst, "min over random R of Φ(R♯R)");
    r.check(ctx.name("state.expect_rr_real"), imag, ctx.tol);
    Ok(Some(state))
}

pub fn commutant_section(r: &mut RunReport, g: &Arc<Groupoid>, ctx: &Ctx) -> Result<()> {
    let ops: Vec<RandomOperator> = (0..g.arrow_count())
        .map(|k| {
            let mut v = vec![C64::default(); g.arrow_count()];
            v[k] = C64::new(1.0, 0.0);
            AlgebraElement::from_values(g, v).map(|a| represent(&a))
        })
        .collect::<Result<_>>()?;
    let (dim, gens) = direct_sums(&ops);
    if dim > COMMUTANT_GUARD {
        r.skip(
            ctx.name("vn.bicommutant"),
            format!("direct-sum dimension {dim} exceeds {COMMUTANT_GUARD}"),
        );
        return Ok(());
    }
    let rep = double_commutant(dim, &gens)?;
    let mut t = Table::new(ctx.name("commutant"), &["direct_sum_dim", "span_dim", "commutant_dim", "bicommutant_dim"]);
    t.push(vec![
        dim.to_string(),
        rep.span_dim.to_string(),
        rep.commutant.len().to_string(),
        rep.bicommutant.len().to_string(),
    ]);
    r.table(t);
    r.check(ctx.name("vn.generators_in_bicommutant"), rep.containment_residual, RANK_TOL);
    r.count(ctx.name("vn.bicommutant_equals_span"), rep.bicommutant.len().abs_diff(rep.span_dim));
    r.info(ctx.name("vn.commutant_dim"), rep.commutant.len() as f64, "");
    Ok(())
}

pub fn deform_section(r: &mut RunReport, space: &DiffSpace, ctx: &Ctx) -> Result<()> {
    let chain = deformation_chain(space)?;
    let mut rng = ctx.rng(4);
    let mut t = Table::new(
        ctx.name("deform"),
        &["k", "blocks", "block_sizes", "arrows", "defect_ones", "defect_random"],
    );
    for level in chain.levels() {
        let g = &level.groupoid;
        let (d1, d2) = if level.k < chain.top() {
            let ones = AlgebraElement::constant(g, C64::new(1.0, 0.0));
            let a = sample::element(&mut rng, g);
            let b = sample::element(&mut rng, g);
            (
                num(homomorphism_defect_chain(&ones, &ones, &chain, level.k)?),
                num(homomorphism_defect_chain(&a, &b, &chain, level.k)?),
            )
        } else {
            (String::new(), String::new())
        };
        t.push(vec![
            level.k.to_string(),
            level.partition.num_blocks().to_string(),
            join(&level.block_sizes()),
            g.arrow_count().to_string(),
            d1,
            d2,
        ]);
    }
    r.table(t);
    let rep = chain.report();
    let flag = |b: bool| usize::from(!b);
    r.count(ctx.name("deform.groupoids_nested"), flag(rep.monotone));
    r.count(ctx.name("deform.partitions_refine"), flag(rep.refining));
    r.count(ctx.name("deform.level0_total"), flag(rep.first_total));
    r.count(ctx.name("deform.top_diagonal"), flag(rep.last_diagonal));
    r.count(ctx.name("deform.block_counts_nondecreasing"), flag(rep.block_counts_nondecreasing));
    r.count(ctx.name("deform.classes_are_fibers"), flag(rep.classes_are_fibers));
    let top = &chain.level(chain.top())?.groupoid;
    let mut weighted: f64 = 0.0;
    let mut pointwise: f64 = 0.0;
    let mut unit_weights = true;
    for _ in 0..ctx.cases {
        let a = sample::element(&mut rng, top);
        let b = sample::element(&mut rng, top);
        let s = step_n_pointwise_check(&chain, &a, &b)?;
        weighted = weighted.max(s.weighted_defect);
        pointwise = pointwise.max(s.pointwise_defect);
        unit_weights = s.unit_weights;
    }
    r.check(ctx.name("deform.step_n_weighted_product"), weighted, ctx.tol);
    if unit_weights {
        r.check(ctx.name("deform.step_n_pointwise"), pointwise, ctx.tol);
    } else {
        r.info(ctx.name("deform.step_n_pointwise"), pointwise, "non-unit weights: product carries w_x");
    }
    r.note(format!("{}: block counts {}", ctx.name("deform"), join(chain.block_counts())));
    Ok(())
}

pub fn calculus_section(r: &mut RunReport, g: &Arc<Groupoid>, ctx: &Ctx) -> Result<()> {
    let space = g.space();
    if space.dimension() == 0 {
        r.skip(ctx.name("calculus"), "zero-dimensional space");
        return Ok(());
    }
    let mut rng = ctx.rng(5);
    let (mut leib, mut comm): (f64, f64) = (0.0, 0.0);
    for _ in 0..ctx.cases {
        let p = sample::derivation(&mut rng, space);
        let f = sample::base_function(&mut rng, space);
        let a = sample::polynomial_element(&mut rng, g);
        let b = sample::polynomial_element(&mut rng, g);
        leib = leib.max(leibniz_defect(&p, &a, &b)?.relative());
        comm = comm.max(commutator_defect(&p, &f, &a)?.relative());
    }
    r.check(ctx.name("calculus.leibniz"), leib, ctx.tol);
    r.check(ctx.name("calculus.commutator"), comm, ctx.tol);
    let a = sample::polynomial_element(&mut rng, g);
    r.check(ctx.name("calculus.heisenberg"), heisenberg_defect(g, &a)?, ctx.tol);
    Ok(())
}

/// `max_i max |[∂_i, Q(π_i)]a − a| / max(|a|, 1)`.
pub fn heisenberg_defect(g: &Arc<Groupoid>, a: &AlgebraElement) -> Result<f64> {
    let space = g.space();
    let mut worst: f64 = 0.0;
    for i in 0..space.dimension() {
        let pi = BaseFunction::from_expr(space, &Expr::Var(i))?;
        let p = Derivation::coordinate(space, i)?;
        let c = commutator(&p, &pi, a)?;
        worst = worst.max(rel(c.max_abs_diff(a)?, a.max_abs()));
    }
    Ok(worst)
}
