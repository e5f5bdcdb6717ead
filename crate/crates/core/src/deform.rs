//! The deformation chain from the total-type structure to the diagonal.
//!
//! Level `k` is the space equipped with the coordinate projections
//! `π_1..π_k` (level 0 with the constants alone). Successive relations refine
//! each other, so the groupoids shrink `Γ_0 ⊇ Γ_1 ⊇ … ⊇ Γ_n`, and functions
//! move down the chain by restriction along the inclusions.
//!
//! Restriction is not multiplicative for the finite convolution: the
//! summation range shrinks from `[x]_k` to `[x]_{k+1}`. The gap is measured
//! by [`homomorphism_defect_chain`].

use std::sync::Arc;

use crate::algebra::{AlgebraElement, C64};
use crate::diffspace::{hausdorff_relation, DiffSpace, GeneratorFunction, Partition};
use crate::error::{Error, Result};
use crate::groupoid::{build_groupoid, Groupoid};

#[derive(Debug, Clone)]
pub struct Level {
    pub k: usize,
    pub space: Arc<DiffSpace>,
    pub partition: Partition,
    pub groupoid: Arc<Groupoid>,
}

impl Level {
    pub fn block_sizes(&self) -> Vec<usize> {
        self.partition.block_sizes()
    }

    /// Measure of each class: the sum of its member weights.
    pub fn class_measures(&self) -> Vec<f64> {
        self.groupoid
            .blocks()
            .iter()
            .map(|b| b.space_index.iter().map(|&i| self.space.points()[i].weight).sum())
            .collect()
    }
}

/// Structural checks on the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainReport {
    /// Every arrow of `Γ_{k+1}` is an arrow of `Γ_k`.
    pub monotone: bool,
    /// `ρ_{k+1}` refines `ρ_k`.
    pub refining: bool,
    pub first_total: bool,
    pub last_diagonal: bool,
    pub block_counts: Vec<usize>,
    pub block_counts_nondecreasing: bool,
    pub class_sizes: Vec<Vec<usize>>,
    /// Every class is exactly a fiber of `(π_1..π_k)`: two points share a
    /// class iff their first `k` coordinates agree.
    pub classes_are_fibers: bool,
}

impl ChainReport {
    pub fn passed(&self) -> bool {
        self.monotone
            && self.refining
            && self.first_total
            && self.last_diagonal
            && self.block_counts_nondecreasing
            && self.classes_are_fibers
    }
}

#[derive(Debug, Clone)]
pub struct DeformationChain {
    levels: Vec<Level>,
    report: ChainReport,
}

/// Builds levels `0..=n` from the coordinates, ignoring the space's own
/// generators.
pub fn deformation_chain(space: &DiffSpace) -> Result<DeformationChain> {
    let n = space.dimension();
    let mut levels = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let s = if k == 0 {
            space.with_constants_only()
        } else {
            space.with_generators((0..k).map(GeneratorFunction::projection).collect())?
        };
        let s = Arc::new(s);
        let partition = hausdorff_relation(&s)?;
        let groupoid = build_groupoid(s.clone(), partition.clone())?;
        levels.push(Level {
            k,
            space: s,
            partition,
            groupoid,
        });
    }
    let report = check_chain(&levels);
    Ok(DeformationChain { levels, report })
}

fn check_chain(levels: &[Level]) -> ChainReport {
    let pairs = levels.windows(2);
    let monotone = pairs
        .clone()
        .all(|w| w[1].groupoid.arrows().all(|a| w[0].groupoid.contains(a)));
    let refining = pairs.clone().all(|w| w[1].partition.refines(&w[0].partition));
    let block_counts: Vec<usize> = levels.iter().map(|l| l.partition.num_blocks()).collect();
    let classes_are_fibers = levels.iter().all(|l| {
        let pts = l.space.points();
        pts.iter().all(|x| {
            pts.iter().all(|y| {
                let same = x.coords[..l.k] == y.coords[..l.k];
                same == l.partition.related(x.id, y.id)
            })
        })
    });
    ChainReport {
        monotone,
        refining,
        first_total: levels.first().is_some_and(|l| l.partition.num_blocks() == 1),
        last_diagonal: levels.last().is_some_and(|l| l.groupoid.is_diagonal()),
        block_counts_nondecreasing: block_counts.windows(2).all(|w| w[0] <= w[1]),
        block_counts,
        class_sizes: levels.iter().map(Level::block_sizes).collect(),
        classes_are_fibers,
    }
}

impl DeformationChain {
    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level(&self, k: usize) -> Result<&Level> {
        self.levels.get(k).ok_or(Error::LevelOutOfRange {
            level: k,
            levels: self.levels.len(),
        })
    }

    /// Index of the top (diagonal) level.
    pub fn top(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn report(&self) -> &ChainReport {
        &self.report
    }

    pub fn block_counts(&self) -> &[usize] {
        &self.report.block_counts
    }
}

fn check_level(a: &AlgebraElement, chain: &DeformationChain, k: usize) -> Result<()> {
    let level = chain.level(k)?;
    if !a.groupoid().same_as(&level.groupoid) {
        return Err(Error::GroupoidMismatch);
    }
    Ok(())
}

/// Restriction `ι_k*` of an element of `𝒜_k` to `Γ_{k+1}`.
pub fn restrict(a: &AlgebraElement, chain: &DeformationChain, k: usize) -> Result<AlgebraElement> {
    check_level(a, chain, k)?;
    let target = &chain.level(k + 1)?.groupoid;
    let src = a.groupoid();
    let n = target.dimension();
    let idx: Vec<usize> = target
        .arrows()
        .map(|arrow| src.arrow_index(arrow).expect("groupoids are nested"))
        .collect();
    let values = idx.iter().map(|&i| a.values()[i]).collect();
    let out = match a.partials(0).filter(|_| n > 0) {
        Some(_) => {
            let mut d_src = Vec::with_capacity(idx.len() * n);
            let mut d_dst = Vec::with_capacity(idx.len() * n);
            for &i in &idx {
                let (s, d) = a.partials(i).expect("jets present");
                d_src.extend_from_slice(s);
                d_dst.extend_from_slice(d);
            }
            AlgebraElement::from_jets(target, values, d_src, d_dst)?
        }
        None => AlgebraElement::from_values(target, values)?,
    };
    Ok(out.with_symbolic(a.symbolic().cloned()))
}

/// Restriction from level `from` down to level `to ≥ from`.
pub fn restrict_to(
    a: &AlgebraElement,
    chain: &DeformationChain,
    from: usize,
    to: usize,
) -> Result<AlgebraElement> {
    chain.level(to)?;
    if to < from {
        return Err(Error::LevelOutOfRange {
            level: to,
            levels: chain.levels.len(),
        });
    }
    let mut cur = a.clone();
    check_level(&cur, chain, from)?;
    for k in from..to {
        cur = restrict(&cur, chain, k)?;
    }
    Ok(cur)
}

/// `max |ι_k*(a *_k b) − ι_k*(a) *_{k+1} ι_k*(b)|`.
pub fn homomorphism_defect_chain(
    a: &AlgebraElement,
    b: &AlgebraElement,
    chain: &DeformationChain,
    k: usize,
) -> Result<f64> {
    check_level(b, chain, k)?;
    let lhs = restrict(&a.convolve(b)?, chain, k)?;
    let rhs = restrict(a, chain, k)?.convolve(&restrict(b, chain, k)?)?;
    lhs.max_abs_diff(&rhs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepNReport {
    /// `max_x |(a *_n b)(x,x) − a(x,x) b(x,x) w_x|`.
    pub weighted_defect: f64,
    /// `max_x |(a *_n b)(x,x) − a(x,x) b(x,x)|`; vanishes for unit weights.
    pub pointwise_defect: f64,
    pub unit_weights: bool,
    /// Per point: `(w_x, (a *_n b)(x,x), a(x,x) b(x,x))`.
    pub rows: Vec<(f64, C64, C64)>,
}

/// On the diagonal level the convolution is a single-term sum.
pub fn step_n_pointwise_check(
    chain: &DeformationChain,
    a: &AlgebraElement,
    b: &AlgebraElement,
) -> Result<StepNReport> {
    let n = chain.top();
    check_level(a, chain, n)?;
    let level = chain.level(n)?;
    let prod = a.convolve(b)?;
    let mut rows = Vec::with_capacity(level.space.len());
    let mut weighted_defect: f64 = 0.0;
    let mut pointwise_defect: f64 = 0.0;
    for arrow in level.groupoid.arrows() {
        let w = level.space.weight(arrow.src)?;
        let c = prod.value(arrow).ok_or(Error::GroupoidMismatch)?;
        let ab = a.value(arrow).ok_or(Error::GroupoidMismatch)?
            * b.value(arrow).ok_or(Error::GroupoidMismatch)?;
        weighted_defect = weighted_defect.max((c - ab * w).norm());
        pointwise_defect = pointwise_defect.max((c - ab).norm());
        rows.push((w, c, ab));
    }
    Ok(StepNReport {
        weighted_defect,
        pointwise_defect,
        unit_weights: level.space.has_unit_weights(),
        rows,
    })
}
