//! Finite differential spaces `(M, C)`: a point set with coordinates and
//! atomic measure weights, plus a generating family of real functions.
//!
//! The Hausdorff relation identifies points that no generator separates.
//! Its blocks are the fibers of `x ↦ (f_1(x), …, f_m(x))`, so it is an
//! equivalence relation by construction.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expr, Symbols};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointId(pub u64);

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub id: PointId,
    pub coords: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorFunction {
    pub name: String,
    pub expr: Expr,
}

impl GeneratorFunction {
    pub fn new(name: impl Into<String>, expr: Expr) -> Self {
        GeneratorFunction {
            name: name.into(),
            expr,
        }
    }

    pub fn parse(name: impl Into<String>, src: &str, dimension: usize) -> Result<Self> {
        Ok(Self::new(name, Expr::parse(src, Symbols::Point { dim: dimension })?))
    }

    /// The constant function `𝟙`.
    pub fn unit() -> Self {
        Self::new("1", Expr::Const(1.0))
    }

    /// Coordinate projection `π_i` (zero-based slot `i`).
    pub fn projection(i: usize) -> Self {
        Self::new(format!("pi{}", i + 1), Expr::Var(i))
    }

    pub fn eval(&self, point: &Point) -> Result<f64> {
        self.expr
            .eval_finite(&point.coords)
            .map_err(|source| Error::Evaluation {
                generator: self.name.clone(),
                point: point.id,
                source,
            })
    }
}

/// How generator values are compared when grouping points.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompareMode {
    /// Bitwise equality of evaluated values (with `-0.0 == 0.0`).
    #[default]
    Exact,
    /// Values are rounded to integer multiples of `eps` before grouping.
    Quantized { eps: f64 },
}

impl CompareMode {
    /// Grouping key of a value. Equal keys mean "not separated".
    pub fn key(self, v: f64) -> u64 {
        let v = match self {
            CompareMode::Exact => v,
            CompareMode::Quantized { eps } => (v / eps).round(),
        };
        // -0.0 and 0.0 are the same value
        if v == 0.0 {
            0.0f64.to_bits()
        } else {
            v.to_bits()
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub name: String,
    pub expr: String,
}

/// On-disk description of a space.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub dimension: usize,
    pub points: Vec<Point>,
    #[serde(default)]
    pub generators: Vec<GeneratorSpec>,
    #[serde(default)]
    pub compare_mode: CompareMode,
    #[serde(default)]
    pub constants_only: bool,
}

impl SpaceSpec {
    pub fn from_json(src: &str) -> Result<Self> {
        Ok(serde_json::from_str(src)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffSpace {
    dimension: usize,
    points: Vec<Point>,
    generators: Vec<GeneratorFunction>,
    compare_mode: CompareMode,
    constants_only: bool,
    index: HashMap<PointId, usize>,
}

/// Validates a parsed spec and builds the space.
pub fn build_space(spec: &SpaceSpec) -> Result<DiffSpace> {
    if spec.constants_only {
        if !spec.generators.is_empty() {
            return Err(Error::ConstantsOnlyWithGenerators);
        }
        return DiffSpace::constants_only(spec.dimension, spec.points.clone(), spec.compare_mode);
    }
    let generators = spec
        .generators
        .iter()
        .map(|g| GeneratorFunction::parse(g.name.clone(), &g.expr, spec.dimension))
        .collect::<Result<Vec<_>>>()?;
    DiffSpace::new(spec.dimension, spec.points.clone(), generators, spec.compare_mode)
}

impl DiffSpace {
    pub fn new(
        dimension: usize,
        points: Vec<Point>,
        generators: Vec<GeneratorFunction>,
        compare_mode: CompareMode,
    ) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::MissingGenerators);
        }
        Self::validated(dimension, points, generators, compare_mode, false)
    }

    /// The structure `C_0` generated by the constant function alone.
    pub fn constants_only(
        dimension: usize,
        points: Vec<Point>,
        compare_mode: CompareMode,
    ) -> Result<Self> {
        Self::validated(
            dimension,
            points,
            vec![GeneratorFunction::unit()],
            compare_mode,
            true,
        )
    }

    fn validated(
        dimension: usize,
        points: Vec<Point>,
        generators: Vec<GeneratorFunction>,
        compare_mode: CompareMode,
        constants_only: bool,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySpace);
        }
        if let CompareMode::Quantized { eps } = compare_mode {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::InvalidEps(eps));
            }
        }
        let mut index = HashMap::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            if index.insert(p.id, i).is_some() {
                return Err(Error::DuplicateId(p.id));
            }
            if p.coords.len() != dimension {
                return Err(Error::CoordsLength {
                    id: p.id,
                    expected: dimension,
                    found: p.coords.len(),
                });
            }
            if !(p.weight > 0.0 && p.weight.is_finite()) {
                return Err(Error::NonPositiveWeight {
                    id: p.id,
                    weight: p.weight,
                });
            }
        }
        for g in &generators {
            if let Some(slot) = g.expr.max_slot() {
                if slot >= dimension {
                    return Err(Error::DimensionMismatch {
                        expected: dimension,
                        found: slot + 1,
                    });
                }
            }
        }
        Ok(DiffSpace {
            dimension,
            points,
            generators,
            compare_mode,
            constants_only,
            index,
        })
    }

    /// Same points and comparison policy, different generating family.
    pub fn with_generators(&self, generators: Vec<GeneratorFunction>) -> Result<Self> {
        Self::new(self.dimension, self.points.clone(), generators, self.compare_mode)
    }

    pub fn with_constants_only(&self) -> Self {
        DiffSpace {
            generators: vec![GeneratorFunction::unit()],
            constants_only: true,
            ..self.clone()
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn generators(&self) -> &[GeneratorFunction] {
        &self.generators
    }

    pub fn compare_mode(&self) -> CompareMode {
        self.compare_mode
    }

    pub fn is_constants_only(&self) -> bool {
        self.constants_only
    }

    pub fn index_of(&self, id: PointId) -> Result<usize> {
        self.index.get(&id).copied().ok_or(Error::UnknownPoint(id))
    }

    pub fn point(&self, id: PointId) -> Result<&Point> {
        Ok(&self.points[self.index_of(id)?])
    }

    pub fn ids(&self) -> impl Iterator<Item = PointId> + '_ {
        self.points.iter().map(|p| p.id)
    }

    pub fn weight(&self, id: PointId) -> Result<f64> {
        Ok(self.point(id)?.weight)
    }

    pub fn total_measure(&self) -> f64 {
        self.points.iter().map(|p| p.weight).sum()
    }

    pub fn has_unit_weights(&self) -> bool {
        self.points.iter().all(|p| p.weight == 1.0)
    }

    /// Values of every generator at every point, `[generator][point]`.
    pub fn generator_table(&self) -> Result<Vec<Vec<f64>>> {
        self.generators
            .iter()
            .map(|g| self.points.iter().map(|p| g.eval(p)).collect())
            .collect()
    }

    fn check_partition(&self, rho: &Partition) -> Result<()> {
        let ours: BTreeSet<PointId> = self.ids().collect();
        let theirs: BTreeSet<PointId> = rho.ids().collect();
        if ours != theirs {
            let missing = ours.difference(&theirs).next();
            let extra = theirs.difference(&ours).next();
            return Err(Error::PartitionMismatch(match (missing, extra) {
                (Some(id), _) => format!("point {id} is not covered"),
                (_, Some(id)) => format!("point {id} is not in the space"),
                _ => unreachable!(),
            }));
        }
        Ok(())
    }
}

/// An equivalence relation on point ids, stored as disjoint covering blocks.
///
/// Blocks are kept in canonical form: members ascending, blocks ordered by
/// their smallest member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Vec<PointId>>,
    block_of: BTreeMap<PointId, usize>,
}

impl Partition {
    pub fn from_blocks(blocks: Vec<Vec<PointId>>) -> Result<Self> {
        let mut blocks: Vec<Vec<PointId>> = blocks
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        if blocks.iter().any(|b| b.is_empty()) {
            return Err(Error::InvalidPartition("empty block".into()));
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        let mut block_of = BTreeMap::new();
        for (i, b) in blocks.iter().enumerate() {
            for &id in b {
                if block_of.insert(id, i).is_some() {
                    return Err(Error::InvalidPartition(format!(
                        "point {id} appears in more than one block"
                    )));
                }
            }
        }
        Ok(Partition { blocks, block_of })
    }

    /// Groups ids by equal keys.
    pub fn from_keys<K: Ord>(items: impl IntoIterator<Item = (PointId, K)>) -> Result<Self> {
        let mut groups: BTreeMap<K, Vec<PointId>> = BTreeMap::new();
        for (id, key) in items {
            groups.entry(key).or_default().push(id);
        }
        Self::from_blocks(groups.into_values().collect())
    }

    pub fn identity(ids: impl IntoIterator<Item = PointId>) -> Self {
        Self::from_blocks(ids.into_iter().map(|id| vec![id]).collect())
            .expect("distinct ids form a partition")
    }

    pub fn total(ids: impl IntoIterator<Item = PointId>) -> Self {
        Self::from_blocks(vec![ids.into_iter().collect()]).expect("one block is a partition")
    }

    pub fn blocks(&self) -> &[Vec<PointId>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_of(&self, id: PointId) -> Result<usize> {
        self.block_of.get(&id).copied().ok_or(Error::UnknownPoint(id))
    }

    pub fn class_of(&self, id: PointId) -> Result<&[PointId]> {
        Ok(&self.blocks[self.block_of(id)?])
    }

    pub fn ids(&self) -> impl Iterator<Item = PointId> + '_ {
        self.block_of.keys().copied()
    }

    /// Membership of `(x, y)` in the relation.
    pub fn related(&self, x: PointId, y: PointId) -> bool {
        match (self.block_of.get(&x), self.block_of.get(&y)) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        }
    }

    /// The relation as a set of ordered pairs.
    pub fn pairs(&self) -> BTreeSet<(PointId, PointId)> {
        self.blocks
            .iter()
            .flat_map(|b| b.iter().flat_map(move |&x| b.iter().map(move |&y| (x, y))))
            .collect()
    }

    /// True when every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.blocks.iter().all(|b| {
            let target = coarser.block_of.get(&b[0]);
            target.is_some() && b.iter().all(|id| coarser.block_of.get(id) == target)
        })
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }
}

/// Computes `ρ_H`: `x ~ y` iff every generator takes the same value at both.
pub fn hausdorff_relation(space: &DiffSpace) -> Result<Partition> {
    let table = space.generator_table()?;
    let mode = space.compare_mode();
    Partition::from_keys(space.points().iter().enumerate().map(|(i, p)| {
        let key: Vec<u64> = table.iter().map(|row| mode.key(row[i])).collect();
        (p.id, key)
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConsistency {
    pub name: String,
    pub consistent: bool,
    /// Two related points the generator separates, when inconsistent.
    pub witness: Option<(PointId, PointId)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub entries: Vec<GeneratorConsistency>,
}

impl ConsistencyReport {
    pub fn all_consistent(&self) -> bool {
        self.entries.iter().all(|e| e.consistent)
    }

    pub fn consistent_indices(&self) -> Vec<usize> {
        (0..self.entries.len())
            .filter(|&i| self.entries[i].consistent)
            .collect()
    }
}

/// Reports, per generator, whether it is constant on every block of `rho`.
pub fn consistent_family(space: &DiffSpace, rho: &Partition) -> Result<ConsistencyReport> {
    space.check_partition(rho)?;
    let table = space.generator_table()?;
    let mode = space.compare_mode();
    let entries = space
        .generators()
        .iter()
        .zip(&table)
        .map(|(g, values)| {
            let witness = rho.blocks().iter().find_map(|block| {
                let first = block[0];
                let key = mode.key(values[space.index_of(first).ok()?]);
                block
                    .iter()
                    .find(|&&id| {
                        space
                            .index_of(id)
                            .map(|i| mode.key(values[i]) != key)
                            .unwrap_or(false)
                    })
                    .map(|&other| (first, other))
            });
            GeneratorConsistency {
                name: g.name.clone(),
                consistent: witness.is_none(),
                witness,
            }
        })
        .collect();
    Ok(ConsistencyReport { entries })
}

/// The quotient `M/ρ` with its pushed-down structure `C/ρ`.
#[derive(Debug, Clone)]
pub struct Quotient {
    pub space: DiffSpace,
    /// Canonical projection `π_ρ`, original id to quotient id.
    pub projection: BTreeMap<PointId, PointId>,
    /// Indices (into the original generator list) of the pushed-down generators.
    pub kept: Vec<usize>,
    /// Names of the generators that were not `ρ`-consistent.
    pub dropped: Vec<String>,
}

impl Quotient {
    /// `Φ(f̄) = f̄ ∘ π_ρ` for the `k`-th quotient generator, tabulated on the
    /// original points (in the original point order).
    pub fn pullback(&self, original: &DiffSpace, k: usize) -> Result<Vec<f64>> {
        let g = &self.space.generators()[k];
        original
            .ids()
            .map(|id| {
                let q = self.projection.get(&id).ok_or(Error::UnknownPoint(id))?;
                g.eval(self.space.point(*q)?)
            })
            .collect()
    }
}

/// One point per block; coordinates are the shared values of the consistent
/// generators, weights are block measures. Inconsistent generators are
/// dropped and listed.
pub fn quotient(space: &DiffSpace, rho: &Partition) -> Result<Quotient> {
    let report = consistent_family(space, rho)?;
    let kept = report.consistent_indices();
    let dropped = report
        .entries
        .iter()
        .filter(|e| !e.consistent)
        .map(|e| e.name.clone())
        .collect();
    let table = space.generator_table()?;

    let mut projection = BTreeMap::new();
    let mut points = Vec::with_capacity(rho.num_blocks());
    for (b, block) in rho.blocks().iter().enumerate() {
        let qid = PointId(b as u64);
        let rep = space.index_of(block[0])?;
        let coords = kept.iter().map(|&g| table[g][rep]).collect();
        let mut weight = 0.0;
        for &id in block {
            weight += space.weight(id)?;
            projection.insert(id, qid);
        }
        points.push(Point {
            id: qid,
            coords,
            weight,
        });
    }

    let generators: Vec<GeneratorFunction> = kept
        .iter()
        .enumerate()
        .map(|(slot, &g)| GeneratorFunction::new(space.generators()[g].name.clone(), Expr::Var(slot)))
        .collect();
    let qspace = if generators.is_empty() {
        DiffSpace::constants_only(0, points, space.compare_mode())?
    } else {
        DiffSpace::new(kept.len(), points, generators, space.compare_mode())?
    };
    Ok(Quotient {
        space: qspace,
        projection,
        kept,
        dropped,
    })
}
