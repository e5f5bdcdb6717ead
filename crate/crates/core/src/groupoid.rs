//! The pair groupoid of an equivalence relation: arrows are ordered pairs
//! inside one block, `(x,y)∘(y,z) = (x,z)`, `(x,y)⁻¹ = (y,x)`.
//!
//! Arrows are never stored as a flat set. Block `b` with members
//! `z_0..z_{m-1}` owns the arrow indices `offset_b + i*m + j` for `(z_i, z_j)`.

use std::fmt;
use std::sync::Arc;

use crate::diffspace::{DiffSpace, Partition, PointId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Arrow {
    pub src: PointId,
    pub dst: PointId,
}

impl Arrow {
    pub fn new(src: PointId, dst: PointId) -> Self {
        Arrow { src, dst }
    }

    pub fn unit(x: PointId) -> Self {
        Arrow { src: x, dst: x }
    }

    pub fn is_unit(&self) -> bool {
        self.src == self.dst
    }
}

impl fmt::Display for Arrow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.src, self.dst)
    }
}

pub fn inverse(a: Arrow) -> Arrow {
    Arrow {
        src: a.dst,
        dst: a.src,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub members: Vec<PointId>,
    /// Positions of the members in the space's point list.
    pub space_index: Vec<usize>,
    pub offset: usize,
}

impl Block {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

#[derive(Debug, Clone)]
pub struct Groupoid {
    space: Arc<DiffSpace>,
    partition: Partition,
    blocks: Vec<Block>,
    /// `(block, position in block)` per space point index.
    locate: Vec<(usize, usize)>,
    arrow_count: usize,
}

impl PartialEq for Groupoid {
    fn eq(&self, other: &Self) -> bool {
        self.partition == other.partition && self.space == other.space
    }
}

/// `Γ_x` (arrows leaving `x`), `Γ^x` (arrows arriving at `x`) and the isotropy
/// group `Γ_x ∩ Γ^x`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberReport {
    pub point: PointId,
    pub outgoing: Vec<Arrow>,
    pub incoming: Vec<Arrow>,
    pub isotropy: Vec<Arrow>,
}

pub fn build_groupoid(space: Arc<DiffSpace>, rho: Partition) -> Result<Arc<Groupoid>> {
    let mut locate = vec![(usize::MAX, 0); space.len()];
    let mut blocks = Vec::with_capacity(rho.num_blocks());
    let mut offset = 0;
    for (b, members) in rho.blocks().iter().enumerate() {
        let mut space_index = Vec::with_capacity(members.len());
        for (pos, &id) in members.iter().enumerate() {
            let i = space.index_of(id).map_err(|_| {
                Error::PartitionMismatch(format!("point {id} is not in the space"))
            })?;
            locate[i] = (b, pos);
            space_index.push(i);
        }
        blocks.push(Block {
            members: members.clone(),
            space_index,
            offset,
        });
        offset += members.len() * members.len();
    }
    if let Some(i) = locate.iter().position(|&(b, _)| b == usize::MAX) {
        return Err(Error::PartitionMismatch(format!(
            "point {} is not covered",
            space.points()[i].id
        )));
    }
    Ok(Arc::new(Groupoid {
        space,
        partition: rho,
        blocks,
        locate,
        arrow_count: offset,
    }))
}

impl Groupoid {
    pub fn space(&self) -> &Arc<DiffSpace> {
        &self.space
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// The orbits of the groupoid, i.e. the blocks of the relation.
    pub fn orbits(&self) -> &[Vec<PointId>] {
        self.partition.blocks()
    }

    pub fn arrow_count(&self) -> usize {
        self.arrow_count
    }

    pub fn dimension(&self) -> usize {
        self.space.dimension()
    }

    /// `(block, position)` of a base point.
    pub fn locate(&self, x: PointId) -> Result<(usize, usize)> {
        Ok(self.locate[self.space.index_of(x)?])
    }

    pub fn same_as(self: &Arc<Self>, other: &Arc<Self>) -> bool {
        Arc::ptr_eq(self, other) || **self == **other
    }

    pub fn arrow_index(&self, a: Arrow) -> Option<usize> {
        let (bs, i) = self.locate(a.src).ok()?;
        let (bd, j) = self.locate(a.dst).ok()?;
        if bs != bd {
            return None;
        }
        let block = &self.blocks[bs];
        Some(block.offset + i * block.size() + j)
    }

    pub fn contains(&self, a: Arrow) -> bool {
        self.arrow_index(a).is_some()
    }

    pub fn arrow_at(&self, index: usize) -> Arrow {
        assert!(index < self.arrow_count, "arrow index out of range");
        let b = self.blocks.partition_point(|blk| blk.offset <= index) - 1;
        let block = &self.blocks[b];
        let local = index - block.offset;
        let m = block.size();
        Arrow::new(block.members[local / m], block.members[local % m])
    }

    /// All arrows in storage order.
    pub fn arrows(&self) -> impl Iterator<Item = Arrow> + '_ {
        self.blocks.iter().flat_map(|b| {
            b.members
                .iter()
                .flat_map(move |&x| b.members.iter().map(move |&y| Arrow::new(x, y)))
        })
    }

    pub fn units(&self) -> impl Iterator<Item = Arrow> + '_ {
        self.space.ids().map(Arrow::unit)
    }

    pub fn compose(&self, a1: Arrow, a2: Arrow) -> Result<Arrow> {
        for a in [a1, a2] {
            if !self.contains(a) {
                return Err(Error::NotAnArrow(a));
            }
        }
        if a1.dst != a2.src {
            return Err(Error::NonComposable {
                first: a1,
                second: a2,
            });
        }
        Ok(Arrow::new(a1.src, a2.dst))
    }

    pub fn inverse(&self, a: Arrow) -> Result<Arrow> {
        if !self.contains(a) {
            return Err(Error::NotAnArrow(a));
        }
        Ok(inverse(a))
    }

    pub fn fibers(&self, x: PointId) -> Result<FiberReport> {
        let (b, _) = self.locate(x)?;
        let members = &self.blocks[b].members;
        let outgoing: Vec<Arrow> = members.iter().map(|&y| Arrow::new(x, y)).collect();
        let incoming: Vec<Arrow> = members.iter().map(|&y| Arrow::new(y, x)).collect();
        let isotropy = outgoing
            .iter()
            .filter(|a| incoming.contains(a))
            .copied()
            .collect();
        Ok(FiberReport {
            point: x,
            outgoing,
            incoming,
            isotropy,
        })
    }

    pub fn is_transitive(&self) -> bool {
        self.blocks.len() == 1
    }

    /// `Γ = Δ`: every block is a singleton.
    pub fn is_diagonal(&self) -> bool {
        self.blocks.iter().all(|b| b.size() == 1)
    }

    /// Arrow-set inclusion `self ⊆ other` over the same base points.
    pub fn is_subgroupoid_of(&self, other: &Groupoid) -> bool {
        self.partition.refines(&other.partition)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffspace::{CompareMode, GeneratorFunction, Point};

    fn line(n: u64) -> Arc<DiffSpace> {
        let points = (0..n)
            .map(|i| Point {
                id: PointId(i),
                coords: vec![i as f64],
                weight: 1.0,
            })
            .collect();
        Arc::new(
            DiffSpace::new(
                1,
                points,
                vec![GeneratorFunction::projection(0)],
                CompareMode::Exact,
            )
            .unwrap(),
        )
    }

    fn p(i: u64) -> PointId {
        PointId(i)
    }

    fn blocks(spec: &[&[u64]]) -> Partition {
        Partition::from_blocks(spec.iter().map(|b| b.iter().map(|&i| p(i)).collect()).collect())
            .unwrap()
    }

    #[test]
    fn arrow_counts() {
        let s = line(2);
        assert_eq!(build_groupoid(s.clone(), Partition::total(s.ids())).unwrap().arrow_count(), 4);
        let s = line(4);
        let g = build_groupoid(s.clone(), Partition::identity(s.ids())).unwrap();
        assert_eq!(g.arrow_count(), 4);
        assert!(g.arrows().all(|a| a.is_unit()));
        assert!(g.is_diagonal());
        let g = build_groupoid(s, blocks(&[&[0, 1], &[2, 3]])).unwrap();
        assert_eq!(g.arrow_count(), 8);
        assert!(!g.is_transitive());
    }

    #[test]
    fn compose_and_inverse() {
        let s = line(3);
        let g = build_groupoid(s.clone(), Partition::total(s.ids())).unwrap();
        let a = |x, y| Arrow::new(p(x), p(y));
        assert_eq!(g.compose(a(0, 1), a(1, 0)).unwrap(), a(0, 0));
        assert_eq!(g.compose(a(0, 1), a(1, 2)).unwrap(), a(0, 2));
        assert!(matches!(
            g.compose(a(0, 1), a(2, 0)),
            Err(Error::NonComposable { .. })
        ));
        assert_eq!(inverse(a(0, 1)), a(1, 0));
        assert_eq!(inverse(a(2, 2)), a(2, 2));
        assert_eq!(inverse(inverse(a(0, 1))), a(0, 1));

        let h = build_groupoid(s.clone(), Partition::identity(s.ids())).unwrap();
        assert!(matches!(h.compose(a(0, 1), a(1, 1)), Err(Error::NotAnArrow(_))));
    }

    #[test]
    fn fibers_and_isotropy() {
        let s = line(2);
        let g = build_groupoid(s.clone(), Partition::total(s.ids())).unwrap();
        let f = g.fibers(p(0)).unwrap();
        assert_eq!(f.outgoing, vec![Arrow::new(p(0), p(0)), Arrow::new(p(0), p(1))]);
        assert_eq!(f.isotropy, vec![Arrow::unit(p(0))]);
        assert!(g.fibers(p(9)).is_err());

        let g = build_groupoid(s.clone(), Partition::identity(s.ids())).unwrap();
        assert_eq!(g.fibers(p(1)).unwrap().outgoing, vec![Arrow::unit(p(1))]);
    }

    #[test]
    fn arrow_indexing_is_a_bijection() {
        let s = line(6);
        let g = build_groupoid(s, blocks(&[&[0, 3, 4], &[1], &[2, 5]])).unwrap();
        assert_eq!(g.arrow_count(), 9 + 1 + 4);
        for (i, a) in g.arrows().enumerate() {
            assert_eq!(g.arrow_index(a), Some(i));
            assert_eq!(g.arrow_at(i), a);
        }
        assert!(!g.contains(Arrow::new(p(0), p(1))));
    }

    #[test]
    fn mismatched_partition_is_rejected() {
        let s = line(3);
        assert!(build_groupoid(s.clone(), Partition::total([p(0), p(1)])).is_err());
        assert!(build_groupoid(s, Partition::total([p(0), p(1), p(2), p(7)])).is_err());
    }
}
