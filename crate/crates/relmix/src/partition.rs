//! Partitions of a grid into dyadic sets, and the two exact matching
//! operations: hitting prescribed block measures, and hitting prescribed
//! per-column masses while staying close to the input blocks.

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::geometry::{Cell, GridGeometry, MAX_RANK};
use crate::set::{symmetric_difference_measure, DyadicSet};
use std::collections::BTreeSet;

/// A finite ordered partition: blocks are pairwise disjoint dyadic sets whose
/// union is the full grid. All blocks are stored at one common rank.
#[derive(Debug, Clone)]
pub struct Partition {
    geometry: GridGeometry,
    blocks: Vec<DyadicSet>,
}

impl Partition {
    pub fn new(blocks: Vec<DyadicSet>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Precondition("partition needs at least one block".into()));
        }
        let mut rank = blocks[0].geometry().rank();
        for b in &blocks[1..] {
            rank = rank.max(blocks[0].geometry().common_rank(b.geometry())?);
        }
        let blocks: Vec<DyadicSet> = blocks
            .into_iter()
            .map(|b| b.refine(rank))
            .collect::<Result<_>>()?;
        let geometry = blocks[0].geometry().clone();

        let mut seen: BTreeSet<Cell> = BTreeSet::new();
        let mut total = 0usize;
        for b in &blocks {
            total += b.cell_count();
            seen.extend(b.cells());
        }
        if total != seen.len() {
            return Err(Error::Precondition("partition blocks overlap".into()));
        }
        if seen.len() != geometry.cell_count() {
            return Err(Error::Precondition("partition blocks do not cover the grid".into()));
        }
        Ok(Partition { geometry, blocks })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn blocks(&self) -> &[DyadicSet] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn refine(&self, rank: u32) -> Result<Partition> {
        let blocks = self
            .blocks
            .iter()
            .map(|b| b.refine(rank))
            .collect::<Result<Vec<_>>>()?;
        Partition::new(blocks)
    }

    /// Exact mass of block `i` inside the rank-`k` column `j`.
    pub fn column_mass(&self, i: usize, k: u32, j: u32) -> Result<Dyadic> {
        let block = &self.blocks[i];
        let g = &self.geometry;
        if g.rank() < k {
            return self.refine(k)?.column_mass(i, k, j);
        }
        let shift = g.rank() - k;
        let mut total = Dyadic::zero();
        for c in block.cells() {
            if c.column >> shift == j {
                total = &total + &g.cell_measure(c)?;
            }
        }
        Ok(total)
    }
}

/// Outcome of `partition_match`: the matched partition plus the per-block
/// symmetric differences, for auditing.
#[derive(Debug, Clone)]
pub struct MatchOutcome {
    pub partition: Partition,
    pub deviations: Vec<Dyadic>,
}

/// Moves cells between blocks so every block hits its target measure exactly,
/// while each block changes by less than 2*delta in symmetric difference.
///
/// Requires a grid whose cells all share one measure. Works at the coarsest
/// rank (at most `cap`) where every target is an integer number of cells;
/// over-full blocks donate their highest cells to a pool and under-full
/// blocks draw the lowest cells from it.
pub fn partition_match(
    blocks: &Partition,
    targets: &[Dyadic],
    delta: &Dyadic,
    cap: u32,
) -> Result<MatchOutcome> {
    let g = blocks.geometry();
    if !g.uniform_cell_measure() {
        return Err(Error::Geometry(
            "partition matching needs all cells of equal measure".into(),
        ));
    }
    if targets.len() != blocks.len() {
        return Err(Error::Precondition(format!(
            "{} targets for {} blocks",
            targets.len(),
            blocks.len()
        )));
    }
    let total: Dyadic = targets.iter().cloned().sum();
    if total != Dyadic::one() {
        return Err(Error::Precondition(format!("targets sum to {total}, not 1")));
    }
    if targets.iter().any(|t| t.is_negative()) {
        return Err(Error::Precondition("negative target measure".into()));
    }
    for (b, t) in blocks.blocks().iter().zip(targets) {
        let gap = (&b.measure()? - t).abs();
        if &gap >= delta {
            return Err(Error::Precondition(format!(
                "block measure differs from its target by {gap} >= delta"
            )));
        }
    }

    let cap = cap.min(MAX_RANK);
    let work_rank = (g.rank()..=cap)
        .find(|&r| {
            let cm = g
                .refined(r)
                .and_then(|rg| rg.cell_measure(Cell::new(0, 0)));
            match cm {
                Ok(cm) => targets.iter().all(|t| target_cells(t, &cm).is_some()),
                Err(_) => false,
            }
        })
        .ok_or_else(|| {
            Error::Rank(format!(
                "targets not representable at any rank up to the cap {cap}"
            ))
        })?;

    let work = blocks.refine(work_rank)?;
    let cm = work.geometry().cell_measure(Cell::new(0, 0))?;
    let want: Vec<usize> = targets
        .iter()
        .map(|t| target_cells(t, &cm).expect("checked representable"))
        .collect();

    let mut kept: Vec<BTreeSet<Cell>> = Vec::with_capacity(work.len());
    let mut pool: BTreeSet<Cell> = BTreeSet::new();
    for (b, &w) in work.blocks().iter().zip(&want) {
        let mut cells: BTreeSet<Cell> = b.cells().collect();
        while cells.len() > w {
            let last = *cells.iter().next_back().expect("nonempty");
            cells.remove(&last);
            pool.insert(last);
        }
        kept.push(cells);
    }
    for (cells, &w) in kept.iter_mut().zip(&want) {
        while cells.len() < w {
            let first = *pool.iter().next().ok_or_else(|| {
                Error::Precondition("cell pool exhausted; targets inconsistent".into())
            })?;
            pool.remove(&first);
            cells.insert(first);
        }
    }

    let out_blocks: Vec<DyadicSet> = kept
        .into_iter()
        .map(|cells| DyadicSet::from_cells(work.geometry().clone(), cells))
        .collect::<Result<_>>()?;
    let partition = Partition::new(out_blocks)?;
    let deviations = blocks
        .blocks()
        .iter()
        .zip(partition.blocks())
        .map(|(e, f)| symmetric_difference_measure(e, f))
        .collect::<Result<Vec<_>>>()?;
    Ok(MatchOutcome { partition, deviations })
}

fn target_cells(target: &Dyadic, cell_measure: &Dyadic) -> Option<usize> {
    // target / cell_measure as an exact non-negative integer.
    let ratio = target.to_rational() / cell_measure.to_rational();
    if !ratio.is_integer() {
        return None;
    }
    use num::ToPrimitive;
    ratio.to_integer().to_usize()
}

/// Rebalances the approximate partition so that, for every block and every
/// rank-K column, the mass inside the column equals the prescribed target
/// exactly — moving only full-column-width row slabs, which keeps each block
/// within 3*epsilon of the original.
///
/// `blocks` is the reference partition (the lemma's E_i), `approx` the dyadic
/// approximation (F~_i) with `sym_diff(E_i, F~_i) < epsilon`; K is the rank of
/// `approx`, and `column_targets[i][j]` prescribes the mass of block i in the
/// rank-K column j. Square grids only (rows must subdivide).
pub fn column_partition_match(
    blocks: &Partition,
    approx: &Partition,
    column_targets: &[Vec<Dyadic>],
    epsilon: &Dyadic,
    cap: u32,
) -> Result<MatchOutcome> {
    let g = approx.geometry();
    if !g.is_square() || !blocks.geometry().is_square() {
        return Err(Error::Geometry(
            "column matching subdivides rows and needs a square grid".into(),
        ));
    }
    let n_blocks = blocks.len();
    if approx.len() != n_blocks || column_targets.len() != n_blocks {
        return Err(Error::Precondition(
            "blocks, approx, and targets must have matching lengths".into(),
        ));
    }
    let k = g.rank();
    let n_cols = 1u32 << k;
    if column_targets.iter().any(|row| row.len() != n_cols as usize) {
        return Err(Error::Precondition(format!(
            "each target row must have {n_cols} columns"
        )));
    }
    if column_targets
        .iter()
        .any(|row| row.iter().any(|t| t.is_negative()))
    {
        return Err(Error::Precondition("negative column target".into()));
    }
    let column_mass = Dyadic::one_over_pow2(k);
    for j in 0..n_cols as usize {
        let s: Dyadic = column_targets.iter().map(|row| row[j].clone()).sum();
        if s != column_mass {
            return Err(Error::Precondition(format!(
                "column {j} targets sum to {s}, expected {column_mass}"
            )));
        }
    }
    // Hypothesis checks: closeness per column and per block.
    let tol = {
        let mut e = epsilon.clone();
        for _ in 0..k {
            e = e.half();
        }
        e
    };
    for i in 0..n_blocks {
        for j in 0..n_cols {
            let gap = (&blocks.column_mass(i, k, j)? - &column_targets[i][j as usize]).abs();
            if gap >= tol {
                return Err(Error::Precondition(format!(
                    "block {i} column {j} mass differs from target by {gap} >= epsilon/2^K"
                )));
            }
        }
        let d = symmetric_difference_measure(&blocks.blocks()[i], &approx.blocks()[i])?;
        if &d >= epsilon {
            return Err(Error::Precondition(format!(
                "block {i} approximation error {d} >= epsilon"
            )));
        }
    }

    // Row slabs of measure d are carved at a rank where d * 2^(K+W) is an
    // integer row count.
    let cap = cap.min(MAX_RANK);
    let mut work_rank = approx.geometry().rank().max(blocks.geometry().rank());
    for row in column_targets {
        for t in row {
            let need = t.exponent().saturating_sub(k);
            work_rank = work_rank.max(need);
        }
    }
    if work_rank > cap {
        return Err(Error::Rank(format!(
            "column targets need rank {work_rank}, above the cap {cap}"
        )));
    }
    let work = approx.refine(work_rank)?;
    let wg = work.geometry().clone();
    let w = work_rank;
    let span = 1u32 << (w - k); // fine columns per rank-K column
    let rows_per_unit = 1u64 << (k + w); // rows representing one unit of mass

    // Row sets per (block, K-column): the product structure makes the row set
    // independent of the fine column within the K-column.
    let mut row_sets: Vec<Vec<BTreeSet<u32>>> = vec![vec![BTreeSet::new(); n_cols as usize]; n_blocks];
    for (i, b) in work.blocks().iter().enumerate() {
        for c in b.cells() {
            row_sets[i][(c.column >> (w - k)) as usize].insert(c.row);
        }
        for (j, rows) in row_sets[i].iter().enumerate() {
            let count: usize = work.blocks()[i]
                .cells()
                .filter(|c| (c.column >> (w - k)) as usize == j)
                .count();
            if count != rows.len() * span as usize {
                return Err(Error::Precondition(format!(
                    "approx block {i} is not full-width in column {j} at rank {k}"
                )));
            }
        }
    }

    for j in 0..n_cols as usize {
        // Surpluses feed a per-column pool of carved rows; deficits drain it.
        let mut pool: BTreeSet<u32> = BTreeSet::new();
        for i in 0..n_blocks {
            let have = Dyadic::new(row_sets[i][j].len() as i64, k + w);
            let want = &column_targets[i][j];
            if &have > want {
                let carve = dyadic_row_count(&(&have - want), rows_per_unit)?;
                for _ in 0..carve {
                    let r = *row_sets[i][j].iter().next_back().expect("nonempty surplus");
                    row_sets[i][j].remove(&r);
                    pool.insert(r);
                }
            }
        }
        for i in 0..n_blocks {
            let have = Dyadic::new(row_sets[i][j].len() as i64, k + w);
            let want = &column_targets[i][j];
            if &have < want {
                let need = dyadic_row_count(&(want - &have), rows_per_unit)?;
                for _ in 0..need {
                    let r = *pool.iter().next().ok_or_else(|| {
                        Error::Precondition("row pool exhausted; targets infeasible".into())
                    })?;
                    pool.remove(&r);
                    row_sets[i][j].insert(r);
                }
            }
        }
        if !pool.is_empty() {
            return Err(Error::Precondition("row pool not drained; targets infeasible".into()));
        }
    }

    let mut out_blocks = Vec::with_capacity(n_blocks);
    for rows_by_col in &row_sets {
        let mut cells = Vec::new();
        for (j, rows) in rows_by_col.iter().enumerate() {
            for &r in rows {
                for dc in 0..span {
                    cells.push(Cell::new((j as u32) * span + dc, r));
                }
            }
        }
        out_blocks.push(DyadicSet::from_cells(wg.clone(), cells)?);
    }
    let partition = Partition::new(out_blocks)?;
    let deviations = blocks
        .blocks()
        .iter()
        .zip(partition.blocks())
        .map(|(e, f)| symmetric_difference_measure(e, f))
        .collect::<Result<Vec<_>>>()?;
    Ok(MatchOutcome { partition, deviations })
}

fn dyadic_row_count(mass: &Dyadic, rows_per_unit: u64) -> Result<usize> {
    let scaled = mass.to_rational() * num::BigRational::from_integer(rows_per_unit.into());
    if !scaled.is_integer() {
        return Err(Error::Rank(format!(
            "mass {mass} is not a whole number of rows at the working rank"
        )));
    }
    use num::ToPrimitive;
    scaled
        .to_integer()
        .to_usize()
        .ok_or_else(|| Error::TooLarge("row count overflow".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DEFAULT_RANK_CAP;

    fn sq(rank: u32) -> GridGeometry {
        GridGeometry::square(rank).unwrap()
    }

    fn dy(n: i64, k: u32) -> Dyadic {
        Dyadic::new(n, k)
    }

    fn two_block_rank1() -> Partition {
        // E_1 = three cells, E_2 = one cell, on the rank-1 square.
        let g = sq(1);
        let e1 = DyadicSet::from_cells(
            g.clone(),
            [Cell::new(0, 0), Cell::new(1, 0), Cell::new(0, 1)],
        )
        .unwrap();
        let e2 = DyadicSet::from_cells(g, [Cell::new(1, 1)]).unwrap();
        Partition::new(vec![e1, e2]).unwrap()
    }

    #[test]
    fn partition_validation() {
        let g = sq(1);
        let a = DyadicSet::from_cells(g.clone(), [Cell::new(0, 0)]).unwrap();
        let b = DyadicSet::from_cells(g.clone(), [Cell::new(0, 0), Cell::new(1, 0)]).unwrap();
        assert!(Partition::new(vec![a.clone(), b]).is_err()); // overlap
        assert!(Partition::new(vec![a]).is_err()); // no cover
    }

    #[test]
    fn match_noop_when_targets_equal_measures() {
        let p = two_block_rank1();
        let targets = vec![dy(3, 2), dy(1, 2)];
        let out = partition_match(&p, &targets, &dy(1, 3), DEFAULT_RANK_CAP).unwrap();
        assert!(out.deviations.iter().all(|d| d.is_zero()));
        for (b, t) in out.partition.blocks().iter().zip(&targets) {
            assert_eq!(&b.measure().unwrap(), t);
        }
    }

    #[test]
    fn match_moves_one_cell() {
        // Targets (1/2, 1/2) against measures (3/4, 1/4): move exactly one
        // rank-1 cell, so each block changes by 1/4 < 2*delta = 1.
        let p = two_block_rank1();
        let targets = vec![dy(1, 1), dy(1, 1)];
        let delta = dy(1, 1);
        let out = partition_match(&p, &targets, &delta, DEFAULT_RANK_CAP).unwrap();
        for (b, t) in out.partition.blocks().iter().zip(&targets) {
            assert_eq!(&b.measure().unwrap(), t);
        }
        assert_eq!(out.deviations[0], dy(1, 2));
        assert_eq!(out.deviations[1], dy(1, 2));
        let bound = &delta + &delta;
        assert!(out.deviations.iter().all(|d| d < &bound));
    }

    #[test]
    fn match_refines_for_finer_targets() {
        let p = two_block_rank1();
        // 5/8 is not a whole number of rank-1 cells; rank 2 is needed.
        let targets = vec![dy(5, 3), dy(3, 3)];
        let out = partition_match(&p, &targets, &dy(1, 1), DEFAULT_RANK_CAP).unwrap();
        assert_eq!(out.partition.geometry().rank(), 2);
        assert_eq!(out.partition.blocks()[0].measure().unwrap(), dy(5, 3));
    }

    #[test]
    fn match_rejects_bad_inputs() {
        let p = two_block_rank1();
        // Targets do not sum to one.
        assert!(matches!(
            partition_match(&p, &[dy(1, 1), dy(1, 2)], &dy(1, 0), DEFAULT_RANK_CAP),
            Err(Error::Precondition(_))
        ));
        // Gap exceeds delta.
        assert!(matches!(
            partition_match(&p, &[dy(1, 1), dy(1, 1)], &dy(1, 3), DEFAULT_RANK_CAP),
            Err(Error::Precondition(_))
        ));
        // Unrepresentable target within the cap.
        assert!(matches!(
            partition_match(&p, &[dy(1, 1), dy(1, 1)], &dy(1, 1), 0),
            Err(Error::Rank(_))
        ));
    }

    #[test]
    fn column_match_noop_when_exact() {
        let p = two_block_rank1();
        let k = p.geometry().rank();
        let targets: Vec<Vec<Dyadic>> = (0..p.len())
            .map(|i| {
                (0..1u32 << k)
                    .map(|j| p.column_mass(i, k, j).unwrap())
                    .collect()
            })
            .collect();
        let out =
            column_partition_match(&p, &p, &targets, &dy(1, 0), DEFAULT_RANK_CAP).unwrap();
        assert!(out.deviations.iter().all(|d| d.is_zero()));
    }

    #[test]
    fn column_match_moves_row_slabs() {
        // Reference partition: left column vs right column of the rank-1
        // square. The approximation hands the top-left cell to the wrong
        // block; targets ask for the reference masses back.
        let g = sq(1);
        let e1 = DyadicSet::columns(g.clone(), [0]).unwrap();
        let e2 = DyadicSet::columns(g.clone(), [1]).unwrap();
        let blocks = Partition::new(vec![e1, e2]).unwrap();

        let f1 = DyadicSet::from_cells(g.clone(), [Cell::new(0, 1)]).unwrap();
        let f2 = DyadicSet::from_cells(
            g,
            [Cell::new(0, 0), Cell::new(1, 0), Cell::new(1, 1)],
        )
        .unwrap();
        let approx = Partition::new(vec![f1, f2]).unwrap();

        let targets = vec![vec![dy(1, 1), dy(0, 0)], vec![dy(0, 0), dy(1, 1)]];
        let epsilon = dy(3, 2); // sym-diffs are 1/4 < 3/4, per-column gaps 1/4 < (3/4)/2
        let out = column_partition_match(&blocks, &approx, &targets, &epsilon, DEFAULT_RANK_CAP)
            .unwrap();
        // Exact per-column masses...
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(
                    out.partition.column_mass(i, 1, j).unwrap(),
                    targets[i][j as usize]
                );
            }
        }
        // ...and the block bound 3*epsilon holds.
        let bound = &(&epsilon + &epsilon) + &epsilon;
        assert!(out.deviations.iter().all(|d| d < &bound));
        // The correction moved exactly the one misplaced cell back.
        assert_eq!(
            symmetric_difference_measure(
                &out.partition.blocks()[0],
                &blocks.blocks()[0]
            )
            .unwrap(),
            Dyadic::zero()
        );
    }

    #[test]
    fn column_match_carves_sub_rows() {
        // Targets that require splitting rank-1 rows: block 0 owes a quarter
        // of each column's mass to block 1.
        let g = sq(1);
        let e1 = DyadicSet::from_cells(g.clone(), [Cell::new(0, 0), Cell::new(1, 0)]).unwrap();
        let e2 = DyadicSet::from_cells(g.clone(), [Cell::new(0, 1), Cell::new(1, 1)]).unwrap();
        let blocks = Partition::new(vec![e1, e2]).unwrap();
        let targets = vec![
            vec![dy(3, 4), dy(3, 4)], // 3/16 each column
            vec![dy(5, 4), dy(5, 4)], // 5/16 each column
        ];
        let epsilon = dy(1, 0);
        let out = column_partition_match(&blocks, &blocks, &targets, &epsilon, DEFAULT_RANK_CAP)
            .unwrap();
        assert!(out.partition.geometry().rank() >= 2);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(
                    out.partition.column_mass(i, 1, j).unwrap(),
                    targets[i][j as usize]
                );
            }
        }
    }

    #[test]
    fn column_match_requires_square() {
        let g = GridGeometry::discrete_uniform(1, 2).unwrap();
        let b = Partition::new(vec![DyadicSet::full(g)]).unwrap();
        let t = vec![vec![dy(1, 1), dy(1, 1)]];
        assert!(matches!(
            column_partition_match(&b, &b, &t, &dy(1, 0), DEFAULT_RANK_CAP),
            Err(Error::Geometry(_))
        ));
    }
}
