//! Finite unions of dyadic cells and their exact measure calculus.

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::geometry::{Cell, GridGeometry};
use num::rational::BigRational;
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicSet {
    geometry: GridGeometry,
    cells: BTreeSet<Cell>,
}

impl DyadicSet {
    pub fn empty(geometry: GridGeometry) -> Self {
        DyadicSet {
            geometry,
            cells: BTreeSet::new(),
        }
    }

    pub fn full(geometry: GridGeometry) -> Self {
        let cells = geometry.cells().collect();
        DyadicSet { geometry, cells }
    }

    pub fn from_cells(geometry: GridGeometry, cells: impl IntoIterator<Item = Cell>) -> Result<Self> {
        let cells: BTreeSet<Cell> = cells.into_iter().collect();
        for &c in &cells {
            if !geometry.contains(c) {
                return Err(Error::Precondition(format!(
                    "cell {c:?} is outside the {geometry}"
                )));
            }
        }
        Ok(DyadicSet { geometry, cells })
    }

    /// The full column of a rank-level interval index.
    pub fn column(geometry: GridGeometry, column: u32) -> Result<Self> {
        if column >= geometry.columns() {
            return Err(Error::Precondition(format!("column {column} out of range")));
        }
        let cells = (0..geometry.row_count())
            .map(|r| Cell::new(column, r))
            .collect();
        Ok(DyadicSet { geometry, cells })
    }

    /// Union of full columns.
    pub fn columns(geometry: GridGeometry, columns: impl IntoIterator<Item = u32>) -> Result<Self> {
        let mut cells = BTreeSet::new();
        for c in columns {
            if c >= geometry.columns() {
                return Err(Error::Precondition(format!("column {c} out of range")));
            }
            for r in 0..geometry.row_count() {
                cells.insert(Cell::new(c, r));
            }
        }
        Ok(DyadicSet { geometry, cells })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.cells.iter().copied()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.cells.contains(&cell)
    }

    pub fn measure(&self) -> Result<Dyadic> {
        let mut total = Dyadic::zero();
        for &c in &self.cells {
            total = &total + &self.geometry.cell_measure(c)?;
        }
        Ok(total)
    }

    pub fn measure_rational(&self) -> BigRational {
        self.cells
            .iter()
            .map(|&c| self.geometry.cell_measure_rational(c))
            .sum()
    }

    /// Same region re-expressed at a finer rank; measure is unchanged.
    pub fn refine(&self, target_rank: u32) -> Result<DyadicSet> {
        let geometry = self.geometry.refined(target_rank)?;
        let mut cells = self.cells.clone();
        let mut g = self.geometry.clone();
        while g.rank() < target_rank {
            cells = cells.iter().flat_map(|&c| g.split_cell(c)).collect();
            g = g.refined(g.rank() + 1)?;
        }
        Ok(DyadicSet { geometry, cells })
    }

    fn to_common(&self, other: &DyadicSet) -> Result<(DyadicSet, DyadicSet)> {
        let rank = self.geometry.common_rank(&other.geometry)?;
        Ok((self.refine(rank)?, other.refine(rank)?))
    }

    pub fn union(&self, other: &DyadicSet) -> Result<DyadicSet> {
        let (mut a, b) = self.to_common(other)?;
        a.cells.extend(b.cells);
        Ok(a)
    }

    pub fn intersection(&self, other: &DyadicSet) -> Result<DyadicSet> {
        let (a, b) = self.to_common(other)?;
        Ok(DyadicSet {
            geometry: a.geometry,
            cells: a.cells.intersection(&b.cells).copied().collect(),
        })
    }

    pub fn difference(&self, other: &DyadicSet) -> Result<DyadicSet> {
        let (a, b) = self.to_common(other)?;
        Ok(DyadicSet {
            geometry: a.geometry,
            cells: a.cells.difference(&b.cells).copied().collect(),
        })
    }

    pub fn complement(&self) -> DyadicSet {
        let cells = self
            .geometry
            .cells()
            .filter(|c| !self.cells.contains(c))
            .collect();
        DyadicSet {
            geometry: self.geometry.clone(),
            cells,
        }
    }

    /// True when the set is a union of full columns.
    pub fn is_cylinder(&self) -> bool {
        let rows = self.geometry.row_count();
        let cols: BTreeSet<u32> = self.cells.iter().map(|c| c.column).collect();
        self.cells.len() == cols.len() * rows as usize
    }

    /// The base interval indices whose columns the set touches.
    pub fn touched_columns(&self) -> BTreeSet<u32> {
        self.cells.iter().map(|c| c.column).collect()
    }
}

/// Exact measure of the symmetric difference a △ b, after refining both sets
/// to a common rank.
pub fn symmetric_difference_measure(a: &DyadicSet, b: &DyadicSet) -> Result<Dyadic> {
    let rank = a.geometry().common_rank(b.geometry())?;
    let a = a.refine(rank)?;
    let b = b.refine(rank)?;
    let mut total = Dyadic::zero();
    for &c in a.cells.symmetric_difference(&b.cells) {
        total = &total + &a.geometry.cell_measure(c)?;
    }
    Ok(total)
}
