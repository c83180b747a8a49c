//! Grids of dyadic cells: the rank-k subdivision of the unit square and the
//! discrete product of the unit interval with finitely many weighted levels.
//!
//! Columns always subdivide dyadically. Rows subdivide only on square grids;
//! on discrete grids the rows are the levels and carry the level weights.
//! Square rows are indexed from the top, matching the row-major cell labels
//! used by the cycle notation (label 1 is the top-left cell).

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use num::rational::BigRational;
use num::{BigInt, One, Signed, Zero};
use std::fmt;
use std::sync::Arc;

/// Hard upper bound on ranks: rank 12 is ~16.7M cells on a square grid, and
/// the per-cell tables stop being reasonable beyond that.
pub const MAX_RANK: u32 = 12;

/// Default configurable cap for operations that escalate rank on their own.
pub const DEFAULT_RANK_CAP: u32 = 12;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Rows {
    /// Square grid: 2^rank rows of weight 1/2^rank each.
    Square,
    /// Discrete grid: fixed levels with positive rational weights summing to 1.
    Discrete(Arc<Vec<BigRational>>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GridGeometry {
    rank: u32,
    rows: Rows,
}

/// One cell of a grid: `column` in [0, 2^rank), `row` in [0, rows).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub column: u32,
    pub row: u32,
}

impl Cell {
    pub fn new(column: u32, row: u32) -> Self {
        Cell { column, row }
    }
}

impl GridGeometry {
    pub fn square(rank: u32) -> Result<Self> {
        check_rank(rank)?;
        Ok(GridGeometry {
            rank,
            rows: Rows::Square,
        })
    }

    /// Discrete grid with the given level weights (positive, summing to 1).
    pub fn discrete(rank: u32, weights: Vec<BigRational>) -> Result<Self> {
        check_rank(rank)?;
        if weights.is_empty() {
            return Err(Error::Precondition("discrete grid needs at least one level".into()));
        }
        if weights.iter().any(|w| !w.is_positive()) {
            return Err(Error::Precondition("level weights must be positive".into()));
        }
        let total: BigRational = weights.iter().sum();
        if total != BigRational::one() {
            return Err(Error::Precondition(format!(
                "level weights must sum to 1, got {total}"
            )));
        }
        Ok(GridGeometry {
            rank,
            rows: Rows::Discrete(Arc::new(weights)),
        })
    }

    /// Discrete grid with L equal levels.
    pub fn discrete_uniform(rank: u32, levels: u32) -> Result<Self> {
        let w = BigRational::new(BigInt::one(), BigInt::from(levels));
        GridGeometry::discrete(rank, vec![w; levels as usize])
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn is_square(&self) -> bool {
        matches!(self.rows, Rows::Square)
    }

    pub fn columns(&self) -> u32 {
        1 << self.rank
    }

    pub fn row_count(&self) -> u32 {
        match &self.rows {
            Rows::Square => 1 << self.rank,
            Rows::Discrete(w) => w.len() as u32,
        }
    }

    pub fn cell_count(&self) -> usize {
        self.columns() as usize * self.row_count() as usize
    }

    pub fn level_weight(&self, row: u32) -> BigRational {
        match &self.rows {
            Rows::Square => BigRational::new(BigInt::one(), BigInt::one() << self.rank as usize),
            Rows::Discrete(w) => w[row as usize].clone(),
        }
    }

    pub fn level_weights(&self) -> Vec<BigRational> {
        (0..self.row_count()).map(|r| self.level_weight(r)).collect()
    }

    /// Level weight as a dyadic rational; errors on non-dyadic weights.
    /// Measure and metric computations all funnel through here.
    pub fn level_weight_dyadic(&self, row: u32) -> Result<Dyadic> {
        match &self.rows {
            Rows::Square => Ok(Dyadic::one_over_pow2(self.rank)),
            Rows::Discrete(w) => Dyadic::try_from_rational(&w[row as usize]).ok_or_else(|| {
                Error::Geometry(format!(
                    "level weight {} is not dyadic; measures on this grid are unsupported",
                    w[row as usize]
                ))
            }),
        }
    }

    /// measure(cell) = (1/columns) * levelWeights[row].
    pub fn cell_measure(&self, cell: Cell) -> Result<Dyadic> {
        let w = self.level_weight_dyadic(cell.row)?;
        Ok(&w * &Dyadic::one_over_pow2(self.rank))
    }

    pub fn cell_measure_rational(&self, cell: Cell) -> BigRational {
        self.level_weight(cell.row)
            / BigRational::from_integer(BigInt::one() << self.rank as usize)
    }

    /// True when all cells have one common measure (square grids, or discrete
    /// grids with equal weights).
    pub fn uniform_cell_measure(&self) -> bool {
        match &self.rows {
            Rows::Square => true,
            Rows::Discrete(w) => w.iter().all(|x| *x == w[0]),
        }
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.column < self.columns() && cell.row < self.row_count()
    }

    /// Row-major cell index.
    pub fn index_of(&self, cell: Cell) -> usize {
        cell.row as usize * self.columns() as usize + cell.column as usize
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        let cols = self.columns() as usize;
        Cell::new((index % cols) as u32, (index / cols) as u32)
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.cell_count()).map(|i| self.cell_at(i))
    }

    /// 1-based row-major label, as used by cycle notation.
    pub fn label_of(&self, cell: Cell) -> usize {
        self.index_of(cell) + 1
    }

    pub fn cell_of_label(&self, label: usize) -> Result<Cell> {
        if label == 0 || label > self.cell_count() {
            return Err(Error::Precondition(format!(
                "label {label} out of range 1..={}",
                self.cell_count()
            )));
        }
        Ok(self.cell_at(label - 1))
    }

    /// Geometry at a finer rank (same kind, same level weights).
    pub fn refined(&self, target_rank: u32) -> Result<GridGeometry> {
        if target_rank < self.rank {
            return Err(Error::Rank(format!(
                "target rank {target_rank} below current rank {}",
                self.rank
            )));
        }
        check_rank(target_rank)?;
        Ok(GridGeometry {
            rank: target_rank,
            rows: self.rows.clone(),
        })
    }

    /// Children of a cell at rank+1: 2x2 sub-squares on square grids, a
    /// horizontal split on discrete grids.
    pub fn split_cell(&self, cell: Cell) -> Vec<Cell> {
        match &self.rows {
            Rows::Square => vec![
                Cell::new(2 * cell.column, 2 * cell.row),
                Cell::new(2 * cell.column + 1, 2 * cell.row),
                Cell::new(2 * cell.column, 2 * cell.row + 1),
                Cell::new(2 * cell.column + 1, 2 * cell.row + 1),
            ],
            Rows::Discrete(_) => vec![
                Cell::new(2 * cell.column, cell.row),
                Cell::new(2 * cell.column + 1, cell.row),
            ],
        }
    }

    /// Parent at `self` rank of a cell given at `fine_rank >= self.rank`.
    pub fn parent_of(&self, fine_cell: Cell, fine_rank: u32) -> Cell {
        let shift = fine_rank - self.rank;
        let row = match &self.rows {
            Rows::Square => fine_cell.row >> shift,
            Rows::Discrete(_) => fine_cell.row,
        };
        Cell::new(fine_cell.column >> shift, row)
    }

    /// Checks the two geometries agree apart from rank and returns the common
    /// refinement rank.
    pub fn common_rank(&self, other: &GridGeometry) -> Result<u32> {
        let compatible = match (&self.rows, &other.rows) {
            (Rows::Square, Rows::Square) => true,
            (Rows::Discrete(a), Rows::Discrete(b)) => a == b,
            _ => false,
        };
        if !compatible {
            return Err(Error::Geometry(
                "grids have different kinds or level weights".into(),
            ));
        }
        Ok(self.rank.max(other.rank))
    }
}

impl fmt::Display for GridGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.rows {
            Rows::Square => write!(f, "square grid of rank {}", self.rank),
            Rows::Discrete(w) => write!(
                f,
                "discrete grid of rank {} with {} levels",
                self.rank,
                w.len()
            ),
        }
    }
}

fn check_rank(rank: u32) -> Result<()> {
    if rank > MAX_RANK {
        return Err(Error::Rank(format!("rank {rank} exceeds the cap {MAX_RANK}")));
    }
    Ok(())
}

/// Uniform weight vector 1/L repeated L times.
pub fn uniform_weights(levels: u32) -> Vec<BigRational> {
    let w = BigRational::new(BigInt::one(), BigInt::from(levels));
    vec![w; levels as usize]
}

/// Parses a comma-separated list of `p/q` rationals.
pub fn parse_weights(s: &str) -> Result<Vec<BigRational>> {
    s.split(',')
        .map(|part| {
            let part = part.trim();
            let (num, den) = match part.split_once('/') {
                Some((n, d)) => (n.trim(), d.trim()),
                None => (part, "1"),
            };
            let n: BigInt = num
                .parse()
                .map_err(|e| Error::parse(0, format!("bad weight `{part}`: {e}")))?;
            let d: BigInt = den
                .parse()
                .map_err(|e| Error::parse(0, format!("bad weight `{part}`: {e}")))?;
            if d.is_zero() {
                return Err(Error::parse(0, format!("zero denominator in `{part}`")));
            }
            Ok(BigRational::new(n, d))
        })
        .collect()
}

/// Renders weights as a comma-separated `p/q` list.
pub fn format_weights(weights: &[BigRational]) -> String {
    weights
        .iter()
        .map(|w| format!("{}/{}", w.numer(), w.denom()))
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_basics() {
        let g = GridGeometry::square(2).unwrap();
        assert_eq!(g.columns(), 4);
        assert_eq!(g.row_count(), 4);
        assert_eq!(g.cell_count(), 16);
        assert_eq!(g.cell_measure(Cell::new(0, 0)).unwrap(), Dyadic::new(1, 4));
    }

    #[test]
    fn figure_labels_row_major_from_top() {
        let g = GridGeometry::square(2).unwrap();
        // Label 1 is the top-left cell; label 11 sits in column 3, row 3 when
        // counted 1-based, i.e. (2, 2) zero-based.
        assert_eq!(g.cell_of_label(1).unwrap(), Cell::new(0, 0));
        assert_eq!(g.cell_of_label(11).unwrap(), Cell::new(2, 2));
        assert_eq!(g.label_of(Cell::new(3, 3)), 16);
        for label in 1..=16 {
            assert_eq!(g.label_of(g.cell_of_label(label).unwrap()), label);
        }
    }

    #[test]
    fn discrete_weights_validated() {
        assert!(GridGeometry::discrete(1, vec![]).is_err());
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        assert!(GridGeometry::discrete(1, vec![half.clone()]).is_err());
        let g = GridGeometry::discrete(1, vec![half.clone(), half]).unwrap();
        assert_eq!(g.row_count(), 2);
        assert_eq!(g.cell_measure(Cell::new(0, 0)).unwrap(), Dyadic::new(1, 2));
    }

    #[test]
    fn non_dyadic_weights_reject_measures() {
        let g = GridGeometry::discrete_uniform(1, 3).unwrap();
        assert!(matches!(
            g.cell_measure(Cell::new(0, 0)),
            Err(Error::Geometry(_))
        ));
        // But the rational measure is always available.
        assert_eq!(
            g.cell_measure_rational(Cell::new(0, 0)),
            BigRational::new(BigInt::from(1), BigInt::from(6))
        );
    }

    #[test]
    fn refinement_and_parent() {
        let g = GridGeometry::square(1).unwrap();
        let children = g.split_cell(Cell::new(1, 0));
        assert_eq!(children.len(), 4);
        let fine = g.refined(2).unwrap();
        for c in children {
            assert_eq!(g.parent_of(c, fine.rank()), Cell::new(1, 0));
        }

        let d = GridGeometry::discrete_uniform(1, 3).unwrap();
        assert_eq!(d.split_cell(Cell::new(0, 2)).len(), 2);
        assert!(g.refined(0).is_err());
        assert!(g.refined(MAX_RANK + 1).is_err());
    }

    #[test]
    fn weights_round_trip() {
        let w = parse_weights("1/2,1/4,1/4").unwrap();
        assert_eq!(parse_weights(&format_weights(&w)).unwrap(), w);
        assert!(parse_weights("1/0").is_err());
    }
}
