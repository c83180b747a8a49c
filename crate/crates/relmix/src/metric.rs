//! The two metrics on measure-preserving permutations and weak-topology
//! neighborhoods.
//!
//! d'(S,T) is the measure of the set where S and T disagree; d(S,T) is the
//! supremum of mu(SE delta TE) over all cell unions E. d is exponential in
//! the cell count, so exact evaluation is gated behind a hard bound and a
//! certified (lower, upper) interval is offered instead.

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::geometry::Cell;
use crate::perm::CellPermutation;
use crate::set::{symmetric_difference_measure, DyadicSet};

/// Default cell-count bound for exact d.
pub const BRUTE_FORCE_CELL_BOUND: usize = 20;

/// Exact measure of { z : s(z) != t(z) }, at the common refinement rank.
pub fn metric_dprime(s: &CellPermutation, t: &CellPermutation) -> Result<Dyadic> {
    let rank = s.geometry().common_rank(t.geometry())?;
    let s = s.refine(rank)?;
    let t = t.refine(rank)?;
    let g = s.geometry();
    let mut total = Dyadic::zero();
    for c in g.cells() {
        if s.apply(c) != t.apply(c) {
            total = &total + &g.cell_measure(c)?;
        }
    }
    Ok(total)
}

/// Exact sup_E mu(sE delta tE) by enumerating all 2^n cell unions. Errors
/// with TooLarge above `BRUTE_FORCE_CELL_BOUND` cells; use
/// `metric_d_bounds` there instead.
pub fn metric_d_bruteforce(s: &CellPermutation, t: &CellPermutation) -> Result<Dyadic> {
    let rank = s.geometry().common_rank(t.geometry())?;
    let s = s.refine(rank)?;
    let t = t.refine(rank)?;
    let g = s.geometry();
    let n = g.cell_count();
    if n > BRUTE_FORCE_CELL_BOUND {
        return Err(Error::TooLarge(format!(
            "{n} cells exceed the exact-d bound of {BRUTE_FORCE_CELL_BOUND}; \
             use metric_d_bounds for a certified interval"
        )));
    }
    let measures: Vec<Dyadic> = (0..n)
        .map(|i| g.cell_measure(g.cell_at(i)))
        .collect::<Result<_>>()?;
    let s_img: Vec<usize> = (0..n).map(|i| g.index_of(s.apply(g.cell_at(i)))).collect();
    let t_img: Vec<usize> = (0..n).map(|i| g.index_of(t.apply(g.cell_at(i)))).collect();

    let mut best = Dyadic::zero();
    for mask in 0u32..(1u32 << n) {
        let mut s_set = 0u32;
        let mut t_set = 0u32;
        for i in 0..n {
            if mask & (1 << i) != 0 {
                s_set |= 1 << s_img[i];
                t_set |= 1 << t_img[i];
            }
        }
        let mut diff = s_set ^ t_set;
        let mut m = Dyadic::zero();
        while diff != 0 {
            let i = diff.trailing_zeros() as usize;
            m = &m + &measures[i];
            diff &= diff - 1;
        }
        if m > best {
            best = m;
        }
    }
    Ok(best)
}

/// Certified interval for d: a greedy lower bound (grow E one cell at a time
/// while the deviation improves, from each disagreeing starting cell) and
/// the upper bound d'.
pub fn metric_d_bounds(s: &CellPermutation, t: &CellPermutation) -> Result<(Dyadic, Dyadic)> {
    let upper = metric_dprime(s, t)?;
    let rank = s.geometry().common_rank(t.geometry())?;
    let s = s.refine(rank)?;
    let t = t.refine(rank)?;
    let g = s.geometry().clone();

    let deviation = |cells: &[Cell]| -> Result<Dyadic> {
        let e = DyadicSet::from_cells(g.clone(), cells.iter().copied())?;
        symmetric_difference_measure(&s.image_of_set(&e)?, &t.image_of_set(&e)?)
    };

    let mut lower = Dyadic::zero();
    let disagree: Vec<Cell> = g.cells().filter(|&c| s.apply(c) != t.apply(c)).collect();
    for &start in disagree.iter().take(4) {
        let mut chosen = vec![start];
        let mut value = deviation(&chosen)?;
        loop {
            let mut improved = None;
            for c in g.cells() {
                if chosen.contains(&c) {
                    continue;
                }
                chosen.push(c);
                let v = deviation(&chosen)?;
                chosen.pop();
                if improved
                    .as_ref()
                    .map(|(_, best): &(Cell, Dyadic)| &v > best)
                    .unwrap_or(v > value)
                {
                    improved = Some((c, v));
                }
            }
            match improved {
                Some((c, v)) => {
                    chosen.push(c);
                    value = v;
                }
                None => break,
            }
        }
        if value > lower {
            lower = value;
        }
    }
    Ok((lower, upper))
}

/// A weak-topology neighborhood: the permutations s with
/// mu(center(E) delta s(E)) < epsilon for every generating set E.
#[derive(Debug, Clone)]
pub struct Neighborhood {
    center: CellPermutation,
    sets: Vec<DyadicSet>,
    epsilon: Dyadic,
}

/// Per-set deviation report from a membership test.
#[derive(Debug, Clone)]
pub struct NeighborhoodReport {
    pub contained: bool,
    pub deviations: Vec<Dyadic>,
}

impl Neighborhood {
    pub fn new(center: CellPermutation, sets: Vec<DyadicSet>, epsilon: Dyadic) -> Result<Self> {
        if !epsilon.is_positive() {
            return Err(Error::Precondition("epsilon must be positive".into()));
        }
        if sets.is_empty() {
            return Err(Error::Precondition(
                "a neighborhood needs at least one generating set".into(),
            ));
        }
        Ok(Neighborhood {
            center,
            sets,
            epsilon,
        })
    }

    /// All dyadic squares of the given rank as generating sets.
    pub fn dyadic_squares(center: CellPermutation, rank: u32, epsilon: Dyadic) -> Result<Self> {
        let sets = square_cells_of_rank(center.geometry(), rank)?;
        Neighborhood::new(center, sets, epsilon)
    }

    pub fn center(&self) -> &CellPermutation {
        &self.center
    }

    pub fn sets(&self) -> &[DyadicSet] {
        &self.sets
    }

    pub fn epsilon(&self) -> &Dyadic {
        &self.epsilon
    }

    /// Strict membership test with per-set deviations.
    pub fn contains(&self, s: &CellPermutation) -> Result<NeighborhoodReport> {
        let mut deviations = Vec::with_capacity(self.sets.len());
        let mut contained = true;
        for e in &self.sets {
            let d = symmetric_difference_measure(
                &self.center.image_of_set(e)?,
                &s.image_of_set(e)?,
            )?;
            if d >= self.epsilon {
                contained = false;
            }
            deviations.push(d);
        }
        Ok(NeighborhoodReport {
            contained,
            deviations,
        })
    }
}

/// Every rank-`rank` dyadic square of a square grid, as singleton cell sets
/// at that rank.
pub fn square_cells_of_rank(geometry: &crate::geometry::GridGeometry, rank: u32) -> Result<Vec<DyadicSet>> {
    if !geometry.is_square() {
        return Err(Error::Geometry("dyadic squares need a square grid".into()));
    }
    let g = crate::geometry::GridGeometry::square(rank)?;
    g.cells()
        .map(|c| DyadicSet::from_cells(g.clone(), [c]))
        .collect()
}
