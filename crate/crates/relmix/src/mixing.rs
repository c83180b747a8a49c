//! Exact fiberwise analysis: conditional expectations over the base,
//! relative norms, the relative correlation deviation and its Cesàro
//! averages, and the witness computations that separate extension classes.
//!
//! Norms are carried as exact squared rationals; square roots only appear in
//! floating-point renderings.

use crate::error::{Error, Result};
use crate::geometry::{Cell, GridGeometry};
use crate::perm::{CellPermutation, IntervalPermutation};
use crate::set::DyadicSet;
use num::rational::BigRational;
use num::{BigInt, One, Signed, Zero};

/// How the permutation acts on functions. The default transports an
/// indicator the same way the permutation transports the set:
/// (T f)(z) = f(T^{-1} z), so T chi_E = chi_{TE}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Koopman {
    #[default]
    InverseTransport,
    /// (T f)(z) = f(T z).
    ForwardTransport,
}

/// A rational-valued function constant on the cells of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    geometry: GridGeometry,
    values: Vec<BigRational>,
}

impl GridFunction {
    pub fn from_values(geometry: GridGeometry, values: Vec<BigRational>) -> Result<Self> {
        if values.len() != geometry.cell_count() {
            return Err(Error::Precondition(format!(
                "expected {} values, got {}",
                geometry.cell_count(),
                values.len()
            )));
        }
        Ok(GridFunction { geometry, values })
    }

    pub fn constant(geometry: GridGeometry, value: BigRational) -> Self {
        let n = geometry.cell_count();
        GridFunction {
            geometry,
            values: vec![value; n],
        }
    }

    pub fn indicator(set: &DyadicSet) -> Self {
        let geometry = set.geometry().clone();
        let mut values = vec![BigRational::zero(); geometry.cell_count()];
        for c in set.cells() {
            values[geometry.index_of(c)] = BigRational::one();
        }
        GridFunction { geometry, values }
    }

    /// Function constant on each level: value(cell) = levels[row].
    pub fn from_levels(geometry: GridGeometry, levels: &[BigRational]) -> Result<Self> {
        if levels.len() != geometry.row_count() as usize {
            return Err(Error::Precondition(format!(
                "expected {} level values, got {}",
                geometry.row_count(),
                levels.len()
            )));
        }
        let values = (0..geometry.cell_count())
            .map(|i| levels[geometry.cell_at(i).row as usize].clone())
            .collect();
        Ok(GridFunction { geometry, values })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn value(&self, cell: Cell) -> &BigRational {
        &self.values[self.geometry.index_of(cell)]
    }

    pub fn values(&self) -> &[BigRational] {
        &self.values
    }

    pub fn refine(&self, target_rank: u32) -> Result<GridFunction> {
        let fine = self.geometry.refined(target_rank)?;
        let values = (0..fine.cell_count())
            .map(|i| {
                let parent = self.geometry.parent_of(fine.cell_at(i), target_rank);
                self.values[self.geometry.index_of(parent)].clone()
            })
            .collect();
        Ok(GridFunction {
            geometry: fine,
            values,
        })
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        let (a, b) = common(self, other)?;
        let values = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| x + y)
            .collect();
        Ok(GridFunction {
            geometry: a.geometry,
            values,
        })
    }

    pub fn scale(&self, c: &BigRational) -> GridFunction {
        GridFunction {
            geometry: self.geometry.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn pointwise_mul(&self, other: &GridFunction) -> Result<GridFunction> {
        let (a, b) = common(self, other)?;
        let values = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| x * y)
            .collect();
        Ok(GridFunction {
            geometry: a.geometry,
            values,
        })
    }

    /// Lift of a base vector: constant along each fiber.
    pub fn from_fiber(v: &FiberVector) -> GridFunction {
        let g = v.geometry.clone();
        let values = (0..g.cell_count())
            .map(|i| v.values[g.cell_at(i).column as usize].clone())
            .collect();
        GridFunction {
            geometry: g,
            values,
        }
    }

    /// Transport by a permutation under the chosen convention.
    pub fn transport(&self, t: &CellPermutation, n: i64, conv: Koopman) -> Result<GridFunction> {
        let rank = self.geometry.common_rank(t.geometry())?;
        let f = self.refine(rank)?;
        let t = t.refine(rank)?;
        let steps = match conv {
            Koopman::InverseTransport => -n,
            Koopman::ForwardTransport => n,
        };
        let tn = t.power(steps);
        let g = f.geometry.clone();
        let values = (0..g.cell_count())
            .map(|i| f.values[g.index_of(tn.apply(g.cell_at(i)))].clone())
            .collect();
        Ok(GridFunction {
            geometry: g,
            values,
        })
    }

    /// Squared L^2 norm over the whole grid.
    pub fn l2_norm_squared(&self) -> BigRational {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| self.geometry.cell_measure_rational(self.geometry.cell_at(i)) * v * v)
            .sum()
    }
}

fn common(a: &GridFunction, b: &GridFunction) -> Result<(GridFunction, GridFunction)> {
    let rank = a.geometry.common_rank(&b.geometry)?;
    Ok((a.refine(rank)?, b.refine(rank)?))
}

/// A rational-valued function on the base intervals (one value per column).
#[derive(Debug, Clone, PartialEq)]
pub struct FiberVector {
    geometry: GridGeometry,
    values: Vec<BigRational>,
}

impl FiberVector {
    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn values(&self) -> &[BigRational] {
        &self.values
    }

    pub fn value(&self, column: u32) -> &BigRational {
        &self.values[column as usize]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.is_zero())
    }

    pub fn pointwise_mul(&self, other: &FiberVector) -> FiberVector {
        FiberVector {
            geometry: self.geometry.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &FiberVector) -> FiberVector {
        FiberVector {
            geometry: self.geometry.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Base transport v -> v o (T')^{-n} (or forward under the other
    /// convention).
    pub fn transport(&self, base: &IntervalPermutation, n: i64, conv: Koopman) -> FiberVector {
        let steps = match conv {
            Koopman::InverseTransport => -n,
            Koopman::ForwardTransport => n,
        };
        let bn = base.power(steps);
        FiberVector {
            geometry: self.geometry.clone(),
            values: (0..self.values.len())
                .map(|x| self.values[bn.apply(x as u32) as usize].clone())
                .collect(),
        }
    }

    /// Squared L^2(X) norm with the normalized base measure.
    pub fn l2_norm_squared(&self) -> BigRational {
        let cols = BigRational::from_integer(BigInt::from(self.values.len()));
        self.values.iter().map(|v| v * v).sum::<BigRational>() / cols
    }

    pub fn max_value(&self) -> BigRational {
        self.values
            .iter()
            .cloned()
            .max()
            .expect("fiber vector is nonempty")
    }
}

/// E(f | X): the weighted row average over each column.
pub fn conditional_expectation(f: &GridFunction) -> FiberVector {
    let g = f.geometry();
    let values = (0..g.columns())
        .map(|x| {
            (0..g.row_count())
                .map(|r| g.level_weight(r) * f.value(Cell::new(x, r)))
                .sum()
        })
        .collect();
    FiberVector {
        geometry: g.clone(),
        values,
    }
}

/// E(|f|^2 | X), the squared relative norm per column.
pub fn relative_norm_squared(f: &GridFunction) -> FiberVector {
    conditional_expectation(&f.pointwise_mul(f).expect("same geometry"))
}

/// Report from the two exact inequalities.
#[derive(Debug, Clone)]
pub struct CauchySchwarzReport {
    /// Per-column margins |f|^2 |g|^2 - <f,g>^2, each nonnegative.
    pub pointwise_margins: Vec<BigRational>,
    pub pointwise_holds: bool,
    /// ||E(fg|X)||^2 and max_x E(|f|^2|X) * ||g||^2, with lhs <= rhs.
    pub norm_lhs_squared: BigRational,
    pub norm_rhs_squared: BigRational,
    pub norm_holds: bool,
}

impl CauchySchwarzReport {
    pub fn holds(&self) -> bool {
        self.pointwise_holds && self.norm_holds
    }
}

/// Verifies pointwise Cauchy-Schwarz and the derived norm inequality, both
/// in exact squared form.
pub fn cauchy_schwarz_check(f: &GridFunction, g: &GridFunction) -> Result<CauchySchwarzReport> {
    let rank = f.geometry().common_rank(g.geometry())?;
    let f = f.refine(rank)?;
    let g = g.refine(rank)?;
    let inner = conditional_expectation(&f.pointwise_mul(&g)?);
    let nf = relative_norm_squared(&f);
    let ng = relative_norm_squared(&g);
    let pointwise_margins: Vec<BigRational> = inner
        .values()
        .iter()
        .zip(nf.values().iter().zip(ng.values()))
        .map(|(ip, (a, b))| a * b - ip * ip)
        .collect();
    let pointwise_holds = pointwise_margins.iter().all(|m| !m.is_negative());

    let norm_lhs_squared = inner.l2_norm_squared();
    let norm_rhs_squared = nf.max_value() * g.l2_norm_squared();
    let norm_holds = norm_lhs_squared <= norm_rhs_squared;
    Ok(CauchySchwarzReport {
        pointwise_margins,
        pointwise_holds,
        norm_lhs_squared,
        norm_rhs_squared,
        norm_holds,
    })
}

/// A nonnegative norm value, stored as its exact square.
#[derive(Debug, Clone, PartialEq)]
pub struct Deviation {
    squared: BigRational,
}

impl Deviation {
    pub fn from_squared(squared: BigRational) -> Self {
        debug_assert!(!squared.is_negative());
        Deviation { squared }
    }

    pub fn squared(&self) -> &BigRational {
        &self.squared
    }

    pub fn is_zero(&self) -> bool {
        self.squared.is_zero()
    }

    /// Exact test: value >= bound, for a nonnegative rational bound.
    pub fn at_least(&self, bound: &BigRational) -> bool {
        debug_assert!(!bound.is_negative());
        self.squared >= bound * bound
    }

    /// Exact test: value == v, for a nonnegative rational v.
    pub fn equals(&self, v: &BigRational) -> bool {
        self.squared == v * v
    }

    /// Floating-point rendering (the square root).
    pub fn value(&self) -> f64 {
        crate::dyadic::rational_to_f64(&self.squared).sqrt()
    }
}

/// || E((T^n f) g | X) - (T')^n(E(f|X)) E(g|X) ||_{L^2(X)}, exactly.
pub fn mixing_deviation(
    t: &CellPermutation,
    f: &GridFunction,
    g: &GridFunction,
    n: u64,
    conv: Koopman,
) -> Result<Deviation> {
    let base = t.project_to_base()?;
    let rank = t
        .geometry()
        .common_rank(f.geometry())?
        .max(t.geometry().common_rank(g.geometry())?);
    let t = t.refine(rank)?;
    let base = base.refine(rank)?;
    let f = f.refine(rank)?;
    let g = g.refine(rank)?;

    let n = i64::try_from(n).map_err(|_| Error::TooLarge("power exceeds i64".into()))?;
    let tf = f.transport(&t, n, conv)?;
    let lhs = conditional_expectation(&tf.pointwise_mul(&g)?);
    let ef_n = conditional_expectation(&f).transport(&base, n, conv);
    let eg = conditional_expectation(&g);
    let delta = lhs.sub(&ef_n.pointwise_mul(&eg));
    Ok(Deviation::from_squared(delta.l2_norm_squared()))
}

/// The deviation terms for n = 0..N-1 with running Cesàro averages.
#[derive(Debug, Clone)]
pub struct DeviationSequence {
    pub terms: Vec<Deviation>,
    /// cesaro[m] = (1/(m+1)) * sum of the first m+1 deviations (floating).
    pub cesaro: Vec<f64>,
}

impl DeviationSequence {
    pub fn min_term(&self) -> Option<&Deviation> {
        self.terms
            .iter()
            .min_by(|a, b| a.squared.cmp(&b.squared))
    }

    pub fn final_cesaro(&self) -> Option<f64> {
        self.cesaro.last().copied()
    }

    pub fn mean(&self) -> f64 {
        self.final_cesaro().unwrap_or(0.0)
    }
}

pub fn cesaro_sequence(
    t: &CellPermutation,
    f: &GridFunction,
    g: &GridFunction,
    n_terms: u64,
    conv: Koopman,
) -> Result<DeviationSequence> {
    let mut terms = Vec::with_capacity(n_terms as usize);
    let mut cesaro = Vec::with_capacity(n_terms as usize);
    let mut running = 0.0f64;
    for n in 0..n_terms {
        let d = mixing_deviation(t, f, g, n, conv)?;
        running += d.value();
        terms.push(d);
        cesaro.push(running / (n as f64 + 1.0));
    }
    Ok(DeviationSequence { terms, cesaro })
}

/// The relative-mean-zero step function with value 1 on every level except
/// the first, which carries -(sum of the other weights)/w_0.
pub fn witness_function(geometry: &GridGeometry) -> Result<GridFunction> {
    let rows = geometry.row_count();
    if rows < 2 {
        return Err(Error::Precondition(
            "witness needs at least two levels".into(),
        ));
    }
    let weights = geometry.level_weights();
    let rest: BigRational = weights[1..].iter().sum();
    let mut levels = vec![BigRational::one(); rows as usize];
    levels[0] = -rest / weights[0].clone();
    GridFunction::from_levels(geometry.clone(), &levels)
}

/// The witness on a rank-0 discrete grid with the given weights.
pub fn weak_mixing_witness(weights: &[BigRational]) -> Result<GridFunction> {
    let g = GridGeometry::discrete(0, weights.to_vec())?;
    witness_function(&g)
}

/// Default factorial bound for the exhaustive witness enumeration.
pub const WITNESS_FACTORIAL_BOUND: u32 = 8;

/// min over all L! level permutations of |sum_j w_j f(j) f(sigma(j))| for the
/// witness f: the exhaustive certificate that every correlation value is
/// bounded away from zero.
pub fn witness_lower_bound(weights: &[BigRational], factorial_bound: u32) -> Result<BigRational> {
    let levels = weights.len();
    if levels < 2 {
        return Err(Error::Precondition("need at least two levels".into()));
    }
    if levels as u32 > factorial_bound {
        return Err(Error::TooLarge(format!(
            "{levels}! permutations exceed the enumeration bound {factorial_bound}!"
        )));
    }
    let f = weak_mixing_witness(weights)?;
    let fv: Vec<BigRational> = (0..levels)
        .map(|r| f.value(Cell::new(0, r as u32)).clone())
        .collect();

    let mut best: Option<BigRational> = None;
    let mut perm: Vec<usize> = (0..levels).collect();
    permute_all(&mut perm, 0, &mut |sigma| {
        let s: BigRational = (0..levels)
            .map(|j| weights[j].clone() * &fv[j] * &fv[sigma[j]])
            .sum();
        let a = s.abs();
        if best.as_ref().map(|b| &a < b).unwrap_or(true) {
            best = Some(a);
        }
    });
    let best = best.expect("at least one permutation");
    if !best.is_positive() {
        return Err(Error::Precondition(
            "witness correlation vanished for some level permutation".into(),
        ));
    }
    Ok(best)
}

fn permute_all(items: &mut Vec<usize>, start: usize, visit: &mut impl FnMut(&[usize])) {
    if start == items.len() {
        visit(items);
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        permute_all(items, start + 1, visit);
        items.swap(start, i);
    }
}

/// Indicator of the bottom half of a square grid (y < 1/2; rows are indexed
/// from the top, so these are the high row indices).
pub fn half_square_indicator(geometry: &GridGeometry) -> Result<GridFunction> {
    if !geometry.is_square() || geometry.rank() < 1 {
        return Err(Error::Precondition(
            "the half square needs a square grid of rank >= 1".into(),
        ));
    }
    let half = geometry.row_count() / 2;
    let cells = geometry.cells().filter(|c| c.row >= half);
    let set = DyadicSet::from_cells(geometry.clone(), cells)?;
    Ok(GridFunction::indicator(&set))
}

/// The deviation at step k of the half-square indicator against itself;
/// whenever t^k is the identity this equals 1/4 exactly.
pub fn strong_mixing_statistic(t: &CellPermutation, k: u64, conv: Koopman) -> Result<Deviation> {
    let chi = half_square_indicator(t.geometry())?;
    mixing_deviation(t, &chi, &chi, k, conv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{parse_weights, uniform_weights};
    use crate::perm::{random_column_preserving, random_extension};

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn sq(rank: u32) -> GridGeometry {
        GridGeometry::square(rank).unwrap()
    }

    #[test]
    fn conditional_expectation_examples() {
        // A constant has itself as conditional expectation.
        let c = GridFunction::constant(sq(2), rat(7, 3));
        assert!(conditional_expectation(&c)
            .values()
            .iter()
            .all(|v| *v == rat(7, 3)));

        // The witness has relative mean zero.
        let w = weak_mixing_witness(&uniform_weights(2)).unwrap();
        assert!(conditional_expectation(&w).is_zero());
        let w = weak_mixing_witness(&parse_weights("1/2,1/4,1/4").unwrap()).unwrap();
        assert!(conditional_expectation(&w).is_zero());

        // The half-square indicator averages to 1/2 in every column.
        let chi = half_square_indicator(&sq(2)).unwrap();
        assert!(conditional_expectation(&chi)
            .values()
            .iter()
            .all(|v| *v == rat(1, 2)));
    }

    #[test]
    fn conditional_expectation_is_linear_and_averaging() {
        let g = sq(1);
        let f1 = GridFunction::from_values(
            g.clone(),
            vec![rat(1, 2), rat(-3, 4), rat(2, 1), rat(0, 1)],
        )
        .unwrap();
        let f2 = GridFunction::from_values(
            g.clone(),
            vec![rat(5, 3), rat(1, 7), rat(-2, 5), rat(1, 2)],
        )
        .unwrap();
        let c = rat(3, 2);
        let lhs = conditional_expectation(&f1.scale(&c).add(&f2).unwrap());
        let e1 = conditional_expectation(&f1);
        let e2 = conditional_expectation(&f2);
        for x in 0..g.columns() {
            assert_eq!(*lhs.value(x), &c * e1.value(x) + e2.value(x));
        }
        // E(E(f|X) g | X) = E(f|X) E(g|X).
        let lift = GridFunction::from_fiber(&e1);
        let lhs = conditional_expectation(&lift.pointwise_mul(&f2).unwrap());
        for x in 0..g.columns() {
            assert_eq!(*lhs.value(x), e1.value(x) * e2.value(x));
        }
    }

    #[test]
    fn relative_norm_examples() {
        let one = GridFunction::constant(sq(1), rat(1, 1));
        assert!(relative_norm_squared(&one)
            .values()
            .iter()
            .all(|v| *v == rat(1, 1)));

        let w = weak_mixing_witness(&uniform_weights(2)).unwrap();
        assert!(relative_norm_squared(&w)
            .values()
            .iter()
            .all(|v| *v == rat(1, 1)));

        let chi = half_square_indicator(&sq(1)).unwrap();
        assert!(relative_norm_squared(&chi)
            .values()
            .iter()
            .all(|v| *v == rat(1, 2)));
    }

    #[test]
    fn cauchy_schwarz_cases() {
        let g = sq(1);
        let f = GridFunction::from_values(
            g.clone(),
            vec![rat(1, 2), rat(-3, 4), rat(2, 1), rat(0, 1)],
        )
        .unwrap();
        // Equality pointwise for (f, f).
        let report = cauchy_schwarz_check(&f, &f).unwrap();
        assert!(report.holds());
        assert!(report.pointwise_margins.iter().all(|m| m.is_zero()));

        // Indicators of disjoint row sets have vanishing inner product.
        let top = GridFunction::indicator(
            &DyadicSet::from_cells(g.clone(), [Cell::new(0, 0), Cell::new(1, 0)]).unwrap(),
        );
        let bottom = GridFunction::indicator(
            &DyadicSet::from_cells(g, [Cell::new(0, 1), Cell::new(1, 1)]).unwrap(),
        );
        let report = cauchy_schwarz_check(&top, &bottom).unwrap();
        assert!(report.holds());
        assert!(report.norm_lhs_squared.is_zero());
    }

    #[test]
    fn fubini_identity_exact() {
        // ||E(|g|^2|X)^{1/2}||_{L^2(X)}^2 equals ||g||_{L^2(Z)}^2.
        for seed in 0..20u64 {
            let g = sq(2);
            let vals: Vec<BigRational> = (0..g.cell_count())
                .map(|i| rat((seed as i64 * 31 + i as i64 * 7) % 11 - 5, 3))
                .collect();
            let f = GridFunction::from_values(g, vals).unwrap();
            let lhs = {
                let norms = relative_norm_squared(&f);
                // mean of the squared relative norms over the base
                let cols = BigRational::from_integer(BigInt::from(norms.values().len()));
                norms.values().iter().sum::<BigRational>() / cols
            };
            assert_eq!(lhs, f.l2_norm_squared());
        }
    }

    #[test]
    fn deviation_witness_identity_and_swap() {
        // On the two-level uniform grid the witness is (-1, 1). A
        // level-preserving map gives per-column value 1; a level swap gives
        // -1. Either way the deviation norm is exactly 1.
        let g = GridGeometry::discrete_uniform(1, 2).unwrap();
        let w = witness_function(&g).unwrap();

        let id = CellPermutation::identity(g.clone());
        let d = mixing_deviation(&id, &w, &w, 1, Koopman::default()).unwrap();
        assert!(d.equals(&rat(1, 1)));

        let swap = CellPermutation::from_fn(g, |c| Cell::new(c.column, 1 - c.row)).unwrap();
        let d = mixing_deviation(&swap, &w, &w, 1, Koopman::default()).unwrap();
        assert!(d.equals(&rat(1, 1)));
    }

    #[test]
    fn deviation_zero_for_constants() {
        let g = sq(2);
        let c = GridFunction::constant(g.clone(), rat(3, 7));
        let t = random_column_preserving(2, 77).unwrap();
        for n in 0..6 {
            let d = mixing_deviation(&t, &c, &c, n, Koopman::default()).unwrap();
            assert!(d.is_zero());
        }
    }

    #[test]
    fn deviation_invariant_under_fiber_constant_shift() {
        // Adding a lift of a base function to f does not change the deviation
        // when g has relative mean zero.
        let g = GridGeometry::discrete_uniform(2, 2).unwrap();
        let w = witness_function(&g).unwrap();
        let t = random_extension(&g, 5).unwrap();
        let base_vals: Vec<BigRational> = (0..g.columns())
            .map(|x| rat(x as i64 % 3 - 1, 2))
            .collect();
        let lift = GridFunction::from_fiber(&FiberVector {
            geometry: g.clone(),
            values: base_vals,
        });
        let shifted = w.add(&lift).unwrap();
        for n in 0..8 {
            let a = mixing_deviation(&t, &w, &w, n, Koopman::default()).unwrap();
            let b = mixing_deviation(&t, &shifted, &w, n, Koopman::default()).unwrap();
            assert_eq!(a.squared(), b.squared());
        }
    }

    #[test]
    fn cesaro_periodicity_and_constants() {
        let t = random_column_preserving(1, 3).unwrap();
        let g = t.geometry().clone();
        let c = GridFunction::constant(g.clone(), rat(2, 1));
        let seq = cesaro_sequence(&t, &c, &c, 10, Koopman::default()).unwrap();
        assert!(seq.terms.iter().all(|d| d.is_zero()));

        // Terms repeat with the permutation's period.
        use num::ToPrimitive;
        let w = witness_function(&g).unwrap();
        let p = t.period().to_u64().unwrap();
        let seq = cesaro_sequence(&t, &w, &w, 3 * p, Koopman::default()).unwrap();
        for n in 0..(2 * p) as usize {
            assert_eq!(
                seq.terms[n].squared(),
                seq.terms[n + p as usize].squared()
            );
        }
    }

    #[test]
    fn witness_levels_match_hand_computation() {
        let w = weak_mixing_witness(&uniform_weights(2)).unwrap();
        assert_eq!(*w.value(Cell::new(0, 0)), rat(-1, 1));
        assert_eq!(*w.value(Cell::new(0, 1)), rat(1, 1));
        let w = weak_mixing_witness(&uniform_weights(3)).unwrap();
        assert_eq!(*w.value(Cell::new(0, 0)), rat(-2, 1));
        assert_eq!(*w.value(Cell::new(0, 1)), rat(1, 1));
        assert_eq!(*w.value(Cell::new(0, 2)), rat(1, 1));
        assert!(weak_mixing_witness(&uniform_weights(1)).is_err());
    }

    #[test]
    fn witness_lower_bound_values() {
        let b = witness_lower_bound(&uniform_weights(2), WITNESS_FACTORIAL_BOUND).unwrap();
        assert_eq!(b, rat(1, 1));
        let b = witness_lower_bound(&uniform_weights(3), WITNESS_FACTORIAL_BOUND).unwrap();
        assert_eq!(b, rat(1, 1));
        let b = witness_lower_bound(&parse_weights("1/2,1/4,1/4").unwrap(), 8).unwrap();
        assert_eq!(b, rat(1, 2));
        assert!(b.is_positive());
        assert!(matches!(
            witness_lower_bound(&uniform_weights(9), 8),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn every_term_clears_the_witness_bound() {
        let weights = parse_weights("1/2,1/4,1/4").unwrap();
        let bound = witness_lower_bound(&weights, WITNESS_FACTORIAL_BOUND).unwrap();
        for seed in 0..10 {
            let g = GridGeometry::discrete(2, weights.clone()).unwrap();
            let t = random_extension(&g, 600 + seed).unwrap();
            let w = witness_function(&g).unwrap();
            let seq = cesaro_sequence(&t, &w, &w, 16, Koopman::default()).unwrap();
            for d in &seq.terms {
                assert!(d.at_least(&bound));
            }
        }
    }

    #[test]
    fn strong_mixing_quarter_at_the_period() {
        use num::ToPrimitive;
        for rank in 1..=2u32 {
            for seed in 0..5 {
                let t = random_column_preserving(rank, 70 + seed).unwrap();
                let p = t.period().to_u64().unwrap();
                let d = strong_mixing_statistic(&t, p, Koopman::default()).unwrap();
                assert!(d.equals(&rat(1, 4)), "statistic at the period is not 1/4");
            }
        }
        // Identity at k = 1 is the smallest case.
        let id = CellPermutation::identity(sq(1));
        let d = strong_mixing_statistic(&id, 1, Koopman::default()).unwrap();
        assert!(d.equals(&rat(1, 4)));
        // Rank 0 has no representable half square.
        let id0 = CellPermutation::identity(sq(0));
        assert!(strong_mixing_statistic(&id0, 1, Koopman::default()).is_err());
    }

    #[test]
    fn forward_convention_also_supported() {
        let g = GridGeometry::discrete_uniform(1, 2).unwrap();
        let w = witness_function(&g).unwrap();
        let t = random_extension(&g, 8).unwrap();
        let a = mixing_deviation(&t, &w, &w, 3, Koopman::ForwardTransport).unwrap();
        let bound = witness_lower_bound(&uniform_weights(2), 8).unwrap();
        assert!(a.at_least(&bound));
    }
}
