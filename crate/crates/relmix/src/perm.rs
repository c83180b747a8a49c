//! Permutations of dyadic intervals and dyadic cells: group operations,
//! cycle structure, the extension (column-preserving) structure, fiber
//! actions, and seeded random generation.

use crate::error::{Error, Result};
use crate::geometry::{Cell, GridGeometry, MAX_RANK};
use crate::set::DyadicSet;
use num::BigUint;
use num::Integer;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A permutation of the 2^rank dyadic intervals of the unit line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalPermutation {
    rank: u32,
    image: Vec<u32>,
}

impl IntervalPermutation {
    pub fn identity(rank: u32) -> Result<Self> {
        check_rank(rank)?;
        Ok(IntervalPermutation {
            rank,
            image: (0..1u32 << rank).collect(),
        })
    }

    pub fn from_image(rank: u32, image: Vec<u32>) -> Result<Self> {
        check_rank(rank)?;
        let n = 1usize << rank;
        if image.len() != n || !is_bijection(&image) {
            return Err(Error::Precondition(
                "interval image is not a bijection of 0..2^rank".into(),
            ));
        }
        Ok(IntervalPermutation { rank, image })
    }

    /// Builds from disjoint cycles of 1-based interval labels; unlisted
    /// intervals stay fixed.
    pub fn from_label_cycles(rank: u32, cycles: &[Vec<usize>]) -> Result<Self> {
        check_rank(rank)?;
        let n = 1usize << rank;
        let mut image: Vec<u32> = (0..n as u32).collect();
        apply_label_cycles(&mut image, cycles, n)?;
        IntervalPermutation::from_image(rank, image)
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn count(&self) -> usize {
        self.image.len()
    }

    pub fn apply(&self, interval: u32) -> u32 {
        self.image[interval as usize]
    }

    pub fn image(&self) -> &[u32] {
        &self.image
    }

    pub fn compose(&self, first: &IntervalPermutation) -> Result<Self> {
        let rank = self.rank.max(first.rank);
        let a = self.refine(rank)?;
        let b = first.refine(rank)?;
        let image = b.image.iter().map(|&i| a.image[i as usize]).collect();
        IntervalPermutation::from_image(rank, image)
    }

    pub fn inverse(&self) -> Self {
        let mut image = vec![0u32; self.image.len()];
        for (i, &j) in self.image.iter().enumerate() {
            image[j as usize] = i as u32;
        }
        IntervalPermutation {
            rank: self.rank,
            image,
        }
    }

    pub fn power(&self, n: i64) -> Self {
        IntervalPermutation {
            rank: self.rank,
            image: power_image(&self.image, n),
        }
    }

    /// The same interval map at a finer rank: sub-intervals follow their
    /// parent rigidly.
    pub fn refine(&self, target_rank: u32) -> Result<Self> {
        if target_rank < self.rank {
            return Err(Error::Rank(format!(
                "target rank {target_rank} below current rank {}",
                self.rank
            )));
        }
        check_rank(target_rank)?;
        let shift = target_rank - self.rank;
        let n = 1usize << target_rank;
        let mut image = Vec::with_capacity(n);
        for i in 0..n as u32 {
            let parent = i >> shift;
            let offset = i & ((1 << shift) - 1);
            image.push((self.image[parent as usize] << shift) | offset);
        }
        Ok(IntervalPermutation {
            rank: target_rank,
            image,
        })
    }

    pub fn cycles(&self) -> CycleDecomposition {
        CycleDecomposition::of(&self.image)
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &j)| i as u32 == j)
    }
}

/// A measure-preserving permutation of the rank-k dyadic cells of a grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellPermutation {
    geometry: GridGeometry,
    image: Vec<u32>, // cell index -> cell index
}

impl CellPermutation {
    pub fn identity(geometry: GridGeometry) -> Self {
        let n = geometry.cell_count();
        CellPermutation {
            geometry,
            image: (0..n as u32).collect(),
        }
    }

    pub fn from_image(geometry: GridGeometry, image: Vec<u32>) -> Result<Self> {
        if image.len() != geometry.cell_count() || !is_bijection(&image) {
            return Err(Error::Precondition(
                "cell image is not a bijection of the grid".into(),
            ));
        }
        let p = CellPermutation { geometry, image };
        p.check_measure_preserving()?;
        Ok(p)
    }

    pub fn from_fn(geometry: GridGeometry, f: impl Fn(Cell) -> Cell) -> Result<Self> {
        let image = (0..geometry.cell_count())
            .map(|i| {
                let c = f(geometry.cell_at(i));
                geometry.index_of(c) as u32
            })
            .collect();
        CellPermutation::from_image(geometry, image)
    }

    /// Builds from disjoint cycles of 1-based row-major cell labels.
    pub fn from_label_cycles(geometry: GridGeometry, cycles: &[Vec<usize>]) -> Result<Self> {
        let n = geometry.cell_count();
        let mut image: Vec<u32> = (0..n as u32).collect();
        apply_label_cycles(&mut image, cycles, n)?;
        CellPermutation::from_image(geometry, image)
    }

    /// Extension of a base permutation by one row permutation per column:
    /// (c, r) -> (base(c), rows[c](r)).
    pub fn extension(
        base: &IntervalPermutation,
        geometry: GridGeometry,
        rows_per_column: &[Vec<u32>],
    ) -> Result<Self> {
        if geometry.rank() != base.rank() {
            return Err(Error::Geometry("base rank must match grid rank".into()));
        }
        if rows_per_column.len() != geometry.columns() as usize {
            return Err(Error::Precondition(
                "need one row permutation per column".into(),
            ));
        }
        let rc = geometry.row_count() as usize;
        for rows in rows_per_column {
            if rows.len() != rc || !is_bijection(rows) {
                return Err(Error::Precondition(
                    "row action is not a bijection of the rows".into(),
                ));
            }
        }
        CellPermutation::from_fn(geometry, |c| {
            Cell::new(
                base.apply(c.column),
                rows_per_column[c.column as usize][c.row as usize],
            )
        })
    }

    fn check_measure_preserving(&self) -> Result<()> {
        if self.geometry.is_square() || self.geometry.uniform_cell_measure() {
            return Ok(());
        }
        for (i, &j) in self.image.iter().enumerate() {
            let a = self.geometry.cell_at(i);
            let b = self.geometry.cell_at(j as usize);
            if self.geometry.level_weight(a.row) != self.geometry.level_weight(b.row) {
                return Err(Error::Precondition(format!(
                    "not measure-preserving: {a:?} (weight {}) maps to {b:?} (weight {})",
                    self.geometry.level_weight(a.row),
                    self.geometry.level_weight(b.row)
                )));
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn apply(&self, cell: Cell) -> Cell {
        self.geometry
            .cell_at(self.image[self.geometry.index_of(cell)] as usize)
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &j)| i as u32 == j)
    }

    /// apply `first`, then `self`.
    pub fn compose(&self, first: &CellPermutation) -> Result<Self> {
        let rank = self.geometry.common_rank(&first.geometry)?;
        let a = self.refine(rank)?;
        let b = first.refine(rank)?;
        let image = b.image.iter().map(|&i| a.image[i as usize]).collect();
        Ok(CellPermutation {
            geometry: a.geometry,
            image,
        })
    }

    pub fn inverse(&self) -> Self {
        let mut image = vec![0u32; self.image.len()];
        for (i, &j) in self.image.iter().enumerate() {
            image[j as usize] = i as u32;
        }
        CellPermutation {
            geometry: self.geometry.clone(),
            image,
        }
    }

    /// t^n for any integer n (negative powers via the inverse), computed by
    /// stepping each cycle n mod its length.
    pub fn power(&self, n: i64) -> Self {
        CellPermutation {
            geometry: self.geometry.clone(),
            image: power_image(&self.image, n),
        }
    }

    /// The same cell map at a finer rank: sub-cells follow their parent cell
    /// rigidly.
    pub fn refine(&self, target_rank: u32) -> Result<Self> {
        let rank = self.geometry.rank();
        if target_rank < rank {
            return Err(Error::Rank(format!(
                "target rank {target_rank} below current rank {rank}"
            )));
        }
        if target_rank == rank {
            return Ok(self.clone());
        }
        let fine = self.geometry.refined(target_rank)?;
        let shift = target_rank - rank;
        let mask = (1u32 << shift) - 1;
        let square = self.geometry.is_square();
        let image = (0..fine.cell_count())
            .map(|i| {
                let c = fine.cell_at(i);
                let parent = self.geometry.parent_of(c, target_rank);
                let img = self.apply(parent);
                let col = (img.column << shift) | (c.column & mask);
                let row = if square {
                    (img.row << shift) | (c.row & mask)
                } else {
                    c.row
                };
                fine.index_of(Cell::new(col, row)) as u32
            })
            .collect();
        Ok(CellPermutation {
            geometry: fine,
            image,
        })
    }

    /// Compares the underlying maps after refining to a common rank.
    pub fn same_action(&self, other: &CellPermutation) -> Result<bool> {
        let rank = self.geometry.common_rank(&other.geometry)?;
        Ok(self.refine(rank)?.image == other.refine(rank)?.image)
    }

    /// The base interval permutation this permutation extends. Fails with a
    /// witness pair when two cells of one column land in different columns.
    pub fn project_to_base(&self) -> Result<IntervalPermutation> {
        let cols = self.geometry.columns();
        let rows = self.geometry.row_count();
        let mut image = Vec::with_capacity(cols as usize);
        for c in 0..cols {
            let first = self.apply(Cell::new(c, 0));
            for r in 1..rows {
                let other = self.apply(Cell::new(c, r));
                if other.column != first.column {
                    return Err(Error::NotColumnPreserving(
                        Cell::new(c, 0),
                        Cell::new(c, r),
                    ));
                }
            }
            image.push(first.column);
        }
        IntervalPermutation::from_image(self.geometry.rank(), image)
    }

    pub fn is_column_preserving(&self) -> bool {
        self.project_to_base().is_ok()
    }

    /// The row permutation sigma with t^n(x, i) = ((T')^n x, sigma(i)) for
    /// the given column x.
    pub fn fiber_action(&self, n: i64, column: u32) -> Result<Vec<u32>> {
        self.project_to_base()?;
        let tn = self.power(n);
        Ok((0..self.geometry.row_count())
            .map(|r| tn.apply(Cell::new(column, r)).row)
            .collect())
    }

    pub fn cycles(&self) -> CycleDecomposition {
        CycleDecomposition::of(&self.image)
    }

    /// Least n >= 1 with t^n = identity (lcm of cycle lengths).
    pub fn period(&self) -> BigUint {
        self.cycles().period()
    }

    /// Image of a set: { t(c) : c in s }, at the common refinement rank.
    pub fn image_of_set(&self, s: &DyadicSet) -> Result<DyadicSet> {
        let rank = self.geometry.common_rank(s.geometry())?;
        let t = self.refine(rank)?;
        let s = s.refine(rank)?;
        DyadicSet::from_cells(t.geometry.clone(), s.cells().map(|c| t.apply(c)))
    }
}

/// Disjoint cycles covering 0..n, ordered by smallest element; each cycle
/// starts at its smallest element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleDecomposition {
    cycles: Vec<Vec<u32>>,
}

impl CycleDecomposition {
    pub fn of(image: &[u32]) -> Self {
        let mut seen = vec![false; image.len()];
        let mut cycles = Vec::new();
        for start in 0..image.len() {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut cur = start;
            while !seen[cur] {
                seen[cur] = true;
                cycle.push(cur as u32);
                cur = image[cur] as usize;
            }
            cycles.push(cycle);
        }
        CycleDecomposition { cycles }
    }

    pub fn cycles(&self) -> &[Vec<u32>] {
        &self.cycles
    }

    pub fn count(&self) -> usize {
        self.cycles.len()
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.cycles.iter().map(|c| c.len()).collect()
    }

    pub fn period(&self) -> BigUint {
        self.cycles
            .iter()
            .fold(BigUint::from(1u32), |acc, c| acc.lcm(&BigUint::from(c.len())))
    }
}

fn power_image(image: &[u32], n: i64) -> Vec<u32> {
    let mut out = vec![0u32; image.len()];
    for cycle in CycleDecomposition::of(image).cycles() {
        let len = cycle.len() as i64;
        let shift = n.rem_euclid(len) as usize;
        for (i, &c) in cycle.iter().enumerate() {
            out[c as usize] = cycle[(i + shift) % cycle.len()];
        }
    }
    out
}

fn is_bijection(image: &[u32]) -> bool {
    let mut seen = vec![false; image.len()];
    for &j in image {
        let j = j as usize;
        if j >= image.len() || seen[j] {
            return false;
        }
        seen[j] = true;
    }
    true
}

fn apply_label_cycles(image: &mut [u32], cycles: &[Vec<usize>], n: usize) -> Result<()> {
    let mut touched = vec![false; n];
    for cycle in cycles {
        for &label in cycle {
            if label == 0 || label > n {
                return Err(Error::Precondition(format!(
                    "label {label} out of range 1..={n}"
                )));
            }
            if touched[label - 1] {
                return Err(Error::Precondition(format!(
                    "label {label} appears in two cycles"
                )));
            }
            touched[label - 1] = true;
        }
        for (i, &label) in cycle.iter().enumerate() {
            let next = cycle[(i + 1) % cycle.len()];
            image[label - 1] = (next - 1) as u32;
        }
    }
    Ok(())
}

fn check_rank(rank: u32) -> Result<()> {
    if rank > MAX_RANK {
        return Err(Error::Rank(format!("rank {rank} exceeds the cap {MAX_RANK}")));
    }
    Ok(())
}

fn random_perm_vec(n: usize, rng: &mut impl Rng) -> Vec<u32> {
    let mut v: Vec<u32> = (0..n as u32).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        v.swap(i, j);
    }
    v
}

/// Seeded uniformly random column-preserving permutation of the rank-k
/// square: a uniform base permutation with independent uniform row
/// permutations per column.
pub fn random_column_preserving(rank: u32, seed: u64) -> Result<CellPermutation> {
    let geometry = GridGeometry::square(rank)?;
    random_extension(&geometry, seed)
}

/// Same, over any grid; on weighted discrete grids the per-column row
/// permutations are uniform within each weight class, so the result is
/// measure-preserving.
pub fn random_extension(geometry: &GridGeometry, seed: u64) -> Result<CellPermutation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = geometry.columns() as usize;
    let base = IntervalPermutation::from_image(geometry.rank(), random_perm_vec(cols, &mut rng))?;
    random_extension_of_base(geometry, &base, &mut rng)
}

/// Random extension over a seeded random cyclic base (a single 2^rank-cycle).
pub fn random_cyclic_extension(geometry: &GridGeometry, seed: u64) -> Result<CellPermutation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = geometry.columns() as usize;
    // A uniform cyclic permutation: visit the columns in a random order and
    // chain them into one cycle.
    let order = random_perm_vec(cols, &mut rng);
    let mut image = vec![0u32; cols];
    for i in 0..cols {
        image[order[i] as usize] = order[(i + 1) % cols];
    }
    let base = IntervalPermutation::from_image(geometry.rank(), image)?;
    random_extension_of_base(geometry, &base, &mut rng)
}

fn random_extension_of_base(
    geometry: &GridGeometry,
    base: &IntervalPermutation,
    rng: &mut impl Rng,
) -> Result<CellPermutation> {
    let cols = geometry.columns() as usize;
    let rows = geometry.row_count() as usize;
    let mut rows_per_column = Vec::with_capacity(cols);
    for _ in 0..cols {
        if geometry.uniform_cell_measure() {
            rows_per_column.push(random_perm_vec(rows, rng));
        } else {
            // Shuffle independently inside each weight class.
            let mut perm: Vec<u32> = (0..rows as u32).collect();
            let mut classes: Vec<Vec<u32>> = Vec::new();
            let mut class_of: Vec<usize> = Vec::new();
            let weights = geometry.level_weights();
            for (r, w) in weights.iter().enumerate() {
                let pos = weights[..r].iter().position(|x| x == w);
                match pos {
                    Some(p) => {
                        let cls = class_of[p];
                        classes[cls].push(r as u32);
                        class_of.push(cls);
                    }
                    None => {
                        class_of.push(classes.len());
                        classes.push(vec![r as u32]);
                    }
                }
            }
            for class in classes {
                let shuffled = {
                    let mut v = class.clone();
                    for i in (1..v.len()).rev() {
                        let j = rng.gen_range(0..=i);
                        v.swap(i, j);
                    }
                    v
                };
                for (src, dst) in class.iter().zip(shuffled) {
                    perm[*src as usize] = dst;
                }
            }
            rows_per_column.push(perm);
        }
    }
    CellPermutation::extension(base, geometry.clone(), &rows_per_column)
}

/// Seeded random measure-preserving cell bijection (not required to be
/// column-preserving): a uniform permutation within each weight class of
/// cells. On square grids this is a uniform permutation of all cells.
pub fn random_cell_bijection(geometry: &GridGeometry, seed: u64) -> Result<CellPermutation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if geometry.uniform_cell_measure() {
        let image = random_perm_vec(geometry.cell_count(), &mut rng);
        return CellPermutation::from_image(geometry.clone(), image);
    }
    let mut image: Vec<u32> = (0..geometry.cell_count() as u32).collect();
    let weights = geometry.level_weights();
    let mut class_rows: Vec<Vec<u32>> = Vec::new();
    for (r, w) in weights.iter().enumerate() {
        match weights[..r].iter().position(|x| x == w) {
            Some(p) => {
                let idx = class_rows.iter().position(|c| c.contains(&(p as u32))).unwrap();
                class_rows[idx].push(r as u32);
            }
            None => class_rows.push(vec![r as u32]),
        }
    }
    for rows in class_rows {
        let cells: Vec<u32> = rows
            .iter()
            .flat_map(|&r| {
                (0..geometry.columns()).map(move |c| (r, c))
            })
            .map(|(r, c)| geometry.index_of(Cell::new(c, r)) as u32)
            .collect();
        let mut shuffled = cells.clone();
        for i in (1..shuffled.len()).rev() {
            let j = rng.gen_range(0..=i);
            shuffled.swap(i, j);
        }
        for (src, dst) in cells.iter().zip(shuffled) {
            image[*src as usize] = dst;
        }
    }
    CellPermutation::from_image(geometry.clone(), image)
}

/// Replaces t on a two-cell set A (two cells of equal weight in different
/// columns) by the crossed-over images, producing a measure-preserving S
/// that agrees with t off A, is not column-preserving, and has d'(S, t) =
/// measure(A) < epsilon. Refines t as needed to make A small enough.
pub fn perturb_off_extension(
    t: &CellPermutation,
    epsilon: &crate::dyadic::Dyadic,
    cap: u32,
) -> Result<CellPermutation> {
    if !epsilon.is_positive() {
        return Err(Error::Precondition("epsilon must be positive".into()));
    }
    t.project_to_base()?;
    let g = t.geometry();
    if g.row_count() < 2 {
        return Err(Error::Precondition(
            "grid needs at least two rows for a non-cylinder two-cell set".into(),
        ));
    }
    // Smallest-weight row gives the smallest representable two-cell set.
    let row = {
        let weights = g.level_weights();
        let min = weights.iter().min().expect("nonempty");
        weights.iter().position(|w| w == min).unwrap() as u32
    };
    let cap = cap.min(MAX_RANK);
    let mut rank = g.rank().max(1);
    loop {
        if rank > cap {
            return Err(Error::Rank(format!(
                "no two-cell set of measure < {epsilon} exists within the rank cap {cap}"
            )));
        }
        let fine_g = g.refined(rank)?;
        let fine_row = if fine_g.is_square() {
            row << (rank - g.rank())
        } else {
            row
        };
        let cell_m = fine_g.cell_measure(Cell::new(0, fine_row));
        let small_enough = match cell_m {
            Ok(m) => &(&m + &m) < epsilon,
            Err(_) => {
                // Non-dyadic weights: compare rationally.
                let m = fine_g.cell_measure_rational(Cell::new(0, fine_row));
                let two_m = &m + &m;
                two_m < epsilon.to_rational()
            }
        };
        if small_enough {
            let fine = t.refine(rank)?;
            let a = Cell::new(0, fine_row);
            let b = Cell::new(1, fine_row);
            let (ia, ib) = (fine_g.index_of(a), fine_g.index_of(b));
            let mut image = fine.image.clone();
            image.swap(ia, ib);
            let s = CellPermutation {
                geometry: fine_g,
                image,
            };
            debug_assert!(s.project_to_base().is_err());
            return Ok(s);
        }
        rank += 1;
    }
}
