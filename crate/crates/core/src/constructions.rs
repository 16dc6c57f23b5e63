//! The explicit measures and rectangle families of the bi-tree counterexamples.
//!
//! Both constructions split the unit square into `2^L` diagonal squares `Q_j`
//! (both axis paths equal to the `L`-bit expansion of `j`) and place the same
//! configuration of South-West corner boxes in every `Q_j`. The corner box of
//! `Q_j` at relative depths `(a, b)` has axis paths `path(j)·0^a` and
//! `path(j)·0^b`.
//!
//! For such configurations the join kernel splits into a within-square term
//! `(L + min(a, a') + 1)(L + min(b, b') + 1)` and, for boxes in different
//! squares, `(ℓ + 1)²` with `ℓ` the common prefix length of the two indices.
//! Summed over all other squares the latter is a constant independent of `j`,
//! which gives closed forms for potentials and energies at any scale.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{BoxSet, DyadicBox, DyadicInterval};
use crate::measure::AtomicMeasure;
use crate::solver::{maximize_dual, DenseGram, SolverOptions};
use crate::sum::compensated_sum;

/// Largest number of boxes an explicit build may produce.
pub const MAX_EXPLICIT_BOXES: u64 = 1 << 22;

const MAX_LEVELS: usize = 40;

fn check_levels(levels: usize) -> Result<()> {
    if levels > MAX_LEVELS {
        return Err(Error::InvalidParameters(format!(
            "{levels} diagonal levels exceed the supported {MAX_LEVELS}"
        )));
    }
    Ok(())
}

fn check_explicit(count: u64) -> Result<()> {
    if count > MAX_EXPLICIT_BOXES {
        return Err(Error::InvalidParameters(format!(
            "explicit construction of {count} boxes exceeds {MAX_EXPLICIT_BOXES}; use the closed forms"
        )));
    }
    Ok(())
}

/// Axis path of the diagonal square `Q_j`.
pub fn diagonal_path(j: u64, levels: usize) -> Result<DyadicInterval> {
    DyadicInterval::from_index(levels, j)
}

/// The South-West corner box of `Q_j` at relative depths `(a, b)`.
pub fn corner_box(j: u64, levels: usize, a: usize, b: usize) -> Result<DyadicBox> {
    let q = diagonal_path(j, levels)?;
    Ok(DyadicBox::rectangle(q.with_zeros(a), q.with_zeros(b)))
}

/// Join kernel of two corner boxes of the same square.
pub fn corner_kernel(levels: usize, (a, b): (usize, usize), (a2, b2): (usize, usize)) -> f64 {
    (levels + a.min(a2) + 1) as f64 * (levels + b.min(b2) + 1) as f64
}

/// `Σ_{j' ≠ j} (ℓ(j, j') + 1)²`; exactly `2^{L−ℓ−1}` indices share a prefix of
/// length exactly `ℓ` with any given `j`.
pub fn off_diagonal_sum(levels: usize) -> f64 {
    (0..levels)
        .map(|l| 2f64.powi((levels - l - 1) as i32) * ((l + 1) * (l + 1)) as f64)
        .sum()
}

/// [`off_diagonal_sum`] by direct summation over the other squares.
pub fn off_diagonal_sum_at(j: u64, levels: usize) -> f64 {
    let shift = 64 - levels as u32;
    compensated_sum((0..1u64 << levels).filter(|&k| k != j).map(|k| {
        let l = ((j ^ k) << shift).leading_zeros() as f64;
        (l + 1.0) * (l + 1.0)
    }))
}

/// Mass at one corner box, repeated in every diagonal square.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CornerAtom {
    pub a: usize,
    pub b: usize,
    pub mass: f64,
}

/// Potential at a corner box split by the position of the containing boxes
/// `R` relative to its square `Q_j`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PotentialSplit {
    /// `R ⊇ Q_j`.
    pub v1: f64,
    /// `R ⊆ Q_j`, `R ≠ Q_j`.
    pub v2: f64,
    /// Vertical: x-side strictly inside `Q_j`'s, y-side strictly containing it.
    pub v3: f64,
    /// Horizontal: the mirror image of `v3`.
    pub v4: f64,
}

impl PotentialSplit {
    pub fn total(&self) -> f64 {
        self.v1 + self.v2 + self.v3 + self.v4
    }
}

/// A measure that charges the same corner boxes in each of the `2^L`
/// diagonal squares.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalMeasure {
    levels: usize,
    atoms: Vec<CornerAtom>,
    off_diagonal: f64,
}

impl DiagonalMeasure {
    pub fn new(levels: usize, atoms: impl IntoIterator<Item = CornerAtom>) -> Result<Self> {
        check_levels(levels)?;
        let atoms: Vec<CornerAtom> = atoms.into_iter().collect();
        if let Some(bad) = atoms.iter().find(|c| !(c.mass.is_finite() && c.mass >= 0.0)) {
            return Err(Error::InvalidMass(bad.mass));
        }
        Ok(Self {
            levels,
            atoms,
            off_diagonal: off_diagonal_sum(levels),
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn atoms(&self) -> &[CornerAtom] {
        &self.atoms
    }

    /// Number of diagonal squares.
    pub fn copies(&self) -> u64 {
        1 << self.levels
    }

    pub fn off_diagonal(&self) -> f64 {
        self.off_diagonal
    }

    pub fn total_mass(&self) -> f64 {
        self.copies() as f64 * compensated_sum(self.atoms.iter().map(|c| c.mass))
    }

    /// `V` at the corner box `(a, b)` of any square.
    pub fn potential(&self, a: usize, b: usize) -> f64 {
        compensated_sum(
            self.atoms
                .iter()
                .map(|c| c.mass * (corner_kernel(self.levels, (a, b), (c.a, c.b)) + self.off_diagonal)),
        )
    }

    pub fn energy(&self) -> f64 {
        self.copies() as f64 * compensated_sum(self.atoms.iter().map(|c| c.mass * self.potential(c.a, c.b)))
    }

    /// `V` at the corner box `(a, b)` split into the four classes of
    /// containing boxes.
    pub fn split_potential(&self, a: usize, b: usize) -> PotentialSplit {
        let l = self.levels;
        let mass = compensated_sum(self.atoms.iter().map(|c| c.mass));
        // boxes at depths (X, Y) ≤ (L, L) with max(X, Y) = t contain 2^{L−t} squares
        let above: f64 = (0..=l)
            .map(|t| (2 * t + 1) as f64 * 2f64.powi((l - t) as i32))
            .sum();
        let mut split = PotentialSplit {
            v1: mass * above,
            ..Default::default()
        };
        let (mut v2, mut v3, mut v4) = (Vec::new(), Vec::new(), Vec::new());
        for c in &self.atoms {
            let (ma, mb) = (a.min(c.a) as f64, b.min(c.b) as f64);
            v2.push(c.mass * ((ma + 1.0) * (mb + 1.0) - 1.0));
            v3.push(c.mass * ma * l as f64);
            v4.push(c.mass * mb * l as f64);
        }
        split.v2 = compensated_sum(v2);
        split.v3 = compensated_sum(v3);
        split.v4 = compensated_sum(v4);
        split
    }

    pub fn to_measure(&self) -> Result<AtomicMeasure> {
        check_explicit(self.copies() * self.atoms.len() as u64)?;
        let mut atoms = Vec::with_capacity((self.copies() as usize) * self.atoms.len());
        for j in 0..self.copies() {
            for c in &self.atoms {
                atoms.push((corner_box(j, self.levels, c.a, c.b)?, c.mass));
            }
        }
        AtomicMeasure::new(2, atoms)
    }
}

/// Keeps the corner boxes not contained in another listed corner box.
pub fn maximal_corners(corners: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut sorted = corners.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    // sorted by a; a box survives iff its b is smaller than every b seen so far
    let mut out: Vec<(usize, usize)> = Vec::new();
    let mut best_b = usize::MAX;
    for (a, b) in sorted {
        if b < best_b {
            out.push((a, b));
            best_b = b;
        }
    }
    out
}

/// Capacity of a corner family repeated in all `2^L` diagonal squares.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetricCapacity {
    /// `2^L (2Σρ − ρᵀGρ)`, a lower bound on the capacity.
    pub value: f64,
    /// Energy of the rescaled feasible primal, an upper bound.
    pub upper_bound: f64,
    /// The maximal corners actually constrained.
    pub corners: Vec<(usize, usize)>,
    /// Per-square equilibrium masses on `corners`.
    pub rho: Vec<f64>,
    /// Equilibrium potential on `corners`.
    pub potential: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    pub kkt_violation: f64,
}

impl SymmetricCapacity {
    pub fn measure(&self, levels: usize) -> Result<DiagonalMeasure> {
        DiagonalMeasure::new(
            levels,
            self.corners
                .iter()
                .zip(&self.rho)
                .map(|(&(a, b), &mass)| CornerAtom { a, b, mass }),
        )
    }
}

/// Capacity of the union over `j` of the corner boxes `corners` of `Q_j`.
///
/// Simultaneous bit flips of the first `L` bits on both axes permute the
/// squares and preserve the kernel, so the problem has a symmetric optimum
/// and reduces to one square with Gram matrix `G = K_same + C_off`.
pub fn symmetric_capacity(levels: usize, corners: &[(usize, usize)], opts: &SolverOptions) -> Result<SymmetricCapacity> {
    check_levels(levels)?;
    let corners = maximal_corners(corners);
    if corners.is_empty() {
        return Err(Error::EmptySet);
    }
    let c_off = off_diagonal_sum(levels);
    let gram = DenseGram::from_fn(corners.len(), |i, k| corner_kernel(levels, corners[i], corners[k]) + c_off);
    let max_count = (0..corners.len()).map(|i| gram.row(i)[i]).fold(1.0, f64::max);
    let init = vec![1.0 / (corners.len() as f64 * max_count); corners.len()];
    let sol = maximize_dual(&gram, &vec![1.0; corners.len()], &init, opts);
    let copies = 2f64.powi(levels as i32);
    Ok(SymmetricCapacity {
        value: copies * sol.objective,
        upper_bound: copies * sol.primal_upper,
        corners,
        rho: sol.mass,
        potential: sol.potential,
        sweeps: sol.sweeps,
        converged: sol.converged,
        kkt_violation: sol.kkt_violation,
    })
}

/// Parameters of the small-energy counterexample: `log n = 2^s` and
/// `2^{Mexp} = n / log n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemParams {
    pub s: u32,
    pub logn: usize,
    pub n: u64,
    pub mexp: usize,
}

impl SemParams {
    pub fn new(s: u32) -> Result<Self> {
        if !(2..=5).contains(&s) {
            return Err(Error::InvalidParameters(format!("s = {s} outside 2..=5")));
        }
        let logn = 1usize << s;
        Ok(Self {
            s,
            logn,
            n: 1 << logn,
            mexp: logn - s as usize,
        })
    }

    /// Number of diagonal squares, `n / log n`.
    pub fn copies(&self) -> u64 {
        1 << self.mexp
    }

    pub fn n_f64(&self) -> f64 {
        self.n as f64
    }

    /// `|ν| = 1/(n log n)`.
    pub fn delta(&self) -> f64 {
        1.0 / (self.n_f64() * self.logn as f64)
    }

    /// Relative depths of `q_{jk}`, `k = 0..log n − 1`.
    pub fn q_depths(&self) -> Vec<(usize, usize)> {
        let n = self.n as usize;
        (0..self.logn).map(|k| (n >> k, 1 << k)).collect()
    }

    /// Relative depths of `ω_j`.
    pub fn omega_depths(&self) -> (usize, usize) {
        (self.n as usize, self.n as usize)
    }

    pub fn big_q(&self, j: u64) -> Result<DyadicBox> {
        corner_box(j, self.mexp, 0, 0)
    }

    pub fn omega(&self, j: u64) -> Result<DyadicBox> {
        let (a, b) = self.omega_depths();
        corner_box(j, self.mexp, a, b)
    }

    pub fn q_box(&self, j: u64, k: usize) -> Result<DyadicBox> {
        let (a, b) = *self
            .q_depths()
            .get(k)
            .ok_or_else(|| Error::InvalidParameters(format!("k = {k} outside 0..{}", self.logn)))?;
        corner_box(j, self.mexp, a, b)
    }

    /// `ν`: mass `1/n²` at every `ω_j`.
    pub fn nu(&self) -> DiagonalMeasure {
        let (a, b) = self.omega_depths();
        let mass = 1.0 / (self.n_f64() * self.n_f64());
        DiagonalMeasure::new(self.mexp, [CornerAtom { a, b, mass }]).expect("valid levels")
    }

    pub fn build_nu(&self) -> Result<AtomicMeasure> {
        self.nu().to_measure()
    }

    /// `F = ∪_{j,k} q_{jk}`.
    pub fn build_f(&self) -> Result<BoxSet> {
        check_explicit(self.copies() * self.logn as u64)?;
        let depths = self.q_depths();
        let mut boxes = Vec::with_capacity(self.copies() as usize * depths.len());
        for j in 0..self.copies() {
            for &(a, b) in &depths {
                boxes.push(corner_box(j, self.mexp, a, b)?);
            }
        }
        BoxSet::new(2, boxes)
    }

    /// The symmetric measure charging `ρ_k` on every `q_{jk}`.
    pub fn profile(&self, rho: &[f64]) -> Result<DiagonalMeasure> {
        if rho.len() != self.logn {
            return Err(Error::InvalidParameters(format!(
                "profile of length {} for log n = {}",
                rho.len(),
                self.logn
            )));
        }
        DiagonalMeasure::new(
            self.mexp,
            self.q_depths()
                .into_iter()
                .zip(rho)
                .map(|((a, b), &mass)| CornerAtom { a, b, mass }),
        )
    }
}

impl SemParams {
    /// `ℰ_ε[ν]` by counting boxes per depth pair.
    ///
    /// Every box charged by `ν` has axis paths that are prefixes of some
    /// `ω_j`'s; at depths `(X, Y)` there are `2^{min(max(X,Y), L)}` of them,
    /// each of mass `2^{L − min(max(X,Y), L)}/n²`, and all share one potential.
    pub fn partial_energy(&self, eps: f64) -> Result<f64> {
        if self.s > 4 {
            return Err(Error::InvalidParameters(format!("closed-form partial energy needs s ≤ 4, got {}", self.s)));
        }
        let l = self.mexp;
        let n = self.n as usize;
        let atom = 1.0 / (self.n_f64() * self.n_f64());
        // off[x][y]: contribution of the other squares, constant once x, y ≥ L
        let mut off = vec![vec![0.0; l + 1]; l + 1];
        for (x, row) in off.iter_mut().enumerate() {
            for (y, v) in row.iter_mut().enumerate() {
                *v = (0..l)
                    .map(|k| 2f64.powi((l - k - 1) as i32) * ((x.min(k) + 1) * (y.min(k) + 1)) as f64)
                    .sum();
            }
        }
        let weight = |t: usize| {
            let tt = t.min(l);
            let mass = atom * 2f64.powi((l - tt) as i32);
            2f64.powi(tt as i32) * mass * mass
        };
        let potential = |x: usize, y: usize| atom * ((x + 1) as f64 * (y + 1) as f64 + off[x.min(l)][y.min(l)]);
        let mut acc = Vec::new();
        for x in 0..=l + n {
            for y in 0..l {
                if potential(x, y) <= eps {
                    acc.push(weight(x.max(y)));
                }
            }
            // y ≥ L: the potential is increasing in y
            let (mut lo, mut hi) = (l, l + n + 1);
            while lo < hi {
                let mid = (lo + hi) / 2;
                if potential(x, mid) <= eps {
                    lo = mid + 1;
                } else {
                    hi = mid;
                }
            }
            acc.push((lo - l) as f64 * weight(l));
        }
        Ok(compensated_sum(acc))
    }
}

/// `(ℰ, [V(q_{1k})]_k)` for the symmetric measure charging `ρ_k` on every
/// `q_{jk}`.
pub fn symmetric_energy_and_potential(p: &SemParams, rho: &[f64]) -> Result<(f64, Vec<f64>)> {
    let measure = p.profile(rho)?;
    let potentials = p.q_depths().into_iter().map(|(a, b)| measure.potential(a, b)).collect();
    Ok((measure.energy(), potentials))
}

/// Parameters of the unbounded-partial-energy construction: `2^M` squares,
/// atoms of mass `2^{−M}` at relative depth `n`, and `x = n 2^{−M}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NazarovParams {
    pub n: u64,
    pub m: usize,
    pub logn: usize,
}

/// Count and potential contribution of one class of boxes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RectangleClass {
    pub count: u64,
    pub contribution: f64,
}

impl RectangleClass {
    fn add(&mut self, mass: f64) {
        self.count += 1;
        self.contribution += mass;
    }
}

/// The boxes containing `q_{0i}`, split into the classes used to bound its
/// potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideRectangles {
    pub i: usize,
    /// Between `q_{0i}` and `Q_0`.
    pub main: RectangleClass,
    /// x-side inside `Q_0` at a relative depth `n/2^{i'}`, `i ≤ i' ≤ log n`;
    /// y-side strictly larger than `Q_0`'s.
    pub tall: RectangleClass,
    /// y-side inside `Q_0` at a relative depth `2^{j'}`, `j' ≤ i`; x-side
    /// strictly larger.
    pub long: RectangleClass,
    /// The remaining boxes with one side inside `Q_0` and the other larger.
    pub tall_other: RectangleClass,
    pub long_other: RectangleClass,
    /// `large[m − 1]`: boxes containing the square of side `2^{m−M}` around
    /// `Q_0` but not the one of side `2^{m+1−M}`, `m = 1..=M`.
    pub large: Vec<RectangleClass>,
}

impl SideRectangles {
    pub fn large_total(&self) -> RectangleClass {
        self.large.iter().fold(RectangleClass::default(), |acc, c| RectangleClass {
            count: acc.count + c.count,
            contribution: acc.contribution + c.contribution,
        })
    }

    pub fn total(&self) -> RectangleClass {
        let large = self.large_total();
        [self.main, self.tall, self.long, self.tall_other, self.long_other, large]
            .iter()
            .fold(RectangleClass::default(), |acc, c| RectangleClass {
                count: acc.count + c.count,
                contribution: acc.contribution + c.contribution,
            })
    }
}

impl NazarovParams {
    pub fn new(n: u64, m: usize) -> Result<Self> {
        if !n.is_power_of_two() {
            return Err(Error::InvalidParameters(format!("n = {n} is not a power of two")));
        }
        if m == 0 || m > 24 {
            return Err(Error::InvalidParameters(format!("M = {m} outside 1..=24")));
        }
        if n < 1 << (m + 2) {
            return Err(Error::InvalidParameters(format!(
                "x = n 2^-M = {} is below 4",
                n as f64 / 2f64.powi(m as i32)
            )));
        }
        Ok(Self {
            n,
            m,
            logn: n.trailing_zeros() as usize,
        })
    }

    /// `n = x 2^M`.
    pub fn from_x(x: u64, m: usize) -> Result<Self> {
        let n = x
            .checked_shl(m as u32)
            .filter(|n| n >> m == x)
            .ok_or_else(|| Error::InvalidParameters(format!("x 2^M overflows for x = {x}, M = {m}")))?;
        Self::new(n, m)
    }

    pub fn x(&self) -> f64 {
        self.n as f64 / self.copies() as f64
    }

    pub fn copies(&self) -> u64 {
        1 << self.m
    }

    pub fn atom_mass(&self) -> f64 {
        2f64.powi(-(self.m as i32))
    }

    pub fn measure(&self) -> DiagonalMeasure {
        let n = self.n as usize;
        DiagonalMeasure::new(
            self.m,
            [CornerAtom {
                a: n,
                b: n,
                mass: self.atom_mass(),
            }],
        )
        .expect("valid levels")
    }

    pub fn build_measure(&self) -> Result<AtomicMeasure> {
        self.measure().to_measure()
    }

    /// Relative depths of `q_{ji}`, `i = 0..log n − 1`.
    pub fn q_depths(&self) -> Vec<(usize, usize)> {
        let n = self.n as usize;
        (0..self.logn).map(|i| (n >> i, 1 << i)).collect()
    }

    pub fn q_box(&self, j: u64, i: usize) -> Result<DyadicBox> {
        let (a, b) = *self
            .q_depths()
            .get(i)
            .ok_or_else(|| Error::InvalidParameters(format!("i = {i} outside 0..{}", self.logn)))?;
        corner_box(j, self.m, a, b)
    }

    pub fn build_q(&self) -> Result<BoxSet> {
        check_explicit(self.copies() * self.logn as u64)?;
        let mut boxes = Vec::new();
        for j in 0..self.copies() {
            for i in 0..self.logn {
                boxes.push(self.q_box(j, i)?);
            }
        }
        BoxSet::new(2, boxes)
    }

    /// Number of corner boxes between `q_{ji}` and `Q_j`.
    pub fn grid_len(&self, i: usize) -> u64 {
        ((self.n >> i) + 1) * ((1 << i) + 1)
    }

    /// Relative depths of `F_{ji}`: x-depth in `(n/2^{i+1}, n/2^i]`, y-depth in
    /// `[0, 2^i]`. The x-ranges are disjoint across `i`.
    pub fn family_depths(&self, i: usize) -> impl Iterator<Item = (usize, usize)> {
        let n = self.n as usize;
        let (lo, hi, top) = (n >> (i + 1), n >> i, 1usize << i);
        (lo + 1..=hi).flat_map(move |a| (0..=top).map(move |b| (a, b)))
    }

    pub fn family_len(&self, i: usize) -> u64 {
        (self.n >> (i + 1)) * ((1 << i) + 1)
    }

    pub fn families_len(&self) -> u64 {
        self.copies() * (0..self.logn).map(|i| self.family_len(i)).sum::<u64>()
    }

    /// Streams `(j, i, R)` for every `R ∈ F_{ji}`.
    pub fn families(&self) -> impl Iterator<Item = (u64, usize, DyadicBox)> + '_ {
        (0..self.copies()).flat_map(move |j| {
            (0..self.logn).flat_map(move |i| {
                self.family_depths(i)
                    .map(move |(a, b)| (j, i, corner_box(j, self.m, a, b).expect("j below 2^M")))
            })
        })
    }

    /// `V^μ` at the corner box `(a, b)` of `Q_j` (`a, b ≤ n`), given
    /// [`off_diagonal_sum_at`] for that `j`.
    pub fn corner_potential(&self, off_diagonal: f64, a: usize, b: usize) -> f64 {
        let n = self.n as usize;
        self.atom_mass() * (corner_kernel(self.m, (a, b), (n, n)) + off_diagonal)
    }

    /// Classifies every box containing `q_{0i}` (all of them are corner boxes
    /// of the all-zero path) and sums its mass.
    pub fn side_rectangles(&self, i: usize) -> Result<SideRectangles> {
        let (qa, qb) = *self
            .q_depths()
            .get(i)
            .ok_or_else(|| Error::InvalidParameters(format!("i = {i} outside 0..{}", self.logn)))?;
        let m = self.m;
        let unit = self.atom_mass();
        let tall_depths: Vec<usize> = (i..=self.logn).map(|k| (self.n >> k) as usize).collect();
        let long_depths: Vec<usize> = (0..=i).map(|k| 1usize << k).collect();
        let mut out = SideRectangles {
            i,
            main: RectangleClass::default(),
            tall: RectangleClass::default(),
            long: RectangleClass::default(),
            tall_other: RectangleClass::default(),
            long_other: RectangleClass::default(),
            large: vec![RectangleClass::default(); m],
        };
        // inside Q_0 on an axis, a box meets only ω_0; otherwise it holds the
        // 2^{M−t} squares below the depth-t square, t = max(X, Y)
        for x in 0..=m + qa {
            for y in 0..=m + qb {
                match (x >= m, y >= m) {
                    (true, true) => out.main.add(unit),
                    (true, false) if tall_depths.contains(&(x - m)) => out.tall.add(unit),
                    (true, false) => out.tall_other.add(unit),
                    (false, true) if long_depths.contains(&(y - m)) => out.long.add(unit),
                    (false, true) => out.long_other.add(unit),
                    (false, false) => {
                        let t = x.max(y);
                        out.large[m - t - 1].add(2f64.powi(-(t as i32)));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Largest `V^μ(q_{ji})` with its `(j, i)`, by direct evaluation per square.
pub fn nazarov_max_potential(p: &NazarovParams) -> (f64, u64, usize) {
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for j in 0..p.copies() {
        let off = off_diagonal_sum_at(j, p.m);
        for (i, (a, b)) in p.q_depths().into_iter().enumerate() {
            let v = p.corner_potential(off, a, b);
            if v > best.0 {
                best = (v, j, i);
            }
        }
    }
    best
}

/// Restricted partial energy over the families `F_{ji}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestrictedEnergy {
    /// `Σ μ(R)²` over family boxes with `V^μ(R) ≤ threshold`.
    pub energy: f64,
    pub boxes: u64,
    pub qualifying: u64,
    pub max_potential: f64,
}

/// Streams `∪ F_{ji}` and sums `μ(R)² = 2^{−2M}` over boxes with
/// `V^μ(R) ≤ threshold`.
pub fn nazarov_restricted_energy(p: &NazarovParams, threshold: f64) -> RestrictedEnergy {
    let mut out = RestrictedEnergy {
        energy: 0.0,
        boxes: 0,
        qualifying: 0,
        max_potential: f64::NEG_INFINITY,
    };
    for j in 0..p.copies() {
        let off = off_diagonal_sum_at(j, p.m);
        for i in 0..p.logn {
            for (a, b) in p.family_depths(i) {
                let v = p.corner_potential(off, a, b);
                out.boxes += 1;
                out.max_potential = out.max_potential.max(v);
                if v <= threshold {
                    out.qualifying += 1;
                }
            }
        }
    }
    let unit = p.atom_mass();
    out.energy = out.qualifying as f64 * unit * unit;
    out
}
