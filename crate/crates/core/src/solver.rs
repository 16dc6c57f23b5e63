//! Cyclic coordinate ascent for the nonnegative concave quadratic program
//!
//! ```text
//! maximise  Φ(ν) = 2·tᵀν − νᵀKν   over ν ≥ 0,
//! ```
//!
//! where `K` is a positive definite Gram matrix (the join kernel restricted to
//! a finite constraint set) and `t ≥ 0` are targets. With `t ≡ 1` the maximum
//! is the capacity of the set and the maximiser is its equilibrium measure.
//!
//! Each coordinate step is an exact line search: `Φ` restricted to one
//! coordinate is a concave parabola, so the update
//! `ν_i ← max(0, ν_i + (t_i − (Kν)_i)/K_ii)` never decreases the objective.

use serde::{Deserialize, Serialize};

use crate::lattice::DyadicBox;
use crate::sum::compensated_sum;

/// Above this many constraints the Gram matrix is never cached.
pub const MAX_CACHED_KERNEL: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// KKT tolerance, relative to the largest target.
    pub tol: f64,
    /// Stop once a sweep gains less than `gain_tol · |Φ|` (and KKT holds).
    pub gain_tol: f64,
    pub max_sweeps: usize,
    /// Recompute kernel rows on the fly instead of caching the matrix.
    pub matrix_free: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            gain_tol: 1e-12,
            max_sweeps: 100_000,
            matrix_free: false,
        }
    }
}

/// Symmetric positive definite matrix accessed by entries.
pub trait Gram: Sync {
    fn len(&self) -> usize;

    fn entry(&self, i: usize, j: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn diag(&self, i: usize) -> f64 {
        self.entry(i, i)
    }

    fn row_into(&self, i: usize, out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.entry(i, j);
        }
    }
}

/// Cached row-major Gram matrix.
#[derive(Clone, Debug)]
pub struct DenseGram {
    n: usize,
    data: Vec<f64>,
}

impl DenseGram {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self { n, data }
    }

    pub fn cache(g: &dyn Gram) -> Self {
        Self::from_fn(g.len(), |i, j| g.entry(i, j))
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

impl Gram for DenseGram {
    fn len(&self) -> usize {
        self.n
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    fn row_into(&self, i: usize, out: &mut [f64]) {
        out.copy_from_slice(self.row(i));
    }
}

/// The join kernel `K(a, b) = #ancestors(join(a, b))` on a list of boxes.
pub struct BoxKernel<'a> {
    boxes: &'a [DyadicBox],
}

impl<'a> BoxKernel<'a> {
    /// All boxes must share one dimension.
    pub fn new(boxes: &'a [DyadicBox]) -> Self {
        debug_assert!(boxes.windows(2).all(|w| w[0].dim() == w[1].dim()));
        Self { boxes }
    }
}

impl Gram for BoxKernel<'_> {
    fn len(&self) -> usize {
        self.boxes.len()
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        self.boxes[i].common_ancestor_count_unchecked(&self.boxes[j])
    }

    fn diag(&self, i: usize) -> f64 {
        self.boxes[i].ancestor_count() as f64
    }
}

/// Result of [`maximize_dual`].
#[derive(Clone, Debug)]
pub struct DualSolution {
    pub mass: Vec<f64>,
    /// `(Kν)_i`, the potential of the solution at each constraint.
    pub potential: Vec<f64>,
    /// `Φ(ν)`, a lower bound on the primal optimum.
    pub objective: f64,
    /// Energy of the feasible primal obtained by rescaling `𝕀*ν` until every
    /// target is met; an upper bound on the primal optimum.
    pub primal_upper: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub kkt_violation: f64,
    /// `Φ` after every sweep.
    pub history: Vec<f64>,
    /// Sweeps at which `Φ` exceeded the running primal bound (should be 0).
    pub weak_duality_violations: usize,
}

impl DualSolution {
    pub fn gap(&self) -> f64 {
        self.primal_upper - self.objective
    }
}

fn objective(targets: &[f64], mass: &[f64], potential: &[f64]) -> f64 {
    compensated_sum(
        mass.iter()
            .zip(targets)
            .zip(potential)
            .map(|((m, t), p)| m * (2.0 * t - p)),
    )
}

fn energy(mass: &[f64], potential: &[f64]) -> f64 {
    compensated_sum(mass.iter().zip(potential).map(|(m, p)| m * p))
}

/// Smallest energy of a feasible primal `s·𝕀*ν`, `s = max_i t_i / (Kν)_i`.
fn rescaled_primal(targets: &[f64], mass: &[f64], potential: &[f64]) -> f64 {
    let scale = targets
        .iter()
        .zip(potential)
        .filter(|(t, _)| **t > 0.0)
        .map(|(t, p)| t / p)
        .fold(0.0, f64::max);
    scale * scale * energy(mass, potential)
}

fn kkt_violation(targets: &[f64], mass: &[f64], potential: &[f64]) -> f64 {
    let scale = targets.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    mass.iter()
        .zip(targets)
        .zip(potential)
        .map(|((m, t), p)| if *m > 0.0 { (p - t).abs() } else { (t - p).max(0.0) })
        .fold(0.0, f64::max)
        / scale
}

fn recompute_potential(gram: &dyn Gram, mass: &[f64], row: &mut [f64]) -> Vec<f64> {
    let n = mass.len();
    let mut p = vec![0.0; n];
    for (j, &m) in mass.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        gram.row_into(j, row);
        for i in 0..n {
            p[i] += m * row[i];
        }
    }
    p
}

/// Maximises `2tᵀν − νᵀKν` over `ν ≥ 0` from the starting point `init`.
///
/// Coordinates are visited in index order every sweep. The solver stops when
/// a sweep gains less than `gain_tol·|Φ|` while the KKT residual is within
/// `tol`, or after `max_sweeps`.
pub fn maximize_dual(gram: &dyn Gram, targets: &[f64], init: &[f64], opts: &SolverOptions) -> DualSolution {
    let n = gram.len();
    assert_eq!(targets.len(), n);
    assert_eq!(init.len(), n);

    let cached;
    let kernel: &dyn Gram = if opts.matrix_free || n > MAX_CACHED_KERNEL {
        gram
    } else {
        cached = DenseGram::cache(gram);
        &cached
    };
    let diag: Vec<f64> = (0..n).map(|i| kernel.diag(i)).collect();
    let mut row = vec![0.0; n];
    let mut mass: Vec<f64> = init.iter().map(|m| m.max(0.0)).collect();
    let mut potential = recompute_potential(kernel, &mass, &mut row);
    let mut current = objective(targets, &mass, &potential);
    let mut history = Vec::new();
    let mut weak_duality_violations = 0;
    let mut converged = n == 0;
    let mut sweeps = 0;

    while !converged && sweeps < opts.max_sweeps {
        sweeps += 1;
        for i in 0..n {
            let step = (targets[i] - potential[i]) / diag[i];
            let next = (mass[i] + step).max(0.0);
            let delta = next - mass[i];
            if delta == 0.0 {
                continue;
            }
            mass[i] = next;
            kernel.row_into(i, &mut row);
            for (p, k) in potential.iter_mut().zip(&row) {
                *p += delta * k;
            }
        }
        let previous = current;
        current = objective(targets, &mass, &potential);
        history.push(current);
        let primal = rescaled_primal(targets, &mass, &potential);
        if current > primal * (1.0 + 1e-12) {
            weak_duality_violations += 1;
        }
        let gain = current - previous;
        if gain <= opts.gain_tol * current.abs() {
            // refresh accumulated round-off before judging KKT
            potential = recompute_potential(kernel, &mass, &mut row);
            current = objective(targets, &mass, &potential);
            converged = kkt_violation(targets, &mass, &potential) <= opts.tol;
        }
    }

    let potential = recompute_potential(kernel, &mass, &mut row);
    DualSolution {
        objective: objective(targets, &mass, &potential),
        primal_upper: rescaled_primal(targets, &mass, &potential),
        kkt_violation: kkt_violation(targets, &mass, &potential),
        mass,
        potential,
        sweeps,
        converged,
        history,
        weak_duality_violations,
    }
}
