//! Capacities, equilibrium measures and minimal-energy majorants.
//!
//! `cap(E) = min Σ f²` over `f ≥ 0` with `𝕀f ≥ 1` on `E`. The dual problem is
//! `max 2|ν| − ℰ[ν]` over measures `ν ≥ 0` carried by `E`; its maximiser is the
//! equilibrium measure, with `V^ν = 1` on its support, `V^ν ≥ 1` on `E`, and
//! `cap(E) = |ν| = ℰ[ν]`. The primal optimum is `f = 𝕀*ν`.
//!
//! On `T` the problem is a series–parallel resistor network and is solved
//! exactly; on `T^d` the dual is solved by coordinate ascent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{BoxSet, DyadicBox};
use crate::measure::AtomicMeasure;
use crate::poset::{AxisTrie, RelevantPoset, NONE};
use crate::solver::{maximize_dual, BoxKernel, DenseGram, SolverOptions};
use crate::sum::compensated_sum;

/// Capacity value with the equilibrium measure that certifies it.
#[derive(Clone, Debug)]
pub struct CapacityCertificate {
    /// Best estimate of `cap(E)`; for solver output this is the dual
    /// objective `2|ν| − ℰ[ν]`, a guaranteed lower bound.
    pub cap_value: f64,
    pub equilibrium: AtomicMeasure,
    /// Energy of the feasible primal `𝕀*ν / min_E V^ν`; an upper bound.
    pub primal_energy: f64,
    /// `primal_energy − (2|ν| − ℰ[ν])`, nonnegative by weak duality.
    pub duality_gap: f64,
    pub min_potential_on_e: f64,
    pub max_potential_on_support: f64,
    pub min_potential_on_support: f64,
    pub sweeps: usize,
    pub converged: bool,
}

/// Serializable digest of a certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub value: f64,
    pub gap: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub equilibrium_mass: f64,
    pub equilibrium_energy: f64,
    pub support_size: usize,
    pub min_potential_on_set: f64,
    pub min_potential_on_support: f64,
    pub max_potential_on_support: f64,
    pub sweeps: usize,
    pub converged: bool,
}

impl CapacityCertificate {
    /// Assembles a certificate from an equilibrium candidate and the minimum
    /// of its potential over the constraint set.
    fn from_measure(equilibrium: AtomicMeasure, min_on_e: f64, sweeps: usize, converged: bool) -> Self {
        let support = equilibrium.potentials_on_support();
        let mass = equilibrium.total_mass();
        let energy = equilibrium.energy();
        let lower = 2.0 * mass - energy;
        let primal = if min_on_e > 0.0 {
            energy / (min_on_e * min_on_e)
        } else {
            f64::INFINITY
        };
        Self {
            cap_value: lower,
            equilibrium,
            primal_energy: primal,
            duality_gap: primal - lower,
            min_potential_on_e: min_on_e,
            max_potential_on_support: support.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min_potential_on_support: support.iter().copied().fold(f64::INFINITY, f64::min),
            sweeps,
            converged,
        }
    }

    fn whole_tree(dim: usize) -> Result<Self> {
        let eq = AtomicMeasure::dirac(DyadicBox::root(dim)?, 1.0)?;
        Ok(Self::from_measure(eq, 1.0, 0, true))
    }

    pub fn lower_bound(&self) -> f64 {
        2.0 * self.equilibrium.total_mass() - self.equilibrium.energy()
    }

    pub fn summary(&self) -> CertificateSummary {
        CertificateSummary {
            value: self.cap_value,
            gap: self.duality_gap,
            lower_bound: self.lower_bound(),
            upper_bound: self.primal_energy,
            equilibrium_mass: self.equilibrium.total_mass(),
            equilibrium_energy: self.equilibrium.energy(),
            support_size: self.equilibrium.len(),
            min_potential_on_set: self.min_potential_on_e,
            min_potential_on_support: self.min_potential_on_support,
            max_potential_on_support: self.max_potential_on_support,
            sweeps: self.sweeps,
            converged: self.converged,
        }
    }
}

/// Exact capacity of a set of vertices of `T`.
///
/// Every vertex is a unit resistor between itself and its parent; the root is
/// held at potential 1 and the maximal elements of `E` are grounded. The
/// capacity is the effective conductance and the equilibrium measure is the
/// current flowing into each grounded vertex.
pub fn tree_capacity_exact(e: &BoxSet) -> Result<CapacityCertificate> {
    if e.dim() != 1 {
        return Err(Error::NotOnTree(e.dim()));
    }
    if e.is_empty() {
        return Err(Error::EmptySet);
    }
    let reduced = e.reduce_to_maximal();
    if reduced.contains_root() {
        return CapacityCertificate::whole_tree(1);
    }
    let mut trie = AxisTrie::new();
    let mut terminal = Vec::new();
    for b in &reduced {
        let chain = trie.insert(b.side(0));
        terminal.push(*chain.last().unwrap());
    }
    let nodes = trie.parent.len();
    let mut is_terminal = vec![false; nodes];
    for &t in &terminal {
        is_terminal[t as usize] = true;
    }
    // children always have larger ids than their parent
    let mut resistance = vec![0.0; nodes];
    for v in (0..nodes).rev() {
        resistance[v] = if is_terminal[v] {
            1.0
        } else {
            let conductance: f64 = trie.children[v]
                .iter()
                .filter(|&&c| c != NONE)
                .map(|&c| 1.0 / resistance[c as usize])
                .sum();
            1.0 + 1.0 / conductance
        };
    }
    let mut current = vec![0.0; nodes];
    current[0] = 1.0 / resistance[0];
    for v in 0..nodes {
        if is_terminal[v] {
            continue;
        }
        let below = current[v] * (resistance[v] - 1.0);
        for &c in trie.children[v].iter().filter(|&&c| c != NONE) {
            current[c as usize] = below / resistance[c as usize];
        }
    }
    let equilibrium = AtomicMeasure::new(
        1,
        reduced
            .iter()
            .zip(&terminal)
            .map(|(b, &t)| (b.clone(), current[t as usize])),
    )?;
    let min_on_e = reduced
        .iter()
        .map(|b| equilibrium.potential(b))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let mut cert = CapacityCertificate::from_measure(equilibrium, min_on_e, 0, true);
    cert.cap_value = 1.0 / resistance[0];
    Ok(cert)
}

fn initial_mass(boxes: &[DyadicBox]) -> Vec<f64> {
    let k = boxes.len() as f64;
    let max_count = boxes
        .iter()
        .map(|b| b.ancestor_count() as f64)
        .fold(1.0, f64::max);
    vec![1.0 / (k * max_count); boxes.len()]
}

/// Capacity of a set of boxes in `T^d` by coordinate ascent on the dual.
///
/// Only the maximal elements of `E` constrain anything, so the solver works on
/// `reduce_to_maximal(E)`; since potentials grow towards the leaves, the
/// minimum of `V^ν` over `E` is attained on those elements as well.
pub fn dual_capacity(e: &BoxSet, opts: &SolverOptions) -> Result<CapacityCertificate> {
    if e.is_empty() {
        return Err(Error::EmptySet);
    }
    let reduced = e.reduce_to_maximal();
    if reduced.contains_root() {
        return CapacityCertificate::whole_tree(e.dim());
    }
    let boxes = reduced.as_slice();
    let kernel = BoxKernel::new(boxes);
    let targets = vec![1.0; boxes.len()];
    let sol = maximize_dual(&kernel, &targets, &initial_mass(boxes), opts);
    let min_on_e = sol.potential.iter().copied().fold(f64::INFINITY, f64::min);
    let equilibrium = AtomicMeasure::new(
        e.dim(),
        boxes.iter().cloned().zip(sol.mass.iter().copied()),
    )?;
    Ok(CapacityCertificate::from_measure(
        equilibrium,
        min_on_e,
        sol.sweeps,
        sol.converged,
    ))
}

/// `max(|ν|²/ℰ[ν], 2|ν| − ℰ[ν])`, a lower bound on `cap(E)` for any `ν`
/// carried by the down-set of `E`.
pub fn capacity_lower_bound(nu: &AtomicMeasure, e: &BoxSet) -> Result<f64> {
    if nu.dim() != e.dim() {
        return Err(Error::DimensionMismatch {
            left: nu.dim(),
            right: e.dim(),
        });
    }
    let reduced = e.reduce_to_maximal();
    for (atom, _) in nu.atoms() {
        if !reduced.iter().any(|r| r.contains_unchecked(atom)) {
            return Err(Error::SupportViolation(atom.to_string()));
        }
    }
    let mass = nu.total_mass();
    let energy = nu.energy();
    if energy == 0.0 {
        return Ok(0.0);
    }
    Ok((mass * mass / energy).max(2.0 * mass - energy))
}

/// Minimise `Σ φ²` over `φ ≥ 0` with `𝕀φ(α) ≥ t(α)` for every `α` in the
/// constraint set.
#[derive(Clone, Debug)]
pub struct MajorantProblem {
    dim: usize,
    constraints: Vec<(DyadicBox, f64)>,
}

impl MajorantProblem {
    pub fn new(dim: usize, constraints: impl IntoIterator<Item = (DyadicBox, f64)>) -> Result<Self> {
        let mut list = Vec::new();
        for (b, t) in constraints {
            if !t.is_finite() || t < 0.0 {
                return Err(Error::InvalidTarget(t));
            }
            if b.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: b.dim(),
                });
            }
            list.push((b, t));
        }
        list.sort_by(|a, b| a.0.cmp(&b.0));
        let mut constraints: Vec<(DyadicBox, f64)> = Vec::with_capacity(list.len());
        for (b, t) in list {
            match constraints.last_mut() {
                Some((last, acc)) if *last == b => *acc = acc.max(t),
                _ => constraints.push((b, t)),
            }
        }
        Ok(Self { dim, constraints })
    }

    /// Uniform targets: `t ≡ value` on `set`.
    pub fn uniform(set: &BoxSet, value: f64) -> Result<Self> {
        Self::new(set.dim(), set.iter().map(|b| (b.clone(), value)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constraints(&self) -> &[(DyadicBox, f64)] {
        &self.constraints
    }

    /// Drops zero targets and constraints implied by a containing box with a
    /// target at least as large (`𝕀φ` only grows towards the leaves).
    fn essential(&self) -> Vec<(DyadicBox, f64)> {
        let active: Vec<&(DyadicBox, f64)> = self.constraints.iter().filter(|(_, t)| *t > 0.0).collect();
        active
            .iter()
            .enumerate()
            .filter(|(i, (b, t))| {
                !active.iter().enumerate().any(|(j, (c, s))| {
                    j != *i && s >= t && c.contains_unchecked(b) && (c != b)
                })
            })
            .map(|(_, c)| (*c).clone())
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct MajorantSolution {
    /// Dual measure `ν`; the optimal majorant is `φ = 𝕀*ν`.
    pub dual: AtomicMeasure,
    /// `φ = 𝕀*ν` on its support (the ancestor closure of `supp ν`).
    pub phi: Vec<(DyadicBox, f64)>,
    /// `Σ φ²` for the solver's `φ`.
    pub objective: f64,
    /// `2 Σ t ν − ℰ[ν]`, a lower bound on the optimum.
    pub lower_bound: f64,
    /// Energy of `φ` rescaled until every constraint holds; an upper bound.
    pub upper_bound: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub kkt_violation: f64,
}

pub fn min_energy_majorant(problem: &MajorantProblem, opts: &SolverOptions) -> Result<MajorantSolution> {
    let essential = problem.essential();
    if essential.is_empty() {
        return Ok(MajorantSolution {
            dual: AtomicMeasure::empty(problem.dim)?,
            phi: Vec::new(),
            objective: 0.0,
            lower_bound: 0.0,
            upper_bound: 0.0,
            sweeps: 0,
            converged: true,
            kkt_violation: 0.0,
        });
    }
    let boxes: Vec<DyadicBox> = essential.iter().map(|(b, _)| b.clone()).collect();
    let targets: Vec<f64> = essential.iter().map(|(_, t)| *t).collect();
    let t_min = targets.iter().copied().fold(f64::INFINITY, f64::min);
    let init: Vec<f64> = initial_mass(&boxes).into_iter().map(|m| m * t_min).collect();
    let sol = maximize_dual(&BoxKernel::new(&boxes), &targets, &init, opts);
    let dual = AtomicMeasure::new(problem.dim, boxes.into_iter().zip(sol.mass.iter().copied()))?;
    let poset = RelevantPoset::build(&dual)?;
    let phi: Vec<(DyadicBox, f64)> = poset.iter_boxes().map(|(b, e)| (b, e.mass)).collect();
    Ok(MajorantSolution {
        objective: compensated_sum(phi.iter().map(|(_, v)| v * v)),
        phi,
        dual,
        lower_bound: sol.objective,
        upper_bound: sol.primal_upper,
        sweeps: sol.sweeps,
        converged: sol.converged,
        kkt_violation: sol.kkt_violation,
    })
}

/// Capacity of the level set `D_x = {V^ν ≥ x}`.
#[derive(Clone, Debug)]
pub enum LevelSetCapacity {
    /// `x ≤ |ν|`: the root lies in `D_x`, so `C(x) = 1`.
    WholeTree,
    /// `D_x` is empty.
    Empty,
    /// Exact value on `T`.
    Exact(CapacityCertificate),
    /// Certified lower bound from a witness subset of `D_x` on `T^d`.
    LowerBound {
        value: f64,
        witness_size: usize,
        certificate: Option<CapacityCertificate>,
    },
}

impl LevelSetCapacity {
    pub fn value(&self) -> f64 {
        match self {
            Self::WholeTree => 1.0,
            Self::Empty => 0.0,
            Self::Exact(c) => c.cap_value,
            Self::LowerBound { value, .. } => *value,
        }
    }
}

/// `C(x) = cap(D_x)`. On `T` this is exact: `D_x` is closed under taking
/// descendants and its top elements all lie in the relevant poset. On `T^d`
/// a witness `W` must be supplied and `cap(W ∩ D_x) ≤ C(x)` is returned.
pub fn level_set_capacity(
    nu: &AtomicMeasure,
    x: f64,
    witness: Option<&BoxSet>,
    opts: &SolverOptions,
) -> Result<LevelSetCapacity> {
    if x <= nu.total_mass() {
        return Ok(LevelSetCapacity::WholeTree);
    }
    if nu.dim() == 1 && witness.is_none() {
        let poset = RelevantPoset::build(nu)?;
        let top = BoxSet::new(
            1,
            poset
                .iter_boxes()
                .filter(|(_, e)| e.potential >= x)
                .map(|(b, _)| b),
        )?;
        if top.is_empty() {
            return Ok(LevelSetCapacity::Empty);
        }
        return Ok(LevelSetCapacity::Exact(tree_capacity_exact(&top)?));
    }
    let witness = witness.ok_or_else(|| {
        Error::InvalidParameters("a witness subset is required off the tree".into())
    })?;
    let mut kept = Vec::new();
    for b in witness {
        if nu.potential(b)? >= x {
            kept.push(b.clone());
        }
    }
    let kept = BoxSet::new(witness.dim(), kept)?;
    if kept.is_empty() {
        return Ok(LevelSetCapacity::LowerBound {
            value: 0.0,
            witness_size: 0,
            certificate: None,
        });
    }
    let cert = dual_capacity(&kept, opts)?;
    Ok(LevelSetCapacity::LowerBound {
        value: cert.lower_bound(),
        witness_size: kept.len(),
        certificate: Some(cert),
    })
}

/// Two-sided bounds on the capacity of `{R ∈ T² : #ancestors(R) ≥ k}`.
///
/// The set is invariant under the automorphisms of `T²`, so an optimal `f`
/// depends only on the depth pair `(X, Y)` and the problem reduces to the
/// staircase of minimal depth pairs with Gram entries
/// `Σ_{X ≤ x, Y ≤ y} 2^{−X−Y}`. Since `V^ν(R) ≤ |ν|·#ancestors(R)`, this
/// bounds `cap({V^ν ≥ x})` from above with `k = ⌈x/|ν|⌉`.
pub fn deep_box_capacity(k: u64, opts: &SolverOptions) -> Result<(f64, f64)> {
    if k <= 1 {
        return Ok((1.0, 1.0));
    }
    if k > 1 << 20 {
        return Err(Error::InvalidParameters(format!("ancestor threshold {k} too large")));
    }
    // minimal depth pairs: keep x only where the required y drops
    let mut stairs: Vec<(u64, u64)> = Vec::new();
    for x in 0..k {
        let y = k.div_ceil(x + 1) - 1;
        if stairs.last().is_none_or(|&(_, prev)| y < prev) {
            stairs.push((x, y));
        }
    }
    let partial = |m: u64| 2.0 - 2f64.powi(-(m.min(1100) as i32));
    let gram = DenseGram::from_fn(stairs.len(), |i, j| {
        partial(stairs[i].0.min(stairs[j].0)) * partial(stairs[i].1.min(stairs[j].1))
    });
    let sol = maximize_dual(&gram, &vec![1.0; stairs.len()], &vec![0.0; stairs.len()], opts);
    Ok((sol.objective, sol.primal_upper.min(1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::DyadicInterval;

    fn b(s: &str) -> DyadicBox {
        s.parse().unwrap()
    }

    fn set(dim: usize, items: &[&str]) -> BoxSet {
        BoxSet::new(dim, items.iter().map(|s| b(s))).unwrap()
    }

    #[test]
    fn tree_capacity_examples() {
        assert_eq!(tree_capacity_exact(&set(1, &["e"])).unwrap().cap_value, 1.0);
        let both = tree_capacity_exact(&set(1, &["0", "1"])).unwrap();
        assert!((both.cap_value - 2.0 / 3.0).abs() < 1e-15);
        assert!((both.equilibrium.total_mass() - 2.0 / 3.0).abs() < 1e-15);
        for d in 0..8 {
            let c = tree_capacity_exact(&BoxSet::new(1, [DyadicBox::interval(crate::DyadicInterval::zeros(d))]).unwrap())
                .unwrap();
            assert!((c.cap_value - 1.0 / (d as f64 + 1.0)).abs() < 1e-15);
        }
        assert_eq!(tree_capacity_exact(&set(1, &[])).unwrap_err(), Error::EmptySet);
        assert_eq!(tree_capacity_exact(&set(2, &["0x0"])).unwrap_err(), Error::NotOnTree(2));
    }

    #[test]
    fn tree_equilibrium_identities() {
        let c = tree_capacity_exact(&set(1, &["000", "01", "0011", "11", "101"])).unwrap();
        let eq = &c.equilibrium;
        assert!((eq.total_mass() - c.cap_value).abs() < 1e-14);
        assert!((eq.energy() - c.cap_value).abs() < 1e-14);
        assert!((c.min_potential_on_e - 1.0).abs() < 1e-14);
        assert!((c.max_potential_on_support - 1.0).abs() < 1e-14);
        assert!(c.duality_gap.abs() < 1e-13);
    }

    #[test]
    fn dual_capacity_examples() {
        let opts = SolverOptions::default();
        assert_eq!(dual_capacity(&set(2, &["exe"]), &opts).unwrap().cap_value, 1.0);
        let single = dual_capacity(&set(2, &["010x11"]), &opts).unwrap();
        assert!((single.cap_value - 1.0 / 12.0).abs() < 1e-15);
        let both = dual_capacity(&set(1, &["0", "1"]), &opts).unwrap();
        assert!((both.cap_value - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_examples() {
        let e = set(1, &["000", "01", "11"]);
        let c = tree_capacity_exact(&e).unwrap();
        let lb = capacity_lower_bound(&c.equilibrium, &e).unwrap();
        assert!((lb - c.cap_value).abs() < 1e-14);
        let nu = AtomicMeasure::new(1, [(b("0001"), 0.3), (b("11"), 0.1)]).unwrap();
        let r1 = capacity_lower_bound(&nu, &e).unwrap();
        let r2 = capacity_lower_bound(&nu.scaled(7.0).unwrap(), &e).unwrap();
        let ratio = |m: &AtomicMeasure| m.total_mass().powi(2) / m.energy();
        assert!((ratio(&nu) - ratio(&nu.scaled(7.0).unwrap())).abs() < 1e-14);
        assert!(r1 <= c.cap_value && r2 <= c.cap_value);
        let outside = AtomicMeasure::dirac(b("10"), 1.0).unwrap();
        assert!(matches!(capacity_lower_bound(&outside, &e), Err(Error::SupportViolation(_))));
    }

    #[test]
    fn majorant_reduces_to_capacity() {
        let opts = SolverOptions::default();
        let s = set(2, &["01x1", "1x00", "0011x0"]);
        let cap = dual_capacity(&s, &opts).unwrap().cap_value;
        let one = min_energy_majorant(&MajorantProblem::uniform(&s, 1.0).unwrap(), &opts).unwrap();
        assert!((one.lower_bound - cap).abs() < 1e-9 * cap);
        let three = min_energy_majorant(&MajorantProblem::uniform(&s, 3.0).unwrap(), &opts).unwrap();
        // the dual objective is second-order accurate, Σφ² only first-order
        assert!((three.lower_bound - 9.0 * cap).abs() < 1e-9 * cap);
        assert!((three.objective - 9.0 * cap).abs() < 1e-7 * cap);
        assert!(three.lower_bound <= three.upper_bound);
        let zero = min_energy_majorant(&MajorantProblem::uniform(&s, 0.0).unwrap(), &opts).unwrap();
        assert_eq!(zero.objective, 0.0);
        assert!(MajorantProblem::new(2, [(b("0x0"), -1.0)]).is_err());
    }

    #[test]
    fn level_set_anchors() {
        let e = set(1, &["000", "01", "0011", "11"]);
        let c = tree_capacity_exact(&e).unwrap();
        let nu = &c.equilibrium;
        let opts = SolverOptions::default();
        assert_eq!(level_set_capacity(nu, nu.total_mass(), None, &opts).unwrap().value(), 1.0);
        let at_one = level_set_capacity(nu, 1.0 - 1e-12, None, &opts).unwrap().value();
        assert!((at_one - c.cap_value).abs() < 1e-12);
        assert!(matches!(
            level_set_capacity(nu, 2.0, None, &opts).unwrap(),
            LevelSetCapacity::Empty
        ));
    }

    #[test]
    fn deep_box_capacity_matches_dual_solver() {
        let opts = SolverOptions::default();
        assert_eq!(deep_box_capacity(1, &opts).unwrap(), (1.0, 1.0));
        // k = 2: the four depth-one boxes
        let direct = dual_capacity(&set(2, &["0xe", "1xe", "ex0", "ex1"]), &opts).unwrap();
        let (lo, hi) = deep_box_capacity(2, &opts).unwrap();
        assert!((lo - direct.cap_value).abs() < 1e-9 && lo <= hi);
        // k = 3: every box at depths (2,0), (1,1), (0,2)
        let mut boxes = Vec::new();
        for (x, y) in [(2, 0), (1, 1), (0, 2)] {
            for i in 0..1u64 << x {
                for j in 0..1u64 << y {
                    boxes.push(DyadicBox::rectangle(
                        DyadicInterval::from_index(x, i).unwrap(),
                        DyadicInterval::from_index(y, j).unwrap(),
                    ));
                }
            }
        }
        let direct = dual_capacity(&BoxSet::new(2, boxes).unwrap(), &opts).unwrap();
        let (lo, hi) = deep_box_capacity(3, &opts).unwrap();
        assert!((lo - direct.cap_value).abs() < 1e-8 && hi >= direct.cap_value - 1e-9);
        // k = 4: depths (2,1) lie below (1,1) and drop out of the staircase
        let mut boxes = Vec::new();
        for (x, y) in [(3, 0), (1, 1), (0, 3), (2, 1)] {
            for i in 0..1u64 << x {
                for j in 0..1u64 << y {
                    boxes.push(DyadicBox::rectangle(
                        DyadicInterval::from_index(x, i).unwrap(),
                        DyadicInterval::from_index(y, j).unwrap(),
                    ));
                }
            }
        }
        let direct = dual_capacity(&BoxSet::new(2, boxes).unwrap(), &opts).unwrap();
        let (lo, hi) = deep_box_capacity(4, &opts).unwrap();
        assert!((lo - direct.cap_value).abs() < 1e-8 && hi >= direct.cap_value - 1e-9);
    }
}
