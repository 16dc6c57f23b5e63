//! The relevant poset of a measure: every box carrying positive mass.
//!
//! A box has `ν(R) > 0` iff it contains an atom, so the relevant poset is the
//! union of the atoms' ancestor sets. Each axis side of such a box is a prefix
//! of some atom's path on that axis; the prefixes are interned in one binary
//! trie per axis and a box is keyed by its tuple of trie nodes. This keeps the
//! per-box footprint at a few words even when paths are thousands of bits.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::lattice::{DyadicBox, DyadicInterval, MAX_DIM};
use crate::measure::AtomicMeasure;
use crate::sum::compensated_sum;

/// Refuse to materialise more boxes than this.
pub const DEFAULT_MAX_BOXES: usize = 1 << 28;

pub(crate) const NONE: u32 = u32::MAX;

/// Binary trie of interned path prefixes for one axis. Node 0 is the root.
#[derive(Clone, Debug)]
pub(crate) struct AxisTrie {
    pub(crate) parent: Vec<u32>,
    pub(crate) depth: Vec<u32>,
    pub(crate) bit: Vec<bool>,
    pub(crate) children: Vec<[u32; 2]>,
}

impl AxisTrie {
    pub(crate) fn new() -> Self {
        Self {
            parent: vec![NONE],
            depth: vec![0],
            bit: vec![false],
            children: vec![[NONE, NONE]],
        }
    }

    /// Inserts `path` and returns the chain of nodes from the root to it.
    pub(crate) fn insert(&mut self, path: &DyadicInterval) -> Vec<u32> {
        let mut chain = Vec::with_capacity(path.depth() + 1);
        let mut node = 0u32;
        chain.push(node);
        for b in path.bits() {
            let slot = self.children[node as usize][b as usize];
            node = if slot == NONE {
                let id = self.parent.len() as u32;
                self.parent.push(node);
                self.depth.push(self.depth[node as usize] + 1);
                self.bit.push(b);
                self.children.push([NONE, NONE]);
                self.children[node as usize][b as usize] = id;
                id
            } else {
                slot
            };
            chain.push(node);
        }
        chain
    }

    /// Nodes along `path` that exist in the trie, from the root down.
    pub(crate) fn walk(&self, path: &DyadicInterval) -> Vec<u32> {
        let mut chain = vec![0u32];
        let mut node = 0u32;
        for b in path.bits() {
            let next = self.children[node as usize][b as usize];
            if next == NONE {
                break;
            }
            node = next;
            chain.push(node);
        }
        chain
    }

    pub(crate) fn interval(&self, mut node: u32) -> DyadicInterval {
        let mut bits = Vec::with_capacity(self.depth[node as usize] as usize);
        while node != 0 {
            bits.push(self.bit[node as usize]);
            node = self.parent[node as usize];
        }
        bits.reverse();
        DyadicInterval::from_bits(bits)
    }
}

type Key = [u32; MAX_DIM];

/// One box of the relevant poset with its cached `ν(R)` and `V^ν(R)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PosetEntry {
    key: Key,
    pub mass: f64,
    pub potential: f64,
}

/// How potentials are filled in during construction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PotentialMethod {
    /// Top-down inclusion–exclusion over the parents along each axis subset.
    #[default]
    Recursive,
    /// `Σ_a m_a · #ancestors(join(R, a))` per box; `O(#atoms)` per box.
    ClosedForm,
}

#[derive(Clone, Copy, Debug)]
pub struct PosetOptions {
    pub max_boxes: usize,
    pub method: PotentialMethod,
}

impl Default for PosetOptions {
    fn default() -> Self {
        Self {
            max_boxes: DEFAULT_MAX_BOXES,
            method: PotentialMethod::default(),
        }
    }
}

/// Ancestor closure of `supp ν`, with `ν(R)` and `V^ν(R)` cached per box.
#[derive(Clone, Debug)]
pub struct RelevantPoset {
    dim: usize,
    total_mass: f64,
    tries: Vec<AxisTrie>,
    entries: Vec<PosetEntry>,
    index: HashMap<Key, u32>,
}

impl RelevantPoset {
    pub fn build(nu: &AtomicMeasure) -> Result<Self> {
        Self::build_with(nu, PosetOptions::default())
    }

    pub fn build_with(nu: &AtomicMeasure, opts: PosetOptions) -> Result<Self> {
        let dim = nu.dim();
        let mut tries = vec![AxisTrie::new(); dim];
        let mut entries: Vec<PosetEntry> = Vec::new();
        let mut index: HashMap<Key, u32> = HashMap::new();
        for (atom, mass) in nu.atoms() {
            let chains: Vec<Vec<u32>> = atom
                .sides()
                .iter()
                .zip(tries.iter_mut())
                .map(|(side, trie)| trie.insert(side))
                .collect();
            // odometer over prefix depths, last axis fastest: every parent is
            // visited before its children, so `entries` ends up topologically
            // sorted from the root down
            let mut pos = [0usize; MAX_DIM];
            loop {
                let mut key = [0u32; MAX_DIM];
                for t in 0..dim {
                    key[t] = chains[t][pos[t]];
                }
                match index.get(&key) {
                    Some(&i) => entries[i as usize].mass += mass,
                    None => {
                        if entries.len() >= opts.max_boxes {
                            return Err(Error::PosetBudgetExceeded {
                                budget: opts.max_boxes,
                            });
                        }
                        index.insert(key, entries.len() as u32);
                        entries.push(PosetEntry {
                            key,
                            mass: *mass,
                            potential: 0.0,
                        });
                    }
                }
                let mut t = dim;
                loop {
                    if t == 0 {
                        break;
                    }
                    t -= 1;
                    if pos[t] + 1 < chains[t].len() {
                        pos[t] += 1;
                        break;
                    }
                    pos[t] = 0;
                }
                if pos[..dim].iter().all(|&p| p == 0) {
                    break;
                }
            }
        }
        let mut poset = Self {
            dim,
            total_mass: nu.total_mass(),
            tries,
            entries,
            index,
        };
        match opts.method {
            PotentialMethod::Recursive => poset.fill_potentials_recursive(),
            PotentialMethod::ClosedForm => {
                for i in 0..poset.entries.len() {
                    let b = poset.box_at(i);
                    poset.entries[i].potential = nu.potential(&b)?;
                }
            }
        }
        Ok(poset)
    }

    fn parent_key(&self, key: &Key, axes: usize) -> Option<Key> {
        let mut out = *key;
        for t in 0..self.dim {
            if axes & (1 << t) != 0 {
                let p = self.tries[t].parent[key[t] as usize];
                if p == NONE {
                    return None;
                }
                out[t] = p;
            }
        }
        Some(out)
    }

    fn fill_potentials_recursive(&mut self) {
        for i in 0..self.entries.len() {
            let key = self.entries[i].key;
            let mut v = self.entries[i].mass;
            for axes in 1usize..(1 << self.dim) {
                if let Some(pk) = self.parent_key(&key, axes) {
                    let sign = if axes.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
                    v += sign * self.entries[self.index[&pk] as usize].potential;
                }
            }
            self.entries[i].potential = v;
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Entries in topological order (every box after all of its ancestors).
    pub fn entries(&self) -> &[PosetEntry] {
        &self.entries
    }

    pub fn box_at(&self, i: usize) -> DyadicBox {
        let key = self.entries[i].key;
        DyadicBox::new(
            (0..self.dim)
                .map(|t| self.tries[t].interval(key[t]))
                .collect(),
        )
        .expect("poset dimension is valid")
    }

    pub fn depths_at(&self, i: usize) -> Vec<usize> {
        let key = self.entries[i].key;
        (0..self.dim)
            .map(|t| self.tries[t].depth[key[t] as usize] as usize)
            .collect()
    }

    pub fn find(&self, b: &DyadicBox) -> Option<usize> {
        if b.dim() != self.dim {
            return None;
        }
        let mut key = [0u32; MAX_DIM];
        for (t, side) in b.sides().iter().enumerate() {
            let chain = self.tries[t].walk(side);
            if chain.len() != side.depth() + 1 {
                return None;
            }
            key[t] = *chain.last().unwrap();
        }
        self.index.get(&key).map(|&i| i as usize)
    }

    pub fn get(&self, b: &DyadicBox) -> Option<&PosetEntry> {
        self.find(b).map(|i| &self.entries[i])
    }

    /// Indices of the immediate parents (one per non-root axis).
    pub fn parents(&self, i: usize) -> Vec<usize> {
        let key = self.entries[i].key;
        (0..self.dim)
            .filter_map(|t| self.parent_key(&key, 1 << t))
            .map(|k| self.index[&k] as usize)
            .collect()
    }

    pub fn iter_boxes(&self) -> impl Iterator<Item = (DyadicBox, &PosetEntry)> + '_ {
        self.entries.iter().enumerate().map(|(i, e)| (self.box_at(i), e))
    }

    /// `Σ_R ν(R)²` over the poset, which is all of `T^d` that contributes.
    pub fn energy(&self) -> f64 {
        compensated_sum(self.entries.iter().map(|e| e.mass * e.mass))
    }

    /// `ℰ_ε[ν] = Σ_{V^ν(R) ≤ ε} ν(R)²`. Ties at `V = ε` are included.
    pub fn partial_energy(&self, eps: f64) -> f64 {
        compensated_sum(
            self.entries
                .iter()
                .filter(|e| e.potential <= eps)
                .map(|e| e.mass * e.mass),
        )
    }

    /// `V^ν_ε(α) = Σ_{R ⊇ α, V^ν(R) ≤ ε} ν(R)`.
    pub fn truncated_potential(&self, eps: f64, alpha: &DyadicBox) -> Result<f64> {
        self.sum_over_ancestors(alpha, |e| e.potential <= eps)
    }

    /// `V^ν(α)` for any box, by intersecting its ancestors with the poset.
    pub fn potential(&self, alpha: &DyadicBox) -> Result<f64> {
        if let Some(e) = self.get(alpha) {
            return Ok(e.potential);
        }
        self.sum_over_ancestors(alpha, |_| true)
    }

    fn sum_over_ancestors(&self, alpha: &DyadicBox, keep: impl Fn(&PosetEntry) -> bool) -> Result<f64> {
        if alpha.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: alpha.dim(),
            });
        }
        let chains: Vec<Vec<u32>> = alpha
            .sides()
            .iter()
            .zip(&self.tries)
            .map(|(side, trie)| trie.walk(side))
            .collect();
        let mut acc = Vec::new();
        let mut pos = [0usize; MAX_DIM];
        loop {
            let mut key = [0u32; MAX_DIM];
            for t in 0..self.dim {
                key[t] = chains[t][pos[t]];
            }
            if let Some(&i) = self.index.get(&key) {
                let e = &self.entries[i as usize];
                if keep(e) {
                    acc.push(e.mass);
                }
            }
            let mut t = self.dim;
            loop {
                if t == 0 {
                    return Ok(compensated_sum(acc));
                }
                t -= 1;
                if pos[t] + 1 < chains[t].len() {
                    pos[t] += 1;
                    break;
                }
                pos[t] = 0;
            }
        }
    }

    pub fn min_potential(&self) -> f64 {
        self.entries.iter().map(|e| e.potential).fold(f64::INFINITY, f64::min)
    }

    pub fn max_potential(&self) -> f64 {
        self.entries.iter().map(|e| e.potential).fold(0.0, f64::max)
    }
}

/// `ℰ_ε[ν]`, building the relevant poset on the way.
pub fn partial_energy(nu: &AtomicMeasure, eps: f64) -> Result<f64> {
    Ok(RelevantPoset::build(nu)?.partial_energy(eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseFunction;

    fn b(s: &str) -> DyadicBox {
        s.parse().unwrap()
    }

    #[test]
    fn single_atom_poset() {
        let nu = AtomicMeasure::dirac(b("01x1"), 0.5).unwrap();
        let p = RelevantPoset::build(&nu).unwrap();
        assert_eq!(p.len(), 6);
        assert!(p.entries().iter().all(|e| e.mass == 0.5));
        assert_eq!(p.get(&b("exe")).unwrap().potential, 0.5);
        assert_eq!(p.get(&b("01x1")).unwrap().potential, 3.0);
        assert!(p.get(&b("1x1")).is_none());
    }

    #[test]
    fn two_atoms_inclusion_exclusion() {
        let a = b("0110x10");
        let c = b("0111x11");
        let nu = AtomicMeasure::new(2, [(a.clone(), 0.25), (c.clone(), 0.75)]).unwrap();
        let p = RelevantPoset::build(&nu).unwrap();
        let expected = a.ancestor_count() + c.ancestor_count() - a.join(&c).unwrap().ancestor_count();
        assert_eq!(p.len() as u128, expected);
    }

    #[test]
    fn recursive_and_closed_form_agree() {
        let nu = AtomicMeasure::new(
            2,
            [(b("0110x10"), 0.25), (b("0111x11"), 0.75), (b("1xe"), 0.125), (b("00x0101"), 0.5)],
        )
        .unwrap();
        let rec = RelevantPoset::build(&nu).unwrap();
        let closed = RelevantPoset::build_with(
            &nu,
            PosetOptions {
                method: PotentialMethod::ClosedForm,
                ..Default::default()
            },
        )
        .unwrap();
        for (x, y) in rec.entries().iter().zip(closed.entries()) {
            assert!((x.potential - y.potential).abs() <= 1e-14 * y.potential);
        }
    }

    #[test]
    fn poset_matches_dense_positive_mass_boxes() {
        let nu = AtomicMeasure::new(2, [(b("011x10"), 0.25), (b("01x111"), 0.75), (b("1x0"), 0.5)])
            .unwrap();
        let dense = DenseFunction::from_measure(&nu, 3).unwrap().hardy_down_all();
        let positive = dense.values().iter().filter(|&&v| v > 0.0).count();
        let p = RelevantPoset::build(&nu).unwrap();
        assert_eq!(p.len(), positive);
        for (bx, e) in p.iter_boxes() {
            assert_eq!(dense.get(&bx).unwrap(), e.mass);
        }
    }

    #[test]
    fn partial_energy_limits() {
        let nu = AtomicMeasure::new(2, [(b("011x10"), 0.25), (b("01x111"), 0.75)]).unwrap();
        let p = RelevantPoset::build(&nu).unwrap();
        assert_eq!(p.partial_energy(p.max_potential()), p.energy());
        assert_eq!(p.partial_energy(p.min_potential() * 0.999), 0.0);
        // ties are included
        assert!(p.partial_energy(p.min_potential()) > 0.0);
    }

    #[test]
    fn truncated_potential_limits() {
        let nu = AtomicMeasure::new(2, [(b("011x10"), 0.25), (b("01x111"), 0.75)]).unwrap();
        let p = RelevantPoset::build(&nu).unwrap();
        for alpha in [b("011x10"), b("0111x101"), b("1x1"), b("exe")] {
            let full = nu.potential(&alpha).unwrap();
            assert!((p.truncated_potential(f64::MAX, &alpha).unwrap() - full).abs() < 1e-15);
            assert!((p.potential(&alpha).unwrap() - full).abs() < 1e-15);
            assert_eq!(p.truncated_potential(0.0, &alpha).unwrap(), 0.0);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let nu = AtomicMeasure::dirac(b("0101x11"), 1.0).unwrap();
        let err = RelevantPoset::build_with(
            &nu,
            PosetOptions {
                max_boxes: 10,
                ..Default::default()
            },
        )
        .unwrap_err();
        assert_eq!(err, Error::PosetBudgetExceeded { budget: 10 });
    }
}
