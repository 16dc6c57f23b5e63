//! Dense functions on a fully materialised truncated lattice.
//!
//! This is the brute-force path: every operation sums over explicit vertex
//! sets. It exists to cross-check the sparse closed forms and is limited to
//! small depths.

use crate::error::{Error, Result};
use crate::lattice::{DyadicBox, DyadicInterval};
use crate::measure::AtomicMeasure;
use crate::sum::compensated_sum;

/// Largest supported truncation depth for each dimension.
pub fn max_dense_depth(dim: usize) -> usize {
    match dim {
        1 => 14,
        2 => 7,
        _ => 4,
    }
}

/// A real value on every vertex of `T^d` truncated at depth `N` per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseFunction {
    dim: usize,
    depth: usize,
    values: Vec<f64>,
}

/// Heap index of the axis node at `(depth, index)`.
fn axis_slot(depth: usize, index: u64) -> usize {
    (1usize << depth) - 1 + index as usize
}

fn axis_interval(slot: usize) -> DyadicInterval {
    let depth = (usize::BITS - 1 - (slot + 1).leading_zeros()) as usize;
    let index = (slot + 1 - (1 << depth)) as u64;
    DyadicInterval::from_index(depth, index).expect("slot within lattice")
}

impl DenseFunction {
    pub fn zeros(dim: usize, depth: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if depth > max_dense_depth(dim) {
            return Err(Error::LatticeTooLarge { depth, dim });
        }
        let per_axis = (1usize << (depth + 1)) - 1;
        Ok(Self {
            dim,
            depth,
            values: vec![0.0; per_axis.pow(dim as u32)],
        })
    }

    pub fn from_fn(dim: usize, depth: usize, mut f: impl FnMut(&DyadicBox) -> f64) -> Result<Self> {
        let mut out = Self::zeros(dim, depth)?;
        for slot in 0..out.values.len() {
            out.values[slot] = f(&out.vertex(slot));
        }
        Ok(out)
    }

    /// The measure as a function on the lattice (`ν(α)` at atoms, 0 elsewhere).
    pub fn from_measure(nu: &AtomicMeasure, depth: usize) -> Result<Self> {
        let mut out = Self::zeros(nu.dim(), depth)?;
        for (b, m) in nu.atoms() {
            let slot = out.slot(b)?;
            out.values[slot] += m;
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn per_axis(&self) -> usize {
        (1usize << (self.depth + 1)) - 1
    }

    fn slot(&self, b: &DyadicBox) -> Result<usize> {
        if b.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: b.dim(),
            });
        }
        let per_axis = self.per_axis();
        let mut slot = 0;
        for side in b.sides() {
            if side.depth() > self.depth {
                return Err(Error::DepthOverflow {
                    depth: side.depth(),
                    max_depth: self.depth,
                });
            }
            slot = slot * per_axis + axis_slot(side.depth(), side.index().unwrap());
        }
        Ok(slot)
    }

    fn vertex(&self, mut slot: usize) -> DyadicBox {
        let per_axis = self.per_axis();
        let mut sides = vec![DyadicInterval::root(); self.dim];
        for side in sides.iter_mut().rev() {
            *side = axis_interval(slot % per_axis);
            slot /= per_axis;
        }
        DyadicBox::new(sides).unwrap()
    }

    pub fn get(&self, b: &DyadicBox) -> Result<f64> {
        Ok(self.values[self.slot(b)?])
    }

    pub fn set(&mut self, b: &DyadicBox, value: f64) -> Result<()> {
        let slot = self.slot(b)?;
        self.values[slot] = value;
        Ok(())
    }

    /// All vertices with their values, in slot order.
    pub fn iter(&self) -> impl Iterator<Item = (DyadicBox, f64)> + '_ {
        (0..self.values.len()).map(|s| (self.vertex(s), self.values[s]))
    }

    pub fn vertices(&self) -> impl Iterator<Item = DyadicBox> + '_ {
        (0..self.values.len()).map(|s| self.vertex(s))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `𝕀f(α)`: sum over all boxes containing `α`.
    pub fn hardy_up(&self, alpha: &DyadicBox) -> Result<f64> {
        self.slot(alpha)?;
        Ok(compensated_sum(
            alpha.ancestors().map(|a| self.values[self.slot(&a).unwrap()]),
        ))
    }

    /// `𝕀*f(α)`: sum over all lattice boxes contained in `α`.
    pub fn hardy_down(&self, alpha: &DyadicBox) -> Result<f64> {
        self.slot(alpha)?;
        let per_axis_slots: Vec<Vec<usize>> = alpha
            .sides()
            .iter()
            .map(|side| {
                let (k, i) = (side.depth(), side.index().unwrap());
                (0..=self.depth - k)
                    .flat_map(|j| {
                        let lo = i << j;
                        (lo..lo + (1 << j)).map(move |idx| axis_slot(k + j, idx))
                    })
                    .collect()
            })
            .collect();
        let per_axis = self.per_axis();
        let mut acc = Vec::new();
        let mut stack = vec![(0usize, 0usize)];
        while let Some((axis, partial)) = stack.pop() {
            if axis == self.dim {
                acc.push(self.values[partial]);
                continue;
            }
            for &s in &per_axis_slots[axis] {
                stack.push((axis + 1, partial * per_axis + s));
            }
        }
        Ok(compensated_sum(acc))
    }

    pub fn hardy_up_all(&self) -> Self {
        let mut out = self.clone();
        for s in 0..self.values.len() {
            out.values[s] = self.hardy_up(&self.vertex(s)).unwrap();
        }
        out
    }

    pub fn hardy_down_all(&self) -> Self {
        let mut out = self.clone();
        for s in 0..self.values.len() {
            out.values[s] = self.hardy_down(&self.vertex(s)).unwrap();
        }
        out
    }

    /// `Σ_α f(α)·g(α)` over the lattice.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        if self.dim != other.dim || self.depth != other.depth {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(compensated_sum(
            self.values.iter().zip(&other.values).map(|(a, b)| a * b),
        ))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            dim: self.dim,
            depth: self.depth,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!((self.dim, self.depth), (other.dim, other.depth));
        Self {
            dim: self.dim,
            depth: self.depth,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Superadditivity: at every vertex and along every axis that can still
    /// be split, `g(α) ≥ g(child₀) + g(child₁)` up to round-off.
    pub fn is_superadditive(&self) -> bool {
        self.vertices().all(|alpha| {
            let g = self.get(&alpha).unwrap();
            (0..self.dim)
                .filter(|&axis| alpha.side(axis).depth() < self.depth)
                .all(|axis| {
                    let [c0, c1] = alpha.children_along(axis);
                    let children = self.get(&c0).unwrap() + self.get(&c1).unwrap();
                    g >= children - 1e-12 * g.abs().max(children.abs())
                })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> DyadicBox {
        s.parse().unwrap()
    }

    #[test]
    fn slots_round_trip() {
        let f = DenseFunction::zeros(2, 3).unwrap();
        for s in 0..f.len() {
            assert_eq!(f.slot(&f.vertex(s)).unwrap(), s);
        }
        assert_eq!(f.len(), 225);
        assert!(matches!(f.get(&b("0000x0")), Err(Error::DepthOverflow { .. })));
        assert!(DenseFunction::zeros(2, 8).is_err());
    }

    #[test]
    fn hardy_up_examples() {
        let zero = DenseFunction::zeros(2, 3).unwrap();
        assert_eq!(zero.hardy_up(&b("01x1")).unwrap(), 0.0);
        let mut at_root = zero.clone();
        at_root.set(&b("exe"), 1.0).unwrap();
        assert!(at_root.hardy_up_all().values().iter().all(|&v| v == 1.0));
        let ones = DenseFunction::from_fn(1, 2, |_| 1.0).unwrap();
        assert_eq!(ones.hardy_up(&b("10")).unwrap(), 3.0);
    }

    #[test]
    fn hardy_down_examples() {
        let zero = DenseFunction::zeros(1, 4).unwrap();
        assert_eq!(zero.hardy_down(&b("e")).unwrap(), 0.0);
        let nu = AtomicMeasure::new(2, [(b("000x111"), 0.25), (b("101x010"), 0.5)]).unwrap();
        let f = DenseFunction::from_measure(&nu, 3).unwrap();
        assert_eq!(f.hardy_down(&b("exe")).unwrap(), 0.75);
        assert_eq!(f.hardy_down(&b("0x1")).unwrap(), 0.25);
        let ones = DenseFunction::from_fn(2, 2, |_| 1.0).unwrap();
        // descendants of a depth-(1,1) box in depth-2 lattice: 3 x 3
        assert_eq!(ones.hardy_down(&b("0x1")).unwrap(), 9.0);
    }

    #[test]
    fn superadditivity_examples() {
        let nu = AtomicMeasure::new(2, [(b("000x111"), 0.25), (b("10x0"), 0.5)]).unwrap();
        let g = DenseFunction::from_measure(&nu, 3).unwrap().hardy_down_all();
        assert!(g.is_superadditive());
        let ones = DenseFunction::from_fn(1, 1, |_| 1.0).unwrap();
        assert!(!ones.is_superadditive());
        let ones2 = DenseFunction::from_fn(2, 2, |_| 1.0).unwrap();
        assert!(!ones2.is_superadditive());
    }
}
