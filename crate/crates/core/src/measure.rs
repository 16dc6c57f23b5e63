//! Atomic measures on `T^d` and their closed-form potentials and energies.
//!
//! The potential at `α` is `Σ_{R ⊇ α} ν(R)`. A box `R` collects the mass of
//! atom `a` exactly when it contains both `α` and `a`, i.e. when it contains
//! `join(α, a)`, so
//!
//! ```text
//! V^ν(α) = Σ_a m_a · #ancestors(join(α, a))
//! ```
//!
//! and the energy is the double sum of the same kernel.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lattice::{DyadicBox, MAX_DIM};
use crate::sum::{compensated_sum, CompensatedSum};

/// Finite nonnegative mass assignment on vertices of `T^d`.
///
/// Atoms may sit on any vertex, leaves or not. Zero masses are dropped and
/// repeated boxes are merged, so every stored mass is strictly positive.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMeasure {
    dim: usize,
    atoms: Vec<(DyadicBox, f64)>,
}

impl AtomicMeasure {
    pub fn empty(dim: usize) -> Result<Self> {
        Self::new(dim, [])
    }

    pub fn new(dim: usize, atoms: impl IntoIterator<Item = (DyadicBox, f64)>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        let mut list = Vec::new();
        for (b, m) in atoms {
            if !m.is_finite() || m < 0.0 {
                return Err(Error::InvalidMass(m));
            }
            if b.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: b.dim(),
                });
            }
            if m > 0.0 {
                list.push((b, m));
            }
        }
        list.sort_by(|a, b| a.0.cmp(&b.0));
        let mut atoms: Vec<(DyadicBox, f64)> = Vec::with_capacity(list.len());
        for (b, m) in list {
            match atoms.last_mut() {
                Some((last, acc)) if *last == b => *acc += m,
                _ => atoms.push((b, m)),
            }
        }
        Ok(Self { dim, atoms })
    }

    pub fn dirac(b: DyadicBox, mass: f64) -> Result<Self> {
        Self::new(b.dim(), [(b, mass)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Atoms sorted by box order.
    pub fn atoms(&self) -> &[(DyadicBox, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `|ν|`.
    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.atoms.iter().map(|(_, m)| *m))
    }

    pub fn max_depth(&self) -> usize {
        self.atoms
            .iter()
            .flat_map(|(b, _)| b.depths())
            .max()
            .unwrap_or(0)
    }

    pub fn scaled(&self, t: f64) -> Result<Self> {
        Self::new(self.dim, self.atoms.iter().map(|(b, m)| (b.clone(), m * t)))
    }

    fn check(&self, b: &DyadicBox) -> Result<()> {
        if b.dim() == self.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                left: self.dim,
                right: b.dim(),
            })
        }
    }

    /// `ν(R) = 𝕀*ν(R)`: total mass of atoms inside `R`.
    pub fn box_mass(&self, r: &DyadicBox) -> Result<f64> {
        self.check(r)?;
        Ok(compensated_sum(
            self.atoms
                .iter()
                .filter(|(b, _)| r.contains_unchecked(b))
                .map(|(_, m)| *m),
        ))
    }

    /// `V^ν(α)`, exact, in `O(#atoms)`.
    pub fn potential(&self, alpha: &DyadicBox) -> Result<f64> {
        self.check(alpha)?;
        Ok(compensated_sum(
            self.atoms
                .iter()
                .map(|(b, m)| m * alpha.common_ancestor_count_unchecked(b)),
        ))
    }

    /// Potentials at every atom, in atom order.
    pub fn potentials_on_support(&self) -> Vec<f64> {
        self.atoms
            .iter()
            .map(|(a, _)| {
                compensated_sum(
                    self.atoms
                        .iter()
                        .map(|(b, m)| m * a.common_ancestor_count_unchecked(b)),
                )
            })
            .collect()
    }

    /// `ℰ[ν] = Σ_{a,b} m_a m_b · #ancestors(join(a, b))`, in `O(#atoms²)`.
    pub fn energy(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        for (i, (a, ma)) in self.atoms.iter().enumerate() {
            acc.add(ma * ma * a.ancestor_count() as f64);
            for (b, mb) in &self.atoms[i + 1..] {
                acc.add(2.0 * ma * mb * a.common_ancestor_count_unchecked(b));
            }
        }
        acc.value()
    }

    /// `∫ V^ν dν`, the third route to the energy.
    pub fn energy_from_potentials(&self) -> f64 {
        compensated_sum(
            self.atoms
                .iter()
                .zip(self.potentials_on_support())
                .map(|((_, m), v)| m * v),
        )
    }

    /// Line-oriented text form: `<box> <mass>` per atom.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (b, m) in &self.atoms {
            let _ = writeln!(out, "{b} {}", format_mass(*m));
        }
        out
    }

    /// Parses the text form. `#` starts a comment; blank lines are ignored.
    /// The dimension is taken from the first atom unless `dim` is given.
    pub fn from_text(text: &str, dim: Option<usize>) -> Result<Self> {
        let mut atoms = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(b), Some(m), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Parse(format!(
                    "line {}: expected `<box> <mass>`, got {raw:?}",
                    lineno + 1
                )));
            };
            let b: DyadicBox = b
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            let m = parse_mass(m).map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            atoms.push((b, m));
        }
        let dim = dim.or_else(|| atoms.first().map(|(b, _)| b.dim())).unwrap_or(1);
        Self::new(dim, atoms)
    }
}

/// Parses a decimal mass or a power of two written `2^-k` (or `2^k`).
pub fn parse_mass(s: &str) -> Result<f64> {
    let value = if let Some(exp) = s.strip_prefix("2^") {
        let k: i32 = exp
            .parse()
            .map_err(|_| Error::Parse(format!("invalid exponent in mass {s:?}")))?;
        2f64.powi(k)
    } else {
        s.parse::<f64>()
            .map_err(|_| Error::Parse(format!("invalid mass {s:?}")))?
    };
    if !value.is_finite() || value < 0.0 {
        return Err(Error::InvalidMass(value));
    }
    Ok(value)
}

/// Exact powers of two are written `2^-k`; anything else as a decimal.
pub fn format_mass(m: f64) -> String {
    if m > 0.0 && m.is_finite() {
        let k = m.log2().round() as i32;
        if 2f64.powi(k) == m && k <= 0 {
            return format!("2^{k}");
        }
    }
    format!("{m:e}")
}
