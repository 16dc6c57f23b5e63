//! Dyadic intervals, boxes and box sets.
//!
//! A vertex of `T` is a dyadic sub-interval of `[0, 1]`, identified with the
//! bit path that selects it from the root (most significant bit first). A
//! vertex of `T^d` is a `d`-tuple of such intervals. Paths are stored bit
//! packed so that very deep vertices (depth > 1000) stay cheap to compare,
//! hash and join.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

fn words_for(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

/// A dyadic sub-interval of `[0, 1]`, stored as its bit path from the root.
///
/// Bits past `len` in the last word are always zero, so the derived
/// equality and hash agree with path equality.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct DyadicInterval {
    len: u32,
    words: Box<[u64]>,
}

impl DyadicInterval {
    /// The root interval `[0, 1]`.
    pub fn root() -> Self {
        Self::default()
    }

    /// The left-most interval at `depth`, i.e. the all-zero path.
    pub fn zeros(depth: usize) -> Self {
        Self {
            len: depth as u32,
            words: vec![0; words_for(depth)].into_boxed_slice(),
        }
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut words = Vec::new();
        let mut len = 0usize;
        for bit in bits {
            if len.is_multiple_of(WORD_BITS) {
                words.push(0);
            }
            if bit {
                *words.last_mut().unwrap() |= 1u64 << (WORD_BITS - 1 - len % WORD_BITS);
            }
            len += 1;
        }
        Self {
            len: len as u32,
            words: words.into_boxed_slice(),
        }
    }

    /// The interval `[index·2^-depth, (index+1)·2^-depth]`; `depth ≤ 64`.
    pub fn from_index(depth: usize, index: u64) -> Result<Self> {
        if depth > 64 || (depth < 64 && index >> depth != 0) {
            return Err(Error::IndexOutOfRange { depth, index });
        }
        Ok(Self::from_bits((0..depth).map(|i| (index >> (depth - 1 - i)) & 1 == 1)))
    }

    pub fn depth(&self) -> usize {
        self.len as usize
    }

    pub fn is_root(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.depth(), "bit {i} out of range for depth {}", self.len);
        (self.words[i / WORD_BITS] >> (WORD_BITS - 1 - i % WORD_BITS)) & 1 == 1
    }

    pub fn bits(&self) -> impl DoubleEndedIterator<Item = bool> + ExactSizeIterator + '_ {
        (0..self.depth()).map(move |i| self.bit(i))
    }

    /// Integer index of the interval at its depth, when it fits a `u64`.
    pub fn index(&self) -> Option<u64> {
        if self.depth() > 64 {
            return None;
        }
        Some(self.bits().fold(0u64, |acc, b| (acc << 1) | b as u64))
    }

    /// The ancestor at `depth` (the path truncated to `depth` bits).
    pub fn prefix(&self, depth: usize) -> Self {
        assert!(depth <= self.depth());
        let mut words = self.words[..words_for(depth)].to_vec();
        if !depth.is_multiple_of(WORD_BITS) {
            let keep = depth % WORD_BITS;
            *words.last_mut().unwrap() &= !0u64 << (WORD_BITS - keep);
        }
        Self {
            len: depth as u32,
            words: words.into_boxed_slice(),
        }
    }

    pub fn parent(&self) -> Option<Self> {
        (!self.is_root()).then(|| self.prefix(self.depth() - 1))
    }

    pub fn child(&self, bit: bool) -> Self {
        self.extended(std::iter::once(bit))
    }

    pub fn children(&self) -> [Self; 2] {
        [self.child(false), self.child(true)]
    }

    /// This path followed by `bits`.
    pub fn extended<I: IntoIterator<Item = bool>>(&self, bits: I) -> Self {
        Self::from_bits(self.bits().chain(bits))
    }

    /// This path followed by `count` zero bits: the South-West descendant.
    pub fn with_zeros(&self, count: usize) -> Self {
        let len = self.depth() + count;
        let mut words = self.words.to_vec();
        words.resize(words_for(len), 0);
        Self {
            len: len as u32,
            words: words.into_boxed_slice(),
        }
    }

    /// Length of the longest common prefix of the two paths.
    pub fn common_prefix_len(&self, other: &Self) -> usize {
        let limit = self.depth().min(other.depth());
        for (w, (a, b)) in self.words.iter().zip(other.words.iter()).enumerate() {
            let x = a ^ b;
            if x != 0 {
                return (w * WORD_BITS + x.leading_zeros() as usize).min(limit);
            }
        }
        limit
    }

    /// True iff `other ⊆ self`, i.e. this path is a prefix of `other`'s.
    pub fn contains(&self, other: &Self) -> bool {
        self.depth() <= other.depth() && self.common_prefix_len(other) == self.depth()
    }

    /// Smallest dyadic interval containing both.
    pub fn join(&self, other: &Self) -> Self {
        self.prefix(self.common_prefix_len(other))
    }

    /// Left endpoint as a float (lossy beyond 53 bits of depth).
    pub fn left(&self) -> f64 {
        let mut x = 0.0;
        let mut scale = 0.5;
        for b in self.bits().take(1100) {
            if b {
                x += scale;
            }
            scale *= 0.5;
        }
        x
    }

    pub fn length(&self) -> f64 {
        (-(self.depth() as f64)).exp2()
    }
}

impl Ord for DyadicInterval {
    /// Lexicographic path order, a prefix sorting before its extensions.
    fn cmp(&self, other: &Self) -> Ordering {
        let lcp = self.common_prefix_len(other);
        if lcp == self.depth() || lcp == other.depth() {
            self.len.cmp(&other.len)
        } else {
            self.bit(lcp).cmp(&other.bit(lcp))
        }
    }
}

impl PartialOrd for DyadicInterval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_root() {
            return f.write_str("e");
        }
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Long South-West paths are abbreviated by their trailing zero run.
        let trailing = self.bits().rev().take_while(|b| !b).count();
        if trailing > 16 {
            let head = self.prefix(self.depth() - trailing);
            let head = if head.is_root() { String::new() } else { head.to_string() };
            write!(f, "{head}0^{trailing}")
        } else {
            write!(f, "{self}")
        }
    }
}

impl FromStr for DyadicInterval {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "e" {
            return Ok(Self::root());
        }
        if s.is_empty() {
            return Err(Error::Parse("empty interval path".to_string()));
        }
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("invalid path character {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::from_bits)
    }
}

/// A vertex of `T^d`: one dyadic interval per axis, `d ∈ {1, 2, 3}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicBox {
    sides: Box<[DyadicInterval]>,
}

pub const MAX_DIM: usize = 3;

impl DyadicBox {
    pub fn new(sides: Vec<DyadicInterval>) -> Result<Self> {
        if sides.is_empty() || sides.len() > MAX_DIM {
            return Err(Error::UnsupportedDimension(sides.len()));
        }
        Ok(Self {
            sides: sides.into_boxed_slice(),
        })
    }

    pub fn root(dim: usize) -> Result<Self> {
        Self::new(vec![DyadicInterval::root(); dim])
    }

    pub fn interval(side: DyadicInterval) -> Self {
        Self {
            sides: vec![side].into_boxed_slice(),
        }
    }

    pub fn rectangle(x: DyadicInterval, y: DyadicInterval) -> Self {
        Self {
            sides: vec![x, y].into_boxed_slice(),
        }
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn sides(&self) -> &[DyadicInterval] {
        &self.sides
    }

    pub fn side(&self, axis: usize) -> &DyadicInterval {
        &self.sides[axis]
    }

    pub fn depths(&self) -> Vec<usize> {
        self.sides.iter().map(DyadicInterval::depth).collect()
    }

    pub fn total_depth(&self) -> usize {
        self.sides.iter().map(DyadicInterval::depth).sum()
    }

    pub fn is_root(&self) -> bool {
        self.sides.iter().all(DyadicInterval::is_root)
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() == other.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            })
        }
    }

    /// True iff `other ⊆ self` on every axis.
    pub fn contains(&self, other: &Self) -> Result<bool> {
        self.check_dim(other)?;
        Ok(self.contains_unchecked(other))
    }

    pub(crate) fn contains_unchecked(&self, other: &Self) -> bool {
        self.sides.iter().zip(other.sides.iter()).all(|(a, b)| a.contains(b))
    }

    /// Smallest box containing both (per-axis longest common prefix).
    pub fn join(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self {
            sides: self
                .sides
                .iter()
                .zip(other.sides.iter())
                .map(|(a, b)| a.join(b))
                .collect(),
        })
    }

    /// Number of boxes containing this one, root and itself included.
    pub fn ancestor_count(&self) -> u128 {
        self.sides.iter().map(|s| s.depth() as u128 + 1).product()
    }

    /// `ancestor_count(join(self, other))` without building the join. This is
    /// the energy kernel: the number of boxes containing both.
    pub fn common_ancestor_count(&self, other: &Self) -> Result<f64> {
        self.check_dim(other)?;
        Ok(self.common_ancestor_count_unchecked(other))
    }

    pub(crate) fn common_ancestor_count_unchecked(&self, other: &Self) -> f64 {
        self.sides
            .iter()
            .zip(other.sides.iter())
            .map(|(a, b)| (a.common_prefix_len(b) + 1) as f64)
            .product()
    }

    /// Every box containing this one, each exactly once, in lexicographic
    /// order of the per-axis depths.
    pub fn ancestors(&self) -> Ancestors<'_> {
        Ancestors {
            source: self,
            depths: Some(vec![0; self.dim()]),
        }
    }

    /// Parent along `axis`, if that side is not the root interval.
    pub fn parent_along(&self, axis: usize) -> Option<Self> {
        let parent = self.sides[axis].parent()?;
        let mut sides = self.sides.to_vec();
        sides[axis] = parent;
        Some(Self {
            sides: sides.into_boxed_slice(),
        })
    }

    /// The two children obtained by halving along `axis`.
    pub fn children_along(&self, axis: usize) -> [Self; 2] {
        self.sides[axis].children().map(|c| {
            let mut sides = self.sides.to_vec();
            sides[axis] = c;
            Self {
                sides: sides.into_boxed_slice(),
            }
        })
    }

    fn with_side_prefixes(&self, depths: &[usize]) -> Self {
        Self {
            sides: self
                .sides
                .iter()
                .zip(depths)
                .map(|(s, &d)| s.prefix(d))
                .collect(),
        }
    }
}

impl fmt::Display for DyadicBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.sides.iter().enumerate() {
            if i > 0 {
                f.write_str("x")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for DyadicBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.sides.iter().enumerate() {
            if i > 0 {
                f.write_str("x")?;
            }
            write!(f, "{s:?}")?;
        }
        Ok(())
    }
}

impl FromStr for DyadicBox {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let sides = s
            .trim()
            .split('x')
            .map(str::parse)
            .collect::<Result<Vec<DyadicInterval>>>()?;
        Self::new(sides)
    }
}

/// Iterator over the ancestors of a box (see [`DyadicBox::ancestors`]).
pub struct Ancestors<'a> {
    source: &'a DyadicBox,
    depths: Option<Vec<usize>>,
}

impl Iterator for Ancestors<'_> {
    type Item = DyadicBox;

    fn next(&mut self) -> Option<DyadicBox> {
        let depths = self.depths.as_mut()?;
        let item = self.source.with_side_prefixes(depths);
        // odometer increment, last axis fastest
        let mut axis = depths.len();
        loop {
            if axis == 0 {
                self.depths = None;
                break;
            }
            axis -= 1;
            if depths[axis] < self.source.sides[axis].depth() {
                depths[axis] += 1;
                break;
            }
            depths[axis] = 0;
        }
        Some(item)
    }
}

/// A finite set of boxes of one dimension, kept sorted and deduplicated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoxSet {
    dim: usize,
    boxes: Vec<DyadicBox>,
}

impl BoxSet {
    pub fn new(dim: usize, boxes: impl IntoIterator<Item = DyadicBox>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        let mut boxes: Vec<DyadicBox> = boxes.into_iter().collect();
        if let Some(b) = boxes.iter().find(|b| b.dim() != dim) {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: b.dim(),
            });
        }
        boxes.sort();
        boxes.dedup();
        Ok(Self { dim, boxes })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DyadicBox> {
        self.boxes.iter()
    }

    pub fn as_slice(&self) -> &[DyadicBox] {
        &self.boxes
    }

    pub fn contains_root(&self) -> bool {
        self.boxes.iter().any(DyadicBox::is_root)
    }

    /// Keeps only the inclusion-maximal boxes. Every dropped box lies inside
    /// a retained one, and retained boxes are pairwise non-nested.
    pub fn reduce_to_maximal(&self) -> Self {
        let mut by_size: Vec<&DyadicBox> = self.boxes.iter().collect();
        by_size.sort_by(|a, b| a.total_depth().cmp(&b.total_depth()).then_with(|| a.cmp(b)));
        let mut kept: Vec<&DyadicBox> = Vec::new();
        for b in by_size {
            // a strict container has strictly smaller total depth, so it is
            // already in `kept` if it exists in the set
            if !kept.iter().any(|k| k.contains_unchecked(b)) {
                kept.push(b);
            }
        }
        let mut boxes: Vec<DyadicBox> = kept.into_iter().cloned().collect();
        boxes.sort();
        Self { dim: self.dim, boxes }
    }
}

impl<'a> IntoIterator for &'a BoxSet {
    type Item = &'a DyadicBox;
    type IntoIter = std::slice::Iter<'a, DyadicBox>;

    fn into_iter(self) -> Self::IntoIter {
        self.boxes.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> DyadicBox {
        s.parse().unwrap()
    }

    #[test]
    fn contains_examples() {
        let root = DyadicBox::root(2).unwrap();
        assert!(root.contains(&b("0110x1")).unwrap());
        // [0,1/4]x[0,1/2] contains [0,1/8]x[0,1/2]
        assert!(b("00x0").contains(&b("000x0")).unwrap());
        // [0,1/4]x[0,1/2] vs [1/4,1/2]x[0,1/4]
        assert!(!b("00x0").contains(&b("01x00")).unwrap());
        assert!(b("00x0").contains(&b("0x0")).is_ok());
        assert!(matches!(
            b("00x0").contains(&b("00")),
            Err(Error::DimensionMismatch { left: 2, right: 1 })
        ));
    }

    #[test]
    fn join_examples() {
        let x = b("0110x10");
        assert_eq!(x.join(&x).unwrap(), x);
        assert_eq!(b("00").join(&b("01")).unwrap(), b("0"));
        // [5/8,3/4] and [0,1/4] only share the root
        assert_eq!(b("101").join(&b("00")).unwrap(), b("e"));
        assert!(b("0x0").join(&b("0")).is_err());
    }

    #[test]
    fn ancestors_examples() {
        let root = DyadicBox::root(2).unwrap();
        assert_eq!(root.ancestors().collect::<Vec<_>>(), vec![root.clone()]);
        assert_eq!(b("011").ancestors().count(), 4);
        let r = b("010x11");
        let all: Vec<_> = r.ancestors().collect();
        assert_eq!(all.len(), 12);
        assert_eq!(r.ancestor_count(), 12);
        let unique: std::collections::HashSet<_> = all.iter().collect();
        assert_eq!(unique.len(), 12);
        assert!(all.iter().all(|a| a.contains(&r).unwrap()));
        assert!(all.contains(&r) && all.contains(&DyadicBox::root(2).unwrap()));
    }

    #[test]
    fn reduce_examples() {
        let s = BoxSet::new(2, [b("exe"), b("01x1")]).unwrap();
        assert_eq!(s.reduce_to_maximal().as_slice(), &[b("exe")]);
        let s = BoxSet::new(2, [b("0x0"), b("00x00")]).unwrap();
        assert_eq!(s.reduce_to_maximal().as_slice(), &[b("0x0")]);
    }

    #[test]
    fn serialization() {
        assert_eq!(b("0010x01").to_string(), "0010x01");
        assert_eq!(DyadicBox::root(2).unwrap().to_string(), "exe");
        assert_eq!(b("ex1").depths(), vec![0, 1]);
        assert!("0120".parse::<DyadicInterval>().is_err());
        assert!("0x0x0x0".parse::<DyadicBox>().is_err());
        assert!("".parse::<DyadicBox>().is_err());
    }

    #[test]
    fn deep_paths() {
        let a = DyadicInterval::from_index(5, 3).unwrap().with_zeros(1200);
        let c = a.child(true);
        assert_eq!(a.depth(), 1205);
        assert!(a.contains(&c));
        assert_eq!(a.common_prefix_len(&c), 1205);
        assert_eq!(c.parent().unwrap(), a);
        assert_eq!(a.prefix(5).index(), Some(3));
        let other = DyadicInterval::from_index(5, 2).unwrap().with_zeros(1200);
        assert_eq!(a.common_prefix_len(&other), 4);
        assert_eq!(format!("{a:?}"), "000110^1200");
        assert_eq!(DyadicInterval::zeros(70), DyadicInterval::root().with_zeros(70));
    }

    #[test]
    fn index_round_trip() {
        for depth in 0..6 {
            for index in 0..(1u64 << depth) {
                let i = DyadicInterval::from_index(depth, index).unwrap();
                assert_eq!(i.index(), Some(index));
                assert_eq!(i.left(), index as f64 / (1u64 << depth) as f64);
            }
        }
        assert!(DyadicInterval::from_index(2, 4).is_err());
    }

    #[test]
    fn ordering_puts_prefix_first() {
        let mut v = [b("1"), b("01"), b("e"), b("0"), b("00")];
        v.sort();
        let s: Vec<String> = v.iter().map(ToString::to_string).collect();
        assert_eq!(s, ["e", "0", "00", "01", "1"]);
    }
}
