use bitree_core::lattice::{BoxSet, DyadicBox, DyadicInterval};
use bitree_core::measure::AtomicMeasure;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Generator = ChaCha8Rng;

/// Independent per-trial seeds drawn from `seed`, so trials can run in any
/// order and still reproduce.
pub fn trial_seeds(seed: u64, count: usize) -> Vec<u64> {
    let mut rng = Generator::seed_from_u64(seed);
    (0..count).map(|_| rng.gen()).collect()
}

pub fn generator(seed: u64) -> Generator {
    Generator::seed_from_u64(seed)
}

pub fn interval(rng: &mut impl Rng, max_depth: usize) -> DyadicInterval {
    let depth = rng.gen_range(0..=max_depth);
    DyadicInterval::from_bits((0..depth).map(|_| rng.gen::<bool>()))
}

pub fn dyadic_box(rng: &mut impl Rng, dim: usize, max_depth: usize) -> DyadicBox {
    DyadicBox::new((0..dim).map(|_| interval(rng, max_depth)).collect()).expect("dim ≥ 1")
}

/// 1 to `max_atoms` atoms with masses in `(0, 1]`.
pub fn measure(rng: &mut impl Rng, dim: usize, max_depth: usize, max_atoms: usize) -> AtomicMeasure {
    let count = rng.gen_range(1..=max_atoms);
    let atoms: Vec<_> = (0..count)
        .map(|_| (dyadic_box(rng, dim, max_depth), 1.0 - rng.gen::<f64>()))
        .collect();
    AtomicMeasure::new(dim, atoms).expect("positive masses")
}

pub fn box_set(rng: &mut impl Rng, dim: usize, max_depth: usize, max_len: usize) -> BoxSet {
    let count = rng.gen_range(1..=max_len);
    BoxSet::new(dim, (0..count).map(|_| dyadic_box(rng, dim, max_depth))).expect("dim ≥ 1")
}
