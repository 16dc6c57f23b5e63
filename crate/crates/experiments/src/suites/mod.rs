pub mod d1;
pub mod levelset;
pub mod nazarov;
pub mod partial_energy;
pub mod small_energy;
pub mod smp;
pub mod tree;

pub use d1::verify_d1;
pub use levelset::levelset;
pub use nazarov::nazarov;
pub use partial_energy::partial_energy;
pub use small_energy::small_energy;
pub use smp::smp_diagnostic;
pub use tree::{verify_oracles, verify_tree};
