pub mod eval;
pub mod gradcheck;
pub mod ncuts;
pub mod o2p;
