//! Euler discretizations of set-valued dynamical systems `x_{k+1} ∈ x_k + α_k F(x_k)`
//! together with numerical probes for their stability: decrease inequalities for
//! Lyapunov-type functions, stability and attractor probes, conserved quantities
//! and flatness profiles of minima.
//!
//! The crate is `no_std` and only needs an allocator. File formats, plotting and
//! the command-line driver live in the companion `dstab` crate.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod catalog;
pub mod error;
pub mod euler;
pub mod fields;
pub mod flatness;
pub mod lyapunov;
pub mod math;
pub mod region;
pub mod report;
pub mod schedule;
pub mod set;
pub mod stability;
pub mod vector;

pub use catalog::{get_problem, orthogonal_conjugate, AuxFunction, Objective, ProblemSpec};
pub use error::{Error, Result};
pub use euler::{simulate, tracking_gap, Selector, Trajectory};
pub use fields::{bouligand_field, normalized_field, sign_b, Field, FieldSample};
pub use region::Region;
pub use report::{ProbeReport, ProbeStats, Verdict};
pub use schedule::{make_power_schedule, StepSchedule};
pub use set::{set_distance, SetDescriptor, SetKind};
pub use vector::Point;

/// Random number generator used by every sampler in the crate.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Seeded generator; all randomized routines take an explicit seed.
pub fn rng_from_seed(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer, used to derive independent per-item seeds.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
