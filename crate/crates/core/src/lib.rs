//! Finite-blocklength analysis of arbitrarily varying channels with input and
//! state cost constraints.

pub mod channel;
pub mod convex;
pub mod error;
pub mod fbl;
pub mod info;
pub mod lp;
pub mod normal;
pub mod saddle;
pub mod scalar;
pub mod sim;
mod search;
pub mod specfile;
pub mod symmetrize;
pub mod types;

pub use channel::{adding_avc, bsc_avc, Avc, AvcParts, CondDist, Dist, Sequence, Violation};
pub use error::{AvcError, Result};
pub use fbl::{chernoff_bound, RcuReport};
pub use normal::{q_inv, CorollaryCheck, NaCurve, SecondOrder};
pub use saddle::{analyze, capacity, random_code_capacity, Capacity, SaddleOptions, SaddleSolution};
pub use scalar::Scalar;
pub use sim::{Codebook, SimResult, Verdict};
pub use specfile::ChannelSpec;
pub use symmetrize::{eta_star, is_symmetrizable, lambda0};

pub type Avc64 = Avc<f64>;
pub type Avc32 = Avc<f32>;
pub type Dist64 = Dist<f64>;
pub type Dist32 = Dist<f32>;
