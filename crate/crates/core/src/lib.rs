//! Simulation and analysis toolkit for qudit erasure-correcting codes and
//! one-way quantum repeater chains.
//!
//! The crate is organized around the lifecycle of an encoded photonic qudit:
//!
//! - [`field`]: exact arithmetic over prime fields `Z_d` plus polynomial
//!   evaluation/interpolation, the algebraic backbone of polynomial codes.
//! - [`codes`]: construction of quantum polynomial codes `[[2k+1,1,k+1]]_d`,
//!   the fixed `[[3,1,2]]_3` / `[[4,2,2]]` codes and quantum parity codes,
//!   together with correctability predicates and analytic success
//!   probabilities.
//! - [`simulator`]: dense state-vector simulation of small qudit registers
//!   (generalized Pauli/Fourier/SUM gates, heralded erasures, recovery
//!   circuits, teleportation-based error correction, atom-mediated CZ
//!   composition).
//! - [`noise`]: the transmission/gate/preparation error channels in the
//!   Weyl-frame picture and a scalable frame-level Monte Carlo.
//! - [`percolation`]: surface-code erasure decoding as bond percolation on
//!   toric and planar lattices (union-find with winding detection).
//! - [`repeater`]: analytic one-way repeater chain model: per-hop statistics,
//!   end-to-end logical error rate, secret-key rate, and maximum range.
//! - [`costopt`]: cost-coefficient minimization over code size and repeater
//!   spacing, with a pluggable parity-code baseline.
//! - [`mc`]: reproducible Monte Carlo plumbing (counter-based RNG substreams,
//!   result records with standard errors).

pub mod codes;
pub mod costopt;
pub mod field;
pub mod mc;
pub mod noise;
pub mod percolation;
pub mod repeater;
pub mod simulator;

pub use codes::{CodeSpec, ErasurePattern, QpcCode, QpycCode};
pub use field::{FieldElement, Polynomial, PrimeModulus};
pub use mc::MonteCarloResult;
pub use noise::{ChannelParams, WeylFrame};
pub use simulator::QuditState;
