//! Dense state-vector simulation of small qudit registers.
//!
//! States live in `(C^d)^{tensor n}` with qudit 0 as the most significant
//! digit of the amplitude index. Heralded loss is modeled by stochastic
//! purification: erasing a qudit secretly measures it in the computational
//! basis, discards the outcome and flags the coordinate, so every branch of
//! the induced mixture can be driven through recovery exactly.

mod atom_cz;
mod recovery;
mod state;
mod tec;

pub use atom_cz::{cz_from_atom_sequence, reflectivity, reflectivity_phase, CzCompositionReport};
pub use recovery::{recover_four_qubit, recover_three_qutrit};
pub use state::{Basis, GateOp, MeasurementRecord, QuditState, DEFAULT_AMP_CAP};
pub use tec::{tec_cycle, TecCycleOutput, TecStatus};

// Choosing a surviving logical-operator representative is pure code algebra
// but belongs to the measurement workflow, so it is offered here as well.
pub use crate::codes::logical_measurement_under_erasure;

use thiserror::Error;

use crate::codes::CodeError;
use crate::field::FieldError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("state of {n} qudits with d = {d} exceeds the amplitude cap {cap}")]
    DimensionCap { n: usize, d: u64, cap: usize },
    #[error("qudit index {index} outside register of {n}")]
    BadQudit { index: usize, n: usize },
    #[error("gate targets must be distinct")]
    RepeatedTarget,
    #[error("qudit {0} is erased and carries no coherent amplitude")]
    ErasedTarget(usize),
    #[error("qudit {0} is already erased")]
    DoubleErasure(usize),
    #[error("state is not normalizable (zero norm)")]
    ZeroNorm,
    #[error("amplitude vector has wrong length {got}, expected {expected}")]
    BadAmplitudeCount { got: usize, expected: usize },
    #[error("pattern with {erased} erasures exceeds the code's correction radius {radius}")]
    Uncorrectable { erased: usize, radius: usize },
    #[error("gamma must be positive")]
    BadLinewidth,
}

pub type SimResult<T> = Result<T, SimError>;

#[cfg(test)]
pub(crate) mod test_util {
    use num_complex::Complex64;
    use rand::Rng;

    /// Haar-ish random logical amplitude vector for recovery tests.
    pub fn random_logical<R: Rng>(dim: usize, rng: &mut R) -> Vec<Complex64> {
        let mut v: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        v
    }
}
