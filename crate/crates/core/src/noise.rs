//! Weyl-frame error model for the repeater hop.
//!
//! Physical noise acts as probabilistic generalized-Pauli (Weyl) operators,
//! so instead of amplitudes it suffices to track per-qudit exponents of
//! `X^a Z^b` together with loss flags. Three channels feed the model: the
//! fiber transmission channel (loss, depolarization, dephasing), the
//! imperfect SUM gate at the station, and depolarization in ancilla-block
//! preparation. Uniform Weyl mixtures here include the identity term, i.e.
//! the sums run from exponent zero, which is also how the first-order
//! measurement-error rates are normalized.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codes::QpycCode;
use crate::field::PrimeModulus;
use crate::mc::{substream, MonteCarloResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("eps_d + eps_p = {0} exceeds 1; the arrival branch has no weight left")]
    OverweightChannel(f64),
    #[error("qudit {0} is marked lost")]
    LostQudit(usize),
}

pub type NoiseResult<T> = Result<T, NoiseError>;

/// Physical parameters driving every noise channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Loss probability per photon per segment.
    pub p_l: f64,
    /// Depolarization probability (transmission and ancilla preparation).
    pub eps_d: f64,
    /// Extra dephasing probability in the matter-photon coupling.
    pub eps_p: f64,
    /// Failure probability of each two-qudit SUM gate.
    pub eps_g: f64,
    pub d: PrimeModulus,
}

impl ChannelParams {
    pub fn new(p_l: f64, eps_d: f64, eps_p: f64, eps_g: f64, d: PrimeModulus) -> NoiseResult<Self> {
        for p in [p_l, eps_d, eps_p, eps_g] {
            if !(0.0..=1.0).contains(&p) {
                return Err(NoiseError::BadProbability(p));
            }
        }
        if eps_d + eps_p > 1.0 {
            return Err(NoiseError::OverweightChannel(eps_d + eps_p));
        }
        Ok(ChannelParams {
            p_l,
            eps_d,
            eps_p,
            eps_g,
            d,
        })
    }

    /// Same error probability for every operation type.
    pub fn uniform(p_l: f64, eps: f64, d: PrimeModulus) -> NoiseResult<Self> {
        // eps_d + eps_p <= 1 requires eps <= 1/2 here.
        ChannelParams::new(p_l, eps, eps, eps, d)
    }
}

/// Per-qudit Weyl exponents `X^a Z^b` plus lost flags: the entire error state
/// of a block in the frame picture.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeylFrame {
    d: u64,
    x: Vec<u64>,
    z: Vec<u64>,
    lost: Vec<bool>,
}

impl WeylFrame {
    pub fn identity(d: PrimeModulus, n: usize) -> Self {
        WeylFrame {
            d: d.get(),
            x: vec![0; n],
            z: vec![0; n],
            lost: vec![false; n],
        }
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn x_exp(&self, qudit: usize) -> u64 {
        self.x[qudit]
    }

    pub fn z_exp(&self, qudit: usize) -> u64 {
        self.z[qudit]
    }

    pub fn is_lost(&self, qudit: usize) -> bool {
        self.lost[qudit]
    }

    pub fn mark_lost(&mut self, qudit: usize) {
        self.lost[qudit] = true;
    }

    /// Multiplies `X^a Z^b` onto the qudit's frame (exponents add mod `d`;
    /// the group phase is irrelevant for error bookkeeping).
    pub fn compose(&mut self, qudit: usize, x_exp: u64, z_exp: u64) {
        self.x[qudit] = (self.x[qudit] + x_exp) % self.d;
        self.z[qudit] = (self.z[qudit] + z_exp) % self.d;
    }

    pub fn set(&mut self, qudit: usize, x_exp: u64, z_exp: u64) {
        self.x[qudit] = x_exp % self.d;
        self.z[qudit] = z_exp % self.d;
    }

    pub fn is_identity(&self, qudit: usize) -> bool {
        self.x[qudit] == 0 && self.z[qudit] == 0
    }
}

/// Ideal SUM frame propagation with control `c` and target `t`:
/// `X_c -> X_c X_t` and `Z_t -> Z_c^{-1} Z_t`; the other two generators
/// commute through.
pub fn propagate_sum(frame: &mut WeylFrame, control: usize, target: usize) {
    let d = frame.d;
    let xc = frame.x[control];
    let zt = frame.z[target];
    frame.x[target] = (frame.x[target] + xc) % d;
    frame.z[control] = (frame.z[control] + d - zt) % d;
}

/// Fiber transmission channel: lose the photon with `p_l`; otherwise a
/// uniform Weyl error with `eps_d`, else a uniform Z power with `eps_p`,
/// else identity.
pub fn sample_transmission<R: Rng + ?Sized>(
    frame: &mut WeylFrame,
    qudit: usize,
    params: &ChannelParams,
    rng: &mut R,
) -> NoiseResult<()> {
    if frame.is_lost(qudit) {
        return Err(NoiseError::LostQudit(qudit));
    }
    let d = params.d.get();
    if rng.random::<f64>() < params.p_l {
        frame.mark_lost(qudit);
        return Ok(());
    }
    let branch: f64 = rng.random();
    if branch < params.eps_d {
        frame.compose(qudit, rng.random_range(0..d), rng.random_range(0..d));
    } else if branch < params.eps_d + params.eps_p {
        frame.compose(qudit, 0, rng.random_range(0..d));
    }
    Ok(())
}

/// Imperfect station SUM between the incoming qudit (control) and the
/// coupled ancilla qudit (target): ideal frame propagation, then with `eps_g`
/// the pair's frame is overwritten by a uniform two-qudit Weyl error.
pub fn sample_gate_error<R: Rng + ?Sized>(
    frame: &mut WeylFrame,
    control: usize,
    target: usize,
    params: &ChannelParams,
    rng: &mut R,
) -> NoiseResult<()> {
    for q in [control, target] {
        if frame.is_lost(q) {
            return Err(NoiseError::LostQudit(q));
        }
    }
    propagate_sum(frame, control, target);
    let d = params.d.get();
    if rng.random::<f64>() < params.eps_g {
        frame.set(control, rng.random_range(0..d), rng.random_range(0..d));
        frame.set(target, rng.random_range(0..d), rng.random_range(0..d));
    }
    Ok(())
}

/// Ancilla preparation depolarization: uniform Weyl error with `eps_d`.
pub fn sample_prep_error<R: Rng + ?Sized>(
    frame: &mut WeylFrame,
    qudit: usize,
    params: &ChannelParams,
    rng: &mut R,
) -> NoiseResult<()> {
    if frame.is_lost(qudit) {
        return Err(NoiseError::LostQudit(qudit));
    }
    let d = params.d.get();
    if rng.random::<f64>() < params.eps_d {
        frame.compose(qudit, rng.random_range(0..d), rng.random_range(0..d));
    }
    Ok(())
}

/// First-order probability that one physical qudit corrupts the logical X or
/// Z readout:
/// `eps_X = 3 eps_g (d^4 - d^3)/d^4 + 4 eps_d (d^2 - d)/d^2` and
/// `eps_Z = eps_X + eps_p (d - 1)/d`.
pub fn epsilon_xz(params: &ChannelParams) -> (f64, f64) {
    let d = params.d.get() as f64;
    let eps_x = 3.0 * params.eps_g * (d.powi(4) - d.powi(3)) / d.powi(4)
        + 4.0 * params.eps_d * (d.powi(2) - d) / d.powi(2);
    let eps_z = eps_x + params.eps_p * (d - 1.0) / d;
    (eps_x, eps_z)
}

/// Empirical per-hop decode statistics from the frame-level model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcorrectMc {
    pub p_fail: MonteCarloResult,
    pub p_correct_x: MonteCarloResult,
    pub p_correct_z: MonteCarloResult,
    pub p_incorrect_x: MonteCarloResult,
    pub p_incorrect_z: MonteCarloResult,
}

/// Monte Carlo of one teleportation-corrected hop: each carrier is lost with
/// `p_l`; each survivor corrupts the X (Z) readout independently with
/// `eps_X` (`eps_Z`); a readout decodes correctly when `n1 + 2 n2 <= k`.
/// Runs are embarrassingly parallel on counter-based substreams, so the
/// result depends only on `(seed, runs)`.
pub fn mc_validate_pcorrect(
    code: &QpycCode,
    params: &ChannelParams,
    runs: u64,
    seed: u64,
) -> PcorrectMc {
    let n = code.n();
    let k = code.k();
    let (eps_x, eps_z) = epsilon_xz(params);
    let p_l = params.p_l;

    let tally = (0..runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = substream(seed, run);
            let mut n1 = 0usize;
            let mut n2x = 0usize;
            let mut n2z = 0usize;
            for _ in 0..n {
                if rng.random::<f64>() < p_l {
                    n1 += 1;
                    continue;
                }
                if rng.random::<f64>() < eps_x {
                    n2x += 1;
                }
                if rng.random::<f64>() < eps_z {
                    n2z += 1;
                }
            }
            if n1 > k {
                return [1u64, 0, 0, 0, 0];
            }
            let radius = (k - n1) / 2;
            let cx = n2x <= radius;
            let cz = n2z <= radius;
            [
                0,
                cx as u64,
                cz as u64,
                (!cx) as u64,
                (!cz) as u64,
            ]
        })
        .reduce(
            || [0u64; 5],
            |mut acc, item| {
                for (a, b) in acc.iter_mut().zip(item) {
                    *a += b;
                }
                acc
            },
        );

    PcorrectMc {
        p_fail: MonteCarloResult::from_counts(tally[0], runs, seed),
        p_correct_x: MonteCarloResult::from_counts(tally[1], runs, seed),
        p_correct_z: MonteCarloResult::from_counts(tally[2], runs, seed),
        p_incorrect_x: MonteCarloResult::from_counts(tally[3], runs, seed),
        p_incorrect_z: MonteCarloResult::from_counts(tally[4], runs, seed),
    }
}
