//! The qudit register itself: amplitudes, gates, measurement, erasure.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{SimError, SimResult};
use crate::codes::{FourQubitCode, QpycCode};
use crate::field::PrimeModulus;

/// Hard ceiling on amplitude-vector length (`d^n`). Nine qutrits for the
/// three-block teleportation circuit of the `[[3,1,2]]_3` code fit with room
/// to spare; anything larger belongs in the frame-level Monte Carlo.
pub const DEFAULT_AMP_CAP: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

/// One projective measurement and its outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub qudit: usize,
    pub basis: Basis,
    pub outcome: u64,
}

/// Unitary operations on a register. `SUM` is the qudit CNOT
/// `|i>|j> -> |i>|i+j mod d>`; `Fourier` maps `|j> -> sum_k w^{jk} |k> / sqrt d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GateOp {
    PauliX { target: usize, power: u64 },
    PauliZ { target: usize, power: u64 },
    Fourier { target: usize },
    FourierInverse { target: usize },
    Sum { control: usize, target: usize },
    Cz { a: usize, b: usize },
    /// General control-diagonal two-qudit gate: multiplies the amplitude by
    /// `phases[control digit][target digit]`. Used for the atom-mediated
    /// photon gates where the phase schedule is not of CZ form.
    ControlledPhase {
        control: usize,
        target: usize,
        phases: Vec<Vec<Complex64>>,
    },
}

impl GateOp {
    fn targets(&self) -> Vec<usize> {
        match self {
            GateOp::PauliX { target, .. }
            | GateOp::PauliZ { target, .. }
            | GateOp::Fourier { target }
            | GateOp::FourierInverse { target } => vec![*target],
            GateOp::Sum { control, target } => vec![*control, *target],
            GateOp::Cz { a, b } => vec![*a, *b],
            GateOp::ControlledPhase {
                control, target, ..
            } => vec![*control, *target],
        }
    }
}

/// Dense state over `n` qudits of prime dimension `d`, with per-qudit
/// erasure flags.
#[derive(Debug, Clone)]
pub struct QuditState {
    d: PrimeModulus,
    n: usize,
    amps: Vec<Complex64>,
    erased: Vec<bool>,
}

impl QuditState {
    /// `|digits[0], digits[1], ...>`.
    pub fn computational(d: PrimeModulus, digits: &[u64]) -> SimResult<Self> {
        let mut state = QuditState::zeros(d, digits.len())?;
        let idx = digits
            .iter()
            .fold(0usize, |acc, &dig| acc * d.get() as usize + (dig % d.get()) as usize);
        state.amps[idx] = Complex64::new(1.0, 0.0);
        Ok(state)
    }

    /// State from a full amplitude vector (renormalized; must be nonzero).
    pub fn from_amplitudes(d: PrimeModulus, n: usize, amps: Vec<Complex64>) -> SimResult<Self> {
        let expected = checked_dim(d, n)?;
        if amps.len() != expected {
            return Err(SimError::BadAmplitudeCount {
                got: amps.len(),
                expected,
            });
        }
        let mut state = QuditState {
            d,
            n,
            amps,
            erased: vec![false; n],
        };
        state.renormalize()?;
        Ok(state)
    }

    fn zeros(d: PrimeModulus, n: usize) -> SimResult<Self> {
        let dim = checked_dim(d, n)?;
        Ok(QuditState {
            d,
            n,
            amps: vec![Complex64::new(0.0, 0.0); dim],
            erased: vec![false; n],
        })
    }

    /// Encodes `sum_s amps[s] |s>_L` into a polynomial-code block.
    pub fn encode_qpyc(code: &QpycCode, logical: &[Complex64]) -> SimResult<Self> {
        let d = code.modulus();
        if logical.len() != d.get() as usize {
            return Err(SimError::BadAmplitudeCount {
                got: logical.len(),
                expected: d.get() as usize,
            });
        }
        let mut state = QuditState::zeros(d, code.n())?;
        let term_amp = (d.get() as f64).powf(-(code.k() as f64) / 2.0);
        for s in d.elements() {
            let basis = code.logical_state(s);
            for term in basis.terms() {
                let idx = state.pack_digits(term);
                state.amps[idx] += logical[s.value() as usize] * term_amp;
            }
        }
        state.renormalize()?;
        Ok(state)
    }

    /// Encodes two logical qubits `sum_ab amps[2a+b] |ab>_L` into the
    /// `[[4,2,2]]` code.
    pub fn encode_four_qubit(logical: &[Complex64]) -> SimResult<Self> {
        if logical.len() != 4 {
            return Err(SimError::BadAmplitudeCount {
                got: logical.len(),
                expected: 4,
            });
        }
        let d = PrimeModulus::new(2).expect("2 is prime");
        let mut state = QuditState::zeros(d, 4)?;
        let code = FourQubitCode;
        for a in 0..2u8 {
            for b in 0..2u8 {
                for (idx, amp) in code.logical_basis_terms(a, b) {
                    state.amps[idx] += logical[(2 * a + b) as usize] * amp;
                }
            }
        }
        state.renormalize()?;
        Ok(state)
    }

    /// Tensor product `self (x) other` (qudits of `other` appended).
    pub fn tensor(&self, other: &QuditState) -> SimResult<Self> {
        assert_eq!(self.d, other.d, "tensor factors share one dimension");
        let n = self.n + other.n;
        checked_dim(self.d, n)?;
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for &a in &self.amps {
            for &b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(QuditState {
            d: self.d,
            n,
            amps,
            erased: self
                .erased
                .iter()
                .chain(other.erased.iter())
                .copied()
                .collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> u64 {
        self.d.get()
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.d
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn is_erased(&self, qudit: usize) -> bool {
        self.erased[qudit]
    }

    pub fn erased_indices(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| self.erased[q]).collect()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn renormalize(&mut self) -> SimResult<()> {
        let norm = self.norm();
        if norm < 1e-12 {
            return Err(SimError::ZeroNorm);
        }
        if (norm - 1.0).abs() > f64::EPSILON {
            let inv = norm.recip();
            self.amps.iter_mut().for_each(|a| *a *= inv);
        }
        Ok(())
    }

    #[inline]
    fn stride(&self, qudit: usize) -> usize {
        (self.d.get() as usize).pow((self.n - 1 - qudit) as u32)
    }

    #[inline]
    fn digit(&self, index: usize, qudit: usize) -> u64 {
        (index / self.stride(qudit)) as u64 % self.d.get()
    }

    fn pack_digits(&self, digits: &[u64]) -> usize {
        digits
            .iter()
            .fold(0usize, |acc, &dig| acc * self.d.get() as usize + (dig % self.d.get()) as usize)
    }

    fn check_qudit(&self, qudit: usize) -> SimResult<()> {
        if qudit >= self.n {
            return Err(SimError::BadQudit {
                index: qudit,
                n: self.n,
            });
        }
        Ok(())
    }

    fn check_live(&self, qudit: usize) -> SimResult<()> {
        self.check_qudit(qudit)?;
        if self.erased[qudit] {
            return Err(SimError::ErasedTarget(qudit));
        }
        Ok(())
    }

    fn omega(&self, exponent: u64) -> Complex64 {
        let d = self.d.get();
        Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (exponent % d) as f64 / d as f64)
    }

    /// Applies a gate; all targets must be live (not erased).
    pub fn apply_gate(&mut self, gate: &GateOp) -> SimResult<()> {
        let targets = gate.targets();
        for &t in &targets {
            self.check_live(t)?;
        }
        if targets.len() == 2 && targets[0] == targets[1] {
            return Err(SimError::RepeatedTarget);
        }
        let d = self.d.get();
        match gate {
            GateOp::PauliX { target, power } => {
                let mut next = vec![Complex64::new(0.0, 0.0); self.amps.len()];
                let stride = self.stride(*target);
                for (i, &amp) in self.amps.iter().enumerate() {
                    let dig = self.digit(i, *target);
                    let shifted = (dig + power) % d;
                    let j = i + (shifted as usize) * stride - (dig as usize) * stride;
                    next[j] = amp;
                }
                self.amps = next;
            }
            GateOp::PauliZ { target, power } => {
                for i in 0..self.amps.len() {
                    let phase = self.omega((power % d) * self.digit(i, *target));
                    self.amps[i] *= phase;
                }
            }
            GateOp::Fourier { target } => self.fourier(*target, false),
            GateOp::FourierInverse { target } => self.fourier(*target, true),
            GateOp::Sum { control, target } => {
                let mut next = vec![Complex64::new(0.0, 0.0); self.amps.len()];
                let stride = self.stride(*target);
                for (i, &amp) in self.amps.iter().enumerate() {
                    let c = self.digit(i, *control);
                    let t = self.digit(i, *target);
                    let shifted = (t + c) % d;
                    let j = i + (shifted as usize) * stride - (t as usize) * stride;
                    next[j] = amp;
                }
                self.amps = next;
            }
            GateOp::Cz { a, b } => {
                for i in 0..self.amps.len() {
                    let phase = self.omega(self.digit(i, *a) * self.digit(i, *b));
                    self.amps[i] *= phase;
                }
            }
            GateOp::ControlledPhase {
                control,
                target,
                phases,
            } => {
                assert_eq!(phases.len(), d as usize, "one row per control digit");
                for i in 0..self.amps.len() {
                    let c = self.digit(i, *control) as usize;
                    let t = self.digit(i, *target) as usize;
                    self.amps[i] *= phases[c][t];
                }
            }
        }
        Ok(())
    }

    fn fourier(&mut self, target: usize, inverse: bool) {
        let d = self.d.get() as usize;
        let stride = self.stride(target);
        let scale = (d as f64).sqrt().recip();
        let sign = if inverse { -1.0 } else { 1.0 };
        let table: Vec<Complex64> = (0..d * d)
            .map(|e| {
                Complex64::from_polar(
                    1.0,
                    sign * 2.0 * std::f64::consts::PI * ((e % (d * d)) as f64) / d as f64,
                )
            })
            .collect();
        let mut line = vec![Complex64::new(0.0, 0.0); d];
        let block = stride * d;
        for base in (0..self.amps.len()).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = self.amps[start + j * stride];
                }
                for a in 0..d {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (j, &v) in line.iter().enumerate() {
                        acc += table[(a * j) % (d * d)] * v;
                    }
                    self.amps[start + a * stride] = acc * scale;
                }
            }
        }
    }

    /// `X^a Z^b` on one qudit: `|j> -> w^{b j} |j + a>`.
    pub fn apply_weyl(&mut self, qudit: usize, x_exp: u64, z_exp: u64) -> SimResult<()> {
        self.apply_gate(&GateOp::PauliZ {
            target: qudit,
            power: z_exp,
        })?;
        self.apply_gate(&GateOp::PauliX {
            target: qudit,
            power: x_exp,
        })
    }

    /// Born-rule measurement. The post-measurement state is the eigenstate of
    /// the measured basis (for `X`, the Fourier vector of the outcome).
    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        qudit: usize,
        basis: Basis,
        rng: &mut R,
    ) -> SimResult<MeasurementRecord> {
        self.check_live(qudit)?;
        if basis == Basis::X {
            self.fourier(qudit, true);
        }
        let outcome = self.sample_and_project(qudit, rng)?;
        if basis == Basis::X {
            self.fourier(qudit, false);
        }
        Ok(MeasurementRecord {
            qudit,
            basis,
            outcome,
        })
    }

    fn digit_probabilities(&self, qudit: usize) -> Vec<f64> {
        let mut probs = vec![0.0; self.d.get() as usize];
        for (i, amp) in self.amps.iter().enumerate() {
            probs[self.digit(i, qudit) as usize] += amp.norm_sqr();
        }
        probs
    }

    fn sample_and_project<R: Rng + ?Sized>(
        &mut self,
        qudit: usize,
        rng: &mut R,
    ) -> SimResult<u64> {
        let probs = self.digit_probabilities(qudit);
        let draw: f64 = rng.random();
        let mut acc = 0.0;
        let mut outcome = self.d.get() - 1;
        for (j, &p) in probs.iter().enumerate() {
            acc += p;
            if draw < acc {
                outcome = j as u64;
                break;
            }
        }
        self.project(qudit, outcome)?;
        Ok(outcome)
    }

    fn project(&mut self, qudit: usize, value: u64) -> SimResult<()> {
        for i in 0..self.amps.len() {
            if self.digit(i, qudit) != value {
                self.amps[i] = Complex64::new(0.0, 0.0);
            }
        }
        self.renormalize()
    }

    /// Heralded loss: secretly measures the qudit in the computational basis,
    /// discards the outcome, and flags the coordinate. Recovery circuits must
    /// then succeed on whichever branch was realized.
    pub fn erase<R: Rng + ?Sized>(&mut self, qudit: usize, rng: &mut R) -> SimResult<()> {
        self.check_qudit(qudit)?;
        if self.erased[qudit] {
            return Err(SimError::DoubleErasure(qudit));
        }
        self.sample_and_project(qudit, rng)?;
        self.erased[qudit] = true;
        Ok(())
    }

    /// All stochastic branches of [`QuditState::erase`] with their
    /// probabilities, for exhaustive recovery tests.
    pub fn erase_branches(&self, qudit: usize) -> SimResult<Vec<(f64, QuditState)>> {
        self.check_qudit(qudit)?;
        if self.erased[qudit] {
            return Err(SimError::DoubleErasure(qudit));
        }
        let probs = self.digit_probabilities(qudit);
        let mut branches = Vec::new();
        for (value, &p) in probs.iter().enumerate() {
            if p < 1e-14 {
                continue;
            }
            let mut branch = self.clone();
            branch.project(qudit, value as u64)?;
            branch.erased[qudit] = true;
            branches.push((p, branch));
        }
        Ok(branches)
    }

    /// Overlap fidelity `|<other|self>|^2` (global-phase-insensitive).
    pub fn fidelity_with(&self, other: &QuditState) -> f64 {
        assert_eq!(self.amps.len(), other.amps.len());
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| b.conj() * a)
            .sum::<Complex64>()
            .norm_sqr()
    }

    /// Fidelity `<target| rho_A |target>` of the reduced state on the listed
    /// qudits against a pure target with the given amplitudes (most
    /// significant digit first). Insensitive to anything on the complement.
    pub fn fidelity_on(&self, qudits: &[usize], target: &[Complex64]) -> SimResult<f64> {
        let d = self.d.get() as usize;
        let dim_a: usize = d.pow(qudits.len() as u32);
        if target.len() != dim_a {
            return Err(SimError::BadAmplitudeCount {
                got: target.len(),
                expected: dim_a,
            });
        }
        for &q in qudits {
            self.check_qudit(q)?;
        }
        let complement: Vec<usize> = (0..self.n).filter(|q| !qudits.contains(q)).collect();
        let dim_rest: usize = d.pow(complement.len() as u32);
        let mut overlap = vec![Complex64::new(0.0, 0.0); dim_rest];
        for (i, &amp) in self.amps.iter().enumerate() {
            let a_idx = qudits
                .iter()
                .fold(0usize, |acc, &q| acc * d + self.digit(i, q) as usize);
            let r_idx = complement
                .iter()
                .fold(0usize, |acc, &q| acc * d + self.digit(i, q) as usize);
            overlap[r_idx] += target[a_idx].conj() * amp;
        }
        Ok(overlap.iter().map(|v| v.norm_sqr()).sum())
    }

    /// Purity `Tr(rho_A^2)` of the reduced state on the listed qudits.
    pub fn purity_on(&self, qudits: &[usize]) -> SimResult<f64> {
        let d = self.d.get() as usize;
        for &q in qudits {
            self.check_qudit(q)?;
        }
        let dim_a: usize = d.pow(qudits.len() as u32);
        let complement: Vec<usize> = (0..self.n).filter(|q| !qudits.contains(q)).collect();
        let dim_rest: usize = d.pow(complement.len() as u32);
        // rho_A[a][a'] = sum_rest psi[a,rest] conj(psi[a',rest])
        let mut matrix = vec![Complex64::new(0.0, 0.0); dim_a * dim_a];
        let mut columns = vec![vec![Complex64::new(0.0, 0.0); dim_a]; dim_rest];
        for (i, &amp) in self.amps.iter().enumerate() {
            let a_idx = qudits
                .iter()
                .fold(0usize, |acc, &q| acc * d + self.digit(i, q) as usize);
            let r_idx = complement
                .iter()
                .fold(0usize, |acc, &q| acc * d + self.digit(i, q) as usize);
            columns[r_idx][a_idx] = amp;
        }
        for col in &columns {
            for a in 0..dim_a {
                for b in 0..dim_a {
                    matrix[a * dim_a + b] += col[a] * col[b].conj();
                }
            }
        }
        let mut purity = 0.0;
        for a in 0..dim_a {
            for b in 0..dim_a {
                purity += (matrix[a * dim_a + b] * matrix[b * dim_a + a]).re;
            }
        }
        Ok(purity)
    }

    /// Collapsed digit of a qudit whose state is a computational basis state
    /// (after a Z measurement or projection); `None` if still in
    /// superposition.
    pub fn definite_digit(&self, qudit: usize) -> Option<u64> {
        let probs = self.digit_probabilities(qudit);
        let mut found = None;
        for (j, &p) in probs.iter().enumerate() {
            if p > 1e-9 {
                if found.is_some() {
                    return None;
                }
                found = Some(j as u64);
            }
        }
        found
    }
}

fn checked_dim(d: PrimeModulus, n: usize) -> SimResult<usize> {
    let mut dim: usize = 1;
    for _ in 0..n {
        dim = dim
            .checked_mul(d.get() as usize)
            .filter(|&v| v <= DEFAULT_AMP_CAP)
            .ok_or(SimError::DimensionCap {
                n,
                d: d.get(),
                cap: DEFAULT_AMP_CAP,
            })?;
    }
    Ok(dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::three_qutrit_code;
    use crate::mc::substream;
    use crate::simulator::test_util::random_logical;

    const NORM_TOL: f64 = 1e-10;

    fn d(v: u64) -> PrimeModulus {
        PrimeModulus::new(v).unwrap()
    }

    fn basis(dim: u64, digits: &[u64]) -> QuditState {
        QuditState::computational(d(dim), digits).unwrap()
    }

    #[test]
    fn sum_gate_example() {
        let mut s = basis(3, &[1, 1]);
        s.apply_gate(&GateOp::Sum {
            control: 0,
            target: 1,
        })
        .unwrap();
        assert!((s.fidelity_with(&basis(3, &[1, 2])) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weyl_operators_have_order_d() {
        for dim in [2u64, 3, 5] {
            let mut s = basis(dim, &[1]);
            let original = s.clone();
            for _ in 0..dim {
                s.apply_gate(&GateOp::PauliX {
                    target: 0,
                    power: 1,
                })
                .unwrap();
            }
            assert!((s.fidelity_with(&original) - 1.0).abs() < 1e-12);
            let mut plus = basis(dim, &[0]);
            plus.apply_gate(&GateOp::Fourier { target: 0 }).unwrap();
            let reference = plus.clone();
            for _ in 0..dim {
                plus.apply_gate(&GateOp::PauliZ {
                    target: 0,
                    power: 1,
                })
                .unwrap();
            }
            assert!((plus.fidelity_with(&reference) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn weyl_commutation_as_matrices() {
        // ZX = w XZ, checked entrywise on all basis vectors.
        for dim in [2u64, 3, 5, 7] {
            for j in 0..dim {
                let mut zx = basis(dim, &[j]);
                zx.apply_weyl(0, 1, 0).unwrap();
                zx.apply_weyl(0, 0, 1).unwrap();
                let mut xz = basis(dim, &[j]);
                xz.apply_weyl(0, 0, 1).unwrap();
                xz.apply_weyl(0, 1, 0).unwrap();
                let omega = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / dim as f64);
                for (a, b) in zx.amplitudes().iter().zip(xz.amplitudes()) {
                    assert!((a - omega * b).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn double_fourier_negates() {
        for dim in [2u64, 3, 5] {
            for j in 0..dim {
                let mut s = basis(dim, &[j]);
                s.apply_gate(&GateOp::Fourier { target: 0 }).unwrap();
                s.apply_gate(&GateOp::Fourier { target: 0 }).unwrap();
                let expect = basis(dim, &[(dim - j) % dim]);
                assert!((s.fidelity_with(&expect) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn norm_preserved_by_gates() {
        let mut rng = substream(11, 0);
        let code = three_qutrit_code();
        let amps = random_logical(3, &mut rng);
        let mut s = QuditState::encode_qpyc(&code, &amps).unwrap();
        for gate in [
            GateOp::Fourier { target: 1 },
            GateOp::Sum {
                control: 0,
                target: 2,
            },
            GateOp::Cz { a: 1, b: 2 },
            GateOp::PauliX {
                target: 0,
                power: 2,
            },
        ] {
            s.apply_gate(&gate).unwrap();
            assert!((s.norm() - 1.0).abs() < NORM_TOL);
        }
    }

    #[test]
    fn z_measurement_is_deterministic_on_basis_states() {
        let mut rng = substream(1, 0);
        let mut s = basis(3, &[2]);
        let rec = s.measure(0, Basis::Z, &mut rng).unwrap();
        assert_eq!(rec.outcome, 2);
        assert!((s.fidelity_with(&basis(3, &[2])) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn x_measurement_diagonalizes_plus() {
        let mut rng = substream(2, 0);
        let mut s = basis(3, &[0]);
        s.apply_gate(&GateOp::Fourier { target: 0 }).unwrap();
        let rec = s.measure(0, Basis::X, &mut rng).unwrap();
        assert_eq!(rec.outcome, 0);
    }

    #[test]
    fn born_rule_frequencies() {
        // (|0> + |1>)/sqrt2 of a qutrit: outcomes 0 and 1 each ~1/2.
        let amps = vec![
            Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            Complex64::new(0.0, 0.0),
        ];
        let reference = QuditState::from_amplitudes(d(3), 1, amps).unwrap();
        let trials = 10_000;
        let mut ones = 0;
        for t in 0..trials {
            let mut rng = substream(3, t);
            let mut s = reference.clone();
            let rec = s.measure(0, Basis::Z, &mut rng).unwrap();
            assert!(rec.outcome < 2);
            ones += rec.outcome;
        }
        let freq = ones as f64 / trials as f64;
        let sigma = 0.5 / (trials as f64).sqrt();
        assert!((freq - 0.5).abs() < 3.0 * sigma, "{freq}");
    }

    #[test]
    fn erasure_flags_and_guards() {
        let code = three_qutrit_code();
        let mut rng = substream(4, 0);
        let amps = random_logical(3, &mut rng);
        let mut s = QuditState::encode_qpyc(&code, &amps).unwrap();
        s.erase(1, &mut rng).unwrap();
        assert!(s.is_erased(1));
        assert_eq!(s.erase(1, &mut rng), Err(SimError::DoubleErasure(1)));
        assert_eq!(
            s.apply_gate(&GateOp::Fourier { target: 1 }),
            Err(SimError::ErasedTarget(1))
        );
        assert_eq!(s.measure(1, Basis::Z, &mut rng).err(), Some(SimError::ErasedTarget(1)));
        // Erasing everything leaves a flagged product state; nothing to recover.
        s.erase(0, &mut rng).unwrap();
        s.erase(2, &mut rng).unwrap();
        assert_eq!(s.erased_indices(), vec![0, 1, 2]);
        assert!((s.norm() - 1.0).abs() < NORM_TOL);
    }

    #[test]
    fn erase_branches_of_logical_qutrit_match_known_mixture() {
        // Erasing the first qutrit of a |s>-weighted logical state leaves the
        // three two-qutrit branches with the cyclic digit structure.
        let code = three_qutrit_code();
        let mut rng = substream(5, 0);
        let amps = random_logical(3, &mut rng);
        let s = QuditState::encode_qpyc(&code, &amps).unwrap();
        let branches = s.erase_branches(0).unwrap();
        assert_eq!(branches.len(), 3);
        for (p, branch) in &branches {
            assert!((p - 1.0 / 3.0).abs() < 1e-9);
            let hidden = branch.definite_digit(0).unwrap();
            // Branch i: alpha|i,i> + beta|i+1,i+2> + gamma|i+2,i+1> on (1,2).
            let mut expect = vec![Complex64::new(0.0, 0.0); 9];
            for s_val in 0..3u64 {
                let digit1 = (hidden + s_val) % 3;
                let digit2 = (hidden + 2 * s_val) % 3;
                expect[(digit1 * 3 + digit2) as usize] = amps[s_val as usize];
            }
            let fid = branch.fidelity_on(&[1, 2], &expect).unwrap();
            assert!((fid - 1.0).abs() < 1e-9, "branch {hidden}: fidelity {fid}");
        }
    }

    #[test]
    fn circuits_and_records_round_trip_json() {
        let circuit = vec![
            GateOp::Fourier { target: 0 },
            GateOp::Sum {
                control: 0,
                target: 1,
            },
            GateOp::PauliX {
                target: 2,
                power: 2,
            },
        ];
        let json = serde_json::to_string(&circuit).unwrap();
        let back: Vec<GateOp> = serde_json::from_str(&json).unwrap();
        assert_eq!(circuit, back);
        let rec = MeasurementRecord {
            qudit: 1,
            basis: Basis::X,
            outcome: 2,
        };
        let back: MeasurementRecord =
            serde_json::from_str(&serde_json::to_string(&rec).unwrap()).unwrap();
        assert_eq!(rec, back);
    }

    #[test]
    fn dimension_cap_enforced() {
        assert!(matches!(
            QuditState::computational(d(5), &[0; 10]),
            Err(SimError::DimensionCap { .. })
        ));
    }
}
