//! Code construction and analytic erasure-success probabilities.
//!
//! Three code families are covered:
//!
//! - `[[2k+1, 1, k+1]]_d` quantum polynomial codes (QPyC): one logical qudit
//!   spread over the evaluations of degree-`<=k` polynomials at `2k+1`
//!   distinct points of `Z_d`, correcting any `k` erasures. The `[[3,1,2]]_3`
//!   three-qutrit code is the `k = 1` instance.
//! - the fixed `[[4,2,2]]` four-qubit code (two logical qubits, one erasure).
//! - quantum parity codes QPC(n, m) of `n` blocks with `m` qubits each, used
//!   as the qubit baseline.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::field::{
    first_prime_geq, top_coefficient_weights, FieldElement, FieldError, PrimeModulus,
};
use crate::mc::KahanSum;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodeError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("QPyC needs k >= 1, got {0}")]
    KTooSmall(usize),
    #[error("need {needed} distinct evaluation points, got {got}")]
    BadEvalPoints { needed: usize, got: usize },
    #[error("QPC dimensions must be positive")]
    EmptyQpc,
    #[error("qudit index {index} outside code of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("target not reachable: requires p_l < 1/2 and target > 1/2")]
    Infeasible,
    #[error("erasure pattern is not correctable; no surviving representative")]
    NoRepresentative,
}

pub type CodeResult<T> = Result<T, CodeError>;

// ---------------------------------------------------------------------------
// Code descriptions
// ---------------------------------------------------------------------------

/// A `[[2k+1, 1, k+1]]_d` quantum polynomial code instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QpycCode {
    k: usize,
    modulus: PrimeModulus,
    eval_points: Vec<FieldElement>,
}

impl QpycCode {
    /// Default construction: `d` is the first prime `>= 2k+1` and the
    /// evaluation points are `0, 1, ..., 2k`.
    pub fn new(k: usize) -> CodeResult<Self> {
        if k < 1 {
            return Err(CodeError::KTooSmall(k));
        }
        let n = 2 * k + 1;
        let modulus = first_prime_geq(n as u64)?;
        let eval_points = (0..n as u64).map(|x| modulus.element(x)).collect();
        Ok(QpycCode {
            k,
            modulus,
            eval_points,
        })
    }

    /// Construction with an explicit point set (must be `2k+1` pairwise
    /// distinct elements of `Z_d` with `d >= 2k+1`).
    pub fn with_eval_points(
        k: usize,
        modulus: PrimeModulus,
        eval_points: Vec<FieldElement>,
    ) -> CodeResult<Self> {
        if k < 1 {
            return Err(CodeError::KTooSmall(k));
        }
        let n = 2 * k + 1;
        let distinct: BTreeSet<u64> = eval_points.iter().map(|x| x.value()).collect();
        if eval_points.len() != n || distinct.len() != n || (modulus.get() as usize) < n {
            return Err(CodeError::BadEvalPoints {
                needed: n,
                got: distinct.len(),
            });
        }
        for x in &eval_points {
            if x.modulus() != modulus {
                return Err(FieldError::ModulusMismatch(modulus.get(), x.modulus().get()).into());
            }
        }
        Ok(QpycCode {
            k,
            modulus,
            eval_points,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of physical qudits, `2k + 1`.
    pub fn n(&self) -> usize {
        2 * self.k + 1
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.modulus
    }

    pub fn d(&self) -> u64 {
        self.modulus.get()
    }

    pub fn eval_points(&self) -> &[FieldElement] {
        &self.eval_points
    }

    /// All codeword digit strings of the logical basis state `|s>_L`: the
    /// evaluation vectors of every polynomial with top coefficient `c_k = s`.
    pub fn logical_state(&self, s: FieldElement) -> LogicalBasisState {
        let d = self.d();
        let k = self.k;
        let count = d.pow(k as u32);
        let mut terms = Vec::with_capacity(count as usize);
        // Enumerate c = (c_0, ..., c_{k-1}, s) by counting in base d.
        for idx in 0..count {
            let mut c: Vec<FieldElement> = Vec::with_capacity(k + 1);
            let mut rest = idx;
            for _ in 0..k {
                c.push(self.modulus.element(rest % d));
                rest /= d;
            }
            c.push(s);
            let term = self
                .eval_points
                .iter()
                .map(|&x| {
                    let mut acc = self.modulus.zero();
                    for &cj in c.iter().rev() {
                        acc = acc.mul(x).and_then(|v| v.add(cj)).expect("same modulus");
                    }
                    acc.value()
                })
                .collect();
            terms.push(term);
        }
        LogicalBasisState { label: s, terms }
    }

    /// Digit-shift exponents of a transversal logical `X^c` representative:
    /// adding the evaluations of the monic polynomial `c t^k` raises the top
    /// coefficient by `c`.
    pub fn logical_x_exponents(&self, c: FieldElement) -> Vec<u64> {
        self.eval_points
            .iter()
            .map(|&x| x.pow(self.k as u64).mul(c).expect("same modulus").value())
            .collect()
    }

    /// Phase exponents of a transversal logical `Z^c` representative:
    /// weights over the first `k+1` points that read the degree-`k`
    /// coefficient out of the digit values (zero on the remaining points).
    pub fn logical_z_exponents(&self, c: FieldElement) -> Vec<u64> {
        let weights = top_coefficient_weights(&self.eval_points[..self.k + 1])
            .expect("distinct points");
        let mut exps: Vec<u64> = weights
            .iter()
            .map(|&w| w.mul(c).expect("same modulus").value())
            .collect();
        exps.resize(self.n(), 0);
        exps
    }
}

/// One logical basis state as its set of equal-amplitude codeword terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicalBasisState {
    label: FieldElement,
    terms: Vec<Vec<u64>>,
}

impl LogicalBasisState {
    pub fn label(&self) -> FieldElement {
        self.label
    }

    /// `d^k` distinct digit strings, each carrying amplitude `1/sqrt(d^k)`.
    pub fn terms(&self) -> &[Vec<u64>] {
        &self.terms
    }
}

/// The `[[3,1,2]]_3` code as a QPyC instance (`k = 1`, `d = 3`, points 0,1,2).
pub fn three_qutrit_code() -> QpycCode {
    QpycCode::new(1).expect("k = 1 is valid")
}

/// Quantum parity code of `n_blocks` blocks, `m_per_block` qubits each.
/// Qubit `i` belongs to block `i / m_per_block` (block-major order).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QpcCode {
    n_blocks: usize,
    m_per_block: usize,
}

impl QpcCode {
    pub fn new(n_blocks: usize, m_per_block: usize) -> CodeResult<Self> {
        if n_blocks == 0 || m_per_block == 0 {
            return Err(CodeError::EmptyQpc);
        }
        Ok(QpcCode {
            n_blocks,
            m_per_block,
        })
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn m_per_block(&self) -> usize {
        self.m_per_block
    }

    pub fn qubits(&self) -> usize {
        self.n_blocks * self.m_per_block
    }
}

/// The fixed `[[4,2,2]]` code with the pair structure (qubits 0,1)(2,3).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FourQubitCode;

pub fn four_qubit_code() -> FourQubitCode {
    FourQubitCode
}

impl FourQubitCode {
    /// Computational-basis expansion of `|ab>_L` as (index, amplitude) pairs,
    /// qubit 0 the most significant bit.
    pub fn logical_basis_terms(&self, a: u8, b: u8) -> Vec<(usize, f64)> {
        assert!(a <= 1 && b <= 1, "logical labels are bits");
        // Both pairs carry the same parity sector: |00>+|11> for a=0,
        // |01>+|10> for a=1; b=1 flips the relative sign inside each pair.
        let basis: [usize; 2] = if a == 0 { [0b00, 0b11] } else { [0b01, 0b10] };
        let minus = b == 1;
        let mut out = Vec::with_capacity(4);
        for (i, &first) in basis.iter().enumerate() {
            for (j, &second) in basis.iter().enumerate() {
                let amp = if minus && (i + j) % 2 == 1 { -0.5 } else { 0.5 };
                out.push(((first << 2) | second, amp));
            }
        }
        out
    }

    /// The two stabilizer generators `XXXX` and `ZZZZ`.
    pub fn stabilizers(&self) -> [WeylString; 2] {
        [
            WeylString::from_exponents(vec![1, 1, 1, 1], vec![0, 0, 0, 0], 2),
            WeylString::from_exponents(vec![0, 0, 0, 0], vec![1, 1, 1, 1], 2),
        ]
    }

    /// Both representatives of each logical operator, indexed by
    /// `(basis, logical qubit)`.
    pub fn logical_representatives(&self, basis: LogicalBasis, which: usize) -> [WeylString; 2] {
        let s = |x: [u64; 4], z: [u64; 4]| WeylString::from_exponents(x.to_vec(), z.to_vec(), 2);
        match (basis, which) {
            (LogicalBasis::X, 0) => [s([0, 1, 0, 1], [0; 4]), s([1, 0, 1, 0], [0; 4])],
            (LogicalBasis::X, 1) => [s([0; 4], [0, 1, 0, 1]), s([0; 4], [1, 0, 1, 0])],
            (LogicalBasis::Z, 0) => [s([0; 4], [0, 0, 1, 1]), s([0; 4], [1, 1, 0, 0])],
            (LogicalBasis::Z, 1) => [s([0, 0, 1, 1], [0; 4]), s([1, 1, 0, 0], [0; 4])],
            _ => panic!("logical qubit index is 0 or 1"),
        }
    }
}

/// Which logical observable a representative is requested for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogicalBasis {
    X,
    Z,
}

/// A product of single-qudit Weyl operators `X^a Z^b`, one factor per site.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeylString {
    pub x_exp: Vec<u64>,
    pub z_exp: Vec<u64>,
    pub d: u64,
}

impl WeylString {
    pub fn from_exponents(x_exp: Vec<u64>, z_exp: Vec<u64>, d: u64) -> Self {
        assert_eq!(x_exp.len(), z_exp.len());
        WeylString { x_exp, z_exp, d }
    }

    pub fn len(&self) -> usize {
        self.x_exp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_exp.is_empty()
    }

    /// Sites where the factor is not the identity.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| {
                !self.x_exp[i].is_multiple_of(self.d) || !self.z_exp[i].is_multiple_of(self.d)
            })
            .collect()
    }
}

impl fmt::Display for WeylString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            if i > 0 {
                write!(f, " ")?;
            }
            let (x, z) = (self.x_exp[i] % self.d, self.z_exp[i] % self.d);
            match (x, z) {
                (0, 0) => write!(f, "I")?,
                (1, 0) => write!(f, "X")?,
                (x, 0) => write!(f, "X^{x}")?,
                (0, 1) => write!(f, "Z")?,
                (0, z) => write!(f, "Z^{z}")?,
                (x, z) => {
                    if x == 1 {
                        write!(f, "X")?;
                    } else {
                        write!(f, "X^{x}")?;
                    }
                    if z == 1 {
                        write!(f, "Z")?;
                    } else {
                        write!(f, "Z^{z}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Any code instance the toolkit can reason about.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CodeSpecRepr", into = "CodeSpecRepr")]
pub enum CodeSpec {
    Qpyc(QpycCode),
    Qpc(QpcCode),
    FourQubit,
}

impl CodeSpec {
    /// Physical carriers (photons) per code block.
    pub fn photons(&self) -> usize {
        match self {
            CodeSpec::Qpyc(c) => c.n(),
            CodeSpec::Qpc(c) => c.qubits(),
            CodeSpec::FourQubit => 4,
        }
    }

    /// Temporal/spatial modes per code block: `d` per qudit, 2 per qubit.
    pub fn modes(&self) -> usize {
        match self {
            CodeSpec::Qpyc(c) => c.n() * c.d() as usize,
            CodeSpec::Qpc(c) => 2 * c.qubits(),
            CodeSpec::FourQubit => 8,
        }
    }

    /// Logical information content in qubits.
    pub fn logical_bits(&self) -> f64 {
        match self {
            CodeSpec::Qpyc(c) => (c.d() as f64).log2(),
            CodeSpec::Qpc(_) => 1.0,
            CodeSpec::FourQubit => 2.0,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
enum CodeSpecRepr {
    Qpyc {
        k: usize,
        d: u64,
        eval_points: Vec<u64>,
    },
    Qpc {
        n: usize,
        m: usize,
    },
    FourQubit,
}

impl From<CodeSpec> for CodeSpecRepr {
    fn from(spec: CodeSpec) -> Self {
        match spec {
            CodeSpec::Qpyc(c) => CodeSpecRepr::Qpyc {
                k: c.k(),
                d: c.d(),
                eval_points: c.eval_points().iter().map(|x| x.value()).collect(),
            },
            CodeSpec::Qpc(c) => CodeSpecRepr::Qpc {
                n: c.n_blocks(),
                m: c.m_per_block(),
            },
            CodeSpec::FourQubit => CodeSpecRepr::FourQubit,
        }
    }
}

impl TryFrom<CodeSpecRepr> for CodeSpec {
    type Error = CodeError;
    fn try_from(repr: CodeSpecRepr) -> CodeResult<Self> {
        Ok(match repr {
            CodeSpecRepr::Qpyc { k, d, eval_points } => {
                let modulus = PrimeModulus::new(d)?;
                let points = eval_points.into_iter().map(|x| modulus.element(x)).collect();
                CodeSpec::Qpyc(QpycCode::with_eval_points(k, modulus, points)?)
            }
            CodeSpecRepr::Qpc { n, m } => CodeSpec::Qpc(QpcCode::new(n, m)?),
            CodeSpecRepr::FourQubit => CodeSpec::FourQubit,
        })
    }
}

/// A set of erased (heralded lost) coordinate indices.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ErasurePattern {
    erased: BTreeSet<usize>,
}

impl ErasurePattern {
    pub fn new<I: IntoIterator<Item = usize>>(erased: I) -> Self {
        ErasurePattern {
            erased: erased.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.erased.len()
    }

    pub fn is_empty(&self) -> bool {
        self.erased.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.erased.contains(&index)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.erased.iter().copied()
    }
}

/// Whether the encoded information survives the given erasure pattern.
///
/// QPyC tolerates up to `k` erasures. QPC needs an intact block for the
/// logical X readout and one survivor in every block for the logical Z
/// readout. The `[[4,2,2]]` code tolerates one erasure.
pub fn erasure_correctable(code: &CodeSpec, pattern: &ErasurePattern) -> CodeResult<bool> {
    let len = code.photons();
    if let Some(bad) = pattern.indices().find(|&i| i >= len) {
        return Err(CodeError::IndexOutOfRange { index: bad, len });
    }
    Ok(match code {
        CodeSpec::Qpyc(c) => pattern.len() <= c.k(),
        CodeSpec::FourQubit => pattern.len() <= 1,
        CodeSpec::Qpc(c) => {
            let m = c.m_per_block();
            let mut erased_per_block = vec![0usize; c.n_blocks()];
            for i in pattern.indices() {
                erased_per_block[i / m] += 1;
            }
            let one_intact = erased_per_block.contains(&0);
            let all_alive = erased_per_block.iter().all(|&e| e < m);
            one_intact && all_alive
        }
    })
}

/// A representative of the requested logical operator supported entirely on
/// the surviving coordinates (one entry per logical qudit the code carries).
pub fn logical_measurement_under_erasure(
    code: &CodeSpec,
    pattern: &ErasurePattern,
    basis: LogicalBasis,
) -> CodeResult<Vec<WeylString>> {
    if !erasure_correctable(code, pattern)? {
        return Err(CodeError::NoRepresentative);
    }
    match code {
        CodeSpec::Qpyc(c) => {
            Ok(vec![qpyc_logical_representative(c, pattern, basis)?])
        }
        CodeSpec::FourQubit => {
            let fq = FourQubitCode;
            let mut out = Vec::new();
            for which in 0..2 {
                let reps = fq.logical_representatives(basis, which);
                let found = reps
                    .into_iter()
                    .find(|r| r.support().iter().all(|&q| !pattern.contains(q)))
                    .ok_or(CodeError::NoRepresentative)?;
                out.push(found);
            }
            Ok(out)
        }
        CodeSpec::Qpc(c) => {
            let (n, m) = (c.n_blocks(), c.m_per_block());
            let mut x = vec![0u64; n * m];
            let mut z = vec![0u64; n * m];
            match basis {
                LogicalBasis::X => {
                    let intact = (0..n)
                        .find(|&b| (0..m).all(|q| !pattern.contains(b * m + q)))
                        .ok_or(CodeError::NoRepresentative)?;
                    for q in 0..m {
                        x[intact * m + q] = 1;
                    }
                }
                LogicalBasis::Z => {
                    for b in 0..n {
                        let alive = (0..m)
                            .map(|q| b * m + q)
                            .find(|&i| !pattern.contains(i))
                            .ok_or(CodeError::NoRepresentative)?;
                        z[alive] = 1;
                    }
                }
            }
            Ok(vec![WeylString::from_exponents(x, z, 2)])
        }
    }
}

fn qpyc_logical_representative(
    code: &QpycCode,
    pattern: &ErasurePattern,
    basis: LogicalBasis,
) -> CodeResult<WeylString> {
    let d = code.d();
    let n = code.n();
    let modulus = code.modulus();
    match basis {
        LogicalBasis::X => {
            // Monic degree-k polynomial vanishing on the erased points:
            // r(t) = t^(k-e) * prod_{j erased} (t - x_j). Adding its
            // evaluations digit-wise raises the top coefficient by one.
            let erased_points: Vec<FieldElement> = pattern
                .indices()
                .map(|i| code.eval_points()[i])
                .collect();
            let tail = (code.k() - erased_points.len()) as u64;
            let exps: Vec<u64> = code
                .eval_points()
                .iter()
                .map(|&x| {
                    let mut v = x.pow(tail);
                    for &root in &erased_points {
                        v = v.mul(x.sub(root).expect("same modulus")).expect("same modulus");
                    }
                    v.value()
                })
                .collect();
            Ok(WeylString::from_exponents(exps, vec![0; n], d))
        }
        LogicalBasis::Z => {
            // Read the top coefficient from the first k+1 surviving digits.
            let survivors: Vec<usize> =
                (0..n).filter(|i| !pattern.contains(*i)).take(code.k() + 1).collect();
            let xs: Vec<FieldElement> = survivors.iter().map(|&i| code.eval_points()[i]).collect();
            let weights = top_coefficient_weights(&xs)?;
            let mut z = vec![0u64; n];
            for (&i, w) in survivors.iter().zip(weights) {
                z[i] = w.value();
            }
            let _ = modulus;
            Ok(WeylString::from_exponents(vec![0; n], z, d))
        }
    }
}

// ---------------------------------------------------------------------------
// Success probabilities
// ---------------------------------------------------------------------------

fn check_prob(p: f64) -> CodeResult<f64> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(CodeError::BadProbability(p))
    }
}

fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Binomial partial sum `sum_{j=lo}^{hi} C(n,j) p^j (1-p)^(n-j)`, each term
/// assembled in log space and accumulated with compensated summation so tails
/// down to 1e-6 and below keep full relative precision.
fn binomial_range_sum(n: u64, lo: u64, hi: u64, p: f64) -> f64 {
    if lo > hi {
        return 0.0;
    }
    if p == 0.0 {
        return if lo == 0 { 1.0 } else { 0.0 };
    }
    if p == 1.0 {
        return if hi == n { 1.0 } else { 0.0 };
    }
    let (ln_p, ln_q) = (p.ln(), (-p).ln_1p());
    let mut sum = KahanSum::default();
    for j in lo..=hi {
        sum.add((ln_choose(n, j) + j as f64 * ln_p + (n - j) as f64 * ln_q).exp());
    }
    sum.value().clamp(0.0, 1.0)
}

/// Probability that a `[[2k+1,1,k+1]]_d` block survives independent erasures:
/// at most `k` of the `2k+1` carriers lost.
pub fn qpyc_success_prob(k: usize, p_l: f64) -> CodeResult<f64> {
    let p = check_prob(p_l)?;
    let n = 2 * k as u64 + 1;
    Ok(binomial_range_sum(n, 0, k as u64, p))
}

/// Complementary tail `P(more than k lost)`, summed directly so small failure
/// probabilities are not computed as `1 - (1 - eps)`.
pub fn qpyc_failure_prob(k: usize, p_l: f64) -> CodeResult<f64> {
    let p = check_prob(p_l)?;
    let n = 2 * k as u64 + 1;
    Ok(binomial_range_sum(n, k as u64 + 1, n, p))
}

/// Large-`k` linearization around the `p_l = 1/2` fixed point,
/// `1/2 + 2 sqrt(k/pi) (1/2 - p_l)`, clamped to `[0, 1]`.
pub fn qpyc_asymptotic_success(k: usize, p_l: f64) -> CodeResult<f64> {
    let p = check_prob(p_l)?;
    let slope = 2.0 * (k as f64 / PI).sqrt();
    Ok((0.5 + slope * (0.5 - p)).clamp(0.0, 1.0))
}

/// Inverts the linearization: the smallest code size whose asymptotic success
/// reaches `target_p`, `ceil( (pi/4) ((P - 1/2)/(1/2 - p_l))^2 )`, at least 1.
pub fn qpyc_required_k(target_p: f64, p_l: f64) -> CodeResult<usize> {
    check_prob(target_p)?;
    let p = check_prob(p_l)?;
    if target_p <= 0.5 {
        return Ok(1);
    }
    if p >= 0.5 {
        return Err(CodeError::Infeasible);
    }
    let k = (PI / 4.0) * ((target_p - 0.5) / (0.5 - p)).powi(2);
    Ok((k.ceil() as usize).max(1))
}

/// Closed-form QPC success probability:
/// `(1 - p^m)^n - ((1 - p^m) - (1 - p)^m)^n`.
///
/// First factor: every block keeps a survivor. Subtracted term: every block
/// keeps a survivor but none is fully intact. Equals the brute-force sum over
/// all erasure patterns (validated exhaustively for `nm <= 16`).
pub fn qpc_success_prob(code: &QpcCode, p_l: f64) -> CodeResult<f64> {
    let p = check_prob(p_l)?;
    let n = code.n_blocks() as i32;
    let m = code.m_per_block() as i32;
    let block_alive = 1.0 - p.powi(m);
    let block_intact = (1.0 - p).powi(m);
    Ok((block_alive.powi(n) - (block_alive - block_intact).powi(n)).clamp(0.0, 1.0))
}

/// Exhaustive-oracle version of [`qpc_success_prob`]: sums the probability of
/// every individually-correctable erasure pattern. Exponential in `nm`; meant
/// for validating the closed form on small codes.
pub fn qpc_success_prob_brute_force(code: &QpcCode, p_l: f64) -> CodeResult<f64> {
    let p = check_prob(p_l)?;
    let qubits = code.qubits();
    assert!(qubits <= 24, "brute force is exponential in nm");
    let spec = CodeSpec::Qpc(*code);
    let mut total = KahanSum::default();
    for mask in 0u32..1 << qubits {
        let pattern = ErasurePattern::new((0..qubits).filter(|q| mask >> q & 1 == 1));
        if erasure_correctable(&spec, &pattern)? {
            let e = pattern.len() as i32;
            total.add(p.powi(e) * (1.0 - p).powi(qubits as i32 - e));
        }
    }
    Ok(total.value())
}

/// Erasure-survival probability of any supported code family.
pub fn code_success_prob(code: &CodeSpec, p_l: f64) -> CodeResult<f64> {
    match code {
        CodeSpec::Qpyc(c) => qpyc_success_prob(c.k(), p_l),
        CodeSpec::Qpc(c) => qpc_success_prob(c, p_l),
        CodeSpec::FourQubit => {
            let p = check_prob(p_l)?;
            Ok((1.0 - p).powi(4) + 4.0 * p * (1.0 - p).powi(3))
        }
    }
}

/// Delivered information per photon: logical bits times survival probability
/// over the photon count.
pub fn bits_per_photon(code: &CodeSpec, p_l: f64) -> CodeResult<f64> {
    Ok(code.logical_bits() * code_success_prob(code, p_l)? / code.photons() as f64)
}

/// Delivered information per optical mode (a qudit occupies `d` modes, a
/// qubit two).
pub fn bits_per_mode(code: &CodeSpec, p_l: f64) -> CodeResult<f64> {
    Ok(code.logical_bits() * code_success_prob(code, p_l)? / code.modes() as f64)
}

/// QPyC size whose physical Hilbert dimension best matches a surface code of
/// distance `dist` (with `2 dist^2` qubits): the largest `k` such that
/// `2k + 1` is itself prime and `(2k+1)^(2k+1) <= 2^(2 dist^2)`, i.e. the
/// largest code of exactly-prime qudit count fitting inside the surface
/// code's state space. Restricting to prime `2k+1` keeps `d = 2k+1` exact.
pub fn hilbert_match_k(dist: u32) -> usize {
    let target = 2.0 * (dist as f64).powi(2);
    let mut best = 1;
    let mut k = 1;
    loop {
        let n = 2 * k as u64 + 1;
        let log_dim = n as f64 * (n as f64).log2();
        if log_dim > target {
            return best;
        }
        if first_prime_geq(n).map(|m| m.get()) == Ok(n) {
            best = k;
        }
        k += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn qutrit_terms(s: u64) -> Vec<String> {
        let code = three_qutrit_code();
        let state = code.logical_state(code.modulus().element(s));
        let mut out: Vec<String> = state
            .terms()
            .iter()
            .map(|t| t.iter().map(|d| d.to_string()).collect())
            .collect();
        out.sort();
        out
    }

    #[test]
    fn three_qutrit_logical_states_match_known_codewords() {
        assert_eq!(qutrit_terms(0), vec!["000", "111", "222"]);
        assert_eq!(qutrit_terms(1), vec!["012", "120", "201"]);
        assert_eq!(qutrit_terms(2), vec!["021", "102", "210"]);
    }

    #[test]
    fn qpyc_term_counts_and_orthogonality() {
        let code = QpycCode::new(2).unwrap();
        assert_eq!(code.d(), 5);
        let mut seen = BTreeSet::new();
        for s in code.modulus().elements() {
            let state = code.logical_state(s);
            assert_eq!(state.terms().len(), 25);
            for t in state.terms() {
                assert!(seen.insert(t.clone()), "term sets overlap across labels");
            }
        }
    }

    #[test]
    fn four_qubit_logical_states() {
        let code = four_qubit_code();
        let t00 = code.logical_basis_terms(0, 0);
        assert_eq!(t00.len(), 4);
        for (idx, amp) in &t00 {
            assert!([0b0000, 0b0011, 0b1100, 0b1111].contains(idx));
            assert_eq!(*amp, 0.5);
        }
        let t11 = code.logical_basis_terms(1, 1);
        let signs: std::collections::BTreeMap<usize, f64> = t11.into_iter().collect();
        assert_eq!(signs[&0b0101], 0.5);
        assert_eq!(signs[&0b0110], -0.5);
        assert_eq!(signs[&0b1001], -0.5);
        assert_eq!(signs[&0b1010], 0.5);
    }

    #[test]
    fn correctability_predicates() {
        let qpyc = CodeSpec::Qpyc(three_qutrit_code());
        assert!(erasure_correctable(&qpyc, &ErasurePattern::new([0])).unwrap());
        assert!(!erasure_correctable(&qpyc, &ErasurePattern::new([0, 1])).unwrap());

        let qpc = CodeSpec::Qpc(QpcCode::new(2, 2).unwrap());
        assert!(erasure_correctable(&qpc, &ErasurePattern::new([0])).unwrap());
        assert!(!erasure_correctable(&qpc, &ErasurePattern::new([0, 1])).unwrap());
        // One loss in each block keeps Z readable but no block intact.
        assert!(!erasure_correctable(&qpc, &ErasurePattern::new([0, 2])).unwrap());

        assert!(erasure_correctable(&CodeSpec::FourQubit, &ErasurePattern::new([3])).unwrap());
        assert!(matches!(
            erasure_correctable(&qpyc, &ErasurePattern::new([7])),
            Err(CodeError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn success_prob_fixed_point_and_edges() {
        for k in 1..=25 {
            let p = qpyc_success_prob(k, 0.5).unwrap();
            assert!((p - 0.5).abs() < 1e-12, "k={k}: {p}");
            assert_eq!(qpyc_success_prob(k, 0.0).unwrap(), 1.0);
            assert_eq!(qpyc_success_prob(k, 1.0).unwrap(), 0.0);
            let s = qpyc_success_prob(k, 0.2).unwrap();
            let f = qpyc_failure_prob(k, 0.2).unwrap();
            assert!((s + f - 1.0).abs() < 1e-12);
        }
        assert!(qpyc_success_prob(1, 1.5).is_err());
    }

    #[test]
    fn table_failure_values() {
        // Frozen from the direct tail sums; displayed values round/truncate
        // to 0.007, 0.0016, 8.8e-5, 5.23e-6.
        let expect = [
            (6, 7.0036e-3, 1e-6),
            (9, 1.5792e-3, 1e-6),
            (15, 8.8155e-5, 1e-8),
            (21, 5.2370e-6, 1e-9),
        ];
        for (k, value, tol) in expect {
            let f = qpyc_failure_prob(k, 0.2).unwrap();
            assert!((f - value).abs() < tol, "k={k}: {f}");
        }
    }

    #[test]
    fn asymptotic_success_examples() {
        for k in [1, 10, 100] {
            assert!((qpyc_asymptotic_success(k, 0.5).unwrap() - 0.5).abs() < 1e-15);
        }
        let v = qpyc_asymptotic_success(100, 0.49).unwrap();
        assert!((v - 0.612838).abs() < 1e-4, "{v}");
        // Within 5% of the exact sum near the fixed point at large k.
        for k in [100, 200] {
            for p in [0.49, 0.495, 0.5, 0.505, 0.51] {
                let approx = qpyc_asymptotic_success(k, p).unwrap();
                let exact = qpyc_success_prob(k, p).unwrap();
                assert!(
                    (approx - exact).abs() / exact < 0.05,
                    "k={k} p={p}: {approx} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn required_k_examples() {
        assert_eq!(qpyc_required_k(0.6, 0.45).unwrap(), 4);
        assert_eq!(qpyc_required_k(0.500001, 0.4).unwrap(), 1);
        assert_eq!(qpyc_required_k(0.6, 0.5), Err(CodeError::Infeasible));
        // The returned size honors the target within linearization error.
        let k = qpyc_required_k(0.7, 0.47).unwrap();
        let achieved = qpyc_success_prob(k, 0.47).unwrap();
        assert!(achieved >= 0.7 - 0.02, "k={k} achieved {achieved}");
    }

    #[test]
    fn qpc_closed_form_examples() {
        let one = QpcCode::new(1, 1).unwrap();
        for p in [0.0, 0.3, 0.9] {
            assert!((qpc_success_prob(&one, p).unwrap() - (1.0 - p)).abs() < 1e-15);
        }
        let c22 = QpcCode::new(2, 2).unwrap();
        assert!((qpc_success_prob(&c22, 0.1).unwrap() - 0.9477).abs() < 1e-12);
        assert_eq!(qpc_success_prob(&c22, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn qpc_closed_form_matches_brute_force() {
        for (n, m) in [(1, 1), (2, 2), (3, 2), (2, 4), (4, 3), (1, 7), (5, 2)] {
            let code = QpcCode::new(n, m).unwrap();
            for i in 1..=10 {
                let p = 0.05 * i as f64;
                let closed = qpc_success_prob(&code, p).unwrap();
                let brute = qpc_success_prob_brute_force(&code, p).unwrap();
                assert!(
                    (closed - brute).abs() < 1e-12,
                    "QPC({n},{m}) p={p}: {closed} vs {brute}"
                );
            }
        }
    }

    #[test]
    fn resource_rates() {
        let qutrit = CodeSpec::Qpyc(three_qutrit_code());
        let fourq = CodeSpec::FourQubit;
        let b = bits_per_photon(&qutrit, 0.0).unwrap();
        assert!((b - 3f64.log2() / 3.0).abs() < 1e-12);
        // Photon efficiency dominance on a fine grid.
        for i in 0..=100 {
            let p = i as f64 / 100.0;
            assert!(
                bits_per_photon(&qutrit, p).unwrap() >= bits_per_photon(&fourq, p).unwrap() - 1e-12,
                "p={p}"
            );
        }
        // Mode efficiency crosses between 0.41 and 0.43.
        let diff = |p: f64| {
            bits_per_mode(&qutrit, p).unwrap() - bits_per_mode(&fourq, p).unwrap()
        };
        assert!(diff(0.41) < 0.0);
        assert!(diff(0.43) > 0.0);
        assert_eq!(qutrit.modes(), 9);
        assert_eq!(fourq.modes(), 8);
    }

    #[test]
    fn hilbert_pairings() {
        assert_eq!(hilbert_match_k(5), 6);
        assert_eq!(hilbert_match_k(7), 9);
        assert_eq!(hilbert_match_k(9), 15);
        assert_eq!(hilbert_match_k(11), 21);
        let mut last = 0;
        for dist in 2..=15 {
            let k = hilbert_match_k(dist);
            assert!(k >= last, "not monotone at D={dist}");
            last = k;
        }
    }

    #[test]
    fn representatives_under_erasure() {
        let qpyc = CodeSpec::Qpyc(three_qutrit_code());
        let erased0 = ErasurePattern::new([0]);
        let x = &logical_measurement_under_erasure(&qpyc, &erased0, LogicalBasis::X).unwrap()[0];
        assert_eq!(x.x_exp, vec![0, 1, 2]); // I X X^2
        let z = &logical_measurement_under_erasure(&qpyc, &erased0, LogicalBasis::Z).unwrap()[0];
        assert_eq!(z.z_exp, vec![0, 2, 1]); // I Z^2 Z
        assert_eq!(format!("{x}"), "I X X^2");

        let no_erasure = ErasurePattern::default();
        let x_full = &logical_measurement_under_erasure(&qpyc, &no_erasure, LogicalBasis::X)
            .unwrap()[0];
        assert_eq!(x_full.x_exp, vec![0, 1, 2]);

        let fq = CodeSpec::FourQubit;
        let reps = logical_measurement_under_erasure(&fq, &erased0, LogicalBasis::X).unwrap();
        assert_eq!(reps[0].x_exp, vec![0, 1, 0, 1]); // IXIX
        assert_eq!(reps[1].z_exp, vec![0, 1, 0, 1]); // IZIZ
        let reps = logical_measurement_under_erasure(&fq, &erased0, LogicalBasis::Z).unwrap();
        assert_eq!(reps[0].z_exp, vec![0, 0, 1, 1]); // IIZZ
        assert_eq!(reps[1].x_exp, vec![0, 0, 1, 1]); // IIXX

        let two = ErasurePattern::new([0, 1]);
        assert_eq!(
            logical_measurement_under_erasure(&qpyc, &two, LogicalBasis::X),
            Err(CodeError::NoRepresentative)
        );
    }

    #[test]
    fn qpyc_representatives_recover_top_coefficient() {
        // For every correctable pattern the Z representative reads c_k and
        // the X representative shifts it by one, on every codeword.
        for k in [1usize, 2] {
            let code = QpycCode::new(k).unwrap();
            let spec = CodeSpec::Qpyc(code.clone());
            let d = code.d();
            let masks = 1u32 << code.n();
            for mask in 0..masks {
                let pattern =
                    ErasurePattern::new((0..code.n()).filter(|q| mask >> q & 1 == 1));
                if !erasure_correctable(&spec, &pattern).unwrap() {
                    continue;
                }
                let z = &logical_measurement_under_erasure(&spec, &pattern, LogicalBasis::Z)
                    .unwrap()[0];
                for s in code.modulus().elements() {
                    for term in code.logical_state(s).terms() {
                        let read: u64 = term
                            .iter()
                            .zip(&z.z_exp)
                            .map(|(digit, w)| digit * w)
                            .sum::<u64>()
                            % d;
                        assert_eq!(read, s.value());
                    }
                }
            }
        }
    }

    /// Surviving digits of any codeword determine the label: interpolating
    /// them under the degree bound recovers a polynomial whose top
    /// coefficient is s.
    #[test]
    fn surviving_digits_decode_the_label() {
        use crate::field::lagrange_interpolate;
        let code = QpycCode::new(2).unwrap();
        let modulus = code.modulus();
        for s in modulus.elements() {
            for term in code.logical_state(s).terms() {
                for pattern in [vec![], vec![0], vec![4, 1]] {
                    let points: Vec<_> = (0..code.n())
                        .filter(|i| !pattern.contains(i))
                        .map(|i| (code.eval_points()[i], modulus.element(term[i])))
                        .collect();
                    let poly = lagrange_interpolate(&points, code.k()).unwrap();
                    assert_eq!(poly.coeff(code.k()), s);
                }
            }
        }
    }

    #[test]
    fn code_spec_json_round_trip() {
        for spec in [
            CodeSpec::Qpyc(QpycCode::new(3).unwrap()),
            CodeSpec::Qpc(QpcCode::new(4, 2).unwrap()),
            CodeSpec::FourQubit,
        ] {
            let json = serde_json::to_string(&spec).unwrap();
            let back: CodeSpec = serde_json::from_str(&json).unwrap();
            assert_eq!(spec, back);
        }
        let json = serde_json::to_string(&CodeSpec::Qpyc(three_qutrit_code())).unwrap();
        assert!(json.contains("\"family\":\"qpyc\""));
    }

    proptest! {
        #[test]
        fn success_monotonicity(k in 1usize..20, i in 0usize..48) {
            let p = i as f64 / 100.0;
            let s0 = qpyc_success_prob(k, p).unwrap();
            let s1 = qpyc_success_prob(k, p + 0.01).unwrap();
            prop_assert!(s1 <= s0 + 1e-12);
            let bigger = qpyc_success_prob(k + 1, p).unwrap();
            prop_assert!(bigger >= s0 - 1e-12);
        }
    }
}
