//! Prime-field arithmetic over `Z_d` and polynomial evaluation/interpolation.
//!
//! Code construction and erasure decoding both reduce to statements about
//! polynomials of bounded degree over a prime field: a codeword is a vector
//! of evaluations, and decoding is Lagrange interpolation from the surviving
//! coordinates. Everything here is exact integer arithmetic; there is no
//! floating point anywhere in this module.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("argument {0} is below the smallest prime 2")]
    BelowTwo(u64),
    #[error("mixed moduli {0} and {1} in one operation")]
    ModulusMismatch(u64, u64),
    #[error("division by zero in Z_{0}")]
    DivisionByZero(u64),
    #[error("duplicate evaluation point {0}")]
    DuplicatePoint(u64),
    #[error("need at least {needed} interpolation points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("points are not consistent with degree bound {bound}")]
    DegreeExceeded { bound: usize },
    #[error("polynomial needs at least one coefficient")]
    EmptyPolynomial,
}

pub type FieldResult<T> = Result<T, FieldError>;

/// A prime qudit dimension `d`. Construction checks primality, so a value of
/// this type is always a valid field modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct PrimeModulus(u64);

impl PrimeModulus {
    pub fn new(d: u64) -> FieldResult<Self> {
        if d < 2 {
            return Err(FieldError::BelowTwo(d));
        }
        if !is_prime(d) {
            return Err(FieldError::NotPrime(d));
        }
        Ok(PrimeModulus(d))
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }

    /// Embeds an integer as a field element, reducing modulo `d`.
    #[inline]
    pub fn element(self, value: u64) -> FieldElement {
        FieldElement {
            value: value % self.0,
            modulus: self,
        }
    }

    /// Embeds a signed integer, mapping negatives to their residue.
    #[inline]
    pub fn element_from_i64(self, value: i64) -> FieldElement {
        let d = self.0 as i64;
        self.element(value.rem_euclid(d) as u64)
    }

    /// All field elements `0, 1, ..., d-1` in order.
    pub fn elements(self) -> impl Iterator<Item = FieldElement> {
        (0..self.0).map(move |v| self.element(v))
    }

    pub fn zero(self) -> FieldElement {
        self.element(0)
    }

    pub fn one(self) -> FieldElement {
        self.element(1)
    }
}

impl TryFrom<u64> for PrimeModulus {
    type Error = FieldError;
    fn try_from(d: u64) -> FieldResult<Self> {
        PrimeModulus::new(d)
    }
}

impl From<PrimeModulus> for u64 {
    fn from(m: PrimeModulus) -> u64 {
        m.0
    }
}

/// Deterministic trial division. The dimensions used by the codes stay tiny
/// (below ~100), so nothing faster is warranted.
fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut f = 3;
    while f * f <= n {
        if n.is_multiple_of(f) {
            return false;
        }
        f += 2;
    }
    true
}

/// Smallest prime `>= n`.
pub fn first_prime_geq(n: u64) -> FieldResult<PrimeModulus> {
    if n < 2 {
        return Err(FieldError::BelowTwo(n));
    }
    let mut candidate = n;
    loop {
        if is_prime(candidate) {
            return Ok(PrimeModulus(candidate));
        }
        candidate += 1;
    }
}

/// An element of `Z_d`. Always kept reduced to `[0, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u64,
    modulus: PrimeModulus,
}

#[allow(clippy::should_implement_trait)] // checked, Result-returning arithmetic
impl FieldElement {
    #[inline]
    pub fn value(self) -> u64 {
        self.value
    }

    #[inline]
    pub fn modulus(self) -> PrimeModulus {
        self.modulus
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    fn require_same(self, other: FieldElement) -> FieldResult<()> {
        if self.modulus == other.modulus {
            Ok(())
        } else {
            Err(FieldError::ModulusMismatch(
                self.modulus.get(),
                other.modulus.get(),
            ))
        }
    }

    pub fn add(self, rhs: FieldElement) -> FieldResult<FieldElement> {
        self.require_same(rhs)?;
        Ok(self.modulus.element(self.value + rhs.value))
    }

    pub fn sub(self, rhs: FieldElement) -> FieldResult<FieldElement> {
        self.require_same(rhs)?;
        let d = self.modulus.get();
        Ok(self.modulus.element(self.value + d - rhs.value))
    }

    pub fn mul(self, rhs: FieldElement) -> FieldResult<FieldElement> {
        self.require_same(rhs)?;
        // d < 2^32 in practice, but go through u128 so the invariant is
        // unconditional.
        let prod = (self.value as u128 * rhs.value as u128) % self.modulus.get() as u128;
        Ok(self.modulus.element(prod as u64))
    }

    pub fn neg(self) -> FieldElement {
        let d = self.modulus.get();
        self.modulus.element(d - self.value % d)
    }

    /// Fermat inverse `a^(d-2)`; fails on zero.
    pub fn inv(self) -> FieldResult<FieldElement> {
        if self.value == 0 {
            return Err(FieldError::DivisionByZero(self.modulus.get()));
        }
        Ok(self.pow(self.modulus.get() - 2))
    }

    pub fn pow(self, mut exp: u64) -> FieldElement {
        let mut base = self;
        let mut acc = self.modulus.one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul(base).expect("same modulus");
            }
            base = base.mul(base).expect("same modulus");
            exp >>= 1;
        }
        acc
    }
}

/// Dispatch table for the five primitive field operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldOp {
    Add,
    Sub,
    Mul,
    Inv,
    Pow(u64),
}

/// Single entry point mirroring the primitive-arithmetic contract; `Inv` and
/// `Pow` ignore the second operand.
pub fn field_arith(a: FieldElement, b: FieldElement, op: FieldOp) -> FieldResult<FieldElement> {
    match op {
        FieldOp::Add => a.add(b),
        FieldOp::Sub => a.sub(b),
        FieldOp::Mul => a.mul(b),
        FieldOp::Inv => a.inv(),
        FieldOp::Pow(e) => Ok(a.pow(e)),
    }
}

/// A polynomial `c_0 + c_1 t + ... + c_k t^k` over one prime field.
/// Coefficients are stored low-to-high and the list is never empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    coeffs: Vec<FieldElement>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<FieldElement>) -> FieldResult<Self> {
        let first = *coeffs.first().ok_or(FieldError::EmptyPolynomial)?;
        for c in &coeffs[1..] {
            first.require_same(*c)?;
        }
        Ok(Polynomial { coeffs })
    }

    pub fn from_values(modulus: PrimeModulus, coeffs: &[u64]) -> FieldResult<Self> {
        if coeffs.is_empty() {
            return Err(FieldError::EmptyPolynomial);
        }
        Ok(Polynomial {
            coeffs: coeffs.iter().map(|&c| modulus.element(c)).collect(),
        })
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.coeffs[0].modulus()
    }

    /// Upper bound on the degree (number of stored coefficients minus one);
    /// leading coefficients may be zero.
    pub fn degree_bound(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    /// Coefficient of `t^i`, zero beyond the stored length.
    pub fn coeff(&self, i: usize) -> FieldElement {
        self.coeffs
            .get(i)
            .copied()
            .unwrap_or_else(|| self.modulus().zero())
    }

    /// Horner evaluation of `sum_j c_j t^j (mod d)`.
    pub fn eval(&self, t: FieldElement) -> FieldResult<FieldElement> {
        self.coeffs[0].require_same(t)?;
        let mut acc = self.modulus().zero();
        for &c in self.coeffs.iter().rev() {
            acc = acc.mul(t)?.add(c)?;
        }
        Ok(acc)
    }
}

/// Exact interpolation through all given points: the unique polynomial of
/// degree `<= points.len() - 1`. Used directly by the readout decoders, which
/// inspect high coefficients as an error syndrome.
pub fn interpolate(points: &[(FieldElement, FieldElement)]) -> FieldResult<Polynomial> {
    if points.is_empty() {
        return Err(FieldError::InsufficientPoints { needed: 1, got: 0 });
    }
    let modulus = points[0].0.modulus();
    for (x, y) in points {
        x.require_same(*y)?;
        points[0].0.require_same(*x)?;
    }
    for (i, (xi, _)) in points.iter().enumerate() {
        for (xj, _) in &points[i + 1..] {
            if xi == xj {
                return Err(FieldError::DuplicatePoint(xi.value()));
            }
        }
    }

    let n = points.len();
    let mut acc = vec![modulus.zero(); n];
    // Lagrange basis: for each node j accumulate y_j * prod_{i != j} (t - x_i) / (x_j - x_i).
    let mut basis = vec![modulus.zero(); n];
    for (j, &(xj, yj)) in points.iter().enumerate() {
        basis.iter_mut().for_each(|c| *c = modulus.zero());
        basis[0] = modulus.one();
        let mut denom = modulus.one();
        let mut deg = 0;
        for (i, &(xi, _)) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            // basis *= (t - x_i)
            for idx in (0..=deg).rev() {
                let keep = basis[idx];
                basis[idx + 1] = basis[idx + 1].add(keep)?;
                basis[idx] = keep.mul(xi.neg())?;
            }
            deg += 1;
            denom = denom.mul(xj.sub(xi)?)?;
        }
        let scale = yj.mul(denom.inv()?)?;
        for (a, b) in acc.iter_mut().zip(basis.iter()) {
            *a = a.add(b.mul(scale)?)?;
        }
    }
    Polynomial::new(acc)
}

/// Interpolation with an explicit degree bound. Requires at least
/// `degree_bound + 1` points, and fails with [`FieldError::DegreeExceeded`]
/// when the points do not actually lie on a polynomial of that degree.
pub fn lagrange_interpolate(
    points: &[(FieldElement, FieldElement)],
    degree_bound: usize,
) -> FieldResult<Polynomial> {
    if points.len() < degree_bound + 1 {
        return Err(FieldError::InsufficientPoints {
            needed: degree_bound + 1,
            got: points.len(),
        });
    }
    let full = interpolate(points)?;
    for i in degree_bound + 1..=full.degree_bound() {
        if !full.coeff(i).is_zero() {
            return Err(FieldError::DegreeExceeded {
                bound: degree_bound,
            });
        }
    }
    Polynomial::new(full.coeffs()[..=degree_bound.min(full.degree_bound())].to_vec())
}

/// Weights `w_j` such that `sum_j w_j p(x_j)` recovers the coefficient of
/// `t^k` (`k = xs.len() - 1`) of any polynomial `p` of degree `<= k`. These
/// are the leading coefficients of the Lagrange basis, `1 / prod_{i != j}
/// (x_j - x_i)`, and double as the exponents of a logical-Z representative.
pub fn top_coefficient_weights(xs: &[FieldElement]) -> FieldResult<Vec<FieldElement>> {
    let mut weights = Vec::with_capacity(xs.len());
    for (j, &xj) in xs.iter().enumerate() {
        let mut denom = xj.modulus().one();
        for (i, &xi) in xs.iter().enumerate() {
            if i != j {
                if xi == xj {
                    return Err(FieldError::DuplicatePoint(xi.value()));
                }
                denom = denom.mul(xj.sub(xi)?)?;
            }
        }
        weights.push(denom.inv()?);
    }
    Ok(weights)
}
