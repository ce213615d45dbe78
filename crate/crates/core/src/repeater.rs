//! Analytic model of a one-way repeater chain.
//!
//! A chain of `r = L_tot / L_0` stations relays a polynomial-code block;
//! each hop either heralds a failure (too many photons lost), decodes the
//! logical X/Z readouts correctly, or decodes them incorrectly. Under the
//! pessimistic assumption that one bad hop spoils the chain, the conditional
//! logical error rate and the surviving-chain probability give an asymptotic
//! two-basis secret-key rate `R = P_chain (log2 d - 2 h(Q)) / t_0`. Chain
//! powers are taken in log space throughout: `r` reaches 10^4 while per-hop
//! probabilities sit next to 1.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codes::{qpyc_failure_prob, qpyc_success_prob, CodeError, QpycCode};
use crate::mc::KahanSum;
use crate::noise::{epsilon_xz, ChannelParams, NoiseError};

pub const DEFAULT_ATTENUATION_KM: f64 = 20.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RepeaterError {
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error("lengths and times must be positive, got {0}")]
    BadLength(f64),
    #[error("no positive-rate threshold exists for d = {0}")]
    Infeasible(u64),
}

pub type RepeaterResult<T> = Result<T, RepeaterError>;

/// Chain description: total span, station spacing, local-operation time, the
/// code, and the operation-error parameters. The per-segment loss is derived
/// from the geometry (`p_l = 1 - exp(-L_0/L_att)`), not read from `channel`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeaterConfig {
    pub l_tot_km: f64,
    pub l0_km: f64,
    pub l_att_km: f64,
    pub t0_s: f64,
    pub k: usize,
    pub channel: ChannelParams,
}

impl RepeaterConfig {
    pub fn new(
        l_tot_km: f64,
        l0_km: f64,
        l_att_km: f64,
        t0_s: f64,
        k: usize,
        channel: ChannelParams,
    ) -> RepeaterResult<Self> {
        for v in [l_tot_km, l0_km, l_att_km, t0_s] {
            if !v.is_finite() || v <= 0.0 {
                return Err(RepeaterError::BadLength(v));
            }
        }
        QpycCode::new(k)?;
        Ok(RepeaterConfig {
            l_tot_km,
            l0_km,
            l_att_km,
            t0_s,
            k,
            channel,
        })
    }

    pub fn code(&self) -> QpycCode {
        QpycCode::new(self.k).expect("validated at construction")
    }

    /// Number of hops, rounded to the nearest integer, and whether the
    /// spacing divides the span exactly (callers may warn when it does not).
    pub fn segments(&self) -> (u64, bool) {
        let ratio = self.l_tot_km / self.l0_km;
        let r = ratio.round().max(1.0);
        (r as u64, (ratio - r).abs() < 1e-9)
    }

    pub fn loss(&self) -> f64 {
        loss_per_segment(self.l0_km, self.l_att_km)
    }
}

/// `p_l = 1 - exp(-L_0 / L_att)`, via `expm1` so short segments keep
/// precision.
pub fn loss_per_segment(l0_km: f64, l_att_km: f64) -> f64 {
    assert!(l0_km > 0.0 && l_att_km > 0.0, "lengths must be positive");
    -(-l0_km / l_att_km).exp_m1()
}

/// Per-hop decode statistics of one TEC station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopStats {
    pub p_fail: f64,
    pub p_correct_x: f64,
    pub p_correct_z: f64,
    pub p_incorrect_x: f64,
    pub p_incorrect_z: f64,
}

impl HopStats {
    pub fn p_success(&self) -> f64 {
        1.0 - self.p_fail
    }

    pub fn p_correct(&self, z_basis: bool) -> f64 {
        if z_basis {
            self.p_correct_z
        } else {
            self.p_correct_x
        }
    }
}

/// Probability of exactly `n1` losses and `n2` readout errors among the
/// survivors of a `2k+1`-carrier block.
fn loss_error_weight(n: u64, n1: u64, n2: u64, p: f64, eps: f64) -> f64 {
    let survivors = n - n1;
    choose(n, n1)
        * choose(survivors, n2)
        * pow_or_one(p, n1)
        * pow_or_one(eps, n2)
        * pow_or_one(1.0 - p, survivors)
        * pow_or_one(1.0 - eps, survivors - n2)
}

fn pow_or_one(base: f64, exp: u64) -> f64 {
    if exp == 0 {
        1.0
    } else {
        base.powi(exp as i32)
    }
}

fn choose(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Per-hop statistics: a readout decodes correctly when `n1 + 2 n2 <= k`,
/// i.e. `n2` at most `(k - n1)/2`; heralded failure when `n1 > k`.
pub fn hop_stats(k: usize, p_l: f64, eps_x: f64, eps_z: f64) -> HopStats {
    let n = 2 * k as u64 + 1;
    let mut correct = [KahanSum::default(), KahanSum::default()];
    let mut incorrect = [KahanSum::default(), KahanSum::default()];
    for (slot, eps) in [eps_x, eps_z].into_iter().enumerate() {
        for n1 in 0..=k as u64 {
            let radius = (k as u64 - n1) / 2;
            for n2 in 0..=(n - n1) {
                let w = loss_error_weight(n, n1, n2, p_l, eps);
                if n2 <= radius {
                    correct[slot].add(w);
                } else {
                    incorrect[slot].add(w);
                }
            }
        }
    }
    HopStats {
        p_fail: qpyc_failure_prob(k, p_l).expect("probability validated upstream"),
        p_correct_x: correct[0].value(),
        p_correct_z: correct[1].value(),
        p_incorrect_x: incorrect[0].value(),
        p_incorrect_z: incorrect[1].value(),
    }
}

/// Leading-order incorrect-decode probability per hop for basis error rate
/// `eps_b`: the `n1 = k-1, n2 = 1` term
/// `(k+2) eps_b p^(k-1) C(2k+1, k-1) (1-p)^(k+2)`.
pub fn leading_order_incorrect(k: usize, p_l: f64, eps_b: f64) -> f64 {
    let n = 2 * k as u64 + 1;
    (k as f64 + 2.0)
        * eps_b
        * pow_or_one(p_l, k as u64 - 1)
        * choose(n, k as u64 - 1)
        * pow_or_one(1.0 - p_l, k as u64 + 2)
}

/// End-to-end chain quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndToEnd {
    pub q_x: f64,
    pub q_z: f64,
    pub q: f64,
    /// Probability that no hop heralds a failure.
    pub p_chain: f64,
    pub hops: u64,
    pub exact_spacing: bool,
}

/// Chains the per-hop statistics: `P_chain = P_success^r` and
/// `Q_b = 1 - (P_correct_b / P_success)^r`, averaged into `Q`.
pub fn end_to_end(config: &RepeaterConfig) -> RepeaterResult<EndToEnd> {
    let (hops, exact_spacing) = config.segments();
    let p = config.loss();
    let (eps_x, eps_z) = epsilon_xz(&config.channel);
    let hop = hop_stats(config.k, p, eps_x, eps_z);
    let r = hops as f64;
    let ln_success = qpyc_success_prob(config.k, p)?.ln();
    let q_of = |p_correct: f64| -> f64 {
        // 1 - (P_correct/P_success)^r without cancellation.
        -((r * (p_correct.ln() - ln_success)).exp_m1())
    };
    let q_x = q_of(hop.p_correct_x).clamp(0.0, 1.0);
    let q_z = q_of(hop.p_correct_z).clamp(0.0, 1.0);
    Ok(EndToEnd {
        q_x,
        q_z,
        q: 0.5 * (q_x + q_z),
        p_chain: (r * ln_success).exp(),
        hops,
        exact_spacing,
    })
}

/// Qudit entropy `h(Q) = -Q log2(Q/(d-1)) - (1-Q) log2(1-Q)`, continuous at
/// the endpoints.
pub fn entropy_h(q: f64, d: u64) -> f64 {
    assert!((0.0..=1.0).contains(&q), "Q outside [0,1]");
    let mut h = 0.0;
    if q > 0.0 {
        h -= q * (q / (d as f64 - 1.0)).log2();
    }
    if q < 1.0 {
        h -= (1.0 - q) * (1.0 - q).log2();
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRate {
    /// Secret bits per second.
    pub r_per_s: f64,
    /// Dimensionless rate `R t_0`.
    pub r_t0: f64,
    pub q: f64,
    pub p_chain: f64,
}

/// Asymptotic two-basis key rate `R = P_chain (log2 d - 2 h(Q)) / t_0`,
/// floored at zero.
pub fn key_rate(config: &RepeaterConfig) -> RepeaterResult<KeyRate> {
    let chain = end_to_end(config)?;
    let d = config.code().d();
    let secret_fraction = ((d as f64).log2() - 2.0 * entropy_h(chain.q, d)).max(0.0);
    let r_t0 = chain.p_chain * secret_fraction;
    Ok(KeyRate {
        r_per_s: r_t0 / config.t0_s,
        r_t0,
        q: chain.q,
        p_chain: chain.p_chain,
    })
}

/// Largest tolerable logical error rate: the root of
/// `log2 d = 2 h(Q)` in `(0, (d-1)/d)`, by bisection to 1e-9.
pub fn q_max(d: u64) -> RepeaterResult<f64> {
    if d < 2 {
        return Err(RepeaterError::Infeasible(d));
    }
    let target = (d as f64).log2();
    let f = |q: f64| target - 2.0 * entropy_h(q, d);
    let mut lo = 0.0f64;
    let mut hi = (d as f64 - 1.0) / d as f64;
    if f(hi) >= 0.0 {
        return Err(RepeaterError::Infeasible(d));
    }
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Maximum chain span from the leading-order incorrect-decode rates:
/// `L_max = 2 Q_max L_0 / (P_incorrect_X + P_incorrect_Z)` with all
/// operation errors equal to `eps`. Unbounded (infinity) at `eps = 0`.
pub fn l_tot_max(code: &QpycCode, eps: f64, l0_km: f64, l_att_km: f64) -> RepeaterResult<f64> {
    if eps == 0.0 {
        return Ok(f64::INFINITY);
    }
    let p = loss_per_segment(l0_km, l_att_km);
    let channel = ChannelParams::new(p, eps, eps, eps, code.modulus())?;
    let (eps_x, eps_z) = epsilon_xz(&channel);
    let inc = leading_order_incorrect(code.k(), p, eps_x)
        + leading_order_incorrect(code.k(), p, eps_z);
    Ok(2.0 * q_max(code.d())? * l0_km / inc)
}

/// One grid point of the rate-versus-distance sweep, with the leading-order
/// approximation column alongside the full formula.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub d: u64,
    pub eps: f64,
    pub l_tot_km: f64,
    pub r_t0: f64,
    pub r_per_s: f64,
    pub q: f64,
    pub p_chain: f64,
    pub r_t0_leading_order: f64,
}

/// Sweeps `R t_0` over total distance for each code size and operation-error
/// level (all three error types set to `eps`).
pub fn sweep_rate_vs_distance(
    ks: &[usize],
    eps_values: &[f64],
    l0_km: f64,
    l_att_km: f64,
    t0_s: f64,
    l_tot_grid_km: &[f64],
) -> RepeaterResult<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &k in ks {
        let code = QpycCode::new(k)?;
        let p = loss_per_segment(l0_km, l_att_km);
        for &eps in eps_values {
            let channel = ChannelParams::new(p, eps, eps, eps, code.modulus())?;
            let (eps_x, eps_z) = epsilon_xz(&channel);
            for &l_tot in l_tot_grid_km {
                let config =
                    RepeaterConfig::new(l_tot, l0_km, l_att_km, t0_s, k, channel)?;
                let rate = key_rate(&config)?;
                // Leading-order gray line: Q_b ~ r P_incorrect_b.
                let r = config.segments().0 as f64;
                let q_approx = 0.5
                    * (r * leading_order_incorrect(k, p, eps_x)
                        + r * leading_order_incorrect(k, p, eps_z));
                let q_approx = q_approx.min(1.0);
                let secret = ((code.d() as f64).log2()
                    - 2.0 * entropy_h(q_approx, code.d()))
                .max(0.0);
                rows.push(SweepRow {
                    k,
                    d: code.d(),
                    eps,
                    l_tot_km: l_tot,
                    r_t0: rate.r_t0,
                    r_per_s: rate.r_per_s,
                    q: rate.q,
                    p_chain: rate.p_chain,
                    r_t0_leading_order: rate.p_chain * secret,
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PrimeModulus;
    use proptest::prelude::*;

    fn channel(eps: f64, d: u64) -> ChannelParams {
        ChannelParams::uniform(0.0, eps, PrimeModulus::new(d).unwrap()).unwrap()
    }

    fn config(k: usize, l_tot: f64, l0: f64, eps: f64) -> RepeaterConfig {
        let d = QpycCode::new(k).unwrap().d();
        RepeaterConfig::new(l_tot, l0, DEFAULT_ATTENUATION_KM, 1e-6, k, channel(eps, d))
            .unwrap()
    }

    #[test]
    fn loss_examples() {
        assert!((loss_per_segment(20.0, 20.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((loss_per_segment(1.0, 20.0) - 0.048770575499286005).abs() < 1e-15);
        assert!(loss_per_segment(1e-9, 20.0) < 1e-9);
    }

    #[test]
    fn hop_stats_without_operation_errors() {
        for k in [1usize, 2, 3] {
            for p in [0.0, 0.05, 0.2] {
                let hop = hop_stats(k, p, 0.0, 0.0);
                let expect = qpyc_success_prob(k, p).unwrap();
                assert!((hop.p_correct_x - expect).abs() < 1e-12);
                assert!((hop.p_incorrect_x).abs() < 1e-15);
                assert!((hop.p_fail + hop.p_correct_z + hop.p_incorrect_z - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn leading_order_matches_small_eps() {
        let p = loss_per_segment(1.0, 20.0);
        for k in [1usize, 2, 3] {
            let eps = 1e-6;
            let hop = hop_stats(k, p, eps, eps);
            let approx = leading_order_incorrect(k, p, eps);
            let ratio = hop.p_incorrect_x / approx;
            assert!(
                (ratio - 1.0).abs() < 0.2,
                "k={k}: exact {} vs leading {approx}",
                hop.p_incorrect_x
            );
        }
    }

    #[test]
    fn chain_edges() {
        let c = config(1, 1.0, 1.0, 0.0);
        let chain = end_to_end(&c).unwrap();
        assert_eq!(chain.hops, 1);
        assert_eq!(chain.q, 0.0);

        // Q grows with chain length.
        let mut last = 0.0;
        for l_tot in [100.0, 200.0, 400.0, 800.0] {
            let chain = end_to_end(&config(1, l_tot, 1.0, 1e-4)).unwrap();
            assert!(chain.q >= last);
            last = chain.q;
        }
    }

    #[test]
    fn z_errors_dominate_when_dephasing_present() {
        let d = PrimeModulus::new(3).unwrap();
        let ch = ChannelParams::new(0.0, 1e-4, 1e-3, 1e-4, d).unwrap();
        let c = RepeaterConfig::new(200.0, 1.0, 20.0, 1e-6, 1, ch).unwrap();
        let chain = end_to_end(&c).unwrap();
        assert!(chain.q_x < chain.q_z);
    }

    #[test]
    fn entropy_values() {
        assert_eq!(entropy_h(0.0, 3), 0.0);
        assert!((entropy_h(0.5, 2) - 1.0).abs() < 1e-12);
        for d in [2u64, 3, 5, 7] {
            let q = (d as f64 - 1.0) / d as f64;
            assert!((entropy_h(q, d) - (d as f64).log2()).abs() < 1e-12);
        }
    }

    #[test]
    fn key_rate_edges() {
        // One noiseless ultra-short hop: R t0 = log2(d).
        let c = config(1, 1e-6, 1e-6, 0.0);
        let rate = key_rate(&c).unwrap();
        assert!((rate.r_t0 - 3f64.log2()).abs() < 1e-6);

        // 700 km with three qutrits, no operation errors.
        let rate = key_rate(&config(1, 700.0, 1.0, 0.0)).unwrap();
        assert!((rate.r_t0 - 0.0124158).abs() < 1e-6, "{}", rate.r_t0);
        assert!(rate.r_per_s > 5_000.0 && rate.r_per_s < 20_000.0);
    }

    #[test]
    fn q_max_roots() {
        let expected = [(3u64, 0.159468), (5, 0.209868), (7, 0.237241)];
        for (d, value) in expected {
            let q = q_max(d).unwrap();
            assert!((q - value).abs() < 1e-4, "d={d}: {q}");
            // Root property.
            assert!(((d as f64).log2() - 2.0 * entropy_h(q, d)).abs() < 1e-6);
        }
        assert!(q_max(1).is_err());
    }

    #[test]
    fn l_tot_max_anchors() {
        let expected = [(1usize, 120.0), (2, 440.0), (3, 1900.0)];
        for (k, anchor) in expected {
            let code = QpycCode::new(k).unwrap();
            let l = l_tot_max(&code, 1e-4, 1.0, 20.0).unwrap();
            assert!(
                (l - anchor).abs() <= 0.1 * anchor,
                "k={k}: {l} vs {anchor}"
            );
        }
        assert_eq!(
            l_tot_max(&QpycCode::new(1).unwrap(), 0.0, 1.0, 20.0).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn sweep_shape() {
        let rows = sweep_rate_vs_distance(
            &[1],
            &[0.0, 1e-4],
            1.0,
            20.0,
            1e-6,
            &[50.0, 100.0, 150.0, 200.0],
        )
        .unwrap();
        assert_eq!(rows.len(), 8);
        // Noiseless rates decay but stay positive; noisy rates die beyond
        // the range limit (~120 km for k = 1 at eps = 1e-4).
        let noiseless: Vec<&SweepRow> = rows.iter().filter(|r| r.eps == 0.0).collect();
        assert!(noiseless.windows(2).all(|w| w[1].r_t0 <= w[0].r_t0));
        assert!(noiseless.iter().all(|r| r.r_t0 > 0.0));
        let noisy: Vec<&SweepRow> = rows.iter().filter(|r| r.eps > 0.0).collect();
        assert!(noisy.last().unwrap().r_t0 == 0.0);
        // Approximation tracks the full formula while Q is small.
        for row in &rows {
            if row.q > 0.0 && row.q < q_max(row.d).unwrap() / 2.0 {
                let rel = (row.r_t0_leading_order - row.r_t0).abs() / row.r_t0;
                assert!(rel < 0.1, "L={} rel={rel}", row.l_tot_km);
            }
        }
    }

    #[test]
    fn key_rate_monotone_in_errors() {
        let d = PrimeModulus::new(3).unwrap();
        let base = key_rate(&config(1, 100.0, 1.0, 1e-5)).unwrap().r_t0;
        for scale in [2.0, 5.0, 10.0] {
            let ch = ChannelParams::uniform(0.0, scale * 1e-5, d).unwrap();
            let c = RepeaterConfig::new(100.0, 1.0, 20.0, 1e-6, 1, ch).unwrap();
            assert!(key_rate(&c).unwrap().r_t0 <= base);
        }
        // And in loss, via wider spacing.
        let wide = RepeaterConfig::new(100.0, 2.0, 20.0, 1e-6, 1, channel(1e-5, 3)).unwrap();
        assert!(key_rate(&wide).unwrap().r_t0 <= base);
    }

    proptest! {
        #[test]
        fn partition_of_unity(k in 1usize..8, p in 0.0f64..0.9, ex in 0.0f64..0.3, ez in 0.0f64..0.3) {
            let hop = hop_stats(k, p, ex, ez);
            prop_assert!((hop.p_fail + hop.p_correct_x + hop.p_incorrect_x - 1.0).abs() < 1e-12);
            prop_assert!((hop.p_fail + hop.p_correct_z + hop.p_incorrect_z - 1.0).abs() < 1e-12);
        }
    }
}
