//! Cost-coefficient minimization over code size and repeater spacing.
//!
//! The figure of merit is resources times time per km per secret bit:
//! qubit metric `C'_q = 2 (2k+1) ceil(log2 d) / (L_0 R)` (TEC needs two
//! ancilla blocks' worth of local qubits per station, and a `d`-level qudit
//! converts to `ceil(log2 d)` qubits), mode metric `C'_m = (2k+1) d /
//! (L_0 R)` (a time-bin qudit occupies `d` temporal modes in the fiber).
//! The parity-code baseline uses `2 n m` for both metrics, which is why its
//! qubit and mode costs coincide numerically.
//!
//! Operation errors are assumed to grow with the qudit dimension as
//! `eps_g = eps~_g d^4`, `eps_d = eps~_d d^2`, `eps_p = eps~_p d`.
//! The search is an exhaustive grid scan: the objective is cheap, integer
//! parameters make it nonsmooth, and reproducibility beats speed here.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codes::{qpc_success_prob, QpcCode, QpycCode};
use crate::noise::ChannelParams;
use crate::repeater::{key_rate, loss_per_segment, RepeaterConfig, RepeaterError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error(transparent)]
    Repeater(#[from] RepeaterError),
    #[error("no grid point achieves a positive key rate")]
    Infeasible,
}

pub type CostResult<T> = Result<T, CostError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostMetric {
    Qubits,
    Modes,
}

impl CostMetric {
    pub fn units(&self) -> &'static str {
        match self {
            CostMetric::Qubits => "qubits/km/sbit/s",
            CostMetric::Modes => "modes/km/sbit/s",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DominantError {
    Gate,
    Depolarization,
    Dephasing,
}

/// Dimension-scaled base error rates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorScaling {
    pub eps_g_tilde: f64,
    pub eps_d_tilde: f64,
    pub eps_p_tilde: f64,
}

impl ErrorScaling {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn dominant(which: DominantError, value: f64) -> Self {
        let mut s = Self::default();
        match which {
            DominantError::Gate => s.eps_g_tilde = value,
            DominantError::Depolarization => s.eps_d_tilde = value,
            DominantError::Dephasing => s.eps_p_tilde = value,
        }
        s
    }

    /// Physical error rates at qudit dimension `d`; `None` when the scaled
    /// rates leave the valid probability range (point is infeasible).
    pub fn realize(&self, d: u64) -> Option<(f64, f64, f64)> {
        let df = d as f64;
        let eps_g = self.eps_g_tilde * df.powi(4);
        let eps_d = self.eps_d_tilde * df.powi(2);
        let eps_p = self.eps_p_tilde * df;
        if eps_g > 1.0 || eps_d + eps_p > 1.0 {
            None
        } else {
            Some((eps_g, eps_d, eps_p))
        }
    }
}

/// Grid bounds for the exhaustive search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchGrid {
    pub k_max: usize,
    pub l0_values_km: Vec<f64>,
    pub qpc_max_side: usize,
    pub qpc_max_qubits: usize,
}

impl Default for SearchGrid {
    fn default() -> Self {
        SearchGrid {
            k_max: 25,
            l0_values_km: (1..=20).map(|i| 0.25 * i as f64).collect(),
            qpc_max_side: 50,
            qpc_max_qubits: 400,
        }
    }
}

impl SearchGrid {
    /// Same bounds with the spacing step halved (for refinement checks).
    pub fn refined(&self) -> Self {
        let max = self
            .l0_values_km
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let step = self.l0_values_km.first().copied().unwrap_or(0.25) / 2.0;
        let count = (max / step).round() as usize;
        SearchGrid {
            k_max: self.k_max,
            l0_values_km: (1..=count).map(|i| step * i as f64).collect(),
            qpc_max_side: self.qpc_max_side,
            qpc_max_qubits: self.qpc_max_qubits,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostQuery {
    pub l_tot_km: f64,
    pub metric: CostMetric,
    pub scaling: ErrorScaling,
    pub l_att_km: f64,
    pub t0_s: f64,
    pub grid: SearchGrid,
}

impl CostQuery {
    pub fn new(l_tot_km: f64, metric: CostMetric, scaling: ErrorScaling) -> Self {
        CostQuery {
            l_tot_km,
            metric,
            scaling,
            l_att_km: crate::repeater::DEFAULT_ATTENUATION_KM,
            t0_s: 1e-6,
            grid: SearchGrid::default(),
        }
    }
}

/// Optimal polynomial-code operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QpycCostResult {
    pub k: usize,
    pub d: u64,
    pub l0_km: f64,
    pub cost: f64,
    pub r_per_s: f64,
}

/// Optimal parity-code operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QpcCostResult {
    pub n_blocks: usize,
    pub m_per_block: usize,
    pub l0_km: f64,
    pub cost: f64,
    pub r_per_s: f64,
}

fn qpyc_numerator(k: usize, d: u64, metric: CostMetric) -> f64 {
    let n = (2 * k + 1) as f64;
    match metric {
        CostMetric::Qubits => 2.0 * n * (d as f64).log2().ceil(),
        CostMetric::Modes => n * d as f64,
    }
}

/// Exhaustive minimization of the polynomial-code cost coefficient.
/// Ties break toward smaller `k`, then larger spacing (fewer stations).
pub fn qpyc_min_cost(query: &CostQuery) -> CostResult<QpycCostResult> {
    let candidates: Vec<QpycCostResult> = (1..=query.grid.k_max)
        .into_par_iter()
        .flat_map_iter(|k| {
            let code = QpycCode::new(k).expect("grid k >= 1");
            let d = code.d();
            query.grid.l0_values_km.iter().filter_map(move |&l0| {
                let (eps_g, eps_d, eps_p) = query.scaling.realize(d)?;
                let p = loss_per_segment(l0, query.l_att_km);
                let channel =
                    ChannelParams::new(p, eps_d, eps_p, eps_g, code.modulus()).ok()?;
                let config = RepeaterConfig::new(
                    query.l_tot_km,
                    l0,
                    query.l_att_km,
                    query.t0_s,
                    k,
                    channel,
                )
                .ok()?;
                let rate = key_rate(&config).ok()?;
                if rate.r_per_s <= 0.0 {
                    return None;
                }
                Some(QpycCostResult {
                    k,
                    d,
                    l0_km: l0,
                    cost: qpyc_numerator(k, d, query.metric) / (l0 * rate.r_per_s),
                    r_per_s: rate.r_per_s,
                })
            })
        })
        .collect();
    candidates
        .into_iter()
        .min_by(|a, b| {
            (a.cost, a.k, -a.l0_km)
                .partial_cmp(&(b.cost, b.k, -b.l0_km))
                .expect("costs are finite")
        })
        .ok_or(CostError::Infeasible)
}

/// Qubit-metric cost `C'_q`.
pub fn cost_q(query: &CostQuery) -> CostResult<QpycCostResult> {
    let mut q = query.clone();
    q.metric = CostMetric::Qubits;
    qpyc_min_cost(&q)
}

/// Mode-metric cost `C'_m`.
pub fn cost_m(query: &CostQuery) -> CostResult<QpycCostResult> {
    let mut q = query.clone();
    q.metric = CostMetric::Modes;
    qpyc_min_cost(&q)
}

/// Comparison baseline supplying the parity-code cost. The built-in model is
/// loss-only; a model with operation errors can be plugged in to reproduce
/// error-contour comparisons.
pub trait QpcBaselineModel: Sync {
    fn label(&self) -> &'static str;
    fn min_cost(&self, query: &CostQuery) -> CostResult<QpcCostResult>;
}

/// Parity-code baseline without operation errors: per hop the block survives
/// with the closed-form erasure probability and the rate is `P^r / t_0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LossOnlyQpc;

impl QpcBaselineModel for LossOnlyQpc {
    fn label(&self) -> &'static str {
        "loss-only"
    }

    fn min_cost(&self, query: &CostQuery) -> CostResult<QpcCostResult> {
        let grid = &query.grid;
        let pairs: Vec<(usize, usize)> = (1..=grid.qpc_max_side)
            .flat_map(|n| {
                (1..=grid.qpc_max_side)
                    .filter(move |&m| n * m <= grid.qpc_max_qubits)
                    .map(move |m| (n, m))
            })
            .collect();
        let candidates: Vec<QpcCostResult> = pairs
            .into_par_iter()
            .flat_map_iter(|(n, m)| {
                let code = QpcCode::new(n, m).expect("grid dims positive");
                query.grid.l0_values_km.iter().filter_map(move |&l0| {
                    let p = loss_per_segment(l0, query.l_att_km);
                    let success = qpc_success_prob(&code, p).ok()?;
                    if success <= 0.0 {
                        return None;
                    }
                    let hops = (query.l_tot_km / l0).round().max(1.0);
                    let r_t0 = (hops * success.ln()).exp();
                    let r_per_s = r_t0 / query.t0_s;
                    if r_per_s <= 0.0 {
                        return None;
                    }
                    // Both metrics count 2 n m (TEC doubling for qubits, two
                    // temporal modes per qubit for modes).
                    Some(QpcCostResult {
                        n_blocks: n,
                        m_per_block: m,
                        l0_km: l0,
                        cost: 2.0 * (n * m) as f64 / (l0 * r_per_s),
                        r_per_s,
                    })
                })
            })
            .collect();
        candidates
            .into_iter()
            .min_by(|a, b| {
                (a.cost, a.n_blocks * a.m_per_block, a.n_blocks, -a.l0_km)
                    .partial_cmp(&(b.cost, b.n_blocks * b.m_per_block, b.n_blocks, -b.l0_km))
                    .expect("costs are finite")
            })
            .ok_or(CostError::Infeasible)
    }
}

/// One row of the improvement-factor table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioRow {
    pub l_tot_km: f64,
    pub eps_tilde: f64,
    pub dominant_error: DominantError,
    pub ratio: f64,
    pub opt_d: u64,
    pub opt_k: usize,
    pub opt_l0_km: f64,
    pub baseline_label: String,
}

/// Improvement factor `C'_QPC / C'_QPyC` over a grid of total distances and
/// base error rates, with one dominant error type scaled by dimension.
pub fn compare_ratio(
    l_tots_km: &[f64],
    eps_tildes: &[f64],
    dominant: DominantError,
    metric: CostMetric,
    baseline: &dyn QpcBaselineModel,
) -> CostResult<Vec<RatioRow>> {
    let mut rows = Vec::new();
    for &l_tot in l_tots_km {
        let qpc = {
            let query = CostQuery::new(l_tot, metric, ErrorScaling::zero());
            baseline.min_cost(&query)?
        };
        for &eps_tilde in eps_tildes {
            let query = CostQuery::new(l_tot, metric, ErrorScaling::dominant(dominant, eps_tilde));
            let qpyc = qpyc_min_cost(&query)?;
            rows.push(RatioRow {
                l_tot_km: l_tot,
                eps_tilde,
                dominant_error: dominant,
                ratio: qpc.cost / qpyc.cost,
                opt_d: qpyc.d,
                opt_k: qpyc.k,
                opt_l0_km: qpyc.l0_km,
                baseline_label: baseline.label().to_string(),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerators() {
        assert_eq!(qpyc_numerator(1, 3, CostMetric::Qubits), 12.0);
        assert_eq!(qpyc_numerator(1, 3, CostMetric::Modes), 9.0);
        assert_eq!(qpyc_numerator(3, 7, CostMetric::Qubits), 2.0 * 7.0 * 3.0);
    }

    fn small_query(l_tot: f64, metric: CostMetric) -> CostQuery {
        let mut q = CostQuery::new(l_tot, metric, ErrorScaling::zero());
        q.grid.k_max = 12;
        q.grid.qpc_max_side = 20;
        q.grid.qpc_max_qubits = 120;
        q
    }

    #[test]
    fn optimum_bounds_every_grid_point() {
        let query = small_query(1000.0, CostMetric::Qubits);
        let best = qpyc_min_cost(&query).unwrap();
        for k in 1..=query.grid.k_max {
            let code = QpycCode::new(k).unwrap();
            for &l0 in &query.grid.l0_values_km {
                let p = loss_per_segment(l0, query.l_att_km);
                let channel =
                    ChannelParams::new(p, 0.0, 0.0, 0.0, code.modulus()).unwrap();
                let config =
                    RepeaterConfig::new(1000.0, l0, 20.0, 1e-6, k, channel).unwrap();
                let rate = key_rate(&config).unwrap();
                if rate.r_per_s > 0.0 {
                    let cost = qpyc_numerator(k, code.d(), CostMetric::Qubits)
                        / (l0 * rate.r_per_s);
                    assert!(best.cost <= cost + 1e-12, "k={k} l0={l0}");
                }
            }
        }
    }

    #[test]
    fn refinement_changes_little() {
        let coarse = small_query(1000.0, CostMetric::Qubits);
        let refined = CostQuery {
            grid: coarse.grid.refined(),
            ..coarse.clone()
        };
        let c = qpyc_min_cost(&coarse).unwrap();
        let r = qpyc_min_cost(&refined).unwrap();
        assert!(r.cost <= c.cost + 1e-12);
        assert!(c.cost <= r.cost * 1.01, "coarse {} refined {}", c.cost, r.cost);
    }

    #[test]
    fn qpc_metrics_coincide() {
        for metric in [CostMetric::Qubits, CostMetric::Modes] {
            let query = small_query(1000.0, metric);
            let result = LossOnlyQpc.min_cost(&query).unwrap();
            let other = LossOnlyQpc
                .min_cost(&small_query(
                    1000.0,
                    match metric {
                        CostMetric::Qubits => CostMetric::Modes,
                        CostMetric::Modes => CostMetric::Qubits,
                    },
                ))
                .unwrap();
            assert_eq!(result.cost, other.cost);
        }
    }

    #[test]
    fn infeasible_when_errors_saturate() {
        let mut query = small_query(1000.0, CostMetric::Qubits);
        query.scaling = ErrorScaling {
            eps_g_tilde: 1.0,
            eps_d_tilde: 1.0,
            eps_p_tilde: 1.0,
        };
        assert_eq!(qpyc_min_cost(&query), Err(CostError::Infeasible));
    }

    #[test]
    fn ratio_decreases_with_gate_error() {
        let rows = compare_ratio(
            &[2000.0],
            &[0.0, 1e-10, 1e-9],
            DominantError::Gate,
            CostMetric::Qubits,
            &LossOnlyQpc,
        )
        .unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[0].ratio >= rows[1].ratio && rows[1].ratio >= rows[2].ratio);
        assert_eq!(rows[0].baseline_label, "loss-only");
    }

    #[test]
    fn gate_scaling_forces_smaller_dimension() {
        let pick = |dominant| {
            let query = CostQuery::new(
                5000.0,
                CostMetric::Qubits,
                ErrorScaling::dominant(dominant, 1e-9),
            );
            qpyc_min_cost(&query).unwrap().d
        };
        assert!(pick(DominantError::Gate) <= pick(DominantError::Dephasing));
    }
}
