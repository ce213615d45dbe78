//! Implementations of the subcommands: parameter resolution (flags over
//! config-file values over defaults), computation via the library, and
//! manifest-headed CSV/JSON emission.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use num_complex::Complex64;
use rand::Rng;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use quditec::codes::{
    bits_per_mode, bits_per_photon, qpyc_failure_prob, qpyc_success_prob, three_qutrit_code,
    CodeSpec, QpycCode,
};
use quditec::costopt::{
    compare_ratio, qpyc_min_cost, CostError, CostMetric, CostQuery, DominantError, ErrorScaling,
    LossOnlyQpc, QpcBaselineModel,
};
use quditec::mc::substream;
use quditec::noise::ChannelParams;
use quditec::percolation::{mc_success_prob, Geometry};
use quditec::repeater::{end_to_end, key_rate, RepeaterConfig, RepeaterError};
use quditec::simulator::{
    recover_four_qubit, recover_three_qutrit, tec_cycle, QuditState, SimError,
};

use crate::manifest::{fmt_f64, Output, RunManifest};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Infeasible(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Infeasible(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(format!("i/o error: {e}"))
    }
}

impl From<RepeaterError> for CliError {
    fn from(e: RepeaterError) -> Self {
        match e {
            RepeaterError::Infeasible(_) => CliError::Infeasible(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<CostError> for CliError {
    fn from(e: CostError) -> Self {
        match e {
            CostError::Infeasible => CliError::Infeasible(e.to_string()),
            CostError::Repeater(inner) => inner.into(),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::DimensionCap { .. } => CliError::Infeasible(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<quditec::codes::CodeError> for CliError {
    fn from(e: quditec::codes::CodeError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<quditec::noise::NoiseError> for CliError {
    fn from(e: quditec::noise::NoiseError) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub type CmdResult = Result<(), CliError>;

fn load_config<T: DeserializeOwned>(path: &PathBuf) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|ext| ext == "toml") {
        toml::from_str(&text).map_err(|e| format!("{e}"))
    } else {
        serde_json::from_str(&text).map_err(|e| format!("{e}"))
    };
    parsed.map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
}

/// Fills unset (None) fields of `flags` from an optional config file, then
/// hands back the merged struct for default resolution.
fn merge_config<T: DeserializeOwned + MergeFrom>(
    mut flags: T,
    config: &Option<PathBuf>,
) -> Result<T, CliError> {
    if let Some(path) = config {
        let from_file: T = load_config(path)?;
        flags.merge_from(from_file);
    }
    Ok(flags)
}

trait MergeFrom {
    /// Takes values from `other` for every field the command line left unset.
    fn merge_from(&mut self, other: Self);
}

macro_rules! merge_fields {
    ($ty:ty { $($field:ident),* $(,)? }) => {
        impl MergeFrom for $ty {
            fn merge_from(&mut self, other: Self) {
                $( if self.$field.is_none() { self.$field = other.$field; } )*
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryArg {
    Toric,
    Planar,
}

impl From<GeometryArg> for Geometry {
    fn from(g: GeometryArg) -> Geometry {
        match g {
            GeometryArg::Toric => Geometry::Toric,
            GeometryArg::Planar => Geometry::Planar,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryChoice {
    Toric,
    Planar,
    Both,
}

impl GeometryChoice {
    fn expand(self) -> Vec<Geometry> {
        match self {
            GeometryChoice::Toric => vec![Geometry::Toric],
            GeometryChoice::Planar => vec![Geometry::Planar],
            GeometryChoice::Both => vec![Geometry::Toric, Geometry::Planar],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricArg {
    Qubits,
    Modes,
}

impl From<MetricArg> for CostMetric {
    fn from(m: MetricArg) -> CostMetric {
        match m {
            MetricArg::Qubits => CostMetric::Qubits,
            MetricArg::Modes => CostMetric::Modes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DominantArg {
    Gate,
    Depolarization,
    Dephasing,
}

impl From<DominantArg> for DominantError {
    fn from(d: DominantArg) -> DominantError {
        match d {
            DominantArg::Gate => DominantError::Gate,
            DominantArg::Depolarization => DominantError::Depolarization,
            DominantArg::Dephasing => DominantError::Dephasing,
        }
    }
}

/// Code selector: `qpyc:k`, `qpc:n,m`, `3qutrit`, or `4qubit`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CodeArg {
    Qpyc(usize),
    Qpc(usize, usize),
    ThreeQutrit,
    FourQubit,
}

impl std::str::FromStr for CodeArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "3qutrit" => return Ok(CodeArg::ThreeQutrit),
            "4qubit" => return Ok(CodeArg::FourQubit),
            _ => {}
        }
        if let Some(k) = s.strip_prefix("qpyc:") {
            let k: usize = k.parse().map_err(|_| format!("bad qpyc size in {s:?}"))?;
            return Ok(CodeArg::Qpyc(k));
        }
        if let Some(nm) = s.strip_prefix("qpc:") {
            let (n, m) = nm
                .split_once(',')
                .ok_or_else(|| format!("expected qpc:n,m in {s:?}"))?;
            let n = n.parse().map_err(|_| format!("bad block count in {s:?}"))?;
            let m = m.parse().map_err(|_| format!("bad block size in {s:?}"))?;
            return Ok(CodeArg::Qpc(n, m));
        }
        Err(format!(
            "unknown code {s:?}; expected qpyc:k, qpc:n,m, 3qutrit or 4qubit"
        ))
    }
}

// ---------------------------------------------------------------------------
// table1
// ---------------------------------------------------------------------------

#[derive(Debug, Args, Serialize, Deserialize, Default)]
pub struct Table1Cmd {
    /// Monte Carlo runs per surface-code point.
    #[arg(long)]
    pub runs: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Lattice geometry for the surface-code column.
    #[arg(long, value_enum)]
    pub geometry: Option<GeometryChoice>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// TOML/JSON file mirroring these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

merge_fields!(Table1Cmd { runs, seed, geometry });

pub fn cmd_table1(args: Table1Cmd) -> CmdResult {
    let config_path = args.config.clone();
    let args = merge_config(args, &config_path)?;
    let runs = args.runs.unwrap_or(1_000_000);
    let seed = args.seed.unwrap_or(0);
    let geometries = args.geometry.unwrap_or(GeometryChoice::Both).expand();

    let manifest = RunManifest::new("table1", &args, seed);
    let pairs = [(5usize, 6usize), (7, 9), (9, 15), (11, 21)];
    let mut rows = Vec::new();
    for geometry in geometries {
        for (dist, k) in pairs {
            let qpyc = qpyc_failure_prob(k, 0.2)?;
            let surface = mc_success_prob(dist, 0.2, runs, seed, geometry);
            rows.push(vec![
                dist.to_string(),
                k.to_string(),
                fmt_f64(qpyc),
                fmt_f64(1.0 - surface.estimate),
                fmt_f64(surface.std_error),
                geometry.to_string(),
                runs.to_string(),
                seed.to_string(),
            ]);
        }
    }
    Output::create(&args.out)?.csv(
        &manifest,
        &[
            "distance",
            "k",
            "qpyc_failure_prob",
            "surface_failure_prob",
            "surface_std_error",
            "geometry",
            "runs",
            "seed",
        ],
        &rows,
    )?;
    Ok(())
}

// ---------------------------------------------------------------------------
// fig1
// ---------------------------------------------------------------------------

#[derive(Debug, Args, Serialize, Deserialize, Default)]
pub struct Fig1Cmd {
    /// Number of loss-rate grid points on [0, 1].
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

merge_fields!(Fig1Cmd { steps });

pub fn cmd_fig1(args: Fig1Cmd) -> CmdResult {
    let config_path = args.config.clone();
    let args = merge_config(args, &config_path)?;
    let steps = args.steps.unwrap_or(200);
    let manifest = RunManifest::new("fig1", &args, 0);
    let codes = [
        ("3qutrit", CodeSpec::Qpyc(three_qutrit_code())),
        ("4qubit", CodeSpec::FourQubit),
    ];
    let mut rows = Vec::new();
    for i in 0..=steps {
        let p = i as f64 / steps as f64;
        for (name, code) in &codes {
            rows.push(vec![
                name.to_string(),
                fmt_f64(p),
                fmt_f64(bits_per_photon(code, p)?),
                fmt_f64(bits_per_mode(code, p)?),
            ]);
        }
    }
    Output::create(&args.out)?.csv(
        &manifest,
        &["code", "loss_prob", "bits_per_photon", "bits_per_mode"],
        &rows,
    )?;
    Ok(())
}

// ---------------------------------------------------------------------------
// fig3
// ---------------------------------------------------------------------------

#[derive(Debug, Args, Serialize, Deserialize, Default)]
pub struct Fig3Cmd {
    /// QPyC sizes for panel (a).
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,
    /// Surface-code distances for panel (b).
    #[arg(long, value_delimiter = ',')]
    pub dists: Option<Vec<usize>>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub runs: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub geometry: Option<GeometryArg>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

merge_fields!(Fig3Cmd { ks, dists, steps, runs, seed, geometry });

pub fn cmd_fig3(args: Fig3Cmd) -> CmdResult {
    let config_path = args.config.clone();
    let args = merge_config(args, &config_path)?;
    let ks = args.ks.clone().unwrap_or_else(|| vec![1, 3, 6, 9, 15, 21]);
    let dists = args.dists.clone().unwrap_or_else(|| vec![3, 7, 11]);
    let steps = args.steps.unwrap_or(50);
    let runs = args.runs.unwrap_or(20_000);
    let seed = args.seed.unwrap_or(0);
    let geometry: Geometry = args.geometry.unwrap_or(GeometryArg::Planar).into();

    let manifest = RunManifest::new("fig3", &args, seed);
    let mut rows = Vec::new();
    for i in 0..=steps {
        let p = i as f64 / steps as f64;
        for &k in &ks {
            rows.push(vec![
                "qpyc".to_string(),
                k.to_string(),
                fmt_f64(p),
                fmt_f64(qpyc_success_prob(k, p)?),
                "0".to_string(),
                "analytic".to_string(),
            ]);
        }
        for &dist in &dists {
            let r = mc_success_prob(dist, p, runs, seed, geometry);
            rows.push(vec![
                "surface".to_string(),
                dist.to_string(),
                fmt_f64(p),
                fmt_f64(r.estimate),
                fmt_f64(r.std_error),
                geometry.to_string(),
            ]);
        }
    }
    Output::create(&args.out)?.csv(
        &manifest,
        &["family", "size", "loss_prob", "success_prob", "std_error", "method"],
        &rows,
    )?;
    Ok(())
}

// ---------------------------------------------------------------------------
// fig4
// ---------------------------------------------------------------------------

#[derive(Debug, Args, Serialize, Deserialize, Default)]
pub struct Fig4Cmd {
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,
    /// Operation error rates (applied to all three error types).
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    #[arg(long, alias = "L0")]
    pub l0: Option<f64>,
    #[arg(long, alias = "Latt")]
    pub latt: Option<f64>,
    #[arg(long)]
    pub t0: Option<f64>,
    /// Number of log-spaced total distances between 20 km and 20,000 km.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

merge_fields!(Fig4Cmd { ks, eps, l0, latt, t0, points });

pub fn cmd_fig4(args: Fig4Cmd) -> CmdResult {
    let config_path = args.config.clone();
    let args = merge_config(args, &config_path)?;
    let ks = args.ks.clone().unwrap_or_else(|| vec![1, 2, 3]);
    let eps = args
        .eps
        .clone()
        .unwrap_or_else(|| vec![0.0, 1e-6, 1e-5, 1e-4]);
    let l0 = args.l0.unwrap_or(1.0);
    let latt = args.latt.unwrap_or(20.0);
    let t0 = args.t0.unwrap_or(1e-6);
    let points = args.points.unwrap_or(80);

    let grid: Vec<f64> = (0..points)
        .map(|i| {
            let t = i as f64 / (points - 1) as f64;
            (20f64.ln() + t * (20_000f64.ln() - 20f64.ln())).exp()
        })
        .map(|l| (l / l0).round() * l0) // keep the spacing exact
        .collect();

    let manifest = RunManifest::new("fig4", &args, 0);
    let rows = quditec::repeater::sweep_rate_vs_distance(&ks, &eps, l0, latt, t0, &grid)?
        .into_iter()
        .map(|row| {
            vec![
                row.k.to_string(),
                row.d.to_string(),
                fmt_f64(row.eps),
                fmt_f64(row.l_tot_km),
                fmt_f64(row.r_t0),
                fmt_f64(row.r_per_s),
                fmt_f64(row.q),
                fmt_f64(row.p_chain),
                fmt_f64(row.r_t0_leading_order),
            ]
        })
        .collect::<Vec<_>>();
    Output::create(&args.out)?.csv(
        &manifest,
        &[
            "k",
            "d",
            "eps",
            "l_tot_km",
            "r_t0",
            "r_per_s",
            "q",
            "p_chain",
            "r_t0_leading_order",
        ],
        &rows,
    )?;
    Ok(())
}

// ---------------------------------------------------------------------------
// costs (improvement-factor contours)
// ---------------------------------------------------------------------------

#[derive(Debug, Args, Serialize, Deserialize, Default)]
pub struct CostsCmd {
    #[arg(long, alias = "Ltot", value_delimiter = ',')]
    pub ltot: Option<Vec<f64>>,
    /// Base error rates (scaled by d^4 / d^2 / d per the dominant type).
    #[arg(long, value_delimiter = ',')]
    pub eps_tilde: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub dominant: Option<DominantArg>,
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

merge_fields!(CostsCmd { ltot, eps_tilde, dominant, metric });

pub fn cmd_costs(args: CostsCmd) -> CmdResult {
    let config_path = args.config.clone();
    let args = merge_config(args, &config_path)?;
    let ltot = args
        .ltot
        .clone()
        .unwrap_or_else(|| vec![1000.0, 2000.0, 5000.0, 10_000.0]);
    let eps_tilde = args.eps_tilde.clone().unwrap_or_else(|| vec![0.0]);
    let dominant: DominantError = args.dominant.unwrap_or(DominantArg::Gate).into();
    let metric: CostMetric = args.metric.unwrap_or(MetricArg::Qubits).into();

    let manifest = RunManifest::new("costs", &args, 0);
    let rows = compare_ratio(&ltot, &eps_tilde, dominant, metric, &LossOnlyQpc)?
        .into_iter()
        .map(|row| {
            vec![
                fmt_f64(row.l_tot_km),
                fmt_f64(row.eps_tilde),
                format!("{:?}", row.dominant_error).to_lowercase(),
                fmt_f64(row.ratio),
                row.opt_d.to_string(),
                row.opt_k.to_string(),
                fmt_f64(row.opt_l0_km),
                row.baseline_label,
            ]
        })
        .collect::<Vec<_>>();
    Output::create(&args.out)?.csv(
        &manifest,
        &[
            "l_tot_km",
            "eps_tilde",
            "dominant_error",
            "ratio_qpc_over_qpyc",
            "opt_d",
            "opt_k",
            "opt_l0_km",
            "baseline",
        ],
        &rows,
    )?;
    Ok(())
}

// ---------------------------------------------------------------------------
// optimize (single cost query, both families)
// ---------------------------------------------------------------------------

#[derive(Debug, Args, Serialize, Deserialize, Default)]
pub struct OptimizeCmd {
    #[arg(long, alias = "Ltot")]
    pub ltot: Option<f64>,
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
    #[arg(long)]
    pub eps_g_tilde: Option<f64>,
    #[arg(long)]
    pub eps_d_tilde: Option<f64>,
    #[arg(long)]
    pub eps_p_tilde: Option<f64>,
    #[arg(long)]
    pub t0: Option<f64>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

merge_fields!(OptimizeCmd { ltot, metric, eps_g_tilde, eps_d_tilde, eps_p_tilde, t0 });

pub fn cmd_optimize(args: OptimizeCmd) -> CmdResult {
    let config_path = args.config.clone();
    let args = merge_config(args, &config_path)?;
    let metric: CostMetric = args.metric.unwrap_or(MetricArg::Qubits).into();
    let scaling = ErrorScaling {
        eps_g_tilde: args.eps_g_tilde.unwrap_or(0.0),
        eps_d_tilde: args.eps_d_tilde.unwrap_or(0.0),
        eps_p_tilde: args.eps_p_tilde.unwrap_or(0.0),
    };
    let mut query = CostQuery::new(args.ltot.unwrap_or(10_000.0), metric, scaling);
    query.t0_s = args.t0.unwrap_or(1e-6);

    let manifest = RunManifest::new("optimize", &args, 0);
    let qpyc = qpyc_min_cost(&query)?;
    let qpc = LossOnlyQpc.min_cost(&query)?;
    let rows = vec![
        vec![
            "qpyc".to_string(),
            format!("k={}", qpyc.k),
            qpyc.d.to_string(),
            fmt_f64(qpyc.l0_km),
            fmt_f64(qpyc.cost),
            metric.units().to_string(),
            fmt_f64(qpyc.r_per_s),
            "dimension-scaled errors".to_string(),
        ],
        vec![
            "qpc".to_string(),
            format!("n={},m={}", qpc.n_blocks, qpc.m_per_block),
            "2".to_string(),
            fmt_f64(qpc.l0_km),
            fmt_f64(qpc.cost),
            metric.units().to_string(),
            fmt_f64(qpc.r_per_s),
            "baseline: loss-only".to_string(),
        ],
    ];
    Output::create(&args.out)?.csv(
        &manifest,
        &[
            "family",
            "best_code",
            "d",
            "best_l0_km",
            "cost",
            "units",
            "rate_per_s",
            "error_model",
        ],
        &rows,
    )?;
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Debug, Args, Serialize, Deserialize, Default)]
pub struct SimulateCmd {
    /// Code to simulate: 3qutrit, 4qubit, or qpyc:k (TEC mode).
    #[arg(long)]
    pub code: Option<CodeArg>,
    /// Erasure positions (default: every position in turn for recovery; the
    /// given set for one TEC cycle).
    #[arg(long, value_delimiter = ',')]
    pub erase: Option<Vec<usize>>,
    /// Weyl errors "position:x_exp:z_exp" applied before the TEC cycle.
    #[arg(long, value_delimiter = ',')]
    pub weyl: Option<Vec<String>>,
    /// Random logical states to test.
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

merge_fields!(SimulateCmd { code, erase, weyl, trials, seed });

#[derive(Debug, Serialize)]
struct RecoveryReport {
    code: String,
    trials: u64,
    positions: Vec<usize>,
    branches_tested: usize,
    min_fidelity: f64,
    fidelity_ge_one_minus_1e9: bool,
}

#[derive(Debug, Serialize)]
struct TecReport {
    code: String,
    k: usize,
    d: u64,
    trials: u64,
    erased: Vec<usize>,
    weyl_errors: Vec<(usize, u64, u64)>,
    statuses: std::collections::BTreeMap<String, u64>,
    min_fidelity: Option<f64>,
}

/// Parses a Weyl-error spec "position:x_exp:z_exp".
fn parse_weyl(spec: &str) -> Result<(usize, u64, u64), CliError> {
    let bad = || CliError::Usage(format!("bad --weyl entry {spec:?}; want pos:x:z"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [p, x, z] = parts.as_slice() else {
        return Err(bad());
    };
    Ok((
        p.parse().map_err(|_| bad())?,
        x.parse().map_err(|_| bad())?,
        z.parse().map_err(|_| bad())?,
    ))
}

fn random_logical(dim: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= norm);
    v
}

pub fn cmd_simulate(args: SimulateCmd) -> CmdResult {
    let config_path = args.config.clone();
    let args = merge_config(args, &config_path)?;
    let code = args.code.ok_or_else(|| {
        CliError::Usage("--code is required (3qutrit, 4qubit or qpyc:k)".to_string())
    })?;
    let trials = args.trials.unwrap_or(20);
    let seed = args.seed.unwrap_or(0);
    let manifest = RunManifest::new("simulate", &args, seed);
    let mut out = Output::create(&args.out)?;

    match code {
        CodeArg::ThreeQutrit | CodeArg::FourQubit => {
            let n = if code == CodeArg::ThreeQutrit { 3 } else { 4 };
            let positions = args
                .erase
                .clone()
                .unwrap_or_else(|| (0..n).collect::<Vec<_>>());
            for &p in &positions {
                if p >= n {
                    return Err(CliError::Usage(format!(
                        "erase position {p} outside code of {n} carriers"
                    )));
                }
            }
            let mut min_fidelity = f64::INFINITY;
            let mut branches_tested = 0;
            for trial in 0..trials {
                let mut rng = substream(seed, trial);
                match code {
                    CodeArg::ThreeQutrit => {
                        let logical = random_logical(3, &mut rng);
                        let encoded =
                            QuditState::encode_qpyc(&three_qutrit_code(), &logical)?;
                        for &erased in &positions {
                            for (_, mut branch) in encoded.erase_branches(erased)? {
                                let carrier = recover_three_qutrit(&mut branch, erased)?;
                                min_fidelity = min_fidelity
                                    .min(branch.fidelity_on(&[carrier], &logical)?);
                                branches_tested += 1;
                            }
                        }
                    }
                    CodeArg::FourQubit => {
                        let logical = random_logical(4, &mut rng);
                        let encoded = QuditState::encode_four_qubit(&logical)?;
                        for &erased in &positions {
                            for (_, mut branch) in encoded.erase_branches(erased)? {
                                let (_, carriers) =
                                    recover_four_qubit(&mut branch, erased, &mut rng)?;
                                min_fidelity = min_fidelity
                                    .min(branch.fidelity_on(&carriers, &logical)?);
                                branches_tested += 1;
                            }
                        }
                    }
                    _ => unreachable!(),
                }
            }
            let report = RecoveryReport {
                code: format!("{code:?}"),
                trials,
                positions,
                branches_tested,
                min_fidelity,
                fidelity_ge_one_minus_1e9: min_fidelity >= 1.0 - 1e-9,
            };
            out.json(&manifest, &report)?;
        }
        CodeArg::Qpyc(k) => {
            let qpyc = QpycCode::new(k)?;
            let erased = args.erase.clone().unwrap_or_default();
            let weyl: Vec<(usize, u64, u64)> = args
                .weyl
                .clone()
                .unwrap_or_default()
                .iter()
                .map(|spec| parse_weyl(spec))
                .collect::<Result<_, _>>()?;
            let mut statuses = std::collections::BTreeMap::new();
            let mut min_fidelity: Option<f64> = None;
            for trial in 0..trials {
                let mut rng = substream(seed, trial);
                let logical = random_logical(qpyc.d() as usize, &mut rng);
                let mut state = QuditState::encode_qpyc(&qpyc, &logical)?;
                for &(pos, x, z) in &weyl {
                    state.apply_weyl(pos, x, z)?;
                }
                for &pos in &erased {
                    state.erase(pos, &mut rng)?;
                }
                let outcome = tec_cycle(&state, &qpyc, Some(&logical), &mut rng)?;
                *statuses
                    .entry(format!("{:?}", outcome.status))
                    .or_insert(0) += 1;
                if let Some(f) = outcome.fidelity {
                    min_fidelity = Some(min_fidelity.map_or(f, |m: f64| m.min(f)));
                }
            }
            let report = TecReport {
                code: format!("qpyc:{k}"),
                k,
                d: qpyc.d(),
                trials,
                erased,
                weyl_errors: weyl,
                statuses,
                min_fidelity,
            };
            out.json(&manifest, &report)?;
        }
        CodeArg::Qpc(..) => {
            return Err(CliError::Usage(
                "qpc codes have no state-vector simulation; use `percolate`-style \
                 analytics via `keyrate` or `costs`"
                    .to_string(),
            ));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// percolate
// ---------------------------------------------------------------------------

#[derive(Debug, Args, Serialize, Deserialize, Default)]
pub struct PercolateCmd {
    #[arg(long, value_delimiter = ',')]
    pub dist: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub pl: Option<Vec<f64>>,
    #[arg(long)]
    pub runs: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub geometry: Option<GeometryArg>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

merge_fields!(PercolateCmd { dist, pl, runs, seed, geometry });

pub fn cmd_percolate(args: PercolateCmd) -> CmdResult {
    let config_path = args.config.clone();
    let args = merge_config(args, &config_path)?;
    let dists = args.dist.clone().unwrap_or_else(|| vec![11]);
    let pls = args.pl.clone().unwrap_or_else(|| vec![0.5]);
    let runs = args.runs.unwrap_or(100_000);
    let seed = args.seed.unwrap_or(0);
    let geometry: Geometry = args.geometry.unwrap_or(GeometryArg::Toric).into();
    for &p in &pls {
        if !(0.0..=1.0).contains(&p) {
            return Err(CliError::Usage(format!("loss probability {p} outside [0,1]")));
        }
    }

    let manifest = RunManifest::new("percolate", &args, seed);
    let mut rows = Vec::new();
    for &dist in &dists {
        for &p in &pls {
            let r = mc_success_prob(dist, p, runs, seed, geometry);
            rows.push(vec![
                dist.to_string(),
                fmt_f64(p),
                runs.to_string(),
                fmt_f64(r.estimate),
                fmt_f64(r.std_error),
                geometry.to_string(),
                seed.to_string(),
            ]);
        }
    }
    Output::create(&args.out)?.csv(
        &manifest,
        &["distance", "loss_prob", "runs", "success_prob", "std_error", "geometry", "seed"],
        &rows,
    )?;
    Ok(())
}

// ---------------------------------------------------------------------------
// keyrate
// ---------------------------------------------------------------------------

#[derive(Debug, Args, Serialize, Deserialize, Default)]
pub struct KeyrateCmd {
    /// QPyC size parameter k (the code is [[2k+1, 1, k+1]]_d).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, alias = "Ltot", value_delimiter = ',')]
    pub ltot: Option<Vec<f64>>,
    #[arg(long, alias = "L0")]
    pub l0: Option<f64>,
    #[arg(long, alias = "Latt")]
    pub latt: Option<f64>,
    #[arg(long)]
    pub t0: Option<f64>,
    #[arg(long)]
    pub eps_g: Option<f64>,
    #[arg(long)]
    pub eps_d: Option<f64>,
    #[arg(long)]
    pub eps_p: Option<f64>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

merge_fields!(KeyrateCmd { k, ltot, l0, latt, t0, eps_g, eps_d, eps_p });

pub fn cmd_keyrate(args: KeyrateCmd) -> CmdResult {
    let config_path = args.config.clone();
    let args = merge_config(args, &config_path)?;
    let k = args.k.unwrap_or(1);
    let ltots = args.ltot.clone().unwrap_or_else(|| vec![700.0]);
    let l0 = args.l0.unwrap_or(1.0);
    let latt = args.latt.unwrap_or(20.0);
    let t0 = args.t0.unwrap_or(1e-6);
    let code = QpycCode::new(k)?;

    let manifest = RunManifest::new("keyrate", &args, 0);
    let mut rows = Vec::new();
    for &ltot in &ltots {
        let p = quditec::repeater::loss_per_segment(l0, latt);
        let channel = ChannelParams::new(
            p,
            args.eps_d.unwrap_or(0.0),
            args.eps_p.unwrap_or(0.0),
            args.eps_g.unwrap_or(0.0),
            code.modulus(),
        )?;
        let config = RepeaterConfig::new(ltot, l0, latt, t0, k, channel)?;
        let (hops, exact) = config.segments();
        if !exact {
            eprintln!(
                "warning: L_tot = {ltot} km is not a multiple of L_0 = {l0} km; \
                 using r = {hops} stations"
            );
        }
        let chain = end_to_end(&config)?;
        let rate = key_rate(&config)?;
        rows.push(vec![
            k.to_string(),
            code.d().to_string(),
            fmt_f64(ltot),
            fmt_f64(l0),
            hops.to_string(),
            fmt_f64(rate.r_per_s),
            fmt_f64(rate.r_t0),
            fmt_f64(chain.q),
            fmt_f64(chain.q_x),
            fmt_f64(chain.q_z),
            fmt_f64(chain.p_chain),
        ]);
    }
    Output::create(&args.out)?.csv(
        &manifest,
        &[
            "k",
            "d",
            "l_tot_km",
            "l0_km",
            "stations",
            "rate_per_s",
            "rate_t0",
            "q",
            "q_x",
            "q_z",
            "p_chain",
        ],
        &rows,
    )?;
    Ok(())
}
