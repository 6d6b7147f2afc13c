//! Experiment configuration and dispatch shared by the command line and
//! the acceptance suite.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{design_nonrobust, design_zfbf, tdma_power};
use crate::channel::db_to_linear;
use crate::error::{Error, Result};
use crate::evaluator::{evaluate, sweep, EvalReport, SweepPoint, DEFAULT_SAMPLES};
use crate::network::{BeamDesign, Network};
use crate::robust_avg::{design_noncritical, AvgDesignSpec, PenaltyConfig};
use crate::robust_outage::{design_critical, OutageSpec};
use crate::scenario::{build_network, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Avg,
    Outage,
    Nonrobust,
    Zfbf,
    Tdma,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Avg,
        Algorithm::Outage,
        Algorithm::Nonrobust,
        Algorithm::Zfbf,
        Algorithm::Tdma,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Avg => "avg",
            Algorithm::Outage => "outage",
            Algorithm::Nonrobust => "nonrobust",
            Algorithm::Zfbf => "zfbf",
            Algorithm::Tdma => "tdma",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown algorithm '{s}' (avg|outage|nonrobust|zfbf|tdma)"
                ))
            })
    }
}

/// One value for every user, or one per region and user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerUser {
    Uniform(f64),
    Each(Vec<Vec<f64>>),
}

impl PerUser {
    fn expand(&self, net: &Network, what: &str) -> Result<Vec<Vec<f64>>> {
        match self {
            PerUser::Uniform(v) => Ok(net.regions.iter().map(|r| vec![*v; r.len()]).collect()),
            PerUser::Each(v) => {
                if v.len() != net.regions.len()
                    || v.iter().zip(&net.regions).any(|(a, r)| a.len() != r.len())
                {
                    return Err(Error::Config(format!(
                        "{what} must list one value per region and user"
                    )));
                }
                Ok(v.clone())
            }
        }
    }

    fn values(&self) -> Vec<f64> {
        match self {
            PerUser::Uniform(v) => vec![*v],
            PerUser::Each(v) => v.iter().flatten().copied().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignBlock {
    pub algorithm: Algorithm,
    /// Minimum SINR in dB.
    pub gamma_db: PerUser,
    /// Outage threshold, used by the outage design.
    pub outage: PerUser,
    pub penalty: PenaltyConfig,
}

impl Default for DesignBlock {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Avg,
            gamma_db: PerUser::Uniform(3.0),
            outage: PerUser::Uniform(0.05),
            penalty: PenaltyConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalBlock {
    pub samples: usize,
    pub seed: u64,
}

impl Default for EvalBlock {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub design: DesignBlock,
    pub eval: EvalBlock,
    pub output: Option<String>,
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            Error::Config(format!(
                "config line {} column {}: {e}",
                e.line(),
                e.column()
            ))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.design.penalty.validate()?;
        if self.design.gamma_db.values().iter().any(|g| !g.is_finite()) {
            return Err(Error::Config("design.gamma_db must be finite".into()));
        }
        if self.design.algorithm == Algorithm::Outage {
            if let Some(p) = self
                .design
                .outage
                .values()
                .into_iter()
                .find(|p| !(*p > 0.0 && *p < 1.0))
            {
                return Err(Error::Config(format!(
                    "design.outage must lie in the open interval (0, 1), got {p}"
                )));
            }
        }
        if self.eval.samples == 0 {
            return Err(Error::Config("eval.samples must be at least 1".into()));
        }
        Ok(())
    }
}

/// Network and per-user targets of one configuration.
#[derive(Debug, Clone)]
pub struct Instance {
    pub network: Network,
    pub gamma: Vec<Vec<f64>>,
    pub outage: Vec<Vec<f64>>,
}

impl Instance {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let network = build_network(&cfg.scenario)?;
        let gamma = cfg
            .design
            .gamma_db
            .expand(&network, "design.gamma_db")?
            .into_iter()
            .map(|r| r.into_iter().map(db_to_linear).collect())
            .collect();
        let outage = cfg.design.outage.expand(&network, "design.outage")?;
        Ok(Self {
            network,
            gamma,
            outage,
        })
    }

    pub fn avg_spec(&self) -> Result<AvgDesignSpec> {
        AvgDesignSpec::new(self.network.clone(), self.gamma.clone())
    }

    pub fn outage_spec(&self) -> Result<OutageSpec> {
        OutageSpec::new(
            self.network.clone(),
            self.gamma.clone(),
            self.outage.clone(),
        )
    }
}

/// Design plus evaluation of one algorithm on one instance.
#[derive(Debug, Clone)]
pub struct DesignRun {
    pub algorithm: Algorithm,
    /// Absent for TDMA, which only reports a power.
    pub design: Option<BeamDesign>,
    pub total_power: f64,
    pub iterations: usize,
    pub max_rank_gap: f64,
    pub eval: Option<EvalReport>,
}

pub fn design_only(
    inst: &Instance,
    algorithm: Algorithm,
    penalty: &PenaltyConfig,
) -> Result<DesignRun> {
    let design = match algorithm {
        Algorithm::Avg => design_noncritical(&inst.avg_spec()?, penalty)?,
        Algorithm::Outage => design_critical(&inst.outage_spec()?, penalty)?,
        Algorithm::Nonrobust => design_nonrobust(&inst.avg_spec()?, penalty)?,
        Algorithm::Zfbf => design_zfbf(&inst.avg_spec()?)?,
        Algorithm::Tdma => {
            return Ok(DesignRun {
                algorithm,
                design: None,
                total_power: tdma_power(&inst.avg_spec()?),
                iterations: 0,
                max_rank_gap: 0.0,
                eval: None,
            })
        }
    };
    Ok(DesignRun {
        algorithm,
        total_power: design.total_power(),
        iterations: design.meta.iterations,
        max_rank_gap: design.meta.max_rank_gap,
        design: Some(design),
        eval: None,
    })
}

pub fn run_algorithm(
    inst: &Instance,
    algorithm: Algorithm,
    cfg: &ExperimentConfig,
) -> Result<DesignRun> {
    let mut run = design_only(inst, algorithm, &cfg.design.penalty)?;
    if let Some(d) = &run.design {
        run.eval = Some(evaluate(
            d,
            &inst.network,
            &inst.gamma,
            cfg.eval.samples,
            cfg.eval.seed,
        )?);
    }
    Ok(run)
}

pub fn run_design(cfg: &ExperimentConfig) -> Result<DesignRun> {
    run_algorithm(&Instance::from_config(cfg)?, cfg.design.algorithm, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    /// Uniform minimum SINR in dB.
    Gamma,
    /// Phase error standard deviation in degrees.
    Sigma,
    Eta,
    /// Uniform outage threshold.
    P,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma" => Ok(SweepAxis::Gamma),
            "sigma" => Ok(SweepAxis::Sigma),
            "eta" => Ok(SweepAxis::Eta),
            "p" => Ok(SweepAxis::P),
            _ => Err(Error::Config(format!(
                "unknown sweep axis '{s}' (gamma|sigma|eta|p)"
            ))),
        }
    }
}

/// Copy of `cfg` with the axis set to `value`.
pub fn with_axis(cfg: &ExperimentConfig, axis: SweepAxis, value: f64) -> ExperimentConfig {
    let mut c = cfg.clone();
    match axis {
        SweepAxis::Gamma => c.design.gamma_db = PerUser::Uniform(value),
        SweepAxis::Sigma => c.scenario.phase_std_deg = value,
        SweepAxis::Eta => c.scenario.eta = value,
        SweepAxis::P => c.design.outage = PerUser::Uniform(value),
    }
    c
}

/// One CSV row of a design result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub algorithm: Algorithm,
    pub gamma_db: f64,
    pub sigma_deg: f64,
    pub eta: f64,
    pub p_outage: f64,
    pub total_power_w: Option<f64>,
    pub iters: Option<usize>,
    pub max_rank_gap: Option<f64>,
    pub empirical_outage_max: Option<f64>,
    pub status: String,
}

impl ResultRow {
    pub fn new(
        cfg: &ExperimentConfig,
        algorithm: Algorithm,
        point: &SweepPoint<DesignRun>,
    ) -> Self {
        let gamma = cfg.design.gamma_db.values();
        let p = cfg.design.outage.values();
        let (power, iters, gap, emp) = match &point.outcome {
            Ok(r) => (
                Some(r.total_power),
                Some(r.iterations),
                Some(r.max_rank_gap),
                r.eval.as_ref().map(EvalReport::max_outage),
            ),
            Err(_) => (None, None, None, None),
        };
        Self {
            algorithm,
            gamma_db: gamma.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            sigma_deg: cfg.scenario.phase_std_deg,
            eta: cfg.scenario.eta,
            p_outage: p.iter().copied().fold(f64::INFINITY, f64::min),
            total_power_w: power,
            iters,
            max_rank_gap: gap,
            empirical_outage_max: emp,
            status: point.status(),
        }
    }
}

fn opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn opt_e(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:.9e}"))
}

pub const AVG_HEADER: &str = "gamma_db,sigma_deg,eta,total_power_w,iters,max_rank_gap,status";
pub const OUTAGE_HEADER: &str =
    "gamma_db,sigma_deg,p_outage,total_power_w,iters,max_rank_gap,empirical_outage_max,status";

/// Writes rows in the outage layout when `outage` is set, otherwise in the
/// average layout shared by the baselines.
pub fn write_results_csv<W: Write>(
    rows: &[ResultRow],
    outage: bool,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "{}", if outage { OUTAGE_HEADER } else { AVG_HEADER })?;
    for r in rows {
        if outage {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.gamma_db,
                r.sigma_deg,
                r.p_outage,
                opt_e(r.total_power_w),
                opt(r.iters),
                opt_e(r.max_rank_gap),
                opt_e(r.empirical_outage_max),
                r.status
            )?;
        } else {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.gamma_db,
                r.sigma_deg,
                r.eta,
                opt_e(r.total_power_w),
                opt(r.iters),
                opt_e(r.max_rank_gap),
                r.status
            )?;
        }
    }
    Ok(())
}

/// Re-designs and re-evaluates at every grid value.
pub fn run_sweep(
    cfg: &ExperimentConfig,
    axis: SweepAxis,
    grid: &[f64],
) -> Result<Vec<(ResultRow, SweepPoint<DesignRun>)>> {
    let algorithm = cfg.design.algorithm;
    for v in grid {
        with_axis(cfg, axis, *v).validate()?;
    }
    let points = sweep(grid, |v| run_design(&with_axis(cfg, axis, v)))?;
    Ok(points
        .into_iter()
        .map(|p| {
            (
                ResultRow::new(&with_axis(cfg, axis, p.value), algorithm, &p),
                p,
            )
        })
        .collect())
}

/// Every algorithm on the configured instance.
pub fn run_compare(cfg: &ExperimentConfig) -> Result<Vec<(ResultRow, SweepPoint<DesignRun>)>> {
    let inst = Instance::from_config(cfg)?;
    let mut out = Vec::new();
    for a in Algorithm::ALL {
        let point = SweepPoint {
            value: 0.0,
            outcome: run_algorithm(&inst, a, cfg),
        };
        out.push((ResultRow::new(cfg, a, &point), point));
    }
    Ok(out)
}
