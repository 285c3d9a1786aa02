//! JSON experiment configs and their expansion into runnable cells.
//!
//! A config holds scenario entries; each entry carries a p-grid, an
//! n-grid (explicit or a symbolic rule like `"50*p"` or `"ceil(p^1.5)"`),
//! a truth generator, and lists of estimators and losses. Expansion takes
//! the full cross product, with every (p, n) cell sharing one seed tag so
//! all estimator/loss combinations see the same truth and the same data.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::estimators::NuRule;
use crate::losses::{LossFamily, LossSpec, PhiSpec};
use crate::matcore::{SpdMatrix, SymmetricMatrix};
use crate::randmat::TruthSpec;
use crate::risk::{EstimatorKind, PriorSpec, ScaleRule, Scenario};

/// Schema version this build reads.
pub const FORMAT_VERSION: u32 = 1;

fn default_replicates() -> usize {
    100
}

fn default_posterior_draws() -> usize {
    200
}

fn default_gamma() -> f64 {
    0.5
}

fn default_power() -> u8 {
    2
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub format_version: u32,
    #[serde(default)]
    pub output_path: Option<String>,
    #[serde(default)]
    pub threads: Option<ThreadsSetting>,
    pub scenarios: Vec<ScenarioEntry>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ThreadsSetting {
    Count(usize),
    Named(String),
}

impl ThreadsSetting {
    /// `None` means "auto" (let the thread pool pick).
    pub fn resolve(&self) -> Result<Option<usize>> {
        match self {
            ThreadsSetting::Count(n) if *n >= 1 => Ok(Some(*n)),
            ThreadsSetting::Count(n) => Err(Error::config(format!(
                "threads must be >= 1 or \"auto\", got {n}"
            ))),
            ThreadsSetting::Named(s) if s == "auto" => Ok(None),
            ThreadsSetting::Named(s) => Err(Error::config(format!(
                "threads must be a count or \"auto\", got \"{s}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn values(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(vs) => vs.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum NSpec {
    Fixed(usize),
    List(Vec<usize>),
    Rule(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEntry {
    pub id: String,
    pub p: OneOrMany<usize>,
    pub n: NSpec,
    pub truth: TruthEntry,
    #[serde(default)]
    pub truth_per_replicate: bool,
    pub estimators: Vec<EstimatorEntry>,
    pub losses: Vec<LossEntry>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_posterior_draws")]
    pub posterior_draws: usize,
    pub base_seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TruthEntry {
    Identity,
    ScaledIdentity { value: f64 },
    Diagonal { lo: f64, hi: f64 },
    Full { scale: f64 },
}

impl TruthEntry {
    fn kind_name(&self) -> &'static str {
        match self {
            TruthEntry::Identity => "identity",
            TruthEntry::ScaledIdentity { .. } => "scaled_identity",
            TruthEntry::Diagonal { .. } => "diagonal",
            TruthEntry::Full { .. } => "full",
        }
    }

    fn resolve(&self, p: usize) -> Result<TruthSpec> {
        match self {
            TruthEntry::Identity => Ok(TruthSpec::Fixed(SpdMatrix::identity(p))),
            TruthEntry::ScaledIdentity { value } => {
                if !(*value > 0.0 && value.is_finite()) {
                    return Err(Error::config(format!(
                        "scaled_identity truth needs a positive value, got {value}"
                    )));
                }
                Ok(TruthSpec::Fixed(SpdMatrix::new(
                    SymmetricMatrix::identity(p).scale(*value),
                )?))
            }
            TruthEntry::Diagonal { lo, hi } => Ok(TruthSpec::Diagonal { lo: *lo, hi: *hi }),
            TruthEntry::Full { scale } => Ok(TruthSpec::Full { scale: *scale }),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorEntry {
    PosteriorLaw { prior: PriorEntry },
    PosteriorMean { prior: PriorEntry },
    SampleCovariance,
    Tapering {
        #[serde(default)]
        k: Option<usize>,
    },
    LogdetMle,
    LogdetUmvue,
    LogdetBayes { prior: PriorEntry },
}

impl EstimatorEntry {
    fn kind(&self) -> EstimatorKind {
        match self {
            EstimatorEntry::PosteriorLaw { .. } => EstimatorKind::PosteriorLaw,
            EstimatorEntry::PosteriorMean { .. } => EstimatorKind::PosteriorMean,
            EstimatorEntry::SampleCovariance => EstimatorKind::SampleCovariance,
            EstimatorEntry::Tapering { k } => EstimatorKind::Tapering { k: *k },
            EstimatorEntry::LogdetMle => EstimatorKind::LogDetMle,
            EstimatorEntry::LogdetUmvue => EstimatorKind::LogDetUmvue,
            EstimatorEntry::LogdetBayes { .. } => EstimatorKind::LogDetBayes,
        }
    }

    fn prior(&self) -> Option<&PriorEntry> {
        match self {
            EstimatorEntry::PosteriorLaw { prior }
            | EstimatorEntry::PosteriorMean { prior }
            | EstimatorEntry::LogdetBayes { prior } => Some(prior),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorEntry {
    Iw {
        nu_rule: NuRuleEntry,
        a_rule: ARuleEntry,
    },
    Mixture {
        nu_rule: NuRuleEntry,
        a_rule: ARuleEntry,
        #[serde(default = "default_gamma")]
        gamma: f64,
    },
    TruncatedIw {
        nu_rule: NuRuleEntry,
        a_rule: ARuleEntry,
        k1: f64,
        k2: f64,
    },
}

impl PriorEntry {
    fn resolve(&self) -> Result<PriorSpec> {
        Ok(match self {
            PriorEntry::Iw { nu_rule, a_rule } => PriorSpec::Iw {
                nu: nu_rule.resolve()?,
                a: a_rule.resolve()?,
            },
            PriorEntry::Mixture {
                nu_rule,
                a_rule,
                gamma,
            } => PriorSpec::Mixture {
                nu: nu_rule.resolve()?,
                a: a_rule.resolve()?,
                gamma: *gamma,
            },
            PriorEntry::TruncatedIw {
                nu_rule,
                a_rule,
                k1,
                k2,
            } => PriorSpec::TruncatedIw {
                nu: nu_rule.resolve()?,
                a: a_rule.resolve()?,
                k1: *k1,
                k2: *k2,
            },
        })
    }

    fn nu_rule_name(&self) -> String {
        match self {
            PriorEntry::Iw { nu_rule, .. }
            | PriorEntry::Mixture { nu_rule, .. }
            | PriorEntry::TruncatedIw { nu_rule, .. } => nu_rule.display_name(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum NuRuleEntry {
    Value(f64),
    Named(String),
}

impl NuRuleEntry {
    fn resolve(&self) -> Result<NuRule> {
        match self {
            NuRuleEntry::Value(v) => {
                if !v.is_finite() || *v < 0.0 {
                    return Err(Error::config(format!(
                        "numeric nu_rule must be finite and >= 0, got {v}"
                    )));
                }
                Ok(NuRule::Const(*v))
            }
            NuRuleEntry::Named(name) => match name.as_str() {
                "p" => Ok(NuRule::P),
                "n" => Ok(NuRule::N),
                "p_plus_one" => Ok(NuRule::PPlusOne),
                "zero" => Ok(NuRule::Zero),
                "sqrt_n_over_p" => Ok(NuRule::SqrtNOverP),
                other => Err(Error::config(format!(
                    "unknown nu_rule \"{other}\" (expected a number, \"p\", \"n\", \
                     \"p_plus_one\", \"zero\", or \"sqrt_n_over_p\")"
                ))),
            },
        }
    }

    fn display_name(&self) -> String {
        match self {
            NuRuleEntry::Value(v) => format!("{v}"),
            NuRuleEntry::Named(name) => name.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ARuleEntry {
    Named(String),
    Scaled { scaled_identity: f64 },
}

impl ARuleEntry {
    fn resolve(&self) -> Result<ScaleRule> {
        match self {
            ARuleEntry::Named(name) => match name.as_str() {
                "zero" => Ok(ScaleRule::Zero),
                "identity" => Ok(ScaleRule::Identity),
                other => Err(Error::config(format!(
                    "unknown a_rule \"{other}\" (expected \"zero\", \"identity\", or \
                     {{\"scaled_identity\": c}})"
                ))),
            },
            ARuleEntry::Scaled { scaled_identity } => {
                Ok(ScaleRule::ScaledIdentity(*scaled_identity))
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossEntry {
    pub family: String,
    #[serde(default = "default_power")]
    pub power: u8,
    #[serde(default)]
    pub scale: Option<ScaleEntry>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ScaleEntry {
    Value(f64),
    Rule(String),
}

impl LossEntry {
    fn resolve(&self, p: usize) -> Result<LossSpec> {
        let family = match self.family.as_str() {
            "sq_spectral" => LossFamily::SqSpectral,
            "sq_frobenius" => LossFamily::SqFrobenius,
            "sq_logdet" => LossFamily::SqLogDet,
            "sq_spectral_precision" => LossFamily::SqSpectralPrecision,
            "bregman_sq_euclid" => LossFamily::Bregman(PhiSpec::SquaredEuclid),
            "bregman_von_neumann" => LossFamily::Bregman(PhiSpec::VonNeumann),
            "bregman_stein" => LossFamily::Bregman(PhiSpec::Stein),
            other => {
                return Err(Error::config(format!(
                    "unknown loss family \"{other}\""
                )))
            }
        };
        let scale = match &self.scale {
            None => 1.0,
            Some(ScaleEntry::Value(v)) => *v,
            Some(ScaleEntry::Rule(rule)) if rule == "1/p" => 1.0 / p as f64,
            Some(ScaleEntry::Rule(rule)) => {
                return Err(Error::config(format!(
                    "unknown loss scale rule \"{rule}\" (expected a number or \"1/p\")"
                )))
            }
        };
        LossSpec::new(family, self.power, scale)
    }
}

/// Evaluates a symbolic n-rule at a given p. Supported forms:
/// a plain integer, `"<c>*p"`, `"p^<e>"` (must land on an integer), and
/// `"ceil(p^<e>)"`.
pub fn eval_n_rule(rule: &str, p: usize) -> Result<usize> {
    let rule = rule.trim();
    if let Ok(v) = rule.parse::<usize>() {
        return Ok(v);
    }
    if let Some(lhs) = rule.strip_suffix("*p") {
        if let Ok(c) = lhs.trim().parse::<usize>() {
            return Ok(c * p);
        }
    }
    let power_of = |expr: &str| -> Option<f64> {
        expr.strip_prefix("p^")?.parse::<f64>().ok()
    };
    if let Some(inner) = rule
        .strip_prefix("ceil(")
        .and_then(|rest| rest.strip_suffix(')'))
    {
        if let Some(e) = power_of(inner.trim()) {
            let v = (p as f64).powf(e).ceil();
            if v >= 1.0 && v <= u32::MAX as f64 {
                return Ok(v as usize);
            }
        }
        return Err(Error::config(format!(
            "n-rule \"{rule}\" does not evaluate to a valid count at p = {p}"
        )));
    }
    if let Some(e) = power_of(rule) {
        let v = (p as f64).powf(e);
        if (v - v.round()).abs() < 1e-9 && v.round() >= 1.0 && v <= u32::MAX as f64 {
            return Ok(v.round() as usize);
        }
        return Err(Error::config(format!(
            "n-rule \"{rule}\" is not an integer at p = {p}; use \"ceil({rule})\""
        )));
    }
    Err(Error::config(format!(
        "cannot parse n-rule \"{rule}\" (expected an integer, \"<c>*p\", \"p^<e>\", or \
         \"ceil(p^<e>)\")"
    )))
}

/// One runnable (scenario, estimator, loss) combination plus the strings
/// the CSV writer needs.
#[derive(Debug, Clone)]
pub struct Cell {
    pub scenario: Scenario,
    pub id: String,
    pub truth_kind: &'static str,
    pub prior_kind: String,
    pub nu_rule: String,
    pub loss_family: String,
    pub loss_power: u8,
    pub loss_scale: f64,
    pub estimator: String,
}

/// Placeholder prior for estimators that do not use one; never sampled.
fn unused_prior() -> PriorSpec {
    PriorSpec::Iw {
        nu: NuRule::Zero,
        a: ScaleRule::Zero,
    }
}

/// Parses and validates a config file, returning it along with every
/// expanded cell. All cells validate before anything runs.
pub fn load_config(path: &Path) -> Result<(ConfigFile, Vec<Cell>)> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let config: ConfigFile = serde_json::from_str(&text).map_err(|e| {
        Error::config(format!(
            "{}:{}:{}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    if config.format_version != FORMAT_VERSION {
        return Err(Error::config(format!(
            "unsupported format_version {} (this build reads {FORMAT_VERSION})",
            config.format_version
        )));
    }
    if let Some(threads) = &config.threads {
        threads.resolve()?;
    }
    let cells = expand(&config)?;
    for cell in &cells {
        cell.scenario.validate().map_err(|e| {
            Error::config(format!(
                "scenario \"{}\" (p={}, n={}, estimator={}, loss={}): {e}",
                cell.id, cell.scenario.p, cell.scenario.n, cell.estimator, cell.loss_family
            ))
        })?;
    }
    Ok((config, cells))
}

fn expand(config: &ConfigFile) -> Result<Vec<Cell>> {
    let mut cells = Vec::new();
    for entry in &config.scenarios {
        if entry.id.is_empty() {
            return Err(Error::config("scenario id must not be empty"));
        }
        if entry.estimators.is_empty() || entry.losses.is_empty() {
            return Err(Error::config(format!(
                "scenario \"{}\" needs at least one estimator and one loss",
                entry.id
            )));
        }
        let ps = entry.p.values();
        if ps.is_empty() {
            return Err(Error::config(format!(
                "scenario \"{}\" has an empty p grid",
                entry.id
            )));
        }
        let mut tag = 0_u64;
        for &p in &ps {
            let ns: Vec<usize> = match &entry.n {
                NSpec::Fixed(n) => vec![*n],
                NSpec::List(ns) if ns.is_empty() => {
                    return Err(Error::config(format!(
                        "scenario \"{}\" has an empty n grid",
                        entry.id
                    )))
                }
                NSpec::List(ns) => ns.clone(),
                NSpec::Rule(rule) => vec![eval_n_rule(rule, p)?],
            };
            for n in ns {
                let truth = entry.truth.resolve(p)?;
                for est in &entry.estimators {
                    let (prior_spec, prior_kind, nu_rule) = match est.prior() {
                        Some(pe) => {
                            let spec = pe.resolve()?;
                            let kind = spec.kind_name().to_string();
                            (spec, kind, pe.nu_rule_name())
                        }
                        None => (unused_prior(), "none".to_string(), "none".to_string()),
                    };
                    for loss_entry in &entry.losses {
                        let loss = loss_entry.resolve(p)?;
                        let scenario = Scenario {
                            p,
                            n,
                            truth: truth.clone(),
                            truth_per_replicate: entry.truth_per_replicate,
                            prior: prior_spec.clone(),
                            estimator: est.kind(),
                            loss: loss.clone(),
                            replicates: entry.replicates,
                            posterior_draws: entry.posterior_draws,
                            base_seed: entry.base_seed,
                            tag,
                        };
                        cells.push(Cell {
                            estimator: scenario.estimator.name().to_string(),
                            loss_family: loss.family().name().to_string(),
                            loss_power: loss.power(),
                            loss_scale: loss.scale(),
                            id: entry.id.clone(),
                            truth_kind: entry.truth.kind_name(),
                            prior_kind: prior_kind.clone(),
                            nu_rule: nu_rule.clone(),
                            scenario,
                        });
                    }
                }
                tag += 1;
            }
        }
    }
    Ok(cells)
}
