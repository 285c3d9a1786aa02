//! Posterior-expected loss and integrated risk.
//!
//! Terminology used throughout:
//! - *P-loss*: the posterior expectation of a loss, `E[d(Σ, Σ0) | X]`,
//!   a function of the observed data.
//! - *P-risk*: the expectation of the P-loss over data generated from a
//!   fixed truth Σ0, estimated by replicate averaging.
//! - *frequentist risk*: `E[d(Σ̂(X), Σ0)]` for a point estimator Σ̂.
//!
//! The engine runs replicates in parallel, but every replicate owns a
//! stream derived from `(base_seed, tag, replicate_index)` and the
//! aggregation is compensated summation in fixed index order, so results
//! are bit-identical across thread counts. Inner P-loss evaluation
//! auto-selects a closed form when one exists (squared Frobenius with
//! m > 3, squared log-det with a proper posterior), Monte Carlo
//! otherwise; the selection is static per scenario and recorded in the
//! output.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{
    default_tapering_bandwidth, iw_posterior, logdet_point_estimate, logdet_posterior_moments,
    mixture_posterior, posterior_element_moments, posterior_mean, tapering_estimator,
    truncated_posterior_mean_mc, LogDetEstimator, MixtureBranch, NuRule, PosteriorIw,
};
use crate::losses::{LossFamily, LossSpec};
use crate::matcore::{SpdMatrix, SymmetricMatrix};
use crate::randmat::{
    derive_stream, gen_truth, sample_covariance, sample_mvn, sample_truncated_iw_counted,
    IwParams, SeedStream, TruncIwParams, TruthSpec, DEFAULT_TRUNCATION_ATTEMPTS,
};

/// Replicate-index sentinel for the scenario-level truth stream: the
/// default mode draws Σ0 once per scenario and reuses it for every
/// replicate, and that draw must not collide with any data stream.
const SCENARIO_TRUTH_INDEX: u64 = u64::MAX;

/// High bit marking per-replicate truth streams, keeping them disjoint
/// from the data streams (plain replicate indices) without a second tag.
const REPLICATE_TRUTH_BIT: u64 = 1 << 63;

/// Prior scale rules, resolved to a concrete matrix at dimension p.
#[derive(Debug, Clone, PartialEq)]
pub enum ScaleRule {
    /// A = 0 (improper flat-scale family).
    Zero,
    /// A = I_p.
    Identity,
    /// A = c·I_p for a fixed c > 0.
    ScaledIdentity(f64),
}

impl ScaleRule {
    /// Materializes the rule.
    pub fn resolve(&self, p: usize) -> Result<SymmetricMatrix> {
        match self {
            ScaleRule::Zero => Ok(SymmetricMatrix::zeros(p)),
            ScaleRule::Identity => Ok(SymmetricMatrix::identity(p)),
            ScaleRule::ScaledIdentity(c) => {
                if !c.is_finite() || *c <= 0.0 {
                    return Err(Error::constraint(format!(
                        "scaled-identity prior scale must be positive, got {c}"
                    )));
                }
                Ok(SymmetricMatrix::identity(p).scale(*c))
            }
        }
    }
}

/// Prior families a scenario can use.
#[derive(Debug, Clone)]
pub enum PriorSpec {
    /// Inverse-Wishart IW(ν, A), improper members allowed.
    Iw { nu: NuRule, a: ScaleRule },
    /// IW when p ≤ γn, point mass at the identity otherwise.
    Mixture { nu: NuRule, a: ScaleRule, gamma: f64 },
    /// Inverse-Wishart restricted to eigenvalues in [k1, k2].
    TruncatedIw {
        nu: NuRule,
        a: ScaleRule,
        k1: f64,
        k2: f64,
    },
}

impl PriorSpec {
    /// Short stable name used in CSV output.
    pub fn kind_name(&self) -> &'static str {
        match self {
            PriorSpec::Iw { .. } => "iw",
            PriorSpec::Mixture { .. } => "mixture",
            PriorSpec::TruncatedIw { .. } => "truncated_iw",
        }
    }

    fn nu_rule(&self) -> &NuRule {
        match self {
            PriorSpec::Iw { nu, .. }
            | PriorSpec::Mixture { nu, .. }
            | PriorSpec::TruncatedIw { nu, .. } => nu,
        }
    }

    fn scale_rule(&self) -> &ScaleRule {
        match self {
            PriorSpec::Iw { a, .. }
            | PriorSpec::Mixture { a, .. }
            | PriorSpec::TruncatedIw { a, .. } => a,
        }
    }

    /// Materializes the base inverse-Wishart parameters at (n, p).
    pub fn resolve_base(&self, n: usize, p: usize) -> Result<IwParams> {
        let nu = self.nu_rule().resolve(n, p);
        let a = self.scale_rule().resolve(p)?;
        IwParams::new(nu, a)
    }
}

/// What the scenario evaluates: the posterior law itself (P-risk) or a
/// point estimator (frequentist risk).
#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorKind {
    /// Posterior-expected loss of the full posterior law.
    PosteriorLaw,
    /// The posterior mean as a point estimator.
    PosteriorMean,
    /// The sample covariance.
    SampleCovariance,
    /// Tapering with the given even bandwidth (`None` = √n rounded even).
    Tapering { k: Option<usize> },
    /// Plug-in log-determinant estimate.
    LogDetMle,
    /// Bias-corrected log-determinant estimate.
    LogDetUmvue,
    /// Bayesian log-determinant estimate under the scenario prior.
    LogDetBayes,
}

impl EstimatorKind {
    /// Short stable name used in CSV output.
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::PosteriorLaw => "posterior_law",
            EstimatorKind::PosteriorMean => "posterior_mean",
            EstimatorKind::SampleCovariance => "sample_covariance",
            EstimatorKind::Tapering { .. } => "tapering",
            EstimatorKind::LogDetMle => "logdet_mle",
            EstimatorKind::LogDetUmvue => "logdet_umvue",
            EstimatorKind::LogDetBayes => "logdet_bayes",
        }
    }

    fn is_logdet_point(&self) -> bool {
        matches!(
            self,
            EstimatorKind::LogDetMle | EstimatorKind::LogDetUmvue | EstimatorKind::LogDetBayes
        )
    }
}

/// How the inner P-loss was (or will be) evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerMethod {
    /// Exact posterior-moment formula.
    ClosedForm,
    /// Monte Carlo over posterior draws.
    Mc,
    /// Degenerate point-mass posterior: the loss itself is exact.
    Point,
    /// Not applicable (point-estimator scenarios).
    None,
}

impl InnerMethod {
    /// Short stable name used in CSV output.
    pub fn name(&self) -> &'static str {
        match self {
            InnerMethod::ClosedForm => "closed_form",
            InnerMethod::Mc => "mc",
            InnerMethod::Point => "point",
            InnerMethod::None => "none",
        }
    }
}

/// One fully-specified experiment cell.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub p: usize,
    pub n: usize,
    pub truth: TruthSpec,
    /// Redraw Σ0 for every replicate instead of once per scenario.
    /// Off by default: the standard design generates one truth and many
    /// data sets from it.
    pub truth_per_replicate: bool,
    pub prior: PriorSpec,
    pub estimator: EstimatorKind,
    pub loss: LossSpec,
    pub replicates: usize,
    /// Monte Carlo draw count for inner posterior expectations.
    pub posterior_draws: usize,
    pub base_seed: u64,
    pub tag: u64,
}

impl Scenario {
    /// Checks every statically-checkable existence condition so long runs
    /// cannot die midway on a predictable error.
    pub fn validate(&self) -> Result<()> {
        if self.p < 1 {
            return Err(Error::constraint("scenario requires p >= 1"));
        }
        if self.n < 1 {
            return Err(Error::constraint("scenario requires n >= 1"));
        }
        if self.replicates < 2 {
            return Err(Error::constraint(
                "scenario requires replicates >= 2 (standard errors need at least two)",
            ));
        }
        if let TruthSpec::Fixed(sigma) = &self.truth {
            if sigma.dim() != self.p {
                return Err(Error::DimMismatch {
                    expected: self.p,
                    actual: sigma.dim(),
                });
            }
        }
        if let PriorSpec::Mixture { gamma, .. } = &self.prior {
            if !(*gamma > 0.0 && *gamma < 1.0) {
                return Err(Error::constraint(format!(
                    "mixture threshold must lie in (0, 1), got {gamma}"
                )));
            }
        }
        if let PriorSpec::TruncatedIw { k1, k2, .. } = &self.prior {
            if !(*k1 > 0.0 && k2 > k1) {
                return Err(Error::constraint(format!(
                    "truncation window must satisfy 0 < k1 < k2, got [{k1}, {k2}]"
                )));
            }
        }
        // Point log-det estimators need an SPD sample covariance.
        if self.estimator.is_logdet_point() {
            if !matches!(self.loss.family(), LossFamily::SqLogDet) {
                return Err(Error::UnsupportedLoss {
                    family: format!(
                        "{} (log-det point estimators take the squared log-det loss)",
                        self.loss.family().name()
                    ),
                });
            }
            if self.n < self.p {
                return Err(Error::constraint(format!(
                    "log-det point estimators need n >= p, got n = {}, p = {}",
                    self.n, self.p
                )));
            }
            if matches!(self.estimator, EstimatorKind::LogDetBayes)
                && !matches!(self.prior, PriorSpec::Iw { .. })
            {
                return Err(Error::UnsupportedPrior {
                    reason: "the Bayes log-det estimator requires a plain inverse-Wishart prior",
                });
            }
        }
        let base = self.prior.resolve_base(self.n, self.p)?;
        let needs_posterior = matches!(
            self.estimator,
            EstimatorKind::PosteriorLaw | EstimatorKind::PosteriorMean | EstimatorKind::LogDetBayes
        );
        if needs_posterior && !self.mixture_point_branch() {
            let df = base.df() + self.n as f64;
            if df <= (self.p - 1) as f64 {
                return Err(Error::SingularPosterior {
                    n: self.n,
                    p: self.p,
                    nu: base.df(),
                });
            }
            // A zero prior scale with n < p leaves nS + A rank-deficient
            // with probability one.
            if matches!(self.prior.scale_rule(), ScaleRule::Zero) && self.n < self.p {
                return Err(Error::SingularPosterior {
                    n: self.n,
                    p: self.p,
                    nu: base.df(),
                });
            }
        }
        if self.inner_method() == InnerMethod::Mc && self.posterior_draws < 2 {
            return Err(Error::constraint(
                "Monte Carlo posterior expectations need posterior_draws >= 2",
            ));
        }
        Ok(())
    }

    /// True when the mixture prior's point-mass branch is selected.
    fn mixture_point_branch(&self) -> bool {
        if let PriorSpec::Mixture { gamma, .. } = &self.prior {
            self.p as f64 > gamma * self.n as f64
        } else {
            false
        }
    }

    /// Static inner-method selection; a pure function of the scenario.
    pub fn inner_method(&self) -> InnerMethod {
        if self.estimator != EstimatorKind::PosteriorLaw {
            return InnerMethod::None;
        }
        if self.mixture_point_branch() {
            return InnerMethod::Point;
        }
        if matches!(self.prior, PriorSpec::TruncatedIw { .. }) {
            return InnerMethod::Mc;
        }
        let nu = self.prior.nu_rule().resolve(self.n, self.p);
        let df = self.n as f64 + nu;
        let m = df - self.p as f64;
        match self.loss.family() {
            LossFamily::SqFrobenius if self.loss.power() == 2 && m > 3.0 => {
                InnerMethod::ClosedForm
            }
            LossFamily::SqLogDet if df > (self.p - 1) as f64 => InnerMethod::ClosedForm,
            _ => InnerMethod::Mc,
        }
    }

    /// Inner draw count recorded in output: the configured draws when any
    /// inner Monte Carlo runs, 0 for purely closed-form/point paths.
    pub fn effective_inner_draws(&self) -> usize {
        match self.inner_method() {
            InnerMethod::Mc => self.posterior_draws,
            InnerMethod::None => {
                // The truncated posterior mean is itself Monte Carlo.
                if self.estimator == EstimatorKind::PosteriorMean
                    && matches!(self.prior, PriorSpec::TruncatedIw { .. })
                {
                    self.posterior_draws
                } else {
                    0
                }
            }
            _ => 0,
        }
    }
}

/// Aggregated risk estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskEstimate {
    /// Mean of the per-replicate losses.
    pub mean: f64,
    /// Sample SD of the per-replicate losses divided by √replicates.
    pub se: f64,
    pub replicates: usize,
    /// Inner Monte Carlo draw count (0 when no inner MC ran).
    pub inner_draws: usize,
    /// How inner posterior expectations were evaluated.
    pub inner_method: InnerMethod,
}

/// A posterior law which [`ploss_mc`] can draw from.
pub enum PosteriorSampler<'a> {
    /// Proper conjugate posterior.
    Iw(&'a PosteriorIw),
    /// Eigenvalue-truncated posterior with a per-draw attempt budget.
    TruncatedIw(&'a TruncIwParams, u64),
    /// Degenerate posterior concentrated at one matrix.
    PointMass(&'a SpdMatrix),
}

/// Compensated (Kahan) summation: the aggregation must not depend on
/// how floating-point error accumulates across differently-sized runs.
fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for x in values {
        let y = x - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Mean and standard error (sample SD / √count) with compensated sums.
fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let count = values.len() as f64;
    let mean = kahan_sum(values.iter().copied()) / count;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss = kahan_sum(values.iter().map(|x| (x - mean) * (x - mean)));
    let var = ss / (count - 1.0);
    (mean, (var / count).sqrt())
}

/// Closed-form posterior-expected loss for the two families that admit
/// one: squared Frobenius (posterior element variances plus squared bias)
/// and squared log-det (posterior variance plus squared bias of log det).
pub fn ploss_closed_form(
    post: &PosteriorIw,
    sigma0: &SpdMatrix,
    loss: &LossSpec,
) -> Result<f64> {
    if post.p() != sigma0.dim() {
        return Err(Error::DimMismatch {
            expected: post.p(),
            actual: sigma0.dim(),
        });
    }
    match loss.family() {
        LossFamily::SqFrobenius if loss.power() == 2 => {
            let (mean, var) = posterior_element_moments(post)?;
            let bias = mean.sub(sigma0.sym())?;
            let total: f64 = var.entries().iter().sum::<f64>()
                + bias.entries().iter().map(|b| b * b).sum::<f64>();
            Ok(loss.scale() * total)
        }
        LossFamily::SqLogDet => {
            let (mean_ld, var_ld) = logdet_posterior_moments(post)?;
            let bias = mean_ld - sigma0.log_det();
            Ok(loss.scale() * (bias * bias + var_ld))
        }
        other => Err(Error::UnsupportedLoss {
            family: format!("{} (no closed-form posterior expectation)", other.name()),
        }),
    }
}

/// Monte Carlo posterior-expected loss: mean and standard error over
/// `draws` posterior samples. A point-mass posterior needs no draws and
/// reports the exact loss with zero standard error.
pub fn ploss_mc(
    sampler: &PosteriorSampler<'_>,
    sigma0: &SpdMatrix,
    loss: &LossSpec,
    draws: usize,
    stream: &mut SeedStream,
) -> Result<(f64, f64)> {
    if let PosteriorSampler::PointMass(at) = sampler {
        return Ok((loss.evaluate_spd(at, sigma0)?, 0.0));
    }
    if draws < 2 {
        return Err(Error::constraint(
            "Monte Carlo posterior expectation needs draws >= 2",
        ));
    }
    let mut values = Vec::with_capacity(draws);
    for _ in 0..draws {
        let sigma = match sampler {
            PosteriorSampler::Iw(post) => post.sample(stream)?,
            PosteriorSampler::TruncatedIw(params, budget) => {
                sample_truncated_iw_counted(stream, params, *budget)?.0
            }
            PosteriorSampler::PointMass(_) => unreachable!("handled above"),
        };
        values.push(loss.evaluate_spd(&sigma, sigma0)?);
    }
    Ok(mean_and_se(&values))
}

/// Exact integrated risk (expectation of the P-loss over data) for the
/// squared Frobenius and squared log-det losses.
///
/// Frobenius: with b = nS + A, Gaussian fourth-moment identities give
/// `E b_ij = nσ_ij + a_ij`, `Var b_ij = n(σ_ij² + σ_ii σ_jj)`,
/// `Cov(b_ii, b_jj) = 2nσ_ij²`, which plugged into the posterior-moment
/// formulas yield the exact expectation; requires m = n + ν − p > 3.
///
/// Log-det (zero prior scale only): log det(nS) − log det Σ0 is a sum of
/// independent log-chi-squares, so the risk is
/// `Σ_k ψ'((n−k)/2) + (Σ_k [ψ((n−k)/2) − ψ((n+ν−k)/2)])² + Σ_k ψ'((n+ν−k)/2)`
/// — free of Σ0.
pub fn exact_prisk(
    loss: &LossSpec,
    sigma0: &SpdMatrix,
    n: usize,
    prior: &IwParams,
) -> Result<f64> {
    use crate::specialfn::{digamma, trigamma};
    let p = sigma0.dim();
    if prior.dim() != p {
        return Err(Error::DimMismatch {
            expected: p,
            actual: prior.dim(),
        });
    }
    let nu = prior.df();
    match loss.family() {
        LossFamily::SqFrobenius if loss.power() == 2 => {
            let m = n as f64 + nu - p as f64;
            if m <= 3.0 {
                return Err(Error::MomentUndefined {
                    moment: "exact Frobenius risk",
                    requirement: "n + \u{3bd} - p > 3",
                    actual: m,
                });
            }
            let nf = n as f64;
            let sig = sigma0.entries();
            let a = prior.scale();
            let denom_t1 = m * (m - 1.0) * (m - 1.0) * (m - 3.0);
            let denom_t2 = (m - 1.0) * (m - 1.0);
            let mut total = 0.0;
            for i in 0..p {
                for j in 0..p {
                    let sij = sig[(i, j)];
                    let sii = sig[(i, i)];
                    let sjj = sig[(j, j)];
                    let e_bij = nf * sij + a.get(i, j);
                    let var_bij = nf * (sij * sij + sii * sjj);
                    let e_bij_sq = var_bij + e_bij * e_bij;
                    let e_bii = nf * sii + a.get(i, i);
                    let e_bjj = nf * sjj + a.get(j, j);
                    let e_bii_bjj = 2.0 * nf * sij * sij + e_bii * e_bjj;
                    // Posterior-variance term, then posterior-mean error.
                    total += ((m + 1.0) * e_bij_sq + (m - 1.0) * e_bii_bjj) / denom_t1;
                    let mean_err = e_bij / (m - 1.0) - sij;
                    total += var_bij / denom_t2 + mean_err * mean_err;
                }
            }
            Ok(loss.scale() * total)
        }
        LossFamily::SqLogDet => {
            if prior.scale().frobenius_norm() != 0.0 {
                return Err(Error::UnsupportedPrior {
                    reason: "the exact log-det risk formula requires a zero prior scale",
                });
            }
            let mut bias = 0.0;
            let mut var_data = 0.0;
            let mut var_post = 0.0;
            for k in 0..p {
                let data_half = (n as f64 - k as f64) / 2.0;
                let post_half = (n as f64 + nu - k as f64) / 2.0;
                bias += digamma(data_half)? - digamma(post_half)?;
                var_data += trigamma(data_half)?;
                var_post += trigamma(post_half)?;
            }
            Ok(loss.scale() * (var_data + bias * bias + var_post))
        }
        other => Err(Error::UnsupportedLoss {
            family: format!("{} (no exact risk formula)", other.name()),
        }),
    }
}

/// The truth shared by every replicate of a scenario (default mode), or a
/// marker that each replicate draws its own.
fn scenario_truth(sc: &Scenario) -> Result<Option<SpdMatrix>> {
    if sc.truth_per_replicate {
        Ok(None)
    } else {
        let mut stream = derive_stream(sc.base_seed, sc.tag, SCENARIO_TRUTH_INDEX);
        Ok(Some(gen_truth(&mut stream, &sc.truth, sc.p)?))
    }
}

fn replicate_truth(sc: &Scenario, r: usize) -> Result<SpdMatrix> {
    let mut stream = derive_stream(sc.base_seed, sc.tag, r as u64 | REPLICATE_TRUTH_BIT);
    gen_truth(&mut stream, &sc.truth, sc.p)
}

/// Runs the per-replicate closure in parallel over replicate indices and
/// aggregates in index order with the first failure reported by index.
fn run_replicates(
    sc: &Scenario,
    eval: impl Fn(usize) -> Result<f64> + Sync + Send,
) -> Result<RiskEstimate> {
    let results: Vec<Result<f64>> = (0..sc.replicates).into_par_iter().map(eval).collect();
    let mut values = Vec::with_capacity(sc.replicates);
    for (index, result) in results.into_iter().enumerate() {
        match result {
            Ok(v) => values.push(v),
            Err(source) => {
                return Err(Error::ReplicateFailed {
                    index,
                    source: Box::new(source),
                })
            }
        }
    }
    let (mean, se) = mean_and_se(&values);
    Ok(RiskEstimate {
        mean,
        se,
        replicates: sc.replicates,
        inner_draws: sc.effective_inner_draws(),
        inner_method: sc.inner_method(),
    })
}

/// P-risk of the posterior law: replicate-averaged posterior-expected
/// loss. The scenario's estimator must be [`EstimatorKind::PosteriorLaw`].
pub fn prisk_mc(sc: &Scenario) -> Result<RiskEstimate> {
    sc.validate()?;
    if sc.estimator != EstimatorKind::PosteriorLaw {
        return Err(Error::constraint(
            "prisk_mc evaluates the posterior law; use frequentist_risk_mc for point estimators",
        ));
    }
    let shared_truth = scenario_truth(sc)?;
    let prior = sc.prior.resolve_base(sc.n, sc.p)?;
    let method = sc.inner_method();
    run_replicates(sc, |r| {
        let local_truth;
        let sigma0 = match &shared_truth {
            Some(t) => t,
            None => {
                local_truth = replicate_truth(sc, r)?;
                &local_truth
            }
        };
        let mut stream = derive_stream(sc.base_seed, sc.tag, r as u64);
        let data = sample_mvn(&mut stream, sigma0, sc.n);
        let s = sample_covariance(&data);
        match &sc.prior {
            PriorSpec::Iw { .. } => {
                let post = iw_posterior(&prior, sc.n, &s)?;
                match method {
                    InnerMethod::ClosedForm => ploss_closed_form(&post, sigma0, &sc.loss),
                    _ => ploss_mc(
                        &PosteriorSampler::Iw(&post),
                        sigma0,
                        &sc.loss,
                        sc.posterior_draws,
                        &mut stream,
                    )
                    .map(|(mean, _)| mean),
                }
            }
            PriorSpec::Mixture { gamma, .. } => {
                let mixture = mixture_posterior(&prior, *gamma, sc.n, &s)?;
                match mixture.branch() {
                    MixtureBranch::PointMass(at) => ploss_mc(
                        &PosteriorSampler::PointMass(at),
                        sigma0,
                        &sc.loss,
                        0,
                        &mut stream,
                    )
                    .map(|(mean, _)| mean),
                    MixtureBranch::Iw(post) => match method {
                        InnerMethod::ClosedForm => ploss_closed_form(post, sigma0, &sc.loss),
                        _ => ploss_mc(
                            &PosteriorSampler::Iw(post),
                            sigma0,
                            &sc.loss,
                            sc.posterior_draws,
                            &mut stream,
                        )
                        .map(|(mean, _)| mean),
                    },
                }
            }
            PriorSpec::TruncatedIw { k1, k2, .. } => {
                let post = iw_posterior(&prior, sc.n, &s)?;
                let trunc = TruncIwParams::new(post.params().clone(), *k1, *k2)?;
                ploss_mc(
                    &PosteriorSampler::TruncatedIw(&trunc, DEFAULT_TRUNCATION_ATTEMPTS),
                    sigma0,
                    &sc.loss,
                    sc.posterior_draws,
                    &mut stream,
                )
                .map(|(mean, _)| mean)
            }
        }
    })
}

/// Frequentist risk of a point estimator: replicate-averaged
/// `loss(Σ̂(X), Σ0)` (or its scalar log-det analogue).
pub fn frequentist_risk_mc(sc: &Scenario) -> Result<RiskEstimate> {
    sc.validate()?;
    if sc.estimator == EstimatorKind::PosteriorLaw {
        return Err(Error::constraint(
            "frequentist_risk_mc evaluates point estimators; use prisk_mc for the posterior law",
        ));
    }
    let shared_truth = scenario_truth(sc)?;
    let prior = sc.prior.resolve_base(sc.n, sc.p)?;
    run_replicates(sc, |r| {
        let local_truth;
        let sigma0 = match &shared_truth {
            Some(t) => t,
            None => {
                local_truth = replicate_truth(sc, r)?;
                &local_truth
            }
        };
        let mut stream = derive_stream(sc.base_seed, sc.tag, r as u64);
        let data = sample_mvn(&mut stream, sigma0, sc.n);
        let s = sample_covariance(&data);
        match &sc.estimator {
            EstimatorKind::PosteriorMean => {
                let estimate = match &sc.prior {
                    PriorSpec::Iw { .. } => {
                        posterior_mean(&iw_posterior(&prior, sc.n, &s)?)?
                    }
                    PriorSpec::Mixture { gamma, .. } => {
                        match mixture_posterior(&prior, *gamma, sc.n, &s)?.branch() {
                            MixtureBranch::PointMass(at) => at.sym().clone(),
                            MixtureBranch::Iw(post) => posterior_mean(post)?,
                        }
                    }
                    PriorSpec::TruncatedIw { k1, k2, .. } => {
                        let post = iw_posterior(&prior, sc.n, &s)?;
                        let trunc = TruncIwParams::new(post.params().clone(), *k1, *k2)?;
                        truncated_posterior_mean_mc(
                            &trunc,
                            sc.posterior_draws,
                            DEFAULT_TRUNCATION_ATTEMPTS,
                            &mut stream,
                        )?
                        .mean
                    }
                };
                sc.loss.evaluate_estimate(&estimate, sigma0)
            }
            EstimatorKind::SampleCovariance => sc.loss.evaluate_estimate(&s, sigma0),
            EstimatorKind::Tapering { k } => {
                let bandwidth = k.unwrap_or_else(|| default_tapering_bandwidth(sc.n));
                let estimate = tapering_estimator(&s, bandwidth)?;
                sc.loss.evaluate_estimate(&estimate, sigma0)
            }
            EstimatorKind::LogDetMle | EstimatorKind::LogDetUmvue | EstimatorKind::LogDetBayes => {
                let kind = match &sc.estimator {
                    EstimatorKind::LogDetMle => LogDetEstimator::Mle,
                    EstimatorKind::LogDetUmvue => LogDetEstimator::Umvue,
                    _ => LogDetEstimator::BayesIw(prior.clone()),
                };
                let estimate = logdet_point_estimate(&kind, &s, sc.n)?;
                let err = estimate - sigma0.log_det();
                Ok(sc.loss.scale() * err * err)
            }
            EstimatorKind::PosteriorLaw => unreachable!("rejected above"),
        }
    })
}

/// Dispatches a scenario to the appropriate risk engine.
pub fn run_scenario(sc: &Scenario) -> Result<RiskEstimate> {
    if sc.estimator == EstimatorKind::PosteriorLaw {
        prisk_mc(sc)
    } else {
        frequentist_risk_mc(sc)
    }
}

/// Least-squares fit of `ln risk` against `ln n`.
#[derive(Debug, Clone)]
pub struct RateFit {
    /// Empirical rate exponent.
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination in log space.
    pub r2: f64,
    /// The (n, risk) points the fit consumed.
    pub points: Vec<(f64, f64)>,
}

/// Fits the empirical convergence rate by OLS on (ln n, ln risk).
/// Requires at least 3 points with positive n and risk and at least two
/// distinct n values.
pub fn rate_fit(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::DegenerateFit {
            reason: format!("rate fit needs at least 3 points, got {}", points.len()),
        });
    }
    for &(n, risk) in points {
        if !(n > 0.0) || !(risk > 0.0) || !n.is_finite() || !risk.is_finite() {
            return Err(Error::DegenerateFit {
                reason: format!("rate fit needs positive finite points, got ({n}, {risk})"),
            });
        }
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(n, r)| (n.ln(), r.ln())).collect();
    let count = logs.len() as f64;
    let mean_x = logs.iter().map(|&(x, _)| x).sum::<f64>() / count;
    let mean_y = logs.iter().map(|&(_, y)| y).sum::<f64>() / count;
    let sxx: f64 = logs.iter().map(|&(x, _)| (x - mean_x) * (x - mean_x)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit {
            reason: "rate fit needs at least two distinct n values".into(),
        });
    }
    let sxy: f64 = logs
        .iter()
        .map(|&(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = logs.iter().map(|&(_, y)| (y - mean_y) * (y - mean_y)).sum();
    let ss_res: f64 = logs
        .iter()
        .map(|&(x, y)| {
            let fitted = intercept + slope * x;
            (y - fitted) * (y - fitted)
        })
        .sum();
    let r2 = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(RateFit {
        slope,
        intercept,
        r2,
        points: points.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randmat::derive_stream;
    use crate::testutil::random_spd;
    use approx::assert_relative_eq;

    fn base_scenario() -> Scenario {
        Scenario {
            p: 2,
            n: 100,
            truth: TruthSpec::Fixed(SpdMatrix::identity(2)),
            truth_per_replicate: false,
            prior: PriorSpec::Iw {
                nu: NuRule::P,
                a: ScaleRule::Zero,
            },
            estimator: EstimatorKind::PosteriorLaw,
            loss: LossSpec::squared(LossFamily::SqFrobenius),
            replicates: 200,
            posterior_draws: 200,
            base_seed: 7,
            tag: 1,
        }
    }

    #[test]
    fn closed_form_at_posterior_mean_is_variance_sum() {
        let mut stream = derive_stream(80, 0, 0);
        let sigma = random_spd(3, 1);
        let data = sample_mvn(&mut stream, &sigma, 40);
        let s = sample_covariance(&data);
        let prior = IwParams::new(5.0, SymmetricMatrix::identity(3)).unwrap();
        let post = iw_posterior(&prior, 40, &s).unwrap();
        let (mean, var) = posterior_element_moments(&post).unwrap();
        let mean_spd = SpdMatrix::new(mean).unwrap();
        let loss = LossSpec::squared(LossFamily::SqFrobenius);
        let got = ploss_closed_form(&post, &mean_spd, &loss).unwrap();
        let var_sum: f64 = var.entries().iter().sum();
        assert_relative_eq!(got, var_sum, max_relative = 1e-12);
    }

    #[test]
    fn closed_form_matches_mc_battery() {
        // 20 random posteriors, both closed-form families, 4 SE margin.
        let mut stream = derive_stream(81, 0, 0);
        for case in 0..20 {
            let p = 2 + case % 2;
            let n = 30 + case;
            let sigma = random_spd(p, case as u64 + 1);
            let data = sample_mvn(&mut stream, &sigma, n);
            let s = sample_covariance(&data);
            let prior = IwParams::new(4.0 + (case % 3) as f64, SymmetricMatrix::identity(p))
                .unwrap();
            let post = iw_posterior(&prior, n, &s).unwrap();
            for loss in [
                LossSpec::squared(LossFamily::SqFrobenius),
                LossSpec::squared(LossFamily::SqLogDet),
            ] {
                let exact = ploss_closed_form(&post, &sigma, &loss).unwrap();
                let (mc, se) = ploss_mc(
                    &PosteriorSampler::Iw(&post),
                    &sigma,
                    &loss,
                    20_000,
                    &mut stream,
                )
                .unwrap();
                assert!(
                    (mc - exact).abs() <= 4.0 * se,
                    "case {case} {}: exact {exact}, MC {mc} (se {se})",
                    loss.family().name()
                );
            }
        }
    }

    #[test]
    fn closed_form_scalar_matches_quadrature() {
        // p = 1: the posterior is inverse-gamma; integrate the squared
        // error against the density by Simpson's rule in the precision
        // variable t = 1/σ, where the law is Gamma(df/2, rate b/2).
        let prior = IwParams::new(9.0, SymmetricMatrix::from_diag(&[2.5])).unwrap();
        let post = iw_posterior(&prior, 11, &SymmetricMatrix::from_diag(&[0.9])).unwrap();
        let df = post.df();
        let b = post.scale().get(0, 0);
        let sigma0 = 1.2;

        let alpha = df / 2.0;
        let rate = b / 2.0;
        let log_norm = alpha * rate.ln() - crate::specialfn::lgamma(alpha).unwrap();
        let integrand = |t: f64| -> f64 {
            if t <= 0.0 {
                return 0.0;
            }
            let x = 1.0 / t;
            let log_pdf = log_norm + (alpha - 1.0) * t.ln() - rate * t;
            (x - sigma0) * (x - sigma0) * log_pdf.exp()
        };
        let t_max = (alpha + 40.0 * alpha.sqrt() + 40.0) / rate;
        let steps = 400_000;
        let h = t_max / steps as f64;
        let mut quad = integrand(0.0) + integrand(t_max);
        for k in 1..steps {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            quad += w * integrand(k as f64 * h);
        }
        quad *= h / 3.0;

        let loss = LossSpec::squared(LossFamily::SqFrobenius);
        let sigma0_m = SpdMatrix::new(SymmetricMatrix::from_diag(&[sigma0])).unwrap();
        let closed = ploss_closed_form(&post, &sigma0_m, &loss).unwrap();
        assert_relative_eq!(closed, quad, max_relative = 1e-6);
    }

    #[test]
    fn point_mass_ploss_is_exact() {
        let at = SpdMatrix::identity(3);
        let sigma0 = SpdMatrix::new(SymmetricMatrix::identity(3).scale(2.0)).unwrap();
        let loss = LossSpec::squared(LossFamily::SqSpectral);
        let mut stream = derive_stream(82, 0, 0);
        let (value, se) = ploss_mc(
            &PosteriorSampler::PointMass(&at),
            &sigma0,
            &loss,
            0,
            &mut stream,
        )
        .unwrap();
        assert_relative_eq!(value, 1.0, max_relative = 1e-12);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn mc_se_halves_when_draws_quadruple() {
        let mut stream = derive_stream(83, 0, 0);
        let sigma = random_spd(2, 3);
        let data = sample_mvn(&mut stream, &sigma, 30);
        let s = sample_covariance(&data);
        let prior = IwParams::new(6.0, SymmetricMatrix::identity(2)).unwrap();
        let post = iw_posterior(&prior, 30, &s).unwrap();
        let loss = LossSpec::squared(LossFamily::SqSpectral);
        let mut ratios = Vec::new();
        for _ in 0..20 {
            let (_, se_small) = ploss_mc(
                &PosteriorSampler::Iw(&post),
                &sigma,
                &loss,
                500,
                &mut stream,
            )
            .unwrap();
            let (_, se_big) = ploss_mc(
                &PosteriorSampler::Iw(&post),
                &sigma,
                &loss,
                2_000,
                &mut stream,
            )
            .unwrap();
            ratios.push(se_small / se_big);
        }
        let mean_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!(
            (mean_ratio - 2.0).abs() <= 0.6,
            "se ratio {mean_ratio} should be near 2"
        );
    }

    #[test]
    fn prisk_matches_exact_oracle() {
        let sc = base_scenario();
        let estimate = prisk_mc(&sc).unwrap();
        assert_eq!(estimate.inner_method, InnerMethod::ClosedForm);
        let prior = sc.prior.resolve_base(sc.n, sc.p).unwrap();
        let exact = exact_prisk(
            &sc.loss,
            &SpdMatrix::identity(2),
            sc.n,
            &prior,
        )
        .unwrap();
        assert!(
            (estimate.mean - exact).abs() <= 3.0 * estimate.se,
            "MC {} vs exact {exact} (se {})",
            estimate.mean,
            estimate.se
        );
    }

    #[test]
    fn logdet_prisk_is_truth_free() {
        let mut sc = base_scenario();
        sc.loss = LossSpec::squared(LossFamily::SqLogDet);
        sc.replicates = 50;
        let risk_i = prisk_mc(&sc).unwrap();
        sc.truth = TruthSpec::Fixed(
            SpdMatrix::new(SymmetricMatrix::identity(2).scale(5.0)).unwrap(),
        );
        let risk_5i = prisk_mc(&sc).unwrap();
        // Same seeds, data scaled exactly: the P-loss is invariant up to
        // rounding in the rescaled Cholesky pipeline.
        assert_relative_eq!(risk_i.mean, risk_5i.mean, max_relative = 1e-9);

        // And the exact formula ignores Σ0 entirely.
        let prior = sc.prior.resolve_base(sc.n, sc.p).unwrap();
        let mut values = Vec::new();
        for seed in 0..5 {
            let sigma0 = random_spd(2, seed + 30);
            values.push(exact_prisk(&sc.loss, &sigma0, sc.n, &prior).unwrap());
        }
        for v in &values[1..] {
            assert_eq!(*v, values[0]);
        }
    }

    #[test]
    fn exact_logdet_risk_flat_prior_doubles_variance() {
        // ν = 0 makes the posterior and sampling chi-squares identical,
        // so the bias term vanishes and the risk is twice the data-side
        // variance term.
        use crate::specialfn::trigamma;
        let loss = LossSpec::squared(LossFamily::SqLogDet);
        let sigma0 = random_spd(3, 40);
        let prior = IwParams::zero_scale(0.0, 3);
        let got = exact_prisk(&loss, &sigma0, 20, &prior).unwrap();
        let expected: f64 = (0..3)
            .map(|k| 2.0 * trigamma((20.0 - k as f64) / 2.0).unwrap())
            .sum();
        assert_relative_eq!(got, expected, max_relative = 1e-12);
    }

    #[test]
    fn exact_frobenius_risk_matches_scalar_mc() {
        // p = 1: a million replicates of the closed-form P-loss.
        let loss = LossSpec::squared(LossFamily::SqFrobenius);
        let sigma0 = SpdMatrix::new(SymmetricMatrix::from_diag(&[1.5])).unwrap();
        let n = 20;
        let prior = IwParams::new(3.0, SymmetricMatrix::zeros(1)).unwrap();
        let exact = exact_prisk(&loss, &sigma0, n, &prior).unwrap();

        let mut stream = derive_stream(84, 0, 0);
        let reps = 1_000_000;
        let (mut sum, mut sum2) = (0.0, 0.0);
        for _ in 0..reps {
            let mut acc = 0.0;
            for _ in 0..n {
                let x = 1.5_f64.sqrt() * stream.next_gaussian();
                acc += x * x;
            }
            let s = SymmetricMatrix::from_diag(&[acc / n as f64]);
            let post = iw_posterior(&prior, n, &s).unwrap();
            let v = ploss_closed_form(&post, &sigma0, &loss).unwrap();
            sum += v;
            sum2 += v * v;
        }
        let mc_mean = sum / reps as f64;
        let se = ((sum2 / reps as f64 - mc_mean * mc_mean) / reps as f64).sqrt();
        assert!(
            (mc_mean - exact).abs() <= 4.0 * se,
            "exact {exact} vs MC {mc_mean} (se {se})"
        );
    }

    #[test]
    fn exact_logdet_risk_matches_prisk_mc() {
        let mut sc = base_scenario();
        sc.p = 3;
        sc.n = 30;
        sc.prior = PriorSpec::Iw {
            nu: NuRule::Const(2.0),
            a: ScaleRule::Zero,
        };
        sc.truth = TruthSpec::Fixed(random_spd(3, 50));
        sc.loss = LossSpec::squared(LossFamily::SqLogDet);
        sc.replicates = 500;
        let estimate = prisk_mc(&sc).unwrap();
        let prior = sc.prior.resolve_base(sc.n, sc.p).unwrap();
        let exact = exact_prisk(&sc.loss, &random_spd(3, 50), sc.n, &prior).unwrap();
        assert!(
            (estimate.mean - exact).abs() <= 3.0 * estimate.se,
            "MC {} vs exact {exact} (se {})",
            estimate.mean,
            estimate.se
        );
    }

    #[test]
    fn minimal_two_replicate_run() {
        let mut sc = base_scenario();
        sc.replicates = 2;
        let estimate = prisk_mc(&sc).unwrap();
        assert!(estimate.mean.is_finite());
        assert!(estimate.se.is_finite() && estimate.se >= 0.0);
        assert_eq!(estimate.replicates, 2);
    }

    #[test]
    fn rerun_is_bit_identical_and_thread_invariant() {
        let mut sc = base_scenario();
        sc.replicates = 64;
        sc.loss = LossSpec::squared(LossFamily::SqSpectral);
        sc.posterior_draws = 50;
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| prisk_mc(&sc).unwrap());
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| prisk_mc(&sc).unwrap());
        let again = prisk_mc(&sc).unwrap();
        assert_eq!(one.mean.to_bits(), four.mean.to_bits());
        assert_eq!(one.se.to_bits(), four.se.to_bits());
        assert_eq!(one.mean.to_bits(), again.mean.to_bits());
    }

    #[test]
    fn posterior_mean_with_flat_prior_equals_sample_covariance_risk() {
        // ν = p + 1, A = 0 makes the posterior mean exactly S (n a power
        // of two keeps the arithmetic exact), so the risks coincide
        // bitwise.
        let mut sc = base_scenario();
        sc.p = 3;
        sc.n = 32;
        sc.truth = TruthSpec::Fixed(random_spd(3, 60));
        sc.prior = PriorSpec::Iw {
            nu: NuRule::PPlusOne,
            a: ScaleRule::Zero,
        };
        sc.loss = LossSpec::squared(LossFamily::SqSpectral);
        sc.replicates = 40;
        sc.estimator = EstimatorKind::PosteriorMean;
        let bayes = frequentist_risk_mc(&sc).unwrap();
        sc.estimator = EstimatorKind::SampleCovariance;
        let freq = frequentist_risk_mc(&sc).unwrap();
        assert_eq!(bayes.mean.to_bits(), freq.mean.to_bits());
        assert_eq!(bayes.se.to_bits(), freq.se.to_bits());
    }

    #[test]
    fn tapering_beats_sample_covariance_on_diagonal_truth() {
        let mut sc = base_scenario();
        sc.p = 25;
        sc.n = 625;
        sc.truth = TruthSpec::Diagonal { lo: 0.0, hi: 5.0 };
        sc.loss = LossSpec::new(LossFamily::SqSpectral, 1, 1.0).unwrap();
        sc.replicates = 60;
        sc.estimator = EstimatorKind::Tapering { k: None };
        let tapering = frequentist_risk_mc(&sc).unwrap();
        sc.estimator = EstimatorKind::SampleCovariance;
        let sample = frequentist_risk_mc(&sc).unwrap();
        let margin = 2.0 * (tapering.se * tapering.se + sample.se * sample.se).sqrt();
        assert!(
            tapering.mean <= sample.mean + margin,
            "tapering {} vs sample covariance {} (margin {margin})",
            tapering.mean,
            sample.mean
        );
    }

    #[test]
    fn mixture_point_branch_gives_zero_risk_against_identity_truth() {
        // p > γn forces the identity point mass; with the truth fixed at
        // the identity the posterior-mean risk is exactly zero.
        let mut sc = base_scenario();
        sc.p = 4;
        sc.n = 6;
        sc.truth = TruthSpec::Fixed(SpdMatrix::identity(4));
        sc.prior = PriorSpec::Mixture {
            nu: NuRule::P,
            a: ScaleRule::Identity,
            gamma: 0.5,
        };
        sc.estimator = EstimatorKind::PosteriorMean;
        sc.loss = LossSpec::squared(LossFamily::SqFrobenius);
        sc.replicates = 5;
        let estimate = frequentist_risk_mc(&sc).unwrap();
        assert_eq!(estimate.mean, 0.0);
        assert_eq!(estimate.se, 0.0);

        // And the P-risk path reports the point inner method.
        sc.estimator = EstimatorKind::PosteriorLaw;
        let point = prisk_mc(&sc).unwrap();
        assert_eq!(point.inner_method, InnerMethod::Point);
        assert_eq!(point.mean, 0.0);
    }

    #[test]
    fn jensen_posterior_mean_risk_below_prisk() {
        // The posterior mean minimizes the posterior-expected Frobenius
        // loss, so its frequentist risk sits below the P-risk.
        let mut sc = base_scenario();
        sc.p = 3;
        sc.n = 40;
        sc.truth = TruthSpec::Fixed(random_spd(3, 70));
        sc.prior = PriorSpec::Iw {
            nu: NuRule::P,
            a: ScaleRule::Identity,
        };
        sc.replicates = 150;
        sc.estimator = EstimatorKind::PosteriorLaw;
        let prisk = prisk_mc(&sc).unwrap();
        sc.estimator = EstimatorKind::PosteriorMean;
        let freq = frequentist_risk_mc(&sc).unwrap();
        let margin = 2.0 * (prisk.se * prisk.se + freq.se * freq.se).sqrt();
        assert!(
            freq.mean <= prisk.mean + margin,
            "frequentist {} should not exceed P-risk {} (margin {margin})",
            freq.mean,
            prisk.mean
        );
    }

    #[test]
    fn per_replicate_truth_mode_differs_from_shared() {
        let mut sc = base_scenario();
        sc.truth = TruthSpec::Diagonal { lo: 0.5, hi: 3.0 };
        sc.replicates = 20;
        let shared = prisk_mc(&sc).unwrap();
        sc.truth_per_replicate = true;
        let per_rep = prisk_mc(&sc).unwrap();
        assert_ne!(shared.mean.to_bits(), per_rep.mean.to_bits());
    }

    #[test]
    fn validation_catches_predictable_failures() {
        let mut sc = base_scenario();
        sc.replicates = 1;
        assert!(sc.validate().is_err());

        let mut sc = base_scenario();
        sc.p = 5;
        sc.n = 3;
        sc.truth = TruthSpec::Fixed(random_spd(5, 80));
        assert!(matches!(
            sc.validate(),
            Err(Error::SingularPosterior { .. })
        ));

        let mut sc = base_scenario();
        sc.estimator = EstimatorKind::LogDetUmvue;
        assert!(matches!(sc.validate(), Err(Error::UnsupportedLoss { .. })));

        let mut sc = base_scenario();
        sc.estimator = EstimatorKind::LogDetBayes;
        sc.loss = LossSpec::squared(LossFamily::SqLogDet);
        sc.prior = PriorSpec::Mixture {
            nu: NuRule::P,
            a: ScaleRule::Identity,
            gamma: 0.5,
        };
        assert!(matches!(
            sc.validate(),
            Err(Error::UnsupportedPrior { .. })
        ));

        let mut sc = base_scenario();
        sc.loss = LossSpec::squared(LossFamily::SqSpectral);
        sc.posterior_draws = 1;
        assert!(sc.validate().is_err());
    }

    #[test]
    fn replicate_errors_carry_the_index() {
        // Truncated posterior with an impossible window: every replicate
        // fails; the error must report replicate 0.
        let mut sc = base_scenario();
        sc.prior = PriorSpec::TruncatedIw {
            nu: NuRule::N,
            a: ScaleRule::ScaledIdentity(1e-4),
            k1: 50.0,
            k2: 51.0,
        };
        sc.posterior_draws = 10;
        sc.replicates = 4;
        match prisk_mc(&sc) {
            Err(Error::ReplicateFailed { index, source }) => {
                assert_eq!(index, 0);
                assert!(matches!(*source, Error::TruncationExhausted { .. }));
            }
            other => panic!("expected ReplicateFailed, got {other:?}"),
        }
    }

    #[test]
    fn rate_fit_exact_power_laws() {
        let pts: Vec<(f64, f64)> = [100.0, 200.0, 400.0]
            .iter()
            .map(|&n| (n, 7.0 / n))
            .collect();
        let fit = rate_fit(&pts).unwrap();
        assert_relative_eq!(fit.slope, -1.0, max_relative = 1e-12);
        assert_relative_eq!(fit.r2, 1.0, max_relative = 1e-12);
        assert_relative_eq!(fit.intercept, 7.0_f64.ln(), max_relative = 1e-10);

        let pts: Vec<(f64, f64)> = [50.0, 100.0, 200.0, 400.0]
            .iter()
            .map(|&n| (n, 3.0 / (n * n)))
            .collect();
        assert_relative_eq!(rate_fit(&pts).unwrap().slope, -2.0, max_relative = 1e-12);
    }

    #[test]
    fn rate_fit_with_lognormal_noise() {
        let mut stream = derive_stream(85, 0, 0);
        let pts: Vec<(f64, f64)> = (0..8)
            .map(|k| {
                let n = 100.0 * 2.0_f64.powi(k);
                let noise = (0.05 * stream.next_gaussian()).exp();
                (n, 5.0 / n * noise)
            })
            .collect();
        let fit = rate_fit(&pts).unwrap();
        assert!((fit.slope + 1.0).abs() <= 0.1, "slope {}", fit.slope);
    }

    #[test]
    fn rate_fit_degenerate_inputs() {
        assert!(matches!(
            rate_fit(&[(10.0, 1.0), (20.0, 0.5)]),
            Err(Error::DegenerateFit { .. })
        ));
        assert!(matches!(
            rate_fit(&[(10.0, 1.0), (20.0, -0.5), (40.0, 0.2)]),
            Err(Error::DegenerateFit { .. })
        ));
        assert!(matches!(
            rate_fit(&[(10.0, 1.0), (10.0, 0.5), (10.0, 0.2)]),
            Err(Error::DegenerateFit { .. })
        ));
    }
}
