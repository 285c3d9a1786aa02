//! Posterior updates and estimators.
//!
//! The conjugate core: a normal sample with mean zero and an
//! inverse-Wishart prior IW(ν, A) yield the posterior IW(n + ν, nS + A),
//! where S is the sample covariance. On top of that sit the closed-form
//! posterior moments (mean, elementwise variances, log-determinant
//! moments), the dimension-gated mixture posterior, the eigenvalue-
//! truncated posterior mean (Monte Carlo only — no closed form exists
//! under truncation), the tapering point estimator, and the three
//! log-determinant point estimators (MLE, bias-corrected UMVUE, Bayes).
//!
//! Improper priors (ν as small as 0, zero scale) are first-class: the
//! update formula needs no normalizability, so each operation checks only
//! its own existence condition and errors precisely when that fails.

use crate::error::{Error, Result};
use crate::matcore::{SpdMatrix, SymmetricMatrix};
use crate::randmat::{
    sample_inverse_wishart, sample_truncated_iw_counted, IwParams, SeedStream, TruncIwParams,
};
use crate::specialfn::{digamma, trigamma};

/// Conjugate inverse-Wishart posterior IW(n + ν, nS + A) with an
/// SPD-witnessed scale (kept as an [`SpdMatrix`] because the
/// log-determinant and sampling paths reuse its Cholesky factor).
#[derive(Debug, Clone)]
pub struct PosteriorIw {
    params: IwParams,
    scale_spd: SpdMatrix,
    n: usize,
}

impl PosteriorIw {
    /// Posterior degrees of freedom, n + ν.
    pub fn df(&self) -> f64 {
        self.params.df()
    }

    /// Posterior scale nS + A.
    pub fn scale(&self) -> &SymmetricMatrix {
        self.params.scale()
    }

    /// The scale with its SPD witness.
    pub fn scale_spd(&self) -> &SpdMatrix {
        &self.scale_spd
    }

    /// Dimension p.
    pub fn p(&self) -> usize {
        self.params.dim()
    }

    /// Sample size the posterior conditioned on.
    pub fn n(&self) -> usize {
        self.n
    }

    /// The underlying inverse-Wishart parameters.
    pub fn params(&self) -> &IwParams {
        &self.params
    }

    /// The recurrent quantity m = n + ν − p that gates every posterior
    /// moment (mean needs m > 1, element variances m > 3).
    pub fn m(&self) -> f64 {
        self.df() - self.p() as f64
    }

    /// Draws one Σ from the posterior.
    pub fn sample(&self, stream: &mut SeedStream) -> Result<SpdMatrix> {
        sample_inverse_wishart(stream, &self.params)
    }
}

/// Conjugate update: prior IW(ν, A) plus n mean-zero observations with
/// sample covariance S give IW(n + ν, nS + A).
///
/// Errors with [`Error::SingularPosterior`] when nS + A is not positive
/// definite (e.g. an improper zero-scale prior with n < p).
pub fn iw_posterior(prior: &IwParams, n: usize, s: &SymmetricMatrix) -> Result<PosteriorIw> {
    let p = prior.dim();
    if s.dim() != p {
        return Err(Error::DimMismatch {
            expected: p,
            actual: s.dim(),
        });
    }
    let scale = s.scale(n as f64).add(prior.scale())?;
    let scale_spd = SpdMatrix::new(scale.clone()).map_err(|_| Error::SingularPosterior {
        n,
        p,
        nu: prior.df(),
    })?;
    Ok(PosteriorIw {
        params: IwParams::from_checked_parts(prior.df() + n as f64, scale),
        scale_spd,
        n,
    })
}

/// Posterior mean (nS + A) / (n + ν − p − 1); requires n + ν − p − 1 > 0.
pub fn posterior_mean(post: &PosteriorIw) -> Result<SymmetricMatrix> {
    let denom = post.m() - 1.0;
    if denom <= 0.0 {
        return Err(Error::MomentUndefined {
            moment: "posterior mean",
            requirement: "n + \u{3bd} - p - 1 > 0",
            actual: denom,
        });
    }
    Ok(post.scale().scale(1.0 / denom))
}

/// Closed-form posterior mean and elementwise variances.
///
/// With b = nS + A and m = n + ν − p:
/// `E(σᵢⱼ | X) = bᵢⱼ / (m − 1)` and
/// `Var(σᵢⱼ | X) = [(m+1) bᵢⱼ² + (m−1) bᵢᵢ bⱼⱼ] / [m (m−1)² (m−3)]`;
/// the variances require m > 3.
pub fn posterior_element_moments(
    post: &PosteriorIw,
) -> Result<(SymmetricMatrix, SymmetricMatrix)> {
    let m = post.m();
    if m <= 3.0 {
        return Err(Error::MomentUndefined {
            moment: "posterior element variance",
            requirement: "n + \u{3bd} - p > 3",
            actual: m,
        });
    }
    let mean = posterior_mean(post)?;
    let p = post.p();
    let b = post.scale();
    let denom = m * (m - 1.0) * (m - 1.0) * (m - 3.0);
    let mut var = SymmetricMatrix::zeros(p);
    let mut entries = var.entries().clone();
    for i in 0..p {
        for j in 0..=i {
            let bij = b.get(i, j);
            let v = ((m + 1.0) * bij * bij + (m - 1.0) * b.get(i, i) * b.get(j, j)) / denom;
            entries[(i, j)] = v;
            entries[(j, i)] = v;
        }
    }
    var = SymmetricMatrix::symmetrize(entries);
    Ok((mean, var))
}

/// Branch taken by the dimension-gated mixture posterior.
#[derive(Debug, Clone)]
pub enum MixtureBranch {
    /// Usable-dimension regime p ≤ γn: the conjugate posterior.
    Iw(PosteriorIw),
    /// Overflow regime p > γn: the prior collapses to a point mass at the
    /// identity and the data are ignored.
    PointMass(SpdMatrix),
}

/// Posterior for the mixture prior that uses the inverse-Wishart when
/// p ≤ γn and a point mass at I_p otherwise.
#[derive(Debug, Clone)]
pub struct PosteriorMixture {
    branch: MixtureBranch,
    gamma: f64,
}

impl PosteriorMixture {
    pub fn branch(&self) -> &MixtureBranch {
        &self.branch
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// True when the posterior is the identity point mass.
    pub fn is_point_mass(&self) -> bool {
        matches!(self.branch, MixtureBranch::PointMass(_))
    }
}

/// Computes the mixture posterior. The branch is a pure function of
/// (p, n, γ): the point mass is selected exactly when p > γn.
pub fn mixture_posterior(
    prior: &IwParams,
    gamma: f64,
    n: usize,
    s: &SymmetricMatrix,
) -> Result<PosteriorMixture> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::constraint(format!(
            "mixture threshold must lie in (0, 1), got {gamma}"
        )));
    }
    let p = prior.dim();
    let branch = if p as f64 > gamma * n as f64 {
        MixtureBranch::PointMass(SpdMatrix::identity(p))
    } else {
        MixtureBranch::Iw(iw_posterior(prior, n, s)?)
    };
    Ok(PosteriorMixture { branch, gamma })
}

/// Tapering weight for off-diagonal distance d at even bandwidth k:
/// flat at 1 up to k/2, linearly decaying to 0 at k.
pub fn taper_weight(d: usize, k: usize) -> f64 {
    debug_assert!(k >= 2 && k % 2 == 0);
    if 2 * d <= k {
        1.0
    } else if d < k {
        2.0 - 2.0 * d as f64 / k as f64
    } else {
        0.0
    }
}

/// Tapering estimator: entrywise `Σ̂ᵢⱼ = w(|i−j|) Sᵢⱼ` with the
/// [`taper_weight`] profile. The diagonal (d = 0) is always kept.
///
/// Errors with [`Error::OddK`] unless k is an even integer ≥ 2.
pub fn tapering_estimator(s: &SymmetricMatrix, k: usize) -> Result<SymmetricMatrix> {
    if k < 2 || k % 2 != 0 {
        return Err(Error::OddK { k });
    }
    let p = s.dim();
    let mut entries = s.entries().clone();
    for i in 0..p {
        for j in 0..p {
            let d = i.abs_diff(j);
            entries[(i, j)] *= taper_weight(d, k);
        }
    }
    Ok(SymmetricMatrix::symmetrize(entries))
}

/// Default tapering bandwidth for sample size n: √n rounded to the
/// nearest even integer, floored at 2.
pub fn default_tapering_bandwidth(n: usize) -> usize {
    let k = 2 * ((n as f64).sqrt() / 2.0).round() as usize;
    k.max(2)
}

/// Closed-form posterior moments of log det Σ.
///
/// Under the posterior IW(df, B), det(B Σ⁻¹) is a product of independent
/// chi-squares with df, df−1, …, df−p+1 degrees of freedom, so
/// `E(log det Σ | X) = log det B − Σ_{k=0}^{p-1} [ψ((df−k)/2) + ln 2]` and
/// `Var(log det Σ | X) = Σ_{k=0}^{p-1} ψ'((df−k)/2)`.
pub fn logdet_posterior_moments(post: &PosteriorIw) -> Result<(f64, f64)> {
    let p = post.p();
    let df = post.df();
    if df <= (p - 1) as f64 {
        return Err(Error::SingularPosterior {
            n: post.n(),
            p,
            nu: df - post.n() as f64,
        });
    }
    let ln2 = std::f64::consts::LN_2;
    let mut mean = post.scale_spd().log_det();
    let mut var = 0.0;
    for k in 0..p {
        let half = (df - k as f64) / 2.0;
        mean -= digamma(half)? + ln2;
        var += trigamma(half)?;
    }
    Ok((mean, var))
}

/// Log-determinant point estimators.
#[derive(Debug, Clone)]
pub enum LogDetEstimator {
    /// Plug-in maximum likelihood: log det S.
    Mle,
    /// Uniformly minimum-variance unbiased estimator:
    /// `log det S + p ln(n/2) − Σ_{j=0}^{p-1} ψ((n−j)/2)`.
    Umvue,
    /// Posterior mean of log det Σ under the given inverse-Wishart prior.
    BayesIw(IwParams),
}

impl LogDetEstimator {
    /// Short stable name used in CSV output.
    pub fn name(&self) -> &'static str {
        match self {
            LogDetEstimator::Mle => "logdet_mle",
            LogDetEstimator::Umvue => "logdet_umvue",
            LogDetEstimator::BayesIw(_) => "logdet_bayes",
        }
    }
}

/// Evaluates a log-determinant point estimate from the sample covariance.
/// S must be positive definite (in the model this requires n ≥ p).
pub fn logdet_point_estimate(
    kind: &LogDetEstimator,
    s: &SymmetricMatrix,
    n: usize,
) -> Result<f64> {
    let p = s.dim();
    let s_spd = SpdMatrix::new(s.clone())?;
    match kind {
        LogDetEstimator::Mle => Ok(s_spd.log_det()),
        LogDetEstimator::Umvue => {
            let mut correction = p as f64 * (n as f64 / 2.0).ln();
            for j in 0..p {
                correction -= digamma((n - j) as f64 / 2.0)?;
            }
            Ok(s_spd.log_det() + correction)
        }
        LogDetEstimator::BayesIw(prior) => {
            let post = iw_posterior(prior, n, s)?;
            Ok(logdet_posterior_moments(&post)?.0)
        }
    }
}

/// Monte Carlo estimate of the truncated-posterior mean.
#[derive(Debug, Clone)]
pub struct TruncatedMeanEstimate {
    /// Average of the accepted draws.
    pub mean: SymmetricMatrix,
    /// Per-entry Monte Carlo standard errors; `None` when draws = 1,
    /// where a standard error is undefined.
    pub se: Option<SymmetricMatrix>,
    /// Accepted draws divided by total base-posterior draws consumed.
    pub acceptance_rate: f64,
}

/// Averages `draws` eigenvalue-truncated posterior samples. No closed
/// form exists under truncation, so this is Monte Carlo by construction;
/// `max_attempts_per_draw` bounds each rejection loop.
pub fn truncated_posterior_mean_mc(
    params: &TruncIwParams,
    draws: usize,
    max_attempts_per_draw: u64,
    stream: &mut SeedStream,
) -> Result<TruncatedMeanEstimate> {
    if draws == 0 {
        return Err(Error::constraint("truncated posterior mean needs draws >= 1"));
    }
    let p = params.base().dim();
    let mut sum = SymmetricMatrix::zeros(p).entries().clone();
    let mut sum_sq = sum.clone();
    let mut attempts_total = 0u64;
    for accepted in 0..draws {
        match sample_truncated_iw_counted(stream, params, max_attempts_per_draw) {
            Ok((draw, attempts)) => {
                attempts_total += attempts;
                for ((i, j), &x) in draw.entries().indexed_iter() {
                    sum[(i, j)] += x;
                    sum_sq[(i, j)] += x * x;
                }
            }
            Err(Error::TruncationExhausted { attempts, .. }) => {
                let consumed = attempts_total + attempts;
                return Err(Error::TruncationExhausted {
                    attempts: consumed,
                    acceptance_rate: accepted as f64 / consumed as f64,
                });
            }
            Err(other) => return Err(other),
        }
    }
    let nd = draws as f64;
    let mean_entries = sum.mapv(|x| x / nd);
    let se = if draws >= 2 {
        let mut se_entries = sum_sq;
        for ((i, j), v) in se_entries.indexed_iter_mut() {
            let mean = mean_entries[(i, j)];
            let var = (*v / nd - mean * mean).max(0.0) * nd / (nd - 1.0);
            *v = (var / nd).sqrt();
        }
        Some(SymmetricMatrix::symmetrize(se_entries))
    } else {
        None
    };
    Ok(TruncatedMeanEstimate {
        mean: SymmetricMatrix::symmetrize(mean_entries),
        se,
        acceptance_rate: draws as f64 / attempts_total as f64,
    })
}

/// Rules mapping (n, p) to the prior degrees of freedom ν.
#[derive(Debug, Clone, PartialEq)]
pub enum NuRule {
    /// A fixed constant.
    Const(f64),
    /// ν = √(n/p).
    SqrtNOverP,
    /// ν = p.
    P,
    /// ν = n.
    N,
    /// ν = p + 1 (makes the posterior mean the sample covariance when the
    /// prior scale is zero).
    PPlusOne,
    /// ν = 0 (makes the Bayes log-det estimator the UMVUE when the prior
    /// scale is zero).
    Zero,
}

impl NuRule {
    /// Resolves the rule at a concrete (n, p).
    pub fn resolve(&self, n: usize, p: usize) -> f64 {
        match self {
            NuRule::Const(c) => *c,
            NuRule::SqrtNOverP => (n as f64 / p as f64).sqrt(),
            NuRule::P => p as f64,
            NuRule::N => n as f64,
            NuRule::PPlusOne => (p + 1) as f64,
            NuRule::Zero => 0.0,
        }
    }
}
