//! Minimax lower bounds and the finite-n inequality checks behind them.
//!
//! The two-point (Le Cam) route drives the spectral-norm bound: a pair of
//! covariances ε apart in operator norm, an exact chi-square-style
//! affinity ξ over a hypercube of directions, and the testing inequality
//! `(Δθ)²/(1+√ξ)²`. The hypercube (Assouad) route drives the Frobenius
//! bound from per-coordinate total-variation affinities. The remaining
//! operations are small exact identities (Gaussian KL, chi-square
//! affinity determinant, log-det Taylor remainder) plus a Monte Carlo
//! check of Wishart extreme-eigenvalue tail bounds.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::matcore::{SpdMatrix, SymmetricMatrix};
use crate::randmat::{sample_wishart, SeedStream, WishartParams};
use crate::specialfn::lgamma;

/// Largest dimension the pair-enumeration oracle accepts (4^p pairs).
pub const BRUTEFORCE_MAX_P: usize = 12;

/// 95% normal quantile used for the Wilson intervals in tail reports.
const WILSON_Z: f64 = 1.959_963_984_540_054;

/// Hypercube construction parameters for the Frobenius-loss lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct HypercubeSpec {
    pub p: usize,
    pub n: usize,
    /// Scale of the covariance class the hypercube sits inside.
    pub tau: f64,
    /// Perturbation tuning constant; the construction needs c1 ≤ 1/3.
    pub c1: f64,
}

/// The mixing average ξ = E[(1 − eps²⟨u,v⟩²)^{−n/2}] over independent
/// uniform sign vectors u, v ∈ {±1/√p}^p, computed exactly: ⟨u,v⟩ only
/// depends on the number of agreeing coordinates B ~ Bin(p, 1/2), so the
/// sum has p+1 terms. Everything runs in log space so p up to 10⁵ is fine.
pub fn xi_exact(p: usize, n: usize, eps: f64) -> Result<f64> {
    if p < 1 {
        return Err(Error::constraint("xi_exact requires p >= 1"));
    }
    if !eps.is_finite() || eps <= 0.0 || eps >= 1.0 {
        return Err(Error::Domain {
            what: "xi requires 0 < eps < 1",
            value: eps,
        });
    }
    let ln_half_pow = -(p as f64) * std::f64::consts::LN_2;
    let lg_p1 = lgamma(p as f64 + 1.0)?;
    let mut terms = Vec::with_capacity(p + 1);
    for b in 0..=p {
        let log_binom = lg_p1 - lgamma(b as f64 + 1.0)? - lgamma((p - b) as f64 + 1.0)?;
        let dot = 2.0 * b as f64 / p as f64 - 1.0;
        let inside = 1.0 - eps * eps * dot * dot;
        terms.push(log_binom + ln_half_pow - 0.5 * n as f64 * inside.ln());
    }
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    Ok((max + sum.ln()).exp())
}

/// Enumeration oracle for [`xi_exact`]: averages the integrand over all
/// 4^p ordered sign-vector pairs. Deliberately naive.
pub fn xi_bruteforce(p: usize, n: usize, eps: f64) -> Result<f64> {
    if p == 0 || p > BRUTEFORCE_MAX_P {
        return Err(Error::TooLarge {
            p,
            max: BRUTEFORCE_MAX_P,
        });
    }
    if !eps.is_finite() || eps <= 0.0 || eps >= 1.0 {
        return Err(Error::Domain {
            what: "xi requires 0 < eps < 1",
            value: eps,
        });
    }
    let count = 1_u64 << p;
    // Terms span many orders of magnitude once eps approaches 1, so a
    // naive accumulation would cost the oracle several digits; Neumaier
    // compensation keeps the enumeration error at a couple of ulps.
    let mut sum = 0.0;
    let mut compensation = 0.0;
    for u in 0..count {
        for v in 0..count {
            let disagreements = (u ^ v).count_ones() as f64;
            let dot = 1.0 - 2.0 * disagreements / p as f64;
            let term = (1.0 - eps * eps * dot * dot).powf(-0.5 * n as f64);
            let t = sum + term;
            if sum.abs() >= term.abs() {
                compensation += (sum - t) + term;
            } else {
                compensation += (term - t) + sum;
            }
            sum = t;
        }
    }
    Ok((sum + compensation) / (count as f64 * count as f64))
}

/// Two-point testing bound: no estimator beats `(θ₁−θ₀)²/(1+√ξ)²` in
/// worst-case quadratic risk over the pair, where ξ is the mixing
/// average of the likelihood-ratio second moment.
pub fn lecam_two_point(theta0: f64, theta1: f64, xi: f64) -> f64 {
    let delta = theta1 - theta0;
    let root = 1.0 + xi.max(1.0).sqrt();
    delta * delta / (root * root)
}

/// Spectral-norm minimax lower bound over the class with eigenvalues in
/// [τ₁, τ₂]: perturbations of size ε = c√(p_eff/n) around τ₁·I, with the
/// excess dimensions beyond n contributing nothing (p_eff = min(p, n)).
pub fn spectral_lower_bound(p: usize, n: usize, tau1: f64, tau2: f64, c: f64) -> Result<f64> {
    if p < 1 || n < 1 {
        return Err(Error::constraint("spectral bound requires p, n >= 1"));
    }
    if !(tau1 > 0.0 && tau2 > tau1 && tau2.is_finite()) {
        return Err(Error::constraint(format!(
            "spectral bound requires 0 < tau1 < tau2, got ({tau1}, {tau2})"
        )));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::constraint(format!(
            "spectral bound requires c > 0, got {c}"
        )));
    }
    let p_eff = p.min(n);
    let ratio = (p_eff as f64 / n as f64).sqrt();
    let eps = c * ratio;
    let eps_cap = (tau2 / tau1 - 1.0).min(1.0);
    if eps >= 1.0 || eps > eps_cap {
        return Err(Error::ConstraintViolated {
            message: format!(
                "perturbation eps = {eps:.6} exceeds min(1, tau2/tau1 - 1) = {eps_cap:.6}; \
                 the largest admissible c here is {:.6}",
                eps_cap / ratio
            ),
        });
    }
    let xi = xi_exact(p_eff, n, eps)?;
    let root = 1.0 + xi.sqrt();
    Ok(tau2 * tau2 * eps * eps / (4.0 * root * root))
}

/// Kullback–Leibler divergence between n-sample centered Gaussian models:
/// `(n/2)[tr(Σ′Σ⁻¹) − log det(Σ′Σ⁻¹) − p]`.
pub fn gaussian_kl(sigma_prime: &SpdMatrix, sigma: &SpdMatrix, n: usize) -> Result<f64> {
    let p = sigma.dim();
    if sigma_prime.dim() != p {
        return Err(Error::DimMismatch {
            expected: p,
            actual: sigma_prime.dim(),
        });
    }
    let ratio = sigma.solve_matrix(sigma_prime.entries())?;
    let trace: f64 = (0..p).map(|i| ratio[(i, i)]).sum();
    let logdet = sigma_prime.log_det() - sigma.log_det();
    let value = 0.5 * n as f64 * (trace - logdet - p as f64);
    // x − ln x − 1 ≥ 0 termwise; only rounding can push the sum below 0.
    Ok(value.max(0.0))
}

/// Assouad-type Frobenius lower bound over a banded sign hypercube:
/// `(1/4)·(2c₁²c₂²/n)·((2p−k)(k−1)/4)·max(0, 1 − √(K/2))` with
/// c₂ = τ/(1+c₁), k = min(p, ⌊√n⌋), and K the exact Gaussian KL of a
/// one-coordinate flip, K = −(n/2)·ln(1 − c₁²/n). A hypercube needs at
/// least two active bands; below that (k < 2) the construction is empty
/// and the bound is zero.
pub fn assouad_frobenius_bound(spec: &HypercubeSpec) -> Result<f64> {
    if spec.p < 1 || spec.n < 1 {
        return Err(Error::constraint("assouad bound requires p, n >= 1"));
    }
    if !(spec.tau > 0.0 && spec.tau.is_finite()) {
        return Err(Error::constraint(format!(
            "assouad bound requires tau > 0, got {}",
            spec.tau
        )));
    }
    if !(spec.c1 > 0.0 && spec.c1 <= 1.0 / 3.0) {
        return Err(Error::ConstraintViolated {
            message: format!(
                "hypercube tuning constant must lie in (0, 1/3], got {}",
                spec.c1
            ),
        });
    }
    let k = spec.p.min((spec.n as f64).sqrt().floor() as usize);
    if k < 2 {
        return Ok(0.0);
    }
    let n = spec.n as f64;
    let c1 = spec.c1;
    let c2 = spec.tau / (1.0 + c1);
    let kl_flip = -(n / 2.0) * (1.0 - c1 * c1 / n).ln();
    let affinity_lb = (1.0 - (kl_flip / 2.0).sqrt()).max(0.0);
    let pairs = (2.0 * spec.p as f64 - k as f64) * (k as f64 - 1.0) / 4.0;
    Ok(0.25 * (2.0 * c1 * c1 * c2 * c2 / n) * pairs * affinity_lb)
}

/// Determinant of a general square matrix by LU with partial pivoting.
/// The chi-square affinity needs this because its matrix argument is a
/// product of symmetric factors and not itself symmetric.
fn lu_det(mut a: Array2<f64>) -> f64 {
    let p = a.nrows();
    let mut det = 1.0;
    for col in 0..p {
        let mut pivot_row = col;
        let mut pivot_abs = a[(col, col)].abs();
        for row in (col + 1)..p {
            if a[(row, col)].abs() > pivot_abs {
                pivot_abs = a[(row, col)].abs();
                pivot_row = row;
            }
        }
        if pivot_abs == 0.0 {
            return 0.0;
        }
        if pivot_row != col {
            for j in 0..p {
                a.swap((col, j), (pivot_row, j));
            }
            det = -det;
        }
        let pivot = a[(col, col)];
        det *= pivot;
        for row in (col + 1)..p {
            let factor = a[(row, col)] / pivot;
            for j in (col + 1)..p {
                a[(row, j)] -= factor * a[(col, j)];
            }
        }
    }
    det
}

/// Chi-square-style affinity `∫ f₁f₂/f₀` for centered Gaussians:
/// `det(I − Σ₀⁻¹(Σ₁−Σ₀)Σ₀⁻¹(Σ₂−Σ₀))^{−1/2}`, defined whenever
/// Σ₁⁻¹ + Σ₂⁻¹ − Σ₀⁻¹ is positive definite.
pub fn chi_affinity(sigma0: &SpdMatrix, sigma1: &SpdMatrix, sigma2: &SpdMatrix) -> Result<f64> {
    let p = sigma0.dim();
    for s in [sigma1, sigma2] {
        if s.dim() != p {
            return Err(Error::DimMismatch {
                expected: p,
                actual: s.dim(),
            });
        }
    }
    let precision_sum = sigma1
        .inverse()?
        .sym()
        .add(sigma2.inverse()?.sym())?
        .sub(sigma0.inverse()?.sym())?;
    if SpdMatrix::new(precision_sum).is_err() {
        return Err(Error::ConditionViolated);
    }
    let d1 = sigma1.sym().sub(sigma0.sym())?;
    let d2 = sigma2.sym().sub(sigma0.sym())?;
    // Σ₀⁻¹ D₁ Σ₀⁻¹ D₂ assembled with SPD solves instead of explicit
    // inverse squaring.
    let t1 = sigma0.solve_matrix(d1.entries())?;
    let t2 = sigma0.solve_matrix(d2.entries())?;
    let product = t1.dot(&t2);
    let mut m = Array2::<f64>::eye(p);
    m -= &product;
    let det = lu_det(m);
    if det <= 0.0 {
        return Err(Error::ConditionViolated);
    }
    Ok(det.powf(-0.5))
}

/// Taylor remainder of the log-determinant: `R = tr(B) − log det(I+B)`,
/// returned together with ‖B‖_F² (its apriori upper bound for small B).
/// Requires I + tB positive definite along t ∈ {0, ½, 1}.
pub fn logdet_remainder(b: &SymmetricMatrix) -> Result<(f64, f64)> {
    let p = b.dim();
    let identity = SymmetricMatrix::identity(p);
    let half = identity.add(&b.scale(0.5))?;
    SpdMatrix::new(half)?;
    let full = SpdMatrix::new(identity.add(b)?)?;
    let trace = b.trace();
    let remainder = trace - full.log_det();
    let frob2 = b.frobenius_norm().powi(2);
    // The remainder is a sum of x − ln(1+x) ≥ 0 terms; rounding alone can
    // leave it a hair below zero when B ≈ 0.
    let snapped = if remainder < 0.0 && remainder >= -1e-9 * (1.0 + trace.abs()) {
        0.0
    } else {
        remainder
    };
    Ok((snapped, frob2))
}

/// One tail check of [`wishart_tail_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct TailCheck {
    /// Eigenvalue threshold the tail is measured at.
    pub threshold: f64,
    /// Proven upper bound for the tail probability.
    pub bound: f64,
    /// Empirical tail frequency.
    pub empirical: f64,
    /// 95% Wilson interval for the tail probability.
    pub ci_low: f64,
    pub ci_high: f64,
    /// Empirical frequency does not exceed the bound.
    pub pass: bool,
    /// The Wilson upper limit exceeds the bound (pass with a caveat).
    pub warn: bool,
}

/// Monte Carlo comparison of extreme-eigenvalue tail frequencies of
/// Σ = W/ν, W ~ Wishart_p(ν, I), against their proven bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct TailReport {
    pub p: usize,
    pub nu: f64,
    pub draws: usize,
    pub lambda_max: TailCheck,
    pub lambda_min: TailCheck,
}

impl TailReport {
    /// True when both empirical frequencies sit below their bounds.
    pub fn pass(&self) -> bool {
        self.lambda_max.pass && self.lambda_min.pass
    }
}

/// 95% Wilson score interval for a binomial proportion.
fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    let n = trials as f64;
    let x = successes as f64;
    let z = WILSON_Z;
    let denom = n + z * z;
    let center = (x + z * z / 2.0) / denom;
    let half = z * (x * (n - x) / n + z * z / 4.0).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn tail_check(exceed: u64, draws: usize, threshold: f64, bound: f64) -> TailCheck {
    let empirical = exceed as f64 / draws as f64;
    let (ci_low, ci_high) = wilson_interval(exceed, draws as u64);
    TailCheck {
        threshold,
        bound,
        empirical,
        ci_low,
        ci_high,
        pass: empirical <= bound,
        warn: ci_high > bound,
    }
}

/// Samples `draws` normalized Wisharts and reports how often the extreme
/// eigenvalues cross the concentration thresholds
/// `λmax ≥ (2+√(p/ν))²` (bound 2e^{−ν/2}) and
/// `λmin ≤ (1−√(p/ν))²/4` (bound 2e^{−ν(1−√(p/ν))²/8}).
pub fn wishart_tail_report(
    p: usize,
    nu: f64,
    draws: usize,
    stream: &mut SeedStream,
) -> Result<TailReport> {
    if nu < p as f64 {
        return Err(Error::InvalidDf {
            df: nu,
            min: p as f64,
            p,
        });
    }
    if draws < 1 {
        return Err(Error::constraint("tail report requires draws >= 1"));
    }
    let params = WishartParams::new(nu, SpdMatrix::identity(p))?;
    let r = (p as f64 / nu).sqrt();
    let upper_threshold = (2.0 + r) * (2.0 + r);
    let lower_threshold = (1.0 - r) * (1.0 - r) / 4.0;
    let upper_bound = 2.0 * (-nu / 2.0).exp();
    let lower_bound = 2.0 * (-nu * (1.0 - r) * (1.0 - r) / 8.0).exp();
    let mut upper_exceed = 0_u64;
    let mut lower_exceed = 0_u64;
    for _ in 0..draws {
        let w = sample_wishart(stream, &params)?;
        let eig = w.sym().scale(1.0 / nu).eigh()?;
        if eig.lambda_max() >= upper_threshold {
            upper_exceed += 1;
        }
        if eig.lambda_min() <= lower_threshold {
            lower_exceed += 1;
        }
    }
    Ok(TailReport {
        p,
        nu,
        draws,
        lambda_max: tail_check(upper_exceed, draws, upper_threshold, upper_bound),
        lambda_min: tail_check(lower_exceed, draws, lower_threshold, lower_bound),
    })
}
