//! Reproducible random sampling.
//!
//! A splittable counter-based generator ([`SeedStream`]) plus the samplers
//! the simulation layer needs: Gaussian/gamma/chi-square scalars,
//! multivariate normal data, Wishart matrices via the Bartlett
//! decomposition, inverse-Wishart draws, eigenvalue-truncated
//! inverse-Wishart via rejection, sample covariance, and the
//! truth-generator presets.
//!
//! Reproducibility rules:
//! - Every stream is a pure function of `(base_seed, scenario_tag,
//!   replicate_index)`; identical triples give identical draw sequences on
//!   every platform (only integer ops and strict IEEE f64 arithmetic).
//! - Streams are never shared: each parallel task derives its own from the
//!   triple, so thread scheduling cannot perturb results.
//! - Samplers choose simple, branch-stable algorithms (polar Box–Muller,
//!   Marsaglia–Tsang) over faster table-driven ones; cross-platform
//!   bit-stability matters more here than peak scalar throughput.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::matcore::{SpdMatrix, SymmetricMatrix};

/// Weyl-sequence increment for the SplitMix64-style generator: the odd
/// integer nearest 2⁶⁴/φ. Also used to space scenario tags and replicate
/// indices apart before finalizing.
const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: a bijective 64-bit mix with full avalanche.
fn splitmix_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A deterministic pseudo-random stream addressed by
/// `(base_seed, scenario_tag, replicate_index)`.
///
/// Internally a SplitMix64 counter: each call advances the state by
/// [`GOLDEN_GAMMA`] and finalizes it. The derivation finalizes *after*
/// folding in the replicate index; without that final mix, stream `i`
/// advanced one step would coincide with stream `i + 1`.
#[derive(Debug, Clone)]
pub struct SeedStream {
    state: u64,
    origin: (u64, u64, u64),
    spare_gaussian: Option<f64>,
}

/// Derives the stream for one `(base_seed, scenario_tag, replicate_index)`
/// triple. Pure; identical triples yield identical streams.
pub fn derive_stream(base_seed: u64, scenario_tag: u64, replicate_index: u64) -> SeedStream {
    let mixed_tag = splitmix_finalize(base_seed ^ scenario_tag.wrapping_mul(GOLDEN_GAMMA));
    let state = splitmix_finalize(mixed_tag.wrapping_add(replicate_index.wrapping_mul(GOLDEN_GAMMA)));
    SeedStream {
        state,
        origin: (base_seed, scenario_tag, replicate_index),
        spare_gaussian: None,
    }
}

impl SeedStream {
    /// The `(base_seed, scenario_tag, replicate_index)` this stream was
    /// derived from; diagnostic only.
    pub fn origin(&self) -> (u64, u64, u64) {
        self.origin
    }

    /// Next raw 64-bit word.
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        splitmix_finalize(self.state)
    }

    /// Uniform on [0, 1) with 53 random mantissa bits.
    pub fn next_f64(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        (self.next_u64() >> 11) as f64 * SCALE
    }

    /// Uniform on [lo, hi).
    pub fn next_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal via polar Box–Muller. The method produces pairs;
    /// the second value is cached and returned on the next call, so draws
    /// stay deterministic regardless of how callers interleave.
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(spare) = self.spare_gaussian.take() {
            return spare;
        }
        loop {
            let u = 2.0 * self.next_f64() - 1.0;
            let v = 2.0 * self.next_f64() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let m = (-2.0 * s.ln() / s).sqrt();
                self.spare_gaussian = Some(v * m);
                return u * m;
            }
        }
    }

    /// Gamma(shape, 1) via the Marsaglia–Tsang squeeze, with the standard
    /// `U^(1/shape)` boost for shape < 1. Supports the fractional shapes
    /// that arise from non-integer degrees of freedom.
    pub fn next_gamma(&mut self, shape: f64) -> Result<f64> {
        if !shape.is_finite() || shape <= 0.0 {
            return Err(Error::Domain {
                what: "gamma shape",
                value: shape,
            });
        }
        if shape < 1.0 {
            let g = self.gamma_shape_ge1(shape + 1.0);
            // Reject u = 0 so the boost never collapses a draw to zero.
            let u = loop {
                let u = self.next_f64();
                if u > 0.0 {
                    break u;
                }
            };
            Ok(g * u.powf(1.0 / shape))
        } else {
            Ok(self.gamma_shape_ge1(shape))
        }
    }

    fn gamma_shape_ge1(&mut self, shape: f64) -> f64 {
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.next_gaussian();
            let t = 1.0 + c * x;
            if t <= 0.0 {
                continue;
            }
            let v = t * t * t;
            let u = self.next_f64();
            // Cheap squeeze first, exact log test as fallback.
            if u < 1.0 - 0.0331 * x * x * x * x {
                return d * v;
            }
            if u.ln() < 0.5 * x * x + d * (1.0 - v + v.ln()) {
                return d * v;
            }
        }
    }

    /// Chi-square with (possibly fractional) df degrees of freedom.
    pub fn next_chi_square(&mut self, df: f64) -> Result<f64> {
        Ok(2.0 * self.next_gamma(0.5 * df)?)
    }
}

/// Wishart parameters under the mean = df·scale convention.
#[derive(Debug, Clone)]
pub struct WishartParams {
    df: f64,
    scale: SpdMatrix,
}

impl WishartParams {
    /// Requires df > p − 1 so the distribution has a density and the
    /// Bartlett construction's chi-square shapes stay positive.
    pub fn new(df: f64, scale: SpdMatrix) -> Result<Self> {
        let p = scale.dim();
        let min = (p - 1) as f64;
        if !df.is_finite() || df <= min {
            return Err(Error::InvalidDf { df, min, p });
        }
        Ok(Self { df, scale })
    }

    pub fn df(&self) -> f64 {
        self.df
    }

    pub fn scale(&self) -> &SpdMatrix {
        &self.scale
    }

    pub fn dim(&self) -> usize {
        self.scale.dim()
    }
}

/// Inverse-Wishart parameters. Improper members (df too small, or a
/// singular/zero scale) are first-class citizens: they define conjugate
/// updates even though they cannot be sampled or normalized.
#[derive(Debug, Clone)]
pub struct IwParams {
    df: f64,
    scale: SymmetricMatrix,
}

impl IwParams {
    /// The scale must be symmetric positive semidefinite; df may be any
    /// finite real (improper values included).
    pub fn new(df: f64, scale: SymmetricMatrix) -> Result<Self> {
        if !df.is_finite() {
            return Err(Error::Domain {
                what: "inverse-Wishart df",
                value: df,
            });
        }
        let decomp = scale.eigh()?;
        let lo = decomp.lambda_min();
        let hi = decomp.lambda_max();
        if lo < -1e-10 * hi.abs().max(1.0) {
            return Err(Error::constraint(format!(
                "inverse-Wishart scale must be positive semidefinite (min eigenvalue {lo:.3e})"
            )));
        }
        Ok(Self { df, scale })
    }

    /// The zero-scale prior with the given df: the improper family used
    /// for reference analyses.
    pub fn zero_scale(df: f64, p: usize) -> Self {
        Self {
            df,
            scale: SymmetricMatrix::zeros(p),
        }
    }

    /// Internal constructor for parameters whose scale's positive
    /// semidefiniteness is already witnessed (e.g. a freshly Cholesky-
    /// checked posterior scale); skips the eigendecomposition re-check.
    pub(crate) fn from_checked_parts(df: f64, scale: SymmetricMatrix) -> Self {
        Self { df, scale }
    }

    pub fn df(&self) -> f64 {
        self.df
    }

    pub fn scale(&self) -> &SymmetricMatrix {
        &self.scale
    }

    pub fn dim(&self) -> usize {
        self.scale.dim()
    }

    /// True iff the parameters define a proper (samplable, normalizable)
    /// distribution: df > p − 1 and a strictly positive-definite scale.
    pub fn proper(&self) -> bool {
        let p = self.dim();
        self.df > (p - 1) as f64 && SpdMatrix::new(self.scale.clone()).is_ok()
    }
}

/// Inverse-Wishart restricted to matrices whose eigenvalues all lie in
/// `[k1, k2]`; sampled by rejection from the base distribution.
#[derive(Debug, Clone)]
pub struct TruncIwParams {
    base: IwParams,
    k1: f64,
    k2: f64,
}

impl TruncIwParams {
    pub fn new(base: IwParams, k1: f64, k2: f64) -> Result<Self> {
        if !(k1 > 0.0 && k2 > k1) || !k1.is_finite() || !k2.is_finite() {
            return Err(Error::constraint(format!(
                "truncation window must satisfy 0 < k1 < k2, got [{k1}, {k2}]"
            )));
        }
        Ok(Self { base, k1, k2 })
    }

    pub fn base(&self) -> &IwParams {
        &self.base
    }

    pub fn window(&self) -> (f64, f64) {
        (self.k1, self.k2)
    }
}

/// Truth-generator presets for simulation studies.
#[derive(Debug, Clone)]
pub enum TruthSpec {
    /// Diagonal covariance with i.i.d. Uniform(lo, hi) variances.
    Diagonal { lo: f64, hi: f64 },
    /// Dense SPD truth `VᵀV` with V entries i.i.d. N(0, scale/p).
    Full { scale: f64 },
    /// A fixed, caller-supplied truth.
    Fixed(SpdMatrix),
}

/// Draws an n×p data matrix with i.i.d. rows N_p(0, Σ0).
///
/// Each row is `L z` with `L` the cached Cholesky factor of Σ0 and `z`
/// standard normal, drawn row-major so the stream order is documented.
pub fn sample_mvn(stream: &mut SeedStream, sigma: &SpdMatrix, n: usize) -> Array2<f64> {
    let p = sigma.dim();
    let l = sigma.cholesky_lower();
    let mut out = Array2::zeros((n, p));
    let mut z = vec![0.0_f64; p];
    for r in 0..n {
        for zj in z.iter_mut() {
            *zj = stream.next_gaussian();
        }
        for i in 0..p {
            let mut acc = 0.0;
            for (k, zk) in z.iter().enumerate().take(i + 1) {
                acc += l[(i, k)] * zk;
            }
            out[(r, i)] = acc;
        }
    }
    out
}

/// Bartlett lower-triangular factor for W_p(df, I): diagonal entries are
/// square roots of chi-squares with df, df−1, …, df−p+1 degrees of
/// freedom, strict lower entries standard normal, drawn row-major.
fn bartlett_factor(stream: &mut SeedStream, df: f64, p: usize) -> Result<Array2<f64>> {
    let mut t = Array2::zeros((p, p));
    for i in 0..p {
        for j in 0..i {
            t[(i, j)] = stream.next_gaussian();
        }
        t[(i, i)] = stream.next_chi_square(df - i as f64)?.sqrt();
    }
    Ok(t)
}

/// Inverts a lower-triangular matrix with nonzero diagonal by forward
/// substitution against the identity.
fn invert_lower_triangular(t: &Array2<f64>) -> Array2<f64> {
    let p = t.nrows();
    let mut inv = Array2::zeros((p, p));
    for col in 0..p {
        for i in col..p {
            let mut acc = if i == col { 1.0 } else { 0.0 };
            for k in col..i {
                acc -= t[(i, k)] * inv[(k, col)];
            }
            inv[(i, col)] = acc / t[(i, i)];
        }
    }
    inv
}

/// Samples W ~ W_p(df, scale), mean = df·scale, by the Bartlett
/// construction: `W = (L T)(L T)ᵀ` with `L = chol(scale)`.
pub fn sample_wishart(stream: &mut SeedStream, params: &WishartParams) -> Result<SpdMatrix> {
    let p = params.dim();
    let t = bartlett_factor(stream, params.df(), p)?;
    let m = params.scale().cholesky_lower().dot(&t);
    SpdMatrix::from_lower_factor(m)
}

/// Samples Σ ~ IW_p(df, A), i.e. Σ⁻¹ ~ W_p(df, A⁻¹).
///
/// Never forms A⁻¹ or inverts a full matrix: with `T` the Bartlett factor,
/// any square root C of A⁻¹ gives `Σ⁻¹ = C T Tᵀ Cᵀ`; choosing
/// `C = L_A⁻ᵀ` (valid because the Bartlett law depends on C only through
/// C Cᵀ) yields `Σ = (L_A T⁻ᵀ)(L_A T⁻ᵀ)ᵀ` with T inverted by triangular
/// substitution.
pub fn sample_inverse_wishart(stream: &mut SeedStream, params: &IwParams) -> Result<SpdMatrix> {
    let p = params.dim();
    if !params.proper() {
        return Err(Error::ImproperPrior {
            df: params.df(),
            p,
        });
    }
    let a_spd = SpdMatrix::new(params.scale().clone())?;
    let t = bartlett_factor(stream, params.df(), p)?;
    let t_inv = invert_lower_triangular(&t);
    let m = a_spd.cholesky_lower().dot(&t_inv.t());
    let sigma = m.dot(&m.t());
    SpdMatrix::new(SymmetricMatrix::symmetrize(sigma))
}

/// Default rejection budget for truncated inverse-Wishart sampling.
pub const DEFAULT_TRUNCATION_ATTEMPTS: u64 = 1_000_000;

/// Samples the eigenvalue-truncated inverse-Wishart by rejection: draw
/// from the base law, accept iff every eigenvalue lies in `[k1, k2]`.
///
/// Errors with [`Error::TruncationExhausted`] (carrying the observed
/// acceptance rate, zero here since nothing was accepted) after
/// `max_attempts` rejections; callers should widen the window or increase
/// the budget.
pub fn sample_truncated_iw(
    stream: &mut SeedStream,
    params: &TruncIwParams,
    max_attempts: u64,
) -> Result<SpdMatrix> {
    sample_truncated_iw_counted(stream, params, max_attempts).map(|(draw, _)| draw)
}

/// Like [`sample_truncated_iw`], but also reports how many base draws the
/// rejection loop consumed, so batch callers can account acceptance rates.
pub fn sample_truncated_iw_counted(
    stream: &mut SeedStream,
    params: &TruncIwParams,
    max_attempts: u64,
) -> Result<(SpdMatrix, u64)> {
    let (k1, k2) = params.window();
    for attempt in 1..=max_attempts {
        let draw = sample_inverse_wishart(stream, params.base())?;
        let decomp = draw.eigh()?;
        if decomp.lambda_min() >= k1 && decomp.lambda_max() <= k2 {
            return Ok((draw, attempt));
        }
    }
    Err(Error::TruncationExhausted {
        attempts: max_attempts,
        acceptance_rate: 0.0,
    })
}

/// Sample covariance `S = (1/n) XᵀX` for mean-zero data (divisor n, not
/// n − 1). Symmetric by construction; SPD almost surely iff n ≥ p.
pub fn sample_covariance(data: &Array2<f64>) -> SymmetricMatrix {
    let n = data.nrows();
    assert!(n >= 1, "sample covariance needs at least one observation");
    let mut prod = data.t().dot(data);
    prod.mapv_inplace(|x| x / n as f64);
    SymmetricMatrix::symmetrize(prod)
}

/// Generates a true covariance from a [`TruthSpec`]. Retries once if the
/// generated matrix fails the SPD check (possible only on measure-zero
/// degeneracies), then errors with [`Error::SingularTruth`].
pub fn gen_truth(stream: &mut SeedStream, spec: &TruthSpec, p: usize) -> Result<SpdMatrix> {
    if let TruthSpec::Fixed(sigma) = spec {
        if sigma.dim() != p {
            return Err(Error::DimMismatch {
                expected: p,
                actual: sigma.dim(),
            });
        }
        return Ok(sigma.clone());
    }
    for _ in 0..2 {
        let candidate = match spec {
            TruthSpec::Diagonal { lo, hi } => {
                let diag: Vec<f64> = (0..p).map(|_| stream.next_uniform(*lo, *hi)).collect();
                SpdMatrix::new(SymmetricMatrix::from_diag(&diag))
            }
            TruthSpec::Full { scale } => {
                let sd = (scale / p as f64).sqrt();
                let mut v = Array2::zeros((p, p));
                for i in 0..p {
                    for j in 0..p {
                        v[(i, j)] = sd * stream.next_gaussian();
                    }
                }
                SpdMatrix::new(SymmetricMatrix::symmetrize(v.t().dot(&v)))
            }
            TruthSpec::Fixed(_) => unreachable!("handled above"),
        };
        if let Ok(sigma) = candidate {
            return Ok(sigma);
        }
    }
    Err(Error::SingularTruth { p })
}
