//! Log-gamma, digamma, and trigamma on the positive half-line.
//!
//! All three use the same scheme: recurrence-shift the argument upward
//! until it clears [`ASYMPTOTIC_THRESHOLD`], then evaluate a truncated
//! Bernoulli asymptotic series. With the threshold at 10 the first
//! neglected term is below 1e-15 relative, so accuracy is uniform —
//! including the hard small-argument region, where the shift terms
//! (1/x, ln x, 1/x²) dominate and carry full precision.
//!
//! Arguments must be finite and strictly positive; anything else is a
//! domain error, never a NaN that propagates silently.

use std::sync::atomic::{AtomicBool, Ordering};

use crate::error::{Error, Result};

/// Arguments at or above this are handled directly by the asymptotic
/// series; smaller ones are shifted up by the recurrences
/// `ln Γ(x+1) = ln Γ(x) + ln x`, `ψ(x+1) = ψ(x) + 1/x²`-family identities.
const ASYMPTOTIC_THRESHOLD: f64 = 10.0;

/// `ln(2π)/2`, the constant term of the Stirling series.
const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_74;

/// Stirling tail for `ln Γ`: coefficients of `y^{-(2k-1)}`, namely
/// `B_{2k} / (2k (2k-1))` for k = 1..=7.
const LGAMMA_TAIL: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
];

/// Digamma tail: coefficients of `y^{-2k}`, namely `B_{2k} / (2k)`.
const DIGAMMA_TAIL: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32_760.0,
    1.0 / 12.0,
];

/// Trigamma tail: coefficients of `y^{-(2k+1)}`, namely `B_{2k}` itself.
const TRIGAMMA_TAIL: [f64; 7] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
];

/// When set, [`digamma`] returns its result shifted by +1e-3. This exists
/// solely so the self-check machinery can demonstrate that it detects an
/// injected numerical fault; it must never be enabled in real use.
static DIGAMMA_FAULT: AtomicBool = AtomicBool::new(false);

/// Test hook controlling the deliberate digamma fault. Hidden from docs;
/// see [`DIGAMMA_FAULT`].
#[doc(hidden)]
pub fn set_digamma_fault(enabled: bool) {
    DIGAMMA_FAULT.store(enabled, Ordering::SeqCst);
}

fn check_domain(what: &'static str, x: f64) -> Result<()> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain { what, value: x });
    }
    Ok(())
}

/// Evaluates `Σ coeffs[k] w^k` for k = 0.. by Horner's rule.
fn horner(w: f64, coeffs: &[f64]) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * w + c)
}

/// Natural log of the gamma function, `ln Γ(x)`, for `x > 0`.
pub fn lgamma(x: f64) -> Result<f64> {
    check_domain("lgamma argument", x)?;
    let mut shift = 0.0;
    let mut y = x;
    while y < ASYMPTOTIC_THRESHOLD {
        shift -= y.ln();
        y += 1.0;
    }
    let w = 1.0 / (y * y);
    let series = horner(w, &LGAMMA_TAIL) / y;
    Ok((y - 0.5) * y.ln() - y + HALF_LN_TWO_PI + series + shift)
}

/// Digamma `ψ(x) = d/dx ln Γ(x)` for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    check_domain("digamma argument", x)?;
    let mut shift = 0.0;
    let mut y = x;
    while y < ASYMPTOTIC_THRESHOLD {
        shift -= 1.0 / y;
        y += 1.0;
    }
    let w = 1.0 / (y * y);
    let tail = w * horner(w, &DIGAMMA_TAIL);
    let mut value = y.ln() - 0.5 / y - tail + shift;
    if DIGAMMA_FAULT.load(Ordering::Relaxed) {
        value += 1e-3;
    }
    Ok(value)
}

/// Trigamma `ψ'(x) = d²/dx² ln Γ(x)` for `x > 0`.
pub fn trigamma(x: f64) -> Result<f64> {
    check_domain("trigamma argument", x)?;
    let mut shift = 0.0;
    let mut y = x;
    while y < ASYMPTOTIC_THRESHOLD {
        shift += 1.0 / (y * y);
        y += 1.0;
    }
    let w = 1.0 / (y * y);
    let tail = (w / y) * horner(w, &TRIGAMMA_TAIL);
    Ok(1.0 / y + 0.5 * w + tail + shift)
}
