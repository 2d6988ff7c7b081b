//! Power-law utilities: Hurwitz zeta, expected degree, tail mass, sampling and
//! maximum-likelihood exponents, plus basic descriptive statistics.

use rand::Rng;
use rand_distr::{Distribution, Pareto, Zeta};

use crate::error::{domain, Result};

/// Terms summed explicitly before the Euler–Maclaurin tail takes over.
const DIRECT_TERMS: u64 = 10_000;

const MLE_BRACKET: (f64, f64) = (1.01, 20.0);
const MLE_TOLERANCE: f64 = 1e-8;

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 1.0 && gamma.is_finite() {
        Ok(())
    } else {
        domain(format!("power-law exponent must exceed 1, got {gamma}"))
    }
}

/// Rising product `γ(γ+1)…(γ+k-1)` and its derivative in `γ`.
fn rising(gamma: f64, k: usize) -> (f64, f64) {
    let mut p = 1.0;
    let mut d = 0.0;
    for i in 0..k {
        let x = gamma + i as f64;
        d = d * x + p;
        p *= x;
    }
    (p, d)
}

/// Euler–Maclaurin estimate of `Σ_{k>=a} k^-γ` and of its `γ`-derivative.
fn tail(gamma: f64, a: u64) -> (f64, f64) {
    let a = a as f64;
    let ln_a = a.ln();
    let pw = |e: f64| (e * ln_a).exp();
    let (r1, d1) = rising(gamma, 1);
    let (r3, d3) = rising(gamma, 3);
    let (r5, d5) = rising(gamma, 5);

    let integral = pw(1.0 - gamma) / (gamma - 1.0);
    let value = integral + pw(-gamma) / 2.0 + r1 * pw(-gamma - 1.0) / 12.0
        - r3 * pw(-gamma - 3.0) / 720.0
        + r5 * pw(-gamma - 5.0) / 30_240.0;

    let deriv = -ln_a * integral - integral / (gamma - 1.0) - ln_a * pw(-gamma) / 2.0
        + (d1 - r1 * ln_a) * pw(-gamma - 1.0) / 12.0
        - (d3 - r3 * ln_a) * pw(-gamma - 3.0) / 720.0
        + (d5 - r5 * ln_a) * pw(-gamma - 5.0) / 30_240.0;
    (value, deriv)
}

/// `(ζ(γ, x0), ∂ζ/∂γ)`, summing the head smallest-first for accuracy.
fn zeta_pair(gamma: f64, x0: u64) -> (f64, f64) {
    let cut = x0.max(DIRECT_TERMS);
    let (mut z, mut dz) = tail(gamma, cut);
    for k in (x0..cut).rev() {
        let lk = (k as f64).ln();
        let t = (-gamma * lk).exp();
        z += t;
        dz -= lk * t;
    }
    (z, dz)
}

/// Hurwitz-style zeta `Σ_{k>=x0} k^-γ`.
pub fn zeta(gamma: f64, x0: u64) -> Result<f64> {
    check_gamma(gamma)?;
    if x0 == 0 {
        return domain("zeta: x0 must be at least 1");
    }
    Ok(zeta_pair(gamma, x0).0)
}

/// `∂ζ(γ, x0)/∂γ = -Σ_{k>=x0} k^-γ ln k`.
pub fn dzeta_dgamma(gamma: f64, x0: u64) -> Result<f64> {
    check_gamma(gamma)?;
    if x0 == 0 {
        return domain("dzeta_dgamma: x0 must be at least 1");
    }
    Ok(zeta_pair(gamma, x0).1)
}

/// Mean of the discrete power law on `k >= 1`: `ζ(γ-1)/ζ(γ)`.
pub fn expected_degree(gamma: f64) -> Result<f64> {
    if !(gamma > 2.0 && gamma.is_finite()) {
        return domain(format!("expected degree diverges for gamma={gamma} <= 2"));
    }
    Ok(zeta(gamma - 1.0, 1)? / zeta(gamma, 1)?)
}

/// `P(k > kmax)` for the discrete power law on `k >= 1`.
pub fn tail_prob(gamma: f64, kmax: u64) -> Result<f64> {
    Ok(zeta(gamma, kmax + 1)? / zeta(gamma, 1)?)
}

/// Draws `k >= 1` with `P(k) ∝ k^-γ`, redrawing values above `kmax`.
pub fn sample_powerlaw_discrete<R: Rng + ?Sized>(
    gamma: f64,
    kmax: Option<u64>,
    rng: &mut R,
) -> Result<u64> {
    check_gamma(gamma)?;
    if kmax == Some(0) {
        return domain("sample_powerlaw_discrete: kmax must be at least 1");
    }
    let dist = Zeta::new(gamma).map_err(|e| crate::Error::Domain(e.to_string()))?;
    loop {
        let k = dist.sample(rng);
        // Values beyond u64 are treated as above any truncation.
        let k = if k >= u64::MAX as f64 { u64::MAX } else { k as u64 };
        if kmax.is_none_or(|m| k <= m) {
            return Ok(k);
        }
    }
}

/// Draws `x >= 1` with density `∝ x^-γ`.
pub fn sample_powerlaw_continuous<R: Rng + ?Sized>(gamma: f64, rng: &mut R) -> Result<f64> {
    check_gamma(gamma)?;
    let dist = Pareto::new(1.0, gamma - 1.0).map_err(|e| crate::Error::Domain(e.to_string()))?;
    Ok(dist.sample(rng))
}

fn mean_log_discrete(samples: &[u64], x0: u64) -> Result<f64> {
    if samples.len() < 2 {
        return domain("MLE needs at least 2 samples");
    }
    if x0 == 0 {
        return domain("x0 must be at least 1");
    }
    if let Some(&k) = samples.iter().find(|&&k| k < x0) {
        return domain(format!("sample {k} lies below x0={x0}"));
    }
    Ok(samples.iter().map(|&k| (k as f64).ln()).sum::<f64>() / samples.len() as f64)
}

/// Log-likelihood of discrete samples under exponent `γ` with support `k >= x0`.
pub fn lnl_discrete(samples: &[u64], gamma: f64, x0: u64) -> Result<f64> {
    let mean = mean_log_discrete(samples, x0)?;
    let n = samples.len() as f64;
    Ok(-gamma * n * mean - n * zeta(gamma, x0)?.ln())
}

/// Maximum-likelihood exponent for discrete samples: the root of
/// `ζ'(γ, x0)/ζ(γ, x0) + mean(ln k) = 0`, bracketed in `[1.01, 20]`.
pub fn gamma_mle_discrete(samples: &[u64], x0: u64) -> Result<f64> {
    let target = mean_log_discrete(samples, x0)?;
    // Increasing in γ: ζ'/ζ = -E_γ[ln k] rises towards -ln x0.
    let score = |g: f64| {
        let (z, dz) = zeta_pair(g, x0);
        dz / z + target
    };
    let (mut lo, mut hi) = MLE_BRACKET;
    let (mut f_lo, f_hi) = (score(lo), score(hi));
    if f_lo > 0.0 || f_hi < 0.0 {
        return domain(format!(
            "discrete MLE has no root in [{lo}, {hi}] (mean ln k = {target})"
        ));
    }
    while hi - lo > MLE_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        let f_mid = score(mid);
        if f_mid > 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    // Secant polish from the final bracket.
    let f_hi = score(hi);
    let g = if f_hi != f_lo {
        lo - f_lo * (hi - lo) / (f_hi - f_lo)
    } else {
        0.5 * (lo + hi)
    };
    Ok(g.clamp(lo, hi))
}

/// Asymptotic standard error of the discrete MLE: `1/sqrt(N · Var_γ[ln k])`.
pub fn gamma_mle_discrete_stderr(gamma: f64, n: usize, x0: u64) -> Result<f64> {
    check_gamma(gamma)?;
    let h = 1e-5 * gamma;
    let ratio = |g: f64| {
        let (z, dz) = zeta_pair(g, x0);
        dz / z
    };
    // d/dγ (ζ'/ζ) = Var[ln k]
    let var = (ratio(gamma + h) - ratio(gamma - h)) / (2.0 * h);
    if !(var > 0.0) || n == 0 {
        return domain("standard error undefined");
    }
    Ok(1.0 / (n as f64 * var).sqrt())
}

fn sum_log_continuous(samples: &[f64], x0: f64) -> Result<f64> {
    if samples.len() < 2 {
        return domain("MLE needs at least 2 samples");
    }
    if !(x0 > 0.0) {
        return domain(format!("x0 must be positive, got {x0}"));
    }
    if let Some(&k) = samples.iter().find(|&&k| !(k >= x0)) {
        return domain(format!("sample {k} lies below x0={x0}"));
    }
    Ok(samples.iter().map(|&k| (k / x0).ln()).sum())
}

/// Closed-form exponent `1 + N / Σ ln(k/x0)` for continuous samples.
pub fn gamma_mle_continuous(samples: &[f64], x0: f64) -> Result<f64> {
    let s = sum_log_continuous(samples, x0)?;
    if s <= 0.0 {
        return domain("continuous MLE undefined: every sample equals x0");
    }
    Ok(1.0 + samples.len() as f64 / s)
}

/// Log-likelihood of continuous samples under density `(γ-1)/x0 · (k/x0)^-γ`.
pub fn lnl_continuous(samples: &[f64], gamma: f64, x0: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let s = sum_log_continuous(samples, x0)?;
    let n = samples.len() as f64;
    Ok(n * ((gamma - 1.0) / x0).ln() - gamma * s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub mean: f64,
    /// Sample standard deviation (N-1 denominator).
    pub std: f64,
    /// Fisher–Pearson skewness `m3 / m2^1.5`; zero for constant data.
    pub skewness: f64,
}

pub fn stats(values: &[f64]) -> Result<Stats> {
    if values.len() < 2 {
        return domain("stats need at least 2 values");
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (m2, m3) = values.iter().fold((0.0, 0.0), |(a, b), &x| {
        let d = x - mean;
        (a + d * d, b + d * d * d)
    });
    let std = (m2 / (n - 1.0)).sqrt();
    let (m2, m3) = (m2 / n, m3 / n);
    let skewness = if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 };
    Ok(Stats {
        mean,
        std,
        skewness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn zeta_known_values() {
        assert!((zeta(2.0, 1).unwrap() - PI * PI / 6.0).abs() < 1e-12);
        assert!((zeta(2.0, 2).unwrap() - (PI * PI / 6.0 - 1.0)).abs() < 1e-12);
        assert!((zeta(4.0, 1).unwrap() - PI.powi(4) / 90.0).abs() < 1e-12);
        assert!(zeta(1.0, 1).is_err());
        assert!(zeta(0.5, 1).is_err());
        assert!(zeta(2.0, 0).is_err());
    }

    #[test]
    fn zeta_beyond_direct_range() {
        // Starting past the direct head uses the expansion alone.
        let direct = zeta(3.0, 20_000).unwrap();
        let via_head = zeta(3.0, 1).unwrap()
            - (1..20_000u64).rev().map(|k| (k as f64).powi(-3)).sum::<f64>();
        assert!((direct - via_head).abs() < 1e-12);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for (g, x0) in [(2.0, 1), (3.0, 2), (1.3, 1), (2.5, 7)] {
            let h = 1e-6;
            let fd = (zeta(g + h, x0).unwrap() - zeta(g - h, x0).unwrap()) / (2.0 * h);
            let d = dzeta_dgamma(g, x0).unwrap();
            assert!(d < 0.0);
            assert!((d - fd).abs() < 1e-6, "g={g} x0={x0}: {d} vs {fd}");
        }
    }

    #[test]
    fn expected_degree_limits() {
        assert!(expected_degree(2.0).is_err());
        assert!((expected_degree(60.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(expected_degree(2.5).unwrap() > expected_degree(2.6).unwrap());
    }

    #[test]
    fn tail_goes_to_zero() {
        assert!(tail_prob(2.5, 1_000_000).unwrap() < 1e-8);
        assert!(tail_prob(1.0, 10).is_err());
    }

    #[test]
    fn stats_examples() {
        let s = stats(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!((s.mean, s.std, s.skewness), (1.0, 0.0, 0.0));
        let s = stats(&[0.0, 2.0]).unwrap();
        assert_eq!(s.mean, 1.0);
        assert!((s.std - 2f64.sqrt()).abs() < 1e-15);
        assert!(stats(&[-3.0, -1.0, 0.0, 1.0, 3.0]).unwrap().skewness.abs() < 1e-15);
        assert!(stats(&[1.0]).is_err());
    }

    #[test]
    fn continuous_mle_closed_form() {
        let e = std::f64::consts::E;
        assert!((gamma_mle_continuous(&[e * 2.0; 10], 2.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(gamma_mle_continuous(&[3.0; 5], 3.0).is_err());
        assert!(gamma_mle_continuous(&[3.0, 1.0], 2.0).is_err());
    }

    #[test]
    fn discrete_mle_degenerate_input() {
        assert!(gamma_mle_discrete(&[1, 1, 1], 1).is_err());
        assert!(gamma_mle_discrete(&[1], 1).is_err());
        assert!(gamma_mle_discrete(&[2, 3], 3).is_err());
    }

    #[test]
    fn continuous_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let xs: Vec<f64> = (0..50_000)
            .map(|_| sample_powerlaw_continuous(2.7, &mut rng).unwrap())
            .collect();
        let g = gamma_mle_continuous(&xs, 1.0).unwrap();
        let se = (g - 1.0) / (xs.len() as f64).sqrt();
        assert!((g - 2.7).abs() < 3.0 * se, "{g}");
        let l = lnl_continuous(&xs, g, 1.0).unwrap();
        assert!(l >= lnl_continuous(&xs, g + 0.05, 1.0).unwrap());
        assert!(l >= lnl_continuous(&xs, g - 0.05, 1.0).unwrap());
    }

    #[test]
    fn truncated_sampler_respects_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10_000 {
            let k = sample_powerlaw_discrete(2.0425, Some(45), &mut rng).unwrap();
            assert!((1..=45).contains(&k));
        }
        assert!(sample_powerlaw_discrete(0.9, None, &mut rng).is_err());
    }
}
