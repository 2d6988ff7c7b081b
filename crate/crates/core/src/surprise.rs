//! The surprise quality function: `S = -ln P(X >= ℓ)` for `X` hypergeometric with
//! population `F`, `M` successes and `n` draws.
//!
//! Everything is evaluated in log space. Each term of the tail sum is formed from
//! exact log-factorials, the largest term is factored out and the remaining ratios
//! are summed in linear space, so values of `S` in the thousands stay representable.
//! When the tail starts at or below the mode, the complementary lower tail is summed
//! instead so that small values of `S` keep their relative precision.

use std::sync::{OnceLock, RwLock};

use crate::error::{domain, Result};
use crate::graph::Graph;
use crate::partition::Partition;

/// Tail terms smaller than this fraction of the largest term are dropped.
const TERM_CUTOFF: f64 = 1e-18;

/// Largest argument served from the cumulative table; beyond it the Stirling series
/// is accurate to well below double rounding.
const TABLE_LIMIT: u64 = 1 << 22;

/// Cumulative `ln k!` table, extended on demand with compensated summation.
struct LnFactTable {
    values: Vec<f64>,
    sum: f64,
    comp: f64,
}

impl LnFactTable {
    fn extend_to(&mut self, max: usize) {
        let target = (max + 1).max(2 * self.values.len());
        self.values.reserve(target - self.values.len());
        for k in self.values.len()..target {
            // Neumaier summation keeps the table at full double precision.
            let x = (k as f64).ln();
            let t = self.sum + x;
            if self.sum.abs() >= x.abs() {
                self.comp += (self.sum - t) + x;
            } else {
                self.comp += (x - t) + self.sum;
            }
            self.sum = t;
            self.values.push(self.sum + self.comp);
        }
    }
}

fn table() -> &'static RwLock<LnFactTable> {
    static TABLE: OnceLock<RwLock<LnFactTable>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = LnFactTable {
            values: vec![0.0, 0.0],
            sum: 0.0,
            comp: 0.0,
        };
        t.extend_to(1024);
        RwLock::new(t)
    })
}

/// Runs `f` with a table covering `ln m!` for all `m <= min(max, TABLE_LIMIT)`.
fn with_table<R>(max: u64, f: impl FnOnce(&[f64]) -> R) -> R {
    let max = max.min(TABLE_LIMIT) as usize;
    {
        let t = table().read().unwrap_or_else(|e| e.into_inner());
        if t.values.len() > max {
            return f(&t.values);
        }
    }
    {
        let mut t = table().write().unwrap_or_else(|e| e.into_inner());
        if t.values.len() <= max {
            t.extend_to(max);
        }
    }
    let t = table().read().unwrap_or_else(|e| e.into_inner());
    f(&t.values)
}

/// `ln m!` to double precision: tabulated sums of logarithms for moderate `m`,
/// the Stirling series for very large `m`.
pub fn ln_factorial(m: u64) -> f64 {
    with_table(m, |t| lf(t, m))
}

#[inline]
fn lf(t: &[f64], m: u64) -> f64 {
    match t.get(m as usize) {
        Some(&v) => v,
        None => {
            let x = m as f64;
            let r = 1.0 / x;
            let r2 = r * r;
            x * x.ln() - x
                + 0.5 * (2.0 * std::f64::consts::PI * x).ln()
                + r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 / 1260.0))
        }
    }
}

/// `ln C(m, k)`.
pub fn ln_choose(m: u64, k: u64) -> Result<f64> {
    if k > m {
        return domain(format!("ln_choose({m}, {k}): k exceeds m"));
    }
    Ok(with_table(m, |t| lnc(t, m, k)))
}

#[inline]
fn lnc(t: &[f64], m: u64, k: u64) -> f64 {
    lf(t, m) - lf(t, k) - lf(t, m - k)
}

/// Surprise of a partition with `M` intra-community pairs and `ℓ` intra-community
/// links, in a graph with `F` possible and `n` actual links. Natural logarithm.
pub fn surprise(f: u64, m: u64, n: u64, ell: u64) -> Result<f64> {
    if m > f || n > f {
        return domain(format!("surprise: need M <= F and n <= F (F={f}, M={m}, n={n})"));
    }
    if ell > m.min(n) {
        return domain(format!("surprise: ell={ell} exceeds min(M={m}, n={n})"));
    }
    if n - ell > f - m {
        return domain(format!(
            "surprise: n-ell={} inter-community links exceed F-M={}",
            n - ell,
            f - m
        ));
    }
    Ok(surprise_unchecked(f, m, n, ell))
}

/// [`surprise`] without argument validation; inputs must satisfy its preconditions.
pub(crate) fn surprise_unchecked(f: u64, m: u64, n: u64, ell: u64) -> f64 {
    debug_assert!(m <= f && n <= f && ell <= m.min(n) && n - ell <= f - m);
    let lo_support = n.saturating_sub(f - m);
    let hi = m.min(n);
    // The tail covers the whole support: probability one.
    if ell <= lo_support {
        return 0.0;
    }
    with_table(f, |t| {
        let norm = lnc(t, f, n);
        let log_term = |j: u64| lnc(t, m, j) + lnc(t, f - m, n - j) - norm;
        let mode = ((n as u128 + 1) * (m as u128 + 1) / (f as u128 + 2)) as u64;

        // ln Σ_{j=a}^{b} term(j): factor out the largest term, sum the ratios outward.
        let log_sum = |a: u64, b: u64| {
            // The pmf is unimodal; its peak within [a, b] sits at the clamped mode.
            let mut peak = mode.clamp(a, b);
            let mut log_max = log_term(peak);
            for j in [peak.saturating_sub(1), peak + 1] {
                if (a..=b).contains(&j) {
                    let v = log_term(j);
                    if v > log_max {
                        log_max = v;
                        peak = j;
                    }
                }
            }
            let mut rest = 0.0;
            let mut j = peak + 1;
            while j <= b {
                let r = (log_term(j) - log_max).exp();
                rest += r;
                if r < TERM_CUTOFF {
                    break;
                }
                j += 1;
            }
            let mut j = peak;
            while j > a {
                j -= 1;
                let r = (log_term(j) - log_max).exp();
                rest += r;
                if r < TERM_CUTOFF {
                    break;
                }
            }
            log_max + rest.ln_1p()
        };

        let s = if ell > mode {
            -log_sum(ell, hi)
        } else {
            // Most of the mass lies in the tail; the small complement keeps S accurate
            // when it is close to zero.
            -(-log_sum(lo_support, ell - 1).exp()).ln_1p()
        };
        s.max(0.0)
    })
}

/// `(M, ℓ, S)` for partition `p` of graph `g`.
pub fn partition_stats(g: &Graph, p: &Partition) -> Result<(u64, u64, f64)> {
    let ell = p.intra_links(g)?;
    let m = p.max_intra_pairs();
    let s = surprise(g.max_links(), m, g.link_count() as u64, ell)?;
    Ok((m, ell, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::fixtures::toy_graph;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn ln_factorial_small() {
        assert_eq!(ln_factorial(0), 0.0);
        assert_eq!(ln_factorial(1), 0.0);
        assert!(rel(ln_factorial(10), 3_628_800f64.ln()) < 1e-14);
        assert!(rel(ln_factorial(20), 2_432_902_008_176_640_000f64.ln()) < 1e-14);
    }

    #[test]
    fn ln_factorial_large_matches_stirling_series() {
        // ln m! = m ln m - m + ln(2πm)/2 + 1/(12m) - 1/(360m^3) + ...
        for m in [5_000u64, 123_457, 600_000] {
            let x = m as f64;
            let stirling = x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln()
                + 1.0 / (12.0 * x)
                - 1.0 / (360.0 * x.powi(3));
            assert!(rel(ln_factorial(m), stirling) < 1e-13, "m={m}");
        }
    }

    #[test]
    fn ln_factorial_continuous_past_table() {
        let m = TABLE_LIMIT;
        let step = ((m + 1) as f64).ln();
        assert!(rel(ln_factorial(m + 1) - ln_factorial(m), step) < 1e-9);
        assert!(rel(ln_factorial(m + 2) - ln_factorial(m + 1), ((m + 2) as f64).ln()) < 1e-9);
    }

    #[test]
    fn ln_choose_examples() {
        assert_eq!(ln_choose(17, 0).unwrap(), 0.0);
        assert_eq!(ln_choose(17, 17).unwrap(), 0.0);
        assert!((ln_choose(52, 5).unwrap() - 2_598_960f64.ln()).abs() < 1e-10);
        assert!(matches!(ln_choose(3, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn trivial_surprise_values() {
        for (f, n) in [(55, 16), (10, 0), (10, 10), (124_750, 2_400)] {
            assert_eq!(surprise(f, 0, n, 0).unwrap(), 0.0);
            assert_eq!(surprise(f, f, n, n).unwrap(), 0.0);
        }
    }

    #[test]
    fn precondition_violations() {
        assert!(surprise(10, 11, 3, 0).is_err());
        assert!(surprise(10, 5, 11, 0).is_err());
        assert!(surprise(10, 5, 3, 4).is_err());
        // 6 inter-community links cannot fit in F - M = 5 slots.
        assert!(surprise(10, 5, 7, 1).is_err());
    }

    #[test]
    fn huge_surprise_is_finite() {
        // Near-perfect partition of a large sparse graph: S in the thousands.
        let f = 499_500;
        let n = 7_500;
        let m = 8_000;
        let s = surprise(f, m, n, 7_400).unwrap();
        assert!(s.is_finite() && s > 3_000.0, "S = {s}");
    }

    #[test]
    fn toy_stats() {
        let g = toy_graph();
        let (m, ell, s) = partition_stats(&g, &Partition::singletons(11)).unwrap();
        assert_eq!((m, ell, s), (0, 0, 0.0));
        let (m, ell, _) = partition_stats(&g, &Partition::all_in_one(11)).unwrap();
        assert_eq!((m, ell), (55, 16));
        assert!(partition_stats(&g, &Partition::singletons(4)).is_err());
    }

    #[test]
    fn modularity_optimum_below_surprise_optimum() {
        let g = toy_graph();
        let modular = Partition::from_labels(&[0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2]);
        let best = Partition::from_labels(&[0, 0, 0, 0, 1, 1, 1, 1, 2, 3, 3]);
        let s_mod = partition_stats(&g, &modular).unwrap().2;
        let s_best = partition_stats(&g, &best).unwrap().2;
        assert!(s_mod < s_best, "{s_mod} vs {s_best}");
    }

    #[test]
    fn concurrent_readers() {
        let handles: Vec<_> = (0..4)
            .map(|i| std::thread::spawn(move || ln_factorial(50_000 + 10_000 * i)))
            .collect();
        for (i, h) in handles.into_iter().enumerate() {
            let v = h.join().unwrap();
            assert_eq!(v, ln_factorial(50_000 + 10_000 * i as u64));
        }
    }
}
