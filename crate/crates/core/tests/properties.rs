use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use surprise_core::embedding::{chi_grad, DistanceMatrix};
use surprise_core::fixtures::toy_graph;
use surprise_core::metrics::{fragmentation, pielou, vi};
use surprise_core::{partition_stats, surprise, Graph, Partition};

fn binom(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// `a / b` as a float, keeping ~80 significant bits in the quotient.
fn ratio(a: &BigUint, b: &BigUint) -> f64 {
    let shift = (b.bits() + 80).saturating_sub(a.bits());
    let q = (a << shift) / b;
    let lead = q.bits().saturating_sub(64);
    (q >> lead).to_f64().unwrap() * 2f64.powi(lead as i32 - shift as i32)
}

fn ln_big(x: &BigUint) -> f64 {
    let drop = x.bits().saturating_sub(64);
    (x >> drop).to_f64().unwrap().ln() + drop as f64 * std::f64::consts::LN_2
}

/// Surprise from exact rational arithmetic.
fn surprise_exact(f: u64, m: u64, n: u64, ell: u64) -> f64 {
    let den = binom(f, n);
    let num: BigUint = (ell..=m.min(n)).map(|j| binom(m, j) * binom(f - m, n - j)).sum();
    if num == den {
        return 0.0;
    }
    if &num * 2u32 > den {
        let complement = &den - &num;
        -(-ratio(&complement, &den)).ln_1p()
    } else {
        ln_big(&den) - ln_big(&num)
    }
}

fn instance() -> impl Strategy<Value = (u64, u64, u64, u64)> {
    (2u64..=11)
        .prop_map(|k| k * (k - 1) / 2)
        .prop_flat_map(|f| (Just(f), 0..=f, 0..=f))
        .prop_flat_map(|(f, m, n)| {
            let lo = n.saturating_sub(f - m);
            (Just(f), Just(m), Just(n), lo..=m.min(n))
        })
}

fn labels(k: usize, max_c: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..max_c, k)
}

fn random_graph(k: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..k {
        for v in u + 1..k {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(k, edges).unwrap()
}

#[test]
fn surprise_matches_rational_arithmetic_exhaustively_small() {
    // every valid instance for F = 10 and F = 15
    for f in [10u64, 15] {
        for m in 0..=f {
            for n in 0..=f {
                for ell in n.saturating_sub(f - m)..=m.min(n) {
                    let exact = surprise_exact(f, m, n, ell);
                    let s = surprise(f, m, n, ell).unwrap();
                    assert!(
                        (s - exact).abs() <= 1e-9 * exact,
                        "F={f} M={m} n={n} ell={ell}: {s} vs {exact}"
                    );
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn surprise_matches_rational_arithmetic((f, m, n, ell) in instance()) {
        let exact = surprise_exact(f, m, n, ell);
        let s = surprise(f, m, n, ell).unwrap();
        prop_assert!(s >= 0.0);
        prop_assert!((s - exact).abs() <= 1e-9 * exact, "F={} M={} n={} ell={}: {} vs {}", f, m, n, ell, s, exact);
    }

    #[test]
    fn surprise_never_rises_with_m((f, m, n, ell) in instance()) {
        if m < f && n - ell < f - m {
            prop_assert!(surprise(f, m + 1, n, ell).unwrap() <= surprise(f, m, n, ell).unwrap() + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn stats_ignore_community_labels(l in labels(11, 5), perm in Just((0..5).collect::<Vec<usize>>()).prop_shuffle()) {
        let g = toy_graph();
        let a = Partition::from_labels(&l);
        let relabeled: Vec<usize> = l.iter().map(|&c| perm[c]).collect();
        let b = Partition::from_labels(&relabeled);
        prop_assert_eq!(partition_stats(&g, &a).unwrap(), partition_stats(&g, &b).unwrap());
        prop_assert_eq!(vi(&a, &b, false).unwrap(), 0.0);
        let r = fragmentation(&a, &b).unwrap();
        prop_assert_eq!((r.kept_pct, r.comms_pct, r.dispersed_pct, r.fragments_pct), (100.0, 100.0, 0.0, 100.0));
        prop_assert_eq!((r.joined_pct, r.obliterated_pct, r.nc_ratio_pct), (0.0, 0.0, 100.0));
    }

    #[test]
    fn vi_is_a_metric(k in 2usize..100, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || {
            let nc = rng.random_range(1..=k);
            let l: Vec<usize> = (0..k).map(|_| rng.random_range(0..nc)).collect();
            Partition::from_labels(&l)
        };
        let (a, b, c) = (draw(), draw(), draw());
        let ab = vi(&a, &b, false).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(vi(&a, &a, false).unwrap(), 0.0);
        prop_assert!((ab - vi(&b, &a, false).unwrap()).abs() < 1e-12);
        prop_assert!(ab <= vi(&a, &c, false).unwrap() + vi(&c, &b, false).unwrap() + 1e-12);
        prop_assert!(vi(&a, &b, true).unwrap() <= 1.0 + 1e-12);
    }

    #[test]
    fn pielou_is_permutation_invariant(sizes in prop::collection::vec(1usize..50, 2..20), seed in any::<u64>()) {
        let mut shuffled = sizes.clone();
        rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut ChaCha8Rng::seed_from_u64(seed));
        let a = pielou(&sizes).unwrap();
        prop_assert!((a - pielou(&shuffled).unwrap()).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
        if sizes.iter().any(|&s| s != sizes[0]) {
            prop_assert!(a < 1.0);
        }
    }

    #[test]
    fn link_counts_split_consistently(k in 2usize..40, p in 0.0f64..0.5, seed in any::<u64>(), pick in prop::collection::vec(any::<bool>(), 40)) {
        let g = random_graph(k, p, seed);
        let set: Vec<usize> = (0..k).filter(|&u| pick[u]).collect();
        let rest: Vec<usize> = (0..k).filter(|&u| !pick[u]).collect();
        let (in_s, out_s) = g.links_in(&set).unwrap();
        let (in_r, out_r) = g.links_in(&rest).unwrap();
        prop_assert_eq!(out_s, out_r);
        prop_assert_eq!(in_s + in_r + out_s, g.link_count());
    }

    #[test]
    fn edge_list_round_trip(k in 1usize..40, p in 0.0f64..0.5, seed in any::<u64>()) {
        let g = random_graph(k, p, seed);
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let back = Graph::read_edge_list(buf.as_slice()).unwrap();
        prop_assert_eq!(&back, &g);
        let mut again = Vec::new();
        back.write_edge_list(&mut again).unwrap();
        prop_assert_eq!(buf, again);
    }

    #[test]
    fn chi_grad_matches_finite_differences(seed in any::<u64>(), gamma in -1.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 10;
        let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
        let d = DistanceMatrix::from_points(&pts).unwrap();
        let coords: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
        let cg = chi_grad(&coords, &d, gamma, 1.2).unwrap();
        let h = 1e-6;
        for i in 0..n {
            for a in 0..2 {
                let mut plus = coords.clone();
                let mut minus = coords.clone();
                plus[i][a] += h;
                minus[i][a] -= h;
                let fd = (chi_grad(&plus, &d, gamma, 1.2).unwrap().chi2
                    - chi_grad(&minus, &d, gamma, 1.2).unwrap().chi2) / (2.0 * h);
                prop_assert!((fd - cg.grad[i][a]).abs() < 1e-5, "{} vs {}", fd, cg.grad[i][a]);
            }
        }
    }
}

#[test]
fn no_overflow_at_large_scale() {
    let f = 500_000u64 * 499_999 / 2;
    let n = 3_000_000;
    let s = surprise(f, 10_000_000, n, 1_500_000).unwrap();
    assert!(s.is_finite() && s > 0.0);
    // Reference from an lgamma-based tail sum.
    let s = surprise(124_750, 5_000, 2_500, 2_400).unwrap();
    assert!((s - 7_982.224_969_259_81).abs() < 1e-8 * s, "S = {s}");
}
