//! Two-sample Mann-Whitney U test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::learner::metrics::midranks;

/// Combined sizes up to this use the exact permutation distribution of the
/// rank sum for `p`; larger samples use the normal approximation.
pub const EXACT_MAX_N: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    pub u: f64,
    pub z: f64,
    pub p: f64,
    /// Whether `p` came from the exact permutation distribution.
    pub exact: bool,
}

/// U of `a` against `b`, the tie-corrected continuity-corrected z, and the
/// two-sided p. Both samples must be non-empty.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> MannWhitney {
    assert!(!a.is_empty() && !b.is_empty(), "both samples must be non-empty");
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let n = na + nb;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let ra: f64 = ranks[..a.len()].iter().sum();
    let u = ra - na * (na + 1.0) / 2.0;
    let mu = na * nb / 2.0;

    let ties = tie_term(&pooled);
    let var = na * nb / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    if var <= 0.0 || !var.is_finite() {
        return MannWhitney { u, z: 0.0, p: 1.0, exact: false };
    }
    let diff = (u - mu).abs();
    let z = (diff - 0.5).max(0.0) / var.sqrt() * if u < mu { -1.0 } else { 1.0 };
    if pooled.len() <= EXACT_MAX_N {
        let p = exact_p(&ranks, a.len());
        return MannWhitney { u, z, p, exact: true };
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let p = (2.0 * normal.sf(z.abs())).min(1.0);
    MannWhitney { u, z, p, exact: false }
}

/// Σ(t³ − t) over groups of tied values.
fn tie_term(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mut total = 0.0;
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j + 1 < v.len() && v[j + 1] == v[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        total += t * t * t - t;
        i = j + 1;
    }
    total
}

/// Two-sided permutation p of the rank sum of the first `na` entries of
/// `ranks`, counting every split at least as far from the null mean as the
/// observed one. Midranks are doubled so all sums are integers.
fn exact_p(ranks: &[f64], na: usize) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    // ways[k][s]: subsets of size k with doubled rank sum s
    let mut ways = vec![vec![0.0f64; max_sum + 1]; na + 1];
    ways[0][0] = 1.0;
    for &r in &doubled {
        for k in (1..=na).rev() {
            let (lo, hi) = ways.split_at_mut(k);
            let prev = &lo[k - 1];
            let cur = &mut hi[0];
            for s in (r..=max_sum).rev() {
                cur[s] += prev[s - r];
            }
        }
    }
    let observed: usize = doubled[..na].iter().sum();
    let n = ranks.len();
    let centre = (na * (n + 1)) as i64;
    let dev = (observed as i64 - centre).abs();
    let total: f64 = ways[na].iter().sum();
    let extreme: f64 = ways[na]
        .iter()
        .enumerate()
        .filter(|(s, _)| (*s as i64 - centre).abs() >= dev)
        .map(|(_, w)| w)
        .sum();
    (extreme / total).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn enumerate_p(a: &[f64], b: &[f64]) -> f64 {
        let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
        let ranks = midranks(&pooled);
        let n = pooled.len();
        let na = a.len();
        let mean = na as f64 * (n as f64 + 1.0) / 2.0;
        let obs = (ranks[..na].iter().sum::<f64>() - mean).abs();
        let (mut hit, mut all) = (0u64, 0u64);
        for mask in 0u64..(1 << n) {
            if mask.count_ones() as usize != na {
                continue;
            }
            let s: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            all += 1;
            if (s - mean).abs() >= obs - 1e-9 {
                hit += 1;
            }
        }
        hit as f64 / all as f64
    }

    #[test]
    fn separated_samples() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]);
        assert_eq!(r.u, 0.0);
        assert!(r.z < 0.0);
        assert!((r.p - 0.1).abs() < 1e-12);
    }

    #[test]
    fn identical_samples() {
        let a = [1.0, 4.0, 4.0, 9.0];
        let r = mann_whitney_u(&a, &a);
        assert_eq!(r.u, 8.0);
        assert_eq!(r.p, 1.0);
        let flat = mann_whitney_u(&[2.0; 3], &[2.0; 5]);
        assert_eq!((flat.z, flat.p), (0.0, 1.0));
    }

    #[test]
    fn exact_p_matches_enumeration_with_ties() {
        let a = [1.0, 2.0, 2.0, 5.0];
        let b = [2.0, 3.0, 5.0, 5.0, 7.0];
        assert!((mann_whitney_u(&a, &b).p - enumerate_p(&a, &b)).abs() < 1e-12);
    }

    #[test]
    fn large_samples_use_normal_approximation() {
        let a: Vec<f64> = (0..60).map(f64::from).collect();
        let b: Vec<f64> = (30..90).map(f64::from).collect();
        let r = mann_whitney_u(&a, &b);
        assert!(!r.exact);
        let expected_u = a.iter().map(|x| b.iter().filter(|y| x > *y).count() as f64 + 0.5 * b.iter().filter(|y| x == *y).count() as f64).sum::<f64>();
        assert_eq!(r.u, expected_u);
        assert!(r.p < 1e-4);
    }

    proptest::proptest! {
        #[test]
        fn swapping_groups_complements_u(
            a in proptest::collection::vec(0u8..10, 1..12),
            b in proptest::collection::vec(0u8..10, 1..12),
        ) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let ab = mann_whitney_u(&a, &b);
            let ba = mann_whitney_u(&b, &a);
            proptest::prop_assert_eq!(ab.u + ba.u, (a.len() * b.len()) as f64);
            proptest::prop_assert!((ab.p - ba.p).abs() < 1e-12);
            let ea: Vec<f64> = a.iter().map(|v| v.exp()).collect();
            let eb: Vec<f64> = b.iter().map(|v| v.exp()).collect();
            proptest::prop_assert_eq!(mann_whitney_u(&ea, &eb).p, ab.p);
        }

        #[test]
        fn small_samples_agree_with_enumeration(
            a in proptest::collection::vec(0u8..6, 1..8),
            b in proptest::collection::vec(0u8..6, 1..8),
        ) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let r = mann_whitney_u(&a, &b);
            proptest::prop_assert!((r.p - enumerate_p(&a, &b)).abs() < 1e-9);
        }
    }
}
