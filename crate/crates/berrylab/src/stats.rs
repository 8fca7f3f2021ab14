//! Seeded random streams, Kolmogorov–Smirnov tests, and confidence radii
//! shared by the samplers and the Monte-Carlo experiment engines.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in label.bytes() {
        h = (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Declared seed-splitting rule: every independent stream is identified by a
/// label and an index, and its seed is `splitmix64(master ⊕ splitmix64(fnv1a(label)
/// ⊕ splitmix64(index)))`. Draw order inside a stream never depends on other
/// streams, so experiments replay bit-identically regardless of scheduling.
pub fn derive_seed(master: u64, label: &str, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(fnv1a(label) ^ splitmix64(index)))
}

/// The RNG used everywhere in the crate.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(x)
}

/// Asymptotic Kolmogorov distribution tail Q(t) = 2 Σ (−1)^{j−1} e^{−2 j² t²}.
pub fn kolmogorov_q(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0f64;
    let mut sign = 1.0f64;
    for j in 1..=100 {
        let term = (-2.0 * (j as f64) * (j as f64) * t * t).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_effective: f64,
}

impl KsResult {
    /// Whether the test passes (fails to reject) at the given level.
    pub fn passes(&self, level: f64) -> bool {
        self.p_value > level
    }
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("NaN in sample"));
    v
}

fn stephens_p(d: f64, n_eff: f64) -> f64 {
    let s = n_eff.sqrt();
    kolmogorov_q((s + 0.12 + 0.11 / s) * d)
}

/// One-sample KS test against the standard normal.
pub fn ks_test_standard_normal(values: &[f64]) -> KsResult {
    let v = sorted(values);
    let n = v.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        let cdf = normal_cdf(x);
        d = d.max((cdf - i as f64 / n).abs()).max(((i + 1) as f64 / n - cdf).abs());
    }
    KsResult { statistic: d, p_value: stephens_p(d, n), n_effective: n }
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let (xa, xb) = (sorted(a), sorted(b));
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < xa.len() && j < xb.len() {
        let (va, vb) = (xa[i], xb[j]);
        if va <= vb {
            i += 1;
        }
        if vb <= va {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let n_eff = na * nb / (na + nb);
    KsResult { statistic: d, p_value: stephens_p(d, n_eff), n_effective: n_eff }
}

/// Sample mean with a 3·SE confidence radius (≈ 99.7% normal coverage).
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize, PartialEq)]
pub struct MeanCi {
    pub mean: f64,
    pub radius: f64,
    pub n: usize,
}

pub fn mean_with_ci(values: &[f64]) -> MeanCi {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n.max(2) - 1) as f64;
    MeanCi { mean, radius: 3.0 * (var / n as f64).sqrt(), n }
}

/// Wilson 95% score interval for a binomial fraction.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize, PartialEq)]
pub struct BinomialCi {
    pub fraction: f64,
    pub lower: f64,
    pub upper: f64,
    pub hits: usize,
    pub n: usize,
}

pub fn wilson_interval(hits: usize, n: usize) -> BinomialCi {
    let z = 1.959963984540054f64;
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = p + z2 / (2.0 * nf);
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let lower = if hits == 0 { 0.0 } else { ((center - half) / denom).max(0.0) };
    let upper = if hits == n { 1.0 } else { ((center + half) / denom).min(1.0) };
    BinomialCi { fraction: p, lower, upper, hits, n }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn seed_derivation_is_stable_and_label_sensitive() {
        let a = derive_seed(42, "draws", 7);
        assert_eq!(a, derive_seed(42, "draws", 7));
        assert_ne!(a, derive_seed(42, "draws", 8));
        assert_ne!(a, derive_seed(42, "points", 7));
        assert_ne!(a, derive_seed(43, "draws", 7));
    }

    #[test]
    fn ks_accepts_normal_sample() {
        let mut rng = rng_from_seed(11);
        let v: Vec<f64> = (0..2000).map(|_| rng.sample(StandardNormal)).collect();
        let r = ks_test_standard_normal(&v);
        assert!(r.passes(0.01), "p = {}", r.p_value);
    }

    #[test]
    fn ks_rejects_shifted_sample() {
        let mut rng = rng_from_seed(11);
        let v: Vec<f64> = (0..2000).map(|_| rng.sample::<f64, _>(StandardNormal) + 0.5).collect();
        let r = ks_test_standard_normal(&v);
        assert!(!r.passes(0.01), "p = {}", r.p_value);
    }

    #[test]
    fn two_sample_ks_behaves() {
        let mut rng = rng_from_seed(5);
        let a: Vec<f64> = (0..1500).map(|_| rng.sample(StandardNormal)).collect();
        let b: Vec<f64> = (0..1500).map(|_| rng.sample(StandardNormal)).collect();
        let c: Vec<f64> = (0..1500).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        assert!(ks_two_sample(&a, &b).passes(0.01));
        assert!(!ks_two_sample(&a, &c).passes(0.01));
    }

    #[test]
    fn kolmogorov_q_endpoints() {
        assert_eq!(kolmogorov_q(0.0), 1.0);
        assert!(kolmogorov_q(3.0) < 1e-6);
        // Known value: Q(1) ≈ 0.26999967.
        assert!((kolmogorov_q(1.0) - 0.2699996716773).abs() < 1e-9);
    }

    #[test]
    fn wilson_positive_iff_hits() {
        assert_eq!(wilson_interval(0, 100).lower, 0.0);
        assert!(wilson_interval(1, 100).lower > 0.0);
        let ci = wilson_interval(50, 100);
        assert!(ci.lower < 0.5 && ci.upper > 0.5);
    }

    #[test]
    fn mean_ci_covers_zero_mean() {
        let mut rng = rng_from_seed(3);
        let v: Vec<f64> = (0..500).map(|_| rng.sample(StandardNormal)).collect();
        let m = mean_with_ci(&v);
        assert!(m.mean.abs() <= m.radius);
    }
}
