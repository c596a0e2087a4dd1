//! Two-step Gibbs sampler on the unit square.
//!
//! Starting from u₁ ~ U(0, 1), each sweep draws u₂ from U₂ | U₁ = u₁ and then
//! u₁ from U₁ | U₂ = u₂, both by inverting the copula's h-function at a fresh
//! uniform. The first `burn_in` pairs are discarded and every `thin`-th of
//! the following `kept · thin` pairs is retained.
//!
//! Uniforms come from ChaCha8 keyed by the 64-bit seed (via
//! `seed_from_u64`) with the ChaCha stream id set to the chain index; each
//! uniform is `((x >> 11) + 0.5) · 2⁻⁵³` for the next 64-bit output `x`,
//! clamped into (1e-15, 1 − 1e-15). Output is bit-identical across runs and
//! platforms for the same (spec, config).

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::copula::{CopulaSpec, Family, UnitPoint};
use crate::error::{Error, Result};

pub const UNIFORM_EPS: f64 = 1e-15;

pub const DEFAULT_BURN_IN: usize = 5_000;
pub const DEFAULT_KEPT: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub burn_in: usize,
    pub kept: usize,
    pub thin: usize,
    pub seed: u64,
    /// Index of the independent stream drawn from `seed`.
    #[serde(default)]
    pub stream: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            burn_in: DEFAULT_BURN_IN,
            kept: DEFAULT_KEPT,
            thin: 1,
            seed: 1,
            stream: 0,
        }
    }
}

impl ChainConfig {
    pub fn new(burn_in: usize, kept: usize, seed: u64) -> Self {
        Self {
            burn_in,
            kept,
            seed,
            ..Self::default()
        }
    }

    pub fn with_thin(mut self, thin: usize) -> Self {
        self.thin = thin;
        self
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.kept == 0 {
            return Err(Error::InvalidConfig(
                "chain must keep at least one sample".into(),
            ));
        }
        if self.thin == 0 {
            return Err(Error::InvalidConfig("thin must be >= 1".into()));
        }
        Ok(())
    }

    /// Sweeps executed: burn-in plus every thinned-away step.
    pub fn total_steps(&self) -> usize {
        self.burn_in + self.kept * self.thin
    }
}

/// Deterministic open-interval uniform source.
#[derive(Debug, Clone)]
pub struct UniformStream {
    rng: ChaCha8Rng,
}

impl UniformStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    #[inline]
    pub fn next_open(&mut self) -> f64 {
        let bits = self.rng.next_u64() >> 11;
        clamp_open((bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64))
    }
}

#[inline]
fn clamp_open(x: f64) -> f64 {
    x.clamp(UNIFORM_EPS, 1.0 - UNIFORM_EPS)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainOutput {
    pub pairs: Vec<UnitPoint>,
    /// Sweeps executed, `kept · thin + burn_in`.
    pub accepted_count: usize,
    pub sample_tau: f64,
    /// Comonotone and countermonotone chains never move off their start.
    pub degenerate: bool,
}

pub fn run_chain(spec: &CopulaSpec, config: &ChainConfig) -> Result<ChainOutput> {
    spec.validate()?;
    config.validate()?;
    let mut rng = UniformStream::new(config.seed, config.stream);
    let mut pairs = Vec::with_capacity(config.kept);
    let total = config.total_steps();

    let mut u1 = rng.next_open();
    for step in 0..total {
        let u2 = clamp_open(spec.conditional_quantile(u1, rng.next_open())?);
        if step >= config.burn_in && (step - config.burn_in + 1).is_multiple_of(config.thin) {
            pairs.push(UnitPoint { u: u1, v: u2 });
        }
        u1 = clamp_open(spec.conditional_quantile(u2, rng.next_open())?);
    }
    debug_assert_eq!(pairs.len(), config.kept);

    let sample_tau = if pairs.len() >= 2 {
        sample_kendall_tau(&pairs)?
    } else {
        f64::NAN
    };
    Ok(ChainOutput {
        pairs,
        accepted_count: total,
        sample_tau,
        degenerate: matches!(spec.family(), Family::Comonotone | Family::Countermonotone),
    })
}

/// Independent draws by conditional inversion: u ~ U, v = h⁻¹(w | u).
pub fn sample_independent(
    spec: &CopulaSpec,
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<Vec<UnitPoint>> {
    spec.validate()?;
    let mut rng = UniformStream::new(seed, stream);
    (0..n)
        .map(|_| {
            let u = rng.next_open();
            let v = clamp_open(spec.conditional_quantile(u, rng.next_open())?);
            Ok(UnitPoint { u, v })
        })
        .collect()
}

/// Kendall's tau-b by Knight's O(n log n) merge-sort count.
///
/// Returns 0 when either coordinate is constant (tau undefined).
pub fn sample_kendall_tau(pairs: &[UnitPoint]) -> Result<f64> {
    let n = pairs.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let mut sorted: Vec<(f64, f64)> = pairs.iter().map(|p| (p.u, p.v)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let pairs_in = |t: u64| t * (t - 1) / 2;
    let mut ties_x = 0u64;
    let mut ties_xy = 0u64;
    let mut run_x = 1u64;
    let mut run_xy = 1u64;
    for i in 1..n {
        if sorted[i].0 == sorted[i - 1].0 {
            run_x += 1;
            if sorted[i].1 == sorted[i - 1].1 {
                run_xy += 1;
            } else {
                ties_xy += pairs_in(run_xy);
                run_xy = 1;
            }
        } else {
            ties_x += pairs_in(run_x);
            ties_xy += pairs_in(run_xy);
            run_x = 1;
            run_xy = 1;
        }
    }
    ties_x += pairs_in(run_x);
    ties_xy += pairs_in(run_xy);

    let mut ys: Vec<f64> = sorted.iter().map(|p| p.1).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf);

    let mut ties_y = 0u64;
    let mut run_y = 1u64;
    for i in 1..n {
        if ys[i] == ys[i - 1] {
            run_y += 1;
        } else {
            ties_y += pairs_in(run_y);
            run_y = 1;
        }
    }
    ties_y += pairs_in(run_y);

    let n0 = pairs_in(n as u64);
    let numer = n0 as f64 - ties_x as f64 - ties_y as f64 + ties_xy as f64 - 2.0 * swaps as f64;
    let denom = ((n0 - ties_x) as f64 * (n0 - ties_y) as f64).sqrt();
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((numer / denom).clamp(-1.0, 1.0))
}

/// Sorts `xs` ascending and returns the number of strict inversions.
fn merge_count(xs: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = xs.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (l, r) = xs.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        merge_count(l, bl) + merge_count(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if xs[j] < xs[i] {
            buf[k] = xs[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = xs[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&xs[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&xs[j..n]);
    xs.copy_from_slice(&buf[..n]);
    swaps
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_tau_b(pairs: &[UnitPoint]) -> f64 {
        let (mut c, mut d, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
        for i in 0..pairs.len() {
            for j in i + 1..pairs.len() {
                let dx = pairs[i].u - pairs[j].u;
                let dy = pairs[i].v - pairs[j].v;
                if dx == 0.0 && dy == 0.0 {
                    continue;
                } else if dx == 0.0 {
                    tx += 1;
                } else if dy == 0.0 {
                    ty += 1;
                } else if dx * dy > 0.0 {
                    c += 1;
                } else {
                    d += 1;
                }
            }
        }
        let denom = (((c + d + tx) * (c + d + ty)) as f64).sqrt();
        if denom == 0.0 {
            0.0
        } else {
            (c - d) as f64 / denom
        }
    }

    proptest! {
        #[test]
        fn knight_matches_brute_force(raw in prop::collection::vec((0u8..12, 0u8..12), 2..60)) {
            let pairs: Vec<UnitPoint> = raw
                .iter()
                .map(|&(a, b)| UnitPoint { u: a as f64 / 12.0, v: b as f64 / 12.0 })
                .collect();
            let fast = sample_kendall_tau(&pairs).unwrap();
            prop_assert!((fast - brute_tau_b(&pairs)).abs() < 1e-12);
        }
    }

    #[test]
    fn tau_extremes() {
        let diag: Vec<UnitPoint> = (1..100)
            .map(|i| UnitPoint {
                u: i as f64 / 100.0,
                v: i as f64 / 100.0,
            })
            .collect();
        assert_eq!(sample_kendall_tau(&diag).unwrap(), 1.0);
        let anti: Vec<UnitPoint> = diag
            .iter()
            .map(|p| UnitPoint {
                u: p.u,
                v: 1.0 - p.u,
            })
            .collect();
        assert_eq!(sample_kendall_tau(&anti).unwrap(), -1.0);
        assert!(sample_kendall_tau(&diag[..1]).is_err());
    }

    #[test]
    fn independence_chain_pairs() {
        let cfg = ChainConfig::new(0, 3, 11);
        let out = run_chain(&CopulaSpec::Independence, &cfg).unwrap();
        assert_eq!(out.pairs.len(), 3);
        // u₂ draws are the raw uniforms at positions 2, 4, 6 of the stream.
        let mut rng = UniformStream::new(11, 0);
        let raw: Vec<f64> = (0..6).map(|_| rng.next_open()).collect();
        assert_eq!(out.pairs[0].u, raw[0]);
        assert_eq!(out.pairs[0].v, raw[1]);
        assert_eq!(out.pairs[1].u, raw[2]);
        assert_eq!(out.pairs[2].v, raw[5]);
    }

    #[test]
    fn comonotone_chain_is_diagonal() {
        let out = run_chain(&CopulaSpec::Comonotone, &ChainConfig::new(10, 50, 3)).unwrap();
        assert!(out.degenerate);
        assert!(out.pairs.iter().all(|p| p.u == p.v));
    }

    #[test]
    fn thinning_and_counts() {
        let cfg = ChainConfig::new(7, 20, 5).with_thin(3);
        let out = run_chain(&CopulaSpec::Clayton { theta: 2.0 }, &cfg).unwrap();
        assert_eq!(out.pairs.len(), 20);
        assert_eq!(out.accepted_count, 67);
        let thin1 = run_chain(
            &CopulaSpec::Clayton { theta: 2.0 },
            &ChainConfig::new(0, 67, 5),
        )
        .unwrap();
        assert_eq!(out.pairs[0], thin1.pairs[9]);
        assert_eq!(out.pairs[19], thin1.pairs[66]);
    }

    #[test]
    fn rejects_bad_config() {
        let spec = CopulaSpec::Independence;
        assert!(run_chain(&spec, &ChainConfig::new(0, 0, 1)).is_err());
        assert!(run_chain(&spec, &ChainConfig::new(0, 5, 1).with_thin(0)).is_err());
        assert!(run_chain(
            &CopulaSpec::Gumbel { theta: 0.2 },
            &ChainConfig::new(0, 5, 1)
        )
        .is_err());
    }

    #[test]
    fn streams_differ() {
        let mut a = UniformStream::new(9, 0);
        let mut b = UniformStream::new(9, 1);
        assert_ne!(a.next_open(), b.next_open());
    }
}
