//! Sampling basis indices from Born distributions.
//!
//! `π(x) ∝ |ψ(x)|²` is sampled with single-bit-flip Metropolis chains, and
//! `β(x) ∝ |b(x)|²` exactly by inverse CDF over the stored support of `b`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::operators::BasisIndex;
use crate::states::{Amplitude, DenseState};

/// Chains used when nothing else is configured.
pub const DEFAULT_CHAINS: usize = 8;

/// Stream id reserved for the β sampler within one derived seed.
const BETA_STREAM: u64 = 1 << 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Pi,
    Beta,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    pub indices: Vec<BasisIndex>,
    pub source: Source,
    /// `log ψ(x)` (or `log b(x)`) at each sample.
    pub log_amps: Vec<Complex64>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// State of one Metropolis chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub x: BasisIndex,
    /// `log |ψ(x)|²` at the current position.
    pub log_prob: f64,
    pub accepted: u64,
    pub proposed: u64,
}

impl ChainState {
    pub fn acceptance(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerConfig {
    pub chains: usize,
    /// Metropolis steps discarded per chain; `None` means `10·n` sweeps of `n` flips.
    pub burn_in: Option<usize>,
    /// Steps between recorded samples; `None` means `n`.
    pub thin: Option<usize>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { chains: DEFAULT_CHAINS, burn_in: None, thin: None }
    }
}

impl SamplerConfig {
    pub fn burn_in_for(&self, n: usize) -> usize {
        self.burn_in.unwrap_or(10 * n * n)
    }

    pub fn thin_for(&self, n: usize) -> usize {
        self.thin.unwrap_or(n).max(1)
    }
}

/// RNG for one stream of a seed. Streams never overlap, so results do not
/// depend on the order in which chains are scheduled.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Samples per chain: an even split with the remainder on the last chain.
fn chain_quotas(k: usize, chains: usize) -> Vec<usize> {
    let base = k / chains;
    let mut quotas = vec![base; chains];
    quotas[chains - 1] += k % chains;
    quotas
}

fn run_chain<A: Amplitude + ?Sized>(
    psi: &A,
    quota: usize,
    burn_in: usize,
    thin: usize,
    mut rng: ChaCha8Rng,
) -> (Vec<BasisIndex>, Vec<Complex64>, ChainState) {
    let n = psi.n();
    let x0: BasisIndex = rng.gen_range(0..1u64 << n);
    let mut log_amp = psi.log_amp(x0);
    let mut state = ChainState { x: x0, log_prob: 2.0 * log_amp.re, accepted: 0, proposed: 0 };

    let mut step = |state: &mut ChainState, log_amp: &mut Complex64| {
        // q == n is a null move; it keeps the chain aperiodic when nearly
        // every flip is accepted, which would otherwise pin the parity of x
        let q = rng.gen_range(0..=n);
        let u: f64 = rng.gen();
        if q == n {
            return;
        }
        state.proposed += 1;
        let proposal = state.x ^ (1u64 << (n - 1 - q));
        let candidate = psi.log_amp(proposal);
        let delta = 2.0 * (candidate.re - log_amp.re);
        if delta >= 0.0 || u < delta.exp() {
            state.accepted += 1;
            state.x = proposal;
            state.log_prob = 2.0 * candidate.re;
            *log_amp = candidate;
        }
    };

    for _ in 0..burn_in {
        step(&mut state, &mut log_amp);
    }
    let mut xs = Vec::with_capacity(quota);
    let mut logs = Vec::with_capacity(quota);
    for _ in 0..quota {
        for _ in 0..thin {
            step(&mut state, &mut log_amp);
        }
        xs.push(state.x);
        logs.push(log_amp);
    }
    (xs, logs, state)
}

/// Draw `k` samples from `π(x) ∝ |ψ(x)|²` with independent Metropolis
/// chains. Each chain starts at a uniformly random index, discards its
/// burn-in, then records every `thin`-th state. Acceptance uses only the
/// ratio `|ψ(x')/ψ(x)|²`, so the normalization of `ψ` never enters.
pub fn metropolis_sample<A: Amplitude + ?Sized>(
    psi: &A,
    k: usize,
    config: &SamplerConfig,
    seed: u64,
) -> Result<(SampleBatch, Vec<ChainState>)> {
    if config.chains == 0 {
        return invalid("need at least one chain");
    }
    let n = psi.n();
    let burn_in = config.burn_in_for(n);
    let thin = config.thin_for(n);
    let runs: Vec<_> = chain_quotas(k, config.chains)
        .into_par_iter()
        .enumerate()
        .map(|(c, quota)| run_chain(psi, quota, burn_in, thin, stream_rng(seed, c as u64)))
        .collect();

    let mut batch = SampleBatch { indices: Vec::with_capacity(k), source: Source::Pi, log_amps: Vec::with_capacity(k) };
    let mut chains = Vec::with_capacity(runs.len());
    for (xs, logs, state) in runs {
        batch.indices.extend(xs);
        batch.log_amps.extend(logs);
        chains.push(state);
    }
    Ok((batch, chains))
}

/// Draw `k` exact samples from `β(x) ∝ |b(x)|²`; indices where `b` is zero
/// are never returned.
pub fn sample_beta(b: &DenseState, k: usize, seed: u64) -> Result<SampleBatch> {
    let support: Vec<BasisIndex> = b.support().collect();
    if support.is_empty() {
        return invalid("b has no nonzero entry");
    }
    let mut total = 0.0;
    let cumulative: Vec<f64> = support
        .iter()
        .map(|&x| {
            total += b.amp(x).norm_sqr();
            total
        })
        .collect();
    let mut rng = stream_rng(seed, BETA_STREAM);
    let indices: Vec<BasisIndex> = (0..k)
        .map(|_| {
            let u = rng.gen::<f64>() * total;
            let pos = cumulative.partition_point(|&c| c <= u).min(support.len() - 1);
            support[pos]
        })
        .collect();
    let log_amps = indices.iter().map(|&x| b.log_amp(x)).collect();
    Ok(SampleBatch { indices, source: Source::Beta, log_amps })
}

/// Pooled acceptance ratio over all chains.
pub fn acceptance_stats(chains: &[ChainState]) -> f64 {
    let accepted: u64 = chains.iter().map(|c| c.accepted).sum();
    let proposed: u64 = chains.iter().map(|c| c.proposed).sum();
    if proposed == 0 {
        0.0
    } else {
        accepted as f64 / proposed as f64
    }
}
