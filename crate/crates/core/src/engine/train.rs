use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::estimate::{estimate_fisher, estimate_gradient, estimate_objective, estimate_variance, LocalEnergySample};
use super::local_energy::{beta_term, beta_term_weighted, local_energy_h, local_energy_vnls_with};
use super::sr::{sr_step, SrState, DEFAULT_EPSILON, DEFAULT_SHIFT};
use crate::error::{invalid, Error, Result};
use crate::operators::PauliSum;
use crate::oracle::fidelity;
use crate::sampling::{acceptance_stats, metropolis_sample, sample_beta, SamplerConfig};
use crate::states::{born_weights, enumerate, Amplitude, DenseState, Wavefunction};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Relative diagonal shift `λ` of the metric.
    pub shift: f64,
    /// Absolute diagonal shift `ε` of the metric.
    pub epsilon: f64,
    pub sampler: SamplerConfig,
    pub seed: u64,
    /// Compute the fidelity against the reference every this many epochs
    /// (and after the last one).
    pub oracle_every: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 1000,
            batch_size: 1024,
            learning_rate: 0.005,
            shift: DEFAULT_SHIFT,
            epsilon: DEFAULT_EPSILON,
            sampler: SamplerConfig::default(),
            seed: 0,
            oracle_every: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return invalid("batch size must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return invalid("learning rate must be positive");
        }
        if !(self.shift >= 0.0 && self.epsilon >= 0.0) {
            return invalid("metric shifts must be non-negative");
        }
        if self.sampler.chains == 0 || self.sampler.thin == Some(0) {
            return invalid("sampler needs at least one chain and thin >= 1");
        }
        if self.oracle_every == Some(0) {
            return invalid("oracle interval must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Real part of the batch mean of the local energies.
    pub loss: f64,
    pub loss_imag: f64,
    pub loss_var: f64,
    pub grad_norm: f64,
    pub acceptance: f64,
    /// Fidelity of the state after this epoch's update with the reference.
    pub fidelity: Option<f64>,
    pub wall_ms: f64,
    pub sr_fallback: bool,
}

impl EpochRecord {
    /// The imaginary part of the loss is not negligible, which points at a
    /// non-Hermitian operator.
    pub fn hermiticity_warning(&self) -> bool {
        self.loss_imag.abs() > 1e-6 * self.loss.abs()
    }
}

/// Everything estimated from one epoch's batch, before the update.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochEstimate {
    pub samples: Vec<LocalEnergySample>,
    pub objective: Complex64,
    pub variance: f64,
    pub gradient: Vec<f64>,
    pub fisher: DMatrix<f64>,
    pub acceptance: f64,
}

impl EpochEstimate {
    pub fn from_samples(samples: Vec<LocalEnergySample>, acceptance: f64) -> Self {
        let objective = estimate_objective(&samples);
        let variance = estimate_variance(&samples);
        let gradient = estimate_gradient(&samples, objective);
        let fisher = estimate_fisher(&samples);
        EpochEstimate { samples, objective, variance, gradient, fisher, acceptance }
    }
}

/// Seed of one epoch, derived from the master seed (splitmix64 finalizer).
pub fn epoch_seed(master: u64, epoch: usize) -> u64 {
    let mut z = master.wrapping_add((epoch as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sample `π`, evaluate `l(x) = (Hψ)(x)/ψ(x)` and the estimates.
pub fn vqmc_epoch<W: Wavefunction + ?Sized>(
    h: &PauliSum,
    psi: &W,
    config: &TrainConfig,
    epoch: usize,
) -> Result<EpochEstimate> {
    let seed = epoch_seed(config.seed, epoch);
    let (batch, chains) = metropolis_sample(psi, config.batch_size, &config.sampler, seed)?;
    let samples = batch
        .indices
        .par_iter()
        .map(|&x| {
            Ok(LocalEnergySample { x, weight: 1.0, local_energy: local_energy_h(h, psi, x)?, log_grad: psi.log_grad(x) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EpochEstimate::from_samples(samples, acceptance_stats(&chains)))
}

/// Sample `π` and `β`, form the β-expectation once, then evaluate the
/// linear-system local energy at every `π` sample.
pub fn vnls_epoch<W: Wavefunction + ?Sized>(
    a: &PauliSum,
    b: &DenseState,
    psi: &W,
    config: &TrainConfig,
    epoch: usize,
) -> Result<EpochEstimate> {
    let seed = epoch_seed(config.seed, epoch);
    let (batch, chains) = metropolis_sample(psi, config.batch_size, &config.sampler, seed)?;
    let beta = sample_beta(b, config.batch_size, seed)?;
    let term = beta_term(a, b, psi, &beta)?;
    let samples = batch
        .indices
        .par_iter()
        .map(|&x| {
            Ok(LocalEnergySample {
                x,
                weight: 1.0,
                local_energy: local_energy_vnls_with(a, b, psi, x, &term)?,
                log_grad: psi.log_grad(x),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EpochEstimate::from_samples(samples, acceptance_stats(&chains)))
}

fn exact_estimate<W, F>(psi: &W, local_energy: F) -> Result<EpochEstimate>
where
    W: Wavefunction + ?Sized,
    F: Fn(u64) -> Result<Complex64> + Sync,
{
    let samples = born_weights(psi)?
        .into_par_iter()
        .map(|(x, weight)| Ok(LocalEnergySample { x, weight, local_energy: local_energy(x)?, log_grad: psi.log_grad(x) }))
        .collect::<Result<Vec<_>>>()?;
    Ok(EpochEstimate::from_samples(samples, 1.0))
}

/// Estimates over the full Born distribution instead of a sampled batch,
/// so every quantity is exact (up to roundoff).
pub fn vqmc_exact<W: Wavefunction + ?Sized>(h: &PauliSum, psi: &W) -> Result<EpochEstimate> {
    exact_estimate(psi, |x| local_energy_h(h, psi, x))
}

/// Exact counterpart of [`vnls_epoch`]: `π` and `β` are both enumerated.
pub fn vnls_exact<W: Wavefunction + ?Sized>(a: &PauliSum, b: &DenseState, psi: &W) -> Result<EpochEstimate> {
    let support: Vec<u64> = b.support().collect();
    let total = b.norm_sqr();
    let weights: Vec<f64> = support.iter().map(|&x| b.amp(x).norm_sqr() / total).collect();
    let term = beta_term_weighted(a, b, psi, &support, Some(&weights))?;
    exact_estimate(psi, |x| local_energy_vnls_with(a, b, psi, x, &term))
}

/// Apply the regularized natural-gradient update. Returns whether the
/// solve fell back to a plain gradient step.
pub fn apply_update<W: Wavefunction + ?Sized>(
    psi: &mut W,
    estimate: &EpochEstimate,
    config: &TrainConfig,
) -> Result<bool> {
    let sr = SrState {
        grad: estimate.gradient.clone(),
        fisher: estimate.fisher.clone(),
        shift: config.shift,
        epsilon: config.epsilon,
        learning_rate: config.learning_rate,
    };
    let outcome = sr_step(&psi.params(), &sr);
    psi.set_params(&outcome.params)?;
    Ok(outcome.fell_back)
}

fn check_reference<W: Wavefunction + ?Sized>(psi: &W, config: &TrainConfig, reference: Option<&[Complex64]>) -> Result<()> {
    match (config.oracle_every, reference) {
        (Some(_), None) => invalid("fidelity monitoring needs a reference vector"),
        (_, Some(r)) if r.len() != 1usize << psi.n() => invalid("reference vector length must be 2^n"),
        _ => Ok(()),
    }
}

fn run<W, F>(
    psi: &mut W,
    config: &TrainConfig,
    reference: Option<&[Complex64]>,
    mut estimate_epoch: F,
) -> Result<Vec<EpochRecord>>
where
    W: Wavefunction + ?Sized,
    F: FnMut(&W, usize) -> Result<EpochEstimate>,
{
    config.validate()?;
    check_reference(psi, config, reference)?;
    let mut records = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let start = Instant::now();
        let estimate = estimate_epoch(psi, epoch)?;
        let sr_fallback = apply_update(psi, &estimate, config)?;
        let due = config.oracle_every.is_some_and(|every| (epoch + 1) % every == 0 || epoch + 1 == config.epochs);
        let fid = match (due, reference) {
            (true, Some(r)) => Some(fidelity(&enumerate(psi)?, r)),
            _ => None,
        };
        records.push(EpochRecord {
            epoch,
            loss: estimate.objective.re,
            loss_imag: estimate.objective.im,
            loss_var: estimate.variance,
            grad_norm: estimate.gradient.iter().map(|g| g * g).sum::<f64>().sqrt(),
            acceptance: estimate.acceptance,
            fidelity: fid,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            sr_fallback,
        });
    }
    Ok(records)
}

/// Ground-state search: minimize `⟨ψ|H|ψ⟩/⟨ψ|ψ⟩`.
pub fn train_vqmc<W: Wavefunction + ?Sized>(
    h: &PauliSum,
    psi: &mut W,
    config: &TrainConfig,
    reference: Option<&[Complex64]>,
) -> Result<Vec<EpochRecord>> {
    if h.n() != psi.n() {
        return invalid("operator and state act on different registers");
    }
    run(psi, config, reference, |psi, epoch| vqmc_epoch(h, psi, config, epoch))
}

/// Linear-system solve: minimize `⟨ψ|A P_b⊥ A|ψ⟩/⟨ψ|ψ⟩`, which vanishes
/// exactly when `ψ ∝ A⁻¹ b`.
pub fn train_vnls<W: Wavefunction + ?Sized>(
    a: &PauliSum,
    b: &DenseState,
    psi: &mut W,
    config: &TrainConfig,
    reference: Option<&[Complex64]>,
) -> Result<Vec<EpochRecord>> {
    if a.n() != psi.n() || b.n() != psi.n() {
        return invalid("A, b and the state act on different registers");
    }
    if !a.is_hermitian() {
        return Err(Error::InvalidArgument("A must be Hermitian; embed it first".into()));
    }
    run(psi, config, reference, |psi, epoch| vnls_epoch(a, b, psi, config, epoch))
}
