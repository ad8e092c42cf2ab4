//! Local energies, batch estimators, stochastic reconfiguration and the
//! two training loops (ground state of `H`, and the linear system `A x ∝ b`).

mod estimate;
mod local_energy;
mod sr;
mod train;

pub use estimate::{estimate_fisher, estimate_gradient, estimate_objective, estimate_variance, LocalEnergySample};
pub use local_energy::{
    beta_term, beta_term_weighted, local_energy_h, local_energy_vnls, local_energy_vnls_with, BetaTerm,
};
pub use sr::{sr_step, SrOutcome, SrState, DEFAULT_EPSILON, DEFAULT_SHIFT};
pub use train::{
    apply_update, epoch_seed, train_vnls, train_vqmc, vnls_epoch, vnls_exact, vqmc_epoch, vqmc_exact, EpochEstimate, EpochRecord,
    TrainConfig,
};
