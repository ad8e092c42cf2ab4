//! Variational neural linear solver.
//!
//! Solves `A x ∝ b` for Hermitian `A` given as a sum of Pauli strings on `n`
//! qubits, by training a neural-network state `ψ_θ` with Monte Carlo
//! estimates of the loss `⟨ψ|A P_b⊥ A|ψ⟩/⟨ψ|ψ⟩` and stochastic
//! reconfiguration. A dense oracle provides exact references for small `n`.
//!
//! ```
//! use vnls::engine::{train_vnls, TrainConfig};
//! use vnls::problems::ising_problem;
//! use vnls::states::{Flavor, Rbm};
//!
//! let problem = ising_problem(4, 10.0).unwrap();
//! let mut psi = Rbm::init_gaussian(4, 1.0, Flavor::Real, 0.01, 7).unwrap();
//! let config = TrainConfig { epochs: 5, batch_size: 64, ..TrainConfig::default() };
//! let log = train_vnls(&problem.a, &problem.b, &mut psi, &config, None).unwrap();
//! assert_eq!(log.len(), 5);
//! ```

pub mod cli;
pub mod engine;
pub mod error;
pub mod operators;
pub mod oracle;
pub mod problems;
pub mod sampling;
pub mod states;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/operators.md")]
    mod operators {}
    #[doc = include_str!("../../../book/src/states.md")]
    mod states {}
    #[doc = include_str!("../../../book/src/sampling.md")]
    mod sampling {}
    #[doc = include_str!("../../../book/src/engine.md")]
    mod engine {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
