//! Classically tractable states: amplitudes can be evaluated at any basis
//! index, and log-derivatives with respect to the parameters are analytic.

mod dense;
mod rbm;

pub use dense::DenseState;
pub use rbm::{log2cosh, Flavor, Rbm, DEFAULT_ALPHA};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operators::BasisIndex;

/// Largest qubit count for which a state is enumerated over all `2^n` indices.
pub const DENSE_LIMIT: usize = 14;

/// A state whose amplitude `ψ(x)` can be evaluated at any basis index.
pub trait Amplitude: Sync {
    fn n(&self) -> usize;

    /// `log ψ(x)`; the imaginary part is the phase. A zero amplitude has
    /// real part `-∞`.
    fn log_amp(&self, x: BasisIndex) -> Complex64;

    fn amp(&self, x: BasisIndex) -> Complex64 {
        let l = self.log_amp(x);
        if l.re == f64::NEG_INFINITY {
            Complex64::new(0.0, 0.0)
        } else {
            l.exp()
        }
    }

    /// `log ψ(c)` for every `c` in `cols`. Implementations may reuse work
    /// done at `x` when the columns differ from it in a few bits.
    fn log_amps_near(&self, x: BasisIndex, cols: &[BasisIndex]) -> Vec<Complex64> {
        let _ = x;
        cols.iter().map(|&c| self.log_amp(c)).collect()
    }
}

/// A parameterized state. Parameters are exposed as a flat vector of real
/// coordinates; complex parameters contribute their real and imaginary
/// parts as separate coordinates.
pub trait Wavefunction: Amplitude + Send {
    fn param_count(&self) -> usize;

    fn params(&self) -> Vec<f64>;

    fn set_params(&mut self, params: &[f64]) -> Result<()>;

    /// `∂ log ψ(x) / ∂θ_k` for every real coordinate `θ_k`.
    fn log_grad(&self, x: BasisIndex) -> Vec<Complex64>;
}

/// All amplitudes of `psi`, rescaled by a common positive factor so the
/// largest has modulus one. Fidelities and Rayleigh quotients do not see
/// the factor.
pub fn enumerate<A: Amplitude + ?Sized>(psi: &A) -> Result<Vec<Complex64>> {
    let n = psi.n();
    if n > DENSE_LIMIT {
        return Err(Error::DenseLimit { what: "state enumeration", n, limit: DENSE_LIMIT });
    }
    let logs: Vec<Complex64> = (0..1u64 << n).map(|x| psi.log_amp(x)).collect();
    let max = logs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::InvalidArgument("state has no nonzero amplitude".into()));
    }
    Ok(logs
        .into_iter()
        .map(|l| {
            if l.re == f64::NEG_INFINITY {
                Complex64::new(0.0, 0.0)
            } else {
                (l - max).exp()
            }
        })
        .collect())
}

/// `(x, π(x))` for every index with a nonzero amplitude, where
/// `π(x) = |ψ(x)|² / ⟨ψ|ψ⟩`.
pub fn born_weights<A: Amplitude + ?Sized>(psi: &A) -> Result<Vec<(BasisIndex, f64)>> {
    let amps = enumerate(psi)?;
    let total: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    Ok(amps
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm_sqr() > 0.0)
        .map(|(x, a)| (x as BasisIndex, a.norm_sqr() / total))
        .collect())
}

/// `+1` for a 0 bit, `-1` for a 1 bit, qubit 0 first.
pub fn spins(n: usize, x: BasisIndex) -> Vec<f64> {
    (0..n).map(|q| if (x >> (n - 1 - q)) & 1 == 0 { 1.0 } else { -1.0 }).collect()
}
