use num_complex::Complex64;

use super::{Amplitude, Wavefunction};
use crate::error::{Error, Result};
use crate::operators::{BasisIndex, MAX_QUBITS};

/// Largest register stored as an explicit amplitude vector.
const STORAGE_LIMIT: usize = 24;

/// A state stored as its full amplitude vector.
///
/// As a [`Wavefunction`] its parameters are the real parts of all
/// amplitudes followed by the imaginary parts.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    n: usize,
    amplitudes: Vec<Complex64>,
}

impl DenseState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("state length {len} is not 2^n with n >= 1")));
        }
        let n = len.trailing_zeros() as usize;
        if n > STORAGE_LIMIT.min(MAX_QUBITS) {
            return Err(Error::DenseLimit { what: "dense state storage", n, limit: STORAGE_LIMIT });
        }
        if amplitudes.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(Error::InvalidArgument("non-finite amplitude".into()));
        }
        if amplitudes.iter().all(|a| a.norm_sqr() == 0.0) {
            return Err(Error::InvalidArgument("state has no nonzero amplitude".into()));
        }
        Ok(DenseState { n, amplitudes })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// The all-ones vector on `n` qubits.
    pub fn ones(n: usize) -> Result<Self> {
        if n == 0 || n > STORAGE_LIMIT {
            return Err(Error::DenseLimit { what: "dense state storage", n, limit: STORAGE_LIMIT });
        }
        Self::new(vec![Complex64::new(1.0, 0.0); 1 << n])
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn scaled(&self, c: Complex64) -> Result<Self> {
        Self::new(self.amplitudes.iter().map(|&a| a * c).collect())
    }

    /// `log b(x)`, or an error where the amplitude is exactly zero.
    pub fn try_log_amp(&self, x: BasisIndex) -> Result<Complex64> {
        let a = self.amplitudes[x as usize];
        if a.norm_sqr() == 0.0 {
            Err(Error::ZeroAmplitude(x))
        } else {
            Ok(a.ln())
        }
    }

    /// Basis indices with nonzero amplitude, ascending.
    pub fn support(&self) -> impl Iterator<Item = BasisIndex> + '_ {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm_sqr() != 0.0)
            .map(|(x, _)| x as BasisIndex)
    }
}

impl Amplitude for DenseState {
    fn n(&self) -> usize {
        self.n
    }

    fn log_amp(&self, x: BasisIndex) -> Complex64 {
        self.try_log_amp(x).unwrap_or(Complex64::new(f64::NEG_INFINITY, 0.0))
    }

    fn amp(&self, x: BasisIndex) -> Complex64 {
        self.amplitudes[x as usize]
    }
}

impl Wavefunction for DenseState {
    fn param_count(&self) -> usize {
        2 * self.amplitudes.len()
    }

    fn params(&self) -> Vec<f64> {
        let mut p: Vec<f64> = self.amplitudes.iter().map(|a| a.re).collect();
        p.extend(self.amplitudes.iter().map(|a| a.im));
        p
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        let dim = self.amplitudes.len();
        if params.len() != 2 * dim {
            return Err(Error::InvalidArgument(format!(
                "expected {} parameters, got {}",
                2 * dim,
                params.len()
            )));
        }
        let amplitudes = (0..dim).map(|k| Complex64::new(params[k], params[dim + k])).collect();
        *self = Self::new(amplitudes)?;
        Ok(())
    }

    fn log_grad(&self, x: BasisIndex) -> Vec<Complex64> {
        let dim = self.amplitudes.len();
        let mut g = vec![Complex64::new(0.0, 0.0); 2 * dim];
        let inv = self.amplitudes[x as usize].inv();
        g[x as usize] = inv;
        g[dim + x as usize] = Complex64::i() * inv;
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_amplitudes() {
        let b = DenseState::ones(3).unwrap();
        for x in 0..8 {
            assert_eq!(b.try_log_amp(x).unwrap(), Complex64::new(0.0, 0.0));
        }
        let b = DenseState::from_real(&[1.0, 1.0, 1.0, 2.0]).unwrap();
        assert!((b.try_log_amp(3).unwrap().re - 2f64.ln()).abs() < 1e-15);
        let b = DenseState::from_real(&[1.0, 0.0]).unwrap();
        assert!(matches!(b.try_log_amp(1), Err(Error::ZeroAmplitude(1))));
        assert_eq!(b.amp(1), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn rejects_bad_vectors() {
        assert!(DenseState::from_real(&[0.0, 0.0]).is_err());
        assert!(DenseState::from_real(&[1.0, 0.0, 1.0]).is_err());
        assert!(DenseState::from_real(&[f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn params_round_trip() {
        let mut s = DenseState::new(vec![Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.25)]).unwrap();
        let p = s.params();
        s.set_params(&p).unwrap();
        assert_eq!(s.params(), p);
    }
}
