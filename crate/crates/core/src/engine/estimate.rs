//! Batch estimators. Every sample carries a weight: Monte Carlo batches
//! use weight one, exact enumeration uses the Born probabilities.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::operators::BasisIndex;

#[derive(Clone, Debug, PartialEq)]
pub struct LocalEnergySample {
    pub x: BasisIndex,
    pub weight: f64,
    pub local_energy: Complex64,
    /// `∂ log ψ(x) / ∂θ_k` over the real parameter coordinates.
    pub log_grad: Vec<Complex64>,
}

fn total_weight(samples: &[LocalEnergySample]) -> f64 {
    samples.iter().map(|s| s.weight).sum()
}

/// Weighted mean of the local energies. The real part is the objective;
/// the imaginary part vanishes for Hermitian operators and is kept as a
/// diagnostic.
pub fn estimate_objective(samples: &[LocalEnergySample]) -> Complex64 {
    let w = total_weight(samples);
    samples.iter().map(|s| s.local_energy * s.weight).sum::<Complex64>() / w
}

/// Weighted mean of `|l − L̂|²`.
pub fn estimate_variance(samples: &[LocalEnergySample]) -> f64 {
    let mean = estimate_objective(samples);
    let w = total_weight(samples);
    samples.iter().map(|s| (s.local_energy - mean).norm_sqr() * s.weight).sum::<f64>() / w
}

fn mean_log_grad(samples: &[LocalEnergySample]) -> Vec<Complex64> {
    let p = samples.first().map_or(0, |s| s.log_grad.len());
    let w = total_weight(samples);
    let mut mean = vec![Complex64::new(0.0, 0.0); p];
    for s in samples {
        for (m, &o) in mean.iter_mut().zip(&s.log_grad) {
            *m += o * s.weight;
        }
    }
    mean.iter_mut().for_each(|m| *m /= w);
    mean
}

/// Gradient of the objective over the real coordinates,
/// `2 Re E[(l − L̂) · conj(O − Ō)]`.
pub fn estimate_gradient(samples: &[LocalEnergySample], objective: Complex64) -> Vec<f64> {
    let mean = mean_log_grad(samples);
    let w = total_weight(samples);
    let mut grad = vec![0.0; mean.len()];
    for s in samples {
        let dl = (s.local_energy - objective) * s.weight;
        for ((g, &o), &m) in grad.iter_mut().zip(&s.log_grad).zip(&mean) {
            *g += (dl * (o - m).conj()).re;
        }
    }
    grad.iter_mut().for_each(|g| *g *= 2.0 / w);
    grad
}

/// Sample covariance of the log-derivatives,
/// `Re E[conj(O − Ō) (O − Ō)ᵀ]`, the metric used by stochastic
/// reconfiguration.
pub fn estimate_fisher(samples: &[LocalEnergySample]) -> DMatrix<f64> {
    let mean = mean_log_grad(samples);
    let p = mean.len();
    let w = total_weight(samples);
    let k = samples.len();
    // rows scaled by sqrt(weight / total), so the product sums the weights
    let mut re = DMatrix::<f64>::zeros(p, k);
    let mut im = DMatrix::<f64>::zeros(p, k);
    let mut has_imag = false;
    for (col, s) in samples.iter().enumerate() {
        let scale = (s.weight / w).sqrt();
        for (row, (&o, &m)) in s.log_grad.iter().zip(&mean).enumerate() {
            let d = o - m;
            re[(row, col)] = d.re * scale;
            im[(row, col)] = d.im * scale;
            has_imag |= d.im != 0.0;
        }
    }
    let mut fisher = &re * re.transpose();
    if has_imag {
        fisher += &im * im.transpose();
    }
    fisher
}
