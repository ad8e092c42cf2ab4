use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::operators::{BasisIndex, PauliSum};
use crate::sampling::SampleBatch;
use crate::states::{Amplitude, DenseState};

/// `Σ_(c,v) v · ψ(c)/ψ(x)` in the log domain, for a sparse row at `x`.
fn row_ratio_sum<A: Amplitude + ?Sized>(
    psi: &A,
    x: BasisIndex,
    row: &[(BasisIndex, Complex64)],
) -> Result<Complex64> {
    let mut cols: Vec<BasisIndex> = row.iter().map(|&(c, _)| c).collect();
    cols.push(x);
    let logs = psi.log_amps_near(x, &cols);
    let log_x = logs[row.len()];
    if log_x.re == f64::NEG_INFINITY {
        return Err(Error::ZeroAmplitude(x));
    }
    Ok(row
        .iter()
        .zip(&logs)
        .filter(|(_, l)| l.re != f64::NEG_INFINITY)
        .map(|(&(_, v), &l)| v * (l - log_x).exp())
        .sum())
}

/// `l(x) = (Hψ)(x) / ψ(x)`.
pub fn local_energy_h<A: Amplitude + ?Sized>(h: &PauliSum, psi: &A, x: BasisIndex) -> Result<Complex64> {
    row_ratio_sum(psi, x, &h.apply_sum_row(x))
}

/// The β-expectation `E_β[(Aψ)(x')/b(x')]` of the linear-system local
/// energy, stored as `value · e^shift` so unnormalized states cannot
/// overflow it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaTerm {
    pub value: Complex64,
    pub shift: f64,
}

impl BetaTerm {
    /// The expectation itself (may overflow for very large amplitudes).
    pub fn expectation(&self) -> Complex64 {
        self.value * self.shift.exp()
    }
}

/// Weighted β-expectation over explicit points; weights are normalized.
pub fn beta_term_weighted<A: Amplitude + ?Sized>(
    a: &PauliSum,
    b: &DenseState,
    psi: &A,
    points: &[BasisIndex],
    weights: Option<&[f64]>,
) -> Result<BetaTerm> {
    let Some(&first) = points.first() else {
        return invalid("empty β batch");
    };
    let shift = psi.log_amp(first).re;
    let shift = if shift.is_finite() { shift } else { 0.0 };
    let mut total = Complex64::new(0.0, 0.0);
    let mut weight_sum = 0.0;
    for (k, &xp) in points.iter().enumerate() {
        let bx = b.amp(xp);
        if bx.norm_sqr() == 0.0 {
            return Err(Error::ZeroAmplitude(xp));
        }
        let row = a.apply_sum_row(xp);
        let cols: Vec<BasisIndex> = row.iter().map(|&(c, _)| c).collect();
        let logs = psi.log_amps_near(xp, &cols);
        let a_psi: Complex64 = row
            .iter()
            .zip(&logs)
            .filter(|(_, l)| l.re != f64::NEG_INFINITY)
            .map(|(&(_, v), &l)| v * (l - shift).exp())
            .sum();
        let w = weights.map_or(1.0, |w| w[k]);
        total += a_psi / bx * w;
        weight_sum += w;
    }
    Ok(BetaTerm { value: total / weight_sum, shift })
}

/// β-expectation estimated from a batch drawn from `β`.
pub fn beta_term<A: Amplitude + ?Sized>(
    a: &PauliSum,
    b: &DenseState,
    psi: &A,
    batch: &SampleBatch,
) -> Result<BetaTerm> {
    beta_term_weighted(a, b, psi, &batch.indices, None)
}

/// Linear-system local energy with a precomputed β-expectation:
/// `l(x) = [(A²ψ)(x) − (Ab)(x)·E_β] / ψ(x)`.
pub fn local_energy_vnls_with<A: Amplitude + ?Sized>(
    a: &PauliSum,
    b: &DenseState,
    psi: &A,
    x: BasisIndex,
    term: &BetaTerm,
) -> Result<Complex64> {
    let squared = a.squared_row(x);
    let mut cols: Vec<BasisIndex> = squared.iter().map(|&(c, _)| c).collect();
    cols.push(x);
    let logs = psi.log_amps_near(x, &cols);
    let log_x = logs[squared.len()];
    if log_x.re == f64::NEG_INFINITY {
        return Err(Error::ZeroAmplitude(x));
    }
    let a2: Complex64 = squared
        .iter()
        .zip(&logs)
        .filter(|(_, l)| l.re != f64::NEG_INFINITY)
        .map(|(&(_, v), &l)| v * (l - log_x).exp())
        .sum();
    let ab = a.apply_to_state(b, x);
    Ok(a2 - ab * term.value * (Complex64::new(term.shift, 0.0) - log_x).exp())
}

/// Linear-system local energy, estimating the β-expectation from `beta_batch`.
pub fn local_energy_vnls<A: Amplitude + ?Sized>(
    a: &PauliSum,
    b: &DenseState,
    psi: &A,
    x: BasisIndex,
    beta_batch: &SampleBatch,
) -> Result<Complex64> {
    if !a.is_hermitian() {
        return invalid("the linear-system objective needs a Hermitian A; embed it first");
    }
    let term = beta_term(a, b, psi, beta_batch)?;
    local_energy_vnls_with(a, b, psi, x, &term)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{sample_beta, Source};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn ising_like_examples() {
        let z = PauliSum::parse("1 Z0", 1).unwrap();
        let psi = DenseState::from_real(&[1.0, 1.0]).unwrap();
        assert_eq!(local_energy_h(&z, &psi, 0).unwrap(), c(1.0));
        assert_eq!(local_energy_h(&z, &psi, 1).unwrap(), c(-1.0));

        let x = PauliSum::parse("1 X0", 1).unwrap();
        assert_eq!(local_energy_h(&x, &psi, 0).unwrap(), c(1.0));
        assert_eq!(local_energy_h(&x, &psi, 1).unwrap(), c(1.0));

        let h = PauliSum::parse("1 X0\n1 Z0", 1).unwrap();
        let psi = DenseState::from_real(&[2.0, 1.0]).unwrap();
        assert!((local_energy_h(&h, &psi, 0).unwrap() - c(1.5)).norm() < 1e-15);
        assert!((local_energy_h(&h, &psi, 1).unwrap() - c(1.0)).norm() < 1e-15);

        let psi = DenseState::from_real(&[1.0, 0.0]).unwrap();
        assert!(matches!(local_energy_h(&h, &psi, 1), Err(Error::ZeroAmplitude(1))));
    }

    #[test]
    fn exact_solution_has_zero_local_energy() {
        let identity = PauliSum::parse("1 I", 2).unwrap();
        let b = DenseState::from_real(&[1.0, -2.0, 0.5, 3.0]).unwrap();
        let batch = sample_beta(&b, 16, 1).unwrap();
        for x in 0..4 {
            let l = local_energy_vnls(&identity, &b, &b, x, &batch).unwrap();
            assert!(l.norm() < 1e-14, "{l}");
        }
    }

    #[test]
    fn rhs_and_operator_scaling() {
        let a = PauliSum::parse("0.3 X0\n0.2 Z0 Z1\n1 I", 2).unwrap();
        let b = DenseState::from_real(&[1.0, 0.5, -0.25, 2.0]).unwrap();
        let psi = DenseState::from_real(&[0.7, -0.1, 0.4, 1.3]).unwrap();
        let batch = sample_beta(&b, 32, 4).unwrap();
        let b2 = b.scaled(c(2.0)).unwrap();
        let batch2 = sample_beta(&b2, 32, 4).unwrap();
        assert_eq!(batch.indices, batch2.indices);
        let a4 = a.scaled(c(4.0));
        for x in 0..4 {
            let l = local_energy_vnls(&a, &b, &psi, x, &batch).unwrap();
            assert_eq!(local_energy_vnls(&a, &b2, &psi, x, &batch2).unwrap(), l);
            assert_eq!(local_energy_vnls(&a4, &b, &psi, x, &batch).unwrap(), l * 16.0);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let a = PauliSum::parse("0 1 X0", 1).unwrap();
        let b = DenseState::ones(1).unwrap();
        let batch = sample_beta(&b, 4, 0).unwrap();
        assert!(local_energy_vnls(&a, &b, &b, 0, &batch).is_err());
        let a = PauliSum::parse("1 X0", 1).unwrap();
        let empty = SampleBatch { indices: vec![], source: Source::Beta, log_amps: vec![] };
        assert!(local_energy_vnls(&a, &b, &b, 0, &empty).is_err());
    }
}
