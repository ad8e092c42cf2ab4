use nalgebra::{DMatrix, DVector};

/// Default relative diagonal shift `λ`.
pub const DEFAULT_SHIFT: f64 = 1e-2;
/// Default absolute diagonal shift `ε`.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Inputs of one stochastic-reconfiguration update.
#[derive(Clone, Debug, PartialEq)]
pub struct SrState {
    pub grad: Vec<f64>,
    pub fisher: DMatrix<f64>,
    pub shift: f64,
    pub epsilon: f64,
    pub learning_rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SrOutcome {
    pub params: Vec<f64>,
    /// The regularized system could not be solved and a plain gradient
    /// step was taken instead.
    pub fell_back: bool,
}

/// `θ' = θ − γ δ` with `(F + λ·diag(F) + ε·I) δ = ∇L`.
pub fn sr_step(theta: &[f64], sr: &SrState) -> SrOutcome {
    let p = theta.len();
    assert_eq!(sr.grad.len(), p, "gradient length");
    assert_eq!(sr.fisher.shape(), (p, p), "Fisher shape");

    let mut system = sr.fisher.clone();
    system.fill_upper_triangle_with_lower_triangle();
    for k in 0..p {
        system[(k, k)] += sr.shift * sr.fisher[(k, k)] + sr.epsilon;
    }
    let rhs = DVector::from_column_slice(&sr.grad);
    let solved = system.cholesky().map(|ch| ch.solve(&rhs)).filter(|d| d.iter().all(|v| v.is_finite()));
    let (delta, fell_back) = match solved {
        Some(d) => (d, false),
        None => (rhs, true),
    };
    let params = theta.iter().zip(delta.iter()).map(|(&t, &d)| t - sr.learning_rate * d).collect();
    SrOutcome { params, fell_back }
}
