//! Exact dense reference for small registers: direct solves, spectra,
//! the exact loss, fidelity and trace distance, the a-posteriori error
//! bound, and the analytic identities of the Ising benchmark.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::operators::{Pauli, PauliSum, PauliTerm, MATRIX_LIMIT};
use crate::problems::{ising_problem, LinearProblem};
use crate::states::DENSE_LIMIT;

/// Largest register solved by dense LU; larger ones use conjugate
/// gradients on the normal equations.
pub const LU_LIMIT: usize = 10;
/// Required relative residual `‖A x − b‖ / ‖b‖` of [`exact_solve`].
pub const SOLVE_TOLERANCE: f64 = 1e-10;
/// Absolute slack granted to bound checks for roundoff near zero.
pub const BOUND_SLACK: f64 = 1e-10;

fn dot(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

/// Squared norm of the part of `v` orthogonal to `u`, relative to `‖v‖²`.
/// Written as a residual, so it stays accurate when `u ∥ v`.
fn orthogonal_fraction(u: &[Complex64], v: &[Complex64]) -> f64 {
    let uu = norm_sqr(u);
    let vv = norm_sqr(v);
    if uu == 0.0 || vv == 0.0 {
        return 1.0;
    }
    let c = dot(u, v) / uu;
    let rest: f64 = u.iter().zip(v).map(|(&a, &b)| (b - a * c).norm_sqr()).sum();
    (rest / vv).clamp(0.0, 1.0)
}

/// `|⟨u|v⟩|² / (⟨u|u⟩⟨v|v⟩)`, clamped to `[0, 1]`.
pub fn fidelity(u: &[Complex64], v: &[Complex64]) -> f64 {
    assert_eq!(u.len(), v.len(), "fidelity of vectors with different lengths");
    let den = norm_sqr(u) * norm_sqr(v);
    if den == 0.0 {
        return 0.0;
    }
    (dot(u, v).norm_sqr() / den).clamp(0.0, 1.0)
}

/// Pure-state trace distance `sqrt(1 − Fid(u, v))`.
pub fn trace_distance(u: &[Complex64], v: &[Complex64]) -> f64 {
    assert_eq!(u.len(), v.len(), "trace distance of vectors with different lengths");
    orthogonal_fraction(u, v).sqrt()
}

fn real_matrix(m: &DMatrix<Complex64>) -> Option<DMatrix<f64>> {
    m.iter().all(|z| z.im == 0.0).then(|| m.map(|z| z.re))
}

fn check_dims(n: usize, b: &[Complex64]) -> Result<()> {
    if b.len() != 1usize << n {
        return invalid(format!("right-hand side has length {} but A acts on {n} qubits", b.len()));
    }
    Ok(())
}

fn relative_residual(a: &PauliSum, x: &[Complex64], b: &[Complex64]) -> f64 {
    let ax = a.matvec(x);
    let r: f64 = ax.iter().zip(b).map(|(p, q)| (p - q).norm_sqr()).sum();
    (r / norm_sqr(b)).sqrt()
}

/// Solve a dense system by LU, with a real fast path.
pub fn exact_solve_dense(a: &DMatrix<Complex64>, b: &[Complex64]) -> Result<Vec<Complex64>> {
    if !a.is_square() || a.nrows() != b.len() {
        return invalid("matrix and right-hand side shapes differ");
    }
    let solution: Option<Vec<Complex64>> = match real_matrix(a) {
        Some(re) => {
            let lu = re.lu();
            let rhs = DMatrix::from_fn(b.len(), 2, |i, j| if j == 0 { b[i].re } else { b[i].im });
            lu.solve(&rhs).map(|s| (0..b.len()).map(|i| Complex64::new(s[(i, 0)], s[(i, 1)])).collect())
        }
        None => a.clone().lu().solve(&DVector::from_column_slice(b)).map(|s| s.iter().copied().collect()),
    };
    let x = solution.filter(|x| x.iter().all(|v| v.is_finite())).ok_or(Error::Singular(f64::INFINITY))?;
    let ax = a * DVector::from_column_slice(&x);
    let r: f64 = ax.iter().zip(b).map(|(p, q)| (p - q).norm_sqr()).sum();
    let rel = (r / norm_sqr(b)).sqrt();
    if !(rel < SOLVE_TOLERANCE) {
        return Err(Error::Singular(rel));
    }
    Ok(x)
}

/// Conjugate gradients on `A² x = A b` with matrix-free products.
fn normal_equations_cg(a: &PauliSum, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let dim = b.len();
    let rhs = a.matvec(b);
    let target = 1e-14 * norm_sqr(&rhs).sqrt();
    let mut x = vec![Complex64::new(0.0, 0.0); dim];
    let mut r = rhs;
    let mut p = r.clone();
    let mut rr = norm_sqr(&r);
    for _ in 0..20 * dim.max(50) {
        if rr.sqrt() <= target {
            break;
        }
        let ap = a.matvec(&a.matvec(&p));
        let pap = dot(&p, &ap).re;
        if !(pap > 0.0) {
            return Err(Error::Singular(f64::INFINITY));
        }
        let alpha = rr / pap;
        x.iter_mut().zip(&p).for_each(|(x, p)| *x += p * alpha);
        r.iter_mut().zip(&ap).for_each(|(r, q)| *r -= q * alpha);
        let next = norm_sqr(&r);
        let beta = next / rr;
        rr = next;
        p.iter_mut().zip(&r).for_each(|(p, r)| *p = r + *p * beta);
    }
    Ok(x)
}

/// `A⁻¹ b` for a Pauli-sum `A`: dense LU up to [`LU_LIMIT`] qubits,
/// matrix-free conjugate gradients up to the dense state limit.
pub fn exact_solve(a: &PauliSum, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = a.n();
    check_dims(n, b)?;
    if n > DENSE_LIMIT {
        return Err(Error::DenseLimit { what: "exact solve", n, limit: DENSE_LIMIT });
    }
    if norm_sqr(b) == 0.0 {
        return invalid("right-hand side is zero");
    }
    if n <= LU_LIMIT {
        return exact_solve_dense(&a.to_dense()?, b);
    }
    let x = normal_equations_cg(a, b)?;
    let rel = relative_residual(a, &x, b);
    if !(rel < SOLVE_TOLERANCE) {
        return Err(Error::Singular(rel));
    }
    Ok(x)
}

/// `⟨ψ|H|ψ⟩ / ⟨ψ|ψ⟩` without forming `H`.
pub fn rayleigh_quotient(h: &PauliSum, psi: &[Complex64]) -> Complex64 {
    dot(psi, &h.matvec(psi)) / norm_sqr(psi)
}

/// `⟨ψ|A P_b⊥ A|ψ⟩ / ⟨ψ|ψ⟩ = ‖P_b⊥ A ψ‖² / ‖ψ‖²` without forming `A`.
pub fn exact_loss(a: &PauliSum, b: &[Complex64], psi: &[Complex64]) -> f64 {
    let apsi = a.matvec(psi);
    let bb = norm_sqr(b);
    let c = dot(b, &apsi) / bb;
    let rest: f64 = apsi.iter().zip(b).map(|(&v, &u)| (v - u * c).norm_sqr()).sum();
    rest / norm_sqr(psi)
}

/// The same quotient with `P_b⊥ = I − b b† / ⟨b|b⟩` built explicitly.
pub fn exact_loss_dense(a: &DMatrix<Complex64>, b: &[Complex64], psi: &[Complex64]) -> f64 {
    let dim = b.len();
    let bv = DVector::from_column_slice(b);
    let projector = DMatrix::<Complex64>::identity(dim, dim) - &bv * bv.adjoint() / Complex64::new(bv.norm_squared(), 0.0);
    let v = DVector::from_column_slice(psi);
    let num = (v.adjoint() * a * projector * a * &v)[(0, 0)];
    num.re / v.norm_squared()
}

/// Extremal eigenvalues of a Hermitian operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spectrum {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Spectral norm `max |λ|`.
    pub norm: f64,
    /// Smallest `|λ|`.
    pub min_abs: f64,
}

impl Spectrum {
    pub fn from_eigenvalues(values: impl IntoIterator<Item = f64>) -> Self {
        let mut s = Spectrum { lambda_min: f64::INFINITY, lambda_max: f64::NEG_INFINITY, norm: 0.0, min_abs: f64::INFINITY };
        for v in values {
            s.lambda_min = s.lambda_min.min(v);
            s.lambda_max = s.lambda_max.max(v);
            s.norm = s.norm.max(v.abs());
            s.min_abs = s.min_abs.min(v.abs());
        }
        s
    }

    /// `‖A‖ ‖A⁻¹‖`.
    pub fn condition_number(&self) -> f64 {
        self.norm / self.min_abs
    }
}

/// Dense Hermitian eigenvalues, real symmetric when possible.
pub fn eigenvalues_dense(m: &DMatrix<Complex64>) -> Vec<f64> {
    match real_matrix(m) {
        Some(re) => re.symmetric_eigenvalues().iter().copied().collect(),
        None => m.clone().symmetric_eigenvalues().iter().copied().collect(),
    }
}

pub fn spectrum(a: &PauliSum) -> Result<Spectrum> {
    if !a.is_hermitian() {
        return invalid("spectrum needs a Hermitian operator");
    }
    Ok(Spectrum::from_eigenvalues(eigenvalues_dense(&a.to_dense()?)))
}

/// Result of checking `dist_Tr(ψ, A⁻¹b) ≤ κ √L / ‖A‖`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundCheck {
    pub norm_a: f64,
    pub kappa_actual: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `κ √L / ‖A‖`.
    pub bound: f64,
    pub bound_satisfied: bool,
    /// `κ √L`, which omits the normalization by `‖A‖`.
    pub naive_bound: f64,
    pub naive_satisfied: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub n: usize,
    pub kappa_nominal: Option<f64>,
    /// `A⁻¹ b`.
    pub solution: Vec<Complex64>,
    pub fidelity: f64,
    pub trace_distance: f64,
    pub loss: f64,
    /// Absent above the full-matrix limit.
    pub bound: Option<BoundCheck>,
}

fn opt<T: std::fmt::Debug>(v: Option<T>) -> String {
    v.map(|v| format!("{v:?}")).unwrap_or_default()
}

impl OracleReport {
    pub const CSV_HEADER: &'static str = "n,kappa_nominal,kappa_actual,norm_a,lambda_min,lambda_max,fidelity,trace_distance,loss,bound,bound_satisfied,naive_bound,naive_satisfied";

    fn fields(&self) -> Vec<(&'static str, String)> {
        let b = self.bound.as_ref();
        vec![
            ("n", self.n.to_string()),
            ("kappa_nominal", opt(self.kappa_nominal)),
            ("kappa_actual", opt(b.map(|b| b.kappa_actual))),
            ("norm_a", opt(b.map(|b| b.norm_a))),
            ("lambda_min", opt(b.map(|b| b.lambda_min))),
            ("lambda_max", opt(b.map(|b| b.lambda_max))),
            ("fidelity", format!("{:?}", self.fidelity)),
            ("trace_distance", format!("{:?}", self.trace_distance)),
            ("loss", format!("{:?}", self.loss)),
            ("bound", opt(b.map(|b| b.bound))),
            ("bound_satisfied", opt(b.map(|b| b.bound_satisfied))),
            ("naive_bound", opt(b.map(|b| b.naive_bound))),
            ("naive_satisfied", opt(b.map(|b| b.naive_satisfied))),
        ]
    }

    /// One `key=value` line per field.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.fields() {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// A row matching [`Self::CSV_HEADER`].
    pub fn to_csv_row(&self) -> String {
        self.fields().into_iter().map(|(_, v)| v).collect::<Vec<_>>().join(",")
    }
}

/// Exact quantities of one problem, computed once and reused across
/// candidate states.
#[derive(Clone, Debug)]
pub struct Oracle {
    pub problem: LinearProblem,
    pub solution: Vec<Complex64>,
    pub spectrum: Option<Spectrum>,
}

impl Oracle {
    pub fn new(problem: &LinearProblem) -> Result<Self> {
        let n = problem.n();
        if n > DENSE_LIMIT {
            return Err(Error::DenseLimit { what: "oracle", n, limit: DENSE_LIMIT });
        }
        let solution = exact_solve(&problem.a, problem.b.amplitudes())?;
        let spectrum = if n <= MATRIX_LIMIT { Some(spectrum(&problem.a)?) } else { None };
        Ok(Oracle { problem: problem.clone(), solution, spectrum })
    }

    pub fn report(&self, psi: &[Complex64]) -> Result<OracleReport> {
        let n = self.problem.n();
        check_dims(n, psi)?;
        if norm_sqr(psi) == 0.0 {
            return invalid("candidate state is zero");
        }
        let fid = fidelity(psi, &self.solution);
        let dist = trace_distance(psi, &self.solution);
        let loss = exact_loss(&self.problem.a, self.problem.b.amplitudes(), psi);
        let bound = self.spectrum.map(|s| {
            let kappa = s.condition_number();
            let root = loss.max(0.0).sqrt();
            let bound = kappa * root / s.norm;
            let naive_bound = kappa * root;
            BoundCheck {
                norm_a: s.norm,
                kappa_actual: kappa,
                lambda_min: s.lambda_min,
                lambda_max: s.lambda_max,
                bound,
                bound_satisfied: dist <= bound * (1.0 + 1e-9) + BOUND_SLACK,
                naive_bound,
                naive_satisfied: dist <= naive_bound * (1.0 + 1e-9) + BOUND_SLACK,
            }
        });
        Ok(OracleReport {
            n,
            kappa_nominal: self.problem.kappa,
            solution: self.solution.clone(),
            fidelity: fid,
            trace_distance: dist,
            loss,
            bound,
        })
    }
}

/// One-shot [`Oracle::new`] followed by [`Oracle::report`].
pub fn check_error_bound(problem: &LinearProblem, psi: &[Complex64]) -> Result<OracleReport> {
    Oracle::new(problem)?.report(psi)
}

/// Checks of the closed-form statements about the Ising benchmark.
#[derive(Clone, Debug, PartialEq)]
pub struct IsingIdentities {
    pub n: usize,
    pub kappa: f64,
    /// `max |⟨b|Z_{j+1}Z_j Z_k Z_{k+1}|b⟩/⟨b|b⟩ − δ_jk|`.
    pub delta_error: f64,
    /// `max |A b − b − 0.05(κ−1)/(nκ) Σ Z_j Z_{j+1} b|` for the all-ones `b`.
    pub perturbation_error: f64,
    /// `max |(Σ_j X_j b − n b)(x)|`.
    pub x_eigen_error: f64,
    /// Largest deviation of `Σ Z_j Z_{j+1} b̂` from the agree/disagree count.
    pub zz_count_error: f64,
    /// `max |(A b̂ − b̂)(x)|` for unit `b̂`.
    pub entry_perturbation: f64,
    /// `2^{−n/2} · 0.05`.
    pub entry_bound: f64,
    /// `‖b̂ − A⁻¹ b̂‖²`.
    pub distance_sqr: f64,
    /// `0.0025 (κ−1)² / n · (n−1)/n`.
    pub distance_bound: f64,
    /// `Fid(b, A⁻¹ b)`.
    pub fidelity: f64,
}

impl IsingIdentities {
    pub fn exact_to(&self, tol: f64) -> bool {
        self.delta_error <= tol && self.perturbation_error <= tol && self.x_eigen_error <= tol && self.zz_count_error <= tol
    }

    pub fn bounds_hold(&self) -> bool {
        self.entry_perturbation <= self.entry_bound && self.distance_sqr <= self.distance_bound
    }

    pub fn to_key_values(&self) -> String {
        format!(
            "n={}\nkappa={:?}\ndelta_error={:?}\nperturbation_error={:?}\nx_eigen_error={:?}\nzz_count_error={:?}\n\
             entry_perturbation={:?}\nentry_bound={:?}\ndistance_sqr={:?}\ndistance_bound={:?}\nfidelity={:?}\n",
            self.n,
            self.kappa,
            self.delta_error,
            self.perturbation_error,
            self.x_eigen_error,
            self.zz_count_error,
            self.entry_perturbation,
            self.entry_bound,
            self.distance_sqr,
            self.distance_bound,
            self.fidelity
        )
    }
}

fn max_abs_diff(u: &[Complex64], v: &[Complex64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
}

fn zz(n: usize, j: usize) -> Result<PauliSum> {
    let one = Complex64::new(1.0, 0.0);
    PauliSum::new(n, vec![PauliTerm::new(n, one, [(j, Pauli::Z), (j + 1, Pauli::Z)])?])
}

/// `(#agreeing − #disagreeing)` consecutive qubit pairs of `x`.
pub fn consecutive_agreement(n: usize, x: u64) -> i64 {
    (0..n - 1)
        .map(|q| {
            let shift = n - 2 - q;
            if ((x >> shift) ^ (x >> (shift + 1))) & 1 == 0 { 1 } else { -1 }
        })
        .sum()
}

pub fn ising_identities(n: usize, kappa: f64) -> Result<IsingIdentities> {
    if n > DENSE_LIMIT {
        return Err(Error::DenseLimit { what: "Ising identities", n, limit: DENSE_LIMIT });
    }
    let problem = ising_problem(n, kappa)?;
    let dim = 1usize << n;
    let ones = problem.b.amplitudes().to_vec();
    let bb = norm_sqr(&ones);
    let bonds: Vec<PauliSum> = (0..n - 1).map(|j| zz(n, j)).collect::<Result<_>>()?;
    let zz_b: Vec<Vec<Complex64>> = bonds.iter().map(|op| op.matvec(&ones)).collect();

    let mut delta_error: f64 = 0.0;
    for (j, op) in bonds.iter().enumerate() {
        for (k, zk) in zz_b.iter().enumerate() {
            let v = dot(&ones, &op.matvec(zk)) / bb;
            let want = if j == k { 1.0 } else { 0.0 };
            delta_error = delta_error.max((v - want).norm());
        }
    }

    let mut zz_sum = vec![Complex64::new(0.0, 0.0); dim];
    for v in &zz_b {
        zz_sum.iter_mut().zip(v).for_each(|(s, v)| *s += v);
    }
    let n_f = n as f64;
    let coef = 0.05 * (kappa - 1.0) / (n_f * kappa);
    let predicted: Vec<Complex64> = ones.iter().zip(&zz_sum).map(|(b, z)| b + z * coef).collect();
    let ab = problem.a.matvec(&ones);
    let perturbation_error = max_abs_diff(&ab, &predicted);

    let x_terms = (0..n)
        .map(|j| PauliTerm::new(n, Complex64::new(1.0, 0.0), [(j, Pauli::X)]))
        .collect::<Result<Vec<_>>>()?;
    let xb = PauliSum::new(n, x_terms)?.matvec(&ones);
    let nb: Vec<Complex64> = ones.iter().map(|b| b * n_f).collect();
    let x_eigen_error = max_abs_diff(&xb, &nb);

    let scale = 1.0 / bb.sqrt();
    let unit: Vec<Complex64> = ones.iter().map(|b| b * scale).collect();
    let mut zz_count_error: f64 = 0.0;
    for (x, z) in zz_sum.iter().enumerate() {
        let want = scale * consecutive_agreement(n, x as u64) as f64;
        zz_count_error = zz_count_error.max((z * scale - want).norm());
    }

    let a_unit = problem.a.matvec(&unit);
    let entry_perturbation = max_abs_diff(&a_unit, &unit);
    let entry_bound = 2f64.powf(-n_f / 2.0) * 0.05;

    let solution = exact_solve(&problem.a, &unit)?;
    let distance_sqr: f64 = unit.iter().zip(&solution).map(|(b, x)| (b - x).norm_sqr()).sum();
    let distance_bound = 0.0025 * (kappa - 1.0).powi(2) / n_f * (n_f - 1.0) / n_f;

    Ok(IsingIdentities {
        n,
        kappa,
        delta_error,
        perturbation_error,
        x_eigen_error,
        zz_count_error,
        entry_perturbation,
        entry_bound,
        distance_sqr,
        distance_bound,
        fidelity: fidelity(&ones, &solution),
    })
}

/// `Fid(b, A⁻¹ b)` of the Ising benchmark.
pub fn ising_fidelity(n: usize, kappa: f64) -> Result<f64> {
    if n > DENSE_LIMIT {
        return Err(Error::DenseLimit { what: "Ising fidelity", n, limit: DENSE_LIMIT });
    }
    let problem = ising_problem(n, kappa)?;
    let b = problem.b.amplitudes();
    Ok(fidelity(b, &exact_solve(&problem.a, b)?))
}
