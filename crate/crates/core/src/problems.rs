//! Benchmark linear systems `A x ∝ b` and their text file format.
//!
//! A problem file is an operator file (`n=<int>` header, one Pauli term per
//! line) with an optional `kappa=<float>` line after the header, followed
//! by a right-hand side section, either
//!
//! ```text
//! b dense
//! <re> [<im>]        # one line per basis index, 2^n lines
//! ```
//!
//! or
//!
//! ```text
//! b sparse
//! <index> <re> [<im>]
//! ```

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::operators::{at_line, parse_header, strip_comment, Pauli, PauliSum, PauliTerm};
use crate::states::DenseState;

/// Margin added to the Gershgorin shift of random problems.
const RANDOM_MARGIN: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct LinearProblem {
    pub a: PauliSum,
    pub b: DenseState,
    /// Intended condition number, when the construction targets one.
    pub kappa: Option<f64>,
}

impl LinearProblem {
    pub fn new(a: PauliSum, b: DenseState, kappa: Option<f64>) -> Result<Self> {
        use crate::states::Amplitude;
        if a.n() != b.n() {
            return invalid(format!("A acts on {} qubits but b has {}", a.n(), b.n()));
        }
        if !a.is_hermitian() {
            return invalid("A must have real coefficients");
        }
        Ok(LinearProblem { a, b, kappa })
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_file_string())?;
        Ok(())
    }

    pub fn to_file_string(&self) -> String {
        let mut out = format!("n={}\n", self.n());
        if let Some(k) = self.kappa {
            let _ = writeln!(out, "kappa={k:?}");
        }
        out.push_str(&self.a.to_string());
        out.push_str(&format_vector(self.b.amplitudes()));
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter_map(|(i, raw)| {
            let line = strip_comment(raw);
            (!line.is_empty()).then_some((i + 1, line))
        });
        let (first, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty problem file".into() })?;
        let n = parse_header(header).map_err(|e| at_line(first, e))?;

        let mut kappa = None;
        let mut term_lines = String::new();
        let mut section = None;
        for (line_no, line) in lines.by_ref() {
            if let Some(v) = line.strip_prefix("kappa=") {
                let k: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse { line: line_no, msg: format!("bad kappa `{v}`") })?;
                kappa = Some(k);
            } else if let Some(kind) = line.strip_prefix("b ") {
                section = Some((line_no, kind.trim()));
                break;
            } else {
                // keep line numbers aligned for term errors
                while term_lines.lines().count() + 1 < line_no {
                    term_lines.push('\n');
                }
                term_lines.push_str(line);
                term_lines.push('\n');
            }
        }
        let a = PauliSum::parse(&term_lines, n)?;
        let (section_line, kind) =
            section.ok_or(Error::Parse { line: first, msg: "missing `b dense` or `b sparse` section".into() })?;
        let rest: Vec<(usize, &str)> = lines.collect();
        let b = parse_vector(n, kind, section_line, &rest)?;
        Self::new(a, b, kappa).map_err(|e| at_line(first, e))
    }
}

/// Text for a `b dense` section (also used for standalone state files).
pub fn format_vector(v: &[Complex64]) -> String {
    let mut out = String::from("b dense\n");
    for a in v {
        if a.im == 0.0 {
            let _ = writeln!(out, "{:?}", a.re);
        } else {
            let _ = writeln!(out, "{:?} {:?}", a.re, a.im);
        }
    }
    out
}

fn parse_values(tokens: &[&str], line: usize) -> Result<Complex64> {
    let parse = |t: &str| -> Result<f64> {
        t.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or(Error::Parse { line, msg: format!("bad value `{t}`") })
    };
    match tokens {
        [re] => Ok(Complex64::new(parse(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(parse(re)?, parse(im)?)),
        _ => Err(Error::Parse { line, msg: "expected `<re> [<im>]`".into() }),
    }
}

/// Parse the lines of a `b dense` / `b sparse` section.
pub(crate) fn parse_vector(n: usize, kind: &str, section_line: usize, lines: &[(usize, &str)]) -> Result<DenseState> {
    let dim = 1usize << n;
    let mut values = vec![Complex64::new(0.0, 0.0); dim];
    match kind {
        "dense" => {
            if lines.len() != dim {
                return Err(Error::Parse {
                    line: section_line,
                    msg: format!("dense vector needs {dim} values, found {}", lines.len()),
                });
            }
            for (slot, &(line, text)) in values.iter_mut().zip(lines) {
                let tokens: Vec<&str> = text.split_whitespace().collect();
                *slot = parse_values(&tokens, line)?;
            }
        }
        "sparse" => {
            for &(line, text) in lines {
                let tokens: Vec<&str> = text.split_whitespace().collect();
                let Some((idx, rest)) = tokens.split_first() else { continue };
                let x: usize = idx
                    .parse()
                    .ok()
                    .filter(|&x| x < dim)
                    .ok_or(Error::Parse { line, msg: format!("bad index `{idx}`") })?;
                values[x] = parse_values(rest, line)?;
            }
        }
        other => {
            return Err(Error::Parse { line: section_line, msg: format!("unknown vector section `{other}`") });
        }
    }
    DenseState::new(values).map_err(|e| at_line(section_line, e))
}

/// Read a standalone state file: `n=<int>` header, then a `b dense` or
/// `b sparse` section.
pub fn parse_state_file(text: &str) -> Result<DenseState> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let line = strip_comment(raw);
            (!line.is_empty()).then_some((i + 1, line))
        })
        .collect();
    let Some((&(first, header), rest)) = lines.split_first() else {
        return Err(Error::Parse { line: 1, msg: "empty state file".into() });
    };
    let n = parse_header(header).map_err(|e| at_line(first, e))?;
    let Some((&(sl, section), values)) = rest.split_first() else {
        return Err(Error::Parse { line: first, msg: "missing vector section".into() });
    };
    let kind = section
        .strip_prefix("b ")
        .ok_or(Error::Parse { line: sl, msg: "expected `b dense` or `b sparse`".into() })?;
    parse_vector(n, kind.trim(), sl, values)
}

/// `η = n(κ+1)/(κ−1)` and `ζ = n + η = 2nκ/(κ−1)`.
pub fn ising_coefficients(n: usize, kappa: f64) -> Result<(f64, f64)> {
    if !(kappa > 1.0 && kappa.is_finite()) {
        return invalid(format!("condition number must exceed 1, got {kappa}"));
    }
    let n = n as f64;
    let eta = n * (kappa + 1.0) / (kappa - 1.0);
    let zeta = 2.0 * n * kappa / (kappa - 1.0);
    Ok((eta, zeta))
}

/// `A = (Σ_j X_j + 0.1 Σ_j Z_j Z_{j+1} + η I) / ζ` with the all-ones `b`.
pub fn ising_problem(n: usize, kappa: f64) -> Result<LinearProblem> {
    if n < 2 {
        return invalid("the Ising problem needs at least two qubits");
    }
    let (eta, zeta) = ising_coefficients(n, kappa)?;
    let real = |v: f64| Complex64::new(v, 0.0);
    let mut terms = Vec::with_capacity(2 * n);
    for j in 0..n {
        terms.push(PauliTerm::new(n, real(1.0 / zeta), [(j, Pauli::X)])?);
    }
    for j in 0..n - 1 {
        terms.push(PauliTerm::new(n, real(0.1 / zeta), [(j, Pauli::Z), (j + 1, Pauli::Z)])?);
    }
    terms.push(PauliTerm::identity(n, real(eta / zeta))?);
    LinearProblem::new(PauliSum::new(n, terms)?, DenseState::ones(n)?, Some(kappa))
}

/// Random real-coefficient Pauli strings shifted by `c·I` with
/// `c = Σ|coef| + margin`, so `A` is positive definite, and a random
/// sparse complex `b`.
pub fn random_pauli_problem(n: usize, terms: usize, seed: u64) -> Result<LinearProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut list = Vec::with_capacity(terms + 1);
    let mut shift = RANDOM_MARGIN;
    for _ in 0..terms {
        let factors: Vec<(usize, Pauli)> = (0..n)
            .filter_map(|q| match rng.gen_range(0..4) {
                0 => None,
                1 => Some((q, Pauli::X)),
                2 => Some((q, Pauli::Y)),
                _ => Some((q, Pauli::Z)),
            })
            .collect();
        let coef: f64 = rng.gen_range(-1.0..1.0);
        shift += coef.abs();
        list.push(PauliTerm::new(n, Complex64::new(coef, 0.0), factors)?);
    }
    list.push(PauliTerm::identity(n, Complex64::new(shift, 0.0))?);
    let a = PauliSum::new(n, list)?;

    let dim = 1usize << n;
    let mut values = vec![Complex64::new(0.0, 0.0); dim];
    let keep = rng.gen_range(0..dim);
    for (x, v) in values.iter_mut().enumerate() {
        if x == keep || rng.gen_bool(0.5) {
            *v = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        }
    }
    LinearProblem::new(a, DenseState::new(values)?, None)
}
