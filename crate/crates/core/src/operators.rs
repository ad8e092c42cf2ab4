//! Sparse operators written as weighted sums of Pauli strings.
//!
//! Basis indices follow the Kronecker order `A_0 ⊗ A_1 ⊗ … ⊗ A_{n-1}`:
//! qubit 0 is the most significant bit of the index. Every Pauli string has
//! exactly one nonzero entry per row, so a row of a sum with `t` terms is
//! found with `t` cheap lookups instead of touching `2^n` columns.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::states::Amplitude;

/// Index of a computational basis state, `0 <= x < 2^n`.
pub type BasisIndex = u64;

/// Largest qubit count a `BasisIndex` can address.
pub const MAX_QUBITS: usize = 62;

/// Largest qubit count for which full `2^n × 2^n` matrices are built.
pub const MATRIX_LIMIT: usize = 12;

/// Entries of a merged row with modulus below this are dropped.
pub const DROP_TOLERANCE: f64 = 1e-15;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    fn symbol(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// The 2×2 matrix in the computational basis.
    pub fn matrix(self) -> DMatrix<Complex64> {
        let i = Complex64::i();
        let entries = match self {
            Pauli::X => [ZERO, ONE, ONE, ZERO],
            Pauli::Y => [ZERO, -i, i, ZERO],
            Pauli::Z => [ONE, ZERO, ZERO, -ONE],
        };
        DMatrix::from_row_slice(2, 2, &entries)
    }
}

/// Bit of `x` holding qubit `q` in an `n`-qubit register.
#[inline]
pub fn qubit_mask(n: usize, q: usize) -> u64 {
    1u64 << (n - 1 - q)
}

/// Value of qubit `q` (0 or 1) in basis index `x`.
#[inline]
pub fn qubit_bit(n: usize, q: usize, x: BasisIndex) -> u64 {
    (x >> (n - 1 - q)) & 1
}

/// `coefficient · P_{q1} ⊗ P_{q2} ⊗ …`, identity on qubits not listed.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliTerm {
    n: usize,
    coefficient: Complex64,
    factors: Vec<(usize, Pauli)>,
    flip_mask: u64,
    sign_mask: u64,
    // coefficient · (-i)^{#Y}; the Y factor on a 1 bit contributes an extra -1
    // which `sign_mask` already accounts for.
    phase: Complex64,
}

impl PauliTerm {
    pub fn new(
        n: usize,
        coefficient: Complex64,
        factors: impl IntoIterator<Item = (usize, Pauli)>,
    ) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::InvalidArgument(format!(
                "qubit count must be in 1..={MAX_QUBITS}, got {n}"
            )));
        }
        if !(coefficient.re.is_finite() && coefficient.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        let mut factors: Vec<(usize, Pauli)> = factors.into_iter().collect();
        factors.sort_by_key(|&(q, _)| q);
        for (k, &(q, _)) in factors.iter().enumerate() {
            if q >= n {
                return Err(Error::QubitOutOfRange { index: q, n });
            }
            if k > 0 && factors[k - 1].0 == q {
                return Err(Error::DuplicateQubit(q));
            }
        }

        let mut flip_mask = 0;
        let mut sign_mask = 0;
        let mut y_count = 0;
        for &(q, p) in &factors {
            let bit = qubit_mask(n, q);
            match p {
                Pauli::X => flip_mask |= bit,
                Pauli::Y => {
                    flip_mask |= bit;
                    sign_mask |= bit;
                    y_count += 1;
                }
                Pauli::Z => sign_mask |= bit,
            }
        }
        let c = coefficient;
        let phase = match y_count % 4 {
            0 => c,
            1 => Complex64::new(c.im, -c.re),
            2 => -c,
            _ => Complex64::new(-c.im, c.re),
        };

        Ok(PauliTerm { n, coefficient, factors, flip_mask, sign_mask, phase })
    }

    pub fn identity(n: usize, coefficient: Complex64) -> Result<Self> {
        Self::new(n, coefficient, [])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coefficient(&self) -> Complex64 {
        self.coefficient
    }

    /// Non-identity factors, sorted by qubit.
    pub fn factors(&self) -> &[(usize, Pauli)] {
        &self.factors
    }

    /// Column and value of the single nonzero entry in row `x`.
    ///
    /// X flips the bit; Y flips it and contributes `-i` on a 0 bit and `+i`
    /// on a 1 bit; Z keeps it and contributes `-1` on a 1 bit.
    #[inline]
    pub fn apply_row(&self, x: BasisIndex) -> (BasisIndex, Complex64) {
        let col = x ^ self.flip_mask;
        if (x & self.sign_mask).count_ones() % 2 == 1 {
            (col, -self.phase)
        } else {
            (col, self.phase)
        }
    }

    /// Copy with the coefficient replaced.
    pub fn with_coefficient(&self, coefficient: Complex64) -> Self {
        Self::new(self.n, coefficient, self.factors.iter().copied())
            .expect("factors already validated")
    }

    /// Dense matrix by explicit Kronecker products.
    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        check_matrix_limit(self.n)?;
        let mut m = DMatrix::from_element(1, 1, self.coefficient);
        let mut factors = self.factors.iter().peekable();
        for q in 0..self.n {
            let local = match factors.peek() {
                Some(&&(fq, p)) if fq == q => {
                    factors.next();
                    p.matrix()
                }
                _ => DMatrix::identity(2, 2),
            };
            m = m.kronecker(&local);
        }
        Ok(m)
    }

    fn fmt_tokens(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, " I");
        }
        for &(q, p) in &self.factors {
            write!(f, " {}{}", p.symbol(), q)?;
        }
        Ok(())
    }
}

impl fmt::Display for PauliTerm {
    /// One line of the operator text format.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coefficient.re)?;
        if self.coefficient.im != 0.0 {
            write!(f, " {:?}", self.coefficient.im)?;
        }
        self.fmt_tokens(f)
    }
}

fn check_matrix_limit(n: usize) -> Result<()> {
    if n > MATRIX_LIMIT {
        Err(Error::DenseLimit { what: "dense matrix", n, limit: MATRIX_LIMIT })
    } else {
        Ok(())
    }
}

/// Sum of Pauli terms on a common register.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n: usize,
    terms: Vec<PauliTerm>,
    hermitian: bool,
}

impl PauliSum {
    pub fn new(n: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::InvalidArgument(format!(
                "qubit count must be in 1..={MAX_QUBITS}, got {n}"
            )));
        }
        if let Some(t) = terms.iter().find(|t| t.n != n) {
            return Err(Error::InvalidArgument(format!(
                "term on {} qubits in a {n}-qubit sum",
                t.n
            )));
        }
        let hermitian = terms.iter().all(|t| t.coefficient.im == 0.0);
        Ok(PauliSum { n, terms, hermitian })
    }

    /// Sum with no terms (the zero operator).
    pub fn zero(n: usize) -> Result<Self> {
        Self::new(n, Vec::new())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when every coefficient is real, which makes the sum Hermitian.
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// One `(col, value)` per term, unmerged, in term order.
    pub fn raw_row(&self, x: BasisIndex) -> impl Iterator<Item = (BasisIndex, Complex64)> + '_ {
        self.terms.iter().map(move |t| t.apply_row(x))
    }

    /// Sparse row `x`: entries sorted by column, duplicates summed, and
    /// entries below [`DROP_TOLERANCE`] removed.
    pub fn apply_sum_row(&self, x: BasisIndex) -> Vec<(BasisIndex, Complex64)> {
        merge_entries(self.raw_row(x).collect())
    }

    /// Sparse row `x` of the square, by expanding row `x` and then the row
    /// of every column reached.
    pub fn squared_row(&self, x: BasisIndex) -> Vec<(BasisIndex, Complex64)> {
        let first = self.apply_sum_row(x);
        let mut entries = Vec::with_capacity(first.len() * self.terms.len());
        for (c1, v1) in first {
            entries.extend(self.raw_row(c1).map(|(c2, v2)| (c2, v1 * v2)));
        }
        merge_entries(entries)
    }

    /// `(Hψ)(x)`.
    pub fn apply_to_state<S: Amplitude + ?Sized>(&self, psi: &S, x: BasisIndex) -> Complex64 {
        self.apply_sum_row(x).into_iter().map(|(c, v)| v * psi.amp(c)).sum()
    }

    /// `(H²ψ)(x)`, without forming `H²` symbolically.
    pub fn apply_squared_row<S: Amplitude + ?Sized>(&self, psi: &S, x: BasisIndex) -> Complex64 {
        self.squared_row(x).into_iter().map(|(c, v)| v * psi.amp(c)).sum()
    }

    /// Every coefficient multiplied by `c`.
    pub fn scaled(&self, c: Complex64) -> Self {
        let terms = self.terms.iter().map(|t| t.with_coefficient(t.coefficient * c)).collect();
        Self::new(self.n, terms).expect("same register")
    }

    /// Hermitian embedding on `n + 1` qubits with the ancilla as qubit 0:
    /// `[[0, A], [A†, 0]] = Σ Re(c)·X⊗P − Im(c)·Y⊗P`.
    pub fn embed_hermitian(&self) -> Result<Self> {
        let n = self.n + 1;
        let mut terms = Vec::with_capacity(2 * self.terms.len());
        for t in &self.terms {
            let shifted = || t.factors.iter().map(|&(q, p)| (q + 1, p));
            let c = t.coefficient;
            if c.re != 0.0 {
                let factors = std::iter::once((0, Pauli::X)).chain(shifted());
                terms.push(PauliTerm::new(n, Complex64::new(c.re, 0.0), factors)?);
            }
            if c.im != 0.0 {
                let factors = std::iter::once((0, Pauli::Y)).chain(shifted());
                terms.push(PauliTerm::new(n, Complex64::new(-c.im, 0.0), factors)?);
            }
        }
        Self::new(n, terms)
    }

    /// Dense `2^n × 2^n` matrix built from Kronecker products of the terms.
    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        check_matrix_limit(self.n)?;
        let dim = 1usize << self.n;
        let mut m = DMatrix::zeros(dim, dim);
        for t in &self.terms {
            m += t.to_dense()?;
        }
        Ok(m)
    }

    /// Dense matrix–vector product `H v`, row by row.
    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), 1usize << self.n, "vector length must be 2^n");
        (0..v.len() as u64)
            .map(|x| self.raw_row(x).map(|(c, val)| val * v[c as usize]).sum())
            .collect()
    }

    /// Parse term lines (no header) for an `n`-qubit register.
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let mut terms = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            terms.push(parse_term(line, n).map_err(|e| at_line(idx + 1, e))?);
        }
        Self::new(n, terms)
    }

    /// Parse an operator file: a required `n=<int>` header followed by
    /// one term per line.
    pub fn parse_file(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let n = loop {
            match lines.next() {
                None => return Err(Error::Parse { line: 1, msg: "missing `n=<int>` header".into() }),
                Some((idx, raw)) => {
                    let line = strip_comment(raw);
                    if line.is_empty() {
                        continue;
                    }
                    break parse_header(line).map_err(|e| at_line(idx + 1, e))?;
                }
            }
        };
        let mut terms = Vec::new();
        for (idx, raw) in lines {
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            terms.push(parse_term(line, n).map_err(|e| at_line(idx + 1, e))?);
        }
        Self::new(n, terms).map_err(|e| at_line(1, e))
    }

    /// Text in the operator file format accepted by [`PauliSum::parse_file`].
    pub fn to_file_string(&self) -> String {
        format!("n={}\n{self}", self.n)
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.terms {
            writeln!(f, "{t}")?;
        }
        Ok(())
    }
}

fn merge_entries(mut entries: Vec<(BasisIndex, Complex64)>) -> Vec<(BasisIndex, Complex64)> {
    entries.sort_by_key(|&(c, _)| c);
    let mut merged: Vec<(BasisIndex, Complex64)> = Vec::with_capacity(entries.len());
    for (c, v) in entries {
        match merged.last_mut() {
            Some((lc, lv)) if *lc == c => *lv += v,
            _ => merged.push((c, v)),
        }
    }
    merged.retain(|&(_, v)| v.norm() >= DROP_TOLERANCE);
    merged
}

pub(crate) fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => line[..i].trim(),
        None => line.trim(),
    }
}

pub(crate) fn at_line(line: usize, e: Error) -> Error {
    match e {
        Error::Parse { .. } => e,
        other => Error::Parse { line, msg: other.to_string() },
    }
}

pub(crate) fn parse_header(line: &str) -> Result<usize> {
    let value = line
        .strip_prefix("n=")
        .ok_or_else(|| Error::Parse { line: 0, msg: format!("expected `n=<int>`, found `{line}`") })?;
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| Error::Parse { line: 0, msg: format!("bad qubit count `{value}`") })?;
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::InvalidArgument(format!("qubit count must be in 1..={MAX_QUBITS}, got {n}")));
    }
    Ok(n)
}

fn parse_term(line: &str, n: usize) -> Result<PauliTerm> {
    let mut tokens = line.split_whitespace().peekable();
    let re = parse_float(tokens.next().unwrap_or(""))?;
    let im = match tokens.peek().and_then(|t| t.parse::<f64>().ok()) {
        Some(v) => {
            tokens.next();
            v
        }
        None => 0.0,
    };
    let mut factors = Vec::new();
    let mut saw_token = false;
    for tok in tokens {
        saw_token = true;
        if tok == "I" {
            continue;
        }
        let mut chars = tok.chars();
        let p = match chars.next() {
            Some('X') => Pauli::X,
            Some('Y') => Pauli::Y,
            Some('Z') => Pauli::Z,
            _ => return Err(malformed(tok)),
        };
        let q: usize = chars.as_str().parse().map_err(|_| malformed(tok))?;
        factors.push((q, p));
    }
    if !saw_token {
        return Err(Error::InvalidArgument("term has no operator tokens (use `I` for identity)".into()));
    }
    PauliTerm::new(n, Complex64::new(re, im), factors)
}

fn parse_float(tok: &str) -> Result<f64> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::InvalidArgument(format!("bad coefficient `{tok}`"))),
    }
}

fn malformed(tok: &str) -> Error {
    Error::InvalidArgument(format!("malformed token `{tok}`"))
}
