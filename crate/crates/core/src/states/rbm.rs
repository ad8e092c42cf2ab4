//! Restricted Boltzmann machine amplitudes
//! `ψ(s) = exp(Σ_i a_i s_i) · Π_j 2 cosh(c_j + Σ_i W_ji s_i)` over spins
//! `s_i = ±1`, with either all-real or all-complex parameters.

use std::fmt::{self, Debug, Write as _};
use std::ops::{Add, AddAssign, Mul, Sub, SubAssign};
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{spins, Amplitude, Wavefunction};
use crate::error::{Error, Result};
use crate::operators::{at_line, strip_comment, BasisIndex, MAX_QUBITS};

/// Hidden units per visible unit used when nothing else is configured.
pub const DEFAULT_ALPHA: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    Real,
    Complex,
}

impl Flavor {
    /// Standard deviation of the Gaussian initialization.
    pub fn default_sigma(self) -> f64 {
        match self {
            Flavor::Real => 0.01,
            Flavor::Complex => 0.05,
        }
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flavor::Real => "real",
            Flavor::Complex => "complex",
        })
    }
}

impl FromStr for Flavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(Flavor::Real),
            "complex" => Ok(Flavor::Complex),
            other => Err(Error::InvalidArgument(format!("unknown RBM flavor `{other}`"))),
        }
    }
}

/// `log(2 cosh z)` without overflow: `|Re z| + log(1 + e^{-2|Re z|})` after
/// folding `z` into the right half plane (cosh is even).
pub fn log2cosh(z: Complex64) -> Complex64 {
    let z = if z.re < 0.0 { -z } else { z };
    z + (Complex64::new(1.0, 0.0) + (-2.0 * z).exp()).ln()
}

fn log2cosh_real(x: f64) -> f64 {
    let x = x.abs();
    x + (-2.0 * x).exp().ln_1p()
}

fn tanh_complex(z: Complex64) -> Complex64 {
    if z.re < 0.0 {
        return -tanh_complex(-z);
    }
    let e = (-2.0 * z).exp();
    (Complex64::new(1.0, 0.0) - e) / (Complex64::new(1.0, 0.0) + e)
}

trait Unit:
    Copy
    + Send
    + Sync
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<f64, Output = Self>
    + AddAssign
    + SubAssign
{
    const ZERO: Self;
    fn log2cosh(self) -> Self;
    fn tanh(self) -> Self;
    fn to_complex(self) -> Complex64;
}

impl Unit for f64 {
    const ZERO: Self = 0.0;

    fn log2cosh(self) -> Self {
        log2cosh_real(self)
    }

    fn tanh(self) -> Self {
        f64::tanh(self)
    }

    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Unit for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);

    fn log2cosh(self) -> Self {
        log2cosh(self)
    }

    fn tanh(self) -> Self {
        tanh_complex(self)
    }

    fn to_complex(self) -> Complex64 {
        self
    }
}

// Weights are stored visible-major: `w[i * m + j]` couples visible `i` to
// hidden `j`. The flat parameter layout is `[a, c, w]` in the same order.
#[derive(Clone, Debug, PartialEq)]
struct Machine<T> {
    n: usize,
    m: usize,
    a: Vec<T>,
    c: Vec<T>,
    w: Vec<T>,
}

impl<T: Unit> Machine<T> {
    fn zeros(n: usize, m: usize) -> Self {
        Machine { n, m, a: vec![T::ZERO; n], c: vec![T::ZERO; m], w: vec![T::ZERO; n * m] }
    }

    fn len(&self) -> usize {
        self.n + self.m + self.n * self.m
    }

    fn flat(&self) -> impl Iterator<Item = &T> {
        self.a.iter().chain(&self.c).chain(&self.w)
    }

    fn set_flat(&mut self, mut values: impl Iterator<Item = T>) {
        for slot in self.a.iter_mut().chain(self.c.iter_mut()).chain(self.w.iter_mut()) {
            *slot = values.next().expect("length checked by caller");
        }
    }

    fn thetas(&self, s: &[f64]) -> Vec<T> {
        let mut theta = self.c.clone();
        for (i, &si) in s.iter().enumerate() {
            let col = &self.w[i * self.m..(i + 1) * self.m];
            if si > 0.0 {
                theta.iter_mut().zip(col).for_each(|(t, &w)| *t += w);
            } else {
                theta.iter_mut().zip(col).for_each(|(t, &w)| *t -= w);
            }
        }
        theta
    }

    fn visible(&self, s: &[f64]) -> T {
        self.a.iter().zip(s).fold(T::ZERO, |acc, (&a, &si)| acc + a * si)
    }

    fn hidden(theta: &[T]) -> T {
        theta.iter().fold(T::ZERO, |acc, &t| acc + t.log2cosh())
    }

    fn log_amp(&self, x: BasisIndex) -> Complex64 {
        let s = spins(self.n, x);
        (self.visible(&s) + Self::hidden(&self.thetas(&s))).to_complex()
    }

    fn log_amps_near(&self, x: BasisIndex, cols: &[BasisIndex]) -> Vec<Complex64> {
        let s = spins(self.n, x);
        let theta = self.thetas(&s);
        let visible = self.visible(&s);
        let base = visible + Self::hidden(&theta);
        let mut scratch = theta.clone();
        cols.iter()
            .map(|&col| {
                let mut diff = col ^ x;
                if diff == 0 {
                    return base.to_complex();
                }
                scratch.copy_from_slice(&theta);
                let mut vis = visible;
                while diff != 0 {
                    let bit = diff.trailing_zeros() as usize;
                    diff &= diff - 1;
                    let i = self.n - 1 - bit;
                    let two_s = 2.0 * s[i];
                    vis -= self.a[i] * two_s;
                    let w = &self.w[i * self.m..(i + 1) * self.m];
                    scratch.iter_mut().zip(w).for_each(|(t, &wj)| *t -= wj * two_s);
                }
                (vis + Self::hidden(&scratch)).to_complex()
            })
            .collect()
    }

    /// `[s_i, tanh θ_j, s_i tanh θ_j]` in flat parameter order.
    fn log_grad(&self, x: BasisIndex) -> Vec<Complex64> {
        let s = spins(self.n, x);
        let tanh: Vec<Complex64> = self.thetas(&s).into_iter().map(|t| t.tanh().to_complex()).collect();
        let mut g = Vec::with_capacity(self.len());
        g.extend(s.iter().map(|&si| Complex64::new(si, 0.0)));
        g.extend_from_slice(&tanh);
        for &si in &s {
            g.extend(tanh.iter().map(|&t| t * si));
        }
        g
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Core {
    Real(Machine<f64>),
    Complex(Machine<Complex64>),
}

/// RBM wavefunction with `n` visible and `m` hidden units.
///
/// Real coordinates: `[a, c, W]` for the real flavor; for the complex
/// flavor the real parts of `[a, c, W]` followed by their imaginary parts.
/// `W` is laid out visible-major (`W_ji` at offset `i·m + j`).
#[derive(Clone, Debug, PartialEq)]
pub struct Rbm {
    seed: u64,
    core: Core,
}

impl Rbm {
    /// Hidden units for a density `alpha`: `⌈alpha · n⌉`.
    pub fn hidden_units(n: usize, alpha: f64) -> Result<usize> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("hidden density must be positive, got {alpha}")));
        }
        Ok(((alpha * n as f64).ceil() as usize).max(1))
    }

    /// All parameters zero; the amplitude is uniform.
    pub fn zeros(n: usize, m: usize, flavor: Flavor) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS || m == 0 {
            return Err(Error::InvalidArgument(format!("bad RBM shape n={n}, m={m}")));
        }
        let core = match flavor {
            Flavor::Real => Core::Real(Machine::zeros(n, m)),
            Flavor::Complex => Core::Complex(Machine::zeros(n, m)),
        };
        Ok(Rbm { seed: 0, core })
    }

    /// I.i.d. `N(0, sigma²)` parameters (real and imaginary parts drawn
    /// independently), deterministic in `seed`.
    pub fn init_gaussian(n: usize, alpha: f64, flavor: Flavor, sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("init sigma must be positive, got {sigma}")));
        }
        let m = Self::hidden_units(n, alpha)?;
        let mut rbm = Self::zeros(n, m, flavor)?;
        rbm.seed = seed;
        let normal = Normal::new(0.0, sigma).expect("sigma checked");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params: Vec<f64> = (0..rbm.param_count()).map(|_| normal.sample(&mut rng)).collect();
        rbm.set_params(&params)?;
        Ok(rbm)
    }

    /// Build from explicit parameters; `w` is `m × n` row-major (`w[j·n + i] = W_ji`).
    pub fn from_parts(
        flavor: Flavor,
        n: usize,
        m: usize,
        a: &[Complex64],
        c: &[Complex64],
        w: &[Complex64],
    ) -> Result<Self> {
        if a.len() != n || c.len() != m || w.len() != n * m {
            return Err(Error::InvalidArgument("parameter lengths do not match the shape".into()));
        }
        let mut rbm = Self::zeros(n, m, flavor)?;
        let transposed = (0..n).flat_map(|i| (0..m).map(move |j| w[j * n + i]));
        let values: Vec<Complex64> = a.iter().chain(c).copied().chain(transposed).collect();
        match &mut rbm.core {
            Core::Real(mach) => {
                if values.iter().any(|v| v.im != 0.0) {
                    return Err(Error::InvalidArgument("real RBM with complex parameters".into()));
                }
                mach.set_flat(values.iter().map(|v| v.re));
            }
            Core::Complex(mach) => mach.set_flat(values.into_iter()),
        }
        Ok(rbm)
    }

    pub fn flavor(&self) -> Flavor {
        match self.core {
            Core::Real(_) => Flavor::Real,
            Core::Complex(_) => Flavor::Complex,
        }
    }

    pub fn hidden(&self) -> usize {
        match &self.core {
            Core::Real(r) => r.m,
            Core::Complex(c) => c.m,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Text checkpoint: a `key=value` header followed by one parameter per line.
    pub fn to_checkpoint_string(&self) -> String {
        let params = self.params();
        let mut out = String::from("# rbm checkpoint\n");
        let _ = writeln!(out, "flavor={}", self.flavor());
        let _ = writeln!(out, "n={}", self.n());
        let _ = writeln!(out, "m={}", self.hidden());
        let _ = writeln!(out, "seed={}", self.seed);
        let _ = writeln!(out, "params={}", params.len());
        for p in params {
            let _ = writeln!(out, "{p:?}");
        }
        out
    }

    pub fn from_checkpoint_str(text: &str) -> Result<Self> {
        let mut header: Vec<(usize, &str, &str)> = Vec::new();
        let mut values = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            if let Some((k, v)) = line.split_once('=') {
                header.push((idx + 1, k.trim(), v.trim()));
            } else {
                let v: f64 = line
                    .parse()
                    .map_err(|_| Error::Parse { line: idx + 1, msg: format!("bad parameter `{line}`") })?;
                values.push(v);
            }
        }
        let field = |key: &str| -> Result<(usize, &str)> {
            header
                .iter()
                .find(|(_, k, _)| *k == key)
                .map(|&(l, _, v)| (l, v))
                .ok_or_else(|| Error::Parse { line: 1, msg: format!("missing `{key}=`") })
        };
        let num = |key: &str| -> Result<u64> {
            let (line, v) = field(key)?;
            v.parse().map_err(|_| Error::Parse { line, msg: format!("bad `{key}` value `{v}`") })
        };
        let (fl_line, fl) = field("flavor")?;
        let flavor: Flavor = fl.parse().map_err(|e| at_line(fl_line, e))?;
        let n = num("n")? as usize;
        let m = num("m")? as usize;
        let count = num("params")? as usize;
        let mut rbm = Self::zeros(n, m, flavor)?;
        rbm.seed = num("seed")?;
        if count != values.len() || count != rbm.param_count() {
            return Err(Error::Parse {
                line: field("params")?.0,
                msg: format!("expected {} parameters, found {}", rbm.param_count(), values.len()),
            });
        }
        rbm.set_params(&values)?;
        Ok(rbm)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_checkpoint_string())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint_str(&std::fs::read_to_string(path)?)
    }
}

impl Amplitude for Rbm {
    fn n(&self) -> usize {
        match &self.core {
            Core::Real(r) => r.n,
            Core::Complex(c) => c.n,
        }
    }

    fn log_amp(&self, x: BasisIndex) -> Complex64 {
        match &self.core {
            Core::Real(r) => r.log_amp(x),
            Core::Complex(c) => c.log_amp(x),
        }
    }

    fn log_amps_near(&self, x: BasisIndex, cols: &[BasisIndex]) -> Vec<Complex64> {
        match &self.core {
            Core::Real(r) => r.log_amps_near(x, cols),
            Core::Complex(c) => c.log_amps_near(x, cols),
        }
    }
}

impl Wavefunction for Rbm {
    fn param_count(&self) -> usize {
        match &self.core {
            Core::Real(r) => r.len(),
            Core::Complex(c) => 2 * c.len(),
        }
    }

    fn params(&self) -> Vec<f64> {
        match &self.core {
            Core::Real(r) => r.flat().copied().collect(),
            Core::Complex(c) => c.flat().map(|v| v.re).chain(c.flat().map(|v| v.im)).collect(),
        }
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::InvalidArgument(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("non-finite parameter".into()));
        }
        match &mut self.core {
            Core::Real(r) => r.set_flat(params.iter().copied()),
            Core::Complex(c) => {
                let d = c.len();
                c.set_flat((0..d).map(|k| Complex64::new(params[k], params[d + k])));
            }
        }
        Ok(())
    }

    fn log_grad(&self, x: BasisIndex) -> Vec<Complex64> {
        match &self.core {
            Core::Real(r) => r.log_grad(x),
            Core::Complex(c) => {
                let mut g = c.log_grad(x);
                let imag: Vec<Complex64> = g.iter().map(|&o| Complex64::i() * o).collect();
                g.extend(imag);
                g
            }
        }
    }
}
