//! Gowers box seminorms on `Z/N` and empirical Host-Kra cube integrals.
//!
//! The degree-`k` seminorm is the `2^k`-th root of the average of the
//! conjugation-twisted vertex product over all parallelepipeds
//! `x + Σ_j h_j v_j`. Two independent evaluation routes are provided:
//!
//! * [`gowers_naive`] enumerates the multilinear average directly, folding
//!   the innermost `(h_k, x)` double sum into a square modulus (an exact
//!   finite-sum identity, not an approximation);
//! * [`gowers_recursive`] uses the inductive structure of the cube measures:
//!   the degree-`(k+1)` power is the `h`-average of the degree-`k` power of
//!   the multiplicative derivative `f · conj(f ∘ shift_h)`.
//!
//! The two must agree to ~1e-10 wherever both run; that agreement is an
//! acceptance gate, not an implementation detail.
//!
//! Complex-valued observables are handled with the standard convention:
//! conjugate at odd-weight vertices, which makes the average real and
//! nonnegative.

use crate::cube::CubeConfig;
use crate::error::{Error, Result};
use crate::stats::{complex_mean_stderr, e2pi};
use crate::systems::{frac, Point, System};
use crate::cubespace::sample_cube;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A bounded observable on system points, in closed form or as a table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "f", rename_all = "snake_case")]
pub enum Observable {
    /// The character `e(ξ·x)` (on `Z/N`: `e(ξ x / N)`).
    Char { xi: i64 },
    /// The quadratic phase `e(a x² / N)`; finite systems only.
    Quad { a: i64 },
    /// Indicator of the arc `[lo, hi)` in the first coordinate.
    Arc { lo: f64, hi: f64 },
    /// A lookup table of real values on `Z/N`.
    Table { values: Vec<f64> },
    /// A trigonometric polynomial `Σ c_ξ e(ξ·x)`; coefficients are
    /// `(ξ, re, im)` triples.
    Trig { coeffs: Vec<(i64, f64, f64)> },
}

impl Observable {
    /// Evaluate at a point of the system.
    pub fn eval(&self, sys: &System, p: &Point) -> Result<Complex64> {
        match p {
            Point::Cyclic(u) => {
                let n = sys.point_count().expect("cyclic point implies finite system");
                self.eval_zn(*u, n)
            }
            Point::Torus(v) => self.eval_circle(v[0]),
        }
    }

    /// Evaluate on `Z/N`.
    pub fn eval_zn(&self, x: u64, n: u64) -> Result<Complex64> {
        match self {
            Observable::Quad { a } => {
                let q = ((x as i128 * x as i128) % n as i128) as f64;
                Ok(e2pi(frac(*a as f64 * q / n as f64)))
            }
            Observable::Table { values } => {
                if values.len() != n as usize {
                    return Err(Error::InvalidInput(format!(
                        "table of length {} on Z/{n}",
                        values.len()
                    )));
                }
                Ok(Complex64::new(values[x as usize], 0.0))
            }
            _ => self.eval_circle(x as f64 / n as f64),
        }
    }

    /// Evaluate as a function on the circle.
    pub fn eval_circle(&self, x: f64) -> Result<Complex64> {
        match self {
            Observable::Char { xi } => Ok(e2pi(frac(*xi as f64 * x))),
            Observable::Arc { lo, hi } => {
                let inside = if lo <= hi {
                    x >= *lo && x < *hi
                } else {
                    x >= *lo || x < *hi
                };
                Ok(Complex64::new(if inside { 1.0 } else { 0.0 }, 0.0))
            }
            Observable::Trig { coeffs } => Ok(coeffs
                .iter()
                .map(|(xi, re, im)| Complex64::new(*re, *im) * e2pi(frac(*xi as f64 * x)))
                .sum()),
            Observable::Quad { .. } => Err(Error::InvalidInput(
                "quadratic phases need a finite modulus".into(),
            )),
            Observable::Table { .. } => Err(Error::InvalidInput(
                "table observables need a finite system".into(),
            )),
        }
    }

    /// Materialize as a table on `Z/N`.
    pub fn table_zn(&self, n: u64) -> Result<Vec<Complex64>> {
        (0..n).map(|x| self.eval_zn(x, n)).collect()
    }

    /// The frequency support when the observable is a trigonometric
    /// polynomial.
    pub fn trig_coeffs(&self) -> Result<Vec<(i64, Complex64)>> {
        match self {
            Observable::Char { xi } => Ok(vec![(*xi, Complex64::new(1.0, 0.0))]),
            Observable::Trig { coeffs } => Ok(coeffs
                .iter()
                .map(|(xi, re, im)| (*xi, Complex64::new(*re, *im)))
                .collect()),
            _ => Err(Error::InvalidInput(
                "observable is not a trigonometric polynomial".into(),
            )),
        }
    }
}

/// How a seminorm value was computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeminormMethod {
    Naive,
    Recursive,
    Empirical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeminormReport {
    pub k: usize,
    pub value: f64,
    pub method: SeminormMethod,
    /// Sample count for the empirical method.
    pub samples: Option<u64>,
    /// Statistical error of the `2^k`-th power, for the empirical method.
    pub stderr: Option<f64>,
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 || k > 8 {
        return Err(Error::DimensionOutOfRange { dim: k, max: 8 });
    }
    Ok(())
}

/// Cost cap for the naive route. The innermost `(h_k, x)` double sum is
/// folded exactly, so the work is `N^k` array operations.
const NAIVE_CAP: f64 = 1.0e8;

/// The degree-`k` seminorm by direct enumeration of the definitional
/// average.
pub fn gowers_naive(f: &[Complex64], k: usize) -> Result<SeminormReport> {
    check_k(k)?;
    let n = f.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty table".into()));
    }
    if (n as f64).powi(k as i32) > NAIVE_CAP {
        return Err(Error::SizeCap(format!(
            "naive loop would cost {:.3e} > {NAIVE_CAP:.1e} operations",
            (n as f64).powi(k as i32)
        )));
    }
    let mut scratch: Vec<Vec<Complex64>> = (1..k).map(|_| vec![Complex64::default(); n]).collect();
    let mut acc = 0.0f64;
    naive_rec(f, &mut scratch, &mut acc);
    let power = acc / (n as f64).powi(k as i32 + 1);
    Ok(SeminormReport {
        k,
        value: root_2k(power, k),
        method: SeminormMethod::Naive,
        samples: None,
        stderr: None,
    })
}

/// Enumerate `h_1, ..., h_{k-1}`; at the last level compute
/// `Σ_{h_k} Σ_x P(x)·conj(P(x+h_k)) = |Σ_x P(x)|²` exactly.
fn naive_rec(cur: &[Complex64], scratch: &mut [Vec<Complex64>], acc: &mut f64) {
    let n = cur.len();
    if let Some((next, rest)) = scratch.split_first_mut() {
        for h in 0..n {
            for x in 0..n {
                next[x] = cur[x] * cur[(x + h) % n].conj();
            }
            naive_rec(next, rest, acc);
        }
    } else {
        let s: Complex64 = cur.iter().sum();
        *acc += s.norm_sqr();
    }
}

const RECURSIVE_CAP: f64 = 1.0e7;

/// The degree-`k` seminorm through the inductive definition of the cube
/// averages: `U_{k}^{2^k}(f) = E_h U_{k-1}^{2^{k-1}}(f · conj(shift_h f))`.
pub fn gowers_recursive(f: &[Complex64], k: usize) -> Result<SeminormReport> {
    check_k(k)?;
    let n = f.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty table".into()));
    }
    if n as f64 * (1u64 << k) as f64 > RECURSIVE_CAP {
        return Err(Error::SizeCap(format!(
            "recursive route capped at N·2^k <= {RECURSIVE_CAP:.1e}"
        )));
    }
    let power = recursive_pow(f, k);
    Ok(SeminormReport {
        k,
        value: root_2k(power, k),
        method: SeminormMethod::Recursive,
        samples: None,
        stderr: None,
    })
}

fn recursive_pow(f: &[Complex64], k: usize) -> f64 {
    let n = f.len();
    if k == 1 {
        let mean: Complex64 = f.iter().sum::<Complex64>() / n as f64;
        return mean.norm_sqr();
    }
    let mut acc = 0.0;
    let mut g = vec![Complex64::default(); n];
    for h in 0..n {
        for x in 0..n {
            g[x] = f[x] * f[(x + h) % n].conj();
        }
        acc += recursive_pow(&g, k - 1);
    }
    acc / n as f64
}

fn root_2k(power: f64, k: usize) -> f64 {
    // Tiny negative dust from cancellation clamps to zero.
    power.max(0.0).powf(1.0 / (1u64 << k) as f64)
}

/// Conjugate at odd-weight vertices: the pattern that makes the seminorm
/// integrand real.
pub fn conjugation_pattern(k: usize) -> Result<CubeConfig<bool>> {
    CubeConfig::from_fn(k, |v| v.weight() % 2 == 1)
}

/// Monte-Carlo estimate of `∫ Π_v f_v(c_v) dμ` over the cube sampler, with
/// standard error.
pub fn hk_integral_empirical(
    sys: &System,
    k: usize,
    fs: &[Observable],
    n_samples: usize,
    rng: &mut impl Rng,
) -> Result<(Complex64, f64)> {
    if fs.len() != 1 << k {
        return Err(Error::BadConfigLength { dim: k, expected: 1 << k, got: fs.len() });
    }
    let mut vals = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let c = sample_cube(sys, k, rng)?;
        let mut prod = Complex64::new(1.0, 0.0);
        for (i, p) in c.values().iter().enumerate() {
            prod *= fs[i].eval(sys, p)?;
        }
        vals.push(prod);
    }
    Ok(complex_mean_stderr(&vals))
}

/// Empirical seminorm: the conjugation-twisted cube integral of a single
/// observable, reported with the statistical error of the `2^k`-th power.
pub fn gowers_empirical(
    sys: &System,
    f: &Observable,
    k: usize,
    n_samples: usize,
    rng: &mut impl Rng,
) -> Result<SeminormReport> {
    check_k(k)?;
    let pattern = conjugation_pattern(k)?;
    let mut vals = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let c = sample_cube(sys, k, rng)?;
        let mut prod = Complex64::new(1.0, 0.0);
        for (v, p) in c.iter() {
            let z = f.eval(sys, p)?;
            prod *= if *pattern.value(v) { z.conj() } else { z };
        }
        vals.push(prod);
    }
    let (mean, stderr) = complex_mean_stderr(&vals);
    Ok(SeminormReport {
        k,
        value: root_2k(mean.re, k),
        method: SeminormMethod::Empirical,
        samples: Some(n_samples as u64),
        stderr: Some(stderr),
    })
}

/// Partial averages `A_N = (1/N) Σ_{n<N} Π_i f_i(T^{i n} x)`, reported at
/// the requested checkpoints (always including `n_max`).
pub fn nonconventional_average(
    sys: &System,
    x: &Point,
    fs: &[Observable],
    n_max: u64,
    checkpoints: &[u64],
) -> Result<Vec<(u64, Complex64)>> {
    if fs.is_empty() {
        return Err(Error::InvalidInput("need at least one observable".into()));
    }
    let mut marks: Vec<u64> = checkpoints
        .iter()
        .copied()
        .filter(|&c| c >= 1 && c <= n_max)
        .collect();
    marks.push(n_max);
    marks.sort_unstable();
    marks.dedup();

    // Track the orbit points T^{i n} x, one per observable.
    let mut points: Vec<Point> = vec![x.clone(); fs.len()];
    let mut sum = Complex64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(marks.len());
    let mut next_mark = 0usize;
    for n in 0..n_max {
        let mut prod = Complex64::new(1.0, 0.0);
        for (i, p) in points.iter().enumerate() {
            prod *= fs[i].eval(sys, p)?;
        }
        sum += prod;
        for (i, p) in points.iter_mut().enumerate() {
            *p = sys.act(i as i64 + 1, p);
        }
        while next_mark < marks.len() && marks[next_mark] == n + 1 {
            out.push((n + 1, sum / (n + 1) as f64));
            next_mark += 1;
        }
    }
    Ok(out)
}

/// A finite trigonometric polynomial on the circle.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly {
    pub coeffs: BTreeMap<i64, (f64, f64)>,
}

impl TrigPoly {
    pub fn eval(&self, x: f64) -> Complex64 {
        self.coeffs
            .iter()
            .map(|(xi, (re, im))| Complex64::new(*re, *im) * e2pi(frac(*xi as f64 * x)))
            .sum()
    }

    fn add(&mut self, xi: i64, c: Complex64) {
        let entry = self.coeffs.entry(xi).or_insert((0.0, 0.0));
        entry.0 += c.re;
        entry.1 += c.im;
    }
}

/// The limit of the nonconventional average for an ergodic rotation:
/// `lim A_N = E_t Π_i f_i(x + i t)`, the resonance sum over frequency tuples
/// with `Σ i·ξ_i = 0`, each contributing `Π f̂_i(ξ_i)` at output frequency
/// `Σ ξ_i`.
pub fn kronecker_limit_rotation(fs: &[Observable]) -> Result<TrigPoly> {
    let supports: Vec<Vec<(i64, Complex64)>> =
        fs.iter().map(|f| f.trig_coeffs()).collect::<Result<_>>()?;
    let mut out = TrigPoly::default();
    let mut stack: Vec<usize> = Vec::new();
    resonance_rec(&supports, &mut stack, &mut out);
    Ok(out)
}

fn resonance_rec(
    supports: &[Vec<(i64, Complex64)>],
    chosen: &mut Vec<usize>,
    out: &mut TrigPoly,
) {
    if chosen.len() == supports.len() {
        let mut weighted = 0i64;
        let mut total = 0i64;
        let mut coeff = Complex64::new(1.0, 0.0);
        for (i, &idx) in chosen.iter().enumerate() {
            let (xi, c) = supports[i][idx];
            weighted += (i as i64 + 1) * xi;
            total += xi;
            coeff *= c;
        }
        if weighted == 0 {
            out.add(total, coeff);
        }
        return;
    }
    for idx in 0..supports[chosen.len()].len() {
        chosen.push(idx);
        resonance_rec(supports, chosen, out);
        chosen.pop();
    }
}
