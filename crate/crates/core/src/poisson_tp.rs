//! Poisson and translated Poisson laws and their residues modulo `b`.
//!
//! A translated Poisson law `TP(mu, sigma2)` is `shift + Po(sigma2 + gamma)`
//! where `shift + gamma = mu - sigma2`, `shift` is an integer and
//! `0 <= gamma < 1`. The parameters are exact rationals so that `gamma` is
//! never misclassified near integers; probabilities are `f64`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};

use crate::error::{out_of_range, Error, Result};
use crate::Rational;

/// Tolerance on `mass + tail` for a [`RealDistributionOnIntegers`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Largest certified tail accepted by the direct residue summation.
pub const DIRECT_SUM_TAIL: f64 = 1e-14;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(out_of_range("lambda", "finite and > 0", lambda))
    }
}

fn check_residue(b: u64, k: u64) -> Result<()> {
    if b < 2 {
        return Err(out_of_range("b", ">= 2", b));
    }
    if k >= b {
        return Err(out_of_range("k", "a residue in 0..b", k));
    }
    Ok(())
}

/// `ln(j!) - [(j + 1/2) ln j - j + ln sqrt(2 pi)]`, the Stirling remainder.
fn stirling_error(j: u64) -> f64 {
    if j <= 15 {
        // 15! is exact in an f64; the cancellation costs a few 1e-15 absolute.
        let ln_fact = (1..=j).map(|i| i as f64).product::<f64>().ln();
        let x = j as f64;
        return ln_fact - (x + 0.5) * x.ln() + x - LN_SQRT_2PI;
    }
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    let x = j as f64;
    let xx = x * x;
    (S0 - (S1 - (S2 - (S3 - S4 / xx) / xx) / xx) / xx) / x
}

/// `x ln(x / mean) + mean - x`, the deviance term, without cancellation
/// when `x` is close to `mean`.
fn deviance(x: f64, mean: f64) -> f64 {
    if x == 0.0 {
        return mean;
    }
    if (x - mean).abs() < 0.1 * (x + mean) {
        let v = (x - mean) / (x + mean);
        let mut sum = (x - mean) * v;
        let mut term = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            term *= v2;
            let next = sum + term / (2 * j + 1) as f64;
            if next == sum {
                return sum;
            }
            sum = next;
        }
        sum
    } else {
        x * (x / mean).ln() + mean - x
    }
}

/// `e^{-lambda} lambda^j / j!`, evaluated in log space through the Stirling
/// remainder and the deviance so that neither `lambda^j` nor `j!` is formed.
pub fn poisson_pmf(lambda: f64, j: i64) -> Result<f64> {
    check_lambda(lambda)?;
    if j < 0 {
        return Err(out_of_range("j", ">= 0", j));
    }
    Ok(pmf_unchecked(lambda, j as u64))
}

fn pmf_unchecked(lambda: f64, j: u64) -> f64 {
    if j == 0 {
        return (-lambda).exp();
    }
    let x = j as f64;
    (-stirling_error(j) - deviance(x, lambda)).exp() / (2.0 * PI * x).sqrt()
}

/// Chernoff bound on `P[X >= a]` (for `a > lambda`) or `P[X <= a]`
/// (for `a < lambda`), `exp(-deviance(a, lambda))`.
fn chernoff_tail(lambda: f64, a: f64) -> f64 {
    (-deviance(a, lambda)).exp()
}

/// A law on the integers stored on a finite window, with a certified bound
/// on the mass that lies outside it.
#[derive(Debug, Clone, PartialEq)]
pub struct RealDistributionOnIntegers {
    support_offset: i64,
    weights: Vec<f64>,
    tail_mass_bound: f64,
}

impl RealDistributionOnIntegers {
    pub fn new(support_offset: i64, weights: Vec<f64>, tail_mass_bound: f64) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution(
                "weights must be finite and nonnegative".into(),
            ));
        }
        if !tail_mass_bound.is_finite() || tail_mass_bound < 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "tail bound {tail_mass_bound} must be finite and nonnegative"
            )));
        }
        let mass: f64 = weights.iter().sum();
        if (mass + tail_mass_bound - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::Unnormalized {
                mass,
                tail: tail_mass_bound,
            });
        }
        Ok(Self {
            support_offset,
            weights,
            tail_mass_bound,
        })
    }

    pub fn point_mass(at: i64) -> Self {
        Self {
            support_offset: at,
            weights: vec![1.0],
            tail_mass_bound: 0.0,
        }
    }

    /// `Po(lambda)` on `[lambda - h, lambda + h]` clipped at zero, where
    /// `h = max(50, 12 sqrt(lambda))`, widened until the tail bound is below
    /// `max_tail`.
    pub fn poisson_window(lambda: f64, max_tail: f64) -> Result<Self> {
        check_lambda(lambda)?;
        let mut half_width = (12.0 * lambda.sqrt()).max(50.0);
        loop {
            let lo = (lambda - half_width).floor().max(0.0);
            let hi = (lambda + half_width).ceil();
            let mut tail = chernoff_tail(lambda, hi + 1.0);
            if lo > 0.0 {
                tail += chernoff_tail(lambda, lo - 1.0);
            }
            if tail < max_tail || half_width > 1e9 {
                let weights = (lo as u64..=hi as u64)
                    .map(|j| pmf_unchecked(lambda, j))
                    .collect();
                return Self::new(lo as i64, weights, tail);
            }
            half_width *= 2.0;
        }
    }

    /// Window of `TP(mu, sigma2)` built from the Poisson window of its rate.
    pub fn translated_poisson_window(
        params: &TranslatedPoissonParams,
        max_tail: f64,
    ) -> Result<Self> {
        let mut window = Self::poisson_window(params.rate_f64(), max_tail)?;
        window.support_offset += params.shift;
        Ok(window)
    }

    pub fn support_offset(&self) -> i64 {
        self.support_offset
    }

    /// One past the largest stored support point.
    pub fn support_end(&self) -> i64 {
        self.support_offset + self.weights.len() as i64
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn tail_mass_bound(&self) -> f64 {
        self.tail_mass_bound
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn probability(&self, x: i64) -> f64 {
        x.checked_sub(self.support_offset)
            .and_then(|i| usize::try_from(i).ok())
            .and_then(|i| self.weights.get(i).copied())
            .unwrap_or(0.0)
    }

    fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .map(move |(i, w)| ((self.support_offset + i as i64) as f64, *w))
    }

    pub fn mean(&self) -> f64 {
        self.points().map(|(x, w)| x * w).sum::<f64>() / self.total_mass()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.points()
            .map(|(x, w)| (x - mean) * (x - mean) * w)
            .sum::<f64>()
            / self.total_mass()
    }

    /// Mass of the stored window on the class `k mod b`.
    pub fn residue_mass(&self, b: u64, k: u64) -> Result<f64> {
        check_residue(b, k)?;
        let b = b as i64;
        Ok(self
            .points()
            .filter(|(x, _)| (*x as i64).rem_euclid(b) == k as i64)
            .map(|(_, w)| w)
            .sum())
    }
}

/// Parameters of `TP(mu, sigma2)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslatedPoissonParams {
    mu: Rational,
    sigma2: Rational,
    gamma: Rational,
    shift: i64,
    poisson_rate: Rational,
}

impl TranslatedPoissonParams {
    pub fn mu(&self) -> &Rational {
        &self.mu
    }

    pub fn sigma2(&self) -> &Rational {
        &self.sigma2
    }

    /// Fractional part of `mu - sigma2`.
    pub fn gamma(&self) -> &Rational {
        &self.gamma
    }

    /// Integer part of `mu - sigma2`.
    pub fn shift(&self) -> i64 {
        self.shift
    }

    /// `sigma2 + gamma`, the rate of the underlying Poisson law and the
    /// variance of the translated law.
    pub fn poisson_rate(&self) -> &Rational {
        &self.poisson_rate
    }

    pub fn rate_f64(&self) -> f64 {
        self.poisson_rate.to_f64().expect("finite rate")
    }

    /// Mean of the translated law, `shift + rate`; equals `mu`.
    pub fn mean(&self) -> Rational {
        Rational::from_integer(BigInt::from(self.shift)) + &self.poisson_rate
    }
}

/// Splits `mu - sigma2` into integer shift and fractional part.
pub fn translate_params(mu: Rational, sigma2: Rational) -> Result<TranslatedPoissonParams> {
    if !sigma2.is_positive() {
        return Err(out_of_range("sigma2", "> 0", sigma2));
    }
    let diff = &mu - &sigma2;
    let floor = diff.floor();
    let gamma = &diff - &floor;
    let shift = floor
        .to_integer()
        .to_i64()
        .ok_or_else(|| out_of_range("mu - sigma2", "within i64", &diff))?;
    let poisson_rate = &sigma2 + &gamma;
    Ok(TranslatedPoissonParams {
        mu,
        sigma2,
        gamma,
        shift,
        poisson_rate,
    })
}

/// `P[Y = m]` for `Y ~ TP(mu, sigma2)`.
pub fn tp_pmf(params: &TranslatedPoissonParams, m: i64) -> f64 {
    match m.checked_sub(params.shift) {
        Some(j) if j >= 0 => pmf_unchecked(params.rate_f64(), j as u64),
        _ => 0.0,
    }
}

/// How a residue probability is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ResidueMethod {
    /// Sum the pmf over the class on a window with certified tail.
    DirectSum,
    /// Average the characteristic function over the `b`-th roots of unity.
    Fourier,
}

impl fmt::Display for ResidueMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResidueMethod::DirectSum => f.write_str("sum"),
            ResidueMethod::Fourier => f.write_str("fourier"),
        }
    }
}

impl FromStr for ResidueMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" | "direct_sum" | "direct-sum" => Ok(ResidueMethod::DirectSum),
            "fourier" => Ok(ResidueMethod::Fourier),
            other => Err(out_of_range("method", "sum or fourier", other)),
        }
    }
}

/// `P[X = k mod b]` for `X ~ Po(lambda)`.
pub fn poisson_mod_probability(lambda: f64, b: u64, k: u64, method: ResidueMethod) -> Result<f64> {
    check_lambda(lambda)?;
    check_residue(b, k)?;
    match method {
        ResidueMethod::DirectSum => {
            RealDistributionOnIntegers::poisson_window(lambda, DIRECT_SUM_TAIL)?.residue_mass(b, k)
        }
        ResidueMethod::Fourier => Ok(fourier_residue(lambda, b, k)),
    }
}

/// `(1/b) sum_j E exp(2 pi i j (X - k) / b)` with `E exp(i t X) =
/// exp(lambda (e^{it} - 1))`. Terms `j` and `b - j` are conjugate and are
/// added as twice the real part; for even `b` the term `j = b/2` is real.
fn fourier_residue(lambda: f64, b: u64, k: u64) -> f64 {
    let bf = b as f64;
    let mut sum = 1.0;
    for j in 1..=(b - 1) / 2 {
        let theta = 2.0 * PI * j as f64 / bf;
        let phase = 2.0 * PI * ((j * k) % b) as f64 / bf;
        let modulus = (-lambda * one_minus_cos(j, b)).exp();
        sum += 2.0 * modulus * (lambda * theta.sin() - phase).cos();
    }
    if b.is_multiple_of(2) {
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        sum += sign * (-2.0 * lambda).exp();
    }
    sum / bf
}

/// `1 - cos(2 pi j / b)` as `2 sin^2(pi m / b)` with `m = min(j, b - j)`,
/// so that conjugate indices produce bitwise identical values.
fn one_minus_cos(j: u64, b: u64) -> f64 {
    let m = j.min(b - j);
    let s = (PI * m as f64 / b as f64).sin();
    2.0 * s * s
}

/// The two deviation bounds for `|P[X = k mod b] - 1/b|`, `X ~ Po(lambda)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonModBounds {
    /// `(1/b) sum_{j=1}^{b-1} exp(-lambda (1 - cos(2 pi j / b)))`.
    pub tight: f64,
    /// `((b-1)/b) exp(-lambda (1 - cos(2 pi / b)))`.
    pub loose: f64,
}

pub fn poisson_mod_bounds(lambda: f64, b: u64) -> Result<PoissonModBounds> {
    check_lambda(lambda)?;
    if b < 2 {
        return Err(out_of_range("b", ">= 2", b));
    }
    let bf = b as f64;
    let tight = (1..b)
        .map(|j| (-lambda * one_minus_cos(j, b)).exp())
        .sum::<f64>()
        / bf;
    let loose = (bf - 1.0) / bf * (-lambda * one_minus_cos(1, b)).exp();
    // Summation rounding can land an ulp above (b-1) times the largest term.
    Ok(PoissonModBounds {
        tight: tight.min(loose),
        loose,
    })
}

/// `P[Y = k mod b]` for `Y ~ TP(mu, sigma2)`, via the Fourier form of the
/// shifted Poisson law.
pub fn tp_mod_probability(params: &TranslatedPoissonParams, b: u64, k: u64) -> Result<f64> {
    check_residue(b, k)?;
    let shifted = (k as i64 - params.shift).rem_euclid(b as i64) as u64;
    poisson_mod_probability(params.rate_f64(), b, shifted, ResidueMethod::Fourier)
}

/// `TP((n-1)/2, (n+1)/12)`, the translated Poisson law matched to the
/// descent count of `n` symbols.
pub fn descent_tp_params(n: usize) -> Result<TranslatedPoissonParams> {
    if n < 1 {
        return Err(out_of_range("n", ">= 1", n));
    }
    let n = BigInt::from(n);
    let mu = Rational::new(&n - 1, BigInt::from(2));
    let sigma2 = Rational::new(&n + 1, BigInt::from(12));
    translate_params(mu, sigma2)
}

impl fmt::Display for TranslatedPoissonParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "TP(mu={}, sigma2={}) = {} + Po({})",
            self.mu, self.sigma2, self.shift, self.poisson_rate
        )
    }
}
