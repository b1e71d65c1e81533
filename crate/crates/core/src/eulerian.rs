//! Eulerian numbers, the exact law of the descent count and its residues.
//!
//! Everything here is exact: the triangle is built with [`BigUint`] and the
//! probabilities are [`Rational`]s. Row `n` of the triangle holds
//! `A(n, 0), ..., A(n, n - 1)`; there is no row `0`.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::enumerate::for_each_permutation;
use crate::error::{out_of_range, Error, Result};
use crate::poisson_tp::RealDistributionOnIntegers;
use crate::Rational;

/// Largest `n` accepted by [`brute_force_descent_distribution`].
pub const BRUTE_FORCE_MAX_N: usize = 10;

/// Rows `1..=n_max` of the Eulerian triangle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EulerianTable {
    rows: Vec<Vec<BigUint>>,
}

impl EulerianTable {
    /// Builds the triangle with `A(n,k) = (k+1) A(n-1,k) + (n-k) A(n-1,k-1)`.
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(out_of_range("n_max", ">= 1", n_max));
        }
        let mut rows: Vec<Vec<BigUint>> = Vec::with_capacity(n_max);
        rows.push(vec![BigUint::one()]);
        for n in 2..=n_max {
            let next = next_row(rows.last().expect("row 1 present"), n);
            rows.push(next);
        }
        Ok(Self { rows })
    }

    pub fn n_max(&self) -> usize {
        self.rows.len()
    }

    /// Row `n`, i.e. `A(n, 0..n)`, if `1 <= n <= n_max`.
    pub fn row(&self, n: usize) -> Option<&[BigUint]> {
        n.checked_sub(1)
            .and_then(|i| self.rows.get(i))
            .map(Vec::as_slice)
    }

    /// `A(n, k)`; zero for `k >= n`, `None` when row `n` is not stored.
    pub fn get(&self, n: usize, k: usize) -> Option<BigUint> {
        self.row(n)
            .map(|row| row.get(k).cloned().unwrap_or_else(BigUint::zero))
    }

    fn stored_row(&self, n: usize) -> Result<&[BigUint]> {
        if n < 1 {
            return Err(out_of_range("n", ">= 1", n));
        }
        self.row(n)
            .ok_or_else(|| out_of_range("n", "within the table", n))
    }

    /// Law of the descent count of a uniform permutation of `n` symbols.
    pub fn descent_distribution(&self, n: usize) -> Result<ExactIntegerDistribution> {
        let row = self.stored_row(n)?;
        Ok(row_to_distribution(row, &factorial(n)))
    }

    /// `(1/n!) * sum_{r = k mod b} A(n, r)`.
    pub fn modular_probability(&self, n: usize, b: usize, k: usize) -> Result<Rational> {
        check_residue(b, k)?;
        let row = self.stored_row(n)?;
        Ok(residue_sum(row, b, k, &factorial(n)))
    }

    /// All `b` residue probabilities of row `n`; they sum to exactly one.
    pub fn residue_probabilities(&self, n: usize, b: usize) -> Result<Vec<Rational>> {
        check_residue(b, 0)?;
        let row = self.stored_row(n)?;
        let total = factorial(n);
        Ok((0..b).map(|k| residue_sum(row, b, k, &total)).collect())
    }
}

fn next_row(prev: &[BigUint], n: usize) -> Vec<BigUint> {
    (0..n)
        .map(|k| {
            let mut value = BigUint::zero();
            if let Some(same) = prev.get(k) {
                value += same * BigUint::from(k + 1);
            }
            if k > 0 {
                value += &prev[k - 1] * BigUint::from(n - k);
            }
            value
        })
        .collect()
}

/// Builds the triangle up to `n_max`.
pub fn eulerian_triangle(n_max: usize) -> Result<EulerianTable> {
    EulerianTable::new(n_max)
}

/// Row `n` alone, keeping only the previous row in memory.
pub fn eulerian_row(n: usize) -> Result<Vec<BigUint>> {
    if n < 1 {
        return Err(out_of_range("n", ">= 1", n));
    }
    let mut row = vec![BigUint::one()];
    for m in 2..=n {
        row = next_row(&row, m);
    }
    Ok(row)
}

pub fn factorial(n: usize) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

fn check_residue(b: usize, k: usize) -> Result<()> {
    if b < 2 {
        return Err(out_of_range("b", ">= 2", b));
    }
    if k >= b {
        return Err(out_of_range("k", "a residue in 0..b", k));
    }
    Ok(())
}

fn residue_sum(row: &[BigUint], b: usize, k: usize, total: &BigUint) -> Rational {
    let count: BigUint = row.iter().skip(k).step_by(b).sum();
    Rational::new(BigInt::from(count), BigInt::from(total.clone()))
}

fn row_to_distribution(row: &[BigUint], total: &BigUint) -> ExactIntegerDistribution {
    let total = BigInt::from(total.clone());
    let weights = row
        .iter()
        .map(|a| Rational::new(BigInt::from(a.clone()), total.clone()))
        .collect();
    ExactIntegerDistribution {
        support_offset: 0,
        weights,
    }
}

/// Probability mass on `support_offset + i` with exact rational weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactIntegerDistribution {
    support_offset: i64,
    weights: Vec<Rational>,
}

impl ExactIntegerDistribution {
    /// Rejects negative weights and weights that do not sum to exactly one.
    pub fn new(support_offset: i64, weights: Vec<Rational>) -> Result<Self> {
        if weights.iter().any(Signed::is_negative) {
            return Err(Error::InvalidDistribution("negative weight".into()));
        }
        let total: Rational = weights.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(Self {
            support_offset,
            weights,
        })
    }

    pub fn point_mass(at: i64) -> Self {
        Self {
            support_offset: at,
            weights: vec![Rational::one()],
        }
    }

    pub fn support_offset(&self) -> i64 {
        self.support_offset
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn probability(&self, x: i64) -> Rational {
        x.checked_sub(self.support_offset)
            .and_then(|i| usize::try_from(i).ok())
            .and_then(|i| self.weights.get(i).cloned())
            .unwrap_or_else(Rational::zero)
    }

    fn points(&self) -> impl Iterator<Item = (Rational, &Rational)> + '_ {
        self.weights.iter().enumerate().map(move |(i, w)| {
            (
                Rational::from_integer(BigInt::from(self.support_offset + i as i64)),
                w,
            )
        })
    }

    pub fn mean(&self) -> Rational {
        self.points().map(|(x, w)| x * w).sum()
    }

    pub fn variance(&self) -> Rational {
        let mean = self.mean();
        self.points()
            .map(|(x, w)| {
                let d = x - &mean;
                &d * &d * w
            })
            .sum()
    }

    /// `P[X = k mod b]`, exactly.
    pub fn residue_probability(&self, b: usize, k: usize) -> Result<Rational> {
        check_residue(b, k)?;
        let b = b as i64;
        Ok(self
            .weights
            .iter()
            .enumerate()
            .filter(|(i, _)| (self.support_offset + *i as i64).rem_euclid(b) == k as i64)
            .map(|(_, w)| w.clone())
            .sum())
    }

    /// Converts to double precision.
    ///
    /// Weights that fall below the normal range are charged to the tail
    /// bound at `f64::MIN_POSITIVE` each, which over-covers their rounding
    /// error.
    pub fn to_real(&self) -> RealDistributionOnIntegers {
        let mut tail = 0.0;
        let weights = self
            .weights
            .iter()
            .map(|w| {
                let x = w.to_f64().unwrap_or(0.0);
                if !w.is_zero() && x < f64::MIN_POSITIVE {
                    tail += f64::MIN_POSITIVE;
                }
                x
            })
            .collect();
        RealDistributionOnIntegers::new(self.support_offset, weights, tail)
            .expect("exact law converts to a valid real law")
    }
}

/// Law of the descent count of a uniform permutation of `n` symbols.
pub fn descent_distribution(n: usize) -> Result<ExactIntegerDistribution> {
    let row = eulerian_row(n)?;
    Ok(row_to_distribution(&row, &factorial(n)))
}

/// Probability that a uniform permutation of `n` symbols has a descent
/// count congruent to `k` modulo `b`.
pub fn modular_descent_probability(n: usize, b: usize, k: usize) -> Result<Rational> {
    check_residue(b, k)?;
    let row = eulerian_row(n)?;
    Ok(residue_sum(&row, b, k, &factorial(n)))
}

/// Bernoulli numbers `B_0..=B_m` with `B_1 = -1/2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BernoulliSequence {
    values: Vec<Rational>,
}

impl BernoulliSequence {
    /// Solves `sum_{j=0}^{m} C(m+1, j) B_j = 0` for `B_m`, one `m` at a time.
    pub fn new(m: usize) -> Self {
        let mut values: Vec<Rational> = Vec::with_capacity(m + 1);
        values.push(Rational::one());
        for order in 1..=m {
            if order > 1 && order.is_odd() {
                values.push(Rational::zero());
                continue;
            }
            let mut binom = BigInt::one(); // C(order + 1, j)
            let mut acc = Rational::zero();
            for (j, b) in values.iter().enumerate() {
                if !b.is_zero() {
                    acc += b * &binom;
                }
                binom = binom * BigInt::from(order + 1 - j) / BigInt::from(j + 1);
            }
            values.push(-acc / Rational::from_integer(BigInt::from(order + 1)));
        }
        Self { values }
    }

    pub fn get(&self, index: usize) -> Option<&Rational> {
        self.values.get(index)
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }
}

/// `(1/2) (1 + 2^{n+1} (2^{n+1} - 1) B_{n+1} / (n+1)!)`, the probability
/// that the descent count is even, via Bernoulli numbers.
pub fn bernoulli_even_probability(n: usize) -> Result<Rational> {
    if n < 1 {
        return Err(out_of_range("n", ">= 1", n));
    }
    let bernoulli = BernoulliSequence::new(n + 1);
    Ok(bernoulli_even_from(&bernoulli, n))
}

/// Same as [`bernoulli_even_probability`] reusing a precomputed sequence of
/// length at least `n + 2`.
pub fn bernoulli_even_from(bernoulli: &BernoulliSequence, n: usize) -> Rational {
    let b_next = bernoulli
        .get(n + 1)
        .expect("Bernoulli sequence long enough");
    let pow = BigInt::one() << (n + 1);
    let scale = &pow * (&pow - BigInt::one());
    let ratio = b_next * Rational::new(scale, BigInt::from(factorial(n + 1)));
    (Rational::one() + ratio) / Rational::from_integer(BigInt::from(2))
}

/// Descent law obtained by enumerating all `n!` permutations and counting
/// positions `i` with `pi(i) > pi(i+1)`.
pub fn brute_force_descent_distribution(n: usize) -> Result<ExactIntegerDistribution> {
    if n < 1 {
        return Err(out_of_range("n", ">= 1", n));
    }
    if n > BRUTE_FORCE_MAX_N {
        return Err(out_of_range("n", "<= 10 for enumeration", n));
    }
    let mut counts = vec![0u64; n];
    let mut items: Vec<u8> = (1..=n as u8).collect();
    for_each_permutation(&mut items, |perm| {
        let descents = perm.windows(2).filter(|w| w[0] > w[1]).count();
        counts[descents] += 1;
    });
    let total: u64 = counts.iter().sum();
    let weights = counts
        .into_iter()
        .map(|c| Rational::new(BigInt::from(c), BigInt::from(total)))
        .collect();
    ExactIntegerDistribution::new(0, weights)
}
