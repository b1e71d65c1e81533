//! The move-to-end exchangeable pair on permutations.
//!
//! `W(pi)` counts the values `i` such that `i` and `i + 1` are out of order
//! in `pi`, i.e. the descents of `pi^{-1}`. One step of the chain removes the
//! entry at a uniform position `I` and appends it, giving `W' = W(pi')`.
//! The up-step probability given `pi` is `(X_1 + ... + X_{n-1}) / n` with
//! `X_1 = [1 before 2]` and `X_i = [i-1, i, i+1 appear in order]`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::enumerate::for_each_permutation;
use crate::error::{out_of_range, Error, Result};
use crate::Rational;

/// Largest `n` accepted by [`pair_oracle`].
pub const ORACLE_MAX_N: usize = 9;

/// Samples drawn per independent generator stream in [`sample_chain`].
pub const SAMPLES_PER_STREAM: usize = 1 << 16;

/// A permutation of `1..=n` in one-line notation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    mapping: Vec<u32>,
}

impl Permutation {
    pub fn new(mapping: Vec<u32>) -> Result<Self> {
        let n = mapping.len();
        if n == 0 {
            return Err(Error::InvalidPermutation("empty".into()));
        }
        let mut seen = vec![false; n];
        for &v in &mapping {
            let idx = (v as usize).wrapping_sub(1);
            match seen.get_mut(idx) {
                Some(slot) if !*slot => *slot = true,
                Some(_) => return Err(Error::InvalidPermutation(format!("repeated value {v}"))),
                None => {
                    return Err(Error::InvalidPermutation(format!(
                        "value {v} outside 1..={n}"
                    )))
                }
            }
        }
        Ok(Self { mapping })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mapping: (1..=n as u32).collect(),
        }
    }

    pub fn reversal(n: usize) -> Self {
        Self {
            mapping: (1..=n as u32).rev().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.mapping
    }

    /// `positions()[v - 1]` is the 0-based position of value `v`.
    pub fn positions(&self) -> Vec<usize> {
        positions_of(&self.mapping)
    }
}

fn positions_of(mapping: &[u32]) -> Vec<usize> {
    let mut pos = Vec::new();
    fill_positions(mapping, &mut pos);
    pos
}

fn fill_positions(mapping: &[u32], pos: &mut Vec<usize>) {
    pos.clear();
    pos.resize(mapping.len(), 0);
    for (i, &v) in mapping.iter().enumerate() {
        pos[v as usize - 1] = i;
    }
}

/// `W` from an inverse-position array.
fn w_from_positions(pos: &[usize]) -> usize {
    pos.windows(2).filter(|w| w[0] > w[1]).count()
}

/// Writes `X_1..X_{n-1}` into `out` (index 0 holds `X_1`).
fn indicators_from_positions(pos: &[usize], out: &mut Vec<bool>) {
    out.clear();
    let n = pos.len();
    if n < 2 {
        return;
    }
    out.push(pos[0] < pos[1]);
    for i in 1..n - 1 {
        out.push(pos[i - 1] < pos[i] && pos[i] < pos[i + 1]);
    }
}

/// Number of descents of `pi^{-1}`.
pub fn descents_of_inverse(pi: &Permutation) -> usize {
    w_from_positions(&pi.positions())
}

/// Moves the entry at 1-based position `position` to the end.
pub fn move_random_to_end(pi: &Permutation, position: usize) -> Result<Permutation> {
    let n = pi.len();
    if position < 1 || position > n {
        return Err(out_of_range("I", "in 1..=n", position));
    }
    let mut mapping = pi.mapping.clone();
    let value = mapping.remove(position - 1);
    mapping.push(value);
    Ok(Permutation { mapping })
}

/// The `n - 1` indicators `X_1..X_{n-1}`.
pub fn x_indicators(pi: &Permutation) -> Result<Vec<bool>> {
    if pi.len() < 2 {
        return Err(out_of_range("n", ">= 2", pi.len()));
    }
    let mut out = Vec::with_capacity(pi.len() - 1);
    indicators_from_positions(&pi.positions(), &mut out);
    Ok(out)
}

/// `P[W' = W + 1 | pi] = (X_1 + ... + X_{n-1}) / n`.
pub fn s_given_pi(pi: &Permutation) -> Result<Rational> {
    let ups = x_indicators(pi)?.into_iter().filter(|&x| x).count();
    Ok(Rational::new(BigInt::from(ups), BigInt::from(pi.len())))
}

/// The five groups of `E[(X_1 + ... + X_{n-1})^2]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TTerms {
    /// `sum_i E X_i^2`.
    pub t1: Rational,
    /// `2 sum_{j >= 2} E X_1 X_j`.
    pub t2: Rational,
    /// `2 sum_{i >= 2} E X_i X_{i+1}`.
    pub t3: Rational,
    /// `2 sum_{i >= 2} E X_i X_{i+2}`.
    pub t4: Rational,
    /// `2 sum_{i >= 2, j >= i + 3} E X_i X_j`.
    pub t5: Rational,
}

impl TTerms {
    pub fn sum(&self) -> Rational {
        &self.t1 + &self.t2 + &self.t3 + &self.t4 + &self.t5
    }
}

/// Exact moments of the pair obtained by enumerating all `n!` permutations
/// and all `n` choices of the moved position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairMomentReport {
    pub n: usize,
    /// Present only for `n >= 6`, where all five groups are populated.
    pub t_terms: Option<TTerms>,
    /// `E S`.
    pub mean_s: Rational,
    /// `Var P[W' = W + 1 | pi]`.
    pub var_s_conditional_on_pi: Rational,
    /// `Var P[W' = W + 1 | W]`.
    pub var_s_conditional_on_w: Rational,
    /// The constant `lambda` in `E[W' - mu | W] = (1 - lambda)(W - mu)`, when
    /// one constant fits every attained `w`.
    pub lambda_check: Option<Rational>,
    /// Joint law of `(W, W')` equals that of `(W', W)`.
    pub exchangeable: bool,
    /// `W' - W` lies in `{-1, 0, 1}` for every `(pi, I)`.
    pub step_range_ok: bool,
    /// For every `pi`, the count of positions giving an up-step equals the
    /// number of indicators set.
    pub up_steps_match_indicators: bool,
    /// `E X_i X_j`, 0-based (`indicator_moments[0][0]` is `E X_1`).
    pub indicator_moments: Vec<Vec<Rational>>,
    /// Joint counts of `(W, W')` over all `n! * n` outcomes.
    pub joint_counts: Vec<Vec<u64>>,
    /// `P[W = w]` numerators over `n!`.
    pub w_counts: Vec<u64>,
}

impl PairMomentReport {
    pub fn lambda_is_two_over_n(&self) -> bool {
        self.lambda_check.as_ref() == Some(&Rational::new(BigInt::from(2), BigInt::from(self.n)))
    }
}

#[derive(Clone)]
struct Tally {
    n: usize,
    w_counts: Vec<u64>,
    x_sum_by_w: Vec<u64>,
    x_sum: u64,
    x_sum_sq: u64,
    pair_x: Vec<Vec<u64>>,
    joint: Vec<Vec<u64>>,
    step_range_ok: bool,
    up_steps_match: bool,
}

impl Tally {
    fn new(n: usize) -> Self {
        let m = n - 1;
        Self {
            n,
            w_counts: vec![0; n],
            x_sum_by_w: vec![0; n],
            x_sum: 0,
            x_sum_sq: 0,
            pair_x: vec![vec![0; m]; m],
            joint: vec![vec![0; n]; n],
            step_range_ok: true,
            up_steps_match: true,
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        let add = |a: &mut Vec<u64>, b: &[u64]| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        add(&mut self.w_counts, &other.w_counts);
        add(&mut self.x_sum_by_w, &other.x_sum_by_w);
        self.x_sum += other.x_sum;
        self.x_sum_sq += other.x_sum_sq;
        for (a, b) in self.pair_x.iter_mut().zip(&other.pair_x) {
            add(a, b);
        }
        for (a, b) in self.joint.iter_mut().zip(&other.joint) {
            add(a, b);
        }
        self.step_range_ok &= other.step_range_ok;
        self.up_steps_match &= other.up_steps_match;
        self
    }

    fn visit(&mut self, perm: &[u32], scratch: &mut Scratch) {
        let n = self.n;
        fill_positions(perm, &mut scratch.pos);
        let w = w_from_positions(&scratch.pos);
        indicators_from_positions(&scratch.pos, &mut scratch.x);
        let ups = scratch.x.iter().filter(|&&x| x).count() as u64;

        self.w_counts[w] += 1;
        self.x_sum_by_w[w] += ups;
        self.x_sum += ups;
        self.x_sum_sq += ups * ups;
        for (i, &xi) in scratch.x.iter().enumerate() {
            if !xi {
                continue;
            }
            for (j, &xj) in scratch.x.iter().enumerate() {
                if xj {
                    self.pair_x[i][j] += 1;
                }
            }
        }

        let mut observed_ups = 0;
        for cut in 0..n {
            scratch.moved.clear();
            scratch
                .moved
                .extend(perm[..cut].iter().chain(&perm[cut + 1..]));
            scratch.moved.push(perm[cut]);
            fill_positions(&scratch.moved, &mut scratch.pos);
            let w_next = w_from_positions(&scratch.pos);
            self.joint[w][w_next] += 1;
            if w_next.abs_diff(w) > 1 {
                self.step_range_ok = false;
            }
            if w_next == w + 1 {
                observed_ups += 1;
            }
        }
        if observed_ups != ups {
            self.up_steps_match = false;
        }
    }
}

#[derive(Default)]
struct Scratch {
    x: Vec<bool>,
    moved: Vec<u32>,
    pos: Vec<usize>,
}

fn rational(num: u64, den: u64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Enumerates all `n!` permutations and `n` moves of each, returning exact
/// moments and the hypothesis checks for the pair.
///
/// Work is split by the first entry of the permutation and merged in a fixed
/// order, so the report does not depend on the thread count.
pub fn pair_oracle(n: usize) -> Result<PairMomentReport> {
    if n < 2 {
        return Err(out_of_range("n", ">= 2", n));
    }
    if n > ORACLE_MAX_N {
        return Err(out_of_range("n", "<= 9 for enumeration", n));
    }

    let tally = (1..=n as u32)
        .into_par_iter()
        .map(|first| {
            let mut tally = Tally::new(n);
            let mut scratch = Scratch::default();
            let mut rest: Vec<u32> = (1..=n as u32).filter(|&v| v != first).collect();
            let mut perm = vec![first; n];
            for_each_permutation(&mut rest, |tail| {
                perm[1..].copy_from_slice(tail);
                tally.visit(&perm, &mut scratch);
            });
            tally
        })
        .reduce(|| Tally::new(n), Tally::merge);

    let total: u64 = tally.w_counts.iter().sum();
    let n_u = n as u64;

    let indicator_moments: Vec<Vec<Rational>> = tally
        .pair_x
        .iter()
        .map(|row| row.iter().map(|&c| rational(c, total)).collect())
        .collect();

    let t_terms = (n >= 6).then(|| {
        let m = n - 1;
        let e = |i: usize, j: usize| &indicator_moments[i][j];
        let two = Rational::from_integer(BigInt::from(2));
        let t1 = (0..m).map(|i| e(i, i).clone()).sum::<Rational>();
        let t2 = &two * (1..m).map(|j| e(0, j).clone()).sum::<Rational>();
        let t3 = &two * (1..m - 1).map(|i| e(i, i + 1).clone()).sum::<Rational>();
        let t4 = &two * (1..m - 2).map(|i| e(i, i + 2).clone()).sum::<Rational>();
        let t5 = &two
            * (1..m)
                .flat_map(|i| (i + 3..m).map(move |j| (i, j)))
                .map(|(i, j)| e(i, j).clone())
                .sum::<Rational>();
        TTerms { t1, t2, t3, t4, t5 }
    });

    let mean_s = rational(tally.x_sum, n_u * total);
    let second_pi = rational(tally.x_sum_sq, n_u * n_u * total);
    let var_s_conditional_on_pi = &second_pi - &mean_s * &mean_s;

    let second_w: Rational = tally
        .w_counts
        .iter()
        .zip(&tally.x_sum_by_w)
        .filter(|(c, _)| **c > 0)
        .map(|(&c, &sx)| {
            let s_w = rational(sx, n_u * c);
            &s_w * &s_w * rational(c, total)
        })
        .sum();
    let var_s_conditional_on_w = second_w - &mean_s * &mean_s;

    let lambda_check = linearity_constant(n, &tally.joint, &tally.w_counts);

    let exchangeable = (0..n).all(|a| (0..n).all(|b| tally.joint[a][b] == tally.joint[b][a]));

    Ok(PairMomentReport {
        n,
        t_terms,
        mean_s,
        var_s_conditional_on_pi,
        var_s_conditional_on_w,
        lambda_check,
        exchangeable,
        step_range_ok: tally.step_range_ok,
        up_steps_match_indicators: tally.up_steps_match,
        indicator_moments,
        joint_counts: tally.joint,
        w_counts: tally.w_counts,
    })
}

/// Finds `lambda` with `E[W' | W = w] - mu = (1 - lambda)(w - mu)` for every
/// attained `w`, or `None` if no single constant fits.
fn linearity_constant(n: usize, joint: &[Vec<u64>], w_counts: &[u64]) -> Option<Rational> {
    let mu = Rational::new(BigInt::from(n as i64 - 1), BigInt::from(2));
    let mut lambda: Option<Rational> = None;
    let mut free_rows = Vec::new();
    for (w, row) in joint.iter().enumerate() {
        if w_counts[w] == 0 {
            continue;
        }
        let outcomes: u64 = row.iter().sum();
        let weighted: u64 = row.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();
        let cond_mean = rational(weighted, outcomes);
        let wr = Rational::from_integer(BigInt::from(w));
        let dev = &wr - &mu;
        let next_dev = cond_mean - &mu;
        if dev.is_zero() {
            free_rows.push(next_dev);
            continue;
        }
        let candidate = Rational::one() - next_dev / dev;
        match &lambda {
            None => lambda = Some(candidate),
            Some(l) if *l == candidate => {}
            Some(_) => return None,
        }
    }
    // At w = mu the relation only says the conditional deviation is zero.
    if free_rows.iter().any(|d| !d.is_zero()) {
        return None;
    }
    lambda
}

/// One draw of `(W, W', S)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainSample {
    pub w: u32,
    pub w_next: u32,
    /// `X_1 + ... + X_{n-1}`; `S = up_moves / n`.
    pub up_moves: u32,
}

/// Draws `steps` independent uniform permutations (Fisher-Yates), moves a
/// uniform position of each to the end and records `(W, W', S)`.
///
/// Draws are grouped in blocks of [`SAMPLES_PER_STREAM`]; block `b` uses
/// ChaCha8 seeded with `seed` on stream `b`, so the output is the same for
/// any thread count.
pub fn sample_chain(n: usize, steps: usize, seed: u64) -> Result<Vec<ChainSample>> {
    if n < 2 {
        return Err(out_of_range("n", ">= 2", n));
    }
    if steps < 1 {
        return Err(out_of_range("steps", ">= 1", steps));
    }
    let blocks = steps.div_ceil(SAMPLES_PER_STREAM);
    let samples = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|block| {
            let start = block * SAMPLES_PER_STREAM;
            let len = SAMPLES_PER_STREAM.min(steps - start);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(block as u64);
            let mut perm: Vec<u32> = (1..=n as u32).collect();
            let mut scratch = Scratch::default();
            (0..len)
                .map(|_| {
                    perm.shuffle(&mut rng);
                    let cut = rng.gen_range(0..n);
                    fill_positions(&perm, &mut scratch.pos);
                    let w = w_from_positions(&scratch.pos);
                    indicators_from_positions(&scratch.pos, &mut scratch.x);
                    let up_moves = scratch.x.iter().filter(|&&b| b).count() as u32;
                    let moved = &mut scratch.moved;
                    moved.clear();
                    moved.extend(perm[..cut].iter().chain(&perm[cut + 1..]));
                    moved.push(perm[cut]);
                    fill_positions(moved, &mut scratch.pos);
                    let w_next = w_from_positions(&scratch.pos);
                    ChainSample {
                        w: w as u32,
                        w_next: w_next as u32,
                        up_moves,
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(samples)
}

/// Sample mean and variance of `S` with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleMoments {
    pub count: usize,
    pub mean: f64,
    pub mean_std_error: f64,
    pub variance: f64,
    pub variance_std_error: f64,
}

impl SampleMoments {
    /// Moments of `S = up_moves / n`. The variance error uses the
    /// large-sample form `sqrt((m4 - var^2) / N)`.
    pub fn of_s(samples: &[ChainSample], n: usize) -> Self {
        let count = samples.len();
        let nf = n as f64;
        let cf = count as f64;
        let values = || samples.iter().map(|s| s.up_moves as f64 / nf);
        let mean = values().sum::<f64>() / cf;
        let (m2, m4) = values().fold((0.0, 0.0), |(m2, m4), v| {
            let d = v - mean;
            let d2 = d * d;
            (m2 + d2, m4 + d2 * d2)
        });
        let variance = m2 / (cf - 1.0).max(1.0);
        let m4 = m4 / cf;
        let pop_var = m2 / cf;
        Self {
            count,
            mean,
            mean_std_error: (variance / cf).sqrt(),
            variance,
            variance_std_error: ((m4 - pop_var * pop_var).max(0.0) / cf).sqrt(),
        }
    }
}

/// Histogram of `W' - W` over a sample, keyed by the step.
pub fn step_histogram(samples: &[ChainSample]) -> BTreeMap<i64, usize> {
    let mut hist = BTreeMap::new();
    for s in samples {
        *hist.entry(s.w_next as i64 - s.w as i64).or_insert(0) += 1;
    }
    hist
}

/// Uniform permutation of `1..=n` drawn with Fisher-Yates.
pub fn random_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Permutation {
    let mut mapping: Vec<u32> = (1..=n as u32).collect();
    mapping.shuffle(rng);
    Permutation { mapping }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_permutation() -> Permutation {
        Permutation::new(vec![6, 4, 1, 5, 3, 2, 7]).unwrap()
    }

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(BigInt::from(p), BigInt::from(q))
    }

    #[test]
    fn permutation_validation() {
        assert!(Permutation::new(vec![]).is_err());
        assert!(Permutation::new(vec![1, 1]).is_err());
        assert!(Permutation::new(vec![0, 1]).is_err());
        assert!(Permutation::new(vec![1, 3]).is_err());
        assert!(Permutation::new(vec![2, 1, 3]).is_ok());
    }

    #[test]
    fn inverse_descents() {
        assert_eq!(descents_of_inverse(&Permutation::identity(8)), 0);
        assert_eq!(descents_of_inverse(&Permutation::reversal(8)), 7);
        assert_eq!(descents_of_inverse(&sample_permutation()), 3);
        assert_eq!(descents_of_inverse(&Permutation::identity(1)), 0);
    }

    #[test]
    fn move_to_end() {
        let moved = move_random_to_end(&sample_permutation(), 3).unwrap();
        assert_eq!(moved.as_slice(), &[6, 4, 5, 3, 2, 7, 1]);
        assert_eq!(
            move_random_to_end(&sample_permutation(), 7).unwrap(),
            sample_permutation()
        );
        assert_eq!(
            move_random_to_end(&Permutation::identity(5), 1)
                .unwrap()
                .as_slice(),
            &[2, 3, 4, 5, 1]
        );
        assert!(move_random_to_end(&sample_permutation(), 0).is_err());
        assert!(move_random_to_end(&sample_permutation(), 8).is_err());
    }

    #[test]
    fn indicators() {
        assert!(x_indicators(&Permutation::identity(6))
            .unwrap()
            .iter()
            .all(|&x| x));
        assert!(x_indicators(&Permutation::reversal(6))
            .unwrap()
            .iter()
            .all(|&x| !x));
        assert_eq!(
            x_indicators(&sample_permutation()).unwrap(),
            vec![true, false, false, false, false, false]
        );
        assert!(x_indicators(&Permutation::identity(1)).is_err());
    }

    #[test]
    fn up_step_probability() {
        assert_eq!(s_given_pi(&Permutation::identity(7)).unwrap(), r(6, 7));
        assert_eq!(s_given_pi(&Permutation::reversal(7)).unwrap(), r(0, 1));
        assert_eq!(s_given_pi(&sample_permutation()).unwrap(), r(1, 7));
    }

    #[test]
    fn oracle_small_n() {
        let report = pair_oracle(3).unwrap();
        assert!(report.exchangeable);
        assert!(report.step_range_ok);
        assert!(report.up_steps_match_indicators);
        assert_eq!(report.lambda_check, Some(r(2, 3)));
        assert!(report.lambda_is_two_over_n());
        assert!(report.t_terms.is_none());
        assert_eq!(report.w_counts.iter().sum::<u64>(), 6);
        assert_eq!(report.joint_counts.iter().flatten().sum::<u64>(), 18);
        assert!(pair_oracle(1).is_err());
        assert!(pair_oracle(10).is_err());
    }

    #[test]
    fn oracle_n6_values() {
        let report = pair_oracle(6).unwrap();
        assert_eq!(report.mean_s, r(7, 36));
        assert_eq!(report.var_s_conditional_on_pi, r(161, 6480));
    }

    #[test]
    fn chain_sampling_is_reproducible() {
        let a = sample_chain(7, 1000, 42).unwrap();
        let b = sample_chain(7, 1000, 42).unwrap();
        let c = sample_chain(7, 1000, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 1000);
        assert!(sample_chain(7, 0, 1).is_err());
        assert!(sample_chain(1, 10, 1).is_err());
    }

    #[test]
    fn chain_sampling_crosses_stream_boundary() {
        let samples = sample_chain(5, SAMPLES_PER_STREAM + 10, 9).unwrap();
        assert_eq!(samples.len(), SAMPLES_PER_STREAM + 10);
        let hist = step_histogram(&samples);
        assert!(hist.keys().all(|d| (-1..=1).contains(d)));
    }

    #[test]
    fn n2_mean_s() {
        let samples = sample_chain(2, 200_000, 5).unwrap();
        let m = SampleMoments::of_s(&samples, 2);
        assert!((m.mean - 0.25).abs() <= 3.0 * m.mean_std_error);
    }
}
