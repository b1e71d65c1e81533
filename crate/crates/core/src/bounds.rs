//! Closed-form right-hand sides of the approximation bounds.
//!
//! Inputs are exact; the results are `f64` because every bound involves a
//! square root or an exponential.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive};

use crate::error::{out_of_range, Result};
use crate::Rational;

/// Smallest `n` for which the descent bounds are stated.
pub const MIN_N: usize = 6;

/// Inputs of the exchangeable-pair translated Poisson bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundInputs {
    lambda_stein: Rational,
    sigma2: Rational,
    var_s: Rational,
}

impl BoundInputs {
    pub fn new(lambda_stein: Rational, sigma2: Rational, var_s: Rational) -> Result<Self> {
        if !lambda_stein.is_positive() || lambda_stein >= Rational::one() {
            return Err(out_of_range("lambda", "in (0, 1)", lambda_stein));
        }
        if !sigma2.is_positive() {
            return Err(out_of_range("sigma2", "> 0", sigma2));
        }
        if var_s.is_negative() {
            return Err(out_of_range("var_s", ">= 0", var_s));
        }
        Ok(Self {
            lambda_stein,
            sigma2,
            var_s,
        })
    }

    /// `lambda = 2/n`, `sigma2 = (n+1)/12`, `var_s = 23(n+1)/(180 n^2)`.
    pub fn for_descents(n: usize) -> Result<Self> {
        let var_s = var_s_formula(n)?;
        let nb = BigInt::from(n);
        Self::new(
            Rational::new(BigInt::from(2), nb.clone()),
            Rational::new(nb + 1, BigInt::from(12)),
            var_s,
        )
    }

    pub fn lambda_stein(&self) -> &Rational {
        &self.lambda_stein
    }

    pub fn sigma2(&self) -> &Rational {
        &self.sigma2
    }

    pub fn var_s(&self) -> &Rational {
        &self.var_s
    }
}

fn to_f64(x: &Rational) -> f64 {
    x.to_f64().expect("finite rational")
}

fn check_n(n: usize) -> Result<()> {
    if n < MIN_N {
        return Err(out_of_range("n", ">= 6", n));
    }
    Ok(())
}

/// `sqrt(Var S) / (lambda sigma2) + 2 / sigma2`.
pub fn generic_tp_bound(inputs: &BoundInputs) -> f64 {
    let scale = &inputs.lambda_stein * &inputs.sigma2;
    to_f64(&inputs.var_s).sqrt() / to_f64(&scale) + 2.0 / to_f64(&inputs.sigma2)
}

/// `sqrt(23/5) / sqrt(n+1) + 24/(n+1)`.
pub fn descent_tp_bound(n: usize) -> Result<f64> {
    check_n(n)?;
    let m = (n + 1) as f64;
    Ok((23.0f64 / 5.0).sqrt() / m.sqrt() + 24.0 / m)
}

/// `((b-1)/b) exp(-((n+1)/12)(1 - cos(2 pi / b)))`, the residue term.
pub fn residue_term(n: usize, b: usize) -> Result<f64> {
    check_n(n)?;
    if b < 2 {
        return Err(out_of_range("b", ">= 2", b));
    }
    let bf = b as f64;
    let s = (PI / bf).sin();
    let one_minus_cos = 2.0 * s * s;
    Ok((bf - 1.0) / bf * (-((n + 1) as f64) / 12.0 * one_minus_cos).exp())
}

/// Bound on `|P[W = k mod b] - 1/b|`: [`descent_tp_bound`] plus
/// [`residue_term`].
pub fn main_bound(n: usize, b: usize) -> Result<f64> {
    Ok(descent_tp_bound(n)? + residue_term(n, b)?)
}

/// `23(n+1) / (180 n^2)`.
pub fn var_s_formula(n: usize) -> Result<Rational> {
    check_n(n)?;
    let nb = BigInt::from(n);
    Ok(Rational::new(
        BigInt::from(23) * (&nb + 1),
        BigInt::from(180) * &nb * &nb,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(BigInt::from(p), BigInt::from(q))
    }

    #[test]
    fn generic_examples() {
        let zero_var = BoundInputs::new(r(1, 3), r(5, 2), r(0, 1)).unwrap();
        assert_eq!(generic_tp_bound(&zero_var), 2.0 / 2.5);
        let simple = BoundInputs::new(r(1, 2), r(2, 1), r(1, 1)).unwrap();
        assert_eq!(generic_tp_bound(&simple), 2.0);
    }

    #[test]
    fn input_validation() {
        assert!(BoundInputs::new(r(0, 1), r(1, 1), r(0, 1)).is_err());
        assert!(BoundInputs::new(r(1, 1), r(1, 1), r(0, 1)).is_err());
        assert!(BoundInputs::new(r(1, 2), r(0, 1), r(0, 1)).is_err());
        assert!(BoundInputs::new(r(1, 2), r(1, 1), r(-1, 5)).is_err());
        assert!(BoundInputs::for_descents(5).is_err());
    }

    #[test]
    fn descent_bound_values() {
        let b11 = descent_tp_bound(11).unwrap();
        assert!((b11 - ((23.0f64 / 5.0).sqrt() / 12f64.sqrt() + 2.0)).abs() < 1e-15);
        assert!((b11 - 2.6192).abs() < 1e-4);
        let b6 = descent_tp_bound(6).unwrap();
        assert!((b6 - ((23.0f64 / 5.0).sqrt() / 7f64.sqrt() + 24.0 / 7.0)).abs() < 1e-15);
        assert!(descent_tp_bound(5).is_err());
    }

    #[test]
    fn main_bound_values() {
        let v = main_bound(119, 2).unwrap();
        let expected = (23.0f64 / 5.0).sqrt() / 120f64.sqrt() + 0.2 + 0.5 * (-20.0f64).exp();
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 0.3958).abs() < 1e-4);
        for n in [6, 20, 75] {
            let third = residue_term(n, 2).unwrap();
            assert!((third - 0.5 * (-((n + 1) as f64) / 6.0).exp()).abs() < 1e-15);
        }
        let n = 30;
        let large_b = main_bound(n, 1_000_000).unwrap();
        assert!(large_b.is_finite());
        assert!(large_b >= descent_tp_bound(n).unwrap());
        assert!(large_b < descent_tp_bound(n).unwrap() + 1.0);
        assert!(main_bound(6, 1).is_err());
        assert!(main_bound(5, 2).is_err());
    }

    #[test]
    fn var_s_values() {
        assert_eq!(var_s_formula(6).unwrap(), r(161, 6480));
        assert_eq!(var_s_formula(7).unwrap(), r(46, 2205));
        assert_eq!(var_s_formula(9).unwrap(), r(23, 1458));
        assert!(var_s_formula(5).is_err());
    }

    #[test]
    fn reduction_matches_closed_form() {
        for n in 6..=1000 {
            let generic = generic_tp_bound(&BoundInputs::for_descents(n).unwrap());
            let closed = descent_tp_bound(n).unwrap();
            assert!(((generic - closed) / closed).abs() < 1e-12, "n = {n}");
        }
    }
}
