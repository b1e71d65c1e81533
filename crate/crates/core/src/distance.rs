//! Total variation distance between laws on the integers.

use crate::bounds;
use crate::error::{out_of_range, Error, Result};
use crate::eulerian::EulerianTable;
use crate::poisson_tp::{descent_tp_params, RealDistributionOnIntegers};

/// Slack allowed on the total mass of an input beyond its certified tail.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Tail budget of the translated Poisson window in [`tv_descents_vs_tp`].
pub const TP_WINDOW_TAIL: f64 = 1e-14;

/// A total variation distance and the additive uncertainty from truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvResult {
    pub value: f64,
    pub truncation_error: f64,
}

fn check_normalized(d: &RealDistributionOnIntegers) -> Result<()> {
    let mass = d.total_mass();
    let tail = d.tail_mass_bound();
    if mass > 1.0 + MASS_TOLERANCE || mass + tail < 1.0 - MASS_TOLERANCE {
        return Err(Error::Unnormalized { mass, tail });
    }
    Ok(())
}

fn union_support<'a>(
    p: &'a RealDistributionOnIntegers,
    q: &'a RealDistributionOnIntegers,
) -> impl Iterator<Item = (f64, f64)> + 'a {
    let lo = p.support_offset().min(q.support_offset());
    let hi = p.support_end().max(q.support_end());
    (lo..hi).map(move |x| (p.probability(x), q.probability(x)))
}

fn certify(value: f64, p: &RealDistributionOnIntegers, q: &RealDistributionOnIntegers) -> TvResult {
    TvResult {
        value: value.clamp(0.0, 1.0),
        truncation_error: 0.5 * (p.tail_mass_bound() + q.tail_mass_bound()),
    }
}

/// `(1/2) sum_x |p(x) - q(x)|` over the union of the stored windows.
pub fn tv_distance(
    p: &RealDistributionOnIntegers,
    q: &RealDistributionOnIntegers,
) -> Result<TvResult> {
    check_normalized(p)?;
    check_normalized(q)?;
    let half_l1 = 0.5 * union_support(p, q).map(|(a, b)| (a - b).abs()).sum::<f64>();
    Ok(certify(half_l1, p, q))
}

/// `max_A |P(A) - Q(A)|`, attained at `A = {x : p(x) > q(x)}`.
pub fn tv_distance_event_form(
    p: &RealDistributionOnIntegers,
    q: &RealDistributionOnIntegers,
) -> Result<TvResult> {
    check_normalized(p)?;
    check_normalized(q)?;
    let excess = union_support(p, q)
        .filter(|(a, b)| a > b)
        .map(|(a, b)| a - b)
        .sum::<f64>();
    Ok(certify(excess, p, q))
}

/// Distance between the descent law of `n` symbols and
/// `TP((n-1)/2, (n+1)/12)`.
pub fn tv_descents_vs_tp(n: usize) -> Result<TvResult> {
    if n < 2 {
        return Err(out_of_range("n", ">= 2", n));
    }
    let table = EulerianTable::new(n)?;
    tv_descents_vs_tp_with_table(&table, n)
}

/// Same as [`tv_descents_vs_tp`] using rows of an existing table.
pub fn tv_descents_vs_tp_with_table(table: &EulerianTable, n: usize) -> Result<TvResult> {
    if n < 2 {
        return Err(out_of_range("n", ">= 2", n));
    }
    let (descents, tp) = descent_and_tp_windows(table, n)?;
    tv_distance(&descents, &tp)
}

/// The two windows compared by [`tv_descents_vs_tp`].
pub fn descent_and_tp_windows(
    table: &EulerianTable,
    n: usize,
) -> Result<(RealDistributionOnIntegers, RealDistributionOnIntegers)> {
    let descents = table.descent_distribution(n)?.to_real();
    let params = descent_tp_params(n)?;
    let tp = RealDistributionOnIntegers::translated_poisson_window(&params, TP_WINDOW_TAIL)?;
    Ok((descents, tp))
}

/// Margin `descent_tp_bound(n) - tv_descents_vs_tp(n)`.
pub fn descent_tv_margin(table: &EulerianTable, n: usize) -> Result<f64> {
    let tv = tv_descents_vs_tp_with_table(table, n)?;
    Ok(bounds::descent_tp_bound(n)? - tv.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn law(offset: i64, w: &[f64]) -> RealDistributionOnIntegers {
        RealDistributionOnIntegers::new(offset, w.to_vec(), 0.0).unwrap()
    }

    #[test]
    fn basic_cases() {
        let p = law(0, &[0.5, 0.5]);
        assert_eq!(tv_distance(&p, &p).unwrap().value, 0.0);
        let a = RealDistributionOnIntegers::point_mass(0);
        let b = RealDistributionOnIntegers::point_mass(1);
        assert_eq!(tv_distance(&a, &b).unwrap().value, 1.0);
        let q = law(0, &[0.75, 0.25]);
        assert_eq!(tv_distance(&p, &q).unwrap().value, 0.25);
        assert_eq!(tv_distance_event_form(&p, &q).unwrap().value, 0.25);
    }

    #[test]
    fn disjoint_offsets() {
        let p = law(-3, &[0.2, 0.8]);
        let q = law(5, &[1.0]);
        assert!((tv_distance(&p, &q).unwrap().value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_unnormalized() {
        let p = law(0, &[1.0]);
        let window = RealDistributionOnIntegers::new(0, vec![0.9], 0.1).unwrap();
        assert!(tv_distance(&p, &window).is_ok());
        assert!(tv_descents_vs_tp(1).is_err());
    }

    #[test]
    fn n11_two_routes_agree() {
        let table = EulerianTable::new(11).unwrap();
        let (d, tp) = descent_and_tp_windows(&table, 11).unwrap();
        assert_eq!(tp.support_offset(), 4);
        let half_l1 = tv_distance(&d, &tp).unwrap();
        let event = tv_distance_event_form(&d, &tp).unwrap();
        assert!((half_l1.value - event.value).abs() < 1e-10);
        assert!(half_l1.truncation_error <= 1e-12);
    }

    #[test]
    fn n100_within_bound() {
        let tv = tv_descents_vs_tp(100).unwrap();
        let bound = bounds::descent_tp_bound(100).unwrap();
        assert!((bound - 0.451).abs() < 1e-3);
        assert!(tv.value + tv.truncation_error <= bound);
    }

    #[test]
    fn small_n_in_range() {
        let table = EulerianTable::new(9).unwrap();
        for n in 2..=9 {
            let tv = tv_descents_vs_tp_with_table(&table, n).unwrap();
            assert!((0.0..=1.0).contains(&tv.value));
        }
    }
}
