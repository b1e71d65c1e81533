//! One function per subcommand; each returns a report and never exits.

use std::str::FromStr;

use eulermod::bounds::{descent_tp_bound, main_bound, var_s_formula};
use eulermod::distance::tv_descents_vs_tp_with_table;
use eulermod::eulerian::EulerianTable;
use eulermod::poisson_tp::{poisson_mod_bounds, poisson_mod_probability, ResidueMethod};
use eulermod::stein_pair::{
    pair_oracle, sample_chain, step_histogram, SampleMoments, ORACLE_MAX_N,
};
use eulermod::Rational;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;

use crate::report::{BoundReport, BoundRow, Cell, Metadata, Report};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError::Usage(msg.into()))
}

fn ratio(p: i64, q: i64) -> Rational {
    BigRational::new(p.into(), q.into())
}

fn decimal(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// A modulus in a `--b` list: a number, or `n` for "the current n".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modulus {
    Fixed(usize),
    SameAsN,
}

impl Modulus {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            Modulus::Fixed(b) => b,
            Modulus::SameAsN => n,
        }
    }
}

impl FromStr for Modulus {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if s == "n" {
            return Ok(Modulus::SameAsN);
        }
        match s.parse::<usize>() {
            Ok(b) if b >= 2 => Ok(Modulus::Fixed(b)),
            _ => Err(format!("modulus must be an integer >= 2 or `n`, got `{s}`")),
        }
    }
}

/// Rows `n, k, A(n, k)` for `1 <= n <= n_max`.
pub fn triangle(n_max: usize, metadata: Metadata) -> Result<Report> {
    let table = EulerianTable::new(n_max)?;
    let mut report = Report::new(metadata, vec!["n", "k", "eulerian"]);
    for n in 1..=n_max {
        for (k, value) in table.row(n).unwrap_or_default().iter().enumerate() {
            report.rows.push(vec![
                Cell::from(n),
                Cell::from(k),
                Cell::Text(value.to_string()),
            ]);
        }
    }
    Ok(report)
}

/// Residue probabilities of the descent count of `n` symbols.
pub fn modular(n: usize, b: usize, k: Option<usize>, metadata: Metadata) -> Result<Report> {
    let table = EulerianTable::new(n)?;
    let residues: Vec<usize> = match k {
        Some(k) => vec![k],
        None => (0..b).collect(),
    };
    let mut report = Report::new(
        metadata,
        vec!["n", "b", "k", "probability", "probability_decimal"],
    );
    for k in residues {
        let p = table.modular_probability(n, b, k)?;
        report.rows.push(vec![
            Cell::from(n),
            Cell::from(b),
            Cell::from(k),
            Cell::Text(p.to_string()),
            Cell::Float(decimal(&p)),
        ]);
    }
    Ok(report)
}

/// `P[Po(lambda) = k mod b]` with its deviation and the two bounds.
pub fn poisson_mod(
    lambda: f64,
    b: u64,
    k: u64,
    method: ResidueMethod,
    metadata: Metadata,
) -> Result<Report> {
    let p = poisson_mod_probability(lambda, b, k, method)?;
    let bounds = poisson_mod_bounds(lambda, b)?;
    let deviation = (p - 1.0 / b as f64).abs();
    let mut report = Report::new(
        metadata,
        vec![
            "lambda",
            "b",
            "k",
            "method",
            "probability",
            "deviation",
            "tight_bound",
            "loose_bound",
        ],
    );
    report.rows.push(vec![
        Cell::Float(lambda),
        Cell::Int(b as i64),
        Cell::Int(k as i64),
        Cell::Text(method.to_string()),
        Cell::Float(p),
        Cell::Float(deviation),
        Cell::Float(bounds.tight),
        Cell::Float(bounds.loose),
    ]);
    Ok(report)
}

/// `|P[W = k mod b] - 1/b|` against [`main_bound`] for every `(n, b, k)`.
pub fn verify_main(
    n_min: usize,
    n_max: usize,
    moduli: &[Modulus],
    metadata: Metadata,
) -> Result<BoundReport> {
    if n_min < 6 {
        return usage(format!("--n-min must be >= 6, got {n_min}"));
    }
    if n_max < n_min {
        return usage(format!("--n-max ({n_max}) must be >= --n-min ({n_min})"));
    }
    if moduli.is_empty() {
        return usage("--b needs at least one modulus");
    }
    let table = EulerianTable::new(n_max)?;
    let per_n: Vec<Result<Vec<BoundRow>>> = (n_min..=n_max)
        .into_par_iter()
        .map(|n| {
            let mut seen = Vec::new();
            let mut rows = Vec::new();
            for m in moduli {
                let b = m.resolve(n);
                if seen.contains(&b) {
                    continue;
                }
                seen.push(b);
                let rhs = main_bound(n, b)?;
                let inv_b = ratio(1, b as i64);
                for (k, p) in table.residue_probabilities(n, b)?.into_iter().enumerate() {
                    let dev = (p - &inv_b).abs();
                    rows.push(BoundRow {
                        parameters: vec![Cell::from(n), Cell::from(b), Cell::from(k)],
                        lhs: decimal(&dev),
                        lhs_exact: Some(dev.to_string()),
                        rhs,
                    });
                }
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::new();
    for chunk in per_n {
        rows.extend(chunk?);
    }
    Ok(BoundReport {
        metadata,
        parameter_names: vec!["n", "b", "k"],
        rows,
    })
}

/// Total variation between the descent law and its translated Poisson
/// approximation against [`descent_tp_bound`].
pub fn verify_tp(ns: &[usize], metadata: Metadata) -> Result<BoundReport> {
    if ns.is_empty() {
        return usage("--n needs at least one value");
    }
    if let Some(bad) = ns.iter().find(|&&n| n < 6) {
        return usage(format!("every n must be >= 6, got {bad}"));
    }
    let n_max = *ns.iter().max().expect("non-empty");
    let table = EulerianTable::new(n_max)?;
    let rows: Vec<Result<BoundRow>> = ns
        .par_iter()
        .map(|&n| {
            let tv = tv_descents_vs_tp_with_table(&table, n)?;
            Ok(BoundRow {
                parameters: vec![Cell::from(n)],
                lhs: tv.value,
                lhs_exact: None,
                rhs: descent_tp_bound(n)?,
            })
        })
        .collect();
    Ok(BoundReport {
        metadata,
        parameter_names: vec!["n"],
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}

fn exact_row(name: &str, got: &Rational, expected: &Rational) -> (Vec<Cell>, bool) {
    let ok = got == expected;
    (
        vec![
            Cell::from(name),
            Cell::Text(got.to_string()),
            Cell::Float(decimal(got)),
            Cell::Text(expected.to_string()),
            Cell::from(if ok { "MATCH" } else { "MISMATCH" }),
        ],
        ok,
    )
}

fn flag_row(name: &str, value: bool) -> (Vec<Cell>, bool) {
    (
        vec![
            Cell::from(name),
            Cell::Text(value.to_string()),
            Cell::Empty,
            Cell::from("true"),
            Cell::from(if value { "PASS" } else { "FAIL" }),
        ],
        value,
    )
}

/// Exhaustive moments of the exchangeable pair, compared with their closed
/// forms.
pub fn oracle(n: usize, metadata: Metadata) -> Result<Report> {
    if !(2..=ORACLE_MAX_N).contains(&n) {
        return usage(format!("--n must be in 2..={ORACLE_MAX_N}, got {n}"));
    }
    let pair = pair_oracle(n)?;
    let ni = n as i64;
    let mut report = Report::new(
        metadata,
        vec![
            "quantity",
            "enumerated",
            "enumerated_decimal",
            "expected",
            "status",
        ],
    );
    let mut push = |(row, ok): (Vec<Cell>, bool)| {
        report.passed &= ok;
        report.rows.push(row);
    };

    push(exact_row("mean_s", &pair.mean_s, &ratio(ni + 1, 6 * ni)));

    let t_expected = [
        ("t1", ratio(ni + 1, 6)),
        ("t2", ratio(2, 6) + ratio(2, 24) + ratio(2 * (ni - 4), 12)),
        ("t3", ratio(2 * (ni - 3), 24)),
        ("t4", ratio(2 * (ni - 4), 120)),
        ("t5", ratio((ni - 4) * (ni - 5), 36)),
    ];
    match &pair.t_terms {
        Some(t) => {
            let got = [&t.t1, &t.t2, &t.t3, &t.t4, &t.t5];
            for ((name, expected), value) in t_expected.iter().zip(got) {
                push(exact_row(name, value, expected));
            }
        }
        None => {
            for (name, _) in &t_expected {
                push((
                    vec![
                        Cell::from(*name),
                        Cell::Empty,
                        Cell::Empty,
                        Cell::Empty,
                        Cell::from("ABSENT"),
                    ],
                    true,
                ));
            }
        }
    }

    let var_pi = &pair.var_s_conditional_on_pi;
    if n >= 6 {
        push(exact_row("var_s_given_pi", var_pi, &var_s_formula(n)?));
    } else {
        let formula = ratio(23 * (ni + 1), 180 * ni * ni);
        push((
            vec![
                Cell::from("var_s_given_pi"),
                Cell::Text(var_pi.to_string()),
                Cell::Float(decimal(var_pi)),
                Cell::Text(formula.to_string()),
                Cell::from("INFO"),
            ],
            true,
        ));
    }

    let var_w = &pair.var_s_conditional_on_w;
    let decomposition_ok = var_w <= var_pi;
    push((
        vec![
            Cell::from("var_s_given_w"),
            Cell::Text(var_w.to_string()),
            Cell::Float(decimal(var_w)),
            Cell::Text(format!("<= {var_pi}")),
            Cell::from(if decomposition_ok { "PASS" } else { "FAIL" }),
        ],
        decomposition_ok,
    ));

    let two_over_n = ratio(2, ni);
    match &pair.lambda_check {
        Some(lambda) => push(exact_row("lambda", lambda, &two_over_n)),
        None => push((
            vec![
                Cell::from("lambda"),
                Cell::from("none"),
                Cell::Empty,
                Cell::Text(two_over_n.to_string()),
                Cell::from("MISMATCH"),
            ],
            false,
        )),
    }
    push(flag_row("exchangeable", pair.exchangeable));
    push(flag_row("step_range", pair.step_range_ok));
    push(flag_row(
        "up_steps_match_indicators",
        pair.up_steps_match_indicators,
    ));
    Ok(report)
}

/// Monte Carlo estimates of `E S` and `Var S` from the seeded chain.
pub fn simulate(n: usize, steps: usize, seed: u64, mut metadata: Metadata) -> Result<Report> {
    if steps < 2 {
        return usage(format!("--steps must be >= 2, got {steps}"));
    }
    let samples = sample_chain(n, steps, seed)?;
    let moments = SampleMoments::of_s(&samples, n);
    let ni = n as i64;
    let expected_mean = decimal(&ratio(ni + 1, 6 * ni));
    let expected_var = if n >= 6 {
        decimal(&var_s_formula(n)?)
    } else {
        decimal(&pair_oracle(n)?.var_s_conditional_on_pi)
    };
    metadata.seed = Some(seed);

    let mut report = Report::new(
        metadata,
        vec![
            "statistic",
            "estimate",
            "std_error",
            "expected",
            "z",
            "pass",
        ],
    );
    let mut z_row = |name: &str, estimate: f64, se: f64, expected: f64| {
        let z = if se > 0.0 {
            (estimate - expected) / se
        } else {
            0.0
        };
        let pass = z.abs() <= 3.0;
        report.passed &= pass;
        report.rows.push(vec![
            Cell::from(name),
            Cell::Float(estimate),
            Cell::Float(se),
            Cell::Float(expected),
            Cell::Float(z),
            Cell::Bool(pass),
        ]);
    };
    z_row(
        "mean_s",
        moments.mean,
        moments.mean_std_error,
        expected_mean,
    );
    z_row(
        "var_s",
        moments.variance,
        moments.variance_std_error,
        expected_var,
    );

    let max_step = step_histogram(&samples)
        .keys()
        .map(|d| d.unsigned_abs())
        .max()
        .unwrap_or(0);
    let step_ok = max_step <= 1;
    report.passed &= step_ok;
    report.rows.push(vec![
        Cell::from("max_abs_step"),
        Cell::Float(max_step as f64),
        Cell::Empty,
        Cell::Float(1.0),
        Cell::Empty,
        Cell::Bool(step_ok),
    ]);
    Ok(report)
}
