//! Coefficient-exact checks of partition identities.
//!
//! Each case pairs a counting side, computed by the run-length dynamic
//! program, with one or more series recipes built from exact products and
//! q-series. Recipes are plain data, so a new identity is a new table entry.

use std::fmt::Write as _;

use rayon::prelude::*;
use rug::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{count_constrained, Constraint, Multiplicity};
use crate::series::{product_form, ProductFactor, TruncatedSeries};

pub const DEFAULT_CAP: usize = 500;

pub const IDENTITY_NAMES: [&str; 5] = [
    "rogers_ramanujan",
    "andrews_67",
    "macmahon",
    "andrews_lewis",
    "chi_mock_theta",
];

/// A series built from exact ingredients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Recipe {
    /// `∏ factors`.
    Product { factors: Vec<ProductFactor> },
    /// `Σ_{n≥0} q^{a n² + b n} / ((1-q)⋯(1-qⁿ))`.
    EulerSum { square: usize, linear: usize },
    /// `∏ factors · χ(q)`.
    ProductTimesChi { factors: Vec<ProductFactor> },
}

impl Recipe {
    pub fn expand(&self, n_max: usize) -> Result<TruncatedSeries> {
        match self {
            Recipe::Product { factors } => product_form(factors, n_max),
            Recipe::EulerSum { square, linear } => Ok(euler_sum(*square, *linear, n_max)),
            Recipe::ProductTimesChi { factors } => product_form(factors, n_max)?.mul(&chi_series(n_max)),
        }
    }
}

fn euler_sum(square: usize, linear: usize, n_max: usize) -> TruncatedSeries {
    // 1/((1-q)⋯(1-qⁿ)), grown one factor per term.
    let mut denom = TruncatedSeries::one(n_max);
    let mut coeffs = vec![Integer::new(); n_max + 1];
    for n in 0.. {
        let shift = square * n * n + linear * n;
        if shift > n_max {
            break;
        }
        if n > 0 {
            denom.div_binomial(n, -1);
        }
        for (i, c) in denom.coeffs()[..=n_max - shift].iter().enumerate() {
            coeffs[i + shift] += c;
        }
    }
    TruncatedSeries::new(coeffs).expect("n_max + 1 coefficients")
}

/// `χ(q) = Σ_{n≥0} q^{n²} ∏_{m=1}^{n} (1 + q^m)/(1 + q^{3m})`, exactly.
///
/// Every denominator `1 + q^{3m}` has unit constant term, so the division
/// stays in the integers.
pub fn chi_series(n_max: usize) -> TruncatedSeries {
    let mut coeffs = vec![Integer::new(); n_max + 1];
    let mut partial = TruncatedSeries::one(n_max);
    for n in 0.. {
        let shift = n * n;
        if shift > n_max {
            break;
        }
        if n > 0 {
            partial.mul_binomial(n, 1);
            partial.div_binomial(3 * n, 1);
        }
        for (i, c) in partial.coeffs()[..=n_max - shift].iter().enumerate() {
            coeffs[i + shift] += c;
        }
    }
    TruncatedSeries::new(coeffs).expect("n_max + 1 coefficients")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCase {
    pub name: String,
    pub lhs: Constraint,
    pub rhs: Vec<Recipe>,
    pub n_max: usize,
}

const fn pf(period: usize, residue: i64, exponent: i32) -> ProductFactor {
    ProductFactor::new(period, residue, exponent)
}

fn constraint(k: usize, r: Multiplicity, b: usize) -> Constraint {
    Constraint::new(k, r, b).expect("valid built-in constraint")
}

impl IdentityCase {
    /// The built-in case with this name.
    pub fn named(name: &str, n_max: usize) -> Result<Self> {
        use Multiplicity::{Bounded, Unbounded};
        let (lhs, rhs) = match name {
            "rogers_ramanujan" => (
                constraint(2, Bounded(1), 1),
                vec![
                    Recipe::Product {
                        factors: vec![pf(5, -3, -1), pf(5, -2, -1)],
                    },
                    Recipe::EulerSum { square: 1, linear: 1 },
                ],
            ),
            "andrews_67" => (
                constraint(2, Bounded(2), 1),
                vec![Recipe::Product {
                    factors: vec![pf(6, -2, -1), pf(6, -3, -1), pf(6, -4, -1)],
                }],
            ),
            "macmahon" => (
                constraint(2, Bounded(2), 0),
                vec![Recipe::Product {
                    factors: vec![pf(6, -3, 2), pf(6, 0, 1), pf(1, 0, -1)],
                }],
            ),
            "andrews_lewis" => (
                constraint(2, Unbounded, 1),
                vec![Recipe::Product {
                    factors: vec![pf(6, 0, -1), pf(6, -2, -1), pf(6, -3, -1), pf(6, -4, -1)],
                }],
            ),
            // 1 + q^{3n} = (1 - q^{6n})/(1 - q^{3n}).
            "chi_mock_theta" => (
                constraint(2, Unbounded, 0),
                vec![Recipe::ProductTimesChi {
                    factors: vec![pf(6, 0, 1), pf(3, 0, -1), pf(2, 0, -1)],
                }],
            ),
            other => return Err(Error::UnknownIdentity(other.to_string())),
        };
        Ok(IdentityCase {
            name: name.to_string(),
            lhs,
            rhs,
            n_max,
        })
    }

    pub fn all(n_max: usize) -> Vec<IdentityCase> {
        IDENTITY_NAMES
            .iter()
            .map(|n| IdentityCase::named(n, n_max).expect("built-in name"))
            .collect()
    }

    /// A copy whose first product factor has its residue shifted by one,
    /// for checking that the comparison notices a wrong recipe.
    pub fn mutated(&self) -> Self {
        let mut out = self.clone();
        for recipe in &mut out.rhs {
            if let Recipe::Product { factors } | Recipe::ProductTimesChi { factors } = recipe {
                if let Some(f) = factors.first_mut() {
                    f.residue += 1;
                    break;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub name: String,
    pub n_max: usize,
    pub pass: bool,
    /// Smallest index where some right-hand form differs from the count.
    pub first_discrepancy: Option<usize>,
    pub lhs: Option<Vec<String>>,
    pub rhs: Option<Vec<Vec<String>>>,
    pub wall_seconds: f64,
}

/// Compares the case's counting side with each of its recipes exactly.
pub fn check_identity(case: &IdentityCase, cap: usize) -> Result<IdentityReport> {
    if case.n_max > cap {
        return Err(Error::GuardExceeded {
            what: "identity truncation order",
            size: case.n_max as u128,
            limit: cap as u128,
        });
    }
    let start = std::time::Instant::now();
    let lhs = count_constrained(case.lhs, case.n_max).to_series();
    let forms: Vec<TruncatedSeries> = case
        .rhs
        .iter()
        .map(|r| r.expand(case.n_max))
        .collect::<Result<_>>()?;
    let first = forms.iter().filter_map(|f| lhs.first_difference(f)).min();
    let pass = first.is_none();
    Ok(IdentityReport {
        name: case.name.clone(),
        n_max: case.n_max,
        pass,
        first_discrepancy: first,
        lhs: (!pass).then(|| lhs.to_decimal_strings()),
        rhs: (!pass).then(|| forms.iter().map(TruncatedSeries::to_decimal_strings).collect()),
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn check_all(n_max: usize, cap: usize) -> Result<Vec<IdentityReport>> {
    IdentityCase::all(n_max)
        .par_iter()
        .map(|c| check_identity(c, cap))
        .collect()
}

/// Reports in JUnit XML, one test case per identity.
pub fn junit_xml(reports: &[IdentityReport]) -> String {
    let failures = reports.iter().filter(|r| !r.pass).count();
    let total: f64 = reports.iter().map(|r| r.wall_seconds).sum();
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<testsuite name=\"identities\" tests=\"{}\" failures=\"{failures}\" time=\"{total:.6}\">",
        reports.len()
    );
    for r in reports {
        let _ = write!(
            out,
            "  <testcase classname=\"identities\" name=\"{}\" time=\"{:.6}\"",
            r.name, r.wall_seconds
        );
        match r.first_discrepancy {
            None => out.push_str("/>\n"),
            Some(i) => {
                let _ = writeln!(
                    out,
                    ">\n    <failure message=\"coefficient {i} differs (n_max {})\"/>\n  </testcase>",
                    r.n_max
                );
            }
        }
    }
    out.push_str("</testsuite>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::enumerate_oracle;

    #[test]
    fn chi_basics() {
        let chi = chi_series(30);
        assert_eq!(chi.coeffs()[0], 1);
        // q^0 term is 1; the n = 1 term is q(1+q)/(1+q³) = q + q² - q⁴ - …
        assert_eq!(chi.coeffs()[1], 1);
    }

    #[test]
    fn all_cases_pass() {
        for r in check_all(200, DEFAULT_CAP).unwrap() {
            assert!(r.pass, "{} failed at {:?}", r.name, r.first_discrepancy);
        }
    }

    #[test]
    fn rogers_ramanujan_coefficient_seven() {
        let case = IdentityCase::named("rogers_ramanujan", 200).unwrap();
        let rhs = case.rhs[0].expand(200).unwrap();
        assert_eq!(rhs.coeffs()[7], 2);
        let sum = case.rhs[1].expand(200).unwrap();
        assert_eq!(sum.coeffs()[7], 2);
    }

    #[test]
    fn mutation_is_detected() {
        let case = IdentityCase::named("andrews_67", 100).unwrap().mutated();
        let r = check_identity(&case, DEFAULT_CAP).unwrap();
        assert!(!r.pass);
        let i = r.first_discrepancy.unwrap();
        assert_ne!(r.lhs.as_ref().unwrap()[i], r.rhs.as_ref().unwrap()[0][i]);
    }

    #[test]
    fn guard_and_unknown_name() {
        assert!(matches!(IdentityCase::named("nope", 10), Err(Error::UnknownIdentity(_))));
        let case = IdentityCase::named("macmahon", 600).unwrap();
        assert!(matches!(check_identity(&case, DEFAULT_CAP), Err(Error::GuardExceeded { .. })));
    }

    #[test]
    fn andrews_lewis_counts_match_enumeration() {
        let case = IdentityCase::named("andrews_lewis", 30).unwrap();
        let rhs = case.rhs[0].expand(30).unwrap();
        for n in 0..=30 {
            assert_eq!(enumerate_oracle(case.lhs, n as u64).unwrap(), rhs.coeffs()[n], "n={n}");
        }
    }

    #[test]
    fn junit_output_shape() {
        let mut reports = check_all(20, DEFAULT_CAP).unwrap();
        reports[0].pass = false;
        reports[0].first_discrepancy = Some(3);
        let xml = junit_xml(&reports);
        assert!(xml.contains("tests=\"5\" failures=\"1\""));
        assert!(xml.contains("<failure message=\"coefficient 3 differs"));
    }
}
