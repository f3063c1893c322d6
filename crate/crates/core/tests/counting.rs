use kseq_core::identities::IdentityCase;
use kseq_core::partition::{count_constrained, enumerate_oracle, Constraint, Multiplicity};
use kseq_core::series::{partition_series, TruncatedSeries};
use proptest::prelude::*;
use rug::Integer;

fn no_seq(k: usize, b: usize) -> Constraint {
    Constraint::new(k, Multiplicity::Unbounded, b).unwrap()
}

#[test]
fn relaxing_the_constraint_is_monotone() {
    let n_max = 400;
    let p = partition_series(n_max);
    let tables: Vec<_> = (2..=5).map(|k| count_constrained(no_seq(k, 0), n_max).to_series()).collect();
    for n in 0..=n_max {
        for w in tables.windows(2) {
            assert!(w[0].coeffs()[n] <= w[1].coeffs()[n], "n={n}");
        }
        assert!(tables[3].coeffs()[n] <= p.coeffs()[n]);
    }
}

#[test]
fn parts_above_zero_counts_are_nondecreasing() {
    for k in 2..=4 {
        let t = count_constrained(no_seq(k, 0), 600).to_series();
        assert!(t.coeffs().windows(2).all(|w| w[0] <= w[1]), "k={k}");
    }
}

#[test]
fn partition_numbers_are_nondecreasing() {
    let p = partition_series(500);
    assert!(p.coeffs().windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(p.coeffs()[100], Integer::from(190_569_292u64));
}

/// Partitions with no 2-sequence either avoid 1 or contain 1 with no 2,
/// so G_2 - G_{2,>1} = q/(1-q) · G_{2,>2}.
#[test]
fn chi_and_andrews_lewis_are_consistent() {
    let n_max = 250;
    let chi = IdentityCase::named("chi_mock_theta", n_max).unwrap();
    let al = IdentityCase::named("andrews_lewis", n_max).unwrap();
    let g = chi.rhs[0].expand(n_max).unwrap();
    let g1 = al.rhs[0].expand(n_max).unwrap();
    assert!(g1.first_difference(&count_constrained(no_seq(2, 1), n_max).to_series()).is_none());
    let mut ones = count_constrained(no_seq(2, 2), n_max).to_series();
    ones.div_binomial(1, -1);
    let shifted = TruncatedSeries::from_fn(n_max, |n| if n == 0 { Integer::new() } else { ones.coeffs()[n - 1].clone() });
    assert!(g.sub(&g1).unwrap().first_difference(&shifted).is_none());
}

fn constraint() -> impl Strategy<Value = Constraint> {
    (2usize..5, prop_oneof![Just(Multiplicity::Bounded(1)), Just(Multiplicity::Bounded(3)), Just(Multiplicity::Unbounded)], 0usize..3)
        .prop_map(|(k, r, b)| Constraint::new(k, r, b).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dp_equals_enumeration(c in constraint(), n in 0u64..=36) {
        let t = count_constrained(c, n as usize);
        prop_assert_eq!(t.get(n as usize).unwrap(), &enumerate_oracle(c, n).unwrap());
    }

    #[test]
    fn raising_the_lower_bound_only_removes(k in 2usize..5, b in 0usize..4, n_max in 1usize..150) {
        let lo = count_constrained(no_seq(k, b), n_max).to_series();
        let hi = count_constrained(no_seq(k, b + 1), n_max).to_series();
        for n in 0..=n_max {
            prop_assert!(hi.coeffs()[n] <= lo.coeffs()[n]);
        }
    }
}
