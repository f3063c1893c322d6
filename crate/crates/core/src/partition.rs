//! Exact counts of partitions with no k-sequence, a multiplicity cap and a
//! lower bound on the parts.
//!
//! [`count_constrained`] sweeps the part sizes in increasing order. Its state
//! is the length of the current run of consecutive sizes that are present,
//! which never reaches `k`. [`enumerate_oracle`] counts the same thing by
//! listing every partition and is kept deliberately naive.

use std::fmt;
use std::io::Write;

use rug::{Assign, Integer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TruncatedSeries;

/// Largest `n` accepted by [`enumerate_oracle`].
pub const ORACLE_MAX_N: u64 = 45;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Multiplicity {
    Bounded(u32),
    Unbounded,
}

impl Multiplicity {
    fn allows(self, count: u32) -> bool {
        match self {
            Multiplicity::Bounded(r) => count <= r,
            Multiplicity::Unbounded => true,
        }
    }
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Multiplicity::Bounded(r) => write!(f, "{r}"),
            Multiplicity::Unbounded => f.write_str("inf"),
        }
    }
}

/// No `k` consecutive part sizes, no part repeated more than `r` times, and
/// every part greater than `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Constraint {
    k: usize,
    r: Multiplicity,
    b: usize,
}

impl Constraint {
    pub fn new(k: usize, r: Multiplicity, b: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidConstraint(format!("k = {k}; k must be at least 2")));
        }
        if r == Multiplicity::Bounded(0) {
            return Err(Error::InvalidConstraint("multiplicity cap must be at least 1".into()));
        }
        Ok(Constraint { k, r, b })
    }

    /// `(k, ∞, 0)`: partitions with no k-sequence.
    pub fn no_sequence(k: usize) -> Result<Self> {
        Constraint::new(k, Multiplicity::Unbounded, 0)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn r(&self) -> Multiplicity {
        self.r
    }

    pub fn b(&self) -> usize {
        self.b
    }

    /// Whether a partition, given by multiplicities indexed by part size,
    /// satisfies the constraint.
    pub fn admits(&self, multiplicities: &[u32]) -> bool {
        let mut run = 0;
        for (size, &m) in multiplicities.iter().enumerate() {
            if m == 0 {
                run = 0;
                continue;
            }
            if size <= self.b || !self.r.allows(m) {
                return false;
            }
            run += 1;
            if run >= self.k {
                return false;
            }
        }
        true
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(k={}, r={}, B={})", self.k, self.r, self.b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    pub constraint: Constraint,
    pub values: Vec<Integer>,
}

impl CountTable {
    pub fn n_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, n: usize) -> Option<&Integer> {
        self.values.get(n)
    }

    pub fn to_series(&self) -> TruncatedSeries {
        TruncatedSeries::new(self.values.clone()).expect("tables are never empty")
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["n", "count"])?;
        for (n, v) in self.values.iter().enumerate() {
            w.write_record([n.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl Serialize for CountTable {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            constraint: &'a Constraint,
            n_max: usize,
            values: Vec<String>,
        }
        Repr {
            constraint: &self.constraint,
            n_max: self.n_max(),
            values: self.values.iter().map(Integer::to_string).collect(),
        }
        .serialize(serializer)
    }
}

/// Longest run of distinct consecutive sizes above `b` whose sum fits in `n_max`.
fn longest_feasible_run(n_max: usize, b: usize) -> usize {
    let mut len = 0;
    let mut sum = 0;
    loop {
        let next = b + len + 1;
        if sum + next > n_max {
            return len;
        }
        sum += next;
        len += 1;
    }
}

/// Replaces `row` by `Σ_{m ∈ mult} src[n - size·m]` for `n = 0..=n_max`.
fn present_transform(row: &mut [Integer], src: &[Integer], size: usize, r: Multiplicity) {
    let len = row.len();
    for v in row.iter_mut().take(size.min(len)) {
        *v = Integer::new();
    }
    for n in size..len {
        let (done, rest) = row.split_at_mut(n);
        let target = &mut rest[0];
        target.assign(&src[n - size]);
        *target += &done[n - size];
        if let Multiplicity::Bounded(cap) = r {
            let reach = size * (cap as usize + 1);
            if n >= reach {
                *target -= &src[n - reach];
            }
        }
    }
}

/// Exact `p_{k,r,>B}(n)` for `n = 0..=n_max` in `O(k · n_max²)` big-integer additions.
pub fn count_constrained(c: Constraint, n_max: usize) -> CountTable {
    let width = n_max + 1;
    let run_cap = longest_feasible_run(n_max, c.b);
    if c.k - 1 > run_cap {
        return CountTable {
            constraint: c,
            values: count_unrestricted_run(c, n_max),
        };
    }

    // rows[L][n]: partitions of n using sizes up to the current one whose
    // trailing run of present sizes has length L.
    let states = c.k;
    let mut rows: Vec<Vec<Integer>> = vec![vec![Integer::new(); width]; states];
    rows[0][0] = Integer::from(1);
    let mut total = vec![Integer::new(); width];
    for size in (c.b + 1)..=n_max {
        for (n, t) in total.iter_mut().enumerate() {
            t.assign(&rows[0][n]);
            for row in &rows[1..] {
                *t += &row[n];
            }
        }
        for run in (1..states).rev() {
            let (lower, upper) = rows.split_at_mut(run);
            present_transform(&mut upper[0], &lower[run - 1], size, c.r);
        }
        std::mem::swap(&mut rows[0], &mut total);
    }
    let values = (0..width)
        .map(|n| rows.iter().map(|row| &row[n]).sum())
        .collect();
    CountTable {
        constraint: c,
        values,
    }
}

/// The k-sequence condition cannot bind below `n_max`: only caps and the bound remain.
fn count_unrestricted_run(c: Constraint, n_max: usize) -> Vec<Integer> {
    let mut s = TruncatedSeries::one(n_max);
    for size in (c.b + 1)..=n_max {
        s.div_binomial(size, -1);
        if let Multiplicity::Bounded(r) = c.r {
            let reach = size * (r as usize + 1);
            if reach <= n_max {
                s.mul_binomial(reach, -1);
            }
        }
    }
    s.into_coeffs()
}

/// `p_k(n)` for `n = 0..=n_max`.
pub fn gk_coefficients(k: usize, n_max: usize) -> Result<CountTable> {
    Ok(count_constrained(Constraint::no_sequence(k)?, n_max))
}

/// Counts admissible partitions of `n` by generating every partition of `n`.
pub fn enumerate_oracle(c: Constraint, n: u64) -> Result<Integer> {
    if n > ORACLE_MAX_N {
        return Err(Error::GuardExceeded {
            what: "partition enumeration n",
            size: u128::from(n),
            limit: u128::from(ORACLE_MAX_N),
        });
    }
    let n = n as usize;
    let mut multiplicities = vec![0u32; n + 1];
    let mut count = Integer::new();
    visit_partitions(n, n, &mut multiplicities, &mut |m| {
        if c.admits(m) {
            count += 1;
        }
    });
    Ok(count)
}

/// Calls `f` with the multiplicity vector of every partition of `remaining`
/// into parts no larger than `largest`.
fn visit_partitions(remaining: usize, largest: usize, m: &mut [u32], f: &mut impl FnMut(&[u32])) {
    if remaining == 0 {
        f(m);
        return;
    }
    for part in (1..=largest.min(remaining)).rev() {
        m[part] += 1;
        visit_partitions(remaining - part, part, m, f);
        m[part] -= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{product_form, ProductFactor};
    use proptest::prelude::*;

    fn pk(k: usize, n_max: usize) -> Vec<i64> {
        gk_coefficients(k, n_max)
            .unwrap()
            .values
            .iter()
            .map(|v| v.to_i64().unwrap())
            .collect()
    }

    #[test]
    fn small_values_k2() {
        assert_eq!(pk(2, 11), vec![1, 1, 2, 2, 4, 4, 8, 8, 13, 15, 22, 24]);
    }

    #[test]
    fn empty_and_singleton() {
        for k in 2..5 {
            for r in [Multiplicity::Bounded(1), Multiplicity::Bounded(3), Multiplicity::Unbounded] {
                let t = count_constrained(Constraint::new(k, r, 0).unwrap(), 5);
                assert_eq!(t.values[0], 1);
                assert_eq!(t.values[1], 1);
            }
        }
    }

    #[test]
    fn distinct_non_consecutive_above_one() {
        let c = Constraint::new(2, Multiplicity::Bounded(1), 1).unwrap();
        // {7} and {5, 2}; {4, 3} is consecutive.
        assert_eq!(count_constrained(c, 7).values[7], 2);
        assert_eq!(enumerate_oracle(c, 7).unwrap(), 2);
    }

    #[test]
    fn oracle_matches_product_side() {
        let c = Constraint::new(2, Multiplicity::Bounded(2), 1).unwrap();
        let product = product_form(
            &[
                ProductFactor::new(6, -2, -1),
                ProductFactor::new(6, -3, -1),
                ProductFactor::new(6, -4, -1),
            ],
            5,
        )
        .unwrap();
        assert_eq!(enumerate_oracle(c, 5).unwrap(), product.coeffs()[5]);
    }

    #[test]
    fn oracle_guard() {
        let c = Constraint::no_sequence(2).unwrap();
        assert!(matches!(enumerate_oracle(c, 46), Err(Error::GuardExceeded { .. })));
        assert_eq!(enumerate_oracle(c, 0).unwrap(), 1);
    }

    #[test]
    fn k_one_rejected() {
        assert!(Constraint::no_sequence(1).is_err());
        assert!(Constraint::new(3, Multiplicity::Bounded(0), 0).is_err());
    }

    #[test]
    fn large_k_gives_unrestricted_partitions() {
        let p = crate::series::partition_series(40);
        let t = gk_coefficients(50, 40).unwrap();
        assert_eq!(t.to_series(), p);
    }

    #[test]
    fn csv_and_json_exports() {
        let t = gk_coefficients(2, 4).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,count\n0,1\n1,1\n2,2\n3,2\n4,4\n");
        let json = serde_json::to_value(&t).unwrap();
        assert_eq!(json["constraint"]["k"], 2);
        assert_eq!(json["constraint"]["r"], "unbounded");
        assert_eq!(json["values"][4], "4");
    }

    fn constraint_strategy() -> impl Strategy<Value = Constraint> {
        (
            2usize..6,
            prop_oneof![(1u32..4).prop_map(Multiplicity::Bounded), Just(Multiplicity::Unbounded)],
            0usize..3,
        )
            .prop_map(|(k, r, b)| Constraint::new(k, r, b).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn dp_matches_enumeration(c in constraint_strategy(), n in 0u64..=30) {
            let table = count_constrained(c, n as usize);
            prop_assert_eq!(&table.values[n as usize], &enumerate_oracle(c, n).unwrap());
        }

        #[test]
        fn relaxing_k_only_adds_partitions(k in 2usize..7, n_max in 1usize..120) {
            let lo = gk_coefficients(k, n_max).unwrap();
            let hi = gk_coefficients(k + 1, n_max).unwrap();
            let all = crate::series::partition_series(n_max);
            for n in 0..=n_max {
                prop_assert!(lo.values[n] <= hi.values[n]);
                prop_assert!(hi.values[n] <= all.coeffs()[n]);
            }
        }

        #[test]
        fn counts_nondecreasing(k in 2usize..6, n_max in 1usize..200) {
            let t = gk_coefficients(k, n_max).unwrap();
            prop_assert_eq!(&t.values[0], &Integer::from(1));
            prop_assert!(t.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
