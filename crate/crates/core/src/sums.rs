//! Partial sums `A_m(n) = Σ a(i)` and, for `m = 2`, the lattice count
//! `S(n) = |{(x, y) : y ≤ x ≤ y², x ≤ n}|`.

use serde::{Deserialize, Serialize};

use crate::arith::{ceil_sqrt, FamilyParams, FloorSqrt};
use crate::engines::{gen_increment, EngineError, SeqKind, SeqTable};
use crate::verify::{CheckReport, Counterexample};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SumTable {
    m: u32,
    /// `sums[i] = A_m(i + 1)`.
    sums: Vec<u128>,
}

impl SumTable {
    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn sums(&self) -> &[u128] {
        &self.sums
    }

    /// `A_m(n)` for `n ≥ 1`.
    pub fn get(&self, n: u64) -> Option<u128> {
        if n == 0 {
            return None;
        }
        self.sums.get(n as usize - 1).copied()
    }
}

/// Prefix sums of a canonical table.
///
/// # Panics
///
/// If the table is not a canonical (start index 1) table.
pub fn partial_sums(table: &SeqTable) -> SumTable {
    assert!(
        table.kind() == SeqKind::Canonical && table.start_index() == 1,
        "partial sums need a canonical table starting at a(1)"
    );
    let sums = table
        .values()
        .iter()
        .scan(0u128, |acc, &v| {
            *acc += v as u128;
            Some(*acc)
        })
        .collect();
    SumTable { m: table.m(), sums }
}

/// Number of `y` with `y ≤ x ≤ y²`: `x − ⌈√x⌉ + 1`.
#[inline]
pub fn lattice_column(x: u64) -> u64 {
    x - ceil_sqrt(x) + 1
}

/// `S(n)`, summing the per-`x` column counts.
pub fn lattice_count(n: u64) -> u128 {
    (1..=n).map(|x| lattice_column(x) as u128).sum()
}

/// `S(1), …, S(n_max)` in one pass.
pub fn lattice_counts(n_max: u64) -> Vec<u128> {
    (1..=n_max)
        .scan(0u128, |acc, x| {
            *acc += lattice_column(x) as u128;
            Some(*acc)
        })
        .collect()
}

/// `A₂(n) = S(n)` for every `n ≤ n_max`, together with the first-difference
/// identity `S(n) − S(n−1) = n − ⌊√(n−1)⌋`.
pub fn check_sums_m2(n_max: u64) -> Result<CheckReport, EngineError> {
    let params = FamilyParams::new(2).expect("m = 2");
    let sums = partial_sums(&gen_increment(params, n_max)?);
    let lattice = lattice_counts(n_max);
    let mut first = None;
    let mut prev = 0u128;
    for n in 1..=n_max {
        let s = lattice[n as usize - 1];
        let a_sum = sums.get(n).expect("in range");
        if s != a_sum {
            first = Some(Counterexample {
                n: n as i64,
                expected: a_sum as i128,
                actual: s as i128,
                context: "A_2(n) vs lattice count".into(),
            });
            break;
        }
        let diff = s - prev;
        let want = (n - (n - 1).floor_sqrt()) as u128;
        if diff != want {
            first = Some(Counterexample {
                n: n as i64,
                expected: want as i128,
                actual: diff as i128,
                context: "S(n) - S(n-1) vs n - isqrt(n-1)".into(),
            });
            break;
        }
        prev = s;
    }
    Ok(CheckReport::new("sums_m2", 2, (1, n_max as i64), first))
}

/// `⌈√n⌉ − 1 = ⌊√(n−1)⌋` over `1..=n_max`.
pub fn check_sqrt_identity(n_max: u64) -> CheckReport {
    let first = (1..=n_max).find_map(|n| {
        let lhs = ceil_sqrt(n) - 1;
        let rhs = (n - 1).floor_sqrt();
        (lhs != rhs).then(|| Counterexample {
            n: n as i64,
            expected: rhs as i128,
            actual: lhs as i128,
            context: "ceil(sqrt(n)) - 1 vs floor(sqrt(n-1))".into(),
        })
    });
    CheckReport::new("sqrt_identity", 2, (1, n_max as i64), first)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engines::gen_nested;

    fn sums_of(m: u32, n: u64) -> SumTable {
        partial_sums(&gen_nested(FamilyParams::new(m).unwrap(), n).unwrap())
    }

    #[test]
    fn partial_sum_examples() {
        assert_eq!(sums_of(2, 4).sums(), &[1, 2, 4, 7]);
        assert_eq!(sums_of(1, 6).get(6), Some(13));
        for m in 1..=8 {
            assert_eq!(sums_of(m, 1).sums(), &[1]);
        }
        assert_eq!(sums_of(3, 5).get(0), None);
    }

    #[test]
    fn sums_strictly_increase() {
        for m in 1..=8 {
            let s = sums_of(m, 5_000);
            assert!(s.sums().windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn lattice_examples() {
        assert_eq!(lattice_count(1), 1);
        assert_eq!(lattice_count(2), 2);
        assert_eq!(lattice_count(4), 7);
        assert_eq!(lattice_column(2), 1);
    }

    #[test]
    fn lattice_vs_naive_pairs() {
        let mut naive = 0u128;
        let fast = lattice_counts(300);
        for x in 1..=300u64 {
            for y in 1..=x {
                if x <= y * y {
                    naive += 1;
                }
            }
            assert_eq!(fast[x as usize - 1], naive);
        }
    }

    #[test]
    fn check_sums_small() {
        assert!(check_sums_m2(1).unwrap().passed);
        assert!(check_sums_m2(2000).unwrap().passed);
        assert!(check_sums_m2(10_000).unwrap().passed);
        assert!(check_sqrt_identity(100_000).passed);
    }

    #[test]
    #[should_panic(expected = "canonical")]
    fn partial_sums_rejects_zero_indexed() {
        let t = SeqTable::new(2, 0, vec![0, 0, 1], SeqKind::ZeroIndexed, crate::Engine::Nested);
        partial_sums(&t);
    }
}
