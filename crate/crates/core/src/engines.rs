//! Three independent generators of `a(1..N)` and the iterate evaluator.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{a_closed, t_orig, ArithError, FamilyParams};

/// Largest table a generator will materialize. Every stored value is
/// bounded by its index, so `n + a(n)` stays inside `i64`.
pub const MAX_TABLE_LEN: u64 = (i64::MAX / 2) as u64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("table length must be at least 1 (got {0})")]
    EmptyTable(u64),
    #[error("table length {0} exceeds the supported maximum {MAX_TABLE_LEN}")]
    TableTooLarge(u64),
    #[error("iterate a^({step})({n}) = {value} left the table range [{lo}, {hi}]")]
    IterateOutOfRange { n: i64, step: u64, value: i64, lo: i64, hi: i64 },
    #[error("index {n} is outside the table range [{lo}, {hi}]")]
    IndexOutOfRange { n: i64, lo: i64, hi: i64 },
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// `N_k = p·k + q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AffineRule {
    pub p: u64,
    pub q: u64,
}

impl AffineRule {
    pub fn canonical(params: FamilyParams) -> Self {
        Self { p: params.m() as u64, q: 1 }
    }

    pub fn run_length(self, k: u64) -> u64 {
        self.p * k + self.q
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeqKind {
    Canonical,
    ZeroIndexed,
    Variant { initial_value: i64, rule: AffineRule },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Nested,
    Increment,
    ClosedForm,
}

impl Engine {
    pub const ALL: [Engine; 3] = [Engine::Nested, Engine::Increment, Engine::ClosedForm];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Nested => "nested",
            Engine::Increment => "increment",
            Engine::ClosedForm => "closed",
        }
    }

    pub fn generate(self, params: FamilyParams, n_max: u64) -> Result<SeqTable, EngineError> {
        match self {
            Engine::Nested => gen_nested(params, n_max),
            Engine::Increment => gen_increment(params, n_max),
            Engine::ClosedForm => gen_closed(params, n_max),
        }
    }
}

/// A dense run of sequence values `a(start_index ..= end_index)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeqTable {
    m: u32,
    start_index: i64,
    values: Vec<i64>,
    kind: SeqKind,
    engine: Engine,
}

impl SeqTable {
    pub fn new(m: u32, start_index: i64, values: Vec<i64>, kind: SeqKind, engine: Engine) -> Self {
        Self { m, start_index, values, kind, engine }
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn start_index(&self) -> i64 {
        self.start_index
    }

    /// Last stored index (inclusive). Equal to `start_index - 1` when empty.
    pub fn end_index(&self) -> i64 {
        self.start_index + self.values.len() as i64 - 1
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn kind(&self) -> SeqKind {
        self.kind
    }

    pub fn engine(&self) -> Engine {
        self.engine
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn contains(&self, n: i64) -> bool {
        n >= self.start_index && n <= self.end_index()
    }

    /// `a(n)`, or `None` outside the stored range.
    #[inline]
    pub fn get(&self, n: i64) -> Option<i64> {
        if self.contains(n) {
            Some(self.values[(n - self.start_index) as usize])
        } else {
            None
        }
    }

    /// `(index, value)` pairs in increasing index order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        let start = self.start_index;
        self.values.iter().enumerate().map(move |(i, &v)| (start + i as i64, v))
    }

    /// Same values with different provenance, for comparing engines.
    pub fn same_values(&self, other: &SeqTable) -> bool {
        self.start_index == other.start_index && self.values == other.values
    }
}

/// `a⁽ʲ⁾(n)`: `j` applications of the table to `n`; `j = 0` yields `n`.
pub fn iterate(table: &SeqTable, j: u64, n: i64) -> Result<i64, EngineError> {
    if !table.contains(n) {
        return Err(EngineError::IndexOutOfRange {
            n,
            lo: table.start_index(),
            hi: table.end_index(),
        });
    }
    let mut x = n;
    for step in 1..=j {
        x = table.get(x).ok_or(EngineError::IterateOutOfRange {
            n,
            step: step - 1,
            value: x,
            lo: table.start_index(),
            hi: table.end_index(),
        })?;
    }
    Ok(x)
}

fn check_len(n_max: u64) -> Result<(), EngineError> {
    if n_max < 1 {
        Err(EngineError::EmptyTable(n_max))
    } else if n_max > MAX_TABLE_LEN {
        Err(EngineError::TableTooLarge(n_max))
    } else {
        Ok(())
    }
}

/// An iterate that left `[start, end]` during a nested build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Escape {
    /// The `n` whose successor `a(n+1)` was being computed.
    pub n: i64,
    /// Number of applications completed before the escape.
    pub step: u64,
    pub value: i64,
    pub lo: i64,
    pub hi: i64,
}

impl Escape {
    pub fn is_low(&self) -> bool {
        self.value < self.lo
    }
}

impl From<Escape> for EngineError {
    fn from(e: Escape) -> Self {
        EngineError::IterateOutOfRange { n: e.n, step: e.step, value: e.value, lo: e.lo, hi: e.hi }
    }
}

/// Left-to-right build of `a(n+1) = n − a⁽ᵐ⁾(n) + a⁽ᵐ⁺¹⁾(n)` from
/// `a(start) = initial` up to `a(last)`. Every iterate is a lookup into the
/// prefix built so far; `a⁽ᵐ⁺¹⁾(n)` is one further lookup on `a⁽ᵐ⁾(n)`.
pub fn nested_build(m: u32, start: i64, initial: i64, last: i64) -> Result<Vec<i64>, Escape> {
    let mut values = Vec::with_capacity((last - start + 1).max(1) as usize);
    values.push(initial);
    for n in start..last {
        let lookup = |x: i64, step: u64, values: &[i64]| -> Result<i64, Escape> {
            if x < start || x > n {
                return Err(Escape { n, step, value: x, lo: start, hi: n });
            }
            Ok(values[(x - start) as usize])
        };
        let mut x = n;
        for step in 0..m as u64 {
            x = lookup(x, step, &values)?;
        }
        let x_next = lookup(x, m as u64, &values)?;
        values.push(n - x + x_next);
    }
    Ok(values)
}

/// Nested-recurrence engine, `a(1) = 1`.
pub fn gen_nested(params: FamilyParams, n_max: u64) -> Result<SeqTable, EngineError> {
    check_len(n_max)?;
    let values = nested_build(params.m(), 1, 1, n_max as i64)?;
    Ok(SeqTable::new(params.m(), 1, values, SeqKind::Canonical, Engine::Nested))
}

/// Conditional-increment engine: `a(n+1) = a(n) + [n ∉ S′ₘ]`, tracking the
/// next polygonal number with a cursor.
pub fn gen_increment(params: FamilyParams, n_max: u64) -> Result<SeqTable, EngineError> {
    check_len(n_max)?;
    let mut values = Vec::with_capacity(n_max as usize);
    let mut a: i64 = 1;
    values.push(a);
    let mut k = 1u64;
    let mut next = t_orig(params, k);
    for n in 1..n_max {
        if n as u128 == next {
            k += 1;
            next = t_orig(params, k);
        } else {
            a += 1;
        }
        values.push(a);
    }
    Ok(SeqTable::new(params.m(), 1, values, SeqKind::Canonical, Engine::Increment))
}

/// Closed-form engine, evaluated in parallel.
pub fn gen_closed(params: FamilyParams, n_max: u64) -> Result<SeqTable, EngineError> {
    check_len(n_max)?;
    let values = (1..=n_max)
        .into_par_iter()
        .map(|n| a_closed(params, n).map(|a| a as i64))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SeqTable::new(params.m(), 1, values, SeqKind::Canonical, Engine::ClosedForm))
}

/// The increment rule over `a(lo ..= hi)` without building the prefix. The
/// seed `|S′ₘ ∩ [1, lo−1]|` comes from a bisection over `t_orig`, so no
/// square root is involved.
pub fn increment_window(params: FamilyParams, lo: u64, hi: u64) -> Result<Vec<u64>, EngineError> {
    if lo < 1 {
        return Err(ArithError::IndexBelowOne(lo).into());
    }
    let count_upto = |x: u64| -> u64 {
        // largest k with t_orig(k) <= x
        let (mut good, mut bad) = (0u64, 1u64);
        while t_orig(params, bad) <= x as u128 {
            good = bad;
            bad *= 2;
        }
        while bad - good > 1 {
            let mid = good + (bad - good) / 2;
            if t_orig(params, mid) <= x as u128 {
                good = mid;
            } else {
                bad = mid;
            }
        }
        good
    };
    let mut k = count_upto(lo - 1);
    let mut a = lo - k;
    let mut next = t_orig(params, k + 1);
    let mut out = Vec::with_capacity(hi.saturating_sub(lo) as usize + 1);
    if hi < lo {
        return Ok(out);
    }
    out.push(a);
    for n in lo..hi {
        if n as u128 == next {
            k += 1;
            next = t_orig(params, k + 1);
        } else {
            a += 1;
        }
        out.push(a);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(m: u32) -> FamilyParams {
        FamilyParams::new(m).unwrap()
    }

    #[test]
    fn increment_examples() {
        assert_eq!(gen_increment(fam(1), 6).unwrap().values(), &[1, 1, 2, 2, 3, 4]);
        assert_eq!(gen_increment(fam(2), 10).unwrap().values(), &[1, 1, 2, 3, 3, 4, 5, 6, 7, 7]);
        for m in 1..=8 {
            assert_eq!(gen_increment(fam(m), 1).unwrap().values(), &[1]);
        }
        assert_eq!(gen_increment(fam(1), 0), Err(EngineError::EmptyTable(0)));
    }

    #[test]
    fn nested_examples() {
        assert_eq!(gen_nested(fam(1), 5).unwrap().values(), &[1, 1, 2, 2, 3]);
        assert!(gen_nested(fam(2), 10)
            .unwrap()
            .same_values(&gen_increment(fam(2), 10).unwrap()));
        for m in 1..=8 {
            assert_eq!(gen_nested(fam(m), 1).unwrap().values(), &[1]);
        }
    }

    #[test]
    fn closed_examples() {
        assert_eq!(gen_closed(fam(1), 6).unwrap().values(), &[1, 1, 2, 2, 3, 4]);
        assert_eq!(gen_closed(fam(3), 5).unwrap().values(), &[1, 1, 2, 3, 4]);
        assert_eq!(gen_closed(fam(8), 2).unwrap().values(), &[1, 1]);
        assert!(gen_closed(fam(8), 0).is_err());
    }

    #[test]
    fn iterate_examples() {
        let t2 = gen_increment(fam(2), 20).unwrap();
        assert_eq!(iterate(&t2, 2, 4), Ok(2));
        assert_eq!(iterate(&t2, 0, 7), Ok(7));
        let t1 = gen_increment(fam(1), 20).unwrap();
        assert_eq!(iterate(&t1, 5, 1), Ok(1));
        assert!(matches!(iterate(&t1, 1, 21), Err(EngineError::IndexOutOfRange { .. })));
    }

    #[test]
    fn iterate_escape_is_reported() {
        let t = SeqTable::new(1, 1, vec![1, 5, 2], SeqKind::Canonical, Engine::Nested);
        assert_eq!(
            iterate(&t, 2, 2),
            Err(EngineError::IterateOutOfRange { n: 2, step: 1, value: 5, lo: 1, hi: 3 })
        );
    }

    #[test]
    fn nested_build_escapes() {
        // a(1) = 5 sends the first iterate above the one-element prefix.
        let e = nested_build(1, 1, 5, 10).unwrap_err();
        assert_eq!(e, Escape { n: 1, step: 1, value: 5, lo: 1, hi: 1 });
        assert!(!e.is_low());
        let e = nested_build(1, 1, 0, 10).unwrap_err();
        assert!(e.is_low());
    }

    #[test]
    fn window_matches_full_table() {
        for m in 1..=8 {
            let p = fam(m);
            let full = gen_increment(p, 5_000).unwrap();
            for (lo, hi) in [(1u64, 1u64), (1, 5000), (2, 3), (37, 812), (4999, 5000)] {
                let w = increment_window(p, lo, hi).unwrap();
                let expect: Vec<u64> =
                    (lo..=hi).map(|n| full.get(n as i64).unwrap() as u64).collect();
                assert_eq!(w, expect, "m={m} lo={lo} hi={hi}");
            }
        }
    }

    #[test]
    fn canonical_bounds_and_slow_growth() {
        for m in 1..=8 {
            let t = gen_nested(fam(m), 20_000).unwrap();
            assert_eq!(t.values()[0], 1);
            for (n, a) in t.iter() {
                assert!(a >= 1 && a <= n);
            }
            assert!(t.values().windows(2).all(|w| matches!(w[1] - w[0], 0 | 1)));
        }
    }
}
