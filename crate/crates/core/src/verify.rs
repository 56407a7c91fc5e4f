//! Bounded machine checks of the structural claims about `a` and `h`.
//!
//! Every check returns a [`CheckReport`]. Sweeps run in increasing `n`; the
//! partitioned ones merge by taking the smallest failing index, so the
//! reported counterexample does not depend on the worker count.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{h_closed, in_s_prime, t_star, FamilyParams};
use crate::engines::{
    gen_closed, gen_increment, gen_nested, increment_window, iterate, EngineError, SeqKind,
    SeqTable,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub n: i64,
    pub expected: i128,
    pub actual: i128,
    pub context: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_name: String,
    pub m: u32,
    pub range: (i64, i64),
    pub passed: bool,
    pub counterexample: Option<Counterexample>,
    pub case_counts: Option<BTreeMap<String, u64>>,
}

impl CheckReport {
    pub fn new(
        check_name: impl Into<String>,
        m: u32,
        range: (i64, i64),
        counterexample: Option<Counterexample>,
    ) -> Self {
        Self {
            check_name: check_name.into(),
            m,
            range,
            passed: counterexample.is_none(),
            counterexample,
            case_counts: None,
        }
    }

    pub fn with_counts(mut self, counts: BTreeMap<String, u64>) -> Self {
        self.case_counts = Some(counts);
        self
    }

    pub fn count(&self, key: &str) -> u64 {
        self.case_counts.as_ref().and_then(|c| c.get(key).copied()).unwrap_or(0)
    }

    /// One JSON object, no trailing newline.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// `PASS key_identity m=2 n=1..99999 boundary=315 interior=99684`
impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} m={} n={}..{}",
            if self.passed { "PASS" } else { "FAIL" },
            self.check_name,
            self.m,
            self.range.0,
            self.range.1
        )?;
        if let Some(counts) = &self.case_counts {
            for (k, v) in counts {
                write!(f, " {k}={v}")?;
            }
        }
        if let Some(c) = &self.counterexample {
            write!(f, " first_failure: n={} expected={} actual={}", c.n, c.expected, c.actual)?;
            if !c.context.is_empty() {
                write!(f, " ({})", c.context)?;
            }
        }
        Ok(())
    }
}

/// Where checks take `h` from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HSource {
    /// The floor formula.
    #[default]
    Closed,
    /// `h(n) = n − a(n)` read off the table under test.
    Table,
}

struct HLookup<'a> {
    params: FamilyParams,
    table: &'a SeqTable,
    source: HSource,
}

impl HLookup<'_> {
    fn h(&self, n: i64) -> Option<i64> {
        match self.source {
            HSource::Closed => {
                if n < 1 {
                    None
                } else {
                    h_closed(self.params, n as u64).ok().map(|v| v as i64)
                }
            }
            HSource::Table => self.table.get(n).map(|a| n - a),
        }
    }
}

const CHUNK: i64 = 8192;

type Outcome = Result<Option<&'static str>, Counterexample>;

/// Evaluates `f` on every `n` in `lo..=hi` in fixed-size chunks. Returns the
/// counterexample with the smallest `n` and the per-case tallies.
fn sweep<F>(lo: i64, hi: i64, f: F) -> (Option<Counterexample>, BTreeMap<String, u64>)
where
    F: Fn(i64) -> Outcome + Sync,
{
    if hi < lo {
        return (None, BTreeMap::new());
    }
    let starts: Vec<i64> = (lo..=hi).step_by(CHUNK as usize).collect();
    let parts: Vec<(Option<Counterexample>, BTreeMap<&'static str, u64>)> = starts
        .par_iter()
        .map(|&s| {
            let mut counts = BTreeMap::new();
            for n in s..=(s + CHUNK - 1).min(hi) {
                match f(n) {
                    Ok(Some(case)) => *counts.entry(case).or_insert(0) += 1,
                    Ok(None) => {}
                    Err(c) => return (Some(c), counts),
                }
            }
            (None, counts)
        })
        .collect();
    let mut first: Option<Counterexample> = None;
    let mut counts = BTreeMap::new();
    for (c, part) in parts {
        for (k, v) in part {
            *counts.entry(k.to_string()).or_insert(0) += v;
        }
        if let Some(c) = c {
            if first.as_ref().is_none_or(|f| c.n < f.n) {
                first = Some(c);
            }
        }
    }
    (first, counts)
}

fn cx(n: i64, expected: impl Into<i128>, actual: impl Into<i128>, context: impl Into<String>) -> Counterexample {
    Counterexample { n, expected: expected.into(), actual: actual.into(), context: context.into() }
}

/// Consecutive differences are 0 or 1, and 0 exactly at the polygonal
/// numbers `S′ₘ`.
pub fn check_slow_growth(table: &SeqTable) -> CheckReport {
    let lo = table.start_index();
    let hi = table.end_index();
    let m = table.m();
    let params = FamilyParams::new(m.max(1)).expect("m >= 1");
    let (first, counts) = sweep(lo, hi - 1, |n| {
        let d = table.get(n + 1).unwrap() - table.get(n).unwrap();
        if d != 0 && d != 1 {
            return Err(cx(n, 1, d, "a(n+1) - a(n) outside {0, 1}"));
        }
        let flat = if table.kind() == SeqKind::ZeroIndexed {
            // h⁽⁰⁾ steps up at every t_orig(k) with k ≥ 1, so a stalls one
            // index earlier than in the canonical table.
            in_s_prime(params, (n + 1) as u64)
        } else {
            n >= 1 && in_s_prime(params, n as u64)
        };
        let expected = if flat { 0 } else { 1 };
        if d != expected {
            return Err(cx(n, expected, d, "increment disagrees with S'_m membership"));
        }
        Ok(Some(if flat { "flat" } else { "step" }))
    });
    CheckReport::new("slow_growth", m, (lo, hi), first).with_counts(counts)
}

/// `h(n+1) − 1 = h(a⁽ᵐ⁾(n))` for every `n` with `n + 1` in the table.
///
/// Each `n` is tallied as `boundary` when `n = T★_{k+1} − 1` (equivalently
/// `n ∈ S′ₘ`) and as `interior` otherwise; interior `n` must have `h(n) ≥ 1`.
pub fn check_key_identity(params: FamilyParams, table: &SeqTable, source: HSource) -> CheckReport {
    let hl = HLookup { params, table, source };
    let lo = table.start_index().max(1);
    let hi = table.end_index() - 1;
    let m = params.m() as u64;
    let (first, mut counts) = sweep(lo, hi, |n| {
        let h_next = hl.h(n + 1).ok_or_else(|| cx(n, 0, 0, "h(n+1) unavailable"))?;
        let x = iterate(table, m, n).map_err(|e| cx(n, 0, 0, e.to_string()))?;
        let h_x = hl.h(x).ok_or_else(|| cx(n, 0, x, "h(a^(m)(n)) unavailable"))?;
        if h_next - 1 != h_x {
            return Err(cx(n, h_next - 1, h_x, format!("a^(m)(n)={x}")));
        }
        if in_s_prime(params, n as u64) {
            Ok(Some("boundary"))
        } else {
            let h_n = hl.h(n).unwrap_or(0);
            if h_n < 1 {
                return Err(cx(n, 1, h_n, "interior case with h(n) = 0"));
            }
            Ok(Some("interior"))
        }
    });
    for key in ["boundary", "interior"] {
        counts.entry(key.to_string()).or_insert(0);
    }
    CheckReport::new(format!("key_identity[h={}]", source_name(source)), params.m(), (lo, hi), first)
        .with_counts(counts)
}

fn source_name(s: HSource) -> &'static str {
    match s {
        HSource::Closed => "closed",
        HSource::Table => "table",
    }
}

/// The boundary chain starting at `T★_{k+1} − 1`: every iterate for
/// `j = 0..=m` has `h = k`, and the `m`-th iterate is `T★ₖ`.
pub fn check_boundary_p1(params: FamilyParams, table: &SeqTable, k: u64) -> CheckReport {
    let arg = t_star(params, k + 1) as i64 - 1;
    let name = format!("boundary_p1[k={k}]");
    let c = p1_at(params, table, k, arg, HSource::Closed).err();
    CheckReport::new(name, params.m(), (arg, arg), c)
}

fn p1_at(params: FamilyParams, table: &SeqTable, k: u64, arg: i64, source: HSource) -> Result<(), Counterexample> {
    let hl = HLookup { params, table, source };
    let m = params.m() as u64;
    let mut x = arg;
    for j in 0..=m {
        if j > 0 {
            x = table
                .get(x)
                .ok_or_else(|| cx(arg, 0, x, format!("iterate j={j} left the table")))?;
        }
        let h = hl.h(x).ok_or_else(|| cx(arg, k as i128, 0, format!("h unavailable at j={j}")))?;
        if h != k as i64 {
            return Err(cx(arg, k, h, format!("h(a^({j})(n)) with a^({j})(n)={x}")));
        }
    }
    let target = t_star(params, k) as i64;
    if x != target {
        return Err(cx(arg, target, x, "a^(m)(T*_{k+1}-1) != T*_k"));
    }
    Ok(())
}

/// The chain starting at `T★ₖ`: iterates `j = 1..=m` have `h = k − 1`, and
/// the `m`-th iterate is `T★_{k−1}`.
pub fn check_boundary_p2(params: FamilyParams, table: &SeqTable, k: u64) -> CheckReport {
    let arg = t_star(params, k) as i64;
    let name = format!("boundary_p2[k={k}]");
    let c = if k == 0 {
        Some(cx(arg, 1, 0, "k must be at least 1"))
    } else {
        p2_at(params, table, k, arg, HSource::Closed).err()
    };
    CheckReport::new(name, params.m(), (arg, arg), c)
}

fn p2_at(params: FamilyParams, table: &SeqTable, k: u64, arg: i64, source: HSource) -> Result<(), Counterexample> {
    let hl = HLookup { params, table, source };
    let m = params.m() as u64;
    let mut x = arg;
    for j in 1..=m {
        x = table
            .get(x)
            .ok_or_else(|| cx(arg, 0, x, format!("iterate j={j} left the table")))?;
        let h = hl.h(x).ok_or_else(|| cx(arg, 0, 0, format!("h unavailable at j={j}")))?;
        if h != k as i64 - 1 {
            return Err(cx(arg, k as i128 - 1, h, format!("h(a^({j})(n)) with a^({j})(n)={x}")));
        }
    }
    let target = t_star(params, k - 1) as i64;
    if x != target {
        return Err(cx(arg, target, x, "a^(m)(T*_k) != T*_{k-1}"));
    }
    Ok(())
}

/// The first property at every `k` whose argument `T★_{k+1} − 1` is in the table.
pub fn check_p1_all(params: FamilyParams, table: &SeqTable, source: HSource) -> CheckReport {
    let end = table.end_index();
    let mut first = None;
    let mut checked = 0u64;
    let mut last_arg = 0;
    for k in 0u64.. {
        let arg = t_star(params, k + 1) as i64 - 1;
        if arg > end {
            break;
        }
        checked += 1;
        last_arg = arg;
        if let Err(c) = p1_at(params, table, k, arg, source) {
            first = Some(c);
            break;
        }
    }
    let mut counts = BTreeMap::new();
    counts.insert("k_checked".to_string(), checked);
    CheckReport::new(format!("boundary_p1[h={}]", source_name(source)), params.m(), (1, last_arg), first)
        .with_counts(counts)
}

/// The second property at every `k ≥ 1` with `T★ₖ` in the table.
pub fn check_p2_all(params: FamilyParams, table: &SeqTable, source: HSource) -> CheckReport {
    let end = table.end_index();
    let mut first = None;
    let mut checked = 0u64;
    let mut last_arg = 0;
    for k in 1u64.. {
        let arg = t_star(params, k) as i64;
        if arg > end {
            break;
        }
        checked += 1;
        last_arg = arg;
        if let Err(c) = p2_at(params, table, k, arg, source) {
            first = Some(c);
            break;
        }
    }
    let mut counts = BTreeMap::new();
    counts.insert("k_checked".to_string(), checked);
    CheckReport::new(format!("boundary_p2[h={}]", source_name(source)), params.m(), (2, last_arg), first)
        .with_counts(counts)
}

/// Every complete run of `h` over the table has length `m·k + 1`, and the
/// runs take the values `0, 1, 2, …` in order. The final run may be cut off
/// by the table end and is only required not to exceed its length.
pub fn check_frequency(params: FamilyParams, table: &SeqTable, source: HSource) -> CheckReport {
    let hl = HLookup { params, table, source };
    let lo = table.start_index().max(1);
    let hi = table.end_index();
    let mut first = None;
    let mut complete = 0u64;
    let mut run_value = 0i64;
    let mut run_start = lo;
    for n in lo..=hi + 1 {
        let h = if n <= hi { hl.h(n) } else { None };
        if h == Some(run_value) {
            continue;
        }
        let len = (n - run_start) as i128;
        let want = params.frequency(run_value as u64) as i128;
        let at_end = n > hi;
        if (at_end && len > want) || (!at_end && len != want) {
            first = Some(cx(run_start, want, len, format!("run length of h = {run_value}")));
            break;
        }
        if at_end {
            break;
        }
        complete += 1;
        if h != Some(run_value + 1) {
            first = Some(cx(n, run_value as i128 + 1, h.unwrap_or(-1), "h skipped a value"));
            break;
        }
        run_value += 1;
        run_start = n;
    }
    let mut counts = BTreeMap::new();
    counts.insert("complete_runs".to_string(), complete);
    CheckReport::new(format!("frequency[h={}]", source_name(source)), params.m(), (lo, hi), first)
        .with_counts(counts)
}

/// All three engines over `1..=n_max`, pairwise.
pub fn cross_check(params: FamilyParams, n_max: u64) -> Result<CheckReport, EngineError> {
    let (nested, (inc, closed)) = rayon::join(
        || gen_nested(params, n_max),
        || rayon::join(|| gen_increment(params, n_max), || gen_closed(params, n_max)),
    );
    let (nested, inc, closed) = (nested?, inc?, closed?);
    let first = nested
        .iter()
        .zip(inc.values())
        .zip(closed.values())
        .find(|(((_, a), b), c)| a != *b || a != *c)
        .map(|(((n, a), &b), &c)| {
            cx(n, c, a, format!("nested={a} increment={b} closed={c}"))
        });
    Ok(CheckReport::new("cross_check", params.m(), (1, n_max as i64), first))
}

/// Increment rule against a closed-form evaluator over `lo..=hi`, for
/// windows far beyond any table that fits in memory.
pub fn cross_check_window_with<F>(
    params: FamilyParams,
    lo: u64,
    hi: u64,
    closed: F,
) -> Result<CheckReport, EngineError>
where
    F: Fn(u64) -> u64,
{
    let inc = increment_window(params, lo, hi)?;
    let first = (lo..=hi).zip(inc).find_map(|(n, a)| {
        let c = closed(n);
        (c != a).then(|| cx(n as i64, a as i128, c as i128, format!("increment={a} closed={c}")))
    });
    Ok(CheckReport::new("cross_check_window", params.m(), (lo as i64, hi as i64), first))
}

pub fn cross_check_window(params: FamilyParams, lo: u64, hi: u64) -> Result<CheckReport, EngineError> {
    cross_check_window_with(params, lo, hi, |n| {
        crate::arith::a_closed(params, n).expect("n >= 1")
    })
}

/// Which named checks [`run_checks`] should run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Growth,
    Identity,
    P1,
    P2,
    Frequency,
    Cross,
}

impl CheckKind {
    pub const ALL: [CheckKind; 6] = [
        CheckKind::Growth,
        CheckKind::Identity,
        CheckKind::P1,
        CheckKind::P2,
        CheckKind::Frequency,
        CheckKind::Cross,
    ];

    pub fn parse(s: &str) -> Option<CheckKind> {
        Some(match s {
            "growth" => CheckKind::Growth,
            "identity" => CheckKind::Identity,
            "p1" => CheckKind::P1,
            "p2" => CheckKind::P2,
            "frequency" => CheckKind::Frequency,
            "cross" => CheckKind::Cross,
            _ => return None,
        })
    }
}

/// Runs the selected checks on the nested-engine table for `1..=n_max`.
pub fn run_checks(
    params: FamilyParams,
    n_max: u64,
    checks: &[CheckKind],
    source: HSource,
) -> Result<Vec<CheckReport>, EngineError> {
    let table = gen_nested(params, n_max)?;
    let mut out = Vec::new();
    for &c in checks {
        match c {
            CheckKind::Growth => out.push(check_slow_growth(&table)),
            CheckKind::Identity => out.push(check_key_identity(params, &table, source)),
            CheckKind::P1 => out.push(check_p1_all(params, &table, source)),
            CheckKind::P2 => out.push(check_p2_all(params, &table, source)),
            CheckKind::Frequency => out.push(check_frequency(params, &table, source)),
            CheckKind::Cross => out.push(cross_check(params, n_max)?),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engines::Engine;

    fn fam(m: u32) -> FamilyParams {
        FamilyParams::new(m).unwrap()
    }

    #[test]
    fn slow_growth_m1_small() {
        let t = gen_increment(fam(1), 6).unwrap();
        let r = check_slow_growth(&t);
        assert!(r.passed, "{r}");
        assert_eq!(r.count("flat"), 2); // n = 1, 3 (6 is the last index)
        let t = gen_increment(fam(1), 7).unwrap();
        assert_eq!(check_slow_growth(&t).count("flat"), 3);
    }

    #[test]
    fn slow_growth_rejects_jump() {
        let t = SeqTable::new(1, 1, vec![1, 3], SeqKind::Canonical, Engine::Nested);
        let r = check_slow_growth(&t);
        assert!(!r.passed);
        assert_eq!(r.counterexample.unwrap().n, 1);
    }

    #[test]
    fn slow_growth_m2_large() {
        let t = gen_nested(fam(2), 100_000).unwrap();
        assert!(check_slow_growth(&t).passed);
    }

    #[test]
    fn key_identity_small_cases() {
        let t = gen_nested(fam(2), 10).unwrap();
        // n = 4: h(5) - 1 = 1 and h(a(a(4))) = h(2) = 1
        assert_eq!(iterate(&t, 2, 4), Ok(2));
        assert_eq!(h_closed(fam(2), 5).unwrap() - 1, 1);
        assert_eq!(h_closed(fam(2), 2).unwrap(), 1);
        let r = check_key_identity(fam(2), &t, HSource::Closed);
        assert!(r.passed, "{r}");
        assert_eq!(r.count("boundary") + r.count("interior"), 9);

        let t = gen_nested(fam(1), 2).unwrap();
        let r = check_key_identity(fam(1), &t, HSource::Closed);
        assert!(r.passed);
        assert_eq!((r.count("boundary"), r.count("interior")), (1, 0));
    }

    #[test]
    fn key_identity_catches_corruption() {
        let mut v = gen_increment(fam(3), 500).unwrap().values().to_vec();
        v[200] += 1;
        let t = SeqTable::new(3, 1, v, SeqKind::Canonical, Engine::Nested);
        let r = check_key_identity(fam(3), &t, HSource::Table);
        assert!(!r.passed);
    }

    #[test]
    fn p1_examples() {
        let t = gen_nested(fam(2), 20).unwrap();
        let r = check_boundary_p1(fam(2), &t, 2);
        assert!(r.passed, "{r}");
        assert_eq!(r.range, (9, 9));
        assert_eq!(iterate(&t, 2, 9), Ok(5));
        for m in 1..=8 {
            let t = gen_nested(fam(m), 5).unwrap();
            assert!(check_boundary_p1(fam(m), &t, 0).passed);
            assert_eq!(iterate(&t, m as u64, 1), Ok(1));
        }
        let t = gen_nested(fam(1), 12).unwrap();
        assert_eq!(check_boundary_p1(fam(1), &t, 3).range, (10, 10));
        assert_eq!(t.get(10), Some(7));
        assert!(check_boundary_p1(fam(1), &t, 3).passed);
    }

    #[test]
    fn p2_examples() {
        for m in 1..=8 {
            let t = gen_nested(fam(m), 5).unwrap();
            assert!(check_boundary_p2(fam(m), &t, 1).passed);
            assert_eq!(iterate(&t, m as u64, 2), Ok(1));
        }
        let t = gen_nested(fam(2), 12).unwrap();
        assert_eq!(iterate(&t, 2, 10), Ok(5));
        assert!(check_boundary_p2(fam(2), &t, 3).passed);
        assert!(!check_boundary_p2(fam(2), &t, 0).passed);
    }

    #[test]
    fn boundary_out_of_table_fails_cleanly() {
        let t = gen_nested(fam(2), 5).unwrap();
        assert!(!check_boundary_p1(fam(2), &t, 5).passed);
    }

    #[test]
    fn sweeps_pass_for_small_family() {
        for m in 1..=8 {
            let p = fam(m);
            for r in run_checks(p, 20_000, &CheckKind::ALL, HSource::Closed).unwrap() {
                assert!(r.passed, "{r}");
            }
            for r in run_checks(p, 5_000, &CheckKind::ALL, HSource::Table).unwrap() {
                assert!(r.passed, "{r}");
            }
        }
    }

    #[test]
    fn frequency_rejects_bad_run() {
        let mut v = gen_increment(fam(2), 100).unwrap().values().to_vec();
        // stretch the run of h = 1 by holding a flat one step early
        v[3] -= 1;
        for x in v.iter_mut().skip(4) {
            *x -= 1;
        }
        let t = SeqTable::new(2, 1, v, SeqKind::Canonical, Engine::Nested);
        assert!(!check_frequency(fam(2), &t, HSource::Table).passed);
    }

    #[test]
    fn cross_check_small() {
        assert!(cross_check(fam(1), 1).unwrap().passed);
        assert!(cross_check(fam(4), 10_000).unwrap().passed);
    }

    #[test]
    fn report_formats() {
        let r = CheckReport::new("x", 2, (1, 5), Some(cx(3, 1, 2, "ctx")));
        assert_eq!(r.to_string(), "FAIL x m=2 n=1..5 first_failure: n=3 expected=1 actual=2 (ctx)");
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["passed"], false);
        assert_eq!(json["counterexample"]["n"], 3);
        assert_eq!(json["range"], serde_json::json!([1, 5]));
    }

    #[test]
    fn sweep_picks_smallest_failure() {
        let (c, _) = sweep(1, 100_000, |n| {
            if n % 9_000 == 0 || n == 70_001 {
                Err(cx(n, 0, 0, ""))
            } else {
                Ok(None)
            }
        });
        assert_eq!(c.unwrap().n, 9_000);
    }
}
