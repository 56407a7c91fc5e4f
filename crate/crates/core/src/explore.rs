//! Variants of the canonical build: the zero-indexed start `a(0) = 0`,
//! other initial values, and other run-length rules for `h`.
//!
//! Nothing here predicts outcomes. A variant either builds or escapes, and
//! a built table is classified by what it shows.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{h0_closed, FamilyParams};
use crate::engines::{nested_build, AffineRule, Engine, EngineError, Escape, SeqKind, SeqTable};
use crate::verify::{CheckReport, Counterexample};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExploreError {
    #[error("start index must be 0 or 1 (got {0})")]
    BadStartIndex(i64),
    #[error("run-length rule {p}k+{q} has q < 1, so some value never appears")]
    BadRule { p: u64, q: u64 },
    #[error("zero-indexed build disagrees with n - h0(n) at n = {n}: built {built}, closed form {closed}")]
    ClosedFormMismatch { n: i64, built: i64, closed: i64 },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantSpec {
    pub m: u32,
    pub initial_value: i64,
    pub start_index: i64,
    pub frequency_rule: Option<AffineRule>,
}

impl VariantSpec {
    pub fn canonical(params: FamilyParams) -> Self {
        Self { m: params.m(), initial_value: 1, start_index: 1, frequency_rule: None }
    }

    pub fn zero_indexed(params: FamilyParams) -> Self {
        Self { m: params.m(), initial_value: 0, start_index: 0, frequency_rule: None }
    }

    /// The stated rule, or `N_k = m·k + 1`.
    pub fn rule(&self) -> AffineRule {
        self.frequency_rule.unwrap_or(AffineRule { p: self.m as u64, q: 1 })
    }

    fn validate(&self) -> Result<FamilyParams, ExploreError> {
        if self.start_index != 0 && self.start_index != 1 {
            return Err(ExploreError::BadStartIndex(self.start_index));
        }
        let r = self.rule();
        if r.q < 1 {
            return Err(ExploreError::BadRule { p: r.p, q: r.q });
        }
        FamilyParams::new(self.m).map_err(|e| ExploreError::Engine(e.into()))
    }
}

/// Outcome of a variant build.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantOutcome {
    Built(SeqTable),
    /// An iterate fell below the start index while computing `a(n+1)`.
    EscapedLow(Escape),
    /// An iterate pointed past the prefix built so far.
    EscapedHigh(Escape),
}

/// `a(0) = 0` and the nested rule applied from `n = 0`, giving
/// `a(0..=n_max)`. The `n = 0` step reads `a⁽ᵐ⁾(0) = a⁽ᵐ⁺¹⁾(0) = 0`, so
/// `a(1) = 0`. The result is compared against `n − h⁽⁰⁾(n)` at every index.
pub fn gen_zero_indexed(params: FamilyParams, n_max: u64) -> Result<SeqTable, ExploreError> {
    if n_max < 1 {
        return Err(EngineError::EmptyTable(n_max).into());
    }
    let values = nested_build(params.m(), 0, 0, n_max as i64).map_err(EngineError::from)?;
    for (n, &v) in values.iter().enumerate() {
        let closed = n as i64 - h0_closed(params, n as u64) as i64;
        if v != closed {
            return Err(ExploreError::ClosedFormMismatch { n: n as i64, built: v, closed });
        }
    }
    Ok(SeqTable::new(params.m(), 0, values, SeqKind::ZeroIndexed, Engine::Nested))
}

/// Nested build from `spec.initial_value` at `spec.start_index` through
/// index `n_max`.
pub fn gen_variant(spec: &VariantSpec, n_max: u64) -> Result<VariantOutcome, ExploreError> {
    let params = spec.validate()?;
    if n_max < spec.start_index as u64 {
        return Err(EngineError::EmptyTable(n_max).into());
    }
    let kind = if *spec == VariantSpec::canonical(params) {
        SeqKind::Canonical
    } else if *spec == VariantSpec::zero_indexed(params) {
        SeqKind::ZeroIndexed
    } else {
        SeqKind::Variant { initial_value: spec.initial_value, rule: spec.rule() }
    };
    Ok(match nested_build(spec.m, spec.start_index, spec.initial_value, n_max as i64) {
        Ok(values) => VariantOutcome::Built(SeqTable::new(
            spec.m,
            spec.start_index,
            values,
            kind,
            Engine::Nested,
        )),
        Err(e) if e.is_low() => VariantOutcome::EscapedLow(e),
        Err(e) => VariantOutcome::EscapedHigh(e),
    })
}

/// `a(n) = n − g(n)` where `g` starts at 0 on `start_index` and each value
/// `k` occupies a run of `rule.run_length(k)` consecutive indices. With the
/// canonical rule this is the canonical (or zero-indexed) solution; other
/// rules give candidates for [`check_recurrence`].
pub fn gen_k_appearance(
    rule: AffineRule,
    m: u32,
    start_index: i64,
    n_max: u64,
) -> Result<SeqTable, ExploreError> {
    if rule.q < 1 {
        return Err(ExploreError::BadRule { p: rule.p, q: rule.q });
    }
    if start_index != 0 && start_index != 1 {
        return Err(ExploreError::BadStartIndex(start_index));
    }
    let mut values = Vec::new();
    let (mut k, mut left) = (0u64, rule.run_length(0));
    for n in start_index..=n_max as i64 {
        if left == 0 {
            k += 1;
            left = rule.run_length(k);
        }
        values.push(n - k as i64);
        left -= 1;
    }
    let kind = SeqKind::Variant { initial_value: values.first().copied().unwrap_or(0), rule };
    Ok(SeqTable::new(m, start_index, values, kind, Engine::Increment))
}

/// Whether `a(n+1) = n − a⁽ᵐ⁾(n) + a⁽ᵐ⁺¹⁾(n)` holds across `table`. An
/// iterate leaving the table counts as a failure.
pub fn check_recurrence(table: &SeqTable, m: u32) -> CheckReport {
    let lo = table.start_index();
    let hi = table.end_index();
    let mut first = None;
    'outer: for n in lo..hi {
        let mut x = n;
        for j in 0..=m {
            match table.get(x) {
                Some(v) if j < m => x = v,
                Some(v) => {
                    let rhs = n - x + v;
                    let lhs = table.get(n + 1).expect("n + 1 <= hi");
                    if lhs != rhs {
                        first = Some(Counterexample {
                            n: n + 1,
                            expected: rhs as i128,
                            actual: lhs as i128,
                            context: format!("a^(m)(n)={x} at n={n}"),
                        });
                        break 'outer;
                    }
                }
                None => {
                    first = Some(Counterexample {
                        n,
                        expected: 0,
                        actual: x as i128,
                        context: format!("iterate j={j} left the table"),
                    });
                    break 'outer;
                }
            }
        }
    }
    CheckReport::new("recurrence", m, (lo, hi), first)
}

/// Run-length tally of `n − a(n)` over a table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyProfile {
    /// `(value, multiplicity)` in order of first appearance.
    pub counts: Vec<(i64, u64)>,
    /// The last run touches the table end and may continue beyond it.
    pub last_incomplete: bool,
}

impl FrequencyProfile {
    pub fn of(table: &SeqTable) -> Self {
        let mut counts: Vec<(i64, u64)> = Vec::new();
        let mut slot: HashMap<i64, usize> = HashMap::new();
        for (n, a) in table.iter() {
            let h = n - a;
            let i = *slot.entry(h).or_insert_with(|| {
                counts.push((h, 0));
                counts.len() - 1
            });
            counts[i].1 += 1;
        }
        let last_incomplete = !counts.is_empty();
        Self { counts, last_incomplete }
    }

    /// Multiplicities of the runs known to be complete.
    pub fn complete(&self) -> &[(i64, u64)] {
        let n = self.counts.len() - usize::from(self.last_incomplete);
        &self.counts[..n]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub slow_growing: bool,
    pub profile: FrequencyProfile,
    pub matches_affine_rule: Option<AffineRule>,
}

impl Classification {
    /// Structured records in the verifier's report format: slow growth, and
    /// whether the profile follows the variant's run-length rule.
    pub fn to_reports(&self, spec: &VariantSpec, table: &SeqTable) -> Vec<CheckReport> {
        let range = (table.start_index(), table.end_index());
        let growth = CheckReport::new(
            "explore.slow_growth",
            spec.m,
            range,
            (!self.slow_growing).then(|| Counterexample {
                n: first_jump(table).unwrap_or(range.0),
                expected: 1,
                actual: 0,
                context: "consecutive difference outside {0, 1}".into(),
            }),
        );
        let want = spec.rule();
        let rule_fail = match self.matches_affine_rule {
            Some(r) if r == want => None,
            Some(r) => Some(Counterexample {
                n: range.0,
                expected: want.p as i128,
                actual: r.p as i128,
                context: format!("runs follow {}k+{}, not {}k+{}", r.p, r.q, want.p, want.q),
            }),
            None => Some(Counterexample {
                n: range.0,
                expected: want.p as i128,
                actual: -1,
                context: "runs of n - a(n) follow no affine rule".into(),
            }),
        };
        let mut counts = std::collections::BTreeMap::new();
        counts.insert("complete_runs".to_string(), self.profile.complete().len() as u64);
        let rule = CheckReport::new(format!("explore.rule[{}k+{}]", want.p, want.q), spec.m, range, rule_fail)
            .with_counts(counts);
        vec![growth, rule]
    }
}

fn first_jump(table: &SeqTable) -> Option<i64> {
    table
        .values()
        .windows(2)
        .position(|w| !matches!(w[1] - w[0], 0 | 1))
        .map(|i| table.start_index() + i as i64)
}

/// Slow growth, the run profile of `n − a(n)`, and the affine rule `p·k + q`
/// that every complete run follows (fitted from the first two runs), if any.
pub fn classify(table: &SeqTable, _spec: &VariantSpec) -> Classification {
    let slow_growing = first_jump(table).is_none();
    let profile = FrequencyProfile::of(table);
    let matches_affine_rule = if slow_growing { fit_rule(&profile) } else { None };
    Classification { slow_growing, profile, matches_affine_rule }
}

fn fit_rule(profile: &FrequencyProfile) -> Option<AffineRule> {
    let runs = profile.complete();
    if runs.len() < 2 {
        return None;
    }
    // the values must be 0, 1, 2, ... for "the k-th value" to mean k
    if runs.iter().enumerate().any(|(k, &(v, _))| v != k as i64) {
        return None;
    }
    let q = runs[0].1;
    let p = runs[1].1.checked_sub(q)?;
    if q < 1 {
        return None;
    }
    let rule = AffineRule { p, q };
    runs.iter()
        .enumerate()
        .all(|(k, &(_, mult))| mult == rule.run_length(k as u64))
        .then_some(rule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engines::gen_nested;

    fn fam(m: u32) -> FamilyParams {
        FamilyParams::new(m).unwrap()
    }

    #[test]
    fn zero_indexed_examples() {
        let t = gen_zero_indexed(fam(2), 5).unwrap();
        assert_eq!(t.values(), &[0, 0, 1, 2, 2, 3]);
        for m in 1..=8 {
            let t = gen_zero_indexed(fam(m), 3).unwrap();
            assert_eq!(t.get(0), Some(0));
            assert_eq!(t.get(1), Some(0));
        }
        assert!(gen_zero_indexed(fam(1), 0).is_err());
    }

    #[test]
    fn zero_indexed_sweep() {
        for m in 1..=8 {
            gen_zero_indexed(fam(m), 10_000).unwrap();
        }
    }

    #[test]
    fn canonical_variant_is_canonical() {
        for m in 1..=8 {
            let p = fam(m);
            let VariantOutcome::Built(t) = gen_variant(&VariantSpec::canonical(p), 3000).unwrap() else {
                panic!("canonical build escaped");
            };
            assert_eq!(t, gen_nested(p, 3000).unwrap());
        }
    }

    #[test]
    fn zero_indexed_variant_matches() {
        let p = fam(2);
        let VariantOutcome::Built(t) = gen_variant(&VariantSpec::zero_indexed(p), 500).unwrap() else {
            panic!()
        };
        assert!(t.same_values(&gen_zero_indexed(p, 500).unwrap()));
        assert_eq!(t.kind(), SeqKind::ZeroIndexed);
    }

    #[test]
    fn large_initial_value_escapes_high() {
        let spec = VariantSpec { m: 1, initial_value: 5, start_index: 1, frequency_rule: None };
        assert!(matches!(gen_variant(&spec, 50).unwrap(), VariantOutcome::EscapedHigh(_)));
        let spec = VariantSpec { initial_value: -2, ..spec };
        assert!(matches!(gen_variant(&spec, 50).unwrap(), VariantOutcome::EscapedLow(_)));
    }

    #[test]
    fn spec_validation() {
        let spec = VariantSpec { m: 1, initial_value: 1, start_index: 2, frequency_rule: None };
        assert_eq!(gen_variant(&spec, 10), Err(ExploreError::BadStartIndex(2)));
        let spec = VariantSpec { start_index: 1, frequency_rule: Some(AffineRule { p: 1, q: 0 }), ..spec };
        assert!(matches!(gen_variant(&spec, 10), Err(ExploreError::BadRule { .. })));
    }

    #[test]
    fn classify_canonical() {
        for m in 1..=8 {
            let p = fam(m);
            let t = gen_nested(p, 20_000).unwrap();
            let c = classify(&t, &VariantSpec::canonical(p));
            assert!(c.slow_growing);
            assert_eq!(c.matches_affine_rule, Some(AffineRule { p: m as u64, q: 1 }));
            assert!(c.to_reports(&VariantSpec::canonical(p), &t).iter().all(|r| r.passed));
        }
    }

    #[test]
    fn classify_zero_indexed() {
        let p = fam(2);
        let t = gen_zero_indexed(p, 2000).unwrap();
        let c = classify(&t, &VariantSpec::zero_indexed(p));
        assert!(c.slow_growing);
        assert_eq!(&c.profile.counts[..4], &[(0, 1), (1, 3), (2, 5), (3, 7)]);
        assert_eq!(c.matches_affine_rule, Some(AffineRule { p: 2, q: 1 }));
    }

    #[test]
    fn classify_non_monotone() {
        let t = SeqTable::new(1, 1, vec![1, 3, 2, 2, 5], SeqKind::Canonical, Engine::Nested);
        let c = classify(&t, &VariantSpec::canonical(fam(1)));
        assert!(!c.slow_growing);
        assert_eq!(c.matches_affine_rule, None);
        assert!(!c.to_reports(&VariantSpec::canonical(fam(1)), &t)[0].passed);
    }

    #[test]
    fn k_appearance_canonical_rule_reproduces_solution() {
        for m in 1..=6 {
            let p = fam(m);
            let t = gen_k_appearance(AffineRule::canonical(p), m, 1, 5000).unwrap();
            assert!(t.same_values(&gen_nested(p, 5000).unwrap()));
            assert!(check_recurrence(&t, m).passed);
            let z = gen_k_appearance(AffineRule::canonical(p), m, 0, 5000).unwrap();
            assert!(z.same_values(&gen_zero_indexed(p, 5000).unwrap()));
        }
    }

    #[test]
    fn k_appearance_other_rule_breaks_recurrence() {
        // runs 2k+2 are not the solution of the m = 2 recurrence
        let t = gen_k_appearance(AffineRule { p: 2, q: 2 }, 2, 1, 500).unwrap();
        let r = check_recurrence(&t, 2);
        assert!(!r.passed);
        let c = classify(&t, &VariantSpec { m: 2, initial_value: 1, start_index: 1, frequency_rule: None });
        assert_eq!(c.matches_affine_rule, Some(AffineRule { p: 2, q: 2 }));
    }
}
