//! Independent oracles shared by the integration tests. None of these call
//! into the library's arithmetic.
#![allow(dead_code)]

use std::path::PathBuf;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

/// `⌊√x⌋` by bisection.
pub fn isqrt_bisect(x: u128) -> u128 {
    let (mut lo, mut hi) = (0u128, 1u128 << 64);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        match mid.checked_mul(mid) {
            Some(sq) if sq <= x => lo = mid,
            _ => hi = mid,
        }
    }
    lo
}

/// `T★ₖ = 1 + m·k(k−1)/2 + k`, written out directly.
pub fn t_star_direct(m: u64, k: u64) -> u128 {
    let k = k as u128;
    1 + m as u128 * k * k.saturating_sub(1) / 2 + k
}

/// `h(n)`: the largest `k` with `T★ₖ ≤ n`, by bisection on `k`.
pub fn h_bisect(m: u64, n: u64) -> u64 {
    let (mut good, mut bad) = (0u64, 1u64 << 33);
    while bad - good > 1 {
        let mid = good + (bad - good) / 2;
        if t_star_direct(m, mid) <= n as u128 {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}

/// Nested build that evaluates `a⁽ᵐ⁾(n)` and `a⁽ᵐ⁺¹⁾(n)` as two separate
/// chains. `out[n]` is `a(n)`; `out[0]` is unused.
pub fn nested_reference(m: usize, n_max: usize) -> Vec<i64> {
    let mut a = vec![0i64; n_max + 1];
    a[1] = 1;
    let chain = |a: &[i64], start: usize, len: usize| -> usize {
        let mut x = start;
        for _ in 0..len {
            x = a[x] as usize;
        }
        x
    };
    for n in 1..n_max {
        let am = chain(&a, n, m) as i64;
        let am1 = chain(&a, n, m + 1) as i64;
        a[n + 1] = n as i64 - am + am1;
    }
    a
}

/// `S(1..=n_max)` by testing every pair `(x, y)` with `y ≤ x`.
pub fn lattice_naive(n_max: u64) -> Vec<u128> {
    let mut out = Vec::with_capacity(n_max as usize);
    let mut total = 0u128;
    for x in 1..=n_max {
        for y in 1..=x {
            if x <= y * y {
                total += 1;
            }
        }
        out.push(total);
    }
    out
}
