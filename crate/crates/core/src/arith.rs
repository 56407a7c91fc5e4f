//! Exact integer arithmetic for the closed forms.
//!
//! Everything here is integer-only: square roots come from a Newton
//! iteration seeded above the root, and every floor of the form
//! `⌊(A + √D) / B⌋` is evaluated as `⌊(A + ⌊√D⌋) / B⌋`, which is exact for
//! integer `A` and positive integer `B`.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("the family parameter m must be at least 1 (got {0})")]
    InvalidFamily(u64),
    #[error("index n must be at least 1 (got {0})")]
    IndexBelowOne(u64),
    #[error("negative input {0} is outside the domain")]
    NegativeInput(BigInt),
}

/// Selects one member of the recurrence family `a(n+1) = n - a^(m)(n) + a^(m+1)(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FamilyParams {
    m: u32,
}

impl FamilyParams {
    pub fn new(m: u32) -> Result<Self, ArithError> {
        if m == 0 {
            return Err(ArithError::InvalidFamily(0));
        }
        Ok(Self { m })
    }

    #[inline]
    pub fn m(self) -> u32 {
        self.m
    }

    /// Run length `N_k = m·k + 1` of the value `k` in `h`.
    #[inline]
    pub fn frequency(self, k: u64) -> u128 {
        self.m as u128 * k as u128 + 1
    }
}

/// Integer square root, `⌊√x⌋`.
pub trait FloorSqrt: Sized {
    fn floor_sqrt(&self) -> Self;
}

impl FloorSqrt for u128 {
    fn floor_sqrt(&self) -> u128 {
        let x = *self;
        if x < 2 {
            return x;
        }
        // 2^ceil(bits/2) >= sqrt(x); from above, Newton descends monotonically
        // until the first step that fails to decrease.
        let bits = 128 - x.leading_zeros();
        let mut r: u128 = 1 << bits.div_ceil(2);
        loop {
            let next = (r + x / r) >> 1;
            if next >= r {
                return r;
            }
            r = next;
        }
    }
}

impl FloorSqrt for u64 {
    fn floor_sqrt(&self) -> u64 {
        (*self as u128).floor_sqrt() as u64
    }
}

impl FloorSqrt for BigUint {
    fn floor_sqrt(&self) -> BigUint {
        let x = self;
        if x < &BigUint::from(2u8) {
            return x.clone();
        }
        let bits = x.bits();
        let mut r = BigUint::one() << bits.div_ceil(2);
        loop {
            let next: BigUint = (&r + x / &r) >> 1u32;
            if next >= r {
                return r;
            }
            r = next;
        }
    }
}

/// `⌊√x⌋` for a signed arbitrary-width input; negative inputs are rejected.
pub fn isqrt_signed(x: &BigInt) -> Result<BigUint, ArithError> {
    match x.sign() {
        Sign::Minus => Err(ArithError::NegativeInput(x.clone())),
        _ => Ok(x.magnitude().floor_sqrt()),
    }
}

/// `⌈√x⌉`.
pub fn ceil_sqrt(x: u64) -> u64 {
    let s = x.floor_sqrt();
    if s * s == x {
        s
    } else {
        s + 1
    }
}

/// `⌊(a + √d) / b⌋` for `b > 0`, via `⌊√d⌋`.
pub fn floor_add_sqrt_div(a: i128, d: u128, b: u128) -> i128 {
    assert!(b > 0, "divisor must be positive");
    let s = d.floor_sqrt() as i128;
    (a + s).div_euclid(b as i128)
}

/// `k·(k−1)/2` with the even factor halved before multiplying.
#[inline]
fn half_pronic(k: u128) -> u128 {
    if k == 0 {
        0
    } else if k.is_multiple_of(2) {
        (k / 2) * (k - 1)
    } else {
        k * ((k - 1) / 2)
    }
}

/// Generalized `m`-polygonal number `m·k(k−1)/2 + k`.
///
/// Exact for every `k` whose result fits in `u128` (always the case for
/// `k < 2^47`); panics on overflow. [`t_orig_big`] has no width limit.
pub fn t_orig(params: FamilyParams, k: u64) -> u128 {
    half_pronic(k as u128)
        .checked_mul(params.m as u128)
        .and_then(|v| v.checked_add(k as u128))
        .expect("t_orig overflowed u128")
}

pub fn t_orig_big(params: FamilyParams, k: &BigUint) -> BigUint {
    if k.is_zero() {
        return BigUint::zero();
    }
    let km1 = k - 1u32;
    let half = if k.is_even() { (k >> 1u32) * &km1 } else { k * (&km1 >> 1u32) };
    half * params.m + k
}

/// First index `n` with `h(n) = k`, i.e. `t_orig(k) + 1`.
pub fn t_star(params: FamilyParams, k: u64) -> u128 {
    t_orig(params, k) + 1
}

/// `(m−2)² + 8·m·x`, the discriminant shared by `h` and `h⁽⁰⁾`.
#[inline]
fn discriminant(m: u32, x: u64) -> u128 {
    let c = m as i128 - 2;
    (c * c) as u128 + 8 * m as u128 * x as u128
}

/// The zero-indexed appearance sequence `h⁽⁰⁾(x)`: the number of `k ≥ 1`
/// with `t_orig(k) ≤ x`.
pub fn h0_closed(params: FamilyParams, x: u64) -> u64 {
    let m = params.m;
    floor_add_sqrt_div(m as i128 - 2, discriminant(m, x), 2 * m as u128) as u64
}

/// `h(n) = ⌊(m − 2 + √((m−2)² + 8m(n−1))) / 2m⌋`; `h(1) = 0` and each
/// `k` appears `m·k + 1` times.
pub fn h_closed(params: FamilyParams, n: u64) -> Result<u64, ArithError> {
    if n < 1 {
        return Err(ArithError::IndexBelowOne(n));
    }
    Ok(h0_closed(params, n - 1))
}

/// `a(n) = n − h(n)`.
pub fn a_closed(params: FamilyParams, n: u64) -> Result<u64, ArithError> {
    Ok(n - h_closed(params, n)?)
}

/// `h⁽⁰⁾` over arbitrary-width integers; negative arguments are rejected.
pub fn h0_closed_big(params: FamilyParams, x: &BigInt) -> Result<BigUint, ArithError> {
    if x.sign() == Sign::Minus {
        return Err(ArithError::NegativeInput(x.clone()));
    }
    let m = BigInt::from(params.m);
    let c: BigInt = &m - BigInt::from(2u8);
    let d: BigInt = &c * &c + BigInt::from(8u8) * &m * x;
    let s = BigInt::from(isqrt_signed(&d)?);
    let b: BigInt = m * BigInt::from(2u8);
    let q = (c + s).div_floor(&b);
    Ok(q.to_biguint().expect("numerator is non-negative"))
}

pub fn h_closed_big(params: FamilyParams, n: &BigInt) -> Result<BigUint, ArithError> {
    if n < &BigInt::one() {
        return Err(ArithError::NegativeInput(n.clone()));
    }
    h0_closed_big(params, &(n - BigInt::one()))
}

/// Membership in `S′ₘ = {t_orig(k) : k ≥ 1}`.
pub fn in_s_prime(params: FamilyParams, x: u64) -> bool {
    if x == 0 {
        return false;
    }
    let k = h0_closed(params, x);
    k >= 1 && t_orig(params, k) == x as u128
}

/// Boundary indices of `h` up to a bound.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundarySchedule {
    m: u32,
    t_orig: Vec<u128>,
    t_star: Vec<u128>,
}

impl BoundarySchedule {
    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn t_orig(&self) -> &[u128] {
        &self.t_orig
    }

    pub fn t_star(&self) -> &[u128] {
        &self.t_star
    }

    pub fn len(&self) -> usize {
        self.t_star.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_star.is_empty()
    }

    /// `N_k = m·k + 1`.
    pub fn frequency(&self, k: u64) -> u128 {
        self.m as u128 * k as u128 + 1
    }

    /// `h(n)` by binary search over `t_star`, or `None` when `n` lies past
    /// the last stored boundary.
    pub fn h_of(&self, n: u64) -> Option<u64> {
        if n < 1 {
            return None;
        }
        let n = n as u128;
        let idx = self.t_star.partition_point(|&t| t <= n);
        if idx == self.t_star.len() {
            None
        } else {
            Some(idx as u64 - 1)
        }
    }
}

/// Every `T★ₖ ≤ max_n`, plus the first boundary beyond it so that `h(max_n)`
/// is decidable from the schedule alone.
pub fn boundary_schedule(params: FamilyParams, max_n: u64) -> BoundarySchedule {
    let mut t_orig_v = Vec::new();
    let mut t_star_v = Vec::new();
    for k in 0u64.. {
        let t = t_orig(params, k);
        t_orig_v.push(t);
        t_star_v.push(t + 1);
        if t + 1 > max_n as u128 {
            break;
        }
    }
    BoundarySchedule { m: params.m, t_orig: t_orig_v, t_star: t_star_v }
}
