//! Exact computation and bounded verification of the nested recurrence
//! family `a(n+1) = n − a⁽ᵐ⁾(n) + a⁽ᵐ⁺¹⁾(n)`, `a(1) = 1`, whose solution is
//! `a(n) = n − h(n)` with `h` the sequence in which each `k ≥ 0` appears
//! `m·k + 1` times.

pub mod arith;
pub mod engines;
pub mod explore;
pub mod oeis;
pub mod sums;
pub mod verify;

pub use arith::{
    a_closed, boundary_schedule, h0_closed, h_closed, in_s_prime, t_orig, t_star, ArithError,
    BoundarySchedule, FamilyParams, FloorSqrt,
};
pub use engines::{gen_closed, gen_increment, gen_nested, iterate, Engine, EngineError, SeqKind, SeqTable};
pub use verify::{CheckReport, Counterexample, HSource};
