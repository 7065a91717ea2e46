//! Critical detection efficiency by bisection on the closed-form curves.

use super::analytic::{analytic_pe_max, tampered_breakpoint_eta};
use super::{domain, AttackKind, Tamper};
use crate::error::{Error, Result};

/// Bracket width at which bisection stops.
pub const CRITICAL_TOL: f64 = 1e-12;

/// Smallest `η_avg` at which Eve's bound no longer exceeds `pb_target`.
///
/// Every configuration has a closed-form curve (delayed measurement gives
/// Eve nothing over intercept/resend), so `kind` does not change the
/// answer. Returns the left domain edge when the whole curve is at or below
/// the target.
pub fn critical_efficiency(n: usize, tamper: Tamper, _kind: AttackKind, pb_target: f64) -> Result<f64> {
    if !pb_target.is_finite() {
        return Err(Error::NonFinite("pb_target"));
    }
    if pb_target <= 0.5 || pb_target > 1.0 {
        return Err(Error::OutOfDomain {
            what: "pb_target",
            value: pb_target,
            lo: 0.5,
            hi: 1.0,
        });
    }
    let (mut lo, mut hi) = domain(n)?;
    let curve = |x: f64| analytic_pe_max(n, tamper, x);
    if curve(lo)? <= pb_target {
        return Ok(lo);
    }
    let curve_min = curve(hi)?;
    if curve_min > pb_target {
        return Err(Error::TargetUnreachable {
            target: pb_target,
            curve_min,
        });
    }
    // Invariant: curve(lo) > target >= curve(hi).
    while hi - lo > CRITICAL_TOL {
        let mid = 0.5 * (lo + hi);
        if curve(mid)? > pb_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Where the curve becomes flat, if it does: `√2 − 1` for the tampered 3→1
/// curve.
pub fn plateau_start(n: usize, tamper: Tamper) -> Option<f64> {
    match (n, tamper) {
        (3, Tamper::EveControlsAlice) => Some((1.0 + 2.0 * tampered_breakpoint_eta()) / 3.0),
        _ => None,
    }
}
