//! Closed-form maxima of Eve's post-selected guessing probability.
//!
//! All three functions take the blinded click probability `η` (not the
//! observed `η_avg`); [`analytic_pe_max`] does the conversion.

use core::f64::consts::PI;

// Unused whenever std is linked, which provides these methods inherently.
#[allow(unused_imports)]
use num_traits::Float;

use super::Tamper;
use crate::attack::eta_from_avg;
use crate::error::{check_probability, Error, Result};
use crate::protocol::check_n;

const BRANCH_TOL: f64 = 1e-9;
const ARCCOS_SLACK: f64 = 1e-12;

/// 2→1 encoding, with or without tampering:
/// `(1/4)(2 + cos α + s sin α)` where `s = (1−η)/(1+η)` and `α = arctan s`.
pub fn analytic_pe_max_2to1(eta: f64) -> Result<f64> {
    let eta = check_probability("eta", eta)?;
    let s = (1.0 - eta) / (1.0 + eta);
    let alpha = s.atan();
    Ok(0.25 * (2.0 + alpha.cos() + s * alpha.sin()))
}

/// 3→1 encoding with Alice's standard states:
/// `(1/6)(3 + cos α + t sin α)` where `t = √2(1−η)/(1+2η)` and `α = arctan t`.
pub fn analytic_pe_max_3to1_fixed(eta: f64) -> Result<f64> {
    let eta = check_probability("eta", eta)?;
    let t = 2.0f64.sqrt() * (1.0 - eta) / (1.0 + 2.0 * eta);
    let alpha = t.atan();
    Ok((3.0 + alpha.cos() + t * alpha.sin()) / 6.0)
}

/// Value of `η` where the tampered 3→1 curve reaches its plateau,
/// `(3√2 − 4)/2`.
pub fn tampered_breakpoint_eta() -> f64 {
    (3.0 * 2.0f64.sqrt() - 4.0) / 2.0
}

/// 3→1 encoding chosen by Eve. Below the breakpoint the optimum is
/// `(1/8)(4 + (1 + cos α) cos β + N sin α sin β)` with
/// `N = 2(1−η)/(1+2η)`, `α = arccos(1/(N²−1))`, `β = arctan(tan α / N)`;
/// above it the value is exactly 3/4.
pub fn analytic_pe_max_3to1_tampered(eta: f64) -> Result<f64> {
    let eta = check_probability("eta", eta)?;
    let breakpoint = tampered_breakpoint_eta();
    if eta > breakpoint {
        return Ok(0.75);
    }
    let curved = tampered_curved_branch(eta)?;
    if eta == breakpoint {
        if (curved - 0.75).abs() > BRANCH_TOL {
            return Err(Error::BranchViolation(
                "tampered 3->1 branches disagree at the breakpoint",
            ));
        }
        return Ok(0.75);
    }
    Ok(curved)
}

fn tampered_curved_branch(eta: f64) -> Result<f64> {
    let big_n = 2.0 * (1.0 - eta) / (1.0 + 2.0 * eta);
    let mut c = 1.0 / (big_n * big_n - 1.0);
    if !(-1.0..=1.0).contains(&c) {
        if c.abs() > 1.0 + ARCCOS_SLACK || !c.is_finite() {
            return Err(Error::BranchViolation("arccos argument outside [-1, 1]"));
        }
        c = c.clamp(-1.0, 1.0);
    }
    let alpha = c.acos();
    let beta = (alpha.tan() / big_n).atan();
    Ok(0.125 * (4.0 + (1.0 + alpha.cos()) * beta.cos() + big_n * alpha.sin() * beta.sin()))
}

/// Phases `(β₀, β₁, β₂)` of Eve's optimal 3→1 measurements against the
/// standard states.
pub fn beta_symmetry_3to1() -> (f64, f64, f64) {
    (PI / 3.0, -PI / 3.0, PI)
}

/// Polar angle of Eve's optimal measurements against the standard 3→1
/// states; the azimuths are those of [`beta_symmetry_3to1`].
pub fn alpha_3to1_fixed(eta: f64) -> Result<f64> {
    let eta = check_probability("eta", eta)?;
    // Σ_b w_eb v_b with v_b = ẑ/3 + (√2/3) d_b: z-part (1+2η)/3, in-plane part
    // of length √2(1−η)/3 along d_e.
    Ok((2.0f64.sqrt() * (1.0 - eta)).atan2(1.0 + 2.0 * eta))
}

/// Analytic bound for configuration `(n, tamper)` at observed efficiency
/// `eta_avg`. Delayed-measurement attacks share the intercept/resend curve.
pub fn analytic_pe_max(n: usize, tamper: Tamper, eta_avg: f64) -> Result<f64> {
    let eta = eta_from_avg(check_n(n)?, eta_avg)?;
    match (n, tamper) {
        (2, _) => analytic_pe_max_2to1(eta),
        (_, Tamper::FixedStates) => analytic_pe_max_3to1_fixed(eta),
        (_, Tamper::EveControlsAlice) => analytic_pe_max_3to1_tampered(eta),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn algebraic_2to1(eta: f64) -> f64 {
        let s = (1.0 - eta) / (1.0 + eta);
        (2.0 + (1.0 + s * s).sqrt()) / 4.0
    }

    fn algebraic_3to1(eta: f64) -> f64 {
        let t = 2.0f64.sqrt() * (1.0 - eta) / (1.0 + 2.0 * eta);
        (3.0 + (1.0 + t * t).sqrt()) / 6.0
    }

    #[test]
    fn two_to_one_examples() {
        assert_abs_diff_eq!(
            analytic_pe_max_2to1(0.0).unwrap(),
            (2.0 + 2.0f64.sqrt()) / 4.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(analytic_pe_max_2to1(1.0).unwrap(), 0.75, epsilon = 1e-15);
        let mid = (2.0 + (10.0f64).sqrt() / 3.0) / 4.0;
        assert_abs_diff_eq!(analytic_pe_max_2to1(0.5).unwrap(), mid, epsilon = 1e-15);
        assert_abs_diff_eq!(mid, 0.763523, epsilon = 1e-6);
    }

    #[test]
    fn three_to_one_fixed_examples() {
        assert_abs_diff_eq!(
            analytic_pe_max_3to1_fixed(0.0).unwrap(),
            (3.0 + 3.0f64.sqrt()) / 6.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(analytic_pe_max_3to1_fixed(1.0).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        let eta = ((10.0f64).sqrt() - 3.0) / 2.0;
        assert_abs_diff_eq!(analytic_pe_max_3to1_fixed(eta).unwrap(), 0.75, epsilon = 1e-14);
        assert_abs_diff_eq!((1.0 + 2.0 * eta) / 3.0, 0.3874, epsilon = 1e-4);
    }

    #[test]
    fn trig_and_algebraic_forms_agree() {
        for i in 0..=10_000 {
            let eta = i as f64 / 10_000.0;
            assert_abs_diff_eq!(analytic_pe_max_2to1(eta).unwrap(), algebraic_2to1(eta), epsilon = 1e-12);
            assert_abs_diff_eq!(
                analytic_pe_max_3to1_fixed(eta).unwrap(),
                algebraic_3to1(eta),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn tampered_examples() {
        let q3 = (3.0 + 3.0f64.sqrt()) / 6.0;
        assert_abs_diff_eq!(analytic_pe_max_3to1_tampered(0.0).unwrap(), q3, epsilon = 1e-12);
        assert_eq!(analytic_pe_max_3to1_tampered(0.5).unwrap(), 0.75);
        assert_eq!(analytic_pe_max_3to1_tampered(1.0).unwrap(), 0.75);

        let bp = tampered_breakpoint_eta();
        assert_abs_diff_eq!(bp, 0.12132, epsilon = 1e-5);
        assert_eq!(analytic_pe_max_3to1_tampered(bp).unwrap(), 0.75);
        assert_abs_diff_eq!(tampered_curved_branch(bp).unwrap(), 0.75, epsilon = 1e-9);
        let just_below = analytic_pe_max_3to1_tampered(bp - 1e-9).unwrap();
        assert!(just_below >= 0.75 && just_below - 0.75 < 1e-6);
    }

    #[test]
    fn tampered_plateau_starts_at_sqrt2_minus_1() {
        let eta_avg_edge = (1.0 + 2.0 * tampered_breakpoint_eta()) / 3.0;
        assert_abs_diff_eq!(eta_avg_edge, 2.0f64.sqrt() - 1.0, epsilon = 1e-15);
    }

    #[test]
    fn curves_are_non_increasing() {
        for (n, tamper) in [
            (2, Tamper::FixedStates),
            (3, Tamper::FixedStates),
            (3, Tamper::EveControlsAlice),
        ] {
            let lo = 1.0 / n as f64;
            let mut prev = f64::INFINITY;
            let steps = ((1.0 - lo) / 1e-3).ceil() as usize;
            for i in 0..=steps {
                let x = (lo + i as f64 * 1e-3).min(1.0);
                let p = analytic_pe_max(n, tamper, x).unwrap();
                assert!(p <= prev + 1e-15, "n={n} {tamper:?} at {x}");
                prev = p;
            }
        }
    }

    #[test]
    fn tampering_never_hurts_eve() {
        for i in 0..=1000 {
            let x = 1.0 / 3.0 + i as f64 * (2.0 / 3.0) / 1000.0;
            let fixed = analytic_pe_max(3, Tamper::FixedStates, x).unwrap();
            let tampered = analytic_pe_max(3, Tamper::EveControlsAlice, x).unwrap();
            assert!(tampered >= fixed - 1e-12);
        }
        let left_f = analytic_pe_max(3, Tamper::FixedStates, 1.0 / 3.0).unwrap();
        let left_t = analytic_pe_max(3, Tamper::EveControlsAlice, 1.0 / 3.0).unwrap();
        assert_abs_diff_eq!(left_f, left_t, epsilon = 1e-9);
        assert_abs_diff_eq!(left_f, 0.788675, epsilon = 1e-6);
    }

    #[test]
    fn domain_errors() {
        assert!(analytic_pe_max_2to1(-0.1).is_err());
        assert!(analytic_pe_max_3to1_fixed(1.1).is_err());
        assert!(analytic_pe_max_3to1_tampered(f64::NAN).is_err());
        assert!(analytic_pe_max(2, Tamper::FixedStates, 0.4).is_err());
        assert!(analytic_pe_max(4, Tamper::FixedStates, 0.5).is_err());
    }
}
