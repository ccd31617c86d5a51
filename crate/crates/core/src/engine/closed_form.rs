//! Exact solution of the consolidating two-component model under congruent
//! teaching, used as an independent accuracy oracle for the Euler engine.

use crate::models::TwoCompT2Params;

/// `(e^(mu t) - 1) / mu`, with the confluent limit `t` at `mu = 0`.
#[inline]
fn phi(mu: f64, t: f64) -> f64 {
    if mu == 0.0 {
        t
    } else {
        (mu * t).exp_m1() / mu
    }
}

/// State of the consolidating two-component model at time `t` under a lesson
/// that runs throughout `[0, t]` with the congruent policy (constant gap
/// `u - z = cutoff_c`).
///
/// The system is linear with constant coefficients:
/// `dz1/dt = alpha1 * C - (alpha2 + gamma1) * z1` and
/// `dz2/dt = alpha2 * z1 - gamma2 * z2`, solved exactly by exponentials;
/// the confluent case `alpha2 + gamma1 = gamma2` is handled by the limit.
pub fn closed_form_t2_congruent(
    params: &TwoCompT2Params,
    cutoff_c: f64,
    z1_init: f64,
    z2_init: f64,
    t: f64,
) -> (f64, f64) {
    let drive = params.alpha1 * cutoff_c;
    let lambda1 = params.alpha2 + params.gamma1;
    let lambda2 = params.gamma2;

    if lambda1 == 0.0 {
        // alpha2 = gamma1 = 0: weak knowledge grows linearly and nothing
        // consolidates.
        let z1 = z1_init + drive * t;
        let z2 = z2_init * (-lambda2 * t).exp();
        return (z1, z2);
    }

    let z1_steady = drive / lambda1;
    let z1 = z1_steady + (z1_init - z1_steady) * (-lambda1 * t).exp();
    // Integrating factor: z2(t) = e^(-l2 t) (z2_0 + a2 * int_0^t e^(l2 s) z1(s) ds)
    let integral = z1_steady * phi(lambda2, t) + (z1_init - z1_steady) * phi(lambda2 - lambda1, t);
    let z2 = (-lambda2 * t).exp() * (z2_init + params.alpha2 * integral);
    (z1, z2)
}
