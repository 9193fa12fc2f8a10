//! Elimination of the distribution component: the first-order pair for
//! `(a, b)` collapses to one divergence-form second-order equation for `a`.
//!
//! With tangent-frame coefficients `AX = pX + qY`, `AY = rX + sY`, the two
//! curvature pairings give `grad b` in terms of `grad a` and the data:
//! `b_x = p a_x + q a_y + F1` and `b_y = r a_x + s a_y + F2` with
//! `F1 = Q1 - p P1 - q P2`, `F2 = Q2 - r P1 - s P2`.  Equality of the
//! cross derivatives of `b` is the scalar equation; its principal symbol
//! `r k1^2 + (s - p) k1 k2 - q k2^2` has no real zero exactly when the
//! discriminant `(p - s)^2 + 4qr` is negative.

use crate::disc::admissibility::EllipticCoefficients;
use crate::disc::map::OneFormField;
use crate::error::{Error, Result};

/// How many offending elements an ellipticity-loss error lists.
const MAX_SAMPLE: usize = 8;

/// The scalar divergence-form problem produced by the elimination.
#[derive(Debug, Clone)]
pub struct ReducedProblem {
    /// `(p, q, r, s)` per element.
    pub main: Vec<[f64; 4]>,
    /// Load components per element.
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    /// `+1` when `r > 0`, `-1` when `r < 0`; the assembled system is
    /// multiplied through so its symmetric part is positive definite.
    pub sign: f64,
    pub discriminant_range: (f64, f64),
}

/// Whether the principal symbol has a real characteristic direction, by
/// direct root computation.
pub fn symbol_has_real_zero(p: f64, q: f64, r: f64, s: f64) -> bool {
    // Roots of r t^2 + (s - p) t - q = 0 with t = k1/k2, plus the k2 = 0
    // direction, which is characteristic exactly when r = 0.
    if r == 0.0 {
        return true;
    }
    (s - p) * (s - p) + 4.0 * r * q >= 0.0
}

pub fn eliminate_to_scalar(
    coeffs: &EllipticCoefficients,
    p_field: &OneFormField,
    q_field: &OneFormField,
) -> Result<ReducedProblem> {
    let n = coeffs.len();
    if p_field.len() != n || q_field.len() != n {
        return Err(Error::Domain(format!(
            "data on {} and {} elements for {} coefficient elements",
            p_field.len(),
            q_field.len(),
            n
        )));
    }
    let mut bad = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    for (e, &d) in coeffs.discriminant.iter().enumerate() {
        if !(d < 0.0) {
            if bad.len() < MAX_SAMPLE {
                bad.push(e);
            }
            worst = worst.max(d);
        }
    }
    if !bad.is_empty() {
        let count = coeffs
            .discriminant
            .iter()
            .filter(|d| !(**d < 0.0))
            .count();
        return Err(Error::EllipticityLoss {
            count,
            worst,
            sample: bad,
        });
    }

    let mut f1 = vec![0.0; n];
    let mut f2 = vec![0.0; n];
    let mut r_min = f64::INFINITY;
    let mut r_max = f64::NEG_INFINITY;
    for e in 0..n {
        let [p, q, r, s] = coeffs.main[e];
        f1[e] = q_field.dx[e] - p * p_field.dx[e] - q * p_field.dy[e];
        f2[e] = q_field.dy[e] - r * p_field.dx[e] - s * p_field.dy[e];
        r_min = r_min.min(r);
        r_max = r_max.max(r);
    }
    // A negative discriminant forces qr < 0 on each element, so r cannot
    // vanish; a sign change across elements would make one global system
    // impossible to orient.
    if r_min < 0.0 && r_max > 0.0 {
        return Err(Error::Domain(format!(
            "coefficient r changes sign across elements ({r_min} to {r_max})"
        )));
    }
    Ok(ReducedProblem {
        main: coeffs.main.clone(),
        f1,
        f2,
        sign: if r_min > 0.0 { 1.0 } else { -1.0 },
        discriminant_range: coeffs.discriminant_range(),
    })
}
