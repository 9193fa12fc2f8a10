//! One-forms and vector fields on R^6.
//!
//! A one-form is stored through its coefficient map `x -> A(x)` with
//! `alpha = sum_i A_i(x) dx^i`. The exterior derivative is the skew matrix
//! `C_ij = d_i A_j - d_j A_i`, so that `d(alpha)(u, v) = u^T C v`. Analytic
//! derivative maps are used when supplied; otherwise central finite
//! differences with a step proportional to the local coordinate scale.

use std::sync::Arc;

use nalgebra::{Matrix6, Vector6};

use crate::error::{Error, Result};

pub type Point6 = Vector6<f64>;

/// Default relative finite-difference step for coefficient derivatives.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Tolerance on `|C + C^T|` when validating a user-supplied derivative map.
const SKEW_TOL: f64 = 1e-10;

type CoeffFn = dyn Fn(&Point6) -> Vector6<f64> + Send + Sync;
type MatrixFn = dyn Fn(&Point6) -> Matrix6<f64> + Send + Sync;
type ValueFn = dyn Fn(&Point6) -> Vector6<f64> + Send + Sync;

/// Differential one-form on R^6.
#[derive(Clone)]
pub struct OneForm {
    coeff: Arc<CoeffFn>,
    dcoeff: Option<Arc<MatrixFn>>,
    fd_step: f64,
    label: String,
}

impl OneForm {
    pub fn new(label: impl Into<String>, coeff: Arc<CoeffFn>) -> Self {
        OneForm {
            coeff,
            dcoeff: None,
            fd_step: DEFAULT_FD_STEP,
            label: label.into(),
        }
    }

    /// Attach an analytic derivative map `x -> C(x)`; `C` must be skew.
    pub fn with_dcoeff(mut self, dcoeff: Arc<MatrixFn>) -> Self {
        self.dcoeff = Some(dcoeff);
        self
    }

    pub fn with_fd_step(mut self, fd_step: f64) -> Self {
        self.fd_step = fd_step;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.dcoeff.is_some()
    }

    /// Coefficient vector at `x`.
    pub fn coeff_at(&self, x: &Point6) -> Result<Vector6<f64>> {
        let a = (self.coeff)(x);
        if a.iter().all(|t| t.is_finite()) {
            Ok(a)
        } else {
            Err(Error::NonFinite {
                context: format!("coefficients of {}", self.label),
                point: x.iter().copied().collect(),
            })
        }
    }

    /// Pairing `alpha_x(v)`.
    pub fn pair(&self, x: &Point6, v: &Vector6<f64>) -> Result<f64> {
        Ok(self.coeff_at(x)?.dot(v))
    }

    /// Exterior derivative at `x` as the skew matrix of `d(alpha)|_x`.
    pub fn exterior_at(&self, x: &Point6) -> Result<Matrix6<f64>> {
        let c = match &self.dcoeff {
            Some(d) => {
                let c = d(x);
                let skew_defect = (c + c.transpose()).amax();
                if skew_defect > SKEW_TOL * (1.0 + c.amax()) {
                    return Err(Error::Domain(format!(
                        "derivative map of {} is not skew (defect {skew_defect:.3e})",
                        self.label
                    )));
                }
                c
            }
            None => {
                let h = self.fd_step * x.amax().max(1.0);
                let mut jac = Matrix6::zeros();
                for i in 0..6 {
                    let mut xp = *x;
                    let mut xm = *x;
                    xp[i] += h;
                    xm[i] -= h;
                    let row = (self.coeff_at(&xp)? - self.coeff_at(&xm)?) / (2.0 * h);
                    for j in 0..6 {
                        jac[(i, j)] = row[j];
                    }
                }
                jac - jac.transpose()
            }
        };
        if c.iter().all(|t| t.is_finite()) {
            Ok(c)
        } else {
            Err(Error::NonFinite {
                context: format!("exterior derivative of {}", self.label),
                point: x.iter().copied().collect(),
            })
        }
    }
}

/// `d(alpha)|_x` as a skew 6x6 matrix.
pub fn exterior_derivative(form: &OneForm, x: &Point6) -> Result<Matrix6<f64>> {
    form.exterior_at(x)
}

/// Evaluate `d(alpha)(u, v)` given the skew matrix from [`exterior_derivative`].
pub fn two_form_eval(c: &Matrix6<f64>, u: &Vector6<f64>, v: &Vector6<f64>) -> f64 {
    (c * v).dot(u)
}

/// Smooth vector field on R^6.
#[derive(Clone)]
pub struct VectorField {
    value: Arc<ValueFn>,
    jacobian: Option<Arc<MatrixFn>>,
    fd_step: f64,
    label: String,
}

impl VectorField {
    pub fn new(label: impl Into<String>, value: Arc<ValueFn>) -> Self {
        VectorField {
            value,
            jacobian: None,
            fd_step: DEFAULT_FD_STEP,
            label: label.into(),
        }
    }

    /// Attach an analytic Jacobian `J_ij = d_j V_i`.
    pub fn with_jacobian(mut self, jacobian: Arc<MatrixFn>) -> Self {
        self.jacobian = Some(jacobian);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn value_at(&self, x: &Point6) -> Result<Vector6<f64>> {
        let v = (self.value)(x);
        if v.iter().all(|t| t.is_finite()) {
            Ok(v)
        } else {
            Err(Error::NonFinite {
                context: format!("vector field {}", self.label),
                point: x.iter().copied().collect(),
            })
        }
    }

    pub fn jacobian_at(&self, x: &Point6) -> Result<Matrix6<f64>> {
        match &self.jacobian {
            Some(j) => Ok(j(x)),
            None => {
                let h = self.fd_step * x.amax().max(1.0);
                let mut jac = Matrix6::zeros();
                for j in 0..6 {
                    let mut xp = *x;
                    let mut xm = *x;
                    xp[j] += h;
                    xm[j] -= h;
                    let col = (self.value_at(&xp)? - self.value_at(&xm)?) / (2.0 * h);
                    jac.set_column(j, &col);
                }
                Ok(jac)
            }
        }
    }
}

/// Lie bracket `[v, w]` at `x`, via Jacobians (analytic when available).
pub fn lie_bracket(v: &VectorField, w: &VectorField, x: &Point6) -> Result<Vector6<f64>> {
    let vx = v.value_at(x)?;
    let wx = w.value_at(x)?;
    Ok(w.jacobian_at(x)? * vx - v.jacobian_at(x)? * wx)
}

/// Constant one-form with the given coefficient vector.
pub fn constant_form(label: impl Into<String>, coeff: Vector6<f64>) -> OneForm {
    OneForm::new(label, Arc::new(move |_x: &Point6| coeff))
        .with_dcoeff(Arc::new(|_x: &Point6| Matrix6::zeros()))
}

/// Constant vector field.
pub fn constant_field(label: impl Into<String>, value: Vector6<f64>) -> VectorField {
    VectorField::new(label, Arc::new(move |_x: &Point6| value))
        .with_jacobian(Arc::new(|_x: &Point6| Matrix6::zeros()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quadratic_test_form() -> OneForm {
        // alpha = x2^2 dx1 + x1 x3 dx2 + sin(x5) dx6
        OneForm::new(
            "quadratic-test",
            Arc::new(|x: &Point6| {
                Vector6::new(x[1] * x[1], x[0] * x[2], 0.0, 0.0, 0.0, x[4].sin())
            }),
        )
    }

    fn quadratic_test_dcoeff(x: &Point6) -> Matrix6<f64> {
        let mut jac = Matrix6::zeros();
        // jac[(i, j)] = d_i A_j
        jac[(1, 0)] = 2.0 * x[1];
        jac[(0, 1)] = x[2];
        jac[(2, 1)] = x[0];
        jac[(4, 5)] = x[4].cos();
        jac - jac.transpose()
    }

    #[test]
    fn numeric_exterior_matches_analytic() {
        let form = quadratic_test_form();
        let x = Point6::new(0.3, -0.7, 1.1, 0.0, 0.4, -0.2);
        let num = form.exterior_at(&x).unwrap();
        let exact = quadratic_test_dcoeff(&x);
        // Central differences: O(fd_step^2) agreement.
        assert_relative_eq!(num, exact, epsilon = 1e-9);
    }

    #[test]
    fn exterior_is_skew() {
        let form = quadratic_test_form();
        let x = Point6::new(1.0, 2.0, -0.5, 0.1, 0.9, 0.0);
        let c = form.exterior_at(&x).unwrap();
        assert_relative_eq!(c, -c.transpose(), epsilon = 1e-14);
    }

    #[test]
    fn non_skew_dcoeff_rejected() {
        let form = quadratic_test_form()
            .with_dcoeff(Arc::new(|_x: &Point6| Matrix6::identity()));
        let err = form.exterior_at(&Point6::zeros()).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn non_finite_coefficients_rejected() {
        let form = OneForm::new(
            "blowup",
            Arc::new(|x: &Point6| Vector6::new(1.0 / x[0], 0.0, 0.0, 0.0, 0.0, 0.0)),
        );
        let err = form.coeff_at(&Point6::zeros()).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn bracket_of_constant_fields_vanishes() {
        let v = constant_field("v", Vector6::new(1.0, 0.0, 2.0, 0.0, 0.0, 0.0));
        let w = constant_field("w", Vector6::new(0.0, 1.0, 0.0, 0.0, 3.0, 0.0));
        let b = lie_bracket(&v, &w, &Point6::new(0.2, 0.4, 0.0, 0.0, 1.0, -1.0)).unwrap();
        assert_eq!(b, Vector6::zeros());
    }

    #[test]
    fn bracket_of_coordinate_scalings() {
        // v = x1 d/dx1, w = d/dx1: [v, w] = -d/dx1.
        let v = VectorField::new(
            "x1 d1",
            Arc::new(|x: &Point6| Vector6::new(x[0], 0.0, 0.0, 0.0, 0.0, 0.0)),
        );
        let w = constant_field("d1", Vector6::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0));
        let x = Point6::new(0.7, 0.0, 0.0, 0.0, 0.0, 0.0);
        let b = lie_bracket(&v, &w, &x).unwrap();
        assert_relative_eq!(b[0], -1.0, epsilon = 1e-9);
        for i in 1..6 {
            assert_relative_eq!(b[i], 0.0, epsilon = 1e-12);
        }
    }
}
