//! Built-in distributions: the holomorphic contact model on R^6, quadratic
//! normal forms from structure constants, and flat pairs used as
//! counterexamples in checks and tests.
//!
//! Coordinates are ordered `(x1, x2, y1, y2, z1, z2)` throughout.

use std::sync::Arc;

use nalgebra::{Matrix6, Vector6};

use crate::error::{Error, Result};
use crate::geometry::distribution::CorankTwoDistribution;
use crate::geometry::form::{constant_field, OneForm, Point6, VectorField};

/// Index helpers for the coordinate order `(x1, x2, y1, y2, z1, z2)`.
pub const IX1: usize = 0;
pub const IX2: usize = 1;
pub const IY1: usize = 2;
pub const IY2: usize = 3;
pub const IZ1: usize = 4;
pub const IZ2: usize = 5;

/// The holomorphic contact model:
/// `alpha1 = dz1 - (y1 dx1 - y2 dx2)`, `alpha2 = dz2 - (y2 dx1 + y1 dx2)`,
/// with Reeb directions `d/dz1`, `d/dz2`. Fat everywhere.
pub fn holomorphic_contact_model() -> CorankTwoDistribution {
    let alpha1 = OneForm::new(
        "alpha1",
        Arc::new(|x: &Point6| Vector6::new(-x[IY1], x[IY2], 0.0, 0.0, 1.0, 0.0)),
    )
    .with_dcoeff(Arc::new(|_x: &Point6| {
        let mut jac = Matrix6::zeros();
        jac[(IY1, IX1)] = -1.0;
        jac[(IY2, IX2)] = 1.0;
        jac - jac.transpose()
    }));
    let alpha2 = OneForm::new(
        "alpha2",
        Arc::new(|x: &Point6| Vector6::new(-x[IY2], -x[IY1], 0.0, 0.0, 0.0, 1.0)),
    )
    .with_dcoeff(Arc::new(|_x: &Point6| {
        let mut jac = Matrix6::zeros();
        jac[(IY2, IX1)] = -1.0;
        jac[(IY1, IX2)] = -1.0;
        jac - jac.transpose()
    }));
    CorankTwoDistribution::new("holomorphic_contact", alpha1, alpha2).with_reeb(
        constant_field("reeb1", Vector6::ith(IZ1, 1.0)),
        constant_field("reeb2", Vector6::ith(IZ2, 1.0)),
    )
}

/// The analytic horizontal frame of the model, in the order
/// `(X1, X2, Y1, Y2)`. Useful for exercising the connecting automorphism.
pub fn model_frame_fields() -> [VectorField; 4] {
    [
        VectorField::new(
            "X1",
            Arc::new(|x: &Point6| {
                let mut v = Vector6::ith(IX1, 1.0);
                v[IZ1] = x[IY1];
                v[IZ2] = x[IY2];
                v
            }),
        )
        .with_jacobian(Arc::new(|_x: &Point6| {
            let mut jac = Matrix6::zeros();
            jac[(IZ1, IY1)] = 1.0;
            jac[(IZ2, IY2)] = 1.0;
            jac
        })),
        VectorField::new(
            "X2",
            Arc::new(|x: &Point6| {
                let mut v = Vector6::ith(IX2, 1.0);
                v[IZ1] = -x[IY2];
                v[IZ2] = x[IY1];
                v
            }),
        )
        .with_jacobian(Arc::new(|_x: &Point6| {
            let mut jac = Matrix6::zeros();
            jac[(IZ1, IY2)] = -1.0;
            jac[(IZ2, IY1)] = 1.0;
            jac
        })),
        constant_field("Y1", Vector6::ith(IY1, 1.0)),
        constant_field("Y2", Vector6::ith(IY2, 1.0)),
    ]
}

/// Integrable counterexample `(dz1, dz2)`: both curvature forms vanish.
pub fn integrable_pair() -> CorankTwoDistribution {
    CorankTwoDistribution::new(
        "integrable_pair",
        OneForm::new(
            "dz1",
            Arc::new(|_x: &Point6| Vector6::ith(IZ1, 1.0)),
        )
        .with_dcoeff(Arc::new(|_x: &Point6| Matrix6::zeros())),
        OneForm::new(
            "dz2",
            Arc::new(|_x: &Point6| Vector6::ith(IZ2, 1.0)),
        )
        .with_dcoeff(Arc::new(|_x: &Point6| Matrix6::zeros())),
    )
    .with_reeb(
        constant_field("reeb1", Vector6::ith(IZ1, 1.0)),
        constant_field("reeb2", Vector6::ith(IZ2, 1.0)),
    )
}

/// Pair with the model's first form and a flat second form: the second
/// curvature vanishes identically, so the pair is nowhere fat.
pub fn partially_flat_pair() -> CorankTwoDistribution {
    let model = holomorphic_contact_model();
    CorankTwoDistribution::new(
        "partially_flat_pair",
        model.alpha1,
        OneForm::new(
            "dz2",
            Arc::new(|_x: &Point6| Vector6::ith(IZ2, 1.0)),
        )
        .with_dcoeff(Arc::new(|_x: &Point6| Matrix6::zeros())),
    )
}

/// Remainder term for [`from_structure_constants`]: `x -> g` with
/// `R_i = sum_j g[i][j] dx_j` and `x` the four non-z coordinates.
pub type RemainderFn = Arc<dyn Fn(&[f64; 4]) -> [[f64; 4]; 2] + Send + Sync>;

/// Quadratic normal form
/// `alpha_i = dz_i - sum_{j,k} gamma[i][j][k] x_j dx_k + R_i`,
/// with antisymmetric `gamma` and an optional remainder `g` vanishing to
/// second order at the origin. Reeb directions are `d/dz1`, `d/dz2`.
pub fn from_structure_constants(
    gamma: [[[f64; 4]; 4]; 2],
    g: Option<RemainderFn>,
) -> Result<CorankTwoDistribution> {
    let mut scale: f64 = 0.0;
    for block in &gamma {
        for row in block {
            for v in row {
                scale = scale.max(v.abs());
            }
        }
    }
    for (i, block) in gamma.iter().enumerate() {
        for j in 0..4 {
            for k in 0..4 {
                if (block[j][k] + block[k][j]).abs() > 1e-12 * scale.max(1.0) {
                    return Err(Error::Domain(format!(
                        "structure constants not antisymmetric at [{i}][{j}][{k}]"
                    )));
                }
            }
        }
    }
    if let Some(g) = &g {
        validate_remainder(g)?;
    }

    let coeff = move |i: usize, g: Option<RemainderFn>| {
        let block = gamma[i];
        Arc::new(move |x: &Point6| {
            let xs = [x[0], x[1], x[2], x[3]];
            let gv = g.as_ref().map(|g| g(&xs));
            let mut a = Vector6::zeros();
            for k in 0..4 {
                let mut s = 0.0;
                for j in 0..4 {
                    s += block[j][k] * xs[j];
                }
                a[k] = -s + gv.map_or(0.0, |gv| gv[i][k]);
            }
            a[IZ1 + i] = 1.0;
            a
        })
    };

    let mut alpha1 = OneForm::new("alpha1", coeff(0, g.clone()));
    let mut alpha2 = OneForm::new("alpha2", coeff(1, g.clone()));
    if g.is_none() {
        // d(-gamma_jk x_j dx_k) has the constant skew matrix -2 gamma.
        let dc = |i: usize| {
            let block = gamma[i];
            Arc::new(move |_x: &Point6| {
                let mut c = Matrix6::zeros();
                for j in 0..4 {
                    for k in 0..4 {
                        c[(j, k)] = -2.0 * block[j][k];
                    }
                }
                c
            })
        };
        alpha1 = alpha1.with_dcoeff(dc(0));
        alpha2 = alpha2.with_dcoeff(dc(1));
    }
    Ok(
        CorankTwoDistribution::new("structure_constants", alpha1, alpha2).with_reeb(
            constant_field("reeb1", Vector6::ith(IZ1, 1.0)),
            constant_field("reeb2", Vector6::ith(IZ2, 1.0)),
        ),
    )
}

/// Numeric check that the remainder vanishes to second order at the origin:
/// value, gradient, and Hessian of every entry are below tight thresholds.
fn validate_remainder(g: &RemainderFn) -> Result<()> {
    const STEP: f64 = 1e-3;
    const VAL_TOL: f64 = 1e-12;
    const DERIV_TOL: f64 = 1e-5;
    let at = |xs: [f64; 4]| g(&xs);
    let g0 = at([0.0; 4]);
    for i in 0..2 {
        for k in 0..4 {
            if g0[i][k].abs() > VAL_TOL {
                return Err(Error::Domain(format!(
                    "remainder g[{i}][{k}](0) = {:.3e} is nonzero",
                    g0[i][k]
                )));
            }
        }
    }
    for j in 0..4 {
        let mut xp = [0.0; 4];
        let mut xm = [0.0; 4];
        xp[j] = STEP;
        xm[j] = -STEP;
        let (gp, gm) = (at(xp), at(xm));
        for i in 0..2 {
            for k in 0..4 {
                let grad = (gp[i][k] - gm[i][k]) / (2.0 * STEP);
                let hess = (gp[i][k] - 2.0 * g0[i][k] + gm[i][k]) / (STEP * STEP);
                if grad.abs() > DERIV_TOL || hess.abs() > DERIV_TOL {
                    return Err(Error::Domain(format!(
                        "remainder g[{i}][{k}] does not vanish to second order \
                         (grad {grad:.3e}, hess {hess:.3e})"
                    )));
                }
            }
        }
    }
    // Mixed second derivatives.
    for j in 0..4 {
        for l in (j + 1)..4 {
            let mut xs = [[0.0; 4]; 4];
            xs[0][j] = STEP;
            xs[0][l] = STEP;
            xs[1][j] = STEP;
            xs[1][l] = -STEP;
            xs[2][j] = -STEP;
            xs[2][l] = STEP;
            xs[3][j] = -STEP;
            xs[3][l] = -STEP;
            let gs: Vec<_> = xs.iter().map(|x| at(*x)).collect();
            for i in 0..2 {
                for k in 0..4 {
                    let mixed = (gs[0][i][k] - gs[1][i][k] - gs[2][i][k] + gs[3][i][k])
                        / (4.0 * STEP * STEP);
                    if mixed.abs() > DERIV_TOL {
                        return Err(Error::Domain(format!(
                            "remainder g[{i}][{k}] has mixed second derivative {mixed:.3e}"
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Structure constants whose curvature forms at the origin coincide with the
/// model's (the quadratic normalization of the model).
pub fn complex_heisenberg_constants() -> [[[f64; 4]; 4]; 2] {
    let mut gamma = [[[0.0; 4]; 4]; 2];
    // dalpha1 = dx1 ^ dy1 - dx2 ^ dy2, dalpha2 = dx1 ^ dy2 + dx2 ^ dy1,
    // and the x-block of d(alpha_i) is -2 gamma[i].
    gamma[0][0][2] = -0.5;
    gamma[0][2][0] = 0.5;
    gamma[0][1][3] = 0.5;
    gamma[0][3][1] = -0.5;
    gamma[1][0][3] = -0.5;
    gamma[1][3][0] = 0.5;
    gamma[1][1][2] = -0.5;
    gamma[1][2][1] = 0.5;
    gamma
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::distribution::{
        check_reeb_directions, is_fat_at, kernel_basis, DEFAULT_FAT_TOL,
    };
    use approx::assert_relative_eq;

    #[test]
    fn model_curvature_signs_at_origin() {
        let dist = holomorphic_contact_model();
        let c1 = dist.alpha1.exterior_at(&Point6::zeros()).unwrap();
        let c2 = dist.alpha2.exterior_at(&Point6::zeros()).unwrap();
        // dalpha1 = dx1 ^ dy1 - dx2 ^ dy2
        assert_relative_eq!(c1[(IX1, IY1)], 1.0);
        assert_relative_eq!(c1[(IX2, IY2)], -1.0);
        // dalpha2 = dx1 ^ dy2 + dx2 ^ dy1
        assert_relative_eq!(c2[(IX1, IY2)], 1.0);
        assert_relative_eq!(c2[(IX2, IY1)], 1.0);
    }

    #[test]
    fn model_kernel_at_origin_is_xy_plane() {
        let dist = holomorphic_contact_model();
        let frame = kernel_basis(&dist, &Point6::zeros()).unwrap();
        let proj = frame.basis * frame.basis.transpose();
        for i in 0..4 {
            assert_relative_eq!(proj[(i, i)], 1.0, epsilon = 1e-13);
        }
        assert_relative_eq!(proj[(IZ1, IZ1)], 0.0, epsilon = 1e-13);
        assert_relative_eq!(proj[(IZ2, IZ2)], 0.0, epsilon = 1e-13);
    }

    #[test]
    fn connecting_automorphism_rotates_model_frame() {
        let dist = holomorphic_contact_model();
        let fields = model_frame_fields();
        let x = Point6::new(0.3, -0.2, 0.5, 0.7, -0.1, 0.4);
        let frame = kernel_basis(&dist, &x).unwrap();
        let v = |i: usize| fields[i].value_at(&x).unwrap();
        // A: X1 -> -X2, X2 -> X1, Y1 -> -Y2, Y2 -> Y1.
        assert_relative_eq!(frame.connect(&v(0)), -v(1), epsilon = 1e-10);
        assert_relative_eq!(frame.connect(&v(1)), v(0), epsilon = 1e-10);
        assert_relative_eq!(frame.connect(&v(2)), -v(3), epsilon = 1e-10);
        assert_relative_eq!(frame.connect(&v(3)), v(2), epsilon = 1e-10);
    }

    #[test]
    fn model_is_fat_and_reeb_conditions_hold() {
        let dist = holomorphic_contact_model();
        let x = Point6::new(-0.6, 0.1, 0.8, -0.3, 0.2, 0.9);
        assert!(is_fat_at(&dist, &x, DEFAULT_FAT_TOL).unwrap().fat);
        let report = check_reeb_directions(&dist, &x, 1e-12).unwrap();
        assert!(report.pass);
        assert!(report.cross[0] <= 1e-12 && report.cross[1] <= 1e-12);
    }

    #[test]
    fn heisenberg_constants_reproduce_model_curvatures_at_origin() {
        let dist = holomorphic_contact_model();
        let nf = from_structure_constants(complex_heisenberg_constants(), None).unwrap();
        let origin = Point6::zeros();
        let fm = kernel_basis(&dist, &origin).unwrap();
        let fn_ = kernel_basis(&nf, &origin).unwrap();
        assert_relative_eq!(fm.omega1, fn_.omega1, epsilon = 1e-12);
        assert_relative_eq!(fm.omega2, fn_.omega2, epsilon = 1e-12);
        assert_relative_eq!(fm.connecting, fn_.connecting, epsilon = 1e-12);
    }

    #[test]
    fn non_antisymmetric_constants_rejected() {
        let mut gamma = [[[0.0; 4]; 4]; 2];
        gamma[0][1][2] = 1.0; // missing the -1.0 partner
        let err = from_structure_constants(gamma, None).err().unwrap();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn quadratic_remainder_rejected_cubic_accepted() {
        let quadratic: RemainderFn = Arc::new(|x: &[f64; 4]| {
            let mut g = [[0.0; 4]; 2];
            g[0][0] = x[1] * x[1];
            g
        });
        assert!(from_structure_constants(complex_heisenberg_constants(), Some(quadratic)).is_err());
        let cubic: RemainderFn = Arc::new(|x: &[f64; 4]| {
            let mut g = [[0.0; 4]; 2];
            g[0][0] = x[1] * x[1] * x[1];
            g[1][2] = x[0] * x[2] * x[3];
            g
        });
        let dist =
            from_structure_constants(complex_heisenberg_constants(), Some(cubic)).unwrap();
        let report = check_reeb_directions(&dist, &Point6::new(0.2, -0.1, 0.3, 0.0, 0.5, -0.5), 1e-7)
            .unwrap();
        assert!(report.pass);
    }

    #[test]
    fn structure_constant_reeb_conditions_hold_everywhere() {
        let mut gamma = [[[0.0; 4]; 4]; 2];
        // An arbitrary antisymmetric choice.
        let entries0 = [(0, 1, 0.7), (0, 3, -0.2), (2, 3, 1.1)];
        let entries1 = [(0, 2, 0.4), (1, 3, -0.9), (1, 2, 0.3)];
        for &(j, k, v) in &entries0 {
            gamma[0][j][k] = v;
            gamma[0][k][j] = -v;
        }
        for &(j, k, v) in &entries1 {
            gamma[1][j][k] = v;
            gamma[1][k][j] = -v;
        }
        let dist = from_structure_constants(gamma, None).unwrap();
        let x = Point6::new(0.9, -0.4, 0.2, 0.6, -0.8, 0.1);
        assert!(check_reeb_directions(&dist, &x, 1e-12).unwrap().pass);
    }
}
