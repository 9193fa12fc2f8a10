//! Reference maps and manufactured data used by tests, examples, and the
//! command-line fixtures.
//!
//! The distinguished family are graphs of holomorphic polynomials: with
//! `w = x1 + i x2` and `h` holomorphic, the map
//! `(x1, x2) -> (x1, x2, Re h', Im h', Re h, Im h)` pulls both defining
//! forms of the holomorphic contact model back to zero, with a closed-form
//! differential.  Everything else is built on top: compactly supported
//! defects of prescribed vanishing order, seeded smooth perturbations, and
//! manufactured right-hand sides for the linearized problem.

use std::sync::Arc;

use nalgebra::{Complex, Matrix4, SMatrix};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::disc::map::{MeshMap, OneFormField};
use crate::disc::mesh::{build_disc_mesh, DiscMesh};
use crate::disc::norms::graded_norm_map_values;
use crate::error::Result;
use crate::geometry::{
    acs_from_gram, holomorphic_contact_model, model_frame_fields, two_form_eval,
    CorankTwoDistribution, Point6, VectorField,
};

/// Evaluate `h`, `h'`, `h''` for `h(w) = sum c_k w^k`.
fn horner3(coeffs: &[Complex<f64>], w: Complex<f64>) -> [Complex<f64>; 3] {
    let mut h = Complex::new(0.0, 0.0);
    let mut dh = Complex::new(0.0, 0.0);
    let mut ddh = Complex::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        ddh = ddh * w + dh * 2.0;
        dh = dh * w + h;
        h = h * w + c;
    }
    [h, dh, ddh]
}

/// The closed-form graph map of a holomorphic polynomial and its
/// differential columns.
pub fn legendrian_graph(
    coeffs: &[[f64; 2]],
) -> (
    impl Fn(f64, f64) -> Point6 + Clone,
    impl Fn(f64, f64) -> [Point6; 2] + Clone,
) {
    let c: Vec<Complex<f64>> = coeffs.iter().map(|c| Complex::new(c[0], c[1])).collect();
    let value = {
        let c = c.clone();
        move |x: f64, y: f64| {
            let [h, dh, _] = horner3(&c, Complex::new(x, y));
            Point6::new(x, y, dh.re, dh.im, h.re, h.im)
        }
    };
    let diff = move |x: f64, y: f64| {
        let [_, dh, ddh] = horner3(&c, Complex::new(x, y));
        [
            Point6::new(1.0, 0.0, ddh.re, ddh.im, dh.re, dh.im),
            Point6::new(0.0, 1.0, -ddh.im, ddh.re, -dh.im, dh.re),
        ]
    };
    (value, diff)
}

/// Horizontal graph of `h(w) = w^2` with its exact differential.
pub fn legendrian_map(resolution: u32) -> Result<MeshMap> {
    legendrian_from_coeffs(resolution, &[[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
}

/// Horizontal graph of an arbitrary holomorphic polynomial.
pub fn legendrian_from_coeffs(resolution: u32, coeffs: &[[f64; 2]]) -> Result<MeshMap> {
    let mesh = Arc::new(build_disc_mesh(resolution)?);
    let (f, df) = legendrian_graph(coeffs);
    MeshMap::from_exact(mesh, f, df)
}

/// `exp(1 - 1/(1 - u))` for `u < 1`, zero otherwise, as a function of
/// `u = x^2 + y^2`.  Smooth on the closed disc and flat at the rim.
fn envelope(u: f64) -> (f64, f64) {
    if u >= 1.0 {
        return (0.0, 0.0);
    }
    let e = (1.0 - 1.0 / (1.0 - u)).exp();
    (e, -e / ((1.0 - u) * (1.0 - u)))
}

/// The `w^2` graph displaced in the first vertical direction by
/// `amplitude * (x^2 + y^2)^m * envelope`, with `m` chosen so that the
/// horizontality defect vanishes at the disc center to infinitesimal order
/// at least `order`.
pub fn defect_map(resolution: u32, order: u32, amplitude: f64) -> Result<MeshMap> {
    let m = ((order + 2) as f64 / 2.0).ceil() as i32;
    let mesh = Arc::new(build_disc_mesh(resolution)?);
    let (base, dbase) = legendrian_graph(&[[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]);
    let phi = move |x: f64, y: f64| {
        let u = x * x + y * y;
        let (env, denv) = envelope(u);
        let um = u.powi(m);
        let value = um * env;
        let dvalue_du = (m as f64) * u.powi(m - 1) * env + um * denv;
        (value, 2.0 * x * dvalue_du, 2.0 * y * dvalue_du)
    };
    let f = {
        let phi = phi.clone();
        move |x: f64, y: f64| {
            let mut p = base(x, y);
            p[4] += amplitude * phi(x, y).0;
            p
        }
    };
    let df = move |x: f64, y: f64| {
        let mut cols = dbase(x, y);
        let (_, px, py) = phi(x, y);
        cols[0][4] += amplitude * px;
        cols[1][4] += amplitude * py;
        [cols[0], cols[1]]
    };
    MeshMap::from_exact(mesh, f, df)
}

/// A seeded smooth nodal displacement, zero on the boundary, scaled to the
/// requested first-order graded norm.
pub fn smooth_displacement(mesh: &DiscMesh, seed: u64, amplitude: f64) -> Vec<Point6> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut waves = [[0.0f64; 4]; 12];
    for w in &mut waves {
        *w = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(0.0..std::f64::consts::TAU),
        ];
    }
    let field = |x: f64, y: f64| {
        let env = 1.0 - x * x - y * y;
        Point6::from_fn(|i, _| {
            let mut s = 0.0;
            for w in &waves[2 * i..2 * i + 2] {
                s += w[0] * (w[1] * x + w[2] * y + w[3]).sin();
            }
            env * s
        })
    };
    let mut delta: Vec<Point6> = mesh.nodes.iter().map(|p| field(p.x, p.y)).collect();
    let norm = graded_norm_map_values(mesh, &delta, 1).expect("norm of a finite field");
    if norm > 0.0 {
        let scale = amplitude / norm;
        for d in &mut delta {
            *d *= scale;
        }
    }
    delta
}

/// A seeded smooth displacement along the Reeb directions only (the z
/// slots), zero on the boundary, scaled to the requested first-order
/// graded norm.  Perturbing a horizontal map this way keeps its x and y
/// jets intact, which is the regime the damped-Newton solver targets.
pub fn reeb_displacement(mesh: &DiscMesh, seed: u64, amplitude: f64) -> Vec<Point6> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut waves = [[0.0f64; 4]; 4];
    for w in &mut waves {
        *w = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(0.0..std::f64::consts::TAU),
        ];
    }
    let field = |x: f64, y: f64| {
        let env = 1.0 - x * x - y * y;
        let mut p = Point6::zeros();
        for (slot, z) in [4usize, 5].into_iter().enumerate() {
            let mut s = 0.0;
            for w in &waves[2 * slot..2 * slot + 2] {
                s += w[0] * (w[1] * x + w[2] * y + w[3]).sin();
            }
            p[z] = env * s;
        }
        p
    };
    let mut delta: Vec<Point6> = mesh.nodes.iter().map(|p| field(p.x, p.y)).collect();
    let norm = graded_norm_map_values(mesh, &delta, 1).expect("norm of a finite field");
    if norm > 0.0 {
        let scale = amplitude / norm;
        for d in &mut delta {
            *d *= scale;
        }
    }
    delta
}

/// Offset a map by a seeded Reeb-direction displacement of prescribed size.
pub fn perturbed_map(base: &MeshMap, seed: u64, amplitude: f64) -> Result<MeshMap> {
    let delta = reeb_displacement(&base.mesh, seed, amplitude);
    base.offset_by(&delta)
}

/// Gram-Schmidt in fixed column order; the model frame is uniformly
/// independent, so no pivoting is needed and the result varies smoothly
/// with the evaluation point.
fn orthonormalize(cols: [Point6; 4]) -> SMatrix<f64, 6, 4> {
    let mut q = cols;
    for i in 0..4 {
        for j in 0..i {
            let proj = q[i].dot(&q[j]);
            q[i] -= q[j] * proj;
        }
        q[i] /= q[i].norm();
    }
    SMatrix::<f64, 6, 4>::from_columns(&q)
}

/// Pointwise smooth geometry of the model along a closed-form map: the
/// compatible complex structure applied to the tangent columns.
fn tangent_acs_at(
    dist: &CorankTwoDistribution,
    frames: &[VectorField; 4],
    p: &Point6,
    fx: &Point6,
    fy: &Point6,
) -> Result<(Point6, Point6)> {
    let cols = [
        frames[0].value_at(p)?,
        frames[1].value_at(p)?,
        frames[2].value_at(p)?,
        frames[3].value_at(p)?,
    ];
    let basis = orthonormalize(cols);
    let c1 = dist.alpha1.exterior_at(p)?;
    let mut k = Matrix4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            let bi = Point6::from(basis.column(i));
            let bj = Point6::from(basis.column(j));
            k[(i, j)] = two_form_eval(&c1, &bi, &bj);
        }
    }
    let j = acs_from_gram(&k)?;
    let jfx = basis * (j * (basis.transpose() * fx));
    let jfy = basis * (j * (basis.transpose() * fy));
    Ok((jfx, jfy))
}

/// Manufactured data for the linearized problem along the `w^2` graph:
/// smooth fields `(a, b)` and a smooth distribution component, with the
/// image of the linearization evaluated in closed form at the barycenters.
pub struct Manufactured {
    pub dist: CorankTwoDistribution,
    pub map: MeshMap,
    /// Image of the manufactured section under the linearization.
    pub target: [OneFormField; 2],
    /// Exact nodal fields.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Exact distribution component of the section at the barycenters.
    pub d0_ambient: Vec<Point6>,
}

/// The fixed manufactured solution used by convergence studies.
pub fn manufactured_solution(resolution: u32) -> Result<Manufactured> {
    let dist = holomorphic_contact_model();
    let frames = model_frame_fields();
    let map = legendrian_map(resolution)?;
    let mesh = map.mesh.clone();

    let a_fn = |x: f64, y: f64| 0.4 * (x + 0.5 * y).sin();
    let a_grad = |x: f64, y: f64| {
        let c = (x + 0.5 * y).cos();
        (0.4 * c, 0.2 * c)
    };
    let b_fn = |x: f64, y: f64| 0.3 * x * y + 0.2 * (y - 0.3 * x).cos();
    let b_grad = |x: f64, y: f64| {
        let s = (y - 0.3 * x).sin();
        (0.3 * y + 0.06 * s, 0.3 * x - 0.2 * s)
    };
    let u_fn = |x: f64, y: f64| 0.25 * (2.0 * x - y).cos();
    let v_fn = |x: f64, y: f64| 0.3 * (x + y).sin();

    let a = mesh.nodes.iter().map(|p| a_fn(p.x, p.y)).collect();
    let b = mesh.nodes.iter().map(|p| b_fn(p.x, p.y)).collect();

    let mut target = [
        OneFormField::zeros(mesh.num_elements()),
        OneFormField::zeros(mesh.num_elements()),
    ];
    let mut d0_ambient = Vec::with_capacity(mesh.num_elements());
    for (e, bc) in mesh.barycenters.iter().enumerate() {
        let p = &map.images[e];
        let fx = &map.jac[e][0];
        let fy = &map.jac[e][1];
        let (jfx, jfy) = tangent_acs_at(&dist, &frames, p, fx, fy)?;
        let d0 = jfx * u_fn(bc.x, bc.y) + jfy * v_fn(bc.x, bc.y);
        let c1 = dist.alpha1.exterior_at(p)?;
        let c2 = dist.alpha2.exterior_at(p)?;
        let (ax, ay) = a_grad(bc.x, bc.y);
        let (bx, by) = b_grad(bc.x, bc.y);
        target[0].dx[e] = ax + two_form_eval(&c1, &d0, fx);
        target[0].dy[e] = ay + two_form_eval(&c1, &d0, fy);
        target[1].dx[e] = bx + two_form_eval(&c2, &d0, fx);
        target[1].dy[e] = by + two_form_eval(&c2, &d0, fy);
        d0_ambient.push(d0);
    }
    Ok(Manufactured {
        dist,
        map,
        target,
        a,
        b,
        d0_ambient,
    })
}

/// A map that is far from admissible: the disc flattened onto a complex
/// line of the model, where the tangent span is complex and the
/// totally-real condition fails on every element.
pub fn complex_line_map(resolution: u32) -> Result<MeshMap> {
    let mesh = Arc::new(build_disc_mesh(resolution)?);
    MeshMap::from_exact(
        mesh,
        |x, y| Point6::new(x, 0.0, y, 0.0, 0.0, 0.0),
        |_, _| {
            [
                Point6::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0),
                Point6::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0),
            ]
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disc::admissibility::admissibility_check;
    use crate::disc::map::pair_sup;
    use crate::disc::norms::graded_norm_map_values;

    const HORIZONTAL_TOL: f64 = 1e-12;

    #[test]
    fn polynomial_graphs_are_horizontal_to_machine_precision() {
        let dist = holomorphic_contact_model();
        let coeffs = [[0.3, -0.1], [0.0, 0.5], [1.0, 0.0], [-0.2, 0.4], [0.05, 0.1]];
        let map = legendrian_from_coeffs(12, &coeffs).unwrap();
        let pulled = map.pullback_pair(&dist).unwrap();
        assert!(pair_sup(&pulled) < HORIZONTAL_TOL, "{}", pair_sup(&pulled));
    }

    #[test]
    fn the_square_graph_is_admissible() {
        let dist = holomorphic_contact_model();
        let map = legendrian_map(8).unwrap();
        let report = admissibility_check(&dist, &map, 1e-8).unwrap();
        assert!(report.admissible);
    }

    #[test]
    fn defect_maps_are_horizontal_except_near_the_center() {
        let dist = holomorphic_contact_model();
        let map = defect_map(16, 2, 1e-3).unwrap();
        let pulled = map.pullback_pair(&dist).unwrap();
        let sup = pair_sup(&pulled);
        assert!(sup > 1e-8, "defect should be visible, sup = {sup}");
        assert!(sup < 1e-3, "defect should be small, sup = {sup}");
        // The second form never sees the vertical displacement.
        assert!(pulled[1].sup() < HORIZONTAL_TOL);
    }

    #[test]
    fn defect_maps_stay_admissible() {
        let dist = holomorphic_contact_model();
        let map = defect_map(8, 2, 1e-3).unwrap();
        let report = admissibility_check(&dist, &map, 1e-8).unwrap();
        assert!(report.admissible);
    }

    #[test]
    fn displacements_have_the_requested_norm_and_vanish_at_the_rim() {
        let mesh = build_disc_mesh(10).unwrap();
        let delta = smooth_displacement(&mesh, 42, 1e-3);
        let norm = graded_norm_map_values(&mesh, &delta, 1).unwrap();
        assert!((norm - 1e-3).abs() < 1e-12);
        for &v in &mesh.boundary {
            assert!(delta[v].norm() < 1e-15);
        }
    }

    #[test]
    fn displacements_are_seed_deterministic() {
        let mesh = build_disc_mesh(6).unwrap();
        let d1 = smooth_displacement(&mesh, 7, 0.01);
        let d2 = smooth_displacement(&mesh, 7, 0.01);
        let d3 = smooth_displacement(&mesh, 8, 0.01);
        assert_eq!(d1, d2);
        assert_ne!(d1, d3);
    }

    #[test]
    fn manufactured_component_lies_in_the_distribution() {
        let m = manufactured_solution(6).unwrap();
        for (e, d0) in m.d0_ambient.iter().enumerate() {
            let p = &m.map.images[e];
            let (r1, r2) = m.dist.coeff_rows(p).unwrap();
            assert!(r1.dot(d0).abs() < 1e-10, "element {e}");
            assert!(r2.dot(d0).abs() < 1e-10, "element {e}");
        }
    }

    #[test]
    fn manufactured_target_is_resolution_consistent() {
        // The target fields sample fixed closed-form expressions, so nearby
        // barycenters on different meshes give nearby values.
        let coarse = manufactured_solution(4).unwrap();
        let fine = manufactured_solution(8).unwrap();
        let c0 = coarse.target[0].dx[0];
        // Locate the fine element whose barycenter is nearest the coarse one.
        let bc = coarse.map.mesh.barycenters[0];
        let mut best = (f64::INFINITY, 0);
        for (e, fb) in fine.map.mesh.barycenters.iter().enumerate() {
            let d = (fb - bc).norm();
            if d < best.0 {
                best = (d, e);
            }
        }
        let f0 = fine.target[0].dx[best.1];
        assert!((c0 - f0).abs() < 0.2, "coarse {c0} vs fine {f0}");
    }

    #[test]
    fn complex_line_map_is_rejected() {
        let dist = holomorphic_contact_model();
        let map = complex_line_map(4).unwrap();
        let report = admissibility_check(&dist, &map, 1e-8).unwrap();
        assert!(!report.admissible);
    }
}
