//! The linearization of the horizontality operator along a map.

use crate::disc::map::{MeshMap, OneFormField};
use crate::error::Result;
use crate::geometry::{two_form_eval, CorankTwoDistribution};
use crate::linearized::section::SectionAlongMap;

/// Apply the linearized horizontality operator to a section: per element,
/// `P = da + (i_{d0} dalpha1)(df)` and `Q = db + (i_{d0} dalpha2)(df)`,
/// with the curvature forms evaluated at the barycenter image.  The Reeb
/// contractions of both curvature forms vanish for a pair with Reeb
/// directions, so only the distribution component enters the curvature
/// terms.
pub fn apply_linearization(
    dist: &CorankTwoDistribution,
    map: &MeshMap,
    s: &SectionAlongMap,
) -> Result<[OneFormField; 2]> {
    let mesh = &map.mesh;
    let n = mesh.num_elements();
    let mut out = [OneFormField::zeros(n), OneFormField::zeros(n)];
    for (e, tri) in mesh.elements.iter().enumerate() {
        let mut ax = 0.0;
        let mut ay = 0.0;
        let mut bx = 0.0;
        let mut by = 0.0;
        for (i, &v) in tri.iter().enumerate() {
            let g = mesh.grads[e][i];
            ax += s.a[v] * g.x;
            ay += s.a[v] * g.y;
            bx += s.b[v] * g.x;
            by += s.b[v] * g.y;
        }
        let c1 = dist.alpha1.exterior_at(&map.images[e])?;
        let c2 = dist.alpha2.exterior_at(&map.images[e])?;
        let d0 = &s.d0_ambient[e];
        let fx = &map.jac[e][0];
        let fy = &map.jac[e][1];
        out[0].dx[e] = ax + two_form_eval(&c1, d0, fx);
        out[0].dy[e] = ay + two_form_eval(&c1, d0, fy);
        out[1].dx[e] = bx + two_form_eval(&c2, d0, fx);
        out[1].dy[e] = by + two_form_eval(&c2, d0, fy);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disc::admissibility::coefficient_fields;
    use crate::disc::map::pair_sup;
    use crate::fixtures::{legendrian_map, manufactured_solution};
    use crate::geometry::holomorphic_contact_model;
    use nalgebra::Vector4;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_section(
        coeffs: &crate::disc::admissibility::EllipticCoefficients,
        mesh: &crate::disc::mesh::DiscMesh,
        seed: u64,
    ) -> SectionAlongMap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = (0..mesh.num_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = (0..mesh.num_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w = (0..mesh.num_elements())
            .map(|_| Vector4::from_fn(|_, _| rng.gen_range(-1.0..1.0)))
            .collect();
        SectionAlongMap::from_frame_components(coeffs, a, b, w).unwrap()
    }

    #[test]
    fn zero_section_maps_to_zero() {
        let dist = holomorphic_contact_model();
        let map = legendrian_map(4).unwrap();
        let s = SectionAlongMap::zero(&map.mesh);
        let out = apply_linearization(&dist, &map, &s).unwrap();
        assert_eq!(pair_sup(&out), 0.0);
    }

    #[test]
    fn constant_reeb_sections_are_in_the_kernel() {
        let dist = holomorphic_contact_model();
        let map = legendrian_map(6).unwrap();
        for (a, b) in [(1.0, 0.0), (0.0, 1.0), (-0.7, 2.3)] {
            let s = SectionAlongMap::constant_reeb(&map.mesh, a, b);
            let out = apply_linearization(&dist, &map, &s).unwrap();
            assert!(
                pair_sup(&out) < 1e-13,
                "(a, b) = ({a}, {b}): {}",
                pair_sup(&out)
            );
        }
    }

    #[test]
    fn operator_is_additive() {
        let dist = holomorphic_contact_model();
        let map = legendrian_map(5).unwrap();
        let coeffs = coefficient_fields(&dist, &map).unwrap();
        let s1 = random_section(&coeffs, &map.mesh, 1);
        let s2 = random_section(&coeffs, &map.mesh, 2);
        let lhs = apply_linearization(&dist, &map, &s1.add(&s2)).unwrap();
        let a = apply_linearization(&dist, &map, &s1).unwrap();
        let b = apply_linearization(&dist, &map, &s2).unwrap();
        let rhs = [a[0].add(&b[0]), a[1].add(&b[1])];
        let diff = [lhs[0].sub(&rhs[0]), lhs[1].sub(&rhs[1])];
        assert!(pair_sup(&diff) < 1e-12);
    }

    #[test]
    fn manufactured_data_matches_the_discrete_operator_to_first_order() {
        // The manufactured target uses analytic gradients of (a, b); the
        // discrete operator uses piecewise-linear ones.  The gap shrinks
        // like h.
        let mut sups = Vec::new();
        for res in [8, 16, 32] {
            let m = manufactured_solution(res).unwrap();
            let coeffs = coefficient_fields(&m.dist, &m.map).unwrap();
            let a: Vec<f64> = m.a.clone();
            let b: Vec<f64> = m.b.clone();
            // Express the exact distribution component in the frame.
            let w = m
                .d0_ambient
                .iter()
                .zip(&coeffs.frames)
                .map(|(u, fr)| {
                    let c = fr.basis.transpose() * u;
                    let mat = nalgebra::Matrix4::from_columns(&[fr.x, fr.y, fr.jx, fr.jy]);
                    mat.lu().solve(&c).unwrap()
                })
                .collect();
            let s = SectionAlongMap::from_frame_components(&coeffs, a, b, w).unwrap();
            let out = apply_linearization(&m.dist, &m.map, &s).unwrap();
            let diff = [out[0].sub(&m.target[0]), out[1].sub(&m.target[1])];
            sups.push(pair_sup(&diff));
        }
        let rate1 = (sups[0] / sups[1]).log2();
        let rate2 = (sups[1] / sups[2]).log2();
        assert!(
            rate2 > 0.9,
            "sups = {sups:?}, rates = {rate1:.2}, {rate2:.2}"
        );
    }
}
