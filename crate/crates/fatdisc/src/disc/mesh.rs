//! Triangulations of the closed unit disc.
//!
//! The mesh is built from concentric rings: ring `r` of a resolution-`R` mesh
//! carries `6r` nodes at radius `r/R`, and consecutive rings are joined sector
//! by sector with a two-pointer strip triangulation.  The layout is a pure
//! function of the resolution, so two meshes of equal resolution agree node
//! for node and element for element.

use nalgebra::Vector2;

use crate::error::{Error, Result};

/// Planar point or vector.
pub type Point2 = Vector2<f64>;

/// Barycentric coordinates below `-LOCATE_TOL` mean the point is outside.
const LOCATE_TOL: f64 = 1e-9;

/// Conforming piecewise-linear triangulation of the unit disc.
///
/// All derived quantities (areas, hat-function gradients, adjacency) are
/// precomputed at construction; elements are counterclockwise.
#[derive(Debug, Clone)]
pub struct DiscMesh {
    /// Number of rings between the center and the unit circle.
    pub resolution: u32,
    pub nodes: Vec<Point2>,
    /// Vertex triples, counterclockwise.
    pub elements: Vec<[usize; 3]>,
    /// Nodes on the unit circle, in increasing angular order.
    pub boundary: Vec<usize>,
    /// Nodes strictly inside the disc.
    pub interior: Vec<usize>,
    pub is_boundary: Vec<bool>,
    /// Longest edge in the mesh.
    pub h: f64,
    pub areas: Vec<f64>,
    /// Gradients of the three hat functions on each element.
    pub grads: Vec<[Point2; 3]>,
    pub barycenters: Vec<Point2>,
    /// Elements incident to each node, in element order.
    pub node_elems: Vec<Vec<usize>>,
}

impl DiscMesh {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    /// The single node at the origin.
    pub fn center(&self) -> usize {
        0
    }

    /// First node id of ring `r` (ring 0 is the center node).
    pub fn ring_start(&self, r: u32) -> usize {
        let r = r as usize;
        if r == 0 {
            0
        } else {
            1 + 3 * r * (r - 1)
        }
    }

    /// Node closest to `p` in Euclidean distance; ties go to the lower id.
    pub fn nearest_node(&self, p: &Point2) -> usize {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (v, q) in self.nodes.iter().enumerate() {
            let d = (p - q).norm_squared();
            if d < best_d {
                best_d = d;
                best = v;
            }
        }
        best
    }

    /// Barycentric coordinates of `p` with respect to element `e`.
    pub fn barycentric(&self, e: usize, p: &Point2) -> [f64; 3] {
        let d = p - self.barycenters[e];
        let g = &self.grads[e];
        [
            1.0 / 3.0 + g[0].dot(&d),
            1.0 / 3.0 + g[1].dot(&d),
            1.0 / 3.0 + g[2].dot(&d),
        ]
    }

    /// Element containing `p`, with the barycentric coordinates of `p` in it.
    ///
    /// Points on edges or vertices resolve to the lowest containing element
    /// id.  Points outside the triangulated polygon are a domain error.
    pub fn locate(&self, p: &Point2) -> Result<(usize, [f64; 3])> {
        let mut best_e = 0usize;
        let mut best_lam = [0.0; 3];
        let mut best_worst = f64::NEG_INFINITY;
        for e in 0..self.elements.len() {
            let lam = self.barycentric(e, p);
            let worst = lam[0].min(lam[1]).min(lam[2]);
            if worst >= 0.0 {
                return Ok((e, lam));
            }
            if worst > best_worst {
                best_worst = worst;
                best_e = e;
                best_lam = lam;
            }
        }
        if best_worst > -LOCATE_TOL {
            Ok((best_e, best_lam))
        } else {
            Err(Error::Domain(format!(
                "point ({}, {}) lies outside the triangulated disc",
                p.x, p.y
            )))
        }
    }
}

/// Build the ring mesh of the closed unit disc.
///
/// A resolution-`R` mesh has `1 + 3R(R+1)` nodes and `6R^2` triangles; the
/// longest edge scales like `1.45/R`.  Resolutions below 2 leave no interior
/// ring and are rejected.
pub fn build_disc_mesh(resolution: u32) -> Result<DiscMesh> {
    if resolution < 2 {
        return Err(Error::Domain(format!(
            "disc mesh needs resolution >= 2, got {resolution}"
        )));
    }
    let rr = resolution as usize;

    let n_nodes = 1 + 3 * rr * (rr + 1);
    let mut nodes = Vec::with_capacity(n_nodes);
    nodes.push(Point2::new(0.0, 0.0));
    for r in 1..=rr {
        let radius = r as f64 / rr as f64;
        let count = 6 * r;
        for k in 0..count {
            let theta = std::f64::consts::TAU * k as f64 / count as f64;
            nodes.push(Point2::new(radius * theta.cos(), radius * theta.sin()));
        }
    }
    debug_assert_eq!(nodes.len(), n_nodes);

    let ring_start = |r: usize| 1 + 3 * r * (r - 1);
    let mut elements = Vec::with_capacity(6 * rr * rr);
    for r in 1..=rr {
        let outer = |k: usize| ring_start(r) + k % (6 * r);
        let inner = |k: usize| {
            if r == 1 {
                0
            } else {
                ring_start(r - 1) + k % (6 * (r - 1))
            }
        };
        for s in 0..6 {
            // Merge the outer arc (r segments) with the inner arc (r-1
            // segments) of this sector, always advancing the arc whose next
            // node trails in angle; ties go to the inner arc.  This keeps the
            // strip triangles fat: breaking ties outward would chain two
            // outer advances and span a double-width chord.
            let mut io = 0usize;
            let mut ii = 0usize;
            while io < r || ii + 1 < r {
                let take_outer = io < r && (ii + 1 >= r || (io + 1) * (r - 1) < (ii + 1) * r);
                if take_outer {
                    elements.push([
                        inner(s * (r - 1) + ii),
                        outer(s * r + io),
                        outer(s * r + io + 1),
                    ]);
                    io += 1;
                } else {
                    elements.push([
                        inner(s * (r - 1) + ii),
                        outer(s * r + io),
                        inner(s * (r - 1) + ii + 1),
                    ]);
                    ii += 1;
                }
            }
        }
    }
    debug_assert_eq!(elements.len(), 6 * rr * rr);

    let mut areas = Vec::with_capacity(elements.len());
    let mut grads = Vec::with_capacity(elements.len());
    let mut barycenters = Vec::with_capacity(elements.len());
    let mut h = 0.0f64;
    for tri in &mut elements {
        let p0 = nodes[tri[0]];
        let mut p1 = nodes[tri[1]];
        let mut p2 = nodes[tri[2]];
        let twice = (p1 - p0).perp(&(p2 - p0));
        if twice < 0.0 {
            tri.swap(1, 2);
            std::mem::swap(&mut p1, &mut p2);
        }
        let twice = twice.abs();
        if twice <= f64::EPSILON {
            return Err(Error::Domain(format!(
                "degenerate triangle {:?} in disc mesh",
                tri
            )));
        }
        areas.push(0.5 * twice);
        grads.push([
            Point2::new(p1.y - p2.y, p2.x - p1.x) / twice,
            Point2::new(p2.y - p0.y, p0.x - p2.x) / twice,
            Point2::new(p0.y - p1.y, p1.x - p0.x) / twice,
        ]);
        barycenters.push((p0 + p1 + p2) / 3.0);
        h = h
            .max((p1 - p0).norm())
            .max((p2 - p1).norm())
            .max((p0 - p2).norm());
    }

    let mut node_elems = vec![Vec::new(); n_nodes];
    for (e, tri) in elements.iter().enumerate() {
        for &v in tri {
            node_elems[v].push(e);
        }
    }

    let first_boundary = ring_start(rr);
    let boundary: Vec<usize> = (first_boundary..n_nodes).collect();
    let interior: Vec<usize> = (0..first_boundary).collect();
    let mut is_boundary = vec![false; n_nodes];
    for &v in &boundary {
        is_boundary[v] = true;
    }

    Ok(DiscMesh {
        resolution,
        nodes,
        elements,
        boundary,
        interior,
        is_boundary,
        h,
        areas,
        grads,
        barycenters,
        node_elems,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashMap;

    #[test]
    fn counts_match_closed_forms() {
        for res in 2..=8u32 {
            let mesh = build_disc_mesh(res).unwrap();
            let r = res as usize;
            assert_eq!(mesh.num_nodes(), 1 + 3 * r * (r + 1));
            assert_eq!(mesh.num_elements(), 6 * r * r);
            assert_eq!(mesh.boundary.len(), 6 * r);
            assert_eq!(mesh.interior.len() + mesh.boundary.len(), mesh.num_nodes());
        }
    }

    #[test]
    fn resolution_below_two_rejected() {
        assert!(build_disc_mesh(0).is_err());
        assert!(build_disc_mesh(1).is_err());
    }

    #[test]
    fn total_area_is_the_inscribed_polygon() {
        for res in [4u32, 16, 32] {
            let mesh = build_disc_mesh(res).unwrap();
            let total: f64 = mesh.areas.iter().sum();
            let sides = 6.0 * res as f64;
            let polygon = 0.5 * sides * (std::f64::consts::TAU / sides).sin();
            assert!(
                (total - polygon).abs() < 1e-12,
                "res {res}: area {total} vs polygon {polygon}"
            );
        }
    }

    #[test]
    fn elements_are_counterclockwise() {
        let mesh = build_disc_mesh(5).unwrap();
        for (e, tri) in mesh.elements.iter().enumerate() {
            let p0 = mesh.nodes[tri[0]];
            let p1 = mesh.nodes[tri[1]];
            let p2 = mesh.nodes[tri[2]];
            assert!(
                (p1 - p0).perp(&(p2 - p0)) > 0.0,
                "element {e} is clockwise"
            );
        }
    }

    #[test]
    fn interior_edges_shared_by_two_elements() {
        let mesh = build_disc_mesh(6).unwrap();
        let mut edge_count: HashMap<(usize, usize), u32> = HashMap::new();
        for tri in &mesh.elements {
            for (a, b) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])] {
                *edge_count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        for (&(a, b), &count) in &edge_count {
            match count {
                2 => {}
                1 => {
                    assert!(
                        mesh.is_boundary[a] && mesh.is_boundary[b],
                        "edge ({a}, {b}) hangs inside the mesh"
                    );
                }
                n => panic!("edge ({a}, {b}) shared by {n} elements"),
            }
        }
        let rim = edge_count.values().filter(|&&c| c == 1).count();
        assert_eq!(rim, mesh.boundary.len());
    }

    #[test]
    fn boundary_nodes_sit_on_the_unit_circle() {
        let mesh = build_disc_mesh(7).unwrap();
        for &v in &mesh.boundary {
            assert!((mesh.nodes[v].norm() - 1.0).abs() < 1e-12);
        }
        for &v in &mesh.interior {
            assert!(mesh.nodes[v].norm() < 1.0 - 1e-3);
        }
    }

    #[test]
    fn mesh_size_scales_inversely_with_resolution() {
        let mut prev = f64::INFINITY;
        for res in [4u32, 8, 16, 32] {
            let mesh = build_disc_mesh(res).unwrap();
            assert!(mesh.h < prev);
            // The longest edge joins an inner-ring node to the outer node one
            // spacing over: sqrt(1 + (pi/3)^2)/res, about 1.45/res.
            let scaled = mesh.h * res as f64;
            assert!(
                (1.0..1.5).contains(&scaled),
                "res {res}: h * res = {scaled}"
            );
            prev = mesh.h;
        }
    }

    #[test]
    fn hat_gradients_reproduce_linear_functions() {
        let mesh = build_disc_mesh(4).unwrap();
        // u(x, y) = 3x - 2y + 1 has constant gradient (3, -2) on every element.
        let u: Vec<f64> = mesh.nodes.iter().map(|p| 3.0 * p.x - 2.0 * p.y + 1.0).collect();
        for (e, tri) in mesh.elements.iter().enumerate() {
            let mut g = Point2::zeros();
            let mut sum = Point2::zeros();
            for (i, &v) in tri.iter().enumerate() {
                g += u[v] * mesh.grads[e][i];
                sum += mesh.grads[e][i];
            }
            assert!((g - Point2::new(3.0, -2.0)).norm() < 1e-12);
            assert!(sum.norm() < 1e-12);
        }
    }

    #[test]
    fn locate_finds_every_barycenter() {
        let mesh = build_disc_mesh(4).unwrap();
        for e in 0..mesh.num_elements() {
            let (found, lam) = mesh.locate(&mesh.barycenters[e]).unwrap();
            assert_eq!(found, e);
            for l in lam {
                assert!((l - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn locate_rejects_far_points() {
        let mesh = build_disc_mesh(3).unwrap();
        assert!(mesh.locate(&Point2::new(1.5, 0.0)).is_err());
    }

    #[test]
    fn nearest_node_to_origin_is_the_center() {
        let mesh = build_disc_mesh(5).unwrap();
        assert_eq!(mesh.nearest_node(&Point2::new(0.0, 0.0)), 0);
        assert_eq!(mesh.nearest_node(&Point2::new(0.01, -0.02)), 0);
    }

    proptest! {
        #[test]
        fn locate_interpolates_back_to_the_query_point(
            radius in 0.0f64..0.995,
            angle in 0.0f64..std::f64::consts::TAU,
        ) {
            let mesh = build_disc_mesh(6).unwrap();
            // Stay inside the inscribed polygon: shrink by the sagitta margin.
            let p = Point2::new(radius * angle.cos(), radius * angle.sin()) * 0.99;
            let (e, lam) = mesh.locate(&p).unwrap();
            let tri = mesh.elements[e];
            let mut q = Point2::zeros();
            for i in 0..3 {
                prop_assert!(lam[i] > -1e-9);
                q += lam[i] * mesh.nodes[tri[i]];
            }
            prop_assert!((q - p).norm() < 1e-9);
        }
    }
}
