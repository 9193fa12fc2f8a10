//! Piecewise-linear maps from the disc into R^6 and their interaction with a
//! corank-2 distribution: pullbacks of the defining forms and the pointwise
//! split of the differential into frame and transverse components.

use std::sync::Arc;

use nalgebra::{Matrix6, SMatrix, Vector4};

use crate::disc::mesh::DiscMesh;
use crate::error::{Error, Result};
use crate::geometry::{
    kernel_basis, CorankTwoDistribution, DistributionFrame, FormIndex, OneForm, Point6,
};

/// A one-form on the disc with constant coefficients on each element,
/// `dx[e] dx + dy[e] dy`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneFormField {
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
}

impl OneFormField {
    pub fn zeros(n_elements: usize) -> Self {
        OneFormField {
            dx: vec![0.0; n_elements],
            dy: vec![0.0; n_elements],
        }
    }

    pub fn len(&self) -> usize {
        self.dx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dx.is_empty()
    }

    /// Largest coefficient magnitude over all elements.
    pub fn sup(&self) -> f64 {
        self.dx
            .iter()
            .chain(self.dy.iter())
            .fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        OneFormField {
            dx: self.dx.iter().map(|v| v * factor).collect(),
            dy: self.dy.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.len(), other.len());
        OneFormField {
            dx: self.dx.iter().zip(&other.dx).map(|(a, b)| a + b).collect(),
            dy: self.dy.iter().zip(&other.dy).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.len(), other.len());
        OneFormField {
            dx: self.dx.iter().zip(&other.dx).map(|(a, b)| a - b).collect(),
            dy: self.dy.iter().zip(&other.dy).map(|(a, b)| a - b).collect(),
        }
    }

    /// Multiply by a scalar weight per element.
    pub fn weighted(&self, weights: &[f64]) -> Self {
        debug_assert_eq!(self.len(), weights.len());
        OneFormField {
            dx: self.dx.iter().zip(weights).map(|(v, w)| v * w).collect(),
            dy: self.dy.iter().zip(weights).map(|(v, w)| v * w).collect(),
        }
    }
}

/// Largest coefficient magnitude across a pair of form fields.
pub fn pair_sup(pair: &[OneFormField; 2]) -> f64 {
    pair[0].sup().max(pair[1].sup())
}

/// Frame-adapted decomposition of the differential on one element.
#[derive(Debug, Clone)]
pub struct ElementSplit {
    /// Map value at the element barycenter.
    pub image: Point6,
    /// Distribution frame at `image`, with Gram matrices and the connecting
    /// automorphism.
    pub frame: DistributionFrame,
    /// Frame coordinates of the distribution component of `(f_x, f_y)`.
    pub xi: [Vector4<f64>; 2],
    /// Coefficients of the two transverse directions in `(f_x, f_y)`.
    pub transverse: [[f64; 2]; 2],
    /// Distribution component of `(f_x, f_y)` in ambient coordinates.
    pub horizontal: [Point6; 2],
}

/// Map `f : disc -> R^6` carried on a mesh: node values plus per-element
/// evaluation data (differential columns and barycenter images).
///
/// For maps built with [`MeshMap::new`] or [`MeshMap::from_fn`] the
/// evaluation data is that of the piecewise-linear interpolant.  Closed-form
/// maps built with [`MeshMap::from_exact`] carry their own differential
/// instead, so continuum identities (horizontality of a Legendrian graph,
/// frame invariance) hold at machine precision rather than to O(h).
/// Nodal updates through [`MeshMap::offset_by`] preserve whichever
/// provenance the base map has.
#[derive(Debug, Clone)]
pub struct MeshMap {
    pub mesh: Arc<DiscMesh>,
    /// Node values of the map.
    pub values: Vec<Point6>,
    /// Columns `(f_x, f_y)` of the differential on each element.
    pub jac: Vec<[Point6; 2]>,
    /// Map values at element barycenters.
    pub images: Vec<Point6>,
}

impl MeshMap {
    pub fn new(mesh: Arc<DiscMesh>, values: Vec<Point6>) -> Result<Self> {
        if values.len() != mesh.num_nodes() {
            return Err(Error::Domain(format!(
                "map carries {} node values for a mesh with {} nodes",
                values.len(),
                mesh.num_nodes()
            )));
        }
        for (v, val) in values.iter().enumerate() {
            if !val.iter().all(|c| c.is_finite()) {
                return Err(Error::NonFinite {
                    context: format!("map value at node {v}"),
                    point: val.iter().copied().collect(),
                });
            }
        }
        let mut jac = Vec::with_capacity(mesh.num_elements());
        let mut images = Vec::with_capacity(mesh.num_elements());
        for (e, tri) in mesh.elements.iter().enumerate() {
            let mut fx = Point6::zeros();
            let mut fy = Point6::zeros();
            let mut image = Point6::zeros();
            for (i, &v) in tri.iter().enumerate() {
                let g = mesh.grads[e][i];
                fx += values[v] * g.x;
                fy += values[v] * g.y;
                image += values[v] / 3.0;
            }
            jac.push([fx, fy]);
            images.push(image);
        }
        Ok(MeshMap {
            mesh,
            values,
            jac,
            images,
        })
    }

    /// Sample a closed-form map at the mesh nodes; the differential is the
    /// piecewise-linear one.
    pub fn from_fn(
        mesh: Arc<DiscMesh>,
        f: impl Fn(f64, f64) -> Point6,
    ) -> Result<Self> {
        let values = mesh.nodes.iter().map(|p| f(p.x, p.y)).collect();
        MeshMap::new(mesh, values)
    }

    /// Sample a closed-form map together with its exact differential:
    /// values at the nodes, `df` columns and images at the barycenters.
    pub fn from_exact(
        mesh: Arc<DiscMesh>,
        f: impl Fn(f64, f64) -> Point6,
        df: impl Fn(f64, f64) -> [Point6; 2],
    ) -> Result<Self> {
        let values: Vec<Point6> = mesh.nodes.iter().map(|p| f(p.x, p.y)).collect();
        for (v, val) in values.iter().enumerate() {
            if !val.iter().all(|c| c.is_finite()) {
                return Err(Error::NonFinite {
                    context: format!("map value at node {v}"),
                    point: val.iter().copied().collect(),
                });
            }
        }
        let mut jac = Vec::with_capacity(mesh.num_elements());
        let mut images = Vec::with_capacity(mesh.num_elements());
        for bc in &mesh.barycenters {
            let cols = df(bc.x, bc.y);
            for col in &cols {
                if !col.iter().all(|c| c.is_finite()) {
                    return Err(Error::NonFinite {
                        context: format!("map differential at ({}, {})", bc.x, bc.y),
                        point: col.iter().copied().collect(),
                    });
                }
            }
            jac.push(cols);
            images.push(f(bc.x, bc.y));
        }
        Ok(MeshMap {
            mesh,
            values,
            jac,
            images,
        })
    }

    /// Shift the map by nodal increments, updating the evaluation data with
    /// the piecewise-linear differential of the increment.  A closed-form
    /// base keeps its exact differential; a sampled base stays the exact
    /// interpolant of its new values.
    pub fn offset_by(&self, delta: &[Point6]) -> Result<Self> {
        if delta.len() != self.values.len() {
            return Err(Error::Domain(format!(
                "increment carries {} node values for a mesh with {} nodes",
                delta.len(),
                self.values.len()
            )));
        }
        for (v, d) in delta.iter().enumerate() {
            if !d.iter().all(|c| c.is_finite()) {
                return Err(Error::NonFinite {
                    context: format!("map increment at node {v}"),
                    point: d.iter().copied().collect(),
                });
            }
        }
        let mut out = self.clone();
        for (val, d) in out.values.iter_mut().zip(delta) {
            *val += d;
        }
        for (e, tri) in self.mesh.elements.iter().enumerate() {
            for (i, &v) in tri.iter().enumerate() {
                let g = self.mesh.grads[e][i];
                out.jac[e][0] += delta[v] * g.x;
                out.jac[e][1] += delta[v] * g.y;
                out.images[e] += delta[v] / 3.0;
            }
        }
        Ok(out)
    }

    /// Pull a one-form on R^6 back through the map: on each element the
    /// result is `alpha(f_x) dx + alpha(f_y) dy` evaluated at the barycenter
    /// image.
    pub fn pullback(&self, form: &OneForm) -> Result<OneFormField> {
        let n = self.mesh.num_elements();
        let mut field = OneFormField::zeros(n);
        for e in 0..n {
            let c = form.coeff_at(&self.images[e])?;
            field.dx[e] = c.dot(&self.jac[e][0]);
            field.dy[e] = c.dot(&self.jac[e][1]);
        }
        Ok(field)
    }

    /// Pull back both defining forms of a distribution.
    pub fn pullback_pair(
        &self,
        dist: &CorankTwoDistribution,
    ) -> Result<[OneFormField; 2]> {
        Ok([
            self.pullback(&dist.alpha1)?,
            self.pullback(&dist.alpha2)?,
        ])
    }

    /// Pull back one of the two defining forms, selected by index.
    pub fn pullback_component(
        &self,
        dist: &CorankTwoDistribution,
        which: FormIndex,
    ) -> Result<OneFormField> {
        match which {
            FormIndex::One => self.pullback(&dist.alpha1),
            FormIndex::Two => self.pullback(&dist.alpha2),
        }
    }

    /// Decompose the differential on every element into a distribution frame
    /// component and coefficients on the two transverse directions.
    ///
    /// Requires the distribution to carry transverse direction fields; the
    /// split solves the 6x6 system `[B | Z1 | Z2] (xi, t1, t2) = f_col` at
    /// each barycenter image.
    pub fn split_along(
        &self,
        dist: &CorankTwoDistribution,
    ) -> Result<Vec<ElementSplit>> {
        let (z1, z2) = dist.reeb.as_ref().ok_or(Error::MissingReeb {
            needed_for: "splitting a map differential along the distribution",
        })?;
        let mut out = Vec::with_capacity(self.mesh.num_elements());
        for e in 0..self.mesh.num_elements() {
            let image = self.images[e];
            let frame = kernel_basis(dist, &image)?;
            let z1v = z1.value_at(&image)?;
            let z2v = z2.value_at(&image)?;
            let mut m = Matrix6::zeros();
            m.fixed_view_mut::<6, 4>(0, 0).copy_from(&frame.basis);
            m.set_column(4, &z1v);
            m.set_column(5, &z2v);
            let lu = m.lu();
            let mut xi = [Vector4::zeros(); 2];
            let mut transverse = [[0.0; 2]; 2];
            let mut horizontal = [Point6::zeros(); 2];
            for col in 0..2 {
                let sol = lu.solve(&self.jac[e][col]).ok_or(Error::Degenerate {
                    point: image.iter().copied().collect(),
                })?;
                xi[col] = Vector4::new(sol[0], sol[1], sol[2], sol[3]);
                transverse[col] = [sol[4], sol[5]];
                horizontal[col] = frame.basis * xi[col];
            }
            out.push(ElementSplit {
                image,
                frame,
                xi,
                transverse,
                horizontal,
            });
        }
        Ok(out)
    }

    /// Singular values of the 6x2 differential on element `e`.
    pub fn jacobian_singular_values(&self, e: usize) -> [f64; 2] {
        let mut m = SMatrix::<f64, 6, 2>::zeros();
        m.set_column(0, &self.jac[e][0]);
        m.set_column(1, &self.jac[e][1]);
        let sv = m.singular_values();
        [sv[0], sv[1]]
    }
}
