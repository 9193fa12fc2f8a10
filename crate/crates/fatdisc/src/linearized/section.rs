//! Sections of the pulled-back tangent bundle along a disc map, split into
//! Reeb components and a distribution component.

use nalgebra::Vector4;

use crate::disc::admissibility::EllipticCoefficients;
use crate::disc::map::MeshMap;
use crate::disc::mesh::DiscMesh;
use crate::disc::norms::{graded_norm_elements, graded_norm_nodal};
use crate::error::{Error, Result};
use crate::geometry::{CorankTwoDistribution, Point6};

/// A vector field along a disc map, written as
/// `aZ1 + bZ2 + d0` with `a`, `b` nodal scalars and `d0` a per-element
/// distribution component.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionAlongMap {
    /// Nodal coefficient of the first Reeb direction.
    pub a: Vec<f64>,
    /// Nodal coefficient of the second Reeb direction.
    pub b: Vec<f64>,
    /// Components of the distribution part on the tangent frame
    /// `(X, Y, JX, JY)`, one per element.
    pub d0_frame: Vec<Vector4<f64>>,
    /// The distribution part in ambient coordinates, one per element.
    pub d0_ambient: Vec<Point6>,
}

impl SectionAlongMap {
    pub fn zero(mesh: &DiscMesh) -> Self {
        SectionAlongMap {
            a: vec![0.0; mesh.num_nodes()],
            b: vec![0.0; mesh.num_nodes()],
            d0_frame: vec![Vector4::zeros(); mesh.num_elements()],
            d0_ambient: vec![Point6::zeros(); mesh.num_elements()],
        }
    }

    /// Constant Reeb coefficients with no distribution part.
    pub fn constant_reeb(mesh: &DiscMesh, a: f64, b: f64) -> Self {
        SectionAlongMap {
            a: vec![a; mesh.num_nodes()],
            b: vec![b; mesh.num_nodes()],
            d0_frame: vec![Vector4::zeros(); mesh.num_elements()],
            d0_ambient: vec![Point6::zeros(); mesh.num_elements()],
        }
    }

    /// Build a section from nodal Reeb coefficients and tangent-frame
    /// components of the distribution part.
    pub fn from_frame_components(
        coeffs: &EllipticCoefficients,
        a: Vec<f64>,
        b: Vec<f64>,
        components: Vec<Vector4<f64>>,
    ) -> Result<Self> {
        if components.len() != coeffs.len() {
            return Err(Error::Domain(format!(
                "{} frame components for {} elements",
                components.len(),
                coeffs.len()
            )));
        }
        let mut d0_ambient = Vec::with_capacity(components.len());
        for (frame, w) in coeffs.frames.iter().zip(&components) {
            let c =
                frame.x * w[0] + frame.y * w[1] + frame.jx * w[2] + frame.jy * w[3];
            d0_ambient.push(frame.basis * c);
        }
        Ok(SectionAlongMap {
            a,
            b,
            d0_frame: components,
            d0_ambient,
        })
    }

    /// The assembled per-node vector `d0 + aZ1 + bZ2`, with the element
    /// field `d0` averaged to the nodes by area.
    pub fn assembled_at_nodes(
        &self,
        dist: &CorankTwoDistribution,
        map: &MeshMap,
    ) -> Result<Vec<Point6>> {
        let (z1, z2) = dist.reeb_pair("assembling a section along a map")?;
        let mesh = &map.mesh;
        let mut out = Vec::with_capacity(mesh.num_nodes());
        for (v, elems) in mesh.node_elems.iter().enumerate() {
            let mut d0 = Point6::zeros();
            let mut total = 0.0;
            for &e in elems {
                d0 += self.d0_ambient[e] * mesh.areas[e];
                total += mesh.areas[e];
            }
            d0 /= total;
            let p = &map.values[v];
            out.push(d0 + z1.value_at(p)? * self.a[v] + z2.value_at(p)? * self.b[v]);
        }
        Ok(out)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        SectionAlongMap {
            a: self.a.iter().map(|v| v * factor).collect(),
            b: self.b.iter().map(|v| v * factor).collect(),
            d0_frame: self.d0_frame.iter().map(|w| w * factor).collect(),
            d0_ambient: self.d0_ambient.iter().map(|u| u * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        SectionAlongMap {
            a: self.a.iter().zip(&other.a).map(|(x, y)| x + y).collect(),
            b: self.b.iter().zip(&other.b).map(|(x, y)| x + y).collect(),
            d0_frame: self
                .d0_frame
                .iter()
                .zip(&other.d0_frame)
                .map(|(x, y)| x + y)
                .collect(),
            d0_ambient: self
                .d0_ambient
                .iter()
                .zip(&other.d0_ambient)
                .map(|(x, y)| x + y)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(-1.0))
    }
}

/// Graded norm of a section: the larger of the nodal Reeb part and the
/// elementwise distribution part.
pub fn section_norm(mesh: &DiscMesh, s: &SectionAlongMap, order: usize) -> Result<f64> {
    let reeb = graded_norm_nodal(mesh, &[s.a.clone(), s.b.clone()], order)?;
    let mut comps = vec![vec![0.0; s.d0_ambient.len()]; 6];
    for (e, u) in s.d0_ambient.iter().enumerate() {
        for i in 0..6 {
            comps[i][e] = u[i];
        }
    }
    let d0 = graded_norm_elements(mesh, &comps, order)?;
    Ok(reeb.max(d0))
}

/// How the recovered vertical potential is tied to the prescribed boundary
/// values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryMode {
    /// Pin the potential at the base node only and report the residual
    /// mismatch along the rest of the rim.
    #[default]
    PinBase,
    /// Enforce the rim values in the least-squares sense alongside the
    /// gradient fit.
    WeakBoundary,
}

/// Dirichlet data for the reduced solve: values on the boundary ring in
/// mesh boundary order, plus a distinguished base node.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub a0: Vec<f64>,
    pub b0: Vec<f64>,
    /// Position of the base node within the boundary list.
    pub base: usize,
    pub mode: BoundaryMode,
}

impl BoundaryData {
    pub fn zero(mesh: &DiscMesh) -> Self {
        BoundaryData {
            a0: vec![0.0; mesh.boundary.len()],
            b0: vec![0.0; mesh.boundary.len()],
            base: 0,
            mode: BoundaryMode::default(),
        }
    }

    pub fn from_fns(
        mesh: &DiscMesh,
        a0: impl Fn(f64, f64) -> f64,
        b0: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let eval = |f: &dyn Fn(f64, f64) -> f64| {
            mesh.boundary
                .iter()
                .map(|&v| f(mesh.nodes[v].x, mesh.nodes[v].y))
                .collect()
        };
        BoundaryData {
            a0: eval(&a0),
            b0: eval(&b0),
            base: 0,
            mode: BoundaryMode::default(),
        }
    }

    /// Read boundary values off nodal fields.
    pub fn from_fields(mesh: &DiscMesh, a: &[f64], b: &[f64]) -> Self {
        BoundaryData {
            a0: mesh.boundary.iter().map(|&v| a[v]).collect(),
            b0: mesh.boundary.iter().map(|&v| b[v]).collect(),
            base: 0,
            mode: BoundaryMode::default(),
        }
    }

    pub fn with_mode(mut self, mode: BoundaryMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self, mesh: &DiscMesh) -> Result<()> {
        if self.a0.len() != mesh.boundary.len() || self.b0.len() != mesh.boundary.len() {
            return Err(Error::Domain(format!(
                "boundary data carries {} + {} values for {} boundary nodes",
                self.a0.len(),
                self.b0.len(),
                mesh.boundary.len()
            )));
        }
        if self.base >= mesh.boundary.len() {
            return Err(Error::Domain(format!(
                "base index {} outside the boundary ring of {} nodes",
                self.base,
                mesh.boundary.len()
            )));
        }
        for v in self.a0.iter().chain(&self.b0) {
            if !v.is_finite() {
                return Err(Error::Domain("boundary data is not finite".into()));
            }
        }
        Ok(())
    }
}
