//! Cutoff data for the local homotopy and the defect-order probe.
//!
//! Around a marked point the horizontality defect is damped by a radial
//! plateau profile.  The support radius is shrunk by bisection until the
//! damped defect is small in the requested graded norm, which is possible
//! exactly when the defect vanishes to high enough order at the point.

use crate::disc::map::{MeshMap, OneFormField};
use crate::disc::mesh::Point2;
use crate::disc::norms::{derivative_stack, element_to_nodal, graded_norm_forms};
use crate::error::{Error, Result};
use crate::geometry::CorankTwoDistribution;

/// A derivative level counts as vanishing when its value at the marked
/// node stays below this fraction of the level's interior sup.
pub const ORDER_REL_TOL: f64 = 0.05;

/// Values below this are treated as exact zeros by the order probe, so
/// that recovered-derivative noise on horizontal maps never registers.
pub const ORDER_ABS_FLOOR: f64 = 1e-8;

/// Support radii below this many mesh widths are unresolvable.
const MIN_SUPPORT_WIDTHS: f64 = 3.0;

/// Radius of the neighborhood whose sup calibrates the order probe.
/// Comparing against a global sup would let boundary-layer growth of the
/// defect mask genuine non-vanishing at the marked point.
const LOCAL_SCALE_RADIUS: f64 = 0.35;

fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Radial plateau: identically 1 on [0, 1/2], identically 0 on [1, inf),
/// smooth and strictly decreasing in between.
pub fn cutoff_profile(u: f64) -> f64 {
    let up = smooth_step(1.0 - u);
    let down = smooth_step(u - 0.5);
    if up == 0.0 {
        return 0.0;
    }
    up / (up + down)
}

/// The damped defect `-rho * D(f)` together with its radii.
#[derive(Debug, Clone)]
pub struct CutoffField {
    pub field: [OneFormField; 2],
    /// Radius of the inner plateau W where the damping is exactly -1.
    pub w_radius: f64,
    /// Radius outside which the field vanishes identically.
    pub support_radius: f64,
    /// Graded norm of the field at the order it was controlled in.
    pub norm: f64,
    pub norm_order: usize,
}

fn damped_defect(
    map: &MeshMap,
    g0: &[OneFormField; 2],
    sigma: &Point2,
    delta: f64,
) -> [OneFormField; 2] {
    let mesh = &map.mesh;
    let mut out = [
        OneFormField::zeros(mesh.num_elements()),
        OneFormField::zeros(mesh.num_elements()),
    ];
    for e in 0..mesh.num_elements() {
        let u = (mesh.barycenters[e] - sigma).norm() / delta;
        let w = cutoff_profile(u);
        for i in 0..2 {
            out[i].dx[e] = -w * g0[i].dx[e];
            out[i].dy[e] = -w * g0[i].dy[e];
        }
    }
    out
}

/// Build the damped defect at `sigma`, shrinking the support by bisection
/// until its order-`r` graded norm drops below `eps`.
pub fn make_cutoff(
    dist: &CorankTwoDistribution,
    map: &MeshMap,
    sigma: &Point2,
    r: usize,
    eps: f64,
) -> Result<CutoffField> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("cutoff tolerance {eps} must be positive")));
    }
    let margin = 1.0 - sigma.norm();
    if margin <= 0.0 {
        return Err(Error::Domain(format!(
            "marked point ({}, {}) lies outside the open disc",
            sigma.x, sigma.y
        )));
    }
    let mesh = map.mesh.clone();
    let g0 = map.pullback_pair(dist)?;
    let floor = MIN_SUPPORT_WIDTHS * mesh.h;
    let mut delta = margin.min(0.9);
    loop {
        let field = damped_defect(map, &g0, sigma, delta);
        let norm = graded_norm_forms(&mesh, &field, r)?;
        if norm < eps {
            return Ok(CutoffField {
                field,
                w_radius: 0.5 * delta,
                support_radius: delta,
                norm,
                norm_order: r,
            });
        }
        delta *= 0.5;
        if delta < floor {
            let suggested = (2 * mesh.resolution).max(mesh.resolution + 1) as u32;
            return Err(Error::Scale {
                msg: format!(
                    "cutoff support shrank to {delta:.3e} (below {MIN_SUPPORT_WIDTHS} mesh \
                     widths) with |g_eps|_{r} = {norm:.3e} still above {eps:.3e}"
                ),
                suggested_resolution: suggested,
            });
        }
    }
}

/// Largest `k <= max_r` such that the defect `D(f)` and its recovered
/// derivatives through order `k` vanish at the node nearest `sigma`,
/// or -1 when already the defect itself is nonzero there.
pub fn infinitesimal_order(
    dist: &CorankTwoDistribution,
    map: &MeshMap,
    sigma: &Point2,
    max_r: usize,
) -> Result<i32> {
    let mesh = map.mesh.clone();
    let g0 = map.pullback_pair(dist)?;
    let components = vec![
        element_to_nodal(&mesh, &g0[0].dx),
        element_to_nodal(&mesh, &g0[0].dy),
        element_to_nodal(&mesh, &g0[1].dx),
        element_to_nodal(&mesh, &g0[1].dy),
    ];
    let stack = derivative_stack(&mesh, &components, max_r)?;
    let v = mesh.nearest_node(sigma);
    let radius = LOCAL_SCALE_RADIUS.max(4.0 * mesh.h);
    let mut local: Vec<usize> = mesh
        .interior
        .iter()
        .copied()
        .filter(|&i| (mesh.nodes[i] - sigma).norm() <= radius)
        .collect();
    if local.is_empty() {
        local = mesh.interior.clone();
    }
    let mut order: i32 = -1;
    for (k, level) in stack.iter().enumerate() {
        let at_node = level
            .iter()
            .map(|f| f[v].abs())
            .fold(0.0_f64, f64::max);
        let scale = level
            .iter()
            .flat_map(|f| local.iter().map(move |&i| f[i].abs()))
            .fold(0.0_f64, f64::max);
        if at_node <= ORDER_REL_TOL * scale.max(ORDER_ABS_FLOOR) {
            order = k as i32;
        } else {
            break;
        }
    }
    Ok(order)
}
