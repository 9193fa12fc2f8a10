//! Graded sup-norms of mesh fields.
//!
//! Derivatives are taken by gradient recovery: the elementwise-constant
//! gradient of the piecewise-linear interpolant, averaged back to the nodes
//! with area weights.  The order-n norm is the cumulative maximum of the
//! derivative sup-norms up to total order n; zeroth-order sups run over all
//! nodes (or elements), higher orders over interior nodes only, where the
//! recovery stencil is two-sided.

use crate::disc::map::OneFormField;
use crate::disc::mesh::DiscMesh;
use crate::error::{Error, Result};
use crate::geometry::Point6;

/// Highest total derivative order the recovery stencil supports.
pub const MAX_NORM_ORDER: usize = 3;

/// A labeled graded-norm value, as carried in solve reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradedNorm {
    pub order: usize,
    pub value: f64,
}

fn check_order(order: usize) -> Result<()> {
    if order > MAX_NORM_ORDER {
        return Err(Error::Capability(format!(
            "graded norms support derivative order <= {MAX_NORM_ORDER}, got {order}"
        )));
    }
    Ok(())
}

/// Area-weighted average of an element field at each node.
pub fn element_to_nodal(mesh: &DiscMesh, field: &[f64]) -> Vec<f64> {
    debug_assert_eq!(field.len(), mesh.num_elements());
    let mut out = vec![0.0; mesh.num_nodes()];
    for (v, elems) in mesh.node_elems.iter().enumerate() {
        let mut weighted = 0.0;
        let mut total = 0.0;
        for &e in elems {
            weighted += mesh.areas[e] * field[e];
            total += mesh.areas[e];
        }
        out[v] = weighted / total;
    }
    out
}

/// Recovered nodal gradient of a nodal field: the area-weighted average of
/// the incident element gradients.
pub fn recovered_gradient(mesh: &DiscMesh, nodal: &[f64]) -> (Vec<f64>, Vec<f64>) {
    debug_assert_eq!(nodal.len(), mesh.num_nodes());
    let mut egx = vec![0.0; mesh.num_elements()];
    let mut egy = vec![0.0; mesh.num_elements()];
    for (e, tri) in mesh.elements.iter().enumerate() {
        let mut gx = 0.0;
        let mut gy = 0.0;
        for (i, &v) in tri.iter().enumerate() {
            gx += nodal[v] * mesh.grads[e][i].x;
            gy += nodal[v] * mesh.grads[e][i].y;
        }
        egx[e] = gx;
        egy[e] = gy;
    }
    (element_to_nodal(mesh, &egx), element_to_nodal(mesh, &egy))
}

/// Nodal fields of all derivatives of each component, by total order:
/// `stack[k]` holds `components.len() * 2^k` fields of order `k`.
pub fn derivative_stack(
    mesh: &DiscMesh,
    components: &[Vec<f64>],
    order: usize,
) -> Result<Vec<Vec<Vec<f64>>>> {
    check_order(order)?;
    for c in components {
        if c.len() != mesh.num_nodes() {
            return Err(Error::Domain(format!(
                "field with {} values on a mesh with {} nodes",
                c.len(),
                mesh.num_nodes()
            )));
        }
    }
    let mut stack = vec![components.to_vec()];
    for _ in 0..order {
        let prev = stack.last().unwrap();
        let mut next = Vec::with_capacity(prev.len() * 2);
        for field in prev {
            let (gx, gy) = recovered_gradient(mesh, field);
            next.push(gx);
            next.push(gy);
        }
        stack.push(next);
    }
    Ok(stack)
}

fn sup_at(fields: &[Vec<f64>], nodes: &[usize]) -> f64 {
    let mut m = 0.0f64;
    for f in fields {
        for &v in nodes {
            m = m.max(f[v].abs());
        }
    }
    m
}

/// Cumulative graded norm of a tuple of nodal fields.
pub fn graded_norm_nodal(mesh: &DiscMesh, components: &[Vec<f64>], order: usize) -> Result<f64> {
    let stack = derivative_stack(mesh, components, order)?;
    let all: Vec<usize> = (0..mesh.num_nodes()).collect();
    let mut norm = sup_at(&stack[0], &all);
    for level in stack.iter().skip(1) {
        norm = norm.max(sup_at(level, &mesh.interior));
    }
    Ok(norm)
}

/// Cumulative graded norm of a tuple of element fields.  The zeroth-order
/// sup runs over elements; derivatives act on the area-averaged nodal
/// representative.
pub fn graded_norm_elements(
    mesh: &DiscMesh,
    components: &[Vec<f64>],
    order: usize,
) -> Result<f64> {
    check_order(order)?;
    let mut norm = 0.0f64;
    for c in components {
        if c.len() != mesh.num_elements() {
            return Err(Error::Domain(format!(
                "field with {} values on a mesh with {} elements",
                c.len(),
                mesh.num_elements()
            )));
        }
        for &v in c {
            norm = norm.max(v.abs());
        }
    }
    if order == 0 {
        return Ok(norm);
    }
    let nodal: Vec<Vec<f64>> = components
        .iter()
        .map(|c| element_to_nodal(mesh, c))
        .collect();
    let stack = derivative_stack(mesh, &nodal, order)?;
    for level in stack.iter().skip(1) {
        norm = norm.max(sup_at(level, &mesh.interior));
    }
    Ok(norm)
}

/// Graded norm of a pair of one-form fields (four element components).
pub fn graded_norm_forms(
    mesh: &DiscMesh,
    pair: &[OneFormField; 2],
    order: usize,
) -> Result<f64> {
    let components = [
        pair[0].dx.clone(),
        pair[0].dy.clone(),
        pair[1].dx.clone(),
        pair[1].dy.clone(),
    ];
    graded_norm_elements(mesh, &components, order)
}

/// Graded norm of a nodal R^6 field (six scalar components).
pub fn graded_norm_map_values(
    mesh: &DiscMesh,
    values: &[Point6],
    order: usize,
) -> Result<f64> {
    let mut components = vec![vec![0.0; values.len()]; 6];
    for (v, p) in values.iter().enumerate() {
        for i in 0..6 {
            components[i][v] = p[i];
        }
    }
    graded_norm_nodal(mesh, &components, order)
}

/// All graded norms of a nodal tuple up to `max_order`, cumulative.
pub fn graded_norm_profile(
    mesh: &DiscMesh,
    components: &[Vec<f64>],
    max_order: usize,
) -> Result<Vec<GradedNorm>> {
    let stack = derivative_stack(mesh, components, max_order)?;
    let all: Vec<usize> = (0..mesh.num_nodes()).collect();
    let mut out = Vec::with_capacity(max_order + 1);
    let mut running = sup_at(&stack[0], &all);
    out.push(GradedNorm {
        order: 0,
        value: running,
    });
    for (k, level) in stack.iter().enumerate().skip(1) {
        running = running.max(sup_at(level, &mesh.interior));
        out.push(GradedNorm {
            order: k,
            value: running,
        });
    }
    Ok(out)
}

/// Observed convergence order of an error sequence on refining meshes.
///
/// The plain least-squares slope of `ln e` against `ln h` understates the
/// order while the next term of the error expansion is still visible, so
/// with three or more points the slope is sharpened by fitting
/// `e = C h^p + D h^(p+1)` through the finest three.  The fitted `p` is
/// kept when the fit is well posed, the correction stays subdominant at
/// the coarsest of the three, and the result stays near the raw slope;
/// otherwise the slope stands.  Needs at least two positive errors on
/// strictly decreasing positive `h`.
pub fn observed_order(h: &[f64], e: &[f64]) -> Option<f64> {
    if h.len() != e.len() || h.len() < 2 {
        return None;
    }
    if h.iter().any(|&v| !(v > 0.0)) || e.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    if h.windows(2).any(|w| w[1] >= w[0]) {
        return None;
    }
    let n = h.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (&hi, &ei) in h.iter().zip(e) {
        let (x, y) = (hi.ln(), ei.ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    if h.len() < 3 {
        return Some(slope);
    }
    let k = h.len() - 3;
    match two_term_order(&h[k..], &e[k..]) {
        Some(p) if (p - slope).abs() <= 0.75 => Some(p),
        _ => Some(slope),
    }
}

/// Solve `e_i = C h_i^p + D h_i^(p+1)` through three points for `p`.
///
/// For a candidate `p` the first two points fix `(C, D)` linearly; the
/// root of the third-point residual is bracketed by a coarse scan and
/// polished by bisection.  Of several roots the one nearest the raw
/// slope wins.  `None` when no bracket exists, `C` comes out
/// nonpositive, or the correction term rivals the leading one.
fn two_term_order(h: &[f64], e: &[f64]) -> Option<f64> {
    debug_assert_eq!(h.len(), 3);
    // Dividing row i by h_i^p keeps the 2x2 solve at unit scale:
    // C + D h_i = e_i h_i^(-p).
    let coeffs = |p: f64| -> (f64, f64) {
        let g0 = e[0] * h[0].powf(-p);
        let g1 = e[1] * h[1].powf(-p);
        let d = (g0 - g1) / (h[0] - h[1]);
        (g0 - d * h[0], d)
    };
    let residual = |p: f64| -> f64 {
        let (c, d) = coeffs(p);
        c + d * h[2] - e[2] * h[2].powf(-p)
    };
    let (lo, hi, steps) = (0.05f64, 6.0f64, 240usize);
    let width = (hi - lo) / steps as f64;
    let mut best: Option<f64> = None;
    let slope_guess = (e[0] / e[2]).ln() / (h[0] / h[2]).ln();
    let mut r_prev = residual(lo);
    for i in 1..=steps {
        let p = lo + width * i as f64;
        let r = residual(p);
        if r_prev == 0.0 || r_prev.signum() != r.signum() {
            let (mut a, mut b) = (p - width, p);
            for _ in 0..80 {
                let mid = 0.5 * (a + b);
                if residual(a).signum() == residual(mid).signum() {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let root = 0.5 * (a + b);
            let (c, d) = coeffs(root);
            if c > 0.0 && d.abs() * h[0] <= 0.9 * c {
                best = match best {
                    Some(prev) if (prev - slope_guess).abs() <= (root - slope_guess).abs() => {
                        Some(prev)
                    }
                    _ => Some(root),
                };
            }
        }
        r_prev = r;
    }
    best
}

/// L2 norm of the piecewise-linear interpolant of a nodal field, integrated
/// exactly with the P1 mass matrix.
pub fn mesh_l2(mesh: &DiscMesh, nodal: &[f64]) -> f64 {
    debug_assert_eq!(nodal.len(), mesh.num_nodes());
    let mut total = 0.0;
    for (e, tri) in mesh.elements.iter().enumerate() {
        let (u0, u1, u2) = (nodal[tri[0]], nodal[tri[1]], nodal[tri[2]]);
        total += mesh.areas[e] / 6.0
            * (u0 * u0 + u1 * u1 + u2 * u2 + u0 * u1 + u0 * u2 + u1 * u2);
    }
    total.sqrt()
}
