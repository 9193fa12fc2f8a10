//! Pull the defining forms back along disc maps and inspect admissibility.
//!
//! The graphical fixture is horizontal, so both pullbacks vanish to
//! rounding and every admissibility condition holds; its reduced elliptic
//! coefficients are the plane rotation, making the eliminated scalar
//! problem the Laplacian.  A disc mapped into a single complex line is the
//! classic failure: its tangent images are J-invariant, which breaks the
//! totally-real condition on every element.

use fatdisc::disc::{admissibility_check, coefficient_fields, pair_sup, DEFAULT_ADMISSIBILITY_TOL};
use fatdisc::fixtures::{complex_line_map, legendrian_map};
use fatdisc::geometry::holomorphic_contact_model;
use fatdisc::Result;

const RESOLUTION: u32 = 24;

fn main() -> Result<()> {
    let dist = holomorphic_contact_model();

    let map = legendrian_map(RESOLUTION)?;
    println!(
        "mesh: {} nodes, {} elements, h = {:.4e}",
        map.mesh.num_nodes(),
        map.mesh.num_elements(),
        map.mesh.h
    );
    let pair = map.pullback_pair(&dist)?;
    println!("horizontal fixture: sup |f* alpha| = {:.3e}", pair_sup(&pair));

    let adm = admissibility_check(&dist, &map, DEFAULT_ADMISSIBILITY_TOL)?;
    println!(
        "admissible: {} over {} elements (max discriminant {:.3e}, totally-real margin {:.3e})",
        adm.admissible, adm.elements, adm.max_discriminant, adm.totally_real_margin
    );

    let coeffs = coefficient_fields(&dist, &map)?;
    let rotation = [0.0, -1.0, 1.0, 0.0];
    let mut worst_main = 0.0f64;
    let mut worst_primed = 0.0f64;
    for e in 0..coeffs.main.len() {
        for j in 0..4 {
            worst_main = worst_main.max((coeffs.main[e][j] - rotation[j]).abs());
            worst_primed = worst_primed.max(coeffs.primed[e][j].abs());
        }
    }
    println!("deviation of (p, q, r, s) from the rotation (0, -1, 1, 0): {worst_main:.3e}");
    println!("largest primed coefficient (tangent invariance defect): {worst_primed:.3e}");

    let line = complex_line_map(RESOLUTION)?;
    let bad = admissibility_check(&dist, &line, DEFAULT_ADMISSIBILITY_TOL)?;
    println!(
        "complex-line counterexample: admissible = {}, totally-real violations on {}/{} elements",
        bad.admissible, bad.counts.totally_real, bad.elements
    );
    Ok(())
}
