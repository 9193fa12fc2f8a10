//! Pointwise structure of the bundled models: fatness, Reeb directions,
//! step-two bracket generation, and the existence constraints on the type.
//!
//! The holomorphic-contact model passes every check at every sampled point;
//! the integrable pair has closed defining forms, so its curvature Gram
//! matrices vanish and fatness fails everywhere.

use fatdisc::geometry::{
    bracket_step_two, check_reeb_directions, check_type_constraints, holomorphic_contact_model,
    integrable_pair, is_fat_at, kernel_basis, Point6,
};
use fatdisc::Result;
use nalgebra::Matrix4;
use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

const POINTS: usize = 200;
const TOL: f64 = 1e-10;

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut points: Vec<Point6> = vec![Point6::zeros()];
    points.extend((1..POINTS).map(|_| Point6::from_fn(|_, _| rng.gen_range(-1.5..1.5))));

    for dist in [holomorphic_contact_model(), integrable_pair()] {
        let mut fat_count = 0usize;
        let mut min_im = f64::INFINITY;
        let mut worst_square = 0.0f64;
        let mut worst_reeb = 0.0f64;
        let mut spans_count = 0usize;
        let has_reeb = dist.reeb.is_some();
        for x in &points {
            let fat = is_fat_at(&dist, x, TOL)?;
            fat_count += fat.fat as usize;
            min_im = min_im.min(fat.min_im_ratio);
            let a = kernel_basis(&dist, x)?.connecting;
            worst_square = worst_square.max((a * a + Matrix4::identity()).amax());
            spans_count += bracket_step_two(&dist, x, TOL)?.spans as usize;
            if has_reeb {
                let rr = check_reeb_directions(&dist, x, TOL)?;
                worst_reeb = worst_reeb.max(
                    rr.bracket
                        .max(rr.cross[0])
                        .max(rr.cross[1])
                        .max(rr.pairing.iter().flatten().fold(0.0f64, |m, v| m.max(*v))),
                );
            }
        }
        println!("model: {}", dist.label);
        println!("  fat at {fat_count}/{POINTS} points (min |Im| ratio {min_im:.3e})");
        println!("  brackets span R^6 at {spans_count}/{POINTS} points");
        println!("  worst |A^2 + I| where defined: {worst_square:.3e}");
        if has_reeb {
            println!("  worst Reeb residual: {worst_reeb:.3e}");
        } else {
            println!("  no Reeb pair declared");
        }
    }

    // Existence constraints on the type (k, n): corank k fat distributions
    // on an n-manifold need k | rho-compatible dimensions.
    println!("type constraints:");
    for (k, n) in [(2u64, 6u64), (2, 7), (3, 7), (1, 5)] {
        let check = check_type_constraints(k, n)?;
        println!(
            "  (k, n) = ({k}, {n}): rho({k}) = {}, {}",
            check.rho,
            if check.admissible() {
                "admissible".to_string()
            } else {
                format!("ruled out ({} constraint(s) fail)", check.failures.len())
            }
        );
    }
    Ok(())
}
