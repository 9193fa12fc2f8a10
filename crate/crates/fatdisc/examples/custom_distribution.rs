//! Define a corank-2 distribution from coefficient expressions, the same
//! syntax the command line accepts, and test it pointwise.
//!
//! The pair below mixes the two standard defining forms.  Mixing keeps the
//! kernel, so the distribution is still fat, but the connecting
//! automorphism is no longer a complex structure: its eigenvalues move off
//! the unit circle while staying away from the real axis.

use fatdisc::expr::{one_form_from_exprs, parse_coeff_list, vector_field_from_exprs};
use fatdisc::geometry::{fatness_via_phi, is_fat_at, kernel_basis, CorankTwoDistribution, Point6};
use fatdisc::Result;
use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

fn main() -> Result<()> {
    // alpha1' = alpha1 + 0.3 alpha2, alpha2' = alpha2, coefficients ordered
    // (x1, x2, y1, y2, z1, z2).
    let a1 = one_form_from_exprs(
        "alpha1",
        parse_coeff_list("-y1 - 0.3*y2, y2 - 0.3*y1, 0, 0, 1, 0.3", "alpha1")?,
    );
    let a2 = one_form_from_exprs(
        "alpha2",
        parse_coeff_list("-y2, -y1, 0, 0, 0, 1", "alpha2")?,
    );
    // dual pair: alpha_i(Z_j) = delta_ij.
    let z1 = vector_field_from_exprs("reeb1", parse_coeff_list("0, 0, 0, 0, 1, 0", "reeb1")?);
    let z2 = vector_field_from_exprs(
        "reeb2",
        parse_coeff_list("0, 0, 0, 0, -0.3, 1", "reeb2")?,
    );
    let dist = CorankTwoDistribution::new("mixed", a1, a2).with_reeb(z1, z2);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut fat_count = 0usize;
    let mut agree = true;
    for i in 0..100 {
        let x = Point6::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let report = is_fat_at(&dist, &x, 1e-8)?;
        fat_count += report.fat as usize;
        if i == 0 {
            println!("eigenvalues of the connecting automorphism at the first point:");
            for ev in &report.eigenvalues {
                println!("  {:+.6} {:+.6}i", ev.re, ev.im);
            }
        }
        // Cross-check against the kernel-vector characterization on a few
        // directions.
        let frame = kernel_basis(&dist, &x)?;
        for _ in 0..5 {
            let c = nalgebra::Vector4::from_fn(|_, _| rng.gen_range(-1.0f64..1.0));
            if c.norm() < 1e-3 {
                continue;
            }
            agree &= fatness_via_phi(&dist, &x, &frame.ambient(&c), 1e-8)? == report.fat;
        }
    }
    println!("fat at {fat_count}/100 sampled points");
    println!("oracle agreement on sampled kernel vectors: {agree}");
    Ok(())
}
