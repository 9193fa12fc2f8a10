//! Frame-level data at a single point of the model: the orthonormal kernel
//! basis, the curvature Gram matrices, the connecting automorphism, the
//! compatible complex structure, and a symplectic complement.

use fatdisc::geometry::{
    compatible_acs, holomorphic_contact_model, kernel_basis, symplectic_complement, FormIndex,
    Point6,
};
use fatdisc::Result;
use nalgebra::Matrix4;

fn print_matrix(name: &str, m: &Matrix4<f64>) {
    println!("{name}:");
    for i in 0..4 {
        println!(
            "  [{:+.4} {:+.4} {:+.4} {:+.4}]",
            m[(i, 0)],
            m[(i, 1)],
            m[(i, 2)],
            m[(i, 3)]
        );
    }
}

fn main() -> Result<()> {
    let dist = holomorphic_contact_model();
    let x = Point6::new(0.4, -0.2, 0.7, 0.1, 0.0, 0.3);
    let frame = kernel_basis(&dist, &x)?;

    println!("point: {:?}", x.as_slice());
    println!("kernel residual of the basis: {:.3e}", frame.kernel_residual(&dist));
    print_matrix("omega1 in frame coordinates", &frame.omega1);
    print_matrix("omega2 in frame coordinates", &frame.omega2);
    print_matrix("connecting automorphism A", &frame.connecting);

    let a = frame.connecting;
    println!(
        "|A^2 + I| = {:.3e} (the model's A is a complex structure)",
        (a * a + Matrix4::identity()).amax()
    );
    println!(
        "|omega1 A - omega2| = {:.3e}",
        (frame.omega1 * a - frame.omega2).amax()
    );

    let j = compatible_acs(&frame)?;
    println!("compatible complex structure J (polar factor of omega1):");
    print_matrix("J", &j);
    println!("|J^2 + I| = {:.3e}", (j * j + Matrix4::identity()).amax());

    // omega1-complement of a single kernel vector: three dimensions, and
    // the vector itself is isotropic, so it lies in its own complement.
    let v = frame.ambient(&nalgebra::Vector4::new(1.0, 0.0, 0.0, 0.0));
    let comp = symplectic_complement(&dist, &x, &[v], FormIndex::One)?;
    println!("omega1-complement of one kernel vector: {} dimensions", comp.len());
    let coords = frame.coords(&v);
    let pairings: Vec<f64> = comp
        .iter()
        .map(|w| (frame.omega1 * frame.coords(w)).dot(&coords).abs())
        .collect();
    println!(
        "worst pairing against the complement: {:.3e}",
        pairings.iter().fold(0.0f64, |m, p| m.max(*p))
    );
    Ok(())
}
