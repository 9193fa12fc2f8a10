//! Recover a horizontal disc from a perturbed one with the damped Newton
//! iteration.

use fatdisc::disc::{admissibility_check, pair_sup, OneFormField};
use fatdisc::fixtures::{legendrian_map, perturbed_map};
use fatdisc::geometry::holomorphic_contact_model;
use fatdisc::solve::{newton_invert, NewtonStatus, SolveOptions};
use fatdisc::Result;

const RESOLUTION: u32 = 32;
const SEED: u64 = 7;
const AMPLITUDE: f64 = 1e-3;

fn main() -> Result<()> {
    let dist = holomorphic_contact_model();
    let base = legendrian_map(RESOLUTION)?;
    // Displace the fixture along the Reeb directions, |delta|_1 = AMPLITUDE.
    let f0 = perturbed_map(&base, SEED, AMPLITUDE)?;
    println!(
        "initial defect sup: {:.4e}",
        pair_sup(&f0.pullback_pair(&dist)?)
    );

    let opts = SolveOptions::default();
    let n = f0.mesh.num_elements();
    let zero = [OneFormField::zeros(n), OneFormField::zeros(n)];
    let out = newton_invert(&dist, &f0, &zero, &opts)?;

    println!("iter  residual       step tau");
    for (i, r) in out.log.residuals.iter().enumerate() {
        if i == 0 {
            println!("{i:4}  {r:.6e}  -");
        } else {
            println!("{i:4}  {r:.6e}  {:.3}", out.log.taus[i - 1]);
        }
    }
    let first = out.log.residuals[0];
    let last = out.log.residuals.last().copied().unwrap_or(f64::NAN);
    println!(
        "status: {}, residual drop {:.2e}",
        match out.status {
            NewtonStatus::Converged => "converged",
            NewtonStatus::MaxIters => "iteration budget exhausted",
        },
        first / last
    );
    let adm = admissibility_check(&dist, &out.map, opts.admissibility_tol)?;
    println!("recovered map admissible: {}", adm.admissible);
    Ok(())
}
