//! Damped-Newton inversion of the horizontality operator.
//!
//! At each step the residual `target - D(f_k)` is fed to the right inverse
//! of the linearization at `f_k` with zero boundary data, the resulting
//! section is assembled into a nodal displacement, and a backtracking line
//! search picks the longest step that decreases the residual (and, with
//! the guard on, keeps the iterate admissible).  No smoothing is
//! interposed: at fixed mesh resolution the discretization regularizes the
//! derivative loss, so the plain damped iteration carries the continuation.

use crate::disc::admissibility::{admissibility_check, coefficient_fields};
use crate::disc::map::{pair_sup, MeshMap, OneFormField};
use crate::disc::norms::{graded_norm_forms, graded_norm_map_values, MAX_NORM_ORDER};
use crate::error::{Error, Result};
use crate::geometry::{CorankTwoDistribution, Point6};
use crate::linearized::dirichlet::ReducedSolver;
use crate::linearized::inverse::right_inverse_from;
use crate::linearized::section::BoundaryData;

/// Relative factor for the automatic residual target.
pub const AUTO_TARGET_FACTOR: f64 = 1e-8;

/// Smallest damping factor the line search will try.
const TAU_MIN: f64 = 1.0 / 1024.0;

/// Sufficient-decrease slope for accepting a damped step.
const DECREASE_SLOPE: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub max_iters: usize,
    /// Initial damping factor, reset at every iteration.
    pub damping: f64,
    /// Absolute residual target; `0.0` resolves to
    /// [`AUTO_TARGET_FACTOR`] times the initial residual.
    pub residual_target: f64,
    /// Reject steps that leave the admissible set.
    pub admissibility_guard: bool,
    /// Norm order for the smallness check and the logged data norm.
    pub s_order: usize,
    /// Optional bound on the data norm `|target - D(f0)|_{s_order}`.
    pub smallness_bound: Option<f64>,
    /// Tolerance handed to the admissibility checks.
    pub admissibility_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iters: 20,
            damping: 1.0,
            residual_target: 0.0,
            admissibility_guard: true,
            s_order: 2,
            smallness_bound: None,
            admissibility_tol: crate::disc::admissibility::DEFAULT_ADMISSIBILITY_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NewtonStatus {
    Converged,
    MaxIters,
}

#[derive(Debug, Clone)]
pub struct NewtonLog {
    /// Residual sup-norms, one entry per iterate including the start.
    pub residuals: Vec<f64>,
    /// Accepted damping factors, one per step taken.
    pub taus: Vec<f64>,
    /// The absolute target the run used.
    pub resolved_target: f64,
    /// `|target - D(f0)|` at the smallness order.
    pub data_norm: f64,
    /// Graded norm of the total update `f - f0`, at the order below.
    pub increment_norm: f64,
    /// The order the increment was measured at: `s_order + 2` clamped to
    /// the stencil capability.
    pub increment_order: usize,
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub map: MeshMap,
    pub status: NewtonStatus,
    pub log: NewtonLog,
}

/// Sup-norms of the two pullbacks; zero exactly for horizontal maps.
pub fn horizontality_residual(
    dist: &CorankTwoDistribution,
    map: &MeshMap,
) -> Result<(f64, f64)> {
    let pulled = map.pullback_pair(dist)?;
    Ok((pulled[0].sup(), pulled[1].sup()))
}

fn residual_fields(
    dist: &CorankTwoDistribution,
    map: &MeshMap,
    target: &[OneFormField; 2],
) -> Result<[OneFormField; 2]> {
    let pulled = map.pullback_pair(dist)?;
    Ok([target[0].sub(&pulled[0]), target[1].sub(&pulled[1])])
}

enum StepFailure {
    Residual,
    Admissibility(String),
}

/// Solve `D(f) = target` by damped Newton from `f0`.
pub fn newton_invert(
    dist: &CorankTwoDistribution,
    f0: &MeshMap,
    target: &[OneFormField; 2],
    opts: &SolveOptions,
) -> Result<NewtonOutcome> {
    if opts.max_iters == 0 {
        return Err(Error::Domain("max_iters must be at least 1".into()));
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::Domain(format!(
            "damping {} outside (0, 1]",
            opts.damping
        )));
    }
    let mesh = f0.mesh.clone();
    if target[0].len() != mesh.num_elements() || target[1].len() != mesh.num_elements() {
        return Err(Error::Domain(format!(
            "target on {} elements for a mesh with {}",
            target[0].len(),
            mesh.num_elements()
        )));
    }

    let r = residual_fields(dist, f0, target)?;
    let data_norm = graded_norm_forms(&mesh, &r, opts.s_order)?;
    if let Some(bound) = opts.smallness_bound {
        if data_norm > bound {
            return Err(Error::Domain(format!(
                "data norm {data_norm:.3e} exceeds the smallness bound {bound:.3e}"
            )));
        }
    }
    let mut res_norm = pair_sup(&r);
    let resolved_target = if opts.residual_target > 0.0 {
        opts.residual_target
    } else {
        AUTO_TARGET_FACTOR * res_norm
    };

    if opts.admissibility_guard {
        let report = admissibility_check(dist, f0, opts.admissibility_tol)?;
        if !report.admissible {
            return Err(Error::Guard {
                iteration: 0,
                detail: format!(
                    "starting map is not admissible ({} violations)",
                    report.counts.total()
                ),
            });
        }
    }

    let bdry = BoundaryData::zero(&mesh);
    let solver = ReducedSolver::new(mesh.clone(), &bdry)?;

    let mut f = f0.clone();
    let mut residuals = vec![res_norm];
    let mut taus = Vec::new();
    let mut r = r;
    let mut status = NewtonStatus::MaxIters;

    for iter in 0..opts.max_iters {
        if res_norm <= resolved_target {
            status = NewtonStatus::Converged;
            break;
        }
        let coeffs = coefficient_fields(dist, &f)?;
        let inv = right_inverse_from(&coeffs, &solver, &f, &r[0], &r[1], &bdry)?;
        let step = inv.section.assembled_at_nodes(dist, &f)?;

        let mut tau = opts.damping;
        let mut accepted = None;
        let mut failure = StepFailure::Residual;
        while tau >= TAU_MIN {
            let scaled: Vec<Point6> = step.iter().map(|v| v * tau).collect();
            let candidate = f.offset_by(&scaled)?;
            if opts.admissibility_guard {
                let report = admissibility_check(dist, &candidate, opts.admissibility_tol)?;
                if !report.admissible {
                    let detail = report
                        .violations
                        .first()
                        .map(|v| format!("element {}: {} at {:.3e}", v.element, v.condition, v.value))
                        .unwrap_or_else(|| "unnamed violation".into());
                    failure = StepFailure::Admissibility(detail);
                    tau *= 0.5;
                    continue;
                }
            }
            let r_new = residual_fields(dist, &candidate, target)?;
            let res_new = pair_sup(&r_new);
            if res_new <= (1.0 - DECREASE_SLOPE * tau) * res_norm {
                accepted = Some((candidate, r_new, res_new));
                break;
            }
            failure = StepFailure::Residual;
            tau *= 0.5;
        }
        match accepted {
            Some((candidate, r_new, res_new)) => {
                f = candidate;
                r = r_new;
                res_norm = res_new;
                residuals.push(res_norm);
                taus.push(tau);
            }
            None => {
                return match failure {
                    StepFailure::Admissibility(detail) => Err(Error::Guard {
                        iteration: iter,
                        detail,
                    }),
                    StepFailure::Residual => Err(Error::Stagnation {
                        iterations: iter,
                        residual: res_norm,
                        tau: TAU_MIN,
                    }),
                };
            }
        }
        if res_norm <= resolved_target {
            status = NewtonStatus::Converged;
        }
    }
    if res_norm <= resolved_target {
        status = NewtonStatus::Converged;
    }

    let increment_order = (opts.s_order + 2).min(MAX_NORM_ORDER);
    let delta: Vec<Point6> = f
        .values
        .iter()
        .zip(&f0.values)
        .map(|(x, y)| x - y)
        .collect();
    let increment_norm = graded_norm_map_values(&mesh, &delta, increment_order)?;
    Ok(NewtonOutcome {
        map: f,
        status,
        log: NewtonLog {
            residuals,
            taus,
            resolved_target,
            data_norm,
            increment_norm,
            increment_order,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{legendrian_map, perturbed_map};
    use crate::geometry::holomorphic_contact_model;

    fn zero_target(map: &MeshMap) -> [OneFormField; 2] {
        [
            OneFormField::zeros(map.mesh.num_elements()),
            OneFormField::zeros(map.mesh.num_elements()),
        ]
    }

    #[test]
    fn horizontal_fixtures_have_tiny_residual() {
        let dist = holomorphic_contact_model();
        let map = legendrian_map(8).unwrap();
        let (r1, r2) = horizontality_residual(&dist, &map).unwrap();
        assert!(r1 < 1e-10 && r2 < 1e-10, "({r1}, {r2})");
    }

    #[test]
    fn the_inclusion_disc_is_horizontal() {
        let dist = holomorphic_contact_model();
        let map = legendrian_map(6).unwrap();
        let flat = MeshMap::from_exact(
            map.mesh.clone(),
            |x, y| Point6::new(x, y, 0.0, 0.0, 0.0, 0.0),
            |_, _| {
                [
                    Point6::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0),
                    Point6::new(0.0, 1.0, 0.0, 0.0, 0.0, 0.0),
                ]
            },
        )
        .unwrap();
        let (r1, r2) = horizontality_residual(&dist, &flat).unwrap();
        assert!(r1 < 1e-14 && r2 < 1e-14);
    }

    #[test]
    fn a_horizontal_start_returns_unchanged_in_zero_iterations() {
        let dist = holomorphic_contact_model();
        let map = legendrian_map(8).unwrap();
        let out = newton_invert(&dist, &map, &zero_target(&map), &SolveOptions::default())
            .unwrap();
        assert_eq!(out.status, NewtonStatus::Converged);
        assert!(out.log.taus.is_empty());
        assert_eq!(out.map.values, map.values);
    }

    #[test]
    fn perturbed_fixtures_are_driven_back_to_horizontal() {
        let dist = holomorphic_contact_model();
        let base = legendrian_map(16).unwrap();
        let f0 = perturbed_map(&base, 31, 1e-3).unwrap();
        let out = newton_invert(&dist, &f0, &zero_target(&f0), &SolveOptions::default())
            .unwrap();
        assert_eq!(out.status, NewtonStatus::Converged);
        let drop = out.log.residuals[0] / out.log.residuals.last().unwrap();
        assert!(drop > 1e3, "residual history {:?}", out.log.residuals);
        let report =
            admissibility_check(&dist, &out.map, 1e-8).unwrap();
        assert!(report.admissible);
    }

    #[test]
    fn iteration_counts_do_not_grow_as_perturbations_shrink() {
        let dist = holomorphic_contact_model();
        let base = legendrian_map(12).unwrap();
        let mut counts = Vec::new();
        for amp in [1e-2, 1e-3, 1e-4] {
            let f0 = perturbed_map(&base, 5, amp).unwrap();
            let out =
                newton_invert(&dist, &f0, &zero_target(&f0), &SolveOptions::default())
                    .unwrap();
            assert_eq!(out.status, NewtonStatus::Converged, "amplitude {amp}");
            counts.push(out.log.taus.len());
        }
        assert!(
            counts[0] >= counts[1] && counts[1] >= counts[2],
            "counts {counts:?}"
        );
    }

    #[test]
    fn increments_leave_the_boundary_alone() {
        // Zero boundary data for every increment: the rim may only move
        // through the distribution component, which vanishes here, so the
        // boundary trace stays pinned while the interior moves by the
        // full perturbation scale.
        let dist = holomorphic_contact_model();
        let base = legendrian_map(12).unwrap();
        let f0 = perturbed_map(&base, 77, 1e-3).unwrap();
        let out = newton_invert(&dist, &f0, &zero_target(&f0), &SolveOptions::default())
            .unwrap();
        let rim_move = f0
            .mesh
            .boundary
            .iter()
            .map(|&v| (out.map.values[v] - f0.values[v]).norm())
            .fold(0.0_f64, f64::max);
        let interior_move = f0
            .mesh
            .interior
            .iter()
            .map(|&v| (out.map.values[v] - f0.values[v]).norm())
            .fold(0.0_f64, f64::max);
        assert!(interior_move > 1e-5, "interior barely moved: {interior_move:.3e}");
        assert!(
            rim_move < 1e-8 * interior_move,
            "rim moved by {rim_move:.3e} against interior {interior_move:.3e}"
        );
    }

    #[test]
    fn smallness_bound_is_enforced() {
        let dist = holomorphic_contact_model();
        let base = legendrian_map(8).unwrap();
        let f0 = perturbed_map(&base, 3, 1e-2).unwrap();
        let opts = SolveOptions {
            smallness_bound: Some(1e-12),
            ..SolveOptions::default()
        };
        assert!(matches!(
            newton_invert(&dist, &f0, &zero_target(&f0), &opts),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn the_guard_rejects_inadmissible_starts() {
        let dist = holomorphic_contact_model();
        let bad = crate::fixtures::complex_line_map(4).unwrap();
        let err = newton_invert(&dist, &bad, &zero_target(&bad), &SolveOptions::default())
            .err()
            .unwrap();
        assert!(matches!(err, Error::Guard { iteration: 0, .. }));
    }
}
