//! Compactly supported straightening of a high-order horizontality defect.
//!
//! The input map is already horizontal to high order at a marked point.
//! Damping its defect by the cutoff plateau gives a family of targets
//! `D(f) + t * g_eps` that interpolates between the map's own defect and
//! a defect that vanishes identically on the inner plateau W.  Each target
//! is solved by a warm-started damped-Newton run; when a step fails the
//! parameter interval is bisected and retried from the last good member.

use crate::disc::admissibility::admissibility_check;
use crate::disc::map::{pair_sup, MeshMap, OneFormField};
use crate::disc::mesh::Point2;
use crate::error::{Error, Result};
use crate::geometry::CorankTwoDistribution;
use crate::solve::cutoff::{infinitesimal_order, make_cutoff, CutoffField};
use crate::solve::newton::{newton_invert, NewtonStatus, SolveOptions, AUTO_TARGET_FACTOR};

/// How many times a parameter interval may be halved before giving up.
const MAX_BISECTION_DEPTH: usize = 5;

/// Auto-resolved step targets never go below this; past it the pullback
/// and factorization roundoff dominate and no step can terminate.
const ABSOLUTE_TARGET_FLOOR: f64 = 1e-12;

/// Diagnostics for one sampled parameter value.
#[derive(Debug, Clone)]
pub struct HomotopyStep {
    pub t: f64,
    /// Newton steps spent reaching this sample, inserted solves included.
    pub iterations: usize,
    /// Residual sup-norm against this sample's target.
    pub residual: f64,
    pub admissible: bool,
    /// Number of bisection refinements the step needed.
    pub refinements: usize,
}

#[derive(Debug, Clone)]
pub struct HomotopyResult {
    /// Maps at the sampled parameter values, starting with the input.
    pub family: Vec<MeshMap>,
    pub ts: Vec<f64>,
    /// Radius of the plateau on which the final defect vanishes.
    pub w_radius: f64,
    /// Radius outside which the family never moves the defect target.
    pub support_radius: f64,
    pub steps: Vec<HomotopyStep>,
    /// Sup of the final member's pullbacks over the plateau elements.
    pub w_residual: f64,
    /// The absolute per-step residual target the runs used.
    pub resolved_target: f64,
}

fn combine(g0: &[OneFormField; 2], g_eps: &[OneFormField; 2], t: f64) -> [OneFormField; 2] {
    [
        g0[0].add(&g_eps[0].scaled(t)),
        g0[1].add(&g_eps[1].scaled(t)),
    ]
}

struct March<'a> {
    dist: &'a CorankTwoDistribution,
    g0: [OneFormField; 2],
    g_eps: &'a [OneFormField; 2],
    opts: SolveOptions,
}

impl March<'_> {
    fn advance(
        &self,
        f_cur: MeshMap,
        t_cur: f64,
        t_next: f64,
        depth: usize,
        iterations: &mut usize,
        refinements: &mut usize,
    ) -> Result<MeshMap> {
        let target = combine(&self.g0, self.g_eps, t_next);
        let failure = match newton_invert(self.dist, &f_cur, &target, &self.opts) {
            Ok(out) if out.status == NewtonStatus::Converged => {
                *iterations += out.log.taus.len();
                return Ok(out.map);
            }
            Ok(out) => Error::Stagnation {
                iterations: out.log.taus.len(),
                residual: *out.log.residuals.last().unwrap(),
                tau: out.log.taus.last().copied().unwrap_or(self.opts.damping),
            },
            Err(e) => e,
        };
        if depth >= MAX_BISECTION_DEPTH {
            return Err(Error::Continuation {
                t: t_next,
                source: Box::new(failure),
            });
        }
        *refinements += 1;
        let t_mid = 0.5 * (t_cur + t_next);
        let f_mid = self.advance(f_cur, t_cur, t_mid, depth + 1, iterations, refinements)?;
        self.advance(f_mid, t_mid, t_next, depth + 1, iterations, refinements)
    }
}

/// Deform `f` so the final member is horizontal on a plateau around
/// `sigma`, through maps that agree with `f` outside the cutoff support.
pub fn homotopy_family(
    dist: &CorankTwoDistribution,
    f: &MeshMap,
    sigma: &Point2,
    r: usize,
    eps: f64,
    opts: &SolveOptions,
    t_samples: usize,
) -> Result<HomotopyResult> {
    if t_samples < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 parameter samples, got {t_samples}"
        )));
    }
    let order = infinitesimal_order(dist, f, sigma, r)?;
    if order < r as i32 {
        return Err(Error::Domain(format!(
            "defect has infinitesimal order {order} at the marked point, \
             the cutoff argument needs {r}"
        )));
    }
    let CutoffField {
        field: g_eps,
        w_radius,
        support_radius,
        ..
    } = make_cutoff(dist, f, sigma, r, eps)?;
    let g0 = f.pullback_pair(dist)?;

    let resolved_target = if opts.residual_target > 0.0 {
        opts.residual_target
    } else {
        (AUTO_TARGET_FACTOR * pair_sup(&g0).max(pair_sup(&g_eps))).max(ABSOLUTE_TARGET_FLOOR)
    };
    let march = March {
        dist,
        g0,
        g_eps: &g_eps,
        opts: SolveOptions {
            residual_target: resolved_target,
            ..opts.clone()
        },
    };

    let mesh = f.mesh.clone();
    let mut family = Vec::with_capacity(t_samples);
    let mut ts = Vec::with_capacity(t_samples);
    let mut steps = Vec::with_capacity(t_samples);
    let mut f_cur = f.clone();
    let mut t_cur = 0.0;
    for i in 0..t_samples {
        let t = i as f64 / (t_samples - 1) as f64;
        let mut iterations = 0;
        let mut refinements = 0;
        if i > 0 {
            f_cur = march.advance(f_cur, t_cur, t, 0, &mut iterations, &mut refinements)?;
            t_cur = t;
        }
        let target = combine(&march.g0, &g_eps, t);
        let pulled = f_cur.pullback_pair(dist)?;
        let residual = pair_sup(&[target[0].sub(&pulled[0]), target[1].sub(&pulled[1])]);
        let admissible = admissibility_check(dist, &f_cur, opts.admissibility_tol)?.admissible;
        steps.push(HomotopyStep {
            t,
            iterations,
            residual,
            admissible,
            refinements,
        });
        ts.push(t);
        family.push(f_cur.clone());
    }

    let last = family.last().unwrap();
    let pulled = last.pullback_pair(dist)?;
    let mut w_residual = 0.0_f64;
    for e in 0..mesh.num_elements() {
        if (mesh.barycenters[e] - sigma).norm() <= w_radius {
            for field in &pulled {
                w_residual = w_residual.max(field.dx[e].abs()).max(field.dy[e].abs());
            }
        }
    }

    Ok(HomotopyResult {
        family,
        ts,
        w_radius,
        support_radius,
        steps,
        w_residual,
        resolved_target,
    })
}
