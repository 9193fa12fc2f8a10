//! Corank-2 distributions `D = ker(alpha1) ∩ ker(alpha2)` on R^6.
//!
//! The pointwise frame is the orthonormalized nullspace of the 2x6
//! coefficient matrix, produced by a fixed column-pivoting rule so repeated
//! evaluations are bit-identical and frames vary continuously at mesh scale
//! away from pivot switches. The curvature forms `omega_i = d(alpha_i)|_D`
//! are stored as 4x4 Gram matrices in that frame, and the connecting
//! automorphism `A` is the solution of `omega1 * A = omega2`, i.e.
//! `omega1(u, A v) = omega2(u, v)`.

use nalgebra::{Complex, DMatrix, DVector, Matrix4, SMatrix, Vector4, Vector6};

use crate::error::{Error, Result};
use crate::geometry::form::{OneForm, Point6, VectorField};

/// Relative pivot threshold below which a row is treated as zero.
const RANK_TOL: f64 = 1e-10;
/// Relative tolerance for "vector lies in the distribution" validation.
const MEMBERSHIP_TOL: f64 = 1e-6;
/// Default tolerance for fatness and surjectivity decisions (relative).
pub const DEFAULT_FAT_TOL: f64 = 1e-8;
/// Default finite-difference step for bracket computations (relative).
pub const BRACKET_FD_STEP: f64 = 1e-5;

pub type Basis6x4 = SMatrix<f64, 6, 4>;

/// Corank-2 distribution with optional Reeb direction pair.
#[derive(Clone)]
pub struct CorankTwoDistribution {
    pub alpha1: OneForm,
    pub alpha2: OneForm,
    pub reeb: Option<(VectorField, VectorField)>,
    pub label: String,
}

impl CorankTwoDistribution {
    pub fn new(label: impl Into<String>, alpha1: OneForm, alpha2: OneForm) -> Self {
        CorankTwoDistribution {
            alpha1,
            alpha2,
            reeb: None,
            label: label.into(),
        }
    }

    pub fn with_reeb(mut self, z1: VectorField, z2: VectorField) -> Self {
        self.reeb = Some((z1, z2));
        self
    }

    pub fn reeb_pair(&self, needed_for: &'static str) -> Result<&(VectorField, VectorField)> {
        self.reeb
            .as_ref()
            .ok_or(Error::MissingReeb { needed_for })
    }

    /// Coefficient rows of (alpha1, alpha2) at `x`.
    pub fn coeff_rows(&self, x: &Point6) -> Result<(Vector6<f64>, Vector6<f64>)> {
        Ok((self.alpha1.coeff_at(x)?, self.alpha2.coeff_at(x)?))
    }
}

/// Column scan order for the pivoting rule. `Forward` is the default used
/// everywhere; `Reverse` exists to test basis independence of derived data.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PivotRule {
    Forward,
    Reverse,
}

/// Pointwise frame data for the distribution.
#[derive(Clone, Debug)]
pub struct DistributionFrame {
    pub point: Point6,
    /// Orthonormal columns spanning `D_x`.
    pub basis: Basis6x4,
    /// Gram matrix of `d(alpha1)` restricted to the frame basis.
    pub omega1: Matrix4<f64>,
    /// Gram matrix of `d(alpha2)` restricted to the frame basis.
    pub omega2: Matrix4<f64>,
    /// Connecting automorphism in frame coordinates: `omega1 * A = omega2`.
    pub connecting: Matrix4<f64>,
}

impl DistributionFrame {
    /// Frame coordinates of an ambient vector lying in `D_x`.
    pub fn coords(&self, v: &Vector6<f64>) -> Vector4<f64> {
        self.basis.transpose() * v
    }

    /// Ambient vector from frame coordinates.
    pub fn ambient(&self, c: &Vector4<f64>) -> Vector6<f64> {
        self.basis * c
    }

    /// Connecting automorphism applied to an ambient vector of `D_x`.
    pub fn connect(&self, v: &Vector6<f64>) -> Vector6<f64> {
        self.ambient(&(self.connecting * self.coords(v)))
    }

    /// Residual `max_i |alpha_i(column_j)|` over the basis; small by construction.
    pub fn kernel_residual(&self, dist: &CorankTwoDistribution) -> Result<f64> {
        let (a1, a2) = dist.coeff_rows(&self.point)?;
        let mut worst: f64 = 0.0;
        for j in 0..4 {
            let col = self.basis.column(j).into_owned();
            worst = worst.max(a1.dot(&col).abs()).max(a2.dot(&col).abs());
        }
        Ok(worst)
    }
}

/// Reduced row echelon elimination with a fixed column-pivot scan order.
/// Returns `(rank, orthonormal nullspace basis)`; rows whose best pivot is
/// below `RANK_TOL * scale` are skipped.
fn rref_nullspace(m: &DMatrix<f64>, rule: PivotRule) -> (usize, Vec<DVector<f64>>) {
    let (rows, cols) = m.shape();
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let mut m = m.clone();
    let mut used = vec![false; cols];
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let col_order: Vec<usize> = match rule {
        PivotRule::Forward => (0..cols).collect(),
        PivotRule::Reverse => (0..cols).rev().collect(),
    };
    for r in 0..rows {
        let mut best: Option<(usize, f64)> = None;
        for &c in &col_order {
            if used[c] {
                continue;
            }
            let v = m[(r, c)].abs();
            if best.map_or(true, |(_, bv)| v > bv) {
                best = Some((c, v));
            }
        }
        let Some((pc, pv)) = best else { break };
        if pv <= RANK_TOL * scale {
            continue;
        }
        let pivot_val = m[(r, pc)];
        for c in 0..cols {
            m[(r, c)] /= pivot_val;
        }
        for rr in 0..rows {
            if rr != r && m[(rr, pc)] != 0.0 {
                let f = m[(rr, pc)];
                for c in 0..cols {
                    m[(rr, c)] -= f * m[(r, c)];
                }
            }
        }
        used[pc] = true;
        pivots.push((r, pc));
    }
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for c in 0..cols {
        if used[c] {
            continue;
        }
        let mut v = DVector::zeros(cols);
        v[c] = 1.0;
        for &(r, pc) in &pivots {
            v[pc] = -m[(r, c)];
        }
        basis.push(v);
    }
    // Modified Gram-Schmidt in free-column order keeps the result deterministic.
    let mut ortho: Vec<DVector<f64>> = Vec::new();
    for mut v in basis {
        for u in &ortho {
            let d = u.dot(&v);
            v -= u * d;
        }
        let n = v.norm();
        if n > 0.0 {
            ortho.push(v / n);
        }
    }
    (pivots.len(), ortho)
}

/// Orthonormal frame of `D_x` together with curvature Grams and the
/// connecting automorphism, using the default pivot rule.
pub fn kernel_basis(dist: &CorankTwoDistribution, x: &Point6) -> Result<DistributionFrame> {
    kernel_basis_with_rule(dist, x, PivotRule::Forward)
}

/// Same as [`kernel_basis`] with an explicit pivot rule.
pub fn kernel_basis_with_rule(
    dist: &CorankTwoDistribution,
    x: &Point6,
    rule: PivotRule,
) -> Result<DistributionFrame> {
    let (a1, a2) = dist.coeff_rows(x)?;
    let mut m = DMatrix::zeros(2, 6);
    for j in 0..6 {
        m[(0, j)] = a1[j];
        m[(1, j)] = a2[j];
    }
    let (rank, null) = rref_nullspace(&m, rule);
    if rank < 2 || null.len() != 4 {
        return Err(Error::Degenerate {
            point: x.iter().copied().collect(),
        });
    }
    let mut basis = Basis6x4::zeros();
    for (j, v) in null.iter().enumerate() {
        for i in 0..6 {
            basis[(i, j)] = v[i];
        }
    }
    let c1 = dist.alpha1.exterior_at(x)?;
    let c2 = dist.alpha2.exterior_at(x)?;
    let omega1 = basis.transpose() * c1 * basis;
    let omega2 = basis.transpose() * c2 * basis;
    let connecting = match omega1.lu().solve(&omega2) {
        Some(a) => a,
        None => Matrix4::from_element(f64::NAN),
    };
    Ok(DistributionFrame {
        point: *x,
        basis,
        omega1,
        omega2,
        connecting,
    })
}

/// Diagnostics backing a fatness decision at one point.
#[derive(Clone, Debug)]
pub struct FatnessReport {
    pub fat: bool,
    /// `sigma_min / sigma_max` of each curvature Gram.
    pub omega_sigma_ratio: [f64; 2],
    /// Eigenvalues of the connecting automorphism.
    pub eigenvalues: [Complex<f64>; 4],
    /// `min |Im(lambda)| / max(1, spectral radius)`.
    pub min_im_ratio: f64,
    pub tol: f64,
}

/// Fatness via the connecting automorphism: both curvature forms
/// nondegenerate on `D_x` and `A` without real eigenvalues.
pub fn is_fat_at(dist: &CorankTwoDistribution, x: &Point6, tol: f64) -> Result<FatnessReport> {
    let frame = kernel_basis(dist, x)?;
    let mut ratios = [0.0f64; 2];
    let mut nondeg = true;
    for (slot, omega) in [(0, &frame.omega1), (1, &frame.omega2)] {
        let sv = omega.svd(false, false).singular_values;
        let (max, min) = (sv.max(), sv.min());
        ratios[slot] = if max > 0.0 { min / max } else { 0.0 };
        nondeg &= ratios[slot] > tol;
    }
    if !nondeg || !frame.connecting.iter().all(|t| t.is_finite()) {
        return Ok(FatnessReport {
            fat: false,
            omega_sigma_ratio: ratios,
            eigenvalues: [Complex::new(f64::NAN, f64::NAN); 4],
            min_im_ratio: 0.0,
            tol,
        });
    }
    let eig = frame.connecting.complex_eigenvalues();
    let mut eigenvalues = [Complex::new(0.0, 0.0); 4];
    let mut min_im = f64::INFINITY;
    let mut radius: f64 = 0.0;
    for (i, l) in eig.iter().enumerate() {
        eigenvalues[i] = *l;
        min_im = min_im.min(l.im.abs());
        radius = radius.max(l.norm());
    }
    let min_im_ratio = min_im / radius.max(1.0);
    Ok(FatnessReport {
        fat: min_im_ratio > tol,
        omega_sigma_ratio: ratios,
        eigenvalues,
        min_im_ratio,
        tol,
    })
}

/// Fatness probe through one direction: `Phi_v(u) = (omega1(v,u), omega2(v,u))`
/// is surjective onto R^2 iff the 2x4 matrix in the frame basis has rank 2.
pub fn fatness_via_phi(
    dist: &CorankTwoDistribution,
    x: &Point6,
    v: &Vector6<f64>,
    tol: f64,
) -> Result<bool> {
    let frame = kernel_basis(dist, x)?;
    let vn = v.norm();
    if vn == 0.0 {
        return Err(Error::Domain("zero direction in fatness probe".into()));
    }
    let in_span = frame.basis * (frame.basis.transpose() * v);
    if (v - in_span).norm() > MEMBERSHIP_TOL * vn {
        return Err(Error::Domain(format!(
            "direction is not in the distribution (off-span residual {:.3e})",
            (v - in_span).norm() / vn
        )));
    }
    let v = in_span / vn;
    let c1 = dist.alpha1.exterior_at(x)?;
    let c2 = dist.alpha2.exterior_at(x)?;
    let r1 = (v.transpose() * c1 * frame.basis).transpose();
    let r2 = (v.transpose() * c2 * frame.basis).transpose();
    let mut m = SMatrix::<f64, 2, 4>::zeros();
    for j in 0..4 {
        m[(0, j)] = r1[j];
        m[(1, j)] = r2[j];
    }
    let sv = m.svd(false, false).singular_values;
    Ok(sv.min() > tol * sv.max().max(f64::MIN_POSITIVE))
}

/// Residuals for the Reeb direction conditions at a point.
#[derive(Clone, Debug)]
pub struct ReebReport {
    /// `|alpha_i(Z_j) - delta_ij|`, indexed `[i][j]`.
    pub pairing: [[f64; 2]; 2],
    /// `max_k |d(alpha_j)(Z_i, e_k)|` over the frame basis, indexed `[j][i]`.
    pub contraction: [[f64; 2]; 2],
    /// `max |[Z1, Z2]|` componentwise.
    pub bracket: f64,
    /// `|d(alpha_j)(Z1, Z2)|`, a consequence of the conditions above.
    pub cross: [f64; 2],
    pub pass: bool,
    pub tol: f64,
}

/// Check the defining conditions of a Reeb direction pair at `x`:
/// dual pairing with the forms, contraction of the curvatures along the
/// distribution, and commutation of the pair.
pub fn check_reeb_directions(
    dist: &CorankTwoDistribution,
    x: &Point6,
    tol: f64,
) -> Result<ReebReport> {
    let (z1, z2) = dist.reeb_pair("check_reeb_directions")?;
    let zv = [z1.value_at(x)?, z2.value_at(x)?];
    let frame = kernel_basis(dist, x)?;
    let forms = [&dist.alpha1, &dist.alpha2];
    let mut pairing = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let expected = if i == j { 1.0 } else { 0.0 };
            pairing[i][j] = (forms[i].pair(x, &zv[j])? - expected).abs();
        }
    }
    let mut contraction = [[0.0; 2]; 2];
    let mut cross = [0.0; 2];
    for j in 0..2 {
        let c = forms[j].exterior_at(x)?;
        for i in 0..2 {
            let w = c.transpose() * zv[i]; // w_k = d(alpha_j)(Z_i, e_k)
            let mut worst: f64 = 0.0;
            for k in 0..4 {
                worst = worst.max(w.dot(&frame.basis.column(k).into_owned()).abs());
            }
            contraction[j][i] = worst;
        }
        cross[j] = (c * zv[1]).dot(&zv[0]).abs();
    }
    let bracket = crate::geometry::form::lie_bracket(z1, z2, x)?.amax();
    let pass = pairing.iter().flatten().all(|r| *r <= tol)
        && contraction.iter().flatten().all(|r| *r <= tol)
        && bracket <= tol;
    Ok(ReebReport {
        pairing,
        contraction,
        bracket,
        cross,
        pass,
        tol,
    })
}

/// Which curvature form a symplectic complement is taken with respect to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormIndex {
    One,
    Two,
}

/// Orthonormal basis of `{ w in D_x : omega_i(v, w) = 0 for all v in V }`.
/// `v_basis` must be independent vectors lying in `D_x`.
pub fn symplectic_complement(
    dist: &CorankTwoDistribution,
    x: &Point6,
    v_basis: &[Vector6<f64>],
    which: FormIndex,
) -> Result<Vec<Vector6<f64>>> {
    let frame = kernel_basis(dist, x)?;
    let k = v_basis.len();
    if k == 0 || k > 4 {
        return Err(Error::Domain(format!(
            "complement needs between 1 and 4 spanning vectors, got {k}"
        )));
    }
    let mut coords: Vec<Vector4<f64>> = Vec::with_capacity(k);
    for v in v_basis {
        let vn = v.norm();
        let c = frame.coords(v);
        if (v - frame.ambient(&c)).norm() > MEMBERSHIP_TOL * vn.max(f64::MIN_POSITIVE) {
            return Err(Error::Domain(
                "complement basis vector is not in the distribution".into(),
            ));
        }
        coords.push(c);
    }
    let mut vm = DMatrix::zeros(k, 4);
    for (r, c) in coords.iter().enumerate() {
        for j in 0..4 {
            vm[(r, j)] = c[j];
        }
    }
    let sv = vm.clone().svd(false, false).singular_values;
    if sv.min() <= 1e-10 * sv.max().max(f64::MIN_POSITIVE) {
        return Err(Error::Domain("dependent complement basis".into()));
    }
    let omega = match which {
        FormIndex::One => &frame.omega1,
        FormIndex::Two => &frame.omega2,
    };
    let mut rows = DMatrix::zeros(k, 4);
    for (r, c) in coords.iter().enumerate() {
        let row = omega.transpose() * c; // row_j = omega(v_r, e_j)
        for j in 0..4 {
            rows[(r, j)] = row[j];
        }
    }
    let (_rank, null) = rref_nullspace(&rows, PivotRule::Forward);
    Ok(null
        .iter()
        .map(|c| frame.ambient(&Vector4::new(c[0], c[1], c[2], c[3])))
        .collect())
}

/// Complex structure on `D_x` compatible with `omega1`: the polar factor of
/// the curvature Gram, with the sign fixed so `omega1(u, Ju) > 0`.
pub fn compatible_acs(frame: &DistributionFrame) -> Result<Matrix4<f64>> {
    acs_from_gram(&frame.omega1)
}

/// Polar-factor complex structure for a skew curvature Gram in any
/// orthonormal frame.  The endomorphism it represents does not depend on
/// which orthonormal frame produced the Gram.
pub fn acs_from_gram(k: &Matrix4<f64>) -> Result<Matrix4<f64>> {
    let ktk = k.transpose() * k; // equals -K^2 for skew K
    let eig = ktk.symmetric_eigen();
    let lambda_max = eig.eigenvalues.max();
    if eig.eigenvalues.min() <= 1e-14 * lambda_max.max(f64::MIN_POSITIVE) {
        return Err(Error::Domain(
            "curvature form is degenerate; no compatible complex structure".into(),
        ));
    }
    let mut inv_sqrt = Matrix4::zeros();
    for i in 0..4 {
        inv_sqrt[(i, i)] = 1.0 / eig.eigenvalues[i].sqrt();
    }
    let s = eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose();
    Ok(-k * s)
}

/// Report for step-2 bracket generation at a point.
#[derive(Clone, Debug)]
pub struct BracketReport {
    pub spans: bool,
    /// `sigma_6 / sigma_1` of the assembled `[frame | brackets]` matrix.
    pub sigma_ratio: f64,
    pub tol: f64,
}

/// Whether `D_x + span{[V_i, V_j]_x}` is all of R^6, with the frame fields
/// `V_i` extended by the deterministic kernel-basis rule and brackets taken
/// as central finite-difference commutators.
pub fn bracket_step_two(
    dist: &CorankTwoDistribution,
    x: &Point6,
    tol: f64,
) -> Result<BracketReport> {
    let frame = kernel_basis(dist, x)?;
    let h = BRACKET_FD_STEP * x.amax().max(1.0);
    let field = |p: &Point6, idx: usize| -> Result<Vector6<f64>> {
        Ok(kernel_basis(dist, p)?.basis.column(idx).into_owned())
    };
    let directional = |idx: usize, dir: &Vector6<f64>| -> Result<Vector6<f64>> {
        let xp = x + dir * h;
        let xm = x - dir * h;
        Ok((field(&xp, idx)? - field(&xm, idx)?) / (2.0 * h))
    };
    let mut cols: Vec<Vector6<f64>> = Vec::with_capacity(10);
    for j in 0..4 {
        cols.push(frame.basis.column(j).into_owned());
    }
    for i in 0..4 {
        for j in (i + 1)..4 {
            let vi = frame.basis.column(i).into_owned();
            let vj = frame.basis.column(j).into_owned();
            let bracket = directional(j, &vi)? - directional(i, &vj)?;
            cols.push(bracket);
        }
    }
    let mut m = DMatrix::zeros(6, cols.len());
    for (c, col) in cols.iter().enumerate() {
        for r in 0..6 {
            m[(r, c)] = col[r];
        }
    }
    let sv = m.svd(false, false).singular_values;
    let sigma_ratio = sv[sv.len() - 1] / sv[0].max(f64::MIN_POSITIVE);
    Ok(BracketReport {
        spans: sigma_ratio > tol,
        sigma_ratio,
        tol,
    })
}
