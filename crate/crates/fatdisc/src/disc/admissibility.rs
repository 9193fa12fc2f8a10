//! Pointwise admissibility of a disc map: immersion, transversality to the
//! distinguished directions, totally real tangent span, and ellipticity of
//! the induced coefficient fields.

use nalgebra::{Matrix4, SMatrix, Vector4};

use crate::disc::map::{ElementSplit, MeshMap};
use crate::error::{Error, Result};
use crate::geometry::{compatible_acs, CorankTwoDistribution, Point6};

pub const DEFAULT_ADMISSIBILITY_TOL: f64 = 1e-8;

/// Frames above this condition number make the coefficient solve
/// untrustworthy and are reported as frame errors.
const FRAME_COND_LIMIT: f64 = 1e8;

/// How many per-element violations a report keeps verbatim.
const MAX_REPORTED_VIOLATIONS: usize = 16;

/// Per-element frame data carried along with the coefficients so that
/// downstream solves need no second pass over the distribution.
#[derive(Debug, Clone)]
pub struct CoefficientFrame {
    /// Gram matrix of the first curvature form in the orthonormal frame.
    pub omega1: Matrix4<f64>,
    /// Frame coordinates of the tangent directions X, Y.
    pub x: Vector4<f64>,
    pub y: Vector4<f64>,
    /// Their images under the compatible complex structure.
    pub jx: Vector4<f64>,
    pub jy: Vector4<f64>,
    /// Orthonormal frame columns in ambient coordinates.
    pub basis: SMatrix<f64, 6, 4>,
}

/// Elementwise coefficients of the connecting automorphism in the tangent
/// frame: `AX = pX + qY + p'JX + q'JY`, `AY = rX + sY + r'JX + s'JY`.
#[derive(Debug, Clone)]
pub struct EllipticCoefficients {
    /// `(p, q, r, s)` per element.
    pub main: Vec<[f64; 4]>,
    /// `(p', q', r', s')` per element; small exactly when the tangent span
    /// is close to invariant under the connecting automorphism.
    pub primed: Vec<[f64; 4]>,
    /// `(p - s)^2 + 4qr` per element; negative on admissible maps.
    pub discriminant: Vec<f64>,
    pub frames: Vec<CoefficientFrame>,
}

impl EllipticCoefficients {
    pub fn len(&self) -> usize {
        self.main.len()
    }

    pub fn is_empty(&self) -> bool {
        self.main.is_empty()
    }

    pub fn discriminant_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &d in &self.discriminant {
            lo = lo.min(d);
            hi = hi.max(d);
        }
        (lo, hi)
    }
}

/// Which admissibility condition an element violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    Immersion,
    Transversality,
    TotallyReal,
    Ellipticity,
    Frame,
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Condition::Immersion => "immersion",
            Condition::Transversality => "transversality",
            Condition::TotallyReal => "totally-real span",
            Condition::Ellipticity => "ellipticity",
            Condition::Frame => "frame conditioning",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone)]
pub struct Violation {
    pub element: usize,
    pub condition: Condition,
    /// The margin or discriminant that crossed the threshold.
    pub value: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ViolationCounts {
    pub immersion: usize,
    pub transversality: usize,
    pub totally_real: usize,
    pub ellipticity: usize,
    pub frame: usize,
}

impl ViolationCounts {
    pub fn total(&self) -> usize {
        self.immersion + self.transversality + self.totally_real + self.ellipticity + self.frame
    }
}

/// Verdict and margins of the four per-element admissibility conditions.
///
/// Margins are relative singular-value ratios (dimensionless); the
/// discriminant is reported raw.  A frame failure on some element leaves
/// `max_discriminant` as NaN for that run and is counted, not fatal.
#[derive(Debug, Clone)]
pub struct AdmissibilityReport {
    pub tol: f64,
    pub elements: usize,
    pub admissible: bool,
    /// min over elements of sigma_2/sigma_1 of the 6x2 differential.
    pub immersion_margin: f64,
    /// min over elements of sigma_4/sigma_1 of [f_x f_y Z1 Z2].
    pub transverse_margin: f64,
    /// min over elements of sigma_4/sigma_1 of [X Y JX JY].
    pub totally_real_margin: f64,
    /// max over elements of (p - s)^2 + 4qr; must stay below -tol.
    pub max_discriminant: f64,
    pub counts: ViolationCounts,
    /// First few offending elements, for diagnostics.
    pub violations: Vec<Violation>,
}

impl AdmissibilityReport {
    fn push(&mut self, element: usize, condition: Condition, value: f64) {
        match condition {
            Condition::Immersion => self.counts.immersion += 1,
            Condition::Transversality => self.counts.transversality += 1,
            Condition::TotallyReal => self.counts.totally_real += 1,
            Condition::Ellipticity => self.counts.ellipticity += 1,
            Condition::Frame => self.counts.frame += 1,
        }
        if self.violations.len() < MAX_REPORTED_VIOLATIONS {
            self.violations.push(Violation {
                element,
                condition,
                value,
            });
        }
    }
}

struct ElementFrameData {
    omega1: Matrix4<f64>,
    x: Vector4<f64>,
    y: Vector4<f64>,
    jx: Vector4<f64>,
    jy: Vector4<f64>,
    /// sigma_4/sigma_1 of [X Y JX JY]: the totally real margin.
    span_ratio: f64,
    /// sigma_1/sigma_4 of the same matrix: the solve conditioning.
    cond: f64,
}

fn element_frame_data(split: &ElementSplit) -> Result<ElementFrameData> {
    let j = compatible_acs(&split.frame)?;
    let x = split.xi[0];
    let y = split.xi[1];
    let jx = j * x;
    let jy = j * y;
    let mut m = Matrix4::zeros();
    m.set_column(0, &x);
    m.set_column(1, &y);
    m.set_column(2, &jx);
    m.set_column(3, &jy);
    let sv = m.singular_values();
    let (s1, s4) = (sv[0], sv[3]);
    Ok(ElementFrameData {
        omega1: split.frame.omega1,
        x,
        y,
        jx,
        jy,
        span_ratio: if s1 > 0.0 { s4 / s1 } else { 0.0 },
        cond: if s4 > 0.0 { s1 / s4 } else { f64::INFINITY },
    })
}

/// Solve the two 4x4 systems expressing AX and AY in (X, Y, JX, JY).
fn element_coefficients(
    e: usize,
    split: &ElementSplit,
    data: &ElementFrameData,
) -> Result<([f64; 4], [f64; 4])> {
    if !data.cond.is_finite() || data.cond > FRAME_COND_LIMIT {
        return Err(Error::Frame {
            element: e,
            cond: data.cond,
        });
    }
    let mut m = Matrix4::zeros();
    m.set_column(0, &data.x);
    m.set_column(1, &data.y);
    m.set_column(2, &data.jx);
    m.set_column(3, &data.jy);
    let lu = m.lu();
    let a = split.frame.connecting;
    let cx = lu.solve(&(a * data.x)).ok_or(Error::Frame {
        element: e,
        cond: data.cond,
    })?;
    let cy = lu.solve(&(a * data.y)).ok_or(Error::Frame {
        element: e,
        cond: data.cond,
    })?;
    // cx = (p, q, p', q'), cy = (r, s, r', s').
    Ok((
        [cx[0], cx[1], cy[0], cy[1]],
        [cx[2], cx[3], cy[2], cy[3]],
    ))
}

pub(crate) fn coefficient_fields_from_split(
    split: &[ElementSplit],
) -> Result<EllipticCoefficients> {
    let mut main = Vec::with_capacity(split.len());
    let mut primed = Vec::with_capacity(split.len());
    let mut discriminant = Vec::with_capacity(split.len());
    let mut frames = Vec::with_capacity(split.len());
    for (e, s) in split.iter().enumerate() {
        let data = element_frame_data(s)?;
        let (pqrs, primes) = element_coefficients(e, s, &data)?;
        let [p, q, r, sc] = pqrs;
        main.push(pqrs);
        primed.push(primes);
        discriminant.push((p - sc) * (p - sc) + 4.0 * q * r);
        frames.push(CoefficientFrame {
            omega1: data.omega1,
            x: data.x,
            y: data.y,
            jx: data.jx,
            jy: data.jy,
            basis: s.frame.basis,
        });
    }
    Ok(EllipticCoefficients {
        main,
        primed,
        discriminant,
        frames,
    })
}

/// Expand the connecting automorphism over the tangent frame of every
/// element: `AX = pX + qY + p'JX + q'JY`, `AY = rX + sY + r'JX + s'JY`.
///
/// Fails with a frame error naming the first element whose frame matrix
/// `[X Y JX JY]` has condition number above 1e8.
pub fn coefficient_fields(
    dist: &CorankTwoDistribution,
    map: &MeshMap,
) -> Result<EllipticCoefficients> {
    let split = map.split_along(dist)?;
    coefficient_fields_from_split(&split)
}

/// Run the four admissibility conditions on every element.
///
/// Unlike [`coefficient_fields`], a badly conditioned frame is recorded as a
/// violation rather than an error, so the report always covers the whole
/// map.
pub fn admissibility_check(
    dist: &CorankTwoDistribution,
    map: &MeshMap,
    tol: f64,
) -> Result<AdmissibilityReport> {
    let (z1, z2) = dist.reeb.as_ref().ok_or(Error::MissingReeb {
        needed_for: "admissibility transversality test",
    })?;
    let split = map.split_along(dist)?;
    let mut report = AdmissibilityReport {
        tol,
        elements: split.len(),
        admissible: true,
        immersion_margin: f64::INFINITY,
        transverse_margin: f64::INFINITY,
        totally_real_margin: f64::INFINITY,
        max_discriminant: f64::NEG_INFINITY,
        counts: ViolationCounts::default(),
        violations: Vec::new(),
    };
    let mut saw_frame_failure = false;
    for (e, s) in split.iter().enumerate() {
        let [s1, s2] = map.jacobian_singular_values(e);
        let immersion = if s1 > 0.0 { s2 / s1 } else { 0.0 };
        report.immersion_margin = report.immersion_margin.min(immersion);
        if immersion <= tol {
            report.push(e, Condition::Immersion, immersion);
        }

        let z1v = z1.value_at(&s.image)?;
        let z2v = z2.value_at(&s.image)?;
        let mut m = SMatrix::<f64, 6, 4>::zeros();
        m.set_column(0, &normalized_or_zero(map.jac[e][0]));
        m.set_column(1, &normalized_or_zero(map.jac[e][1]));
        m.set_column(2, &normalized_or_zero(z1v));
        m.set_column(3, &normalized_or_zero(z2v));
        let sv = m.singular_values();
        let transverse = if sv[0] > 0.0 { sv[3] / sv[0] } else { 0.0 };
        report.transverse_margin = report.transverse_margin.min(transverse);
        if transverse <= tol {
            report.push(e, Condition::Transversality, transverse);
        }

        match element_frame_data(s) {
            Ok(data) => {
                report.totally_real_margin = report.totally_real_margin.min(data.span_ratio);
                if data.span_ratio <= tol {
                    report.push(e, Condition::TotallyReal, data.span_ratio);
                }
                match element_coefficients(e, s, &data) {
                    Ok(([p, q, r, sc], _)) => {
                        let disc = (p - sc) * (p - sc) + 4.0 * q * r;
                        report.max_discriminant = report.max_discriminant.max(disc);
                        if disc >= -tol {
                            report.push(e, Condition::Ellipticity, disc);
                        }
                    }
                    Err(_) => {
                        saw_frame_failure = true;
                        report.push(e, Condition::Frame, data.cond);
                    }
                }
            }
            Err(_) => {
                saw_frame_failure = true;
                report.push(e, Condition::Frame, f64::INFINITY);
                report.totally_real_margin = 0.0;
            }
        }
    }
    if saw_frame_failure {
        report.max_discriminant = f64::NAN;
    }
    report.admissible = report.counts.total() == 0;
    Ok(report)
}

fn normalized_or_zero(v: Point6) -> Point6 {
    let n = v.norm();
    if n > 0.0 {
        v / n
    } else {
        v
    }
}
