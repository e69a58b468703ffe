//! Spectral-gap lower bounds on a manifold described by three numbers.
//!
//! A `GeometryParams` value carries the dimension `d`, an upper bound `D` on
//! the diameter, and a lower bound `K` on Ricci curvature (in the convention
//! Ric >= K with K = d-1 on the unit sphere). From these the module evaluates
//!
//! * the eight classical closed-form lower bounds `B1`..`B8` for the first
//!   nonzero Laplacian eigenvalue (Lichnerowicz, Berard-Besson-Gallot,
//!   Li-Yau, Zhong-Yang, Cai, Yang-Jia),
//! * four refinements `C9`..`C12` that dominate specific classical rows,
//! * and a dual variational formula (`general_lower_bound`) that turns any
//!   positive test function on (0, D) into a lower bound via a weighted
//!   double integral; the classical table is the special case of a handful
//!   of explicit test functions.
//!
//! All bounds are *lower* bounds: on the model spaces where the gap is known
//! (unit spheres, the circle) every applicable row stays at or below it, and
//! several rows attain it exactly.

mod general;
pub mod quad;

pub use general::{
    general_lower_bound, general_ratio_profile, optimize_over_family, optimize_over_list,
    FamilySearch, TestFunction, TestFunctionFamily,
};
pub use quad::QuadratureSpec;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("geometry: {0}")]
    InvalidInput(String),
    #[error("geometry: dimension must be >= 1")]
    DimensionZero,
    #[error(
        "geometry: curvature out of range for the cosine weight: \
         (D/2)sqrt(K/(d-1)) = {argument:.6} exceeds pi/2"
    )]
    CurvatureOutOfRange { argument: f64 },
    #[error("geometry: unknown bound id {0:?}")]
    UnknownBound(String),
    #[error("geometry: test function must be strictly positive on (0, D); f({at:.6}) = {value:.6e}")]
    NotAdmissible { at: f64, value: f64 },
    #[error("geometry: no admissible member in the test-function family")]
    EmptyFamily,
    #[error("geometry: quadrature did not converge within the subdivision budget (estimate {estimate:.12e})")]
    QuadratureNoConvergence { estimate: f64 },
}

/// Dimension, diameter bound, and Ricci curvature floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryParams {
    d: u32,
    diameter: f64,
    ricci_floor: f64,
}

impl GeometryParams {
    pub fn new(d: u32, diameter: f64, ricci_floor: f64) -> Result<Self, GeometryError> {
        if d < 1 {
            return Err(GeometryError::DimensionZero);
        }
        if !(diameter.is_finite() && diameter > 0.0) {
            return Err(GeometryError::InvalidInput(
                "diameter must be positive and finite".into(),
            ));
        }
        if !ricci_floor.is_finite() {
            return Err(GeometryError::InvalidInput(
                "curvature floor must be finite".into(),
            ));
        }
        Ok(GeometryParams {
            d,
            diameter,
            ricci_floor,
        })
    }

    pub fn dimension(&self) -> u32 {
        self.d
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn ricci_floor(&self) -> f64 {
        self.ricci_floor
    }

    fn df(&self) -> f64 {
        f64::from(self.d)
    }

    /// alpha = D sqrt(|K| (d-1)) / 2, the exponent scale in the negative
    /// curvature bounds.
    pub fn alpha(&self) -> f64 {
        0.5 * self.diameter * (self.ricci_floor.abs() * (self.df() - 1.0)).sqrt()
    }

    /// alpha' = D sqrt(|K| max(d-1, 2)) / 2, used by the low-dimension bound B8.
    pub fn alpha_prime(&self) -> f64 {
        0.5 * self.diameter * (self.ricci_floor.abs() * (self.df() - 1.0).max(2.0)).sqrt()
    }

    /// The exact gap on model spaces this module uses as oracles: d on the
    /// unit d-sphere (D = pi, K = d-1, d >= 2) and 1 on the unit circle
    /// (d = 1, D = pi, K = 0). None otherwise.
    pub fn reference_gap(&self) -> Option<f64> {
        let tol = 1e-12;
        if (self.diameter - PI).abs() > tol {
            return None;
        }
        if self.d >= 2 && (self.ricci_floor - (self.df() - 1.0)).abs() <= tol {
            return Some(self.df());
        }
        if self.d == 1 && self.ricci_floor.abs() <= tol {
            return Some(1.0);
        }
        None
    }
}

/// log(cosh(x)) without overflow for large |x|.
fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// cosh(x)^e through the log, stable for large x and large e.
fn cosh_pow(x: f64, e: f64) -> f64 {
    (e * ln_cosh(x)).exp()
}

/// The radial weight C(r) of the comparison geometry: cosh^(d-1) of a rate
/// linear in r for K <= 0, the cosine continuation for K > 0, and the
/// constant 1 when d = 1 (the exponent d-1 vanishes).
#[derive(Debug, Clone, Copy)]
pub(crate) enum Weight {
    One,
    Cosh { rate: f64, exponent: f64 },
    Cos { rate: f64, exponent: f64 },
}

impl Weight {
    pub(crate) fn eval(&self, r: f64) -> f64 {
        match *self {
            Weight::One => 1.0,
            Weight::Cosh { rate, exponent } => cosh_pow(rate * r, exponent),
            Weight::Cos { rate, exponent } => (rate * r).cos().max(0.0).powf(exponent),
        }
    }
}

/// Build the weight, rejecting positive curvature past the Bonnet-Myers
/// boundary where the cosine would vanish inside (0, D). Equality with pi/2
/// (the round-sphere case) keeps the weight positive on the open interval
/// and is allowed.
pub(crate) fn weight_for(params: &GeometryParams) -> Result<Weight, GeometryError> {
    if params.d == 1 || params.ricci_floor == 0.0 {
        return Ok(Weight::One);
    }
    let exponent = params.df() - 1.0;
    if params.ricci_floor < 0.0 {
        let rate = 0.5 * (-params.ricci_floor / exponent).sqrt();
        return Ok(Weight::Cosh { rate, exponent });
    }
    let rate = 0.5 * (params.ricci_floor / exponent).sqrt();
    let argument = rate * params.diameter;
    if argument > std::f64::consts::FRAC_PI_2 * (1.0 + 4.0 * f64::EPSILON) {
        return Err(GeometryError::CurvatureOutOfRange { argument });
    }
    Ok(Weight::Cos { rate, exponent })
}

/// Evaluate the comparison weight C(r) at a single radius, 0 <= r <= D.
pub fn cosh_weight(params: &GeometryParams, r: f64) -> Result<f64, GeometryError> {
    if !(r >= 0.0 && r <= params.diameter) {
        return Err(GeometryError::InvalidInput(format!(
            "radius {r} outside [0, {}]",
            params.diameter
        )));
    }
    Ok(weight_for(params)?.eval(r))
}

/// Identifier for a row of the bounds table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundId {
    B1,
    B2,
    B3,
    B4,
    B5,
    B6,
    B7,
    B8,
    C9,
    C10,
    C11,
    C12,
    Gf,
}

impl BoundId {
    pub const CLASSICAL: [BoundId; 8] = [
        BoundId::B1,
        BoundId::B2,
        BoundId::B3,
        BoundId::B4,
        BoundId::B5,
        BoundId::B6,
        BoundId::B7,
        BoundId::B8,
    ];
    pub const REFINED: [BoundId; 4] = [BoundId::C9, BoundId::C10, BoundId::C11, BoundId::C12];

    /// Human-readable label for reports.
    pub fn label(&self) -> &'static str {
        match self {
            BoundId::B1 => "Lichnerowicz",
            BoundId::B2 => "Berard-Besson-Gallot",
            BoundId::B3 => "Li-Yau (nonnegative curvature)",
            BoundId::B4 => "Zhong-Yang",
            BoundId::B5 => "Li-Yau (negative curvature)",
            BoundId::B6 => "Cai",
            BoundId::B7 => "Yang-Jia (d >= 5)",
            BoundId::B8 => "Yang-Jia (2 <= d <= 4)",
            BoundId::C9 => "sine refinement of Zhong-Yang",
            BoundId::C10 => "sine refinement of Lichnerowicz",
            BoundId::C11 => "sine refinement of Cai",
            BoundId::C12 => "cosh-sine refinement of Yang-Jia",
            BoundId::Gf => "dual variational formula",
        }
    }
}

impl fmt::Display for BoundId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BoundId::B1 => "B1",
            BoundId::B2 => "B2",
            BoundId::B3 => "B3",
            BoundId::B4 => "B4",
            BoundId::B5 => "B5",
            BoundId::B6 => "B6",
            BoundId::B7 => "B7",
            BoundId::B8 => "B8",
            BoundId::C9 => "C9",
            BoundId::C10 => "C10",
            BoundId::C11 => "C11",
            BoundId::C12 => "C12",
            BoundId::Gf => "GF",
        };
        f.write_str(s)
    }
}

impl FromStr for BoundId {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "B1" => Ok(BoundId::B1),
            "B2" => Ok(BoundId::B2),
            "B3" => Ok(BoundId::B3),
            "B4" => Ok(BoundId::B4),
            "B5" => Ok(BoundId::B5),
            "B6" => Ok(BoundId::B6),
            "B7" => Ok(BoundId::B7),
            "B8" => Ok(BoundId::B8),
            "C9" => Ok(BoundId::C9),
            "C10" => Ok(BoundId::C10),
            "C11" => Ok(BoundId::C11),
            "C12" => Ok(BoundId::C12),
            "GF" => Ok(BoundId::Gf),
            other => Err(GeometryError::UnknownBound(other.to_string())),
        }
    }
}

/// One evaluated bound. `value` is present exactly when `applicable` holds
/// and the formula's domain restrictions are met; values are nonnegative.
#[derive(Debug, Clone)]
pub struct BoundResult {
    pub id: BoundId,
    pub value: Option<f64>,
    pub applicable: bool,
    pub condition: String,
}

impl BoundResult {
    fn inapplicable(id: BoundId, condition: &str) -> Self {
        BoundResult {
            id,
            value: None,
            applicable: false,
            condition: condition.to_string(),
        }
    }

    fn value(id: BoundId, value: f64, condition: &str) -> Self {
        BoundResult {
            id,
            value: Some(value),
            applicable: true,
            condition: condition.to_string(),
        }
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Integral of cos^(d-1) over [0, x], used by B2.
fn cos_power_integral(d: f64, x: f64) -> Result<f64, GeometryError> {
    quad::integrate(|t| t.cos().max(0.0).powf(d - 1.0), 0.0, x, 1e-12, 1 << 14)
}

/// 1 - cos^d(z) evaluated stably for small z via log1p/expm1.
fn one_minus_cos_pow(d: f64, z: f64) -> f64 {
    let half = 0.5 * z;
    -(d * (-2.0 * half.sin() * half.sin()).ln_1p()).exp_m1()
}

/// Evaluate a single bound. Ids whose stated curvature/dimension conditions
/// fail come back with `applicable = false`; domain violations inside an
/// applicable formula (the Bonnet-Myers boundary for B2/C10) are errors.
pub fn eval_bound(params: &GeometryParams, id: BoundId) -> Result<BoundResult, GeometryError> {
    let d = params.df();
    let big_d = params.diameter;
    let k = params.ricci_floor;
    let pi2_d2 = PI * PI / (big_d * big_d);
    match id {
        BoundId::B1 => {
            let cond = "K >= 0 and d >= 2";
            if k < 0.0 || params.d < 2 {
                return Ok(BoundResult::inapplicable(id, cond));
            }
            Ok(BoundResult::value(id, d / (d - 1.0) * k, cond))
        }
        BoundId::B2 => {
            let cond = "K = d-1 > 0 and D <= pi";
            if params.d < 2 || k <= 0.0 || !close(k, d - 1.0) {
                return Ok(BoundResult::inapplicable(id, cond));
            }
            if 0.5 * big_d > std::f64::consts::FRAC_PI_2 * (1.0 + 4.0 * f64::EPSILON) {
                return Err(GeometryError::CurvatureOutOfRange {
                    argument: 0.5 * big_d,
                });
            }
            let full = cos_power_integral(d, std::f64::consts::FRAC_PI_2)?;
            let part = cos_power_integral(d, 0.5 * big_d)?;
            Ok(BoundResult::value(id, d * (full / part).powf(2.0 / d), cond))
        }
        BoundId::B3 => {
            let cond = "K >= 0";
            if k < 0.0 {
                return Ok(BoundResult::inapplicable(id, cond));
            }
            Ok(BoundResult::value(id, 0.5 * pi2_d2, cond))
        }
        BoundId::B4 => {
            let cond = "K >= 0";
            if k < 0.0 {
                return Ok(BoundResult::inapplicable(id, cond));
            }
            Ok(BoundResult::value(id, pi2_d2, cond))
        }
        BoundId::B5 => {
            let cond = "K <= 0 and d >= 2";
            if k > 0.0 || params.d < 2 {
                return Ok(BoundResult::inapplicable(id, cond));
            }
            let a = params.alpha();
            let denom = big_d * big_d * (d - 1.0) * (1.0 + (1.0 + 16.0 * a * a).sqrt()).exp();
            Ok(BoundResult::value(id, 1.0 / denom, cond))
        }
        BoundId::B6 => {
            let cond = "K <= 0";
            if k > 0.0 {
                return Ok(BoundResult::inapplicable(id, cond));
            }
            Ok(BoundResult::value(id, (pi2_d2 + k).max(0.0), cond))
        }
        BoundId::B7 => {
            let cond = "K <= 0 and d >= 5";
            if k > 0.0 || params.d < 5 {
                return Ok(BoundResult::inapplicable(id, cond));
            }
            Ok(BoundResult::value(id, pi2_d2 * (-params.alpha()).exp(), cond))
        }
        BoundId::B8 => {
            let cond = "K <= 0 and 2 <= d <= 4";
            if k > 0.0 || params.d < 2 || params.d > 4 {
                return Ok(BoundResult::inapplicable(id, cond));
            }
            let v = 0.5 * pi2_d2 * (-params.alpha_prime()).exp();
            Ok(BoundResult::value(id, v, cond))
        }
        BoundId::C9 => {
            let cond = "K >= 0";
            if k < 0.0 {
                return Ok(BoundResult::inapplicable(id, cond));
            }
            let factor = (PI / (4.0 * d)).max(1.0 - 2.0 / PI);
            Ok(BoundResult::value(id, pi2_d2 + factor * k, cond))
        }
        BoundId::C10 => {
            let cond = "K >= 0, d >= 2, within the Bonnet-Myers range";
            if k < 0.0 || params.d < 2 {
                return Ok(BoundResult::inapplicable(id, cond));
            }
            if k == 0.0 {
                // Continuous limit of the formula as K -> 0+.
                return Ok(BoundResult::value(id, 8.0 / (big_d * big_d), cond));
            }
            let z = 0.5 * big_d * (k / (d - 1.0)).sqrt();
            if z > std::f64::consts::FRAC_PI_2 * (1.0 + 4.0 * f64::EPSILON) {
                return Err(GeometryError::CurvatureOutOfRange { argument: z });
            }
            let brace = one_minus_cos_pow(d, z);
            Ok(BoundResult::value(id, d * k / (d - 1.0) / brace, cond))
        }
        BoundId::C11 => {
            let cond = "K <= 0";
            if k > 0.0 {
                return Ok(BoundResult::inapplicable(id, cond));
            }
            let v = (pi2_d2 + (0.5 * PI - 1.0) * k).max(0.0);
            Ok(BoundResult::value(id, v, cond))
        }
        BoundId::C12 => {
            let cond = "K <= 0 and d >= 2";
            if k > 0.0 || params.d < 2 {
                return Ok(BoundResult::inapplicable(id, cond));
            }
            let root = (1.0 - 2.0 * big_d * big_d * k / PI.powi(4)).sqrt();
            let arg = 0.5 * big_d * (-k / (d - 1.0)).sqrt();
            let v = pi2_d2 * root * (-(d - 1.0) * ln_cosh(arg)).exp();
            Ok(BoundResult::value(id, v, cond))
        }
        BoundId::Gf => {
            let search = optimize_over_family(
                params,
                &TestFunctionFamily::BuiltIn,
                &QuadratureSpec::default(),
            )?;
            Ok(BoundResult::value(
                id,
                search.value,
                &format!("sup over built-in test functions (best: {})", search.best.family_id),
            ))
        }
    }
}

/// Evaluate one of the classical bounds B1..B8.
pub fn eval_classical_bound(
    params: &GeometryParams,
    id: BoundId,
) -> Result<BoundResult, GeometryError> {
    if !BoundId::CLASSICAL.contains(&id) {
        return Err(GeometryError::UnknownBound(format!(
            "{id} is not a classical bound"
        )));
    }
    eval_bound(params, id)
}

/// Evaluate one of the refined bounds C9..C12.
pub fn eval_corollary_bound(
    params: &GeometryParams,
    id: BoundId,
) -> Result<BoundResult, GeometryError> {
    if !BoundId::REFINED.contains(&id) {
        return Err(GeometryError::UnknownBound(format!(
            "{id} is not a refined bound"
        )));
    }
    eval_bound(params, id)
}

/// One dominance relation `improved >= baseline`, checked when both rows
/// carry values. `ok` is None when either side is unavailable.
#[derive(Debug, Clone)]
pub struct DominanceCheck {
    pub improved: BoundId,
    pub baseline: BoundId,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub tolerance: f64,
    pub ok: Option<bool>,
}

/// The six pairs that are provably ordered, with the comparison tolerance:
/// 1e-9 for pure closed forms, 1e-6 where a quadrature value (B2) enters.
pub const DOMINANCE_PAIRS: [(BoundId, BoundId, f64); 6] = [
    (BoundId::C9, BoundId::B4, 1e-9),
    (BoundId::C10, BoundId::B1, 1e-9),
    (BoundId::C10, BoundId::B2, 1e-6),
    (BoundId::C11, BoundId::B6, 1e-9),
    (BoundId::C12, BoundId::B7, 1e-9),
    (BoundId::C12, BoundId::B8, 1e-9),
];

/// All bounds at once, sorted by value descending (inapplicable rows last),
/// with the dominance pairs checked and the model-space gap attached when
/// the parameters match one.
#[derive(Debug, Clone)]
pub struct BoundsTable {
    pub rows: Vec<BoundResult>,
    pub dominance: Vec<DominanceCheck>,
    pub reference_gap: Option<f64>,
}

impl BoundsTable {
    /// A row is sharp when the parameters correspond to a model space and
    /// the value attains the known gap to 1e-9.
    pub fn is_sharp(&self, id: BoundId) -> bool {
        let Some(gap) = self.reference_gap else {
            return false;
        };
        self.rows
            .iter()
            .find(|r| r.id == id)
            .and_then(|r| r.value)
            .map(|v| (v - gap).abs() <= 1e-9)
            .unwrap_or(false)
    }

    pub fn row(&self, id: BoundId) -> Option<&BoundResult> {
        self.rows.iter().find(|r| r.id == id)
    }
}

/// Evaluate every bound (including the variational row) and check the
/// dominance pairs. Per-row evaluator errors become inapplicable rows whose
/// condition records the error; they never abort the table.
pub fn bounds_table(
    params: &GeometryParams,
    quadrature: &QuadratureSpec,
) -> Result<BoundsTable, GeometryError> {
    quadrature.validate()?;
    let mut rows = Vec::new();
    for id in BoundId::CLASSICAL.iter().chain(BoundId::REFINED.iter()) {
        match eval_bound(params, *id) {
            Ok(row) => rows.push(row),
            Err(e) => rows.push(BoundResult::inapplicable(*id, &e.to_string())),
        }
    }
    let gf = match optimize_over_family(params, &TestFunctionFamily::BuiltIn, quadrature) {
        Ok(search) => BoundResult::value(
            BoundId::Gf,
            search.value,
            &format!(
                "sup over built-in test functions (best: {})",
                search.best.family_id
            ),
        ),
        Err(e) => BoundResult::inapplicable(BoundId::Gf, &e.to_string()),
    };
    rows.push(gf);

    let value_of = |rows: &[BoundResult], id: BoundId| -> Option<f64> {
        rows.iter().find(|r| r.id == id).and_then(|r| r.value)
    };
    let dominance = DOMINANCE_PAIRS
        .iter()
        .map(|&(improved, baseline, tolerance)| {
            let lhs = value_of(&rows, improved);
            let rhs = value_of(&rows, baseline);
            let ok = match (lhs, rhs) {
                (Some(a), Some(b)) => Some(a >= b - tolerance),
                _ => None,
            };
            DominanceCheck {
                improved,
                baseline,
                lhs,
                rhs,
                tolerance,
                ok,
            }
        })
        .collect();

    rows.sort_by(|a, b| match (a.value, b.value) {
        (Some(x), Some(y)) => y.total_cmp(&x).then(a.id.cmp(&b.id)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.id.cmp(&b.id),
    });

    Ok(BoundsTable {
        rows,
        dominance,
        reference_gap: params.reference_gap(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(d: u32, diameter: f64, k: f64) -> GeometryParams {
        GeometryParams::new(d, diameter, k).unwrap()
    }

    fn value(p: &GeometryParams, id: BoundId) -> f64 {
        eval_bound(p, id).unwrap().value.unwrap()
    }

    #[test]
    fn rejects_bad_params() {
        assert!(matches!(
            GeometryParams::new(0, 1.0, 0.0),
            Err(GeometryError::DimensionZero)
        ));
        assert!(GeometryParams::new(2, 0.0, 0.0).is_err());
        assert!(GeometryParams::new(2, f64::INFINITY, 0.0).is_err());
        assert!(GeometryParams::new(2, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn weight_is_one_for_flat_or_one_dimensional() {
        let p = params(3, 1.0, 0.0);
        assert_eq!(cosh_weight(&p, 0.5).unwrap(), 1.0);
        let p = params(1, 1.0, -4.0);
        assert_eq!(cosh_weight(&p, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn weight_matches_frozen_cosh_value() {
        // d=2, K=-1, D=2: rate = 0.5, so C(1) = cosh(0.5).
        let p = params(2, 2.0, -1.0);
        let v = cosh_weight(&p, 1.0).unwrap();
        assert!((v - 1.1276259652063807).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn weight_rejects_past_bonnet_myers() {
        // d=2, K=1: argument = D/2; D = 3.2 pushes it past pi/2.
        let p = params(2, 3.2, 1.0);
        assert!(matches!(
            cosh_weight(&p, 1.0),
            Err(GeometryError::CurvatureOutOfRange { .. })
        ));
        // The round-sphere boundary case is allowed and positive inside.
        let p = params(2, std::f64::consts::PI, 1.0);
        let v = cosh_weight(&p, 3.0).unwrap();
        assert!(v > 0.0);
    }

    #[test]
    fn lichnerowicz_on_the_two_sphere() {
        let p = params(2, PI, 1.0);
        assert!((value(&p, BoundId::B1) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zhong_yang_on_the_circle() {
        let p = params(1, PI, 0.0);
        assert!((value(&p, BoundId::B4) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn li_yau_negative_curvature_frozen_value() {
        // d=2, D=1, K=0: alpha = 0, denominator = 1*1*e^2.
        let p = params(2, 1.0, 0.0);
        let v = value(&p, BoundId::B5);
        assert!((v - 0.1353352832366127).abs() < 1e-15, "got {v}");
    }

    #[test]
    fn yang_jia_reduces_to_zhong_yang_at_flat_curvature() {
        let p = params(5, 2.0, 0.0);
        let b4 = value(&p, BoundId::B4);
        let b7 = value(&p, BoundId::B7);
        assert!((b4 - b7).abs() < 1e-15);
    }

    #[test]
    fn applicability_matrix() {
        let not = |p: &GeometryParams, id: BoundId| !eval_bound(p, id).unwrap().applicable;
        assert!(not(&params(1, PI, 0.0), BoundId::B1)); // d = 1
        assert!(not(&params(2, 1.0, -0.5), BoundId::B1)); // K < 0
        assert!(not(&params(2, 1.0, 0.5), BoundId::B2)); // K != d-1
        assert!(not(&params(4, 1.0, -1.0), BoundId::B7)); // d < 5
        assert!(not(&params(5, 1.0, -1.0), BoundId::B8)); // d > 4
        assert!(not(&params(2, 1.0, 1.0), BoundId::B5)); // K > 0
        assert!(not(&params(1, 1.0, -1.0), BoundId::B5)); // d = 1
        assert!(not(&params(2, 1.0, -1.0), BoundId::C10)); // K < 0
        assert!(not(&params(1, 1.0, 1.0), BoundId::C10)); // d = 1
        assert!(not(&params(2, 1.0, 1.0), BoundId::C12)); // K > 0
    }

    #[test]
    fn unknown_bound_id_errors() {
        assert!(matches!(
            "B9".parse::<BoundId>(),
            Err(GeometryError::UnknownBound(_))
        ));
        let p = params(2, 1.0, 0.0);
        assert!(eval_classical_bound(&p, BoundId::C9).is_err());
        assert!(eval_corollary_bound(&p, BoundId::B1).is_err());
    }

    #[test]
    fn refined_rows_on_model_spaces() {
        // Circle: C9 = pi^2/D^2 + factor*0 = 1.
        let p = params(3, PI, 0.0);
        assert!((value(&p, BoundId::C9) - 1.0).abs() < 1e-12);
        // Unit two-sphere: C10 attains the gap 2.
        let p = params(2, PI, 1.0);
        assert!((value(&p, BoundId::C10) - 2.0).abs() < 1e-9);
        // Flat case: C12 collapses to pi^2/D^2.
        let p = params(2, PI, 0.0);
        assert!((value(&p, BoundId::C12) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn c10_limit_at_zero_curvature_is_continuous() {
        let d_vals = [2u32, 3, 7];
        for &d in &d_vals {
            let at_zero = value(&params(d, 2.0, 0.0), BoundId::C10);
            assert!((at_zero - 2.0).abs() < 1e-15); // 8/D^2 with D=2
            let near_zero = value(&params(d, 2.0, 1e-12), BoundId::C10);
            assert!(
                (near_zero - at_zero).abs() < 1e-9,
                "d={d}: {near_zero} vs {at_zero}"
            );
        }
    }

    #[test]
    fn b6_and_c11_clamp_at_zero() {
        let p = params(2, 5.0, -2.0);
        assert_eq!(value(&p, BoundId::B6), 0.0);
        assert_eq!(value(&p, BoundId::C11), 0.0);
    }

    #[test]
    fn dimension_two_closed_forms() {
        // For d = 2, K = 1: B2 = 2/sin(D/2) (the exponent 2/d is 1) and
        // C10 = 2/sin^2(D/2); C10 dominates since sin <= 1.
        for &big_d in &[0.5, 1.0, 2.0, 3.0] {
            let p = params(2, big_d, 1.0);
            let b2 = value(&p, BoundId::B2);
            let c10 = value(&p, BoundId::C10);
            let s = (0.5 * big_d).sin();
            let b2_exact = 2.0 / s;
            let c10_exact = 2.0 / (s * s);
            assert!((b2 - b2_exact).abs() < 1e-9 * b2_exact, "B2 {b2} vs {b2_exact}");
            assert!(
                (c10 - c10_exact).abs() < 1e-9 * c10_exact,
                "C10 {c10} vs {c10_exact}"
            );
            assert!(c10 >= b2 - 1e-9);
        }
    }

    #[test]
    fn sphere_rows_are_sound_and_sharp() {
        for d in 2..=5u32 {
            let p = params(d, PI, f64::from(d) - 1.0);
            let table = bounds_table(&p, &QuadratureSpec::default()).unwrap();
            let gap = table.reference_gap.unwrap();
            assert_eq!(gap, f64::from(d));
            for row in &table.rows {
                if let Some(v) = row.value {
                    assert!(v <= gap + 1e-6, "{} = {v} exceeds gap {gap}", row.id);
                }
            }
            for id in [BoundId::B1, BoundId::B2, BoundId::C10] {
                assert!(table.is_sharp(id), "{id} should be sharp on S^{d}");
            }
        }
    }

    #[test]
    fn circle_rows_are_sound_and_sharp() {
        let p = params(1, PI, 0.0);
        let table = bounds_table(&p, &QuadratureSpec::default()).unwrap();
        assert_eq!(table.reference_gap, Some(1.0));
        for row in &table.rows {
            if let Some(v) = row.value {
                assert!(v <= 1.0 + 1e-6, "{} = {v} exceeds the circle gap", row.id);
            }
        }
        for id in [BoundId::B4, BoundId::B6, BoundId::C9, BoundId::C11] {
            assert!(table.is_sharp(id), "{id} should be sharp on the circle");
        }
    }

    #[test]
    fn table_is_sorted_and_checks_dominance() {
        let p = params(3, 2.0, 0.5);
        let table = bounds_table(&p, &QuadratureSpec::default()).unwrap();
        let values: Vec<f64> = table.rows.iter().filter_map(|r| r.value).collect();
        for w in values.windows(2) {
            assert!(w[0] >= w[1], "rows out of order: {values:?}");
        }
        for check in &table.dominance {
            if let Some(ok) = check.ok {
                assert!(
                    ok,
                    "{} >= {} violated: {:?} < {:?}",
                    check.improved, check.baseline, check.lhs, check.rhs
                );
            }
        }
    }

    #[test]
    fn table_survives_out_of_range_rows() {
        // K = d-1 with D > pi: B2, C10, and the variational row all hit the
        // Bonnet-Myers wall and must come back inapplicable, not abort.
        let p = params(3, 5.0, 2.0);
        let table = bounds_table(&p, &QuadratureSpec::default()).unwrap();
        for id in [BoundId::B2, BoundId::C10, BoundId::Gf] {
            let row = table.row(id).unwrap();
            assert!(!row.applicable);
            assert!(row.condition.contains("curvature out of range"));
        }
        // The closed forms that remain applicable still carry values.
        assert!(table.row(BoundId::B4).unwrap().value.is_some());
    }
}
