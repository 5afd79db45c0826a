//! Shape analysis of implied-volatility curves and of the densities behind
//! them.
//!
//! A curve is W-shaped if some level `σ*` is crossed exactly four times
//! with sign pattern `+−+−+`, and W+ if some level gives an even number of
//! at least four changes starting and ending with `+`. Counts are taken on
//! the sampled grid, so they are lower bounds for the continuum counts and
//! relative to the strike window.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::implied::{self, SmileCurve, StrikeGrid};
use crate::pricing::{self, Pricer, TotalVol};
use crate::specialfn;
use crate::vgmodel::{MixtureModel, MixtureParams, Sign};

/// Curve values closer than this to a level carry no sign.
pub const VOL_SIGN_TOL: f64 = 1e-9;

/// Relative density differences below this carry no sign.
pub const DENSITY_SIGN_TOL: f64 = 1e-12;

/// Largest relative deviation accepted by the geometric-symmetry check.
pub const SYMMETRY_TOL: f64 = 1e-8;

const FALLBACK_LEVELS: usize = 50;
const MAX_WIDENINGS: usize = 3;
const WIDEN_FACTOR: f64 = 1.5;

/// Strict sign alternations of a sequence, with near-zero entries skipped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignChanges {
    pub count: usize,
    /// Run-length-collapsed signs, e.g. `"+-+-+"`.
    pub sequence: String,
}

pub fn count_sign_changes(values: &[f64], tolerance: f64) -> Result<SignChanges> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("count_sign_changes", "values must be finite"));
    }
    let mut sequence = String::new();
    let mut last = None;
    for &v in values {
        if v.abs() < tolerance {
            continue;
        }
        let s = if v > 0.0 { '+' } else { '-' };
        if last != Some(s) {
            sequence.push(s);
            last = Some(s);
        }
    }
    if sequence.is_empty() {
        return Err(Error::Degenerate(format!(
            "all {} values lie within {tolerance:e} of zero",
            values.len()
        )));
    }
    Ok(SignChanges {
        count: sequence.len() - 1,
        sequence,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShapeClass {
    #[serde(rename = "W")]
    W,
    #[serde(rename = "W_PLUS")]
    WPlus,
    #[serde(rename = "NOT_W")]
    NotW,
}

impl fmt::Display for ShapeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShapeClass::W => "W",
            ShapeClass::WPlus => "W_PLUS",
            ShapeClass::NotW => "NOT_W",
        })
    }
}

fn is_w(seq: &str) -> bool {
    seq == "+-+-+"
}

fn is_w_plus(seq: &str) -> bool {
    let n = seq.len();
    n >= 5 && (n - 1) % 2 == 0 && seq.starts_with('+') && seq.ends_with('+')
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryCheck {
    pub pass: bool,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub pass: bool,
    pub r_star: f64,
}

/// Both sides of the dip-at-zero inequality `f(0) < φ_{σ(S0)}(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipReport {
    pub pass: bool,
    /// `f(0)`; infinite where the density is singular.
    pub density_at_zero: f64,
    /// `e^{−σ²/8}/(√(2π)σ)` at the at-the-money total vol.
    pub normal_at_zero: f64,
    pub atm_vol: f64,
}

impl DipReport {
    pub fn evaluate(density_at_zero: f64, atm_vol: TotalVol) -> Self {
        let normal_at_zero = pricing::bs_gamma_atm(atm_vol);
        Self {
            pass: density_at_zero < normal_at_zero,
            density_at_zero,
            normal_at_zero,
            atm_vol: atm_vol.value(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conditions {
    pub geometric_symmetry: SymmetryCheck,
    pub semi_heavy_tails: TailCheck,
    pub dip_at_zero: DipReport,
}

impl Conditions {
    pub fn all_pass(&self) -> bool {
        self.geometric_symmetry.pass && self.semi_heavy_tails.pass && self.dip_at_zero.pass
    }
}

/// Classification of a smile together with its evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeReport {
    pub classification: ShapeClass,
    /// Level certifying the classification; for `NOT_W` the level with the
    /// most sign changes.
    pub sigma_star: Option<f64>,
    /// Hull of the levels giving the reported pattern.
    pub sigma_star_interval: Option<(f64, f64)>,
    pub sign_sequence: String,
    pub n_vol: usize,
    pub conditions: Conditions,
    /// Half-width of the log-moneyness window finally used.
    pub window: f64,
    pub points: usize,
    pub diagnostics: Vec<String>,
}

struct Analysis {
    class: ShapeClass,
    sigma_star: Option<f64>,
    interval: Option<(f64, f64)>,
    sequence: String,
    n_vol: usize,
    needs_widening: bool,
    diagnostics: Vec<String>,
}

/// Curve values at local extrema and at both ends, sorted and distinct.
fn critical_values(vols: &[f64]) -> Vec<f64> {
    let mut out = vec![vols[0], vols[vols.len() - 1]];
    let mut last_dir = 0.0;
    let mut last_idx = 0;
    for i in 1..vols.len() {
        let d = vols[i] - vols[i - 1];
        if d.abs() <= 1e-13 {
            continue;
        }
        let dir = d.signum();
        if last_dir != 0.0 && dir != last_dir {
            out.push(vols[last_idx]);
        }
        last_dir = dir;
        last_idx = i;
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    out
}

fn analyze(vols: &[f64]) -> Analysis {
    let lo = vols.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vols.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut diagnostics = Vec::new();
    if hi - lo <= VOL_SIGN_TOL {
        diagnostics.push("curve is constant within the sign tolerance".to_string());
        return Analysis {
            class: ShapeClass::NotW,
            sigma_star: None,
            interval: None,
            sequence: String::new(),
            n_vol: 0,
            needs_widening: false,
            diagnostics,
        };
    }
    let crit = critical_values(vols);
    let mut candidates: Vec<f64> = crit.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    candidates.extend((1..=FALLBACK_LEVELS).map(|i| lo + (hi - lo) * i as f64 / (FALLBACK_LEVELS + 1) as f64));
    candidates.sort_by(f64::total_cmp);

    let gap_of = |s: f64| -> (f64, f64) {
        let j = crit.partition_point(|&c| c <= s);
        let a = if j == 0 { lo } else { crit[j - 1] };
        let b = if j >= crit.len() { hi } else { crit[j] };
        (a, b)
    };

    let mut scans = Vec::with_capacity(candidates.len());
    for &s in &candidates {
        let shifted: Vec<f64> = vols.iter().map(|v| v - s).collect();
        if let Ok(sc) = count_sign_changes(&shifted, VOL_SIGN_TOL) {
            scans.push((s, sc));
        }
    }

    // a level above either end of a non-monotone curve: wings not yet clear
    let needs_widening = scans
        .iter()
        .any(|(_, sc)| sc.count >= 2 && !(sc.sequence.starts_with('+') && sc.sequence.ends_with('+')));

    let pick = |pred: &dyn Fn(&str) -> bool| -> Option<(f64, SignChanges, (f64, f64))> {
        let hits: Vec<&(f64, SignChanges)> = scans.iter().filter(|(_, sc)| pred(&sc.sequence)).collect();
        if hits.is_empty() {
            return None;
        }
        let mut hull = gap_of(hits[0].0);
        for (s, _) in &hits {
            let (a, b) = gap_of(*s);
            hull = (hull.0.min(a), hull.1.max(b));
        }
        let centre = 0.5 * (hull.0 + hull.1);
        let best = hits
            .iter()
            .min_by(|x, y| (x.0 - centre).abs().total_cmp(&(y.0 - centre).abs()))
            .expect("non-empty");
        Some((best.0, best.1.clone(), hull))
    };

    if let Some((s, sc, hull)) = pick(&is_w) {
        return Analysis {
            class: ShapeClass::W,
            sigma_star: Some(s),
            interval: Some(hull),
            sequence: sc.sequence,
            n_vol: sc.count,
            needs_widening: false,
            diagnostics,
        };
    }
    if let Some((s, sc, hull)) = pick(&is_w_plus) {
        return Analysis {
            class: ShapeClass::WPlus,
            sigma_star: Some(s),
            interval: Some(hull),
            sequence: sc.sequence,
            n_vol: sc.count,
            needs_widening: false,
            diagnostics,
        };
    }
    let most = scans.iter().max_by(|a, b| a.1.count.cmp(&b.1.count).then(b.0.total_cmp(&a.0)));
    match most {
        Some((s, sc)) => Analysis {
            class: ShapeClass::NotW,
            sigma_star: Some(*s),
            interval: None,
            sequence: sc.sequence.clone(),
            n_vol: sc.count,
            needs_widening,
            diagnostics,
        },
        None => {
            diagnostics.push("no candidate level produced a usable sign pattern".to_string());
            Analysis {
                class: ShapeClass::NotW,
                sigma_star: None,
                interval: None,
                sequence: String::new(),
                n_vol: 0,
                needs_widening: false,
                diagnostics,
            }
        }
    }
}

/// Largest relative deviation from `e^{x/2} f(x) = e^{−x/2} f(−x)` on a grid
/// of 601 points over `[−0.3, 0.3]`.
pub fn symmetry_deviation(model: &MixtureModel) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 1..=300 {
        let x = 0.001 * i as f64;
        let (Ok(fp), Ok(fm)) = (model.density(x), model.density(-x)) else {
            continue;
        };
        let lhs = (0.5 * x).exp() * fp;
        let rhs = (-0.5 * x).exp() * fm;
        let scale = lhs.abs().max(rhs.abs());
        if scale > 0.0 {
            worst = worst.max((lhs - rhs).abs() / scale);
        }
    }
    worst
}

/// Supremum of `u` with `m(u) < ∞`.
pub fn r_star(params: &MixtureParams) -> Result<f64> {
    params.validate()?;
    if params.v == 0.0 {
        return Ok(params.lambda / params.mu + 0.5);
    }
    let v2 = params.v * params.v;
    let root = |s: f64| {
        // v²u²/2 + (sμ − v²/2)u − (sμ/2 + λ) = 0, positive root
        let a = 0.5 * v2;
        let b = s * params.mu - 0.5 * v2;
        let c = -(0.5 * s * params.mu + params.lambda);
        let disc = (b * b - 4.0 * a * c).sqrt();
        if b >= 0.0 {
            -2.0 * c / (b + disc)
        } else {
            (disc - b) / (2.0 * a)
        }
    };
    Ok(root(1.0).min(root(-1.0)))
}

/// `f(0)`, infinite at a singularity and the common limit at a removable
/// discontinuity.
fn density_at(model: &MixtureModel, x: f64) -> Result<f64> {
    match model.density(x) {
        Ok(v) => Ok(v),
        Err(Error::Singularity { .. }) => Ok(f64::INFINITY),
        Err(Error::Discontinuity { left, right, .. }) => Ok(left.max(right)),
        Err(e) => Err(e),
    }
}

pub fn dip_at_zero(params: &MixtureParams) -> Result<DipReport> {
    let pricer = Pricer::from_params(*params)?;
    dip_at_zero_with(&pricer)
}

pub fn dip_at_zero_with(pricer: &Pricer) -> Result<DipReport> {
    let w = implied::atm_vol(pricer)?;
    Ok(DipReport::evaluate(density_at(pricer.model(), 0.0)?, w))
}

pub fn conditions(pricer: &Pricer) -> Result<Conditions> {
    let deviation = symmetry_deviation(pricer.model());
    let rs = r_star(pricer.model().params())?;
    Ok(Conditions {
        geometric_symmetry: SymmetryCheck {
            pass: deviation < SYMMETRY_TOL,
            max_deviation: deviation,
        },
        semi_heavy_tails: TailCheck {
            pass: rs.is_finite(),
            r_star: rs,
        },
        dip_at_zero: dip_at_zero_with(pricer)?,
    })
}

/// Classify a smile. If the window is too narrow for the wings to clear
/// the candidate levels it is widened by 1.5, at most three times.
pub fn classify(curve: &SmileCurve, params: &MixtureParams) -> Result<ShapeReport> {
    if curve.len() < 50 {
        return Err(Error::Validation(format!(
            "classification needs at least 50 curve points, got {}",
            curve.len()
        )));
    }
    let pricer = Pricer::from_params(*params)?;
    let mut window = curve
        .log_moneyness()
        .iter()
        .fold(0.0f64, |m, k| m.max(k.abs()));
    let points = curve.len();
    let mut analysis = analyze(&curve.vols);
    let mut widened = 0;
    while analysis.needs_widening && widened < MAX_WIDENINGS {
        window *= WIDEN_FACTOR;
        widened += 1;
        let grid = StrikeGrid::symmetric(curve.s0, window, points)?;
        let wider = implied::smile_for_strikes(&pricer, &grid.strikes())?;
        analysis = analyze(&wider.vols);
    }
    let mut diagnostics = analysis.diagnostics;
    if widened > 0 {
        diagnostics.push(format!("window widened {widened} time(s) to ±{window}"));
    }
    if analysis.needs_widening {
        diagnostics.push("wings stay below a candidate level after the maximal widening".to_string());
    }
    Ok(ShapeReport {
        classification: analysis.class,
        sigma_star: analysis.sigma_star,
        sigma_star_interval: analysis.interval,
        sign_sequence: analysis.sequence,
        n_vol: analysis.n_vol,
        conditions: conditions(&pricer)?,
        window,
        points,
        diagnostics,
    })
}

/// Smile on the default grid followed by [`classify`].
pub fn classify_params(params: &MixtureParams, grid: &StrikeGrid) -> Result<ShapeReport> {
    let curve = implied::smile(params, grid)?;
    classify(&curve, params)
}

/// Bisection in `v` between a W-shaped and a non-W smile. Returns the final
/// bracket `(last W, first non-W)`; a numerical estimate only.
pub fn shape_boundary(
    params: &MixtureParams,
    grid: &StrikeGrid,
    v_w: f64,
    v_not_w: f64,
    iterations: usize,
) -> Result<(f64, f64)> {
    let is_w_at = |v: f64| -> Result<bool> {
        Ok(classify_params(&params.with_v(v), grid)?.classification == ShapeClass::W)
    };
    if !is_w_at(v_w)? {
        return Err(Error::Validation(format!("smile at v = {v_w} is not W-shaped")));
    }
    if is_w_at(v_not_w)? {
        return Err(Error::Validation(format!("smile at v = {v_not_w} is W-shaped")));
    }
    let (mut a, mut b) = (v_w, v_not_w);
    for _ in 0..iterations {
        let m = 0.5 * (a + b);
        if is_w_at(m)? {
            a = m;
        } else {
            b = m;
        }
    }
    Ok((a, b))
}

/// Sign changes of `σ(K) − σ*` over a curve.
pub fn n_vol(curve: &SmileCurve, sigma_star: f64) -> Result<SignChanges> {
    let shifted: Vec<f64> = curve.vols.iter().map(|v| v - sigma_star).collect();
    count_sign_changes(&shifted, VOL_SIGN_TOL)
}

/// Crossings of the model density with the Black–Scholes density `φ_{σ*}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub sigma_star: f64,
    pub n_pdf: usize,
    pub crossing_xs: Vec<f64>,
}

/// Grid for crossing counts: covers `±8σ*` and the mixture's mass region,
/// symmetric and containing `x = 0`.
pub fn crossing_grid(model: &MixtureModel, sigma_star: TotalVol, points: usize) -> Vec<f64> {
    let mass = 40.0 / model.left_decay().min(model.right_decay());
    let span = (8.0 * sigma_star.value()).max(mass);
    let n = points.max(3) | 1;
    let half = (n / 2) as i64;
    (-half..=half).map(|i| span * i as f64 / half as f64).collect()
}

fn relative_gap(f: f64, phi: f64) -> f64 {
    if f.is_infinite() {
        return 1.0;
    }
    let denom = f + phi;
    if denom > 0.0 {
        (f - phi) / denom
    } else {
        0.0
    }
}

fn crossings_of<F: Fn(f64) -> f64>(gap: F, grid: &[f64]) -> Result<CrossingReport> {
    if grid.len() < 3 || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Degenerate("crossing grid must be increasing with at least 3 points".into()));
    }
    let mut last: Option<(f64, f64)> = None;
    let mut xs = Vec::new();
    let mut signed = 0;
    for &x in grid {
        let g = gap(x);
        if !g.is_finite() {
            return Err(Error::domain("count_density_crossings", format!("non-finite difference at x = {x}")));
        }
        if g.abs() < DENSITY_SIGN_TOL {
            continue;
        }
        signed += 1;
        if let Some((x0, g0)) = last {
            if g0.signum() != g.signum() {
                xs.push(bisect(&gap, x0, x, g0));
            }
        }
        last = Some((x, g));
    }
    if signed == 0 {
        return Err(Error::Degenerate("densities agree on the whole grid".into()));
    }
    Ok(CrossingReport {
        sigma_star: f64::NAN,
        n_pdf: xs.len(),
        crossing_xs: xs,
    })
}

fn bisect<F: Fn(f64) -> f64>(gap: &F, mut a: f64, mut b: f64, ga: f64) -> f64 {
    let sa = ga.signum();
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = gap(m);
        if gm.signum() == sa {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Count crossings of `f` and `φ_{σ*}` on `grid` by sign changes of the
/// relative difference `(f − φ)/(f + φ)`, then locate each by bisection.
pub fn count_density_crossings(params: &MixtureParams, sigma_star: TotalVol, grid: &[f64]) -> Result<CrossingReport> {
    let model = MixtureModel::new(*params)?;
    density_crossings(&model, sigma_star, grid)
}

pub fn density_crossings(model: &MixtureModel, sigma_star: TotalVol, grid: &[f64]) -> Result<CrossingReport> {
    let gap = |x: f64| {
        let f = density_at(model, x).unwrap_or(f64::NAN);
        relative_gap(f, pricing::bs_log_density(x, sigma_star))
    };
    let mut r = crossings_of(gap, grid)?;
    r.sigma_star = sigma_star.value();
    Ok(r)
}

/// Crossings on `x > 0` of the weighted positive double-gamma half
/// `b/(a+b) f₀₊` with `φ_σ`.
pub fn positive_half_crossings(params: &MixtureParams, sigma: TotalVol, grid: &[f64]) -> Result<CrossingReport> {
    let model = MixtureModel::new(params.with_v(0.0))?;
    let positive: Vec<f64> = grid.iter().copied().filter(|&x| x > 0.0).collect();
    let gap = |x: f64| {
        let f = model.double_gamma_density(x).unwrap_or(f64::NAN);
        relative_gap(f, pricing::bs_log_density(x, sigma))
    };
    let mut r = crossings_of(gap, &positive)?;
    r.sigma_star = sigma.value();
    Ok(r)
}

/// Coefficients of `log h₊(x) − log φ_σ(x) = a₀ + a₁ log x + a₂ x + a₃ x²`
/// on `x > 0` for the double gamma.
///
/// With `x = e^t` the difference is `a₀ + a₁ t + a₂ e^t + a₃ e^{2t}`, whose
/// real zeros are bounded by the sign changes of `(−a₁, a₁, a₂, a₃)`, or of
/// `(a₀, a₂, a₃)` when `a₁ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescartesReport {
    /// `log(e^{σ²/8} √(2π) σ λ₊^{cT} / Γ(cT))` for the unweighted half.
    pub a0: f64,
    /// `a0 + log(b/(a+b))`, the constant for the mixture's positive half.
    pub a0_weighted: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// Bound on the zeros of the difference on `x > 0`.
    pub sign_changes: usize,
    /// Sign changes of `(a0, a1, a2, a3)` in the listed order. Not a bound:
    /// for `cT > 1` and `a0 > 0` it is 2 while three crossings occur.
    pub listed_sign_changes: usize,
}

fn sign_changes_of(coeffs: &[f64]) -> usize {
    let mut last = 0.0;
    let mut n = 0;
    for &c in coeffs {
        if c == 0.0 {
            continue;
        }
        if last != 0.0 && c.signum() != last {
            n += 1;
        }
        last = c.signum();
    }
    n
}

pub fn descartes_coefficients(params: &MixtureParams, sigma: TotalVol) -> Result<DescartesReport> {
    let p = params.with_v(0.0);
    let model = MixtureModel::new(p)?;
    let comp = model.components();
    let s = sigma.value();
    let ct = comp.ct;
    let a0 = s * s / 8.0 + (std::f64::consts::TAU.sqrt() * s).ln() + ct * comp.lambda_plus.ln()
        - specialfn::log_gamma(ct)?;
    let a0_weighted = a0 + comp.weight(Sign::Plus).ln();
    let a1 = ct - 1.0;
    let a2 = -p.lambda / p.mu;
    let a3 = 1.0 / (2.0 * s * s);
    let sign_changes = if a1 == 0.0 {
        sign_changes_of(&[a0_weighted, a2, a3])
    } else {
        sign_changes_of(&[-a1, a1, a2, a3])
    };
    Ok(DescartesReport {
        a0,
        a0_weighted,
        a1,
        a2,
        a3,
        sign_changes,
        listed_sign_changes: sign_changes_of(&[a0, a1, a2, a3]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const VS: [f64; 4] = [0.0, 0.01, 0.015, 0.02];

    fn tv(x: f64) -> TotalVol {
        TotalVol::new(x).unwrap()
    }

    #[test]
    fn sign_change_examples() {
        let r = count_sign_changes(&[1.0, -1.0, 1.0, -1.0, 1.0], 1e-12).unwrap();
        assert_eq!((r.count, r.sequence.as_str()), (4, "+-+-+"));
        let r = count_sign_changes(&[1.0, 2.0, 1.0], 1e-12).unwrap();
        assert_eq!((r.count, r.sequence.as_str()), (0, "+"));
        let r = count_sign_changes(&[1.0, 1e-15, -1.0], 1e-12).unwrap();
        assert_eq!((r.count, r.sequence.as_str()), (1, "+-"));
        assert!(matches!(count_sign_changes(&[1e-15, 0.0], 1e-12), Err(Error::Degenerate(_))));
        assert!(count_sign_changes(&[f64::NAN], 1e-12).is_err());
    }

    #[test]
    fn pattern_predicates() {
        assert!(is_w("+-+-+"));
        assert!(!is_w("+-+-+-+"));
        assert!(is_w_plus("+-+-+-+"));
        assert!(is_w_plus("+-+-+"));
        assert!(!is_w_plus("-+-+-"));
        assert!(!is_w_plus("+-+"));
    }

    #[test]
    fn analyze_synthetic_shapes() {
        let xs: Vec<f64> = (0..201).map(|i| -1.0 + 0.01 * i as f64).collect();
        // quartic with a local max at zero and minima at ±0.5
        let w: Vec<f64> = xs.iter().map(|x| 1.0 + x.powi(4) - 0.5 * x * x).collect();
        let a = analyze(&w);
        assert_eq!(a.class, ShapeClass::W);
        assert_eq!(a.sequence, "+-+-+");
        let (lo, hi) = a.interval.unwrap();
        assert!((lo - (1.0 - 0.0625)).abs() < 1e-9 && (hi - 1.0).abs() < 1e-9);
        let u: Vec<f64> = xs.iter().map(|x| 1.0 + x * x).collect();
        assert_eq!(analyze(&u).class, ShapeClass::NotW);
        let flat = vec![0.2; 201];
        let a = analyze(&flat);
        assert_eq!(a.class, ShapeClass::NotW);
        assert!(!a.diagnostics.is_empty());
        // three dips: six changes
        let wp: Vec<f64> = xs.iter().map(|x| 2.0 + x * x - 0.1 * (12.0 * x).cos()).collect();
        assert!(matches!(analyze(&wp).class, ShapeClass::W | ShapeClass::WPlus));
    }

    #[test]
    fn r_star_examples() {
        assert_eq!(r_star(&MixtureParams::figure(0.0)).unwrap(), 25.5);
        let p = MixtureParams::figure(0.02);
        let bf = crate::vgmodel::derive(&p).unwrap().bessel.unwrap();
        let rs = r_star(&p).unwrap();
        assert!((rs - (bf.alpha - bf.beta_plus)).abs() < 1e-10);
        assert!((rs - 21.2125).abs() < 1e-4);
        let seq: Vec<f64> = [0.02, 0.01, 0.005, 0.001]
            .iter()
            .map(|&v| r_star(&MixtureParams::figure(v)).unwrap())
            .collect();
        assert!(seq.windows(2).all(|w| w[0] < w[1]));
        assert!(seq.iter().all(|&r| r < 25.5));
        assert!((seq[3] - 25.5).abs() < 0.02);
    }

    #[test]
    fn mgf_explodes_at_r_star() {
        for v in VS {
            let p = MixtureParams::figure(v);
            let rs = r_star(&p).unwrap();
            assert!(crate::vgmodel::mgf(rs * (1.0 - 1e-9), &p).is_ok());
            assert!(crate::vgmodel::mgf(rs * (1.0 + 1e-9), &p).is_err());
        }
    }

    #[test]
    fn dip_examples() {
        let d = dip_at_zero(&MixtureParams::figure(0.0)).unwrap();
        assert!(d.pass);
        assert_eq!(d.density_at_zero, 0.0);
        assert!(d.normal_at_zero > 0.0);
        let w = tv(0.1);
        let bs = DipReport::evaluate(pricing::bs_log_density(0.0, w), w);
        assert!(!bs.pass);
        let half = dip_at_zero(&MixtureParams {
            c: 0.5,
            ..MixtureParams::figure(0.0)
        })
        .unwrap();
        assert!(!half.pass && half.density_at_zero.is_infinite());
    }

    #[test]
    fn descartes_example() {
        let p = MixtureParams::figure(0.0);
        let d = descartes_coefficients(&p, tv(0.1)).unwrap();
        assert_eq!(d.a1, 1.0);
        assert!((d.a2 + 25.0).abs() < 1e-12);
        assert!((d.a3 - 50.0).abs() < 1e-12);
        assert!((d.a0 - 5.094_960_344_539_388).abs() < 1e-12);
        assert!((d.a0_weighted - (d.a0 + (0.9604f64 / 2.0008).ln())).abs() < 1e-12);
        assert_eq!(d.listed_sign_changes, 2);
        assert_eq!(d.sign_changes, 3);
        let small = descartes_coefficients(&MixtureParams { c: 0.5, ..p }, tv(0.1)).unwrap();
        assert!(small.a1 < 0.0 && small.sign_changes <= 2);
        let unit = descartes_coefficients(&MixtureParams { c: 1.0, ..p }, tv(0.1)).unwrap();
        assert_eq!(unit.a1, 0.0);
        assert_eq!(unit.sign_changes, 2);
    }

    #[test]
    fn double_gamma_crossings() {
        let p = MixtureParams::figure(0.0);
        let m = MixtureModel::new(p).unwrap();
        for (s, expect) in [(0.06, 2), (0.1, 6), (0.12, 6)] {
            let grid = crossing_grid(&m, tv(s), 8001);
            assert!(grid.contains(&0.0));
            let r = density_crossings(&m, tv(s), &grid).unwrap();
            assert_eq!(r.n_pdf, expect, "sigma={s}: {:?}", r.crossing_xs);
            for x in &r.crossing_xs {
                let f = m.density(*x).unwrap();
                let phi = pricing::bs_log_density(*x, tv(s));
                assert!(((f - phi) / (f + phi)).abs() < 1e-9);
            }
        }
        for i in 0..30 {
            let s = 0.02 + 0.01 * i as f64;
            let grid = crossing_grid(&m, tv(s), 4001);
            assert!(density_crossings(&m, tv(s), &grid).unwrap().n_pdf <= 6);
        }
    }

    #[test]
    fn three_crossings_on_one_side() {
        let p = MixtureParams::figure(0.0);
        let m = MixtureModel::new(p).unwrap();
        let w = tv(0.1);
        let r = positive_half_crossings(&p, w, &crossing_grid(&m, w, 8001)).unwrap();
        let d = descartes_coefficients(&p, w).unwrap();
        assert_eq!(r.n_pdf, 3);
        assert!(r.n_pdf <= d.sign_changes);
        assert!(r.n_pdf > d.listed_sign_changes);
    }

    #[test]
    fn crossing_grid_errors() {
        let p = MixtureParams::figure(0.0);
        assert!(matches!(count_density_crossings(&p, tv(0.1), &[0.0, 1.0]), Err(Error::Degenerate(_))));
        assert!(count_density_crossings(&p, tv(0.1), &[1.0, 0.0, 2.0]).is_err());
    }

    #[test]
    fn classify_requires_points() {
        let grid = StrikeGrid::symmetric(1.0, 0.15, 21).unwrap();
        let p = MixtureParams::figure(0.0);
        let curve = implied::smile(&p, &grid).unwrap();
        assert!(matches!(classify(&curve, &p), Err(Error::Validation(_))));
    }

    #[test]
    fn classify_double_gamma_is_w() {
        let p = MixtureParams::figure(0.0);
        let r = classify_params(&p, &StrikeGrid::default_for(1.0)).unwrap();
        assert_eq!(r.classification, ShapeClass::W);
        assert_eq!(r.sign_sequence, "+-+-+");
        assert_eq!(r.n_vol, 4);
        assert!(r.conditions.all_pass());
        let (lo, hi) = r.sigma_star_interval.unwrap();
        let s = r.sigma_star.unwrap();
        assert!(lo < s && s < hi);
    }

    #[test]
    fn small_shape_is_not_w() {
        let p = MixtureParams {
            c: 0.5,
            ..MixtureParams::figure(0.0)
        };
        let r = classify_params(&p, &StrikeGrid::default_for(1.0)).unwrap();
        assert_eq!(r.classification, ShapeClass::NotW);
        assert!(!r.conditions.dip_at_zero.pass);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn descartes_bounds_one_sided_crossings(ct in 0.2f64..4.0, lm in 2.0f64..40.0, sigma in 0.03f64..0.4) {
            let p = MixtureParams { v: 0.0, c: ct, lambda: lm * 0.02, mu: 0.02, t: 1.0, s0: 1.0 };
            let d = descartes_coefficients(&p, tv(sigma)).unwrap();
            prop_assert!(d.sign_changes <= 3);
            if ct < 1.0 {
                prop_assert!(d.sign_changes <= 2);
            }
            let m = MixtureModel::new(p).unwrap();
            let grid = crossing_grid(&m, tv(sigma), 6001);
            let r = positive_half_crossings(&p, tv(sigma), &grid).unwrap();
            prop_assert!(r.n_pdf <= d.sign_changes, "{} > {}", r.n_pdf, d.sign_changes);
        }
    }
}
