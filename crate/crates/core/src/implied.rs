//! Implied total volatility, smile curves and at-the-money derivatives.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pricing::{self, bs_otm, Pricer, TotalVol};
use crate::vgmodel::MixtureParams;

/// Search interval for the implied total volatility.
pub const VOL_BRACKET: (f64, f64) = (1e-8, 10.0);

/// Out-of-the-money prices below this are not inverted.
pub const MIN_PRICE: f64 = 1e-14;

/// Relative strike step of the curvature finite difference.
pub const CURVATURE_STEP: f64 = 1e-5;

/// Zero of `f` on `[lo, hi]` by Brent's method, given `f(lo)·f(hi) ≤ 0`.
fn brent<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, xtol: f64, max_iter: usize) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracket { lo, hi });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Err(Error::Convergence {
        func: "implied_vol",
        iterations: max_iter,
        estimate: b,
    })
}

/// Total volatility reproducing an out-of-the-money price: a put for
/// `K < S0`, a call otherwise.
pub fn implied_vol_otm(otm_price: f64, strike: f64, s0: f64) -> Result<TotalVol> {
    if !(strike > 0.0 && s0 > 0.0) {
        return Err(Error::Validation(format!("strike {strike} and S0 {s0} must be > 0")));
    }
    let upper = strike.min(s0);
    if !(otm_price > 0.0) {
        return Err(Error::BoundViolation {
            bound: "lower (intrinsic value)",
            price: otm_price,
            limit: 0.0,
        });
    }
    if otm_price >= upper {
        return Err(Error::BoundViolation {
            bound: "upper",
            price: otm_price,
            limit: upper,
        });
    }
    let (lo, hi) = VOL_BRACKET;
    let g = |w: f64| bs_otm(strike, w, s0) - otm_price;
    let mut w = brent(g, lo, hi, 1e-15, 200)?;
    // one guarded Newton step on the unclipped price
    let vega = pricing::vega(strike, TotalVol::new(w)?, s0)?;
    if vega > 0.0 {
        let step = g(w) / vega;
        let cand = w - step;
        if step.abs() < 1e-10 && cand > lo && cand < hi && g(cand).abs() <= g(w).abs() {
            w = cand;
        }
    }
    TotalVol::new(w)
}

/// Total volatility `w` with `bs_call(K, w, S0) = call_price`.
pub fn implied_vol(call_price: f64, strike: f64, s0: f64) -> Result<TotalVol> {
    if !(strike > 0.0 && s0 > 0.0) {
        return Err(Error::Validation(format!("strike {strike} and S0 {s0} must be > 0")));
    }
    let intrinsic = (s0 - strike).max(0.0);
    if !(call_price > intrinsic) {
        return Err(Error::BoundViolation {
            bound: "lower (intrinsic value)",
            price: call_price,
            limit: intrinsic,
        });
    }
    if call_price >= s0 {
        return Err(Error::BoundViolation {
            bound: "upper (spot)",
            price: call_price,
            limit: s0,
        });
    }
    implied_vol_otm(call_price - intrinsic, strike, s0)
}

/// Strikes `S0·e^{k}` on a symmetric log-moneyness grid, so that entries `i`
/// and `n−1−i` are mirror strikes `K` and `S0²/K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrikeGrid {
    pub s0: f64,
    pub log_moneyness: Vec<f64>,
}

impl StrikeGrid {
    pub const DEFAULT_POINTS: usize = 201;
    pub const DEFAULT_WINDOW: f64 = 0.15;

    pub fn symmetric(s0: f64, window: f64, points: usize) -> Result<Self> {
        if !(s0 > 0.0 && window > 0.0 && window.is_finite()) || points < 3 {
            return Err(Error::Validation(format!(
                "strike grid needs S0 > 0, window > 0 and at least 3 points (got S0 = {s0}, window = {window}, points = {points})"
            )));
        }
        let n = points - 1;
        let log_moneyness = (0..points)
            .map(|i| window * (2 * i as i64 - n as i64) as f64 / n as f64)
            .collect();
        Ok(Self { s0, log_moneyness })
    }

    pub fn default_for(s0: f64) -> Self {
        Self::symmetric(s0, Self::DEFAULT_WINDOW, Self::DEFAULT_POINTS).expect("valid defaults")
    }

    pub fn strikes(&self) -> Vec<f64> {
        self.log_moneyness.iter().map(|k| self.s0 * k.exp()).collect()
    }

    pub fn len(&self) -> usize {
        self.log_moneyness.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_moneyness.is_empty()
    }
}

/// Implied total volatilities over a strike grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmileCurve {
    pub strikes: Vec<f64>,
    pub vols: Vec<f64>,
    #[serde(rename = "S0")]
    pub s0: f64,
    pub params: MixtureParams,
    /// Strikes dropped because the out-of-the-money price fell below
    /// [`MIN_PRICE`].
    pub gaps: Vec<f64>,
}

impl SmileCurve {
    pub fn new(strikes: Vec<f64>, vols: Vec<f64>, s0: f64, params: MixtureParams) -> Result<Self> {
        if strikes.len() != vols.len() {
            return Err(Error::Validation("strikes and vols differ in length".into()));
        }
        if strikes.windows(2).any(|w| !(w[0] < w[1])) || strikes.iter().any(|k| !(*k > 0.0)) {
            return Err(Error::Validation("strikes must be positive and strictly increasing".into()));
        }
        if vols.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Validation("vols must be finite and > 0".into()));
        }
        Ok(Self {
            strikes,
            vols,
            s0,
            params,
            gaps: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.strikes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strikes.is_empty()
    }

    pub fn log_moneyness(&self) -> Vec<f64> {
        self.strikes.iter().map(|k| (k / self.s0).ln()).collect()
    }

    /// Largest `|σ(K) − σ(S0²/K)|` over pairs of mirrored grid points.
    pub fn max_mirror_deviation(&self) -> f64 {
        let n = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let mirrored = self.strikes[i] * self.strikes[j] / (self.s0 * self.s0);
            if (mirrored - 1.0).abs() < 1e-12 {
                worst = worst.max((self.vols[i] - self.vols[j]).abs());
            }
        }
        worst
    }
}

/// Smile of a pricer's model over explicit strikes (sorted ascending).
pub fn smile_for_strikes(pricer: &Pricer, strikes: &[f64]) -> Result<SmileCurve> {
    let s0 = pricer.s0();
    let solved: Vec<Option<f64>> = strikes
        .par_iter()
        .map(|&k| {
            let otm = pricer.quote(k)?.otm(s0);
            if otm < MIN_PRICE {
                return Ok(None);
            }
            Ok(Some(implied_vol_otm(otm, k, s0)?.value()))
        })
        .collect::<Result<_>>()?;
    let mut ks = Vec::with_capacity(strikes.len());
    let mut vols = Vec::with_capacity(strikes.len());
    let mut gaps = Vec::new();
    for (&k, v) in strikes.iter().zip(solved) {
        match v {
            Some(v) => {
                ks.push(k);
                vols.push(v);
            }
            None => gaps.push(k),
        }
    }
    let mut curve = SmileCurve::new(ks, vols, s0, *pricer.model().params())?;
    curve.gaps = gaps;
    Ok(curve)
}

pub fn smile(params: &MixtureParams, grid: &StrikeGrid) -> Result<SmileCurve> {
    let pricer = Pricer::from_params(*params)?;
    smile_for_strikes(&pricer, &grid.strikes())
}

/// Implied total volatility of the model at strike `K`.
pub fn vol_at(pricer: &Pricer, strike: f64) -> Result<TotalVol> {
    implied_vol_otm(pricer.quote(strike)?.otm(pricer.s0()), strike, pricer.s0())
}

pub fn atm_vol(pricer: &Pricer) -> Result<TotalVol> {
    vol_at(pricer, pricer.s0())
}

/// `σ′(S0)` from the strikes `S0 e^{±h}`.
pub fn atm_slope(pricer: &Pricer, h: f64) -> Result<f64> {
    let s0 = pricer.s0();
    let up = s0 * h.exp();
    let down = s0 * (-h).exp();
    Ok((vol_at(pricer, up)?.value() - vol_at(pricer, down)?.value()) / (up - down))
}

/// At-the-money curvature `σ″(S0)` by two routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtmCurvature {
    pub atm_vol: f64,
    /// Central second difference in strike with step [`CURVATURE_STEP`]`·S0`.
    pub finite_difference: f64,
    /// `(C″(S0) − ∂_KK C_BS)/∂_w C_BS`, exact once `σ′(S0) = 0`.
    pub formula: f64,
    pub density_at_zero: f64,
    pub bs_gamma: f64,
    pub vega: f64,
}

impl AtmCurvature {
    pub fn relative_gap(&self) -> f64 {
        ((self.finite_difference - self.formula) / self.formula).abs()
    }
}

pub fn atm_curvature(params: &MixtureParams) -> Result<AtmCurvature> {
    let pricer = Pricer::from_params(*params)?;
    atm_curvature_with(&pricer)
}

pub fn atm_curvature_with(pricer: &Pricer) -> Result<AtmCurvature> {
    atm_curvature_step(pricer, CURVATURE_STEP)
}

pub fn atm_curvature_step(pricer: &Pricer, step: f64) -> Result<AtmCurvature> {
    let s0 = pricer.s0();
    let h = step * s0;
    let w0 = atm_vol(pricer)?;
    let up = vol_at(pricer, s0 + h)?.value();
    let down = vol_at(pricer, s0 - h)?.value();
    let finite_difference = (up - 2.0 * w0.value() + down) / (h * h);
    let density_at_zero = pricer.model().density_or_zero(0.0);
    let bs_gamma = pricing::bs_strike_gamma(s0, w0, s0)?;
    let vega = pricing::vega(s0, w0, s0)?;
    Ok(AtmCurvature {
        atm_vol: w0.value(),
        finite_difference,
        formula: (density_at_zero / s0 - bs_gamma) / vega,
        density_at_zero,
        bs_gamma,
        vega,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pricing::bs_call;
    use proptest::prelude::*;

    const VS: [f64; 4] = [0.0, 0.01, 0.015, 0.02];

    fn w(x: f64) -> TotalVol {
        TotalVol::new(x).unwrap()
    }

    #[test]
    fn inverts_atm_example() {
        let v = implied_vol(0.079_655_7, 1.0, 1.0).unwrap().value();
        assert!((v - 0.2).abs() < 1e-6);
        let c = bs_call(1.0, w(0.2), 1.0).unwrap();
        assert!((implied_vol(c, 1.0, 1.0).unwrap().value() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn bound_violations() {
        match implied_vol(0.05, 0.9, 1.0) {
            Err(Error::BoundViolation { bound, .. }) => assert!(bound.starts_with("lower")),
            other => panic!("{other:?}"),
        }
        match implied_vol(1.0, 0.9, 1.0) {
            Err(Error::BoundViolation { bound, .. }) => assert!(bound.starts_with("upper")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(implied_vol(0.0, 1.0, 1.0), Err(Error::BoundViolation { .. })));
    }

    #[test]
    fn bracket_failure() {
        // vol above the bracket
        let c = bs_call(1.0, w(12.0), 1.0).unwrap();
        assert!(c < 1.0);
        assert!(matches!(implied_vol(c, 1.0, 1.0), Err(Error::Bracket { .. })));
    }

    #[test]
    fn brent_finds_roots() {
        let r = brent(|x| x * x - 2.0, 0.0, 2.0, 1e-15, 100).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
        assert!(matches!(brent(|x| x * x + 1.0, 0.0, 2.0, 1e-15, 100), Err(Error::Bracket { .. })));
    }

    #[test]
    fn monotone_in_price() {
        let mut prev = 0.0;
        for i in 1..50 {
            let c = 0.1 + 0.002 * i as f64;
            let v = implied_vol(c, 1.05, 1.0).unwrap().value();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn grid_is_mirrored() {
        let g = StrikeGrid::default_for(1.0);
        assert_eq!(g.len(), 201);
        assert_eq!(g.log_moneyness[100], 0.0);
        for i in 0..201 {
            assert_eq!(g.log_moneyness[i], -g.log_moneyness[200 - i]);
        }
        assert!((g.log_moneyness[0] + 0.15).abs() < 1e-16);
        assert!(StrikeGrid::symmetric(1.0, 0.1, 2).is_err());
    }

    #[test]
    fn smile_symmetry_and_ordering() {
        let grid = StrikeGrid::default_for(1.0);
        let mut atm_prev = 0.0;
        for v in VS {
            let p = MixtureParams::figure(v);
            let curve = smile(&p, &grid).unwrap();
            assert_eq!(curve.len(), 201);
            assert!(curve.gaps.is_empty());
            assert!(curve.max_mirror_deviation() < 1e-8, "v={v}");
            let atm = curve.vols[100];
            assert!(atm > atm_prev, "v={v}");
            atm_prev = atm;
        }
    }

    #[test]
    fn smile_is_deterministic() {
        let grid = StrikeGrid::symmetric(1.0, 0.15, 41).unwrap();
        let p = MixtureParams::figure(0.01);
        assert_eq!(smile(&p, &grid).unwrap(), smile(&p, &grid).unwrap());
    }

    #[test]
    fn atm_slope_vanishes() {
        for v in VS {
            let pr = Pricer::from_params(MixtureParams::figure(v)).unwrap();
            assert!(atm_slope(&pr, 1e-3).unwrap().abs() < 1e-6, "v={v}");
        }
    }

    #[test]
    fn curvature_two_routes_agree() {
        for v in VS {
            let c = atm_curvature(&MixtureParams::figure(v)).unwrap();
            assert!(c.vega > 0.0);
            assert!(c.relative_gap() < 1e-3, "v={v}: {c:?}");
            assert_eq!(c.finite_difference.signum(), c.formula.signum());
        }
        let c0 = atm_curvature(&MixtureParams::figure(0.0)).unwrap();
        assert_eq!(c0.density_at_zero, 0.0);
        assert!(c0.formula < 0.0);
    }

    #[test]
    fn wings_grow() {
        for v in VS {
            let pr = Pricer::from_params(MixtureParams::figure(v)).unwrap();
            let vols: Vec<f64> = [0.5f64, 1.0, 1.5]
                .iter()
                .map(|k| vol_at(&pr, k.exp()).unwrap().value())
                .collect();
            assert!(vols[0] < vols[1] && vols[1] < vols[2], "v={v}: {vols:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn inversion_round_trip(vol in 0.02f64..1.5, z in -3.0f64..3.0) {
            let k = (z * vol).exp();
            let c = bs_call(k, w(vol), 1.0).unwrap();
            let back = implied_vol(c, k, 1.0).unwrap().value();
            prop_assert!((back - vol).abs() < 1e-9);
        }
    }
}
