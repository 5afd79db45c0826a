//! Zero-rate option prices: the Black–Scholes reference, closed-form
//! mixture prices through the distribution function `Q` of `X_T`, and a
//! direct quadrature of the payoff against the density.
//!
//! Geometric symmetry turns the share-measure probability into `Q(−k)`, so
//! with `k = log(K/S0)`
//!
//! ```text
//! C(K) = S0 Q(−k) − K Q̄(k),    P(K) = K Q(k) − S0 Q̄(−k),
//! ```
//!
//! and `C − P = S0 − K` holds by construction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specialfn::{self, norm_cdf, norm_pdf};
use crate::vgmodel::{MixtureModel, MixtureParams, Sign};

/// Total volatility `σ√T` over the option's life.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct TotalVol(f64);

impl TotalVol {
    pub fn new(w: f64) -> Result<Self> {
        if w > 0.0 && w.is_finite() {
            Ok(Self(w))
        } else {
            Err(Error::Validation(format!("total volatility {w} must be finite and > 0")))
        }
    }

    /// From an annualized volatility and a horizon in years.
    pub fn from_annual(sigma: f64, t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::Validation(format!("horizon {t} must be > 0")));
        }
        Self::new(sigma * t.sqrt())
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn annualized(self, t: f64) -> f64 {
        self.0 / t.sqrt()
    }
}

impl TryFrom<f64> for TotalVol {
    type Error = Error;
    fn try_from(w: f64) -> Result<Self> {
        Self::new(w)
    }
}

impl From<TotalVol> for f64 {
    fn from(w: TotalVol) -> f64 {
        w.0
    }
}

/// Call and put at one strike.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quote {
    pub strike: f64,
    pub call: f64,
    pub put: f64,
}

impl Quote {
    /// Price of the out-of-the-money option; the call at `K = S0`.
    pub fn otm(&self, s0: f64) -> f64 {
        if self.strike < s0 {
            self.put
        } else {
            self.call
        }
    }
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Validation(format!("{name} = {x} must be finite and > 0")))
    }
}

fn d1(strike: f64, w: f64, s0: f64) -> f64 {
    ((s0 / strike).ln() + 0.5 * w * w) / w
}

/// Out-of-the-money Black–Scholes value: put for `K < S0`, call otherwise.
/// Evaluated without cancellation.
pub(crate) fn bs_otm(strike: f64, w: f64, s0: f64) -> f64 {
    let d1 = d1(strike, w, s0);
    let d2 = d1 - w;
    if strike < s0 {
        strike * norm_cdf(-d2) - s0 * norm_cdf(-d1)
    } else {
        s0 * norm_cdf(d1) - strike * norm_cdf(d2)
    }
    .max(0.0)
}

pub fn bs_call(strike: f64, w: TotalVol, s0: f64) -> Result<f64> {
    check_positive("strike", strike)?;
    check_positive("S0", s0)?;
    let otm = bs_otm(strike, w.0, s0);
    Ok(if strike < s0 { otm + (s0 - strike) } else { otm })
}

pub fn bs_put(strike: f64, w: TotalVol, s0: f64) -> Result<f64> {
    check_positive("strike", strike)?;
    check_positive("S0", s0)?;
    let otm = bs_otm(strike, w.0, s0);
    Ok(if strike < s0 { otm } else { otm - (s0 - strike) })
}

/// `∂C_BS/∂w = S0 φ(d1)`; always positive.
pub fn vega(strike: f64, w: TotalVol, s0: f64) -> Result<f64> {
    check_positive("strike", strike)?;
    check_positive("S0", s0)?;
    Ok(s0 * norm_pdf(d1(strike, w.0, s0)))
}

/// Strike gamma `∂²C_BS/∂K² = φ(d2)/(K w)`.
pub fn bs_strike_gamma(strike: f64, w: TotalVol, s0: f64) -> Result<f64> {
    check_positive("strike", strike)?;
    check_positive("S0", s0)?;
    let d2 = d1(strike, w.0, s0) - w.0;
    Ok(norm_pdf(d2) / (strike * w.0))
}

/// At-the-money strike gamma for unit spot, `e^{−w²/8}/(√(2π) w)`. It
/// equals the Black–Scholes log-price density `φ_w` at zero.
pub fn bs_gamma_atm(w: TotalVol) -> f64 {
    norm_pdf(0.5 * w.0) / w.0
}

/// Black–Scholes log-price density: normal with mean `−w²/2`, variance `w²`.
pub fn bs_log_density(x: f64, w: TotalVol) -> f64 {
    norm_pdf((x + 0.5 * w.0 * w.0) / w.0) / w.0
}

/// CDF `F±(x)` of one component, by quadrature of its density. For `v = 0`
/// the (reflected) Gamma CDF.
pub fn vg_cdf(x: f64, sign: Sign, model: &MixtureModel) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::domain("vg_cdf", "x is NaN"));
    }
    if x == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(1.0);
    }
    let comp = model.components();
    if comp.bessel.is_none() {
        let acc = model.accuracy();
        let rate = comp.gamma_rate(sign);
        return match sign {
            Sign::Plus => specialfn::gamma_cdf_with(x, comp.ct, rate, acc),
            Sign::Minus => specialfn::gamma_sf_with(-x, comp.ct, rate, acc),
        };
    }
    let f = |y: f64| model.component_density(y, sign).unwrap_or(0.0);
    let value = if x <= 0.0 {
        model.integrate_fn(f, f64::NEG_INFINITY, x)?
    } else {
        1.0 - model.integrate_fn(f, x, f64::INFINITY)?
    };
    Ok(value.clamp(0.0, 1.0))
}

// Inside this band Q is built as Q(0) + ∫₀ˣ f, which keeps its error smooth
// in x; outside it the tail integral keeps relative accuracy.
const CENTRAL_BAND: f64 = 1.0;

/// Closed-form pricer for one model; caches `Q(0)`.
#[derive(Debug, Clone, Copy)]
pub struct Pricer {
    model: MixtureModel,
    q0: f64,
}

impl Pricer {
    pub fn new(model: MixtureModel) -> Result<Self> {
        let q0 = if model.components().bessel.is_none() {
            model.components().p
        } else {
            model.integrate_density(|_| 1.0, f64::NEG_INFINITY, 0.0)?
        };
        Ok(Self { model, q0 })
    }

    pub fn from_params(params: MixtureParams) -> Result<Self> {
        Self::new(MixtureModel::new(params)?)
    }

    pub fn model(&self) -> &MixtureModel {
        &self.model
    }

    pub fn s0(&self) -> f64 {
        self.model.params().s0
    }

    /// Distribution function `Q(x) = P(X_T ≤ x)`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::domain("q_function", "x is NaN"));
        }
        if x == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        if x == f64::INFINITY {
            return Ok(1.0);
        }
        let comp = self.model.components();
        if comp.bessel.is_none() {
            let acc = self.model.accuracy();
            let wm = comp.weight(Sign::Minus);
            let wp = comp.weight(Sign::Plus);
            return Ok(if x < 0.0 {
                wm * specialfn::gamma_sf_with(-x, comp.ct, comp.lambda_minus, acc)?
            } else {
                wm + wp * specialfn::gamma_cdf_with(x, comp.ct, comp.lambda_plus, acc)?
            });
        }
        let q = if x < -CENTRAL_BAND {
            self.model.integrate_density(|_| 1.0, f64::NEG_INFINITY, x)?
        } else if x > CENTRAL_BAND {
            1.0 - self.model.integrate_density(|_| 1.0, x, f64::INFINITY)?
        } else {
            self.q0 + self.model.integrate_density(|_| 1.0, 0.0, x)?
        };
        Ok(q.clamp(0.0, 1.0))
    }

    pub fn quote(&self, strike: f64) -> Result<Quote> {
        check_positive("strike", strike)?;
        let s0 = self.s0();
        let k = (strike / s0).ln();
        let q_neg = self.cdf(-k)?;
        let q_pos = self.cdf(k)?;
        Ok(Quote {
            strike,
            call: (s0 * q_neg - strike * (1.0 - q_pos)).max(0.0),
            put: (strike * q_pos - s0 * (1.0 - q_neg)).max(0.0),
        })
    }

    /// Quotes for many strikes, evaluated in parallel; output follows input
    /// order.
    pub fn quotes(&self, strikes: &[f64]) -> Result<Vec<Quote>> {
        strikes.par_iter().map(|&k| self.quote(k)).collect()
    }

    /// `C(K) = S0 ∫_k^∞ (e^x − e^k) f(x) dx`, independent of `Q`.
    pub fn call_by_quadrature(&self, strike: f64) -> Result<f64> {
        check_positive("strike", strike)?;
        let s0 = self.s0();
        let k = (strike / s0).ln();
        let ek = strike / s0;
        let v = self
            .model
            .integrate_density(|x| (x.exp() - ek).max(0.0), k, f64::INFINITY)?;
        Ok(s0 * v.max(0.0))
    }

    /// Risk-neutral density of `S_T`, `g(s) = f(log(s/S0))/s`.
    pub fn price_density(&self, s: f64) -> Result<f64> {
        check_positive("s", s)?;
        Ok(self.model.density((s / self.s0()).ln())? / s)
    }
}

/// Mixture distribution function `Q(x)` of `X_T`.
pub fn q_function(x: f64, params: &MixtureParams) -> Result<f64> {
    Pricer::from_params(*params)?.cdf(x)
}

pub fn price(strike: f64, params: &MixtureParams) -> Result<Quote> {
    Pricer::from_params(*params)?.quote(strike)
}

pub fn price_by_quadrature(strike: f64, params: &MixtureParams) -> Result<f64> {
    Pricer::from_params(*params)?.call_by_quadrature(strike)
}
