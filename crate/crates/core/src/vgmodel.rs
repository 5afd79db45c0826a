//! The two-component variance-gamma mixture.
//!
//! Two drifted Brownian motions `v B_t − v²t/2 ± μt` are time-changed by
//! Gamma subordinators with shape `c` and rates `λ ± μ/2`. At horizon `T`
//! the log-price is the Bernoulli mixture `X_T = M X⁻_T + (1 − M) X⁺_T` with
//! `P(M = 1) = a/(a+b)`, `a = (1 + μ/2λ)^{cT}`, `b = (1 − μ/2λ)^{cT}`.
//! These weights make the mixture geometrically symmetric,
//! `e^{x/2} f(x) = e^{−x/2} f(−x)`.
//!
//! For `v = 0` the Brownian part vanishes and the law is the asymmetric
//! double gamma: a Gamma(cT, λ₊) on the positive axis and a reflected
//! Gamma(cT, λ₋) on the negative axis with `λ± = λ/μ ± 1/2`.

use std::f64::consts::{FRAC_2_PI, LN_2};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, Toward};
use crate::specialfn::{self, Accuracy};

/// Free parameters of the mixture model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    /// Brownian volatility of both components; `0` selects the double gamma.
    pub v: f64,
    /// Gamma-process shape per unit time.
    pub c: f64,
    pub lambda: f64,
    /// Drift divergence between the two components.
    pub mu: f64,
    /// Horizon in years.
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "S0")]
    pub s0: f64,
}

impl MixtureParams {
    pub fn new(v: f64, c: f64, lambda: f64, mu: f64, t: f64, s0: f64) -> Result<Self> {
        let p = Self {
            v,
            c,
            lambda,
            mu,
            t,
            s0,
        };
        p.validate()?;
        Ok(p)
    }

    /// The parameter set used for the published density and smile figures:
    /// `cT = 2, λ = 0.5, μ = 0.02`, unit horizon and spot.
    pub fn figure(v: f64) -> Self {
        Self {
            v,
            c: 2.0,
            lambda: 0.5,
            mu: 0.02,
            t: 1.0,
            s0: 1.0,
        }
    }

    pub fn with_v(self, v: f64) -> Self {
        Self { v, ..self }
    }

    pub fn ct(&self) -> f64 {
        self.c * self.t
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.v, self.c, self.lambda, self.mu, self.t, self.s0]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::Validation("all parameters must be finite".into()));
        }
        if self.v < 0.0 {
            return Err(Error::Validation(format!("v = {} must be >= 0", self.v)));
        }
        for (name, val) in [
            ("c", self.c),
            ("lambda", self.lambda),
            ("mu", self.mu),
            ("T", self.t),
            ("S0", self.s0),
        ] {
            if val <= 0.0 {
                return Err(Error::Validation(format!("{name} = {val} must be > 0")));
            }
        }
        if self.mu >= 2.0 * self.lambda {
            return Err(Error::Validation(format!(
                "the constraint mu < 2*lambda is violated (mu = {}, 2*lambda = {})",
                self.mu,
                2.0 * self.lambda
            )));
        }
        Ok(())
    }
}

/// Which of the two variance-gamma components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// `(α, β±, γ±)` of the Bessel form of the component densities; only
/// defined for `v > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselForm {
    pub alpha: f64,
    pub beta_plus: f64,
    pub beta_minus: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    ln_gamma_plus: f64,
    ln_gamma_minus: f64,
}

impl BesselForm {
    pub fn beta(&self, sign: Sign) -> f64 {
        match sign {
            Sign::Plus => self.beta_plus,
            Sign::Minus => self.beta_minus,
        }
    }

    fn ln_gamma(&self, sign: Sign) -> f64 {
        match sign {
            Sign::Plus => self.ln_gamma_plus,
            Sign::Minus => self.ln_gamma_minus,
        }
    }
}

/// Quantities derived from [`MixtureParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentParams {
    /// `None` when `v = 0`.
    pub bessel: Option<BesselForm>,
    #[serde(rename = "cT")]
    pub ct: f64,
    /// Rates `λ/μ ± 1/2` of the double-gamma limit.
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub a: f64,
    pub b: f64,
    /// Weight of the minus component, `a/(a+b)`.
    pub p: f64,
}

impl ComponentParams {
    pub fn alpha(&self) -> Option<f64> {
        self.bessel.map(|b| b.alpha)
    }

    /// Mixture weight of a component: `a/(a+b)` for minus, `b/(a+b)` for plus.
    pub fn weight(&self, sign: Sign) -> f64 {
        match sign {
            Sign::Minus => self.p,
            Sign::Plus => self.b / (self.a + self.b),
        }
    }

    pub fn gamma_rate(&self, sign: Sign) -> f64 {
        match sign {
            Sign::Plus => self.lambda_plus,
            Sign::Minus => self.lambda_minus,
        }
    }
}

pub fn derive(params: &MixtureParams) -> Result<ComponentParams> {
    params.validate()?;
    let ct = params.ct();
    let ratio = params.mu / (2.0 * params.lambda);
    let a = (1.0 + ratio).powf(ct);
    let b = (1.0 - ratio).powf(ct);
    let lambda_over_mu = params.lambda / params.mu;
    let bessel = if params.v > 0.0 {
        let v2 = params.v * params.v;
        let alpha = (params.mu * params.mu / (v2 * v2) + 2.0 * params.lambda / v2 + 0.25).sqrt();
        let drift = params.mu / v2;
        let lg = specialfn::log_gamma(ct)?;
        let ln_gamma = |rate: f64| 0.5 * FRAC_2_PI.ln() - lg + ct * (rate / v2).ln();
        let ln_gamma_plus = ln_gamma(params.lambda + 0.5 * params.mu);
        let ln_gamma_minus = ln_gamma(params.lambda - 0.5 * params.mu);
        Some(BesselForm {
            alpha,
            beta_plus: drift - 0.5,
            beta_minus: -drift - 0.5,
            gamma_plus: ln_gamma_plus.exp(),
            gamma_minus: ln_gamma_minus.exp(),
            ln_gamma_plus,
            ln_gamma_minus,
        })
    } else {
        None
    };
    Ok(ComponentParams {
        bessel,
        ct,
        lambda_plus: lambda_over_mu + 0.5,
        lambda_minus: lambda_over_mu - 0.5,
        a,
        b,
        p: a / (a + b),
    })
}

/// Cumulant exponent of the `Γ(c, λ)` subordinator, `−c log(1 − u/λ)`.
pub fn ell(u: f64, c: f64, lambda: f64) -> Result<f64> {
    if u >= lambda || u.is_nan() {
        return Err(Error::domain(
            "ell",
            format!("u = {u} must lie below the singularity at lambda = {lambda}"),
        ));
    }
    Ok(-c * (-u / lambda).ln_1p())
}

/// Exponent of the tilted subordinators, `ℓ±(u) = ℓ(u ∓ μ/2) − ℓ(∓μ/2)`.
pub fn ell_pm(u: f64, sign: Sign, params: &MixtureParams) -> Result<f64> {
    let shift = -sign.factor() * 0.5 * params.mu;
    let boundary = params.lambda + sign.factor() * 0.5 * params.mu;
    if u >= boundary || u.is_nan() {
        return Err(Error::domain(
            "ell_pm",
            format!("u = {u} must lie below the singularity at {boundary}"),
        ));
    }
    Ok(ell(u + shift, params.c, params.lambda)? - ell(shift, params.c, params.lambda)?)
}

/// Characteristic exponent `ψ±(u) = ℓ±(v²(u² − u)/2 ± μu)` of a component.
pub fn psi(u: f64, sign: Sign, params: &MixtureParams) -> Result<f64> {
    let inner = 0.5 * params.v * params.v * (u * u - u) + sign.factor() * params.mu * u;
    ell_pm(inner, sign, params)
}

/// Moment generating function `E[e^{u X_T}]` of the mixture.
pub fn mgf(u: f64, params: &MixtureParams) -> Result<f64> {
    let comp = derive(params)?;
    let q = 0.5 * params.v * params.v * (u * u - u);
    let half_mu = 0.5 * params.mu;
    let args = [q - params.mu * u + half_mu, q + params.mu * u - half_mu];
    let mut sum = 0.0;
    for arg in args {
        let l = ell(arg, params.c, params.lambda).map_err(|_| {
            Error::domain(
                "mgf",
                format!("u = {u} is outside the interval where the MGF is finite"),
            )
        })?;
        sum += (params.t * l).exp();
    }
    Ok(comp.a * comp.b / (comp.a + comp.b) * sum)
}

/// Standard `(σ, θ, κ)` parameterization of one component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StdVgParams {
    pub sigma_vg: f64,
    pub theta: f64,
    pub kappa: f64,
    pub sign: Sign,
}

impl StdVgParams {
    /// `ψ_VG(u) = −(1/κ) log(1 − u²σ²κ/2 − θκu)`.
    pub fn char_exponent(&self, u: f64) -> Result<f64> {
        let arg = 1.0 - 0.5 * u * u * self.sigma_vg * self.sigma_vg * self.kappa - self.theta * self.kappa * u;
        if arg <= 0.0 {
            return Err(Error::domain("char_exponent", format!("u = {u} outside the strip of finiteness")));
        }
        Ok(-arg.ln() / self.kappa)
    }
}

pub fn to_std_vg(params: &MixtureParams, sign: Sign) -> Result<StdVgParams> {
    params.validate()?;
    if params.v == 0.0 {
        return Err(Error::NotRepresentable(
            "v = 0 has no (sigma, theta, kappa) representation".into(),
        ));
    }
    let rate = params.lambda + sign.factor() * 0.5 * params.mu;
    let v2 = params.v * params.v;
    Ok(StdVgParams {
        sigma_vg: (params.c * v2 / rate).sqrt(),
        theta: params.c * (-0.5 * v2 + sign.factor() * params.mu) / rate,
        kappa: 1.0 / params.c,
        sign,
    })
}

/// Sampled density values on an increasing grid of log-prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
}

impl DensityGrid {
    pub fn new(xs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if xs.len() != values.len() {
            return Err(Error::Validation("grid and values differ in length".into()));
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Validation("grid must be strictly increasing".into()));
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Validation("density values must be >= 0".into()));
        }
        Ok(Self { xs, values })
    }
}

/// A validated model with its derived quantities and numerical accuracy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureModel {
    params: MixtureParams,
    comp: ComponentParams,
    acc: Accuracy,
}

impl MixtureModel {
    pub fn new(params: MixtureParams) -> Result<Self> {
        Self::with_accuracy(params, Accuracy::default())
    }

    pub fn with_accuracy(params: MixtureParams, acc: Accuracy) -> Result<Self> {
        acc.validate()?;
        let comp = derive(&params)?;
        Ok(Self { params, comp, acc })
    }

    pub fn params(&self) -> &MixtureParams {
        &self.params
    }

    pub fn components(&self) -> &ComponentParams {
        &self.comp
    }

    pub fn accuracy(&self) -> &Accuracy {
        &self.acc
    }

    /// Bessel order `cT − 1/2` of the component densities.
    pub fn bessel_order(&self) -> f64 {
        self.comp.ct - 0.5
    }

    /// Right-tail exponential decay rate of the density (the explosion
    /// order of the MGF).
    pub fn right_decay(&self) -> f64 {
        match self.comp.bessel {
            Some(bf) => bf.alpha - bf.beta_plus,
            None => self.comp.lambda_plus,
        }
    }

    /// Left-tail decay rate; `right_decay − 1` by geometric symmetry.
    pub fn left_decay(&self) -> f64 {
        match self.comp.bessel {
            Some(bf) => bf.alpha + bf.beta_minus,
            None => self.comp.lambda_minus,
        }
    }

    /// Density `f±` of one component at horizon `T`. For `v = 0` this is the
    /// (reflected) Gamma density of the double-gamma limit.
    pub fn component_density(&self, x: f64, sign: Sign) -> Result<f64> {
        let Some(bf) = self.comp.bessel else {
            return self.gamma_component(x, sign);
        };
        let nu = self.bessel_order();
        if x == 0.0 {
            if nu <= 0.0 {
                return Err(Error::Singularity { x });
            }
            // |x/α|^ν K_ν(α|x|) → Γ(ν) 2^{ν−1} α^{−2ν}
            let ln_limit = specialfn::log_gamma(nu)? + (nu - 1.0) * LN_2 - 2.0 * nu * bf.alpha.ln();
            return Ok((bf.ln_gamma(sign) + ln_limit).exp());
        }
        let ax = x.abs();
        let z = bf.alpha * ax;
        // K_{−ν} = K_ν
        let k_scaled = specialfn::bessel_k_scaled_with(nu.abs(), z, &self.acc)?;
        if k_scaled == 0.0 {
            return Ok(0.0);
        }
        let ln = bf.ln_gamma(sign) + nu * (ax / bf.alpha).ln() + bf.beta(sign) * x - z + k_scaled.ln();
        Ok(ln.exp())
    }

    fn gamma_component(&self, x: f64, sign: Sign) -> Result<f64> {
        let ct = self.comp.ct;
        let rate = self.comp.gamma_rate(sign);
        let y = match sign {
            Sign::Plus => x,
            Sign::Minus => -x,
        };
        if y == 0.0 && ct < 1.0 {
            return Err(Error::Singularity { x });
        }
        specialfn::gamma_pdf(y, ct, rate)
    }

    /// Mixture density `f = a/(a+b) f₋ + b/(a+b) f₊`; the double gamma when
    /// `v = 0`.
    pub fn density(&self, x: f64) -> Result<f64> {
        if self.comp.bessel.is_none() {
            return self.double_gamma_density(x);
        }
        Ok(self.comp.weight(Sign::Minus) * self.component_density(x, Sign::Minus)?
            + self.comp.weight(Sign::Plus) * self.component_density(x, Sign::Plus)?)
    }

    /// The `v → 0` limit density for this model's `(c, λ, μ, T)`; `v` is
    /// ignored.
    pub fn double_gamma_density(&self, x: f64) -> Result<f64> {
        let ct = self.comp.ct;
        let wm = self.comp.weight(Sign::Minus);
        let wp = self.comp.weight(Sign::Plus);
        if x == 0.0 {
            if ct > 1.0 {
                return Ok(0.0);
            }
            if ct < 1.0 {
                return Err(Error::Singularity { x });
            }
            return Err(Error::Discontinuity {
                x,
                left: wm * self.comp.lambda_minus,
                right: wp * self.comp.lambda_plus,
            });
        }
        if x < 0.0 {
            Ok(wm * specialfn::gamma_pdf(-x, ct, self.comp.lambda_minus)?)
        } else {
            Ok(wp * specialfn::gamma_pdf(x, ct, self.comp.lambda_plus)?)
        }
    }

    pub fn density_grid(&self, xs: Vec<f64>) -> Result<DensityGrid> {
        let values = xs.iter().map(|&x| self.density(x)).collect::<Result<Vec<_>>>()?;
        DensityGrid::new(xs, values)
    }

    /// `∫_lo^hi w(x) f(x) dx` for an exponentially integrable weight;
    /// `lo`/`hi` may be infinite. The range is split at the kink `x = 0`.
    pub fn integrate_density<W: Fn(f64) -> f64>(&self, weight: W, lo: f64, hi: f64) -> Result<f64> {
        self.integrate_fn(|x| weight(x) * self.density_or_zero(x), lo, hi)
    }

    /// `∫_lo^hi g(x) dx` for an integrand built from this model's densities.
    pub fn integrate_fn<G: Fn(f64) -> f64>(&self, g: G, lo: f64, hi: f64) -> Result<f64> {
        self.integrate_dyn(&g, lo, hi)
    }

    fn integrate_dyn(&self, g: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
        if lo.is_nan() || hi.is_nan() {
            return Err(Error::domain("integrate_density", "NaN bound"));
        }
        if lo > hi {
            return Ok(-self.integrate_dyn(g, hi, lo)?);
        }
        if lo == hi {
            return Ok(0.0);
        }
        if lo < 0.0 && hi > 0.0 {
            return Ok(self.integrate_dyn(g, lo, 0.0)? + self.integrate_dyn(g, 0.0, hi)?);
        }
        let right_scale = 1.0 / self.right_decay();
        let left_scale = 1.0 / self.left_decay();
        let r = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => quad::integrate(g, lo, hi, &self.acc)?,
            (true, false) => quad::integrate_to_infinity(g, lo, Toward::PosInfinity, right_scale, &self.acc)?,
            (false, true) => quad::integrate_to_infinity(g, hi, Toward::NegInfinity, left_scale, &self.acc)?,
            (false, false) => unreachable!("split at zero above"),
        };
        Ok(r.value)
    }

    /// Density with singular points mapped to zero; used inside quadrature,
    /// which never samples the endpoint itself except through `x = 0`
    /// panels that carry zero weight at the boundary.
    pub(crate) fn density_or_zero(&self, x: f64) -> f64 {
        match self.density(x) {
            Ok(v) => v,
            Err(Error::Discontinuity { left, right, .. }) => 0.5 * (left + right),
            Err(_) => 0.0,
        }
    }

    /// Draws `n` log-prices, each tagged with the component it came from.
    pub fn sample_labeled(&self, n: usize, seed: u64) -> Result<Vec<(f64, Sign)>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ct = self.comp.ct;
        let p = &self.params;
        let scale_minus = 1.0 / (p.lambda - 0.5 * p.mu);
        let scale_plus = 1.0 / (p.lambda + 0.5 * p.mu);
        let gamma_minus = Gamma::new(ct, scale_minus).map_err(|e| Error::Validation(e.to_string()))?;
        let gamma_plus = Gamma::new(ct, scale_plus).map_err(|e| Error::Validation(e.to_string()))?;
        let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
        let half_v2 = 0.5 * p.v * p.v;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let sign = if rng.random_bool(self.comp.p) {
                Sign::Minus
            } else {
                Sign::Plus
            };
            let time = match sign {
                Sign::Minus => gamma_minus.sample(&mut rng),
                Sign::Plus => gamma_plus.sample(&mut rng),
            };
            let drift = sign.factor() * p.mu - half_v2;
            let mut x = drift * time;
            if p.v > 0.0 {
                x += p.v * time.sqrt() * std_normal.sample(&mut rng);
            }
            out.push((x, sign));
        }
        Ok(out)
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        Ok(self.sample_labeled(n, seed)?.into_iter().map(|(x, _)| x).collect())
    }
}
