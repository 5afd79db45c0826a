//! Acceptance criteria. Each test prints one PASS/FAIL line per check and
//! fails if any check fails.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vgsmile::implied::{self, StrikeGrid};
use vgsmile::pricing::{Pricer, TotalVol};
use vgsmile::shape::{self, ShapeClass};
use vgsmile::vgmodel::{mgf, MixtureModel, MixtureParams};

const FIGURE_VS: [f64; 4] = [0.0, 0.01, 0.015, 0.02];

struct Checks {
    criterion: &'static str,
    failed: Vec<String>,
}

impl Checks {
    fn new(criterion: &'static str) -> Self {
        Self {
            criterion,
            failed: Vec::new(),
        }
    }

    fn check(&mut self, pass: bool, what: String) {
        println!("[{}] {}: {what}", if pass { "PASS" } else { "FAIL" }, self.criterion);
        if !pass {
            self.failed.push(what);
        }
    }

    fn finish(self) {
        assert!(self.failed.is_empty(), "{} failed: {:#?}", self.criterion, self.failed);
    }
}

fn model(v: f64) -> MixtureModel {
    MixtureModel::new(MixtureParams::figure(v)).unwrap()
}

/// Adaptive Simpson, the test-side quadrature oracle.
fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[test]
fn c1_figure_smiles_are_w_and_ordered() {
    let mut c = Checks::new("C1");
    let start = Instant::now();
    let grid = StrikeGrid::default_for(1.0);
    let mut atm = Vec::new();
    for v in FIGURE_VS {
        let p = MixtureParams::figure(v);
        let report = shape::classify_params(&p, &grid).unwrap();
        c.check(
            report.classification == ShapeClass::W,
            format!(
                "v={v} classify: got {} (pattern {}), want W",
                report.classification, report.sign_sequence
            ),
        );
        atm.push(implied::atm_vol(&Pricer::from_params(p).unwrap()).unwrap().value());
    }
    for (i, w) in atm.windows(2).enumerate() {
        c.check(
            w[1] > w[0],
            format!("ATM vol v={} -> v={}: {:.10} < {:.10}", FIGURE_VS[i], FIGURE_VS[i + 1], w[0], w[1]),
        );
    }
    let secs = start.elapsed().as_secs_f64();
    c.check(secs < 30.0, format!("runtime {secs:.2}s < 30s"));
    c.finish();
}

#[test]
fn c2_short_horizon_shape_is_not_w() {
    let mut c = Checks::new("C2");
    let start = Instant::now();
    let p = MixtureParams { c: 0.5, ..MixtureParams::figure(0.0) };
    let report = shape::classify_params(&p, &StrikeGrid::default_for(1.0)).unwrap();
    c.check(
        report.classification == ShapeClass::NotW,
        format!("cT=0.5 classify: got {}, want NOT_W", report.classification),
    );
    let secs = start.elapsed().as_secs_f64();
    c.check(secs < 5.0, format!("runtime {secs:.2}s < 5s"));
    c.finish();
}

/// Golden-section maximizer on `[a, b]`.
fn argmax<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > 1e-12 {
        let x1 = b - g * (b - a);
        let x2 = a + g * (b - a);
        if f(x1) < f(x2) {
            a = x1;
        } else {
            b = x2;
        }
    }
    0.5 * (a + b)
}

#[test]
fn c3_double_gamma_structure() {
    let mut c = Checks::new("C3");
    let m = model(0.0);
    let f0 = m.double_gamma_density(0.0).unwrap();
    c.check(f0 == 0.0, format!("f0(0) = {f0}, want exactly 0"));
    let f = |x: f64| m.double_gamma_density(x).unwrap();
    // expected modes ±(cT−1)/λ∓ with λ± = λ/μ ± 1/2
    for (lo, hi, want) in [(1e-6, 0.3, 0.0392157), (-0.3, -1e-6, -0.0408163)] {
        let got = argmax(f, lo, hi);
        c.check((got - want).abs() < 1e-5, format!("mode {got:.8}, want {want} within 1e-5"));
    }
    c.finish();
}

#[test]
fn c4_crossing_counts() {
    let mut c = Checks::new("C4");
    let grid = StrikeGrid::default_for(1.0);
    let m0 = model(0.0);
    let curve0 = implied::smile(m0.params(), &grid).unwrap();
    let report = shape::classify(&curve0, m0.params()).unwrap();
    let sigma_star = TotalVol::new(report.sigma_star.unwrap()).unwrap();
    let min_vol = curve0.vols.iter().copied().fold(f64::INFINITY, f64::min);
    let cr = shape::density_crossings(&m0, sigma_star, &shape::crossing_grid(&m0, sigma_star, 8001)).unwrap();
    c.check(
        cr.n_pdf == 6,
        format!(
            "double gamma vs normal at sigma*={:.6} (smile min {min_vol:.6}): n_pdf={}, want 6",
            sigma_star.value(),
            cr.n_pdf
        ),
    );

    for v in FIGURE_VS {
        let m = model(v);
        let curve = implied::smile(m.params(), &grid).unwrap();
        let lo = curve.vols.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = curve.vols.iter().copied().fold(0.0, f64::max);
        let mut violations = 0;
        let mut detail = String::new();
        for j in 1..=10 {
            let level = lo + (hi - lo) * j as f64 / 11.0;
            let s = TotalVol::new(level).unwrap();
            let n_vol = shape::n_vol(&curve, level).map(|s| s.count).unwrap_or(0);
            let n_pdf = shape::density_crossings(&m, s, &shape::crossing_grid(&m, s, 8001)).unwrap().n_pdf;
            if n_vol + 2 > n_pdf {
                violations += 1;
            }
            detail.push_str(&format!(" {n_vol}/{n_pdf}"));
        }
        c.check(
            violations == 0,
            format!("v={v}: n_vol <= n_pdf - 2 at 10 levels, {violations} violations (n_vol/n_pdf:{detail})"),
        );
    }
    c.finish();
}

#[test]
fn c5_pricing_identities() {
    let mut c = Checks::new("C5");
    for v in FIGURE_VS {
        let pr = Pricer::from_params(MixtureParams::figure(v)).unwrap();
        let m = *pr.model();
        let mut worst_oracle: f64 = 0.0;
        let mut worst_parity: f64 = 0.0;
        for i in 0..21 {
            let k = 0.9 * (1.1f64 / 0.9).powf(i as f64 / 20.0);
            let q = pr.quote(k).unwrap();
            let ln_k = k.ln();
            let payoff = |x: f64| (x.exp() - k).max(0.0) * m.density(x).unwrap_or(0.0);
            // split at the kinks; mass beyond x = 3 is below e^{-50}
            let mut cuts = vec![ln_k, 0.0, 3.0];
            cuts.sort_by(f64::total_cmp);
            cuts.retain(|&x| x >= ln_k);
            let oracle: f64 = cuts.windows(2).map(|w| simpson(&payoff, w[0], w[1], 1e-13)).sum();
            worst_oracle = worst_oracle.max((q.call - oracle).abs());
            worst_parity = worst_parity.max((q.call - q.put - (1.0 - k)).abs());
        }
        for k in StrikeGrid::default_for(1.0).strikes() {
            let q = pr.quote(k).unwrap();
            worst_parity = worst_parity.max((q.call - q.put - (1.0 - k)).abs());
        }
        c.check(worst_oracle < 1e-7, format!("v={v}: closed form vs quadrature, max gap {worst_oracle:.2e} < 1e-7"));
        c.check(worst_parity < 1e-10, format!("v={v}: put-call parity, max gap {worst_parity:.2e} < 1e-10"));

        let h = 1e-4;
        for k in [0.95, 1.0, 1.05] {
            let call = |s: f64| pr.quote(s).unwrap().call;
            let fd = (call(k + h) - 2.0 * call(k) + call(k - h)) / (h * h);
            let g = pr.price_density(k).unwrap();
            if g == 0.0 {
                // kink |x| of the double gamma at the spot: the stencil returns O(h)
                c.check(fd.abs() < 200.0 * h, format!("v={v} K={k}: g(K)=0, |C''|={:.2e} < 200h", fd.abs()));
            } else {
                let rel = (fd - g).abs() / g;
                c.check(rel < 1e-4, format!("v={v} K={k}: C'' vs g(K) relative gap {rel:.2e} < 1e-4"));
            }
        }
    }
    c.finish();
}

#[test]
fn c6_symmetry_suite() {
    let mut c = Checks::new("C6");
    let grid = StrikeGrid::default_for(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for v in FIGURE_VS {
        let m = model(v);
        let mut worst: f64 = 0.0;
        for i in 1..=500 {
            let x = 0.001 * i as f64;
            let lhs = (0.5 * x).exp() * m.density(x).unwrap();
            let rhs = (-0.5 * x).exp() * m.density(-x).unwrap();
            worst = worst.max((lhs - rhs).abs());
        }
        c.check(worst < 1e-10, format!("v={v}: e^(x/2)f(x) = e^(-x/2)f(-x), max gap {worst:.2e} < 1e-10"));

        let mut worst_m: f64 = 0.0;
        for _ in 0..20 {
            let u: f64 = rng.random_range(-10.0..11.0);
            let (a, b) = (mgf(u, m.params()).unwrap(), mgf(1.0 - u, m.params()).unwrap());
            worst_m = worst_m.max((a - b).abs() / a.abs().max(b.abs()));
        }
        c.check(worst_m < 1e-12, format!("v={v}: m(u) = m(1-u) at 20 random u, max rel gap {worst_m:.2e} < 1e-12"));

        let curve = implied::smile(m.params(), &grid).unwrap();
        let dev = curve.max_mirror_deviation();
        c.check(dev < 1e-8, format!("v={v}: sigma(K) = sigma(S0^2/K), max gap {dev:.2e} < 1e-8"));
    }
    c.finish();
}

#[test]
fn c7_moment_explosion() {
    let mut c = Checks::new("C7");
    let r0 = shape::r_star(&MixtureParams::figure(0.0)).unwrap();
    c.check(r0 == 25.5, format!("r*(v=0) = {r0}, want exactly 25.5"));
    let (v, lambda, mu) = (0.02f64, 0.5, 0.02);
    let alpha = (mu * mu / v.powi(4) + 2.0 * lambda / (v * v) + 0.25).sqrt();
    let beta_plus = mu / (v * v) - 0.5;
    let want = alpha - beta_plus;
    let got = shape::r_star(&MixtureParams::figure(v)).unwrap();
    c.check((got - want).abs() < 1e-10, format!("r*(v=0.02) = {got:.12}, alpha - beta+ = {want:.12}"));
    c.finish();
}

#[test]
fn c8_sup_norm_convergence() {
    let mut c = Checks::new("C8");
    let xs: Vec<f64> = (0..=4000).map(|i| 0.2 * (i as f64 - 2000.0) / 2000.0).collect();
    let mut norms = Vec::new();
    for v in [0.02, 0.015, 0.01, 0.005] {
        let m = model(v);
        let sup = xs
            .iter()
            .map(|&x| (m.density(x).unwrap() - m.double_gamma_density(x).unwrap()).abs())
            .fold(0.0, f64::max);
        println!("C8 v={v}: sup |f_v - f_0| on [-0.2, 0.2] = {sup:.6}");
        norms.push((v, sup));
    }
    for w in norms.windows(2) {
        c.check(
            w[1].1 < w[0].1,
            format!("sup-norm v={} ({:.6}) < v={} ({:.6})", w[1].0, w[1].1, w[0].0, w[0].1),
        );
    }
    c.finish();
}

/// KS distance between a sorted sample and the model CDF, with the CDF
/// linearly interpolated on a 1e-4 grid.
fn ks_distance(draws: &[f64], pr: &Pricer) -> f64 {
    let (lo, hi, h): (f64, f64, f64) = (-1.0, 1.0, 1e-4);
    let n_grid = ((hi - lo) / h).round() as usize;
    let table: Vec<f64> = (0..=n_grid).map(|i| pr.cdf(lo + h * i as f64).unwrap()).collect();
    let cdf = |x: f64| {
        if x <= lo || x >= hi {
            return pr.cdf(x).unwrap();
        }
        let t = (x - lo) / h;
        let i = (t.floor() as usize).min(n_grid - 1);
        let frac = t - i as f64;
        table[i] + frac * (table[i + 1] - table[i])
    };
    let n = draws.len() as f64;
    draws
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

#[test]
fn c9_monte_carlo_oracle() {
    let mut c = Checks::new("C9");
    for v in [0.0, 0.02] {
        let pr = Pricer::from_params(MixtureParams::figure(v)).unwrap();
        let mut draws = pr.model().sample(1_000_000, 9).unwrap();
        draws.sort_by(f64::total_cmp);
        let ks = ks_distance(&draws, &pr);
        c.check(ks < 0.002, format!("v={v}: KS distance {ks:.5} < 0.002 (1e6 draws)"));

        let n = draws.len() as f64;
        let mean = draws.iter().map(|x| x.exp()).sum::<f64>() / n;
        let var = draws.iter().map(|x| (x.exp() - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        c.check(
            (mean - 1.0).abs() < 3.0 * se,
            format!("v={v}: E[e^X] = {mean:.6}, |E - 1| = {:.2e} < 3 se = {:.2e}", (mean - 1.0).abs(), 3.0 * se),
        );
    }
    c.finish();
}
