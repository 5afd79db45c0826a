//! Seeded Monte-Carlo draws compared with the model CDF and the
//! martingale condition.

use vgsmile::pricing::Pricer;
use vgsmile::vgmodel::MixtureParams;

fn main() -> vgsmile::error::Result<()> {
    let pricer = Pricer::from_params(MixtureParams::figure(0.02))?;
    let n = 200_000;
    let mut draws = pricer.model().sample(n, 42)?;
    draws.sort_by(f64::total_cmp);

    println!("{:>8} {:>10} {:>10}", "x", "empirical", "model");
    for x in [-0.2, -0.1, -0.05, 0.0, 0.05, 0.1, 0.2] {
        let emp = draws.partition_point(|&d| d <= x) as f64 / n as f64;
        println!("{x:>8.2} {emp:>10.5} {:>10.5}", pricer.cdf(x)?);
    }

    let growth: Vec<f64> = draws.iter().map(|x| x.exp()).collect();
    let mean = growth.iter().sum::<f64>() / n as f64;
    let sd = (growth.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    println!("E[e^X] = {mean:.5} +/- {:.5}", sd / (n as f64).sqrt());
    Ok(())
}
