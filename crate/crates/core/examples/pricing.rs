//! Call and put prices from the closed form, checked against direct
//! quadrature and put-call parity.

use vgsmile::pricing::Pricer;
use vgsmile::vgmodel::MixtureParams;

fn main() -> vgsmile::error::Result<()> {
    let pricer = Pricer::from_params(MixtureParams::figure(0.015))?;
    let strikes: Vec<f64> = (0..9).map(|i| 0.9 + 0.025 * i as f64).collect();

    println!("{:>6} {:>12} {:>12} {:>12} {:>10}", "K", "call", "put", "quadrature", "parity");
    for q in pricer.quotes(&strikes)? {
        let quad = pricer.call_by_quadrature(q.strike)?;
        let parity = q.call - q.put - (pricer.s0() - q.strike);
        println!("{:>6.3} {:>12.8} {:>12.8} {:>12.8} {:>10.1e}", q.strike, q.call, q.put, quad, parity);
    }
    Ok(())
}
