//! Kernel of a CARMA(2,1) process and its autocovariance, compared with a
//! brute-force Riemann sum of the isometry integral.

use cmaqf::covariance::autocovariance;
use cmaqf::grid::grid_sample;
use cmaqf::kernels::{Carma, Kernel};

fn main() -> cmaqf::error::Result<()> {
    // a(z) = z² + 3z + 2, b(z) = 3 + z
    let k = Carma::new(&[3.0, 2.0], &[3.0, 1.0], 1)?;
    for t in [0.0, 0.5, 1.0, 2.0, 5.0] {
        println!("phi({t}) = {:.8}", k.eval(t));
    }
    let g = grid_sample(&k, 1.0, 512, 40.0)?;
    for h in [0.0, 1.0, 3.0] {
        let exact = autocovariance(&k, 1.0, h);
        let shift = (h * 512.0) as usize;
        let riemann: f64 = g.values().iter().zip(&g.values()[shift..]).map(|(a, b)| a * b).sum::<f64>() * g.step();
        println!("gamma({h}) = {:.10} (converged: {}), grid {riemann:.6}", exact.value, exact.converged);
    }
    Ok(())
}
