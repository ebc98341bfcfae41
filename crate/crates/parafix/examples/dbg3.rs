use parafix::fixedpoint::*;
use parafix::geometry::*;
use parafix::renorm::*;
use num_complex::Complex64 as C;

fn main() {
    let cfg = RenormConfig::default();
    let fp = fixed_point_from_quadratic(&cfg, 1e-10, 25).unwrap();
    let mut star = StarData::from_fixed_point(&fp, &cfg).unwrap();
    let seed = C::new(-779.306, -643.282);

    let chain = star.tail_chain(seed).unwrap();
    println!("chain: ladder {} pts, top {:.4}, q1 = {:.3} (|q1| = {:.2})",
        chain.ladder.len(), chain.ladder.last().unwrap(), chain.q1, chain.q1.norm());

    // one nu step
    match star.nu_along(&chain, seed) {
        Ok(n) => println!("nu(seed) = {n:.4}, |nu(seed) - seed| = {:.4}", (n - seed).norm()),
        Err(e) => println!("nu failed: {e}"),
    }

    let t0 = std::time::Instant::now();
    match tail_fixed_point(&mut star, Some(seed)) {
        Ok(rep) => {
            println!("t*  = {:.4}+{:.4}i   (paper -779.306-643.282i)", rep.t_star.0, rep.t_star.1);
            println!("nu' = {:.4}+{:.4}i   (paper 0.232+0.264i)", rep.nu_prime.0, rep.nu_prime.1);
            println!("residual {:.2e}, steps {}, time {:?}", rep.nu_residual, rep.newton_steps, t0.elapsed());
            let dt = (C::new(rep.t_star.0, rep.t_star.1) - seed).norm();
            let dn = (C::new(rep.nu_prime.0, rep.nu_prime.1) - C::new(0.232, 0.264)).norm();
            println!("|t* - paper| = {dt:.3}   |nu' - paper| = {dn:.4}");
            if let Some(m) = star.tip_model() {
                println!("tip model: radius {:.2}, fit residual {:.2e}, f'(t*) ~ {:.4e}", m.radius, m.fit_residual, m.coeffs[1]);
            }
        }
        Err(e) => println!("tail failed: {e}"),
    }
}
