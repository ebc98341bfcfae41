use parafix::fixedpoint::*;
use parafix::renorm::*;
use num_complex::Complex64 as C;

fn main() {
    let cfg = RenormConfig::default();
    let fp = fixed_point_from_quadratic(&cfg, 1e-10, 25).unwrap();

    // measure orbit closest approach on the fixed-point contour
    let p = Pipeline::for_taylor(&fp.germ, &cfg).unwrap();
    let rho = p.upper_radius().unwrap();
    let h = -rho.ln() / TAU;
    let mut min_w = f64::INFINITY;
    for k in 0..64 {
        let u = C::new(k as f64 / 64.0, h);
        if let Ok((w0, _)) = invert_repelling_band(&p.pair.repelling, u, 1e-12) {
            let mut w = w0;
            for _ in 0..cfg.transit_steps() {
                w = p.ev.big_f(w);
                min_w = min_w.min(w.norm());
            }
        }
    }
    println!("contour H = {h:.3}; min |w| along orbits = {min_w:.3} (z_max = {:.3})", 1.0/min_w);

    for n in [30usize, 40, 50] {
        let t0 = std::time::Instant::now();
        match spectrum(&fp.germ, n, 1e-6, &cfg) {
            Ok(rep) => {
                let d = (C::new(rep.lambda.0, rep.lambda.1) - C::new(-0.017, 0.040)).norm();
                println!("N={n}: lambda = {:.6}+{:.6}i |l|={:.5} dist-to-target {:.2e} res {:.1e} steps {} ({:?})",
                    rep.lambda.0, rep.lambda.1, rep.lambda_modulus, d, rep.residual, rep.power_steps, t0.elapsed());
            }
            Err(e) => println!("N={n}: FAILED {e}"),
        }
    }
    // eps halving
    for eps in [1e-5, 1e-6] {
        let rep = spectrum(&fp.germ, 40, eps, &cfg).unwrap();
        println!("eps={eps:.0e}: lambda = {:.7}+{:.7}i", rep.lambda.0, rep.lambda.1);
    }
}
