use parafix::fixedpoint::*;
use parafix::renorm::*;
use parafix::series::*;
use num_complex::Complex64 as C;

fn main() {
    let cfg = RenormConfig::default();
    let f0 = TaylorGerm::quadratic(cfg.trunc_out);

    // first renormalization details
    let t0 = std::time::Instant::now();
    let out = renormalize_full(&f0, &cfg).unwrap();
    println!("one renormalization: {:?}", t0.elapsed());
    println!("rho used = {:.6e}  (height {:.4})", out.rho, -out.rho.ln() / TAU);
    println!("a0 = {:.6e}  a1 = {:.6e}", out.a0, out.a1);
    println!("c3(P f0) = {}", out.germ.coeff(3));
    println!("c4(P f0) = {}", out.germ.coeff(4));
    println!("root radius of P f0 = {:.3}", out.germ.root_radius());

    // fixed point
    let t0 = std::time::Instant::now();
    match fixed_point_from_quadratic(&cfg, 1e-10, 25) {
        Ok(fp) => {
            println!("\nfixed point in {} iterations, residual {:.3e}, time {:?}",
                fp.iterations, fp.final_residual, t0.elapsed());
            println!("trajectory: {:?}", fp.trajectory.iter().map(|r| format!("{r:.2e}")).collect::<Vec<_>>());
            let c3 = fp.germ.coeff(3);
            println!("c3(f*) = {c3}  (target 0.514 - 0.0346i)");
            println!("|c3 - target| = {:.3e}", (c3 - C::new(0.514, -0.0346)).norm());
            println!("a0 = {:.6e}  a1 = {:.6e}  rho = {:.3e}", fp.a0, fp.a1,
                renormalize_log_full(&fp.log, &cfg).unwrap().rho);
            println!("radius estimate = {:.3}", radius_estimate(&fp.germ));
            for j in [1usize, 2, 3, 5, 10, 20, 40, 60, 80, 100, 120] {
                println!("  |c_{j}| = {:.4e}", fp.germ.coeff(j).norm());
            }
        }
        Err(e) => println!("fixed point failed: {e}"),
    }
}
