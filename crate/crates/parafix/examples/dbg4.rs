use parafix::fixedpoint::*;
use parafix::geometry::*;
use parafix::renorm::*;
use num_complex::Complex64 as C;

fn main() {
    let cfg = RenormConfig::default();
    let fp = fixed_point_from_quadratic(&cfg, 1e-10, 25).unwrap();
    let star = StarData::from_fixed_point(&fp, &cfg).unwrap();
    let seed = C::new(-779.306, -643.282);
    let chain = star.tail_chain(seed).unwrap();
    let top = *chain.ladder.last().unwrap();
    println!("top = {top:.5}, |f(top)| = q1 = {:.4}", chain.q1);
    let fq1 = star.germ.evaluate_raw(chain.q1);
    println!("f(q1) = {fq1:.3}  (seed {seed:.3}; diff {:.2})", (fq1 - seed).norm());
    // where's the preimage of seed near q1?
    for dr in [-0.2f64, -0.1, 0.0, 0.1, 0.2] {
        for di in [-0.2f64, 0.0, 0.2] {
            let s0 = chain.q1 + C::new(dr, di);
            if let Ok(x1) = star.newton_series_inverse_pub(seed, s0) {
                let d = (x1 - chain.q1).norm();
                println!("  seed offset ({dr},{di}): x1 = {x1:.4}, dist to q1 = {d:.3}");
            }
        }
    }
}
