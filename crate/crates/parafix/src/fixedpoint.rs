//! Fixed point of the renormalization operator, the leading eigenvalue of
//! its derivative there, and the convergence radius of the fixed point.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::renorm::{renormalize_full, renormalize_log_full, RenormConfig};
use crate::series::{from_log, to_log, LogGerm, TaylorGerm, C};
use crate::Error;

/// Coefficient window for residual norms: high orders carry amplified
/// round-off, so convergence is measured on `j <= RESIDUAL_CUTOFF`.
pub const RESIDUAL_CUTOFF: usize = 60;

/// Seed for every pseudo-random start vector; reports are reproducible
/// bit-for-bit per platform.
const POWER_ITERATION_SEED: u64 = 0x7061726166697831; // "parafix1"

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub f_star: Vec<(f64, f64)>,
    pub iterations: usize,
    pub final_residual: f64,
    pub radius_estimate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub matrix_dim: usize,
    pub eps: f64,
    pub lambda: (f64, f64),
    pub lambda_modulus: f64,
    pub residual: f64,
    pub power_steps: usize,
}

/// Converged fixed-point data, including the rescale factors of the last
/// renormalization (the domain-geometry maps need them).
#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub germ: TaylorGerm,
    pub log: LogGerm,
    pub a0: C,
    pub a1: C,
    pub iterations: usize,
    pub final_residual: f64,
    pub trajectory: Vec<f64>,
}

/// Iterate the log-form operator from `start` until the coefficient sup-norm
/// difference over `j <= 60` drops below `tol`.
pub fn iterate_to_fixed_point(
    start: &LogGerm,
    cfg: &RenormConfig,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPoint, Error> {
    let mut current = start.clone();
    let mut trajectory = Vec::new();
    for it in 1..=max_iter {
        let out = renormalize_log_full(&current, cfg)?;
        let residual = out.log.sup_distance(&current, RESIDUAL_CUTOFF);
        trajectory.push(residual);
        current = out.log.clone();
        if residual <= tol {
            return Ok(FixedPoint {
                germ: out.germ,
                log: out.log,
                a0: out.a0,
                a1: out.a1,
                iterations: it,
                final_residual: residual,
                trajectory,
            });
        }
    }
    Err(Error::FixedPointNotConverged {
        tol,
        max_iter,
        residual: trajectory.last().copied().unwrap_or(f64::NAN),
    })
}

/// Geometric weight of the finite-difference basis. Monomial perturbations
/// `eps z^i` grow like `z_max^i` over the transit region of the sampling
/// contour and leave the linear-response regime for large `i`; perturbing by
/// `eps (z/s)^i` instead keeps every column in range. Reading the images
/// back in the same weighted basis is a diagonal similarity, so the
/// spectrum is untouched.
pub const JACOBIAN_BASIS_SCALE: f64 = 5.0;

/// Forward-difference approximation of the operator derivative at `f_star`
/// in Taylor-coefficient coordinates: entry `(i, j)` represents
/// `(coeff_j(P(f* + eps z^i)) - coeff_j(P(f*))) / eps` with `i, j` running
/// over `3..N+2` (perturbations preserve `c_1 = c_2 = 1`), conjugated by
/// the diagonal weight `s^i` described above.
pub fn jacobian_matrix(
    f_star: &TaylorGerm,
    n: usize,
    eps: f64,
    cfg: &RenormConfig,
) -> Result<Vec<Vec<C>>, Error> {
    let s = JACOBIAN_BASIS_SCALE;
    let base = renormalize_full(f_star, cfg)?.germ;
    let columns: Vec<Result<Vec<C>, Error>> = (0..n)
        .into_par_iter()
        .map(|col| {
            let i = col + 3;
            let eps_i = eps * s.powi(3 - i as i32);
            let mut coeffs = f_star.coeffs().to_vec();
            if coeffs.len() < i {
                coeffs.resize(i, C::new(0.0, 0.0));
            }
            coeffs[i - 1] += eps_i;
            let perturbed = TaylorGerm::new(coeffs);
            let image = renormalize_full(&perturbed, cfg)?.germ;
            Ok((0..n)
                .map(|row| {
                    let j = row + 3;
                    (image.coeff(j) - base.coeff(j)) / eps_i * s.powi(j as i32 - i as i32)
                })
                .collect())
        })
        .collect();
    // a[row][col]
    let mut a = vec![vec![C::new(0.0, 0.0); n]; n];
    for (col, c) in columns.into_iter().enumerate() {
        let c = c?;
        for (row, v) in c.into_iter().enumerate() {
            a[row][col] = v;
        }
    }
    Ok(a)
}

fn mat_vec(a: &[Vec<C>], v: &[C]) -> Vec<C> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(m, x)| m * x).sum())
        .collect()
}

fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(v: &[C]) -> f64 {
    dot(v, v).re.sqrt()
}

/// Power iteration with a seeded start vector and Rayleigh-quotient readout.
pub fn leading_eigenvalue(a: &[Vec<C>]) -> Result<SpectrumReport, Error> {
    let n = a.len();
    assert!(n >= 2, "matrix too small");
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_ITERATION_SEED);
    let mut v: Vec<C> = (0..n)
        .map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let s = norm(&v);
    v.iter_mut().for_each(|x| *x /= s);

    let mut lambda_prev = C::new(f64::NAN, 0.0);
    for step in 1..=10_000 {
        let av = mat_vec(a, &v);
        let vv = dot(&v, &v);
        let lambda = dot(&v, &av) / vv;
        // eigenpair residual relative to |v| (v is kept normalized)
        let res: f64 = av
            .iter()
            .zip(&v)
            .map(|(x, y)| (x - lambda * y).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / vv.re.sqrt();
        if (lambda - lambda_prev).norm() <= 1e-8 && res <= 1e-6 {
            return Ok(SpectrumReport {
                matrix_dim: n,
                eps: f64::NAN, // caller fills in
                lambda: (lambda.re, lambda.im),
                lambda_modulus: lambda.norm(),
                residual: res,
                power_steps: step,
            });
        }
        let s = norm(&av);
        if s == 0.0 {
            return Err(Error::PowerIterationStalled {
                first: lambda,
                second: lambda_prev,
            });
        }
        lambda_prev = lambda;
        v = av.iter().map(|x| x / s).collect();
    }
    // near-degenerate leading pair: report both Rayleigh candidates
    let av = mat_vec(a, &v);
    let lam = dot(&v, &av) / dot(&v, &v);
    Err(Error::PowerIterationStalled {
        first: lam,
        second: lambda_prev,
    })
}

/// Spectrum pipeline: Jacobian at `f_star` plus power iteration.
pub fn spectrum(
    f_star: &TaylorGerm,
    n: usize,
    eps: f64,
    cfg: &RenormConfig,
) -> Result<SpectrumReport, Error> {
    let a = jacobian_matrix(f_star, n, eps, cfg)?;
    let mut rep = leading_eigenvalue(&a)?;
    rep.eps = eps;
    Ok(rep)
}

/// Root-test radius: least-squares fit of `log |c_k|` against `k` (with a
/// `log k` term soaking up polynomial prefactors) over the top half of the
/// informative coefficients, returning `exp(-slope)`.
///
/// "Informative" stops where the decay of `log |c_k|` bottoms out: beyond
/// that the extraction noise floor dominates and would bias the fit.
pub fn radius_estimate(f: &TaylorGerm) -> f64 {
    let n = f.order();
    assert!(n >= 8, "radius fit needs a reasonably long expansion");
    let logs: Vec<(f64, f64)> = (1..=n)
        .filter_map(|k| {
            let m = f.coeff(k).norm();
            if m > 1e-300 {
                Some((k as f64, m.ln()))
            } else {
                None
            }
        })
        .collect();
    if logs.len() < 4 {
        return f64::INFINITY;
    }
    // knee: smoothed minimum of log |c_k|
    let win = 7usize.min(logs.len());
    let mut best = logs.len() - 1;
    let mut best_avg = f64::INFINITY;
    for i in 0..=(logs.len() - win) {
        let avg: f64 = logs[i..i + win].iter().map(|p| p.1).sum::<f64>() / win as f64;
        if avg < best_avg {
            best_avg = avg;
            best = i + win - 1;
        }
    }
    let usable = &logs[..=best];
    if usable.len() < 4 {
        return f64::INFINITY;
    }
    let half = &usable[usable.len() / 2..];
    // model ln|c_k| = alpha + beta k + gamma ln k; radius = exp(-beta)
    let m = half.len() as f64;
    let (mut sk, mut sl, mut sy, mut skk, mut skl, mut sll, mut sky, mut sly) =
        (0.0f64, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for &(k, y) in half {
        let l = k.ln();
        sk += k;
        sl += l;
        sy += y;
        skk += k * k;
        skl += k * l;
        sll += l * l;
        sky += k * y;
        sly += l * y;
    }
    // normal equations for [alpha, beta, gamma]
    let a = [[m, sk, sl], [sk, skk, skl], [sl, skl, sll]];
    let b = [sy, sky, sly];
    match solve3(a, b) {
        Some(x) => (-x[1]).exp(),
        None => f64::INFINITY,
    }
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut m = [
        [a[0][0], a[0][1], a[0][2], b[0]],
        [a[1][0], a[1][1], a[1][2], b[1]],
        [a[2][0], a[2][1], a[2][2], b[2]],
    ];
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        for row in 0..3 {
            if row != col {
                let fac = m[row][col] / m[col][col];
                for k in col..4 {
                    m[row][k] -= fac * m[col][k];
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

/// Full fixed-point pipeline starting at the quadratic germ.
pub fn fixed_point_from_quadratic(
    cfg: &RenormConfig,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPoint, Error> {
    let f0 = TaylorGerm::quadratic(cfg.trunc_out);
    let l0 = to_log(&f0).expect("quadratic germ is tangent to identity");
    iterate_to_fixed_point(&l0, cfg, tol, max_iter)
}

/// `c_3` of the germ reconstructed from a converged log form.
pub fn third_coefficient(fp: &FixedPoint) -> C {
    from_log(&fp.log).coeff(3)
}
