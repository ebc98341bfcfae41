//! Geometry of the fixed point's domain of analyticity: boundary of the
//! immediate basin, the tail fixed point and its multiplier, tail traces via
//! the inverse-branch functional equation, and the domain boundary.
//!
//! Everything here leans on two coordinate projections built from the
//! fixed-point data. With the rescale factors `a_0`, `a_1` of the converged
//! renormalization and `C_A = C_R = 0` coordinates,
//!
//! - `P(z) = ixp(phi_R(z)) / a_0` projects repelling-petal material to
//!   domain coordinates (the domain boundary is `P` of the basin boundary),
//! - `Q(z) = a_1 ixp(phi_A(z))` satisfies `f o P = Q`, so `f` itself
//!   extends to the whole domain as one horn-map evaluation per point.
//!
//! The tail's inverse branch `xi` (the branch of `f^{-1}` with
//! `xi(0) = tail tip`) is a Newton solve against the extended evaluation,
//! and the tail self-map is `nu = xi o Q`: applying `f` and then pulling
//! back one level of the exponential self-similarity.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fatou::FatouPair;
use crate::fixedpoint::FixedPoint;
use crate::renorm::{invert_attracting_band, invert_repelling_band, GermEval, Pipeline, RenormConfig, TAU};
use crate::series::{reversion, LogGerm, TaylorGerm, C};
use crate::Error;

/// `t` with `exp(-2 pi t) = 2e-4`; the canonical tower interval is
/// `[t_hat, s(t_hat))`.
pub fn t_hat() -> f64 {
    -(2e-4f64).ln() / TAU
}

/// `s(t) = exp(2 pi t)`.
pub fn s_iter(t: f64) -> f64 {
    (TAU * t).exp()
}

/// Threshold `18 ln 10 / 2 pi ~ 6.596`: above it `s(t) >= 1e18` and the
/// logarithmic correction in the attracting inverse drowns in round-off.
pub fn phia_collapse_min_t() -> f64 {
    18.0 * std::f64::consts::LN_10 / TAU
}

/// Tower representation `z = exp(2 pi i theta) / s^k(t)` with
/// `s(t) = exp(2 pi t)`, for magnitudes far below floating-point range.
/// `k = 0` means `z = exp(2 pi i theta) / t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TinyComplex {
    pub k: u32,
    pub t: f64,
    pub theta: f64,
}

/// Result type for tower operations that may leave the tower.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TinyOrComplex {
    Tiny(TinyComplex),
    Ordinary(C),
}

impl TinyComplex {
    pub fn new(k: u32, t: f64, theta: f64) -> Self {
        TinyComplex {
            k,
            t,
            theta: theta.rem_euclid(1.0),
        }
        .normalized()
    }

    /// Canonicalize `t` into `[t_hat, s(t_hat))`.
    pub fn normalized(mut self) -> Self {
        let th = t_hat();
        let cap = s_iter(th);
        while self.t >= cap {
            self.t = self.t.ln() / TAU;
            self.k += 1;
        }
        while self.t < th && self.k > 0 {
            self.t = s_iter(self.t);
            self.k -= 1;
        }
        self
    }

    pub fn from_complex(z: C) -> Result<Self, Error> {
        let m = z.norm();
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::TinyOutOfRegime {
                reason: format!("cannot represent {z} in the tower"),
            });
        }
        Ok(TinyComplex::new(0, 1.0 / m, z.arg() / TAU))
    }

    /// Ordinary value when representable (`k <= 1` always is).
    pub fn to_complex(&self) -> Option<C> {
        let modulus = match self.k {
            0 => 1.0 / self.t,
            1 => (-TAU * self.t).exp(),
            _ => {
                // s^{k-1}(t) overflows the exponent for k >= 2 in the
                // canonical range, except marginally small t
                let y = s_iter(self.t);
                if self.k == 2 && y < 700.0 / TAU {
                    (-TAU * y).exp()
                } else {
                    return None;
                }
            }
        };
        if modulus == 0.0 || !modulus.is_finite() {
            return None;
        }
        Some(C::from_polar(modulus, TAU * self.theta))
    }

    pub fn modulus_log2pi(&self) -> f64 {
        // -ln|z| / 2pi, i.e. the cylinder height; only for k <= 1
        match self.k {
            0 => self.t.ln() / TAU,
            1 => self.t,
            _ => f64::INFINITY,
        }
    }
}

/// `ixp^{-1}((k,t,theta)) = theta + i s^{k-1}(t)` for `k >= 1`, as an
/// ordinary point when the height is representable and as the `(k-1)`-tower
/// height otherwise.
pub fn tiny_ixp_inverse(x: TinyComplex) -> Result<TinyOrComplex, Error> {
    if x.k == 0 {
        return Err(Error::TinyOutOfRegime {
            reason: "k = 0: use the ordinary log".into(),
        });
    }
    if x.k == 1 {
        return Ok(TinyOrComplex::Ordinary(C::new(x.theta, x.t)));
    }
    // height s^{k-1}(t): representable iff k = 2 and s(t) fits
    if x.k == 2 {
        let y = s_iter(x.t);
        if y.is_finite() {
            return Ok(TinyOrComplex::Ordinary(C::new(x.theta, y)));
        }
    }
    Ok(TinyOrComplex::Tiny(TinyComplex {
        k: x.k - 1,
        t: x.t,
        theta: x.theta,
    }))
}

/// Fixed-point data bundled with its coordinate machinery.
pub struct StarData {
    pub germ: TaylorGerm,
    pub log: LogGerm,
    pub pair: FatouPair,
    pub a0: C,
    pub a1: C,
    pub cfg: RenormConfig,
    inverse_seed: TaylorGerm,
    /// Local quadratic model of the map at the tail tip; closes the
    /// self-reference of far-domain transits.
    tip_model: Option<TipModel>,
}

/// Quadratic Taylor model `f(z) ~ c0 + c1 (z - center) + c2 (z - center)^2`
/// fitted from transit-free basin-side samples near the tail tip.
#[derive(Debug, Clone)]
pub struct TipModel {
    pub center: C,
    pub coeffs: [C; 3],
    pub radius: f64,
    pub fit_residual: f64,
}

impl TipModel {
    pub fn eval(&self, z: C) -> C {
        let d = z - self.center;
        self.coeffs[0] + d * (self.coeffs[1] + d * self.coeffs[2])
    }

    pub fn covers(&self, z: C) -> bool {
        (z - self.center).norm() <= self.radius
    }
}

/// Labeled set of complex points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<(f64, f64)>,
    pub label: String,
    pub ordered: bool,
}

impl PointCloud {
    pub fn new(label: impl Into<String>, ordered: bool) -> Self {
        PointCloud {
            points: Vec::new(),
            label: label.into(),
            ordered,
        }
    }

    pub fn push(&mut self, z: C) {
        self.points.push((z.re, z.im));
    }

    pub fn iter_complex(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.points.iter().map(|&(re, im)| C::new(re, im))
    }

    pub fn min_modulus(&self) -> f64 {
        self.iter_complex().map(|z| z.norm()).fold(f64::INFINITY, f64::min)
    }

    /// Canonical (re, im) sort for reproducible serialization.
    pub fn sort_canonical(&mut self) {
        self.points
            .sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    }
}

/// Report of the tail-tip computation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailReport {
    pub t_star: (f64, f64),
    pub nu_prime: (f64, f64),
    pub nu_residual: f64,
    pub newton_steps: usize,
}

impl StarData {
    pub fn from_fixed_point(fp: &FixedPoint, cfg: &RenormConfig) -> Result<Self, Error> {
        let pair = FatouPair::compute(&fp.germ, cfg.m, cfg.kappa_trunc)?;
        let inverse_seed = reversion(&fp.germ.truncated(40))?;
        Ok(StarData {
            germ: fp.germ.clone(),
            log: fp.log.clone(),
            pair,
            a0: fp.a0,
            a1: fp.a1,
            cfg: cfg.clone(),
            inverse_seed,
            tip_model: None,
        })
    }

    pub fn pipeline(&self) -> Pipeline<'_> {
        Pipeline::new(
            GermEval::Taylor(&self.germ),
            &self.pair,
            self.germ.root_radius(),
            &self.cfg,
        )
        .expect("configuration was validated at construction")
    }

    /// Radius out to which the truncated series evaluates with ~1e-7
    /// relative accuracy (beyond it the partial sums cancel catastrophically
    /// in doubles, whatever the truncation order).
    fn series_cap(&self) -> f64 {
        let n = self.germ.order();
        let tail = self.germ.coeff(n).norm();
        if tail == 0.0 {
            return self.germ.trust_radius();
        }
        (1e-7 / tail)
            .powf(1.0 / n as f64)
            .max(0.45 * self.germ.root_radius())
    }

    /// Extended evaluation of the fixed point: series on the inner disk,
    /// one horn-map composite `a_1 nu(a_0 z)` elsewhere in the domain.
    ///
    /// Transit orbits of points near the domain boundary revisit the far
    /// domain (every tail-class orbit passes the tail tip before landing
    /// near the parabolic point), so the composite calls itself on those
    /// orbit steps; the recursion terminates because successive tail
    /// preimages shrink toward the bulk.
    pub fn eval(&self, z: C) -> Result<C, Error> {
        self.eval_rec(z, 10)
    }

    fn eval_rec(&self, z: C, depth: usize) -> Result<C, Error> {
        let cap = self.series_cap();
        if z.norm() <= cap {
            return Ok(self.germ.evaluate_raw(z));
        }
        if let Some(model) = &self.tip_model {
            if model.covers(z) {
                return Ok(model.eval(z));
            }
        }
        if depth == 0 {
            return Err(Error::OutsideTrustRadius {
                radius: cap,
                modulus: z.norm(),
            });
        }
        let x = self.a0 * z;
        let u_raw = C::new(x.arg() / TAU, -x.norm().ln() / TAU);
        let (mut w, _) = invert_repelling_band(&self.pair.repelling, u_raw, self.cfg.newton_tol)?;
        let strip = 10.0 * self.cfg.m;
        for _ in 0..self.cfg.transit_steps() {
            let zz = -1.0 / w;
            let fz = if zz.norm() <= cap {
                self.germ.evaluate_raw(zz)
            } else {
                self.eval_rec(zz, depth - 1)?
            };
            w = -1.0 / fz;
            if !w.is_finite() || w.im.abs() > strip {
                return Err(Error::OrbitEscaped { bound: strip });
            }
        }
        if w.re < self.cfg.m {
            return Err(Error::TransitTooShort {
                n: self.cfg.transit_steps(),
                reached: w.re,
                m: self.cfg.m,
            });
        }
        let phi = self.pair.attracting.eval_auto_unchecked(w);
        Ok(self.a1 * (C::new(0.0, TAU) * phi).exp())
    }

    pub fn derivative(&self, z: C) -> Result<C, Error> {
        if z.norm() <= self.series_cap() {
            return Ok(self.germ.derivative_raw(z));
        }
        let h = 1e-6 * z.norm().max(1.0);
        Ok((self.eval(z + h)? - self.eval(z - h)?) / (2.0 * h))
    }

    /// Attracting coordinate `phi_A(z)` anywhere in the basin (including
    /// the far domain, through the extended evaluation): iterate until
    /// `w = -1/x` reaches the expansion's validity sector, then undo the
    /// translations.
    pub fn attracting_coordinate(&self, z: C) -> Result<C, Error> {
        let mut x = z;
        let mut steps = 0usize;
        let cap = (20.0 * self.cfg.m) as usize;
        loop {
            let w = -1.0 / x;
            if self.pair.attracting.in_sector(w, 0.8) && w.norm() >= 1.6 * self.cfg.m {
                return Ok(self.pair.attracting.eval_auto_unchecked(w) - steps as f64);
            }
            x = self.eval(x)?;
            steps += 1;
            if !x.is_finite() || steps > cap {
                return Err(Error::NewtonDiverged {
                    steps,
                    residual: f64::NAN,
                });
            }
        }
    }

    /// Repelling coordinate `phi_R(z)` near the boundary's petal access:
    /// pull back through the zero-fixing inverse branch until the validity
    /// sector is reached.
    pub fn repelling_coordinate(&self, z: C) -> Result<C, Error> {
        let mut x = z;
        let mut steps = 0usize;
        let cap = (20.0 * self.cfg.m) as usize;
        loop {
            let w = -1.0 / x;
            if self.pair.repelling.in_sector(w, 0.8) && w.norm() >= 1.6 * self.cfg.m {
                return Ok(self.pair.repelling.eval_auto_unchecked(w) + steps as f64);
            }
            x = self.pullback_local(x)?;
            steps += 1;
            if steps > cap {
                return Err(Error::NewtonDiverged {
                    steps,
                    residual: f64::NAN,
                });
            }
        }
    }

    /// One step of the inverse branch fixing the origin, by Newton with a
    /// series seed near 0 and the quadratic-model branch
    /// `sqrt(x + 1/4) - 1/2` (principal root) further out.
    pub fn pullback_local(&self, x: C) -> Result<C, Error> {
        let seed = if x.norm() < 0.1 {
            self.inverse_seed.evaluate_raw(x)
        } else {
            (x + 0.25).sqrt() - 0.5
        };
        let y = self.newton_inverse(x, seed, 1e-13)?;
        // the branch fixing 0 maps toward the parabolic point
        if y.norm() > x.norm() + 0.75 {
            return Err(Error::NewtonDiverged {
                steps: 0,
                residual: (y.norm() - x.norm()).abs(),
            });
        }
        Ok(y)
    }

    /// Newton solve of `f(y) = target` from an explicit seed, using the
    /// extended evaluation.
    pub fn newton_inverse(&self, target: C, seed: C, tol: f64) -> Result<C, Error> {
        let mut y = seed;
        let mut res = self.eval(y)? - target;
        let scale = target.norm().max(1e-30);
        for step in 0..60 {
            if res.norm() <= tol * scale.max(1.0) {
                return Ok(y);
            }
            let d = self.derivative(y)?;
            let mut dy = res / d;
            let mut ok = false;
            for _ in 0..25 {
                let cand = y - dy;
                if let Ok(v) = self.eval(cand) {
                    let cres = v - target;
                    if cres.norm() < res.norm() {
                        y = cand;
                        res = cres;
                        ok = true;
                        break;
                    }
                }
                dy *= 0.5;
            }
            if !ok {
                // accept the round-off floor when it is already adequate
                if res.norm() <= 1e-8 * scale.max(1.0) {
                    return Ok(y);
                }
                return Err(Error::NewtonDiverged {
                    steps: step,
                    residual: res.norm(),
                });
            }
        }
        if res.norm() <= tol * scale.max(1.0) {
            Ok(y)
        } else {
            Err(Error::NewtonDiverged {
                steps: 60,
                residual: res.norm(),
            })
        }
    }

    /// Domain projection `P(z) = ixp(phi_R(z)) / a_0`.
    pub fn project_to_domain(&self, z: C) -> Result<C, Error> {
        let phi = self.repelling_coordinate(z)?;
        Ok((C::new(0.0, TAU) * phi).exp() / self.a0)
    }

    /// `Q(z) = a_1 ixp(phi_A(z))`; satisfies `f o P = Q` and maps a
    /// neighborhood of the tail tip to a neighborhood of 0.
    pub fn q_value(&self, z: C) -> Result<C, Error> {
        let phi = self.attracting_coordinate(z)?;
        Ok(self.a1 * (C::new(0.0, TAU) * phi).exp())
    }

    /// Attracting-side inverse `psi_A^{-1}(x) = -1/Phi_A^{-1}(ixp^{-1} x)`:
    /// the point near 0 whose attracting coordinate projects to `x`.
    pub fn psi_a_inverse(&self, x: C) -> Result<C, Error> {
        let v = x / self.a1;
        let u = C::new(v.arg() / TAU, -v.norm().ln() / TAU);
        let (w, _) = invert_attracting_band(&self.pair.attracting, u, self.cfg.newton_tol)?;
        Ok(-1.0 / w)
    }

    /// The tail branch `xi = P o Q^{-1}` of `f^{-1}`: the attracting-side
    /// band inversion of `v` followed by a backward walk into the repelling
    /// sector. Backward transits gain height, so the walk stays within the
    /// series' reach whatever the tail level of `v`.
    pub fn xi(&self, v: C) -> Result<C, Error> {
        let s = v / self.a1;
        let u_raw = C::new(s.arg() / TAU, -s.norm().ln() / TAU);
        let (w_a, _) = invert_attracting_band(&self.pair.attracting, u_raw, self.cfg.newton_tol)?;
        let mut x = -1.0 / w_a;
        let mut steps = 0usize;
        let cap = (20.0 * self.cfg.m) as usize;
        loop {
            let w = -1.0 / x;
            if self.pair.repelling.in_sector(w, 0.8) && w.norm() >= 1.6 * self.cfg.m {
                let phi = self.pair.repelling.eval_auto_unchecked(w) + steps as f64;
                return Ok((C::new(0.0, TAU) * phi).exp() / self.a0);
            }
            // one backward step, seeded by the w-plane left translation
            let seed = -1.0 / (w - 1.0);
            x = self.newton_series_inverse(x, seed)?;
            steps += 1;
            if steps > cap {
                return Err(Error::NewtonDiverged {
                    steps,
                    residual: f64::NAN,
                });
            }
        }
    }

    pub fn newton_series_inverse_pub(&self, target: C, seed: C) -> Result<C, Error> {
        self.newton_series_inverse(target, seed)
    }

    /// Newton solve of `f(y) = target` against the plain series (the
    /// backward tail walk stays inside the series' reach).
    fn newton_series_inverse(&self, target: C, seed: C) -> Result<C, Error> {
        let mut y = seed;
        let cap = self.series_cap();
        let mut res = self.germ.evaluate_raw(y) - target;
        for step in 0..60 {
            if res.norm() <= 1e-13 * target.norm().max(1.0) {
                return Ok(y);
            }
            let d = self.germ.derivative_raw(y);
            let mut dy = res / d;
            let mut ok = false;
            for _ in 0..25 {
                let cand = y - dy;
                if cand.norm() <= cap {
                    let cres = self.germ.evaluate_raw(cand) - target;
                    if cres.norm() < res.norm() {
                        y = cand;
                        res = cres;
                        ok = true;
                        break;
                    }
                }
                dy *= 0.5;
            }
            if !ok {
                if res.norm() <= 1e-8 * target.norm().max(1.0) {
                    return Ok(y);
                }
                return Err(Error::NewtonDiverged {
                    steps: step,
                    residual: res.norm(),
                });
            }
        }
        Err(Error::NewtonDiverged {
            steps: 60,
            residual: res.norm(),
        })
    }

    /// Tail self-map in the `v`-chart: `m(v) = Q(xi(v)) = a_1 ixp(phi_A(v))`.
    /// Its fixed point `v*` is `xi`-conjugate to the tail tip, with the same
    /// multiplier.
    pub fn tail_chart_map(&self, v: C) -> Result<C, Error> {
        self.q_value(v)
    }

    /// Tail self-map `nu(zeta) = xi(Q(zeta))` in domain coordinates.
    pub fn nu(&self, zeta: C) -> Result<C, Error> {
        let q = self.q_value(zeta)?;
        self.xi(q)
    }
}

/// `psi_A^{-1}` in the tower representation: for `k >= 3`, or `k = 2` with
/// `t` above the collapse threshold, the logarithmic correction is below
/// round-off and the value is exactly one tower level up at angle 1/4;
/// otherwise fall back to the ordinary-precision inversion.
pub fn tiny_phia_inverse(star: &StarData, x: TinyComplex) -> Result<TinyOrComplex, Error> {
    if x.k >= 3 || (x.k == 2 && x.t > phia_collapse_min_t()) {
        return Ok(TinyOrComplex::Tiny(TinyComplex {
            k: x.k - 1,
            t: x.t,
            theta: 0.25,
        }));
    }
    let z = x.to_complex().ok_or_else(|| Error::TinyOutOfRegime {
        reason: format!("({}, {}, {}) not representable for the fallback", x.k, x.t, x.theta),
    })?;
    // `a_1`-free tower arguments: the collapse acts in the normalized
    // coordinates where psi_A = a_1 ixp(phi_A), so scale accordingly
    star.psi_a_inverse(z).map(TinyOrComplex::Ordinary)
}

/// Repelling 2-cycle of a germ: Newton on `f(f(z)) - z` from a seed grid in
/// the annulus `0.5 <= |z| <= 4`, discarding fixed points and
/// non-repelling solutions. Returns the cycle pair and its multiplier.
pub fn boundary_periodic_orbit(f: &TaylorGerm) -> Result<((C, C), C), Error> {
    let g = |z: C| f.evaluate_raw(f.evaluate_raw(z)) - z;
    let dg = |z: C| f.derivative_raw(f.evaluate_raw(z)) * f.derivative_raw(z) - 1.0;
    let mut cycles: Vec<(C, C, C)> = Vec::new();
    let n_grid = 32;
    for gy in 0..n_grid {
        for gx in 0..n_grid {
            let z0 = C::new(
                -4.0 + 8.0 * (gx as f64 + 0.5) / n_grid as f64,
                -4.0 + 8.0 * (gy as f64 + 0.5) / n_grid as f64,
            );
            let r = z0.norm();
            if !(0.5..=4.0).contains(&r) {
                continue;
            }
            let mut z = z0;
            let mut ok = false;
            for _ in 0..60 {
                let v = g(z);
                if v.norm() < 1e-11 {
                    ok = true;
                    break;
                }
                let d = dg(z);
                if d.norm() < 1e-14 {
                    break;
                }
                z -= v / d;
                if !z.is_finite() || z.norm() > 50.0 {
                    break;
                }
            }
            if !ok {
                continue;
            }
            let fz = f.evaluate_raw(z);
            // discard fixed points of f
            if (fz - z).norm() < 1e-7 {
                continue;
            }
            if z.norm() > f.trust_radius() || fz.norm() > f.trust_radius() {
                continue;
            }
            let mult = f.derivative_raw(z) * f.derivative_raw(fz);
            if mult.norm() <= 1.0 {
                continue;
            }
            // dedup cycles (either point may come first)
            let dup = cycles.iter().any(|(a, b, _)| {
                (a - z).norm() < 1e-6 || (b - z).norm() < 1e-6
            });
            if !dup {
                // canonical order inside the pair
                if (z.re, z.im) <= (fz.re, fz.im) {
                    cycles.push((z, fz, mult));
                } else {
                    cycles.push((fz, z, mult));
                }
            }
        }
    }
    cycles.sort_by(|x, y| x.0.re.total_cmp(&y.0.re).then(x.0.im.total_cmp(&y.0.im)));
    cycles
        .first()
        .map(|&(a, b, m)| ((a, b), m))
        .ok_or(Error::NoRepellingCycle)
}

/// All solutions of `f(x) = w` inside the given disk, by Newton from a
/// 32x32 seed grid with deduplication at 1e-7 spacing.
pub fn preimages_in_disk(f: &TaylorGerm, w: C, radius: f64) -> Vec<C> {
    let n_grid = 32;
    let mut roots: Vec<C> = Vec::new();
    for gy in 0..n_grid {
        for gx in 0..n_grid {
            let mut z = C::new(
                -radius + 2.0 * radius * (gx as f64 + 0.5) / n_grid as f64,
                -radius + 2.0 * radius * (gy as f64 + 0.5) / n_grid as f64,
            );
            if z.norm() > radius {
                continue;
            }
            let mut ok = false;
            for _ in 0..50 {
                let v = f.evaluate_raw(z) - w;
                if v.norm() < 1e-11 * w.norm().max(1.0) {
                    ok = true;
                    break;
                }
                let d = f.derivative_raw(z);
                if d.norm() < 1e-14 {
                    break;
                }
                z -= v / d;
                if !z.is_finite() || z.norm() > 2.0 * radius + 4.0 {
                    break;
                }
            }
            if ok && z.norm() <= radius && !roots.iter().any(|r| (r - z).norm() < 1e-7) {
                roots.push(z);
            }
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    roots
}

/// Breadth-first preimage tree of the seed orbit under `f`, keeping roots
/// inside the disk of the given radius. Returns the cloud and the per-level
/// found-root counts.
pub fn pullback_boundary(
    f: &TaylorGerm,
    seeds: &[C],
    depth: usize,
    budget: usize,
    radius: f64,
) -> (PointCloud, Vec<usize>) {
    let mut cloud = PointCloud::new("basin-boundary", false);
    let mut all: Vec<C> = Vec::new();
    let mut frontier: Vec<C> = seeds.to_vec();
    let mut counts = Vec::new();
    for s in seeds {
        all.push(*s);
        cloud.push(*s);
    }
    counts.push(seeds.len());
    for _ in 0..depth {
        if all.len() >= budget {
            break;
        }
        let batches: Vec<Vec<C>> = frontier
            .par_iter()
            .map(|&w| preimages_in_disk(f, w, radius))
            .collect();
        let mut next = Vec::new();
        for batch in batches {
            for z in batch {
                if all.len() + next.len() >= budget {
                    break;
                }
                let dup = all.iter().chain(next.iter()).any(|r| (r - z).norm() < 1e-7);
                if !dup {
                    next.push(z);
                }
            }
        }
        counts.push(next.len());
        for z in &next {
            all.push(*z);
            cloud.push(*z);
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    (cloud, counts)
}

/// Tail endpoint candidates: basin-boundary nodes (the preimage tree of the
/// repelling 2-cycle) together with their domain projections. The map's own
/// preimages of 0 sit in an ultra-flat far region and are ill-conditioned
/// Newton targets, so the boundary tree supplies the nodes instead; their
/// projections are the endpoints of the domain-boundary tails.
pub fn tail_candidates(star: &StarData, depth: usize) -> Result<Vec<(C, C, usize)>, Error> {
    let ((a, b), _) = boundary_periodic_orbit(&star.germ)?;
    let radius = star.series_cap().min(13.0);
    let (cloud, counts) = pullback_boundary(&star.germ, &[a, b], depth, 700, radius);
    let mut nodes_with_level = Vec::new();
    let mut idx = 0usize;
    for (level, &count) in counts.iter().enumerate() {
        for _ in 0..count {
            if let Some(&(re, im)) = cloud.points.get(idx) {
                nodes_with_level.push((C::new(re, im), level));
            }
            idx += 1;
        }
    }
    let projected: Vec<Option<(C, C, usize)>> = nodes_with_level
        .par_iter()
        .map(|&(z, k)| star.project_to_domain(z).ok().map(|p| (z, p, k)))
        .collect();
    Ok(projected.into_iter().flatten().collect())
}

impl StarData {
    /// Small-scale representatives of a domain point's cylinder class: the
    /// band preimage of `ixp^{-1}(a_0 zeta)` followed forward through the
    /// series until the ladder leaves the given size window. This is the
    /// branch-unambiguous route to the class's bulk representative.
    pub fn class_ladder(&self, zeta: C, size_cap: f64) -> Result<Vec<C>, Error> {
        let x = self.a0 * zeta;
        let u_raw = C::new(x.arg() / TAU, -x.norm().ln() / TAU);
        let (w0, _) = invert_repelling_band(&self.pair.repelling, u_raw, self.cfg.newton_tol)?;
        let mut ladder = vec![-1.0 / w0];
        for _ in 0..(6.0 * self.cfg.m) as usize {
            let next = self.germ.evaluate_raw(*ladder.last().unwrap());
            if next.norm() > size_cap {
                break;
            }
            ladder.push(next);
        }
        Ok(ladder)
    }

    /// `P` of a point near the top of a class ladder, pulling back with the
    /// ladder itself as the Newton seeds (exact branch tracking).
    pub fn project_along_ladder_pub(&self, y: C, ladder: &[C]) -> Result<C, Error> {
        self.project_along_ladder(y, ladder)
    }

    /// Pull a point at the image level of the ladder top back down to the
    /// repelling petal and project. The ladder supplies the Newton seed for
    /// every backward step, which pins the branch.
    fn project_along_ladder(&self, x_above: C, ladder: &[C]) -> Result<C, Error> {
        let mut x = x_above;
        let mut steps = 0usize;
        let mut offset = C::new(0.0, 0.0);
        for j in (0..ladder.len()).rev() {
            let w = -1.0 / x;
            if self.pair.repelling.in_sector(w, 0.8) && w.norm() >= 1.6 * self.cfg.m {
                return Ok(
                    (C::new(0.0, TAU) * (self.pair.repelling.eval_auto_unchecked(w) + steps as f64))
                        .exp()
                        / self.a0,
                );
            }
            x = self.newton_series_inverse(x, ladder[j] + offset)?;
            offset = x - ladder[j];
            steps += 1;
        }
        // continue past the ladder bottom with the local branch
        self.repelling_coordinate(x)
            .map(|phi| (C::new(0.0, TAU) * (phi + steps as f64)).exp() / self.a0)
    }

    /// Fit the near-tip model of the map: points `nu(zeta)` carry the
    /// computable value `f(nu(zeta)) = a_1 ixp(phi_A(chi(zeta)))`, so rings
    /// of `nu`-images around the tip give transit-free (point, value) pairs.
    pub fn fit_tip_model(&mut self, chain: &TailChain, t_star: C) -> Result<(), Error> {
        let mut pts: Vec<(C, C)> = Vec::new();
        for &fac in &[0.5, 1.5, 3.5, 7.0] {
            for dir in 0..8 {
                let ang = TAU * dir as f64 / 8.0;
                let zeta = t_star + fac * C::from_polar(1.0, ang);
                let z = match self.nu_along(chain, zeta) {
                    Ok(v) => v,
                    Err(_) => continue,
                };
                let v = match self.value_at_nu(chain, zeta) {
                    Ok(v) => v,
                    Err(_) => continue,
                };
                pts.push((z, v));
            }
        }
        if pts.len() < 8 {
            return Err(Error::EmptyPetalIntersection);
        }
        let t_hat = t_star;
        // least-squares quadratic in (z - t_hat)
        let mut ata = [[C::new(0.0, 0.0); 3]; 3];
        let mut atb = [C::new(0.0, 0.0); 3];
        for &(zeta, q) in &pts {
            let d = zeta - t_hat;
            let row = [C::new(1.0, 0.0), d, d * d];
            for i in 0..3 {
                for j in 0..3 {
                    ata[i][j] += row[i].conj() * row[j];
                }
                atb[i] += row[i].conj() * q;
            }
        }
        let coeffs = solve3c(ata, atb).ok_or(Error::NewtonDiverged {
            steps: 0,
            residual: f64::NAN,
        })?;
        let radius = pts
            .iter()
            .map(|(z, _)| (z - t_hat).norm())
            .fold(0.0f64, f64::max)
            * 1.3;
        let model = TipModel {
            center: t_hat,
            coeffs,
            radius,
            fit_residual: pts
                .iter()
                .map(|&(z, q)| {
                    let d = z - t_hat;
                    (coeffs[0] + d * (coeffs[1] + d * coeffs[2]) - q).norm()
                })
                .fold(0.0f64, f64::max),
        };
        self.tip_model = Some(model);
        Ok(())
    }

    pub fn tip_model(&self) -> Option<&TipModel> {
        self.tip_model.as_ref()
    }
}

fn solve3c(a: [[C; 3]; 3], b: [C; 3]) -> Option<[C; 3]> {
    let mut m = [
        [a[0][0], a[0][1], a[0][2], b[0]],
        [a[1][0], a[1][1], a[1][2], b[1]],
        [a[2][0], a[2][1], a[2][2], b[2]],
    ];
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm()))?;
        if m[piv][col].norm() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        for row in 0..3 {
            if row != col {
                let fac = m[row][col] / m[col][col];
                for k in col..4 {
                    let v = m[col][k];
                    m[row][k] -= fac * v;
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

/// Chain context for the tail self-map: the seed class's small-scale orbit
/// (the ladder) extended by the last forward step that stays within series
/// reach. Its image is the on-tail Newton seed for the first pullback.
pub struct TailChain {
    pub ladder: Vec<C>,
    /// `f` of the ladder top: the pre-tip point of the class.
    pub q1: C,
}

impl StarData {
    /// Build the pullback chain of the tail class through `zeta0`'s class:
    /// the ladder is trimmed so that the image of its top still evaluates
    /// within the series' reach.
    pub fn tail_chain(&self, zeta0: C) -> Result<TailChain, Error> {
        let mut ladder = self.class_ladder(zeta0, 0.45 * self.series_cap())?;
        // trim until f(top) is reliable
        while ladder.len() > 1 {
            let img = self.germ.evaluate_raw(*ladder.last().unwrap());
            if img.norm() <= 0.9 * self.series_cap() {
                break;
            }
            ladder.pop();
        }
        let q1 = self.germ.evaluate_raw(*ladder.last().unwrap());
        Ok(TailChain { ladder, q1 })
    }

    /// The tail self-map `nu = P o chi`: pull `zeta` back geometrically
    /// (first to the pre-tip scale, then down the ladder into the petal) and
    /// project with the repelling coordinate. Contracts to the tail tip.
    pub fn nu_along(&self, chain: &TailChain, zeta: C) -> Result<C, Error> {
        // first pullback: the preimage of zeta on the tail, near q1
        let x1 = self.newton_series_inverse(zeta, chain.q1)?;
        self.project_along_ladder_pub(x1, &chain.ladder)
    }

    /// `f` at `nu(zeta)`: the horn-map identity `f o P = Q` turns the value
    /// into an attracting-coordinate creep of the small pullback point.
    pub fn value_at_nu(&self, chain: &TailChain, zeta: C) -> Result<C, Error> {
        let x1 = self.newton_series_inverse(zeta, chain.q1)?;
        let phi = self.attracting_coordinate(x1)?;
        Ok(self.a1 * (C::new(0.0, TAU) * phi).exp())
    }
}

/// Tail fixed point: iterate `nu = P o chi` from the seed (an analytic
/// contraction near the tip) with a Newton tail, then read the multiplier
/// from a central difference. Seed-free mode scans the boundary-tree
/// projections and takes the farthest-out tip, the endpoint of the largest
/// tail.
pub fn tail_fixed_point(star: &mut StarData, seed: Option<C>) -> Result<TailReport, Error> {
    let anchor = match seed {
        Some(s) => s,
        None => {
            let cand = tail_candidates(star, 12)?;
            cand.iter()
                .map(|&(_, p, _)| p)
                .filter(|p| p.is_finite())
                .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                .ok_or(Error::EmptyPetalIntersection)?
        }
    };
    let chain = star.tail_chain(anchor)?;
    let mut zeta = anchor;
    let mut steps = 0usize;
    let mut residual = f64::INFINITY;
    for it in 0..80 {
        let next = star.nu_along(&chain, zeta)?;
        steps += 1;
        residual = (next - zeta).norm();
        if residual <= 1e-10 * zeta.norm().max(1.0) {
            zeta = next;
            break;
        }
        if it > 8 {
            // Newton acceleration once the contraction has settled
            let h = 1e-5 * zeta.norm().max(1.0);
            let d = (star.nu_along(&chain, zeta + h)? - star.nu_along(&chain, zeta - h)?)
                / (2.0 * h);
            zeta -= (next - zeta) / (d - 1.0);
            steps += 1;
        } else {
            zeta = next;
        }
    }
    let h = 1e-4 * zeta.norm().max(1.0);
    let nu_prime =
        (star.nu_along(&chain, zeta + h)? - star.nu_along(&chain, zeta - h)?) / (2.0 * h);

    // harvest (point, value) pairs along the contraction and fit the
    // near-tip model, closing the extended evaluation at the tail
    star.fit_tip_model(&chain, zeta)?;

    Ok(TailReport {
        t_star: (zeta.re, zeta.im),
        nu_prime: (nu_prime.re, nu_prime.im),
        nu_residual: residual,
        newton_steps: steps,
    })
}

/// Trace of the tail: `xi` on a geometric mesh approaching 0 (ordinary
/// precision down to the slit radius `r`, tower recursion below), plus the
/// functional-equation residual on the matching band.
pub struct TailTrace {
    pub cloud: PointCloud,
    pub max_overlap_residual: f64,
    /// Levels actually descended below the slit radius.
    pub recursion_levels: usize,
}

/// `xi` of a tower point via the exponential self-similarity: collapse one
/// level with `psi_A^{-1}`, evaluate there, then map one level deeper with
/// `psi_R = xi o Q o f`.
fn xi_tower(star: &StarData, x: TinyComplex, t_star: C, slit_r: f64) -> Result<C, Error> {
    if let Some(z) = x.to_complex() {
        if z.norm() >= slit_r * 1e-4 {
            // ordinary reach: direct Newton continuation from the tip
            let _ = t_star;
            return star.xi(z);
        }
    }
    let up = tiny_phia_inverse(star, x)?;
    let y = match up {
        TinyOrComplex::Ordinary(z) => {
            let xi_up = xi_tower(star, TinyComplex::from_complex(z)?, t_star, slit_r)?;
            xi_up
        }
        TinyOrComplex::Tiny(tc) => xi_tower(star, tc, t_star, slit_r)?,
    };
    // one level deeper: psi_R(y) = xi(Q(f(y))) seeded at y
    let fy = star.eval(y)?;
    let q = star.q_value(fy)?;
    star.xi(q)
}

pub fn tail_trace(star: &StarData, t_star: C, n_points: usize) -> Result<TailTrace, Error> {
    let slit_r = 2e-4;
    let mut cloud = PointCloud::new("tail", true);
    // ordinary mesh: 64 per decade from 1e-2 down to slit_r * 1e-4,
    // along the ray opposite the slit
    let decades = (1e-2f64 / (slit_r * 1e-4)).log10();
    let n_direct = ((64.0 * decades) as usize).min(n_points.max(64));
    let mut seed = t_star;
    let mut direct = Vec::new();
    for i in 0..n_direct {
        let m = 1e-2 * (slit_r * 1e-4 / 1e-2f64).powf(i as f64 / (n_direct - 1) as f64);
        let z = C::new(-m, 0.0);
        let x = star.xi(z)?;
        let _ = seed;
        seed = x;
        direct.push((z, x));
        cloud.push(x);
    }
    // functional-equation residual on the matching band:
    // xi(z) vs psi_R(xi(psi_A^{-1}(z)))
    let mut max_res: f64 = 0.0;
    for &(z, xz) in direct.iter().filter(|(z, _)| {
        let m = z.norm();
        m <= slit_r && m >= slit_r * 1e-2
    }) {
        let z_up = star.psi_a_inverse(z)?;
        let xi_up = star.xi(z_up)?;
        let fy = star.eval(xi_up)?;
        let q = star.q_value(fy)?;
        let xi_rec = star.xi(q)?;
        let _ = xi_up;
        let res = (xi_rec - xz).norm();
        max_res = max_res.max(res);
    }
    // tower levels below the slit radius
    let th = t_hat();
    let levels = 3usize;
    let per_level = 12usize;
    for k in 2..(2 + levels as u32) {
        for i in 0..per_level {
            let t = th + (phia_collapse_min_t() * 2.0 - th) * (i as f64 / per_level as f64);
            let x = TinyComplex::new(k, t, 0.5);
            if let Ok(v) = xi_tower(star, x, t_star, slit_r) {
                cloud.push(v);
            }
        }
    }
    Ok(TailTrace {
        cloud,
        max_overlap_residual: max_res,
        recursion_levels: levels,
    })
}

/// Domain boundary `P(basin boundary in the repelling petal)`: pull each
/// cloud point near the repelling access back into the petal and project.
/// Points without a clean petal access are skipped (they thin the cloud).
pub fn domain_boundary(star: &StarData, basin_cloud: &PointCloud) -> Result<PointCloud, Error> {
    let entries: Vec<C> = basin_cloud
        .iter_complex()
        .filter(|z| z.norm() <= 0.5 && z.re >= -0.1 && z.norm() > 1e-9)
        .collect();
    if entries.is_empty() {
        return Err(Error::EmptyPetalIntersection);
    }
    let projected: Vec<Option<C>> = entries
        .par_iter()
        .map(|&z| star.project_to_domain(z).ok())
        .collect();
    let mut cloud = PointCloud::new("domain-boundary", false);
    for p in projected.into_iter().flatten() {
        cloud.push(p);
    }
    if cloud.points.is_empty() {
        return Err(Error::EmptyPetalIntersection);
    }
    cloud.sort_canonical();
    Ok(cloud)
}
