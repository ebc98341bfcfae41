//! The parabolic renormalization operator and its log form.
//!
//! One application of the operator on a normalized parabolic germ `f`:
//! sample the horn map `nu = ixp o Phi_A o F^N o Phi_R^{-1} o ixp^{-1}` on a
//! circle of radius `rho`, recover Taylor coefficients by an inverse discrete
//! Fourier transform, and rescale so the result is again of the form
//! `z + z^2 + ...`. The contour never approaches the parabolic point: every
//! orbit segment lives where the germ's series and the asymptotic Fatou
//! expansions are both reliable.
//!
//! Contour placement: in cylinder coordinates the circle `|x| = rho` is the
//! horizontal line at height `H = -ln(rho)/2pi`. A transit orbit loses about
//! `pi Re(A)` of height between the repelling and attracting half-planes, and
//! orbits started below the horn-map domain fall into the basin of infinity
//! and never reach `Re w >= M`. The usable heights therefore depend on the
//! germ; by default the pipeline probes the crash threshold and samples just
//! above it, which also keeps the coefficient extraction well-conditioned
//! (noise in mode `j` grows like `(r_dom/rho)^j`).
//!
//! Scale handling: the raw coefficients `r_j` of `nu` span hundreds of
//! decades, so the pipeline folds the rescale `a_0` and the sample radius
//! into one per-order factor and never materializes `r_j` for large `j`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fatou::{AsymptoticFatou, FatouPair};
use crate::series::{from_log, to_log, LogGerm, TaylorGerm, C};
use crate::Error;

pub const TAU: f64 = std::f64::consts::TAU;

/// Ratio `|r_2|/|r_1|` below which a germ is declared non-renormalizable.
pub const RENORMALIZABILITY_THRESHOLD: f64 = 1e-8;

/// Extra contour height above the probed crash threshold.
pub const CALIBRATION_MARGIN_H: f64 = 0.02;

const CALIBRATION_ANGLES: usize = 24;

/// Retries (raising the contour) when a sample orbit fails between the
/// probed calibration angles.
const SAMPLE_RETRIES: usize = 4;
const RETRY_STEP_H: f64 = 0.05;

/// Numerical parameters of the renormalization pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RenormConfig {
    /// Expansion validity threshold on `|Re w|`.
    #[serde(alias = "M")]
    pub m: f64,
    /// Transit iterate count; `None` selects `2M + 10`.
    #[serde(alias = "N")]
    pub n: Option<usize>,
    /// Sample-circle radius in the horn-map plane; `None` calibrates it
    /// per germ from the orbit-survival probe.
    pub rho: Option<f64>,
    /// Number of contour samples (a power of two).
    pub n_samples: usize,
    /// Output Taylor truncation order.
    pub trunc_out: usize,
    /// Newton tolerance for coordinate inversions.
    pub newton_tol: f64,
    /// Truncation divisor for the Gevrey-1 expansions.
    pub kappa_trunc: f64,
}

impl Default for RenormConfig {
    fn default() -> Self {
        RenormConfig {
            m: 100.0,
            n: None,
            rho: None,
            n_samples: 1024,
            trunc_out: 120,
            newton_tol: 1e-12,
            kappa_trunc: 2.0,
        }
    }
}

impl RenormConfig {
    pub fn transit_steps(&self) -> usize {
        self.n.unwrap_or((2.0 * self.m) as usize + 10)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !self.n_samples.is_power_of_two() {
            return Err(Error::InvalidConfig {
                reason: format!("n_samples = {} is not a power of two", self.n_samples),
            });
        }
        if self.n_samples < 2 * self.trunc_out {
            return Err(Error::InvalidConfig {
                reason: format!(
                    "n_samples = {} below the anti-aliasing margin 2*trunc_out = {}",
                    self.n_samples,
                    2 * self.trunc_out
                ),
            });
        }
        if self.m < 10.0 {
            return Err(Error::InvalidConfig {
                reason: format!("validity threshold M = {} too small", self.m),
            });
        }
        if let Some(rho) = self.rho {
            if !(rho > 0.0 && rho < 0.5) {
                return Err(Error::InvalidConfig {
                    reason: format!("sample radius rho = {rho} outside (0, 0.5)"),
                });
            }
        }
        Ok(())
    }
}

/// Evaluation form of the germ driving the transit map `F(w) = -1/f(-1/w)`.
#[derive(Debug, Clone, Copy)]
pub enum GermEval<'a> {
    Taylor(&'a TaylorGerm),
    /// `f(z) = z exp(l(z))`, hence `F(w) = w exp(-l(-1/w))`.
    Log(&'a LogGerm),
}

impl<'a> GermEval<'a> {
    pub fn f(&self, z: C) -> C {
        match self {
            GermEval::Taylor(f) => f.evaluate_raw(z),
            GermEval::Log(l) => l.evaluate_germ(z),
        }
    }

    pub fn f_derivative(&self, z: C) -> C {
        match self {
            GermEval::Taylor(f) => f.derivative_raw(z),
            GermEval::Log(l) => {
                let lz = l.evaluate_raw(z);
                let mut acc = C::new(0.0, 0.0);
                for (k, c) in l.coeffs().iter().enumerate().rev() {
                    acc = acc * z + c * ((k + 1) as f64);
                }
                lz.exp() * (1.0 + z * acc)
            }
        }
    }

    pub fn big_f(&self, w: C) -> C {
        match self {
            GermEval::Taylor(f) => -1.0 / f.evaluate_raw(-1.0 / w),
            GermEval::Log(l) => w * (-l.evaluate_raw(-1.0 / w)).exp(),
        }
    }

    /// `F'(w)`; with `z = -1/w`, `F' = f'(z) / (f(z) w)^2`.
    pub fn big_f_derivative(&self, w: C) -> C {
        let z = -1.0 / w;
        let fz = self.f(z);
        self.f_derivative(z) / (fz * fz * w * w)
    }
}

/// One evaluation of the horn map at a contour point.
#[derive(Debug, Clone, Copy)]
pub struct HornPoint {
    /// `s = ixp(Phi_A(F^N(w)))`, the horn-map value.
    pub s: C,
    /// `t = 2 pi i (Phi_A(F^N(w)) - u)`, the branch-resolved log of `s/x`.
    pub t: C,
    /// Integer branch shift applied to `ixp^{-1}(x)`.
    pub shift: i64,
    /// Endpoint of the transit, `Re >= M`.
    pub w_end: C,
}

/// Contour samples of the horn map.
#[derive(Debug, Clone)]
pub struct HornSamples {
    pub samples: Vec<C>,
    pub log_samples: Vec<C>,
    pub shifts: Vec<i64>,
    pub rho: f64,
}

/// Find the integer shift `m` such that `Re Phi_R^{-1}(u - m)` lands in the
/// fundamental band `[-M-1, -M)`, and return the inverted point.
pub fn invert_repelling_band(
    rep: &AsymptoticFatou,
    u_raw: C,
    tol: f64,
) -> Result<(C, i64), Error> {
    debug_assert!(matches!(rep.orientation, crate::fatou::Orientation::Repelling));
    let m = rep.m;
    // asymptotic estimate: w ~ v + A log(-v) - C with v = u - shift
    let mut est = u_raw.re + m + 0.5;
    for _ in 0..2 {
        let v = u_raw - est;
        est = (u_raw.re + m + 0.5) + (rep.a * (-v).ln() - rep.c).re;
    }
    let m0 = est.round() as i64;
    for dm in [0i64, 1, -1, 2, -2] {
        let shift = m0 + dm;
        let v = u_raw - shift as f64;
        if let Ok(w) = rep.invert(v, tol) {
            if w.re >= -m - 1.0 && w.re < -m {
                return Ok((w, shift));
            }
        }
    }
    Err(Error::BranchSearchFailed { point: u_raw })
}

/// Attracting-side analog: find `j` with `Re Phi_A^{-1}(u + j)` in `[M, M+1)`.
pub fn invert_attracting_band(
    att: &AsymptoticFatou,
    u_raw: C,
    tol: f64,
) -> Result<(C, i64), Error> {
    debug_assert!(matches!(att.orientation, crate::fatou::Orientation::Attracting));
    let m = att.m;
    let mut est = m + 0.5 - u_raw.re;
    for _ in 0..2 {
        let v = u_raw + est;
        est = (m + 0.5 - u_raw.re) + (att.a * v.ln() - att.c).re;
    }
    let j0 = est.round() as i64;
    for dj in [0i64, 1, -1, 2, -2] {
        let shift = j0 + dj;
        let v = u_raw + shift as f64;
        if let Ok(w) = att.invert(v, tol) {
            if w.re >= m && w.re < m + 1.0 {
                return Ok((w, shift));
            }
        }
    }
    Err(Error::BranchSearchFailed { point: u_raw })
}

/// A germ together with its Fatou expansions and resolved contour data;
/// the working context for horn-map evaluations.
pub struct Pipeline<'a> {
    pub ev: GermEval<'a>,
    pub pair: &'a FatouPair,
    pub cfg: &'a RenormConfig,
    /// Orbit guard: `|z| = 1/|w|` must stay below this during transits.
    pub z_cap: f64,
}

impl<'a> Pipeline<'a> {
    pub fn new(
        ev: GermEval<'a>,
        pair: &'a FatouPair,
        root_radius: f64,
        cfg: &'a RenormConfig,
    ) -> Result<Self, Error> {
        cfg.validate()?;
        // transit guard: the truncated series is still sharp well beyond the
        // conservative evaluation radius, but must not approach the
        // root-test radius where the tail blows up
        let z_cap = (0.9 * root_radius).min(1e12);
        Ok(Pipeline { ev, pair, cfg, z_cap })
    }

    /// Forward transit with the strip and trust guards; the endpoint must
    /// reach the attracting half-plane.
    pub fn transit(&self, w0: C) -> Result<C, Error> {
        let steps = self.cfg.transit_steps();
        let strip = 10.0 * self.cfg.m;
        let z_floor = 1.0 / self.z_cap;
        let mut w = w0;
        for _ in 0..steps {
            if w.norm() < z_floor {
                return Err(Error::OutsideTrustRadius {
                    radius: self.z_cap,
                    modulus: 1.0 / w.norm(),
                });
            }
            w = self.ev.big_f(w);
            if !w.re.is_finite() || !w.im.is_finite() || w.im.abs() > strip {
                return Err(Error::OrbitEscaped { bound: strip });
            }
        }
        if w.re < self.cfg.m {
            return Err(Error::TransitTooShort {
                n: steps,
                reached: w.re,
                m: self.cfg.m,
            });
        }
        Ok(w)
    }

    /// Backward transit: `steps` damped-Newton solves of `F(w_prev) = w`.
    pub fn transit_back(&self, w0: C, steps: usize) -> Result<C, Error> {
        let tol = self.cfg.newton_tol;
        let mut w = w0;
        for _ in 0..steps {
            let target = w;
            let mut x = target - 1.0;
            let mut res = self.ev.big_f(x) - target;
            for _ in 0..60 {
                if res.norm() <= tol {
                    break;
                }
                let d = self.ev.big_f_derivative(x);
                let mut dx = res / d;
                let mut ok = false;
                for _ in 0..20 {
                    let cand = x - dx;
                    let cres = self.ev.big_f(cand) - target;
                    if cres.norm() < res.norm() {
                        x = cand;
                        res = cres;
                        ok = true;
                        break;
                    }
                    dx *= 0.5;
                }
                if !ok {
                    break;
                }
            }
            if res.norm() > tol {
                return Err(Error::NewtonDiverged {
                    steps,
                    residual: res.norm(),
                });
            }
            w = x;
        }
        Ok(w)
    }

    /// Horn-map evaluation from a cylinder coordinate.
    pub fn horn_point_from_u(&self, u_raw: C) -> Result<HornPoint, Error> {
        let (w0, shift) = invert_repelling_band(&self.pair.repelling, u_raw, self.cfg.newton_tol)?;
        let w_end = self.transit(w0)?;
        let phi_end = self.pair.attracting.eval_auto_unchecked(w_end);
        let t = C::new(0.0, TAU) * (phi_end - u_raw + shift as f64);
        let s = (C::new(0.0, TAU) * phi_end).exp();
        Ok(HornPoint { s, t, shift, w_end })
    }

    /// Horn-map evaluation at a point of the punctured disk.
    pub fn horn_point(&self, x: C) -> Result<HornPoint, Error> {
        let u_raw = C::new(x.arg() / TAU, -x.norm().ln() / TAU);
        self.horn_point_from_u(u_raw)
    }

    fn survives(&self, u_raw: C) -> bool {
        match invert_repelling_band(&self.pair.repelling, u_raw, self.cfg.newton_tol) {
            Ok((w0, _)) => self.transit(w0).is_ok(),
            Err(_) => false,
        }
    }

    /// Probe the lowest surviving contour height over a fan of angles.
    /// `side = +1` probes the upper cylinder end (the `h+` germ at 0),
    /// `side = -1` the lower end.
    pub fn calibrate_height(&self, side: f64) -> Result<f64, Error> {
        let mut worst: f64 = 0.25;
        for k in 0..CALIBRATION_ANGLES {
            let theta = k as f64 / CALIBRATION_ANGLES as f64;
            let probe = |h: f64| self.survives(C::new(theta, side * h));
            let mut lo = 0.25;
            if probe(lo) {
                continue; // crash threshold below the probe floor at this angle
            }
            let mut hi = 1.0;
            let mut ok = false;
            while hi <= 12.0 {
                if probe(hi) {
                    ok = true;
                    break;
                }
                lo = hi;
                hi += 1.0;
            }
            if !ok {
                return Err(Error::BranchSearchFailed {
                    point: C::new(theta, side * hi),
                });
            }
            while hi - lo > 0.004 {
                let mid = 0.5 * (lo + hi);
                if probe(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            worst = worst.max(hi);
        }
        Ok(worst + CALIBRATION_MARGIN_H)
    }

    /// Contour radius for the upper end: configured, or calibrated.
    pub fn upper_radius(&self) -> Result<f64, Error> {
        match self.cfg.rho {
            Some(rho) => Ok(rho),
            None => Ok((-TAU * self.calibrate_height(1.0)?).exp()),
        }
    }

    /// Contour radius for the lower end (a large circle), calibrated unless
    /// an explicit `rho` is configured, in which case its reciprocal is used.
    pub fn lower_radius(&self) -> Result<f64, Error> {
        match self.cfg.rho {
            Some(rho) => Ok(1.0 / rho),
            None => Ok((TAU * self.calibrate_height(-1.0)?).exp()),
        }
    }

    /// Sample on the resolved upper contour, raising it when an orbit
    /// fails between the probed calibration angles. An explicitly
    /// configured radius is honored without retries.
    pub fn sample_upper(&self) -> Result<HornSamples, Error> {
        if let Some(rho) = self.cfg.rho {
            return self.sample(rho);
        }
        let mut h = self.calibrate_height(1.0)?;
        let mut last = None;
        for _ in 0..=SAMPLE_RETRIES {
            match self.sample((-TAU * h).exp()) {
                Ok(s) => return Ok(s),
                Err(e @ (Error::InvalidConfig { .. } | Error::NotRenormalizable { .. })) => {
                    return Err(e)
                }
                Err(e) => last = Some(e),
            }
            h += RETRY_STEP_H;
        }
        Err(last.unwrap())
    }

    /// Lower-contour analog of [`Pipeline::sample_upper`].
    pub fn sample_lower(&self) -> Result<HornSamples, Error> {
        if let Some(rho) = self.cfg.rho {
            return self.sample(1.0 / rho);
        }
        let mut h = self.calibrate_height(-1.0)?;
        let mut last = None;
        for _ in 0..=SAMPLE_RETRIES {
            match self.sample((TAU * h).exp()) {
                Ok(s) => return Ok(s),
                Err(e @ (Error::InvalidConfig { .. } | Error::NotRenormalizable { .. })) => {
                    return Err(e)
                }
                Err(e) => last = Some(e),
            }
            h += RETRY_STEP_H;
        }
        Err(last.unwrap())
    }

    /// Sample the horn map on the circle of the given radius.
    pub fn sample(&self, radius: f64) -> Result<HornSamples, Error> {
        let n = self.cfg.n_samples;
        let h = -radius.ln() / TAU;
        let points: Vec<Result<HornPoint, Error>> = (0..n)
            .into_par_iter()
            .map(|k| self.horn_point_from_u(C::new(k as f64 / n as f64, h)))
            .collect();
        let mut samples = Vec::with_capacity(n);
        let mut log_samples = Vec::with_capacity(n);
        let mut shifts = Vec::with_capacity(n);
        for p in points {
            let p = p?;
            if !p.s.is_finite() || p.s == C::new(0.0, 0.0) {
                return Err(Error::OrbitEscaped {
                    bound: 10.0 * self.cfg.m,
                });
            }
            samples.push(p.s);
            log_samples.push(p.t);
            shifts.push(p.shift);
        }
        Ok(HornSamples {
            samples,
            log_samples,
            shifts,
            rho: radius,
        })
    }
}

/// Sample the horn map of a Taylor germ on its (resolved) contour.
pub fn horn_sample(f: &TaylorGerm, cfg: &RenormConfig) -> Result<HornSamples, Error> {
    let pair = FatouPair::compute(f, cfg.m, cfg.kappa_trunc)?;
    Pipeline::new(GermEval::Taylor(f), &pair, f.root_radius(), cfg)?.sample_upper()
}

/// Inverse DFT modes `(1/n) sum_k s_k exp(-2 pi i k j / n)` for `j <= n_modes`.
/// Direct summation in fixed index order; twiddles from an exact table.
pub fn dft_modes(samples: &[C], n_modes: usize) -> Vec<C> {
    let n = samples.len();
    let roots: Vec<C> = (0..n)
        .map(|m| (C::new(0.0, -TAU) * (m as f64 / n as f64)).exp())
        .collect();
    let mut modes = Vec::with_capacity(n_modes + 1);
    for j in 0..=n_modes {
        let mut acc = C::new(0.0, 0.0);
        for (k, &s) in samples.iter().enumerate() {
            acc += s * roots[(k * j) % n];
        }
        modes.push(acc / n as f64);
    }
    modes
}

/// Taylor coefficients `r_j = DFT_j / rho^j`, `j = 1..trunc_out`, of the
/// sampled function. Suitable when the coefficients stay in floating range;
/// the renormalization pipeline itself folds the rescale in instead.
pub fn extract_taylor(s: &HornSamples, cfg: &RenormConfig) -> TaylorGerm {
    let modes = dft_modes(&s.samples, cfg.trunc_out);
    let mut coeffs = Vec::with_capacity(cfg.trunc_out);
    let mut scale = 1.0f64;
    for j in 1..=cfg.trunc_out {
        scale /= s.rho;
        coeffs.push(modes[j] * scale);
    }
    TaylorGerm::new(coeffs)
}

/// Rescale raw coefficients to the normalized parabolic form
/// `a_1 sum r_j (a_0 z)^j` with `a_0 = r_1/r_2`, `a_1 = 1/(a_0 r_1)`.
pub fn normalize(r: &TaylorGerm) -> Result<TaylorGerm, Error> {
    let r1 = r.coeff(1);
    let r2 = r.coeff(2);
    if r1.norm() == 0.0 {
        return Err(Error::NotRenormalizable { ratio: 0.0 });
    }
    let ratio = r2.norm() / r1.norm();
    if ratio < RENORMALIZABILITY_THRESHOLD {
        return Err(Error::NotRenormalizable { ratio });
    }
    let a0 = r1 / r2;
    let a1 = 1.0 / (a0 * r1);
    let mut coeffs = Vec::with_capacity(r.order());
    let mut a0p = C::new(1.0, 0.0);
    for j in 1..=r.order() {
        a0p *= a0;
        coeffs.push(a1 * r.coeff(j) * a0p);
    }
    coeffs[0] = C::new(1.0, 0.0);
    coeffs[1] = C::new(1.0, 0.0);
    Ok(TaylorGerm::new(coeffs))
}

/// Result of one renormalization step with its rescale factors.
#[derive(Debug, Clone)]
pub struct RenormOutcome {
    pub germ: TaylorGerm,
    pub log: LogGerm,
    /// Argument rescale: the operator value is `a_1 nu(a_0 z)`.
    pub a0: C,
    pub a1: C,
    /// Contour radius actually used.
    pub rho: f64,
}

/// One application of the renormalization operator (Taylor form):
/// sample, extract, normalize. The `a_0`-rescale and the `rho` powers are
/// folded into a single per-order factor.
pub fn renormalize_full(f: &TaylorGerm, cfg: &RenormConfig) -> Result<RenormOutcome, Error> {
    let s = horn_sample(f, cfg)?;
    outcome_from_log_modes(&s, cfg)
}

pub fn renormalize(f: &TaylorGerm, cfg: &RenormConfig) -> Result<TaylorGerm, Error> {
    Ok(renormalize_full(f, cfg)?.germ)
}

/// One application of the operator on the log form.
pub fn renormalize_log_full(l: &LogGerm, cfg: &RenormConfig) -> Result<RenormOutcome, Error> {
    let f = from_log(l);
    let pair = FatouPair::compute(&f, cfg.m, cfg.kappa_trunc)?;
    let p = Pipeline::new(GermEval::Log(l), &pair, f.root_radius(), cfg)?;
    let s = p.sample_upper()?;
    outcome_from_log_modes(&s, cfg)
}

pub fn renormalize_log(l: &LogGerm, cfg: &RenormConfig) -> Result<LogGerm, Error> {
    Ok(renormalize_log_full(l, cfg)?.log)
}

/// Normalization in log form. Writing `nu(x) = x exp(g(x))`, the branch-
/// resolved samples `t_k` are values of `g` on the contour, so with
/// `g_j rho^j = D_j` (DFT modes) the normalized output is
/// `l_j = g_j a_0^j = D_j / D_1^j` where `a_0 = rho / D_1`. The constant
/// mode fixes `a_1` through `a_0 a_1 = exp(-g_0)`.
fn outcome_from_log_modes(s: &HornSamples, cfg: &RenormConfig) -> Result<RenormOutcome, Error> {
    let modes = dft_modes(&s.log_samples, cfg.trunc_out);
    let d1 = modes[1];
    // |g_1| = |D_1|/rho; the renormalizability ratio |r_2/r_1| equals |g_1|.
    // A linear horn map leaves only round-off in the first mode, so the
    // mode is also checked against the sample scale.
    let ratio = d1.norm() / s.rho;
    let t_scale = s
        .log_samples
        .iter()
        .map(|t| t.norm())
        .fold(1.0f64, f64::max);
    if ratio < RENORMALIZABILITY_THRESHOLD || d1.norm() < 1e-9 * t_scale {
        return Err(Error::NotRenormalizable { ratio });
    }
    let a0 = s.rho / d1;
    let a1 = (-modes[0]).exp() / a0;
    let mut lc = Vec::with_capacity(cfg.trunc_out);
    let mut pw = C::new(1.0, 0.0);
    for j in 1..=cfg.trunc_out {
        pw /= d1;
        lc.push(modes[j] * pw);
    }
    lc[0] = C::new(1.0, 0.0); // exact by construction, set bit-exact
    let log = LogGerm::new(lc);
    let germ = from_log(&log);
    Ok(RenormOutcome {
        germ,
        log,
        a0,
        a1,
        rho: s.rho,
    })
}

/// Logarithmic derivative data of the horn-map pair: returns
/// `(log h_plus'(0), log-slope of h_minus at infinity)` from the constant
/// DFT modes on a small circle and a large circle. The slope at infinity is
/// taken in the spherical chart `1/z`, so the sum of the two values equals
/// `4 pi^2 A` modulo `2 pi i`, independently of the coordinate
/// normalization constants.
pub fn horn_derivative_check(f: &TaylorGerm, cfg: &RenormConfig) -> Result<(C, C), Error> {
    let pair = FatouPair::compute(f, cfg.m, cfg.kappa_trunc)?;
    let p = Pipeline::new(GermEval::Taylor(f), &pair, f.root_radius(), cfg)?;
    if let Some(rho) = p.cfg.rho {
        if rho > 0.1 || 1.0 / rho < 10.0 {
            return Err(Error::RadiusPairTooClose);
        }
    }
    let upper = p.sample_upper()?;
    let lower = p.sample_lower()?;
    let g0_plus = dft_modes(&upper.log_samples, 0)[0];
    let g0_minus = dft_modes(&lower.log_samples, 0)[0];
    // h_minus(z)/z -> exp(g0_minus); the slope at infinity in the 1/z chart
    // is the reciprocal, so its log is -g0_minus.
    Ok((g0_plus, -g0_minus))
}

/// Reduce a value modulo `2 pi i` to the representative nearest zero in the
/// imaginary direction.
pub fn reduce_mod_2pii(v: C) -> C {
    let k = (v.im / TAU).round();
    C::new(v.re, v.im - k * TAU)
}

/// Two-path consistency helper: log-path renormalization of a Taylor germ.
pub fn renormalize_via_log(f: &TaylorGerm, cfg: &RenormConfig) -> Result<TaylorGerm, Error> {
    let l = to_log(f)?;
    Ok(from_log(&renormalize_log(&l, cfg)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn config_validation() {
        let cfg = RenormConfig::default();
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.transit_steps(), 210);
        let bad = RenormConfig {
            n_samples: 100,
            ..RenormConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = RenormConfig {
            n_samples: 128,
            trunc_out: 120,
            ..RenormConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn calibration_finds_the_transit_threshold() {
        // For f0 the crash threshold sits near height 3; heights below pi
        // lose the orbit to the basin of infinity.
        let f = TaylorGerm::quadratic(120);
        let cfg = RenormConfig::default();
        let pair = FatouPair::compute(&f, cfg.m, cfg.kappa_trunc).unwrap();
        let p = Pipeline::new(GermEval::Taylor(&f), &pair, f.root_radius(), &cfg).unwrap();
        let h = p.calibrate_height(1.0).unwrap();
        assert!(h > 2.5 && h < 4.0, "calibrated height {h}");
        let rho = p.upper_radius().unwrap();
        assert!(rho < 1e-6, "rho = {rho}");
    }

    #[test]
    fn dft_recovers_polynomial_coefficients() {
        // synthetic s_k = x_k on a unit-scale circle: r = (1, 0, 0, ...)
        let n = 256;
        let rho = 1.0;
        let xs: Vec<C> = (0..n)
            .map(|k| rho * (c(0.0, TAU * k as f64 / n as f64)).exp())
            .collect();
        let hs = HornSamples {
            samples: xs.clone(),
            log_samples: vec![c(0.0, 0.0); n],
            shifts: vec![0; n],
            rho,
        };
        let cfg = RenormConfig {
            n_samples: n,
            trunc_out: 20,
            ..RenormConfig::default()
        };
        let r = extract_taylor(&hs, &cfg);
        assert!((r.coeff(1) - c(1.0, 0.0)).norm() < 1e-12);
        for j in 2..=20 {
            assert!(r.coeff(j).norm() < 1e-12, "j={j}");
        }

        // s_k = x_k + x_k^2 -> (1, 1, 0, ...)
        let hs2 = HornSamples {
            samples: xs.iter().map(|&x| x + x * x).collect(),
            log_samples: vec![c(0.0, 0.0); n],
            shifts: vec![0; n],
            rho,
        };
        let r2 = extract_taylor(&hs2, &cfg);
        assert!((r2.coeff(1) - c(1.0, 0.0)).norm() < 1e-12);
        assert!((r2.coeff(2) - c(1.0, 0.0)).norm() < 1e-12);
        assert!(r2.coeff(3).norm() < 1e-12);
    }

    #[test]
    fn normalize_examples() {
        // r = (2, 8, 0...): a0 = 1/4, a1 = 2, result z + z^2
        let r = TaylorGerm::new(vec![c(2.0, 0.0), c(8.0, 0.0), c(0.0, 0.0)]);
        let g = normalize(&r).unwrap();
        assert_eq!(g.coeff(1), c(1.0, 0.0));
        assert_eq!(g.coeff(2), c(1.0, 0.0));
        assert!(g.coeff(3).norm() < 1e-15);

        // r = (1, 1, 1, ...): unchanged
        let r = TaylorGerm::moebius(10);
        let g = normalize(&r).unwrap();
        for j in 1..=10 {
            assert!((g.coeff(j) - c(1.0, 0.0)).norm() < 1e-14);
        }

        // r_2 = 0: not renormalizable
        let r = TaylorGerm::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(3.0, 0.0)]);
        assert!(matches!(
            normalize(&r),
            Err(Error::NotRenormalizable { .. })
        ));
    }

    #[test]
    fn normalize_idempotent_bit_stable() {
        let r = TaylorGerm::new(vec![c(0.3, 0.1), c(-0.7, 2.0), c(0.2, -0.4), c(1.0, 1.0)]);
        let once = normalize(&r).unwrap();
        let twice = normalize(&once).unwrap();
        assert_eq!(once.coeff(1), twice.coeff(1));
        assert_eq!(once.coeff(2), twice.coeff(2));
        for j in 3..=4 {
            assert!((once.coeff(j) - twice.coeff(j)).norm() <= 1e-14 * once.coeff(j).norm());
        }
    }

    #[test]
    fn moebius_germ_is_not_renormalizable() {
        // the horn map of the Moebius germ is linear, so the quadratic
        // coefficient of the samples vanishes identically
        let f = TaylorGerm::moebius(120);
        // explicit deep contour: the Moebius series has radius 1, so the
        // transit needs |w| bounded away from the unit disk
        let cfg = RenormConfig {
            rho: Some(1e-5),
            ..RenormConfig::default()
        };
        match renormalize(&f, &cfg) {
            Err(Error::NotRenormalizable { .. }) => {}
            other => panic!("expected NotRenormalizable, got {other:?}"),
        }
    }

    #[test]
    fn moebius_derivative_identity_is_trivial() {
        // A = 0: the log-derivative sum vanishes mod 2 pi i
        let f = TaylorGerm::moebius(120);
        let cfg = RenormConfig {
            rho: Some(1e-5),
            ..RenormConfig::default()
        };
        let (lp, lm) = horn_derivative_check(&f, &cfg).unwrap();
        let sum = reduce_mod_2pii(lp + lm);
        assert!(sum.norm() < 1e-9, "sum = {sum}");
    }

    #[test]
    fn quadratic_derivative_identity() {
        // A = 1: log sum == 4 pi^2 (mod 2 pi i)
        let f = TaylorGerm::quadratic(120);
        let cfg = RenormConfig::default();
        let (lp, lm) = horn_derivative_check(&f, &cfg).unwrap();
        let expected = 4.0 * std::f64::consts::PI * std::f64::consts::PI;
        let d = reduce_mod_2pii(lp + lm - expected);
        assert!(
            d.norm() <= 1e-6 * expected.abs(),
            "deviation {d} from 4pi^2 (sum = {})",
            lp + lm
        );
    }

    #[test]
    fn koebe_derivative_identity() {
        // A = 1/4: log sum == pi^2 (mod 2 pi i)
        let f = TaylorGerm::koebe_normalized(120);
        let cfg = RenormConfig::default();
        let (lp, lm) = horn_derivative_check(&f, &cfg).unwrap();
        let expected = std::f64::consts::PI * std::f64::consts::PI;
        let d = reduce_mod_2pii(lp + lm - expected);
        assert!(d.norm() <= 1e-6 * expected.abs(), "deviation {d} from pi^2");
    }

    #[test]
    fn reality_of_log_derivative_for_real_germ() {
        // real-symmetric source germ with C_A = C_R = 0:
        // log h_plus'(0) = 2 pi^2 A (mod 2 pi i), purely real
        let f = TaylorGerm::quadratic(120);
        let cfg = RenormConfig::default();
        let (lp, _) = horn_derivative_check(&f, &cfg).unwrap();
        let r = reduce_mod_2pii(lp);
        assert!(r.im.abs() < 1e-8, "Im log h+'(0) = {}", r.im);
        assert_relative_eq!(
            r.re,
            2.0 * std::f64::consts::PI * std::f64::consts::PI,
            max_relative = 1e-8
        );
    }

    #[test]
    fn two_path_consistency_on_quadratic() {
        let f = TaylorGerm::quadratic(120);
        let cfg = RenormConfig::default();
        let via_taylor = renormalize(&f, &cfg).unwrap();
        let via_log = renormalize_via_log(&f, &cfg).unwrap();
        for j in 1..=40 {
            let d = (via_taylor.coeff(j) - via_log.coeff(j)).norm();
            assert!(d <= 1e-10, "j={j}: |diff| = {d:.3e}");
        }
    }

    #[test]
    fn renormalization_is_deterministic() {
        let f = TaylorGerm::quadratic(120);
        let cfg = RenormConfig::default();
        let g1 = renormalize(&f, &cfg).unwrap();
        let g2 = renormalize(&f, &cfg).unwrap();
        assert_eq!(g1.coeffs(), g2.coeffs());
    }

    #[test]
    fn renormalized_quadratic_is_renormalizable_again() {
        let f = TaylorGerm::quadratic(120);
        let cfg = RenormConfig::default();
        let g = renormalize(&f, &cfg).unwrap();
        assert!(g.is_normalized_parabolic());
        let gg = renormalize(&g, &cfg);
        assert!(gg.is_ok(), "second renormalization failed: {gg:?}");
    }

    #[test]
    fn sample_count_self_consistency() {
        let f = TaylorGerm::quadratic(120);
        let base = RenormConfig::default();
        let half = RenormConfig {
            n_samples: 512,
            trunc_out: 120,
            ..base.clone()
        };
        let g1 = renormalize(&f, &base).unwrap();
        let g2 = renormalize(&f, &half).unwrap();
        for j in 1..=60 {
            let d = (g1.coeff(j) - g2.coeff(j)).norm();
            let scale = g1.coeff(j).norm().max(1e-30);
            assert!(d / scale <= 1e-10, "j={j}: rel diff {:.3e}", d / scale);
        }
    }
}
