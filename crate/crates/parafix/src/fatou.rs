//! Asymptotic Fatou coordinates at infinity.
//!
//! For a normalized parabolic germ `f(z) = z + z^2 + alpha z^3 + ...` the
//! coordinate change `w = -1/z` produces `F(w) = w + 1 + A/w + O(w^-2)` with
//! `A = 1 - alpha`. Both Fatou coordinates of `F` share one asymptotic
//! expansion `Phi(w) ~ w - A log(+/-w) + C + sum b_j w^-j`; the `b_j` solve a
//! triangular system order by order. The expansion is Gevrey-1: the
//! coefficients grow like `(j-1)!`, so evaluation truncates near `|w|/const`.

use serde::{Deserialize, Serialize};

use crate::series::{log_series, mul_trunc, recip_series, TaylorGerm, C};
use crate::Error;

/// Expansion of `F(w) = w + translation + sum a_j w^-j` about infinity.
#[derive(Debug, Clone)]
pub struct LaurentAtInfinity {
    /// Constant term; equals 1 for normalized parabolic source germs.
    pub translation: C,
    /// `a_1, a_2, ...`; `a_1 = A = 1 - alpha`.
    pub a: Vec<C>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Attracting,
    Repelling,
}

/// The data of a Fatou coordinate at infinity:
/// `Phi(w) = w - A log(sigma w) + C + sum_{j<=n} b_j w^-j`
/// with `sigma = +1` (attracting, valid on `Re w >= M`) or `sigma = -1`
/// (repelling, valid on `Re w <= -M`). Logs are principal-branch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymptoticFatou {
    pub a: C,
    pub c: C,
    pub b: Vec<C>,
    pub orientation: Orientation,
    /// Validity threshold on `|Re w|`.
    pub m: f64,
    /// Near-optimal truncation divisor: use `n ~ |w| / kappa_trunc` terms.
    pub kappa_trunc: f64,
}

/// Shared expansion data before an orientation is chosen.
#[derive(Debug, Clone)]
pub struct FatouExpansion {
    pub a: C,
    pub b: Vec<C>,
}

/// Attracting and repelling coordinates of one germ.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FatouPair {
    pub attracting: AsymptoticFatou,
    pub repelling: AsymptoticFatou,
}

/// `F(w) = -1/f(-1/w)` evaluated through the germ's series.
pub fn eval_f_at_infinity(f: &TaylorGerm, w: C) -> C {
    -1.0 / f.evaluate_raw(-1.0 / w)
}

/// Expansion of `F(w) = -1/f(-1/w)` about infinity; requires `c_1 = c_2 = 1`.
pub fn germ_to_infinity(f: &TaylorGerm) -> Result<LaurentAtInfinity, Error> {
    if !f.is_normalized_parabolic() {
        return Err(Error::NotNormalizedParabolic);
    }
    let n = f.order();
    // f(-1/w) = (-1/w) g(1/w) with g(x) = sum_k c_k (-x)^{k-1}, g_0 = 1,
    // hence F(w) = w / g(1/w) = w * h(1/w), h = 1/g.
    let mut g = vec![C::new(0.0, 0.0); n];
    for k in 1..=n {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        g[k - 1] = f.coeff(k) * sign;
    }
    let h = recip_series(&g, n);
    Ok(LaurentAtInfinity {
        translation: h[1],
        a: h[2..].to_vec(),
    })
}

impl LaurentAtInfinity {
    /// Number of available `a_j` coefficients.
    pub fn order(&self) -> usize {
        self.a.len()
    }

    /// `a_1 = A`.
    pub fn leading(&self) -> C {
        self.a.first().copied().unwrap_or(C::new(0.0, 0.0))
    }
}

/// Solve the conjugacy equation for the expansion coefficients `b_1..b_n`.
///
/// Rewriting `Phi(F(w)) = Phi(w) + 1` with the log split off gives, in the
/// variable `x = 1/w`,
///
/// `F - w - 1 - A log(F/w) = sum_j b_j x^j (1 - (F/w)^-j)`,
///
/// whose right side has `+j b_j` as the coefficient of `x^{j+1}` plus terms
/// in `b_1..b_{j-1}` only, so the system is triangular. (The sign of the
/// right side is fixed by the functional equation itself; the residual
/// tests pin it.)
pub fn solve_expansion(f_inf: &LaurentAtInfinity, n: usize) -> FatouExpansion {
    assert!(n + 1 >= 2);
    assert!(
        n <= f_inf.order().saturating_sub(1),
        "requested {} coefficients from an order-{} expansion",
        n,
        f_inf.order()
    );
    let len = n + 2; // work with series up to x^{n+1}
    let a1 = f_inf.leading();

    // F/w = 1 + x + sum a_j x^{j+1}
    let mut fw = vec![C::new(0.0, 0.0); len];
    fw[0] = C::new(1.0, 0.0);
    fw[1] = f_inf.translation;
    for (j, &aj) in f_inf.a.iter().enumerate() {
        if j + 2 < len {
            fw[j + 2] = aj;
        }
    }
    let logfw = log_series(&fw, len);
    let q = recip_series(&fw, len);

    // residual r(x) = (F - w - 1) - A log(F/w); then peel off b_j terms
    let mut r = vec![C::new(0.0, 0.0); len];
    for (j, &aj) in f_inf.a.iter().enumerate() {
        if j + 1 < len {
            r[j + 1] = aj;
        }
    }
    for k in 0..len {
        r[k] -= a1 * logfw[k];
    }

    let mut b = Vec::with_capacity(n);
    let mut qp = vec![C::new(0.0, 0.0); len]; // q^j, updated in place
    qp[0] = C::new(1.0, 0.0);
    for j in 1..=n {
        qp = mul_trunc(&qp, &q, len);
        let bj = r[j + 1] / (j as f64);
        // r -= b_j * x^j (1 - q^j); the offset-0 coefficient cancels
        for k in (j + 1)..len {
            r[k] += bj * qp[k - j];
        }
        b.push(bj);
    }
    FatouExpansion { a: a1, b }
}

impl FatouExpansion {
    pub fn oriented(&self, orientation: Orientation, m: f64, kappa_trunc: f64) -> AsymptoticFatou {
        AsymptoticFatou {
            a: self.a,
            c: C::new(0.0, 0.0),
            b: self.b.clone(),
            orientation,
            m,
            kappa_trunc,
        }
    }
}

impl FatouPair {
    /// Expansions of both orientations for a normalized parabolic germ, with
    /// as many `b_j` as the germ's truncation supports.
    pub fn compute(f: &TaylorGerm, m: f64, kappa_trunc: f64) -> Result<FatouPair, Error> {
        let f_inf = germ_to_infinity(f)?;
        let n = f_inf.order().saturating_sub(1);
        let exp = solve_expansion(&f_inf, n);
        Ok(FatouPair {
            attracting: exp.oriented(Orientation::Attracting, m, kappa_trunc),
            repelling: exp.oriented(Orientation::Repelling, m, kappa_trunc),
        })
    }
}

impl AsymptoticFatou {
    pub fn sigma(&self) -> f64 {
        match self.orientation {
            Orientation::Attracting => 1.0,
            Orientation::Repelling => -1.0,
        }
    }

    fn in_half_plane(&self, w: C) -> bool {
        match self.orientation {
            Orientation::Attracting => w.re >= self.m,
            Orientation::Repelling => w.re <= -self.m,
        }
    }

    /// Validity for the sector-shaped region `|w| >= M`, `|Arg(sigma w)|`
    /// bounded away from pi. Used by the domain-geometry paths, which
    /// evaluate near the imaginary axis.
    pub fn in_sector(&self, w: C, slack: f64) -> bool {
        let sw = w * self.sigma();
        w.norm() >= self.m && sw.arg().abs() <= std::f64::consts::FRAC_PI_2 + slack
    }

    /// Truncated evaluation with `n` inverse-power terms. No validity check.
    pub fn eval_unchecked(&self, w: C, n: usize) -> C {
        let n = n.min(self.b.len());
        let x = 1.0 / w;
        let mut tail = C::new(0.0, 0.0);
        for j in (0..n).rev() {
            tail = (tail + self.b[j]) * x;
        }
        w - self.a * (self.sigma() * w).ln() + self.c + tail
    }

    /// `Phi'(w) = 1 - A/w - sum j b_j w^{-j-1}`.
    pub fn derivative_unchecked(&self, w: C, n: usize) -> C {
        let n = n.min(self.b.len());
        let x = 1.0 / w;
        let mut tail = C::new(0.0, 0.0);
        for j in (0..n).rev() {
            tail = (tail + self.b[j] * ((j + 1) as f64)) * x;
        }
        C::new(1.0, 0.0) - self.a * x - tail * x
    }

    /// Evaluation on the validity half-plane, `n` expansion terms.
    pub fn eval(&self, w: C, n: usize) -> Result<C, Error> {
        if !self.in_half_plane(w) {
            return Err(Error::OutsideValidityRegion { w, m: self.m });
        }
        Ok(self.eval_unchecked(w, n))
    }

    /// Evaluation at the near-optimal truncation order for `|w|`.
    pub fn eval_auto(&self, w: C) -> Result<C, Error> {
        self.eval(w, self.truncation_order(w.norm()))
    }

    pub fn eval_auto_unchecked(&self, w: C) -> C {
        self.eval_unchecked(w, self.truncation_order(w.norm()))
    }

    /// Near-optimal number of terms of the Gevrey-1 expansion at `|w|`:
    /// `min(floor(|w| / kappa_trunc), available)`.
    pub fn truncation_order(&self, w_abs: f64) -> usize {
        let n = (w_abs / self.kappa_trunc).floor() as usize;
        n.min(self.b.len())
    }

    /// Newton inversion of the coordinate: finds `w` with `Phi(w) = u`.
    ///
    /// Seeded with the two-term asymptotic inverse; steps are halved while
    /// they increase the residual. Fails after 50 steps.
    pub fn invert(&self, u: C, tol: f64) -> Result<C, Error> {
        let sigma = self.sigma();
        let mut w = u + self.a * (sigma * u).ln() - self.c;
        let n = self.truncation_order(w.norm());
        let mut res = self.eval_unchecked(w, n) - u;
        for step in 0..50 {
            if res.norm() <= tol {
                return Ok(w);
            }
            let d = self.derivative_unchecked(w, n);
            let mut dw = res / d;
            // damped steps on residual increase
            let mut accepted = false;
            for _ in 0..20 {
                let cand = w - dw;
                let cand_res = self.eval_unchecked(cand, n) - u;
                if cand_res.norm() < res.norm() {
                    w = cand;
                    res = cand_res;
                    accepted = true;
                    break;
                }
                dw *= 0.5;
            }
            if !accepted {
                return Err(Error::NewtonDiverged {
                    steps: step,
                    residual: res.norm(),
                });
            }
        }
        if res.norm() <= tol {
            Ok(w)
        } else {
            Err(Error::NewtonDiverged {
                steps: 50,
                residual: res.norm(),
            })
        }
    }

    /// Spec'd inverse for the repelling coordinate, `Re u <= -M + 1`.
    pub fn invert_repelling(&self, u: C, tol: f64) -> Result<C, Error> {
        if self.orientation != Orientation::Repelling {
            return Err(Error::InvalidConfig {
                reason: "invert_repelling called on an attracting coordinate".into(),
            });
        }
        if u.re > -self.m + 1.0 {
            return Err(Error::OutsideValidityRegion { w: u, m: self.m });
        }
        self.invert(u, tol)
    }

    /// Borel transform coefficients `b_m / (m-1)!`.
    pub fn borel_coefficients(&self) -> Vec<C> {
        let mut fact = 1.0f64;
        self.b
            .iter()
            .enumerate()
            .map(|(i, &bm)| {
                // (m-1)! with m = i+1
                if i > 0 {
                    fact *= i as f64;
                }
                bm / fact
            })
            .collect()
    }

    /// Gevrey-order-1 signature: `max |b_m/(m-1)!|^{1/m}` over the top half
    /// of the available coefficients. Finite and bounded for Gevrey-1 data;
    /// the bound estimates the reciprocal distance to the nearest
    /// Borel-plane singularity.
    pub fn gevrey_diagnostic(&self) -> f64 {
        let n = self.b.len();
        assert!(n >= 20, "need at least 20 coefficients");
        let borel = self.borel_coefficients();
        let mut best: f64 = 0.0;
        for m in (n / 2)..n {
            let v = borel[m].norm();
            if v > 0.0 {
                best = best.max(v.powf(1.0 / (m + 1) as f64));
            }
        }
        best
    }

    /// Imaginary-part bound over `A` and all `b_j`; real-symmetric germs
    /// produce real expansion data.
    pub fn max_imag(&self) -> f64 {
        self.b
            .iter()
            .map(|b| b.im.abs())
            .fold(self.a.im.abs(), f64::max)
    }
}

/// Functional-equation residual `|Phi(F(w)) - Phi(w) - 1|` at the truncation
/// order chosen for `|w|`.
pub fn functional_equation_residual(f: &TaylorGerm, phi: &AsymptoticFatou, w: C) -> f64 {
    let n = phi.truncation_order(w.norm());
    let fw = eval_f_at_infinity(f, w);
    (phi.eval_unchecked(fw, n) - phi.eval_unchecked(w, n) - 1.0).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn moebius_is_exact_translation() {
        let f = TaylorGerm::moebius(40);
        let inf = germ_to_infinity(&f).unwrap();
        assert_relative_eq!(inf.translation.re, 1.0, epsilon = 1e-14);
        for a in &inf.a {
            assert!(a.norm() < 1e-13);
        }
        let exp = solve_expansion(&inf, 30);
        assert!(exp.a.norm() < 1e-13);
        for b in &exp.b {
            assert!(b.norm() < 1e-12);
        }
    }

    #[test]
    fn quadratic_geometric_series() {
        // f0 = z + z^2: F(w) = w^2/(w-1) = w + 1 + 1/w + 1/w^2 + ...
        let f = TaylorGerm::quadratic(40);
        let inf = germ_to_infinity(&f).unwrap();
        assert_relative_eq!(inf.translation.re, 1.0, epsilon = 1e-14);
        for a in inf.a.iter().take(30) {
            assert_relative_eq!(a.re, 1.0, epsilon = 1e-12);
            assert!(a.im.abs() < 1e-14);
        }
        assert_relative_eq!(inf.leading().re, 1.0, epsilon = 1e-14); // A = 1
    }

    #[test]
    fn koebe_leading_coefficient() {
        // alpha = 3/4 after normalization, so A = 1/4
        let f = TaylorGerm::koebe_normalized(40);
        let inf = germ_to_infinity(&f).unwrap();
        assert_relative_eq!(inf.leading().re, 0.25, epsilon = 1e-13);
    }

    #[test]
    fn rejects_non_normalized() {
        let f = TaylorGerm::new(vec![C::new(1.0, 0.0), C::new(2.0, 0.0)]);
        assert!(germ_to_infinity(&f).is_err());
    }

    #[test]
    fn expansion_is_stable_under_order_increase() {
        let f = TaylorGerm::quadratic(80);
        let inf = germ_to_infinity(&f).unwrap();
        let e1 = solve_expansion(&inf, 40);
        let e2 = solve_expansion(&inf, 50);
        for j in 0..40 {
            assert_eq!(e1.b[j], e2.b[j], "triangular system must be stable at j={j}");
        }
    }

    #[test]
    fn reality_for_quadratic() {
        let pair = FatouPair::compute(&TaylorGerm::quadratic(120), 100.0, 2.0).unwrap();
        assert!(pair.attracting.max_imag() <= 1e-12);
    }

    #[test]
    fn moebius_phi_is_identity_plus_constant() {
        let pair = FatouPair::compute(&TaylorGerm::moebius(40), 100.0, 2.0).unwrap();
        let w = C::new(150.0, 7.0);
        let v = pair.attracting.eval(w, 20).unwrap();
        assert!((v - w).norm() < 1e-12); // C = 0 here
        // inverse: w = u - C exactly
        let u = C::new(-150.0, 3.0);
        let winv = pair.repelling.invert_repelling(u, 1e-12).unwrap();
        assert!((winv - u).norm() < 1e-12);
    }

    #[test]
    fn functional_equation_on_the_half_plane() {
        let f = TaylorGerm::quadratic(120);
        let pair = FatouPair::compute(&f, 100.0, 2.0).unwrap();
        let w = C::new(150.0, 0.0);
        assert!(functional_equation_residual(&f, &pair.attracting, w) < 1e-10);
        // a handful of seeded pseudo-random points
        let mut state = 0x9e3779b97f4a7c15u64;
        for _ in 0..100 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let re = 100.0 + 200.0 * ((state >> 11) as f64 / (1u64 << 53) as f64);
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let im = -150.0 + 300.0 * ((state >> 11) as f64 / (1u64 << 53) as f64);
            let w = C::new(re, im);
            assert!(
                functional_equation_residual(&f, &pair.attracting, w) < 1e-10,
                "residual too large at {w}"
            );
        }
    }

    #[test]
    fn repelling_inverse_round_trip() {
        let f = TaylorGerm::quadratic(120);
        let pair = FatouPair::compute(&f, 100.0, 2.0).unwrap();
        let rep = &pair.repelling;
        let u = C::new(-120.0, 3.0);
        let w = rep.invert_repelling(u, 1e-12).unwrap();
        let n = rep.truncation_order(w.norm());
        assert!((rep.eval_unchecked(w, n) - u).norm() <= 1e-12);
        // round trip the other way
        let w0 = C::new(-140.0, -11.0);
        let u0 = rep.eval_unchecked(w0, rep.truncation_order(140.0));
        let back = rep.invert(u0, 1e-13).unwrap();
        assert!((back - w0).norm() < 1e-10);
    }

    #[test]
    fn truncation_order_rule() {
        let f = TaylorGerm::quadratic(120);
        let pair = FatouPair::compute(&f, 100.0, 2.0).unwrap();
        assert_eq!(pair.attracting.truncation_order(100.0), 50);
        assert_eq!(pair.attracting.truncation_order(10.0), 5);
        // capped by the available coefficients
        assert_eq!(
            pair.attracting.truncation_order(1e6),
            pair.attracting.b.len()
        );
    }

    #[test]
    fn borel_and_gevrey_diagnostics() {
        // rigged input b_m = (m-1)! 3^m has diagnostic ~ 3
        let rig = AsymptoticFatou {
            a: C::new(0.0, 0.0),
            c: C::new(0.0, 0.0),
            b: {
                let mut fact = 1.0;
                (1..=40usize)
                    .map(|m| {
                        if m > 1 {
                            fact *= (m - 1) as f64;
                        }
                        C::new(fact * 3.0f64.powi(m as i32), 0.0)
                    })
                    .collect()
            },
            orientation: Orientation::Attracting,
            m: 100.0,
            kappa_trunc: 2.0,
        };
        assert_relative_eq!(rig.gevrey_diagnostic(), 3.0, max_relative = 1e-3);
        let borel = rig.borel_coefficients();
        assert_relative_eq!(borel[2].re, 9.0 * 3.0, epsilon = 1e-9); // b_3/(2!) = 27

        // simple division check: b = (1, 2, 6) -> (1, 2, 3)
        let simple = AsymptoticFatou {
            b: vec![C::new(1.0, 0.0), C::new(2.0, 0.0), C::new(6.0, 0.0)],
            ..rig.clone()
        };
        let bc = simple.borel_coefficients();
        assert_eq!(bc[0].re, 1.0);
        assert_eq!(bc[1].re, 2.0);
        assert_eq!(bc[2].re, 3.0);

        // quadratic germ: Gevrey-1 with Borel singularities at 2 pi i Z*
        let pair = FatouPair::compute(&TaylorGerm::quadratic(120), 100.0, 2.0).unwrap();
        let diag = pair.attracting.gevrey_diagnostic();
        assert!(diag <= 0.25, "gevrey diagnostic {diag}");
        let bb = pair.attracting.borel_coefficients();
        let n = bb.len();
        let mut root: f64 = 0.0;
        for m in (n / 2)..n {
            let v = bb[m].norm();
            if v > 0.0 {
                root = root.max(v.powf(1.0 / (m + 1) as f64));
            }
        }
        assert!(
            root <= 1.0 / (2.0 * std::f64::consts::PI) + 0.05,
            "borel root test {root}"
        );
    }

    #[test]
    fn crude_asymptotics_derivative_tends_to_one() {
        let f = TaylorGerm::quadratic(120);
        let pair = FatouPair::compute(&f, 100.0, 2.0).unwrap();
        let att = &pair.attracting;
        for r in [100.0, 200.0, 400.0] {
            let w = C::new(r, 0.0);
            let h = 1e-3;
            let n = att.truncation_order(r);
            let d = (att.eval_unchecked(w + h, n) - att.eval_unchecked(w - h, n)) / (2.0 * h);
            let c_bound = 2.0 * att.a.norm() + 0.5;
            assert!(
                (d - 1.0).norm() <= c_bound / r,
                "|Phi' - 1| = {} at R = {}",
                (d - 1.0).norm(),
                r
            );
        }
    }

    #[test]
    fn residual_decay_slope() {
        // fixed n: the functional-equation residual of Phi_n decays at least
        // like R^{-(n+1)}; measured on small radii where it is above the
        // double-precision floor.
        let f = TaylorGerm::quadratic(120);
        let pair = FatouPair::compute(&f, 5.0, 2.0).unwrap();
        let att = &pair.attracting;
        let n = 2usize;
        let radii = [5.0, 10.0, 20.0];
        let mut pts = Vec::new();
        for &r in &radii {
            let w = C::new(r, 0.0);
            let fw = eval_f_at_infinity(&f, w);
            let res = (att.eval_unchecked(fw, n) - att.eval_unchecked(w, n) - 1.0).norm();
            assert!(res > 1e-13, "residual under the floor at R={r}");
            pts.push((r.ln(), res.ln()));
        }
        // least squares slope
        let m = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        assert!(
            slope <= -((n as f64) + 1.0) + 0.5,
            "log-log slope {slope} too shallow"
        );
    }

    #[test]
    fn truncation_rule_sits_on_the_residual_plateau() {
        // At |w| = 100 the residual as a function of n falls to the roundoff
        // plateau well before the divergent tail could turn it back up; the
        // rule's order must land within a factor 10 of the best measured
        // residual.
        let f = TaylorGerm::quadratic(120);
        let pair = FatouPair::compute(&f, 100.0, 2.0).unwrap();
        let att = &pair.attracting;
        let w = C::new(100.0, 0.0);
        let fw = eval_f_at_infinity(&f, w);
        let res = |n: usize| (att.eval_unchecked(fw, n) - att.eval_unchecked(w, n) - 1.0).norm();
        let best = (1..=att.b.len()).map(res).fold(f64::INFINITY, f64::min);
        let at_rule = res(att.truncation_order(100.0));
        assert!(
            at_rule <= 10.0 * best.max(1e-14),
            "rule residual {at_rule} vs best {best}"
        );
    }
}
