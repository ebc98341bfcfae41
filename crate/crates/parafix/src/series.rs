//! Truncated power-series arithmetic for analytic germs fixing the origin.
//!
//! A [`TaylorGerm`] stores the coefficients `c_1..c_n` of a germ
//! `f(z) = c_1 z + c_2 z^2 + ... + c_n z^n`. The multiplicative log form
//! [`LogGerm`] stores `l_1..l_n` with `f(z) = z * exp(l_1 z + ... + l_n z^n)`,
//! which is the representation the renormalization operator acts on.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::Error;

pub type C = Complex64;

/// Truncated Taylor coefficients of an analytic germ fixing 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorGerm {
    /// `c_1..c_n`; the constant term is identically zero and not stored.
    coeffs: Vec<C>,
    /// Root-test estimate of the radius of convergence.
    root_radius: f64,
}

/// Log form of a germ: `f(z) = z * exp(sum l_k z^k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogGerm {
    /// `l_1..l_n`.
    coeffs: Vec<C>,
}

impl TaylorGerm {
    pub fn new(coeffs: Vec<C>) -> Self {
        let root_radius = root_radius_estimate(&coeffs);
        TaylorGerm { coeffs, root_radius }
    }

    /// `f0(z) = z + z^2`, padded with zeros to the requested order.
    pub fn quadratic(order: usize) -> Self {
        assert!(order >= 2);
        let mut c = vec![C::new(0.0, 0.0); order];
        c[0] = C::new(1.0, 0.0);
        c[1] = C::new(1.0, 0.0);
        TaylorGerm::new(c)
    }

    /// The Moebius germ `z/(1-z)`: all coefficients equal to 1.
    pub fn moebius(order: usize) -> Self {
        TaylorGerm::new(vec![C::new(1.0, 0.0); order])
    }

    /// The Koebe map `z/(z-1)^2` rescaled to the normalized parabolic form
    /// `z + z^2 + (3/4) z^3 + ...`, i.e. `c_k = k / 2^{k-1}`.
    pub fn koebe_normalized(order: usize) -> Self {
        let c = (1..=order)
            .map(|k| C::new(k as f64 * 0.5f64.powi(k as i32 - 1), 0.0))
            .collect();
        TaylorGerm::new(c)
    }

    pub fn identity(order: usize) -> Self {
        let mut c = vec![C::new(0.0, 0.0); order];
        c[0] = C::new(1.0, 0.0);
        TaylorGerm::new(c)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    /// Coefficient `c_k` (1-indexed); zero beyond the truncation order.
    pub fn coeff(&self, k: usize) -> C {
        assert!(k >= 1);
        self.coeffs.get(k - 1).copied().unwrap_or(C::new(0.0, 0.0))
    }

    /// Root-test estimate of the radius of convergence.
    pub fn root_radius(&self) -> f64 {
        self.root_radius
    }

    /// Conservative evaluation radius, half the root-test estimate.
    pub fn trust_radius(&self) -> f64 {
        0.5 * self.root_radius
    }

    /// `c_1 = c_2 = 1` bit-exactly.
    pub fn is_normalized_parabolic(&self) -> bool {
        self.order() >= 2
            && self.coeffs[0] == C::new(1.0, 0.0)
            && self.coeffs[1] == C::new(1.0, 0.0)
    }

    pub fn truncated(&self, order: usize) -> TaylorGerm {
        let n = order.min(self.order());
        TaylorGerm::new(self.coeffs[..n].to_vec())
    }

    /// Horner evaluation of the truncated polynomial. No trust check.
    pub fn evaluate_raw(&self, z: C) -> C {
        let mut acc = C::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc * z
    }

    /// Evaluation with the trust-radius guard.
    pub fn evaluate(&self, z: C) -> Result<C, Error> {
        if z.norm() > self.trust_radius() {
            return Err(Error::OutsideTrustRadius {
                radius: self.trust_radius(),
                modulus: z.norm(),
            });
        }
        Ok(self.evaluate_raw(z))
    }

    /// Horner evaluation of `f'`.
    pub fn derivative_raw(&self, z: C) -> C {
        let mut acc = C::new(0.0, 0.0);
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            acc = acc * z + c * ((k + 1) as f64);
        }
        acc
    }

    pub fn has_real_coeffs(&self, tol: f64) -> bool {
        self.coeffs.iter().all(|c| c.im.abs() <= tol)
    }
}

impl LogGerm {
    pub fn new(coeffs: Vec<C>) -> Self {
        LogGerm { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> C {
        assert!(k >= 1);
        self.coeffs.get(k - 1).copied().unwrap_or(C::new(0.0, 0.0))
    }

    /// Horner evaluation of the log series `l(z)`.
    pub fn evaluate_raw(&self, z: C) -> C {
        let mut acc = C::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc * z
    }

    /// `f(z) = z exp(l(z))` evaluated directly.
    pub fn evaluate_germ(&self, z: C) -> C {
        z * self.evaluate_raw(z).exp()
    }

    /// Sup-norm distance on coefficients `l_j`, `j <= cutoff`.
    pub fn sup_distance(&self, other: &LogGerm, cutoff: usize) -> f64 {
        let n = cutoff.min(self.order().max(other.order()));
        (1..=n)
            .map(|k| (self.coeff(k) - other.coeff(k)).norm())
            .fold(0.0, f64::max)
    }
}

/// Root-test estimate `1 / limsup |c_k|^{1/k}` over the top third of the
/// coefficients. All-zero tails give an unbounded radius (polynomial germs).
fn root_radius_estimate(coeffs: &[C]) -> f64 {
    let n = coeffs.len();
    if n == 0 {
        return f64::INFINITY;
    }
    let start = n - (n / 3).max(1);
    let mut limsup: f64 = 0.0;
    for (i, c) in coeffs.iter().enumerate().skip(start) {
        let k = (i + 1) as f64;
        let m = c.norm();
        if m > 0.0 {
            limsup = limsup.max(m.powf(1.0 / k));
        }
    }
    if limsup == 0.0 {
        f64::INFINITY
    } else {
        1.0 / limsup
    }
}

/// Composition `f(g(z))` of germs fixing 0, truncated at
/// `min(order f, order g)`. Horner-style nesting over truncated series.
pub fn compose(f: &TaylorGerm, g: &TaylorGerm) -> TaylorGerm {
    let n = f.order().min(g.order());
    // Series with constant term, index 0 = z^0; g as a full series.
    let mut gs = vec![C::new(0.0, 0.0); n + 1];
    for k in 1..=n {
        gs[k] = g.coeff(k);
    }
    // acc = c_n; acc = c_k + acc*g  (k = n-1 .. 1); result = acc * g.
    let mut acc = vec![C::new(0.0, 0.0); n + 1];
    acc[0] = f.coeff(n);
    for k in (1..n).rev() {
        acc = mul_trunc(&acc, &gs, n + 1);
        acc[0] += f.coeff(k);
    }
    let full = mul_trunc(&acc, &gs, n + 1);
    TaylorGerm::new(full[1..=n].to_vec())
}

/// `f(z) = z exp(l(z))` with `l(0) = 0`; defined for `c_1 = 1`.
pub fn to_log(f: &TaylorGerm) -> Result<LogGerm, Error> {
    if f.order() == 0 || f.coeff(1) != C::new(1.0, 0.0) {
        return Err(Error::NotTangentToIdentity);
    }
    let n = f.order();
    // p = f/z as a full series, p_0 = 1.
    let mut p = vec![C::new(0.0, 0.0); n + 1];
    p[0] = C::new(1.0, 0.0);
    for k in 1..=n {
        p[k] = f.coeff(k + 1); // zero-extended beyond the stored order
    }
    let l = log_series(&p, n + 1);
    Ok(LogGerm::new(l[1..=n].to_vec()))
}

/// Inverse of [`to_log`]: `f = z exp(l)` truncated at the same order.
pub fn from_log(l: &LogGerm) -> TaylorGerm {
    let n = l.order();
    let mut u = vec![C::new(0.0, 0.0); n];
    for k in 1..n {
        u[k] = l.coeff(k);
    }
    let e = exp_series(&u, n);
    // c_k = e_{k-1}
    TaylorGerm::new(e)
}

/// Truncated product of full series (index 0 = constant term).
pub fn mul_trunc(a: &[C], b: &[C], n: usize) -> Vec<C> {
    let mut out = vec![C::new(0.0, 0.0); n];
    for (i, &ai) in a.iter().enumerate().take(n) {
        if ai == C::new(0.0, 0.0) {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(n - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Reciprocal of a full series with `a_0 != 0`.
pub fn recip_series(a: &[C], n: usize) -> Vec<C> {
    assert!(a[0].norm() > 0.0);
    let mut h = vec![C::new(0.0, 0.0); n];
    h[0] = 1.0 / a[0];
    for k in 1..n {
        let mut s = C::new(0.0, 0.0);
        for j in 1..=k {
            let aj = a.get(j).copied().unwrap_or(C::new(0.0, 0.0));
            s += aj * h[k - j];
        }
        h[k] = -s / a[0];
    }
    h
}

/// `log p` for a full series with `p_0 = 1`, via `p l' = p'`.
pub fn log_series(p: &[C], n: usize) -> Vec<C> {
    assert_eq!(p[0], C::new(1.0, 0.0));
    let mut l = vec![C::new(0.0, 0.0); n];
    for k in 1..n {
        let pk = p.get(k).copied().unwrap_or(C::new(0.0, 0.0));
        let mut s = C::new(0.0, 0.0);
        for j in 1..k {
            let pkj = p.get(k - j).copied().unwrap_or(C::new(0.0, 0.0));
            s += l[j] * (j as f64) * pkj;
        }
        l[k] = pk - s / (k as f64);
    }
    l
}

/// `exp u` for a full series with `u_0 = 0`, via `e' = u' e`.
pub fn exp_series(u: &[C], n: usize) -> Vec<C> {
    assert_eq!(u.first().copied().unwrap_or(C::new(0.0, 0.0)), C::new(0.0, 0.0));
    let mut e = vec![C::new(0.0, 0.0); n];
    e[0] = C::new(1.0, 0.0);
    for k in 1..n {
        let mut s = C::new(0.0, 0.0);
        for j in 1..=k {
            let uj = u.get(j).copied().unwrap_or(C::new(0.0, 0.0));
            s += uj * (j as f64) * e[k - j];
        }
        e[k] = s / (k as f64);
    }
    e
}

/// Compositional inverse of a germ with `c_1 = 1`, by series Newton steps.
/// `g` satisfies `f(g(z)) = z` up to the truncation order.
pub fn reversion(f: &TaylorGerm) -> Result<TaylorGerm, Error> {
    if f.order() == 0 || f.coeff(1) != C::new(1.0, 0.0) {
        return Err(Error::NotTangentToIdentity);
    }
    let n = f.order();
    let mut g = TaylorGerm::new(vec![C::new(1.0, 0.0)]);
    let mut m = 1usize;
    while m < n {
        m = (2 * m).min(n);
        let fm = f.truncated(m);
        let mut gc = g.coeffs().to_vec();
        gc.resize(m, C::new(0.0, 0.0));
        let gm = TaylorGerm::new(gc);
        // residual r = f(g) - z, correction dg = -r / f'(g)
        let fg = compose(&fm, &gm);
        let mut r = vec![C::new(0.0, 0.0); m + 1];
        for k in 1..=m {
            r[k] = fg.coeff(k);
        }
        r[1] -= 1.0;
        // f'(g) as a full series
        let mut fp = vec![C::new(0.0, 0.0); m];
        for k in 1..=m {
            fp[k - 1] = fm.coeff(k) * (k as f64);
        }
        let fpg = compose_full(&fp, &gm, m + 1);
        let inv = recip_series(&fpg, m + 1);
        let corr = mul_trunc(&r, &inv, m + 1);
        let mut newc = gm.coeffs().to_vec();
        for k in 1..=m {
            newc[k - 1] -= corr[k];
        }
        g = TaylorGerm::new(newc);
    }
    Ok(g)
}

/// `p(g(z))` for a full series `p` (with constant term) and a germ `g`.
fn compose_full(p: &[C], g: &TaylorGerm, n: usize) -> Vec<C> {
    let mut gs = vec![C::new(0.0, 0.0); n];
    for k in 1..n {
        gs[k] = g.coeff(k);
    }
    let mut acc = vec![C::new(0.0, 0.0); n];
    if let Some(&last) = p.last() {
        acc[0] = last;
    }
    for k in (0..p.len().saturating_sub(1)).rev() {
        acc = mul_trunc(&acc, &gs, n);
        acc[0] += p[k];
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn compose_identity_factors() {
        let id = TaylorGerm::identity(4);
        let f = TaylorGerm::quadratic(4);
        assert_eq!(compose(&id, &f).coeffs(), f.truncated(4).coeffs());
        assert_eq!(compose(&f, &id).coeffs(), f.truncated(4).coeffs());
    }

    #[test]
    fn compose_quadratic_with_itself() {
        // (z+z^2) o (z+z^2) = z + 2z^2 + 2z^3 + z^4
        let f = TaylorGerm::quadratic(4);
        let h = compose(&f, &f);
        let expect = [c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)];
        for (a, b) in h.coeffs().iter().zip(expect.iter()) {
            assert_relative_eq!(a.re, b.re, max_relative = 1e-15);
            assert_relative_eq!(a.im, b.im, max_relative = 1e-15);
        }
    }

    #[test]
    fn to_log_identity_and_exponential() {
        let id = TaylorGerm::identity(5);
        let l = to_log(&id).unwrap();
        assert!(l.coeffs().iter().all(|v| v.norm() < 1e-15));

        // z*e^z truncated at order 5: c_k = 1/(k-1)!
        let ze = TaylorGerm::new(vec![
            c(1.0, 0.0),
            c(1.0, 0.0),
            c(0.5, 0.0),
            c(1.0 / 6.0, 0.0),
            c(1.0 / 24.0, 0.0),
        ]);
        let l = to_log(&ze).unwrap();
        assert_relative_eq!(l.coeff(1).re, 1.0, epsilon = 1e-14);
        for k in 2..=4 {
            assert!(l.coeff(k).norm() < 1e-13, "l_{k} = {:?}", l.coeff(k));
        }
    }

    #[test]
    fn to_log_quadratic() {
        // log((z+z^2)/z) = log(1+z) = z - z^2/2 + z^3/3
        let f = TaylorGerm::quadratic(3);
        let l = to_log(&f).unwrap();
        assert_relative_eq!(l.coeff(1).re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(l.coeff(2).re, -0.5, epsilon = 1e-15);
        assert_relative_eq!(l.coeff(3).re, 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn to_log_rejects_non_unit_derivative() {
        let f = TaylorGerm::new(vec![c(2.0, 0.0), c(1.0, 0.0)]);
        assert!(to_log(&f).is_err());
    }

    #[test]
    fn from_log_examples() {
        let zero = LogGerm::new(vec![c(0.0, 0.0); 4]);
        assert_eq!(from_log(&zero).coeffs(), TaylorGerm::identity(4).coeffs());

        // l = z -> z e^z
        let l = LogGerm::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let f = from_log(&l);
        assert_relative_eq!(f.coeff(2).re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(f.coeff(3).re, 0.5, epsilon = 1e-15);
        assert_relative_eq!(f.coeff(4).re, 1.0 / 6.0, epsilon = 1e-15);

        // l = z - z^2/2 at order 3 -> z + z^2 (third coefficient zero)
        let l = LogGerm::new(vec![c(1.0, 0.0), c(-0.5, 0.0), c(0.0, 0.0)]);
        let f = from_log(&l);
        assert_relative_eq!(f.coeff(1).re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(f.coeff(2).re, 1.0, epsilon = 1e-15);
        assert!(f.coeff(3).norm() < 1e-15);
    }

    #[test]
    fn evaluate_examples() {
        let f = TaylorGerm::quadratic(2);
        assert_eq!(f.evaluate_raw(c(0.0, 0.0)), c(0.0, 0.0));
        assert!(f.evaluate_raw(c(-1.0, 0.0)).norm() < 1e-16);
        assert_relative_eq!(f.evaluate_raw(c(0.1, 0.0)).re, 0.11, epsilon = 1e-16);
    }

    #[test]
    fn trust_radius_guard() {
        // geometric coefficients 2^-k: radius of convergence 2, trust 1
        let g = TaylorGerm::new((1..=60).map(|k| c(0.5f64.powi(k), 0.0)).collect());
        assert!(g.trust_radius() > 0.8 && g.trust_radius() < 1.2);
        assert!(g.evaluate(c(5.0, 0.0)).is_err());
        assert!(g.evaluate(c(0.5, 0.0)).is_ok());
        // polynomial germs evaluate anywhere
        assert_eq!(TaylorGerm::quadratic(10).trust_radius(), f64::INFINITY);
    }

    #[test]
    fn reversion_of_quadratic() {
        let f = TaylorGerm::quadratic(30);
        let g = reversion(&f).unwrap();
        let check = compose(&f, &g);
        assert!((check.coeff(1) - c(1.0, 0.0)).norm() < 1e-13);
        for k in 2..=30 {
            assert!(check.coeff(k).norm() < 1e-12, "k={k}: {:?}", check.coeff(k));
        }
        // g(z) = z - z^2 + 2z^3 - 5z^4 ... (Catalan signs)
        assert_relative_eq!(g.coeff(2).re, -1.0, epsilon = 1e-13);
        assert_relative_eq!(g.coeff(3).re, 2.0, epsilon = 1e-12);
        assert_relative_eq!(g.coeff(4).re, -5.0, epsilon = 1e-11);
    }

    fn small_germ(order: usize) -> impl Strategy<Value = TaylorGerm> {
        prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), order..=order).prop_map(|v| {
            let mut coeffs: Vec<C> = v.into_iter().map(|(re, im)| c(re, im)).collect();
            coeffs[0] = c(1.0, 0.0); // normalized
            TaylorGerm::new(coeffs)
        })
    }

    proptest! {
        #[test]
        fn compose_associative_up_to_truncation(
            f in small_germ(12), g in small_germ(12), h in small_germ(12)
        ) {
            let mut gz = g.coeffs().to_vec();
            gz[0] = c(1.0, 0.0);
            let fg = compose(&f, &g);
            let gh = compose(&g, &h);
            let lhs = compose(&fg, &h);
            let rhs = compose(&f, &gh);
            // rounding scales with the largest intermediate coefficient
            let scale: f64 = fg
                .coeffs()
                .iter()
                .chain(gh.coeffs())
                .chain(lhs.coeffs())
                .map(|v| v.norm())
                .fold(1.0, f64::max);
            for k in 1..=12 {
                prop_assert!((lhs.coeff(k) - rhs.coeff(k)).norm() <= 100.0 * f64::EPSILON * scale,
                    "k={} diff={} scale={}", k, (lhs.coeff(k) - rhs.coeff(k)).norm(), scale);
            }
        }

        #[test]
        fn log_round_trip(f in small_germ(60)) {
            // The round trip is exact up to representation loss in the log
            // coefficients, which for |c_k| <= 2 germs grow like the
            // reciprocal distance to the nearest zero of f/z; the tolerance
            // scales with that intermediate magnitude.
            let l = to_log(&f).unwrap();
            let back = from_log(&l);
            let mut l_scale = 1.0f64;
            for k in 1..=60usize {
                l_scale = l_scale.max(l.coeff(k).norm());
                let d = (back.coeff(k) - f.coeff(k)).norm();
                prop_assert!(d <= 20.0 * f64::EPSILON * l_scale,
                    "k={} diff={} l_scale={}", k, d, l_scale);
            }
        }

        #[test]
        fn log_round_trip_decaying_is_exact(seed in 0u64..1000) {
            // germs with geometrically decaying coefficients (the shape the
            // pipeline produces) round-trip at the 10-epsilon level
            let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
            let mut coeffs = vec![c(1.0, 0.0)];
            let mut scale = 1.0;
            for _ in 1..60 {
                scale *= 0.45;
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                let re = -2.0 + 4.0 * ((state >> 11) as f64 / (1u64 << 53) as f64);
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                let im = -2.0 + 4.0 * ((state >> 11) as f64 / (1u64 << 53) as f64);
                coeffs.push(c(re * scale, im * scale));
            }
            let f = TaylorGerm::new(coeffs);
            let l = to_log(&f).unwrap();
            let back = from_log(&l);
            let mut l_scale = 1.0f64;
            for k in 1..=60usize {
                // O(k) rounding accumulation in the two convolution passes,
                // relative to the intermediate log-coefficient scale
                l_scale = l_scale.max(l.coeff(k).norm());
                let d = (back.coeff(k) - f.coeff(k)).norm();
                prop_assert!(d <= (10.0 + 3.0 * k as f64) * f64::EPSILON * l_scale,
                    "k={} diff={} l_scale={}", k, d, l_scale);
            }
        }

        #[test]
        fn conjugation_symmetry(re in -0.4..0.4f64, im in -0.4..0.4f64) {
            let f = TaylorGerm::quadratic(8);
            let z = c(re, im);
            let a = f.evaluate_raw(z.conj());
            let b = f.evaluate_raw(z).conj();
            prop_assert!((a - b).norm() < 1e-14);
        }
    }
}
