//! Exactly solvable harness on the model maps: the quadratic `f0 = z + z^2`,
//! the Koebe map `K(z) = z/(z-1)^2`, and the Blaschke product
//! `B(z) = (3z^2+1)/(3+z^2)`.
//!
//! The Julia set of `f0` is encoded by nested puzzle pieces: preimages of the
//! half-annuli of `A = {1/2 < |z+1/2| < 2}` under the inverse branches of
//! `f0`. Their diameters `rho_n` shrink to zero, and piece centers realize
//! the boundary parametrization conjugating angle doubling to `f0`.

use num_rational::Ratio;
use serde::Serialize;

use crate::series::C;
use crate::Error;

/// Inverse branches of `f0(z) = z + z^2 = (z + 1/2)^2 - 1/4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Upper-half-plane branch, defined off the slit `[-1/4, +inf)`.
    G0,
    /// Lower-half-plane branch, `g1 = -1 - g0`.
    G1,
    /// Branch fixing the parabolic point, defined off `(-inf, -1/4]`,
    /// value in `{Re z > -1/2}`.
    GLoc,
}

/// Slit-edge convention: real arguments are treated as approached from the
/// upper half-plane.
fn upper_edge(w: C) -> C {
    if w.im == 0.0 {
        C::new(w.re, 0.0f64.copysign(1.0))
    } else {
        w
    }
}

fn sqrt_shifted(w: C) -> C {
    (w + 0.25).sqrt()
}

/// Branch evaluation with the slit-interior guard.
pub fn inverse_branch(which: Branch, w: C) -> Result<C, Error> {
    match which {
        Branch::G0 | Branch::G1 => {
            if w.im == 0.0 && w.re > -0.25 {
                return Err(Error::InvalidConfig {
                    reason: format!("{w} lies on the slit [-1/4, +inf) of g0/g1"),
                });
            }
        }
        Branch::GLoc => {
            if w.im == 0.0 && w.re < -0.25 {
                return Err(Error::InvalidConfig {
                    reason: format!("{w} lies on the slit (-inf, -1/4] of g_loc"),
                });
            }
        }
    }
    Ok(inverse_branch_edge(which, w))
}

/// Branch evaluation extended to the slit edges from the upper side.
pub fn inverse_branch_edge(which: Branch, w: C) -> C {
    let w = upper_edge(w);
    match which {
        Branch::G0 => {
            let s = sqrt_shifted(w);
            let root = if s.im >= 0.0 { s } else { -s };
            root - 0.5
        }
        Branch::G1 => -1.0 - inverse_branch_edge(Branch::G0, w),
        Branch::GLoc => sqrt_shifted(w) - 0.5, // principal root: Re >= 0
    }
}

pub fn f0(z: C) -> C {
    z + z * z
}

/// Binary address of a puzzle piece.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct PuzzleWord {
    pub bits: Vec<u8>,
}

impl PuzzleWord {
    pub fn new(bits: Vec<u8>) -> Self {
        assert!(!bits.is_empty(), "puzzle words are nonempty");
        assert!(bits.iter().all(|&b| b <= 1));
        PuzzleWord { bits }
    }

    pub fn from_str_bits(s: &str) -> Self {
        PuzzleWord::new(s.bytes().map(|b| b - b'0').collect())
    }

    pub fn level(&self) -> usize {
        self.bits.len()
    }

    /// First `n` binary digits of an angle in `[0, 1)`.
    pub fn from_angle(theta: f64, n: usize) -> Self {
        let mut t = theta.rem_euclid(1.0);
        let mut bits = Vec::with_capacity(n);
        for _ in 0..n {
            t *= 2.0;
            if t >= 1.0 {
                bits.push(1);
                t -= 1.0;
            } else {
                bits.push(0);
            }
        }
        PuzzleWord::new(bits)
    }

    pub fn to_string_bits(&self) -> String {
        self.bits.iter().map(|b| char::from(b'0' + b)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct PuzzlePiece {
    pub word: PuzzleWord,
    /// Closed boundary polyline (last sample connects to the first).
    pub boundary: Vec<C>,
    pub diameter: f64,
}

/// Boundary loop of the upper (`bit = 0`) or lower (`bit = 1`) half of the
/// annulus `{1/2 < |z + 1/2| < 2}`, split by the real axis.
fn half_annulus_boundary(bit: u8, samples_per_edge: usize) -> Vec<C> {
    let s = samples_per_edge.max(2);
    let center = C::new(-0.5, 0.0);
    let mut pts = Vec::with_capacity(4 * s);
    // right axis segment [0, 1.5]
    for i in 0..s {
        let t = i as f64 / s as f64;
        pts.push(C::new(1.5 * t, 0.0));
    }
    // outer arc, radius 2, angle 0 -> pi
    for i in 0..s {
        let t = std::f64::consts::PI * i as f64 / s as f64;
        pts.push(center + 2.0 * C::new(t.cos(), t.sin()));
    }
    // left axis segment [-2.5, -1]
    for i in 0..s {
        let t = i as f64 / s as f64;
        pts.push(C::new(-2.5 + 1.5 * t, 0.0));
    }
    // inner arc, radius 1/2, angle pi -> 0
    for i in 0..s {
        let t = std::f64::consts::PI * (1.0 - i as f64 / s as f64);
        pts.push(center + 0.5 * C::new(t.cos(), t.sin()));
    }
    if bit == 1 {
        pts.iter_mut().for_each(|p| *p = p.conj());
    }
    pts
}

fn diameter_of(points: &[C]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            d = d.max((a - b).norm());
        }
    }
    d
}

/// Polyline pullback of the base half-annulus along the word's branches:
/// `A_{i0 i1 ... i_{n-1}} = g_{i0} o ... o g_{i_{n-2}} (A_{i_{n-1}})`.
pub fn puzzle_piece(word: &PuzzleWord, samples_per_edge: usize) -> PuzzlePiece {
    let n = word.level();
    let mut pts = half_annulus_boundary(word.bits[n - 1], samples_per_edge);
    for &b in word.bits[..n - 1].iter().rev() {
        let branch = if b == 0 { Branch::G0 } else { Branch::G1 };
        pts.iter_mut()
            .for_each(|p| *p = inverse_branch_edge(branch, *p));
    }
    let diameter = diameter_of(&pts);
    PuzzlePiece {
        word: word.clone(),
        boundary: pts,
        diameter,
    }
}

/// Signed-crossing containment with a distance tolerance on the boundary.
pub fn piece_contains(piece: &PuzzlePiece, p: C, tol: f64) -> bool {
    let poly = &piece.boundary;
    let n = poly.len();
    // distance to the polyline first
    let mut dist = f64::INFINITY;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let ab = b - a;
        let len2 = ab.norm_sqr();
        let t = if len2 == 0.0 {
            0.0
        } else {
            (((p - a).conj() * ab).re / len2).clamp(0.0, 1.0)
        };
        dist = dist.min((p - (a + ab * t)).norm());
    }
    if dist <= tol {
        return true;
    }
    // ray crossing, horizontal ray to +infinity
    let mut inside = false;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if (a.im > p.im) != (b.im > p.im) {
            let x = a.re + (p.im - a.im) / (b.im - a.im) * (b.re - a.re);
            if x > p.re {
                inside = !inside;
            }
        }
    }
    inside
}

/// Per-level maximal piece diameters `rho_1..rho_n`.
///
/// Levels extend by prepending a bit: the level-`n+1` piece with word `b.w`
/// is `g_b` of the level-`n` piece with word `w`, so each level costs one
/// branch application per sample. Exhaustive through level 14; beyond that
/// only the `keep` widest pieces per level are continued.
pub fn rho_sequence(n_max: usize, samples_per_edge: usize, keep: usize) -> Vec<f64> {
    assert!(n_max >= 1 && n_max <= 24);
    let mut level: Vec<PuzzlePiece> = vec![
        puzzle_piece(&PuzzleWord::new(vec![0]), samples_per_edge),
        puzzle_piece(&PuzzleWord::new(vec![1]), samples_per_edge),
    ];
    let mut rho = vec![level.iter().map(|p| p.diameter).fold(0.0, f64::max)];
    for n in 1..n_max {
        let mut next = Vec::with_capacity(2 * level.len());
        for piece in &level {
            for b in [0u8, 1u8] {
                let branch = if b == 0 { Branch::G0 } else { Branch::G1 };
                let pts: Vec<C> = piece
                    .boundary
                    .iter()
                    .map(|&p| inverse_branch_edge(branch, p))
                    .collect();
                let mut bits = Vec::with_capacity(piece.word.level() + 1);
                bits.push(b);
                bits.extend_from_slice(&piece.word.bits);
                next.push(PuzzlePiece {
                    word: PuzzleWord::new(bits),
                    diameter: diameter_of(&pts),
                    boundary: pts,
                });
            }
        }
        if n >= 14 && next.len() > keep {
            next.sort_by(|a, b| b.diameter.total_cmp(&a.diameter));
            next.truncate(keep);
        }
        rho.push(next.iter().map(|p| p.diameter).fold(0.0, f64::max));
        level = next;
    }
    rho
}

/// Center (boundary-sample mean) of the level-`n` piece addressed by the
/// first `n` binary digits of `theta`; converges to the boundary
/// parametrization point as `n` grows.
pub fn boundary_point(theta: f64, n: usize) -> C {
    assert!(n >= 1 && n <= 30);
    let word = PuzzleWord::from_angle(theta, n);
    let piece = puzzle_piece(&word, 24);
    let sum: C = piece.boundary.iter().sum();
    sum / piece.boundary.len() as f64
}

type Q = Ratio<i128>;

fn q(n: i128) -> Q {
    Ratio::from_integer(n)
}

/// Rational quotient-rule evaluation of `(3z^2+1)/(3+z^2)` and its first two
/// derivatives at a rational point.
fn blaschke_derivatives(z: Q) -> (Q, Q, Q) {
    let p = q(3) * z * z + q(1);
    let dp = q(6) * z;
    let ddp = q(6);
    let qq = q(3) + z * z;
    let dq = q(2) * z;
    let ddq = q(2);
    let b = p / qq;
    let num1 = dp * qq - p * dq;
    let b1 = num1 / (qq * qq);
    // (num1/q^2)' = (num1' q - 2 num1 q') / q^3, num1' = p'' q - p q''
    let dnum1 = ddp * qq - p * ddq;
    let b2 = (dnum1 * qq - q(2) * num1 * dq) / (qq * qq * qq);
    (b, b1, b2)
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelChecksReport {
    pub checks: Vec<ModelCheck>,
}

impl ModelChecksReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn koebe(z: C) -> C {
    z / ((z - 1.0) * (z - 1.0))
}

/// Identity checks on the model maps: the Blaschke boundary data
/// `B(1) = B'(1) = 1`, `B''(1) = 0` in exact rational arithmetic (plus a
/// finite-difference cross-check), the Koebe critical data, and invariance
/// of the slit plane under the Koebe map on probe points.
pub fn model_checks() -> ModelChecksReport {
    let mut checks = Vec::new();
    let (b, b1, b2) = blaschke_derivatives(q(1));
    checks.push(ModelCheck {
        name: "blaschke_fixed_point".into(),
        pass: b == q(1),
        detail: format!("B(1) = {b}"),
    });
    checks.push(ModelCheck {
        name: "blaschke_unit_derivative".into(),
        pass: b1 == q(1),
        detail: format!("B'(1) = {b1}"),
    });
    checks.push(ModelCheck {
        name: "blaschke_second_derivative_zero".into(),
        pass: b2 == q(0),
        detail: format!("B''(1) = {b2}"),
    });

    // finite-difference cross-check of the rational derivatives
    let bf = |z: C| (3.0 * z * z + 1.0) / (3.0 + z * z);
    let h = 1e-5;
    let one = C::new(1.0, 0.0);
    let fd1 = (bf(one + h) - bf(one - h)) / (2.0 * h);
    let fd2 = (bf(one + h) - 2.0 * bf(one) + bf(one - h)) / (h * h);
    checks.push(ModelCheck {
        name: "blaschke_fd_cross_check".into(),
        pass: (fd1 - one).norm() < 1e-8 && fd2.norm() < 1e-5,
        detail: format!("fd B'(1) = {fd1}, fd B''(1) = {fd2}"),
    });

    // Koebe critical data: K(-1) = -1/4, K'(+-1) critical
    let km1 = koebe(C::new(-1.0, 0.0));
    checks.push(ModelCheck {
        name: "koebe_critical_value".into(),
        pass: (km1 - C::new(-0.25, 0.0)).norm() < 1e-15,
        detail: format!("K(-1) = {km1}"),
    });
    let kd = |z: C| {
        let d = z - 1.0;
        -(z + 1.0) / (d * d * d)
    };
    checks.push(ModelCheck {
        name: "koebe_critical_points".into(),
        pass: kd(C::new(-1.0, 0.0)).norm() < 1e-15,
        detail: "K'(-1) = 0; the pole at +1 is the second critical point".into(),
    });

    // K maps the slit plane C \ [0, inf) into itself: probes
    let mut ok = true;
    let mut worst = String::new();
    let mut state = 0x243f6a8885a308d3u64;
    for _ in 0..100 {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
        let re = -5.0 + 10.0 * ((state >> 11) as f64 / (1u64 << 53) as f64);
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
        let im = -5.0 + 10.0 * ((state >> 11) as f64 / (1u64 << 53) as f64);
        let z = C::new(re, if im == 0.0 { 0.5 } else { im });
        if z.im == 0.0 && z.re >= 0.0 {
            continue;
        }
        let k = koebe(z);
        if k.im == 0.0 && k.re >= 0.0 {
            ok = false;
            worst = format!("K({z}) = {k} landed on the slit");
            break;
        }
    }
    checks.push(ModelCheck {
        name: "koebe_slit_plane_invariant".into(),
        pass: ok,
        detail: if ok { "100 probes stayed off [0, inf)".into() } else { worst },
    });

    // g_loc maps C \ (-inf, 0] into itself on probes
    let mut ok = true;
    let mut state = 0x452821e638d01377u64;
    for _ in 0..100 {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
        let re = -4.0 + 8.0 * ((state >> 11) as f64 / (1u64 << 53) as f64);
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
        let im = -4.0 + 8.0 * ((state >> 11) as f64 / (1u64 << 53) as f64);
        let z = C::new(re, if im == 0.0 { 0.25 } else { im });
        if z.im == 0.0 && z.re <= 0.0 {
            continue;
        }
        let g = inverse_branch_edge(Branch::GLoc, z);
        if g.im == 0.0 && g.re <= 0.0 {
            ok = false;
            break;
        }
    }
    checks.push(ModelCheck {
        name: "local_inverse_slit_plane_invariant".into(),
        pass: ok,
        detail: "g_loc probes stayed off (-inf, 0]".into(),
    });

    ModelChecksReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn branch_values_at_zero() {
        assert!(inverse_branch_edge(Branch::GLoc, c(0.0, 0.0)).norm() < 1e-15);
        assert!(inverse_branch_edge(Branch::G0, c(0.0, 0.0)).norm() < 1e-15);
        assert!((inverse_branch_edge(Branch::G1, c(0.0, 0.0)) + 1.0).norm() < 1e-15);
    }

    #[test]
    fn branches_invert_f0() {
        let mut state = 7u64;
        for _ in 0..100 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let re = -3.0 + 6.0 * ((state >> 11) as f64 / (1u64 << 53) as f64);
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let mut im = -3.0 + 6.0 * ((state >> 11) as f64 / (1u64 << 53) as f64);
            if im == 0.0 {
                im = 0.7;
            }
            let w = c(re, im);
            let z0 = inverse_branch_edge(Branch::G0, w);
            assert!((f0(z0) - w).norm() < 1e-12, "g0 failed at {w}");
            assert!(z0.im >= 0.0);
            let z1 = inverse_branch_edge(Branch::G1, w);
            assert!((f0(z1) - w).norm() < 1e-12, "g1 failed at {w}");
            assert!(z1.im <= 0.0);
        }
    }

    #[test]
    fn slit_guards() {
        assert!(inverse_branch(Branch::G0, c(1.0, 0.0)).is_err());
        assert!(inverse_branch(Branch::G0, c(-1.0, 0.0)).is_ok());
        assert!(inverse_branch(Branch::GLoc, c(-1.0, 0.0)).is_err());
        assert!(inverse_branch(Branch::GLoc, c(1.0, 0.0)).is_ok());
    }

    #[test]
    fn level_one_piece_diameter() {
        // upper half-annulus has diameter 4 (endpoints -2.5 and 1.5)
        let p = puzzle_piece(&PuzzleWord::from_str_bits("0"), 64);
        assert_relative_eq!(p.diameter, 4.0, epsilon = 1e-9);
    }

    #[test]
    fn defining_identity_on_boundaries() {
        // f0(piece("01")) should lie in piece("1")
        let p01 = puzzle_piece(&PuzzleWord::from_str_bits("01"), 32);
        let p1 = puzzle_piece(&PuzzleWord::from_str_bits("1"), 64);
        for &z in &p01.boundary {
            assert!(
                piece_contains(&p1, f0(z), 1e-9),
                "f0({z}) escaped the target piece"
            );
        }
    }

    #[test]
    fn nesting() {
        let outer = puzzle_piece(&PuzzleWord::from_str_bits("01"), 48);
        let inner = puzzle_piece(&PuzzleWord::from_str_bits("010"), 32);
        for &z in &inner.boundary {
            assert!(piece_contains(&outer, z, 1e-9), "{z} not inside parent");
        }
    }

    #[test]
    fn rho_non_increasing() {
        let rho = rho_sequence(12, 16, 256);
        for i in 1..rho.len() {
            assert!(
                rho[i] <= rho[i - 1] + 1e-12,
                "rho not monotone at {i}: {} > {}",
                rho[i],
                rho[i - 1]
            );
        }
    }

    #[test]
    fn annulus_trichotomy() {
        // outside: |f0(z)+1/2| > |z+1/2|
        let mut state = 11u64;
        for _ in 0..200 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let ang = std::f64::consts::TAU * ((state >> 11) as f64 / (1u64 << 53) as f64);
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let r = 2.0 + 3.0 * ((state >> 11) as f64 / (1u64 << 53) as f64);
            let z = c(-0.5, 0.0) + r * c(ang.cos(), ang.sin());
            assert!((f0(z) + 0.5).norm() > (z + 0.5).norm());
        }
        // strictly inside: orbits stay and tend to 0
        let mut state = 13u64;
        for _ in 0..50 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let ang = std::f64::consts::TAU * ((state >> 11) as f64 / (1u64 << 53) as f64);
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let r = 0.49 * ((state >> 11) as f64 / (1u64 << 53) as f64);
            let mut z = c(-0.5, 0.0) + r * c(ang.cos(), ang.sin());
            for _ in 0..50 {
                z = f0(z);
                assert!((z + 0.5).norm() < 0.5);
            }
            assert!(z.norm() < 0.2);
        }
    }

    #[test]
    fn boundary_point_fixed_words() {
        let rho24 = 0.6; // generous cap, checked precisely in rho tests
        let z0 = boundary_point(0.0, 24);
        assert!(z0.norm() < rho24, "theta=0 center {z0}");
        let zh = boundary_point(0.5, 24);
        assert!((zh + 1.0).norm() < rho24, "theta=1/2 center {zh}");
        // f0(-1) = 0 and the words are 000... / 1000...
        assert!(f0(c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn julia_containment_in_closed_annulus() {
        for k in 0..64 {
            let theta = k as f64 / 64.0;
            let z = boundary_point(theta, 20);
            let d = (z + 0.5).norm();
            assert!(
                d < 2.0 + 0.3 && d > 0.5 - 0.3,
                "boundary point at {theta} strayed: |z+1/2| = {d}"
            );
        }
    }

    #[test]
    fn model_checks_all_pass() {
        let rep = model_checks();
        for chk in &rep.checks {
            assert!(chk.pass, "{}: {}", chk.name, chk.detail);
        }
    }

    #[test]
    fn branch_relation_g1_is_minus_one_minus_g0() {
        let mut state = 17u64;
        for _ in 0..100 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let re = -3.0 + 6.0 * ((state >> 11) as f64 / (1u64 << 53) as f64);
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let mut im = -2.0 + 4.0 * ((state >> 11) as f64 / (1u64 << 53) as f64);
            if im == 0.0 {
                im = 1.0;
            }
            let w = c(re, im);
            let lhs = inverse_branch_edge(Branch::G1, w);
            let rhs = -1.0 - inverse_branch_edge(Branch::G0, w);
            assert!((lhs - rhs).norm() < 1e-15);
        }
    }
}
