//! Closed-form incremental maps for square-root driving.
//!
//! On a capacity interval of length `dt` with driving `U(s) = base + delta *
//! sqrt(s / dt)` the Loewner hull is a straight slit. Its inverse map, in
//! coordinates shifted by `base`, is
//!
//! ```text
//! f(w) = (w + p)^alpha * (w - q)^(1 - alpha)
//! ```
//!
//! with `alpha*p = (1-alpha)*q` (no constant term at infinity),
//! `alpha*p^2 + (1-alpha)*q^2 = 4 dt` (so `f(w) = w - 2dt/w + ...`) and critical
//! point `alpha*q - (1-alpha)*p = delta` (the tip preimage). Writing
//! `s = delta / sqrt(dt)` these give `2 alpha - 1 = s / sqrt(16 + s^2)`.
//!
//! Maps with negative `delta` are evaluated as mirror images of the map with
//! `|delta|`, which makes reflection of a whole driving path an exact (bitwise)
//! reflection of the trace.

use num_complex::Complex64;

use super::LoewnerError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitMap {
    dt: f64,
    delta: f64,
    base: f64,
    // canonical (delta >= 0) exponents; alpha_c >= 1/2
    alpha_c: f64,
    beta_c: f64,
    // canonical p (left of base) and q (right of base)
    p_c: f64,
    q_c: f64,
    mirrored: bool,
}

impl SlitMap {
    /// Solves the slit constraints for capacity `dt` and driving increment `delta`.
    pub fn solve(dt: f64, delta: f64) -> Result<SlitMap, LoewnerError> {
        SlitMap::new(dt, delta, 0.0)
    }

    pub fn new(dt: f64, delta: f64, base: f64) -> Result<SlitMap, LoewnerError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(LoewnerError::Domain(format!(
                "slit capacity must be > 0, got {dt}"
            )));
        }
        if !delta.is_finite() || !base.is_finite() {
            return Err(LoewnerError::Domain(format!(
                "non-finite driving data (delta={delta}, base={base})"
            )));
        }
        let s = delta.abs() / dt.sqrt();
        let r = (16.0 + s * s).sqrt();
        let alpha_c = 0.5 * (1.0 + s / r);
        // 1 - alpha without cancellation for large s
        let beta_c = 8.0 / (r * (r + s));
        let q_c = 2.0 * (alpha_c * dt / beta_c).sqrt();
        let p_c = beta_c * q_c / alpha_c;
        Ok(SlitMap {
            dt,
            delta,
            base,
            alpha_c,
            beta_c,
            p_c,
            q_c,
            mirrored: delta < 0.0,
        })
    }

    pub fn with_base(mut self, base: f64) -> SlitMap {
        self.base = base;
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    /// Exponent of `(w + p)`.
    pub fn alpha(&self) -> f64 {
        if self.mirrored {
            self.beta_c
        } else {
            self.alpha_c
        }
    }

    /// `1 - alpha`, computed without cancellation.
    pub fn beta(&self) -> f64 {
        if self.mirrored {
            self.alpha_c
        } else {
            self.beta_c
        }
    }

    pub fn p(&self) -> f64 {
        if self.mirrored {
            self.q_c
        } else {
            self.p_c
        }
    }

    pub fn q(&self) -> f64 {
        if self.mirrored {
            self.p_c
        } else {
            self.q_c
        }
    }

    /// Angle of the slit with the positive real axis.
    pub fn slit_angle(&self) -> f64 {
        self.beta() * std::f64::consts::PI
    }

    /// Real interval `[base - p, base + q]` that is mapped onto the two sides of the slit.
    pub fn preimage_interval(&self) -> (f64, f64) {
        (self.base - self.p(), self.base + self.q())
    }

    /// Slit tip `f(base + delta)`.
    pub fn tip(&self) -> Complex64 {
        self.apply(Complex64::new(self.base + self.delta, 0.0))
    }

    /// Evaluates the map at `w` in the closed upper half plane.
    #[inline]
    pub fn apply(&self, w: Complex64) -> Complex64 {
        let mut f = self.apply_relative(Complex64::new(w.re - self.base, w.im));
        f.re += self.base;
        f
    }

    /// The map in coordinates centred at `base`: `f(base + z) - base`.
    #[inline]
    pub fn apply_relative(&self, z: Complex64) -> Complex64 {
        let mut z = Complex64::new(z.re, upper(z.im));
        if self.mirrored {
            z.re = -z.re;
        }
        let mut f = self.apply_canonical(z);
        if self.mirrored {
            f.re = -f.re;
        }
        f
    }

    #[inline]
    fn apply_canonical(&self, z: Complex64) -> Complex64 {
        let (p, q) = (self.p_c, self.q_c);
        let a = Complex64::new(z.re + p, z.im);
        let b = Complex64::new(z.re - q, z.im);
        if z.im == 0.0 {
            if z.re >= q {
                let v = a.re.powf(self.alpha_c) * b.re.powf(self.beta_c);
                return Complex64::new(v, 0.0);
            }
            if z.re <= -p {
                let v = (-a.re).powf(self.alpha_c) * (-b.re).powf(self.beta_c);
                return Complex64::new(-v, 0.0);
            }
        }
        if self.alpha_c == 0.5 {
            return sqrt_upper(a * b);
        }
        let log_mod = 0.5 * (self.alpha_c * a.norm_sqr().ln() + self.beta_c * b.norm_sqr().ln());
        let arg = self.alpha_c * a.im.atan2(a.re) + self.beta_c * b.im.atan2(b.re);
        let m = log_mod.exp();
        let (s, c) = arg.sin_cos();
        Complex64::new(m * c, upper(m * s))
    }

    /// Derivative `f'(w)`.
    pub fn derivative(&self, w: Complex64) -> Complex64 {
        let z = w - self.base;
        let f = self.apply(w);
        f * (self.alpha() / (z + self.p()) + self.beta() / (z - self.q()))
    }

    /// Solves `f(w) = z` for `w` in the upper half plane by Newton iteration.
    /// Intended for points away from the slit.
    pub fn invert(&self, z: Complex64) -> Option<Complex64> {
        // hydrodynamic start: g(z) ~ z + 2 dt / (z - base)
        let zs = z - self.base;
        let mut w = z + if zs.norm() > 0.0 {
            2.0 * self.dt / zs
        } else {
            Complex64::new(0.0, 0.0)
        };
        if w.im < 0.0 {
            w.im = 0.0;
        }
        for _ in 0..100 {
            let f = self.apply(w);
            let df = self.derivative(w);
            let step = (f - z) / df;
            let mut next = w - step;
            if next.im < 0.0 {
                next.im = 0.5 * w.im;
            }
            if (next - w).norm() <= 1e-15 * (1.0 + w.norm()) {
                return Some(next);
            }
            w = next;
        }
        let f = self.apply(w);
        ((f - z).norm() < 1e-10 * (1.0 + z.norm())).then_some(w)
    }
}

/// Clamps a negative or `-0.0` imaginary part to `+0.0` so that principal
/// branches stay continuous from above on the real axis.
#[inline]
fn upper(y: f64) -> f64 {
    if y > 0.0 {
        y
    } else {
        0.0
    }
}

/// The square root of `z` lying in the closed upper half plane (argument of
/// `z` taken in `[0, 2 pi)`). Conjugating `z` mirrors the result exactly.
#[inline]
fn sqrt_upper(z: Complex64) -> Complex64 {
    let (x, y) = (z.re, z.im);
    if x == 0.0 && y == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let t = (0.5 * (x.abs() + x.hypot(y))).sqrt();
    let r = 0.5 * y / t;
    if x < 0.0 {
        Complex64::new(r, t)
    } else if y >= 0.0 {
        Complex64::new(t, r)
    } else {
        Complex64::new(-t, -r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn vertical_slit_parameters() {
        let m = SlitMap::solve(0.01, 0.0).unwrap();
        assert_eq!(m.alpha(), 0.5);
        assert_eq!(m.p(), 0.2);
        assert_eq!(m.q(), 0.2);
    }

    #[test]
    fn vertical_slit_values() {
        let m = SlitMap::solve(0.01, 0.0).unwrap();
        let tip = m.apply(c(0.0, 0.0));
        assert_eq!(tip, c(0.0, 0.2));
        let far = m.apply(c(10.0, 0.0));
        assert!((far.re - (100.0f64 - 0.04).sqrt()).abs() < 1e-14);
        assert_eq!(far.im, 0.0);
        let left = m.apply(c(-10.0, 0.0));
        assert!((left.re + (100.0f64 - 0.04).sqrt()).abs() < 1e-14);
        assert_eq!(left.im, 0.0);
    }

    #[test]
    fn constraints_hold() {
        for &(dt, delta) in &[
            (1.0, 2.0),
            (1.0, -2.0),
            (0.01, 0.3),
            (1e-6, 1e-2),
            (2.0, -0.1),
        ] {
            let m = SlitMap::solve(dt, delta).unwrap();
            let (a, b, p, q) = (m.alpha(), m.beta(), m.p(), m.q());
            assert!((a + b - 1.0).abs() < 1e-15);
            assert!((a * p - b * q).abs() < 1e-10 * (p + q));
            assert!(((a * p * p + b * q * q) / (4.0 * dt) - 1.0).abs() < 1e-10);
            assert!(((a * q - b * p) - delta).abs() < 1e-10 * delta.abs().max(1e-300));
            assert!(a > 0.0 && a < 1.0);
        }
    }

    #[test]
    fn reflection_of_parameters() {
        let m = SlitMap::solve(1.0, 2.0).unwrap();
        let n = SlitMap::solve(1.0, -2.0).unwrap();
        assert_eq!(m.alpha(), n.beta());
        assert_eq!(m.p(), n.q());
        assert_eq!(m.q(), n.p());
    }

    #[test]
    fn bad_capacity() {
        assert!(matches!(
            SlitMap::solve(0.0, 1.0),
            Err(LoewnerError::Domain(_))
        ));
        assert!(matches!(
            SlitMap::solve(-1.0, 1.0),
            Err(LoewnerError::Domain(_))
        ));
    }

    #[test]
    fn critical_point_maps_to_tip_at_slit_angle() {
        let m = SlitMap::solve(1.0, 2.0).unwrap();
        let tip = m.tip();
        assert!((tip.arg() - m.slit_angle()).abs() < 1e-12);
        // tip is the point of the slit farthest from the base
        for x in [-m.p() * 0.9, -0.3, 0.5, 1.0, 1.9, 2.1, m.q() * 0.9] {
            assert!(m.apply(c(x, 0.0)).norm() <= tip.norm() + 1e-12);
            assert!((m.apply(c(x, 0.0)).arg() - m.slit_angle()).abs() < 1e-12);
        }
    }

    #[test]
    fn hydrodynamic_expansion() {
        let m = SlitMap::new(0.3, 0.7, 0.2).unwrap();
        for y in [100.0, 1000.0] {
            let w = c(0.1, y);
            let f = m.apply(w);
            let expect = w - 2.0 * 0.3 / (w - 0.2);
            assert!((f - expect).norm() < 10.0 / (y * y));
        }
    }

    #[test]
    fn inverse_round_trip() {
        let m = SlitMap::new(0.5, -0.8, 0.3).unwrap();
        for &w in &[c(1.0, 1.0), c(-2.0, 0.5), c(0.0, 3.0), c(5.0, 0.1)] {
            let z = m.apply(w);
            let back = m.invert(z).unwrap();
            assert!((back - w).norm() < 1e-10, "{w} -> {z} -> {back}");
        }
    }

    #[test]
    fn upper_half_plane_preserved() {
        let m = SlitMap::new(0.2, 1.3, -0.4).unwrap();
        for i in 0..200 {
            let x = -3.0 + 0.03 * i as f64;
            for y in [0.0, -0.0, 1e-12, 0.1, 2.0] {
                let f = m.apply(c(x, y));
                assert!(f.im >= 0.0 && f.re.is_finite(), "{x} {y} -> {f}");
            }
        }
    }
}
