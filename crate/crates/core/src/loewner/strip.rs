use num_complex::Complex64;

use super::LoewnerError;

/// Conformal map from the upper half plane onto the strip `0 <= Im <= height`,
/// `z -> (height / pi) log((1 + z) / (1 - z))`, sending `0 -> 0`, `i -> i height/2`
/// and `infinity -> i height`.
pub fn strip_map(z: Complex64, height: f64) -> Result<Complex64, LoewnerError> {
    let one = Complex64::new(1.0, 0.0);
    if z.im == 0.0 && (z.re == 1.0 || z.re == -1.0) {
        return Err(LoewnerError::Domain(format!("strip map has a pole at {z}")));
    }
    // keep the principal branch continuous from above on the real axis
    let z = Complex64::new(z.re, if z.im > 0.0 { z.im } else { 0.0 });
    let w = (one + z) / (one - z);
    // (1+z)/(1-z) has Im >= 0 for Im z >= 0; for z real beyond 1 it lies on the
    // negative axis where the principal log must take +i pi
    let w = Complex64::new(w.re, if w.im > 0.0 { w.im } else { 0.0 });
    let l = Complex64::new(0.5 * w.norm_sqr().ln(), w.im.atan2(w.re));
    Ok(l * (height / std::f64::consts::PI))
}
