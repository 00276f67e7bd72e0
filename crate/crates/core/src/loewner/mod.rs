//! Chordal SLE traces from the Loewner equation with piecewise square-root
//! driving.
//!
//! The hull at capacity time `t_n` is approximated by composing one straight
//! slit map per capacity interval; the trace point is
//! `gamma(t_n) = f_1 o f_2 o ... o f_n (U(t_n))`.

mod compose;
mod sampler;
mod slit;
mod strip;

use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::geometry::Point;

pub use compose::{trace_point_fast, LaurentComposer, LaurentOptions};
pub use sampler::{sample_sle, sample_sle_seeded, SleConfig, SleTrace, StopRule};
pub use slit::SlitMap;
pub use strip::strip_map;

#[derive(Debug, Error, PartialEq)]
pub enum LoewnerError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("refinement exceeded depth {depth} on capacity interval [{t_a}, {t_b}]")]
    DepthExceeded { depth: u32, t_a: f64, t_b: f64 },
    #[error("sampler exceeded {0} stored points without meeting the stop rule")]
    TooManyPoints(usize),
}

/// Driving values `U(t_k)` at increasing capacity times, `t_0 = 0`, `U(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivingPath {
    pub kappa: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl DrivingPath {
    pub fn new(kappa: f64) -> Self {
        DrivingPath {
            kappa,
            times: vec![0.0],
            values: vec![0.0],
        }
    }

    /// Brownian driving `sqrt(kappa) B` on a uniform grid of `n` steps of size `dt`.
    pub fn brownian<R: Rng + ?Sized>(kappa: f64, dt: f64, n: usize, rng: &mut R) -> Self {
        let mut path = DrivingPath::new(kappa);
        let sd = (kappa * dt).sqrt();
        let mut u = 0.0;
        for k in 1..=n {
            let g: f64 = rng.sample(StandardNormal);
            u += sd * g;
            path.times.push(k as f64 * dt);
            path.values.push(u);
        }
        path
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// One slit map per interval, in time order.
    pub fn slit_maps(&self) -> Result<Vec<SlitMap>, LoewnerError> {
        self.times
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, u)| SlitMap::new(t[1] - t[0], u[1] - u[0], u[0]))
            .collect()
    }

    /// Same path with every driving value negated.
    pub fn reflected(&self) -> DrivingPath {
        DrivingPath {
            kappa: self.kappa,
            times: self.times.clone(),
            values: self.values.iter().map(|u| -u).collect(),
        }
    }

    /// Debug dump as `t,u` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,u")?;
        for (t, u) in self.times.iter().zip(&self.values) {
            writeln!(w, "{t:.16e},{u:.16e}")?;
        }
        Ok(())
    }
}

/// `f_1 o ... o f_n (u)`; the first map in the slice is applied last.
pub fn trace_point(maps: &[SlitMap], u: f64) -> Point {
    compose_exact(maps, Complex64::new(u, 0.0)).into()
}

pub fn compose_exact(maps: &[SlitMap], z: Complex64) -> Complex64 {
    maps.iter().rev().fold(z, |z, m| m.apply(z))
}

/// Inverse of the composed map: `g = g_n o ... o g_1` with `g_j = f_j^{-1}`.
/// Only meaningful for points well away from the hull.
pub fn invert_composition(maps: &[SlitMap], z: Complex64) -> Option<Complex64> {
    maps.iter().try_fold(z, |z, m| m.invert(z))
}

/// Trace points `gamma(t_k)` for every time of the driving path, by exact composition.
pub fn trace_exact(path: &DrivingPath) -> Result<Vec<Point>, LoewnerError> {
    let maps = path.slit_maps()?;
    let mut out = Vec::with_capacity(path.len());
    out.push(Point::ORIGIN);
    for k in 1..path.len() {
        out.push(trace_point(&maps[..k], path.values[k]));
    }
    Ok(out)
}

/// Brownian-bridge value of `sqrt(kappa) B` at the midpoint of `[t_a, t_b]`.
pub fn bridge_midpoint<R: Rng + ?Sized>(
    u_a: f64,
    u_b: f64,
    t_a: f64,
    t_b: f64,
    kappa: f64,
    rng: &mut R,
) -> Result<f64, LoewnerError> {
    if !(t_a < t_b) {
        return Err(LoewnerError::Domain(format!(
            "bridge needs t_a < t_b, got [{t_a}, {t_b}]"
        )));
    }
    let mean = 0.5 * (u_a + u_b);
    let g: f64 = rng.sample(StandardNormal);
    let sd = (0.25 * kappa * (t_b - t_a)).sqrt();
    Ok(mean + sd * g)
}
