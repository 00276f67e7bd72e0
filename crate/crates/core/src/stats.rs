//! Empirical distribution functions, the two-sample maximum CDF difference and
//! extraction of curve midpoints.
//!
//! For SLE the midpoint is the point halfway along the curve in fractal
//! variation; for lattice curves it is halfway in step count.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fvar::{fvar_hitting, FvarError};
use crate::geometry::{polar_decompose, Curve, GeometryError, Point};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("sample rejected: {0}")]
    Rejected(String),
    #[error("malformed samples csv at line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Fvar(#[from] FvarError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    samples: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self, StatsError> {
        if samples.is_empty() {
            return Err(StatsError::Domain(
                "empirical cdf needs at least one sample".into(),
            ));
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(StatsError::Domain("NaN sample".into()));
        }
        samples.sort_by(f64::total_cmp);
        Ok(EmpiricalCdf { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Fraction of samples `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.samples.partition_point(|&s| s <= x) as f64 / self.samples.len() as f64
    }

    /// Smallest sample `s` with `F(s) >= q`.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.samples.len();
        let k = ((q * n as f64).ceil() as usize).clamp(1, n);
        self.samples[k - 1]
    }
}

pub fn cdf(samples: &[f64]) -> Result<EmpiricalCdf, StatsError> {
    EmpiricalCdf::new(samples.to_vec())
}

/// `sup_x |F_a(x) - F_b(x)|`, attained at one of the merged jump points.
pub fn ks_distance(a: &EmpiricalCdf, b: &EmpiricalCdf) -> f64 {
    let (xa, xb) = (&a.samples, &b.samples);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut best: f64 = 0.0;
    while i < xa.len() || j < xb.len() {
        let x = match (xa.get(i), xb.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => unreachable!(),
        };
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    best
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MidpointSample {
    pub x: f64,
    pub y: f64,
    pub r: f64,
    pub theta: f64,
    /// Fractal variation (SLE) or natural length (lattice) of the stopped curve.
    #[serde(rename = "T")]
    pub t_total: f64,
    pub n_hits: usize,
}

impl MidpointSample {
    fn from_point(p: Point, t_total: f64, n_hits: usize) -> Result<Self, StatsError> {
        let pol = polar_decompose(p)?;
        Ok(MidpointSample {
            x: p.x,
            y: p.y,
            r: pol.r,
            theta: pol.theta,
            t_total,
            n_hits,
        })
    }

    /// Coordinate by name: `X`, `Y`, `R` or `Theta`.
    pub fn coord(&self, c: Coord) -> f64 {
        match c {
            Coord::X => self.x,
            Coord::Y => self.y,
            Coord::R => self.r,
            Coord::Theta => self.theta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coord {
    X,
    Y,
    R,
    Theta,
}

impl Coord {
    pub const ALL: [Coord; 4] = [Coord::X, Coord::Y, Coord::R, Coord::Theta];

    pub fn name(self) -> &'static str {
        match self {
            Coord::X => "X",
            Coord::Y => "Y",
            Coord::R => "R",
            Coord::Theta => "Theta",
        }
    }
}

/// Hit `k` (1-based) with `k = round(n / 2)`, halves rounded up.
fn middle_hit(n: usize) -> usize {
    n.div_ceil(2)
}

/// Midpoint in fractal variation of an SLE trace stopped on the semicircle `radius`.
pub fn midpoint_sle(
    curve: &Curve,
    dt: f64,
    d_h: f64,
    radius: f64,
) -> Result<MidpointSample, StatsError> {
    if !(radius > 0.0) {
        return Err(StatsError::Domain(format!(
            "radius must be > 0, got {radius}"
        )));
    }
    let hit = curve
        .first_circle_hit(Point::ORIGIN, radius)
        .ok_or_else(|| StatsError::Rejected(format!("curve never reaches radius {radius}")))?;
    let cut = curve.truncate_at_hit(&hit)?;
    midpoint_by_fvar(&cut, dt, d_h, radius)
}

/// Midpoint in fractal variation of an entire curve (strip traces), scaled by `1 / scale`.
pub fn midpoint_sle_full(
    curve: &Curve,
    dt: f64,
    d_h: f64,
    scale: f64,
) -> Result<MidpointSample, StatsError> {
    midpoint_by_fvar(curve, dt, d_h, scale)
}

fn midpoint_by_fvar(
    curve: &Curve,
    dt: f64,
    d_h: f64,
    scale: f64,
) -> Result<MidpointSample, StatsError> {
    let res = fvar_hitting(curve, dt, d_h)?;
    if res.n < 2 {
        return Err(StatsError::Rejected(format!(
            "only {} fractal-variation hits",
            res.n
        )));
    }
    let p = res.hit_points[middle_hit(res.n) - 1] * scale.recip();
    MidpointSample::from_point(p, res.value, res.n)
}

/// Midpoint in step count of a lattice curve stopped on the semicircle `radius`.
///
/// `m` is the first vertex index with `|p_m| >= radius`; the midpoint is vertex
/// `floor(m / 2)`.
pub fn midpoint_lattice(curve: &Curve, radius: f64) -> Result<MidpointSample, StatsError> {
    if !(radius > 0.0) {
        return Err(StatsError::Domain(format!(
            "radius must be > 0, got {radius}"
        )));
    }
    let r2 = radius * radius;
    let m = curve
        .points()
        .iter()
        .position(|p| p.x * p.x + p.y * p.y >= r2)
        .ok_or_else(|| StatsError::Rejected(format!("walk never reaches radius {radius}")))?;
    midpoint_at_step(curve, m, radius)
}

/// Midpoint in step count of an entire lattice curve, scaled by `1 / scale`.
pub fn midpoint_lattice_full(curve: &Curve, scale: f64) -> Result<MidpointSample, StatsError> {
    midpoint_at_step(curve, curve.len() - 1, scale)
}

fn midpoint_at_step(curve: &Curve, m: usize, scale: f64) -> Result<MidpointSample, StatsError> {
    if m < 2 {
        return Err(StatsError::Rejected(format!("stopped after {m} steps")));
    }
    let p = curve.points()[m / 2] * scale.recip();
    let t = curve.params()[m] - curve.params()[0];
    MidpointSample::from_point(p, t, m)
}

pub const SAMPLES_HEADER: &str = "sample_id,x,y,r,theta,T,n_hits";

pub fn write_samples<W: Write>(rows: &[(usize, MidpointSample)], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{SAMPLES_HEADER}")?;
    for (id, s) in rows {
        writeln!(
            w,
            "{id},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            s.x, s.y, s.r, s.theta, s.t_total, s.n_hits
        )?;
    }
    Ok(())
}

pub fn read_samples<R: BufRead>(r: R) -> Result<Vec<(usize, MidpointSample)>, StatsError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line.trim() != SAMPLES_HEADER {
                return Err(StatsError::Csv {
                    line: 1,
                    msg: format!("expected header `{SAMPLES_HEADER}`"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: String| StatsError::Csv { line: i + 1, msg };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(bad(format!("expected 7 fields, got {}", f.len())));
        }
        let num = |k: usize| {
            f[k].trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("field {k}: {e}")))
        };
        let id = f[0]
            .trim()
            .parse::<usize>()
            .map_err(|e| bad(format!("sample_id: {e}")))?;
        let n_hits = f[6]
            .trim()
            .parse::<usize>()
            .map_err(|e| bad(format!("n_hits: {e}")))?;
        out.push((
            id,
            MidpointSample {
                x: num(1)?,
                y: num(2)?,
                r: num(3)?,
                theta: num(4)?,
                t_total: num(5)?,
                n_hits,
            },
        ));
    }
    Ok(out)
}

/// Distance for one coordinate, with both sample counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoordComparison {
    pub ks: f64,
    pub n_a: usize,
    pub n_b: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    #[serde(rename = "X")]
    pub x: CoordComparison,
    #[serde(rename = "Y")]
    pub y: CoordComparison,
    #[serde(rename = "R")]
    pub r: CoordComparison,
    #[serde(rename = "Theta")]
    pub theta: CoordComparison,
}

impl Comparison {
    pub fn get(&self, c: Coord) -> CoordComparison {
        match c {
            Coord::X => self.x,
            Coord::Y => self.y,
            Coord::R => self.r,
            Coord::Theta => self.theta,
        }
    }
}

pub fn compare_samples(
    a: &[MidpointSample],
    b: &[MidpointSample],
) -> Result<Comparison, StatsError> {
    let one = |c: Coord| -> Result<CoordComparison, StatsError> {
        let ca = EmpiricalCdf::new(a.iter().map(|s| s.coord(c)).collect())?;
        let cb = EmpiricalCdf::new(b.iter().map(|s| s.coord(c)).collect())?;
        Ok(CoordComparison {
            ks: ks_distance(&ca, &cb),
            n_a: a.len(),
            n_b: b.len(),
        })
    };
    Ok(Comparison {
        x: one(Coord::X)?,
        y: one(Coord::Y)?,
        r: one(Coord::R)?,
        theta: one(Coord::Theta)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cdf_basics() {
        let c = cdf(&[3.0, 1.0, 2.0]).unwrap();
        assert!((c.eval(2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.eval(0.5), 0.0);
        assert_eq!(c.eval(3.0), 1.0);
        assert_eq!(c.eval(10.0), 1.0);
        let t = cdf(&[1.0, 1.0, 2.0]).unwrap();
        assert!((t.eval(1.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!(cdf(&[]).is_err());
        assert_eq!(t.quantile(0.5), 1.0);
        assert_eq!(t.quantile(1.0), 2.0);
    }

    #[test]
    fn ks_examples() {
        let a = cdf(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(ks_distance(&a, &a), 0.0);
        let lo = cdf(&[0.0, 0.5, 1.0]).unwrap();
        let hi = cdf(&[2.0, 3.0]).unwrap();
        assert_eq!(ks_distance(&lo, &hi), 1.0);
    }

    #[test]
    fn ks_against_dense_grid() {
        let a = cdf(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = cdf(&[1.5, 2.5, 3.5, 4.5]).unwrap();
        let grid = (0..=6000).map(|i| i as f64 * 1e-3);
        let brute = grid
            .map(|x| (a.eval(x) - b.eval(x)).abs())
            .fold(0.0, f64::max);
        assert_eq!(brute, 0.25);
        assert_eq!(ks_distance(&a, &b), 0.25);
    }

    #[test]
    fn midpoint_of_a_ray() {
        let (s, c) = (std::f64::consts::FRAC_PI_3).sin_cos();
        let pts = (0..=30)
            .map(|k| Point::new(c, s) * (0.05 * k as f64))
            .collect();
        let curve = Curve::from_points(pts).unwrap();
        let m = midpoint_sle(&curve, 0.1, 1.0, 1.0).unwrap();
        assert_eq!(m.n_hits, 10);
        assert!((m.x - 0.25).abs() < 1e-12 && (m.y - 3f64.sqrt() / 4.0).abs() < 1e-12);
        assert!((m.theta - std::f64::consts::FRAC_PI_3).abs() < 1e-12);

        let big = midpoint_sle(&curve.scaled(2.0), 0.2, 1.0, 2.0).unwrap();
        assert_eq!(big.n_hits, m.n_hits);
        assert!((big.x - m.x).abs() < 1e-12 && (big.y - m.y).abs() < 1e-12);
    }

    #[test]
    fn midpoint_of_a_lattice_ray() {
        let pts = (0..=40).map(|k| Point::new(0.0, k as f64)).collect();
        let curve = Curve::from_points(pts).unwrap();
        let m = midpoint_lattice(&curve, 10.0).unwrap();
        assert_eq!((m.x, m.y), (0.0, 0.5));
        assert_eq!(m.n_hits, 10);
        assert!(matches!(
            midpoint_lattice(&curve, 100.0),
            Err(StatsError::Rejected(_))
        ));
        let full = midpoint_lattice_full(&curve, 40.0).unwrap();
        assert_eq!((full.x, full.y), (0.0, 0.5));
    }

    #[test]
    fn odd_hit_count_rounds_up() {
        assert_eq!(middle_hit(2), 1);
        assert_eq!(middle_hit(3), 2);
        assert_eq!(middle_hit(10), 5);
    }

    #[test]
    fn samples_csv_round_trip() {
        let s = MidpointSample::from_point(Point::new(-0.3, 0.4), 1.25, 7).unwrap();
        let mut buf = Vec::new();
        write_samples(&[(3, s)], &mut buf).unwrap();
        let back = read_samples(buf.as_slice()).unwrap();
        assert_eq!(back, vec![(3, s)]);
    }

    #[test]
    fn reflection_negates_x() {
        let pts = vec![
            Point::new(0.0, 0.0),
            Point::new(0.3, 0.4),
            Point::new(0.5, 1.2),
            Point::new(-0.2, 1.5),
        ];
        let c = Curve::from_points(pts).unwrap();
        let a = midpoint_sle(&c, 0.01, 1.5, 1.0).unwrap();
        let b = midpoint_sle(&c.reflected(), 0.01, 1.5, 1.0).unwrap();
        assert_eq!(a.x, -b.x);
        assert_eq!(a.y, b.y);
        assert!((a.theta - (std::f64::consts::PI - b.theta)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn ks_properties(a in prop::collection::vec(-5.0f64..5.0, 1..40), b in prop::collection::vec(-5.0f64..5.0, 1..40)) {
            let ca = cdf(&a).unwrap();
            let cb = cdf(&b).unwrap();
            let d = ks_distance(&ca, &cb);
            prop_assert!((0.0..=1.0).contains(&d));
            prop_assert_eq!(d, ks_distance(&cb, &ca));
            prop_assert_eq!(ks_distance(&ca, &ca), 0.0);
            let brute = a.iter().chain(&b).map(|&x| (ca.eval(x) - cb.eval(x)).abs()).fold(0.0, f64::max);
            prop_assert_eq!(d, brute);
        }
    }
}
