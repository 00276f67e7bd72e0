//! Planar curve primitives shared by the SLE engine, the lattice samplers and
//! the fractal-variation estimators.
//!
//! A [`Curve`] is an ordered polyline together with a strictly increasing
//! parameter per vertex. Between stored vertices the curve is the linear
//! interpolant, so every query here (interpolation, circle hits, truncation)
//! is exact on the polyline rather than snapped to the nearest vertex.

use std::fmt;
use std::io::{BufRead, Write};
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("parameter {s} outside curve range [{lo}, {hi}]")]
    OutOfRange { s: f64, lo: f64, hi: f64 },
    #[error("curve needs at least 2 points, got {0}")]
    TooShort(usize),
    #[error("points ({points}) and params ({params}) differ in length")]
    LengthMismatch { points: usize, params: usize },
    #[error("params must be strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("polar angle undefined at the origin")]
    Origin,
    #[error("malformed curve csv at line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    /// Mirror image across the imaginary axis.
    pub fn reflect(self) -> Point {
        Point::new(-self.x, self.y)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

impl From<Complex64> for Point {
    fn from(z: Complex64) -> Self {
        Point::new(z.re, z.im)
    }
}

impl From<Point> for Complex64 {
    fn from(p: Point) -> Self {
        Complex64::new(p.x, p.y)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarPoint {
    pub r: f64,
    pub theta: f64,
}

impl PolarPoint {
    pub fn to_point(self) -> Point {
        Point::new(self.r * self.theta.cos(), self.r * self.theta.sin())
    }
}

pub fn polar_decompose(p: Point) -> Result<PolarPoint, GeometryError> {
    if p.x == 0.0 && p.y == 0.0 {
        return Err(GeometryError::Origin);
    }
    Ok(PolarPoint {
        r: p.norm(),
        theta: p.y.atan2(p.x),
    })
}

/// Location on a polyline: segment index `seg` (from vertex `seg` to `seg + 1`)
/// and fraction `u` in `[0, 1]` along it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentPos {
    pub seg: usize,
    pub u: f64,
}

/// Result of a circle-hit query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleHit {
    pub param: f64,
    pub point: Point,
    pub pos: SegmentPos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    points: Vec<Point>,
    params: Vec<f64>,
}

impl Curve {
    pub fn new(points: Vec<Point>, params: Vec<f64>) -> Result<Self, GeometryError> {
        if points.len() != params.len() {
            return Err(GeometryError::LengthMismatch {
                points: points.len(),
                params: params.len(),
            });
        }
        if points.len() < 2 {
            return Err(GeometryError::TooShort(points.len()));
        }
        if let Some(i) = params.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(GeometryError::NotIncreasing(i + 1));
        }
        Ok(Curve { points, params })
    }

    /// Points parametrized by their index `0, 1, 2, ...`.
    pub fn from_points(points: Vec<Point>) -> Result<Self, GeometryError> {
        let params = (0..points.len()).map(|i| i as f64).collect();
        Curve::new(points, params)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn start(&self) -> Point {
        self.points[0]
    }

    pub fn end(&self) -> Point {
        self.points[self.points.len() - 1]
    }

    pub fn param_range(&self) -> (f64, f64) {
        (self.params[0], self.params[self.params.len() - 1])
    }

    pub fn into_parts(self) -> (Vec<Point>, Vec<f64>) {
        (self.points, self.params)
    }

    /// Linear interpolation at parameter `s`; exact at stored parameters.
    pub fn point_at(&self, s: f64) -> Result<Point, GeometryError> {
        let (lo, hi) = self.param_range();
        if !(s >= lo && s <= hi) {
            return Err(GeometryError::OutOfRange { s, lo, hi });
        }
        let pos = self.locate(s);
        Ok(self.point_on(pos))
    }

    /// Segment position of parameter `s` (assumed in range).
    fn locate(&self, s: f64) -> SegmentPos {
        // index of first param strictly greater than s
        let k = self.params.partition_point(|&t| t <= s);
        if k == 0 {
            return SegmentPos { seg: 0, u: 0.0 };
        }
        let i = k - 1;
        if i >= self.points.len() - 1 {
            return SegmentPos {
                seg: self.points.len() - 2,
                u: 1.0,
            };
        }
        let (t0, t1) = (self.params[i], self.params[i + 1]);
        SegmentPos {
            seg: i,
            u: (s - t0) / (t1 - t0),
        }
    }

    pub fn point_on(&self, pos: SegmentPos) -> Point {
        let a = self.points[pos.seg];
        if pos.u == 0.0 {
            return a;
        }
        let b = self.points[pos.seg + 1];
        if pos.u == 1.0 {
            return b;
        }
        a + (b - a) * pos.u
    }

    pub fn param_on(&self, pos: SegmentPos) -> f64 {
        let t0 = self.params[pos.seg];
        if pos.u == 0.0 {
            return t0;
        }
        let t1 = self.params[pos.seg + 1];
        if pos.u == 1.0 {
            return t1;
        }
        t0 + (t1 - t0) * pos.u
    }

    /// First point where the curve reaches distance `radius` from `center`.
    ///
    /// The start of the curve must be strictly inside the circle.
    pub fn first_circle_hit(&self, center: Point, radius: f64) -> Option<CircleHit> {
        self.circle_hit_from(SegmentPos { seg: 0, u: 0.0 }, center, radius)
    }

    /// First point after `from` at distance `radius` from `center`, assuming the
    /// point at `from` is inside the circle. Scans segments in order.
    pub fn circle_hit_from(
        &self,
        from: SegmentPos,
        center: Point,
        radius: f64,
    ) -> Option<CircleHit> {
        let r2 = radius * radius;
        let n = self.points.len();
        let mut seg = from.seg;
        let mut u_min = from.u;
        while seg + 1 < n {
            let a = self.points[seg];
            let b = self.points[seg + 1];
            // only segments whose far end is outside (up to rounding) can contain the crossing
            let eb = b - center;
            if eb.x * eb.x + eb.y * eb.y >= r2 * (1.0 - 1e-12) {
                if let Some(u) = segment_circle_exit(a, b, center, radius, u_min) {
                    let pos = SegmentPos { seg, u };
                    return Some(CircleHit {
                        param: self.param_on(pos),
                        point: self.point_on(pos),
                        pos,
                    });
                }
            }
            seg += 1;
            u_min = 0.0;
        }
        None
    }

    /// The curve restricted to parameters `<= s`, ending exactly at `point_at(s)`.
    pub fn truncate_at(&self, s: f64) -> Result<Curve, GeometryError> {
        let end = self.point_at(s)?;
        let pos = self.locate(s);
        self.truncate_at_pos(pos, s, end)
    }

    fn truncate_at_pos(&self, pos: SegmentPos, s: f64, end: Point) -> Result<Curve, GeometryError> {
        let keep = if pos.u == 0.0 { pos.seg } else { pos.seg + 1 };
        let mut points = self.points[..keep].to_vec();
        let mut params = self.params[..keep].to_vec();
        if keep < self.points.len() && pos.u == 0.0 {
            // s is exactly a stored parameter
            points.push(self.points[keep]);
            params.push(self.params[keep]);
        } else {
            points.push(end);
            params.push(s);
        }
        Curve::new(points, params)
    }

    /// The curve up to (and ending at) a circle hit.
    pub fn truncate_at_hit(&self, hit: &CircleHit) -> Result<Curve, GeometryError> {
        let keep = hit.pos.seg + 1;
        let mut points = self.points[..keep].to_vec();
        let mut params = self.params[..keep].to_vec();
        if hit.pos.u > 0.0 {
            points.push(hit.point);
            params.push(hit.param);
        }
        Curve::new(points, params)
    }

    /// Every point scaled by `k` about the origin; params unchanged.
    pub fn scaled(&self, k: f64) -> Curve {
        Curve {
            points: self.points.iter().map(|&p| p * k).collect(),
            params: self.params.clone(),
        }
    }

    pub fn reflected(&self) -> Curve {
        Curve {
            points: self.points.iter().map(|p| p.reflect()).collect(),
            params: self.params.clone(),
        }
    }

    /// Same points with new params; fails unless they are strictly increasing.
    pub fn with_params(&self, params: Vec<f64>) -> Result<Curve, GeometryError> {
        Curve::new(self.points.clone(), params)
    }

    /// Writes `param,x,y` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), GeometryError> {
        writeln!(w, "param,x,y")?;
        for (p, t) in self.points.iter().zip(&self.params) {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", t, p.x, p.y)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Curve, GeometryError> {
        let mut points = Vec::new();
        let mut params = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if i == 0 {
                if line.trim() != "param,x,y" {
                    return Err(GeometryError::Csv {
                        line: 1,
                        msg: format!("expected header `param,x,y`, got `{line}`"),
                    });
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| GeometryError::Csv {
                    line: i + 1,
                    msg: e.to_string(),
                })
            };
            if fields.len() != 3 {
                return Err(GeometryError::Csv {
                    line: i + 1,
                    msg: format!("expected 3 fields, got {}", fields.len()),
                });
            }
            params.push(parse(fields[0])?);
            points.push(Point::new(parse(fields[1])?, parse(fields[2])?));
        }
        Curve::new(points, params)
    }
}

/// Largest root `u` in `(u_min, 1]` of `|a + u (b - a) - c|^2 = r^2`, i.e. where
/// the segment leaves the circle, given the point at `u_min` is inside.
fn segment_circle_exit(a: Point, b: Point, c: Point, r: f64, u_min: f64) -> Option<f64> {
    let d = b - a;
    let e = a - c;
    let qa = d.x * d.x + d.y * d.y;
    if qa == 0.0 {
        return None;
    }
    let qb = 2.0 * (d.x * e.x + d.y * e.y);
    let qc = e.x * e.x + e.y * e.y - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        // tangency lost to rounding counts as no crossing
        return None;
    }
    let s = disc.sqrt();
    let u = if qb >= 0.0 {
        if s + qb == 0.0 {
            return None;
        }
        (2.0 * qc) / (-qb - s)
    } else {
        (-qb + s) / (2.0 * qa)
    };
    if u > u_min && u <= 1.0 {
        Some(u)
    } else if u > 1.0 && u < 1.0 + 1e-12 {
        // far endpoint sits on the circle up to rounding
        Some(1.0)
    } else {
        None
    }
}
