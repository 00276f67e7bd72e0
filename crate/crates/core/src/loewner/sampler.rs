use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::compose::{LaurentComposer, LaurentOptions};
use super::{bridge_midpoint, strip_map, DrivingPath, LoewnerError, SlitMap};
use crate::geometry::{Curve, Point};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum StopRule {
    /// Stop at the first stored point with `|gamma| >= radius`.
    Semicircle { radius: f64 },
    /// Trace is mapped to the strip `0 <= Im <= 1`; stop once the strip image of
    /// the tip is within `dist` of `i`.
    StripTip { dist: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SleConfig {
    pub kappa: f64,
    /// Maximum distance between consecutive stored points.
    pub dx: f64,
    pub stop: StopRule,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub use_laurent: bool,
    #[serde(default = "default_order")]
    pub laurent_order: usize,
    #[serde(default = "default_block")]
    pub laurent_block: usize,
    #[serde(default = "default_depth")]
    pub max_depth: u32,
    #[serde(default = "default_max_points")]
    pub max_points: usize,
}

fn default_true() -> bool {
    true
}
fn default_order() -> usize {
    LaurentOptions::default().order
}
fn default_block() -> usize {
    LaurentOptions::default().block
}
fn default_depth() -> u32 {
    40
}
fn default_max_points() -> usize {
    5_000_000
}

impl SleConfig {
    pub fn semicircle(kappa: f64, dx: f64, radius: f64) -> Self {
        SleConfig {
            kappa,
            dx,
            stop: StopRule::Semicircle { radius },
            seed: 0,
            use_laurent: true,
            laurent_order: default_order(),
            laurent_block: default_block(),
            max_depth: default_depth(),
            max_points: default_max_points(),
        }
    }

    pub fn strip(kappa: f64, dx: f64, dist: f64) -> Self {
        SleConfig {
            stop: StopRule::StripTip { dist },
            ..SleConfig::semicircle(kappa, dx, 1.0)
        }
    }

    pub fn validate(&self) -> Result<(), LoewnerError> {
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return Err(LoewnerError::Domain(format!(
                "kappa must be >= 0, got {}",
                self.kappa
            )));
        }
        if !(self.dx > 0.0) {
            return Err(LoewnerError::Domain(format!(
                "dx must be > 0, got {}",
                self.dx
            )));
        }
        match self.stop {
            StopRule::Semicircle { radius } if !(radius > 0.0) => Err(LoewnerError::Domain(
                format!("stop radius must be > 0, got {radius}"),
            )),
            StopRule::StripTip { dist } if !(dist > 0.0) => Err(LoewnerError::Domain(format!(
                "strip stop distance must be > 0, got {dist}"
            ))),
            _ => Ok(()),
        }
    }

    fn laurent(&self) -> LaurentOptions {
        LaurentOptions {
            order: self.laurent_order,
            block: if self.use_laurent {
                self.laurent_block
            } else {
                1
            },
            ..LaurentOptions::default()
        }
    }
}

/// One sampled trace: the stored points (in strip coordinates for strip runs)
/// parametrized by capacity, plus the driving data that produced them.
#[derive(Debug, Clone)]
pub struct SleTrace {
    pub curve: Curve,
    pub driving: DrivingPath,
    /// Number of bisections performed during refinement.
    pub bisections: usize,
}

impl SleTrace {
    pub fn capacity(&self) -> f64 {
        self.curve.param_range().1
    }
}

struct Pending {
    /// Capacity offset from the last accepted time; dyadic multiples of
    /// `dx^2`, so the slit maps get exact increments at any depth.
    dt: f64,
    /// Driving offset from the last accepted value.
    du: f64,
    depth: u32,
}

/// Adaptive SLE sampler with Brownian-bridge refinement.
///
/// Starts from uniform capacity steps `dx^2`; an interval whose endpoint images
/// are more than `dx` apart is halved, with the driving value at the midpoint
/// drawn from the Brownian bridge.
///
/// In strip mode the base step adapts: it doubles after an unrefined step
/// whose image moved less than `dx / 2` and halves (down to `dx^2`) after a
/// step that needed refinement.
pub fn sample_sle<R: Rng + ?Sized>(cfg: &SleConfig, rng: &mut R) -> Result<SleTrace, LoewnerError> {
    cfg.validate()?;
    let dt0 = cfg.dx * cfg.dx;
    let adaptive = matches!(cfg.stop, StopRule::StripTip { .. });
    let mut base = dt0;
    let mut composer = LaurentComposer::new(cfg.laurent());

    let mut driving = DrivingPath::new(cfg.kappa);
    let mut points = vec![Point::ORIGIN];
    let (mut t, mut u) = (0.0f64, 0.0);
    let mut prev = Point::ORIGIN;
    let mut pending: Vec<Pending> = Vec::new();
    let mut bisections = 0;

    loop {
        if pending.is_empty() {
            let g: f64 = rng.sample(StandardNormal);
            pending.push(Pending {
                dt: base,
                du: (cfg.kappa * base).sqrt() * g,
                depth: 0,
            });
        }
        let next = pending.last().expect("pending is non-empty");
        let (dt, du, depth) = (next.dt, next.du, next.depth);
        let map = SlitMap::new(dt, du, u)?;
        let z = composer.eval_tip(&map);
        let p = output_point(cfg, z)?;
        let step = p.dist(prev);
        if step <= cfg.dx {
            pending.pop();
            if adaptive && pending.is_empty() && depth == 0 && step < 0.5 * cfg.dx {
                base *= 2.0;
            }
            for q in &mut pending {
                q.dt -= dt;
                q.du -= du;
            }
            composer.push(map);
            // stored times stay strictly increasing when dt is below one ulp of t
            t = (t + dt).max(t.next_up());
            u += du;
            driving.times.push(t);
            driving.values.push(u);
            points.push(p);
            prev = p;
            if stop_reached(cfg, z, p) {
                break;
            }
            if points.len() >= cfg.max_points {
                return Err(LoewnerError::TooManyPoints(cfg.max_points));
            }
        } else {
            if depth >= cfg.max_depth {
                return Err(LoewnerError::DepthExceeded {
                    depth,
                    t_a: t,
                    t_b: t + dt,
                });
            }
            if adaptive && depth == 0 && pending.len() == 1 {
                base = (0.5 * base).max(dt0);
            }
            let dum = bridge_midpoint(0.0, du, 0.0, dt, cfg.kappa, rng)?;
            pending.last_mut().expect("pending is non-empty").depth = depth + 1;
            pending.push(Pending {
                dt: 0.5 * dt,
                du: dum,
                depth: depth + 1,
            });
            bisections += 1;
        }
    }

    let curve = Curve::new(points, driving.times.clone())
        .map_err(|e| LoewnerError::Domain(e.to_string()))?;
    Ok(SleTrace {
        curve,
        driving,
        bisections,
    })
}

/// Convenience wrapper seeding a ChaCha8 stream from `cfg.seed`.
pub fn sample_sle_seeded(cfg: &SleConfig) -> Result<SleTrace, LoewnerError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    sample_sle(cfg, &mut rng)
}

fn output_point(cfg: &SleConfig, z: Complex64) -> Result<Point, LoewnerError> {
    match cfg.stop {
        StopRule::Semicircle { .. } => Ok(z.into()),
        StopRule::StripTip { .. } => Ok(strip_map(z, 1.0)?.into()),
    }
}

fn stop_reached(cfg: &SleConfig, z: Complex64, p: Point) -> bool {
    match cfg.stop {
        StopRule::Semicircle { radius } => z.norm() >= radius,
        StopRule::StripTip { dist } => p.dist(Point::new(0.0, 1.0)) <= dist,
    }
}
