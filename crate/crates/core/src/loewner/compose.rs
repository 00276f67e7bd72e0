//! Accelerated composition of slit maps.
//!
//! Consecutive maps are grouped into blocks. The composition `F` of a block is
//! a hydrodynamically normalized map of the half plane onto the half plane
//! minus a hull; by Schwarz reflection it extends to the plane minus a real
//! interval `[a, b]`, so `F(z) - z` has a Laurent expansion about
//! `c = (a + b) / 2` converging for `|z - c| > (b - a) / 2`. The coefficients are
//! real and are obtained from samples of `F` on a circle (trapezoidal rule).
//!
//! Blocks are merged hierarchically: `block` nodes of one level form a node of
//! the next level. A point is pushed through the newest nodes first; a block
//! whose validity disc contains the point is expanded into its children.
//!
//! Points near the trace are carried relative to the driving value at the
//! end of the maps still to be applied. Consecutive maps are then chained
//! through their driving increments alone, so the resolution near the tip
//! does not depend on the size of the absolute driving value.

use num_complex::Complex64;

use super::slit::SlitMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaurentOptions {
    /// Number of retained Laurent coefficients.
    pub order: usize,
    /// Nodes per block at every level; values below 2 disable compression.
    pub block: usize,
    /// Series are used outside `validity * r0`, with `r0` the interval half-width.
    pub validity: f64,
    /// Points on the sampling circle (full circle, even).
    pub samples: usize,
}

impl Default for LaurentOptions {
    fn default() -> Self {
        LaurentOptions {
            order: 20,
            block: 8,
            validity: 3.0,
            samples: 64,
        }
    }
}

impl LaurentOptions {
    pub fn new(order: usize, block: usize) -> Self {
        LaurentOptions {
            order,
            block,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Map(SlitMap),
    Block(Box<Block>),
}

#[derive(Debug, Clone)]
struct Block {
    level: u32,
    capacity: f64,
    /// Driving value at the end of the last child map.
    end: f64,
    center: f64,
    half_width: f64,
    valid_r2: f64,
    coeffs: Vec<f64>,
    children: Vec<Node>,
}

impl Node {
    fn level(&self) -> u32 {
        match self {
            Node::Map(_) => 0,
            Node::Block(b) => b.level,
        }
    }

    fn capacity(&self) -> f64 {
        match self {
            Node::Map(m) => m.dt(),
            Node::Block(b) => b.capacity,
        }
    }

    /// A real point whose image lies strictly inside the hull.
    fn inside_point(&self) -> f64 {
        match self {
            Node::Map(m) => m.base(),
            Node::Block(b) => b.center,
        }
    }

    fn end(&self) -> f64 {
        match self {
            Node::Map(m) => m.base() + m.delta(),
            Node::Block(b) => b.end,
        }
    }

    #[inline]
    fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            Node::Map(m) => m.apply(z),
            Node::Block(b) => b.eval(z),
        }
    }

    #[inline]
    fn eval_pos(&self, pos: Pos) -> Pos {
        match self {
            Node::Map(m) => {
                let r = match pos {
                    Pos::Rel(r) => r,
                    Pos::Abs(z) => Complex64::new(z.re - self.end(), z.im),
                };
                Pos::Rel(m.apply_relative(Complex64::new(r.re + m.delta(), r.im)))
            }
            Node::Block(b) => b.eval_pos(pos),
        }
    }
}

/// A point given absolutely or relative to the end of the next node to apply.
#[derive(Debug, Clone, Copy)]
enum Pos {
    Abs(Complex64),
    Rel(Complex64),
}

fn eval_children(children: &[Node], z: Complex64) -> Complex64 {
    children.iter().rev().fold(z, |z, c| c.eval(z))
}

fn eval_children_pos(children: &[Node], pos: Pos) -> Pos {
    children.iter().rev().fold(pos, |pos, c| c.eval_pos(pos))
}

impl Block {
    #[inline]
    fn eval(&self, z: Complex64) -> Complex64 {
        let w = Complex64::new(z.re - self.center, z.im);
        if w.norm_sqr() > self.valid_r2 {
            self.series(z, w)
        } else {
            eval_children(&self.children, z)
        }
    }

    fn eval_pos(&self, pos: Pos) -> Pos {
        let z = match pos {
            Pos::Abs(z) => z,
            Pos::Rel(r) => Complex64::new(r.re + self.end, r.im),
        };
        let w = Complex64::new(z.re - self.center, z.im);
        if w.norm_sqr() > self.valid_r2 {
            Pos::Abs(self.series(z, w))
        } else {
            eval_children_pos(&self.children, pos)
        }
    }

    #[inline]
    fn series(&self, z: Complex64, w: Complex64) -> Complex64 {
        let inv = w.inv();
        let mut s = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            s = (s + c) * inv;
        }
        let f = z + s;
        Complex64::new(f.re, if f.im > 0.0 { f.im } else { 0.0 })
    }

    fn build(children: Vec<Node>, opts: &LaurentOptions) -> Block {
        let level = children[0].level() + 1;
        let capacity: f64 = children.iter().map(Node::capacity).sum();
        let end = children.last().map(Node::end).unwrap_or(0.0);
        let inside = children.last().map(Node::inside_point).unwrap_or(0.0);
        let scale = 2.0 * capacity.sqrt();
        let a = interval_end(&children, inside, -1.0, scale);
        let b = interval_end(&children, inside, 1.0, scale);
        let center = 0.5 * (a + b);
        // small inflation covers the bisection tolerance
        let half_width = 0.5 * (b - a) * (1.0 + 1e-6) + 1e-300;

        let m = opts.samples.max(2 * opts.order + 2) & !1;
        let rho = 2.0 * half_width;
        let half = m / 2;
        let mut vals = Vec::with_capacity(half + 1);
        for j in 0..=half {
            let theta = std::f64::consts::TAU * j as f64 / m as f64;
            let (s, c) = theta.sin_cos();
            let z = Complex64::new(
                center + rho * c,
                if j == half || j == 0 { 0.0 } else { rho * s },
            );
            vals.push(eval_children(&children, z) - z);
        }
        let mut coeffs = Vec::with_capacity(opts.order);
        let mut rk = 1.0;
        for k in 1..=opts.order {
            rk *= rho;
            let mut acc = vals[0].re
                + if k % 2 == 0 {
                    vals[half].re
                } else {
                    -vals[half].re
                };
            for (j, v) in vals.iter().enumerate().take(half).skip(1) {
                let theta = std::f64::consts::TAU * (k * j) as f64 / m as f64;
                let (s, c) = theta.sin_cos();
                acc += 2.0 * (v.re * c - v.im * s);
            }
            coeffs.push(acc * rk / m as f64);
        }

        let mut block = Block {
            level,
            capacity,
            end,
            center,
            half_width,
            valid_r2: f64::INFINITY,
            coeffs,
            children,
        };
        block.valid_r2 = block.checked_validity(opts.validity);
        block
    }

    /// Squared radius beyond which the truncated series matches the children
    /// to ~1e-12, checked on a few test points; infinite if never.
    fn checked_validity(&self, factor: f64) -> f64 {
        let mut r = factor * self.half_width;
        for _ in 0..6 {
            let ok = (1..8).all(|j| {
                let theta = std::f64::consts::PI * j as f64 / 8.0;
                let w = Complex64::from_polar(r, theta);
                let z = Complex64::new(self.center + w.re, w.im);
                let exact = eval_children(&self.children, z);
                let approx = self.series(z, w);
                (exact - approx).norm() <= 1e-12 * (1.0 + z.norm())
            });
            if ok {
                return r * r;
            }
            r *= 2.0;
        }
        f64::INFINITY
    }
}

/// End of the real interval `{x : Im F(x) > 0}` in direction `dir` from `inside`.
fn interval_end(children: &[Node], inside: f64, dir: f64, scale: f64) -> f64 {
    let is_inside = |x: f64| eval_children(children, Complex64::new(x, 0.0)).im > 0.0;
    let mut step = scale.max(1e-300);
    let mut out = inside + dir * step;
    let mut guard = 0;
    while is_inside(out) && guard < 200 {
        step *= 2.0;
        out = inside + dir * step;
        guard += 1;
    }
    let (mut lo, mut hi) = (inside, out);
    // lo is inside, hi outside
    for _ in 0..200 {
        if (hi - lo).abs() <= 1e-9 * step {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if is_inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Incrementally built composition `f_1 o f_2 o ... o f_n`, newest map innermost.
#[derive(Debug, Clone)]
pub struct LaurentComposer {
    opts: LaurentOptions,
    top: Vec<Node>,
    n_maps: usize,
    /// Base of the oldest map.
    origin: f64,
}

impl LaurentComposer {
    pub fn new(opts: LaurentOptions) -> Self {
        LaurentComposer {
            opts,
            top: Vec::new(),
            n_maps: 0,
            origin: 0.0,
        }
    }

    pub fn from_maps(maps: &[SlitMap], opts: LaurentOptions) -> Self {
        let mut c = LaurentComposer::new(opts);
        for &m in maps {
            c.push(m);
        }
        c
    }

    pub fn len(&self) -> usize {
        self.n_maps
    }

    pub fn is_empty(&self) -> bool {
        self.n_maps == 0
    }

    /// Appends `map` as the new innermost map.
    pub fn push(&mut self, map: SlitMap) {
        if self.n_maps == 0 {
            self.origin = map.base();
        }
        self.top.push(Node::Map(map));
        self.n_maps += 1;
        let b = self.opts.block;
        if b < 2 {
            return;
        }
        loop {
            let n = self.top.len();
            if n < b {
                break;
            }
            let level = self.top[n - 1].level();
            if !self.top[n - b..].iter().all(|nd| nd.level() == level) {
                break;
            }
            let children: Vec<Node> = self.top.drain(n - b..).collect();
            self.top
                .push(Node::Block(Box::new(Block::build(children, &self.opts))));
        }
    }

    /// Image of `z` under the full composition.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        eval_children(&self.top, z)
    }

    /// Tip of `map` appended after the current composition, computed from the
    /// driving increments without reference to `map.base()`.
    pub fn eval_tip(&self, map: &SlitMap) -> Complex64 {
        let tip = map.apply_relative(Complex64::new(map.delta(), 0.0));
        match eval_children_pos(&self.top, Pos::Rel(tip)) {
            Pos::Abs(z) => z,
            Pos::Rel(r) if self.n_maps == 0 => Complex64::new(r.re + map.base(), r.im),
            Pos::Rel(r) => Complex64::new(r.re + self.origin, r.im),
        }
    }

    /// Number of nodes at the top of the hierarchy.
    pub fn top_len(&self) -> usize {
        self.top.len()
    }
}

/// Same contract as [`super::trace_point`], through a block-compressed composition.
pub fn trace_point_fast(
    maps: &[SlitMap],
    u: f64,
    order: usize,
    block: usize,
) -> crate::geometry::Point {
    let composer = LaurentComposer::from_maps(maps, LaurentOptions::new(order, block));
    composer.eval(Complex64::new(u, 0.0)).into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loewner::{compose_exact, trace_point, DrivingPath};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn block_one_is_bitwise_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let path = DrivingPath::brownian(8.0 / 3.0, 1e-3, 300, &mut rng);
        let maps = path.slit_maps().unwrap();
        let u = *path.values.last().unwrap();
        assert_eq!(trace_point_fast(&maps, u, 20, 1), trace_point(&maps, u));
    }

    #[test]
    fn single_block_interval_matches_vertical_slit() {
        let maps = vec![SlitMap::solve(0.25, 0.0).unwrap(); 4];
        let c = LaurentComposer::from_maps(&maps, LaurentOptions::new(20, 4));
        assert_eq!(c.top_len(), 1);
        match &c.top[0] {
            Node::Block(b) => {
                // vertical slit of capacity 1: interval [-2, 2]
                assert!(b.center.abs() < 1e-8);
                assert!((b.half_width - 2.0).abs() < 1e-5);
                // sqrt(z^2 - 4) = z - 2/z - 2/z^3 - ...
                assert!((b.coeffs[0] + 2.0).abs() < 1e-12);
                assert!(b.coeffs[1].abs() < 1e-12);
                assert!((b.coeffs[2] + 2.0).abs() < 1e-12);
            }
            Node::Map(_) => panic!("expected a block"),
        }
    }

    #[test]
    fn agrees_with_exact_on_brownian_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 3000;
        let path = DrivingPath::brownian(8.0 / 3.0, 1.0 / n as f64, n, &mut rng);
        let maps = path.slit_maps().unwrap();
        let mut comp = LaurentComposer::new(LaurentOptions::default());
        let mut worst: f64 = 0.0;
        for k in 0..n {
            comp.push(maps[k]);
            if k % 7 == 0 {
                let z = Complex64::new(path.values[k + 1], 0.0);
                let exact = compose_exact(&maps[..=k], z);
                worst = worst.max((comp.eval(z) - exact).norm());
            }
        }
        assert!(worst < 1e-8, "worst deviation {worst}");
    }

    #[test]
    fn relative_tips_match_absolute_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let n = 2000;
        let path = DrivingPath::brownian(6.0, 1.0 / n as f64, n, &mut rng);
        let maps = path.slit_maps().unwrap();
        for block in [1, 8] {
            let mut comp = LaurentComposer::new(LaurentOptions::new(20, block));
            let mut worst: f64 = 0.0;
            for m in &maps {
                let exact = comp.eval(m.tip());
                worst = worst.max((comp.eval_tip(m) - exact).norm());
                comp.push(*m);
            }
            assert!(worst < 1e-9, "block {block}: worst deviation {worst}");
        }
    }
}
