//! Loop-erased half-plane excursion.
//!
//! From height `k >= 1` the excursion (simple random walk conditioned never to
//! return to the real axis) steps up with probability `(k+1)/4k`, down with
//! `(k-1)/4k` and sideways with `1/4` each. From the origin it steps up.

use rand::Rng;
use rustc_hash::FxHashMap;

use super::{LatticeError, LatticeWalk, Site};
use crate::fvar::ModelKind;

/// One excursion step from `site` (which must have `y >= 1`).
///
/// Draws an integer uniformly from `0..4k` so the probabilities are exact:
/// `[0, k)` left, `[k, 2k)` right, `[2k, 3k+1)` up, the remaining `k-1` down.
pub fn excursion_step<R: Rng + ?Sized>(site: Site, rng: &mut R) -> Result<Site, LatticeError> {
    let (x, k) = site;
    if k < 1 {
        return Err(LatticeError::Domain(format!(
            "excursion step needs y >= 1, got {k}"
        )));
    }
    let k64 = k as u64;
    let u = rng.random_range(0..4 * k64);
    Ok(if u < k64 {
        (x - 1, k)
    } else if u < 2 * k64 {
        (x + 1, k)
    } else if u < 3 * k64 + 1 {
        (x, k + 1)
    } else {
        (x, k - 1)
    })
}

/// Chronological loop erasure maintained online.
#[derive(Debug, Clone, Default)]
pub struct LoopEraser {
    walk: Vec<Site>,
    index: FxHashMap<Site, usize>,
}

impl LoopEraser {
    pub fn new(start: Site) -> Self {
        let mut e = LoopEraser::default();
        e.walk.push(start);
        e.index.insert(start, 0);
        e
    }

    /// Appends `site`, erasing the loop it closes if it is already on the walk.
    pub fn push(&mut self, site: Site) {
        if let Some(&j) = self.index.get(&site) {
            for s in self.walk.drain(j + 1..) {
                self.index.remove(&s);
            }
        } else {
            self.index.insert(site, self.walk.len());
            self.walk.push(site);
        }
    }

    pub fn steps(&self) -> usize {
        self.walk.len() - 1
    }

    pub fn walk(&self) -> &[Site] {
        &self.walk
    }

    pub fn into_walk(self) -> Vec<Site> {
        self.walk
    }
}

pub fn loop_erase(path: &[Site]) -> Vec<Site> {
    let Some((&first, rest)) = path.split_first() else {
        return Vec::new();
    };
    let mut e = LoopEraser::new(first);
    for &s in rest {
        e.push(s);
    }
    e.into_walk()
}

/// Loop-erased excursion from the origin, stopped once the erased walk has
/// `n_target` steps.
pub fn lerw_sample<R: Rng + ?Sized>(
    n_target: usize,
    rng: &mut R,
) -> Result<LatticeWalk, LatticeError> {
    if n_target < 1 {
        return Err(LatticeError::Domain("n_target must be >= 1".into()));
    }
    let mut e = LoopEraser::new((0, 0));
    let mut cur = (0, 1);
    e.push(cur);
    while e.steps() < n_target {
        cur = excursion_step(cur, rng)?;
        e.push(cur);
    }
    Ok(LatticeWalk {
        sites: e.into_walk(),
        model: ModelKind::Lerw,
    })
}
