//! Pivot chain on `n`-step self-avoiding walks in the closed upper half plane.

use rand::Rng;
use rustc_hash::FxHashMap;

use super::{LatticeError, LatticeWalk, Site};
use crate::fvar::ModelKind;

/// Nontrivial point symmetries of the square lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    Rot90,
    Rot180,
    Rot270,
    FlipX,
    FlipY,
    Diag,
    AntiDiag,
}

impl Symmetry {
    pub const ALL: [Symmetry; 7] = [
        Symmetry::Rot90,
        Symmetry::Rot180,
        Symmetry::Rot270,
        Symmetry::FlipX,
        Symmetry::FlipY,
        Symmetry::Diag,
        Symmetry::AntiDiag,
    ];

    #[inline]
    pub fn apply(self, (x, y): Site) -> Site {
        match self {
            Symmetry::Rot90 => (-y, x),
            Symmetry::Rot180 => (-x, -y),
            Symmetry::Rot270 => (y, -x),
            Symmetry::FlipX => (-x, y),
            Symmetry::FlipY => (x, -y),
            Symmetry::Diag => (y, x),
            Symmetry::AntiDiag => (-y, -x),
        }
    }

    pub fn inverse(self) -> Symmetry {
        match self {
            Symmetry::Rot90 => Symmetry::Rot270,
            Symmetry::Rot270 => Symmetry::Rot90,
            s => s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PivotMove {
    /// Index of the pivot site; sites after it move.
    pub pivot: usize,
    pub symmetry: Symmetry,
}

#[derive(Debug, Clone)]
pub struct PivotChain {
    sites: Vec<Site>,
    index: FxHashMap<Site, usize>,
    scratch: Vec<Site>,
    pub proposed: u64,
    pub accepted: u64,
}

impl PivotChain {
    /// Straight vertical walk of `n` steps.
    pub fn straight(n: usize) -> Result<Self, LatticeError> {
        if n < 2 {
            return Err(LatticeError::Domain(format!(
                "pivot chain needs n >= 2, got {n}"
            )));
        }
        let sites: Vec<Site> = (0..=n as i32).map(|y| (0, y)).collect();
        let index = sites.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        Ok(PivotChain {
            sites,
            index,
            scratch: Vec::with_capacity(n),
            proposed: 0,
            accepted: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.sites.len() - 1
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn walk(&self) -> LatticeWalk {
        LatticeWalk {
            sites: self.sites.clone(),
            model: ModelKind::Saw,
        }
    }

    /// Applies `mv` if the result is a half-plane self-avoiding walk.
    pub fn try_move(&mut self, mv: PivotMove) -> bool {
        self.proposed += 1;
        let k = mv.pivot;
        let (px, py) = self.sites[k];
        self.scratch.clear();
        for &(x, y) in &self.sites[k + 1..] {
            let (dx, dy) = mv.symmetry.apply((x - px, y - py));
            let s = (px + dx, py + dy);
            if s.1 < 0 {
                return false;
            }
            // a clash with a moving site is not a clash
            if matches!(self.index.get(&s), Some(&j) if j <= k) {
                return false;
            }
            self.scratch.push(s);
        }
        for s in &self.sites[k + 1..] {
            self.index.remove(s);
        }
        for (off, &s) in self.scratch.iter().enumerate() {
            self.sites[k + 1 + off] = s;
            self.index.insert(s, k + 1 + off);
        }
        self.accepted += 1;
        true
    }

    pub fn random_move<R: Rng + ?Sized>(&self, rng: &mut R) -> PivotMove {
        PivotMove {
            pivot: rng.random_range(0..self.n()),
            symmetry: Symmetry::ALL[rng.random_range(0..Symmetry::ALL.len())],
        }
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let mv = self.random_move(rng);
        self.try_move(mv)
    }
}

/// Runs a pivot chain from the straight walk: `burn_in` accepted pivots, then
/// `iters` iterations calling `observer` every `thin` of them.
pub fn saw_pivot_run<R, F>(
    n: usize,
    iters: u64,
    thin: u64,
    burn_in: u64,
    rng: &mut R,
    mut observer: F,
) -> Result<PivotChain, LatticeError>
where
    R: Rng + ?Sized,
    F: FnMut(&PivotChain),
{
    if iters < 1 || thin < 1 {
        return Err(LatticeError::Domain("iters and thin must be >= 1".into()));
    }
    let mut chain = PivotChain::straight(n)?;
    let mut acc = 0;
    while acc < burn_in {
        if chain.step(rng) {
            acc += 1;
        }
    }
    for it in 1..=iters {
        chain.step(rng);
        if it % thin == 0 {
            observer(&chain);
        }
    }
    Ok(chain)
}
