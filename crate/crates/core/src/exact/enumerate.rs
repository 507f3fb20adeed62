use std::collections::HashSet;

use super::{Caps, ExactChain};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::processes::{ChameleonState, Color, ColorCounts};

/// Recoloring rules applied by [`enumerate_chameleon`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recolor {
    /// Pinkening and depinking.
    Full,
    /// Pinkening only; pink balls accumulate. Used for the chain in which
    /// the time to the next depinking is a hitting time.
    PinkenOnly,
    /// No recoloring: the interchange process tracking the black balls and
    /// the red ball.
    None,
}

/// Canonical chameleon state: black positions in ball order plus the color
/// found at every vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChameleonKey {
    pub blacks: Vec<u8>,
    pub colors: Vec<Color>,
}

impl ChameleonKey {
    pub fn from_state(st: &ChameleonState) -> Self {
        ChameleonKey {
            blacks: st.black_positions().iter().map(|&v| v as u8).collect(),
            colors: (0..st.n()).map(|v| st.color_at(v)).collect(),
        }
    }

    pub fn counts(&self) -> ColorCounts {
        let mut c = ColorCounts { r: 0, w: 0, p: 0, b: 0 };
        for &col in &self.colors {
            match col {
                Color::Black => c.b += 1,
                Color::Red => c.r += 1,
                Color::White => c.w += 1,
                Color::Pink => c.p += 1,
            }
        }
        c
    }

    /// `ρ(v)`.
    pub fn redness(&self, v: usize) -> f64 {
        match self.colors[v] {
            Color::Red => 1.0,
            Color::Pink => 0.5,
            _ => 0.0,
        }
    }

    fn swap(&mut self, u: usize, v: usize) {
        self.colors.swap(u, v);
        for p in &mut self.blacks {
            if *p as usize == u {
                *p = v as u8;
            } else if *p as usize == v {
                *p = u as u8;
            }
        }
    }

    fn pinken(&mut self, u: usize, v: usize) {
        if matches!(
            (self.colors[u], self.colors[v]),
            (Color::Red, Color::White) | (Color::White, Color::Red)
        ) {
            self.colors[u] = Color::Pink;
            self.colors[v] = Color::Pink;
        }
    }

    /// One ring of `{u, v}` without the depinking step.
    pub(crate) fn step(&self, u: usize, v: usize, swap: bool) -> Self {
        let mut k = self.clone();
        if swap {
            k.swap(u, v);
        }
        k.pinken(u, v);
        k
    }

    fn depinked(&self, to: Color) -> Self {
        let mut k = self.clone();
        for c in &mut k.colors {
            if *c == Color::Pink {
                *c = to;
            }
        }
        k
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All `k`-subsets of the vertices as bitmasks, with rate 1 for every edge
/// joining an occupied and an empty vertex. On tori and hypercubes the
/// chain records one start state per translation orbit.
pub fn enumerate_exclusion(g: &Graph, k: usize, caps: Caps) -> Result<ExactChain<u128>> {
    let n = g.vertex_count();
    if n > 128 {
        return Err(Error::InvalidArgument(format!(
            "exact exclusion supports n <= 128, got {n}"
        )));
    }
    if k == 0 || 2 * k > n {
        return Err(Error::InvalidConfig(format!(
            "need 1 <= k <= n/2, got k = {k}, n = {n}"
        )));
    }
    if binomial(n, k) > caps.states as f64 {
        return Err(Error::CapExceeded { cap: caps.states });
    }
    let start: u128 = (1u128 << k) - 1;
    let edges = g.edges();
    let mut chain = ExactChain::explore([start], caps.states, |&s, out| {
        for &(u, v) in edges {
            if (s >> u & 1) != (s >> v & 1) {
                out.push((s ^ (1 << u) ^ (1 << v), 1.0));
            }
        }
    })?;
    if let Some(perms) = g.translations() {
        let mut seen = HashSet::new();
        let mut reps = Vec::new();
        for (i, &s) in chain.states().iter().enumerate() {
            let canon = perms
                .iter()
                .map(|p| permute_mask(s, p))
                .min()
                .expect("at least the identity");
            if seen.insert(canon) {
                reps.push(i);
            }
        }
        chain.set_start_representatives(reps);
    }
    Ok(chain)
}

fn permute_mask(s: u128, perm: &[usize]) -> u128 {
    let mut out = 0;
    let mut rest = s;
    while rest != 0 {
        let v = rest.trailing_zeros() as usize;
        out |= 1 << perm[v];
        rest &= rest - 1;
    }
    out
}

/// Chameleon chain reachable from the standard start (black balls at
/// `0..b`, the red ball at `b`).
pub fn enumerate_chameleon(g: &Graph, b: usize, mode: Recolor, caps: Caps) -> Result<ExactChain<ChameleonKey>> {
    let st = ChameleonState::standard(g, b)?;
    enumerate_chameleon_from(g, vec![ChameleonKey::from_state(&st)], mode, caps)
}

/// Each edge contributes rate 1 to its swap branch and rate 1 to its
/// no-swap branch; pinkening is applied within a branch and a due depinking
/// splits the branch into two half-rate outcomes.
pub fn enumerate_chameleon_from(
    g: &Graph,
    starts: Vec<ChameleonKey>,
    mode: Recolor,
    caps: Caps,
) -> Result<ExactChain<ChameleonKey>> {
    let n = g.vertex_count();
    if n > 256 {
        return Err(Error::InvalidArgument(format!(
            "exact chameleon supports n <= 256, got {n}"
        )));
    }
    if starts.iter().any(|k| k.colors.len() != n) {
        return Err(Error::InvalidConfig("start key has the wrong vertex count".into()));
    }
    let edges = g.edges();
    ExactChain::explore(starts, caps.states, |key, out| {
        for &(u, v) in edges {
            for swap in [false, true] {
                if mode == Recolor::None {
                    let mut k = key.clone();
                    if swap {
                        k.swap(u, v);
                    }
                    out.push((k, 1.0));
                    continue;
                }
                let k = key.step(u, v, swap);
                if mode == Recolor::Full && k.counts().depink_due() {
                    out.push((k.depinked(Color::Red), 0.5));
                    out.push((k.depinked(Color::White), 0.5));
                } else {
                    out.push((k, 1.0));
                }
            }
        }
    })
}
