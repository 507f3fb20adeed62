//! The exclusion, interchange and chameleon processes.
//!
//! Balls are numbered from 0; the paper-style "ball `i`" is index `i - 1`.
//! In a chameleon state balls `0..b` are black and ball `b` starts red.

mod simulate;
mod trace;

pub use simulate::{
    run_to_absorption, simulate_chameleon, simulate_chameleon_until, simulate_exclusion,
    simulate_interchange, simulate_swaps, Absorption, Stop,
};
pub use trace::{EventTrace, TraceEvent, TRACE_CSV_HEADER};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Color {
    Black,
    Red,
    White,
    Pink,
}

/// Per-color ball counts of a chameleon configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColorCounts {
    pub r: usize,
    pub w: usize,
    pub p: usize,
    pub b: usize,
}

impl ColorCounts {
    pub fn n(&self) -> usize {
        self.r + self.w + self.p + self.b
    }

    /// Non-black balls.
    pub fn m(&self) -> usize {
        self.r + self.w + self.p
    }

    /// Red paint `S = r + p/2`.
    pub fn red_paint(&self) -> f64 {
        self.r as f64 + 0.5 * self.p as f64
    }

    /// White paint `w + p/2`.
    pub fn white_paint(&self) -> f64 {
        self.w as f64 + 0.5 * self.p as f64
    }

    /// Red paint fraction `s = S / m`.
    pub fn s(&self) -> f64 {
        self.red_paint() / self.m() as f64
    }

    /// Whether these (post-pinkening) counts call for a depinking: there are
    /// pink balls and at least as many of them as red or as white balls.
    pub fn depink_due(&self) -> bool {
        self.p > 0 && (self.p >= self.r || self.p >= self.w)
    }

    /// Absorbed: all paint red or all paint white.
    pub fn absorbed(&self) -> bool {
        self.p == 0 && (self.r == 0 || self.w == 0)
    }
}

/// `Δ(x) = ⌈min(x, m - x) / 3⌉`, the step of the depinking chain.
pub fn delta(x: usize, m: usize) -> Result<usize> {
    if x > m {
        return Err(Error::InvalidArgument(format!("delta: x = {x} exceeds m = {m}")));
    }
    Ok(x.min(m - x).div_ceil(3))
}

/// Unordered black-ball configuration of the exclusion process.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExclusionConfig {
    occupancy: Vec<bool>,
    k: usize,
}

impl ExclusionConfig {
    /// Requires `1 <= k <= n/2`.
    pub fn new(occupancy: Vec<bool>) -> Result<Self> {
        let k = occupancy.iter().filter(|&&x| x).count();
        let n = occupancy.len();
        if k == 0 || 2 * k > n {
            return Err(Error::InvalidConfig(format!(
                "exclusion needs 1 <= k <= n/2 black balls, got k = {k}, n = {n}"
            )));
        }
        Ok(ExclusionConfig { occupancy, k })
    }

    pub fn from_vertices(n: usize, vertices: &[usize]) -> Result<Self> {
        let mut occupancy = vec![false; n];
        for &v in vertices {
            if v >= n || occupancy[v] {
                return Err(Error::InvalidConfig(format!(
                    "vertex {v} out of range or repeated"
                )));
            }
            occupancy[v] = true;
        }
        Self::new(occupancy)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.occupancy.len()
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }

    pub fn is_occupied(&self, v: usize) -> bool {
        self.occupancy[v]
    }

    /// Occupied vertices in ascending order.
    pub fn vertices(&self) -> Vec<usize> {
        (0..self.n()).filter(|&v| self.occupancy[v]).collect()
    }

    /// Bitmask encoding; `None` when `n > 128`.
    pub fn mask(&self) -> Option<u128> {
        (self.n() <= 128).then(|| {
            self.occupancy
                .iter()
                .enumerate()
                .filter(|(_, &o)| o)
                .fold(0u128, |m, (v, _)| m | (1 << v))
        })
    }

    pub(crate) fn swap(&mut self, u: usize, v: usize) {
        self.occupancy.swap(u, v);
    }
}

/// What a single ring did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub pinkened: bool,
    /// `Some(true)` when the pink balls went red, `Some(false)` for white.
    pub depinked: Option<bool>,
}

/// Labeled balls on vertices, each with a color.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChameleonState {
    position: Vec<usize>,
    occupant: Vec<usize>,
    color: Vec<Color>,
    counts: ColorCounts,
    depink_count: usize,
}

impl ChameleonState {
    /// The standard start: balls `0..b` black at `placement[..b]`, ball `b`
    /// red at `placement[b]`, every other ball white, filling the remaining
    /// vertices in ascending index order.
    pub fn initial(g: &Graph, b: usize, placement: &[usize]) -> Result<Self> {
        let n = g.vertex_count();
        if 2 * (b + 1) > n {
            return Err(Error::InvalidConfig(format!(
                "need 0 <= b <= n/2 - 1, got b = {b}, n = {n}"
            )));
        }
        if placement.len() != b + 1 {
            return Err(Error::InvalidConfig(format!(
                "placement must list b + 1 = {} vertices",
                b + 1
            )));
        }
        let mut taken = vec![false; n];
        for &v in placement {
            if v >= n || taken[v] {
                return Err(Error::InvalidConfig(format!(
                    "placement vertex {v} out of range or repeated"
                )));
            }
            taken[v] = true;
        }
        let position: Vec<usize> = placement
            .iter()
            .copied()
            .chain((0..n).filter(|&v| !taken[v]))
            .collect();
        let color = (0..n)
            .map(|i| match i.cmp(&b) {
                std::cmp::Ordering::Less => Color::Black,
                std::cmp::Ordering::Equal => Color::Red,
                std::cmp::Ordering::Greater => Color::White,
            })
            .collect();
        Self::from_parts(position, color)
    }

    /// `initial` with placement `[0, 1, ..., b]`.
    pub fn standard(g: &Graph, b: usize) -> Result<Self> {
        let placement: Vec<usize> = (0..=b).collect();
        Self::initial(g, b, &placement)
    }

    /// All balls white at their own index: the bare interchange process.
    pub fn uncolored(n: usize) -> Self {
        Self::from_parts((0..n).collect(), vec![Color::White; n]).expect("identity is valid")
    }

    /// Builds and validates an arbitrary state. Black balls must be the
    /// lowest-numbered balls; pink counts must satisfy the between-event
    /// invariant `p = 0` or `p < min(r, w)`, with `p` even.
    pub fn from_parts(position: Vec<usize>, color: Vec<Color>) -> Result<Self> {
        let n = position.len();
        if color.len() != n {
            return Err(Error::InvalidConfig("position/color length mismatch".into()));
        }
        let mut occupant = vec![usize::MAX; n];
        for (ball, &v) in position.iter().enumerate() {
            if v >= n || occupant[v] != usize::MAX {
                return Err(Error::InvalidConfig(
                    "position is not a bijection between balls and vertices".into(),
                ));
            }
            occupant[v] = ball;
        }
        let mut counts = ColorCounts { r: 0, w: 0, p: 0, b: 0 };
        let mut seen_nonblack = false;
        for &c in &color {
            match c {
                Color::Black if seen_nonblack => {
                    return Err(Error::InvalidConfig(
                        "black balls must be the lowest-numbered balls".into(),
                    ))
                }
                Color::Black => counts.b += 1,
                Color::Red => counts.r += 1,
                Color::White => counts.w += 1,
                Color::Pink => counts.p += 1,
            }
            if c != Color::Black {
                seen_nonblack = true;
            }
        }
        if !counts.p.is_multiple_of(2) || (counts.p > 0 && counts.p >= counts.r.min(counts.w)) {
            return Err(Error::InvalidConfig(format!(
                "pink count {} violates the between-event invariant",
                counts.p
            )));
        }
        Ok(ChameleonState {
            position,
            occupant,
            color,
            counts,
            depink_count: 0,
        })
    }

    /// Recolors the given white balls red (used to build "just after a
    /// depinking" starts with `S = r` integral).
    pub fn recolor_white_to_red(&mut self, balls: &[usize]) -> Result<()> {
        for &ball in balls {
            if self.color.get(ball) != Some(&Color::White) {
                return Err(Error::InvalidConfig(format!("ball {ball} is not white")));
            }
        }
        for &ball in balls {
            self.color[ball] = Color::Red;
            self.counts.w -= 1;
            self.counts.r += 1;
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.position.len()
    }

    pub fn b(&self) -> usize {
        self.counts.b
    }

    pub fn m(&self) -> usize {
        self.counts.m()
    }

    pub fn counts(&self) -> ColorCounts {
        self.counts
    }

    pub fn depink_count(&self) -> usize {
        self.depink_count
    }

    /// Vertex of each ball.
    pub fn positions(&self) -> &[usize] {
        &self.position
    }

    pub fn position(&self, ball: usize) -> usize {
        self.position[ball]
    }

    pub fn ball_at(&self, v: usize) -> usize {
        self.occupant[v]
    }

    pub fn color(&self, ball: usize) -> Color {
        self.color[ball]
    }

    pub fn color_at(&self, v: usize) -> Color {
        self.color[self.occupant[v]]
    }

    /// Positions of the black balls, in ball order.
    pub fn black_positions(&self) -> &[usize] {
        &self.position[..self.counts.b]
    }

    /// `ρ(u)`: 1 for a red ball at `u`, 1/2 for pink, 0 otherwise.
    pub fn redness(&self, u: usize) -> f64 {
        match self.color_at(u) {
            Color::Red => 1.0,
            Color::Pink => 0.5,
            Color::Black | Color::White => 0.0,
        }
    }

    fn pinkens(&self, u: usize, v: usize) -> bool {
        matches!(
            (self.color_at(u), self.color_at(v)),
            (Color::Red, Color::White) | (Color::White, Color::Red)
        )
    }

    /// Whether a ring of edge `e` will call for a depinking coin. The
    /// answer does not depend on the switch coin.
    pub fn needs_depink_coin(&self, g: &Graph, e: EdgeId) -> bool {
        let (u, v) = g.edge(e);
        let mut c = self.counts;
        if self.pinkens(u, v) {
            c.r -= 1;
            c.w -= 1;
            c.p += 2;
        }
        c.depink_due()
    }

    /// One ring of edge `e`: swap the endpoint balls iff `switch_coin`,
    /// pinken a red/white pair, then depink (red iff `depink_coin`) when the
    /// post-pinkening counts call for it. The coin must be supplied exactly
    /// when it is needed; on a mismatch the state is left untouched.
    pub fn transition(
        &mut self,
        g: &Graph,
        e: EdgeId,
        switch_coin: bool,
        depink_coin: Option<bool>,
    ) -> Result<StepOutcome> {
        if e >= g.edge_count() {
            return Err(Error::InvalidArgument(format!("edge id {e} out of range")));
        }
        let due = self.needs_depink_coin(g, e);
        match (due, depink_coin) {
            (true, None) => {
                return Err(Error::CoinMismatch("depinking due but no coin given".into()))
            }
            (false, Some(_)) => {
                return Err(Error::CoinMismatch("coin given but no depinking due".into()))
            }
            _ => {}
        }
        let (u, v) = g.edge(e);
        if switch_coin {
            let (a, bb) = (self.occupant[u], self.occupant[v]);
            self.occupant.swap(u, v);
            self.position[a] = v;
            self.position[bb] = u;
        }
        let pinkened = self.pinkens(u, v);
        if pinkened {
            let (a, bb) = (self.occupant[u], self.occupant[v]);
            self.color[a] = Color::Pink;
            self.color[bb] = Color::Pink;
            self.counts.r -= 1;
            self.counts.w -= 1;
            self.counts.p += 2;
        }
        let depinked = depink_coin.inspect(|&red| self.depink(red));
        Ok(StepOutcome { pinkened, depinked })
    }

    fn depink(&mut self, red: bool) {
        let to = if red { Color::Red } else { Color::White };
        for c in self.color.iter_mut().filter(|c| **c == Color::Pink) {
            *c = to;
        }
        if red {
            self.counts.r += self.counts.p;
        } else {
            self.counts.w += self.counts.p;
        }
        self.counts.p = 0;
        self.depink_count += 1;
    }
}
