//! Event-driven simulation. Rather than one Poisson clock per edge, each run
//! draws a global exponential waiting time (rate `|E|` for exclusion, `2|E|`
//! for interchange/chameleon rings) followed by a uniformly chosen edge.
//!
//! Random draws per chameleon ring, in order: waiting time, edge, switch
//! coin, and a depinking coin only when one is due.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};

use super::{ChameleonState, Color, EventTrace, ExclusionConfig, TraceEvent};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// When a chameleon run ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stop {
    /// At a fixed time horizon.
    At(f64),
    /// Right after the next depinking.
    FirstDepinking,
    /// Once the red paint is absorbed at 0 or `m`.
    Absorption,
}

fn exp_wait<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let x: f64 = Exp1.sample(rng);
    x / rate
}

/// Advances `st` in place until `stop`, optionally recording each ring.
/// Returns the elapsed time. With [`Stop::FirstDepinking`] the start must
/// not be absorbed, or no depinking ever comes.
pub fn simulate_chameleon_until<R: Rng + ?Sized>(
    g: &Graph,
    st: &mut ChameleonState,
    stop: Stop,
    rng: &mut R,
    mut trace: Option<&mut EventTrace>,
) -> f64 {
    let edges = g.edge_count();
    let rate = 2.0 * edges as f64;
    let start_depinks = st.depink_count();
    let mut time = 0.0;
    loop {
        match stop {
            Stop::FirstDepinking if st.depink_count() > start_depinks => return time,
            Stop::Absorption if st.counts().absorbed() => return time,
            _ => {}
        }
        let dt = exp_wait(rng, rate);
        if let Stop::At(horizon) = stop {
            if time + dt > horizon {
                return horizon;
            }
        }
        time += dt;
        let e = rng.random_range(0..edges);
        let switch_coin: bool = rng.random();
        let depink_coin = st.needs_depink_coin(g, e).then(|| rng.random::<bool>());
        let out = st
            .transition(g, e, switch_coin, depink_coin)
            .expect("depinking coin drawn exactly when due");
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(TraceEvent {
                time,
                edge: g.edge(e),
                switch_coin,
                pinkened: out.pinkened,
                depink_coin: out.depinked,
                counts_after: st.counts(),
            });
        }
    }
}

/// Runs the chameleon process from `st0` for time `t`, recording every ring.
pub fn simulate_chameleon<R: Rng + ?Sized>(
    g: &Graph,
    st0: &ChameleonState,
    t: f64,
    rng: &mut R,
) -> Result<(ChameleonState, EventTrace)> {
    check_time(t)?;
    let mut st = st0.clone();
    let mut trace = EventTrace::new(st.counts());
    simulate_chameleon_until(g, &mut st, Stop::At(t), rng, Some(&mut trace));
    Ok((st, trace))
}

/// The interchange process from the identity assignment: returns the vertex
/// of each ball at time `t` and the ring record.
pub fn simulate_interchange<R: Rng + ?Sized>(
    g: &Graph,
    t: f64,
    rng: &mut R,
) -> Result<(Vec<usize>, EventTrace)> {
    // an all-white chameleon never recolors
    let (st, trace) = simulate_chameleon(g, &ChameleonState::uncolored(g.vertex_count()), t, rng)?;
    Ok((st.positions().to_vec(), trace))
}

/// The exclusion process: every edge swaps its endpoints at rate 1.
pub fn simulate_exclusion<R: Rng + ?Sized>(
    g: &Graph,
    c0: &ExclusionConfig,
    t: f64,
    rng: &mut R,
) -> Result<ExclusionConfig> {
    check_time(t)?;
    if c0.n() != g.vertex_count() {
        return Err(Error::InvalidConfig(format!(
            "configuration has {} vertices, graph has {}",
            c0.n(),
            g.vertex_count()
        )));
    }
    let edges = g.edge_count();
    let rate = edges as f64;
    let mut c = c0.clone();
    let mut time = exp_wait(rng, rate);
    while time <= t {
        let (u, v) = g.edge(rng.random_range(0..edges));
        c.swap(u, v);
        time += exp_wait(rng, rate);
    }
    Ok(c)
}

/// Labeled balls swapped across each edge at rate 1, the swap-thinned form
/// of the interchange process (same law for ball positions, half the
/// events). `positions[ball]` is updated in place.
pub fn simulate_swaps<R: Rng + ?Sized>(
    g: &Graph,
    positions: &mut [usize],
    t: f64,
    rng: &mut R,
) -> Result<()> {
    check_time(t)?;
    let n = g.vertex_count();
    if positions.len() != n {
        return Err(Error::InvalidConfig("positions must cover every vertex".into()));
    }
    let mut occupant = vec![usize::MAX; n];
    for (ball, &v) in positions.iter().enumerate() {
        if v >= n || occupant[v] != usize::MAX {
            return Err(Error::InvalidConfig("positions are not a bijection".into()));
        }
        occupant[v] = ball;
    }
    let edges = g.edge_count();
    let mean = edges as f64 * t;
    let events = if mean > 0.0 {
        Poisson::new(mean).expect("positive mean").sample(rng) as u64
    } else {
        0
    };
    for _ in 0..events {
        let (u, v) = g.edge(rng.random_range(0..edges));
        let (a, b) = (occupant[u], occupant[v]);
        occupant.swap(u, v);
        positions[a] = v;
        positions[b] = u;
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("time must be finite and >= 0, got {t}")))
    }
}

/// Outcome of running the red-paint chain to absorption.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Absorption {
    /// `Red` is the event A (all paint red).
    pub color: Color,
    /// Index `j` of the depinking at which absorption happened.
    pub depink_index: usize,
    /// `r` at `T_0, T_1, ..., T_j`.
    pub r_sequence: Vec<usize>,
}

impl Absorption {
    pub fn is_red(&self) -> bool {
        self.color == Color::Red
    }
}

pub fn run_to_absorption<R: Rng + ?Sized>(
    g: &Graph,
    st0: &ChameleonState,
    rng: &mut R,
) -> Result<Absorption> {
    let c = st0.counts();
    if c.red_paint() == 0.0 || c.red_paint() == c.m() as f64 {
        return Err(Error::InvalidConfig(
            "run_to_absorption needs red paint strictly between 0 and m".into(),
        ));
    }
    let mut st = st0.clone();
    let mut r_sequence = vec![c.r];
    while !st.counts().absorbed() {
        simulate_chameleon_until(g, &mut st, Stop::FirstDepinking, rng, None);
        r_sequence.push(st.counts().r);
    }
    let color = if st.counts().r == 0 { Color::White } else { Color::Red };
    Ok(Absorption {
        color,
        depink_index: r_sequence.len() - 1,
        r_sequence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::delta;
    use crate::rng::RngSeed;
    use crate::stats::MeanVar;

    #[test]
    fn zero_time_is_identity() {
        let g = Graph::cycle(5).unwrap();
        let mut rng = RngSeed(1).rng();
        let (pos, trace) = simulate_interchange(&g, 0.0, &mut rng).unwrap();
        assert_eq!(pos, vec![0, 1, 2, 3, 4]);
        assert!(trace.events.is_empty());
        let c0 = ExclusionConfig::from_vertices(5, &[0, 2]).unwrap();
        assert_eq!(simulate_exclusion(&g, &c0, 0.0, &mut rng).unwrap(), c0);
        assert!(simulate_exclusion(&g, &c0, -1.0, &mut rng).is_err());
    }

    #[test]
    fn all_white_start_never_recolors() {
        let g = Graph::torus(3, 2).unwrap();
        let st0 = ChameleonState::uncolored(9);
        let (st, trace) = simulate_chameleon(&g, &st0, 5.0, &mut RngSeed(2).rng()).unwrap();
        assert!(!trace.events.is_empty());
        assert!(trace.events.iter().all(|e| !e.pinkened && e.depink_coin.is_none()));
        assert_eq!(st.counts(), st0.counts());
    }

    #[test]
    fn trace_invariants_hold() {
        let g = Graph::torus(4, 2).unwrap();
        for b in [0, 3] {
            let st0 = ChameleonState::standard(&g, b).unwrap();
            let m = st0.m();
            for trial in 0..20 {
                let mut rng = RngSeed(11).trial_rng(trial);
                let (_, trace) = simulate_chameleon(&g, &st0, 20.0, &mut rng).unwrap();
                let mut last_t = 0.0;
                let mut paint = trace.initial.red_paint();
                for e in &trace.events {
                    assert!(e.time > last_t);
                    last_t = e.time;
                    let c = e.counts_after;
                    assert_eq!(c.b, b);
                    assert_eq!(c.n(), 16);
                    assert_eq!(c.p % 2, 0);
                    assert!(c.p == 0 || (c.p < c.r && c.p < c.w));
                    if e.depink_coin.is_some() {
                        assert_eq!(c.p, 0);
                        paint = c.red_paint();
                    } else {
                        assert_eq!(c.red_paint(), paint);
                    }
                }
                let reds = trace.depinking_reds();
                for w in reds.windows(2) {
                    let d = delta(w[0], m).unwrap();
                    assert!(w[1] + d == w[0] || w[0] + d == w[1], "{reds:?}");
                }
            }
        }
    }

    #[test]
    fn identical_seeds_identical_traces() {
        let g = Graph::cycle(6).unwrap();
        let st0 = ChameleonState::standard(&g, 1).unwrap();
        let a = simulate_chameleon(&g, &st0, 3.0, &mut RngSeed(5).trial_rng(9)).unwrap();
        let b = simulate_chameleon(&g, &st0, 3.0, &mut RngSeed(5).trial_rng(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_edge_exclusion_stays_with_correct_probability() {
        let g = Graph::hypercube(1).unwrap();
        let c0 = ExclusionConfig::from_vertices(2, &[0]).unwrap();
        for t in [0.2, 0.7] {
            let acc: MeanVar = (0..100_000u64)
                .map(|i| {
                    let mut rng = RngSeed(3).trial_rng(i);
                    let c = simulate_exclusion(&g, &c0, t, &mut rng).unwrap();
                    f64::from(u8::from(c.is_occupied(0)))
                })
                .collect();
            let exact = 0.5 * (1.0 + (-2.0 * t).exp());
            assert!((acc.mean() - exact).abs() <= 3.0 * acc.stderr(), "t={t}");
        }
    }

    #[test]
    fn swaps_preserve_bijection() {
        let g = Graph::torus(4, 2).unwrap();
        let mut pos: Vec<usize> = (0..16).rev().collect();
        simulate_swaps(&g, &mut pos, 3.0, &mut RngSeed(4).rng()).unwrap();
        let mut sorted = pos.clone();
        sorted.sort();
        assert_eq!(sorted, (0..16).collect::<Vec<_>>());
    }

    #[test]
    fn absorption_sequence_is_plus_minus_delta() {
        let g = Graph::cycle(5).unwrap();
        let st0 = ChameleonState::standard(&g, 0).unwrap();
        for i in 0..200 {
            let a = run_to_absorption(&g, &st0, &mut RngSeed(8).trial_rng(i)).unwrap();
            let last = *a.r_sequence.last().unwrap();
            assert!(last == 0 || last == 5);
            assert_eq!(a.is_red(), last == 5);
            assert_eq!(a.depink_index + 1, a.r_sequence.len());
            for w in a.r_sequence.windows(2) {
                let d = delta(w[0], 5).unwrap();
                assert!(w[1] + d == w[0] || w[0] + d == w[1]);
            }
        }
        let mut white = st0.clone();
        white.transition(&g, 0, false, Some(false)).unwrap();
        assert!(run_to_absorption(&g, &white, &mut RngSeed(0).rng()).is_err());
    }
}
