use std::collections::HashMap;

use super::{enumerate_chameleon, ChameleonKey, Caps, ExactChain, Recolor};
use crate::error::Result;
use crate::graph::Graph;

/// The chameleon chain stopped at its next depinking: identical moves,
/// except that every depinking ring leads to the sink `None`.
pub fn depink_hitting_chain(g: &Graph, starts: Vec<ChameleonKey>, caps: Caps) -> Result<ExactChain<Option<ChameleonKey>>> {
    let edges = g.edges().to_vec();
    ExactChain::explore(starts.into_iter().map(Some), caps.states, move |key, out| {
        let Some(key) = key else { return };
        for &(u, v) in &edges {
            for swap in [false, true] {
                let k = key.step(u, v, swap);
                if k.counts().depink_due() {
                    out.push((None, 1.0));
                } else {
                    out.push((Some(k), 1.0));
                }
            }
        }
    })
}

/// `𝒲(M)`, the expected time to the next depinking, for every
/// non-absorbed state reachable from the standard start with `b` black
/// balls.
pub fn depink_wait_table(g: &Graph, b: usize, caps: Caps) -> Result<HashMap<ChameleonKey, f64>> {
    let full = enumerate_chameleon(g, b, Recolor::Full, caps)?;
    let starts: Vec<ChameleonKey> = full
        .states()
        .iter()
        .filter(|k| !k.counts().absorbed())
        .cloned()
        .collect();
    let chain = depink_hitting_chain(g, starts, caps)?;
    let target: Vec<bool> = chain.states().iter().map(Option::is_none).collect();
    let w = chain.hitting_time_solve(&target, caps)?;
    Ok(chain
        .states()
        .iter()
        .zip(w)
        .filter_map(|(k, w)| k.clone().map(|k| (k, w)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::ChameleonState;

    #[test]
    fn single_edge_waits_half() {
        // r = w = 1 on one edge: the first ring pinkens and depinks
        let g = Graph::path(2).unwrap();
        let table = depink_wait_table(&g, 0, Caps::default()).unwrap();
        // every ring depinks, so the swapped colouring is never a between-event state
        assert_eq!(table.len(), 1);
        for &w in table.values() {
            assert!((w - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn cycle4_start_wait() {
        // red ball with two white neighbours: the two incident edges ring at
        // total rate 4 and each ring pinkens; p = 2 >= r = 0 depinks at once
        let g = Graph::cycle(4).unwrap();
        let table = depink_wait_table(&g, 0, Caps::default()).unwrap();
        let start = ChameleonKey::from_state(&ChameleonState::standard(&g, 0).unwrap());
        assert!((table[&start] - 0.25).abs() < 1e-12);
    }
}
