use std::collections::{BTreeMap, HashMap};

use super::{enumerate_chameleon_from, ChameleonKey, Caps, DistVector, ExactChain, Recolor};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::processes::{ChameleonState, Color};

/// Outcome of [`verify_lemma1`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma1Check {
    /// `max |μ_t(y | z) - E(ρ_t(y) | blacks at z)|` over compared `(z, y)`.
    pub max_discrepancy: f64,
    /// Largest difference between the two black-tuple marginals.
    pub black_marginal_discrepancy: f64,
    /// Black tuples compared.
    pub compared: usize,
    /// Black tuples skipped because they have probability zero.
    pub skipped: usize,
}

fn distribution_at(chain: &ExactChain<ChameleonKey>, start: &ChameleonKey, t: f64, tol: f64) -> Result<DistVector> {
    let i = chain.index_of(start).expect("start state is enumerated");
    chain.transient_distribution(&DistVector::point_mass(chain.len(), i), t, tol)
}

fn red_vertex(key: &ChameleonKey) -> usize {
    key.colors
        .iter()
        .position(|&c| c == Color::Red)
        .expect("recoloring disabled keeps the red ball")
}

/// [`verify_lemma1_with`] from the standard placement `[0, ..., b]`.
pub fn verify_lemma1(g: &Graph, b: usize, t: f64, tol: f64, caps: Caps) -> Result<Lemma1Check> {
    let placement: Vec<usize> = (0..=b).collect();
    verify_lemma1_with(g, &placement, t, tol, caps)
}

/// Compares, for every black tuple `z`, the interchange law of ball `b + 1`
/// given that balls `1..b` sit at `z` against the conditional expected
/// redness `E(ρ_t(y) | blacks at z)` of the chameleon process.
pub fn verify_lemma1_with(g: &Graph, placement: &[usize], t: f64, tol: f64, caps: Caps) -> Result<Lemma1Check> {
    if placement.is_empty() {
        return Err(Error::InvalidArgument("placement must be nonempty".into()));
    }
    let n = g.vertex_count();
    let start = ChameleonKey::from_state(&ChameleonState::initial(g, placement.len() - 1, placement)?);

    let bare = enumerate_chameleon_from(g, vec![start.clone()], Recolor::None, caps)?;
    let full = enumerate_chameleon_from(g, vec![start.clone()], Recolor::Full, caps)?;
    let d_bare = distribution_at(&bare, &start, t, tol)?;
    let d_full = distribution_at(&full, &start, t, tol)?;

    let mut lhs: HashMap<Vec<u8>, Vec<f64>> = HashMap::new();
    for (key, &p) in bare.states().iter().zip(d_bare.as_slice()) {
        lhs.entry(key.blacks.clone()).or_insert_with(|| vec![0.0; n])[red_vertex(key)] += p;
    }
    let mut rhs: HashMap<Vec<u8>, (f64, Vec<f64>)> = HashMap::new();
    for (key, &p) in full.states().iter().zip(d_full.as_slice()) {
        let entry = rhs.entry(key.blacks.clone()).or_insert_with(|| (0.0, vec![0.0; n]));
        entry.0 += p;
        for (y, slot) in entry.1.iter_mut().enumerate() {
            *slot += p * key.redness(y);
        }
    }

    let mut tuples: Vec<&Vec<u8>> = lhs.keys().chain(rhs.keys()).collect();
    tuples.sort();
    tuples.dedup();
    let zeros = vec![0.0; n];
    let mut check = Lemma1Check {
        max_discrepancy: 0.0,
        black_marginal_discrepancy: 0.0,
        compared: 0,
        skipped: 0,
    };
    for z in tuples {
        let left = lhs.get(z).unwrap_or(&zeros);
        let p_left: f64 = left.iter().sum();
        let (p_right, right) = rhs.get(z).map_or((0.0, &zeros), |(p, v)| (*p, v));
        check.black_marginal_discrepancy = check.black_marginal_discrepancy.max((p_left - p_right).abs());
        if p_left <= 1e-14 && p_right <= 1e-14 {
            check.skipped += 1;
            continue;
        }
        check.compared += 1;
        let cond = |v: f64, p: f64| if p > 1e-14 { v / p } else { 0.0 };
        for y in 0..n {
            let diff = (cond(left[y], p_left) - cond(right[y], p_right)).abs();
            check.max_discrepancy = check.max_discrepancy.max(diff);
        }
    }
    Ok(check)
}

/// `E ||μ_t(· | Z) - U(· | Z)||` for the standard start, where `Z` are the
/// black positions at time `t` and `U(· | z)` is uniform off `z`.
pub fn lemma2_lhs_exact(g: &Graph, b: usize, t: f64, caps: Caps) -> Result<f64> {
    let n = g.vertex_count();
    let start = ChameleonKey::from_state(&ChameleonState::standard(g, b)?);
    let bare = enumerate_chameleon_from(g, vec![start.clone()], Recolor::None, caps)?;
    let d = distribution_at(&bare, &start, t, 1e-13)?;
    let mut joint: HashMap<Vec<u8>, Vec<f64>> = HashMap::new();
    for (key, &p) in bare.states().iter().zip(d.as_slice()) {
        joint.entry(key.blacks.clone()).or_insert_with(|| vec![0.0; n])[red_vertex(key)] += p;
    }
    let m = (n - b) as f64;
    let mut total = 0.0;
    for (z, row) in &joint {
        let pz: f64 = row.iter().sum();
        if pz <= 0.0 {
            continue;
        }
        let tv: f64 = (0..n)
            .filter(|&y| !z.contains(&(y as u8)))
            .map(|y| (row[y] / pz - 1.0 / m).abs())
            .sum::<f64>()
            * 0.5;
        total += pz * tv;
    }
    Ok(total)
}

/// `Ê(h(M_t)) = E((s_t / s_0) h(M_t))` for the chameleon process from the
/// standard start, computed on the enumerated chain.
pub fn exact_weighted_mean<H>(g: &Graph, b: usize, t: f64, caps: Caps, h: H) -> Result<f64>
where
    H: Fn(&ChameleonKey) -> f64,
{
    let start = ChameleonKey::from_state(&ChameleonState::standard(g, b)?);
    let s0 = start.counts().s();
    let full = enumerate_chameleon_from(g, vec![start.clone()], Recolor::Full, caps)?;
    let d = distribution_at(&full, &start, t, 1e-13)?;
    Ok(full
        .states()
        .iter()
        .zip(d.as_slice())
        .map(|(k, &p)| p * k.counts().s() / s0 * h(k))
        .sum())
}

/// A probability distribution on `k`-tuples of distinct vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct TupleDist {
    k: usize,
    probs: BTreeMap<Vec<usize>, f64>,
}

impl TupleDist {
    /// Repeated tuples are merged; zero-probability tuples dropped.
    pub fn new(k: usize, entries: impl IntoIterator<Item = (Vec<usize>, f64)>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("tuple length must be >= 1".into()));
        }
        let mut probs = BTreeMap::new();
        for (tuple, p) in entries {
            if tuple.len() != k {
                return Err(Error::InvalidArgument(format!("tuple {tuple:?} has length != {k}")));
            }
            let mut sorted = tuple.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidArgument(format!("tuple {tuple:?} repeats a vertex")));
            }
            if !(p >= 0.0) {
                return Err(Error::InvalidArgument(format!("bad probability {p}")));
            }
            if p > 0.0 {
                *probs.entry(tuple).or_insert(0.0) += p;
            }
        }
        let total: f64 = probs.values().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("probabilities sum to {total}")));
        }
        Ok(TupleDist { k, probs })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn prob(&self, tuple: &[usize]) -> f64 {
        self.probs.get(tuple).copied().unwrap_or(0.0)
    }

    /// Mass of every length-`l` prefix, and of every `(prefix, next)` pair.
    fn prefix_tables(&self, l: usize) -> (BTreeMap<&[usize], f64>, BTreeMap<(&[usize], usize), f64>) {
        let mut prefix = BTreeMap::new();
        let mut next = BTreeMap::new();
        for (tuple, &p) in &self.probs {
            *prefix.entry(&tuple[..l]).or_insert(0.0) += p;
            *next.entry((&tuple[..l], tuple[l])).or_insert(0.0) += p;
        }
        (prefix, next)
    }
}

/// `(‖μ - ν‖, Σ_l E_μ ‖μ(· | Z_1..Z_l) - ν(· | Z_1..Z_l)‖)` where the
/// conditionals are laws of the next coordinate. A prefix that `ν` never
/// produces contributes distance 1.
pub fn lemma12_gap(mu: &TupleDist, nu: &TupleDist) -> Result<(f64, f64)> {
    if mu.k != nu.k {
        return Err(Error::Mismatch(format!("tuple lengths {} and {}", mu.k, nu.k)));
    }
    let mut lhs = 0.0;
    for (tuple, &p) in &mu.probs {
        lhs += (p - nu.prob(tuple)).abs();
    }
    for (tuple, &q) in &nu.probs {
        if !mu.probs.contains_key(tuple) {
            lhs += q;
        }
    }
    lhs *= 0.5;

    let mut rhs = 0.0;
    for l in 0..mu.k {
        let (mu_prefix, mu_next) = mu.prefix_tables(l);
        let (nu_prefix, nu_next) = nu.prefix_tables(l);
        for (&prefix, &pm) in &mu_prefix {
            let pn = nu_prefix.get(prefix).copied().unwrap_or(0.0);
            if pn == 0.0 {
                rhs += pm;
                continue;
            }
            let mut diff = 0.0;
            for (&(pre, y), &q) in mu_next.range((prefix, 0)..=(prefix, usize::MAX)) {
                debug_assert_eq!(pre, prefix);
                diff += (q / pm - nu_next.get(&(prefix, y)).copied().unwrap_or(0.0) / pn).abs();
            }
            for (&(_, y), &q) in nu_next.range((prefix, 0)..=(prefix, usize::MAX)) {
                if !mu_next.contains_key(&(prefix, y)) {
                    diff += q / pn;
                }
            }
            rhs += pm * 0.5 * diff;
        }
    }
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::heat_kernel_cycle;
    use rand::{Rng, SeedableRng};

    #[test]
    fn lemma1_at_time_zero_is_exact() {
        let g = Graph::cycle(4).unwrap();
        let c = verify_lemma1(&g, 1, 0.0, 1e-10, Caps::default()).unwrap();
        assert_eq!(c.max_discrepancy, 0.0);
        assert_eq!(c.compared, 1);
    }

    #[test]
    fn lemma1_b0_cycle5_matches_single_walker() {
        let g = Graph::cycle(5).unwrap();
        let c = verify_lemma1(&g, 0, 1.0, 1e-10, Caps::default()).unwrap();
        assert!(c.max_discrepancy <= 1e-8, "{c:?}");
        // unconditioned: the red ball is a rate-1-per-edge walker
        let start = ChameleonKey::from_state(&ChameleonState::standard(&g, 0).unwrap());
        let full = enumerate_chameleon_from(&g, vec![start.clone()], Recolor::Full, Caps::default()).unwrap();
        let d = distribution_at(&full, &start, 1.0, 1e-12).unwrap();
        let kernel = heat_kernel_cycle(5, 0.5).unwrap();
        for y in 0..5 {
            let rho: f64 = full.states().iter().zip(d.as_slice()).map(|(k, &p)| p * k.redness(y)).sum();
            assert!((rho - kernel[y]).abs() < 1e-9);
        }
    }

    #[test]
    fn lemma1_b1_cycle4() {
        let g = Graph::cycle(4).unwrap();
        for t in [0.3, 1.0, 3.0] {
            let c = verify_lemma1(&g, 1, t, 1e-10, Caps::default()).unwrap();
            assert!(c.max_discrepancy <= 1e-8, "t={t}: {c:?}");
            assert!(c.black_marginal_discrepancy <= 1e-10);
            assert_eq!(c.compared, 4);
        }
    }

    #[test]
    fn lemma2_lhs_limits() {
        let g = Graph::cycle(4).unwrap();
        // t = 0: red ball at a point, TV to uniform over m = 3 vertices is 2/3
        assert!((lemma2_lhs_exact(&g, 1, 0.0, Caps::default()).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!(lemma2_lhs_exact(&g, 1, 30.0, Caps::default()).unwrap() < 1e-10);
    }

    #[test]
    fn weighted_mean_of_one_is_one() {
        let g = Graph::cycle(4).unwrap();
        for t in [0.0, 0.5, 2.0] {
            let v = exact_weighted_mean(&g, 0, t, Caps::default(), |_| 1.0).unwrap();
            assert!((v - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn tuple_dist_validation() {
        assert!(TupleDist::new(2, [(vec![0, 0], 1.0)]).is_err());
        assert!(TupleDist::new(2, [(vec![0], 1.0)]).is_err());
        assert!(TupleDist::new(1, [(vec![0], 0.5)]).is_err());
        assert!(TupleDist::new(1, [(vec![0], 0.5), (vec![0], 0.5)]).is_ok());
    }

    fn random_dist(rng: &mut impl Rng, k: usize, n: usize) -> TupleDist {
        let mut tuples = Vec::new();
        let mut stack = vec![Vec::new()];
        while let Some(t) = stack.pop() {
            if t.len() == k {
                tuples.push(t);
                continue;
            }
            for v in 0..n {
                if !t.contains(&v) {
                    let mut next = t.clone();
                    next.push(v);
                    stack.push(next);
                }
            }
        }
        let weights: Vec<f64> = tuples
            .iter()
            .map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random::<f64>() })
            .collect();
        let total: f64 = weights.iter().sum::<f64>().max(1e-300);
        TupleDist::new(k, tuples.into_iter().zip(weights.into_iter().map(|w| w / total))).unwrap()
    }

    #[test]
    fn lemma12_examples() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let mu = random_dist(&mut rng, 2, 4);
        assert_eq!(lemma12_gap(&mu, &mu).unwrap(), (0.0, 0.0));
        let a = random_dist(&mut rng, 1, 5);
        let b = random_dist(&mut rng, 1, 5);
        let (lhs, rhs) = lemma12_gap(&a, &b).unwrap();
        assert!((lhs - rhs).abs() < 1e-15);
        for _ in 0..20 {
            let (mu, nu) = (random_dist(&mut rng, 2, 4), random_dist(&mut rng, 2, 4));
            let (lhs, rhs) = lemma12_gap(&mu, &nu).unwrap();
            assert!(lhs <= rhs + 1e-12, "{lhs} > {rhs}");
        }
        // disjoint supports with a prefix nu never produces
        let mu = TupleDist::new(2, [(vec![0, 1], 1.0)]).unwrap();
        let nu = TupleDist::new(2, [(vec![2, 3], 1.0)]).unwrap();
        assert_eq!(lemma12_gap(&mu, &nu).unwrap(), (1.0, 2.0));
    }
}
