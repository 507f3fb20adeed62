//! The half-torus occupancy experiment behind the `L² log k` lower bound.
//!
//! Black balls start packed around first coordinate `L/4`, all in the half
//! `v¹ < L/2`. `N_t` counts black balls in `U = {v : L/2 <= v¹ < L}`; under
//! the uniform law `N >= k/2` has probability at least 1/2, while for small
//! `t` it stays unlikely. Balls are labeled, so runs use the interchange
//! construction (each edge swaps its endpoints at rate 1).

use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::exact::heat_kernel_cycle;
use crate::graph::Graph;
use crate::processes::{simulate_swaps, ExclusionConfig};
use crate::report::{ExperimentReport, Verdict, WeightKind, WeightedEstimate, SIGMAS};
use crate::rng::{run_trials, RngSeed};
use crate::stats::{chi_square, pool_small_cells, MeanVar};

/// `S = {v : L/8 <= v¹ <= 3L/8}` and `U = {v : L/2 <= v¹ < L}` as vertex
/// masks, with `v¹` the first coordinate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HalfSpaceSets {
    pub s_set: Vec<bool>,
    pub u_set: Vec<bool>,
}

impl HalfSpaceSets {
    pub fn new(g: &Graph) -> Result<Self> {
        let (l, _) = g
            .torus_dims()
            .ok_or_else(|| Error::InvalidGraph("half-space sets need a torus".into()))?;
        let n = g.vertex_count();
        let first = |v: usize| v % l;
        Ok(HalfSpaceSets {
            s_set: (0..n).map(|v| 8 * first(v) >= l && 8 * first(v) <= 3 * l).collect(),
            u_set: (0..n).map(|v| 2 * first(v) >= l).collect(),
        })
    }

    pub fn u_vertices(&self) -> Vec<usize> {
        (0..self.u_set.len()).filter(|&v| self.u_set[v]).collect()
    }
}

fn check_l(l: usize) -> Result<()> {
    if l == 0 || !l.is_multiple_of(8) {
        return Err(Error::InvalidArgument(format!("L = {l} must be a positive multiple of 8")));
    }
    Ok(())
}

/// Vertices of the `k` black balls in fill order: first-coordinate slabs
/// `c` in `[0, L/2)` taken by increasing `|c - L/4|` (ties to the smaller
/// `c`), each slab filled in ascending vertex index.
pub fn concentrated_placement(l: usize, d: usize, k: usize) -> Result<Vec<usize>> {
    check_l(l)?;
    let g = Graph::torus(l, d)?;
    let n = g.vertex_count();
    if k == 0 || 2 * k > n {
        return Err(Error::InvalidConfig(format!("need 1 <= k <= n/2, got k = {k}, n = {n}")));
    }
    let mut slabs: Vec<usize> = (0..l / 2).collect();
    slabs.sort_by_key(|&c| (c.abs_diff(l / 4), c));
    Ok(slabs
        .into_iter()
        .flat_map(|c| (0..n).filter(move |&v| v % l == c))
        .take(k)
        .collect())
}

/// The concentrated start as an exclusion configuration.
pub fn initial_config_concentrated(l: usize, d: usize, k: usize) -> Result<ExclusionConfig> {
    let placement = concentrated_placement(l, d, k)?;
    ExclusionConfig::from_vertices(l.pow(d as u32), &placement)
}

/// `Σ |v¹(x) - L/4|` over black balls, the quantity the start minimizes.
pub fn concentration_cost(l: usize, vertices: &[usize]) -> usize {
    vertices.iter().map(|&v| (v % l).abs_diff(l / 4)).sum()
}

fn ln_binomial(n: u64, k: u64) -> f64 {
    statrs::function::factorial::ln_binomial(n, k)
}

/// `P(N >= k/2)` for `N ~ Hypergeometric(n, n/2, k)`: the chance that a
/// uniform configuration puts at least half its black balls in `U`.
pub fn uniform_baseline(n: usize, k: usize) -> Result<f64> {
    if !n.is_multiple_of(2) || k > n {
        return Err(Error::InvalidArgument(format!("need even n >= k, got n = {n}, k = {k}")));
    }
    let half = (n / 2) as u64;
    let (n, k) = (n as u64, k as u64);
    let total = ln_binomial(n, k);
    Ok((k.div_ceil(2)..=k.min(half))
        .filter(|&j| k - j <= half)
        .map(|j| (ln_binomial(half, j) + ln_binomial(half, k - j) - total).exp())
        .sum::<f64>()
        .min(1.0))
}

/// One time point of the experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundRow {
    pub t: f64,
    pub p_hat: f64,
    pub stderr: f64,
    pub baseline: f64,
    /// `baseline - p_hat - 3 stderr`.
    pub gap: f64,
    /// `gap > 1/4`.
    pub distinguished: bool,
}

/// Black-ball vertices at time `t` for each trial, from the concentrated
/// start (balls `0..k` black, the rest filling the other vertices).
fn black_positions_at(l: usize, d: usize, k: usize, t: f64, trials: usize, seed: RngSeed) -> Result<(Graph, Vec<Vec<usize>>)> {
    let g = Graph::torus(l, d)?;
    let n = g.vertex_count();
    let placement = concentrated_placement(l, d, k)?;
    let mut taken = vec![false; n];
    for &v in &placement {
        taken[v] = true;
    }
    let start: Vec<usize> = placement
        .iter()
        .copied()
        .chain((0..n).filter(|&v| !taken[v]))
        .collect();
    let runs = run_trials(seed, trials, |_, rng| {
        let mut pos = start.clone();
        simulate_swaps(&g, &mut pos, t, rng).map(|()| pos[..k].to_vec())
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    Ok((g, runs))
}

fn count_in_u(l: usize, blacks: &[usize]) -> usize {
    blacks.iter().filter(|&&v| 2 * (v % l) >= l).count()
}

/// Estimates `P(N_t >= k/2)` and compares it with the uniform baseline.
pub fn lowerbound_row(l: usize, d: usize, k: usize, t: f64, trials: usize, seed: RngSeed) -> Result<LowerBoundRow> {
    if trials < 2 {
        return Err(Error::InvalidArgument("need at least 2 trials".into()));
    }
    let (g, runs) = black_positions_at(l, d, k, t, trials, seed)?;
    let acc: MeanVar = runs
        .iter()
        .map(|b| f64::from(u8::from(2 * count_in_u(l, b) >= k)))
        .collect();
    let baseline = uniform_baseline(g.vertex_count(), k)?;
    let gap = baseline - acc.mean() - SIGMAS * acc.stderr();
    Ok(LowerBoundRow {
        t,
        p_hat: acc.mean(),
        stderr: acc.stderr(),
        baseline,
        gap,
        distinguished: gap > 0.25,
    })
}

/// [`lowerbound_row`] as a report with the `distinguished` verdict.
pub fn run_lowerbound(l: usize, d: usize, k: usize, t: f64, trials: usize, seed: RngSeed) -> Result<ExperimentReport> {
    let row = lowerbound_row(l, d, k, t, trials, seed)?;
    let mut report = ExperimentReport::new("lower-bound", format!("torus:L={l},d={d}"), Some(seed.0))
        .param("k", k)
        .param("t", t)
        .param("trials", trials)
        .param("baseline", row.baseline);
    report.add_estimate(
        "p_half_in_u",
        WeightedEstimate {
            point: row.p_hat,
            stderr: row.stderr,
            trials: trials as u64,
            weight: WeightKind::Plain,
        },
    );
    report.add_verdict(
        Verdict::new("distinguished", row.distinguished, row.gap, 0.25)
            .about("p_half_in_u")
            .note("observed = baseline - p_hat - 3 stderr"),
    );
    Ok(report)
}

/// Occupancy correlations in `U`, the variance bound `var(N_t) <= E(N_t)`,
/// the Chebyshev bound on `P(N_t >= k/2)`, and the first-coordinate law of
/// every black ball.
pub fn negative_correlation_check(l: usize, d: usize, k: usize, t: f64, trials: usize, seed: RngSeed) -> Result<ExperimentReport> {
    if trials < 10_000 {
        return Err(Error::InvalidArgument(format!("need at least 10^4 trials, got {trials}")));
    }
    let (g, runs) = black_positions_at(l, d, k, t, trials, seed)?;
    let n = g.vertex_count();
    let sets = HalfSpaceSets::new(&g)?;
    let u = sets.u_vertices();
    let mut report = ExperimentReport::new("negative-correlation", format!("torus:L={l},d={d}"), Some(seed.0))
        .param("k", k)
        .param("t", t)
        .param("trials", trials);

    // pairs drawn once from a derived stream
    let all_pairs = u.len() * (u.len() - 1) / 2;
    let mut pick = seed.derive(0x9a17).rng();
    let pairs: Vec<(usize, usize)> = sample(&mut pick, all_pairs, all_pairs.min(20))
        .into_iter()
        .map(|idx| unrank_pair(idx, u.len()))
        .map(|(a, b)| (u[a], u[b]))
        .collect();

    let mut occupied = vec![false; n];
    let mut products = vec![MeanVar::new(); pairs.len()];
    let mut singles = vec![(MeanVar::new(), MeanVar::new()); pairs.len()];
    let mut counts = MeanVar::new();
    let mut moments = [0.0f64; 4];
    let mut hits = MeanVar::new();
    for blacks in &runs {
        for &v in blacks {
            occupied[v] = true;
        }
        for (i, &(a, b)) in pairs.iter().enumerate() {
            let (x, y) = (f64::from(u8::from(occupied[a])), f64::from(u8::from(occupied[b])));
            products[i].push(x * y);
            singles[i].0.push(x);
            singles[i].1.push(y);
        }
        let nt = count_in_u(l, blacks) as f64;
        counts.push(nt);
        for (j, m) in moments.iter_mut().enumerate() {
            *m += nt.powi(j as i32 + 1);
        }
        hits.push(f64::from(u8::from(2.0 * nt >= k as f64)));
        for &v in blacks {
            occupied[v] = false;
        }
    }

    // covariance stderr from the per-trial centred products
    let mut pair_ok = true;
    let mut worst = f64::NEG_INFINITY;
    for (i, &(a, b)) in pairs.iter().enumerate() {
        let (mx, my) = (singles[i].0.mean(), singles[i].1.mean());
        let centred: MeanVar = runs
            .iter()
            .map(|blacks| {
                let x = f64::from(u8::from(blacks.contains(&a)));
                let y = f64::from(u8::from(blacks.contains(&b)));
                (x - mx) * (y - my)
            })
            .collect();
        let cov = products[i].mean() - mx * my;
        let se = centred.stderr();
        pair_ok &= cov <= SIGMAS * se;
        if se > 0.0 {
            worst = worst.max(cov / se);
        } else if cov > 0.0 {
            worst = f64::INFINITY;
        }
        report.add_estimate(
            format!("cov_{a}_{b}"),
            WeightedEstimate {
                point: cov,
                stderr: se,
                trials: trials as u64,
                weight: WeightKind::Plain,
            },
        );
    }
    report.add_verdict(
        Verdict::new("negative_correlation", pair_ok, worst, SIGMAS)
            .note(format!("{} pairs in U; observed = max cov/stderr", pairs.len())),
    );

    // var(N) - E(N) with a delta-method standard error
    let nn = trials as f64;
    let mean = counts.mean();
    let var = counts.variance();
    let raw: Vec<f64> = moments.iter().map(|m| m / nn).collect();
    let mu4 = raw[3] - 4.0 * mean * raw[2] + 6.0 * mean * mean * raw[1] - 3.0 * mean.powi(4);
    let se = (((mu4 - var * var).max(0.0) + var) / nn).sqrt();
    let excess = var - mean;
    report.add_estimate(
        "var_minus_mean",
        WeightedEstimate {
            point: excess,
            stderr: se,
            trials: trials as u64,
            weight: WeightKind::Plain,
        },
    );
    report.add_verdict(
        Verdict::new("variance_bound", excess <= SIGMAS * se, excess, SIGMAS * se).about("var_minus_mean"),
    );

    // Chebyshev: P(N >= k/2) <= var / (k/2 - E N)^2 when E N < k/2
    let half = k as f64 / 2.0;
    let est = WeightedEstimate::from_acc(&hits, WeightKind::Plain);
    if mean < half {
        let bound = var / (half - mean).powi(2);
        report.add_verdict(
            Verdict::new("chebyshev", est.point - SIGMAS * est.stderr <= bound, est.point, bound)
                .about("p_half_in_u"),
        );
    } else {
        report.add_verdict(Verdict::vacuous("chebyshev", "E(N_t) >= k/2"));
    }
    report.add_estimate("p_half_in_u", est);

    // first coordinate of each black ball against the cycle walk law
    let kernel = heat_kernel_cycle(l, t / 2.0)?;
    let placement = concentrated_placement(l, d, k)?;
    let mut min_p = 1.0f64;
    for (ball, &v0) in placement.iter().enumerate() {
        let mut observed = vec![0u64; l];
        for blacks in &runs {
            observed[(blacks[ball] % l + l - v0 % l) % l] += 1;
        }
        let (obs, exp) = pool_small_cells(&observed, &kernel, 5.0);
        let (_, _, p) = chi_square(&obs, &exp);
        min_p = min_p.min(p);
    }
    let level = 1e-3 / k as f64;
    report.add_verdict(
        Verdict::new("first_coordinate_law", min_p >= level, min_p, level)
            .note("smallest chi-square p-value over black balls; Bonferroni level 1e-3/k"),
    );
    Ok(report)
}

/// The `idx`-th pair `(a, b)`, `a < b < len`, in lexicographic order.
fn unrank_pair(mut idx: usize, len: usize) -> (usize, usize) {
    for a in 0..len {
        let row = len - a - 1;
        if idx < row {
            return (a, a + 1 + idx);
        }
        idx -= row;
    }
    unreachable!("pair index out of range")
}
