//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use exclusion_lab::analysis::*;
use exclusion_lab::bounds::*;
use exclusion_lab::exact::*;
use exclusion_lab::graph::Graph;
use exclusion_lab::lowerbound::*;
use exclusion_lab::processes::*;
use exclusion_lab::rng::{run_trials, RngSeed};
use exclusion_lab::stats::{chi_square, linear_fit, median, pool_small_cells, MeanVar};

type Outcome = Result<(bool, String), String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn lemma1_exactness() -> Outcome {
    let caps = Caps::default();
    let mut worst = 0.0f64;
    for g in [Graph::cycle(4), Graph::cycle(5), Graph::path(4)] {
        let g = g.map_err(err)?;
        for b in [0, 1] {
            for t in [0.3, 1.0, 3.0] {
                let c = verify_lemma1(&g, b, t, 1e-13, caps).map_err(err)?;
                worst = worst.max(c.max_discrepancy);
            }
        }
    }
    Ok((worst <= 1e-8, format!("max discrepancy {worst:.3e} (limit 1e-8)")))
}

fn absorption_law() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (g, b, seed) in [(Graph::cycle(5), 0, 21), (Graph::cycle(6), 1, 22)] {
        let g = g.map_err(err)?;
        let st = ChameleonState::standard(&g, b).map_err(err)?;
        let m = st.m() as f64;
        let runs = run_trials(RngSeed(seed), 100_000, |_, rng| {
            run_to_absorption(&g, &st, rng).map(|a| f64::from(u8::from(a.is_red())))
        });
        let acc: MeanVar = runs.into_iter().collect::<Result<_, _>>().map_err(err)?;
        let z = (acc.mean() - 1.0 / m) / acc.stderr();
        ok &= z.abs() <= 3.0;
        parts.push(format!("n={} b={b}: P(A)={:.5} vs {:.5} ({z:+.2} sigma)", g.vertex_count(), acc.mean(), 1.0 / m));
    }
    Ok((ok, parts.join("; ")))
}

fn depinking_arithmetic() -> Outcome {
    let g = Graph::cycle(6).map_err(err)?;
    let st = ChameleonState::standard(&g, 1).map_err(err)?;
    let traces = absorption_traces(&g, &st, 100_000, RngSeed(31)).map_err(err)?;
    let report = martingale_report(&traces, "cycle6").map_err(err)?;
    let v = report.verdict("delta_rule").ok_or("missing delta_rule verdict")?;
    Ok((v.passed && !v.vacuous, format!("{} violations; {}", v.observed, v.note)))
}

fn martingale_suite() -> Outcome {
    let mut ok = true;
    let mut worst = 0.0f64;
    for (g, b) in [(Graph::cycle(5), 0), (Graph::torus(4, 2), 1)] {
        let g = g.map_err(err)?;
        let st0 = ChameleonState::standard(&g, b).map_err(err)?;
        let s0 = st0.counts().s();
        for (i, t) in [0.5, 2.0, 8.0].into_iter().enumerate() {
            let seed = RngSeed(400 + 10 * b as u64 + i as u64);
            let w = weighted_chameleon_mean(&g, &st0, t, 20_000, seed, |_| 1.0).map_err(err)?;
            let z = (w.point - 1.0) / w.stderr;
            ok &= z.abs() <= 3.0;
            worst = worst.max(z.abs());
            let s_t: MeanVar = run_trials(seed.derive(1), 20_000, |_, rng| {
                let mut st = st0.clone();
                simulate_chameleon_until(&g, &mut st, Stop::At(t), rng, None);
                st.counts().s()
            })
            .into_iter()
            .collect();
            let z = (s_t.mean() - s0) / s_t.stderr();
            ok &= z.abs() <= 3.0;
            worst = worst.max(z.abs());
        }
        let traces = absorption_traces(&g, &st0, 20_000, RngSeed(450 + b as u64)).map_err(err)?;
        let report = martingale_report(&traces, "").map_err(err)?;
        let v = report.verdict("increment_mean_zero").ok_or("missing verdict")?;
        ok &= v.passed && !v.vacuous;
        worst = worst.max(v.observed);
    }
    Ok((ok, format!("largest deviation {worst:.2} sigma (limit 3)")))
}

fn black_set<I: IntoIterator<Item = usize>>(vs: I) -> u128 {
    vs.into_iter().fold(0, |m, v| m | 1 << v)
}

fn three_way_consistency() -> Outcome {
    let g = Graph::cycle(4).map_err(err)?;
    let caps = Caps::default();
    let t = 1.0;
    let ex = enumerate_exclusion(&g, 2, caps).map_err(err)?;
    let pe = ex
        .transient_distribution(&DistVector::point_mass(ex.len(), ex.index_of(&0b0011).unwrap()), t, 1e-13)
        .map_err(err)?;
    // labeled chain tracking balls 0 (black) and 1 (red, never recolored)
    let bare = enumerate_chameleon(&g, 1, Recolor::None, caps).map_err(err)?;
    let key0 = ChameleonKey::from_state(&ChameleonState::standard(&g, 1).map_err(err)?);
    let pb = bare
        .transient_distribution(&DistVector::point_mass(bare.len(), bare.index_of(&key0).unwrap()), t, 1e-13)
        .map_err(err)?;
    let mut projected = vec![0.0; ex.len()];
    for (key, p) in bare.states().iter().zip(pb.as_slice()) {
        let red = key.colors.iter().position(|&c| c == Color::Red).unwrap();
        let mask = black_set([key.blacks[0] as usize, red]);
        projected[ex.index_of(&mask).unwrap()] += p;
    }
    let exact_gap = projected
        .iter()
        .zip(pe.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let trials = 100_000;
    let c0 = ExclusionConfig::from_vertices(4, &[0, 1]).map_err(err)?;
    let st0 = ChameleonState::standard(&g, 1).map_err(err)?;
    let samples: [Vec<u128>; 3] = [
        run_trials(RngSeed(51), trials, |_, rng| {
            let c = simulate_exclusion(&g, &c0, t, rng).unwrap();
            black_set(c.vertices())
        }),
        run_trials(RngSeed(52), trials, |_, rng| {
            let (pos, _) = simulate_interchange(&g, t, rng).unwrap();
            black_set([pos[0], pos[1]])
        }),
        run_trials(RngSeed(53), trials, |_, rng| {
            let (st, _) = simulate_chameleon(&g, &st0, t, rng).unwrap();
            black_set([st.position(0), st.position(1)])
        }),
    ];
    let mut min_p = 1.0f64;
    for s in &samples {
        let mut obs = vec![0u64; ex.len()];
        for mask in s {
            obs[ex.index_of(mask).unwrap()] += 1;
        }
        let expected: Vec<f64> = pe.as_slice().to_vec();
        let (o, e) = pool_small_cells(&obs, &expected, 5.0);
        min_p = min_p.min(chi_square(&o, &e).2);
    }
    Ok((
        exact_gap <= 1e-8 && min_p >= 1e-3,
        format!("exact gap {exact_gap:.3e} (limit 1e-8); smallest chi-square p {min_p:.4} (level 1e-3)"),
    ))
}

fn mixing_scaling() -> Outcome {
    let caps = Caps::default();
    let ratios: Vec<f64> = [4, 6, 8, 10, 12]
        .iter()
        .map(|&l| mixing_row(l, 1, 2, caps).map(|r| r.tau_mix / (l * l) as f64))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let med = median(&ratios);
    let spread = ratios.iter().map(|r| (r / med - 1.0).abs()).fold(0.0, f64::max);
    let (xs, ys): (Vec<f64>, Vec<f64>) = (2..=6)
        .map(|k| mixing_row(12, 1, k, caps).map(|r| ((k as f64).ln(), r.tau_mix)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?
        .into_iter()
        .unzip();
    let (_, slope, r2) = linear_fit(&xs, &ys);
    Ok((
        spread <= 0.25 && slope > 0.0 && r2 >= 0.9,
        format!("tau/L^2 within {:.1}% of median {med:.4}; slope vs ln k {slope:.3}, R^2 {r2:.3}", 100.0 * spread),
    ))
}

fn heat_kernel_grid() -> Outcome {
    let fit = || -> Result<(f64, bool), String> {
        let rows = tau_eps_grid(&[4, 6, 8], &[2, 3]).map_err(err)?;
        let d = fit_d(&rows).map_err(err)?;
        let holds = rows
            .iter()
            .all(|r| r.tau <= r.eps.powf(-2.0 / r.d as f64) * d * logd_plus(r.d) * (1.0 + 1e-12));
        Ok((d, holds))
    };
    let (d1, holds) = fit()?;
    let (d2, _) = fit()?;
    let golden = 5.18937451377565e-2;
    let ok = holds && (d1 - d2).abs() <= 1e-6 && (d1 - golden).abs() <= 1e-6;
    Ok((ok, format!("fitted D {d1:.10} (golden {golden:.10}), rerun differs by {:.1e}", (d1 - d2).abs())))
}

fn lemma2_inequality() -> Outcome {
    let g = Graph::cycle(4).map_err(err)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (t, seed) in [(0.5, 81), (1.0, 82)] {
        let lhs = lemma2_lhs_exact(&g, 1, t, Caps::default()).map_err(err)?;
        let rhs = lemma2_rhs(&g, 1, t, 100_000, RngSeed(seed)).map_err(err)?;
        ok &= lhs <= rhs.point + 3.0 * rhs.stderr;
        parts.push(format!("t={t}: {lhs:.5} <= {:.5} + 3*{:.1e}", rhs.point, rhs.stderr));
    }
    Ok((ok, parts.join("; ")))
}

fn random_tuple_dist(rng: &mut ChaCha8Rng, n: usize, k: usize) -> TupleDist {
    let mut tuples = Vec::new();
    let support = rng.random_range(1..=6);
    let mut verts: Vec<usize> = (0..n).collect();
    for _ in 0..support {
        verts.shuffle(rng);
        tuples.push(verts[..k].to_vec());
    }
    let weights: Vec<f64> = tuples.iter().map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    TupleDist::new(k, tuples.into_iter().zip(weights.into_iter().map(|w| w / total))).unwrap()
}

fn lemma12_pairs() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(91);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..20 {
        let (n, k) = (4 + i % 3, 1 + i % 3);
        let mu = random_tuple_dist(&mut rng, n, k);
        let nu = random_tuple_dist(&mut rng, n, k);
        let (lhs, rhs) = lemma12_gap(&mu, &nu).map_err(err)?;
        worst = worst.max(lhs - rhs);
    }
    Ok((worst <= 1e-12, format!("max lhs - rhs {worst:.3e} over 20 pairs")))
}

fn lower_bound() -> Outcome {
    let (l, d, k, trials) = (16, 1, 8, 10_000);
    let t_small = (l * l) as f64 / 64.0;
    let early = lowerbound_row(l, d, k, t_small, trials, RngSeed(101)).map_err(err)?;
    let late = lowerbound_row(l, d, k, 10.0 * (l * l) as f64, trials, RngSeed(102)).map_err(err)?;
    let checks = negative_correlation_check(l, d, k, t_small, trials, RngSeed(103)).map_err(err)?;
    let corr = checks.verdict("negative_correlation").ok_or("missing verdict")?;
    let var = checks.verdict("variance_bound").ok_or("missing verdict")?;
    let ok = early.distinguished && !late.distinguished && corr.passed && var.passed;
    Ok((
        ok,
        format!(
            "t={t_small}: gap {:.4} > 1/4; t={}: gap {:.4}; correlation {}; variance {}",
            early.gap,
            10 * l * l,
            late.gap,
            if corr.passed { "ok" } else { "failed" },
            if var.passed { "ok" } else { "failed" },
        ),
    ))
}

fn bounds_module() -> Outcome {
    let gamma = gamma_const();
    let g1 = (1.0 + gamma) * (1.0 + gamma);
    let mut ok = gamma > 0.0 && gamma < 2f64.sqrt() - 1.0 && g1 <= 2.0;

    // f(Z) <= 1/(4 g(S)) over the enumerated states of cycle 4 with b = 1
    let g = Graph::cycle(4).map_err(err)?;
    let table = depink_wait_table(&g, 1, Caps::default()).map_err(err)?;
    let c = table
        .iter()
        .map(|(key, &w)| w / (key.counts().red_paint() + 1.0))
        .fold(0.0f64, f64::max);
    let p = BoundParams::new(c, 1.0, 4, 1, 2, 1).map_err(err)?;
    let mut f_ok = true;
    for (key, &w) in &table {
        let fz = z_functional(key.counts(), w, &p).map_err(err)?;
        f_ok &= f_func(fz.z, &p) <= 0.25 / g_func(fz.red_paint, &p) * (1.0 + 1e-12);
    }
    ok &= f_ok;

    let p = BoundParams::new(1.0, 1.0, 8, 2, 4, 1).map_err(err)?;
    let dec = integral_decomposition(&p).map_err(err)?;
    let i1_err = (dec.i1 - i1_closed_form(&p)).abs();
    ok &= i1_err <= 1e-6;

    let mut rng = ChaCha8Rng::seed_from_u64(111);
    let mut l4_ok = true;
    for _ in 0..1000 {
        let atoms = (0..rng.random_range(1..=8))
            .map(|_| (rng.random_range(0..100), rng.random_range(1..20)))
            .collect();
        let steps = (0..rng.random_range(0..8))
            .map(|_| (rng.random_range(0..200), rng.random_range(0..20)))
            .collect();
        let (lhs, rhs) = Lemma4Instance { atoms, steps }.sides().map_err(err)?;
        l4_ok &= lhs >= rhs;
    }
    ok &= l4_ok;
    Ok((
        ok,
        format!(
            "gamma {gamma:.6}, (1+gamma)^2 {g1:.6}; f(Z) check over {} states {}; I1 error {i1_err:.2e}; Lemma 4 {}",
            table.len(),
            if f_ok { "ok" } else { "failed" },
            if l4_ok { "ok" } else { "failed" },
        ),
    ))
}

fn waiting_time_slope() -> Outcome {
    let g = Graph::path(5).map_err(err)?;
    let start = ChameleonKey::from_state(&ChameleonState::standard(&g, 1).map_err(err)?);
    let (checks, states) = wait_slopes(&g, &start, &[1e-2, 1e-3], Caps::default()).map_err(err)?;
    let ratio = checks[0].error / checks[1].error;
    let ok = states == 6 && checks.iter().all(|c| c.error <= 10.0 * c.eps) && (5.0..20.0).contains(&ratio);
    Ok((
        ok,
        format!(
            "{states} states; slope errors {:.3e} at 1e-2, {:.3e} at 1e-3 (ratio {ratio:.2})",
            checks[0].error, checks[1].error
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("redness identity exact", lemma1_exactness),
        ("absorption probability 1/m", absorption_law),
        ("depinking arithmetic", depinking_arithmetic),
        ("martingale suite", martingale_suite),
        ("exclusion/interchange/chameleon consistency", three_way_consistency),
        ("mixing-time scaling", mixing_scaling),
        ("heat-kernel time grid", heat_kernel_grid),
        ("conditional distance inequality", lemma2_inequality),
        ("tuple distance decomposition", lemma12_pairs),
        ("half-torus lower bound", lower_bound),
        ("bounds module", bounds_module),
        ("waiting-time derivative", waiting_time_slope),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (passed, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!passed);
        println!(
            "criterion {:>2} {}: {name} | {detail} | {:.1}s",
            i + 1,
            if passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
