use exclusion_lab::analysis::*;
use exclusion_lab::bounds::*;
use exclusion_lab::exact::{depink_wait_table, lemma2_lhs_exact, Caps, ChameleonKey};
use exclusion_lab::graph::Graph;
use exclusion_lab::processes::ChameleonState;
use exclusion_lab::rng::RngSeed;
use exclusion_lab::stats::linear_fit;

#[test]
fn lt_decays() {
    let g = Graph::cycle(4).unwrap();
    let p = BoundParams::new(1.0, 1.0, 4, 1, 1, 0).unwrap();
    let est: Vec<_> = [0.0, 0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&t| estimate_lt(&g, 0, t, &p, 20_000, RngSeed(11), Caps::default()).unwrap())
        .collect();
    assert!(est.iter().all(|e| e.point.is_finite() && e.point >= 0.0));
    for w in est.windows(2) {
        let se = (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        assert!(w[1].point <= w[0].point + 3.0 * se, "{:?} -> {:?}", w[0], w[1]);
    }
    assert!(est[4].point < est[0].point);
}

#[test]
fn f_of_z_below_quarter_over_g() {
    for (g, l, k, b) in [
        (Graph::cycle(4).unwrap(), 4, 2, 1),
        (Graph::cycle(6).unwrap(), 6, 2, 1),
        (Graph::cycle(6).unwrap(), 6, 1, 0),
    ] {
        let table = depink_wait_table(&g, b, Caps::default()).unwrap();
        // smallest c making every waiting time at most g(S)
        let c = table
            .iter()
            .map(|(key, &w)| w / (key.counts().red_paint() + b as f64))
            .fold(0.0f64, f64::max);
        let p = BoundParams::new(c, 1.0, l, 1, k, b).unwrap();
        for (key, &w) in &table {
            let counts = key.counts();
            let fz = z_functional(counts, w, &p).unwrap();
            assert!(fz.y_in_design_range());
            let bound = 0.25 / g_func(fz.red_paint, &p);
            assert!(f_func(fz.z, &p) <= bound * (1.0 + 1e-12), "{key:?}");
        }
    }
}

#[test]
fn first_depinking_time_matches_hitting_time() {
    let g = Graph::cycle(4).unwrap();
    let st = ChameleonState::standard(&g, 1).unwrap();
    let table = depink_wait_table(&g, 1, Caps::default()).unwrap();
    let w = table[&ChameleonKey::from_state(&st)];
    let est = estimate_t1(&g, &st, 50_000, RngSeed(3)).unwrap();
    assert!((est.point - w).abs() <= 3.0 * est.stderr, "{est:?} vs {w}");
}

#[test]
fn conflicting_edges_grow_with_red_set() {
    let g = Graph::torus(8, 1).unwrap();
    let mut ratios = Vec::new();
    for r0 in [1usize, 2, 4] {
        let st = prepainted_start(&g, 0, r0).unwrap();
        let tau = (r0 * r0) as f64;
        let est = conflicting_edges_at(&g, &st, tau, 5_000, RngSeed(r0 as u64)).unwrap();
        assert!(est.point.is_finite());
        ratios.push(est.point / r0 as f64);
    }
    let b = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(b > 0.0, "{ratios:?}");
}

#[test]
fn first_depinking_time_scales_with_paint() {
    let g = Graph::torus(6, 2).unwrap();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    // multiples of 3: the first depinking then needs exactly r0/3 pinkenings
    for r0 in [3usize, 6, 9, 12, 15, 18] {
        let st = prepainted_start(&g, 0, r0).unwrap();
        let est = estimate_t1(&g, &st, 4_000, RngSeed(40 + r0 as u64)).unwrap();
        assert!(est.point > 0.0 && est.point.is_finite());
        // (b + S)^{2/d} with d = 2
        xs.push((r0 as f64).ln());
        ys.push(est.point.ln());
    }
    let (_, slope, _) = linear_fit(&xs, &ys);
    assert!((0.5..=1.5).contains(&slope), "slope {slope}");
}

#[test]
fn lemma2_small_instance() {
    let g = Graph::cycle(4).unwrap();
    for t in [0.5, 1.0] {
        let lhs = lemma2_lhs_exact(&g, 1, t, Caps::default()).unwrap();
        let rhs = lemma2_rhs(&g, 1, t, 20_000, RngSeed(8)).unwrap();
        assert!(lhs <= rhs.point + 3.0 * rhs.stderr, "t={t}: {lhs} vs {rhs:?}");
    }
}

#[test]
fn lemma4_random_instances() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let atoms = (0..rng.random_range(1..=8))
            .map(|_| (rng.random_range(0..50), rng.random_range(1..10)))
            .collect();
        let steps = (0..rng.random_range(0..6))
            .map(|_| (rng.random_range(0..100), rng.random_range(0..10)))
            .collect();
        let (lhs, rhs) = Lemma4Instance { atoms, steps }.sides().unwrap();
        assert!(lhs >= rhs);
    }
}
