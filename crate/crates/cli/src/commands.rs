use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;

use exclusion_lab::analysis::{absorption_traces, lemma2_rhs, martingale_report};
use exclusion_lab::bounds::{integral_decomposition, theorem7_bound, BoundParams};
use exclusion_lab::exact::{
    fit_d, lemma12_gap, lemma2_lhs_exact, mixing_row, tau_eps_grid, verify_lemma1, wait_slopes, Caps,
    ChameleonKey, TupleDist,
};
use exclusion_lab::lowerbound::{lowerbound_row, uniform_baseline};
use exclusion_lab::processes::{
    run_to_absorption, simulate_chameleon, simulate_exclusion, simulate_interchange, ChameleonState, Color,
    EventTrace, ExclusionConfig,
};
use exclusion_lab::report::fmt_float;
use exclusion_lab::rng::run_trials;
use exclusion_lab::stats::{linear_fit, median, MeanVar};
use exclusion_lab::{Error, ExperimentReport, Graph, GraphSpec, RngSeed, Verdict, WeightKind, WeightedEstimate};

use crate::output::{judge, Output, RunConfig};
use crate::*;

pub fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Simulate(a) => simulate(cli, a),
        Command::Verify(v) => match v {
            VerifyCommand::Lemma1(a) => verify_lemma1_cmd(cli, a),
            VerifyCommand::Lemma12(a) => verify_lemma12(cli, a),
            VerifyCommand::Martingale(a) => verify_martingale(cli, a),
            VerifyCommand::Prop9(a) => verify_prop9(cli, a),
            VerifyCommand::Prop11(a) => verify_prop11(cli, a),
            VerifyCommand::Lemma2(a) => verify_lemma2(cli, a),
        },
        Command::Mixing(a) => mixing(cli, a),
        Command::LowerBound(a) => lower_bound(cli, a),
        Command::BoundEval(a) => bound_eval(cli, a),
        Command::Absorb(a) => absorb(cli, a),
    }
}

fn caps(cli: &Cli) -> Caps {
    Caps {
        states: cli.max_states,
        dense: cli.max_dense,
    }
}

fn graph(spec: &str) -> Result<(Graph, String), Failure> {
    let spec: GraphSpec = spec.parse()?;
    Ok((spec.build()?, spec.to_string()))
}

fn estimates_csv(report: &ExperimentReport) -> Result<String, Failure> {
    let mut buf = Vec::new();
    report.write_estimates_csv(&mut buf)?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

fn plain(acc: &MeanVar) -> WeightedEstimate {
    WeightedEstimate::from_acc(acc, WeightKind::Plain)
}

fn join_vertices(vs: &[usize]) -> String {
    vs.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

struct SimRow {
    trace: Option<EventTrace>,
    counts: Option<(usize, usize, usize)>,
    depinkings: usize,
    blacks: Vec<usize>,
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> Result<(), Failure> {
    let cfg = RunConfig::new(cli, "simulate", a);
    let (g, label) = graph(&a.graph)?;
    if a.trials == 0 {
        return Err(Failure::Usage("--trials must be at least 1".into()));
    }
    let seed = RngSeed(cli.seed);
    let n = g.vertex_count();
    let rows: Vec<Result<SimRow, Error>> = match a.process {
        Process::Chameleon => {
            let st0 = ChameleonState::standard(&g, a.b)?;
            run_trials(seed, a.trials, |_, rng| {
                let (st, trace) = simulate_chameleon(&g, &st0, a.t, rng)?;
                let c = st.counts();
                Ok(SimRow {
                    depinkings: trace.depink_times.len(),
                    trace: Some(trace),
                    counts: Some((c.r, c.w, c.p)),
                    blacks: st.black_positions().to_vec(),
                })
            })
        }
        Process::Interchange | Process::Exclusion => {
            if a.k == 0 || a.k > n {
                return Err(Failure::Usage(format!("--k must be in 1..={n}")));
            }
            let c0 = ExclusionConfig::from_vertices(n, &(0..a.k).collect::<Vec<_>>())?;
            let interchange = a.process == Process::Interchange;
            run_trials(seed, a.trials, |_, rng| {
                if interchange {
                    let (pos, trace) = simulate_interchange(&g, a.t, rng)?;
                    let mut blacks = pos[..a.k].to_vec();
                    blacks.sort_unstable();
                    Ok(SimRow {
                        trace: Some(trace),
                        counts: None,
                        depinkings: 0,
                        blacks,
                    })
                } else {
                    let c = simulate_exclusion(&g, &c0, a.t, rng)?;
                    Ok(SimRow {
                        trace: None,
                        counts: None,
                        depinkings: 0,
                        blacks: c.vertices(),
                    })
                }
            })
        }
    };
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut out = Output::new(&cli.out)?;
    if let Some(trace) = &rows[0].trace {
        let mut buf = Vec::new();
        trace.write_csv(&mut buf)?;
        out.write("trace.csv", &String::from_utf8(buf).expect("utf-8"))?;
    }
    let mut csv = String::from("trial,r,w,p,depinkings,blacks\n");
    let mut depinks = MeanVar::new();
    let mut paint = MeanVar::new();
    for (i, row) in rows.iter().enumerate() {
        let (r, w, p) = row
            .counts
            .map_or((String::new(), String::new(), String::new()), |(r, w, p)| {
                (r.to_string(), w.to_string(), p.to_string())
            });
        writeln!(csv, "{i},{r},{w},{p},{},{}", row.depinkings, join_vertices(&row.blacks)).unwrap();
        depinks.push(row.depinkings as f64);
        if let Some((r, _, p)) = row.counts {
            paint.push(r as f64 + p as f64 / 2.0);
        }
    }
    out.write("summary.csv", &csv)?;
    let mut report = ExperimentReport::new("simulate", label, Some(cli.seed));
    if a.process == Process::Chameleon {
        report.add_estimate("depinkings", plain(&depinks));
        report.add_estimate("red_paint", plain(&paint));
    }
    out.finish("summary.json", report, &cfg)?;
    println!("wrote {} trial(s) to {}", rows.len(), cli.out.display());
    Ok(())
}

fn verify_lemma1_cmd(cli: &Cli, a: &Lemma1Args) -> Result<(), Failure> {
    let cfg = RunConfig::new(cli, "verify lemma1", a);
    let (g, label) = graph(&a.graph)?;
    let check = verify_lemma1(&g, a.b, a.t, 1e-13, caps(cli))?;
    let mut report = ExperimentReport::new("verify-lemma1", label, None)
        .param("compared", check.compared)
        .param("skipped", check.skipped)
        .param("black_marginal_discrepancy", check.black_marginal_discrepancy);
    report.add_verdict(Verdict::new(
        "redness_identity",
        check.max_discrepancy <= a.tol,
        check.max_discrepancy,
        a.tol,
    ));
    let report = Output::new(&cli.out)?.finish("verify-lemma1.json", report, &cfg)?;
    judge(&report)
}

fn random_tuple_dist<R: Rng>(rng: &mut R, n: usize, k: usize) -> Result<TupleDist, Error> {
    let mut verts: Vec<usize> = (0..n).collect();
    let support = rng.random_range(1..=6);
    let entries: Vec<(Vec<usize>, f64)> = (0..support)
        .map(|_| {
            verts.shuffle(rng);
            (verts[..k].to_vec(), rng.random_range(0.05..1.0))
        })
        .collect();
    let total: f64 = entries.iter().map(|e| e.1).sum();
    TupleDist::new(k, entries.into_iter().map(|(t, w)| (t, w / total)))
}

fn verify_lemma12(cli: &Cli, a: &Lemma12Args) -> Result<(), Failure> {
    let cfg = RunConfig::new(cli, "verify lemma12", a);
    if a.k == 0 || a.k > a.n {
        return Err(Failure::Usage(format!("need 1 <= k <= n, got k = {}, n = {}", a.k, a.n)));
    }
    let mut rng = RngSeed(cli.seed).rng();
    let mut csv = String::from("pair,lhs,rhs\n");
    let mut worst = f64::NEG_INFINITY;
    for i in 0..a.pairs {
        let mu = random_tuple_dist(&mut rng, a.n, a.k)?;
        let nu = random_tuple_dist(&mut rng, a.n, a.k)?;
        let (lhs, rhs) = lemma12_gap(&mu, &nu)?;
        worst = worst.max(lhs - rhs);
        writeln!(csv, "{i},{},{}", fmt_float(lhs), fmt_float(rhs)).unwrap();
    }
    let mut report = ExperimentReport::new("verify-lemma12", format!("complete:n={}", a.n), Some(cli.seed));
    report.add_verdict(
        Verdict::new("decomposition", worst <= 1e-12, worst, 1e-12).note("observed = max(lhs - rhs)"),
    );
    let mut out = Output::new(&cli.out)?;
    out.write("lemma12.csv", &csv)?;
    let report = out.finish("verify-lemma12.json", report, &cfg)?;
    judge(&report)
}

fn verify_martingale(cli: &Cli, a: &MartingaleArgs) -> Result<(), Failure> {
    let cfg = RunConfig::new(cli, "verify martingale", a);
    let (g, label) = graph(&a.graph)?;
    let st = ChameleonState::standard(&g, a.b)?;
    let traces = absorption_traces(&g, &st, a.trials, RngSeed(cli.seed))?;
    let mut report = martingale_report(&traces, &label)?;
    report.seed = Some(cli.seed);
    let mut out = Output::new(&cli.out)?;
    out.write("martingale.csv", &estimates_csv(&report)?)?;
    let report = out.finish("verify-martingale.json", report, &cfg)?;
    judge(&report)
}

fn verify_prop9(cli: &Cli, a: &Prop9Args) -> Result<(), Failure> {
    let cfg = RunConfig::new(cli, "verify prop9", a);
    if a.l.is_empty() || a.d.is_empty() {
        return Err(Failure::Usage("empty grid".into()));
    }
    let rows = tau_eps_grid(&a.l, &a.d)?;
    let fitted = fit_d(&rows)?;
    let mut csv = String::from("L,d,eps,tau,ratio\n");
    for r in &rows {
        writeln!(csv, "{},{},{},{},{}", r.l, r.d, fmt_float(r.eps), fmt_float(r.tau), fmt_float(r.ratio)).unwrap();
    }
    let mut report = ExperimentReport::new("verify-prop9", "torus", None).param("fitted_D", fitted);
    report.add_verdict(
        Verdict::new("time_bound", fitted <= a.big_d * (1.0 + 1e-12), fitted, a.big_d)
            .note("observed = fitted D; threshold = reference D"),
    );
    println!("fitted D = {}", fmt_float(fitted));
    let mut out = Output::new(&cli.out)?;
    out.write("prop9.csv", &csv)?;
    let report = out.finish("verify-prop9.json", report, &cfg)?;
    judge(&report)
}

fn verify_prop11(cli: &Cli, a: &Prop11Args) -> Result<(), Failure> {
    let cfg = RunConfig::new(cli, "verify prop11", a);
    if a.eps.is_empty() {
        return Err(Failure::Usage("no step sizes".into()));
    }
    let (g, label) = graph(&a.graph)?;
    let start = ChameleonKey::from_state(&ChameleonState::standard(&g, a.b)?);
    let (checks, states) = wait_slopes(&g, &start, &a.eps, caps(cli))?;
    let mut csv = String::from("eps,slope,error\n");
    let mut report = ExperimentReport::new("verify-prop11", label, None).param("states", states);
    for c in &checks {
        writeln!(csv, "{},{},{}", fmt_float(c.eps), fmt_float(c.slope), fmt_float(c.error)).unwrap();
        report.add_verdict(
            Verdict::new(format!("slope_eps_{}", c.eps), c.error <= 10.0 * c.eps, c.error, 10.0 * c.eps)
                .note("observed = |slope + 1|"),
        );
    }
    let mut out = Output::new(&cli.out)?;
    out.write("prop11.csv", &csv)?;
    let report = out.finish("verify-prop11.json", report, &cfg)?;
    judge(&report)
}

fn verify_lemma2(cli: &Cli, a: &Lemma2Args) -> Result<(), Failure> {
    let cfg = RunConfig::new(cli, "verify lemma2", a);
    let (g, label) = graph(&a.graph)?;
    let lhs = lemma2_lhs_exact(&g, a.b, a.t, caps(cli))?;
    let rhs = lemma2_rhs(&g, a.b, a.t, a.trials, RngSeed(cli.seed))?;
    let limit = rhs.point + 3.0 * rhs.stderr;
    let mut report = ExperimentReport::new("verify-lemma2", label, Some(cli.seed)).param("lhs_exact", lhs);
    report.add_estimate("rhs", rhs);
    report.add_verdict(Verdict::new("inequality", lhs <= limit, lhs, limit).about("rhs"));
    let report = Output::new(&cli.out)?.finish("verify-lemma2.json", report, &cfg)?;
    judge(&report)
}

fn mixing(cli: &Cli, a: &MixingArgs) -> Result<(), Failure> {
    let cfg = RunConfig::new(cli, "mixing", a);
    if a.l.is_empty() || a.k.is_empty() {
        return Err(Failure::Usage("empty grid: give --L and --k".into()));
    }
    let mut csv = String::from("L,d,k,states,tau_mix,tau_relax,ratio\n");
    let mut rows = Vec::new();
    for &l in &a.l {
        for &k in &a.k {
            let r = mixing_row(l, a.d, k, caps(cli))?;
            writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                r.l,
                r.d,
                r.k,
                r.states,
                fmt_float(r.tau_mix),
                fmt_float(r.tau_relax),
                fmt_float(r.ratio)
            )
            .unwrap();
            rows.push(r);
        }
    }
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let med = median(&ratios);
    let spread = ratios.iter().map(|r| (r / med - 1.0).abs()).fold(0.0, f64::max);
    let mut report = ExperimentReport::new("mixing", format!("torus:d={}", a.d), None)
        .param("median_ratio", med)
        .param("max_relative_spread", spread);
    if a.k.len() >= 2 {
        for &l in &a.l {
            let (xs, ys): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter(|r| r.l == l)
                .map(|r| ((r.k as f64).ln(), r.tau_mix))
                .unzip();
            let (intercept, slope, r2) = linear_fit(&xs, &ys);
            report.notes.push(format!(
                "L={l}: tau_mix = {} + {} ln k (R^2 {})",
                fmt_float(intercept),
                fmt_float(slope),
                fmt_float(r2)
            ));
        }
    }
    print!("{csv}");
    let mut out = Output::new(&cli.out)?;
    out.write("mixing.csv", &csv)?;
    out.finish("mixing.json", report, &cfg)?;
    Ok(())
}

fn lower_bound(cli: &Cli, a: &LowerBoundArgs) -> Result<(), Failure> {
    let cfg = RunConfig::new(cli, "lower-bound", a);
    let mut csv = String::from("t,p_hat,stderr,baseline,gap,verdict\n");
    let mut report = ExperimentReport::new("lower-bound", format!("torus:L={},d={}", a.l, a.d), Some(cli.seed))
        .param("baseline", uniform_baseline(a.l.pow(a.d as u32), a.k)?);
    for (i, &t) in a.t_grid.iter().enumerate() {
        let row = lowerbound_row(a.l, a.d, a.k, t, a.trials, RngSeed(cli.seed).derive(i as u64))?;
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            fmt_float(t),
            fmt_float(row.p_hat),
            fmt_float(row.stderr),
            fmt_float(row.baseline),
            fmt_float(row.gap),
            row.distinguished
        )
        .unwrap();
        report.add_estimate(
            format!("p_half_in_u_t{i}"),
            WeightedEstimate {
                point: row.p_hat,
                stderr: row.stderr,
                trials: a.trials as u64,
                weight: WeightKind::Plain,
            },
        );
    }
    print!("{csv}");
    let mut out = Output::new(&cli.out)?;
    out.write("lower-bound.csv", &csv)?;
    out.finish("lower-bound.json", report, &cfg)?;
    Ok(())
}

fn bound_eval(cli: &Cli, a: &BoundEvalArgs) -> Result<(), Failure> {
    let cfg = RunConfig::new(cli, "bound-eval", a);
    let mut csv = String::from("L,d,k,b,I1,I2,I3,total,theorem7_bound\n");
    for &l in &a.l {
        for &d in &a.d {
            for &k in &a.k {
                let p = BoundParams::new(a.c, a.big_c, l, d, k, a.b)?;
                let dec = integral_decomposition(&p)?;
                writeln!(
                    csv,
                    "{l},{d},{k},{},{},{},{},{},{}",
                    a.b,
                    fmt_float(dec.i1),
                    fmt_float(dec.i2),
                    fmt_float(dec.i3),
                    fmt_float(dec.total),
                    fmt_float(theorem7_bound(&p))
                )
                .unwrap();
            }
        }
    }
    print!("{csv}");
    let mut out = Output::new(&cli.out)?;
    out.write("bound-eval.csv", &csv)?;
    out.finish("bound-eval.json", ExperimentReport::new("bound-eval", "torus", None), &cfg)?;
    Ok(())
}

fn absorb(cli: &Cli, a: &AbsorbArgs) -> Result<(), Failure> {
    let cfg = RunConfig::new(cli, "absorb", a);
    let (g, label) = graph(&a.graph)?;
    if a.trials < 2 {
        return Err(Failure::Usage("--trials must be at least 2".into()));
    }
    let st = ChameleonState::standard(&g, a.b)?;
    let m = st.m();
    let runs = run_trials(RngSeed(cli.seed), a.trials, |_, rng| run_to_absorption(&g, &st, rng));
    let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut csv = String::from("trial,color,depinkings\n");
    let mut red = MeanVar::new();
    for (i, r) in runs.iter().enumerate() {
        let color = if r.color == Color::Red { "red" } else { "white" };
        writeln!(csv, "{i},{color},{}", r.depink_index).unwrap();
        red.push(f64::from(u8::from(r.is_red())));
    }
    let est = plain(&red);
    let target = 1.0 / m as f64;
    let mut report = ExperimentReport::new("absorb", label, Some(cli.seed)).param("m", m);
    report.add_verdict(
        Verdict::new("absorption_probability", est.consistent_with(target), est.point, target).about("p_red"),
    );
    report.add_estimate("p_red", est);
    let mut out = Output::new(&cli.out)?;
    out.write("absorb.csv", &csv)?;
    out.write("absorb-estimates.csv", &estimates_csv(&report)?)?;
    let report = out.finish("absorb.json", report, &cfg)?;
    judge(&report)
}

