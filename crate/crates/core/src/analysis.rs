//! Monte Carlo estimators for the chameleon process.
//!
//! Conditioning on the event `A` (all paint ends red) is done with the
//! importance weight `s_t / s_0`: `Ê(h(M_t)) = E((s_t / s_0) h(M_t))`.
//! Since `P(A) = 1/m`, rejection would waste all but a `1/m` fraction of
//! the trials.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::processes::{delta, simulate_chameleon_until, ChameleonState, Color, EventTrace, Stop};
use crate::report::{ExperimentReport, Verdict, WeightKind, WeightedEstimate, SIGMAS};
use crate::rng::{run_trials, RngSeed};
use crate::stats::MeanVar;

/// Trials below which the `*_given_a` estimators refuse to run.
pub const MIN_TRIALS: usize = 100;

fn check_trials(trials: usize, min: usize) -> Result<()> {
    if trials < min {
        return Err(Error::InvalidArgument(format!("need at least {min} trials, got {trials}")));
    }
    Ok(())
}

/// `E((s_t / s_0) h(M_t))` from `st0` over independent trials.
pub fn weighted_chameleon_mean<H>(
    g: &Graph,
    st0: &ChameleonState,
    t: f64,
    trials: usize,
    seed: RngSeed,
    h: H,
) -> Result<WeightedEstimate>
where
    H: Fn(&ChameleonState) -> f64 + Sync,
{
    check_trials(trials, 2)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("bad time {t}")));
    }
    let s0 = st0.counts().s();
    if s0 == 0.0 {
        return Err(Error::InvalidConfig("start has no red paint".into()));
    }
    let terms = run_trials(seed, trials, |_, rng| {
        let mut st = st0.clone();
        simulate_chameleon_until(g, &mut st, Stop::At(t), rng, None);
        let weight = st.counts().s() / s0;
        if weight == 0.0 {
            0.0
        } else {
            weight * h(&st)
        }
    });
    let acc: MeanVar = terms.into_iter().collect();
    Ok(WeightedEstimate::from_acc(&acc, WeightKind::SRatio))
}

/// `Ê(h(M_t))` from the standard start with `b` black balls.
pub fn conditional_mean_given_a<H>(
    g: &Graph,
    b: usize,
    t: f64,
    h: H,
    trials: usize,
    seed: RngSeed,
) -> Result<WeightedEstimate>
where
    H: Fn(&ChameleonState) -> f64 + Sync,
{
    check_trials(trials, MIN_TRIALS)?;
    weighted_chameleon_mean(g, &ChameleonState::standard(g, b)?, t, trials, seed, h)
}

/// `(1/m) Ê(w_t + p_t/2)`, the bound on the expected distance of the
/// conditional law of ball `b + 1` from uniform.
pub fn lemma2_rhs(g: &Graph, b: usize, t: f64, trials: usize, seed: RngSeed) -> Result<WeightedEstimate> {
    let m = (g.vertex_count() - b) as f64;
    let mut est = conditional_mean_given_a(g, b, t, |st| st.counts().white_paint(), trials, seed)?;
    est.point /= m;
    est.stderr /= m;
    Ok(est)
}

/// Sample mean of the first depinking time `T₁` from `st0`.
pub fn estimate_t1(g: &Graph, st0: &ChameleonState, trials: usize, seed: RngSeed) -> Result<WeightedEstimate> {
    check_trials(trials, 2)?;
    let c = st0.counts();
    if c.red_paint() == 0.0 || c.red_paint() == c.m() as f64 {
        return Err(Error::InvalidConfig("T1 needs red paint strictly between 0 and m".into()));
    }
    let times = run_trials(seed, trials, |_, rng| {
        let mut st = st0.clone();
        simulate_chameleon_until(g, &mut st, Stop::FirstDepinking, rng, None)
    });
    let acc: MeanVar = times.into_iter().collect();
    Ok(WeightedEstimate::from_acc(&acc, WeightKind::Plain))
}

/// The standard start with the `r0 - 1` white balls that follow the red one
/// recolored red, so `S₀ = r₀` and no ball is pink.
pub fn prepainted_start(g: &Graph, b: usize, r0: usize) -> Result<ChameleonState> {
    let mut st = ChameleonState::standard(g, b)?;
    if r0 == 0 || r0 >= st.m() {
        return Err(Error::InvalidConfig(format!("need 1 <= r0 < m = {}", st.m())));
    }
    let balls: Vec<usize> = (b + 1..b + r0).collect();
    st.recolor_white_to_red(&balls)?;
    Ok(st)
}

/// Edges with one endpoint holding a ball of `R₀` and the other a ball of
/// `W₀` (ball sets given as membership masks indexed by ball).
pub fn count_conflicting_edges(g: &Graph, st: &ChameleonState, in_r0: &[bool], in_w0: &[bool]) -> usize {
    g.edges()
        .iter()
        .filter(|&&(u, v)| {
            let (a, b) = (st.ball_at(u), st.ball_at(v));
            (in_r0[a] && in_w0[b]) || (in_r0[b] && in_w0[a])
        })
        .count()
}

/// Mean number of conflicting edges at `τ ~ uniform[0, tau_max]`, with
/// `R₀` and `W₀` the red and white balls of `st0`. `tau_max = 0` freezes
/// `τ` at 0.
pub fn conflicting_edges_at(
    g: &Graph,
    st0: &ChameleonState,
    tau_max: f64,
    trials: usize,
    seed: RngSeed,
) -> Result<WeightedEstimate> {
    check_trials(trials, 2)?;
    if !(tau_max >= 0.0 && tau_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("bad tau_max {tau_max}")));
    }
    let n = st0.n();
    let in_r0: Vec<bool> = (0..n).map(|b| st0.color(b) == Color::Red).collect();
    let in_w0: Vec<bool> = (0..n).map(|b| st0.color(b) == Color::White).collect();
    let counts = run_trials(seed, trials, |_, rng| {
        let tau = if tau_max > 0.0 { rng.random_range(0.0..tau_max) } else { 0.0 };
        let mut st = st0.clone();
        simulate_chameleon_until(g, &mut st, Stop::At(tau), rng, None);
        count_conflicting_edges(g, &st, &in_r0, &in_w0) as f64
    });
    let acc: MeanVar = counts.into_iter().collect();
    Ok(WeightedEstimate::from_acc(&acc, WeightKind::Plain))
}

/// Runs `trials` chameleon processes from `st0` to absorption, keeping only
/// the depinking events of each trace.
pub fn absorption_traces(g: &Graph, st0: &ChameleonState, trials: usize, seed: RngSeed) -> Result<Vec<EventTrace>> {
    let c = st0.counts();
    if c.red_paint() == 0.0 || c.red_paint() == c.m() as f64 {
        return Err(Error::InvalidConfig("start is already absorbed".into()));
    }
    Ok(run_trials(seed, trials, |_, rng| {
        let mut st = st0.clone();
        let mut trace = EventTrace::new(c);
        simulate_chameleon_until(g, &mut st, Stop::Absorption, rng, Some(&mut trace));
        trace.retain_depinkings();
        trace
    }))
}

/// Traces needed before the statistical verdicts are evaluated.
pub const MARTINGALE_MIN_TRACES: usize = 1000;
/// Observations needed in an `r` group before its increment mean is tested.
pub const MIN_GROUP: u64 = 30;

/// Depinking diagnostics over a batch of traces sharing `b` and `m`:
///
/// - `delta_rule`: every consecutive pair satisfies `r' = r ± Δ(r)`;
/// - `increment_mean_zero`: for each `r` value seen at a depinking time
///   (with at least [`MIN_GROUP`] successors), the mean increment is 0
///   within 3 standard errors;
/// - `absorption_probability`: the fraction absorbed at red is `1/m`
///   within 3 standard errors.
///
/// The last two need [`MARTINGALE_MIN_TRACES`] traces (and, for the last,
/// every trace run to absorption); otherwise they are reported vacuous.
pub fn martingale_report(traces: &[EventTrace], graph: &str) -> Result<ExperimentReport> {
    let first = traces
        .first()
        .ok_or_else(|| Error::InvalidArgument("no traces".into()))?
        .initial;
    if let Some(bad) = traces
        .iter()
        .find(|t| t.initial.m() != first.m() || t.initial.b != first.b)
    {
        return Err(Error::Mismatch(format!(
            "trace with (m, b) = ({}, {}) among traces with ({}, {})",
            bad.initial.m(),
            bad.initial.b,
            first.m(),
            first.b
        )));
    }
    let m = first.m();
    let mut report = ExperimentReport::new("martingale", graph, None)
        .param("m", m)
        .param("b", first.b)
        .param("traces", traces.len());

    let mut pairs = 0u64;
    let mut violations = 0u64;
    let mut groups: BTreeMap<usize, MeanVar> = BTreeMap::new();
    for trace in traces {
        let reds = trace.depinking_reds();
        for w in reds.windows(2) {
            pairs += 1;
            let (r, next) = (w[0], w[1]);
            let step = delta(r, m)?;
            if next != r + step && next + step != r {
                violations += 1;
            }
            groups.entry(r).or_default().push(next as f64 - r as f64);
        }
    }
    let mut rule = Verdict::new("delta_rule", violations == 0, violations as f64, 0.0)
        .note(format!("{pairs} consecutive depinking pairs checked"));
    if pairs == 0 {
        rule.vacuous = true;
        rule.note = "no depinkings observed".into();
    }
    report.add_verdict(rule);

    if traces.len() < MARTINGALE_MIN_TRACES {
        let why = format!("fewer than {MARTINGALE_MIN_TRACES} traces");
        report.add_verdict(Verdict::vacuous("increment_mean_zero", why.clone()));
        report.add_verdict(Verdict::vacuous("absorption_probability", why));
        return Ok(report);
    }

    let mut tested = 0;
    let mut all_ok = true;
    let mut worst = 0.0f64;
    for (r, acc) in &groups {
        if acc.count() < MIN_GROUP {
            continue;
        }
        tested += 1;
        let name = format!("increment_mean_r{r}");
        let est = WeightedEstimate::from_acc(acc, WeightKind::Plain);
        let ok = est.consistent_with(0.0);
        all_ok &= ok;
        if est.stderr > 0.0 {
            worst = worst.max(est.point.abs() / est.stderr);
        }
        report.add_estimate(name, est);
    }
    if tested == 0 {
        report.add_verdict(Verdict::vacuous(
            "increment_mean_zero",
            format!("no r value has {MIN_GROUP} observed successors"),
        ));
    } else {
        report.add_verdict(
            Verdict::new("increment_mean_zero", all_ok, worst, SIGMAS)
                .note(format!("{tested} r groups; observed = max |mean|/stderr")),
        );
    }

    if traces.iter().any(|t| !t.final_counts().absorbed()) {
        report.add_verdict(Verdict::vacuous(
            "absorption_probability",
            "some traces were not run to absorption",
        ));
    } else {
        let acc: MeanVar = traces
            .iter()
            .map(|t| f64::from(u8::from(t.final_counts().r == m)))
            .collect();
        let est = WeightedEstimate::from_acc(&acc, WeightKind::Plain);
        let target = 1.0 / m as f64;
        report.add_verdict(
            Verdict::new("absorption_probability", est.consistent_with(target), est.point, target)
                .about("p_red")
                .note("passes when |p_red - 1/m| <= 3 stderr"),
        );
        report.add_estimate("p_red", est);
    }
    Ok(report)
}
