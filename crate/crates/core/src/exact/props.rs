use super::{depink_hitting_chain, enumerate_exclusion, tau_eps, Caps, ChameleonKey, DistVector};
use crate::bounds::logd_plus;
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Exact mixing and relaxation times of exclusion on a torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingRow {
    pub l: usize,
    pub d: usize,
    pub k: usize,
    pub states: usize,
    pub tau_mix: f64,
    pub tau_relax: f64,
    /// `τ_mix / (L² max(ln k, 1))`.
    pub ratio: f64,
}

pub fn mixing_row(l: usize, d: usize, k: usize, caps: Caps) -> Result<MixingRow> {
    let g = Graph::torus(l, d)?;
    let chain = enumerate_exclusion(&g, k, caps)?;
    let tau_mix = chain.mixing_time_exact(0.25)?;
    let tau_relax = 1.0 / chain.spectral_gap(caps)?;
    let ratio = tau_mix / ((l * l) as f64 * (k as f64).ln().max(1.0));
    Ok(MixingRow {
        l,
        d,
        k,
        states: chain.len(),
        tau_mix,
        tau_relax,
        ratio,
    })
}

/// One `(L, d, ε)` point of the heat-kernel grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauEpsRow {
    pub l: usize,
    pub d: usize,
    pub eps: f64,
    pub tau: f64,
    /// `τ(ε) / (ε^{-2/d} logd⁺)`.
    pub ratio: f64,
}

/// `τ(ε)` at `ε = j^{-d}`, `j = 2..=L`, for every `(L, d)` pair.
pub fn tau_eps_grid(ls: &[usize], ds: &[usize]) -> Result<Vec<TauEpsRow>> {
    let mut rows = Vec::new();
    for &d in ds {
        for &l in ls {
            for j in 2..=l {
                let eps = (j as f64).powi(-(d as i32));
                let tau = tau_eps(l, d, eps)?;
                let ratio = tau / (eps.powf(-2.0 / d as f64) * logd_plus(d));
                rows.push(TauEpsRow { l, d, eps, tau, ratio });
            }
        }
    }
    Ok(rows)
}

/// The smallest `D` with `τ(ε) <= ε^{-2/d} D logd⁺` on every row.
pub fn fit_d(rows: &[TauEpsRow]) -> Result<f64> {
    rows.iter()
        .map(|r| r.ratio)
        .reduce(f64::max)
        .ok_or_else(|| Error::InvalidArgument("empty grid".into()))
}

/// Forward difference of `ε ↦ E_x 𝒲(X_ε)` at 0 for one step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeCheck {
    pub eps: f64,
    pub slope: f64,
    /// `|slope + 1|`.
    pub error: f64,
}

/// `(E_x 𝒲(X_ε) - 𝒲(x)) / ε` in the chain stopped at the next depinking,
/// started from `start`. Returns the slopes and the number of chain states
/// (the stopped state included).
pub fn wait_slopes(g: &Graph, start: &ChameleonKey, eps: &[f64], caps: Caps) -> Result<(Vec<SlopeCheck>, usize)> {
    if start.counts().depink_due() || start.counts().absorbed() {
        return Err(Error::InvalidConfig("start state must be between depinkings".into()));
    }
    let chain = depink_hitting_chain(g, vec![start.clone()], caps)?;
    let target: Vec<bool> = chain.states().iter().map(Option::is_none).collect();
    let w = chain.hitting_time_solve(&target, caps)?;
    let x = chain
        .index_of(&Some(start.clone()))
        .expect("start is explored first");
    let d0 = DistVector::point_mass(chain.len(), x);
    let checks = eps
        .iter()
        .map(|&e| {
            let p = chain.transient_distribution(&d0, e, 1e-14)?;
            let ew: f64 = p.as_slice().iter().zip(&w).map(|(p, w)| p * w).sum();
            let slope = (ew - w[x]) / e;
            Ok(SlopeCheck { eps: e, slope, error: (slope + 1.0).abs() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((checks, chain.len()))
}
