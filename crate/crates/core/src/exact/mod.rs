//! Exact transient analysis of small instances.
//!
//! A chain is explored breadth-first from its start states into a sparse
//! generator `Q`. Distributions at time `t` come from uniformization,
//! `exp(tQ) = Σ_k Pois(Λt; k) P^k` with `P = I + Q/Λ`, truncated with a
//! certified bound on the discarded Poisson tail.

mod enumerate;
mod kernel;
mod lemmas;
mod props;
mod wait;

pub use enumerate::{enumerate_chameleon, enumerate_chameleon_from, enumerate_exclusion, ChameleonKey, Recolor};
pub use kernel::{heat_kernel_cycle, heat_kernel_torus, tau_eps};
pub use lemmas::{
    exact_weighted_mean, lemma12_gap, lemma2_lhs_exact, verify_lemma1, verify_lemma1_with,
    Lemma1Check, TupleDist,
};
pub use props::{fit_d, mixing_row, tau_eps_grid, wait_slopes, MixingRow, SlopeCheck, TauEpsRow};
pub use wait::{depink_hitting_chain, depink_wait_table};

use std::collections::{HashMap, VecDeque};
use std::fmt::Debug;
use std::hash::Hash;
use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Size limits for exact computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    /// Maximum number of enumerated states.
    pub states: usize,
    /// Maximum dimension for dense eigen and linear solves.
    pub dense: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            states: 200_000,
            dense: 5_000,
        }
    }
}

/// Probability vector over the states of an [`ExactChain`].
#[derive(Debug, Clone, PartialEq)]
pub struct DistVector(Vec<f64>);

impl DistVector {
    /// Entries must be nonnegative and sum to 1 within `1e-10`.
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::InvalidArgument("negative or NaN probability".into()));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(DistVector(p))
    }

    pub fn point_mass(len: usize, at: usize) -> Self {
        let mut p = vec![0.0; len];
        p[at] = 1.0;
        DistVector(p)
    }

    pub fn uniform(len: usize) -> Self {
        DistVector(vec![1.0 / len as f64; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for DistVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Enumerated continuous-time chain with a sparse generator in CSR form
/// (off-diagonal rates only; the diagonal is minus the exit rate).
#[derive(Debug, Clone)]
pub struct ExactChain<S> {
    states: Vec<S>,
    index: HashMap<S, usize>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    rates: Vec<f64>,
    exit: Vec<f64>,
    uniformization_rate: f64,
    start_representatives: Option<Vec<usize>>,
}

impl<S: Clone + Eq + Hash + Sync> ExactChain<S> {
    /// Breadth-first exploration from `starts`. `transitions(s, out)` pushes
    /// `(target, rate)` pairs; self-loops are dropped and parallel
    /// transitions merged.
    pub fn explore<F>(starts: impl IntoIterator<Item = S>, cap: usize, mut transitions: F) -> Result<Self>
    where
        F: FnMut(&S, &mut Vec<(S, f64)>),
    {
        let mut states = Vec::new();
        let mut index = HashMap::new();
        let mut queue = VecDeque::new();
        for s in starts {
            if !index.contains_key(&s) {
                index.insert(s.clone(), states.len());
                queue.push_back(states.len());
                states.push(s);
            }
        }
        let mut raw: Vec<Vec<(usize, f64)>> = vec![Vec::new(); states.len()];
        let mut buf = Vec::new();
        while let Some(i) = queue.pop_front() {
            buf.clear();
            transitions(&states[i], &mut buf);
            let mut row = Vec::with_capacity(buf.len());
            for (target, rate) in buf.drain(..) {
                let j = match index.get(&target) {
                    Some(&j) => j,
                    None => {
                        let j = states.len();
                        if j >= cap {
                            return Err(Error::CapExceeded { cap });
                        }
                        index.insert(target.clone(), j);
                        states.push(target);
                        raw.push(Vec::new());
                        queue.push_back(j);
                        j
                    }
                };
                if j != i && rate > 0.0 {
                    row.push((j, rate));
                }
            }
            row.sort_by_key(|&(j, _)| j);
            row.dedup_by(|next, prev| {
                if next.0 == prev.0 {
                    prev.1 += next.1;
                    true
                } else {
                    false
                }
            });
            raw[i] = row;
        }
        Ok(Self::from_rows(states, index, raw))
    }

    fn from_rows(states: Vec<S>, index: HashMap<S, usize>, raw: Vec<Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(raw.len() + 1);
        let mut cols = Vec::new();
        let mut rates = Vec::new();
        let mut exit = Vec::with_capacity(raw.len());
        row_ptr.push(0);
        for row in &raw {
            let mut total = 0.0;
            for &(j, q) in row {
                cols.push(j as u32);
                rates.push(q);
                total += q;
            }
            exit.push(total);
            row_ptr.push(cols.len());
        }
        let uniformization_rate = exit.iter().copied().fold(0.0, f64::max);
        ExactChain {
            states,
            index,
            row_ptr,
            cols,
            rates,
            exit,
            uniformization_rate,
            start_representatives: None,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &S {
        &self.states[i]
    }

    pub fn index_of(&self, s: &S) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn uniformization_rate(&self) -> f64 {
        self.uniformization_rate
    }

    pub fn exit_rate(&self, i: usize) -> f64 {
        self.exit[i]
    }

    /// Off-diagonal transitions out of state `i`.
    pub fn transitions(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .zip(&self.rates[range])
            .map(|(&j, &q)| (j as usize, q))
    }

    /// Generator entry `Q[i][j]`.
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return -self.exit[i];
        }
        self.transitions(i).find(|&(c, _)| c == j).map_or(0.0, |(_, q)| q)
    }

    pub(crate) fn set_start_representatives(&mut self, reps: Vec<usize>) {
        self.start_representatives = Some(reps);
    }

    /// Start states that suffice for worst-case questions (one per symmetry
    /// orbit), when a symmetry reduction is known.
    pub fn start_representatives(&self) -> Option<&[usize]> {
        self.start_representatives.as_deref()
    }

    /// `out = v P` with `P = I + Q/Λ`.
    fn apply_uniformized(&self, v: &[f64], out: &mut [f64]) {
        let lambda = self.uniformization_rate;
        for (i, (&vi, o)) in v.iter().zip(out.iter_mut()).enumerate() {
            *o = vi * (1.0 - self.exit[i] / lambda);
        }
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            let scaled = vi / lambda;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out[self.cols[k] as usize] += scaled * self.rates[k];
            }
        }
    }

    /// `d0 exp(tQ)` with total (L1) truncation error at most `tol`.
    pub fn transient_distribution(&self, d0: &DistVector, t: f64, tol: f64) -> Result<DistVector> {
        if d0.len() != self.len() {
            return Err(Error::InvalidArgument(format!(
                "distribution has {} entries, chain has {} states",
                d0.len(),
                self.len()
            )));
        }
        if !(tol > 0.0 && tol <= 1e-6) {
            return Err(Error::InvalidArgument(format!("tol {tol} outside (0, 1e-6]")));
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad time {t}")));
        }
        Ok(DistVector(self.evolve(d0.as_slice(), t, tol)))
    }

    /// Uniformization core without input validation. Long horizons are split
    /// into steps of `Λh <= 32` so the Poisson weights never underflow.
    pub(crate) fn evolve(&self, d0: &[f64], t: f64, tol: f64) -> Vec<f64> {
        let lambda_t = self.uniformization_rate * t;
        if lambda_t == 0.0 {
            return d0.to_vec();
        }
        let steps = (lambda_t / 32.0).ceil().max(1.0);
        let step_tol = (tol / steps).max(1e-16);
        let mu = lambda_t / steps;
        let mut d = d0.to_vec();
        let mut term = vec![0.0; d.len()];
        let mut next = vec![0.0; d.len()];
        let mut acc = vec![0.0; d.len()];
        for _ in 0..steps as u64 {
            let mut weight = (-mu).exp();
            term.copy_from_slice(&d);
            for (a, &x) in acc.iter_mut().zip(&term) {
                *a = weight * x;
            }
            let mut k = 0u64;
            loop {
                k += 1;
                // tail beyond k-1 is bounded by a geometric series once k > mu
                let ratio = mu / k as f64;
                if ratio < 1.0 && weight * ratio / (1.0 - ratio) <= step_tol {
                    break;
                }
                self.apply_uniformized(&term, &mut next);
                std::mem::swap(&mut term, &mut next);
                weight *= ratio;
                for (a, &x) in acc.iter_mut().zip(&term) {
                    *a += weight * x;
                }
            }
            std::mem::swap(&mut d, &mut acc);
        }
        d
    }

    fn reachable(&self, from: &[usize], forward: bool) -> Vec<bool> {
        let n = self.len();
        let mut reverse: Vec<Vec<usize>> = Vec::new();
        if !forward {
            reverse = vec![Vec::new(); n];
            for i in 0..n {
                for (j, _) in self.transitions(i) {
                    reverse[j].push(i);
                }
            }
        }
        let mut seen = vec![false; n];
        let mut queue: VecDeque<usize> = from.iter().copied().collect();
        for &i in from {
            seen[i] = true;
        }
        while let Some(i) = queue.pop_front() {
            let next: Vec<usize> = if forward {
                self.transitions(i).map(|(j, _)| j).collect()
            } else {
                reverse[i].clone()
            };
            for j in next {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen
    }

    pub fn is_irreducible(&self) -> bool {
        !self.is_empty()
            && self.reachable(&[0], true).iter().all(|&x| x)
            && self.reachable(&[0], false).iter().all(|&x| x)
    }

    /// Whether every column of `Q` sums to zero, i.e. the uniform law is
    /// stationary.
    pub fn is_doubly_stochastic(&self) -> bool {
        let mut col = vec![0.0; self.len()];
        for i in 0..self.len() {
            col[i] -= self.exit[i];
            for (j, q) in self.transitions(i) {
                col[j] += q;
            }
        }
        col.iter().all(|c| c.abs() <= 1e-12)
    }

    /// Largest row-sum violation of the generator (always ~0 by
    /// construction; exposed for tests).
    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.len())
            .map(|i| (self.transitions(i).map(|(_, q)| q).sum::<f64>() - self.exit[i]).abs())
            .fold(0.0, f64::max)
    }

    fn dense_generator(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut q = DMatrix::zeros(n, n);
        for i in 0..n {
            q[(i, i)] = -self.exit[i];
            for (j, r) in self.transitions(i) {
                q[(i, j)] += r;
            }
        }
        q
    }

    /// Smallest nonzero eigenvalue of `-Q` for a chain reversible with
    /// respect to the uniform law (symmetric `Q`), via a dense eigensolve.
    pub fn spectral_gap(&self, caps: Caps) -> Result<f64> {
        let n = self.len();
        if n > caps.dense {
            return Err(Error::CapExceeded { cap: caps.dense });
        }
        if n < 2 {
            return Err(Error::InvalidArgument("spectral gap needs >= 2 states".into()));
        }
        let q = self.dense_generator();
        if (0..n).any(|i| (0..i).any(|j| (q[(i, j)] - q[(j, i)]).abs() > 1e-12)) {
            return Err(Error::InvalidArgument(
                "generator is not symmetric (not reversible w.r.t. uniform)".into(),
            ));
        }
        let eig = SymmetricEigen::new(-q);
        let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        values.sort_by(f64::total_cmp);
        let scale = values.last().copied().unwrap_or(1.0).abs().max(1.0);
        values
            .into_iter()
            .find(|&v| v > 1e-9 * scale)
            .ok_or(Error::Reducible)
    }

    /// Expected hitting times of `target`: zero on the target set and the
    /// solution of `-Q W = 1` elsewhere.
    pub fn hitting_time_solve(&self, target: &[bool], caps: Caps) -> Result<Vec<f64>> {
        let n = self.len();
        if target.len() != n {
            return Err(Error::InvalidArgument("target mask length mismatch".into()));
        }
        let hits: Vec<usize> = (0..n).filter(|&i| target[i]).collect();
        if hits.is_empty() {
            return Err(Error::InvalidArgument("target set is empty".into()));
        }
        let can_reach = self.reachable(&hits, false);
        if let Some(bad) = (0..n).find(|&i| !can_reach[i]) {
            return Err(Error::Unreachable(bad));
        }
        let free: Vec<usize> = (0..n).filter(|&i| !target[i]).collect();
        let mut w = vec![0.0; n];
        if free.is_empty() {
            return Ok(w);
        }
        if free.len() > caps.dense {
            return Err(Error::CapExceeded { cap: caps.dense });
        }
        let mut pos = vec![usize::MAX; n];
        for (a, &i) in free.iter().enumerate() {
            pos[i] = a;
        }
        let f = free.len();
        let mut a = DMatrix::zeros(f, f);
        for (row, &i) in free.iter().enumerate() {
            a[(row, row)] = self.exit[i];
            for (j, q) in self.transitions(i) {
                if pos[j] != usize::MAX {
                    a[(row, pos[j])] -= q;
                }
            }
        }
        let ones = DVector::from_element(f, 1.0);
        let lu = a.clone().lu();
        let mut x = lu.solve(&ones).ok_or(Error::Reducible)?;
        // two rounds of iterative refinement
        for _ in 0..2 {
            let resid = &ones - &a * &x;
            if let Some(dx) = lu.solve(&resid) {
                x += dx;
            }
        }
        let resid = (&ones - &a * &x).amax();
        let scale = 1.0 + x.amax();
        if resid > 1e-10 * scale {
            return Err(Error::InvalidArgument(format!(
                "hitting-time solve residual {resid:e} too large"
            )));
        }
        for (row, &i) in free.iter().enumerate() {
            w[i] = x[row];
        }
        Ok(w)
    }

    /// Worst-start total variation to the uniform law at each time in
    /// `times` (which must be nondecreasing).
    pub fn tv_curve(&self, times: &[f64], tol: f64) -> Result<Vec<(f64, f64)>> {
        self.check_mixing_preconditions()?;
        if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|&t| !(t >= 0.0)) {
            return Err(Error::InvalidArgument("times must be nondecreasing and >= 0".into()));
        }
        let starts = self.mixing_starts();
        let uniform = 1.0 / self.len() as f64;
        let per_start: Vec<Vec<f64>> = starts
            .par_iter()
            .map(|&x| {
                let mut d = DistVector::point_mass(self.len(), x).into_inner();
                let mut now = 0.0;
                times
                    .iter()
                    .map(|&t| {
                        d = self.evolve(&d, t - now, tol);
                        now = t;
                        tv_to_constant(&d, uniform)
                    })
                    .collect()
            })
            .collect();
        Ok(times
            .iter()
            .enumerate()
            .map(|(k, &t)| (t, per_start.iter().map(|c| c[k]).fold(0.0, f64::max)))
            .collect())
    }

    fn check_mixing_preconditions(&self) -> Result<()> {
        if !self.is_irreducible() {
            return Err(Error::Reducible);
        }
        if !self.is_doubly_stochastic() {
            return Err(Error::InvalidArgument(
                "stationary law is not uniform; mixing routines assume it is".into(),
            ));
        }
        Ok(())
    }

    fn mixing_starts(&self) -> Vec<usize> {
        self.start_representatives
            .clone()
            .unwrap_or_else(|| (0..self.len()).collect())
    }

    /// `inf { t : max_x ||δ_x exp(tQ) - U|| <= threshold }`.
    ///
    /// Total variation from a fixed start is nonincreasing in `t`, so the
    /// worst case is the maximum of per-start crossing times, each located by
    /// doubling then bisection to relative precision `1e-8`.
    pub fn mixing_time_exact(&self, threshold: f64) -> Result<f64> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "threshold {threshold} outside (0, 1)"
            )));
        }
        self.check_mixing_preconditions()?;
        let starts = self.mixing_starts();
        let times: Vec<f64> = starts
            .par_iter()
            .map(|&x| self.crossing_time(x, threshold))
            .collect();
        Ok(times.into_iter().fold(0.0, f64::max))
    }

    fn crossing_time(&self, start: usize, threshold: f64) -> f64 {
        const TOL: f64 = 1e-13;
        let uniform = 1.0 / self.len() as f64;
        let mut d_lo = DistVector::point_mass(self.len(), start).into_inner();
        if tv_to_constant(&d_lo, uniform) <= threshold {
            return 0.0;
        }
        let mut lo = 0.0;
        let mut step = 1.0 / self.uniformization_rate;
        let mut hi;
        loop {
            let d = self.evolve(&d_lo, step, TOL);
            if tv_to_constant(&d, uniform) <= threshold {
                hi = lo + step;
                break;
            }
            lo += step;
            d_lo = d;
            step *= 2.0;
        }
        while hi - lo > 1e-8 * hi {
            let half = 0.5 * (hi - lo);
            let d = self.evolve(&d_lo, half, TOL);
            if tv_to_constant(&d, uniform) <= threshold {
                hi = lo + half;
            } else {
                lo += half;
                d_lo = d;
            }
        }
        hi
    }
}

impl<S: Clone + Eq + Hash + Sync + Debug> ExactChain<S> {
    /// Writes one state per line (`index<TAB>state`).
    pub fn write_states<W: Write>(&self, mut w: W) -> Result<()> {
        for (i, s) in self.states.iter().enumerate() {
            writeln!(w, "{i}\t{s:?}")?;
        }
        Ok(())
    }

    /// Writes the generator in triplet form, `row col rate`, diagonal
    /// included.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> Result<()> {
        for i in 0..self.len() {
            writeln!(w, "{i} {i} {:e}", -self.exit[i])?;
            for (j, q) in self.transitions(i) {
                writeln!(w, "{i} {j} {q:e}")?;
            }
        }
        Ok(())
    }
}

fn tv_to_constant(p: &[f64], c: f64) -> f64 {
    0.5 * p.iter().map(|&x| (x - c).abs()).sum::<f64>()
}

/// `max_Q p(Q) - q(Q) = (1/2) Σ |p_i - q_i|`.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Mismatch(format!(
            "distributions of length {} and {}",
            p.len(),
            q.len()
        )));
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}
