//! The constants, functionals and time integrals behind the upper bound.
//!
//! Every `log d` is taken as `logd⁺ = max(ln d, 1)`, so `d = 1` and `d = 2`
//! get the factor 1. The universal constants `c` and `C` are parameters
//! (default 1); only ratios and scalings are ever checked against them.

use serde::{Deserialize, Serialize};

use crate::analysis::weighted_chameleon_mean;
use crate::error::{Error, Result};
use crate::exact::{depink_wait_table, Caps, ChameleonKey};
use crate::graph::Graph;
use crate::processes::{ChameleonState, ColorCounts};
use crate::report::WeightedEstimate;
use crate::rng::RngSeed;

/// `γ = 2/(√(4/3) + √(2/3)) - 1`.
pub fn gamma_const() -> f64 {
    2.0 / ((4.0f64 / 3.0).sqrt() + (2.0f64 / 3.0).sqrt()) - 1.0
}

/// `max(ln d, 1)`.
pub fn logd_plus(d: usize) -> f64 {
    (d as f64).ln().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    /// Constant in `g(S) = c logd⁺ (S + b)^{2/d}`.
    pub c: f64,
    /// Constant of the mixing-time bound.
    pub big_c: f64,
    pub l: usize,
    pub d: usize,
    pub k: usize,
    pub b: usize,
}

impl BoundParams {
    /// Requires `c, C > 0`, `L >= 2`, `d >= 1`, `1 <= k <= n/2`, `b < k`.
    pub fn new(c: f64, big_c: f64, l: usize, d: usize, k: usize, b: usize) -> Result<Self> {
        if !(c > 0.0 && big_c > 0.0) {
            return Err(Error::InvalidArgument("constants c and C must be positive".into()));
        }
        if l < 2 || d == 0 || d > 32 {
            return Err(Error::InvalidArgument(format!("bad torus L = {l}, d = {d}")));
        }
        let n = (l as f64).powi(d as i32);
        if k == 0 || 2.0 * k as f64 > n {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= k <= n/2, got k = {k}, n = {n}"
            )));
        }
        if b >= k {
            return Err(Error::InvalidArgument(format!("need b <= k - 1, got b = {b}, k = {k}")));
        }
        Ok(BoundParams { c, big_c, l, d, k, b })
    }

    pub fn n(&self) -> f64 {
        (self.l as f64).powi(self.d as i32)
    }

    /// `m = n - b`.
    pub fn m(&self) -> f64 {
        self.n() - self.b as f64
    }

    pub fn logd_plus(&self) -> f64 {
        logd_plus(self.d)
    }
}

/// `g(S) = c logd⁺ (S + b)^{2/d}`.
pub fn g_func(s: f64, p: &BoundParams) -> f64 {
    p.c * p.logd_plus() * (s + p.b as f64).powf(2.0 / p.d as f64)
}

/// `f(z) = 1 / (4 g((1+γ)² m / z²))` for `z >= √2`, and
/// `1 / (4 c logd⁺ L²)` below.
pub fn f_func(z: f64, p: &BoundParams) -> f64 {
    if z >= std::f64::consts::SQRT_2 {
        let g1 = (1.0 + gamma_const()).powi(2);
        0.25 / g_func(g1 * p.m() / (z * z), p)
    } else {
        0.25 / (p.c * p.logd_plus() * (p.l as f64).powi(2))
    }
}

/// `1 / (γ f(e^u))`: the integrand after the change of variable `z = e^u`.
fn integrand(u: f64, p: &BoundParams) -> f64 {
    1.0 / (gamma_const() * f_func(u.exp(), p))
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `∫_a^b dz / (γ z f(z))`, oriented (negative when `b < a`). The range is
/// split at `√2`, where `f` changes branch.
fn time_integral(a: f64, b: f64, p: &BoundParams) -> f64 {
    if a > b {
        return -time_integral(b, a, p);
    }
    let cut = std::f64::consts::SQRT_2;
    if a < cut && cut < b {
        return time_integral(a, cut, p) + time_integral(cut, b, p);
    }
    let (ua, ub) = (a.ln(), b.ln());
    if ub <= ua {
        return 0.0;
    }
    let f = |u: f64| integrand(u, p);
    let (fa, fb, fm) = (f(ua), f(ub), f(0.5 * (ua + ub)));
    let whole = simpson(ua, ub, fa, fm, fb);
    let tol = 1e-13 * whole.abs().max(1e-300);
    adaptive(&f, ua, ub, fa, fm, fb, whole, tol, 40)
}

/// `∫_{δ/2}^{L₀/2} dz / (γ z f(z))`: the time after which `L_t <= δ`.
pub fn ode_time_bound(l0: f64, delta: f64, p: &BoundParams) -> Result<f64> {
    if !(delta > 0.0 && delta < l0 && l0.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < delta < L0, got delta = {delta}, L0 = {l0}"
        )));
    }
    Ok(time_integral(delta / 2.0, l0 / 2.0, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralDecomposition {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub total: f64,
}

/// The integral from `1/(8k)` to `√n` split at `√2` and `√(m/b)`. With
/// `b = 0` the second split is at `√n` and `I₃ = 0`. When `√(m/b) < √2`
/// the pieces are oriented integrals and still sum to the total.
pub fn integral_decomposition(p: &BoundParams) -> Result<IntegralDecomposition> {
    let lo = 1.0 / (8.0 * p.k as f64);
    let top = p.n().sqrt();
    let cut = std::f64::consts::SQRT_2;
    let split = if p.b == 0 { top } else { (p.m() / p.b as f64).sqrt() };
    let i1 = time_integral(lo, cut, p);
    let i2 = time_integral(cut, split, p);
    let i3 = time_integral(split, top, p);
    Ok(IntegralDecomposition {
        i1,
        i2,
        i3,
        total: i1 + i2 + i3,
    })
}

/// `I₁ = 4 c γ⁻¹ logd⁺ L² ln(8√2 k)`.
pub fn i1_closed_form(p: &BoundParams) -> f64 {
    4.0 * p.c / gamma_const()
        * p.logd_plus()
        * (p.l as f64).powi(2)
        * (8.0 * std::f64::consts::SQRT_2 * p.k as f64).ln()
}

/// `d logd⁺ L² + logd⁺ L² ln k`, the shape of the mixing bound.
pub fn theorem7_shape(p: &BoundParams) -> f64 {
    let l2 = (p.l as f64).powi(2);
    p.d as f64 * p.logd_plus() * l2 + p.logd_plus() * l2 * (p.k as f64).ln()
}

/// `C (d logd⁺ L² + logd⁺ L² ln k)`.
pub fn theorem7_bound(p: &BoundParams) -> f64 {
    p.big_c * theorem7_shape(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChameleonFunctionals {
    /// Red paint `S`.
    pub red_paint: f64,
    pub s: f64,
    pub s_sharp: f64,
    /// Expected time to the next depinking.
    pub w: f64,
    pub y: f64,
    pub z: f64,
}

impl ChameleonFunctionals {
    /// Whether `1 <= Y <= 1 + γ`, which holds whenever `𝒲 <= g(S)`.
    pub fn y_in_design_range(&self) -> bool {
        self.y >= 1.0 && self.y <= 1.0 + gamma_const() + 1e-15
    }
}

/// `Y = 1 + γ𝒲/g(S)` and `Z = (√(s♯)/s) Y`. When `s♯ = 0` the state is
/// absorbed (or all paint is red) and `Z = 0` whatever `𝒲` is.
pub fn z_functional(counts: ColorCounts, w: f64, p: &BoundParams) -> Result<ChameleonFunctionals> {
    let red_paint = counts.red_paint();
    let s = counts.s();
    if !(s > 0.0) {
        return Err(Error::InvalidArgument("Z is undefined at s = 0".into()));
    }
    if !(w >= 0.0) {
        return Err(Error::InvalidArgument(format!("negative waiting time {w}")));
    }
    let s_sharp = s.min(1.0 - s).max(0.0);
    if s_sharp == 0.0 {
        return Ok(ChameleonFunctionals {
            red_paint,
            s,
            s_sharp,
            w,
            y: 1.0,
            z: 0.0,
        });
    }
    let y = 1.0 + gamma_const() * w / g_func(red_paint, p);
    Ok(ChameleonFunctionals {
        red_paint,
        s,
        s_sharp,
        w,
        y,
        z: s_sharp.sqrt() / s * y,
    })
}

/// `L_t = Ê(Z_t)` by importance-weighted simulation from the standard
/// start, with `𝒲` looked up in a table solved on the enumerated
/// pinkening chain.
pub fn estimate_lt(
    g: &Graph,
    b: usize,
    t: f64,
    p: &BoundParams,
    trials: usize,
    seed: RngSeed,
    caps: Caps,
) -> Result<WeightedEstimate> {
    let st0 = ChameleonState::standard(g, b)?;
    if st0.m() as f64 != p.m() {
        return Err(Error::Mismatch(format!(
            "graph gives m = {}, parameters give m = {}",
            st0.m(),
            p.m()
        )));
    }
    let table = depink_wait_table(g, b, caps)?;
    let missing = std::sync::atomic::AtomicBool::new(false);
    let est = weighted_chameleon_mean(g, &st0, t, trials, seed, |st| {
        let c = st.counts();
        if c.s() == 0.0 {
            // weight zero
            return 0.0;
        }
        if c.absorbed() {
            return 0.0;
        }
        match table.get(&ChameleonKey::from_state(st)) {
            Some(&w) => z_functional(c, w, p).map_or(f64::NAN, |f| f.z),
            None => {
                missing.store(true, std::sync::atomic::Ordering::Relaxed);
                f64::NAN
            }
        }
    })?;
    if missing.into_inner() || est.point.is_nan() {
        return Err(Error::InvalidArgument(
            "a visited state has no waiting time in the enumerated table".into(),
        ));
    }
    Ok(est)
}

/// A finite nonnegative random variable (integer atoms with integer
/// weights) and a nonnegative nondecreasing step function given by
/// `(threshold, increment)` pairs: `f(x) = Σ_{threshold <= x} increment`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lemma4Instance {
    pub atoms: Vec<(u64, u64)>,
    pub steps: Vec<(u64, u64)>,
}

impl Lemma4Instance {
    /// Both sides of `E(Z f(2Z)) >= (EZ/2) f(EZ)` scaled by `2 W` (with `W`
    /// the total weight), in exact integer arithmetic.
    pub fn sides(&self) -> Result<(u128, u128)> {
        let total: u128 = self.atoms.iter().map(|&(_, w)| w as u128).sum();
        if total == 0 {
            return Err(Error::InvalidArgument("atoms carry no weight".into()));
        }
        // f(x / q) for x, q integers
        let f = |x: u128, q: u128| -> u128 {
            self.steps
                .iter()
                .filter(|&&(thr, _)| thr as u128 * q <= x)
                .map(|&(_, inc)| inc as u128)
                .sum()
        };
        let lhs: u128 = self
            .atoms
            .iter()
            .map(|&(z, w)| 2 * w as u128 * z as u128 * f(2 * z as u128, 1))
            .sum();
        let mean_num: u128 = self.atoms.iter().map(|&(z, w)| w as u128 * z as u128).sum();
        let rhs = mean_num * f(mean_num, total);
        Ok((lhs, rhs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(l: usize, d: usize, k: usize, b: usize) -> BoundParams {
        BoundParams::new(1.0, 1.0, l, d, k, b).unwrap()
    }

    #[test]
    fn gamma_value() {
        let g = gamma_const();
        assert!((g - 0.014_611_872_354_576_49).abs() < 1e-15);
        assert!(g > 0.0 && g < 2f64.sqrt() - 1.0);
        assert!((1.0 + g).powi(2) <= 2.0);
        assert!(((1.0 + g).powi(2) - 1.0294372515228594).abs() < 1e-15);
    }

    #[test]
    fn g_examples() {
        let p = params(4, 2, 4, 0);
        assert_eq!(g_func(4.0, &p), 4.0);
        // b = k - 1 and m + b = n: g(m) = c logd⁺ L²
        let p = params(6, 3, 20, 19);
        assert!((g_func(p.m(), &p) - logd_plus(3) * 36.0).abs() < 1e-9);
        let mut prev = 0.0;
        for i in 1..100 {
            let v = g_func(i as f64 * 0.5, &p);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn f_monotone_and_branches() {
        for p in [params(8, 2, 4, 3), params(10, 1, 5, 0), params(4, 3, 8, 7)] {
            let mut prev = 0.0;
            for i in 1..4000 {
                let z = i as f64 * 0.005;
                let v = f_func(z, &p);
                assert!(v >= prev, "{p:?} z={z}");
                prev = v;
            }
            let flat = 0.25 / (p.logd_plus() * (p.l as f64).powi(2));
            assert_eq!(f_func(2f64.sqrt() - 1e-12, &p), flat);
        }
        let p = params(8, 2, 4, 3);
        let limit = 0.25 / (p.logd_plus() * 3.0);
        assert!((f_func(1e9, &p) - limit).abs() < 1e-9);
    }

    #[test]
    fn ode_integral_constant_branch_is_a_log() {
        // entirely below √2, f is the constant κ
        let p = params(8, 2, 4, 3);
        let kappa = f_func(0.5, &p);
        let v = ode_time_bound(2.0, 0.1, &p).unwrap();
        let exact = (2.0f64 / 0.1).ln() / (gamma_const() * kappa);
        assert!((v - exact).abs() <= 1e-10 * exact);
        assert!(ode_time_bound(1.0, 1.0 - 1e-9, &p).unwrap() < 1e-3);
        assert!(ode_time_bound(1.0, 2.0, &p).is_err());
        assert!(ode_time_bound(1.0, 0.0, &p).is_err());
    }

    #[test]
    fn decomposition_matches_ode_bound_and_closed_form() {
        let p = params(8, 2, 4, 3);
        let dec = integral_decomposition(&p).unwrap();
        assert!((dec.i1 - 66791.66136588455).abs() <= 1e-6 * dec.i1);
        assert!((dec.i1 - i1_closed_form(&p)).abs() <= 1e-6 * dec.i1);
        let ode = ode_time_bound(2.0 * p.n().sqrt(), 1.0 / (4.0 * p.k as f64), &p).unwrap();
        assert!((ode - dec.total).abs() <= 1e-6 * ode);
        assert!(dec.i2 > 0.0 && dec.i3 > 0.0);

        let p0 = params(8, 2, 4, 0);
        let dec = integral_decomposition(&p0).unwrap();
        assert_eq!(dec.i3, 0.0);
        let p1 = params(8, 2, 1, 0);
        let want = 4.0 / gamma_const() * 64.0 * (8.0 * 2f64.sqrt()).ln();
        assert!((integral_decomposition(&p1).unwrap().i1 - want).abs() <= 1e-6 * want);

        // √(m/b) < √2: oriented pieces still add up
        let p = params(16, 1, 8, 7);
        assert!((p.m() / p.b as f64).sqrt() < 2f64.sqrt());
        let dec = integral_decomposition(&p).unwrap();
        let ode = ode_time_bound(2.0 * p.n().sqrt(), 1.0 / (4.0 * p.k as f64), &p).unwrap();
        assert!((ode - dec.total).abs() <= 1e-6 * ode);
    }

    #[test]
    fn theorem7_examples() {
        let p = BoundParams::new(1.0, 1.0, 10, 1, 5, 0).unwrap();
        assert!((theorem7_bound(&p) - (100.0 + 100.0 * 5f64.ln())).abs() < 1e-9);
        let p1 = BoundParams::new(1.0, 2.0, 6, 3, 1, 0).unwrap();
        assert!((theorem7_bound(&p1) - 2.0 * 3.0 * 3f64.ln() * 36.0).abs() < 1e-9);
        let mut prev = 0.0;
        for k in 1..=8 {
            let v = theorem7_bound(&params(4, 2, k, 0));
            assert!(v >= prev);
            prev = v;
        }
        assert!(theorem7_bound(&params(6, 2, 4, 0)) > theorem7_bound(&params(4, 2, 4, 0)));
    }

    #[test]
    fn params_validation() {
        assert!(BoundParams::new(0.0, 1.0, 4, 1, 1, 0).is_err());
        assert!(BoundParams::new(1.0, 1.0, 4, 1, 3, 0).is_err());
        assert!(BoundParams::new(1.0, 1.0, 4, 1, 2, 2).is_err());
        assert!(BoundParams::new(1.0, 1.0, 4, 0, 1, 0).is_err());
    }

    #[test]
    fn z_examples() {
        let p = params(4, 1, 2, 0);
        let all_red = ColorCounts { r: 4, w: 0, p: 0, b: 0 };
        let f = z_functional(all_red, 0.0, &p).unwrap();
        assert_eq!((f.s_sharp, f.z), (0.0, 0.0));
        let half = ColorCounts { r: 2, w: 2, p: 0, b: 0 };
        let f = z_functional(half, 0.0, &p).unwrap();
        assert!((f.z - 2f64.sqrt()).abs() < 1e-15);
        assert!(f.y_in_design_range());
        let none = ColorCounts { r: 0, w: 4, p: 0, b: 0 };
        assert!(z_functional(none, 0.0, &p).is_err());
        let f = z_functional(half, g_func(2.0, &p), &p).unwrap();
        assert!((f.y - (1.0 + gamma_const())).abs() < 1e-15);
    }

    #[test]
    fn lemma4_small_cases() {
        // Z uniform on {0, 2}, f = 1[x >= 2]: E Z f(2Z) = 1, (EZ/2) f(1) = 0
        let inst = Lemma4Instance {
            atoms: vec![(0, 1), (2, 1)],
            steps: vec![(2, 1)],
        };
        let (l, r) = inst.sides().unwrap();
        assert_eq!((l, r), (4, 0));
        // constant Z = 3, f = 1[x >= 3]: 3 >= 3/2
        let inst = Lemma4Instance {
            atoms: vec![(3, 5)],
            steps: vec![(3, 1)],
        };
        let (l, r) = inst.sides().unwrap();
        assert!(l >= r && r > 0);
    }
}
