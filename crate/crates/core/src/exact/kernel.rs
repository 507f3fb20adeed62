use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `p^t(0, ·)` for the walk on the cycle `C_L` that traverses each incident
/// edge at rate 2: `(1/L) Σ_j exp(-4(1 - cos(2πj/L)) t) cos(2πjy/L)`.
///
/// A single ball of the interchange or exclusion process moves across each
/// incident edge at rate 1, so its law at time `t` is this kernel at `t/2`.
pub fn heat_kernel_cycle(l: usize, t: f64) -> Result<Vec<f64>> {
    if l < 2 {
        return Err(Error::InvalidArgument(format!("cycle length {l} < 2")));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("negative time {t}")));
    }
    let lf = l as f64;
    let decay: Vec<f64> = (0..l)
        .map(|j| (-4.0 * (1.0 - (2.0 * PI * j as f64 / lf).cos()) * t).exp())
        .collect();
    Ok((0..l)
        .map(|y| {
            let s: f64 = decay
                .iter()
                .enumerate()
                .map(|(j, &e)| e * (2.0 * PI * ((j * y) % l) as f64 / lf).cos())
                .sum();
            (s / lf).max(0.0)
        })
        .collect())
}

/// Product of cycle kernels over the coordinates of `offset`.
pub fn heat_kernel_torus(l: usize, d: usize, t: f64, offset: &[usize]) -> Result<f64> {
    if d == 0 || offset.len() != d {
        return Err(Error::InvalidArgument(format!(
            "offset must have d = {d} >= 1 coordinates"
        )));
    }
    let row = heat_kernel_cycle(l, t)?;
    Ok(offset.iter().map(|&x| row[x % l]).product())
}

/// `τ(ε) = inf{t : p^t(x, y) <= (7/6) ε for all x, y}` on `Z^d / L Z^d`.
///
/// The maximum over `y` sits at the origin (each cycle factor is largest
/// there), so only `p^t(0, 0) = p_cycle^t(0, 0)^d` is bisected.
pub fn tau_eps(l: usize, d: usize, eps: f64) -> Result<f64> {
    let n = (l as f64).powi(d as i32);
    if !(eps * n >= 1.0 - 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "eps = {eps} is below 1/n = {}",
            1.0 / n
        )));
    }
    let target = 7.0 / 6.0 * eps;
    if target >= 1.0 {
        return Ok(0.0);
    }
    let origin = |t: f64| -> Result<f64> { Ok(heat_kernel_cycle(l, t)?[0].powi(d as i32)) };
    let (mut lo, mut hi) = (0.0, 1.0);
    while origin(hi)? > target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::InvalidArgument(format!(
                "p^t(0,0) never reaches (7/6) eps = {target}"
            )));
        }
    }
    while hi - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        if origin(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_kernel_examples() {
        let p = heat_kernel_cycle(4, 0.0).unwrap();
        for (y, &x) in p.iter().enumerate() {
            assert!((x - f64::from(y == 0)).abs() < 1e-15);
        }
        let p = heat_kernel_cycle(4, 1.0).unwrap();
        let p00 = (1.0 + 2.0 * (-4f64).exp() + (-8f64).exp()) / 4.0;
        assert!((p[0] - p00).abs() < 1e-15);
        let golden = [0.25924169, 0.24991613, 0.24092605, 0.24991613];
        for (a, b) in p.iter().zip(golden) {
            assert!((a - b).abs() < 1e-8);
        }
        for &x in &heat_kernel_cycle(7, 50.0).unwrap() {
            assert!((x - 1.0 / 7.0).abs() < 1e-12);
        }
        assert!(heat_kernel_cycle(1, 1.0).is_err());
    }

    #[test]
    fn cycle_kernel_properties() {
        for l in [2, 3, 5, 8, 11] {
            let mut prev_max = f64::INFINITY;
            for i in 0..40 {
                let t = 0.1 * i as f64;
                let p = heat_kernel_cycle(l, t).unwrap();
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
                for y in 1..l {
                    assert!((p[y] - p[l - y]).abs() < 1e-14);
                }
                let max = p.iter().copied().fold(0.0, f64::max);
                assert!(max <= prev_max + 1e-15);
                assert_eq!(max, p[0]);
                prev_max = max;
            }
        }
    }

    #[test]
    fn torus_kernel_examples() {
        assert_eq!(heat_kernel_torus(4, 2, 0.0, &[0, 0]).unwrap(), 1.0);
        let c = heat_kernel_cycle(4, 1.0).unwrap()[0];
        assert!((heat_kernel_torus(4, 2, 1.0, &[0, 0]).unwrap() - c * c).abs() < 1e-15);
        assert!((heat_kernel_torus(4, 3, 40.0, &[1, 2, 3]).unwrap() - 1.0 / 64.0).abs() < 1e-12);
        assert!(heat_kernel_torus(4, 2, 1.0, &[0]).is_err());
    }

    #[test]
    fn tau_eps_examples() {
        assert_eq!(tau_eps(8, 1, 6.0 / 7.0).unwrap(), 0.0);
        let t = tau_eps(8, 1, 0.125).unwrap();
        assert!((t - 2.123108373119421).abs() < 1e-8 * t, "{t}");
        let p = heat_kernel_cycle(8, t).unwrap()[0];
        assert!((p - 7.0 / 48.0).abs() < 1e-9);
        let mut prev = 0.0;
        for j in 2..=6 {
            let t = tau_eps(6, 2, 1.0 / (j * j) as f64).unwrap();
            assert!(t > prev);
            prev = t;
        }
        // increasing eps means earlier crossing
        assert!(tau_eps(6, 2, 0.25).unwrap() < tau_eps(6, 2, 1.0 / 9.0).unwrap());
        assert!(tau_eps(4, 2, 0.01).is_err());
    }
}
