//! Independent reference implementations shared by the integration and
//! acceptance tests. Nothing here calls into the code under test.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Sample correlation of `m` standard normal draws in `p` dimensions mixed by a
/// random loading matrix: a generic full-rank correlation matrix.
pub fn random_correlation(p: usize, m: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let load = DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { 0.4 * rng.sample::<f64, _>(StandardNormal) });
    let x = DMatrix::from_fn(m, p, |_, _| rng.sample::<f64, _>(StandardNormal)) * load;
    let mean = x.row_mean();
    let centered = DMatrix::from_fn(m, p, |i, j| x[(i, j)] - mean[j]);
    let cov = centered.transpose() * &centered;
    let d: Vec<f64> = (0..p).map(|i| cov[(i, i)].sqrt()).collect();
    let mut r = DMatrix::from_fn(p, p, |i, j| cov[(i, j)] / (d[i] * d[j]));
    for i in 0..p {
        r[(i, i)] = 1.0;
    }
    r
}

fn objective(theta: &DMatrix<f64>, s: &DMatrix<f64>, lambda: f64) -> Option<f64> {
    let chol = theta.clone().cholesky()?;
    let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let p = theta.nrows();
    let mut pen = 0.0;
    for i in 0..p {
        for j in 0..p {
            if i != j {
                pen += theta[(i, j)].abs();
            }
        }
    }
    Some(-log_det + (theta * s).trace() + lambda * pen)
}

fn prox(theta: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    DMatrix::from_fn(theta.nrows(), theta.ncols(), |i, j| {
        let x = theta[(i, j)];
        if i == j {
            x
        } else {
            x.signum() * (x.abs() - t).max(0.0)
        }
    })
}

/// Proximal gradient descent with backtracking on
/// `−log det Θ + Tr(SΘ) + λ Σ_{i≠j} |θ_ij|`.
pub fn prox_glasso(s: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    let p = s.nrows();
    let mut theta = DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 / s[(i, i)] } else { 0.0 });
    let mut f = objective(&theta, s, lambda).expect("diagonal start is PD");
    for _ in 0..200_000 {
        let inv = theta.clone().try_inverse().expect("iterate is PD");
        let grad = s - inv;
        let smooth = f - lambda * off_l1(&theta);
        let mut step = 1.0;
        let (next, f_next) = loop {
            let cand = prox(&(&theta - &grad * step), step * lambda);
            let cand = (&cand + cand.transpose()) * 0.5;
            if let Some(fc) = objective(&cand, s, lambda) {
                let diff = &cand - &theta;
                let smooth_c = fc - lambda * off_l1(&cand);
                let bound = smooth + grad.dot(&diff) + diff.norm_squared() / (2.0 * step);
                if smooth_c <= bound + 1e-15 {
                    break (cand, fc);
                }
            }
            step *= 0.5;
            assert!(step > 1e-20, "backtracking failed");
        };
        let change = (&next - &theta).amax();
        theta = next;
        f = f_next;
        if change < 1e-12 {
            break;
        }
    }
    theta
}

fn off_l1(theta: &DMatrix<f64>) -> f64 {
    let p = theta.nrows();
    let mut total = 0.0;
    for i in 0..p {
        for j in 0..p {
            if i != j {
                total += theta[(i, j)].abs();
            }
        }
    }
    total
}

pub fn phi_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn phi_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Gauss–Legendre nodes and weights on `[a, b]` from `panels` panels of 8 points.
pub fn composite_gauss_legendre(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    const X: [f64; 4] = [
        0.183_434_642_495_649_8,
        0.525_532_409_916_329,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_3,
    ];
    const W: [f64; 4] = [
        0.362_683_783_378_362,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ];
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * 8);
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * h;
        for (x, w) in X.iter().zip(W) {
            out.push((mid - 0.5 * h * x, 0.5 * h * w));
            out.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
    out
}

/// Bivariate normal CDF by Plackett's identity
/// `Φ₂(x, y; ρ) = Φ(x)Φ(y) + ∫₀^ρ φ₂(x, y; r) dr`.
pub fn bvn_cdf(x: f64, y: f64, rho: f64, nodes: &[(f64, f64)]) -> f64 {
    let mut integral = 0.0;
    for &(t, w) in nodes {
        let r = rho * t;
        let q = 1.0 - r * r;
        let dens = (-(x * x - 2.0 * r * x * y + y * y) / (2.0 * q)).exp() / (2.0 * std::f64::consts::PI * q.sqrt());
        integral += w * rho * dens;
    }
    phi_cdf(x) * phi_cdf(y) + integral
}

#[derive(Clone, Copy, Debug)]
pub enum OracleFamily {
    Gaussian,
    Clayton,
    Gumbel,
    Frank,
}

fn archimedean_cdf(family: OracleFamily, u: f64, v: f64, t: f64) -> f64 {
    match family {
        OracleFamily::Clayton => (u.powf(-t) + v.powf(-t) - 1.0).max(0.0).powf(-1.0 / t),
        OracleFamily::Gumbel => (-((-u.ln()).powf(t) + (-v.ln()).powf(t)).powf(1.0 / t)).exp(),
        OracleFamily::Frank => {
            let num = ((-t * u).exp_m1()) * ((-t * v).exp_m1());
            -(1.0 + num / (-t).exp_m1()).ln() / t
        }
        OracleFamily::Gaussian => unreachable!(),
    }
}

fn archimedean_density(family: OracleFamily, u: f64, v: f64, t: f64) -> f64 {
    match family {
        OracleFamily::Clayton => (1.0 + t) * (u * v).powf(-1.0 - t) * (u.powf(-t) + v.powf(-t) - 1.0).powf(-2.0 - 1.0 / t),
        OracleFamily::Gumbel => {
            let (a, b) = (-u.ln(), -v.ln());
            let s = a.powf(t) + b.powf(t);
            let w = s.powf(1.0 / t);
            (-w).exp() / (u * v) * (a * b).powf(t - 1.0) * s.powf(2.0 / t - 2.0) * (1.0 + (t - 1.0) / w)
        }
        OracleFamily::Frank => {
            let e = (-t).exp_m1();
            let num = -t * e * (-t * (u + v)).exp();
            let den = e + (-t * u).exp_m1() * (-t * v).exp_m1();
            num / (den * den)
        }
        OracleFamily::Gaussian => unreachable!(),
    }
}

/// `4 ∬ C dC − 1`, integrated on the normal-score scale `u = Φ(s)`, `v = Φ(t)`.
/// `rotated` uses the 90° rotation `C(u, v) = v − C₀(1 − u, v)`.
pub fn tau_double_integral(family: OracleFamily, param: f64, rotated: bool) -> f64 {
    let grid = composite_gauss_legendre(-8.5, 8.5, 120);
    let inner = composite_gauss_legendre(0.0, 1.0, 4);
    let mut total = 0.0;
    for &(s, ws) in &grid {
        for &(t, wt) in &grid {
            let w = ws * wt;
            let term = match family {
                OracleFamily::Gaussian => {
                    let q = 1.0 - param * param;
                    let dens = (-(s * s - 2.0 * param * s * t + t * t) / (2.0 * q)).exp() / (2.0 * std::f64::consts::PI * q.sqrt());
                    bvn_cdf(s, t, param, &inner) * dens
                }
                _ => {
                    let (u, v) = (phi_cdf(s), phi_cdf(t));
                    let u0 = if rotated { phi_cdf(-s) } else { u };
                    if !(u0 > 0.0 && u0 < 1.0 && v > 0.0 && v < 1.0) {
                        continue;
                    }
                    let c = archimedean_density(family, u0, v, param) * phi_pdf(s) * phi_pdf(t);
                    if !c.is_finite() {
                        continue;
                    }
                    let cdf = if rotated {
                        v - archimedean_cdf(family, u0, v, param)
                    } else {
                        archimedean_cdf(family, u, v, param)
                    };
                    cdf * c
                }
            };
            total += w * term;
        }
    }
    4.0 * total - 1.0
}
