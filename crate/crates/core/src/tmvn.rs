//! Truncated multivariate normal machinery for the E-step.
//!
//! A row's latent vector `Z_i ~ N(0, Θ⁻¹)` restricted to the rectangle
//! `D(Y_i)` is sampled by coordinate-wise Gibbs sweeps. Conditionals come
//! straight from the precision matrix: `Z_j | Z_{-j}` has variance `1/θ_jj`
//! and mean `−Σ_{k≠j} θ_jk z_k / θ_jj`.
//!
//! Each row draws from its own ChaCha stream keyed on `(seed, pass, row)`, and
//! row contributions are reduced in row order, so results do not depend on the
//! number of worker threads.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::IntervalBounds;
use crate::error::{Error, Result};
use crate::glasso::{CorrelationMatrix, MatrixRole, PrecisionEstimate};
use crate::linalg;
use crate::normal;

/// Rows per reduction block. Fixed so that summation order never depends on scheduling.
const ROW_BLOCK: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct McSettings {
    pub n_samples: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for McSettings {
    fn default() -> Self {
        McSettings {
            n_samples: 100,
            burn_in: 20,
            seed: 0,
        }
    }
}

impl McSettings {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::Sampler("n_samples must be at least 1".into()));
        }
        Ok(())
    }
}

/// SplitMix64 finalizer; decorrelates nearby integer keys.
pub fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03))
        .wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn row_rng(seed: u64, pass: u64, row: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, pass, row))
}

/// Mean and variance of `N(mu, sigma²)` truncated to `(a, b]`.
pub fn trunc_norm_moments_1d(mu: f64, sigma: f64, a: f64, b: f64) -> Result<(f64, f64)> {
    if !(a < b) {
        return Err(Error::Sampler(format!("empty truncation interval ({a}, {b}]")));
    }
    if !(sigma > 0.0) {
        return Err(Error::Sampler(format!("sigma must be positive, got {sigma}")));
    }
    let (alpha, beta) = ((a - mu) / sigma, (b - mu) / sigma);
    // work in whichever tail keeps the normalizer accurate
    let (flip, lo, hi) = if alpha > 0.0 { (true, -beta, -alpha) } else { (false, alpha, beta) };
    let mass = normal::cdf(hi) - normal::cdf(lo);
    let (m, v) = if mass > 0.0 {
        let (plo, phi) = (normal::pdf(lo), normal::pdf(hi));
        let m = (plo - phi) / mass;
        let tlo = if lo.is_finite() { lo * plo } else { 0.0 };
        let thi = if hi.is_finite() { hi * phi } else { 0.0 };
        let v = 1.0 + (tlo - thi) / mass - m * m;
        (m, v.max(0.0))
    } else {
        // far tail: all mass piles up at the boundary nearest the mode
        (hi, 0.0)
    };
    let m = if flip { -m } else { m };
    Ok((mu + sigma * m, sigma * sigma * v))
}

/// Draw from `N(mu, sigma²)` truncated to `(a, b]`.
pub fn sample_truncated_normal<R: Rng + ?Sized>(mu: f64, sigma: f64, a: f64, b: f64, rng: &mut R) -> f64 {
    if a == b {
        return a;
    }
    let x = mu + sigma * sample_truncated_standard((a - mu) / sigma, (b - mu) / sigma, rng);
    // guard the open lower end against rounding in the affine map
    if x <= a {
        a + (b - a) * 1e-12
    } else if x > b {
        b
    } else {
        x
    }
}

/// Standard normal truncated to `(a, b)`.
pub fn sample_truncated_standard<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if a > 0.0 {
        return -sample_truncated_standard(-b, -a, rng);
    }
    // now a <= 0: either the interval straddles zero or lies in the lower tail
    if b > -30.0 {
        let (pa, pb) = (normal::cdf(a), normal::cdf(b));
        let mass = pb - pa;
        if mass > 1e-12 * pb {
            let u = pa + rng.random::<f64>() * mass;
            let x = normal::quantile(u);
            if x >= a && x <= b {
                return x;
            }
        }
    }
    if b > 0.0 {
        // tiny window around zero; the density is nearly flat there
        loop {
            let x = a + (b - a) * rng.random::<f64>();
            if rng.random::<f64>() <= (-0.5 * x * x).exp() {
                return x;
            }
        }
    }
    -sample_upper_tail(-b, -a, rng)
}

/// Standard normal truncated to `(l, u)` with `l >= 0`, by rejection.
fn sample_upper_tail<R: Rng + ?Sized>(l: f64, u: f64, rng: &mut R) -> f64 {
    let width = u - l;
    if width * l.max(1.0) < 1.0 {
        // narrow window: uniform proposal, density ratio against the left edge
        loop {
            let x = l + width * rng.random::<f64>();
            if rng.random::<f64>() <= (0.5 * (l * l - x * x)).exp() {
                return x;
            }
        }
    }
    // translated exponential proposal (Robert, 1995)
    let rate = 0.5 * (l + (l * l + 4.0).sqrt());
    loop {
        let e: f64 = -(1.0 - rng.random::<f64>()).ln() / rate;
        let x = l + e;
        if x > u {
            continue;
        }
        if rng.random::<f64>() <= (-0.5 * (x - rate) * (x - rate)).exp() {
            return x;
        }
    }
}

/// Latent starting point inside `(a, b]`: the marginal standard-normal median of the interval.
pub fn interval_midpoint(a: f64, b: f64) -> f64 {
    if a == b {
        return a;
    }
    let z = if a >= 0.0 {
        -normal::quantile(0.5 * (normal::cdf(-a) + normal::cdf(-b)))
    } else {
        normal::quantile(0.5 * (normal::cdf(a) + normal::cdf(b)))
    };
    if z > a && z <= b && z.is_finite() {
        z
    } else if a.is_finite() && b.is_finite() {
        0.5 * (a + b)
    } else if a.is_finite() {
        a + 1.0 / a.abs().max(1.0)
    } else {
        b - 1.0 / b.abs().max(1.0)
    }
}

/// Precomputed full conditionals of `N(0, Θ⁻¹)`.
#[derive(Clone, Debug)]
pub struct GibbsKernel {
    cond_sd: Vec<f64>,
    /// Column `j` holds `−θ_kj / θ_jj` (zero at `k = j`).
    coef: DMatrix<f64>,
}

impl GibbsKernel {
    pub fn from_precision(theta: &DMatrix<f64>) -> Result<Self> {
        if theta.clone().cholesky().is_none() {
            return Err(Error::Sampler("precision matrix is not positive definite".into()));
        }
        let p = theta.nrows();
        let mut coef = DMatrix::zeros(p, p);
        let mut cond_sd = Vec::with_capacity(p);
        for j in 0..p {
            let tjj = theta[(j, j)];
            cond_sd.push((1.0 / tjj).sqrt());
            for k in 0..p {
                if k != j {
                    coef[(k, j)] = -theta[(k, j)] / tjj;
                }
            }
        }
        Ok(GibbsKernel { cond_sd, coef })
    }

    pub fn from_covariance(sigma: &DMatrix<f64>) -> Result<Self> {
        let theta = linalg::inverse_spd(sigma).ok_or_else(|| Error::Sampler("covariance is not positive definite".into()))?;
        Self::from_precision(&theta)
    }

    pub fn dim(&self) -> usize {
        self.cond_sd.len()
    }

    fn conditional_mean(&self, j: usize, state: &[f64]) -> f64 {
        self.coef.column(j).iter().zip(state).map(|(c, z)| c * z).sum()
    }
}

/// One row's Gibbs chain over its latent rectangle.
pub struct GibbsChain<'k> {
    kernel: &'k GibbsKernel,
    lower: Vec<f64>,
    upper: Vec<f64>,
    fixed: Vec<bool>,
    state: Vec<f64>,
    rng: ChaCha8Rng,
}

impl<'k> GibbsChain<'k> {
    /// `row` lists `(lower, upper, fixed)` per coordinate. A warm `init` is used
    /// where it lies inside the row's intervals.
    pub fn new(kernel: &'k GibbsKernel, row: &[(f64, f64, bool)], init: Option<&[f64]>, rng: ChaCha8Rng) -> Self {
        let lower: Vec<f64> = row.iter().map(|r| r.0).collect();
        let upper: Vec<f64> = row.iter().map(|r| r.1).collect();
        let fixed: Vec<bool> = row.iter().map(|r| r.2 || r.0 == r.1).collect();
        let state = (0..row.len())
            .map(|j| {
                if fixed[j] {
                    return lower[j];
                }
                match init.map(|s| s[j]) {
                    Some(z) if z > lower[j] && z <= upper[j] => z,
                    _ => interval_midpoint(lower[j], upper[j]),
                }
            })
            .collect();
        GibbsChain {
            kernel,
            lower,
            upper,
            fixed,
            state,
            rng,
        }
    }

    pub fn sweep(&mut self) {
        for j in 0..self.state.len() {
            if self.fixed[j] {
                continue;
            }
            let mu = self.kernel.conditional_mean(j, &self.state);
            self.state[j] = sample_truncated_normal(mu, self.kernel.cond_sd[j], self.lower[j], self.upper[j], &mut self.rng);
        }
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub fn has_free_coordinates(&self) -> bool {
        self.fixed.iter().any(|f| !f)
    }
}

/// Monte Carlo moments `E[Z_i]` and `E[Z_i Z_iᵀ]` of one truncated row.
#[derive(Clone, Debug, PartialEq)]
pub struct RowMoments {
    pub mean: DVector<f64>,
    pub second: DMatrix<f64>,
}

impl RowMoments {
    /// `second − mean·meanᵀ`.
    pub fn covariance(&self) -> DMatrix<f64> {
        &self.second - &self.mean * self.mean.transpose()
    }
}

fn run_chain(chain: &mut GibbsChain<'_>, settings: &McSettings, mut visit: impl FnMut(&[f64])) {
    if !chain.has_free_coordinates() {
        for _ in 0..settings.n_samples {
            visit(chain.state());
        }
        return;
    }
    for _ in 0..settings.burn_in {
        chain.sweep();
    }
    for _ in 0..settings.n_samples {
        chain.sweep();
        visit(chain.state());
    }
}

/// Gibbs estimate of the truncated moments of one row. `stream` selects the
/// row's random stream under `settings.seed`.
pub fn gibbs_row(kernel: &GibbsKernel, row: &[(f64, f64, bool)], settings: &McSettings, stream: u64) -> Result<RowMoments> {
    settings.validate()?;
    check_row(row, kernel.dim())?;
    let p = kernel.dim();
    let mut chain = GibbsChain::new(kernel, row, None, row_rng(settings.seed, 0, stream));
    let mut mean = DVector::zeros(p);
    let mut second = DMatrix::zeros(p, p);
    run_chain(&mut chain, settings, |z| {
        let z = DVector::from_column_slice(z);
        mean += &z;
        second.ger(1.0, &z, &z, 1.0);
    });
    let scale = 1.0 / settings.n_samples as f64;
    Ok(RowMoments {
        mean: mean * scale,
        second: second * scale,
    })
}

/// Retained draws of one row's chain, for inspection.
pub fn gibbs_draws(kernel: &GibbsKernel, row: &[(f64, f64, bool)], settings: &McSettings, stream: u64) -> Result<Vec<Vec<f64>>> {
    settings.validate()?;
    check_row(row, kernel.dim())?;
    let mut chain = GibbsChain::new(kernel, row, None, row_rng(settings.seed, 0, stream));
    let mut draws = Vec::with_capacity(settings.n_samples);
    run_chain(&mut chain, settings, |z| draws.push(z.to_vec()));
    Ok(draws)
}

fn check_row(row: &[(f64, f64, bool)], p: usize) -> Result<()> {
    if row.len() != p {
        return Err(Error::Sampler(format!("row has {} coordinates, kernel has {p}", row.len())));
    }
    for &(a, b, fixed) in row {
        if !(fixed && a == b) && !(a < b) {
            return Err(Error::Sampler(format!("invalid interval ({a}, {b}]")));
        }
    }
    Ok(())
}

/// Output of one E-step pass.
#[derive(Clone, Debug)]
pub struct EStep {
    /// `(1/n) Σ_i Ê[Z_i Z_iᵀ | Z_i ∈ D(Y_i)]`, before any rescaling.
    pub second_moment: DMatrix<f64>,
    /// Row-wise conditional means, `n × p`.
    pub means: DMatrix<f64>,
    /// Last draw of every row's chain, `n × p`; feeds the next pass.
    pub state: DMatrix<f64>,
}

impl EStep {
    /// The second moment projected to unit diagonal.
    pub fn correlation(&self, role: MatrixRole) -> Result<CorrelationMatrix> {
        let mut m = linalg::to_correlation(&self.second_moment);
        linalg::symmetrize(&mut m);
        CorrelationMatrix::new(m, role)
    }
}

struct RowOutput {
    sum: DMatrix<f64>,
    mean: Vec<f64>,
    last: Vec<f64>,
}

fn reduce_rows(n: usize, p: usize, work: impl Fn(usize) -> RowOutput + Sync) -> EStep {
    let blocks: Vec<(DMatrix<f64>, Vec<RowOutput>)> = (0..n.div_ceil(ROW_BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut acc = DMatrix::zeros(p, p);
            let mut rows = Vec::with_capacity(ROW_BLOCK);
            for i in (b * ROW_BLOCK)..((b + 1) * ROW_BLOCK).min(n) {
                let mut out = work(i);
                acc += &out.sum;
                out.sum = DMatrix::zeros(0, 0);
                rows.push(out);
            }
            (acc, rows)
        })
        .collect();
    let mut total = DMatrix::zeros(p, p);
    let mut means = DMatrix::zeros(n, p);
    let mut state = DMatrix::zeros(n, p);
    let mut i = 0;
    for (acc, rows) in blocks {
        total += acc;
        for row in rows {
            for j in 0..p {
                means[(i, j)] = row.mean[j];
                state[(i, j)] = row.last[j];
            }
            i += 1;
        }
    }
    total /= n as f64;
    linalg::symmetrize(&mut total);
    EStep {
        second_moment: total,
        means,
        state,
    }
}

fn check_bounds(bounds: &IntervalBounds, theta: &DMatrix<f64>) -> Result<()> {
    if bounds.p() != theta.nrows() {
        return Err(Error::Sampler(format!(
            "bounds have {} columns, precision is {}x{}",
            bounds.p(),
            theta.nrows(),
            theta.ncols()
        )));
    }
    Ok(())
}

/// `(1/n) Σ_i Ê[Z_i Z_iᵀ]` with every coordinate sampled inside its interval
/// (degenerate cells stay fixed). `pass` keys the random streams; `init` warm-starts chains.
pub fn expected_second_moment_full(
    bounds: &IntervalBounds,
    theta: &DMatrix<f64>,
    settings: &McSettings,
    pass: u64,
    init: Option<&DMatrix<f64>>,
) -> Result<EStep> {
    settings.validate()?;
    check_bounds(bounds, theta)?;
    let kernel = GibbsKernel::from_precision(theta)?;
    let (n, p) = (bounds.n(), bounds.p());
    let scale = 1.0 / settings.n_samples as f64;
    Ok(reduce_rows(n, p, |i| {
        let row = bounds.row(i);
        let warm: Option<Vec<f64>> = init.map(|s| s.row(i).iter().copied().collect());
        let mut chain = GibbsChain::new(&kernel, &row, warm.as_deref(), row_rng(settings.seed, pass, i as u64));
        let mut sum = DMatrix::zeros(p, p);
        let mut mean = vec![0.0; p];
        run_chain(&mut chain, settings, |z| {
            for (m, v) in mean.iter_mut().zip(z) {
                *m += v;
            }
            let z = DVector::from_column_slice(z);
            sum.ger(scale, &z, &z, 1.0);
        });
        mean.iter_mut().for_each(|m| *m *= scale);
        RowOutput {
            sum,
            mean,
            last: chain.state().to_vec(),
        }
    }))
}

/// `R̄` on correlation scale.
pub fn expected_covariance_full(bounds: &IntervalBounds, theta_m: &PrecisionEstimate, settings: &McSettings) -> Result<CorrelationMatrix> {
    expected_second_moment_full(bounds, &theta_m.theta, settings, 0, None)?.correlation(MatrixRole::ExpectedRBar)
}

/// Partitioned E-step: fixed (degenerate) coordinates enter exactly, the rest
/// through their conditional mean `Ẑ` given the fixed ones and the rectangle,
/// plus the conditional covariance block `(Θ_ss)⁻¹` of the sampled set `s`.
/// Falls back to the full E-step when no coordinate is fixed.
pub fn expected_second_moment_partitioned(
    bounds: &IntervalBounds,
    theta: &DMatrix<f64>,
    settings: &McSettings,
    pass: u64,
    init: Option<&DMatrix<f64>>,
) -> Result<EStep> {
    if !bounds.degenerate.iter().any(|&d| d) {
        return expected_second_moment_full(bounds, theta, settings, pass, init);
    }
    settings.validate()?;
    check_bounds(bounds, theta)?;
    let kernel = GibbsKernel::from_precision(theta)?;
    let (n, p) = (bounds.n(), bounds.p());

    let free_sets: Vec<Vec<usize>> = (0..n).map(|i| (0..p).filter(|&j| !bounds.is_degenerate(i, j)).collect()).collect();
    let mut blocks: HashMap<Vec<usize>, DMatrix<f64>> = HashMap::new();
    for set in &free_sets {
        if set.is_empty() || blocks.contains_key(set) {
            continue;
        }
        let sub = theta.select_rows(set).select_columns(set);
        let inv = linalg::inverse_spd(&sub).ok_or_else(|| Error::Sampler("precision sub-block is singular".into()))?;
        blocks.insert(set.clone(), inv);
    }

    let scale = 1.0 / settings.n_samples as f64;
    Ok(reduce_rows(n, p, |i| {
        let row = bounds.row(i);
        let set = &free_sets[i];
        let mut mean: Vec<f64> = row.iter().map(|r| r.0).collect();
        let mut last = mean.clone();
        if !set.is_empty() {
            let warm: Option<Vec<f64>> = init.map(|s| s.row(i).iter().copied().collect());
            let mut chain = GibbsChain::new(&kernel, &row, warm.as_deref(), row_rng(settings.seed, pass, i as u64));
            let mut acc = vec![0.0; p];
            run_chain(&mut chain, settings, |z| {
                for &j in set {
                    acc[j] += z[j];
                }
            });
            for &j in set {
                mean[j] = acc[j] * scale;
            }
            last = chain.state().to_vec();
        }
        let m = DVector::from_column_slice(&mean);
        let mut sum = &m * m.transpose();
        if let Some(block) = blocks.get(set) {
            for (a, &ja) in set.iter().enumerate() {
                for (b, &jb) in set.iter().enumerate() {
                    sum[(ja, jb)] += block[(a, b)];
                }
            }
        }
        RowOutput { sum, mean, last }
    }))
}

/// `R̃` on correlation scale.
pub fn expected_covariance_partitioned(
    bounds: &IntervalBounds,
    theta_m: &PrecisionEstimate,
    settings: &McSettings,
) -> Result<CorrelationMatrix> {
    expected_second_moment_partitioned(bounds, &theta_m.theta, settings, 0, None)?.correlation(MatrixRole::ExpectedRTilde)
}

/// GHK estimate of `log P(a < X ≤ b)` for `X ~ N(mean, LLᵀ)`, with `chol` the
/// lower Cholesky factor. Each draw conditions coordinates in order and
/// multiplies the one-dimensional window probabilities.
pub fn ghk_log_probability<R: Rng + ?Sized>(
    mean: &[f64],
    chol: &DMatrix<f64>,
    lower: &[f64],
    upper: &[f64],
    draws: usize,
    rng: &mut R,
) -> f64 {
    let k = mean.len();
    if k == 0 {
        return 0.0;
    }
    let mut e = vec![0.0; k];
    let mut logs = Vec::with_capacity(draws.max(1));
    for _ in 0..draws.max(1) {
        let mut log_w = 0.0;
        for r in 0..k {
            let shift: f64 = mean[r] + (0..r).map(|c| chol[(r, c)] * e[c]).sum::<f64>();
            let d = chol[(r, r)];
            let a = (lower[r] - shift) / d;
            let b = (upper[r] - shift) / d;
            let mass = window_mass(a, b);
            if !(mass > 0.0) {
                log_w = f64::NEG_INFINITY;
                break;
            }
            log_w += mass.ln();
            e[r] = sample_truncated_standard(a, b, rng);
        }
        logs.push(log_w);
    }
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + (logs.iter().map(|l| (l - top).exp()).sum::<f64>() / logs.len() as f64).ln()
}

/// `Φ(b) − Φ(a)` evaluated on the side of zero that avoids cancellation.
fn window_mass(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        normal::sf(a) - normal::sf(b)
    } else {
        normal::cdf(b) - normal::cdf(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const HALF_NORMAL_MEAN: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)

    #[test]
    fn untruncated_moments() {
        let (m, v) = trunc_norm_moments_1d(0.0, 1.0, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert_abs_diff_eq!(m, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn half_normal_moments() {
        let (m, v) = trunc_norm_moments_1d(0.0, 1.0, 0.0, f64::INFINITY).unwrap();
        assert_abs_diff_eq!(m, HALF_NORMAL_MEAN, epsilon = 1e-12);
        assert_abs_diff_eq!(v, 1.0 - 2.0 / std::f64::consts::PI, epsilon = 1e-12);
        let (m, _) = trunc_norm_moments_1d(0.0, 1.0, f64::NEG_INFINITY, 0.0).unwrap();
        assert_abs_diff_eq!(m, -HALF_NORMAL_MEAN, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_window_has_zero_mean() {
        for &c in &[0.1, 1.0, 3.0] {
            let (m, _) = trunc_norm_moments_1d(0.0, 1.0, -c, c).unwrap();
            assert_abs_diff_eq!(m, 0.0, epsilon = 1e-14);
        }
        assert!(trunc_norm_moments_1d(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(trunc_norm_moments_1d(0.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn far_tail_moments_stay_finite() {
        let (m, v) = trunc_norm_moments_1d(0.0, 1.0, 40.0, f64::INFINITY).unwrap();
        assert!((40.0..40.1).contains(&m), "{m}");
        assert!((0.0..1e-3).contains(&v));
    }

    #[test]
    fn sampler_respects_tail_intervals() {
        let mut rng = row_rng(1, 0, 0);
        for &(a, b) in &[
            (5.0, f64::INFINITY),
            (-50.0, -45.0),
            (8.0, 8.001),
            (-0.1, 0.1),
            (f64::NEG_INFINITY, -38.0),
        ] {
            for _ in 0..500 {
                let x = sample_truncated_normal(0.0, 1.0, a, b, &mut rng);
                assert!(x > a && x <= b, "{x} not in ({a}, {b}]");
            }
        }
    }

    #[test]
    fn midpoint_is_inside() {
        for &(a, b) in &[
            (f64::NEG_INFINITY, 0.0),
            (0.0, f64::INFINITY),
            (40.0, f64::INFINITY),
            (-1.0, 2.0),
            (f64::NEG_INFINITY, -50.0),
        ] {
            let z = interval_midpoint(a, b);
            assert!(z > a && z <= b, "{z} not in ({a}, {b}]");
        }
        assert_eq!(interval_midpoint(f64::NEG_INFINITY, f64::INFINITY), 0.0);
    }

    #[test]
    fn degenerate_row_is_exact() {
        let kernel = GibbsKernel::from_precision(&DMatrix::identity(2, 2)).unwrap();
        let row = [(0.5, 0.5, true), (-1.5, -1.5, true)];
        let m = gibbs_row(&kernel, &row, &McSettings::default(), 3).unwrap();
        assert_eq!(m.mean.as_slice(), &[0.5, -1.5]);
        assert!(m.covariance().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn half_normal_by_gibbs() {
        let kernel = GibbsKernel::from_covariance(&DMatrix::identity(1, 1)).unwrap();
        let settings = McSettings {
            n_samples: 20_000,
            ..McSettings::default()
        };
        let m = gibbs_row(&kernel, &[(0.0, f64::INFINITY, false)], &settings, 0).unwrap();
        let se = (1.0 - 2.0 / std::f64::consts::PI).sqrt() / (settings.n_samples as f64).sqrt();
        assert!((m.mean[0] - HALF_NORMAL_MEAN).abs() < 4.0 * se);
    }

    #[test]
    fn one_degenerate_row_second_moment() {
        let bounds = IntervalBounds {
            lower: DMatrix::from_row_slice(1, 2, &[0.3, -2.0]),
            upper: DMatrix::from_row_slice(1, 2, &[0.3, -2.0]),
            degenerate: vec![true, true],
        };
        let e = expected_second_moment_full(&bounds, &DMatrix::identity(2, 2), &McSettings::default(), 0, None).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.09, -0.6, -0.6, 4.0]);
        assert!(linalg::max_abs_diff(&e.second_moment, &expected) < 1e-12);
    }

    #[test]
    fn all_fixed_partition_is_score_covariance() {
        let z = [[0.5, -0.2], [-1.0, 0.7], [0.1, 0.1]];
        let mut lower = DMatrix::zeros(3, 2);
        for i in 0..3 {
            for j in 0..2 {
                lower[(i, j)] = z[i][j];
            }
        }
        let bounds = IntervalBounds {
            lower: lower.clone(),
            upper: lower.clone(),
            degenerate: vec![true; 6],
        };
        let theta = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let e = expected_second_moment_partitioned(&bounds, &theta, &McSettings::default(), 0, None).unwrap();
        let expected = lower.transpose() * &lower / 3.0;
        assert!(linalg::max_abs_diff(&e.second_moment, &expected) < 1e-15);
    }

    #[test]
    fn estep_is_thread_count_invariant() {
        let n = 37;
        let mut bounds = IntervalBounds::unbounded(n, 3);
        for i in 0..n {
            bounds.lower[(i, 1)] = if i % 2 == 0 { 0.0 } else { f64::NEG_INFINITY };
            bounds.upper[(i, 1)] = if i % 2 == 0 { f64::INFINITY } else { 0.0 };
        }
        let theta = DMatrix::from_row_slice(3, 3, &[1.5, -0.4, 0.0, -0.4, 1.5, 0.3, 0.0, 0.3, 1.2]);
        let settings = McSettings::default();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| expected_second_moment_full(&bounds, &theta, &settings, 2, None).unwrap());
        let b = four.install(|| expected_second_moment_full(&bounds, &theta, &settings, 2, None).unwrap());
        assert_eq!(a.second_moment, b.second_moment);
        assert_eq!(a.state, b.state);
    }

    #[test]
    fn ghk_matches_univariate_and_orthant() {
        let mut rng = row_rng(3, 0, 0);
        let one = DMatrix::from_element(1, 1, 1.0);
        let lp = ghk_log_probability(&[0.0], &one, &[-1.0], &[2.0], 10, &mut rng);
        assert_abs_diff_eq!(lp.exp(), normal::cdf(2.0) - normal::cdf(-1.0), epsilon = 1e-12);

        // P(X1 > 0, X2 > 0) with correlation ρ is 1/4 + asin(ρ)/(2π).
        let rho: f64 = 0.5;
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
        let chol = sigma.cholesky().unwrap().l();
        let lp = ghk_log_probability(&[0.0, 0.0], &chol, &[0.0, 0.0], &[f64::INFINITY; 2], 20_000, &mut rng);
        let exact = 0.25 + rho.asin() / (2.0 * std::f64::consts::PI);
        assert_abs_diff_eq!(lp.exp(), exact, epsilon = 5e-3);
    }
}
