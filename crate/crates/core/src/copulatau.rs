//! Rank-correlation ("skeptic") route to the latent correlation matrix.
//!
//! Pairwise Kendall's tau, either the sample statistic or the tau implied by
//! a fitted one-parameter bivariate copula, is mapped to `sin(πτ/2)`, repaired
//! to positive semidefinite, and handed to a single graphical lasso fit.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::{rescaled_ecdf, MixedDataset};
use crate::error::{Error, Result};
use crate::glasso::{glasso_fit, CorrelationMatrix, MatrixRole, PrecisionEstimate, SolverSettings};
use crate::linalg;
use crate::normal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Gaussian,
    Clayton,
    Gumbel,
    Frank,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 4] = [FamilyKind::Gaussian, FamilyKind::Clayton, FamilyKind::Gumbel, FamilyKind::Frank];

    pub fn as_str(self) -> &'static str {
        match self {
            FamilyKind::Gaussian => "gaussian",
            FamilyKind::Clayton => "clayton",
            FamilyKind::Gumbel => "gumbel",
            FamilyKind::Frank => "frank",
        }
    }

    fn rotatable(self) -> bool {
        matches!(self, FamilyKind::Clayton | FamilyKind::Gumbel)
    }
}

/// A bivariate copula family. Clayton and Gumbel rotated by 90° cover negative dependence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CopulaFamily {
    pub kind: FamilyKind,
    pub rotated: bool,
}

impl CopulaFamily {
    pub const fn new(kind: FamilyKind) -> Self {
        CopulaFamily { kind, rotated: false }
    }

    pub const fn rotated(kind: FamilyKind) -> Self {
        CopulaFamily { kind, rotated: true }
    }

    pub fn label(&self) -> String {
        if self.rotated {
            format!("{}90", self.kind.as_str())
        } else {
            self.kind.as_str().to_string()
        }
    }

    pub fn check_parameter(&self, theta: f64) -> Result<()> {
        if self.rotated && !self.kind.rotatable() {
            return Err(Error::Tau(format!("{} has no rotated form", self.kind.as_str())));
        }
        let ok = match self.kind {
            FamilyKind::Gaussian => theta > -1.0 && theta < 1.0,
            FamilyKind::Clayton => theta > 0.0 && theta.is_finite(),
            FamilyKind::Gumbel => theta >= 1.0 && theta.is_finite(),
            FamilyKind::Frank => theta != 0.0 && theta.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Tau(format!("parameter {theta} outside the {} domain", self.label())))
        }
    }

    /// Copula distribution function. Gaussian is not provided (no closed form).
    pub fn cdf(&self, u: f64, v: f64, theta: f64) -> Option<f64> {
        if self.rotated {
            return Some(v - CopulaFamily::new(self.kind).cdf(1.0 - u, v, theta)?);
        }
        match self.kind {
            FamilyKind::Gaussian => None,
            FamilyKind::Clayton => Some((u.powf(-theta) + v.powf(-theta) - 1.0).max(0.0).powf(-1.0 / theta)),
            FamilyKind::Gumbel => {
                let (x, y) = (-u.ln(), -v.ln());
                Some((-(x.powf(theta) + y.powf(theta)).powf(1.0 / theta)).exp())
            }
            FamilyKind::Frank => {
                let num = (-theta * u).exp_m1() * (-theta * v).exp_m1();
                Some(-(1.0 + num / (-theta).exp_m1()).ln() / theta)
            }
        }
    }

    /// Log copula density at `(u, v) ∈ (0,1)²`.
    pub fn log_density(&self, u: f64, v: f64, theta: f64) -> f64 {
        if self.rotated {
            return CopulaFamily::new(self.kind).log_density(1.0 - u, v, theta);
        }
        match self.kind {
            FamilyKind::Gaussian => {
                let (x, y) = (normal::quantile(u), normal::quantile(v));
                let r2 = 1.0 - theta * theta;
                -0.5 * r2.ln() - (theta * theta * (x * x + y * y) - 2.0 * theta * x * y) / (2.0 * r2)
            }
            FamilyKind::Clayton => {
                let (lu, lv) = (u.ln(), v.ln());
                let s = (-theta * lu).exp() + (-theta * lv).exp() - 1.0;
                (1.0 + theta).ln() - (theta + 1.0) * (lu + lv) - (2.0 + 1.0 / theta) * s.ln()
            }
            FamilyKind::Gumbel => {
                let (x, y) = (-u.ln(), -v.ln());
                let s = x.powf(theta) + y.powf(theta);
                let a = s.powf(1.0 / theta);
                -a + x + y + (theta - 1.0) * (x.ln() + y.ln()) - (2.0 - 1.0 / theta) * s.ln() + (a + theta - 1.0).ln()
            }
            FamilyKind::Frank => {
                let em = -(-theta).exp_m1(); // 1 − e^{−θ}
                let denom = em - (-theta * u).exp_m1() * (-theta * v).exp_m1();
                (theta * em).abs().ln() - theta * (u + v) - 2.0 * denom.abs().ln()
            }
        }
    }
}

/// Debye function `D₁(x) = (1/x) ∫₀ˣ t / (eᵗ − 1) dt`, any real `x ≠ 0`.
pub fn debye1(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    if x < 0.0 {
        return debye1(-x) - x / 2.0;
    }
    // composite Gauss-Legendre on [0, x]
    let panels = ((x / 2.0).ceil() as usize).clamp(1, 64);
    let h = x / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let a = k as f64 * h;
        for (node, weight) in GL8 {
            let t = a + 0.5 * h * (node + 1.0);
            let f = if t == 0.0 { 1.0 } else { t / t.exp_m1() };
            total += 0.5 * h * weight * f;
        }
    }
    total / x
}

const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

/// Population Kendall's tau of a copula family in closed form.
pub fn tau_from_copula(family: CopulaFamily, theta: f64) -> Result<f64> {
    family.check_parameter(theta)?;
    let tau = match family.kind {
        FamilyKind::Gaussian => 2.0 / PI * theta.asin(),
        FamilyKind::Clayton => theta / (theta + 2.0),
        FamilyKind::Gumbel => 1.0 - 1.0 / theta,
        FamilyKind::Frank => 1.0 - 4.0 / theta * (1.0 - debye1(theta)),
    };
    Ok(if family.rotated { -tau } else { tau })
}

/// Parameter whose implied tau equals `tau`, or `None` when the family cannot reach it.
pub fn invert_tau(family: CopulaFamily, tau: f64) -> Option<f64> {
    const EPS: f64 = 1e-6;
    let t = if family.rotated { -tau } else { tau };
    if !(-1.0..=1.0).contains(&t) {
        return None;
    }
    match family.kind {
        FamilyKind::Gaussian => Some((FRAC_PI_2 * t).sin().clamp(-1.0 + 1e-9, 1.0 - 1e-9)),
        FamilyKind::Clayton => {
            if t < 0.0 {
                return None;
            }
            let t = t.clamp(EPS / 2.0, 1.0 - 1e-9);
            Some(2.0 * t / (1.0 - t))
        }
        FamilyKind::Gumbel => {
            if t < 0.0 {
                return None;
            }
            Some(1.0 / (1.0 - t.min(1.0 - 1e-9)))
        }
        FamilyKind::Frank => {
            let t = t.clamp(-1.0 + 1e-9, 1.0 - 1e-9);
            if t.abs() < 1e-9 {
                return Some(if t < 0.0 { -EPS } else { EPS });
            }
            // Frank tau is increasing in θ; keep f(lo) < 0 <= f(hi)
            let f = |x: f64| tau_from_copula(CopulaFamily::new(FamilyKind::Frank), x).unwrap() - t;
            let (mut lo, mut hi) = if t > 0.0 { (EPS, 1.0) } else { (-1.0, -EPS) };
            while f(hi) < 0.0 {
                hi *= 2.0;
                if hi > 1e6 {
                    return None;
                }
            }
            while f(lo) >= 0.0 {
                lo *= 2.0;
                if lo < -1e6 {
                    return None;
                }
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-12 * hi.abs().max(1.0) {
                    break;
                }
            }
            Some(0.5 * (lo + hi))
        }
    }
}

/// Kendall's tau-b with tie corrections. Pairs with a missing entry are dropped.
/// A margin with no variation gives `0` (and a logged warning).
pub fn sample_kendall_tau(x: &[Option<f64>], y: &[Option<f64>]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Tau("paired vectors differ in length".into()));
    }
    let pairs: Vec<(f64, f64)> = x.iter().zip(y).filter_map(|(a, b)| Some(((*a)?, (*b)?))).collect();
    kendall_tau_b(&pairs)
}

pub fn kendall_tau_b(pairs: &[(f64, f64)]) -> Result<f64> {
    let n = pairs.len();
    if n < 2 {
        return Err(Error::Tau(format!("need at least 2 complete pairs, got {n}")));
    }
    let (mut concordant, mut discordant, mut ties_x, mut ties_y) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        let (xi, yi) = pairs[i];
        for &(xj, yj) in &pairs[i + 1..] {
            let dx = xi - xj;
            let dy = yi - yj;
            if dx == 0.0 {
                ties_x += 1;
            }
            if dy == 0.0 {
                ties_y += 1;
            }
            let s = dx * dy;
            if s > 0.0 {
                concordant += 1;
            } else if s < 0.0 {
                discordant += 1;
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as f64;
    let denom = ((n0 - ties_x as f64) * (n0 - ties_y as f64)).sqrt();
    if denom == 0.0 {
        log::warn!("Kendall's tau undefined for a constant margin; using 0");
        return Ok(0.0);
    }
    Ok((concordant - discordant) as f64 / denom)
}

/// Result of fitting one variable pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairFit {
    pub family: CopulaFamily,
    pub parameter: f64,
    /// Tau implied by the fitted family.
    pub tau: f64,
    pub loglik: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PairFitSettings {
    pub candidates: Vec<FamilyKind>,
    /// Allow 90° rotations of Clayton/Gumbel for negative dependence.
    pub allow_rotation: bool,
    /// Refine the tau-inverted parameter by maximizing the pseudo-likelihood.
    pub refine: bool,
}

impl Default for PairFitSettings {
    fn default() -> Self {
        PairFitSettings {
            candidates: FamilyKind::ALL.to_vec(),
            allow_rotation: true,
            refine: false,
        }
    }
}

fn pseudo_loglik(family: CopulaFamily, theta: f64, u: &[f64], v: &[f64]) -> f64 {
    let ll: f64 = u.iter().zip(v).map(|(&a, &b)| family.log_density(a, b, theta)).sum();
    if ll.is_finite() {
        ll
    } else {
        f64::NEG_INFINITY
    }
}

fn family_bounds(family: CopulaFamily) -> (f64, f64) {
    match family.kind {
        FamilyKind::Gaussian => (-0.999, 0.999),
        FamilyKind::Clayton => (1e-4, 50.0),
        FamilyKind::Gumbel => (1.0, 50.0),
        FamilyKind::Frank => (-100.0, 100.0),
    }
}

/// Golden-section refinement of the pseudo-likelihood around `start`.
fn refine_parameter(family: CopulaFamily, start: f64, u: &[f64], v: &[f64]) -> f64 {
    let (lo_b, hi_b) = family_bounds(family);
    let width = match family.kind {
        FamilyKind::Gaussian => 0.2,
        _ => 0.5 * start.abs().max(0.5),
    };
    let (mut lo, mut hi) = ((start - width).max(lo_b), (start + width).min(hi_b));
    if family.kind == FamilyKind::Frank && lo < 0.0 && hi > 0.0 {
        if start > 0.0 {
            lo = 1e-6;
        } else {
            hi = -1e-6;
        }
    }
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let f = |t: f64| -pseudo_loglik(family, t, u, v);
    let (mut c, mut d) = (hi - g * (hi - lo), lo + g * (hi - lo));
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    let best = 0.5 * (lo + hi);
    if f(best) <= f(start) {
        best
    } else {
        start
    }
}

/// Fits each candidate by tau inversion (optionally refined), selects by
/// pseudo-log-likelihood, and reports the selected family's tau. Falls back
/// to the Gaussian copula when no candidate can reach the sample tau.
pub fn fit_pair_copula(u: &[f64], v: &[f64], settings: &PairFitSettings) -> Result<PairFit> {
    if u.len() != v.len() {
        return Err(Error::Tau("pseudo-observation vectors differ in length".into()));
    }
    if u.len() < 10 {
        return Err(Error::Tau(format!("need at least 10 complete pairs, got {}", u.len())));
    }
    if u.iter().chain(v).any(|&w| !(w > 0.0 && w < 1.0)) {
        return Err(Error::Tau("pseudo-observations must lie in (0, 1)".into()));
    }
    let pairs: Vec<(f64, f64)> = u.iter().copied().zip(v.iter().copied()).collect();
    let tau = kendall_tau_b(&pairs)?;
    Ok(fit_pair_from_tau(u, v, tau, settings))
}

fn fit_pair_from_tau(u: &[f64], v: &[f64], tau: f64, settings: &PairFitSettings) -> PairFit {
    let mut best: Option<PairFit> = None;
    for &kind in &settings.candidates {
        let family = if kind.rotatable() && tau < 0.0 && settings.allow_rotation {
            CopulaFamily::rotated(kind)
        } else {
            CopulaFamily::new(kind)
        };
        let Some(mut theta) = invert_tau(family, tau) else {
            continue;
        };
        if family.check_parameter(theta).is_err() {
            continue;
        }
        if settings.refine {
            theta = refine_parameter(family, theta, u, v);
        }
        let loglik = pseudo_loglik(family, theta, u, v);
        if loglik == f64::NEG_INFINITY {
            continue;
        }
        if best.as_ref().is_none_or(|b| loglik > b.loglik) {
            best = Some(PairFit {
                family,
                parameter: theta,
                tau: tau_from_copula(family, theta).expect("checked parameter"),
                loglik,
            });
        }
    }
    best.unwrap_or_else(|| {
        let family = CopulaFamily::new(FamilyKind::Gaussian);
        let theta = invert_tau(family, tau).expect("gaussian reaches every tau");
        PairFit {
            family,
            parameter: theta,
            tau: tau_from_copula(family, theta).expect("in domain"),
            loglik: pseudo_loglik(family, theta, u, v),
        }
    })
}

/// Symmetric matrix of pairwise tau estimates with unit diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct TauMatrix(DMatrix<f64>);

impl TauMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !linalg::is_symmetric(&m, 1e-12) {
            return Err(Error::Tau("tau matrix is not symmetric".into()));
        }
        if m.iter().any(|t| !(-1.0..=1.0).contains(t)) {
            return Err(Error::Tau("tau entries must lie in [-1, 1]".into()));
        }
        if (0..m.nrows()).any(|i| m[(i, i)] != 1.0) {
            return Err(Error::Tau("tau matrix needs a unit diagonal".into()));
        }
        Ok(TauMatrix(m))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// `Γ̂_ij = sin(π τ_ij / 2)` with unit diagonal; not necessarily PSD.
pub fn correlation_from_tau(taus: &TauMatrix) -> DMatrix<f64> {
    let p = taus.0.nrows();
    DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { (FRAC_PI_2 * taus.0[(i, j)]).sin() })
}

pub const PSD_FLOOR: f64 = 1e-6;

/// Eigenvalue clipping at [`PSD_FLOOR`] followed by unit-diagonal rescaling,
/// repeated a few times. Rescaling can leave the smallest eigenvalue just under
/// the floor, so a final shrink `(1 − α)Γ + αI` closes the gap. Inputs already
/// above the floor are returned unchanged.
pub fn nearest_psd(gamma: &DMatrix<f64>) -> Result<CorrelationMatrix> {
    let mut current = gamma.clone();
    linalg::symmetrize(&mut current);
    for _ in 0..20 {
        let eig = SymmetricEigen::new(current.clone());
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min >= PSD_FLOOR {
            return CorrelationMatrix::new(current, MatrixRole::TauDerived);
        }
        let clipped = eig.eigenvalues.map(|l| l.max(PSD_FLOOR));
        let mut rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
        linalg::symmetrize(&mut rebuilt);
        current = linalg::to_correlation(&rebuilt);
    }
    let min = linalg::min_eigenvalue(&current);
    let target = 2.0 * PSD_FLOOR;
    let alpha = ((target - min) / (1.0 - min)).clamp(0.0, 1.0);
    let p = current.nrows();
    let shrunk = DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { (1.0 - alpha) * current[(i, j)] });
    if linalg::min_eigenvalue(&shrunk) < PSD_FLOOR {
        return Err(Error::Tau("PSD repair did not reach the eigenvalue floor".into()));
    }
    CorrelationMatrix::new(shrunk, MatrixRole::TauDerived)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TauMode {
    /// Raw sample Kendall's tau-b (nonparanormal skeptic).
    Sample,
    /// Tau implied by the best-fitting parametric pair copula.
    Copula,
}

/// Pairwise tau matrix plus per-pair fit details (copula mode only).
#[derive(Clone, Debug)]
pub struct TauEstimate {
    pub taus: TauMatrix,
    pub fits: Vec<((usize, usize), PairFit)>,
}

/// Rescaled-ECDF pseudo-observations of the complete pairs of columns `i`, `j`.
fn pair_pseudo_observations(dataset: &MixedDataset, i: usize, j: usize) -> (Vec<f64>, Vec<f64>, Vec<(f64, f64)>) {
    let pairs: Vec<(f64, f64)> = (0..dataset.n())
        .filter_map(|r| Some((dataset.get(r, i)?, dataset.get(r, j)?)))
        .collect();
    if pairs.is_empty() {
        return (Vec::new(), Vec::new(), pairs);
    }
    let fx = rescaled_ecdf(&pairs.iter().map(|p| p.0).collect::<Vec<_>>()).expect("nonempty");
    let fy = rescaled_ecdf(&pairs.iter().map(|p| p.1).collect::<Vec<_>>()).expect("nonempty");
    let u = pairs.iter().map(|p| fx.eval(p.0)).collect();
    let v = pairs.iter().map(|p| fy.eval(p.1)).collect();
    (u, v, pairs)
}

pub fn tau_matrix(dataset: &MixedDataset, mode: TauMode, pair_settings: &PairFitSettings) -> Result<TauEstimate> {
    let p = dataset.p();
    let index: Vec<(usize, usize)> = (0..p).flat_map(|i| ((i + 1)..p).map(move |j| (i, j))).collect();
    let results: Vec<Result<(f64, Option<PairFit>)>> = index
        .par_iter()
        .map(|&(i, j)| {
            let (u, v, pairs) = pair_pseudo_observations(dataset, i, j);
            let tau = kendall_tau_b(&pairs).map_err(|e| Error::Tau(format!("columns {i},{j}: {e}")))?;
            match mode {
                TauMode::Sample => Ok((tau, None)),
                TauMode::Copula => {
                    if u.len() < 10 {
                        return Ok((tau, None));
                    }
                    let fit = fit_pair_from_tau(&u, &v, tau, pair_settings);
                    Ok((fit.tau, Some(fit)))
                }
            }
        })
        .collect();
    let mut m = DMatrix::identity(p, p);
    let mut fits = Vec::new();
    for (&(i, j), r) in index.iter().zip(results) {
        let (tau, fit) = r?;
        m[(i, j)] = tau;
        m[(j, i)] = tau;
        if let Some(fit) = fit {
            fits.push(((i, j), fit));
        }
    }
    Ok(TauEstimate {
        taus: TauMatrix::new(m)?,
        fits,
    })
}

/// Writes per-pair fits as TSV: `i  j  family  parameter  tau  loglik`.
pub fn write_pair_fits_tsv<W: std::io::Write>(fits: &[((usize, usize), PairFit)], mut out: W) -> Result<()> {
    writeln!(out, "i\tj\tfamily\tparameter\ttau\tloglik")?;
    for ((i, j), f) in fits {
        writeln!(
            out,
            "{i}\t{j}\t{}\t{:.10e}\t{:.10e}\t{:.10e}",
            f.family.label(),
            f.parameter,
            f.tau,
            f.loglik
        )?;
    }
    Ok(())
}

/// The repaired correlation matrix `Γ̂` the skeptic fit is run on.
pub fn skeptic_correlation(
    dataset: &MixedDataset,
    mode: TauMode,
    pair_settings: &PairFitSettings,
) -> Result<(CorrelationMatrix, TauEstimate)> {
    let est = tau_matrix(dataset, mode, pair_settings)?;
    let gamma = nearest_psd(&correlation_from_tau(&est.taus))?;
    Ok((gamma, est))
}

/// One-step graphical lasso on the tau-derived correlation matrix.
pub fn skeptic_fit(
    dataset: &MixedDataset,
    lambda: f64,
    mode: TauMode,
    pair_settings: &PairFitSettings,
    solver: &SolverSettings,
) -> Result<PrecisionEstimate> {
    let (gamma, _) = skeptic_correlation(dataset, mode, pair_settings)?;
    glasso_fit(&gamma, lambda, None, solver)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn some(v: &[f64]) -> Vec<Option<f64>> {
        v.iter().map(|&x| Some(x)).collect()
    }

    #[test]
    fn tau_b_small_cases() {
        let x = some(&[1.0, 2.0, 3.0]);
        assert_abs_diff_eq!(sample_kendall_tau(&x, &some(&[2.0, 4.0, 6.0])).unwrap(), 1.0);
        assert_abs_diff_eq!(sample_kendall_tau(&x, &some(&[3.0, 2.0, 1.0])).unwrap(), -1.0);
        assert_abs_diff_eq!(sample_kendall_tau(&x, &some(&[1.0, 3.0, 2.0])).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn tau_b_ties_and_missing() {
        // x ties on one pair: C=2, D=0, N0=3, Nx=1, Ny=0
        let x = some(&[1.0, 1.0, 2.0]);
        let y = some(&[1.0, 2.0, 3.0]);
        assert_abs_diff_eq!(sample_kendall_tau(&x, &y).unwrap(), 2.0 / 6f64.sqrt(), epsilon = 1e-15);
        let x = vec![Some(1.0), None, Some(2.0)];
        let y = vec![Some(5.0), Some(0.0), Some(9.0)];
        assert_eq!(sample_kendall_tau(&x, &y).unwrap(), 1.0);
        assert!(sample_kendall_tau(&[Some(1.0), None], &[Some(1.0), Some(2.0)]).is_err());
        assert_eq!(sample_kendall_tau(&some(&[1.0, 1.0, 1.0]), &some(&[1.0, 2.0, 3.0])).unwrap(), 0.0);
    }

    #[test]
    fn closed_form_taus() {
        let g = CopulaFamily::new(FamilyKind::Gaussian);
        assert_eq!(tau_from_copula(g, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(tau_from_copula(g, 0.5).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(tau_from_copula(CopulaFamily::new(FamilyKind::Clayton), 2.0).unwrap(), 0.5);
        assert_abs_diff_eq!(tau_from_copula(CopulaFamily::new(FamilyKind::Gumbel), 2.0).unwrap(), 0.5);
        assert_abs_diff_eq!(tau_from_copula(CopulaFamily::rotated(FamilyKind::Clayton), 2.0).unwrap(), -0.5);
        assert!(tau_from_copula(CopulaFamily::new(FamilyKind::Clayton), -1.0).is_err());
        assert!(tau_from_copula(CopulaFamily::new(FamilyKind::Gumbel), 0.5).is_err());
        assert!(tau_from_copula(CopulaFamily::new(FamilyKind::Frank), 0.0).is_err());
        assert!(tau_from_copula(CopulaFamily::rotated(FamilyKind::Frank), 1.0).is_err());
    }

    #[test]
    fn frank_tau_is_odd_and_invertible() {
        let f = CopulaFamily::new(FamilyKind::Frank);
        for &theta in &[0.5, 2.0, 7.5, 20.0] {
            let t = tau_from_copula(f, theta).unwrap();
            assert_abs_diff_eq!(tau_from_copula(f, -theta).unwrap(), -t, epsilon = 1e-12);
            assert_abs_diff_eq!(invert_tau(f, t).unwrap(), theta, epsilon = 1e-6);
        }
        // known value: Frank θ = 5.736 gives tau ≈ 0.5
        assert_abs_diff_eq!(tau_from_copula(f, 5.736_276).unwrap(), 0.5, epsilon = 1e-4);
    }

    #[test]
    fn inversion_roundtrip() {
        for kind in FamilyKind::ALL {
            for &tau in &[0.1, 0.35, 0.7] {
                let fam = CopulaFamily::new(kind);
                let theta = invert_tau(fam, tau).unwrap();
                assert_abs_diff_eq!(tau_from_copula(fam, theta).unwrap(), tau, epsilon = 1e-9);
            }
        }
        assert!(invert_tau(CopulaFamily::new(FamilyKind::Clayton), -0.3).is_none());
        let rot = CopulaFamily::rotated(FamilyKind::Gumbel);
        let theta = invert_tau(rot, -0.3).unwrap();
        assert_abs_diff_eq!(tau_from_copula(rot, theta).unwrap(), -0.3, epsilon = 1e-12);
    }

    #[test]
    fn densities_integrate_to_one() {
        // midpoint rule on a 400² grid
        let m = 400;
        for (fam, theta) in [
            (CopulaFamily::new(FamilyKind::Gaussian), 0.4),
            (CopulaFamily::new(FamilyKind::Clayton), 1.0),
            (CopulaFamily::new(FamilyKind::Gumbel), 1.5),
            (CopulaFamily::new(FamilyKind::Frank), -3.0),
            (CopulaFamily::rotated(FamilyKind::Clayton), 1.0),
        ] {
            let mut total = 0.0;
            for a in 0..m {
                for b in 0..m {
                    let (u, v) = ((a as f64 + 0.5) / m as f64, (b as f64 + 0.5) / m as f64);
                    total += fam.log_density(u, v, theta).exp();
                }
            }
            total /= (m * m) as f64;
            assert!((total - 1.0).abs() < 0.01, "{} integrates to {total}", fam.label());
        }
    }

    #[test]
    fn sine_bridge() {
        let t = TauMatrix::new(DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.5, 0.0, 1.0, 1.0, 0.5, 1.0, 1.0])).unwrap();
        let g = correlation_from_tau(&t);
        assert_eq!(g[(0, 1)], 0.0);
        assert_abs_diff_eq!(g[(1, 2)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g[(0, 2)], std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert!(TauMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 1.5, 1.5, 1.0])).is_err());
    }

    #[test]
    fn psd_repair() {
        let id = DMatrix::identity(4, 4);
        assert_eq!(nearest_psd(&id).unwrap().matrix(), &id);
        let pd = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]);
        assert_eq!(nearest_psd(&pd).unwrap().matrix(), &pd);

        let bad = DMatrix::from_row_slice(3, 3, &[1.0, 0.9, 0.9, 0.9, 1.0, -0.9, 0.9, -0.9, 1.0]);
        assert!(linalg::min_eigenvalue(&bad) < 0.0);
        let fixed = nearest_psd(&bad).unwrap();
        assert!(linalg::min_eigenvalue(fixed.matrix()) >= PSD_FLOOR);
        for i in 0..3 {
            assert_abs_diff_eq!(fixed.matrix()[(i, i)], 1.0, epsilon = 1e-12);
        }
        let again = nearest_psd(fixed.matrix()).unwrap();
        assert_eq!(again.matrix(), fixed.matrix());

        // equicorrelation −0.5 at p = 12 is far from PSD; clipping alone stalls below the floor
        let far = DMatrix::from_fn(12, 12, |i, j| if i == j { 1.0 } else { -0.5 });
        let fixed = nearest_psd(&far).unwrap();
        assert!(linalg::min_eigenvalue(fixed.matrix()) >= PSD_FLOOR);
        assert!(fixed.matrix().diagonal().iter().all(|&d| d == 1.0));
    }

    #[test]
    fn pair_fit_argument_checks() {
        let u: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
        assert!(fit_pair_copula(&u, &u, &PairFitSettings::default()).is_err());
        let u: Vec<f64> = (0..12).map(|i| i as f64 / 12.0).collect();
        assert!(fit_pair_copula(&u, &u, &PairFitSettings::default()).is_err());
    }

    #[test]
    fn negative_tau_without_rotation_falls_back() {
        let u: Vec<f64> = (1..=30).map(|i| i as f64 / 31.0).collect();
        let v: Vec<f64> = u.iter().rev().map(|&x| (x * 0.9 + 0.05).min(0.99)).collect();
        let settings = PairFitSettings {
            candidates: vec![FamilyKind::Clayton, FamilyKind::Gumbel],
            allow_rotation: false,
            refine: false,
        };
        let fit = fit_pair_copula(&u, &v, &settings).unwrap();
        assert_eq!(fit.family.kind, FamilyKind::Gaussian);
        assert!(fit.tau < -0.9);
    }
}
