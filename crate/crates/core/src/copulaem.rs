//! Monte Carlo EM for the Gaussian copula graphical model.
//!
//! Each iteration draws the expected latent covariance `R̄` under the current
//! precision (see [`crate::tmvn`]) and refits it by graphical lasso. A grid of
//! penalties is walked from sparse to dense with warm starts, and the fitted
//! models are ranked by AIC or BIC built on `Q(Θ̂ | Θ̂)`.

use std::collections::HashMap;
use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::{interval_bounds, BoundsMode, IntervalBounds, MixedDataset};
use crate::error::{Error, Result};
use crate::glasso::{self, glasso_fit, CorrelationMatrix, MatrixRole, PrecisionEstimate, SolverSettings};
use crate::linalg;
use crate::tmvn::{self, EStep, McSettings};

/// Stream key offset for the information-criterion E-step and GHK draws.
const IC_STREAM: u64 = 0x1c_0000_0000;
/// Stream key for the first E-step used to size the default grid.
const GRID_STREAM: u64 = 0x6d_0000_0000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmSettings {
    pub max_iters: usize,
    /// Stop once the largest entry change of `Θ` falls below this.
    pub conv_tol: f64,
    pub variant: BoundsMode,
    pub mc: McSettings,
    pub solver: SolverSettings,
}

impl Default for EmSettings {
    fn default() -> Self {
        EmSettings {
            max_iters: 10,
            conv_tol: 1e-3,
            variant: BoundsMode::Partitioned,
            mc: McSettings::default(),
            solver: SolverSettings::default(),
        }
    }
}

impl EmSettings {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        if !(self.conv_tol > 0.0) {
            return Err(Error::InvalidArgument(format!("conv_tol must be positive, got {}", self.conv_tol)));
        }
        self.mc.validate()?;
        self.solver.validate()
    }
}

/// Diagnostics of one EM iteration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmIteration {
    pub iteration: usize,
    /// `(n/2){log det Θ − Tr(ΘR̄)}` at the accepted `Θ`.
    pub q: f64,
    /// Penalized surrogate `(n/2){log det Θ − Tr(ΘR̄) − λ‖Θ‖₁}` at the previous `Θ`.
    pub surrogate_prev: f64,
    /// The same surrogate at the accepted `Θ`; never below `surrogate_prev`.
    pub surrogate_new: f64,
    pub edges: usize,
    pub max_change: f64,
    pub kkt: f64,
    /// The M-step solution did not improve the surrogate and the previous `Θ` was kept.
    pub kept_previous: bool,
}

#[derive(Clone, Debug)]
pub struct EmResult {
    pub lambda: f64,
    pub theta: PrecisionEstimate,
    /// `R̄` fed to the last M-step.
    pub r_bar: CorrelationMatrix,
    /// Penalized `Q` per iteration.
    pub q_trace: Vec<f64>,
    pub trace: Vec<EmIteration>,
    pub iterations: usize,
    pub converged: bool,
    /// Final Gibbs state per row, `n × p`; warm-starts the next fit on a path.
    pub state: DMatrix<f64>,
    pub settings: EmSettings,
    /// Position on the penalty path; keys the random streams.
    pub path_index: usize,
}

impl EmResult {
    /// Per-iteration diagnostics as a tab-separated table.
    pub fn write_trace_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "lambda\titeration\tq\tsurrogate_prev\tsurrogate_new\tedges\tmax_change\tkkt\tkept_previous"
        )?;
        for it in &self.trace {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                self.lambda, it.iteration, it.q, it.surrogate_prev, it.surrogate_new, it.edges, it.max_change, it.kkt, it.kept_previous
            )?;
        }
        Ok(())
    }
}

/// `(n/2){log det Θ − Tr(ΘR̄)}`.
pub fn q_value(theta: &DMatrix<f64>, r_bar: &DMatrix<f64>, n: usize) -> f64 {
    match linalg::log_det_spd(theta) {
        Some(log_det) => 0.5 * n as f64 * (log_det - linalg::trace_product(theta, r_bar)),
        None => f64::NEG_INFINITY,
    }
}

fn surrogate(theta: &DMatrix<f64>, r_bar: &DMatrix<f64>, lambda: f64, n: usize, solver: &SolverSettings) -> f64 {
    0.5 * n as f64 * glasso::penalized_objective(theta, r_bar, lambda, solver.penalize_diagonal)
}

fn e_step(
    bounds: &IntervalBounds,
    theta: &DMatrix<f64>,
    variant: BoundsMode,
    mc: &McSettings,
    pass: u64,
    init: Option<&DMatrix<f64>>,
) -> Result<EStep> {
    match variant {
        BoundsMode::Full => tmvn::expected_second_moment_full(bounds, theta, mc, pass, init),
        BoundsMode::Partitioned => tmvn::expected_second_moment_partitioned(bounds, theta, mc, pass, init),
    }
}

fn role(variant: BoundsMode) -> MatrixRole {
    match variant {
        BoundsMode::Full => MatrixRole::ExpectedRBar,
        BoundsMode::Partitioned => MatrixRole::ExpectedRTilde,
    }
}

fn pass_key(path_index: usize, iteration: usize) -> u64 {
    ((path_index as u64) << 20) | iteration as u64
}

/// `true` when every cell is pinned, so the E-step does not depend on `Θ`.
fn is_deterministic(bounds: &IntervalBounds, variant: BoundsMode) -> bool {
    variant == BoundsMode::Partitioned && bounds.degenerate.iter().all(|&d| d)
}

struct Start<'a> {
    theta: Option<&'a PrecisionEstimate>,
    state: Option<&'a DMatrix<f64>>,
}

fn run_em(bounds: &IntervalBounds, lambda: f64, settings: &EmSettings, start: Start<'_>, path_index: usize) -> Result<EmResult> {
    let n = bounds.n();
    let p = bounds.p();
    let mut current = match start.theta {
        Some(t) => t.clone(),
        None => PrecisionEstimate::from_theta(DMatrix::identity(p, p), lambda),
    };
    let mut state = start.state.cloned();
    let deterministic = is_deterministic(bounds, settings.variant);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut r_bar = None;

    for iteration in 1..=settings.max_iters {
        let step = e_step(
            bounds,
            &current.theta,
            settings.variant,
            &settings.mc,
            pass_key(path_index, iteration),
            state.as_ref(),
        )?;
        let r = step.correlation(role(settings.variant))?;
        let before = surrogate(&current.theta, r.matrix(), lambda, n, &settings.solver);
        let fit = m_step(&r, lambda, &current, before, n, &settings.solver)?;
        let (next, kept_previous) = fit;
        let after = surrogate(&next.theta, r.matrix(), lambda, n, &settings.solver);
        let q = q_value(&next.theta, r.matrix(), n);
        if !q.is_finite() || !after.is_finite() {
            return Err(Error::Em(format!("non-finite Q at iteration {iteration} (λ = {lambda})")));
        }
        let max_change = linalg::max_abs_diff(&next.theta, &current.theta);
        let kkt = glasso::kkt_residual_with(&next, r.matrix(), lambda, settings.solver.penalize_diagonal)?;
        let record = EmIteration {
            iteration,
            q,
            surrogate_prev: before,
            surrogate_new: after,
            edges: next.edge_count(),
            max_change,
            kkt,
            kept_previous,
        };
        log::debug!(
            "em\tλ={lambda:.6}\titer={iteration}\tq={q:.6}\tedges={}\tmax_change={max_change:.3e}\tkkt={kkt:.2e}",
            record.edges
        );
        trace.push(record);
        current = PrecisionEstimate::from_theta(next.theta, lambda);
        state = Some(step.state);
        r_bar = Some(r);
        if deterministic || max_change < settings.conv_tol {
            converged = true;
            break;
        }
    }

    let iterations = trace.len();
    Ok(EmResult {
        lambda,
        q_trace: trace.iter().map(|t| t.surrogate_new).collect(),
        trace,
        iterations,
        converged,
        theta: current,
        r_bar: r_bar.expect("at least one iteration"),
        state: state.expect("at least one iteration"),
        settings: *settings,
        path_index,
    })
}

/// Graphical lasso on `R̄`, warm-started from the current iterate. The result is
/// accepted only if it does not lower the fixed-`R̄` surrogate; a failing fit is
/// re-solved at a tighter tolerance once before falling back to the current `Θ`.
fn m_step(
    r: &CorrelationMatrix,
    lambda: f64,
    current: &PrecisionEstimate,
    before: f64,
    n: usize,
    solver: &SolverSettings,
) -> Result<(PrecisionEstimate, bool)> {
    let fit = glasso_fit(r, lambda, Some(current), solver)?;
    if surrogate(&fit.theta, r.matrix(), lambda, n, solver) >= before {
        return Ok((fit, false));
    }
    let tight = SolverSettings {
        tol: solver.tol * 1e-2,
        max_sweeps: solver.max_sweeps * 5,
        ..*solver
    };
    if let Ok(refit) = glasso_fit(r, lambda, Some(&fit), &tight) {
        if surrogate(&refit.theta, r.matrix(), lambda, n, solver) >= before {
            return Ok((refit, false));
        }
    }
    Ok((current.clone(), true))
}

/// Copula EM at one penalty, starting from `Θ⁽⁰⁾ = I`.
pub fn em_fit(dataset: &MixedDataset, lambda: f64, settings: &EmSettings) -> Result<EmResult> {
    settings.validate()?;
    check_lambda(lambda)?;
    let bounds = interval_bounds(dataset, settings.variant);
    run_em(&bounds, lambda, settings, Start { theta: None, state: None }, 0)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "penalty must be finite and nonnegative, got {lambda}"
        )));
    }
    Ok(())
}

/// EM along a strictly decreasing grid. Each fit starts from the previous
/// penalty's `Θ̂` and Gibbs state.
pub fn em_path(dataset: &MixedDataset, lambdas: &[f64], settings: &EmSettings) -> Result<Vec<EmResult>> {
    settings.validate()?;
    glasso::check_decreasing(lambdas)?;
    lambdas.iter().try_for_each(|&l| check_lambda(l))?;
    let bounds = interval_bounds(dataset, settings.variant);
    let mut path: Vec<EmResult> = Vec::with_capacity(lambdas.len());
    for (k, &lambda) in lambdas.iter().enumerate() {
        let start = match path.last() {
            Some(prev) => Start {
                theta: Some(&prev.theta),
                state: Some(&prev.state),
            },
            None => Start { theta: None, state: None },
        };
        let result = run_em(&bounds, lambda, settings, start, k)?;
        log::info!(
            "em path λ={lambda:.6}: {} iterations, {} edges{}",
            result.iterations,
            result.theta.edge_count(),
            if result.converged { "" } else { " (max_iters reached)" }
        );
        path.push(result);
    }
    Ok(path)
}

/// Cold-started fits for every penalty, run in parallel. Random streams match
/// the warm path's, but no state is shared between penalties.
pub fn em_path_independent(dataset: &MixedDataset, lambdas: &[f64], settings: &EmSettings) -> Result<Vec<EmResult>> {
    settings.validate()?;
    glasso::check_decreasing(lambdas)?;
    lambdas.iter().try_for_each(|&l| check_lambda(l))?;
    let bounds = interval_bounds(dataset, settings.variant);
    lambdas
        .par_iter()
        .enumerate()
        .map(|(k, &lambda)| run_em(&bounds, lambda, settings, Start { theta: None, state: None }, k))
        .collect()
}

/// Ten log-spaced penalties from `max |R̄₀_ij|` down to a tenth of it, where
/// `R̄₀` is the E-step under `Θ = I`.
pub fn default_lambda_grid(dataset: &MixedDataset, settings: &EmSettings, count: usize) -> Result<Vec<f64>> {
    settings.validate()?;
    if count == 0 {
        return Err(Error::InvalidArgument("grid needs at least one point".into()));
    }
    let bounds = interval_bounds(dataset, settings.variant);
    let p = bounds.p();
    let r0 = e_step(&bounds, &DMatrix::identity(p, p), settings.variant, &settings.mc, GRID_STREAM, None)?
        .correlation(role(settings.variant))?;
    let top = r0.max_abs_off_diagonal();
    if !(top > 0.0) {
        return Err(Error::Em("all off-diagonal entries of the initial R̄ are zero".into()));
    }
    Ok(linalg::log_spaced_desc(top, 0.1 * top, count))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HMode {
    /// `h_term = 0`: rank by `−2Q` plus the penalty.
    Omit,
    /// Estimate `2H` from per-row GHK probabilities of the latent rectangles.
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Aic,
    Bic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IcReport {
    pub lambda: f64,
    pub n: usize,
    /// Nonzero upper off-diagonal entries of `Θ̂`.
    pub d: usize,
    /// `−2Q(Θ̂ | Θ̂)`.
    pub q_term: f64,
    /// `2H(Θ̂ | Θ̂)`, when estimated.
    pub h_term: Option<f64>,
    pub aic: f64,
    pub bic: f64,
}

impl IcReport {
    pub fn from_terms(lambda: f64, n: usize, d: usize, q_term: f64, h_term: Option<f64>) -> Self {
        let base = q_term + h_term.unwrap_or(0.0);
        IcReport {
            lambda,
            n,
            d,
            q_term,
            h_term,
            aic: base + 2.0 * d as f64,
            bic: base + (n as f64).ln() * d as f64,
        }
    }

    pub fn value(&self, criterion: Criterion) -> f64 {
        match criterion {
            Criterion::Aic => self.aic,
            Criterion::Bic => self.bic,
        }
    }
}

/// AIC and BIC at `Θ̂`. `Q(Θ̂ | Θ̂)` comes from a fresh E-step at `Θ̂` with ten
/// times the fitting sample size; `dataset` must be the one `result` was fit on.
pub fn information_criteria(result: &EmResult, dataset: &MixedDataset, h_mode: HMode) -> Result<IcReport> {
    information_criteria_at(
        &result.theta,
        dataset,
        &result.settings,
        result.path_index,
        Some(&result.state),
        h_mode,
    )
}

/// [`information_criteria`] for an estimate known only by its matrix, e.g. one
/// read back from disk. `path_index` keys the random streams; `init` seeds chains.
pub fn information_criteria_at(
    theta: &PrecisionEstimate,
    dataset: &MixedDataset,
    settings: &EmSettings,
    path_index: usize,
    init: Option<&DMatrix<f64>>,
    h_mode: HMode,
) -> Result<IcReport> {
    let bounds = interval_bounds(dataset, settings.variant);
    if bounds.p() != theta.dim() {
        return Err(Error::InvalidArgument("dataset does not match the fitted model".into()));
    }
    let mc = McSettings {
        n_samples: settings.mc.n_samples * 10,
        ..settings.mc
    };
    let pass = IC_STREAM | path_index as u64;
    let r = e_step(&bounds, &theta.theta, settings.variant, &mc, pass, init)?.correlation(role(settings.variant))?;
    let n = bounds.n();
    let q = q_value(&theta.theta, r.matrix(), n);
    let h_term = match h_mode {
        HMode::Omit => None,
        HMode::MonteCarlo => {
            let log_py = observed_log_likelihood(&bounds, &theta.theta, mc.n_samples, mc.seed, pass)?;
            // H = Q − log L_Y, with the 2π constant dropped from both terms as in Q.
            let constant = 0.5 * (n * bounds.p()) as f64 * (2.0 * std::f64::consts::PI).ln();
            Some(2.0 * (q - (log_py + constant)))
        }
    };
    Ok(IcReport::from_terms(theta.lambda, n, theta.edge_count(), -2.0 * q, h_term))
}

/// Criteria for a one-step estimate fit to a fixed correlation matrix `r`
/// (the skeptic pipelines), with `Q = (n/2){log det Θ̂ − Tr(Θ̂ r)}` and no `H` term.
pub fn information_criteria_fixed(theta: &PrecisionEstimate, r: &CorrelationMatrix, n: usize) -> Result<IcReport> {
    if r.dim() != theta.dim() {
        return Err(Error::InvalidArgument("correlation matrix does not match the estimate".into()));
    }
    let q = q_value(&theta.theta, r.matrix(), n);
    if !q.is_finite() {
        return Err(Error::Em("estimate is not positive definite".into()));
    }
    Ok(IcReport::from_terms(theta.lambda, n, theta.edge_count(), -2.0 * q, None))
}

/// `Σ_i log P(Z_i ∈ D(Y_i) | Θ)`: pinned coordinates contribute their joint
/// normal density, the remaining finite rectangles a GHK estimate conditional
/// on them. Unbounded (missing) coordinates integrate out.
pub fn observed_log_likelihood(bounds: &IntervalBounds, theta: &DMatrix<f64>, draws: usize, seed: u64, pass: u64) -> Result<f64> {
    let sigma = linalg::inverse_spd(theta).ok_or_else(|| Error::Em("precision is not positive definite".into()))?;
    let (n, p) = (bounds.n(), bounds.p());
    let patterns: Vec<(Vec<usize>, Vec<usize>)> = (0..n)
        .map(|i| {
            let fixed = (0..p).filter(|&j| bounds.is_degenerate(i, j)).collect();
            let boxed = (0..p)
                .filter(|&j| !bounds.is_degenerate(i, j) && (bounds.lower[(i, j)].is_finite() || bounds.upper[(i, j)].is_finite()))
                .collect();
            (fixed, boxed)
        })
        .collect();
    let mut cache: HashMap<&(Vec<usize>, Vec<usize>), Conditional> = HashMap::new();
    for pat in &patterns {
        if !cache.contains_key(pat) {
            cache.insert(pat, Conditional::new(&sigma, &pat.0, &pat.1)?);
        }
    }
    let per_row: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (fixed, boxed) = &patterns[i];
            let cond = &cache[&patterns[i]];
            let z_f: Vec<f64> = fixed.iter().map(|&j| bounds.lower[(i, j)]).collect();
            let mut total = cond.log_density(&z_f);
            if !boxed.is_empty() {
                let mean = cond.mean(&z_f);
                let lower: Vec<f64> = boxed.iter().map(|&j| bounds.lower[(i, j)]).collect();
                let upper: Vec<f64> = boxed.iter().map(|&j| bounds.upper[(i, j)]).collect();
                let mut rng = tmvn::row_rng(seed, pass, i as u64);
                total += tmvn::ghk_log_probability(&mean, &cond.chol, &lower, &upper, draws, &mut rng);
            }
            total
        })
        .collect();
    let total: f64 = per_row.iter().sum();
    if !total.is_finite() {
        return Err(Error::Em("observed-data log likelihood is not finite".into()));
    }
    Ok(total)
}

/// Marginal of the pinned block and the conditional law of the boxed block.
struct Conditional {
    /// `Σ_FF⁻¹`.
    prec_f: DMatrix<f64>,
    log_det_f: f64,
    /// `Σ_BF Σ_FF⁻¹`.
    regress: DMatrix<f64>,
    /// Cholesky factor of `Σ_BB − Σ_BF Σ_FF⁻¹ Σ_FB`.
    chol: DMatrix<f64>,
}

impl Conditional {
    fn new(sigma: &DMatrix<f64>, fixed: &[usize], boxed: &[usize]) -> Result<Self> {
        let singular = || Error::Em("latent covariance block is singular".into());
        let s_ff = sigma.select_rows(fixed).select_columns(fixed);
        let s_bf = sigma.select_rows(boxed).select_columns(fixed);
        let s_bb = sigma.select_rows(boxed).select_columns(boxed);
        let (prec_f, log_det_f) = if fixed.is_empty() {
            (DMatrix::zeros(0, 0), 0.0)
        } else {
            (
                linalg::inverse_spd(&s_ff).ok_or_else(singular)?,
                linalg::log_det_spd(&s_ff).ok_or_else(singular)?,
            )
        };
        let regress = &s_bf * &prec_f;
        let mut cond = &s_bb - &regress * s_bf.transpose();
        linalg::symmetrize(&mut cond);
        let chol = if boxed.is_empty() {
            DMatrix::zeros(0, 0)
        } else {
            cond.cholesky().ok_or_else(singular)?.l()
        };
        Ok(Conditional {
            prec_f,
            log_det_f,
            regress,
            chol,
        })
    }

    fn log_density(&self, z: &[f64]) -> f64 {
        if z.is_empty() {
            return 0.0;
        }
        let v = nalgebra::DVector::from_column_slice(z);
        let quad = (v.transpose() * &self.prec_f * &v)[(0, 0)];
        -0.5 * (z.len() as f64 * (2.0 * std::f64::consts::PI).ln() + self.log_det_f + quad)
    }

    fn mean(&self, z: &[f64]) -> Vec<f64> {
        if z.is_empty() {
            return vec![0.0; self.chol.nrows()];
        }
        (&self.regress * nalgebra::DVector::from_column_slice(z)).iter().copied().collect()
    }
}

/// Index of the report minimizing `criterion`; ties go to the larger penalty.
pub fn select_model(reports: &[IcReport], criterion: Criterion) -> Result<usize> {
    if reports.is_empty() {
        return Err(Error::InvalidArgument("no models to select from".into()));
    }
    let mut best = 0;
    for (k, r) in reports.iter().enumerate().skip(1) {
        let (v, b) = (r.value(criterion), reports[best].value(criterion));
        let tie = (v - b).abs() <= 1e-12 * v.abs().max(b.abs()).max(1.0);
        if (tie && r.lambda > reports[best].lambda) || (!tie && v < b) {
            best = k;
        }
    }
    Ok(best)
}

/// IC table as tab-separated text.
pub fn write_ic_tsv<W: Write>(reports: &[IcReport], mut out: W) -> Result<()> {
    writeln!(out, "lambda\tn\td\tq_term\th_term\taic\tbic")?;
    for r in reports {
        let h = r.h_term.map(|h| h.to_string()).unwrap_or_else(|| "NA".into());
        writeln!(out, "{}\t{}\t{}\t{}\t{}\t{}\t{}", r.lambda, r.n, r.d, r.q_term, h, r.aic, r.bic)?;
    }
    Ok(())
}
