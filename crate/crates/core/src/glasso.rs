//! Graphical lasso: `argmax_Θ log det Θ − Tr(ΘS) − λ Σ_{i≠j} |θ_ij|`.
//!
//! Block coordinate descent over the columns of `W = Θ⁻¹`, each block being a
//! lasso problem solved by cyclic coordinate descent. The diagonal is left
//! unpenalized unless [`SolverSettings::penalize_diagonal`] is set.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Entries of a fitted precision matrix below this magnitude are set to zero.
pub const ZERO_THRESHOLD: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixRole {
    InputS,
    ExpectedRBar,
    ExpectedRTilde,
    TauDerived,
}

/// Symmetric input matrix for the solver, tagged by where it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMatrix {
    matrix: DMatrix<f64>,
    role: MatrixRole,
}

impl CorrelationMatrix {
    pub fn new(matrix: DMatrix<f64>, role: MatrixRole) -> Result<Self> {
        if !linalg::is_symmetric(&matrix, 1e-12) {
            return Err(Error::InvalidArgument("correlation matrix is not symmetric".into()));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("correlation matrix has non-finite entries".into()));
        }
        Ok(CorrelationMatrix { matrix, role })
    }

    pub fn input(matrix: DMatrix<f64>) -> Result<Self> {
        Self::new(matrix, MatrixRole::InputS)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn role(&self) -> MatrixRole {
        self.role
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn max_abs_off_diagonal(&self) -> f64 {
        linalg::max_abs_off_diagonal(&self.matrix)
    }
}

/// A sparse, symmetric positive definite precision matrix and its graph.
#[derive(Clone, Debug, PartialEq)]
pub struct PrecisionEstimate {
    pub theta: DMatrix<f64>,
    pub lambda: f64,
    /// Unordered pairs `(i, j)`, `i < j`, with `θ_ij ≠ 0`.
    pub edges: Vec<(usize, usize)>,
    /// `−θ_ij / √(θ_ii θ_jj)`, aligned with `edges`.
    pub partial_corr: Vec<f64>,
}

impl PrecisionEstimate {
    /// Hard-zeroes float dust, symmetrizes, and extracts the edge set.
    pub fn from_theta(mut theta: DMatrix<f64>, lambda: f64) -> Self {
        linalg::symmetrize(&mut theta);
        let p = theta.nrows();
        let mut edges = Vec::new();
        let mut partial_corr = Vec::new();
        for i in 0..p {
            for j in (i + 1)..p {
                if theta[(i, j)].abs() < ZERO_THRESHOLD {
                    theta[(i, j)] = 0.0;
                    theta[(j, i)] = 0.0;
                } else {
                    edges.push((i, j));
                    partial_corr.push(-theta[(i, j)] / (theta[(i, i)] * theta[(j, j)]).sqrt());
                }
            }
        }
        PrecisionEstimate {
            theta,
            lambda,
            edges,
            partial_corr,
        }
    }

    pub fn dim(&self) -> usize {
        self.theta.nrows()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_diagonal(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn partial_correlation(&self, i: usize, j: usize) -> f64 {
        -self.theta[(i, j)] / (self.theta[(i, i)] * self.theta[(j, j)]).sqrt()
    }

    /// Dense CSV of θ, no header.
    pub fn write_theta_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for i in 0..self.dim() {
            w.write_record(self.theta.row(i).iter().map(|v| format!("{v:.12e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a matrix written by [`Self::write_theta_csv`].
    pub fn read_theta_csv<R: std::io::Read>(input: R, lambda: f64) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for record in r.records() {
            let record = record?;
            let row = record
                .iter()
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Solver(format!("non-numeric precision entry `{c}`")))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        let p = rows.len();
        if p == 0 || rows.iter().any(|r| r.len() != p) {
            return Err(Error::Solver("precision CSV is not a square matrix".into()));
        }
        let theta = DMatrix::from_fn(p, p, |i, j| rows[i][j]);
        Ok(Self::from_theta(theta, lambda))
    }

    /// Edge list TSV: `i  j  theta_ij  partial_corr` with a header row.
    pub fn write_edges_tsv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "i\tj\ttheta_ij\tpartial_corr")?;
        for (&(i, j), pc) in self.edges.iter().zip(&self.partial_corr) {
            writeln!(out, "{i}\t{j}\t{:.12e}\t{:.12e}", self.theta[(i, j)], pc)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_sweeps: usize,
    pub penalize_diagonal: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: 1e-4,
            max_sweeps: 200,
            penalize_diagonal: false,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_sweeps == 0 {
            return Err(Error::InvalidArgument(format!(
                "solver settings need tol > 0 and max_sweeps >= 1 (got {}, {})",
                self.tol, self.max_sweeps
            )));
        }
        Ok(())
    }
}

/// `log det Θ − Tr(ΘS) − λ‖Θ‖₁`, with the diagonal in the norm only when penalized.
/// Returns `-∞` for a matrix that is not positive definite.
pub fn penalized_objective(theta: &DMatrix<f64>, s: &DMatrix<f64>, lambda: f64, penalize_diagonal: bool) -> f64 {
    let Some(log_det) = linalg::log_det_spd(theta) else {
        return f64::NEG_INFINITY;
    };
    log_det - linalg::trace_product(theta, s) - lambda * l1_norm(theta, penalize_diagonal)
}

pub fn l1_norm(theta: &DMatrix<f64>, include_diagonal: bool) -> f64 {
    let p = theta.nrows();
    let mut total = 0.0;
    for i in 0..p {
        for j in 0..p {
            if i != j || include_diagonal {
                total += theta[(i, j)].abs();
            }
        }
    }
    total
}

fn soft_threshold(x: f64, lambda: f64) -> f64 {
    if x > lambda {
        x - lambda
    } else if x < -lambda {
        x + lambda
    } else {
        0.0
    }
}

fn check_input(s: &DMatrix<f64>, lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Solver(format!("penalty must be a finite nonnegative number, got {lambda}")));
    }
    let p = s.nrows();
    if p == 0 {
        return Err(Error::Solver("empty input matrix".into()));
    }
    if (0..p).any(|i| !(s[(i, i)] > 0.0)) {
        return Err(Error::Solver("input matrix needs a positive diagonal".into()));
    }
    let scale = (0..p).map(|i| s[(i, i)]).fold(0.0, f64::max);
    if p > 1 && linalg::min_eigenvalue(s) < -1e-8 * scale {
        return Err(Error::Solver("input matrix is not positive semidefinite".into()));
    }
    Ok(())
}

/// Fits one penalty value. `warm` seeds both `W` and the regression blocks.
pub fn glasso_fit(
    s: &CorrelationMatrix,
    lambda: f64,
    warm: Option<&PrecisionEstimate>,
    settings: &SolverSettings,
) -> Result<PrecisionEstimate> {
    settings.validate()?;
    let s = s.matrix();
    check_input(s, lambda)?;
    let p = s.nrows();
    let diag_pen = if settings.penalize_diagonal { lambda } else { 0.0 };

    if p == 1 {
        let theta = DMatrix::from_element(1, 1, 1.0 / (s[(0, 0)] + diag_pen));
        return Ok(PrecisionEstimate::from_theta(theta, lambda));
    }
    if lambda == 0.0 {
        let theta = linalg::inverse_spd(s).ok_or_else(|| Error::Solver("λ = 0 requires a strictly positive definite input".into()))?;
        return Ok(PrecisionEstimate::from_theta(theta, lambda));
    }

    let mut solver = BlockSolver::new(s, lambda, diag_pen, warm);
    let mut target = settings.tol;
    let mut sweeps = 0;
    let mut last_change = f64::INFINITY;
    loop {
        while sweeps < settings.max_sweeps {
            last_change = solver.sweep(target * 1e-3);
            sweeps += 1;
            if last_change < target {
                break;
            }
        }
        let estimate = solver.estimate();
        let residual = kkt_residual_with(&estimate, s, lambda, settings.penalize_diagonal).unwrap_or(f64::INFINITY);
        log::trace!("glasso λ={lambda:.4} sweeps={sweeps} change={last_change:.2e} kkt={residual:.2e}");
        if residual <= settings.tol && last_change < target {
            return Ok(estimate);
        }
        if sweeps >= settings.max_sweeps {
            return Err(Error::NotConverged {
                sweeps,
                change: last_change,
            });
        }
        target *= 0.1;
    }
}

struct BlockSolver<'a> {
    s: &'a DMatrix<f64>,
    lambda: f64,
    w: DMatrix<f64>,
    /// Column `j` holds the regression coefficients of block `j`; diagonal unused.
    beta: DMatrix<f64>,
}

impl<'a> BlockSolver<'a> {
    fn new(s: &'a DMatrix<f64>, lambda: f64, diag_pen: f64, warm: Option<&PrecisionEstimate>) -> Self {
        let p = s.nrows();
        let mut beta = DMatrix::zeros(p, p);
        let mut w = s.clone();
        if let Some(warm) = warm.filter(|w| w.dim() == p) {
            if let Some(inv) = linalg::inverse_spd(&warm.theta) {
                w = inv;
                for j in 0..p {
                    let tjj = warm.theta[(j, j)];
                    for k in 0..p {
                        if k != j {
                            beta[(k, j)] = -warm.theta[(k, j)] / tjj;
                        }
                    }
                }
            }
        }
        for i in 0..p {
            w[(i, i)] = s[(i, i)] + diag_pen;
        }
        BlockSolver { s, lambda, w, beta }
    }

    /// One pass over all columns; returns the mean absolute change of `W`.
    #[allow(clippy::needless_range_loop)] // v and the W/β columns share the index
    fn sweep(&mut self, inner_tol: f64) -> f64 {
        let p = self.s.nrows();
        let mut total_change = 0.0;
        let mut v = vec![0.0; p];
        for j in 0..p {
            // v = W11 β for the current column
            v.fill(0.0);
            for l in 0..p {
                let b = self.beta[(l, j)];
                if l != j && b != 0.0 {
                    for k in 0..p {
                        v[k] += self.w[(k, l)] * b;
                    }
                }
            }
            for _ in 0..10_000 {
                let mut max_delta = 0.0_f64;
                for k in 0..p {
                    if k == j {
                        continue;
                    }
                    let wkk = self.w[(k, k)];
                    let old = self.beta[(k, j)];
                    let r = self.s[(k, j)] - (v[k] - wkk * old);
                    let new = soft_threshold(r, self.lambda) / wkk;
                    let delta = new - old;
                    if delta != 0.0 {
                        self.beta[(k, j)] = new;
                        for m in 0..p {
                            v[m] += delta * self.w[(m, k)];
                        }
                        max_delta = max_delta.max(delta.abs() * wkk);
                    }
                }
                if max_delta < inner_tol {
                    break;
                }
            }
            for k in 0..p {
                if k != j {
                    total_change += (self.w[(k, j)] - v[k]).abs();
                    self.w[(k, j)] = v[k];
                    self.w[(j, k)] = v[k];
                }
            }
        }
        total_change / (p * (p - 1)) as f64
    }

    fn estimate(&self) -> PrecisionEstimate {
        let p = self.s.nrows();
        let mut theta = DMatrix::zeros(p, p);
        for j in 0..p {
            let mut dot = 0.0;
            for k in 0..p {
                if k != j {
                    dot += self.w[(k, j)] * self.beta[(k, j)];
                }
            }
            let tjj = 1.0 / (self.w[(j, j)] - dot);
            theta[(j, j)] = tjj;
            for k in 0..p {
                if k != j {
                    theta[(k, j)] = -self.beta[(k, j)] * tjj;
                }
            }
        }
        PrecisionEstimate::from_theta(theta, self.lambda)
    }
}

/// Warm-started fits along a strictly decreasing penalty grid.
pub fn glasso_path(s: &CorrelationMatrix, lambdas: &[f64], settings: &SolverSettings) -> Result<Vec<PrecisionEstimate>> {
    check_decreasing(lambdas)?;
    let mut path: Vec<PrecisionEstimate> = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let fit = glasso_fit(s, lambda, path.last(), settings)?;
        path.push(fit);
    }
    Ok(path)
}

pub(crate) fn check_decreasing(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(Error::InvalidArgument("empty penalty grid".into()));
    }
    if lambdas.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::InvalidArgument("penalty grid must be strictly decreasing".into()));
    }
    Ok(())
}

/// Optimality certificate with the default (off-diagonal) penalty.
pub fn kkt_residual(theta: &PrecisionEstimate, s: &DMatrix<f64>, lambda: f64) -> Result<f64> {
    kkt_residual_with(theta, s, lambda, false)
}

/// Max violation of the stationarity conditions `W − S − λ·∂|Θ| ∋ 0`, `W = Θ⁻¹`.
pub fn kkt_residual_with(theta: &PrecisionEstimate, s: &DMatrix<f64>, lambda: f64, penalize_diagonal: bool) -> Result<f64> {
    let w = linalg::inverse_spd(&theta.theta).ok_or_else(|| Error::Solver("precision matrix is singular".into()))?;
    let p = w.nrows();
    let mut worst = 0.0_f64;
    for i in 0..p {
        for j in 0..p {
            let g = w[(i, j)] - s[(i, j)];
            let t = theta.theta[(i, j)];
            let r = if i == j && !penalize_diagonal {
                g.abs()
            } else if t != 0.0 {
                (g - lambda * t.signum()).abs()
            } else {
                (g.abs() - lambda).max(0.0)
            };
            worst = worst.max(r);
        }
    }
    Ok(worst)
}
