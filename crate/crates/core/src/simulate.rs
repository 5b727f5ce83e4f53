//! Structure-recovery benchmark: sparse ground-truth precision matrices,
//! mixed-type data drawn through a Gaussian copula, cellwise outliers, and
//! ROC curves of estimated supports along a penalty grid.

use std::io::Write;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{DiscreteCDF, Poisson};

use crate::copulaem::{self, EmSettings};
use crate::copulatau::{self, PairFitSettings, TauMode};
use crate::dataio::{self, ColumnSpec, MixedDataset, VariableKind};
use crate::error::{Error, Result};
use crate::glasso::{self, CorrelationMatrix, MatrixRole, PrecisionEstimate, SolverSettings};
use crate::linalg;
use crate::normal;
use crate::tmvn::mix_seed;

/// Mean of the count block's Poisson margin.
pub const COUNT_MEAN: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GraphModel {
    ErdosRenyi { edge_prob: f64 },
    Banded { bandwidth: usize },
}

/// How a contaminated cell is replaced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutlierSign {
    /// Always replaced; `+5` with probability 0.6, else `−5`.
    Biased,
    /// Replaced with probability 0.6 by `±5` with equal odds, else left alone.
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockCounts {
    pub binary: usize,
    pub ordinal: usize,
    pub count: usize,
    pub chisquare: usize,
    pub normal: usize,
}

impl BlockCounts {
    /// A tenth of the columns in each non-normal block, the rest normal.
    pub fn proportional(p: usize) -> Self {
        let k = (p as f64 * 0.1).round() as usize;
        let k = k.min(p / 4);
        BlockCounts {
            binary: k,
            ordinal: k,
            count: k,
            chisquare: k,
            normal: p - 4 * k,
        }
    }

    pub fn total(&self) -> usize {
        self.binary + self.ordinal + self.count + self.chisquare + self.normal
    }

    /// Column kinds in block order, with the chi-square block reported as continuous.
    fn layout(&self) -> Vec<Margin> {
        let mut out = Vec::with_capacity(self.total());
        out.extend(std::iter::repeat_n(Margin::Binary, self.binary));
        out.extend(std::iter::repeat_n(Margin::Ordinal, self.ordinal));
        out.extend(std::iter::repeat_n(Margin::Count, self.count));
        out.extend(std::iter::repeat_n(Margin::ChiSquare, self.chisquare));
        out.extend(std::iter::repeat_n(Margin::Normal, self.normal));
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Margin {
    Binary,
    Ordinal,
    Count,
    ChiSquare,
    Normal,
}

impl Margin {
    fn kind(self) -> VariableKind {
        match self {
            Margin::Binary => VariableKind::Binary,
            Margin::Ordinal => VariableKind::Ordinal,
            Margin::Count => VariableKind::Count,
            Margin::ChiSquare | Margin::Normal => VariableKind::Continuous,
        }
    }

    fn prefix(self) -> &'static str {
        match self {
            Margin::Binary => "bin",
            Margin::Ordinal => "ord",
            Margin::Count => "cnt",
            Margin::ChiSquare => "chi",
            Margin::Normal => "nrm",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimDesign {
    pub n: usize,
    pub p: usize,
    pub blocks: BlockCounts,
    pub ordinal_levels: usize,
    pub outlier_rate: f64,
    pub outlier_sign: OutlierSign,
    /// Contaminate only the normal block.
    pub outliers_normal_only: bool,
    pub graph: GraphModel,
    pub seed: u64,
}

impl Default for SimDesign {
    fn default() -> Self {
        SimDesign::new(200, 50)
    }
}

impl SimDesign {
    pub fn new(n: usize, p: usize) -> Self {
        SimDesign {
            n,
            p,
            blocks: BlockCounts::proportional(p),
            ordinal_levels: 4,
            outlier_rate: 0.0,
            outlier_sign: OutlierSign::Biased,
            outliers_normal_only: false,
            graph: GraphModel::ErdosRenyi { edge_prob: 0.1 },
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks.total() != self.p {
            return Err(Error::Simulation(format!(
                "block counts sum to {}, expected p = {}",
                self.blocks.total(),
                self.p
            )));
        }
        if self.n < 2 || self.p == 0 {
            return Err(Error::Simulation(format!(
                "need n ≥ 2 and p ≥ 1, got n = {}, p = {}",
                self.n, self.p
            )));
        }
        if self.ordinal_levels < 2 {
            return Err(Error::Simulation("ordinal columns need at least 2 levels".into()));
        }
        if !(0.0..=1.0).contains(&self.outlier_rate) {
            return Err(Error::Simulation(format!("outlier rate {} outside [0, 1]", self.outlier_rate)));
        }
        check_graph(&self.graph)
    }

    fn columns(&self) -> Vec<ColumnSpec> {
        let layout = self.blocks.layout();
        let mut seen = [0usize; 5];
        layout
            .iter()
            .map(|&m| {
                let slot = &mut seen[m as usize];
                *slot += 1;
                ColumnSpec {
                    name: format!("{}{}", m.prefix(), slot),
                    kind: m.kind(),
                }
            })
            .collect()
    }
}

fn check_graph(graph: &GraphModel) -> Result<()> {
    match *graph {
        GraphModel::ErdosRenyi { edge_prob } if !(0.0..=1.0).contains(&edge_prob) => {
            Err(Error::Simulation(format!("edge probability {edge_prob} outside [0, 1]")))
        }
        _ => Ok(()),
    }
}

/// Sparse truth: support from `graph`, off-diagonal magnitudes uniform on
/// `[0.2, 0.5]` with random sign, diagonal `Σ_k |θ_jk| + 0.1`, then rescaled so
/// that `Θ⁻¹` has unit diagonal.
pub fn random_sparse_precision(p: usize, graph: &GraphModel, seed: u64) -> Result<PrecisionEstimate> {
    check_graph(graph)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in (i + 1)..p {
            let on = match *graph {
                GraphModel::ErdosRenyi { edge_prob } => rng.random::<f64>() < edge_prob,
                GraphModel::Banded { bandwidth } => j - i <= bandwidth,
            };
            if on {
                let magnitude = rng.random_range(0.2..=0.5);
                let value = if rng.random::<bool>() { magnitude } else { -magnitude };
                theta[(i, j)] = value;
                theta[(j, i)] = value;
            }
        }
    }
    for i in 0..p {
        theta[(i, i)] = theta.row(i).iter().map(|v: &f64| v.abs()).sum::<f64>() + 0.1;
    }
    let sigma = linalg::inverse_spd(&theta).ok_or_else(|| Error::Simulation("generated precision is singular".into()))?;
    let scale: Vec<f64> = (0..p).map(|i| sigma[(i, i)].sqrt()).collect();
    let rescaled = DMatrix::from_fn(p, p, |i, j| theta[(i, j)] * scale[i] * scale[j]);
    Ok(PrecisionEstimate::from_theta(rescaled, 0.0))
}

/// Latent `Z ~ N(0, Θ⁻¹)` pushed through the block margins. Returns the data and `Z`.
pub fn generate_mixed_data(truth: &PrecisionEstimate, design: &SimDesign) -> Result<(MixedDataset, DMatrix<f64>)> {
    design.validate()?;
    if truth.dim() != design.p {
        return Err(Error::Simulation(format!(
            "truth is {0}x{0}, design has p = {1}",
            truth.dim(),
            design.p
        )));
    }
    let sigma = linalg::inverse_spd(&truth.theta).ok_or_else(|| Error::Simulation("truth is not positive definite".into()))?;
    let chol = linalg::to_correlation(&sigma)
        .cholesky()
        .ok_or_else(|| Error::Simulation("truth covariance is not positive definite".into()))?
        .l();
    let (n, p) = (design.n, design.p);
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(design.seed, 1, 0));
    let white = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let latent = white * chol.transpose();

    let poisson = Poisson::new(COUNT_MEAN).expect("positive mean");
    let cuts: Vec<f64> = (1..design.ordinal_levels)
        .map(|k| normal::quantile(k as f64 / design.ordinal_levels as f64))
        .collect();
    let layout = design.blocks.layout();
    let values = DMatrix::from_fn(n, p, |i, j| {
        let z = latent[(i, j)];
        match layout[j] {
            Margin::Normal => z,
            Margin::Binary => (z > 0.0) as u8 as f64,
            Margin::Ordinal => cuts.iter().filter(|&&c| z > c).count() as f64,
            Margin::ChiSquare => chi_square_1_from_latent(z),
            Margin::Count => poisson.inverse_cdf(normal::cdf(z)) as f64,
        }
    });
    Ok((MixedDataset::complete(values, design.columns())?, latent))
}

/// `F⁻¹_{χ²₁}(Φ(z))`, via `F⁻¹_{χ²₁}(u) = Φ⁻¹((1 + u)/2)²`, computed on the
/// tail side to keep precision for large `|z|`.
fn chi_square_1_from_latent(z: f64) -> f64 {
    let u = normal::cdf(z);
    let q = if u > 0.5 {
        -normal::quantile(0.5 * normal::sf(z))
    } else {
        normal::quantile(0.5 * (1.0 + u))
    };
    q * q
}

/// Cellwise contamination: each cell is hit with probability `rate`. Binary
/// columns that end up with more than two levels are re-typed as ordinal.
pub fn inject_outliers(dataset: &MixedDataset, rate: f64, sign: OutlierSign, normal_only: bool, seed: u64) -> Result<MixedDataset> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::Simulation(format!("outlier rate {rate} outside [0, 1]")));
    }
    let (n, p) = (dataset.n(), dataset.p());
    let mut values = dataset.values().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 2, 0));
    let eligible: Vec<bool> = dataset
        .columns()
        .iter()
        .map(|c| !normal_only || (c.kind == VariableKind::Continuous && c.name.starts_with(Margin::Normal.prefix())))
        .collect();
    for i in 0..n {
        for j in 0..p {
            // Draw for every cell so the stream layout does not depend on eligibility.
            let hit = rng.random::<f64>() < rate;
            let u = rng.random::<f64>();
            let v = rng.random::<f64>();
            if !hit || !eligible[j] || dataset.is_missing(i, j) {
                continue;
            }
            match sign {
                OutlierSign::Biased => values[(i, j)] = if u < 0.6 { 5.0 } else { -5.0 },
                OutlierSign::Uniform => {
                    if u < 0.6 {
                        values[(i, j)] = if v < 0.5 { 5.0 } else { -5.0 };
                    }
                }
            }
        }
    }
    let mut columns = dataset.columns().to_vec();
    for (j, col) in columns.iter_mut().enumerate() {
        if col.kind == VariableKind::Binary {
            let mut levels: Vec<f64> = (0..n).filter(|&i| !dataset.is_missing(i, j)).map(|i| values[(i, j)]).collect();
            levels.sort_by(f64::total_cmp);
            levels.dedup();
            if levels.len() > 2 {
                col.kind = VariableKind::Ordinal;
            }
        }
    }
    MixedDataset::new(values, dataset.missing_mask().to_vec(), columns)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub lambda_index: usize,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// Sorted by FPR, then TPR.
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

impl RocCurve {
    pub fn from_points(mut points: Vec<RocPoint>) -> Self {
        points.sort_by(|a, b| a.fpr.total_cmp(&b.fpr).then(a.tpr.total_cmp(&b.tpr)));
        let mut auc = 0.0;
        let mut prev = (0.0, 0.0);
        for pt in points.iter().map(|q| (q.fpr, q.tpr)).chain(std::iter::once((1.0, 1.0))) {
            auc += (pt.0 - prev.0) * (pt.1 + prev.1) * 0.5;
            prev = pt;
        }
        RocCurve { points, auc }
    }
}

fn support(estimate: &PrecisionEstimate) -> Vec<bool> {
    let p = estimate.dim();
    let mut on = vec![false; p * p];
    for &(i, j) in &estimate.edges {
        on[i * p + j] = true;
    }
    on
}

/// `(FPR, TPR)` of each estimate's off-diagonal support against the truth's.
pub fn roc_curve(truth: &PrecisionEstimate, path: &[PrecisionEstimate]) -> Result<RocCurve> {
    let p = truth.dim();
    let positives = truth.edge_count();
    if positives == 0 {
        return Err(Error::Simulation("truth has no edges; TPR is undefined".into()));
    }
    let negatives = p * (p - 1) / 2 - positives;
    let truth_on = support(truth);
    let mut points = Vec::with_capacity(path.len());
    for (k, est) in path.iter().enumerate() {
        if est.dim() != p {
            return Err(Error::Simulation(format!("estimate {k} is {0}x{0}, truth is {p}x{p}", est.dim())));
        }
        let tp = est.edges.iter().filter(|&&(i, j)| truth_on[i * p + j]).count();
        let fp = est.edge_count() - tp;
        points.push(RocPoint {
            lambda_index: k,
            fpr: if negatives == 0 { 0.0 } else { fp as f64 / negatives as f64 },
            tpr: tp as f64 / positives as f64,
        });
    }
    Ok(RocCurve::from_points(points))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    CopulaEm,
    CopulaTau,
    NpnTau,
    NpnScore,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::CopulaEm, Method::CopulaTau, Method::NpnTau, Method::NpnScore];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::CopulaEm => "copula_em",
            Method::CopulaTau => "copula_tau",
            Method::NpnTau => "npn_tau",
            Method::NpnScore => "npn_score",
        }
    }
}

/// Penalty grid for each fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaGrid {
    Fixed(Vec<f64>),
    /// `count` log-spaced points from the largest off-diagonal entry of the
    /// method's input matrix down to `ratio` times it.
    Auto {
        count: usize,
        ratio: f64,
    },
}

impl Default for LambdaGrid {
    fn default() -> Self {
        LambdaGrid::Auto { count: 10, ratio: 0.1 }
    }
}

impl LambdaGrid {
    fn resolve(&self, top: f64) -> Result<Vec<f64>> {
        match self {
            LambdaGrid::Fixed(l) => {
                glasso::check_decreasing(l)?;
                Ok(l.clone())
            }
            LambdaGrid::Auto { count, ratio } => {
                if *count == 0 || !(*ratio > 0.0 && *ratio < 1.0) {
                    return Err(Error::InvalidArgument(format!("bad automatic grid (count {count}, ratio {ratio})")));
                }
                if !(top > 0.0) {
                    return Err(Error::Simulation("input matrix has no off-diagonal signal".into()));
                }
                Ok(linalg::log_spaced_desc(top, top * ratio, *count))
            }
        }
    }

    fn len(&self) -> usize {
        match self {
            LambdaGrid::Fixed(l) => l.len(),
            LambdaGrid::Auto { count, .. } => *count,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSettings {
    pub methods: Vec<Method>,
    pub reps: usize,
    pub grid: LambdaGrid,
    pub em: EmSettings,
    pub pair: PairFitSettings,
    pub solver: SolverSettings,
}

impl Default for ComparisonSettings {
    fn default() -> Self {
        ComparisonSettings {
            methods: Method::ALL.to_vec(),
            reps: 20,
            grid: LambdaGrid::default(),
            em: EmSettings::default(),
            pair: PairFitSettings::default(),
            solver: SolverSettings::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    /// Pointwise mean over repetitions, per grid index.
    pub curve: RocCurve,
    /// Mean of the per-repetition AUCs.
    pub mean_rep_auc: f64,
    /// Mean wall time per repetition, in seconds.
    pub seconds_per_rep: f64,
}

/// Truncation level `1/(4 n^{1/4} √(π log n))` for nonparanormal scores.
pub fn npn_truncation(n: usize) -> f64 {
    let n = n as f64;
    1.0 / (4.0 * n.powf(0.25) * (std::f64::consts::PI * n.ln()).sqrt())
}

/// Pearson correlation of Winsorized normal scores `Φ⁻¹(clamp(F̂, δ, 1 − δ))`,
/// over pairwise-complete rows, projected to the PSD cone when needed.
pub fn npn_score_correlation(dataset: &MixedDataset) -> Result<CorrelationMatrix> {
    let (n, p) = (dataset.n(), dataset.p());
    let delta = npn_truncation(n);
    let scores: Vec<Vec<Option<f64>>> = (0..p)
        .map(|j| {
            let ecdf = dataio::rescaled_ecdf(&dataset.observed(j))?;
            Ok(dataset
                .column(j)
                .iter()
                .map(|y| y.map(|y| normal::quantile(ecdf.eval(y).clamp(delta, 1.0 - delta))))
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut r = DMatrix::identity(p, p);
    for a in 0..p {
        for b in (a + 1)..p {
            let pairs: Vec<(f64, f64)> = scores[a].iter().zip(&scores[b]).filter_map(|(x, y)| Some(((*x)?, (*y)?))).collect();
            let value = pearson(&pairs);
            r[(a, b)] = value;
            r[(b, a)] = value;
        }
    }
    if p > 1 && linalg::min_eigenvalue(&r) < 0.0 {
        return copulatau::nearest_psd(&r);
    }
    CorrelationMatrix::new(r, MatrixRole::InputS)
}

fn pearson(pairs: &[(f64, f64)]) -> f64 {
    let m = pairs.len() as f64;
    if m < 2.0 {
        return 0.0;
    }
    let (mx, my) = pairs.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0 / m, acc.1 + p.1 / m));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Estimated path of one method on one dataset.
pub fn fit_method_path(method: Method, dataset: &MixedDataset, settings: &ComparisonSettings, seed: u64) -> Result<Vec<PrecisionEstimate>> {
    let skeptic = |mode: TauMode| -> Result<Vec<PrecisionEstimate>> {
        let (gamma, _) = copulatau::skeptic_correlation(dataset, mode, &settings.pair)?;
        let grid = settings.grid.resolve(gamma.max_abs_off_diagonal())?;
        glasso::glasso_path(&gamma, &grid, &settings.solver)
    };
    match method {
        Method::CopulaTau => skeptic(TauMode::Copula),
        Method::NpnTau => skeptic(TauMode::Sample),
        Method::NpnScore => {
            let s = npn_score_correlation(dataset)?;
            let grid = settings.grid.resolve(s.max_abs_off_diagonal())?;
            glasso::glasso_path(&s, &grid, &settings.solver)
        }
        Method::CopulaEm => {
            let mut em = settings.em;
            em.mc.seed = seed;
            let grid = match &settings.grid {
                LambdaGrid::Auto { count, ratio } => {
                    let top = copulaem::default_lambda_grid(dataset, &em, 1)?[0];
                    LambdaGrid::Auto {
                        count: *count,
                        ratio: *ratio,
                    }
                    .resolve(top)?
                }
                fixed => fixed.resolve(0.0)?,
            };
            Ok(copulaem::em_path(dataset, &grid, &em)?.into_iter().map(|r| r.theta).collect())
        }
    }
}

/// One repetition: truth, data, contamination. Seeds derive from `(design.seed, rep)`.
pub fn replicate(design: &SimDesign, rep: usize) -> Result<(PrecisionEstimate, MixedDataset)> {
    let rep_seed = mix_seed(design.seed, 0x5151, rep as u64);
    let truth = random_sparse_precision(design.p, &design.graph, mix_seed(rep_seed, 0, 0))?;
    let data_design = SimDesign {
        seed: mix_seed(rep_seed, 1, 0),
        ..design.clone()
    };
    let (mut data, _) = generate_mixed_data(&truth, &data_design)?;
    if design.outlier_rate > 0.0 {
        data = inject_outliers(
            &data,
            design.outlier_rate,
            design.outlier_sign,
            design.outliers_normal_only,
            mix_seed(rep_seed, 2, 0),
        )?;
    }
    Ok((truth, data))
}

/// Mean ROC per method over independent repetitions.
pub fn run_comparison(design: &SimDesign, settings: &ComparisonSettings) -> Result<Vec<MethodSummary>> {
    design.validate()?;
    if settings.reps == 0 {
        return Err(Error::InvalidArgument("reps must be at least 1".into()));
    }
    if settings.methods.is_empty() {
        return Err(Error::InvalidArgument("no methods requested".into()));
    }
    let per_rep: Vec<Vec<(RocCurve, f64)>> = (0..settings.reps)
        .into_par_iter()
        .map(|rep| {
            let (truth, data) = replicate(design, rep)?;
            settings
                .methods
                .iter()
                .map(|&m| {
                    let started = std::time::Instant::now();
                    let path = fit_method_path(m, &data, settings, mix_seed(design.seed, 0xe3, rep as u64))?;
                    let curve = roc_curve(&truth, &path)?;
                    Ok((curve, started.elapsed().as_secs_f64()))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let reps = settings.reps as f64;
    let grid_len = settings.grid.len();
    Ok(settings
        .methods
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let mut fpr = vec![0.0; grid_len];
            let mut tpr = vec![0.0; grid_len];
            let mut auc = 0.0;
            let mut seconds = 0.0;
            for rep in &per_rep {
                let (curve, secs) = &rep[k];
                for pt in &curve.points {
                    fpr[pt.lambda_index] += pt.fpr / reps;
                    tpr[pt.lambda_index] += pt.tpr / reps;
                }
                auc += curve.auc / reps;
                seconds += secs / reps;
            }
            let points = (0..grid_len)
                .map(|i| RocPoint {
                    lambda_index: i,
                    fpr: fpr[i],
                    tpr: tpr[i],
                })
                .collect();
            MethodSummary {
                method,
                curve: RocCurve::from_points(points),
                mean_rep_auc: auc,
                seconds_per_rep: seconds,
            }
        })
        .collect())
}

/// Mean ROC table: `method, lambda_index, fpr, tpr`.
pub fn write_roc_tsv<W: Write>(summaries: &[MethodSummary], mut out: W) -> Result<()> {
    writeln!(out, "method\tlambda_index\tfpr\ttpr")?;
    for s in summaries {
        let mut points = s.curve.points.clone();
        points.sort_by_key(|p| p.lambda_index);
        for pt in points {
            writeln!(out, "{}\t{}\t{}\t{}", s.method.as_str(), pt.lambda_index, pt.fpr, pt.tpr)?;
        }
    }
    Ok(())
}

/// AUC summary: `method, auc, mean_rep_auc`. Timings are left out so the table is reproducible.
pub fn write_auc_tsv<W: Write>(summaries: &[MethodSummary], mut out: W) -> Result<()> {
    writeln!(out, "method\tauc\tmean_rep_auc")?;
    for s in summaries {
        writeln!(out, "{}\t{}\t{}", s.method.as_str(), s.curve.auc, s.mean_rep_auc)?;
    }
    Ok(())
}

/// Truth edge list: `i, j, theta_ij`.
pub fn write_truth_tsv<W: Write>(truth: &PrecisionEstimate, mut out: W) -> Result<()> {
    writeln!(out, "i\tj\ttheta_ij")?;
    for &(i, j) in &truth.edges {
        writeln!(out, "{i}\t{j}\t{}", truth.theta[(i, j)])?;
    }
    Ok(())
}
