//! Resolved run configuration: config file first, command-line flags on top.

use std::path::PathBuf;

use mixgraph::copulaem::{Criterion, EmSettings, HMode};
use mixgraph::copulatau::{FamilyKind, PairFitSettings, TauMode};
use mixgraph::simulate::{GraphModel, Method, OutlierSign, SimDesign};
use mixgraph::BoundsMode;
use serde::{Deserialize, Serialize};

use crate::args::{Cli, Command, CommonArgs, DesignArgs, EmArgs, GridArgs, InputArgs, SkepticArgs};
use crate::UsageError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    EdgesTsv,
    ThetaCsv,
    Dot,
    RocTsv,
    IcTsv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub command: String,
    pub data: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub lambda: Option<f64>,
    /// `autoN` or a comma-separated decreasing list.
    pub lambda_grid: Option<String>,
    pub mode: TauMode,
    pub em: EmSettings,
    pub pair: PairFitSettings,
    pub h_mode: HMode,
    pub criterion: Criterion,
    pub seed: u64,
    pub out: PathBuf,
    pub formats: Vec<Format>,
    /// Cold-started, parallel EM fits along the grid instead of a warm path.
    pub independent: bool,
    pub dump_moments: bool,
    /// Directory of a previous grid run, for `select`.
    pub run: Option<PathBuf>,
    pub design: SimDesign,
    pub methods: Vec<Method>,
    pub reps: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: String::new(),
            data: None,
            schema: None,
            lambda: None,
            lambda_grid: None,
            mode: TauMode::Copula,
            em: EmSettings::default(),
            pair: PairFitSettings::default(),
            h_mode: HMode::Omit,
            criterion: Criterion::Bic,
            seed: 0,
            out: PathBuf::from("mixgraph_out"),
            formats: vec![Format::EdgesTsv, Format::ThetaCsv],
            independent: false,
            dump_moments: false,
            run: None,
            design: SimDesign::new(200, 50),
            methods: Method::ALL.to_vec(),
            reps: 20,
        }
    }
}

/// Reads a config file: either a bare config or a run manifest holding one under `config`.
pub fn load_config_file(path: &std::path::Path) -> Result<RunConfig, UsageError> {
    let text = std::fs::read_to_string(path).map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| UsageError(format!("config {} is not valid JSON: {e}", path.display())))?;
    let inner = match value.get("config") {
        Some(c) if value.get("mixgraph_version").is_some() => c.clone(),
        _ => value,
    };
    serde_json::from_value(inner).map_err(|e| UsageError(format!("invalid config {}: {e}", path.display())))
}

pub fn resolve(cli: &Cli) -> Result<RunConfig, UsageError> {
    let (name, common) = match &cli.command {
        Command::FitEm(a) => ("fit-em", &a.common),
        Command::FitSkeptic(a) => ("fit-skeptic", &a.common),
        Command::Simulate(a) => ("simulate", &a.common),
        Command::Roc(a) => ("roc", &a.common),
        Command::Select(a) => ("select", &a.common),
    };
    let mut cfg = match &common.config {
        Some(path) => load_config_file(path)?,
        None => RunConfig::default(),
    };
    if !cfg.command.is_empty() && cfg.command != name {
        return Err(UsageError(format!("config is for `{}`, but `{name}` was requested", cfg.command)));
    }
    cfg.command = name.to_string();
    apply_common(&mut cfg, common);
    match &cli.command {
        Command::FitEm(a) => {
            apply_input(&mut cfg, &a.input);
            apply_grid(&mut cfg, &a.grid)?;
            apply_em(&mut cfg, &a.em);
            if a.independent {
                cfg.independent = true;
            }
            if a.dump_moments {
                cfg.dump_moments = true;
            }
            if let Some(h) = a.h_mode {
                cfg.h_mode = h.into();
            }
        }
        Command::FitSkeptic(a) => {
            apply_input(&mut cfg, &a.input);
            apply_grid(&mut cfg, &a.grid)?;
            apply_skeptic(&mut cfg, &a.skeptic);
            if let Some(t) = a.tol {
                cfg.em.solver.tol = t;
            }
        }
        Command::Simulate(a) => apply_design(&mut cfg, &a.design)?,
        Command::Roc(a) => {
            apply_design(&mut cfg, &a.design)?;
            apply_em(&mut cfg, &a.em);
            apply_skeptic(&mut cfg, &a.skeptic);
            if let Some(m) = &a.methods {
                cfg.methods = m.iter().map(|&m| m.into()).collect();
            }
            if let Some(r) = a.reps {
                cfg.reps = r;
            }
            if let Some(g) = &a.lambda_grid {
                cfg.lambda_grid = Some(g.clone());
            }
        }
        Command::Select(a) => {
            if let Some(r) = &a.run {
                cfg.run = Some(r.clone());
            }
            if let Some(c) = a.criterion {
                cfg.criterion = c.into();
            }
            if let Some(h) = a.h_mode {
                cfg.h_mode = h.into();
            }
        }
    }
    cfg.em.mc.seed = cfg.seed;
    cfg.design.seed = cfg.seed;
    validate(&cfg)?;
    Ok(cfg)
}

fn apply_common(cfg: &mut RunConfig, a: &CommonArgs) {
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(o) = &a.out {
        cfg.out = o.clone();
    }
    if let Some(f) = &a.formats {
        cfg.formats = f.clone();
    }
}

fn apply_input(cfg: &mut RunConfig, a: &InputArgs) {
    if let Some(d) = &a.data {
        cfg.data = Some(absolute(d));
    }
    if let Some(s) = &a.schema {
        cfg.schema = Some(absolute(s));
    }
}

/// Inputs are recorded as absolute paths so a manifest can be replayed from anywhere.
fn absolute(p: &std::path::Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

fn apply_grid(cfg: &mut RunConfig, a: &GridArgs) -> Result<(), UsageError> {
    if a.lambda.is_some() && a.lambda_grid.is_some() {
        return Err(UsageError("--lambda and --lambda-grid are mutually exclusive".into()));
    }
    if let Some(l) = a.lambda {
        cfg.lambda = Some(l);
        cfg.lambda_grid = None;
    }
    if let Some(g) = &a.lambda_grid {
        cfg.lambda_grid = Some(g.clone());
        cfg.lambda = None;
    }
    Ok(())
}

fn apply_em(cfg: &mut RunConfig, a: &EmArgs) {
    if let Some(v) = a.variant {
        cfg.em.variant = v.into();
    }
    if let Some(v) = a.n_samples {
        cfg.em.mc.n_samples = v;
    }
    if let Some(v) = a.burn_in {
        cfg.em.mc.burn_in = v;
    }
    if let Some(v) = a.max_iters {
        cfg.em.max_iters = v;
    }
    if let Some(v) = a.conv_tol {
        cfg.em.conv_tol = v;
    }
    if let Some(v) = a.tol {
        cfg.em.solver.tol = v;
    }
}

fn apply_skeptic(cfg: &mut RunConfig, a: &SkepticArgs) {
    if let Some(m) = a.mode {
        cfg.mode = m.into();
    }
    if a.refine {
        cfg.pair.refine = true;
    }
    if a.no_rotation {
        cfg.pair.allow_rotation = false;
    }
    if let Some(f) = &a.families {
        cfg.pair.candidates = f.iter().map(|&f| f.into()).collect();
    }
}

fn apply_design(cfg: &mut RunConfig, a: &DesignArgs) -> Result<(), UsageError> {
    let d = &mut cfg.design;
    if let Some(n) = a.n {
        d.n = n;
    }
    if let Some(p) = a.p {
        if p != d.p {
            d.p = p;
            d.blocks = mixgraph::simulate::BlockCounts::proportional(p);
        }
    }
    if let Some(b) = &a.blocks {
        if b.len() != 5 {
            return Err(UsageError(
                "--blocks takes five counts: binary,ordinal,count,chisquare,normal".into(),
            ));
        }
        d.blocks = mixgraph::simulate::BlockCounts {
            binary: b[0],
            ordinal: b[1],
            count: b[2],
            chisquare: b[3],
            normal: b[4],
        };
        if a.p.is_none() {
            d.p = d.blocks.total();
        }
    }
    if let Some(r) = a.outlier_rate {
        d.outlier_rate = r;
    }
    if let Some(s) = a.outlier_sign {
        d.outlier_sign = s.into();
    }
    if a.outliers_normal_only {
        d.outliers_normal_only = true;
    }
    if a.edge_prob.is_some() && a.bandwidth.is_some() {
        return Err(UsageError("--edge-prob and --bandwidth are mutually exclusive".into()));
    }
    if let Some(e) = a.edge_prob {
        d.graph = GraphModel::ErdosRenyi { edge_prob: e };
    }
    if let Some(b) = a.bandwidth {
        d.graph = GraphModel::Banded { bandwidth: b };
    }
    Ok(())
}

fn validate(cfg: &RunConfig) -> Result<(), UsageError> {
    let needs_data = matches!(cfg.command.as_str(), "fit-em" | "fit-skeptic");
    if needs_data {
        if cfg.data.is_none() {
            return Err(UsageError("--data is required".into()));
        }
        if cfg.schema.is_none() {
            return Err(UsageError("--schema is required".into()));
        }
        if cfg.lambda.is_none() && cfg.lambda_grid.is_none() {
            return Err(UsageError("one of --lambda or --lambda-grid is required".into()));
        }
    }
    if cfg.command == "select" && cfg.run.is_none() {
        return Err(UsageError("--run is required".into()));
    }
    if let Some(g) = &cfg.lambda_grid {
        parse_grid(g)?;
    }
    cfg.em.validate().map_err(|e| UsageError(e.to_string()))?;
    if matches!(cfg.command.as_str(), "simulate" | "roc") {
        cfg.design.validate().map_err(|e| UsageError(e.to_string()))?;
    }
    if cfg.command == "roc" && (cfg.reps == 0 || cfg.methods.is_empty()) {
        return Err(UsageError("roc needs --reps ≥ 1 and at least one method".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub enum GridSpec {
    Auto(usize),
    List(Vec<f64>),
}

pub fn parse_grid(spec: &str) -> Result<GridSpec, UsageError> {
    let bad = || {
        UsageError(format!(
            "bad --lambda-grid `{spec}`: expected autoN or a decreasing list like 0.3,0.2,0.1"
        ))
    };
    if let Some(count) = spec.strip_prefix("auto") {
        let count: usize = count.parse().map_err(|_| bad())?;
        if count == 0 {
            return Err(bad());
        }
        return Ok(GridSpec::Auto(count));
    }
    let list: Vec<f64> = spec
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    if list.is_empty() || list.iter().any(|l| !(*l >= 0.0)) || list.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(bad());
    }
    Ok(GridSpec::List(list))
}

impl From<crate::args::FamilyArg> for FamilyKind {
    fn from(f: crate::args::FamilyArg) -> Self {
        use crate::args::FamilyArg as F;
        match f {
            F::Gaussian => FamilyKind::Gaussian,
            F::Clayton => FamilyKind::Clayton,
            F::Gumbel => FamilyKind::Gumbel,
            F::Frank => FamilyKind::Frank,
        }
    }
}

impl From<crate::args::ModeArg> for TauMode {
    fn from(m: crate::args::ModeArg) -> Self {
        match m {
            crate::args::ModeArg::Sample => TauMode::Sample,
            crate::args::ModeArg::Copula => TauMode::Copula,
        }
    }
}

impl From<crate::args::VariantArg> for BoundsMode {
    fn from(v: crate::args::VariantArg) -> Self {
        match v {
            crate::args::VariantArg::Full => BoundsMode::Full,
            crate::args::VariantArg::Partitioned => BoundsMode::Partitioned,
        }
    }
}

impl From<crate::args::HModeArg> for HMode {
    fn from(h: crate::args::HModeArg) -> Self {
        match h {
            crate::args::HModeArg::Omit => HMode::Omit,
            crate::args::HModeArg::MonteCarlo => HMode::MonteCarlo,
        }
    }
}

impl From<crate::args::CriterionArg> for Criterion {
    fn from(c: crate::args::CriterionArg) -> Self {
        match c {
            crate::args::CriterionArg::Aic => Criterion::Aic,
            crate::args::CriterionArg::Bic => Criterion::Bic,
        }
    }
}

impl From<crate::args::SignArg> for OutlierSign {
    fn from(s: crate::args::SignArg) -> Self {
        match s {
            crate::args::SignArg::Biased => OutlierSign::Biased,
            crate::args::SignArg::Uniform => OutlierSign::Uniform,
        }
    }
}

impl From<crate::args::MethodArg> for Method {
    fn from(m: crate::args::MethodArg) -> Self {
        use crate::args::MethodArg as M;
        match m {
            M::CopulaEm => Method::CopulaEm,
            M::CopulaTau => Method::CopulaTau,
            M::NpnTau => Method::NpnTau,
            M::NpnScore => Method::NpnScore,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_specs() {
        assert_eq!(parse_grid("auto10").unwrap(), GridSpec::Auto(10));
        assert_eq!(parse_grid("0.3, 0.2,0.1").unwrap(), GridSpec::List(vec![0.3, 0.2, 0.1]));
        assert!(parse_grid("0.1,0.2").is_err());
        assert!(parse_grid("auto0").is_err());
        assert!(parse_grid("fine").is_err());
    }

    #[test]
    fn config_round_trips() {
        let cfg = RunConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
        let partial: RunConfig = serde_json::from_str(r#"{"seed": 7}"#).unwrap();
        assert_eq!(partial.seed, 7);
        assert_eq!(partial.reps, 20);
    }
}
