//! Command execution and output files.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use mixgraph::copulaem::{self, Criterion, IcReport};
use mixgraph::copulatau::{self, TauMode};
use mixgraph::dataio::{load_dataset_files, ColumnSpec, MixedDataset};
use mixgraph::export::write_dot;
use mixgraph::glasso::{self, CorrelationMatrix, PrecisionEstimate};
use mixgraph::linalg;
use mixgraph::simulate::{self, ComparisonSettings, LambdaGrid};
use serde::Serialize;
use serde_json::json;

use crate::config::{self, Format, GridSpec, RunConfig};
use crate::{Failure, UsageError};

/// Collects the files written by a run, for the manifest.
struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir)?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>, Failure> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        self.written.push(name.to_string());
        Ok(BufWriter::new(File::create(path)?))
    }

    fn write_with(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> mixgraph::Result<()>) -> Result<(), Failure> {
        let mut w = self.create(name)?;
        f(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    mixgraph_version: &'a str,
    command: &'a str,
    config: &'a RunConfig,
    threads: usize,
    wall_time_seconds: f64,
    outputs: &'a [String],
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    timings: serde_json::Value,
}

pub fn run(cfg: &RunConfig, verbose: bool) -> Result<(), Failure> {
    let started = Instant::now();
    let mut out = Outputs::new(&cfg.out)?;
    let timings = match cfg.command.as_str() {
        "fit-em" => fit_em(cfg, verbose, &mut out)?,
        "fit-skeptic" => fit_skeptic(cfg, &mut out)?,
        "simulate" => simulate_data(cfg, &mut out)?,
        "roc" => roc(cfg, &mut out)?,
        "select" => select(cfg, &mut out)?,
        other => return Err(UsageError(format!("unknown command `{other}`")).into()),
    };
    let manifest = Manifest {
        mixgraph_version: env!("CARGO_PKG_VERSION"),
        command: &cfg.command,
        config: cfg,
        threads: rayon::current_num_threads(),
        wall_time_seconds: started.elapsed().as_secs_f64(),
        outputs: &out.written,
        timings,
    };
    let mut w = BufWriter::new(File::create(cfg.out.join("manifest.json"))?);
    serde_json::to_writer_pretty(&mut w, &manifest).map_err(mixgraph::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn load_input(cfg: &RunConfig) -> Result<MixedDataset, Failure> {
    let data = cfg.data.as_ref().ok_or_else(|| UsageError("--data is required".into()))?;
    let schema = cfg.schema.as_ref().ok_or_else(|| UsageError("--schema is required".into()))?;
    Ok(load_dataset_files(data, schema)?)
}

fn has(cfg: &RunConfig, f: Format) -> bool {
    cfg.formats.contains(&f)
}

/// Writes one estimate in every requested format, with `suffix` appended to the file stems.
fn write_estimate(
    cfg: &RunConfig,
    out: &mut Outputs,
    stem_dir: &str,
    suffix: &str,
    est: &PrecisionEstimate,
    columns: &[ColumnSpec],
) -> Result<(), Failure> {
    if has(cfg, Format::EdgesTsv) {
        out.write_with(&format!("{stem_dir}edges{suffix}.tsv"), |w| est.write_edges_tsv(w))?;
    }
    if has(cfg, Format::ThetaCsv) {
        out.write_with(&format!("{stem_dir}theta{suffix}.csv"), |w| est.write_theta_csv(w))?;
    }
    if has(cfg, Format::Dot) {
        out.write_with(&format!("{stem_dir}graph{suffix}.dot"), |w| write_dot(est, columns, w))?;
    }
    Ok(())
}

fn write_matrix_csv(m: &nalgebra::DMatrix<f64>, w: &mut impl Write) -> mixgraph::Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:.12e}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

fn write_lambdas(out: &mut Outputs, fits: &[(&PrecisionEstimate, Option<(usize, bool)>)]) -> Result<(), Failure> {
    out.write_with("lambdas.tsv", |w| {
        writeln!(w, "index\tlambda\tedges\titerations\tconverged")?;
        for (k, (est, em)) in fits.iter().enumerate() {
            let (iters, conv) = match em {
                Some((i, c)) => (i.to_string(), c.to_string()),
                None => ("NA".into(), "NA".into()),
            };
            writeln!(w, "{k}\t{}\t{}\t{iters}\t{conv}", est.lambda, est.edge_count())?;
        }
        Ok(())
    })
}

fn path_suffix(k: usize) -> String {
    format!("_{k:02}")
}

fn fit_em(cfg: &RunConfig, verbose: bool, out: &mut Outputs) -> Result<serde_json::Value, Failure> {
    let ds = load_input(cfg)?;
    let lambdas = match (&cfg.lambda, &cfg.lambda_grid) {
        (Some(l), _) => vec![*l],
        (None, Some(g)) => match config::parse_grid(g)? {
            GridSpec::Auto(k) => copulaem::default_lambda_grid(&ds, &cfg.em, k)?,
            GridSpec::List(l) => l,
        },
        (None, None) => return Err(UsageError("one of --lambda or --lambda-grid is required".into()).into()),
    };
    let single = cfg.lambda.is_some();
    let results = if single {
        vec![copulaem::em_fit(&ds, lambdas[0], &cfg.em)?]
    } else if cfg.independent {
        copulaem::em_path_independent(&ds, &lambdas, &cfg.em)?
    } else {
        copulaem::em_path(&ds, &lambdas, &cfg.em)?
    };

    for (k, res) in results.iter().enumerate() {
        let (dir, suffix) = if single { ("", String::new()) } else { ("path/", path_suffix(k)) };
        write_estimate(cfg, out, dir, &suffix, &res.theta, ds.columns())?;
        if cfg.dump_moments {
            out.write_with(&format!("{dir}r_bar{suffix}.csv"), |w| write_matrix_csv(res.r_bar.matrix(), w))?;
        }
        if !res.converged {
            log::warn!(
                "λ = {}: EM stopped at max_iters = {} before converging",
                res.lambda,
                cfg.em.max_iters
            );
        }
    }
    if !single {
        let rows: Vec<_> = results.iter().map(|r| (&r.theta, Some((r.iterations, r.converged)))).collect();
        write_lambdas(out, &rows)?;
    }
    if verbose {
        out.write_with("em_trace.tsv", |w| {
            for (k, r) in results.iter().enumerate() {
                let mut buf = Vec::new();
                r.write_trace_tsv(&mut buf)?;
                let text = String::from_utf8_lossy(&buf);
                // One header for the whole table.
                let body = if k == 0 {
                    &text[..]
                } else {
                    text.split_once('\n').map_or("", |x| x.1)
                };
                w.write_all(body.as_bytes())?;
            }
            Ok(())
        })?;
        for r in &results {
            for it in &r.trace {
                eprintln!(
                    "λ={:.6}\titer={}\tQ={:.6}\tedges={}\tmax_change={:.3e}",
                    r.lambda, it.iteration, it.q, it.edges, it.max_change
                );
            }
        }
    }
    if has(cfg, Format::IcTsv) {
        let reports = results
            .iter()
            .enumerate()
            .map(|(k, r)| copulaem::information_criteria_at(&r.theta, &ds, &cfg.em, k, None, cfg.h_mode))
            .collect::<mixgraph::Result<Vec<_>>>()?;
        out.write_with("ic.tsv", |w| copulaem::write_ic_tsv(&reports, w))?;
    }
    Ok(serde_json::Value::Null)
}

fn skeptic_grid(cfg: &RunConfig, gamma: &CorrelationMatrix) -> Result<Vec<f64>, Failure> {
    match (&cfg.lambda, &cfg.lambda_grid) {
        (Some(l), _) => Ok(vec![*l]),
        (None, Some(g)) => match config::parse_grid(g)? {
            GridSpec::Auto(k) => {
                let top = gamma.max_abs_off_diagonal();
                if !(top > 0.0) {
                    return Err(mixgraph::Error::Tau("correlation matrix has no off-diagonal signal".into()).into());
                }
                Ok(linalg::log_spaced_desc(top, 0.1 * top, k))
            }
            GridSpec::List(l) => Ok(l),
        },
        (None, None) => Err(UsageError("one of --lambda or --lambda-grid is required".into()).into()),
    }
}

fn fit_skeptic(cfg: &RunConfig, out: &mut Outputs) -> Result<serde_json::Value, Failure> {
    let ds = load_input(cfg)?;
    let (gamma, taus) = copulatau::skeptic_correlation(&ds, cfg.mode, &cfg.pair)?;
    let lambdas = skeptic_grid(cfg, &gamma)?;
    let single = cfg.lambda.is_some();
    let path = if single {
        vec![glasso::glasso_fit(&gamma, lambdas[0], None, &cfg.em.solver)?]
    } else {
        glasso::glasso_path(&gamma, &lambdas, &cfg.em.solver)?
    };
    for (k, est) in path.iter().enumerate() {
        let (dir, suffix) = if single { ("", String::new()) } else { ("path/", path_suffix(k)) };
        write_estimate(cfg, out, dir, &suffix, est, ds.columns())?;
    }
    if !single {
        let rows: Vec<_> = path.iter().map(|e| (e, None)).collect();
        write_lambdas(out, &rows)?;
    }
    if cfg.mode == TauMode::Copula {
        out.write_with("pair_fits.tsv", |w| copulatau::write_pair_fits_tsv(&taus.fits, w))?;
    }
    if has(cfg, Format::IcTsv) {
        let reports = path
            .iter()
            .map(|e| copulaem::information_criteria_fixed(e, &gamma, ds.n()))
            .collect::<mixgraph::Result<Vec<_>>>()?;
        out.write_with("ic.tsv", |w| copulaem::write_ic_tsv(&reports, w))?;
    }
    Ok(serde_json::Value::Null)
}

fn simulate_data(cfg: &RunConfig, out: &mut Outputs) -> Result<serde_json::Value, Failure> {
    let (truth, data) = simulate::replicate(&cfg.design, 0)?;
    out.write_with("data.csv", |w| data.write_csv(w, "NA"))?;
    out.write_with("schema.json", |w| {
        writeln!(w, "{}", data.schema().to_json_string())?;
        Ok(())
    })?;
    out.write_with("truth_edges.tsv", |w| simulate::write_truth_tsv(&truth, w))?;
    out.write_with("truth_theta.csv", |w| truth.write_theta_csv(w))?;
    if has(cfg, Format::Dot) {
        out.write_with("truth_graph.dot", |w| write_dot(&truth, data.columns(), w))?;
    }
    Ok(serde_json::Value::Null)
}

fn roc(cfg: &RunConfig, out: &mut Outputs) -> Result<serde_json::Value, Failure> {
    let grid = match &cfg.lambda_grid {
        None => LambdaGrid::default(),
        Some(g) => match config::parse_grid(g)? {
            GridSpec::Auto(count) => LambdaGrid::Auto { count, ratio: 0.1 },
            GridSpec::List(l) => LambdaGrid::Fixed(l),
        },
    };
    let settings = ComparisonSettings {
        methods: cfg.methods.clone(),
        reps: cfg.reps,
        grid,
        em: cfg.em,
        pair: cfg.pair.clone(),
        solver: cfg.em.solver,
    };
    let summaries = simulate::run_comparison(&cfg.design, &settings)?;
    out.write_with("roc.tsv", |w| simulate::write_roc_tsv(&summaries, w))?;
    out.write_with("auc.tsv", |w| simulate::write_auc_tsv(&summaries, w))?;
    for s in &summaries {
        eprintln!("{}\tauc={:.4}\tmean_rep_auc={:.4}", s.method.as_str(), s.curve.auc, s.mean_rep_auc);
    }
    let timings: serde_json::Map<String, serde_json::Value> = summaries
        .iter()
        .map(|s| (s.method.as_str().to_string(), json!({ "seconds_per_rep": s.seconds_per_rep })))
        .collect();
    Ok(serde_json::Value::Object(timings))
}

fn read_lambdas(path: &Path) -> Result<Vec<f64>, Failure> {
    let file = File::open(path).map_err(|e| UsageError(format!("cannot open {}: {e}", path.display())))?;
    let mut lambdas = Vec::new();
    for line in BufReader::new(file).lines().skip(1) {
        let line = line?;
        let field = line.split('\t').nth(1).unwrap_or("");
        let l: f64 = field
            .parse()
            .map_err(|_| UsageError(format!("malformed penalty `{field}` in {}", path.display())))?;
        lambdas.push(l);
    }
    Ok(lambdas)
}

fn select(cfg: &RunConfig, out: &mut Outputs) -> Result<serde_json::Value, Failure> {
    let run_dir = cfg.run.as_ref().ok_or_else(|| UsageError("--run is required".into()))?;
    let prior = config::load_config_file(&run_dir.join("manifest.json"))?;
    if !matches!(prior.command.as_str(), "fit-em" | "fit-skeptic") || prior.lambda_grid.is_none() {
        return Err(UsageError(format!("{} is not a fit-em or fit-skeptic grid run", run_dir.display())).into());
    }
    if !prior.formats.contains(&Format::ThetaCsv) {
        return Err(UsageError(format!("{} was run without theta-csv output", run_dir.display())).into());
    }
    let ds = load_input(&prior)?;
    let lambdas = read_lambdas(&run_dir.join("lambdas.tsv"))?;
    let path = lambdas
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            let file = run_dir.join(format!("path/theta{}.csv", path_suffix(k)));
            let f = File::open(&file).map_err(|e| UsageError(format!("cannot open {}: {e}", file.display())))?;
            Ok(PrecisionEstimate::read_theta_csv(f, l)?)
        })
        .collect::<Result<Vec<_>, Failure>>()?;

    let reports: Vec<IcReport> = if prior.command == "fit-em" {
        path.iter()
            .enumerate()
            .map(|(k, est)| copulaem::information_criteria_at(est, &ds, &prior.em, k, None, cfg.h_mode))
            .collect::<mixgraph::Result<_>>()?
    } else {
        if cfg.h_mode != copulaem::HMode::Omit {
            return Err(UsageError("--h-mode monte-carlo applies to fit-em runs only".into()).into());
        }
        let (gamma, _) = copulatau::skeptic_correlation(&ds, prior.mode, &prior.pair)?;
        path.iter()
            .map(|est| copulaem::information_criteria_fixed(est, &gamma, ds.n()))
            .collect::<mixgraph::Result<_>>()?
    };
    let best = copulaem::select_model(&reports, cfg.criterion)?;
    let name = match cfg.criterion {
        Criterion::Aic => "aic",
        Criterion::Bic => "bic",
    };
    out.write_with("ic.tsv", |w| copulaem::write_ic_tsv(&reports, w))?;
    let chosen = &reports[best];
    out.write_with("selected.tsv", |w| {
        writeln!(w, "criterion\tindex\tlambda\td\tvalue")?;
        writeln!(
            w,
            "{name}\t{best}\t{}\t{}\t{}",
            chosen.lambda,
            chosen.d,
            chosen.value(cfg.criterion)
        )?;
        Ok(())
    })?;
    let selected_cfg = RunConfig {
        formats: if cfg.formats.is_empty() {
            prior.formats.clone()
        } else {
            cfg.formats.clone()
        },
        ..cfg.clone()
    };
    write_estimate(&selected_cfg, out, "", "", &path[best], ds.columns())?;
    println!("selected\t{name}\tindex={best}\tlambda={}\tedges={}", chosen.lambda, chosen.d);
    Ok(serde_json::Value::Null)
}
