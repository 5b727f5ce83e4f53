//! End-to-end runs through the public API.

use mixgraph::copulaem::{self, Criterion, EmSettings, HMode};
use mixgraph::copulatau::{skeptic_fit, PairFitSettings, TauMode};
use mixgraph::dataio::load_dataset;
use mixgraph::export::write_dot;
use mixgraph::simulate::{self, SimDesign};
use mixgraph::{McSettings, Schema, SolverSettings};

fn simulated() -> mixgraph::MixedDataset {
    let design = SimDesign::new(150, 10);
    simulate::replicate(&design, 0).unwrap().1
}

#[test]
fn csv_round_trip_preserves_data() {
    let ds = simulated();
    let mut buf = Vec::new();
    ds.write_csv(&mut buf, "NA").unwrap();
    let back = load_dataset(buf.as_slice(), &ds.schema()).unwrap();
    assert_eq!(back.values(), ds.values());
    assert_eq!(back.columns(), ds.columns());
}

#[test]
fn missing_cells_are_handled_by_both_estimators() {
    let schema = Schema::from_json_str(
        r#"{"missing_token": "?", "columns": [
            {"name": "a", "kind": "continuous"},
            {"name": "b", "kind": "binary"},
            {"name": "c", "kind": "ordinal"}]}"#,
    )
    .unwrap();
    let mut csv = String::from("a,b,c\n");
    for i in 0..60 {
        let a = (i as f64 * 0.37).sin();
        let b = if a > 0.1 { 1 } else { 0 };
        let c = if i % 7 == 0 {
            "?".to_string()
        } else {
            ((a * 2.0).round() as i32 + 2).to_string()
        };
        csv.push_str(&format!("{a},{b},{c}\n"));
    }
    let ds = load_dataset(csv.as_bytes(), &schema).unwrap();
    let settings = EmSettings {
        mc: McSettings {
            n_samples: 30,
            burn_in: 10,
            seed: 2,
        },
        ..EmSettings::default()
    };
    let em = copulaem::em_fit(&ds, 0.05, &settings).unwrap();
    assert_eq!(em.theta.dim(), 3);
    let sk = skeptic_fit(&ds, 0.05, TauMode::Sample, &PairFitSettings::default(), &SolverSettings::default()).unwrap();
    assert_eq!(sk.dim(), 3);
}

#[test]
fn path_selection_and_export() {
    let ds = simulated();
    let settings = EmSettings {
        mc: McSettings {
            n_samples: 40,
            burn_in: 10,
            seed: 5,
        },
        ..EmSettings::default()
    };
    let grid = copulaem::default_lambda_grid(&ds, &settings, 6).unwrap();
    let path = copulaem::em_path(&ds, &grid, &settings).unwrap();
    assert_eq!(path.len(), 6);
    let reports: Vec<_> = path
        .iter()
        .map(|r| copulaem::information_criteria(r, &ds, HMode::Omit).unwrap())
        .collect();
    let bic = copulaem::select_model(&reports, Criterion::Bic).unwrap();
    let aic = copulaem::select_model(&reports, Criterion::Aic).unwrap();
    assert!(reports[bic].lambda >= reports[aic].lambda);

    let mut dot = Vec::new();
    write_dot(&path[bic].theta, ds.columns(), &mut dot).unwrap();
    let text = String::from_utf8(dot).unwrap();
    assert_eq!(text.matches(" -- ").count(), path[bic].theta.edge_count());
}

#[test]
fn independent_path_matches_cold_single_fits() {
    let ds = simulated();
    let settings = EmSettings {
        mc: McSettings {
            n_samples: 30,
            burn_in: 10,
            seed: 9,
        },
        max_iters: 3,
        ..EmSettings::default()
    };
    let grid = [0.3, 0.1];
    let cold = copulaem::em_path_independent(&ds, &grid, &settings).unwrap();
    let first = copulaem::em_fit(&ds, 0.3, &settings).unwrap();
    assert_eq!(cold[0].theta.theta, first.theta.theta);
}
