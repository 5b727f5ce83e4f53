//! Agreement with independent reference implementations.

mod common;

use approx::assert_abs_diff_eq;
use common::OracleFamily;
use mixgraph::copulatau::{tau_from_copula, CopulaFamily, FamilyKind};
use mixgraph::glasso::{glasso_fit, kkt_residual, SolverSettings};
use mixgraph::CorrelationMatrix;

#[test]
fn glasso_matches_proximal_gradient() {
    let settings = SolverSettings::default();
    for seed in 0..6 {
        let p = 3 + (seed as usize % 3);
        let s = common::random_correlation(p, 40, seed);
        let top = (0..p)
            .flat_map(|i| (0..p).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| s[(i, j)].abs())
            .fold(0.0, f64::max);
        for lambda in [0.05, 0.3 * top, 0.7 * top] {
            let fit = glasso_fit(&CorrelationMatrix::input(s.clone()).unwrap(), lambda, None, &settings).unwrap();
            let oracle = common::prox_glasso(&s, lambda);
            let diff = (&fit.theta - &oracle).amax();
            assert!(diff <= 1e-3, "seed {seed} λ {lambda}: max diff {diff}");
            assert!(kkt_residual(&fit, &s, lambda).unwrap() <= 1e-4);
        }
    }
}

#[test]
fn tau_closed_forms_match_integral() {
    let cases = [
        (FamilyKind::Gaussian, OracleFamily::Gaussian, 0.5, false),
        (FamilyKind::Clayton, OracleFamily::Clayton, 2.0, false),
        (FamilyKind::Gumbel, OracleFamily::Gumbel, 1.8, false),
        (FamilyKind::Frank, OracleFamily::Frank, -4.0, false),
        (FamilyKind::Clayton, OracleFamily::Clayton, 1.0, true),
    ];
    for (kind, oracle, param, rotated) in cases {
        let family = if rotated {
            CopulaFamily::rotated(kind)
        } else {
            CopulaFamily::new(kind)
        };
        let closed = tau_from_copula(family, param).unwrap();
        let numeric = common::tau_double_integral(oracle, param, rotated);
        assert_abs_diff_eq!(closed, numeric, epsilon = 1e-3);
    }
}
