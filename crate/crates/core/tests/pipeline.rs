//! Cross-module consistency: the published benchmark tables reproduce from
//! their own rows, and this library's regenerated rows correlate the same way.

use nalgebra::Vector4;

use eigencycle::abm::{self, AbmConfig, DecisionMethod};
use eigencycle::dynamics::{DynamicsModel, LogitConvention};
use eigencycle::eigencycle::eigencycle_set;
use eigencycle::game::GameSpec;
use eigencycle::measurement::{angular_momentum_set, linearized_axis};
use eigencycle::spectral::{model_spectrum, principal_complex_mode};
use eigencycle::stats::{pearson, CorrelationMatrix};

/// Published eigencycle rows (human experiment, five simulations, five theory
/// models) for each treatment. Order: 12, 13, 14, 23, 24, 34.
mod reference {
    pub const LABELS: [&str; 11] =
        ["E", "S1", "S2", "S3", "S4", "S5", "T1", "T2", "T3", "T4", "T5"];

    pub const SETS_A25: [[f64; 6]; 11] = [
        [0.0046, 0.0021, -0.0067, 0.0042, 0.0004, 0.0063],
        [0.0004, 0.0002, -0.0006, 0.0004, 0.0, 0.0006],
        [0.0565, 0.0073, -0.0639, 0.0560, 0.0005, 0.0633],
        [0.0023, 0.0009, -0.0032, 0.0026, -0.0003, 0.0035],
        [0.0021, 0.0008, -0.0030, 0.0025, -0.0003, 0.0033],
        [0.1735, -0.8947, 0.7212, -0.7455, 0.919, -1.6402],
        [0.4659, 0.2795, -0.7454, 0.4659, 0.0, 0.7454],
        [0.4659, 0.2795, -0.7454, 0.4659, 0.0, 0.7454],
        [0.4648, 0.2809, -0.7457, 0.4658, -0.0010, 0.7467],
        [0.4133, 0.3160, -0.7292, 0.4796, -0.0663, 0.7957],
        [0.5282, 0.1730, -0.7012, 0.7576, -0.2294, 0.9306],
    ];

    pub const SETS_A4: [[f64; 6]; 11] = [
        [0.0070, -0.0024, -0.0047, 0.0076, -0.0006, 0.0053],
        [0.0002, -0.0001, -0.0001, 0.0002, 0.0, 0.0001],
        [0.0728, -0.0212, -0.0516, 0.0723, 0.0005, 0.0511],
        [0.0091, -0.0047, -0.0044, 0.0089, 0.0002, 0.0042],
        [0.0081, -0.0042, -0.0039, 0.0079, 0.0001, 0.0037],
        [1.5904, -0.4227, -1.1677, 0.1526, 1.4378, -0.2701],
        [0.8653, -0.5192, -0.3461, 0.8653, 0.0, 0.3461],
        [0.8653, -0.5192, -0.3461, 0.8653, 0.0, 0.3461],
        [0.8662, -0.5202, -0.3461, 0.8658, 0.0004, 0.3457],
        [0.9072, -0.5527, -0.3547, 0.8790, 0.0284, 0.3263],
        [0.9455, -0.3220, -0.6234, 0.7331, 0.2123, 0.4111],
    ];

    /// Spot values of the published correlation tables, (row, col, rho).
    pub const CORR_SPOTS_A25: [(&str, &str, f64); 8] = [
        ("T1", "E", 0.997),
        ("S1", "E", 0.998),
        ("T1", "S1", 0.999),
        ("T2", "T1", 1.000),
        ("T3", "T1", 1.000),
        ("T4", "T1", 0.996),
        ("S5", "T1", -0.748),
        ("S5", "E", -0.697),
    ];

    pub const CORR_SPOTS_A4: [(&str, &str, f64); 8] = [
        ("T1", "E", 0.953),
        ("S1", "E", 0.980),
        ("T1", "S1", 0.994),
        ("T2", "T1", 1.000),
        ("T4", "T1", 0.999),
        ("T5", "T1", 0.949),
        ("S5", "T1", 0.547),
        ("S5", "E", 0.482),
    ];

    /// Published rotation-axis rows, (x1, x3, x2) order.
    pub const AXES_A25: [(&str, [f64; 3]); 6] = [
        ("T1", [-0.0212, -0.0212, 0.0127]),
        ("T2", [-0.1483, -0.1483, 0.089]),
        ("T3", [-0.0001, -0.0001, 0.0001]),
        ("T4", [-0.2038, -0.1756, 0.1342]),
        ("S1", [-0.0004, -0.0004, 0.0002]),
        ("E", [-0.0042, -0.0046, 0.0021]),
    ];

    pub const AXES_A4: [(&str, [f64; 3]); 6] = [
        ("T1", [-0.0847, -0.0847, -0.0508]),
        ("T2", [-0.2754, -0.2754, -0.1653]),
        ("T3", [-0.0004, -0.0004, -0.0002]),
        ("T4", [-0.7953, -0.8209, -0.5]),
        ("S1", [-0.0002, -0.0002, -0.0001]),
        ("E", [-0.0076, -0.007, -0.0024]),
    ];
}

fn labeled(sets: &[[f64; 6]; 11]) -> Vec<(String, Vec<f64>)> {
    reference::LABELS
        .iter()
        .zip(sets.iter())
        .map(|(l, s)| (l.to_string(), s.to_vec()))
        .collect()
}

#[test]
fn published_correlation_tables_reproduce_from_their_rows() {
    for (sets, spots) in [
        (&reference::SETS_A25, &reference::CORR_SPOTS_A25[..]),
        (&reference::SETS_A4, &reference::CORR_SPOTS_A4[..]),
    ] {
        let m = CorrelationMatrix::from_sets(&labeled(sets), 0.9).unwrap();
        let idx = |l: &str| reference::LABELS.iter().position(|&x| x == l).unwrap();
        for &(r, c, want) in spots {
            let got = m.rho[idx(r)][idx(c)];
            assert!(
                (got - want).abs() <= 0.01,
                "{r}-{c}: recomputed {got:.3} vs published {want:.3}"
            );
        }
        // the high-noise row is the flagged one
        let s5 = idx("S5");
        for other in ["E", "S1", "T1"] {
            assert!(m.is_flagged(s5, idx(other)));
        }
        assert!(!m.is_flagged(idx("T1"), idx("E")));
    }
}

#[test]
fn published_axis_correlations_reproduce() {
    for (axes, t1_e_want) in [(&reference::AXES_A25, 0.999), (&reference::AXES_A4, 0.994)] {
        let get = |l: &str| axes.iter().find(|(x, _)| *x == l).unwrap().1;
        let rho = pearson(&get("T1"), &get("E")).unwrap();
        assert!((rho - t1_e_want).abs() < 0.005, "T1-E axis rho {rho:.3} vs {t1_e_want}");
        let rho = pearson(&get("T1"), &get("T2")).unwrap();
        assert!(rho > 0.9995);
        let rho = pearson(&get("T1"), &get("T4")).unwrap();
        assert!((rho - 0.997).abs() < 0.005);
    }
}

/// Regenerating the theory rows from scratch lands on the published ones.
#[test]
fn regenerated_theory_rows_match_published() {
    let models: [(&str, DynamicsModel); 5] = [
        ("T1", DynamicsModel::Replicator),
        ("T2", DynamicsModel::MsReplicator),
        ("T3", DynamicsModel::logit(0.001).unwrap()),
        ("T4", DynamicsModel::logit(0.05).unwrap()),
        ("T5", DynamicsModel::logit(300.0).unwrap()),
    ];
    for (a, sets) in [(0.25, &reference::SETS_A25), (4.0, &reference::SETS_A4)] {
        let g = GameSpec::new(a).unwrap();
        let guess = g.nash_equilibrium().unwrap();
        for (label, model) in models {
            let (_, spectrum) = model_spectrum(model, &g, &guess).unwrap();
            let mode = principal_complex_mode(&spectrum).unwrap();
            let got = eigencycle_set(&mode.vector).unit_normalized().unwrap();
            let row = sets[reference::LABELS.iter().position(|&l| l == label).unwrap()];
            let rho = pearson(&got.values, &row).unwrap();
            // T5's published row depends on unstated normalization choices of
            // the reference implementation; correlation is the right gauge
            let floor = if label == "T5" { 0.95 } else { 0.999 };
            assert!(rho > floor, "a={a} {label}: rho {rho:.4} vs published row");
        }
    }
}

/// The library's own regenerated tables correlate at least as tightly as the
/// published ones: every pairwise rho among T1-T4 and S1-S4 exceeds 0.94.
#[test]
fn recomputation_closure_over_own_tables() {
    let theory_models: [(&str, DynamicsModel); 4] = [
        ("T1", DynamicsModel::Replicator),
        ("T2", DynamicsModel::MsReplicator),
        ("T3", DynamicsModel::logit(0.001).unwrap()),
        ("T4", DynamicsModel::logit(0.05).unwrap()),
    ];
    let protocols: [(&str, DecisionMethod); 4] = [
        ("S1", DecisionMethod::PairwiseDifference),
        ("S2", DecisionMethod::PositiveProportional),
        ("S3", DecisionMethod::Logit { noise: 0.001, convention: LogitConvention::Temperature }),
        ("S4", DecisionMethod::Logit { noise: 0.05, convention: LogitConvention::Temperature }),
    ];

    for a in [0.25, 4.0] {
        let g = GameSpec::new(a).unwrap();
        let guess = g.nash_equilibrium().unwrap();
        let origin = *guess.as_vector();
        let mut rows: Vec<(String, Vec<f64>)> = Vec::new();

        for (label, model) in theory_models {
            let (_, spectrum) = model_spectrum(model, &g, &guess).unwrap();
            let mode = principal_complex_mode(&spectrum).unwrap();
            let set = eigencycle_set(&mode.vector).unit_normalized().unwrap();
            rows.push((label.to_string(), set.values.to_vec()));
        }
        for (k, (label, decision)) in protocols.iter().enumerate() {
            let cfg = AbmConfig {
                decision: *decision,
                n_candidates: 2,
                seed: 7000 + k as u64,
                ..Default::default()
            };
            let t = abm::simulate_abm(&g, &cfg, 10_000).unwrap();
            let set = angular_momentum_set(&t, &origin).unwrap();
            rows.push((label.to_string(), set.values.to_vec()));
        }

        let m = CorrelationMatrix::from_sets(&rows, 0.9).unwrap();
        for i in 0..rows.len() {
            for j in 0..i {
                assert!(
                    m.rho[i][j] > 0.94,
                    "a={a}: {} vs {} correlate at {:.4}",
                    rows[i].0,
                    rows[j].0,
                    m.rho[i][j]
                );
            }
        }
    }
}

/// Low-noise logit linearization agrees with the replicator's eigen structure.
#[test]
fn low_noise_logit_matches_replicator_structure() {
    for a in [0.25, 4.0] {
        let g = GameSpec::new(a).unwrap();
        let guess = g.nash_equilibrium().unwrap();
        let (rest, spectrum) =
            model_spectrum(DynamicsModel::logit(0.001).unwrap(), &g, &guess).unwrap();
        let dist = (rest.as_vector() - guess.as_vector()).norm();
        assert!(dist < 0.05, "a={a}: logit rest point {dist} from equilibrium");

        let logit_mode = principal_complex_mode(&spectrum).unwrap();
        let logit_set = eigencycle_set(&logit_mode.vector).unit_normalized().unwrap();
        let repl_set = {
            let (_, s) = model_spectrum(DynamicsModel::Replicator, &g, &guess).unwrap();
            eigencycle_set(&principal_complex_mode(&s).unwrap().vector)
                .unit_normalized()
                .unwrap()
        };
        let rho = pearson(&logit_set.values, &repl_set.values).unwrap();
        assert!(rho > 0.9999, "a={a}: rho {rho}");
    }
}

/// The measured axis of an ordinary population run points the same way as
/// the theory axis.
#[test]
fn population_axis_matches_theory_axis() {
    for a in [0.25, 4.0] {
        let g = GameSpec::new(a).unwrap();
        let guess = g.nash_equilibrium().unwrap();
        let origin = *guess.as_vector();
        let (_, spectrum) = model_spectrum(DynamicsModel::Replicator, &g, &guess).unwrap();
        let (theory_axis, _) = linearized_axis(&spectrum).unwrap();

        let cfg = AbmConfig { seed: 11, ..Default::default() };
        let t = abm::simulate_abm(&g, &cfg, 10_000).unwrap();
        let measured = eigencycle::measurement::rotation_axis(&t, &origin).unwrap();
        let cos = measured.cosine(&theory_axis).unwrap();
        assert!(cos > 0.95, "a={a}: axis cosine {cos:.4}");
    }
}

/// Normalized theory against normalized pooled-session measurement falls on
/// a significant regression line at both treatments. The six-player
/// surrogate tops out near rho 0.90 at a=4 (the human benchmark reached
/// 0.953 there), so the significance floor is 1% at a=1/4 and 5% at a=4.
#[test]
fn session_measurements_regress_on_theory() {
    for a in [0.25, 4.0] {
        let g = GameSpec::new(a).unwrap();
        let guess = g.nash_equilibrium().unwrap();
        let origin = *guess.as_vector();
        let (_, spectrum) = model_spectrum(DynamicsModel::Replicator, &g, &guess).unwrap();
        let theory = eigencycle_set(&principal_complex_mode(&spectrum).unwrap().vector)
            .unit_normalized()
            .unwrap();

        let mut pooled = [0.0; 6];
        for k in 0..8u64 {
            let rec = abm::simulate_session(
                &g,
                &format!("r{k}"),
                6,
                1000,
                Default::default(),
                9000 + k,
            )
            .unwrap();
            let set = angular_momentum_set(&rec.to_trajectory().unwrap(), &origin).unwrap();
            for (acc, v) in pooled.iter_mut().zip(set.values) {
                *acc += v / 8.0;
            }
        }
        let measured = eigencycle::stats::normalize_set(&pooled).unwrap();
        let fit = eigencycle::stats::ols_fit(&theory.values, &measured).unwrap();
        let floor = if a == 0.25 { 0.01 } else { 0.05 };
        assert!(fit.p_value < floor, "a={a}: regression p = {:.4}", fit.p_value);
        assert!(fit.slope > 0.0, "a={a}: slope {:.3}", fit.slope);
    }
}

/// Sessions measured against the equilibrium origin carry the right signs.
#[test]
fn session_momentum_signs_match_replicator_direction() {
    let a = 0.25;
    let g = GameSpec::new(a).unwrap();
    let origin = *g.nash_equilibrium().unwrap().as_vector();
    let mut mean = [0.0; 6];
    for k in 0..8u64 {
        let rec =
            abm::simulate_session(&g, &format!("p{k}"), 6, 1000, Default::default(), 4000 + k)
                .unwrap();
        let set = angular_momentum_set(&rec.to_trajectory().unwrap(), &origin).unwrap();
        for (m, v) in mean.iter_mut().zip(set.values) {
            *m += v / 8.0;
        }
    }
    // published experiment signs at a=1/4: (+, +, -, +, ~0, +)
    assert!(mean[0] > 0.0 && mean[1] > 0.0 && mean[2] < 0.0 && mean[3] > 0.0 && mean[5] > 0.0,
        "mean set {mean:?}");
}

/// Degenerate series behave sensibly end to end.
#[test]
fn degenerate_series_edge_cases() {
    let g = GameSpec::new(4.0).unwrap();
    let xs = g.nash_equilibrium().unwrap();
    let t = eigencycle::dynamics::integrate(DynamicsModel::Replicator, &g, &xs, 0.01, 10).unwrap();
    let set = angular_momentum_set(&t, xs.as_vector()).unwrap();
    for v in set.values {
        assert!(v.abs() < 1e-25, "rest-point series should measure zero, got {v}");
    }
    let axis = eigencycle::measurement::rotation_axis(&t, xs.as_vector()).unwrap();
    assert!(axis.norm() < 1e-25);
    let mean_vec: Vector4<f64> = t.samples.iter().sum::<Vector4<f64>>() / t.len() as f64;
    assert!((mean_vec - xs.as_vector()).amax() < 1e-12);
}
