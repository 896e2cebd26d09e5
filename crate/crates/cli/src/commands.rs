//! Implementations of the CLI commands. Each one reads and writes files
//! under the configured output directory and prints a short summary line per
//! artifact, so batch runs are auditable.

use std::path::{Path, PathBuf};

use nalgebra::Vector4;
use serde::Serialize;

use eigencycle::abm::{self, AbmConfig, SessionRecord, SessionRule};
use eigencycle::dynamics::{self, DynamicsModel, SampleSpace, Trajectory};
use eigencycle::eigencycle::{eigencycle_set, sweep_a};
use eigencycle::error::{Error, Result};
use eigencycle::game::GameSpec;
use eigencycle::io::{self, MeasuredRow};
use eigencycle::measurement::{self, angular_momentum_set, rotation_axis};
use eigencycle::spectral::{model_spectrum, principal_complex_mode, Spectrum};
use eigencycle::stats::{self, ComparisonReport, CorrelationMatrix, RegressionEntry, TTestEntry};

use crate::config::{a_tag, child_seed, OriginChoice, RunConfig};

/// Correlations below this magnitude are flagged in reports.
const FLAG_THRESHOLD: f64 = 0.9;

/// Perturbation used to start sample orbits away from the rest point.
const ORBIT_AMPLITUDE: f64 = 1e-2;

fn theory_sets_path(cfg: &RunConfig) -> PathBuf {
    cfg.out.join("theory_sets.csv")
}

fn measured_sets_path(cfg: &RunConfig) -> PathBuf {
    cfg.out.join("measured_sets.csv")
}

/// Offset direction spanning the rotating eigenplane, unit length.
fn mode_direction(spectrum: &Spectrum) -> Result<Vector4<f64>> {
    let mode = principal_complex_mode(spectrum)?;
    let re: Vector4<f64> = mode.vector.map(|c| c.re);
    let norm = re.norm();
    if norm == 0.0 {
        return Err(Error::DegenerateInput("rotating mode has a zero real part".into()));
    }
    Ok(re / norm)
}

/// One theory row: spectrum at the model's rest point, normalized eigencycle
/// set, and the axis measured on a linearized orbit.
fn theory_row(label: &str, model: DynamicsModel, g: &GameSpec) -> Result<(Spectrum, MeasuredRow)> {
    let guess = g.nash_equilibrium()?;
    let (_, spectrum) = model_spectrum(model, g, &guess)?;
    let mode = principal_complex_mode(&spectrum)?;
    let set = eigencycle_set(&mode.vector).unit_normalized()?;
    let (axis, n_samples) = measurement::linearized_axis(&spectrum)?;
    let row = MeasuredRow {
        source: label.to_string(),
        a: g.a().unwrap_or(f64::NAN),
        values: set.values,
        axis: axis.0,
        n_samples,
    };
    Ok((spectrum, row))
}

pub fn cmd_theory(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    if cfg.models.is_empty() {
        return Err(Error::InvalidParameter("no models selected".into()));
    }
    let mut rows = Vec::new();
    for &a in &cfg.treatments {
        let g = GameSpec::new(a)?;
        for &code in &cfg.models {
            let label = code.label(cfg.noise);
            let model = code.to_model(cfg.logit_convention, cfg.noise)?;
            let (spectrum, row) = theory_row(&label, model, &g)?;
            let spath = cfg.out.join(format!("spectrum_{}_{}.json", label, a_tag(a)));
            io::write_spectrum_json(&spath, &spectrum)?;
            let mode = principal_complex_mode(&spectrum)?;
            let ellipses = eigencycle::eigencycle::lissajous_geometry(mode, 256);
            let epath = cfg.out.join(format!("lissajous_{}_{}.json", label, a_tag(a)));
            io::write_ellipses_json(&epath, &ellipses)?;
            println!("theory {label} {}: wrote {}", a_tag(a), spath.display());
            rows.push(row);
        }
    }
    io::merge_measured_csv(&theory_sets_path(cfg), &rows)?;
    println!("theory: {} rows -> {}", rows.len(), theory_sets_path(cfg).display());
    Ok(())
}

fn measurement_origin(
    origin: OriginChoice,
    t: &Trajectory,
    rest: &Vector4<f64>,
) -> Vector4<f64> {
    match (origin, t.meta.space) {
        (_, SampleSpace::Tangent) => Vector4::zeros(),
        (OriginChoice::FixedPoint, _) => *rest,
        (OriginChoice::Mean, _) => {
            t.samples.iter().sum::<Vector4<f64>>() / t.len() as f64
        }
    }
}

fn measure_row(
    source: &str,
    t: &Trajectory,
    a: f64,
    origin: &Vector4<f64>,
) -> Result<MeasuredRow> {
    let set = angular_momentum_set(t, origin)?;
    let axis = rotation_axis(t, origin)?;
    Ok(MeasuredRow { source: source.to_string(), a, values: set.values, axis: axis.0, n_samples: t.len() })
}

pub fn cmd_simulate(cfg: &RunConfig, abm_config: Option<&Path>) -> Result<()> {
    cfg.validate()?;
    if cfg.models.is_empty() && cfg.protocols.is_empty() && cfg.sessions == 0 && abm_config.is_none()
    {
        return Err(Error::InvalidParameter(
            "nothing to simulate: select --model, --protocol, --sessions or --abm-config".into(),
        ));
    }
    let custom_abm = abm_config.map(AbmConfig::from_kv_file).transpose()?;
    let mut rows = Vec::new();

    for &a in &cfg.treatments {
        let g = GameSpec::new(a)?;
        let nash = g.nash_equilibrium()?;
        let tag = a_tag(a);

        for &code in &cfg.models {
            let label = code.label(cfg.noise);
            let model = code.to_model(cfg.logit_convention, cfg.noise)?;
            let (rest, spectrum) = model_spectrum(model, &g, &nash)?;
            let dir = mode_direction(&spectrum)?;
            let s0 = eigencycle::game::SimplexState::project(
                rest.as_vector() + dir * ORBIT_AMPLITUDE,
            )?;
            let t = dynamics::integrate(model, &g, &s0, cfg.dt, cfg.steps)?;
            let path = cfg.out.join(format!("ode_{label}_{tag}.csv"));
            io::write_trajectory_csv(&path, &t)?;
            let origin = measurement_origin(cfg.origin, &t, rest.as_vector());
            rows.push(measure_row(&format!("ODE:{label}"), &t, a, &origin)?);
            println!("simulate ode {label} {tag}: {} steps -> {}", cfg.steps, path.display());
        }

        for &code in &cfg.protocols {
            let label = code.label(cfg.noise);
            let seed = child_seed(cfg.seed, &format!("abm:{label}:{tag}"));
            let abm_cfg = AbmConfig {
                decision: code.to_decision(cfg.logit_convention, cfg.noise),
                seed,
                ..Default::default()
            };
            let t = abm::simulate_abm(&g, &abm_cfg, cfg.ticks)?;
            let path = cfg.out.join(format!("abm_{label}_{tag}.csv"));
            io::write_trajectory_csv(&path, &t)?;
            let origin = measurement_origin(cfg.origin, &t, nash.as_vector());
            rows.push(measure_row(&label, &t, a, &origin)?);
            println!(
                "simulate abm {label} {tag}: {} ticks, seed {seed} -> {}",
                cfg.ticks,
                path.display()
            );
        }

        if let Some(base) = &custom_abm {
            let label = format!("abm:{}", base.decision);
            let abm_cfg = base.clone();
            let t = abm::simulate_abm(&g, &abm_cfg, cfg.ticks)?;
            let path = cfg.out.join(format!("abm_custom_{tag}.csv"));
            io::write_trajectory_csv(&path, &t)?;
            let origin = measurement_origin(cfg.origin, &t, nash.as_vector());
            rows.push(measure_row(&label, &t, a, &origin)?);
            println!(
                "simulate abm {label} {tag}: {} ticks, seed {} -> {}",
                cfg.ticks,
                abm_cfg.seed,
                path.display()
            );
        }

        if cfg.sessions > 0 {
            let mut records = Vec::new();
            for k in 0..cfg.sessions {
                let id = format!("{tag}-{k:02}");
                let seed = child_seed(cfg.seed, &format!("session:{tag}:{k}"));
                records.push(abm::simulate_session(
                    &g,
                    &id,
                    6,
                    cfg.periods,
                    SessionRule::default(),
                    seed,
                )?);
            }
            let path = cfg.out.join(format!("sessions_{tag}.csv"));
            io::write_sessions_csv(&path, &records)?;
            rows.extend(session_rows(&records, cfg.origin, &g)?);
            println!(
                "simulate sessions {tag}: {} x {} periods -> {}",
                cfg.sessions,
                cfg.periods,
                path.display()
            );
        }
    }

    io::merge_measured_csv(&measured_sets_path(cfg), &rows)?;
    println!("simulate: {} rows -> {}", rows.len(), measured_sets_path(cfg).display());
    Ok(())
}

/// Per-session measurement rows plus the pooled experiment-analog row `E`.
fn session_rows(
    records: &[SessionRecord],
    origin: OriginChoice,
    g: &GameSpec,
) -> Result<Vec<MeasuredRow>> {
    let nash = g.nash_equilibrium()?;
    let mut rows = Vec::new();
    let mut pooled_values = [0.0; 6];
    let mut pooled_axis = [0.0; 3];
    let mut pooled_n = 0usize;
    for rec in records {
        let t = rec.to_trajectory()?;
        let o = measurement_origin(origin, &t, nash.as_vector());
        let row = measure_row(&format!("session:{}", rec.session_id), &t, rec.a, &o)?;
        let weight = (row.n_samples - 1) as f64;
        for (acc, v) in pooled_values.iter_mut().zip(row.values) {
            *acc += v * weight;
        }
        for (acc, v) in pooled_axis.iter_mut().zip(row.axis) {
            *acc += v * weight;
        }
        pooled_n += row.n_samples - 1;
        rows.push(row);
    }
    if pooled_n > 0 {
        // transition-weighted mean across sessions
        for v in &mut pooled_values {
            *v /= pooled_n as f64;
        }
        for v in &mut pooled_axis {
            *v /= pooled_n as f64;
        }
        rows.push(MeasuredRow {
            source: "E".into(),
            a: records[0].a,
            values: pooled_values,
            axis: pooled_axis,
            n_samples: pooled_n + records.len(),
        });
    }
    Ok(rows)
}

pub fn cmd_ingest(input: &Path, cfg: &RunConfig) -> Result<()> {
    if cfg.treatments.len() != 1 {
        return Err(Error::InvalidParameter(
            "ingest needs exactly one --a value for the session file".into(),
        ));
    }
    let a = cfg.treatments[0];
    let records = io::read_sessions_csv(input, a)?;
    for rec in &records {
        rec.validate()?;
        let t = rec.to_trajectory()?;
        let path = cfg.out.join(format!("ingested_{}.csv", rec.session_id));
        io::write_trajectory_csv(&path, &t)?;
        println!(
            "ingest {}: {} periods of {} players -> {}",
            rec.session_id,
            rec.periods.len(),
            rec.population_size,
            path.display()
        );
    }
    println!("ingest: {} sessions validated", records.len());
    Ok(())
}

/// Parses the model tags written to trajectory sidecars back into a model.
fn parse_model_string(s: &str) -> Option<DynamicsModel> {
    if s == "replicator" {
        return Some(DynamicsModel::Replicator);
    }
    if s == "ms-replicator" {
        return Some(DynamicsModel::MsReplicator);
    }
    let logit = |prefix: &str, convention| {
        s.strip_prefix(prefix)
            .and_then(|rest| rest.strip_suffix(']'))
            .and_then(|v| v.parse::<f64>().ok())
            .and_then(|noise| DynamicsModel::logit_with(noise, convention).ok())
    };
    logit("logit[", dynamics::LogitConvention::Temperature)
        .or_else(|| logit("logit-gain[", dynamics::LogitConvention::Gain))
}

pub fn cmd_measure(input: &Path, source_override: Option<&str>, cfg: &RunConfig) -> Result<()> {
    let text_head = std::fs::read_to_string(input)
        .map_err(|e| Error::Io { path: input.to_path_buf(), source: e })?;
    let header = text_head
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .unwrap_or("");

    let rows = if header.starts_with("session_id,") {
        if cfg.treatments.len() != 1 {
            return Err(Error::InvalidParameter(
                "measuring a session file needs exactly one --a value".into(),
            ));
        }
        let records = io::read_sessions_csv(input, cfg.treatments[0])?;
        let g = GameSpec::new(cfg.treatments[0])?;
        session_rows(&records, cfg.origin, &g)?
    } else {
        let t = io::read_trajectory_csv(input)?;
        let a = t.meta.a.or_else(|| cfg.treatments.first().copied()).ok_or_else(|| {
            Error::InvalidParameter("trajectory carries no a; pass --a explicitly".into())
        })?;
        let g = GameSpec::new(a)?;
        let rest = match t.meta.model.as_deref().and_then(parse_model_string) {
            Some(model) => dynamics::fixed_point(model, &g, &g.nash_equilibrium()?)?,
            None => g.nash_equilibrium()?,
        };
        let origin = measurement_origin(cfg.origin, &t, rest.as_vector());
        let source = source_override
            .map(str::to_string)
            .unwrap_or_else(|| t.meta.source.clone());
        vec![measure_row(&source, &t, a, &origin)?]
    };

    for r in &rows {
        println!(
            "measure {} ({}): L = {:?}, n = {}",
            r.source,
            a_tag(r.a),
            r.values,
            r.n_samples
        );
    }
    io::merge_measured_csv(&measured_sets_path(cfg), &rows)?;
    println!("measure: {} rows -> {}", rows.len(), measured_sets_path(cfg).display());
    Ok(())
}

#[derive(Serialize)]
struct IdentityFits {
    schema: String,
    /// sigma14 against -sigma34, pooled over treatments.
    opposite_pair: Option<RegressionEntry>,
    /// sigma12 against sigma23, pooled over treatments.
    equal_pair: Option<RegressionEntry>,
}

pub fn cmd_compare(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    let theory_path = theory_sets_path(cfg);
    let measured_path = measured_sets_path(cfg);
    let mut rows: Vec<MeasuredRow> = Vec::new();
    if theory_path.exists() {
        rows.extend(io::read_measured_csv(&theory_path)?);
    }
    if measured_path.exists() {
        rows.extend(io::read_measured_csv(&measured_path)?);
    }
    if rows.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no inputs: neither {} nor {} exists",
            theory_path.display(),
            measured_path.display()
        )));
    }

    for &a in &cfg.treatments {
        let at: Vec<&MeasuredRow> = rows.iter().filter(|r| (r.a - a).abs() < 1e-9).collect();
        if at.is_empty() {
            println!("compare {}: no rows, skipping", a_tag(a));
            continue;
        }

        let mut sets = Vec::new();
        let mut axes = Vec::new();
        for r in &at {
            match stats::normalize_set(&r.values) {
                Ok(v) => sets.push((r.source.clone(), v)),
                Err(_) => eprintln!("compare: {} has an all-zero set, skipped", r.source),
            }
            if spread(&r.axis) > 0.0 {
                axes.push((r.source.clone(), r.axis.to_vec()));
            }
        }
        let eigencycle_corr = CorrelationMatrix::from_sets(&sets, FLAG_THRESHOLD)?;
        let axis_corr = if axes.len() >= 2 {
            Some(CorrelationMatrix::from_sets(&axes, FLAG_THRESHOLD)?)
        } else {
            None
        };

        // regression of every source against the replicator theory row
        let mut regressions = Vec::new();
        if let Some(t1) = sets.iter().find(|(l, _)| l == "T1") {
            for (label, values) in sets.iter().filter(|(l, _)| l != "T1") {
                let fit = stats::ols_fit(&t1.1, values)?;
                regressions.push(RegressionEntry {
                    label: format!("{label} vs T1"),
                    fit,
                    n: values.len(),
                });
            }
        }

        // the zero prediction for sigma24 across sessions
        let mut ttests = Vec::new();
        let session_s24: Vec<f64> = at
            .iter()
            .filter(|r| r.source.starts_with("session:"))
            .map(|r| r.values[4])
            .collect();
        if session_s24.len() >= 2 {
            ttests.push(TTestEntry {
                label: "sigma24 across sessions".into(),
                test: stats::ttest_zero(&session_s24)?,
            });
        }

        let report = ComparisonReport {
            schema: "comparison/v1".into(),
            a,
            eigencycle_corr,
            axis_corr,
            regressions,
            ttests,
        };
        let json_path = cfg.out.join(format!("comparison_{}.json", a_tag(a)));
        write_text(
            &json_path,
            &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"),
        )?;
        let txt_path = cfg.out.join(format!("comparison_{}.txt", a_tag(a)));
        write_text(&txt_path, &report.to_text_table())?;
        println!(
            "compare {}: {} sources -> {}, {}",
            a_tag(a),
            at.len(),
            json_path.display(),
            txt_path.display()
        );
    }

    write_identity_outputs(cfg, &rows)?;
    Ok(())
}

fn spread(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::MIN, f64::max);
    let min = v.iter().cloned().fold(f64::MAX, f64::min);
    max - min
}

/// Scatter data and pooled fits for the parameter-free identities, built
/// from the per-session rows of all treatments together.
fn write_identity_outputs(cfg: &RunConfig, rows: &[MeasuredRow]) -> Result<()> {
    let sessions: Vec<&MeasuredRow> =
        rows.iter().filter(|r| r.source.starts_with("session:")).collect();
    if sessions.is_empty() {
        return Ok(());
    }

    let mut csv = String::new();
    csv.push_str("# schema: identity-scatter/v1\n");
    csv.push_str("a,source,s14,neg_s34,s12,s23\n");
    let mut x14 = Vec::new();
    let mut y14 = Vec::new();
    let mut x12 = Vec::new();
    let mut y12 = Vec::new();
    for r in &sessions {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.a, r.source, r.values[2], -r.values[5], r.values[0], r.values[3]
        ));
        x14.push(-r.values[5]);
        y14.push(r.values[2]);
        x12.push(r.values[3]);
        y12.push(r.values[0]);
    }
    let scatter_path = cfg.out.join("identity_scatter.csv");
    write_text(&scatter_path, &csv)?;

    let fit = |x: &[f64], y: &[f64], label: &str| -> Option<RegressionEntry> {
        stats::ols_fit(x, y)
            .ok()
            .map(|fit| RegressionEntry { label: label.into(), fit, n: x.len() })
    };
    let fits = IdentityFits {
        schema: "identity-fits/v1".into(),
        opposite_pair: fit(&x14, &y14, "s14 vs -s34"),
        equal_pair: fit(&x12, &y12, "s12 vs s23"),
    };
    let fits_path = cfg.out.join("identity_fits.json");
    write_text(
        &fits_path,
        &(serde_json::to_string_pretty(&fits).expect("fits serialize") + "\n"),
    )?;
    println!(
        "compare identities: {} sessions -> {}, {}",
        sessions.len(),
        scatter_path.display(),
        fits_path.display()
    );
    Ok(())
}

fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.into(), source: e })?;
    }
    std::fs::write(path, contents).map_err(|e| Error::Io { path: path.into(), source: e })
}

#[derive(Serialize)]
struct ManifoldDiagnostic {
    schema: String,
    a: f64,
    amplitude: f64,
    amplitude_small: f64,
    /// RMS distance of the (x2, x4) projection from its best-fit line.
    rms_residual_x2x4: f64,
    rms_residual_x2x4_small: f64,
    /// Residual growth relative to linear amplitude rescaling; about
    /// amplitude ratio itself for a genuinely curved projection.
    growth_vs_linear: f64,
    degenerate: bool,
}

pub fn cmd_manifold(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    const SMALL_AMPLITUDE: f64 = 1e-4;
    for &a in &cfg.treatments {
        let g = GameSpec::new(a)?;
        let nash = g.nash_equilibrium()?;
        let (rest, spectrum) = model_spectrum(DynamicsModel::Replicator, &g, &nash)?;
        let dir = mode_direction(&spectrum)?;
        let mode = principal_complex_mode(&spectrum)?;
        let period = 2.0 * std::f64::consts::PI / mode.value.im;
        let steps = (period / cfg.dt).ceil() as usize;
        let tag = a_tag(a);

        let orbit_at = |amplitude: f64| -> Result<Trajectory> {
            let s0 =
                eigencycle::game::SimplexState::project(rest.as_vector() + dir * amplitude)?;
            dynamics::integrate(DynamicsModel::Replicator, &g, &s0, cfg.dt, steps)
        };
        let orbit = orbit_at(ORBIT_AMPLITUDE)?;
        let small = orbit_at(SMALL_AMPLITUDE)?;

        for &(m, n) in eigencycle::eigencycle::SUBSPACE_PAIRS.iter() {
            let mut csv = String::new();
            csv.push_str("# schema: projection/v1\n");
            csv.push_str(&format!("x{},x{}\n", m + 1, n + 1));
            for s in &orbit.samples {
                csv.push_str(&format!("{},{}\n", s[m], s[n]));
            }
            let path = cfg.out.join(format!("proj_{tag}_x{}{}.csv", m + 1, n + 1));
            write_text(&path, &csv)?;
        }

        let residual = |t: &Trajectory| {
            let pts: Vec<[f64; 2]> = t.samples.iter().map(|s| [s[1], s[3]]).collect();
            stats::line_fit_rms_residual(&pts)
        };
        let coarse = residual(&orbit);
        let fine = residual(&small);
        let degenerate = coarse < 1e-14;
        if degenerate {
            eprintln!("manifold {tag}: (x2,x4) projection is a straight segment (zero residual)");
        }
        let diag = ManifoldDiagnostic {
            schema: "manifold-diagnostic/v1".into(),
            a,
            amplitude: ORBIT_AMPLITUDE,
            amplitude_small: SMALL_AMPLITUDE,
            rms_residual_x2x4: coarse,
            rms_residual_x2x4_small: fine,
            growth_vs_linear: coarse / (fine * (ORBIT_AMPLITUDE / SMALL_AMPLITUDE)),
            degenerate,
        };
        let path = cfg.out.join(format!("manifold_{tag}.json"));
        write_text(&path, &(serde_json::to_string_pretty(&diag).expect("diag serializes") + "\n"))?;
        println!(
            "manifold {tag}: residual {:.3e} at {:.0e} ({} samples) -> {}",
            coarse,
            ORBIT_AMPLITUDE,
            orbit.len(),
            path.display()
        );
    }
    Ok(())
}

pub fn cmd_sweep(cfg: &RunConfig, explicit_a: bool) -> Result<()> {
    cfg.validate()?;
    let grid: Vec<f64> = if explicit_a {
        cfg.treatments.clone()
    } else {
        (0..50).map(|k| 0.05 * (20.0f64 / 0.05).powf(k as f64 / 49.0)).collect()
    };
    let table = sweep_a(&grid)?;
    let path = cfg.out.join("eigencycle_sweep.csv");
    io::write_sweep_csv(&path, &table)?;
    println!("sweep: {} parameter values -> {}", table.len(), path.display());
    Ok(())
}
