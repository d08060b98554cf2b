use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;

use saddletrap::analysis::{
    precession_rate, residual_scan, stability_sweep, AnalysisError, PrecessionFrame,
};
use saddletrap::dynamics::{guiding_center, simulate, Frame, SimConfig, SimError, State4};
use saddletrap::verifier::{
    build_reduction, check_identities, contact_obstruction, fourth_order_primitive_sign,
    velocity_coupled_control, IdentityCheck, ObstructionReport, SignFinding,
};

use crate::io_util::{fmt_f64, write_json, write_manifest, write_text};
use crate::{Failure, Globals};

fn io_fail(err: std::io::Error) -> Failure {
    Failure::new(1, format!("i/o error: {err}"))
}

fn analysis_fail(err: AnalysisError) -> Failure {
    let code = match err {
        AnalysisError::InvalidInput(_) | AnalysisError::DegenerateInitial(_) => 2,
        AnalysisError::Integration(_) => 3,
        AnalysisError::NoTransition { .. } => 4,
        AnalysisError::FitFailure(_) => 5,
    };
    Failure::new(code, err.to_string())
}

fn finish(
    g: &Globals,
    command: &str,
    config: serde_json::Value,
    outputs: &[PathBuf],
) -> Result<(), Failure> {
    write_manifest(&g.out_dir, command, config, g.seedless, g.started, outputs).map_err(io_fail)
}

/// Simulate settings from a JSON file; every field optional so a file can
/// pin just the values an experiment cares about. Flags still win.
#[derive(Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    epsilon: Option<f64>,
    t_end: Option<f64>,
    dt: Option<f64>,
    initial: Option<State4>,
    frame: Option<Frame>,
    sample_every: Option<usize>,
}

pub struct SimulateArgs {
    pub eps: Option<f64>,
    pub t_end: Option<f64>,
    pub frame: Option<Frame>,
    pub initial: Option<State4>,
    pub sample_every: Option<usize>,
}

pub fn cmd_simulate(g: &Globals, args: SimulateArgs) -> Result<(), Failure> {
    let file = match &g.config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Failure::new(2, format!("cannot read config {}: {e}", path.display()))
            })?;
            serde_json::from_str::<ConfigFile>(&text)
                .map_err(|e| Failure::new(2, format!("invalid config JSON: {e}")))?
        }
        None => ConfigFile::default(),
    };
    let defaults = SimConfig::new(0.1, 200.0);
    let epsilon = args.eps.or(file.epsilon).unwrap_or(defaults.epsilon);
    let config = SimConfig {
        epsilon,
        t_end: args.t_end.or(file.t_end).unwrap_or(defaults.t_end),
        dt: g
            .dt_override
            .or(file.dt)
            .unwrap_or_else(|| SimConfig::default_dt(epsilon)),
        initial: args.initial.or(file.initial).unwrap_or(defaults.initial),
        frame: args.frame.or(file.frame).unwrap_or(defaults.frame),
        sample_every: args
            .sample_every
            .or(file.sample_every)
            .unwrap_or(defaults.sample_every),
    };

    let trajectory = simulate(&config).map_err(|e| match e {
        SimError::InvalidConfig(msg) => Failure::new(2, msg),
        SimError::Integration(err) => Failure::new(3, err.to_string()),
    })?;

    let mut csv = String::from("t,x1,x2,v1,v2,u1,u2\n");
    for s in &trajectory.samples {
        let (p, v) = (s.state.pos, s.state.vel);
        csv.push_str(&format!(
            "{},{},{},{},{}",
            fmt_f64(s.t),
            fmt_f64(p.x),
            fmt_f64(p.y),
            fmt_f64(v.x),
            fmt_f64(v.y)
        ));
        if config.frame == Frame::Inertial {
            let u = guiding_center(p, v, s.t, config.epsilon);
            csv.push_str(&format!(",{},{}\n", fmt_f64(u.x), fmt_f64(u.y)));
        } else {
            csv.push_str(",,\n");
        }
    }
    let csv_path = g.out_dir.join("trajectory.csv");
    write_text(&csv_path, &csv).map_err(io_fail)?;

    finish(
        g,
        "simulate",
        serde_json::to_value(&config).expect("config serializes"),
        std::slice::from_ref(&csv_path),
    )?;
    println!(
        "wrote {} samples ({:?} frame, epsilon {}) to {}",
        trajectory.samples.len(),
        config.frame,
        config.epsilon,
        csv_path.display()
    );
    Ok(())
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct VerifyReport {
    identities: Vec<IdentityCheck>,
    sign_finding: SignFinding,
    obstructions: Vec<ObstructionReport>,
    velocity_control: ObstructionReport,
    all_passed: bool,
}

pub fn cmd_verify(
    g: &Globals,
    report_path: Option<PathBuf>,
    tamper_t2: bool,
) -> Result<(), Failure> {
    let mut ledger = build_reduction();
    if tamper_t2 {
        // Negative-control hook: flip T2's sign and let the checks catch it.
        ledger.t2 = ledger.t2.neg();
    }
    let identities = check_identities(&ledger);
    let sign_finding = fourth_order_primitive_sign(&ledger);
    let cert_fail = |e| Failure::new(1, format!("obstruction assembly failed: {e}"));
    let obstructions = vec![
        contact_obstruction(1, 4).map_err(cert_fail)?,
        contact_obstruction(2, 4).map_err(cert_fail)?,
    ];
    let velocity_control = velocity_coupled_control(4).map_err(cert_fail)?;

    let all_passed = identities.iter().all(|c| c.pass)
        && obstructions.iter().all(|o| !o.feasible)
        && velocity_control.feasible;

    for c in &identities {
        println!(
            "{} {:34} {}",
            if c.pass { "ok  " } else { "FAIL" },
            c.id,
            c.statement
        );
    }
    println!(
        "note quartic primitive: bottom-left block {} satisfies the defining equation; the flipped sign does not",
        sign_finding.bottom_left_block
    );
    for o in &obstructions {
        println!(
            "{} contact transform k={}: {} (stage {}, rank {} vs augmented {})",
            if o.feasible { "FAIL" } else { "ok  " },
            o.k,
            if o.feasible { "unexpectedly feasible" } else { "infeasible" },
            o.deciding_stage,
            o.rank_coefficients,
            o.rank_augmented
        );
    }
    println!(
        "{} velocity-coupled transform: {}",
        if velocity_control.feasible { "ok  " } else { "FAIL" },
        if velocity_control.feasible { "solvable" } else { "unexpectedly obstructed" }
    );

    let report = VerifyReport {
        identities,
        sign_finding,
        obstructions,
        velocity_control,
        all_passed,
    };
    let path = report_path.unwrap_or_else(|| g.out_dir.join("verify_report.json"));
    write_json(&path, &report).map_err(io_fail)?;
    finish(g, "verify", json!({ "tamperT2": tamper_t2 }), std::slice::from_ref(&path))?;

    if all_passed {
        println!("verification passed");
        Ok(())
    } else {
        let mut failed: Vec<String> = report
            .identities
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.statement.clone())
            .collect();
        failed.extend(
            report
                .obstructions
                .iter()
                .filter(|o| o.feasible)
                .map(|o| format!("contact transform k={} unexpectedly feasible", o.k)),
        );
        if !report.velocity_control.feasible {
            failed.push("velocity-coupled control unexpectedly obstructed".to_string());
        }
        Err(Failure::new(
            1,
            format!("verification failed: {}", failed.join("; ")),
        ))
    }
}

pub fn cmd_residual(
    g: &Globals,
    eps_list: &[f64],
    horizon: f64,
    initial: Option<State4>,
) -> Result<(), Failure> {
    if eps_list.len() < 3 {
        return Err(Failure::new(
            2,
            format!("--eps-list needs at least 3 values, got {}", eps_list.len()),
        ));
    }
    let initial = initial.unwrap_or_else(|| SimConfig::new(0.1, 1.0).initial);
    let report = residual_scan(eps_list, horizon, initial).map_err(analysis_fail)?;

    let mut csv = String::from("epsilon,max_residual\n");
    for (eps, max) in report.epsilons.iter().zip(&report.max_residuals) {
        csv.push_str(&format!("{},{}\n", fmt_f64(*eps), fmt_f64(*max)));
    }
    let csv_path = g.out_dir.join("residual.csv");
    let json_path = g.out_dir.join("residual_report.json");
    write_text(&csv_path, &csv).map_err(io_fail)?;
    write_json(&json_path, &report).map_err(io_fail)?;
    finish(
        g,
        "residual",
        json!({ "epsList": report.epsilons, "horizon": horizon, "initial": initial }),
        &[csv_path, json_path],
    )?;
    println!(
        "fitted log-log slope {:.4} over {} points (fit rms {:.2e})",
        report.fitted_slope,
        report.epsilons.len() - report.excluded.len(),
        report.fit_residual
    );
    for e in &report.excluded {
        println!("excluded epsilon {}: {}", e.epsilon, e.reason);
    }
    Ok(())
}

pub fn cmd_stability(g: &Globals, eps_min: f64, eps_max: f64, n: usize) -> Result<(), Failure> {
    let sweep = stability_sweep(eps_min, eps_max, n).map_err(analysis_fail)?;

    let mut csv = String::from("epsilon,max_multiplier_modulus,stable\n");
    for p in &sweep.grid {
        csv.push_str(&format!(
            "{},{},{}\n",
            fmt_f64(p.epsilon),
            fmt_f64(p.max_modulus),
            p.stable
        ));
    }
    let csv_path = g.out_dir.join("stability.csv");
    let json_path = g.out_dir.join("stability_report.json");
    write_text(&csv_path, &csv).map_err(io_fail)?;
    write_json(&json_path, &sweep).map_err(io_fail)?;
    finish(
        g,
        "stability",
        json!({ "epsMin": eps_min, "epsMax": eps_max, "n": n }),
        &[csv_path, json_path],
    )?;
    println!(
        "epsilon_c = {:.4} (bracket [{:.4}, {:.4}], grid of {} points)",
        sweep.epsilon_c, sweep.bracket.0, sweep.bracket.1, n
    );
    Ok(())
}

pub fn cmd_precession(
    g: &Globals,
    eps: f64,
    frame: PrecessionFrame,
    horizon: Option<f64>,
) -> Result<(), Failure> {
    let report = precession_rate(eps, frame, horizon).map_err(analysis_fail)?;
    let json_path = g.out_dir.join("precession_report.json");
    write_json(&json_path, &report).map_err(io_fail)?;
    finish(
        g,
        "precession",
        json!({ "eps": eps, "frame": frame, "horizon": horizon }),
        std::slice::from_ref(&json_path),
    )?;
    println!(
        "measured rate {:+.6e} vs predicted {:+.6e} ({}, relative error {:.2e}{})",
        report.measured_rate,
        report.predicted_rate,
        if report.prograde { "prograde" } else { "retrograde" },
        report.relative_error,
        if report.degenerate_fallback {
            ", single-mode fallback"
        } else {
            ""
        }
    );
    Ok(())
}
