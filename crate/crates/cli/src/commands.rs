//! The experiment pipelines behind each subcommand. Every command is a pure
//! function of its configuration and input files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use oqe_core::io::{
    write_document, write_model, write_ppt, Document, FitReportDoc, Meta, TranscriptDoc, FIT_FORMAT,
    TRANSCRIPT_FORMAT,
};
use oqe_core::memory::{theorem1_check, Theorem1Report};
use oqe_core::numerics::{random_density_matrix, rng_from_seed};
use oqe_core::oqe::{random_model, InitKind, OqeModel, SeState};
use oqe_core::process_tensor::{build_ppt, ppt_fidelity, process_fidelity, reduced_window};
use oqe_core::reconstruction::{fit_time_dependent, fit_time_independent, FitMode, ReconstructionProblem};
use oqe_core::tomography::{tomography_of_model, window_size};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::CliError;

pub const MODEL_FILE: &str = "model.json";
pub const PPT_FILE: &str = "ppt.json";
pub const TOMOGRAPHY_PPT_FILE: &str = "tomography_ppt.json";
pub const TRANSCRIPT_FILE: &str = "transcript.json";
pub const FIT_FILE: &str = "fit.json";
pub const FIG3_FILE: &str = "fig3.csv";
pub const FIG4_FILE: &str = "fig4.csv";
pub const THEOREM1_FILE: &str = "theorem1.json";

/// Files written by a command, in order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

fn meta(command: &str, cfg: &ExperimentConfig) -> Meta {
    Meta {
        tool: concat!("oqe ", env!("CARGO_PKG_VERSION")).to_string(),
        command: command.to_string(),
        seed: Some(cfg.seed),
        config: cfg.to_json(),
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn restart_seeds(cfg: &ExperimentConfig) -> Vec<u64> {
    (1..=cfg.restarts as u64).map(|i| cfg.seed.wrapping_mul(1_000_003).wrapping_add(i)).collect()
}

/// Random model of the configuration: time-independent unless the mode is
/// time-dependent, in which case `k` unitaries are drawn.
pub fn model_of(cfg: &ExperimentConfig) -> OqeModel<f64> {
    let steps = match cfg.mode {
        FitMode::TimeIndependent => None,
        FitMode::TimeDependent => Some(cfg.k),
    };
    random_model(cfg.d, cfg.env, cfg.eta, cfg.init, steps, cfg.seed)
}

pub fn cmd_simulate(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    ensure_dir(out)?;
    let model = model_of(cfg);
    let ppt = build_ppt(&model, cfg.k)?;
    let (mp, pp) = (out.join(MODEL_FILE), out.join(PPT_FILE));
    write_model(&mp, &model, meta("simulate", cfg))?;
    write_ppt(&pp, &ppt, meta("simulate", cfg))?;
    Ok(Outcome {
        files: vec![mp, pp],
        summary: vec![format!("seed {}: k = {}, bond dimensions {:?}", cfg.seed, cfg.k, ppt.bond_dims())],
    })
}

pub fn cmd_tomography(cfg: &ExperimentConfig, model: &OqeModel<f64>, out: &Path) -> Result<Outcome, CliError> {
    ensure_dir(out)?;
    let (ppt, transcript) = tomography_of_model(model, cfg.k, cfg.d_bound, cfg.epsilon)?;
    let truth = build_ppt(model, cfg.k)?;
    let fidelity = ppt_fidelity(&ppt, &truth)?;
    let (pp, tp) = (out.join(TOMOGRAPHY_PPT_FILE), out.join(TRANSCRIPT_FILE));
    write_ppt(&pp, &ppt, meta("tomography", cfg))?;
    let doc = TranscriptDoc { process_fidelity: Some(fidelity), transcript };
    let summary = vec![
        format!("kappa = {}, runs = {}", doc.transcript.plan.kappa, doc.transcript.cost.runs),
        format!("process fidelity {fidelity}"),
    ];
    write_document(&tp, &Document::new(TRANSCRIPT_FORMAT, meta("tomography", cfg), doc))?;
    Ok(Outcome { files: vec![pp, tp], summary })
}

pub fn cmd_reconstruct(
    cfg: &ExperimentConfig,
    target: &oqe_core::Ppt,
    out: &Path,
    timing: bool,
) -> Result<Outcome, CliError> {
    ensure_dir(out)?;
    let seeds = restart_seeds(cfg);
    let problem = ReconstructionProblem::new(target, cfg.mode)?.restarts(seeds.clone());
    let start = Instant::now();
    let rec = match cfg.mode {
        FitMode::TimeDependent => fit_time_dependent(&problem)?,
        FitMode::TimeIndependent => fit_time_independent(&problem)?,
    };
    let mut doc = FitReportDoc::from_fit(&rec, cfg.mode, seeds);
    if timing {
        doc.seconds = Some(start.elapsed().as_secs_f64());
    }
    let fp = out.join(FIT_FILE);
    let summary = vec![format!("final loss {:e} after {} iterations", rec.loss, rec.log.len().saturating_sub(1))];
    write_document(&fp, &Document::new(FIT_FORMAT, meta("reconstruct", cfg), doc))?;
    Ok(Outcome { files: vec![fp], summary })
}

/// One extrapolation curve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fig3Curve {
    pub fit_k: usize,
    pub loss: f64,
    pub iterations: usize,
    pub infidelity: Vec<f64>,
}

/// Tomography of the configured model, time-independent fits for
/// every `fit_k`, and the infidelity of the extrapolated windows
/// `Υ_{j+m:j}` for `j = 0..=horizon`.
pub fn fig3_curves(cfg: &ExperimentConfig) -> Result<Vec<Fig3Curve>, CliError> {
    let model = random_model(cfg.d, cfg.env, cfg.eta, cfg.init, None, cfg.seed);
    let kappa = window_size(cfg.d, cfg.d_bound)?;
    let k_tomo = cfg.fit_k.iter().copied().max().unwrap_or(1).max(kappa);
    let (full, _) = tomography_of_model(&model, k_tomo, cfg.d_bound, cfg.epsilon)?;
    let mut curves = Vec::new();
    for &fk in &cfg.fit_k {
        let problem = ReconstructionProblem::new(&full.truncate(fk)?, FitMode::TimeIndependent)?
            .restarts(restart_seeds(cfg));
        let rec = fit_time_independent(&problem)?;
        let infidelity = (0..=cfg.horizon)
            .map(|j| {
                let f = process_fidelity(&rec.predict_future(j, cfg.window)?, &reduced_window(&model, j, cfg.window)?)?;
                Ok((1.0 - f).max(0.0))
            })
            .collect::<Result<Vec<f64>, CliError>>()?;
        curves.push(Fig3Curve { fit_k: fk, loss: rec.loss, iterations: rec.log.len().saturating_sub(1), infidelity });
    }
    Ok(curves)
}

fn csv_header(command: &str, cfg: &ExperimentConfig) -> String {
    format!(
        "# oqe {} {command}\n# config: {}\n",
        env!("CARGO_PKG_VERSION"),
        serde_json::to_string(&cfg.to_json()).expect("config serializes")
    )
}

pub fn cmd_fig3(cfg: &ExperimentConfig, out: &Path, timing: bool) -> Result<Outcome, CliError> {
    ensure_dir(out)?;
    let start = Instant::now();
    let curves = fig3_curves(cfg)?;
    let mut text = csv_header("fig3", cfg);
    for c in &curves {
        writeln!(text, "# fit_k={} loss={:e} iterations={}", c.fit_k, c.loss, c.iterations).expect("string write");
    }
    if timing {
        writeln!(text, "# seconds={}", start.elapsed().as_secs_f64()).expect("string write");
    }
    text.push_str("j,infidelity,fit_k\n");
    for c in &curves {
        for (j, v) in c.infidelity.iter().enumerate() {
            writeln!(text, "{j},{v:e},{}", c.fit_k).expect("string write");
        }
    }
    let path = out.join(FIG3_FILE);
    write_text(&path, &text)?;
    let summary = curves
        .iter()
        .map(|c| format!("fit_k = {}: max infidelity {:e}", c.fit_k, c.infidelity.iter().copied().fold(0.0, f64::max)))
        .collect();
    Ok(Outcome { files: vec![path], summary })
}

/// The pure and mixed sweep models: one random unitary, a random pure SE
/// state and a random full-rank SE density matrix.
pub fn fig4_models(cfg: &ExperimentConfig) -> (OqeModel<f64>, OqeModel<f64>) {
    let pure = random_model(cfg.d, cfg.env, cfg.eta, InitKind::Pure, None, cfg.seed);
    let mut rng = rng_from_seed(cfg.seed.wrapping_add(1));
    let mixed = OqeModel { initial: SeState::Mixed(random_density_matrix(cfg.d * cfg.env, &mut rng)), ..pure.clone() };
    (pure, mixed)
}

pub fn fig4_reports(cfg: &ExperimentConfig) -> Result<(Theorem1Report, Theorem1Report), CliError> {
    let (pure, mixed) = fig4_models(cfg);
    Ok((theorem1_check(&pure, cfg.horizon, cfg.gamma)?, theorem1_check(&mixed, cfg.horizon, cfg.gamma)?))
}

pub fn cmd_fig4(cfg: &ExperimentConfig, out: &Path, timing: bool) -> Result<Outcome, CliError> {
    ensure_dir(out)?;
    let start = Instant::now();
    let (pure, mixed) = fig4_reports(cfg)?;
    let mut text = csv_header("fig4", cfg);
    if timing {
        writeln!(text, "# seconds={}", start.elapsed().as_secs_f64()).expect("string write");
    }
    text.push_str("j,init,memory_size,complexity,gamma,predicted_limit,predicted_memory_size,seed\n");
    for (name, r) in [("pure", &pure), ("mixed", &mixed)] {
        for p in &r.sweep {
            writeln!(
                text,
                "{},{name},{},{},{},{},{},{}",
                p.j, p.memory_size, p.complexity, cfg.gamma, r.predicted_complexity, r.predicted_memory_size, cfg.seed
            )
            .expect("string write");
        }
    }
    let csv = out.join(FIG4_FILE);
    write_text(&csv, &text)?;
    let strip = |r: &Theorem1Report| Theorem1Report { sweep: Vec::new(), ..r.clone() };
    let body = serde_json::json!({ "pure": strip(&pure), "mixed": strip(&mixed) });
    let json = out.join(THEOREM1_FILE);
    write_document(&json, &Document::new("oqe-theorem1-report", meta("fig4", cfg), body))?;
    let summary = [("pure", &pure), ("mixed", &mixed)]
        .iter()
        .map(|(n, r)| {
            format!(
                "{n}: memory size {} (predicted {}), complexity {:.6} (predicted {:.6}), second eigenvalue modulus {:.6}",
                r.observed_memory_size,
                r.predicted_memory_size,
                r.observed_complexity,
                r.predicted_complexity,
                r.second_modulus
            )
        })
        .collect();
    Ok(Outcome { files: vec![csv, json], summary })
}
