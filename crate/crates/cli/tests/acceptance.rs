//! Acceptance criteria 1-7. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;

use oqe_cli::commands::{fig3_curves, fig4_reports};
use oqe_cli::config::{Defaults, ExperimentConfig, Overrides};
use oqe_core::memory::{memory_complexity, TransferMatrix};
use oqe_core::numerics::{
    max_abs_diff, random_haar_unitary, rng_from_seed, standard_normal, SeedRng,
};
use oqe_core::oqe::{random_model, simulate_process, InitKind, QuantumOperation};
use oqe_core::process_tensor::{build_circuit_state, build_ppt, ppt_fidelity};
use oqe_core::reconstruction::{FitMode, Objective, ReconstructionProblem};
use oqe_core::tomography::tomography_of_model;
use oqe_core::{CMat, C64};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Random CPTP map from a Haar-random Stinespring isometry with `r` Kraus
/// operators.
fn random_channel(d: usize, r: usize, rng: &mut SeedRng) -> QuantumOperation<f64> {
    let w = random_haar_unitary::<f64, _>(d * r, rng);
    let v = w.columns(0, d).into_owned();
    let kraus = (0..r).map(|a| v.rows(a * d, d).into_owned()).collect();
    QuantumOperation::new(kraus).expect("isometry gives a channel")
}

fn criterion_1() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut rng = rng_from_seed(1001);
    for n in 0..50u64 {
        let env = [2, 3, 5][n as usize % 3];
        let k = 1 + (n as usize / 3) % 3;
        let init = [InitKind::Pure, InitKind::Separable, InitKind::Mixed][n as usize % 3];
        let steps = if n % 2 == 0 { None } else { Some(k) };
        let m = random_model::<f64>(2, env, 1.0, init, steps, 5000 + n);
        let ops: Vec<_> = (0..k).map(|j| random_channel(2, 1 + (j + n as usize) % 4, &mut rng)).collect();
        let exact = simulate_process(&m, &ops).expect("simulation");
        let pred = build_ppt(&m, k).expect("ppt").predict_state(&ops).expect("prediction");
        worst = worst.max(max_abs_diff(&exact, &pred));
    }
    outcome(worst <= 1e-10, format!("50 models, max entrywise deviation {worst:.2e} (tolerance 1e-10)"))
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 1.0;
    let mut kappa_ok = true;
    for n in 0..20u64 {
        let env = [2usize, 3, 5][n as usize % 3];
        let k = [4, 6][(n as usize / 3) % 2];
        let init = if n % 2 == 0 { InitKind::Pure } else { InitKind::Separable };
        let m = random_model::<f64>(2, env, 1.0, init, None, 7000 + n);
        let (ppt, transcript) = tomography_of_model(&m, k, env, 0.0).expect("tomography");
        worst = worst.min(ppt_fidelity(&ppt, &build_ppt(&m, k).expect("ppt")).expect("fidelity"));
        let expected = ((env as f64).ln() / 4f64.ln()).ceil() as usize + 1;
        kappa_ok &= transcript.plan.kappa == expected;
    }
    outcome(
        worst >= 1.0 - 1e-8 && kappa_ok,
        format!("20 models, min fidelity 1 - {:.2e} (tolerance 1e-8), kappa formula {}", 1.0 - worst, if kappa_ok { "matches" } else { "MISMATCH" }),
    )
}

fn fig4_config() -> ExperimentConfig {
    ExperimentConfig::resolve(Overrides::default(), Defaults { k: 3, init: InitKind::Pure, horizon: 80 }).expect("config")
}

fn criterion_3() -> Outcome {
    let cfg = fig4_config();
    let (pure, mixed) = fig4_reports(&cfg).expect("theorem check");
    let log5 = 5f64.log2();
    let pure_gap = (pure.observed_complexity - log5).abs();
    let mixed_gap = (mixed.observed_complexity - (mixed.initial_entropy + log5)).abs();
    let pass = pure.horizon == 80
        && pure_gap <= 0.02
        && pure.observed_memory_size == 5
        && mixed_gap <= 0.02
        && mixed.observed_memory_size == 50;
    outcome(
        pass,
        format!(
            "horizon 80: pure |C - log2 5| = {pure_gap:.2e}, D_80 = {}; mixed |C - (C0 + log2 5)| = {mixed_gap:.2e}, D_80 = {}",
            pure.observed_memory_size, mixed.observed_memory_size
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut radius: f64 = 0.0;
    let mut fixed: f64 = 0.0;
    let mut rng = rng_from_seed(4004);
    for _ in 0..20 {
        let u = random_haar_unitary::<f64, _>(10, &mut rng);
        let tm = TransferMatrix::from_unitary(&u, 2).expect("canonical site");
        radius = radius.max(tm.spectral_radius().expect("spectrum"));
        fixed = fixed.max(tm.identity_fixed_point_residual());
    }
    outcome(
        radius <= 1.0 + 1e-10 && fixed <= 1e-12,
        format!("20 sites, max spectral radius {radius:.15}, max I/D fixed-point residual {fixed:.2e}"),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn criterion_5() -> Outcome {
    let cfg = ExperimentConfig::resolve(Overrides::default(), Defaults { k: 3, init: InitKind::Separable, horizon: 20 })
        .expect("config");
    let curves = fig3_curves(&cfg).expect("fits");
    let k2 = curves.iter().find(|c| c.fit_k == 2).expect("k = 2 curve");
    let k3 = curves.iter().find(|c| c.fit_k == 3).expect("k = 3 curve");
    let max3 = k3.infidelity.iter().copied().fold(0.0, f64::max);
    let (m2, m3) = (median(k2.infidelity.clone()), median(k3.infidelity.clone()));
    outcome(
        k3.infidelity.len() == 21 && max3 <= 1e-4 && m2 >= m3,
        format!("eta 0.1, j = 0..20: k=3 max infidelity {max3:.2e} (tolerance 1e-4); medians k=2 {m2:.2e} >= k=3 {m3:.2e}"),
    )
}

fn criterion_6() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    let mut check = |ok: bool, note: String| {
        pass &= ok;
        notes.push(note);
    };

    let mut canon: f64 = 0.0;
    let mut circuit: f64 = 0.0;
    let mut causal: f64 = 0.0;
    let mut psd: f64 = 0.0;
    let mut trace: f64 = 0.0;
    for n in 0..10u64 {
        let m = random_model::<f64>(2, 2 + n as usize % 3, 1.0, InitKind::Pure, Some(3), 8000 + n);
        let p = build_ppt(&m, 3).expect("ppt");
        canon = canon.max(p.max_canonical_residual());
        let st = build_circuit_state(&m, 3).expect("circuit");
        let pst = p.to_state().expect("state");
        let diff = st.amplitudes().iter().zip(pst.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        circuit = circuit.max(diff);
        let full = p.to_dense().expect("dense");
        let prev = p.truncate(2).expect("truncate").to_dense().expect("dense");
        let want = oqe_core::numerics::kron(&(CMat::identity(2, 2) * C64::from(0.5)), &prev.matrix);
        causal = causal.max(max_abs_diff(&full.trace_final_output().expect("trace"), &want));
        psd = psd.min(full.min_eigenvalue().expect("spectrum"));
        trace = trace.max((full.trace() - 1.0).abs());
    }
    check(canon <= 1e-12, format!("canonical {canon:.1e}"));
    check(psd >= -1e-10 && trace <= 1e-10, format!("min eigenvalue {psd:.1e}, trace error {trace:.1e}"));
    check(causal <= 1e-10, format!("causality {causal:.1e}"));
    check(circuit <= 1e-12, format!("circuit state {circuit:.1e}"));

    let mut worst_grad: f64 = 0.0;
    let mut rng = rng_from_seed(6006);
    for point in 0..10u64 {
        let m = random_model::<f64>(2, 2, 1.0, InitKind::Pure, None, 9000 + point);
        let mode = if point % 2 == 0 { FitMode::TimeIndependent } else { FitMode::TimeDependent };
        let problem = ReconstructionProblem::new(&build_ppt(&m, 3).expect("ppt"), mode).expect("problem");
        let obj = Objective::new(&problem).expect("objective");
        let x: Vec<f64> = (0..obj.num_params()).map(|_| 2.0 * standard_normal::<f64, _>(&mut rng)).collect();
        let (_, g) = obj.evaluate(&x).expect("gradient");
        let scale = g.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-12);
        let h = 1e-5;
        for i in (0..x.len()).step_by(5) {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[i] += h;
            xm[i] -= h;
            let fd = (obj.loss(&xp).expect("loss") - obj.loss(&xm).expect("loss")) / (2.0 * h);
            worst_grad = worst_grad.max((fd - g[i]).abs() / scale);
        }
    }
    check(worst_grad <= 1e-6, format!("gradient vs finite differences {worst_grad:.1e}"));

    let mut renyi_ok = true;
    for n in 0..5u64 {
        let p = build_ppt(&random_model::<f64>(2, 5, 1.0, InitKind::Pure, None, 9500 + n), 5).expect("ppt");
        for j in 0..=5 {
            let vals: Vec<f64> =
                [0.25, 0.5, 1.0, 2.0, 4.0].iter().map(|&g| memory_complexity(&p, j, g).expect("renyi")).collect();
            renyi_ok &= vals.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        }
    }
    check(renyi_ok, format!("Renyi monotone in gamma: {renyi_ok}"));
    outcome(pass, notes.join(", "))
}

fn oqe(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_oqe"))
        .args(args)
        .arg("--output")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .expect("output directory")
        .map(|e| e.expect("entry").path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().expect("name").to_string_lossy().into_owned(), std::fs::read(&p).expect("read")))
        .collect();
    files.sort();
    files
}

fn criterion_7() -> Outcome {
    let root: PathBuf = std::env::temp_dir().join(format!("oqe-acceptance-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&root);
    let mut identical = true;
    let mut notes = Vec::new();
    let runs: Vec<(&str, Vec<String>)> = vec![
        ("simulate", vec!["simulate".into(), "--D".into(), "3".into(), "--k".into(), "4".into(), "--seed".into(), "7".into()]),
        ("tomography", vec!["tomography".into(), "--k".into(), "4".into()]),
        ("reconstruct", vec!["reconstruct".into(), "--restarts".into(), "2".into(), "--seed".into(), "7".into()]),
        ("fig3", vec!["fig3".into(), "--horizon".into(), "8".into(), "--seed".into(), "7".into()]),
        ("fig4", vec!["fig4".into(), "--horizon".into(), "30".into(), "--seed".into(), "7".into()]),
    ];
    for rep in 0..2 {
        for (name, args) in &runs {
            let out = root.join(format!("{name}-{rep}"));
            let mut args = args.clone();
            if *name == "tomography" {
                args.push("--model".into());
                args.push(root.join(format!("simulate-{rep}")).join("model.json").to_string_lossy().into_owned());
            }
            if *name == "reconstruct" {
                args.push("--ppt".into());
                args.push(root.join(format!("simulate-{rep}")).join("ppt.json").to_string_lossy().into_owned());
            }
            let argv: Vec<&str> = args.iter().map(String::as_str).collect();
            let o = oqe(&argv, &out);
            if !o.status.success() {
                identical = false;
                notes.push(format!("{name} failed: {}", String::from_utf8_lossy(&o.stderr).trim()));
            }
        }
    }
    for (name, _) in &runs {
        let a = snapshot(&root.join(format!("{name}-0")));
        let b = snapshot(&root.join(format!("{name}-1")));
        let same = !a.is_empty() && a == b;
        identical &= same;
        notes.push(format!("{name} {}", if same { "identical" } else { "DIFFERS" }));
    }
    let _ = std::fs::remove_dir_all(&root);
    outcome(identical, notes.join(", "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("oracle equivalence", criterion_1),
        ("tomography round trip", criterion_2),
        ("memory limits at horizon 80", criterion_3),
        ("transfer-matrix properties", criterion_4),
        ("time-independent extrapolation", criterion_5),
        ("invariant suite", criterion_6),
        ("determinism", criterion_7),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = std::time::Instant::now();
        let r = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !r.pass {
            failed += 1;
        }
        println!(
            "criterion {} ({name}): {} [{:.1}s] {}",
            i + 1,
            if r.pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64(),
            r.detail
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 7 acceptance criteria passed");
}
