use oqe_core::oqe::{random_model, InitKind};
use oqe_core::process_tensor::{build_ppt, ppt_fidelity, process_fidelity, reduced_window};
use oqe_core::reconstruction::{fit_time_independent, FitMode, ReconstructionProblem};
use oqe_core::tomography::tomography_of_model;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[v.len() / 2]
}

#[test]
fn longer_fits_extrapolate_better() {
    let mut med2 = Vec::new();
    let mut med3 = Vec::new();
    for seed in 0..10 {
        let m = random_model::<f64>(2, 5, 0.1, InitKind::Separable, None, 300 + seed);
        let (full, _) = tomography_of_model(&m, 3, 5, 0.0).unwrap();
        for (fk, out) in [(2, &mut med2), (3, &mut med3)] {
            let p = ReconstructionProblem::new(&full.truncate(fk).unwrap(), FitMode::TimeIndependent).unwrap();
            let r = fit_time_independent(&p).unwrap();
            let inf: Vec<f64> = (0..=10)
                .map(|j| 1.0 - process_fidelity(&r.predict_future(j, 3).unwrap(), &reduced_window(&m, j, 3).unwrap()).unwrap())
                .collect();
            out.push(median(inf));
        }
    }
    let (a, b) = (median(med2.clone()), median(med3.clone()));
    assert!(a >= b, "{med2:?} vs {med3:?}");
}

#[test]
fn tomography_then_fit_recovers_process() {
    let m = random_model::<f64>(2, 3, 0.7, InitKind::Pure, None, 41);
    let truth = build_ppt(&m, 4).unwrap();
    let (target, _) = tomography_of_model(&m, 4, 3, 0.0).unwrap();
    assert!(ppt_fidelity(&target, &truth).unwrap() >= 1.0 - 1e-10);
    let r = fit_time_independent(&ReconstructionProblem::new(&target, FitMode::TimeIndependent).unwrap()).unwrap();
    assert!(r.loss < 1e-10);
    assert!(ppt_fidelity(&build_ppt(&r.model, 8).unwrap(), &build_ppt(&m, 8).unwrap()).unwrap() >= 1.0 - 1e-8);
}

#[test]
fn reconstruction_degrades_gracefully_with_noise() {
    let m = random_model::<f64>(2, 2, 0.7, InitKind::Pure, None, 42);
    let truth = build_ppt(&m, 4).unwrap();
    let mut last = -1.0;
    for eps in [0.0, 1e-6, 1e-4, 1e-2] {
        let (target, _) = tomography_of_model(&m, 4, 2, eps).unwrap();
        let r = fit_time_independent(&ReconstructionProblem::new(&target, FitMode::TimeIndependent).unwrap()).unwrap();
        let inf = 1.0 - ppt_fidelity(&build_ppt(&r.model, 4).unwrap(), &truth).unwrap();
        assert!(inf >= last - 1e-12, "eps {eps}: {inf} < {last}");
        last = inf;
    }
}
