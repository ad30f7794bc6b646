use rdcensor_core::exec::Sequential;
use rdcensor_core::inference::bootstrap;
use rdcensor_core::pipeline::{analyze, point_estimate};
use rdcensor_core::simulation::{gen_fuzzy, gen_sharp, run_study, DgpConfig, Method, StudyConfig};
use rdcensor_core::{
    BandwidthMode, Design, ModelKind, ObservedRecord, ObservedSample, PipelineConfig, SeScheme, TransformMethod,
};

fn sharp_config(model: ModelKind) -> PipelineConfig {
    let mut cfg = PipelineConfig::new(0.5, Design::Sharp);
    cfg.model = model;
    cfg
}

#[test]
fn single_replicate_is_within_three_standard_errors() {
    let s = gen_sharp(&DgpConfig::sharp(400, 2024)).unwrap();
    let a = analyze(&s, &sharp_config(ModelKind::Lognormal), &Sequential).unwrap();
    let se = a.se.se_nn.unwrap();
    assert!(
        (a.estimate.tau - 1.0).abs() < 3.0 * se,
        "tau {} se {se}",
        a.estimate.tau
    );
    assert!(a.se.ci_nn.unwrap().lower < a.estimate.tau);
}

#[test]
fn analysis_is_deterministic() {
    let s = gen_fuzzy(&DgpConfig::fuzzy(300, 8)).unwrap();
    let mut cfg = PipelineConfig::new(0.0, Design::Fuzzy);
    cfg.se = SeScheme::ALL;
    cfg.boot_reps = 10;
    cfg.bandwidth = BandwidthMode::Fixed(0.5);
    cfg.seed = 77;
    let a = analyze(&s, &cfg, &Sequential).unwrap();
    let b = analyze(&s, &cfg, &Sequential).unwrap();
    assert_eq!(a.estimate, b.estimate);
    assert_eq!(a.se, b.se);
    assert_eq!(a.bootstrap, b.bootstrap);
    assert_eq!(
        a.bootstrap.as_ref().unwrap().taus.len() + a.bootstrap.as_ref().unwrap().failed,
        10
    );
}

#[test]
fn bootstrap_streams_depend_on_the_seed() {
    let s = gen_sharp(&DgpConfig::sharp(200, 4)).unwrap();
    let cfg = sharp_config(ModelKind::Lognormal);
    let a = bootstrap(&s, &cfg, 0.4, 8, 1, &Sequential).unwrap();
    let b = bootstrap(&s, &cfg, 0.4, 8, 1, &Sequential).unwrap();
    let c = bootstrap(&s, &cfg, 0.4, 8, 2, &Sequential).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.taus, c.taus);
    assert!(a.se > 0.0);
}

#[test]
fn dr_skips_the_model_when_nothing_is_censored() {
    let recs = (0..120)
        .map(|i| {
            let w = (i as f64 + 0.5) / 120.0;
            ObservedRecord::new((1.0 + w + if w >= 0.5 { 1.0 } else { 0.0 }).exp(), true, w, false)
        })
        .collect();
    let s = ObservedSample::new(recs).unwrap();
    let mut cfg = sharp_config(ModelKind::Cox);
    let dr = point_estimate(&s, &cfg, Some(0.3)).unwrap();
    assert!(dr.model.is_none());
    cfg.transform = TransformMethod::Ipcw;
    let ipcw = point_estimate(&s, &cfg, Some(0.3)).unwrap();
    assert_eq!(dr.transformed.pseudo_y, ipcw.transformed.pseudo_y);
    assert!((dr.estimate.tau - 1.0).abs() < 1e-12);
}

#[test]
fn study_is_reproducible() {
    let mut study = StudyConfig::new(
        DgpConfig::sharp(200, 17),
        vec![Method::dr(ModelKind::Lognormal), Method::IPCW],
        6,
    );
    study.pipeline.se = SeScheme::ANALYTIC;
    let a = run_study(&study, &Sequential).unwrap();
    let b = run_study(&study, &Sequential).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.summaries.len(), 2);
    assert_eq!(a.summaries[0].method, "dr-lognormal");
    assert_eq!(a.summaries[1].method, "ipcw");
    assert!(a.summaries.iter().all(|s| s.n_reps == 6 && s.n_failed == 0));
}

#[test]
fn constant_treatment_is_a_weak_discontinuity() {
    let mut s = gen_fuzzy(&DgpConfig::fuzzy(200, 3)).unwrap().into_records();
    for r in &mut s {
        r.treated = true;
    }
    let s = ObservedSample::new(s).unwrap();
    let cfg = PipelineConfig::new(0.0, Design::Fuzzy);
    let err = analyze(&s, &cfg, &Sequential).unwrap_err();
    assert_eq!(err.kind(), "WeakDiscontinuity");
    assert_eq!(err.module(), "rd_estimation");
}
