use std::time::Duration;

use examsched::layer_cake::LayerCakeConfig;
use examsched::local_search::LocalSearchConfig;
use examsched::metrics::MetricWeights;
use examsched::nottingham::{NottinghamConfig, DEFAULT_CAPACITY};
use examsched::pipeline::PipelineConfig;
use examsched::sequencing::FrontLoad;

fn secs(l: &examsched::mip::SolveLimits) -> Option<Duration> {
    l.time_limit
}

#[test]
fn metric_weight_ratios() {
    let w = MetricWeights::default();
    assert_eq!(w.conflict_w / w.b2b_w, 1000.0);
    assert_eq!(w.triple_w / w.b2b_w, 10.0);
    assert_eq!(w.three4_w / w.b2b_w, 5.0);
    assert_eq!(w.two24_w / w.b2b_w, 0.5);
    assert_eq!(w.lambda1, 1000.0);
}

#[test]
fn front_loading_and_stage_limits() {
    assert_eq!(FrontLoad::default(), FrontLoad { size_cutoff: 300, slot_cutoff: 23 });
    let cfg = PipelineConfig::default();
    assert!(cfg.excluded.is_empty());
    assert_eq!(secs(&cfg.limits.sequence), Some(Duration::from_secs(1500)));
    assert_eq!(cfg.limits.post_total, Duration::from_secs(600));
    assert_eq!(secs(&cfg.limits.layer), Some(Duration::from_secs(1500)));
    assert_eq!(cfg.daily_cap, Some(5000));
}

#[test]
fn window_steps_and_layer_sizes() {
    let ls = LocalSearchConfig::with_window(25);
    assert_eq!((ls.n, ls.f_step, ls.b_step), (25, 10, 5));
    let lc = LayerCakeConfig::default();
    assert_eq!((lc.n2, lc.n3), (15_000, 4_500));
}

#[test]
fn benchmark_capacity_and_limits() {
    assert_eq!(DEFAULT_CAPACITY, 1550);
    let cfg = NottinghamConfig::default();
    assert_eq!(secs(&cfg.assign_limits), Some(Duration::from_secs(36_000)));
    assert_eq!(cfg.post_time, Duration::from_secs(1800));
}
