//! Layered construction: schedule exams in size-ordered layers, letting the
//! tail of each layer move again with the next one. Also the hybrid
//! pipeline that re-sequences a layered schedule.

use thiserror::Error;

use crate::assign::{blocks_from_schedule, BlockAssignment};
use crate::data::{CoenrollmentStats, SlotCalendar};
use crate::local_search::{post_process, LocalSearchConfig, PostProcessResult};
use crate::metrics::{conflict_count, score_individual, ExamSchedule, MetricWeights};
use crate::mip::{Backend, SolveLimits, SolveStatus};
use crate::schedule_ip::{solve_schedule_ip, ScheduleIpError, ScheduleIpInstance, ZetaPenalty};
use crate::sequencing::{
    apply_sequence, solve_sequencing, windows_from_days, BlockSequence, FrontLoad, SeqWeights, SequencingError,
    SequencingInstance, ThreeInFourMode,
};

#[derive(Debug, Error)]
pub enum LayerCakeError {
    #[error("re-entry target {n3} must be below the layer target {n2}")]
    LayerSizes { n2: u64, n3: u64 },
    #[error("layer {layer}: {source}")]
    Layer { layer: usize, source: ScheduleIpError },
}

#[derive(Debug, Error)]
pub enum HybridError {
    #[error("layer-cake stage: {0}")]
    LayerCake(#[from] LayerCakeError),
    #[error("sequencing stage: {0}")]
    Sequencing(#[from] SequencingError),
    #[error("post-processing stage: {0}")]
    PostProcess(ScheduleIpError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    /// Exams re-entering from the previous layer's tail, in removal order.
    pub overlap: Vec<usize>,
    /// Exams scheduled for the first time, largest first.
    pub new: Vec<usize>,
}

impl Layer {
    pub fn exams(&self) -> Vec<usize> {
        self.overlap.iter().chain(&self.new).copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerPlan {
    pub n2: u64,
    pub n3: u64,
    pub layers: Vec<Layer>,
}

pub fn default_n3(n2: u64) -> u64 {
    (0.3 * n2 as f64).round() as u64
}

/// Split exams, largest first, into layers of about `n2` student-exam pairs.
/// Each later layer starts with about `n3` pairs taken from the end of the
/// previous one. Counters are decremented by the size of the exam just
/// taken, so a layer may overshoot its target by one exam.
pub fn plan_layers(stats: &CoenrollmentStats, n2: u64, n3: u64) -> Result<LayerPlan, LayerCakeError> {
    if n3 >= n2 {
        return Err(LayerCakeError::LayerSizes { n2, n3 });
    }
    let mut order: Vec<usize> = (0..stats.num_exams()).collect();
    order.sort_by_key(|&e| std::cmp::Reverse(stats.size(e)));
    let mut rest = order.into_iter().peekable();
    let mut take = |budget: u64, into: &mut Vec<usize>| {
        let mut i = budget as i64;
        while i > 0 {
            let Some(e) = rest.next() else { break };
            into.push(e);
            i -= i64::from(stats.size(e));
        }
    };
    let mut layers = Vec::new();
    let mut first = Vec::new();
    take(n2, &mut first);
    if first.is_empty() {
        return Ok(LayerPlan { n2, n3, layers });
    }
    layers.push(Layer { overlap: Vec::new(), new: first });
    loop {
        let mut old = layers.last().expect("nonempty").exams();
        let mut overlap = Vec::new();
        let mut i = n3 as i64;
        while i > 0 {
            let Some(e) = old.pop() else { break };
            overlap.push(e);
            i -= i64::from(stats.size(e));
        }
        let mut new = Vec::new();
        take(n2 - n3, &mut new);
        if new.is_empty() {
            break;
        }
        layers.push(Layer { overlap, new });
    }
    Ok(LayerPlan { n2, n3, layers })
}

/// Greedy slots for `new`, largest first, each at its cheapest slot against
/// everything placed so far in `sched`. Returned in the order of `new`.
pub fn warm_start_construct(
    stats: &CoenrollmentStats,
    w: &MetricWeights,
    zeta: Option<&ZetaPenalty>,
    sched: &ExamSchedule,
    new: &[usize],
    slots: &[usize],
) -> Vec<usize> {
    let mut placed = sched.slots().to_vec();
    let mut order: Vec<usize> = (0..new.len()).collect();
    order.sort_by_key(|&p| std::cmp::Reverse(stats.size(new[p])));
    let mut out = vec![0; new.len()];
    for p in order {
        let e = new[p];
        let cost = |s: usize| score_individual(stats, w, &placed, e, s) + zeta.map_or(0.0, |z| z.penalty(stats.size(e), s));
        let best = slots
            .iter()
            .copied()
            .min_by(|&a, &b| cost(a).total_cmp(&cost(b)).then(a.cmp(&b)))
            .expect("at least one slot");
        placed[e] = best;
        out[p] = best;
    }
    out
}

#[derive(Debug, Clone)]
pub struct LayerCakeConfig {
    pub n2: u64,
    pub n3: u64,
    pub layer_limits: SolveLimits,
    pub weights: MetricWeights,
    pub zeta: Option<ZetaPenalty>,
}

impl Default for LayerCakeConfig {
    fn default() -> Self {
        Self {
            n2: 15_000,
            n3: default_n3(15_000),
            layer_limits: SolveLimits::seconds(1500.0),
            weights: MetricWeights::default(),
            zeta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerRecord {
    pub index: usize,
    pub n_new: usize,
    pub n_overlap: usize,
    pub objective: f64,
    pub warm_objective: f64,
    pub status: SolveStatus,
}

#[derive(Debug, Clone)]
pub struct LayerCakeResult {
    pub schedule: ExamSchedule,
    pub layers: Vec<LayerRecord>,
}

/// Schedule every layer of `plan` into `slots` in turn. Exams placed in
/// earlier layers stay fixed unless they re-enter.
pub fn layer_cake_run(
    stats: &CoenrollmentStats,
    plan: &LayerPlan,
    slots: &[usize],
    cfg: &LayerCakeConfig,
    backend: &dyn Backend,
) -> Result<LayerCakeResult, LayerCakeError> {
    let mut sched = ExamSchedule::unassigned(stats.num_exams());
    let mut records = Vec::with_capacity(plan.layers.len());
    for (index, layer) in plan.layers.iter().enumerate() {
        let tag = |source| LayerCakeError::Layer { layer: index, source };
        let greedy = warm_start_construct(stats, &cfg.weights, cfg.zeta.as_ref(), &sched, &layer.new, slots);
        let movable = layer.exams();
        let warm: Vec<usize> = layer.overlap.iter().map(|&e| sched.slots()[e]).chain(greedy).collect();
        let inst =
            ScheduleIpInstance::new(stats, &sched, movable.clone(), slots.to_vec(), &cfg.weights, cfg.zeta.as_ref())
                .map_err(tag)?;
        let warm_objective = inst.objective_of(&warm);
        let (placed, objective, status) = match solve_schedule_ip(&inst, Some(&warm), &cfg.layer_limits, backend) {
            Ok(r) => (r.slots, r.objective, r.status),
            Err(ScheduleIpError::NoIncumbent(status)) => {
                log::warn!("layer {index}: no incumbent ({status:?}), keeping the warm start");
                (warm, warm_objective, status)
            }
            Err(e) => return Err(tag(e)),
        };
        for (&e, &s) in movable.iter().zip(&placed) {
            sched.assign(e, s);
        }
        log::info!("{index},{},{},{objective}", layer.new.len(), layer.overlap.len());
        records.push(LayerRecord {
            index,
            n_new: layer.new.len(),
            n_overlap: layer.overlap.len(),
            objective,
            warm_objective,
            status,
        });
    }
    Ok(LayerCakeResult { schedule: sched.finalized(), layers: records })
}

#[derive(Debug, Clone)]
pub struct HybridConfig {
    pub layer_cake: LayerCakeConfig,
    pub front_load: Option<FrontLoad>,
    pub mode: ThreeInFourMode,
    pub sequencing_limits: SolveLimits,
    pub local_search: LocalSearchConfig,
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self {
            layer_cake: LayerCakeConfig::default(),
            front_load: None,
            mode: ThreeInFourMode::default(),
            sequencing_limits: SolveLimits::seconds(1500.0),
            local_search: LocalSearchConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HybridResult {
    pub layer_cake: LayerCakeResult,
    pub blocks: BlockAssignment,
    pub sequence: BlockSequence,
    pub post: PostProcessResult,
}

impl HybridResult {
    pub fn schedule(&self) -> &ExamSchedule {
        &self.post.schedule
    }
}

/// Layer-cake over the available slots, then its slot groups as blocks,
/// re-sequenced from the layered order and post-processed.
pub fn hybrid_pipeline(
    stats: &CoenrollmentStats,
    cal: &SlotCalendar,
    cfg: &HybridConfig,
    backend: &dyn Backend,
) -> Result<HybridResult, HybridError> {
    let slots = cal.available_slots();
    let plan = plan_layers(stats, cfg.layer_cake.n2, cfg.layer_cake.n3)?;
    let lc = layer_cake_run(stats, &plan, &slots, &cfg.layer_cake, backend)?;
    let (blocks, occupied) = blocks_from_schedule(stats, &lc.schedule);
    let mut inst = SequencingInstance::from_assignment(
        stats,
        &blocks,
        cal,
        windows_from_days(cal),
        SeqWeights::from(&cfg.layer_cake.weights),
        cfg.front_load,
    );
    inst.mode = cfg.mode;
    let mut initial = vec![usize::MAX; cal.len()];
    for (b, &s) in occupied.iter().enumerate() {
        initial[s] = b;
    }
    let mut next_virtual = blocks.k;
    for slot in initial.iter_mut().filter(|b| **b == usize::MAX) {
        *slot = next_virtual;
        next_virtual += 1;
    }
    let sequence = solve_sequencing(&inst, Some(&initial), &cfg.sequencing_limits, backend)?;
    let draft = apply_sequence(&sequence, &blocks)?.finalized();
    debug_assert_eq!(conflict_count(stats, &draft), conflict_count(stats, &lc.schedule));
    let post = post_process(stats, &draft, &slots, &cfg.local_search, backend).map_err(HybridError::PostProcess)?;
    Ok(HybridResult { layer_cake: lc, blocks, sequence, post })
}
