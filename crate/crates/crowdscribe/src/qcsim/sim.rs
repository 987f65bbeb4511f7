//! Event-ordered annotation-pipeline simulation: entrance exams, task
//! assignment at fixed overlap, golden-set and spam monitoring,
//! reassignment on technical failure, and compensation accounting.

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::aggregate::{AnnotatedItem, ItemId, WorkerId};
use crate::error::{Error, Result};
use crate::metrics::wer;
use crate::textnorm::NormalizedText;

use super::worker::{run_exam, sample_worker_response, WorkerModel, WorkerResponse};
use super::{ProjectConfig, SpamRule};

/// Live quality-control status of a worker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkerStatus {
    InExam,
    ExamFailed,
    Active,
    BlockedSpam,
    BlockedGolden,
}

impl WorkerStatus {
    pub fn is_blocked(self) -> bool {
        matches!(
            self,
            WorkerStatus::BlockedSpam | WorkerStatus::BlockedGolden
        )
    }
}

/// Mutable QC state tracked per worker during a run.
#[derive(Debug, Clone, Serialize)]
pub struct WorkerState {
    pub status: WorkerStatus,
    /// WERs of the most recent golden tasks, capped at the window length.
    pub golden_history: VecDeque<f64>,
    pub submissions: usize,
    pub fast_submissions: usize,
    /// Event index of the block, if any. Blocks are absorbing.
    pub block_time: Option<u64>,
    /// Virtual wall clock: cumulative seconds this worker has spent.
    pub clock_s: f64,
    /// Completion times of recent tasks, for the windowed spam rule.
    recent_completions: VecDeque<f64>,
}

impl WorkerState {
    pub fn new() -> Self {
        WorkerState {
            status: WorkerStatus::InExam,
            golden_history: VecDeque::new(),
            submissions: 0,
            fast_submissions: 0,
            block_time: None,
            clock_s: 0.0,
            recent_completions: VecDeque::new(),
        }
    }
}

impl Default for WorkerState {
    fn default() -> Self {
        WorkerState::new()
    }
}

/// Record a golden-task WER and decide whether the worker gets blocked:
/// only once the window is full, and then iff the mean reaches the
/// threshold (inclusive).
pub fn golden_monitor(
    state: &mut WorkerState,
    new_golden_wer: f64,
    config: &ProjectConfig,
) -> bool {
    state.golden_history.push_back(new_golden_wer);
    while state.golden_history.len() > config.golden_window {
        state.golden_history.pop_front();
    }
    if state.golden_history.len() < config.golden_window {
        return false;
    }
    let mean: f64 = state.golden_history.iter().sum::<f64>() / state.golden_history.len() as f64;
    mean >= config.golden_threshold
}

/// Record a submission duration and decide whether the spam rule fires.
///
/// `LifetimeCount` blocks once `spam_min_count` submissions have each taken
/// less than `spam_duration_s`. `TimeWindow` blocks once that many tasks
/// complete inside one `spam_duration_s` stretch of the worker's clock.
pub fn spam_monitor(state: &mut WorkerState, duration_s: f64, config: &ProjectConfig) -> bool {
    state.clock_s += duration_s;
    match config.spam_rule {
        SpamRule::LifetimeCount => {
            if duration_s < config.spam_duration_s {
                state.fast_submissions += 1;
            }
            state.fast_submissions >= config.spam_min_count
        }
        SpamRule::TimeWindow => {
            let now = state.clock_s;
            state.recent_completions.push_back(now);
            while let Some(&front) = state.recent_completions.front() {
                if now - front > config.spam_duration_s {
                    state.recent_completions.pop_front();
                } else {
                    break;
                }
            }
            state.recent_completions.len() >= config.spam_min_count
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockReason {
    Spam,
    Golden,
}

/// One observable event of a simulation run, in order.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimEvent {
    ExamTaken {
        event: u64,
        worker: WorkerId,
        passed: bool,
        exam_wer: f64,
    },
    Submitted {
        event: u64,
        worker: WorkerId,
        item: ItemId,
        duration_s: f64,
        wer: f64,
    },
    TechnicalFailure {
        event: u64,
        worker: WorkerId,
        item: ItemId,
    },
    Blocked {
        event: u64,
        worker: WorkerId,
        reason: BlockReason,
    },
}

/// Per-worker compensation entry. Money is in integer units so the
/// conservation invariant holds exactly.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct LedgerEntry {
    pub exam_attempts: u64,
    pub exam_pay: u64,
    pub accepted_tasks: u64,
    pub task_pay: u64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Ledger {
    pub entries: BTreeMap<WorkerId, LedgerEntry>,
    pub total: u64,
}

impl Ledger {
    fn pay_exam(&mut self, worker: &WorkerId, amount: u64) {
        let e = self.entries.entry(worker.clone()).or_default();
        e.exam_attempts += 1;
        e.exam_pay += amount;
        self.total += amount;
    }

    fn pay_task(&mut self, worker: &WorkerId, amount: u64) {
        let e = self.entries.entry(worker.clone()).or_default();
        e.accepted_tasks += 1;
        e.task_pay += amount;
        self.total += amount;
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimStats {
    pub exam_attempts: usize,
    pub exam_passes: usize,
    pub exam_acceptance_rate: f64,
    pub blocks_spam: usize,
    pub blocks_golden: usize,
    pub reassignments: usize,
    pub n_items: usize,
    pub n_annotations: usize,
    /// Mean WER of accepted annotations against ground truth.
    pub mean_annotation_wer: f64,
}

/// Everything a run produces.
#[derive(Debug, Clone, Serialize)]
pub struct SimOutput {
    pub dataset: Vec<AnnotatedItem>,
    pub ledger: Ledger,
    pub stats: SimStats,
    pub worker_states: BTreeMap<WorkerId, WorkerState>,
    pub events: Vec<SimEvent>,
}

/// Run the full annotation pipeline.
///
/// The first `exam_size` corpus texts form the entrance exam; the rest
/// become tasks. Every worker sits the exam (and is compensated for it),
/// passers then draw random unseen items until every item holds exactly
/// `overlap` accepted annotations. Monitors run after each submission and
/// blocks are absorbing; technical failures put the item back into
/// circulation. Fully deterministic given the seed.
pub fn simulate_project(
    corpus: &[NormalizedText],
    pool: &[WorkerModel],
    config: &ProjectConfig,
    seed: u64,
) -> Result<SimOutput> {
    config.validate()?;
    for model in pool {
        model.validate()?;
    }
    if corpus.len() <= config.exam_size {
        return Err(Error::contract(format!(
            "corpus has {} sentences; need more than exam_size = {}",
            corpus.len(),
            config.exam_size
        )));
    }
    if pool.is_empty() {
        return Err(Error::contract("worker pool is empty"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exam_set = &corpus[..config.exam_size];
    let tasks = &corpus[config.exam_size..];
    let n_items = tasks.len();

    let golden: Vec<bool> = (0..n_items)
        .map(|_| config.golden_fraction >= 1.0 || rng.gen::<f64>() < config.golden_fraction)
        .collect();

    let mut events: Vec<SimEvent> = Vec::new();
    let mut event_counter: u64 = 0;
    let mut next_event = || {
        event_counter += 1;
        event_counter
    };

    let mut ledger = Ledger::default();
    let mut states: Vec<WorkerState> = vec![WorkerState::new(); pool.len()];
    let mut exam_passes = 0usize;

    for (w, model) in pool.iter().enumerate() {
        let (passed, exam_wer) = run_exam(model, exam_set, config, &mut rng);
        ledger.pay_exam(&model.worker_id, config.pay_exam);
        states[w].status = if passed {
            exam_passes += 1;
            WorkerStatus::Active
        } else {
            WorkerStatus::ExamFailed
        };
        events.push(SimEvent::ExamTaken {
            event: next_event(),
            worker: model.worker_id.clone(),
            passed,
            exam_wer,
        });
    }

    let item_id = |idx: usize| ItemId::new(format!("item-{idx:05}"));
    let mut items: Vec<AnnotatedItem> = tasks
        .iter()
        .enumerate()
        .map(|(idx, truth)| AnnotatedItem {
            item_id: item_id(idx),
            ground_truth: Some(truth.clone()),
            annotations: Vec::new(),
        })
        .collect();
    let mut seen: Vec<Vec<bool>> = vec![vec![false; n_items]; pool.len()];
    let mut incomplete = n_items;
    let mut reassignments = 0usize;
    let mut blocks_spam = 0usize;
    let mut blocks_golden = 0usize;
    let mut wer_sum = 0.0f64;
    let mut n_annotations = 0usize;
    let mut candidates: Vec<usize> = Vec::with_capacity(n_items);

    while incomplete > 0 {
        let mut any_activity = false;
        for (w, model) in pool.iter().enumerate() {
            if states[w].status != WorkerStatus::Active || incomplete == 0 {
                continue;
            }
            candidates.clear();
            candidates.extend(
                (0..n_items)
                    .filter(|&i| !seen[w][i] && items[i].annotations.len() < config.overlap),
            );
            if candidates.is_empty() {
                continue;
            }
            let item_idx = candidates[rng.gen_range(0..candidates.len())];
            seen[w][item_idx] = true;
            any_activity = true;

            let truth = tasks[item_idx].clone();
            match sample_worker_response(model, &truth, &mut rng) {
                WorkerResponse::TechnicalFailure => {
                    reassignments += 1;
                    events.push(SimEvent::TechnicalFailure {
                        event: next_event(),
                        worker: model.worker_id.clone(),
                        item: item_id(item_idx),
                    });
                }
                WorkerResponse::Annotation(mut ann) => {
                    ann.is_golden = golden[item_idx];
                    let duration = ann.duration_seconds.expect("simulated durations are set");
                    let score = wer(&truth, &ann.text).value;
                    let submit_event = next_event();
                    events.push(SimEvent::Submitted {
                        event: submit_event,
                        worker: model.worker_id.clone(),
                        item: item_id(item_idx),
                        duration_s: duration,
                        wer: score,
                    });
                    items[item_idx].annotations.push(ann);
                    if items[item_idx].annotations.len() == config.overlap {
                        incomplete -= 1;
                    }
                    ledger.pay_task(&model.worker_id, config.pay_per_task);
                    states[w].submissions += 1;
                    wer_sum += score;
                    n_annotations += 1;

                    // The triggering task stays compensated and in the
                    // dataset; the block only stops future assignments.
                    let spam_block = spam_monitor(&mut states[w], duration, config);
                    let golden_block =
                        golden[item_idx] && golden_monitor(&mut states[w], score, config);
                    if spam_block || golden_block {
                        let reason = if spam_block {
                            blocks_spam += 1;
                            states[w].status = WorkerStatus::BlockedSpam;
                            BlockReason::Spam
                        } else {
                            blocks_golden += 1;
                            states[w].status = WorkerStatus::BlockedGolden;
                            BlockReason::Golden
                        };
                        let block_event = next_event();
                        states[w].block_time = Some(block_event);
                        events.push(SimEvent::Blocked {
                            event: block_event,
                            worker: model.worker_id.clone(),
                            reason,
                        });
                    }
                }
            }
        }
        if !any_activity {
            return Err(Error::PartialCompletion {
                completed_items: n_items - incomplete,
                total_items: n_items,
                accepted_annotations: n_annotations,
            });
        }
    }

    let stats = SimStats {
        exam_attempts: pool.len(),
        exam_passes,
        exam_acceptance_rate: exam_passes as f64 / pool.len() as f64,
        blocks_spam,
        blocks_golden,
        reassignments,
        n_items,
        n_annotations,
        mean_annotation_wer: if n_annotations == 0 {
            0.0
        } else {
            wer_sum / n_annotations as f64
        },
    };
    Ok(SimOutput {
        dataset: items,
        ledger,
        stats,
        worker_states: pool
            .iter()
            .zip(states)
            .map(|(m, s)| (m.worker_id.clone(), s))
            .collect(),
        events,
    })
}
