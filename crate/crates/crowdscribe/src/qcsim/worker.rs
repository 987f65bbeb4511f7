//! Simulated worker behavior: a per-word noise channel standing in for
//! human transcription error, plus spammer and technical-failure modes.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::aggregate::{Annotation, WorkerId};
use crate::error::{Error, Result};
use crate::metrics::wer;
use crate::textnorm::NormalizedText;

use super::ProjectConfig;

/// Distribution of task durations in seconds; support must be positive.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SpeedProfile {
    Uniform { lo: f64, hi: f64 },
    LogNormal { mu: f64, sigma: f64 },
}

impl SpeedProfile {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SpeedProfile::Uniform { lo, hi } if lo > 0.0 && hi >= lo => Ok(()),
            SpeedProfile::LogNormal { sigma, .. } if sigma >= 0.0 => Ok(()),
            _ => Err(Error::contract(
                "speed profile must have strictly positive support",
            )),
        }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            SpeedProfile::Uniform { lo, hi } => {
                if lo == hi {
                    lo
                } else {
                    Uniform::new(lo, hi).sample(rng)
                }
            }
            SpeedProfile::LogNormal { mu, sigma } => LogNormal::new(mu, sigma)
                .expect("validated sigma")
                .sample(rng),
        }
    }
}

/// Response behavior of one simulated worker.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorkerModel {
    pub worker_id: WorkerId,
    /// Per-word substitution probability.
    pub p_sub: f64,
    /// Per-word deletion probability.
    pub p_del: f64,
    /// Per-gap insertion probability.
    pub p_ins: f64,
    /// Preferred substitutions, e.g. homophones; falls back to character
    /// mangling for words without an entry.
    pub homophone_table: Option<BTreeMap<String, Vec<String>>>,
    /// Probability of reporting a technical failure instead of responding.
    pub p_fail: f64,
    pub speed_profile: SpeedProfile,
    /// Spammers answer the main task with random tokens at high speed but
    /// behave like a normal low-noise worker during the exam.
    pub is_spammer: bool,
}

impl WorkerModel {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_sub", self.p_sub),
            ("p_del", self.p_del),
            ("p_ins", self.p_ins),
            ("p_fail", self.p_fail),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::contract(format!(
                    "worker {}: {name} = {p} outside [0, 1]",
                    self.worker_id
                )));
            }
        }
        self.speed_profile.validate()
    }
}

/// Outcome of presenting one task to a worker.
#[derive(Debug, Clone)]
pub enum WorkerResponse {
    Annotation(Annotation),
    TechnicalFailure,
}

/// Sample one worker response for a task with the given ground truth.
///
/// With probability `p_fail` the worker reports a technical failure.
/// Spammers emit random-token responses. Otherwise the truth passes
/// through the per-word deletion/substitution and per-gap insertion
/// channel, with the duration drawn from the speed profile.
pub fn sample_worker_response(
    model: &WorkerModel,
    truth: &NormalizedText,
    rng: &mut ChaCha8Rng,
) -> WorkerResponse {
    if model.p_fail > 0.0 && rng.gen::<f64>() < model.p_fail {
        return WorkerResponse::TechnicalFailure;
    }
    let text = if model.is_spammer {
        junk_text(truth, rng)
    } else {
        noisy_transcription(model, truth, rng)
    };
    let duration = model.speed_profile.sample(rng);
    WorkerResponse::Annotation(Annotation {
        worker_id: model.worker_id.clone(),
        text,
        duration_seconds: Some(duration),
        is_golden: false,
    })
}

fn noisy_transcription(
    model: &WorkerModel,
    truth: &NormalizedText,
    rng: &mut ChaCha8Rng,
) -> NormalizedText {
    let source = truth.tokens();
    let mut out: Vec<String> = Vec::with_capacity(source.len() + 2);
    let maybe_insert = |out: &mut Vec<String>, rng: &mut ChaCha8Rng| {
        if model.p_ins > 0.0 && !source.is_empty() && rng.gen::<f64>() < model.p_ins {
            out.push(source[rng.gen_range(0..source.len())].clone());
        }
    };
    for token in source {
        maybe_insert(&mut out, rng);
        if model.p_del > 0.0 && rng.gen::<f64>() < model.p_del {
            continue;
        }
        if model.p_sub > 0.0 && rng.gen::<f64>() < model.p_sub {
            out.push(substitute(model, token, rng));
        } else {
            out.push(token.clone());
        }
    }
    maybe_insert(&mut out, rng);
    NormalizedText::from_tokens(out)
}

fn substitute(model: &WorkerModel, token: &str, rng: &mut ChaCha8Rng) -> String {
    if let Some(table) = &model.homophone_table {
        if let Some(options) = table.get(token) {
            if !options.is_empty() {
                return options[rng.gen_range(0..options.len())].clone();
            }
        }
    }
    mangle(token, rng)
}

/// Produce a near-miss word by editing one character.
fn mangle(token: &str, rng: &mut ChaCha8Rng) -> String {
    let chars: Vec<char> = token.chars().collect();
    if chars.len() < 2 {
        // Single character: duplicating is the only safe in-alphabet edit.
        return chars.iter().chain(chars.iter()).collect();
    }
    let pos = rng.gen_range(0..chars.len());
    let mut edited = chars.clone();
    match rng.gen_range(0..3u8) {
        0 => {
            edited.remove(pos);
        }
        1 => {
            edited.insert(pos, chars[pos]);
        }
        _ => {
            let next = (pos + 1) % chars.len();
            edited.swap(pos, next);
        }
    }
    if edited == chars {
        edited.insert(0, chars[0]);
    }
    edited.into_iter().collect()
}

/// Random tokens drawn from the truth's own character set, so spam
/// survives normalization in any alphabet.
fn junk_text(truth: &NormalizedText, rng: &mut ChaCha8Rng) -> NormalizedText {
    let letters: Vec<char> = truth
        .joined()
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect();
    let n_tokens = rng.gen_range(1..=3usize);
    let tokens = (0..n_tokens)
        .map(|_| {
            let len = rng.gen_range(3..=6usize);
            (0..len)
                .map(|_| {
                    if letters.is_empty() {
                        'x'
                    } else {
                        letters[rng.gen_range(0..letters.len())]
                    }
                })
                .collect::<String>()
        })
        .collect();
    NormalizedText::from_tokens(tokens)
}

/// Have a worker transcribe the exam set; passes iff the mean WER does not
/// exceed the exam threshold. The exam ignores spam behavior and technical
/// failures: it measures transcription ability under honest effort.
pub fn run_exam(
    model: &WorkerModel,
    exam_items: &[NormalizedText],
    config: &ProjectConfig,
    rng: &mut ChaCha8Rng,
) -> (bool, f64) {
    assert_eq!(
        exam_items.len(),
        config.exam_size,
        "exam set size must equal config.exam_size"
    );
    let mut sum = 0.0;
    for truth in exam_items {
        let response = noisy_transcription(model, truth, rng);
        sum += wer(truth, &response).value;
    }
    let exam_wer = sum / exam_items.len() as f64;
    (exam_wer <= config.exam_threshold, exam_wer)
}

/// Knobs for building a synthetic worker pool. Worker ability is a total
/// noise rate theta drawn per worker from one of three bands, split
/// 60/25/15 between substitutions, deletions, and insertions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoolConfig {
    pub n_workers: usize,
    pub spammer_fraction: f64,
    pub good_fraction: f64,
    pub mediocre_fraction: f64,
    pub good_noise: (f64, f64),
    pub mediocre_noise: (f64, f64),
    pub poor_noise: (f64, f64),
    pub p_fail: f64,
    /// Honest task duration range, seconds.
    pub task_speed: (f64, f64),
    /// Spammer task duration range, seconds.
    pub spam_speed: (f64, f64),
}

impl Default for PoolConfig {
    fn default() -> Self {
        // Calibrated so the entrance exam admits about 64% of the pool and
        // random-choice aggregation over the resulting datasets lands in
        // the high-teens WER range. The mediocre band straddles the exam
        // boundary; note the measured WER of the channel runs below the
        // nominal noise rate because adjacent edits can merge.
        PoolConfig {
            n_workers: 60,
            spammer_fraction: 0.04,
            good_fraction: 0.46,
            mediocre_fraction: 0.24,
            good_noise: (0.08, 0.32),
            mediocre_noise: (0.36, 0.52),
            poor_noise: (0.60, 0.95),
            p_fail: 0.01,
            task_speed: (20.0, 90.0),
            spam_speed: (2.0, 6.0),
        }
    }
}

impl PoolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_workers == 0 {
            return Err(Error::contract("pool needs at least one worker"));
        }
        for (name, f) in [
            ("spammer_fraction", self.spammer_fraction),
            ("good_fraction", self.good_fraction),
            ("mediocre_fraction", self.mediocre_fraction),
        ] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::contract(format!("{name} = {f} outside [0, 1]")));
            }
        }
        if self.spammer_fraction + self.good_fraction + self.mediocre_fraction > 1.0 + 1e-9 {
            return Err(Error::contract("pool fractions sum to more than 1"));
        }
        Ok(())
    }
}

/// Build a deterministic worker pool from the config and an RNG stream.
pub fn build_pool(config: &PoolConfig, rng: &mut ChaCha8Rng) -> Result<Vec<WorkerModel>> {
    config.validate()?;
    let n = config.n_workers;
    let n_spam = (config.spammer_fraction * n as f64).round() as usize;
    let n_good = (config.good_fraction * n as f64).round() as usize;
    let n_mid = (config.mediocre_fraction * n as f64).round() as usize;
    let draw = |range: (f64, f64), rng: &mut ChaCha8Rng| -> f64 {
        if range.0 == range.1 {
            range.0
        } else {
            rng.gen_range(range.0..range.1)
        }
    };
    let mut pool = Vec::with_capacity(n);
    for i in 0..n {
        let spammer = i < n_spam;
        let theta = if spammer {
            draw((0.02, 0.10), rng)
        } else if i < n_spam + n_good {
            draw(config.good_noise, rng)
        } else if i < n_spam + n_good + n_mid {
            draw(config.mediocre_noise, rng)
        } else {
            draw(config.poor_noise, rng)
        };
        let speed = if spammer {
            config.spam_speed
        } else {
            config.task_speed
        };
        pool.push(WorkerModel {
            worker_id: WorkerId::new(format!("w{i:04}")),
            p_sub: 0.60 * theta,
            p_del: 0.25 * theta,
            p_ins: 0.15 * theta,
            homophone_table: None,
            p_fail: config.p_fail,
            speed_profile: SpeedProfile::Uniform {
                lo: speed.0,
                hi: speed.1,
            },
            is_spammer: spammer,
        });
    }
    Ok(pool)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textnorm::{normalize, Alphabet};
    use rand::SeedableRng;

    fn norm(s: &str) -> NormalizedText {
        normalize(s, Alphabet::Latin)
    }

    fn quiet_model(id: &str) -> WorkerModel {
        WorkerModel {
            worker_id: WorkerId::new(id),
            p_sub: 0.0,
            p_del: 0.0,
            p_ins: 0.0,
            homophone_table: None,
            p_fail: 0.0,
            speed_profile: SpeedProfile::Uniform { lo: 30.0, hi: 60.0 },
            is_spammer: false,
        }
    }

    #[test]
    fn zero_noise_is_verbatim() {
        let model = quiet_model("w");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        match sample_worker_response(&model, &norm("the quick brown fox"), &mut rng) {
            WorkerResponse::Annotation(a) => {
                assert_eq!(a.text.tokens(), norm("the quick brown fox").tokens());
                assert!(a.duration_seconds.unwrap() >= 30.0);
            }
            WorkerResponse::TechnicalFailure => panic!("unexpected failure"),
        }
    }

    #[test]
    fn certain_failure() {
        let model = WorkerModel {
            p_fail: 1.0,
            ..quiet_model("w")
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(matches!(
            sample_worker_response(&model, &norm("a b"), &mut rng),
            WorkerResponse::TechnicalFailure
        ));
    }

    #[test]
    fn certain_deletion_empties_the_text() {
        let model = WorkerModel {
            p_del: 1.0,
            ..quiet_model("w")
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        match sample_worker_response(&model, &norm("a b c"), &mut rng) {
            WorkerResponse::Annotation(a) => assert!(a.text.is_empty()),
            WorkerResponse::TechnicalFailure => panic!("unexpected failure"),
        }
    }

    #[test]
    fn homophone_table_preferred() {
        let mut table = BTreeMap::new();
        table.insert("their".to_string(), vec!["there".to_string()]);
        let model = WorkerModel {
            p_sub: 1.0,
            homophone_table: Some(table),
            ..quiet_model("w")
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        match sample_worker_response(&model, &norm("their"), &mut rng) {
            WorkerResponse::Annotation(a) => assert_eq!(a.text.joined(), "there"),
            WorkerResponse::TechnicalFailure => panic!("unexpected failure"),
        }
    }

    #[test]
    fn substitution_changes_the_token() {
        let model = WorkerModel {
            p_sub: 1.0,
            ..quiet_model("w")
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            if let WorkerResponse::Annotation(a) =
                sample_worker_response(&model, &norm("sample"), &mut rng)
            {
                assert_ne!(a.text.joined(), "sample");
            }
        }
    }

    #[test]
    fn exam_pass_boundary_is_inclusive() {
        let config = ProjectConfig::default();
        let truths: Vec<NormalizedText> = (0..10).map(|i| norm(&format!("line {i}"))).collect();
        let model = quiet_model("w");
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (pass, exam_wer) = run_exam(&model, &truths, &config, &mut rng);
        assert!(pass);
        assert_eq!(exam_wer, 0.0);

        // A full-deletion worker scores exactly WER 1.0 on every item, so
        // the mean sits exactly on a threshold of 1.0: "or less" admits it.
        let all_del = WorkerModel {
            p_del: 1.0,
            ..quiet_model("w")
        };
        let truths: Vec<NormalizedText> = (0..10)
            .map(|_| norm("five little words right here"))
            .collect();
        let at_bar = ProjectConfig {
            exam_threshold: 1.0,
            ..ProjectConfig::default()
        };
        let (pass, exam_wer) = run_exam(&all_del, &truths, &at_bar, &mut rng);
        assert_eq!(exam_wer, 1.0);
        assert!(pass, "mean WER exactly at the threshold must pass");
        let below_bar = ProjectConfig {
            exam_threshold: 0.99,
            ..ProjectConfig::default()
        };
        let (pass, _) = run_exam(&all_del, &truths, &below_bar, &mut rng);
        assert!(!pass);
    }

    #[test]
    fn spammer_emits_junk_fast() {
        let model = WorkerModel {
            is_spammer: true,
            speed_profile: SpeedProfile::Uniform { lo: 2.0, hi: 6.0 },
            ..quiet_model("w")
        };
        let truth = norm("a perfectly ordinary sentence for testing");
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        match sample_worker_response(&model, &truth, &mut rng) {
            WorkerResponse::Annotation(a) => {
                assert!(wer(&truth, &a.text).value > 0.5);
                assert!(a.duration_seconds.unwrap() < 10.0);
            }
            WorkerResponse::TechnicalFailure => panic!("unexpected failure"),
        }
    }

    #[test]
    fn pool_is_deterministic() {
        let config = PoolConfig::default();
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        let p1 = build_pool(&config, &mut r1).unwrap();
        let p2 = build_pool(&config, &mut r2).unwrap();
        assert_eq!(p1.len(), p2.len());
        for (a, b) in p1.iter().zip(&p2) {
            assert_eq!(a.worker_id, b.worker_id);
            assert_eq!(a.p_sub, b.p_sub);
            assert_eq!(a.is_spammer, b.is_spammer);
        }
    }
}
