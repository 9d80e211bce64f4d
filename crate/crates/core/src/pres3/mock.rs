use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{CaptionRequest, CaptionerClient, ClientError, QaTask, Step};

/// Offline client whose output depends only on the request and the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockConfig {
    pub seed: u64,
    /// Each distinct request fails this many times before succeeding.
    pub fail_first_attempts: usize,
    /// Report those failures as rate limits instead of transient errors.
    pub rate_limited: bool,
    /// Caption requests for these frames always fail fatally.
    pub fatal_caption_frames: Vec<usize>,
    pub qa_count: usize,
    /// How many of the QA items point outside the video.
    pub malformed_qas: usize,
    /// Answer QA requests with text that is not JSON.
    pub garbage_qa: bool,
    /// Simulated service time per request.
    pub latency_ms: u64,
}

impl Default for MockConfig {
    fn default() -> Self {
        MockConfig {
            seed: 0,
            fail_first_attempts: 0,
            rate_limited: false,
            fatal_caption_frames: Vec::new(),
            qa_count: 12,
            malformed_qas: 0,
            garbage_qa: false,
            latency_ms: 0,
        }
    }
}

#[derive(Debug, Default)]
pub struct MockClient {
    config: MockConfig,
    attempts: Mutex<HashMap<u64, usize>>,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
    requests: AtomicUsize,
}

const SUBJECTS: [&str; 4] = ["a dancer", "a runner", "a person", "an athlete"];
const PLACES: [&str; 4] = ["in a studio", "on a track", "in a park", "on a stage"];
const ACTIONS: [&str; 6] = [
    "raises both arms",
    "turns to the left",
    "crouches low",
    "jumps forward",
    "spins around",
    "walks toward the camera",
];

impl MockClient {
    pub fn new(config: MockConfig) -> Self {
        MockClient {
            config,
            ..Default::default()
        }
    }

    pub fn config(&self) -> &MockConfig {
        &self.config
    }

    /// Highest number of requests that were being served at the same time.
    pub fn max_in_flight(&self) -> usize {
        self.max_in_flight.load(Ordering::SeqCst)
    }

    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    fn respond(&self, req: &CaptionRequest, key: u64) -> Result<String, ClientError> {
        let mut rng = ChaCha8Rng::seed_from_u64(key ^ self.config.seed);
        let pick = |rng: &mut ChaCha8Rng, xs: &[&'static str]| xs[rng.random_range(0..xs.len())];
        match req.purpose {
            Step::Summary => Ok(format!(
                "{} {} {}, then {}, across {} keyframes.",
                capitalize(pick(&mut rng, &SUBJECTS)),
                pick(&mut rng, &PLACES),
                pick(&mut rng, &ACTIONS),
                pick(&mut rng, &ACTIONS),
                req.frames.len()
            )),
            Step::Caption => {
                let frame = req.frames.first().map_or(0, |f| f.index);
                if self.config.fatal_caption_frames.contains(&frame) {
                    return Err(ClientError::Fatal(format!("frame {frame} rejected")));
                }
                Ok(format!(
                    "In frame {frame}, {} {}.",
                    pick(&mut rng, &SUBJECTS),
                    pick(&mut rng, &ACTIONS)
                ))
            }
            Step::Qa if self.config.garbage_qa => {
                Ok("I cannot produce questions for this video.".into())
            }
            Step::Qa => Ok(self.qa_json(req, &mut rng)),
        }
    }

    fn qa_json(&self, req: &CaptionRequest, rng: &mut ChaCha8Rng) -> String {
        const TASKS: [QaTask; 5] = [
            QaTask::FrameRetrieval,
            QaTask::MomentRetrieval,
            QaTask::DenseCaptioning,
            QaTask::VideoSummary,
            QaTask::TemporalReasoning,
        ];
        let frames: Vec<usize> = req.frames.iter().map(|f| f.index).collect();
        let valid = self
            .config
            .qa_count
            .saturating_sub(self.config.malformed_qas);
        let mut items = Vec::with_capacity(self.config.qa_count);
        for i in 0..self.config.qa_count {
            let task = TASKS[i % TASKS.len()];
            let action = ACTIONS[rng.random_range(0..ACTIONS.len())];
            let mut item = json!({
                "task": task,
                "question": format!("When does the person {}?", action.split_whitespace().next().unwrap_or("move")),
                "answer": format!("The person {action}."),
            });
            if i >= valid {
                item["frame"] = json!(1u64 << 40);
            } else if !frames.is_empty() {
                let a = frames[rng.random_range(0..frames.len())];
                let b = frames[rng.random_range(0..frames.len())];
                match task {
                    QaTask::FrameRetrieval => item["frame"] = json!(a),
                    QaTask::MomentRetrieval | QaTask::TemporalReasoning => {
                        item["interval"] = json!([a.min(b), a.max(b)])
                    }
                    _ => {}
                }
            }
            items.push(item);
        }
        serde_json::to_string(&items).expect("QA items serialize")
    }
}

impl CaptionerClient for MockClient {
    fn request(&self, req: &CaptionRequest) -> Result<String, ClientError> {
        self.requests.fetch_add(1, Ordering::SeqCst);
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.max_in_flight.fetch_max(now, Ordering::SeqCst);
        if self.config.latency_ms > 0 {
            std::thread::sleep(Duration::from_millis(self.config.latency_ms));
        }

        let key = fnv1a(&serde_json::to_vec(req).expect("request serializes"));
        let attempt = {
            let mut seen = self.attempts.lock().expect("mock attempts lock");
            let n = seen.entry(key).or_insert(0);
            *n += 1;
            *n
        };
        let result = if attempt <= self.config.fail_first_attempts {
            if self.config.rate_limited {
                Err(ClientError::RateLimited {
                    retry_after: Some(Duration::ZERO),
                })
            } else {
                Err(ClientError::Transient(format!(
                    "injected failure {attempt}"
                )))
            }
        } else {
            self.respond(req, key)
        };

        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        result
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}
