//! Pre-summary sliding-shot annotation: pick keyframes, summarize them,
//! caption each keyframe with the summary as context, then ask for QA pairs.

mod http;
mod mock;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use http::{HttpClient, HttpConfig, DEFAULT_TOKEN_ENV};
pub use mock::{MockClient, MockConfig};

use crate::defaults;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::retrieval::nms_select;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameRef {
    pub index: usize,
    pub path: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Summary,
    Caption,
    Qa,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Step::Summary => "summary",
            Step::Caption => "caption",
            Step::Qa => "qa",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionRequest {
    pub purpose: Step,
    /// Frames the request is about. Summary and caption requests send these
    /// as images; QA requests only reference them.
    pub frames: Vec<FrameRef>,
    pub prompt: String,
    pub max_output_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClientError {
    #[error("rate limited")]
    RateLimited { retry_after: Option<Duration> },
    #[error("transient failure: {0}")]
    Transient(String),
    #[error("fatal failure: {0}")]
    Fatal(String),
}

/// Anything that turns a prompt plus frame references into text. Called
/// from several worker threads at once.
pub trait CaptionerClient: Send + Sync {
    fn request(&self, req: &CaptionRequest) -> std::result::Result<String, ClientError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompts {
    pub summary: String,
    pub caption: String,
    pub qa: String,
}

impl Prompts {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl Default for Prompts {
    fn default() -> Self {
        Prompts::from_json(defaults::PROMPTS_JSON).expect("bundled prompts parse")
    }
}

fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    vars.iter().fold(template.to_string(), |s, (k, v)| {
        s.replace(&format!("{{{k}}}"), v)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Keyframes sent for the summary; also the set that gets captioned.
    pub summary_budget: usize,
    pub caption_concurrency: usize,
    /// Retries after the first attempt.
    pub retry_limit: usize,
    /// Delay before retry n is `backoff_ms[min(n, len - 1)]`.
    pub backoff_ms: Vec<u64>,
    /// Weight of the dynamic-scene score in the keyframe blend.
    pub mix_weight: f64,
    /// NMS radius for keyframe picks; derived from length and budget if unset.
    pub keyframe_radius: Option<usize>,
    pub summary_tokens: usize,
    pub caption_tokens: usize,
    pub qa_tokens: usize,
    pub prompts: Prompts,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            summary_budget: 10,
            caption_concurrency: 4,
            retry_limit: 3,
            backoff_ms: vec![500, 1000, 2000],
            mix_weight: 0.5,
            keyframe_radius: None,
            summary_tokens: 512,
            caption_tokens: 300,
            qa_tokens: 2048,
            prompts: Prompts::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.summary_budget == 0 {
            return Err(Error::invalid("summary_budget must be at least 1"));
        }
        if self.caption_concurrency == 0 {
            return Err(Error::invalid("caption_concurrency must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.mix_weight) {
            return Err(Error::invalid("mix_weight must lie in [0, 1]"));
        }
        Ok(())
    }

    fn backoff(&self, retry: usize) -> Duration {
        match self.backoff_ms.len() {
            0 => Duration::ZERO,
            n => Duration::from_millis(self.backoff_ms[retry.min(n - 1)]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Ok,
    RateLimited,
    Transient,
    Fatal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub step: Step,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame: Option<usize>,
    /// 1-based.
    pub attempt: usize,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineFailure {
    pub step: Step,
    pub message: String,
    pub attempts: Vec<AttemptRecord>,
    /// Client output that could not be used, if any.
    pub raw: Option<String>,
}

impl fmt::Display for PipelineFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} step failed after {} attempt(s): {}",
            self.step,
            self.attempts.iter().filter(|a| a.step == self.step).count(),
            self.message
        )
    }
}

fn failure(
    step: Step,
    message: impl Into<String>,
    attempts: &[AttemptRecord],
    raw: Option<String>,
) -> Error {
    Error::Pipeline(Box::new(PipelineFailure {
        step,
        message: message.into(),
        attempts: sorted_log(attempts.to_vec()),
        raw,
    }))
}

fn sorted_log(mut log: Vec<AttemptRecord>) -> Vec<AttemptRecord> {
    log.sort_by_key(|a| (a.step, a.frame, a.attempt));
    log
}

fn call_with_retry(
    client: &dyn CaptionerClient,
    req: &CaptionRequest,
    frame: Option<usize>,
    config: &PipelineConfig,
    log: &mut Vec<AttemptRecord>,
) -> std::result::Result<String, ClientError> {
    let mut attempt = 0;
    loop {
        attempt += 1;
        let result = client.request(req);
        let (outcome, message) = match &result {
            Ok(_) => (Outcome::Ok, None),
            Err(e @ ClientError::RateLimited { .. }) => (Outcome::RateLimited, Some(e.to_string())),
            Err(e @ ClientError::Transient(_)) => (Outcome::Transient, Some(e.to_string())),
            Err(e @ ClientError::Fatal(_)) => (Outcome::Fatal, Some(e.to_string())),
        };
        log.push(AttemptRecord {
            step: req.purpose,
            frame,
            attempt,
            outcome,
            message,
        });
        let wait = match &result {
            Ok(_) | Err(ClientError::Fatal(_)) => return result,
            _ if attempt > config.retry_limit => return result,
            Err(ClientError::RateLimited { retry_after }) => config
                .backoff(attempt - 1)
                .max(retry_after.unwrap_or_default()),
            Err(ClientError::Transient(_)) => config.backoff(attempt - 1),
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

/// Blend the two per-frame signals and pick up to `budget` peaks by NMS,
/// returned in ascending frame order.
pub fn sample_keyframes(
    dynamic: &[f64],
    static_: &[f64],
    budget: usize,
    weight: f64,
    radius: Option<usize>,
) -> Result<Vec<usize>> {
    if dynamic.len() != static_.len() {
        return Err(Error::LengthMismatch {
            what: "static scores",
            expected: dynamic.len(),
            actual: static_.len(),
        });
    }
    if dynamic.is_empty() {
        return Err(Error::invalid("no frames to sample"));
    }
    if budget == 0 || budget > dynamic.len() {
        return Err(Error::invalid(format!(
            "keyframe budget {budget} outside 1..={}",
            dynamic.len()
        )));
    }
    let blend: Vec<f64> = dynamic
        .iter()
        .zip(static_)
        .map(|(d, s)| weight * d + (1.0 - weight) * s)
        .collect();
    let radius = radius.unwrap_or((dynamic.len() / budget).saturating_sub(1) / 2);
    let mut picks = nms_select(&blend, radius, budget)?;
    picks.sort_unstable();
    Ok(picks)
}

pub fn summarize_video(
    client: &dyn CaptionerClient,
    keyframes: &[FrameRef],
    config: &PipelineConfig,
    log: &mut Vec<AttemptRecord>,
) -> Result<String> {
    if keyframes.is_empty() || keyframes.len() > config.summary_budget {
        return Err(Error::invalid(format!(
            "summary needs 1..={} keyframes, got {}",
            config.summary_budget,
            keyframes.len()
        )));
    }
    let req = CaptionRequest {
        purpose: Step::Summary,
        frames: keyframes.to_vec(),
        prompt: fill(
            &config.prompts.summary,
            &[("count", &keyframes.len().to_string())],
        ),
        max_output_tokens: config.summary_tokens,
    };
    match call_with_retry(client, &req, None, config, log) {
        Ok(text) if !text.trim().is_empty() => Ok(text),
        Ok(_) => Err(failure(Step::Summary, "empty summary", log, None)),
        Err(e) => Err(failure(Step::Summary, e.to_string(), log, None)),
    }
}

pub fn caption_frame(
    client: &dyn CaptionerClient,
    summary: &str,
    frame: &FrameRef,
    video_length: usize,
    config: &PipelineConfig,
    log: &mut Vec<AttemptRecord>,
) -> std::result::Result<String, ClientError> {
    let req = CaptionRequest {
        purpose: Step::Caption,
        frames: vec![frame.clone()],
        prompt: fill(
            &config.prompts.caption,
            &[
                ("summary", summary),
                ("frame", &frame.index.to_string()),
                ("length", &video_length.to_string()),
            ],
        ),
        max_output_tokens: config.caption_tokens,
    };
    call_with_retry(client, &req, Some(frame.index), config, log)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QaTask {
    FrameRetrieval,
    MomentRetrieval,
    DenseCaptioning,
    VideoSummary,
    TemporalReasoning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaPair {
    pub task: QaTask,
    pub question: String,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<Interval>,
}

impl QaPair {
    pub fn in_bounds(&self, video_length: usize) -> bool {
        self.frame.is_none_or(|f| f < video_length)
            && self.interval.is_none_or(|iv| iv.fits(video_length))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParsedQas {
    pub qas: Vec<QaPair>,
    pub rejected: usize,
}

/// Accepts a JSON array of QA objects or `{"qas": [...]}`, optionally
/// wrapped in a Markdown code fence. Items that do not parse or point
/// outside the video are counted and dropped.
pub fn parse_qas(raw: &str, video_length: usize) -> std::result::Result<ParsedQas, String> {
    let mut text = raw.trim();
    if let Some(rest) = text.strip_prefix("```") {
        let rest = rest.trim_start_matches(|c: char| c.is_ascii_alphanumeric());
        text = rest.trim_end().strip_suffix("```").unwrap_or(rest).trim();
    }
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let items = match value {
        serde_json::Value::Array(items) => items,
        serde_json::Value::Object(mut obj) => match obj.remove("qas") {
            Some(serde_json::Value::Array(items)) => items,
            _ => return Err("expected an array or an object with a `qas` array".into()),
        },
        _ => return Err("expected an array or an object with a `qas` array".into()),
    };
    let mut out = ParsedQas::default();
    for item in items {
        match serde_json::from_value::<QaPair>(item) {
            Ok(qa) if qa.in_bounds(video_length) => out.qas.push(qa),
            _ => out.rejected += 1,
        }
    }
    Ok(out)
}

pub fn generate_qas(
    client: &dyn CaptionerClient,
    summary: &str,
    captions: &BTreeMap<usize, String>,
    frames: &[FrameRef],
    video_length: usize,
    config: &PipelineConfig,
    log: &mut Vec<AttemptRecord>,
) -> Result<ParsedQas> {
    if captions.is_empty() {
        return Err(failure(
            Step::Qa,
            "no captions to generate questions from",
            log,
            None,
        ));
    }
    let listing: String = captions
        .iter()
        .map(|(i, c)| format!("frame {i}: {c}\n"))
        .collect();
    let req = CaptionRequest {
        purpose: Step::Qa,
        frames: frames
            .iter()
            .filter(|f| captions.contains_key(&f.index))
            .cloned()
            .collect(),
        prompt: fill(
            &config.prompts.qa,
            &[("summary", summary), ("captions", listing.trim_end())],
        ),
        max_output_tokens: config.qa_tokens,
    };
    let raw = call_with_retry(client, &req, None, config, log)
        .map_err(|e| failure(Step::Qa, e.to_string(), log, None))?;
    parse_qas(&raw, video_length).map_err(|e| {
        failure(
            Step::Qa,
            format!("unparseable QA response: {e}"),
            log,
            Some(raw.clone()),
        )
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoInput {
    pub video_id: String,
    pub frames: Vec<FrameRef>,
    pub dynamic_scores: Vec<f64>,
    pub static_scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationBundle {
    pub video_id: String,
    pub video_length: usize,
    pub keyframes: Vec<usize>,
    pub summary: String,
    pub captions: BTreeMap<usize, String>,
    pub uncaptioned: Vec<usize>,
    pub qas: Vec<QaPair>,
    pub rejected_qas: usize,
    pub attempts: Vec<AttemptRecord>,
}

impl AnnotationBundle {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(format!("bundle {}: {m}", self.video_id)));
        if let Some(k) = self.keyframes.iter().find(|&&k| k >= self.video_length) {
            return bad(format!("keyframe {k} outside video"));
        }
        if let Some(f) = self.captions.keys().find(|f| !self.keyframes.contains(f)) {
            return bad(format!("caption for frame {f}, which is not a keyframe"));
        }
        if let Some(f) = self
            .uncaptioned
            .iter()
            .find(|f| !self.keyframes.contains(f))
        {
            return bad(format!("uncaptioned frame {f} is not a keyframe"));
        }
        if self.qas.iter().any(|qa| !qa.in_bounds(self.video_length)) {
            return bad("QA answer outside video".into());
        }
        Ok(())
    }
}

fn caption_all(
    client: &dyn CaptionerClient,
    summary: &str,
    keyframes: &[FrameRef],
    video_length: usize,
    config: &PipelineConfig,
) -> (BTreeMap<usize, String>, Vec<usize>, Vec<AttemptRecord>) {
    let next = AtomicUsize::new(0);
    let results = Mutex::new(Vec::with_capacity(keyframes.len()));
    let workers = config.caption_concurrency.min(keyframes.len());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| {
                let mut local = Vec::new();
                loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(frame) = keyframes.get(i) else { break };
                    let mut log = Vec::new();
                    let r = caption_frame(client, summary, frame, video_length, config, &mut log);
                    local.push((frame.index, r, log));
                }
                results.lock().expect("caption results lock").extend(local);
            });
        }
    });

    let mut captions = BTreeMap::new();
    let mut uncaptioned = Vec::new();
    let mut log = Vec::new();
    for (idx, r, attempts) in results.into_inner().expect("caption results lock") {
        match r {
            Ok(text) => {
                captions.insert(idx, text);
            }
            Err(_) => uncaptioned.push(idx),
        }
        log.extend(attempts);
    }
    uncaptioned.sort_unstable();
    (captions, uncaptioned, log)
}

pub fn run_pipeline(
    client: &dyn CaptionerClient,
    video: &VideoInput,
    config: &PipelineConfig,
) -> Result<AnnotationBundle> {
    config.validate()?;
    let length = video.frames.len();
    if let Some((pos, f)) = video.frames.iter().enumerate().find(|(i, f)| f.index != *i) {
        return Err(Error::invalid(format!(
            "frame at position {pos} has index {}, expected {pos}",
            f.index
        )));
    }
    if video.dynamic_scores.len() != length {
        return Err(Error::LengthMismatch {
            what: "dynamic scores",
            expected: length,
            actual: video.dynamic_scores.len(),
        });
    }
    let budget = config.summary_budget.min(length);
    let picks = sample_keyframes(
        &video.dynamic_scores,
        &video.static_scores,
        budget,
        config.mix_weight,
        config.keyframe_radius,
    )?;
    let keyframes: Vec<FrameRef> = picks.iter().map(|&i| video.frames[i].clone()).collect();

    let mut log = Vec::new();
    let summary = summarize_video(client, &keyframes, config, &mut log)?;
    let (captions, uncaptioned, caption_log) =
        caption_all(client, &summary, &keyframes, length, config);
    log.extend(caption_log);
    let parsed = generate_qas(
        client, &summary, &captions, &keyframes, length, config, &mut log,
    )?;

    let bundle = AnnotationBundle {
        video_id: video.video_id.clone(),
        video_length: length,
        keyframes: picks,
        summary,
        captions,
        uncaptioned,
        qas: parsed.qas,
        rejected_qas: parsed.rejected,
        attempts: sorted_log(log),
    };
    bundle.validate()?;
    Ok(bundle)
}
