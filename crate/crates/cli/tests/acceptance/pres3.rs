use std::time::{Duration, Instant};

use bestshot_core::pres3::{
    run_pipeline, FrameRef, MockClient, MockConfig, PipelineConfig, Step, VideoInput,
};

use crate::{check, Outcome};

fn video(n: usize) -> VideoInput {
    VideoInput {
        video_id: "clip".into(),
        frames: (0..n)
            .map(|i| FrameRef {
                index: i,
                path: format!("clip/{i:05}.jpg"),
            })
            .collect(),
        dynamic_scores: (0..n).map(|i| ((i as f64) * 0.7).sin()).collect(),
        static_scores: (0..n).map(|i| ((i as f64) * 0.3).cos()).collect(),
    }
}

fn config(concurrency: usize, retry_limit: usize) -> PipelineConfig {
    PipelineConfig {
        caption_concurrency: concurrency,
        retry_limit,
        backoff_ms: vec![0],
        ..Default::default()
    }
}

fn determinism() -> Result<(), String> {
    let mock = MockConfig {
        seed: 17,
        fail_first_attempts: 1,
        ..Default::default()
    };
    let run = || {
        let b = run_pipeline(&MockClient::new(mock.clone()), &video(30), &config(4, 3))
            .map_err(|e| e.to_string())?;
        serde_json::to_string(&b).map_err(|e| e.to_string())
    };
    let first = run()?;
    for _ in 0..3 {
        check(run()? == first, || "bundles differ between runs".into())?;
    }
    Ok(())
}

fn concurrency() -> Result<String, String> {
    let mut seen = Vec::new();
    for limit in [1, 2, 3, 4, 6] {
        let client = MockClient::new(MockConfig {
            latency_ms: 3,
            ..Default::default()
        });
        run_pipeline(&client, &video(40), &config(limit, 3)).map_err(|e| e.to_string())?;
        let peak = client.max_in_flight();
        check(peak <= limit, || {
            format!("limit {limit} exceeded: {peak} in flight")
        })?;
        seen.push(format!("{peak}/{limit}"));
    }
    Ok(seen.join(" "))
}

fn retries() -> Result<(), String> {
    for retry_limit in 0..=3 {
        // exactly enough failures to use every retry
        let client = MockClient::new(MockConfig {
            fail_first_attempts: retry_limit,
            ..Default::default()
        });
        let b = run_pipeline(&client, &video(20), &config(2, retry_limit))
            .map_err(|e| e.to_string())?;
        let summary = b
            .attempts
            .iter()
            .filter(|a| a.step == Step::Summary)
            .count();
        check(summary == retry_limit + 1, || {
            format!("retry_limit {retry_limit}: {summary} summary attempts")
        })?;
        for f in &b.keyframes {
            let n = b.attempts.iter().filter(|a| a.frame == Some(*f)).count();
            check(n == retry_limit + 1, || {
                format!("retry_limit {retry_limit}: frame {f} took {n} attempts")
            })?;
        }

        // one failure too many: the summary step gives up after retry_limit + 1 requests
        let client = MockClient::new(MockConfig {
            fail_first_attempts: retry_limit + 1,
            ..Default::default()
        });
        let err = run_pipeline(&client, &video(20), &config(2, retry_limit));
        check(err.is_err(), || {
            format!("retry_limit {retry_limit}: pipeline should fail")
        })?;
        check(client.request_count() == retry_limit + 1, || {
            format!(
                "retry_limit {retry_limit}: {} requests",
                client.request_count()
            )
        })?;
    }
    Ok(())
}

pub fn run() -> Outcome {
    determinism()?;
    let peaks = concurrency()?;
    retries()?;
    let started = Instant::now();
    let b = run_pipeline(
        &MockClient::new(MockConfig::default()),
        &video(20),
        &PipelineConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let took = started.elapsed();
    check(took < Duration::from_secs(1), || {
        format!("20-frame fixture took {took:?}")
    })?;
    check(b.captions.len() == 10 && !b.qas.is_empty(), || {
        "incomplete bundle".into()
    })?;
    Ok(format!(
        "deterministic bundles; peak in flight {peaks}; retries 0-3 exact; 20 frames in {:.1}ms",
        took.as_secs_f64() * 1e3
    ))
}
