//! Live-mode clients against a local scripted server.

#[path = "common/stub.rs"]
mod stub;

use std::sync::atomic::Ordering;
use std::time::Duration;

use serde_json::Value;
use sersynth::synthesis::{
    chat_sample, tts_synthesize, ChatRequest, ClientConfig, SynthesisJob, TtsClient,
};
use sersynth::Error;
use stub::{serve, Reply};

fn live(url: &str, key_var: &str) -> ClientConfig {
    std::env::set_var(key_var, "secret");
    ClientConfig {
        endpoint_url: url.into(),
        api_key_env_var: key_var.into(),
        mock_mode: false,
        backoff_base_ms: 5,
        timeout_s: 10,
        ..ClientConfig::default()
    }
}

fn request(n: u32) -> ChatRequest {
    ChatRequest {
        system: "sys".into(),
        user: "say something sad".into(),
        n_samples: n,
        temperature: 0.7,
        model_name: "gpt-4".into(),
    }
}

const TWO_CHOICES: &str = r#"{"choices":[{"message":{"role":"assistant","content":"one"}},{"message":{"role":"assistant","content":"two"}}]}"#;

#[test]
fn rate_limit_then_success_retries_once() {
    let stub = serve(
        vec![Reply::new(429, "slow down"), Reply::new(200, TWO_CHOICES)],
        Duration::ZERO,
    );
    let out = chat_sample(&request(2), &live(&stub.url, "SERSYNTH_TEST_KEY_A")).unwrap();
    assert_eq!(out, vec!["one", "two"]);
    assert_eq!(stub.stats.requests.load(Ordering::SeqCst), 2);

    let rec = stub.stats.recorded.lock().unwrap();
    assert_eq!(rec[1].header("authorization"), Some("Bearer secret"));
    let body: Value = serde_json::from_slice(&rec[1].body).unwrap();
    assert_eq!(body["n"], 2);
    assert_eq!(body["model"], "gpt-4");
    assert_eq!(body["messages"][0]["role"], "system");
    assert_eq!(body["messages"][1]["content"], "say something sad");
}

#[test]
fn exhausted_retries_report_last_status() {
    let stub = serve(vec![Reply::new(503, "down")], Duration::ZERO);
    let cfg = ClientConfig {
        retry_limit: 2,
        ..live(&stub.url, "SERSYNTH_TEST_KEY_B")
    };
    match chat_sample(&request(1), &cfg) {
        Err(Error::Transport { status, .. }) => assert_eq!(status, Some(503)),
        other => panic!("expected transport error, got {other:?}"),
    }
    assert_eq!(stub.stats.requests.load(Ordering::SeqCst), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let stub = serve(vec![Reply::new(400, "bad")], Duration::ZERO);
    let err = chat_sample(&request(1), &live(&stub.url, "SERSYNTH_TEST_KEY_C")).unwrap_err();
    assert!(matches!(
        err,
        Error::Transport {
            status: Some(400),
            ..
        }
    ));
    assert_eq!(stub.stats.requests.load(Ordering::SeqCst), 1);
}

#[test]
fn missing_key_names_the_variable() {
    let cfg = ClientConfig {
        endpoint_url: "http://127.0.0.1:9/".into(),
        api_key_env_var: "SERSYNTH_TEST_KEY_UNSET".into(),
        mock_mode: false,
        ..ClientConfig::default()
    };
    let err = chat_sample(&request(1), &cfg).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    assert!(err.to_string().contains("SERSYNTH_TEST_KEY_UNSET"));
    assert_eq!(err.exit_code(), 2);
}

fn job(dir: &std::path::Path, i: usize) -> SynthesisJob {
    SynthesisJob {
        id: format!("job{i}"),
        text: "I lost it & I miss it".into(),
        speaker_voice: "VoiceA".into(),
        style: "sad".into(),
        output_path: dir
            .join(format!("job{i}.wav"))
            .to_string_lossy()
            .into_owned(),
    }
}

#[test]
fn tts_writes_returned_audio() {
    let stub = serve(vec![Reply::new(200, vec![7u8; 1000])], Duration::ZERO);
    let dir = tempfile::tempdir().unwrap();
    let j = job(dir.path(), 0);
    let n = tts_synthesize(&j, &live(&stub.url, "SERSYNTH_TEST_KEY_D")).unwrap();
    assert_eq!(n, 1000);
    assert_eq!(std::fs::read(&j.output_path).unwrap(), vec![7u8; 1000]);

    let rec = stub.stats.recorded.lock().unwrap();
    assert_eq!(rec[0].header("content-type"), Some("application/ssml+xml"));
    assert_eq!(rec[0].header("ocp-apim-subscription-key"), Some("secret"));
    let ssml = String::from_utf8(rec[0].body.clone()).unwrap();
    assert!(ssml
        .contains(r#"<mstts:express-as style="sad">I lost it &amp; I miss it</mstts:express-as>"#));
}

#[test]
fn concurrency_is_bounded() {
    let stub = serve(
        vec![Reply::new(200, vec![0u8; 10])],
        Duration::from_millis(40),
    );
    let dir = tempfile::tempdir().unwrap();
    let cfg = ClientConfig {
        max_concurrent: 3,
        ..live(&stub.url, "SERSYNTH_TEST_KEY_E")
    };
    let jobs: Vec<_> = (0..12).map(|i| job(dir.path(), i)).collect();
    let client = TtsClient::new(cfg).unwrap();
    assert!(client.synthesize_all(&jobs).iter().all(|r| r.is_ok()));
    let peak = stub.stats.peak.load(Ordering::SeqCst);
    assert!(peak <= 3, "peak concurrency {peak}");
    assert!(peak >= 2, "requests never overlapped");
    assert_eq!(client.take_records().len(), 12);
}
