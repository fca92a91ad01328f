mod common;

use std::time::Duration;

use chartlens::som::{build_zero_shot_prompt, ChatModel, HttpChatModel, MllmConfig, MllmError};
use chartlens::{ChartImage, ChartKind};
use common::{Reply, StubServer};

fn model(s: &StubServer, timeout_ms: u64, key: Option<&str>) -> HttpChatModel {
    let mut cfg = MllmConfig::new(format!("{}/v1", s.base_url), "test-model");
    cfg.timeout = Duration::from_millis(timeout_ms);
    cfg.api_key = key.map(str::to_string);
    HttpChatModel::new(cfg)
}

fn prompt() -> chartlens::som::PromptBundle {
    build_zero_shot_prompt(ChartImage::filled("c", 16, 16, [0, 0, 0]).unwrap(), "q?", "a.", ChartKind::Bar)
}

const OK: &str = r#"{"choices": [{"message": {"role": "assistant", "content": "VALIDATION: CONSISTENT\nATTRIBUTION: [B1]"}}]}"#;

#[test]
fn request_shape_and_bearer_key() {
    let s = StubServer::start(|_, _| Reply::json(200, OK));
    let text = model(&s, 2000, Some("sekret")).complete(&prompt(), "r1").unwrap();
    assert!(text.ends_with("ATTRIBUTION: [B1]"));
    let req = &s.requests()[0];
    assert_eq!(req.path, "/v1/chat/completions");
    assert_eq!(req.header("authorization"), Some("Bearer sekret"));
    let body = req.json();
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["temperature"], 0);
    assert_eq!(body["messages"][0]["role"], "system");
    let parts = body["messages"][1]["content"].as_array().unwrap();
    assert!(parts[0]["text"].as_str().unwrap().contains("Question: q?"));
    assert!(parts[1]["image_url"]["url"].as_str().unwrap().starts_with("data:image/png;base64,"));
}

#[test]
fn no_key_sends_no_authorization() {
    let s = StubServer::start(|_, _| Reply::json(200, OK));
    model(&s, 2000, None).complete(&prompt(), "r1").unwrap();
    assert_eq!(s.requests()[0].header("authorization"), None);
}

#[test]
fn server_error_then_success_is_retried() {
    let s = StubServer::start(|i, _| if i == 0 { Reply::json(500, "oops") } else { Reply::json(200, OK) });
    assert!(model(&s, 2000, None).complete(&prompt(), "r1").is_ok());
    assert_eq!(s.requests().len(), 2);
}

#[test]
fn rate_limit_is_retried() {
    let s = StubServer::start(|i, _| if i == 0 { Reply::json(429, "slow down") } else { Reply::json(200, OK) });
    assert!(model(&s, 2000, None).complete(&prompt(), "r1").is_ok());
    assert_eq!(s.requests().len(), 2);
}

#[test]
fn two_timeouts_are_an_error() {
    let s = StubServer::start(|_, _| Reply::json(200, OK).delayed(Duration::from_millis(600)));
    let err = model(&s, 150, None).complete(&prompt(), "r1").unwrap_err();
    assert!(matches!(err, MllmError::Unavailable(_)));
    assert_eq!(s.requests().len(), 2);
}

#[test]
fn client_error_is_not_retried() {
    let s = StubServer::start(|_, _| Reply::json(401, r#"{"error": "invalid api key"}"#));
    let err = model(&s, 2000, Some("bad")).complete(&prompt(), "r1").unwrap_err();
    assert!(err.to_string().contains("invalid api key"));
    assert_eq!(s.requests().len(), 1);
}

#[test]
fn empty_choices_is_an_error() {
    let s = StubServer::start(|_, _| Reply::json(200, r#"{"choices": []}"#));
    assert!(matches!(model(&s, 2000, None).complete(&prompt(), "r1"), Err(MllmError::EmptyReply(_))));
}
