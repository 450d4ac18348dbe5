mod common;

use std::time::Duration;

use common::{prompt_of, StubReply, StubServer};
use cxr_icl::backend::{generate_batch, Backend, BackendError, GenerationRequest, HttpBackend, HttpConfig, WireFormat};

fn backend(url: &str, attempts: usize) -> HttpBackend {
    HttpBackend::new(HttpConfig {
        endpoint: url.to_string(),
        max_attempts: attempts,
        backoff_ms: 10,
        timeout_secs: 5.0,
        ..Default::default()
    })
    .unwrap()
}

#[test]
fn transient_failures_are_retried() {
    let server = StubServer::start(|n, _| if n < 2 { StubReply::status(503) } else { StubReply::ok("recovered") });
    let r = backend(&server.url, 3).generate(&GenerationRequest::new("p", "r")).unwrap();
    assert_eq!(r.text, "recovered");
    assert_eq!(server.request_count(), 3);
}

#[test]
fn retries_give_up_after_max_attempts() {
    let server = StubServer::start(|_, _| StubReply::status(500));
    let err = backend(&server.url, 2).generate(&GenerationRequest::new("p", "r")).unwrap_err();
    assert!(matches!(err, BackendError::Status { status: 500, .. }), "{err}");
    assert_eq!(server.request_count(), 2);
}

#[test]
fn client_errors_are_not_retried() {
    let server = StubServer::start(|_, _| StubReply::status(400));
    let err = backend(&server.url, 3).generate(&GenerationRequest::new("p", "r")).unwrap_err();
    assert!(matches!(err, BackendError::Status { status: 400, .. }));
    assert_eq!(server.request_count(), 1);
}

#[test]
fn rate_limit_is_retried() {
    let server = StubServer::start(|n, _| if n == 0 { StubReply::status(429) } else { StubReply::ok("fine") });
    assert_eq!(backend(&server.url, 2).generate(&GenerationRequest::new("p", "r")).unwrap().text, "fine");
}

#[test]
fn slow_server_times_out() {
    let server = StubServer::start(|_, _| StubReply::ok("late").after(Duration::from_millis(800)));
    let b = HttpBackend::new(HttpConfig {
        endpoint: server.url.clone(),
        timeout_secs: 0.2,
        max_attempts: 1,
        ..Default::default()
    })
    .unwrap();
    let err = b.generate(&GenerationRequest::new("p", "r")).unwrap_err();
    assert!(matches!(err, BackendError::Timeout { .. } | BackendError::Network { .. }), "{err}");
}

#[test]
fn concurrency_never_exceeds_bound() {
    let server = StubServer::start(|_, body| StubReply::ok(&prompt_of(body)).after(Duration::from_millis(40)));
    let b = backend(&server.url, 1);
    let requests: Vec<GenerationRequest> = (0..24).map(|i| GenerationRequest::new(format!("p{i}"), "r")).collect();
    let out = generate_batch(&b, &requests, 3).unwrap();
    assert!(server.max_observed_in_flight() <= 3, "{}", server.max_observed_in_flight());
    assert!(server.max_observed_in_flight() >= 2, "requests never overlapped");
    for (i, r) in out.into_iter().enumerate() {
        assert_eq!(r.unwrap().text, format!("p{i}"));
    }
}

#[test]
fn batch_errors_stay_per_item() {
    let server = StubServer::start(|_, body| {
        let p = prompt_of(body);
        if p.contains("bad") { StubReply::status(422) } else { StubReply::ok(&p.to_uppercase()) }
    });
    let b = backend(&server.url, 2);
    let requests: Vec<GenerationRequest> =
        ["one", "bad-two", "three", "bad-four"].iter().map(|p| GenerationRequest::new(*p, *p)).collect();
    let out = generate_batch(&b, &requests, 4).unwrap();
    assert_eq!(out[0].as_ref().unwrap().text, "ONE");
    assert!(matches!(out[1], Err(BackendError::Status { status: 422, .. })));
    assert_eq!(out[2].as_ref().unwrap().text, "THREE");
    assert!(out[3].is_err());
}

#[test]
fn chat_wire_with_api_key_env() {
    std::env::set_var("CXR_ICL_STUB_TEST_KEY", "sekret");
    let server = StubServer::start(|_, body| {
        let content = body["messages"][0]["content"].as_str().unwrap_or_default().to_string();
        let reply = serde_json::json!({ "choices": [{ "message": { "content": content } }] });
        StubReply { status: 200, body: reply.to_string(), delay: Duration::ZERO }
    });
    let b = HttpBackend::new(HttpConfig {
        endpoint: server.url.clone(),
        wire: WireFormat::Chat,
        api_key_env: Some("CXR_ICL_STUB_TEST_KEY".into()),
        ..Default::default()
    })
    .unwrap();
    assert_eq!(b.generate(&GenerationRequest::new("hello", "r")).unwrap().text, "hello");
}

#[test]
fn malformed_body_is_reported() {
    let server = StubServer::start(|_, _| StubReply { status: 200, body: "{\"nope\":1}".into(), delay: Duration::ZERO });
    let err = backend(&server.url, 3).generate(&GenerationRequest::new("p", "r")).unwrap_err();
    assert!(matches!(err, BackendError::MalformedResponse(_)));
    assert_eq!(server.request_count(), 1);
}
