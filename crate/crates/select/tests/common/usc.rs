//! Scripted judge endpoints shared by the judge-client tests.

use std::cell::RefCell;
use std::collections::VecDeque;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use consensus_core::usc::SYSTEM_PROMPT;
use consensus_core::Error as CoreError;
use consensus_select::usc::{
    ChatRequest, ChatTransport, JudgeEndpointConfig, TransportError, UscClient, UscError,
};
use serde_json::{json, Value};

pub type ScenarioResult = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

/// Replays canned outcomes and records every request with its send time.
pub struct ScriptedTransport {
    script: RefCell<VecDeque<Result<String, TransportError>>>,
    pub requests: RefCell<Vec<(Instant, ChatRequest)>>,
}

impl ScriptedTransport {
    pub fn new(script: Vec<Result<&str, TransportError>>) -> Self {
        Self {
            script: RefCell::new(script.into_iter().map(|r| r.map(str::to_owned)).collect()),
            requests: RefCell::new(Vec::new()),
        }
    }
}

impl ChatTransport for &ScriptedTransport {
    fn complete(&self, _: &JudgeEndpointConfig, request: &ChatRequest) -> Result<String, TransportError> {
        self.requests.borrow_mut().push((Instant::now(), request.clone()));
        self.script.borrow_mut().pop_front().unwrap_or(Err(TransportError::Connection("script exhausted".into())))
    }
}

pub fn endpoint(url: &str) -> JudgeEndpointConfig {
    JudgeEndpointConfig {
        initial_backoff: Duration::from_millis(5),
        timeout: Duration::from_secs(5),
        ..JudgeEndpointConfig::new(url, "judge-model")
    }
}

const TEXTS: [&str; 3] = ["first answer \\boxed{4}", "second Path 3: answer \\boxed{5}", "third answer \\boxed{4}"];

fn run(script: Vec<Result<&str, TransportError>>) -> (Result<consensus_core::SelectionResult, UscError>, ScriptedTransport) {
    let transport = ScriptedTransport::new(script);
    let result = UscClient::new(endpoint("http://mock.invalid/v1/chat/completions"), &transport).select(&TEXTS);
    (result, transport)
}

pub fn prompt_structure() -> ScenarioResult {
    let (result, transport) = run(vec![Ok("Path1")]);
    result.map_err(|e| e.to_string())?;
    let requests = transport.requests.borrow();
    ensure!(requests.len() == 1, "expected one request, saw {}", requests.len());
    let req = &requests[0].1;
    ensure!(req.model == "judge-model", "model {}", req.model);
    ensure!(req.messages.len() == 2, "{} messages", req.messages.len());
    ensure!(req.messages[0].role == "system" && req.messages[0].content == SYSTEM_PROMPT, "bad system turn");
    ensure!(req.messages[1].role == "user", "bad user role");
    let prompt = &req.messages[1].content;
    let mut last = 0;
    for (i, text) in TEXTS.iter().enumerate() {
        let block = format!("Path {}: {text}\n", i + 1);
        let at = prompt.find(&block).ok_or_else(|| format!("missing block {block:?}"))?;
        ensure!(at >= last, "path blocks out of order");
        last = at;
    }
    ensure!(prompt.matches("Path 1:").count() == 1, "Path 1 repeated");
    ensure!(prompt.matches("Path 3:").count() == 2, "literal Path 3 in a response must pass through");
    ensure!(prompt.trim_end().ends_with("in a 'Path{number}' format."), "missing closing instruction");
    Ok(())
}

pub fn winner_from_reply() -> ScenarioResult {
    let (result, _) = run(vec![Ok("Path 1 and Path 3 agree, but on reflection the answer is Path2")]);
    let r = result.map_err(|e| e.to_string())?;
    ensure!(r.winner_index == 1, "winner {}", r.winner_index);
    ensure!(r.scores == [0.0, 1.0, 0.0], "scores {:?}", r.scores);
    ensure!((r.confidence - 1.0 / 3.0).abs() < 1e-15, "confidence {}", r.confidence);
    ensure!(r.method == consensus_core::Method::Usc, "method {}", r.method);
    Ok(())
}

pub fn retries_after_timeouts() -> ScenarioResult {
    let (result, transport) = run(vec![Err(TransportError::Timeout), Err(TransportError::Timeout), Ok("Path3")]);
    let r = result.map_err(|e| e.to_string())?;
    ensure!(r.winner_index == 2, "winner {}", r.winner_index);
    let times: Vec<Instant> = transport.requests.borrow().iter().map(|(t, _)| *t).collect();
    ensure!(times.len() == 3, "{} attempts", times.len());
    let (first, second) = (times[1] - times[0], times[2] - times[1]);
    ensure!(first >= Duration::from_millis(5), "first backoff {first:?}");
    ensure!(second >= Duration::from_millis(10), "second backoff {second:?} did not double");
    Ok(())
}

pub fn gives_up_after_max_retries() -> ScenarioResult {
    let (result, transport) = run(vec![Err(TransportError::Timeout); 4]);
    match result {
        Err(UscError::Transport { attempts: 3, source: TransportError::Timeout }) => {}
        other => return Err(format!("unexpected {other:?}")),
    }
    ensure!(transport.requests.borrow().len() == 3, "sent {} requests", transport.requests.borrow().len());
    Ok(())
}

pub fn retries_server_errors() -> ScenarioResult {
    let (result, transport) = run(vec![Err(TransportError::Status(503)), Ok("Path 1")]);
    let r = result.map_err(|e| e.to_string())?;
    ensure!(r.winner_index == 0, "winner {}", r.winner_index);
    ensure!(transport.requests.borrow().len() == 2, "attempts {}", transport.requests.borrow().len());
    Ok(())
}

pub fn client_errors_are_final() -> ScenarioResult {
    let (result, transport) = run(vec![Err(TransportError::Status(401)), Ok("Path1")]);
    match &result {
        Err(e @ UscError::Transport { attempts: 1, source: TransportError::Status(401) }) => {
            ensure!(e.is_transport(), "not classified as transport");
        }
        other => return Err(format!("unexpected {other:?}")),
    }
    ensure!(transport.requests.borrow().len() == 1, "4xx was retried");
    Ok(())
}

pub fn out_of_range_path() -> ScenarioResult {
    let (result, transport) = run(vec![Ok("Path9"), Ok("Path1")]);
    match result {
        Err(UscError::JudgeFormat { source: CoreError::IndexOutOfRange { index: 9, len: 3 }, .. }) => {}
        other => return Err(format!("unexpected {other:?}")),
    }
    ensure!(transport.requests.borrow().len() == 1, "format errors must not be retried");
    Ok(())
}

pub fn reply_without_path() -> ScenarioResult {
    let (result, _) = run(vec![Ok("the best is the first one")]);
    match result {
        Err(e @ UscError::JudgeFormat { source: CoreError::NoPathToken, .. }) => {
            ensure!(!e.is_transport(), "format error classified as transport");
            Ok(())
        }
        other => Err(format!("unexpected {other:?}")),
    }
}

/// One recorded HTTP exchange on the loopback server.
pub struct Exchange {
    pub request_line: String,
    pub headers: Vec<(String, String)>,
    pub body: Value,
}

/// Serves `responses` (status, body) to successive connections on
/// 127.0.0.1 and reports what each request carried.
pub fn loopback_server(responses: Vec<(u16, String)>) -> (String, mpsc::Receiver<Exchange>) {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind loopback");
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for (status, body) in responses {
            let Ok((stream, _)) = listener.accept() else { return };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request_line = String::new();
            reader.read_line(&mut request_line).unwrap();
            let mut headers = Vec::new();
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end();
                if line.is_empty() {
                    break;
                }
                let (k, v) = line.split_once(':').unwrap();
                headers.push((k.trim().to_ascii_lowercase(), v.trim().to_owned()));
            }
            let len: usize =
                headers.iter().find(|(k, _)| k == "content-length").map(|(_, v)| v.parse().unwrap()).unwrap_or(0);
            let mut raw = vec![0; len];
            reader.read_exact(&mut raw).unwrap();
            let request_body = serde_json::from_slice(&raw).unwrap_or(Value::Null);
            let _ = tx.send(Exchange { request_line: request_line.trim_end().to_owned(), headers, body: request_body });
            let mut stream = stream;
            let reply = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            let _ = stream.write_all(reply.as_bytes());
        }
    });
    (url, rx)
}

pub fn completion(content: &str) -> String {
    json!({"id": "cmpl-1", "object": "chat.completion", "choices": [{"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}]})
        .to_string()
}

pub fn http_wire_protocol() -> ScenarioResult {
    let (url, rx) = loopback_server(vec![(500, "{}".into()), (200, completion("so the answer is Path 2"))]);
    let cfg = JudgeEndpointConfig { auth_token: Some("sekret".into()), ..endpoint(&url) };
    let r = UscClient::http(cfg).select(&TEXTS).map_err(|e| e.to_string())?;
    ensure!(r.winner_index == 1, "winner {}", r.winner_index);
    let exchanges: Vec<Exchange> = rx.try_iter().collect();
    ensure!(exchanges.len() == 2, "{} exchanges", exchanges.len());
    for ex in &exchanges {
        ensure!(ex.request_line.starts_with("POST /v1/chat/completions "), "request line {}", ex.request_line);
        let header = |name: &str| ex.headers.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str());
        ensure!(header("authorization") == Some("Bearer sekret"), "auth header {:?}", header("authorization"));
        ensure!(header("content-type").is_some_and(|v| v.starts_with("application/json")), "content type");
        ensure!(ex.body["model"] == "judge-model", "model field {}", ex.body["model"]);
        ensure!(ex.body["messages"][0] == json!({"role": "system", "content": SYSTEM_PROMPT}), "system turn");
        ensure!(ex.body["messages"][1]["role"] == "user", "user turn");
        let keys: Vec<&String> = ex.body.as_object().map(|o| o.keys().collect()).unwrap_or_default();
        ensure!(keys == ["messages", "model"], "unexpected body keys {keys:?}");
    }
    Ok(())
}

pub fn scenarios() -> Vec<(&'static str, fn() -> ScenarioResult)> {
    vec![
        ("prompt structure", prompt_structure),
        ("winner from reply", winner_from_reply),
        ("retry after two timeouts", retries_after_timeouts),
        ("give up after max retries", gives_up_after_max_retries),
        ("retry on 5xx", retries_server_errors),
        ("no retry on 4xx", client_errors_are_final),
        ("out-of-range path", out_of_range_path),
        ("reply without path token", reply_without_path),
        ("HTTP wire protocol", http_wire_protocol),
    ]
}
