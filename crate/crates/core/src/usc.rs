//! Prompt construction and reply parsing for the judge-based baseline,
//! where a chat model is shown every candidate and names the most
//! consistent one. The HTTP client lives in the `consensus-select` crate.

use alloc::string::String;
use core::fmt::Write;

use crate::{Error, Result};

pub const SYSTEM_PROMPT: &str = "You are a helpful assistant.";

const HEADER: &str =
    "Here are multiple reasoning paths for a task. Select the most consistent and plausible path based on consensus:\n\n";
const FOOTER: &str = "Which path is the most consistent? Conclude your explanation with the answer in a 'Path{number}' format.";

/// Builds the user turn listing every response as `Path i: ...`, 1-based, in
/// input order. Response text is inserted verbatim.
pub fn build_usc_prompt<S: AsRef<str>>(texts: &[S]) -> Result<String> {
    if texts.len() < 2 {
        return Err(Error::TooFewCandidates { required: 2, found: texts.len() });
    }
    let mut prompt = String::from(HEADER);
    for (i, t) in texts.iter().enumerate() {
        let _ = writeln!(prompt, "Path {}: {}", i + 1, t.as_ref());
    }
    prompt.push_str(FOOTER);
    Ok(prompt)
}

/// Parses the last `Path<digits>` or `Path <digits>` in a judge reply into a
/// 0-based index.
pub fn parse_usc_reply(reply: &str, n: usize) -> Result<usize> {
    let bytes = reply.as_bytes();
    let mut found = None;
    for (pos, _) in reply.match_indices("Path") {
        let mut i = pos + 4;
        if bytes.get(i) == Some(&b' ') {
            i += 1;
        }
        let start = i;
        while bytes.get(i).is_some_and(u8::is_ascii_digit) {
            i += 1;
        }
        if i > start {
            found = Some(&reply[start..i]);
        }
    }
    let digits = found.ok_or(Error::NoPathToken)?;
    let number: usize = digits.parse().unwrap_or(usize::MAX);
    if number == 0 || number > n {
        return Err(Error::IndexOutOfRange { index: number, len: n });
    }
    Ok(number - 1)
}
