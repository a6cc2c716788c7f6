//! `\boxed{...}` answer extraction.

use alloc::string::{String, ToString};

use crate::text::collapse_whitespace;

const BOX_OPEN: &str = "\\boxed{";

/// An answer string pulled out of a response.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExtractedAnswer {
    pub raw: String,
    /// `raw` with whitespace runs collapsed and ends trimmed. Case is kept.
    pub normalized: String,
}

impl ExtractedAnswer {
    pub fn new(raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let normalized = collapse_whitespace(&raw);
        Self { raw, normalized }
    }
}

/// Returns the content of the last `\boxed{...}` in `text`.
///
/// Braces are matched by depth, and `\{` / `\}` are literal. If the last box
/// is never closed the result is `None` rather than a truncated answer.
pub fn extract_answer(text: &str) -> Option<ExtractedAnswer> {
    let start = text.rfind(BOX_OPEN)? + BOX_OPEN.len();
    let body = &text[start..];
    let mut depth = 1usize;
    let mut escaped = false;
    for (offset, c) in body.char_indices() {
        if escaped {
            escaped = false;
            continue;
        }
        match c {
            '\\' => escaped = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(ExtractedAnswer::new(body[..offset].to_string()));
                }
            }
            _ => {}
        }
    }
    None
}
