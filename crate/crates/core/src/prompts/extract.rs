//! Pulls a JSON object out of free-form model text.

use serde_json::Value;

use super::PromptError;

/// Returns the first balanced object that parses, looking in ```json
/// fences first, then any fence, then the whole text. Trailing commas,
/// `//` and `/* */` comments, single-quoted strings and Python literals
/// are tolerated.
pub fn extract_json(raw: &str) -> Result<Value, PromptError> {
    let chars: Vec<char> = raw.chars().collect();
    let fences = fenced_blocks(&chars);
    let tagged = fences.iter().filter(|(json, _)| *json).map(|(_, body)| body);
    let any = fences.iter().map(|(_, body)| body);
    for body in tagged.chain(any) {
        if let Some(v) = first_object(body) {
            return Ok(v);
        }
    }
    first_object(&chars).ok_or(PromptError::NoJsonFound)
}

/// Contents of ``` fences, flagged when the info string is `json`.
fn fenced_blocks(chars: &[char]) -> Vec<(bool, Vec<char>)> {
    let ticks = |i: usize| i + 3 <= chars.len() && chars[i..i + 3] == ['`', '`', '`'];
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !ticks(i) {
            i += 1;
            continue;
        }
        let mut j = i + 3;
        let info_start = j;
        while j < chars.len() && chars[j] != '\n' && !ticks(j) {
            j += 1;
        }
        let info: String = chars[info_start..j].iter().collect();
        let body_start = j;
        let mut k = body_start;
        while k < chars.len() && !ticks(k) {
            k += 1;
        }
        let info = info.trim().to_ascii_lowercase();
        let (is_json, body) = if info.starts_with('{') {
            // inline fence such as ```{"a":1}```
            (false, chars[info_start..k].to_vec())
        } else {
            (info == "json" || info == "json5", chars[body_start..k].to_vec())
        };
        out.push((is_json, body));
        i = k + 3;
    }
    out
}

fn first_object(chars: &[char]) -> Option<Value> {
    let mut start = 0;
    while start < chars.len() {
        if chars[start] == '{' {
            if let Some(end) = balanced_end(chars, start) {
                if let Ok(v) = serde_json::from_str::<Value>(&sanitize(&chars[start..=end])) {
                    if v.is_object() {
                        return Some(v);
                    }
                }
            }
        }
        start += 1;
    }
    None
}

/// Skips a quoted string starting at `i`; returns the index after it.
fn skip_string(chars: &[char], i: usize) -> usize {
    let q = chars[i];
    let mut j = i + 1;
    while j < chars.len() {
        match chars[j] {
            '\\' => j += 2,
            c if c == q => return j + 1,
            '\n' if q == '\'' => return j,
            _ => j += 1,
        }
    }
    chars.len()
}

/// Skips a comment starting at `i` if there is one.
fn skip_comment(chars: &[char], i: usize) -> Option<usize> {
    if chars[i] != '/' || i + 1 >= chars.len() {
        return None;
    }
    match chars[i + 1] {
        '/' => {
            let mut j = i + 2;
            while j < chars.len() && chars[j] != '\n' {
                j += 1;
            }
            Some(j)
        }
        '*' => {
            let mut j = i + 2;
            while j + 1 < chars.len() && !(chars[j] == '*' && chars[j + 1] == '/') {
                j += 1;
            }
            Some((j + 2).min(chars.len()))
        }
        _ => None,
    }
}

fn is_quote(chars: &[char], i: usize) -> bool {
    match chars[i] {
        '"' => true,
        // an apostrophe inside a word is not a string delimiter
        '\'' => i == 0 || !chars[i - 1].is_alphanumeric(),
        _ => false,
    }
}

fn balanced_end(chars: &[char], start: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut i = start;
    while i < chars.len() {
        if is_quote(chars, i) {
            i = skip_string(chars, i);
            continue;
        }
        if let Some(j) = skip_comment(chars, i) {
            i = j;
            continue;
        }
        match chars[i] {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
        i += 1;
    }
    None
}

fn sanitize(chars: &[char]) -> String {
    let mut out = String::with_capacity(chars.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if is_quote(chars, i) {
            let end = skip_string(chars, i);
            if c == '"' {
                out.extend(&chars[i..end]);
            } else {
                let inner_end = if end > i + 1 && chars.get(end - 1) == Some(&'\'') { end - 1 } else { end };
                let inner: String = chars[i + 1..inner_end.max(i + 1)].iter().collect();
                let inner = inner.replace("\\'", "'");
                out.push_str(&serde_json::to_string(&inner).unwrap_or_default());
            }
            i = end;
            continue;
        }
        if let Some(j) = skip_comment(chars, i) {
            i = j;
            continue;
        }
        match c {
            '}' | ']' => {
                while out.ends_with(char::is_whitespace) {
                    out.pop();
                }
                if out.ends_with(',') {
                    out.pop();
                }
                out.push(c);
            }
            c if c.is_alphabetic() => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect();
                out.push_str(match word.as_str() {
                    "True" => "true",
                    "False" => "false",
                    "None" => "null",
                    w => w,
                });
                i = j;
                continue;
            }
            _ => out.push(c),
        }
        i += 1;
    }
    out
}
