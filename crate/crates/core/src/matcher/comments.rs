/// Every comment in `script`, with leading `#` characters and surrounding
/// whitespace stripped, joined by newlines in source order. Empty comments
/// are dropped. The scan tracks string literals so `#` inside a string is
/// not a comment, and never fails on malformed input.
pub fn extract_comment_block(script: &str) -> String {
    let mut comments: Vec<&str> = Vec::new();
    let bytes = script.as_bytes();
    let mut i = 0;
    // Active string delimiter: quote byte and whether it is tripled.
    let mut string: Option<(u8, bool)> = None;
    while i < bytes.len() {
        let b = bytes[i];
        match string {
            Some((q, triple)) => {
                if b == b'\\' {
                    i += 2;
                    continue;
                }
                if b == b'\n' && !triple {
                    string = None;
                } else if b == q {
                    if !triple {
                        string = None;
                    } else if bytes.get(i + 1) == Some(&q) && bytes.get(i + 2) == Some(&q) {
                        string = None;
                        i += 3;
                        continue;
                    }
                }
                i += 1;
            }
            None => match b {
                b'#' => {
                    let end = script[i..].find('\n').map_or(bytes.len(), |n| i + n);
                    let text = script[i..end].trim_start_matches('#').trim();
                    if !text.is_empty() {
                        comments.push(text);
                    }
                    i = end;
                }
                b'\'' | b'"' => {
                    if bytes.get(i + 1) == Some(&b) && bytes.get(i + 2) == Some(&b) {
                        string = Some((b, true));
                        i += 3;
                    } else {
                        string = Some((b, false));
                        i += 1;
                    }
                }
                _ => i += 1,
            },
        }
    }
    comments.join("\n")
}
