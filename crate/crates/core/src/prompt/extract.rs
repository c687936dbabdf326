use super::PromptError;

/// Code pulled out of a model response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extraction {
    pub code: String,
    /// At least one fenced block was found.
    pub fenced: bool,
    /// The last fence was never closed, which usually means the model ran out
    /// of output tokens mid-file.
    pub unbalanced: bool,
}

fn is_fence(line: &str) -> bool {
    line.trim_start().starts_with("```")
}

fn is_closing_fence(line: &str) -> bool {
    let t = line.trim();
    t.starts_with("```") && t.chars().all(|c| c == '`')
}

/// Fenced blocks joined by one blank line, or the trimmed response when there
/// are no fences.
pub fn extract_code(response: &str) -> Result<(String, bool), PromptError> {
    extract_code_detailed(response).map(|e| (e.code, e.fenced))
}

pub fn extract_code_detailed(response: &str) -> Result<Extraction, PromptError> {
    if response.trim().is_empty() {
        return Err(PromptError::EmptyResponse);
    }
    let mut blocks: Vec<Vec<&str>> = Vec::new();
    let mut current: Option<Vec<&str>> = None;
    for raw in response.lines() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        match current.as_mut() {
            None if is_fence(line) => current = Some(Vec::new()),
            None => {}
            Some(_) if is_closing_fence(line) => blocks.extend(current.take()),
            Some(body) => body.push(line),
        }
    }
    let unbalanced = current.is_some();
    blocks.extend(current);
    if blocks.is_empty() {
        return Ok(Extraction {
            code: response.trim().to_string(),
            fenced: false,
            unbalanced: false,
        });
    }
    let code = blocks
        .iter()
        .map(|body| body.join("\n"))
        .collect::<Vec<_>>()
        .join("\n\n");
    Ok(Extraction {
        code,
        fenced: true,
        unbalanced,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_fence() {
        assert_eq!(
            extract_code("here:\n```\necho 1;\n```").unwrap(),
            ("echo 1;".to_string(), true)
        );
    }

    #[test]
    fn language_tag_on_opening_fence() {
        let (code, fenced) = extract_code("```php\n<?php echo 1; ?>\n```\nDone.").unwrap();
        assert_eq!(code, "<?php echo 1; ?>");
        assert!(fenced);
    }

    #[test]
    fn prose_falls_back_to_trimmed_response() {
        assert_eq!(
            extract_code("  just some text\n").unwrap(),
            ("just some text".to_string(), false)
        );
    }

    #[test]
    fn two_blocks_are_joined_by_a_blank_line() {
        let response = "first\n```\na\n```\nthen\n```js\nb\n```\n";
        assert_eq!(extract_code(response).unwrap(), ("a\n\nb".to_string(), true));
    }

    #[test]
    fn empty_response() {
        assert_eq!(extract_code(" \n\t"), Err(PromptError::EmptyResponse));
    }

    #[test]
    fn unclosed_fence_is_reported() {
        let e = extract_code_detailed("```\nline 1\nline 2").unwrap();
        assert_eq!(e.code, "line 1\nline 2");
        assert!(e.fenced && e.unbalanced);
        let e = extract_code_detailed("```\nok\n```").unwrap();
        assert!(!e.unbalanced);
    }

    #[test]
    fn crlf_is_normalised() {
        let (code, _) = extract_code("```\r\na\r\nb\r\n```\r\n").unwrap();
        assert_eq!(code, "a\nb");
    }

    proptest! {
        #[test]
        fn bare_code_is_returned_unchanged_modulo_trim(code in "[a-z0-9;(){} =$\n]{1,200}") {
            prop_assume!(!code.trim().is_empty());
            let (out, fenced) = extract_code(&code).unwrap();
            prop_assert!(!fenced);
            prop_assert_eq!(out, code.trim());
        }

        #[test]
        fn fenced_body_survives(lines in proptest::collection::vec("[a-z0-9;(){} =$]{0,40}", 1..20)) {
            let body = lines.join("\n");
            let response = format!("Here you go:\n```php\n{body}\n```\nThanks.");
            let (out, fenced) = extract_code(&response).unwrap();
            prop_assert!(fenced);
            prop_assert_eq!(out, body);
        }
    }
}
