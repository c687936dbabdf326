use std::collections::HashMap;
use std::io::Write;
use std::process::{Command, Stdio};
use std::sync::Arc;

use super::EvalError;

/// Automated syntax check for one language. Returns one message per problem
/// found; an empty list means the code passed.
pub trait SyntaxChecker: Send + Sync {
    fn check(&self, code: &str) -> Result<Vec<String>, EvalError>;
}

/// Checkers by language tag.
#[derive(Clone, Default)]
pub struct CheckerRegistry {
    checkers: HashMap<String, Arc<dyn SyntaxChecker>>,
}

impl std::fmt::Debug for CheckerRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut tags: Vec<_> = self.checkers.keys().collect();
        tags.sort();
        f.debug_struct("CheckerRegistry").field("languages", &tags).finish()
    }
}

impl CheckerRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Delimiter-balance checkers for the languages the crate can tag.
    pub fn with_defaults() -> Self {
        let mut reg = Self::new();
        reg.register("php", DelimiterBalanceChecker::php());
        reg.register("python", DelimiterBalanceChecker::python());
        for tag in ["javascript", "typescript", "java", "c", "cpp", "csharp", "go", "rust"] {
            reg.register(tag, DelimiterBalanceChecker::c_like());
        }
        reg
    }

    pub fn register(&mut self, language_tag: &str, checker: impl SyntaxChecker + 'static) {
        self.checkers.insert(language_tag.to_string(), Arc::new(checker));
    }

    pub fn get(&self, language_tag: &str) -> Option<&dyn SyntaxChecker> {
        self.checkers.get(language_tag).map(|c| c.as_ref())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Flavor {
    CLike,
    Php,
    Python,
}

/// Finds unbalanced `()[]{}`, unterminated strings and unterminated block
/// comments. Only the first problem is reported, as a compiler would.
///
/// PHP files are scanned only inside `<?php`/`<?=` … `?>` regions, so the
/// surrounding HTML is ignored while braces may still span regions.
#[derive(Debug, Clone, Copy)]
pub struct DelimiterBalanceChecker {
    flavor: Flavor,
}

impl DelimiterBalanceChecker {
    pub fn c_like() -> Self {
        Self { flavor: Flavor::CLike }
    }

    pub fn php() -> Self {
        Self { flavor: Flavor::Php }
    }

    pub fn python() -> Self {
        Self { flavor: Flavor::Python }
    }

    fn first_problem(&self, code: &str) -> Option<String> {
        let chars: Vec<char> = code.chars().collect();
        let mut stack: Vec<(char, usize)> = Vec::new();
        let mut line = 1;
        let mut i = 0;
        let mut in_code = self.flavor != Flavor::Php;
        let at = |i: usize, s: &str| s.chars().enumerate().all(|(k, c)| chars.get(i + k) == Some(&c));

        while i < chars.len() {
            let c = chars[i];
            if !in_code {
                if at(i, "<?") {
                    in_code = true;
                    i += 2;
                } else {
                    if c == '\n' {
                        line += 1;
                    }
                    i += 1;
                }
                continue;
            }
            if self.flavor == Flavor::Php && at(i, "?>") {
                in_code = false;
                i += 2;
                continue;
            }
            let line_comment = match self.flavor {
                Flavor::CLike => at(i, "//"),
                Flavor::Php => at(i, "//") || c == '#',
                Flavor::Python => c == '#',
            };
            if line_comment {
                while i < chars.len() && chars[i] != '\n' {
                    if self.flavor == Flavor::Php && at(i, "?>") {
                        break;
                    }
                    i += 1;
                }
                continue;
            }
            if self.flavor != Flavor::Python && at(i, "/*") {
                let start = line;
                i += 2;
                loop {
                    if i >= chars.len() {
                        return Some(format!("unterminated block comment starting on line {start}"));
                    }
                    if at(i, "*/") {
                        i += 2;
                        break;
                    }
                    if chars[i] == '\n' {
                        line += 1;
                    }
                    i += 1;
                }
                continue;
            }
            if c == '"' || c == '\'' || (c == '`' && self.flavor == Flavor::CLike) {
                let start = line;
                let triple = self.flavor == Flavor::Python && chars.get(i + 1) == Some(&c) && chars.get(i + 2) == Some(&c);
                let width = if triple { 3 } else { 1 };
                i += width;
                loop {
                    if i >= chars.len() {
                        return Some(format!("unterminated string starting on line {start}"));
                    }
                    let d = chars[i];
                    if d == '\\' {
                        if chars.get(i + 1) == Some(&'\n') {
                            line += 1;
                        }
                        i += 2;
                        continue;
                    }
                    if d == '\n' {
                        // Single-quoted Python strings cannot span lines.
                        if self.flavor == Flavor::Python && !triple {
                            return Some(format!("unterminated string starting on line {start}"));
                        }
                        line += 1;
                    }
                    if d == c && (!triple || (chars.get(i + 1) == Some(&c) && chars.get(i + 2) == Some(&c))) {
                        i += width;
                        break;
                    }
                    i += 1;
                }
                continue;
            }
            match c {
                '(' | '[' | '{' => stack.push((c, line)),
                ')' | ']' | '}' => {
                    let open = match c {
                        ')' => '(',
                        ']' => '[',
                        _ => '{',
                    };
                    match stack.pop() {
                        None => return Some(format!("unexpected '{c}' on line {line}")),
                        Some((o, _)) if o == open => {}
                        Some((o, opened)) => {
                            return Some(format!("mismatched '{c}' on line {line} closes '{o}' from line {opened}"))
                        }
                    }
                }
                '\n' => line += 1,
                _ => {}
            }
            i += 1;
        }
        stack
            .last()
            .map(|(o, opened)| format!("unclosed '{o}' opened on line {opened}"))
    }
}

impl SyntaxChecker for DelimiterBalanceChecker {
    fn check(&self, code: &str) -> Result<Vec<String>, EvalError> {
        Ok(self.first_problem(code).into_iter().collect())
    }
}

/// Runs an external linter with the code on stdin (e.g. `php -l`). A non-zero
/// exit is one finding, described by the first non-empty output line.
#[derive(Debug, Clone)]
pub struct ExternalCommandChecker {
    program: String,
    args: Vec<String>,
}

impl ExternalCommandChecker {
    pub fn new(program: impl Into<String>, args: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            program: program.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }
}

impl SyntaxChecker for ExternalCommandChecker {
    fn check(&self, code: &str) -> Result<Vec<String>, EvalError> {
        let failed = |e: std::io::Error| EvalError::CheckerFailed(format!("{}: {e}", self.program));
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(failed)?;
        if let Some(mut stdin) = child.stdin.take() {
            // A checker may exit before reading everything; that is its verdict.
            let _ = stdin.write_all(code.as_bytes());
        }
        let output = child.wait_with_output().map_err(failed)?;
        if output.status.success() {
            return Ok(Vec::new());
        }
        let text = format!(
            "{}\n{}",
            String::from_utf8_lossy(&output.stderr),
            String::from_utf8_lossy(&output.stdout)
        );
        let message = text
            .lines()
            .map(str::trim)
            .find(|l| !l.is_empty())
            .unwrap_or("checker reported an error")
            .to_string();
        Ok(vec![message])
    }
}
