use super::PromptError;
use crate::gateway::AgentRole;
use crate::pipeline::{ChangeRequest, TaskPlan, Verdict};

pub const ACCEPT_KEYWORD: &str = "ACCEPT";
pub const REJECT_KEYWORD: &str = "REJECT";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AgentOutput {
    Plan(TaskPlan),
    Verdict(Verdict),
}

/// Text of a list item (`1. x`, `2) x`, `- x`, `* x`, `• x`), if the line is one.
fn list_item(line: &str) -> Option<&str> {
    let t = line.trim();
    let digits = t.bytes().take_while(u8::is_ascii_digit).count();
    let rest = if digits > 0 {
        let after = &t[digits..];
        after.strip_prefix('.').or_else(|| after.strip_prefix(')'))?
    } else {
        let mut chars = t.chars();
        match chars.next()? {
            '-' | '*' | '+' | '•' => chars.as_str(),
            _ => return None,
        }
    };
    if !(rest.is_empty() || rest.starts_with(char::is_whitespace)) {
        return None;
    }
    let item = rest.trim();
    (!item.is_empty()).then_some(item)
}

/// List items outside fenced blocks, in the order written.
fn list_items(text: &str) -> Vec<&str> {
    let mut in_fence = false;
    let mut items = Vec::new();
    for line in text.lines() {
        if line.trim_start().starts_with("```") {
            in_fence = !in_fence;
            continue;
        }
        if in_fence {
            continue;
        }
        if let Some(item) = list_item(line) {
            items.push(item);
        }
    }
    items
}

/// Numbered or bulleted lines become tasks in listed order, renumbered from 1.
pub fn parse_task_list(response: &str) -> Result<TaskPlan, PromptError> {
    TaskPlan::from_descriptions(list_items(response)).map_err(|_| PromptError::UnparseableTaskList)
}

fn leading_keyword(line: &str) -> &str {
    line.trim()
        .trim_start_matches(|c: char| matches!(c, '*' | '#' | '>' | '_' | '`') || c.is_whitespace())
}

/// Reads a verifier verdict.
///
/// The first non-blank line decides: `ACCEPT...` accepts and anything after it
/// is ignored; `REJECT...` rejects with one change per following list item.
/// A rejection without list items falls back to the text after the keyword,
/// then to the remaining prose, as a single change.
pub fn parse_verdict(response: &str) -> Result<Verdict, PromptError> {
    let mut lines = response.lines().skip_while(|l| l.trim().is_empty());
    let first = lines
        .next()
        .ok_or_else(|| PromptError::UnparseableVerdict("empty response".into()))?;
    let head = leading_keyword(first);
    let upper = head.to_ascii_uppercase();
    if upper.starts_with(ACCEPT_KEYWORD) {
        return Ok(Verdict::accept());
    }
    if !upper.starts_with(REJECT_KEYWORD) {
        let snippet: String = first.trim().chars().take(80).collect();
        return Err(PromptError::UnparseableVerdict(snippet));
    }
    let rest: Vec<&str> = lines.collect();
    let body = rest.join("\n");
    let mut changes: Vec<ChangeRequest> = list_items(&body)
        .into_iter()
        .filter_map(|item| ChangeRequest::new(item).ok())
        .collect();
    if changes.is_empty() {
        let inline = head[REJECT_KEYWORD.len()..]
            .trim_start_matches(|c: char| c.is_ascii_alphabetic())
            .trim_matches(|c: char| matches!(c, ':' | '-' | '*' | '_') || c.is_whitespace());
        let prose = rest
            .iter()
            .map(|l| l.trim())
            .filter(|l| !l.is_empty())
            .collect::<Vec<_>>()
            .join(" ");
        let fallback = if inline.is_empty() { prose } else { inline.to_string() };
        changes.extend(ChangeRequest::new(&fallback).ok());
    }
    Verdict::reject(changes)
        .map_err(|_| PromptError::UnparseableVerdict("rejection lists no changes".into()))
}

pub fn parse_agent_output(role: AgentRole, response: &str) -> Result<AgentOutput, PromptError> {
    match role {
        AgentRole::Manager => parse_task_list(response).map(AgentOutput::Plan),
        AgentRole::Verifier => parse_verdict(response).map(AgentOutput::Verdict),
        other => Err(PromptError::UnsupportedRole(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::Task;
    use proptest::prelude::*;

    fn descriptions(plan: &TaskPlan) -> Vec<&str> {
        plan.tasks().iter().map(Task::description).collect()
    }

    #[test]
    fn numbered_manager_list() {
        let plan = parse_task_list("1. A\n2. B").unwrap();
        assert_eq!(descriptions(&plan), ["A", "B"]);
    }

    #[test]
    fn listed_order_wins_over_numbers() {
        let plan = parse_task_list("Tasks:\n2. second\n1) first\n- third").unwrap();
        assert_eq!(descriptions(&plan), ["second", "first", "third"]);
        assert_eq!(plan.tasks()[0].index(), 1);
    }

    #[test]
    fn prose_and_code_are_not_tasks() {
        let response = "Plan below.\n```\n1. not a task\n```\n10.5 is a number\n-dash\n3. real";
        assert_eq!(descriptions(&parse_task_list(response).unwrap()), ["real"]);
        assert_eq!(
            parse_task_list("nothing to do"),
            Err(PromptError::UnparseableTaskList)
        );
    }

    #[test]
    fn accept_verdict() {
        let v = parse_verdict("ACCEPT").unwrap();
        assert!(v.is_accepted() && v.changes().is_empty());
        assert!(parse_verdict("\n  **Accept**ed.").unwrap().is_accepted());
    }

    #[test]
    fn bullets_after_accept_are_ignored() {
        let v = parse_verdict("ACCEPT\n- stray bullet").unwrap();
        assert_eq!(v, Verdict::accept());
    }

    #[test]
    fn reject_with_bullets() {
        let v = parse_verdict("REJECT:\n- fix x\n- fix y").unwrap();
        assert!(!v.is_accepted());
        let changes: Vec<_> = v.changes().iter().map(|c| c.description()).collect();
        assert_eq!(changes, ["fix x", "fix y"]);
        assert_eq!(parse_verdict("REJECT:\n- restore URL helper").unwrap().changes().len(), 1);
    }

    #[test]
    fn reject_without_bullets_uses_inline_then_prose() {
        let v = parse_verdict("REJECT: keep the form helper").unwrap();
        assert_eq!(v.changes()[0].description(), "keep the form helper");
        let v = parse_verdict("Rejected\nThe pagination links\nare missing.").unwrap();
        assert_eq!(v.changes()[0].description(), "The pagination links are missing.");
        assert!(matches!(
            parse_verdict("REJECT"),
            Err(PromptError::UnparseableVerdict(_))
        ));
    }

    #[test]
    fn anything_else_is_unparseable() {
        assert!(matches!(
            parse_verdict("maybe"),
            Err(PromptError::UnparseableVerdict(_))
        ));
        assert!(matches!(
            parse_verdict("   "),
            Err(PromptError::UnparseableVerdict(_))
        ));
    }

    #[test]
    fn dispatch_by_role() {
        assert!(matches!(
            parse_agent_output(AgentRole::Manager, "1. A").unwrap(),
            AgentOutput::Plan(_)
        ));
        assert!(matches!(
            parse_agent_output(AgentRole::Verifier, "ACCEPT").unwrap(),
            AgentOutput::Verdict(_)
        ));
        assert!(matches!(
            parse_agent_output(AgentRole::Executor, "x"),
            Err(PromptError::UnsupportedRole(_))
        ));
    }

    proptest! {
        #[test]
        fn verdicts_are_consistent(response in "(ACCEPT|REJECT|Reject:|maybe|)[ a-z:]{0,10}(\n(- |\\* |1\\. |)[a-z ]{0,12}){0,4}") {
            if let Ok(v) = parse_verdict(&response) {
                prop_assert_eq!(v.is_accepted(), v.changes().is_empty());
            }
        }
    }
}
