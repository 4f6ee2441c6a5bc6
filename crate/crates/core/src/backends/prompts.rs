//! Versioned prompt templates and their rendering.
//!
//! Templates use `{name}` placeholders (lowercase letters and `_`). Rendering
//! is a single pass, so substituted values are never re-expanded, and any
//! placeholder left without a value is an error.

use crate::error::{Error, Result};
use crate::regulator::{Feedback, HistoryEntry};
use crate::waypoint::DecisionSpace;

pub const VERSION: &str = "v1";

pub const PANORAMA: &str = include_str!("../../prompts/v1/panorama.txt");
pub const DIRECTION: &str = include_str!("../../prompts/v1/direction.txt");
pub const FEEDBACK: &str = include_str!("../../prompts/v1/feedback.txt");
pub const DECOMPOSE: &str = include_str!("../../prompts/v1/decompose.txt");
pub const DECISION: &str = include_str!("../../prompts/v1/decision.txt");

/// Token a remote describer appends when the active subtask is done.
pub const COMPLETION_TOKEN: &str = "SUBTASK_COMPLETE";

fn placeholder_at(s: &str) -> Option<&str> {
    let rest = s.strip_prefix('{')?;
    let end = rest.find('}')?;
    let name = &rest[..end];
    (!name.is_empty() && name.bytes().all(|b| b.is_ascii_lowercase() || b == b'_')).then_some(name)
}

/// Substitutes `{name}` placeholders from `vars`.
pub fn render(template: &str, vars: &[(&str, &str)]) -> Result<String> {
    let mut out = String::with_capacity(template.len() + 256);
    let mut i = 0;
    while i < template.len() {
        let rest = &template[i..];
        if let Some(name) = placeholder_at(rest) {
            let value = vars
                .iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::input(format!("prompt placeholder {{{name}}} has no value")))?;
            out.push_str(value);
            i += name.len() + 2;
        } else {
            let ch = rest.chars().next().expect("non-empty");
            out.push(ch);
            i += ch.len_utf8();
        }
    }
    Ok(out)
}

pub fn render_history(history: &[HistoryEntry]) -> String {
    if history.is_empty() {
        return "none yet".to_string();
    }
    history
        .iter()
        .map(|h| format!("step {}: chose waypoint {}. {}", h.timestep, h.chosen_id, h.explanation))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn render_decision_space(space: &DecisionSpace) -> String {
    space
        .entries
        .iter()
        .map(|e| {
            format!(
                "- id {}: heading {:+.0}, distance {:.2}: {}",
                e.waypoint.id, e.waypoint.heading, e.waypoint.distance, e.description
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn decision_prompt(
    instruction: &str,
    scene: Option<&str>,
    feedback: &Feedback,
    history: &[HistoryEntry],
    space: &DecisionSpace,
) -> Result<String> {
    render(
        DECISION,
        &[
            ("instruction", instruction),
            ("scene", scene.unwrap_or("not available")),
            ("feedback", &feedback.text),
            ("history", &render_history(history)),
            ("decision_space", &render_decision_space(space)),
        ],
    )
}

pub fn direction_prompt(heading: f64, distance: f64) -> Result<String> {
    render(
        DIRECTION,
        &[("heading", &format!("{heading:+.0}")), ("distance", &format!("{distance:.2}"))],
    )
}

pub fn feedback_prompt(subtask: &str) -> Result<String> {
    render(FEEDBACK, &[("subtask", subtask)])
}

pub fn decompose_prompt(instruction: &str) -> Result<String> {
    render(DECOMPOSE, &[("instruction", instruction)])
}

pub fn panorama_prompt() -> Result<String> {
    render(PANORAMA, &[])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_pass() {
        let s = render("a {x} b {y}", &[("x", "{y}"), ("y", "2")]).unwrap();
        assert_eq!(s, "a {y} b 2");
    }

    #[test]
    fn missing_placeholder_errors() {
        assert!(render("hello {who}", &[]).is_err());
    }

    #[test]
    fn json_braces_are_literal() {
        let s = render(r#"{"chosen_id": 1}"#, &[]).unwrap();
        assert_eq!(s, r#"{"chosen_id": 1}"#);
    }

    #[test]
    fn every_template_renders() {
        panorama_prompt().unwrap();
        direction_prompt(30.0, 2.5).unwrap();
        feedback_prompt("turn left").unwrap();
        decompose_prompt("go").unwrap();
    }
}
