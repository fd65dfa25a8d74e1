//! Learner-facing story text with scenario hints.
//!
//! A template is plain text. Lines starting with `%%` are comments; a
//! comment of the form `%% anchor <id>: <sentence>` names a sentence of the
//! body that hint rules can replace or follow.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scenario::ScenarioKind;

pub const BUILTIN_TEMPLATE: &str = include_str!("../data/story_template.txt");

const COMMENT: &str = "%%";
const ANCHOR: &str = "anchor ";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoryTemplate {
    body: String,
    anchors: BTreeMap<String, String>,
}

impl StoryTemplate {
    pub fn parse(text: &str) -> Result<Self> {
        let mut anchors = BTreeMap::new();
        let mut body = String::new();
        for line in text.lines() {
            match line.strip_prefix(COMMENT) {
                Some(comment) => {
                    if let Some(decl) = comment.trim_start().strip_prefix(ANCHOR) {
                        let (id, sentence) = decl
                            .split_once(':')
                            .ok_or_else(|| Error::Template(format!("malformed anchor line: {line}")))?;
                        let id = id.trim().to_string();
                        if anchors.insert(id.clone(), sentence.trim().to_string()).is_some() {
                            return Err(Error::Template(format!("anchor {id} declared twice")));
                        }
                    }
                }
                None => {
                    body.push_str(line);
                    body.push('\n');
                }
            }
        }
        for (id, sentence) in &anchors {
            match body.matches(sentence.as_str()).count() {
                1 => {}
                0 => return Err(Error::Template(format!("anchor {id} not found in template text"))),
                _ => return Err(Error::Template(format!("anchor {id} is ambiguous"))),
            }
        }
        Ok(Self { body, anchors })
    }

    pub fn builtin() -> Self {
        Self::parse(BUILTIN_TEMPLATE).expect("built-in template is well formed")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// The story with no hints applied.
    pub fn base(&self) -> &str {
        &self.body
    }

    pub fn anchor(&self, id: &str) -> Option<&str> {
        self.anchors.get(id).map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HintAction {
    Replace,
    InsertAfter,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HintRule {
    pub scenario: ScenarioKind,
    pub min_level: u8,
    pub action: HintAction,
    pub anchor: &'static str,
    pub text: &'static str,
}

pub fn builtin_rules() -> Vec<HintRule> {
    use HintAction::*;
    use ScenarioKind::*;
    vec![
        HintRule {
            scenario: Mediator,
            min_level: 1,
            action: Replace,
            anchor: "restaurant-use",
            text: "The frequency of restaurant visits varies with age.",
        },
        HintRule {
            scenario: Mediator,
            min_level: 2,
            action: InsertAfter,
            anchor: "same-space",
            text: "People who go out frequently are more likely to encounter an infected person.",
        },
        HintRule {
            scenario: Confounder,
            min_level: 1,
            action: InsertAfter,
            anchor: "severe-course",
            text: "It should be noted that each region seems to have its own measures to control infectious diseases in restaurants and schools.",
        },
        HintRule {
            scenario: Confounder,
            min_level: 2,
            action: InsertAfter,
            anchor: "severe-course",
            text: "In addition, measures to prevent infectious diseases in restaurants and schools exist in each region. It appears that the more aware people are of the infectious disease crisis, the more likely they are to shorten the business hours of restaurants and face-to-face classes at schools.",
        },
        HintRule {
            scenario: Collider,
            min_level: 1,
            action: InsertAfter,
            anchor: "infection-varies",
            text: "For example, the elderly may be more susceptible to infection.",
        },
        HintRule {
            scenario: Collider,
            min_level: 2,
            action: InsertAfter,
            anchor: "infection-varies",
            text: "For example, vaccination may prevent infection.",
        },
    ]
}

pub fn task_question(kind: ScenarioKind) -> Option<&'static str> {
    match kind {
        ScenarioKind::Mediator => Some("Does age increase the likelihood of infection?"),
        ScenarioKind::Confounder => {
            Some("Does limiting the opening hours of a restaurant reduce the probability of infection?")
        }
        ScenarioKind::Collider => Some(
            "We surveyed infected individuals and found that their vaccination rate appears to decrease as their age increases. Is this correct?",
        ),
        ScenarioKind::Custom => None,
    }
}

/// Apply the rules for `kind` at `level` to `template`. Insertions at a
/// shared anchor appear in rule order.
pub fn render_with(
    template: &StoryTemplate,
    rules: &[HintRule],
    kind: ScenarioKind,
    level: u8,
    include_task_question: bool,
) -> Result<String> {
    if level > 2 {
        return Err(Error::config("scenario.hint_level", "must be 0, 1 or 2"));
    }
    let mut text = template.body.clone();
    let active: Vec<&HintRule> = rules
        .iter()
        .filter(|r| r.scenario == kind && level >= r.min_level)
        .collect();
    // Resolve every anchor against the template before editing anything.
    for rule in &active {
        if template.anchor(rule.anchor).is_none() {
            return Err(Error::Template(format!("hint rule references unknown anchor {}", rule.anchor)));
        }
    }
    let mut tails: BTreeMap<&str, String> = BTreeMap::new();
    for rule in &active {
        let sentence = template.anchor(rule.anchor).expect("checked above");
        match rule.action {
            HintAction::Replace => {
                text = text.replacen(sentence, rule.text, 1);
            }
            HintAction::InsertAfter => {
                let tail = tails.entry(rule.anchor).or_default();
                tail.push(' ');
                tail.push_str(rule.text);
            }
        }
    }
    for (anchor, tail) in tails {
        let sentence = template.anchor(anchor).expect("checked above");
        let at = text
            .find(sentence)
            .ok_or_else(|| Error::Template(format!("anchor {anchor} was replaced before insertion")))?
            + sentence.len();
        text.insert_str(at, &tail);
    }
    if include_task_question {
        if let Some(q) = task_question(kind) {
            text.push_str("\nTask: ");
            text.push_str(q);
            text.push('\n');
        }
    }
    Ok(text)
}

pub fn render_story(kind: ScenarioKind, level: u8, include_task_question: bool) -> Result<String> {
    render_with(&StoryTemplate::builtin(), &builtin_rules(), kind, level, include_task_question)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [ScenarioKind; 4] = [
        ScenarioKind::Mediator,
        ScenarioKind::Confounder,
        ScenarioKind::Collider,
        ScenarioKind::Custom,
    ];

    #[test]
    fn level_zero_is_the_base_text() {
        let t = StoryTemplate::builtin();
        for kind in ALL {
            assert_eq!(render_story(kind, 0, false).unwrap(), t.base());
        }
        assert!(!t.base().contains("%%"));
        assert!(t.base().starts_with("You will work on causal inference"));
    }

    #[test]
    fn every_rule_has_an_anchor() {
        let t = StoryTemplate::builtin();
        for r in builtin_rules() {
            assert!(t.anchor(r.anchor).is_some(), "{}", r.anchor);
        }
    }

    #[test]
    fn mediator_levels() {
        let l1 = render_story(ScenarioKind::Mediator, 1, false).unwrap();
        assert!(l1.contains("The frequency of restaurant visits varies with age."));
        assert!(!l1.contains("The extent to which they use restaurants"));
        let l2 = render_story(ScenarioKind::Mediator, 2, false).unwrap();
        assert!(l2.contains(
            "in the same space as him or her. People who go out frequently are more likely to encounter an infected person."
        ));
    }

    #[test]
    fn collider_level_two() {
        let s = render_story(ScenarioKind::Collider, 2, false).unwrap();
        assert!(s.contains("vaccination may prevent infection"));
    }

    #[test]
    fn missing_anchor_is_a_template_error() {
        assert!(matches!(
            StoryTemplate::parse("%% anchor x: not here\nsome text\n"),
            Err(Error::Template(_))
        ));
        let t = StoryTemplate::parse("plain text\n").unwrap();
        let err = render_with(&t, &builtin_rules(), ScenarioKind::Mediator, 1, false);
        assert!(matches!(err, Err(Error::Template(_))));
    }

    #[test]
    fn task_question_appended() {
        let s = render_story(ScenarioKind::Mediator, 0, true).unwrap();
        assert!(s.ends_with("Task: Does age increase the likelihood of infection?\n"));
        assert_eq!(
            render_story(ScenarioKind::Custom, 0, true).unwrap(),
            StoryTemplate::builtin().base()
        );
    }

    #[test]
    fn rejects_level_three() {
        assert!(render_story(ScenarioKind::Collider, 3, false).is_err());
    }
}
