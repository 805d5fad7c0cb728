use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_TEMPLATE_ID: &str = "default";

const DEFAULT_TEMPLATE: &str =
    "You are a careful fact checker. Decide whether the claim is fully supported by the context.

Context:
{context}

Question:
{question}

Claim:
{claim}

Answer with exactly one word, YES or NO. Answer:";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("unknown prompt template `{0}`")]
    UnknownTemplate(String),
    #[error("prompt field `{0}` is empty")]
    EmptyField(&'static str),
    #[error("template `{id}` is invalid: {reason}")]
    InvalidTemplate { id: String, reason: String },
}

/// A fully rendered verification prompt together with its inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptInstance {
    pub question: String,
    pub context: String,
    pub claim: String,
    pub rendered: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Text(String),
    Question,
    Context,
    Claim,
}

/// A template parsed once into literal text and `{question}`, `{context}`,
/// `{claim}` slots. Rendering is a single pass, so placeholder-like text
/// inside a field is copied through untouched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pieces: Vec<Piece>,
}

impl PromptTemplate {
    pub fn parse(id: &str, source: &str) -> Result<Self, PromptError> {
        let mut pieces = Vec::new();
        let mut rest = source;
        let mut seen = [false; 3];
        while let Some(open) = rest.find('{') {
            let slot = [("{question}", 0), ("{context}", 1), ("{claim}", 2)]
                .into_iter()
                .find(|(tag, _)| rest[open..].starts_with(tag));
            match slot {
                Some((tag, which)) => {
                    if open > 0 {
                        pieces.push(Piece::Text(rest[..open].to_string()));
                    }
                    pieces.push(match which {
                        0 => Piece::Question,
                        1 => Piece::Context,
                        _ => Piece::Claim,
                    });
                    seen[which] = true;
                    rest = &rest[open + tag.len()..];
                }
                None => {
                    pieces.push(Piece::Text(rest[..=open].to_string()));
                    rest = &rest[open + 1..];
                }
            }
        }
        if !rest.is_empty() {
            pieces.push(Piece::Text(rest.to_string()));
        }
        if let Some(missing) =
            seen.iter().zip(["{question}", "{context}", "{claim}"]).find_map(|(s, tag)| (!s).then_some(tag))
        {
            return Err(PromptError::InvalidTemplate {
                id: id.to_string(),
                reason: format!("missing placeholder {missing}"),
            });
        }
        Ok(Self { pieces })
    }

    fn render(&self, question: &str, context: &str, claim: &str) -> String {
        let mut out = String::new();
        for piece in &self.pieces {
            match piece {
                Piece::Text(t) => out.push_str(t),
                Piece::Question => out.push_str(question),
                Piece::Context => out.push_str(context),
                Piece::Claim => out.push_str(claim),
            }
        }
        out
    }
}

/// Named prompt templates. Always contains [`DEFAULT_TEMPLATE_ID`].
#[derive(Debug, Clone)]
pub struct TemplateRegistry {
    templates: BTreeMap<String, PromptTemplate>,
}

impl Default for TemplateRegistry {
    fn default() -> Self {
        let mut templates = BTreeMap::new();
        templates.insert(
            DEFAULT_TEMPLATE_ID.to_string(),
            PromptTemplate::parse(DEFAULT_TEMPLATE_ID, DEFAULT_TEMPLATE).expect("builtin template"),
        );
        Self { templates }
    }
}

impl TemplateRegistry {
    pub fn register(&mut self, id: &str, source: &str) -> Result<(), PromptError> {
        let template = PromptTemplate::parse(id, source)?;
        self.templates.insert(id.to_string(), template);
        Ok(())
    }

    pub fn contains(&self, id: &str) -> bool {
        self.templates.contains_key(id)
    }

    pub fn render(
        &self,
        question: &str,
        context: &str,
        claim: &str,
        template_id: &str,
    ) -> Result<PromptInstance, PromptError> {
        let template =
            self.templates.get(template_id).ok_or_else(|| PromptError::UnknownTemplate(template_id.to_string()))?;
        for (name, value) in [("question", question), ("context", context), ("claim", claim)] {
            if value.trim().is_empty() {
                return Err(PromptError::EmptyField(name));
            }
        }
        Ok(PromptInstance {
            question: question.to_string(),
            context: context.to_string(),
            claim: claim.to_string(),
            rendered: template.render(question, context, claim),
        })
    }
}

/// Renders with the built-in templates only.
pub fn render_prompt(
    question: &str,
    context: &str,
    claim: &str,
    template_id: &str,
) -> Result<PromptInstance, PromptError> {
    TemplateRegistry::default().render(question, context, claim, template_id)
}
