//! Instruction and prompt templates.
//!
//! Question templates are line-per-variant text files; a seeded uniform pick
//! selects one variant per record. Prompt templates are whole-file texts.
//! Built-in defaults are compiled in; any file dropped into a template
//! directory overrides the entry of the same name.
//!
//! Placeholders are written `{name}` where `name` is an identifier. Brace
//! groups that are not plain identifiers (JSON snippets and the like) pass
//! through untouched. Substitution is single-pass: substituted values are
//! never rescanned.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};

/// Template ids with line-per-variant question files.
pub const QUESTION_TEMPLATE_IDS: [&str; 10] = [
    "ddd",
    "tlr",
    "dla_locate",
    "dla_classify",
    "tu_shape",
    "tu_logical",
    "tu_content",
    "mvlm",
    "mask_pos",
    "geometric",
];

/// Template ids holding one whole-file prompt or single-line template.
pub const PROMPT_TEMPLATE_IDS: [&str; 5] = [
    "ddd_prompt",
    "qa_cot_prompt",
    "html_gen_prompt",
    "mrc_step1",
    "mrc_step3",
];

const BUILTIN_QUESTIONS: [(&str, &str); 10] = [
    ("ddd", include_str!("../resources/templates/ddd_questions.txt")),
    ("tlr", include_str!("../resources/templates/tlr_questions.txt")),
    (
        "dla_locate",
        include_str!("../resources/templates/dla_locate_questions.txt"),
    ),
    (
        "dla_classify",
        include_str!("../resources/templates/dla_classify_questions.txt"),
    ),
    (
        "tu_shape",
        include_str!("../resources/templates/tu_shape_questions.txt"),
    ),
    (
        "tu_logical",
        include_str!("../resources/templates/tu_logical_questions.txt"),
    ),
    (
        "tu_content",
        include_str!("../resources/templates/tu_content_questions.txt"),
    ),
    ("mvlm", include_str!("../resources/templates/mvlm_questions.txt")),
    (
        "mask_pos",
        include_str!("../resources/templates/mask_pos_questions.txt"),
    ),
    (
        "geometric",
        include_str!("../resources/templates/geometric_questions.txt"),
    ),
];

const BUILTIN_PROMPTS: [(&str, &str); 5] = [
    ("ddd_prompt", include_str!("../resources/templates/ddd_prompt.txt")),
    (
        "qa_cot_prompt",
        include_str!("../resources/templates/qa_cot_prompt.txt"),
    ),
    (
        "html_gen_prompt",
        include_str!("../resources/templates/html_gen_prompt.txt"),
    ),
    ("mrc_step1", include_str!("../resources/templates/mrc_step1.txt")),
    ("mrc_step3", include_str!("../resources/templates/mrc_step3.txt")),
];

const BUILTIN_DOC_TYPES: &str = include_str!("../resources/templates/html_doc_types.txt");

/// All templates available to the builders.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    questions: BTreeMap<String, Vec<String>>,
    prompts: BTreeMap<String, String>,
    doc_types: Vec<String>,
}

fn non_empty_lines(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim_end)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect()
}

impl TemplateSet {
    /// The compiled-in defaults.
    pub fn builtin() -> Self {
        let questions = BUILTIN_QUESTIONS
            .iter()
            .map(|(id, text)| (id.to_string(), non_empty_lines(text)))
            .collect();
        let prompts = BUILTIN_PROMPTS
            .iter()
            .map(|(id, text)| (id.to_string(), text.to_string()))
            .collect();
        TemplateSet {
            questions,
            prompts,
            doc_types: non_empty_lines(BUILTIN_DOC_TYPES),
        }
    }

    /// Defaults with overrides from a directory. `<id>_questions.txt`
    /// replaces a question list, `<id>.txt` a prompt, and
    /// `html_doc_types.txt` the document type list.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let mut set = TemplateSet::builtin();
        for id in QUESTION_TEMPLATE_IDS {
            let path = dir.join(format!("{id}_questions.txt"));
            if path.is_file() {
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::io(path.display().to_string(), e))?;
                let lines = non_empty_lines(&text);
                if lines.is_empty() {
                    return Err(Error::Config(format!(
                        "template file {} has no templates",
                        path.display()
                    )));
                }
                set.questions.insert(id.to_string(), lines);
            }
        }
        for id in PROMPT_TEMPLATE_IDS {
            let path = dir.join(format!("{id}.txt"));
            if path.is_file() {
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::io(path.display().to_string(), e))?;
                set.prompts.insert(id.to_string(), text);
            }
        }
        let types_path = dir.join("html_doc_types.txt");
        if types_path.is_file() {
            let text = std::fs::read_to_string(&types_path)
                .map_err(|e| Error::io(types_path.display().to_string(), e))?;
            set.doc_types = non_empty_lines(&text);
        }
        Ok(set)
    }

    /// Uniform seeded pick from a question template list.
    pub fn pick_question(&self, id: &str, rng: &mut impl Rng) -> Result<&str> {
        let variants = self
            .questions
            .get(id)
            .ok_or_else(|| Error::TemplateNotFound(id.to_string()))?;
        let idx = rng.gen_range(0..variants.len());
        Ok(&variants[idx])
    }

    pub fn question_variants(&self, id: &str) -> Result<&[String]> {
        self.questions
            .get(id)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::TemplateNotFound(id.to_string()))
    }

    pub fn prompt(&self, id: &str) -> Result<&str> {
        self.prompts
            .get(id)
            .map(String::as_str)
            .ok_or_else(|| Error::TemplateNotFound(id.to_string()))
    }

    /// Document type list for free HTML generation prompts.
    pub fn doc_types(&self) -> &[String] {
        &self.doc_types
    }
}

fn is_placeholder_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Substitute `{name}` placeholders from `bindings`. A brace group whose
/// content is a valid identifier must resolve; anything else is literal
/// text.
pub fn render_template(
    template_id: &str,
    template: &str,
    bindings: &BTreeMap<&str, String>,
) -> Result<String> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) => {
                let name = &after[..close];
                if is_placeholder_name(name) {
                    match bindings.get(name) {
                        Some(value) => out.push_str(value),
                        None => {
                            return Err(Error::UnresolvedPlaceholder {
                                template: template_id.to_string(),
                                placeholder: name.to_string(),
                            })
                        }
                    }
                } else {
                    out.push('{');
                    out.push_str(name);
                    out.push('}');
                }
                rest = &after[close + 1..];
            }
            None => {
                out.push_str(&rest[open..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn bindings(pairs: &[(&'static str, &str)]) -> BTreeMap<&'static str, String> {
        pairs.iter().map(|(k, v)| (*k, v.to_string())).collect()
    }

    #[test]
    fn builtin_set_is_complete() {
        let set = TemplateSet::builtin();
        for id in QUESTION_TEMPLATE_IDS {
            assert!(!set.question_variants(id).unwrap().is_empty(), "{id}");
        }
        for id in PROMPT_TEMPLATE_IDS {
            assert!(!set.prompt(id).unwrap().is_empty(), "{id}");
        }
        assert!(set.doc_types().contains(&"invoice".to_string()));
    }

    #[test]
    fn ddd_prompt_carries_word_cap() {
        let set = TemplateSet::builtin();
        let rendered = render_template(
            "ddd_prompt",
            set.prompt("ddd_prompt").unwrap(),
            &bindings(&[("document", "{text:\"hi\", box:[1,2,3,4]}"), ("max_words", "500")]),
        )
        .unwrap();
        assert!(rendered.contains("less than 500"));
        assert!(rendered.contains("{text:\"hi\", box:[1,2,3,4]}"));
    }

    #[test]
    fn question_pick_is_seeded() {
        let set = TemplateSet::builtin();
        let mut a = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut b = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        assert_eq!(
            set.pick_question("ddd", &mut a).unwrap(),
            set.pick_question("ddd", &mut b).unwrap()
        );
    }

    #[test]
    fn literal_brace_groups_pass_through() {
        let out = render_template(
            "t",
            "entry {text:\"a\", box:[1]} and {name}",
            &bindings(&[("name", "X")]),
        )
        .unwrap();
        assert_eq!(out, "entry {text:\"a\", box:[1]} and X");
    }

    #[test]
    fn missing_binding_is_listed() {
        let err = render_template("t", "hello {who}", &BTreeMap::new()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("who"), "{msg}");
    }

    #[test]
    fn substituted_values_are_not_rescanned() {
        let out = render_template(
            "t",
            "in {format} format",
            &bindings(&[("format", "the <{box}, {text}>")]),
        )
        .unwrap();
        assert_eq!(out, "in the <{box}, {text}> format");
    }
}
