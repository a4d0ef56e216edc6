//! Textual segment serializations.
//!
//! Three families live here:
//!
//! * the angle format `<[x1,y1,x2,y2], text>` used by reconstruction and
//!   masking answers,
//! * the layout-text entry `{text:"...", box:[x1,y1,x2,y2]}` used to render
//!   whole documents for prompts,
//! * the three reconstruction output formats (angle lines, JSON list,
//!   Markdown table).
//!
//! Every serializer has an exact inverse; corpus tests rely on the
//! round-trips being lossless for arbitrary text.

use serde::{Deserialize, Serialize};

use crate::bbox::BBox;
use crate::error::{Error, Result};
use crate::record::TextSegment;

fn parse_err(what: &str, input: &str) -> Error {
    Error::Document {
        doc_id: String::new(),
        reason: format!("cannot parse {what} from {input:?}"),
    }
}

/// Escape text for the angle format: backslash before `\`, `<`, `>`, and
/// newlines replaced by a literal `\n`.
fn escape_angle(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '<' => out.push_str("\\<"),
            '>' => out.push_str("\\>"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out
}

fn unescape_angle(text: &str) -> Result<String> {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(ch) = chars.next() {
        if ch != '\\' {
            out.push(ch);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('<') => out.push('<'),
            Some('>') => out.push('>'),
            Some('n') => out.push('\n'),
            other => {
                return Err(parse_err(
                    "angle escape",
                    &format!("\\{}", other.map(String::from).unwrap_or_default()),
                ))
            }
        }
    }
    Ok(out)
}

fn parse_bracketed_box(s: &str) -> Result<BBox> {
    let inner = s
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| parse_err("bracketed box", s))?;
    let parts: Vec<&str> = inner.split(',').collect();
    if parts.len() != 4 {
        return Err(parse_err("bracketed box", s));
    }
    let mut coords = [0i64; 4];
    for (i, p) in parts.iter().enumerate() {
        coords[i] = p
            .trim()
            .parse::<i64>()
            .map_err(|_| parse_err("box coordinate", p))?;
    }
    BBox::new(coords[0], coords[1], coords[2], coords[3])
}

/// Serialize one segment as `<[x1,y1,x2,y2], text>`, bit-exact: a single
/// space after the comma and nothing else.
pub fn serialize_segment(seg: &TextSegment) -> String {
    format!("<{}, {}>", seg.bbox.bracketed(), escape_angle(&seg.text))
}

/// Inverse of [`serialize_segment`]. Corruption flags are not part of the
/// wire form, so they come back unset.
pub fn parse_segment(s: &str) -> Result<TextSegment> {
    let inner = s
        .strip_prefix('<')
        .and_then(|r| r.strip_suffix('>'))
        .ok_or_else(|| parse_err("angle segment", s))?;
    let close = inner.find(']').ok_or_else(|| parse_err("angle segment", s))?;
    let (box_part, rest) = inner.split_at(close + 1);
    let text_part = rest
        .strip_prefix(", ")
        .ok_or_else(|| parse_err("angle segment", s))?;
    Ok(TextSegment::new(
        unescape_angle(text_part)?,
        parse_bracketed_box(box_part)?,
    ))
}

/// One angle line per segment, newline-joined.
pub fn render_angle_list(segments: &[TextSegment]) -> String {
    segments
        .iter()
        .map(serialize_segment)
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn parse_angle_list(s: &str) -> Result<Vec<TextSegment>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.lines().map(parse_segment).collect()
}

fn escape_layout_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out
}

fn unescape_layout_text(text: &str) -> Result<String> {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(ch) = chars.next() {
        if ch != '\\' {
            out.push(ch);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('"') => out.push('"'),
            Some('n') => out.push('\n'),
            other => {
                return Err(parse_err(
                    "layout-text escape",
                    &format!("\\{}", other.map(String::from).unwrap_or_default()),
                ))
            }
        }
    }
    Ok(out)
}

/// One layout-text entry: `{text:"...", box:[x1,y1,x2,y2]}`.
pub fn layout_text_entry(seg: &TextSegment) -> String {
    format!(
        "{{text:\"{}\", box:{}}}",
        escape_layout_text(&seg.text),
        seg.bbox.bracketed()
    )
}

/// Inverse of [`layout_text_entry`].
pub fn parse_layout_text_entry(s: &str) -> Result<TextSegment> {
    let inner = s
        .strip_prefix("{text:\"")
        .ok_or_else(|| parse_err("layout-text entry", s))?;
    let body = inner
        .strip_suffix('}')
        .ok_or_else(|| parse_err("layout-text entry", s))?;
    // find the closing quote of the text field: the first unescaped `"`
    let bytes = body.as_bytes();
    let mut end = None;
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            b'"' => {
                end = Some(i);
                break;
            }
            _ => i += 1,
        }
    }
    let end = end.ok_or_else(|| parse_err("layout-text entry", s))?;
    let text = unescape_layout_text(&body[..end])?;
    let box_part = body[end + 1..]
        .strip_prefix(", box:")
        .ok_or_else(|| parse_err("layout-text entry", s))?;
    Ok(TextSegment::new(text, parse_bracketed_box(box_part)?))
}

/// Whole-document layout text: one entry per segment, newline-joined.
pub fn layout_text_body(segments: &[TextSegment]) -> String {
    segments
        .iter()
        .map(layout_text_entry)
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn parse_layout_text_body(s: &str) -> Result<Vec<TextSegment>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.lines().map(parse_layout_text_entry).collect()
}

/// Output format of text-and-layout reconstruction answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TlrFormat {
    Angle,
    Structured,
    Markdown,
}

impl TlrFormat {
    pub const ALL: [TlrFormat; 3] = [TlrFormat::Angle, TlrFormat::Structured, TlrFormat::Markdown];

    /// Name of the format as spelled inside question templates.
    pub fn display_name(&self) -> &'static str {
        match self {
            TlrFormat::Angle => "the <{box}, {text}>",
            TlrFormat::Structured => "JSON",
            TlrFormat::Markdown => "Markdown",
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            TlrFormat::Angle => "angle",
            TlrFormat::Structured => "structured",
            TlrFormat::Markdown => "markdown",
        }
    }
}

#[derive(Serialize, Deserialize)]
struct BoxText {
    #[serde(rename = "box")]
    bbox: BBox,
    text: String,
}

/// JSON reconstruction: a list of objects with exactly the fields
/// `box` and `text`.
pub fn render_json_list(segments: &[TextSegment]) -> String {
    let items: Vec<BoxText> = segments
        .iter()
        .map(|s| BoxText {
            bbox: s.bbox,
            text: s.text.clone(),
        })
        .collect();
    serde_json::to_string(&items).expect("segment list serializes")
}

pub fn parse_json_list(s: &str) -> Result<Vec<TextSegment>> {
    let items: Vec<BoxText> =
        serde_json::from_str(s).map_err(|e| parse_err("json segment list", &e.to_string()))?;
    Ok(items
        .into_iter()
        .map(|i| TextSegment::new(i.text, i.bbox))
        .collect())
}

fn escape_markdown_cell(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '|' => out.push_str("\\|"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out
}

fn unescape_markdown_cell(text: &str) -> Result<String> {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(ch) = chars.next() {
        if ch != '\\' {
            out.push(ch);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('|') => out.push('|'),
            Some('n') => out.push('\n'),
            other => {
                return Err(parse_err(
                    "markdown escape",
                    &format!("\\{}", other.map(String::from).unwrap_or_default()),
                ))
            }
        }
    }
    Ok(out)
}

const MD_HEADER: &str = "| box | text |";
const MD_SEPARATOR: &str = "| --- | --- |";

/// Markdown reconstruction: a two-column `| box | text |` table.
pub fn render_markdown_table(segments: &[TextSegment]) -> String {
    let mut lines = vec![MD_HEADER.to_string(), MD_SEPARATOR.to_string()];
    for seg in segments {
        lines.push(format!(
            "| {} | {} |",
            seg.bbox.bracketed(),
            escape_markdown_cell(&seg.text)
        ));
    }
    lines.join("\n")
}

pub fn parse_markdown_table(s: &str) -> Result<Vec<TextSegment>> {
    let mut lines = s.lines();
    if lines.next() != Some(MD_HEADER) || lines.next() != Some(MD_SEPARATOR) {
        return Err(parse_err("markdown table header", s));
    }
    let mut out = Vec::new();
    for line in lines {
        let inner = line
            .strip_prefix("| ")
            .and_then(|r| r.strip_suffix(" |"))
            .ok_or_else(|| parse_err("markdown row", line))?;
        let close = inner
            .find(']')
            .ok_or_else(|| parse_err("markdown row", line))?;
        let (box_part, rest) = inner.split_at(close + 1);
        let cell = rest
            .strip_prefix(" | ")
            .ok_or_else(|| parse_err("markdown row", line))?;
        out.push(TextSegment::new(
            unescape_markdown_cell(cell)?,
            parse_bracketed_box(box_part)?,
        ));
    }
    Ok(out)
}

/// Render segments in the requested reconstruction format.
pub fn render_tlr(segments: &[TextSegment], format: TlrFormat) -> String {
    match format {
        TlrFormat::Angle => render_angle_list(segments),
        TlrFormat::Structured => render_json_list(segments),
        TlrFormat::Markdown => render_markdown_table(segments),
    }
}

/// Parse a reconstruction answer back into segments.
pub fn parse_tlr(s: &str, format: TlrFormat) -> Result<Vec<TextSegment>> {
    match format {
        TlrFormat::Angle => parse_angle_list(s),
        TlrFormat::Structured => parse_json_list(s),
        TlrFormat::Markdown => parse_markdown_table(s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seg(text: &str, b: [i64; 4]) -> TextSegment {
        TextSegment::new(text, BBox::new(b[0], b[1], b[2], b[3]).unwrap())
    }

    #[test]
    fn angle_format_is_exact() {
        assert_eq!(
            serialize_segment(&seg("Total: $5.00", [12, 34, 56, 78])),
            "<[12,34,56,78], Total: $5.00>"
        );
    }

    #[test]
    fn angle_escapes_brackets() {
        assert_eq!(
            serialize_segment(&seg("a<b", [0, 0, 1, 1])),
            "<[0,0,1,1], a\\<b>"
        );
    }

    #[test]
    fn angle_parse_round_trips_specials() {
        for text in ["a<b>c", "back\\slash", "new\nline", "< , >", "plain"] {
            let s = seg(text, [1, 2, 3, 4]);
            let back = parse_segment(&serialize_segment(&s)).unwrap();
            assert_eq!(back.text, s.text);
            assert_eq!(back.bbox, s.bbox);
        }
    }

    #[test]
    fn layout_text_entry_format() {
        assert_eq!(
            layout_text_entry(&seg("Invoice", [10, 20, 30, 40])),
            "{text:\"Invoice\", box:[10,20,30,40]}"
        );
    }

    #[test]
    fn markdown_round_trip_with_pipes() {
        let segs = vec![seg("a|b", [0, 0, 5, 5]), seg("plain", [0, 10, 5, 15])];
        let md = render_markdown_table(&segs);
        let back = parse_markdown_table(&md).unwrap();
        assert_eq!(back, segs);
    }

    #[test]
    fn empty_lists_round_trip() {
        for fmt in TlrFormat::ALL {
            let rendered = render_tlr(&[], fmt);
            assert_eq!(parse_tlr(&rendered, fmt).unwrap(), Vec::new());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn angle_round_trip_arbitrary(text in ".*", x1 in 0i64..=1000, y1 in 0i64..=1000) {
            let b = BBox::new(x1.min(900), y1.min(900), x1.min(900) + 10, y1.min(900) + 10).unwrap();
            let s = TextSegment::new(text, b);
            let back = parse_segment(&serialize_segment(&s)).unwrap();
            prop_assert_eq!(back.text, s.text);
            prop_assert_eq!(back.bbox, s.bbox);
        }

        #[test]
        fn layout_text_round_trip_arbitrary(text in ".*") {
            let s = TextSegment::new(text, BBox::new(1, 2, 3, 4).unwrap());
            let back = parse_layout_text_entry(&layout_text_entry(&s)).unwrap();
            prop_assert_eq!(back.text, s.text);
        }

        #[test]
        fn tlr_round_trip_all_formats(texts in proptest::collection::vec(".*", 0..6)) {
            let segs: Vec<TextSegment> = texts
                .iter()
                .enumerate()
                .map(|(i, t)| seg(t, [0, (i as i64) * 20, 50, (i as i64) * 20 + 10]))
                .collect();
            for fmt in TlrFormat::ALL {
                let rendered = render_tlr(&segs, fmt);
                let back = parse_tlr(&rendered, fmt).unwrap();
                prop_assert_eq!(&back, &segs);
            }
        }
    }
}
