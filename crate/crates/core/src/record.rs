//! Domain records: text segments, layout regions, tables, VIE annotations,
//! whole-page documents and the instruction records built from them.

use serde::{Deserialize, Serialize};

use crate::bbox::BBox;
use crate::error::{Error, Result};

/// Literal placeholder substituted for masked segment text.
pub const MASK_TOKEN: &str = "[MASK]";

/// Word budget applied when truncating documents for record construction.
pub const DOC_TOKEN_BUDGET: usize = 512;

/// One OCR / PDF-parse text unit with its box.
///
/// `masked_text` and `zeroed_box` mark self-supervised corruptions applied to
/// instruction inputs; at most one of the two is set on a segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextSegment {
    pub text: String,
    #[serde(rename = "box")]
    pub bbox: BBox,
    #[serde(default)]
    pub masked_text: bool,
    #[serde(default)]
    pub zeroed_box: bool,
}

impl TextSegment {
    pub fn new(text: impl Into<String>, bbox: BBox) -> Self {
        TextSegment {
            text: text.into(),
            bbox,
            masked_text: false,
            zeroed_box: false,
        }
    }

    /// Copy with the text replaced by the mask placeholder.
    pub fn masked(&self) -> Self {
        TextSegment {
            text: MASK_TOKEN.to_string(),
            bbox: self.bbox,
            masked_text: true,
            zeroed_box: false,
        }
    }

    /// Copy with the box zeroed out.
    pub fn zeroed(&self) -> Self {
        TextSegment {
            text: self.text.clone(),
            bbox: BBox::zero(),
            masked_text: false,
            zeroed_box: true,
        }
    }

    /// Whitespace-split word count, the unit of the document token budget.
    pub fn word_count(&self) -> usize {
        self.text.split_whitespace().count()
    }
}

/// A typed layout region (title, table, figure, ...). Labels come verbatim
/// from the ingesting dataset's taxonomy, lowercased.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutRegion {
    pub kind: String,
    #[serde(rename = "box")]
    pub bbox: BBox,
}

/// One table cell at 1-based logical coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableCell {
    pub row: u32,
    pub col: u32,
    pub text: String,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BBox>,
}

/// Table structure annotation: grid shape plus cells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableAnnotation {
    pub n_rows: u32,
    pub n_cols: u32,
    pub cells: Vec<TableCell>,
}

impl TableAnnotation {
    /// Check grid consistency: positive shape, cells inside the grid, no
    /// duplicate logical coordinates.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.n_rows == 0 || self.n_cols == 0 {
            return Err("table with zero rows or columns".into());
        }
        if self.cells.is_empty() {
            return Err("table without cells".into());
        }
        let mut seen = std::collections::HashSet::new();
        for c in &self.cells {
            if c.row == 0 || c.col == 0 || c.row > self.n_rows || c.col > self.n_cols {
                return Err(format!(
                    "cell ({},{}) outside {}x{} grid",
                    c.row, c.col, self.n_rows, self.n_cols
                ));
            }
            if !seen.insert((c.row, c.col)) {
                return Err(format!("duplicate cell at ({},{})", c.row, c.col));
            }
        }
        Ok(())
    }

    /// Cells of one row in ascending column order.
    pub fn row_cells(&self, row: u32) -> Vec<&TableCell> {
        let mut v: Vec<&TableCell> = self.cells.iter().filter(|c| c.row == row).collect();
        v.sort_by_key(|c| c.col);
        v
    }

    /// Cells of one column in ascending row order.
    pub fn col_cells(&self, col: u32) -> Vec<&TableCell> {
        let mut v: Vec<&TableCell> = self.cells.iter().filter(|c| c.col == col).collect();
        v.sort_by_key(|c| c.row);
        v
    }
}

/// Key entity of a key-value link.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VieKey {
    pub entity_id: String,
    pub text: String,
    #[serde(rename = "box")]
    pub bbox: BBox,
}

/// A linked value entity, resolved to its text at ingest time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VieValue {
    pub entity_id: String,
    pub text: String,
}

/// One key with all entities it links to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VieLink {
    pub key: VieKey,
    pub values: Vec<VieValue>,
}

/// A typed entity annotation (receipt-style datasets).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VieEntity {
    pub etype: String,
    pub text: String,
}

/// Visual information extraction annotation attached to a document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum VieAnnotation {
    /// Form-style data: key entities linking to value entities.
    Linking { links: Vec<VieLink> },
    /// Receipt-style data: flat typed entities.
    Entity { entities: Vec<VieEntity> },
}

/// One document page with everything its source dataset annotates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub doc_id: String,
    pub image_ref: Option<String>,
    pub page_w: u32,
    pub page_h: u32,
    pub segments: Vec<TextSegment>,
    #[serde(default)]
    pub regions: Vec<LayoutRegion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<TableAnnotation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vie: Option<VieAnnotation>,
    pub source: String,
}

impl DocumentRecord {
    pub fn new(doc_id: impl Into<String>, page_w: u32, page_h: u32) -> Self {
        DocumentRecord {
            doc_id: doc_id.into(),
            image_ref: None,
            page_w,
            page_h,
            segments: Vec::new(),
            regions: Vec::new(),
            table: None,
            vie: None,
            source: String::new(),
        }
    }

    /// Total whitespace-split word count over all segments.
    pub fn word_count(&self) -> usize {
        self.segments.iter().map(TextSegment::word_count).sum()
    }
}

/// Stable sort of segments into reading order: ascending (y1, x1), ties keep
/// input order.
pub fn reading_order_sort(segments: &mut [TextSegment]) {
    segments.sort_by_key(|s| (s.bbox.y1, s.bbox.x1));
}

/// Same ordering for layout regions.
pub fn sort_regions_reading_order(regions: &mut [LayoutRegion]) {
    regions.sort_by_key(|r| (r.bbox.y1, r.bbox.x1));
}

/// Result of applying the document word budget.
#[derive(Debug, Clone)]
pub struct TruncateOutcome {
    pub record: DocumentRecord,
    /// True when the first segment alone exceeded the budget and was kept
    /// anyway.
    pub single_segment_overflow: bool,
}

/// Keep the longest reading-order prefix of segments whose cumulative word
/// count stays within `max_tokens`. Segments are never split. If the very
/// first segment exceeds the budget on its own it is kept and flagged.
pub fn truncate_document(doc: &DocumentRecord, max_tokens: usize) -> TruncateOutcome {
    let mut record = doc.clone();
    reading_order_sort(&mut record.segments);

    let mut kept = Vec::new();
    let mut used = 0usize;
    let mut overflow = false;
    for seg in record.segments.drain(..) {
        let words = seg.word_count();
        if kept.is_empty() && words > max_tokens {
            kept.push(seg);
            overflow = true;
            break;
        }
        if used + words > max_tokens {
            break;
        }
        used += words;
        kept.push(seg);
    }
    record.segments = kept;
    TruncateOutcome {
        record,
        single_segment_overflow: overflow,
    }
}

/// Instruction task tags, one per pre-training or SFT task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Ddd,
    Tlr,
    DlaLocate,
    DlaClassify,
    TuShape,
    TuLogical,
    TuContent,
    Mvlm,
    MaskPos,
    Geometric,
    CotQa,
}

impl Task {
    /// The level a task belongs to. The mapping is total, so records carry a
    /// consistent (task, level) pair by construction.
    pub fn level(&self) -> Level {
        match self {
            Task::Ddd | Task::Tlr => Level::Document,
            Task::DlaLocate
            | Task::DlaClassify
            | Task::TuShape
            | Task::TuLogical
            | Task::TuContent => Level::Region,
            Task::Mvlm | Task::MaskPos | Task::Geometric => Level::Segment,
            Task::CotQa => Level::Sft,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Task::Ddd => "ddd",
            Task::Tlr => "tlr",
            Task::DlaLocate => "dla_locate",
            Task::DlaClassify => "dla_classify",
            Task::TuShape => "tu_shape",
            Task::TuLogical => "tu_logical",
            Task::TuContent => "tu_content",
            Task::Mvlm => "mvlm",
            Task::MaskPos => "mask_pos",
            Task::Geometric => "geometric",
            Task::CotQa => "cot_qa",
        }
    }
}

/// Hierarchy level of an instruction record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Document,
    Region,
    Segment,
    Sft,
}

impl Level {
    pub fn tag(&self) -> &'static str {
        match self {
            Level::Document => "document",
            Level::Region => "region",
            Level::Segment => "segment",
            Level::Sft => "sft",
        }
    }
}

/// Three-step layout chain of thought attached to SFT records: question
/// analysis, relevant-area box, answer formation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutCot {
    pub step1: String,
    pub step2_box: BBox,
    pub step3: String,
}

/// One training example in the emitted corpora. Field order here is the
/// canonical JSONL field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstructionRecord {
    pub id: String,
    pub task: Task,
    pub level: Level,
    pub doc_id: String,
    pub image_ref: Option<String>,
    pub input_segments: Vec<TextSegment>,
    pub question: String,
    pub answer: String,
    pub cot: Option<LayoutCot>,
    pub seed: u64,
    pub source: String,
}

impl InstructionRecord {
    /// Invariant check: level matches the task, answer non-empty, at most one
    /// corruption flag per segment.
    pub fn validate(&self) -> Result<()> {
        if self.level != self.task.level() {
            return Err(Error::Document {
                doc_id: self.doc_id.clone(),
                reason: format!(
                    "record {} has level {:?} but task {:?} implies {:?}",
                    self.id,
                    self.level,
                    self.task,
                    self.task.level()
                ),
            });
        }
        if self.answer.is_empty() {
            return Err(Error::Document {
                doc_id: self.doc_id.clone(),
                reason: format!("record {} has an empty answer", self.id),
            });
        }
        for seg in &self.input_segments {
            if seg.masked_text && seg.zeroed_box {
                return Err(Error::Document {
                    doc_id: self.doc_id.clone(),
                    reason: format!("record {} has a segment both masked and zeroed", self.id),
                });
            }
            if seg.masked_text && seg.text != MASK_TOKEN {
                return Err(Error::Document {
                    doc_id: self.doc_id.clone(),
                    reason: format!("record {} has a masked segment with non-mask text", self.id),
                });
            }
            if seg.zeroed_box && !seg.bbox.is_zero() {
                return Err(Error::Document {
                    doc_id: self.doc_id.clone(),
                    reason: format!("record {} has a zeroed segment with a non-zero box", self.id),
                });
            }
        }
        Ok(())
    }
}
