//! Toolkit for building layout-instruction corpora from public
//! document-annotation formats and for zero-shot evaluation of
//! document-understanding models.
//!
//! The crate is organized around the corpus pipeline:
//!
//! * [`bbox`], [`record`], [`serialize`] hold the shared geometry, domain
//!   records and segment serializations,
//! * [`ingest`] parses annotation files into [`record::DocumentRecord`]s,
//! * [`pretrain`] builds document-, region- and segment-level instructions,
//! * [`cot`] constructs layout chain-of-thought SFT records,
//! * [`assemble`] mixes task streams by ratio and emits JSONL corpora,
//! * [`llm`] talks to the generation service (or its deterministic mock),
//! * [`eval`] builds QA-for-VIE test sets and scores predictions,
//! * [`pipeline`] ties the stages into the CLI-facing commands,
//! * [`synth`] generates the self-consistent fixture corpora used by tests
//!   and demos.

pub mod assemble;
pub mod bbox;
pub mod cot;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod llm;
pub mod pipeline;
pub mod pretrain;
pub mod record;
pub mod seed;
pub mod serialize;
pub mod synth;
pub mod templates;

pub use bbox::{normalize_bbox, union_bbox, BBox, Direction};
pub use error::{Error, Result};
pub use record::{
    reading_order_sort, truncate_document, DocumentRecord, InstructionRecord, LayoutCot,
    LayoutRegion, Level, TableAnnotation, Task, TextSegment,
};
pub use serialize::{parse_segment, serialize_segment, TlrFormat};
