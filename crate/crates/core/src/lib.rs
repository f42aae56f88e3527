//! Synthetic data generation and projection onto a small action language
//! for reading comprehension over annotated paragraphs.

pub mod corpus;
pub mod dsl;
pub mod embedding;
pub mod eval;
pub mod fixtures;
pub mod generator;
pub mod interpreter;
pub mod par;
pub mod pipeline;
pub mod projection;
pub mod text;

pub use corpus::{AnnotatedParagraph, Mention, MentionKind};
pub use dsl::{ActionProgram, NodePath, Skeleton, ValueKind};
pub use embedding::{EmbeddingProvider, HashedEmbedding, VectorTable};
pub use eval::{metric_em, metric_f1, normalize_answer, EvalReport};
pub use generator::{generate_dataset, SyntheticExample, Template};
pub use interpreter::{execute, Answer, ExecError, ExecTrace};
pub use projection::{CosineProjector, Mode, Models, SkeletonClassifier, TrainConfig};
