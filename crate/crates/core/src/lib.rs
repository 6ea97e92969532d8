//! Prompt-variant harness for LLM code generation: corpus loading, prompt
//! assembly, chat backends, output normalization and BLEU/CodeBLEU scoring.

pub mod code_analysis;
pub mod corpus;
pub mod prompt_forge;
pub mod metrics;
pub mod llm_gateway;
pub mod experiments;
