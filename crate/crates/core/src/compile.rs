//! Source-to-graph convenience: parse, resolve, check and build in one call.

use crate::analyzer::{analyze, Diagnostic, ResolvedWorkflow};
use crate::catalog::{CatalogError, Documents, ResolutionTable};
use crate::dag::{build_graph, DataflowGraph};
use crate::lang::parse_source;

#[derive(Debug, Clone)]
pub struct Compiled {
    pub resolved: ResolvedWorkflow,
    pub graph: DataflowGraph,
    pub warnings: Vec<Diagnostic>,
}

#[derive(Debug, thiserror::Error)]
pub enum CompileError {
    #[error(transparent)]
    Documents(#[from] CatalogError),
    #[error("{} error(s)", .0.iter().filter(|d| d.is_error()).count())]
    Diagnostics(Vec<Diagnostic>),
}

impl CompileError {
    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            CompileError::Diagnostics(d) => d,
            CompileError::Documents(_) => &[],
        }
    }
}

/// Compile against documents that are already loaded.
pub fn compile(source: &str, docs: &Documents) -> Result<Compiled, Vec<Diagnostic>> {
    let spec = parse_source(source).map_err(|e| vec![Diagnostic::from(&e)])?;
    let analysis = analyze(&spec, docs)?;
    let graph = build_graph(&analysis.resolved).map_err(|e| vec![e.to_diagnostic()])?;
    Ok(Compiled {
        resolved: analysis.resolved,
        graph,
        warnings: analysis.warnings,
    })
}

/// Compile, loading the documents the source names through `table`.
pub fn compile_with_table(source: &str, table: &ResolutionTable) -> Result<Compiled, CompileError> {
    let spec =
        parse_source(source).map_err(|e| CompileError::Diagnostics(vec![Diagnostic::from(&e)]))?;
    let docs = table.load_for(&spec)?;
    compile(source, &docs).map_err(CompileError::Diagnostics)
}
