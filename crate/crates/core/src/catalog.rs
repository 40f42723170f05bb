//! Service catalogs and type schemas.
//!
//! A catalog is a JSON document listing services, their ports (endpoints)
//! and the typed signatures of each port's operations. A schema document
//! lists named record types. Both are looked up through a resolution table
//! that maps the URLs written in workflow source to local files.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::lang::WorkflowSpec;
use crate::types::TypeExpr;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: TypeExpr,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputSig {
    #[serde(rename = "type")]
    pub ty: TypeExpr,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationSig {
    pub name: String,
    pub inputs: Vec<Param>,
    pub output: OutputSig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortDesc {
    pub name: String,
    pub endpoint: String,
    pub operations: Vec<OperationSig>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceDesc {
    pub name: String,
    pub ports: Vec<PortDesc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceCatalog {
    pub description: String,
    pub services: Vec<ServiceDesc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Field {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: TypeExpr,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeDef {
    pub name: String,
    pub fields: Vec<Field>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeSchema {
    pub schema: String,
    pub types: Vec<TypeDef>,
}

impl TypeSchema {
    pub fn get(&self, name: &str) -> Option<&TypeDef> {
        self.types.iter().find(|t| t.name == name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("format error at {path}: {reason}")]
    Format { path: String, reason: String },
    #[error("duplicate {kind} `{name}` at {path}")]
    DuplicateName {
        kind: &'static str,
        name: String,
        path: String,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no document registered for `{0}`")]
    Unresolved(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LookupError {
    #[error("unknown service `{0}`")]
    UnknownService(String),
    #[error("unknown port `{0}`")]
    UnknownPort(String),
    #[error("unknown operation `{0}`")]
    UnknownOperation(String),
}

fn format_error(e: serde_json::Error) -> CatalogError {
    CatalogError::Format {
        path: format!("line {} column {}", e.line(), e.column()),
        reason: e.to_string(),
    }
}

fn unique<'a>(
    names: impl IntoIterator<Item = &'a str>,
    kind: &'static str,
    path: impl Fn(usize) -> String,
) -> Result<(), CatalogError> {
    let mut seen = HashSet::new();
    for (i, n) in names.into_iter().enumerate() {
        if !seen.insert(n) {
            return Err(CatalogError::DuplicateName {
                kind,
                name: n.to_string(),
                path: path(i),
            });
        }
    }
    Ok(())
}

/// Parse and validate a catalog document.
pub fn load_catalog(document: &[u8]) -> Result<ServiceCatalog, CatalogError> {
    let cat: ServiceCatalog = serde_json::from_slice(document).map_err(format_error)?;
    unique(
        cat.services.iter().map(|s| s.name.as_str()),
        "service",
        |i| format!("services[{i}]"),
    )?;
    for (si, svc) in cat.services.iter().enumerate() {
        unique(svc.ports.iter().map(|p| p.name.as_str()), "port", |i| {
            format!("services[{si}].ports[{i}]")
        })?;
        for (pi, port) in svc.ports.iter().enumerate() {
            let here = format!("services[{si}].ports[{pi}]");
            if port.endpoint.trim().is_empty() {
                return Err(CatalogError::Format {
                    path: format!("{here}.endpoint"),
                    reason: "endpoint must not be empty".into(),
                });
            }
            unique(
                port.operations.iter().map(|o| o.name.as_str()),
                "operation",
                |i| format!("{here}.operations[{i}]"),
            )?;
            for (oi, op) in port.operations.iter().enumerate() {
                unique(
                    op.inputs.iter().map(|p| p.name.as_str()),
                    "parameter",
                    |i| format!("{here}.operations[{oi}].inputs[{i}]"),
                )?;
            }
        }
    }
    Ok(cat)
}

impl ServiceCatalog {
    pub fn service(&self, service: &str) -> Result<&ServiceDesc, LookupError> {
        self.services
            .iter()
            .find(|s| s.name == service)
            .ok_or_else(|| LookupError::UnknownService(service.to_string()))
    }

    pub fn port(&self, service: &str, port: &str) -> Result<&PortDesc, LookupError> {
        self.service(service)?
            .ports
            .iter()
            .find(|p| p.name == port)
            .ok_or_else(|| LookupError::UnknownPort(port.to_string()))
    }

    /// Look up the signature of `service.port.op`.
    pub fn lookup_operation(
        &self,
        service: &str,
        port: &str,
        op: &str,
    ) -> Result<&OperationSig, LookupError> {
        self.port(service, port)?
            .operations
            .iter()
            .find(|o| o.name == op)
            .ok_or_else(|| LookupError::UnknownOperation(op.to_string()))
    }
}

/// Parse and validate a schema document. Field types must be base types or
/// types of the same schema, and type references must not form a cycle.
pub fn load_schema(document: &[u8]) -> Result<TypeSchema, CatalogError> {
    let schema: TypeSchema = serde_json::from_slice(document).map_err(format_error)?;
    unique(schema.types.iter().map(|t| t.name.as_str()), "type", |i| {
        format!("types[{i}]")
    })?;
    for (ti, t) in schema.types.iter().enumerate() {
        unique(t.fields.iter().map(|f| f.name.as_str()), "field", |i| {
            format!("types[{ti}].fields[{i}]")
        })?;
        for (fi, f) in t.fields.iter().enumerate() {
            if let TypeExpr::Complex { schema: s, name } = &f.ty {
                if s != &schema.schema || schema.get(name).is_none() {
                    return Err(CatalogError::Format {
                        path: format!("types[{ti}].fields[{fi}].type"),
                        reason: format!(
                            "type `{}` does not resolve within schema `{}`",
                            f.ty, schema.schema
                        ),
                    });
                }
            }
        }
    }
    // reject recursive records
    fn visit<'a>(s: &'a TypeSchema, name: &'a str, stack: &mut Vec<&'a str>) -> Result<(), String> {
        if stack.contains(&name) {
            stack.push(name);
            return Err(stack.join(" -> "));
        }
        stack.push(name);
        for f in &s.get(name).expect("validated").fields {
            if let TypeExpr::Complex { name: n, .. } = &f.ty {
                visit(s, n, stack)?;
            }
        }
        stack.pop();
        Ok(())
    }
    for (ti, t) in schema.types.iter().enumerate() {
        visit(&schema, &t.name, &mut Vec::new()).map_err(|cycle| CatalogError::Format {
            path: format!("types[{ti}]"),
            reason: format!("recursive type: {cycle}"),
        })?;
    }
    Ok(schema)
}

/// Catalogs and schemas keyed by the URL that workflow source uses to name them.
#[derive(Debug, Clone, Default)]
pub struct Documents {
    pub catalogs: BTreeMap<String, ServiceCatalog>,
    pub schemas: BTreeMap<String, TypeSchema>,
}

/// Maps document URLs to local files. Relative paths are taken relative to
/// the directory holding the table.
#[derive(Debug, Clone, Default)]
pub struct ResolutionTable {
    entries: BTreeMap<String, PathBuf>,
}

impl ResolutionTable {
    pub fn new(entries: BTreeMap<String, PathBuf>) -> ResolutionTable {
        ResolutionTable { entries }
    }

    pub fn load(path: &Path) -> Result<ResolutionTable, CatalogError> {
        let bytes = std::fs::read(path).map_err(|source| CatalogError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let raw: BTreeMap<String, PathBuf> =
            serde_json::from_slice(&bytes).map_err(format_error)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let entries = raw
            .into_iter()
            .map(|(url, p)| {
                let p = if p.is_relative() { base.join(p) } else { p };
                (url, p)
            })
            .collect();
        Ok(ResolutionTable { entries })
    }

    pub fn path_for(&self, url: &str) -> Option<&Path> {
        self.entries.get(url).map(PathBuf::as_path)
    }

    fn read(&self, url: &str) -> Result<Vec<u8>, CatalogError> {
        let path = self
            .path_for(url)
            .ok_or_else(|| CatalogError::Unresolved(url.to_string()))?;
        std::fs::read(path).map_err(|source| CatalogError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Load every document a workflow refers to. URLs without an entry are
    /// skipped; the analyzer reports them against the source position.
    pub fn load_for(&self, spec: &WorkflowSpec) -> Result<Documents, CatalogError> {
        let mut docs = Documents::default();
        for d in &spec.descriptions {
            if self.entries.contains_key(&d.url) && !docs.catalogs.contains_key(&d.url) {
                docs.catalogs
                    .insert(d.url.clone(), load_catalog(&self.read(&d.url)?)?);
            }
        }
        for s in &spec.schemas {
            if self.entries.contains_key(&s.url) && !docs.schemas.contains_key(&s.url) {
                docs.schemas
                    .insert(s.url.clone(), load_schema(&self.read(&s.url)?)?);
            }
        }
        Ok(docs)
    }

    /// Load every registered document. Entries are read as catalogs first,
    /// then as schemas.
    pub fn load_all(&self) -> Result<Documents, CatalogError> {
        let mut docs = Documents::default();
        for url in self.entries.keys() {
            let bytes = self.read(url)?;
            match load_catalog(&bytes) {
                Ok(c) => {
                    docs.catalogs.insert(url.clone(), c);
                }
                Err(catalog_err) => match load_schema(&bytes) {
                    Ok(s) => {
                        docs.schemas.insert(url.clone(), s);
                    }
                    Err(_) => return Err(catalog_err),
                },
            }
        }
        Ok(docs)
    }
}
