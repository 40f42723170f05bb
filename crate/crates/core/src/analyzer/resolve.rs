use std::collections::{BTreeMap, HashMap, HashSet};

use super::*;
use crate::catalog::{ServiceCatalog, TypeSchema};
use crate::lang::{AssignValue, Invocation, StatementKind, TupleItem};
use crate::types::TypeExpr;

struct Resolver<'a> {
    spec: &'a WorkflowSpec,
    catalogs: &'a BTreeMap<String, ServiceCatalog>,
    schemas: &'a BTreeMap<String, TypeSchema>,
    diags: Vec<Diagnostic>,
    ports: BTreeMap<String, PortBinding>,
    schema_ids: HashMap<String, &'a TypeSchema>,
    invocations: Vec<InvocationInfo>,
    inv_ids: HashMap<(String, String), usize>,
}

fn catalog_type(t: &TypeExpr) -> Ty {
    match t {
        TypeExpr::Base(b) => Ty::Base(*b),
        TypeExpr::Complex { schema, name } => Ty::Complex {
            schema: schema.clone(),
            name: name.clone(),
        },
    }
}

impl<'a> Resolver<'a> {
    fn err(&mut self, code: Code, pos: Pos, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error(code, pos, msg));
    }

    fn definitions(&mut self) {
        let mut descriptions: HashMap<&str, &'a ServiceCatalog> = HashMap::new();
        let mut declared_descriptions = HashSet::new();
        for d in &self.spec.descriptions {
            declared_descriptions.insert(d.name.as_str());
            match self.catalogs.get(&d.url) {
                Some(c) => {
                    descriptions.insert(&d.name, c);
                }
                None => self.err(
                    Code::UnresolvedDocument,
                    d.ref_pos,
                    format!("no service description available for `{}`", d.url),
                ),
            }
        }
        let mut services: HashMap<&str, (&'a ServiceCatalog, &str)> = HashMap::new();
        let mut broken_services = HashSet::new();
        for s in &self.spec.services {
            match descriptions.get(s.description.as_str()) {
                Some(cat) => match cat.service(&s.service) {
                    Ok(_) => {
                        services.insert(&s.name, (cat, &s.service));
                    }
                    Err(_) => {
                        broken_services.insert(s.name.as_str());
                        self.err(
                            Code::UnknownService,
                            s.ref_pos,
                            format!(
                                "description `{}` has no service `{}`",
                                s.description, s.service
                            ),
                        )
                    }
                },
                None => {
                    broken_services.insert(s.name.as_str());
                    if !declared_descriptions.contains(s.description.as_str()) {
                        self.err(
                            Code::UnknownDescription,
                            s.ref_pos,
                            format!("unknown description `{}`", s.description),
                        )
                    }
                }
            }
        }
        for p in &self.spec.ports {
            match services.get(p.service.as_str()) {
                Some((cat, svc)) => match cat.port(svc, &p.port) {
                    Ok(port) => {
                        self.ports.insert(
                            p.name.clone(),
                            PortBinding {
                                service: svc.to_string(),
                                port: port.name.clone(),
                                endpoint: port.endpoint.clone(),
                                operations: port.operations.clone(),
                            },
                        );
                    }
                    Err(_) => self.err(
                        Code::UnknownPort,
                        p.ref_pos,
                        format!("service `{}` has no port `{}`", p.service, p.port),
                    ),
                },
                None if broken_services.contains(p.service.as_str()) => {}
                None => self.err(
                    Code::UnknownService,
                    p.ref_pos,
                    format!("unknown service `{}`", p.service),
                ),
            }
        }
        for s in &self.spec.schemas {
            match self.schemas.get(&s.url) {
                Some(doc) => {
                    self.schema_ids.insert(s.name.clone(), doc);
                }
                None => self.err(
                    Code::UnresolvedDocument,
                    s.ref_pos,
                    format!("no type schema available for `{}`", s.url),
                ),
            }
        }
    }

    fn source_type(&mut self, t: &TypeExpr, pos: Pos) -> Option<Ty> {
        match t {
            TypeExpr::Base(b) => Some(Ty::Base(*b)),
            TypeExpr::Complex { schema, name } => {
                let declared = self.spec.schemas.iter().any(|s| &s.name == schema);
                let Some(doc) = self.schema_ids.get(schema).copied() else {
                    if !declared {
                        self.err(
                            Code::UnknownSchema,
                            pos,
                            format!("unknown schema `{schema}`"),
                        );
                    }
                    return None;
                };
                if doc.get(name).is_none() {
                    self.err(
                        Code::UnknownType,
                        pos,
                        format!("schema `{schema}` has no type `{name}`"),
                    );
                    return None;
                }
                Some(Ty::Complex {
                    schema: doc.schema.clone(),
                    name: name.clone(),
                })
            }
        }
    }

    fn invocation(&mut self, inv: &Invocation) -> Option<InvRef> {
        let Some(binding) = self.ports.get(&inv.port) else {
            if !self.spec.ports.iter().any(|p| p.name == inv.port) {
                self.err(
                    Code::UnknownPort,
                    inv.pos,
                    format!("unknown port `{}`", inv.port),
                );
            }
            return None;
        };
        let Some(sig) = binding.operations.iter().find(|o| o.name == inv.operation) else {
            let msg = format!("port `{}` has no operation `{}`", inv.port, inv.operation);
            self.err(Code::UnknownOperation, inv.pos, msg);
            return None;
        };
        let param = match &inv.parameter {
            None => None,
            Some(p) => match sig.inputs.iter().position(|i| &i.name == p) {
                Some(i) => Some(i),
                None => {
                    let msg = format!(
                        "operation `{}.{}` has no parameter `{p}`",
                        inv.port, inv.operation
                    );
                    self.err(Code::UnknownParameter, inv.pos, msg);
                    return None;
                }
            },
        };
        let key = (inv.port.clone(), inv.operation.clone());
        let id = match self.inv_ids.get(&key) {
            Some(&id) => id,
            None => {
                let signature = Signature {
                    name: sig.name.clone(),
                    inputs: sig
                        .inputs
                        .iter()
                        .map(|p| (p.name.clone(), catalog_type(&p.ty)))
                        .collect(),
                    output: catalog_type(&sig.output.ty),
                };
                let id = self.invocations.len();
                self.invocations.push(InvocationInfo {
                    port: inv.port.clone(),
                    operation: inv.operation.clone(),
                    endpoint: binding.endpoint.clone(),
                    signature,
                    pos: inv.pos,
                });
                self.inv_ids.insert(key, id);
                id
            }
        };
        Some(InvRef { id, param })
    }

    fn targets(&mut self, targets: &[Invocation]) -> Option<Vec<InvRef>> {
        let refs: Vec<_> = targets.iter().map(|t| self.invocation(t)).collect();
        refs.into_iter().collect()
    }
}

/// Resolve identifiers against catalogs and schemas keyed by document URL.
pub fn resolve(
    spec: &WorkflowSpec,
    catalogs: &BTreeMap<String, ServiceCatalog>,
    schemas: &BTreeMap<String, TypeSchema>,
) -> Result<ResolvedWorkflow, Vec<Diagnostic>> {
    let mut r = Resolver {
        spec,
        catalogs,
        schemas,
        diags: Vec::new(),
        ports: BTreeMap::new(),
        schema_ids: HashMap::new(),
        invocations: Vec::new(),
        inv_ids: HashMap::new(),
    };
    r.definitions();

    let mut var_types: BTreeMap<String, Ty> = BTreeMap::new();
    let mut definitions: BTreeMap<String, Vec<DefSite>> = BTreeMap::new();
    let mut inputs = Vec::new();
    for v in &spec.interface.inputs {
        let ty = r.source_type(&v.ty, v.ty_pos).unwrap_or(Ty::ANY);
        inputs.push((v.name.clone(), ty.clone()));
        var_types.insert(v.name.clone(), ty);
        definitions
            .entry(v.name.clone())
            .or_default()
            .push(DefSite {
                kind: DefKind::Input,
                pos: v.pos,
            });
    }
    let mut outputs = Vec::new();
    for v in &spec.interface.outputs {
        let ty = r.source_type(&v.ty, v.ty_pos).unwrap_or(Ty::ANY);
        outputs.push((v.name.clone(), ty));
    }

    let mut annotations = Vec::with_capacity(spec.statements.len());
    for (idx, st) in spec.statements.iter().enumerate() {
        let pos = st.pos;
        let use_var = |r: &mut Resolver, var: &str, types: &BTreeMap<String, Ty>| -> Option<Ty> {
            match types.get(var) {
                Some(t) => Some(t.clone()),
                None => {
                    r.err(
                        Code::UndefinedVariable,
                        pos,
                        format!("variable `{var}` is used before it is defined"),
                    );
                    None
                }
            }
        };
        let mut ann = Annotation::default();
        let mut define: Option<(String, Option<Ty>, DefKind)> = None;
        match &st.kind {
            StatementKind::Invoke(inv) => ann.source = r.invocation(inv),
            StatementKind::FeedScalar { targets, .. } => {
                ann.targets = r.targets(targets).unwrap_or_default()
            }
            StatementKind::FeedVariable { var, targets } => {
                use_var(&mut r, var, &var_types);
                ann.targets = r.targets(targets).unwrap_or_default();
            }
            StatementKind::Compose { source, targets } => {
                ann.source = r.invocation(source);
                if source.parameter.is_some() {
                    r.err(
                        Code::InvalidSource,
                        source.pos,
                        format!("`{source}` names a parameter and cannot produce a value"),
                    );
                }
                ann.targets = r.targets(targets).unwrap_or_default();
            }
            StatementKind::Retrieve { source, var } => {
                ann.source = r.invocation(source);
                if source.parameter.is_some() {
                    r.err(
                        Code::InvalidSource,
                        source.pos,
                        format!("`{source}` names a parameter and cannot produce a value"),
                    );
                }
                let ty = ann
                    .source
                    .map(|s| r.invocations[s.id].signature.output.clone());
                define = Some((var.clone(), ty, DefKind::Retrieve { statement: idx }));
            }
            StatementKind::Assign { var, value } => {
                let ty = match value {
                    AssignValue::Scalar(s) => Some(scalar_type(s)),
                    AssignValue::Variable(v) => use_var(&mut r, v, &var_types),
                    AssignValue::Tuple(items) => {
                        let tys: Vec<Option<Ty>> = items
                            .iter()
                            .map(|i| match i {
                                TupleItem::Scalar(s) => Some(scalar_type(s)),
                                TupleItem::Variable(v) => use_var(&mut r, v, &var_types),
                            })
                            .collect();
                        tys.into_iter().collect::<Option<Vec<_>>>().map(Ty::Tuple)
                    }
                };
                define = Some((var.clone(), ty, DefKind::Assign { statement: idx }));
            }
        }
        if let Some((var, ty, kind)) = define {
            definitions
                .entry(var.clone())
                .or_default()
                .push(DefSite { kind, pos });
            var_types.entry(var).or_insert(ty.unwrap_or(Ty::ANY));
        }
        annotations.push(ann);
    }

    if has_errors(&r.diags) {
        let mut diags = r.diags;
        diags.sort_by_key(|d| d.pos);
        return Err(diags);
    }
    Ok(ResolvedWorkflow {
        spec: spec.clone(),
        ports: r.ports,
        invocations: r.invocations,
        annotations,
        var_types,
        definitions,
        inputs,
        outputs,
    })
}
