use std::collections::{BTreeMap, BTreeSet};

use super::*;
use crate::lang::{AssignValue, StatementKind, TupleItem};

fn describe(ty: &Ty) -> String {
    ty.to_string()
}

impl ResolvedWorkflow {
    /// Expand every feed statement into parameter bindings. Binding failures
    /// (arity) are returned as diagnostics alongside the feeds that did bind.
    pub fn feeds(&self) -> (Vec<Feed>, Vec<Diagnostic>) {
        let (feeds, diags, _) = self.bind_feeds();
        (feeds, diags)
    }

    fn bind_feeds(&self) -> (Vec<Feed>, Vec<Diagnostic>, BTreeSet<usize>) {
        let mut failed = BTreeSet::new();
        let mut feeds = Vec::new();
        let mut diags = Vec::new();
        for (idx, st) in self.spec.statements.iter().enumerate() {
            let ann = &self.annotations[idx];
            let (source, invs) = match &st.kind {
                StatementKind::FeedScalar { value, targets } => {
                    (ValueSource::Scalar(value.clone()), targets)
                }
                StatementKind::FeedVariable { var, targets } => {
                    (ValueSource::Var(var.clone()), targets)
                }
                StatementKind::Compose { targets, .. } => match ann.source {
                    Some(s) => (ValueSource::Invocation(s.id), targets),
                    None => continue,
                },
                _ => continue,
            };
            let source_ty = self.source_type(&source);
            for (target, inv) in ann.targets.iter().zip(invs) {
                let sig = &self.invocations[target.id].signature;
                let mut push = |slot: Option<usize>, param: usize| {
                    feeds.push(Feed {
                        source: source.clone(),
                        slot,
                        inv: target.id,
                        param,
                        statement: idx,
                        pos: inv.pos,
                    })
                };
                if let Some(param) = target.param {
                    push(None, param);
                    continue;
                }
                let n = sig.inputs.len();
                match &source_ty {
                    Ty::Tuple(items) if items.len() == n => {
                        for i in 0..n {
                            push(Some(i), i);
                        }
                    }
                    Ty::Tuple(items) => {
                        failed.insert(target.id);
                        diags.push(Diagnostic::error(
                            Code::ArityMismatch,
                            inv.pos,
                            format!(
                                "`{inv}` takes {n} parameter(s) but the tuple has {} element(s)",
                                items.len()
                            ),
                        ))
                    }
                    _ if n == 1 => push(None, 0),
                    _ => {
                        failed.insert(target.id);
                        diags.push(Diagnostic::error(
                            Code::ArityMismatch,
                            inv.pos,
                            format!(
                                "`{inv}` takes {n} parameter(s); feed a tuple or name a parameter"
                            ),
                        ))
                    }
                }
            }
        }
        (feeds, diags, failed)
    }

    /// The static type carried by one feed.
    pub fn feed_type(&self, feed: &Feed) -> Ty {
        let ty = self.source_type(&feed.source);
        match (feed.slot, ty) {
            (Some(i), Ty::Tuple(items)) => items.get(i).cloned().unwrap_or(Ty::ANY),
            (_, ty) => ty,
        }
    }
}

/// Check feeds against signatures, single assignment and output binding.
pub fn check_types(resolved: &ResolvedWorkflow) -> Vec<Diagnostic> {
    let mut diags = Vec::new();

    for (var, sites) in &resolved.definitions {
        for site in sites.iter().skip(1) {
            diags.push(Diagnostic::error(
                Code::DoubleAssignment,
                site.pos,
                format!("variable `{var}` is already defined at {}", sites[0].pos),
            ));
        }
    }

    let (feeds, arity, arity_failed) = resolved.bind_feeds();
    diags.extend(arity);

    let mut bound: BTreeMap<(usize, usize), &Feed> = BTreeMap::new();
    for feed in &feeds {
        let inv = &resolved.invocations[feed.inv];
        let (pname, pty) = &inv.signature.inputs[feed.param];
        if let Some(first) = bound.get(&(feed.inv, feed.param)) {
            diags.push(Diagnostic::error(
                Code::DuplicateFeed,
                feed.pos,
                format!(
                    "parameter `{pname}` of `{}.{}` is already fed at {}",
                    inv.port, inv.operation, first.pos
                ),
            ));
            continue;
        }
        bound.insert((feed.inv, feed.param), feed);
        let found = resolved.feed_type(feed);
        if !found.compatible(pty) {
            diags.push(Diagnostic::error(
                Code::TypeMismatch,
                feed.pos,
                format!(
                    "parameter `{pname}` of `{}.{}` expects {} but found {}",
                    inv.port,
                    inv.operation,
                    describe(pty),
                    describe(&found)
                ),
            ));
        }
    }

    for (id, inv) in resolved.invocations.iter().enumerate() {
        // A failed tuple binding already produced an arity error.
        if arity_failed.contains(&id) {
            continue;
        }
        for (p, (pname, _)) in inv.signature.inputs.iter().enumerate() {
            if !bound.contains_key(&(id, p)) {
                diags.push(Diagnostic::error(
                    Code::UnboundParameter,
                    inv.pos,
                    format!(
                        "parameter `{pname}` of `{}.{}` is never fed",
                        inv.port, inv.operation
                    ),
                ));
            }
        }
    }

    let out_decls: BTreeMap<&str, Pos> = resolved
        .spec
        .interface
        .outputs
        .iter()
        .map(|v| (v.name.as_str(), v.pos))
        .collect();
    for (name, declared) in &resolved.outputs {
        let pos = out_decls[name.as_str()];
        if !resolved.definitions.contains_key(name) {
            diags.push(Diagnostic::error(
                Code::UnboundOutput,
                pos,
                format!("output `{name}` is never defined by the dataflow"),
            ));
            continue;
        }
        let actual = &resolved.var_types[name];
        if !actual.compatible(declared) {
            diags.push(Diagnostic::error(
                Code::TypeMismatch,
                pos,
                format!(
                    "output `{name}` is declared {} but defined as {}",
                    describe(declared),
                    describe(actual)
                ),
            ));
        }
    }

    // Values nobody consumes are legal but probably mistakes.
    let mut used: BTreeSet<&str> = out_decls.keys().copied().collect();
    let mut consumed_invocations = BTreeSet::new();
    for (idx, st) in resolved.spec.statements.iter().enumerate() {
        match &st.kind {
            StatementKind::FeedVariable { var, .. } => {
                used.insert(var);
            }
            StatementKind::Assign {
                value: AssignValue::Variable(v),
                ..
            } => {
                used.insert(v);
            }
            StatementKind::Assign {
                value: AssignValue::Tuple(items),
                ..
            } => {
                for item in items {
                    if let TupleItem::Variable(v) = item {
                        used.insert(v);
                    }
                }
            }
            StatementKind::Compose { .. } | StatementKind::Retrieve { .. } => {
                if let Some(s) = resolved.annotations[idx].source {
                    consumed_invocations.insert(s.id);
                }
            }
            _ => {}
        }
    }
    for (var, sites) in &resolved.definitions {
        if !used.contains(var.as_str()) {
            diags.push(Diagnostic::warning(
                Code::UnusedValue,
                sites[0].pos,
                format!("value `{var}` is never used"),
            ));
        }
    }
    for (id, inv) in resolved.invocations.iter().enumerate() {
        if !consumed_invocations.contains(&id) {
            diags.push(Diagnostic::warning(
                Code::UnusedValue,
                inv.pos,
                format!("result of `{}.{}` is never used", inv.port, inv.operation),
            ));
        }
    }

    diags.sort_by(|a, b| (a.pos, a.severity).cmp(&(b.pos, b.severity)));
    diags
}
