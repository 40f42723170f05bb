use std::fmt::Write;

use super::ast::*;

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn tuple_item(item: &TupleItem) -> String {
    match item {
        TupleItem::Variable(v) => v.clone(),
        TupleItem::Scalar(s) => s.to_string(),
    }
}

fn variables(out: &mut String, vars: &[TypedVar]) {
    // consecutive variables of the same type share a line
    let mut i = 0;
    while i < vars.len() {
        let ty = &vars[i].ty;
        let mut names = vec![vars[i].name.as_str()];
        let mut j = i + 1;
        while j < vars.len() && &vars[j].ty == ty {
            names.push(&vars[j].name);
            j += 1;
        }
        let _ = writeln!(out, "  {ty} {}", names.join(", "));
        i = j;
    }
}

pub fn render_statement(st: &StatementKind) -> String {
    match st {
        StatementKind::Invoke(inv) => inv.to_string(),
        StatementKind::FeedScalar { value, targets } => format!("{value} -> {}", join(targets)),
        StatementKind::FeedVariable { var, targets } => format!("{var} -> {}", join(targets)),
        StatementKind::Compose { source, targets } => format!("{source} -> {}", join(targets)),
        StatementKind::Retrieve { source, var } => format!("{source} -> {var}"),
        StatementKind::Assign { var, value } => match value {
            AssignValue::Scalar(s) => format!("{var} = {s}"),
            AssignValue::Variable(v) => format!("{var} = {v}"),
            AssignValue::Tuple(items) => format!(
                "{var} = ({})",
                items.iter().map(tuple_item).collect::<Vec<_>>().join(", ")
            ),
        },
    }
}

/// Canonical source text for `spec`.
pub fn render(spec: &WorkflowSpec) -> String {
    let mut out = String::new();
    for d in &spec.descriptions {
        let _ = writeln!(out, "description {} is {}", d.name, d.url);
    }
    for s in &spec.services {
        let _ = writeln!(out, "service {} is {}.{}", s.name, s.description, s.service);
    }
    for p in &spec.ports {
        let _ = writeln!(out, "port {} is {}.{}", p.name, p.service, p.port);
    }
    for s in &spec.schemas {
        let _ = writeln!(out, "schema {} is {}", s.name, s.url);
    }
    if !out.is_empty() {
        out.push('\n');
    }
    out.push_str("input:\n");
    variables(&mut out, &spec.interface.inputs);
    out.push_str("output:\n");
    variables(&mut out, &spec.interface.outputs);
    if !spec.statements.is_empty() {
        out.push('\n');
    }
    for st in &spec.statements {
        out.push_str(&render_statement(&st.kind));
        out.push('\n');
    }
    out
}
