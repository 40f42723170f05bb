//! Random, type-correct workflows for property tests and benchmarks.
//!
//! Every generated workflow comes with its own catalog (one service and port
//! per operation), a set of input values and compiles without errors. The
//! dataflow graph holds at most [`MAX_NODES`] nodes.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catalog::{
    Documents, OperationSig, OutputSig, Param, PortDesc, ServiceCatalog, ServiceDesc,
};
use crate::compile::{compile, Compiled};
use crate::engine::Value;
use crate::lang::ast::*;
use crate::lang::render;
use crate::partition::{Placement, Site};
use crate::types::{BaseType, TypeExpr};

pub const MAX_NODES: usize = 20;
pub const CATALOG_URL: &str = "http://generated.example.org/catalog.wsdl";

const TYPES: [BaseType; 5] = [
    BaseType::Int,
    BaseType::String,
    BaseType::Double,
    BaseType::Boolean,
    BaseType::Any,
];

#[derive(Debug, Clone)]
pub struct GeneratedWorkflow {
    pub seed: u64,
    pub source: String,
    pub catalog: ServiceCatalog,
    pub inputs: BTreeMap<String, Value>,
}

impl GeneratedWorkflow {
    pub fn documents(&self) -> Documents {
        let mut docs = Documents::default();
        docs.catalogs
            .insert(CATALOG_URL.to_string(), self.catalog.clone());
        docs
    }

    pub fn compile(&self) -> Compiled {
        compile(&self.source, &self.documents()).expect("generated workflows compile")
    }

    /// Port names declared by the workflow.
    pub fn ports(&self) -> Vec<String> {
        (0..self.catalog.services.len())
            .map(|i| format!("q{i}"))
            .collect()
    }
}

#[derive(Clone)]
enum Src {
    Var(String),
    Inv(usize),
}

#[derive(Clone)]
struct Avail {
    src: Src,
    ty: BaseType,
}

fn fits(have: BaseType, want: BaseType) -> bool {
    have == want || have == BaseType::Any || want == BaseType::Any
}

fn literal(rng: &mut ChaCha8Rng, ty: BaseType) -> Scalar {
    let ty = if ty == BaseType::Any {
        *TYPES[..4].choose(rng).unwrap()
    } else {
        ty
    };
    match ty {
        BaseType::Int => Scalar::Int(rng.random_range(-1000..1000)),
        BaseType::Double => Scalar::Double(rng.random_range(-400..400) as f64 / 4.0),
        BaseType::Boolean => Scalar::Bool(rng.random()),
        _ => Scalar::Str(word(rng)),
    }
}

fn word(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(1..8);
    (0..n)
        .map(|_| rng.random_range(b'a'..=b'z') as char)
        .collect()
}

fn input_value(rng: &mut ChaCha8Rng, ty: BaseType) -> Value {
    match ty {
        BaseType::Int => Value::Int(rng.random_range(-10_000..10_000)),
        BaseType::Double => Value::Double(rng.random_range(-4000..4000) as f64 / 8.0),
        BaseType::Boolean => Value::Boolean(rng.random()),
        BaseType::String => Value::String(word(rng)),
        _ => match rng.random_range(0..3) {
            0 => Value::Int(rng.random_range(-100..100)),
            1 => Value::String(word(rng)),
            _ => Value::blob(
                (0..rng.random_range(0..16))
                    .map(|_| rng.random())
                    .collect::<Vec<u8>>(),
            ),
        },
    }
}

fn inv(i: usize, param: Option<String>) -> Invocation {
    Invocation {
        port: format!("q{i}"),
        operation: format!("Op{i}"),
        parameter: param,
        pos: Pos::default(),
    }
}

fn st(kind: StatementKind) -> Statement {
    Statement {
        kind,
        pos: Pos::default(),
    }
}

struct Builder {
    rng: ChaCha8Rng,
    statements: Vec<Statement>,
    pool: Vec<Avail>,
    retrieved: BTreeMap<usize, String>,
    fresh: usize,
}

impl Builder {
    fn name(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh)
    }

    /// Variable holding the value of `a`, retrieving it if needed.
    fn as_var(&mut self, a: &Avail) -> String {
        match &a.src {
            Src::Var(v) => v.clone(),
            Src::Inv(i) => {
                if let Some(v) = self.retrieved.get(i) {
                    return v.clone();
                }
                let v = self.name("v");
                self.statements.push(st(StatementKind::Retrieve {
                    source: inv(*i, None),
                    var: v.clone(),
                }));
                self.retrieved.insert(*i, v.clone());
                v
            }
        }
    }

    fn pick(&mut self, want: BaseType) -> Option<Avail> {
        let options: Vec<Avail> = self
            .pool
            .iter()
            .filter(|a| fits(a.ty, want))
            .cloned()
            .collect();
        if options.is_empty() || self.rng.random_bool(0.15) {
            return None;
        }
        options.choose(&mut self.rng).cloned()
    }

    fn feed(&mut self, from: Option<Avail>, target: Invocation, want: BaseType) {
        let kind = match from {
            None => StatementKind::FeedScalar {
                value: literal(&mut self.rng, want),
                targets: vec![target],
            },
            Some(Avail {
                src: Src::Var(v), ..
            }) => StatementKind::FeedVariable {
                var: v,
                targets: vec![target],
            },
            Some(Avail {
                src: Src::Inv(i), ..
            }) => StatementKind::Compose {
                source: inv(i, None),
                targets: vec![target],
            },
        };
        self.statements.push(st(kind));
    }
}

/// Generate one workflow from `seed`. The same seed always gives the same
/// workflow.
pub fn generate(seed: u64) -> GeneratedWorkflow {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let attempt = rng.random();
        let w = attempt_generate(seed, attempt);
        if w.compile().graph.nodes.len() <= MAX_NODES {
            return w;
        }
    }
}

fn attempt_generate(seed: u64, attempt: u64) -> GeneratedWorkflow {
    let mut rng = ChaCha8Rng::seed_from_u64(attempt);
    let n_inputs = rng.random_range(1..=3);
    let n_ops = rng.random_range(1..=7);

    let mut inputs = Vec::new();
    let mut input_values = BTreeMap::new();
    let mut pool = Vec::new();
    for i in 0..n_inputs {
        let ty = *TYPES.choose(&mut rng).unwrap();
        let name = format!("in{i}");
        input_values.insert(name.clone(), input_value(&mut rng, ty));
        inputs.push(TypedVar {
            ty: TypeExpr::Base(ty),
            name: name.clone(),
            pos: Pos::default(),
            ty_pos: Pos::default(),
        });
        pool.push(Avail {
            src: Src::Var(name),
            ty,
        });
    }

    let mut services = Vec::new();
    let mut b = Builder {
        rng,
        statements: Vec::new(),
        pool,
        retrieved: BTreeMap::new(),
        fresh: 0,
    };
    if b.rng.random_bool(0.3) {
        let ty = *TYPES[..4].choose(&mut b.rng).unwrap();
        let v = b.name("k");
        let value = literal(&mut b.rng, ty);
        b.statements.push(st(StatementKind::Assign {
            var: v.clone(),
            value: AssignValue::Scalar(value),
        }));
        b.pool.push(Avail {
            src: Src::Var(v),
            ty,
        });
    }

    for i in 0..n_ops {
        let n_params = b.rng.random_range(0..=3);
        let params: Vec<BaseType> = (0..n_params)
            .map(|_| *TYPES.choose(&mut b.rng).unwrap())
            .collect();
        let output = *TYPES.choose(&mut b.rng).unwrap();
        services.push(ServiceDesc {
            name: format!("Svc{i}"),
            ports: vec![PortDesc {
                name: format!("Port{i}"),
                endpoint: format!("http://generated.example.org/w{seed}/svc{i}"),
                operations: vec![OperationSig {
                    name: format!("Op{i}"),
                    inputs: params
                        .iter()
                        .enumerate()
                        .map(|(k, t)| Param {
                            name: format!("p{k}"),
                            ty: TypeExpr::Base(*t),
                        })
                        .collect(),
                    output: OutputSig {
                        ty: TypeExpr::Base(output),
                    },
                }],
            }],
        });

        match params.len() {
            0 => b.statements.push(st(StatementKind::Invoke(inv(i, None)))),
            1 => {
                let from = b.pick(params[0]);
                b.feed(from, inv(i, None), params[0]);
            }
            _ if b.rng.random_bool(0.5) => {
                // positional binding through a tuple variable
                let mut items = Vec::new();
                for &want in &params {
                    match b.pick(want) {
                        Some(a) => {
                            let v = b.as_var(&a);
                            items.push(TupleItem::Variable(v));
                        }
                        None => items.push(TupleItem::Scalar(literal(&mut b.rng, want))),
                    }
                }
                let t = b.name("t");
                b.statements.push(st(StatementKind::Assign {
                    var: t.clone(),
                    value: AssignValue::Tuple(items),
                }));
                b.statements.push(st(StatementKind::FeedVariable {
                    var: t,
                    targets: vec![inv(i, None)],
                }));
            }
            _ => {
                for (k, &want) in params.iter().enumerate() {
                    let from = b.pick(want);
                    b.feed(from, inv(i, Some(format!("p{k}"))), want);
                }
            }
        }
        b.pool.push(Avail {
            src: Src::Inv(i),
            ty: output,
        });
        if b.rng.random_bool(0.3) {
            let a = b.pool.last().unwrap().clone();
            b.as_var(&a);
        }
    }

    // Outputs: one to three results, newest first so the tail is consumed.
    let n_out = b.rng.random_range(1..=3.min(n_ops));
    let mut outputs = Vec::new();
    let mut chosen: Vec<usize> = (0..n_ops).rev().take(1).collect();
    while chosen.len() < n_out {
        let i = b.rng.random_range(0..n_ops);
        if !chosen.contains(&i) {
            chosen.push(i);
        }
    }
    for (k, i) in chosen.into_iter().enumerate() {
        let ty = match &services[i].ports[0].operations[0].output.ty {
            TypeExpr::Base(t) => *t,
            TypeExpr::Complex { .. } => unreachable!(),
        };
        let name = format!("out{k}");
        let declared = if b.rng.random_bool(0.3) {
            BaseType::Any
        } else {
            ty
        };
        outputs.push(TypedVar {
            ty: TypeExpr::Base(declared),
            name: name.clone(),
            pos: Pos::default(),
            ty_pos: Pos::default(),
        });
        match b.retrieved.get(&i).cloned() {
            Some(v) => b.statements.push(st(StatementKind::Assign {
                var: name,
                value: AssignValue::Variable(v),
            })),
            None => {
                b.statements.push(st(StatementKind::Retrieve {
                    source: inv(i, None),
                    var: name.clone(),
                }));
                b.retrieved.insert(i, name);
            }
        }
    }

    let spec = WorkflowSpec {
        descriptions: vec![DescriptionDef {
            name: "gen".into(),
            url: CATALOG_URL.into(),
            pos: Pos::default(),
            ref_pos: Pos::default(),
        }],
        services: (0..n_ops)
            .map(|i| ServiceDef {
                name: format!("s{i}"),
                description: "gen".into(),
                service: format!("Svc{i}"),
                pos: Pos::default(),
                ref_pos: Pos::default(),
            })
            .collect(),
        ports: (0..n_ops)
            .map(|i| PortDef {
                name: format!("q{i}"),
                service: format!("s{i}"),
                port: format!("Port{i}"),
                pos: Pos::default(),
                ref_pos: Pos::default(),
            })
            .collect(),
        schemas: Vec::new(),
        interface: Interface { inputs, outputs },
        statements: b.statements,
    };
    GeneratedWorkflow {
        seed,
        source: render(&spec),
        catalog: ServiceCatalog {
            description: "generated".into(),
            services,
        },
        inputs: input_values,
    }
}

/// A random placement of `ports` over one to four sites, with some ports
/// left unmapped (they run at the root). Site urls come from `url`.
pub fn random_placement(ports: &[String], seed: u64, url: impl Fn(usize) -> String) -> Placement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_sites = rng.random_range(1..=4);
    let sites: Vec<Site> = (0..n_sites)
        .map(|i| Site {
            id: format!("S{i}"),
            url: url(i),
        })
        .collect();
    let root = sites[rng.random_range(0..n_sites)].id.clone();
    let mut map = BTreeMap::new();
    for p in ports {
        if rng.random_bool(0.85) {
            map.insert(p.clone(), sites[rng.random_range(0..n_sites)].id.clone());
        }
    }
    Placement {
        root,
        sites,
        ports: map,
    }
}
