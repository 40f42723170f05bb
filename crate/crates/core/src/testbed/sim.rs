//! Discrete-event execution of fragments on a virtual clock.
//!
//! Each site runs the firing rule of its fragment. An invocation is a
//! request from the invoking site to the service's site, a compute delay,
//! and a response back. Tokens travel between sites over directed links;
//! a link transmits one message at a time (bandwidth is shared FIFO) while
//! latency overlaps. Messages within a site are free.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Behavior, NetModel};
use crate::dag::{EdgeId, NodeId};
use crate::engine::{Call, EngineError, Value};
use crate::partition::{DeliverError, Fragment, FragmentRun, Step};

/// Where a service runs and how it behaves.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceHost {
    pub site: String,
    pub behavior: Behavior,
    pub compute_delay_ms: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SimEnv {
    pub net: NetModel,
    /// Keyed by endpoint.
    pub services: BTreeMap<String, ServiceHost>,
    /// Deploy fragments to peers and wait for their acknowledgements before
    /// feeding inputs.
    pub handshake: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub makespan_ms: f64,
    /// Data bytes per directed inter-site link.
    pub link_bytes: BTreeMap<(String, String), u64>,
    /// Deployment traffic, not counted as data.
    pub control_bytes: u64,
    pub root: String,
    pub outputs: BTreeMap<String, Value>,
}

impl SimResult {
    pub fn bytes_total(&self) -> u64 {
        self.link_bytes.values().sum()
    }

    /// Data bytes on links into or out of the root site.
    pub fn bytes_through_root(&self) -> u64 {
        self.link_bytes
            .iter()
            .filter(|((a, b), _)| *a == self.root || *b == self.root)
            .map(|(_, n)| n)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("no test service at {0}")]
    UnknownService(String),
    #[error("no root fragment")]
    NoRoot,
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Deliver(#[from] DeliverError),
    #[error("run stalled at {0} ms")]
    Stalled(f64),
}

enum Ev {
    Ack,
    Request {
        host: String,
        from: usize,
        node: NodeId,
        call: Call,
    },
    Computed {
        host: String,
        from: usize,
        node: NodeId,
        value: Value,
    },
    Response {
        site: usize,
        node: NodeId,
        value: Value,
    },
    Token {
        site: usize,
        via: EdgeId,
        value: Value,
    },
}

struct Entry {
    t: f64,
    seq: u64,
    ev: Ev,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    // earliest first in a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.t.total_cmp(&self.t).then(other.seq.cmp(&self.seq))
    }
}

struct Sim<'a> {
    env: &'a SimEnv,
    rng: ChaCha8Rng,
    queue: BinaryHeap<Entry>,
    seq: u64,
    busy: BTreeMap<(String, String), f64>,
    link_bytes: BTreeMap<(String, String), u64>,
    control_bytes: u64,
    runs: Vec<FragmentRun>,
    root: usize,
}

impl Sim<'_> {
    fn push(&mut self, t: f64, ev: Ev) {
        self.seq += 1;
        self.queue.push(Entry {
            t,
            seq: self.seq,
            ev,
        });
    }

    /// Arrival time of `bytes` sent from `a` to `b` at `now`.
    fn send(&mut self, a: &str, b: &str, bytes: u64, now: f64, control: bool) -> f64 {
        let Some(link) = self.env.net.link(a, b) else {
            return now;
        };
        let key = (a.to_string(), b.to_string());
        let busy = self.busy.entry(key.clone()).or_insert(0.0);
        let start = now.max(*busy);
        *busy = start + bytes as f64 / link.bandwidth * 1000.0;
        let jitter = if self.env.net.jitter_ms > 0.0 {
            self.rng.random_range(0.0..self.env.net.jitter_ms)
        } else {
            0.0
        };
        if control {
            self.control_bytes += bytes;
        } else {
            *self.link_bytes.entry(key).or_insert(0) += bytes;
        }
        *busy + link.latency_ms + jitter
    }

    fn site(&self, i: usize) -> String {
        self.runs[i].fragment().site.clone()
    }

    fn index(&self, site: &str) -> usize {
        self.runs
            .iter()
            .position(|r| r.fragment().site == site)
            .expect("token for a deployed site")
    }

    fn emit(&mut self, from: usize, step: Step, now: f64) {
        let here = self.site(from);
        for tok in step.tokens {
            let to = self.index(&tok.to_site);
            let at = self.send(&here, &tok.to_site, tok.value.byte_size(), now, false);
            self.push(
                at,
                Ev::Token {
                    site: to,
                    via: tok.edge,
                    value: tok.value,
                },
            );
        }
    }

    fn pump(&mut self, i: usize, now: f64) -> Result<(), SimError> {
        let here = self.site(i);
        while let Some(node) = self.runs[i].next_enabled() {
            match self.runs[i].begin(node) {
                crate::engine::Task::Local(v) => {
                    let step = self.runs[i].complete(node, v);
                    self.emit(i, step, now);
                }
                crate::engine::Task::Invoke(call) => {
                    let host = self
                        .env
                        .services
                        .get(&call.endpoint)
                        .ok_or_else(|| SimError::UnknownService(call.endpoint.clone()))?
                        .site
                        .clone();
                    let at = self.send(&here, &host, call.bytes_in(), now, false);
                    self.push(
                        at,
                        Ev::Request {
                            host,
                            from: i,
                            node,
                            call,
                        },
                    );
                }
            }
        }
        Ok(())
    }
}

/// Run `fragments` to completion and measure makespan and link traffic.
pub fn simulate(
    fragments: &[Fragment],
    inputs: &BTreeMap<String, Value>,
    env: &SimEnv,
) -> Result<SimResult, SimError> {
    let root = fragments
        .iter()
        .position(|f| f.is_root())
        .ok_or(SimError::NoRoot)?;
    let mut sim = Sim {
        env,
        rng: ChaCha8Rng::seed_from_u64(env.seed),
        queue: BinaryHeap::new(),
        seq: 0,
        busy: BTreeMap::new(),
        link_bytes: BTreeMap::new(),
        control_bytes: 0,
        runs: fragments.iter().cloned().map(FragmentRun::new).collect(),
        root,
    };
    let root_site = sim.site(root);

    let mut acks = 0;
    if env.handshake {
        for f in fragments.iter().filter(|f| !f.is_root()) {
            let bytes = serde_json::to_vec(f).expect("fragment serializes").len() as u64;
            let there = sim.send(&root_site, &f.site, bytes, 0.0, true);
            let back = sim.send(&f.site, &root_site, 0, there, true);
            sim.push(back, Ev::Ack);
            acks += 1;
        }
    }

    let mut started = false;
    let mut now = 0.0;
    let mut makespan = None;
    loop {
        if !started && acks == 0 {
            started = true;
            for i in 0..sim.runs.len() {
                let step = sim.runs[i].start();
                sim.emit(i, step, now);
            }
            let step = sim.runs[sim.root].bind_inputs(inputs)?;
            sim.emit(sim.root, step, now);
            for i in 0..sim.runs.len() {
                sim.pump(i, now)?;
            }
        }
        if started && makespan.is_none() && sim.runs[sim.root].outputs_complete() {
            makespan = Some(now);
        }
        let Some(Entry { t, ev, .. }) = sim.queue.pop() else {
            break;
        };
        now = t;
        match ev {
            Ev::Ack => acks -= 1,
            Ev::Request {
                host,
                from,
                node,
                call,
            } => {
                let h = &env.services[&call.endpoint];
                let args: Vec<Value> = call.args.iter().map(|(_, v)| v.clone()).collect();
                let value = h.behavior.apply(&args);
                let done = now + h.compute_delay_ms;
                sim.push(
                    done,
                    Ev::Computed {
                        host,
                        from,
                        node,
                        value,
                    },
                );
            }
            Ev::Computed {
                host,
                from,
                node,
                value,
            } => {
                let to = sim.site(from);
                let at = sim.send(&host, &to, value.byte_size(), now, false);
                sim.push(
                    at,
                    Ev::Response {
                        site: from,
                        node,
                        value,
                    },
                );
            }
            Ev::Response { site, node, value } => {
                let step = sim.runs[site].complete(node, value);
                sim.emit(site, step, now);
                sim.pump(site, now)?;
            }
            Ev::Token { site, via, value } => {
                if let Some(step) = sim.runs[site].deliver(via, value)? {
                    sim.emit(site, step, now);
                    sim.pump(site, now)?;
                }
            }
        }
    }
    let makespan_ms = makespan.ok_or(SimError::Stalled(now))?;
    if !sim.runs.iter().all(FragmentRun::is_finished) {
        return Err(SimError::Stalled(now));
    }
    let outputs = sim.runs[sim.root].outputs().clone();
    Ok(SimResult {
        makespan_ms,
        link_bytes: sim.link_bytes,
        control_bytes: sim.control_bytes,
        root: root_site,
        outputs,
    })
}
