//! Splitting a dataflow graph into per-site fragments.
//!
//! Invocations run at the site owning their port, tuple assemblies follow
//! their single invocation consumer, and inputs, constants and outputs stay
//! at the root. A value crossing sites travels once per destination site;
//! the receiver fans it out to every local consumer.

mod exec;
#[cfg(test)]
mod tests;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use exec::{
    execute_fragments, merge_execute_oracle, DeliverError, ExecError, ExecOptions, FragmentRun,
    Step, Token,
};

use crate::dag::{DataflowGraph, Edge, EdgeId, Node, NodeId, NodeKind};
use crate::types::Ty;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Site {
    pub id: String,
    pub url: String,
}

/// Which site runs which port. Unmapped ports run at the root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub root: String,
    pub sites: Vec<Site>,
    #[serde(default)]
    pub ports: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PartitionError {
    #[error("port `{port}` is placed on undeclared site `{site}`")]
    UnknownSiteForPort { port: String, site: String },
    #[error("root site `{0}` is not declared")]
    UnknownRootSite(String),
    #[error("site `{0}` is declared twice")]
    DuplicateSite(String),
    #[error("fragments do not reassemble: {0}")]
    ReassemblyMismatch(String),
}

impl Placement {
    /// Everything on one site.
    pub fn single(id: &str, url: &str) -> Placement {
        Placement {
            root: id.into(),
            sites: vec![Site {
                id: id.into(),
                url: url.into(),
            }],
            ports: BTreeMap::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Placement, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn validate(&self) -> Result<(), PartitionError> {
        let mut seen = BTreeSet::new();
        for s in &self.sites {
            if !seen.insert(s.id.as_str()) {
                return Err(PartitionError::DuplicateSite(s.id.clone()));
            }
        }
        if !seen.contains(self.root.as_str()) {
            return Err(PartitionError::UnknownRootSite(self.root.clone()));
        }
        for (port, site) in &self.ports {
            if !seen.contains(site.as_str()) {
                return Err(PartitionError::UnknownSiteForPort {
                    port: port.clone(),
                    site: site.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn site_of_port(&self, port: &str) -> &str {
        self.ports
            .get(port)
            .map_or(self.root.as_str(), String::as_str)
    }

    pub fn url(&self, site: &str) -> Option<&str> {
        self.sites
            .iter()
            .find(|s| s.id == site)
            .map(|s| s.url.as_str())
    }
}

/// A cut edge as seen by its receiving fragment. Tokens are addressed by
/// `via`, the transfer that carries the producer's whole value; `slot`
/// selects the tuple element this edge takes from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inbound {
    pub edge: EdgeId,
    pub dst: NodeId,
    pub param: usize,
    pub src: NodeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot: Option<usize>,
    pub ty: Ty,
    pub via: EdgeId,
    pub from_site: String,
}

/// One wire transfer: the value of `src` sent to `to_site`. `edge` is the
/// lowest id among the cut edges it covers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outbound {
    pub edge: EdgeId,
    pub src: NodeId,
    pub to_site: String,
    pub to_url: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputReturn {
    pub edge: EdgeId,
    pub var: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fragment {
    pub fragment_id: String,
    pub site: String,
    pub root_site: String,
    pub root_url: String,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub inbound: Vec<Inbound>,
    pub outbound: Vec<Outbound>,
    /// Outbound transfers that deliver workflow outputs to the root.
    pub output_returns: Vec<OutputReturn>,
}

impl Fragment {
    pub fn is_root(&self) -> bool {
        self.site == self.root_site
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fragment serializes")
    }
}

/// Site of every node under `placement`.
pub fn assign_sites(
    graph: &DataflowGraph,
    placement: &Placement,
) -> Result<Vec<String>, PartitionError> {
    placement.validate()?;
    let mut sites: Vec<String> = graph
        .nodes
        .iter()
        .map(|n| match &n.kind {
            NodeKind::Invocation { port, .. } => placement.site_of_port(port).to_string(),
            _ => placement.root.clone(),
        })
        .collect();
    for n in &graph.nodes {
        if let NodeKind::TupleAssembly { .. } = n.kind {
            let consumers: BTreeSet<NodeId> = graph
                .out_edges(n.id)
                .map(|e| e.dst)
                .filter(|d| graph.node(*d).is_invocation())
                .collect();
            if consumers.len() == 1 {
                let c = *consumers.first().unwrap();
                sites[n.id.0 as usize] = sites[c.0 as usize].clone();
            }
        }
    }
    Ok(sites)
}

/// Split `graph` into one fragment per site that holds at least one node,
/// root first, then sites in declaration order.
pub fn partition(
    graph: &DataflowGraph,
    placement: &Placement,
) -> Result<Vec<Fragment>, PartitionError> {
    let site_of = assign_sites(graph, placement)?;
    let site = |n: NodeId| site_of[n.0 as usize].as_str();

    // One transfer per (producer, destination site), named by its lowest edge.
    let mut transfers: BTreeMap<(NodeId, &str), EdgeId> = BTreeMap::new();
    for e in &graph.edges {
        if site(e.src) != site(e.dst) {
            transfers.entry((e.src, site(e.dst))).or_insert(e.id);
        }
    }

    let mut order: Vec<&Site> = Vec::new();
    order.extend(placement.sites.iter().filter(|s| s.id == placement.root));
    order.extend(placement.sites.iter().filter(|s| s.id != placement.root));
    let root_url = placement
        .url(&placement.root)
        .unwrap_or_default()
        .to_string();

    let mut fragments = Vec::new();
    for s in order {
        let nodes: Vec<Node> = graph
            .nodes
            .iter()
            .filter(|n| site(n.id) == s.id)
            .cloned()
            .collect();
        if nodes.is_empty() {
            continue;
        }
        let edges = graph
            .edges
            .iter()
            .filter(|e| site(e.src) == s.id && site(e.dst) == s.id)
            .cloned()
            .collect();
        let inbound = graph
            .edges
            .iter()
            .filter(|e| site(e.dst) == s.id && site(e.src) != s.id)
            .map(|e| Inbound {
                edge: e.id,
                dst: e.dst,
                param: e.dst_param,
                src: e.src,
                slot: e.src_slot,
                ty: e.ty.clone(),
                via: transfers[&(e.src, s.id.as_str())],
                from_site: site(e.src).to_string(),
            })
            .collect();
        let mut outbound: Vec<Outbound> = transfers
            .iter()
            .filter(|((src, _), _)| site(*src) == s.id)
            .map(|((src, to), edge)| Outbound {
                edge: *edge,
                src: *src,
                to_site: to.to_string(),
                to_url: placement.url(to).unwrap_or_default().to_string(),
            })
            .collect();
        outbound.sort_by_key(|o| o.edge);
        let mut output_returns = Vec::new();
        for o in &outbound {
            for e in graph.out_edges(o.src).filter(|e| site(e.dst) == o.to_site) {
                if let NodeKind::Output { var, .. } = &graph.node(e.dst).kind {
                    output_returns.push(OutputReturn {
                        edge: o.edge,
                        var: var.clone(),
                    });
                }
            }
        }
        fragments.push(Fragment {
            fragment_id: format!("frag-{}", s.id),
            site: s.id.clone(),
            root_site: placement.root.clone(),
            root_url: root_url.clone(),
            nodes,
            edges,
            inbound,
            outbound,
            output_returns,
        });
    }
    Ok(fragments)
}
