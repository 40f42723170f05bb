use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::*;
use crate::compile::compile;
use crate::dag::NodeKind;
use crate::partition::partition;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentParams {
    pub input_bytes: usize,
    pub repetitions: usize,
    pub net: NetModel,
    /// Where each test service runs; the decentralized mode co-locates an
    /// orchestrator with every site.
    pub placement: Placement,
    pub compute_delay_ms: f64,
    /// Overrides for T1..T4; defaults follow the pattern.
    pub services: Option<Vec<TestServiceSpec>>,
    pub seed: u64,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        ExperimentParams {
            input_bytes: 256 * 1024,
            repetitions: 20,
            net: NetModel::default(),
            placement: default_placement(),
            compute_delay_ms: 5.0,
            services: None,
            seed: 0,
        }
    }
}

impl ExperimentParams {
    /// Service specs T1..T4 for `pattern`.
    pub fn service_specs(&self, pattern: Pattern) -> Vec<TestServiceSpec> {
        match &self.services {
            Some(s) => s.clone(),
            None => pattern
                .behaviors()
                .iter()
                .enumerate()
                .map(|(i, b)| TestServiceSpec {
                    name: format!("T{}", i + 1),
                    behavior: *b,
                    compute_delay_ms: self.compute_delay_ms,
                    listen: String::new(),
                })
                .collect(),
        }
    }
}

/// Run `pattern` once per repetition in each of `modes`. A failed
/// repetition stops the experiment and marks the report invalid.
pub fn run_experiment(
    pattern: Pattern,
    modes: &[Mode],
    params: &ExperimentParams,
) -> MetricsReport {
    let mut report = MetricsReport::default();
    if let Err(e) = experiment(pattern, modes, params, &mut report) {
        report.valid = false;
        report.error = Some(format!("{pattern}: {e}"));
        return report;
    }
    report.aggregate(pattern);
    report
}

/// Both modes, with the speedup row.
pub fn run_pair(pattern: Pattern, params: &ExperimentParams) -> MetricsReport {
    run_experiment(pattern, &[Mode::Centralized, Mode::Decentralized], params)
}

fn experiment(
    pattern: Pattern,
    modes: &[Mode],
    params: &ExperimentParams,
    report: &mut MetricsReport,
) -> Result<(), String> {
    params.net.validate()?;
    params.placement.validate().map_err(|e| e.to_string())?;
    let compiled =
        compile(&pattern.source(), &documents()).map_err(|d| format!("{} diagnostics", d.len()))?;
    let graph = compiled.graph;
    let specs = params.service_specs(pattern);

    let mut services = BTreeMap::new();
    for n in &graph.nodes {
        if let NodeKind::Invocation { port, endpoint, .. } = &n.kind {
            let i: usize = port
                .trim_start_matches('t')
                .parse()
                .map_err(|_| format!("unexpected port {port}"))?;
            let spec = specs
                .get(i - 1)
                .ok_or_else(|| format!("no service spec for {port}"))?;
            services.insert(
                endpoint.clone(),
                ServiceHost {
                    site: params.placement.site_of_port(port).to_string(),
                    behavior: spec.behavior,
                    compute_delay_ms: spec.compute_delay_ms,
                },
            );
        }
    }

    let inputs: BTreeMap<String, Value> =
        [("a".to_string(), input_blob(params.input_bytes))].into();
    for &mode in modes {
        let placement = match mode {
            Mode::Centralized => Placement {
                ports: BTreeMap::new(),
                ..params.placement.clone()
            },
            Mode::Decentralized => params.placement.clone(),
        };
        let fragments = partition(&graph, &placement).map_err(|e| e.to_string())?;
        for rep in 0..params.repetitions {
            let env = SimEnv {
                net: params.net.clone(),
                services: services.clone(),
                handshake: mode == Mode::Decentralized,
                seed: params.seed.wrapping_mul(1_000_003).wrapping_add(rep as u64),
            };
            let r = simulate(&fragments, &inputs, &env).map_err(|e| e.to_string())?;
            report.rows.push(RepetitionMetrics {
                pattern,
                mode,
                repetition: rep,
                makespan_ms: r.makespan_ms,
                bytes_total: r.bytes_total(),
                bytes_through_root: r.bytes_through_root(),
                links: r
                    .link_bytes
                    .iter()
                    .map(|((a, b), n)| (format!("{a}->{b}"), *n))
                    .collect(),
            });
        }
    }
    Ok(())
}
