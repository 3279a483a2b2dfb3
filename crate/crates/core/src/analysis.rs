//! Shared derived data for one spec: endpoint analyses and the reach graph.

use crate::boundary::{self, EndpointAnalysis};
use crate::error::{Error, Result};
use crate::quadrature::TailPolicy;
use crate::reachability::{self, CommunicationClasses, CommunicationGraph};
use crate::spec_model::{DiffusionSpec, Side};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AnalysisOptions {
    pub policy: TailPolicy,
    /// Read the Λ_ap condition literally: besides approachability from both
    /// flanking intervals, every finite outer endpoint must reach the point.
    pub strict_lambda_ap: bool,
}

#[derive(Clone, Debug)]
pub struct Analysis {
    pub spec: DiffusionSpec,
    pub options: AnalysisOptions,
    pub endpoints: Vec<EndpointAnalysis>,
    graph: std::result::Result<CommunicationGraph, Error>,
    classes: Option<CommunicationClasses>,
}

impl Analysis {
    pub fn new(spec: &DiffusionSpec) -> Analysis {
        Analysis::with_options(spec, AnalysisOptions::default())
    }

    pub fn with_options(spec: &DiffusionSpec, options: AnalysisOptions) -> Analysis {
        let endpoints = boundary::analyze_all(spec, options.policy);
        let graph = reachability::build_graph_with(spec, &endpoints);
        let classes = graph.as_ref().ok().map(reachability::communication_classes);
        Analysis {
            spec: spec.clone(),
            options,
            endpoints,
            graph,
            classes,
        }
    }

    pub fn endpoint(&self, piece: usize, side: Side) -> &EndpointAnalysis {
        self.endpoints
            .iter()
            .find(|a| a.piece == piece && a.side == side)
            .expect("every regular endpoint is analysed")
    }

    pub fn graph(&self) -> Result<&CommunicationGraph> {
        self.graph.as_ref().map_err(Clone::clone)
    }

    pub fn classes(&self) -> Result<&CommunicationClasses> {
        self.graph()?;
        Ok(self.classes.as_ref().expect("classes exist whenever the graph does"))
    }
}
