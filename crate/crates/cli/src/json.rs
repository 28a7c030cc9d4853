//! Instance files. Every instance carries a `kind` tag naming the command that
//! consumes it; a bare blow-up instance without the tag is accepted too.

use serde::{Deserialize, Serialize};

use rainbow_core::apps::{DiracInstance, PartialInstance, QuasirandomInstance};
use rainbow_core::embedder::{BlowUpInstance, BlowUpJson, Params};
use rainbow_core::error::{Error, Result};
use rainbow_core::graph::{EdgeSetColouring, GraphJson, PartitionedGraph};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InstanceJson {
    Blowup(BlowUpJson),
    DiracTree {
        g: GraphJson,
        tree: GraphJson,
        params: Params,
    },
    Quasirandom {
        g: GraphJson,
        h: GraphJson,
        params: Params,
    },
    PartialEmbed {
        g: GraphJson,
        reduced: Vec<[usize; 2]>,
        h: GraphJson,
        x: Vec<usize>,
        params: Params,
        d_prime: f64,
    },
}

impl InstanceJson {
    pub fn parse(text: &str) -> Result<Self> {
        match serde_json::from_str::<InstanceJson>(text) {
            Ok(j) => Ok(j),
            Err(tagged) => match serde_json::from_str::<BlowUpJson>(text) {
                Ok(b) => Ok(InstanceJson::Blowup(b)),
                Err(_) => Err(Error::Invalid(format!("instance does not parse: {tagged}"))),
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            InstanceJson::Blowup(_) => "blowup",
            InstanceJson::DiracTree { .. } => "dirac-tree",
            InstanceJson::Quasirandom { .. } => "quasirandom",
            InstanceJson::PartialEmbed { .. } => "partial-embed",
        }
    }

    pub fn params_mut(&mut self) -> &mut Params {
        match self {
            InstanceJson::Blowup(b) => &mut b.params,
            InstanceJson::DiracTree { params, .. }
            | InstanceJson::Quasirandom { params, .. }
            | InstanceJson::PartialEmbed { params, .. } => params,
        }
    }

    pub fn blowup(&self) -> Result<BlowUpInstance> {
        match self {
            InstanceJson::Blowup(b) => b.decode(),
            other => Err(wrong_kind("blowup", other)),
        }
    }

    pub fn dirac(&self) -> Result<DiracInstance> {
        match self {
            InstanceJson::DiracTree { g, tree, params } => {
                let (g, colouring) = coloured(g)?;
                let (tree, _) = tree.decode()?;
                Ok(DiracInstance {
                    g,
                    colouring,
                    tree,
                    params: *params,
                })
            }
            other => Err(wrong_kind("dirac-tree", other)),
        }
    }

    pub fn quasirandom(&self) -> Result<QuasirandomInstance> {
        match self {
            InstanceJson::Quasirandom { g, h, params } => {
                let (g, colouring) = coloured(g)?;
                let (h, _) = h.decode()?;
                Ok(QuasirandomInstance {
                    g,
                    h,
                    colouring,
                    params: *params,
                })
            }
            other => Err(wrong_kind("quasirandom", other)),
        }
    }

    pub fn partial(&self) -> Result<PartialInstance> {
        match self {
            InstanceJson::PartialEmbed {
                g,
                reduced,
                h,
                x,
                params,
                d_prime,
            } => {
                let (g, colouring) = coloured(g)?;
                let (h, _) = h.decode()?;
                let edges: Vec<(usize, usize)> = reduced.iter().map(|e| (e[0], e[1])).collect();
                let reduced = PartitionedGraph::build(&[g.part_count()], &edges)?;
                Ok(PartialInstance {
                    g,
                    reduced,
                    h,
                    x: x.clone(),
                    colouring,
                    eps: params.eps,
                    d: params.d,
                    mu: params.mu,
                    delta: params.delta,
                    d_prime: *d_prime,
                })
            }
            other => Err(wrong_kind("partial-embed", other)),
        }
    }

    /// The spanning instances (blow-up, tree, dense host) as a blow-up
    /// instance whose checks are exactly those of a spanning rainbow embedding.
    pub fn spanning(&self) -> Result<BlowUpInstance> {
        let (h, g, colouring, params) = match self {
            InstanceJson::Blowup(b) => return b.decode(),
            InstanceJson::DiracTree { g, tree, params } => {
                let (g, c) = coloured(g)?;
                (tree.decode()?.0, g, c, *params)
            }
            InstanceJson::Quasirandom { g, h, params } => {
                let (g, c) = coloured(g)?;
                (h.decode()?.0, g, c, *params)
            }
            other => return Err(wrong_kind("a spanning kind", other)),
        };
        if h.n() != g.n() {
            return Err(Error::Invalid(format!("target has {} vertices, host has {}", h.n(), g.n())));
        }
        let flat = |x: &PartitionedGraph| x.repartition(vec![Vec::new(), (0..x.n()).collect()]);
        let (h, g) = (flat(&h)?, flat(&g)?);
        Ok(BlowUpInstance {
            candidacy: BlowUpInstance::complete_candidacy(&h, &g),
            reduced: PartitionedGraph::build(&[2], &[])?,
            h,
            g,
            colouring,
            phi0: Vec::new(),
            params,
        })
    }
}

fn coloured(g: &GraphJson) -> Result<(PartitionedGraph, EdgeSetColouring)> {
    let (g, c) = g.decode()?;
    let c = c.ok_or_else(|| Error::Invalid("host graph carries no colouring".into()))?;
    Ok((g, c))
}

fn wrong_kind(expected: &str, found: &InstanceJson) -> Error {
    Error::Invalid(format!("expected a {expected} instance, found {}", found.kind()))
}
