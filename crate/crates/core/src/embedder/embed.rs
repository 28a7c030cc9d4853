use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::feasibility::{check_feasible, Feasibility};
use super::instance::{validate_instance, BlowUpInstance, Form, ValidationReport};
use super::merge::{merge_rare_colours, MergeStats};
use super::reduce::{reduce_to_matchings, ReduceConfig, ReduceStats};
use super::reserve::{reserve_colours, ColourPolicy, ReserveConfig, ReserveReport};
use super::rounds::{embed_rounds, CheckMode, RoundStats, RoundsConfig};
use super::verify::{verify_embedding, Verification};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::matching::SampleMode;
use crate::partition::round_colouring;
use crate::seed;

/// When general instances are refined into matchings form first.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReductionPolicy {
    /// Only when `H` is not a union of matchings between clusters.
    #[default]
    Auto,
    Always,
    /// Embed general instances directly; the round filter then only applies
    /// to matched cluster pairs.
    Never,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmbedConfig {
    pub policy: ColourPolicy,
    pub reduction: ReductionPolicy,
    pub reduce: ReduceConfig,
    /// Merge rare colours before reserving (reserved policy only).
    pub merge: bool,
    /// Run regularity tests while validating.
    pub validate_regularity: bool,
    pub reserve_trials: usize,
    pub reserve_budget: usize,
    pub attempts: usize,
    pub retries: usize,
    pub backtracks: usize,
    pub budget_rounds: usize,
    pub sample: Option<SampleMode>,
    pub check: CheckMode,
    pub filter: bool,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            policy: ColourPolicy::Reserved,
            reduction: ReductionPolicy::Auto,
            reduce: ReduceConfig::default(),
            merge: true,
            validate_regularity: false,
            reserve_trials: crate::regularity::DEFAULT_TRIALS,
            reserve_budget: 10,
            attempts: 4096,
            retries: 4,
            backtracks: 2,
            budget_rounds: 40,
            sample: None,
            check: CheckMode::Auto,
            filter: true,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmbedReport {
    pub form: Form,
    pub validation: ValidationReport,
    pub feasibility: Feasibility,
    pub merge: Option<MergeStats>,
    pub reduction: Option<ReduceStats>,
    pub round_count: usize,
    pub reserve: ReserveReport,
    pub rounds: Vec<RoundStats>,
    pub failed_tries: Vec<RoundStats>,
    pub tries: usize,
    pub backtracks: usize,
    pub verification: Verification,
    /// Wall time per stage in milliseconds.
    pub timings_ms: BTreeMap<String, f64>,
}

#[derive(Clone, Debug)]
pub struct Embedding {
    /// Image of every target vertex.
    pub phi: Vec<usize>,
    pub report: EmbedReport,
}

fn stage(name: &str, e: Error) -> Error {
    match e {
        Error::Invalid(m) => Error::Invalid(format!("{name}: {m}")),
        Error::Precondition(m) => Error::Precondition(format!("{name}: {m}")),
        Error::Invariant(m) => Error::Invariant(format!("{name}: {m}")),
        other => other,
    }
}

/// Embed `H` into `G` as a rainbow copy extending `φ0` with every vertex on a
/// candidate: validate, check the exceptional map, merge rare colours, refine
/// general instances, reserve colours per round and embed round by round.
/// The result is verified against `inst` itself before it is returned.
pub fn rainbow_blowup_embed(inst: &BlowUpInstance, cfg: EmbedConfig, seed: u64, exec: Execution) -> Result<Embedding> {
    let mut timings_ms = BTreeMap::new();
    let mut clock = Instant::now();
    let mut lap = |name: &str| {
        timings_ms.insert(name.to_string(), clock.elapsed().as_secs_f64() * 1e3);
        clock = Instant::now();
    };
    let form = inst.detected_form();
    let validation = validate_instance(inst, form, cfg.validate_regularity, seed::derive(seed, "validate", 0), exec)?;
    if let Some(c) = validation.first_failure() {
        return Err(Error::invalid(format!(
            "instance check {} failed: {}",
            c.name,
            c.detail.clone().unwrap_or_default()
        )));
    }
    let p = inst.params;
    let bound = 2.0 * p.delta.max(1) as f64 * p.mu * inst.n() as f64;
    let feasibility = check_feasible(inst, bound).map_err(|e| stage("feasibility", e))?;
    if !feasibility.feasible() {
        return Err(Error::pre(format!("exceptional map is not feasible: {feasibility:?}")));
    }
    lap("validate");

    let mut work = inst.clone();
    let mut merge = None;
    if cfg.merge && cfg.policy == ColourPolicy::Reserved {
        let m = merge_rare_colours(inst, p.mu).map_err(|e| stage("merge", e))?;
        work.colouring = m.colouring;
        merge = Some(m.stats);
    }
    lap("merge");

    let reduce = match cfg.reduction {
        ReductionPolicy::Always => true,
        ReductionPolicy::Never => false,
        ReductionPolicy::Auto => form == Form::General,
    };
    let mut reduction = None;
    if reduce {
        let red = reduce_to_matchings(&work, cfg.reduce, seed::derive(seed, "reduce", 0)).map_err(|e| stage("reduce", e))?;
        work = red.instance;
        reduction = Some(red.stats);
    }
    lap("reduce");

    let psi = round_colouring(&work.reduced, true).map_err(|e| stage("round colouring", e))?;
    let reserve_cfg = ReserveConfig {
        trials: cfg.reserve_trials,
        budget: cfg.reserve_budget,
        ..ReserveConfig::from_params(p.eps, p.d, p.mu)
    };
    let res = reserve_colours(&work, &psi, cfg.policy, reserve_cfg, seed::derive(seed, "reserve", 0), exec)
        .map_err(|e| stage("reserve", e))?;
    lap("reserve");

    let classes = res.classes().max(1) as f64;
    let mut rc = RoundsConfig::new(2.0 * p.eps, p.d / classes.powi(res.report.set_size.max(1) as i32));
    rc.attempts = cfg.attempts;
    rc.retries = cfg.retries;
    rc.backtracks = cfg.backtracks;
    rc.budget = cfg.budget_rounds;
    rc.sample = cfg.sample;
    rc.check = cfg.check;
    rc.filter = cfg.filter;
    rc.strict = cfg.policy == ColourPolicy::Reserved && form != Form::General;
    let delta = p.delta.max(1) as f64;
    rc.conflict_reference = 4.0 * p.mu * delta * delta * inst.n() as f64;
    let out = embed_rounds(&work, &psi, &res, rc, seed::derive(seed, "rounds", 0), exec)?;
    lap("rounds");

    let verification = verify_embedding(inst, &out.phi);
    if !verification.passed() {
        return Err(Error::Invariant(format!(
            "embedding fails verification against the input: {:?}",
            verification.failures
        )));
    }
    lap("verify");
    Ok(Embedding {
        phi: out.phi,
        report: EmbedReport {
            form,
            validation,
            feasibility,
            merge,
            reduction,
            round_count: psi.rounds,
            reserve: res.report,
            rounds: out.rounds,
            failed_tries: out.failures,
            tries: out.tries,
            backtracks: out.backtracks,
            verification,
            timings_ms,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedder::instance::Params;
    use crate::graph::{EdgeSetColouring, PartitionedGraph};

    fn two_clusters(h_edges: &[(usize, usize)], m: usize) -> BlowUpInstance {
        let mut g_edges = Vec::new();
        for a in 0..m {
            for b in m..2 * m {
                g_edges.push((a, b));
            }
        }
        let h = PartitionedGraph::build(&[0, m, m], h_edges).unwrap();
        let g = PartitionedGraph::build(&[0, m, m], &g_edges).unwrap();
        let mut c = EdgeSetColouring::new(g.edge_count());
        for (k, &(u, v)) in g.edges().iter().enumerate() {
            c.assign(u, v, &[k]).unwrap();
        }
        BlowUpInstance {
            candidacy: BlowUpInstance::complete_candidacy(&h, &g),
            reduced: PartitionedGraph::build(&[3], &[(1, 2)]).unwrap(),
            h,
            g,
            colouring: c,
            phi0: Vec::new(),
            params: Params {
                eps: 0.2,
                d: 0.9,
                mu: 0.05,
                delta: 2,
            },
        }
    }

    #[test]
    fn matchings_form_skips_reduction() {
        let h: Vec<(usize, usize)> = (0..10).map(|a| (a, 10 + a)).collect();
        let inst = two_clusters(&h, 10);
        let out = rainbow_blowup_embed(&inst, EmbedConfig::default(), 1, Execution::Sequential).unwrap();
        assert!(out.report.reduction.is_none());
        assert_eq!(out.report.form, Form::Matchings);
        assert!(out.report.verification.passed());
    }

    #[test]
    fn general_form_is_reduced_and_verified_against_the_input() {
        let m = 16;
        let h: Vec<(usize, usize)> = (0..m).flat_map(|a| [(a, m + a), (a, m + (a + 1) % m)]).collect();
        let inst = two_clusters(&h, m);
        // at this size reserved colour classes leave too sparse a host per sub-cluster pair
        let cfg = EmbedConfig {
            policy: ColourPolicy::Ledger,
            ..EmbedConfig::default()
        };
        let out = rainbow_blowup_embed(&inst, cfg, 4, Execution::Parallel).unwrap();
        assert_eq!(out.report.form, Form::General);
        assert!(out.report.reduction.is_some());
        assert!(verify_embedding(&inst, &out.phi).passed());
    }

    #[test]
    fn broken_instances_are_rejected_before_embedding() {
        let mut inst = two_clusters(&[(0, 10)], 10);
        inst.colouring = EdgeSetColouring::new(1);
        let err = rainbow_blowup_embed(&inst, EmbedConfig::default(), 1, Execution::Sequential).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
