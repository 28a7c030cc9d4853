//! Running an instance through one of the embedders and re-verifying the result.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use rainbow_core::apps::{
    dirac_tree_embed, partial_embed, quasirandom_embed, recheck_partial, DiracConfig, PartialChecks, PartialConfig,
    PartialEmbedding, QuasirandomConfig,
};
use rainbow_core::embedder::{
    rainbow_blowup_embed, verify_embedding, CheckMode, ColourPolicy, EmbedConfig, RoundStats, Verification,
};
use rainbow_core::error::{Error, Result};
use rainbow_core::Execution;

use crate::json::InstanceJson;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Embed,
    TreeEmbed,
    PartialEmbed,
    QuasirandomEmbed,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunFlags {
    pub seed: u64,
    /// Round tries of the embedder (whole-run retries for `partial-embed`).
    pub budget_rounds: Option<usize>,
    /// Sampling attempts per conflict-free matching.
    pub budget_attempts: Option<usize>,
    pub eps: Option<f64>,
    pub d: Option<f64>,
    pub mu: Option<f64>,
    pub mode: Option<CheckMode>,
    /// Colour separation between rounds; each command has its own default.
    pub policy: Option<ColourPolicy>,
    pub execution: Execution,
}

/// Everything a run produced. The embedding itself is `phi`, plus the
/// candidate sets and reserved colours for partial embeddings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub command: Command,
    pub seed: u64,
    pub exit_code: i32,
    pub error: Option<String>,
    pub phi: Vec<[usize; 2]>,
    pub verified: bool,
    pub rounds: Vec<RoundStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<(usize, Vec<usize>)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reserve: Option<Vec<usize>>,
    /// Independent re-verification of the output.
    pub verification: Option<VerifyOutcome>,
    /// Stage reports of the embedder that ran.
    pub details: serde_json::Value,
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunReport {
    /// The `{"phi", "verified", "rounds"}` view printed by the command line.
    pub fn summary(&self) -> serde_json::Value {
        let mut v = serde_json::json!({
            "phi": self.phi,
            "verified": self.verified,
            "rounds": self.rounds,
        });
        if let (Some(c), Some(r)) = (&self.candidates, &self.reserve) {
            v["candidates"] = serde_json::json!(c);
            v["reserve"] = serde_json::json!(r);
        }
        v
    }
}

/// An embedding file: any JSON object with `phi`, optionally with the
/// candidate sets and reserve of a partial embedding.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct EmbeddingJson {
    pub phi: Vec<[usize; 2]>,
    #[serde(default)]
    pub candidates: Option<Vec<(usize, Vec<usize>)>>,
    #[serde(default)]
    pub reserve: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutcome {
    pub kind: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spanning: Option<Verification>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partial: Option<PartialChecks>,
}

fn apply_overrides(inst: &mut InstanceJson, flags: &RunFlags) {
    let p = inst.params_mut();
    if let Some(e) = flags.eps {
        p.eps = e;
    }
    if let Some(d) = flags.d {
        p.d = d;
    }
    if let Some(m) = flags.mu {
        p.mu = m;
    }
}

fn embed_config(base: EmbedConfig, flags: &RunFlags) -> EmbedConfig {
    let mut cfg = base;
    if let Some(b) = flags.budget_rounds {
        cfg.budget_rounds = b;
    }
    if let Some(a) = flags.budget_attempts {
        cfg.attempts = a;
    }
    if let Some(m) = flags.mode {
        cfg.check = m;
    }
    if let Some(p) = flags.policy {
        cfg.policy = p;
    }
    cfg
}

struct Produced {
    phi: Vec<[usize; 2]>,
    rounds: Vec<RoundStats>,
    partial: Option<PartialEmbedding>,
    details: serde_json::Value,
    stage_ms: BTreeMap<String, f64>,
}

fn pairs(phi: &[usize]) -> Vec<[usize; 2]> {
    phi.iter().enumerate().map(|(x, &v)| [x, v]).collect()
}

fn json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

fn dispatch(command: Command, inst: &InstanceJson, flags: &RunFlags) -> Result<Produced> {
    let (seed, exec) = (flags.seed, flags.execution);
    match command {
        Command::Embed => {
            let out = rainbow_blowup_embed(&inst.blowup()?, embed_config(EmbedConfig::default(), flags), seed, exec)?;
            Ok(Produced {
                phi: pairs(&out.phi),
                rounds: out.report.rounds.clone(),
                partial: None,
                stage_ms: out.report.timings_ms.clone(),
                details: json(&out.report),
            })
        }
        Command::TreeEmbed => {
            let mut cfg = DiracConfig::default();
            cfg.embed = embed_config(cfg.embed, flags);
            if let Some(m) = flags.mode {
                cfg.check = m;
            }
            let out = dirac_tree_embed(&inst.dirac()?, cfg, seed, exec)?;
            Ok(Produced {
                phi: pairs(&out.phi),
                rounds: out.report.rounds.clone(),
                partial: None,
                stage_ms: out.report.timings_ms.clone(),
                details: json(&out),
            })
        }
        Command::QuasirandomEmbed => {
            let mut cfg = QuasirandomConfig::default();
            cfg.embed = embed_config(cfg.embed, flags);
            if let Some(m) = flags.mode {
                cfg.check = m;
            }
            let out = quasirandom_embed(&inst.quasirandom()?, cfg, seed, exec)?;
            Ok(Produced {
                phi: pairs(&out.phi),
                rounds: out.report.rounds.clone(),
                partial: None,
                stage_ms: out.report.timings_ms.clone(),
                details: json(&out),
            })
        }
        Command::PartialEmbed => {
            let mut cfg = PartialConfig::default();
            if let Some(b) = flags.budget_rounds {
                cfg.retries = b;
            }
            if let Some(a) = flags.budget_attempts {
                cfg.attempts = a;
            }
            let out = partial_embed(&inst.partial()?, cfg, seed, exec)?;
            Ok(Produced {
                phi: out.phi.iter().map(|&(x, v)| [x, v]).collect(),
                rounds: Vec::new(),
                details: json(&out),
                partial: Some(out),
                stage_ms: BTreeMap::new(),
            })
        }
    }
}

/// Parse, embed and re-verify. The exit code is 0 only when the result
/// passed the independent re-verification; 2 for invalid instances or
/// unmet preconditions, 3 for exhausted budgets, 1 for internal failures.
pub fn run_pipeline(command: Command, instance_text: &str, flags: &RunFlags) -> RunReport {
    let mut timings_ms = BTreeMap::new();
    let clock = Instant::now();
    let mut report = RunReport {
        command,
        seed: flags.seed,
        exit_code: 0,
        error: None,
        phi: Vec::new(),
        verified: false,
        rounds: Vec::new(),
        candidates: None,
        reserve: None,
        verification: None,
        details: serde_json::Value::Null,
        timings_ms: BTreeMap::new(),
    };
    let fail = |mut report: RunReport, e: Error, timings_ms: BTreeMap<String, f64>| {
        report.exit_code = e.exit_code();
        report.error = Some(e.to_string());
        report.timings_ms = timings_ms;
        report
    };
    let mut inst = match InstanceJson::parse(instance_text) {
        Ok(i) => i,
        Err(e) => return fail(report, e, timings_ms),
    };
    apply_overrides(&mut inst, flags);
    timings_ms.insert("parse".to_string(), clock.elapsed().as_secs_f64() * 1e3);

    let clock = Instant::now();
    let produced = dispatch(command, &inst, flags);
    timings_ms.insert("embed".to_string(), clock.elapsed().as_secs_f64() * 1e3);
    let produced = match produced {
        Ok(p) => p,
        Err(e) => return fail(report, e, timings_ms),
    };
    for (k, v) in &produced.stage_ms {
        timings_ms.insert(format!("embed.{k}"), *v);
    }
    report.phi = produced.phi;
    report.rounds = produced.rounds;
    report.details = produced.details;
    if let Some(p) = &produced.partial {
        report.candidates = Some(p.candidates.clone());
        report.reserve = Some(p.reserve.clone());
    }

    let clock = Instant::now();
    let embedding = EmbeddingJson {
        phi: report.phi.clone(),
        candidates: report.candidates.clone(),
        reserve: report.reserve.clone(),
    };
    let verification = verify_parsed(&inst, &embedding);
    timings_ms.insert("verify".to_string(), clock.elapsed().as_secs_f64() * 1e3);
    report.timings_ms = timings_ms;
    match verification {
        Ok(v) => {
            report.verified = v.passed;
            if !v.passed {
                report.exit_code = 1;
                report.error = Some("embedder output failed independent verification".into());
            }
            report.verification = Some(v);
        }
        Err(e) => {
            report.exit_code = 1;
            report.error = Some(format!("embedder output could not be verified: {e}"));
        }
    }
    report
}

fn verify_parsed(inst: &InstanceJson, emb: &EmbeddingJson) -> Result<VerifyOutcome> {
    if let InstanceJson::PartialEmbed { .. } = inst {
        let p = inst.partial()?;
        let out = PartialEmbedding {
            phi: emb.phi.iter().map(|e| (e[0], e[1])).collect(),
            candidates: emb.candidates.clone().unwrap_or_default(),
            reserve: emb.reserve.clone().unwrap_or_default(),
            class_pairs: Vec::new(),
            rounds: Vec::new(),
            tries: 0,
            small_target: false,
            checks: PartialChecks {
                location: false,
                min_candidates: 0,
                required: 0.0,
                sizes: false,
                reserved_edges: false,
                distinct_colours: false,
                rainbow: false,
            },
        };
        if out.phi.iter().any(|&(x, v)| x >= p.h.n() || v >= p.g.n()) {
            return Err(Error::Invalid("embedding names vertices the instance does not have".into()));
        }
        let checks = recheck_partial(&p, &out);
        return Ok(VerifyOutcome {
            kind: inst.kind().into(),
            passed: checks.passed(),
            spanning: None,
            partial: Some(checks),
        });
    }
    let b = inst.spanning()?;
    let (n, hosts) = (b.h.n(), b.g.n());
    let mut phi = vec![usize::MAX; n];
    for &[x, v] in &emb.phi {
        if x >= n || v >= hosts {
            return Err(Error::Invalid(format!(
                "pair ({x},{v}) outside an instance with {n} target and {hosts} host vertices"
            )));
        }
        if phi[x] != usize::MAX {
            return Err(Error::Invalid(format!("target vertex {x} is mapped twice")));
        }
        phi[x] = v;
    }
    if let Some(x) = phi.iter().position(|&v| v == usize::MAX) {
        return Err(Error::Invalid(format!("target vertex {x} has no image")));
    }
    let v = verify_embedding(&b, &phi);
    Ok(VerifyOutcome {
        kind: inst.kind().into(),
        passed: v.passed(),
        spanning: Some(v),
        partial: None,
    })
}

/// Re-verify an embedding file against an instance file from scratch.
/// Parse failures and embeddings that do not fit the instance are errors;
/// a well-formed but wrong embedding gives `passed: false` with witnesses.
pub fn verify_report(instance_text: &str, embedding_text: &str) -> Result<VerifyOutcome> {
    let inst = InstanceJson::parse(instance_text)?;
    let emb: EmbeddingJson =
        serde_json::from_str(embedding_text).map_err(|e| Error::Invalid(format!("embedding does not parse: {e}")))?;
    verify_parsed(&inst, &emb)
}
