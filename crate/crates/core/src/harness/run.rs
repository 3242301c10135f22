use super::config::{Algorithm, ExperimentConfig, Model};
use super::instance::generate_values;
use crate::congest_sketches::{f0_estimate, f2_estimate, fp_ams_estimate};
use crate::constants::Constants;
use crate::engines::{PartnerSampler, RoundStats, UniformPartners};
use crate::error::{Error, Result};
use crate::exact_sum::{exact_g_sum, g_oracle, top_k, GValue};
use crate::gossip_algorithms::{fk_estimate, fp_estimate, l0_sample, lp_sample, preprocess_duplicate, push_sum, push_sum_rounds};
use crate::gossip_emulation::EmulatedPartners;
use crate::graph::{generate, Graph};
use crate::oracles::lp_distribution;
use crate::rng::{derive, tag};
use crate::values::ValueAssignment;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::time::Instant;

pub const SCHEMA_VERSION: u32 = 1;

/// One trial: a (config, seed) pair and what the run measured.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub schema: u32,
    pub config_digest: String,
    pub seed: u64,
    pub algorithm: String,
    pub estimate: Option<f64>,
    pub truth: Option<f64>,
    pub rel_error: Option<f64>,
    /// Simulated plus charged rounds.
    pub rounds: u64,
    pub messages: u64,
    pub max_congestion: u64,
    pub wall_ms: f64,
    /// Why the trial failed, if it did.
    pub error: Option<String>,
    pub detail: Value,
}

impl TrialRecord {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }

    pub fn within(&self, epsilon: f64) -> bool {
        self.rel_error.is_some_and(|e| e <= epsilon)
    }
}

struct Outcome {
    estimate: Option<f64>,
    truth: Option<f64>,
    stats: RoundStats,
    detail: Value,
}

fn rel_error(estimate: f64, truth: f64) -> f64 {
    if truth == 0.0 {
        estimate.abs()
    } else {
        (estimate - truth).abs() / truth
    }
}

/// Runs every seed of `cfg` in parallel; records come back in seed order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let graph = generate(&cfg.graph)?;
    let consts = cfg.constants()?;
    let digest = cfg.digest();
    Ok(cfg.seeds.to_vec().par_iter().map(|&seed| run_trial(cfg, &graph, &consts, &digest, seed)).collect())
}

/// Runs a single seed; failures become records with `error` set.
pub fn run_trial(cfg: &ExperimentConfig, g: &Graph, consts: &Constants, digest: &str, seed: u64) -> TrialRecord {
    let start = Instant::now();
    let result = generate_values(cfg, g.n(), seed).and_then(|vals| run_algorithm(cfg, g, &vals, seed, consts));
    let result = result.and_then(|o| match cfg.round_cap {
        Some(cap) if o.stats.total_rounds() > cap => Err(Error::CapExceeded { what: "trial rounds", cap }),
        _ => Ok(o),
    });
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut rec = TrialRecord {
        schema: SCHEMA_VERSION,
        config_digest: digest.to_string(),
        seed,
        algorithm: cfg.algorithm.label(),
        estimate: None,
        truth: None,
        rel_error: None,
        rounds: 0,
        messages: 0,
        max_congestion: 0,
        wall_ms,
        error: None,
        detail: Value::Null,
    };
    match result {
        Ok(o) => {
            rec.rel_error = o.estimate.zip(o.truth).map(|(e, t)| rel_error(e, t));
            rec.estimate = o.estimate;
            rec.truth = o.truth;
            rec.rounds = o.stats.total_rounds();
            rec.messages = o.stats.messages_sent;
            rec.max_congestion = o.stats.max_edge_congestion;
            rec.detail = o.detail;
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

fn run_algorithm(cfg: &ExperimentConfig, g: &Graph, vals: &ValueAssignment, seed: u64, consts: &Constants) -> Result<Outcome> {
    if cfg.model == Model::Congest {
        return run_congest_algorithm(cfg, g, vals, seed, consts);
    }
    let n = g.n();
    match cfg.model {
        Model::GossipIdeal => {
            let mut s = UniformPartners::new(n, derive(seed, &[tag::PARTNER]));
            run_gossip_algorithm(&cfg.algorithm, &mut s, vals, seed, consts)
        }
        _ => {
            let lambda = cfg.lambda.unwrap_or_else(|| (n as f64).powi(-3));
            let mut s = EmulatedPartners::new(g, lambda, derive(seed, &[tag::PARTNER]), cfg.emulation)?;
            let setup = s.setup_rounds();
            let mut o = run_gossip_algorithm(&cfg.algorithm, &mut s, vals, seed, consts)?;
            o.stats.charge(setup);
            if let Value::Object(m) = &mut o.detail {
                m.insert("setup_rounds".into(), json!(setup));
                m.insert("emulated_rounds".into(), json!(s.emulated_rounds()));
                m.insert("max_round_charge".into(), json!(s.max_round_charge()));
                m.insert("tau_source".into(), json!(s.state().tau_source));
            }
            Ok(o)
        }
    }
}

fn run_congest_algorithm(cfg: &ExperimentConfig, g: &Graph, vals: &ValueAssignment, seed: u64, consts: &Constants) -> Result<Outcome> {
    let freq = vals.frequencies();
    let alg = &cfg.algorithm;
    let sketch = |out: crate::congest_sketches::SketchOutcome, truth: f64| Outcome {
        estimate: Some(out.estimate),
        truth: Some(truth),
        detail: json!({ "repetitions": out.repetitions.len() }),
        stats: out.stats,
    };
    Ok(match alg {
        Algorithm::F0 { .. } => sketch(f0_estimate(g, vals, &alg.kmv().unwrap(), seed, consts)?, freq.f0() as f64),
        Algorithm::F2 { .. } => sketch(f2_estimate(g, vals, &alg.tug().unwrap(), seed, consts)?, freq.moment_f64(2)),
        Algorithm::AmsFp { p, .. } => sketch(fp_ams_estimate(g, vals, &alg.ams().unwrap(), seed, consts)?, freq.moment_f64(*p)),
        Algorithm::ExactSum { g: gfun } => {
            let out = exact_g_sum(g, vals, gfun, &cfg.router, seed, consts)?;
            let truth = g_oracle(&freq, gfun)?;
            let exact = match (out.value, truth) {
                (GValue::Exact(a), GValue::Exact(b)) => a == b,
                (a, b) => (a.as_f64() - b.as_f64()).abs() <= 1e-9,
            };
            Outcome {
                estimate: Some(out.value.as_f64()),
                truth: Some(truth.as_f64()),
                detail: json!({ "value": out.value, "oracle": truth, "exact": exact, "tokens": out.tokens }),
                stats: out.stats,
            }
        }
        Algorithm::TopK { k } => {
            let out = top_k(g, vals, *k, &cfg.router, seed, consts)?;
            let oracle = freq.top_k(*k);
            let mass = |items: &[(u64, u64)]| items.iter().map(|x| x.1).sum::<u64>() as f64;
            Outcome {
                estimate: Some(mass(&out.items)),
                truth: Some(mass(&oracle)),
                detail: json!({ "items": out.items, "oracle": oracle, "exact": out.items == oracle }),
                stats: out.stats,
            }
        }
        _ => unreachable!("validated as a CONGEST algorithm"),
    })
}

fn run_gossip_algorithm<S: PartnerSampler>(alg: &Algorithm, s: &mut S, vals: &ValueAssignment, seed: u64, consts: &Constants) -> Result<Outcome> {
    let n = vals.n();
    let freq = vals.frequencies();
    Ok(match alg {
        Algorithm::PushSum => {
            let ones: Vec<u64> = (0..n).map(|v| u64::from(vals.get(v).is_some())).collect();
            let out = push_sum(s, &ones, n as u64, push_sum_rounds(n, n as u64, consts), seed, consts)?;
            let agree = (0..n).all(|v| out.rounded(v) == out.rounded(0));
            Outcome {
                estimate: Some(out.estimates[0]),
                truth: Some(vals.non_empty() as f64),
                detail: json!({ "rounded": out.rounded(0), "all_agree": agree, "push_rounds": out.rounds }),
                stats: out.stats,
            }
        }
        Algorithm::Duplicate => {
            let out = preprocess_duplicate(s, vals, seed, consts)?;
            let z = vals.non_empty() as u64;
            let factor = if z == 0 || 3 * z >= n as u64 { 1 } else { (n as u64).div_ceil(3 * z) };
            let after = out.vals.frequencies();
            let scaled = freq.iter().all(|(x, f)| after.count(x) == f * factor) && after.f0() == freq.f0();
            Outcome {
                estimate: Some(out.vals.non_empty() as f64),
                truth: Some((z * factor) as f64),
                detail: json!({ "z": out.z, "factor": out.factor, "frequencies_scaled": scaled }),
                stats: out.stats,
            }
        }
        Algorithm::L0Sample => {
            let (value, stats) = l0_sample(s, vals, seed, consts)?;
            Outcome { estimate: Some(value as f64), truth: None, detail: json!({ "in_support": freq.count(value) > 0 }), stats }
        }
        Algorithm::LpSample { p, preprocess } => {
            let (vals, mut stats) = if *preprocess {
                let d = preprocess_duplicate(s, vals, derive(seed, &[tag::PHASE, 1]), consts)?;
                (d.vals, d.stats)
            } else {
                (vals.clone(), RoundStats::default())
            };
            let out = lp_sample(s, &vals, *p, seed, consts)?;
            stats.absorb(&out.stats);
            let prob = lp_distribution(&freq, *p)?.into_iter().find(|&(x, _)| x == out.value).map_or(0.0, |x| x.1);
            Outcome {
                estimate: Some(out.value as f64),
                truth: None,
                detail: json!({ "attempts": out.attempts, "probability": prob }),
                stats,
            }
        }
        Algorithm::Fk { k, epsilon } => {
            let out = fk_estimate(s, vals, *k, *epsilon, seed, consts)?;
            Outcome {
                estimate: Some(out.estimate),
                truth: Some(freq.moment_f64(*k)),
                detail: json!({ "phases": out.phases, "hits": out.hits }),
                stats: out.stats,
            }
        }
        Algorithm::Fp { p, .. } => {
            let out = fp_estimate(s, vals, &alg.fp().unwrap(), seed, consts)?;
            Outcome {
                estimate: Some(out.estimate),
                truth: Some(freq.moment_f64(*p)),
                detail: json!({
                    "fk": out.fk,
                    "dup_factor": out.dup_factor,
                    "groups": out.groups,
                    "per_group": out.per_group,
                    "group_means": out.group_means,
                }),
                stats: out.stats,
            }
        }
        _ => unreachable!("validated as a GOSSIP algorithm"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(json: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(json).unwrap()
    }

    const F0: &str = r#"{
        "model": "congest",
        "graph": {"family": "clique", "n": 64},
        "universe": 1024,
        "values": {"kind": "all-distinct"},
        "algorithm": {"name": "f0", "epsilon": 0.5},
        "seeds": [1, 2, 3]
    }"#;

    #[test]
    fn f0_three_seeds_three_records() {
        let recs = run_experiment(&cfg(F0)).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![1, 2, 3]);
        for r in &recs {
            assert!(r.succeeded(), "{:?}", r.error);
            assert_eq!(r.truth, Some(64.0));
            assert!(r.rounds > 0 && r.messages > 0);
        }
    }

    #[test]
    fn reruns_are_identical_modulo_wall_time() {
        let strip = |mut v: Vec<TrialRecord>| {
            v.iter_mut().for_each(|r| r.wall_ms = 0.0);
            serde_json::to_string(&v).unwrap()
        };
        let c = cfg(&F0.replace("clique", "cycle").replace("64", "24"));
        assert_eq!(strip(run_experiment(&c).unwrap()), strip(run_experiment(&c).unwrap()));
        let g = cfg(r#"{"model": "gossip-ideal", "graph": {"family": "clique", "n": 48}, "universe": 8,
            "values": {"kind": "uniform", "support": 4}, "null_fraction": 0.5,
            "algorithm": {"name": "fk", "k": 2, "epsilon": 0.5}, "seeds": {"start": 5, "count": 2}}"#);
        assert_eq!(strip(run_experiment(&g).unwrap()), strip(run_experiment(&g).unwrap()));
    }

    #[test]
    fn failures_become_records() {
        let c = cfg(&F0.replace("\"seeds\"", "\"round_cap\": 3, \"seeds\""));
        let recs = run_experiment(&c).unwrap();
        assert!(recs.iter().all(|r| r.error.as_deref().is_some_and(|e| e.contains("cap"))));
    }

    #[test]
    fn exact_and_top_k_match_oracles() {
        let base = r#"{"model": "congest", "graph": {"family": "random-regular", "n": 40, "d": 4, "seed": 2}, "universe": 16,
            "values": {"kind": "zipf", "alpha": 1.2, "support": 16}, "null_fraction": 0.25, "seeds": [1, 2],
            "algorithm": ALG}"#;
        for alg in [r#"{"name": "exact-sum", "g": {"kind": "power", "p": 3}}"#, r#"{"name": "exact-sum", "g": {"kind": "entropy"}}"#, r#"{"name": "top-k", "k": 3}"#] {
            for r in run_experiment(&cfg(&base.replace("ALG", alg))).unwrap() {
                assert_eq!(r.detail["exact"], json!(true), "{alg}: {r:?}");
            }
        }
    }

    #[test]
    fn emulated_duplication_records_setup() {
        let c = cfg(r#"{"model": "gossip-emulated", "graph": {"family": "random-regular", "n": 32, "d": 4, "seed": 1}, "universe": 8,
            "values": {"kind": "uniform", "support": 3}, "null_fraction": 0.9, "emulation": "endpoint",
            "algorithm": {"name": "duplicate"}, "seeds": [4]}"#);
        let r = &run_experiment(&c).unwrap()[0];
        assert!(r.succeeded(), "{:?}", r.error);
        assert_eq!(r.estimate, r.truth);
        assert_eq!(r.detail["frequencies_scaled"], json!(true));
        assert!(r.rounds >= r.detail["setup_rounds"].as_u64().unwrap());
    }
}
