use super::network::build_sorting_network;
use super::sort::{distributed_sort, host, sort_positions, Key, Placed};
use crate::constants::Constants;
use crate::engines::{bits_for, BitCost, CongestConfig, Payload, RoundStats};
use crate::error::{invalid, Error, Result};
use crate::graph::{Graph, Tree};
use crate::primitives::{aggregate_sum, aggregate_vector, broadcast_words, elect_leader_and_ids, route, upcast_k_smallest_grouped, LeaderSetup, Routed, Router};
use crate::rng::{derive, tag};
use crate::values::{FrequencyVector, ValueAssignment};
use serde::{Deserialize, Serialize};

const ENTROPY_SCALE: f64 = (1u64 << 48) as f64;

/// The per-value function summed over the frequency vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GFunction {
    /// g(f) = 1, giving F0.
    Distinct,
    /// g(f) = f^p, giving F_p.
    Power { p: u32 },
    /// g(f) = −(f/F1)·ln(f/F1), giving the empirical entropy.
    Entropy,
    /// g(f) = f, giving F1.
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GValue {
    Exact(u128),
    Real(f64),
}

impl GValue {
    pub fn as_f64(self) -> f64 {
        match self {
            GValue::Exact(x) => x as f64,
            GValue::Real(x) => x,
        }
    }
}

impl GFunction {
    fn exact(&self, f: u64) -> Option<u128> {
        match *self {
            GFunction::Distinct => Some(1),
            GFunction::Power { p } => (f as u128).checked_pow(p),
            GFunction::Identity => Some(f as u128),
            GFunction::Entropy => None,
        }
    }

    fn entropy_term(f: u64, f1: u64) -> f64 {
        let q = f as f64 / f1 as f64;
        -q * q.ln()
    }

    /// Integer a node contributes to the aggregation for a value of count f.
    fn scaled(&self, f: u64, f1: u64) -> Result<u128> {
        match self {
            GFunction::Entropy => Ok((Self::entropy_term(f, f1) * ENTROPY_SCALE).round() as u128),
            g => g.exact(f).ok_or(Error::RangeOverflow { value: f as i128, bound: u128::MAX }),
        }
    }

    /// Upper bound on the aggregated total for n nodes.
    fn total_bound(&self, n: u64) -> u128 {
        match *self {
            GFunction::Distinct | GFunction::Identity => n as u128,
            GFunction::Power { p } => (n as u128).saturating_pow(p),
            GFunction::Entropy => (((n.max(2) as f64).ln() + 1.0) * ENTROPY_SCALE) as u128,
        }
    }
}

/// Σ g(f_i) by direct counting.
pub fn g_oracle(freq: &FrequencyVector, gfun: &GFunction) -> Result<GValue> {
    match gfun {
        GFunction::Entropy => {
            let f1 = freq.f1();
            Ok(GValue::Real(freq.iter().map(|(_, f)| GFunction::entropy_term(f, f1)).sum()))
        }
        g => freq
            .iter()
            .try_fold(0u128, |acc, (_, f)| g.exact(f).and_then(|x| acc.checked_add(x)))
            .map(GValue::Exact)
            .ok_or(Error::RangeOverflow { value: -1, bound: u128::MAX }),
    }
}

/// Sums non-negative integers wider than one message by splitting them into
/// limbs aggregated coordinate-wise, then broadcasting the limb totals.
pub fn aggregate_wide(g: &Graph, tree: &Tree, values: &[u128], max_total: u128, cfg: &CongestConfig) -> Result<(u128, RoundStats)> {
    let n = values.len() as u128;
    let budget = cfg.cost.budget();
    let limb_bits = budget.saturating_sub(bits_for(2 * n + 1) + 9).clamp(1, 40);
    let limbs = bits_for(max_total.saturating_add(1)).div_ceil(limb_bits).max(1) as usize;
    let mask = (1u128 << limb_bits) - 1;
    let vectors: Vec<Vec<i64>> = values
        .iter()
        .map(|&x| (0..limbs).map(|i| ((x >> (i as u32 * limb_bits)) & mask) as i64).collect())
        .collect();
    let (sums, mut stats) = aggregate_vector(g, tree, vectors, n * mask, cfg)?;
    let words: Vec<u64> = sums.iter().map(|&s| s as u64).collect();
    let (_, bstats) = broadcast_words(g, tree, &words, bits_for(n * mask + 1), cfg)?;
    stats.absorb(&bstats);
    let total = sums.iter().enumerate().try_fold(0u128, |acc, (i, &s)| {
        (s as u128).checked_shl(i as u32 * limb_bits).and_then(|x| acc.checked_add(x))
    });
    let total = total.ok_or(Error::RangeOverflow { value: -1, bound: max_total })?;
    Ok((total, stats))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Token {
    Blank,
    Tok { value: u64, origin: usize, head: bool, tail: bool },
    PosInf,
}

impl Payload for Token {
    fn bits(&self, c: &BitCost) -> u32 {
        2 + c.value() + c.node_id() + 2
    }
}

/// Output of the sort and head/tail pipeline.
#[derive(Clone, Debug)]
pub struct HeadPhase {
    /// (value, f) at the node holding that value's head token.
    pub heads: Vec<Option<(u64, u64)>>,
    /// Key held by each identifier after the first sort.
    pub sorted: Vec<Key>,
    /// Number of head/tail tokens formed, 2·F0 − #{i : f_i = 1}.
    pub tokens: usize,
    pub stats: RoundStats,
}

/// Sorts the values, marks block heads and tails by asking positions ±1,
/// sorts the resulting tokens by (value, origin) so each head sits right
/// before its tail, and lets every head holder learn f = tail − head + 1.
pub fn head_phase(g: &Graph, setup: &LeaderSetup, router: &Router, vals: &ValueAssignment, cfg: &CongestConfig) -> Result<HeadPhase> {
    let n = g.n();
    let net = build_sorting_network(n);
    let width = net.width;
    let pos_bits = bits_for(width as u128);
    let (sorted, mut stats) = distributed_sort(g, setup, router, &net, vals.as_slice(), cfg)?;
    let key_at = |q: usize| if q < n { sorted[q] } else { Key::PosInf };

    let mut batch = Vec::new();
    for q in 0..width.min(n + 1) {
        for nb in [q.wrapping_sub(1), q + 1] {
            if nb < n {
                batch.push(Routed { src: host(setup, q), dst: host(setup, nb), payload: Placed { pos: q, key: key_at(q), pos_bits } });
            }
        }
    }
    let (delivered, s) = route(g, setup, router, batch, cfg)?;
    stats.absorb(&s);
    let mut head = vec![true; n];
    let mut tail = vec![true; n];
    for (v, msgs) in delivered.into_iter().enumerate() {
        let me = setup.ids[v] - 1;
        for (_, m) in msgs {
            let same = m.key == sorted[me];
            if m.pos + 1 == me {
                head[me] = !same;
            } else if m.pos == me + 1 {
                tail[me] = !same;
            }
        }
    }

    let mut tokens = 0;
    let keys: Vec<Token> = (0..width)
        .map(|q| match key_at(q) {
            Key::Val(value) if head[q] || tail[q] => {
                tokens += 1;
                Token::Tok { value, origin: q, head: head[q], tail: tail[q] }
            }
            Key::PosInf => Token::PosInf,
            _ => Token::Blank,
        })
        .collect();
    let (toks, s) = sort_positions(g, setup, router, &net, keys, cfg)?;
    stats.absorb(&s);

    let mut heads = vec![None; n];
    let mut queries = Vec::new();
    for (p, t) in toks.iter().enumerate() {
        if let Token::Tok { value, head: true, tail, .. } = *t {
            if tail {
                heads[host(setup, p)] = Some((value, 1));
            } else {
                queries.push(Routed { src: host(setup, p), dst: host(setup, p + 1), payload: Placed { pos: p, key: (), pos_bits } });
            }
        }
    }
    let (asked, s) = route(g, setup, router, queries, cfg)?;
    stats.absorb(&s);
    let replies: Vec<_> = asked
        .into_iter()
        .enumerate()
        .flat_map(|(v, qs)| qs.into_iter().map(move |(src, q)| (v, src, q.pos)))
        .map(|(v, src, p)| Routed { src: v, dst: src, payload: Placed { pos: p + 1, key: toks[p + 1], pos_bits } })
        .collect();
    let (answers, s) = route(g, setup, router, replies, cfg)?;
    stats.absorb(&s);
    for (v, msgs) in answers.into_iter().enumerate() {
        for (_, m) in msgs {
            let (Token::Tok { value, origin, head: true, .. }, Token::Tok { value: tv, origin: to, tail: true, .. }) = (toks[m.pos - 1], m.key) else {
                unreachable!("token order broken");
            };
            debug_assert_eq!(value, tv);
            heads[v] = Some((value, (to - origin + 1) as u64));
        }
    }
    Ok(HeadPhase { heads, sorted, tokens, stats })
}

/// Result of an exact Σ g(f_i) run.
#[derive(Clone, Debug)]
pub struct ExactSum {
    pub value: GValue,
    pub tokens: usize,
    pub stats: RoundStats,
}

fn prepare(g: &Graph, vals: &ValueAssignment, seed: u64, consts: &Constants) -> Result<(LeaderSetup, CongestConfig)> {
    if vals.n() != g.n() {
        return Err(invalid(format!("{} values for {} nodes", vals.n(), g.n())));
    }
    let cfg = CongestConfig::new(derive(seed, &[tag::PHASE, 0]), BitCost::new(g.n(), vals.universe(), consts.c0));
    Ok((elect_leader_and_ids(g, &cfg)?, cfg))
}

/// Exact Σ_{i: f_i > 0} g(f_i); entropy is carried in 48-bit fixed point.
pub fn exact_g_sum(g: &Graph, vals: &ValueAssignment, gfun: &GFunction, router: &Router, seed: u64, consts: &Constants) -> Result<ExactSum> {
    let n = g.n();
    let (setup, cfg) = prepare(g, vals, seed, consts)?;
    let mut stats = setup.stats.clone();
    let f1 = if *gfun == GFunction::Entropy {
        let ones: Vec<i128> = (0..n).map(|v| i128::from(vals.get(v).is_some())).collect();
        let (f1, s) = aggregate_sum(g, &setup.tree, &ones, n as u128, &cfg)?;
        stats.absorb(&s);
        f1 as u64
    } else {
        0
    };
    let hp = head_phase(g, &setup, router, vals, &cfg)?;
    stats.absorb(&hp.stats);
    let local = hp
        .heads
        .iter()
        .map(|h| h.map_or(Ok(0), |(_, f)| gfun.scaled(f, f1)))
        .collect::<Result<Vec<u128>>>()?;
    let (total, s) = aggregate_wide(g, &setup.tree, &local, gfun.total_bound(n as u64), &cfg)?;
    stats.absorb(&s);
    let value = match gfun {
        GFunction::Entropy => GValue::Real(total as f64 / ENTROPY_SCALE),
        _ => GValue::Exact(total),
    };
    Ok(ExactSum { value, tokens: hp.tokens, stats })
}

/// The k most frequent values with their counts, ties to the smaller value.
#[derive(Clone, Debug)]
pub struct TopK {
    pub items: Vec<(u64, u64)>,
    pub stats: RoundStats,
}

/// Top-k frequent values: after the head phase every head holder upcasts
/// the key (n − f)·(N+1) + value, and the root keeps the k smallest keys.
pub fn top_k(g: &Graph, vals: &ValueAssignment, k: usize, router: &Router, seed: u64, consts: &Constants) -> Result<TopK> {
    if k == 0 {
        return Err(invalid("top-k needs k >= 1"));
    }
    let n = g.n() as u64;
    let stride = vals.universe() + 1;
    let (setup, cfg) = prepare(g, vals, seed, consts)?;
    let mut stats = setup.stats.clone();
    let hp = head_phase(g, &setup, router, vals, &cfg)?;
    stats.absorb(&hp.stats);
    let items: Vec<Vec<(usize, u64)>> = hp
        .heads
        .iter()
        .map(|h| h.map(|(value, f)| vec![(0, (n - f) * stride + value)]).unwrap_or_default())
        .collect();
    let up = upcast_k_smallest_grouped(g, &setup.tree, 1, k, &items, (n + 1) * stride, false, &cfg)?;
    stats.absorb(&up.stats);
    let items = up.groups[0].iter().map(|&key| (key % stride, n - key / stride)).collect();
    Ok(TopK { items, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate;
    use crate::rng::run_rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn graph(spec: &str) -> Graph {
        generate(&spec.parse().unwrap()).unwrap()
    }

    fn assignment(vals: &[u64]) -> ValueAssignment {
        ValueAssignment::new(vals.iter().map(|&x| (x > 0).then_some(x)).collect(), 16).unwrap()
    }

    fn setup_for(g: &Graph, universe: u64) -> (LeaderSetup, CongestConfig) {
        let cfg = CongestConfig::new(1, BitCost::new(g.n(), universe, 8));
        (elect_leader_and_ids(g, &cfg).unwrap(), cfg)
    }

    #[test]
    fn tiny_examples() {
        let c = Constants::default();
        let r = exact_g_sum(&graph("path:3"), &assignment(&[1, 1, 2]), &GFunction::Distinct, &Router::Tree, 0, &c).unwrap();
        assert_eq!(r.value, GValue::Exact(2));
        assert_eq!(r.tokens, 3);
        let r = exact_g_sum(&graph("cycle:4"), &assignment(&[5, 5, 9, 5]), &GFunction::Power { p: 2 }, &Router::Tree, 0, &c).unwrap();
        assert_eq!(r.value, GValue::Exact(10));
        let r = exact_g_sum(&graph("star:5"), &assignment(&[0; 5]), &GFunction::Entropy, &Router::Tree, 0, &c).unwrap();
        assert_eq!(r.value, GValue::Real(0.0));
    }

    #[test]
    fn sort_examples() {
        let g = graph("clique:8");
        let (setup, cfg) = setup_for(&g, 16);
        let net = build_sorting_network(8);
        let mut vals = vec![None; 8];
        for id in 1..=8 {
            vals[setup.node_at[id - 1]] = Some(9 - id as u64);
        }
        let (sorted, stats) = distributed_sort(&g, &setup, &Router::Tree, &net, &vals, &cfg).unwrap();
        assert_eq!(sorted, (1..=8).map(Key::Val).collect::<Vec<_>>());
        assert!(stats.rounds > 0);

        let g = graph("random-regular:64:8:3");
        let (setup, cfg) = setup_for(&g, 16);
        let mut rng = run_rng(8, &[]);
        let vals: Vec<Option<u64>> = (0..64).map(|_| rng.gen_bool(0.7).then(|| rng.gen_range(1..=16))).collect();
        let net = build_sorting_network(64);
        let (sorted, _) = distributed_sort(&g, &setup, &Router::Tree, &net, &vals, &cfg).unwrap();
        let mut expect: Vec<Key> = vals.iter().map(|v| v.map_or(Key::NegInf, Key::Val)).collect();
        expect.sort();
        assert_eq!(sorted, expect);
        let again: Vec<Option<u64>> = (0..64)
            .map(|v| match sorted[setup.ids[v] - 1] {
                Key::Val(x) => Some(x),
                _ => None,
            })
            .collect();
        let (resorted, stats) = distributed_sort(&g, &setup, &Router::Tree, &net, &again, &cfg).unwrap();
        assert_eq!(resorted, expect);
        assert!(stats.messages_sent > 0);
    }

    #[test]
    fn top_k_examples() {
        let c = Constants::default();
        let g = graph("random-regular:12:3:2");
        let vals = assignment(&[1, 2, 1, 3, 1, 4, 2, 1, 3, 2, 1, 3]);
        let t = top_k(&g, &vals, 2, &Router::Tree, 0, &c).unwrap();
        assert_eq!(t.items, vec![(1, 5), (2, 3)]);
        let t = top_k(&g, &vals, 10, &Router::Tree, 0, &c).unwrap();
        assert_eq!(t.items, vals.frequencies().top_k(10));
        let t = top_k(&graph("path:4"), &assignment(&[7; 4]), 1, &Router::Tree, 0, &c).unwrap();
        assert_eq!(t.items, vec![(7, 4)]);
    }

    #[test]
    fn cost_model_router_charges_per_batch() {
        let c = Constants::default();
        let g = graph("random-regular:32:4:1");
        let vals = assignment(&(0..32).map(|v| v % 5).collect::<Vec<_>>());
        let router = Router::CostModel { tau: 3, c: 0.5 };
        let r = exact_g_sum(&g, &vals, &GFunction::Power { p: 3 }, &router, 0, &c).unwrap();
        assert_eq!(r.value, g_oracle(&vals.frequencies(), &GFunction::Power { p: 3 }).unwrap());
        assert!(r.stats.charged_rounds > 0);
    }

    #[test]
    fn wide_values_split_into_limbs() {
        let g = graph("path:3");
        let (setup, cfg) = setup_for(&g, 2);
        let xs = [u64::MAX as u128 * 3, 17, 1 << 90];
        let (total, _) = aggregate_wide(&g, &setup.tree, &xs, 1 << 100, &cfg).unwrap();
        assert_eq!(total, xs.iter().sum::<u128>());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn matches_oracle(n in 3usize..40, nulls in 0.0f64..0.6, universe in 1u64..20, seed in 0u64..1000, which in 0usize..4) {
            let g = generate(&format!("random-regular:{}:3:{seed}", n + n % 2).parse().unwrap()).unwrap();
            let mut rng = run_rng(seed, &[1]);
            let vals: Vec<Option<u64>> = (0..g.n()).map(|_| (!rng.gen_bool(nulls)).then(|| rng.gen_range(1..=universe))).collect();
            let vals = ValueAssignment::new(vals, universe).unwrap();
            let gfun = [GFunction::Distinct, GFunction::Power { p: 2 }, GFunction::Power { p: 3 }, GFunction::Entropy][which];
            let r = exact_g_sum(&g, &vals, &gfun, &Router::Tree, seed, &Constants::default()).unwrap();
            let freq = vals.frequencies();
            let singles = freq.iter().filter(|&(_, f)| f == 1).count();
            prop_assert_eq!(r.tokens as u64, 2 * freq.f0() - singles as u64);
            match (r.value, g_oracle(&freq, &gfun).unwrap()) {
                (GValue::Real(a), GValue::Real(b)) => prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b),
                (a, b) => prop_assert_eq!(a, b),
            }
        }
    }
}
