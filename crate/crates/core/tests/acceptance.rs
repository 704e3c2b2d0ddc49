//! Acceptance checks, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`) so that the whole report is
//! printed even when a check fails. The process exits non-zero when a check
//! fails, unless it is listed in `KNOWN_UNATTAINABLE` with the exact failure
//! detail recorded there.

mod common;

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng as _;

use amplifier_core::cascade::{
    assign_probabilities, exact_influence, influence_spread, EdgeProbabilityMap, LearnedInputs, ProbabilityMode,
};
use amplifier_core::dataio::{parse_raw, preprocess, split_posts, EmbeddingTable, ParseOptions, PreprocessParams, RawPaths, SplitRatios};
use amplifier_core::estimator::{
    gradient_check, train, EdgeAttribution, EstimatorModel, InteractionInstance, ModelConfig, TrainConfig, CONTENT_DIM,
};
use amplifier_core::experiments::{evaluate_estimator, format_gain, relative_gain, write_report, Report};
use amplifier_core::graph::{ImportanceVector, SocialGraph, UserId};
use amplifier_core::llm::{IdentityModel, MockModel};
use amplifier_core::prompting::{classify_popularity, render_interest_summarization_prompt, render_prompt, PromptContext, StrategyKind};
use amplifier_core::rng;

use common::{bfs_reach, random_graph, world, world_config, World};

type Check = std::result::Result<String, String>;

/// Criteria that cannot pass as stated, with the exact failure detail each is
/// expected to produce. Anything else failing is a regression.
const KNOWN_UNATTAINABLE: &[(&str, &str)] = &[(
    "relative-gain arithmetic",
    "(137.75 - 121.92) / 121.92 = 12.9839% formats as +12.98%, expected +12.99%",
)];

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn ensure(ok: bool, detail: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(detail())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Expected spread by enumerating live-edge subsets, written independently of
/// the library's enumerator.
fn enumerate_spread(edges: &[(UserId, UserId, f64)], seed: UserId) -> f64 {
    let mut total = 0.0;
    for mask in 0u32..(1 << edges.len()) {
        let mut weight = 1.0;
        let mut live = Vec::new();
        for (i, &(s, t, p)) in edges.iter().enumerate() {
            if mask >> i & 1 == 1 {
                weight *= p;
                // bfs_reach walks (follower, followee) pairs.
                live.push((t, s));
            } else {
                weight *= 1.0 - p;
            }
        }
        total += weight * bfs_reach(&live, seed).len() as f64;
    }
    total
}

fn ic_oracle_agreement() -> Check {
    let start = Instant::now();
    let mut worst_z: f64 = 0.0;
    for g in 0..12u64 {
        let mut r = rng::seeded(1000 + g);
        let users = r.random_range(3..=7);
        let graph = random_graph(users, r.random_range(4..=12), 2000 + g);
        let spread_edges: Vec<(UserId, UserId)> = graph.spread_edges().collect();
        let probs: Vec<f64> = spread_edges.iter().map(|_| r.random_range(0.05..0.95)).collect();
        let map = EdgeProbabilityMap::new(ProbabilityMode::Learned, probs.clone()).map_err(err)?;
        let seed = r.random_range(0..users) as UserId;

        let exact = exact_influence(&graph, &map, seed).map_err(err)?;
        let listed: Vec<(UserId, UserId, f64)> = spread_edges.iter().zip(&probs).map(|(&(s, t), &p)| (s, t, p)).collect();
        let oracle = enumerate_spread(&listed, seed);
        ensure((exact - oracle).abs() < 1e-9, || format!("graph {g}: exact {exact} vs enumeration {oracle}"))?;

        let mc = influence_spread(&graph, &map, seed, 100_000, g).map_err(err)?;
        let se = mc.standard_error();
        let gap = (mc.spread - exact).abs();
        // A seed without audience has no variance and must match exactly.
        let z = if se > 0.0 { gap / se } else if gap < 1e-12 { 0.0 } else { f64::INFINITY };
        worst_z = worst_z.max(z);
        ensure(z <= 4.0, || format!("graph {g}: MC {} vs exact {exact}, {z:.2} SE", mc.spread))?;
    }

    // 0 -> 1 -> 2 along spread edges, so 1 follows 0 and 2 follows 1.
    let chain = SocialGraph::build(&[(1, 0), (2, 1)], 3).map_err(err)?;
    let map = EdgeProbabilityMap::fixed(&chain, 0.5).map_err(err)?;
    let chain_spread = influence_spread(&chain, &map, 0, 100_000, 7).map_err(err)?.spread;
    ensure((chain_spread - 1.75).abs() <= 0.02, || format!("chain spread {chain_spread}"))?;

    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("12 graphs, worst {worst_z:.2} SE; chain {chain_spread:.4}; {:.1}s", elapsed.as_secs_f64()))
}

fn degenerate_exactness() -> Check {
    for f in 0..100u64 {
        let mut r = rng::seeded(5000 + f);
        let users = r.random_range(2..=40);
        let edges = r.random_range(0..=3 * users);
        let graph = random_graph(users, edges, 6000 + f);
        let pairs: Vec<(UserId, UserId)> = graph.follow_edges().collect();
        let seed = r.random_range(0..users) as UserId;

        let none = influence_spread(&graph, &EdgeProbabilityMap::fixed(&graph, 0.0).map_err(err)?, seed, 25, f).map_err(err)?;
        ensure(none.spread == 1.0, || format!("fixture {f}: fixed(0) spread {}", none.spread))?;

        let reach = bfs_reach(&pairs, seed).len() as f64;
        let all = influence_spread(&graph, &EdgeProbabilityMap::fixed(&graph, 1.0).map_err(err)?, seed, 25, f).map_err(err)?;
        ensure(all.spread == reach, || format!("fixture {f}: fixed(1) spread {} vs reachable {reach}", all.spread))?;
    }
    Ok("100 fixtures".into())
}

fn random_table(rows: usize, seed: u64) -> EmbeddingTable {
    let mut r = rng::seeded(seed);
    let data = (0..rows * CONTENT_DIM).map(|_| r.random_range(-1.0..1.0)).collect();
    EmbeddingTable::new(CONTENT_DIM, data).expect("table")
}

fn gradient_fidelity() -> Check {
    let start = Instant::now();
    let users = 12;
    let table = random_table(6, 11);
    let mut worst: f64 = 0.0;
    for i in 0..20u64 {
        let model = EstimatorModel::new(ModelConfig::new(users), 100 + i).map_err(err)?;
        let mut r = rng::seeded(200 + i);
        let recipient = r.random_range(0..users) as UserId;
        let creator = (recipient + r.random_range(1..users) as UserId) % users as UserId;
        let instance = InteractionInstance {
            recipient,
            creator,
            post: r.random_range(0..6),
            label: f64::from(r.random_range(0..2u8)),
        };
        let report = gradient_check(&model, &instance, &table, 1e-5).map_err(err)?;
        worst = worst.max(report.max_relative_error);
        ensure(report.max_relative_error < 1e-4, || format!("instance {i}: {:?}", report.worst()))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("20 instances, max relative error {worst:.2e}, {:.1}s", elapsed.as_secs_f64()))
}

fn tiny_set_overfit() -> Check {
    let table = random_table(4, 21);
    let dataset: Vec<InteractionInstance> = (0..8u32)
        .map(|i| InteractionInstance {
            recipient: i % 4 + 1,
            creator: 0,
            post: i / 2,
            label: f64::from(i % 2),
        })
        .collect();
    let mut model = EstimatorModel::new(ModelConfig::new(5), 3).map_err(err)?;
    let config = TrainConfig {
        learning_rate: 1e-3,
        batch_size: 8,
        epochs: 200,
        ..TrainConfig::default()
    };
    let outcome = train(&mut model, &dataset, &table, &config).map_err(err)?;
    let last = *outcome.loss_history.last().unwrap();
    ensure(last < 0.01, || format!("final MSE {last}"))?;
    let epoch = outcome.loss_history.iter().position(|&l| l < 0.01).unwrap();
    Ok(format!("MSE {:.4} -> {last:.2e}, below 0.01 from epoch {epoch}", outcome.loss_history[0]))
}

fn learned_beats_fixed(w: &World, build_time: Duration) -> Check {
    let start = Instant::now();
    let corpus = &w.synthetic.corpus;
    let modes = ProbabilityMode::standard_sweep();
    let report = evaluate_estimator(corpus, &w.model, &modes, 20, 0, EdgeAttribution::Creator, 0).map_err(err)?;
    print!("{}", report.text());
    ensure(report.posts >= 50, || format!("only {} test posts", report.posts))?;

    let learned = report.row(ProbabilityMode::Learned).unwrap().f1;
    let best_other = report
        .rows
        .iter()
        .filter(|r| r.mode != ProbabilityMode::Learned)
        .max_by(|a, b| a.f1.total_cmp(&b.f1))
        .unwrap();
    ensure(learned - best_other.f1 >= 0.03, || {
        format!("learned F1 {learned:.4} vs {} {:.4}", best_other.mode, best_other.f1)
    })?;

    let sweep: Vec<_> = report.rows.iter().filter(|r| matches!(r.mode, ProbabilityMode::Fixed(_))).collect();
    for pair in sweep.windows(2) {
        ensure(pair[1].recall >= pair[0].recall, || format!("recall drops from {} to {}", pair[0].mode, pair[1].mode))?;
        ensure(pair[1].precision <= pair[0].precision, || {
            format!("precision rises from {} to {}", pair[0].mode, pair[1].mode)
        })?;
    }
    let elapsed = build_time + start.elapsed();
    ensure(elapsed < Duration::from_secs(600), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "learned F1 {learned:.4}, best other {} {:.4} (margin {:+.4}); {} posts; {:.1}s including corpus and training",
        best_other.mode,
        best_other.f1,
        learned - best_other.f1,
        report.posts,
        elapsed.as_secs_f64()
    ))
}

fn relative_gain_arithmetic() -> Check {
    let mut failures = Vec::new();
    let mut passed = Vec::new();
    for (new, expected) in [(140.43, "+15.18%"), (137.75, "+12.99%")] {
        let got = format_gain(relative_gain(121.92, new));
        // Independent evaluation of the formula.
        let raw = 100.0 * (new - 121.92) / 121.92;
        if format!("{raw:+.2}%") != got {
            failures.push(format!("{new}: library {got} disagrees with direct formula {raw:+.2}%"));
        } else if got == expected {
            passed.push(format!("{new} -> {got}"));
        } else {
            failures.push(format!("({new} - 121.92) / 121.92 = {raw:.4}% formats as {got}, expected {expected}"));
        }
    }
    if failures.is_empty() {
        Ok(passed.join(", "))
    } else {
        Err(failures.join("; "))
    }
}

fn paired_seed_identity(w: &World) -> Check {
    let identity = w.harness(world_config(), Box::new(IdentityModel::new(5)));
    let reports = identity.run_strategy_eval().map_err(err)?;
    for r in &reports {
        ensure(r.gain_percent == 0.0 && r.gain() == "+0.00%", || format!("identity strategy {} gain {}", r.strategy, r.gain()))?;
        for p in &r.records {
            ensure(p.revised_spread == p.original_spread, || format!("strategy {} post {}", r.strategy, p.post_id))?;
        }
    }

    // The harness' original spreads equal a direct simulation under the documented per-post seed.
    let config = world_config();
    let corpus = &w.synthetic.corpus;
    let originals = identity.original_spreads().map_err(err)?;
    for post in identity.eval_posts().into_iter().take(5) {
        let learned = LearnedInputs {
            model: &w.model,
            creator: post.creator,
            content_embedding: corpus.embedding(post.id).map_err(err)?,
            attribution: config.attribution,
        };
        let probs = assign_probabilities(ProbabilityMode::Learned, &corpus.graph, Some(learned)).map_err(err)?;
        let seed = rng::derive_seed(config.base_seed, &[post.id as u64]);
        let direct = influence_spread(&corpus.graph, &probs, post.creator, config.rounds, seed).map_err(err)?.spread;
        ensure(direct == originals[&post.id], || format!("post {}: {direct} vs {}", post.id, originals[&post.id]))?;
    }

    let mut outputs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(err)?;
        let mock = w.harness(world_config(), Box::new(MockModel::new(5)));
        let reports = mock.run_strategy_eval().map_err(err)?;
        let files = write_report(dir.path(), reports.as_slice()).map_err(err)?;
        let bytes: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(f).unwrap()).collect();
        outputs.push((reports.as_slice().text(), bytes));
    }
    ensure(outputs[0] == outputs[1], || "mock runs differ".into())?;
    Ok(format!("{} strategies at +0.00% under identity; mock reports byte-identical", reports.len()))
}

fn oracle_lift(w: &World) -> Check {
    let mut config = world_config();
    config.strategies = vec![
        StrategyKind::NeighborPostsRandom,
        StrategyKind::NeighborPostsInfluential,
        StrategyKind::InterestUniform,
        StrategyKind::InterestScored,
    ];
    let h = w.oracle_harness(config);
    let reports = h.run_strategy_eval().map_err(err)?;
    print!("{}", reports.as_slice().text());
    let gains: Vec<String> = reports.iter().map(|r| format!("{} {}", r.strategy, r.gain())).collect();
    for r in &reports {
        ensure(r.gain_percent > 0.0, || format!("strategy {} gain {}", r.strategy, r.gain()))?;
    }
    let singular = h.run_singular_user_eval().map_err(err)?;
    let neighbors: usize = singular.records.iter().map(|r| r.neighbors.len()).sum();
    ensure(singular.records.len() == 20, || format!("only {} posts had eligible followers", singular.records.len()))?;
    ensure(singular.success_rate >= 0.8, || format!("singular success rate {:.2}", singular.success_rate))?;
    Ok(format!(
        "{}; singular success {:.2} over 20 posts ({neighbors} follower revisions)",
        gains.join(", "),
        singular.success_rate
    ))
}

fn importance_laws() -> Check {
    let mut checked = 0;
    let mut g = 0u64;
    while checked < 50 {
        g += 1;
        let mut r = rng::seeded(9000 + g);
        let users = r.random_range(5..=60);
        let graph = random_graph(users, r.random_range(users..=4 * users), 9500 + g);
        let creator = r.random_range(0..users) as UserId;
        let pairs: Vec<(UserId, UserId)> = graph.follow_edges().collect();
        let mut followers_of: HashMap<UserId, usize> = HashMap::new();
        for &(_, followee) in &pairs {
            *followers_of.entry(followee).or_default() += 1;
        }
        let audience: Vec<UserId> = pairs.iter().filter(|p| p.1 == creator).map(|p| p.0).collect::<HashSet<_>>().into_iter().collect();
        if audience.is_empty() {
            continue;
        }
        let expected = audience
            .iter()
            .copied()
            .max_by(|a, b| followers_of.get(a).cmp(&followers_of.get(b)).then(b.cmp(a)))
            .unwrap();
        let got = graph.importance_scores(creator, 1).map_err(err)?.argmax();
        ensure(got == Some(expected), || format!("graph {g}: argmax {got:?}, most-followed follower {expected}"))?;
        checked += 1;
    }

    let scores = [0.0, 0.5, 1.0, 2.0, 0.25];
    let vector = ImportanceVector::new(0, 1, scores.iter().enumerate().map(|(i, &s)| (i as UserId + 1, s)).collect()).map_err(err)?;
    let z: f64 = scores.iter().map(|s| s.exp()).sum();
    let draws = 3000;
    let mut counts = [0usize; 5];
    for d in 0..draws {
        let pick = vector.softmax_sample(1, &mut rng::seeded(d)).map_err(err)?[0];
        counts[pick as usize - 1] += 1;
    }
    let mut worst: f64 = 0.0;
    for (i, &s) in scores.iter().enumerate() {
        let p = s.exp() / z;
        let mean = draws as f64 * p;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        let dev = (counts[i] as f64 - mean).abs() / sd;
        worst = worst.max(dev);
        ensure(dev <= 3.0, || format!("score {s}: {} draws, expected {mean:.1} +- {sd:.1}", counts[i]))?;
    }
    Ok(format!("argmax on 50 graphs; softmax counts {counts:?}, worst {worst:.2} sigma"))
}

fn prompt_golden_files() -> Check {
    let dir = fixtures().join("prompts");
    let post = "Our bakery opens at 7 tomorrow";
    let fewshot = PromptContext::FewShot {
        popular: vec!["Free concert in the park tonight!".into(), "We won the cup".into()],
        unpopular: vec!["meh".into(), "Tuesday again".into()],
    };
    let neighbor = PromptContext::NeighborPosts(vec![
        "New trail map is out".into(),
        "Rain all week \"again\"".into(),
        "Best tacos in town".into(),
    ]);
    let interest = PromptContext::Interest("hiking; food; weather".into());
    let mut renders = Vec::new();
    for kind in StrategyKind::ALL {
        let (input, context) = match kind {
            StrategyKind::ZeroShot => ("hello", &PromptContext::None),
            StrategyKind::FewShotFixed | StrategyKind::FewShotSimilar => (post, &fewshot),
            StrategyKind::InterestUniform | StrategyKind::InterestScored => (post, &interest),
            _ => (post, &neighbor),
        };
        renders.push((format!("{}.txt", kind.id()), render_prompt(kind, input, context).map_err(err)?));
    }
    let posts: Vec<String> = (1..=10).map(|i| format!("post {i}")).collect();
    renders.push(("interest_summarization.txt".into(), render_interest_summarization_prompt(&posts).map_err(err)?));
    for (name, got) in &renders {
        let want = std::fs::read(dir.join(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure(got.as_bytes() == want.as_slice(), || format!("{name} differs from its fixture"))?;
    }

    let counts: Vec<(u32, usize)> = (1..=10).map(|c| (c as u32, c)).collect();
    let pools = classify_popularity(&counts).map_err(err)?;
    let popular: HashSet<u32> = pools.popular.iter().copied().collect();
    let unpopular: HashSet<u32> = pools.unpopular.iter().copied().collect();
    ensure(popular == HashSet::from([10, 9]) && unpopular == HashSet::from([1, 2]), || format!("pools {pools:?}"))?;
    Ok(format!("{} fixtures match; pools {{10,9}}/{{1,2}}", renders.len()))
}

fn preprocessing_fixture() -> Check {
    let raw_dir = fixtures().join("raw");
    let raw = parse_raw(
        &RawPaths {
            content: raw_dir.join("content.txt"),
            network: raw_dir.join("network.txt"),
            interactions: raw_dir.join("interactions.txt"),
        },
        &ParseOptions::default(),
    )
    .map_err(err)?;
    let params = PreprocessParams {
        seed_top_k: 1,
        min_reposts_in_network: 2,
        ..PreprocessParams::default()
    };
    let prepared = preprocess(&raw, &params).map_err(err)?;
    // Worked by hand in the fixture notes of tests/preprocessing.rs.
    ensure(prepared.user_ids == ["a", "b", "c", "d", "e"], || format!("users {:?}", prepared.user_ids))?;
    ensure(prepared.post_ids == ["p1", "p2"], || format!("posts {:?}", prepared.post_ids))?;

    let ids: Vec<u32> = (0..10).collect();
    let splits = split_posts(&ids, &SplitRatios::default(), &mut rng::seeded(0)).map_err(err)?;
    let sizes = (splits.train.len(), splits.val.len(), splits.test.len());
    ensure(sizes == (6, 2, 2), || format!("split sizes {sizes:?}"))?;
    Ok("users a-e, posts p1 p2; split 6/2/2".into())
}

fn main() -> ExitCode {
    let mut results: Vec<(&str, Check)> = vec![
        ("IC oracle agreement", ic_oracle_agreement()),
        ("degenerate exactness", degenerate_exactness()),
        ("gradient fidelity", gradient_fidelity()),
        ("tiny-set overfit", tiny_set_overfit()),
    ];
    let start = Instant::now();
    let w = world();
    let build_time = start.elapsed();
    results.push(("learned beats fixed", learned_beats_fixed(&w, build_time)));
    results.push(("relative-gain arithmetic", relative_gain_arithmetic()));
    results.push(("paired-seed identity", paired_seed_identity(&w)));
    results.push(("oracle-reviser lift", oracle_lift(&w)));
    results.push(("importance and sampling laws", importance_laws()));
    results.push(("prompt golden files", prompt_golden_files()));
    results.push(("preprocessing fixture", preprocessing_fixture()));

    let mut unexpected = 0;
    println!();
    for (name, result) in &results {
        match result {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                let known = KNOWN_UNATTAINABLE.iter().any(|(n, d)| n == name && d == detail);
                if known {
                    println!("FAIL  {name}: {detail} (known, see README)");
                } else {
                    unexpected += 1;
                    println!("FAIL  {name}: {detail}");
                }
            }
        }
    }
    for (name, detail) in KNOWN_UNATTAINABLE {
        let matched = results.iter().any(|(n, r)| n == name && r.as_ref().err().map(String::as_str) == Some(*detail));
        if !matched {
            unexpected += 1;
            println!("NOTE  {name}: no longer fails as recorded ({detail})");
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
