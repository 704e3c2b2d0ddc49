//! Raw files through the preprocessing pipeline, and post splits.
//!
//! The fixture under `tests/fixtures/raw`, worked by hand with
//! `seed_top_k = 1` and `min_reposts_in_network = 2`:
//!
//! * p1 (by a, reposted by b c d) is the most reposted post, so the seed set is {a}.
//! * Round 1 adds the reposters of a's posts (b c d) and the authors of posts a
//!   reposted (b via p2, c via p7, d via p8): {a b c d}.
//! * Round 2 adds e (reposted p2) and h (reposted p7). f, g, x, y are never reached.
//! * h has reposted but never posted, so the activity filter drops it: {a b c d e}.
//! * Follow edges inside the set: b, c, d follow a; a, e follow b; a follows c.
//!   Spread reach: a -> b c d e, b -> a c d e, c -> a b d e, d and e reach nobody.
//! * p1 keeps b c d (3), p2 keeps a e (2). p7 keeps only a (h is gone), p8's
//!   creator d reaches nobody, p3's only reposter f is gone, p4 and p5 have
//!   creators outside the set, p6 has no reposts.

use std::collections::HashSet;
use std::path::Path;

use proptest::prelude::*;

use amplifier_core::dataio::{parse_raw, preprocess, split_posts, ParseOptions, PreprocessParams, RawCorpus, RawPaths, SplitRatios};
use amplifier_core::rng;
use rand::seq::SliceRandom;

fn fixture() -> RawCorpus {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/raw");
    parse_raw(
        &RawPaths {
            content: dir.join("content.txt"),
            network: dir.join("network.txt"),
            interactions: dir.join("interactions.txt"),
        },
        &ParseOptions::default(),
    )
    .unwrap()
}

fn params(min_reposts_in_network: usize) -> PreprocessParams {
    PreprocessParams {
        seed_top_k: 1,
        min_reposts_in_network,
        ..PreprocessParams::default()
    }
}

#[test]
fn fixture_parses_cleanly() {
    let raw = fixture();
    assert_eq!(raw.contents.len(), 8);
    assert_eq!(raw.follows.len(), 9);
    assert_eq!(raw.actions.len(), 20);
    for report in [&raw.malformed_content, &raw.malformed_network, &raw.malformed_interactions] {
        assert!(report.lines.is_empty());
    }
    assert_eq!(raw.malformed_interactions.total, 20);
}

#[test]
fn hand_computed_survivors() {
    let p = preprocess(&fixture(), &params(2)).unwrap();
    assert_eq!(p.user_ids, ["a", "b", "c", "d", "e"]);
    assert_eq!(p.post_ids, ["p1", "p2"]);

    let edges: HashSet<(u32, u32)> = p.graph.follow_edges().collect();
    assert_eq!(edges, HashSet::from([(1, 0), (2, 0), (3, 0), (0, 1), (4, 1), (0, 2)]));

    assert_eq!(p.posts[0].creator, 0);
    assert_eq!(p.posts[0].text, "Morning run along the river");
    assert_eq!(p.posts[0].reposters, [1, 2, 3]);
    assert_eq!(p.posts[1].creator, 1);
    assert_eq!(p.posts[1].reposters, [0, 4]);
}

#[test]
fn looser_repost_filter_keeps_more() {
    let p = preprocess(&fixture(), &params(1)).unwrap();
    assert_eq!(p.post_ids, ["p1", "p2", "p7"]);
    assert_eq!(p.posts[2].reposters, [0]);
}

#[test]
fn row_order_does_not_matter() {
    let raw = fixture();
    let expected = preprocess(&raw, &params(2)).unwrap();
    for seed in 0..10 {
        let mut r = rng::seeded(seed);
        let mut shuffled = raw.clone();
        shuffled.contents.shuffle(&mut r);
        shuffled.follows.shuffle(&mut r);
        shuffled.actions.shuffle(&mut r);
        assert_eq!(preprocess(&shuffled, &params(2)).unwrap(), expected);
    }
}

#[test]
fn every_kept_post_meets_the_filter() {
    let p = preprocess(&fixture(), &params(2)).unwrap();
    for post in &p.posts {
        let reach = p.graph.reachable(post.creator).unwrap();
        let inside = post.reposters.iter().filter(|u| reach.contains(u)).count();
        assert!(inside >= 2);
    }
}

#[test]
fn ten_posts_split_six_two_two() {
    let ids: Vec<u32> = (0..10).collect();
    let s = split_posts(&ids, &SplitRatios::default(), &mut rng::seeded(3)).unwrap();
    assert_eq!((s.train.len(), s.val.len(), s.test.len()), (6, 2, 2));
}

proptest! {
    #[test]
    fn split_is_a_partition(n in 3usize..300, seed in any::<u64>(), train in 0.0f64..1.0, frac in 0.0f64..1.0) {
        let val = (1.0 - train) * frac;
        let ratios = SplitRatios { train, val, test: 1.0 - train - val };
        let ids: Vec<u32> = (0..n as u32).collect();
        let s = split_posts(&ids, &ratios, &mut rng::seeded(seed)).unwrap();
        let mut all: Vec<u32> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(&all, &ids);
        for (got, ratio) in [(s.train.len(), ratios.train), (s.val.len(), ratios.val), (s.test.len(), ratios.test)] {
            prop_assert!((got as f64 - ratio * n as f64).abs() <= 1.0 + 1e-9);
        }
        let again = split_posts(&ids, &ratios, &mut rng::seeded(seed)).unwrap();
        prop_assert_eq!(s, again);
    }
}
