//! Statistical checks on the synthetic generator's repost process.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use amplifier_core::dataio::synthetic::{generate_synthetic, repost_probability, SyntheticCorpus, SyntheticParams};

fn params(affinity_weight: f64) -> SyntheticParams {
    SyntheticParams {
        users: 600,
        posts: 400,
        base_repost: 0.05,
        affinity_weight,
        min_reposts: 0,
        seed: 11,
        ..SyntheticParams::default()
    }
}

/// Direct followers of each creator, as a 2x2 table
/// `[same topic, other topic] x [reposted, not reposted]`. Without affinity
/// every exposure has the same repost probability, however many there are.
fn first_hop_table(s: &SyntheticCorpus) -> [[f64; 2]; 2] {
    let mut table = [[0.0; 2]; 2];
    for (post, &topic) in s.corpus.posts.iter().zip(&s.truth.post_topics) {
        for &w in s.corpus.graph.followers(post.creator) {
            let row = usize::from(s.truth.user_topics[w as usize] != topic);
            let col = usize::from(!post.reposted_by(w));
            table[row][col] += 1.0;
        }
    }
    table
}

fn independence_p_value(t: [[f64; 2]; 2]) -> f64 {
    let total: f64 = t.iter().flatten().sum();
    let mut stat = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let expected = (t[i][0] + t[i][1]) * (t[0][j] + t[1][j]) / total;
            stat += (t[i][j] - expected).powi(2) / expected;
        }
    }
    ChiSquared::new(1.0).unwrap().sf(stat)
}

#[test]
fn reposts_ignore_topic_without_affinity() {
    let s = generate_synthetic(&params(0.0)).unwrap();
    let table = first_hop_table(&s);
    assert!(table.iter().flatten().all(|&c| c >= 5.0), "{table:?}");
    let p = independence_p_value(table);
    assert!(p > 0.001, "topic match and reposting look dependent: p = {p}, {table:?}");
}

#[test]
fn reposts_follow_topic_with_affinity() {
    let s = generate_synthetic(&params(0.5)).unwrap();
    let table = first_hop_table(&s);
    let p = independence_p_value(table);
    assert!(p < 1e-6, "no topic effect detected: p = {p}, {table:?}");
    let same = table[0][0] / (table[0][0] + table[0][1]);
    let other = table[1][0] / (table[1][0] + table[1][1]);
    assert!(same > other);
}

#[test]
fn repost_counts_match_the_model_on_a_forest() {
    // One follow each and no follow-backs: every user is exposed at most once,
    // by the one account they follow, so each exposure is a single Bernoulli draw.
    let params = SyntheticParams {
        mean_follows: 1,
        reciprocity: 0.0,
        ..params(0.5)
    };
    let s = generate_synthetic(&params).unwrap();
    let g = &s.corpus.graph;
    assert!((0..g.user_count() as u32).all(|u| g.following_count(u) <= 1));
    let (mut expected, mut variance, mut observed) = (0.0, 0.0, 0.0);
    for (post, &topic) in s.corpus.posts.iter().zip(&s.truth.post_topics) {
        for v in std::iter::once(post.creator).chain(post.reposters.iter().copied()) {
            for &w in g.followers(v).iter().filter(|&&w| w != post.creator) {
                let p = repost_probability(&params, &s.truth.interests, v, w, topic);
                expected += p;
                variance += p * (1.0 - p);
                observed += f64::from(u8::from(post.reposted_by(w)));
            }
        }
    }
    assert!(expected > 200.0, "too few exposures: {expected}");
    let z = (observed - expected) / variance.sqrt();
    assert!(z.abs() < 4.0, "observed {observed}, expected {expected:.1}, z = {z:.2}");
}

#[test]
fn default_world_shape() {
    let s = generate_synthetic(&SyntheticParams::default()).unwrap();
    let c = &s.corpus;
    assert_eq!(c.graph.user_count(), 1000);
    assert_eq!(c.posts.len(), 300);
    assert!(c.posts.iter().all(|p| p.repost_count() >= 1));
    assert_eq!((c.splits.train.len(), c.splits.val.len(), c.splits.test.len()), (180, 60, 60));
    c.validate().unwrap();
}
