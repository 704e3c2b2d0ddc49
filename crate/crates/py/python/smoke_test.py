"""Smoke test for the amplifier extension module.

    pip install --no-build-isolation ./crates/py
    python crates/py/python/smoke_test.py
"""

import math
import tempfile
from pathlib import Path

import amplifier


def main():
    # Chain 0 -> 1 -> 2 in spread direction: 1 follows 0, 2 follows 1.
    g = amplifier.Graph([(1, 0), (2, 1), (2, 1), (0, 0)], 3)
    assert (g.user_count, g.edge_count) == (3, 2), g
    assert g.followers(0) == [1]
    assert g.neighborhood(0, 2) == [1, 2]
    assert g.spread_edges() == [(0, 1), (1, 2)]

    assert g.exact_influence(0, p=0.5) == 1.75
    mean, se = g.influence_spread(0, rounds=20000, seed=7, p=0.5)
    assert abs(mean - 1.75) < 4 * se, (mean, se)
    assert g.influence_spread(0, rounds=50, p=1.0) == (3.0, 0.0)
    assert g.exact_influence(0, probabilities=[1.0, 0.0]) == 2.0
    assert g.influence_spread(0, rounds=10, seed=3) == g.influence_spread(0, rounds=10, seed=3)

    scores = dict(g.importance_scores(0, 2))
    assert set(scores) == {1, 2}
    picks = g.softmax_sample(0, 2, 2, seed=1)
    assert sorted(picks) == [1, 2]

    assert amplifier.format_gain(amplifier.relative_gain(121.92, 140.43)) == "+15.18%"

    try:
        g.followers(9)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown user accepted")

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        users, edges, posts = amplifier.synth(tmp / "world", users=120, posts=30, seed=2)
        assert (users, posts) == (120, 30) and edges > 0
        texts = amplifier.read_post_texts(tmp / "world" / "posts.tsv")
        rows = amplifier.read_embeddings(tmp / "world" / "embeddings.txt", amplifier.CONTENT_DIM)
        assert len(texts) == len(rows) == 30
        assert all(len(r) == amplifier.CONTENT_DIM for r in rows)

        # What an external exporter would do: one row per post, in table order.
        out = tmp / "exported.txt"
        amplifier.write_embeddings(out, rows)
        back = amplifier.read_embeddings(out)
        assert all(math.isclose(a, b) for r, s in zip(rows, back) for a, b in zip(r, s))
        try:
            amplifier.read_embeddings(out, 16)
        except ValueError:
            pass
        else:
            raise AssertionError("dimension mismatch accepted")

    print("smoke test ok")


if __name__ == "__main__":
    main()
