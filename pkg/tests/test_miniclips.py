import numpy as np
import pytest

from visact.errors import (
    DimensionMismatch,
    EmptyActionList,
    FormatError,
    TooFewFrames,
    ZeroVariance,
)
from visact.miniclips import (
    Frame,
    Miniclip,
    filter_static,
    frame_path,
    motion_score,
    pearson_2d,
    read_pgm,
    segment,
    write_pgm,
)
from visact.synthetic import moving_frames, static_frames


def frame_of(rows):
    arr = np.asarray(rows, dtype=np.uint8)
    return Frame(width=arr.shape[1], height=arr.shape[0], pixels=arr)


class TestSegment:
    def test_three_actions_one_clip(self):
        clips = segment("v", 600.0, [("a", 100.0), ("b", 110.0), ("c", 120.0)])
        assert len(clips) == 1
        assert (clips[0].start_s, clips[0].end_s) == (85.0, 135.0)
        assert clips[0].action_ids == ("a", "b", "c")

    def test_clamped_at_zero(self):
        [clip] = segment("v", 600.0, [("a", 5.0)])
        assert (clip.start_s, clip.end_s) == (0.0, 20.0)

    def test_core_cap_splits_groups(self):
        # greedy rule trace: {0, 30} fits (span 30 <= 60); 65 opens a new
        # group since 65 - 0 > 60; 130 - 65 = 65 > 60 splits again
        clips = segment("v", 600.0, [("a", 0.0), ("b", 30.0), ("c", 65.0), ("d", 130.0)])
        assert [(c.start_s, c.end_s) for c in clips] == [(0.0, 45.0), (50.0, 80.0), (115.0, 145.0)]
        assert [c.action_ids for c in clips] == [("a", "b"), ("c",), ("d",)]

    def test_empty_action_list(self):
        with pytest.raises(EmptyActionList):
            segment("v", 600.0, [])

    def test_actions_partition_and_spans_fuzz(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            n = int(rng.integers(1, 40))
            times = np.sort(rng.uniform(0, 1800, n))
            actions = [(f"a{i}", float(t)) for i, t in enumerate(times)]
            clips = segment("v", 1800.0, actions)
            seen = [aid for c in clips for aid in c.action_ids]
            assert sorted(seen) == sorted(a for a, _ in actions)
            assert len(seen) == len(set(seen))
            by_id = dict(actions)
            for c in clips:
                group_times = [by_id[a] for a in c.action_ids]
                assert max(group_times) - min(group_times) <= 60.0 + 1e-9
                assert c.end_s - c.start_s <= 90.0 + 1e-9
                assert all(c.start_s <= t <= c.end_s for t in group_times)


class TestPearson:
    def test_self_correlation(self):
        f = frame_of([[0, 10], [20, 30]])
        assert pearson_2d(f, f) == pytest.approx(1.0)

    def test_negation(self):
        a = frame_of([[0, 10], [20, 30]])
        b = frame_of(255 - a.pixels)
        assert pearson_2d(a, b) == pytest.approx(-1.0)

    def test_hand_computed_08(self):
        a = frame_of([[0, 1], [2, 3]])
        b = frame_of([[0, 2], [1, 3]])
        assert pearson_2d(a, b) == pytest.approx(0.8, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            pearson_2d(frame_of([[0, 1], [2, 3]]), frame_of([[0, 1, 2], [3, 4, 5]]))

    def test_zero_variance(self):
        const = frame_of([[7, 7], [7, 7]])
        live = frame_of([[0, 1], [2, 3]])
        with pytest.raises(ZeroVariance):
            pearson_2d(const, live)

    def test_symmetry_and_bound_fuzz(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            h, w = int(rng.integers(2, 12)), int(rng.integers(2, 12))
            a = frame_of(rng.integers(0, 256, (h, w)))
            b = frame_of(rng.integers(0, 256, (h, w)))
            r = pearson_2d(a, b)
            assert r == pytest.approx(pearson_2d(b, a))
            assert abs(r) <= 1.0 + 1e-12

    def test_affine_invariance(self):
        rng = np.random.default_rng(10)
        a = rng.integers(0, 64, (6, 6)).astype(np.float64)
        b = rng.integers(0, 64, (6, 6)).astype(np.float64)
        r = pearson_2d(a, b)
        assert pearson_2d(2.5 * a + 11.0, b) == pytest.approx(r, abs=1e-9)

    def test_matches_numpy_oracle(self):
        rng = np.random.default_rng(123)
        for _ in range(100):
            a = rng.integers(0, 256, (8, 8))
            b = rng.integers(0, 256, (8, 8))
            expected = np.corrcoef(a.ravel(), b.ravel())[0, 1]
            assert abs(pearson_2d(frame_of(a), frame_of(b)) - expected) < 1e-9


class TestMotionScore:
    def test_identical_frames(self):
        base = frame_of([[0, 50], [100, 200]])
        assert motion_score([base] * 500, stride=100) == pytest.approx(1.0)

    def test_stride_sampling_matches_oracle(self):
        frames = moving_frames(seed=1, count=250)
        got = motion_score(frames, stride=100)
        # oracle: independent median over numpy corrcoef of the strided frames
        sampled = frames[::100]
        assert len(sampled) == 3
        rs = [
            np.corrcoef(a.pixels.ravel(), b.pixels.ravel())[0, 1]
            for a, b in zip(sampled, sampled[1:])
        ]
        assert got == pytest.approx(float(np.median(rs)), abs=1e-12)

    def test_even_pair_count_uses_middle_mean(self):
        frames = moving_frames(seed=2, count=6)
        got = motion_score(frames, stride=1)
        rs = [
            np.corrcoef(a.pixels.ravel(), b.pixels.ravel())[0, 1]
            for a, b in zip(frames, frames[1:])
        ]
        assert len(rs) == 5  # odd; extend to even by dropping one frame
        got_even = motion_score(frames[:5], stride=1)
        rs_even = rs[:4]
        assert got_even == pytest.approx(float(np.median(rs_even)), abs=1e-12)
        assert got == pytest.approx(float(np.median(rs)), abs=1e-12)

    def test_constant_pairs_skipped(self):
        live = moving_frames(seed=3, count=2)
        const = frame_of(np.full((8, 8), 9))
        frames = [live[0], live[1], const, const]
        score = motion_score(frames, stride=1)
        # only the one live pair contributes; constant pairs are skipped
        expected = np.corrcoef(live[0].pixels.ravel(), live[1].pixels.ravel())[0, 1]
        assert score == pytest.approx(float(expected), abs=1e-12)

    def test_all_pairs_constant_raises(self):
        const = frame_of(np.full((8, 8), 9))
        with pytest.raises(TooFewFrames):
            motion_score([const, const, const], stride=1)

    def test_too_few_frames(self):
        with pytest.raises(TooFewFrames):
            motion_score(moving_frames(seed=4, count=99), stride=100)


class TestFilterStatic:
    def test_boundary(self):
        clips = [Miniclip("v", i, 0.0, 10.0, (f"a{i}",)) for i in range(3)]
        kept, dropped = filter_static(clips, [0.79, 0.80, 0.81], threshold=0.8)
        assert [c.index for c in kept] == [0, 1]
        assert [c.index for c in dropped] == [2]

    def test_empty(self):
        assert filter_static([], []) == ([], [])

    def test_partition_matches_bruteforce(self):
        rng = np.random.default_rng(20)
        clips = [Miniclip("v", i, 0.0, 10.0, (f"a{i}",)) for i in range(50)]
        scores = [float(s) for s in rng.uniform(0.5, 1.0, 50)]
        kept, dropped = filter_static(clips, scores)
        for clip, score in zip(clips, scores):
            assert (clip in dropped) == (score > 0.8)
        assert len(kept) + len(dropped) == 50


class TestPgm:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(6)
        f = frame_of(rng.integers(0, 256, (5, 7)))
        p = tmp_path / "frame_000000.pgm"
        write_pgm(p, f)
        again = read_pgm(p)
        assert again.width == 7 and again.height == 5
        assert np.array_equal(again.pixels, f.pixels)

    def test_header_comment_tolerated(self, tmp_path):
        p = tmp_path / "c.pgm"
        p.write_bytes(b"P5\n# made by hand\n2 2\n255\n" + bytes([0, 1, 2, 3]))
        f = read_pgm(p)
        assert f.pixels.tolist() == [[0, 1], [2, 3]]

    def test_truncated_body(self, tmp_path):
        p = tmp_path / "t.pgm"
        p.write_bytes(b"P5\n4 4\n255\n" + bytes(5))
        with pytest.raises(FormatError):
            read_pgm(p)

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "b.pgm"
        p.write_bytes(b"P2\n2 2\n255\n0 1 2 3")
        with pytest.raises(FormatError):
            read_pgm(p)

    def test_frame_name_convention(self):
        assert frame_path("d", 42).name == "frame_000042.pgm"

    def test_static_fixture_scores_high_moving_low(self):
        high = motion_score(static_frames(seed=8, count=4), stride=1)
        low = motion_score(moving_frames(seed=8, count=4), stride=1)
        assert high > 0.9
        assert low < 0.5
