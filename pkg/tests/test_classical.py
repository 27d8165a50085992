import numpy as np
import pytest

from qparrondo.classical import (
    CapitalDistribution,
    ClassicalParams,
    classical_step,
    expected_gain_exact,
    monte_carlo,
    win_probability,
)

P = ClassicalParams()


def brute_force_mean(strategy: str, steps: int, start: int = 0, eps: float = 0.005) -> list[float]:
    """Enumerate every win/loss path explicitly (small step counts only)."""
    paths = {(start,): 1.0}
    means = []
    for k in range(steps):
        game = strategy[k % len(strategy)]
        nxt = {}
        for path, prob in paths.items():
            c = path[-1]
            if game == "A":
                p = 0.5 - eps
            else:
                p = (0.1 - eps) if c % 3 == 0 else (0.75 - eps)
            nxt[path + (c + 1,)] = prob * p
            nxt[path + (c - 1,)] = prob * (1 - p)
        paths = nxt
        means.append(sum(prob * (path[-1] - start) for path, prob in paths.items()))
    return means


class TestStep:
    def test_game_a(self):
        d = classical_step(CapitalDistribution.point(0), "A", P).as_dict()
        assert d == pytest.approx({1: 0.495, -1: 0.505}, abs=1e-15)

    def test_game_b_on_multiple(self):
        d = classical_step(CapitalDistribution.point(0), "B", P).as_dict()
        assert d == pytest.approx({1: 0.095, -1: 0.905}, abs=1e-15)

    def test_game_b_off_multiple(self):
        d = classical_step(CapitalDistribution.point(1), "B", P).as_dict()
        assert d == pytest.approx({2: 0.745, 0: 0.255}, abs=1e-15)

    def test_negative_multiples(self):
        np.testing.assert_allclose(win_probability("B", np.array([-3, -2, -1, 0]), P),
                                   [0.095, 0.745, 0.745, 0.095])

    def test_conservation_and_support(self):
        dist = CapitalDistribution.point(4)
        for k in range(1, 61):
            dist = classical_step(dist, "ABBAB"[k % 5], P)
            assert dist.probs.sum() == pytest.approx(1.0, abs=1e-12)
            assert np.all(dist.probs >= 0)
            support = {c for c, p in dist.as_dict().items()}
            assert all(abs(c - 4) <= k and (c - 4 - k) % 2 == 0 for c in support)

    def test_bad_epsilon(self):
        with pytest.raises(ValueError):
            ClassicalParams(epsilon=0.2)


class TestExact:
    def test_single_game_a(self):
        assert expected_gain_exact("A", 1).gains[0] == pytest.approx(-0.01, abs=1e-12)

    def test_a_drift(self):
        series = expected_gain_exact("A", 100)
        np.testing.assert_allclose(series.gains, -0.01 * np.arange(1, 101), atol=1e-12)

    @pytest.mark.parametrize("strategy", ["B", "ABBAB", "AABB", "BA"])
    def test_matches_path_enumeration(self, strategy):
        want = brute_force_mean(strategy, 14, start=2)
        got = expected_gain_exact(strategy, 14, initial_capital=2).gains
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_parrondo_effect(self):
        finals = {s: expected_gain_exact(s, 500).final_gain for s in ("A", "B", "ABBAB", "AABB")}
        assert finals["A"] < 0 and finals["B"] < 0
        assert finals["ABBAB"] > 0 and finals["AABB"] > 0


class TestMonteCarlo:
    def test_single_trial_is_a_walk(self):
        s1 = monte_carlo("ABBAB", 50, 1, seed=3)
        s2 = monte_carlo("ABBAB", 50, 1, seed=3)
        np.testing.assert_array_equal(s1.gains, s2.gains)
        steps = np.diff(np.concatenate([[0], s1.gains]))
        assert set(np.unique(steps)) <= {-1.0, 1.0}
        assert np.all(s1.std_errors == 0)

    def test_seed_changes_result(self):
        a = monte_carlo("A", 30, 1000, seed=1).gains
        b = monte_carlo("A", 30, 1000, seed=2).gains
        assert not np.array_equal(a, b)

    def test_block_split_is_deterministic(self, monkeypatch):
        import qparrondo.classical as c

        a = monte_carlo("AB", 20, 2500, seed=9)
        monkeypatch.setattr(c, "MC_BLOCK", 1000)
        b = monte_carlo("AB", 20, 2500, seed=9)
        c2 = monte_carlo("AB", 20, 2500, seed=9)
        np.testing.assert_array_equal(b.gains, c2.gains)
        assert a.metadata["block_size"] != b.metadata["block_size"]

    def test_a_agrees_with_drift(self):
        mc = monte_carlo("A", 100, 100_000, seed=42)
        assert abs(mc.final_gain - (-1.0)) <= 3 * mc.std_errors[-1]

    def test_error_shrinks_like_inverse_sqrt(self):
        exact = expected_gain_exact("ABBAB", 100).final_gain
        errs = []
        for trials in (1_000, 10_000, 100_000):
            mc = monte_carlo("ABBAB", 100, trials, seed=5)
            assert abs(mc.final_gain - exact) <= 3.5 * mc.std_errors[-1]
            errs.append(mc.std_errors[-1])
        # each tenfold increase in trials cuts the standard error by about sqrt(10)
        for big, small in zip(errs, errs[1:]):
            assert big / small == pytest.approx(np.sqrt(10), rel=0.15)
