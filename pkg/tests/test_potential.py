import numpy as np
import pytest

from gm_torus import GridSpec, PotentialSpec, SpecError, realize
from gm_torus.potential import parse_trig_terms, wrapped_distance
from gm_torus.spectral_field import dump_field


def test_zero_and_constant(grid128):
    assert np.all(realize(PotentialSpec.zero(), grid128).values == 0.0)
    assert np.all(realize(PotentialSpec.constant(3.5), grid128).values == 3.5)


def test_single_cosine(grid128):
    (x,) = grid128.coordinates()
    W = realize(PotentialSpec.trig([(1, 1.0, 0.0)]), grid128)
    assert np.max(np.abs(W.values - np.cos(2 * np.pi * x))) < 1e-15


def test_trig_restricts_exactly_from_refined_grid():
    spec = PotentialSpec.trig([((1, 0), 1.0, 0.2), ((2, -3), 0.0, 0.5)])
    coarse = realize(spec, GridSpec(2, 16))
    fine = realize(spec, GridSpec(2, 32))
    assert np.allclose(fine.values[::2, ::2], coarse.values, atol=2e-15, rtol=0)
    assert np.array_equal(realize(spec, GridSpec(2, 16)).values, coarse.values)


def test_trig_rejects_nyquist_and_dimension():
    with pytest.raises(SpecError):
        realize(PotentialSpec.trig([(4, 1.0, 0.0)]), GridSpec(1, 8))
    with pytest.raises(SpecError):
        realize(PotentialSpec.trig([((1, 0), 1.0, 0.0)]), GridSpec(1, 16))


def test_unknown_kind():
    with pytest.raises(SpecError):
        PotentialSpec("quartic")


class TestWrappedQuadratic:
    def test_values_and_minimum_at_center(self):
        g = GridSpec(1, 64, 20.0)
        W = realize(PotentialSpec.wrapped_quadratic(2.0), g)
        (x,) = g.coordinates()
        assert np.allclose(W.values, 0.5 * 4.0 * (x - 10.0) ** 2)
        assert W.values[32] == 0.0

    def test_period_too_short_for_tail(self):
        with pytest.raises(SpecError):
            realize(PotentialSpec.wrapped_quadratic(1.0), GridSpec(1, 64, 10.0))
        # larger hbar widens the Gaussian, so the same period fails
        with pytest.raises(SpecError):
            realize(PotentialSpec.wrapped_quadratic(1.0), GridSpec(1, 64, 20.0), hbar=4.0)

    def test_wrapped_distance_is_periodic(self):
        g = GridSpec(2, 16, 4.0)
        (dx, dy) = wrapped_distance(g, (0.5, 3.5))
        assert np.max(np.abs(dx)) <= 2.0 and np.max(np.abs(dy)) <= 2.0
        assert dx[2, 0] == 0.0 and dx[0, 0] == -0.5 and dy[0, 14] == 0.0 and dy[0, 0] == 0.5


class TestSamples:
    def test_round_trip(self, tmp_path, trig_W):
        dump_field(trig_W, tmp_path / "W.csv")
        W = realize(PotentialSpec.samples(tmp_path / "W.csv"), trig_W.grid)
        assert np.array_equal(W.values, trig_W.values)

    def test_grid_mismatch(self, tmp_path, trig_W):
        dump_field(trig_W, tmp_path / "W.csv")
        with pytest.raises(SpecError):
            realize(PotentialSpec.samples(tmp_path / "W.csv"), GridSpec(1, 64))

    def test_missing_file(self, tmp_path):
        with pytest.raises(SpecError):
            realize(PotentialSpec.samples(tmp_path / "nope.csv"), GridSpec(1, 64))


def test_parse_trig_terms():
    terms = parse_trig_terms("1:1.0:0; 2:0:0.3", 1)
    assert [(t.k, t.cos, t.sin) for t in terms] == [((1,), 1.0, 0.0), ((2,), 0.0, 0.3)]
    assert parse_trig_terms("1,-1:0.5:0", 2)[0].k == (1, -1)
    for bad in ("1:2", "1,0:1:0"):
        with pytest.raises(SpecError):
            parse_trig_terms(bad, 1)


def test_describe_is_json_ready():
    import json

    spec = PotentialSpec.trig([(1, 1.0, 0.0)])
    assert json.loads(json.dumps(spec.describe())) == {"kind": "trig", "terms": [[[1], 1.0, 0.0]]}
