"""File formats: model specs, sample CSV round-trips, config overlays."""

import numpy as np
import pytest

from map2fit import CanonicalForm, EstimationConfig
from map2fit.modelio import (
    load_config,
    load_model,
    model_as_dict,
    read_sample,
    write_sample,
)

from conftest import pair_to_arrays

CANONICAL_SPEC = """\
# bursty reference model
representation = canonical
label = bursty
form = one
x = -20
y = 6
u = -0.5
v = 0.0426
"""

REDUNDANT_SPEC = """\
representation = redundant
lambda1 = 20
lambda2 = 0.5
p120 = 0.3
p111 = 0.7
p210 = 0
p211 = 0.0852
"""

MATRICES_SPEC = """\
representation = matrices
label = raw
d0 = -20 6 0 -0.5
d1 = 14 0 0.0426 0.4574
"""


class TestLoadModel:
    def test_canonical(self, tmp_path, example1):
        path = tmp_path / "m.model"
        path.write_text(CANONICAL_SPEC)
        spec = load_model(path)
        assert spec.label == "bursty"
        assert spec.canonical.form is CanonicalForm.ONE
        np.testing.assert_allclose(
            pair_to_arrays(spec.pair)[0], pair_to_arrays(example1)[0]
        )

    def test_three_representations_agree(self, tmp_path):
        pairs = []
        for name, text in (
            ("c.model", CANONICAL_SPEC),
            ("r.model", REDUNDANT_SPEC),
            ("m.model", MATRICES_SPEC),
        ):
            path = tmp_path / name
            path.write_text(text)
            pairs.append(pair_to_arrays(load_model(path).pair))
        for d0, d1 in pairs[1:]:
            np.testing.assert_allclose(d0, pairs[0][0], atol=1e-12)
            np.testing.assert_allclose(d1, pairs[0][1], atol=1e-12)

    def test_missing_key(self, tmp_path):
        path = tmp_path / "bad.model"
        path.write_text("representation = canonical\nform = one\nx = -1\n")
        with pytest.raises(ValueError, match="missing keys"):
            load_model(path)

    def test_unknown_representation(self, tmp_path):
        path = tmp_path / "bad.model"
        path.write_text("representation = tensor\n")
        with pytest.raises(ValueError, match="representation"):
            load_model(path)

    def test_invalid_parameters_rejected(self, tmp_path):
        path = tmp_path / "bad.model"
        path.write_text(
            "representation = canonical\nform = one\n"
            "x = -1\ny = 5\nu = -1\nv = 0\n"
        )
        from map2fit import InvalidModel

        with pytest.raises(InvalidModel):
            load_model(path)

    def test_default_label_is_stem(self, tmp_path):
        path = tmp_path / "nameless.model"
        path.write_text(MATRICES_SPEC.replace("label = raw\n", ""))
        assert load_model(path).label == "nameless"


class TestSampleIo:
    def test_round_trip_exact(self, tmp_path):
        times = np.random.default_rng(81).exponential(size=100)
        path = tmp_path / "s.csv"
        write_sample(path, times, header="demo\nsecond line")
        back = read_sample(path)
        np.testing.assert_array_equal(back, times)

    def test_comments_and_blanks_skipped(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("# header\n\n1.5\n# mid comment\n2.5  # trailing\n")
        np.testing.assert_array_equal(read_sample(path), [1.5, 2.5])

    def test_bad_line_reports_location(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("1.0\nnot-a-number\n")
        with pytest.raises(ValueError, match=":2:"):
            read_sample(path)

    def test_empty_rejected(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("# only a comment\n")
        with pytest.raises(ValueError, match="no observations"):
            read_sample(path)


class TestConfigFile:
    def test_overrides(self, tmp_path):
        path = tmp_path / "opts.cfg"
        path.write_text(
            "tau = 2.5\nmultistarts = 7\nseed = 11\n"
            "rate_min = -500\njump_max = 50\nmax_iterations = 900\n"
        )
        cfg = load_config(path, EstimationConfig())
        assert cfg.tau == 2.5
        assert cfg.multistart_count == 7
        assert cfg.seed == 11
        assert cfg.rate_bounds == (-500.0, -2e-16)
        assert cfg.jump_bounds == (1e-5, 50.0)
        assert cfg.max_iterations == 900

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "opts.cfg"
        path.write_text("explode = yes\n")
        with pytest.raises(ValueError, match="unknown config key"):
            load_config(path, EstimationConfig())


def test_model_as_dict_has_all_representations(example1):
    from conftest import EXAMPLE1

    payload = model_as_dict(example1, canonical=EXAMPLE1)
    assert set(payload) == {"matrices", "canonical", "redundant"}
    assert payload["canonical"]["form"] == "one"
    assert payload["redundant"]["lambda1"] == pytest.approx(20.0)
    assert payload["redundant"]["p120"] == pytest.approx(0.3)
    assert payload["matrices"]["d0"][0] == [-20.0, 6.0]
