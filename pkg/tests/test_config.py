import numpy as np
import pytest

from dfdreg.config import ConfigError, RunConfig, load_config, parse_config, with_overrides

TEXT = """
# a comment
[problem]
operator = volterra   # trailing
N = 64
dfd = svd

[filter]
spec = "truncated:kappa_cutoff"

[choice]
mu = 2
rho = 1.5

[rates]
delta_max = 1e-2
delta_min = 1e-4
points_per_decade = 5

[run]
seed = 18446744073709551615
out = "some # dir"
"""


def test_parse():
    cfg = parse_config(TEXT)
    assert cfg.problem == "volterra" and cfg.N == 64 and cfg.filter == "truncated:kappa_cutoff"
    assert cfg.mu == 2.0 and cfg.rho == 1.5 and cfg.seed == 2**64 - 1
    assert cfg.out == "some # dir"
    assert cfg.noise_draws == 5


def test_deterministic():
    assert parse_config(TEXT) == parse_config(TEXT)
    assert parse_config(TEXT).lines() == parse_config(TEXT).lines()


def test_grid():
    g = parse_config(TEXT).delta_grid()
    assert len(g) == 11
    assert g[0] == pytest.approx(1e-2, rel=1e-15) and g[-1] == pytest.approx(1e-4, rel=1e-15)
    assert np.all(np.diff(g) < 0)
    assert len(RunConfig().delta_grid()) == 51


@pytest.mark.parametrize(
    "text,match",
    [
        ("[problem]\nsize = 3\n", "unknown key"),
        ("[plot]\n", "unknown section"),
        ("N = 3\n", "outside any section"),
        ("[problem]\nN = three\n", "invalid value"),
        ("[problem]\nN = 3\nN = 4\n", "duplicate"),
        ("[problem]\njust words\n", "key = value"),
        ("[run]\nseed = -1\n", "unsigned"),
        ("[problem]\noperator = files\n", "path"),
        ("[problem]\ndfd = derive\n", "v_path"),
        ("[rates]\nnoise_draws = 0\n", "positive"),
    ],
)
def test_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(text)


def test_int_accepts_integral_float():
    assert parse_config("[problem]\nN = 2e2\n").N == 200


def test_overrides_and_load(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text(TEXT)
    cfg = with_overrides(load_config(p), seed=7, out=None)
    assert cfg.seed == 7 and cfg.out == "some # dir"
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.cfg")


def test_lines_exclude_out():
    assert not any(line.startswith("run.out") for line in parse_config(TEXT).lines())
    assert "run.seed = 18446744073709551615" in parse_config(TEXT).lines()
