import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from finbisim.errors import SpecError
from finbisim.sysmodel import (RunConfig, SystemSpec, load_spec, parse_spec, serialize_spec,
                               validate_hypotheses, with_options)

FIVE = """\
format: finbisim-spec/1
n: 2
m: 2
A: [[0.25, -0.15], [0, 0.1]]
B: [[1, 0], [0, 1]]
U: [[1, 0], [-1, 0], [0, 1], [0, -1], [0, 0]]
"""


def test_parse_five_letter_spec():
    sys, cfg = parse_spec(FIVE)
    assert (sys.n, sys.m, sys.q) == (2, 2, 5)
    assert sys.A[0, 1] == -0.15
    assert cfg == RunConfig()


def test_parse_scalar_spec():
    sys, _ = parse_spec("format: finbisim-spec/1\nn: 1\nm: 1\nA: [[0.5]]\nB: [[1]]\nU: [[0]]\n")
    assert (sys.n, sys.m, sys.q) == (1, 1, 1)
    assert sys.rho == 0.5


def test_rational_literals():
    sys, _ = parse_spec(FIVE.replace("0.25, -0.15", "1/4, -3/20"))
    assert sys.A[0, 0] == 0.25
    assert sys.A[0, 1] == -0.15


def test_duplicate_letter_has_locator():
    text = FIVE.replace("[0, -1], [0, 0]", "[0, 1], [0, 0]")
    with pytest.raises(SpecError) as exc:
        parse_spec(text)
    assert exc.value.locator == "U[3]"
    assert "duplicate" in str(exc.value)


@pytest.mark.parametrize("bad, where", [
    ("A: [[0.25, -0.15], [0, .nan]]", "A"),
    ("A: [[0.25, -0.15]]", "A"),
    ("A: [[0.25, -0.15], [0, zero]]", "A[1][1]"),
])
def test_bad_matrix_locators(bad, where):
    text = FIVE.replace("A: [[0.25, -0.15], [0, 0.1]]", bad)
    with pytest.raises(SpecError) as exc:
        parse_spec(text)
    assert where in exc.value.locator
    assert "line 4" in exc.value.locator


def test_unknown_field_and_format():
    with pytest.raises(SpecError, match="unknown field"):
        parse_spec(FIVE + "colour: red\n")
    with pytest.raises(SpecError, match="format"):
        parse_spec(FIVE.replace("finbisim-spec/1", "other/2"))
    with pytest.raises(SpecError, match="malformed"):
        parse_spec("A: [[1, 2]\n")


def test_options_parse_and_validate():
    _, cfg = parse_spec(FIVE + "options:\n  z: 24\n  epsilon: 0.3\n  seed: 7\n")
    assert (cfg.z, cfg.epsilon, cfg.seed) == (24, 0.3, 7)
    with pytest.raises(SpecError) as exc:
        parse_spec(FIVE + "options:\n  epsilon: 0.9\n")
    assert "options.epsilon" in exc.value.locator
    with pytest.raises(SpecError):
        parse_spec(FIVE + "options:\n  k_max: 0\n")
    with pytest.raises(SpecError, match="unknown option"):
        parse_spec(FIVE + "options:\n  speed: 3\n")


def test_epsilon_auto_resolution():
    assert RunConfig().resolve_epsilon(0.25) == (0.375, True)
    assert RunConfig(epsilon=0.3).resolve_epsilon(0.25) == (0.3, False)
    with pytest.raises(SpecError):
        RunConfig().resolve_epsilon(1.0)


def test_with_options_skips_none():
    cfg = with_options(RunConfig(), z=24, epsilon=None)
    assert cfg.z == 24 and cfg.epsilon == "auto"


def test_hypotheses_five_letter():
    sys, _ = parse_spec(FIVE)
    h = validate_hypotheses(sys)
    assert h.schur_stable and h.zero_in_alphabet and h.A_invertible and h.multi_letter
    assert h.rho == 0.25


def test_hypotheses_strips_and_zero_matrix():
    sys = SystemSpec(np.diag([2.0, 0.5]), np.eye(2), [[0, 0]])
    h = validate_hypotheses(sys)
    assert h.rho == 2.0 and not h.schur_stable and not h.multi_letter
    h0 = validate_hypotheses(SystemSpec([[0.0]], [[1.0]], [[0.0]]))
    assert not h0.A_invertible


def test_digest_tracks_bits():
    a = SystemSpec([[0.5]], [[1.0]], [[0.0], [1.0]])
    b = SystemSpec([[0.5]], [[1.0]], [[0.0], [1.0]])
    c = SystemSpec([[np.nextafter(0.5, 1)]], [[1.0]], [[0.0], [1.0]])
    assert a == b and a.digest() == b.digest()
    assert a != c and a.digest() != c.digest()


def test_arrays_are_read_only():
    sys, _ = parse_spec(FIVE)
    with pytest.raises(ValueError):
        sys.A[0, 0] = 1.0


def test_spec_files_load(tmp_path):
    import glob
    import os
    here = os.path.join(os.path.dirname(__file__), "..", "specs")
    paths = sorted(glob.glob(os.path.join(here, "*.yaml")))
    assert paths
    for p in paths:
        sys, cfg = load_spec(p)
        assert sys.q >= 1


finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@st.composite
def systems(draw):
    n = draw(st.integers(1, 3))
    m = draw(st.integers(1, 3))
    A = draw(arrays(float, (n, n), elements=finite))
    B = draw(arrays(float, (n, m), elements=finite))
    U = draw(arrays(float, (draw(st.integers(1, 5)), m), elements=finite, unique=True))
    U = np.unique(U + 0.0, axis=0)
    return SystemSpec(A, B, U)


@given(systems())
def test_serialize_round_trip(sys):
    back, cfg = parse_spec(serialize_spec(sys))
    assert back == sys
    assert back.digest() == sys.digest()
    assert cfg == RunConfig()


@given(systems(), st.integers(1, 200), st.integers(0, 2**32))
def test_serialize_round_trip_with_options(sys, z, seed):
    cfg = RunConfig(z=z, seed=seed)
    back, cfg2 = parse_spec(serialize_spec(sys, cfg))
    assert back == sys and cfg2 == cfg
