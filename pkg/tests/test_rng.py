import numpy as np
from hypothesis import given, strategies as st

from dmfsim.rng import derive_key, uniform_scalar, uniforms

keys = st.integers(0, 2**64 - 1)


@given(keys, st.integers(0, 10_000), st.integers(1, 50))
def test_vector_matches_scalar(key, start, n):
    v = uniforms(key, start, n)
    assert [uniform_scalar(key, start + i) for i in range(n)] == v.tolist()


@given(keys, st.integers(1, 200))
def test_uniforms_in_open_unit_interval(key, n):
    u = uniforms(key, 0, n)
    assert np.all(u > 0) and np.all(u < 1)


def test_uniform_moments():
    u = uniforms(12345, 0, 200_000)
    assert abs(u.mean() - 0.5) < 4 * np.sqrt(1 / 12 / u.size)
    assert abs(u.var() - 1 / 12) < 2e-3


def test_derive_key_distinguishes_tags_and_paths():
    seen = {derive_key(7, n, r, tag) for n in (16, 64) for r in range(5) for tag in ("pdmp", "limit", "env")}
    assert len(seen) == 30
    assert derive_key(7, 64, 1, "pdmp") == derive_key(7, 64, 1, "pdmp")
    assert derive_key(7, "pdmp") != derive_key(8, "pdmp")
