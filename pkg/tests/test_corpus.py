import numpy as np
import pytest

from littlecarleson.corpus import DEFAULT_CORPUS, build, build_corpus, validate_entry
from littlecarleson.dyadic import TORUS
from littlecarleson.errors import StructuralError


@pytest.mark.parametrize("entry", DEFAULT_CORPUS, ids=lambda e: e["id"])
def test_default_members_live_in_the_torus(entry):
    validate_entry(entry)
    f = build(entry, 512)
    assert f.is_supported_in_torus()
    assert f.mean_norm(TORUS) > 0
    assert f.name == entry["id"]


def test_step_support_and_values():
    f = build({"id": "s", "kind": "step", "lo": "1/16", "hi": "5/64", "value": 40.0}, 1024)
    i0, i1 = f.cells(TORUS)
    nz = np.flatnonzero(f.cell_norms())
    # (1/16, 5/64) has length 1/64: four cells of width 1/256 starting at (1/16 + 2) * 256 = 528
    assert nz.tolist() == [528, 529, 530, 531]
    assert np.all(f.values[nz] == 40.0)


def test_character_values_are_sampled_at_midpoints():
    f = build({"kind": "character", "m": 3, "amplitude": 2.0}, 256)
    i0, i1 = f.cells(TORUS)
    np.testing.assert_allclose(f.values[i0:i1], 2 * np.exp(6j * np.pi * f.midpoints[i0:i1]))


def test_random_schatten_is_seeded():
    e = {"kind": "random-schatten", "d": 2, "p": 3.0, "blocks": 4, "scale": 1.0}
    a, b, c = build(e, 256, 0), build(e, 256, 0), build(e, 256, 1)
    assert np.array_equal(a.values, b.values) and not np.array_equal(a.values, c.values)
    assert a.space.tag == "schatten-matrix(2,3)"


def test_vector_step_shape():
    f = build_corpus([DEFAULT_CORPUS[2]], 256)[0]
    assert f.values.shape == (256, 3) and f.space.tag == "lp-vector(3,2)"


@pytest.mark.parametrize("entry", [{"kind": "wavelet"}, {"kind": "step", "lo": "-1", "hi": "0"},
                                   {"kind": "constant", "space": {"kind": "sobolev"}}, "constant"])
def test_invalid_entries(entry):
    with pytest.raises(StructuralError):
        validate_entry(entry)
