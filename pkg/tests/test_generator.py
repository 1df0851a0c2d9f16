import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpnrepair import model
from dpnrepair.generator import GenerationExhausted, GeneratorParams, generate, generate_document
from dpnrepair.oracle import reaches_final


@pytest.mark.parametrize(
    "n, sizes",
    [(10, (12, 10, 3, 5)), (3, (4, 3, 1, 2)), (8, (10, 8, 2, 4)), (30, (36, 30, 8, 15))],
)
def test_derived_sizes(n, sizes):
    p = GeneratorParams(n)
    assert (p.places, p.transitions, p.variables, p.conditions) == sizes
    inst = generate(n, 1)
    assert len(inst.net.places) == sizes[0]
    assert len(inst.net.transitions) == sizes[1]
    assert len(inst.net.variables) == sizes[2]


def test_condition_count():
    doc = generate_document(GeneratorParams(10, 1))
    atoms = sum(t["guard"].count(" ") // 2 - t["guard"].count("&&") - t["guard"].count("||")
                for t in doc["transitions"] if t["guard"] != "true")
    assert atoms == 5


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 12), st.integers(0, 10_000))
def test_deterministic_valid_and_reaching(n, seed):
    a = generate_document(GeneratorParams(n, seed))
    b = generate_document(GeneratorParams(n, seed))
    assert json.dumps(a) == json.dumps(b)
    inst = model.from_dict(a)
    assert model.structurally_equal(inst, model.parse(model.serialize(inst)))
    assert reaches_final(inst, ceiling=3, state_cap=4000)
    for t in inst.net.transitions:
        assert t.guard.constants() <= {0, 1, 3, 18}


def test_small_n_rejected():
    with pytest.raises(ValueError):
        generate(2, 0)


def test_exhaustion_is_reported(monkeypatch):
    import dpnrepair.generator as gen

    monkeypatch.setattr(gen, "reaches_final", lambda *a, **k: False)
    with pytest.raises(GenerationExhausted):
        gen.generate_document(GeneratorParams(5, 0, max_rounds=3))
