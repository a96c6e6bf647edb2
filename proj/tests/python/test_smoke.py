import json
import math
import os
import sys

import pytest

import pycad

FIXTURES = os.environ.get(
    "CAD_FIXTURE_DIR", os.path.join(os.path.dirname(__file__), "..", "..", "fixtures")
)
SERVE = os.environ.get("CAD_SERVE_PATH")


def test_softmax_and_argmax():
    p = pycad.softmax([0.0, math.log(2.0)])
    assert p == pytest.approx([1 / 3, 2 / 3], abs=1e-15)
    assert pycad.argmax([0.5, 0.5]) == 0


def test_combine_matches_product_form():
    assert pycad.cad_combine([2, 0, 1], [0, 2, 1], 1.0) == [4, -2, 1]
    p = pycad.cad_distribution([math.log(0.37), math.log(0.63)], [math.log(0.1), math.log(0.9)], 1.0)
    a, b = 0.37**2 / 0.1, 0.63**2 / 0.9
    assert p == pytest.approx([a / (a + b), b / (a + b)], abs=1e-12)


def test_errors_carry_codes():
    with pytest.raises(pycad.CadError) as info:
        pycad.cad_combine([1, 2], [1, 2, 3], 1.0)
    assert info.value.code == "branch-mismatch"
    with pytest.raises(pycad.CadError) as info:
        pycad.softmax([0.0, float("nan")])
    assert info.value.code == "invalid-logits"


def test_nucleus_and_sampling():
    members, renorm = pycad.top_p_nucleus([0.6, 0.3, 0.1], 0.9)
    assert members == [0, 1]
    assert renorm == pytest.approx([2 / 3, 1 / 3, 0.0])
    assert pycad.sample_at([2 / 3, 1 / 3, 0.0], 0.7) == 1
    a, b = pycad.RandomSource(3), pycad.RandomSource(3)
    assert [a.next() for _ in range(5)] == [b.next() for _ in range(5)]


def test_metrics():
    assert pycad.normalize_answer(" The Eiffel Tower. ") == "eiffel tower"
    assert pycad.exact_match("Early!", ["early"]) == 1
    assert pycad.rouge_l("police kill the gunman", "police killed the gunman") == pytest.approx((0.75, 0.75, 0.75))
    ex = pycad.EvalExample("q1", "Elon Musk is now in charge", "Who?", ["Elon Musk"])
    swapped = pycad.make_swap(ex, "Jane Doe")
    assert swapped.context == "Jane Doe is now in charge"
    assert swapped.id == "q1-swap"


def test_generate_conflict_flip():
    model = pycad.load_toy_model(os.path.join(FIXTURES, "conflict.model"))
    for alpha, expected in [(0.0, "never"), (1.0, "early")]:
        cfg = pycad.GenerationConfig(alpha=alpha, strategy="greedy")
        out = pycad.generate(model, "early", "Better late than", cfg)
        assert out["text"] == expected
        assert out["stop_reason"] == "eos"


def test_eval_and_sweep():
    model, original, swapped = pycad.conflict_fixture()
    assert len(swapped) == 50
    cfg = pycad.GenerationConfig(alpha=1.0, strategy="greedy", max_tokens=16)
    report = json.loads(pycad.run_eval(swapped, model, cfg, jobs=2))
    assert report["aggregates"]["em"] == 1.0
    assert len(report["per_example"]) == 50
    _, csv = pycad.sweep(swapped, model, [0.0, 0.5, 1.0], cfg)
    assert csv == "alpha,em,rouge_l\n0,0,0\n0.5,1,1\n1,1,1\n"
    assert pycad.read_dataset(os.path.join(FIXTURES, "swap.jsonl")) == swapped


def test_ngram_roundtrip():
    model = pycad.NGramModel.train(["a b a b a"], order=2, k=1.0)
    ids = model.tokenize("a")
    assert pycad.softmax(model.logits(ids))[model.tokenize("b")[0]] == pytest.approx(
        (2 + 1) / (3 + model.vocab_size), abs=1e-12
    )
    again = pycad.NGramModel.deserialize(model.serialize())
    assert again.logits(ids) == model.logits(ids)


def test_run_command():
    code, out, _ = pycad.run_command(
        ["generate", "--provider", "toy-copy:" + os.path.join(FIXTURES, "conflict.model"),
         "--context", "early", "--query", "Better late than", "--alpha", "1", "--strategy", "greedy"]
    )
    assert (code, out) == (0, "early\n")
    assert pycad.run_command(["nope"])[0] == 1


@pytest.mark.skipif(not SERVE, reason="reference server path not provided")
def test_remote_provider():
    remote = pycad.open_provider("cmd:" + SERVE + " --mode echo", timeout_ms=5000)
    assert remote.vocab_size == 4 and remote.eos == 3
    assert remote.remote_logits([[2, 0, 1], [1]]) == [[3, 2, 1, 0], [1, 1, 1, 0]]
