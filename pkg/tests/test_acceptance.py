"""Acceptance suite.

Every test here carries a ``criterion`` marker; the terminal summary lists
one PASS/FAIL line per criterion.  Run alone with::

    python3 -m pytest tests/test_acceptance.py -v
"""

import itertools
import math

import numpy as np
import pytest

from hdspeaker import bench, dsp, glvq, model as model_io, pipeline, synth, vsa
from hdspeaker.dataset import index_dataset, select_test_context
from hdspeaker.encoder import EncoderConfig, encode_slice, lbp
from hdspeaker.evaluation import mean_off_diagonal, mutual_information, profile_correlation_matrix


def all_bipolar(dim):
    """Every bipolar vector of length ``dim`` as rows, built bit by bit."""
    n = 1 << dim
    out = np.empty((n, dim), dtype=np.int8)
    for r in range(n):
        for i in range(dim):
            out[r, i] = 1 if (r >> i) & 1 else -1
    return out


def oracle_bind(a, b):
    # truth table of the product of two signs
    return np.where(a == b, 1, -1).astype(np.int8)


def oracle_permute(v, mapping):
    out = np.empty_like(v)
    for i, m in enumerate(mapping):
        out[..., i] = v[..., m]
    return out


def direct_power(frame):
    n = len(frame)
    k = np.arange(n)
    w = 0.5 - 0.5 * np.cos(2 * np.pi * k / n)
    x = frame * w
    return np.array([abs(np.sum(x * np.exp(-2j * np.pi * f * k / n))) ** 2 for f in range(n // 2)])


@pytest.mark.criterion("MI metric exactness")
def test_mutual_information():
    assert abs(mutual_information(0.479, 1251) - 3.93) <= 0.01
    assert abs(mutual_information(0.805, 1251) - 7.57) <= 0.01
    assert abs(mutual_information(1.0, 1251) - math.log2(1251)) <= 1e-12


@pytest.mark.criterion("quasi-orthogonality")
def test_quasi_orthogonality():
    v = vsa.random_bipolar(2024, 2 * 10_000, 1024).astype(np.float64)
    cos = np.sum(v[0::2] * v[1::2], axis=1) / 1024
    print(f"mean {cos.mean():+.5f} std {cos.std():.5f}")
    assert abs(cos.mean()) < 0.005
    assert 0.028 <= cos.std() <= 0.035


@pytest.mark.criterion("algebra laws")
def test_algebra_laws():
    cases = failures = 0

    def check(ok):
        nonlocal cases, failures
        ok = np.atleast_1d(ok)
        cases += ok.size
        failures += int(np.count_nonzero(~ok))

    # exhaustive at D = 8
    V = all_bipolar(8)
    A = np.repeat(V, len(V), axis=0)
    B = np.tile(V, (len(V), 1))
    AB = vsa.bind(A, B)
    check(np.all(AB == oracle_bind(A, B), axis=1))
    check(np.all(vsa.bind(AB, B) == A, axis=1))
    check(np.all(AB == vsa.bind(B, A), axis=1))
    C = V[np.arange(len(A)) % 251]
    check(np.all(vsa.bind(vsa.bind(A, B), C) == vsa.bind(A, vsa.bind(B, C)), axis=1))
    # binding distributes over bundling
    lhs = vsa.bind(A.astype(np.int32) + B + C, C)
    rhs = vsa.bind(A, C).astype(np.int32) + vsa.bind(B, C) + vsa.bind(C, C)
    check(np.all(lhs == rhs, axis=1))

    probe = V[[3, 77, 200]]
    for mapping in itertools.permutations(range(8)):
        p = vsa.Permutation(0, np.array(mapping))
        pv = vsa.permute(probe, p)
        ok = np.all(pv == oracle_permute(probe, mapping), axis=1)
        ok &= np.all(vsa.permute(probe, p, 2) == vsa.permute(pv, p), axis=1)
        ok &= np.all(pv[:, p.inverse()] == probe, axis=1)
        ok &= (pv[0] @ pv[1]) == (probe[0] @ probe[1])
        ok &= np.all(vsa.permute(vsa.bind(probe[0], probe[1]), p) == vsa.bind(pv[0], pv[1]))
        check(ok)

    # parity: an odd number of +-1 addends never sums to zero
    for k in range(40):
        s = np.array([1] * k + [-1] * (39 - k))
        check(s.sum() != 0 and s.sum() % 2 == 1)

    # randomized at D = 1024
    rng = np.random.default_rng(11)
    dim = 1024
    X = vsa.random_bipolar(5, 3000, dim)
    a, b, c = X[:1000], X[1000:2000], X[2000:]
    check(np.all(vsa.bind(vsa.bind(a, b), b) == a, axis=1))
    check(np.all(vsa.bind(a, b) == oracle_bind(a, b), axis=1))
    check(np.all(vsa.bind(a.astype(np.int32) + b, c) == vsa.bind(a, c).astype(np.int32) + vsa.bind(b, c), axis=1))
    perm = vsa.make_permutation(43, dim)
    for k in range(1, 6):
        pk = vsa.permute(a, perm, k)
        check(np.all(pk == vsa.permute(vsa.permute(a, perm, k - 1), perm), axis=1))
        check(np.einsum("ij,ij->i", pk.astype(np.int64), vsa.permute(b, perm, k)) ==
              np.einsum("ij,ij->i", a.astype(np.int64), b))
        check(np.all(vsa.permute(vsa.bind(a, b), perm, k) == vsa.bind(pk, vsa.permute(b, perm, k)), axis=1))
    mem = vsa.make_seed_memory(42, dim)
    codes = rng.random((2000, 39)) < 0.5
    for code in codes:
        total = sum(mem[i + 1, int(code[i])].astype(np.int32) for i in range(39))
        check(np.all(total != 0))
        check(np.all(encode_slice(code, mem) == np.where(total > 0, 1, -1)))

    print(f"{cases} cases, {failures} failures")
    assert cases >= 100_000
    assert failures == 0


@pytest.mark.criterion("DFT oracle")
def test_dft_oracle():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        frame = rng.uniform(-1, 1, dsp.WINDOW)
        ref = direct_power(frame)
        got = dsp.power_spectrum(frame).bins
        worst = max(worst, np.linalg.norm(got - ref) / np.linalg.norm(ref))
    print(f"worst relative error {worst:.2e}")
    assert worst < 1e-9
    tone = np.sin(2 * np.pi * 1000 * np.arange(dsp.WINDOW) / dsp.SAMPLE_RATE)
    assert int(np.argmax(dsp.power_spectrum(tone).bins)) == 5


@pytest.mark.criterion("LBP invariance")
def test_lbp_invariance():
    rng = np.random.default_rng(4)
    spectra = rng.exponential(size=(1000, 40)) * 10.0 ** rng.uniform(-6, 2, size=(1000, 1))
    mem = vsa.make_seed_memory(42)
    base = lbp(spectra)
    for c in (0.01, 1.0, 100.0):
        codes = lbp(c * spectra)
        assert np.array_equal(codes, base)
    for s in spectra[:100]:
        ref = encode_slice(lbp(s), mem)
        for c in (0.01, 100.0):
            assert np.array_equal(encode_slice(lbp(c * s), mem), ref)


@pytest.fixture(scope="module")
def synthetic_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("synthetic")
    synth.write_corpus(root, n_speakers=10, n_contexts=3, n_utterances=5, seconds=3.0, seed=0)
    return root


@pytest.mark.criterion("synthetic end-to-end")
def test_synthetic_end_to_end(synthetic_corpus):
    index = index_dataset(synthetic_corpus)
    assert len(index.speakers) == 10
    model, _ = pipeline.train_model(index, EncoderConfig(weighting="normalized"))
    report, _, _ = pipeline.evaluate(model, index)
    print(f"centroid Top-1 {report.top1:.3f}")
    assert report.top1 >= 0.9

    _, stats = pipeline.refine(model, glvq.GlvqConfig(epochs=30, learning_rate=0.05))
    n_train = sum(1 for v in model.context_vecs if np.any(v))
    first = 1 - stats[0].train_misclassified / n_train
    last = 1 - stats[-1].train_misclassified / n_train
    print(f"train Top-1 epoch 0 {first:.3f}, epoch 30 {last:.3f}")
    assert len(stats) == 31
    assert last >= first


@pytest.mark.criterion("weighting diagnostic")
def test_weighting_diagnostic(tmp_path):
    synth.write_corpus(tmp_path, n_speakers=10, n_contexts=3, n_utterances=5, seconds=3.0, seed=0,
                       silence_s=(0.0, 3.0))
    index = index_dataset(tmp_path)
    scores = {}
    for mode in ("none", "energy"):
        m, _ = pipeline.train_model(index, EncoderConfig(weighting=mode))
        scores[mode] = mean_off_diagonal(profile_correlation_matrix(m.profiles.astype(np.float64)))
    print(f"mean off-diagonal cosine: none {scores['none']:.3f}, energy {scores['energy']:.3f}")
    assert scores["energy"] <= scores["none"]


@pytest.mark.criterion("GLVQ gradient check")
def test_glvq_gradient():
    rng = np.random.default_rng(8)
    eps = 1e-6
    worst = 0.0
    for _ in range(100):
        x, wj, wk = (glvq.unit(rng.standard_normal(32)) for _ in range(3))
        _, up_j, up_k = glvq.glvq_updates(x, wj, wk)
        for w, up, which in ((wj, up_j, 0), (wk, up_k, 1)):
            fd = np.empty_like(w)
            for i in range(len(w)):
                e = np.zeros_like(w)
                e[i] = eps
                args_p = (x, w + e, wk) if which == 0 else (x, wj, w + e)
                args_m = (x, w - e, wk) if which == 0 else (x, wj, w - e)
                fd[i] = (glvq.glvq_loss(*args_p) - glvq.glvq_loss(*args_m)) / (2 * eps)
            # updates point down the gradient of the loss
            worst = max(worst, np.linalg.norm(up + fd) / np.linalg.norm(fd))
    print(f"worst relative error {worst:.2e}")
    assert worst < 1e-4


@pytest.mark.criterion("performance")
def test_performance():
    latency = bench.classify_latency(n_speakers=1251, dim=1024, seconds=1.0)
    rate = bench.training_throughput(n_speakers=10, seconds=3.0)
    print(f"classify {latency * 1e3:.2f} ms per 1 s; training {rate:.0f}x real-time")
    assert latency <= 0.020
    assert rate >= 50


@pytest.mark.criterion("persistence and split rule")
def test_persistence_and_split(tmp_path):
    rng = np.random.default_rng(9)
    cfg = EncoderConfig(p_target=0.37)
    speakers = ["a", "b", "c", "d"]
    keys = [(s, c) for s in speakers for c in ("c1", "c2")]
    m = model_io.Model(cfg, speakers, rng.standard_normal((4, 1024)) * 300, glvq.unit(rng.standard_normal((4, 1024))),
                       keys, rng.integers(1, 10**6, size=8), rng.standard_normal((8, 1024)))
    model_io.save(m, tmp_path / "m.bin")
    back = model_io.load(tmp_path / "m.bin")
    assert back.config == m.config and back.speakers == m.speakers and back.context_keys == m.context_keys
    for name in ("profiles", "prototypes", "context_vecs", "context_counts"):
        assert getattr(back, name).tobytes() == getattr(m, name).tobytes()
    assert model_io.to_bytes(back) == (tmp_path / "m.bin").read_bytes()

    assert select_test_context({"v1": 12, "v2": 6, "v3": 5, "v4": 4}) == "v3"
    assert select_test_context({"v1": 4, "v2": 3}) is None
    layout = {"s1": {"x": 9, "y": 5, "z": 7}, "s2": {"x": 6, "y": 8}, "s3": {"x": 2, "y": 4}}
    for s, ctxs in layout.items():
        for c, n in ctxs.items():
            (tmp_path / "data" / s / c).mkdir(parents=True)
            for u in range(n):
                (tmp_path / "data" / s / c / f"{u}.wav").write_bytes(b"")
    idx = index_dataset(tmp_path / "data")
    assert {s: e.test_context for s, e in idx.speakers.items()} == {"s1": "y", "s2": "x"}
    assert "s3" in idx.excluded
