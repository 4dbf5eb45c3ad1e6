import bz2
import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from psps.dataio import (
    PM1,
    ZO,
    BatchPlan,
    LibsvmParseError,
    SparseDataset,
    load_libsvm,
    next_batch,
    parse_libsvm,
    remap_labels,
    scale_columns,
    to_libsvm_text,
    write_libsvm,
)


def test_parse_basic():
    ds = parse_libsvm("+1 1:0.5 3:2.0\n-1 2:1.0")
    assert (ds.n, ds.d) == (2, 3)
    assert ds.rows == [{0: 0.5, 2: 2.0}, {1: 1.0}]
    assert ds.labels.tolist() == [1.0, -1.0]


def test_parse_duplicate_rows():
    ds = parse_libsvm("1 1:1\n1 1:1")
    assert (ds.n, ds.d) == (2, 1)
    assert ds.rows == [{0: 1.0}, {0: 1.0}]


@pytest.mark.parametrize(
    "text, lineno",
    [
        ("+1 3:1 2:1", 1),
        ("+1 1:1\n-1 0:2", 2),
        ("+1 1:1\n\n-1 1:x", 3),
        ("abc 1:1", 1),
        ("+1 1:1 1:2", 1),
        ("+1 2", 1),
    ],
)
def test_parse_errors_name_the_line(text, lineno):
    with pytest.raises(LibsvmParseError) as exc:
        parse_libsvm(text)
    assert exc.value.lineno == lineno
    assert f"line {lineno}" in str(exc.value)


def test_parse_empty():
    with pytest.raises(ValueError):
        parse_libsvm("\n\n")


def test_parse_n_features_override():
    ds = parse_libsvm("+1 1:1\n-1 2:1", n_features=5)
    assert ds.d == 5
    with pytest.raises(ValueError):
        parse_libsvm("+1 7:1\n-1 2:1", n_features=5)


def test_explicit_zero_kept():
    ds = parse_libsvm("1 1:0 2:3\n2 1:1")
    assert ds.rows[0] == {0: 0.0, 1: 3.0}


def test_remap_labels():
    ds = parse_libsvm("1 1:1\n2 1:1", convention=ZO)
    assert ds.labels.tolist() == [0.0, 1.0]
    pm = remap_labels(ds, PM1)
    assert pm.labels.tolist() == [-1.0, 1.0]
    zo = remap_labels(pm, ZO)
    assert zo.labels.tolist() == [0.0, 1.0]
    with pytest.raises(ValueError):
        parse_libsvm("0 1:1\n1 1:1\n2 1:1")


def test_remap_is_order_preserving():
    ds = parse_libsvm("5 1:1\n-3 1:1\n5 1:2")
    assert ds.labels.tolist() == [1.0, -1.0, 1.0]


rows_strategy = st.lists(
    st.tuples(
        st.sampled_from([-1, 1]),
        st.dictionaries(st.integers(0, 19), st.floats(-1e6, 1e6, allow_nan=False), max_size=6),
    ),
    min_size=1,
    max_size=15,
)


def _text(rows):
    lines = []
    for lab, feats in rows:
        toks = [f"{j + 1}:{v!r}" for j, v in sorted(feats.items())]
        lines.append(" ".join([str(lab)] + toks))
    return "\n".join(lines)


@given(rows_strategy)
def test_round_trip(rows):
    # need at least one feature somewhere for d > 0
    rows = rows + [(1, {0: 1.0})]
    ds = parse_libsvm(_text(rows))
    again = parse_libsvm(to_libsvm_text(ds), n_features=ds.d)
    assert ds.equals(again)


def test_write_libsvm_stream():
    ds = parse_libsvm("+1 1:0.5 3:2.0\n-1 2:1.0")
    buf = io.StringIO()
    write_libsvm(ds, buf)
    assert buf.getvalue() == "1 1:0.5 3:2.0\n-1 2:1.0\n"


def _dense_ds(seed=0, n=6, d=4):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d)) * (rng.random((n, d)) < 0.6)
    return SparseDataset.from_dense(X, np.where(rng.random(n) < 0.5, -1.0, 1.0))


@given(st.integers(0, 2**31))
def test_scale_k0_identity(seed):
    ds = _dense_ds()
    out, spec = scale_columns(ds, 0.0, seed)
    assert np.array_equal(spec.e, np.ones(ds.d))
    assert out.equals(ds)


@given(st.floats(0, 10), st.integers(0, 2**31))
def test_scale_keeps_labels_and_structure(k, seed):
    ds = _dense_ds()
    out, spec = scale_columns(ds, k, seed)
    assert np.array_equal(out.labels, ds.labels)
    assert np.allclose(out.dense, ds.dense * spec.e[None, :], rtol=1e-15, atol=0)


def test_scale_deterministic():
    ds = _dense_ds()
    a, ea = scale_columns(ds, 6.0, 7)
    b, eb = scale_columns(ds, 6.0, 7)
    assert a.equals(b) and np.array_equal(ea.e, eb.e)


def test_scale_bounds_over_many_seeds():
    # direct sampling: every multiplier must lie in [exp(-6), exp(6)]
    lo, hi = np.exp(-6.0), np.exp(6.0)
    ds = _dense_ds(d=50)
    for seed in range(200):
        e = scale_columns(ds, 6.0, seed)[1].e
        assert np.all((e >= lo) & (e <= hi))
    assert abs(lo - 2.4787521766663585e-03) < 1e-15 and abs(hi - 403.4287934927351) < 1e-9


def test_scale_negative_k():
    with pytest.raises(ValueError):
        scale_columns(_dense_ds(), -1.0, 0)


def test_batches_partition():
    plan = BatchPlan(4, 2, seed=0)
    b1, b2 = next_batch(plan), next_batch(plan)
    assert sorted(np.concatenate([b1, b2]).tolist()) == [0, 1, 2, 3]


def test_batches_remainder():
    plan = BatchPlan(5, 2, seed=0)
    assert [len(next_batch(plan)) for _ in range(3)] == [2, 2, 1]
    assert plan.epoch == 0
    next_batch(plan)
    assert plan.epoch == 1


def test_batches_deterministic():
    a, b = BatchPlan(23, 4, 9), BatchPlan(23, 4, 9)
    for _ in range(30):
        assert np.array_equal(a.next_batch(), b.next_batch())


@given(st.integers(1, 60), st.integers(1, 60), st.integers(0, 1000), st.integers(0, 5))
def test_epoch_coverage(n, bs, seed, epoch):
    if bs > n:
        with pytest.raises(ValueError):
            BatchPlan(n, bs, seed)
        return
    plan = BatchPlan(n, bs, seed)
    idx = np.concatenate(list(plan.batches(epoch)))
    assert sorted(idx.tolist()) == list(range(n))
    assert len(list(plan.batches(epoch))) == len(plan)


def test_epochs_reshuffle():
    plan = BatchPlan(50, 50, 3)
    assert not np.array_equal(plan.order(0), plan.order(1))


@pytest.mark.parametrize("bs", [0, -1, 5])
def test_bad_batch_size(bs):
    with pytest.raises(ValueError):
        BatchPlan(4, bs, 0)


def test_load_bz2_matches_plain(tmp_path):
    text = "+1 1:0.5 3:2\n-1 2:1.25\n"
    plain = tmp_path / "d.txt"
    plain.write_text(text)
    packed = tmp_path / "d.txt.bz2"
    packed.write_bytes(bz2.compress(text.encode()))
    assert load_libsvm(packed).equals(load_libsvm(plain))
