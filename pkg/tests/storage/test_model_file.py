"""Tests for versioned model files."""

from __future__ import annotations

import json
import zipfile
from pathlib import Path

import numpy as np
import pytest

from core.errors import DataError, ModelFileError
from core.estimators.cme import fit_cme_joint_wc_given_x
from core.estimators.concept import fit_h0, fit_h0_multilabel, predict_full_adaptation
from core.estimators.multidomain import fit_double_cme, fit_m0
from core.models.batch import SampleBatch
from core.models.kernels import KernelSet
from core.storage import ModelBundle, load_model, save_model
from core.storage import schema


@pytest.fixture
def stages(concept_batch: SampleBatch) -> tuple[SampleBatch, SampleBatch]:
    return concept_batch.split(0.5, seed=9)


# --- Round trips ---


def test_h0_round_trip_predicts_identically(
    tmp_path: Path, stages: tuple[SampleBatch, SampleBatch], concept_batch: SampleBatch, gaussian_kernels: KernelSet
) -> None:
    bridge = fit_h0(*stages, gaussian_kernels, 0.01, 0.001)
    loaded = load_model(save_model(tmp_path / "h0.bsm", ModelBundle([bridge])))
    (back,) = loaded.bridges
    assert back.kind == "h0"
    assert back.kernels == gaussian_kernels
    assert back.lambdas == bridge.lambdas
    target_cme = fit_cme_joint_wc_given_x(concept_batch, gaussian_kernels, 0.01)
    np.testing.assert_allclose(
        predict_full_adaptation(back, target_cme, concept_batch["X"]),
        predict_full_adaptation(bridge, target_cme, concept_batch["X"]),
        rtol=0.0,
        atol=1e-12,
    )
    assert back.summary() == bridge.summary()


def test_repeated_saves_are_byte_identical(
    tmp_path: Path, stages: tuple[SampleBatch, SampleBatch], gaussian_kernels: KernelSet
) -> None:
    bundle = ModelBundle([fit_h0(*stages, gaussian_kernels, 0.01, 0.001)])
    first = save_model(tmp_path / "a.bsm", bundle).read_bytes()
    second = save_model(tmp_path / "b.bsm", bundle).read_bytes()
    assert first == second


def test_multilabel_bundle_keeps_labels(
    tmp_path: Path, stages: tuple[SampleBatch, SampleBatch], gaussian_kernels: KernelSet
) -> None:
    stage1, stage2 = stages
    labelled = stage2.with_columns(Y=(stage2["Y"][:, 0] > np.median(stage2["Y"])).astype(float))
    bridges = fit_h0_multilabel(stage1, labelled, gaussian_kernels, 0.01, 0.001)
    loaded = load_model(save_model(tmp_path / "multi.bsm", ModelBundle(bridges)))
    assert [b.label for b in loaded.bridges] == [0.0, 1.0]
    for original, back in zip(bridges, loaded.bridges):
        np.testing.assert_array_equal(back.alpha, original.alpha)


def test_m0_round_trip(tmp_path: Path, multidomain_batch: SampleBatch, gaussian_kernels: KernelSet) -> None:
    bridge = fit_m0(*multidomain_batch.split(0.5, seed=1), gaussian_kernels, 0.01, 0.001)
    (back,) = load_model(save_model(tmp_path / "m0.bsm", ModelBundle([bridge]))).bridges
    assert back.kind == "m0"
    np.testing.assert_array_equal(back.u, bridge.u)
    np.testing.assert_array_equal(back.anchors_x, bridge.anchors_x)


def test_double_cme_is_refit_on_load(
    tmp_path: Path, stages: tuple[SampleBatch, SampleBatch], gaussian_kernels: KernelSet
) -> None:
    stage1, stage2 = stages
    bridge = fit_h0(stage1, stage2, gaussian_kernels, 0.01, 0.001)
    batches = (stage1.select("W", "X"), stage2.select("X", "C"))
    op = fit_double_cme(*batches, gaussian_kernels, 0.02, 0.002)
    loaded = load_model(save_model(tmp_path / "dc.bsm", ModelBundle([bridge], op, batches)))
    assert loaded.double_cme is not None
    assert loaded.double_cme.lambdas == (0.02, 0.002)
    np.testing.assert_allclose(loaded.double_cme.k_tilde, op.k_tilde, rtol=1e-12, atol=1e-15)


# --- Save errors ---


def test_save_needs_bridges(tmp_path: Path) -> None:
    with pytest.raises(DataError, match="no bridges"):
        save_model(tmp_path / "none.bsm", ModelBundle([]))


def test_double_cme_needs_batches(
    tmp_path: Path, stages: tuple[SampleBatch, SampleBatch], gaussian_kernels: KernelSet
) -> None:
    bridge = fit_h0(*stages, gaussian_kernels, 0.01, 0.001)
    op = fit_double_cme(stages[0], stages[1], gaussian_kernels, 0.01, 0.001)
    with pytest.raises(DataError, match="saved together with the batches"):
        save_model(tmp_path / "x.bsm", ModelBundle([bridge], op))


# --- Load errors ---


def test_missing_model_file(tmp_path: Path) -> None:
    with pytest.raises(ModelFileError, match="not found"):
        load_model(tmp_path / "absent.bsm")


def test_not_a_zip(tmp_path: Path) -> None:
    path = tmp_path / "junk.bsm"
    path.write_bytes(b"definitely not a zip")
    with pytest.raises(ModelFileError, match="bad zip container"):
        load_model(path)


def _zip_with_header(path: Path, header: object) -> Path:
    with zipfile.ZipFile(path, "w") as zf:
        zf.writestr(schema.ENTRY_HEADER, json.dumps(header))
    return path


def test_foreign_zip(tmp_path: Path) -> None:
    path = tmp_path / "foreign.bsm"
    with zipfile.ZipFile(path, "w") as zf:
        zf.writestr("readme.txt", "hello")
    with pytest.raises(ModelFileError, match="header.json missing"):
        load_model(path)


def test_wrong_format_tag(tmp_path: Path) -> None:
    path = _zip_with_header(tmp_path / "tag.bsm", {"format": "other", "format_version": 1})
    with pytest.raises(ModelFileError, match="not a BridgeShift model file"):
        load_model(path)


def test_unsupported_version(tmp_path: Path) -> None:
    path = _zip_with_header(tmp_path / "v2.bsm", {"format": schema.MODEL_FORMAT, "format_version": 2})
    with pytest.raises(ModelFileError, match="unsupported model file version 2"):
        load_model(path)


def test_missing_array_entry(
    tmp_path: Path, stages: tuple[SampleBatch, SampleBatch], gaussian_kernels: KernelSet
) -> None:
    source = save_model(tmp_path / "full.bsm", ModelBundle([fit_h0(*stages, gaussian_kernels, 0.01, 0.001)]))
    path = tmp_path / "partial.bsm"
    with zipfile.ZipFile(source) as src, zipfile.ZipFile(path, "w") as dst:
        for name in src.namelist():
            if name != schema.ENTRY_U:
                dst.writestr(name, src.read(name))
    with pytest.raises(ModelFileError, match="missing entry u.npy"):
        load_model(path)


def test_model_file_error_is_a_data_error() -> None:
    assert issubclass(ModelFileError, DataError)
