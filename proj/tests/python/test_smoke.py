import numpy as np
import pytest

import wavecor


def test_version():
    assert wavecor.__version__ == "0.3.0"


def test_wavelet_round_trip():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((2, 3, 8, 6, 4)).astype(np.float32)
    s = wavecor.dwt3(x)
    assert s.shape == (2, 3, 8, 4, 3, 2)
    assert np.max(np.abs(wavecor.iwt3(s) - x)) <= 1e-6
    assert np.isclose(np.sum(s.astype(np.float64) ** 2), np.sum(x.astype(np.float64) ** 2), rtol=1e-5)


def test_odd_dims_raise():
    with pytest.raises(wavecor.DimensionError):
        wavecor.dwt3(np.zeros((1, 1, 3, 4, 4), dtype=np.float32))


def test_phantom_and_metrics():
    image, vessel, myo = wavecor.generate_phantom(seed=4, dims=(32, 32, 32))
    assert image.shape == vessel.shape == myo.shape == (32, 32, 32)
    assert vessel.sum() > 0
    assert not np.any(vessel & myo)
    again = wavecor.generate_phantom(seed=4, dims=(32, 32, 32))
    assert np.array_equal(again[0], image)

    m = wavecor.metrics(vessel, vessel)
    assert m["dsc"] == 1.0 and m["hd95_mm"] == 0.0
    empty = np.zeros_like(vessel)
    assert wavecor.metrics(empty, vessel)["hd95_mm"] is None

    prior = wavecor.build_prior(myo, 2)
    assert prior.sum() > 0


def test_volume_io(tmp_path):
    data = np.arange(24, dtype=np.float32).reshape(2, 3, 4)
    path = str(tmp_path / "v.svol")
    wavecor.write_volume(path, data, (0.5, 1.0, 2.0))
    back, spacing = wavecor.read_volume(path)
    assert np.array_equal(back, data)
    assert spacing == (0.5, 1.0, 2.0)
    raw = bytearray(open(path, "rb").read())
    raw[0] = ord("X")
    open(path, "wb").write(bytes(raw))
    with pytest.raises(wavecor.FormatError):
        wavecor.read_volume(path)


def test_variants():
    names = wavecor.variant_names()
    assert names == ["Baseline", "E1", "E2", "E3", "E4", "Full"]
    counts = {n: wavecor.parameter_count(n, 4, 2) for n in names}
    assert counts["Baseline"] == min(counts.values())
    assert counts["Full"] == max(counts.values())


def test_cli_train_and_predict(tmp_path):
    data, run = str(tmp_path / "data"), str(tmp_path / "run")
    code, out, _ = wavecor.run_cli(["phantom-gen", "--n", "10", "--dims", "32", "--seed", "2", "--out", data])
    assert code == 0 and "seed: 2" in out
    code, _, err = wavecor.run_cli(["train", "--data", data + "/manifest.json", "--out", run, "--epochs", "1",
                                    "--base-width", "4", "--scales", "2", "--patch", "16", "--overlap", "4"])
    assert code == 0, err
    image, _ = wavecor.read_volume(data + "/case_009_image.svol")
    myo, _ = wavecor.read_volume(data + "/case_009_myo.svol")
    mask = wavecor.predict(run + "/checkpoint.ckpt", image, myo, patch=(16, 16, 16), overlap=4)
    assert mask.shape == image.shape and mask.dtype == np.uint8
    assert wavecor.run_cli(["wavelet-check", "--dims", "15"])[0] == 2
