import numpy as np
import pytest

import replaydet as rd


def test_bonafide_clip_shape_and_determinism():
    a = rd.generate_bonafide(3, 1.5)
    assert a.shape == (24000,)
    assert a.dtype == np.float64
    np.testing.assert_array_equal(a, rd.generate_bonafide(3, 1.5))


def test_wav_roundtrip(tmp_path):
    x = rd.generate_bonafide(1, 1.0)
    rd.save_wav(x, tmp_path / "a.wav")
    y = rd.load_wav(tmp_path / "a.wav")
    assert np.max(np.abs(x - y)) <= 1.0 / 32768


def test_codec_keeps_length_and_drops_high_band_at_8k():
    rng = np.random.default_rng(0)
    noise = 0.1 * rng.standard_normal(32000)
    out = rd.codec_roundtrip(noise, 8000)
    assert out.shape == noise.shape
    spec_in = np.abs(np.fft.rfft(noise)) ** 2
    spec_out = np.abs(np.fft.rfft(out)) ** 2
    high = np.fft.rfftfreq(noise.size, 1 / rd.SAMPLE_RATE) >= 4000
    assert 10 * np.log10(spec_out[high].sum() / spec_in[high].sum()) <= -30


def test_features_are_512_dim_and_replay_raises_the_norm():
    clean, replayed = [], []
    for i in range(5):
        x = rd.generate_bonafide(500 + i, 1.0)
        clean.append(np.linalg.norm(rd.extract_features(x)))
        replayed.append(np.linalg.norm(rd.extract_features(rd.replay(x, 900 + i))))
    assert rd.extract_features(rd.generate_bonafide(1, 1.0)).shape == (512,)
    assert np.mean(replayed) > np.mean(clean)


def test_eer_examples():
    assert rd.compute_eer([5, 6, 7], [1, 2, 3])[0] == 0.0
    eer, threshold = rd.compute_eer([3, 2, 1, 0], [2.5, 1.5, 0.5, -0.5])
    assert eer == 0.5 and threshold == 1.5


def test_errors_carry_their_code():
    with pytest.raises(rd.ReplayDetError) as info:
        rd.compute_eer([1.0], [])
    assert info.value.code == "SingleClassInput"
    with pytest.raises(rd.ReplayDetError) as info:
        rd.Config.parse("nosuch.key=1\n")
    assert info.value.code == "Config"


def test_config_defaults_and_overrides():
    c = rd.Config()
    assert c["spectrogram.fft"] == "1024"
    assert c["pca_energy"] == "0.98"
    c["codec.bitrate_bps"] = "8000"
    assert rd.Config.parse(c.to_text())["codec.bitrate_bps"] == "8000"
    assert "ocsvm.nu" in rd.Config.keys()


def test_end_to_end_pipeline(tmp_path):
    corpus = rd.build_corpus(tmp_path / "corpus", 16, 16, seed=2)
    c = rd.Config()
    c["paths.train_manifest"] = str(corpus["train_manifest"])
    c["paths.eval_manifest"] = str(corpus["eval_manifest"])
    work = tmp_path / "work"
    stats = rd.extract(c, work)
    assert stats["train"]["features"] == 16
    assert stats["eval"]["features"] == 16
    info = rd.train(c, work, work / "model.rdmd")
    assert info["kind"] == "ocsvm" and info["converged"]
    scores = rd.score(c, work, work / "model.rdmd", work / "scores.txt")
    assert len(scores) == 16
    result = rd.evaluate(work / "scores.txt", corpus["eval_keys"])
    assert result["bonafide"] == 8 and result["spoof"] == 8
    assert result["eer"] < 0.5
    again = rd.extract(c, work)
    assert again["train"]["cache_hits"] == 16
