"""saliency-sdsp: priors, the combined map, CCR, and map files."""

import numpy as np
import pytest

from stqp.saliency import (
    CcrMap,
    SaliencyMap,
    SdspConfig,
    ccr_from_saliency,
    color_prior,
    frequency_prior,
    location_prior,
    log_gabor_transfer,
    minmax_normalize,
    read_map_file,
    sdsp,
    write_map_file,
    write_pgm,
)
from stqp.video import LabFrame, VideoGeometry

from conftest import make_frame
from oracles import circular_convolve2d


CFG = SdspConfig()


def lab_from_planes(l, a=None, b=None) -> LabFrame:
    l = np.asarray(l, dtype=np.float64)
    zero = np.zeros_like(l)
    return LabFrame(l, zero if a is None else np.asarray(a, float),
                    zero if b is None else np.asarray(b, float))


class TestFrequencyPrior:
    def test_constant_input_all_zero(self):
        lab = lab_from_planes(np.full((64, 64), 50.0))
        assert np.array_equal(frequency_prior(lab, CFG), np.zeros((64, 64)))

    def test_impulse_peaks_at_impulse(self):
        l = np.zeros((64, 64))
        l[40, 22] = 100.0
        prior = frequency_prior(lab_from_planes(l), CFG)
        peak = np.unravel_index(np.argmax(prior), prior.shape)
        assert abs(peak[0] - 40) <= 3 and abs(peak[1] - 22) <= 3

    def test_matches_spatial_convolution_oracle(self, rng):
        # convolution theorem: multiplying by G in frequency space equals
        # circular convolution with G's inverse transform
        transfer = log_gabor_transfer((64, 64), CFG.omega0, CFG.sigma_f)
        kernel = np.real(np.fft.ifft2(transfer))
        for _ in range(3):
            img = rng.random((64, 64)) * 100.0
            fft_path = np.real(np.fft.ifft2(np.fft.fft2(img) * transfer))
            spatial = circular_convolve2d(img, kernel)
            assert np.abs(fft_path - spatial).max() <= 1e-6

    def test_range_and_attained_bounds(self, rng):
        lab = lab_from_planes(rng.random((64, 64)) * 100.0)
        prior = frequency_prior(lab, CFG)
        assert prior.min() == 0.0 and prior.max() == 1.0


class TestColorPrior:
    def test_red_patch_is_maximal(self):
        frame = make_frame(64, 64, patches=[(20, 24, 12, 12, (1.0, 0.0, 0.0))])
        geo = VideoGeometry(width=64, height=64)
        from stqp.video import yuv_to_lab

        prior = color_prior(yuv_to_lab(frame, geo), CFG)
        peak = np.unravel_index(np.argmax(prior), prior.shape)
        assert 24 <= peak[0] < 36 and 20 <= peak[1] < 32
        inside = prior[24:36, 20:32]
        assert inside.min() >= prior.max() - 1e-9

    def test_achromatic_all_zero(self):
        lab = lab_from_planes(
            np.linspace(0, 100, 64 * 64).reshape(64, 64),
            np.full((64, 64), 7.0),
            np.full((64, 64), -3.0),
        )
        assert np.array_equal(color_prior(lab, CFG), np.zeros((64, 64)))

    def test_monotone_in_warmth(self):
        a = np.array([[0.0, 30.0]])
        b = np.array([[0.0, 30.0]])
        prior = color_prior(lab_from_planes(np.zeros((1, 2)), a, b), CFG)
        assert prior[0, 1] > prior[0, 0]


class TestLocationPrior:
    def test_center_is_one(self):
        prior = location_prior((256, 256), CFG)
        assert prior[128, 128] == 1.0

    def test_corner_value(self):
        prior = location_prior((256, 256), CFG)
        # exp(-(128^2 + 128^2) / 114^2)
        assert prior[0, 0] == pytest.approx(0.0804, abs=2e-4)

    def test_four_fold_symmetry(self):
        # flips are exact for odd dims, where the center pixel is unique
        prior = location_prior((33, 33), SdspConfig(sigma_d=10.0))
        assert np.allclose(prior, prior[::-1, :])
        assert np.allclose(prior, prior[:, ::-1])
        assert np.allclose(prior, prior.T)


class TestSdsp:
    GEO = VideoGeometry(width=256, height=256)
    SMALL = SdspConfig(working_resolution=64)

    def test_constant_frame_all_zero(self):
        frame = make_frame(256, 256, rgb_bg=(0.5, 0.5, 0.5))
        result = sdsp(frame, self.GEO, self.SMALL)
        assert np.array_equal(result.values, np.zeros((64, 64)))

    def test_red_square_argmax_inside_square(self):
        frame = make_frame(256, 256, patches=[(96, 96, 64, 64, (1.0, 0.0, 0.0))])
        cfg = SdspConfig(working_resolution=256)
        result = sdsp(frame, self.GEO, cfg)
        py, px = np.unravel_index(np.argmax(result.values), result.values.shape)
        assert 96 <= py < 160 and 96 <= px < 160

    def test_translation_equivariance_without_center_bias(self):
        # the argmax must track the square as it moves off-center
        cfg = SdspConfig(working_resolution=256, include_location_prior=False)
        centered = make_frame(256, 256, patches=[(96, 96, 48, 48, (1.0, 0.0, 0.0))])
        shifted = make_frame(256, 256, patches=[(156, 136, 48, 48, (1.0, 0.0, 0.0))])
        a = sdsp(centered, self.GEO, cfg).values
        b = sdsp(shifted, self.GEO, cfg).values
        ay, ax = np.unravel_index(np.argmax(a), a.shape)
        by, bx = np.unravel_index(np.argmax(b), b.shape)
        assert abs((by - ay) - 40) <= 3
        assert abs((bx - ax) - 60) <= 3

    def test_output_normalized(self):
        frame = make_frame(256, 256, patches=[(30, 40, 50, 60, (0.9, 0.2, 0.1))])
        result = sdsp(frame, self.GEO, self.SMALL)
        assert result.values.min() == 0.0
        assert result.values.max() == 1.0

    def test_deterministic(self):
        frame = make_frame(64, 64, patches=[(10, 10, 20, 20, (0.8, 0.1, 0.3))])
        geo = VideoGeometry(width=64, height=64)
        a = sdsp(frame, geo, self.SMALL)
        b = sdsp(frame, geo, self.SMALL)
        assert np.array_equal(a.values, b.values)


class TestCcr:
    def test_complement(self):
        values = np.array([[0.0, 0.3], [1.0, 0.25]])
        ccr = ccr_from_saliency(SaliencyMap(values, 0))
        assert np.allclose(ccr.values, 1.0 - values)

    def test_involution(self, rng):
        values = rng.random((16, 16))
        twice = ccr_from_saliency(ccr_from_saliency(SaliencyMap(values, 0)))
        assert np.allclose(twice.values, values)

    def test_all_zero_saliency_gives_all_one(self):
        ccr = ccr_from_saliency(SaliencyMap(np.zeros((8, 8)), 0))
        assert np.array_equal(ccr.values, np.ones((8, 8)))


class TestMinmax:
    def test_degenerate_constant(self):
        assert np.array_equal(minmax_normalize(np.full((4, 4), 3.3)), np.zeros((4, 4)))

    def test_attains_bounds(self, rng):
        out = minmax_normalize(rng.random((8, 8)) * 7 - 3)
        assert out.min() == 0.0 and out.max() == 1.0


class TestMapFiles:
    def test_packed_round_trip(self, tmp_path, rng):
        maps = [SaliencyMap(rng.random((24, 32)), i) for i in range(5)]
        path = tmp_path / "maps.bin"
        write_map_file(maps, path)
        back = read_map_file(path)
        assert len(back) == 5
        for m, b in zip(maps, back):
            assert np.abs(m.values - b).max() < 1e-6  # float32 storage

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "maps.bin"
        path.write_bytes(b"NOTAMAP!" + b"\0" * 16)
        with pytest.raises(ValueError, match="magic"):
            read_map_file(path)

    def test_pgm_header_and_payload(self, tmp_path):
        path = tmp_path / "m.pgm"
        write_pgm(np.array([[0.0, 0.5], [1.0, 0.25]]), path)
        raw = path.read_bytes()
        assert raw.startswith(b"P5\n2 2\n255\n")
        assert raw[-4:] == bytes([0, 128, 255, 64])


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(working_resolution=16),
            dict(omega0=0.6),
            dict(omega0=0.0),
            dict(sigma_f=0.0),
            dict(sigma_c=-1.0),
            dict(sigma_d=0.0),
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            SdspConfig(**kwargs)
