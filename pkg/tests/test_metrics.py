"""PSNR/SSIM/color-difference/angular metrics and report plumbing."""

import csv
import json

import numpy as np
import pytest

from nightsynth import Illuminant, angular_error, delta_e, psnr, ssim
from nightsynth.metrics import (
    PSNR_CAP_DB,
    EvalRow,
    MetricsReport,
    ciede2000,
    srgb_to_lab,
    write_report,
)

from conftest import gray_for_lstar, make_raw
from oracles import delta_e76_reference, ssim_reference


class TestPsnr:
    def test_identical_images_hit_cap(self, rng):
        img = rng.integers(0, 256, (8, 8, 3), dtype=np.uint8)
        assert psnr(img, img) == PSNR_CAP_DB == 100.0

    def test_uniform_unit_error(self):
        a = np.full((16, 16, 3), 100, dtype=np.uint8)
        b = a + 1
        assert psnr(a, b) == pytest.approx(10 * np.log10(255**2), abs=1e-3)

    def test_checkerboard_vs_black(self):
        a = np.zeros((16, 16, 3), dtype=np.uint8)
        a[::2, ::2] = 255
        a[1::2, 1::2] = 255
        b = np.zeros_like(a)
        assert psnr(a, b) == pytest.approx(10 * np.log10(2), abs=1e-3)

    def test_symmetric(self, rng):
        a = rng.integers(0, 256, (8, 8, 3), dtype=np.uint8)
        b = rng.integers(0, 256, (8, 8, 3), dtype=np.uint8)
        assert psnr(a, b) == psnr(b, a)

    def test_dimension_mismatch_rejected(self, rng):
        a = rng.integers(0, 256, (8, 8, 3), dtype=np.uint8)
        b = rng.integers(0, 256, (8, 10, 3), dtype=np.uint8)
        with pytest.raises(ValueError):
            psnr(a, b)


class TestSsim:
    def test_identical_images_score_one(self, rng):
        img = rng.integers(0, 256, (32, 32, 3), dtype=np.uint8)
        assert ssim(img, img) == pytest.approx(1.0, abs=1e-12)

    def test_inversion_scores_negative(self, rng):
        img = rng.integers(0, 100, (24, 24, 3), dtype=np.uint8)
        inverted = (255 - img).astype(np.uint8)
        assert ssim(img, inverted) < 0

    def test_matches_direct_window_oracle(self, rng):
        for _ in range(5):
            a = rng.integers(0, 256, (20, 24, 3), dtype=np.uint8)
            b = rng.integers(0, 256, (20, 24, 3), dtype=np.uint8)
            assert ssim(a, b) == pytest.approx(ssim_reference(a, b), abs=1e-8)

    def test_symmetric(self, rng):
        a = rng.integers(0, 256, (16, 16, 3), dtype=np.uint8)
        b = rng.integers(0, 256, (16, 16, 3), dtype=np.uint8)
        assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)

    def test_too_small_rejected(self, rng):
        img = rng.integers(0, 256, (8, 8, 3), dtype=np.uint8)
        with pytest.raises(ValueError):
            ssim(img, img)


class TestDeltaE:
    def test_identical_is_zero(self, rng):
        img = rng.integers(0, 256, (8, 8, 3), dtype=np.uint8)
        assert delta_e(img, img) == 0.0

    def test_pure_lightness_shift(self):
        a = np.full((4, 4, 3), gray_for_lstar(50.0))
        b = np.full((4, 4, 3), gray_for_lstar(55.0))
        assert delta_e(a, b) == pytest.approx(5.0, abs=1e-3)

    def test_matches_per_pixel_oracle(self, rng):
        a = rng.integers(0, 256, (4, 5, 3), dtype=np.uint8)
        b = rng.integers(0, 256, (4, 5, 3), dtype=np.uint8)
        assert delta_e(a, b) == pytest.approx(delta_e76_reference(a, b), abs=1e-6)

    def test_symmetric(self, rng):
        a = rng.integers(0, 256, (6, 6, 3), dtype=np.uint8)
        b = rng.integers(0, 256, (6, 6, 3), dtype=np.uint8)
        assert delta_e(a, b) == pytest.approx(delta_e(b, a), abs=1e-12)

    def test_unknown_formula_rejected(self, rng):
        img = rng.integers(0, 256, (4, 4, 3), dtype=np.uint8)
        with pytest.raises(ValueError):
            delta_e(img, img, formula="cie94")

    def test_ciede2000_variant_runs(self, rng):
        a = rng.integers(0, 256, (6, 6, 3), dtype=np.uint8)
        assert delta_e(a, a, formula="ciede2000") == 0.0


# Published CIEDE2000 verification pairs (Lab1, Lab2, expected dE00),
# covering the discontinuity and hue-wrap branches of the formula.
SHARMA_PAIRS = [
    ((50.0000, 2.6772, -79.7751), (50.0000, 0.0000, -82.7485), 2.0425),
    ((50.0000, 3.1571, -77.2803), (50.0000, 0.0000, -82.7485), 2.8615),
    ((50.0000, 2.8361, -74.0200), (50.0000, 0.0000, -82.7485), 3.4412),
    ((50.0000, -1.3802, -84.2814), (50.0000, 0.0000, -82.7485), 1.0000),
    ((50.0000, -1.1848, -84.8006), (50.0000, 0.0000, -82.7485), 1.0000),
    ((50.0000, -0.9009, -85.5211), (50.0000, 0.0000, -82.7485), 1.0000),
    ((50.0000, 0.0000, 0.0000), (50.0000, -1.0000, 2.0000), 2.3669),
    ((50.0000, -1.0000, 2.0000), (50.0000, 0.0000, 0.0000), 2.3669),
    ((50.0000, 2.4900, -0.0010), (50.0000, -2.4900, 0.0009), 7.1792),
    ((50.0000, 2.4900, -0.0010), (50.0000, -2.4900, 0.0010), 7.1792),
    ((50.0000, 2.4900, -0.0010), (50.0000, -2.4900, 0.0011), 7.2195),
    ((50.0000, 2.4900, -0.0010), (50.0000, -2.4900, 0.0012), 7.2195),
    ((50.0000, -0.0010, 2.4900), (50.0000, 0.0009, -2.4900), 4.8045),
    ((50.0000, -0.0010, 2.4900), (50.0000, 0.0010, -2.4900), 4.8045),
    ((50.0000, -0.0010, 2.4900), (50.0000, 0.0011, -2.4900), 4.7461),
    ((50.0000, 2.5000, 0.0000), (50.0000, 0.0000, -2.5000), 4.3065),
    ((50.0000, 2.5000, 0.0000), (73.0000, 25.0000, -18.0000), 27.1492),
    ((50.0000, 2.5000, 0.0000), (61.0000, -5.0000, 29.0000), 22.8977),
    ((50.0000, 2.5000, 0.0000), (56.0000, -27.0000, -3.0000), 31.9030),
    ((50.0000, 2.5000, 0.0000), (58.0000, 24.0000, 15.0000), 19.4535),
    ((50.0000, 2.5000, 0.0000), (50.0000, 3.1736, 0.5854), 1.0000),
    ((50.0000, 2.5000, 0.0000), (50.0000, 3.2972, 0.0000), 1.0000),
    ((50.0000, 2.5000, 0.0000), (50.0000, 1.8634, 0.5757), 1.0000),
    ((50.0000, 2.5000, 0.0000), (50.0000, 3.2592, 0.3350), 1.0000),
    ((60.2574, -34.0099, 36.2677), (60.4626, -34.1751, 39.4387), 1.2644),
    ((63.0109, -31.0961, -5.8663), (62.8187, -29.7946, -4.0864), 1.2630),
    ((61.2901, 3.7196, -5.3901), (61.4292, 2.2480, -4.9620), 1.8731),
    ((35.0831, -44.1164, 3.7933), (35.0232, -40.0716, 1.5901), 1.8645),
    ((22.7233, 20.0904, -46.6940), (23.0331, 14.9730, -42.5619), 2.0373),
    ((36.4612, 47.8580, 18.3852), (36.2715, 50.5065, 21.2231), 1.4146),
    ((90.8027, -2.0831, 1.4410), (91.1528, -1.6435, 0.0447), 1.4441),
    ((90.9257, -0.5406, -0.9208), (88.6381, -0.8985, -0.7239), 1.5381),
    ((6.7747, -0.2908, -2.4247), (5.8714, -0.0985, -2.2286), 0.6377),
    ((2.0776, 0.0795, -1.1350), (0.9033, -0.0636, -0.5514), 0.9082),
]


def test_ciede2000_against_published_pairs():
    lab1 = np.array([p[0] for p in SHARMA_PAIRS])
    lab2 = np.array([p[1] for p in SHARMA_PAIRS])
    expected = np.array([p[2] for p in SHARMA_PAIRS])
    got = ciede2000(lab1, lab2)
    np.testing.assert_allclose(got, expected, atol=1e-4)


def test_ciede2000_symmetric(rng):
    lab1 = np.column_stack(
        [rng.uniform(0, 100, 50), rng.uniform(-60, 60, 50), rng.uniform(-60, 60, 50)]
    )
    lab2 = np.column_stack(
        [rng.uniform(0, 100, 50), rng.uniform(-60, 60, 50), rng.uniform(-60, 60, 50)]
    )
    np.testing.assert_allclose(ciede2000(lab1, lab2), ciede2000(lab2, lab1), atol=1e-12)


class TestSrgbToLab:
    def test_white_is_lab_white(self):
        img = np.full((1, 1, 3), 255, dtype=np.uint8)
        lab = srgb_to_lab(img)[0, 0]
        assert lab[0] == pytest.approx(100.0, abs=1e-6)
        assert lab[1] == pytest.approx(0.0, abs=1e-6)
        assert lab[2] == pytest.approx(0.0, abs=1e-6)

    def test_black_is_lab_origin(self):
        img = np.zeros((1, 1, 3), dtype=np.uint8)
        lab = srgb_to_lab(img)[0, 0]
        np.testing.assert_allclose(lab, [0.0, 0.0, 0.0], atol=1e-6)

    def test_grays_have_zero_chroma(self):
        for v in (10, 100, 200):
            lab = srgb_to_lab(np.full((1, 1, 3), v, dtype=np.uint8))[0, 0]
            assert abs(lab[1]) < 1e-8
            assert abs(lab[2]) < 1e-8


class TestAngularError:
    def test_identical_vectors(self):
        assert angular_error(Illuminant(0.5, 1.0, 0.3), Illuminant(0.5, 1.0, 0.3)) == 0.0

    def test_closed_form_example(self):
        assert angular_error((1, 1, 1), (1, 1, 0)) == pytest.approx(
            np.degrees(np.arccos(2 / np.sqrt(6))), abs=1e-3
        )

    def test_scale_invariance(self):
        w = (0.4, 1.0, 0.7)
        scaled = tuple(3.7 * v for v in w)
        assert angular_error(w, scaled) == pytest.approx(0.0, abs=1e-6)

    def test_symmetric(self, rng):
        a = tuple(rng.uniform(0.1, 1, 3))
        b = tuple(rng.uniform(0.1, 1, 3))
        assert angular_error(a, b) == pytest.approx(angular_error(b, a), abs=1e-12)

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            angular_error((0, 0, 0), (1, 1, 1))


class TestReports:
    def _report(self):
        rows = [
            EvalRow(name="a.png", psnr_db=40.0, ssim=0.9, delta_e=2.0, angular_error_deg=1.0),
            EvalRow(name="b.png", psnr_db=30.0, ssim=0.7, delta_e=4.0, angular_error_deg=None),
        ]
        return MetricsReport(rows=rows, skipped=[{"name": "c.png", "reason": "missing"}])

    def test_aggregate_is_mean_of_rows(self):
        agg = self._report().aggregate()
        assert agg["psnr_db"] == pytest.approx(35.0)
        assert agg["ssim"] == pytest.approx(0.8)
        assert agg["delta_e"] == pytest.approx(3.0)
        assert agg["angular_error_deg"] == pytest.approx(1.0)  # None rows excluded
        assert agg["count"] == 2
        assert agg["skipped"] == 1

    def test_json_report(self, tmp_path):
        write_report(self._report(), tmp_path / "report.json", tmp_path / "report.csv")
        payload = json.loads((tmp_path / "report.json").read_text())
        assert {r["name"] for r in payload["rows"]} == {"a.png", "b.png"}
        assert payload["skipped"][0]["reason"] == "missing"
        assert payload["aggregate"]["psnr_db"] == pytest.approx(35.0)

    def test_csv_report(self, tmp_path):
        write_report(self._report(), tmp_path / "report.json", tmp_path / "report.csv")
        with open(tmp_path / "report.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["name", "psnr_db", "ssim", "delta_e", "angular_error_deg"]
        assert len(rows) == 4  # header + 2 rows + aggregate
        assert rows[-1][0] == "aggregate"
        assert float(rows[-1][1]) == pytest.approx(35.0)

    def test_empty_report_aggregate(self):
        agg = MetricsReport().aggregate()
        assert agg["count"] == 0
        assert agg["psnr_db"] is None
