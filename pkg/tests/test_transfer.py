import numpy as np
import pytest

import segray as sg
from segray.errors import ConfigError


def small_grid(values, spacing=(1.0, 1.0, 1.0)):
    return sg.VolumeGrid(np.asarray(values, np.float32), spacing, (0, 0, 0))


@pytest.fixture
def grid100():
    v = np.zeros((2, 2, 2), np.float32)
    v[1, 1, 1] = 100.0
    return small_grid(v)


def hist_with(counts):
    counts = np.asarray(counts, np.int64)
    return sg.Histogram(len(counts), 0.0, 100.0, counts)


class TestPalette:
    def test_default_table_pinned(self, palette):
        M = sg.Material
        assert palette.color[int(M.BONE)].tolist() == [244 / 255, 214 / 255,
                                                       145 / 255]
        assert palette.color[int(M.MUSCLE)].tolist() == [255 / 255, 98 / 255,
                                                         56 / 255]
        assert palette.color[int(M.LIGAMENT)].tolist() == [170 / 255] * 3
        assert palette.color[int(M.TENDON)].tolist() == [1.0, 1.0, 1.0]
        assert palette.color[int(M.FAT)].tolist() == [177 / 255, 122 / 255,
                                                      101 / 255]
        assert palette.alpha.tolist() == [0.6, 1.0, 1.0, 1.0, 1.0]

    def test_override(self, palette):
        p2 = palette.override(sg.Material.BONE, color=(0.1, 0.2, 0.3),
                              alpha=0.5)
        assert p2.color[int(sg.Material.BONE)].tolist() == [0.1, 0.2, 0.3]
        assert p2.alpha[int(sg.Material.BONE)] == 0.5
        # original untouched
        assert palette.alpha[int(sg.Material.BONE)] == 1.0

    @pytest.mark.parametrize("kw", [
        dict(color=np.full((5, 3), 1.5)),
        dict(color=np.full((5, 3), -0.1)),
        dict(alpha=np.full(5, 2.0)),
        dict(alpha=np.full(5, np.nan)),
    ])
    def test_range_validation(self, kw):
        base = dict(color=np.full((5, 3), 0.5), alpha=np.full(5, 0.5))
        base.update(kw)
        with pytest.raises(ConfigError):
            sg.MaterialPalette(**base)


class TestStyleKind:
    def test_parse_forms(self):
        K = sg.StyleKind
        assert K.parse("interior") == K.INTERIOR
        assert K.parse("interior-emphasized") == K.INTERIOR
        assert K.parse("fat") == K.FAT_EMPHASIZED
        assert K.parse("Fat-Emphasized") == K.FAT_EMPHASIZED
        with pytest.raises(ConfigError):
            K.parse("bone")


class TestStyleParams:
    @pytest.mark.parametrize("a,b", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0),
                                     (np.nan, 1.0), (1.0, np.inf)])
    def test_rejects_bad_curve_params(self, a, b):
        with pytest.raises(ConfigError):
            sg.StyleParams(a=a, b=b)

    def test_missing_histogram_raises_on_use(self):
        with pytest.raises(ConfigError, match="histogram"):
            sg.StyleParams().fat_scale()

    def test_fat_scale_endpoints(self):
        p = sg.StyleParams(fat_hist=hist_with([2, 8, 0, 4]))
        assert p.fat_scale().tolist() == [0.25, 1.0, 0.0, 0.5]

    def test_empty_histogram_scale_zero(self):
        p = sg.StyleParams(fat_hist=hist_with([0, 0, 0]))
        assert p.fat_scale().tolist() == [0.0, 0.0, 0.0]

    def test_smoothing_triangular_renormalized(self):
        p = sg.StyleParams(fat_hist=hist_with([0, 4, 0, 0]), smooth=True)
        # convolve [0,4,0,0] with (1,2,1)/4 -> [1,2,1,0], peak 2
        assert p.fat_scale().tolist() == [0.5, 1.0, 0.5, 0.0]
        # the rho == rho_max endpoint still maps to exactly 1
        assert p.fat_scale().max() == 1.0


class TestEvalInterior:
    def test_bone_saturates_to_palette(self, grid100, palette):
        params = sg.StyleParams(a=2.0, b=1.0, fat_hist=hist_with([1]))
        c, a = sg.eval_interior(sg.Material.BONE, 80.0, grid100, params,
                                palette)
        assert c.tolist() == [244 / 255, 214 / 255, 145 / 255]
        assert a == 1.0

    def test_muscle_dark_at_zero(self, grid100, palette):
        params = sg.StyleParams(fat_hist=hist_with([1]))
        c, a = sg.eval_interior(sg.Material.MUSCLE, 0.0, grid100, params,
                                palette)
        assert c.tolist() == [0.0, 0.0, 0.0]
        assert a == 1.0

    def test_power_curve_midpoint(self, grid100, palette):
        params = sg.StyleParams(a=1.0, b=2.0, fat_hist=hist_with([1]))
        c, a = sg.eval_interior(sg.Material.LIGAMENT, 50.0, grid100, params,
                                palette)
        assert c == pytest.approx(np.array([170 / 255] * 3) * 0.25, rel=1e-15)
        assert a == 1.0

    def test_fat_modal_bin_full_palette(self, grid100, palette):
        params = sg.StyleParams(fat_hist=hist_with([1, 9, 3, 0]))
        # s = 30 falls in bin 1 of 4 over [0, 100]: rho = rho_max
        c, a = sg.eval_interior(sg.Material.FAT, 30.0, grid100, params,
                                palette)
        assert c.tolist() == [177 / 255, 122 / 255, 101 / 255]
        assert a == 0.6

    def test_fat_empty_bin_transparent(self, grid100, palette):
        params = sg.StyleParams(fat_hist=hist_with([1, 9, 3, 0]))
        c, a = sg.eval_interior(sg.Material.FAT, 90.0, grid100, params,
                                palette)
        assert c.tolist() == [0.0, 0.0, 0.0]
        assert a == 0.0

    def test_fat_alpha_scales_with_density(self, grid100, palette):
        params = sg.StyleParams(fat_hist=hist_with([5, 10, 0, 0]))
        c, a = sg.eval_interior(sg.Material.FAT, 10.0, grid100, params,
                                palette)
        assert a == pytest.approx(0.5 * 0.6, rel=1e-15)
        assert c == pytest.approx(np.array([177, 122, 101]) / 255 * 0.5,
                                  rel=1e-15)

    def test_fat_depends_only_on_bin_density(self, grid100, palette):
        params = sg.StyleParams(fat_hist=hist_with([4, 2, 2, 1]))
        # 30 and 49 share bin 1; 60 has the same count in bin 2
        r1 = sg.eval_interior(sg.Material.FAT, 30.0, grid100, params, palette)
        r2 = sg.eval_interior(sg.Material.FAT, 49.0, grid100, params, palette)
        r3 = sg.eval_interior(sg.Material.FAT, 60.0, grid100, params, palette)
        assert r1[0].tolist() == r2[0].tolist() == r3[0].tolist()
        assert r1[1] == r2[1] == r3[1]

    def test_monotone_in_s_for_non_fat(self, grid100, palette):
        params = sg.StyleParams(a=1.3, b=1.7, fat_hist=hist_with([1]))
        svals = np.linspace(0.0, 100.0, 40)
        prev = -1.0
        for s in svals:
            c, _ = sg.eval_interior(sg.Material.TENDON, float(s), grid100,
                                    params, palette)
            assert c[0] >= prev
            prev = c[0]

    def test_skin_rejected(self, grid100, palette):
        with pytest.raises(ConfigError):
            sg.eval_interior(sg.Material.SKIN, 1.0, grid100,
                             sg.StyleParams(fat_hist=hist_with([1])), palette)


class TestEvalFatEmphasized:
    def test_muscle_constant(self, grid100, palette):
        params = sg.StyleParams()
        for s in (0.0, 13.7, 100.0):
            c, a = sg.eval_fat_emphasized(sg.Material.MUSCLE, s, grid100,
                                          params, palette)
            assert c.tolist() == [255 / 255, 98 / 255, 56 / 255]
            assert a == 1.0

    def test_tendon_constant(self, grid100, palette):
        params = sg.StyleParams()
        seen = {tuple(sg.eval_fat_emphasized(sg.Material.TENDON, s, grid100,
                                             params, palette)[0])
                for s in np.linspace(0, 100, 17)}
        assert seen == {(1.0, 1.0, 1.0)}

    def test_fat_zero_dark(self, grid100, palette):
        c, a = sg.eval_fat_emphasized(sg.Material.FAT, 0.0, grid100,
                                      sg.StyleParams(), palette)
        assert c.tolist() == [0.0, 0.0, 0.0]
        assert a == 0.6

    def test_fat_power_curve_saturates(self, grid100, palette):
        c, a = sg.eval_fat_emphasized(sg.Material.FAT, 100.0, grid100,
                                      sg.StyleParams(a=2.0, b=1.0), palette)
        assert c.tolist() == [177 / 255, 122 / 255, 101 / 255]
        assert a == 0.6

    def test_no_histogram_needed(self, grid100, palette):
        c, a = sg.eval_fat_emphasized(sg.Material.FAT, 42.0, grid100,
                                      sg.StyleParams(), palette)
        assert np.isfinite(c).all()


class TestRangeSafety:
    def test_all_outputs_in_unit_range(self, grid100, palette, rng):
        hist = hist_with(rng.integers(0, 50, size=16))
        for _ in range(300):
            mat = sg.Material(int(rng.integers(0, 5)))
            s = float(rng.random() * 100.0)
            a_p = float(rng.random() * 4 + 0.01)
            b_p = float(rng.random() * 3 + 0.01)
            params = sg.StyleParams(a=a_p, b=b_p, fat_hist=hist)
            for fn in (sg.eval_interior, sg.eval_fat_emphasized):
                c, al = fn(mat, s, grid100, params, palette)
                assert (c >= 0).all() and (c <= 1).all()
                assert 0.0 <= al <= 1.0
