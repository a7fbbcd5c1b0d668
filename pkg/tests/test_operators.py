"""Operator, JVP, and second-derivative tests, including the FD oracles."""

import numpy as np
import pytest

from ieda import (
    Disc,
    Field,
    Grid,
    PdeKind,
    PdeSpec,
    apply_F,
    apply_F2,
    apply_JVP,
    max_norm,
    rel_l2,
    velocity_from_vorticity,
    sp_derivative,
    workspace_for,
)


def band_limited(grid, rng, kmax=4):
    ws = workspace_for(grid)
    coeff = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    keep = np.ones(grid.shape, bool)
    for f in ws.freq_axes:
        keep &= np.abs(f) <= kmax
    out = np.fft.ifftn(np.where(keep, coeff, 0)).real
    return Field(grid, out / np.max(np.abs(out)))


ALL_SPECS = [
    PdeSpec.heat(Disc.FINITE_DIFFERENCE),
    PdeSpec.heat(Disc.PSEUDO_SPECTRAL),
    PdeSpec.burgers(0.1, Disc.FINITE_DIFFERENCE),
    PdeSpec.burgers(0.1, Disc.PSEUDO_SPECTRAL),
    PdeSpec.allen_cahn(0.05, Disc.FINITE_DIFFERENCE),
    PdeSpec.allen_cahn(0.05, Disc.PSEUDO_SPECTRAL),
    PdeSpec.navier_stokes(0.001, disc=Disc.FINITE_DIFFERENCE),
    PdeSpec.navier_stokes(0.001, disc=Disc.PSEUDO_SPECTRAL),
]


def _ids(spec):
    return f"{spec.kind.value}-{spec.disc.value}"


def grid_for(spec, n1=128, n2=64):
    return Grid(dim=spec.dim, n=n1 if spec.dim == 1 else n2)


class TestPdeSpec:
    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            PdeSpec.burgers(nu=-1.0)
        with pytest.raises(ValueError):
            PdeSpec.allen_cahn(epsilon=1.5)
        with pytest.raises(ValueError):
            PdeSpec(PdeKind.NAVIER_STOKES_2D)  # missing nu
        with pytest.raises(ValueError):
            PdeSpec(PdeKind.HEAT_1D, forcing=Field(Grid(2, 16), np.zeros((16, 16))))

    def test_kind_determines_dim(self):
        assert PdeSpec.heat().dim == 1
        assert PdeSpec.allen_cahn(0.05).dim == 2

    def test_dimension_mismatch_rejected(self):
        spec = PdeSpec.heat()
        f2d = Field(Grid(2, 16), np.zeros((16, 16)))
        with pytest.raises(ValueError):
            apply_F(spec, f2d)


class TestApplyF:
    def test_heat_eigenfunction(self):
        g = Grid(1, 128)
        (x,) = g.coords()
        f = Field(g, np.sin(2 * np.pi * x))
        out = apply_F(PdeSpec.heat(Disc.PSEUDO_SPECTRAL), f)
        np.testing.assert_allclose(out.values, -4 * np.pi**2 * f.values, atol=1e-9)

    def test_allen_cahn_fixed_point(self):
        g = Grid(2, 32)
        one = Field(g, np.ones(g.shape))
        for disc in Disc:
            out = apply_F(PdeSpec.allen_cahn(0.05, disc), one)
            np.testing.assert_allclose(out.values, 0.0, atol=1e-12)

    def test_ns_taylor_green_advection_cancels(self):
        # For w = sin(2 pi x) sin(2 pi y) the recovered velocity is parallel
        # to the vorticity contours, so only the diffusion term survives.
        g = Grid(2, 64)
        x, y = g.coords()
        w = Field(g, np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y))
        nu = 0.01
        zero = Field(g, np.zeros(g.shape))
        out = apply_F(PdeSpec.navier_stokes(nu, forcing=zero), w)
        np.testing.assert_allclose(out.values, -8 * np.pi**2 * nu * w.values, atol=1e-10)

    def test_ns_default_forcing_applied(self):
        g = Grid(2, 32)
        x, y = g.coords()
        w = Field(g, np.zeros(g.shape))
        out = apply_F(PdeSpec.navier_stokes(0.001), w)
        expected = 0.1 * (np.sin(2 * np.pi * (x + y)) + np.cos(2 * np.pi * (x + y)))
        np.testing.assert_allclose(out.values, np.broadcast_to(expected, g.shape),
                                   atol=1e-12)

    def test_ns_galilean_mean_invariance(self):
        # Values quantized to 2**-20 with an exactly representable shift make
        # the internal mean removal reproduce the unshifted input bit for bit.
        g = Grid(2, 32)
        rng = np.random.default_rng(9)
        base = band_limited(g, rng, kmax=6).values
        quant = np.round(base * 2**20) / 2**20
        quant -= quant.mean()
        w = Field(g, quant)
        w_shifted = Field(g, quant + 0.5)
        spec = PdeSpec.navier_stokes(0.001)
        a = apply_F(spec, w)
        b = apply_F(spec, w_shifted)
        assert np.array_equal(a.values, b.values)


class TestVelocityFromVorticity:
    def test_eigenfunction_solution(self):
        g = Grid(2, 64)
        x, y = g.coords()
        w = Field(g, np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y))
        vel = velocity_from_vorticity(w)
        np.testing.assert_allclose(
            vel.u.values, np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y) / (4 * np.pi),
            atol=1e-12,
        )
        np.testing.assert_allclose(
            vel.v.values, -np.cos(2 * np.pi * x) * np.sin(2 * np.pi * y) / (4 * np.pi),
            atol=1e-12,
        )

    def test_zero_vorticity(self):
        g = Grid(2, 32)
        vel = velocity_from_vorticity(Field(g, np.zeros(g.shape)))
        assert max_norm(vel.u) == 0.0 and max_norm(vel.v) == 0.0

    def test_round_trip_and_divergence(self):
        g = Grid(2, 64)
        rng = np.random.default_rng(11)
        w = band_limited(g, rng, kmax=10)
        w = Field(g, w.values - w.values.mean())
        vel = velocity_from_vorticity(w)
        back = sp_derivative(vel.v, 0, 1).values - sp_derivative(vel.u, 1, 1).values
        assert rel_l2(back, w.values) <= 1e-10
        div = sp_derivative(vel.u, 0, 1).values + sp_derivative(vel.v, 1, 1).values
        assert np.sqrt(np.sum(div**2) / np.sum(w.values**2)) <= 1e-10


class TestDerivativeOracles:
    """Central-difference checks for the closed-form JVP and F2 maps."""

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=_ids)
    def test_jvp_matches_central_difference(self, spec):
        rng = np.random.default_rng(42)
        g = grid_for(spec)
        for _ in range(5):
            u = band_limited(g, rng)
            d = band_limited(g, rng)
            eps = 1e-5 * max_norm(u) / max_norm(d)
            fp = apply_F(spec, Field(g, u.values + eps * d.values))
            fm = apply_F(spec, Field(g, u.values - eps * d.values))
            oracle = (fp.values - fm.values) / (2 * eps)
            jvp = apply_JVP(spec, u, d)
            assert rel_l2(oracle, jvp.values) <= 1e-6

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=_ids)
    def test_f2_matches_second_difference(self, spec):
        rng = np.random.default_rng(43)
        g = grid_for(spec)
        for _ in range(5):
            u = band_limited(g, rng)
            d = band_limited(g, rng)
            eps = 1e-4 * max_norm(u) / max_norm(d)
            f0 = apply_F(spec, u)
            fp = apply_F(spec, Field(g, u.values + eps * d.values))
            fm = apply_F(spec, Field(g, u.values - eps * d.values))
            oracle = (fp.values - 2 * f0.values + fm.values) / eps**2
            f2 = apply_F2(spec, u, d)
            # the denominator guards the identically-zero heat case
            denom = max(
                np.sqrt(np.sum(oracle**2)), np.sqrt(np.sum(f0.values**2))
            )
            err = np.sqrt(np.sum((f2.values - oracle) ** 2)) / denom
            assert err <= 1e-4

    def test_heat_f2_exactly_zero(self):
        g = Grid(1, 64)
        rng = np.random.default_rng(44)
        u, d = band_limited(g, rng), band_limited(g, rng)
        out = apply_F2(PdeSpec.heat(), u, d)
        assert np.all(out.values == 0.0)

    def test_burgers_f2_product_identity(self):
        # F''(u)(d, d) = -2 d d_x; for d = sin(2 pi x) this is -2 pi sin(4 pi x)
        g = Grid(1, 256)
        (x,) = g.coords()
        d = Field(g, np.sin(2 * np.pi * x))
        u = Field(g, np.cos(2 * np.pi * x))
        out = apply_F2(PdeSpec.burgers(0.1, Disc.PSEUDO_SPECTRAL), u, d)
        np.testing.assert_allclose(
            out.values, -2 * np.pi * np.sin(4 * np.pi * x), atol=1e-10
        )


class TestLinearityProperties:
    @pytest.mark.parametrize("spec", ALL_SPECS, ids=_ids)
    def test_jvp_linear_in_direction(self, spec):
        rng = np.random.default_rng(45)
        g = grid_for(spec, n1=64, n2=32)
        u = band_limited(g, rng)
        d1, d2 = band_limited(g, rng), band_limited(g, rng)
        a, b = 0.7, -1.3
        combo = Field(g, a * d1.values + b * d2.values)
        lhs = apply_JVP(spec, u, combo)
        rhs = a * apply_JVP(spec, u, d1).values + b * apply_JVP(spec, u, d2).values
        assert rel_l2(lhs.values, rhs) <= 1e-12

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=_ids)
    def test_f2_quadratic_in_direction(self, spec):
        if spec.kind is PdeKind.HEAT_1D:
            pytest.skip("identically zero")
        rng = np.random.default_rng(46)
        g = grid_for(spec, n1=64, n2=32)
        u = band_limited(g, rng)
        d = band_limited(g, rng)
        a = 1.7
        lhs = apply_F2(spec, u, Field(g, a * d.values))
        rhs = a**2 * apply_F2(spec, u, d).values
        assert rel_l2(lhs.values, rhs) <= 1e-12

    def test_allen_cahn_jvp_at_zero_state(self):
        g = Grid(2, 32)
        rng = np.random.default_rng(47)
        d = band_limited(g, rng)
        spec = PdeSpec.allen_cahn(0.05, Disc.PSEUDO_SPECTRAL)
        zero = Field(g, np.zeros(g.shape))
        out = apply_JVP(spec, zero, d)
        from ieda import laplacian

        expected = d.values + 0.05**2 * laplacian(d, Disc.PSEUDO_SPECTRAL).values
        np.testing.assert_allclose(out.values, expected, atol=1e-12)

    def test_heat_jvp_state_independent(self):
        g = Grid(1, 64)
        (x,) = g.coords()
        d = Field(g, np.sin(2 * np.pi * x))
        spec = PdeSpec.heat(Disc.PSEUDO_SPECTRAL)
        rng = np.random.default_rng(48)
        out1 = apply_JVP(spec, band_limited(g, rng), d)
        out2 = apply_JVP(spec, band_limited(g, rng), d)
        np.testing.assert_allclose(out1.values, out2.values, atol=0)
        np.testing.assert_allclose(out1.values, -4 * np.pi**2 * d.values, atol=1e-9)
