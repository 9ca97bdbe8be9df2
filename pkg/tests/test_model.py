"""Parameter validation, jump kernel, and the density-dependence identity."""

import json
import math

import numpy as np
import pytest

from moranlimits import (
    DomainError,
    KernelValue,
    ModelParams,
    chain_rates,
    kernel_q,
    kernel_values,
    rate_tables,
)
from moranlimits.selfcheck import parameter_panel, reference_params


REF = reference_params()  # N=100, s=1, u=0.5, nu0=0.5


class TestModelParams:
    def test_reference_construction(self):
        assert REF.N == 100
        assert REF.s == 1.0
        assert REF.u == 0.5
        assert REF.nu0 == 0.5
        assert REF.nu1 == 0.5

    @pytest.mark.parametrize("nu0", [0.3, 0.25, 0.7, 1e-9, 1 - 1e-9])
    def test_nu1_complements_exactly(self, nu0):
        params = ModelParams(N=10, s=0.0, u=1.0, nu0=nu0)
        assert params.nu0 + params.nu1 == 1.0

    def test_integer_like_floats_rejected_for_N(self):
        with pytest.raises(DomainError):
            ModelParams(N=10.0, s=1.0, u=0.5, nu0=0.5)

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(N=0, s=1.0, u=0.5, nu0=0.5),
            dict(N=-5, s=1.0, u=0.5, nu0=0.5),
            dict(N=True, s=1.0, u=0.5, nu0=0.5),
            dict(N=10, s=-0.1, u=0.5, nu0=0.5),
            dict(N=10, s=1.0, u=-0.5, nu0=0.5),
            dict(N=10, s=1.0, u=0.5, nu0=0.0),
            dict(N=10, s=1.0, u=0.5, nu0=1.0),
            dict(N=10, s=1.0, u=0.5, nu0=-0.2),
            dict(N=10, s=1.0, u=0.5, nu0=1.3),
            dict(N=10, s=math.inf, u=0.5, nu0=0.5),
            dict(N=10, s=math.nan, u=0.5, nu0=0.5),
            dict(N=10, s="1", u=0.5, nu0=0.5),
        ],
    )
    def test_invalid_parameters_rejected(self, kwargs):
        with pytest.raises(DomainError):
            ModelParams(**kwargs)

    def test_dict_round_trip(self):
        block = {"N": 42, "s": 0.25, "u": 1.5, "nu0": 0.75}
        params = ModelParams.from_dict(block)
        assert params.to_dict() == block
        again = ModelParams.from_dict(json.loads(json.dumps(params.to_dict())))
        assert again == params

    def test_from_dict_reports_missing_and_unknown_keys(self):
        with pytest.raises(DomainError, match="nu0"):
            ModelParams.from_dict({"N": 10, "s": 1.0, "u": 0.5})
        with pytest.raises(DomainError, match="extra"):
            ModelParams.from_dict(
                {"N": 10, "s": 1.0, "u": 0.5, "nu0": 0.5, "extra": 1}
            )

    def test_frozen(self):
        with pytest.raises(Exception):
            REF.s = 2.0


class TestKernel:
    def test_reference_values_at_half(self):
        # (1+s) p (1-p) + u nu0 (1-p) = 2*0.25 + 0.5*0.5*0.5 = 0.625
        assert kernel_q(0.5, 1, REF) == 0.625
        # p (1-p) + u nu1 p = 0.25 + 0.5*0.5*0.5 = 0.375
        assert kernel_q(0.5, -1, REF) == 0.375

    def test_other_jump_sizes_carry_no_rate(self):
        for jump in (0, 2, -2, 5):
            assert kernel_q(0.3, jump, REF) == 0.0

    def test_boundaries(self):
        assert kernel_q(0.0, -1, REF) == 0.0
        assert kernel_q(1.0, 1, REF) == 0.0
        assert kernel_q(0.0, 1, REF) == REF.u * REF.nu0
        assert kernel_q(1.0, -1, REF) == REF.u * REF.nu1

    def test_boundaries_absorb_without_mutation(self):
        params = ModelParams(N=50, s=1.0, u=0.0, nu0=0.5)
        assert kernel_q(0.0, 1, params) == 0.0
        assert kernel_q(1.0, -1, params) == 0.0

    @pytest.mark.parametrize("p", [-0.01, 1.01, math.nan, 2.0])
    def test_p_outside_unit_interval_rejected(self, p):
        with pytest.raises(DomainError):
            kernel_q(p, 1, REF)

    def test_nonnegative_across_panel(self):
        grid = np.linspace(0.0, 1.0, 101)
        for params, _ in parameter_panel(5):
            for p in grid:
                assert kernel_q(float(p), 1, params) >= 0.0
                assert kernel_q(float(p), -1, params) >= 0.0

    def test_kernel_values_pairs(self):
        up, down = kernel_values(0.5, REF)
        assert up == KernelValue(jump=1, rate=0.625)
        assert down == KernelValue(jump=-1, rate=0.375)

    def test_kernel_value_validation(self):
        with pytest.raises(DomainError):
            KernelValue(jump=2, rate=1.0)
        with pytest.raises(DomainError):
            KernelValue(jump=1, rate=-0.5)


class TestChainRates:
    def test_reference_values(self):
        # lambda_50 = 50*50*2/100 + 50*0.25 = 62.5; mu_50 = 25 + 50*0.25 = 37.5
        assert chain_rates(50, REF) == (62.5, 37.5)

    def test_boundary_rates(self):
        lam_n, _ = chain_rates(REF.N, REF)
        _, mu_0 = chain_rates(0, REF)
        assert lam_n == 0.0
        assert mu_0 == 0.0

    @pytest.mark.parametrize("k", [-1, 101, 0.5, None])
    def test_state_validation(self, k):
        with pytest.raises(DomainError):
            chain_rates(k, REF)

    def test_density_dependence_identity_exact(self):
        # the rates are N * kernel_q(k/N, .) bit for bit, not just approximately
        for params, _ in [(REF, None)] + parameter_panel(5):
            n = params.N
            for k in range(n + 1):
                lam, mu = chain_rates(k, params)
                assert lam == n * kernel_q(k / n, 1, params)
                assert mu == n * kernel_q(k / n, -1, params)

    @pytest.mark.parametrize("n", [1, 2, 137])
    def test_rate_tables_match_scalar_rates(self, n):
        params = ModelParams(N=n, s=0.7, u=0.9, nu0=0.31)
        lam, mu = rate_tables(params)
        assert lam.shape == (n + 1,)
        for k in range(n + 1):
            expected = chain_rates(k, params)
            assert lam[k] == expected[0]
            assert mu[k] == expected[1]

    def test_absorbing_states_without_mutation(self):
        params = ModelParams(N=20, s=0.5, u=0.0, nu0=0.5)
        assert chain_rates(0, params) == (0.0, 0.0)
        assert chain_rates(20, params) == (0.0, 0.0)
