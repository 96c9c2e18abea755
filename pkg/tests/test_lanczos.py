import io
import math

import numpy as np
import pytest

from kbound.errors import NumericalError, ValidationError
from kbound.lanczos import (
    LanczosResult,
    ReorthPolicy,
    default_policy,
    load_result_json,
    max_chain_length,
    orthogonality_report,
    result_to_dict,
    run_lanczos,
    save_coefficients_csv,
    save_result_json,
)
from kbound.operators import InnerProductSpec, OperatorVector
from kbound.ensembles import goe_sample, uniform_observable
from oracles import (
    gram_schmidt_lanczos,
    random_hermitian,
    thermal_trace_product,
    trace_product,
)

SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SZ = np.diag([1.0, -1.0])
SQRT2 = math.sqrt(2.0)


class TestQubitChains:
    # Chains small enough to work out by hand.

    def test_mixed_seed(self):
        res = run_lanczos(SZ, SX + SZ)
        np.testing.assert_allclose(res.b, [SQRT2, SQRT2], atol=1e-12)
        assert res.D == 3
        assert not res.truncated

    def test_rotating_seed_terminates_at_two(self):
        res = run_lanczos(SZ, SX)
        np.testing.assert_allclose(res.b, [2.0], atol=1e-12)
        assert res.D == 2

    def test_conserved_seed_is_a_fixed_point(self):
        res = run_lanczos(SZ, SZ)
        assert res.D == 1
        assert res.b.size == 0

    def test_matrix_unit_seed_violates_diagonal_property(self):
        E01 = np.array([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(NumericalError, match="property 2"):
            run_lanczos(SZ, E01)

    def test_zero_seed_rejected(self):
        with pytest.raises(ValidationError, match="zero norm"):
            run_lanczos(SZ, np.zeros((2, 2)))


class TestAgainstGramSchmidtOracle:
    def test_flat_product(self, rng):
        for d in (2, 3, 4):
            H = random_hermitian(rng, d)
            O = random_hermitian(rng, d)
            res = run_lanczos(H, O)
            b_ref, _ = gram_schmidt_lanczos(
                H, O.astype(np.complex128), lambda A, B: trace_product(A, B, 1.0 / d)
            )
            assert res.b.size == b_ref.size
            np.testing.assert_allclose(res.b, b_ref, atol=1e-8)

    def test_thermal_product(self, rng):
        d = 3
        beta = 0.9
        H = random_hermitian(rng, d)
        O = random_hermitian(rng, d)
        spec = InnerProductSpec(beta=beta, hamiltonian=H)
        res = run_lanczos(H, OperatorVector.from_matrix(O, spec))
        b_ref, _ = gram_schmidt_lanczos(
            H, O.astype(np.complex128),
            lambda A, B: thermal_trace_product(H, beta, A, B),
        )
        assert res.b.size == b_ref.size
        np.testing.assert_allclose(res.b, b_ref, atol=1e-8)

    def test_basis_is_orthonormal_under_the_declared_product(self, rng):
        d = 4
        H = random_hermitian(rng, d)
        res = run_lanczos(H, random_hermitian(rng, d))
        report = orthogonality_report(res)
        assert report.max_offdiagonal < 1e-10
        assert report.max_diagonal_deviation < 1e-10
        assert report.gram.shape == (res.D, res.D)


class TestChainLength:
    def test_max_chain_length_formula(self):
        assert max_chain_length(2) == 3
        assert max_chain_length(8) == 57
        assert max_chain_length(32) == 993

    def test_generic_seed_reaches_the_cap(self, rng):
        d = 8
        H = goe_sample(d, seed=rng)
        res = run_lanczos(H, uniform_observable(H), store_basis=False)
        assert res.D == max_chain_length(d)
        assert not res.truncated

    def test_never_exceeds_the_cap(self, rng):
        for d in (2, 3, 5):
            H = random_hermitian(rng, d)
            res = run_lanczos(H, random_hermitian(rng, d), store_basis=False)
            assert res.D <= max_chain_length(d)

    def test_max_steps_truncates(self, rng):
        d = 6
        H = goe_sample(d, seed=rng)
        res = run_lanczos(H, uniform_observable(H), max_steps=3, store_basis=False)
        assert res.truncated
        assert res.b.size == 3
        assert res.D == 4


class TestReorthPolicies:
    def test_policy_validation(self):
        with pytest.raises(ValidationError):
            ReorthPolicy("sometimes")
        with pytest.raises(ValidationError):
            ReorthPolicy("partial", threshold=0.0)
        with pytest.raises(ValidationError):
            ReorthPolicy("partial", threshold=1.5)

    def test_default_switches_on_dimension(self):
        assert default_policy(2).mode == "full"
        assert default_policy(64).mode == "full"
        assert default_policy(65).mode == "partial"

    def test_modes_agree_on_moderate_chains(self, rng):
        d = 12
        H = goe_sample(d, seed=rng)
        obs = uniform_observable(H)
        full = run_lanczos(H, obs, policy=ReorthPolicy("full"), store_basis=False)
        part = run_lanczos(H, obs, policy=ReorthPolicy("partial"), store_basis=False)
        assert full.D == part.D
        np.testing.assert_allclose(part.b, full.b, rtol=1e-6, atol=1e-9)

    def test_partial_keeps_the_basis_orthogonal(self, rng):
        d = 16
        H = goe_sample(d, seed=rng)
        res = run_lanczos(
            H, uniform_observable(H), policy=ReorthPolicy("partial")
        )
        assert res.D == max_chain_length(d)
        assert res.ortho_error < 1e-6

    def test_full_mode_orthogonality_at_goe_scale(self, rng):
        d = 32
        H = goe_sample(d, seed=rng)
        res = run_lanczos(H, uniform_observable(H))
        assert res.D == max_chain_length(d)
        assert res.ortho_error < 1e-8


class TestArgumentHandling:
    def test_bad_halt_tol(self, rng):
        H = random_hermitian(rng, 2)
        with pytest.raises(ValidationError):
            run_lanczos(H, SX, halt_tol=0.0)
        with pytest.raises(ValidationError):
            run_lanczos(H, SX, halt_tol=1.0)

    def test_bad_max_steps(self):
        with pytest.raises(ValidationError):
            run_lanczos(SZ, SX, max_steps=0)

    def test_dim_mismatch(self, rng):
        with pytest.raises(ValidationError):
            run_lanczos(SZ, random_hermitian(rng, 3))

    def test_thermal_spec_binds_to_the_hamiltonian(self, rng):
        d = 3
        H = random_hermitian(rng, d)
        res = run_lanczos(H, random_hermitian(rng, d),
                          spec=InnerProductSpec(beta=0.5, hamiltonian=H))
        assert res.spec.hamiltonian is not None

    def test_thermal_spec_with_foreign_hamiltonian_rejected(self, rng):
        d = 3
        H = random_hermitian(rng, d)
        other = random_hermitian(rng, d)
        spec = InnerProductSpec(beta=0.5, hamiltonian=other)
        with pytest.raises(ValidationError, match="differs"):
            run_lanczos(H, OperatorVector.from_matrix(random_hermitian(rng, d)),
                        spec=spec)

    def test_store_basis_false_skips_diagnostics(self, rng):
        d = 4
        H = random_hermitian(rng, d)
        res = run_lanczos(H, random_hermitian(rng, d), store_basis=False)
        assert res.basis is None
        assert res.ortho_error is None
        with pytest.raises(ValidationError):
            res.basis_operator(0)
        with pytest.raises(ValidationError):
            orthogonality_report(res)


class TestSerialization:
    def test_json_round_trip(self, rng, tmp_path):
        d = 3
        H = random_hermitian(rng, d)
        res = run_lanczos(H, random_hermitian(rng, d))
        path = tmp_path / "res.json"
        save_result_json(res, path, include_basis=True)
        back = load_result_json(path)
        np.testing.assert_array_equal(back.b, res.b)
        assert back.D == res.D
        assert back.dim == res.dim
        assert back.halt_tol == res.halt_tol
        assert back.truncated == res.truncated
        np.testing.assert_allclose(back.basis, res.basis, atol=0.0)

    def test_basis_excluded_by_default(self, rng, tmp_path):
        d = 3
        H = random_hermitian(rng, d)
        res = run_lanczos(H, random_hermitian(rng, d))
        path = tmp_path / "res.json"
        save_result_json(res, path)
        assert load_result_json(path).basis is None

    def test_missing_field_rejected(self, tmp_path):
        path = tmp_path / "res.json"
        path.write_text('{"b": [1.0]}')
        with pytest.raises(ValidationError, match="D"):
            load_result_json(path)

    def test_coefficients_csv_preserves_all_digits(self, rng, tmp_path):
        b = rng.uniform(0.1, 3.0, size=17)
        path = tmp_path / "b.csv"
        save_coefficients_csv(b, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "n,b"
        assert len(lines) == 18
        for i, line in enumerate(lines[1:]):
            n, val = line.split(",")
            assert int(n) == i + 1
            assert float(val) == b[i]

    def test_csv_to_file_like(self):
        buf = io.StringIO()
        save_coefficients_csv([1.5, 2.5], buf)
        assert buf.getvalue().splitlines() == ["n,b", "1,1.5", "2,2.5"]

    def test_result_to_dict_is_json_clean(self, rng):
        d = 3
        H = random_hermitian(rng, d)
        res = run_lanczos(H, random_hermitian(rng, d))
        out = result_to_dict(res)
        assert isinstance(out["b"][0], float)
        assert isinstance(out["D"], int)
        assert out["beta"] == 0.0
