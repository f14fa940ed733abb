import json
import math

import numpy as np
import pytest
from pydantic import ValidationError

from hop_sim import schemas
from hop_sim.types import INFINITY, ModelKind


class TestModelSpec:
    def test_compact_valid(self):
        model = schemas.ModelSpec.compact_a(3, 2.0)

        assert model.kind is ModelKind.COMPACT_A
        assert model.k == 2.0
        assert model.noise_scale == pytest.approx(1.0)

    def test_frozen_has_no_noise(self):
        model = schemas.ModelSpec.noncompact_a(3, INFINITY)

        assert model.is_frozen
        assert model.noise_scale == 0.0

    def test_n_below_two(self):
        with pytest.raises(ValidationError) as exc_info:
            schemas.ModelSpec.compact_a(1, 1.0)

        assert "greater than or equal to 2" in str(exc_info.value)

    def test_non_positive_kappa(self):
        with pytest.raises(ValidationError):
            schemas.ModelSpec.noncompact_a(2, 0.0)

    def test_bc_requires_p_and_q(self):
        with pytest.raises(ValidationError) as exc_info:
            schemas.ModelSpec.model_validate({"kind": "noncompactBC", "N": 2, "kappa": 1.0})

        assert "requires p and q" in str(exc_info.value)

    def test_type_a_rejects_p(self):
        with pytest.raises(ValidationError):
            schemas.ModelSpec.model_validate({"kind": "compactA", "N": 2, "kappa": 1.0, "p": 2.0})

    def test_bc_constraint_message(self):
        """Test the violated inequality is named."""
        with pytest.raises(ValidationError) as exc_info:
            schemas.ModelSpec.noncompact_bc(3, 2.0, 4.0, 1.0)

        assert "p >= N-1+1/(2κ)" in str(exc_info.value)

    def test_frozen_bc_floor(self):
        """Test κ=inf lowers the p floor to N-1."""
        model = schemas.ModelSpec.noncompact_bc(2, 1.0, 1.0, INFINITY)

        assert model.k02 == 0.0

    def test_k02_only_for_bc(self, compact_model):
        with pytest.raises(AttributeError):
            _ = compact_model.k02

    def test_record_round_trip(self, bc_model):
        record = bc_model.to_record()

        assert schemas.ModelSpec.from_record(record) == bc_model

    def test_record_writes_inf(self, frozen_noncompact_model):
        record = frozen_noncompact_model.to_record()

        assert record["kappa"] == "inf"
        assert record["k"] == "inf"
        assert schemas.ModelSpec.from_record(record).is_frozen

    def test_with_kappa(self, bc_model):
        assert bc_model.with_kappa(4.0).kappa == 4.0
        assert bc_model.with_kappa(4.0).p == bc_model.p


class TestParseKappa:
    @pytest.mark.parametrize("raw", ["inf", "Infinity", "∞", " INF "])
    def test_infinite_spellings(self, raw):
        assert math.isinf(schemas.parse_kappa(raw))

    def test_number(self):
        assert schemas.parse_kappa("2.5") == 2.5


class TestPartition:
    def test_non_increasing(self):
        with pytest.raises(ValidationError):
            schemas.Partition(parts=(1, 2))

    def test_negative_part(self):
        with pytest.raises(ValidationError):
            schemas.Partition(parts=(1, -1))

    def test_padded(self):
        assert schemas.Partition(parts=(2, 1)).padded(4) == (2, 1, 0, 0)

    def test_padded_too_long(self):
        with pytest.raises(ValueError):
            schemas.Partition(parts=(1, 1, 1)).padded(2)


class TestSdeConfig:
    def test_n_steps(self):
        assert schemas.SdeConfig(dt=0.01, t_end=0.5).n_steps == 50

    def test_default_stride_caps_records(self):
        cfg = schemas.SdeConfig(dt=1e-4, t_end=10.0)

        assert cfg.recorded_steps().size <= 4097

    def test_dt_above_horizon(self):
        with pytest.raises(ValidationError):
            schemas.SdeConfig(dt=0.5, t_end=0.1)

    def test_monte_carlo_snaps_horizon(self):
        """Test t_end is snapped onto the step grid."""
        mc = schemas.MonteCarloParams(dt=0.003)

        cfg = mc.sde_config(0.1)

        assert cfg.n_steps == 33
        assert cfg.t_end == pytest.approx(0.099)


class TestCoeffTable:
    def test_rejects_ragged_rows(self):
        with pytest.raises(ValidationError):
            schemas.CoeffTable(N=2, p=2.0, q=2.0, n_max=1, c=((1.0,), (0.5,)))

    def test_rejects_zero_leading(self):
        with pytest.raises(ValidationError):
            schemas.CoeffTable(N=2, p=2.0, q=2.0, n_max=1, c=((1.0,), (1.0, 0.0)))

    def test_rejects_n_max_above_n(self):
        with pytest.raises(ValidationError):
            schemas.CoeffTable(N=2, p=2.0, q=2.0, n_max=3, c=((1.0,), (1.0, 1.0), (1.0, 1.0, 1.0), (1.0,) * 4))

    def test_h_value(self):
        table = schemas.CoeffTable(N=2, p=2.0, q=2.0, n_max=1, c=((1.0,), (-0.5, 0.75)))

        value = table.h_value(1, [1.0, 0.0])

        assert value == pytest.approx(-0.5 + 0.75 * (math.cosh(1.0) + 1.0))
        np.testing.assert_allclose(table.eigenvalues(), [0.0, 4.0])


class TestCheckReport:
    def test_row_z_score(self):
        estimate = schemas.McEstimate(mean_re=1.3, stderr=0.1, n_paths=100)

        row = schemas.CheckRow.from_estimate("e1", 0.1, 1.0 + 0j, estimate)

        assert row.z == pytest.approx(3.0)

    def test_bias_budget_absorbs_deviation(self):
        estimate = schemas.McEstimate(mean_re=1.3, stderr=0.1, n_paths=100)

        row = schemas.CheckRow.from_estimate("e1", 0.1, 1.0 + 0j, estimate, bias_budget=0.25)

        assert row.z == pytest.approx(0.5)

    def test_zero_stderr_uses_floor(self):
        estimate = schemas.McEstimate(mean_re=1.0, stderr=0.0, n_paths=0)

        row = schemas.CheckRow.from_estimate("exact", 0.0, 1.0 + 1e-20j, estimate)

        assert row.z <= 1e-4

    def test_pass_threshold(self):
        passing = schemas.CheckRow.from_estimate("a", 0.1, 0j, schemas.McEstimate(mean_re=0.29, stderr=0.1, n_paths=9))
        failing = schemas.CheckRow.from_estimate("b", 0.2, 0j, schemas.McEstimate(mean_re=0.31, stderr=0.1, n_paths=9))

        assert schemas.CheckReport.build("ok", "", [passing]).passed
        assert not schemas.CheckReport.build("bad", "", [passing, failing]).passed

    def test_json_uses_pass_key(self):
        row = schemas.CheckRow.from_estimate("a", 0.1, 0j, schemas.McEstimate(mean_re=0.0, stderr=0.1, n_paths=9))
        report = schemas.CheckReport.build("demo", "demo check", [row], {"seed": 1})

        payload = json.loads(json.dumps(report.to_json_dict()))

        assert payload["pass"] is True
        assert payload["notes"] == {"seed": 1}
        assert payload["rows"][0]["label"] == "a"

    def test_capped_pieces_go_into_notes(self):
        capped = schemas.McEstimate(mean_re=0.0, stderr=0.1, n_paths=9, capped_pieces=4)
        clean = schemas.McEstimate(mean_re=0.0, stderr=0.1, n_paths=9)
        rows = [
            schemas.CheckRow.from_estimate("a", 0.1, 0j, capped),
            schemas.CheckRow.from_estimate("b", 0.1, 0j, clean),
        ]

        report = schemas.CheckReport.build("demo", "demo check", rows, {"seed": 1})

        assert report.notes == {"seed": 1, "capped_pieces": 4}

    def test_no_capped_note_without_capped_pieces(self):
        row = schemas.CheckRow.from_estimate("a", 0.1, 0j, schemas.McEstimate(mean_re=0.0, stderr=0.1, n_paths=9))

        assert "capped_pieces" not in schemas.CheckReport.build("demo", "", [row]).notes


class TestPathSample:
    def test_misaligned_states(self, noncompact_model):
        with pytest.raises(ValidationError):
            schemas.PathSample(model=noncompact_model, times=np.array([0.0, 0.1]), states=np.zeros((3, 2)), dt=0.1)

    def test_times_must_start_at_zero(self, noncompact_model):
        with pytest.raises(ValidationError):
            schemas.PathSample(model=noncompact_model, times=np.array([0.1]), states=np.zeros((1, 2)), dt=0.1)
