"""
Experiment Runner Tests

サブコマンドごとの結果行のテストスイート
"""

import json

import pytest

from ncerg.algebra import Operator, operator_to_json
from ncerg.expcli import Command, ExperimentRunner, any_failed, parse_config, render, run

SHORT = "schedule = [1, 2, 4, 8]\n"


def _config(shape: str, kernel: str, extra: str = "", experiment: str = "demo"):
    return parse_config(
        f'experiment = "{experiment}"\nseed = 3\nshape = {shape}\n{SHORT}{extra}\n[kernel]\n{kernel}\n'
    )


IDENTITY = 'kind = "identity"'
PINCHING_M3 = 'kind = "pinching"\npartition = [[[0], [1], [2]]]'


def _by_metric(rows):
    return {(row.level, row.metric): row for row in rows}


class TestCertify:
    """certifyのテスト"""

    def setup_method(self):
        """テストセットアップ"""
        self.config = _config("[[2, 1.0], [1, 0.5]]", IDENTITY, experiment="identity-certify")

    def test_identity_kernel(self):
        """恒等核は欠損ゼロで認証される"""
        rows = _by_metric(run(self.config, "certify"))

        for metric in ["unital_defect", "subtrace_defect"]:
            assert rows[(0, metric)].value == 0.0
            assert rows[(0, metric)].verdict == "pass"
        assert rows[(0, "choi_min_eig")].verdict == "pass"
        assert rows[(0, "certified")].value == 1.0
        assert rows[(0, "fixed_space_dim")].value == 5.0
        assert rows[(0, "spectral_gap")].value == 1.0
        assert rows[(0, "peripheral_count")].value == 5.0

    def test_rows_carry_experiment_and_command(self):
        """全ての行に実験名とコマンド名"""
        rows = run(self.config, Command.CERTIFY)
        assert {(row.experiment, row.command) for row in rows} == {("identity-certify", "certify")}
        assert not any_failed(rows)

    def test_dump(self, tmp_path):
        """--dump で認証結果と核のレシピを保存"""
        ExperimentRunner(self.config, dump_dir=tmp_path).run("certify")
        document = json.loads((tmp_path / "identity-certify.certify.json").read_text(encoding="utf-8"))

        assert document["kernel"]["recipe"]["kind"] == "identity"
        assert "certification" in document

    def test_unknown_command(self):
        """未知のコマンド"""
        with pytest.raises(ValueError):
            run(self.config, "simulate")


class TestNorms:
    """normsのテスト"""

    def test_deterministic(self):
        """同じ設定からは同じ出力"""
        config = _config("[[3, 1.0]]", PINCHING_M3)
        first = render(run(config, "norms"), "csv")
        second = render(run(config, "norms"), "csv")
        assert first == second

    def test_trial_prefixes_and_workers(self):
        """複数試行の行は試行番号付きで、並列度に依存しない"""
        config = _config("[[3, 1.0]]", PINCHING_M3, extra="trials = 2\n")
        rows = run(config, "norms")
        metrics = [row.metric for row in rows]

        assert "trial0.L1.value" in metrics
        assert "trial1.L1.value" in metrics
        assert "trial0.k_functional.gap" in metrics
        assert "L1.contraction_ratio" in metrics

        parallel = run(config.model_copy(update={"workers": 2}), "norms")
        assert parallel == rows

    def test_single_trial_has_no_prefix(self):
        """試行が一つなら接頭辞なし"""
        rows = _by_metric(run(_config("[[3, 1.0]]", PINCHING_M3), "norms"))

        assert (0, "L1.value") in rows
        assert rows[(0, "k_functional.gap")].verdict == "pass"
        assert rows[(0, "L1.contraction_ratio")].verdict == "pass"
        assert rows[(0, "submajorization.margin")].verdict == "pass"

    def test_explicit_element(self):
        """明示的な初期元の値"""
        config = _config("[[3, 1.0]]", IDENTITY, extra='norms = ["L1", "Linf"]\n')
        x = Operator.identity(config.algebra_shape)
        config = config.model_copy(update={"element": config.element.model_copy(update={"operator": operator_to_json(x)})})
        rows = _by_metric(run(config, "norms"))

        assert rows[(0, "L1.value")].value == pytest.approx(3.0)
        assert rows[(0, "Linf.value")].value == pytest.approx(1.0)


class TestCesaro:
    """cesaroのテスト"""

    def test_pinching_decay(self):
        """完全ピンチングでは A_n - E(x) = (x - E(x)) / n"""
        config = _config("[[3, 1.0]]", PINCHING_M3, extra='norms = ["L1"]\n[element]\nkind = "hermitian"\n')
        rows = _by_metric(run(config, "cesaro"))
        initial = rows[(1, "L1.to_limit")].value

        assert initial > 0
        assert rows[(8, "L1.to_limit")].value == pytest.approx(initial / 8, rel=1e-9)
        assert rows[(8, "L1.final_distance")].verdict == "pass"
        assert rows[(8, "L1.envelope_non_increasing")].verdict == "pass"
        assert rows[(0, "peripheral_trivial")].value == 1.0


class TestDsae:
    """dsaeのテスト"""

    def test_identity_kernel_witness(self, tmp_path):
        """恒等核では平均は一定で、証人は最初の点から見つかる"""
        config = _config("[[2, 1.0]]", IDENTITY)
        rows = _by_metric(ExperimentRunner(config, dump_dir=tmp_path).run("dsae"))

        assert rows[(0, "witness_found")].value == 1.0
        assert rows[(0, "start")].value == 1.0
        assert rows[(0, "dsae.audit_problems")].value == 0.0
        assert rows[(0, "maximal.audit_problems")].verdict == "pass"
        assert (tmp_path / "demo.dsae.trial0.json").exists()


class TestReplication:
    """prop1 / theoremのテスト"""

    def test_prop1_identity(self):
        """恒等核では全てのレベルが即座に成立"""
        config = _config("[[2, 1.0]]", IDENTITY, extra="[budgets]\nn_max = 2\n")
        rows = run(config, "prop1")
        by_metric = _by_metric(rows)

        assert by_metric[(0, "verdict")].verdict == "pass"
        assert by_metric[(0, "audit_problems")].value == 0.0
        assert not any_failed(rows)

    def test_theorem_pinching(self):
        """ピンチングの定理の再現"""
        config = _config("[[3, 1.0]]", PINCHING_M3, extra="[budgets]\nn_max = 2\n")
        config = config.model_copy(update={"schedule": [2**i for i in range(13)]})
        rows = _by_metric(run(config, "theorem"))

        assert rows[(0, "verdict")].verdict == "pass"
        assert rows[(1, "vacuous_budget")].verdict == "n/a"
        assert rows[(2, "vacuous_budget")].value == 1.0

    def test_theorem_infeasible_budget(self):
        """τ(1) が小さすぎると infeasible.budget の行"""
        rows = run(_config("[[1, 0.05]]", IDENTITY), "theorem")

        assert len(rows) == 1
        assert rows[0].metric == "infeasible.budget"
        assert rows[0].value == pytest.approx(0.05)
        assert rows[0].verdict == "fail"


class TestEmbed:
    """embedのテスト"""

    def test_minimality_flags(self):
        """L1 は最小、L∞ は最小でない"""
        config = _config("[[2, 1.0]]", IDENTITY, extra='norms = ["L1", "Linf"]\n')
        rows = _by_metric(run(config, "embed"))

        assert rows[(0, "L1.minimal")].verdict == "pass"
        assert rows[(0, "Linf.minimal")].verdict == "fail"
        assert rows[(0, "L1.c_lower")].verdict == "pass"
        assert rows[(0, "Linf.c_upper")].value <= 1.0 + 1e-9
        assert rows[(0, "Linf.c_upper_linf")].value == pytest.approx(1.0)
