"""CLI subcommands: exit codes, determinism, formats."""

import json

import pytest

from guardgate.cli import main

from conftest import conflicted_doc, make_doc


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


class TestValidate:
    def test_clean_config_exit_zero(self, tmp_path, capsys):
        path = write_config(tmp_path, make_doc())
        assert main(["validate", "--config", path]) == 0
        assert "clean" in capsys.readouterr().out

    def test_case1_config_exit_two(self, tmp_path, capsys):
        path = write_config(tmp_path, conflicted_doc(allow_opposition=False))
        assert main(["validate", "--config", path]) == 2
        out = capsys.readouterr().out
        assert "case1" in out

    def test_case3_config_exit_one(self, tmp_path):
        # conditional opposition: tagged axes renormalize -0.9 to -1 in a narrow context
        doc = conflicted_doc(dot=-0.9, allow_opposition=False)
        doc["axes"] = [
            {"name": "privacy", "tags": ["sensitive-personal-info"]},
            {"name": "transparency", "tags": ["public-accountability"]},
        ]
        path = write_config(tmp_path, doc)
        assert main(["--quiet", "validate", "--config", path]) == 1

    def test_malformed_json_exit_three(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{oops", encoding="utf-8")
        assert main(["--quiet", "validate", "--config", str(path)]) == 3

    def test_missing_file_exit_three(self, tmp_path):
        assert main(["--quiet", "validate", "--config", str(tmp_path / "nope.json")]) == 3

    def test_json_format(self, tmp_path, capsys):
        path = write_config(tmp_path, make_doc())
        main(["--format", "json", "validate", "--config", path])
        doc = json.loads(capsys.readouterr().out)
        assert doc["exitStatus"] == 0


class TestCheck:
    def _transcript(self, tmp_path, lines, name="t.jsonl"):
        path = tmp_path / name
        path.write_text("\n".join(json.dumps(l) for l in lines), encoding="utf-8")
        return str(path)

    def test_ssn_line_reports_redact(self, tmp_path, capsys):
        config = write_config(tmp_path, make_doc())
        transcript = self._transcript(
            tmp_path,
            [
                {"sessionId": "s1", "role": "user", "content": "ssn 123-45-6789"},
                {"sessionId": "s1", "role": "assistant", "content": "noted"},
            ],
        )
        assert main(["--format", "json", "check", "--config", config, transcript]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["messages"][0]["action"] == "redact"
        assert doc["messages"][0]["redactionCount"] == 1
        assert "123-45-6789" not in doc["messages"][0]["transformed"]
        assert doc["messages"][1]["action"] == "allow"

    def test_output_policies_apply_to_assistant_lines(self, tmp_path, capsys):
        config = write_config(tmp_path, make_doc())
        transcript = self._transcript(
            tmp_path, [{"sessionId": "s", "role": "assistant", "content": "toxic words"}]
        )
        main(["--format", "json", "check", "--config", config, transcript])
        doc = json.loads(capsys.readouterr().out)
        assert doc["messages"][0]["action"] == "block"
        assert doc["messages"][0]["triggeredRuleIds"] == ["out.block"]

    def test_empty_transcript_empty_report(self, tmp_path, capsys):
        config = write_config(tmp_path, make_doc())
        transcript = self._transcript(tmp_path, [])
        assert main(["--format", "json", "check", "--config", config, transcript]) == 0
        assert json.loads(capsys.readouterr().out)["messages"] == []

    def test_reports_byte_identical(self, tmp_path, capsys):
        config = write_config(tmp_path, make_doc())
        transcript = self._transcript(
            tmp_path, [{"sessionId": "s", "role": "user", "content": "a@b.com warnword"}]
        )
        main(["--format", "json", "check", "--config", config, transcript])
        first = capsys.readouterr().out
        main(["--format", "json", "check", "--config", config, transcript])
        second = capsys.readouterr().out
        assert first == second

    def test_bad_role_rejected(self, tmp_path):
        config = write_config(tmp_path, make_doc())
        transcript = self._transcript(
            tmp_path, [{"sessionId": "s", "role": "narrator", "content": "x"}]
        )
        assert main(["--quiet", "check", "--config", config, transcript]) == 3

    def test_unknown_assistant(self, tmp_path):
        config = write_config(tmp_path, make_doc())
        transcript = self._transcript(tmp_path, [])
        assert (
            main(["--quiet", "check", "--config", config, transcript, "--assistant", "ghost"])
            == 3
        )


class TestTrain:
    def _dataset(self, tmp_path, rows, name="data.tsv"):
        path = tmp_path / name
        path.write_text("\n".join(f"{label}\t{text}" for label, text in rows), encoding="utf-8")
        return str(path)

    def test_trains_and_writes_model(self, tmp_path, capsys):
        data = self._dataset(tmp_path, [("allow", "good day"), ("deny", "bad attack")])
        out = tmp_path / "toy.model"
        assert main(["train", data, str(out), "--epochs", "50"]) == 0
        assert out.exists() and out.stat().st_size > 0

        from guardgate.classifier import load_model, predict

        model = load_model(out)
        assert predict(model, "bad attack")[0] == "deny"

    def test_single_class_dataset_fails(self, tmp_path, capsys):
        data = self._dataset(tmp_path, [("allow", "nice"), ("allow", "fine")])
        assert main(["train", data, str(tmp_path / "x.model")]) == 3
        assert "only 'allow'" in capsys.readouterr().out

    def test_retrain_byte_identical(self, tmp_path):
        data = self._dataset(tmp_path, [("allow", "good"), ("deny", "bad")])
        out1, out2 = tmp_path / "m1.model", tmp_path / "m2.model"
        main(["--quiet", "train", data, str(out1)])
        main(["--quiet", "train", data, str(out2)])
        assert out1.read_bytes() == out2.read_bytes()


class TestResolveDemo:
    def test_opposed_pair_hybrid_prints_winner_and_alert(self, tmp_path, capsys):
        doc = conflicted_doc(strategy="hybrid")
        doc["assistants"][0]["outputPolicies"] = []  # leave only the opposed pair active
        config = write_config(tmp_path, doc)
        assert main(["resolve-demo", "--config", config, "--strategy", "hybrid"]) == 0
        out = capsys.readouterr().out
        assert "winner: pii-input" in out
        assert "constrained ethical guidance" in out

    def test_other_guardrails_keep_direction_despite_opposition(self, tmp_path, capsys):
        # the opposed pair cancels, the remaining output guardrail still steers
        config = write_config(tmp_path, conflicted_doc(strategy="hybrid"))
        main(["resolve-demo", "--config", config, "--strategy", "hybrid"])
        out = capsys.readouterr().out
        assert "outcome=direction" in out and "transparency=1.0" in out

    def test_orthogonal_pair_prints_direction(self, tmp_path, capsys):
        config = write_config(tmp_path, make_doc())
        assert main(["resolve-demo", "--config", config, "--strategy", "weighted-average"]) == 0
        out = capsys.readouterr().out
        assert "direction:" in out and "outcome=direction" in out

    def test_unknown_strategy_usage_error(self, tmp_path):
        config = write_config(tmp_path, make_doc())
        with pytest.raises(SystemExit) as exc:
            main(["resolve-demo", "--config", config, "--strategy", "coin-flip"])
        assert exc.value.code == 2

    def test_context_filters_active_set(self, tmp_path, capsys):
        doc = make_doc()
        doc["assistants"][0]["inputPolicies"][0]["contextTags"] = ["sensitive-personal-info"]
        config = write_config(tmp_path, doc)
        main(["--format", "json", "resolve-demo", "--config", config,
              "--context", "sensitive-personal-info"])
        result = json.loads(capsys.readouterr().out)
        assert "pii-input" in result["active"]

    def test_human_strategy_pending(self, tmp_path, capsys):
        config = write_config(tmp_path, conflicted_doc(strategy="human"))
        main(["--format", "json", "resolve-demo", "--config", config, "--strategy", "human"])
        result = json.loads(capsys.readouterr().out)
        assert result["outcome"] == "pending-human"

    def test_quiet_suppresses_output(self, tmp_path, capsys):
        config = write_config(tmp_path, make_doc())
        main(["--quiet", "resolve-demo", "--config", config])
        assert capsys.readouterr().out == ""
