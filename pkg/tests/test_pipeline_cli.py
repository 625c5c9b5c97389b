import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from corpusqg.cli import main
from corpusqg.manifest import RunManifest
from corpusqg.pipeline import PipelineConfig, PipelineError, run_pipeline

from conftest import synthetic_corpus, write_jsonl


@pytest.fixture
def runner():
    return CliRunner()


def make_workspace(tmp_path, num_docs=20):
    corpus = tmp_path / "corpus.jsonl"
    write_jsonl(corpus, synthetic_corpus(num_docs=num_docs))
    groups = tmp_path / "groups.json"
    groups.write_text(
        json.dumps({"vaccine": ["vaccine"], "treatment": ["treatment"]}), encoding="utf-8"
    )
    gold = tmp_path / "gold.jsonl"
    write_jsonl(gold, [{"question": "what is the vaccine"}, {"question": "what is covid"}])
    config = tmp_path / "run.json"
    config.write_text(
        json.dumps(
            {
                "input": str(corpus),
                "min_date": "2019-10-31",
                "terms": ["covid", "wuhan"],
                "match_mode": "any",
                "window_size": 4,
                "stride": 2,
                "backend": "mock",
                "groups_path": str(groups),
                "gold_path": str(gold),
                "min_docs": 1,
                "seed": 13,
            }
        ),
        encoding="utf-8",
    )
    return corpus, groups, gold, config


ARTIFACTS = ["corpus.jsonl", "spans.jsonl", "questions.jsonl", "clean.jsonl", "freq.csv", "series.csv", "sheet.csv"]


def artifact_bytes(workdir):
    return {name: (Path(workdir) / name).read_bytes() for name in ARTIFACTS}


class TestRunPipeline:
    def test_counts_chain_and_artifacts(self, tmp_path):
        *_, config_path = make_workspace(tmp_path)
        config = PipelineConfig.from_file(config_path)
        workdir = tmp_path / "out"
        manifest = run_pipeline(config, workdir)
        counts = manifest.counts()
        assert counts["documents_in"] == 20
        assert 0 < counts["documents_kept"] <= 20
        assert counts["spans"] > 0
        assert counts["generations"] <= counts["spans"]
        assert counts["questions_kept"] <= counts["generations"]
        assert counts["unique_questions"] <= counts["questions_kept"]
        assert manifest.count_violations() == []
        for name in ARTIFACTS:
            assert (workdir / name).exists()
        assert (workdir / "manifest.json").exists()

    def test_two_runs_byte_identical(self, tmp_path):
        *_, config_path = make_workspace(tmp_path)
        config = PipelineConfig.from_file(config_path)
        run_pipeline(config, tmp_path / "a")
        run_pipeline(config, tmp_path / "b")
        assert artifact_bytes(tmp_path / "a") == artifact_bytes(tmp_path / "b")

    def test_resume_from_partial_checkpoint(self, tmp_path):
        *_, config_path = make_workspace(tmp_path)
        config = PipelineConfig.from_file(config_path)
        full = tmp_path / "full"
        run_pipeline(config, full)
        baseline = artifact_bytes(full)

        partial = tmp_path / "partial"
        partial.mkdir()
        for name in ["corpus.jsonl", "spans.jsonl", "questions.jsonl"]:
            (partial / name).write_bytes(baseline[name])
        manifest = run_pipeline(config, partial)
        assert artifact_bytes(partial) == baseline
        statuses = {record.stage: record.status for record in manifest.stages}
        assert statuses["ingest"] == "resumed"
        assert statuses["generate"] == "resumed"
        assert statuses["postprocess"] == "completed"

    def test_missing_input_fails_with_manifest_only(self, tmp_path):
        config = PipelineConfig(input=str(tmp_path / "nope.jsonl"))
        workdir = tmp_path / "out"
        with pytest.raises(PipelineError, match="not found"):
            run_pipeline(config, workdir)
        assert sorted(p.name for p in workdir.iterdir()) == ["manifest.json"]
        manifest = RunManifest.load(workdir / "manifest.json")
        assert manifest.stages[0].status == "failed"

    def test_failed_stage_recorded(self, tmp_path):
        corpus, *_ = make_workspace(tmp_path)
        config = PipelineConfig(input=str(corpus), backend="remote", endpoint=None)
        with pytest.raises(PipelineError, match="generate"):
            run_pipeline(config, tmp_path / "out")
        manifest = RunManifest.load(tmp_path / "out" / "manifest.json")
        statuses = [(r.stage, r.status) for r in manifest.stages]
        assert ("generate", "failed") in statuses

    def test_unknown_config_key_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"input": "x", "wrong_key": 1}), encoding="utf-8")
        with pytest.raises(PipelineError, match="wrong_key"):
            PipelineConfig.from_file(path)

    def test_endpoint_env_override(self, tmp_path, monkeypatch):
        config = PipelineConfig(input="x", endpoint="http://file-level")
        monkeypatch.setenv("CORPUSQG_ENDPOINT", "http://env-wins")
        assert config.resolved_endpoint() == "http://env-wins"


class TestStageCommands:
    def test_ingest_filters(self, runner, tmp_path):
        corpus, *_ = make_workspace(tmp_path)
        out = tmp_path / "filtered.jsonl"
        result = runner.invoke(
            main,
            [
                "ingest", "--input", str(corpus), "--output", str(out),
                "--min-date", "2019-10-31", "--terms", "covid,wuhan", "--match", "any",
            ],
        )
        assert result.exit_code == 0, result.output
        assert out.exists()
        assert "wrote" in result.output

    def test_ingest_requires_both_filter_flags(self, runner, tmp_path):
        corpus, *_ = make_workspace(tmp_path)
        result = runner.invoke(
            main, ["ingest", "--input", str(corpus), "--output", str(tmp_path / "o.jsonl"), "--min-date", "2020-01-01"]
        )
        assert result.exit_code != 0
        assert "together" in result.output

    def test_spans_generate_postprocess_aggregate_timeseries(self, runner, tmp_path):
        corpus, groups, *_ = make_workspace(tmp_path)
        spans = tmp_path / "spans.jsonl"
        questions = tmp_path / "questions.jsonl"
        clean = tmp_path / "clean.jsonl"
        freq = tmp_path / "freq.csv"
        series = tmp_path / "series.csv"

        for args in [
            ["spans", "--input", str(corpus), "--window", "4", "--stride", "2", "--output", str(spans)],
            ["generate", "--spans", str(spans), "--backend", "mock", "--corpus", str(corpus), "--output", str(questions)],
            ["postprocess", "--input", str(questions), "--output", str(clean)],
            ["aggregate", "--input", str(clean), "--min-docs", "1", "--output", str(freq)],
            ["timeseries", "--input", str(clean), "--groups", str(groups), "--output", str(series)],
        ]:
            result = runner.invoke(main, args)
            assert result.exit_code == 0, (args[0], result.output)

        assert freq.read_text(encoding="utf-8").splitlines()[0] == "rank,question,span_count,doc_count"
        assert series.read_text(encoding="utf-8").splitlines()[0] == "group,month,count"
        # generated records carry dates joined from the corpus
        dated = [json.loads(line) for line in questions.read_text(encoding="utf-8").splitlines()]
        assert any(record["publish_date"] for record in dated)

    def test_generate_remote_requires_endpoint(self, runner, tmp_path):
        corpus, *_ = make_workspace(tmp_path)
        spans = tmp_path / "spans.jsonl"
        runner.invoke(main, ["spans", "--input", str(corpus), "--output", str(spans)])
        result = runner.invoke(
            main, ["generate", "--spans", str(spans), "--backend", "remote", "--output", str(tmp_path / "q.jsonl")]
        )
        assert result.exit_code != 0
        assert "endpoint" in result.output.lower()


class TestMatchCommands:
    def setup_sheet(self, runner, tmp_path):
        corpus, groups, gold, config_path = make_workspace(tmp_path)
        run_pipeline(PipelineConfig.from_file(config_path), tmp_path / "out")
        return corpus, gold, tmp_path / "out"

    def test_per_doc_and_summarize(self, runner, tmp_path):
        corpus, gold, out = self.setup_sheet(runner, tmp_path)
        clean = out / "clean.jsonl"
        first_doc = json.loads(clean.read_text(encoding="utf-8").splitlines()[0])["doc_id"]
        gold_pairs = tmp_path / "gold_pairs.jsonl"
        write_jsonl(gold_pairs, [{"question": "what is the vaccine", "doc_id": first_doc}])
        sheet = tmp_path / "sheet_per_doc.csv"
        result = runner.invoke(
            main,
            ["match", "per-doc", "--gold", str(gold_pairs), "--questions", str(clean), "--out", str(sheet)],
        )
        assert result.exit_code == 0, result.output
        content = sheet.read_text(encoding="utf-8")
        assert "reference,context" in content

        # label it and summarize
        labeled = content.replace('unset', '').splitlines()
        rows = [line for line in labeled if line and not line.startswith("#")]
        body = rows[1].rsplit(",", 1)[0] + ",strong"
        sheet.write_text("\n".join([rows[0], body]) + "\n", encoding="utf-8")
        result = runner.invoke(main, ["match", "summarize", "--sheet", str(sheet)])
        assert result.exit_code == 0, result.output
        assert "match 1 (100%)" in result.output

    def test_frequent_cli(self, runner, tmp_path):
        corpus, gold, out = self.setup_sheet(runner, tmp_path)
        sheet = tmp_path / "sheet_freq.csv"
        result = runner.invoke(
            main,
            ["match", "frequent", "--gold", str(gold), "--questions", str(out / "freq.csv"), "--out", str(sheet)],
        )
        assert result.exit_code == 0, result.output
        assert sheet.exists()

    def test_summarize_rejects_unset(self, runner, tmp_path):
        corpus, gold, out = self.setup_sheet(runner, tmp_path)
        result = runner.invoke(main, ["match", "summarize", "--sheet", str(out / "sheet.csv")])
        assert result.exit_code != 0
        assert "label" in result.output


class TestTopicsCommands:
    def test_fit_report_questions(self, runner, tmp_path):
        *_, config_path = make_workspace(tmp_path)
        out = tmp_path / "out"
        run_pipeline(PipelineConfig.from_file(config_path), out)
        model_path = tmp_path / "model.json"
        result = runner.invoke(
            main,
            [
                "topics", "fit", "--input", str(out / "clean.jsonl"),
                "--k", "3", "--ngrams", "2", "--iters", "30", "--seed", "13",
                "--out", str(model_path),
            ],
        )
        assert result.exit_code == 0, result.output

        result = runner.invoke(main, ["topics", "report", "--model", str(model_path), "--top-terms", "3"])
        assert result.exit_code == 0, result.output
        assert len(result.output.strip().splitlines()) == 3

        result = runner.invoke(
            main, ["topics", "report", "--model", str(model_path), "--drop-topics", "0,2"]
        )
        assert len(result.output.strip().splitlines()) == 1

        result = runner.invoke(
            main,
            ["topics", "questions", "--model", str(model_path), "--freq", str(out / "freq.csv")],
        )
        assert result.exit_code == 0, result.output
        lines = result.output.strip().splitlines()
        assert len(lines) == 3
        assert all(len(line.split("\t")) == 3 for line in lines)


class TestRunAndManifestCommands:
    def test_run_cli_and_manifest_show(self, runner, tmp_path):
        *_, config_path = make_workspace(tmp_path)
        workdir = tmp_path / "out"
        result = runner.invoke(main, ["run", "--config", str(config_path), "--workdir", str(workdir)])
        assert result.exit_code == 0, result.output
        assert "stages:" in result.output

        result = runner.invoke(main, ["manifest", "show", "--path", str(workdir / "manifest.json")])
        assert result.exit_code == 0, result.output
        assert "ingest" in result.output

    def test_run_cli_missing_input(self, runner, tmp_path):
        config = tmp_path / "run.json"
        config.write_text(json.dumps({"input": str(tmp_path / "ghost.jsonl")}), encoding="utf-8")
        result = runner.invoke(main, ["run", "--config", str(config), "--workdir", str(tmp_path / "o")])
        assert result.exit_code != 0
        assert "ghost.jsonl" in result.output
