"""End-to-end pipeline: ingest -> spans -> generate -> postprocess -> aggregate.

Each stage writes its artifact to disk and is skipped on rerun when the
artifact already exists, so interrupted runs resume where they stopped.
With the mock generation backend and the hash-stub embedder the whole run
is bit-deterministic: rerunning (or resuming) reproduces every artifact
byte for byte.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Callable

from . import __version__
from .aggregate import (
    count_frequencies,
    filter_by_doc_frequency,
    keyword_group_series,
    read_frequency_csv,
    write_frequency_csv,
    write_series_csv,
)
from .ingest import CorpusFilter, filter_corpus, load_corpus, write_corpus
from .manifest import RunManifest, _now
from .match_eval import HashEmbedder, RemoteEmbedder, frequent_question_experiment
from .postprocess import FilterConfig, FilterSummary, filter_questions, load_banned_terms, normalize_question
from .preprocess import SentenceSpan, WindowConfig, document_spans
from .qg import (
    GenerationConfig,
    GenerationSummary,
    MockBackend,
    QuestionRecord,
    RemoteBackend,
    generate as generate_records,
    read_question_records,
    write_question_records,
)

__all__ = ["PipelineConfig", "PipelineError", "run_pipeline", "read_spans", "write_spans"]

ENDPOINT_ENV = "CORPUSQG_ENDPOINT"
EMBED_ENDPOINT_ENV = "CORPUSQG_EMBED_ENDPOINT"


class PipelineError(RuntimeError):
    """A pipeline stage failed; the manifest records the failure point."""


@dataclass
class PipelineConfig:
    """All knobs for one pipeline run (mirrors the run config file)."""

    input: str
    strict: bool = False
    min_date: str | None = None
    terms: tuple[str, ...] = ()
    match_mode: str = "any"
    window_size: int = 10
    stride: int = 5
    min_sentences_per_passage: int = 2
    backend: str = "mock"
    endpoint: str | None = None
    beams: int = 4
    max_question_tokens: int = 64
    questions_per_span: int = 1
    batch_size: int = 16
    max_inflight_requests: int = 4
    max_retries: int = 3
    banned_terms_path: str | None = None
    aggressive_normalize: bool = False
    top: int | None = None
    min_docs: int = 1
    groups_path: str | None = None
    bucket: str = "month"
    stem: bool = False
    gold_path: str | None = None
    embed_backend: str = "stub"
    embed_endpoint: str | None = None
    embed_dim: int = 32
    match_k: int = 3
    seed: int = 13

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        with open(path, "r", encoding="utf-8") as handle:
            obj = json.load(handle)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise PipelineError(f"unknown config keys: {sorted(unknown)}")
        if "terms" in obj:
            obj["terms"] = tuple(obj["terms"])
        return cls(**obj)

    def to_dict(self) -> dict:
        out = {}
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            out[name] = list(value) if isinstance(value, tuple) else value
        # Group generation knobs so the manifest count check can find them.
        out["generation"] = {"questions_per_span": self.questions_per_span}
        return out

    def corpus_filter(self) -> CorpusFilter | None:
        if self.min_date is None and not self.terms:
            return None
        if self.min_date is None or not self.terms:
            raise PipelineError("min_date and terms must be provided together")
        return CorpusFilter(
            min_date=date.fromisoformat(self.min_date),
            keyword_terms=self.terms,
            match_mode=self.match_mode,
        )

    def window_config(self) -> WindowConfig:
        return WindowConfig(
            window_size=self.window_size,
            stride=self.stride,
            min_sentences_per_passage=self.min_sentences_per_passage,
        )

    def generation_config(self) -> GenerationConfig:
        return GenerationConfig(
            beams=self.beams,
            max_question_tokens=self.max_question_tokens,
            questions_per_span=self.questions_per_span,
            endpoint=self.resolved_endpoint(),
            batch_size=self.batch_size,
            max_inflight_requests=self.max_inflight_requests,
            max_retries=self.max_retries,
            retry_backoff_seconds=0.1,
        )

    def resolved_endpoint(self) -> str | None:
        return os.environ.get(ENDPOINT_ENV) or self.endpoint

    def resolved_embed_endpoint(self) -> str | None:
        return os.environ.get(EMBED_ENDPOINT_ENV) or self.embed_endpoint


def write_spans(spans, path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for span in spans:
            handle.write(json.dumps(span.to_json(), ensure_ascii=False, sort_keys=True))
            handle.write("\n")
            count += 1
    return count


def read_spans(path: str | Path):
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                yield SentenceSpan.from_json(json.loads(line))


def _count_lines(path: Path) -> int:
    with open(path, "r", encoding="utf-8") as handle:
        return sum(1 for line in handle if line.strip())


def _atomic(path: Path, write: Callable[[Path], dict | None]) -> dict:
    """Write into a temp file and rename, so checkpoints are all-or-nothing."""
    tmp = path.with_name(path.name + ".tmp")
    counts = write(tmp)
    os.replace(tmp, path)
    return counts or {}


def run_pipeline(config: PipelineConfig, workdir: str | Path, force: bool = False) -> RunManifest:
    """Run all configured stages, checkpointing each artifact to workdir.

    Existing artifacts are reused (stage recorded as "resumed") unless
    ``force`` is set. Raises PipelineError after recording a failed stage
    in the manifest.
    """
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(tool_version=__version__, seed=config.seed, config=config.to_dict())
    manifest_path = workdir / "manifest.json"

    input_path = Path(config.input)
    if not input_path.exists():
        record = manifest.begin_stage("ingest", {"corpus": str(input_path)}, {})
        record.status = "failed"
        record.error = f"input file not found: {input_path}"
        record.finished_at = record.started_at
        manifest.save(manifest_path)
        raise PipelineError(record.error)

    corpus_path = workdir / "corpus.jsonl"
    spans_path = workdir / "spans.jsonl"
    questions_path = workdir / "questions.jsonl"
    clean_path = workdir / "clean.jsonl"
    freq_path = workdir / "freq.csv"

    def stage(name: str, inputs: dict, outputs: dict, compute: Callable[[], dict]) -> None:
        record = manifest.begin_stage(name, inputs, outputs)
        targets = [Path(p) for p in outputs.values()]
        try:
            if targets and all(t.exists() for t in targets) and not force:
                record.status = "resumed"
                record.counts = _recount(name, targets)
            else:
                record.counts = compute()
                record.status = "completed"
        except Exception as exc:
            record.status = "failed"
            record.error = str(exc)
            record.finished_at = _now()
            manifest.save(manifest_path)
            raise PipelineError(f"stage {name} failed: {exc}") from exc
        record.finished_at = _now()
        manifest.save(manifest_path)

    def _recount(name: str, targets: list[Path]) -> dict:
        if name == "ingest":
            return {"documents_kept": _count_lines(targets[0])}
        if name == "spans":
            return {"spans": _count_lines(targets[0])}
        if name == "generate":
            return {"generations": _count_lines(targets[0])}
        if name == "postprocess":
            return {"questions_kept": _count_lines(targets[0])}
        if name == "aggregate":
            return {"unique_questions": _count_lines(targets[0]) - 1}  # header row
        return {}

    # ingest
    def do_ingest() -> dict:
        docs = load_corpus(input_path, strict=config.strict)
        corpus_filter = config.corpus_filter()
        total = 0

        def counted(stream):
            nonlocal total
            for doc in stream:
                total += 1
                yield doc

        stream = counted(docs)
        if corpus_filter is not None:
            stream = filter_corpus(stream, corpus_filter)
        kept = _atomic(corpus_path, lambda tmp: {"n": write_corpus(stream, tmp)})["n"]
        return {"documents_in": total, "documents_kept": kept}

    stage("ingest", {"corpus": str(input_path)}, {"corpus": str(corpus_path)}, do_ingest)

    # spans
    def do_spans() -> dict:
        window_cfg = config.window_config()

        def all_spans():
            for doc in load_corpus(corpus_path):
                yield from document_spans(doc, window_cfg)

        n = _atomic(spans_path, lambda tmp: {"n": write_spans(all_spans(), tmp)})["n"]
        return {"spans": n}

    stage("spans", {"corpus": str(corpus_path)}, {"spans": str(spans_path)}, do_spans)

    # generate
    def do_generate() -> dict:
        gen_cfg = config.generation_config()
        if config.backend == "mock":
            backend = MockBackend()
        elif config.backend == "remote":
            endpoint = config.resolved_endpoint()
            if not endpoint:
                raise PipelineError("remote backend requires an endpoint")
            backend = RemoteBackend(endpoint)
        else:
            raise PipelineError(f"unknown generation backend: {config.backend}")
        dates = {doc.doc_id: doc.publish_date for doc in load_corpus(corpus_path)}
        summary = GenerationSummary()
        n = _atomic(
            questions_path,
            lambda tmp: {
                "n": write_question_records(
                    generate_records(read_spans(spans_path), gen_cfg, backend, dates, summary),
                    tmp,
                )
            },
        )["n"]
        return {"generations": n, "generation_failures": summary.failures}

    stage(
        "generate",
        {"spans": str(spans_path), "corpus": str(corpus_path)},
        {"questions": str(questions_path)},
        do_generate,
    )

    # postprocess
    def do_postprocess() -> dict:
        if config.banned_terms_path:
            terms = load_banned_terms(config.banned_terms_path)
            filter_cfg = FilterConfig(banned_substrings=terms, banned_publisher_names=())
        else:
            filter_cfg = FilterConfig()
        summary = FilterSummary()

        def normalized():
            for record in filter_questions(
                read_question_records(questions_path), filter_cfg, summary
            ):
                yield QuestionRecord(
                    question=normalize_question(record.question, config.aggressive_normalize),
                    doc_id=record.doc_id,
                    span_index=record.span_index,
                    publish_date=record.publish_date,
                    backend_id=record.backend_id,
                )

        n = _atomic(clean_path, lambda tmp: {"n": write_question_records(normalized(), tmp)})["n"]
        return {"questions_kept": n, "questions_dropped": summary.dropped}

    stage(
        "postprocess",
        {"questions": str(questions_path)},
        {"clean": str(clean_path)},
        do_postprocess,
    )

    # aggregate
    def do_aggregate() -> dict:
        entries = count_frequencies(read_question_records(clean_path))
        unique = len(entries)
        if config.min_docs > 1:
            entries = filter_by_doc_frequency(entries, config.min_docs)
        _atomic(
            freq_path,
            lambda tmp: {"n": write_frequency_csv(entries, tmp, top=config.top)},
        )
        return {"unique_questions": unique, "frequency_rows": len(entries[: config.top])}

    stage("aggregate", {"clean": str(clean_path)}, {"freq": str(freq_path)}, do_aggregate)

    # timeseries (optional)
    if config.groups_path:
        series_path = workdir / "series.csv"

        def do_timeseries() -> dict:
            with open(config.groups_path, "r", encoding="utf-8") as handle:
                groups = json.load(handle)
            series = keyword_group_series(
                read_question_records(clean_path),
                groups,
                bucket=config.bucket,
                stem=config.stem,
            )
            _atomic(series_path, lambda tmp: write_series_csv(series, tmp))
            return {"series_groups": len(series)}

        stage(
            "timeseries",
            {"clean": str(clean_path), "groups": str(config.groups_path)},
            {"series": str(series_path)},
            do_timeseries,
        )

    # frequent-question matching (optional)
    if config.gold_path:
        sheet_path = workdir / "sheet.csv"

        def do_match() -> dict:
            with open(config.gold_path, "r", encoding="utf-8") as handle:
                gold = [
                    json.loads(line)["question"] for line in handle if line.strip()
                ]
            entries = filter_by_doc_frequency(read_frequency_csv(freq_path), config.min_docs)
            if config.embed_backend == "stub":
                embedder = HashEmbedder(dim=config.embed_dim, seed=config.seed)
            elif config.embed_backend == "remote":
                endpoint = config.resolved_embed_endpoint()
                if not endpoint:
                    raise PipelineError("remote embedder requires an endpoint")
                embedder = RemoteEmbedder(endpoint)
            else:
                raise PipelineError(f"unknown embedding backend: {config.embed_backend}")
            sheet = frequent_question_experiment(gold, entries, embedder, k=config.match_k)
            _atomic(sheet_path, lambda tmp: sheet.write_csv(tmp))
            return {"sheet_rows": len(sheet.rows), "sheet_skipped": len(sheet.skipped)}

        stage(
            "match",
            {"freq": str(freq_path), "gold": str(config.gold_path)},
            {"sheet": str(sheet_path)},
            do_match,
        )

    violations = manifest.count_violations()
    if violations:
        raise PipelineError(f"count invariant violated: {violations}")
    return manifest
