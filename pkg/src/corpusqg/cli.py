"""Command-line interface: one subcommand per pipeline stage plus `run`."""

from __future__ import annotations

import json
import sys
from datetime import date
from pathlib import Path

import click

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
from .manifest import RunManifest
from .match_eval import (
    AnnotationSheet,
    HashEmbedder,
    RemoteEmbedder,
    frequent_question_experiment,
    per_document_experiment,
    summarize_annotations,
)
from .pipeline import (
    EMBED_ENDPOINT_ENV,
    ENDPOINT_ENV,
    PipelineConfig,
    PipelineError,
    read_spans,
    run_pipeline,
    write_spans,
)
from .postprocess import (
    FilterConfig,
    FilterSummary,
    filter_questions,
    load_banned_terms,
    normalize_question,
)
from .preprocess import WindowConfig, document_spans
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
from .topics import TopicModel, fit_lda_texts, representative_questions, top_terms


@click.group()
@click.version_option(version=__version__)
def main() -> None:
    """Corpus mining by question generation."""


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("--min-date", default=None, help="Exclusive lower date bound, YYYY-MM-DD.")
@click.option("--terms", default=None, help="Comma-separated keyword terms.")
@click.option("--match", "match_mode", type=click.Choice(["any", "all"]), default="any")
@click.option("--strict", is_flag=True, help="Abort on the first malformed record.")
def ingest(input_path, output_path, min_date, terms, match_mode, strict) -> None:
    """Load a JSON-lines corpus, optionally filter it, and write it back out."""
    if (min_date is None) != (terms is None):
        raise click.UsageError("--min-date and --terms must be given together")
    issues: list[tuple[int, str]] = []
    docs = load_corpus(input_path, strict=strict, issues=issues)
    if min_date is not None:
        corpus_filter = CorpusFilter(
            min_date=date.fromisoformat(min_date),
            keyword_terms=tuple(t.strip() for t in terms.split(",") if t.strip()),
            match_mode=match_mode,
        )
        docs = filter_corpus(docs, corpus_filter)
    kept = write_corpus(docs, output_path)
    for line_no, message in issues:
        click.echo(f"skipped record: {message}", err=True)
    click.echo(f"wrote {kept} document(s) to {output_path}")


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--window", default=10, show_default=True)
@click.option("--stride", default=5, show_default=True)
@click.option("--min-sentences", default=2, show_default=True)
@click.option("--output", "output_path", required=True, type=click.Path())
def spans(input_path, window, stride, min_sentences, output_path) -> None:
    """Clean, sentence-split and window documents into spans."""
    cfg = WindowConfig(
        window_size=window, stride=stride, min_sentences_per_passage=min_sentences
    )

    def all_spans():
        for doc in load_corpus(input_path):
            yield from document_spans(doc, cfg)

    count = write_spans(all_spans(), output_path)
    click.echo(f"wrote {count} span(s) to {output_path}")


@main.command()
@click.option("--spans", "spans_path", required=True, type=click.Path(exists=True))
@click.option("--backend", type=click.Choice(["mock", "remote"]), default="mock")
@click.option("--endpoint", envvar=ENDPOINT_ENV, default=None)
@click.option("--beams", default=4, show_default=True)
@click.option("--max-tokens", default=64, show_default=True)
@click.option("--questions-per-span", default=1, show_default=True)
@click.option("--batch-size", default=16, show_default=True)
@click.option("--max-inflight", default=4, show_default=True)
@click.option("--retries", default=3, show_default=True)
@click.option("--corpus", "corpus_path", default=None, type=click.Path(exists=True),
              help="Corpus file used to attach publish dates to records.")
@click.option("--output", "output_path", required=True, type=click.Path())
def generate(spans_path, backend, endpoint, beams, max_tokens, questions_per_span,
             batch_size, max_inflight, retries, corpus_path, output_path) -> None:
    """Generate one (or more) questions per span."""
    cfg = GenerationConfig(
        beams=beams,
        max_question_tokens=max_tokens,
        questions_per_span=questions_per_span,
        endpoint=endpoint,
        batch_size=batch_size,
        max_inflight_requests=max_inflight,
        max_retries=retries,
    )
    if backend == "remote":
        if not endpoint:
            raise click.UsageError(f"remote backend requires --endpoint or ${ENDPOINT_ENV}")
        backend_impl = RemoteBackend(endpoint)
    else:
        backend_impl = MockBackend()
    dates = None
    if corpus_path:
        dates = {doc.doc_id: doc.publish_date for doc in load_corpus(corpus_path)}
    summary = GenerationSummary()
    count = write_question_records(
        generate_records(read_spans(spans_path), cfg, backend_impl, dates, summary),
        output_path,
    )
    click.echo(
        f"wrote {count} record(s) to {output_path} "
        f"(spans: {summary.spans_in}, failures: {summary.failures})"
    )


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--banned-terms", "banned_terms_path", default=None, type=click.Path(exists=True),
              help="Newline-separated ban list replacing the shipped defaults.")
@click.option("--aggressive", is_flag=True,
              help="Also map hyphens to spaces and strip trailing question marks.")
@click.option("--output", "output_path", required=True, type=click.Path())
def postprocess(input_path, banned_terms_path, aggressive, output_path) -> None:
    """Drop boilerplate questions and normalize the survivors."""
    if banned_terms_path:
        cfg = FilterConfig(
            banned_substrings=load_banned_terms(banned_terms_path),
            banned_publisher_names=(),
        )
    else:
        cfg = FilterConfig()
    summary = FilterSummary()

    def normalized():
        for record in filter_questions(read_question_records(input_path), cfg, summary):
            yield QuestionRecord(
                question=normalize_question(record.question, aggressive),
                doc_id=record.doc_id,
                span_index=record.span_index,
                publish_date=record.publish_date,
                backend_id=record.backend_id,
            )

    count = write_question_records(normalized(), output_path)
    click.echo(f"wrote {count} record(s) to {output_path} (dropped: {summary.dropped})")


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--top", default=None, type=int, help="Keep only the top N rows.")
@click.option("--min-docs", default=1, show_default=True,
              help="Keep questions generated from at least this many documents.")
@click.option("--output", "output_path", required=True, type=click.Path())
def aggregate(input_path, top, min_docs, output_path) -> None:
    """Build the question frequency table (rank,question,span_count,doc_count)."""
    entries = count_frequencies(read_question_records(input_path))
    unique = len(entries)
    if min_docs > 1:
        entries = filter_by_doc_frequency(entries, min_docs)
    rows = write_frequency_csv(entries, output_path, top=top)
    click.echo(f"wrote {rows} row(s) to {output_path} (unique questions: {unique})")


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--groups", "groups_path", required=True, type=click.Path(exists=True),
              help="JSON object mapping group label to a list of phrases.")
@click.option("--bucket", type=click.Choice(["month", "year"]), default="month")
@click.option("--stem", is_flag=True, help="Singular/plural-insensitive phrase matching.")
@click.option("--output", "output_path", required=True, type=click.Path())
def timeseries(input_path, groups_path, bucket, stem, output_path) -> None:
    """Count questions per keyword group over publication time (group,month,count)."""
    with open(groups_path, "r", encoding="utf-8") as handle:
        groups = json.load(handle)
    series = keyword_group_series(
        read_question_records(input_path), groups, bucket=bucket, stem=stem
    )
    write_series_csv(series, output_path)
    click.echo(f"wrote {len(series)} series to {output_path}")


def _make_embedder(backend: str, endpoint: str | None, dim: int, seed: int):
    if backend == "remote":
        if not endpoint:
            raise click.UsageError(f"remote embedder requires --endpoint or ${EMBED_ENDPOINT_ENV}")
        return RemoteEmbedder(endpoint)
    return HashEmbedder(dim=dim, seed=seed)


def _read_gold(path: str, require_doc_id: bool) -> list:
    rows = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            if "question" not in obj:
                raise click.UsageError(f"{path}:{line_no}: missing 'question' field")
            if require_doc_id:
                if "doc_id" not in obj:
                    raise click.UsageError(f"{path}:{line_no}: missing 'doc_id' field")
                rows.append((obj["question"], obj["doc_id"]))
            else:
                rows.append(obj["question"])
    return rows


@main.group()
def match() -> None:
    """Rank generated questions against reference questions."""


@match.command("per-doc")
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True),
              help="JSONL with fields question, doc_id.")
@click.option("--questions", "questions_path", required=True, type=click.Path(exists=True),
              help="Question records (clean.jsonl).")
@click.option("--backend", type=click.Choice(["stub", "remote"]), default="stub")
@click.option("--endpoint", envvar=EMBED_ENDPOINT_ENV, default=None)
@click.option("--k", default=3, show_default=True)
@click.option("--dim", default=32, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def match_per_doc(gold_path, questions_path, backend, endpoint, k, dim, seed, out_path) -> None:
    """Rank each document's own generations against its reference question."""
    gold = _read_gold(gold_path, require_doc_id=True)
    by_doc: dict[str, list[str]] = {}
    for record in read_question_records(questions_path):
        by_doc.setdefault(record.doc_id, []).append(record.question)
    embedder = _make_embedder(backend, endpoint, dim, seed)
    sheet = per_document_experiment(gold, by_doc, embedder, k=k, checkpoint_path=out_path)
    sheet.write_csv(out_path)
    for reference, context, reason in sheet.skipped:
        click.echo(f"skipped {reference!r} ({context}): {reason}", err=True)
    click.echo(f"wrote {len(sheet.rows)} row(s) to {out_path}")


@match.command("frequent")
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True),
              help="JSONL with field question.")
@click.option("--questions", "questions_path", required=True, type=click.Path(exists=True),
              help="Frequency table CSV (freq.csv).")
@click.option("--min-docs", default=1, show_default=True)
@click.option("--backend", type=click.Choice(["stub", "remote"]), default="stub")
@click.option("--endpoint", envvar=EMBED_ENDPOINT_ENV, default=None)
@click.option("--k", default=3, show_default=True)
@click.option("--dim", default=32, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def match_frequent(gold_path, questions_path, min_docs, backend, endpoint, k, dim, seed, out_path) -> None:
    """Rank the corpus-level frequent questions against each reference."""
    gold = _read_gold(gold_path, require_doc_id=False)
    entries = filter_by_doc_frequency(read_frequency_csv(questions_path), min_docs)
    embedder = _make_embedder(backend, endpoint, dim, seed)
    sheet = frequent_question_experiment(gold, entries, embedder, k=k, checkpoint_path=out_path)
    sheet.write_csv(out_path)
    click.echo(f"wrote {len(sheet.rows)} row(s) to {out_path}")


@match.command("summarize")
@click.option("--sheet", "sheet_path", required=True, type=click.Path(exists=True))
@click.option("--json-out", "json_path", default=None, type=click.Path())
def match_summarize(sheet_path, json_path) -> None:
    """Tally strong/weak/none labels of a completed sheet."""
    sheet = AnnotationSheet.read_csv(sheet_path)
    try:
        summary = summarize_annotations(sheet)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    click.echo(
        f"total {summary.total}: "
        f"match {summary.match} ({summary.display_percent('match')}%), "
        f"strong {summary.strong} ({summary.display_percent('strong')}%), "
        f"weak {summary.weak} ({summary.display_percent('weak')}%), "
        f"none {summary.none} ({summary.display_percent('none')}%)"
    )
    if json_path:
        with open(json_path, "w", encoding="utf-8", newline="\n") as handle:
            json.dump(summary.to_dict(), handle, ensure_ascii=False, sort_keys=True, indent=2)
            handle.write("\n")


@main.group()
def topics() -> None:
    """N-gram / LDA baselines over passages or questions."""


def _read_texts(path: str) -> list[str]:
    texts = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            if not line.strip():
                continue
            obj = json.loads(line)
            text = obj.get("text", obj.get("question"))
            if text is None:
                raise click.UsageError(f"{path}: records need a 'text' or 'question' field")
            texts.append(text)
    return texts


@topics.command("fit")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True),
              help="JSONL with a 'text' field (spans) or 'question' field (questions).")
@click.option("--k", default=20, show_default=True)
@click.option("--ngrams", default=3, show_default=True)
@click.option("--min-count", default=1, show_default=True)
@click.option("--iters", default=1000, show_default=True)
@click.option("--alpha", default=None, type=float, help="Defaults to 50/k.")
@click.option("--beta", default=0.01, show_default=True)
@click.option("--seed", default=13, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def topics_fit(input_path, k, ngrams, min_count, iters, alpha, beta, seed, out_path) -> None:
    """Fit LDA by collapsed Gibbs sampling and save the model as JSON."""
    texts = _read_texts(input_path)
    model = fit_lda_texts(
        texts,
        num_topics=k,
        max_n=ngrams,
        min_count=min_count,
        alpha=alpha,
        beta=beta,
        iterations=iters,
        seed=seed,
    )
    model.save(out_path)
    click.echo(
        f"fitted {k} topics over {len(model.doc_labels)} document(s) "
        f"({len(model.skipped_docs)} skipped, vocab {len(model.vocab)}) -> {out_path}"
    )


@topics.command("report")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--top-terms", "top_k", default=5, show_default=True)
@click.option("--drop-topics", default=None,
              help="Comma-separated topic ids to omit from the report.")
def topics_report(model_path, top_k, drop_topics) -> None:
    """Print each topic's top terms."""
    model = TopicModel.load(model_path)
    dropped = set()
    if drop_topics:
        dropped = {int(t) for t in drop_topics.split(",") if t.strip()}
    for topic in range(model.num_topics):
        if topic in dropped:
            continue
        terms = " ".join(term for term, _ in top_terms(model, top_k, topic))
        click.echo(f"{topic}\t{terms}")


@topics.command("questions")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True),
              help="Model fitted with one question per document.")
@click.option("--freq", "freq_path", required=True, type=click.Path(exists=True))
@click.option("--top-terms", "top_k", default=5, show_default=True)
def topics_questions(model_path, freq_path, top_k) -> None:
    """Print, per topic, its top terms and most representative question."""
    model = TopicModel.load(model_path)
    entries = read_frequency_csv(freq_path)
    try:
        winners = representative_questions(model, entries)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    for topic, question in enumerate(winners):
        terms = " ".join(term for term, _ in top_terms(model, top_k, topic))
        click.echo(f"{topic}\t{terms}\t{question}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--workdir", required=True, type=click.Path())
@click.option("--force", is_flag=True, help="Recompute stages even when checkpoints exist.")
def run(config_path, workdir, force) -> None:
    """Run the full pipeline with checkpoint/resume."""
    try:
        config = PipelineConfig.from_file(config_path)
        run_manifest = run_pipeline(config, workdir, force=force)
    except PipelineError as exc:
        raise click.ClickException(str(exc))
    click.echo(run_manifest.describe())


@main.group()
def manifest() -> None:
    """Inspect run manifests."""


@manifest.command("show")
@click.option("--path", "manifest_path", required=True, type=click.Path(exists=True))
def manifest_show(manifest_path) -> None:
    """Pretty-print a run manifest."""
    click.echo(RunManifest.load(manifest_path).describe())


if __name__ == "__main__":
    sys.exit(main())
