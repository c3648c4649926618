"""Batch driver: preprocess, generate, eval, serve.

Every subcommand is deterministic given its flags and seed when running on
the stub backends, and the effective configuration is echoed into every
output artifact (embedded for our own formats, as a sidecar for story
files).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .backends import BackendError, BackendSuite, GenerationParams, rate_limited, remote_suite, stub_suite
from .chat_pipeline import (
    PromptMethod,
    baseline_story_llm,
    generate_long_story_llm,
    generate_story_llm,
    related_baseline_story_llm,
    write_transcripts_jsonl,
)
from .config import CLEANING_RULES_VERSION, DEFAULT_GAMMA, DEFAULT_LENGTH, DEFAULT_SEED, Markers
from .corpus import (
    FIVE_SENTENCE_CSV,
    JSONL,
    STORY_FORMATS,
    CorpusFormatError,
    Sentence,
    Story,
    load_corpus,
    split_sentences,
    write_stories,
)
from .endpoints import generate_endpoints
from .infill import infill_story
from .metrics import TokenShapeParser, evaluate_corpus, format_table
from .sampling import (
    build_infill_samples,
    build_phrase_list_samples,
    build_position_samples,
    build_stop_samples,
    write_samples_jsonl,
)

LLM_VARIANTS = ("standard", "long", "baseline", "ablation")


def _add_backend_flags(parser: argparse.ArgumentParser) -> None:
    # BOOKEND_* environment variables supply defaults; flags override.
    parser.add_argument(
        "--backend",
        choices=("stub", "remote"),
        default=os.environ.get("BOOKEND_BACKEND", "stub"),
        help="model backend kind",
    )
    parser.add_argument(
        "--backend-url",
        default=os.environ.get("BOOKEND_BACKEND_URL"),
        help="base URL for --backend remote",
    )
    parser.add_argument("--seed", type=int, default=int(os.environ.get("BOOKEND_SEED", DEFAULT_SEED)))


def _add_marker_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mask-marker", default="<mask>")
    parser.add_argument("--sep-marker", default="<sep>")
    parser.add_argument("--plist-marker", default="<plist>")
    parser.add_argument("--stop-marker", default="<stop>")


def _markers(args: argparse.Namespace) -> Markers:
    return Markers(mask=args.mask_marker, sep=args.sep_marker, phrase_list=args.plist_marker, stop=args.stop_marker)


def _suite(args: argparse.Namespace, markers: Markers) -> BackendSuite:
    if args.backend == "remote":
        if not args.backend_url:
            raise ValueError("--backend remote requires --backend-url")
        return remote_suite(args.backend_url, mask_marker=markers.mask)
    return stub_suite(seed=args.seed, mask_marker=markers.mask)


def _effective_config(args: argparse.Namespace, suite: BackendSuite | None, markers: Markers, **extra) -> dict:
    config = {
        "tool": f"bookend {__version__}",
        "command": args.command,
        "seed": args.seed,
        "markers": markers.to_dict(),
        "cleaning_rules_version": CLEANING_RULES_VERSION,
    }
    if suite is not None:
        config["backends"] = suite.describe()
    config.update(extra)
    return config


def _write_sidecar(out_path: Path, config: dict) -> None:
    sidecar = out_path.with_suffix(out_path.suffix + ".config.json")
    sidecar.write_text(json.dumps(config, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def _read_starts(args: argparse.Namespace) -> list[Sentence]:
    texts: list[str] = []
    if args.start:
        texts.extend(args.start)
    if args.starts:
        for line in Path(args.starts).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if line:
                texts.append(line)
    if not texts:
        raise ValueError("no starts given: use --start or --starts")
    starts = []
    for text in texts:
        pieces = split_sentences(text)
        if len(pieces) != 1:
            raise ValueError(f"each start must be exactly one sentence, got {len(pieces)}: {text!r}")
        starts.append(Sentence(pieces[0]))
    return starts


def cmd_preprocess(args: argparse.Namespace) -> int:
    markers = _markers(args)
    suite = _suite(args, markers)
    corpus = load_corpus(args.corpus, args.format)
    if not corpus:
        raise ValueError(f"no stories in {args.corpus}")

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = _effective_config(
        args, suite, markers, gamma=args.gamma, corpus=str(args.corpus), stories=len(corpus), negatives=args.negatives
    )

    stop_samples = build_stop_samples(corpus, suite.tokens, args.gamma)
    phrase_samples = build_phrase_list_samples(corpus, suite.tokens, args.gamma)
    position_samples, infill_samples = [], []
    skipped_position = skipped_infill = 0
    for index, story in enumerate(corpus):
        if len(story) >= 4:
            position_samples.extend(
                build_position_samples(story, seed=args.seed + index, mask_marker=markers.mask, negatives=args.negatives)
            )
        else:
            skipped_position += 1
        if len(story) >= 3:
            infill_samples.extend(build_infill_samples(story, markers.mask, markers.sep))
        else:
            skipped_infill += 1
    config["skipped"] = {"position": skipped_position, "infill": skipped_infill}

    for name, samples in (
        ("phrase_list_samples.jsonl", phrase_samples),
        ("stop_samples.jsonl", stop_samples),
        ("position_samples.jsonl", position_samples),
        ("infill_samples.jsonl", infill_samples),
    ):
        write_samples_jsonl(out_dir / name, samples, config=config)

    print(
        json.dumps(
            {
                "phrase_list_samples": len(phrase_samples),
                "stop_samples": len(stop_samples),
                "position_samples": len(position_samples),
                "infill_samples": len(infill_samples),
                "out_dir": str(out_dir),
            }
        )
    )
    return 0


def _generate_one(args, suite: BackendSuite, markers: Markers, index: int, start: Sentence):
    params = GenerationParams(seed=args.seed + index)
    story_id = f"gen-{index:04d}"
    if args.scheme == "lm":
        endpoints = generate_endpoints(start, suite.text, markers=markers, params=params)
        story, trace = infill_story(
            endpoints.start, endpoints.stop, args.n, suite.positions, suite.text, markers, params, story_id=story_id
        )
        return story, {"id": story_id, "trace": [step.to_dict() for step in trace]}
    method = PromptMethod(args.method)
    if args.variant == "standard":
        story, transcript = generate_story_llm(method, start, args.n, suite.chat, params, story_id=story_id)
    elif args.variant == "long":
        story, transcript = generate_long_story_llm(method, start, suite.chat, params, story_id=story_id)
    elif args.variant == "baseline":
        story, transcript = baseline_story_llm(start, args.n, suite.chat, params, story_id=story_id)
    else:
        story, transcript = related_baseline_story_llm(start, args.n, suite.chat, params, story_id=story_id)
    return story, transcript


def cmd_generate(args: argparse.Namespace) -> int:
    markers = _markers(args)
    suite = _suite(args, markers)
    if args.rate_limit > 0:
        suite = rate_limited(suite, args.rate_limit)
    starts = _read_starts(args)
    if args.scheme == "llm" and args.variant == "standard" and args.method is None:
        raise ValueError("--scheme llm requires --method {1..6} (or a non-standard --variant)")
    if args.scheme == "llm" and args.method is None:
        args.method = 2  # long variant still needs an endpoint method

    jobs = max(1, args.jobs)
    if jobs > 1 and not suite.concurrency_safe:
        jobs = 1
    indexed = list(enumerate(starts))
    if jobs == 1:
        results = [_generate_one(args, suite, markers, i, s) for i, s in indexed]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda pair: _generate_one(args, suite, markers, *pair), indexed))

    stories = [story for story, _ in results]
    out_path = Path(args.out)
    write_stories(stories, out_path, args.format)
    config = _effective_config(
        args,
        suite,
        markers,
        scheme=args.scheme,
        method=args.method,
        variant=args.variant if args.scheme == "llm" else None,
        n=args.n,
        starts=len(starts),
        jobs=jobs,
    )
    _write_sidecar(out_path, config)

    if args.transcripts:
        artifacts = [artifact for _, artifact in results]
        if args.scheme == "llm":
            write_transcripts_jsonl(args.transcripts, artifacts)
        else:
            with Path(args.transcripts).open("w", encoding="utf-8") as fh:
                for artifact in artifacts:
                    fh.write(json.dumps(artifact, ensure_ascii=False) + "\n")
    print(json.dumps({"stories": len(stories), "out": str(out_path)}))
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    markers = _markers(args)
    suite = _suite(args, markers)
    stories = load_corpus(args.stories, args.format)
    references = load_corpus(args.references, args.format) if args.references else None
    parser = TokenShapeParser()
    config = _effective_config(
        args, suite, markers, stories=str(args.stories), references=str(args.references) if args.references else None
    )
    report = evaluate_corpus(stories, suite.sentences, parser, references=references, config=config)
    table = format_table(report, row_label=Path(args.stories).stem)
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n", encoding="utf-8")
    if args.table:
        Path(args.table).write_text(table + "\n", encoding="utf-8")
    print(table)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    markers = _markers(args)
    service_config = ServiceConfig(
        data_dir=args.data_dir,
        seed=args.seed,
        n=args.n,
        gamma=args.gamma,
        markers=markers,
        backend=args.backend,
        backend_url=args.backend_url,
        frontend_dir=args.frontend_dir,
    )
    uvicorn.run(create_app(service_config), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bookend", description=__doc__)
    parser.add_argument("--config", default=None, help="JSON file of flag defaults")
    subparsers = parser.add_subparsers(dest="command", required=True)

    p = subparsers.add_parser("preprocess", help="emit the four fine-tuning sample families")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=STORY_FORMATS, default=FIVE_SENTENCE_CSV)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
    p.add_argument("--negatives", type=int, default=1, help="negative position samples per story")
    _add_backend_flags(p)
    _add_marker_flags(p)
    p.set_defaults(func=cmd_preprocess)

    p = subparsers.add_parser("generate", help="generate bookended stories")
    p.add_argument("--scheme", choices=("lm", "llm"), default="lm")
    p.add_argument("--method", type=int, choices=range(1, 7), default=None, help="llm endpoint method")
    p.add_argument("--variant", choices=LLM_VARIANTS, default="standard", help="llm pipeline variant")
    p.add_argument("--start", action="append", default=[], help="a start sentence (repeatable)")
    p.add_argument("--starts", default=None, help="file with one start sentence per line")
    p.add_argument("--n", type=int, default=DEFAULT_LENGTH, help="total sentences per story")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=STORY_FORMATS, default=JSONL)
    p.add_argument("--transcripts", default=None, help="write per-story traces/transcripts here")
    p.add_argument("--jobs", type=int, default=1, help="parallel starts (order-stable)")
    p.add_argument("--rate-limit", type=float, default=0.0, help="max backend requests/second (0 = off)")
    _add_backend_flags(p)
    _add_marker_flags(p)
    p.set_defaults(func=cmd_generate)

    p = subparsers.add_parser("eval", help="score stories and write a report")
    p.add_argument("--stories", required=True)
    p.add_argument("--references", default=None)
    p.add_argument("--format", choices=STORY_FORMATS, default=JSONL)
    p.add_argument("--out", default=None, help="JSON report path")
    p.add_argument("--table", default=None, help="aligned text table path")
    _add_backend_flags(p)
    _add_marker_flags(p)
    p.set_defaults(func=cmd_eval)

    p = subparsers.add_parser("serve", help="run the interactive session service")
    p.add_argument("--host", default=os.environ.get("BOOKEND_HOST", "127.0.0.1"))
    p.add_argument("--port", type=int, default=int(os.environ.get("BOOKEND_PORT", "8080")))
    p.add_argument("--data-dir", default=os.environ.get("BOOKEND_DATA_DIR", "./sessions"))
    p.add_argument("--n", type=int, default=DEFAULT_LENGTH)
    p.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
    p.add_argument("--frontend-dir", default=None, help="static directory for the web UI")
    _add_backend_flags(p)
    _add_marker_flags(p)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()

    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config:
        defaults = json.loads(Path(known.config).read_text(encoding="utf-8"))
        if not isinstance(defaults, dict):
            parser.error("--config file must hold a JSON object")
        for action in parser._subparsers._group_actions[0].choices.values():  # type: ignore[union-attr]
            valid = {a.dest for a in action._actions}
            action.set_defaults(**{k: v for k, v in defaults.items() if k in valid})

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, CorpusFormatError, BackendError, OSError) as exc:
        print(json.dumps({"code": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
