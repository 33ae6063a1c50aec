"""Command-line entry point: ``ctxasr {prepare,decode,score,mask,serve}``.

Exit status: 0 success, 1 data or runtime error, 2 usage error.

Any long option can also come from a JSON file given with ``--config``
(keys are option names, dashes or underscores); flags on the command line
win. The effective configuration is echoed to stderr and saved next to the
outputs.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from ._io import atomic_write_text, write_jsonl
from .backend import (
    ENDPOINT_ENV,
    DegradationConfig,
    EndpointConfig,
    HttpBackend,
    ReplayBackend,
    SimulatorBackend,
)
from .corpus import load_conversations
from .decode import ContextSource, PipelineConfig, run_pipeline
from .draws import SplitMix64, derive_seed
from .errors import CtxAsrError
from .masking import MaskingConfig, mask_text
from .prepare import emit_training_manifest
from .prompts import load_catalog
from .scoring import load_hypotheses, score

log = logging.getLogger("ctxasr")

_INTERNAL = {"command", "func", "config", "verbose"}


class UsageError(Exception):
    pass


def _add_masking(p: argparse.ArgumentParser) -> None:
    p.add_argument("--prob", type=float, default=0.5, help="probability a context side is masked")
    p.add_argument("--ratio", type=float, default=0.25, help="upper bound of the removal ratio")
    p.add_argument("--spans", type=int, default=3, help="maximum number of deleted spans")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ctxasr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with option values")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", parents=[common], help="emit a training manifest")
    p.add_argument("input", help="segment manifest (JSONL)")
    p.add_argument("output", help="training manifest to write (JSONL)")
    p.add_argument("--mode", required=True, choices=["single", "history", "bidirectional", "mixed"])
    p.add_argument("--context", default="bidirectional", choices=["history", "bidirectional"],
                   help="contextual set used by --mode mixed")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--catalog", help="prompt catalog JSON overriding the defaults")
    p.add_argument("--parallelism", type=int, default=1)
    _add_masking(p)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("decode", parents=[common], help="run two-stage decoding")
    p.add_argument("manifest", help="segment manifest (JSONL)")
    p.add_argument("--out-dir", default="decode_out")
    p.add_argument("--backend", default="replay", choices=["http", "replay", "simulate"])
    p.add_argument("--stages", default="both", choices=["1", "2", "both"])
    p.add_argument("--context", default="stage1", choices=["stage1", "groundtruth"])
    p.add_argument("--stage1-hyps", help="stage-1 hypothesis file (for --stages 2 --context stage1)")
    p.add_argument("--catalog")
    p.add_argument("--parallelism", type=int, default=1)
    p.add_argument("--partial", action="store_true", help="keep going past per-segment failures")
    p.add_argument("--repeat-n", type=int, default=5, help="n-gram size of the repetition guard")
    p.add_argument("--beam-size", type=int, default=4)
    p.add_argument("--max-context-chars", type=int)
    p.add_argument("--replay-table", help="JSONL of {id, text} for --backend replay")
    p.add_argument("--endpoint", help=f"inference server base URL (or ${ENDPOINT_ENV})")
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--retries", type=int, default=3)
    p.add_argument("--max-in-flight", type=int, default=8)
    p.add_argument("--send-audio", action="store_true", help="upload audio as base64")
    p.add_argument("--seed", type=int, default=0, help="simulator seed")
    p.add_argument("--error-rate", type=float, default=0.1, help="simulator character error rate")
    p.add_argument("--context-gain", type=float, default=0.0,
                   help="simulator: fraction of errors removed by perfect context")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("score", parents=[common], help="WER/CER/MER of a hypothesis file")
    p.add_argument("hypotheses", help="hypothesis JSONL with id and text")
    p.add_argument("manifest", help="segment manifest with reference text")
    p.add_argument("--json", help="also write the report as JSON here")
    p.add_argument("--split-accents", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--macro", action="store_true", help="MER as the mean of group rates")
    p.add_argument("--raw", action="store_true", help="skip text normalization")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("mask", parents=[common], help="mask stdin lines (debugging aid)")
    p.add_argument("--seed", type=int, default=0)
    _add_masking(p)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("serve", parents=[common], help="serve the HTTP API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--backend", default="none", choices=["none", "replay", "simulate"])
    p.add_argument("--replay-table")
    p.add_argument("--manifest", help="references for --backend simulate")
    p.add_argument("--catalog")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--error-rate", type=float, default=0.1)
    p.add_argument("--context-gain", type=float, default=0.0)
    p.set_defaults(func=cmd_serve)
    return parser


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in parser._subparsers._group_actions:
        if name in action.choices:
            return action.choices[name]
    raise KeyError(name)


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    pre.add_argument("command", nargs="?")
    known, _ = pre.parse_known_args(argv)
    if not known.config or known.command is None:
        return
    try:
        sub = _subparser(parser, known.command)
    except KeyError:
        return
    try:
        with open(known.config, encoding="utf-8") as fh:
            values = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {known.config}: {exc}") from None
    if not isinstance(values, dict):
        raise UsageError(f"config {known.config} must be a JSON object")
    dests = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in values.items():
        dest = key.replace("-", "_")
        if dest not in dests or dest in _INTERNAL:
            raise UsageError(f"config key {key!r} is not an option of '{known.command}'")
        action = dests[dest]
        if not action.option_strings:
            raise UsageError(f"config key {key!r} is positional; give it on the command line")
        defaults[dest] = value
        action.required = False
    sub.set_defaults(**defaults)


def effective_config(args: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _INTERNAL}


def _emit_config(args: argparse.Namespace, sidecar: Path | None) -> None:
    cfg = effective_config(args)
    text = json.dumps({"command": args.command, **cfg}, ensure_ascii=False, indent=2, sort_keys=True) + "\n"
    if args.verbose:
        sys.stderr.write(text)
    else:
        sys.stderr.write(f"ctxasr {args.command}: " + json.dumps(cfg, ensure_ascii=False, sort_keys=True) + "\n")
    if sidecar is not None:
        atomic_write_text(sidecar, text)


def cmd_prepare(args) -> int:
    masking = MaskingConfig(args.prob, args.ratio, args.spans)
    catalog = load_catalog(args.catalog)
    conversations = load_conversations(args.input)
    samples = emit_training_manifest(
        conversations, masking, catalog, args.mode, args.seed, context=args.context, parallelism=args.parallelism
    )
    write_jsonl(args.output, (s.to_record() for s in samples))
    _emit_config(args, Path(args.output + ".config.json"))
    log.info("wrote %d samples to %s", len(samples), args.output)
    return 0


def _build_backend(args, conversations):
    if args.backend == "replay":
        if not args.replay_table:
            raise UsageError("--backend replay needs --replay-table")
        return ReplayBackend.from_file(args.replay_table)
    if args.backend == "simulate":
        config = DegradationConfig(error_rate=args.error_rate)
        return SimulatorBackend.from_conversations(conversations, config, args.seed, args.context_gain)
    if args.backend == "http":
        endpoint = EndpointConfig.from_env(
            args.endpoint,
            timeout=args.timeout,
            retries=args.retries,
            max_in_flight=args.max_in_flight,
            send_audio=args.send_audio,
        )
        return HttpBackend(endpoint)
    raise UsageError(f"--backend {args.backend} cannot decode")


def cmd_decode(args) -> int:
    if args.stages == "2" and args.context == "stage1" and not args.stage1_hyps:
        raise UsageError("--stages 2 --context stage1 needs --stage1-hyps")
    if args.backend == "http" and not (args.endpoint or os.environ.get(ENDPOINT_ENV)):
        raise UsageError(f"--backend http needs --endpoint or ${ENDPOINT_ENV}")
    conversations = load_conversations(args.manifest)
    backend = _build_backend(args, conversations)
    stage1 = load_hypotheses(args.stage1_hyps) if args.stage1_hyps else None
    config = PipelineConfig(
        backend=backend,
        catalog=load_catalog(args.catalog),
        parallelism=args.parallelism,
        context_source=ContextSource(args.context),
        repeat_n=args.repeat_n,
        beam_size=args.beam_size,
        partial=args.partial,
        max_context_chars=args.max_context_chars,
    )
    with backend:
        report = run_pipeline(args.manifest, config, args.out_dir, stages=args.stages, stage1_hyps=stage1)
    _emit_config(args, Path(args.out_dir) / "config.json")
    print(json.dumps(report.summary(), ensure_ascii=False))
    return 0


def cmd_score(args) -> int:
    from .corpus import load_manifest

    report = score(
        load_hypotheses(args.hypotheses),
        load_manifest(args.manifest),
        split_accents=args.split_accents,
        macro=args.macro,
        raw=args.raw,
    )
    print(report.to_table())
    if args.json:
        atomic_write_text(args.json, json.dumps(report.to_json(), ensure_ascii=False, indent=2) + "\n")
        _emit_config(args, Path(args.json + ".config.json"))
    else:
        _emit_config(args, None)
    return 0


def cmd_mask(args) -> int:
    config = MaskingConfig(args.prob, args.ratio, args.spans)
    _emit_config(args, None)
    out = sys.stdout
    for index, line in enumerate(sys.stdin):
        ending = "\n" if line.endswith("\n") else ""
        text = line[: len(line) - len(ending)]
        out.write(mask_text(text, config, SplitMix64(derive_seed(args.seed, str(index)))) + ending)
    out.flush()
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .corpus import load_conversations as _load
    from .service import create_app

    backend = None
    if args.backend == "replay":
        if not args.replay_table:
            raise UsageError("--backend replay needs --replay-table")
        backend = ReplayBackend.from_file(args.replay_table)
    elif args.backend == "simulate":
        if not args.manifest:
            raise UsageError("--backend simulate needs --manifest")
        backend = SimulatorBackend.from_conversations(
            _load(args.manifest), DegradationConfig(error_rate=args.error_rate), args.seed, args.context_gain
        )
    _emit_config(args, None)
    uvicorn.run(create_app(backend, load_catalog(args.catalog)), host=args.host, port=args.port)
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config_file(parser, argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ctxasr: error: {exc}", file=sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"ctxasr {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (CtxAsrError, ValueError, OSError) as exc:
        print(f"ctxasr {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
