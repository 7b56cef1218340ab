"""Command line entry points: serve, run, compile.

The data directory defaults to the HAKF_DATA_DIR environment variable,
falling back to ./data.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from ..definitions import ComplexEventDefinition, compile_definition, validate
from ..errors import FusedeskError, UnmappedConceptError
from ..graph import palette_from_json
from .runner import run_headless

def default_data_dir() -> str:
    return os.environ.get("HAKF_DATA_DIR", "data")


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.data if args.data is not None else default_data_dir())
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except SystemExit as exc:  # uvicorn raises on port-in-use
        return int(exc.code or 1)
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    return run_headless(args.scenario, args.seed, args.out)


def _cmd_compile(args: argparse.Namespace) -> int:
    try:
        raw = json.loads(Path(args.definition).read_text(encoding="utf-8"))
        definition = ComplexEventDefinition.from_json(raw)
    except OSError as exc:
        print(f"cannot read definition: {exc}", file=sys.stderr)
        return 1
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        print(f"malformed definition JSON: {exc}", file=sys.stderr)
        return 1
    violations = validate(definition)
    if violations:
        for violation in violations:
            print(violation, file=sys.stderr)
        return 1
    palette = None
    mapping = None
    try:
        if args.palette:
            palette = palette_from_json(
                json.loads(Path(args.palette).read_text(encoding="utf-8"))
            )
        if args.mapping:
            mapping = json.loads(Path(args.mapping).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot load palette/mapping: {exc}", file=sys.stderr)
        return 1
    try:
        fragment = compile_definition(definition, palette, mapping)
    except UnmappedConceptError as exc:
        print(f"unmapped concept: {exc.concept}", file=sys.stderr)
        return 1
    except FusedeskError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    print(fragment.text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fusedesk",
        description="Complex event processing workbench gateway",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="start the HTTP gateway")
    serve.add_argument("--port", type=int, default=8400)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--data", default=None)
    serve.set_defaults(func=_cmd_serve)

    run = sub.add_parser("run", help="run a scenario headless")
    run.add_argument("--scenario", required=True)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", required=True)
    run.set_defaults(func=_cmd_run)

    compile_cmd = sub.add_parser("compile", help="compile a definition to rule text")
    compile_cmd.add_argument("--definition", required=True)
    compile_cmd.add_argument("--palette", default=None)
    compile_cmd.add_argument("--mapping", default=None)
    compile_cmd.set_defaults(func=_cmd_compile)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
