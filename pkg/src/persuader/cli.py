"""Command line entry points: serve, repl, pack check, simulate."""

from __future__ import annotations

import argparse
import json
import os
import secrets
import sys
from pathlib import Path

from .pack import PackParseError, PackValidationError, load_pack
from .session import SessionRuntime, write_transcript
from .sim import load_profiles, run_batch

DEFAULT_PORT = 8000
DEFAULT_TRANSCRIPTS = "transcripts"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="persuader", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the WebSocket session service")
    serve.add_argument("--pack", required=True, help="content pack file")
    serve.add_argument("--port", type=int, default=None,
                       help=f"listen port (default {DEFAULT_PORT}, env PERSUADER_PORT)")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--transcripts", default=None,
                       help="transcript directory (env PERSUADER_TRANSCRIPTS)")
    serve.add_argument("--static", default=None, help="chat client asset directory")

    repl = sub.add_parser("repl", help="run one dialogue in the terminal")
    repl.add_argument("--pack", required=True)
    repl.add_argument("--seed", type=int, default=None)
    repl.add_argument("--profile", choices=["open_minded", "neutral", "random"], default="random")
    repl.add_argument("--transcripts", default=None)

    pack_cmd = sub.add_parser("pack", help="content pack tools")
    pack_sub = pack_cmd.add_subparsers(dest="pack_command", required=True)
    check = pack_sub.add_parser("check", help="validate a pack file")
    check.add_argument("file")

    simulate = sub.add_parser("simulate", help="batch of scripted sessions")
    simulate.add_argument("--pack", required=True)
    simulate.add_argument("--profiles", required=True, help="profile-mix JSON file")
    simulate.add_argument("--runs", type=int, default=100)
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--report", default=None, help="write the JSON report here")
    simulate.add_argument("--ethics", choices=["open_minded", "neutral", "random"],
                          default="random")
    return parser


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    port = args.port or int(os.environ.get("PERSUADER_PORT", DEFAULT_PORT))
    transcripts = args.transcripts or os.environ.get("PERSUADER_TRANSCRIPTS", DEFAULT_TRANSCRIPTS)
    static = args.static or _default_static_dir()
    app = create_app(args.pack, transcripts_dir=transcripts, static_dir=static)
    uvicorn.run(app, host=args.host, port=port)
    return 0


def _default_static_dir():
    bundled = Path(__file__).parent / "static"
    return bundled if bundled.is_dir() else None


def cmd_repl(args) -> int:
    pack = load_pack(Path(args.pack))
    seed = args.seed if args.seed is not None else secrets.randbits(63)
    runtime = SessionRuntime(pack, seed=seed, profile=args.profile)
    print(f"[session seed={seed} profile={args.profile}]")
    acts = runtime.start()
    while True:
        for act in acts:
            print(f"\nagent ({act.function.value}): {act.utterance}")
        if runtime.is_complete:
            break
        question = runtime.pending_act
        _, spec = pack.question(question.question)
        for i, option in enumerate(spec.options, start=1):
            print(f"  {i}. {option.label}")
        choice = _read_choice(spec)
        if choice is None:
            print("\n[aborted]")
            break
        acts = runtime.submit(choice)
    summary = runtime.summary()
    print("\n[summary]")
    for topic, levels in summary["per_topic"].items():
        print(f"  {topic}: knowledge={levels['knowledge']} intention={levels['intention']}")
    transcripts = args.transcripts or os.environ.get("PERSUADER_TRANSCRIPTS", DEFAULT_TRANSCRIPTS)
    path = write_transcript(runtime.transcript(), Path(transcripts) / f"repl-{seed}.jsonl")
    print(f"[transcript: {path}]")
    return 0


def _read_choice(question_spec):
    while True:
        try:
            raw = input("> ").strip()
        except EOFError:
            return None
        if not raw:
            continue
        if raw.isdigit() and 1 <= int(raw) <= len(question_spec.options):
            return question_spec.options[int(raw) - 1].id
        if question_spec.option(raw) is not None:
            return raw
        print(f"  (pick 1-{len(question_spec.options)} or an option id)")


def cmd_pack_check(args) -> int:
    try:
        pack = load_pack(Path(args.file))
    except PackParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PackValidationError as exc:
        for diagnostic in exc.diagnostics:
            print(f"error: {diagnostic}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    scenes = len(pack.scenes)
    techniques = ", ".join(t.value for t in pack.techniques)
    print(f"ok: {pack.id} v{pack.version} ({scenes} scenes; techniques: {techniques})")
    return 0


def cmd_simulate(args) -> int:
    pack = load_pack(Path(args.pack))
    mix = load_profiles(Path(args.profiles))
    report = run_batch(pack, mix, n=args.runs, seed_base=args.seed, ethics=args.ethics)
    print(report.to_text())
    if args.report:
        path = Path(args.report)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
        print(f"[report: {path}]")
    return 1 if report.violation_count else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        return cmd_serve(args)
    if args.command == "repl":
        return cmd_repl(args)
    if args.command == "pack":
        return cmd_pack_check(args)
    if args.command == "simulate":
        return cmd_simulate(args)
    return 2


if __name__ == "__main__":
    sys.exit(main())
