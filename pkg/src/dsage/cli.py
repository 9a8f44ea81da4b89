"""Command-line interface: knowledge-base editing, consultations, serving.

Exit codes are stable: 0 success, 1 validation or parse failure, 2 usage
error, 3 storage or I/O error. Human-readable output goes to stdout,
diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import os
import socket
import sys
from pathlib import Path
from typing import Optional

from .dsl import format_cf, parse_kb, parse_rule_fragment, serialize_kb
from .engine import CatalogMismatchError, Observation, ObservationSource, WorkingMemory, explain, run
from .kb import (
    Condition,
    IntegrityError,
    KnowledgeBase,
    KnowledgeBaseError,
    Relation,
    delete_rule,
    upsert_rule,
)
from .seed import seed_text
from .store import AdvisoryStore, StoreError, kb_digest, rank_advisories
from .wire import consultation_payload, render_json

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2
EXIT_STORAGE = 3

_VERBS = {r.value for r in Relation}


class _Failure(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        self.message = message
        super().__init__(message)


def _load_kb(path: Path) -> KnowledgeBase:
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise _Failure(EXIT_STORAGE, f"cannot read {path}: {exc}") from exc
    result = parse_kb(data, filename=str(path))
    if result.kb is None:
        for error in result.errors:
            print(error)
        raise _Failure(EXIT_INVALID, f"{len(result.errors)} issue(s) in {path}")
    return result.kb


def _write_kb(path: Path, kb: KnowledgeBase) -> None:
    try:
        path.write_text(serialize_kb(kb), encoding="utf-8")
    except OSError as exc:
        raise _Failure(EXIT_STORAGE, f"cannot write {path}: {exc}") from exc


# -- kb subcommands ----------------------------------------------------------


def _cmd_kb_validate(args: argparse.Namespace) -> int:
    kb = _load_kb(Path(args.file))
    print(f"{len(kb.catalog)} indicators, {len(kb.rules)} rules")
    return EXIT_OK


def _cmd_kb_fmt(args: argparse.Namespace) -> int:
    path = Path(args.file)
    kb = _load_kb(path)
    canonical = serialize_kb(kb)
    try:
        current = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise _Failure(EXIT_STORAGE, f"cannot read {path}: {exc}") from exc
    if current != canonical:
        try:
            path.write_text(canonical, encoding="utf-8")
        except OSError as exc:
            raise _Failure(EXIT_STORAGE, f"cannot write {path}: {exc}") from exc
        print(f"rewrote {path}", file=sys.stderr)
    return EXIT_OK


def _cmd_kb_list(args: argparse.Namespace) -> int:
    kb = _load_kb(Path(args.file))
    if args.indicators:
        for indicator in kb.catalog:
            states = ", ".join(f"{s.verb.value} {s.value}" for s in indicator.states)
            print(f"{indicator.name}  ({indicator.category.value})  [{states}]")
    else:
        for rule in kb.rules:
            print(f"{rule.id}  cf {format_cf(rule.expert_cf)}  {rule.conclusion.display}")
    return EXIT_OK


def _cmd_kb_add_rule(args: argparse.Namespace) -> int:
    path = Path(args.file)
    kb = _load_kb(path)
    rule, errors = parse_rule_fragment(args.rule)
    if rule is None:
        for error in errors:
            print(error)
        raise _Failure(EXIT_INVALID, "rule text does not parse")
    try:
        updated = upsert_rule(kb, rule)
    except IntegrityError as exc:
        for issue in exc.issues:
            print(issue.message)
        raise _Failure(EXIT_INVALID, f"rule {rule.id} rejected") from exc
    _write_kb(path, updated)
    print(f"added rule {rule.id}")
    return EXIT_OK


def _cmd_kb_del_rule(args: argparse.Namespace) -> int:
    path = Path(args.file)
    kb = _load_kb(path)
    try:
        updated = delete_rule(kb, args.id)
    except KnowledgeBaseError as exc:
        raise _Failure(EXIT_INVALID, str(exc)) from exc
    _write_kb(path, updated)
    print(f"deleted rule {args.id}")
    return EXIT_OK


def _cmd_kb_init(args: argparse.Namespace) -> int:
    path = Path(args.file)
    if path.exists() and not args.force:
        raise _Failure(EXIT_STORAGE, f"{path} already exists (use --force to overwrite)")
    try:
        path.write_text(seed_text(), encoding="utf-8")
    except OSError as exc:
        raise _Failure(EXIT_STORAGE, f"cannot write {path}: {exc}") from exc
    print(f"wrote seed knowledge base to {path}")
    return EXIT_OK


# -- consult ------------------------------------------------------------------


def _parse_observation_spec(spec: str) -> Observation:
    parts = spec.split()
    if len(parts) not in (3, 4):
        raise _Failure(
            EXIT_USAGE,
            f"malformed --observe {spec!r}: expected '<object> <verb> <value> [cf]'",
        )
    obj, verb, value = parts[:3]
    if verb not in _VERBS:
        raise _Failure(
            EXIT_USAGE,
            f"malformed --observe {spec!r}: unknown verb {verb!r} (expected one of {sorted(_VERBS)})",
        )
    if len(parts) == 4:
        try:
            cf = float(parts[3])
        except ValueError:
            raise _Failure(EXIT_USAGE, f"malformed --observe {spec!r}: bad confidence {parts[3]!r}") from None
        if not 0.0 <= cf <= 1.0:
            raise _Failure(EXIT_INVALID, f"confidence {cf} in --observe {spec!r} is outside [0, 1]")
        source = ObservationSource.USER
    else:
        cf = 1.0
        source = ObservationSource.DEFAULT
    return Observation(Condition(obj, Relation(verb), value), cf, source)


def _interactive_observations(kb: KnowledgeBase) -> list[Observation]:
    by_category: dict[str, list] = {}
    for indicator in kb.catalog:
        by_category.setdefault(indicator.category.value, []).append(indicator)
    categories = sorted(by_category)
    observations: list[Observation] = []
    print("Interactive consultation. Press enter on an empty line to finish.", file=sys.stderr)
    while True:
        for i, cat in enumerate(categories, 1):
            print(f"  {i}. {cat} ({len(by_category[cat])} indicators)", file=sys.stderr)
        try:
            choice = input("category> ").strip()
        except EOFError:
            break
        if not choice:
            break
        if not choice.isdigit() or not 1 <= int(choice) <= len(categories):
            print("pick a category number", file=sys.stderr)
            continue
        indicators = by_category[categories[int(choice) - 1]]
        for i, ind in enumerate(indicators, 1):
            print(f"  {i}. {ind.display_name} ({ind.name})", file=sys.stderr)
        try:
            pick = input("indicator> ").strip()
        except EOFError:
            break
        if not pick.isdigit() or not 1 <= int(pick) <= len(indicators):
            print("pick an indicator number", file=sys.stderr)
            continue
        indicator = indicators[int(pick) - 1]
        states = list(indicator.states)
        for i, state in enumerate(states, 1):
            print(f"  {i}. {state.verb.value} {state.value}", file=sys.stderr)
        try:
            spick = input("state> ").strip()
        except EOFError:
            break
        if not spick.isdigit() or not 1 <= int(spick) <= len(states):
            print("pick a state number", file=sys.stderr)
            continue
        state = states[int(spick) - 1]
        try:
            raw_cf = input("confidence 0..1 (blank = 1.0)> ").strip()
        except EOFError:
            raw_cf = ""
        if raw_cf:
            try:
                cf = float(raw_cf)
            except ValueError:
                print("not a number, using 1.0", file=sys.stderr)
                cf, raw_cf = 1.0, ""
        else:
            cf = 1.0
        if not 0.0 <= cf <= 1.0:
            print("out of range, using 1.0", file=sys.stderr)
            cf, raw_cf = 1.0, ""
        observations.append(
            Observation(
                Condition(indicator.name, state.verb, state.value),
                cf,
                ObservationSource.USER if raw_cf else ObservationSource.DEFAULT,
            )
        )
    return observations


def _cmd_consult(args: argparse.Namespace) -> int:
    kb = _load_kb(Path(args.kb))
    if args.interactive:
        observations = _interactive_observations(kb)
    else:
        observations = [_parse_observation_spec(spec) for spec in args.observe or []]
    wm = WorkingMemory(observations)
    try:
        result = run(kb, wm)
    except CatalogMismatchError as exc:
        raise _Failure(EXIT_INVALID, str(exc)) from exc
    advisories = rank_advisories(result, kb)

    if args.json:
        payload = consultation_payload(
            advisories,
            result,
            kb_version=kb_digest(kb),
            explain_for=lambda a: explain(result, a.hypothesis),
        )
        print(render_json(payload))
        return EXIT_OK

    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    if not advisories:
        print("no applicable rules")
        return EXIT_OK
    for advisory in advisories:
        line = f"{advisory.rank}. {advisory.hypothesis.display} — {advisory.cf_percent}%"
        if advisory.mitigation:
            line += f"  [{advisory.mitigation}]"
        print(line)
    return EXIT_OK


# -- serve --------------------------------------------------------------------


def parse_config(path: Path) -> dict[str, str]:
    """Read the ``key = value`` config format (see FORMATS.md)."""
    settings: dict[str, str] = {}
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise _Failure(EXIT_USAGE, f"bad config line {raw!r} in {path} (expected 'key = value')")
        settings[key.strip()] = value.strip()
    return settings


def _resolve_serve_settings(args: argparse.Namespace) -> tuple[str, int, Path, Optional[str], Optional[Path]]:
    settings: dict[str, str] = {}
    if args.config:
        settings = parse_config(Path(args.config))
    listen = (
        args.listen
        or os.environ.get("DSAGE_LISTEN")
        or settings.get("listen")
        or "127.0.0.1:8080"
    )
    store = args.store or os.environ.get("DSAGE_STORE") or settings.get("store")
    if not store:
        raise _Failure(EXIT_USAGE, "no store directory (use --store, DSAGE_STORE, or a config file)")
    cors = args.cors_origin or os.environ.get("DSAGE_CORS_ORIGIN") or settings.get("cors_origin")
    ui = args.ui or os.environ.get("DSAGE_UI") or settings.get("ui")
    host, _, port_text = listen.rpartition(":")
    if not host or not port_text.isdigit():
        raise _Failure(EXIT_USAGE, f"bad listen address {listen!r} (expected host:port)")
    return host, int(port_text), Path(store), cors, Path(ui) if ui else None


def _cmd_serve(args: argparse.Namespace) -> int:
    host, port, store_dir, cors, ui_dir = _resolve_serve_settings(args)
    try:
        store = AdvisoryStore(store_dir)
        if store.head() is None:
            result = parse_kb(seed_text(), filename="seed.dkb")
            assert result.kb is not None
            digest = store.commit_kb(result.kb)
            print(f"initialized empty store with seed knowledge base {digest}", file=sys.stderr)
    except OSError as exc:
        raise _Failure(EXIT_STORAGE, f"cannot open store at {store_dir}: {exc}") from exc

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
    except OSError as exc:
        raise _Failure(EXIT_STORAGE, f"cannot bind {host}:{port}: {exc}") from exc
    finally:
        probe.close()

    import uvicorn

    from .api import create_app

    app = create_app(store, cors_origin=cors, ui_dir=ui_dir)
    print(f"serving on http://{host}:{port} (store: {store_dir})", file=sys.stderr)
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return EXIT_OK


# -- entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dsage",
        description="Drought early-warning advisories from natural-indicator observations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    kb = sub.add_parser("kb", help="knowledge-base editor commands")
    kb_sub = kb.add_subparsers(dest="kb_command", required=True)

    p = kb_sub.add_parser("validate", help="check a .dkb file and print issues")
    p.add_argument("file")
    p.set_defaults(func=_cmd_kb_validate)

    p = kb_sub.add_parser("fmt", help="rewrite a .dkb file in canonical form")
    p.add_argument("file")
    p.set_defaults(func=_cmd_kb_fmt)

    p = kb_sub.add_parser("list", help="list rules (or indicators)")
    p.add_argument("file")
    p.add_argument("--indicators", action="store_true", help="list indicators instead of rules")
    p.set_defaults(func=_cmd_kb_list)

    p = kb_sub.add_parser("add-rule", help="insert or replace one rule")
    p.add_argument("file")
    p.add_argument("--rule", required=True, help="rule block, e.g. 'rule RC99 { if soil_moisture is high then \"...\" cf 0.5 }'")
    p.set_defaults(func=_cmd_kb_add_rule)

    p = kb_sub.add_parser("del-rule", help="delete one rule by id")
    p.add_argument("file")
    p.add_argument("id")
    p.set_defaults(func=_cmd_kb_del_rule)

    p = kb_sub.add_parser("init", help="write the seed knowledge base to a file")
    p.add_argument("file")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_kb_init)

    p = sub.add_parser("consult", help="run a consultation against a .dkb file")
    p.add_argument("--kb", required=True, help="knowledge-base file")
    p.add_argument(
        "--observe",
        action="append",
        metavar="SPEC",
        help="observation as '<object> <verb> <value> [cf]'; repeatable",
    )
    p.add_argument("--json", action="store_true", help="machine-readable output with explain traces")
    p.add_argument("--interactive", action="store_true", help="question-driven observation entry")
    p.set_defaults(func=_cmd_consult)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--store", help="store directory (default: $DSAGE_STORE)")
    p.add_argument("--listen", help="host:port (default: 127.0.0.1:8080)")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--cors-origin", help="allowed browser origin")
    p.add_argument("--ui", help="directory of built UI assets to serve at /")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _Failure as failure:
        print(f"error: {failure.message}", file=sys.stderr)
        return failure.code
    except StoreError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STORAGE
    except KeyboardInterrupt:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
