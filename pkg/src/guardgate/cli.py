"""Operator command line: validate configs, batch-check transcripts, train
classifiers, and explore conflict resolutions offline.

Subcommands::

    guardgate validate --config cfg.json
    guardgate check --config cfg.json transcript.jsonl [--assistant ID]
    guardgate train dataset.tsv out.model [--learning-rate F] [--epochs N]
    guardgate resolve-demo --config cfg.json [--strategy S] [--context a,b]

Exit codes for ``validate``: 0 clean, 1 warnings only, 2 blocking
findings, 3 unreadable/unparseable input. Every command is deterministic
given the same files and flags and never touches the network.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .classifier import TrainConfig, load_dataset, save_model, train
from .config import Assistant, Deployment, parse_deployment
from .conflicts import (
    Resolution,
    ResolutionMethod,
    ResolutionOutcome,
    contextual_activation,
    hybrid_resolve,
    precedence_resolve,
    weighted_average,
)
from .errors import GuardgateError
from .policy import Direction, evaluate_assistant_side

EXIT_CLEAN = 0
EXIT_WARNINGS = 1
EXIT_BLOCKING = 2
EXIT_ERROR = 3


def _say(args, text: str) -> None:
    if not args.quiet:
        print(text)


def _load_config(args) -> tuple[Deployment | None, list[dict], int]:
    """(deployment, findings, exit_status); deployment None on any error."""
    path = Path(args.config)
    try:
        doc = json.loads(path.read_text("utf-8"))
    except OSError as exc:
        return None, [{"severity": "error", "path": str(path), "message": str(exc)}], EXIT_ERROR
    except json.JSONDecodeError as exc:
        return (
            None,
            [{"severity": "error", "path": str(path), "message": f"invalid JSON: {exc}"}],
            EXIT_ERROR,
        )
    deployment, findings = parse_deployment(doc, base_dir=path.parent)
    if deployment is None:
        return None, findings, EXIT_BLOCKING
    if any(f["severity"] == "warning" for f in findings):
        return deployment, findings, EXIT_WARNINGS
    return deployment, findings, EXIT_CLEAN


def _print_findings(args, findings: list[dict], exit_status: int) -> None:
    if args.format == "json":
        _say(args, json.dumps({"exitStatus": exit_status, "findings": findings},
                              indent=2, sort_keys=True))
        return
    for f in findings:
        _say(args, f"{f['severity']:<8} {f['path']}: {f['message']}")
    label = {EXIT_CLEAN: "clean", EXIT_WARNINGS: "warnings only",
             EXIT_BLOCKING: "blocking findings", EXIT_ERROR: "error"}[exit_status]
    _say(args, f"validation: {label} (exit {exit_status})")


def _pick_assistant(deployment: Deployment, name: str | None) -> Assistant:
    if name is None:
        return next(iter(deployment.assistants.values()))
    assistant = deployment.assistants.get(name)
    if assistant is None:
        raise GuardgateError(
            f"no assistant {name!r} (have: {', '.join(sorted(deployment.assistants))})"
        )
    return assistant


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_validate(args) -> int:
    deployment, findings, status = _load_config(args)
    _print_findings(args, findings, status)
    return status


def cmd_check(args) -> int:
    deployment, findings, status = _load_config(args)
    if deployment is None:
        _print_findings(args, findings, status)
        return status
    try:
        assistant = _pick_assistant(deployment, args.assistant)
    except GuardgateError as exc:
        _say(args, str(exc))
        return EXIT_ERROR

    try:
        lines = Path(args.transcript).read_text("utf-8").splitlines()
    except OSError as exc:
        _say(args, f"cannot read transcript: {exc}")
        return EXIT_ERROR

    report = []
    for index, line in enumerate(lines):
        line = line.strip()
        if not line:
            continue
        try:
            entry = json.loads(line)
        except json.JSONDecodeError as exc:
            _say(args, f"transcript line {index + 1}: invalid JSON: {exc}")
            return EXIT_ERROR
        role = entry.get("role")
        if role == "user":
            policies = assistant.compiled_input
        elif role == "assistant":
            policies = assistant.compiled_output
        else:
            _say(args, f"transcript line {index + 1}: role must be user|assistant")
            return EXIT_ERROR
        verdict = evaluate_assistant_side(
            policies, entry.get("content", ""), resources=deployment.resources
        )
        item = {
            "index": index,
            "sessionId": entry.get("sessionId", ""),
            "role": role,
            "action": verdict.action.value,
            "triggeredRuleIds": list(verdict.triggered_rule_ids),
            "redactionCount": len(verdict.redaction_spans),
        }
        if verdict.transformed_text is not None:
            item["transformed"] = verdict.transformed_text
        report.append(item)

    if args.format == "json":
        _say(args, json.dumps({"assistant": assistant.id, "messages": report},
                              indent=2, sort_keys=True))
    else:
        for item in report:
            rules = ",".join(item["triggeredRuleIds"]) or "-"
            _say(args, f"[{item['index']}] {item['sessionId']} {item['role']}: "
                       f"{item['action']} rules={rules} redactions={item['redactionCount']}")
        _say(args, f"checked {len(report)} message(s)")
    return EXIT_CLEAN


def cmd_train(args) -> int:
    try:
        dataset = load_dataset(args.dataset)
    except (OSError, GuardgateError) as exc:
        _say(args, f"cannot load dataset: {exc}")
        return EXIT_ERROR
    config = TrainConfig(
        learning_rate=args.learning_rate, epochs=args.epochs, seed=args.seed
    )
    try:
        model = train(dataset, config)
    except GuardgateError as exc:
        _say(args, f"training failed: {exc}")
        return EXIT_ERROR
    save_model(model, args.out)
    _say(
        args,
        f"trained on {len(dataset.examples)} examples "
        f"(final loss {model.loss_history[-1]:.6f}) -> {args.out}",
    )
    return EXIT_CLEAN


def _format_resolution(resolution: Resolution) -> dict:
    doc = {"method": resolution.method.value, "outcome": resolution.outcome.value}
    if resolution.direction is not None:
        doc["direction"] = {
            axis: round(value, 6)
            for axis, value in zip(resolution.direction.axes, resolution.direction.values)
        }
    if resolution.winner_policy_id is not None:
        doc["winner"] = resolution.winner_policy_id
    if resolution.alert:
        doc["alert"] = resolution.alert
    return doc


def cmd_resolve_demo(args) -> int:
    deployment, findings, status = _load_config(args)
    if deployment is None:
        _print_findings(args, findings, status)
        return status
    try:
        assistant = _pick_assistant(deployment, args.assistant)
    except GuardgateError as exc:
        _say(args, str(exc))
        return EXIT_ERROR

    context = frozenset(t.strip() for t in (args.context or "").split(",") if t.strip())
    active = contextual_activation(
        context, assistant.guardrail_handles(), deployment.axis_space
    )
    if not active:
        _say(args, "no guardrails active in this context")
        return EXIT_CLEAN

    if args.strategy == "weighted-average":
        resolution = weighted_average(active, deployment.thresholds)
    elif args.strategy == "precedence":
        resolution = precedence_resolve(active)
    elif args.strategy == "hybrid":
        resolution = hybrid_resolve(active, deployment.thresholds)
    elif args.strategy == "contextual":
        resolution = weighted_average(
            active, deployment.thresholds, method=ResolutionMethod.CONTEXTUAL
        )
    else:  # human
        resolution = Resolution(
            method=ResolutionMethod.HUMAN, outcome=ResolutionOutcome.PENDING_HUMAN
        )

    doc = _format_resolution(resolution)
    doc["active"] = sorted(ag.handle.policy_id for ag in active)
    if args.format == "json":
        _say(args, json.dumps(doc, indent=2, sort_keys=True))
    else:
        _say(args, f"active guardrails: {', '.join(doc['active'])}")
        _say(args, f"method={doc['method']} outcome={doc['outcome']}")
        if "winner" in doc:
            _say(args, f"winner: {doc['winner']}")
        if "direction" in doc:
            parts = ", ".join(f"{k}={v}" for k, v in doc["direction"].items())
            _say(args, f"direction: {parts}")
        if "alert" in doc:
            _say(args, f"ALERT: {doc['alert']}")
    return EXIT_CLEAN


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="guardgate", description=__doc__.splitlines()[0])
    parser.add_argument("--format", choices=("json", "text"), default="text")
    parser.add_argument("--quiet", action="store_true", help="suppress output, keep exit code")
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="schema + conflict analysis of a config")
    p_validate.add_argument("--config", required=True)
    p_validate.set_defaults(func=cmd_validate)

    p_check = sub.add_parser("check", help="run a transcript through the policies offline")
    p_check.add_argument("--config", required=True)
    p_check.add_argument("transcript")
    p_check.add_argument("--assistant", default=None)
    p_check.set_defaults(func=cmd_check)

    p_train = sub.add_parser("train", help="train a classifier from a label<TAB>text file")
    p_train.add_argument("dataset")
    p_train.add_argument("out")
    p_train.add_argument("--learning-rate", type=float, default=0.5)
    p_train.add_argument("--epochs", type=int, default=200)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.set_defaults(func=cmd_train)

    p_demo = sub.add_parser("resolve-demo", help="print a conflict resolution for a config")
    p_demo.add_argument("--config", required=True)
    p_demo.add_argument("--assistant", default=None)
    p_demo.add_argument(
        "--strategy",
        choices=("weighted-average", "precedence", "hybrid", "contextual", "human"),
        default="hybrid",
    )
    p_demo.add_argument("--context", default="", help="comma-separated context tags")
    p_demo.set_defaults(func=cmd_resolve_demo)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
