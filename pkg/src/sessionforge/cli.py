"""Command-line entry point wiring the modules into one pipeline.

Subcommands: record, synth, sync, denoise, analyze, curate, dialogue,
report, pipeline. Exit codes: 0 success, 1 data error, 2 usage error.
``--errors json`` prints failures as machine-readable JSON on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import curation, dialogue as dlg, filters, metrics, session as sess, sync, synth
from .errors import SessionForgeError

ENV_ROOT = "SESSIONFORGE_ROOT"


def _dataset_root(args) -> Path:
    root = getattr(args, "root", None) or os.environ.get(ENV_ROOT)
    if not root:
        raise SessionForgeError("no dataset root: pass --root or set " + ENV_ROOT)
    return Path(root)


def _aggregate_to_dict(agg: metrics.TaskAggregate) -> dict:
    return {"mean": agg.mean, "sd": agg.sd, "n": agg.n_trial}


def _trial_dirs(root: Path) -> list[Path]:
    return sorted(p.parent for p in root.glob("*/manifest.json"))


# -- per-trial processing ---------------------------------------------------

def process_trial(
    trial_dir: Path, tau: float | None, policy: filters.DenoisePolicy
) -> tuple[metrics.TrialMetrics, sync.SyncedSession, sess.RawSession]:
    """raw -> native-rate denoise -> sync -> grid-rate denoise -> metrics."""
    raw = sess.load_session(trial_dir)
    prefiltered, done = filters.denoise_raw(raw, policy, strict=False)
    synced = sync.sync_session(prefiltered, tau=tau)
    remaining = {
        name: series for name, series in synced.numeric.items() if name not in done
    }
    if remaining:
        partial = sync.SyncedSession(
            manifest=synced.manifest,
            grid=synced.grid,
            frame_selections=synced.frame_selections,
            numeric=remaining,
            tau=synced.tau,
        )
        denoised_rest = filters.denoise_session(partial, policy, strict=False)
        merged = dict(synced.numeric)
        merged.update(denoised_rest.numeric)
        synced = sync.SyncedSession(
            manifest=synced.manifest,
            grid=synced.grid,
            frame_selections=synced.frame_selections,
            numeric=merged,
            tau=synced.tau,
        )
    return metrics.compute_trial_metrics(synced), synced, raw


def build_report(
    trials: list[metrics.TrialMetrics],
    dialogues: list[dlg.AnnotatedDialogue],
    manifests: list[sess.SessionManifest],
) -> dict:
    """Consolidated report: task performance, dialogue, and curation tables."""
    by_task = metrics.aggregate_by_task(trials)
    tasks = {}
    for task, row in by_task.items():
        tasks[task] = {
            "n": row["n"],
            "duration": _aggregate_to_dict(row["duration"]),
            "ee_path_length": _aggregate_to_dict(row["ee_path_length"]),
            "ee_mean_jerk": _aggregate_to_dict(row["ee_mean_jerk"]),
            "wheelchair_mean_jerk": _aggregate_to_dict(row["wheelchair_mean_jerk"]),
            "wheelchair_comfort_band": metrics.comfort_check(
                row["wheelchair_mean_jerk"].mean
            ).wheelchair_band,
        }
    report: dict = {
        "tasks": tasks,
        "trials": [t.to_json_dict() for t in sorted(trials, key=lambda t: (t.task, t.trial_id))],
        "dialogue": dlg.ambiguity_distribution(dialogues) if dialogues else None,
    }
    if manifests:
        report["curation"] = curation.dataset_stats(manifests).to_json_dict()
    return report


def _report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def _report_csv(report: dict) -> str:
    lines = ["task,n,duration_mean,duration_sd,path_mean,path_sd,ee_jerk_mean,ee_jerk_sd,wc_jerk_mean,wc_jerk_sd"]
    for task, row in sorted(report["tasks"].items()):
        def fmt(v):
            return "" if v is None else repr(v)

        lines.append(
            ",".join(
                [
                    task,
                    str(row["n"]),
                    fmt(row["duration"]["mean"]),
                    fmt(row["duration"]["sd"]),
                    fmt(row["ee_path_length"]["mean"]),
                    fmt(row["ee_path_length"]["sd"]),
                    fmt(row["ee_mean_jerk"]["mean"]),
                    fmt(row["ee_mean_jerk"]["sd"]),
                    fmt(row["wheelchair_mean_jerk"]["mean"]),
                    fmt(row["wheelchair_mean_jerk"]["sd"]),
                ]
            )
        )
    return "\n".join(lines) + "\n"


# -- subcommand handlers ----------------------------------------------------

def _cmd_synth(args) -> int:
    if args.scenario:
        scenario = synth.Scenario.from_json_file(args.scenario)
        if args.seed is not None:
            from dataclasses import replace

            scenario = replace(scenario, seed=args.seed)
    else:
        scenario = synth.Scenario(seed=args.seed if args.seed is not None else 0)
    session, _ = synth.gen_session(scenario)
    out = Path(args.out) / session.manifest.session_id if args.as_trial else Path(args.out)
    sess.save_session(session, out)
    print(f"wrote {session.manifest.session_id} to {out}")
    return 0


def _cmd_record(args) -> int:
    from .transport import RecorderConfig, start_recording

    config = RecorderConfig(
        session_root=Path(args.out),
        tcp_port=args.tcp_port,
        udp_port=args.udp_port,
        session_id=args.session_id,
    )
    handle = start_recording(config)
    print(f"recording on tcp:{handle.tcp_port} udp:{handle.udp_port}; ", end="")
    if args.duration:
        print(f"stopping after {args.duration} s")
        time.sleep(args.duration)
    else:
        print("press Ctrl-C to stop")
        try:
            while True:
                time.sleep(0.5)
        except KeyboardInterrupt:
            pass
    session = handle.stop()
    n = sum(s.n_samples for s in session.numeric.values())
    print(f"recorded {n} frames across {len(session.numeric)} topics -> {args.out}")
    return 0


def _cmd_sync(args) -> int:
    raw = sess.load_session(args.input)
    synced = sync.sync_session(raw, tau=args.tau)
    sync.save_synced(synced, args.out)
    print(json.dumps(synced.report(), indent=2, sort_keys=True))
    return 0


def _load_policy(spec: str) -> filters.DenoisePolicy:
    if spec == "default":
        return filters.DenoisePolicy.default()
    return filters.DenoisePolicy.from_json_dict(
        json.loads(Path(spec).read_text(encoding="utf-8"))
    )


def _cmd_denoise(args) -> int:
    policy = _load_policy(args.policy)
    synced = sync.load_synced(args.input)
    denoised = filters.denoise_session(synced, policy, strict=not args.lenient)
    sync.save_synced(denoised, args.out)
    print(f"denoised {len(denoised.numeric)} streams -> {args.out}")
    return 0


def _cmd_analyze(args) -> int:
    synced = sync.load_synced(args.input)
    tm = metrics.compute_trial_metrics(synced)
    payload = tm.to_json_dict()
    payload["wheelchair_comfort_band"] = metrics.comfort_check(
        tm.wheelchair_mean_jerk
    ).wheelchair_band
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def _cmd_curate(args) -> int:
    if args.curate_cmd == "survey":
        summary = curation.survey_stats(curation.load_survey_csv(args.csv))
        print(json.dumps(summary.per_question, indent=2, sort_keys=True))
        return 0
    root = _dataset_root(args)
    if args.curate_cmd == "label":
        flags = [f for f in (args.flags or "").split(",") if f]
        manifest = curation.label_trial(root, args.trial, flags)
        print(f"{args.trial}: success={manifest.success} flags={list(manifest.violation_flags)}")
        return 0
    if args.curate_cmd == "stats":
        stats = curation.dataset_stats(curation.load_manifests(root))
        if args.format == "json":
            print(json.dumps(stats.to_json_dict(), indent=2, sort_keys=True))
        else:
            print("task,raw,successful")
            for task, row in stats.per_task.items():
                print(f"{task},{row['raw']},{row['successful']}")
            print(f"total,{stats.total_raw},{stats.total_successful}")
            print(f"percentage,,{stats.success_percentage}")
        return 0
    if args.curate_cmd == "filter":
        trials = curation.filter_successful(root, strict=not args.lenient)
        text = "\n".join(trials) + ("\n" if trials else "")
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
        print(text, end="")
        return 0
    raise SessionForgeError(f"unknown curate subcommand {args.curate_cmd}")


def _collect_dialogues(root: Path) -> list[dlg.AnnotatedDialogue]:
    dialogues = []
    for trial_dir in _trial_dirs(root):
        path = trial_dir / "dialogue.jsonl"
        if path.is_file():
            dialogues.extend(dlg.import_jsonl(path.read_bytes()))
    return dialogues


def _cmd_dialogue(args) -> int:
    if args.dialogue_cmd == "annotate":
        path = Path(args.file)
        dialogues = dlg.import_jsonl(path.read_bytes())
        label = dlg.AmbiguityLabel(
            clarity=dlg.Clarity(args.clarity),
            ambiguity_type=dlg.AmbiguityType(args.type) if args.type else None,
        )
        updated = []
        found = False
        for d in dialogues:
            if d.trial_id == args.trial:
                d = dlg.annotate_utterance(d, args.turn, label)
                found = True
            updated.append(d)
        if not found:
            raise SessionForgeError(f"trial {args.trial} not found in {path}")
        path.write_bytes(dlg.export_jsonl(updated))
        print(f"labeled {args.trial} turn {args.turn}: {args.clarity}" + (f"/{args.type}" if args.type else ""))
        return 0
    if args.dialogue_cmd == "export":
        dialogues = _collect_dialogues(_dataset_root(args))
        data = dlg.export_jsonl(dialogues)
        if args.out:
            Path(args.out).write_bytes(data)
            print(f"exported {len(dialogues)} dialogues -> {args.out}")
        else:
            sys.stdout.buffer.write(data)
        return 0
    if args.dialogue_cmd == "stats":
        dialogues = _collect_dialogues(_dataset_root(args))
        dist = dlg.ambiguity_distribution(dialogues)
        if args.by == "type":
            print(json.dumps(dist["type_shares"], indent=2, sort_keys=True))
        else:
            print(json.dumps(
                {"matrix": dist["matrix"], "utterances": dist["utterances"]},
                indent=2,
                sort_keys=True,
            ))
        return 0
    raise SessionForgeError(f"unknown dialogue subcommand {args.dialogue_cmd}")


def _run_pipeline(args) -> dict:
    root = _dataset_root(args)
    policy = _load_policy(args.policy)
    trial_dirs = _trial_dirs(root)
    if not trial_dirs:
        raise SessionForgeError(f"no trials under {root}")

    def run_one(trial_dir: Path):
        tm, synced, raw = process_trial(trial_dir, args.tau, policy)
        return tm, list(raw.dialogues), raw.manifest

    results = []
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run_one, trial_dirs))
    else:
        results = [run_one(d) for d in trial_dirs]

    trials = [tm for tm, _, _ in results]
    dialogues = [d for _, ds, _ in results for d in ds]
    manifests = [m for _, _, m in results]
    return build_report(trials, dialogues, manifests)


def _cmd_pipeline(args) -> int:
    report = _run_pipeline(args)
    out = Path(args.report)
    if args.format == "csv":
        out.write_text(_report_csv(report), encoding="utf-8")
    else:
        out.write_text(_report_json(report), encoding="utf-8")
    print(f"report -> {out}")
    return 0


def _cmd_report(args) -> int:
    report = _run_pipeline(args)
    text = _report_csv(report) if args.format == "csv" else _report_json(report)
    print(text, end="")
    return 0


# -- argument parsing -------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sessionforge",
        description="Record, synchronize, denoise, and analyze multimodal teleoperation sessions.",
    )
    parser.add_argument("--errors", choices=["text", "json"], default="text")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("synth", help="generate a synthetic session")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--scenario", help="scenario JSON file")
    p.add_argument("--out", required=True)
    p.add_argument("--as-trial", action="store_true", help="write under <out>/<session_id>")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("record", help="record live TCP/UDP streams")
    p.add_argument("--tcp-port", type=int, default=0)
    p.add_argument("--udp-port", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--session-id", default="recording")
    p.add_argument("--duration", type=float, default=None, help="stop after N seconds")
    p.set_defaults(func=_cmd_record)

    p = sub.add_parser("sync", help="align a raw session onto the reference grid")
    p.add_argument("--tau", type=float, default=None, help="match tolerance, seconds")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sync)

    p = sub.add_parser("denoise", help="zero-phase filter a synced session")
    p.add_argument("--policy", default="default", help="'default' or a policy JSON file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lenient", action="store_true")
    p.set_defaults(func=_cmd_denoise)

    p = sub.add_parser("analyze", help="trial metrics from a synced session")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--report", help="write metrics JSON here")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("curate", help="trial labeling and dataset statistics")
    csub = p.add_subparsers(dest="curate_cmd", required=True)
    c = csub.add_parser("label")
    c.add_argument("trial")
    c.add_argument("--flags", default="", help="comma-separated violation kinds")
    c.add_argument("--root")
    c = csub.add_parser("stats")
    c.add_argument("--format", choices=["json", "csv"], default="json")
    c.add_argument("--root")
    c = csub.add_parser("filter")
    c.add_argument("--out")
    c.add_argument("--root")
    c.add_argument("--lenient", action="store_true")
    c = csub.add_parser("survey")
    c.add_argument("csv", help="CSV with question_id,participant_id,rating")
    p.set_defaults(func=_cmd_curate)

    p = sub.add_parser("dialogue", help="dialogue annotation and statistics")
    dsub = p.add_subparsers(dest="dialogue_cmd", required=True)
    d = dsub.add_parser("annotate")
    d.add_argument("--file", required=True)
    d.add_argument("--trial", required=True)
    d.add_argument("--turn", type=int, required=True)
    d.add_argument("--clarity", choices=[c.value for c in dlg.Clarity], required=True)
    d.add_argument("--type", choices=[t.value for t in dlg.AmbiguityType])
    d = dsub.add_parser("export")
    d.add_argument("--root")
    d.add_argument("--out")
    d = dsub.add_parser("stats")
    d.add_argument("--by", choices=["task", "type"], default="task")
    d.add_argument("--root")
    p.set_defaults(func=_cmd_dialogue)

    for name, handler in (("pipeline", _cmd_pipeline), ("report", _cmd_report)):
        p = sub.add_parser(name, help="run the full batch pipeline over a dataset")
        p.add_argument("--root")
        p.add_argument("--tau", type=float, default=None)
        p.add_argument("--policy", default="default")
        p.add_argument("--format", choices=["json", "csv"], default="json")
        p.add_argument("--jobs", type=int, default=1)
        if name == "pipeline":
            p.add_argument("--report", default="report.json")
        p.set_defaults(func=handler)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except SessionForgeError as exc:
        if args.errors == "json":
            print(json.dumps(exc.to_json_dict()), file=sys.stderr)
        else:
            print(f"error [{exc.module}/{exc.code}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
