"""Command-line client: benchmarks, scripted rollouts, and the HTTP server.

The heavy loops always run inside the engine process. By default that is this
process (through the same operations layer the service uses); with --url the
request is forwarded to a running server and executes there.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from . import bench, scenarios
from .errors import ContractViolation


def _load_overrides(args) -> dict | None:
    if not getattr(args, "scenario_config", None):
        return None
    table = scenarios.load_config_file(args.scenario_config)
    kind = scenarios.parse_kind(args.scenario)
    return table.get(kind)


def _cmd_bench(args) -> int:
    overrides = _load_overrides(args)
    if args.url:
        import httpx
        payload = {
            "scenario": args.scenario, "workers": args.workers,
            "envs_per_worker": args.envs_per_worker, "agents": args.agents,
            "seconds": args.seconds, "seed": args.seed,
            "overrides": overrides,
        }
        resp = httpx.post(f"{args.url}/benchmarks", json=payload, timeout=None)
        if resp.status_code != 200:
            print(f"server error {resp.status_code}: {resp.text}", file=sys.stderr)
            return 1
        report_dict = resp.json()
        report = bench.BenchReport(
            **{**report_dict,
               "per_worker": [bench.WorkerStats(**w)
                              for w in report_dict["per_worker"]]})
    else:
        kind = scenarios.parse_kind(args.scenario)
        report = bench.run_benchmark(
            kind, args.workers, args.envs_per_worker, args.agents,
            args.seconds, seed=args.seed, overrides=overrides)
    print(report.table())
    if args.json:
        with open(args.json, "a", encoding="utf-8") as fh:
            fh.write(report.to_json() + "\n")
    return 0


def _cmd_rollout(args) -> int:
    overrides = _load_overrides(args)
    if args.url:
        import httpx
        payload = {
            "scenario": args.scenario, "seed": args.seed, "steps": args.steps,
            "policy": args.policy, "agents": args.agents, "overrides": overrides,
        }
        resp = httpx.post(f"{args.url}/rollouts", json=payload, timeout=None)
        if resp.status_code != 200:
            print(f"server error {resp.status_code}: {resp.text}", file=sys.stderr)
            return 1
        body = resp.json()
        for line in body["log"]:
            print(line)
        print(json.dumps(body["summary"]))
        return 0
    kind = scenarios.parse_kind(args.scenario)
    summary = bench.run_rollout(
        kind, args.seed, args.steps, policy=args.policy,
        dump_dir=args.dump_frames, agents=args.agents, overrides=overrides,
        log=print, dump_geometry=args.dump_geometry)
    print(summary.to_json())
    return 0


def _cmd_serve(args) -> int:
    import uvicorn
    uvicorn.run("voxbatch.service.app:app", host=args.host, port=args.port,
                log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voxbatch",
        description="CPU-batched voxel-world simulator: benchmark, rollout, serve")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench", help="measure simulation throughput")
    p.add_argument("--scenario", required=True)
    p.add_argument("--workers", type=int, default=bench.effective_cores())
    p.add_argument("--envs-per-worker", type=int, default=64)
    p.add_argument("--agents", type=int, default=1)
    p.add_argument("--seconds", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", help="append the report as one JSON line to this file")
    p.add_argument("--scenario-config", help="key=value override file")
    p.add_argument("--url", help="run on a remote voxbatch server instead")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("rollout", help="run one environment with a policy")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=512)
    p.add_argument("--policy", default="random",
                   help="'random' or a replay-format action file")
    p.add_argument("--agents", type=int, default=1)
    p.add_argument("--dump-frames", help="write env{N}_agent{M}_step{T}.ppm here")
    p.add_argument("--dump-geometry", help="write the merged-box debug list here")
    p.add_argument("--scenario-config", help="key=value override file")
    p.add_argument("--url", help="run on a remote voxbatch server instead")
    p.set_defaults(func=_cmd_rollout)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8716)
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ContractViolation as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
