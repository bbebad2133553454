"""
Command line: run <config.json> | export <store> <out.csv> [--filter k=v] | list <store>
Exit codes: 0 success, 1 config error, 2 runtime error, 3 failed verdicts
"""
import argparse
import json
import logging
import sys
import time
from typing import Dict, List, Optional

from persistence import settings
from persistence.errors import ConfigError, PersistenceError

from .experiments import ExperimentConfig, execute
from .store import export_csv, list_runs, write_run

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_VERDICT = 3


def load_config(path: str) -> ExperimentConfig:
    with open(path, 'r', encoding='utf-8') as f:
        return ExperimentConfig.from_dict(json.load(f))


def run_experiment(cfg: ExperimentConfig, store_dir: Optional[str] = None) -> Dict:
    """Execute one experiment and store it; returns run info with the verdicts"""
    store_dir = store_dir or cfg.params.get('output_dir') or settings.STORE_DIR
    start = time.perf_counter()
    result = execute(cfg)
    path = write_run(store_dir, cfg, result, time.perf_counter() - start)
    return {'path': path, 'verdicts': result.verdicts, 'summary': result.summary,
            'passed': all(result.verdicts.values())}


def _parse_filters(items: List[str]) -> Dict[str, str]:
    filters = {}
    for item in items or []:
        if '=' not in item:
            raise ConfigError(f"filter '{item}' must look like key=value")
        key, value = item.split('=', 1)
        filters[key] = value
    return filters


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    print(f"🚀 Running {cfg.experiment} ({cfg.config_hash[:12]})")
    info = run_experiment(cfg, args.store)
    for name, ok in info['verdicts'].items():
        print(f"   {'✅' if ok else '⚠️ '} {name}")
    print(f"📦 Results saved to {info['path']}")
    return EXIT_OK if info['passed'] else EXIT_VERDICT


def _cmd_export(args) -> int:
    rows = export_csv(args.store, args.out, _parse_filters(args.filter))
    print(f"✅ Exported {rows} rows to {args.out}")
    return EXIT_OK


def _cmd_list(args) -> int:
    runs = list_runs(args.store)
    if not runs:
        print("⚠️ No runs stored")
    for run in runs:
        status = {True: '✅', False: '⚠️ ', None: '  '}[run.get('passed')]
        print(f"{status} {run['run']}  {run.get('experiment', '?'):<24} "
              f"{run.get('n_records', '?')} records  {run.get('wall_time_seconds', '?')}s")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Survival-exponent experiments")
    parser.add_argument('--log-level', default=None, help="Logging level (default from PERSISTENCE_LOG_LEVEL)")
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help="Run an experiment config")
    run.add_argument('config', help="Path to the experiment JSON file")
    run.add_argument('--store', default=None, help="Results store directory")
    run.set_defaults(handler=_cmd_run)

    export = sub.add_parser('export', help="Export stored records to CSV")
    export.add_argument('store', help="Results store directory")
    export.add_argument('out', help="Output CSV path")
    export.add_argument('--filter', action='append', default=[], help="Keep rows with key=value")
    export.set_defaults(handler=_cmd_export)

    lst = sub.add_parser('list', help="List stored runs")
    lst.add_argument('store', help="Results store directory")
    lst.set_defaults(handler=_cmd_list)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    settings.configure_logging(args.log_level)
    try:
        return args.handler(args)
    except (ConfigError, json.JSONDecodeError) as e:
        print(f"⚠️ Configuration error: {e}")
        return EXIT_CONFIG
    except (PersistenceError, OSError) as e:
        print(f"⚠️ {e}")
        return EXIT_RUNTIME


if __name__ == '__main__':
    sys.exit(main())
