"""
Results Store - one directory per run (named by config hash prefix) holding
results.jsonl and manifest.json, plus CSV export of the records
"""
import json
import logging
import os
from datetime import datetime
from typing import Dict, List, Optional

import pandas as pd

from persistence import settings
from persistence.errors import StoreError

from .experiments import ExperimentConfig, ExperimentResult, canonical_json

logger = logging.getLogger(__name__)

HASH_PREFIX = 12
RESULTS_FILE = 'results.jsonl'
MANIFEST_FILE = 'manifest.json'
# Leading CSV columns; the rest follow in sorted order
CSV_COLUMNS = ['experiment', 'config_hash', 'content_hash', 'kind', 'label', 'T', 'n', 'J_mode',
               'grid_step', 'n_trials', 'n_survived', 'p_hat', 'ci_low', 'ci_high', 'master_seed']


def run_dir(store_dir: str, cfg: ExperimentConfig) -> str:
    return os.path.join(store_dir, cfg.config_hash[:HASH_PREFIX])


def write_run(store_dir: str, cfg: ExperimentConfig, result: ExperimentResult,
              wall_time: float) -> str:
    """Write results.jsonl (deterministic) and manifest.json (run metadata) for one run"""
    path = run_dir(store_dir, cfg)
    try:
        os.makedirs(path, exist_ok=True)
        with open(os.path.join(path, RESULTS_FILE), 'w', encoding='utf-8', newline='\n') as f:
            for rec in result.records:
                f.write(canonical_json(rec) + '\n')
        manifest = {
            'experiment': cfg.experiment,
            'config_hash': cfg.config_hash,
            'content_hash': cfg.content_hash,
            'tool_version': settings.TOOL_VERSION,
            'wall_time_seconds': round(wall_time, 3),
            'finished_at': datetime.now().isoformat(timespec='seconds'),
            'workers': settings.worker_count(),
            'n_records': len(result.records),
            'verdicts': result.verdicts,
            'passed': all(result.verdicts.values()),
            'summary': result.summary,
            'config': cfg.to_dict(),
        }
        with open(os.path.join(path, MANIFEST_FILE), 'w', encoding='utf-8') as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
    except OSError as e:
        raise StoreError(f"cannot write run to {path}: {e}") from e
    logger.info("stored %d records in %s", len(result.records), path)
    return path


def _check_store(store_dir: str):
    if not os.path.isdir(store_dir):
        raise StoreError(f"store {store_dir} does not exist")


def _run_dirs(store_dir: str) -> List[str]:
    _check_store(store_dir)
    return sorted(d for d in os.listdir(store_dir)
                  if os.path.isfile(os.path.join(store_dir, d, RESULTS_FILE)))


def load_records(store_dir: str) -> List[Dict]:
    records = []
    for name in _run_dirs(store_dir):
        with open(os.path.join(store_dir, name, RESULTS_FILE), encoding='utf-8') as f:
            records.extend(json.loads(line) for line in f if line.strip())
    return records


def list_runs(store_dir: str) -> List[Dict]:
    runs = []
    for name in _run_dirs(store_dir):
        manifest_path = os.path.join(store_dir, name, MANIFEST_FILE)
        if not os.path.exists(manifest_path):
            runs.append({'run': name})
            continue
        with open(manifest_path, encoding='utf-8') as f:
            manifest = json.load(f)
        runs.append({'run': name, 'experiment': manifest.get('experiment'),
                     'n_records': manifest.get('n_records'), 'passed': manifest.get('passed'),
                     'wall_time_seconds': manifest.get('wall_time_seconds')})
    return runs


def records_frame(records: List[Dict], filters: Optional[Dict[str, str]] = None) -> pd.DataFrame:
    """Flatten records (nested keys joined by '.') and keep rows matching every k=v filter"""
    if records:
        df = pd.json_normalize(records, sep='.')
    else:
        df = pd.DataFrame(columns=CSV_COLUMNS)
    for key, value in (filters or {}).items():
        if key not in df.columns:
            df = df.iloc[0:0]
            continue
        df = df[df[key].astype(str) == value]
    df = df.reindex(columns=CSV_COLUMNS + sorted(c for c in df.columns if c not in CSV_COLUMNS))
    return df.reset_index(drop=True)


def export_csv(store_dir: str, out_path: str, filters: Optional[Dict[str, str]] = None) -> int:
    """One CSV row per record; floats keep 17 significant digits. Returns the row count."""
    df = records_frame(load_records(store_dir), filters)
    try:
        df.to_csv(out_path, index=False, float_format='%.17g')
    except OSError as e:
        raise StoreError(f"cannot write {out_path}: {e}") from e
    logger.info("exported %d rows to %s", len(df), out_path)
    return len(df)
