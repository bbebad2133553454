"""
Full acceptance run: every experiment config under data/configs plus a
determinism rerun of the sample curve with a different worker count
"""
import glob
import json
import os
import shutil
import time

import pandas as pd

from data.generate_configs import generate_configs
from persistence import settings
from runner.cli import load_config, run_experiment
from runner.store import RESULTS_FILE, run_dir

ROOT = os.path.dirname(os.path.abspath(__file__))
CONFIG_DIR = os.path.join(ROOT, 'data', 'configs')
STORE = os.path.join(ROOT, 'runs', 'acceptance')

settings.configure_logging('WARNING')

print("=" * 80)
print("🚀 SURVIVAL-EXPONENT ACCEPTANCE RUN")
print("=" * 80)

if not glob.glob(os.path.join(CONFIG_DIR, '*.json')):
    print("\n📦 No configs found, generating...")
    generate_configs(CONFIG_DIR)

paths = sorted(glob.glob(os.path.join(CONFIG_DIR, '*.json')))
print(f"\n📦 Loaded {len(paths)} experiment configs")

rows = []
for path in paths:
    name = os.path.splitext(os.path.basename(path))[0]
    cfg = load_config(path)
    print(f"\n🔧 {name} ({cfg.experiment})...")
    start = time.perf_counter()
    info = run_experiment(cfg, STORE)
    elapsed = time.perf_counter() - start
    failed = [k for k, ok in info['verdicts'].items() if not ok]
    print(f"   {'✅' if info['passed'] else '⚠️ '} {len(info['verdicts'])} verdicts, "
          f"{len(failed)} failed, {elapsed:.1f}s")
    for k in failed:
        print(f"      ✗ {k}")
    fit = info['summary'].get('fit', {})
    rows.append({'config': name, 'experiment': cfg.experiment, 'verdicts': len(info['verdicts']),
                 'failed': len(failed), 'theta_hat': fit.get('theta_hat'),
                 'stderr': fit.get('stderr'), 'seconds': round(elapsed, 1)})

# Determinism: the same config on 1 and 4 workers
print("\n🔀 Determinism check...")
sample = load_config(os.path.join(ROOT, 'data', 'sample_survival_curve.json'))
outputs = []
for workers in ('1', '4'):
    os.environ['PERSISTENCE_WORKERS'] = workers
    store = os.path.join(STORE, f'determinism_w{workers}')
    shutil.rmtree(store, ignore_errors=True)
    run_experiment(sample, store)
    with open(os.path.join(run_dir(store, sample), RESULTS_FILE), 'rb') as f:
        outputs.append(f.read())
identical = outputs[0] == outputs[1]
print(f"   {'✅' if identical else '⚠️ '} results.jsonl byte-identical across worker counts: {identical}")
rows.append({'config': 'determinism', 'experiment': sample.experiment, 'verdicts': 1,
             'failed': int(not identical), 'theta_hat': None, 'stderr': None, 'seconds': None})

print("\n" + "=" * 80)
summary = pd.DataFrame(rows)
print(summary.to_string(index=False))
print("=" * 80)
passed = int((summary['failed'] == 0).sum())
print(f"\n🎯 {passed}/{len(summary)} acceptance checks passed")
with open(os.path.join(STORE, 'acceptance_summary.json'), 'w') as f:
    json.dump(rows, f, indent=2)
print("=" * 80)
