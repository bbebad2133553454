import json
import os

# Horizons shared by the walk experiments: 2^8 ... 2^15
WALK_T_GRID = [2 ** k for k in range(8, 16)]
# Gaussian grid experiments stay under the dense-sampler limit
GRID_T_GRID = [16, 32, 64, 128, 256, 512, 1024]
TRIALS = 100000

INTEGRATED_RADEMACHER = {
    "process": {"kind": "walk", "law": "rademacher"},
    "functional": {"kind": "fractional", "alpha": 1.0},
    "barrier": {"kind": "constant", "c": 1.0},
    "J_mode": "integers",
    "T_grid": WALK_T_GRID,
    "trials": TRIALS,
    "alpha": 1.0,
    "common_random_numbers": True,
}

CONFIGS = {
    "01_integrated_walk": dict(INTEGRATED_RADEMACHER, experiment="survival_curve",
                               theta_range=[0.20, 0.30]),
    "02_universality": dict(INTEGRATED_RADEMACHER, experiment="exponent_universality",
                            laws=["rademacher", "std_gaussian", "centered_exponential"],
                            theta_range=[0.20, 0.30], max_spread=0.05),
    "03_plain_walk": {
        "experiment": "survival_curve",
        "process": {"kind": "walk", "law": "rademacher"},
        "barrier": {"kind": "constant", "c": 1.0},
        "J_mode": "integers",
        "T_grid": WALK_T_GRID,
        "trials": TRIALS,
        "alpha": 0.0,
        "common_random_numbers": True,
        "theta_range": [0.45, 0.55],
    },
    "04_log_window": dict(INTEGRATED_RADEMACHER, experiment="survival_curve",
                          log_window={"theta": 0.25, "power": 4}),
    "05_theta_monotonicity": {
        "experiment": "theta_monotonicity",
        "alphas": [0.0, 0.5, 1.0, 2.0],
        "grid_steps": [1.0, 0.5],
        "barrier": {"kind": "constant", "c": 1.0},
        "T_grid": GRID_T_GRID,
        "trials": 50000,
        "common_random_numbers": True,
        "theta_ranges": {"0.0": [0.45, 0.55], "1.0": [0.20, 0.30]},
    },
    "06_closed_form": {
        "experiment": "property_suite",
        "suite": "closed_form",
        "suite_params": {"T_list": [1, 10, 100], "n_trials": 20000, "points_per_horizon": 1024},
    },
    "07_slepian": {
        "experiment": "property_suite",
        "suite": "slepian",
        "suite_params": {"n_max": 50, "tau_max": 10.0, "step": 0.01},
    },
    "08_b_upper_bound": {
        "experiment": "b_upper_bound",
        "corr": {"kind": "limit"},
        "grid_step": 0.01,
        "T_grid": [5, 10, 15, 20],
        "trials": TRIALS,
        "upper": 1.29,
        "superadditivity": [5, 10],
    },
    "09a_fkg": {"experiment": "property_suite", "suite": "fkg",
                "suite_params": {"n_pairs": 1000, "n_max": 6}},
    "09b_fkg_three_point": {"experiment": "property_suite", "suite": "fkg_three_point",
                            "suite_params": {"n_pairs": 1000, "n_max": 6}},
    "09c_sandwich": {"experiment": "property_suite", "suite": "sandwich",
                     "suite_params": {"n_paths": 10000, "T_list": [3.5, 7.25]}},
    "09d_drift": {"experiment": "property_suite", "suite": "drift",
                  "suite_params": {"dim": 8, "n_cases": 1000, "mc_trials": 20000}},
    "10_randpoly": {
        "experiment": "randpoly_curve",
        "n_grid": [0, 1, 4, 8, 16, 32, 64],
        "trials": 20000,
        "fit_from": 4,
        "decay_range": [0.3, 1.5],
    },
    "11_drift_invariance": {
        "experiment": "drift_invariance",
        "J_mode": "grid",
        "grid_step": 0.25,
        "T_grid": [2 ** k for k in range(4, 12)],
        "trials": TRIALS,
        "common_random_numbers": True,
        "cases": [
            {"label": "brownian_drift", "process": {"kind": "brownian"}, "alpha": 0.0,
             "barrier": {"kind": "power_drift", "c": 1.0, "gamma": 0.4}, "theta_range": [0.45, 0.55]},
            {"label": "integrated_drift", "process": {"kind": "ibm_pair"}, "alpha": 1.0,
             "barrier": {"kind": "power_drift", "c": 1.0, "gamma": 1.4}, "theta_range": [0.20, 0.30]},
            {"label": "liouville", "process": {"kind": "riemann_liouville", "alpha": 0.5},
             "grid_step": 0.5, "T_grid": GRID_T_GRID, "trials": 50000, "theta_range": [0.20, 0.55]},
            {"label": "liouville_drift", "process": {"kind": "riemann_liouville", "alpha": 0.5},
             "grid_step": 0.5, "T_grid": GRID_T_GRID, "trials": 50000, "theta_range": [0.20, 0.55],
             "barrier": {"kind": "fractional_drift", "c": 1.0, "order": 0.5, "scale": 1.0, "t1": 1.0},
             "log_power": 0.5, "compare_to": "liouville"},
        ],
    },
    "12_barrier_switch": {
        "experiment": "barrier_switch",
        "T_grid": WALK_T_GRID,
        "trials": TRIALS,
        "alpha": 1.0,
        "common_random_numbers": True,
        "cases": [
            {"label": "switched", "process": {"kind": "ibm_pair"}, "J_mode": "grid", "grid_step": 0.25,
             "barrier": {"kind": "late_zero", "t1": 1.0}, "theta_range": [0.20, 0.30]},
            dict(INTEGRATED_RADEMACHER, label="reference", theta_range=[0.20, 0.30]),
        ],
    },
    "13_fbm_vs_liouville": {
        "experiment": "fbm_vs_liouville",
        "J_mode": "grid",
        "grid_step": 0.5,
        "barrier": {"kind": "constant", "c": 1.0},
        "T_grid": GRID_T_GRID,
        "trials": TRIALS,
        "common_random_numbers": True,
        "cases": [
            {"label": "fbm", "process": {"kind": "fbm", "hurst": 0.9}, "log_power": 0,
             "theta_range": [0.05, 0.15]},
            {"label": "liouville", "process": {"kind": "riemann_liouville", "alpha": 0.4},
             "alpha": 0.4, "log_power": 0, "theta_range": [0.15, None]},
        ],
    },
}


def generate_configs(out_dir=None, master_seed=42):
    out_dir = out_dir or os.path.join(os.path.dirname(os.path.abspath(__file__)), "configs")
    os.makedirs(out_dir, exist_ok=True)
    print(f"📦 Writing {len(CONFIGS)} experiment configs to {out_dir}...")
    paths = []
    for name, cfg in CONFIGS.items():
        cfg = dict(cfg, master_seed=master_seed)
        path = os.path.join(out_dir, f"{name}.json")
        with open(path, "w") as f:
            json.dump(cfg, f, indent=2)
        paths.append(path)
    print(f"✅ Done")
    return paths


if __name__ == "__main__":
    generate_configs()
