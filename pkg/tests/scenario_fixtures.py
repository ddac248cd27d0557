"""Shared scenario configs used by the harness tests and the acceptance run."""


def small_configs() -> dict[str, dict]:
    """One modest-sized config per scenario kind."""
    mode_params = {
        "omega_a": 1.0, "omega_b": 1.0, "coupling": 0.1,
        "cutoff_a": 16, "cutoff_b": 16,
    }
    return {
        "evolve": {
            "scenario": "evolve",
            "outdir": "evolve",
            "params": {
                **mode_params,
                "initial": {"kind": "coherent", "mu_a": [0.8, 0.0], "mu_b": [0.0, 0.0]},
                "samples": 16,
            },
        },
        "ein_scan": {
            "scenario": "ein_scan",
            "seed": 5,
            "outdir": "ein",
            "params": {
                **mode_params,
                "coherent_magnitudes": [0.0, 0.7],
                "coherent_phases": [0.0],
                "fock_max_total": 2,
                "random_count": 2,
                "samples": 12,
            },
        },
        "clicks": {
            "scenario": "clicks",
            "seed": 7,
            "outdir": "clicks",
            "params": {
                "source": {"kind": "coherent", "mean_rate": 5000.0},
                "detectors": [{}, {}],
                "duration": 2.0,
            },
        },
        "g2": {
            "scenario": "g2",
            "seed": 9,
            "outdir": "g2",
            "params": {
                "source": {"kind": "thermal", "mean_rate": 10000.0, "coherence_time": 1e-3},
                "detectors": [{}, {}],
                "duration": 2.0,
                "bin_width": 5e-5,
                "max_lag": 4e-4,
            },
        },
        "counting": {
            "scenario": "counting",
            "seed": 10,
            "outdir": "counting",
            "params": {
                "source": {"kind": "coherent", "mean_rate": 10000.0},
                "detectors": [{}, {}],
                "duration": 2.0,
                "window": 1e-3,
            },
        },
        "decay_fit": {
            "scenario": "decay_fit",
            "seed": 12,
            "outdir": "decay",
            "params": {
                "synthetic": {"model": "exponential", "i0": 800.0, "tau": 0.7,
                               "n_points": 50, "t_max": 3.0},
            },
        },
        "tomo_sim": {
            "scenario": "tomo_sim",
            "seed": 14,
            "outdir": "tomo-sim",
            "params": {"state": {"kind": "singlet"}, "scheme": "mub", "shots": 5000,
                        "noise_fraction": 0.02},
        },
        "bell": {
            "scenario": "bell",
            "outdir": "bell",
            "params": {"state": {"kind": "singlet"}, "angles_deg": [0.0, 45.0, 22.5, 67.5]},
        },
        "full_pipeline": {
            "scenario": "full_pipeline",
            "seed": 16,
            "outdir": "pipeline",
            "params": {"state": {"kind": "singlet"}, "scheme": "mub", "shots": 20000,
                        "noise_fraction": 0.02, "method": "mle"},
        },
    }
