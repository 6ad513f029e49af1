SCENARIO_CATALOG = {
    # 10 x 10 lattice, C in (0.001, 100), U in (0.1, 1000), random start, 1 s
    "example1": {
        "n_x": 10,
        "n_y": 10,
        "capacity_exponent_range": [-3, 2],
        "ux_exponent_range": [-1, 3],
        "uy_exponent_range": [-1, 3],
        "initial_condition": {"kind": "uniform-random", "lo": 0.0, "hi": 100.0},
        "t0": 0.0,
        "t_fin": 1.0,
    },
    # 400 x 10 anisotropic strip, hot slab over blocks 400..780, 100 s
    "example2": {
        "n_x": 400,
        "n_y": 10,
        "capacity_exponent_range": [-3, 3],
        "ux_exponent_range": [-2, 4],
        "uy_exponent_range": [-4, 2],
        "initial_condition": {"kind": "rectangular-pulse", "i_lo": 400, "i_hi": 780, "high_value": 100.0, "low_value": 0.0},
        "t0": 0.0,
        "t_fin": 100.0,
    },
    # smallest non-trivial lattice; quick smoke runs
    "demo2x2": {
        "n_x": 2,
        "n_y": 2,
        "capacity_exponent_range": [0, 1],
        "ux_exponent_range": [0, 1],
        "uy_exponent_range": [0, 1],
        "initial_condition": {"kind": "rectangular-pulse", "i_lo": 1, "i_hi": 1, "high_value": 100.0, "low_value": 0.0},
        "t0": 0.0,
        "t_fin": 1.0,
    },
}
