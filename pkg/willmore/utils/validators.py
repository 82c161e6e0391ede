import math

BOUNDARY_MODES = ("periodic", "copy-trace")
TABLEAU_NAMES = ("sirk1", "sirk2")
EPS_SCALINGS = ("constant", "h", "h2")
DT_SCALINGS = ("constant", "h")


def validate_mesh(dim, intervals, counts, boundary_mode):
    """
    Validate mesh construction arguments

    Args:
        dim: Spatial dimension
        intervals: Per-axis [a, b] pairs
        counts: Per-axis cell counts
        boundary_mode: Boundary treatment name

    Returns:
        tuple: (is_valid, error_message)
    """
    if dim not in (1, 2):
        return False, f"Dimension must be 1 or 2, got {dim}"

    if len(intervals) != dim or len(counts) != dim:
        return False, "Domain and cell counts must be given for every axis"

    for a, b in intervals:
        if not (math.isfinite(a) and math.isfinite(b)) or b <= a:
            return False, f"Degenerate domain interval [{a}, {b}]"

    if any(k < 2 for k in counts):
        return False, "Every axis needs at least 2 cells"

    if boundary_mode not in BOUNDARY_MODES:
        return False, f"Unknown boundary mode '{boundary_mode}'"

    return True, ""


def validate_degrees(degrees, allowed=(1, 2)):
    """
    Validate a per-cell degree assignment

    Returns:
        tuple: (is_valid, error_message)
    """
    bad = [int(k) for k in set(int(k) for k in degrees) if k not in allowed]
    if bad:
        return False, f"Degrees {sorted(bad)} are outside the allowed set {allowed}"
    return True, ""


def validate_run_config(config, scenarios=()):
    """
    Validate a run configuration

    Args:
        config: RunConfig (eps and dt as given, before scaling by h)
        scenarios: Known scenario names

    Returns:
        tuple: (is_valid, error_message)
    """
    if scenarios and config.scenario not in scenarios:
        return False, f"Unknown scenario '{config.scenario}', expected one of {sorted(scenarios)}"

    # The manufactured solution is 1D, every shape 2D
    expected_dim = 1 if config.scenario == "mms" else 2
    if config.dim != expected_dim:
        return False, f"Scenario '{config.scenario}' needs dim={expected_dim}"

    if len(config.domain) != 2 or config.domain[1] <= config.domain[0]:
        return False, "Domain must be an interval [a, b] with a < b"

    if config.degree not in (1, 2):
        return False, "Uniform degree must be 1 or 2"

    if config.tableau not in TABLEAU_NAMES:
        return False, f"Unknown tableau '{config.tableau}', expected one of {TABLEAU_NAMES}"

    if config.eps_scaling not in EPS_SCALINGS:
        return False, f"eps_scaling must be one of {EPS_SCALINGS}"

    if config.dt_scaling not in DT_SCALINGS:
        return False, f"dt_scaling must be one of {DT_SCALINGS}"

    if config.eps <= 0:
        return False, "Regularization eps must be positive"

    if config.dt <= 0:
        return False, "Time step must be positive"

    if config.final_time < 0:
        return False, "Final time must be non-negative"

    # Snapshot times must be reachable
    outside = [s for s in config.snapshot_times if s < config.start_time or s > config.final_time]
    if outside:
        return False, f"Snapshot times {outside} lie outside [{config.start_time}, {config.final_time}]"

    if config.solver_tol <= 0 or config.solver_max_cycles < 1:
        return False, "Solver tolerance must be positive and max cycles at least 1"

    return True, ""
