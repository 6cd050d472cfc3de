from pathlib import Path

from pydantic_settings import BaseSettings

# Resolve .env relative to project root so it's found regardless of CWD
_ENV_PATH = Path(__file__).resolve().parent.parent / ".env"


class Settings(BaseSettings):
    output_dir: str = "runs"
    log_level: str = "INFO"

    # Step control defaults (a config document may override these)
    cfl_safety: float = 0.4
    dt_max: float = 0.01
    dt_min: float = 1e-12
    nonneg_clip_tolerance: float = 1e-12

    # Observer cadence, in accepted steps
    observe_every: int = 200

    # Outcome thresholds, as multiples of max(m)
    exclusion_factor: float = 1e-3
    survival_factor: float = 1e-1

    # Numerical extinction: ||v||_2 below this counts as extinct
    extinction_threshold: float = 1e-3

    # Steady state: sup|rhs| / max(sup|state|, 1) below tol over a window
    steady_tol: float = 1e-8
    steady_window: int = 5

    # Raster size for profile plots
    plot_width: int = 900
    plot_height: int = 600

    # verify refuses larger grids unless --force
    verify_max_cells: int = 64

    # Comparison-ODE envelope checks
    bound_tolerance: float = 0.05
    fit_fraction: float = 0.1

    model_config = {"env_file": str(_ENV_PATH), "env_file_encoding": "utf-8"}


settings = Settings()
