import os
from pathlib import Path

ENV_PREFIX = "STOCHLAB_"


def load_env_local(path: Path) -> None:
    """Zet STOCHLAB_* waarden uit een lokaal .env-bestand, zonder bestaande omgeving te overschrijven."""
    if not path.exists():
        return
    for raw in path.read_text(encoding="utf-8").splitlines():
        key, sep, val = raw.partition("=")
        key = key.strip()
        if sep and key.startswith(ENV_PREFIX):
            os.environ.setdefault(key, val.strip())


load_env_local(Path(__file__).parent.parent / ".env.local")


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        # ongeldige waarde in de omgeving: terugvallen op default
        return default


class Config:
    # standaard aantal workers voor run_experiment (CLI --workers overschrijft)
    WORKERS = max(1, _int_env("STOCHLAB_WORKERS", 1))
    LOG_LEVEL = os.getenv("STOCHLAB_LOG_LEVEL", "INFO").upper()
    # Run-registry (SQLAlchemy URL), leeg = uitgeschakeld
    REGISTRY_URL = os.getenv("STOCHLAB_REGISTRY_URL") or None
    OUT_DIR = Path(os.getenv("STOCHLAB_OUT", "results"))

    # Chunk-grootte voor gebufferde uniforme trekkingen in de event-loops
    UNIFORM_BLOCK = 8192
    # Iteratieve solver
    SOLVER_TOLERANCE = 1e-10
    SOLVER_MAX_ITER = 20_000
