# stochlab/__init__.py
import logging
from typing import Optional

from sqlalchemy import text
from sqlalchemy.engine import Engine

from .config import Config
from .models import registry_engine

logger = logging.getLogger(__name__)


def _test_registry_connection(engine: Engine) -> bool:
    """Test of de registry-database bereikbaar is"""
    try:
        with engine.connect() as conn:
            conn.execute(text("SELECT 1"))
        return True
    except Exception:
        return False


def create_lab(log_level: Optional[str] = None, registry_url: Optional[str] = None) -> Optional[Engine]:
    """
    Configureer logging en (optioneel) de run-registry.
    Geeft de registry-engine terug, of None als er geen registry is of die niet werkt.
    """
    logging.basicConfig(
        level=getattr(logging, (log_level or Config.LOG_LEVEL).upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    url = registry_url or Config.REGISTRY_URL
    if not url:
        return None
    try:
        engine = registry_engine(url)
    except Exception as e:
        # registry is optioneel: experimenten draaien ook zonder
        logger.warning(f"Registry initialization failed: {e}. Continuing without run registry.")
        return None
    if not _test_registry_connection(engine):
        logger.warning(f"Registry at {url} is not reachable. Continuing without run registry.")
        return None
    return engine
