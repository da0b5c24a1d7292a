#!/usr/bin/env python
"""Script om de tabellen van de run-registry aan te maken"""
import sys
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent))

from sqlalchemy import inspect

from stochlab.config import Config
from stochlab.models import registry_engine

url = sys.argv[1] if len(sys.argv) > 1 else (Config.REGISTRY_URL or "sqlite:///stochlab_runs.db")

print(f"Creating registry tables in {url} ...")
try:
    engine = registry_engine(url)
    tables = inspect(engine).get_table_names()
    print(f"✅ Registry now contains {len(tables)} tables:")
    for table in sorted(tables):
        print(f"   - {table}")
except Exception as e:
    print(f"❌ Error creating tables: {e}")
    sys.exit(1)
