from datetime import datetime
import enum
import hashlib
import json
from typing import List, Optional

from sqlalchemy import (
    DateTime, Enum, Float, Index, Integer, String, create_engine, select
)
from sqlalchemy.engine import Engine
from sqlalchemy.orm import DeclarativeBase, Mapped, Session, mapped_column


# --- Enums ---
class BoundaryMode(enum.Enum):
    open = "open"
    periodic = "periodic"

class PercolationMode(enum.Enum):
    bond = "bond"
    site = "site"

class SiteState(enum.IntEnum):
    vacant = 0
    occupied = 1      # bij het idle-proces: excited
    idle = 2

class EventKind(enum.IntEnum):
    death = 0
    infection = 1
    excitation = 2

class ExperimentKind(enum.Enum):
    percolation_scan = "percolation_scan"
    contact_survival = "contact_survival"
    idle_contact = "idle_contact"
    exit_laws = "exit_laws"
    resistance_scaling = "resistance_scaling"
    neural_phase = "neural_phase"

class RunStatus(enum.Enum):
    running = "running"
    completed = "completed"
    failed = "failed"


# --- run registry ---
class Base(DeclarativeBase):
    pass

class ExperimentRun(Base):
    __tablename__ = "experiment_run"
    run_id        = mapped_column(Integer, primary_key=True, autoincrement=True)
    kind: Mapped[ExperimentKind] = mapped_column(
        Enum(ExperimentKind, name="experiment_kind", native_enum=False), nullable=False)
    # 64-bit seeds passen niet in een signed BIGINT, dus als tekst
    master_seed   = mapped_column(String(20), nullable=False)
    trials        = mapped_column(Integer, nullable=False)
    workers       = mapped_column(Integer, nullable=False, default=1)
    out_dir       = mapped_column(String(500), nullable=False)
    config_digest = mapped_column(String(64), nullable=False)
    status: Mapped[RunStatus] = mapped_column(
        Enum(RunStatus, name="run_status", native_enum=False),
        nullable=False, default=RunStatus.running)
    exit_code     = mapped_column(Integer, nullable=True)
    rows_written  = mapped_column(Integer, nullable=True)
    started_at    = mapped_column(DateTime, default=datetime.utcnow)
    wall_time_s   = mapped_column(Float, nullable=True)
    __table_args__ = (
        Index("idx_experiment_run_kind_digest", "kind", "config_digest"),
    )


def config_digest(config_echo: dict) -> str:
    """sha256 van de canonieke config-echo (gesorteerde keys)."""
    payload = json.dumps(config_echo, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def registry_engine(url: str) -> Engine:
    engine = create_engine(url)
    Base.metadata.create_all(engine)
    return engine


def record_run_start(engine: Engine, kind: ExperimentKind, master_seed: int, trials: int,
                     workers: int, out_dir: str, config_echo: dict) -> int:
    """Registreer een run als 'running' en geef het run_id terug."""
    with Session(engine) as session:
        run = ExperimentRun(
            kind=kind,
            master_seed=str(master_seed),
            trials=trials,
            workers=workers,
            out_dir=out_dir,
            config_digest=config_digest(config_echo),
            status=RunStatus.running,
        )
        session.add(run)
        session.commit()
        return int(run.run_id)


def record_run_finish(engine: Engine, run_id: int, exit_code: int,
                      rows_written: Optional[int], wall_time_s: float) -> None:
    with Session(engine) as session:
        run = session.get(ExperimentRun, run_id)
        if run is None:
            return
        run.status = RunStatus.completed if exit_code == 0 else RunStatus.failed
        run.exit_code = exit_code
        run.rows_written = rows_written
        run.wall_time_s = wall_time_s
        session.commit()


def list_runs(engine: Engine, kind: Optional[ExperimentKind] = None) -> List[dict]:
    """Alle geregistreerde runs, nieuwste eerst."""
    with Session(engine) as session:
        q = select(ExperimentRun)
        if kind is not None:
            q = q.where(ExperimentRun.kind == kind)
        q = q.order_by(ExperimentRun.run_id.desc())
        return [
            {
                "run_id": r.run_id,
                "kind": r.kind.value,
                "master_seed": int(r.master_seed),
                "trials": r.trials,
                "workers": r.workers,
                "out_dir": r.out_dir,
                "config_digest": r.config_digest,
                "status": r.status.value,
                "exit_code": r.exit_code,
                "rows_written": r.rows_written,
                "started_at": r.started_at,
                "wall_time_s": r.wall_time_s,
            }
            for r in session.scalars(q).all()
        ]
