import logging
from pathlib import Path
from typing import Dict, Optional, Union

from sqlalchemy import create_engine
from sqlalchemy.engine import Engine
from sqlalchemy.orm import declarative_base, sessionmaker

from .config import DATABASE_URL
from .schemas import EvaluationRecord


Base = declarative_base()


def create_engine_from_url(url: Optional[str] = None, run_dir: Union[str, Path, None] = None) -> Engine:
    """
    Engine for the evaluation cache.
    - A configured URL is tried first (FRACTENNA_DATABASE_URL by default)
    - On failure, or when none is set, falls back to <run_dir>/evaluations.db
    """
    engine = None
    db_url = url if url is not None else DATABASE_URL
    if db_url:
        if db_url.startswith("postgres://"):
            db_url = db_url.replace("postgres://", "postgresql+psycopg2://", 1)
        logging.info("偵測到 DATABASE_URL，正在建立評估快取連線引擎...")
        try:
            engine = create_engine(db_url, pool_pre_ping=True)
            with engine.connect() as _:
                logging.info("評估快取資料庫連線測試成功。")
        except Exception as e:
            logging.error(f"資料庫連線失敗: {e}")
            logging.warning("將改用本地 SQLite 資料庫。")
            engine = None

    if engine is None:
        folder = Path(run_dir) if run_dir is not None else Path(".")
        folder.mkdir(parents=True, exist_ok=True)
        path = folder / "evaluations.db"
        logging.info(f"使用本地 SQLite 資料庫 {path} ...")
        engine = create_engine(f"sqlite:///{path}", connect_args={"check_same_thread": False})

    Base.metadata.create_all(bind=engine)
    return engine


def session_factory(engine: Engine) -> sessionmaker:
    return sessionmaker(autocommit=False, autoflush=False, bind=engine)


class EvaluationStore:
    """Write-through persistence for the GA evaluation cache.

    Rows are keyed by (genome hash, scope); the scope digests the evaluator,
    base layout, fitness spec and solver params, so runs sharing one database
    never read or overwrite each other's fitness values.
    """

    def __init__(self, engine: Engine, scope: str = ""):
        from . import models  # noqa: F401  registers the table on Base
        Base.metadata.create_all(bind=engine)
        self.engine = engine
        self.scope = scope
        self._sessions = session_factory(engine)

    @classmethod
    def open(cls, run_dir: Union[str, Path], url: Optional[str] = None, scope: str = "") -> "EvaluationStore":
        return cls(create_engine_from_url(url, run_dir), scope)

    def save(self, record: EvaluationRecord) -> None:
        from .models import EvaluationDB

        with self._sessions() as db:
            row = db.query(EvaluationDB).filter(EvaluationDB.genome_hash == record.genome_hash,
                                                EvaluationDB.scope == self.scope).first()
            if row is None:
                row = EvaluationDB(genome_hash=record.genome_hash, scope=self.scope)
                db.add(row)
            row.update_from(record)
            db.commit()

    def load_all(self) -> Dict[str, EvaluationRecord]:
        from .models import EvaluationDB

        with self._sessions() as db:
            rows = (db.query(EvaluationDB).filter(EvaluationDB.scope == self.scope)
                    .order_by(EvaluationDB.genome_hash).all())
            return {row.genome_hash: row.to_record() for row in rows}

    def close(self) -> None:
        self.engine.dispose()
