from datetime import datetime

from sqlalchemy import Boolean, Column, DateTime, Float, Integer, String, Text, UniqueConstraint

from .database import Base
from .schemas import BandSummary, EvaluationRecord


class EvaluationDB(Base):
    __tablename__ = "evaluations"
    __table_args__ = (UniqueConstraint("genome_hash", "scope", name="uq_evaluations_genome_scope"),)
    id = Column(Integer, primary_key=True, index=True)
    genome_hash = Column(String(16), index=True, nullable=False)
    scope = Column(String(16), index=True, nullable=False, default="")
    grid_order = Column(Integer)
    genome_hex = Column(String)
    fitness = Column(Float)
    valid = Column(Boolean, default=True)
    summary_json = Column(Text, nullable=True)
    error = Column(Text, nullable=True)
    wall_time_s = Column(Float, default=0.0)
    created_at = Column(DateTime, default=datetime.utcnow)

    def update_from(self, record: EvaluationRecord) -> None:
        self.grid_order = record.grid_order
        self.genome_hex = record.genome_hex
        self.fitness = record.fitness
        self.valid = record.valid
        self.summary_json = record.summary.model_dump_json() if record.summary is not None else None
        self.error = record.error
        self.wall_time_s = record.wall_time_s

    def to_record(self) -> EvaluationRecord:
        summary = BandSummary.model_validate_json(self.summary_json) if self.summary_json else None
        return EvaluationRecord(genome_hash=self.genome_hash, genome_hex=self.genome_hex,
                                grid_order=self.grid_order, fitness=self.fitness, valid=bool(self.valid),
                                summary=summary, wall_time_s=self.wall_time_s or 0.0, error=self.error)
