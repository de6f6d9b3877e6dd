# hesslab/repo.py
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Optional, Sequence

from sqlmodel import Field, Session, SQLModel, create_engine, select

from hesslab.reports import Criterion


class CriterionRecord(SQLModel, table=True):
    id: Optional[int] = Field(default=None, primary_key=True)
    run_id: str = Field(index=True)
    command: str
    criterion: str
    measured: float
    bound: float
    passed: bool
    created_at: datetime


class Repo:
    def __init__(self, db_path: str):
        if db_path != ":memory:":
            Path(db_path).parent.mkdir(parents=True, exist_ok=True)
        self.engine = create_engine(f"sqlite:///{db_path}", echo=False)
        SQLModel.metadata.create_all(self.engine)

    def session(self):
        return Session(self.engine)

    def record(self, run_id: str, command: str, criteria: Sequence[Criterion]) -> int:
        now = datetime.now(timezone.utc)
        with self.session() as s:
            for c in criteria:
                s.add(CriterionRecord(run_id=run_id, command=command, criterion=c.id,
                                      measured=c.measured, bound=c.bound, passed=c.passed,
                                      created_at=now))
            s.commit()
        return len(criteria)

    def history(self, criterion: str) -> List[CriterionRecord]:
        with self.session() as s:
            stmt = select(CriterionRecord).where(CriterionRecord.criterion == criterion).order_by(CriterionRecord.id)
            return list(s.exec(stmt).all())
