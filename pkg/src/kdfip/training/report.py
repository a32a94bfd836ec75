"""Per-step training records."""

from __future__ import annotations

import io
from dataclasses import dataclass, field

from ..ioutil import atomic_write_text


@dataclass
class StepRecord:
    step: int
    stage: str
    loss_ce: float
    loss_kl: float
    total: float
    lr: float


@dataclass
class TrainReport:
    stage: str
    beta: float = 0.0
    steps: list[StepRecord] = field(default_factory=list)
    final_metrics: dict = field(default_factory=dict)
    wall_clock: float = 0.0
    warnings: list[str] = field(default_factory=list)

    def append(self, record: StepRecord) -> None:
        if record.loss_kl < -1e-10:
            raise ValueError(
                f"step {record.step}: KL {record.loss_kl} below the -1e-10 floor"
            )
        if abs(record.total - (record.loss_ce + self.beta * record.loss_kl)) > 1e-9:
            raise ValueError(f"step {record.step}: total != ce + beta*kl")
        self.steps.append(record)

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    def to_csv(self, path) -> None:
        buf = io.StringIO()
        buf.write("step,stage,loss_ce,loss_kl,total,lr\n")
        for r in self.steps:
            buf.write(
                f"{r.step},{r.stage},{r.loss_ce!r},{r.loss_kl!r},{r.total!r},{r.lr!r}\n"
            )
        atomic_write_text(path, buf.getvalue())
