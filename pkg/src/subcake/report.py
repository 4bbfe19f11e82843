"""Per-trial report records shared by the pipelines and the harness."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

from .cake import format_rational


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, int, float, str)) or value is None:
        return value
    # mpq and friends
    return format_rational(value)


@dataclass
class TrialReport:
    scenario: str
    n: int
    params: dict
    status: str
    success: bool
    ledger: dict = field(default_factory=dict)
    certificates: dict = field(default_factory=dict)
    victims: int = 0
    flags: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    trial: int = 0
    seed: int | None = None
    wall_time: float | None = None

    @property
    def phase_totals(self) -> dict[str, int]:
        return {phase: sum(row.values()) for phase, row in self.ledger.items()}

    @property
    def total_queries(self) -> int:
        return sum(self.phase_totals.values())

    def queries(self, phase: str) -> int:
        return self.phase_totals.get(phase, 0)

    def to_json(self) -> dict:
        data = _jsonable(asdict(self))
        data["phase_totals"] = self.phase_totals
        data["total_queries"] = self.total_queries
        return data

