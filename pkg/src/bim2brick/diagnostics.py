"""Structured, non-fatal findings collected along the pipeline."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

log = logging.getLogger("bim2brick")

WARNING = "warning"
ERROR = "error"


@dataclass(frozen=True)
class Diagnostic:
    code: str
    severity: str
    source_id: str | None
    message: str

    def __str__(self) -> str:
        where = f" [{self.source_id}]" if self.source_id else ""
        return f"{self.severity}: {self.code}{where}: {self.message}"

    def to_dict(self) -> dict:
        return asdict(self)


def emit(sink: list | None, code: str, source_id: str | None, message: str,
         severity: str = WARNING) -> Diagnostic:
    """Record a diagnostic in ``sink`` (when given) and log it."""
    diag = Diagnostic(code, severity, source_id, message)
    if sink is not None:
        sink.append(diag)
    log.debug("%s", diag)
    return diag
