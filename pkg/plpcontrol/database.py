"""SQLite persistence for the PLP memory table."""
from __future__ import annotations

import sqlite3
from contextlib import contextmanager
from pathlib import Path
from typing import List, Optional, Tuple

from . import config
from .synthesis.model_based import SystemResponse

SCHEMA = """
CREATE TABLE IF NOT EXISTS responses (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    label TEXT NOT NULL,
    mode INTEGER NOT NULL,
    source TEXT NOT NULL,
    synthesized_at INTEGER NOT NULL,
    response TEXT NOT NULL,
    created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP,
    updated_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP,
    UNIQUE (label, mode)
);

CREATE TRIGGER IF NOT EXISTS responses_updated_at
AFTER UPDATE ON responses
BEGIN
    UPDATE responses SET updated_at = CURRENT_TIMESTAMP WHERE id = NEW.id;
END;
"""


class MemoryDatabase:
    """Cached system responses keyed by (system label, mode)."""

    def __init__(self, db_path: Path | str | None = None) -> None:
        self.db_path = Path(db_path or config.DEFAULT_MEMORY_DB)
        self.db_path.parent.mkdir(parents=True, exist_ok=True)
        self._ensure_schema()

    @contextmanager
    def connect(self):
        connection = sqlite3.connect(self.db_path)
        try:
            yield connection
        finally:
            connection.close()

    def _ensure_schema(self) -> None:
        with self.connect() as conn:
            conn.executescript(SCHEMA)
            conn.commit()

    def save_response(self, label: str, mode: int, source: str, synthesized_at: int, response: SystemResponse) -> None:
        with self.connect() as conn:
            conn.execute(
                """
                INSERT INTO responses (label, mode, source, synthesized_at, response)
                VALUES (?, ?, ?, ?, ?)
                ON CONFLICT (label, mode) DO UPDATE
                SET source = excluded.source, synthesized_at = excluded.synthesized_at, response = excluded.response
                """,
                (label, int(mode), source, int(synthesized_at), response.to_text()),
            )
            conn.commit()

    def load_response(self, label: str, mode: int) -> Optional[Tuple[str, SystemResponse]]:
        with self.connect() as conn:
            cursor = conn.execute(
                "SELECT source, response FROM responses WHERE label = ? AND mode = ?",
                (label, int(mode)),
            )
            row = cursor.fetchone()
            if row is None:
                return None
            return row[0], SystemResponse.from_text(row[1])

    def list_entries(self, label: str) -> List[Tuple[int, str, int]]:
        with self.connect() as conn:
            cursor = conn.execute(
                "SELECT mode, source, synthesized_at FROM responses WHERE label = ? ORDER BY mode",
                (label,),
            )
            return [(int(mode), source, int(stamp)) for mode, source, stamp in cursor.fetchall()]
