"""
Run archive.

Stores experiment runs in a SQLite database so repeated runs of a config can
be compared and dimension curves queried later.
"""
import json
import logging
import sqlite3
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional

from .deform import DimensionCurve
from .export import to_jsonable

logger = logging.getLogger(__name__)


@dataclass
class RunRecord:
    """One archived experiment run"""
    run_id: int
    timestamp: str
    config_digest: str
    experiment: str
    summary: Dict
    outputs_digest: str


class RunArchive:
    """Ledger of experiment runs"""

    def __init__(self, db_path: Path):
        """
        Open (and create if needed) the archive.

        Args:
            db_path: Path to SQLite database file
        """
        self.db_path = Path(db_path)
        self._init_database()

    def _connect(self) -> sqlite3.Connection:
        return sqlite3.connect(self.db_path)

    def _init_database(self):
        conn = self._connect()
        cursor = conn.cursor()

        cursor.execute('''
            CREATE TABLE IF NOT EXISTS runs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                timestamp TEXT NOT NULL,
                config_digest TEXT NOT NULL,
                experiment TEXT NOT NULL,
                summary_json TEXT,
                outputs_digest TEXT NOT NULL
            )
        ''')

        cursor.execute('''
            CREATE TABLE IF NOT EXISTS curve_points (
                run_id INTEGER NOT NULL REFERENCES runs(id),
                t REAL NOT NULL,
                dim REAL NOT NULL,
                err REAL NOT NULL
            )
        ''')

        cursor.execute('CREATE INDEX IF NOT EXISTS idx_runs_digest ON runs(config_digest)')
        cursor.execute('CREATE INDEX IF NOT EXISTS idx_curve_points_run ON curve_points(run_id)')

        conn.commit()
        conn.close()

    def record_run(self, config_digest: str, experiment: str, summary: Dict, outputs_digest: str) -> int:
        """Archive a run and return its id"""
        conn = self._connect()
        cursor = conn.cursor()

        try:
            cursor.execute('''
                INSERT INTO runs (timestamp, config_digest, experiment, summary_json, outputs_digest)
                VALUES (?, ?, ?, ?, ?)
            ''', (
                datetime.now().isoformat(),
                config_digest,
                experiment,
                json.dumps(to_jsonable(summary), sort_keys=True),
                outputs_digest,
            ))
            conn.commit()
            run_id = cursor.lastrowid
        finally:
            conn.close()
        logger.info("archived run %d (%s, config %s)", run_id, experiment, config_digest[:12])
        return run_id

    def record_curve(self, run_id: int, curve: DimensionCurve):
        """Store the points of a dimension curve against a run"""
        conn = self._connect()
        cursor = conn.cursor()

        try:
            cursor.executemany(
                'INSERT INTO curve_points (run_id, t, dim, err) VALUES (?, ?, ?, ?)',
                [(run_id, t, dim, err) for t, dim, err in curve.rows()],
            )
            conn.commit()
        finally:
            conn.close()

    def get_runs(self, config_digest: Optional[str] = None) -> List[RunRecord]:
        """Archived runs, oldest first; all runs when no digest is given"""
        conn = self._connect()
        cursor = conn.cursor()

        try:
            query = '''
                SELECT id, timestamp, config_digest, experiment, summary_json, outputs_digest
                FROM runs
            '''
            args = ()
            if config_digest is not None:
                query += ' WHERE config_digest = ?'
                args = (config_digest,)
            cursor.execute(query + ' ORDER BY id ASC', args)
            return [
                RunRecord(
                    run_id=row[0],
                    timestamp=row[1],
                    config_digest=row[2],
                    experiment=row[3],
                    summary=json.loads(row[4]) if row[4] else {},
                    outputs_digest=row[5],
                )
                for row in cursor.fetchall()
            ]
        finally:
            conn.close()

    def get_curve(self, run_id: int) -> List[Dict]:
        conn = self._connect()
        cursor = conn.cursor()

        try:
            cursor.execute('''
                SELECT t, dim, err FROM curve_points
                WHERE run_id = ?
                ORDER BY t ASC
            ''', (run_id,))
            return [{'t': row[0], 'dim': row[1], 'err': row[2]} for row in cursor.fetchall()]
        finally:
            conn.close()

    def is_reproducible(self, config_digest: str) -> bool:
        """
        True iff every archived run of the config produced the same outputs.

        A config with no archived runs is not reproducible.
        """
        conn = self._connect()
        cursor = conn.cursor()

        try:
            cursor.execute('''
                SELECT COUNT(*), COUNT(DISTINCT outputs_digest)
                FROM runs WHERE config_digest = ?
            ''', (config_digest,))
            total, distinct = cursor.fetchone()
        finally:
            conn.close()
        return total > 0 and distinct == 1

    def get_summary_stats(self) -> Dict:
        """Run counts per experiment"""
        conn = self._connect()
        cursor = conn.cursor()

        try:
            cursor.execute('SELECT experiment, COUNT(*) FROM runs GROUP BY experiment ORDER BY experiment')
            per_experiment = {row[0]: row[1] for row in cursor.fetchall()}
            cursor.execute('SELECT COUNT(DISTINCT config_digest) FROM runs')
            configs = cursor.fetchone()[0]
        finally:
            conn.close()
        return {
            'total_runs': sum(per_experiment.values()),
            'distinct_configs': configs,
            'runs_per_experiment': per_experiment,
        }
