# db/log_handler.py
import logging
import os
import sqlite3
import sys
import threading
import time
from pathlib import Path

# 處理器自身的錯誤只輸出到控制台，避免再次進入資料庫造成無限迴圈
handler_log = logging.getLogger('db_log_handler')
handler_log.propagate = False
if not handler_log.handlers:
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(logging.Formatter('%(asctime)s - [DBLogHandler] - %(levelname)s - %(message)s'))
    handler_log.addHandler(console_handler)

DB_FILE = Path(os.environ.get("PULSE_LABELER_DB", Path(__file__).parent / "runs.db"))

_CREATE_SQL = """
    CREATE TABLE IF NOT EXISTS system_logs (
        id INTEGER PRIMARY KEY AUTOINCREMENT,
        timestamp DATETIME DEFAULT CURRENT_TIMESTAMP,
        source TEXT NOT NULL,
        level TEXT NOT NULL,
        message TEXT
    )
"""
_INSERT_SQL = "INSERT INTO system_logs (source, level, message) VALUES (?, ?, ?)"


class DatabaseLogHandler(logging.Handler):
    """
    把日誌記錄寫入執行紀錄資料庫的 `system_logs` 資料表。
    每個執行緒各自持有一個連線；第一次連線時建立資料表。
    所有執行緒開啟的連線都登記在 `connections`，close() 時一併關閉。
    """

    retries = 5

    def __init__(self, source: str):
        super().__init__()
        self.source = source
        self.local = threading.local()
        self.connections: list[sqlite3.Connection] = []
        self._connections_lock = threading.Lock()

    def get_conn(self):
        conn = getattr(self.local, 'conn', None)
        if conn is None:
            try:
                conn = sqlite3.connect(DB_FILE, timeout=10, isolation_level=None, check_same_thread=False)
                conn.execute("PRAGMA journal_mode=WAL")
                conn.execute(_CREATE_SQL)
                with self._connections_lock:
                    self.connections.append(conn)
            except sqlite3.Error as e:
                handler_log.error(f"無法建立資料庫連線: {e}")
                conn = None
            self.local.conn = conn
        return conn

    def emit(self, record: logging.LogRecord):
        if record.name == handler_log.name:
            return
        conn = self.get_conn()
        if conn is None:
            handler_log.warning(f"沒有資料庫連線，來自 {record.name} 的日誌遺失")
            return

        message = self.format(record)
        # 來源記錄為產生日誌的 logger 名稱，而不是處理器的名稱
        for attempt in range(self.retries):
            try:
                conn.execute(_INSERT_SQL, (record.name, record.levelname, message))
                return
            except sqlite3.OperationalError as e:
                if "database is locked" in str(e) and attempt < self.retries - 1:
                    time.sleep(0.1)
                    continue
                handler_log.error(f"寫入日誌失敗 ({self.source}): {e}")
                return
            except sqlite3.Error as e:
                handler_log.error(f"寫入日誌時發生未預期的錯誤 ({self.source}): {e}")
                return

    def close(self):
        with self._connections_lock:
            for conn in self.connections:
                conn.close()
            self.connections.clear()
        self.local.conn = None
        super().close()
