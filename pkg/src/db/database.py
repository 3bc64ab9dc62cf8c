# db/database.py
import logging
import os
import sqlite3
import sys
from pathlib import Path

log = logging.getLogger('database')

# --- 資料庫路徑設定 ---
DB_FILE = Path(os.environ.get("PULSE_LABELER_DB", Path(__file__).parent / "runs.db"))


def use_database(path: Path | None):
    """切換執行紀錄資料庫；path 為 None 時保留 PULSE_LABELER_DB 的設定。日誌處理器一併切換。"""
    global DB_FILE
    from db import log_handler

    if path is not None:
        DB_FILE = Path(path)
    log_handler.DB_FILE = DB_FILE


def get_db_connection():
    """建立並回傳一個資料庫連線。"""
    try:
        conn = sqlite3.connect(DB_FILE, timeout=10)
        conn.row_factory = sqlite3.Row
        # 啟用 WAL (Write-Ahead Logging) 模式以提高併發性
        conn.execute("PRAGMA journal_mode=WAL")
        return conn
    except sqlite3.Error as e:
        log.error(f"資料庫連線失敗: {e}")
        return None


def initialize_database():
    """建立 `runs` 與 `system_logs` 資料表 (若尚不存在)。"""
    log.info(f"正在檢查並初始化資料庫於: {DB_FILE}")
    Path(DB_FILE).parent.mkdir(parents=True, exist_ok=True)
    conn = get_db_connection()
    if not conn:
        log.critical("無法建立資料庫連線，初始化失敗。")
        return

    try:
        with conn:
            cursor = conn.cursor()
            cursor.execute("""
                CREATE TABLE IF NOT EXISTS runs (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    command TEXT NOT NULL,
                    operation TEXT NOT NULL,
                    topology TEXT,
                    labeling TEXT,
                    exit_code INTEGER NOT NULL DEFAULT 0,
                    report TEXT,
                    created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
                )
            """)
            cursor.execute("CREATE INDEX IF NOT EXISTS idx_runs_command ON runs (command)")
            cursor.execute("""
                CREATE TABLE IF NOT EXISTS system_logs (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    timestamp DATETIME DEFAULT CURRENT_TIMESTAMP,
                    source TEXT NOT NULL,
                    level TEXT NOT NULL,
                    message TEXT
                )
            """)
            cursor.execute("CREATE INDEX IF NOT EXISTS idx_log_source_level ON system_logs (source, level)")
        log.info("✅ 資料庫初始化完成。`runs`, `system_logs` 資料表已存在。")
    except sqlite3.Error as e:
        log.error(f"初始化資料庫時發生錯誤: {e}")
    finally:
        conn.close()


def record_run(command: str, operation: str, topology: str | None, labeling: str | None,
               exit_code: int, report: str) -> int | None:
    """
    新增一筆執行紀錄。

    :return: 新紀錄的 id，失敗時回傳 None。
    """
    sql = ("INSERT INTO runs (command, operation, topology, labeling, exit_code, report) "
           "VALUES (?, ?, ?, ?, ?, ?)")
    conn = get_db_connection()
    if not conn:
        return None
    try:
        with conn:
            cursor = conn.execute(sql, (command, operation, topology, labeling, exit_code, report))
        log.info(f"✅ 已記錄執行: {command} {operation} (結束代碼 {exit_code})")
        return cursor.lastrowid
    except sqlite3.Error as e:
        log.error(f"❌ 記錄執行 {command} 時發生資料庫錯誤: {e}", exc_info=True)
        return None
    finally:
        conn.close()


def list_runs(limit: int = 50, command: str | None = None) -> list[dict]:
    """依時間由新到舊列出執行紀錄。"""
    sql = "SELECT id, command, operation, topology, labeling, exit_code, report, created_at FROM runs"
    params: list = []
    if command:
        sql += " WHERE command = ?"
        params.append(command)
    sql += " ORDER BY id DESC LIMIT ?"
    params.append(limit)

    conn = get_db_connection()
    if not conn:
        return []
    try:
        return [dict(row) for row in conn.execute(sql, params).fetchall()]
    except sqlite3.Error as e:
        log.error(f"❌ 獲取執行紀錄時發生錯誤: {e}", exc_info=True)
        return []
    finally:
        conn.close()


def add_system_log(source: str, level: str, message: str) -> bool:
    """從沒有掛上日誌處理器的腳本直接寫入系統日誌。"""
    sql = "INSERT INTO system_logs (source, level, message) VALUES (?, ?, ?)"
    conn = get_db_connection()
    if not conn:
        return False
    try:
        with conn:
            conn.execute(sql, (source, level.upper(), message))
        return True
    except sqlite3.Error as e:
        # 這裡不能再寫日誌，否則可能再次觸發資料庫日誌處理器
        print(f"CRITICAL: Failed to write system log to DB from source {source}. Error: {e}", file=sys.stderr)
        return False
    finally:
        conn.close()


def get_system_logs_by_filter(levels: list[str] = None, sources: list[str] = None) -> list[dict]:
    """根據等級和來源篩選系統日誌。"""
    conn = get_db_connection()
    if not conn:
        return []

    try:
        sql = "SELECT timestamp, source, level, message FROM system_logs"
        conditions = []
        params = []
        if levels:
            conditions.append(f"level IN ({','.join(['?'] * len(levels))})")
            params.extend(level.upper() for level in levels)
        if sources:
            conditions.append(f"source IN ({','.join(['?'] * len(sources))})")
            params.extend(sources)
        if conditions:
            sql += " WHERE " + " AND ".join(conditions)
        sql += " ORDER BY id ASC"
        return [dict(row) for row in conn.execute(sql, params).fetchall()]
    except sqlite3.Error as e:
        log.error(f"❌ 獲取系統日誌時發生錯誤: {e}", exc_info=True)
        return []
    finally:
        conn.close()


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    initialize_database()
