# tests/test_logging_fast.py
import logging
import sqlite3
import threading
import time

import pytest

# 由於我們要測試的目標是日誌處理器本身，我們需要匯入它
from db.log_handler import DatabaseLogHandler


@pytest.fixture
def in_memory_db_handler(mocker):
    """
    一個提供在記憶體中運行的 DatabaseLogHandler 的 fixture。
    patch DB_FILE 之後，處理器第一次連線時會在記憶體資料庫中建立 system_logs 資料表。
    """
    mocker.patch('db.log_handler.DB_FILE', ":memory:")
    handler = DatabaseLogHandler(source='test_source')

    yield handler

    # --- Teardown ---
    handler.close()


@pytest.fixture
def test_logger(in_memory_db_handler):
    logger = logging.getLogger('my_test_logger')
    logger.setLevel(logging.INFO)
    # 清除可能由其他測試留下的 handlers
    logger.handlers = [in_memory_db_handler]
    # 避免日誌被傳遞到 root logger，干擾測試結果
    logger.propagate = False
    yield logger
    logger.handlers = []


def _fetch(handler: DatabaseLogHandler, message: str):
    cursor = handler.get_conn().execute(
        "SELECT source, level, message FROM system_logs WHERE message LIKE ?", (f"%{message}%",))
    return cursor.fetchall()


def test_database_log_handler_writes_log_to_in_memory_db(in_memory_db_handler, test_logger):
    # --- 1. 準備 ---
    test_message = f"log_message_{int(time.time())}"

    # --- 2. 執行 ---
    test_logger.info(test_message)

    # --- 3. 驗證 ---
    logs = _fetch(in_memory_db_handler, test_message)
    assert len(logs) == 1, "應在資料庫中找到且僅找到一條匹配的日誌記錄"
    log_source, log_level, log_message = logs[0]
    # 來源是產生日誌的 logger 名稱
    assert log_source == 'my_test_logger'
    assert log_level == 'INFO'
    assert test_message in log_message


def test_handler_respects_logger_level(in_memory_db_handler, test_logger):
    test_logger.debug("debug_message_hidden")
    test_logger.warning("⚠️ 脈衝數與預期不符")
    assert _fetch(in_memory_db_handler, "debug_message_hidden") == []
    assert _fetch(in_memory_db_handler, "脈衝數與預期不符")[0][1] == 'WARNING'


def test_handler_skips_its_own_logger(in_memory_db_handler):
    record = logging.LogRecord('db_log_handler', logging.ERROR, __file__, 1, "loop_message", None, None)
    in_memory_db_handler.emit(record)
    assert _fetch(in_memory_db_handler, "loop_message") == []


def test_handler_survives_missing_connection(mocker, test_logger):
    handler = DatabaseLogHandler(source='broken')
    mocker.patch.object(handler, 'get_conn', return_value=None)
    test_logger.handlers = [handler]
    # 沒有連線時只會在控制台警告，不會拋出例外
    test_logger.error("lost_message")


def test_close_releases_connections_from_every_thread(in_memory_db_handler):
    # 準備：在另一個執行緒 (例如 API 的工作執行緒) 開啟連線
    opened = []
    worker = threading.Thread(target=lambda: opened.append(in_memory_db_handler.get_conn()))
    worker.start()
    worker.join()
    main_conn = in_memory_db_handler.get_conn()
    assert len(in_memory_db_handler.connections) == 2

    # 執行
    in_memory_db_handler.close()

    # 斷言：兩個連線都已關閉
    assert in_memory_db_handler.connections == []
    for conn in (opened[0], main_conn):
        with pytest.raises(sqlite3.ProgrammingError):
            conn.execute("SELECT 1")
