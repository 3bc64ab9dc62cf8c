# tests/test_api_server.py
import threading
import time

import pytest
import requests
import uvicorn

from api.api_server import app
from db import database, log_handler

# --- 測試設定 ---
TEST_HOST = "127.0.0.1"
TEST_PORT = 8010  # 使用非標準埠號，避免與開發中的伺服器衝突
BASE_URL = f"http://{TEST_HOST}:{TEST_PORT}"


# --- Fixtures ---

@pytest.fixture(scope="session")
def server(tmp_path_factory):
    """在背景執行緒中啟動 FastAPI 伺服器，執行紀錄寫入暫存資料庫。"""
    original = database.DB_FILE, log_handler.DB_FILE
    database.DB_FILE = tmp_path_factory.mktemp("api") / "runs.db"

    config = uvicorn.Config(app, host=TEST_HOST, port=TEST_PORT, log_level="info")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run)
    thread.daemon = True
    thread.start()

    # 等待伺服器就緒
    for _ in range(50):
        if server.started:
            break
        time.sleep(0.1)

    yield

    server.should_exit = True
    thread.join(timeout=5)
    database.DB_FILE, log_handler.DB_FILE = original


def _post(path: str, payload: dict) -> requests.Response:
    return requests.post(f"{BASE_URL}{path}", json=payload, timeout=60)


# --- 測試案例 ---

def test_health_check(server):
    response = requests.get(f"{BASE_URL}/api/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok", "message": "API Server is running."}


def test_compile_full_adder(server):
    # --- 1. 準備 ---
    payload = {"operations": ["fulladder4"], "topology": "chain", "labeling": "ols"}

    # --- 2. 執行 ---
    response = _post("/api/compile", payload)

    # --- 3. 斷言 ---
    assert response.status_code == 200, response.text
    body = response.json()
    assert body["exit_code"] == 0
    assert body["summary"]["pulses"] == 8
    assert body["summary"]["rounds"] == 3
    assert body["summary"]["verdict"] == "PASS"
    assert body["artifacts"]["program.pulses"].startswith("0  pi_y  2  3")
    assert "lower_bound: 8" in body["report"].splitlines()


def test_compile_rejects_bad_requests(server):
    assert _post("/api/compile", {"operations": ["fulladder4"], "labeling": "gray",
                                  "topology": "hypercube"}).status_code == 400
    assert _post("/api/compile", {"operations": ["../fulladder.tt"]}).status_code == 400
    assert _post("/api/compile", {"operations": ["fulladder4"], "swaps": ["01:1"]}).status_code == 400
    # 空的運算清單由請求模型擋下
    assert _post("/api/compile", {"operations": []}).status_code == 422


def test_compile_depth_cap_is_unprocessable(server):
    response = _post("/api/compile", {"operations": ["fulladder4"], "labeling": "cl", "depth_cap": 5})
    assert response.status_code == 422
    assert "5" in response.json()["detail"]


def test_compare_with_expectations(server):
    response = _post("/api/compare", {"operations": ["fulladder4", "swap:2,4"],
                                      "expect": {"gray": 26, "ols": 12}})
    assert response.status_code == 200
    body = response.json()
    assert body["exit_code"] == 4
    assert body["summary"]["counts"] == {"cl": 24, "gray": 28, "ols": 12}
    assert body["summary"]["discrepancies"] == ["gray expected 26 routed 28"]


def test_verify_compiled_program(server):
    # --- 1. 準備 ---
    compiled = _post("/api/compile", {"operations": ["fulladder4"]}).json()
    program = compiled["artifacts"]["program.pulses"]
    table = compiled["artifacts"]["labeling.txt"]

    # --- 2. 執行 ---
    passed = _post("/api/verify", {"operations": ["fulladder4"], "program": program, "labeling_table": table})
    broken = _post("/api/verify", {"operations": ["fulladder4"], "labeling_table": table,
                                   "program": "\n".join(program.splitlines()[:-1])})

    # --- 3. 斷言 ---
    assert passed.status_code == 200
    assert passed.json()["summary"]["verdict"] == "PASS"
    assert broken.json()["summary"]["verdict"] == "FAIL"
    assert broken.json()["exit_code"] == 4


def test_verify_malformed_program(server):
    response = _post("/api/verify", {"operations": ["fulladder4"], "program": "0 pi_x 0 1"})
    assert response.status_code == 400


def test_spectrum_two_round_labeling(server):
    response = _post("/api/spectrum", {"operations": ["fulladder4"], "topology": "hypercube", "labeling": "cl",
                                       "swaps": ["0100:0111", "1000:1011"]})
    assert response.status_code == 200
    summary = response.json()["summary"]
    assert set(summary["equilibrium"]) == {1}
    assert summary["final"][summary["labels"].index("4:αββ")] == -2


def test_truth_table_upload(server, fixtures_dir):
    content = (fixtures_dir / "fulladder.tt").read_bytes()
    response = requests.post(f"{BASE_URL}/api/truth-table",
                             files={"file": ("fulladder.tt", content, "text/plain")}, timeout=30)
    assert response.status_code == 200
    body = response.json()
    assert body["filename"] == "fulladder.tt"
    assert body["qubits"] == 4
    assert body["min_pulse_count"] == 8
    assert body["optimal_labelings"] == 645120
    assert body["maximal_sets"][4].endswith("S5={|0100>,|0110>,|0101>,|0111>}")


def test_truth_table_upload_rejects_non_reversible(server, fixtures_dir):
    content = (fixtures_dir / "not_reversible.tt").read_bytes()
    response = requests.post(f"{BASE_URL}/api/truth-table",
                             files={"file": ("bad.tt", content, "text/plain")}, timeout=30)
    assert response.status_code == 400
    assert "第 4 行" in response.json()["detail"]


def test_runs_are_listed(server):
    _post("/api/compile", {"operations": ["identity:2"]})
    response = requests.get(f"{BASE_URL}/api/runs", params={"command": "compile", "limit": 5})
    assert response.status_code == 200
    runs = response.json()["runs"]
    assert 1 <= len(runs) <= 5
    assert runs[0]["operation"] == "identity:2"
    assert all(r["command"] == "compile" for r in runs)
