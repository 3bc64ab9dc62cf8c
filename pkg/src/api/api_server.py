# api_server.py
import logging
import os
from contextlib import asynccontextmanager

from fastapi import FastAPI, File, HTTPException, Query, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from core.errors import (
    LabelingError,
    PulseProgramError,
    RunConfigError,
    SynthesisError,
    TopologyError,
    TruthTableError,
)
from core.permutation import count_optimal_labelings, maximal_sets, min_pulse_count, parse_truth_table
from core.pipeline import RunConfig, RunResult, parse_expectation, parse_swap, run, verify_run
from core.synthesizer import DEFAULT_NODE_LIMIT
from core.topology import TopologyKind
from db import database

# --- 主日誌設定 ---
logging.basicConfig(
    level=os.environ.get("PULSE_LABELER_LOG_LEVEL", "INFO").upper(),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[logging.StreamHandler()]
)
log = logging.getLogger('api_server')

MAX_UPLOAD_BYTES = 1 << 20


def setup_database_logging():
    """設定資料庫日誌處理器。"""
    try:
        from db.log_handler import DatabaseLogHandler
        root_logger = logging.getLogger()
        if not any(isinstance(h, DatabaseLogHandler) for h in root_logger.handlers):
            root_logger.addHandler(DatabaseLogHandler(source='api_server'))
            log.info("資料庫日誌處理器設定完成 (source: api_server)。")
    except Exception as e:
        log.error(f"整合資料庫日誌時發生錯誤: {e}", exc_info=True)


@asynccontextmanager
async def lifespan(app: FastAPI):
    database.use_database(None)
    database.initialize_database()
    setup_database_logging()
    yield


app = FastAPI(title="脈衝標記編譯器 API", version="1.0", lifespan=lifespan)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


# --- 請求模型 ---

class RunRequest(BaseModel):
    operations: list[str] = Field(..., min_length=1, description="由左到右組合的內建運算名稱")
    topology: str = "chain"
    labeling: str = "ols"
    swaps: list[str] = []
    qubits: int | None = None
    depth_cap: int | None = None
    node_limit: int = DEFAULT_NODE_LIMIT
    invert: bool = False
    expect: dict[str, int] = {}


class VerifyRequest(RunRequest):
    program: str
    labeling_table: str | None = None


def _config(command: str, body: RunRequest) -> RunConfig:
    # API 只接受內建運算名稱，不讀取伺服器上的檔案
    for spec in body.operations:
        if "/" in spec or "." in spec:
            raise RunConfigError(f"API 只接受內建運算名稱，收到 {spec!r}")
    return RunConfig(
        command=command,
        inputs=tuple(body.operations),
        topology=TopologyKind.parse(body.topology),
        labeling=body.labeling,
        swaps=tuple(parse_swap(s) for s in body.swaps),
        qubits=body.qubits,
        depth_cap=body.depth_cap,
        node_limit=body.node_limit,
        invert=body.invert,
        expect=tuple(parse_expectation(f"{k}={v}") for k, v in body.expect.items()),
    )


def _execute(command: str, body: RunRequest, runner=None) -> dict:
    """執行指令並把編譯器例外轉成 HTTP 錯誤：格式錯誤 400，標記或合成失敗 422。"""
    try:
        cfg = _config(command, body)
        result: RunResult = runner(cfg) if runner else run(cfg)
    except (TruthTableError, TopologyError, PulseProgramError, RunConfigError) as e:
        log.warning(f"❌ {command} 請求格式錯誤: {e}")
        raise HTTPException(status_code=400, detail=str(e))
    except (LabelingError, SynthesisError) as e:
        log.warning(f"❌ {command} 標記或合成失敗: {e}")
        raise HTTPException(status_code=422, detail=str(e))

    database.record_run(command, cfg.operation_name, cfg.topology.value, cfg.scheme_name,
                        result.exit_code, result.report)
    return {
        "command": result.command,
        "exit_code": result.exit_code,
        "summary": result.summary,
        "artifacts": result.artifacts,
        "report": result.report,
    }


# --- API 端點 ---

@app.get("/api/health")
async def health_check():
    """提供一個簡單的健康檢查端點。"""
    return {"status": "ok", "message": "API Server is running."}


@app.post("/api/compile")
def compile_endpoint(body: RunRequest):
    return _execute("compile", body)


@app.post("/api/compare")
def compare_endpoint(body: RunRequest):
    return _execute("compare", body)


@app.post("/api/spectrum")
def spectrum_endpoint(body: RunRequest):
    return _execute("spectrum", body)


@app.post("/api/verify")
def verify_endpoint(body: VerifyRequest):
    def runner(cfg: RunConfig) -> RunResult:
        return verify_run(cfg.validate(), program_text=body.program, labeling_text=body.labeling_table)
    return _execute("verify", body, runner)


@app.post("/api/truth-table")
async def upload_truth_table(file: UploadFile = File(...)):
    """接收真值表文件，回傳其最大集合、最少脈衝數與最佳標記數。"""
    try:
        raw = await file.read(MAX_UPLOAD_BYTES + 1)
        if len(raw) > MAX_UPLOAD_BYTES:
            raise HTTPException(status_code=413, detail="真值表檔案過大。")
        try:
            p = parse_truth_table(raw.decode("utf-8"))
        except UnicodeDecodeError:
            raise HTTPException(status_code=400, detail="真值表必須是 UTF-8 文字檔。")
        except TruthTableError as e:
            raise HTTPException(status_code=400, detail=str(e))
    finally:
        await file.close()

    d = maximal_sets(p)
    log.info(f"📄 已解析上傳的真值表 {file.filename} ({p.n_qubits} 量子位元)")
    return {
        "filename": file.filename,
        "qubits": p.n_qubits,
        "maximal_sets": [s.format_row(i) for i, s in enumerate(d.sets, start=1)],
        "min_pulse_count": min_pulse_count(d),
        "optimal_labelings": count_optimal_labelings(d),
    }


@app.get("/api/runs")
def list_runs_endpoint(limit: int = Query(50, ge=1, le=500), command: str | None = None):
    return {"runs": database.list_runs(limit=limit, command=command)}


# --- 主程式啟動 ---
if __name__ == "__main__":
    import argparse

    import uvicorn

    parser = argparse.ArgumentParser(description="脈衝標記編譯器 API 伺服器")
    parser.add_argument("--port", type=int, default=8001, help="伺服器監聽的埠號")
    args, _ = parser.parse_known_args()

    log.info("🚀 啟動 API 伺服器...")
    uvicorn.run(app, host="0.0.0.0", port=args.port)
