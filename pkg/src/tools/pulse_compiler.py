# tools/pulse_compiler.py
"""
可逆真值表 -> 躍遷選擇性 π 脈衝序列的命令列工具。

範例:
    pulse-labeler compile fulladder4 --topology chain --labeling ols
    pulse-labeler compare fulladder4 swap:2,4 --expect gray=26
    pulse-labeler verify fulladder.tt --program out/program.pulses --labeling-table out/labeling.txt
"""
import argparse
import logging
import os
import sys
from pathlib import Path

from core.errors import (
    LabelingError,
    PulseProgramError,
    RunConfigError,
    SynthesisError,
    TopologyError,
    TruthTableError,
)
from core.pipeline import (
    COMMANDS,
    EXIT_FORMAT,
    EXIT_SYNTHESIS,
    LABELINGS,
    RunConfig,
    parse_expectation,
    parse_swap,
    run,
)
from core.synthesizer import DEFAULT_NODE_LIMIT
from core.topology import TopologyKind

log = logging.getLogger('pulse_compiler')


def _configure_logging():
    level = os.environ.get("PULSE_LABELER_LOG_LEVEL", "INFO").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[logging.StreamHandler()]  # stderr，stdout 只留給報告
    )


def _attach_database(path: Path | None):
    """啟用執行紀錄資料庫，並把日誌一併寫入。"""
    from db import database
    from db.log_handler import DatabaseLogHandler

    database.use_database(path)
    database.initialize_database()
    root_logger = logging.getLogger()
    if not any(isinstance(h, DatabaseLogHandler) for h in root_logger.handlers):
        root_logger.addHandler(DatabaseLogHandler(source='pulse_compiler'))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pulse-labeler",
        description="把可逆真值表編譯成最少的躍遷選擇性 π 脈衝序列，並驗證結果。")
    parser.add_argument("command", choices=COMMANDS, help="要執行的操作。")
    parser.add_argument("inputs", nargs="*",
                        help="由左到右組合的運算：真值表檔案，或 fulladder4、swap:i,j、identity:N。")
    parser.add_argument("--topology", type=str, default="chain",
                        help="chain (四極核鏈) 或 hypercube (自旋 1/2 超立方體)。")
    parser.add_argument("--labeling", type=str, default="ols", choices=LABELINGS, help="標記方案。")
    parser.add_argument("--swap", action="append", default=[], metavar="A:B",
                        help="在標記方案上再交換兩個標記，例如 0100:0111，可重複指定。")
    parser.add_argument("--qubits", type=int, default=None, help="量子位元數 (無法由運算推斷時使用)。")
    parser.add_argument("--output", type=str, default=None, help="[compile] 寫入脈衝程式、標記表與報告的目錄。")
    parser.add_argument("--program", type=str, default=None, help="[verify] 脈衝程式檔案。")
    parser.add_argument("--labeling-table", type=str, default=None, help="使用既有的標記表檔案。")
    parser.add_argument("--depth-cap", type=int, default=None, help="固定標記路由的最大脈衝數。")
    parser.add_argument("--node-limit", type=int, default=DEFAULT_NODE_LIMIT, help="路由搜尋的節點上限。")
    parser.add_argument("--limit", type=int, default=10, help="[enumerate] 最多列出的標記數。")
    parser.add_argument("--all", action="store_true", dest="enumerate_all",
                        help="[enumerate] 完整列舉並輸出總數。")
    parser.add_argument("--count", type=int, default=None, help="[selfcheck] 隨機真值表的數目 (預設 500)。")
    parser.add_argument("--seed", type=int, default=0, help="[selfcheck] 隨機種子。")
    parser.add_argument("--expect", action="append", default=[], metavar="SCHEME=COUNT",
                        help="[compare] 預期的脈衝數，不符時以結束代碼 4 結束，可重複指定。")
    parser.add_argument("--db", nargs="?", const="", default=None, metavar="PATH",
                        help="把這次執行記錄到資料庫 (省略路徑時使用 PULSE_LABELER_DB)。")
    parser.add_argument("--ascii", action="store_true", help="[spectrum] 額外輸出 ASCII 棒狀圖。")
    parser.add_argument("--invert", action="store_true", help="改為編譯運算的反運算。")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        command=args.command,
        inputs=tuple(args.inputs),
        topology=TopologyKind.parse(args.topology),
        labeling=args.labeling,
        swaps=tuple(parse_swap(s) for s in args.swap),
        qubits=args.qubits,
        output=Path(args.output) if args.output else None,
        program=Path(args.program) if args.program else None,
        labeling_table=Path(args.labeling_table) if args.labeling_table else None,
        depth_cap=args.depth_cap,
        node_limit=args.node_limit,
        limit=args.limit,
        enumerate_all=args.enumerate_all,
        count=args.count,
        seed=args.seed,
        expect=tuple(parse_expectation(e) for e in args.expect),
        db_path=Path(args.db) if args.db else None,
        ascii=args.ascii,
        invert=args.invert,
    ).validate()


def main(argv: list[str] | None = None) -> int:
    """
    主函數。結束代碼：0 成功，2 格式或設定錯誤，3 標記或合成失敗，
    4 驗證失敗、自我檢查失敗或脈衝數與 --expect 不符，1 其他錯誤。
    """
    _configure_logging()
    args = build_parser().parse_args(argv)

    try:
        cfg = config_from_args(args)
        if args.db is not None:
            _attach_database(cfg.db_path)
        log.info(f"🚀 工具啟動 ({cfg.command})")
        result = run(cfg)
    except (TruthTableError, TopologyError, PulseProgramError, RunConfigError, FileNotFoundError) as e:
        log.error(f"❌ 輸入錯誤: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FORMAT
    except (LabelingError, SynthesisError) as e:
        log.error(f"❌ 標記或合成失敗: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SYNTHESIS
    except Exception as e:
        log.critical(f"❌ 在執行過程中發生致命錯誤: {e}", exc_info=True)
        return 1

    sys.stdout.write(result.report)
    if args.db is not None:
        from db import database
        database.record_run(cfg.command, cfg.operation_name, cfg.topology.value,
                            cfg.scheme_name, result.exit_code, result.report)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
