# core/errors.py
"""
編譯器各階段共用的例外類別。

命令列工具依照例外的種類決定結束代碼：
格式或設定錯誤 -> 2，標記或合成失敗 -> 3。
"""


class PulseLabelerError(Exception):
    """所有編譯器錯誤的基底類別。"""


class TruthTableError(PulseLabelerError, ValueError):
    """真值表文件格式錯誤，或不是可逆 (雙射) 的運算。"""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"第 {line_no} 行: {message}"
        super().__init__(message)


class QubitCountMismatch(TruthTableError):
    """組合的運算之間量子位元數不一致。"""


class UnknownOperationError(TruthTableError):
    """無法辨識的內建運算名稱。"""


class TopologyError(PulseLabelerError, ValueError):
    """拓樸參數超出範圍，或標記不是合法的雙射。"""


class LabelingError(PulseLabelerError):
    """無法產生符合要求的標記方案。"""


class UnrepairableChainError(LabelingError):
    """成對交換標記後，某條鏈仍無法嵌入為拓樸上的路徑。"""

    def __init__(self, chain, message: str):
        self.chain = chain
        super().__init__(message)


class SynthesisError(PulseLabelerError, RuntimeError):
    """脈衝序列合成失敗。"""


class RoutingDepthExceeded(SynthesisError):
    """在設定的深度上限內找不到實現置換的脈衝序列。"""

    def __init__(self, sets, depth_cap: int, best_known: int):
        self.sets = tuple(sets)
        self.depth_cap = depth_cap
        self.best_known = best_known
        names = ", ".join(s.format_set() for s in self.sets)
        super().__init__(
            f"深度上限 {depth_cap} 內無解 (已知最佳深度 {best_known})，涉及的最大集合: {names}"
        )


class PulseProgramError(PulseLabelerError, ValueError):
    """脈衝程式或標記表文件格式錯誤。"""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"第 {line_no} 行: {message}"
        super().__init__(message)


class RunConfigError(PulseLabelerError, ValueError):
    """執行設定的參數組合不合法。"""
