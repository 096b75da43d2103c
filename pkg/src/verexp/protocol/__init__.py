from .board import BoardEntry, BoardServer, FileBoard, MemoryBoard, TcpBoard, open_board
from .parties import (
    Opening,
    ProviderRecord,
    ProveResult,
    Verdict,
    order_openings,
    post_result,
    provider_commit,
    verexp_prove,
    verexp_verify,
)
from .pipeline import TAMPER_CLASSES, PipelineResult, run_pipeline

__all__ = [
    "BoardEntry",
    "BoardServer",
    "FileBoard",
    "MemoryBoard",
    "Opening",
    "PipelineResult",
    "ProveResult",
    "ProviderRecord",
    "TAMPER_CLASSES",
    "TcpBoard",
    "Verdict",
    "open_board",
    "order_openings",
    "post_result",
    "provider_commit",
    "run_pipeline",
    "verexp_prove",
    "verexp_verify",
]
